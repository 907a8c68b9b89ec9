//! Simulation geometries: folded chains with rungs and the two-chain
//! scattering setup, with every bond assigned to one of three layers.
//!
//! Each layer must be a matching (no two bonds of a layer share a site), so
//! that a layer's two-site propagators commute and can be applied as one
//! brick of the Floquet step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(pub usize);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    R,
    G,
    B,
}

impl Layer {
    /// Application order within one Floquet step and one scrambling cycle.
    pub const ORDER: [Layer; 3] = [Layer::R, Layer::G, Layer::B];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Layer::R => "R",
            Layer::G => "G",
            Layer::B => "B",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondKind {
    Chain,
    Rung,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: SiteId,
    pub b: SiteId,
    pub layer: Layer,
    pub kind: BondKind,
}

impl Bond {
    pub fn touches(&self, s: SiteId) -> bool {
        self.a == s || self.b == s
    }

    fn key(&self) -> (usize, usize) {
        let (x, y) = (self.a.0, self.b.0);
        (x.min(y), x.max(y))
    }
}

impl fmt::Display for Bond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// Where a site sits relative to the rung in the scattering geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    BeforeRung,
    AfterRungSameChain,
    OtherChain,
    RungSite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RungStyle {
    /// One rung bond joining the two attachment sites.
    DirectBond,
    /// Two rung bonds through one added site.
    MidSite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    TooFewSites(usize),
    SiteOutOfRange { bond: (usize, usize), site: usize },
    SelfLoop { site: usize },
    DuplicateBond { a: usize, b: usize },
    LayerNotMatching { layer: Layer, site: usize },
    ChainNotPath { reason: String },
    ProbeOutOfRange { probe: usize, n: usize },
    PartitionLength { len: usize, n: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewSites(n) => write!(f, "lattice needs at least 2 sites, got {n}"),
            Violation::SiteOutOfRange { bond, site } => {
                write!(f, "bond ({},{}) references site {site} out of range", bond.0, bond.1)
            }
            Violation::SelfLoop { site } => write!(f, "bond joins site {site} to itself"),
            Violation::DuplicateBond { a, b } => write!(f, "bond ({a},{b}) appears more than once"),
            Violation::LayerNotMatching { layer, site } => {
                write!(f, "layer {layer} not a matching at site {site}")
            }
            Violation::ChainNotPath { reason } => write!(f, "chain bonds not a path: {reason}"),
            Violation::ProbeOutOfRange { probe, n } => {
                write!(f, "probe site {probe} out of range for {n} sites")
            }
            Violation::PartitionLength { len, n } => {
                write!(f, "site partition has {len} entries for {n} sites")
            }
        }
    }
}

/// A lattice: sites `0..n`, layered bonds and the probe site.
///
/// `chains` is the number of vertex-disjoint chain segments the chain bonds
/// must form (one for folded chains, two for the scattering setup).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    sites: usize,
    #[serde(default = "one")]
    chains: usize,
    bonds: Vec<Bond>,
    probe: SiteId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<Vec<Region>>,
}

fn one() -> usize {
    1
}

impl LatticeSpec {
    /// Assemble a spec without checking it; see [`LatticeSpec::validate`].
    pub fn from_parts(
        sites: usize,
        chains: usize,
        bonds: Vec<Bond>,
        probe: SiteId,
        partition: Option<Vec<Region>>,
    ) -> Self {
        LatticeSpec {
            sites,
            chains,
            bonds,
            probe,
            partition,
        }
    }

    pub fn n(&self) -> usize {
        self.sites
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn probe(&self) -> SiteId {
        self.probe
    }

    pub fn partition(&self) -> Option<&[Region]> {
        self.partition.as_deref()
    }

    pub fn layer_bonds(&self, layer: Layer) -> impl Iterator<Item = &Bond> + '_ {
        self.bonds.iter().filter(move |b| b.layer == layer)
    }

    /// Bonds in application order: layer R, then G, then B; input order
    /// within a layer.
    pub fn ordered_bonds(&self) -> Vec<Bond> {
        Layer::ORDER
            .iter()
            .flat_map(|&l| self.layer_bonds(l).copied())
            .collect()
    }

    pub fn rung_bonds(&self) -> impl Iterator<Item = &Bond> + '_ {
        self.bonds.iter().filter(|b| b.kind == BondKind::Rung)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate.
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: LatticeSpec = serde_json::from_str(s)?;
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Lattice(v))
        }
    }

    /// Every invariant violation found; empty iff the spec is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.sites;
        let mut out = Vec::new();
        if n < 2 {
            out.push(Violation::TooFewSites(n));
        }
        if self.probe.0 >= n {
            out.push(Violation::ProbeOutOfRange {
                probe: self.probe.0,
                n,
            });
        }
        if let Some(p) = &self.partition {
            if p.len() != n {
                out.push(Violation::PartitionLength { len: p.len(), n });
            }
        }

        let mut seen = BTreeSet::new();
        let mut reported_dup = BTreeSet::new();
        for b in &self.bonds {
            for s in [b.a.0, b.b.0] {
                if s >= n {
                    out.push(Violation::SiteOutOfRange {
                        bond: (b.a.0, b.b.0),
                        site: s,
                    });
                }
            }
            if b.a == b.b {
                out.push(Violation::SelfLoop { site: b.a.0 });
            }
            if !seen.insert(b.key()) && reported_dup.insert(b.key()) {
                out.push(Violation::DuplicateBond {
                    a: b.key().0,
                    b: b.key().1,
                });
            }
        }

        for layer in Layer::ORDER {
            let mut count: BTreeMap<usize, usize> = BTreeMap::new();
            for b in self.layer_bonds(layer) {
                *count.entry(b.a.0).or_default() += 1;
                if b.b != b.a {
                    *count.entry(b.b.0).or_default() += 1;
                }
            }
            for (site, c) in count {
                if c > 1 {
                    out.push(Violation::LayerNotMatching { layer, site });
                }
            }
        }

        if let Some(reason) = self.chain_path_problem() {
            out.push(Violation::ChainNotPath { reason });
        }
        out
    }

    fn chain_path_problem(&self) -> Option<String> {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut edges = 0usize;
        for b in self.bonds.iter().filter(|b| b.kind == BondKind::Chain) {
            if b.a == b.b {
                continue;
            }
            adj.entry(b.a.0).or_default().push(b.b.0);
            adj.entry(b.b.0).or_default().push(b.a.0);
            edges += 1;
        }
        if adj.is_empty() {
            return Some("no chain bonds".into());
        }
        if let Some((s, nb)) = adj.iter().find(|(_, nb)| nb.len() > 2) {
            return Some(format!("site {s} has {} chain neighbours", nb.len()));
        }
        let mut visited = BTreeSet::new();
        let mut components = 0usize;
        for &start in adj.keys() {
            if visited.contains(&start) {
                continue;
            }
            components += 1;
            let mut queue = VecDeque::from([start]);
            visited.insert(start);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[&u] {
                    if visited.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        // a forest with max degree 2 is a union of paths; edges = V - components
        if edges + components != adj.len() {
            return Some("chain bonds contain a cycle".into());
        }
        if components != self.chains {
            return Some(format!(
                "expected {} chain segment(s), found {components}",
                self.chains
            ));
        }
        None
    }
}

/// Folded chain of `chain_len` sites with optional rungs between chain
/// sites. Chain bond `(i, i+1)` goes to layer R for even `i` and G for odd
/// `i`; rung bonds go to B. When that default clashes, a search finds some
/// other three-layer assignment, keeping the defaults where it can.
pub fn build_folded_chain(
    chain_len: usize,
    rung_attachments: &[(SiteId, SiteId)],
    rung_style: RungStyle,
    probe: SiteId,
) -> Result<LatticeSpec> {
    if chain_len < 4 {
        return Err(Error::invalid(format!(
            "chain length must be at least 4, got {chain_len}"
        )));
    }
    if probe.0 >= chain_len {
        return Err(Error::invalid(format!(
            "probe {probe} is not a chain site (chain length {chain_len})"
        )));
    }
    let mut used = BTreeSet::new();
    for &(a, b) in rung_attachments {
        for s in [a, b] {
            if s.0 >= chain_len {
                return Err(Error::invalid(format!(
                    "rung attachment {s} out of range for chain length {chain_len}"
                )));
            }
            if !used.insert(s.0) {
                return Err(Error::invalid(format!(
                    "rung attachment site {s} used more than once"
                )));
            }
        }
        if a.0.abs_diff(b.0) < 2 {
            return Err(Error::invalid(format!(
                "rung ({a},{b}) joins sites adjacent on the chain"
            )));
        }
    }

    let mut edges: Vec<(usize, usize, BondKind, Layer)> = Vec::new();
    for i in 0..chain_len - 1 {
        edges.push((i, i + 1, BondKind::Chain, chain_layer(i)));
    }
    let mut n = chain_len;
    for &(a, b) in rung_attachments {
        match rung_style {
            RungStyle::DirectBond => edges.push((a.0, b.0, BondKind::Rung, Layer::B)),
            RungStyle::MidSite => {
                let m = n;
                n += 1;
                edges.push((a.0, m, BondKind::Rung, Layer::B));
                edges.push((m, b.0, BondKind::Rung, Layer::B));
            }
        }
    }
    let bonds = assign_layers(n, &edges)?;
    let spec = LatticeSpec::from_parts(n, 1, bonds, probe, None);
    spec.check()?;
    Ok(spec)
}

/// Two chains of `chain_len` sites joined through one rung site.
///
/// Chain 1 holds sites `0..chain_len` with the probe at site 0, chain 2
/// holds `chain_len..2*chain_len` and the rung site is `2*chain_len`.
/// `attach_1` and `attach_2` are global site ids on chain 1 and chain 2.
pub fn build_scattering_geometry(
    chain_len: usize,
    attach_1: SiteId,
    attach_2: SiteId,
) -> Result<LatticeSpec> {
    if chain_len < 2 {
        return Err(Error::invalid(format!(
            "chain length must be at least 2, got {chain_len}"
        )));
    }
    if attach_1.0 >= chain_len {
        return Err(Error::invalid(format!(
            "attach_1 = {attach_1} is not on chain 1 (sites 0..{chain_len})"
        )));
    }
    if attach_2.0 < chain_len || attach_2.0 >= 2 * chain_len {
        return Err(Error::invalid(format!(
            "attach_2 = {attach_2} is not on chain 2 (sites {chain_len}..{})",
            2 * chain_len
        )));
    }
    let n = 2 * chain_len + 1;
    let rung = 2 * chain_len;
    let mut edges = Vec::new();
    for offset in [0, chain_len] {
        for i in 0..chain_len - 1 {
            edges.push((offset + i, offset + i + 1, BondKind::Chain, chain_layer(i)));
        }
    }
    edges.push((attach_1.0, rung, BondKind::Rung, Layer::B));
    edges.push((rung, attach_2.0, BondKind::Rung, Layer::B));
    let bonds = assign_layers(n, &edges)?;

    let partition = (0..n)
        .map(|s| {
            if s == rung {
                Region::RungSite
            } else if s >= chain_len {
                Region::OtherChain
            } else if s <= attach_1.0 {
                Region::BeforeRung
            } else {
                Region::AfterRungSameChain
            }
        })
        .collect();
    let spec = LatticeSpec::from_parts(n, 2, bonds, SiteId(0), Some(partition));
    spec.check()?;
    Ok(spec)
}

fn chain_layer(i: usize) -> Layer {
    if i % 2 == 0 {
        Layer::R
    } else {
        Layer::G
    }
}

const SEARCH_BUDGET: usize = 1_000_000;

/// Use the preferred layers if they already form matchings; otherwise
/// search for a proper three-edge-colouring, trying preferred layers first.
fn assign_layers(n: usize, edges: &[(usize, usize, BondKind, Layer)]) -> Result<Vec<Bond>> {
    let preferred: Vec<Layer> = edges.iter().map(|e| e.3).collect();
    let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.0, e.1)).collect();
    let layers = if is_proper(n, &pairs, &preferred) {
        preferred
    } else {
        colour_edges(n, &pairs, &preferred).ok_or(Error::NoMatchingAssignment)?
    };
    Ok(edges
        .iter()
        .zip(layers)
        .map(|(e, layer)| Bond {
            a: SiteId(e.0),
            b: SiteId(e.1),
            layer,
            kind: e.2,
        })
        .collect())
}

fn is_proper(n: usize, pairs: &[(usize, usize)], layers: &[Layer]) -> bool {
    let mut used = vec![[false; 3]; n];
    for (&(a, b), l) in pairs.iter().zip(layers) {
        let k = l.index();
        if used[a][k] || used[b][k] {
            return false;
        }
        used[a][k] = true;
        used[b][k] = true;
    }
    true
}

/// Backtracking edge colouring with most-constrained-edge selection.
fn colour_edges(n: usize, pairs: &[(usize, usize)], preferred: &[Layer]) -> Option<Vec<Layer>> {
    let mut degree = vec![0usize; n];
    for &(a, b) in pairs {
        degree[a] += 1;
        degree[b] += 1;
    }
    if degree.iter().any(|&d| d > 3) {
        return None;
    }

    struct Search<'a> {
        pairs: &'a [(usize, usize)],
        preferred: &'a [Layer],
        used: Vec<[bool; 3]>,
        colour: Vec<Option<Layer>>,
        nodes: usize,
    }

    impl Search<'_> {
        fn free(&self, e: usize) -> [bool; 3] {
            let (a, b) = self.pairs[e];
            let mut f = [true; 3];
            for (k, slot) in f.iter_mut().enumerate() {
                *slot = !self.used[a][k] && !self.used[b][k];
            }
            f
        }

        fn run(&mut self) -> bool {
            self.nodes += 1;
            if self.nodes > SEARCH_BUDGET {
                return false;
            }
            let mut pick: Option<(usize, usize)> = None;
            for e in 0..self.pairs.len() {
                if self.colour[e].is_some() {
                    continue;
                }
                let options = self.free(e).iter().filter(|&&x| x).count();
                if options == 0 {
                    return false;
                }
                if pick.map_or(true, |(_, best)| options < best) {
                    pick = Some((e, options));
                }
            }
            let Some((e, _)) = pick else {
                return true;
            };
            let free = self.free(e);
            let first = self.preferred[e];
            let order = std::iter::once(first).chain(Layer::ORDER.into_iter().filter(|&l| l != first));
            let (a, b) = self.pairs[e];
            for layer in order {
                let k = layer.index();
                if !free[k] {
                    continue;
                }
                self.used[a][k] = true;
                self.used[b][k] = true;
                self.colour[e] = Some(layer);
                if self.run() {
                    return true;
                }
                self.used[a][k] = false;
                self.used[b][k] = false;
                self.colour[e] = None;
            }
            false
        }
    }

    let mut s = Search {
        pairs,
        preferred,
        used: vec![[false; 3]; n],
        colour: vec![None; pairs.len()],
        nodes: 0,
    };
    if s.run() {
        Some(s.colour.into_iter().map(|c| c.unwrap()).collect())
    } else {
        None
    }
}
