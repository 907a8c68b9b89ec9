//! Couplings, two-site generators and the compiled Floquet program.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::engine::GateMatrix;
use crate::error::{Error, Result};
use crate::lattice::{Bond, BondKind, Layer, LatticeSpec};
use crate::linalg::{self, kron_pair, Mat4, PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn pauli(self) -> linalg::Mat2 {
        match self {
            Axis::X => PAULI_X,
            Axis::Y => PAULI_Y,
            Axis::Z => PAULI_Z,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::invalid(format!("unknown axis '{s}'"))),
        }
    }
}

/// Weights of the XX, YY and ZZ terms in a two-site interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct InteractionVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for InteractionVector {
    fn from(v: [f64; 3]) -> Self {
        InteractionVector::new(v[0], v[1], v[2])
    }
}

impl From<InteractionVector> for [f64; 3] {
    fn from(v: InteractionVector) -> Self {
        [v.x, v.y, v.z]
    }
}

impl InteractionVector {
    pub const ZERO: InteractionVector = InteractionVector::new(0.0, 0.0, 0.0);
    pub const ISOTROPIC: InteractionVector = InteractionVector::new(1.0, 1.0, 1.0);

    /// The five rung types studied in the resilience comparison.
    pub const STUDIED: [InteractionVector; 5] = [
        InteractionVector::new(0.0, 0.0, 1.0),
        InteractionVector::new(1.0, 0.0, 0.0),
        InteractionVector::new(1.0, 1.0, 0.0),
        InteractionVector::new(1.0, 0.0, 1.0),
        InteractionVector::new(1.0, 1.0, 1.0),
    ];

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        InteractionVector { x, y, z }
    }

    pub fn component(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn is_binary(&self) -> bool {
        self.as_array().iter().all(|&c| c == 0.0 || c == 1.0)
    }

    /// Compact label such as `(1,1,0)`.
    pub fn label(&self) -> String {
        format!("({},{},{})", self.x, self.y, self.z)
    }
}

impl fmt::Display for InteractionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub strength: f64,
    pub vector: InteractionVector,
}

impl Coupling {
    pub fn new(strength: f64, vector: InteractionVector) -> Self {
        Coupling { strength, vector }
    }

    /// Isotropic chain coupling of strength `j`.
    pub fn chain(j: f64) -> Self {
        Coupling::new(j, InteractionVector::ISOTROPIC)
    }
}

/// `strength * (lx XX + ly YY + lz ZZ) / 4`.
pub fn two_site_generator(c: &Coupling) -> Mat4 {
    let v = c.vector;
    let mut h = [[ZERO; 4]; 4];
    for (w, p) in [(v.x, PAULI_X), (v.y, PAULI_Y), (v.z, PAULI_Z)] {
        let term = linalg::scale4(&kron_pair(&p, &p), C64::new(c.strength * w / 4.0, 0.0));
        h = linalg::add4(&h, &term);
    }
    h
}

/// `exp(-i * generator * tau)`, from the generator's eigen-decomposition.
///
/// The generator is diagonal in the Bell basis: `|Φ±>` sit in the
/// `{|00>,|11>}` block and `|Ψ±>` in the `{|01>,|10>}` block, with energies
/// `s(±lx ∓ ly + lz)/4` and `s(±lx ± ly - lz)/4`.
pub fn propagator(c: &Coupling, tau: f64) -> Mat4 {
    let v = c.vector;
    let s = c.strength / 4.0;
    let e_phi_p = s * (v.x - v.y + v.z);
    let e_phi_m = s * (-v.x + v.y + v.z);
    let e_psi_p = s * (v.x + v.y - v.z);
    let e_psi_m = s * (-v.x - v.y - v.z);
    let phase = |e: f64| C64::from_polar(1.0, -e * tau);
    let (pp, pm, sp, sm) = (phase(e_phi_p), phase(e_phi_m), phase(e_psi_p), phase(e_psi_m));
    let half = C64::new(0.5, 0.0);

    let mut u = [[ZERO; 4]; 4];
    // |00>,|11> block (indices 0, 3)
    u[0][0] = (pp + pm) * half;
    u[3][3] = u[0][0];
    u[0][3] = (pp - pm) * half;
    u[3][0] = u[0][3];
    // |01>,|10> block (indices 1, 2)
    u[1][1] = (sp + sm) * half;
    u[2][2] = u[1][1];
    u[1][2] = (sp - sm) * half;
    u[2][1] = u[1][2];
    u
}

/// Kicking period and number of Floquet steps. Layers are always applied
/// in the order R, G, B within a step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetSchedule {
    pub tau: f64,
    pub steps: usize,
}

impl FloquetSchedule {
    pub fn new(tau: f64, steps: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        Ok(FloquetSchedule { tau, steps })
    }

    pub fn layer_order(&self) -> [Layer; 3] {
        Layer::ORDER
    }

    /// `t_N = N * tau` for `N = 0..=steps`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.tau).collect()
    }
}

/// Physical parameters a program was compiled from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramCouplings {
    pub chain_j: f64,
    pub rung_jperp: f64,
    pub rung_lambda: InteractionVector,
}

impl ProgramCouplings {
    pub fn jperp_ratio(&self) -> f64 {
        self.rung_jperp / self.chain_j
    }
}

/// One Floquet step's gates, repeated `schedule.steps` times.
#[derive(Clone, Debug)]
pub struct TrotterProgram {
    lattice: LatticeSpec,
    schedule: FloquetSchedule,
    couplings: ProgramCouplings,
    bonds: Vec<Bond>,
    step_gates: Vec<GateMatrix>,
}

impl TrotterProgram {
    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn schedule(&self) -> &FloquetSchedule {
        &self.schedule
    }

    pub fn couplings(&self) -> &ProgramCouplings {
        &self.couplings
    }

    /// Gates of a single step in application order.
    pub fn step_gates(&self) -> &[GateMatrix] {
        &self.step_gates
    }

    /// Bonds matching `step_gates` one to one.
    pub fn step_bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Total gate count, `steps * bonds`.
    pub fn len(&self) -> usize {
        self.schedule.steps * self.step_gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every `(step, bond, gate)` of the program in order; steps count from 1.
    pub fn gates(&self) -> impl Iterator<Item = (usize, &Bond, &GateMatrix)> + '_ {
        (1..=self.schedule.steps)
            .flat_map(move |s| self.bonds.iter().zip(&self.step_gates).map(move |(b, g)| (s, b, g)))
    }

    /// Same program with a different number of steps.
    pub fn with_steps(&self, steps: usize) -> TrotterProgram {
        let mut p = self.clone();
        p.schedule.steps = steps;
        p
    }
}

/// Compile the layered Floquet step for a lattice.
pub fn compile_program(
    spec: &LatticeSpec,
    sched: &FloquetSchedule,
    chain_j: f64,
    rung_jperp: f64,
    rung_lambda: InteractionVector,
) -> Result<TrotterProgram> {
    spec.check()?;
    FloquetSchedule::new(sched.tau, sched.steps)?;
    if !chain_j.is_finite() || !rung_jperp.is_finite() || !rung_lambda.is_finite() {
        return Err(Error::invalid("couplings must be finite"));
    }
    let chain_u = propagator(&Coupling::chain(chain_j), sched.tau);
    let rung_u = propagator(&Coupling::new(rung_jperp, rung_lambda), sched.tau);

    let bonds = spec.ordered_bonds();
    let mut gates = Vec::with_capacity(bonds.len());
    for layer in Layer::ORDER {
        let mut touched = vec![false; spec.n()];
        for b in bonds.iter().filter(|b| b.layer == layer) {
            for s in [b.a.0, b.b.0] {
                if std::mem::replace(&mut touched[s], true) {
                    return Err(Error::Numeric(format!(
                        "layer {layer} gates overlap at site {s}"
                    )));
                }
            }
        }
    }
    for b in &bonds {
        let u = match b.kind {
            BondKind::Chain => chain_u,
            BondKind::Rung => rung_u,
        };
        gates.push(GateMatrix::new(b.a, b.b, u)?);
    }
    Ok(TrotterProgram {
        lattice: spec.clone(),
        schedule: *sched,
        couplings: ProgramCouplings {
            chain_j,
            rung_jperp,
            rung_lambda,
        },
        bonds,
        step_gates: gates,
    })
}

/// All experiment labels `(λ', axis')` equivalent to `(λ, axis)` under a
/// global relabelling of the spin axes. The chain coupling is isotropic,
/// so permuting x, y, z on every site maps one experiment onto another:
/// the measured axis moves with the permutation and so do the components
/// of λ. The input comes first; duplicates are removed.
pub fn equivalent_experiments(lambda: InteractionVector, axis: Axis) -> Vec<(InteractionVector, Axis)> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [2, 1, 0],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
    ];
    let comps = lambda.as_array();
    let mut out: Vec<(InteractionVector, Axis)> = Vec::new();
    for perm in PERMS {
        // component k of the old frame becomes component perm[k]
        let mut moved = [0.0; 3];
        for k in 0..3 {
            moved[perm[k]] = comps[k];
        }
        let new_axis = Axis::ALL[perm[axis.index()]];
        let item = (InteractionVector::from(moved), new_axis);
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryFlags {
    /// Total `S^z` commutes with the Floquet step.
    pub conserves_total_sz: bool,
    /// `P = prod_i X_i` commutes with the Floquet step.
    pub conserves_parity: bool,
}

const COMMUTATOR_TOL: f64 = 1e-12;

/// Conservation laws of the full step for a given rung type, by explicit
/// two-site commutators. Both charges are sums or products of single-site
/// terms, so they commute with the step iff they commute with every bond
/// generator; the isotropic chain bonds commute with both.
pub fn symmetry_flags(rung_lambda: InteractionVector) -> SymmetryFlags {
    let sz = linalg::add4(&kron_pair(&PAULI_Z, &PAULI_I), &kron_pair(&PAULI_I, &PAULI_Z));
    let parity = kron_pair(&PAULI_X, &PAULI_X);
    let chain = two_site_generator(&Coupling::chain(1.0));
    let rung = two_site_generator(&Coupling::new(1.0, rung_lambda));
    let commutes = |q: &Mat4| {
        linalg::commutator_norm4(q, &chain) < COMMUTATOR_TOL
            && linalg::commutator_norm4(q, &rung) < COMMUTATOR_TOL
    };
    SymmetryFlags {
        conserves_total_sz: commutes(&sz),
        conserves_parity: commutes(&parity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_folded_chain, RungStyle, SiteId};
    use crate::linalg::{identity4, phase_aligned_diff4, swap4, unitarity_error4};
    use std::f64::consts::PI;

    fn lam(x: f64, y: f64, z: f64) -> InteractionVector {
        InteractionVector::new(x, y, z)
    }

    #[test]
    fn zero_vector_gives_zero_generator() {
        let h = two_site_generator(&Coupling::new(1.0, InteractionVector::ZERO));
        assert!(h.iter().flatten().all(|x| *x == ZERO));
    }

    #[test]
    fn zz_generator_is_diagonal() {
        let h = two_site_generator(&Coupling::new(2.0, lam(0.0, 0.0, 1.0)));
        let diag = [0.5, -0.5, -0.5, 0.5];
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { diag[r] } else { 0.0 };
                assert!((h[r][c] - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn generator_is_hermitian() {
        let h = two_site_generator(&Coupling::new(1.3, lam(0.2, -0.7, 1.1)));
        assert!(linalg::max_abs_diff4(&h, &linalg::dagger4(&h)) < 1e-15);
    }

    #[test]
    fn isotropic_special_points() {
        let at = |jt: f64| propagator(&Coupling::chain(1.0), jt);
        assert!(phase_aligned_diff4(&at(PI), &swap4()) < 1e-12);
        assert!(phase_aligned_diff4(&at(2.0 * PI), &identity4()) < 1e-12);
    }

    #[test]
    fn zero_rung_strength_gives_exact_identity() {
        for l in InteractionVector::STUDIED {
            let u = propagator(&Coupling::new(0.0, l), 1.0);
            assert!(linalg::is_identity4(&u));
        }
    }

    #[test]
    fn propagators_are_unitary() {
        for (s, l, t) in [
            (1.0, lam(1.0, 1.0, 1.0), 1.0),
            (4.0, lam(1.0, 0.0, 1.0), 0.3),
            (-2.5, lam(0.4, -1.2, 2.0), 1.7),
        ] {
            assert!(unitarity_error4(&propagator(&Coupling::new(s, l), t)) < 1e-12);
        }
    }

    #[test]
    fn compile_emits_layers_in_order() {
        let spec = build_folded_chain(4, &[], RungStyle::DirectBond, SiteId(0)).unwrap();
        let sched = FloquetSchedule::new(1.0, 1).unwrap();
        let p = compile_program(&spec, &sched, 1.0, 1.0, InteractionVector::ZERO).unwrap();
        assert_eq!(p.len(), 3);
        let layers: Vec<_> = p.step_bonds().iter().map(|b| b.layer).collect();
        assert_eq!(layers, vec![Layer::R, Layer::R, Layer::G]);
    }

    #[test]
    fn compile_with_zero_jperp_gives_identity_rungs() {
        let spec =
            build_folded_chain(10, &[(SiteId(2), SiteId(7))], RungStyle::DirectBond, SiteId(0)).unwrap();
        let sched = FloquetSchedule::new(1.0, 3).unwrap();
        let p = compile_program(&spec, &sched, 1.0, 0.0, lam(1.0, 0.0, 1.0)).unwrap();
        for (b, g) in p.step_bonds().iter().zip(p.step_gates()) {
            assert_eq!(g.is_identity(), b.kind == BondKind::Rung);
        }
        assert_eq!(p.len(), 3 * 10);
    }

    #[test]
    fn compile_reference_chain_size() {
        let spec = build_folded_chain(28, &[], RungStyle::DirectBond, SiteId(0)).unwrap();
        let sched = FloquetSchedule::new(1.0, 20).unwrap();
        let p = compile_program(&spec, &sched, 1.0, 1.0, lam(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(p.step_gates().len(), 27);
        assert_eq!(p.len(), 20 * 27);
    }

    #[test]
    fn schedule_rejects_bad_tau() {
        assert!(FloquetSchedule::new(0.0, 3).is_err());
        assert!(FloquetSchedule::new(f64::NAN, 3).is_err());
    }

    #[test]
    fn equivalences_include_axis_swaps() {
        let e = equivalent_experiments(lam(0.0, 0.0, 1.0), Axis::Z);
        assert_eq!(e[0], (lam(0.0, 0.0, 1.0), Axis::Z));
        assert!(e.contains(&(lam(1.0, 0.0, 0.0), Axis::X)));
        assert!(e.contains(&(lam(0.0, 1.0, 0.0), Axis::Y)));

        let e = equivalent_experiments(lam(1.0, 0.0, 1.0), Axis::Z);
        assert!(e.contains(&(lam(0.0, 1.0, 1.0), Axis::Z)));
        // <lx,ly,lz>_zz == <lz,ly,lx>_xx == <lx,lz,ly>_yy
        let e = equivalent_experiments(lam(1.0, 1.0, 0.0), Axis::Z);
        assert!(e.contains(&(lam(0.0, 1.0, 1.0), Axis::X)));
        assert!(e.contains(&(lam(1.0, 0.0, 1.0), Axis::Y)));
    }

    #[test]
    fn isotropic_vector_is_closed() {
        let e = equivalent_experiments(InteractionVector::ISOTROPIC, Axis::Z);
        assert!(e.iter().all(|(l, _)| *l == InteractionVector::ISOTROPIC));
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn symmetry_flags_for_named_types() {
        assert!(symmetry_flags(lam(0.0, 0.0, 1.0)).conserves_total_sz);
        assert!(!symmetry_flags(lam(1.0, 0.0, 0.0)).conserves_total_sz);
        let iso = symmetry_flags(InteractionVector::ISOTROPIC);
        assert!(iso.conserves_total_sz && iso.conserves_parity);
        assert!(symmetry_flags(lam(1.0, 0.0, 0.0)).conserves_parity);
    }

    #[test]
    fn total_sz_conserved_iff_lx_equals_ly() {
        for bits in 0..8u32 {
            let l = lam((bits & 1) as f64, ((bits >> 1) & 1) as f64, ((bits >> 2) & 1) as f64);
            assert_eq!(symmetry_flags(l).conserves_total_sz, l.x == l.y, "{l}");
        }
    }

    #[test]
    fn interaction_vector_serialises_as_triple() {
        let s = serde_json::to_string(&lam(1.0, 0.0, 1.0)).unwrap();
        assert_eq!(s, "[1.0,0.0,1.0]");
        let back: InteractionVector = serde_json::from_str("[0,1,1]").unwrap();
        assert_eq!(back, lam(0.0, 1.0, 1.0));
    }
}
