//! Typicality estimates of infinite-temperature correlators.
//!
//! With the probe prepared in the `+1` eigenstate of `sigma_axis` on top of
//! a scrambled background `|psi>`, `Tr[sigma^i(t) sigma^p] / 2^n` is
//! estimated by
//!
//! * [`Estimator::SingleSided`]: `<+,psi| sigma^i(t) |+,psi>`, using
//!   `Tr[sigma^i(t)] = 0`;
//! * [`Estimator::Antisymmetric`]: half the difference between the `+` and
//!   `-` probe preparations on the same background. Twice the cost, but
//!   exactly zero for operators the probe cannot reach.
//!
//! Both are normalised so the autocorrelator is 1 at `t = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, derive_seed, RandomizationConfig, StateVector};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Region};
use crate::model::{Axis, InteractionVector, TrotterProgram};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    SingleSided,
    Antisymmetric,
}

/// Measurement protocol shared by all realizations of one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub axis: Axis,
    pub cycles: usize,
    pub realizations: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Protocol {
    /// Random-state config of realization `m`; its seed is derived from
    /// the master seed and `m` alone.
    pub fn randomization(&self, m: usize) -> RandomizationConfig {
        RandomizationConfig {
            cycles: self.cycles,
            seed: self.seed,
            realization_index: m as u64,
        }
    }

    pub fn realization_seed(&self, m: usize) -> u64 {
        derive_seed(self.seed, m as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub lambda: InteractionVector,
    pub chain_j: f64,
    pub jperp_ratio: f64,
    pub tau: f64,
    pub cycles: usize,
    pub n: usize,
    pub probe: usize,
    pub seed: u64,
    pub estimator: Estimator,
    /// Measured axis, when the series comes straight from a run.
    pub axis: Option<Axis>,
    /// Unit spin direction of the correlator.
    pub direction: [f64; 3],
}

impl SeriesMeta {
    fn new(prog: &TrotterProgram, protocol: &Protocol) -> Self {
        let c = prog.couplings();
        let mut direction = [0.0; 3];
        direction[protocol.axis.index()] = 1.0;
        SeriesMeta {
            lambda: c.rung_lambda,
            chain_j: c.chain_j,
            jperp_ratio: c.jperp_ratio(),
            tau: prog.schedule().tau,
            cycles: protocol.cycles,
            n: prog.n(),
            probe: prog.lattice().probe().0,
            seed: protocol.seed,
            estimator: protocol.estimator,
            axis: Some(protocol.axis),
            direction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub realizations: usize,
    pub meta: SeriesMeta,
}

impl CorrelationSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Realization-averaged `<sigma_axis^i(t)>` for every site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialProfile {
    pub times: Vec<f64>,
    /// `mean[step][site]`
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub realizations: usize,
    pub meta: SeriesMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSeries {
    pub times: Vec<f64>,
    pub reflection: Vec<f64>,
    pub transmission_same: Vec<f64>,
    pub transmission_cross: Vec<f64>,
    /// Signed weight on the rung site, kept out of the three sums.
    pub rung_site: Vec<f64>,
}

enum Measure {
    Probe,
    AllSites,
}

fn measure(state: &StateVector, what: &Measure, probe: usize, axis: Axis) -> Vec<f64> {
    match what {
        Measure::Probe => vec![state.expect_pauli(probe, axis).expect("probe in range")],
        Measure::AllSites => state.expect_all(axis),
    }
}

fn evolve_and_measure(
    mut state: StateVector,
    prog: &TrotterProgram,
    what: &Measure,
    axis: Axis,
) -> Result<Vec<Vec<f64>>> {
    let probe = prog.lattice().probe().0;
    let mut rows = Vec::with_capacity(prog.schedule().steps + 1);
    rows.push(measure(&state, what, probe, axis));
    engine::run_program(&mut state, prog, |_, s| rows.push(measure(s, what, probe, axis)))?;
    let norm = state.norm();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::Numeric(format!("state norm drifted to {norm}")));
    }
    Ok(rows)
}

fn realization(
    prog: &TrotterProgram,
    protocol: &Protocol,
    m: usize,
    what: &Measure,
) -> Result<Vec<Vec<f64>>> {
    let spec = prog.lattice();
    let rc = protocol.randomization(m);
    let plus = engine::prepare_probe_random_state(spec, protocol.axis, &rc)?;
    match protocol.estimator {
        Estimator::SingleSided => evolve_and_measure(plus, prog, what, protocol.axis),
        Estimator::Antisymmetric => {
            let mut minus = plus.clone();
            engine::flip_probe(&mut minus, spec.probe().0, protocol.axis)?;
            let a = evolve_and_measure(plus, prog, what, protocol.axis)?;
            let b = evolve_and_measure(minus, prog, what, protocol.axis)?;
            let cone = light_cone(prog);
            let probe = spec.probe().0;
            Ok(a.iter()
                .zip(&b)
                .zip(&cone)
                .map(|((ra, rb), reached)| {
                    ra.iter()
                        .zip(rb)
                        .enumerate()
                        .map(|(i, (x, y))| {
                            let site = if matches!(what, Measure::Probe) { probe } else { i };
                            if reached[site] {
                                0.5 * (x - y)
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect())
        }
    }
}

/// Sites the probe can have influenced after each step, following the
/// non-identity gates in application order. Outside this set the operator
/// commutes with the probe flip, so the antisymmetric estimate is exactly
/// zero there.
pub fn light_cone(prog: &TrotterProgram) -> Vec<Vec<bool>> {
    let mut reached = vec![false; prog.n()];
    reached[prog.lattice().probe().0] = true;
    let mut rows = vec![reached.clone()];
    for _ in 0..prog.schedule().steps {
        for g in prog.step_gates() {
            let (a, b) = g.targets();
            if !g.is_identity() && (reached[a] || reached[b]) {
                reached[a] = true;
                reached[b] = true;
            }
        }
        rows.push(reached.clone());
    }
    rows
}

/// Per-step measurements of one realization: the probe only, or all sites.
pub fn realization_trace(
    prog: &TrotterProgram,
    protocol: &Protocol,
    m: usize,
    all_sites: bool,
) -> Result<Vec<Vec<f64>>> {
    let what = if all_sites { Measure::AllSites } else { Measure::Probe };
    realization(prog, protocol, m, &what)
}

fn run_all(prog: &TrotterProgram, protocol: &Protocol, what: Measure) -> Result<Vec<Vec<Vec<f64>>>> {
    if protocol.realizations == 0 {
        return Err(Error::invalid("at least one realization is required"));
    }
    (0..protocol.realizations)
        .into_par_iter()
        .map(|m| realization(prog, protocol, m, &what))
        .collect()
}

/// Sample mean and standard error of the mean, summed in input order.
pub fn mean_stderr(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.len();
    let mean = values.clone().sum::<f64>() / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64;
    (mean, (var / count as f64).sqrt())
}

/// Probe autocorrelator averaged over `protocol.realizations` random states.
pub fn run_autocorrelation(prog: &TrotterProgram, protocol: &Protocol) -> Result<CorrelationSeries> {
    let runs = run_all(prog, protocol, Measure::Probe)?;
    let steps = prog.schedule().steps;
    let (mut mean, mut stderr) = (Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1));
    for t in 0..=steps {
        let (m, s) = mean_stderr(runs.iter().map(|r| r[t][0]));
        mean.push(m);
        stderr.push(s);
    }
    Ok(CorrelationSeries {
        times: prog.schedule().times(),
        mean,
        stderr,
        realizations: protocol.realizations,
        meta: SeriesMeta::new(prog, protocol),
    })
}

/// Cross-correlators between the probe and every site.
pub fn run_spatial_profile(prog: &TrotterProgram, protocol: &Protocol) -> Result<SpatialProfile> {
    let runs = run_all(prog, protocol, Measure::AllSites)?;
    let steps = prog.schedule().steps;
    let n = prog.n();
    let mut mean = vec![vec![0.0; n]; steps + 1];
    let mut stderr = vec![vec![0.0; n]; steps + 1];
    for t in 0..=steps {
        for i in 0..n {
            let (m, s) = mean_stderr(runs.iter().map(|r| r[t][i]));
            mean[t][i] = m;
            stderr[t][i] = s;
        }
    }
    Ok(SpatialProfile {
        times: prog.schedule().times(),
        mean,
        stderr,
        realizations: protocol.realizations,
        meta: SeriesMeta::new(prog, protocol),
    })
}

impl SpatialProfile {
    /// Column of one site as a correlation series.
    pub fn site_series(&self, site: usize) -> CorrelationSeries {
        CorrelationSeries {
            times: self.times.clone(),
            mean: self.mean.iter().map(|r| r[site]).collect(),
            stderr: self.stderr.iter().map(|r| r[site]).collect(),
            realizations: self.realizations,
            meta: self.meta.clone(),
        }
    }
}

/// Absolute region sums of a profile: reflection before the rung and
/// transmission along the same chain and into the other chain.
pub fn scattering_coefficients(profile: &SpatialProfile, spec: &LatticeSpec) -> Result<ScatteringSeries> {
    scattering_coefficients_folded(profile, spec, None)
}

/// As [`scattering_coefficients`], with the rung-site weight optionally
/// added to another region before taking absolute values.
pub fn scattering_coefficients_folded(
    profile: &SpatialProfile,
    spec: &LatticeSpec,
    rung_site_to: Option<Region>,
) -> Result<ScatteringSeries> {
    let partition = spec
        .partition()
        .ok_or_else(|| Error::invalid("lattice has no site partition"))?;
    if partition.len() != profile.mean.first().map_or(0, |r| r.len()) {
        return Err(Error::invalid("profile and lattice disagree on site count"));
    }
    let mut out = ScatteringSeries {
        times: profile.times.clone(),
        reflection: Vec::new(),
        transmission_same: Vec::new(),
        transmission_cross: Vec::new(),
        rung_site: Vec::new(),
    };
    for row in &profile.mean {
        let mut sums = [0.0; 4];
        for (v, region) in row.iter().zip(partition) {
            let region = match (region, rung_site_to) {
                (Region::RungSite, Some(to)) => to,
                (r, _) => *r,
            };
            let k = match region {
                Region::BeforeRung => 0,
                Region::AfterRungSameChain => 1,
                Region::OtherChain => 2,
                Region::RungSite => 3,
            };
            sums[k] += v;
        }
        out.reflection.push(sums[0].abs());
        out.transmission_same.push(sums[1].abs());
        out.transmission_cross.push(sums[2].abs());
        out.rung_site.push(sums[3]);
    }
    Ok(out)
}

/// `C^nn = nx^2 C^xx + ny^2 C^yy + nz^2 C^zz`, errors added in quadrature.
pub fn reconstruct_directional(
    cxx: &CorrelationSeries,
    cyy: &CorrelationSeries,
    czz: &CorrelationSeries,
    n_hat: [f64; 3],
) -> Result<CorrelationSeries> {
    let norm = n_hat.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= 1e-12) {
        return Err(Error::invalid(format!("direction must be a unit vector, norm is {norm}")));
    }
    if cxx.times != czz.times || cyy.times != czz.times {
        return Err(Error::invalid("component series have different time grids"));
    }
    let w = n_hat.map(|x| x * x);
    let series = [cxx, cyy, czz];
    let len = czz.len();
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for t in 0..len {
        mean.push((0..3).map(|k| w[k] * series[k].mean[t]).sum());
        stderr.push(
            (0..3)
                .map(|k| (w[k] * series[k].stderr[t]).powi(2))
                .sum::<f64>()
                .sqrt(),
        );
    }
    let mut meta = czz.meta.clone();
    meta.axis = None;
    meta.direction = n_hat;
    Ok(CorrelationSeries {
        times: czz.times.clone(),
        mean,
        stderr,
        realizations: cxx.realizations.min(cyy.realizations).min(czz.realizations),
        meta,
    })
}
