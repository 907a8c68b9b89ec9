//! Named experiments behind the command-line verbs. Each `cmd_*` runs the
//! computation, writes one run directory and returns its report.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    self, classify, default_window, departure_step, local_exponents, resilience_rank, ExponentSeries,
    TransportClass, TransportLabel, SUPERDIFFUSIVE,
};
use crate::config::{ExperimentConfig, Format};
use crate::correlator::{
    run_autocorrelation, run_spatial_profile, scattering_coefficients_folded, CorrelationSeries, Estimator,
    ScatteringSeries, SpatialProfile,
};
use crate::engine::{dense_trace_correlator, derive_seed};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::InteractionVector;
use crate::output::RunDir;

/// File-name form of a vector, `1_0_0.5` for `(1, 0, 0.5)`.
pub fn lambda_slug(l: InteractionVector) -> String {
    format!("{}_{}_{}", l.x, l.y, l.z)
}

fn window_of(cfg: &ExperimentConfig, es: &ExponentSeries) -> Range<usize> {
    match cfg.analysis.window {
        Some([a, b]) => a..b,
        None => default_window(es.len()),
    }
}

pub struct Simulation {
    pub series: CorrelationSeries,
    pub exponents: ExponentSeries,
    pub class: TransportClass,
    pub window: Range<usize>,
    pub departure_step: Option<usize>,
    pub profile: Option<SpatialProfile>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub lambda: InteractionVector,
    pub jperp_ratio: f64,
    pub tau: f64,
    pub n: usize,
    pub label: TransportLabel,
    pub exponent: f64,
    /// Signed offset from -2/3; negative is the ballistic side.
    pub deviation: f64,
    pub window: [usize; 2],
    pub running_from_step: usize,
    pub departure_step: Option<usize>,
}

impl Simulation {
    pub fn report(&self) -> SimulationReport {
        let m = &self.series.meta;
        SimulationReport {
            lambda: m.lambda,
            jperp_ratio: m.jperp_ratio,
            tau: m.tau,
            n: m.n,
            label: self.class.label,
            exponent: self.class.exponent,
            deviation: self.class.deviation,
            window: [self.window.start, self.window.end],
            running_from_step: self.exponents.running_from,
            departure_step: self.departure_step,
        }
    }

    fn write(&self, run: &mut RunDir, cfg: &ExperimentConfig) -> Result<()> {
        if cfg.output.formats.contains(&Format::Csv) {
            run.write_correlations("correlations.csv", &self.series)?;
            run.write_exponents("exponents.csv", &self.exponents)?;
            if let Some(p) = &self.profile {
                run.write_profile("profile.csv", p)?;
            }
            run.write_plot(
                &[("correlations.csv", 3, "C(t)")],
                true,
            )?;
        }
        if cfg.output.formats.contains(&Format::Json) {
            run.write_json("series.json", &self.series)?;
            run.write_json("exponents.json", &self.exponents)?;
        }
        run.write_json("report.json", &self.report())
    }
}

/// Autocorrelator and exponent analysis for one rung setting.
pub fn run_simulation(
    cfg: &ExperimentConfig,
    spec: &LatticeSpec,
    lambda: InteractionVector,
    ratio: f64,
) -> Result<Simulation> {
    if cfg.analysis.running_from_step >= cfg.physics.steps {
        return Err(Error::Config(format!(
            "analysis.running_from_step ({}) leaves no slopes within {} steps",
            cfg.analysis.running_from_step, cfg.physics.steps
        )));
    }
    let prog = cfg.program(spec, lambda, ratio)?;
    let protocol = cfg.protocol.protocol(Estimator::SingleSided);
    let series = run_autocorrelation(&prog, &protocol)?;
    let exponents = local_exponents(&series)?.with_running_from(cfg.analysis.running_from_step);
    let window = window_of(cfg, &exponents);
    let class = classify(&exponents, window.clone(), cfg.analysis.tolerance)?;
    let departure = departure_step(&exponents, cfg.analysis.departure_threshold, class.deviation);
    let profile = if cfg.output.profile {
        let p = cfg.protocol.protocol(Estimator::Antisymmetric);
        Some(run_spatial_profile(&prog, &p)?)
    } else {
        None
    };
    Ok(Simulation {
        series,
        exponents,
        class,
        window,
        departure_step: departure,
        profile,
    })
}

pub fn cmd_simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, SimulationReport)> {
    let spec = cfg.folded_lattice()?;
    let sim = run_simulation(cfg, &spec, cfg.physics.lambda, cfg.physics.jperp_ratio)?;
    let mut run = RunDir::create(dir)?;
    sim.write(&mut run, cfg)?;
    let report = sim.report();
    Ok((run.finish("simulate", cfg)?, report))
}

pub struct ScatterCase {
    pub label: String,
    pub lambda: InteractionVector,
    pub jperp_ratio: f64,
    pub series: ScatteringSeries,
    pub profile: SpatialProfile,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatterCaseReport {
    pub label: String,
    pub lambda: InteractionVector,
    pub jperp_ratio: f64,
    pub max_t_cross: f64,
    pub max_t_same: f64,
    pub final_r: f64,
}

impl ScatterCase {
    pub fn report(&self) -> ScatterCaseReport {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        ScatterCaseReport {
            label: self.label.clone(),
            lambda: self.lambda,
            jperp_ratio: self.jperp_ratio,
            max_t_cross: max(&self.series.transmission_cross),
            max_t_same: max(&self.series.transmission_same),
            final_r: *self.series.reflection.last().unwrap_or(&f64::NAN),
        }
    }
}

pub fn run_scatter(cfg: &ExperimentConfig) -> Result<Vec<ScatterCase>> {
    let spec = cfg.scattering_lattice()?;
    let protocol = cfg.protocol.protocol(Estimator::Antisymmetric);
    cfg.scatter
        .cases
        .iter()
        .map(|&lambda| {
            let prog = cfg.program(&spec, lambda, cfg.scatter.jperp_ratio)?;
            let profile = run_spatial_profile(&prog, &protocol)?;
            let series = scattering_coefficients_folded(&profile, &spec, cfg.scatter.rung_site_to)?;
            let label = if lambda == InteractionVector::ZERO || cfg.scatter.jperp_ratio == 0.0 {
                "uncoupled".to_string()
            } else {
                format!("lambda_{}", lambda_slug(lambda))
            };
            Ok(ScatterCase {
                label,
                lambda,
                jperp_ratio: cfg.scatter.jperp_ratio,
                series,
                profile,
            })
        })
        .collect()
}

pub fn cmd_scatter(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, Vec<ScatterCaseReport>)> {
    let cases = run_scatter(cfg)?;
    let mut run = RunDir::create(dir)?;
    let mut plots = Vec::new();
    let names: Vec<String> = cases.iter().map(|c| format!("scattering_{}.csv", c.label)).collect();
    for (case, name) in cases.iter().zip(&names) {
        run.write_scattering(name, &case.series)?;
        if cfg.output.profile {
            run.write_profile(&format!("profile_{}.csv", case.label), &case.profile)?;
        }
        if cfg.output.formats.contains(&Format::Json) {
            run.write_json(&format!("scattering_{}.json", case.label), &case.series)?;
        }
    }
    for (case, name) in cases.iter().zip(&names) {
        for (col, what) in [(3, "R"), (4, "T_same"), (5, "T_cross")] {
            plots.push((name.as_str(), col, format!("{} {what}", case.label)));
        }
    }
    let plot_refs: Vec<(&str, usize, &str)> = plots.iter().map(|(f, c, t)| (*f, *c, t.as_str())).collect();
    run.write_plot(&plot_refs, false)?;
    let reports: Vec<_> = cases.iter().map(ScatterCase::report).collect();
    run.write_json("report.json", &reports)?;
    Ok((run.finish("scatter", cfg)?, reports))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub lambda: InteractionVector,
    pub exponent: f64,
    pub deviation: f64,
    pub label: TransportLabel,
    /// Largest `|C - C_ref|` over the steps.
    pub max_diff_from_reference: f64,
    /// `|C - C_ref|` within the combined standard error at every step.
    pub matches_reference: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTrend {
    pub lambda: InteractionVector,
    pub deviations: Vec<f64>,
    /// `|deviation|` never decreases as the ratio grows.
    pub monotone: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub reference: SimulationReport,
    pub rows: Vec<SweepRow>,
    pub trends: Vec<SweepTrend>,
    /// Per ratio, lambdas from most to least resilient.
    pub rankings: Vec<(f64, Vec<InteractionVector>)>,
}

/// Whether two series agree within their combined standard error at
/// every step, and their largest pointwise difference.
pub fn compare_series(a: &CorrelationSeries, b: &CorrelationSeries) -> Result<(bool, f64)> {
    if a.times != b.times {
        return Err(Error::invalid("series have different time grids"));
    }
    let mut ok = true;
    let mut worst = 0.0f64;
    for k in 0..a.len() {
        let d = (a.mean[k] - b.mean[k]).abs();
        worst = worst.max(d);
        ok &= d <= (a.stderr[k].powi(2) + b.stderr[k].powi(2)).sqrt();
    }
    Ok((ok, worst))
}

pub fn cmd_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, SweepReport)> {
    let ratios = &cfg.studies.ratios;
    if ratios.is_empty() {
        return Err(Error::Config("studies.ratios is empty".into()));
    }
    let spec = cfg.folded_lattice()?;
    let mut run = RunDir::create(dir)?;
    let reference = run_simulation(cfg, &spec, InteractionVector::ZERO, 0.0)?;
    {
        let mut child = run.child("reference")?;
        reference.write(&mut child, cfg)?;
        child.finish("sweep/reference", cfg)?;
    }
    let mut rows = Vec::new();
    let mut rankings = Vec::new();
    for &ratio in ratios {
        let mut runs = Vec::new();
        for &lambda in &cfg.studies.lambdas {
            let sim = run_simulation(cfg, &spec, lambda, ratio)?;
            let mut child = run.child(&format!("ratio_{ratio}/lambda_{}", lambda_slug(lambda)))?;
            sim.write(&mut child, cfg)?;
            child.finish("sweep/run", cfg)?;
            let (matches, worst) = compare_series(&sim.series, &reference.series)?;
            rows.push(SweepRow {
                ratio,
                lambda,
                exponent: sim.class.exponent,
                deviation: sim.class.deviation,
                label: sim.class.label,
                max_diff_from_reference: worst,
                matches_reference: matches,
            });
            runs.push(sim);
        }
        let es: Vec<ExponentSeries> = runs.iter().map(|s| s.exponents.clone()).collect();
        let window = window_of(cfg, &reference.exponents);
        let order = resilience_rank(&es, window)?
            .into_iter()
            .map(|e| cfg.studies.lambdas[e.index])
            .collect();
        rankings.push((ratio, order));
    }
    let trends = cfg
        .studies
        .lambdas
        .iter()
        .map(|&lambda| {
            let deviations: Vec<f64> = rows.iter().filter(|r| r.lambda == lambda).map(|r| r.deviation).collect();
            let monotone = deviations.windows(2).all(|w| w[1].abs() >= w[0].abs());
            SweepTrend {
                lambda,
                deviations,
                monotone,
            }
        })
        .collect();
    let report = SweepReport {
        reference: reference.report(),
        rows,
        trends,
        rankings,
    };
    run.write_json("report.json", &report)?;
    Ok((run.finish("sweep", cfg)?, report))
}

/// Direction of a run relative to the 1D reference at the same settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Drift {
    Diffusive,
    Ballistic,
    None,
}

pub fn drift(exponent: f64, reference: f64, threshold: f64) -> Drift {
    let d = exponent - reference;
    if d > threshold {
        Drift::Diffusive
    } else if d < -threshold {
        Drift::Ballistic
    } else {
        Drift::None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TauRow {
    pub tau: f64,
    pub steps: usize,
    pub lambda: InteractionVector,
    pub exponent: f64,
    pub reference_exponent: f64,
    pub drift: Drift,
    /// Mean local slope of the reference over the last third of rows;
    /// closer to zero means the correlator has flattened.
    pub reference_late_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TauComparison {
    pub tau_a: f64,
    pub tau_b: f64,
    pub lambda: InteractionVector,
    pub same_drift: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TauReport {
    pub rows: Vec<TauRow>,
    pub comparisons: Vec<TauComparison>,
}

fn late_slope(es: &ExponentSeries) -> f64 {
    let w = default_window(es.len());
    let vals: Vec<f64> = es.local[w].iter().copied().filter(|v| v.is_finite()).collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Runs at every τ with the total evolution time `steps * tau` of the
/// base config held fixed.
pub fn cmd_tau_study(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, TauReport)> {
    let taus = &cfg.studies.taus;
    if taus.is_empty() {
        return Err(Error::Config("studies.taus is empty".into()));
    }
    let total = cfg.physics.steps as f64 * cfg.physics.tau;
    let spec = cfg.folded_lattice()?;
    let mut run = RunDir::create(dir)?;
    let mut rows = Vec::new();
    for &tau in taus {
        let mut c = cfg.clone();
        c.physics.tau = tau;
        c.physics.steps = ((total / tau).round() as usize).max(3);
        c.analysis.window = None;
        let reference = run_simulation(&c, &spec, InteractionVector::ZERO, 0.0)?;
        let mut child = run.child(&format!("tau_{tau}/reference"))?;
        reference.write(&mut child, &c)?;
        child.finish("tau-study/reference", &c)?;
        for &lambda in &cfg.studies.lambdas {
            let sim = run_simulation(&c, &spec, lambda, c.physics.jperp_ratio)?;
            let mut child = run.child(&format!("tau_{tau}/lambda_{}", lambda_slug(lambda)))?;
            sim.write(&mut child, &c)?;
            child.finish("tau-study/run", &c)?;
            rows.push(TauRow {
                tau,
                steps: c.physics.steps,
                lambda,
                exponent: sim.class.exponent,
                reference_exponent: reference.class.exponent,
                drift: drift(sim.class.exponent, reference.class.exponent, cfg.analysis.departure_threshold),
                reference_late_slope: late_slope(&reference.exponents),
            });
        }
    }
    let mut comparisons = Vec::new();
    for pair in taus.windows(2) {
        for &lambda in &cfg.studies.lambdas {
            let find = |t: f64| rows.iter().find(|r| r.tau == t && r.lambda == lambda).map(|r| r.drift);
            if let (Some(a), Some(b)) = (find(pair[0]), find(pair[1])) {
                comparisons.push(TauComparison {
                    tau_a: pair[0],
                    tau_b: pair[1],
                    lambda,
                    same_drift: a == b,
                });
            }
        }
    }
    let report = TauReport { rows, comparisons };
    run.write_json("report.json", &report)?;
    Ok((run.finish("tau-study", cfg)?, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleRow {
    pub cycles: usize,
    pub runs: usize,
    /// Standard error across runs, averaged over the last third of steps.
    pub late_stderr: f64,
    pub stderr: Vec<f64>,
}

/// Standard error of the autocorrelator across `runs` single-state runs
/// for each cycle count. The runs for `c` cycles use master seed
/// `derive_seed(seed, c)`.
pub fn cycle_rows(cfg: &ExperimentConfig, spec: &LatticeSpec) -> Result<Vec<(CycleRow, CorrelationSeries)>> {
    let prog = cfg.program(spec, cfg.physics.lambda, cfg.physics.jperp_ratio)?;
    cfg.studies
        .cycles
        .iter()
        .map(|&c| {
            let mut p = cfg.protocol.protocol(Estimator::SingleSided);
            p.cycles = c;
            p.realizations = cfg.studies.cycle_runs;
            p.seed = derive_seed(cfg.protocol.seed, c as u64);
            let series = run_autocorrelation(&prog, &p)?;
            let w = default_window(series.len());
            let late = series.stderr[w.clone()].iter().sum::<f64>() / w.len() as f64;
            Ok((
                CycleRow {
                    cycles: c,
                    runs: p.realizations,
                    late_stderr: late,
                    stderr: series.stderr.clone(),
                },
                series,
            ))
        })
        .collect()
}

pub fn cmd_cycle_study(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, Vec<CycleRow>)> {
    if cfg.studies.cycles.is_empty() {
        return Err(Error::Config("studies.cycles is empty".into()));
    }
    let spec = cfg.folded_lattice()?;
    let rows = cycle_rows(cfg, &spec)?;
    let mut run = RunDir::create(dir)?;
    for (row, series) in &rows {
        run.write_correlations(&format!("correlations_c{}.csv", row.cycles), series)?;
    }
    let names: Vec<String> = rows.iter().map(|(r, _)| format!("correlations_c{}.csv", r.cycles)).collect();
    let titles: Vec<String> = rows.iter().map(|(r, _)| format!("stderr c={}", r.cycles)).collect();
    let plots: Vec<(&str, usize, &str)> =
        names.iter().zip(&titles).map(|(n, t)| (n.as_str(), 4, t.as_str())).collect();
    run.write_plot(&plots, false)?;
    let report: Vec<CycleRow> = rows.into_iter().map(|(r, _)| r).collect();
    run.write_json("report.json", &report)?;
    Ok((run.finish("cycle-study", cfg)?, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub realizations: usize,
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Typicality estimate against the exact trace on the configured folded
/// lattice; agreement means within `max(3 stderr, 0.02)` at every step.
pub fn cmd_oracle_check(cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, OracleReport)> {
    let spec = cfg.folded_lattice()?;
    let prog = cfg.program(&spec, cfg.physics.lambda, cfg.physics.jperp_ratio)?;
    let probe = spec.probe().0;
    let exact = dense_trace_correlator(
        &prog,
        probe,
        probe,
        cfg.protocol.axis,
        cfg.physics.steps,
        cfg.limits.oracle_qubits,
    )?;
    let est = run_autocorrelation(&prog, &cfg.protocol.protocol(Estimator::SingleSided))?;
    let mut run = RunDir::create(dir)?;
    let mut csv = String::from("step,time,exact,mean,stderr,abs_diff,within\n");
    let mut pass = true;
    let mut worst = 0.0f64;
    for k in 0..est.len() {
        let d = (est.mean[k] - exact[k]).abs();
        let ok = d <= (3.0 * est.stderr[k]).max(0.02);
        pass &= ok;
        worst = worst.max(d);
        csv += &format!(
            "{},{},{},{},{},{},{}\n",
            k,
            est.times[k],
            exact[k],
            est.mean[k],
            est.stderr[k],
            d,
            u8::from(ok)
        );
    }
    run.write("oracle.csv", &csv)?;
    let report = OracleReport {
        n: spec.n(),
        realizations: est.realizations,
        max_abs_diff: worst,
        pass,
    };
    run.write_json("report.json", &report)?;
    Ok((run.finish("oracle-check", cfg)?, report))
}

/// Signed deviation of the window-mean running exponent from -2/3.
pub fn deviation_of(es: &ExponentSeries, window: Range<usize>) -> Result<f64> {
    Ok(analysis::window_mean(es, window)? - SUPERDIFFUSIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.geometry.chain_len = 9;
        cfg.geometry.rungs = vec![crate::config::RungConfig::at_distance(2)];
        cfg.physics.steps = 6;
        cfg.protocol.realizations = 4;
        cfg.analysis.running_from_step = 1;
        cfg
    }

    #[test]
    fn simulate_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.output.profile = true;
        cfg.output.formats = vec![Format::Csv, Format::Json];
        let (root, report) = cmd_simulate(&cfg, &dir.path().join("run")).unwrap();
        for f in ["correlations.csv", "exponents.csv", "profile.csv", "manifest.json", "plot.gp", "series.json"] {
            assert!(root.join(f).exists(), "{f}");
        }
        assert_eq!(report.n, 10);
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.studies.ratios.clear();
        assert!(matches!(cmd_sweep(&cfg, dir.path()), Err(Error::Config(_))));
    }

    #[test]
    fn single_tau_has_no_comparisons() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.studies.taus = vec![1.0];
        cfg.studies.lambdas = vec![InteractionVector::new(0.0, 0.0, 1.0)];
        let (_, report) = cmd_tau_study(&cfg, dir.path()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.comparisons.is_empty());
    }

    #[test]
    fn drift_bands() {
        assert_eq!(drift(-0.5, -0.66, 0.05), Drift::Diffusive);
        assert_eq!(drift(-0.9, -0.66, 0.05), Drift::Ballistic);
        assert_eq!(drift(-0.68, -0.66, 0.05), Drift::None);
    }

    #[test]
    fn slugs() {
        assert_eq!(lambda_slug(InteractionVector::new(1.0, 0.0, 0.5)), "1_0_0.5");
    }
}
