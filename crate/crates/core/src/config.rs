//! Experiment configuration. Every field has a default, so `{}` is a valid
//! config; unknown keys are rejected. The JSON schema lives in
//! `schema/experiment-config.schema.json`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::DEFAULT_TOLERANCE;
use crate::correlator::{Estimator, Protocol};
use crate::engine::DEFAULT_ORACLE_LIMIT;
use crate::error::{Error, Result};
use crate::lattice::{build_folded_chain, build_scattering_geometry, LatticeSpec, Region, RungStyle, SiteId};
use crate::model::{compile_program, Axis, FloquetSchedule, InteractionVector, TrotterProgram};

pub const SCHEMA: &str = include_str!("../schema/experiment-config.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    pub protocol: ProtocolConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
    pub limits: LimitsConfig,
    pub scatter: ScatterConfig,
    pub studies: StudiesConfig,
}

/// Folded chain with rungs between its two arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub chain_len: usize,
    pub rungs: Vec<RungConfig>,
    pub rung_style: RungStyle,
    pub probe: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            chain_len: 19,
            rungs: vec![RungConfig::at_distance(4)],
            rung_style: RungStyle::MidSite,
            probe: 0,
        }
    }
}

/// A rung given either by its distance `d` from the probe end, joining
/// chain sites `d` and `chain_len - 1 - d`, or by two explicit sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RungConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<[usize; 2]>,
}

impl RungConfig {
    pub fn at_distance(d: usize) -> Self {
        RungConfig {
            distance: Some(d),
            sites: None,
        }
    }

    pub fn attachment(&self, chain_len: usize) -> Result<(SiteId, SiteId)> {
        match (self.distance, self.sites) {
            (Some(d), None) => {
                if 2 * d + 1 >= chain_len {
                    return Err(Error::Config(format!(
                        "rung distance {d} does not fit a chain of {chain_len} sites"
                    )));
                }
                Ok((SiteId(d), SiteId(chain_len - 1 - d)))
            }
            (None, Some([a, b])) => Ok((SiteId(a), SiteId(b))),
            _ => Err(Error::Config("a rung needs exactly one of `distance` or `sites`".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub j: f64,
    pub jperp_ratio: f64,
    pub lambda: InteractionVector,
    pub tau: f64,
    pub steps: usize,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            j: 1.0,
            jperp_ratio: 1.0,
            lambda: InteractionVector::ZERO,
            tau: 1.0,
            steps: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub axis: Axis,
    pub cycles: usize,
    pub realizations: usize,
    pub seed: u64,
    /// Unset: single-sided for autocorrelators, antisymmetric for profiles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            axis: Axis::Z,
            cycles: 9,
            realizations: 30,
            seed: 1,
            estimator: None,
        }
    }
}

impl ProtocolConfig {
    pub fn protocol(&self, fallback: Estimator) -> Protocol {
        Protocol {
            axis: self.axis,
            cycles: self.cycles,
            realizations: self.realizations,
            seed: self.seed,
            estimator: self.estimator.unwrap_or(fallback),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Exponent rows `[start, end)` to classify; unset means the last third.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[usize; 2]>,
    pub tolerance: f64,
    /// First step whose outgoing slope enters the running average.
    pub running_from_step: usize,
    pub departure_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window: None,
            tolerance: DEFAULT_TOLERANCE,
            running_from_step: 6,
            departure_threshold: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Run directory; unset means `<output root>/<command>-<config hash>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
    pub profile: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            formats: vec![Format::Csv],
            profile: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsConfig {
    pub max_qubits: usize,
    pub oracle_qubits: usize,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        LimitsConfig {
            max_qubits: 26,
            oracle_qubits: DEFAULT_ORACLE_LIMIT,
        }
    }
}

/// Two chains joined through one rung site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterConfig {
    pub chain_len: usize,
    /// Attachment positions along chain 1 and chain 2, counted from each
    /// chain's first site.
    pub attach: [usize; 2],
    pub jperp_ratio: f64,
    pub cases: Vec<InteractionVector>,
    /// Fold the rung-site weight into this region instead of reporting it
    /// on its own.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rung_site_to: Option<Region>,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        ScatterConfig {
            chain_len: 8,
            attach: [3, 3],
            jperp_ratio: 4.0,
            cases: vec![
                InteractionVector::ZERO,
                InteractionVector::new(1.0, 1.0, 0.0),
                InteractionVector::new(0.0, 0.0, 1.0),
            ],
            rung_site_to: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudiesConfig {
    pub ratios: Vec<f64>,
    pub lambdas: Vec<InteractionVector>,
    pub taus: Vec<f64>,
    pub cycles: Vec<usize>,
    pub cycle_runs: usize,
}

impl Default for StudiesConfig {
    fn default() -> Self {
        StudiesConfig {
            ratios: vec![1e-4, 0.5, 1.0, 2.0, 4.0],
            lambdas: InteractionVector::STUDIED.to_vec(),
            taus: vec![0.5, 1.0, 2.0],
            cycles: vec![5, 9, 20],
            cycle_runs: 5,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be non-negative and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Field-level checks; geometry is checked when it is built.
    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        positive("physics.j", p.j)?;
        non_negative("physics.jperp_ratio", p.jperp_ratio)?;
        positive("physics.tau", p.tau)?;
        if !p.lambda.is_finite() {
            return Err(Error::Config("physics.lambda must be finite".into()));
        }
        if p.steps < 2 {
            return Err(Error::Config("physics.steps must be at least 2".into()));
        }
        if self.protocol.realizations == 0 {
            return Err(Error::Config("protocol.realizations must be at least 1".into()));
        }
        positive("analysis.tolerance", self.analysis.tolerance)?;
        positive("analysis.departure_threshold", self.analysis.departure_threshold)?;
        if self.analysis.running_from_step == 0 {
            return Err(Error::Config("analysis.running_from_step must be at least 1".into()));
        }
        if let Some([a, b]) = self.analysis.window {
            if a >= b {
                return Err(Error::Config(format!("analysis.window [{a}, {b}) is empty")));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats must not be empty".into()));
        }
        for r in &self.geometry.rungs {
            r.attachment(self.geometry.chain_len)?;
        }
        non_negative("scatter.jperp_ratio", self.scatter.jperp_ratio)?;
        for &r in &self.studies.ratios {
            positive("studies.ratios", r)?;
        }
        for &t in &self.studies.taus {
            positive("studies.taus", t)?;
        }
        if self.studies.cycle_runs == 0 {
            return Err(Error::Config("studies.cycle_runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn folded_lattice(&self) -> Result<LatticeSpec> {
        let g = &self.geometry;
        let rungs = g
            .rungs
            .iter()
            .map(|r| r.attachment(g.chain_len))
            .collect::<Result<Vec<_>>>()?;
        let spec = build_folded_chain(g.chain_len, &rungs, g.rung_style, SiteId(g.probe))?;
        self.check_size(spec.n())?;
        Ok(spec)
    }

    pub fn scattering_lattice(&self) -> Result<LatticeSpec> {
        let s = &self.scatter;
        if s.attach[0] >= s.chain_len || s.attach[1] >= s.chain_len {
            return Err(Error::Config(format!(
                "scatter.attach {:?} outside chains of {} sites",
                s.attach, s.chain_len
            )));
        }
        let spec = build_scattering_geometry(
            s.chain_len,
            SiteId(s.attach[0]),
            SiteId(s.chain_len + s.attach[1]),
        )?;
        self.check_size(spec.n())?;
        Ok(spec)
    }

    pub fn check_size(&self, n: usize) -> Result<()> {
        if n > self.limits.max_qubits {
            return Err(Error::ResourceLimit {
                what: "state vector",
                qubits: n,
                limit: self.limits.max_qubits,
            });
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<FloquetSchedule> {
        FloquetSchedule::new(self.physics.tau, self.physics.steps)
    }

    /// Program on `spec` with the configured physics and an explicit rung.
    pub fn program(&self, spec: &LatticeSpec, lambda: InteractionVector, ratio: f64) -> Result<TrotterProgram> {
        let j = self.physics.j;
        compile_program(spec, &self.schedule()?, j, ratio * j, lambda)
    }
}
