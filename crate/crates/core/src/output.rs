//! Run directories: CSV tables, JSON reports, a gnuplot script and a
//! manifest with hashes of everything written.
//!
//! Floats use Rust's shortest round-trip `Display`, so every number reads
//! back to the same `f64` and output does not depend on locale.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::ExponentSeries;
use crate::config::ExperimentConfig;
use crate::correlator::{CorrelationSeries, ScatteringSeries, SpatialProfile};
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of a config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a ExperimentConfig,
    pub config_sha256: String,
    pub master_seed: u64,
    /// How per-realization seeds follow from the master seed.
    pub seed_derivation: &'a str,
    pub threads: usize,
    pub simd: bool,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

pub struct RunDir {
    root: PathBuf,
    files: Vec<FileEntry>,
    started: Instant,
}

fn csv_line(fields: &[&dyn Display]) -> String {
    let mut s = fields.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(RunDir {
            root,
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Directory for a sub-run, sharing nothing with this one.
    pub fn child(&self, name: &str) -> Result<RunDir> {
        RunDir::create(self.root.join(name))
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn write_correlations(&mut self, name: &str, s: &CorrelationSeries) -> Result<()> {
        let mut out = String::from("step,time,mean,stderr,realizations\n");
        for k in 0..s.len() {
            out += &csv_line(&[&k, &s.times[k], &s.mean[k], &s.stderr[k], &s.realizations]);
        }
        self.write(name, &out)
    }

    pub fn write_exponents(&mut self, name: &str, es: &ExponentSeries) -> Result<()> {
        let mut out = String::from("step,time,Y,sigma_Y,Ybar,sigma_Ybar,valid\n");
        for k in 0..es.len() {
            out += &csv_line(&[
                &es.steps[k],
                &es.times[k],
                &es.local[k],
                &es.sigma_local[k],
                &es.running[k],
                &es.sigma_running[k],
                &u8::from(es.valid[k]),
            ]);
        }
        self.write(name, &out)
    }

    pub fn write_profile(&mut self, name: &str, p: &SpatialProfile) -> Result<()> {
        let mut out = String::from("step,site,value,stderr\n");
        for (k, (row, err)) in p.mean.iter().zip(&p.stderr).enumerate() {
            for (i, (v, e)) in row.iter().zip(err).enumerate() {
                out += &csv_line(&[&k, &i, v, e]);
            }
        }
        self.write(name, &out)
    }

    pub fn write_scattering(&mut self, name: &str, s: &ScatteringSeries) -> Result<()> {
        let mut out = String::from("step,time,R,T_same,T_cross,rung_site\n");
        for k in 0..s.times.len() {
            out += &csv_line(&[
                &k,
                &s.times[k],
                &s.reflection[k],
                &s.transmission_same[k],
                &s.transmission_cross[k],
                &s.rung_site[k],
            ]);
        }
        self.write(name, &out)
    }

    /// Gnuplot script that plots the given CSV columns against column 2.
    pub fn write_plot(&mut self, series: &[(&str, usize, &str)], logscale: bool) -> Result<()> {
        let mut gp = String::from("set datafile separator ','\nset key outside\nset xlabel 'time'\n");
        if logscale {
            gp += "set logscale xy\n";
        }
        let parts: Vec<String> = series
            .iter()
            .map(|(file, col, title)| format!("'{file}' using 2:{col} skip 1 with linespoints title '{title}'"))
            .collect();
        gp += &format!("plot {}\n", parts.join(", \\\n     "));
        self.write("plot.gp", &gp)
    }

    /// Write `manifest.json`, listing every file written so far.
    pub fn finish(self, command: &str, cfg: &ExperimentConfig) -> Result<PathBuf> {
        let manifest = Manifest {
            command,
            version: VERSION,
            config: cfg,
            config_sha256: config_hash(cfg),
            master_seed: cfg.protocol.seed,
            seed_derivation: "realization m uses ChaCha8 seeded with splitmix(splitmix(seed) ^ m * 0xD1B54A32D192ED03)",
            threads: rayon::current_num_threads(),
            simd: crate::engine::simd_enabled(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            files: self.files.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(self.root)
    }
}
