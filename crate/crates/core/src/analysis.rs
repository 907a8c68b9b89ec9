//! Log-log slopes of a correlator, their running average with propagated
//! errors, transport classification and resilience ranking.
//!
//! Row `k` of an [`ExponentSeries`] is the slope between series indices
//! `first + k` and `first + k + 1`, where `first` is the first index with
//! `t > 0`. A slope touching a non-positive `C` is kept with `valid =
//! false` and left out of every running average. Running averages take
//! the valid slopes whose earlier step is at least `running_from`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::correlator::CorrelationSeries;
use crate::error::{Error, Result};

pub const BALLISTIC: f64 = -1.0;
pub const SUPERDIFFUSIVE: f64 = -2.0 / 3.0;
pub const DIFFUSIVE: f64 = -0.5;
pub const DEFAULT_TOLERANCE: f64 = 0.07;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSeries {
    /// Series index of the later point of each slope.
    pub steps: Vec<usize>,
    /// Time of the later point of each slope.
    pub times: Vec<f64>,
    pub local: Vec<f64>,
    pub sigma_local: Vec<f64>,
    pub valid: Vec<bool>,
    pub running_from: usize,
    /// NaN until the first averaged slope.
    pub running: Vec<f64>,
    pub sigma_running: Vec<f64>,
}

impl ExponentSeries {
    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }

    /// Recompute the running average from slopes starting at `step`.
    pub fn with_running_from(mut self, step: usize) -> Self {
        self.running_from = step;
        running_average(&mut self);
        self
    }
}

/// Slopes and their errors from raw arrays.
pub fn local_exponents_from(times: &[f64], c: &[f64], sigma: &[f64]) -> Result<ExponentSeries> {
    if times.len() != c.len() || c.len() != sigma.len() {
        return Err(Error::invalid("times, values and errors differ in length"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    let first = times.iter().position(|&t| t > 0.0).unwrap_or(times.len());
    let mut es = ExponentSeries {
        steps: Vec::new(),
        times: Vec::new(),
        local: Vec::new(),
        sigma_local: Vec::new(),
        valid: Vec::new(),
        running_from: first,
        running: Vec::new(),
        sigma_running: Vec::new(),
    };
    for i in first..times.len().saturating_sub(1) {
        let dlt = times[i + 1].ln() - times[i].ln();
        let ok = c[i] > 0.0 && c[i + 1] > 0.0;
        let (y, s) = if ok {
            let y = (c[i + 1].ln() - c[i].ln()) / dlt;
            let s = ((sigma[i + 1] / c[i + 1]).powi(2) + (sigma[i] / c[i]).powi(2)).sqrt() / dlt;
            (y, s)
        } else {
            (f64::NAN, f64::NAN)
        };
        es.steps.push(i + 1);
        es.times.push(times[i + 1]);
        es.local.push(y);
        es.sigma_local.push(s);
        es.valid.push(ok);
    }
    running_average(&mut es);
    Ok(es)
}

pub fn local_exponents(series: &CorrelationSeries) -> Result<ExponentSeries> {
    local_exponents_from(&series.times, &series.mean, &series.stderr)
}

/// Fill `running` and `sigma_running` from the valid local slopes.
pub fn running_average(es: &mut ExponentSeries) {
    es.running.clear();
    es.sigma_running.clear();
    let (mut count, mut sum, mut var) = (0usize, 0.0, 0.0);
    for k in 0..es.local.len() {
        if es.valid[k] && es.steps[k] > es.running_from {
            count += 1;
            sum += es.local[k];
            var += es.sigma_local[k] * es.sigma_local[k];
        }
        if count == 0 {
            es.running.push(f64::NAN);
            es.sigma_running.push(f64::NAN);
        } else {
            es.running.push(sum / count as f64);
            es.sigma_running.push(var.sqrt() / count as f64);
        }
    }
}

/// Last third of `len` rows.
pub fn default_window(len: usize) -> Range<usize> {
    let k = len.div_ceil(3);
    len - k..len
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportLabel {
    Ballistic,
    Superdiffusive,
    Diffusive,
    Intermediate,
}

impl TransportLabel {
    pub fn reference(self) -> Option<f64> {
        match self {
            TransportLabel::Ballistic => Some(BALLISTIC),
            TransportLabel::Superdiffusive => Some(SUPERDIFFUSIVE),
            TransportLabel::Diffusive => Some(DIFFUSIVE),
            TransportLabel::Intermediate => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportClass {
    pub label: TransportLabel,
    /// Mean running exponent over the window.
    pub exponent: f64,
    /// Signed offset from -2/3; negative is the ballistic side.
    pub deviation: f64,
}

/// Mean of the finite running exponents inside `window`.
pub fn window_mean(es: &ExponentSeries, window: Range<usize>) -> Result<f64> {
    if window.is_empty() || window.end > es.len() {
        return Err(Error::invalid(format!(
            "window {}..{} is empty or outside {} rows",
            window.start,
            window.end,
            es.len()
        )));
    }
    let vals: Vec<f64> = es.running[window].iter().copied().filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        return Err(Error::invalid("window holds no valid running exponent"));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn classify_exponent(exponent: f64, tol: f64) -> TransportLabel {
    let (label, dist) = [
        (TransportLabel::Ballistic, BALLISTIC),
        (TransportLabel::Superdiffusive, SUPERDIFFUSIVE),
        (TransportLabel::Diffusive, DIFFUSIVE),
    ]
    .into_iter()
    .map(|(l, r)| (l, (exponent - r).abs()))
    .fold((TransportLabel::Intermediate, f64::INFINITY), |best, cand| {
        if cand.1 < best.1 {
            cand
        } else {
            best
        }
    });
    if dist <= tol {
        label
    } else {
        TransportLabel::Intermediate
    }
}

pub fn classify(es: &ExponentSeries, window: Range<usize>, tol: f64) -> Result<TransportClass> {
    let exponent = window_mean(es, window)?;
    Ok(TransportClass {
        label: classify_exponent(exponent, tol),
        exponent,
        deviation: exponent - SUPERDIFFUSIVE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    /// Position of the run in the input list.
    pub index: usize,
    pub exponent: f64,
    pub deviation: f64,
}

/// Runs ordered by `|exponent + 2/3|`, ties kept in input order.
pub fn resilience_rank(runs: &[ExponentSeries], window: Range<usize>) -> Result<Vec<RankEntry>> {
    if let Some(first) = runs.first() {
        if runs.iter().any(|r| r.times != first.times) {
            return Err(Error::invalid("runs have different time grids"));
        }
    }
    let mut out = runs
        .iter()
        .enumerate()
        .map(|(index, es)| {
            let exponent = window_mean(es, window.clone())?;
            Ok(RankEntry {
                index,
                exponent,
                deviation: exponent - SUPERDIFFUSIVE,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.deviation.abs().total_cmp(&b.deviation.abs()));
    Ok(out)
}

/// Step of the first row whose running exponent lies more than
/// `threshold` beyond -2/3 on the side of `toward` (positive: diffusive,
/// negative: ballistic).
pub fn departure_step(es: &ExponentSeries, threshold: f64, toward: f64) -> Option<usize> {
    if toward == 0.0 || !toward.is_finite() {
        return None;
    }
    es.running
        .iter()
        .position(|r| r.is_finite() && (r - SUPERDIFFUSIVE) * toward.signum() > threshold)
        .map(|k| es.steps[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_law(p: f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..=n).map(|k| k as f64).collect();
        let c = t.iter().map(|&x| if x == 0.0 { 1.0 } else { x.powf(p) }).collect();
        (t, c, vec![0.0; n + 1])
    }

    #[test]
    fn pure_power_law_is_exact() {
        for p in [-2.0, -1.0, -2.0 / 3.0, -0.5, -0.1, 0.0] {
            let (t, c, s) = power_law(p, 20);
            let es = local_exponents_from(&t, &c, &s).unwrap();
            assert_eq!(es.len(), 19);
            assert_eq!(es.steps[0], 2);
            for k in 0..es.len() {
                assert!((es.local[k] - p).abs() < 1e-12);
                assert!((es.running[k] - p).abs() < 1e-12);
                assert_eq!(es.sigma_local[k], 0.0);
            }
        }
    }

    #[test]
    fn halving_per_doubling_is_ballistic() {
        let es = local_exponents_from(&[1.0, 2.0], &[0.5, 0.25], &[0.0, 0.0]).unwrap();
        assert!((es.local[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn error_formula() {
        let es = local_exponents_from(&[1.0, 2.0], &[0.5, 0.25], &[0.01, 0.01]).unwrap();
        let want = (0.0004f64 + 0.0016).sqrt() / 2f64.ln();
        assert!((es.sigma_local[0] - want).abs() < 1e-15);
    }

    #[test]
    fn running_average_rules() {
        let mut es = local_exponents_from(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], &[0.0; 3]).unwrap();
        es.local = vec![-1.0, 0.0];
        es.sigma_local = vec![0.3, 0.3];
        running_average(&mut es);
        assert_eq!(es.running, vec![-1.0, -0.5]);
        assert!((es.sigma_running[1] - 0.3 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn running_start_skips_early_slopes() {
        let t: Vec<f64> = (0..=5).map(|k| k as f64).collect();
        let mut es = local_exponents_from(&t, &[1.0; 6], &[0.0; 6]).unwrap();
        assert_eq!(es.running_from, 1);
        es.local = vec![-3.0, -1.0, -0.5, -0.6];
        es.sigma_local = vec![0.1; 4];
        let es = es.with_running_from(3);
        assert!(es.running[0].is_nan() && es.running[1].is_nan());
        assert_eq!(es.running[2], -0.5);
        assert!((es.running[3] + 0.55).abs() < 1e-15);
        assert!((es.sigma_running[3] - 0.1 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_slopes_are_flagged_and_skipped() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let c = [0.5, -0.1, 0.2, 0.1];
        let es = local_exponents_from(&t, &c, &[0.0; 4]).unwrap();
        assert_eq!(es.valid, vec![false, false, true]);
        assert!(es.running[0].is_nan() && es.running[1].is_nan());
        assert!((es.running[2] - es.local[2]).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(local_exponents_from(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(local_exponents_from(&[1.0, 2.0], &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn classification_bands() {
        assert_eq!(classify_exponent(-0.66, DEFAULT_TOLERANCE), TransportLabel::Superdiffusive);
        assert_eq!(classify_exponent(-5.0 / 6.0, DEFAULT_TOLERANCE), TransportLabel::Intermediate);
        assert_eq!(classify_exponent(-0.98, DEFAULT_TOLERANCE), TransportLabel::Ballistic);
        assert_eq!(classify_exponent(-0.52, DEFAULT_TOLERANCE), TransportLabel::Diffusive);
    }

    #[test]
    fn classify_rejects_empty_window() {
        let (t, c, s) = power_law(-0.5, 6);
        let es = local_exponents_from(&t, &c, &s).unwrap();
        assert!(classify(&es, 2..2, DEFAULT_TOLERANCE).is_err());
        assert!(classify(&es, 0..99, DEFAULT_TOLERANCE).is_err());
        let cls = classify(&es, default_window(es.len()), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(cls.label, TransportLabel::Diffusive);
        assert!(cls.deviation > 0.0);
    }

    #[test]
    fn default_window_is_last_third() {
        assert_eq!(default_window(19), 12..19);
        assert_eq!(default_window(3), 2..3);
        assert_eq!(default_window(1), 0..1);
    }

    #[test]
    fn ranking_is_stable_and_checks_grids() {
        let (t, c, s) = power_law(-0.6, 9);
        let es = local_exponents_from(&t, &c, &s).unwrap();
        let (t2, c2, s2) = power_law(-0.9, 9);
        let far = local_exponents_from(&t2, &c2, &s2).unwrap();
        let w = default_window(es.len());
        let r = resilience_rank(&[far.clone(), es.clone(), es.clone()], w.clone()).unwrap();
        assert_eq!(r.iter().map(|e| e.index).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert!(r[2].deviation < 0.0);

        let (t3, c3, s3) = power_law(-0.6, 12);
        let other = local_exponents_from(&t3, &c3, &s3).unwrap();
        assert!(resilience_rank(&[es, other], w).is_err());
    }

    #[test]
    fn departure_step_finds_first_crossing() {
        let t: Vec<f64> = (1..=6).map(|k| k as f64).collect();
        let mut es = local_exponents_from(&t, &[1.0; 6], &[0.0; 6]).unwrap();
        es.local = vec![-0.66, -0.67, -0.6, -0.5, -0.4];
        running_average(&mut es);
        // running: -0.66, -0.665, -0.643, -0.6075, -0.566
        assert_eq!(departure_step(&es, 0.05, 1.0), Some(es.steps[3]));
        assert_eq!(departure_step(&es, 0.05, -1.0), None);
        assert_eq!(departure_step(&es, 0.05, 0.0), None);
    }
}
