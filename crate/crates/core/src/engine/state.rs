//! Dense state vector and its gate / expectation kernels.
//!
//! Site `i` is bit `i` of the amplitude index and `|0>` is the `+1`
//! eigenstate of `Z`. Every kernel performs the same floating-point
//! operations for a given input regardless of how many worker threads run
//! it; reductions are summed per fixed-size chunk and then in chunk order.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::gate::GateMatrix;
use super::kernel::{apply_quads, insert_zero};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, ONE, ZERO};
use crate::model::Axis;

/// Gates whose targets both lie below this bit are applied block by block,
/// several gates per pass over a cache-sized block.
pub(crate) const BLOCK_BITS: usize = 15;
/// Work below this many qubits runs on the calling thread.
pub(crate) const PAR_MIN_QUBITS: usize = 16;
const REDUCE_CHUNK_BITS: usize = 12;
const PAR_GROUP_BITS: usize = 12;

/// Hard ceiling on the register size this engine will allocate.
pub const MAX_QUBITS: usize = 34;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

// https://github.com/rayon-rs/rayon/issues/2
#[derive(Clone, Copy)]
struct SendPtr(*mut C64);

// SAFETY: used only to hand disjoint index sets of one buffer to workers.
unsafe impl Send for SendPtr {}
// SAFETY: as above.
unsafe impl Sync for SendPtr {}

impl SendPtr {
    fn get(self) -> *mut C64 {
        self.0
    }
}

fn use_parallel(n: usize) -> bool {
    n >= PAR_MIN_QUBITS && rayon::current_num_threads() > 1
}

fn apply_gate_slice(amps: &mut [C64], g: &GateMatrix, parallel: bool) {
    let q = g.quads();
    let m = g.matrix();
    let quads = amps.len() >> 2;
    if parallel && quads >= (1 << PAR_GROUP_BITS) {
        let ptr = SendPtr(amps.as_mut_ptr());
        let group = 1usize << PAR_GROUP_BITS;
        (0..quads / group).into_par_iter().for_each(move |c| {
            // SAFETY: distinct k map to disjoint index quadruples, all within
            // the buffer since both targets are below log2(len).
            unsafe { apply_quads(ptr.get(), q, m, c * group..(c + 1) * group) }
        });
    } else {
        // SAFETY: exclusive borrow; indices in bounds as above.
        unsafe { apply_quads(amps.as_mut_ptr(), q, m, 0..quads) }
    }
}

fn apply_single_slice(amps: &mut [C64], q: usize, m: &Mat2) {
    let bit = 1usize << q;
    for k in 0..amps.len() / 2 {
        let i0 = insert_zero(k, q);
        let i1 = i0 | bit;
        let (a, b) = (amps[i0], amps[i1]);
        amps[i0] = m[0][0] * a + m[0][1] * b;
        amps[i1] = m[1][0] * a + m[1][1] * b;
    }
}

/// How a gate sequence is split into passes over memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Pass {
    /// Gates (indices into the sequence) all acting below `BLOCK_BITS`,
    /// applied in order inside each block.
    Blocked(Vec<usize>),
    Single(usize),
}

/// Split a gate sequence into passes. A low gate joins the current blocked
/// pass only if no earlier, not yet scheduled gate shares a site with it,
/// so the result equals sequential application up to reordering of gates
/// with disjoint supports.
pub(crate) fn schedule_passes(n: usize, targets: &[(usize, usize)]) -> Vec<Pass> {
    let block = BLOCK_BITS.min(n);
    let mut remaining: Vec<usize> = (0..targets.len()).collect();
    let mut passes = Vec::new();
    while !remaining.is_empty() {
        let mut blocked_sites = 0u64;
        let mut group = Vec::new();
        let mut rest = Vec::new();
        for &g in &remaining {
            let (a, b) = targets[g];
            let mask = (1u64 << a) | (1u64 << b);
            if a < block && b < block && blocked_sites & mask == 0 {
                group.push(g);
            } else {
                rest.push(g);
                blocked_sites |= mask;
            }
        }
        if group.is_empty() {
            passes.push(Pass::Single(rest.remove(0)));
        } else {
            passes.push(Pass::Blocked(group));
        }
        remaining = rest;
    }
    passes
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    /// Computational basis state `|k>`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        if k >> n != 0 {
            return Err(Error::invalid(format!("basis index {k} out of range for {n} qubits")));
        }
        let mut amps = vec![ZERO; 1usize << n];
        amps[k] = ONE;
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count must be a power of two >= 2, got {len}"
            )));
        }
        let s = StateVector {
            n: len.trailing_zeros() as usize,
            amps,
        };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Numeric(format!("state norm {norm} differs from 1")));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.reduce(|chunk| chunk.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_site(&self, s: usize) -> Result<()> {
        if s >= self.n {
            return Err(Error::invalid(format!(
                "site {s} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    fn check_gate(&self, g: &GateMatrix) -> Result<()> {
        let (a, b) = g.targets();
        self.check_site(a)?;
        self.check_site(b)
    }

    pub fn apply_gate(&mut self, g: &GateMatrix) -> Result<()> {
        self.check_gate(g)?;
        if !g.is_identity() {
            apply_gate_slice(&mut self.amps, g, use_parallel(self.n));
        }
        Ok(())
    }

    /// Apply a one-qubit operator to `site`.
    pub fn apply_single(&mut self, site: usize, m: &Mat2) -> Result<()> {
        self.check_site(site)?;
        apply_single_slice(&mut self.amps, site, m);
        Ok(())
    }

    /// Apply a gate sequence in order, grouping low-site gates into
    /// cache-blocked passes.
    pub fn apply_gates(&mut self, gates: &[GateMatrix]) -> Result<()> {
        for g in gates {
            self.check_gate(g)?;
        }
        let targets: Vec<_> = gates.iter().map(|g| g.targets()).collect();
        let passes = schedule_passes(self.n, &targets);
        self.run_passes(gates, &passes);
        Ok(())
    }

    pub(crate) fn run_passes(&mut self, gates: &[GateMatrix], passes: &[Pass]) {
        let parallel = use_parallel(self.n);
        let block = 1usize << BLOCK_BITS.min(self.n);
        for pass in passes {
            match pass {
                Pass::Single(i) => {
                    if !gates[*i].is_identity() {
                        apply_gate_slice(&mut self.amps, &gates[*i], parallel);
                    }
                }
                Pass::Blocked(ids) => {
                    let work = |chunk: &mut [C64]| {
                        for &i in ids {
                            if !gates[i].is_identity() {
                                apply_gate_slice(chunk, &gates[i], false);
                            }
                        }
                    };
                    if parallel && self.amps.len() > block {
                        self.amps.par_chunks_mut(block).for_each(work);
                    } else {
                        self.amps.chunks_mut(block).for_each(work);
                    }
                }
            }
        }
    }

    /// Fixed-order chunked reduction.
    fn reduce<F>(&self, f: F) -> f64
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        let chunk = 1usize << REDUCE_CHUNK_BITS.min(self.n);
        let partial: Vec<f64> = if use_parallel(self.n) {
            self.amps.par_chunks(chunk).map(&f).collect()
        } else {
            self.amps.chunks(chunk).map(&f).collect()
        };
        partial.iter().sum()
    }

    /// `<psi| sigma_axis^site |psi>`.
    pub fn expect_pauli(&self, site: usize, axis: Axis) -> Result<f64> {
        self.check_site(site)?;
        let bit = 1usize << site;
        let value = match axis {
            Axis::Z => {
                // same operation order as `expect_all_z`, so both agree bitwise
                let chunk = 1usize << REDUCE_CHUNK_BITS.min(self.n);
                self.reduce_indexed(chunk, |start, c| {
                    let (mut total, mut ones) = (0.0, 0.0);
                    for (j, a) in c.iter().enumerate() {
                        let p = a.norm_sqr();
                        total += p;
                        if (start + j) & bit != 0 {
                            ones += p;
                        }
                    }
                    total - 2.0 * ones
                })
            }
            Axis::X | Axis::Y => {
                let pairs = self.amps.len() / 2;
                let chunk = 1usize << REDUCE_CHUNK_BITS.min(self.n - 1);
                let amps = &self.amps;
                let term = move |k: usize| {
                    let i0 = insert_zero(k, site);
                    let z = amps[i0].conj() * amps[i0 | bit];
                    if axis == Axis::X {
                        2.0 * z.re
                    } else {
                        2.0 * z.im
                    }
                };
                let sum_range = move |c: usize| (c * chunk..((c + 1) * chunk).min(pairs)).map(term).sum::<f64>();
                let chunks = pairs.div_ceil(chunk);
                let partial: Vec<f64> = if use_parallel(self.n) {
                    (0..chunks).into_par_iter().map(sum_range).collect()
                } else {
                    (0..chunks).map(sum_range).collect()
                };
                partial.iter().sum()
            }
        };
        Ok(value)
    }

    fn reduce_indexed<F>(&self, chunk: usize, f: F) -> f64
    where
        F: Fn(usize, &[C64]) -> f64 + Sync,
    {
        let partial: Vec<f64> = if use_parallel(self.n) {
            self.amps
                .par_chunks(chunk)
                .enumerate()
                .map(|(c, s)| f(c * chunk, s))
                .collect()
        } else {
            self.amps
                .chunks(chunk)
                .enumerate()
                .map(|(c, s)| f(c * chunk, s))
                .collect()
        };
        partial.iter().fold(0.0, |acc, v| acc + v)
    }

    /// `<sigma_axis^i>` for every site.
    pub fn expect_all(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::Z => self.expect_all_z(),
            _ => (0..self.n)
                .map(|s| self.expect_pauli(s, axis).expect("site in range"))
                .collect(),
        }
    }

    fn expect_all_z(&self) -> Vec<f64> {
        let n = self.n;
        let chunk = 1usize << REDUCE_CHUNK_BITS.min(n);
        let per_chunk = |(c, s): (usize, &[C64])| {
            let start = c * chunk;
            let mut total = 0.0;
            let mut ones = vec![0.0; n];
            for (j, a) in s.iter().enumerate() {
                let p = a.norm_sqr();
                total += p;
                let mut idx = start + j;
                let mut q = 0;
                while idx != 0 {
                    if idx & 1 == 1 {
                        ones[q] += p;
                    }
                    idx >>= 1;
                    q += 1;
                }
            }
            ones.iter().map(|o| total - 2.0 * o).collect::<Vec<f64>>()
        };
        let partial: Vec<Vec<f64>> = if use_parallel(n) {
            self.amps.par_chunks(chunk).enumerate().map(per_chunk).collect()
        } else {
            self.amps.chunks(chunk).enumerate().map(per_chunk).collect()
        };
        let mut out = vec![0.0; n];
        for p in &partial {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }
}
