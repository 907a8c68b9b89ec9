//! State-vector simulation: typicality state preparation, program
//! execution, expectation values and an exact trace oracle.
//!
//! Memory use is 16 bytes per amplitude, `16 * 2^n` bytes per state
//! (16 MiB at n = 20, 256 MiB at n = 24), per concurrently running
//! realization.

mod decompose;
mod dense;
mod gate;
mod kernel;
mod random;
mod state;

pub use decompose::{compose, decompose_propagator, ElementaryGate};
pub use dense::{dense_trace_correlator, DEFAULT_ORACLE_LIMIT};
pub use gate::{GateMatrix, UNITARITY_TOL};
pub use kernel::simd_enabled;
pub use random::{derive_seed, haar_unitary4, rng_from_seed};
pub use state::{StateVector, MAX_QUBITS};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Layer, LatticeSpec};
use crate::linalg::{matmul2, Mat2, ONE, PAULI_X, PAULI_Z, ZERO};
use crate::model::{Axis, TrotterProgram};

/// Scrambling depth and the seed pair that fixes every random gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomizationConfig {
    pub cycles: usize,
    pub seed: u64,
    pub realization_index: u64,
}

/// Rotation taking `|0>`/`|1>` to the `+1`/`-1` eigenstates of `axis`.
pub(crate) fn probe_basis_rotation(axis: Axis) -> Option<Mat2> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let hadamard = [[h, h], [h, -h]];
    match axis {
        Axis::Z => None,
        Axis::X => Some(hadamard),
        Axis::Y => {
            let s = [[ONE, ZERO], [ZERO, C64::new(0.0, 1.0)]];
            Some(matmul2(&s, &hadamard))
        }
    }
}

/// `c` cycles of Haar-random two-site gates on the R, G and B bonds, in
/// that order, skipping every bond that touches `skip`.
pub fn scramble(
    state: &mut StateVector,
    spec: &LatticeSpec,
    skip: usize,
    rc: &RandomizationConfig,
) -> Result<()> {
    let mut rng = rng_from_seed(derive_seed(rc.seed, rc.realization_index));
    let bonds: Vec<_> = Layer::ORDER
        .iter()
        .flat_map(|&l| spec.layer_bonds(l))
        .filter(|b| !b.touches(crate::lattice::SiteId(skip)))
        .copied()
        .collect();
    let mut gates = Vec::with_capacity(bonds.len());
    for _ in 0..rc.cycles {
        gates.clear();
        for b in &bonds {
            gates.push(GateMatrix::new(b.a, b.b, haar_unitary4(&mut rng))?);
        }
        state.apply_gates(&gates)?;
    }
    Ok(())
}

/// Typicality initial state: every non-probe site scrambled from `|0>`,
/// the probe in the `+1` eigenstate of `sigma_axis`.
pub fn prepare_probe_random_state(
    spec: &LatticeSpec,
    axis: Axis,
    rc: &RandomizationConfig,
) -> Result<StateVector> {
    spec.check()?;
    let probe = spec.probe().0;
    let mut state = StateVector::zero(spec.n())?;
    scramble(&mut state, spec, probe, rc)?;
    if let Some(r) = probe_basis_rotation(axis) {
        state.apply_single(probe, &r)?;
    }
    Ok(state)
}

/// Map the probe's `+1` eigenstate of `sigma_axis` to the `-1` one.
pub fn flip_probe(state: &mut StateVector, probe: usize, axis: Axis) -> Result<()> {
    let flip = match axis {
        Axis::Z => PAULI_X,
        Axis::X | Axis::Y => PAULI_Z,
    };
    state.apply_single(probe, &flip)
}

/// Run every step of `prog`, calling `hook(N, state)` after step `N`
/// (`N = 1..=steps`).
pub fn run_program<F>(state: &mut StateVector, prog: &TrotterProgram, mut hook: F) -> Result<()>
where
    F: FnMut(usize, &StateVector),
{
    if state.n() != prog.n() {
        return Err(Error::invalid(format!(
            "program is for {} qubits, state has {}",
            prog.n(),
            state.n()
        )));
    }
    let gates = prog.step_gates();
    let targets: Vec<_> = gates.iter().map(|g| g.targets()).collect();
    let passes = state::schedule_passes(state.n(), &targets);
    for step in 1..=prog.schedule().steps {
        state.run_passes(gates, &passes);
        hook(step, state);
    }
    Ok(())
}
