use rayon::prelude::*;

use super::state::{schedule_passes, StateVector};
use super::probe_basis_rotation;
use crate::error::{Error, Result};
use crate::model::{Axis, TrotterProgram};

/// Default largest register for the exact trace, which costs `2^n` full
/// evolutions.
pub const DEFAULT_ORACLE_LIMIT: usize = 12;

/// Exact `Tr[sigma_axis^i(t) sigma_axis^p(0)] / 2^n` for `t = 0..=steps`.
///
/// The trace runs over the eigenbasis of `sigma_axis^p` (computational on
/// every other site), so each basis vector contributes its `±1` eigenvalue
/// times `<sigma_axis^i(t)>` in that vector.
pub fn dense_trace_correlator(
    prog: &TrotterProgram,
    site_i: usize,
    site_p: usize,
    axis: Axis,
    steps: usize,
    limit: usize,
) -> Result<Vec<f64>> {
    let n = prog.n();
    if n > limit {
        return Err(Error::ResourceLimit {
            what: "dense trace oracle",
            qubits: n,
            limit,
        });
    }
    if site_i >= n || site_p >= n {
        return Err(Error::invalid(format!(
            "sites ({site_i},{site_p}) out of range for {n} qubits"
        )));
    }
    let gates = prog.step_gates();
    let targets: Vec<_> = gates.iter().map(|g| g.targets()).collect();
    let passes = schedule_passes(n, &targets);
    let rotation = probe_basis_rotation(axis);

    let per_basis = |k: usize| -> Result<Vec<f64>> {
        let mut psi = StateVector::basis(n, k)?;
        if let Some(r) = &rotation {
            psi.apply_single(site_p, r)?;
        }
        let sign = if (k >> site_p) & 1 == 0 { 1.0 } else { -1.0 };
        let mut out = Vec::with_capacity(steps + 1);
        out.push(sign * psi.expect_pauli(site_i, axis)?);
        for _ in 0..steps {
            psi.run_passes(gates, &passes);
            out.push(sign * psi.expect_pauli(site_i, axis)?);
        }
        Ok(out)
    };
    let rows: Vec<Vec<f64>> = (0..1usize << n)
        .into_par_iter()
        .map(per_basis)
        .collect::<Result<_>>()?;

    let mut total = vec![0.0; steps + 1];
    for row in &rows {
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
    }
    let dim = (1usize << n) as f64;
    Ok(total.into_iter().map(|v| v / dim).collect())
}
