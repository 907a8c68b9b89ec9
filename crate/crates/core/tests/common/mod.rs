//! Dense reference implementations built on nalgebra, sharing no code with
//! the state-vector engine.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use superdiff::linalg::Mat4;
use superdiff::model::{Axis, TrotterProgram};

pub type Dense = DMatrix<C64>;

pub fn pauli(axis: Axis) -> Dense {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let v = match axis {
        Axis::X => [z, o, o, z],
        Axis::Y => [z, -i, i, z],
        Axis::Z => [o, z, z, -o],
    };
    DMatrix::from_row_slice(2, 2, &v)
}

/// Single-site operator on an `n`-qubit register; site `s` is bit `s`.
pub fn on_site(n: usize, s: usize, m: &Dense) -> Dense {
    let mut out = DMatrix::identity(1, 1);
    for q in (0..n).rev() {
        let f = if q == s { m.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

/// Two-site gate on an `n`-qubit register, local index `b(q0) + 2 b(q1)`.
pub fn embed(n: usize, q0: usize, q1: usize, m: &Mat4) -> Dense {
    let dim = 1 << n;
    let mut u = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let c = ((col >> q0) & 1) | (((col >> q1) & 1) << 1);
        let base = col & !(1 << q0) & !(1 << q1);
        for r in 0..4 {
            let row = base | ((r & 1) << q0) | ((r >> 1) << q1);
            u[(row, col)] = m[r][c];
        }
    }
    u
}

pub fn to_dense4(m: &Mat4) -> Dense {
    DMatrix::from_fn(4, 4, |r, c| m[r][c])
}

/// One Floquet step as a dense matrix.
pub fn step_unitary(prog: &TrotterProgram) -> Dense {
    let n = prog.n();
    let mut u = DMatrix::identity(1 << n, 1 << n);
    for g in prog.step_gates() {
        let (a, b) = g.targets();
        u = embed(n, a, b, g.matrix()) * u;
    }
    u
}

/// `Tr[sigma^i(t) sigma^p] / 2^n` for `t = 0..=steps`.
pub fn trace_correlator(prog: &TrotterProgram, i: usize, p: usize, axis: Axis, steps: usize) -> Vec<f64> {
    let n = prog.n();
    let u = step_unitary(prog);
    let si = on_site(n, i, &pauli(axis));
    let sp = on_site(n, p, &pauli(axis));
    let mut ut = DMatrix::identity(1 << n, 1 << n);
    let mut out = Vec::new();
    for _ in 0..=steps {
        let heis = ut.adjoint() * &si * &ut;
        out.push((heis * &sp).trace().re / (1u64 << n) as f64);
        ut = &u * ut;
    }
    out
}

/// `max |a e^{i phi} - b|` with the phase chosen to align `a` to `b`.
pub fn phase_aligned(a: &Dense, b: &Dense) -> f64 {
    let ov = (a.adjoint() * b).trace();
    let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
    (a * ph - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &Dense, b: &Dense) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
