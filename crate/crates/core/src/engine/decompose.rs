//! Hardware-style circuit for a two-site propagator: three CNOTs dressed
//! with single-qubit rotations. Equal to the exact propagator up to a
//! global phase; simulation uses the exact 4x4 matrix and this circuit
//! serves as a cross-check.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;

use crate::linalg::{self, identity4, kron_pair, Mat2, Mat4, ONE, PAULI_I, ZERO};
use crate::model::Coupling;

/// Elementary gate on the local pair; qubit 0 is the first bond site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementaryGate {
    Cnot { control: usize, target: usize },
    Rx { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    H { qubit: usize },
    Phase { qubit: usize, phi: f64 },
}

fn rx(theta: f64) -> Mat2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

fn rz(theta: f64) -> Mat2 {
    [[C64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, C64::from_polar(1.0, theta / 2.0)]]
}

fn hadamard() -> Mat2 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn phase(phi: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, C64::from_polar(1.0, phi)]]
}

fn on_qubit(q: usize, m: &Mat2) -> Mat4 {
    if q == 0 {
        kron_pair(m, &PAULI_I)
    } else {
        kron_pair(&PAULI_I, m)
    }
}

impl ElementaryGate {
    pub fn matrix(&self) -> Mat4 {
        match *self {
            ElementaryGate::Cnot { control, target } => {
                let mut m = [[ZERO; 4]; 4];
                for col in 0..4usize {
                    let c = (col >> control) & 1;
                    let row = col ^ (c << target);
                    m[row][col] = ONE;
                }
                m
            }
            ElementaryGate::Rx { qubit, theta } => on_qubit(qubit, &rx(theta)),
            ElementaryGate::Rz { qubit, theta } => on_qubit(qubit, &rz(theta)),
            ElementaryGate::H { qubit } => on_qubit(qubit, &hadamard()),
            ElementaryGate::Phase { qubit, phi } => on_qubit(qubit, &phase(phi)),
        }
    }
}

/// Circuit for `exp(-i c.strength (lx XX + ly YY + lz ZZ) tau / 4)` in time
/// order (first element acts first).
pub fn decompose_propagator(c: &Coupling, tau: f64) -> Vec<ElementaryGate> {
    use ElementaryGate::*;
    let jt = c.strength * tau;
    let v = c.vector;
    let cnot = Cnot { control: 0, target: 1 };
    vec![
        cnot,
        Rx { qubit: 0, theta: jt * v.x / 2.0 },
        Rz { qubit: 1, theta: jt * v.z / 2.0 },
        H { qubit: 0 },
        cnot,
        Phase { qubit: 0, phi: -FRAC_PI_2 },
        Rz { qubit: 1, theta: -jt * v.y / 2.0 },
        H { qubit: 0 },
        cnot,
        Rx { qubit: 0, theta: FRAC_PI_2 },
        Rx { qubit: 1, theta: -FRAC_PI_2 },
    ]
}

/// Product of a time-ordered circuit.
pub fn compose(gates: &[ElementaryGate]) -> Mat4 {
    gates
        .iter()
        .fold(identity4(), |acc, g| linalg::matmul4(&g.matrix(), &acc))
}
