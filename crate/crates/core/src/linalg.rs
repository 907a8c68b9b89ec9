//! Fixed-size complex matrices for one- and two-qubit operators.
//!
//! Two-qubit matrices act on an ordered pair `(q0, q1)` with local basis
//! index `b0 + 2*b1`, where `b0` is the bit of `q0`. This matches the
//! little-endian site-to-bit layout of the state vector.

use num_complex::Complex64 as C64;

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub const PAULI_I: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
pub const PAULI_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
pub const PAULI_Y: Mat2 = [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]];
pub const PAULI_Z: Mat2 = [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]];

pub fn identity4() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = ONE;
    }
    m
}

pub fn swap4() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][2] = ONE;
    m[2][1] = ONE;
    m[3][3] = ONE;
    m
}

/// `a` acting on `q0` and `b` acting on `q1`.
pub fn kron_pair(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] = a[r & 1][c & 1] * b[r >> 1][c >> 1];
        }
    }
    m
}

pub fn matmul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += a[r][k] * b[k][c];
            }
            m[r][c] = acc;
        }
    }
    m
}

pub fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    m
}

pub fn dagger4(a: &Mat4) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] = a[c][r].conj();
        }
    }
    m
}

pub fn add4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = *a;
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] += b[r][c];
        }
    }
    m
}

pub fn scale4(a: &Mat4, s: C64) -> Mat4 {
    let mut m = *a;
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    m
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff4(a: &Mat4, b: &Mat4) -> f64 {
    let mut d = 0.0f64;
    for r in 0..4 {
        for c in 0..4 {
            d = d.max((a[r][c] - b[r][c]).norm());
        }
    }
    d
}

pub fn commutator_norm4(a: &Mat4, b: &Mat4) -> f64 {
    max_abs_diff4(&matmul4(a, b), &matmul4(b, a))
}

pub fn is_identity4(a: &Mat4) -> bool {
    for r in 0..4 {
        for c in 0..4 {
            let want = if r == c { ONE } else { ZERO };
            if a[r][c] != want {
                return false;
            }
        }
    }
    true
}

pub fn unitarity_error4(a: &Mat4) -> f64 {
    if a.iter().flatten().any(|x| !x.is_finite()) {
        return f64::NAN;
    }
    max_abs_diff4(&matmul4(&dagger4(a), a), &identity4())
}

/// Elementwise deviation of `a` from `b` after removing the best global
/// phase, taken from the largest entry of `b`.
pub fn phase_aligned_diff4(a: &Mat4, b: &Mat4) -> f64 {
    let mut best = (0usize, 0usize, 0.0f64);
    for r in 0..4 {
        for c in 0..4 {
            let v = b[r][c].norm();
            if v > best.2 {
                best = (r, c, v);
            }
        }
    }
    if best.2 == 0.0 {
        return max_abs_diff4(a, b);
    }
    let ratio = a[best.0][best.1] / b[best.0][best.1];
    let phase = if ratio.norm() > 0.0 {
        ratio / ratio.norm()
    } else {
        ONE
    };
    max_abs_diff4(a, &scale4(b, phase))
}
