//! Two-qubit update of amplitude quadruples.
//!
//! A quadruple is the four amplitudes that differ only in the two target
//! bits; quadruple `k` has base index `k` with zero bits inserted at both
//! target positions. Local index `c = b0 + 2*b1` with `b0` the bit of `q0`.
//!
//! On x86-64 with AVX2 and FMA the update runs on vector registers; the
//! result is then fused-multiply-add rounded and can differ in the last bit
//! from the portable path. The path is fixed per process.

use std::ops::Range;

use num_complex::Complex64 as C64;

use crate::linalg::Mat4;

/// Insert a zero bit at position `bit`.
#[inline(always)]
pub(crate) fn insert_zero(k: usize, bit: usize) -> usize {
    let low = k & ((1usize << bit) - 1);
    ((k >> bit) << (bit + 1)) | low
}

/// Off-diagonal blocks between `{0,3}` and `{1,2}` are exactly zero, as
/// for every `XX`/`YY`/`ZZ` propagator.
pub(crate) fn is_parity_block(m: &Mat4) -> bool {
    const OFF: [(usize, usize); 8] = [
        (0, 1),
        (0, 2),
        (3, 1),
        (3, 2),
        (1, 0),
        (1, 3),
        (2, 0),
        (2, 3),
    ];
    OFF.iter().all(|&(r, c)| m[r][c] == C64::new(0.0, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Quads {
    pub q0: usize,
    pub q1: usize,
    pub parity: bool,
}

/// Apply `m` to quadruples `ks` of the buffer behind `ptr`.
///
/// # Safety
/// Every index of every quadruple in `ks` must be in bounds, and no other
/// thread may touch those indices during the call.
#[inline]
pub(crate) unsafe fn apply_quads(ptr: *mut C64, g: Quads, m: &Mat4, ks: Range<usize>) {
    #[cfg(target_arch = "x86_64")]
    {
        if simd_available() {
            return avx::apply(ptr, g, m, ks);
        }
    }
    scalar(ptr, g, m, ks)
}

/// Whether gate updates take the vector path in this process.
pub fn simd_enabled() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        simd_available()
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

#[cfg(target_arch = "x86_64")]
fn simd_available() -> bool {
    use std::sync::OnceLock;
    static AVAILABLE: OnceLock<bool> = OnceLock::new();
    *AVAILABLE.get_or_init(|| {
        std::env::var_os("SUPERDIFF_NO_SIMD").is_none()
            && is_x86_feature_detected!("avx2")
            && is_x86_feature_detected!("fma")
    })
}

#[inline(always)]
fn quad_index(k: usize, g: Quads) -> [usize; 4] {
    let (lo, hi) = if g.q0 < g.q1 { (g.q0, g.q1) } else { (g.q1, g.q0) };
    let base = insert_zero(insert_zero(k, lo), hi);
    let (b0, b1) = (1usize << g.q0, 1usize << g.q1);
    [base, base | b0, base | b1, base | b0 | b1]
}

unsafe fn scalar(ptr: *mut C64, g: Quads, m: &Mat4, ks: Range<usize>) {
    for k in ks {
        let idx = quad_index(k, g);
        let v = [*ptr.add(idx[0]), *ptr.add(idx[1]), *ptr.add(idx[2]), *ptr.add(idx[3])];
        if g.parity {
            *ptr.add(idx[0]) = m[0][0] * v[0] + m[0][3] * v[3];
            *ptr.add(idx[3]) = m[3][0] * v[0] + m[3][3] * v[3];
            *ptr.add(idx[1]) = m[1][1] * v[1] + m[1][2] * v[2];
            *ptr.add(idx[2]) = m[2][1] * v[1] + m[2][2] * v[2];
        } else {
            for r in 0..4 {
                let row = &m[r];
                *ptr.add(idx[r]) = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx {
    use std::arch::x86_64::*;
    use std::ops::Range;

    use num_complex::Complex64 as C64;

    use super::{quad_index, scalar, Quads};
    use crate::linalg::Mat4;

    // Complex product m*v with v = [re, im, ...]: the real parts of m scale
    // v, the imaginary parts scale the swapped v, and addsub combines them.
    macro_rules! update {
        ($p:expr, $idx:expr, $re:expr, $im:expr, $parity:expr,
         $load:ident, $store:ident, $swap:ident, $imm:expr, $mul:ident, $fmadd:ident, $addsub:ident) => {{
            let p = $p;
            let idx = $idx;
            let v = [
                $load(p.add(2 * idx[0])),
                $load(p.add(2 * idx[1])),
                $load(p.add(2 * idx[2])),
                $load(p.add(2 * idx[3])),
            ];
            let s = [$swap(v[0], $imm), $swap(v[1], $imm), $swap(v[2], $imm), $swap(v[3], $imm)];
            let re = $re;
            let im = $im;
            if $parity {
                let a0 = $fmadd(v[3], re[0][3], $mul(v[0], re[0][0]));
                let b0 = $fmadd(s[3], im[0][3], $mul(s[0], im[0][0]));
                let a3 = $fmadd(v[3], re[3][3], $mul(v[0], re[3][0]));
                let b3 = $fmadd(s[3], im[3][3], $mul(s[0], im[3][0]));
                let a1 = $fmadd(v[2], re[1][2], $mul(v[1], re[1][1]));
                let b1 = $fmadd(s[2], im[1][2], $mul(s[1], im[1][1]));
                let a2 = $fmadd(v[2], re[2][2], $mul(v[1], re[2][1]));
                let b2 = $fmadd(s[2], im[2][2], $mul(s[1], im[2][1]));
                $store(p.add(2 * idx[0]), $addsub(a0, b0));
                $store(p.add(2 * idx[1]), $addsub(a1, b1));
                $store(p.add(2 * idx[2]), $addsub(a2, b2));
                $store(p.add(2 * idx[3]), $addsub(a3, b3));
            } else {
                let mut out = [$mul(v[0], re[0][0]); 4];
                for r in 0..4 {
                    let mut a = $mul(v[0], re[r][0]);
                    let mut b = $mul(s[0], im[r][0]);
                    a = $fmadd(v[1], re[r][1], a);
                    b = $fmadd(s[1], im[r][1], b);
                    a = $fmadd(v[2], re[r][2], a);
                    b = $fmadd(s[2], im[r][2], b);
                    a = $fmadd(v[3], re[r][3], a);
                    b = $fmadd(s[3], im[r][3], b);
                    out[r] = $addsub(a, b);
                }
                for r in 0..4 {
                    $store(p.add(2 * idx[r]), out[r]);
                }
            }
        }};
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn apply(ptr: *mut C64, g: Quads, m: &Mat4, ks: Range<usize>) {
        if g.q0.min(g.q1) == 0 {
            narrow(ptr, g, m, ks);
            return;
        }
        let mut k = ks.start;
        if k % 2 == 1 {
            scalar(ptr, g, m, k..k + 1);
            k += 1;
        }
        let mut re = [[_mm256_setzero_pd(); 4]; 4];
        let mut im = [[_mm256_setzero_pd(); 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                re[r][c] = _mm256_set1_pd(m[r][c].re);
                im[r][c] = _mm256_set1_pd(m[r][c].im);
            }
        }
        let p = ptr as *mut f64;
        // quadruples k and k+1 sit in adjacent slots since bit 0 is not a target
        while k + 2 <= ks.end {
            update!(p, quad_index(k, g), &re, &im, g.parity,
                _mm256_loadu_pd, _mm256_storeu_pd, _mm256_permute_pd, 0b0101,
                _mm256_mul_pd, _mm256_fmadd_pd, _mm256_addsub_pd);
            k += 2;
        }
        if k < ks.end {
            scalar(ptr, g, m, k..ks.end);
        }
    }

    /// One quadruple at a time on 128-bit registers, for gates on bit 0.
    #[target_feature(enable = "avx2,fma")]
    unsafe fn narrow(ptr: *mut C64, g: Quads, m: &Mat4, ks: Range<usize>) {
        let mut re = [[_mm_setzero_pd(); 4]; 4];
        let mut im = [[_mm_setzero_pd(); 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                re[r][c] = _mm_set1_pd(m[r][c].re);
                im[r][c] = _mm_set1_pd(m[r][c].im);
            }
        }
        let p = ptr as *mut f64;
        for k in ks {
            update!(p, quad_index(k, g), &re, &im, g.parity,
                _mm_loadu_pd, _mm_storeu_pd, _mm_permute_pd, 0b01,
                _mm_mul_pd, _mm_fmadd_pd, _mm_addsub_pd);
        }
    }
}
