use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Mat4, ZERO};

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `master`; any realization can be
/// regenerated on its own.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random element of U(4): Gram-Schmidt on the columns of a complex
/// Ginibre matrix, which equals QR with a positive real diagonal in R.
pub fn haar_unitary4<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let mut cols = [[ZERO; 4]; 4];
    for col in cols.iter_mut() {
        for x in col.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *x = C64::new(re, im);
        }
    }
    for j in 0..4 {
        // two rounds of classical Gram-Schmidt keep orthogonality at 1e-16
        for _ in 0..2 {
            for i in 0..j {
                let proj: C64 = (0..4).map(|r| cols[i][r].conj() * cols[j][r]).sum();
                for r in 0..4 {
                    let v = cols[i][r] * proj;
                    cols[j][r] -= v;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for r in 0..4 {
            cols[j][r] /= norm;
        }
    }
    let mut u = [[ZERO; 4]; 4];
    for (c, col) in cols.iter().enumerate() {
        for (r, x) in col.iter().enumerate() {
            u[r][c] = *x;
        }
    }
    u
}
