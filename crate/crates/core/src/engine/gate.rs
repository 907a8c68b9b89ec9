use crate::error::{Error, Result};
use crate::lattice::SiteId;
use super::kernel::{is_parity_block, Quads};
use crate::linalg::{self, Mat4};

pub const UNITARITY_TOL: f64 = 1e-12;

/// A 4x4 unitary bound to an ordered pair of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix {
    q0: usize,
    q1: usize,
    matrix: Mat4,
    identity: bool,
    parity: bool,
}

impl GateMatrix {
    pub fn new(q0: SiteId, q1: SiteId, matrix: Mat4) -> Result<Self> {
        if q0 == q1 {
            return Err(Error::invalid(format!("gate targets overlap at site {q0}")));
        }
        let err = linalg::unitarity_error4(&matrix);
        if !(err <= UNITARITY_TOL) {
            return Err(Error::Numeric(format!(
                "gate on ({q0},{q1}) deviates from unitarity by {err:e}"
            )));
        }
        Ok(GateMatrix {
            q0: q0.0,
            q1: q1.0,
            identity: linalg::is_identity4(&matrix),
            parity: is_parity_block(&matrix),
            matrix,
        })
    }

    pub fn targets(&self) -> (usize, usize) {
        (self.q0, self.q1)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub(crate) fn quads(&self) -> Quads {
        Quads {
            q0: self.q0,
            q1: self.q1,
            parity: self.parity,
        }
    }

    /// Exactly the identity matrix; such gates are skipped.
    pub fn is_identity(&self) -> bool {
        self.identity
    }
}
