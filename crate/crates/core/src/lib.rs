//! Correlated states on quantum spin chains.
//!
//! The crate builds finitely correlated states from generating triples,
//! evaluates moment generating functions and rate functions through transfer
//! maps, computes pressures of finite-range interactions, certifies
//! factorization constants and evaluates Chernoff-type bounds for
//! discriminating two states.

pub mod error;
pub mod factorization;
pub mod fcs;
pub mod hypothesis;
pub mod ldp;
pub mod linalg;
pub mod maps;
pub mod operator;
pub mod source;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use operator::{
    dominance_constant, exp_hermitian, matrix_function, partial_trace, relative_entropy,
    shift_embed, support_projection, tensor_product, trace_norm, ComplexOperator, DensityOperator,
    HermitianOperator, MatrixFunction, SpectralDecomposition,
};

/// Upper bound on the dimension of brute-force chain matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cap(pub usize);

impl Cap {
    pub const DEFAULT: Cap = Cap(4096);

    /// Reads `SPINCHAIN_CAP`, falling back to the default.
    pub fn from_env() -> Cap {
        std::env::var("SPINCHAIN_CAP")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(Cap)
            .unwrap_or(Cap::DEFAULT)
    }

    /// Fails when `dim` exceeds the cap.
    pub fn check(self, dim: usize) -> Result<()> {
        if dim > self.0 {
            Err(Error::CapExceeded { dim, cap: self.0 })
        } else {
            Ok(())
        }
    }

    /// `base^n`, failing when it exceeds the cap or overflows.
    pub fn check_power(self, base: usize, n: usize) -> Result<usize> {
        let dim = u32::try_from(n)
            .ok()
            .and_then(|n| base.checked_pow(n))
            .ok_or(Error::CapExceeded {
                dim: usize::MAX,
                cap: self.0,
            })?;
        self.check(dim)?;
        Ok(dim)
    }
}

impl Default for Cap {
    fn default() -> Self {
        Cap::DEFAULT
    }
}
