//! Families of local densities `n ↦ ω̂_n` on chains of a fixed site dimension.

use crate::error::{Error, Result};
use crate::fcs::GeneratingTriple;
use crate::ldp::{gibbs_local_state, Interaction};
use crate::operator::DensityOperator;
use crate::Cap;

pub trait StateSource: Sync {
    fn site_dim(&self) -> usize;

    /// Density on `n` consecutive sites.
    fn local_density(&self, n: usize, cap: Cap) -> Result<DensityOperator>;

    /// The triple generating the family, if any.
    fn as_triple(&self) -> Option<&GeneratingTriple> {
        None
    }
}

impl StateSource for GeneratingTriple {
    fn site_dim(&self) -> usize {
        self.d_a()
    }

    fn local_density(&self, n: usize, cap: Cap) -> Result<DensityOperator> {
        GeneratingTriple::local_density(self, n, cap)
    }

    fn as_triple(&self) -> Option<&GeneratingTriple> {
        Some(self)
    }
}

/// `φ̂^{⊗n}`.
#[derive(Clone, Debug)]
pub struct ProductState(pub DensityOperator);

impl StateSource for ProductState {
    fn site_dim(&self) -> usize {
        self.0.dim()
    }

    fn local_density(&self, n: usize, cap: Cap) -> Result<DensityOperator> {
        cap.check_power(self.0.dim(), n)?;
        Ok(self.0.tensor_power(n))
    }
}

/// Local Gibbs states `e^{−H_n}/Tr e^{−H_n}`. These are not restrictions of
/// a single state.
#[derive(Clone, Debug)]
pub struct LocalGibbs(pub Interaction);

impl StateSource for LocalGibbs {
    fn site_dim(&self) -> usize {
        self.0.site_dim()
    }

    fn local_density(&self, n: usize, cap: Cap) -> Result<DensityOperator> {
        gibbs_local_state(&self.0, n, cap)
    }
}

/// Normalized trace `1/d^n`.
#[derive(Clone, Copy, Debug)]
pub struct Tracial(pub usize);

impl StateSource for Tracial {
    fn site_dim(&self) -> usize {
        self.0
    }

    fn local_density(&self, n: usize, cap: Cap) -> Result<DensityOperator> {
        let dim = cap.check_power(self.0, n)?;
        Ok(DensityOperator::maximally_mixed(dim))
    }
}

/// Explicit list, entry `k` holding the density on `k + 1` sites.
#[derive(Clone, Debug)]
pub struct ExplicitDensities {
    site_dim: usize,
    densities: Vec<DensityOperator>,
}

impl ExplicitDensities {
    pub fn new(site_dim: usize, densities: Vec<DensityOperator>) -> Result<Self> {
        for (k, d) in densities.iter().enumerate() {
            let expected = site_dim.pow(k as u32 + 1);
            if d.dim() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "density {k} has dim {}, expected {expected}",
                    d.dim()
                )));
            }
        }
        Ok(Self {
            site_dim,
            densities,
        })
    }
}

impl StateSource for ExplicitDensities {
    fn site_dim(&self) -> usize {
        self.site_dim
    }

    fn local_density(&self, n: usize, cap: Cap) -> Result<DensityOperator> {
        cap.check_power(self.site_dim, n)?;
        self.densities
            .get(n.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("no density supplied for n = {n}")))
    }
}
