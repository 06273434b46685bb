use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `lambda0 / sqrt(n_mol)`, holding the collective coupling fixed.
pub fn rescale_lambda(lambda0: f64, n_mol: usize) -> Result<f64> {
    if n_mol < 1 {
        return Err(Error::InvalidInput("ensemble needs at least one molecule".into()));
    }
    Ok(lambda0 / (n_mol as f64).sqrt())
}

/// Single lossless cavity mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    /// Mode frequency in hartree.
    pub omega: f64,
    /// Bare (single-molecule) coupling magnitude.
    pub lambda0: f64,
    /// Unit polarization vector.
    pub polarization: Vector3<f64>,
    /// Scale the coupling by `1/sqrt(N)` for an `N`-molecule ensemble.
    pub rescale_by_sqrt_n: bool,
}

impl CavityConfig {
    pub fn new(omega: f64, lambda0: f64, polarization: Vector3<f64>, rescale_by_sqrt_n: bool) -> Result<Self> {
        let cfg = CavityConfig {
            omega,
            lambda0,
            polarization,
            rescale_by_sqrt_n,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::Domain(format!("cavity frequency must be positive, got {}", self.omega)));
        }
        if !(self.lambda0 >= 0.0) || !self.lambda0.is_finite() {
            return Err(Error::Domain(format!("coupling must be non-negative, got {}", self.lambda0)));
        }
        if (self.polarization.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("polarization must be a unit vector".into()));
        }
        Ok(())
    }

    /// Coupling magnitude applied to each molecule of an `n_mol` ensemble.
    pub fn coupling_magnitude(&self, n_mol: usize) -> Result<f64> {
        if self.rescale_by_sqrt_n {
            rescale_lambda(self.lambda0, n_mol)
        } else if n_mol < 1 {
            Err(Error::InvalidInput("ensemble needs at least one molecule".into()))
        } else {
            Ok(self.lambda0)
        }
    }

    /// Coupling vector `lambda * e` for an `n_mol` ensemble.
    pub fn coupling_vector(&self, n_mol: usize) -> Result<Vector3<f64>> {
        Ok(self.polarization * self.coupling_magnitude(n_mol)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(CavityConfig::new(0.02, 0.01, Vector3::z(), true).is_ok());
        assert!(CavityConfig::new(0.0, 0.01, Vector3::z(), true).is_err());
        assert!(CavityConfig::new(0.02, -0.01, Vector3::z(), true).is_err());
        assert!(CavityConfig::new(0.02, 0.01, Vector3::new(0.0, 0.0, 2.0), true).is_err());
    }

    #[test]
    fn rescaling_policy() {
        let c = CavityConfig::new(0.02, 0.04, Vector3::x(), true).unwrap();
        assert!((c.coupling_magnitude(4).unwrap() - 0.02).abs() < 1e-15);
        let c = CavityConfig { rescale_by_sqrt_n: false, ..c };
        assert_eq!(c.coupling_magnitude(4).unwrap(), 0.04);
    }
}
