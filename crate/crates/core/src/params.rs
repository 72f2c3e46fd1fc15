//! Model parameters `(d, s, p, K)` of one truncated Gibbs-measure problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of `p` relative to the mass-critical exponent `4s/d + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for Criticality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Criticality::Subcritical => "subcritical",
            Criticality::Critical => "critical",
            Criticality::Supercritical => "supercritical",
        };
        f.write_str(name)
    }
}

/// Relative tolerance used when deciding `p == 4s/d + 2`.
pub const CRITICAL_TOL: f64 = 1e-12;

pub fn critical_exponent(d: usize, s: f64) -> f64 {
    4.0 * s / d as f64 + 2.0
}

pub fn classify(d: usize, s: f64, p: f64) -> Criticality {
    let pc = critical_exponent(d, s);
    if (p - pc).abs() <= CRITICAL_TOL * pc {
        Criticality::Critical
    } else if p < pc {
        Criticality::Subcritical
    } else {
        Criticality::Supercritical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub s: f64,
    pub p: f64,
    /// L² cutoff radius.
    #[serde(rename = "K")]
    pub k: f64,
    /// Use the massive field with symbol `<n>^s = (1 + 4π²|n|²)^{s/2}`.
    pub massive: bool,
}

impl ModelParams {
    pub fn new(d: usize, s: f64, p: f64, k: f64) -> Result<Self> {
        let params = ModelParams {
            d,
            s,
            p,
            k,
            massive: false,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn massive(mut self, massive: bool) -> Self {
        self.massive = massive;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::Precondition(format!(
                "dimension d = {} outside 1..=3",
                self.d
            )));
        }
        if !(self.s.is_finite() && self.s > self.d as f64 / 2.0) {
            return Err(Error::Precondition(format!(
                "s = {} must exceed d/2 = {}",
                self.s,
                self.d as f64 / 2.0
            )));
        }
        if !(self.p.is_finite() && self.p > 2.0) {
            return Err(Error::Precondition(format!("p = {} must exceed 2", self.p)));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::Precondition(format!("K = {} must be positive", self.k)));
        }
        Ok(())
    }

    pub fn criticality(&self) -> Criticality {
        classify(self.d, self.s, self.p)
    }

    /// Growth exponent of `log Z_{K,N}`: `dp/2 - d` (equal to `2s` when critical).
    pub fn divergence_exponent(&self) -> f64 {
        self.d as f64 * self.p / 2.0 - self.d as f64
    }

    /// Fourier multiplier of `D^s` (massless) or `<∇>^s` (massive) at integer frequency `n`.
    pub fn symbol(&self, n_norm: f64) -> f64 {
        if self.massive {
            (1.0 + 4.0 * std::f64::consts::PI.powi(2) * n_norm * n_norm).powf(self.s / 2.0)
        } else {
            (2.0 * std::f64::consts::PI * n_norm).powf(self.s)
        }
    }

    /// Whether the zero frequency carries a Gaussian mode.
    pub fn includes_zero_mode(&self) -> bool {
        self.massive
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifier_matches_critical_line() {
        assert_eq!(classify(1, 1.0, 6.0), Criticality::Critical);
        assert_eq!(classify(1, 1.0, 8.0), Criticality::Supercritical);
        assert_eq!(classify(1, 1.0, 4.0), Criticality::Subcritical);
        assert_eq!(classify(2, 1.5, 5.0), Criticality::Critical);
    }

    #[test]
    fn rejects_singular_regime() {
        assert!(ModelParams::new(1, 0.5, 6.0, 1.0).is_err());
        assert!(ModelParams::new(2, 1.0, 6.0, 1.0).is_err());
        assert!(ModelParams::new(1, 1.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(1, 1.0, 6.0, 0.0).is_err());
        assert!(ModelParams::new(4, 3.0, 6.0, 1.0).is_err());
    }

    #[test]
    fn exponents_coincide_when_critical() {
        let params = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap();
        assert_eq!(params.divergence_exponent(), 2.0 * params.s);
    }

    #[test]
    fn massive_symbol_at_zero_is_one() {
        let params = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap().massive(true);
        assert_eq!(params.symbol(0.0), 1.0);
        assert!(params.includes_zero_mode());
    }
}
