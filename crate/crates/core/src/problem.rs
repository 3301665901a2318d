//! Problem data: dimension, exponent and nodal count.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Critical Sobolev exponent `(N + 2) / (N - 2)` for dimension `N >= 3`.
pub fn critical_exponent(dim: u32) -> f64 {
    assert!(dim >= 3, "critical exponent requires N >= 3");
    (dim as f64 + 2.0) / (dim as f64 - 2.0)
}

/// Surface area of the unit sphere `S^{N-1}` in `R^N`.
///
/// `2 pi^{N/2} / Gamma(N/2)`, evaluated exactly for integer and
/// half-integer arguments.
pub fn sphere_area(dim: u32) -> f64 {
    use std::f64::consts::PI;
    let gamma_half = |n: u32| -> f64 {
        // Gamma(n/2) for n >= 1
        if n % 2 == 0 {
            // (n/2 - 1)!
            (1..n / 2).fold(1.0, |acc, k| acc * k as f64)
        } else {
            // Gamma(1/2) = sqrt(pi), Gamma(x+1) = x Gamma(x)
            let mut acc = PI.sqrt();
            let mut x = 0.5;
            while x + 1.0 <= n as f64 / 2.0 + 1e-9 {
                acc *= x;
                x += 1.0;
            }
            acc
        }
    };
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half(dim)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecError {
    DimTooSmall { dim: u32 },
    ExponentOutOfRange { exponent: f64, lo: f64, hi: f64 },
    NodalCountZero,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimTooSmall { dim } => write!(f, "dimension N = {dim} must be at least 3"),
            Self::ExponentOutOfRange { exponent, lo, hi } => {
                write!(f, "exponent p = {exponent} outside admissible range ({lo}, {hi})")
            }
            Self::NodalCountZero => write!(f, "nodal count m must be at least 1"),
        }
    }
}

impl std::error::Error for SpecError {}

/// The radial equation `u'' + (N-1)/r u' + |u|^{p-1} u = 0` without a
/// prescribed nodal count.
///
/// The integrator accepts the closed range `1 <= p <= p_S`; the endpoints
/// are exactly solvable and useful for validation, while nodal solutions
/// on the ball require the open range (see [`ProblemSpec`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaneEmden {
    dim: u32,
    exponent: f64,
}

impl LaneEmden {
    pub fn new(dim: u32, exponent: f64) -> Result<Self, SpecError> {
        if dim < 3 {
            return Err(SpecError::DimTooSmall { dim });
        }
        let p_s = critical_exponent(dim);
        if !(exponent >= 1.0 && exponent <= p_s) || !exponent.is_finite() {
            return Err(SpecError::ExponentOutOfRange { exponent, lo: 1.0, hi: p_s });
        }
        Ok(Self { dim, exponent })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Nonlinearity `f(u) = |u|^{p-1} u`.
    pub fn nonlinearity(&self, u: f64) -> f64 {
        u.abs().powf(self.exponent - 1.0) * u
    }

    /// `f'(u) = p |u|^{p-1}`, the linearization weight.
    pub fn nonlinearity_prime(&self, u: f64) -> f64 {
        self.exponent * u.abs().powf(self.exponent - 1.0)
    }
}

/// A full problem instance: dimension `N >= 3`, subcritical exponent
/// `1 < p < p_S` and requested number of nodal regions `m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ProblemSpec {
    dim: u32,
    exponent: f64,
    nodal_count: u32,
}

#[derive(Deserialize)]
struct RawSpec {
    dim: u32,
    exponent: f64,
    nodal_count: u32,
}

impl TryFrom<RawSpec> for ProblemSpec {
    type Error = SpecError;
    fn try_from(raw: RawSpec) -> Result<Self, SpecError> {
        ProblemSpec::new(raw.dim, raw.exponent, raw.nodal_count)
    }
}

impl ProblemSpec {
    pub fn new(dim: u32, exponent: f64, nodal_count: u32) -> Result<Self, SpecError> {
        if dim < 3 {
            return Err(SpecError::DimTooSmall { dim });
        }
        let p_s = critical_exponent(dim);
        if !(exponent > 1.0 && exponent < p_s) {
            return Err(SpecError::ExponentOutOfRange { exponent, lo: 1.0, hi: p_s });
        }
        if nodal_count == 0 {
            return Err(SpecError::NodalCountZero);
        }
        Ok(Self { dim, exponent, nodal_count })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn nodal_count(&self) -> u32 {
        self.nodal_count
    }

    pub fn equation(&self) -> LaneEmden {
        LaneEmden { dim: self.dim, exponent: self.exponent }
    }

    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.dim)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} p={} m={}", self.dim, self.exponent, self.nodal_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_exponent_values() {
        assert_eq!(critical_exponent(3), 5.0);
        assert_eq!(critical_exponent(4), 3.0);
        assert_eq!(critical_exponent(6), 2.0);
    }

    #[test]
    fn spec_rejects_out_of_range() {
        assert!(ProblemSpec::new(2, 3.0, 1).is_err());
        assert!(ProblemSpec::new(3, 1.0, 1).is_err());
        assert!(ProblemSpec::new(3, 5.0, 1).is_err());
        assert!(ProblemSpec::new(3, 5.2, 1).is_err());
        assert!(ProblemSpec::new(3, 4.9, 0).is_err());
        assert!(ProblemSpec::new(3, 4.9, 2).is_ok());
    }

    #[test]
    fn equation_accepts_endpoints() {
        assert!(LaneEmden::new(3, 1.0).is_ok());
        assert!(LaneEmden::new(3, 5.0).is_ok());
        assert!(LaneEmden::new(3, 5.0001).is_err());
        assert!(LaneEmden::new(3, 0.99).is_err());
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(6) - PI.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn serde_round_trip_validates() {
        let s: Result<ProblemSpec, _> = serde_json::from_str(r#"{"dim":3,"exponent":4.9,"nodal_count":2}"#);
        assert!(s.is_ok());
        let bad: Result<ProblemSpec, _> = serde_json::from_str(r#"{"dim":3,"exponent":5.5,"nodal_count":2}"#);
        assert!(bad.is_err());
    }
}
