//! Lattice geometry and the power-law couplings `J_ij = 1/r_ij^alpha`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zeta::zeta;

/// Interaction exponent. `Infinite` is the nearest-neighbor limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidExponent(alpha.to_string()));
        }
        if alpha <= 1.0 {
            return Err(Error::DivergentExponent(alpha));
        }
        Ok(Exponent::Finite(alpha))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Exponent::Finite(a) => Some(a),
            Exponent::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `r^-alpha` for `r >= 1`, with the sentinel giving 1 at `r = 1` and 0 beyond.
    pub fn decay(&self, r: f64) -> f64 {
        match *self {
            Exponent::Finite(a) => r.powf(-a),
            Exponent::Infinite => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(a) => write!(f, "{a}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Exponent::Infinite);
        }
        let a: f64 = s.parse().map_err(|_| Error::InvalidExponent(s.to_string()))?;
        Exponent::finite(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(format!("unknown boundary '{other}' (expected open or periodic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Infinite,
    Finite { sites: usize, boundary: Boundary },
}

impl Geometry {
    pub fn finite(sites: usize, boundary: Boundary) -> Result<Self> {
        if sites == 0 {
            return Err(Error::EmptyChain);
        }
        if boundary == Boundary::Periodic && sites < 3 {
            return Err(Error::PeriodicTooShort(sites));
        }
        Ok(Geometry::Finite { sites, boundary })
    }

    pub fn sites(&self) -> Option<usize> {
        match *self {
            Geometry::Infinite => None,
            Geometry::Finite { sites, .. } => Some(sites),
        }
    }

    fn check(&self, site: i64) -> Result<()> {
        if let Geometry::Finite { sites, .. } = *self {
            if site < 0 || site as usize >= sites {
                return Err(Error::SiteOutOfRange { site, len: sites });
            }
        }
        Ok(())
    }

    /// Lattice distance; periodic chains use the minimal image.
    pub fn distance(&self, i: i64, j: i64) -> Result<u64> {
        self.check(i)?;
        self.check(j)?;
        let d = i.abs_diff(j);
        Ok(match *self {
            Geometry::Finite { sites, boundary: Boundary::Periodic } => d.min(sites as u64 - d),
            _ => d,
        })
    }
}

/// Which summed coupling to use for λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    InfiniteLattice,
    FiniteRowMax,
}

/// `λ = Σ_k J_ik`, self term included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda {
    pub value: f64,
    pub derivation: LambdaMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    pub exponent: Exponent,
    pub geometry: Geometry,
}

impl CouplingModel {
    pub fn new(exponent: Exponent, geometry: Geometry) -> Self {
        Self { exponent, geometry }
    }

    pub fn infinite(exponent: Exponent) -> Self {
        Self::new(exponent, Geometry::Infinite)
    }

    pub fn chain(exponent: Exponent, sites: usize, boundary: Boundary) -> Result<Self> {
        Ok(Self::new(exponent, Geometry::finite(sites, boundary)?))
    }

    pub fn distance(&self, i: i64, j: i64) -> Result<u64> {
        self.geometry.distance(i, j)
    }

    /// Coupling at lattice distance `r`; `J(0) = 1`.
    pub fn coupling_at(&self, r: u64) -> f64 {
        if r == 0 {
            1.0
        } else {
            self.exponent.decay(r as f64)
        }
    }

    pub fn coupling(&self, i: i64, j: i64) -> Result<f64> {
        Ok(self.coupling_at(self.distance(i, j)?))
    }

    /// Dense row-major coupling matrix of a finite chain, unit diagonal included.
    pub fn coupling_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.geometry.sites().ok_or(Error::InfiniteLattice)?;
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.coupling(i as i64, j as i64).expect("in range")).collect())
            .collect())
    }

    pub fn lambda(&self, mode: LambdaMode) -> Result<Lambda> {
        let value = match mode {
            LambdaMode::InfiniteLattice => infinite_lattice_lambda(self.exponent),
            LambdaMode::FiniteRowMax => {
                let rows = self.coupling_matrix()?;
                rows.iter().map(|row| row.iter().sum::<f64>()).fold(0.0, f64::max)
            }
        };
        Ok(Lambda { value, derivation: mode })
    }
}

/// `1 + 2ζ(alpha)`, or 3 in the nearest-neighbor limit.
pub fn infinite_lattice_lambda(exponent: Exponent) -> f64 {
    match exponent {
        Exponent::Finite(a) => 1.0 + 2.0 * zeta(a),
        Exponent::Infinite => 3.0,
    }
}
