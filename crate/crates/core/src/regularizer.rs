//! Separable potentials `F(a) = Σ_k f(a_k)` on `[0, 1]`.
//!
//! Each kind provides `f`, `f'`, the inverse derivative clamped to `[0, 1]`,
//! the derivative of that clamped inverse (for Newton-type solvers), and the
//! Lipschitz constant of the inverse on its working range.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Numeric floor for potentials whose derivative is singular at zero.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    /// `f(x) = x ln x − x`.
    #[serde(rename = "shannon")]
    NegShannon,
    /// `f(x) = x²`.
    Quadratic,
    /// `f(x) = −√x`.
    #[serde(rename = "tsallis")]
    TsallisHalf,
}

impl RegularizerKind {
    pub const ALL: [RegularizerKind; 3] =
        [RegularizerKind::NegShannon, RegularizerKind::Quadratic, RegularizerKind::TsallisHalf];

    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::NegShannon => "shannon",
            RegularizerKind::Quadratic => "quadratic",
            RegularizerKind::TsallisHalf => "tsallis",
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shannon" => Ok(RegularizerKind::NegShannon),
            "quadratic" => Ok(RegularizerKind::Quadratic),
            "tsallis" => Ok(RegularizerKind::TsallisHalf),
            other => Err(Error::Config(format!("unknown regularizer `{other}`"))),
        }
    }
}

/// A separable regularizer together with its numeric domain floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub floor: f64,
}

impl Regularizer {
    pub fn new(kind: RegularizerKind) -> Self {
        let floor = match kind {
            RegularizerKind::Quadratic => 0.0,
            RegularizerKind::NegShannon | RegularizerKind::TsallisHalf => DEFAULT_FLOOR,
        };
        Regularizer { kind, floor }
    }

    pub fn shannon() -> Self {
        Self::new(RegularizerKind::NegShannon)
    }

    pub fn quadratic() -> Self {
        Self::new(RegularizerKind::Quadratic)
    }

    pub fn tsallis() -> Self {
        Self::new(RegularizerKind::TsallisHalf)
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { what: "f", value: x });
        }
        Ok(match self.kind {
            RegularizerKind::NegShannon if x == 0.0 => 0.0,
            RegularizerKind::NegShannon => x * x.ln() - x,
            RegularizerKind::Quadratic => x * x,
            RegularizerKind::TsallisHalf => -x.sqrt(),
        })
    }

    /// `f'(x)` on `[floor, 1]`.
    pub fn prime(&self, x: f64) -> Result<f64> {
        if !(x >= self.floor && x <= 1.0) {
            return Err(Error::Domain { what: "f'", value: x });
        }
        Ok(self.prime_unchecked(x))
    }

    #[inline]
    pub(crate) fn prime_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            RegularizerKind::NegShannon => x.ln(),
            RegularizerKind::Quadratic => 2.0 * x,
            RegularizerKind::TsallisHalf => -0.5 / x.sqrt(),
        }
    }

    /// `f'(1)`: arguments at or above this map to the cap `1`.
    pub fn prime_at_one(&self) -> f64 {
        self.prime_unchecked(1.0)
    }

    /// `f'(0⁺)`, `−∞` when the inverse never reaches zero.
    pub fn prime_at_zero(&self) -> f64 {
        match self.kind {
            RegularizerKind::Quadratic => 0.0,
            RegularizerKind::NegShannon | RegularizerKind::TsallisHalf => f64::NEG_INFINITY,
        }
    }

    /// `(f')⁻¹(z)` clamped to `[0, 1]`.
    #[inline]
    pub fn prime_inverse(&self, z: f64) -> f64 {
        match self.kind {
            RegularizerKind::NegShannon => {
                if z >= 0.0 {
                    1.0
                } else {
                    z.exp()
                }
            }
            RegularizerKind::Quadratic => (0.5 * z).clamp(0.0, 1.0),
            RegularizerKind::TsallisHalf => {
                if z >= -0.5 {
                    1.0
                } else {
                    0.25 / (z * z)
                }
            }
        }
    }

    /// Derivative of the clamped inverse; zero where the clamp is active.
    #[inline]
    pub fn prime_inverse_derivative(&self, z: f64) -> f64 {
        match self.kind {
            RegularizerKind::NegShannon => {
                if z >= 0.0 {
                    0.0
                } else {
                    z.exp()
                }
            }
            RegularizerKind::Quadratic => {
                if z > 0.0 && z < 2.0 {
                    0.5
                } else {
                    0.0
                }
            }
            RegularizerKind::TsallisHalf => {
                if z >= -0.5 {
                    0.0
                } else {
                    -0.5 / (z * z * z)
                }
            }
        }
    }

    /// Lipschitz bound of the clamped inverse.
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            RegularizerKind::NegShannon => 1.0,
            RegularizerKind::Quadratic => 0.5,
            RegularizerKind::TsallisHalf => 4.0,
        }
    }

    /// `F(a) = Σ f(a_k)`.
    pub fn potential(&self, a: &[f64]) -> Result<f64> {
        a.iter().map(|&x| self.value(x)).sum()
    }
}
