//! Diffusion coefficients `σ` with exact derivatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// `σ` together with `σ'` and its regularity data.
///
/// Textual form: `const:c`, `affine:a,b` for `a + b x`, `sin:a,b` for
/// `a + b sin x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSpec {
    Constant { c: f64 },
    Affine { a: f64, b: f64 },
    Sin { a: f64, b: f64 },
}

impl CoefficientSpec {
    #[inline]
    pub fn sigma(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::Affine { a, b } => b.mul_add(x, a),
            Self::Sin { a, b } => b.mul_add(x.sin(), a),
        }
    }

    #[inline]
    pub fn sigma_prime(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Affine { b, .. } => b,
            Self::Sin { b, .. } => b * x.cos(),
        }
    }

    pub fn lipschitz_const(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Affine { b, .. } | Self::Sin { b, .. } => b.abs(),
        }
    }

    /// Hölder exponent of `σ'`; every supported kind has a Lipschitz `σ'`.
    pub fn holder_beta(&self) -> f64 {
        1.0
    }

    /// True when `σ' ≡ 0`.
    pub fn is_constant(&self) -> bool {
        match *self {
            Self::Constant { .. } => true,
            Self::Affine { b, .. } | Self::Sin { b, .. } => b == 0.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "const",
            Self::Affine { .. } => "affine",
            Self::Sin { .. } => "sin",
        }
    }
}

impl fmt::Display for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Constant { c } => write!(f, "const:{c:?}"),
            Self::Affine { a, b } => write!(f, "affine:{a:?},{b:?}"),
            Self::Sin { a, b } => write!(f, "sin:{a:?},{b:?}"),
        }
    }
}

impl FromStr for CoefficientSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("sigma `{s}` must look like name:params")))?;
        let values = params
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number `{p}` in sigma `{s}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "non-finite parameter in sigma `{s}`"
            )));
        }
        let arity = |n: usize| {
            if values.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "sigma `{name}` takes {n} parameter(s), got {}",
                    values.len()
                )))
            }
        };
        match name.trim() {
            "const" | "constant" => {
                arity(1)?;
                Ok(Self::Constant { c: values[0] })
            }
            "affine" => {
                arity(2)?;
                Ok(Self::Affine {
                    a: values[0],
                    b: values[1],
                })
            }
            "sin" => {
                arity(2)?;
                Ok(Self::Sin {
                    a: values[0],
                    b: values[1],
                })
            }
            other => Err(Error::Config(format!("unknown sigma kind `{other}`"))),
        }
    }
}

impl Serialize for CoefficientSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CoefficientSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
