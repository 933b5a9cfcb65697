//! Parameter-initialization distributions and their differential entropy.
//!
//! Each distribution factors over dimensions: a diagonal normal, an
//! axis-aligned uniform box with per-dimension widths (support
//! `[-l/2, l/2]`), or a mixture of the two with the normal block first.
//! Entropies are in nats; they can be negative for tight distributions.

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{batch_layout, batch_rng};

const SQRT_12: f64 = 3.464_101_615_137_754_6;

/// Per-dimension initialization law for the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum InitDistribution {
    /// Independent `N(0, σ_j²)` per dimension.
    DiagonalNormal { sigmas: Vec<f64> },
    /// Independent `U(-l_j/2, l_j/2)` per dimension.
    UniformBox { lengths: Vec<f64> },
    /// Normal block (first) followed by a uniform block.
    Mixed {
        sigmas: Vec<f64>,
        lengths: Vec<f64>,
    },
}

impl InitDistribution {
    pub fn diagonal_normal(sigmas: Vec<f64>) -> Result<Self> {
        validate_positive(&sigmas, "sigma")?;
        Ok(InitDistribution::DiagonalNormal { sigmas })
    }

    pub fn uniform_box(lengths: Vec<f64>) -> Result<Self> {
        validate_positive(&lengths, "length")?;
        Ok(InitDistribution::UniformBox { lengths })
    }

    pub fn mixed(sigmas: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() || lengths.is_empty() {
            return Err(Error::InvalidDistribution {
                reason: "mixed distribution needs both a normal and a uniform block".into(),
            });
        }
        validate_positive(&sigmas, "sigma")?;
        validate_positive(&lengths, "length")?;
        Ok(InitDistribution::Mixed { sigmas, lengths })
    }

    /// Constant-σ diagonal normal of dimension `dim`.
    pub fn isotropic_normal(sigma: f64, dim: usize) -> Result<Self> {
        Self::diagonal_normal(vec![sigma; dim])
    }

    /// Constant-width uniform box of dimension `dim`.
    pub fn isotropic_uniform(length: f64, dim: usize) -> Result<Self> {
        Self::uniform_box(vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            InitDistribution::DiagonalNormal { sigmas } => sigmas.len(),
            InitDistribution::UniformBox { lengths } => lengths.len(),
            InitDistribution::Mixed { sigmas, lengths } => sigmas.len() + lengths.len(),
        }
    }

    /// Component laws in dimension order.
    pub fn components(&self) -> Vec<Component> {
        match self {
            InitDistribution::DiagonalNormal { sigmas } => {
                sigmas.iter().map(|&s| Component::Normal { sigma: s }).collect()
            }
            InitDistribution::UniformBox { lengths } => {
                lengths.iter().map(|&l| Component::Uniform { length: l }).collect()
            }
            InitDistribution::Mixed { sigmas, lengths } => sigmas
                .iter()
                .map(|&s| Component::Normal { sigma: s })
                .chain(lengths.iter().map(|&l| Component::Uniform { length: l }))
                .collect(),
        }
    }
}

/// One marginal of an [`InitDistribution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Normal { sigma: f64 },
    Uniform { length: f64 },
}

impl Component {
    pub fn variance(&self) -> f64 {
        match self {
            Component::Normal { sigma } => sigma * sigma,
            Component::Uniform { length } => length * length / 12.0,
        }
    }

    /// Standard deviation of the matching-variance normal, `σ` or `l/√12`.
    pub fn variance_equivalent_sigma(&self) -> f64 {
        match self {
            Component::Normal { sigma } => *sigma,
            Component::Uniform { length } => length / SQRT_12,
        }
    }

    pub fn mean_abs(&self) -> f64 {
        match self {
            Component::Normal { sigma } => sigma * (2.0 / std::f64::consts::PI).sqrt(),
            Component::Uniform { length } => length / 4.0,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Component::Normal { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            Component::Uniform { length } => {
                if x.abs() <= length / 2.0 {
                    1.0 / length
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn sample_one<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Component::Normal { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
            Component::Uniform { length } => (rng.random::<f64>() - 0.5) * length,
        }
    }
}

fn validate_positive(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidDistribution {
            reason: format!("empty {what} vector"),
        });
    }
    for &v in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidDistribution {
                reason: format!("every {what} must be positive and finite, got {v}"),
            });
        }
    }
    Ok(())
}

/// Differential entropy of the distribution, in nats.
///
/// Normal block: `Σ ln σ_j + (K/2)(1 + ln 2π)`; uniform block: `Σ ln l_j`.
/// Blocks add because dimensions are independent.
pub fn differential_entropy(d: &InitDistribution) -> f64 {
    match d {
        InitDistribution::DiagonalNormal { sigmas } => normal_block_entropy(sigmas),
        InitDistribution::UniformBox { lengths } => uniform_block_entropy(lengths),
        InitDistribution::Mixed { sigmas, lengths } => {
            normal_block_entropy(sigmas) + uniform_block_entropy(lengths)
        }
    }
}

fn normal_block_entropy(sigmas: &[f64]) -> f64 {
    let k = sigmas.len() as f64;
    sigmas.iter().map(|s| s.ln()).sum::<f64>()
        + 0.5 * k * (1.0 + (2.0 * std::f64::consts::PI).ln())
}

fn uniform_block_entropy(lengths: &[f64]) -> f64 {
    lengths.iter().map(|l| l.ln()).sum::<f64>()
}

/// Per-dimension σ after mapping uniform widths through `σ = l/√12`.
pub fn variance_equivalent_sigma(d: &InitDistribution) -> Vec<f64> {
    d.components()
        .iter()
        .map(Component::variance_equivalent_sigma)
        .collect()
}

/// Draw `count` parameter vectors, row-major `count × dim`.
///
/// Sampling follows the crate-wide batch contract: sample `i` depends only on
/// `(seed, i)`, so any prefix or parallel split reproduces bit-identically.
pub fn sample(d: &InitDistribution, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let components = d.components();
    let mut out = Vec::with_capacity(count);
    for (batch, len) in batch_layout(count) {
        let mut rng = batch_rng(seed, batch);
        for _ in 0..len {
            out.push(components.iter().map(|c| c.sample_one(&mut rng)).collect());
        }
    }
    out
}


/// Serialized form: `{"kind": "normal"|"uniform"|"mixed", "sigmas": [...], "lengths": [...]}`.
#[derive(Debug, Serialize, Deserialize)]
struct InitDistributionRepr {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigmas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lengths: Option<Vec<f64>>,
}

impl Serialize for InitDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            InitDistribution::DiagonalNormal { sigmas } => InitDistributionRepr {
                kind: "normal".into(),
                sigmas: Some(sigmas.clone()),
                lengths: None,
            },
            InitDistribution::UniformBox { lengths } => InitDistributionRepr {
                kind: "uniform".into(),
                sigmas: None,
                lengths: Some(lengths.clone()),
            },
            InitDistribution::Mixed { sigmas, lengths } => InitDistributionRepr {
                kind: "mixed".into(),
                sigmas: Some(sigmas.clone()),
                lengths: Some(lengths.clone()),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for InitDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = InitDistributionRepr::deserialize(deserializer)?;
        let build = || -> Result<InitDistribution> {
            match repr.kind.as_str() {
                "normal" => InitDistribution::diagonal_normal(repr.sigmas.clone().unwrap_or_default()),
                "uniform" => InitDistribution::uniform_box(repr.lengths.clone().unwrap_or_default()),
                "mixed" => InitDistribution::mixed(
                    repr.sigmas.clone().unwrap_or_default(),
                    repr.lengths.clone().unwrap_or_default(),
                ),
                other => Err(Error::InvalidDistribution {
                    reason: format!("unknown kind {other:?}"),
                }),
            }
        };
        build().map_err(D::Error::custom)
    }
}
