//! Independent numerical estimators used to validate every closed form.
//!
//! Three oracles: a Monte-Carlo mean-energy estimator (any form, any
//! dimension), a tensor-product Gauss–Hermite quadrature (diagonal normal,
//! dim ≤ 3, deterministic), and a grid estimator of discrete entropy that
//! exhibits the `S_grid ≈ S_diff − dim·ln δ` identity.

use nalgebra::DMatrix;
use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::dataset::Dataset;
use crate::energy::{evaluate_unchecked, EnergyForm};
use crate::error::{Error, Result};
use crate::init_dist::{Component, InitDistribution};
use crate::rng::{batch_layout, batch_rng, RunningMoments};

/// Monte-Carlo estimate with its standard error.
///
/// `stderr` is `None` for a single sample, where it is undefined.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub samples: usize,
}

impl McEstimate {
    /// Absolute z-score of `reference` against this estimate.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        self.stderr.map(|se| ((reference - self.estimate) / se).abs())
    }
}

/// Sample mean of the energy over parameter draws from `dist`.
///
/// Batches are evaluated in parallel but merged in a fixed order, so the
/// result is bit-identical for a given `(seed, samples)` regardless of the
/// thread count.
pub fn mc_mean_energy(
    form: &EnergyForm,
    dist: &InitDistribution,
    d: &Dataset,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParams {
            reason: "samples must be at least 1".into(),
        });
    }
    if dist.dim() != d.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.param_dim(),
            got: dist.dim(),
        });
    }
    check_labels(form, d)?;
    let components = dist.components();
    let layout = batch_layout(samples);
    let parts: Vec<RunningMoments> = layout
        .par_iter()
        .map(|&(batch, len)| {
            let mut rng = batch_rng(seed, batch);
            let mut mu = vec![0.0; components.len()];
            let mut moments = RunningMoments::default();
            for _ in 0..len {
                for (slot, c) in mu.iter_mut().zip(&components) {
                    *slot = c.sample_one(&mut rng);
                }
                moments.push(evaluate_unchecked(form, &mu, d));
            }
            moments
        })
        .collect();
    let mut total = RunningMoments::default();
    for part in &parts {
        total.merge(part);
    }
    Ok(McEstimate {
        estimate: total.mean,
        stderr: total.standard_error(),
        samples,
    })
}

fn check_labels(form: &EnergyForm, d: &Dataset) -> Result<()> {
    if form.base() == crate::energy::BaseEnergy::CrossEntropy {
        if let Some((row, found)) = d.first_non_binary_label() {
            return Err(Error::NonBinaryLabels { row, found });
        }
    }
    Ok(())
}

/// Gauss–Hermite nodes and weights for `∫ f(t) e^{-t²} dt ≈ Σ w_i f(t_i)`,
/// from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_hermite(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::zeros(nodes, nodes);
    for k in 1..nodes {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let weight = std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, i)].powi(2);
            (eig.eigenvalues[i], weight)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Deterministic mean energy over a diagonal-normal initialization via
/// tensor-product Gauss–Hermite quadrature. Limited to three dimensions.
pub fn quadrature_mean_energy(
    form: &EnergyForm,
    dist: &InitDistribution,
    d: &Dataset,
    nodes: usize,
) -> Result<f64> {
    let sigmas = match dist {
        InitDistribution::DiagonalNormal { sigmas } => sigmas.clone(),
        _ => {
            return Err(Error::Unsupported {
                what: "quadrature over a non-normal initialization".into(),
            })
        }
    };
    let dim = sigmas.len();
    if dim > 3 {
        return Err(Error::DimensionTooHigh {
            dim,
            what: "tensor-product quadrature",
            limit: 3,
        });
    }
    if !(16..=256).contains(&nodes) {
        return Err(Error::InvalidParams {
            reason: format!("nodes must lie in [16, 256], got {nodes}"),
        });
    }
    if dim != d.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.param_dim(),
            got: dim,
        });
    }
    check_labels(form, d)?;

    let (t, w) = gauss_hermite(nodes);
    let norm = std::f64::consts::PI.powf(-(dim as f64) / 2.0);
    let sqrt2 = std::f64::consts::SQRT_2;

    let mut mu = vec![0.0; dim];
    let mut index = vec![0usize; dim];
    let mut acc = 0.0;
    loop {
        let mut weight = 1.0;
        for (j, &i) in index.iter().enumerate() {
            mu[j] = sqrt2 * sigmas[j] * t[i];
            weight *= w[i];
        }
        acc += weight * evaluate_unchecked(form, &mu, d);

        // odometer over the multi-index
        let mut j = 0;
        loop {
            if j == dim {
                return Ok(acc * norm);
            }
            index[j] += 1;
            if index[j] < nodes {
                break;
            }
            index[j] = 0;
            j += 1;
        }
    }
}

const GRID_CELL_LIMIT: u128 = 1 << 24;

/// Discrete entropy of `dist` sampled on a grid of spacing `delta` over
/// `[-halfwidth, halfwidth]` per dimension.
///
/// Cell probabilities are `density(center)·δ^dim`, renormalized before the
/// entropy sum so that truncation shows up in the mass check rather than in
/// the entropy. Satisfies `S_grid ≈ S_diff − dim·ln δ` as `δ → 0`.
pub fn discrete_entropy_grid(dist: &InitDistribution, delta: f64, halfwidth: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) || !(halfwidth > 0.0 && halfwidth.is_finite()) {
        return Err(Error::InvalidParams {
            reason: "delta and halfwidth must be positive".into(),
        });
    }
    let components = dist.components();
    let dim = components.len();

    for (j, c) in components.iter().enumerate() {
        let mass = match c {
            Component::Normal { sigma } => erf(halfwidth / (sigma * std::f64::consts::SQRT_2)),
            Component::Uniform { length } => (2.0 * halfwidth / length).min(1.0),
        };
        if mass < 1.0 - 1e-6 {
            return Err(Error::InsufficientHalfwidth {
                halfwidth,
                mass,
                dim: j,
            });
        }
    }

    let per_dim = ((2.0 * halfwidth / delta).ceil() as usize).max(1);
    let cells = (per_dim as u128).pow(dim as u32);
    if cells > GRID_CELL_LIMIT {
        return Err(Error::GridTooLarge {
            cells,
            limit: GRID_CELL_LIMIT,
        });
    }

    let span = per_dim as f64 * delta;
    let center = |i: usize| -span / 2.0 + (i as f64 + 0.5) * delta;

    let mut index = vec![0usize; dim];
    let mut masses = Vec::with_capacity(per_dim.pow(dim as u32));
    loop {
        let mut density = 1.0;
        for (j, &i) in index.iter().enumerate() {
            density *= components[j].density(center(i));
        }
        if density > 0.0 {
            masses.push(density * delta.powi(dim as i32));
        }

        let mut j = 0;
        loop {
            if j == dim {
                let total: f64 = masses.iter().sum();
                let entropy = -masses
                    .iter()
                    .map(|&p| {
                        let q = p / total;
                        q * q.ln()
                    })
                    .sum::<f64>();
                return Ok(entropy);
            }
            index[j] += 1;
            if index[j] < per_dim {
                break;
            }
            index[j] = 0;
            j += 1;
        }
    }
}
