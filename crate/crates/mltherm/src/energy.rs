//! Energy forms (loss functions) and minimum-energy solvers.
//!
//! A linear model `ŷ = Σ_j μ_j x_ij + μ_K` is scored against the data with
//! one of four base energies, optionally plus an L1/L2 penalty over all `K`
//! parameters (intercept included). `min_energy` finds the parameters the
//! system relaxes to: a closed form where one exists, an iterative solver
//! otherwise.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{DataStats, Dataset};
use crate::error::{Error, Result};

/// Base energy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseEnergy {
    Mse,
    Mae,
    Mbe,
    CrossEntropy,
}

impl BaseEnergy {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaseEnergy::Mse => "mse",
            BaseEnergy::Mae => "mae",
            BaseEnergy::Mbe => "mbe",
            BaseEnergy::CrossEntropy => "ce",
        }
    }
}

/// Penalty added to the base energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularization {
    None,
    L1,
    L2,
}

/// A base energy with an optional regularization term of strength `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyForm {
    base: BaseEnergy,
    reg: Regularization,
    lambda: f64,
}

impl EnergyForm {
    /// `lambda` must be positive exactly when a regularizer is selected.
    pub fn new(base: BaseEnergy, reg: Regularization, lambda: f64) -> Result<Self> {
        match reg {
            Regularization::None if lambda != 0.0 => Err(Error::InvalidParams {
                reason: "lambda must be 0 without regularization".into(),
            }),
            Regularization::L1 | Regularization::L2 if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::InvalidParams {
                    reason: "regularized forms need a positive finite lambda".into(),
                })
            }
            _ => Ok(EnergyForm { base, reg, lambda }),
        }
    }

    pub fn plain(base: BaseEnergy) -> Self {
        EnergyForm {
            base,
            reg: Regularization::None,
            lambda: 0.0,
        }
    }

    pub fn mse() -> Self {
        Self::plain(BaseEnergy::Mse)
    }

    pub fn base(&self) -> BaseEnergy {
        self.base
    }

    pub fn reg(&self) -> Regularization {
        self.reg
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn penalty(&self, mu: &[f64]) -> f64 {
        match self.reg {
            Regularization::None => 0.0,
            Regularization::L1 => self.lambda * mu.iter().map(|m| m.abs()).sum::<f64>(),
            Regularization::L2 => self.lambda * mu.iter().map(|m| m * m).sum::<f64>(),
        }
    }
}

/// Model parameters `μ`; the last entry is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mu: Vec<f64>,
}

impl ModelParams {
    pub fn new(mu: Vec<f64>) -> Self {
        ModelParams { mu }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

fn check_dims(mu: &[f64], d: &Dataset) -> Result<()> {
    if mu.len() != d.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.param_dim(),
            got: mu.len(),
        });
    }
    Ok(())
}

fn linear_output(mu: &[f64], d: &Dataset, row: usize) -> f64 {
    let stored = d.stored_dim();
    mu[stored]
        + mu[..stored]
            .iter()
            .zip(d.row(row))
            .map(|(m, x)| m * x)
            .sum::<f64>()
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Energy of the parameter point `p` on dataset `d` under `form`.
pub fn evaluate(form: &EnergyForm, p: &ModelParams, d: &Dataset) -> Result<f64> {
    check_dims(&p.mu, d)?;
    if form.base == BaseEnergy::CrossEntropy {
        check_ce_labels(d)?;
    }
    Ok(evaluate_unchecked(form, &p.mu, d))
}

/// Hot-path evaluation without the dimension check; callers guarantee
/// `mu.len() == d.param_dim()` and, for cross entropy, binary labels.
pub(crate) fn evaluate_unchecked(form: &EnergyForm, mu: &[f64], d: &Dataset) -> f64 {
    let n = d.len() as f64;
    let base = match form.base {
        BaseEnergy::Mse => {
            let mut acc = 0.0;
            for i in 0..d.len() {
                let r = linear_output(mu, d, i) - d.label(i);
                acc += r * r;
            }
            acc / n
        }
        BaseEnergy::Mae => {
            let mut acc = 0.0;
            for i in 0..d.len() {
                acc += (linear_output(mu, d, i) - d.label(i)).abs();
            }
            acc / n
        }
        BaseEnergy::Mbe => {
            let mut acc = 0.0;
            for i in 0..d.len() {
                acc += linear_output(mu, d, i) - d.label(i);
            }
            acc / n
        }
        BaseEnergy::CrossEntropy => {
            let mut acc = 0.0;
            for i in 0..d.len() {
                let z = linear_output(mu, d, i);
                let y = d.label(i);
                acc += y * softplus(-z) + (1.0 - y) * softplus(z);
            }
            acc / n
        }
    };
    base + form.penalty(mu)
}

fn check_ce_labels(d: &Dataset) -> Result<()> {
    if let Some((row, found)) = d.first_non_binary_label() {
        return Err(Error::NonBinaryLabels { row, found });
    }
    Ok(())
}

/// Iterative-solver budget and tolerances.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Gradient-norm tolerance for the cross-entropy descent.
    pub grad_tol: f64,
    /// Smoothing floor for the reweighted absolute-value solves.
    pub smoothing_eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 10_000,
            grad_tol: 1e-8,
            smoothing_eps: 1e-9,
        }
    }
}

/// Result of a minimum-energy search.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub params: ModelParams,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Find the parameters minimizing `form` on `d`.
///
/// MSE solves in closed form (SVD pseudoinverse, so degenerate designs are
/// fine); ridge uses its normal equations; L1 runs coordinate descent; MAE
/// runs iteratively-reweighted least squares; cross entropy runs gradient
/// descent with backtracking. MBE is rejected: it is linear in `μ`.
/// The reported energy is always `evaluate(form, params, d)`.
pub fn min_energy(form: &EnergyForm, d: &Dataset, opts: &SolverOptions) -> Result<Minimum> {
    if form.base == BaseEnergy::CrossEntropy {
        check_ce_labels(d)?;
    }
    let result = match (form.base, form.reg) {
        (BaseEnergy::Mbe, _) => return Err(Error::MbeHasNoMinimum),
        (BaseEnergy::Mse, Regularization::None) => least_squares(d),
        (BaseEnergy::Mse, Regularization::L2) => ridge(d, form.lambda),
        (BaseEnergy::Mse, Regularization::L1) => lasso(form, d, opts),
        (BaseEnergy::Mae, _) => mae_irls(form, d, opts),
        (BaseEnergy::CrossEntropy, _) => ce_descent(form, d, opts),
    };
    result.map(|(mu, converged, iterations)| {
        let energy = evaluate_unchecked(form, &mu, d);
        Minimum {
            params: ModelParams::new(mu),
            energy,
            converged,
            iterations,
        }
    })
}

fn least_squares(d: &Dataset) -> Result<(Vec<f64>, bool, usize)> {
    let a = d.design_matrix();
    let y = d.label_vector();
    let svd = a.svd(true, true);
    let mu = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::InvalidParams { reason: e.into() })?;
    Ok((mu.iter().copied().collect(), true, 0))
}

fn ridge(d: &Dataset, lambda: f64) -> Result<(Vec<f64>, bool, usize)> {
    // minimize (1/n)‖Aμ − y‖² + λ‖μ‖²  ⇒  (AᵀA + nλI) μ = Aᵀy
    let a = d.design_matrix();
    let y = d.label_vector();
    let k = d.param_dim();
    let n = d.len() as f64;
    let gram = a.transpose() * &a + DMatrix::identity(k, k) * (n * lambda);
    let rhs = a.transpose() * y;
    // positive lambda makes the gram SPD; SVD covers pathological scaling
    let mu = match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => gram
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::InvalidParams { reason: e.into() })?,
    };
    Ok((mu.iter().copied().collect(), true, 0))
}

fn lasso(form: &EnergyForm, d: &Dataset, opts: &SolverOptions) -> Result<(Vec<f64>, bool, usize)> {
    // Coordinate descent on (1/n)‖Aμ − y‖² + λ Σ|μ_j|.
    let n = d.len() as f64;
    let k = d.param_dim();
    let lambda = form.lambda;
    let a = d.design_matrix();
    let y = d.label_vector();

    let col_sq: Vec<f64> = (0..k).map(|j| a.column(j).norm_squared() / n).collect();
    let mut mu = vec![0.0; k];
    let mut resid = -y.clone(); // Aμ − y at μ = 0

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut max_delta: f64 = 0.0;
        for j in 0..k {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = a.column(j);
            // partial gradient with μ_j removed
            let g = 2.0 / n * (col.dot(&resid) - col_sq[j] * n * mu[j]);
            let target = -g;
            let new = soft_threshold(target, lambda) / (2.0 * col_sq[j]);
            let delta = new - mu[j];
            if delta != 0.0 {
                resid += col * delta;
                mu[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < opts.grad_tol {
            converged = true;
            break;
        }
    }
    Ok((mu, converged, iterations))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn mae_irls(form: &EnergyForm, d: &Dataset, opts: &SolverOptions) -> Result<(Vec<f64>, bool, usize)> {
    // Majorize |r| by r²/(2 max(|r₀|, ε)) and resolve the weighted normal
    // equations; penalties enter as diagonal terms.
    let n = d.len() as f64;
    let k = d.param_dim();
    let a = d.design_matrix();
    let y = d.label_vector();
    let eps = opts.smoothing_eps;

    let mut mu = least_squares(d)?.0;
    let mut best = mu.clone();
    let mut best_energy = evaluate_unchecked(form, &mu, d);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let mu_vec = DVector::from_column_slice(&mu);
        let resid = &a * &mu_vec - &y;

        let mut gram = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for i in 0..d.len() {
            let w = 1.0 / resid[i].abs().max(eps) / n;
            for j in 0..k {
                let aij = a[(i, j)];
                rhs[j] += w * aij * y[i];
                for l in 0..k {
                    gram[(j, l)] += w * aij * a[(i, l)];
                }
            }
        }
        match form.reg {
            Regularization::None => {}
            Regularization::L2 => {
                for j in 0..k {
                    gram[(j, j)] += 2.0 * form.lambda;
                }
            }
            Regularization::L1 => {
                for j in 0..k {
                    gram[(j, j)] += form.lambda / mu[j].abs().max(eps);
                }
            }
        }
        let next = gram
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or_else(|| gram.svd(true, true).solve(&rhs, 1e-12).unwrap_or(mu_vec.clone()));

        let delta = (&next - &mu_vec).amax();
        mu = next.iter().copied().collect();
        let energy = evaluate_unchecked(form, &mu, d);
        if energy < best_energy {
            best_energy = energy;
            best = mu.clone();
        }
        if delta < 1e-12 {
            converged = true;
            break;
        }
    }
    Ok((best, converged, iterations))
}

fn ce_descent(form: &EnergyForm, d: &Dataset, opts: &SolverOptions) -> Result<(Vec<f64>, bool, usize)> {
    ce_descent_from(form, d, opts, vec![0.0; d.param_dim()])
}

/// Gradient descent with backtracking from an explicit starting point.
/// Exposed so convexity can be checked by starting elsewhere.
pub fn ce_descent_from(
    form: &EnergyForm,
    d: &Dataset,
    opts: &SolverOptions,
    start: Vec<f64>,
) -> Result<(Vec<f64>, bool, usize)> {
    check_ce_labels(d)?;
    if start.len() != d.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.param_dim(),
            got: start.len(),
        });
    }
    let n = d.len() as f64;
    let k = d.param_dim();
    let stored = d.stored_dim();
    let eps = opts.smoothing_eps;

    let gradient = |mu: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; k];
        for i in 0..d.len() {
            let z = linear_output(mu, d, i);
            let e = (sigmoid(z) - d.label(i)) / n;
            for (gj, x) in g.iter_mut().zip(d.row(i)) {
                *gj += e * x;
            }
            g[stored] += e;
        }
        match form.reg {
            Regularization::None => {}
            Regularization::L2 => {
                for j in 0..k {
                    g[j] += 2.0 * form.lambda * mu[j];
                }
            }
            Regularization::L1 => {
                // smoothed subgradient
                for j in 0..k {
                    g[j] += form.lambda * mu[j] / mu[j].abs().max(eps);
                }
            }
        }
        g
    };

    let mut mu = start;
    let mut energy = evaluate_unchecked(form, &mu, d);
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let g = gradient(&mu);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= opts.grad_tol {
            converged = true;
            break;
        }
        // backtracking line search on the energy itself
        let mut accepted = false;
        while step > 1e-18 {
            let trial: Vec<f64> = mu.iter().zip(&g).map(|(m, gi)| m - step * gi).collect();
            let trial_energy = evaluate_unchecked(form, &trial, d);
            if trial_energy < energy {
                mu = trial;
                energy = trial_energy;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // step underflow: report best-so-far, unconverged
        }
    }
    Ok((mu, converged, iterations))
}

/// Covariance-trace final-energy expression, `(1/n)·tr{C_x − C_xy C_y⁻¹ C_yx}`
/// over the stored features. Reported alongside the least-squares minimum for
/// comparison; `None` when the label variance vanishes.
pub fn trace_final_energy_estimate(s: &DataStats, n: usize) -> Option<f64> {
    if s.cov_yy <= 0.0 {
        return None;
    }
    let outer = &s.cov_xy * &s.cov_yx / s.cov_yy;
    Some((&s.cov_xx - outer).trace() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::stats;
    use approx::assert_relative_eq;

    fn ds(xs: &[f64], ys: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec()).unwrap()
    }

    #[test]
    fn mse_perfect_fit_is_zero() {
        let d = ds(&[1.0, 2.0], &[1.0, 2.0]);
        let e = evaluate(&EnergyForm::mse(), &ModelParams::new(vec![1.0, 0.0]), &d).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn mse_squared_residual() {
        let d = ds(&[1.0], &[2.0]);
        let e = evaluate(&EnergyForm::mse(), &ModelParams::new(vec![0.0, 0.0]), &d).unwrap();
        assert_eq!(e, 4.0);
    }

    #[test]
    fn ce_at_origin_is_ln2() {
        let d = ds(&[0.5, -2.0, 3.0], &[0.0, 1.0, 1.0]);
        let form = EnergyForm::plain(BaseEnergy::CrossEntropy);
        let e = evaluate(&form, &ModelParams::new(vec![0.0, 0.0]), &d).unwrap();
        assert_relative_eq!(e, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn ce_is_stable_at_extreme_arguments() {
        let d = ds(&[1.0], &[1.0]);
        let form = EnergyForm::plain(BaseEnergy::CrossEntropy);
        let far_neg = evaluate(&form, &ModelParams::new(vec![-1e4, 0.0]), &d).unwrap();
        assert!((far_neg - 1e4).abs() < 1e-9); // softplus(-z) -> -z
        let far_pos = evaluate(&form, &ModelParams::new(vec![1e4, 0.0]), &d).unwrap();
        assert_eq!(far_pos, 0.0);
    }

    #[test]
    fn ce_rejects_non_binary_labels() {
        let d = ds(&[1.0], &[0.5]);
        let form = EnergyForm::plain(BaseEnergy::CrossEntropy);
        assert!(matches!(
            min_energy(&form, &d, &SolverOptions::default()),
            Err(Error::NonBinaryLabels { .. })
        ));
        assert!(matches!(
            evaluate(&form, &ModelParams::new(vec![0.0, 0.0]), &d),
            Err(Error::NonBinaryLabels { row: 0, .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = ds(&[1.0], &[1.0]);
        assert!(matches!(
            evaluate(&EnergyForm::mse(), &ModelParams::new(vec![1.0]), &d),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn least_squares_collinear_points() {
        let d = ds(&[0.0, 1.0], &[0.0, 1.0]);
        let m = min_energy(&EnergyForm::mse(), &d, &SolverOptions::default()).unwrap();
        assert!(m.energy.abs() < 1e-24);
        assert_relative_eq!(m.params.mu[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(m.params.mu[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn least_squares_uncorrelated_leaves_label_variance() {
        // ρ = 0 so the minimum equals Var(Y) = 0.25.
        let d = ds(&[0.0, 1.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 1.0]);
        let m = min_energy(&EnergyForm::mse(), &d, &SolverOptions::default()).unwrap();
        assert_relative_eq!(m.energy, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn least_squares_matches_correlation_identity() {
        let d = ds(&[1.0, -1.0], &[1.0, -1.0]);
        let m = min_energy(&EnergyForm::mse(), &d, &SolverOptions::default()).unwrap();
        let s = stats(&d);
        let expect = (1.0 - s.corr_2d.unwrap().powi(2)) * s.label_var;
        assert!((m.energy - expect).abs() < 1e-12);
    }

    #[test]
    fn mbe_is_signed() {
        let d = ds(&[1.0, 2.0], &[1.0, 2.0]);
        let form = EnergyForm::plain(BaseEnergy::Mbe);
        let over = evaluate(&form, &ModelParams::new(vec![1.0, 1.0]), &d).unwrap();
        let under = evaluate(&form, &ModelParams::new(vec![1.0, -1.0]), &d).unwrap();
        assert_eq!(over, 1.0);
        assert_eq!(under, -1.0);
    }

    #[test]
    fn mbe_minimum_is_rejected() {
        let d = ds(&[1.0], &[1.0]);
        assert!(matches!(
            min_energy(&EnergyForm::plain(BaseEnergy::Mbe), &d, &SolverOptions::default()),
            Err(Error::MbeHasNoMinimum)
        ));
    }

    #[test]
    fn ridge_shrinks_towards_zero() {
        let d = ds(&[0.0, 1.0, 2.0, 3.0], &[0.1, 1.1, 1.9, 3.2]);
        let plain = min_energy(&EnergyForm::mse(), &d, &SolverOptions::default()).unwrap();
        let l2 = EnergyForm::new(BaseEnergy::Mse, Regularization::L2, 0.5).unwrap();
        let shrunk = min_energy(&l2, &d, &SolverOptions::default()).unwrap();
        let norm = |m: &Minimum| m.params.mu.iter().map(|v| v * v).sum::<f64>();
        assert!(norm(&shrunk) < norm(&plain));
        // the regularized minimum beats any probe on its own objective
        let probe = evaluate(&l2, &plain.params, &d).unwrap();
        assert!(shrunk.energy <= probe + 1e-12);
    }

    #[test]
    fn lasso_matches_brute_force_on_small_case() {
        let d = ds(&[0.0, 1.0, 2.0, 3.0], &[0.5, 0.8, 2.2, 2.9]);
        let form = EnergyForm::new(BaseEnergy::Mse, Regularization::L1, 0.8).unwrap();
        let m = min_energy(&form, &d, &SolverOptions::default()).unwrap();
        assert!(m.converged);
        // dense grid probe around the solution
        let mut best = f64::INFINITY;
        let center = m.params.mu.clone();
        let span = 0.5;
        let steps = 60;
        for a in 0..=steps {
            for b in 0..=steps {
                let mu = vec![
                    center[0] - span + 2.0 * span * a as f64 / steps as f64,
                    center[1] - span + 2.0 * span * b as f64 / steps as f64,
                ];
                let e = evaluate_unchecked(&form, &mu, &d);
                best = best.min(e);
            }
        }
        assert!(m.energy <= best + 1e-6, "{} vs {}", m.energy, best);
    }

    #[test]
    fn mae_irls_finds_median_like_fit() {
        // MAE regression through points with one outlier tracks the median line.
        let d = ds(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.0, 1.0, 2.0, 3.0, 40.0]);
        let form = EnergyForm::plain(BaseEnergy::Mae);
        let m = min_energy(&form, &d, &SolverOptions::default()).unwrap();
        assert_relative_eq!(m.params.mu[0], 1.0, epsilon = 1e-4);
        assert_relative_eq!(m.params.mu[1], 0.0, epsilon = 1e-4);
    }

    #[test]
    fn ce_descent_reaches_flat_gradient() {
        // overlapping classes: finite unique minimum
        let d = Dataset::new(
            vec![vec![-2.0], vec![-1.0], vec![0.5], vec![-0.5], vec![1.0], vec![2.0]],
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        let form = EnergyForm::plain(BaseEnergy::CrossEntropy);
        let opts = SolverOptions::default();
        let m = min_energy(&form, &d, &opts).unwrap();
        assert!(m.converged, "did not converge in {} iterations", m.iterations);

        let (other, _, _) =
            ce_descent_from(&form, &d, &opts, vec![3.0, -2.0]).unwrap();
        let e_other = evaluate_unchecked(&form, &other, &d);
        assert!((m.energy - e_other).abs() < 1e-9);
        for (a, b) in m.params.mu.iter().zip(&other) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn trace_estimate_is_reported_for_comparison() {
        let d = ds(&[1.0, 2.0, 3.0], &[1.5, 1.9, 3.1]);
        let s = stats(&d);
        let t = trace_final_energy_estimate(&s, d.len()).unwrap();
        assert!(t.is_finite());
        let degenerate = ds(&[1.0, 2.0], &[1.0, 1.0]);
        assert!(trace_final_energy_estimate(&stats(&degenerate), 2).is_none());
    }
}
