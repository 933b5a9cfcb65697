//! Closed-form and asymptotic phase-transition temperatures.
//!
//! A freshly initialized system holds mean energy `⟨E₀⟩`; training relaxes it
//! to the minimum `E_f` while the initialization entropy `S₀` collapses. The
//! transition temperature is `T = (⟨E₀⟩ − E_f)/S₀`. For squared-error energy
//! the mean initial energy has an exact form for normal, uniform, and mixed
//! initializations (with additive L1/L2 corrections); absolute-error and
//! cross-entropy energies only admit large-scale asymptotics.

use serde::Serialize;

use crate::dataset::{stats, Dataset};
use crate::energy::{min_energy, BaseEnergy, EnergyForm, Regularization, SolverOptions};
use crate::error::{Error, Result};
use crate::init_dist::{differential_entropy, Component, InitDistribution};
use crate::nn::{self, NnSpec};

/// How a reported temperature was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Asymptotic,
    Oracle,
}

/// Identifier of the formula a report was computed with, for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaId {
    MseNormal,
    MseUniform,
    MseMixed,
    MseNormalAsym,
    MseUniformAsym,
    MaeNormalAsym,
    MaeUniformAsym,
    CeNormalAsymLower,
    CeUniformAsymLower,
    NnSystemAsym,
    OracleMean,
}

impl FormulaId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormulaId::MseNormal => "mse-normal",
            FormulaId::MseUniform => "mse-uniform",
            FormulaId::MseMixed => "mse-mixed",
            FormulaId::MseNormalAsym => "mse-normal-asym",
            FormulaId::MseUniformAsym => "mse-uniform-asym",
            FormulaId::MaeNormalAsym => "mae-normal-asym",
            FormulaId::MaeUniformAsym => "mae-uniform-asym",
            FormulaId::CeNormalAsymLower => "ce-normal-asym-lower",
            FormulaId::CeUniformAsymLower => "ce-uniform-asym-lower",
            FormulaId::NnSystemAsym => "nn-system-asym",
            FormulaId::OracleMean => "oracle-mean",
        }
    }

    /// Id with the regularization suffix used in verification tables.
    pub fn with_reg(&self, reg: Regularization) -> String {
        let suffix = match reg {
            Regularization::None => "",
            Regularization::L1 => "-l1",
            Regularization::L2 => "-l2",
        };
        format!("{}{}", self.as_str(), suffix)
    }
}

impl Serialize for FormulaId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl std::fmt::Display for FormulaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Temperature of one phase transition, with its ingredients.
#[derive(Debug, Clone)]
pub struct TemperatureReport {
    /// `⟨E₀⟩`; absent for purely asymptotic evaluations.
    pub mean_initial_energy: Option<f64>,
    /// `E_f`. For asymptotic reports this is the term the formula drops,
    /// recorded so its size can be judged against the kept one.
    pub final_energy: Option<f64>,
    /// `S₀`; absent for purely asymptotic evaluations.
    pub entropy: Option<f64>,
    pub temperature: f64,
    pub method: Method,
    pub formula_id: FormulaId,
    /// Scale parameter (σ or l) recorded for asymptotic reports.
    pub scale: Option<f64>,
}

/// Exact mean initial energy for squared-error energy.
///
/// `⟨E₀⟩ = Σ_j v_j X̄²_j + Ȳ²` with `v_j` the per-dimension initialization
/// variance (`σ_j²`, or `l_j²/12` for uniform widths) and `X̄²_K = 1` for the
/// bias. L1 adds `λ Σ_j E|μ_j|`, L2 adds `λ Σ_j v_j`. Other base energies
/// have no closed form here.
pub fn mean_initial_energy(
    form: &EnergyForm,
    dist: &InitDistribution,
    d: &Dataset,
) -> Result<f64> {
    if form.base() != BaseEnergy::Mse {
        return Err(Error::Unsupported {
            what: format!("closed-form mean energy for base `{}`", form.base().as_str()),
        });
    }
    if dist.dim() != d.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.param_dim(),
            got: dist.dim(),
        });
    }
    let s = stats(d);
    let components = dist.components();
    let mut energy = s.label_mean_sq;
    for (c, &xsq) in components.iter().zip(&s.mean_sq) {
        energy += c.variance() * xsq;
    }
    match form.reg() {
        Regularization::None => {}
        Regularization::L1 => {
            energy += form.lambda() * components.iter().map(Component::mean_abs).sum::<f64>();
        }
        Regularization::L2 => {
            energy += form.lambda() * components.iter().map(Component::variance).sum::<f64>();
        }
    }
    Ok(energy)
}

fn formula_for(dist: &InitDistribution) -> FormulaId {
    match dist {
        InitDistribution::DiagonalNormal { .. } => FormulaId::MseNormal,
        InitDistribution::UniformBox { .. } => FormulaId::MseUniform,
        InitDistribution::Mixed { .. } => FormulaId::MseMixed,
    }
}

/// Exact transition temperature `T = (⟨E₀⟩ − E_f)/S₀`.
///
/// Negative entropies give negative temperatures and are reported as such;
/// only `S₀ = 0` is an error, since the temperature is then undefined.
pub fn temperature_type1(
    form: &EnergyForm,
    dist: &InitDistribution,
    d: &Dataset,
) -> Result<TemperatureReport> {
    let e0 = mean_initial_energy(form, dist, d)?;
    build_report(
        e0,
        form,
        dist,
        d,
        Method::ClosedForm,
        formula_for(dist),
    )
}

/// Transition temperature from an externally estimated `⟨E₀⟩` (for energy
/// forms without a closed form, pass a Monte-Carlo or quadrature estimate).
pub fn temperature_type1_with_energy(
    e0: f64,
    form: &EnergyForm,
    dist: &InitDistribution,
    d: &Dataset,
) -> Result<TemperatureReport> {
    build_report(e0, form, dist, d, Method::Oracle, FormulaId::OracleMean)
}

fn build_report(
    e0: f64,
    form: &EnergyForm,
    dist: &InitDistribution,
    d: &Dataset,
    method: Method,
    formula_id: FormulaId,
) -> Result<TemperatureReport> {
    let s0 = differential_entropy(dist);
    if s0 == 0.0 {
        return Err(Error::ZeroEntropy);
    }
    let minimum = min_energy(form, d, &SolverOptions::default())?;
    if !minimum.converged {
        log::warn!(
            "minimum-energy search stopped at the iteration budget; using best-so-far {}",
            minimum.energy
        );
    }
    let ef = minimum.energy;
    Ok(TemperatureReport {
        mean_initial_energy: Some(e0),
        final_energy: Some(ef),
        entropy: Some(s0),
        temperature: (e0 - ef) / s0,
        method,
        formula_id,
        scale: None,
    })
}

/// Initialization family for the asymptotic rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticFamily {
    Normal,
    Uniform,
}

/// Large-scale asymptotic temperature for `(form, family)` at `scale`.
///
/// Rows, with `X̄²` and `|X|‾` averaged over all K components bias included:
/// squared error: `X̄² σ²/ln σ` (normal), `X̄² l²/(12 ln l)` (uniform); L1
/// leaves the row unchanged, L2 multiplies by `1 + λ/X̄²`; absolute error:
/// `√(2/π)(σ/ln σ)|X|‾` and `(l/(4 ln l))|X|‾`; cross entropy (lower-bound
/// rows): `e^{σ²/2}/(K ln σ)` and `0.614·e^{l/2}/(l ln l)`. When `nn` is
/// given, the architecture's system temperature is evaluated instead with
/// the family/scale as its initialization.
pub fn asymptotic_temperature(
    form: &EnergyForm,
    family: AsymptoticFamily,
    d: &Dataset,
    scale: f64,
    nn_arch: Option<&NnSpec>,
) -> Result<(f64, FormulaId)> {
    if scale.is_nan() || scale < 10.0 {
        return Err(Error::InvalidParams {
            reason: format!("asymptotic evaluation needs scale >= 10, got {scale}"),
        });
    }
    if scale < 1e3 {
        log::warn!("asymptotic formulas are loose below scale 1e3 (got {scale})");
    }

    if let Some(arch) = nn_arch {
        if form.base() != BaseEnergy::Mse {
            return Err(Error::Unsupported {
                what: "network temperatures for a non-squared-error energy".into(),
            });
        }
        let init = match family {
            AsymptoticFamily::Normal => nn::NnInit::ConstantSigma(scale),
            AsymptoticFamily::Uniform => nn::NnInit::UniformConstant(scale),
        };
        let spec = arch.with_init(init)?;
        let report = nn::efficiency_and_classification(&spec, d)?;
        return Ok((report.system_t, FormulaId::NnSystemAsym));
    }

    let s = stats(d);
    let mean_sq = s.component_mean_sq_avg();
    let mean_abs = s.component_mean_abs_avg();
    let k = d.param_dim() as f64;
    let log_scale = scale.ln();

    let (value, id) = match (form.base(), family) {
        (BaseEnergy::Mse, AsymptoticFamily::Normal) => {
            let base = mean_sq * scale * scale / log_scale;
            (apply_reg_asym(base, form, mean_sq), FormulaId::MseNormalAsym)
        }
        (BaseEnergy::Mse, AsymptoticFamily::Uniform) => {
            let base = mean_sq * scale * scale / (12.0 * log_scale);
            (apply_reg_asym(base, form, mean_sq), FormulaId::MseUniformAsym)
        }
        (BaseEnergy::Mae, AsymptoticFamily::Normal) => (
            (2.0 / std::f64::consts::PI).sqrt() * scale / log_scale * mean_abs,
            FormulaId::MaeNormalAsym,
        ),
        (BaseEnergy::Mae, AsymptoticFamily::Uniform) => (
            0.25 * scale / log_scale * mean_abs,
            FormulaId::MaeUniformAsym,
        ),
        (BaseEnergy::CrossEntropy, AsymptoticFamily::Normal) => (
            (scale * scale / 2.0).exp() / (k * log_scale),
            FormulaId::CeNormalAsymLower,
        ),
        (BaseEnergy::CrossEntropy, AsymptoticFamily::Uniform) => (
            0.614 * (scale / 2.0).exp() / (scale * log_scale),
            FormulaId::CeUniformAsymLower,
        ),
        (BaseEnergy::Mbe, _) => {
            return Err(Error::Unsupported {
                what: "asymptotic temperature for mean bias error".into(),
            })
        }
    };
    Ok((value, id))
}

fn apply_reg_asym(base: f64, form: &EnergyForm, mean_sq: f64) -> f64 {
    match form.reg() {
        // L1's contribution is lower order in the scale and drops out.
        Regularization::None | Regularization::L1 => base,
        Regularization::L2 => base * (1.0 + form.lambda() / mean_sq),
    }
}

/// Large-scale mean initial energy for cross-entropy systems.
///
/// Normal: `e^{σ_K²/2} · mean_i exp[½ Σ_j σ_j² x_ij²]`. Uniform: mean over
/// rows of `Π_j (e^{l_j|x_ij|/2} / (l_j|x_ij|)) · e^{l_K/2}/l_K`, which is
/// singular when some `x_ij = 0`; that case needs an exact oracle.
/// These are tail estimates: they bound the energy scale rather than track
/// the exact integral at moderate σ.
pub fn ce_asymptotic_energy(dist: &InitDistribution, d: &Dataset) -> Result<f64> {
    if let Some((row, found)) = d.first_non_binary_label() {
        return Err(Error::NonBinaryLabels { row, found });
    }
    if dist.dim() != d.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.param_dim(),
            got: dist.dim(),
        });
    }
    let stored = d.stored_dim();
    match dist {
        InitDistribution::DiagonalNormal { sigmas } => {
            let intercept = sigmas[stored];
            let mut mean = 0.0;
            for i in 0..d.len() {
                let mut log_term = 0.0;
                for (sigma, x) in sigmas.iter().zip(d.row(i)) {
                    let sx = sigma * x;
                    log_term += 0.5 * sx * sx;
                }
                mean += log_term.exp();
            }
            mean /= d.len() as f64;
            Ok((0.5 * intercept * intercept).exp() * mean)
        }
        InitDistribution::UniformBox { lengths } => {
            let intercept = lengths[stored];
            let mut mean = 0.0;
            for i in 0..d.len() {
                let mut term = (0.5 * intercept).exp() / intercept;
                for (length, x) in lengths.iter().zip(d.row(i)) {
                    let lx = length * x.abs();
                    if lx == 0.0 {
                        return Err(Error::NeedsExactOracle);
                    }
                    term *= (0.5 * lx).exp() / lx;
                }
                mean += term;
            }
            Ok(mean / d.len() as f64)
        }
        InitDistribution::Mixed { .. } => Err(Error::Unsupported {
            what: "cross-entropy asymptotics for mixed initialization".into(),
        }),
    }
}
