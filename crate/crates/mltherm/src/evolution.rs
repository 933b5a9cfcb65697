//! Data-shift states: joint-distribution entropy, shift temperatures,
//! the train/retrain pipeline, and system mixing.
//!
//! Once a model is trained, the system's state is the (model, dataset) pair;
//! its entropy lives in the data's joint distribution `P(x, y)` and changes
//! as the data shifts. A shift from state `j` to `j+1` has temperature
//! `T = (E_{j+1} − E_j)/(S_j − S_{j+1})`. The joint is estimated either by a
//! low-dimensional histogram or from the trained model's conditional times
//! an assumed feature marginal.

use statrs::function::erf::erf;

use crate::dataset::{stats, Dataset};
use crate::energy::{min_energy, sigmoid, BaseEnergy, EnergyForm, ModelParams, SolverOptions};
use crate::error::{Error, Result};
use crate::init_dist::InitDistribution;
use crate::oracle::mc_mean_energy;
use crate::thermo::{
    temperature_type1_with_energy, AsymptoticFamily, FormulaId, TemperatureReport,
};

/// How a joint estimate was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Histogram,
    /// Model conditional combined with an assumed feature marginal.
    ModelConditional { marginal: MarginalSpec },
}

/// Assumption on the feature marginal `P(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalSpec {
    /// Cell frequencies of the observed features.
    Empirical,
    /// Equal mass on every occupied feature cell.
    UniformOverRange,
}

/// One cell of a discretized joint distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCell {
    /// Bin index per feature axis.
    pub x_bins: Vec<usize>,
    /// Bin index on the label axis.
    pub y_bin: usize,
    pub prob: f64,
}

/// Discretized joint distribution over (features, label).
#[derive(Debug, Clone)]
pub struct JointEstimate {
    pub cells: Vec<JointCell>,
    pub provenance: Provenance,
}

impl JointEstimate {
    fn normalized(mut cells: Vec<JointCell>, provenance: Provenance) -> Result<Self> {
        cells.retain(|c| c.prob > 0.0);
        let total: f64 = cells.iter().map(|c| c.prob).sum();
        if total <= 0.0 {
            return Err(Error::InvalidParams {
                reason: "joint estimate has no mass".into(),
            });
        }
        for c in &mut cells {
            c.prob /= total;
        }
        Ok(JointEstimate { cells, provenance })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.prob).collect()
    }
}

/// Shannon entropy `−Σ p ln p` of a joint estimate, in nats.
pub fn data_entropy(j: &JointEstimate) -> f64 {
    -j.cells
        .iter()
        .filter(|c| c.prob > 0.0)
        .map(|c| c.prob * c.prob.ln())
        .sum::<f64>()
}

const MAX_JOINT_FEATURES: usize = 2;

fn equal_width_edges(min: f64, max: f64, bins: usize) -> (f64, f64) {
    if max > min {
        (min, (max - min) / bins as f64)
    } else {
        // degenerate axis: one unit-width cell around the value
        (min - 0.5, 1.0)
    }
}

fn bin_of(value: f64, origin: f64, width: f64, bins: usize) -> usize {
    (((value - origin) / width) as usize).min(bins - 1)
}

/// Histogram estimate of the joint distribution. `bins` lists per-axis bin
/// counts: one entry per feature axis, then one for the label axis.
pub fn joint_histogram(d: &Dataset, bins: &[usize]) -> Result<JointEstimate> {
    let axes = d.stored_dim() + 1;
    if d.stored_dim() > MAX_JOINT_FEATURES {
        return Err(Error::DimensionTooHigh {
            dim: d.param_dim(),
            what: "joint histogram",
            limit: MAX_JOINT_FEATURES + 1,
        });
    }
    if bins.len() != axes {
        return Err(Error::InvalidParams {
            reason: format!("expected {axes} bin counts, got {}", bins.len()),
        });
    }
    if bins.contains(&0) {
        return Err(Error::InvalidParams {
            reason: "bin counts must be at least 1".into(),
        });
    }

    let mut grids = Vec::with_capacity(axes);
    for (axis, &axis_bins) in bins.iter().enumerate() {
        let values: Vec<f64> = (0..d.len())
            .map(|i| {
                if axis < d.stored_dim() {
                    d.feature(i, axis)
                } else {
                    d.label(i)
                }
            })
            .collect();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        grids.push(equal_width_edges(min, max, axis_bins));
    }

    let mut counts: std::collections::BTreeMap<Vec<usize>, u64> = std::collections::BTreeMap::new();
    for i in 0..d.len() {
        let mut key = Vec::with_capacity(axes);
        for axis in 0..d.stored_dim() {
            let (origin, width) = grids[axis];
            key.push(bin_of(d.feature(i, axis), origin, width, bins[axis]));
        }
        let (origin, width) = grids[d.stored_dim()];
        key.push(bin_of(d.label(i), origin, width, bins[d.stored_dim()]));
        *counts.entry(key).or_insert(0) += 1;
    }

    let n = d.len() as f64;
    let cells = counts
        .into_iter()
        .map(|(mut key, count)| {
            let y_bin = key.pop().expect("key always has a label axis");
            JointCell {
                x_bins: key,
                y_bin,
                prob: count as f64 / n,
            }
        })
        .collect();
    JointEstimate::normalized(cells, Provenance::Histogram)
}

/// Observation model attached to a regression conditional: Gaussian noise of
/// width `sigma` discretized over `y_bins` label cells.
#[derive(Debug, Clone, Copy)]
pub struct GaussianNoiseSpec {
    pub sigma: f64,
    pub y_bins: usize,
}

/// Configuration for [`joint_from_model`].
#[derive(Debug, Clone)]
pub struct JointModelConfig {
    pub marginal: MarginalSpec,
    /// Required for regression energies; ignored for the logistic model.
    pub noise: Option<GaussianNoiseSpec>,
    /// Feature bins per axis; `⌈√n⌉` when unset.
    pub x_bins: Option<usize>,
}

impl Default for JointModelConfig {
    fn default() -> Self {
        JointModelConfig {
            marginal: MarginalSpec::Empirical,
            noise: None,
            x_bins: None,
        }
    }
}

/// Joint estimate `P(y|x)·P(x)` from a trained model.
///
/// Cross-entropy models supply `P(y|x)` directly over the two label cells;
/// squared/absolute-error models need a [`GaussianNoiseSpec`] to widen the
/// point prediction into a conditional density. `P(x)` is either the
/// empirical cell frequency or uniform over occupied cells.
pub fn joint_from_model(
    params: &ModelParams,
    form: &EnergyForm,
    xs: &Dataset,
    cfg: &JointModelConfig,
) -> Result<JointEstimate> {
    if xs.stored_dim() > MAX_JOINT_FEATURES {
        return Err(Error::DimensionTooHigh {
            dim: xs.param_dim(),
            what: "model-conditional joint",
            limit: MAX_JOINT_FEATURES + 1,
        });
    }
    if params.dim() != xs.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: xs.param_dim(),
            got: params.dim(),
        });
    }
    let x_bins = cfg
        .x_bins
        .unwrap_or_else(|| (xs.len() as f64).sqrt().ceil() as usize)
        .max(1);

    // Bin features and accumulate the marginal cell mass.
    let dim = xs.stored_dim();
    let mut grids = Vec::with_capacity(dim);
    for axis in 0..dim {
        let values: Vec<f64> = (0..xs.len()).map(|i| xs.feature(i, axis)).collect();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        grids.push(equal_width_edges(min, max, x_bins));
    }
    let mut occupancy: std::collections::BTreeMap<Vec<usize>, u64> =
        std::collections::BTreeMap::new();
    for i in 0..xs.len() {
        let key: Vec<usize> = (0..dim)
            .map(|axis| {
                let (origin, width) = grids[axis];
                bin_of(xs.feature(i, axis), origin, width, x_bins)
            })
            .collect();
        *occupancy.entry(key).or_insert(0) += 1;
    }
    let n = xs.len() as f64;
    let cell_count = occupancy.len() as f64;

    let mut cells = Vec::new();
    for (key, count) in &occupancy {
        let px = match cfg.marginal {
            MarginalSpec::Empirical => *count as f64 / n,
            MarginalSpec::UniformOverRange => 1.0 / cell_count,
        };
        // representative point: cell centers
        let center: Vec<f64> = key
            .iter()
            .enumerate()
            .map(|(axis, &b)| {
                let (origin, width) = grids[axis];
                origin + (b as f64 + 0.5) * width
            })
            .collect();
        let z: f64 = center
            .iter()
            .enumerate()
            .map(|(j, x)| params.mu[j] * x)
            .sum::<f64>()
            + params.mu[dim];

        match form.base() {
            BaseEnergy::CrossEntropy => {
                let p1 = sigmoid(z);
                cells.push(JointCell {
                    x_bins: key.clone(),
                    y_bin: 0,
                    prob: px * (1.0 - p1),
                });
                cells.push(JointCell {
                    x_bins: key.clone(),
                    y_bin: 1,
                    prob: px * p1,
                });
            }
            BaseEnergy::Mse | BaseEnergy::Mae | BaseEnergy::Mbe => {
                let noise = cfg.noise.ok_or(Error::MissingNoiseSpec)?;
                if noise.y_bins == 0 {
                    return Err(Error::InvalidParams {
                        reason: "noise spec needs at least one label bin".into(),
                    });
                }
                let y_min = xs.labels().iter().cloned().fold(f64::INFINITY, f64::min);
                let y_max = xs.labels().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let (origin, width) = equal_width_edges(y_min, y_max, noise.y_bins);
                for y_bin in 0..noise.y_bins {
                    let lo = origin + y_bin as f64 * width;
                    let hi = lo + width;
                    let mass = if noise.sigma > 0.0 {
                        gaussian_cell_mass(z, noise.sigma, lo, hi)
                    } else if z >= lo && (z < hi || y_bin == noise.y_bins - 1) {
                        1.0
                    } else {
                        0.0
                    };
                    if mass > 0.0 {
                        cells.push(JointCell {
                            x_bins: key.clone(),
                            y_bin,
                            prob: px * mass,
                        });
                    }
                }
            }
        }
    }
    JointEstimate::normalized(
        cells,
        Provenance::ModelConditional {
            marginal: cfg.marginal,
        },
    )
}

fn gaussian_cell_mass(mean: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let phi = |x: f64| 0.5 * (1.0 + erf((x - mean) / (sigma * std::f64::consts::SQRT_2)));
    (phi(hi) - phi(lo)).max(0.0)
}

/// Shift temperature `T = (E_next − E_prev)/(S_prev − S_next)`.
pub fn shift_temperature(prev: (f64, f64), next: (f64, f64)) -> Result<f64> {
    let (e_prev, s_prev) = prev;
    let (e_next, s_next) = next;
    if s_prev == s_next {
        return Err(Error::UndefinedShiftTemperature);
    }
    Ok((e_next - e_prev) / (s_prev - s_next))
}

/// One dataset's entry in a train/retrain sequence.
#[derive(Debug, Clone)]
pub struct ShiftStep {
    pub dataset_id: usize,
    /// Trained (minimum) energy `Ê(D_j)`.
    pub energy: Option<f64>,
    /// Data entropy of the trained state.
    pub data_entropy: Option<f64>,
    /// Transition temperature of the training phase on this dataset.
    pub phase_t: Option<f64>,
    /// Shift temperature into the next dataset; absent on the last step or
    /// when the entropies coincide.
    pub shift_t: Option<f64>,
    /// Diagnostic for any quantity this step could not produce.
    pub note: Option<String>,
}

/// Configuration for [`refresh_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub joint: JointModelConfig,
    /// Monte-Carlo fallback for the phase temperature when the energy form
    /// has no closed mean.
    pub mc_samples: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            joint: JointModelConfig::default(),
            mc_samples: 100_000,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

/// Walk a dataset sequence: train on each, record the phase-transition
/// temperature, the trained energy, the data entropy of the trained state,
/// and the shift temperature between consecutive states. A step that fails
/// is flagged in its `note` and the walk continues.
pub fn refresh_pipeline(
    seq: &[Dataset],
    form: &EnergyForm,
    dist: &InitDistribution,
    cfg: &PipelineConfig,
) -> Result<Vec<ShiftStep>> {
    if seq.len() < 2 {
        return Err(Error::InvalidParams {
            reason: "the pipeline needs at least two datasets".into(),
        });
    }
    let mut steps: Vec<ShiftStep> = Vec::with_capacity(seq.len());
    for (j, d) in seq.iter().enumerate() {
        let mut note = None;
        let phase_t = phase_temperature(form, dist, d, cfg)
            .map_err(|e| note = Some(format!("phase temperature: {e}")))
            .ok();
        let (energy, entropy) = match min_energy(form, d, &cfg.solver) {
            Ok(minimum) => {
                let mut joint_cfg = cfg.joint.clone();
                if joint_cfg.noise.is_none() && form.base() != BaseEnergy::CrossEntropy {
                    // self-consistent default: residual scale of the trained model
                    joint_cfg.noise = Some(GaussianNoiseSpec {
                        sigma: minimum.energy.max(0.0).sqrt(),
                        y_bins: (d.len() as f64).sqrt().ceil() as usize,
                    });
                }
                let entropy = joint_from_model(&minimum.params, form, d, &joint_cfg)
                    .map(|je| data_entropy(&je))
                    .map_err(|e| note = Some(format!("data entropy: {e}")))
                    .ok();
                (Some(minimum.energy), entropy)
            }
            Err(e) => {
                note = Some(format!("training: {e}"));
                (None, None)
            }
        };
        steps.push(ShiftStep {
            dataset_id: j,
            energy,
            data_entropy: entropy,
            phase_t: phase_t.map(|r: TemperatureReport| r.temperature),
            shift_t: None,
            note,
        });
    }
    for j in 0..steps.len() - 1 {
        if let (Some(e0), Some(s0), Some(e1), Some(s1)) = (
            steps[j].energy,
            steps[j].data_entropy,
            steps[j + 1].energy,
            steps[j + 1].data_entropy,
        ) {
            steps[j].shift_t = shift_temperature((e0, s0), (e1, s1)).ok();
        }
    }
    Ok(steps)
}

fn phase_temperature(
    form: &EnergyForm,
    dist: &InitDistribution,
    d: &Dataset,
    cfg: &PipelineConfig,
) -> Result<TemperatureReport> {
    match crate::thermo::temperature_type1(form, dist, d) {
        Ok(report) => Ok(report),
        Err(Error::Unsupported { .. }) => {
            let mc = mc_mean_energy(form, dist, d, cfg.mc_samples, cfg.seed)?;
            temperature_type1_with_energy(mc.estimate, form, dist, d)
        }
        Err(e) => Err(e),
    }
}

/// Direction of the energy flow when two systems are mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDirection {
    AToB,
    BToA,
    Equilibrium,
}

/// Mixing of two systems that share an initialization family and scale.
#[derive(Debug, Clone)]
pub struct MixingReport {
    pub t_a: f64,
    pub t_b: f64,
    pub t_mixed: f64,
    /// Energy change of each subsystem after mixing, `K·v·(X̄²_∪ − X̄²)`.
    pub delta_e_a: f64,
    pub delta_e_b: f64,
    pub flow: FlowDirection,
    pub formula_id: FormulaId,
}

/// Mix datasets `a` and `b` under the large-scale squared-error formulas and
/// report the three temperatures, the per-system energy changes, and the
/// flow direction (energy leaves the hotter system).
pub fn mixing_experiment(
    a: &Dataset,
    b: &Dataset,
    form: &EnergyForm,
    family: AsymptoticFamily,
    scale: f64,
) -> Result<MixingReport> {
    if form.base() != BaseEnergy::Mse {
        return Err(Error::Unsupported {
            what: format!("mixing analysis for base `{}`", form.base().as_str()),
        });
    }
    let combined = Dataset::concat(a, b)?;
    let (t_a, id) = crate::thermo::asymptotic_temperature(form, family, a, scale, None)?;
    let (t_b, _) = crate::thermo::asymptotic_temperature(form, family, b, scale, None)?;
    let (t_mixed, _) = crate::thermo::asymptotic_temperature(form, family, &combined, scale, None)?;

    let variance = match family {
        AsymptoticFamily::Normal => scale * scale,
        AsymptoticFamily::Uniform => scale * scale / 12.0,
    };
    let k = a.param_dim() as f64;
    let msq_a = stats(a).component_mean_sq_avg();
    let msq_b = stats(b).component_mean_sq_avg();
    let msq_mixed = stats(&combined).component_mean_sq_avg();
    let delta_e_a = k * variance * (msq_mixed - msq_a);
    let delta_e_b = k * variance * (msq_mixed - msq_b);

    let flow = if delta_e_a < 0.0 && delta_e_b > 0.0 {
        FlowDirection::AToB
    } else if delta_e_b < 0.0 && delta_e_a > 0.0 {
        FlowDirection::BToA
    } else {
        FlowDirection::Equilibrium
    };
    Ok(MixingReport {
        t_a,
        t_b,
        t_mixed,
        delta_e_a,
        delta_e_b,
        flow,
        formula_id: id,
    })
}
