//! Feed-forward networks as heat engines.
//!
//! Each layer `p` of an `L`-layer network releases energy `ΔE_p` under
//! large-scale initialization and carries entropy `S_p = l_p(l_{p−1}+1)·ln σ_p`,
//! giving a local temperature `T_p = ΔE_p/S_p`. The last layer's energy is
//! the one doing external work, so `η = ΔE_L/ΣΔE_p` is the work efficiency
//! and `T_sys = η·(Σ T_p S_p / Σ S_p)` the system temperature. Saturating
//! activations cap every layer at the same temperature scale (first engine
//! type, `η ≪ 1`); ReLU compounds scale with depth (second type, `η → 1`).
//! A Monte-Carlo forward-pass oracle checks the energy formulas.

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stats, Dataset};
use crate::error::{Error, Result};
use crate::rng::{batch_layout, batch_rng, RunningMoments};

const SQRT_12: f64 = 3.464_101_615_137_754_6;

/// Samples and seed used when a sigmoid saturation fraction has to be
/// measured implicitly.
pub const XI_DEFAULT_SAMPLES: usize = 512;
pub const XI_DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

/// Weight/bias initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NnInit {
    /// Every parameter `N(0, σ²)`.
    ConstantSigma(f64),
    /// Layer `p` uses `σ_p = σ₀/√l_{p−1}`.
    PerLayerSigma(f64),
    /// Every parameter `U(−l/2, l/2)`; enters the formulas as `σ = l/√12`.
    UniformConstant(f64),
}

/// Architecture plus initialization: sizes `[l_0, l_1, …, l_L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnSpec {
    layer_sizes: Vec<usize>,
    activation: Activation,
    init: NnInit,
}

/// File schema: `{"layers": [...], "activation": "tanh", "init": {...}}` with
/// init one of `{"kind": "constant-sigma", "sigma": s}`,
/// `{"kind": "per-layer-sigma", "sigma0": s}`,
/// `{"kind": "uniform-constant", "length": l}`.
#[derive(Debug, Deserialize)]
struct NnSpecFile {
    layers: Vec<usize>,
    activation: Activation,
    init: NnInitRepr,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum NnInitRepr {
    ConstantSigma { sigma: f64 },
    PerLayerSigma { sigma0: f64 },
    UniformConstant { length: f64 },
}

impl<'de> Deserialize<'de> for NnSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let file = NnSpecFile::deserialize(d)?;
        let init = match file.init {
            NnInitRepr::ConstantSigma { sigma } => NnInit::ConstantSigma(sigma),
            NnInitRepr::PerLayerSigma { sigma0 } => NnInit::PerLayerSigma(sigma0),
            NnInitRepr::UniformConstant { length } => NnInit::UniformConstant(length),
        };
        NnSpec::new(file.layers, file.activation, init).map_err(D::Error::custom)
    }
}

impl NnSpec {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation, init: NnInit) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidParams {
                reason: "a network needs an input width and at least one layer".into(),
            });
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidParams {
                reason: "layer sizes must be at least 1".into(),
            });
        }
        let scale = match init {
            NnInit::ConstantSigma(s) | NnInit::PerLayerSigma(s) | NnInit::UniformConstant(s) => s,
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParams {
                reason: format!("initialization scale must be positive, got {scale}"),
            });
        }
        Ok(NnSpec {
            layer_sizes,
            activation,
            init,
        })
    }

    /// Same architecture with a different initialization.
    pub fn with_init(&self, init: NnInit) -> Result<Self> {
        Self::new(self.layer_sizes.clone(), self.activation, init)
    }

    /// Number of layers `L` (input width excluded).
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn init(&self) -> NnInit {
        self.init
    }

    /// Width of layer `p`, 1-based; `size(0)` is the input width.
    fn size(&self, p: usize) -> usize {
        self.layer_sizes[p]
    }

    /// Total parameter count `Σ_p l_p (l_{p−1} + 1)`.
    pub fn param_count(&self) -> usize {
        (1..=self.depth())
            .map(|p| self.size(p) * (self.size(p - 1) + 1))
            .sum()
    }

    /// Effective normal σ of layer `p` as used by the formulas.
    pub fn sigma_for_layer(&self, p: usize) -> f64 {
        match self.init {
            NnInit::ConstantSigma(s) => s,
            NnInit::PerLayerSigma(s0) => s0 / (self.size(p - 1) as f64).sqrt(),
            NnInit::UniformConstant(l) => l / SQRT_12,
        }
    }

    fn check_input(&self, d: &Dataset) -> Result<()> {
        if d.stored_dim() != self.size(0) {
            return Err(Error::DimensionMismatch {
                expected: self.size(0),
                got: d.stored_dim(),
            });
        }
        Ok(())
    }
}

/// Per-layer thermodynamics of one network on one dataset.
#[derive(Debug, Clone)]
pub struct LayerReport {
    pub delta_e: Vec<f64>,
    pub entropy: Vec<f64>,
    pub local_t: Vec<f64>,
    /// Measured sigmoid saturation fractions for hidden layers `1..L-1`.
    pub xi: Option<Vec<f64>>,
    pub eta: f64,
    pub system_t: f64,
    pub engine_class: EngineClass,
    pub classification_rule: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineClass {
    FirstType,
    SecondType,
}

/// Asymptotic energy released by each layer.
///
/// Saturating activations: `ΔE_1 = l_1 X̄² σ_1²` and `ΔE_p = l_p(l_{p−1}+1)σ_p²`
/// (sigmoid replaces `l_{p−1}` by `ξ_{p−1} l_{p−1}`). ReLU compounds:
/// `ΔE_p = 2^{1−p} (Π_{k≤p} l_k) (Π_{k≤p} σ_k²) X̄²`. Here `X̄²` is the mean
/// squared augmented row norm `(1/n)Σ_i(‖x_i‖² + 1)`. For sigmoid networks
/// the saturation fractions are measured by a short forward-pass run with
/// the default samples/seed; use [`layer_energies_with_xi`] to supply them.
pub fn layer_energies(spec: &NnSpec, d: &Dataset) -> Result<Vec<f64>> {
    let xi = implicit_xi(spec, d)?;
    layer_energies_with_xi(spec, d, xi.as_deref())
}

fn implicit_xi(spec: &NnSpec, d: &Dataset) -> Result<Option<Vec<f64>>> {
    if spec.activation == Activation::Sigmoid && spec.depth() > 1 {
        Ok(Some(measure_xi(spec, d, XI_DEFAULT_SAMPLES, XI_DEFAULT_SEED)?))
    } else {
        Ok(None)
    }
}

/// [`layer_energies`] with explicit sigmoid saturation fractions.
pub fn layer_energies_with_xi(
    spec: &NnSpec,
    d: &Dataset,
    xi: Option<&[f64]>,
) -> Result<Vec<f64>> {
    spec.check_input(d)?;
    let min_sigma = (1..=spec.depth())
        .map(|p| spec.sigma_for_layer(p))
        .fold(f64::INFINITY, f64::min);
    if min_sigma < 10.0 {
        log::warn!("layer energies assume large scales; smallest effective sigma is {min_sigma}");
    }
    let x_sq = stats(d).augmented_norm_sq_mean();
    let depth = spec.depth();
    let mut out = Vec::with_capacity(depth);
    match spec.activation {
        Activation::Tanh | Activation::Sigmoid => {
            for p in 1..=depth {
                let sigma_sq = spec.sigma_for_layer(p).powi(2);
                let lp = spec.size(p) as f64;
                let e = if p == 1 {
                    lp * x_sq * sigma_sq
                } else {
                    let mut fan_in = spec.size(p - 1) as f64;
                    if spec.activation == Activation::Sigmoid {
                        let xi = xi.ok_or_else(|| Error::InvalidParams {
                            reason: "sigmoid layer energies need saturation fractions".into(),
                        })?;
                        fan_in *= xi.get(p - 2).copied().ok_or_else(|| Error::InvalidParams {
                            reason: format!("missing saturation fraction for layer {}", p - 1),
                        })?;
                    }
                    lp * (fan_in + 1.0) * sigma_sq
                };
                out.push(e);
            }
        }
        Activation::Relu => {
            let mut running = x_sq;
            for p in 1..=depth {
                let sigma_sq = spec.sigma_for_layer(p).powi(2);
                running *= spec.size(p) as f64 * sigma_sq / 2.0;
                out.push(2.0 * running);
            }
        }
    }
    Ok(out)
}

/// Entropy of each layer's parameter block, `S_p = l_p(l_{p−1}+1)·ln σ_p`.
pub fn layer_entropies(spec: &NnSpec) -> Result<Vec<f64>> {
    (1..=spec.depth())
        .map(|p| {
            let sigma = spec.sigma_for_layer(p);
            if sigma.ln() <= 0.0 {
                return Err(Error::ZeroEntropy);
            }
            Ok(spec.size(p) as f64 * (spec.size(p - 1) as f64 + 1.0) * sigma.ln())
        })
        .collect()
}

/// Local temperatures `T_p = ΔE_p / S_p`.
pub fn layer_temperatures(spec: &NnSpec, d: &Dataset) -> Result<Vec<f64>> {
    let energies = layer_energies(spec, d)?;
    let entropies = layer_entropies(spec)?;
    Ok(energies
        .iter()
        .zip(&entropies)
        .map(|(e, s)| e / s)
        .collect())
}

/// Full engine report: per-layer quantities, work efficiency, system
/// temperature, and the heat-engine classification.
pub fn efficiency_and_classification(spec: &NnSpec, d: &Dataset) -> Result<LayerReport> {
    let xi = implicit_xi(spec, d)?;
    efficiency_with_xi(spec, d, xi)
}

fn efficiency_with_xi(spec: &NnSpec, d: &Dataset, xi: Option<Vec<f64>>) -> Result<LayerReport> {
    let delta_e = layer_energies_with_xi(spec, d, xi.as_deref())?;
    let entropy = layer_entropies(spec)?;
    let local_t: Vec<f64> = delta_e.iter().zip(&entropy).map(|(e, s)| e / s).collect();

    let total_e: f64 = delta_e.iter().sum();
    let eta = delta_e[delta_e.len() - 1] / total_e;
    let weighted: f64 = local_t.iter().zip(&entropy).map(|(t, s)| t * s).sum();
    let total_s: f64 = entropy.iter().sum();
    let system_t = eta * (weighted / total_s);

    let (engine_class, classification_rule) = match spec.activation {
        Activation::Relu => (EngineClass::SecondType, "relu activation"),
        Activation::Tanh | Activation::Sigmoid => (EngineClass::FirstType, "saturating activation"),
    };
    Ok(LayerReport {
        delta_e,
        entropy,
        local_t,
        xi,
        eta,
        system_t,
        engine_class,
        classification_rule,
    })
}

/// Monte-Carlo forward-pass estimate of the initial energy.
#[derive(Debug, Clone)]
pub struct NnMcEstimate {
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub samples: usize,
    /// Measured saturation fractions per hidden layer (sigmoid only).
    pub xi: Option<Vec<f64>>,
}

struct ForwardScratch {
    activations: Vec<Vec<f64>>,
}

/// Sample all weights and biases from the initialization, run the network
/// forward over the dataset, and average the squared-error energy
/// `(1/n) Σ_i Σ_k (out_k − y_i)²`. The output layer is linear. Samples are
/// drawn under the crate's batch contract, so results are reproducible and
/// thread-count independent. Non-finite energies (ReLU at large scale and
/// depth) abort with an overflow error rather than silently poisoning the
/// mean.
pub fn mc_nn_initial_energy(
    spec: &NnSpec,
    d: &Dataset,
    samples: usize,
    seed: u64,
) -> Result<NnMcEstimate> {
    spec.check_input(d)?;
    if samples == 0 {
        return Err(Error::InvalidParams {
            reason: "samples must be at least 1".into(),
        });
    }
    let depth = spec.depth();
    let layout = batch_layout(samples);
    let parts: Vec<Result<(RunningMoments, Vec<u64>)>> = layout
        .par_iter()
        .map(|&(batch, len)| {
            let mut rng = batch_rng(seed, batch);
            let mut moments = RunningMoments::default();
            let mut saturated = vec![0u64; depth.saturating_sub(1)];
            let mut scratch = ForwardScratch {
                activations: spec.layer_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            };
            let mut weights: Vec<Vec<f64>> = (1..=depth)
                .map(|p| vec![0.0; spec.size(p) * (spec.size(p - 1) + 1)])
                .collect();
            for _ in 0..len {
                for (p, w) in weights.iter_mut().enumerate() {
                    draw_layer(spec, p + 1, w, &mut rng);
                }
                let mut energy = 0.0;
                for i in 0..d.len() {
                    energy +=
                        forward_energy(spec, &weights, d, i, &mut scratch, &mut saturated);
                }
                energy /= d.len() as f64;
                if !energy.is_finite() {
                    return Err(Error::Overflow {
                        context: format!(
                            "forward pass of a depth-{} network at scale {:?}",
                            depth,
                            spec.init()
                        ),
                    });
                }
                moments.push(energy);
            }
            Ok((moments, saturated))
        })
        .collect();

    let mut total = RunningMoments::default();
    let mut saturated = vec![0u64; depth.saturating_sub(1)];
    for part in parts {
        let (m, s) = part?;
        total.merge(&m);
        for (acc, v) in saturated.iter_mut().zip(&s) {
            *acc += v;
        }
    }

    let xi = if spec.activation == Activation::Sigmoid && depth > 1 {
        // activations seen per hidden layer p: samples × rows × l_p
        let passes = samples as u64 * d.len() as u64;
        Some(
            saturated
                .iter()
                .enumerate()
                .map(|(idx, &count)| count as f64 / (passes * spec.size(idx + 1) as u64) as f64)
                .collect(),
        )
    } else {
        None
    };

    Ok(NnMcEstimate {
        estimate: total.mean,
        stderr: total.standard_error(),
        samples,
        xi,
    })
}

fn draw_layer<R: Rng>(spec: &NnSpec, p: usize, out: &mut [f64], rng: &mut R) {
    match spec.init {
        NnInit::ConstantSigma(sigma) => {
            for w in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *w = sigma * z;
            }
        }
        NnInit::PerLayerSigma(_) => {
            let sigma = spec.sigma_for_layer(p);
            for w in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *w = sigma * z;
            }
        }
        NnInit::UniformConstant(length) => {
            for w in out.iter_mut() {
                *w = (rng.random::<f64>() - 0.5) * length;
            }
        }
    }
}

fn forward_energy(
    spec: &NnSpec,
    weights: &[Vec<f64>],
    d: &Dataset,
    row: usize,
    scratch: &mut ForwardScratch,
    saturated: &mut [u64],
) -> f64 {
    let depth = spec.depth();
    scratch.activations[0].copy_from_slice(d.row(row));
    for p in 1..=depth {
        let (prev, rest) = scratch.activations.split_at_mut(p);
        let input = &prev[p - 1];
        let output = &mut rest[0];
        let fan_in = spec.size(p - 1);
        let w = &weights[p - 1];
        for (k, out_k) in output.iter_mut().enumerate() {
            let base = k * (fan_in + 1);
            let mut z = w[base + fan_in]; // bias
            for (j, inp) in input.iter().enumerate() {
                z += w[base + j] * inp;
            }
            *out_k = if p == depth {
                z // linear output layer
            } else {
                match spec.activation {
                    Activation::Tanh => z.tanh(),
                    Activation::Sigmoid => {
                        let a = 1.0 / (1.0 + (-z).exp());
                        if a > 0.5 {
                            saturated[p - 1] += 1;
                        }
                        a
                    }
                    Activation::Relu => z.max(0.0),
                }
            };
        }
    }
    let y = d.label(row);
    scratch.activations[depth]
        .iter()
        .map(|out| (out - y) * (out - y))
        .sum()
}

/// Measure sigmoid saturation fractions `ξ_p` (fraction of hidden unit
/// activations above ½) for layers `1..L-1` by forward sampling.
pub fn measure_xi(spec: &NnSpec, d: &Dataset, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if spec.activation != Activation::Sigmoid {
        return Err(Error::InvalidParams {
            reason: "saturation fractions are only defined for sigmoid networks".into(),
        });
    }
    let est = mc_nn_initial_energy(spec, d, samples, seed)?;
    Ok(est.xi.unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zeros_dataset(width: usize, n: usize) -> Dataset {
        Dataset::new(vec![vec![0.0; width]; n], vec![0.0; n]).unwrap()
    }

    fn spec(sizes: &[usize], act: Activation, sigma: f64) -> NnSpec {
        NnSpec::new(sizes.to_vec(), act, NnInit::ConstantSigma(sigma)).unwrap()
    }

    #[test]
    fn spec_file_schema_covers_all_init_kinds() {
        let cs: NnSpec = serde_json::from_str(
            r#"{"layers": [2, 3, 1], "activation": "tanh", "init": {"kind": "constant-sigma", "sigma": 10.0}}"#,
        )
        .unwrap();
        assert_eq!(cs.init(), NnInit::ConstantSigma(10.0));
        let pl: NnSpec = serde_json::from_str(
            r#"{"layers": [2, 3, 1], "activation": "sigmoid", "init": {"kind": "per-layer-sigma", "sigma0": 9.0}}"#,
        )
        .unwrap();
        assert_eq!(pl.init(), NnInit::PerLayerSigma(9.0));
        let uc: NnSpec = serde_json::from_str(
            r#"{"layers": [2, 3, 1], "activation": "relu", "init": {"kind": "uniform-constant", "length": 24.0}}"#,
        )
        .unwrap();
        assert_eq!(uc.init(), NnInit::UniformConstant(24.0));
        assert!(serde_json::from_str::<NnSpec>(r#"{"layers": [2], "activation": "relu", "init": {"kind": "constant-sigma", "sigma": 1.0}}"#).is_err());
    }

    #[test]
    fn param_count_sums_layer_blocks() {
        let s = spec(&[2, 3, 1], Activation::Tanh, 10.0);
        // l_1 (l_0 + 1) + l_2 (l_1 + 1) for sizes [2, 3, 1]
        assert_eq!(s.param_count(), 3 * (2 + 1) + (3 + 1));
    }

    #[test]
    fn tanh_layer_energies_231() {
        // x = 0 rows give X̄² = 1: ΔE = [3σ², 4σ²]
        let d = zeros_dataset(2, 4);
        let s = spec(&[2, 3, 1], Activation::Tanh, 100.0);
        let e = layer_energies(&s, &d).unwrap();
        assert_eq!(e, vec![3.0e4, 4.0e4]);
    }

    #[test]
    fn tanh_local_temperatures_match_ratio() {
        let d = zeros_dataset(2, 4);
        let s = spec(&[2, 3, 1], Activation::Tanh, 100.0);
        let t = layer_temperatures(&s, &d).unwrap();
        assert_relative_eq!(t[1], 4.0e4 / (4.0 * 100.0_f64.ln()), epsilon = 1e-12);
        assert_relative_eq!(t[1], 2_171.472_409_516_259, max_relative = 1e-10);
    }

    #[test]
    fn tanh_hidden_temperatures_are_equal() {
        let d = zeros_dataset(3, 2);
        let s = spec(&[3, 5, 4, 2, 1], Activation::Tanh, 50.0);
        let t = layer_temperatures(&s, &d).unwrap();
        for p in 2..t.len() {
            assert_relative_eq!(t[p], t[1], max_relative = 1e-13);
        }
    }

    #[test]
    fn relu_energy_ratio_between_layers() {
        // ΔE_2/ΔE_1 = (l_2/2)σ² and T_3/T_2 = (l_2/2)σ²(l_1+1)/(l_2+1)
        let d = zeros_dataset(1, 2);
        let s = spec(&[1, 1, 1, 1], Activation::Relu, 10.0);
        let e = layer_energies(&s, &d).unwrap();
        assert_relative_eq!(e[1] / e[0], 50.0, epsilon = 1e-9);
        let t = layer_temperatures(&s, &d).unwrap();
        assert_relative_eq!(t[2] / t[1], 50.0, epsilon = 1e-9);
    }

    #[test]
    fn relu_single_hidden_energy_formula() {
        // sizes [1,1,1]: ΔE_2 = ½ σ⁴ X̄²
        let d = Dataset::new(vec![vec![2.0]], vec![0.0]).unwrap();
        let x_sq = 5.0; // 2² + 1
        let s = spec(&[1, 1, 1], Activation::Relu, 10.0);
        let e = layer_energies(&s, &d).unwrap();
        assert_relative_eq!(e[1], 0.5 * 1e4 * x_sq, epsilon = 1e-9);
    }

    #[test]
    fn efficiency_tanh_231() {
        let d = zeros_dataset(2, 4);
        let s = spec(&[2, 3, 1], Activation::Tanh, 100.0);
        let r = efficiency_and_classification(&s, &d).unwrap();
        assert_relative_eq!(r.eta, 4.0 / 7.0, epsilon = 1e-12);
        assert_eq!(r.engine_class, EngineClass::FirstType);
        // defining identities
        let total_e: f64 = r.delta_e.iter().sum();
        assert_eq!(r.eta, r.delta_e[1] / total_e);
        let weighted: f64 = r.local_t.iter().zip(&r.entropy).map(|(t, s)| t * s).sum();
        let total_s: f64 = r.entropy.iter().sum();
        assert_eq!(r.system_t, r.eta * (weighted / total_s));
    }

    #[test]
    fn relu_classified_second_type_with_increasing_temperatures() {
        let d = zeros_dataset(1, 2);
        let s = spec(&[1, 4, 4, 4, 1], Activation::Relu, 100.0);
        let r = efficiency_and_classification(&s, &d).unwrap();
        assert_eq!(r.engine_class, EngineClass::SecondType);
        assert!(r.eta >= 0.99, "eta = {}", r.eta);
        for p in 1..r.local_t.len() {
            assert!(r.local_t[p] > r.local_t[p - 1]);
        }
    }

    #[test]
    fn single_layer_network_has_unit_efficiency() {
        let d = zeros_dataset(3, 2);
        let s = spec(&[3, 1], Activation::Tanh, 100.0);
        let r = efficiency_and_classification(&s, &d).unwrap();
        assert_eq!(r.eta, 1.0);
    }

    #[test]
    fn uniform_constant_matches_variance_mapped_sigma() {
        let d = Dataset::new(vec![vec![1.0, -0.5]], vec![0.5]).unwrap();
        let uni = NnSpec::new(vec![2, 3, 1], Activation::Tanh, NnInit::UniformConstant(40.0)).unwrap();
        let mapped = uni.with_init(NnInit::ConstantSigma(40.0 / SQRT_12)).unwrap();
        let a = efficiency_and_classification(&uni, &d).unwrap();
        let b = efficiency_and_classification(&mapped, &d).unwrap();
        assert_eq!(a.delta_e, b.delta_e);
        assert_eq!(a.entropy, b.entropy);
        assert_eq!(a.local_t, b.local_t);
        assert_eq!(a.eta, b.eta);
        assert_eq!(a.system_t, b.system_t);
    }

    #[test]
    fn sigma_one_layers_have_zero_entropy() {
        let s = spec(&[2, 2, 1], Activation::Tanh, 1.0);
        assert!(matches!(layer_entropies(&s), Err(Error::ZeroEntropy)));
    }

    #[test]
    fn mc_tanh_matches_asymptotic_energy() {
        let d = Dataset::new(
            vec![vec![0.5, -0.25], vec![-0.75, 1.0], vec![0.1, 0.2]],
            vec![0.5, -0.5, 0.25],
        )
        .unwrap();
        let s = spec(&[2, 3, 1], Activation::Tanh, 100.0);
        let est = mc_nn_initial_energy(&s, &d, 10_000, 21).unwrap();
        let formula = 100.0_f64.powi(2) * 4.0;
        assert!(
            (est.estimate - formula).abs() / formula < 0.05,
            "mc {} vs formula {formula}",
            est.estimate
        );
    }

    #[test]
    fn mc_is_deterministic() {
        let d = zeros_dataset(1, 2);
        let s = spec(&[1, 2, 1], Activation::Relu, 10.0);
        let a = mc_nn_initial_energy(&s, &d, 2000, 9).unwrap();
        let b = mc_nn_initial_energy(&s, &d, 2000, 9).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    }

    #[test]
    fn relu_mc_scaling_exponent_is_two_per_layer() {
        let d = Dataset::new(vec![vec![1.0]], vec![0.0]).unwrap();
        let mut points = Vec::new();
        for &sigma in &[10.0, 20.0, 40.0] {
            let s = spec(&[1, 2, 1], Activation::Relu, sigma);
            let est = mc_nn_initial_energy(&s, &d, 10_000, 33).unwrap();
            points.push((sigma.ln(), est.estimate.ln()));
        }
        let slope = (points[2].1 - points[0].1) / (points[2].0 - points[0].0);
        assert!((slope - 4.0).abs() < 0.2, "slope = {slope}");
    }

    #[test]
    fn first_type_system_t_approaches_eta_t_last_with_depth() {
        // fixed widths, growing depth: the first layer's odd entropy share
        // washes out and T_sys/(eta T_L) -> 1
        let d = zeros_dataset(3, 2);
        let ratio = |depth: usize| {
            let mut sizes = vec![3];
            sizes.extend(std::iter::repeat_n(5, depth - 1));
            sizes.push(2);
            let s = spec(&sizes, Activation::Tanh, 100.0);
            let r = efficiency_and_classification(&s, &d).unwrap();
            let t_last = *r.local_t.last().unwrap();
            r.system_t / (r.eta * t_last)
        };
        let shallow = ratio(3);
        let mid = ratio(14);
        let deep = ratio(30);
        assert!((mid - 1.0).abs() < (shallow - 1.0).abs());
        assert!((deep - 1.0).abs() < (mid - 1.0).abs());
        assert!((deep - 1.0).abs() < 0.02, "deep ratio {deep}");
    }

    #[test]
    fn second_type_system_t_is_entropy_fraction_of_last_layer() {
        let d = zeros_dataset(1, 2);
        let fraction = |depth: usize| {
            let mut sizes = vec![1];
            sizes.extend(std::iter::repeat_n(3, depth));
            let s = spec(&sizes, Activation::Relu, 50.0);
            let r = efficiency_and_classification(&s, &d).unwrap();
            let t_last = *r.local_t.last().unwrap();
            let s_tot: f64 = r.entropy.iter().sum();
            let s_last = *r.entropy.last().unwrap();
            let ratio = r.system_t / (r.eta * t_last);
            // T_sys/(eta T_L) = S_L/(eta S_tot); eta ~ 1 so ~ S_L/S_tot < 1
            assert_relative_eq!(ratio, s_last / (r.eta * s_tot), max_relative = 1e-12);
            assert!(ratio < 1.0);
            ratio
        };
        let shallow = fraction(3);
        let deep = fraction(8);
        assert!(deep < shallow);
    }

    #[test]
    fn relu_temperatures_increase_just_above_sqrt_two() {
        let d = zeros_dataset(1, 2);
        let s = NnSpec::new(vec![1, 1, 1, 1], Activation::Relu, NnInit::ConstantSigma(1.5))
            .unwrap();
        let t = layer_temperatures(&s, &d).unwrap();
        assert!(t[0] < t[1] && t[1] < t[2], "{t:?}");
    }

    #[test]
    fn per_layer_sigma_lowers_system_temperature_keeping_shape() {
        let d = zeros_dataset(4, 2);
        let sizes = [4usize, 4, 4, 1];
        let system_t = |sigma0: f64| {
            let s = NnSpec::new(sizes.to_vec(), Activation::Tanh, NnInit::PerLayerSigma(sigma0))
                .unwrap();
            efficiency_and_classification(&s, &d).unwrap().system_t
        };
        let constant = spec(&sizes, Activation::Tanh, 100.0);
        let reduced = system_t(100.0);
        let baseline = efficiency_and_classification(&constant, &d).unwrap().system_t;
        assert!(reduced < baseline, "{reduced} !< {baseline}");

        // shape: T_sys * ln(sigma0) / sigma0^2 settles to a constant
        let shape = |s0: f64| system_t(s0) * s0.ln() / (s0 * s0);
        let c1 = shape(1e3);
        let c2 = shape(1e5);
        let c3 = shape(1e7);
        assert!((c3 - c2).abs() < (c2 - c1).abs(), "{c1} {c2} {c3}");
        assert!((c3 - c2).abs() / c3.abs() < 0.05);
    }

    #[test]
    fn sigmoid_xi_measured_near_half_at_saturation() {
        let d = zeros_dataset(2, 3);
        let s = spec(&[2, 8, 8, 1], Activation::Sigmoid, 100.0);
        let xi = measure_xi(&s, &d, 512, 0).unwrap();
        assert_eq!(xi.len(), 2);
        for x in &xi {
            assert!((x - 0.5).abs() < 0.1, "xi = {x}");
        }
        let r = efficiency_and_classification(&s, &d).unwrap();
        let got = r.xi.unwrap();
        // implicit measurement uses the documented default samples/seed
        for (a, b) in got.iter().zip(&xi) {
            assert_eq!(a, b);
        }
    }
}
