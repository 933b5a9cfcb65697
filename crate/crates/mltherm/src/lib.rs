//! Thermodynamic analysis of machine-learning systems.
//!
//! Treats a model's loss as its internal energy and the parameter
//! initialization as an entropy source, and computes the temperatures that
//! fall out: exact and asymptotic phase-transition temperatures for linear
//! and logistic models, shift temperatures over evolving datasets, and
//! per-layer temperatures, work efficiency, and heat-engine class for
//! feed-forward networks. Every closed form ships with an independent
//! numeric oracle (Monte Carlo or quadrature) that checks it.

pub mod dataset;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod init_dist;
pub mod nn;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod thermo;
pub mod verification;

pub use dataset::{stats, DataStats, Dataset, SynthKind};
pub use energy::{BaseEnergy, EnergyForm, Minimum, ModelParams, Regularization, SolverOptions};
pub use error::{Error, Result};
pub use init_dist::{differential_entropy, variance_equivalent_sigma, InitDistribution};
pub use oracle::{discrete_entropy_grid, mc_mean_energy, quadrature_mean_energy, McEstimate};
pub use thermo::{
    asymptotic_temperature, ce_asymptotic_energy, mean_initial_energy, temperature_type1,
    AsymptoticFamily, FormulaId, Method, TemperatureReport,
};
