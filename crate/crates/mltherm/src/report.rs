//! JSON/CSV report schemas shared by the library and the CLI.
//!
//! Every numeric field goes through [`Metric`], which serializes finite
//! values as numbers and everything else as the explicit string markers
//! `"undefined"` (missing/indeterminate) or `"overflow"` (diverged), so
//! emitted JSON never contains NaN or infinity literals. Schemas carry
//! `schemaVersion: 1`.

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::evolution::{FlowDirection, MixingReport, Provenance, ShiftStep};
use crate::nn::LayerReport;
use crate::oracle::McEstimate;
use crate::thermo::{Method, TemperatureReport};

pub const SCHEMA_VERSION: u32 = 1;

/// A number that always serializes to something JSON-safe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    Undefined,
    Overflow,
}

impl Metric {
    pub fn opt(v: Option<f64>) -> Self {
        match v {
            Some(x) => Metric::from(x),
            None => Metric::Undefined,
        }
    }
}

impl From<f64> for Metric {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Metric::Value(v)
        } else if v.is_nan() {
            Metric::Undefined
        } else {
            Metric::Overflow
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str("undefined"),
            Metric::Overflow => s.serialize_str("overflow"),
        }
    }
}

/// Oracle metadata attached to reports that used a Monte-Carlo mean.
#[derive(Debug, Clone, Serialize)]
pub struct OracleInfo {
    pub estimate: Metric,
    pub stderr: Metric,
    pub samples: usize,
}

impl From<&McEstimate> for OracleInfo {
    fn from(mc: &McEstimate) -> Self {
        OracleInfo {
            estimate: Metric::from(mc.estimate),
            stderr: Metric::opt(mc.stderr),
            samples: mc.samples,
        }
    }
}

/// Serialized temperature report.
#[derive(Debug, Clone, Serialize)]
pub struct TemperatureReportJson {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    #[serde(rename = "E0")]
    pub e0: Metric,
    #[serde(rename = "Ef")]
    pub ef: Metric,
    #[serde(rename = "S0")]
    pub s0: Metric,
    #[serde(rename = "T")]
    pub t: Metric,
    pub method: Method,
    #[serde(rename = "formulaId")]
    pub formula_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleInfo>,
    /// Trace-form final-energy expression, reported for comparison with the
    /// least-squares minimum.
    #[serde(rename = "traceEf", skip_serializing_if = "Option::is_none")]
    pub trace_ef: Option<Metric>,
}

impl TemperatureReportJson {
    pub fn from_report(r: &TemperatureReport, oracle: Option<OracleInfo>) -> Self {
        TemperatureReportJson {
            schema_version: SCHEMA_VERSION,
            e0: Metric::opt(r.mean_initial_energy),
            ef: Metric::opt(r.final_energy),
            s0: Metric::opt(r.entropy),
            t: Metric::from(r.temperature),
            method: r.method,
            formula_id: r.formula_id.as_str().to_string(),
            scale: r.scale.map(Metric::from),
            oracle,
            trace_ef: None,
        }
    }
}

/// Serialized per-layer network report.
#[derive(Debug, Clone, Serialize)]
pub struct LayerReportJson {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    #[serde(rename = "deltaE")]
    pub delta_e: Vec<Metric>,
    pub entropy: Vec<Metric>,
    #[serde(rename = "localT")]
    pub local_t: Vec<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<Metric>>,
    pub eta: Metric,
    #[serde(rename = "systemT")]
    pub system_t: Metric,
    #[serde(rename = "engineClass")]
    pub engine_class: crate::nn::EngineClass,
    #[serde(rename = "classificationRule")]
    pub classification_rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<OracleInfo>,
}

impl LayerReportJson {
    pub fn from_report(r: &LayerReport, mc: Option<OracleInfo>) -> Self {
        LayerReportJson {
            schema_version: SCHEMA_VERSION,
            delta_e: r.delta_e.iter().copied().map(Metric::from).collect(),
            entropy: r.entropy.iter().copied().map(Metric::from).collect(),
            local_t: r.local_t.iter().copied().map(Metric::from).collect(),
            xi: r
                .xi
                .as_ref()
                .map(|v| v.iter().copied().map(Metric::from).collect()),
            eta: Metric::from(r.eta),
            system_t: Metric::from(r.system_t),
            engine_class: r.engine_class,
            classification_rule: r.classification_rule,
            mc,
        }
    }
}

/// Serialized pipeline step.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftStepJson {
    #[serde(rename = "datasetId")]
    pub dataset_id: usize,
    pub energy: Metric,
    #[serde(rename = "dataEntropy")]
    pub data_entropy: Metric,
    #[serde(rename = "phaseT")]
    pub phase_t: Metric,
    #[serde(rename = "shiftT")]
    pub shift_t: Metric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl From<&ShiftStep> for ShiftStepJson {
    fn from(s: &ShiftStep) -> Self {
        ShiftStepJson {
            dataset_id: s.dataset_id,
            energy: Metric::opt(s.energy),
            data_entropy: Metric::opt(s.data_entropy),
            phase_t: Metric::opt(s.phase_t),
            shift_t: Metric::opt(s.shift_t),
            note: s.note.clone(),
        }
    }
}

/// Wrapper for a pipeline run, echoing the joint-estimation assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftReportJson {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    /// Feature-marginal assumption used for the data-entropy estimates.
    pub marginal: &'static str,
    pub steps: Vec<ShiftStepJson>,
}

impl ShiftReportJson {
    pub fn new(steps: &[ShiftStep], marginal: crate::evolution::MarginalSpec) -> Self {
        ShiftReportJson {
            schema_version: SCHEMA_VERSION,
            marginal: match marginal {
                crate::evolution::MarginalSpec::Empirical => "empirical",
                crate::evolution::MarginalSpec::UniformOverRange => "uniform",
            },
            steps: steps.iter().map(ShiftStepJson::from).collect(),
        }
    }
}

/// Serialized mixing report.
#[derive(Debug, Clone, Serialize)]
pub struct MixingReportJson {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    #[serde(rename = "tA")]
    pub t_a: Metric,
    #[serde(rename = "tB")]
    pub t_b: Metric,
    #[serde(rename = "tMixed")]
    pub t_mixed: Metric,
    #[serde(rename = "deltaEA")]
    pub delta_e_a: Metric,
    #[serde(rename = "deltaEB")]
    pub delta_e_b: Metric,
    pub flow: &'static str,
    #[serde(rename = "formulaId")]
    pub formula_id: String,
}

impl From<&MixingReport> for MixingReportJson {
    fn from(r: &MixingReport) -> Self {
        MixingReportJson {
            schema_version: SCHEMA_VERSION,
            t_a: Metric::from(r.t_a),
            t_b: Metric::from(r.t_b),
            t_mixed: Metric::from(r.t_mixed),
            delta_e_a: Metric::from(r.delta_e_a),
            delta_e_b: Metric::from(r.delta_e_b),
            flow: match r.flow {
                FlowDirection::AToB => "a-to-b",
                FlowDirection::BToA => "b-to-a",
                FlowDirection::Equilibrium => "equilibrium",
            },
            formula_id: r.formula_id.as_str().to_string(),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Provenance::Histogram => {
                let mut st = s.serialize_struct("Provenance", 1)?;
                st.serialize_field("kind", "histogram")?;
                st.end()
            }
            Provenance::ModelConditional { marginal } => {
                let mut st = s.serialize_struct("Provenance", 2)?;
                st.serialize_field("kind", "model-conditional")?;
                st.serialize_field(
                    "marginal",
                    match marginal {
                        crate::evolution::MarginalSpec::Empirical => "empirical",
                        crate::evolution::MarginalSpec::UniformOverRange => "uniform",
                    },
                )?;
                st.end()
            }
        }
    }
}

/// Render a report as canonical JSON: two-space indent plus a trailing
/// newline, so identical inputs yield byte-identical files.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    out.push('\n');
    out
}
