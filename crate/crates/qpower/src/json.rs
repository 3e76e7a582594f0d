//! Wire formats: JSON schemas (complex scalars as `[re, im]`, matrices as
//! row-major nested arrays, all documents versioned `"schema": "qpower/1"`)
//! and the CSV curve layouts consumed by plotting scripts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityResult, PowerCurve, SolveStatus};
use crate::channels::KrausChannel;
use crate::classical::DiscreteChannel;
use crate::entropy::LN_2;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::randstates::EnergySpectrum;

pub const SCHEMA: &str = "qpower/1";

/// A complex scalar on the wire: `[re, im]`.
pub type ComplexWire = [f64; 2];
/// A matrix on the wire: row-major nested arrays of complex scalars.
pub type MatrixWire = Vec<Vec<ComplexWire>>;

pub fn complex_to_wire(z: Complex64) -> ComplexWire {
    [z.re, z.im]
}

pub fn complex_from_wire(w: ComplexWire) -> Complex64 {
    Complex64::new(w[0], w[1])
}

pub fn matrix_to_wire(m: &ComplexMatrix) -> MatrixWire {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| complex_to_wire(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_wire(w: &MatrixWire) -> Result<ComplexMatrix> {
    ComplexMatrix::from_rows(
        w.iter()
            .map(|row| row.iter().map(|&z| complex_from_wire(z)).collect())
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Input specs
// ---------------------------------------------------------------------------

/// Channel description: `{"kind": "...", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Kraus { kraus: Vec<MatrixWire> },
    Depolarizing { lambda: f64, d: usize },
    DepolarizingIsometry { lambda: f64 },
    AmplitudeDamping { lambda: f64 },
    Identity { d: usize },
    BeamSplitter { p_b: f64 },
}

/// What a channel spec builds into: a finite-dimensional Kraus map, or the
/// beam-splitter channel which acts on coherent ensembles instead.
#[derive(Debug, Clone)]
pub enum BuiltChannel {
    Kraus(KrausChannel),
    BeamSplitter { p_b: f64 },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<BuiltChannel> {
        Ok(match self {
            ChannelSpec::Kraus { kraus } => {
                let ops = kraus.iter().map(matrix_from_wire).collect::<Result<Vec<_>>>()?;
                BuiltChannel::Kraus(KrausChannel::new(ops)?)
            }
            ChannelSpec::Depolarizing { lambda, d } => {
                BuiltChannel::Kraus(KrausChannel::depolarizing(*lambda, *d)?)
            }
            ChannelSpec::DepolarizingIsometry { lambda } => {
                BuiltChannel::Kraus(KrausChannel::depolarizing_isometry(*lambda)?)
            }
            ChannelSpec::AmplitudeDamping { lambda } => {
                BuiltChannel::Kraus(KrausChannel::amplitude_damping(*lambda)?)
            }
            ChannelSpec::Identity { d } => BuiltChannel::Kraus(KrausChannel::identity(*d)),
            ChannelSpec::BeamSplitter { p_b } => {
                if !(0.0..=1.0).contains(p_b) {
                    return Err(Error::OutOfRange(format!("p_b = {p_b} outside [0, 1]")));
                }
                BuiltChannel::BeamSplitter { p_b: *p_b }
            }
        })
    }

    /// Rebuild a Kraus-family spec at a different noise parameter (λ sweeps).
    pub fn with_lambda(&self, lambda: f64) -> Result<ChannelSpec> {
        Ok(match self {
            ChannelSpec::Depolarizing { d, .. } => ChannelSpec::Depolarizing { lambda, d: *d },
            ChannelSpec::DepolarizingIsometry { .. } => ChannelSpec::DepolarizingIsometry { lambda },
            ChannelSpec::AmplitudeDamping { .. } => ChannelSpec::AmplitudeDamping { lambda },
            ChannelSpec::BeamSplitter { .. } => ChannelSpec::BeamSplitter { p_b: lambda },
            _ => {
                return Err(Error::Config(
                    "lambda sweeps need a parametric channel kind".into(),
                ))
            }
        })
    }
}

/// Pure states may come as complex vectors or as density matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateWire {
    Vector(Vec<ComplexWire>),
    Matrix(MatrixWire),
}

impl StateWire {
    pub fn build(&self) -> Result<crate::linalg::DensityMatrix> {
        match self {
            StateWire::Vector(v) => {
                let vec: Vec<Complex64> = v.iter().map(|&z| complex_from_wire(z)).collect();
                crate::linalg::DensityMatrix::pure(&vec)
            }
            StateWire::Matrix(m) => crate::linalg::DensityMatrix::new(matrix_from_wire(m)?),
        }
    }
}

/// Signal ensemble: either finite-dimensional states with probabilities or a
/// coherent-amplitude list for the beam splitter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleSpec {
    Coherent { amplitudes: Vec<ComplexWire>, probs: Vec<f64> },
    States { states: Vec<StateWire>, probs: Vec<f64> },
}

/// Discrete memoryless channel: `{"Q": [[...]], "b": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteChannelSpec {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl DiscreteChannelSpec {
    pub fn build(&self) -> Result<DiscreteChannel> {
        DiscreteChannel::new(self.q.clone(), self.b.clone())
    }
}

/// Energy spectrum for the random-state module: `{"levels": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub levels: Vec<f64>,
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<EnergySpectrum> {
        EnergySpectrum::new(self.levels.clone())
    }
}

// ---------------------------------------------------------------------------
// Result documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArgmaxWire {
    pub probs: Vec<f64>,
    pub states: Vec<MatrixWire>,
}

/// One solved point. `value_nats`/`value_bits` are both always present for
/// feasible points; the unit flag in the CLI only affects console summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultWire {
    pub schema: String,
    #[serde(rename = "B")]
    pub b: f64,
    pub value_nats: Option<f64>,
    pub value_bits: Option<f64>,
    pub achieved_energy: Vec<f64>,
    pub active_constraints: Vec<usize>,
    pub status: String,
    pub argmax: Option<ArgmaxWire>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt_residual: Option<f64>,
}

impl ResultWire {
    pub fn from_result(b: f64, r: &CapacityResult) -> Self {
        let feasible = r.status != SolveStatus::Infeasible;
        Self {
            schema: SCHEMA.to_string(),
            b,
            value_nats: feasible.then_some(r.value),
            value_bits: feasible.then_some(r.value / LN_2),
            achieved_energy: r.achieved_energy.clone(),
            active_constraints: r.active_constraints.clone(),
            status: r.status.as_str().to_string(),
            argmax: r.argmax_probs.as_ref().map(|p| ArgmaxWire {
                probs: p.weights(),
                states: r.argmax_states.iter().map(|s| matrix_to_wire(s.matrix())).collect(),
            }),
            kkt_residual: r.kkt_residual.is_finite().then_some(r.kkt_residual),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveWire {
    pub schema: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub points: Vec<ResultWire>,
}

impl CurveWire {
    pub fn from_curve(curve: &PowerCurve, lambda: Option<f64>) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            lambda,
            points: curve
                .grid
                .iter()
                .zip(&curve.points)
                .map(|(&b, p)| ResultWire::from_result(b, p))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub const CURVE_CSV_HEADER: &str = "B,capacity_nats,capacity_bits,achieved_energy,status";

fn fmt(x: f64) -> String {
    format!("{x:.12}")
}

fn curve_row(b: f64, point: &CapacityResult) -> String {
    if point.status == SolveStatus::Infeasible {
        format!("{},,,,{}", fmt(b), point.status.as_str())
    } else {
        format!(
            "{},{},{},{},{}",
            fmt(b),
            fmt(point.value),
            fmt(point.value / LN_2),
            point.achieved_energy.first().map(|&e| fmt(e)).unwrap_or_default(),
            point.status.as_str()
        )
    }
}

/// CSV for a single curve: `B,capacity_nats,capacity_bits,achieved_energy,status`.
pub fn power_curve_csv(curve: &PowerCurve) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for (&b, point) in curve.grid.iter().zip(&curve.points) {
        out.push_str(&curve_row(b, point));
        out.push('\n');
    }
    out
}

/// Long-format CSV for a family of curves indexed by a noise parameter:
/// one `lambda` column instead of one file per λ.
pub fn power_curve_family_csv(family: &[(f64, PowerCurve)]) -> String {
    let mut out = String::from("lambda,");
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    for (lambda, curve) in family {
        for (&b, point) in curve.grid.iter().zip(&curve.points) {
            out.push_str(&fmt(*lambda));
            out.push(',');
            out.push_str(&curve_row(b, point));
            out.push('\n');
        }
    }
    out
}

/// One row of the random-states overlay CSV.
#[derive(Debug, Clone)]
pub struct RandstatesRow {
    pub b: f64,
    pub analytic_nats: Option<f64>,
    pub mc_mean_nats: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub status: &'static str,
}

/// `B,analytic_nats[,mc_mean_nats,mc_stderr],status`; the Monte Carlo
/// columns appear only when sampling was requested.
pub fn randstates_csv(rows: &[RandstatesRow], with_mc: bool) -> String {
    let mut out = String::from(if with_mc {
        "B,analytic_nats,mc_mean_nats,mc_stderr,status"
    } else {
        "B,analytic_nats,status"
    });
    out.push('\n');
    for row in rows {
        let analytic = row.analytic_nats.map(fmt).unwrap_or_default();
        if with_mc {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(row.b),
                analytic,
                row.mc_mean_nats.map(fmt).unwrap_or_default(),
                row.mc_stderr.map(fmt).unwrap_or_default(),
                row.status
            ));
        } else {
            out.push_str(&format!("{},{},{}\n", fmt(row.b), analytic, row.status));
        }
    }
    out
}
