//! Parsing of channel/ensemble/Hamiltonian/grid specifications from flag
//! values: inline JSON (anything starting with `{`), a file path, or a
//! shorthand name.

use std::path::Path;

use num_complex::Complex64;

use qpower::json::{BuiltChannel, ChannelSpec, DiscreteChannelSpec, EnsembleSpec, SpectrumSpec};
use qpower::linalg::{sigma_z_observable, ComplexMatrix, DensityMatrix, HermitianOperator};
use qpower::classical::DiscreteChannel;
use qpower::randstates::EnergySpectrum;

use crate::Failure;

pub fn config_error(msg: impl Into<String>) -> Failure {
    Failure { code: 2, message: msg.into() }
}

/// Inline JSON, or the contents of the file at `value`.
fn json_text(value: &str, what: &str) -> Result<String, Failure> {
    let trimmed = value.trim();
    if trimmed.starts_with('{') {
        return Ok(trimmed.to_string());
    }
    let path = Path::new(trimmed);
    std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {what} file `{trimmed}`: {e}")))
}

pub fn parse_channel(value: &str) -> Result<(ChannelSpec, BuiltChannel), Failure> {
    let text = json_text(value, "channel")?;
    let spec: ChannelSpec = serde_json::from_str(&text)
        .map_err(|e| config_error(format!("invalid channel spec: {e}")))?;
    let built = spec.build().map_err(|e| config_error(format!("channel spec: {e}")))?;
    Ok((spec, built))
}

pub struct ParsedEnsemble {
    pub states: Option<Vec<DensityMatrix>>,
    pub amplitudes: Option<Vec<Complex64>>,
}

pub fn parse_ensemble(value: &str) -> Result<ParsedEnsemble, Failure> {
    let text = json_text(value, "ensemble")?;
    let spec: EnsembleSpec = serde_json::from_str(&text)
        .map_err(|e| config_error(format!("invalid ensemble spec: {e}")))?;
    match spec {
        EnsembleSpec::States { states, .. } => {
            let built = states
                .iter()
                .map(|s| s.build())
                .collect::<qpower::Result<Vec<_>>>()
                .map_err(|e| config_error(format!("ensemble state: {e}")))?;
            Ok(ParsedEnsemble { states: Some(built), amplitudes: None })
        }
        EnsembleSpec::Coherent { amplitudes, .. } => Ok(ParsedEnsemble {
            states: None,
            amplitudes: Some(
                amplitudes
                    .into_iter()
                    .map(qpower::json::complex_from_wire)
                    .collect(),
            ),
        }),
    }
}

/// `sigma_z`, `number_operator` (beam splitter only), `diag:a,b,...`, inline
/// JSON matrix, or a file with one.
pub enum HamiltonianSpec {
    Matrix(HermitianOperator),
    NumberOperator,
}

pub fn parse_hamiltonian(value: &str) -> Result<HamiltonianSpec, Failure> {
    let trimmed = value.trim();
    if trimmed == "sigma_z" {
        return Ok(HamiltonianSpec::Matrix(sigma_z_observable()));
    }
    if trimmed == "number_operator" {
        return Ok(HamiltonianSpec::NumberOperator);
    }
    if let Some(diag) = trimmed.strip_prefix("diag:") {
        let levels = parse_float_list(diag, "diagonal Hamiltonian")?;
        return Ok(HamiltonianSpec::Matrix(HermitianOperator::from_diagonal(&levels)));
    }
    let text = json_text(trimmed, "hamiltonian")?;
    let wire: qpower::json::MatrixWire = serde_json::from_str(&text)
        .map_err(|e| config_error(format!("invalid Hamiltonian matrix: {e}")))?;
    let mat: ComplexMatrix = qpower::json::matrix_from_wire(&wire)
        .map_err(|e| config_error(format!("Hamiltonian matrix: {e}")))?;
    HermitianOperator::new(mat)
        .map(HamiltonianSpec::Matrix)
        .map_err(|e| config_error(format!("Hamiltonian: {e}")))
}

/// `noiseless`, `bsc:p`, `bec:pe`, inline `{"Q": ..., "b": ...}`, or a file.
pub fn parse_discrete_channel(value: &str) -> Result<DiscreteChannel, Failure> {
    let trimmed = value.trim();
    if trimmed == "noiseless" || trimmed == "binary_noiseless" {
        return Ok(DiscreteChannel::binary_noiseless());
    }
    if let Some(p) = trimmed.strip_prefix("bsc:") {
        let p: f64 = p.parse().map_err(|_| config_error("bsc:<p> needs a number"))?;
        return DiscreteChannel::bsc(p).map_err(|e| config_error(format!("bsc: {e}")));
    }
    if let Some(pe) = trimmed.strip_prefix("bec:") {
        let pe: f64 = pe.parse().map_err(|_| config_error("bec:<pe> needs a number"))?;
        return DiscreteChannel::bec(pe).map_err(|e| config_error(format!("bec: {e}")));
    }
    let text = json_text(trimmed, "classical channel")?;
    let spec: DiscreteChannelSpec = serde_json::from_str(&text)
        .map_err(|e| config_error(format!("invalid classical channel: {e}")))?;
    spec.build().map_err(|e| config_error(format!("classical channel: {e}")))
}

/// Comma-separated levels, inline `{"levels": [...]}` JSON, or a file.
pub fn parse_spectrum(value: &str) -> Result<EnergySpectrum, Failure> {
    let trimmed = value.trim();
    if trimmed.starts_with('{') || Path::new(trimmed).exists() {
        let text = json_text(trimmed, "spectrum")?;
        let spec: SpectrumSpec = serde_json::from_str(&text)
            .map_err(|e| config_error(format!("invalid spectrum: {e}")))?;
        return spec.build().map_err(|e| config_error(format!("spectrum: {e}")));
    }
    let levels = parse_float_list(trimmed, "levels")?;
    EnergySpectrum::new(levels).map_err(|e| config_error(format!("spectrum: {e}")))
}

pub fn parse_float_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

/// Ascending threshold grid from `--B-min/--B-max/--B-points`.
pub fn build_grid(b_min: f64, b_max: Option<f64>, points: usize) -> Result<Vec<f64>, Failure> {
    if points == 0 {
        return Err(config_error("--B-points must be at least 1"));
    }
    if points == 1 {
        return Ok(vec![b_min]);
    }
    let b_max = b_max.ok_or_else(|| config_error("--B-max is required when --B-points > 1"))?;
    if b_min >= b_max {
        return Err(config_error(format!("grid needs --B-min < --B-max, got [{b_min}, {b_max}]")));
    }
    Ok((0..points)
        .map(|i| b_min + (b_max - b_min) * i as f64 / (points - 1) as f64)
        .collect())
}
