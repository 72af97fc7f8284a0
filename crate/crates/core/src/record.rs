//! Self-describing JSON records for states and solver results.
//!
//! Floats are written with 17 significant digits (`1.2345678901234567e-3`),
//! enough for every `f64` to parse back to the same bits. Non-finite values
//! become `null` and read back as NaN. Key order follows field order.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::solvers::{Residuals, SolveOptions, SolveResult};
use crate::state::{DecomposedState, FunctionalReport, Params};
use crate::verify::TheoremReport;

/// Version tag written into every record.
pub const SCHEMA: &str = "pointnls-1";

/// Compact JSON with fixed 17-digit floats.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` in the record number format.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))
}

/// Formats one float the way records do (used for CSV cells too).
pub fn format_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else if value.is_nan() {
        "NaN".to_string()
    } else if value > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub(crate) fn nullable_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// A state with everything needed to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub params: Params,
    pub grid: GridSpec,
    pub lambda: f64,
    pub q: f64,
    pub phi: Vec<f64>,
}

impl StateRecord {
    pub fn from_state(state: &DecomposedState, params: Params) -> Self {
        Self {
            params,
            grid: state.grid().spec(),
            lambda: state.lambda(),
            q: state.q(),
            phi: state.phi().to_vec(),
        }
    }

    /// Validates the parameters and the grid and rebuilds the state.
    pub fn to_state(&self) -> Result<(DecomposedState, Params)> {
        self.params.validate()?;
        let spec = self.grid;
        if spec.n > MAX_RECORD_NODES {
            return Err(Error::Format(format!(
                "grid of {} nodes exceeds the supported {MAX_RECORD_NODES}",
                spec.n
            )));
        }
        if spec.n != self.phi.len() {
            return Err(Error::LengthMismatch {
                expected: spec.n,
                found: self.phi.len(),
            });
        }
        let grid = Arc::new(spec.build()?);
        let state = DecomposedState::new(grid, self.lambda, self.q, self.phi.clone())?;
        Ok((state, self.params))
    }
}

/// Largest grid a record may describe; bounds the work a parse can trigger.
pub const MAX_RECORD_NODES: usize = 1 << 20;

pub fn parse_state_record(text: &str) -> Result<StateRecord> {
    let record: StateRecord =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    record.to_state()?;
    Ok(record)
}

/// The invocation that produced a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigRecord {
    pub command: String,
    pub p: f64,
    pub alpha: f64,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub grid_n: usize,
    pub rmax: Option<f64>,
    pub grading: Option<f64>,
    pub solver: SolveOptions,
}

/// Solver outcome besides the state itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    pub functionals: FunctionalReport,
    #[serde(deserialize_with = "nullable_f64")]
    pub omega_recovered: f64,
    pub converged: bool,
    pub postconditions_ok: bool,
    #[serde(deserialize_with = "nullable_f64")]
    pub multistart_spread: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualRecord {
    #[serde(deserialize_with = "nullable_f64")]
    pub boundary: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub euler_lagrange: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub gradient_norm: f64,
}

impl From<Residuals> for ResidualRecord {
    fn from(r: Residuals) -> Self {
        Self {
            boundary: r.boundary,
            euler_lagrange: r.euler_lagrange,
            gradient_norm: r.gradient_norm,
        }
    }
}

/// Work counters. Wall-clock time is present only when requested, so that
/// equal inputs give byte-identical records by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    pub iterations: usize,
    pub evaluations: usize,
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema: String,
    pub config: ConfigRecord,
    pub grid: GridSpec,
    pub state: StateRecord,
    pub report: ReportRecord,
    pub residuals: ResidualRecord,
    pub theorem_checks: Option<TheoremReport>,
    pub timings: Timings,
}

impl ResultRecord {
    pub fn from_result(config: ConfigRecord, result: &SolveResult, wall_seconds: Option<f64>) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            config,
            grid: result.state.grid().spec(),
            state: StateRecord::from_state(&result.state, result.params),
            report: ReportRecord {
                functionals: result.report,
                omega_recovered: result.omega_recovered,
                converged: result.converged,
                postconditions_ok: result.postconditions_ok,
                multistart_spread: result.multistart_spread,
                monotone: result.monotone,
            },
            residuals: result.residuals.into(),
            theorem_checks: None,
            timings: Timings {
                iterations: result.iterations,
                evaluations: result.evaluations,
                wall_seconds,
            },
        }
    }
}

/// Parses and validates a result record: schema tag, grid agreement and
/// a rebuildable state.
pub fn parse_result_record(text: &str) -> Result<ResultRecord> {
    let record: ResultRecord =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if record.schema != SCHEMA {
        return Err(Error::Format(format!(
            "unknown schema {:?}, expected {SCHEMA:?}",
            record.schema
        )));
    }
    if record.grid != record.state.grid {
        return Err(Error::Format("grid and state.grid disagree".into()));
    }
    record.state.to_state()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn sample_state() -> (DecomposedState, Params) {
        let grid = Arc::new(build_grid(64, 7.5, 2.0).unwrap());
        let phi = grid.sample(|r| (-r).exp() / 3.0 + 1e-300);
        let params = Params::new(2.5, -0.25).unwrap();
        (DecomposedState::new(grid, 1.0 / 3.0, 0.1, phi).unwrap(), params)
    }

    #[test]
    fn floats_use_seventeen_digits_and_round_trip() {
        for v in [0.1f64, 1.0 / 3.0, -2.5e-300, 1e300, 5e-324, -0.0, 123456789.123456789] {
            let text = to_json(&v).unwrap();
            let mantissa = text.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{text}");
            let back: f64 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{text}");
        }
        assert_eq!(to_json(&f64::NAN).unwrap(), "null");
    }

    #[test]
    fn state_record_round_trips_bit_exactly() {
        let (state, params) = sample_state();
        let rec = StateRecord::from_state(&state, params);
        let text = to_json(&rec).unwrap();
        let back = parse_state_record(&text).unwrap();
        assert_eq!(back, rec);
        let (rebuilt, p2) = back.to_state().unwrap();
        assert_eq!(rebuilt, state);
        assert_eq!(p2, params);
        assert_eq!(to_json(&back).unwrap(), text);
    }

    #[test]
    fn malformed_state_records_are_rejected() {
        let (state, params) = sample_state();
        let good = to_json(&StateRecord::from_state(&state, params)).unwrap();
        assert!(parse_state_record("").is_err());
        assert!(parse_state_record("{}").is_err());
        assert!(parse_state_record(&good.replace("\"q\"", "\"charge\"")).is_err());
        let mut rec = StateRecord::from_state(&state, params);
        rec.phi.pop();
        assert!(matches!(
            parse_state_record(&to_json(&rec).unwrap()),
            Err(Error::LengthMismatch { .. })
        ));
        let mut rec = StateRecord::from_state(&state, params);
        rec.params.p = 3.5;
        assert!(parse_state_record(&to_json(&rec).unwrap()).is_err());
        let mut rec = StateRecord::from_state(&state, params);
        rec.lambda = -1.0;
        assert!(parse_state_record(&to_json(&rec).unwrap()).is_err());
        let mut rec = StateRecord::from_state(&state, params);
        rec.phi[3] = f64::NAN;
        assert!(parse_state_record(&to_json(&rec).unwrap()).is_err());
    }

    #[test]
    fn csv_cells() {
        assert_eq!(format_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(format_f64(f64::NAN), "NaN");
        assert_eq!(format_f64(f64::NEG_INFINITY), "-inf");
    }
}
