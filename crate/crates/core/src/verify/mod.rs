//! Property checks for the averaging operators and the calculus identities.
//!
//! Two tolerance regimes are used. Identities that hold exactly on the grid
//! are compared at [`IDENTITY_RTOL`] relative to a scale natural to the
//! compared quantity. Statements that only hold in the limit are checked as
//! convergence studies, by the fitted log-log order of the error.

mod checks;
mod convergence;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use checks::*;
pub use convergence::*;

use crate::error::{Error, Result};

/// Relative tolerance of exact discrete identities and inequalities.
pub const IDENTITY_RTOL: f64 = 1e-12;

/// Errors at or below `ORDER_FLOOR_RTOL * scale` are excluded from order fits.
pub const ORDER_FLOOR_RTOL: f64 = 1e-13;

/// What a check's `passed` flag means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `measured <= bound + tolerance`.
    UpperBound,
    /// `measured >= bound - tolerance`.
    LowerBound,
    /// `|measured - target| <= tolerance`.
    Identity,
}

/// Outcome of one check on one field with one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub field_name: String,
    pub kind: CheckKind,
    #[serde(with = "real_map")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(with = "real")]
    pub measured: f64,
    #[serde(with = "real")]
    pub bound_or_target: f64,
    #[serde(with = "real")]
    pub margin: f64,
    pub passed: bool,
    #[serde(with = "real")]
    pub tolerance: f64,
    pub runtime_ms: f64,
}

/// Named real parameters, kept sorted for stable output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn into_map(self) -> BTreeMap<String, f64> {
        self.0
    }
}

impl CheckResult {
    fn build(
        check_id: &str,
        field_name: &str,
        kind: CheckKind,
        params: Params,
        measured: f64,
        bound_or_target: f64,
        tolerance: f64,
    ) -> Self {
        let margin = match kind {
            CheckKind::UpperBound => bound_or_target - measured,
            CheckKind::LowerBound => measured - bound_or_target,
            CheckKind::Identity => tolerance - (measured - bound_or_target).abs(),
        };
        let passed = match kind {
            CheckKind::UpperBound | CheckKind::LowerBound => margin >= -tolerance,
            CheckKind::Identity => (measured - bound_or_target).abs() <= tolerance,
        };
        CheckResult {
            check_id: check_id.to_string(),
            field_name: field_name.to_string(),
            kind,
            parameters: params.into_map(),
            measured,
            bound_or_target,
            margin,
            passed: passed && measured.is_finite(),
            tolerance,
            runtime_ms: 0.0,
        }
    }

    pub fn upper_bound(
        check_id: &str,
        field_name: &str,
        params: Params,
        measured: f64,
        bound: f64,
        tolerance: f64,
    ) -> Self {
        Self::build(check_id, field_name, CheckKind::UpperBound, params, measured, bound, tolerance)
    }

    pub fn lower_bound(
        check_id: &str,
        field_name: &str,
        params: Params,
        measured: f64,
        bound: f64,
        tolerance: f64,
    ) -> Self {
        Self::build(check_id, field_name, CheckKind::LowerBound, params, measured, bound, tolerance)
    }

    pub fn identity(
        check_id: &str,
        field_name: &str,
        params: Params,
        measured: f64,
        target: f64,
        tolerance: f64,
    ) -> Self {
        Self::build(check_id, field_name, CheckKind::Identity, params, measured, target, tolerance)
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).copied()
    }
}

/// Error sequence of a limit statement, with its fitted log-log order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub check_id: String,
    pub field_name: String,
    #[serde(with = "real_map")]
    pub parameters: BTreeMap<String, f64>,
    /// `"h"` or `"dt"`.
    pub abscissa: String,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_order: Option<f64>,
    /// Accepted order interval, when an order is asserted.
    pub order_range: Option<(f64, f64)>,
    pub passed: bool,
    pub note: String,
}

impl ConvergenceStudy {
    /// One report row: measured = fitted order (or the last error when no
    /// order is fitted), tolerance = half-width of the accepted interval.
    pub fn summary(&self) -> CheckResult {
        let mut params = Params(self.parameters.clone());
        if let (Some(first), Some(last)) = (self.steps.first(), self.steps.last()) {
            params = params
                .with(&format!("{}_max", self.abscissa), *first)
                .with(&format!("{}_min", self.abscissa), *last);
        }
        let (measured, target, tolerance) = match (self.fitted_order, self.order_range) {
            (Some(order), Some((lo, hi))) => (order, 0.5 * (lo + hi), 0.5 * (hi - lo)),
            (Some(order), None) => (order, order, 0.0),
            (None, _) => {
                let last = self.errors.last().copied().unwrap_or(0.0);
                (last, last, 0.0)
            }
        };
        let mut r = CheckResult::identity(
            &self.check_id,
            &self.field_name,
            params,
            measured,
            target,
            tolerance,
        );
        r.passed = self.passed;
        r
    }
}

/// Least-squares slope of `log(error)` against `log(step)`.
///
/// Points with `error <= floor` are dropped; at least three must remain.
pub fn estimate_order(steps: &[f64], errors: &[f64], floor: f64) -> Result<f64> {
    if steps.len() != errors.len() {
        return Err(Error::InvalidParameter(format!(
            "{} steps but {} errors",
            steps.len(),
            errors.len()
        )));
    }
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .filter(|(s, e)| **e > floor && **s > 0.0)
        .map(|(s, e)| (s.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            have: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("steps must not all be equal".into()));
    }
    Ok(sxy / sxx)
}

/// Serializes non-finite reals as strings (`"inf"`, `"-inf"`, `"nan"`),
/// which plain JSON numbers cannot carry.
pub mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a real: {other}"))),
            },
        }
    }

    pub fn format(v: f64) -> String {
        if v.is_finite() {
            format!("{v}")
        } else if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    }
}

pub(crate) mod real_map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    struct Real(f64);

    impl serde::Serialize for Real {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::real::serialize(&self.0, s)
        }
    }

    #[derive(Deserialize)]
    struct RealIn(#[serde(with = "super::real")] f64);

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(k, &Real(*v))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, RealIn>::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, v)| (k, v.0)).collect())
    }
}
