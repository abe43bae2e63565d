//! Discrete `L^q(E)` norms and `L^r(I, L^q(E))` Bochner norms.
//!
//! Spatial integrals weight every sample by the cell volume. Time integrals
//! use left-Riemann quadrature, so the last grid time carries no weight.
//! Infinite exponents are exact maxima over samples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{Field, SpaceSlice};

/// An integrability exponent in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);
    pub const INF: Exponent = Exponent::Infinity;

    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    pub fn validate(self) -> Result<Self> {
        Exponent::new(self.as_f64())
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `1/p`, zero for `p = inf`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse exponent {s:?}")))?;
                Exponent::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => serializer.serialize_f64(*p),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Exponent pair selecting `||.||_{L^r(I, L^q(E))}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BochnerSpec {
    pub q: Exponent,
    pub r: Exponent,
}

impl BochnerSpec {
    pub fn new(q: Exponent, r: Exponent) -> Result<Self> {
        Ok(BochnerSpec {
            q: q.validate()?,
            r: r.validate()?,
        })
    }
}

#[inline]
fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

#[inline]
fn root(sum: f64, p: f64) -> f64 {
    if p == 1.0 {
        sum
    } else if p == 2.0 {
        sum.sqrt()
    } else {
        sum.powf(1.0 / p)
    }
}

/// Weighted `L^p` norm of a sample sequence, each sample carrying `weight`.
pub fn weighted_norm<I>(values: I, weight: f64, p: Exponent) -> f64
where
    I: IntoIterator<Item = f64>,
{
    match p {
        Exponent::Infinity => values.into_iter().fold(0.0, |m, v| m.max(v.abs())),
        Exponent::Finite(p) => {
            let sum: f64 = values.into_iter().map(|v| pow_abs(v, p)).sum();
            root(sum * weight, p)
        }
    }
}

pub fn lq_slice_norm(slice: &SpaceSlice, q: Exponent) -> Result<f64> {
    let q = q.validate()?;
    Ok(weighted_norm(
        slice.values().iter().copied(),
        slice.space().cell_volume(),
        q,
    ))
}

/// `||v(., t_j)||_{L^q(E)}`.
pub fn lq_space_norm(field: &Field, t_index: usize, q: Exponent) -> Result<f64> {
    let q = q.validate()?;
    if t_index >= field.n_time() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: t_index,
            len: field.n_time(),
        });
    }
    Ok(weighted_norm(
        field.series_iter().map(|s| s[t_index]),
        field.space().cell_volume(),
        q,
    ))
}

/// `||v(., t_j)||_{L^q(E)}` for every time index in one pass.
pub fn slice_norms(field: &Field, q: Exponent) -> Result<Vec<f64>> {
    let q = q.validate()?;
    let n = field.n_time();
    let mut acc = vec![0.0_f64; n];
    match q {
        Exponent::Infinity => {
            for series in field.series_iter() {
                for (a, v) in acc.iter_mut().zip(series) {
                    *a = a.max(v.abs());
                }
            }
        }
        Exponent::Finite(p) => {
            for series in field.series_iter() {
                for (a, &v) in acc.iter_mut().zip(series) {
                    *a += pow_abs(v, p);
                }
            }
            let w = field.space().cell_volume();
            for a in &mut acc {
                *a = root(*a * w, p);
            }
        }
    }
    Ok(acc)
}

/// Combines per-time spatial norms into the time norm: left-Riemann for
/// finite `r` (last sample excluded), maximum over all samples for `r = inf`.
pub fn time_norm(slice_norms: &[f64], dt: f64, r: Exponent) -> f64 {
    match r {
        Exponent::Infinity => slice_norms.iter().fold(0.0, |m, v| m.max(*v)),
        Exponent::Finite(_) => {
            let weighted = &slice_norms[..slice_norms.len().saturating_sub(1)];
            weighted_norm(weighted.iter().copied(), dt, r)
        }
    }
}

/// `||v||_{L^r(I, L^q(E))}`.
pub fn bochner_norm(field: &Field, spec: BochnerSpec) -> Result<f64> {
    let norms = slice_norms(field, spec.q)?;
    Ok(time_norm(&norms, field.time().dt, spec.r.validate()?))
}

/// `max_j ||v(., t_j)||_{L^q}`, the `r = inf` Bochner norm.
pub fn ess_sup_time(field: &Field, q: Exponent) -> Result<f64> {
    Ok(slice_norms(field, q)?.into_iter().fold(0.0, f64::max))
}

/// `V(t_j) = sum_{i < j} ||v(., t_i)||_{L^q}^r dt`.
pub fn cumulative_norm_v(field: &Field, spec: BochnerSpec, t_index: usize) -> Result<f64> {
    let r = match spec.r.validate()? {
        Exponent::Infinity => return Err(Error::InfiniteExponent),
        Exponent::Finite(r) => r,
    };
    if t_index >= field.n_time() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: t_index,
            len: field.n_time(),
        });
    }
    let norms = slice_norms(field, spec.q)?;
    let dt = field.time().dt;
    Ok(norms[..t_index].iter().map(|&s| pow_abs(s, r)).sum::<f64>() * dt)
}
