//! Forward Steklov time averages.
//!
//! On a uniform time grid with window `h = k * dt`, the average at `t_j` is
//! the left-Riemann realization of `(1/h) * int_t^{t+h} v(., s) ds`:
//!
//! ```text
//! v_h(x, t_j) = (1/k) * sum_{i=0}^{k-1} v(x, t_{j+i})
//! ```
//!
//! Sample `j` stands for the cell `[t_j, t_{j+1})`, matching the
//! left-Riemann time quadrature of the norms; the last sample is the value
//! at `b` and carries no weight. The restricted operator lives on
//! `I_h = { t_j : t_j + h in I }` and never reaches past `b`. The extended
//! operator lives on all of `I` and reads the zero extension from `b` on,
//! which makes it a contraction in every discrete Bochner norm. Both go
//! through the same prefix-sum kernel, so they agree bit for bit on `I_h`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Field, TimeGrid};

/// Series longer than this use compensated prefix sums.
pub const COMPENSATED_THRESHOLD: usize = 10_000;

/// Averaging window, an exact positive multiple of the time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteklovParams {
    h: f64,
    k: usize,
}

impl SteklovParams {
    /// Window of `k` steps of size `dt`.
    pub fn from_steps(k: usize, dt: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("window must span at least one step".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        Ok(SteklovParams {
            h: k as f64 * dt,
            k,
        })
    }

    /// Window of length `h` on `time`; `h / dt` must be a positive integer
    /// to within 1e-9 relative.
    pub fn from_window(h: f64, time: &TimeGrid) -> Result<Self> {
        let ratio = h / time.dt;
        let k = ratio.round();
        if !(h.is_finite() && h > 0.0) || k < 1.0 || (ratio - k).abs() > 1e-9 * k {
            return Err(Error::WindowNotMultiple { h, dt: time.dt });
        }
        Self::from_steps(k as usize, time.dt)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.k
    }

    fn check_on(&self, time: &TimeGrid) -> Result<()> {
        let expected = self.k as f64 * time.dt;
        if (self.h - expected).abs() > 1e-12 * expected {
            return Err(Error::WindowNotMultiple { h: self.h, dt: time.dt });
        }
        Ok(())
    }
}

/// `I_h`: the grid times `t_j` with `t_j + h` still in `I`. May hold a
/// single point, the one place a time grid with `n = 1` appears.
pub fn ih_domain(time: &TimeGrid, params: &SteklovParams) -> Result<TimeGrid> {
    let k = params.steps();
    if k >= time.n {
        return Err(Error::EmptyDomain {
            steps: k,
            points: time.n,
        });
    }
    // k = n - 1 leaves the single point {t0}.
    Ok(TimeGrid {
        t0: time.t0,
        dt: time.dt,
        n: time.n - k,
    })
}

/// Prefix sums of one series, `P[m] = sum_{i<m} v_i`.
enum Prefix {
    Plain(Vec<f64>),
    /// Double-double accumulation: `hi[m] + lo[m]`.
    Compensated { hi: Vec<f64>, lo: Vec<f64> },
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl Prefix {
    fn build(series: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(series.len() + 1);
        hi.push(0.0);
        if series.len() <= COMPENSATED_THRESHOLD {
            let mut acc = 0.0;
            for &v in series {
                acc += v;
                hi.push(acc);
            }
            Prefix::Plain(hi)
        } else {
            let mut lo = Vec::with_capacity(series.len() + 1);
            lo.push(0.0);
            let (mut s, mut c) = (0.0, 0.0);
            for &v in series {
                let (t, e) = two_sum(s, v);
                c += e;
                let (s2, c2) = two_sum(t, c);
                s = s2;
                c = c2;
                hi.push(s);
                lo.push(c);
            }
            Prefix::Compensated { hi, lo }
        }
    }

    /// `sum_{a <= i < b} v_i`, subtracting before any division.
    #[inline]
    fn window(&self, a: usize, b: usize) -> f64 {
        match self {
            Prefix::Plain(p) => p[b] - p[a],
            Prefix::Compensated { hi, lo } => (hi[b] - hi[a]) + (lo[b] - lo[a]),
        }
    }
}

/// Window means of `series` at `out.len()` consecutive starting indices.
///
/// Only the first `n - 1` samples carry quadrature weight: sample `j`
/// stands for the cell `[t_j, t_{j+1})`, and the final sample is the value
/// at the right end `b`, where the zero extension begins. Windows that
/// reach past the last cell read zeros.
fn window_means(series: &[f64], k: usize, out: &mut [f64]) {
    let cells = series.len().saturating_sub(1);
    if k == 1 {
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j < cells { series[j] } else { 0.0 };
        }
        return;
    }
    let prefix = Prefix::build(&series[..cells]);
    let kf = k as f64;
    for (j, o) in out.iter_mut().enumerate() {
        *o = prefix.window(j.min(cells), (j + k).min(cells)) / kf;
    }
}

fn map_series<F>(field: &Field, out_time: TimeGrid, per_series: F) -> Field
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let m = out_time.n;
    let mut values = vec![0.0; field.n_space() * m];
    values
        .par_chunks_mut(m)
        .zip(field.values().par_chunks(field.n_time()))
        .for_each(|(out, series)| per_series(series, out));
    Field::from_parts_unchecked(field.space().clone(), out_time, values)
}

/// Restricted Steklov average on `I_h`, via prefix sums.
pub fn steklov_average(field: &Field, params: &SteklovParams) -> Result<Field> {
    params.check_on(field.time())?;
    let domain = ih_domain(field.time(), params)?;
    let k = params.steps();
    Ok(map_series(field, domain, |s, out| window_means(s, k, out)))
}

/// Steklov average of the zero extension, on all of `I`.
pub fn steklov_average_extended(field: &Field, params: &SteklovParams) -> Result<Field> {
    params.check_on(field.time())?;
    let k = params.steps();
    Ok(map_series(field, *field.time(), |s, out| {
        window_means(s, k, out)
    }))
}

/// The extended average at a single `(x, t_j)`. Bit-identical to the
/// corresponding entry of [`steklov_average_extended`].
pub fn pointwise_average(
    field: &Field,
    spatial: usize,
    t_index: usize,
    params: &SteklovParams,
) -> Result<f64> {
    params.check_on(field.time())?;
    if spatial >= field.n_space() {
        return Err(Error::IndexOutOfRange {
            what: "spatial",
            index: spatial,
            len: field.n_space(),
        });
    }
    let n = field.n_time();
    if t_index >= n {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: t_index,
            len: n,
        });
    }
    let k = params.steps();
    let cells = n - 1;
    if k == 1 {
        return Ok(if t_index < cells { field.value(spatial, t_index) } else { 0.0 });
    }
    let prefix = Prefix::build(&field.series(spatial)[..cells]);
    Ok(prefix.window(t_index.min(cells), (t_index + k).min(cells)) / k as f64)
}

/// `(v(., t + h) - v(., t)) / h` on `I_h`.
pub fn steklov_time_derivative(field: &Field, params: &SteklovParams) -> Result<Field> {
    params.check_on(field.time())?;
    let domain = ih_domain(field.time(), params)?;
    let k = params.steps();
    let h = params.h();
    Ok(map_series(field, domain, |s, out| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (s[j + k] - s[j]) / h;
        }
    }))
}

/// Restricted average by direct summation, `O(k)` per output.
pub fn naive_average(field: &Field, params: &SteklovParams) -> Result<Field> {
    params.check_on(field.time())?;
    let domain = ih_domain(field.time(), params)?;
    let k = params.steps();
    Ok(map_series(field, domain, |s, out| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = s[j..j + k].iter().sum::<f64>() / k as f64;
        }
    }))
}

/// Forward difference in time, `(v(t_{j+1}) - v(t_j)) / dt`, on the first
/// `n - 1` grid times.
pub fn forward_difference(field: &Field) -> Field {
    let dt = field.time().dt;
    let time = TimeGrid {
        t0: field.time().t0,
        dt,
        n: field.n_time() - 1,
    };
    map_series(field, time, |s, out| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (s[j + 1] - s[j]) / dt;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpaceGrid;

    fn series_field(values: Vec<f64>, dt: f64) -> Field {
        let n = values.len();
        Field::new(SpaceGrid::point(), TimeGrid::new(0.0, dt, n).unwrap(), values).unwrap()
    }

    #[test]
    fn domain_sizes() {
        let t = TimeGrid::new(0.0, 0.1, 5).unwrap();
        let p = SteklovParams::from_steps(2, 0.1).unwrap();
        let d = ih_domain(&t, &p).unwrap();
        assert_eq!((d.t0, d.dt, d.n), (0.0, 0.1, 3));
        let p = SteklovParams::from_steps(4, 0.1).unwrap();
        assert_eq!(ih_domain(&t, &p).unwrap().n, 1);
        assert!(SteklovParams::from_steps(0, 0.1).is_err());
        let t2 = TimeGrid::new(0.0, 0.1, 2).unwrap();
        let p = SteklovParams::from_steps(2, 0.1).unwrap();
        assert!(matches!(ih_domain(&t2, &p), Err(Error::EmptyDomain { .. })));
    }

    #[test]
    fn window_must_be_multiple_of_dt() {
        let t = TimeGrid::new(0.0, 0.1, 11).unwrap();
        assert_eq!(SteklovParams::from_window(0.4, &t).unwrap().steps(), 4);
        assert!(matches!(
            SteklovParams::from_window(0.25, &t),
            Err(Error::WindowNotMultiple { .. })
        ));
        assert!(SteklovParams::from_window(0.0, &t).is_err());
        assert!(SteklovParams::from_window(-0.2, &t).is_err());
    }

    #[test]
    fn mean_of_linear_window() {
        let time = TimeGrid::new(0.0, 0.1, 11).unwrap();
        let f = Field::from_fn(SpaceGrid::point(), time, |_, t| t).unwrap();
        let p = SteklovParams::from_window(0.4, &time).unwrap();
        let avg = steklov_average(&f, &p).unwrap();
        assert!((avg.value(0, 0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn constants_preserved() {
        let f = series_field(vec![3.0; 9], 0.25);
        let p = SteklovParams::from_steps(3, 0.25).unwrap();
        assert!(steklov_average(&f, &p).unwrap().values().iter().all(|&v| v == 3.0));
        assert!(naive_average(&f, &p).unwrap().values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn unit_window_is_identity() {
        let vals = vec![0.3, -1.2, 4.5, 2.25, 7.0];
        let f = series_field(vals.clone(), 1.0);
        let p = SteklovParams::from_steps(1, 1.0).unwrap();
        assert_eq!(steklov_average(&f, &p).unwrap().values(), &vals[..4]);
        assert_eq!(naive_average(&f, &p).unwrap().values(), &vals[..4]);
    }

    #[test]
    fn extension_reads_zero_past_end() {
        let f = series_field(vec![1.0; 6], 0.5);
        let p = SteklovParams::from_steps(2, 0.5).unwrap();
        let ext = steklov_average_extended(&f, &p).unwrap();
        assert_eq!(ext.n_time(), 6);
        // the last sample sits at b and the extension is zero from there
        assert_eq!(ext.value(0, 5), 0.0);
        assert_eq!(ext.value(0, 4), 0.5);
        assert_eq!(ext.value(0, 3), 1.0);
        let z = series_field(vec![0.0; 6], 0.5);
        assert!(steklov_average_extended(&z, &p).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn restricted_matches_extended_on_ih() {
        let f = series_field((0..20).map(|i| ((i * 7) % 5) as f64 - 1.5).collect(), 0.1);
        let p = SteklovParams::from_steps(6, 0.1).unwrap();
        let r = steklov_average(&f, &p).unwrap();
        let e = steklov_average_extended(&f, &p).unwrap();
        assert_eq!(r.values(), &e.values()[..r.n_time()]);
    }

    #[test]
    fn pointwise_two_samples() {
        let f = series_field(vec![2.0, 4.0, 1.0], 1.0);
        let p = SteklovParams::from_steps(2, 1.0).unwrap();
        assert_eq!(pointwise_average(&f, 0, 0, &p).unwrap(), 3.0);
        assert_eq!(pointwise_average(&f, 0, 1, &p).unwrap(), 2.0);
        assert_eq!(pointwise_average(&f, 0, 2, &p).unwrap(), 0.0);
        assert!(pointwise_average(&f, 1, 0, &p).is_err());
        assert!(pointwise_average(&f, 0, 3, &p).is_err());
    }

    #[test]
    fn time_derivative_of_linear_is_one() {
        let time = TimeGrid::new(0.0, 0.125, 17).unwrap();
        let f = Field::from_fn(SpaceGrid::point(), time, |_, t| t).unwrap();
        let p = SteklovParams::from_steps(4, 0.125).unwrap();
        let d = steklov_time_derivative(&f, &p).unwrap();
        assert_eq!(d.n_time(), 13);
        assert!(d.values().iter().all(|&v| v == 1.0));
        let c = series_field(vec![5.0; 17], 0.125);
        assert!(steklov_time_derivative(&c, &p).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn window_exceeding_grid_is_error() {
        let f = series_field(vec![1.0, 2.0, 3.0], 1.0);
        let p = SteklovParams::from_steps(3, 1.0).unwrap();
        assert!(steklov_average(&f, &p).is_err());
        assert!(naive_average(&f, &p).is_err());
        assert!(steklov_time_derivative(&f, &p).is_err());
        assert!(steklov_average_extended(&f, &p).is_ok());
    }

    #[test]
    fn compensated_prefix_tracks_long_series() {
        let n = COMPENSATED_THRESHOLD + 500;
        let vals: Vec<f64> = (0..n).map(|i| 1e6 + 0.1 * ((i % 13) as f64)).collect();
        let f = series_field(vals, 1e-4);
        let p = SteklovParams::from_steps(3, 1e-4).unwrap();
        let fast = steklov_average(&f, &p).unwrap();
        let slow = naive_average(&f, &p).unwrap();
        let worst = fast
            .values()
            .iter()
            .zip(slow.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst <= 1e-12 * 1e6, "worst = {worst}");
    }
}
