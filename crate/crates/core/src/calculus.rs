//! Spatial weak derivatives, test-function pairing, cumulative time
//! integrals and integration by parts on sampled fields.

use crate::error::{Error, Result};
use crate::field::{Field, SpaceGrid, SpaceSlice, TimeGrid};

/// Discrete test function: values on a spatial grid, exactly zero on the
/// outermost layer of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    space: SpaceGrid,
    values: Vec<f64>,
}

impl TestFunction {
    pub fn new(space: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        let slice = SpaceSlice::new(space, values)?;
        let space = slice.space().clone();
        let values = slice.values().to_vec();
        if let Some(s) = (0..space.len()).find(|&s| space.on_boundary(s) && values[s] != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "test function must vanish on the boundary layer, nonzero at spatial index {s}"
            )));
        }
        Ok(TestFunction { space, values })
    }

    /// Product of 1-D smooth bumps `exp(1 - 1/(1 - u^2))`, `u = (x - c)/radius`,
    /// zero outside `|u| < 1` on every axis.
    pub fn bump(space: SpaceGrid, center: &[f64], radius: &[f64]) -> Result<Self> {
        if center.len() != space.ndim() || radius.len() != space.ndim() {
            return Err(Error::InvalidParameter(
                "bump center and radius need one entry per axis".into(),
            ));
        }
        let values = (0..space.len())
            .map(|s| {
                space
                    .coords(s)
                    .iter()
                    .zip(center.iter().zip(radius))
                    .map(|(x, (c, r))| bump_1d((x - c) / r))
                    .product()
            })
            .collect();
        Self::new(space, values)
    }

    /// `d/dx_axis` of [`TestFunction::bump`], evaluated exactly.
    pub fn bump_derivative(
        space: &SpaceGrid,
        center: &[f64],
        radius: &[f64],
        axis: usize,
    ) -> Result<SpaceSlice> {
        SpaceSlice::from_fn(space.clone(), |x| {
            (0..x.len())
                .map(|a| {
                    let u = (x[a] - center[a]) / radius[a];
                    if a == axis {
                        bump_1d_derivative(u) / radius[a]
                    } else {
                        bump_1d(u)
                    }
                })
                .product()
        })
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn as_slice(&self) -> SpaceSlice {
        SpaceSlice::from_parts_unchecked(self.space.clone(), self.values.clone())
    }
}

fn bump_1d(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

fn bump_1d_derivative(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let d = 1.0 - u * u;
        -2.0 * u / (d * d) * bump_1d(u)
    } else {
        0.0
    }
}

/// Differentiates `src` along `axis`; each spatial point owns `inner`
/// consecutive values (the time series for a field, one value for a slice).
fn diff_axis(src: &[f64], dst: &mut [f64], space: &SpaceGrid, axis: usize, inner: usize) {
    let m = space.shape()[axis];
    let stride = space.stride(axis);
    let h2 = 2.0 * space.spacing()[axis];
    for s in 0..space.len() {
        let i = (s / stride) % m;
        let at = |offset: isize| {
            let flat = (s as isize + offset * stride as isize) as usize;
            &src[flat * inner..(flat + 1) * inner]
        };
        let out = &mut dst[s * inner..(s + 1) * inner];
        if i == 0 {
            let (a, b, c) = (at(0), at(1), at(2));
            for j in 0..inner {
                out[j] = (-3.0 * a[j] + 4.0 * b[j] - c[j]) / h2;
            }
        } else if i == m - 1 {
            let (a, b, c) = (at(0), at(-1), at(-2));
            for j in 0..inner {
                out[j] = (3.0 * a[j] - 4.0 * b[j] + c[j]) / h2;
            }
        } else {
            let (lo, hi) = (at(-1), at(1));
            for j in 0..inner {
                out[j] = (hi[j] - lo[j]) / h2;
            }
        }
    }
}

fn check_axis(space: &SpaceGrid, axis: usize) -> Result<()> {
    if axis >= space.ndim() {
        return Err(Error::InvalidAxis {
            axis,
            reason: format!("grid has {} axes", space.ndim()),
        });
    }
    if space.shape()[axis] < 3 {
        return Err(Error::InvalidAxis {
            axis,
            reason: format!("extent {} < 3", space.shape()[axis]),
        });
    }
    Ok(())
}

/// `D_axis v` at every time: central differences inside, second-order
/// one-sided differences on the two boundary layers.
pub fn weak_derivative(field: &Field, axis: usize) -> Result<Field> {
    check_axis(field.space(), axis)?;
    let mut out = vec![0.0; field.values().len()];
    diff_axis(field.values(), &mut out, field.space(), axis, field.n_time());
    Ok(Field::from_parts_unchecked(
        field.space().clone(),
        *field.time(),
        out,
    ))
}

/// [`weak_derivative`] for a single spatial slice.
pub fn slice_derivative(slice: &SpaceSlice, axis: usize) -> Result<SpaceSlice> {
    check_axis(slice.space(), axis)?;
    let mut out = vec![0.0; slice.values().len()];
    diff_axis(slice.values(), &mut out, slice.space(), axis, 1);
    Ok(SpaceSlice::from_parts_unchecked(slice.space().clone(), out))
}

/// `<u | phi> = sum_x u(x) phi(x) dV`.
pub fn pair(slice: &SpaceSlice, phi: &TestFunction) -> Result<f64> {
    pair_slices(slice, &phi.as_slice())
}

pub(crate) fn pair_slices(a: &SpaceSlice, b: &SpaceSlice) -> Result<f64> {
    if a.space() != b.space() {
        return Err(Error::GridMismatch("pairing requires identical spatial grids".into()));
    }
    let dv = a.space().cell_volume();
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(u, p)| u * p)
        .sum::<f64>()
        * dv)
}

fn check_slice_on(f: &Field, slice: &SpaceSlice, what: &str) -> Result<()> {
    if f.space() != slice.space() {
        return Err(Error::GridMismatch(format!(
            "{what} lives on a different spatial grid than the integrand"
        )));
    }
    Ok(())
}

fn check_index(t: &TimeGrid, index: usize, what: &'static str) -> Result<()> {
    if index >= t.n {
        return Err(Error::IndexOutOfRange {
            what,
            index,
            len: t.n,
        });
    }
    Ok(())
}

/// `F(., t_j) = F0 + int_{t_base}^{t_j} f ds`, left-Riemann, signed for
/// `j < base`. The forward difference of the result reproduces `f`.
pub fn cumulative_integral(f: &Field, f0: &SpaceSlice, base: usize) -> Result<Field> {
    check_slice_on(f, f0, "F0")?;
    check_index(f.time(), base, "base time")?;
    let n = f.n_time();
    let dt = f.time().dt;
    let mut out = vec![0.0; f.values().len()];
    for (s, (series, dst)) in f.series_iter().zip(out.chunks_exact_mut(n)).enumerate() {
        dst[base] = f0.values()[s];
        for j in base..n - 1 {
            dst[j + 1] = dst[j] + series[j] * dt;
        }
        for j in (0..base).rev() {
            dst[j] = dst[j + 1] - series[j] * dt;
        }
    }
    Field::new(f.space().clone(), *f.time(), out)
}

/// `int_{t_j1}^{t_j2} f dt`, left-Riemann over `[t_j1, t_j2)`.
pub fn integrate_time(f: &Field, j1: usize, j2: usize) -> Result<SpaceSlice> {
    check_index(f.time(), j2, "end time")?;
    if j1 > j2 {
        return Err(Error::InvalidParameter(format!(
            "integration bounds reversed: {j1} > {j2}"
        )));
    }
    let dt = f.time().dt;
    let values = f
        .series_iter()
        .map(|s| s[j1..j2].iter().sum::<f64>() * dt)
        .collect();
    Ok(SpaceSlice::from_parts_unchecked(f.space().clone(), values))
}

/// Indices of an integration-by-parts setup: base points of `F` and `G`
/// and the interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IbpIndices {
    pub f_base: usize,
    pub g_base: usize,
    pub a: usize,
    pub b: usize,
}

/// `int_a^b f G + int_a^b F g - [F(b) G(b) - F(a) G(a)]` with
/// `F = F0 + int_{t0} f`, `G = G1 + int_{t1} g`, all left-Riemann. Vanishes
/// in the continuum; on a grid it is `-sum f g dt^2`.
pub fn integration_by_parts_residual(
    f: &Field,
    g: &Field,
    f0: &SpaceSlice,
    g1: &SpaceSlice,
    idx: IbpIndices,
) -> Result<SpaceSlice> {
    f.ensure_same_grid(g)?;
    check_index(f.time(), idx.a, "a")?;
    check_index(f.time(), idx.b, "b")?;
    if idx.a > idx.b {
        return Err(Error::InvalidParameter(format!(
            "interval reversed: a = {} > b = {}",
            idx.a, idx.b
        )));
    }
    let big_f = cumulative_integral(f, f0, idx.f_base)?;
    let big_g = cumulative_integral(g, g1, idx.g_base)?;
    let dt = f.time().dt;
    let (a, b) = (idx.a, idx.b);
    let values = (0..f.n_space())
        .map(|s| {
            let (fs, gs) = (f.series(s), g.series(s));
            let (ff, gg) = (big_f.series(s), big_g.series(s));
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for j in a..b {
                lhs += fs[j] * gg[j];
                rhs += ff[j] * gs[j];
            }
            (lhs + rhs) * dt - (ff[b] * gg[b] - ff[a] * gg[a])
        })
        .collect();
    Ok(SpaceSlice::from_parts_unchecked(f.space().clone(), values))
}

/// Residual of the summation-by-parts identity
/// `sum (F_{j+1} - F_j) G_j = F_b G_b - F_a G_a - sum F_{j+1} (G_{j+1} - G_j)`
/// over `a <= j < b`, per spatial point.
pub fn abel_residual(big_f: &Field, big_g: &Field, a: usize, b: usize) -> Result<SpaceSlice> {
    big_f.ensure_same_grid(big_g)?;
    check_index(big_f.time(), b, "b")?;
    if a > b {
        return Err(Error::InvalidParameter(format!("interval reversed: {a} > {b}")));
    }
    let values = (0..big_f.n_space())
        .map(|s| {
            let (ff, gg) = (big_f.series(s), big_g.series(s));
            let mut lhs = 0.0;
            let mut tail = 0.0;
            for j in a..b {
                lhs += (ff[j + 1] - ff[j]) * gg[j];
                tail += ff[j + 1] * (gg[j + 1] - gg[j]);
            }
            lhs - (ff[b] * gg[b] - ff[a] * gg[a] - tail)
        })
        .collect();
    Ok(SpaceSlice::from_parts_unchecked(big_f.space().clone(), values))
}
