use crate::calculus::{
    abel_residual, cumulative_integral, integrate_time, weak_derivative,
};
use crate::corpus::{entry_cantor, MAX_CANTOR_LEVEL};
use crate::error::{Error, Result};
use crate::field::{Field, SpaceSlice};
use crate::norms::{bochner_norm, ess_sup_time, slice_norms, weighted_norm, BochnerSpec, Exponent};
use crate::steklov::{
    forward_difference, naive_average, pointwise_average, steklov_average,
    steklov_average_extended, steklov_time_derivative, SteklovParams,
};

use super::{CheckResult, Params, IDENTITY_RTOL};

pub const CONTRACTION: &str = "lemma-2.4d-contraction";
pub const POINTWISE_BOUND: &str = "lemma-2.4a-pointwise-bound";
pub const LIPSCHITZ: &str = "lemma-2.2-lipschitz";
pub const POINTWISE_VALUES: &str = "lemma-3.1-pointwise-values";
pub const COMMUTATION: &str = "lemma-4.1-commutation";
pub const TIME_DERIVATIVE: &str = "lemma-4.2-time-derivative";
pub const FTC_DERIVATIVE: &str = "lemma-5.1-ftc-derivative";
pub const FTC_INTEGRAL: &str = "lemma-5.2-ftc-integral";
pub const ABEL_IDENTITY: &str = "lemma-5.3-abel-identity";
pub const CANTOR: &str = "remark-5.2-cantor";
pub const CANTOR_RESTORED: &str = "remark-5.2-cantor-restored";
pub const KERNEL: &str = "kernel-naive-equivalence";

/// Discrepancy above which the Cantor counterexample counts as shown.
pub const CANTOR_THRESHOLD: f64 = 0.99;


fn window_params(field: &Field, params: &SteklovParams) -> Params {
    Params::new()
        .with("h", params.h())
        .with("k", params.steps() as f64)
        .with("dt", field.time().dt)
}

fn spec_params(field: &Field, params: &SteklovParams, spec: BochnerSpec) -> Params {
    window_params(field, params)
        .with("q", spec.q.as_f64())
        .with("r", spec.r.as_f64())
}

/// Largest `|a_i - b_i|` over the first `len` samples of every series.
fn max_series_gap(a: &Field, b: &Field, len: usize) -> f64 {
    a.series_iter()
        .zip(b.series_iter())
        .flat_map(|(x, y)| x[..len].iter().zip(&y[..len]).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// `||v_h||_{L^r(I, L^q)} <= ||v||_{L^r(I, L^q)}` for the zero-extended
/// average.
pub fn check_contraction(
    field: &Field,
    name: &str,
    spec: BochnerSpec,
    params: &SteklovParams,
) -> Result<CheckResult> {
    let avg = steklov_average_extended(field, params)?;
    let measured = bochner_norm(&avg, spec)?;
    let bound = bochner_norm(field, spec)?;
    Ok(CheckResult::upper_bound(
        CONTRACTION,
        name,
        spec_params(field, params, spec),
        measured,
        bound,
        IDENTITY_RTOL * bound,
    ))
}

/// `max_t ||v_h(., t)||_{L^q} <= h^{-1/r} ||v||_{L^r(I, L^q)}`, or the
/// essential supremum of `v` when `r = inf`.
pub fn check_pointwise_bound(
    field: &Field,
    name: &str,
    spec: BochnerSpec,
    params: &SteklovParams,
) -> Result<CheckResult> {
    let avg = steklov_average_extended(field, params)?;
    let measured = slice_norms(&avg, spec.q)?.into_iter().fold(0.0, f64::max);
    let bound = match spec.r {
        Exponent::Infinity => ess_sup_time(field, spec.q)?,
        Exponent::Finite(r) => params.h().powf(-1.0 / r) * bochner_norm(field, spec)?,
    };
    Ok(CheckResult::upper_bound(
        POINTWISE_BOUND,
        name,
        spec_params(field, params, spec),
        measured,
        bound,
        IDENTITY_RTOL * bound,
    ))
}

/// Largest difference quotient `||v_h(t_i) - v_h(t_j)||_q / |t_i - t_j|`
/// over all pairs of `I_h`, against `2 M / h` with `M = ess sup ||v||_q`.
pub fn check_lipschitz(
    field: &Field,
    name: &str,
    q: Exponent,
    params: &SteklovParams,
) -> Result<CheckResult> {
    let avg = steklov_average(field, params)?;
    let m = avg.n_time();
    let dt = avg.time().dt;
    let dv = avg.space().cell_volume();
    // time-major copy so each pair walks two contiguous slices
    let slices: Vec<Vec<f64>> = (0..m)
        .map(|j| avg.series_iter().map(|s| s[j]).collect())
        .collect();
    let mut measured: f64 = 0.0;
    let mut diff = vec![0.0; avg.n_space()];
    for i in 0..m {
        for j in i + 1..m {
            for (d, (a, b)) in diff.iter_mut().zip(slices[i].iter().zip(&slices[j])) {
                *d = a - b;
            }
            let gap = weighted_norm(diff.iter().copied(), dv, q);
            measured = measured.max(gap / ((j - i) as f64 * dt));
        }
    }
    let bound = 2.0 * ess_sup_time(field, q)? / params.h();
    Ok(CheckResult::upper_bound(
        LIPSCHITZ,
        name,
        window_params(field, params).with("q", q.as_f64()),
        measured,
        bound,
        IDENTITY_RTOL * bound,
    ))
}

/// The scalar pointwise average equals the field-level extended average at
/// every grid point.
pub fn check_pointwise_values(
    field: &Field,
    name: &str,
    params: &SteklovParams,
) -> Result<CheckResult> {
    let avg = steklov_average_extended(field, params)?;
    let mut measured: f64 = 0.0;
    for s in 0..field.n_space() {
        for j in 0..field.n_time() {
            let p = pointwise_average(field, s, j, params)?;
            measured = measured.max((p - avg.value(s, j)).abs());
        }
    }
    Ok(CheckResult::identity(
        POINTWISE_VALUES,
        name,
        window_params(field, params),
        measured,
        0.0,
        IDENTITY_RTOL * field.max_abs(),
    ))
}

/// `D_axis(v_h) = (D_axis v)_h` on `I_h`.
pub fn check_commutation(
    field: &Field,
    name: &str,
    params: &SteklovParams,
    axis: usize,
) -> Result<CheckResult> {
    let lhs = weak_derivative(&steklov_average(field, params)?, axis)?;
    let rhs = steklov_average(&weak_derivative(field, axis)?, params)?;
    let measured = max_series_gap(&lhs, &rhs, lhs.n_time());
    let scale = field.max_abs() / field.space().spacing()[axis];
    Ok(CheckResult::identity(
        COMMUTATION,
        name,
        window_params(field, params).with("axis", axis as f64),
        measured,
        0.0,
        IDENTITY_RTOL * scale,
    ))
}

/// Forward difference of `v_h` equals `(v(t + h) - v(t)) / h` on the
/// interior of `I_h`.
pub fn check_time_derivative(
    field: &Field,
    name: &str,
    params: &SteklovParams,
) -> Result<CheckResult> {
    let avg = steklov_average(field, params)?;
    let exact = steklov_time_derivative(field, params)?;
    let measured = if avg.n_time() < 2 {
        0.0
    } else {
        let lhs = forward_difference(&avg);
        max_series_gap(&lhs, &exact, lhs.n_time())
    };
    let scale = field.max_abs() / params.h();
    Ok(CheckResult::identity(
        TIME_DERIVATIVE,
        name,
        window_params(field, params),
        measured,
        0.0,
        IDENTITY_RTOL * scale,
    ))
}

/// Both halves of the fundamental theorem on the grid:
/// the forward difference of `F = F0 + int_{t_base} f` is `f`, and
/// `int_{t1}^{t2} f = F(t2) - F(t1)`.
pub fn check_ftc(
    f: &Field,
    name: &str,
    f0: &SpaceSlice,
    base: usize,
) -> Result<[CheckResult; 2]> {
    let big_f = cumulative_integral(f, f0, base)?;
    let n = f.n_time();
    let params = Params::new().with("dt", f.time().dt).with("base", base as f64);

    let diff = forward_difference(&big_f);
    let d_measured = max_series_gap(&diff, f, n - 1);
    let d_scale = f.max_abs().max(big_f.max_abs());

    let starts = {
        let mut v = vec![0, 1, base, n / 3, n / 2, n - 2];
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut i_measured: f64 = 0.0;
    for &j1 in &starts {
        for j2 in j1..n {
            let direct = integrate_time(f, j1, j2)?;
            for (s, d) in direct.values().iter().enumerate() {
                let via_f = big_f.value(s, j2) - big_f.value(s, j1);
                i_measured = i_measured.max((d - via_f).abs());
            }
        }
    }
    let i_scale = f.max_abs() * f.time().length() + big_f.max_abs();

    Ok([
        CheckResult::identity(
            FTC_DERIVATIVE,
            name,
            params.clone(),
            d_measured,
            0.0,
            IDENTITY_RTOL * d_scale,
        ),
        CheckResult::identity(
            FTC_INTEGRAL,
            name,
            params,
            i_measured,
            0.0,
            IDENTITY_RTOL * i_scale,
        ),
    ])
}

/// Exact summation by parts for `F, G` built from `f, g` on `[a, b]`.
pub fn check_abel_identity(
    big_f: &Field,
    big_g: &Field,
    name: &str,
    a: usize,
    b: usize,
) -> Result<CheckResult> {
    let r = abel_residual(big_f, big_g, a, b)?;
    let measured = r.max_abs();
    let scale = big_f.max_abs() * big_g.max_abs() * (b - a).max(1) as f64;
    Ok(CheckResult::identity(
        ABEL_IDENTITY,
        name,
        Params::new()
            .with("dt", big_f.time().dt)
            .with("a", a as f64)
            .with("b", b as f64),
        measured,
        0.0,
        IDENTITY_RTOL * scale,
    ))
}

/// `sup_x |int_0^1 f dt - (G(1) - G(0))|` for the level-`level` Cantor
/// approximation `G` and `f = 0`, the almost-everywhere derivative of the
/// limit function. Also returns the same discrepancy with `f` replaced by
/// the grid difference quotient of `G`, which must vanish.
pub fn demo_cantor(level: u32) -> Result<[CheckResult; 2]> {
    if !(1..=MAX_CANTOR_LEVEL).contains(&level) {
        return Err(Error::InvalidParameter(format!(
            "cantor level must be in 1..={MAX_CANTOR_LEVEL}, got {level}"
        )));
    }
    let entry = entry_cantor(level)?;
    let g = &entry.field;
    let n = g.n_time();
    let params = Params::new()
        .with("level", level as f64)
        .with("dt", g.time().dt);

    let discrepancy = |f: &Field| -> Result<f64> {
        let integral = integrate_time(f, 0, n - 1)?;
        Ok(integral
            .values()
            .iter()
            .enumerate()
            .map(|(s, i)| (i - (g.value(s, n - 1) - g.value(s, 0))).abs())
            .fold(0.0, f64::max))
    };

    let zero = Field::zeros(g.space().clone(), *g.time())?;
    let broken = discrepancy(&zero)?;

    // difference quotient of G, padded with an unweighted final sample
    let dq = forward_difference(g);
    let values: Vec<f64> = dq
        .series_iter()
        .flat_map(|s| s.iter().copied().chain(std::iter::once(0.0)))
        .collect();
    let restored_f = Field::new(g.space().clone(), *g.time(), values)?;
    let restored = discrepancy(&restored_f)?;

    Ok([
        CheckResult::lower_bound(CANTOR, &entry.name, params.clone(), broken, CANTOR_THRESHOLD, 0.0),
        CheckResult::identity(CANTOR_RESTORED, &entry.name, params, restored, 0.0, IDENTITY_RTOL),
    ])
}

/// Prefix-sum kernel against direct per-window summation.
pub fn check_kernel(field: &Field, name: &str, params: &SteklovParams) -> Result<CheckResult> {
    let fast = steklov_average(field, params)?;
    let slow = naive_average(field, params)?;
    let measured = max_series_gap(&fast, &slow, fast.n_time());
    Ok(CheckResult::identity(
        KERNEL,
        name,
        window_params(field, params),
        measured,
        0.0,
        IDENTITY_RTOL * field.max_abs(),
    ))
}
