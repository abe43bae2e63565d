//! Analytic test fields with closed-form Steklov averages and norms.
//!
//! Every entry keeps its generating function so it can be resampled on a
//! finer grid for convergence studies.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpaceGrid, TimeGrid};
use crate::norms::{BochnerSpec, Exponent};
use crate::steklov::{ih_domain, SteklovParams};

/// Time samples of the default grid on `[0, 1]`.
pub const DEFAULT_TIME_POINTS: usize = 257;
/// Spatial samples of the default 1-D grid on `[0, 1]`.
pub const DEFAULT_SPACE_POINTS: usize = 65;
/// Points per axis of the 2-D smoke-test entry.
pub const SMOKE_2D_POINTS: usize = 17;
/// Highest supported Cantor approximation level.
pub const MAX_CANTOR_LEVEL: u32 = 12;
/// Seed of the random-smooth entry in [`standard_suite`].
pub const SUITE_RANDOM_SEED: u64 = 20_240;

const PROFILE_CENTER: f64 = 0.5;
const PROFILE_WIDTH: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothnessClass {
    Constant,
    Polynomial,
    SmoothPeriodic,
    Step,
    Cantor,
    RandomSmooth,
}

impl SmoothnessClass {
    /// Classes whose averages converge at first order in `h`.
    pub fn is_smooth(self) -> bool {
        matches!(
            self,
            SmoothnessClass::Polynomial | SmoothnessClass::SmoothPeriodic | SmoothnessClass::RandomSmooth
        )
    }

    pub fn is_continuous(self) -> bool {
        !matches!(self, SmoothnessClass::Step)
    }
}

impl fmt::Display for SmoothnessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SmoothnessClass::Constant => "constant",
            SmoothnessClass::Polynomial => "polynomial",
            SmoothnessClass::SmoothPeriodic => "smooth-periodic",
            SmoothnessClass::Step => "step",
            SmoothnessClass::Cantor => "cantor",
            SmoothnessClass::RandomSmooth => "random-smooth",
        };
        f.write_str(s)
    }
}

type Sampler = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Closed-form continuous average `(x, t, h) -> v_h(x, t)`.
type AverageOracle = Arc<dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync>;
type BochnerOracle = Arc<dyn Fn(&SpaceGrid, &TimeGrid, BochnerSpec) -> f64 + Send + Sync>;

/// A named analytic field with its ground-truth oracles.
#[derive(Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub class: SmoothnessClass,
    pub field: Field,
    /// Times where `v` jumps.
    pub jumps: Vec<f64>,
    sampler: Sampler,
    average: Option<AverageOracle>,
    bochner: Option<BochnerOracle>,
}

impl fmt::Debug for CorpusEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusEntry")
            .field("name", &self.name)
            .field("class", &self.class)
            .field("space", self.field.space())
            .field("time", self.field.time())
            .field("jumps", &self.jumps)
            .finish_non_exhaustive()
    }
}

impl CorpusEntry {
    fn build(
        name: impl Into<String>,
        class: SmoothnessClass,
        space: SpaceGrid,
        time: TimeGrid,
        sampler: Sampler,
    ) -> Result<Self> {
        let field = Field::from_fn(space, time, |x, t| sampler(x, t))?;
        Ok(CorpusEntry {
            name: name.into(),
            class,
            field,
            jumps: Vec::new(),
            sampler,
            average: None,
            bochner: None,
        })
    }

    fn with_average(mut self, oracle: AverageOracle) -> Self {
        self.average = Some(oracle);
        self
    }

    fn with_bochner(mut self, oracle: BochnerOracle) -> Self {
        self.bochner = Some(oracle);
        self
    }

    /// Evaluates the generating function.
    pub fn sample(&self, x: &[f64], t: f64) -> f64 {
        (self.sampler)(x, t)
    }

    /// The same analytic entry sampled on other grids.
    pub fn resampled(&self, space: SpaceGrid, time: TimeGrid) -> Result<CorpusEntry> {
        let field = Field::from_fn(space, time, |x, t| (self.sampler)(x, t))?;
        Ok(CorpusEntry {
            field,
            ..self.clone()
        })
    }

    /// The entry on its time interval sampled `factor` times more finely.
    pub fn refined(&self, factor: usize) -> Result<CorpusEntry> {
        self.resampled(self.field.space().clone(), self.field.time().refined(factor)?)
    }

    pub fn has_average_oracle(&self) -> bool {
        self.average.is_some()
    }

    /// Closed-form continuous average on `I_h` of the entry's grid.
    pub fn oracle_average(&self, params: &SteklovParams) -> Option<Result<Field>> {
        let oracle = self.average.as_ref()?;
        let h = params.h();
        Some(ih_domain(self.field.time(), params).map(|domain| {
            let space = self.field.space().clone();
            let mut values = Vec::with_capacity(space.len() * domain.n);
            for s in 0..space.len() {
                let x = space.coords(s);
                values.extend(domain.times().map(|t| oracle(&x, t, h)));
            }
            Field::from_parts_unchecked(space, domain, values)
        }))
    }

    /// Closed-form continuous Bochner norm over the entry's grids.
    pub fn oracle_bochner(&self, spec: BochnerSpec) -> Option<f64> {
        let oracle = self.bochner.as_ref()?;
        Some(oracle(self.field.space(), self.field.time(), spec))
    }
}

/// Default 1-D spatial grid, 65 points on `[0, 1]`.
pub fn default_space() -> SpaceGrid {
    SpaceGrid::line(0.0, 1.0, DEFAULT_SPACE_POINTS).expect("valid default grid")
}

/// Default time grid, 257 points on `[0, 1]` (`dt = 1/256`).
pub fn default_time() -> TimeGrid {
    TimeGrid::spanning(0.0, 1.0, DEFAULT_TIME_POINTS).expect("valid default grid")
}

fn gaussian(x: &[f64], center: f64, width: f64) -> f64 {
    let r2: f64 = x.iter().map(|xi| (xi - center).powi(2)).sum();
    (-r2 / (2.0 * width * width)).exp()
}

/// `v = c`.
pub fn entry_constant(c: f64) -> Result<CorpusEntry> {
    entry_constant_on(c, default_space(), default_time())
}

pub fn entry_constant_on(c: f64, space: SpaceGrid, time: TimeGrid) -> Result<CorpusEntry> {
    if !c.is_finite() {
        return Err(Error::InvalidParameter(format!("constant must be finite, got {c}")));
    }
    Ok(CorpusEntry::build(
        format!("constant_{c}"),
        SmoothnessClass::Constant,
        space,
        time,
        Arc::new(move |_, _| c),
    )?
    .with_average(Arc::new(move |_, _, _| c))
    .with_bochner(Arc::new(move |space, time, spec| {
        c.abs() * space.measure().powf(spec.q.reciprocal()) * time.length().powf(spec.r.reciprocal())
    })))
}

/// Discrete left-Riemann average of `v = t`: `t + (h - dt)/2`.
pub fn linear_discrete_average(t: f64, h: f64, dt: f64) -> f64 {
    t + 0.5 * (h - dt)
}

/// `v = t`. Continuous average `t + h/2`.
pub fn entry_linear_t() -> Result<CorpusEntry> {
    entry_linear_t_on(default_space(), default_time())
}

pub fn entry_linear_t_on(space: SpaceGrid, time: TimeGrid) -> Result<CorpusEntry> {
    if time.t0 < 0.0 {
        return Err(Error::InvalidParameter("linear entry expects t0 >= 0".into()));
    }
    Ok(CorpusEntry::build(
        "linear_t",
        SmoothnessClass::Polynomial,
        space,
        time,
        Arc::new(|_, t| t),
    )?
    .with_average(Arc::new(|_, t, h| t + 0.5 * h))
    .with_bochner(Arc::new(|space, time, spec| {
        let (a, b) = (time.start(), time.end());
        let time_part = match spec.r {
            Exponent::Infinity => b,
            Exponent::Finite(r) => ((b.powf(r + 1.0) - a.powf(r + 1.0)) / (r + 1.0)).powf(1.0 / r),
        };
        space.measure().powf(spec.q.reciprocal()) * time_part
    })))
}

/// Time factor of the average of `sin(omega t)`.
pub fn sin_average_factor(omega: f64, t: f64, h: f64) -> f64 {
    ((omega * t).cos() - (omega * (t + h)).cos()) / (omega * h)
}

fn cos_average_factor(omega: f64, t: f64, h: f64) -> f64 {
    ((omega * (t + h)).sin() - (omega * t).sin()) / (omega * h)
}

/// `v = sin(omega t) G(x)` with a Gaussian profile `G` centred in `[0, 1]`.
pub fn entry_sin_gauss(omega: f64) -> Result<CorpusEntry> {
    entry_sin_gauss_on(omega, default_space(), default_time())
}

pub fn entry_sin_gauss_on(omega: f64, space: SpaceGrid, time: TimeGrid) -> Result<CorpusEntry> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")));
    }
    let name = if space.ndim() == 1 {
        "sin_gauss".to_string()
    } else {
        format!("sin_gauss_{}d", space.ndim())
    };
    Ok(CorpusEntry::build(
        name,
        SmoothnessClass::SmoothPeriodic,
        space,
        time,
        Arc::new(move |x, t| (omega * t).sin() * gaussian(x, PROFILE_CENTER, PROFILE_WIDTH)),
    )?
    .with_average(Arc::new(move |x, t, h| {
        sin_average_factor(omega, t, h) * gaussian(x, PROFILE_CENTER, PROFILE_WIDTH)
    })))
}

/// Two-dimensional smoke-test version of [`entry_sin_gauss`] on a 17x17 grid.
pub fn entry_sin_gauss_2d(omega: f64) -> Result<CorpusEntry> {
    let h = 1.0 / (SMOKE_2D_POINTS - 1) as f64;
    let space = SpaceGrid::new(vec![SMOKE_2D_POINTS; 2], vec![h; 2], vec![0.0; 2])?;
    entry_sin_gauss_on(omega, space, default_time())
}

/// Unit jump `v = 1{t >= t_jump}`, constant in space.
pub fn entry_step(t_jump: f64) -> Result<CorpusEntry> {
    entry_step_on(t_jump, default_space(), default_time())
}

pub fn entry_step_on(t_jump: f64, space: SpaceGrid, time: TimeGrid) -> Result<CorpusEntry> {
    let j = time
        .index_below(t_jump)
        .filter(|&j| (time.time(j) - t_jump).abs() <= 1e-9 * time.dt && j > 0 && j + 1 < time.n)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("jump time {t_jump} must be an interior grid time"))
        })?;
    let jump = time.time(j);
    let mut entry = CorpusEntry::build(
        format!("step_{t_jump}"),
        SmoothnessClass::Step,
        space,
        time,
        Arc::new(move |_, t| if t >= jump - 1e-12 { 1.0 } else { 0.0 }),
    )?
    .with_average(Arc::new(move |_, t, h| {
        if t >= jump {
            1.0
        } else {
            ((t + h - jump) / h).clamp(0.0, 1.0)
        }
    }));
    entry.jumps.push(jump);
    Ok(entry)
}

/// Level-`level` piecewise-linear approximation of the Cantor-Lebesgue
/// function on `[0, 1]`, clamped outside.
pub fn cantor_approx(level: u32, t: f64) -> f64 {
    let mut t = t.clamp(0.0, 1.0);
    let mut scale = 1.0;
    let mut offset = 0.0;
    for _ in 0..level {
        if t < 1.0 / 3.0 {
            t *= 3.0;
        } else if t <= 2.0 / 3.0 {
            return offset + 0.5 * scale;
        } else {
            t = 3.0 * t - 2.0;
            offset += 0.5 * scale;
        }
        scale *= 0.5;
    }
    offset + scale * t
}

/// `v = C_level(t)`, constant in space.
pub fn entry_cantor(level: u32) -> Result<CorpusEntry> {
    entry_cantor_on(level, default_space(), default_time())
}

pub fn entry_cantor_on(level: u32, space: SpaceGrid, time: TimeGrid) -> Result<CorpusEntry> {
    if !(1..=MAX_CANTOR_LEVEL).contains(&level) {
        return Err(Error::InvalidParameter(format!(
            "cantor level must be in 1..={MAX_CANTOR_LEVEL}, got {level}"
        )));
    }
    CorpusEntry::build(
        format!("cantor_{level}"),
        SmoothnessClass::Cantor,
        space,
        time,
        Arc::new(move |_, t| cantor_approx(level, t)),
    )
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    omega: f64,
    cos_coef: f64,
    sin_coef: f64,
    center: f64,
    width: f64,
}

/// Truncated Fourier series in `t` with a Gaussian bump per mode:
/// `sum_m (a_m cos(pi m t) + b_m sin(pi m t)) / m * G_m(x)`, coefficients
/// drawn from a ChaCha8 generator seeded with `seed`.
pub fn entry_random_smooth(seed: u64, modes: usize) -> Result<CorpusEntry> {
    entry_random_smooth_on(seed, modes, default_space(), default_time())
}

pub fn entry_random_smooth_on(
    seed: u64,
    modes: usize,
    space: SpaceGrid,
    time: TimeGrid,
) -> Result<CorpusEntry> {
    if modes == 0 {
        return Err(Error::InvalidParameter("random smooth field needs >= 1 mode".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Arc<Vec<Mode>> = Arc::new(
        (1..=modes)
            .map(|m| Mode {
                omega: PI * m as f64,
                cos_coef: rng.gen_range(-1.0..1.0) / m as f64,
                sin_coef: rng.gen_range(-1.0..1.0) / m as f64,
                center: rng.gen_range(0.25..0.75),
                width: rng.gen_range(0.08..0.2),
            })
            .collect(),
    );
    let sampler_terms = Arc::clone(&terms);
    Ok(CorpusEntry::build(
        format!("random_smooth_{seed}_{modes}"),
        SmoothnessClass::RandomSmooth,
        space,
        time,
        Arc::new(move |x, t| {
            sampler_terms
                .iter()
                .map(|m| {
                    (m.cos_coef * (m.omega * t).cos() + m.sin_coef * (m.omega * t).sin())
                        * gaussian(x, m.center, m.width)
                })
                .sum()
        }),
    )?
    .with_average(Arc::new(move |x, t, h| {
        terms
            .iter()
            .map(|m| {
                (m.cos_coef * cos_average_factor(m.omega, t, h)
                    + m.sin_coef * sin_average_factor(m.omega, t, h))
                    * gaussian(x, m.center, m.width)
            })
            .sum()
    })))
}

/// Independent uniform samples in `[-1, 1]`; not a corpus entry, used to
/// stress the averaging kernel.
pub fn noise_field(seed: u64, space: SpaceGrid, time: TimeGrid) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..space.len() * time.n)
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    Field::new(space, time, values)
}

/// `count` random-smooth entries with seeds `seed, seed + 1, ...` and
/// 1 to 6 modes.
pub fn random_entries(seed: u64, count: usize) -> Result<Vec<CorpusEntry>> {
    (0..count)
        .map(|i| entry_random_smooth(seed.wrapping_add(i as u64), 1 + i % 6))
        .collect()
}

/// The deterministic reference corpus on the default grids: one entry per
/// smoothness class plus a 2-D smoke test.
pub fn standard_suite() -> Result<Vec<CorpusEntry>> {
    Ok(vec![
        entry_constant(3.0)?,
        entry_linear_t()?,
        entry_sin_gauss(2.0 * PI)?,
        entry_step(0.5)?,
        entry_cantor(8)?,
        entry_random_smooth(SUITE_RANDOM_SEED, 4)?,
        entry_sin_gauss_2d(2.0 * PI)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steklov::steklov_average;

    #[test]
    fn constant_oracle() {
        let e = entry_constant(3.0).unwrap();
        for k in [1, 7, 64] {
            let p = SteklovParams::from_steps(k, e.field.time().dt).unwrap();
            let o = e.oracle_average(&p).unwrap().unwrap();
            assert!(o.values().iter().all(|&v| v == 3.0));
        }
    }

    #[test]
    fn linear_oracles() {
        let time = TimeGrid::new(0.0, 0.1, 11).unwrap();
        let e = entry_linear_t_on(SpaceGrid::point(), time).unwrap();
        let p = SteklovParams::from_steps(4, 0.1).unwrap();
        let o = e.oracle_average(&p).unwrap().unwrap();
        assert!((o.value(0, 0) - 0.2).abs() < 1e-15);
        assert!((linear_discrete_average(0.0, p.h(), 0.1) - 0.15).abs() < 1e-15);
        let avg = steklov_average(&e.field, &p).unwrap();
        assert!((avg.value(0, 0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn sin_factor() {
        let f = sin_average_factor(2.0 * PI, 0.0, 0.25);
        assert!((f - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn cantor_values() {
        for level in 1..=MAX_CANTOR_LEVEL {
            assert_eq!(cantor_approx(level, 0.0), 0.0);
            assert_eq!(cantor_approx(level, 1.0), 1.0);
            assert_eq!(cantor_approx(level, 0.5), 0.5);
        }
        assert_eq!(cantor_approx(2, 1.0 / 9.0), 0.25);
        assert_eq!(cantor_approx(2, 0.8), 0.75);
        // monotone
        let xs: Vec<f64> = (0..=1000).map(|i| cantor_approx(6, i as f64 / 1000.0)).collect();
        assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        assert!(entry_cantor(0).is_err());
        assert!(entry_cantor(13).is_err());
    }

    #[test]
    fn step_validation() {
        assert!(entry_step(0.5).is_ok());
        assert!(entry_step(0.501).is_err());
        assert!(entry_step(0.0).is_err());
        assert!(entry_step(2.0).is_err());
        let e = entry_step(0.5).unwrap();
        assert_eq!(e.jumps, vec![0.5]);
        assert_eq!(e.field.value(0, 127), 0.0);
        assert_eq!(e.field.value(0, 128), 1.0);
    }

    #[test]
    fn suite_covers_classes_deterministically() {
        let a = standard_suite().unwrap();
        let b = standard_suite().unwrap();
        assert!(a.len() >= 6);
        for class in [
            SmoothnessClass::Constant,
            SmoothnessClass::Polynomial,
            SmoothnessClass::SmoothPeriodic,
            SmoothnessClass::Step,
            SmoothnessClass::Cantor,
            SmoothnessClass::RandomSmooth,
        ] {
            assert!(a.iter().any(|e| e.class == class), "missing {class}");
        }
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.field, y.field);
            assert!(Field::new(x.field.space().clone(), *x.field.time(), x.field.values().to_vec())
                .is_ok());
        }
        assert!(a.iter().any(|e| e.field.space().ndim() == 2));
    }

    #[test]
    fn random_smooth_requires_modes() {
        assert!(entry_random_smooth(1, 0).is_err());
        let a = entry_random_smooth(9, 3).unwrap();
        let b = entry_random_smooth(9, 3).unwrap();
        let c = entry_random_smooth(10, 3).unwrap();
        assert_eq!(a.field, b.field);
        assert_ne!(a.field, c.field);
    }

    #[test]
    fn refinement_resamples_same_function() {
        let e = entry_sin_gauss(2.0 * PI).unwrap();
        let r = e.refined(4).unwrap();
        assert_eq!(r.field.n_time(), 4 * 256 + 1);
        for j in 0..e.field.n_time() {
            assert_eq!(e.field.value(10, j), r.field.value(10, 4 * j));
        }
    }

    #[test]
    fn bochner_oracles() {
        let space = SpaceGrid::new(vec![4], vec![0.25], vec![0.0]).unwrap();
        let time = TimeGrid::spanning(0.0, 1.0, 5).unwrap();
        let c = entry_constant_on(-2.0, space.clone(), time).unwrap();
        let spec = BochnerSpec::new(Exponent::TWO, Exponent::TWO).unwrap();
        assert!((c.oracle_bochner(spec).unwrap() - 2.0).abs() < 1e-15);
        let l = entry_linear_t_on(space, time).unwrap();
        let spec = BochnerSpec::new(Exponent::ONE, Exponent::ONE).unwrap();
        assert!((l.oracle_bochner(spec).unwrap() - 0.5).abs() < 1e-15);
        assert!(entry_step(0.5).unwrap().oracle_bochner(spec).is_none());
    }
}
