//! Job planning and parallel execution of the verification harness.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::corpus::{
    default_space, default_time, entry_constant, entry_linear_t, entry_random_smooth,
    entry_sin_gauss, noise_field, random_entries, standard_suite, CorpusEntry,
    SUITE_RANDOM_SEED,
};
use crate::error::{Error, Result};
use crate::field::{Field, SpaceSlice, TimeGrid};
use crate::norms::{BochnerSpec, Exponent};
use crate::steklov::SteklovParams;
use crate::verify::{
    check_ae_convergence, check_commutation, check_contraction, check_ftc, check_ibp,
    check_kernel, check_lipschitz, check_lr_convergence, check_pointwise_bound,
    check_pointwise_values, check_time_derivative, check_uniform_convergence, demo_cantor,
    AeStudy, CheckResult, ConvergenceStudy, StudyConfig,
};

/// Number of seeded random fields in the inequality sweep and the kernel
/// oracle.
pub const RANDOM_FIELDS: usize = 100;
/// Window multiples of `dt` used by the field-level checks.
pub const WINDOW_STEPS: [usize; 3] = [1, 8, 64];
/// Highest Cantor level exercised.
pub const CANTOR_LEVELS: u32 = 8;
/// Refinement levels of the integration-by-parts study.
pub const IBP_HALVINGS: usize = 5;

/// Groups of checks selectable with `--lemma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lemma {
    /// Lipschitz bound and uniform convergence.
    L2_2,
    /// Pointwise bound of the average.
    L2_4a,
    /// Contraction in Bochner norm.
    L2_4d,
    /// Convergence in `L^r(I, L^q)`.
    L2_5,
    /// Convergence at almost every time.
    L2_6,
    /// Pointwise evaluation of the average.
    L3_1,
    /// Commutation with spatial derivatives.
    L4_1,
    /// Time derivative of the average.
    L4_2,
    /// Fundamental theorem of calculus.
    L5_1,
    /// Integration by parts.
    L5_3,
    /// The Cantor counterexample.
    Cantor,
    /// Prefix-sum kernel against naive summation.
    Kernel,
}

impl Lemma {
    pub const ALL: [Lemma; 12] = [
        Lemma::L2_2,
        Lemma::L2_4a,
        Lemma::L2_4d,
        Lemma::L2_5,
        Lemma::L2_6,
        Lemma::L3_1,
        Lemma::L4_1,
        Lemma::L4_2,
        Lemma::L5_1,
        Lemma::L5_3,
        Lemma::Cantor,
        Lemma::Kernel,
    ];

    /// Parses one `--lemma` id; some ids select several groups.
    pub fn parse_id(id: &str) -> Result<Vec<Lemma>> {
        let groups = match id.trim().to_ascii_lowercase().as_str() {
            "2.2" => vec![Lemma::L2_2],
            "2.4" => vec![Lemma::L2_4a, Lemma::L2_4d],
            "2.4a" => vec![Lemma::L2_4a],
            "2.4c" | "2.4d" => vec![Lemma::L2_4d],
            "2.5" => vec![Lemma::L2_5],
            "2.6" => vec![Lemma::L2_6],
            "3.1" => vec![Lemma::L3_1],
            "4.1" => vec![Lemma::L4_1],
            "4.2" | "4.3" => vec![Lemma::L4_2],
            "5.1" | "5.2" => vec![Lemma::L5_1],
            "5.3" | "5.4" => vec![Lemma::L5_3],
            "cantor" | "5.2-remark" => vec![Lemma::Cantor],
            "kernel" => vec![Lemma::Kernel],
            "all" => Lemma::ALL.to_vec(),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown lemma id '{other}' (expected one of 2.2, 2.4, 2.4a, 2.4d, 2.5, \
                     2.6, 3.1, 4.1, 4.2, 4.3, 5.1, 5.2, 5.3, 5.4, cantor, kernel, all)"
                )))
            }
        };
        Ok(groups)
    }

    /// Groups that only need a sampled field, as opposed to an analytic
    /// corpus entry.
    pub fn is_field_level(self) -> bool {
        matches!(
            self,
            Lemma::L2_2
                | Lemma::L2_4a
                | Lemma::L2_4d
                | Lemma::L3_1
                | Lemma::L4_1
                | Lemma::L4_2
                | Lemma::L5_1
                | Lemma::Kernel
        )
    }

    /// Groups that are convergence studies.
    pub fn is_study(self) -> bool {
        matches!(self, Lemma::L2_2 | Lemma::L2_5 | Lemma::L2_6 | Lemma::L5_3)
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Lemma::L2_2 => "2.2",
            Lemma::L2_4a => "2.4a",
            Lemma::L2_4d => "2.4d",
            Lemma::L2_5 => "2.5",
            Lemma::L2_6 => "2.6",
            Lemma::L3_1 => "3.1",
            Lemma::L4_1 => "4.1",
            Lemma::L4_2 => "4.2",
            Lemma::L5_1 => "5.1",
            Lemma::L5_3 => "5.3",
            Lemma::Cantor => "cantor",
            Lemma::Kernel => "kernel",
        };
        f.write_str(s)
    }
}

impl FromStr for Lemma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match Lemma::parse_id(s)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::InvalidParameter(format!("'{s}' names several groups"))),
        }
    }
}

/// Which parts of the harness to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Field-level checks and convergence studies.
    Everything,
    /// Convergence studies only.
    Studies,
}

/// Everything the runner needs to plan its jobs.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// `None` selects every group.
    pub lemmas: Option<BTreeSet<Lemma>>,
    pub scope: Scope,
    /// Overrides the window list of field-level checks.
    pub h: Option<f64>,
    /// Restricts the spatial exponent sweep.
    pub q: Option<Exponent>,
    /// Restricts the temporal exponent sweep.
    pub r: Option<Exponent>,
    /// Replaces the default time grid of the corpus.
    pub time: Option<TimeGrid>,
    pub random_fields: usize,
    pub study: StudyConfig,
    /// Worker threads; 0 picks the number of cores.
    pub jobs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: SUITE_RANDOM_SEED,
            lemmas: None,
            scope: Scope::Everything,
            h: None,
            q: None,
            r: None,
            time: None,
            random_fields: RANDOM_FIELDS,
            study: StudyConfig::default(),
            jobs: 0,
        }
    }
}

impl SuiteConfig {
    fn wants(&self, lemma: Lemma) -> bool {
        self.lemmas.as_ref().is_none_or(|set| set.contains(&lemma))
    }

    fn exponents(over: Option<Exponent>) -> Vec<Exponent> {
        match over {
            Some(e) => vec![e],
            None => vec![Exponent::ONE, Exponent::TWO, Exponent::INF],
        }
    }

    fn qs(&self) -> Vec<Exponent> {
        Self::exponents(self.q)
    }

    fn rs(&self) -> Vec<Exponent> {
        Self::exponents(self.r)
    }

    fn specs(&self) -> Vec<BochnerSpec> {
        let mut out = Vec::new();
        for q in self.qs() {
            for r in self.rs() {
                out.push(BochnerSpec { q, r });
            }
        }
        out
    }

    /// Windows for a field on `time`.
    fn windows(&self, time: &TimeGrid) -> Result<Vec<SteklovParams>> {
        match self.h {
            Some(h) => Ok(vec![SteklovParams::from_window(h, time)?]),
            None => WINDOW_STEPS
                .iter()
                .filter(|&&k| k < time.n)
                .map(|&k| SteklovParams::from_steps(k, time.dt))
                .collect(),
        }
    }
}

/// What one job produced.
#[derive(Debug, Clone)]
enum Outcome {
    Checks(Vec<CheckResult>),
    /// A study with its summary row first, then any companion checks.
    Study(ConvergenceStudy, Vec<CheckResult>),
    Ae(AeStudy, CheckResult),
}

impl Outcome {
    fn study(study: ConvergenceStudy, extra: Vec<CheckResult>) -> Self {
        let mut rows = vec![study.summary()];
        rows.extend(extra);
        Outcome::Study(study, rows)
    }

    fn ae(study: AeStudy) -> Self {
        let row = study.summary();
        Outcome::Ae(study, row)
    }
}

type JobFn = Box<dyn Fn() -> Result<Outcome> + Send + Sync>;

/// Results of a run in deterministic job order. `results` holds every
/// field-level check plus one summary row per study.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub results: Vec<CheckResult>,
    pub studies: Vec<ConvergenceStudy>,
    pub ae_studies: Vec<AeStudy>,
}

impl RunOutput {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

type NamedField = Arc<(String, Field)>;

fn named(entry: &CorpusEntry) -> NamedField {
    Arc::new((entry.name.clone(), entry.field.clone()))
}

/// The standard suite, resampled in time when a grid override is given.
pub fn suite_entries(time: Option<TimeGrid>) -> Result<Vec<CorpusEntry>> {
    let suite = standard_suite()?;
    match time {
        None => Ok(suite),
        Some(t) => suite
            .iter()
            .map(|e| e.resampled(e.field.space().clone(), t))
            .collect(),
    }
}

/// Entries of the random sweep, resampled like the suite.
fn sweep_entries(cfg: &SuiteConfig) -> Result<Vec<CorpusEntry>> {
    let entries = random_entries(cfg.seed, cfg.random_fields)?;
    match cfg.time {
        None => Ok(entries),
        Some(t) => entries
            .iter()
            .map(|e| e.resampled(e.field.space().clone(), t))
            .collect(),
    }
}

struct Planner<'a> {
    cfg: &'a SuiteConfig,
    jobs: Vec<JobFn>,
}

impl Planner<'_> {
    fn push<F>(&mut self, f: F)
    where
        F: Fn() -> Result<Outcome> + Send + Sync + 'static,
    {
        self.jobs.push(Box::new(f));
    }

    fn checks<F>(&mut self, f: F)
    where
        F: Fn() -> Result<Vec<CheckResult>> + Send + Sync + 'static,
    {
        self.push(move || f().map(Outcome::Checks));
    }

    /// Inequalities and identities that need only sampled values.
    fn field_checks(&mut self, fields: &[NamedField], sweep: &[NamedField]) -> Result<()> {
        let cfg = self.cfg;
        if cfg.wants(Lemma::L2_4d) || cfg.wants(Lemma::L2_4a) {
            let (contraction, bound) = (cfg.wants(Lemma::L2_4d), cfg.wants(Lemma::L2_4a));
            for nf in fields.iter().chain(sweep) {
                for p in cfg.windows(nf.1.time())? {
                    for spec in cfg.specs() {
                        let nf = Arc::clone(nf);
                        self.checks(move || {
                            let mut out = Vec::with_capacity(2);
                            if contraction {
                                out.push(check_contraction(&nf.1, &nf.0, spec, &p)?);
                            }
                            if bound {
                                out.push(check_pointwise_bound(&nf.1, &nf.0, spec, &p)?);
                            }
                            Ok(out)
                        });
                    }
                }
            }
        }
        for nf in fields {
            let windows = cfg.windows(nf.1.time())?;
            if cfg.wants(Lemma::L2_2) {
                for &p in &windows {
                    for q in cfg.qs() {
                        let nf = Arc::clone(nf);
                        self.checks(move || Ok(vec![check_lipschitz(&nf.1, &nf.0, q, &p)?]));
                    }
                }
            }
            if cfg.wants(Lemma::L3_1) {
                for &p in &windows {
                    let nf = Arc::clone(nf);
                    self.checks(move || Ok(vec![check_pointwise_values(&nf.1, &nf.0, &p)?]));
                }
            }
            if cfg.wants(Lemma::L4_1) {
                for &p in &windows {
                    for axis in 0..nf.1.space().ndim() {
                        let nf = Arc::clone(nf);
                        self.checks(move || {
                            Ok(vec![check_commutation(&nf.1, &nf.0, &p, axis)?])
                        });
                    }
                }
            }
            if cfg.wants(Lemma::L4_2) {
                for &p in &windows {
                    let nf = Arc::clone(nf);
                    self.checks(move || Ok(vec![check_time_derivative(&nf.1, &nf.0, &p)?]));
                }
            }
            if cfg.wants(Lemma::L5_1) {
                let n = nf.1.n_time();
                let mut bases = vec![0, n / 2];
                bases.dedup();
                for base in bases {
                    let nf = Arc::clone(nf);
                    self.checks(move || {
                        let f0: SpaceSlice = nf.1.time_slice(0)?;
                        Ok(check_ftc(&nf.1, &nf.0, &f0, base)?.to_vec())
                    });
                }
            }
        }
        Ok(())
    }

    /// Prefix sums against direct summation on seeded noise.
    fn kernel_checks(&mut self, time: TimeGrid) {
        let cfg = self.cfg;
        if !cfg.wants(Lemma::Kernel) {
            return;
        }
        let mut steps = vec![1, 2, 8, 64, time.n - 1];
        steps.retain(|&k| k >= 1 && k < time.n);
        steps.sort_unstable();
        steps.dedup();
        for i in 0..cfg.random_fields.max(1) {
            let seed = cfg.seed.wrapping_add(i as u64);
            let steps = steps.clone();
            self.checks(move || {
                let field = noise_field(seed, default_space(), time)?;
                let name = format!("noise_{seed}");
                steps
                    .iter()
                    .map(|&k| check_kernel(&field, &name, &SteklovParams::from_steps(k, time.dt)?))
                    .collect()
            });
        }
    }

    fn cantor(&mut self) {
        if !self.cfg.wants(Lemma::Cantor) {
            return;
        }
        for level in 1..=CANTOR_LEVELS {
            self.checks(move || Ok(demo_cantor(level)?.to_vec()));
        }
    }

    fn studies(&mut self, entries: &[Arc<CorpusEntry>]) -> Result<()> {
        let cfg = self.cfg;
        let study_cfg = cfg.study;
        if cfg.wants(Lemma::L2_2) {
            for e in entries.iter().filter(|e| e.class.is_continuous()) {
                for q in cfg.qs() {
                    let e = Arc::clone(e);
                    self.push(move || {
                        Ok(Outcome::study(check_uniform_convergence(&e, q, &study_cfg)?, vec![]))
                    });
                }
            }
        }
        if cfg.wants(Lemma::L2_5) {
            for e in entries {
                for spec in cfg.specs().into_iter().filter(|s| !s.r.is_infinite()) {
                    let e = Arc::clone(e);
                    self.push(move || {
                        Ok(Outcome::study(check_lr_convergence(&e, spec, &study_cfg)?, vec![]))
                    });
                }
            }
        }
        if cfg.wants(Lemma::L2_6) {
            for e in entries {
                for q in cfg.qs() {
                    let e = Arc::clone(e);
                    self.push(move || Ok(Outcome::ae(check_ae_convergence(&e, q, &study_cfg)?)));
                }
            }
        }
        if cfg.wants(Lemma::L5_3) {
            for (f, g) in ibp_pairs()? {
                self.push(move || {
                    let (study, abel) = check_ibp(&f, &g, IBP_HALVINGS)?;
                    Ok(Outcome::study(study, abel))
                });
            }
        }
        Ok(())
    }
}

/// Pairs `(f, g)` of the integration-by-parts study.
pub fn ibp_pairs() -> Result<Vec<(CorpusEntry, CorpusEntry)>> {
    Ok(vec![
        (entry_sin_gauss(2.0 * PI)?, entry_random_smooth(SUITE_RANDOM_SEED, 4)?),
        (entry_random_smooth(SUITE_RANDOM_SEED + 1, 3)?, entry_linear_t()?),
        (entry_constant(1.0)?, entry_constant(1.0)?),
        (entry_constant(0.0)?, entry_constant(0.0)?),
    ])
}

/// The planned jobs over the standard suite.
fn plan(cfg: &SuiteConfig) -> Result<Vec<JobFn>> {
    let mut planner = Planner {
        cfg,
        jobs: Vec::new(),
    };
    let entries: Vec<Arc<CorpusEntry>> =
        suite_entries(cfg.time)?.into_iter().map(Arc::new).collect();
    if cfg.scope != Scope::Studies {
        let fields: Vec<NamedField> = entries.iter().map(|e| named(e)).collect();
        let sweep: Vec<NamedField> = if cfg.wants(Lemma::L2_4a) || cfg.wants(Lemma::L2_4d) {
            sweep_entries(cfg)?.iter().map(named).collect()
        } else {
            Vec::new()
        };
        planner.field_checks(&fields, &sweep)?;
        planner.kernel_checks(cfg.time.unwrap_or_else(default_time));
        planner.cantor();
    }
    planner.studies(&entries)?;
    Ok(planner.jobs)
}

/// Field-level checks on one user-supplied field.
fn plan_for_field(cfg: &SuiteConfig, name: &str, field: Field) -> Result<Vec<JobFn>> {
    let mut planner = Planner {
        cfg,
        jobs: Vec::new(),
    };
    let nf: NamedField = Arc::new((name.to_string(), field));
    planner.field_checks(std::slice::from_ref(&nf), &[])?;
    if cfg.wants(Lemma::Kernel) {
        for p in cfg.windows(nf.1.time())? {
            let nf = Arc::clone(&nf);
            planner.checks(move || Ok(vec![check_kernel(&nf.1, &nf.0, &p)?]));
        }
    }
    Ok(planner.jobs)
}

fn execute(jobs: Vec<JobFn>, threads: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let start = Instant::now();
                let mut outcome = job()?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                match &mut outcome {
                    Outcome::Checks(rs) | Outcome::Study(_, rs) => {
                        rs.iter_mut().for_each(|r| r.runtime_ms = ms)
                    }
                    Outcome::Ae(_, r) => r.runtime_ms = ms,
                }
                Ok(outcome)
            })
            .collect()
    });
    let mut out = RunOutput::default();
    for outcome in outcomes {
        match outcome? {
            Outcome::Checks(rs) => out.results.extend(rs),
            Outcome::Study(s, rs) => {
                out.results.extend(rs);
                out.studies.push(s);
            }
            Outcome::Ae(a, r) => {
                out.results.push(r);
                out.ae_studies.push(a);
            }
        }
    }
    Ok(out)
}

/// Runs the harness over the standard suite.
pub fn run_suite(cfg: &SuiteConfig) -> Result<RunOutput> {
    execute(plan(cfg)?, cfg.jobs)
}

/// Runs the field-level checks on one field.
pub fn run_on_field(cfg: &SuiteConfig, name: &str, field: Field) -> Result<RunOutput> {
    execute(plan_for_field(cfg, name, field)?, cfg.jobs)
}
