//! Command-line front end.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::SUITE_RANDOM_SEED;
use crate::error::{Error, Result};
use crate::field::TimeGrid;
use crate::io::{read_named_field, write_named_field};
use crate::norms::Exponent;
use crate::report::{write_report, Report, ReportFormat};
use crate::steklov::{steklov_average, steklov_average_extended, SteklovParams};
use crate::suite::{run_on_field, run_suite, suite_entries, Lemma, RunOutput, Scope, SuiteConfig};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_INVALID_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// Run every check and convergence study on the standard corpus.
    VerifyAll,
    /// Run selected checks, on the corpus or on one field file (--in).
    Verify,
    /// Apply the Steklov average to a field file.
    Average,
    /// Run the convergence studies only.
    ConvergeStudy,
    /// Write the standard corpus as field files into a directory (--out).
    GenCorpus,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::VerifyAll => "verify-all",
            CommandKind::Verify => "verify",
            CommandKind::Average => "average",
            CommandKind::ConvergeStudy => "converge-study",
            CommandKind::GenCorpus => "gen-corpus",
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "steklov", version, about = "Steklov time averages and their verification harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<CommandKind>,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Where to write the report. Without it only the summary is printed.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true)]
    pub format: Option<ReportFormat>,
    /// Comma-separated check groups, e.g. 2.4,4.1,kernel.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lemma: Vec<String>,
    /// Averaging window, a positive multiple of dt.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Spatial exponent, a real >= 1 or inf.
    #[arg(long, global = true)]
    pub q: Option<Exponent>,
    /// Temporal exponent, a real >= 1 or inf.
    #[arg(long, global = true)]
    pub r: Option<Exponent>,
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Time step of the corpus grid on [0, 1].
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// `average`: use zero extension and keep all time points.
    #[arg(long, global = true)]
    pub extended: bool,
}

/// A run's settings, as read from a config file or assembled from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub lemma_ids: Option<Vec<String>>,
    pub field_in: Option<PathBuf>,
    pub field_out: Option<PathBuf>,
    pub h: Option<f64>,
    pub q: Option<Exponent>,
    pub r: Option<Exponent>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub report_path: Option<PathBuf>,
    pub format: Option<ReportFormat>,
    pub jobs: Option<usize>,
    pub extended: Option<bool>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }

    fn from_cli(cli: Cli) -> Self {
        let f = cli.flags;
        RunConfig {
            command: cli.command,
            lemma_ids: (!f.lemma.is_empty()).then_some(f.lemma),
            field_in: f.input,
            field_out: f.out,
            h: f.h,
            q: f.q,
            r: f.r,
            dt: f.dt,
            seed: f.seed,
            report_path: f.report,
            format: f.format,
            jobs: f.jobs,
            extended: f.extended.then_some(true),
        }
    }

    /// Fields set in `over` replace those of `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            command: over.command.or(self.command),
            lemma_ids: over.lemma_ids.or(self.lemma_ids),
            field_in: over.field_in.or(self.field_in),
            field_out: over.field_out.or(self.field_out),
            h: over.h.or(self.h),
            q: over.q.or(self.q),
            r: over.r.or(self.r),
            dt: over.dt.or(self.dt),
            seed: over.seed.or(self.seed),
            report_path: over.report_path.or(self.report_path),
            format: over.format.or(self.format),
            jobs: over.jobs.or(self.jobs),
            extended: over.extended.or(self.extended),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(SUITE_RANDOM_SEED)
    }

    fn lemmas(&self) -> Result<Option<BTreeSet<Lemma>>> {
        let Some(ids) = &self.lemma_ids else {
            return Ok(None);
        };
        let mut set = BTreeSet::new();
        for id in ids {
            set.extend(Lemma::parse_id(id)?);
        }
        Ok(Some(set))
    }

    fn time_grid(&self) -> Result<Option<TimeGrid>> {
        let Some(dt) = self.dt else {
            return Ok(None);
        };
        if !(dt.is_finite() && dt > 0.0 && dt < 1.0) {
            return Err(Error::InvalidParameter(format!("--dt must lie in (0, 1), got {dt}")));
        }
        let cells = (1.0 / dt).round();
        if (cells * dt - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "--dt {dt} does not divide [0, 1] into whole steps"
            )));
        }
        Ok(Some(TimeGrid::spanning(0.0, 1.0, cells as usize + 1)?))
    }

    fn suite_config(&self, scope: Scope) -> Result<SuiteConfig> {
        if let Some(h) = self.h {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidParameter(format!("--h must be positive, got {h}")));
            }
        }
        Ok(SuiteConfig {
            seed: self.seed(),
            lemmas: self.lemmas()?,
            scope,
            h: self.h,
            q: self.q,
            r: self.r,
            time: self.time_grid()?,
            jobs: self.jobs.unwrap_or(0),
            ..SuiteConfig::default()
        })
    }

    fn require<'a, T>(value: &'a Option<T>, what: &str, command: CommandKind) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("{command} needs {what}")))
    }
}

/// Exit status of a failed run.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Manifest { .. } => EXIT_IO,
        _ => EXIT_INVALID_CONFIG,
    }
}

fn print_summary(output: &RunOutput) {
    let mut by_check: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &output.results {
        let e = by_check.entry(&r.check_id).or_default();
        e.1 += 1;
        if r.passed {
            e.0 += 1;
        }
    }
    for (id, (ok, total)) in &by_check {
        let mark = if ok == total { "ok  " } else { "FAIL" };
        println!("{mark} {id:<34} {ok}/{total}");
    }
    for s in &output.studies {
        let order = s
            .fitted_order
            .map_or_else(|| "-".to_string(), |o| format!("{o:.3}"));
        let range = s
            .order_range
            .map_or_else(String::new, |(lo, hi)| format!(" in [{lo:.2}, {hi:.2}]"));
        let mark = if s.passed { "ok  " } else { "FAIL" };
        let params: Vec<String> = s
            .parameters
            .iter()
            .filter(|(k, _)| matches!(k.as_str(), "q" | "r"))
            .map(|(k, v)| format!("{k}={}", crate::verify::real::format(*v)))
            .collect();
        println!(
            "{mark} {} {} {} order {order}{range}",
            s.check_id,
            s.field_name,
            params.join(" ")
        );
    }
    for a in &output.ae_studies {
        let mark = if a.passed { "ok  " } else { "FAIL" };
        println!(
            "{mark} {} {} exceptional {} of {} points, {} unexplained",
            a.check_id,
            a.field_name,
            a.exceptional_times.len(),
            a.evaluated_points,
            a.unexplained
        );
    }
    const SHOWN: usize = 20;
    let failures: Vec<_> = output.failures().collect();
    for r in failures.iter().take(SHOWN) {
        println!(
            "  failed: {} on {} {:?}: measured {:e}, bound {:e}, tolerance {:e}",
            r.check_id, r.field_name, r.parameters, r.measured, r.bound_or_target, r.tolerance
        );
    }
    if failures.len() > SHOWN {
        println!("  ... and {} more failures", failures.len() - SHOWN);
    }
    println!(
        "{} checks, {} failed: {}",
        output.results.len(),
        failures.len(),
        if failures.is_empty() { "PASS" } else { "FAIL" }
    );
}

fn finish(cfg: &RunConfig, output: RunOutput) -> Result<u8> {
    if output.results.is_empty() {
        return Err(Error::InvalidParameter("the selection ran no checks".into()));
    }
    print_summary(&output);
    let passed = output.all_passed();
    if let Some(path) = &cfg.report_path {
        let format = cfg.format.unwrap_or_default();
        write_report(&Report::new(cfg.seed(), output), path, format)?;
        println!("report written to {}", path.display());
    }
    Ok(if passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn average(cfg: &RunConfig, command: CommandKind) -> Result<u8> {
    let input = RunConfig::require(&cfg.field_in, "--in", command)?;
    let output = RunConfig::require(&cfg.field_out, "--out", command)?;
    let h = *RunConfig::require(&cfg.h, "--h", command)?;
    let (name, field) = read_named_field(input)?;
    let params = SteklovParams::from_window(h, field.time())?;
    let extended = cfg.extended.unwrap_or(false);
    let avg = if extended {
        steklov_average_extended(&field, &params)?
    } else {
        steklov_average(&field, &params)?
    };
    write_named_field(&avg, &format!("{name}_h{}", params.steps()), output)?;
    println!(
        "averaged {name} over h = {h} ({} steps, {}): {} time points -> {}",
        params.steps(),
        if extended { "zero-extended" } else { "restricted" },
        avg.n_time(),
        output.display()
    );
    Ok(EXIT_PASS)
}

fn gen_corpus(cfg: &RunConfig, command: CommandKind) -> Result<u8> {
    let dir = RunConfig::require(&cfg.field_out, "--out <directory>", command)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for entry in suite_entries(cfg.time_grid()?)? {
        let path = dir.join(format!("{}.json", entry.name));
        write_named_field(&entry.field, &entry.name, &path)?;
        println!("wrote {} ({})", path.display(), entry.class);
    }
    Ok(EXIT_PASS)
}

fn verify_file(cfg: &RunConfig, input: &Path) -> Result<u8> {
    if cfg.dt.is_some() {
        return Err(Error::InvalidParameter("--dt cannot regrid a field read with --in".into()));
    }
    let mut suite = cfg.suite_config(Scope::Everything)?;
    let lemmas = suite
        .lemmas
        .get_or_insert_with(|| Lemma::ALL.iter().copied().filter(|l| l.is_field_level()).collect());
    if let Some(bad) = lemmas.iter().find(|l| !l.is_field_level()) {
        return Err(Error::InvalidParameter(format!(
            "lemma {bad} needs an analytic corpus entry and cannot run on a field file"
        )));
    }
    let (name, field) = read_named_field(input)?;
    finish(cfg, run_on_field(&suite, &name, field)?)
}

/// Executes a resolved configuration and returns the exit status.
pub fn run(cfg: &RunConfig) -> Result<u8> {
    let command = cfg
        .command
        .ok_or_else(|| Error::InvalidParameter("no command given".into()))?;
    match command {
        CommandKind::VerifyAll => finish(cfg, run_suite(&cfg.suite_config(Scope::Everything)?)?),
        CommandKind::Verify => match &cfg.field_in {
            Some(input) => verify_file(cfg, input),
            None => finish(cfg, run_suite(&cfg.suite_config(Scope::Everything)?)?),
        },
        CommandKind::ConvergeStudy => {
            if cfg.field_in.is_some() {
                return Err(Error::InvalidParameter(
                    "convergence studies resample analytic entries and take no --in".into(),
                ));
            }
            let suite = cfg.suite_config(Scope::Studies)?;
            if let Some(bad) = suite.lemmas.iter().flatten().find(|l| !l.is_study()) {
                return Err(Error::InvalidParameter(format!("lemma {bad} is not a convergence study")));
            }
            finish(cfg, run_suite(&suite)?)
        }
        CommandKind::Average => average(cfg, command),
        CommandKind::GenCorpus => gen_corpus(cfg, command),
    }
}

/// Parses arguments, merges the config file and runs. Returns the exit
/// status; messages go to standard error.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let file = match &cli.flags.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        },
        None => RunConfig::default(),
    };
    let cfg = file.overlay(RunConfig::from_cli(cli));
    match run(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
