//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines always show in `cargo test` output.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};

use serde_json::Value;
use steklov::corpus::default_time;
use steklov::suite::{run_suite, RunOutput, SuiteConfig, RANDOM_FIELDS};
use steklov::verify::{self, CheckResult};

const SEED: u64 = 42;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn rows<'a>(out: &'a RunOutput, id: &str) -> Vec<&'a CheckResult> {
    out.results.iter().filter(|r| r.check_id == id).collect()
}

fn param_set(rows: &[&CheckResult], key: &str) -> BTreeSet<String> {
    rows.iter()
        .filter_map(|r| r.param(key))
        .map(|v| format!("{v}"))
        .collect()
}

/// Every row passed and the expected number ran.
fn all_pass(rows: &[&CheckResult], expected: usize) -> Verdict {
    let failed = rows.iter().filter(|r| !r.passed).count();
    verdict(
        failed == 0 && rows.len() == expected,
        format!("{} checks (expected {expected}), {failed} failed", rows.len()),
    )
}

fn suite_size(out: &RunOutput) -> usize {
    out.results
        .iter()
        .filter(|r| r.check_id == verify::TIME_DERIVATIVE)
        .map(|r| r.field_name.clone())
        .collect::<BTreeSet<_>>()
        .len()
}

fn inequality_sweep(out: &RunOutput, id: &str, entries: usize) -> Verdict {
    let rows = rows(out, id);
    let dt = default_time().dt;
    let hs = param_set(&rows, "h");
    let want: BTreeSet<String> = [1.0, 8.0, 64.0].iter().map(|k| format!("{}", k * dt)).collect();
    let worst = rows
        .iter()
        .map(|r| r.margin / r.bound_or_target.max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    let base = all_pass(&rows, (entries + RANDOM_FIELDS) * 9 * 3);
    verdict(
        base.passed && hs == want && param_set(&rows, "q").len() == 3 && param_set(&rows, "r").len() == 3,
        format!("{}, worst relative margin {worst:e}", base.detail),
    )
}

fn criterion_uniform(out: &RunOutput) -> Verdict {
    let dt = default_time().dt;
    let smooth = ["linear_t", "sin_gauss", "sin_gauss_2d"];
    let studies: Vec<_> = out
        .studies
        .iter()
        .filter(|s| s.check_id == verify::UNIFORM_CONVERGENCE)
        .filter(|s| smooth.contains(&s.field_name.as_str()) || s.field_name.starts_with("random_smooth"))
        .collect();
    let mut orders = Vec::new();
    let mut ok = !studies.is_empty();
    for s in &studies {
        let order = s.fitted_order.unwrap_or(f64::NAN);
        orders.push(format!("{}:{order:.3}", s.field_name));
        ok &= (0.9..=1.1).contains(&order)
            && s.steps.len() == 6
            && (s.steps[0] - 64.0 * dt).abs() < 1e-15
            && s.steps.windows(2).all(|w| (w[0] - 2.0 * w[1]).abs() < 1e-15);
    }
    orders.dedup();
    verdict(ok, format!("{} studies, orders {}", studies.len(), orders.join(" ")))
}

fn criterion_lr(out: &RunOutput) -> Verdict {
    let mut detail = Vec::new();
    let mut ok = true;
    for (r, want) in [(1.0, 1.0), (2.0, 0.5)] {
        let study = out.studies.iter().find(|s| {
            s.check_id == verify::LR_CONVERGENCE
                && s.field_name == "step_0.5"
                && s.parameters.get("q") == Some(&1.0)
                && s.parameters.get("r") == Some(&r)
        });
        match study.and_then(|s| s.fitted_order) {
            Some(order) => {
                ok &= (order - want).abs() <= 0.15;
                detail.push(format!("r={r}: {order:.3} (target {want} +- 0.15)"));
            }
            None => {
                ok = false;
                detail.push(format!("r={r}: no study"));
            }
        }
    }
    verdict(ok, detail.join(", "))
}

fn criterion_ae(out: &RunOutput) -> Verdict {
    let studies: Vec<_> = out
        .ae_studies
        .iter()
        .filter(|a| a.field_name == "step_0.5")
        .collect();
    let mut ok = !studies.is_empty();
    let mut detail = String::new();
    for a in &studies {
        let h_max = a.steps[0];
        let inside = a
            .exceptional_times
            .iter()
            .all(|&t| t >= 0.5 - h_max - 1e-12 && t < 0.5);
        ok &= a.passed && inside && a.unexplained == 0;
        detail = format!(
            "{} studies; exceptional {} of {} points, all in [0.5 - {h_max}, 0.5)",
            studies.len(),
            a.exceptional_times.len(),
            a.evaluated_points
        );
    }
    verdict(ok, detail)
}

fn criterion_ftc(out: &RunOutput, entries: usize) -> Verdict {
    let d = all_pass(&rows(out, verify::FTC_DERIVATIVE), entries * 2);
    let i = all_pass(&rows(out, verify::FTC_INTEGRAL), entries * 2);
    verdict(d.passed && i.passed, format!("derivative: {}; integral: {}", d.detail, i.detail))
}

fn criterion_ibp(out: &RunOutput) -> Verdict {
    let studies: Vec<_> = out.studies.iter().filter(|s| s.check_id == verify::IBP).collect();
    let mut ok = studies.len() >= 2;
    let mut orders = Vec::new();
    for s in &studies {
        if let Some(order) = s.fitted_order {
            ok &= (order - 1.0).abs() <= 0.2 && s.steps.len() == 6;
            orders.push(format!("{}:{order:.3}", s.field_name));
        } else {
            ok &= s.errors.iter().all(|e| *e == 0.0);
        }
    }
    let abel = rows(out, verify::ABEL_IDENTITY);
    let abel_ok = !abel.is_empty() && abel.iter().all(|r| r.passed && r.measured <= r.tolerance);
    verdict(
        ok && abel_ok,
        format!("orders {}; Abel identity {} levels", orders.join(" "), abel.len()),
    )
}

fn criterion_cantor(out: &RunOutput) -> Verdict {
    let broken = rows(out, verify::CANTOR);
    let restored = rows(out, verify::CANTOR_RESTORED);
    let levels = param_set(&broken, "level");
    let ok = broken.len() == 8
        && levels.len() == 8
        && broken.iter().all(|r| (r.measured - 1.0).abs() <= 1e-12 && r.passed)
        && restored.len() == 8
        && restored.iter().all(|r| r.measured.abs() <= 1e-12);
    let lo = broken.iter().map(|r| r.measured).fold(f64::INFINITY, f64::min);
    let hi = broken.iter().map(|r| r.measured).fold(f64::NEG_INFINITY, f64::max);
    let worst = restored.iter().map(|r| r.measured).fold(0.0, f64::max);
    verdict(
        ok,
        format!("levels {levels:?}: discrepancy in [{lo}, {hi}]; restored worst {worst:e}"),
    )
}

fn without_timing(text: &[u8]) -> Option<String> {
    let mut v: Value = serde_json::from_slice(text).ok()?;
    for r in v["results"].as_array_mut()? {
        r["runtime_ms"] = Value::Null;
    }
    serde_json::to_string(&v).ok()
}

fn criterion_reproducible() -> Verdict {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return verdict(false, format!("no temp dir: {e}")),
    };
    let mut texts = Vec::new();
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let path = dir.path().join(format!("r{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_steklov"))
            .args(["verify-all", "--seed", &SEED.to_string(), "--jobs", jobs, "--report"])
            .arg(&path)
            .output();
        match status {
            Ok(o) if o.status.success() => {}
            Ok(o) => return verdict(false, format!("verify-all exited with {:?}", o.status.code())),
            Err(e) => return verdict(false, format!("cannot run binary: {e}")),
        }
        texts.push(std::fs::read(&path).ok().and_then(|t| without_timing(&t)));
    }
    let same = texts.iter().all(|t| t.is_some() && *t == texts[0]);
    verdict(same, "verify-all --seed 42 at --jobs 1, 4, 4: identical modulo runtime_ms")
}

fn main() -> ExitCode {
    let cfg = SuiteConfig {
        seed: SEED,
        ..SuiteConfig::default()
    };
    let out = match run_suite(&cfg) {
        Ok(out) => out,
        Err(e) => {
            println!("FAIL harness did not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let entries = suite_size(&out);
    let criteria: Vec<Criterion> = vec![
        ("contraction", Box::new(|| inequality_sweep(&out, verify::CONTRACTION, entries))),
        ("pointwise bound", Box::new(|| inequality_sweep(&out, verify::POINTWISE_BOUND, entries))),
        ("Lipschitz", Box::new(|| all_pass(&rows(&out, verify::LIPSCHITZ), entries * 9))),
        ("time-derivative identity", Box::new(|| all_pass(&rows(&out, verify::TIME_DERIVATIVE), entries * 3))),
        ("commutation", Box::new(|| {
            // one extra axis for the 2-D entry
            all_pass(&rows(&out, verify::COMMUTATION), (entries + 1) * 3)
        })),
        ("kernel oracle", Box::new(|| {
            let rows = rows(&out, verify::KERNEL);
            let fields = rows.iter().map(|r| &r.field_name).collect::<BTreeSet<_>>().len();
            let ks = param_set(&rows, "k");
            let n = default_time().n;
            let base = all_pass(&rows, RANDOM_FIELDS * 5);
            let covers = ["1", "2", &(n - 1).to_string()].iter().all(|k| ks.contains(*k));
            verdict(base.passed && fields == RANDOM_FIELDS && covers, format!("{}, {fields} fields, k in {ks:?}", base.detail))
        })),
        ("uniform convergence", Box::new(|| criterion_uniform(&out))),
        ("L^r convergence", Box::new(|| criterion_lr(&out))),
        ("a.e. convergence", Box::new(|| criterion_ae(&out))),
        ("FTC", Box::new(|| criterion_ftc(&out, entries))),
        ("integration by parts", Box::new(|| criterion_ibp(&out))),
        ("Cantor counterexample", Box::new(|| criterion_cantor(&out))),
        ("reproducibility", Box::new(criterion_reproducible)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
