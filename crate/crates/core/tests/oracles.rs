//! Discrete averages against closed-form continuous averages.

use std::f64::consts::PI;

use steklov::corpus::{
    entry_constant, entry_linear_t, entry_random_smooth, entry_sin_gauss, entry_step,
    CorpusEntry,
};
use steklov::{steklov_average, SteklovParams};

fn sup_gap(entry: &CorpusEntry, h: f64) -> f64 {
    let p = SteklovParams::from_window(h, entry.field.time()).unwrap();
    let avg = steklov_average(&entry.field, &p).unwrap();
    let exact = entry.oracle_average(&p).unwrap().unwrap();
    avg.values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_average_is_exact() {
    let e = entry_constant(-1.25).unwrap();
    for h in [1.0 / 256.0, 0.125, 0.5] {
        assert_eq!(sup_gap(&e, h), 0.0);
    }
}

#[test]
fn linear_gap_is_half_a_step() {
    // left-Riemann sum of t over a window misses exactly dt / 2
    let e = entry_linear_t().unwrap();
    let dt = e.field.time().dt;
    for h in [8.0 * dt, 64.0 * dt] {
        assert!((sup_gap(&e, h) - dt / 2.0).abs() < 1e-13);
    }
}

#[test]
fn step_average_is_exact_at_grid_times() {
    // piecewise constant with the jump on the grid: left-Riemann is exact
    let e = entry_step(0.5).unwrap();
    for h in [1.0 / 256.0, 0.0625, 0.25] {
        assert!(sup_gap(&e, h) <= 1e-15);
    }
}

#[test]
fn gap_to_continuous_average_is_first_order_in_dt() {
    let entries = [
        entry_sin_gauss(2.0 * PI).unwrap(),
        entry_random_smooth(3, 5).unwrap(),
    ];
    for e in &entries {
        assert!(e.has_average_oracle());
        for h in [0.0625, 0.25] {
            let coarse = sup_gap(e, h);
            let fine = sup_gap(&e.refined(2).unwrap(), h);
            let ratio = coarse / fine;
            assert!(
                (1.7..=2.3).contains(&ratio),
                "{} h={h}: {coarse:e} -> {fine:e}",
                e.name
            );
            // C dt with C bounded by the field's time variation over h
            assert!(coarse <= 2.0 * e.field.time().dt / h.min(1.0) + 1e-12, "{}", e.name);
        }
    }
}
