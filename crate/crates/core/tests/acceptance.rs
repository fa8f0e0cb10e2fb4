//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hnwalk::experiment::{self, RunManifest};
use hnwalk::observables::{
    asymmetry, correlator, density, doublon_density, oscillation_period, spread,
};
use hnwalk::oracle::{bessel_density, DenseOracle};
use hnwalk::qfi::{fisher_from_snapshots, fit_alpha, qfi_series, QfiSeries};
use hnwalk::{
    build_basis, build_hamiltonian, evolve, initial_state, EvolutionSchedule, InitialState,
    LatticeParams, Snapshot,
};
use num_complex::Complex64;
use rand::{rngs::StdRng, Rng, SeedableRng};

const TILT: f64 = 0.26;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let elapsed = start.elapsed();
    (
        elapsed <= limit,
        format!(
            "{:.1}s of {:.0}s",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ),
    )
}

fn final_state(
    params: &LatticeParams,
    start: InitialState,
    schedule: &EvolutionSchedule,
) -> Vec<Snapshot> {
    let basis = build_basis(params).unwrap();
    let h = build_hamiltonian(&basis, params).unwrap();
    let psi0 = initial_state(&basis, start).unwrap();
    evolve(&h, &psi0, schedule).unwrap()
}

fn bessel_match() -> Outcome {
    let clock = Instant::now();
    let params = LatticeParams::new(121, 1);
    let basis = build_basis(&params).unwrap();
    let start = InitialState::center_site(121);
    let snapshots = final_state(
        &params,
        InitialState::SingleCenter,
        &EvolutionSchedule::new(3.0, 4),
    );
    let mut worst: f64 = 0.0;
    for s in &snapshots[1..] {
        let n = density(&s.state.normalized().unwrap(), &basis).unwrap();
        for (k, nk) in n.iter().enumerate() {
            // the oracle stops at |i - i0| = 60; J_61(6)^2 is below 1e-100
            let exact = if (k + 1).abs_diff(start) <= 60 {
                bessel_density(k + 1, start, s.t).unwrap()
            } else {
                0.0
            };
            worst = worst.max((nk - exact).abs());
        }
    }
    let (fast, time) = within(clock, Duration::from_secs(5));
    outcome(
        worst < 1e-6 && fast,
        format!("max |n - J^2| = {worst:.2e} over t=1,2,3; {time}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let clock = Instant::now();
    let mut rng = StdRng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let params = LatticeParams::new(8, 2)
            .with_delta(rng.random_range(-0.2..=0.2))
            .with_interaction(rng.random_range(0.0..=10.0))
            .with_tilt(rng.random_range(0.0..=0.5));
        let basis = build_basis(&params).unwrap();
        let h = build_hamiltonian(&basis, &params).unwrap();
        let psi0 = initial_state(&basis, InitialState::Neighboring).unwrap();
        let stepped = evolve(&h, &psi0, &EvolutionSchedule::new(5.0, 2)).unwrap();
        let stepped = stepped[1].state.normalized().unwrap();
        let dense = DenseOracle::new(&h)
            .unwrap()
            .expm_apply(&psi0, 5.0)
            .unwrap()
            .normalized()
            .unwrap();
        for (a, b) in stepped.amplitudes().iter().zip(dense.amplitudes()) {
            worst = worst.max((a - b).norm());
        }
    }
    let (fast, time) = within(clock, Duration::from_secs(30));
    outcome(
        worst < 1e-8 && fast,
        format!("max amplitude error {worst:.2e} over 20 draws; {time}"),
    )
}

fn all_presets() -> Vec<RunManifest> {
    let root = tempfile::tempdir().unwrap();
    experiment::preset_names()
        .iter()
        .map(|name| {
            let mut config = experiment::preset(name).unwrap();
            config.output_dir = Some(root.path().join(name));
            experiment::run(&config).unwrap()
        })
        .collect()
}

fn hermitian_unitarity(manifests: &[RunManifest]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for m in manifests {
        for p in m.points.iter().filter(|p| p.params.delta == 0.0) {
            worst = worst.max(p.diagnostics.max_norm_deviation);
            runs += 1;
        }
    }
    outcome(
        worst < 1e-8,
        format!("max |<psi|psi> - 1| = {worst:.2e} over {runs} delta=0 runs"),
    )
}

fn sum_rules(manifests: &[RunManifest]) -> Outcome {
    let (mut dens, mut gsum, mut gsym) = (0.0f64, 0.0f64, 0.0f64);
    let mut snapshots = 0;
    for p in manifests.iter().flat_map(|m| &m.points) {
        let d = &p.diagnostics;
        dens = dens.max(d.max_density_sum_error);
        gsum = gsum.max(d.max_gamma_sum_error.unwrap_or(0.0));
        gsym = gsym.max(d.max_gamma_asymmetry.unwrap_or(0.0));
        snapshots += d.snapshots;
    }
    outcome(
        dens < 1e-9 && gsum < 1e-9 && gsym <= 1e-12,
        format!("over {snapshots} snapshots: density {dens:.1e}, gamma sum {gsum:.1e}, gamma asymmetry {gsym:.1e}"),
    )
}

fn bloch_period() -> Outcome {
    let clock = Instant::now();
    let params = LatticeParams::new(70, 1).with_tilt(TILT);
    let basis = build_basis(&params).unwrap();
    let tb = params.bloch_period();
    let schedule = EvolutionSchedule::with_spacing(4.0 * tb, 0.1);
    let c = InitialState::SingleCenter.center(70);
    let series: Vec<f64> = final_state(&params, InitialState::SingleCenter, &schedule)
        .iter()
        .map(|s| spread(&density(&s.state.normalized().unwrap(), &basis).unwrap(), c))
        .collect();
    let period = oscillation_period(&series, schedule.spacing())
        .map(|o| o.period)
        .unwrap_or(f64::NAN);
    let error = (period - tb).abs() / tb;
    let (fast, time) = within(clock, Duration::from_secs(10));
    outcome(
        error < 0.05 && fast,
        format!(
            "period {period:.3} vs T_B {tb:.3} ({:.2}%); {time}",
            100.0 * error
        ),
    )
}

fn frequency_doubling() -> Outcome {
    let params = LatticeParams::new(70, 2)
        .with_interaction(8.0)
        .with_tilt(TILT);
    let basis = build_basis(&params).unwrap();
    let tb = params.bloch_period();
    let schedule = EvolutionSchedule::with_spacing(4.0 * tb, 0.1);
    let c = InitialState::SameSite.center(70);
    let series: Vec<f64> = final_state(&params, InitialState::SameSite, &schedule)
        .iter()
        .map(|s| {
            spread(
                &doublon_density(&s.state.normalized().unwrap(), &basis).unwrap(),
                c,
            )
        })
        .collect();
    let period = oscillation_period(&series, schedule.spacing())
        .map(|o| o.period)
        .unwrap_or(f64::NAN);
    let error = (period - 0.5 * tb).abs() / (0.5 * tb);
    outcome(
        error < 0.05,
        format!(
            "doublon period {period:.3} vs T_B/2 {:.3} ({:.2}%)",
            0.5 * tb,
            100.0 * error
        ),
    )
}

fn directional_asymmetry() -> Outcome {
    let deltas = [0.0, 0.02, 0.04, 0.08];
    let values: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            let params = LatticeParams::new(70, 2)
                .with_delta(d)
                .with_interaction(2.0);
            let basis = build_basis(&params).unwrap();
            let s = final_state(
                &params,
                InitialState::Neighboring,
                &EvolutionSchedule::new(10.0, 2),
            );
            let n = density(&s[1].state.normalized().unwrap(), &basis).unwrap();
            asymmetry(&n, InitialState::Neighboring.center(70))
        })
        .collect();
    let zero = values[0].abs() < 1e-8;
    let sign = values[1].signum();
    let same_sign = values[1..].iter().all(|v| v.signum() == sign && *v != 0.0);
    let increasing = values[1..].windows(2).all(|w| w[1].abs() > w[0].abs());
    outcome(
        zero && same_sign && increasing,
        format!("asymmetry at delta {deltas:?}: {}", sci(&values)),
    )
}

fn anti_bunching() -> Outcome {
    let us = [0.0, 2.0, 5.0, 10.0];
    let values: Vec<f64> = us
        .iter()
        .map(|&u| {
            let params = LatticeParams::new(70, 2)
                .with_delta(0.04)
                .with_interaction(u);
            let basis = build_basis(&params).unwrap();
            let s = final_state(
                &params,
                InitialState::Neighboring,
                &EvolutionSchedule::new(8.0, 2),
            );
            correlator(&s[1].state.normalized().unwrap(), &basis)
                .unwrap()
                .diagonal_sum()
        })
        .collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing,
        format!("sum_i Gamma_ii at U {us:?}: {}", sci(&values)),
    )
}

struct QfiRun {
    label: String,
    delta: f64,
    series: QfiSeries,
}

fn qfi_runs() -> (Vec<QfiRun>, Duration) {
    let clock = Instant::now();
    let mut runs = Vec::new();
    for start in [
        InitialState::SingleCenter,
        InitialState::Neighboring,
        InitialState::SameSite,
    ] {
        for delta in [0.0, 0.04] {
            let params = LatticeParams::new(70, start.required_particles())
                .with_delta(delta)
                .with_interaction(2.0)
                .with_tilt(TILT);
            let basis = build_basis(&params).unwrap();
            let psi0 = initial_state(&basis, start).unwrap();
            // 0.1 spacing past T_B so that t = 10 is a grid point
            let t_max = 0.1 * (10.0 * params.bloch_period()).ceil();
            let schedule = EvolutionSchedule::with_spacing(t_max, 0.1);
            let series = qfi_series(&params, &psi0, &schedule, None).unwrap();
            runs.push(QfiRun {
                label: start.name().to_string(),
                delta,
                series,
            });
        }
    }
    (runs, clock.elapsed())
}

fn fq_at(series: &QfiSeries, t: f64) -> f64 {
    let k = series
        .times
        .iter()
        .position(|s| (s - t).abs() < 1e-6)
        .expect("t on grid");
    series.fq[k]
}

fn qfi_scaling(runs: &[QfiRun], elapsed: Duration) -> Outcome {
    let window = (0.5, 0.5 * 2.0 * std::f64::consts::PI / TILT);
    let mut pass = elapsed <= Duration::from_secs(300);
    let mut parts = Vec::new();
    for r in runs {
        let alpha = fit_alpha(&r.series, window)
            .map(|f| f.alpha)
            .unwrap_or(f64::NAN);
        let ok = (2.7..=3.3).contains(&alpha);
        pass &= ok;
        parts.push(format!("{} delta={} alpha={alpha:.3}", r.label, r.delta));
    }
    for pair in runs.chunks(2) {
        let (h, nh) = (fq_at(&pair[0].series, 10.0), fq_at(&pair[1].series, 10.0));
        pass &= nh <= h;
        parts.push(format!("{} F_Q(10) {h:.1} -> {nh:.1}", pair[0].label));
    }
    parts.push(format!("{:.0}s", elapsed.as_secs_f64()));
    outcome(pass, parts.join("; "))
}

fn qfi_sanity(runs: &[QfiRun], manifests: &[RunManifest]) -> Outcome {
    let mut worst_zero: f64 = 0.0;
    let mut lowest = f64::INFINITY;
    let mut count = 0;
    for r in runs {
        worst_zero = worst_zero.max(r.series.fq[0].abs());
        lowest = lowest.min(r.series.fq.iter().copied().fold(f64::INFINITY, f64::min));
        count += 1;
    }
    for q in manifests
        .iter()
        .flat_map(|m| &m.points)
        .filter_map(|p| p.qfi.as_ref())
    {
        worst_zero = worst_zero.max(q.fq_at_zero.abs());
        lowest = lowest.min(q.min_fq);
        count += 1;
    }

    // a fixed phase on every F + eps snapshot leaves F_Q untouched
    let params = LatticeParams::new(16, 2)
        .with_delta(0.04)
        .with_interaction(2.0)
        .with_tilt(TILT);
    let basis = build_basis(&params).unwrap();
    let psi0 = initial_state(&basis, InitialState::Neighboring).unwrap();
    let schedule = EvolutionSchedule::new(6.0, 13);
    let eps = 1e-3;
    let run = |f: f64| {
        let h = build_hamiltonian(&basis, &params.with_tilt(f)).unwrap();
        evolve(&h, &psi0, &schedule).unwrap()
    };
    let (center, plus, minus) = (run(TILT), run(TILT + eps), run(TILT - eps));
    let phase = Complex64::from_polar(1.0, 2.1);
    let rotated: Vec<Snapshot> = plus
        .iter()
        .map(|s| Snapshot {
            t: s.t,
            state: s.state.scaled(phase).unwrap(),
        })
        .collect();
    let a = fisher_from_snapshots(&center, &plus, &minus, eps).unwrap();
    let b = fisher_from_snapshots(&center, &rotated, &minus, eps).unwrap();
    let drift = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max);

    outcome(
        worst_zero <= 1e-9 && lowest >= -1e-9 && drift < 1e-9,
        format!("{count} series: max |F_Q(0)| {worst_zero:.1e}, min F_Q {lowest:.1e}; phase drift {drift:.1e}"),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    // `cargo test -- <filter>` style arguments are ignored; every criterion runs
    let mut failed = 0;
    let mut report = |k: u32, name: &str, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {k:>2} {name:<26} {verdict}  {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    };

    report(1, "bessel oracle match", guarded(bessel_match));
    report(2, "oracle equivalence", guarded(oracle_equivalence));
    let manifests = catch_unwind(all_presets).unwrap_or_default();
    let ran = !manifests.is_empty();
    report(
        3,
        "hermitian unitarity",
        if ran {
            hermitian_unitarity(&manifests)
        } else {
            outcome(false, "preset run failed".into())
        },
    );
    report(
        4,
        "sum rules",
        if ran {
            sum_rules(&manifests)
        } else {
            outcome(false, "preset run failed".into())
        },
    );
    report(5, "bloch period", guarded(bloch_period));
    report(6, "frequency doubling", guarded(frequency_doubling));
    report(7, "directional asymmetry", guarded(directional_asymmetry));
    report(8, "anti-bunching trend", guarded(anti_bunching));
    match catch_unwind(qfi_runs) {
        Ok((runs, elapsed)) => {
            report(
                9,
                "qfi cubic scaling",
                guarded(|| qfi_scaling(&runs, elapsed)),
            );
            report(
                10,
                "qfi zero and sign",
                guarded(|| qfi_sanity(&runs, &manifests)),
            );
        }
        Err(_) => {
            report(
                9,
                "qfi cubic scaling",
                outcome(false, "qfi evolution failed".into()),
            );
            report(
                10,
                "qfi zero and sign",
                outcome(false, "qfi evolution failed".into()),
            );
        }
    }

    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
