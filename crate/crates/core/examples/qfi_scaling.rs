//! Quantum Fisher information for the tilt: growth exponent, Cramer-Rao
//! bound and the loss caused by non-reciprocity.
//!
//! cargo run --example qfi_scaling

use hnwalk::qfi::{cramer_rao_bound, default_window, delta_metric, qfi_series};
use hnwalk::{build_basis, initial_state, EvolutionSchedule, InitialState, LatticeParams};

fn main() -> hnwalk::Result<()> {
    let f = 0.26;
    let mut series = Vec::new();
    for delta in [0.0, 0.04, 0.08] {
        let params = LatticeParams::new(70, 1).with_delta(delta).with_tilt(f);
        let basis = build_basis(&params)?;
        let psi0 = initial_state(&basis, InitialState::SingleCenter)?;
        let schedule = EvolutionSchedule::new(24.2, 243);
        let s = qfi_series(&params, &psi0, &schedule, None)?;
        let k = s
            .times
            .iter()
            .position(|t| (t - 10.0).abs() < 1e-9)
            .expect("t = 10 on grid");
        let fit = s.alpha_fit.expect("fit window has samples");
        println!(
            "delta = {delta:<5} F_Q(10) = {:>9.1}  bound = {:.4}  alpha = {:.3} on [{}, {:.2}]  eps-stable: {}",
            s.fq[k],
            cramer_rao_bound(s.fq[k])?,
            fit.alpha,
            fit.window.0,
            fit.window.1,
            s.reliable
        );
        series.push((delta, s));
    }
    let window = default_window(&LatticeParams::new(70, 1).with_tilt(f));
    println!("default fit window [{}, {:.2}]", window.0, window.1);
    for (delta, s) in &series[1..] {
        println!(
            "Delta(t = 10) at delta = {delta}: {:.4}",
            delta_metric(&series[0].1, s, 10.0)?
        );
    }
    Ok(())
}
