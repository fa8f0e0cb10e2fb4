//! Bloch oscillations in a tilted chain. A single boson breathes with the
//! Bloch period; a tightly bound doublon at large U breathes twice as fast.
//!
//! cargo run --example bloch_oscillation

use hnwalk::observables::{density, doublon_density, oscillation_period, spread};
use hnwalk::{
    build_basis, build_hamiltonian, evolve, initial_state, EvolutionSchedule, InitialState,
    LatticeParams,
};

fn breathing(params: LatticeParams, start: InitialState, doublon: bool) -> hnwalk::Result<f64> {
    let basis = build_basis(&params)?;
    let h = build_hamiltonian(&basis, &params)?;
    let schedule = EvolutionSchedule::with_spacing(4.0 * params.bloch_period(), 0.1);
    let snaps = evolve(&h, &initial_state(&basis, start)?, &schedule)?;
    let c = start.center(params.sites);
    let mut series = Vec::with_capacity(snaps.len());
    for s in &snaps {
        let psi = s.state.normalized()?;
        let n = if doublon {
            doublon_density(&psi, &basis)?
        } else {
            density(&psi, &basis)?
        };
        series.push(spread(&n, c));
    }
    Ok(oscillation_period(&series, schedule.spacing())
        .map(|o| o.period)
        .unwrap_or(f64::NAN))
}

fn main() -> hnwalk::Result<()> {
    let f = 0.26;
    let one = LatticeParams::new(70, 1).with_tilt(f);
    let tb = one.bloch_period();
    println!("T_B = {tb:.3}");
    let p1 = breathing(one, InitialState::SingleCenter, false)?;
    println!("one boson:         period {p1:.3}  ({:.2} T_B)", p1 / tb);
    let pair = LatticeParams::new(70, 2).with_interaction(8.0).with_tilt(f);
    let p2 = breathing(pair, InitialState::SameSite, true)?;
    println!("doublon at U = 8:  period {p2:.3}  ({:.2} T_B)", p2 / tb);
    Ok(())
}
