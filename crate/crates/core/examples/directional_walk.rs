//! Two bosons released from neighbouring sites on an untilted chain: the
//! density cone leans further to one side as the non-reciprocity grows.
//!
//! cargo run --example directional_walk

use hnwalk::observables::{asymmetry, density};
use hnwalk::{
    build_basis, build_hamiltonian, evolve, initial_state, EvolutionSchedule, InitialState,
    LatticeParams,
};

fn main() -> hnwalk::Result<()> {
    let sites = 70;
    let start = InitialState::Neighboring;
    println!(
        "{:>6} {:>12} {:>10} {:>10}",
        "delta", "asymmetry", "norm^2", "peak site"
    );
    for delta in [0.0, 0.02, 0.04, 0.08] {
        let params = LatticeParams::new(sites, 2)
            .with_delta(delta)
            .with_interaction(2.0);
        let basis = build_basis(&params)?;
        let h = build_hamiltonian(&basis, &params)?;
        let psi0 = initial_state(&basis, start)?;
        let snaps = evolve(&h, &psi0, &EvolutionSchedule::new(10.0, 2))?;
        let last = &snaps[1];
        let n = density(&last.state.normalized()?, &basis)?;
        let peak = n
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k + 1)
            .unwrap_or(0);
        println!(
            "{delta:>6} {:>12.5} {:>10.3e} {peak:>10}",
            asymmetry(&n, start.center(sites)),
            last.state.norm_sq()
        );
    }
    Ok(())
}
