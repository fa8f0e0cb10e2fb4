//! Two-particle correlator of a neighbouring-site start. Prints the weight on
//! the diagonal (bunching) against interaction strength, and a coarse map of
//! the correlator for one run.
//!
//! cargo run --example correlations

use hnwalk::observables::correlator;
use hnwalk::{
    build_basis, build_hamiltonian, evolve, initial_state, EvolutionSchedule, InitialState,
    LatticeParams,
};

fn main() -> hnwalk::Result<()> {
    let sites = 70;
    let t = 8.0;
    println!("{:>5} {:>14} {:>14}", "U", "sum Gamma_ii", "sum Gamma_ij");
    let mut last = None;
    for u in [0.0, 2.0, 5.0, 10.0] {
        let params = LatticeParams::new(sites, 2)
            .with_delta(0.04)
            .with_interaction(u);
        let basis = build_basis(&params)?;
        let h = build_hamiltonian(&basis, &params)?;
        let psi0 = initial_state(&basis, InitialState::Neighboring)?;
        let snaps = evolve(&h, &psi0, &EvolutionSchedule::new(t, 2))?;
        let g = correlator(&snaps[1].state.normalized()?, &basis)?;
        println!("{u:>5} {:>14.5} {:>14.5}", g.diagonal_sum(), g.sum());
        last = Some(g);
    }

    // 10 x 10 blocks of the U = 10 correlator, darker = larger
    let g = last.expect("at least one run");
    let shades = [' ', '.', ':', '+', '#'];
    let block = sites / 10;
    let mut cells = vec![0.0; 100];
    for i in 1..=sites {
        for j in 1..=sites {
            let (bi, bj) = (((i - 1) / block).min(9), ((j - 1) / block).min(9));
            cells[bi * 10 + bj] += g.at(i, j);
        }
    }
    let top = cells.iter().copied().fold(0.0, f64::max);
    for row in cells.chunks(10) {
        let line: String = row
            .iter()
            .map(|v| shades[((v / top) * 4.0).round() as usize])
            .collect();
        println!("  |{line}|");
    }
    Ok(())
}
