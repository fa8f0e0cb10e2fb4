//! Cross-checks of the stepped integrator: dense matrix exponential on a
//! small non-Hermitian problem and Bessel functions on a long free chain.
//!
//! cargo run --example dense_oracle

use hnwalk::observables::density;
use hnwalk::oracle::{bessel_density, DenseOracle};
use hnwalk::{
    build_basis, build_hamiltonian, evolve, initial_state, EvolutionSchedule, InitialState,
    LatticeParams,
};

fn main() -> hnwalk::Result<()> {
    let params = LatticeParams::new(8, 2)
        .with_delta(0.15)
        .with_interaction(6.0)
        .with_tilt(0.4);
    let basis = build_basis(&params)?;
    let h = build_hamiltonian(&basis, &params)?;
    let psi0 = initial_state(&basis, InitialState::Neighboring)?;
    let oracle = DenseOracle::new(&h)?;
    let stepped = evolve(&h, &psi0, &EvolutionSchedule::new(5.0, 2))?[1]
        .state
        .normalized()?;
    let exact = oracle.expm_apply(&psi0, 5.0)?.normalized()?;
    let err = stepped
        .amplitudes()
        .iter()
        .zip(exact.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!(
        "dimension {}  eigenbasis route: {}  condition {:.2e}  max amplitude error {err:.2e}",
        oracle.dimension(),
        oracle.uses_eigenbasis(),
        oracle.condition().unwrap_or(f64::NAN)
    );

    let free = LatticeParams::new(121, 1);
    let basis = build_basis(&free)?;
    let h = build_hamiltonian(&basis, &free)?;
    let start = InitialState::center_site(121);
    let snaps = evolve(
        &h,
        &initial_state(&basis, InitialState::SingleCenter)?,
        &EvolutionSchedule::new(10.0, 11),
    )?;
    for s in snaps.iter().skip(1).step_by(3) {
        let n = density(&s.state.normalized()?, &basis)?;
        let mut worst: f64 = 0.0;
        // the Bessel oracle covers |i - i0| <= 60, i.e. all but the last site
        for (k, nk) in n
            .iter()
            .enumerate()
            .filter(|(k, _)| (k + 1).abs_diff(start) <= 60)
        {
            worst = worst.max((nk - bessel_density(k + 1, start, s.t)?).abs());
        }
        println!(
            "t = {:>4.1}  max |n_i - J_(i-i0)(2t)^2| = {worst:.2e}  (edge {:.1e})",
            s.t, n[0]
        );
    }
    Ok(())
}
