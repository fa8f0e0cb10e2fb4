//! Build the two-boson basis and sparse Hamiltonian of a short chain and
//! print them, plus the coordinate-format export.
//!
//! cargo run --example hamiltonian_export

use hnwalk::{build_basis, build_hamiltonian, LatticeParams};

fn main() -> hnwalk::Result<()> {
    let params = LatticeParams::new(4, 2)
        .with_delta(0.1)
        .with_interaction(2.0)
        .with_tilt(0.5);
    let basis = build_basis(&params)?;
    let h = build_hamiltonian(&basis, &params)?;
    println!("basis ({} states):", basis.dimension());
    for (k, s) in basis.states().iter().enumerate() {
        println!("  {k:>2} {s}  E_diag = {:+.3}", h.get(k, k).re);
    }
    println!(
        "nonzeros: {} ({} off-diagonal)",
        h.nnz(),
        h.nnz_offdiagonal()
    );
    let mut out = Vec::new();
    h.write_coordinate(&mut out)
        .map_err(|e| hnwalk::Error::Format(e.to_string()))?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
