//! Bundle degrees and dimensions of `sM_k^ρ` and `sS_k^ρ`.

use superhp::lattices::{build_embedded_sl2z, build_eta_lattice, build_genus2, EtaCase};
use superhp::riemann_roch::DimensionCalculator;

fn main() -> superhp::Result<()> {
    let calc = DimensionCalculator::new(&build_embedded_sl2z(1)?, 0)?;
    let k1 = calc.default_k1(300)?;
    let calc = calc.with_k1(k1);
    println!("SL(2,Z), ρ = 0, k₁ = {k1}");
    println!("k\tdimV\tc1\tdim_sM\tdim_sS");
    for k in (k1..=36).filter(|k| k % 2 == 0) {
        let r = calc.dim_sm(k, true)?;
        println!("{k}\t{}\t{}\t{}\t{}", r.rank, r.c1, r.dim_sm, r.dim_ss);
    }
    match calc.dim_sm(20, false) {
        Err(e) => println!("without the k ≥ k₁ flag: {e}"),
        Ok(_) => unreachable!(),
    }

    println!("\nη² lattices:");
    for (case, k, rho) in [(EtaCase::Even, 1, 0), (EtaCase::Even, 1, 1), (EtaCase::Odd, 0, 1), (EtaCase::Odd, 0, 0)] {
        let r = DimensionCalculator::new(&build_eta_lattice(case)?, rho)?.report(k)?;
        println!("  {case:?} k = {k} ρ = {rho}: deg = {}, dim sM = {}", r.c1, r.dim_sm);
        for lw in &r.local {
            println!("    {:?} Ω_M = {:?}", lw.kind, lw.omega_m.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        }
    }

    let calc = DimensionCalculator::new(&build_genus2([0.3, 1.1, -0.4, 2.0])?, 1)?;
    let asym = calc.asymptotic_check(2..=120)?;
    println!("\ngenus 2, ρ = 1: max |dim/n − (k/2)·vol| = {:.3} (k = {})", asym.max_deviation_sm, asym.worst_k);
    Ok(())
}
