//! Parabolic normal form at i∞ of a deformed lattice, admissible exponents
//! `S_n` and the intertwiners `Ω_n`.

use num_complex::Complex64;
use superhp::deformation::{chi_n, chi_tilde_properties, dirichlet_series, infinitesimal_classes, OmegaN, ParabolicNormalForm};
use superhp::lattices::{build_eta_lattice, EtaCase};
use superhp::moebius::SuperPoint;

fn main() -> superhp::Result<()> {
    let lat = build_eta_lattice(EtaCase::Even)?;
    let pl = infinitesimal_classes(&lat)?.remove(0);
    let pnf = ParabolicNormalForm::from_plattice(&pl)?;
    println!("ε₀ = {:.4}, E₀ = {:?}", pnf.eps0, pnf.e0);

    let terms = dirichlet_series(pnf.eps0, &pnf.e0, 4, 100_000)?;
    let alg = pnf.g0.algebra();
    for t in &terms {
        let chi = chi_n(alg, t);
        let err = chi.exp().dist(&pnf.g0.powi(t.s as i64)?);
        println!("S = {:>3}, D = {:?}, |exp χ − g₀^S| = {err:.1e}", t.s, t.d);
    }
    let (ad, comm) = chi_tilde_properties(&pnf, &terms)?;
    println!("χ̃: Ad-invariance {ad:.1e}, pairwise commutators {comm:.1e}");

    let om = OmegaN::new(&pnf, terms.last().expect("one exponent"))?;
    for z in [Complex64::new(0.1, 1.0), Complex64::new(0.45, 1.6)] {
        let p = SuperPoint::standard(alg, z);
        let q = om.eval(&p)?;
        let (a, b) = om.intertwining_residuals(&pnf, &p, 0.7)?;
        println!("Ω({z}) = {}  squares {a:.1e} {b:.1e}", q.z.prune(1e-13));
    }
    Ok(())
}
