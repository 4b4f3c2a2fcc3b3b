//! `η²` and `η²ζ` as super automorphic forms of the two η² lattices.

use num_complex::Complex64;
use superhp::grassmann::{Algebra, ParamSpec};
use superhp::lattices::{build_eta_lattice, EtaCase};
use superhp::moebius::{slash_at, SuperFunction, SuperPoint};
use superhp::superfunctions::{eta_product, eta_squared, theta_squared, QSuperFunction};

fn main() -> superhp::Result<()> {
    let q = eta_squared(12);
    println!("η² = q^{} · Σ c_n qⁿ, c = {:?}", q.nu0, q.coeffs.iter().map(|c| c.re).collect::<Vec<_>>());
    let z = Complex64::new(0.1, 0.8);
    println!("series vs product at {z}: {:.2e}", (eta_squared(60).eval(z) - eta_product(z, 200).powi(2)).norm());
    let t = theta_squared(10);
    println!("θ² coefficients r₂(n): {:?}", t.coeffs.iter().map(|c| c.re).collect::<Vec<_>>());

    let alg = Algebra::new(ParamSpec::Trivial, 1)?;
    for (case, mask, k) in [(EtaCase::Even, 0, 1), (EtaCase::Odd, 1, 0)] {
        let lat = build_eta_lattice(case)?;
        let f = QSuperFunction::monomial(alg, mask, eta_squared(60));
        println!("\n{case:?} lattice, weight {k}, ζ-mask {mask}");
        for z in [Complex64::new(0.0, 1.0), Complex64::new(0.3, 0.55)] {
            let p = SuperPoint::standard(alg, z);
            let v = f.eval(&p)?;
            for g in &lat.generators {
                let res = slash_at(&f, &g.matrix, k, &p)?.dist(&v);
                println!("  |f|{} − f| at {z}: {res:.2e}", g.name);
            }
        }
        println!("  behaviour at i∞: {:?}", f.behaviour_at_infinity(1e-12));
    }
    Ok(())
}
