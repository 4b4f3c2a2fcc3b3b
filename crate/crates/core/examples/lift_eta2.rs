//! Lift `η²` to the deformation of its lattice along the even class and
//! certify that the lifted form spans a free module of rank one.

use superhp::adapt::{lift, parammain_check, LiftConfig, LiftProblem};
use superhp::deformation::infinitesimal_classes;
use superhp::grassmann::{Algebra, ParamSpec};
use superhp::lattices::{build_eta_lattice, EtaCase};
use superhp::superfunctions::{eta_squared, QSuperFunction};

fn main() -> superhp::Result<()> {
    let lat = build_eta_lattice(EtaCase::Even)?;
    let plat = infinitesimal_classes(&lat)?.remove(0);
    let f = QSuperFunction::monomial(Algebra::new(ParamSpec::Trivial, 1)?, 0, eta_squared(60));
    let prob = LiftProblem {
        plat: &plat,
        k: 1,
        config: LiftConfig::default(),
    };
    let l = lift(&prob, &f)?;
    for lv in &l.levels {
        println!(
            "monomial {}: {} unknowns, {} equations, σ_max {:.2e}, σ_min {:.2e} ({} kept), fit {:.1e}",
            lv.monomial, lv.unknowns, lv.equations, lv.max_singular, lv.min_singular, lv.retained, lv.residual
        );
    }
    println!("invariance residual of the lift: {:.2e}", l.residual);
    for t in l.lifted.terms.iter().filter(|t| t.pkey != 0) {
        let lead: Vec<String> = t.q.coeffs.iter().take(4).map(|c| format!("{:.3}", c)).collect();
        println!("  t · z^{} · q^({}) · [{} ...]", t.zpow, t.q.nu0, lead.join(", "));
    }
    let rep = parammain_check(std::slice::from_ref(&l))?;
    println!("#' gives back η² exactly: {}", rep.rel_body_exact);
    println!("certificate: {:?}", rep.certificate);
    Ok(())
}
