//! The shipped lattices, their validation and the invariant spaces `V_k^ρ`.

use num_complex::Complex64;
use superhp::lattices::{build_embedded_sl2z, build_eta_lattice, build_genus2, build_punctured_torus, example_i_auto, EtaCase};

fn main() -> superhp::Result<()> {
    let tau = std::f64::consts::TAU;
    let w3 = Complex64::from_polar(1.0, tau / 3.0);
    let lats = vec![
        ("SL(2,Z), r = 2", build_embedded_sl2z(2)?),
        ("η² even", build_eta_lattice(EtaCase::Even)?),
        ("η² odd", build_eta_lattice(EtaCase::Odd)?),
        ("|Γ₀| = 3", example_i_auto(w3, &[w3 * w3])?),
        ("genus 2", build_genus2([0.3, 1.1, -0.4, 2.0])?),
        ("punctured torus", build_punctured_torus(Complex64::from_polar(1.0, tau / 6.0), w3, 0.7, 1.9)?),
    ];
    for (name, lat) in &lats {
        let rep = lat.validate(1e-9);
        let worst = rep.relation_residuals.iter().copied().fold(0.0, f64::max);
        println!(
            "{name:<16} r = {}, |Γ₀| = {}, genus {}, special points {}, covolume/2π {:.4}, relations {worst:.1e}, valid {}",
            lat.r(),
            lat.gamma0_order,
            lat.genus,
            lat.special.len(),
            lat.covolume(),
            rep.ok
        );
    }

    let (_, lat) = &lats[3];
    println!("\ndim V_k^ρ for |Γ₀| = 3, r = 1:");
    for rho in 0..=1 {
        let dims: Vec<usize> = (0..9).map(|k| lat.vk_rho(k, rho).dim).collect();
        println!("  ρ = {rho}: k = 0..8 → {dims:?}");
    }
    Ok(())
}
