//! `H¹(Γ, g)` by Fox calculus, compared with the closed forms.

use num_complex::Complex64;
use superhp::deformation::{h1_dims_example_i, h1_dims_example_ii, h1_fox, infinitesimal_classes};
use superhp::lattices::{build_embedded_sl2z, build_eta_lattice, build_genus2, build_punctured_torus, EtaCase};

fn main() -> superhp::Result<()> {
    for (name, lat) in [
        ("SL(2,Z), r = 1", build_embedded_sl2z(1)?),
        ("SL(2,Z), r = 3", build_embedded_sl2z(3)?),
        ("η² even", build_eta_lattice(EtaCase::Even)?),
        ("η² odd", build_eta_lattice(EtaCase::Odd)?),
    ] {
        let rep = h1_fox(&lat, 1)?;
        println!("{name:<15} Fox {:?}  closed form {:?}", rep.dims(), h1_dims_example_i(&lat)?);
    }
    for angles in [[0.3, 1.1, -0.4, 2.0], [0.0, 0.0, 0.0, 0.0]] {
        let lat = build_genus2(angles)?;
        println!("genus 2 {angles:?}: Fox {:?}  closed form {:?}", h1_fox(&lat, 1)?.dims(), h1_dims_example_ii(&lat)?);
    }
    let tau = std::f64::consts::TAU;
    let lat = build_punctured_torus(Complex64::from_polar(1.0, tau / 6.0), Complex64::from_polar(1.0, tau / 3.0), 0.7, 1.9)?;
    println!("punctured torus: Fox {:?}  closed form {:?}", h1_fox(&lat, 1)?.dims(), h1_dims_example_ii(&lat)?);

    let lat = build_eta_lattice(EtaCase::Even)?;
    for pl in infinitesimal_classes(&lat)? {
        println!(
            "class over {}: relation residual {:.1e}, relative body residual {:.1e}",
            pl.lattice.alg.param,
            pl.relation_residual(),
            pl.rel_body_residual()
        );
    }
    Ok(())
}
