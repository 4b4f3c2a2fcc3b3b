//! Arithmetic in `P ⊗ Λ(C^r)`: anticommuting generators, units, real powers.

use num_complex::Complex64;
use superhp::grassmann::{Algebra, ParamSpec, SuperScalar};

fn main() -> superhp::Result<()> {
    let alg = Algebra::new(ParamSpec::Exterior { m: 2 }, 2)?;
    println!("algebra: {alg}");
    let z1 = SuperScalar::zeta(alg, 0);
    let z2 = SuperScalar::zeta(alg, 1);
    let e1 = SuperScalar::param(alg, 1, Complex64::new(1.0, 0.0));

    println!("ζ1ζ2       = {}", &z1 * &z2);
    println!("ζ2ζ1       = {}", &z2 * &z1);
    println!("ζ1ζ1       = {}", &z1 * &z1);
    println!("ε1ζ1 + ζ1ε1 = {}", &(&e1 * &z1) + &(&z1 * &e1));

    // a unit with body 2 and an even nilpotent part
    let u = &SuperScalar::real(alg, 2.0) + &(&(&e1 * &z1) + &(&z1 * &z2).scale_re(0.5));
    let inv = u.invert_unit()?;
    println!("\nu          = {u}");
    println!("u⁻¹        = {inv}");
    println!("u·u⁻¹      = {}", &u * &inv);

    let root = u.power_real(0.5)?;
    println!("√u         = {root}");
    println!("(√u)² − u  : {:.2e}", (&root * &root).dist(&u));
    println!("exp(u − 2) = {}", (&u - &SuperScalar::real(alg, 2.0)).exp());
    Ok(())
}
