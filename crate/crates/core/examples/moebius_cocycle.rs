//! The super Möbius action on `H^{|r}`, the automorphy factor and slash operators.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use superhp::grassmann::{Algebra, ParamSpec, SuperScalar};
use superhp::moebius::{act, cocycle_j, jacobian_berezinian, slash_at, ExpSum, Slashed, SuperPoint};
use superhp::supermatrix::random;

fn main() -> superhp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alg = Algebra::new(ParamSpec::Exterior { m: 2 }, 1)?;
    let g = random::point(&mut rng, alg, 0.4);
    let h = random::point(&mut rng, alg, 0.4);
    let p = SuperPoint::standard(alg, Complex64::new(0.2, 0.9));

    let q = act(&g, &p)?;
    println!("g(z; ζ): z = {}", q.z);
    println!("         ζ = {}", q.zeta[0]);

    let j = cocycle_j(&g.matmul(&h), &p)?;
    let jj = &cocycle_j(&g, &act(&h, &p)?)? * &cocycle_j(&h, &p)?;
    println!("cocycle defect |j(gh,p) − j(g,hp) j(h,p)| = {:.2e}", j.dist(&jj));

    for r in [1usize, 3] {
        let alg = Algebra::new(ParamSpec::Exterior { m: 2 }, r)?;
        let g = random::point(&mut rng, alg, 0.5);
        let z0 = Complex64::new(-0.3, 1.2);
        let ber = jacobian_berezinian(&g, &SuperScalar::constant(alg, z0))?;
        let want = cocycle_j(&g, &SuperPoint::standard(alg, z0))?.powi(2 - r as i64)?;
        println!("r = {r}: |Ber sD − j^(2−r)| = {:.2e}", ber.dist(&want));
    }

    let f = ExpSum {
        alg,
        terms: vec![(0, 0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)), (1, 1, Complex64::new(0.5, 0.0), Complex64::new(0.0, 2.0))],
    };
    let k = 2;
    let twice = slash_at(&Slashed { f: &f, g: g.clone(), k }, &h, k, &p)?;
    let once = slash_at(&f, &g.matmul(&h), k, &p)?;
    println!("|(f|g)|h − f|gh| at weight {k}: {:.2e}", twice.dist(&once));
    Ok(())
}
