//! Group elements of `G`: membership, Berezinian multiplicativity, exp/log.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use superhp::grassmann::{Algebra, ParamSpec};
use superhp::supermatrix::{lie, random};

fn main() -> superhp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alg = Algebra::new(ParamSpec::Polynomial { n: 3 }, 3)?;
    let g = random::point(&mut rng, alg, 0.5);
    let h = random::point(&mut rng, alg, 0.5);

    let m = g.membership(1e-10);
    println!("g: g I g* = I residual {:.2e}, Ber residual {:.2e}, member {}", m.unitary_residual, m.ber_residual, m.member);

    let lhs = g.matmul(&h).berezinian()?;
    let rhs = &g.berezinian()? * &h.berezinian()?;
    println!("|Ber(gh) − Ber g · Ber h| = {:.2e}", lhs.dist(&rhs));
    println!("Ber g = {}", g.berezinian()?.prune(1e-12));

    let inv = g.inverse()?;
    println!("|g g⁻¹ − 1| = {:.2e}", g.matmul(&inv).dist(&superhp::supermatrix::SuperMatrix::identity(alg)));
    println!("Ber g⁻¹ · Ber g = {}", (&inv.berezinian()? * &g.berezinian()?).prune(1e-12));

    // log along a fixed relative body
    let base = lie::random_param_element(&mut rng, alg, 0.8, true).rel_body();
    let x = base.add(&lie::random_param_element(&mut rng, alg, 0.2, false));
    let back = x.exp().log_point(&base)?;
    println!("\nexp/log roundtrip: {:.2e}", back.dist(&x));
    println!("Ber exp(x) = {}", x.exp().berezinian()?.prune(1e-12));
    Ok(())
}
