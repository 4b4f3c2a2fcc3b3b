//! The super Möbius action of `G` on `H^{|r}`, the cocycle `j`, slash operators
//! and the Berezinian of the super Jacobian.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grassmann::{Algebra, SuperScalar};
use crate::supermatrix::SuperMatrix;

/// A point `(z; ζ)` with values in the algebra: `z` even, each `ζ_i` odd.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperPoint {
    pub z: SuperScalar,
    pub zeta: Vec<SuperScalar>,
}

impl SuperPoint {
    /// `z = z0`, `ζ_i` the generators: evaluating a function here returns its
    /// full expansion in the odd coordinates at `z0`.
    pub fn standard(alg: Algebra, z0: Complex64) -> Self {
        SuperPoint {
            z: SuperScalar::constant(alg, z0),
            zeta: (0..alg.r()).map(|i| SuperScalar::zeta(alg, i)).collect(),
        }
    }

    pub fn algebra(&self) -> Algebra {
        self.z.algebra()
    }

    pub fn body(&self) -> Complex64 {
        self.z.body()
    }

    pub fn dist(&self, other: &SuperPoint) -> f64 {
        self.zeta
            .iter()
            .zip(&other.zeta)
            .map(|(a, b)| a.dist(b))
            .fold(self.z.dist(&other.z), f64::max)
    }

    /// `ζ^I` evaluated at this point, in increasing index order.
    pub fn zeta_monomial(&self, mask: u32) -> SuperScalar {
        let mut out = SuperScalar::one(self.algebra());
        for (i, zi) in self.zeta.iter().enumerate() {
            if mask >> i & 1 == 1 {
                out = &out * zi;
            }
        }
        out
    }
}

/// `cz + d + νζ`.
fn denominator(g: &SuperMatrix, p: &SuperPoint) -> SuperScalar {
    let mut den = &(g.c() * &p.z) + g.d();
    for (i, zi) in p.zeta.iter().enumerate() {
        den += &(g.nu(i) * zi);
    }
    den
}

fn check_point(g: &SuperMatrix, p: &SuperPoint) -> Result<()> {
    if g.algebra() != p.algebra() {
        return Err(Error::SpecMismatch(
            g.algebra().to_string(),
            p.algebra().to_string(),
        ));
    }
    if p.body().im <= 0.0 {
        return Err(Error::Domain(format!("point {} is not in H", p.body())));
    }
    Ok(())
}

/// `j(g, (z;ζ)) = 1/(cz + d + νζ)`.
pub fn cocycle_j(g: &SuperMatrix, p: &SuperPoint) -> Result<SuperScalar> {
    check_point(g, p)?;
    denominator(g, p).invert_unit()
}

/// `g(z;ζ) = j · (az + b + μζ; ρz + σ + Eζ)`.
pub fn act(g: &SuperMatrix, p: &SuperPoint) -> Result<SuperPoint> {
    let j = cocycle_j(g, p)?;
    let r = p.zeta.len();
    let mut num = &(g.a() * &p.z) + g.b();
    for (i, zi) in p.zeta.iter().enumerate() {
        num += &(g.mu(i) * zi);
    }
    let zeta = (0..r)
        .map(|i| {
            let mut w = &(g.rho(i) * &p.z) + g.sigma(i);
            for (k, zk) in p.zeta.iter().enumerate() {
                w += &(g.e(i, k) * zk);
            }
            &w * &j
        })
        .collect();
    Ok(SuperPoint {
        z: &num * &j,
        zeta,
    })
}

/// Classical Möbius action of a 2×2 complex matrix.
pub fn mobius(h: &[[Complex64; 2]; 2], z: Complex64) -> Complex64 {
    (h[0][0] * z + h[0][1]) / (h[1][0] * z + h[1][1])
}

/// The super Jacobian of `α(g, ·)` at `(z; ζ)` with `ζ` the generators and `z`
/// free of odd coordinates: rows are `∂_z, ∂_{ζ_k}`, columns `w, ω_i`.
pub fn super_jacobian(g: &SuperMatrix, z: &SuperScalar) -> Result<SuperMatrix> {
    let alg = g.algebra();
    if z.terms().any(|(_, m, _)| m != 0) {
        return Err(Error::Precondition(
            "jacobian base point must not depend on the odd coordinates".into(),
        ));
    }
    let p = SuperPoint {
        z: z.clone(),
        zeta: (0..alg.r()).map(|i| SuperScalar::zeta(alg, i)).collect(),
    };
    let j = cocycle_j(g, &p)?;
    let img = act(g, &p)?;
    let r = alg.r();
    let j2c = &(&j * &j) * g.c();
    let mut jac = SuperMatrix::zero_sized(alg, 1, r);
    // ∂_z of N·j is (∂_z N) j − N c j²; N = img·j⁻¹ and ∂_z N is a (resp. ρ_i)
    let den = denominator(g, &p);
    let num_w = &img.z * &den;
    jac.set(0, 0, &(g.a() * &j) - &(&num_w * &j2c));
    for i in 0..r {
        let num_o = &img.zeta[i] * &den;
        jac.set(0, 1 + i, &(g.rho(i) * &j) - &(&num_o * &j2c));
    }
    for k in 0..r {
        jac.set(1 + k, 0, img.z.deriv_zeta(k));
        for i in 0..r {
            jac.set(1 + k, 1 + i, img.zeta[i].deriv_zeta(k));
        }
    }
    Ok(jac)
}

/// `Ber sD α(g, ·)` at `(z; ζ)`; equals `j^{2−r}`.
pub fn jacobian_berezinian(g: &SuperMatrix, z: &SuperScalar) -> Result<SuperScalar> {
    super_jacobian(g, z)?.berezinian()
}

/// A function on (a neighbourhood in) `H^{|r}` that can be evaluated at
/// algebra-valued points.
pub trait SuperFunction: Sync {
    fn algebra(&self) -> Algebra;
    fn eval(&self, p: &SuperPoint) -> Result<SuperScalar>;
}

/// Functions given by holomorphic components `f_{p,I}(z)` with known derivatives;
/// evaluation uses the Taylor expansion around the body of `z`.
pub trait Components: Sync {
    fn algebra(&self) -> Algebra;
    /// Keys `(parameter monomial, ζ-mask)` of nonzero components.
    fn keys(&self) -> Vec<(u32, u32)>;
    /// Derivatives `f^{(0..=order)}(z0)` of one component.
    fn derivatives(&self, key: (u32, u32), z0: Complex64, order: usize) -> Result<Vec<Complex64>>;
}

impl<T: Components> SuperFunction for T {
    fn algebra(&self) -> Algebra {
        Components::algebra(self)
    }

    fn eval(&self, p: &SuperPoint) -> Result<SuperScalar> {
        let alg = Components::algebra(self);
        if p.algebra() != alg {
            return Err(Error::SpecMismatch(alg.to_string(), p.algebra().to_string()));
        }
        let z0 = p.body();
        let order = SuperScalar::taylor_order(alg);
        let mut out = SuperScalar::zero(alg);
        for key in self.keys() {
            let d = self.derivatives(key, z0, order)?;
            let val = p.z.taylor(&d)?;
            let term = &SuperScalar::param(alg, key.0, Complex64::new(1.0, 0.0)) * &val;
            out += &(&term * &p.zeta_monomial(key.1));
        }
        Ok(out)
    }
}

/// `f|_{g,k}`: `(z;ζ) ↦ f(g(z;ζ)) j(g,(z;ζ))^k`.
pub struct Slashed<'a, F: SuperFunction + ?Sized> {
    pub f: &'a F,
    pub g: SuperMatrix,
    pub k: i64,
}

impl<F: SuperFunction + ?Sized> SuperFunction for Slashed<'_, F> {
    fn algebra(&self) -> Algebra {
        self.f.algebra()
    }

    fn eval(&self, p: &SuperPoint) -> Result<SuperScalar> {
        slash_at(self.f, &self.g, self.k, p)
    }
}

pub fn slash_at<F: SuperFunction + ?Sized>(
    f: &F,
    g: &SuperMatrix,
    k: i64,
    p: &SuperPoint,
) -> Result<SuperScalar> {
    let j = cocycle_j(g, p)?;
    let q = act(g, p)?;
    Ok(&f.eval(&q)? * &j.powi(k)?)
}

/// `Σ c · p · e^{αz} ζ^I`: entire components with closed-form derivatives.
#[derive(Clone, Debug)]
pub struct ExpSum {
    pub alg: Algebra,
    /// `(param key, ζ-mask, coefficient, α)`.
    pub terms: Vec<(u32, u32, Complex64, Complex64)>,
}

impl Components for ExpSum {
    fn algebra(&self) -> Algebra {
        self.alg
    }

    fn keys(&self) -> Vec<(u32, u32)> {
        let mut k: Vec<_> = self.terms.iter().map(|t| (t.0, t.1)).collect();
        k.sort_unstable();
        k.dedup();
        k
    }

    fn derivatives(&self, key: (u32, u32), z0: Complex64, order: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
        for &(p, m, c, a) in &self.terms {
            if (p, m) != key {
                continue;
            }
            let mut v = c * (a * z0).exp();
            for o in out.iter_mut() {
                *o += v;
                v *= a;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::ParamSpec;
    use crate::supermatrix::{random, CMat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const I: Complex64 = Complex64::new(0.0, 1.0);

    #[test]
    fn translation_acts_by_shift() {
        let a = Algebra::new(ParamSpec::Trivial, 2).unwrap();
        let t = CMat::from_row_slice(2, 2, &[ONE, 0.7.into(), ZERO, ONE]);
        let g = SuperMatrix::block_diag(a, &t, &CMat::identity(2, 2));
        let p = SuperPoint::standard(a, Complex64::new(0.2, 1.1));
        let q = act(&g, &p).unwrap();
        assert!((q.z.body() - Complex64::new(0.9, 1.1)).norm() < 1e-15);
        assert_eq!(q.zeta, p.zeta);
        assert_eq!(cocycle_j(&g, &p).unwrap(), SuperScalar::one(a));
    }

    #[test]
    fn cocycle_of_s_at_i() {
        let a = Algebra::new(ParamSpec::Trivial, 1).unwrap();
        let s = CMat::from_row_slice(2, 2, &[ZERO, ONE, -ONE, ZERO]);
        let g = SuperMatrix::block_diag(a, &s, &CMat::identity(1, 1));
        let j = cocycle_j(&g, &SuperPoint::standard(a, I)).unwrap();
        assert!((j.body() - I).norm() < 1e-15);
    }

    #[test]
    fn jacobian_block_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Algebra::new(ParamSpec::Trivial, 3).unwrap();
        let g = random::body_element(&mut rng, a);
        let z = SuperScalar::constant(a, Complex64::new(0.3, 0.8));
        let ber = jacobian_berezinian(&g, &z).unwrap();
        let j = cocycle_j(&g, &SuperPoint::standard(a, Complex64::new(0.3, 0.8))).unwrap();
        assert!(ber.dist(&j.powi(-1).unwrap()) < 1e-12);
    }

    #[test]
    fn slash_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Algebra::new(ParamSpec::Exterior { m: 2 }, 1).unwrap();
        let f = ExpSum {
            alg: a,
            terms: vec![
                (0, 0, ONE, Complex64::new(0.0, 1.3)),
                (1, 1, Complex64::new(0.5, -0.2), Complex64::new(0.0, 0.4)),
            ],
        };
        let g = random::point(&mut rng, a, 0.5);
        let h = random::point(&mut rng, a, 0.5);
        let k = rng.gen_range(-3..4);
        let p = SuperPoint::standard(a, Complex64::new(0.1, 0.9));
        let fg = Slashed { f: &f, g: g.clone(), k };
        let lhs = slash_at(&fg, &h, k, &p).unwrap();
        let rhs = slash_at(&f, &g.matmul(&h), k, &p).unwrap();
        assert!(lhs.dist(&rhs) < 1e-11);
    }
}

#[cfg(test)]
mod jacobian_tests {
    use super::*;
    use crate::grassmann::ParamSpec;
    use crate::supermatrix::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ber_jacobian_is_power_of_j() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for r in [1usize, 3] {
            let a = Algebra::new(ParamSpec::Exterior { m: 2 }, r).unwrap();
            for _ in 0..4 {
                let g = random::point(&mut rng, a, 0.6);
                let z0 = Complex64::new(0.3, 0.8);
                let ber = jacobian_berezinian(&g, &SuperScalar::constant(a, z0)).unwrap();
                let j = cocycle_j(&g, &SuperPoint::standard(a, z0)).unwrap();
                let want = j.powi(2 - r as i64).unwrap();
                assert!(ber.dist(&want) < 1e-10, "r = {r}: {}", ber.dist(&want));
            }
        }
    }
}
