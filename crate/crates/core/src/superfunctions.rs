//! Super functions given by truncated generalized q-expansions, the classical
//! seeds `η²` and `θ²`, and boundedness at `i∞`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{Algebra, SuperScalar};
use crate::moebius::Components;
use crate::supermatrix::SuperMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// `f(z) = Σ_j c_j e^{2πi(ν₀ + j/q_den) z}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QExpansion {
    pub nu0: Rational64,
    pub q_den: u32,
    pub coeffs: Vec<Complex64>,
}

impl QExpansion {
    pub fn new(nu0: Rational64, q_den: u32, coeffs: Vec<Complex64>) -> Self {
        assert!(q_den > 0, "q_den must be positive");
        QExpansion { nu0, q_den, coeffs }
    }

    pub fn constant(c: Complex64) -> Self {
        QExpansion::new(Rational64::zero(), 1, vec![c])
    }

    /// Exponent of the `j`-th term, in units of `2πi z`.
    pub fn exponent(&self, j: usize) -> f64 {
        self.nu0.to_f64().unwrap() + j as f64 / self.q_den as f64
    }

    pub fn exponent_exact(&self, j: usize) -> Rational64 {
        self.nu0 + Rational64::new(j as i64, self.q_den as i64)
    }

    /// Smallest exponent with a coefficient above `tol`.
    pub fn min_exponent(&self, tol: f64) -> Option<Rational64> {
        self.coeffs
            .iter()
            .position(|c| c.norm() > tol)
            .map(|j| self.exponent_exact(j))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.derivatives(z, 0)[0]
    }

    /// `f^{(0..=order)}(z)`.
    pub fn derivatives(&self, z: Complex64, order: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; order + 1];
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let w = TWO_PI_I * self.exponent(j);
            let mut v = c * (w * z).exp();
            for o in out.iter_mut() {
                *o += v;
                v *= w;
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> QExpansion {
        QExpansion::new(
            self.nu0,
            self.q_den,
            self.coeffs.iter().map(|c| c * s).collect(),
        )
    }

    /// `f(z + t)`.
    pub fn translate(&self, t: f64) -> QExpansion {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c * (TWO_PI_I * self.exponent(j) * t).exp())
            .collect();
        QExpansion::new(self.nu0, self.q_den, coeffs)
    }

    /// Product, truncated to the shorter length; requires compatible grids.
    pub fn mul(&self, other: &QExpansion) -> Result<QExpansion> {
        if self.q_den != other.q_den {
            return Err(Error::Format("q-expansions on different grids".into()));
        }
        let n = self.coeffs.len().min(other.coeffs.len());
        let mut c = vec![ZERO; n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            for (j, b) in other.coeffs.iter().enumerate().take(n - i) {
                c[i + j] += a * b;
            }
        }
        Ok(QExpansion::new(self.nu0 + other.nu0, self.q_den, c))
    }

    pub fn to_file(&self) -> QExpansionFile {
        QExpansionFile {
            nu0: format!("{}/{}", self.nu0.numer(), self.nu0.denom()),
            q_den: self.q_den,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_file(f: &QExpansionFile) -> Result<QExpansion> {
        let nu0 = parse_rational(&f.nu0)?;
        if f.q_den == 0 {
            return Err(Error::Format("q_den must be positive".into()));
        }
        Ok(QExpansion::new(
            nu0,
            f.q_den,
            f.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
        ))
    }
}

pub fn parse_rational(s: &str) -> Result<Rational64> {
    let bad = || Error::Parse(format!("rational {s:?}"));
    match s.trim().split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational64::new(p.trim().parse().map_err(|_| bad())?, q))
        }
        None => Ok(Rational64::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

/// Serialized [`QExpansion`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QExpansionFile {
    pub nu0: String,
    pub q_den: u32,
    pub coeffs: Vec<[f64; 2]>,
}

/// Coefficients of `Π_{n≥1} (1 − q^n)^2` up to `q^{t-1}`.
fn euler_squared(t: usize) -> Vec<f64> {
    let mut c = vec![0.0; t];
    c[0] = 1.0;
    for n in 1..t {
        for _ in 0..2 {
            for j in (n..t).rev() {
                c[j] -= c[j - n];
            }
        }
    }
    c
}

/// `η(z)² = e^{2πi z/12} Π (1 − e^{2πinz})²` with `t` coefficients.
pub fn eta_squared(t: usize) -> QExpansion {
    assert!(t >= 1);
    QExpansion::new(
        Rational64::new(1, 12),
        1,
        euler_squared(t).into_iter().map(|x| x.into()).collect(),
    )
}

/// `θ(z)² = Σ r₂(n) e^{πinz}`, `n < t`.
pub fn theta_squared(t: usize) -> QExpansion {
    assert!(t >= 1);
    let mut r2 = vec![0.0; t];
    let bound = (t as f64).sqrt() as i64 + 1;
    for a in -bound..=bound {
        for b in -bound..=bound {
            let n = (a * a + b * b) as usize;
            if n < t {
                r2[n] += 1.0;
            }
        }
    }
    QExpansion::new(Rational64::zero(), 2, r2.into_iter().map(|x| x.into()).collect())
}

/// `η(z)` by its product with `factors` factors.
pub fn eta_product(z: Complex64, factors: usize) -> Complex64 {
    let q = (TWO_PI_I * z).exp();
    let mut p = (TWO_PI_I * z / 24.0).exp();
    let mut qn = ONE;
    for _ in 0..factors {
        qn *= q;
        p *= ONE - qn;
    }
    p
}

/// One component `p · z^d · f(z) · ζ^I`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTerm {
    pub pkey: u32,
    pub mask: u32,
    pub zpow: u32,
    pub q: QExpansion,
}

/// `f = Σ p z^d f_{p,d,I}(z) ζ^I` with q-expanded `f_{p,d,I}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QSuperFunction {
    pub alg: Algebra,
    pub terms: Vec<QTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CuspBehaviour {
    Vanishing,
    Bounded,
    Unbounded,
}

impl QSuperFunction {
    pub fn zero(alg: Algebra) -> Self {
        QSuperFunction { alg, terms: vec![] }
    }

    /// `f(z) ζ^I`.
    pub fn monomial(alg: Algebra, mask: u32, q: QExpansion) -> Self {
        QSuperFunction {
            alg,
            terms: vec![QTerm {
                pkey: 0,
                mask,
                zpow: 0,
                q,
            }],
        }
    }

    pub fn push(&mut self, pkey: u32, mask: u32, zpow: u32, q: QExpansion) {
        self.terms.push(QTerm {
            pkey,
            mask,
            zpow,
            q,
        });
    }

    pub fn add(&self, other: &QSuperFunction) -> QSuperFunction {
        assert_eq!(self.alg, other.alg);
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out
    }

    /// Relative body: keep the unit parameter monomial only.
    pub fn rel_body(&self) -> QSuperFunction {
        QSuperFunction {
            alg: self.alg,
            terms: self.terms.iter().filter(|t| t.pkey == 0).cloned().collect(),
        }
    }

    /// Homogeneous `Z`-grade `|I|`, if all components share it.
    pub fn zeta_grade(&self) -> Option<u32> {
        let mut g = None;
        for t in &self.terms {
            let d = t.mask.count_ones();
            match g {
                None => g = Some(d),
                Some(x) if x != d => return None,
                _ => {}
            }
        }
        g
    }

    /// Classify by the minimal exponent of every component; `z^d` factors
    /// with `d > 0` count as growth unless the exponent is positive.
    pub fn behaviour_at_infinity(&self, tol: f64) -> CuspBehaviour {
        let mut worst = CuspBehaviour::Vanishing;
        for t in &self.terms {
            let Some(nu) = t.q.min_exponent(tol) else {
                continue;
            };
            let b = if nu > Rational64::zero() {
                CuspBehaviour::Vanishing
            } else if nu == Rational64::zero() && t.zpow == 0 {
                CuspBehaviour::Bounded
            } else {
                CuspBehaviour::Unbounded
            };
            worst = match (worst, b) {
                (CuspBehaviour::Unbounded, _) | (_, CuspBehaviour::Unbounded) => {
                    CuspBehaviour::Unbounded
                }
                (CuspBehaviour::Bounded, _) | (_, CuspBehaviour::Bounded) => CuspBehaviour::Bounded,
                _ => CuspBehaviour::Vanishing,
            };
        }
        worst
    }

    /// Exact slash by `g = diag(ε₀ (1 t; 0 1), E₀)` with diagonal `E₀` and
    /// numeric entries; this is the class that preserves the q-expansion format.
    pub fn slash_parabolic(&self, g: &SuperMatrix, k: i64) -> Result<QSuperFunction> {
        let data = parabolic_data(g)?;
        let mut out = QSuperFunction::zero(self.alg);
        for t in &self.terms {
            let mut factor = data.eps0.powi(-(k as i32) - t.mask.count_ones() as i32);
            for (i, e) in data.e0.iter().enumerate() {
                if t.mask >> i & 1 == 1 {
                    factor *= e;
                }
            }
            let q = t.q.translate(data.t).scale(factor);
            // (z + t)^d = Σ C(d, m) t^{d−m} z^m
            let mut binom = 1.0;
            for m in (0..=t.zpow).rev() {
                let coef = binom * data.t.powi((t.zpow - m) as i32);
                if coef != 0.0 {
                    out.push(t.pkey, t.mask, m, q.scale(coef.into()));
                }
                binom *= m as f64 / (t.zpow - m + 1) as f64;
            }
        }
        Ok(out)
    }

    /// Maximal coefficient difference after merging terms with equal keys.
    pub fn coefficient_distance(&self, other: &QSuperFunction) -> f64 {
        let mut acc: BTreeMap<(u32, u32, u32, Rational64), Complex64> = BTreeMap::new();
        for (sign, f) in [(1.0, self), (-1.0, other)] {
            for t in &f.terms {
                for (j, &c) in t.q.coeffs.iter().enumerate() {
                    *acc.entry((t.pkey, t.mask, t.zpow, t.q.exponent_exact(j)))
                        .or_insert(ZERO) += c * sign;
                }
            }
        }
        acc.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Components for QSuperFunction {
    fn algebra(&self) -> Algebra {
        self.alg
    }

    fn keys(&self) -> Vec<(u32, u32)> {
        let mut k: Vec<_> = self.terms.iter().map(|t| (t.pkey, t.mask)).collect();
        k.sort_unstable();
        k.dedup();
        k
    }

    fn derivatives(&self, key: (u32, u32), z0: Complex64, order: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![ZERO; order + 1];
        for t in self.terms.iter().filter(|t| (t.pkey, t.mask) == key) {
            let f = t.q.derivatives(z0, order);
            // Leibniz for z^d · f
            for (n, o) in out.iter_mut().enumerate() {
                let mut binom = 1.0;
                for m in 0..=n {
                    if m <= t.zpow as usize {
                        let falling: f64 = (0..m).map(|i| (t.zpow as usize - i) as f64).product();
                        let zp = z0.powi((t.zpow as usize - m) as i32);
                        *o += f[n - m] * zp * (binom * falling);
                    }
                    binom *= (n - m) as f64 / (m + 1) as f64;
                }
            }
        }
        Ok(out)
    }
}

/// `ε₀`, `t`, `diag E₀` of a format-preserving element.
#[derive(Clone, Debug)]
pub struct ParabolicData {
    pub eps0: Complex64,
    pub t: f64,
    pub e0: Vec<Complex64>,
}

pub fn parabolic_data(g: &SuperMatrix) -> Result<ParabolicData> {
    let tol = 1e-12;
    let reject = || {
        Error::Format(
            "slash on q-expansions needs diag(ε₀(1 t;0 1), E₀) with diagonal E₀; use moebius::slash_at"
                .into(),
        )
    };
    let is_numeric = |x: &SuperScalar| x.terms().all(|(p, m, _)| p == 0 && m == 0);
    let r = g.r();
    for i in 0..g.size() {
        for j in 0..g.size() {
            let x = g.get(i, j);
            if !is_numeric(x) {
                return Err(reject());
            }
            let off_block = (i < 2) != (j < 2);
            let off_diag_e = i >= 2 && j >= 2 && i != j;
            if (off_block || off_diag_e) && x.body().norm() > tol {
                return Err(reject());
            }
        }
    }
    let eps0 = g.a().body();
    if g.c().body().norm() > tol || (g.d().body() - eps0).norm() > tol || eps0.norm() < tol {
        return Err(reject());
    }
    let t = g.b().body() / eps0;
    if t.im.abs() > tol {
        return Err(reject());
    }
    Ok(ParabolicData {
        eps0,
        t: t.re,
        e0: (0..r).map(|i| g.e(i, i).body()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::ParamSpec;
    use crate::moebius::{slash_at, SuperFunction, SuperPoint};
    use crate::supermatrix::CMat;

    #[test]
    fn eta_squared_coefficients() {
        let e = eta_squared(8);
        let want = [1.0, -2.0, -1.0, 2.0, 1.0, 2.0, -2.0, 0.0];
        for (c, w) in e.coeffs.iter().zip(want) {
            assert_eq!(c.re, w);
        }
        assert_eq!(e.nu0, Rational64::new(1, 12));
    }

    #[test]
    fn eta_squared_matches_product() {
        let z = Complex64::new(0.0, 1.0);
        let direct = eta_product(z, 200).powi(2);
        let series = eta_squared(60).eval(z);
        assert!((series - direct).norm() / direct.norm() < 1e-12);
    }

    #[test]
    fn theta_functional_equation() {
        let th = theta_squared(120);
        for z in [
            Complex64::new(0.0, 1.0),
            Complex64::new(0.3, 0.8),
            Complex64::new(-0.4, 1.2),
        ] {
            let lhs = th.eval(-1.0 / z) / (z / Complex64::i());
            assert!((lhs - th.eval(z)).norm() < 1e-10);
        }
    }

    #[test]
    fn cusp_classification() {
        let a = Algebra::new(ParamSpec::Trivial, 1).unwrap();
        let vanishing = QSuperFunction::monomial(
            a,
            1,
            QExpansion::new(Rational64::from_integer(1), 1, vec![ONE]),
        );
        assert_eq!(vanishing.behaviour_at_infinity(0.0), CuspBehaviour::Vanishing);
        let one = QSuperFunction::monomial(a, 0, QExpansion::constant(ONE));
        assert_eq!(one.behaviour_at_infinity(0.0), CuspBehaviour::Bounded);
        let neg = QSuperFunction::monomial(a, 0, eta_squared(5).translate(0.0).clone());
        let mut neg = neg;
        neg.terms[0].q.nu0 = Rational64::new(-1, 12);
        assert_eq!(neg.behaviour_at_infinity(0.0), CuspBehaviour::Unbounded);
    }

    #[test]
    fn parabolic_slash_matches_pointwise() {
        let a = Algebra::new(ParamSpec::Trivial, 2).unwrap();
        let eps0 = Complex64::from_polar(1.0, 0.4);
        let e0 = [Complex64::from_polar(1.0, 0.5), Complex64::from_polar(1.0, 0.3)];
        let top = CMat::from_row_slice(2, 2, &[eps0, eps0, ZERO, eps0]);
        let bottom = CMat::from_diagonal(&nalgebra::DVector::from_vec(e0.to_vec()));
        let g = SuperMatrix::block_diag(a, &top, &bottom);
        let mut f = QSuperFunction::monomial(a, 0b11, eta_squared(40));
        f.push(0, 0b01, 1, theta_squared(40));
        let k = 3;
        let exact = f.slash_parabolic(&g, k).unwrap();
        let p = SuperPoint::standard(a, Complex64::new(0.2, 0.7));
        let lhs = exact.eval(&p).unwrap();
        let rhs = slash_at(&f, &g, k, &p).unwrap();
        assert!(lhs.dist(&rhs) < 1e-12, "{}", lhs.dist(&rhs));
        // monomial factor ε₀^{−k−|I|} det_I E₀
        let want = eps0.powi(-(k as i32) - 2) * e0[0] * e0[1] * (TWO_PI_I / 12.0).exp();
        assert!((exact.terms[0].q.coeffs[0] - want).norm() < 1e-14);
    }

    #[test]
    fn file_roundtrip() {
        let e = eta_squared(5);
        let f = e.to_file();
        assert_eq!(f.nu0, "1/12");
        assert_eq!(QExpansion::from_file(&f).unwrap(), e);
    }
}
