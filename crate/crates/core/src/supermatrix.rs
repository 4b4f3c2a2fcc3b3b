//! Even `(2|r)` super matrices over `P^C ⊠ Λ(C^r)` and the super Lie group `G`
//! cut out by `g I g* = I`, `Ber g = 1`.
//!
//! Rows and columns `0, 1` are even, `2..2+r` odd. In block notation
//! `g = (a b μ; c d ν; ρ σ E)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{Algebra, ParamSpec, Parity, ScalarRecord, SuperScalar};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A square even super matrix of size `(p|q)`; the group case is `p = 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperMatrix {
    alg: Algebra,
    p: usize,
    n: usize,
    m: Vec<SuperScalar>,
}

pub type CMat = DMatrix<Complex64>;

/// Largest entry modulus.
pub fn max_norm(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

impl SuperMatrix {
    pub fn zero(alg: Algebra) -> Self {
        Self::zero_sized(alg, 2, alg.r())
    }

    pub fn zero_sized(alg: Algebra, p: usize, q: usize) -> Self {
        let n = p + q;
        SuperMatrix {
            alg,
            p,
            n,
            m: vec![SuperScalar::zero(alg); n * n],
        }
    }

    pub fn identity(alg: Algebra) -> Self {
        let mut g = Self::zero(alg);
        for i in 0..g.n {
            g.set(i, i, SuperScalar::one(alg));
        }
        g
    }

    /// Lift a numeric matrix (all coefficients at the unit monomial).
    pub fn from_numeric(alg: Algebra, mat: &CMat) -> Self {
        let n = 2 + alg.r();
        assert_eq!(mat.nrows(), n);
        let mut g = Self::zero(alg);
        for i in 0..n {
            for j in 0..n {
                g.set(i, j, SuperScalar::constant(alg, mat[(i, j)]));
            }
        }
        g
    }

    /// `diag(ε h, E)` from a 2×2 block and an `r×r` block.
    pub fn block_diag(alg: Algebra, top: &CMat, bottom: &CMat) -> Self {
        let r = alg.r();
        let mut mat = CMat::zeros(2 + r, 2 + r);
        mat.view_mut((0, 0), (2, 2)).copy_from(top);
        if r > 0 {
            mat.view_mut((2, 2), (r, r)).copy_from(bottom);
        }
        Self::from_numeric(alg, &mat)
    }

    pub fn algebra(&self) -> Algebra {
        self.alg
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn even_dim(&self) -> usize {
        self.p
    }

    pub fn r(&self) -> usize {
        self.n - self.p
    }

    pub fn get(&self, i: usize, j: usize) -> &SuperScalar {
        &self.m[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: SuperScalar) {
        assert_eq!(v.algebra(), self.alg);
        self.m[i * self.n + j] = v;
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut SuperScalar {
        &mut self.m[i * self.n + j]
    }

    pub fn is_odd_index(&self, i: usize) -> bool {
        i >= self.p
    }

    pub fn a(&self) -> &SuperScalar {
        self.get(0, 0)
    }
    pub fn b(&self) -> &SuperScalar {
        self.get(0, 1)
    }
    pub fn c(&self) -> &SuperScalar {
        self.get(1, 0)
    }
    pub fn d(&self) -> &SuperScalar {
        self.get(1, 1)
    }
    pub fn mu(&self, i: usize) -> &SuperScalar {
        self.get(0, 2 + i)
    }
    pub fn nu(&self, i: usize) -> &SuperScalar {
        self.get(1, 2 + i)
    }
    pub fn rho(&self, i: usize) -> &SuperScalar {
        self.get(2 + i, 0)
    }
    pub fn sigma(&self, i: usize) -> &SuperScalar {
        self.get(2 + i, 1)
    }
    pub fn e(&self, i: usize, j: usize) -> &SuperScalar {
        self.get(2 + i, 2 + j)
    }

    fn check(&self, other: &SuperMatrix) -> Result<()> {
        if self.alg != other.alg || self.p != other.p || self.n != other.n {
            return Err(Error::SpecMismatch(
                format!("{} ({}|{})", self.alg, self.p, self.r()),
                format!("{} ({}|{})", other.alg, other.p, other.r()),
            ));
        }
        Ok(())
    }

    pub fn try_matmul(&self, other: &SuperMatrix) -> Result<SuperMatrix> {
        self.check(other)?;
        Ok(self.matmul(other))
    }

    /// Panics on mismatched algebras; use [`try_matmul`](Self::try_matmul) otherwise.
    pub fn matmul(&self, other: &SuperMatrix) -> SuperMatrix {
        self.check(other).expect("matmul");
        let n = self.n;
        let mut out = SuperMatrix::zero_sized(self.alg, self.p, n - self.p);
        for i in 0..n {
            for k in 0..n {
                let x = self.get(i, k);
                if x.is_empty() {
                    continue;
                }
                for j in 0..n {
                    let y = other.get(k, j);
                    if y.is_empty() {
                        continue;
                    }
                    *out.entry_mut(i, j) += &(x * y);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &SuperMatrix) -> SuperMatrix {
        self.check(other).expect("add");
        let mut out = self.clone();
        for (o, x) in out.m.iter_mut().zip(&other.m) {
            *o += x;
        }
        out
    }

    pub fn sub(&self, other: &SuperMatrix) -> SuperMatrix {
        self.check(other).expect("sub");
        let mut out = self.clone();
        for (o, x) in out.m.iter_mut().zip(&other.m) {
            *o -= x;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> SuperMatrix {
        let mut out = self.clone();
        for o in out.m.iter_mut() {
            *o = o.scale(c);
        }
        out
    }

    /// Left multiplication of every entry by a scalar `s` (even `s` commutes).
    pub fn scalar_mul(&self, s: &SuperScalar) -> SuperMatrix {
        let mut out = self.clone();
        for o in out.m.iter_mut() {
            *o = s * o;
        }
        out
    }

    pub fn commutator(&self, other: &SuperMatrix) -> SuperMatrix {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|x| x.max_abs()).fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &SuperMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|x| x.is_empty())
    }

    pub fn prune(&self, tol: f64) -> SuperMatrix {
        let mut out = self.clone();
        for o in out.m.iter_mut() {
            *o = o.prune(tol);
        }
        out
    }

    /// Every entry has the parity dictated by its block.
    pub fn is_even(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                let want = Parity::from_odd(self.is_odd_index(i) != self.is_odd_index(j));
                let x = self.get(i, j);
                x.is_empty() || x.parity() == Some(want)
            })
        })
    }

    /// Numeric body `#`.
    pub fn body(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.get(i, j).body())
    }

    /// Relative body `#'`: kill the parameter ideal.
    pub fn rel_body(&self) -> SuperMatrix {
        self.map(|x| x.rel_body())
    }

    pub fn map(&self, f: impl Fn(&SuperScalar) -> SuperScalar) -> SuperMatrix {
        let mut out = self.clone();
        for o in out.m.iter_mut() {
            *o = f(o);
        }
        out
    }

    /// Numeric matrix of coefficients at one parameter monomial (ζ-free entries).
    pub fn param_component(&self, pkey: u32) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.get(i, j).coeff(pkey, 0))
    }

    /// Inverse of [`param_component`](Self::param_component): `Σ_p p ⊗ M_p`.
    pub fn from_param_components(alg: Algebra, comps: &[(u32, CMat)]) -> SuperMatrix {
        let mut g = SuperMatrix::zero(alg);
        for (p, mat) in comps {
            for i in 0..g.n {
                for j in 0..g.n {
                    g.entry_mut(i, j).add_term(*p, 0, mat[(i, j)]);
                }
            }
        }
        g
    }

    /// Super star: `g*_{ij} = c_{ij} conj(g_{ji})` with `c = i` on the odd blocks.
    pub fn star(&self) -> SuperMatrix {
        let n = self.n;
        let mut out = SuperMatrix::zero_sized(self.alg, self.p, n - self.p);
        for i in 0..n {
            for j in 0..n {
                let c = if self.is_odd_index(i) != self.is_odd_index(j) {
                    I
                } else {
                    ONE
                };
                out.set(i, j, self.get(j, i).conj().scale(c));
            }
        }
        out
    }

    /// The form `I = diag((0 i; -i 0), 1_r)`; it is its own inverse.
    pub fn form(alg: Algebra) -> SuperMatrix {
        let r = alg.r();
        let mut mat = CMat::zeros(2 + r, 2 + r);
        mat[(0, 1)] = I;
        mat[(1, 0)] = -I;
        for i in 0..r {
            mat[(2 + i, 2 + i)] = ONE;
        }
        SuperMatrix::from_numeric(alg, &mat)
    }

    /// Residuals of the two defining equations of `G`.
    pub fn membership(&self, tol: f64) -> MembershipReport {
        let form = SuperMatrix::form(self.alg);
        let unitary = self.matmul(&form).matmul(&self.star()).dist(&form);
        let (ber, ber_error) = match self.berezinian() {
            Ok(b) => (b.dist(&SuperScalar::one(self.alg)), None),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        let even = self.is_even();
        MembershipReport {
            unitary_residual: unitary,
            ber_residual: ber,
            even,
            ber_error,
            member: even && unitary <= tol && ber <= tol,
        }
    }

    pub fn is_member(&self, tol: f64) -> bool {
        self.membership(tol).member
    }

    /// Berezinian `det(A - B E⁻¹ C) / det E`.
    pub fn berezinian(&self) -> Result<SuperScalar> {
        let p = self.p;
        let q = self.r();
        let idx = |i: usize, j: usize| self.get(i, j).clone();
        let e: Vec<Vec<SuperScalar>> = (0..q)
            .map(|i| (0..q).map(|j| idx(p + i, p + j)).collect())
            .collect();
        let (e_inv, det_e) = even_inverse_det(&e, self.alg)
            .map_err(|_| Error::SingularBlock("E block has singular body".into()))?;
        let mut schur: Vec<Vec<SuperScalar>> = (0..p)
            .map(|i| (0..p).map(|j| idx(i, j)).collect())
            .collect();
        for (i, row) in schur.iter_mut().enumerate() {
            for (j, s) in row.iter_mut().enumerate() {
                for k in 0..q {
                    if self.get(i, p + k).is_empty() {
                        continue;
                    }
                    for l in 0..q {
                        if self.get(p + l, j).is_empty() {
                            continue;
                        }
                        let t = &(self.get(i, p + k) * &e_inv[k][l]) * self.get(p + l, j);
                        *s -= &t;
                    }
                }
            }
        }
        let det_a = even_det(&schur, self.alg);
        Ok(&det_a * &det_e.invert_unit()?)
    }

    /// General inverse via `g = B(1 + B⁻¹N)` with numeric body `B`.
    pub fn inverse(&self) -> Result<SuperMatrix> {
        let body = self.body();
        let binv = body
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularBlock("body is singular".into()))?;
        let binv_m = SuperMatrix::from_numeric_sized(self.alg, self.p, &binv);
        let mut nil = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                let x = nil.get(i, j).nilpotent_part();
                nil.set(i, j, x);
            }
        }
        // (1 + B⁻¹N)⁻¹ = Σ (−B⁻¹N)^k terminates by nilpotency
        let t = binv_m.matmul(&nil).scale(-ONE);
        let id = SuperMatrix::identity_sized(self.alg, self.p, self.r());
        let mut sum = id.clone();
        let mut pow = id;
        for _ in 0..=self.alg.nil_bound() {
            pow = pow.matmul(&t);
            if pow.is_zero() {
                break;
            }
            sum = sum.add(&pow);
        }
        Ok(sum.matmul(&binv_m))
    }

    /// `g⁻¹ = I g* I` for group elements.
    pub fn group_inverse(&self) -> SuperMatrix {
        let form = SuperMatrix::form(self.alg);
        form.matmul(&self.star()).matmul(&form)
    }

    pub fn identity_sized(alg: Algebra, p: usize, q: usize) -> SuperMatrix {
        let mut g = SuperMatrix::zero_sized(alg, p, q);
        for i in 0..p + q {
            g.set(i, i, SuperScalar::one(alg));
        }
        g
    }

    pub fn from_numeric_sized(alg: Algebra, p: usize, mat: &CMat) -> SuperMatrix {
        let n = mat.nrows();
        let mut g = SuperMatrix::zero_sized(alg, p, n - p);
        for i in 0..n {
            for j in 0..n {
                g.set(i, j, SuperScalar::constant(alg, mat[(i, j)]));
            }
        }
        g
    }

    pub fn powi(&self, e: i64) -> Result<SuperMatrix> {
        let base = if e < 0 {
            self.inverse()?
        } else {
            self.clone()
        };
        let mut k = e.unsigned_abs();
        let mut out = SuperMatrix::identity_sized(self.alg, self.p, self.r());
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                out = out.matmul(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.matmul(&sq);
            }
        }
        Ok(out)
    }

    /// Exponential series with scaling and squaring on the body norm.
    pub fn exp(&self) -> SuperMatrix {
        let body_norm = self.body().norm();
        let mut s = 0u32;
        while body_norm / f64::from(1u32 << s) > 0.5 && s < 30 {
            s += 1;
        }
        let x = self.scale(Complex64::new(1.0 / f64::from(1u32 << s), 0.0));
        let id = SuperMatrix::identity_sized(self.alg, self.p, self.r());
        let mut sum = id.clone();
        let mut term = id;
        for k in 1..=60 {
            term = term.matmul(&x).scale(Complex64::new(1.0 / k as f64, 0.0));
            let tn = term.max_abs();
            sum = sum.add(&term);
            if tn == 0.0 || tn < 1e-17 * sum.max_abs() {
                break;
            }
        }
        for _ in 0..s {
            sum = sum.matmul(&sum);
        }
        sum
    }

    /// `exp(t x)`.
    pub fn exp_point(&self, t: f64) -> SuperMatrix {
        self.scale(Complex64::new(t, 0.0)).exp()
    }

    /// The unique `x` with `#'(x) = base` and `exp(x) = self`, by chord Newton
    /// on the parameter filtration with the differential frozen at `base`.
    pub fn log_point(&self, base: &SuperMatrix) -> Result<SuperMatrix> {
        let rb = self.rel_body();
        let eb = base.exp();
        let mismatch = rb.dist(&eb);
        if mismatch > 1e-9 * (1.0 + eb.max_abs()) {
            return Err(Error::InconsistentBase(mismatch));
        }
        let n = self.n;
        let x0 = base.body();
        let dexp = dexp_operator(&x0);
        let svd = dexp.clone().svd(false, false);
        let smin = svd.singular_values.min();
        if smin < 1e-9 {
            return Err(Error::NonInvertibleDifferential(format!(
                "differential of exp at base has singular value {smin:.3e}"
            )));
        }
        let lu = dexp.lu();
        let spec = self.alg.param;
        let mut x = base.clone();
        for _ in 0..(spec.nilpotency() + 8) {
            // residual exp(x)⁻¹ g − 1 lies in the parameter ideal
            let res = x
                .scale(-ONE)
                .exp()
                .matmul(self)
                .sub(&SuperMatrix::identity_sized(self.alg, self.p, self.r()));
            if res.max_abs() < 1e-15 {
                break;
            }
            let mut comps = Vec::new();
            for pk in spec.monomials().into_iter().filter(|&p| p != 0) {
                let rp = res.param_component(pk);
                if rp.norm() == 0.0 {
                    continue;
                }
                let rhs = DMatrix::from_iterator(n * n, 1, rp.iter().copied());
                let sol = lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::NonInvertibleDifferential("LU solve failed".into()))?;
                comps.push((pk, CMat::from_iterator(n, n, sol.iter().copied())));
            }
            let delta = SuperMatrix::from_param_components(self.alg, &comps);
            x = x.add(&delta);
        }
        Ok(x)
    }

    /// Image in `Aut H = PSL(2,R)`, normalized so the first nonzero entry of the
    /// bottom row is positive (or `d > 0` when `c = 0`).
    pub fn body_to_aut_h(&self, tol: f64) -> Result<[[f64; 2]; 2]> {
        let body = self.body();
        let alg = self.alg;
        let bm = SuperMatrix::from_numeric(alg, &body);
        let rep = bm.membership(tol);
        if !rep.member {
            return Err(Error::Domain(format!(
                "body is not in G: residuals {:.3e}, {:.3e}",
                rep.unitary_residual, rep.ber_residual
            )));
        }
        let top = body.view((0, 0), (2, 2)).into_owned();
        let eps = top.determinant().sqrt();
        let h = top / eps;
        if h.iter().any(|x| x.im.abs() > tol.max(1e-12) * 10.0) {
            return Err(Error::Domain("upper block is not a unit multiple of a real matrix".into()));
        }
        let mut out = [[h[(0, 0)].re, h[(0, 1)].re], [h[(1, 0)].re, h[(1, 1)].re]];
        let flip = if out[1][0].abs() > 1e-12 {
            out[1][0] < 0.0
        } else {
            out[1][1] < 0.0
        };
        if flip {
            for row in out.iter_mut() {
                for x in row.iter_mut() {
                    *x = -*x;
                }
            }
        }
        Ok(out)
    }

    pub fn to_file(&self) -> MatrixFile {
        assert_eq!(self.p, 2, "file format holds (2|r) matrices");
        let rec = |x: &SuperScalar| x.to_records();
        let r = self.r();
        MatrixFile {
            r,
            param_spec: self.alg.param,
            blocks: Blocks {
                a: rec(self.a()),
                b: rec(self.b()),
                c: rec(self.c()),
                d: rec(self.d()),
                mu: (0..r).map(|i| rec(self.mu(i))).collect(),
                nu: (0..r).map(|i| rec(self.nu(i))).collect(),
                rho: (0..r).map(|i| rec(self.rho(i))).collect(),
                sigma: (0..r).map(|i| rec(self.sigma(i))).collect(),
                e: (0..r)
                    .map(|i| (0..r).map(|j| rec(self.e(i, j))).collect())
                    .collect(),
            },
        }
    }

    pub fn from_file(f: &MatrixFile) -> Result<SuperMatrix> {
        let alg = Algebra::new(f.param_spec, f.r)?;
        let r = f.r;
        let b = &f.blocks;
        let len_ok = b.mu.len() == r
            && b.nu.len() == r
            && b.rho.len() == r
            && b.sigma.len() == r
            && b.e.len() == r
            && b.e.iter().all(|row| row.len() == r);
        if !len_ok {
            return Err(Error::Format(format!("block sizes do not match r = {r}")));
        }
        let s = |recs: &[ScalarRecord]| SuperScalar::from_records(alg, recs);
        let mut g = SuperMatrix::zero(alg);
        g.set(0, 0, s(&b.a)?);
        g.set(0, 1, s(&b.b)?);
        g.set(1, 0, s(&b.c)?);
        g.set(1, 1, s(&b.d)?);
        for i in 0..r {
            g.set(0, 2 + i, s(&b.mu[i])?);
            g.set(1, 2 + i, s(&b.nu[i])?);
            g.set(2 + i, 0, s(&b.rho[i])?);
            g.set(2 + i, 1, s(&b.sigma[i])?);
            for j in 0..r {
                g.set(2 + i, 2 + j, s(&b.e[i][j])?);
            }
        }
        if !g.is_even() {
            return Err(Error::Format("matrix is not even".into()));
        }
        Ok(g)
    }
}

/// Outcome of [`SuperMatrix::membership`].
#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub unitary_residual: f64,
    pub ber_residual: f64,
    pub even: bool,
    pub ber_error: Option<String>,
    pub member: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Blocks {
    pub a: Vec<ScalarRecord>,
    pub b: Vec<ScalarRecord>,
    pub c: Vec<ScalarRecord>,
    pub d: Vec<ScalarRecord>,
    pub mu: Vec<Vec<ScalarRecord>>,
    pub nu: Vec<Vec<ScalarRecord>>,
    pub rho: Vec<Vec<ScalarRecord>>,
    pub sigma: Vec<Vec<ScalarRecord>>,
    #[serde(rename = "E")]
    pub e: Vec<Vec<Vec<ScalarRecord>>>,
}

/// Serialized form of a `(2|r)` matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub r: usize,
    pub param_spec: ParamSpec,
    pub blocks: Blocks,
}

/// `(1 - e^{-ad x})/ad x` as an `n²×n²` matrix acting on column-major vec(M).
pub fn dexp_operator(x: &CMat) -> CMat {
    let n = x.nrows();
    let id = CMat::identity(n, n);
    // ad_x vec(M) = (I ⊗ x − xᵀ ⊗ I) vec(M) in column-major convention
    let ad = id.kronecker(x) - x.transpose().kronecker(&id);
    let neg_ad = -ad;
    let mut sum = CMat::identity(n * n, n * n);
    let mut term = CMat::identity(n * n, n * n);
    let mut fact = 1.0;
    for k in 1..200 {
        term = &term * &neg_ad;
        fact *= (k + 1) as f64;
        let add = term.scale(1.0 / fact);
        let norm = add.norm();
        sum += add;
        if norm < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Determinant of a matrix with pairwise commuting (even) entries.
pub fn even_det(m: &[Vec<SuperScalar>], alg: Algebra) -> SuperScalar {
    match m.len() {
        0 => SuperScalar::one(alg),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => even_inverse_det(m, alg)
            .map(|(_, d)| d)
            .unwrap_or_else(|_| SuperScalar::zero(alg)),
    }
}

/// Inverse and determinant by Gauss–Jordan with pivots chosen on the body.
pub fn even_inverse_det(
    m: &[Vec<SuperScalar>],
    alg: Algebra,
) -> Result<(Vec<Vec<SuperScalar>>, SuperScalar)> {
    let n = m.len();
    let mut a: Vec<Vec<SuperScalar>> = m.to_vec();
    let mut inv: Vec<Vec<SuperScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        SuperScalar::one(alg)
                    } else {
                        SuperScalar::zero(alg)
                    }
                })
                .collect()
        })
        .collect();
    let mut det = SuperScalar::one(alg);
    let scale = m
        .iter()
        .flatten()
        .map(|x| x.body().norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|i| (i, a[i][col].body().norm()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= 1e-14 * scale {
            return Err(Error::SingularBlock(format!("pivot {col} has zero body")));
        }
        if piv != col {
            a.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let pv = a[col][col].clone();
        det = &det * &pv;
        let pinv = pv.invert_unit()?;
        for j in 0..n {
            a[col][j] = &pinv * &a[col][j];
            inv[col][j] = &pinv * &inv[col][j];
        }
        for i in 0..n {
            if i == col || a[i][col].is_empty() {
                continue;
            }
            let f = a[i][col].clone();
            for j in 0..n {
                let t = &f * &a[col][j];
                a[i][j] -= &t;
                let t = &f * &inv[col][j];
                inv[i][j] -= &t;
            }
        }
    }
    Ok((inv, det))
}

/// Elements of the super Lie algebra `g = g_0 ⊕ g_1` and its real bases.
pub mod lie {
    use super::*;

    /// `g_0` element `((a + ½trD, b), (c, −a + ½trD)) ⊕ D`; entries are scalars of
    /// the algebra (so `P`-coefficients are allowed), `D` anti-Hermitian.
    pub fn even(
        alg: Algebra,
        a: &SuperScalar,
        b: &SuperScalar,
        c: &SuperScalar,
        dmat: &[Vec<SuperScalar>],
    ) -> SuperMatrix {
        let r = alg.r();
        let mut x = SuperMatrix::zero(alg);
        let mut tr = SuperScalar::zero(alg);
        for (i, row) in dmat.iter().enumerate().take(r) {
            tr += &row[i];
        }
        let half = tr.scale_re(0.5);
        x.set(0, 0, a + &half);
        x.set(0, 1, b.clone());
        x.set(1, 0, c.clone());
        x.set(1, 1, &half - a);
        for i in 0..r {
            for j in 0..r {
                x.set(2 + i, 2 + j, dmat[i][j].clone());
            }
        }
        x
    }

    /// `g_1` element: top right rows `(v*; −u*)`, bottom left columns `(u v)`.
    pub fn odd(alg: Algebra, u: &[SuperScalar], v: &[SuperScalar]) -> SuperMatrix {
        let r = alg.r();
        let mut x = SuperMatrix::zero(alg);
        for i in 0..r {
            x.set(0, 2 + i, v[i].conj());
            x.set(1, 2 + i, -u[i].conj());
            x.set(2 + i, 0, u[i].clone());
            x.set(2 + i, 1, v[i].clone());
        }
        x
    }

    /// Real basis of `g_0` as numeric matrices: `3 + r²` elements.
    pub fn basis_even(r: usize) -> Vec<CMat> {
        let n = 2 + r;
        let mut out = Vec::new();
        let unit = |i: usize, j: usize, c: Complex64| {
            let mut m = CMat::zeros(n, n);
            m[(i, j)] = c;
            m
        };
        out.push(unit(0, 0, ONE) - unit(1, 1, ONE));
        out.push(unit(0, 1, ONE));
        out.push(unit(1, 0, ONE));
        let half_i = Complex64::new(0.0, 0.5);
        for j in 0..r {
            // i E_jj with the ½tr D shift on the even block
            out.push(unit(2 + j, 2 + j, I) + unit(0, 0, half_i) + unit(1, 1, half_i));
        }
        for j in 0..r {
            for k in j + 1..r {
                out.push(unit(2 + j, 2 + k, ONE) - unit(2 + k, 2 + j, ONE));
                out.push(unit(2 + j, 2 + k, I) + unit(2 + k, 2 + j, I));
            }
        }
        out
    }

    /// Real basis of `g_1` (coefficient matrices; pair with an odd parameter): `4r`.
    pub fn basis_odd(r: usize) -> Vec<CMat> {
        let n = 2 + r;
        let mut out = Vec::new();
        for which in 0..2 {
            for j in 0..r {
                for c in [ONE, I] {
                    let mut m = CMat::zeros(n, n);
                    // which = 0: u = c e_j; which = 1: v = c e_j
                    if which == 0 {
                        m[(1, 2 + j)] = -c.conj();
                        m[(2 + j, 0)] = c;
                    } else {
                        m[(0, 2 + j)] = c.conj();
                        m[(2 + j, 1)] = c;
                    }
                    out.push(m);
                }
            }
        }
        out
    }

    /// Projection of a numeric `g_0` element to real coordinates in [`basis_even`].
    pub fn coords_even(x: &CMat, r: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 + r * r);
        let half_tr: Complex64 = (0..r).map(|j| x[(2 + j, 2 + j)]).sum::<Complex64>() * 0.5;
        out.push((x[(0, 0)] - half_tr).re);
        out.push(x[(0, 1)].re);
        out.push(x[(1, 0)].re);
        for j in 0..r {
            out.push(x[(2 + j, 2 + j)].im);
        }
        for j in 0..r {
            for k in j + 1..r {
                out.push(x[(2 + j, 2 + k)].re);
                out.push(x[(2 + j, 2 + k)].im);
            }
        }
        out
    }

    /// Projection of a numeric `g_1` element to real coordinates in [`basis_odd`].
    pub fn coords_odd(x: &CMat, r: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * r);
        for col in 0..2 {
            for j in 0..r {
                let c = x[(2 + j, col)];
                out.push(c.re);
                out.push(c.im);
            }
        }
        out
    }

    /// Residual of the tangent equation `X I + I X* = 0` and of `str X = 0`.
    pub fn tangent_residual(x: &SuperMatrix) -> f64 {
        let form = SuperMatrix::form(x.algebra());
        let t = x.matmul(&form).add(&form.matmul(&x.star())).max_abs();
        let mut str_ = SuperScalar::zero(x.algebra());
        for i in 0..x.size() {
            if x.is_odd_index(i) {
                str_ -= x.get(i, i);
            } else {
                str_ += x.get(i, i);
            }
        }
        t.max(str_.max_abs())
    }

    /// `Σ_p p ⊗ X_p` with `X_p` drawn from `g_0` (even `p`) or `g_1` (odd `p`).
    pub fn random_param_element<R: Rng>(
        rng: &mut R,
        alg: Algebra,
        scale: f64,
        include_body: bool,
    ) -> SuperMatrix {
        let spec = alg.param;
        let r = alg.r();
        let be = basis_even(r);
        let bo = basis_odd(r);
        let mut comps = Vec::new();
        for p in spec.monomials() {
            if p == 0 && !include_body {
                continue;
            }
            let basis = if spec.is_odd(p) { &bo } else { &be };
            let mut m = CMat::zeros(2 + r, 2 + r);
            for b in basis {
                m += b.scale(rng.gen_range(-scale..scale));
            }
            comps.push((p, m));
        }
        SuperMatrix::from_param_components(alg, &comps)
    }
}

/// Random group elements for property sweeps.
pub mod random {
    use super::*;

    pub fn unitary<R: Rng>(rng: &mut R, r: usize) -> CMat {
        if r == 0 {
            return CMat::zeros(0, 0);
        }
        let g = CMat::from_fn(r, r, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        g.qr().q()
    }

    pub fn sl2r<R: Rng>(rng: &mut R) -> CMat {
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let lam: f64 = rng.gen_range(0.5..2.0);
        let t: f64 = rng.gen_range(-1.5..1.5);
        let rot = CMat::from_row_slice(
            2,
            2,
            &[
                th.cos().into(),
                th.sin().into(),
                (-th.sin()).into(),
                th.cos().into(),
            ],
        );
        let dil = CMat::from_row_slice(2, 2, &[lam.into(), ZERO, ZERO, (1.0 / lam).into()]);
        let tr = CMat::from_row_slice(2, 2, &[ONE, t.into(), ZERO, ONE]);
        rot * dil * tr
    }

    /// Ordinary element `diag(ε h, E)` with `ε² = det E`.
    pub fn body_element<R: Rng>(rng: &mut R, alg: Algebra) -> SuperMatrix {
        let e = unitary(rng, alg.r());
        let det = if alg.r() == 0 { ONE } else { e.determinant() };
        let eps = det.sqrt();
        SuperMatrix::block_diag(alg, &(sl2r(rng) * eps), &e)
    }

    /// `exp(X) · diag(ε h, E)` with `X ∈ (I ⊗ g)_0`.
    pub fn point<R: Rng>(rng: &mut R, alg: Algebra, scale: f64) -> SuperMatrix {
        let x = lie::random_param_element(rng, alg, scale, false);
        x.exp().matmul(&body_element(rng, alg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alg(param: ParamSpec, r: usize) -> Algebra {
        Algebra::new(param, r).unwrap()
    }

    #[test]
    fn lie_basis_is_tangent() {
        let a = alg(ParamSpec::Exterior { m: 2 }, 3);
        for b in lie::basis_even(3) {
            let x = SuperMatrix::from_param_components(a, &[(0, b)]);
            assert!(lie::tangent_residual(&x) < 1e-15);
        }
        for b in lie::basis_odd(3) {
            let x = SuperMatrix::from_param_components(a, &[(1, b)]);
            assert!(lie::tangent_residual(&x) < 1e-15);
        }
    }

    #[test]
    fn lie_coordinates_roundtrip() {
        let r = 2;
        for (k, b) in lie::basis_even(r).iter().enumerate() {
            let c = lie::coords_even(b, r);
            for (j, v) in c.iter().enumerate() {
                assert!((v - if j == k { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        for (k, b) in lie::basis_odd(r).iter().enumerate() {
            let c = lie::coords_odd(b, r);
            for (j, v) in c.iter().enumerate() {
                assert!((v - if j == k { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn random_points_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (param, r) in [
            (ParamSpec::Exterior { m: 2 }, 1),
            (ParamSpec::Polynomial { n: 3 }, 3),
        ] {
            let a = alg(param, r);
            for _ in 0..5 {
                let g = random::point(&mut rng, a, 0.7);
                let rep = g.membership(1e-10);
                assert!(rep.member, "{rep:?}");
                assert!(g.matmul(&g.group_inverse()).dist(&SuperMatrix::identity(a)) < 1e-12);
            }
        }
    }

    #[test]
    fn berezinian_block_diag_and_scalar() {
        let a = alg(ParamSpec::Trivial, 1);
        let two = CMat::from_row_slice(2, 2, &[2.0.into(), ZERO, ZERO, 2.0.into()]);
        let g = SuperMatrix::block_diag(a, &two, &CMat::identity(1, 1));
        assert!((g.berezinian().unwrap().body() - Complex64::new(4.0, 0.0)).norm() < 1e-15);
        assert!(!g.is_member(1e-10));
        assert!(SuperMatrix::identity(a).is_member(0.0));
    }

    #[test]
    fn berezinian_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = alg(ParamSpec::Exterior { m: 2 }, 3);
        for _ in 0..5 {
            // leave the group: scale the body to get Ber ≠ 1
            let g = random::point(&mut rng, a, 0.5)
                .matmul(&SuperMatrix::from_numeric(a, &CMat::from_diagonal(
                    &nalgebra::DVector::from_vec(vec![2.0.into(), 1.0.into(), 1.0.into(), 0.5.into(), 1.0.into()]),
                )));
            let h = random::point(&mut rng, a, 0.5);
            let lhs = g.matmul(&h).berezinian().unwrap();
            let rhs = &g.berezinian().unwrap() * &h.berezinian().unwrap();
            assert!(lhs.dist(&rhs) < 1e-12);
        }
    }

    #[test]
    fn exp_log_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = alg(ParamSpec::Exterior { m: 2 }, 1);
        let mut base = CMat::zeros(3, 3);
        base[(0, 1)] = 12.0.into();
        let base = SuperMatrix::from_numeric(a, &base);
        let delta = lie::random_param_element(&mut rng, a, 0.3, false);
        let x = base.add(&delta);
        let g = x.exp();
        let back = g.log_point(&base).unwrap();
        assert!(back.dist(&x) < 1e-12, "{}", back.dist(&x));
    }

    #[test]
    fn log_rejects_wrong_base() {
        let a = alg(ParamSpec::Polynomial { n: 2 }, 1);
        let g = SuperMatrix::identity(a);
        let mut b = CMat::zeros(3, 3);
        b[(0, 1)] = ONE;
        assert!(matches!(
            g.log_point(&SuperMatrix::from_numeric(a, &b)),
            Err(Error::InconsistentBase(_))
        ));
        let mut b = CMat::zeros(3, 3);
        b[(2, 2)] = Complex64::new(0.0, std::f64::consts::TAU);
        let g = SuperMatrix::from_numeric(a, &b).exp();
        assert!(matches!(
            g.log_point(&SuperMatrix::from_numeric(a, &b)),
            Err(Error::NonInvertibleDifferential(_))
        ));
    }

    #[test]
    fn aut_h_images() {
        let a = alg(ParamSpec::Trivial, 1);
        let w = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        let r = CMat::from_row_slice(2, 2, &[ZERO, ONE, -ONE, -ONE]) * w;
        let rhat = SuperMatrix::block_diag(a, &r, &CMat::from_element(1, 1, w.inv()));
        assert_eq!(rhat.body_to_aut_h(1e-12).unwrap(), [[-0.0, -1.0], [1.0, 1.0]]);
        let s = CMat::from_row_slice(2, 2, &[ZERO, I, -I, ZERO]);
        let shat = SuperMatrix::block_diag(a, &s, &CMat::from_element(1, 1, -ONE));
        let sq = shat.matmul(&shat).body_to_aut_h(1e-12).unwrap();
        assert_eq!(sq, [[1.0, 0.0], [0.0, 1.0]]);
        let g0 = SuperMatrix::block_diag(a, &CMat::identity(2, 2).scale(-1.0), &CMat::identity(1, 1));
        assert_eq!(g0.body_to_aut_h(1e-12).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn matrix_file_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = alg(ParamSpec::Exterior { m: 2 }, 2);
        let g = random::point(&mut rng, a, 0.5);
        let text = serde_json::to_string(&g.to_file()).unwrap();
        let back = SuperMatrix::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
