//! Deformations of lattices over a parameter algebra: `H¹(Γ, g)` by Fox
//! calculus and by centralizer formulas, infinitesimal classes for `ℐ² = 0`,
//! the parabolic normal form at `i∞` with its Dirichlet series `(S_n, D_n)`,
//! the logarithms `χ_n`, `χ̃_n` and the intertwiners `Ω_n`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{Algebra, ParamSpec, SuperScalar};
use crate::lattices::{Family, Lattice, LatticeFile, PointKind, Word};
use crate::moebius::{act, SuperPoint};
use crate::supermatrix::{lie, CMat, MatrixFile, SuperMatrix};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub type RMat = DMatrix<f64>;

/// Relative singular-value threshold for ranks.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LieParity {
    Even,
    Odd,
}

fn basis(r: usize, par: LieParity) -> Vec<CMat> {
    match par {
        LieParity::Even => lie::basis_even(r),
        LieParity::Odd => lie::basis_odd(r),
    }
}

fn coords(x: &CMat, r: usize, par: LieParity) -> Vec<f64> {
    match par {
        LieParity::Even => lie::coords_even(x, r),
        LieParity::Odd => lie::coords_odd(x, r),
    }
}

/// Lie algebra element with the given real coordinates.
pub fn from_coords(c: &[f64], r: usize, par: LieParity) -> CMat {
    let n = 2 + r;
    basis(r, par)
        .iter()
        .zip(c)
        .fold(CMat::zeros(n, n), |acc, (b, &x)| acc + b.scale(x))
}

/// Real matrix of `Ad_g` on `g_0` or `g_1` in the coordinates of
/// [`lie::basis_even`] / [`lie::basis_odd`].
pub fn ad_matrix(g: &CMat, par: LieParity) -> Result<RMat> {
    let r = g.nrows() - 2;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("group element not invertible".into()))?;
    let b = basis(r, par);
    let d = b.len();
    let mut out = RMat::zeros(d, d);
    for (j, x) in b.iter().enumerate() {
        let y = g * x * &ginv;
        for (i, c) in coords(&y, r, par).into_iter().enumerate() {
            out[(i, j)] = c;
        }
    }
    Ok(out)
}

fn singular_values(m: &RMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

fn threshold(sv: &[f64]) -> f64 {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    (RANK_TOL * smax).max(1e-12)
}

/// Numerical rank by singular-value thresholding.
pub fn rank(m: &RMat) -> usize {
    let sv = singular_values(m);
    let t = threshold(&sv);
    sv.iter().filter(|&&s| s > t).count()
}

/// Rank recomputed in two random bases of source and target; disagreement
/// means the spectrum has no clear gap.
pub fn rank_checked(m: &RMat, rng: &mut ChaCha8Rng) -> Result<usize> {
    let r0 = rank(m);
    for _ in 0..2 {
        let p = RMat::from_fn(m.nrows(), m.nrows(), |_, _| rng.gen_range(-1.0..1.0));
        let q = RMat::from_fn(m.ncols(), m.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        let r1 = rank(&(&p * m * &q));
        if r1 != r0 {
            return Err(Error::Numeric(format!(
                "rank {r0} changes to {r1} under a change of basis"
            )));
        }
    }
    Ok(r0)
}

/// Orthonormal basis of the kernel, as columns.
pub fn kernel(m: &RMat) -> RMat {
    let n = m.ncols();
    if n == 0 {
        return RMat::zeros(0, 0);
    }
    // pad so the SVD returns a full right factor
    let rows = m.nrows().max(n);
    let mut a = RMat::zeros(rows, n);
    a.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let t = threshold(&sv);
    let cols: Vec<_> = (0..n)
        .filter(|&i| sv[i] <= t)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        RMat::zeros(n, 0)
    } else {
        RMat::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space.
pub fn column_space(m: &RMat) -> RMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return RMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let t = threshold(&sv);
    let cols: Vec<_> = (0..sv.len()).filter(|&i| sv[i] > t).map(|i| u.column(i).into_owned()).collect();
    if cols.is_empty() {
        RMat::zeros(m.nrows(), 0)
    } else {
        RMat::from_columns(&cols)
    }
}

fn hstack(parts: &[&RMat]) -> RMat {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = RMat::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        out.view_mut((0, c), (p.nrows(), p.ncols())).copy_from(p);
        c += p.ncols();
    }
    out
}

fn vstack(parts: &[RMat]) -> RMat {
    let cols = parts.first().map(|p| p.ncols()).unwrap_or(0);
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = RMat::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        out.view_mut((r, 0), (p.nrows(), cols)).copy_from(p);
        r += p.nrows();
    }
    out
}

/// Cocycles, coboundaries and `H¹` of one parity.
#[derive(Clone, Debug, Serialize)]
pub struct H1Part {
    pub parity: LieParity,
    pub dim_g: usize,
    pub dim_z1: usize,
    pub dim_b1: usize,
    pub dim_h1: usize,
    /// Largest `|F·b|` over coboundaries `b`: they must be cocycles.
    pub coboundary_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct H1Report {
    pub generators: Vec<String>,
    pub even: H1Part,
    pub odd: H1Part,
}

impl H1Report {
    pub fn dims(&self) -> (usize, usize) {
        (self.even.dim_h1, self.odd.dim_h1)
    }
}

fn body_generators(lat: &Lattice) -> Vec<(String, CMat)> {
    lat.generators.iter().map(|g| (g.name.clone(), g.matrix.body())).collect()
}

/// Fox derivative of all relations: rows relation blocks, columns generator
/// blocks. `x` contributes `Ad_prefix`, `x⁻¹` contributes `−Ad_{prefix·x⁻¹}`.
pub fn fox_matrix(lat: &Lattice, par: LieParity) -> Result<RMat> {
    let gens = body_generators(lat);
    let r = lat.r();
    let d = basis(r, par).len();
    let ng = gens.len();
    let index = |name: &str| {
        gens.iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::Format(format!("unknown generator {name}")))
    };
    let mut blocks = Vec::new();
    for w in &lat.relations {
        let mut f = RMat::zeros(d, ng * d);
        let mut prefix = CMat::identity(2 + r, 2 + r);
        for (name, e) in w {
            let i = index(name)?;
            let g = &gens[i].1;
            let ginv = g.clone().try_inverse().ok_or_else(|| Error::Numeric("singular generator".into()))?;
            for _ in 0..e.unsigned_abs() {
                if *e > 0 {
                    let ad = ad_matrix(&prefix, par)?;
                    let mut blk = f.view_mut((0, i * d), (d, d));
                    blk += ad;
                    prefix = &prefix * g;
                } else {
                    prefix = &prefix * &ginv;
                    let ad = ad_matrix(&prefix, par)?;
                    let mut blk = f.view_mut((0, i * d), (d, d));
                    blk -= ad;
                }
            }
        }
        blocks.push(f);
    }
    Ok(vstack(&blocks))
}

/// `ξ ↦ (ξ − Ad_{g_i} ξ)_i`.
pub fn coboundary_matrix(lat: &Lattice, par: LieParity) -> Result<RMat> {
    let gens = body_generators(lat);
    let d = basis(lat.r(), par).len();
    let blocks = gens
        .iter()
        .map(|(_, g)| Ok(RMat::identity(d, d) - ad_matrix(g, par)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(vstack(&blocks))
}

fn h1_part(lat: &Lattice, par: LieParity, rng: &mut ChaCha8Rng) -> Result<H1Part> {
    let f = fox_matrix(lat, par)?;
    let b = coboundary_matrix(lat, par)?;
    let ncols = f.ncols();
    let dim_z1 = ncols - rank_checked(&f, rng)?;
    let dim_b1 = rank_checked(&b, rng)?;
    let coboundary_residual = if f.nrows() == 0 { 0.0 } else { (&f * &b).amax() };
    Ok(H1Part {
        parity: par,
        dim_g: b.ncols(),
        dim_z1,
        dim_b1,
        dim_h1: dim_z1 - dim_b1,
        coboundary_residual,
    })
}

/// `dim H¹(Γ, g_0)` and `dim H¹(Γ, g_1)` from the presentation.
pub fn h1_fox(lat: &Lattice, seed: u64) -> Result<H1Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(H1Report {
        generators: lat.generators.iter().map(|g| g.name.clone()).collect(),
        even: h1_part(lat, LieParity::Even, &mut rng)?,
        odd: h1_part(lat, LieParity::Odd, &mut rng)?,
    })
}

/// Basis (columns) of the centralizer of `gs` in `g_0` or `g_1`.
pub fn centralizer(gs: &[CMat], r: usize, par: LieParity) -> Result<RMat> {
    let d = basis(r, par).len();
    if gs.is_empty() {
        return Ok(RMat::identity(d, d));
    }
    let blocks = gs
        .iter()
        .map(|g| Ok(ad_matrix(g, par)? - RMat::identity(d, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(kernel(&vstack(&blocks)))
}

/// `dim 𝔷_{u(r)}(U_1, …)` for unitary `r × r` matrices.
pub fn unitary_centralizer_dim(us: &[CMat]) -> usize {
    let r = match us.first() {
        Some(u) => u.nrows(),
        None => return 0,
    };
    let mut basis = Vec::new();
    for j in 0..r {
        let mut m = CMat::zeros(r, r);
        m[(j, j)] = I;
        basis.push(m);
        for k in j + 1..r {
            let mut a = CMat::zeros(r, r);
            a[(j, k)] = ONE;
            a[(k, j)] = -ONE;
            basis.push(a);
            let mut s = CMat::zeros(r, r);
            s[(j, k)] = I;
            s[(k, j)] = I;
            basis.push(s);
        }
    }
    let n = basis.len();
    let mut rows = Vec::new();
    for u in us {
        let uinv = u.adjoint();
        let mut m = RMat::zeros(2 * r * r, n);
        for (c, x) in basis.iter().enumerate() {
            let y = u * x * &uinv - x;
            for (i, v) in y.iter().enumerate() {
                m[(2 * i, c)] = v.re;
                m[(2 * i + 1, c)] = v.im;
            }
        }
        rows.push(m);
    }
    n - rank(&vstack(&rows))
}

fn gen_body(lat: &Lattice, name: &str) -> Result<CMat> {
    Ok(lat.generator(name)?.matrix.body())
}

/// `H¹ ≅ 𝔷(γ₀) / (𝔷(γ₀, R̂) + 𝔷(γ₀, Ŝ))` for example-⟨i⟩ lattices.
pub fn h1_dims_example_i(lat: &Lattice) -> Result<(usize, usize)> {
    if !matches!(lat.family, Family::ExampleI { .. } | Family::EmbeddedSl2) {
        return Err(Error::Precondition("not an example-⟨i⟩ lattice".into()));
    }
    let r = lat.r();
    let g0 = lat.gamma0.body();
    let rh = gen_body(lat, "Rhat")?;
    let sh = gen_body(lat, "Shat")?;
    let dim = |par| -> Result<usize> {
        let z0 = centralizer(&[g0.clone()], r, par)?;
        let zr = centralizer(&[g0.clone(), rh.clone()], r, par)?;
        let zs = centralizer(&[g0.clone(), sh.clone()], r, par)?;
        Ok(z0.ncols() - rank(&hstack(&[&zr, &zs])))
    };
    Ok((dim(LieParity::Even)?, dim(LieParity::Odd)?))
}

/// Example ⟨ii⟩ closed forms: with `m ≥ 1` punctures
/// `(2g + m − 2)·sdim 𝔷(γ₀) + sdim 𝔷(γ₀, all generators)`; for closed surfaces
/// `(2(g−1)(3 + r²) + 2 dim 𝔷_{u(r)}(E_k, F_k), 8(g−1)r)`.
pub fn h1_dims_example_ii(lat: &Lattice) -> Result<(usize, usize)> {
    let Family::ExampleIi { genus, punctures } = lat.family else {
        return Err(Error::Precondition("not an example-⟨ii⟩ lattice".into()));
    };
    let r = lat.r();
    let g = genus as usize;
    let g0 = lat.gamma0.body();
    if punctures == 0 {
        let us: Vec<CMat> = lat
            .generators
            .iter()
            .filter(|x| x.name != "gamma0")
            .map(|x| x.matrix.body().view((2, 2), (r, r)).into_owned())
            .collect();
        let even = 2 * (g - 1) * (3 + r * r) + 2 * unitary_centralizer_dim(&us);
        return Ok((even, 8 * (g - 1) * r));
    }
    let all: Vec<CMat> = lat.generators.iter().map(|x| x.matrix.body()).collect();
    let coef = 2 * g + punctures as usize - 2;
    let dim = |par| -> Result<usize> {
        let z0 = centralizer(&[g0.clone()], r, par)?.ncols();
        let za = centralizer(&all, r, par)?.ncols();
        Ok(coef * z0 + za)
    };
    Ok((dim(LieParity::Even)?, dim(LieParity::Odd)?))
}

/// Cocycle representatives spanning a complement of `B¹` in `Z¹`; each is a
/// list of Lie algebra elements, one per generator.
pub fn h1_representatives(lat: &Lattice, par: LieParity) -> Result<Vec<Vec<CMat>>> {
    let f = fox_matrix(lat, par)?;
    let b = coboundary_matrix(lat, par)?;
    let z = kernel(&f);
    let qb = column_space(&b);
    let proj = if qb.ncols() == 0 { z.clone() } else { &z - &qb * (qb.transpose() * &z) };
    let reps = column_space(&proj);
    let d = basis(lat.r(), par).len();
    let ng = lat.generators.len();
    Ok((0..reps.ncols())
        .map(|c| {
            (0..ng)
                .map(|i| {
                    let v: Vec<f64> = (0..d).map(|k| reps[(i * d + k, c)]).collect();
                    from_coords(&v, lat.r(), par)
                })
                .collect()
        })
        .collect())
}

/// A lattice over a parameter algebra together with its relative body.
#[derive(Clone, Debug)]
pub struct PLattice {
    pub base: Lattice,
    pub lattice: Lattice,
}

impl PLattice {
    /// `#'` of each deformed generator against the base generator.
    pub fn rel_body_residual(&self) -> f64 {
        self.lattice
            .generators
            .iter()
            .zip(&self.base.generators)
            .map(|(d, b)| {
                let rb = d.matrix.rel_body().body();
                (rb - b.matrix.body()).amax_complex()
            })
            .fold(0.0, f64::max)
    }

    pub fn relation_residual(&self) -> f64 {
        self.lattice
            .validate(1.0)
            .relation_residuals
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// A base lattice file plus, per generator, the difference between the deformed
/// and the undeformed generator (nilpotent coefficients only).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PLatticeFile {
    #[serde(flatten)]
    pub lattice: LatticeFile,
    pub deformations: BTreeMap<String, MatrixFile>,
}

impl PLattice {
    pub fn to_file(&self) -> PLatticeFile {
        let embedded = embed_lattice(&self.base, self.lattice.alg.param).expect("same r as the base");
        let deformations = self
            .lattice
            .generators
            .iter()
            .zip(&embedded.generators)
            .map(|(d, e)| (d.name.clone(), d.matrix.sub(&e.matrix).to_file()))
            .collect();
        PLatticeFile {
            lattice: self.base.to_file(),
            deformations,
        }
    }

    pub fn from_file(f: &PLatticeFile) -> Result<PLattice> {
        let base = Lattice::from_file(&f.lattice)?;
        let mut specs = f.deformations.values().map(|m| m.param_spec);
        let spec = specs.next().unwrap_or(ParamSpec::Trivial);
        if specs.any(|s| s != spec) {
            return Err(Error::Format("deformations use different parameter algebras".into()));
        }
        let mut lattice = embed_lattice(&base, spec)?;
        for (name, mf) in &f.deformations {
            let delta = SuperMatrix::from_file(mf)?;
            if delta.body().iter().any(|x| x.norm() != 0.0) {
                return Err(Error::Format(format!("deformation of {name} has a nonzero body")));
            }
            let g = lattice
                .generators
                .iter_mut()
                .find(|g| &g.name == name)
                .ok_or_else(|| Error::Format(format!("unknown generator {name}")))?;
            g.matrix = g.matrix.add(&delta);
        }
        if let Some(g0) = lattice.generators.iter().find(|g| g.name == "gamma0") {
            lattice.gamma0 = g0.matrix.clone();
        }
        Ok(PLattice { base, lattice })
    }
}

trait AmaxComplex {
    fn amax_complex(&self) -> f64;
}

impl AmaxComplex for CMat {
    fn amax_complex(&self) -> f64 {
        self.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Lift a base lattice into the algebra `(param, r)` without deforming it.
pub fn embed_lattice(lat: &Lattice, param: ParamSpec) -> Result<Lattice> {
    let alg = Algebra::new(param, lat.r())?;
    let lift = |m: &SuperMatrix| SuperMatrix::from_numeric(alg, &m.body());
    let mut out = lat.clone();
    out.alg = alg;
    out.gamma0 = lift(&lat.gamma0);
    for g in out.generators.iter_mut() {
        g.matrix = lift(&g.matrix);
    }
    Ok(out)
}

/// `g̃_i = exp(Σ_p p ⊗ ξ_{p,i}) g_i` for cocycles `ξ_p` (one per parameter
/// monomial). Relations hold exactly when `ℐ² = 0` and each `ξ_p` is a cocycle
/// of the parity of `p`.
pub fn deform(lat: &Lattice, param: ParamSpec, directions: &[(u32, Vec<CMat>)]) -> Result<PLattice> {
    let mut out = embed_lattice(lat, param)?;
    let alg = out.alg;
    for (gi, g) in out.generators.iter_mut().enumerate() {
        let comps: Vec<(u32, CMat)> = directions
            .iter()
            .map(|(p, xi)| {
                xi.get(gi)
                    .map(|x| (*p, x.clone()))
                    .ok_or_else(|| Error::Format("cocycle has too few entries".into()))
            })
            .collect::<Result<_>>()?;
        let x = SuperMatrix::from_param_components(alg, &comps);
        g.matrix = x.exp().matmul(&g.matrix);
    }
    if let Some(g0) = out.generators.iter().find(|g| g.name == "gamma0") {
        out.gamma0 = g0.matrix.clone();
    }
    Ok(PLattice {
        base: lat.clone(),
        lattice: out,
    })
}

/// One deformed lattice per infinitesimal class, over `ℝ[t]/t²` for even
/// classes and `Λ(ℝ¹)` for odd ones.
pub fn infinitesimal_classes(lat: &Lattice) -> Result<Vec<PLattice>> {
    let mut out = Vec::new();
    for (par, spec) in [
        (LieParity::Even, ParamSpec::Polynomial { n: 2 }),
        (LieParity::Odd, ParamSpec::Exterior { m: 1 }),
    ] {
        let t = spec.generators()[0];
        for rep in h1_representatives(lat, par)? {
            out.push(deform(lat, spec, &[(t, rep)])?);
        }
    }
    Ok(out)
}

/// `g₀ = diag(ε₀(1 1; 0 1), E₀)` stabilizing `i∞`, with a deformation `g̃₀`.
#[derive(Clone, Debug)]
pub struct ParabolicNormalForm {
    pub eps0: Complex64,
    pub e0: Vec<Complex64>,
    pub g0: SuperMatrix,
    pub g0_tilde: SuperMatrix,
    pub word: Word,
}

impl ParabolicNormalForm {
    /// Standard form from the cusp at `i∞` of a lattice (a word with check
    /// `±(1 1; 0 1)`), deformed as in `plat`.
    pub fn from_plattice(plat: &PLattice) -> Result<ParabolicNormalForm> {
        let base = &plat.base;
        let p = base
            .special
            .iter()
            .find(|p| p.kind == PointKind::Cusp && p.z0.is_none())
            .ok_or_else(|| Error::Precondition("lattice has no cusp at i∞".into()))?;
        let mut w = p.word.clone();
        let mut c = base.check_word(&w)?;
        if c[1][0].abs() > 1e-10 {
            return Err(Error::Precondition("cusp word does not fix i∞".into()));
        }
        if c[0][1] / c[1][1] < 0.0 {
            w = w.iter().rev().map(|(n, e)| (n.clone(), -e)).collect();
            c = base.check_word(&w)?;
        }
        if ((c[0][1] / c[1][1]).abs() - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition("cusp width must be 1".into()));
        }
        let body = base.eval_word(&w)?.body();
        let eps0 = body[(0, 0)];
        let r = base.r();
        let mut e0 = Vec::with_capacity(r);
        for i in 0..r {
            for j in 0..r {
                if i != j && body[(2 + i, 2 + j)].norm() > 1e-12 {
                    return Err(Error::Unsupported("E₀ must be diagonal".into()));
                }
            }
            e0.push(body[(2 + i, 2 + i)]);
        }
        let alg = plat.lattice.alg;
        Ok(ParabolicNormalForm {
            eps0,
            e0,
            g0: SuperMatrix::from_numeric(alg, &body),
            g0_tilde: plat.lattice.eval_word(&w)?,
            word: w,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletTerm {
    pub s: u64,
    pub d: Vec<f64>,
}

fn wrap_half(x: f64) -> f64 {
    // into (−1/2, 1/2]
    let y = x - x.round();
    if (y + 0.5).abs() < 1e-14 {
        0.5
    } else {
        y
    }
}

/// `S_n` strictly increasing with `max|D_n|` non-increasing, subject to
/// `exp(2πiD_n) = E₀^{S_n}` and `e^{πi tr D_n} = ε₀^{S_n}`.
pub fn dirichlet_series(eps0: Complex64, e0: &[Complex64], count: usize, bound: u64) -> Result<Vec<DirichletTerm>> {
    let alphas: Vec<f64> = e0.iter().map(|e| e.arg() / (2.0 * PI)).collect();
    let mut out: Vec<DirichletTerm> = Vec::new();
    let mut best = f64::INFINITY;
    let mut eps_pow = ONE;
    for s in 1..=bound {
        eps_pow *= eps0;
        let d: Vec<f64> = alphas
            .iter()
            .map(|a| {
                let v = wrap_half(s as f64 * a);
                if v.abs() < 1e-11 {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        let tr: f64 = d.iter().sum();
        if (Complex64::from_polar(1.0, PI * tr) - eps_pow).norm() > 1e-8 {
            continue;
        }
        let err = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if err < best - 1e-13 || (err == 0.0 && best == 0.0) {
            best = err;
            out.push(DirichletTerm { s, d });
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(Error::Numeric(format!(
        "Dirichlet search exhausted S ≤ {bound} with {} terms",
        out.len()
    )))
}

/// `χ_n = 2πi diag(½tr D_n 1₂, D_n) + S_n E₁₂` in the algebra `alg`.
pub fn chi_n(alg: Algebra, term: &DirichletTerm) -> SuperMatrix {
    let r = alg.r();
    let tr: f64 = term.d.iter().sum();
    let mut m = CMat::zeros(2 + r, 2 + r);
    m[(0, 0)] = Complex64::new(0.0, PI * tr);
    m[(1, 1)] = Complex64::new(0.0, PI * tr);
    m[(0, 1)] = Complex64::new(term.s as f64, 0.0);
    for (i, d) in term.d.iter().enumerate() {
        m[(2 + i, 2 + i)] = Complex64::new(0.0, 2.0 * PI * d);
    }
    SuperMatrix::from_numeric(alg, &m)
}

/// The unique logarithm of `g̃₀^{S_n}` over `χ_n`.
pub fn chi_n_tilde(pnf: &ParabolicNormalForm, term: &DirichletTerm, chi: &SuperMatrix) -> Result<SuperMatrix> {
    pnf.g0_tilde.powi(term.s as i64)?.log_point(chi)
}

/// Evaluator of the intertwiner `Ω_n`.
#[derive(Clone, Debug)]
pub struct OmegaN {
    pub term: DirichletTerm,
    pub chi: SuperMatrix,
    pub chi_tilde: SuperMatrix,
    g0_pows: Vec<SuperMatrix>,
    g0_tilde_pows: Vec<SuperMatrix>,
}

impl OmegaN {
    pub fn new(pnf: &ParabolicNormalForm, term: &DirichletTerm) -> Result<OmegaN> {
        let alg = pnf.g0.algebra();
        let chi = chi_n(alg, term);
        let chi_tilde = chi_n_tilde(pnf, term, &chi)?;
        let s = term.s as i64;
        let g0_inv = pnf.g0.inverse()?;
        let mut g0_pows = vec![SuperMatrix::identity(alg)];
        let mut g0_tilde_pows = vec![SuperMatrix::identity(alg)];
        for _ in 1..s {
            g0_pows.push(g0_pows.last().unwrap().matmul(&g0_inv));
            g0_tilde_pows.push(g0_tilde_pows.last().unwrap().matmul(&pnf.g0_tilde));
        }
        Ok(OmegaN {
            term: term.clone(),
            chi,
            chi_tilde,
            g0_pows,
            g0_tilde_pows,
        })
    }

    /// `exp(tχ̃_n)(i; exp(2πit(½tr D_n − D_n))ζ)` with `t = (z−i)/S_n`, the
    /// flow time at which `exp(tχ_n)` translates `i` to `z`.
    pub fn eval_unsymmetrized(&self, p: &SuperPoint) -> Result<SuperPoint> {
        let alg = p.algebra();
        let t = (&p.z - &SuperScalar::constant(alg, I)).scale_re(1.0 / self.term.s as f64);
        let half_tr: f64 = self.term.d.iter().sum::<f64>() * 0.5;
        let zeta = p
            .zeta
            .iter()
            .zip(&self.term.d)
            .map(|(zi, d)| &t.scale(Complex64::new(0.0, 2.0 * PI * (half_tr - d))).exp() * zi)
            .collect();
        let flow = self.chi_tilde.scalar_mul(&t).exp();
        act(
            &flow,
            &SuperPoint {
                z: SuperScalar::constant(alg, I),
                zeta,
            },
        )
    }

    /// `Ω_n = (1/S_n) Σ_σ g̃₀^σ ∘ Ω ∘ g₀^{−σ}`.
    pub fn eval(&self, p: &SuperPoint) -> Result<SuperPoint> {
        let alg = p.algebra();
        let s = self.g0_pows.len();
        let mut z = SuperScalar::zero(alg);
        let mut zeta = vec![SuperScalar::zero(alg); p.zeta.len()];
        for (gi, gt) in self.g0_pows.iter().zip(&self.g0_tilde_pows) {
            let q = act(gt, &self.eval_unsymmetrized(&act(gi, p)?)?)?;
            z += &q.z;
            for (a, b) in zeta.iter_mut().zip(&q.zeta) {
                *a += b;
            }
        }
        let w = Complex64::new(1.0 / s as f64, 0.0);
        Ok(SuperPoint {
            z: z.scale(w),
            zeta: zeta.into_iter().map(|x| x.scale(w)).collect(),
        })
    }

    /// Residuals of `Ω∘exp(tχ) = exp(tχ̃)∘Ω` and `Ω∘g₀ = g̃₀∘Ω` at `p`.
    pub fn intertwining_residuals(&self, pnf: &ParabolicNormalForm, p: &SuperPoint, t: f64) -> Result<(f64, f64)> {
        let lhs = self.eval(&act(&self.chi.exp_point(t), p)?)?;
        let rhs = act(&self.chi_tilde.exp_point(t), &self.eval(p)?)?;
        let lhs2 = self.eval(&act(&pnf.g0, p)?)?;
        let rhs2 = act(&pnf.g0_tilde, &self.eval(p)?)?;
        Ok((lhs.dist(&rhs), lhs2.dist(&rhs2)))
    }
}

/// Largest residual of `sAd_{g̃₀}χ̃ = χ̃` and of `[χ̃_m, χ̃_n] = 0` over the terms.
pub fn chi_tilde_properties(pnf: &ParabolicNormalForm, terms: &[DirichletTerm]) -> Result<(f64, f64)> {
    let alg = pnf.g0.algebra();
    let ginv = pnf.g0_tilde.inverse()?;
    let mut chis = Vec::new();
    let mut ad = 0.0f64;
    for t in terms {
        let c = chi_n_tilde(pnf, t, &chi_n(alg, t))?;
        ad = ad.max(pnf.g0_tilde.matmul(&c).matmul(&ginv).dist(&c));
        chis.push(c);
    }
    let mut comm = 0.0f64;
    for a in &chis {
        for b in &chis {
            comm = comm.max(a.commutator(b).max_abs());
        }
    }
    Ok((ad, comm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::{build_embedded_sl2z, build_eta_lattice, build_genus2, build_punctured_torus, example_i_auto, EtaCase};
    use std::f64::consts::TAU;

    #[test]
    fn genus2_h1_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let angles = [0, 1, 2, 3].map(|_| rng.gen_range(-3.0..3.0));
            let lat = build_genus2(angles).unwrap();
            let rep = h1_fox(&lat, 1).unwrap();
            assert_eq!(rep.dims(), (10, 8), "{rep:?}");
            assert_eq!(h1_dims_example_ii(&lat).unwrap(), (10, 8));
            assert!(rep.even.coboundary_residual < 1e-9);
        }
    }

    #[test]
    fn punctured_torus_matches_closed_form() {
        let lat = build_punctured_torus(Complex64::from_polar(1.0, TAU / 6.0), Complex64::from_polar(1.0, TAU / 3.0), 0.4, 1.3).unwrap();
        let rep = h1_fox(&lat, 2).unwrap();
        assert_eq!(rep.dims(), h1_dims_example_ii(&lat).unwrap());
    }

    #[test]
    fn example_i_matches_closed_form() {
        let lats = vec![
            build_eta_lattice(EtaCase::Even).unwrap(),
            build_eta_lattice(EtaCase::Odd).unwrap(),
            build_embedded_sl2z(1).unwrap(),
            build_embedded_sl2z(3).unwrap(),
            example_i_auto(ONE, &[I, -I]).unwrap(),
        ];
        for lat in &lats {
            let rep = h1_fox(lat, 5).unwrap();
            assert_eq!(rep.dims(), h1_dims_example_i(lat).unwrap(), "{:?}", lat.family);
        }
        assert_eq!(h1_fox(&lats[0], 5).unwrap().dims(), (1, 0));
    }

    #[test]
    fn classes_give_valid_deformations() {
        let lat = build_eta_lattice(EtaCase::Even).unwrap();
        let classes = infinitesimal_classes(&lat).unwrap();
        assert_eq!(classes.len(), 1);
        for pl in &classes {
            assert!(pl.relation_residual() < 1e-12, "{}", pl.relation_residual());
            assert!(pl.rel_body_residual() < 1e-12);
            assert!(pl.lattice.validate(1e-9).ok);
        }
        let lat = build_genus2([0.1, 0.2, 0.3, 0.4]).unwrap();
        let classes = infinitesimal_classes(&lat).unwrap();
        assert_eq!(classes.len(), 18);
        assert!(classes.iter().all(|pl| pl.lattice.validate(1e-9).ok));
    }

    #[test]
    fn plattice_file_roundtrip() {
        let lat = build_eta_lattice(EtaCase::Odd).unwrap();
        let pl = infinitesimal_classes(&lat).unwrap().remove(0);
        let text = serde_json::to_string(&pl.to_file()).unwrap();
        let back = PLattice::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        for a in &back.lattice.generators {
            let b = pl.lattice.generator(&a.name).unwrap();
            assert!(a.matrix.dist(&b.matrix) < 1e-15, "{}", a.name);
        }
        assert!(back.relation_residual() < 1e-12);
    }

    #[test]
    fn dirichlet_rational_and_irrational() {
        let e0 = [Complex64::from_polar(1.0, TAU / 3.0)];
        let terms = dirichlet_series(Complex64::from_polar(1.0, PI / 3.0), &e0, 3, 1000).unwrap();
        assert!(terms.iter().any(|t| t.d == vec![0.0]));
        assert_eq!(terms.last().unwrap().d, vec![0.0]);
        assert_eq!(terms.last().unwrap().s % 3, 0);
        let alpha = 2f64.sqrt() - 1.0;
        let e0 = [Complex64::from_polar(1.0, TAU * alpha)];
        let terms = dirichlet_series(Complex64::from_polar(1.0, PI * alpha), &e0, 6, 1_000_000).unwrap();
        for w in terms.windows(2) {
            assert!(w[1].s > w[0].s && w[1].d[0].abs() < w[0].d[0].abs());
        }
        for t in &terms {
            // brute force: nothing below S does better
            let admissible = |s: u64| {
                let d = wrap_half(s as f64 * alpha);
                (Complex64::from_polar(1.0, PI * d) - Complex64::from_polar(1.0, PI * alpha).powi(s as i32)).norm() < 1e-8
            };
            let best = (1..t.s)
                .filter(|&s| admissible(s))
                .map(|s| wrap_half(s as f64 * alpha).abs())
                .fold(1.0, f64::min);
            assert!(t.d[0].abs() <= best + 1e-12 || t.s == terms[0].s);
            let lhs = Complex64::from_polar(1.0, TAU * t.d[0]);
            assert!((lhs - e0[0].powi(t.s as i32)).norm() < 1e-9);
        }
    }

    fn deformed_cusp(case: EtaCase) -> (PLattice, ParabolicNormalForm) {
        let lat = build_eta_lattice(case).unwrap();
        let pl = infinitesimal_classes(&lat).unwrap().remove(0);
        let pnf = ParabolicNormalForm::from_plattice(&pl).unwrap();
        (pl, pnf)
    }

    #[test]
    fn chi_and_omega_on_eta_deformation() {
        let (_pl, pnf) = deformed_cusp(EtaCase::Even);
        let terms = dirichlet_series(pnf.eps0, &pnf.e0, 3, 10_000).unwrap();
        let alg = pnf.g0.algebra();
        for t in &terms {
            let chi = chi_n(alg, t);
            assert!(chi.exp().dist(&pnf.g0.powi(t.s as i64).unwrap()) < 1e-10);
        }
        let (ad, comm) = chi_tilde_properties(&pnf, &terms).unwrap();
        assert!(ad < 1e-10 && comm < 1e-10, "{ad} {comm}");
        let term = terms.last().unwrap();
        let om = OmegaN::new(&pnf, term).unwrap();
        for z in [Complex64::new(0.1, 1.0), Complex64::new(-0.3, 0.7), Complex64::new(0.45, 1.6)] {
            let p = SuperPoint::standard(alg, z);
            let q = om.eval(&p).unwrap();
            // relative body is the identity
            assert!((q.z.rel_body().body() - z).norm() < 1e-12);
            for t in [0.3, -0.8, 1.7] {
                let (a, b) = om.intertwining_residuals(&pnf, &p, t).unwrap();
                assert!(a < 1e-8 && b < 1e-8, "{a} {b}");
            }
        }
    }
}
