//! Lattice presentations `Γ ⊂ G`, the finite group `Γ₀ = ⟨γ₀⟩`, the invariant
//! spaces `V_k^ρ`, the representation `φ_k` of `Γ̌` and the character `χ`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{Algebra, ParamSpec, SuperScalar};
use crate::moebius::SuperPoint;
use crate::supermatrix::{max_norm, CMat, MatrixFile, SuperMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2×2 real matrices standing for elements of `SL(2,R)`.
pub mod sl2 {
    pub type Mat2 = [[f64; 2]; 2];

    pub const ID: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    pub const R: Mat2 = [[0.0, 1.0], [-1.0, -1.0]];
    pub const S: Mat2 = [[0.0, 1.0], [-1.0, 0.0]];
    pub const T: Mat2 = [[1.0, 1.0], [0.0, 1.0]];

    pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    }

    pub fn inv(a: &Mat2) -> Mat2 {
        [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
    }

    pub fn neg(a: &Mat2) -> Mat2 {
        [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]]
    }

    pub fn pow(a: &Mat2, e: i64) -> Mat2 {
        let base = if e < 0 { inv(a) } else { *a };
        let mut out = ID;
        for _ in 0..e.unsigned_abs() {
            out = mul(&out, &base);
        }
        out
    }

    pub fn det(a: &Mat2) -> f64 {
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn trace(a: &Mat2) -> f64 {
        a[0][0] + a[1][1]
    }

    pub fn dist(a: &Mat2, b: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((a[i][j] - b[i][j]).abs());
            }
        }
        m
    }

    /// Distance in `PSL(2,R)`.
    pub fn pdist(a: &Mat2, b: &Mat2) -> f64 {
        dist(a, b).min(dist(a, &neg(b)))
    }

    pub fn mobius(a: &Mat2, z: num_complex::Complex64) -> num_complex::Complex64 {
        (z * a[0][0] + a[0][1]) / (z * a[1][0] + a[1][1])
    }

    /// `j(γ, z) = 1/(cz + d)`.
    pub fn j(a: &Mat2, z: num_complex::Complex64) -> num_complex::Complex64 {
        1.0 / (z * a[1][0] + a[1][1])
    }

    pub fn to_cmat(a: &Mat2) -> super::CMat {
        super::CMat::from_row_slice(
            2,
            2,
            &[
                a[0][0].into(),
                a[0][1].into(),
                a[1][0].into(),
                a[1][1].into(),
            ],
        )
    }

    /// Word in `S`, `T` for an integral matrix of determinant 1.
    pub fn sl2z_word(m: &Mat2) -> Result<Vec<(char, i64)>, String> {
        let mut a = [[0i64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let x = m[i][j];
                if (x - x.round()).abs() > 1e-9 {
                    return Err(format!("entry {x} is not an integer"));
                }
                a[i][j] = x.round() as i64;
            }
        }
        if a[0][0] * a[1][1] - a[0][1] * a[1][0] != 1 {
            return Err("determinant is not 1".into());
        }
        // M = W · M_rem: peel T^q and S off the left until c = 0
        let mut word: Vec<(char, i64)> = Vec::new();
        let mut guard = 0;
        while a[1][0] != 0 {
            guard += 1;
            if guard > 200 {
                return Err("reduction did not terminate".into());
            }
            let q = a[0][0].div_euclid(a[1][0]);
            if q != 0 {
                // M ← T^{−q} M
                a[0][0] -= q * a[1][0];
                a[0][1] -= q * a[1][1];
                word.push(('T', q));
            }
            if a[1][0] == 0 {
                break;
            }
            // M ← S⁻¹ M, S⁻¹ = (0 −1; 1 0)
            let (r0, r1) = (a[0], a[1]);
            a[0] = [-r1[0], -r1[1]];
            a[1] = r0;
            word.push(('S', 1));
        }
        // remaining ±T^b
        if a[0][0] == -1 {
            word.push(('S', 2));
            a = [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]];
        }
        if a[0][1] != 0 {
            word.push(('T', a[0][1]));
        }
        Ok(word)
    }
}

use sl2::Mat2;

/// A word `Π g_i^{e_i}` in generator names.
pub type Word = Vec<(String, i64)>;

pub fn word(parts: &[(&str, i64)]) -> Word {
    parts.iter().map(|(n, e)| (n.to_string(), *e)).collect()
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub name: String,
    pub matrix: SuperMatrix,
    /// Representative in `SL(2,R)` of the body's image in `Aut H`.
    pub check: Mat2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Elliptic { order: u32 },
    Cusp,
}

/// An elliptic fixed point or cusp with a word whose `SL(2,R)` part generates
/// the stabilizer in `Γ̌` modulo `±1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub kind: PointKind,
    /// Fixed point in `H` (elliptic) or `None` for the cusp at `i∞`.
    pub z0: Option<[f64; 2]>,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    EmbeddedSl2,
    ExampleI { m: u32, n: u32 },
    ExampleIi { genus: u32, punctures: u32 },
    Custom,
}

/// A presented lattice with its `Γ₀` and the data of `Γ^#\H`.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub family: Family,
    pub alg: Algebra,
    pub generators: Vec<Generator>,
    pub relations: Vec<Word>,
    pub gamma0: SuperMatrix,
    pub gamma0_order: usize,
    pub genus: u32,
    pub special: Vec<SpecialPoint>,
    /// Words realizing `S` and `T` when `Γ̌ = SL(2,Z)`.
    pub sl2z_words: Option<(Word, Word)>,
}

/// `a ↦ ε^{−(k+ρ)} a(Eζ)` on `Λ^ρ(C^r)` in the basis of increasing masks.
pub fn lambda_action(r: usize, eps: Complex64, e: &CMat, k: i64, rho: usize) -> CMat {
    let masks = masks_of_grade(r, rho);
    let alg = Algebra::new(ParamSpec::Trivial, r).expect("r in range");
    let zeta: Vec<SuperScalar> = (0..r)
        .map(|i| {
            let mut s = SuperScalar::zero(alg);
            for j in 0..r {
                s.add_term(0, 1 << j, e[(i, j)]);
            }
            s
        })
        .collect();
    let p = SuperPoint {
        z: SuperScalar::constant(alg, I),
        zeta,
    };
    let scale = eps.powi(-(k as i32) - rho as i32);
    let n = masks.len();
    let mut out = CMat::zeros(n, n);
    for (col, &m) in masks.iter().enumerate() {
        let img = p.zeta_monomial(m);
        for (row, &m2) in masks.iter().enumerate() {
            out[(row, col)] = img.coeff(0, m2) * scale;
        }
    }
    out
}

pub fn masks_of_grade(r: usize, rho: usize) -> Vec<u32> {
    (0..(1u32 << r))
        .filter(|m| m.count_ones() as usize == rho)
        .collect()
}

/// `V_k^ρ` with an orthonormal basis (columns) and its projector.
#[derive(Clone, Debug)]
pub struct InvariantSpace {
    pub k: i64,
    pub rho: usize,
    pub dim: usize,
    pub basis: CMat,
    pub projector: CMat,
    pub masks: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub relation_residuals: Vec<f64>,
    pub membership_residuals: BTreeMap<String, f64>,
    pub gamma0_order_residual: f64,
    pub gamma0_central_residual: f64,
    pub constraint_residuals: BTreeMap<String, f64>,
    pub ok: bool,
}

/// Data `(ε, E)` of `η = diag(ε 1₂, E) ∈ G₀`.
#[derive(Clone, Debug)]
pub struct G0Part {
    pub eps: Complex64,
    pub e: CMat,
}

impl Lattice {
    pub fn r(&self) -> usize {
        self.alg.r()
    }

    pub fn generator(&self, name: &str) -> Result<&Generator> {
        self.generators
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| Error::Resolution(format!("unknown generator {name:?}")))
    }

    pub fn eval_word(&self, w: &Word) -> Result<SuperMatrix> {
        let mut out = SuperMatrix::identity(self.alg);
        for (name, e) in w {
            let g = &self.generator(name)?.matrix;
            let base = if *e < 0 { g.group_inverse() } else { g.clone() };
            for _ in 0..e.unsigned_abs() {
                out = out.matmul(&base);
            }
        }
        Ok(out)
    }

    pub fn check_word(&self, w: &Word) -> Result<Mat2> {
        let mut out = sl2::ID;
        for (name, e) in w {
            out = sl2::mul(&out, &sl2::pow(&self.generator(name)?.check, *e));
        }
        Ok(out)
    }

    /// `η = diag(γ̌, 1)⁻¹ γ` for `γ` the evaluated word and `γ̌` its `SL(2,R)` part.
    pub fn g0_part(&self, w: &Word) -> Result<G0Part> {
        let gamma = self.eval_word(w)?;
        let check = self.check_word(w)?;
        g0_part_of(&gamma, &check)
    }

    pub fn gamma0_powers(&self) -> Vec<SuperMatrix> {
        let mut out = vec![SuperMatrix::identity(self.alg)];
        for _ in 1..self.gamma0_order {
            let next = out.last().unwrap().matmul(&self.gamma0);
            out.push(next);
        }
        out
    }

    pub fn gamma0_parts(&self) -> Vec<G0Part> {
        self.gamma0_powers()
            .iter()
            .map(|g| g0_part_of(g, &sl2::ID).expect("γ₀ lies in G₀"))
            .collect()
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        let id = SuperMatrix::identity(self.alg);
        let relation_residuals: Vec<f64> = self
            .relations
            .iter()
            .map(|w| {
                self.eval_word(w)
                    .map(|m| m.dist(&id))
                    .unwrap_or(f64::INFINITY)
            })
            .collect();
        let mut membership_residuals = BTreeMap::new();
        for g in &self.generators {
            let rep = g.matrix.membership(tol);
            let body_ok = g
                .matrix
                .body_to_aut_h(tol.max(1e-10))
                .map(|h| sl2::pdist(&h, &g.check))
                .unwrap_or(f64::INFINITY);
            membership_residuals.insert(
                g.name.clone(),
                rep.unitary_residual.max(rep.ber_residual).max(body_ok),
            );
        }
        let gamma0_order_residual = self
            .gamma0
            .powi(self.gamma0_order as i64)
            .map(|m| m.dist(&id))
            .unwrap_or(f64::INFINITY);
        let gamma0_central_residual = self
            .generators
            .iter()
            .map(|g| g.matrix.commutator(&self.gamma0).max_abs())
            .fold(0.0, f64::max);
        let constraint_residuals = self.family_constraints();
        let ok = relation_residuals.iter().all(|&x| x < tol)
            && membership_residuals.values().all(|&x| x < tol)
            && gamma0_order_residual < tol
            && gamma0_central_residual < tol
            && constraint_residuals.values().all(|&x| x < tol);
        ValidationReport {
            relation_residuals,
            membership_residuals,
            gamma0_order_residual,
            gamma0_central_residual,
            constraint_residuals,
            ok,
        }
    }

    fn family_constraints(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        let g0 = g0_part_of(&self.gamma0, &sl2::ID);
        let Ok(g0) = g0 else {
            out.insert("gamma0_in_G0".into(), f64::INFINITY);
            return out;
        };
        let r = self.r();
        match self.family {
            Family::ExampleI { m, n } => {
                let (Ok(rh), Ok(sh)) = (self.generator("Rhat"), self.generator("Shat")) else {
                    out.insert("generators".into(), f64::INFINITY);
                    return out;
                };
                let e = rh.matrix.body().view((2, 2), (r, r)).into_owned();
                let f = sh.matrix.body().view((2, 2), (r, r)).into_owned();
                // R has b = 1
                let eps = rh.matrix.body()[(0, 1)];
                let e0m = mat_pow(&g0.e, m as i64);
                let e0n = mat_pow(&g0.e, n as i64);
                out.insert("E^3 = E0^m".into(), max_norm(&(mat_pow(&e, 3) - e0m)));
                out.insert("F^2 = E0^n".into(), max_norm(&(mat_pow(&f, 2) - e0n)));
                out.insert(
                    "det F = -eps0^n".into(),
                    (det(&f) + g0.eps.powi(n as i32)).norm(),
                );
                out.insert(
                    "eps^3 = eps0^m".into(),
                    (eps.powi(3) - g0.eps.powi(m as i32)).norm(),
                );
                out.insert("[E, E0] = 0".into(), max_norm(&(&e * &g0.e - &g0.e * &e)));
                out.insert("[F, E0] = 0".into(), max_norm(&(&f * &g0.e - &g0.e * &f)));
            }
            Family::ExampleIi { .. } => {
                // the unitary parts must centralize E0
                for g in &self.generators {
                    if g.name == "gamma0" {
                        continue;
                    }
                    let b = g.matrix.body().view((2, 2), (r, r)).into_owned();
                    out.insert(
                        format!("[{}_E, E0] = 0", g.name),
                        max_norm(&(&b * &g0.e - &g0.e * &b)),
                    );
                }
            }
            _ => {}
        }
        out
    }

    /// `V_k^ρ = {a ∈ Λ^ρ : a|_{η,k} = a for η ∈ Γ₀}` via the averaging projector.
    pub fn vk_rho(&self, k: i64, rho: usize) -> InvariantSpace {
        let r = self.r();
        let masks = masks_of_grade(r, rho);
        let n = masks.len();
        let parts = self.gamma0_parts();
        let mut proj = CMat::zeros(n, n);
        for p in &parts {
            proj += lambda_action(r, p.eps, &p.e, k, rho);
        }
        proj /= Complex64::new(parts.len() as f64, 0.0);
        // symmetrize before the eigensolver; exact for unitary actions
        let herm = (&proj + proj.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        let cols: Vec<DVector<Complex64>> = (0..n)
            .filter(|&i| eig.eigenvalues[i] > 0.5)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let basis = if cols.is_empty() {
            CMat::zeros(n, 0)
        } else {
            CMat::from_columns(&cols)
        };
        InvariantSpace {
            k,
            rho,
            dim: cols.len(),
            basis,
            projector: proj,
            masks,
        }
    }

    /// `φ_k(γ̌)` on `V_k^ρ` in the basis of [`vk_rho`](Self::vk_rho):
    /// `a ↦ a|_{η⁻¹,k} = ε^{k+ρ} a(E⁻¹ζ)`.
    pub fn phi_k(&self, w: &Word, k: i64, rho: usize) -> Result<CMat> {
        let v = self.vk_rho(k, rho);
        self.phi_k_on(&v, w)
    }

    pub fn phi_k_on(&self, v: &InvariantSpace, w: &Word) -> Result<CMat> {
        let eta = self.g0_part(w)?;
        let einv = eta.e.clone().try_inverse().ok_or_else(|| {
            Error::Numeric("unitary block not invertible".into())
        })?;
        let act = lambda_action(self.r(), eta.eps.inv(), &einv, v.k, v.rho);
        Ok(v.basis.adjoint() * act * &v.basis)
    }

    /// `χ(γ^#) = ε^{2|Γ₀|}`.
    pub fn chi(&self, w: &Word) -> Result<Complex64> {
        let eta = self.g0_part(w)?;
        Ok(eta.eps.powi(2 * self.gamma0_order as i32))
    }

    /// Word in the presented generators whose `SL(2,R)` part is `m` (up to a
    /// `Γ₀` correction that [`g0_part`](Self::g0_part) absorbs).
    pub fn resolve_sl2z(&self, m: &Mat2) -> Result<Word> {
        let (ws, wt) = self
            .sl2z_words
            .as_ref()
            .ok_or_else(|| Error::Resolution("lattice has no SL(2,Z) word data".into()))?;
        let letters = sl2::sl2z_word(m).map_err(Error::Resolution)?;
        let mut out = Word::new();
        for (c, e) in letters {
            let base = if c == 'S' { ws } else { wt };
            let seq: Word = if e >= 0 {
                base.clone()
            } else {
                base.iter().rev().map(|(n, x)| (n.clone(), -x)).collect()
            };
            for _ in 0..e.unsigned_abs() {
                out.extend(seq.iter().cloned());
            }
        }
        let got = self.check_word(&out)?;
        if sl2::pdist(&got, m) > 1e-9 {
            return Err(Error::Resolution("word does not reproduce the target".into()));
        }
        Ok(out)
    }

    /// `vol(Γ^#\H)/2π` from the surface data.
    pub fn covolume(&self) -> f64 {
        let mut v = 2.0 * (self.genus as f64 - 1.0);
        for p in &self.special {
            v += match p.kind {
                PointKind::Elliptic { order } => 1.0 - 1.0 / order as f64,
                PointKind::Cusp => 1.0,
            };
        }
        v
    }

    pub fn to_file(&self) -> LatticeFile {
        LatticeFile {
            family: self.family.clone(),
            r: self.r(),
            param_spec: self.alg.param,
            generators: self
                .generators
                .iter()
                .map(|g| (g.name.clone(), g.matrix.to_file()))
                .collect(),
            checks: self
                .generators
                .iter()
                .map(|g| (g.name.clone(), g.check))
                .collect(),
            relations: self.relations.clone(),
            gamma0_order: self.gamma0_order,
            genus: self.genus,
            special_points: self.special.clone(),
            sl2z_words: self.sl2z_words.clone(),
        }
    }

    pub fn from_file(f: &LatticeFile) -> Result<Lattice> {
        let alg = Algebra::new(f.param_spec, f.r)?;
        let mut generators = Vec::new();
        for (name, mf) in &f.generators {
            let matrix = SuperMatrix::from_file(mf)?;
            if matrix.algebra() != alg {
                return Err(Error::Format(format!("generator {name} has a different algebra")));
            }
            let check = match f.checks.get(name) {
                Some(c) => *c,
                None => matrix.body_to_aut_h(1e-9)?,
            };
            generators.push(Generator {
                name: name.clone(),
                matrix,
                check,
            });
        }
        let gamma0 = generators
            .iter()
            .find(|g| g.name == "gamma0")
            .map(|g| g.matrix.clone())
            .unwrap_or_else(|| SuperMatrix::identity(alg));
        Ok(Lattice {
            family: f.family.clone(),
            alg,
            generators,
            relations: f.relations.clone(),
            gamma0,
            gamma0_order: f.gamma0_order.max(1),
            genus: f.genus,
            special: f.special_points.clone(),
            sl2z_words: f.sl2z_words.clone(),
        })
    }
}

/// Serialized [`Lattice`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeFile {
    pub family: Family,
    pub r: usize,
    pub param_spec: ParamSpec,
    pub generators: BTreeMap<String, MatrixFile>,
    #[serde(default)]
    pub checks: BTreeMap<String, Mat2>,
    pub relations: Vec<Word>,
    pub gamma0_order: usize,
    #[serde(default)]
    pub genus: u32,
    #[serde(default)]
    pub special_points: Vec<SpecialPoint>,
    #[serde(default)]
    pub sl2z_words: Option<(Word, Word)>,
}

pub fn g0_part_of(gamma: &SuperMatrix, check: &Mat2) -> Result<G0Part> {
    let r = gamma.r();
    let body = gamma.body();
    let top = body.view((0, 0), (2, 2)).into_owned();
    let hinv = sl2::to_cmat(&sl2::inv(check));
    let m = top * hinv;
    let eps = m[(0, 0)];
    let off = m[(0, 1)].norm() + m[(1, 0)].norm() + (m[(1, 1)] - eps).norm();
    if off > 1e-8 {
        return Err(Error::Resolution(format!(
            "element is not in diag(γ̌,1)·G₀ (residual {off:.2e})"
        )));
    }
    Ok(G0Part {
        eps,
        e: body.view((2, 2), (r, r)).into_owned(),
    })
}

fn mat_pow(m: &CMat, e: i64) -> CMat {
    let n = m.nrows();
    let mut out = CMat::identity(n, n);
    let base = if e < 0 {
        m.clone().try_inverse().expect("unitary")
    } else {
        m.clone()
    };
    for _ in 0..e.unsigned_abs() {
        out = &out * &base;
    }
    out
}

fn det(m: &CMat) -> Complex64 {
    if m.nrows() == 0 {
        ONE
    } else {
        m.determinant()
    }
}

fn diag(v: &[Complex64]) -> CMat {
    CMat::from_diagonal(&DVector::from_vec(v.to_vec()))
}

/// Parameters of an example-⟨i⟩ lattice: `γ₀ = diag(ε₀ 1₂, E₀)`,
/// `R̂ = diag(ε R, E)`, `Ŝ = diag(η S, F)`.
#[derive(Clone, Debug)]
pub struct ExampleIParams {
    pub r: usize,
    pub eps0: Complex64,
    pub e0: CMat,
    pub gamma0_order: usize,
    pub e: CMat,
    pub f: CMat,
    pub eps: Complex64,
    pub eta: Complex64,
    pub m: u32,
    pub n: u32,
}

/// The quotient is the modular curve: genus 0, elliptic points `i`, `e^{2πi/3}`, one cusp.
fn modular_special_points() -> Vec<SpecialPoint> {
    let rho = Complex64::from_polar(1.0, TAU / 3.0);
    vec![
        SpecialPoint {
            kind: PointKind::Elliptic { order: 2 },
            z0: Some([0.0, 1.0]),
            word: word(&[("Shat", 1)]),
        },
        SpecialPoint {
            kind: PointKind::Elliptic { order: 3 },
            z0: Some([rho.re, rho.im]),
            word: word(&[("Rhat", 2)]),
        },
        SpecialPoint {
            kind: PointKind::Cusp,
            z0: None,
            word: word(&[("Shat", -1), ("Rhat", 1)]),
        },
    ]
}

pub fn build_example_i(p: &ExampleIParams) -> Result<Lattice> {
    let alg = Algebra::new(ParamSpec::Trivial, p.r)?;
    let gamma0 = SuperMatrix::block_diag(alg, &CMat::identity(2, 2).scale(1.0).map(|x| x * p.eps0), &p.e0);
    let rhat = SuperMatrix::block_diag(alg, &sl2::to_cmat(&sl2::R).map(|x| x * p.eps), &p.e);
    let shat = SuperMatrix::block_diag(alg, &sl2::to_cmat(&sl2::S).map(|x| x * p.eta), &p.f);
    let mut relations = vec![
        word(&[("Rhat", 3), ("gamma0", -(p.m as i64))]),
        word(&[("Shat", 2), ("gamma0", -(p.n as i64))]),
        word(&[("Rhat", 1), ("gamma0", 1), ("Rhat", -1), ("gamma0", -1)]),
        word(&[("Shat", 1), ("gamma0", 1), ("Shat", -1), ("gamma0", -1)]),
    ];
    relations.push(word(&[("gamma0", p.gamma0_order as i64)]));
    let lat = Lattice {
        family: Family::ExampleI { m: p.m, n: p.n },
        alg,
        generators: vec![
            Generator {
                name: "gamma0".into(),
                matrix: gamma0.clone(),
                check: sl2::ID,
            },
            Generator {
                name: "Rhat".into(),
                matrix: rhat,
                check: sl2::R,
            },
            Generator {
                name: "Shat".into(),
                matrix: shat,
                check: sl2::S,
            },
        ],
        relations,
        gamma0,
        gamma0_order: p.gamma0_order,
        genus: 0,
        special: modular_special_points(),
        sl2z_words: Some((word(&[("Shat", 1)]), word(&[("Shat", -1), ("Rhat", 1)]))),
    };
    let rep = lat.validate(1e-10);
    if !rep.ok {
        return Err(Error::Constraint(format!("{:?}", rep)));
    }
    Ok(lat)
}

/// `SL(2,Z)` embedded as `diag(h, 1_r)`; `γ₀ = diag(−1₂, 1_r)`.
pub fn build_embedded_sl2z(r: usize) -> Result<Lattice> {
    let mut lat = build_example_i(&ExampleIParams {
        r,
        eps0: -ONE,
        e0: CMat::identity(r, r),
        gamma0_order: 2,
        e: CMat::identity(r, r),
        f: CMat::identity(r, r),
        eps: ONE,
        eta: ONE,
        m: 0,
        n: 1,
    })?;
    lat.family = Family::EmbeddedSl2;
    Ok(lat)
}

/// Which of the two `r = 1` lattices generated by `R̂ = diag(εR, ε⁻¹)`,
/// `Ŝ = diag(iωS, −1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaCase {
    /// `ε = e^{2πi/3}`, `ω = 1`: `η²` has weight 1.
    Even,
    /// `ε = e^{−2πi/3}`, `ω = −1`: `η²ζ` has weight 0.
    Odd,
}

pub fn build_eta_lattice(case: EtaCase) -> Result<Lattice> {
    let (eps, omega) = match case {
        EtaCase::Even => (Complex64::from_polar(1.0, TAU / 3.0), 1.0),
        EtaCase::Odd => (Complex64::from_polar(1.0, -TAU / 3.0), -1.0),
    };
    build_example_i(&ExampleIParams {
        r: 1,
        eps0: ONE,
        e0: CMat::identity(1, 1),
        gamma0_order: 1,
        e: CMat::from_element(1, 1, eps.inv()),
        f: CMat::from_element(1, 1, -ONE),
        eps,
        eta: I * omega,
        m: 0,
        n: 0,
    })
}

/// Search cube and square roots so that an example-⟨i⟩ lattice exists for
/// the given `γ₀ = diag(ε₀ 1₂, diag(e0))`.
pub fn example_i_auto(eps0: Complex64, e0: &[Complex64]) -> Result<Lattice> {
    let r = e0.len();
    let n_order = {
        let mut k = 1usize;
        loop {
            let ok = (eps0.powi(k as i32) - ONE).norm() < 1e-10
                && e0.iter().all(|e| (e.powi(k as i32) - ONE).norm() < 1e-10);
            if ok {
                break k;
            }
            k += 1;
            if k > 1000 {
                return Err(Error::Constraint("γ₀ does not have finite order".into()));
            }
        }
    };
    let omega3 = Complex64::from_polar(1.0, TAU / 3.0);
    for m in 0..(3 * n_order as u32) {
        for n in 0..(2 * n_order as u32) {
            // E = diag(e_i^{m/3} ω₃^{a_i}), F = diag(± e_i^{n/2})
            let cube: Vec<Complex64> = e0
                .iter()
                .map(|e| Complex64::from_polar(1.0, e.arg() * m as f64 / 3.0))
                .collect();
            let sq: Vec<Complex64> = e0
                .iter()
                .map(|e| Complex64::from_polar(1.0, e.arg() * n as f64 / 2.0))
                .collect();
            let target_det_f = -eps0.powi(n as i32);
            for a_bits in 0..3usize.pow(r as u32) {
                let mut ev = cube.clone();
                let mut t = a_bits;
                for x in ev.iter_mut() {
                    *x *= omega3.powi((t % 3) as i32);
                    t /= 3;
                }
                let de: Complex64 = ev.iter().product();
                let eps_choices = [de.sqrt(), -de.sqrt()];
                let Some(eps) = eps_choices
                    .into_iter()
                    .find(|e| (e.powi(3) - eps0.powi(m as i32)).norm() < 1e-10)
                else {
                    continue;
                };
                for s_bits in 0..(1usize << r) {
                    let fv: Vec<Complex64> = sq
                        .iter()
                        .enumerate()
                        .map(|(i, x)| if s_bits >> i & 1 == 1 { -x } else { *x })
                        .collect();
                    let df: Complex64 = fv.iter().product();
                    if (df - target_det_f).norm() > 1e-10 {
                        continue;
                    }
                    let params = ExampleIParams {
                        r,
                        eps0,
                        e0: diag(e0),
                        gamma0_order: n_order,
                        e: diag(&ev),
                        f: diag(&fv),
                        eps,
                        eta: df.sqrt(),
                        m,
                        n,
                    };
                    if let Ok(lat) = build_example_i(&params) {
                        return Ok(lat);
                    }
                }
            }
        }
    }
    Err(Error::Constraint("no example-⟨i⟩ data found for this γ₀".into()))
}

/// Side pairings `A₁, B₁, A₂, B₂` of the regular hyperbolic octagon with
/// angles `π/4`, satisfying `[A₁,B₁][A₂,B₂] = 1` in `SL(2,R)`.
pub fn genus2_octagon() -> [Mat2; 4] {
    let d = (1.0 + 2f64.sqrt()).acosh();
    let rot = |t: f64| {
        CMat::from_row_slice(
            2,
            2,
            &[Complex64::from_polar(1.0, t / 2.0), ZERO, ZERO, Complex64::from_polar(1.0, -t / 2.0)],
        )
    };
    let tau = CMat::from_row_slice(
        2,
        2,
        &[d.cosh().into(), d.sinh().into(), d.sinh().into(), d.cosh().into()],
    );
    // disc w ↦ z = i(1+w)/(1−w)
    let cy = CMat::from_row_slice(2, 2, &[I, I, -ONE, ONE]) / Complex64::new(0.0, 2.0).sqrt();
    let cy_inv = cy.clone().try_inverse().unwrap();
    // pairing of side b onto side a: Rot(aπ/4) τ Rot(π − bπ/4)
    let pairing = |a: f64, b: f64| {
        let g = rot(a * PI / 4.0) * &tau * rot(PI - b * PI / 4.0);
        let h = &cy * g * &cy_inv;
        [[h[(0, 0)].re, h[(0, 1)].re], [h[(1, 0)].re, h[(1, 1)].re]]
    };
    [
        pairing(0.0, 2.0),
        pairing(3.0, 1.0),
        pairing(4.0, 6.0),
        pairing(7.0, 5.0),
    ]
}

/// Example ⟨ii⟩ with `m = 0` punctures: `Â_k = diag(ε_k A_k, E_k)`,
/// `B̂_k = diag(η_k B_k, F_k)` on a closed surface, `γ₀ = 1`.
pub fn build_example_ii_closed(bodies: &[(Mat2, Mat2)], e: &[CMat], f: &[CMat]) -> Result<Lattice> {
    let g = bodies.len();
    let r = e.first().map(|m| m.nrows()).unwrap_or(0);
    let alg = Algebra::new(ParamSpec::Trivial, r)?;
    let mut generators = Vec::new();
    let mut rel = Word::new();
    for k in 0..g {
        let ek = det(&e[k]).sqrt();
        let fk = det(&f[k]).sqrt();
        let (a, b) = &bodies[k];
        let an = format!("A{}", k + 1);
        let bn = format!("B{}", k + 1);
        generators.push(Generator {
            name: an.clone(),
            matrix: SuperMatrix::block_diag(alg, &sl2::to_cmat(a).map(|x| x * ek), &e[k]),
            check: *a,
        });
        generators.push(Generator {
            name: bn.clone(),
            matrix: SuperMatrix::block_diag(alg, &sl2::to_cmat(b).map(|x| x * fk), &f[k]),
            check: *b,
        });
        rel.extend([(an.clone(), 1), (bn.clone(), 1), (an, -1), (bn, -1)]);
    }
    let lat = Lattice {
        family: Family::ExampleIi {
            genus: g as u32,
            punctures: 0,
        },
        alg,
        generators,
        relations: vec![rel],
        gamma0: SuperMatrix::identity(alg),
        gamma0_order: 1,
        genus: g as u32,
        special: vec![],
        sl2z_words: None,
    };
    let rep = lat.validate(1e-9);
    if !rep.ok {
        return Err(Error::Constraint(format!("{rep:?}")));
    }
    Ok(lat)
}

/// Genus-2 preset with unitary parts `E_k = e^{iα_k}`, `F_k = e^{iβ_k}` (`r = 1`).
pub fn build_genus2(angles: [f64; 4]) -> Result<Lattice> {
    let oct = genus2_octagon();
    let u = |t: f64| CMat::from_element(1, 1, Complex64::from_polar(1.0, t));
    build_example_ii_closed(
        &[(oct[0], oct[1]), (oct[2], oct[3])],
        &[u(angles[0]), u(angles[2])],
        &[u(angles[1]), u(angles[3])],
    )
}

/// Example ⟨ii⟩ for a once-punctured torus, `Γ'` generated by
/// `A = (1 1; 1 2)`, `B = (1 −1; −1 2)` and `C = [A,B]⁻¹`; `γ₀ = diag(ε₀1₂, E₀)` and
/// unitary parts commuting with `E₀` (`r = 1`, so all of `U(1)`).
pub fn build_punctured_torus(eps0: Complex64, e0: Complex64, alpha: f64, beta: f64) -> Result<Lattice> {
    let r = 1;
    let alg = Algebra::new(ParamSpec::Trivial, r)?;
    let a: Mat2 = [[1.0, 1.0], [1.0, 2.0]];
    let b: Mat2 = [[1.0, -1.0], [-1.0, 2.0]];
    let comm = sl2::mul(&sl2::mul(&a, &b), &sl2::mul(&sl2::inv(&a), &sl2::inv(&b)));
    let c = sl2::inv(&comm);
    let e = Complex64::from_polar(1.0, alpha);
    let f = Complex64::from_polar(1.0, beta);
    // [E, F] H = E₀ with H = E₀ in U(1); ϑ² = det H and ϑ = ε₀
    let h = e0;
    let theta = eps0;
    if (theta * theta - h).norm() > 1e-12 {
        return Err(Error::Constraint("ε₀² must equal det E₀".into()));
    }
    let one = |x: Complex64| CMat::from_element(1, 1, x);
    let gamma0 = SuperMatrix::block_diag(alg, &CMat::identity(2, 2).map(|x| x * eps0), &one(e0));
    let order = (1..=1000)
        .find(|&k| (eps0.powi(k) - ONE).norm() < 1e-10 && (e0.powi(k) - ONE).norm() < 1e-10)
        .ok_or_else(|| Error::Constraint("γ₀ must have finite order".into()))? as usize;
    let generators = vec![
        Generator {
            name: "gamma0".into(),
            matrix: gamma0.clone(),
            check: sl2::ID,
        },
        Generator {
            name: "A1".into(),
            matrix: SuperMatrix::block_diag(alg, &sl2::to_cmat(&a).map(|x| x * e.sqrt()), &one(e)),
            check: a,
        },
        Generator {
            name: "B1".into(),
            matrix: SuperMatrix::block_diag(alg, &sl2::to_cmat(&b).map(|x| x * f.sqrt()), &one(f)),
            check: b,
        },
        Generator {
            name: "C1".into(),
            matrix: SuperMatrix::block_diag(alg, &sl2::to_cmat(&c).map(|x| x * theta), &one(h)),
            check: c,
        },
    ];
    let relations = vec![
        word(&[("A1", 1), ("B1", 1), ("A1", -1), ("B1", -1), ("C1", 1), ("gamma0", -1)]),
        word(&[("A1", 1), ("gamma0", 1), ("A1", -1), ("gamma0", -1)]),
        word(&[("B1", 1), ("gamma0", 1), ("B1", -1), ("gamma0", -1)]),
        word(&[("gamma0", order as i64)]),
    ];
    let lat = Lattice {
        family: Family::ExampleIi {
            genus: 1,
            punctures: 1,
        },
        alg,
        generators,
        relations,
        gamma0,
        gamma0_order: order,
        genus: 1,
        special: vec![SpecialPoint {
            kind: PointKind::Cusp,
            z0: None,
            word: word(&[("C1", 1)]),
        }],
        sl2z_words: None,
    };
    let rep = lat.validate(1e-9);
    if !rep.ok {
        return Err(Error::Constraint(format!("{rep:?}")));
    }
    Ok(lat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for lat in [
            build_embedded_sl2z(2).unwrap(),
            build_eta_lattice(EtaCase::Even).unwrap(),
            build_eta_lattice(EtaCase::Odd).unwrap(),
            build_genus2([0.3, 1.1, -0.7, 2.0]).unwrap(),
            build_punctured_torus(-ONE, ONE, 0.4, 1.3).unwrap(),
        ] {
            let rep = lat.validate(1e-10);
            assert!(rep.ok, "{:?}", rep);
        }
    }

    #[test]
    fn sl2z_words_reproduce() {
        let lat = build_embedded_sl2z(1).unwrap();
        for m in [
            [[2.0, 1.0], [1.0, 1.0]],
            [[-3.0, 5.0], [4.0, -7.0]],
            [[1.0, 0.0], [-6.0, 1.0]],
            [[-1.0, 0.0], [0.0, -1.0]],
        ] {
            let w = lat.resolve_sl2z(&m).unwrap();
            assert!(sl2::pdist(&lat.check_word(&w).unwrap(), &m) < 1e-12);
            lat.g0_part(&w).unwrap();
        }
    }

    #[test]
    fn trivial_gamma0_keeps_everything() {
        let lat = build_eta_lattice(EtaCase::Even).unwrap();
        let v = lat.vk_rho(3, 1);
        assert_eq!(v.dim, 1);
        let lat = build_embedded_sl2z(3).unwrap();
        // γ₀ = −1 acts by (−1)^{k+ρ}
        assert_eq!(lat.vk_rho(2, 2).dim, 3);
        assert_eq!(lat.vk_rho(1, 2).dim, 0);
    }

    #[test]
    fn vk_matches_eigenvalue_condition() {
        // r = 2, E₀ = diag(i, −i), ε₀ = 1: ζ_i invariant iff e_i ε₀^{−k−1} = 1
        let lat = example_i_auto(ONE, &[I, -I]).unwrap();
        assert_eq!(lat.gamma0_order, 4);
        for k in 0..8 {
            let expect = [I, -I].iter().filter(|e| (*e - ONE).norm() < 1e-12).count();
            assert_eq!(lat.vk_rho(k, 1).dim, expect);
            // grade 2: det E₀ = 1
            assert_eq!(lat.vk_rho(k, 2).dim, 1);
        }
    }

    #[test]
    fn phi_is_unitary_and_scales_by_chi() {
        let lat = example_i_auto(Complex64::from_polar(1.0, TAU / 3.0), &[
            Complex64::from_polar(1.0, TAU / 3.0),
            Complex64::from_polar(1.0, TAU / 3.0),
        ])
        .unwrap();
        let n = lat.gamma0_order as i64;
        for w in [word(&[("Rhat", 1)]), word(&[("Shat", 1)])] {
            for k in 0..6 {
                for rho in 0..=2 {
                    let p = lat.phi_k(&w, k, rho).unwrap();
                    let d = p.nrows();
                    assert!(max_norm(&(p.adjoint() * &p - CMat::identity(d, d))) < 1e-12);
                    let p2 = lat.phi_k(&w, k + 2 * n, rho).unwrap();
                    let chi = lat.chi(&w).unwrap();
                    assert!(max_norm(&(p2 - p * chi)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn octagon_relation() {
        let [a1, b1, a2, b2] = genus2_octagon();
        let c = |x: &Mat2, y: &Mat2| sl2::mul(&sl2::mul(x, y), &sl2::mul(&sl2::inv(x), &sl2::inv(y)));
        let rel = sl2::mul(&c(&a1, &b1), &c(&a2, &b2));
        assert!(sl2::dist(&rel, &sl2::ID) < 1e-10);
        for m in [a1, b1, a2, b2] {
            assert!((sl2::det(&m) - 1.0).abs() < 1e-12);
            assert!(sl2::trace(&m).abs() > 2.0);
        }
    }
}

#[cfg(test)]
mod eta_tests {
    use super::*;
    use crate::moebius::{slash_at, SuperFunction};
    use crate::superfunctions::{eta_squared, QSuperFunction};

    #[test]
    fn eta_squared_invariance() {
        for (case, mask, k) in [(EtaCase::Even, 0u32, 1i64), (EtaCase::Odd, 1, 0)] {
            let lat = build_eta_lattice(case).unwrap();
            let f = QSuperFunction::monomial(lat.alg, mask, eta_squared(60));
            for z in [Complex64::new(0.0, 1.0), Complex64::new(0.3, 0.8), Complex64::new(0.5, 0.6)] {
                let p = SuperPoint::standard(lat.alg, z);
                for g in ["Rhat", "Shat"] {
                    let m = &lat.generator(g).unwrap().matrix;
                    let d = slash_at(&f, m, k, &p).unwrap().dist(&f.eval(&p).unwrap());
                    assert!(d < 1e-8, "{case:?} {g} {z}: {d}");
                }
            }
        }
    }
}
