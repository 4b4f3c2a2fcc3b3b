//! Lifting classical super automorphic forms to deformed lattices, one level
//! of the parameter filtration at a time, by collocation and least squares.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

use crate::deformation::PLattice;
use crate::error::{Error, Result};
use crate::grassmann::{Algebra, ParamSpec, SuperScalar};
use crate::moebius::{slash_at, SuperFunction, SuperPoint};
use crate::superfunctions::{QExpansion, QSuperFunction};
use crate::supermatrix::SuperMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, Serialize)]
pub struct LiftConfig {
    /// Truncation `T`; corrections carry `⌈1.5 T⌉` exponents per component.
    pub trunc: usize,
    /// Highest power of `z` in the correction ansatz.
    pub zdeg: u32,
    /// Collocation points per unknown.
    pub oversampling: usize,
    pub tol: f64,
    /// Relative cutoff for singular values in the least-squares solve.
    pub rcond: f64,
    pub test_points: usize,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig {
            trunc: 20,
            zdeg: 3,
            oversampling: 2,
            tol: 1e-7,
            rcond: 1e-13,
            test_points: 12,
        }
    }
}

/// Point `j` of the deterministic grid in `0 ≤ Re z < 1`, `0.4 ≤ Im z ≤ 2.5`.
pub fn grid_point(j: usize) -> Complex64 {
    let golden = 0.618_033_988_749_894_9;
    let sqrt2 = std::f64::consts::SQRT_2 - 1.0;
    let x = ((j as f64 + 0.5) * golden).fract();
    let y = 0.4 + 2.1 * ((j as f64 + 0.5) * sqrt2).fract();
    Complex64::new(x, y)
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub pkey: u32,
    pub monomial: String,
    pub unknowns: usize,
    pub equations: usize,
    pub max_singular: f64,
    pub min_singular: f64,
    pub retained: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct LiftedForm {
    pub base: QSuperFunction,
    pub lifted: QSuperFunction,
    pub levels: Vec<LevelReport>,
    /// Largest `|f̃|_γ − f̃|` over generators and fresh test points.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct LiftProblem<'a> {
    pub plat: &'a PLattice,
    pub k: i64,
    pub config: LiftConfig,
}

fn mask_parity(m: u32) -> bool {
    m.count_ones() % 2 == 1
}

/// Parity of a function whose components share one parity.
pub fn function_parity(f: &QSuperFunction) -> Option<bool> {
    let spec = f.alg.param;
    let mut out = None;
    for t in &f.terms {
        if t.q.coeffs.iter().all(|c| c.norm() == 0.0) {
            continue;
        }
        let p = spec.is_odd(t.pkey) ^ mask_parity(t.mask);
        match out {
            None => out = Some(p),
            Some(q) if q != p => return None,
            _ => {}
        }
    }
    out
}

/// Re-express `f` (over any parameter algebra with only unit-monomial terms)
/// in the algebra `alg`.
pub fn embed_function(f: &QSuperFunction, alg: Algebra) -> Result<QSuperFunction> {
    if f.alg.r() != alg.r() {
        return Err(Error::SpecMismatch(f.alg.to_string(), alg.to_string()));
    }
    if f.terms.iter().any(|t| t.pkey != 0) {
        return Err(Error::Precondition("base form must be classical".into()));
    }
    Ok(QSuperFunction {
        alg,
        terms: f.terms.clone(),
    })
}

fn generator_matrices(plat: &PLattice) -> Vec<(String, SuperMatrix)> {
    plat.lattice
        .generators
        .iter()
        .map(|g| (g.name.clone(), g.matrix.clone()))
        .collect()
}

/// Largest invariance residual of `f` under all lattice generators at the points.
pub fn invariance_residual(f: &QSuperFunction, gens: &[(String, SuperMatrix)], k: i64, points: &[Complex64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in points {
        let p = SuperPoint::standard(f.alg, *z);
        let v = f.eval(&p)?;
        for (_, g) in gens {
            let s = slash_at(f, g, k, &p)?;
            worst = worst.max(s.dist(&v));
        }
    }
    Ok(worst)
}

/// Lift `f` (classical, invariant under the base lattice) to the deformed
/// lattice in `problem`.
pub fn lift(problem: &LiftProblem, f: &QSuperFunction) -> Result<LiftedForm> {
    let plat = problem.plat;
    let cfg = &problem.config;
    let alg = plat.lattice.alg;
    let r = alg.r();
    let spec = alg.param;
    let base_alg = Algebra::new(ParamSpec::Trivial, r)?;
    let base = embed_function(f, base_alg)?;
    let parity = function_parity(&base).ok_or_else(|| Error::Precondition("base form is not homogeneous".into()))?;
    let (nu0, q_den) = base
        .terms
        .first()
        .map(|t| (t.q.nu0, t.q.q_den))
        .unwrap_or((Rational64::zero(), 1));
    let k = problem.k;
    let base_gens: Vec<(String, SuperMatrix)> = plat
        .base
        .generators
        .iter()
        .map(|g| (g.name.clone(), g.matrix.clone()))
        .collect();
    let test: Vec<Complex64> = (0..cfg.test_points).map(|j| grid_point(10_000 + 7 * j)).collect();
    let pre = invariance_residual(&base, &base_gens, k, &test)?;
    if pre > cfg.tol {
        return Err(Error::Precondition(format!(
            "base form is not invariant under the base lattice (residual {pre:.2e})"
        )));
    }
    let gens = generator_matrices(plat);
    let mut lifted = embed_function(f, alg)?;
    let ncoef = (cfg.trunc as f64 * 1.5).ceil() as usize;
    let mut levels = Vec::new();

    for level in 1..spec.nilpotency() {
        let keys: Vec<u32> = spec.monomials().into_iter().filter(|&p| spec.degree(p) == level).collect();
        for pkey in keys {
            let want_odd_mask = parity ^ spec.is_odd(pkey);
            let masks: Vec<u32> = (0..(1u32 << r)).filter(|&m| mask_parity(m) == want_odd_mask).collect();
            // unknowns: (mask, d, n)
            let mut unknowns = Vec::new();
            for &m in &masks {
                for d in 0..=cfg.zdeg {
                    for n in 0..ncoef {
                        unknowns.push((m, d, n));
                    }
                }
            }
            let npts = (cfg.oversampling * unknowns.len()).div_ceil(gens.len() * masks.len()).max(1);
            let points: Vec<Complex64> = (0..npts).map(grid_point).collect();
            let nrows = points.len() * gens.len() * masks.len();
            let mut a = DMatrix::<Complex64>::zeros(nrows, unknowns.len());
            let mut b = DVector::<Complex64>::zeros(nrows);
            for (pi, z) in points.iter().enumerate() {
                let pp = SuperPoint::standard(alg, *z);
                let pb = SuperPoint::standard(base_alg, *z);
                let val = lifted.eval(&pp)?;
                for (gi, (_, g)) in gens.iter().enumerate() {
                    let res = &slash_at(&lifted, g, k, &pp)? - &val;
                    let gb = &base_gens[gi].1;
                    for (mi, &m) in masks.iter().enumerate() {
                        let row = (pi * gens.len() + gi) * masks.len() + mi;
                        b[row] = -res.coeff(pkey, m);
                    }
                    for (ci, &(m, d, n)) in unknowns.iter().enumerate() {
                        let mut h = QSuperFunction::zero(base_alg);
                        let mut coeffs = vec![ZERO; n + 1];
                        coeffs[n] = ONE;
                        h.push(0, m, d, QExpansion::new(nu0, q_den, coeffs));
                        let diff = &slash_at(&h, gb, k, &pb)? - &h.eval(&pb)?;
                        for (mi, &m2) in masks.iter().enumerate() {
                            let row = (pi * gens.len() + gi) * masks.len() + mi;
                            a[(row, ci)] = diff.coeff(0, m2);
                        }
                    }
                }
            }
            let svd = a.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let cutoff = cfg.rcond * smax;
            let retained = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
            let smin = svd.singular_values.iter().copied().filter(|&s| s > cutoff).fold(f64::INFINITY, f64::min);
            let x = svd
                .solve(&b, cutoff)
                .map_err(|e| Error::Numeric(format!("least squares failed: {e}")))?;
            let fit = (&a * &x - &b).iter().map(|c| c.norm()).fold(0.0, f64::max);
            // install the correction
            for &m in &masks {
                for d in 0..=cfg.zdeg {
                    let coeffs: Vec<Complex64> = unknowns
                        .iter()
                        .enumerate()
                        .filter(|(_, u)| u.0 == m && u.1 == d)
                        .map(|(ci, _)| x[ci])
                        .collect();
                    if coeffs.iter().any(|c| c.norm() > 0.0) {
                        lifted.push(pkey, m, d, QExpansion::new(nu0, q_den, coeffs));
                    }
                }
            }
            levels.push(LevelReport {
                pkey,
                monomial: spec.monomial_name(pkey),
                unknowns: unknowns.len(),
                equations: nrows,
                max_singular: smax,
                min_singular: smin,
                retained,
                residual: fit,
            });
        }
    }
    let residual = invariance_residual(&lifted, &gens, k, &test)?;
    if residual > cfg.tol {
        let (lvl, smin) = levels
            .last()
            .map(|l| (spec.degree(l.pkey), l.min_singular))
            .unwrap_or((0, f64::NAN));
        return Err(Error::LiftFailure {
            level: lvl,
            residual,
            min_singular: smin,
        });
    }
    Ok(LiftedForm {
        base: embed_function(f, alg)?,
        lifted,
        levels,
        residual,
    })
}

/// Conditions of the free-module lemma for a lifted basis.
#[derive(Clone, Debug, Serialize)]
pub struct FreeModuleCertificate {
    /// Number of lifted forms `d`.
    pub d: usize,
    /// Rank of the relative bodies, sampled.
    pub body_rank: usize,
    pub dim_p: usize,
    /// Complex dimension of the span of `{p · f̃_i}`, sampled.
    pub dim_span: usize,
    pub certified: bool,
}

fn sample_matrix(values: &[Vec<SuperScalar>], alg: Algebra) -> DMatrix<Complex64> {
    let keys: Vec<(u32, u32)> = alg
        .param
        .monomials()
        .into_iter()
        .flat_map(|p| (0..(1u32 << alg.r())).map(move |m| (p, m)))
        .collect();
    let rows = values.first().map(|v| v.len()).unwrap_or(0) * keys.len();
    DMatrix::from_fn(rows, values.len(), |row, col| {
        let (pt, ki) = (row / keys.len(), row % keys.len());
        let (p, m) = keys[ki];
        values[col][pt].coeff(p, m)
    })
}

fn complex_rank(m: &DMatrix<Complex64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let t = 1e-9 * sv.max();
    sv.iter().filter(|&&s| s > t).count()
}

pub fn free_module_certificate(lifted: &[LiftedForm]) -> Result<FreeModuleCertificate> {
    let alg = lifted
        .first()
        .map(|l| l.lifted.alg)
        .ok_or_else(|| Error::Precondition("no lifted forms".into()))?;
    let points: Vec<Complex64> = (0..8).map(|j| grid_point(20_000 + 3 * j)).collect();
    let mut bodies = Vec::new();
    let mut span = Vec::new();
    for l in lifted {
        let rb = l.lifted.rel_body();
        bodies.push(
            points
                .iter()
                .map(|z| rb.eval(&SuperPoint::standard(alg, *z)))
                .collect::<Result<Vec<_>>>()?,
        );
        let vals = points
            .iter()
            .map(|z| l.lifted.eval(&SuperPoint::standard(alg, *z)))
            .collect::<Result<Vec<_>>>()?;
        for p in alg.param.monomials() {
            let pm = SuperScalar::param(alg, p, ONE);
            span.push(vals.iter().map(|v| &pm * v).collect::<Vec<_>>());
        }
    }
    let d = lifted.len();
    let body_rank = complex_rank(&sample_matrix(&bodies, alg));
    let dim_span = complex_rank(&sample_matrix(&span, alg));
    let dim_p = alg.param.dim();
    Ok(FreeModuleCertificate {
        d,
        body_rank,
        dim_p,
        dim_span,
        certified: body_rank == d && dim_span == d * dim_p,
    })
}

/// The isomorphism data `sM_k(Υ) ≅ P^C ⊗ sM_k(Γ)` on a lifted basis: `#'`
/// returns the base exactly and parities match.
#[derive(Clone, Debug, Serialize)]
pub struct ParammainReport {
    pub rel_body_exact: bool,
    pub parity_preserved: bool,
    pub residuals: Vec<f64>,
    pub certificate: FreeModuleCertificate,
}

pub fn parammain_check(lifted: &[LiftedForm]) -> Result<ParammainReport> {
    let rel_body_exact = lifted
        .iter()
        .all(|l| l.lifted.rel_body().coefficient_distance(&l.base) == 0.0);
    let parity_preserved = lifted.iter().all(|l| {
        let a = function_parity(&l.lifted);
        a.is_some() && a == function_parity(&l.base)
    });
    Ok(ParammainReport {
        rel_body_exact,
        parity_preserved,
        residuals: lifted.iter().map(|l| l.residual).collect(),
        certificate: free_module_certificate(lifted)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{embed_lattice, infinitesimal_classes};
    use crate::lattices::{build_eta_lattice, EtaCase};
    use crate::superfunctions::eta_squared;

    fn eta_form(case: EtaCase) -> (QSuperFunction, i64) {
        let alg = Algebra::new(ParamSpec::Trivial, 1).unwrap();
        match case {
            EtaCase::Even => (QSuperFunction::monomial(alg, 0, eta_squared(60)), 1),
            EtaCase::Odd => (QSuperFunction::monomial(alg, 1, eta_squared(60)), 0),
        }
    }

    #[test]
    fn trivial_deformation_needs_no_correction() {
        let lat = build_eta_lattice(EtaCase::Even).unwrap();
        let plat = PLattice {
            base: lat.clone(),
            lattice: embed_lattice(&lat, ParamSpec::Polynomial { n: 2 }).unwrap(),
        };
        let (f, k) = eta_form(EtaCase::Even);
        let prob = LiftProblem {
            plat: &plat,
            k,
            config: LiftConfig::default(),
        };
        let l = lift(&prob, &f).unwrap();
        assert!(l.residual < 1e-9);
        let extra: f64 = l
            .lifted
            .terms
            .iter()
            .filter(|t| t.pkey != 0)
            .flat_map(|t| t.q.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(extra < 1e-9, "{extra}");
    }

    #[test]
    fn eta_squared_lifts_along_the_class() {
        for case in [EtaCase::Even, EtaCase::Odd] {
            let lat = build_eta_lattice(case).unwrap();
            let plat = infinitesimal_classes(&lat).unwrap().remove(0);
            let (f, k) = eta_form(case);
            let prob = LiftProblem {
                plat: &plat,
                k,
                config: LiftConfig::default(),
            };
            let l = lift(&prob, &f).unwrap_or_else(|e| panic!("{case:?}: {e}"));
            assert!(l.residual < 1e-7, "{case:?}: {}", l.residual);
            let extra: f64 = l
                .lifted
                .terms
                .iter()
                .filter(|t| t.pkey != 0)
                .flat_map(|t| t.q.coeffs.iter())
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!(extra > 1e-3, "{case:?}: deformation left the form unchanged");
            let rep = parammain_check(&[l]).unwrap();
            assert!(rep.rel_body_exact && rep.parity_preserved);
            assert!(rep.certificate.certified, "{:?}", rep.certificate);
            assert_eq!(rep.certificate.dim_span, 2);
        }
    }
}
