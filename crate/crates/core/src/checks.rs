//! Measurements behind the end-to-end acceptance criteria. Each function
//! returns raw residuals and integers; [`run_all`] judges them against a
//! [`Tolerances`] and is what `superhp selftest` prints.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adapt::{lift, parammain_check, LiftConfig, LiftProblem};
use crate::deformation::{
    chi_tilde_properties, dirichlet_series, h1_dims_example_ii, h1_fox, infinitesimal_classes, OmegaN,
    ParabolicNormalForm,
};
use crate::error::Result;
use crate::grassmann::{random as grandom, Algebra, ParamSpec, Parity, SuperScalar};
use crate::lattices::{build_embedded_sl2z, build_eta_lattice, build_genus2, example_i_auto, EtaCase, Lattice};
use crate::moebius::{act, cocycle_j, jacobian_berezinian, slash_at, ExpSum, Slashed, SuperFunction, SuperPoint};
use crate::riemann_roch::DimensionCalculator;
use crate::superfunctions::{eta_squared, QSuperFunction};
use crate::supermatrix::{lie, max_norm, random as mrandom};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub algebra: f64,
    pub group: f64,
    pub cocycle: f64,
    pub jacobian: f64,
    pub eta: f64,
    pub projector: f64,
    pub exp_log: f64,
    pub chi_tilde: f64,
    pub omega: f64,
    pub lift: f64,
    /// Allowed `|dim − (k/2)·vol|` in the asymptotic sweep.
    pub asymptotic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebra: 1e-12,
            group: 1e-10,
            cocycle: 1e-10,
            jacobian: 1e-9,
            eta: 1e-8,
            projector: 1e-12,
            exp_log: 1e-12,
            chi_tilde: 1e-10,
            omega: 1e-8,
            lift: 1e-7,
            asymptotic: 2.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraLaws {
    pub cases: usize,
    /// Cases where an identity between integral elements was not exact.
    pub exact_failures: usize,
    pub inverse_residual: f64,
    pub power_residual: f64,
}

fn sample_specs() -> [ParamSpec; 4] {
    [
        ParamSpec::Trivial,
        ParamSpec::Polynomial { n: 3 },
        ParamSpec::Exterior { m: 2 },
        ParamSpec::Exterior { m: 3 },
    ]
}

fn random_parity<R: Rng>(rng: &mut R) -> Parity {
    if rng.gen_bool(0.5) {
        Parity::Odd
    } else {
        Parity::Even
    }
}

/// Graded commutativity and associativity on integral elements (exact), unit
/// inversion and `power_real` on float elements.
pub fn algebra_laws(seed: u64, cases: usize) -> Result<AlgebraLaws> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = AlgebraLaws {
        cases,
        exact_failures: 0,
        inverse_residual: 0.0,
        power_residual: 0.0,
    };
    let specs = sample_specs();
    for i in 0..cases {
        let alg = Algebra::new(specs[i % specs.len()], 1 + i % 3)?;
        let (pa, pb) = (random_parity(&mut rng), random_parity(&mut rng));
        let a = grandom::scalar(&mut rng, alg, pa, true, true);
        let b = grandom::scalar(&mut rng, alg, pb, true, true);
        let pc = random_parity(&mut rng);
        let c = grandom::scalar(&mut rng, alg, pc, true, true);
        let sign = if pa == Parity::Odd && pb == Parity::Odd { -1.0 } else { 1.0 };
        let comm = &(&a * &b) - &(&b * &a).scale_re(sign);
        let assoc = &(&(&a * &b) * &c) - &(&a * &(&b * &c));
        if comm.max_abs() != 0.0 || assoc.max_abs() != 0.0 {
            out.exact_failures += 1;
        }
        let body = rng.gen_range(0.5..2.0);
        let nil = grandom::scalar(&mut rng, alg, Parity::Even, false, false);
        let u = &SuperScalar::real(alg, body) + &nil;
        let inv = u.invert_unit()?;
        out.inverse_residual = out.inverse_residual.max((&u * &inv).dist(&SuperScalar::one(alg)));
        let s = rng.gen_range(0.25..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let us = u.power_real(s)?;
        let back = us.power_real(1.0 / s)?;
        let unit = &us * &u.power_real(-s)?;
        out.power_residual = out
            .power_residual
            .max(back.dist(&u))
            .max(unit.dist(&SuperScalar::one(alg)));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupLaws {
    pub cases: usize,
    pub ber_multiplicativity: f64,
    pub closure: f64,
    /// Cases where the product's residual exceeded twice the factors' plus `1e−12`.
    pub closure_growth_failures: usize,
}

/// Berezinian multiplicativity and `g I g* = I` closure, `r ∈ {1,3}`, `N ∈ {2,3}`.
pub fn group_laws(seed: u64, cases: usize) -> Result<GroupLaws> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = [
        ParamSpec::Polynomial { n: 2 },
        ParamSpec::Polynomial { n: 3 },
        ParamSpec::Exterior { m: 1 },
        ParamSpec::Exterior { m: 2 },
    ];
    let mut out = GroupLaws {
        cases,
        ber_multiplicativity: 0.0,
        closure: 0.0,
        closure_growth_failures: 0,
    };
    for i in 0..cases {
        let r = if i % 2 == 0 { 1 } else { 3 };
        let alg = Algebra::new(specs[(i / 2) % specs.len()], r)?;
        let g = mrandom::point(&mut rng, alg, 0.5);
        let h = mrandom::point(&mut rng, alg, 0.5);
        let gh = g.matmul(&h);
        let lhs = gh.berezinian()?;
        let rhs = &g.berezinian()? * &h.berezinian()?;
        out.ber_multiplicativity = out.ber_multiplicativity.max(lhs.dist(&rhs));
        let res = |m: &crate::supermatrix::SuperMatrix| {
            let rep = m.membership(f64::INFINITY);
            rep.unitary_residual.max(rep.ber_residual)
        };
        let (rg, rh, rgh) = (res(&g), res(&h), res(&gh));
        out.closure = out.closure.max(rgh);
        if rgh > 2.0 * (rg + rh) + 1e-12 {
            out.closure_growth_failures += 1;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CocycleSlash {
    pub cases: usize,
    pub cocycle: f64,
    pub slash: f64,
}

/// `j(gh,p) = j(g,h p) j(h,p)` and `(f|g)|h = f|gh` on random triples.
pub fn cocycle_and_slash(seed: u64, cases: usize) -> Result<CocycleSlash> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = [ParamSpec::Exterior { m: 2 }, ParamSpec::Polynomial { n: 2 }];
    let mut out = CocycleSlash {
        cases,
        cocycle: 0.0,
        slash: 0.0,
    };
    for i in 0..cases {
        let r = 1 + i % 2;
        let alg = Algebra::new(specs[(i / 2) % specs.len()], r)?;
        let g = mrandom::point(&mut rng, alg, 0.4);
        let h = mrandom::point(&mut rng, alg, 0.4);
        let base = SuperPoint::standard(alg, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)));
        let p = act(&mrandom::point(&mut rng, alg, 0.3), &base)?;
        let gh = g.matmul(&h);
        let lhs = cocycle_j(&gh, &p)?;
        let rhs = &cocycle_j(&g, &act(&h, &p)?)? * &cocycle_j(&h, &p)?;
        out.cocycle = out.cocycle.max(lhs.dist(&rhs));
        let mut terms = Vec::new();
        for m in 0..(1u32 << r) {
            for pk in alg.param.monomials() {
                if rng.gen_bool(0.5) {
                    continue;
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let a = Complex64::new(0.0, rng.gen_range(0.2..1.5));
                terms.push((pk, m, c, a));
            }
        }
        let f = ExpSum { alg, terms };
        let k = rng.gen_range(-3..4);
        let fg = Slashed { f: &f, g: g.clone(), k };
        let lhs = slash_at(&fg, &h, k, &p)?;
        let rhs = slash_at(&f, &gh, k, &p)?;
        out.slash = out.slash.max(lhs.dist(&rhs) / (1.0 + rhs.max_abs()));
    }
    Ok(out)
}

/// Largest `|Ber sD α(g,·) − j^{2−r}|` at random `(g, z)`, `r ∈ {1,3}`.
pub fn jacobian_identity(seed: u64, cases: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..cases {
        let r = if i % 2 == 0 { 1 } else { 3 };
        let alg = Algebra::new(ParamSpec::Exterior { m: 2 }, r)?;
        let g = mrandom::point(&mut rng, alg, 0.6);
        let z0 = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0));
        let ber = jacobian_berezinian(&g, &SuperScalar::constant(alg, z0))?;
        let j = cocycle_j(&g, &SuperPoint::standard(alg, z0))?;
        worst = worst.max(ber.dist(&j.powi(2 - r as i64)?));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeRow {
    pub label: String,
    pub k: i64,
    pub rho: usize,
    pub rank: usize,
    pub c1: i64,
    pub dim_sm: i64,
}

/// Degrees and dimensions of the two η² lattices at the weights of their generators.
pub fn eta_degrees() -> Result<Vec<DegreeRow>> {
    let mut out = Vec::new();
    for (label, case, k, rho) in [
        ("even, E_1^0", EtaCase::Even, 1, 0),
        ("even, E_1^1", EtaCase::Even, 1, 1),
        ("odd, E_0^1", EtaCase::Odd, 0, 1),
        ("odd, E_0^0", EtaCase::Odd, 0, 0),
    ] {
        let calc = DimensionCalculator::new(&build_eta_lattice(case)?, rho)?;
        let rep = calc.report(k)?;
        out.push(DegreeRow {
            label: label.into(),
            k,
            rho,
            rank: rep.rank,
            c1: rep.c1,
            dim_sm: rep.dim_sm,
        });
    }
    Ok(out)
}

/// The classical generator of each η² lattice: `η²` at weight 1, `η²ζ` at weight 0.
pub fn eta_generator(case: EtaCase, trunc: usize) -> Result<(QSuperFunction, i64)> {
    let alg = Algebra::new(ParamSpec::Trivial, 1)?;
    Ok(match case {
        EtaCase::Even => (QSuperFunction::monomial(alg, 0, eta_squared(trunc)), 1),
        EtaCase::Odd => (QSuperFunction::monomial(alg, 1, eta_squared(trunc)), 0),
    })
}

/// Largest invariance residual of the generator under every lattice generator.
pub fn eta_invariance(case: EtaCase, trunc: usize, points: &[Complex64]) -> Result<f64> {
    let lat = build_eta_lattice(case)?;
    let (f, k) = eta_generator(case, trunc)?;
    let mut worst = 0.0f64;
    for z in points {
        let p = SuperPoint::standard(f.alg, *z);
        let v = f.eval(&p)?;
        for g in &lat.generators {
            worst = worst.max(slash_at(&f, &g.matrix, k, &p)?.dist(&v));
        }
    }
    Ok(worst)
}

pub fn eta_sample_points() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 1.0),
        Complex64::new(0.31, 0.52),
        Complex64::new(-0.47, 0.83),
        Complex64::new(0.12, 1.7),
        Complex64::new(-0.05, 0.61),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct Sl2zSweep {
    pub k1: i64,
    /// `(k, dim sM_k)` for every `k` in the sweep.
    pub dims: Vec<(i64, i64)>,
    pub asymptotic_deviation: f64,
}

pub fn sl2z_sweep(k_from: i64, k_to: i64, asym_to: i64) -> Result<Sl2zSweep> {
    let calc = DimensionCalculator::new(&build_embedded_sl2z(1)?, 0)?;
    let k1 = calc.default_k1(300)?;
    let calc = calc.with_k1(k1);
    let mut dims = Vec::new();
    for k in k_from.max(k1)..=k_to {
        dims.push((k, calc.dim_sm(k, true)?.dim_sm));
    }
    let asym = calc.asymptotic_check(k1.max(1)..=asym_to)?;
    Ok(Sl2zSweep {
        k1,
        dims,
        asymptotic_deviation: asym.max_deviation_sm,
    })
}

/// The classical `dim M_k(SL(2,Z))`.
pub fn classical_dim_sl2z(k: i64) -> i64 {
    if k < 0 || k % 2 == 1 {
        return 0;
    }
    if k % 12 == 2 {
        k / 12
    } else {
        k / 12 + 1
    }
}

/// Example-⟨i⟩ lattices with `|Γ₀| = 1, 2, 3`; `γ₀ ∈ G` needs `ε₀² = det E₀`.
pub fn periodicity_lattices() -> Result<Vec<Lattice>> {
    let w3 = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
    Ok(vec![
        example_i_auto(ONE, &[ONE])?,
        example_i_auto(ONE, &[-ONE, -ONE])?,
        example_i_auto(w3, &[w3 * w3])?,
    ])
}

/// `(|Γ₀|, max ‖P_k − P_{k+|Γ₀|}‖)` over `k ∈ [−8, 16]` and all `ρ`.
pub fn projector_periodicity() -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for lat in periodicity_lattices()? {
        let n = lat.gamma0_order as i64;
        let mut worst = 0.0f64;
        for rho in 0..=lat.r() {
            for k in -8..=16 {
                let a = lat.vk_rho(k, rho);
                let b = lat.vk_rho(k + n, rho);
                worst = worst.max(max_norm(&(&a.projector - &b.projector)));
            }
        }
        out.push((lat.gamma0_order, worst));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Genus2Row {
    pub angles: [f64; 4],
    pub fox: (usize, usize),
    pub closed_form: (usize, usize),
}

pub fn genus2_h1(seed: u64, draws: usize) -> Result<Vec<Genus2Row>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..draws {
        let angles = [0; 4].map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let lat = build_genus2(angles)?;
        out.push(Genus2Row {
            angles,
            fox: h1_fox(&lat, seed + i as u64)?.dims(),
            closed_form: h1_dims_example_ii(&lat)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeformationKernel {
    pub exp_log: f64,
    pub ad_invariance: f64,
    pub commutation: f64,
    pub omega_squares: f64,
    pub omega_rel_body: f64,
}

pub fn deformation_kernel(seed: u64) -> Result<DeformationKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DeformationKernel {
        exp_log: 0.0,
        ad_invariance: 0.0,
        commutation: 0.0,
        omega_squares: 0.0,
        omega_rel_body: 0.0,
    };
    for i in 0..20 {
        let spec = if i % 2 == 0 {
            ParamSpec::Polynomial { n: 2 }
        } else {
            ParamSpec::Exterior { m: 2 }
        };
        let alg = Algebra::new(spec, 1 + i % 3)?;
        let base = lie::random_param_element(&mut rng, alg, 0.8, true).rel_body();
        let x = base.add(&lie::random_param_element(&mut rng, alg, 0.3, false));
        let back = x.exp().log_point(&base)?;
        out.exp_log = out.exp_log.max(back.dist(&x));
    }
    for case in [EtaCase::Even, EtaCase::Odd] {
        let lat = build_eta_lattice(case)?;
        let pl = infinitesimal_classes(&lat)?.remove(0);
        let pnf = ParabolicNormalForm::from_plattice(&pl)?;
        let terms = dirichlet_series(pnf.eps0, &pnf.e0, 3, 10_000)?;
        let (ad, comm) = chi_tilde_properties(&pnf, &terms)?;
        out.ad_invariance = out.ad_invariance.max(ad);
        out.commutation = out.commutation.max(comm);
        let alg = pnf.g0.algebra();
        let term = terms.last().expect("at least one admissible exponent");
        let om = OmegaN::new(&pnf, term)?;
        for z in [Complex64::new(0.1, 1.0), Complex64::new(-0.3, 0.7), Complex64::new(0.45, 1.6)] {
            let p = SuperPoint::standard(alg, z);
            let q = om.eval(&p)?;
            out.omega_rel_body = out.omega_rel_body.max((q.z.rel_body().body() - z).norm());
            for t in [0.3, -0.8, 1.7] {
                let (a, b) = om.intertwining_residuals(&pnf, &p, t)?;
                out.omega_squares = out.omega_squares.max(a).max(b);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftRow {
    pub case: String,
    pub residual: f64,
    pub rel_body_exact: bool,
    pub parity_preserved: bool,
    pub rank_over_p: usize,
    pub dim_span: usize,
    pub dim_p: usize,
    pub certified: bool,
    pub max_correction: f64,
}

/// Lift the η² generators along the first infinitesimal class of their lattice.
pub fn lift_eta(config: &LiftConfig) -> Result<Vec<LiftRow>> {
    let mut out = Vec::new();
    for case in [EtaCase::Even, EtaCase::Odd] {
        let lat = build_eta_lattice(case)?;
        let plat = infinitesimal_classes(&lat)?.remove(0);
        let (f, k) = eta_generator(case, 60)?;
        let prob = LiftProblem {
            plat: &plat,
            k,
            config: config.clone(),
        };
        let l = lift(&prob, &f)?;
        let max_correction = l
            .lifted
            .terms
            .iter()
            .filter(|t| t.pkey != 0)
            .flat_map(|t| t.q.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let rep = parammain_check(std::slice::from_ref(&l))?;
        out.push(LiftRow {
            case: format!("{case:?}"),
            residual: l.residual,
            rel_body_exact: rep.rel_body_exact,
            parity_preserved: rep.parity_preserved,
            rank_over_p: rep.certificate.body_rank,
            dim_span: rep.certificate.dim_span,
            dim_p: rep.certificate.dim_p,
            certified: rep.certificate.certified,
            max_correction,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn judge(id: u8, title: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        title,
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

/// Run the eleven criteria in order.
pub fn run_all(tol: &Tolerances, seed: u64) -> Vec<Outcome> {
    vec![
        judge(1, "algebra laws", || {
            let m = algebra_laws(seed, 500)?;
            let ok = m.exact_failures == 0 && m.inverse_residual < tol.algebra && m.power_residual < tol.algebra;
            Ok((ok, format!("{} cases, exact failures {}, inverse {:.1e}, power {:.1e}", m.cases, m.exact_failures, m.inverse_residual, m.power_residual)))
        }),
        judge(2, "group laws", || {
            let m = group_laws(seed, 200)?;
            let ok = m.ber_multiplicativity < tol.group && m.closure < tol.group && m.closure_growth_failures == 0;
            Ok((ok, format!("Ber {:.1e}, closure {:.1e}", m.ber_multiplicativity, m.closure)))
        }),
        judge(3, "cocycle and slash", || {
            let m = cocycle_and_slash(seed, 200)?;
            Ok((m.cocycle < tol.cocycle && m.slash < tol.cocycle, format!("cocycle {:.1e}, slash {:.1e}", m.cocycle, m.slash)))
        }),
        judge(4, "jacobian berezinian", || {
            let m = jacobian_identity(seed, 50)?;
            Ok((m < tol.jacobian, format!("{m:.1e}")))
        }),
        judge(5, "golden degrees", || {
            let rows = eta_degrees()?;
            let want = [(0, 1), (-1, 0), (0, 1), (0, 1)];
            let ok = rows.iter().zip(want).all(|(r, (c1, d))| r.rank == 1 && r.c1 == c1 && r.dim_sm == d);
            let s: Vec<String> = rows.iter().map(|r| format!("{} deg {}", r.label, r.c1)).collect();
            Ok((ok, s.join("; ")))
        }),
        judge(6, "eta generators", || {
            let pts = eta_sample_points();
            let a = eta_invariance(EtaCase::Even, 60, &pts)?;
            let b = eta_invariance(EtaCase::Odd, 60, &pts)?;
            let dims: Vec<i64> = eta_degrees()?.iter().map(|r| r.dim_sm).collect();
            let ok = a < tol.eta && b < tol.eta && dims == [1, 0, 1, 1];
            Ok((ok, format!("residuals {a:.1e} {b:.1e}, dims {dims:?}")))
        }),
        judge(7, "SL(2,Z) dimensions", || {
            let s = sl2z_sweep(16, 60, 200)?;
            let bad: Vec<i64> = s
                .dims
                .iter()
                .filter(|(k, d)| k % 2 == 0 && *d != classical_dim_sl2z(*k))
                .map(|(k, _)| *k)
                .collect();
            let covered = s.dims.first().map(|d| d.0 <= 16).unwrap_or(false);
            let ok = bad.is_empty() && covered && s.asymptotic_deviation <= tol.asymptotic;
            Ok((ok, format!("k1 {}, mismatches {bad:?}, asymptotic {:.3}", s.k1, s.asymptotic_deviation)))
        }),
        judge(8, "V_k periodicity", || {
            let rows = projector_periodicity()?;
            let orders: Vec<usize> = rows.iter().map(|r| r.0).collect();
            let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
            Ok((worst < tol.projector && orders == [1, 2, 3], format!("orders {orders:?}, {worst:.1e}")))
        }),
        judge(9, "genus-2 H1", || {
            let rows = genus2_h1(seed, 20)?;
            let ok = rows.iter().all(|r| r.fox == (10, 8) && r.closed_form == (10, 8));
            Ok((ok, format!("{} draws", rows.len())))
        }),
        judge(10, "deformation kernel", || {
            let m = deformation_kernel(seed)?;
            let ok = m.exp_log < tol.exp_log
                && m.ad_invariance < tol.chi_tilde
                && m.commutation < tol.chi_tilde
                && m.omega_squares < tol.omega
                && m.omega_rel_body < tol.omega;
            Ok((ok, format!("exp/log {:.1e}, Ad {:.1e}, comm {:.1e}, squares {:.1e}", m.exp_log, m.ad_invariance, m.commutation, m.omega_squares)))
        }),
        judge(11, "lift", || {
            let cfg = LiftConfig {
                tol: tol.lift,
                ..LiftConfig::default()
            };
            let rows = lift_eta(&cfg)?;
            let ok = rows.iter().all(|r| {
                r.residual < tol.lift && r.rel_body_exact && r.parity_preserved && r.certified && r.rank_over_p == 1 && r.dim_span == r.dim_p
            });
            let s: Vec<String> = rows.iter().map(|r| format!("{} {:.1e}", r.case, r.residual)).collect();
            Ok((ok, s.join(", ")))
        }),
    ]
}
