//! End-to-end acceptance run: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use superhp::adapt::LiftConfig;
use superhp::checks::{
    algebra_laws, cocycle_and_slash, deformation_kernel, eta_degrees, eta_invariance, eta_sample_points, genus2_h1,
    group_laws, jacobian_identity, lift_eta, projector_periodicity, sl2z_sweep,
};
use superhp::lattices::EtaCase;
use superhp::Result;

const SEED: u64 = 20_240_611;

const ALGEBRA_TOL: f64 = 1e-12;
const GROUP_TOL: f64 = 1e-10;
const COCYCLE_TOL: f64 = 1e-10;
const JACOBIAN_TOL: f64 = 1e-9;
const ETA_TOL: f64 = 1e-8;
const PROJECTOR_TOL: f64 = 1e-12;
const EXP_LOG_TOL: f64 = 1e-12;
const CHI_TILDE_TOL: f64 = 1e-10;
const OMEGA_TOL: f64 = 1e-8;
const LIFT_TOL: f64 = 1e-7;
const ASYMPTOTIC_BOUND: f64 = 2.0;

/// `dim M_k(SL(2,Z))` as the number of monomials `E4^a E6^b` of weight `k`.
fn monomial_count(k: i64) -> i64 {
    let mut n = 0;
    let mut a = 0;
    while 4 * a <= k {
        if (k - 4 * a) % 6 == 0 {
            n += 1;
        }
        a += 1;
    }
    n
}

fn c1() -> Result<(bool, String)> {
    let m = algebra_laws(SEED, 500)?;
    let ok = m.cases == 500 && m.exact_failures == 0 && m.inverse_residual < ALGEBRA_TOL && m.power_residual < ALGEBRA_TOL;
    Ok((ok, format!("500 cases, exact failures {}, inverse {:.2e}, power {:.2e}", m.exact_failures, m.inverse_residual, m.power_residual)))
}

fn c2() -> Result<(bool, String)> {
    let m = group_laws(SEED, 200)?;
    let ok = m.ber_multiplicativity < GROUP_TOL && m.closure < GROUP_TOL && m.closure_growth_failures == 0;
    Ok((ok, format!("200 points, Ber {:.2e}, closure {:.2e}", m.ber_multiplicativity, m.closure)))
}

fn c3() -> Result<(bool, String)> {
    let m = cocycle_and_slash(SEED, 200)?;
    Ok((m.cocycle < COCYCLE_TOL && m.slash < COCYCLE_TOL, format!("200 triples, cocycle {:.2e}, slash {:.2e}", m.cocycle, m.slash)))
}

fn c4() -> Result<(bool, String)> {
    let m = jacobian_identity(SEED, 50)?;
    Ok((m < JACOBIAN_TOL, format!("50 draws, r in {{1,3}}, {m:.2e}")))
}

fn c5() -> Result<(bool, String)> {
    let rows = eta_degrees()?;
    let want = [(1, 0), (1, -1), (1, 0), (1, 0)];
    let got: Vec<(usize, i64)> = rows.iter().map(|r| (r.rank, r.c1)).collect();
    Ok((got == want, format!("(rank, deg) {got:?}")))
}

fn c6() -> Result<(bool, String)> {
    let pts = eta_sample_points();
    let even = eta_invariance(EtaCase::Even, 60, &pts)?;
    let odd = eta_invariance(EtaCase::Odd, 60, &pts)?;
    let dims: Vec<i64> = eta_degrees()?.iter().map(|r| r.dim_sm).collect();
    let ok = pts.len() == 5 && pts.iter().all(|z| z.im >= 0.5) && even < ETA_TOL && odd < ETA_TOL && dims == [1, 0, 1, 1];
    Ok((ok, format!("eta^2 {even:.2e}, eta^2 zeta {odd:.2e}, dims {dims:?}")))
}

fn c7() -> Result<(bool, String)> {
    let s = sl2z_sweep(16, 60, 200)?;
    let mut mismatches = Vec::new();
    for k in (16..=60).step_by(2) {
        match s.dims.iter().find(|d| d.0 == k) {
            Some(&(_, d)) if d == monomial_count(k) => {}
            _ => mismatches.push(k),
        }
    }
    let ok = mismatches.is_empty() && s.asymptotic_deviation <= ASYMPTOTIC_BOUND;
    Ok((ok, format!("k1 {}, mismatches {mismatches:?}, max |dim - k/12| {:.3}", s.k1, s.asymptotic_deviation)))
}

fn c8() -> Result<(bool, String)> {
    let rows = projector_periodicity()?;
    let orders: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok((orders == [1, 2, 3] && worst < PROJECTOR_TOL, format!("|Gamma0| {orders:?}, {worst:.2e}")))
}

fn c9() -> Result<(bool, String)> {
    // genus 2, r = 1: dim H1(g0) = 2(3 + 1) + 2·dim z_u(1)(E, F), dim H1(g1) = 8
    let want = (2 * (3 + 1) + 2, 8);
    let rows = genus2_h1(SEED, 20)?;
    let bad = rows.iter().filter(|r| r.fox != want || r.closed_form != want).count();
    Ok((rows.len() == 20 && bad == 0, format!("20 draws, expected {want:?}, mismatches {bad}")))
}

fn c10() -> Result<(bool, String)> {
    let m = deformation_kernel(SEED)?;
    let ok = m.exp_log < EXP_LOG_TOL
        && m.ad_invariance < CHI_TILDE_TOL
        && m.commutation < CHI_TILDE_TOL
        && m.omega_squares < OMEGA_TOL
        && m.omega_rel_body < OMEGA_TOL;
    Ok((ok, format!(
        "exp/log {:.2e}, Ad {:.2e}, commute {:.2e}, squares {:.2e}",
        m.exp_log, m.ad_invariance, m.commutation, m.omega_squares
    )))
}

fn c11() -> Result<(bool, String)> {
    let cfg = LiftConfig {
        tol: LIFT_TOL,
        ..LiftConfig::default()
    };
    let rows = lift_eta(&cfg)?;
    let ok = rows.len() == 2
        && rows.iter().all(|r| {
            r.residual < LIFT_TOL
                && r.rel_body_exact
                && r.parity_preserved
                && r.rank_over_p == 1
                && r.dim_p == 2
                && r.dim_span == r.dim_p
                && r.max_correction > 1e-6
        });
    let s: Vec<String> = rows
        .iter()
        .map(|r| format!("{} residual {:.2e} dim {}", r.case, r.residual, r.dim_span))
        .collect();
    Ok((ok, s.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<(bool, String)>); 11] = [
        ("algebra laws", c1),
        ("group laws", c2),
        ("cocycle and slash", c3),
        ("jacobian berezinian", c4),
        ("golden degrees", c5),
        ("eta generators", c6),
        ("SL(2,Z) dimensions", c7),
        ("V_k periodicity", c8),
        ("genus-2 H1", c9),
        ("deformation kernel", c10),
        ("lift", c11),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<22} {}  {} ({:.2}s)",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", criteria.len() - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
