//! Degrees of the bundles `E_k^ρ`, `F_k^ρ` on the compactified quotient and
//! the Riemann–Roch dimension count for `sM_k^ρ`, `sS_k^ρ`.
//!
//! Local data at elliptic points and cusps are the exponents `σ` with
//! `e^{−2πiσ}` the eigenvalues of `j(γ̌, z₀)^{l+ρ} φ_l(γ̌)⁻¹`, and `δ` with
//! `χ(γ̌) = e^{2πiδ}`, where `γ̌` generates the stabilizer with positive
//! orientation (rotation by `+2π/n`, positive translation at cusps).

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattices::{sl2, sl2::Mat2, Lattice, PointKind, Word};
use crate::supermatrix::CMat;

/// Genus, elliptic orders and number of cusps of `X = Γ̌\H*`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurfaceData {
    pub genus: u32,
    pub elliptic_orders: Vec<u32>,
    pub cusp_count: u32,
}

impl SurfaceData {
    pub fn from_lattice(lat: &Lattice) -> SurfaceData {
        let mut elliptic_orders = Vec::new();
        let mut cusp_count = 0;
        for p in &lat.special {
            match p.kind {
                PointKind::Elliptic { order } => elliptic_orders.push(order),
                PointKind::Cusp => cusp_count += 1,
            }
        }
        SurfaceData {
            genus: lat.genus,
            elliptic_orders,
            cusp_count,
        }
    }
}

/// `vol/2π = 2(g−1) + Σ(1 − 1/n_i) + S`.
pub fn covolume(sd: &SurfaceData) -> Result<Rational64> {
    let mut v = Rational64::from_integer(2 * (sd.genus as i64 - 1));
    for &n in &sd.elliptic_orders {
        if n < 2 {
            return Err(Error::Domain(format!("elliptic order {n} < 2")));
        }
        v += Rational64::one() - Rational64::new(1, n as i64);
    }
    v += Rational64::from_integer(sd.cusp_count as i64);
    if v <= Rational64::zero() {
        return Err(Error::Domain(format!("non-hyperbolic surface data (vol/2π = {v})")));
    }
    Ok(v)
}

fn half_floor(big_k: i64) -> i64 {
    big_k.div_euclid(2)
}

fn frac(x: Rational64) -> Rational64 {
    x - x.floor()
}

/// `1 − {−x}`: `{x}` off the integers, `1` on them.
fn one_minus_frac_neg(x: Rational64) -> Rational64 {
    Rational64::one() - frac(-x)
}

/// `deg T*X^{⊗⌊K/2⌋} = 2(g−1)⌊K/2⌋` with `K = k + ρ`.
pub fn deg_t_power(sd: &SurfaceData, big_k: i64) -> i64 {
    2 * (sd.genus as i64 - 1) * half_floor(big_k)
}

/// `deg L⁰ = Σ ⌊K(n_i − 1)/(2n_i)⌋ + S⌊K/2⌋`.
pub fn deg_l0(sd: &SurfaceData, big_k: i64) -> i64 {
    let ell: i64 = sd
        .elliptic_orders
        .iter()
        .map(|&n| (big_k * (n as i64 - 1)).div_euclid(2 * n as i64))
        .sum();
    ell + sd.cusp_count as i64 * half_floor(big_k)
}

/// Local monodromy exponents at one special point for a fixed `(l, ρ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalMonodromy {
    pub kind: PointKind,
    /// Positively oriented stabilizer generator as a word in the lattice.
    pub word: Word,
    pub sigma: Vec<Rational64>,
    pub delta: Rational64,
}

/// All local data entering `E_k^ρ` for `k ≡ l mod 2|Γ₀|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightData {
    pub l: i64,
    pub rho: usize,
    pub rank: usize,
    pub points: Vec<LocalMonodromy>,
}

/// Nearest rational with denominator at most 720.
pub fn snap_rational(x: f64) -> Result<Rational64> {
    for q in 1..=720i64 {
        let p = (x * q as f64).round();
        if (x - p / q as f64).abs() < 1e-7 {
            return Ok(Rational64::new(p as i64, q));
        }
    }
    Err(Error::Unsupported(format!("exponent {x} is not a rational with small denominator")))
}

fn exponent_of(z: Complex64) -> Result<Rational64> {
    let t = z.arg() / TAU;
    Ok(frac(snap_rational(t)?))
}

fn repeat(w: &Word, times: i64) -> Word {
    let seq: Word = if times >= 0 {
        w.clone()
    } else {
        w.iter().rev().map(|(n, e)| (n.clone(), -e)).collect()
    };
    let mut out = Word::new();
    for _ in 0..times.unsigned_abs() {
        out.extend(seq.iter().cloned());
    }
    out
}

/// Positively oriented stabilizer generator and `j(γ̌, z₀)` (constant `±1`
/// at cusps).
fn oriented_generator(lat: &Lattice, kind: PointKind, z0: Option<[f64; 2]>, w: &Word) -> Result<(Word, Complex64)> {
    let c = lat.check_word(w)?;
    match kind {
        PointKind::Elliptic { order } => {
            let z = z0.ok_or_else(|| Error::Format("elliptic point without z0".into()))?;
            let z = Complex64::new(z[0], z[1]);
            let target = Complex64::from_polar(1.0, TAU / order as f64);
            for p in 1..=(2 * order as i64) {
                let cp = sl2::pow(&c, p);
                let j = sl2::j(&cp, z);
                if (j * j - target).norm() < 1e-8 {
                    return Ok((repeat(w, p), j));
                }
            }
            Err(Error::Resolution(format!(
                "no power of the stabilizer word rotates by 2π/{order} at {z}"
            )))
        }
        PointKind::Cusp => {
            let (n, _) = conjugate_to_infinity(&c)?;
            let trans = n[0][1] / n[1][1];
            if trans.abs() < 1e-12 || (n[0][0] - n[1][1]).abs() > 1e-8 || n[1][0].abs() > 1e-8 {
                return Err(Error::Resolution("cusp word is not parabolic".into()));
            }
            let w = if trans > 0.0 { w.clone() } else { repeat(w, -1) };
            Ok((w, Complex64::new(1.0 / n[1][1], 0.0)))
        }
    }
}

/// `A⁻¹ M A` with `A(∞)` the fixed point of the parabolic `M`.
fn conjugate_to_infinity(m: &Mat2) -> Result<(Mat2, Mat2)> {
    if m[1][0].abs() < 1e-12 {
        return Ok((*m, sl2::ID));
    }
    let x = (m[0][0] - m[1][1]) / (2.0 * m[1][0]);
    let a: Mat2 = [[x, -1.0], [1.0, 0.0]];
    Ok((sl2::mul(&sl2::mul(&sl2::inv(&a), m), &a), a))
}

fn unitary_eigenvalues(m: &CMat) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return vec![];
    }
    // complex Schur form is upper triangular
    let t = nalgebra::Schur::new(m.clone()).unpack().1;
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Local exponents for every special point at `(l, ρ)`.
pub fn local_data(lat: &Lattice, l: i64, rho: usize) -> Result<WeightData> {
    let v = lat.vk_rho(l, rho);
    let mut points = Vec::new();
    for p in &lat.special {
        let (w, j) = oriented_generator(lat, p.kind, p.z0, &p.word)?;
        let phi = lat.phi_k_on(&v, &w)?;
        let mono = phi.adjoint() * j.powi((l + rho as i64) as i32);
        let mut sigma = unitary_eigenvalues(&mono)
            .into_iter()
            .map(|lam| exponent_of(lam.conj()))
            .collect::<Result<Vec<_>>>()?;
        sigma.sort();
        let delta = exponent_of(lat.chi(&w)?)?;
        points.push(LocalMonodromy {
            kind: p.kind,
            word: w,
            sigma,
            delta,
        });
    }
    Ok(WeightData {
        l,
        rho,
        rank: v.dim,
        points,
    })
}

/// `Ω_ν^k` for `M_k` and `N_k` at one point (equal at elliptic points).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalWeight {
    pub kind: PointKind,
    pub omega_m: Vec<Rational64>,
    pub omega_n: Vec<Rational64>,
}

/// Local weights for `k = l + 2|Γ₀|m`.
pub fn local_weights(wd: &WeightData, gamma0_order: usize, m: i64) -> Vec<LocalWeight> {
    let big_k = wd.l + 2 * gamma0_order as i64 * m + wd.rho as i64;
    let mr = Rational64::from_integer(m);
    wd.points
        .iter()
        .map(|p| {
            let md = frac(mr * p.delta);
            match p.kind {
                PointKind::Elliptic { order } => {
                    let n = order as i64;
                    let shift = Rational64::new(m * gamma0_order as i64, n);
                    let tail = half_floor(big_k) * (n - 1) - n * (big_k * (n - 1)).div_euclid(2 * n);
                    let om: Vec<Rational64> = p
                        .sigma
                        .iter()
                        .map(|&s| {
                            Rational64::from_integer(n) * (md - frac(s - shift + mr * p.delta))
                                + Rational64::from_integer(tail)
                        })
                        .collect();
                    LocalWeight {
                        kind: p.kind,
                        omega_m: om.clone(),
                        omega_n: om,
                    }
                }
                PointKind::Cusp => LocalWeight {
                    kind: p.kind,
                    omega_m: p.sigma.iter().map(|&s| md - frac(s + mr * p.delta)).collect(),
                    omega_n: p
                        .sigma
                        .iter()
                        .map(|&s| md - one_minus_frac_neg(s + mr * p.delta))
                        .collect(),
                },
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleDegreeReport {
    pub k: i64,
    pub rho: usize,
    pub l: i64,
    pub m: i64,
    pub rank: usize,
    pub deg_t_power: i64,
    pub deg_l0: i64,
    pub deg_ltwist: Rational64,
    pub deg_det_m: Rational64,
    pub deg_det_n: Rational64,
    /// `c₁(E_k^ρ)`.
    pub c1: i64,
    /// `c₁(F_k^ρ)`.
    pub c1_cusp: i64,
    /// `c₁ − n_k(g−1)`; equals `dim sM_k^ρ` once `H¹` vanishes.
    pub dim_sm: i64,
    pub dim_ss: i64,
    pub local: Vec<LocalWeight>,
}

fn to_integer(x: Rational64, what: &str) -> Result<i64> {
    if x.is_integer() {
        Ok(x.to_integer())
    } else {
        Err(Error::Numeric(format!("{what} = {x} is not an integer")))
    }
}

/// Degree bookkeeping for one lattice and one `ρ`, with the local data of
/// every residue `l mod 2|Γ₀|` precomputed.
#[derive(Clone, Debug)]
pub struct DimensionCalculator {
    pub surface: SurfaceData,
    pub rho: usize,
    pub gamma0_order: usize,
    pub data: Vec<WeightData>,
    pub k1: Option<i64>,
}

impl DimensionCalculator {
    pub fn new(lat: &Lattice, rho: usize) -> Result<DimensionCalculator> {
        let surface = SurfaceData::from_lattice(lat);
        covolume(&surface)?;
        let period = 2 * lat.gamma0_order as i64;
        let data = (0..period)
            .map(|l| local_data(lat, l, rho))
            .collect::<Result<Vec<_>>>()?;
        Ok(DimensionCalculator {
            surface,
            rho,
            gamma0_order: lat.gamma0_order,
            data,
            k1: None,
        })
    }

    pub fn with_k1(mut self, k1: i64) -> Self {
        self.k1 = Some(k1);
        self
    }

    /// Degrees and Riemann–Roch value without the `H¹ = 0` hypothesis.
    pub fn report(&self, k: i64) -> Result<BundleDegreeReport> {
        let period = 2 * self.gamma0_order as i64;
        let l = k.rem_euclid(period);
        let m = k.div_euclid(period);
        let wd = &self.data[l as usize];
        let sd = &self.surface;
        let big_k = k + self.rho as i64;
        let n = wd.rank as i64;
        let vol = covolume(sd)?;
        let local = local_weights(wd, self.gamma0_order, m);
        let mr = Rational64::from_integer(m);
        let twist: Rational64 = -wd
            .points
            .iter()
            .map(|p| frac(mr * p.delta))
            .fold(Rational64::zero(), |a, b| a + b);
        let base = Rational64::from_integer(n) * Rational64::new(big_k.rem_euclid(2), 2) * vol;
        let mut det_m = base;
        let mut det_n = base;
        for lw in &local {
            let div = match lw.kind {
                PointKind::Elliptic { order } => order as i64,
                PointKind::Cusp => 1,
            };
            for (a, b) in lw.omega_m.iter().zip(&lw.omega_n) {
                det_m += a / div;
                det_n += b / div;
            }
        }
        let t = deg_t_power(sd, big_k);
        let l0 = deg_l0(sd, big_k);
        let lines = Rational64::from_integer(n) * (Rational64::from_integer(t + l0) + twist);
        let c1 = to_integer(lines + det_m, "c1(E)")?;
        let c1_cusp = to_integer(lines + det_n, "c1(F)")?;
        let g1 = sd.genus as i64 - 1;
        Ok(BundleDegreeReport {
            k,
            rho: self.rho,
            l,
            m,
            rank: wd.rank,
            deg_t_power: t,
            deg_l0: l0,
            deg_ltwist: twist,
            deg_det_m: det_m,
            deg_det_n: det_n,
            c1,
            c1_cusp,
            dim_sm: c1 - n * g1,
            dim_ss: c1_cusp - n * g1,
            local,
        })
    }

    /// `dim sM_k^ρ`; refuses unless the caller asserts `k ≥ k₁`.
    pub fn dim_sm(&self, k: i64, assume_k_ge_k1: bool) -> Result<BundleDegreeReport> {
        if !assume_k_ge_k1 {
            return Err(Error::Refused(format!(
                "k = {k}: vanishing of H¹ is not certified; pass the k ≥ k₁ flag"
            )));
        }
        if let Some(k1) = self.k1 {
            if k < k1 {
                return Err(Error::Refused(format!("k = {k} is below the configured k₁ = {k1}")));
            }
        }
        self.report(k)
    }

    /// Smallest `k₀ ≥ 0` such that `c₁ − n_k(g−1) > n_k(2g−1)` holds for both
    /// bundles at every `k ∈ [k₀, horizon]`.
    pub fn default_k1(&self, horizon: i64) -> Result<i64> {
        let g = self.surface.genus as i64;
        let mut k1 = None;
        for k in (0..=horizon).rev() {
            let rep = self.report(k)?;
            let n = rep.rank as i64;
            let ok = n == 0 || (rep.dim_sm > n * (2 * g - 1) && rep.dim_ss > n * (2 * g - 1));
            if !ok {
                break;
            }
            k1 = Some(k);
        }
        k1.ok_or_else(|| Error::Numeric(format!("positivity margin fails at the horizon k = {horizon}")))
    }

    pub fn asymptotic_check(&self, ks: impl IntoIterator<Item = i64>) -> Result<AsymptoticReport> {
        let vol = covolume(&self.surface)?.to_f64().unwrap_or(f64::NAN);
        let mut out = AsymptoticReport {
            max_deviation_sm: 0.0,
            max_deviation_ss: 0.0,
            worst_k: 0,
            samples: 0,
        };
        for k in ks {
            let rep = self.report(k)?;
            if rep.rank == 0 {
                continue;
            }
            let n = rep.rank as f64;
            let main = k as f64 / 2.0 * vol;
            let dm = (rep.dim_sm as f64 / n - main).abs();
            let ds = (rep.dim_ss as f64 / n - main).abs();
            if dm > out.max_deviation_sm {
                out.max_deviation_sm = dm;
                out.worst_k = k;
            }
            out.max_deviation_ss = out.max_deviation_ss.max(ds);
            out.samples += 1;
        }
        Ok(out)
    }
}

/// Largest `|dim/n_k − (k/2)(vol/2π)|` over a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub max_deviation_sm: f64,
    pub max_deviation_ss: f64,
    pub worst_k: i64,
    pub samples: usize,
}

/// Largest `|Ω|` allowed at a point: `2n` elliptic, `2` at cusps.
pub fn omega_bound_ok(lw: &LocalWeight) -> bool {
    let bound = match lw.kind {
        PointKind::Elliptic { order } => 2 * order as i64,
        PointKind::Cusp => 2,
    };
    lw.omega_m
        .iter()
        .chain(&lw.omega_n)
        .all(|x| x.abs() < Rational64::from_integer(bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::{build_embedded_sl2z, build_eta_lattice, build_genus2, build_punctured_torus, EtaCase};

    fn classical_dim(k: i64) -> i64 {
        if k < 0 || k % 2 == 1 {
            0
        } else if k % 12 == 2 {
            k / 12
        } else {
            k / 12 + 1
        }
    }

    /// Same degree read directly off `j^K φ_k⁻¹` at weight `k`, without the
    /// split into `T`, `L⁰`, twist and `det M`.
    fn direct_degree(lat: &Lattice, k: i64, rho: usize, cusp_forms: bool) -> Rational64 {
        let sd = SurfaceData::from_lattice(lat);
        let vol = covolume(&sd).unwrap();
        let v = lat.vk_rho(k, rho);
        let big_k = k + rho as i64;
        let mut deg = Rational64::from_integer(v.dim as i64) * Rational64::new(big_k, 2) * vol;
        for p in &lat.special {
            let (w, j) = oriented_generator(lat, p.kind, p.z0, &p.word).unwrap();
            let phi = lat.phi_k_on(&v, &w).unwrap();
            let mono = phi.adjoint() * j.powi(big_k as i32);
            for lam in unitary_eigenvalues(&mono) {
                let s = exponent_of(lam.conj()).unwrap();
                deg -= if cusp_forms && p.kind == PointKind::Cusp && s.is_zero() {
                    Rational64::one()
                } else {
                    s
                };
            }
        }
        deg
    }

    #[test]
    fn covolume_examples() {
        let sl2 = SurfaceData {
            genus: 0,
            elliptic_orders: vec![2, 3],
            cusp_count: 1,
        };
        assert_eq!(covolume(&sl2).unwrap(), Rational64::new(1, 6));
        let g2 = SurfaceData {
            genus: 2,
            elliptic_orders: vec![],
            cusp_count: 0,
        };
        assert_eq!(covolume(&g2).unwrap(), Rational64::from_integer(2));
        let s3 = SurfaceData {
            genus: 0,
            elliptic_orders: vec![],
            cusp_count: 3,
        };
        assert_eq!(covolume(&s3).unwrap(), Rational64::one());
        let bad = SurfaceData {
            genus: 0,
            elliptic_orders: vec![2, 2],
            cusp_count: 0,
        };
        assert!(covolume(&bad).is_err());
        assert_eq!(deg_l0(&sl2, 12), 13);
        assert_eq!(deg_l0(&sl2, 0), 0);
    }

    #[test]
    fn local_weight_examples() {
        let wd = WeightData {
            l: 0,
            rho: 0,
            rank: 1,
            points: vec![LocalMonodromy {
                kind: PointKind::Cusp,
                word: vec![],
                sigma: vec![Rational64::zero()],
                delta: Rational64::zero(),
            }],
        };
        let lw = &local_weights(&wd, 1, 0)[0];
        assert_eq!(lw.omega_m, vec![Rational64::zero()]);
        assert_eq!(lw.omega_n, vec![-Rational64::one()]);
        let wd = WeightData {
            l: 2,
            rho: 0,
            rank: 1,
            points: vec![LocalMonodromy {
                kind: PointKind::Elliptic { order: 3 },
                word: vec![],
                sigma: vec![Rational64::new(1, 3)],
                delta: Rational64::zero(),
            }],
        };
        assert_eq!(local_weights(&wd, 1, 0)[0].omega_m, vec![Rational64::one()]);
    }

    #[test]
    fn golden_degrees() {
        let c1 = DimensionCalculator::new(&build_eta_lattice(EtaCase::Even).unwrap(), 0).unwrap();
        let r = c1.report(1).unwrap();
        assert_eq!((r.rank, r.c1, r.dim_sm), (1, 0, 1));
        let c1 = DimensionCalculator::new(&build_eta_lattice(EtaCase::Even).unwrap(), 1).unwrap();
        let r = c1.report(1).unwrap();
        assert_eq!((r.rank, r.c1, r.dim_sm), (1, -1, 0));
        let c2 = DimensionCalculator::new(&build_eta_lattice(EtaCase::Odd).unwrap(), 1).unwrap();
        let r = c2.report(0).unwrap();
        assert_eq!((r.rank, r.c1, r.dim_sm), (1, 0, 1));
        let c2 = DimensionCalculator::new(&build_eta_lattice(EtaCase::Odd).unwrap(), 0).unwrap();
        let r = c2.report(0).unwrap();
        assert_eq!((r.rank, r.c1, r.dim_sm), (1, 0, 1));
        assert!(r.local.iter().all(|lw| lw.omega_m.iter().all(|x| x.is_zero())));
    }

    #[test]
    fn sl2z_matches_classical_dimensions() {
        let lat = build_embedded_sl2z(1).unwrap();
        let calc = DimensionCalculator::new(&lat, 0).unwrap();
        let k1 = calc.default_k1(300).unwrap();
        assert!(k1 <= 16, "k1 = {k1}");
        for k in k1..=60 {
            let r = calc.dim_sm(k, true).unwrap();
            assert_eq!(r.dim_sm, classical_dim(k), "k = {k}");
            let cusp = if k % 2 == 0 && k >= 4 { classical_dim(k) - 1 } else { 0 };
            assert_eq!(r.dim_ss, cusp, "k = {k}");
        }
        let asym = calc.asymptotic_check((16..=200).step_by(2)).unwrap();
        assert!(asym.max_deviation_sm <= 2.0, "{asym:?}");
        assert!(calc.dim_sm(20, false).is_err());
    }

    #[test]
    fn decomposition_matches_direct_degree() {
        let lats = vec![
            (build_embedded_sl2z(1).unwrap(), 0),
            (build_embedded_sl2z(2).unwrap(), 1),
            (build_eta_lattice(EtaCase::Even).unwrap(), 0),
            (build_eta_lattice(EtaCase::Even).unwrap(), 1),
            (build_eta_lattice(EtaCase::Odd).unwrap(), 1),
            (build_genus2([0.3, 1.1, -0.4, 2.0]).unwrap(), 1),
            (build_punctured_torus(Complex64::from_polar(1.0, TAU / 6.0), Complex64::from_polar(1.0, TAU / 3.0), 0.7, 1.9).unwrap(), 0),
        ];
        for (lat, rho) in &lats {
            let calc = DimensionCalculator::new(lat, *rho).unwrap();
            for k in 0..40 {
                let rep = calc.report(k).unwrap();
                assert_eq!(rep.rank, lat.vk_rho(k, *rho).dim);
                let d = Rational64::from_integer(rep.c1);
                assert_eq!(d, direct_degree(lat, k, *rho, false), "k = {k} rho = {rho}");
                let d = Rational64::from_integer(rep.c1_cusp);
                assert_eq!(d, direct_degree(lat, k, *rho, true), "cusp k = {k} rho = {rho}");
                assert!(rep.local.iter().all(omega_bound_ok), "{:?}", rep.local);
                let rs = (calc.surface.elliptic_orders.len() + calc.surface.cusp_count as usize) as i64;
                assert!(rep.deg_ltwist.abs() <= Rational64::from_integer(2 * rs));
            }
        }
    }

    #[test]
    fn genus2_is_rank_times_canonical_count() {
        let lat = build_genus2([0.3, 1.1, -0.4, 2.0]).unwrap();
        let calc = DimensionCalculator::new(&lat, 0).unwrap();
        for k in 2..12 {
            let rep = calc.report(k).unwrap();
            assert_eq!(rep.dim_sm, rep.rank as i64 * (k - 1));
        }
    }
}
