//! Arithmetic in `P^C ⊠ Λ(C^r)`: a finite-dimensional local parameter algebra
//! tensored with the Grassmann algebra on `r` odd generators `ζ_1..ζ_r`.
//!
//! Elements are stored sparsely, keyed by a packed pair
//! `(parameter monomial, ζ-mask)`. Parameter generators of exterior kind are
//! odd and anticommute with the `ζ_i`; all signs follow the Koszul rule.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ODD: u8 = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The parameter algebra `P` with maximal ideal `I`, `I^N = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamSpec {
    /// `P = R`.
    Trivial,
    /// `P = R[X]/(X^n)`, all generators even.
    Polynomial { n: u8 },
    /// `P = Λ(R^m)` with odd generators `e1..em`.
    Exterior { m: u8 },
}

impl ParamSpec {
    /// Nilpotency order `N` with `I^N = 0`.
    pub fn nilpotency(&self) -> usize {
        match *self {
            ParamSpec::Trivial => 1,
            ParamSpec::Polynomial { n } => n.max(1) as usize,
            ParamSpec::Exterior { m } => m as usize + 1,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ParamSpec::Trivial => 1,
            ParamSpec::Polynomial { n } => n.max(1) as usize,
            ParamSpec::Exterior { m } => 1 << m,
        }
    }

    /// All basis monomial keys, the unit (key 0) first.
    pub fn monomials(&self) -> Vec<u32> {
        match *self {
            ParamSpec::Trivial => vec![0],
            ParamSpec::Polynomial { n } => (0..n.max(1) as u32).collect(),
            ParamSpec::Exterior { m } => {
                let mut v: Vec<u32> = (0..(1u32 << m)).collect();
                v.sort_by_key(|k| (k.count_ones(), *k));
                v
            }
        }
    }

    /// Filtration degree of a monomial (power of `I` it lies in).
    pub fn degree(&self, key: u32) -> usize {
        match *self {
            ParamSpec::Trivial => 0,
            ParamSpec::Polynomial { .. } => key as usize,
            ParamSpec::Exterior { .. } => key.count_ones() as usize,
        }
    }

    pub fn is_odd(&self, key: u32) -> bool {
        matches!(self, ParamSpec::Exterior { .. }) && key.count_ones() % 2 == 1
    }

    /// Product of two basis monomials: `None` if it vanishes, else `(key, sign)`.
    pub fn mul_keys(&self, a: u32, b: u32) -> Option<(u32, f64)> {
        match *self {
            ParamSpec::Trivial => Some((0, 1.0)),
            ParamSpec::Polynomial { n } => {
                let s = a + b;
                (s < n.max(1) as u32).then_some((s, 1.0))
            }
            ParamSpec::Exterior { .. } => {
                if a & b != 0 {
                    None
                } else {
                    Some((a | b, wedge_sign(a, b)))
                }
            }
        }
    }

    /// Keys of the generators: `X` for polynomial kind, `e1..em` for exterior kind.
    pub fn generators(&self) -> Vec<u32> {
        match *self {
            ParamSpec::Trivial => vec![],
            ParamSpec::Polynomial { n } if n >= 2 => vec![1],
            ParamSpec::Polynomial { .. } => vec![],
            ParamSpec::Exterior { m } => (0..m).map(|i| 1u32 << i).collect(),
        }
    }

    pub fn monomial_name(&self, key: u32) -> String {
        if key == 0 {
            return "1".into();
        }
        match *self {
            ParamSpec::Trivial => "1".into(),
            ParamSpec::Polynomial { .. } if key == 1 => "X".into(),
            ParamSpec::Polynomial { .. } => format!("X^{key}"),
            ParamSpec::Exterior { .. } => (0..32)
                .filter(|i| key >> i & 1 == 1)
                .map(|i| format!("e{}", i + 1))
                .collect(),
        }
    }

    pub fn parse_monomial(&self, s: &str) -> Result<u32> {
        let s = s.trim();
        if s == "1" {
            return Ok(0);
        }
        let bad = || Error::Parse(format!("monomial {s:?} not valid for {self}"));
        match *self {
            ParamSpec::Trivial => Err(bad()),
            ParamSpec::Polynomial { n } => {
                let e = if s == "X" {
                    1
                } else {
                    s.strip_prefix("X^")
                        .and_then(|t| t.parse::<u32>().ok())
                        .ok_or_else(bad)?
                };
                if e >= n as u32 {
                    return Err(bad());
                }
                Ok(e)
            }
            ParamSpec::Exterior { m } => {
                let mut key = 0u32;
                for part in s.split('e').skip(1) {
                    let i: u32 = part.parse().map_err(|_| bad())?;
                    if i == 0 || i > m as u32 || key >> (i - 1) & 1 == 1 {
                        return Err(bad());
                    }
                    key |= 1 << (i - 1);
                }
                if !s.starts_with('e') || key == 0 {
                    return Err(bad());
                }
                // only canonical increasing order is accepted
                if self.monomial_name(key) != s {
                    return Err(bad());
                }
                Ok(key)
            }
        }
    }
}

impl fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSpec::Trivial => write!(f, "trivial"),
            ParamSpec::Polynomial { n } => write!(f, "poly:{n}"),
            ParamSpec::Exterior { m } => write!(f, "ext:{m}"),
        }
    }
}

impl FromStr for ParamSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "trivial" {
            return Ok(ParamSpec::Trivial);
        }
        let bad = || Error::Parse(format!("param spec {s:?}: expected trivial, poly:N or ext:M"));
        let (kind, num) = s.split_once(':').ok_or_else(bad)?;
        let v: u8 = num.parse().map_err(|_| bad())?;
        match kind {
            "poly" if v >= 1 => Ok(ParamSpec::Polynomial { n: v }),
            "ext" if v <= 8 => Ok(ParamSpec::Exterior { m: v }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for ParamSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ParamSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sign of `ζ^a ζ^b = ± ζ^{a|b}` for disjoint masks.
pub fn wedge_sign(a: u32, b: u32) -> f64 {
    let mut count = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        count += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if count % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Both factors of the algebra: parameter spec and number of odd coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Algebra {
    pub param: ParamSpec,
    pub r: u8,
}

impl Algebra {
    pub fn new(param: ParamSpec, r: usize) -> Result<Self> {
        if r > MAX_ODD as usize {
            return Err(Error::Domain(format!("r = {r} exceeds {MAX_ODD}")));
        }
        Ok(Algebra { param, r: r as u8 })
    }

    pub fn r(&self) -> usize {
        self.r as usize
    }

    /// Largest power of a nilpotent element that can be nonzero.
    pub fn nil_bound(&self) -> usize {
        self.param.nilpotency() - 1 + self.r()
    }

    /// Same odd count, trivial parameter algebra.
    pub fn relative_body(&self) -> Algebra {
        Algebra {
            param: ParamSpec::Trivial,
            r: self.r,
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊠ Λ(C^{})", self.param, self.r)
    }
}

#[inline]
fn pack(p: u32, z: u32) -> u32 {
    (p << 16) | z
}

#[inline]
fn unpack(k: u32) -> (u32, u32) {
    (k >> 16, k & 0xffff)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
    pub fn from_odd(odd: bool) -> Parity {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

/// An element `Σ c_{p,I} p ζ^I` of `P^C ⊠ Λ(C^r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperScalar {
    alg: Algebra,
    terms: BTreeMap<u32, Complex64>,
}

impl SuperScalar {
    pub fn zero(alg: Algebra) -> Self {
        SuperScalar {
            alg,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(alg: Algebra, c: Complex64) -> Self {
        let mut s = Self::zero(alg);
        s.add_term(0, 0, c);
        s
    }

    pub fn real(alg: Algebra, x: f64) -> Self {
        Self::constant(alg, Complex64::new(x, 0.0))
    }

    pub fn one(alg: Algebra) -> Self {
        Self::constant(alg, ONE)
    }

    /// The odd coordinate `ζ_i`, zero-based.
    pub fn zeta(alg: Algebra, i: usize) -> Self {
        assert!(i < alg.r(), "zeta index {i} out of range for r = {}", alg.r);
        Self::monomial(alg, 0, 1 << i, ONE)
    }

    /// A parameter monomial times a complex coefficient.
    pub fn param(alg: Algebra, pkey: u32, c: Complex64) -> Self {
        Self::monomial(alg, pkey, 0, c)
    }

    pub fn monomial(alg: Algebra, pkey: u32, zmask: u32, c: Complex64) -> Self {
        let mut s = Self::zero(alg);
        s.add_term(pkey, zmask, c);
        s
    }

    pub fn algebra(&self) -> Algebra {
        self.alg
    }

    /// Coefficient of `p ζ^I`.
    pub fn coeff(&self, pkey: u32, zmask: u32) -> Complex64 {
        self.terms.get(&pack(pkey, zmask)).copied().unwrap_or(ZERO)
    }

    /// Iterate `(param key, ζ-mask, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, Complex64)> + '_ {
        self.terms.iter().map(|(&k, &c)| {
            let (p, z) = unpack(k);
            (p, z, c)
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, pkey: u32, zmask: u32, c: Complex64) {
        if c == ZERO {
            return;
        }
        let e = self.terms.entry(pack(pkey, zmask)).or_insert(ZERO);
        *e += c;
        if *e == ZERO {
            self.terms.remove(&pack(pkey, zmask));
        }
    }

    fn check(&self, other: &SuperScalar) {
        assert_eq!(
            self.alg, other.alg,
            "algebra mismatch: {} vs {}",
            self.alg, other.alg
        );
    }

    /// Fallible product, for callers that cannot guarantee matching specs.
    pub fn try_mul(&self, other: &SuperScalar) -> Result<SuperScalar> {
        if self.alg != other.alg {
            return Err(Error::SpecMismatch(
                self.alg.to_string(),
                other.alg.to_string(),
            ));
        }
        Ok(self.mul_ref(other))
    }

    fn mul_ref(&self, other: &SuperScalar) -> SuperScalar {
        self.check(other);
        let spec = self.alg.param;
        let mut out = SuperScalar::zero(self.alg);
        for (&k1, &c1) in &self.terms {
            let (p1, z1) = unpack(k1);
            let z1_odd = z1.count_ones() % 2 == 1;
            for (&k2, &c2) in &other.terms {
                let (p2, z2) = unpack(k2);
                if z1 & z2 != 0 {
                    continue;
                }
                let Some((p, sp)) = spec.mul_keys(p1, p2) else {
                    continue;
                };
                let mut sign = sp * wedge_sign(z1, z2);
                if z1_odd && spec.is_odd(p2) {
                    sign = -sign;
                }
                out.add_term(p, z1 | z2, c1 * c2 * sign);
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> SuperScalar {
        let mut out = SuperScalar::zero(self.alg);
        if c == ZERO {
            return out;
        }
        for (&k, &v) in &self.terms {
            let w = v * c;
            if w != ZERO {
                out.terms.insert(k, w);
            }
        }
        out
    }

    pub fn scale_re(&self, x: f64) -> SuperScalar {
        self.scale(Complex64::new(x, 0.0))
    }

    /// Body `#`: kills the parameter ideal and all `ζ`.
    pub fn body(&self) -> Complex64 {
        self.coeff(0, 0)
    }

    /// Relative body `#'`: kills the parameter ideal only.
    pub fn rel_body(&self) -> SuperScalar {
        let mut out = SuperScalar::zero(self.alg);
        for (p, z, c) in self.terms() {
            if p == 0 {
                out.add_term(0, z, c);
            }
        }
        out
    }

    /// Restrict to one parameter monomial: the `Λ(C^r)`-valued coefficient of `p`.
    pub fn param_component(&self, pkey: u32) -> SuperScalar {
        let mut out = SuperScalar::zero(self.alg);
        for (p, z, c) in self.terms() {
            if p == pkey {
                out.add_term(0, z, c);
            }
        }
        out
    }

    /// Terms whose parameter monomial has filtration degree exactly `d`.
    pub fn param_degree_part(&self, d: usize) -> SuperScalar {
        let spec = self.alg.param;
        let mut out = SuperScalar::zero(self.alg);
        for (p, z, c) in self.terms() {
            if spec.degree(p) == d {
                out.add_term(p, z, c);
            }
        }
        out
    }

    /// Re-embed into another algebra with the same `r` (parameter part must fit).
    pub fn embed(&self, alg: Algebra) -> Result<SuperScalar> {
        if alg.r != self.alg.r {
            return Err(Error::SpecMismatch(self.alg.to_string(), alg.to_string()));
        }
        let mut out = SuperScalar::zero(alg);
        for (p, z, c) in self.terms() {
            if p != 0 && alg.param != self.alg.param {
                return Err(Error::SpecMismatch(self.alg.to_string(), alg.to_string()));
            }
            out.add_term(p, z, c);
        }
        Ok(out)
    }

    /// `None` if the element mixes parities; zero counts as even.
    pub fn parity(&self) -> Option<Parity> {
        let spec = self.alg.param;
        let mut seen: Option<bool> = None;
        for (p, z, _) in self.terms() {
            let odd = (spec.is_odd(p) as u32 + z.count_ones()) % 2 == 1;
            match seen {
                None => seen = Some(odd),
                Some(s) if s != odd => return None,
                _ => {}
            }
        }
        Some(Parity::from_odd(seen.unwrap_or(false)))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.parity().is_some()
    }

    /// Projection onto the even or odd summand.
    pub fn parity_part(&self, parity: Parity) -> SuperScalar {
        let spec = self.alg.param;
        let want_odd = parity == Parity::Odd;
        let mut out = SuperScalar::zero(self.alg);
        for (p, z, c) in self.terms() {
            let odd = (spec.is_odd(p) as u32 + z.count_ones()) % 2 == 1;
            if odd == want_odd {
                out.add_term(p, z, c);
            }
        }
        out
    }

    /// `self - #(self)`.
    pub fn nilpotent_part(&self) -> SuperScalar {
        let mut out = self.clone();
        out.terms.remove(&0);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &SuperScalar) -> f64 {
        (self - other).max_abs()
    }

    /// Coefficientwise complex conjugation (the real structure of `P^C`).
    pub fn conj(&self) -> SuperScalar {
        let mut out = SuperScalar::zero(self.alg);
        for (&k, &c) in &self.terms {
            out.terms.insert(k, c.conj());
        }
        out
    }

    /// Drop coefficients below `tol` in absolute value.
    pub fn prune(&self, tol: f64) -> SuperScalar {
        let mut out = SuperScalar::zero(self.alg);
        for (&k, &c) in &self.terms {
            if c.norm() > tol {
                out.terms.insert(k, c);
            }
        }
        out
    }

    /// Left derivative `∂/∂ζ_i` (zero-based); passes odd parameter factors with a sign.
    pub fn deriv_zeta(&self, i: usize) -> SuperScalar {
        let spec = self.alg.param;
        let bit = 1u32 << i;
        let mut out = SuperScalar::zero(self.alg);
        for (p, z, c) in self.terms() {
            if z & bit == 0 {
                continue;
            }
            let mut sign = if (z & (bit - 1)).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            if spec.is_odd(p) {
                sign = -sign;
            }
            out.add_term(p, z & !bit, c * sign);
        }
        out
    }

    /// `Σ_j derivs[j]/j! · n^j` where `n` is the nilpotent part: the value of an
    /// analytic function at `self`, given its derivatives at the body.
    pub fn taylor(&self, derivs: &[Complex64]) -> Result<SuperScalar> {
        let n = self.nilpotent_part();
        let mut out = SuperScalar::constant(self.alg, derivs.first().copied().unwrap_or(ZERO));
        let mut power = SuperScalar::one(self.alg);
        let mut fact = 1.0;
        let mut j = 0;
        loop {
            power = &power * &n;
            if power.is_empty() {
                return Ok(out);
            }
            j += 1;
            fact *= j as f64;
            let d = derivs.get(j).ok_or_else(|| {
                Error::Precondition(format!(
                    "taylor: need derivative of order {j}, have {}",
                    derivs.len()
                ))
            })?;
            out += &power.scale(*d / fact);
        }
    }

    /// Number of derivatives needed by [`taylor`](Self::taylor) in this algebra.
    pub fn taylor_order(alg: Algebra) -> usize {
        alg.nil_bound() + 1
    }

    /// Inverse via the terminating Neumann series `1/(c(1+n)) = c⁻¹ Σ (-n)^k`.
    pub fn invert_unit(&self) -> Result<SuperScalar> {
        let c = self.body();
        if c.norm() == 0.0 || !c.norm().is_finite() {
            return Err(Error::NotAUnit);
        }
        let cinv = ONE / c;
        let n = self.nilpotent_part().scale(-cinv);
        let mut out = SuperScalar::one(self.alg);
        let mut power = SuperScalar::one(self.alg);
        loop {
            power = &power * &n;
            if power.is_empty() {
                break;
            }
            out += &power;
        }
        Ok(out.scale(cinv))
    }

    /// Real power by the binomial series; the body must be positive real
    /// (principal branch) unless `u` is an integer.
    pub fn power_real(&self, u: f64) -> Result<SuperScalar> {
        let c = self.body();
        if u.fract() == 0.0 && u.abs() < 1e9 {
            return self.powi(u as i64);
        }
        if !(c.im == 0.0 && c.re > 0.0) {
            return Err(Error::Domain(format!(
                "power_real: body {c} is not positive real and exponent {u} is not an integer"
            )));
        }
        let n = self.nilpotent_part().scale_re(1.0 / c.re);
        let mut out = SuperScalar::one(self.alg);
        let mut power = SuperScalar::one(self.alg);
        let mut binom = 1.0;
        let mut j = 0.0;
        loop {
            power = &power * &n;
            if power.is_empty() {
                break;
            }
            binom *= (u - j) / (j + 1.0);
            j += 1.0;
            out += &power.scale_re(binom);
        }
        Ok(out.scale_re(c.re.powf(u)))
    }

    /// Integer power; negative exponents need a unit.
    pub fn powi(&self, e: i64) -> Result<SuperScalar> {
        let base = if e < 0 {
            self.invert_unit()?
        } else {
            self.clone()
        };
        let mut k = e.unsigned_abs();
        let mut out = SuperScalar::one(self.alg);
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                out = &out * &sq;
            }
            k >>= 1;
            if k > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(out)
    }

    /// `exp(self)` for an even element.
    pub fn exp(&self) -> SuperScalar {
        let e = self.body().exp();
        let n = self.nilpotent_part();
        let mut out = SuperScalar::one(self.alg);
        let mut power = SuperScalar::one(self.alg);
        let mut fact = 1.0;
        let mut j = 0.0;
        loop {
            power = &power * &n;
            if power.is_empty() {
                break;
            }
            j += 1.0;
            fact *= j;
            out += &power.scale_re(1.0 / fact);
        }
        out.scale(e)
    }

    pub fn to_records(&self) -> Vec<ScalarRecord> {
        self.terms()
            .map(|(p, z, c)| ScalarRecord {
                param_monomial: self.alg.param.monomial_name(p),
                zeta_mask: z,
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_records(alg: Algebra, recs: &[ScalarRecord]) -> Result<SuperScalar> {
        let mut out = SuperScalar::zero(alg);
        for rec in recs {
            let p = alg.param.parse_monomial(&rec.param_monomial)?;
            if rec.zeta_mask >> alg.r != 0 {
                return Err(Error::Parse(format!(
                    "zeta mask {} exceeds r = {}",
                    rec.zeta_mask, alg.r
                )));
            }
            out.add_term(p, rec.zeta_mask, Complex64::new(rec.re, rec.im));
        }
        Ok(out)
    }
}

/// One serialized monomial of a [`SuperScalar`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRecord {
    pub param_monomial: String,
    pub zeta_mask: u32,
    pub re: f64,
    pub im: f64,
}

impl fmt::Display for SuperScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, z, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            if p != 0 {
                write!(f, "·{}", self.alg.param.monomial_name(p))?;
            }
            if z != 0 {
                write!(f, "·")?;
                for i in 0..16 {
                    if z >> i & 1 == 1 {
                        write!(f, "ζ{}", i + 1)?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a SuperScalar> for &'a SuperScalar {
    type Output = SuperScalar;
    fn add(self, rhs: &SuperScalar) -> SuperScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a SuperScalar> for &'a SuperScalar {
    type Output = SuperScalar;
    fn sub(self, rhs: &SuperScalar) -> SuperScalar {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<'a> Mul<&'a SuperScalar> for &'a SuperScalar {
    type Output = SuperScalar;
    fn mul(self, rhs: &SuperScalar) -> SuperScalar {
        self.mul_ref(rhs)
    }
}

impl Add for SuperScalar {
    type Output = SuperScalar;
    fn add(mut self, rhs: SuperScalar) -> SuperScalar {
        self += &rhs;
        self
    }
}

impl Sub for SuperScalar {
    type Output = SuperScalar;
    fn sub(mut self, rhs: SuperScalar) -> SuperScalar {
        self -= &rhs;
        self
    }
}

impl Mul for SuperScalar {
    type Output = SuperScalar;
    fn mul(self, rhs: SuperScalar) -> SuperScalar {
        self.mul_ref(&rhs)
    }
}

impl Neg for &SuperScalar {
    type Output = SuperScalar;
    fn neg(self) -> SuperScalar {
        self.scale_re(-1.0)
    }
}

impl Neg for SuperScalar {
    type Output = SuperScalar;
    fn neg(self) -> SuperScalar {
        self.scale_re(-1.0)
    }
}

impl AddAssign<&SuperScalar> for SuperScalar {
    fn add_assign(&mut self, rhs: &SuperScalar) {
        self.check(rhs);
        for (&k, &c) in &rhs.terms {
            let (p, z) = unpack(k);
            self.add_term(p, z, c);
        }
    }
}

impl SubAssign<&SuperScalar> for SuperScalar {
    fn sub_assign(&mut self, rhs: &SuperScalar) {
        self.check(rhs);
        for (&k, &c) in &rhs.terms {
            let (p, z) = unpack(k);
            self.add_term(p, z, -c);
        }
    }
}

/// Random elements for property sweeps.
pub mod random {
    use super::*;
    use rand::Rng;

    /// Random homogeneous element. With `integral`, coefficients are small
    /// integers so products stay exact in floating point.
    pub fn scalar<R: Rng>(
        rng: &mut R,
        alg: Algebra,
        parity: Parity,
        integral: bool,
        with_body: bool,
    ) -> SuperScalar {
        let spec = alg.param;
        let mut s = SuperScalar::zero(alg);
        for p in spec.monomials() {
            for z in 0..(1u32 << alg.r) {
                let odd = (spec.is_odd(p) as u32 + z.count_ones()) % 2 == 1;
                if odd != (parity == Parity::Odd) {
                    continue;
                }
                if p == 0 && z == 0 && !with_body {
                    continue;
                }
                if rng.gen_bool(0.4) {
                    continue;
                }
                let c = if integral {
                    Complex64::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64)
                } else {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                };
                s.add_term(p, z, c);
            }
        }
        s
    }

    /// Random element of the parameter ideal tensored with `Λ(C^r)`, of given parity.
    pub fn ideal_scalar<R: Rng>(rng: &mut R, alg: Algebra, parity: Parity, scale: f64) -> SuperScalar {
        let spec = alg.param;
        let mut s = SuperScalar::zero(alg);
        for p in spec.monomials().into_iter().filter(|&p| p != 0) {
            let odd = spec.is_odd(p);
            if odd != (parity == Parity::Odd) {
                continue;
            }
            let c = Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
            s.add_term(p, 0, c);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(param: ParamSpec, r: usize) -> Algebra {
        Algebra::new(param, r).unwrap()
    }

    #[test]
    fn odd_generators_anticommute_and_square_to_zero() {
        let a = alg(ParamSpec::Trivial, 3);
        let z1 = SuperScalar::zeta(a, 0);
        let z2 = SuperScalar::zeta(a, 1);
        assert_eq!(&z1 * &z2, -(&z2 * &z1));
        assert!((&z1 * &z1).is_empty());
        assert_eq!((&z1 * &z2).coeff(0, 0b011), ONE);
    }

    #[test]
    fn param_odd_generators_anticommute_with_zeta() {
        let a = alg(ParamSpec::Exterior { m: 2 }, 2);
        let e1 = SuperScalar::param(a, 1, ONE);
        let z1 = SuperScalar::zeta(a, 0);
        assert_eq!(&e1 * &z1, -(&z1 * &e1));
        let e2 = SuperScalar::param(a, 2, ONE);
        assert_eq!(&e1 * &e2, -(&e2 * &e1));
    }

    #[test]
    fn polynomial_truncation() {
        let a = alg(ParamSpec::Polynomial { n: 3 }, 2);
        let x = SuperScalar::param(a, 1, ONE);
        let z12 = &SuperScalar::zeta(a, 0) * &SuperScalar::zeta(a, 1);
        let one = SuperScalar::one(a);
        let p = &one + &(&x * &z12);
        let m = &one - &(&x * &z12);
        assert_eq!(&p * &m, one);
        assert!((&(&x * &x) * &x).is_empty());
    }

    #[test]
    fn invert_and_powers() {
        let a = alg(ParamSpec::Trivial, 2);
        let z12 = &SuperScalar::zeta(a, 0) * &SuperScalar::zeta(a, 1);
        let u = &SuperScalar::one(a) + &z12;
        assert_eq!(u.invert_unit().unwrap(), &SuperScalar::one(a) - &z12);
        let half = u.power_real(0.5).unwrap();
        assert_eq!(half, &SuperScalar::one(a) + &z12.scale_re(0.5));
        assert!(SuperScalar::zero(a).invert_unit().is_err());
        assert_eq!(
            SuperScalar::real(a, 2.0).invert_unit().unwrap(),
            SuperScalar::real(a, 0.5)
        );
    }

    #[test]
    fn power_real_binomial() {
        // (1+X)^{k/(2-r)} with k = 3, r = 1 is a cube
        let a = alg(ParamSpec::Polynomial { n: 3 }, 1);
        let x = SuperScalar::param(a, 1, ONE);
        let b = &SuperScalar::one(a) + &x;
        let p = b.power_real(3.0).unwrap();
        assert_eq!(p.coeff(0, 0), ONE);
        assert_eq!(p.coeff(1, 0), Complex64::new(3.0, 0.0));
        assert_eq!(p.coeff(2, 0), Complex64::new(3.0, 0.0));
        let third = p.power_real(1.0 / 3.0).unwrap();
        assert!(third.dist(&b) < 1e-14);
    }

    #[test]
    fn power_real_rejects_complex_body() {
        let a = alg(ParamSpec::Trivial, 1);
        let s = SuperScalar::constant(a, Complex64::new(0.0, 1.0));
        assert!(s.power_real(0.5).is_err());
        assert!(s.power_real(2.0).is_ok());
    }

    #[test]
    fn unit_with_odd_part() {
        let a = alg(ParamSpec::Exterior { m: 1 }, 1);
        let c = Complex64::new(0.3, -1.2);
        let nu = Complex64::new(0.7, 0.1);
        let e1z1 = &SuperScalar::param(a, 1, nu) * &SuperScalar::zeta(a, 0);
        let s = &SuperScalar::constant(a, c) + &e1z1;
        let inv = s.invert_unit().unwrap();
        assert!((&s * &inv).dist(&SuperScalar::one(a)) < 1e-15);
        let expect = (&SuperScalar::one(a) - &e1z1.scale(ONE / c)).scale(ONE / c);
        assert!(inv.dist(&expect) < 1e-15);
    }

    #[test]
    fn derivative_is_odd_derivation() {
        let a = alg(ParamSpec::Exterior { m: 1 }, 3);
        let z: Vec<_> = (0..3).map(|i| SuperScalar::zeta(a, i)).collect();
        let e1 = SuperScalar::param(a, 1, ONE);
        let f = &(&e1 * &z[0]) * &z[2];
        let g = &z[1] + &(&z[0] * &z[2]);
        // Leibniz with sign for odd f
        for i in 0..3 {
            let lhs = (&f * &g).deriv_zeta(i);
            let rhs = &(&f.deriv_zeta(i) * &g) - &(&f * &g.deriv_zeta(i));
            assert!(lhs.dist(&rhs) < 1e-15, "i = {i}");
        }
    }

    #[test]
    fn records_roundtrip() {
        let a = alg(ParamSpec::Exterior { m: 3 }, 2);
        let mut s = SuperScalar::zero(a);
        s.add_term(0b101, 0b10, Complex64::new(1.5, -2.0));
        s.add_term(0, 0, Complex64::new(0.25, 0.0));
        let recs = s.to_records();
        assert_eq!(recs[1].param_monomial, "e1e3");
        assert_eq!(SuperScalar::from_records(a, &recs).unwrap(), s);
        assert!(a.param.parse_monomial("e3e1").is_err());
    }

    #[test]
    fn spec_strings() {
        for s in ["trivial", "poly:3", "ext:2"] {
            assert_eq!(s.parse::<ParamSpec>().unwrap().to_string(), s);
        }
        assert!("poly".parse::<ParamSpec>().is_err());
    }
}
