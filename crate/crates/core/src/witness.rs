//! The interval-translation construction.
//!
//! Given an increasing interval of length `A`, a steeply increasing piece of
//! length `E` inside it, and a decreasing interval of length `B`, translates
//! `c_n = nB` and `I_n = [nA, nA + E]` until some `c_l` lands in some `I_n`.
//! Time is normalized so the first interval starts at 0.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

pub const ITERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("comparison {0} is within epsilon of a case boundary; use exact arithmetic")]
    ToleranceAmbiguity(String),
    #[error("construction did not terminate within {0} iterations")]
    IterationCap(usize),
    #[error("internal invariant violated: {0}")]
    InvariantViolated(String),
}

/// Scalar arithmetic the construction runs over.
pub trait Arith {
    type V: Clone + fmt::Debug + PartialEq;

    fn int(&self, k: &BigInt) -> Self::V;
    fn add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn sub(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn mul_int(&self, a: &Self::V, k: &BigInt) -> Self::V;
    /// Branch comparison; may refuse when `a` and `b` are too close to call.
    fn cmp(&self, a: &Self::V, b: &Self::V, what: &str) -> Result<Ordering, WitnessError>;
    fn sign(&self, a: &Self::V) -> Ordering;
    /// A guess for `floor(a / b)`, corrected by exact comparisons afterwards.
    fn quotient_guess(&self, a: &Self::V, b: &Self::V) -> BigInt;
    fn to_f64(&self, a: &Self::V) -> f64;
    fn json(&self, a: &Self::V) -> Value;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Exact;

impl Arith for Exact {
    type V = BigRational;

    fn int(&self, k: &BigInt) -> BigRational {
        BigRational::from_integer(k.clone())
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul_int(&self, a: &BigRational, k: &BigInt) -> BigRational {
        a * BigRational::from_integer(k.clone())
    }
    fn cmp(&self, a: &BigRational, b: &BigRational, _: &str) -> Result<Ordering, WitnessError> {
        Ok(a.cmp(b))
    }
    fn sign(&self, a: &BigRational) -> Ordering {
        a.cmp(&BigRational::zero())
    }
    fn quotient_guess(&self, a: &BigRational, b: &BigRational) -> BigInt {
        (a / b).floor().to_integer()
    }
    fn to_f64(&self, a: &BigRational) -> f64 {
        a.to_f64().unwrap_or(f64::NAN)
    }
    fn json(&self, a: &BigRational) -> Value {
        Value::String(rational_string(a))
    }
}

/// `f64` arithmetic; comparisons closer than `eps` are refused.
#[derive(Debug, Clone, Copy)]
pub struct Float {
    pub eps: f64,
}

impl Arith for Float {
    type V = f64;

    fn int(&self, k: &BigInt) -> f64 {
        k.to_f64().unwrap_or(f64::INFINITY)
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn mul_int(&self, a: &f64, k: &BigInt) -> f64 {
        a * self.int(k)
    }
    fn cmp(&self, a: &f64, b: &f64, what: &str) -> Result<Ordering, WitnessError> {
        if (a - b).abs() <= self.eps {
            return Err(WitnessError::ToleranceAmbiguity(format!("{what}: {a:e} vs {b:e}")));
        }
        Ok(a.partial_cmp(b).unwrap_or(Ordering::Equal))
    }
    fn sign(&self, a: &f64) -> Ordering {
        a.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }
    fn quotient_guess(&self, a: &f64, b: &f64) -> BigInt {
        BigInt::from((a / b).floor() as i128)
    }
    fn to_f64(&self, a: &f64) -> f64 {
        *a
    }
    fn json(&self, a: &f64) -> Value {
        json!(a)
    }
}

/// `p/q` in lowest terms, or just `p` for integers.
pub fn rational_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Integers as JSON numbers while they fit in 64 bits, decimal strings beyond.
pub fn bigint_json(k: &BigInt) -> Value {
    match k.to_u64() {
        Some(v) => json!(v),
        None => match k.to_i64() {
            Some(v) => json!(v),
            None => Value::String(k.to_string()),
        },
    }
}

/// Parses `p/q`, an integer, or a decimal with optional exponent, exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, WitnessError> {
    let s = s.trim();
    let bad = || WitnessError::InvalidProblem(format!("cannot parse {s:?} as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(all);
    if shift >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Ok(if neg { -r } else { r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessProblem<V> {
    pub a: V,
    pub b: V,
    pub e: V,
}

impl WitnessProblem<BigRational> {
    pub fn parse(a: &str, b: &str, e: &str) -> Result<Self, WitnessError> {
        Ok(WitnessProblem {
            a: parse_rational(a)?,
            b: parse_rational(b)?,
            e: parse_rational(e)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WitnessCase {
    MultipleOrSmallRemainder,
    CaseI,
    CaseII,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<V> {
    pub i: usize,
    pub d: V,
    pub n: BigInt,
    pub l: BigInt,
    pub h: BigInt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessResult<V> {
    pub l_star: BigInt,
    pub n_star: BigInt,
    pub landing_offset: V,
    pub trace: Vec<TraceRecord<V>>,
    pub k0: BigInt,
    pub r0: V,
    /// `D_0 = pE + F` with `F` in `(0, E]`; absent when no recursion is needed.
    pub p: Option<BigInt>,
    pub f: Option<V>,
    pub case: WitnessCase,
}

impl<V> WitnessResult<V> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn to_json<M: Arith<V = V>>(&self, m: &M) -> Value {
        let trace: Vec<Value> = self
            .trace
            .iter()
            .map(|r| {
                json!({
                    "i": r.i,
                    "D": m.json(&r.d),
                    "n": bigint_json(&r.n),
                    "l": bigint_json(&r.l),
                    "h": bigint_json(&r.h),
                })
            })
            .collect();
        json!({
            "l_star": bigint_json(&self.l_star),
            "n_star": bigint_json(&self.n_star),
            "landing_offset": m.json(&self.landing_offset),
            "trace": trace,
            "k0": bigint_json(&self.k0),
            "R0": m.json(&self.r0),
            "p": self.p.as_ref().map(bigint_json),
            "F": self.f.as_ref().map(|f| m.json(f)),
            "case": self.case,
        })
    }
}

/// Largest integer `k` with `k * b <= a` (`b > 0`).
fn floor_div<M: Arith>(m: &M, a: &M::V, b: &M::V, what: &str) -> Result<BigInt, WitnessError> {
    let mut k = m.quotient_guess(a, b);
    while m.cmp(&m.mul_int(b, &k), a, what)? == Ordering::Greater {
        k -= 1;
    }
    loop {
        let next = &k + 1;
        if m.cmp(&m.mul_int(b, &next), a, what)? == Ordering::Greater {
            return Ok(k);
        }
        k = next;
    }
}

/// Smallest integer `k` with `a <= k * b` (`b > 0`).
fn ceil_div<M: Arith>(m: &M, a: &M::V, b: &M::V, what: &str) -> Result<BigInt, WitnessError> {
    let k = floor_div(m, a, b, what)?;
    if m.cmp(&m.mul_int(b, &k), a, what)? == Ordering::Equal {
        Ok(k)
    } else {
        Ok(k + 1)
    }
}

fn validate<M: Arith>(m: &M, prob: &WitnessProblem<M::V>) -> Result<(), WitnessError> {
    let ok = m.sign(&prob.a) == Ordering::Greater
        && m.sign(&prob.b) == Ordering::Greater
        && m.sign(&prob.e) == Ordering::Greater
        && m.sign(&m.sub(&prob.a, &prob.e)) != Ordering::Less;
    if ok {
        Ok(())
    } else {
        Err(WitnessError::InvalidProblem(format!(
            "need A > 0, B > 0, 0 < E <= A; got A={}, B={}, E={}",
            m.to_f64(&prob.a),
            m.to_f64(&prob.b),
            m.to_f64(&prob.e)
        )))
    }
}

/// Runs the construction and returns `(l*, n*)` with `l* B - n* A` in `[0, E]`.
pub fn construct_witness<M: Arith>(m: &M, prob: &WitnessProblem<M::V>) -> Result<WitnessResult<M::V>, WitnessError> {
    validate(m, prob)?;
    let (a, b, e) = (&prob.a, &prob.b, &prob.e);
    let one = BigInt::one();

    let k0 = floor_div(m, b, a, "B vs k0*A")?;
    let r0 = m.sub(b, &m.mul_int(a, &k0));
    let offset = |l: &BigInt, n: &BigInt| m.sub(&m.mul_int(b, l), &m.mul_int(a, n));

    if m.cmp(&r0, e, "R0 vs E")? != Ordering::Greater {
        return Ok(WitnessResult {
            landing_offset: offset(&one, &k0),
            l_star: one,
            n_star: k0.clone(),
            trace: Vec::new(),
            k0,
            r0,
            p: None,
            f: None,
            case: WitnessCase::MultipleOrSmallRemainder,
        });
    }

    let d0 = m.sub(a, &r0);
    let p = ceil_div(m, &d0, e, "D0 vs pE")? - &one;
    let f = m.sub(&d0, &m.mul_int(e, &p));
    let a_minus_e = m.sub(a, e);

    let mut trace: Vec<TraceRecord<M::V>> = Vec::new();
    let mut d = d0;
    let mut l = one.clone();
    let mut h = BigInt::zero();
    loop {
        let i = trace.len();
        if i >= ITERATION_CAP {
            return Err(WitnessError::IterationCap(ITERATION_CAP));
        }
        // Minimal n with (n-1) D < A - E <= n D.
        let n = ceil_div(m, &a_minus_e, &d, "A-E vs n*D")?;
        l *= &n;
        h = if i == 0 { &n * (&k0 + &one) - &one } else { &n * &h - &one };
        trace.push(TraceRecord {
            i,
            d: d.clone(),
            n: n.clone(),
            l: l.clone(),
            h: h.clone(),
        });
        let nd = m.mul_int(&d, &n);
        if m.cmp(&nd, a, "n*D vs A")? != Ordering::Greater {
            break;
        }
        d = m.sub(&nd, a);
    }

    let iterations = BigInt::from(trace.len());
    if iterations > &p + &one {
        return Err(WitnessError::InvariantViolated(format!(
            "{} iterations exceed p + 1 = {}",
            trace.len(),
            &p + &one
        )));
    }
    let landing_offset = offset(&l, &h);
    Ok(WitnessResult {
        case: if trace.len() == 1 { WitnessCase::CaseI } else { WitnessCase::CaseII },
        l_star: l,
        n_star: h,
        landing_offset,
        trace,
        k0,
        r0,
        p: Some(p),
        f: Some(f),
    })
}

pub fn construct_exact(prob: &WitnessProblem<BigRational>) -> Result<WitnessResult<BigRational>, WitnessError> {
    construct_witness(&Exact, prob)
}

pub fn construct_float(prob: &WitnessProblem<f64>, eps: f64) -> Result<WitnessResult<f64>, WitnessError> {
    if !(eps >= 0.0) {
        return Err(WitnessError::InvalidProblem("epsilon must be nonnegative".into()));
    }
    for v in [prob.a, prob.b, prob.e] {
        if !v.is_finite() {
            return Err(WitnessError::InvalidProblem("lengths must be finite".into()));
        }
    }
    construct_witness(&Float { eps }, prob)
}

/// Checks the trace identities independently of the construction.
pub fn check_trace(prob: &WitnessProblem<BigRational>, res: &WitnessResult<BigRational>) -> Result<(), String> {
    let (a, e) = (&prob.a, &prob.e);
    let off = &prob.b * BigRational::from_integer(res.l_star.clone()) - a * BigRational::from_integer(res.n_star.clone());
    if off != res.landing_offset || off.is_negative() || &off > e {
        return Err(format!("landing offset {off} outside [0, {e}]"));
    }
    let mut l = BigInt::one();
    for (k, r) in res.trace.iter().enumerate() {
        let n = BigRational::from_integer(r.n.clone());
        if !((&n - BigRational::one()) * &r.d < a - e && a - e <= &n * &r.d) {
            return Err(format!("n_{k} = {} violates the selection rule", r.n));
        }
        l *= &r.n;
        if r.l != l {
            return Err(format!("l_{k} is not the running product"));
        }
        let h = if k == 0 {
            &r.n * (&res.k0 + 1) - 1
        } else {
            &r.n * &res.trace[k - 1].h - 1
        };
        if r.h != h {
            return Err(format!("h_{k} breaks the recursion"));
        }
        if let Some(next) = res.trace.get(k + 1) {
            if next.d != &n * &r.d - a {
                return Err(format!("D_{} != n_{k} D_{k} - A", k + 1));
            }
            if !(next.d.is_positive() && next.d < &r.d - e) {
                return Err(format!("D_{} not in (0, D_{k} - E)", k + 1));
            }
        }
    }
    if let (Some(p), Some(f)) = (&res.p, &res.f) {
        if !(f.is_positive() && f <= e) || &(e * BigRational::from_integer(p.clone()) + f) != &res.trace[0].d {
            return Err("D0 = pE + F decomposition is wrong".into());
        }
        if BigInt::from(res.trace.len()) > p + 1 {
            return Err("iteration count exceeds p + 1".into());
        }
    }
    Ok(())
}

/// Smallest `l` in `[1, l_max]` with `l B mod A` in `[0, E]`, and `n = floor(l B / A)`.
/// Works on integers after clearing denominators.
pub fn brute_force_exact(prob: &WitnessProblem<BigRational>, l_max: u64) -> Result<Option<(BigInt, BigInt)>, WitnessError> {
    validate(&Exact, prob)?;
    let den = prob.a.denom().lcm(prob.b.denom()).lcm(prob.e.denom());
    let scale = |r: &BigRational| (r * BigRational::from_integer(den.clone())).to_integer();
    let (ai, bi, ei) = (scale(&prob.a), scale(&prob.b), scale(&prob.e));
    if let (Some(a), Some(b), Some(e)) = (ai.to_i128(), bi.to_i128(), ei.to_i128()) {
        if b.checked_mul(l_max as i128).is_some() {
            let (mut r, mut q) = (0i128, 0i128);
            for l in 1..=l_max {
                r += b;
                q += r / a;
                r %= a;
                if r <= e {
                    return Ok(Some((BigInt::from(l), BigInt::from(q))));
                }
            }
            return Ok(None);
        }
    }
    let (mut r, mut q) = (BigInt::zero(), BigInt::zero());
    for l in 1..=l_max {
        r += &bi;
        let (dq, rr) = r.div_rem(&ai);
        q += dq;
        r = rr;
        if r <= ei {
            return Ok(Some((BigInt::from(l), q)));
        }
    }
    Ok(None)
}

/// Float brute force; residues are recomputed from `l B` each step.
pub fn brute_force_float(prob: &WitnessProblem<f64>, l_max: u64) -> Result<Option<(u64, u64)>, WitnessError> {
    validate(&Float { eps: 0.0 }, prob)?;
    for l in 1..=l_max {
        let lb = l as f64 * prob.b;
        let n = (lb / prob.a).floor();
        let r = lb - n * prob.a;
        if (0.0..=prob.e).contains(&r) {
            return Ok(Some((l, n as u64)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn run(a: &str, b: &str, e: &str) -> (WitnessProblem<BigRational>, WitnessResult<BigRational>) {
        let p = WitnessProblem::parse(a, b, e).unwrap();
        let r = construct_exact(&p).unwrap();
        check_trace(&p, &r).unwrap();
        (p, r)
    }

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(q("0.55"), BigRational::new(int(11), int(20)));
        assert_eq!(q("1/2"), BigRational::new(int(1), int(2)));
        assert_eq!(q("3"), BigRational::from_integer(int(3)));
        assert_eq!(q("2.5e2"), BigRational::from_integer(int(250)));
        assert_eq!(q("1E-3"), BigRational::new(int(1), int(1000)));
        assert_eq!(q("-.5"), BigRational::new(int(-1), int(2)));
        assert_eq!(q("6/4"), BigRational::new(int(3), int(2)));
        for bad in ["", "x", "1/0", "1.2.3", "1e", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exact_multiple() {
        let (_, r) = run("1", "2", "0.3");
        assert_eq!((r.l_star, r.n_star), (int(1), int(2)));
        assert_eq!(r.case, WitnessCase::MultipleOrSmallRemainder);
        assert!(r.landing_offset.is_zero());
        assert_eq!(r.k0, int(2));
    }

    #[test]
    fn case_one() {
        let (_, r) = run("2", "3", "0.5");
        assert_eq!((r.l_star, r.n_star), (int(2), int(3)));
        assert_eq!(r.case, WitnessCase::CaseI);
        assert!(r.landing_offset.is_zero());
        assert_eq!(r.trace[0].n, int(2));
    }

    #[test]
    fn case_two_chain() {
        let (_, r) = run("1", "0.55", "0.05");
        assert_eq!(r.case, WitnessCase::CaseII);
        let ds: Vec<BigRational> = r.trace.iter().map(|t| t.d.clone()).collect();
        assert_eq!(ds, vec![q("0.45"), q("0.35"), q("0.05")]);
        let ns: Vec<BigInt> = r.trace.iter().map(|t| t.n.clone()).collect();
        assert_eq!(ns, vec![int(3), int(3), int(19)]);
        let hs: Vec<BigInt> = r.trace.iter().map(|t| t.h.clone()).collect();
        assert_eq!(hs, vec![int(2), int(5), int(94)]);
        assert_eq!((r.l_star, r.n_star), (int(171), int(94)));
        assert_eq!(r.landing_offset, q("0.05"));
    }

    #[test]
    fn figure_two_indices() {
        let (p, r) = run("1", "1.68", "0.1");
        assert_eq!(r.trace[0].d, q("0.32"));
        assert_eq!(r.trace[0].n, int(3));
        assert_eq!(r.k0, int(1));
        assert_eq!((r.l_star.clone(), r.n_star.clone()), (int(3), int(5)));
        let (l, n) = brute_force_exact(&p, 100).unwrap().unwrap();
        let off = &p.b * BigRational::from_integer(l.clone()) - &p.a * BigRational::from_integer(n);
        assert!(!off.is_negative() && off <= p.e && l <= r.l_star);
    }

    #[test]
    fn brute_force_examples() {
        let p = WitnessProblem::parse("2", "3", "0.5").unwrap();
        assert_eq!(brute_force_exact(&p, 100).unwrap(), Some((int(2), int(3))));
        let p = WitnessProblem::parse("1", "2", "0.3").unwrap();
        assert_eq!(brute_force_exact(&p, 100).unwrap(), Some((int(1), int(2))));
        let p = WitnessProblem::parse("1", "1/7", "1/100").unwrap();
        assert_eq!(brute_force_exact(&p, 6).unwrap(), None);
        assert_eq!(brute_force_exact(&p, 7).unwrap(), Some((int(7), int(1))));

        let s = WitnessProblem {
            a: 1.0,
            b: 2f64.sqrt(),
            e: 1e-3,
        };
        let (l, n) = brute_force_float(&s, 1_000_000).unwrap().unwrap();
        let off = l as f64 * 2f64.sqrt() - n as f64;
        assert!((0.0..=1e-3).contains(&off));
    }

    #[test]
    fn float_mode() {
        let p = WitnessProblem { a: 2.0, b: 3.0, e: 0.5 };
        // D0 = 2E exactly sits on a boundary.
        assert!(matches!(construct_float(&p, 1e-9), Err(WitnessError::ToleranceAmbiguity(_))));
        let p = WitnessProblem {
            a: 1.0,
            b: 2f64.sqrt(),
            e: 1e-3,
        };
        let r = construct_float(&p, 1e-12).unwrap();
        let off = r.l_star.to_f64().unwrap() * p.b - r.n_star.to_f64().unwrap() * p.a;
        assert!(off > -1e-6 && off < 1e-3 + 1e-6, "{off}");
    }

    #[test]
    fn invalid_problems() {
        for (a, b, e) in [("0", "1", "0.1"), ("1", "0", "0.1"), ("1", "1", "0"), ("1", "1", "2")] {
            let p = WitnessProblem::parse(a, b, e).unwrap();
            assert!(matches!(construct_exact(&p), Err(WitnessError::InvalidProblem(_))));
        }
        assert!(construct_exact(&WitnessProblem::parse("1", "1.5", "1").unwrap()).is_ok());
    }

    #[test]
    fn json_shape() {
        let (_, r) = run("1", "0.55", "0.05");
        let v = r.to_json(&Exact);
        assert_eq!(v["l_star"], 171);
        assert_eq!(v["landing_offset"], "1/20");
        assert_eq!(v["trace"][2]["D"], "1/20");
        assert_eq!(v["case"], "CaseII");
        assert_eq!(bigint_json(&(BigInt::from(u64::MAX) * 4)), Value::String("73786976294838206460".into()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sound_and_oracle_agrees(pa in 1i64..5000, qa in 1i64..50, pb in 1i64..5000, qb in 1i64..50, s in 1i64..100, t in 1i64..100) {
                let a = BigRational::new(int(pa), int(qa));
                let b = BigRational::new(int(pb), int(qb));
                let e = &a * BigRational::new(int(s.min(t)), int(t));
                let p = WitnessProblem { a, b, e };
                let r = construct_exact(&p).unwrap();
                prop_assert!(check_trace(&p, &r).is_ok());
                let cap = r.l_star.to_u64().unwrap_or(u64::MAX).min(10_000_000);
                let (l, _) = brute_force_exact(&p, cap).unwrap().expect("oracle finds a solution");
                prop_assert!(l <= r.l_star);
            }
        }
    }
}
