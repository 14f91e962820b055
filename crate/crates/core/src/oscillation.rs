//! Increasing/decreasing interval detection on sampled orbits.
//!
//! An interval `[a, b]` of a trajectory is increasing when `x(a) < x(b)` and
//! decreasing when `x(a) > x(b)`. For eventually monotone flows a complete
//! orbit cannot have both; the verdict here reports what the samples show.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cone::{Cone, OrderRelation};
use crate::integrate::Trajectory;

pub const DEFAULT_MAX_PAIRS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscillationError {
    #[error("steepening consumed the interval [{a}, {b}] on the sample grid")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("invalid orbit: {0}")]
    InvalidOrbit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalKind {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneInterval {
    pub a: f64,
    pub b: f64,
    pub start_index: usize,
    pub end_index: usize,
    pub kind: IntervalKind,
    /// Relation of the smaller endpoint state to the larger one.
    pub strength: OrderRelation,
    pub steeply: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    NoIntervals,
    IncreasingOnly,
    DecreasingOnly,
    Oscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationVerdict {
    pub status: VerdictStatus,
    pub witness_increasing: Option<MonotoneInterval>,
    pub witness_decreasing: Option<MonotoneInterval>,
    pub disjoint: bool,
}

impl OscillationVerdict {
    pub fn is_disjoint_oscillation(&self) -> bool {
        self.status == VerdictStatus::Oscillating && self.disjoint
    }

    pub fn to_json(&self) -> Value {
        let iv = |w: &Option<MonotoneInterval>| match w {
            Some(w) => json!({"a": w.a, "b": w.b}),
            None => Value::Null,
        };
        json!({
            "status": self.status,
            "increasing": iv(&self.witness_increasing),
            "decreasing": iv(&self.witness_decreasing),
            "disjoint": self.disjoint,
        })
    }
}

/// Orbit of a map `T` over consecutive integer indices `start, start+1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOrbit {
    start: i64,
    states: Vec<Vec<f64>>,
    map_meta: String,
}

impl DiscreteOrbit {
    pub fn new(start: i64, states: Vec<Vec<f64>>, map_meta: impl Into<String>) -> Result<Self, OscillationError> {
        if states.len() < 2 {
            return Err(OscillationError::InvalidOrbit("need at least two states".into()));
        }
        let n = states[0].len();
        if states.iter().any(|s| s.len() != n || s.iter().any(|v| !v.is_finite())) {
            return Err(OscillationError::InvalidOrbit("states must be finite and share one dimension".into()));
        }
        Ok(DiscreteOrbit {
            start,
            states,
            map_meta: map_meta.into(),
        })
    }

    /// `z, T z, ..., T^steps z`, indexed from `start`.
    pub fn iterate<F>(map: F, z: &[f64], start: i64, steps: usize, map_meta: impl Into<String>) -> Result<Self, OscillationError>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut states = Vec::with_capacity(steps + 1);
        states.push(z.to_vec());
        for _ in 0..steps {
            let next = map(states.last().unwrap());
            states.push(next);
        }
        DiscreteOrbit::new(start, states, map_meta)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn map_meta(&self) -> &str {
        &self.map_meta
    }

    fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|k| (self.start + k as i64) as f64).collect()
    }
}

/// Which index pairs `(i, j)`, `i < j`, get compared. Pairs are grouped by
/// gap `j - i`; every selected gap is scanned over all start indices, so the
/// selection is symmetric under reversing the sample order.
#[derive(Debug, Clone)]
struct PairPlan {
    m: usize,
    gaps: Vec<usize>,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl PairPlan {
    fn new(m: usize, max_pairs: usize) -> PairPlan {
        if m < 2 {
            return PairPlan { m, gaps: Vec::new() };
        }
        if (m as u128) * (m as u128) <= max_pairs as u128 {
            return PairPlan {
                m,
                gaps: (1..m).collect(),
            };
        }
        let budget = (max_pairs / 2).max(m - 1);
        // Short gaps in full with half the budget, then a coprime stride over the rest.
        let mut gaps = Vec::new();
        let mut used = 0usize;
        let mut g = 1;
        while g < m && used + (m - g) <= budget / 2 {
            used += m - g;
            gaps.push(g);
            g += 1;
        }
        if g < m {
            let rest: usize = (g..m).map(|k| m - k).sum();
            let mut stride = rest.div_ceil((budget - used).max(1)).max(1);
            while gcd(stride, m) != 1 {
                stride += 1;
            }
            gaps.extend((g..m).step_by(stride));
        }
        PairPlan { m, gaps }
    }

    fn rows(&self) -> impl ParallelIterator<Item = (usize, usize)> + '_ {
        self.gaps
            .par_iter()
            .flat_map_iter(move |&g| (0..self.m - g).map(move |i| (i, i + g)))
    }
}

/// Classifies the pair `(i, j)`, `i < j`, as an increasing or decreasing interval.
fn classify(cone: &Cone, x: &[f64], y: &[f64], tol: f64) -> Option<(IntervalKind, OrderRelation)> {
    let fwd = cone.relation_unchecked(x, y, tol);
    if fwd.is_strict() {
        return Some((IntervalKind::Increasing, fwd));
    }
    let bwd = cone.relation_unchecked(y, x, tol);
    if bwd.is_strict() {
        return Some((IntervalKind::Decreasing, bwd));
    }
    None
}

fn check_samples(times: &[f64], states: &[Vec<f64>], cone: &Cone) -> bool {
    times.len() == states.len() && states.iter().all(|s| s.len() == cone.dimension())
}

fn scan_samples(times: &[f64], states: &[Vec<f64>], cone: &Cone, tol: f64, max_pairs: usize) -> Vec<MonotoneInterval> {
    if !check_samples(times, states, cone) {
        return Vec::new();
    }
    let m = states.len();
    // First later index k with x_k <= x_i; intervals ending before it are steep.
    let next_le: Vec<usize> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i + 1..m)
                .find(|&k| cone.relation_unchecked(&states[k], &states[i], tol).is_le())
                .unwrap_or(m)
        })
        .collect();
    let plan = PairPlan::new(m, max_pairs);
    let mut out: Vec<MonotoneInterval> = plan
        .rows()
        .filter_map(|(i, j)| {
            classify(cone, &states[i], &states[j], tol).map(|(kind, strength)| MonotoneInterval {
                a: times[i],
                b: times[j],
                start_index: i,
                end_index: j,
                kind,
                strength,
                steeply: kind == IntervalKind::Increasing && j < next_le[i],
            })
        })
        .collect();
    out.sort_by(|p, q| (p.start_index, p.end_index).cmp(&(q.start_index, q.end_index)));
    out
}

/// Every detected monotone interval between sample pairs, sorted by `(a, b)`.
pub fn scan_monotone_intervals(traj: &Trajectory, cone: &Cone, tol: f64, max_pairs: usize) -> Vec<MonotoneInterval> {
    scan_samples(traj.times(), traj.states(), cone, tol, max_pairs)
}

/// Per-kind extremes kept while scanning, enough to find a disjoint pair.
#[derive(Debug, Clone, Copy, Default)]
struct KindSummary {
    count: usize,
    first: Option<(usize, usize)>,
    // Interval with the smallest right endpoint, and with the largest left endpoint.
    earliest_end: Option<(usize, usize)>,
    latest_start: Option<(usize, usize)>,
}

impl KindSummary {
    fn add(&mut self, i: usize, j: usize) {
        self.count += 1;
        if self.first.is_none_or(|f| (i, j) < f) {
            self.first = Some((i, j));
        }
        if self.earliest_end.is_none_or(|(ei, ej)| (j, i) < (ej, ei)) {
            self.earliest_end = Some((i, j));
        }
        if self.latest_start.is_none_or(|(li, lj)| (i, std::cmp::Reverse(j)) > (li, std::cmp::Reverse(lj))) {
            self.latest_start = Some((i, j));
        }
    }

    fn merge(mut self, other: KindSummary) -> KindSummary {
        for p in [other.first, other.earliest_end, other.latest_start].into_iter().flatten() {
            let c = self.count;
            self.add(p.0, p.1);
            self.count = c;
        }
        self.count += other.count;
        self
    }
}

fn verdict_samples(times: &[f64], states: &[Vec<f64>], cone: &Cone, tol: f64, max_pairs: usize) -> OscillationVerdict {
    let empty = OscillationVerdict {
        status: VerdictStatus::NoIntervals,
        witness_increasing: None,
        witness_decreasing: None,
        disjoint: false,
    };
    if !check_samples(times, states, cone) {
        return empty;
    }
    let plan = PairPlan::new(states.len(), max_pairs);
    let (inc, dec) = plan
        .rows()
        .fold(
            || (KindSummary::default(), KindSummary::default()),
            |(mut inc, mut dec), (i, j)| {
                match classify(cone, &states[i], &states[j], tol) {
                    Some((IntervalKind::Increasing, _)) => inc.add(i, j),
                    Some((IntervalKind::Decreasing, _)) => dec.add(i, j),
                    None => {}
                }
                (inc, dec)
            },
        )
        .reduce(
            || (KindSummary::default(), KindSummary::default()),
            |(i1, d1), (i2, d2)| (i1.merge(i2), d1.merge(d2)),
        );

    let interval = |(i, j): (usize, usize)| {
        let (kind, strength) = classify(cone, &states[i], &states[j], tol).expect("pair was classified");
        MonotoneInterval {
            a: times[i],
            b: times[j],
            start_index: i,
            end_index: j,
            kind,
            strength,
            steeply: kind == IntervalKind::Increasing
                && !(i + 1..=j).any(|k| cone.relation_unchecked(&states[k], &states[i], tol).is_le()),
        }
    };
    match (inc.count > 0, dec.count > 0) {
        (false, false) => empty,
        (true, false) => OscillationVerdict {
            status: VerdictStatus::IncreasingOnly,
            witness_increasing: inc.first.map(interval),
            ..empty
        },
        (false, true) => OscillationVerdict {
            status: VerdictStatus::DecreasingOnly,
            witness_decreasing: dec.first.map(interval),
            ..empty
        },
        (true, true) => {
            let (ie, il) = (inc.earliest_end.unwrap(), inc.latest_start.unwrap());
            let (de, dl) = (dec.earliest_end.unwrap(), dec.latest_start.unwrap());
            // Intervals sharing only an endpoint count as disjoint.
            let (pair, disjoint) = if ie.1 <= dl.0 {
                ((ie, dl), true)
            } else if de.1 <= il.0 {
                ((il, de), true)
            } else {
                ((inc.first.unwrap(), dec.first.unwrap()), false)
            };
            OscillationVerdict {
                status: VerdictStatus::Oscillating,
                witness_increasing: Some(interval(pair.0)),
                witness_decreasing: Some(interval(pair.1)),
                disjoint,
            }
        }
    }
}

/// Non-oscillation verdict over the default pair budget.
pub fn non_oscillation_verdict(traj: &Trajectory, cone: &Cone, tol: f64) -> OscillationVerdict {
    non_oscillation_verdict_with(traj, cone, tol, DEFAULT_MAX_PAIRS)
}

pub fn non_oscillation_verdict_with(traj: &Trajectory, cone: &Cone, tol: f64, max_pairs: usize) -> OscillationVerdict {
    verdict_samples(traj.times(), traj.states(), cone, tol, max_pairs)
}

/// Verdict over integer segments `[m, n]` of a map orbit; all pairs are compared.
pub fn discrete_scan(orbit: &DiscreteOrbit, cone: &Cone, tol: f64) -> OscillationVerdict {
    verdict_samples(&orbit.times(), &orbit.states, cone, tol, usize::MAX)
}

pub fn discrete_intervals(orbit: &DiscreteOrbit, cone: &Cone, tol: f64) -> Vec<MonotoneInterval> {
    scan_samples(&orbit.times(), &orbit.states, cone, tol, usize::MAX)
}

/// Shrinks an increasing interval to a steeply increasing one `[t0, b]`,
/// where `t0` is pushed forward while some later sample lies below `x(t0)`.
pub fn steepen(traj: &Trajectory, cone: &Cone, interval: &MonotoneInterval, tol: f64) -> Result<MonotoneInterval, OscillationError> {
    if interval.kind != IntervalKind::Increasing {
        return Err(OscillationError::InvalidInterval("only increasing intervals can be steepened".into()));
    }
    let times = traj.times();
    let states = traj.states();
    let (i0, j) = (interval.start_index, interval.end_index);
    if !(i0 < j && j < times.len()) || times[i0] != interval.a || times[j] != interval.b {
        return Err(OscillationError::InvalidInterval(format!(
            "[{}, {}] does not match sample indices {}..{}",
            interval.a, interval.b, i0, j
        )));
    }
    let degenerate = OscillationError::DegenerateInterval {
        a: interval.a,
        b: interval.b,
    };
    let mut cur = i0;
    while let Some(k) = (cur + 1..=j)
        .rev()
        .find(|&k| cone.relation_unchecked(&states[k], &states[cur], tol).is_le())
    {
        if k == j {
            return Err(degenerate);
        }
        cur = k;
    }
    let strength = cone.relation_unchecked(&states[cur], &states[j], tol);
    if !strength.is_strict() {
        return Err(degenerate);
    }
    Ok(MonotoneInterval {
        a: times[cur],
        b: times[j],
        start_index: cur,
        end_index: j,
        kind: IntervalKind::Increasing,
        strength,
        steeply: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Direction;
    use std::f64::consts::PI;

    fn traj(times: Vec<f64>, states: Vec<Vec<f64>>) -> Trajectory {
        Trajectory::new(times, states, Direction::Forward, None).unwrap()
    }

    fn circle(m: usize) -> Trajectory {
        let times: Vec<f64> = (0..=m).map(|k| -PI + 2.0 * PI * k as f64 / m as f64).collect();
        let states = times.iter().map(|t| vec![t.cos(), t.sin()]).collect();
        traj(times, states)
    }

    #[test]
    fn exponential_only_increasing() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let states = times.iter().map(|t| vec![t.exp()]).collect();
        let t = traj(times, states);
        let c = Cone::positive_orthant(1).unwrap();
        let iv = scan_monotone_intervals(&t, &c, 1e-9, DEFAULT_MAX_PAIRS);
        assert_eq!(iv.len(), 41 * 40 / 2);
        assert!(iv.iter().all(|i| i.kind == IntervalKind::Increasing && i.steeply));
        assert_eq!(non_oscillation_verdict(&t, &c, 1e-9).status, VerdictStatus::IncreasingOnly);
    }

    #[test]
    fn circle_oscillates() {
        // Grid of 8 steps lands on -pi/4, pi/4, pi/2, pi.
        let t = circle(8);
        let c = Cone::positive_orthant(2).unwrap();
        let iv = scan_monotone_intervals(&t, &c, 1e-9, DEFAULT_MAX_PAIRS);
        let has = |a: f64, b: f64, k: IntervalKind| {
            iv.iter().any(|i| (i.a - a).abs() < 1e-12 && (i.b - b).abs() < 1e-12 && i.kind == k)
        };
        assert!(has(-PI / 4.0, PI / 4.0, IntervalKind::Increasing));
        assert!(has(PI / 2.0, PI, IntervalKind::Decreasing));
        let v = non_oscillation_verdict(&t, &c, 1e-9);
        assert_eq!(v.status, VerdictStatus::Oscillating);
        assert!(v.disjoint);
        let (wi, wd) = (v.witness_increasing.unwrap(), v.witness_decreasing.unwrap());
        assert!(wi.b <= wd.a || wd.b <= wi.a);
    }

    #[test]
    fn metzler_closed_form_has_no_intervals() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.05).collect();
        let states = times
            .iter()
            .map(|t| {
                let e = (-2.0 * t).exp();
                vec![1.0 + e, 1.0 - e]
            })
            .collect();
        let t = traj(times, states);
        let c = Cone::positive_orthant(2).unwrap();
        assert!(scan_monotone_intervals(&t, &c, 0.0, DEFAULT_MAX_PAIRS).is_empty());
        assert_eq!(non_oscillation_verdict(&t, &c, 0.0).status, VerdictStatus::NoIntervals);
    }

    #[test]
    fn equal_endpoints_no_intervals() {
        let t = traj(vec![0.0, 1.0], vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        let c = Cone::positive_orthant(2).unwrap();
        let v = non_oscillation_verdict(&t, &c, 1e-6);
        assert_eq!(v.status, VerdictStatus::NoIntervals);
        assert_eq!(v.to_json()["increasing"], Value::Null);
    }

    #[test]
    fn reversal_swaps_kinds() {
        let t = circle(50);
        let c = Cone::positive_orthant(2).unwrap();
        for max_pairs in [DEFAULT_MAX_PAIRS, 300] {
            let count = |iv: &[MonotoneInterval], k| iv.iter().filter(|i| i.kind == k).count();
            let f = scan_monotone_intervals(&t, &c, 1e-9, max_pairs);
            let r = scan_monotone_intervals(&t.reversed(), &c, 1e-9, max_pairs);
            assert_eq!(count(&f, IntervalKind::Increasing), count(&r, IntervalKind::Decreasing));
            assert_eq!(count(&f, IntervalKind::Decreasing), count(&r, IntervalKind::Increasing));
        }
    }

    #[test]
    fn subsampled_plan_within_budget() {
        let plan = PairPlan::new(5000, 1_000_000);
        let total: usize = plan.gaps.iter().map(|g| 5000 - g).sum();
        assert!(total <= 500_000 + 5000, "{total}");
        assert_eq!(plan.gaps[0], 1);
        assert!(plan.gaps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn steepen_examples() {
        let c = Cone::positive_orthant(1).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let e = traj(times.clone(), times.iter().map(|t| vec![t.exp()]).collect());
        let iv = scan_monotone_intervals(&e, &c, 0.0, DEFAULT_MAX_PAIRS);
        let whole = iv.iter().find(|i| i.start_index == 0 && i.end_index == 10).unwrap();
        let s = steepen(&e, &c, whole, 0.0).unwrap();
        assert_eq!((s.a, s.b), (0.0, 1.0));

        // Dips below x(0) until t = 0.5, then rises above it.
        let dip: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| vec![if t <= 0.5 + 1e-12 { -t } else { t - 0.4 }])
            .collect();
        let d = traj(times.clone(), dip);
        let iv = scan_monotone_intervals(&d, &c, 0.0, DEFAULT_MAX_PAIRS);
        let whole = iv.iter().find(|i| i.start_index == 0 && i.end_index == 10).unwrap();
        let s = steepen(&d, &c, whole, 0.0).unwrap();
        // Linear-scan oracle: the last sample at or below x(0).
        let oracle = (0..=10).rev().find(|&k| d.states()[k][0] <= d.states()[0][0]).unwrap();
        assert_eq!(s.start_index, oracle);
        assert!((s.a - 0.5).abs() < 1e-12 && s.b == 1.0);
        assert!((s.start_index + 1..=10).all(|k| d.states()[k][0] > d.states()[s.start_index][0]));

        let flat = traj(times.clone(), times.iter().map(|_| vec![1.0]).collect());
        let claimed = MonotoneInterval {
            a: 0.0,
            b: 1.0,
            start_index: 0,
            end_index: 10,
            kind: IntervalKind::Increasing,
            strength: OrderRelation::Strict,
            steeply: false,
        };
        assert!(matches!(steepen(&flat, &c, &claimed, 0.0), Err(OscillationError::DegenerateInterval { .. })));
    }

    #[test]
    fn discrete_examples() {
        let c1 = Cone::positive_orthant(1).unwrap();
        let up = DiscreteOrbit::iterate(|x| vec![2.0 * x[0]], &[1.0], 0, 10, "2x").unwrap();
        assert_eq!(discrete_scan(&up, &c1, 0.0).status, VerdictStatus::IncreasingOnly);
        let down = DiscreteOrbit::iterate(|x| vec![0.5 * x[0]], &[1.0], 0, 10, "x/2").unwrap();
        assert_eq!(discrete_scan(&down, &c1, 0.0).status, VerdictStatus::DecreasingOnly);

        let c2 = Cone::positive_orthant(2).unwrap();
        let rot = DiscreteOrbit::iterate(|x| vec![-x[1], x[0]], &[1.0, 0.0], 0, 8, "rotation").unwrap();
        let v = discrete_scan(&rot, &c2, 1e-12);
        assert_eq!(v.status, VerdictStatus::Oscillating);
        assert!(v.disjoint);
        // (1,0) > (-1,0): segment [0, 2] is decreasing.
        let iv = discrete_intervals(&rot, &c2, 1e-12);
        assert!(iv.iter().any(|i| i.a == 0.0 && i.b == 2.0 && i.kind == IntervalKind::Decreasing));
    }

    #[test]
    fn orbit_needs_two_states() {
        assert!(DiscreteOrbit::new(0, vec![vec![1.0]], "").is_err());
    }
}
