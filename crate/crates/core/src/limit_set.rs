//! Sampled ω- and α-limit sets: estimation, non-ordering and projection
//! checks, equilibrium/cycle classification, and hyperbolicity diagnostics.

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cone::{dot, norm, Cone, OrderRelation};
use crate::field::{FieldError, SystemDef};
use crate::integrate::{self, flow_to, Direction, IntegrateError, IntegrateOptions};
use crate::linalg;

pub const EQUILIBRIUM_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitSetError {
    #[error("backward orbit is unbounded (norm cap exceeded at t = -{t_reached})")]
    AlphaUnbounded { t_reached: f64 },
    #[error("forward orbit is unbounded (norm cap exceeded at t = {t_reached})")]
    BlowUp { t_reached: f64 },
    #[error("|F(x)| = {residual:e} is not below the equilibrium threshold")]
    NotEquilibrium { residual: f64 },
    #[error("recurrence error {error:e} over the given period is too large")]
    NotPeriodic { error: f64 },
    #[error("projection direction is not in the cone interior")]
    VNotInterior,
    #[error("eigenvalue computation did not converge")]
    EigenFailure,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Integrate(IntegrateError),
}

impl From<IntegrateError> for LimitSetError {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::BlowUp { t_reached } => LimitSetError::BlowUp { t_reached },
            IntegrateError::Domain(f) => LimitSetError::Field(f),
            other => LimitSetError::Integrate(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitDirection {
    Omega,
    Alpha,
}

impl LimitDirection {
    fn time_direction(self) -> Direction {
        match self {
            LimitDirection::Omega => Direction::Forward,
            LimitDirection::Alpha => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub transient: f64,
    /// Length of the first window; window `k` has length `window * 2^k`.
    pub window: f64,
    pub refine: usize,
    /// Samples in the first window; the spacing is kept for later windows.
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub norm_cap: f64,
    /// Hausdorff gaps above this are flagged as non-converged.
    pub gap_threshold: f64,
}

impl EstimateOptions {
    pub fn new(transient: f64, window: f64) -> Self {
        EstimateOptions {
            transient,
            window,
            refine: 2,
            samples: 1000,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            norm_cap: 1e9,
            gap_threshold: 1e-2,
        }
    }

    fn integrator(&self) -> IntegrateOptions {
        IntegrateOptions::dp54(self.rel_tol, self.abs_tol).with_norm_cap(self.norm_cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSetEstimate {
    pub points: Vec<Vec<f64>>,
    pub direction: LimitDirection,
    pub seed_state: Vec<f64>,
    pub transient_time: f64,
    pub sample_window: f64,
    /// Spacing in time between consecutive points.
    pub sample_step: f64,
    pub hausdorff_gap: f64,
    pub converged: bool,
}

/// Samples `x0, φ(dt), ..., φ(count·dt)` in the given time direction.
pub fn sample_orbit(
    sys: &SystemDef,
    x0: &[f64],
    dt: f64,
    count: usize,
    direction: Direction,
    opts: &IntegrateOptions,
) -> Result<Vec<Vec<f64>>, IntegrateError> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(x0.to_vec());
    let mut x = x0.to_vec();
    for _ in 0..count {
        x = integrate::integrate(sys, &x, dt, direction, opts)?.last_state().to_vec();
        out.push(x.clone());
    }
    Ok(out)
}

pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let directed = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.par_iter()
            .map(|x| q.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn estimate_limit_set(sys: &SystemDef, x0: &[f64], direction: LimitDirection, opts: &EstimateOptions) -> Result<LimitSetEstimate, LimitSetError> {
    if !(opts.transient > 0.0 && opts.window > 0.0) || opts.refine < 2 || opts.samples == 0 {
        return Err(LimitSetError::InvalidArgument(
            "transient and window must be positive, refine >= 2, samples >= 1".into(),
        ));
    }
    if x0.len() != sys.dimension() {
        return Err(FieldError::DimensionMismatch {
            expected: sys.dimension(),
            found: x0.len(),
        }
        .into());
    }
    let tdir = direction.time_direction();
    let iopts = opts.integrator();
    let dt = opts.window / opts.samples as f64;
    let lift = |e: IntegrateError, offset: f64| match (e, direction) {
        (IntegrateError::BlowUp { t_reached }, LimitDirection::Alpha) => LimitSetError::AlphaUnbounded {
            t_reached: t_reached + offset,
        },
        (IntegrateError::BlowUp { t_reached }, LimitDirection::Omega) => LimitSetError::BlowUp {
            t_reached: t_reached + offset,
        },
        (e, _) => e.into(),
    };
    let mut x = integrate::integrate(sys, x0, opts.transient, tdir, &iopts)
        .map_err(|e| lift(e, 0.0))?
        .last_state()
        .to_vec();
    let mut elapsed = opts.transient;
    let mut windows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(opts.refine);
    for k in 0..opts.refine {
        let count = opts.samples << k;
        let pts = sample_orbit(sys, &x, dt, count, tdir, &iopts).map_err(|e| lift(e, elapsed))?;
        x = pts.last().unwrap().clone();
        elapsed += dt * count as f64;
        windows.push(pts);
    }
    let last = windows.pop().unwrap();
    let prev = windows.pop().unwrap();
    let gap = hausdorff(&prev, &last);
    Ok(LimitSetEstimate {
        sample_window: dt * (last.len() - 1) as f64,
        points: last,
        direction,
        seed_state: x0.to_vec(),
        transient_time: opts.transient,
        sample_step: dt,
        hausdorff_gap: gap,
        converged: gap <= opts.gap_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstPair {
    pub i: usize,
    pub j: usize,
    pub relation: OrderRelation,
    /// Smallest defining slack of `points[j] - points[i]`.
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonOrderingReport {
    /// No pair related by `≪` with every slack above the margin.
    pub ok: bool,
    /// Pairs related by `<` (or `≪`) at tolerance `margin`.
    pub strict_pairs: usize,
    pub strict_ok: bool,
    pub worst_pair: Option<WorstPair>,
}

pub fn non_ordering_check(points: &[Vec<f64>], cone: &Cone, margin: f64) -> NonOrderingReport {
    let m = points.len();
    let (interior, strict, worst) = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut interior = 0usize;
            let mut strict = 0usize;
            let mut worst: Option<(f64, usize, usize)> = None;
            for j in 0..m {
                if i == j {
                    continue;
                }
                let (lo, _) = cone.slack_range(&points[i], &points[j]);
                if lo > margin {
                    interior += 1;
                }
                if j > i {
                    let fwd = cone.relation_unchecked(&points[i], &points[j], margin).is_strict();
                    let bwd = cone.relation_unchecked(&points[j], &points[i], margin).is_strict();
                    strict += usize::from(fwd || bwd);
                }
                if worst.is_none_or(|(w, _, _)| lo > w) {
                    worst = Some((lo, i, j));
                }
            }
            (interior, strict, worst)
        })
        .reduce(
            || (0, 0, None),
            |(a1, b1, w1), (a2, b2, w2)| {
                let w = match (w1, w2) {
                    (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                };
                (a1 + a2, b1 + b2, w)
            },
        );
    NonOrderingReport {
        ok: interior == 0,
        strict_pairs: strict,
        strict_ok: strict == 0,
        worst_pair: worst.map(|(lo, i, j)| WorstPair {
            i,
            j,
            relation: cone.relation_unchecked(&points[i], &points[j], margin),
            min_slack: lo,
        }),
    }
}

/// `x - (x·v) v`.
pub fn theta(x: &[f64], v: &[f64]) -> Vec<f64> {
    let c = dot(x, v);
    x.iter().zip(v).map(|(a, b)| a - c * b).collect()
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `v`.
pub fn complement_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        for b in &basis {
            let c = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let ne = norm(&e);
        if ne > 1e-8 {
            e.iter_mut().for_each(|x| *x /= ne);
            basis.push(e);
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub v: Vec<f64>,
    pub projected: Vec<Vec<f64>>,
    /// Min of `|Θp - Θq| / |p - q|` over sample pairs; `None` if every pair was skipped.
    pub injectivity_margin: Option<f64>,
}

pub fn project_and_check(points: &[Vec<f64>], cone: &Cone, v: Option<&[f64]>) -> Result<ProjectionReport, LimitSetError> {
    let n = cone.dimension();
    let raw: Vec<f64> = match v {
        Some(v) => v.to_vec(),
        None => cone.interior_point().to_vec(),
    };
    let nv = norm(&raw);
    if raw.len() != n || !(nv > 0.0) {
        return Err(LimitSetError::VNotInterior);
    }
    let v: Vec<f64> = raw.iter().map(|x| x / nv).collect();
    if cone.slacks(&v).iter().any(|&s| !(s > 0.0)) {
        return Err(LimitSetError::VNotInterior);
    }
    if points.iter().any(|p| p.len() != n) {
        return Err(LimitSetError::InvalidArgument(format!("points must have dimension {n}")));
    }
    let basis = complement_basis(&v);
    let projected: Vec<Vec<f64>> = points.iter().map(|p| basis.iter().map(|b| dot(p, b)).collect()).collect();
    let m = points.len();
    let margin = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in i + 1..m {
                let d = dist(&points[i], &points[j]);
                if d < 1e-9 {
                    continue;
                }
                best = best.min(dist(&projected[i], &projected[j]) / d);
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(ProjectionReport {
        v,
        projected,
        injectivity_margin: margin.is_finite().then_some(margin),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LimitSetVerdict {
    Equilibrium { point: Vec<f64> },
    PeriodicOrbit { period: f64, point: Vec<f64> },
    ContainsEquilibrium { point: Vec<f64> },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassEvidence {
    pub diameter: f64,
    /// Neighborhood radius used when deciding whether an equilibrium touches the cloud.
    pub neighborhood: f64,
    pub equilibrium_residual: Option<f64>,
    pub equilibrium_distance: Option<f64>,
    pub recurrence_error: Option<f64>,
    /// Worst recurrence error over re-checked cloud points.
    pub recheck_error: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSetClass {
    pub verdict: LimitSetVerdict,
    pub evidence: ClassEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub newton_iterations: usize,
    pub medoids: usize,
    /// Recurrence threshold as a fraction of the cloud diameter.
    pub recurrence_rel: f64,
    pub recheck_points: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            newton_iterations: 50,
            medoids: 8,
            recurrence_rel: 1e-4,
            recheck_points: 5,
            rel_tol: 1e-12,
            abs_tol: 1e-14,
        }
    }
}

/// Damped Newton iteration for `F(x) = 0`; returns the final point and residual.
pub fn newton(sys: &SystemDef, x0: &[f64], iterations: usize) -> Result<(Vec<f64>, f64), FieldError> {
    let mut x = x0.to_vec();
    let mut r = norm(&sys.eval(&x)?);
    for _ in 0..iterations {
        if r < EQUILIBRIUM_RESIDUAL {
            break;
        }
        let f = DVector::from_vec(sys.eval(&x)?);
        let j = sys.jacobian(&x)?;
        let Some(step) = j.lu().solve(&f) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            if let Ok(ft) = sys.eval(&trial) {
                let rt = norm(&ft);
                if rt < r {
                    x = trial;
                    r = rt;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((x, r))
}

/// Deterministic k-medoids: farthest-point initialization, then a few
/// assign/update rounds.
pub fn medoids(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let m = points.len();
    if m == 0 || k == 0 {
        return Vec::new();
    }
    let dim = points[0].len();
    let centroid: Vec<f64> = (0..dim).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / m as f64).collect();
    let argmin = |f: &dyn Fn(usize) -> f64| (0..m).min_by(|&a, &b| f(a).total_cmp(&f(b))).unwrap();
    let mut centers = vec![argmin(&|i| dist(&points[i], &centroid))];
    let mut near: Vec<f64> = points.iter().map(|p| dist(p, &points[centers[0]])).collect();
    while centers.len() < k.min(m) {
        let far = argmin(&|i| -near[i]);
        if near[far] == 0.0 {
            break;
        }
        centers.push(far);
        for (i, p) in points.iter().enumerate() {
            near[i] = near[i].min(dist(p, &points[far]));
        }
    }
    for _ in 0..3 {
        let assign: Vec<usize> = points
            .iter()
            .map(|p| {
                (0..centers.len())
                    .min_by(|&a, &b| dist(p, &points[centers[a]]).total_cmp(&dist(p, &points[centers[b]])))
                    .unwrap()
            })
            .collect();
        let updated: Vec<usize> = (0..centers.len())
            .into_par_iter()
            .map(|c| {
                let members: Vec<usize> = (0..m).filter(|&i| assign[i] == c).collect();
                *members
                    .iter()
                    .min_by(|&&a, &&b| {
                        let cost = |x: usize| members.iter().map(|&y| dist(&points[x], &points[y])).sum::<f64>();
                        cost(a).total_cmp(&cost(b))
                    })
                    .unwrap_or(&centers[c])
            })
            .collect();
        if updated == centers {
            break;
        }
        centers = updated;
    }
    centers
}

fn diameter(points: &[Vec<f64>]) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| points[i + 1..].iter().map(|q| dist(&points[i], q)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

fn max_nearest_neighbor(points: &[Vec<f64>]) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| dist(&points[i], q))
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|d| d.is_finite())
        .reduce(|| 0.0, f64::max)
}

fn distance_to_cloud(x: &[f64], points: &[Vec<f64>]) -> f64 {
    points.iter().map(|p| dist(x, p)).fold(f64::INFINITY, f64::min)
}

/// First time `T > 0` at which the orbit of `p0` crosses the plane through `p0`
/// with normal `normal` from the negative to the positive side, bisected to `time_tol`.
pub fn first_return(
    sys: &SystemDef,
    p0: &[f64],
    normal: &[f64],
    dt: f64,
    t_max: f64,
    time_tol: f64,
    opts: &IntegrateOptions,
) -> Result<Option<f64>, IntegrateError> {
    let g = |x: &[f64]| dot(normal, x) - dot(normal, p0);
    let mut t = 0.0;
    let mut x = p0.to_vec();
    let mut gx = 0.0;
    let mut left_plane = false;
    while t < t_max {
        let next = flow_to(sys, &x, dt, opts)?;
        let gn = g(&next);
        if gx < 0.0 && gn >= 0.0 && left_plane {
            // Bisect on the elapsed time from the bracketing sample.
            let (mut lo, mut hi) = (0.0, dt);
            while hi - lo > time_tol {
                let mid = 0.5 * (lo + hi);
                if g(&flow_to(sys, &x, mid, opts)?) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(t + 0.5 * (lo + hi)));
        }
        if gn < 0.0 {
            left_plane = true;
        }
        x = next;
        gx = gn;
        t += dt;
    }
    Ok(None)
}

pub fn classify_limit_set(sys: &SystemDef, est: &LimitSetEstimate, opts: &ClassifyOptions) -> Result<LimitSetClass, LimitSetError> {
    let pts = &est.points;
    if pts.is_empty() || pts[0].len() != sys.dimension() {
        return Err(LimitSetError::InvalidArgument("estimate does not match the system".into()));
    }
    let diam = diameter(pts);
    let neighborhood = (3.0 * max_nearest_neighbor(pts)).max(1e-6);
    let mut ev = ClassEvidence {
        diameter: diam,
        neighborhood,
        ..Default::default()
    };

    let seeds: Vec<Vec<f64>> = medoids(pts, opts.medoids).into_iter().map(|i| pts[i].clone()).collect();
    let mut found: Option<(Vec<f64>, f64, f64)> = None;
    for s in &seeds {
        let (x, r) = newton(sys, s, opts.newton_iterations)?;
        if r < EQUILIBRIUM_RESIDUAL {
            let d = distance_to_cloud(&x, pts);
            if found.as_ref().is_none_or(|f| d < f.2) {
                found = Some((x, r, d));
            }
        }
    }
    if let Some((x, r, d)) = &found {
        ev.equilibrium_residual = Some(*r);
        ev.equilibrium_distance = Some(*d);
        if *d <= neighborhood {
            let verdict = if diam < 1e-6 {
                LimitSetVerdict::Equilibrium { point: x.clone() }
            } else {
                LimitSetVerdict::ContainsEquilibrium { point: x.clone() }
            };
            return Ok(LimitSetClass { verdict, evidence: ev });
        }
    }
    if diam < 1e-6 {
        ev.note = Some("cloud is a point but no equilibrium was resolved near it".into());
        return Ok(LimitSetClass {
            verdict: LimitSetVerdict::Inconclusive,
            evidence: ev,
        });
    }
    if sys.dimension() != 3 {
        ev.note = Some("cycle detection is limited to three-dimensional systems".into());
        return Ok(LimitSetClass {
            verdict: LimitSetVerdict::Inconclusive,
            evidence: ev,
        });
    }

    let dim = pts[0].len();
    let bary: Vec<f64> = (0..dim).map(|d| pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64).collect();
    let p0 = pts
        .iter()
        .min_by(|a, b| dist(a, &bary).total_cmp(&dist(b, &bary)))
        .unwrap()
        .clone();
    let f0 = sys.eval(&p0)?;
    let nf = norm(&f0);
    if !(nf > 0.0) {
        ev.note = Some("flow vanishes at the section point".into());
        return Ok(LimitSetClass {
            verdict: LimitSetVerdict::Inconclusive,
            evidence: ev,
        });
    }
    let normal: Vec<f64> = f0.iter().map(|v| v / nf).collect();
    let iopts = IntegrateOptions::dp54(opts.rel_tol, opts.abs_tol);
    let t_max = est.sample_window;
    let Some(period) = first_return(sys, &p0, &normal, est.sample_step, t_max, 1e-10, &iopts)? else {
        ev.note = Some("no return to the section within the sample window".into());
        return Ok(LimitSetClass {
            verdict: LimitSetVerdict::Inconclusive,
            evidence: ev,
        });
    };
    let threshold = opts.recurrence_rel * diam;
    let err = dist(&flow_to(sys, &p0, period, &iopts)?, &p0);
    ev.recurrence_error = Some(err);
    if !(err < threshold) {
        ev.note = Some(format!("recurrence error above {threshold:e}"));
        return Ok(LimitSetClass {
            verdict: LimitSetVerdict::Inconclusive,
            evidence: ev,
        });
    }
    let stride = (pts.len() / opts.recheck_points.max(1)).max(1);
    let worst = pts
        .par_iter()
        .step_by(stride)
        .take(opts.recheck_points)
        .map(|p| flow_to(sys, p, period, &iopts).map(|q| dist(&q, p)))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    ev.recheck_error = Some(worst);
    if !(worst < threshold) {
        ev.note = Some(format!("re-checked points miss the period by {worst:e}"));
        return Ok(LimitSetClass {
            verdict: LimitSetVerdict::Inconclusive,
            evidence: ev,
        });
    }
    Ok(LimitSetClass {
        verdict: LimitSetVerdict::PeriodicOrbit { period, point: p0 },
        evidence: ev,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumAt {
    Equilibrium(Vec<f64>),
    Cycle { period: f64, point: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub at: SpectrumAt,
    pub values: Vec<Complex<f64>>,
    pub hyperbolic: bool,
    pub margin: f64,
    pub liouville_rel_error: Option<f64>,
    pub note: Option<String>,
}

impl SpectrumReport {
    pub fn to_json(&self) -> Value {
        let values: Vec<Value> = self.values.iter().map(|z| json!([z.re, z.im])).collect();
        let mut v = json!({
            "at": self.at,
            "values": values,
            "hyperbolic": self.hyperbolic,
            "margin": self.margin,
        });
        if let Some(e) = self.liouville_rel_error {
            v["liouville_rel_error"] = json!(e);
        }
        if let Some(n) = &self.note {
            v["note"] = json!(n);
        }
        v
    }
}

pub fn spectrum_at_equilibrium(sys: &SystemDef, x: &[f64]) -> Result<SpectrumReport, LimitSetError> {
    let residual = norm(&sys.eval(x)?);
    if !(residual < EQUILIBRIUM_RESIDUAL) {
        return Err(LimitSetError::NotEquilibrium { residual });
    }
    let values = linalg::eigenvalues(&sys.jacobian(x)?).ok_or(LimitSetError::EigenFailure)?;
    let margin = values.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(SpectrumReport {
        at: SpectrumAt::Equilibrium(x.to_vec()),
        values,
        hyperbolic: margin > 1e-6,
        margin,
        liouville_rel_error: None,
        note: None,
    })
}

/// Monodromy matrix over one period together with `∫ tr J dt`.
pub fn monodromy(sys: &SystemDef, p: &[f64], period: f64, opts: &IntegrateOptions) -> Result<(DMatrix<f64>, f64), LimitSetError> {
    let n = sys.dimension();
    let mut z0 = p.to_vec();
    let eye = DMatrix::<f64>::identity(n, n);
    z0.extend(eye.iter());
    z0.push(0.0);
    let rhs = |z: &[f64], out: &mut [f64]| -> Result<(), FieldError> {
        let x = &z[..n];
        sys.eval_into(x, &mut out[..n])?;
        let j = sys.jacobian(x)?;
        let xm = DMatrix::from_column_slice(n, n, &z[n..n + n * n]);
        let d = &j * xm;
        out[n..n + n * n].copy_from_slice(d.as_slice());
        out[n + n * n] = j.trace();
        Ok(())
    };
    let (_, states) = integrate::solve(rhs, &z0, period, opts)?;
    let z = states.last().unwrap();
    Ok((DMatrix::from_column_slice(n, n, &z[n..n + n * n]), z[n + n * n]))
}

pub fn floquet_multipliers(sys: &SystemDef, p: &[f64], period: f64) -> Result<SpectrumReport, LimitSetError> {
    floquet_multipliers_with(sys, p, period, &IntegrateOptions::dp54(1e-12, 1e-14))
}

pub fn floquet_multipliers_with(sys: &SystemDef, p: &[f64], period: f64, opts: &IntegrateOptions) -> Result<SpectrumReport, LimitSetError> {
    if !(period > 0.0) || p.len() != sys.dimension() {
        return Err(LimitSetError::InvalidArgument("need a positive period and a point of the system's dimension".into()));
    }
    let error = dist(&flow_to(sys, p, period, opts)?, p);
    if !(error < 1e-4) {
        return Err(LimitSetError::NotPeriodic { error });
    }
    let (m, trace_integral) = monodromy(sys, p, period, opts)?;
    let expected = trace_integral.exp();
    let liouville = (m.determinant() - expected).abs() / expected.abs();
    let values = linalg::eigenvalues(&m).ok_or(LimitSetError::EigenFailure)?;
    let trivial = (0..values.len())
        .min_by(|&a, &b| (values[a] - 1.0).norm().total_cmp(&(values[b] - 1.0).norm()))
        .unwrap();
    let others = values.iter().enumerate().filter(|&(k, _)| k != trivial);
    let margin = others.map(|(_, z)| (z.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    let trivial_off = (values[trivial] - 1.0).norm();
    let mut note = None;
    let mut hyperbolic = margin > 1e-3;
    if trivial_off > 1e-3 {
        hyperbolic = false;
        note = Some(format!("no multiplier within 1e-3 of 1 (closest is off by {trivial_off:e})"));
    }
    Ok(SpectrumReport {
        at: SpectrumAt::Cycle {
            period,
            point: p.to_vec(),
        },
        values,
        hyperbolic,
        margin,
        liouville_rel_error: Some(liouville),
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sys(json: &str) -> SystemDef {
        SystemDef::from_json(json).unwrap()
    }

    fn cycle2() -> SystemDef {
        sys(r#"{"field":["x1*(1 - x1^2 - x2^2) - x2", "x2*(1 - x1^2 - x2^2) + x1"]}"#)
    }

    fn cycle3() -> SystemDef {
        sys(r#"{"field":["x1*(1 - x1^2 - x2^2) - x2", "x2*(1 - x1^2 - x2^2) + x1", "-x3"]}"#)
    }

    #[test]
    fn sink_limit_set() {
        let s = sys(r#"{"field":["-x1","-x2"]}"#);
        let est = estimate_limit_set(&s, &[1.0, 1.0], LimitDirection::Omega, &EstimateOptions::new(30.0, 5.0)).unwrap();
        assert!(est.points.iter().all(|p| norm(p) < 1e-6));
        assert!(est.hausdorff_gap < 1e-6 && est.converged);
        let class = classify_limit_set(&s, &est, &ClassifyOptions::default()).unwrap();
        match class.verdict {
            LimitSetVerdict::Equilibrium { point } => assert!(norm(&point) < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn planar_cycle_points_on_circle() {
        let est = estimate_limit_set(&cycle2(), &[0.1, 0.0], LimitDirection::Omega, &EstimateOptions::new(30.0, 7.0)).unwrap();
        assert!(est.points.iter().all(|p| (norm(p) - 1.0).abs() < 1e-4));
        // Not a 3D system: no cycle verdict.
        let class = classify_limit_set(&cycle2(), &est, &ClassifyOptions::default()).unwrap();
        assert_eq!(class.verdict, LimitSetVerdict::Inconclusive);
    }

    #[test]
    fn growth_alpha_and_omega() {
        let s = sys(r#"{"field":["x1"]}"#);
        let mut o = EstimateOptions::new(20.0, 2.0);
        o.samples = 50;
        let est = estimate_limit_set(&s, &[1.0], LimitDirection::Alpha, &o).unwrap();
        assert!(est.points.iter().all(|p| p[0].abs() < 1e-8));
        assert!(matches!(
            estimate_limit_set(&s, &[1.0], LimitDirection::Omega, &o),
            Err(LimitSetError::BlowUp { .. })
        ));
        let grow = sys(r#"{"field":["-x1"]}"#);
        assert!(matches!(
            estimate_limit_set(&grow, &[1.0], LimitDirection::Alpha, &o),
            Err(LimitSetError::AlphaUnbounded { .. })
        ));
    }

    #[test]
    fn embedded_cycle_classified() {
        let s = cycle3();
        let est = estimate_limit_set(&s, &[0.1, 0.0, 0.5], LimitDirection::Omega, &EstimateOptions::new(40.0, 7.0)).unwrap();
        let class = classify_limit_set(&s, &est, &ClassifyOptions::default()).unwrap();
        match class.verdict {
            LimitSetVerdict::PeriodicOrbit { period, .. } => assert!((period - 2.0 * PI).abs() < 1e-3, "{period}"),
            other => panic!("{other:?} {:?}", class.evidence),
        }
    }

    #[test]
    fn non_ordering_examples() {
        let c = Cone::positive_orthant(2).unwrap();
        let r = non_ordering_check(&[vec![1.0, 0.0], vec![0.0, 1.0]], &c, 0.0);
        assert!(r.ok && r.strict_ok);
        let r = non_ordering_check(&[vec![0.0, 0.0], vec![1.0, 1.0]], &c, 0.0);
        assert!(!r.ok);
        let w = r.worst_pair.unwrap();
        assert_eq!((w.i, w.j, w.relation), (0, 1, OrderRelation::StrictInterior));
        let r = non_ordering_check(&[vec![0.0, 0.0], vec![1.0, 0.0]], &c, 0.0);
        assert!(r.ok && !r.strict_ok);
    }

    #[test]
    fn projection_examples() {
        let c = Cone::positive_orthant(3).unwrap();
        let v = [1.0 / 3f64.sqrt(); 3];
        let r = project_and_check(&[vec![1.0, 1.0, 1.0], vec![2.0, 0.0, 1.0]], &c, None).unwrap();
        assert!(r.v.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(norm(&r.projected[0]) < 1e-15);
        assert!(theta(&[1.0, 1.0, 1.0], &v).iter().all(|x| x.abs() < 1e-15));

        // Points in v-perp keep their distances.
        let pts = vec![vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0], vec![2.0, -1.0, -1.0]];
        let r = project_and_check(&pts, &c, Some(&v)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((dist(&r.projected[i], &r.projected[j]) - dist(&pts[i], &pts[j])).abs() < 1e-12);
            }
        }
        assert!((r.injectivity_margin.unwrap() - 1.0).abs() < 1e-12);

        let x = [0.3, -2.0, 5.0];
        let once = theta(&x, &v);
        let twice = theta(&once, &v);
        assert!(once.iter().zip(&twice).all(|(a, b)| (a - b).abs() < 1e-12));

        assert!(matches!(
            project_and_check(&pts, &c, Some(&[1.0, -1.0, 1.0])),
            Err(LimitSetError::VNotInterior)
        ));
    }

    #[test]
    fn basis_is_orthonormal() {
        let v = [0.6, 0.0, 0.8];
        let b = complement_basis(&v);
        assert_eq!(b.len(), 2);
        for x in &b {
            assert!(dot(x, &v).abs() < 1e-14 && (norm(x) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&b[0], &b[1]).abs() < 1e-14);
    }

    #[test]
    fn equilibrium_spectra() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.5, -3.0]);
        let s = SystemDef::linear(a.clone(), Cone::positive_orthant(2).unwrap()).unwrap();
        let rep = spectrum_at_equilibrium(&s, &[0.0, 0.0]).unwrap();
        let direct = linalg::eigenvalues(&a).unwrap();
        for (x, y) in rep.values.iter().zip(&direct) {
            assert!((x - y).norm() < 1e-10);
        }
        assert!(rep.hyperbolic);

        let lv = sys(r#"{"family":"lotka_volterra","r":[1,1],"A":[[-1,0],[0,-1]]}"#);
        let rep = spectrum_at_equilibrium(&lv, &[1.0, 1.0]).unwrap();
        assert!(rep.values.iter().all(|z| (z.re + 1.0).abs() < 1e-12 && z.im.abs() < 1e-12));

        let center = sys(r#"{"field":["-x2","x1"]}"#);
        let rep = spectrum_at_equilibrium(&center, &[0.0, 0.0]).unwrap();
        assert!(!rep.hyperbolic && rep.margin < 1e-12);
        assert!(matches!(
            spectrum_at_equilibrium(&center, &[1.0, 0.0]),
            Err(LimitSetError::NotEquilibrium { .. })
        ));
    }

    #[test]
    fn floquet_planar_cycle() {
        let rep = floquet_multipliers(&cycle2(), &[1.0, 0.0], 2.0 * PI).unwrap();
        let mut mods: Vec<f64> = rep.values.iter().map(|z| z.norm()).collect();
        mods.sort_by(f64::total_cmp);
        let small = (-4.0 * PI).exp();
        assert!(((mods[0] - small) / small).abs() < 1e-4, "{mods:?}");
        assert!((mods[1] - 1.0).abs() < 1e-4);
        assert!(rep.hyperbolic);
        assert!(rep.liouville_rel_error.unwrap() < 1e-4);
    }

    #[test]
    fn floquet_center_not_hyperbolic() {
        let center = sys(r#"{"field":["-x2","x1"]}"#);
        let rep = floquet_multipliers(&center, &[2.0, 0.0], 2.0 * PI).unwrap();
        assert!(rep.values.iter().all(|z| (z - 1.0).norm() < 1e-6));
        assert!(!rep.hyperbolic);
        assert!(matches!(
            floquet_multipliers(&center, &[2.0, 0.0], 3.0),
            Err(LimitSetError::NotPeriodic { .. })
        ));
    }

    #[test]
    fn medoids_are_deterministic_points() {
        let pts: Vec<Vec<f64>> = (0..100).map(|k| vec![(k as f64 * 0.1).cos(), (k as f64 * 0.1).sin()]).collect();
        let a = medoids(&pts, 8);
        assert_eq!(a, medoids(&pts, 8));
        assert_eq!(a.len(), 8);
    }
}
