//! Certification of (eventual) cooperativity and competitivity.
//!
//! Linear systems get an exact-arithmetic-free but deterministic test: the
//! Metzler sign pattern, or the Perron–Frobenius property followed by an
//! entrywise-positivity scan of `e^{tA}`. Nonlinear systems are sampled:
//! ordered pairs are pushed through the flow and the last time their order
//! fails is recorded. Sampled certificates are evidence, not proof.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{Cone, OrderRelation};
use crate::field::{FieldError, SystemDef};
use crate::integrate::{self, Direction, IntegrateError, IntegrateOptions};
use crate::linalg;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonotonicityError {
    #[error("unsupported cone: {0}")]
    UnsupportedCone(String),
    #[error("eigenvalue computation did not converge")]
    EigenFailure,
    #[error("sampling failure: {dropped} of {attempted} pairs left the norm cap or failed to integrate")]
    SamplingFailure { dropped: usize, attempted: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    CooperativeImmediate,
    CompetitiveImmediate,
    EventuallyCooperative,
    EventuallyCompetitive,
    NotDetected,
}

impl CertificateKind {
    pub fn is_cooperative(self) -> bool {
        matches!(self, CertificateKind::CooperativeImmediate | CertificateKind::EventuallyCooperative)
    }

    pub fn is_competitive(self) -> bool {
        matches!(self, CertificateKind::CompetitiveImmediate | CertificateKind::EventuallyCompetitive)
    }

    /// Time direction in which order is preserved, if any.
    pub fn direction(self) -> Option<Direction> {
        if self.is_cooperative() {
            Some(Direction::Forward)
        } else if self.is_competitive() {
            Some(Direction::Backward)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCertificate {
    pub kind: CertificateKind,
    pub tstar_estimate: Option<f64>,
    pub strong: bool,
    pub tau_star_estimate: Option<f64>,
    pub evidence: String,
    /// Ordered pairs sampled (0 for exact linear tests).
    pub pairs: usize,
    /// Pairs whose order still failed late in the horizon, in the certified direction.
    pub violations: usize,
}

/// Published JSON shape of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    pub tstar: Option<f64>,
    pub strong: bool,
    pub tau_star: Option<f64>,
    pub pairs: usize,
    pub violations: usize,
}

impl MonotonicityCertificate {
    pub fn immediate(kind: CertificateKind, evidence: impl Into<String>) -> Self {
        MonotonicityCertificate {
            kind,
            tstar_estimate: Some(0.0),
            strong: false,
            tau_star_estimate: None,
            evidence: evidence.into(),
            pairs: 0,
            violations: 0,
        }
    }

    pub fn report(&self) -> CertificateReport {
        CertificateReport {
            kind: self.kind,
            tstar: self.tstar_estimate,
            strong: self.strong,
            tau_star: self.tau_star_estimate,
            pairs: self.pairs,
            violations: self.violations,
        }
    }
}

/// `D A D` with `D = diag(signs)`: the matrix seen in coordinates where the
/// orthant becomes the positive orthant.
pub fn sign_conjugate(a: &DMatrix<f64>, signs: &[i8]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        if signs[i] == signs[j] {
            a[(i, j)]
        } else {
            -a[(i, j)]
        }
    })
}

/// Whether `a` has a simple, strictly dominant real eigenvalue whose right
/// and left eigenvectors can both be normalized to be entrywise positive.
pub fn has_perron_frobenius_property(a: &DMatrix<f64>) -> Result<bool, MonotonicityError> {
    let n = a.nrows();
    let ev = linalg::eigenvalues(a).ok_or(MonotonicityError::EigenFailure)?;
    let scale = a.amax().max(1.0);
    let lead = ev[0];
    if lead.im.abs() > 1e-10 * scale {
        return Ok(false);
    }
    if ev[1..].iter().any(|z| z.re >= lead.re - 1e-9 * scale) {
        return Ok(false);
    }
    let shifted = a - DMatrix::identity(n, n) * lead.re;
    let positive = |m: &DMatrix<f64>| -> Result<bool, MonotonicityError> {
        let v = linalg::null_vector(m).ok_or(MonotonicityError::EigenFailure)?;
        let s = if v.sum() < 0.0 { -1.0 } else { 1.0 };
        let floor = 1e-10 * v.amax();
        Ok(v.iter().all(|&x| s * x > floor))
    };
    Ok(positive(&shifted)? && positive(&shifted.transpose())?)
}

/// First grid time `t_k = k * horizon / grid` after which `e^{t A}` stays
/// entrywise positive through the horizon, or `None`.
pub fn positivity_threshold(a: &DMatrix<f64>, horizon: f64, grid: usize) -> Option<f64> {
    let h = horizon / grid as f64;
    let mut first_clear = None;
    for k in (1..=grid).rev() {
        let e = (a * (k as f64 * h)).exp();
        if e.iter().all(|&v| v > 0.0) {
            first_clear = Some(k);
        } else {
            break;
        }
    }
    first_clear.map(|k| k as f64 * h)
}

/// Exact-pattern and spectral certification of `x' = A x` under an orthant.
pub fn certify_linear(
    a: &DMatrix<f64>,
    cone: &Cone,
    horizon: f64,
    grid: usize,
) -> Result<MonotonicityCertificate, MonotonicityError> {
    let signs = cone.orthant_signs().ok_or_else(|| {
        MonotonicityError::UnsupportedCone("linear certification needs an orthant cone".into())
    })?;
    if !a.is_square() || a.nrows() != cone.dimension() {
        return Err(MonotonicityError::InvalidArgument(format!(
            "matrix is {}x{}, cone dimension {}",
            a.nrows(),
            a.ncols(),
            cone.dimension()
        )));
    }
    if !(horizon > 0.0) || grid == 0 {
        return Err(MonotonicityError::InvalidArgument("horizon and grid must be positive".into()));
    }
    let b = sign_conjugate(a, signs);
    let neg = -&b;
    if linalg::is_metzler(&b) {
        return Ok(MonotonicityCertificate::immediate(
            CertificateKind::CooperativeImmediate,
            "off-diagonal entries nonnegative (Metzler)",
        ));
    }
    if linalg::is_metzler(&neg) {
        return Ok(MonotonicityCertificate::immediate(
            CertificateKind::CompetitiveImmediate,
            "off-diagonal entries nonpositive (negated matrix is Metzler)",
        ));
    }
    for (m, kind, label) in [
        (&b, CertificateKind::EventuallyCooperative, "e^{tA}"),
        (&neg, CertificateKind::EventuallyCompetitive, "e^{-tA}"),
    ] {
        if has_perron_frobenius_property(m)? {
            if let Some(t) = positivity_threshold(m, horizon, grid) {
                return Ok(MonotonicityCertificate {
                    kind,
                    tstar_estimate: Some(t),
                    strong: true,
                    tau_star_estimate: Some(t),
                    evidence: format!(
                        "Perron-Frobenius property holds; {label} entrywise positive on grid for t in [{t}, {horizon}] ({grid} points)"
                    ),
                    pairs: 0,
                    violations: 0,
                });
            }
        }
    }
    Ok(MonotonicityCertificate {
        kind: CertificateKind::NotDetected,
        tstar_estimate: None,
        strong: false,
        tau_star_estimate: None,
        evidence: "neither sign pattern nor eventual positivity of the flow matrix detected".into(),
        pairs: 0,
        violations: 0,
    })
}

/// Axis-aligned box initial points are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SamplingBox {
    pub fn uniform(dimension: usize, lo: f64, hi: f64) -> Self {
        SamplingBox {
            lo: vec![lo; dimension],
            hi: vec![hi; dimension],
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| if h > l { rng.gen_range(l..h) } else { l })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub pairs: usize,
    pub horizon: f64,
    pub seed: u64,
    pub sample_box: SamplingBox,
    /// Order tolerance applied to sampled states.
    pub tol: f64,
    /// Number of grid cells over the horizon; `t*` resolution is `horizon / grid`.
    pub grid: usize,
    /// RK4 steps per grid cell.
    pub substeps: usize,
    pub norm_cap: f64,
}

impl SamplingOptions {
    pub fn new(dimension: usize, pairs: usize, horizon: f64, seed: u64) -> Self {
        SamplingOptions {
            pairs,
            horizon,
            seed,
            sample_box: SamplingBox::uniform(dimension, -1.0, 1.0),
            tol: 1e-6,
            grid: 1024,
            substeps: 4,
            norm_cap: 1e9,
        }
    }

    pub fn with_box(mut self, sample_box: SamplingBox) -> Self {
        self.sample_box = sample_box;
        self
    }

    fn validate(&self, dimension: usize) -> Result<(), MonotonicityError> {
        if self.pairs == 0 || !(self.horizon > 0.0) || self.grid == 0 || self.substeps == 0 {
            return Err(MonotonicityError::InvalidArgument(
                "pairs, horizon, grid and substeps must be positive".into(),
            ));
        }
        if self.sample_box.lo.len() != dimension || self.sample_box.hi.len() != dimension {
            return Err(MonotonicityError::InvalidArgument(format!(
                "sampling box must have dimension {dimension}"
            )));
        }
        Ok(())
    }

    fn cell(&self) -> f64 {
        self.horizon / self.grid as f64
    }
}

/// Draws an ordered pair `x <= y`: `y - x` is a random nonnegative
/// combination of the cone's extreme rays with log-uniform norm in `[1e-3, 1]`.
pub fn sample_ordered_pair<R: Rng>(cone: &Cone, rays: &[Vec<f64>], sample_box: &SamplingBox, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let x = sample_box.sample(rng);
    let n = x.len();
    let mut d = vec![0.0; n];
    loop {
        for r in rays {
            let w: f64 = rng.gen();
            for (di, ri) in d.iter_mut().zip(r) {
                *di += w * ri;
            }
        }
        let norm = crate::cone::norm(&d);
        if norm > 1e-12 {
            let target = 10f64.powf(rng.gen_range(-3.0..=0.0));
            d.iter_mut().for_each(|v| *v *= target / norm);
            break;
        }
        d.iter_mut().for_each(|v| *v = 0.0);
    }
    debug_assert!(cone.slacks(&d).iter().all(|&s| s >= -1e-12));
    let y = x.iter().zip(&d).map(|(a, b)| a + b).collect();
    (x, y)
}

/// Grid samples of the joint flow of `(x, y)`, for `k = 0..=grid`.
fn pair_flow(
    sys: &SystemDef,
    x: &[f64],
    y: &[f64],
    direction: Direction,
    opts: &SamplingOptions,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, IntegrateError> {
    let n = x.len();
    let steps = opts.grid * opts.substeps;
    // Slightly enlarged so the step count is exactly `steps`.
    let h = opts.horizon / steps as f64 * (1.0 + 1e-12);
    let sign = direction.sign();
    let rhs = |z: &[f64], out: &mut [f64]| -> Result<(), FieldError> {
        let (o1, o2) = out.split_at_mut(n);
        sys.eval_into(&z[..n], o1)?;
        sys.eval_into(&z[n..], o2)?;
        if sign < 0.0 {
            out.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(())
    };
    let mut z0 = x.to_vec();
    z0.extend_from_slice(y);
    let iopts = IntegrateOptions::rk4(h).with_norm_cap(opts.norm_cap * std::f64::consts::SQRT_2);
    let (_, states) = integrate::solve(rhs, &z0, opts.horizon, &iopts)?;
    Ok(states
        .iter()
        .step_by(opts.substeps)
        .take(opts.grid + 1)
        .map(|z| (z[..n].to_vec(), z[n..].to_vec()))
        .collect())
}

#[derive(Debug, Clone, Copy, Default)]
struct PairOutcome {
    last_fail: Option<usize>,
    last_not_interior: Option<usize>,
    failing_samples: usize,
}

fn trial(cone: &Cone, samples: &[(Vec<f64>, Vec<f64>)], tol: f64, strict_pair: bool) -> PairOutcome {
    let mut out = PairOutcome::default();
    for (k, (x, y)) in samples.iter().enumerate() {
        let rel = cone.relation_unchecked(x, y, tol);
        if !rel.is_le() {
            out.last_fail = Some(k);
            out.failing_samples += 1;
        }
        if strict_pair && rel != OrderRelation::StrictInterior {
            out.last_not_interior = Some(k);
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
struct DirectionStats {
    completed: usize,
    dropped: usize,
    persistent: usize,
    failing_samples: usize,
    tstar: f64,
    tau_star: f64,
    strong: bool,
}

fn direction_stats(
    sys: &SystemDef,
    pairs: &[(Vec<f64>, Vec<f64>)],
    direction: Direction,
    opts: &SamplingOptions,
) -> Result<DirectionStats, MonotonicityError> {
    let cone = sys.cone();
    let outcomes: Vec<Result<PairOutcome, IntegrateError>> = pairs
        .par_iter()
        .map(|(x, y)| {
            let strict_pair = cone.relation_unchecked(x, y, 0.0).is_strict();
            pair_flow(sys, x, y, direction, opts).map(|s| trial(cone, &s, opts.tol, strict_pair))
        })
        .collect();
    let cell = opts.cell();
    let half = opts.grid / 2;
    let mut stats = DirectionStats {
        strong: true,
        ..Default::default()
    };
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                stats.completed += 1;
                stats.failing_samples += o.failing_samples;
                if let Some(k) = o.last_fail {
                    stats.tstar = stats.tstar.max((k + 1).min(opts.grid) as f64 * cell);
                    if k >= half {
                        stats.persistent += 1;
                    }
                }
                if let Some(k) = o.last_not_interior {
                    stats.tau_star = stats.tau_star.max((k + 1).min(opts.grid) as f64 * cell);
                    if k >= half {
                        stats.strong = false;
                    }
                }
            }
            Err(IntegrateError::BlowUp { .. }) | Err(IntegrateError::StepFailure { .. }) => stats.dropped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(stats)
}

impl DirectionStats {
    fn usable(&self) -> bool {
        self.completed > 0 && self.dropped * 2 <= self.completed + self.dropped
    }

    fn certified(&self) -> bool {
        self.usable() && self.persistent == 0
    }
}

/// Sampled estimate of the transient `t*` after which order is preserved.
pub fn estimate_tstar_empirical(
    sys: &SystemDef,
    opts: &SamplingOptions,
) -> Result<MonotonicityCertificate, MonotonicityError> {
    opts.validate(sys.dimension())?;
    let cone = sys.cone();
    let rays = cone.extreme_rays();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..opts.pairs)
        .map(|i| {
            let mut rng = seed::rng(opts.seed, "monotonicity.pairs", i as u64);
            sample_ordered_pair(cone, &rays, &opts.sample_box, &mut rng)
        })
        .collect();

    let fwd = direction_stats(sys, &pairs, Direction::Forward, opts)?;
    let bwd = direction_stats(sys, &pairs, Direction::Backward, opts)?;
    if !fwd.usable() && !bwd.usable() {
        return Err(MonotonicityError::SamplingFailure {
            dropped: fwd.dropped.max(bwd.dropped),
            attempted: opts.pairs,
        });
    }

    let chosen = match (fwd.certified(), bwd.certified()) {
        (true, true) => {
            let key = |s: &DirectionStats| (s.failing_samples, s.tstar);
            if key(&bwd) < key(&fwd) {
                Some(Direction::Backward)
            } else {
                Some(Direction::Forward)
            }
        }
        (true, false) => Some(Direction::Forward),
        (false, true) => Some(Direction::Backward),
        (false, false) => None,
    };
    let describe = |s: &DirectionStats| {
        format!(
            "{} pairs integrated, {} dropped, {} persistent violators, {} failing samples",
            s.completed, s.dropped, s.persistent, s.failing_samples
        )
    };
    let evidence = format!(
        "sampled {} ordered pairs over horizon {} (grid {}, tol {:e}); forward: {}; backward: {}",
        opts.pairs,
        opts.horizon,
        opts.grid,
        opts.tol,
        describe(&fwd),
        describe(&bwd)
    );
    Ok(match chosen {
        Some(dir) => {
            let s = if dir == Direction::Forward { &fwd } else { &bwd };
            MonotonicityCertificate {
                kind: if dir == Direction::Forward {
                    CertificateKind::EventuallyCooperative
                } else {
                    CertificateKind::EventuallyCompetitive
                },
                tstar_estimate: Some(s.tstar),
                strong: s.strong,
                tau_star_estimate: s.strong.then_some(s.tau_star),
                evidence,
                pairs: opts.pairs,
                violations: s.persistent,
            }
        }
        None => MonotonicityCertificate {
            kind: CertificateKind::NotDetected,
            tstar_estimate: None,
            strong: false,
            tau_star_estimate: None,
            evidence,
            pairs: opts.pairs,
            violations: fwd.persistent.min(bwd.persistent),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderPreservationReport {
    pub trials: usize,
    pub dropped: usize,
    pub violations: usize,
    /// Most negative defining-inequality slack of `φ_t(y) - φ_t(x)` for `t >= t*`.
    pub worst_margin: f64,
}

/// Re-samples fresh ordered pairs and checks the certified property on
/// `[t*, horizon]` in the certified time direction.
pub fn verify_order_preservation(
    sys: &SystemDef,
    cert: &MonotonicityCertificate,
    opts: &SamplingOptions,
) -> Result<OrderPreservationReport, MonotonicityError> {
    opts.validate(sys.dimension())?;
    let direction = cert.kind.direction().ok_or_else(|| {
        MonotonicityError::InvalidArgument("cannot verify a NotDetected certificate".into())
    })?;
    let tstar = cert.tstar_estimate.unwrap_or(0.0);
    let cone = sys.cone();
    let rays = cone.extreme_rays();
    let cell = opts.cell();
    let outcomes: Vec<Result<(bool, f64), IntegrateError>> = (0..opts.pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(opts.seed, "monotonicity.verify", i as u64);
            let (x, y) = sample_ordered_pair(cone, &rays, &opts.sample_box, &mut rng);
            let samples = pair_flow(sys, &x, &y, direction, opts)?;
            let mut violated = false;
            let mut worst = f64::INFINITY;
            for (k, (fx, fy)) in samples.iter().enumerate() {
                if (k as f64) * cell < tstar - 1e-12 * opts.horizon {
                    continue;
                }
                let (lo, _) = cone.slack_range(fx, fy);
                worst = worst.min(lo);
                // slack-based: converged pairs with |d| just above tol are not reversals
                if lo < -opts.tol {
                    violated = true;
                }
            }
            Ok((violated, worst))
        })
        .collect();
    let mut report = OrderPreservationReport {
        trials: opts.pairs,
        dropped: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for o in outcomes {
        match o {
            Ok((violated, worst)) => {
                report.violations += usize::from(violated);
                report.worst_margin = report.worst_margin.min(worst);
            }
            Err(IntegrateError::BlowUp { .. }) | Err(IntegrateError::StepFailure { .. }) => report.dropped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if report.dropped * 2 > opts.pairs {
        return Err(MonotonicityError::SamplingFailure {
            dropped: report.dropped,
            attempted: opts.pairs,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    #[test]
    fn metzler_is_cooperative() {
        let c = Cone::positive_orthant(2).unwrap();
        let cert = certify_linear(&m(2, &[-1.0, 1.0, 1.0, -1.0]), &c, 10.0, 1024).unwrap();
        assert_eq!(cert.kind, CertificateKind::CooperativeImmediate);
        assert_eq!(cert.tstar_estimate, Some(0.0));
    }

    #[test]
    fn negated_metzler_is_competitive() {
        let c = Cone::positive_orthant(2).unwrap();
        let cert = certify_linear(&m(2, &[0.0, -1.0, -1.0, 0.0]), &c, 10.0, 1024).unwrap();
        assert_eq!(cert.kind, CertificateKind::CompetitiveImmediate);
    }

    #[test]
    fn rotation_not_detected() {
        let c = Cone::positive_orthant(2).unwrap();
        let cert = certify_linear(&m(2, &[0.0, -1.0, 1.0, 0.0]), &c, 10.0, 1024).unwrap();
        assert_eq!(cert.kind, CertificateKind::NotDetected);
    }

    #[test]
    fn polyhedral_cone_rejected() {
        let c = Cone::polyhedral(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            certify_linear(&m(2, &[-1.0, 1.0, 1.0, -1.0]), &c, 10.0, 16),
            Err(MonotonicityError::UnsupportedCone(_))
        ));
    }

    #[test]
    fn conjugation_moves_orthant() {
        // Cooperative for the (+,-) orthant: off-diagonal entries become nonneg after conjugation.
        let a = m(2, &[-1.0, -1.0, -1.0, -1.0]);
        let c = Cone::orthant(&[1, -1]).unwrap();
        assert_eq!(certify_linear(&a, &c, 10.0, 64).unwrap().kind, CertificateKind::CooperativeImmediate);
    }

    #[test]
    fn perron_frobenius_property() {
        assert!(has_perron_frobenius_property(&m(2, &[1.0, 1.0, 1.0, 1.0])).unwrap());
        assert!(!has_perron_frobenius_property(&m(2, &[0.0, -1.0, 1.0, 0.0])).unwrap());
        // Dominant eigenvector (1,-1) is not positive.
        assert!(!has_perron_frobenius_property(&m(2, &[0.0, -1.0, -1.0, 0.0])).unwrap());
    }

    #[test]
    fn pair_sampling_respects_order() {
        let c = Cone::orthant(&[1, -1, 1]).unwrap();
        let rays = c.extreme_rays();
        let b = SamplingBox::uniform(3, -1.0, 1.0);
        for i in 0..200 {
            let mut rng = seed::rng(1, "t", i);
            let (x, y) = sample_ordered_pair(&c, &rays, &b, &mut rng);
            let d: f64 = x.iter().zip(&y).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
            assert!((1e-3 - 1e-12..=1.0 + 1e-12).contains(&d));
            assert!(c.relation_unchecked(&x, &y, 0.0).is_strict());
        }
    }

    #[test]
    fn cooperative_linear_sampled() {
        let sys = SystemDef::linear(m(2, &[-1.0, 1.0, 1.0, -1.0]), Cone::positive_orthant(2).unwrap()).unwrap();
        let mut opts = SamplingOptions::new(2, 200, 10.0, 0);
        opts.grid = 256;
        let cert = estimate_tstar_empirical(&sys, &opts).unwrap();
        assert_eq!(cert.kind, CertificateKind::EventuallyCooperative);
        assert!(cert.tstar_estimate.unwrap() <= 10.0 / 256.0);
    }

    #[test]
    fn rotation_sampled_not_detected() {
        let sys = SystemDef::linear(m(2, &[0.0, -1.0, 1.0, 0.0]), Cone::positive_orthant(2).unwrap()).unwrap();
        let mut opts = SamplingOptions::new(2, 200, 10.0, 0);
        opts.grid = 256;
        let cert = estimate_tstar_empirical(&sys, &opts).unwrap();
        assert_eq!(cert.kind, CertificateKind::NotDetected);

        let forged = MonotonicityCertificate::immediate(CertificateKind::CooperativeImmediate, "forged");
        let report = verify_order_preservation(&sys, &forged, &opts).unwrap();
        assert!(report.violations > 0);
        assert!(report.worst_margin < 0.0);
    }

    #[test]
    fn verify_rejects_not_detected() {
        let sys = SystemDef::linear(m(1, &[-1.0]), Cone::positive_orthant(1).unwrap()).unwrap();
        let cert = MonotonicityCertificate {
            kind: CertificateKind::NotDetected,
            tstar_estimate: None,
            strong: false,
            tau_star_estimate: None,
            evidence: String::new(),
            pairs: 0,
            violations: 0,
        };
        let opts = SamplingOptions::new(1, 4, 1.0, 0);
        assert!(matches!(
            verify_order_preservation(&sys, &cert, &opts),
            Err(MonotonicityError::InvalidArgument(_))
        ));
    }

    #[test]
    fn all_pairs_blowing_up_is_sampling_failure() {
        let sys = SystemDef::from_json(r#"{"field":["x1^2 + 1"]}"#).unwrap();
        let mut opts = SamplingOptions::new(1, 8, 10.0, 0).with_box(SamplingBox::uniform(1, 1.0, 2.0));
        opts.grid = 64;
        opts.norm_cap = 1e6;
        assert!(matches!(
            estimate_tstar_empirical(&sys, &opts),
            Err(MonotonicityError::SamplingFailure { .. })
        ));
    }

    #[test]
    fn report_json_shape() {
        let cert = MonotonicityCertificate::immediate(CertificateKind::CooperativeImmediate, "x");
        let v = serde_json::to_value(cert.report()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 6);
        for k in ["kind", "tstar", "strong", "tau_star", "pairs", "violations"] {
            assert!(keys.contains(&k));
        }
        assert_eq!(v["kind"], "CooperativeImmediate");
    }
}
