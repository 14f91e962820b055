//! Sampled trajectories of the flow generated by a [`SystemDef`].
//!
//! Two methods: classical fixed-step RK4 and adaptive Dormand–Prince 5(4).
//! Backward time integrates the negated field, so sample `k` of a backward
//! trajectory holds `φ_{-times[k]}(x0)`.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, SystemDef};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("state norm exceeded cap at t = {t_reached}")]
    BlowUp { t_reached: f64 },
    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepFailure { t: f64, step: f64 },
    #[error(transparent)]
    Domain(#[from] FieldError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Dp54,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub method: Method,
    /// Fixed step for RK4; ignored by DP54.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on DP54 steps, which also bounds sample spacing.
    pub max_step: Option<f64>,
    pub norm_cap: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            method: Method::Dp54,
            step: 1e-3,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: None,
            norm_cap: 1e9,
            max_steps: 5_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn rk4(step: f64) -> Self {
        IntegrateOptions {
            method: Method::Rk4,
            step,
            ..Default::default()
        }
    }

    pub fn dp54(rel_tol: f64, abs_tol: f64) -> Self {
        IntegrateOptions {
            method: Method::Dp54,
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    pub fn with_norm_cap(mut self, cap: f64) -> Self {
        self.norm_cap = cap;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub method: Method,
    pub step: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
}

impl TrajectoryMeta {
    fn from_options(opts: &IntegrateOptions) -> Self {
        match opts.method {
            Method::Rk4 => TrajectoryMeta {
                method: Method::Rk4,
                step: Some(opts.step),
                rel_tol: None,
                abs_tol: None,
            },
            Method::Dp54 => TrajectoryMeta {
                method: Method::Dp54,
                step: opts.max_step,
                rel_tol: Some(opts.rel_tol),
                abs_tol: Some(opts.abs_tol),
            },
        }
    }
}

/// Time-ordered samples of one orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    direction: Direction,
    meta: Option<TrajectoryMeta>,
}

impl Trajectory {
    /// Builds a trajectory from raw samples, checking its invariants.
    pub fn new(
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        direction: Direction,
        meta: Option<TrajectoryMeta>,
    ) -> Result<Trajectory, IntegrateError> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(IntegrateError::InvalidArgument(format!(
                "need at least two samples with matching lengths, got {} times and {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(IntegrateError::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        let n = states[0].len();
        if states.iter().any(|s| s.len() != n || s.iter().any(|v| !v.is_finite())) {
            return Err(IntegrateError::InvalidArgument(
                "states must be finite and share one dimension".into(),
            ));
        }
        Ok(Trajectory {
            times,
            states,
            direction,
            meta,
        })
    }

    /// Joins a backward and a forward trajectory from the same seed into one
    /// forward-labelled orbit over signed times `[-T_b, T_f]`.
    pub fn stitch(backward: &Trajectory, forward: &Trajectory) -> Result<Trajectory, IntegrateError> {
        if backward.direction != Direction::Backward || forward.direction != Direction::Forward {
            return Err(IntegrateError::InvalidArgument(
                "stitch expects (backward, forward)".into(),
            ));
        }
        let mut times: Vec<f64> = backward.times.iter().rev().map(|t| -t).collect();
        let mut states: Vec<Vec<f64>> = backward.states.iter().rev().cloned().collect();
        // Both start at t = 0 from the same seed; keep one copy.
        times.pop();
        states.pop();
        times.extend_from_slice(&forward.times);
        states.extend(forward.states.iter().cloned());
        Trajectory::new(times, states, Direction::Forward, forward.meta.clone())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn meta(&self) -> Option<&TrajectoryMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.states[0].len()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has samples")
    }

    /// Sample order reversed, with times negated so they stay increasing.
    pub fn reversed(&self) -> Trajectory {
        Trajectory {
            times: self.times.iter().rev().map(|t| -t).collect(),
            states: self.states.iter().rev().cloned().collect(),
            direction: self.direction,
            meta: self.meta.clone(),
        }
    }

    /// CSV with header `t,x1,...,xN` and 17 significant digits per number.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.dimension() {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{}", fmt17(*t));
            for v in x {
                let _ = write!(out, ",{}", fmt17(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Integrates `sys` from `x0` over `[0, t_end]` in the given direction.
pub fn integrate(
    sys: &SystemDef,
    x0: &[f64],
    t_end: f64,
    direction: Direction,
    opts: &IntegrateOptions,
) -> Result<Trajectory, IntegrateError> {
    if x0.len() != sys.dimension() {
        return Err(FieldError::DimensionMismatch {
            expected: sys.dimension(),
            found: x0.len(),
        }
        .into());
    }
    let sign = direction.sign();
    let rhs = |x: &[f64], out: &mut [f64]| -> Result<(), FieldError> {
        sys.eval_into(x, out)?;
        if sign < 0.0 {
            out.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(())
    };
    let (times, states) = solve(rhs, x0, t_end, opts)?;
    Trajectory::new(times, states, direction, Some(TrajectoryMeta::from_options(opts)))
}

/// Final state of the flow after `t` (negative `t` runs backward).
pub fn flow_to(sys: &SystemDef, x0: &[f64], t: f64, opts: &IntegrateOptions) -> Result<Vec<f64>, IntegrateError> {
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    let dir = if t > 0.0 { Direction::Forward } else { Direction::Backward };
    let traj = integrate(sys, x0, t.abs(), dir, opts)?;
    Ok(traj.last_state().to_vec())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Generic solver for `x' = rhs(x)` on `[0, t_end]`, returning all samples.
pub fn solve<F>(
    mut rhs: F,
    x0: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), IntegrateError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), FieldError>,
{
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(IntegrateError::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::InvalidArgument("initial state is not finite".into()));
    }
    match opts.method {
        Method::Rk4 => rk4(&mut rhs, x0, t_end, opts),
        Method::Dp54 => dp54(&mut rhs, x0, t_end, opts),
    }
}

fn rk4<F>(
    rhs: &mut F,
    x0: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), IntegrateError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), FieldError>,
{
    if !(opts.step > 0.0) {
        return Err(IntegrateError::InvalidArgument("RK4 step must be positive".into()));
    }
    let n = x0.len();
    let steps = (t_end / opts.step).ceil().max(1.0) as usize;
    if steps > opts.max_steps {
        return Err(IntegrateError::StepFailure { t: 0.0, step: opts.step });
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    times.push(0.0);
    states.push(x.clone());
    for s in 0..steps {
        let t = s as f64 * opts.step;
        let t_next = if s + 1 == steps { t_end } else { (s + 1) as f64 * opts.step };
        let h = t_next - t;
        rhs(&x, &mut k1)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let nx = norm(&x);
        if !(nx <= opts.norm_cap) {
            return Err(IntegrateError::BlowUp { t_reached: t_next });
        }
        times.push(t_next);
        states.push(x.clone());
    }
    Ok((times, states))
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dp54<F>(
    rhs: &mut F,
    x0: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), IntegrateError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), FieldError>,
{
    let n = x0.len();
    let (rtol, atol) = (opts.rel_tol, opts.abs_tol);
    if !(rtol > 0.0 && atol >= 0.0) {
        return Err(IntegrateError::InvalidArgument("tolerances must be positive".into()));
    }
    let h_max = opts.max_step.unwrap_or(t_end).min(t_end);
    let scale = |a: f64, b: f64| atol + rtol * a.abs().max(b.abs());

    let mut x = x0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    rhs(&x, &mut k[0])?;

    // Initial step (Hairer, Nørsett & Wanner II.4).
    let mut h = {
        let d0 = rms(x.iter().map(|&v| v / scale(v, v)));
        let d1 = rms(x.iter().zip(&k[0]).map(|(&v, &f)| f / scale(v, v)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let probe: Vec<f64> = x.iter().zip(&k[0]).map(|(v, f)| v + h0 * f).collect();
        let mut f1 = vec![0.0; n];
        let h1 = match rhs(&probe, &mut f1) {
            Ok(()) => {
                let d2 = rms(f1.iter().zip(&k[0]).zip(&x).map(|((a, b), &v)| (a - b) / scale(v, v))) / h0;
                if d1.max(d2) <= 1e-15 {
                    (h0 * 1e-3).max(1e-6)
                } else {
                    (0.01 / d1.max(d2)).powf(0.2)
                }
            }
            Err(_) => h0,
        };
        (100.0 * h0).min(h1).min(h_max)
    };

    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut t = 0.0;
    let mut tmp = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut steps = 0usize;
    let mut last_rejected = false;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(IntegrateError::StepFailure { t, step: h });
        }
        let mut final_step = false;
        if t + h >= t_end || t + 1.01 * h >= t_end {
            h = t_end - t;
            final_step = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(IntegrateError::StepFailure { t, step: h });
        }

        let stages = (|| -> Result<(), FieldError> {
            let (k0, rest) = k.split_at_mut(1);
            let k0 = &k0[0];
            for i in 0..n {
                tmp[i] = x[i] + h * A21 * k0[i];
            }
            rhs(&tmp, &mut rest[0])?;
            for i in 0..n {
                tmp[i] = x[i] + h * (A31 * k0[i] + A32 * rest[0][i]);
            }
            rhs(&tmp, &mut rest[1])?;
            for i in 0..n {
                tmp[i] = x[i] + h * (A41 * k0[i] + A42 * rest[0][i] + A43 * rest[1][i]);
            }
            rhs(&tmp, &mut rest[2])?;
            for i in 0..n {
                tmp[i] = x[i] + h * (A51 * k0[i] + A52 * rest[0][i] + A53 * rest[1][i] + A54 * rest[2][i]);
            }
            rhs(&tmp, &mut rest[3])?;
            for i in 0..n {
                tmp[i] = x[i]
                    + h * (A61 * k0[i] + A62 * rest[0][i] + A63 * rest[1][i] + A64 * rest[2][i] + A65 * rest[3][i]);
            }
            rhs(&tmp, &mut rest[4])?;
            for i in 0..n {
                x_new[i] = x[i]
                    + h * (B1 * k0[i] + B3 * rest[1][i] + B4 * rest[2][i] + B5 * rest[3][i] + B6 * rest[4][i]);
            }
            rhs(&x_new, &mut rest[5])?;
            Ok(())
        })();
        steps += 1;

        let err = match stages {
            Ok(()) => rms((0..n).map(|i| {
                let e = h
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                e / scale(x[i], x_new[i])
            })),
            // A stage left the field's domain: retry with a smaller step.
            Err(e) => {
                if h < 1e-12 * t_end {
                    return Err(e.into());
                }
                f64::INFINITY
            }
        };

        if err.is_finite() && err <= 1.0 {
            t = if final_step { t_end } else { t + h };
            std::mem::swap(&mut x, &mut x_new);
            k.swap(0, 6);
            if !(norm(&x) <= opts.norm_cap) {
                return Err(IntegrateError::BlowUp { t_reached: t });
            }
            times.push(t);
            states.push(x.clone());
            let mut factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h = (h * factor).min(h_max);
        } else {
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= factor;
            last_rejected = true;
        }
    }
    Ok((times, states))
}

fn rms<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (sum, count) = it.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(json: &str) -> SystemDef {
        SystemDef::from_json(json).unwrap()
    }

    #[test]
    fn rk4_exponential_decay() {
        let s = sys(r#"{"field":["-x1"]}"#);
        let traj = integrate(&s, &[1.0], 1.0, Direction::Forward, &IntegrateOptions::rk4(1e-3)).unwrap();
        assert!((traj.last_state()[0] - (-1.0f64).exp()).abs() < 1e-8);
        assert_eq!(*traj.times().last().unwrap(), 1.0);
        assert_eq!(traj.len(), 1001);
    }

    #[test]
    fn dp54_harmonic_period() {
        let s = sys(r#"{"field":["x2","-x1"]}"#);
        let t = 2.0 * std::f64::consts::PI;
        let traj = integrate(&s, &[1.0, 0.0], t, Direction::Forward, &IntegrateOptions::dp54(1e-9, 1e-12)).unwrap();
        let end = traj.last_state();
        assert!((end[0] - 1.0).abs() < 1e-6 && end[1].abs() < 1e-6, "{end:?}");
    }

    #[test]
    fn blow_up_detected() {
        let s = sys(r#"{"field":["x1^2"]}"#);
        let opts = IntegrateOptions::default().with_norm_cap(1e6);
        match integrate(&s, &[1.0], 2.0, Direction::Forward, &opts) {
            Err(IntegrateError::BlowUp { t_reached }) => assert!((t_reached - 1.0).abs() < 1e-3, "{t_reached}"),
            other => panic!("expected blow-up, got {other:?}"),
        }
        let rk = IntegrateOptions::rk4(1e-3).with_norm_cap(1e6);
        assert!(matches!(
            integrate(&s, &[1.0], 2.0, Direction::Forward, &rk),
            Err(IntegrateError::BlowUp { .. })
        ));
    }

    #[test]
    fn backward_negates_field() {
        let s = sys(r#"{"field":["-x1"]}"#);
        let traj = integrate(&s, &[1.0], 1.0, Direction::Backward, &IntegrateOptions::default()).unwrap();
        assert!((traj.last_state()[0] - 1.0f64.exp()).abs() < 1e-8);
        assert_eq!(traj.direction(), Direction::Backward);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let s = sys(r#"{"field":["-x1"]}"#);
        let exact = (-1.0f64).exp();
        let err = |h: f64| {
            let tr = integrate(&s, &[1.0], 1.0, Direction::Forward, &IntegrateOptions::rk4(h)).unwrap();
            (tr.last_state()[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn max_step_bounds_spacing() {
        let s = sys(r#"{"field":["-x1"]}"#);
        let opts = IntegrateOptions::default().with_max_step(0.01);
        let tr = integrate(&s, &[1.0], 1.0, Direction::Forward, &opts).unwrap();
        assert!(tr.times().windows(2).all(|w| w[1] - w[0] <= 0.01 + 1e-15));
    }

    #[test]
    fn invalid_inputs() {
        let s = sys(r#"{"field":["-x1"]}"#);
        assert!(matches!(
            integrate(&s, &[1.0], 0.0, Direction::Forward, &IntegrateOptions::default()),
            Err(IntegrateError::InvalidArgument(_))
        ));
        assert!(matches!(
            integrate(&s, &[1.0, 2.0], 1.0, Direction::Forward, &IntegrateOptions::default()),
            Err(IntegrateError::Domain(FieldError::DimensionMismatch { .. }))
        ));
        let log = sys(r#"{"field":["log(x1)"]}"#);
        assert!(matches!(
            integrate(&log, &[-1.0], 1.0, Direction::Forward, &IntegrateOptions::rk4(0.1)),
            Err(IntegrateError::Domain(FieldError::Domain { .. }))
        ));
    }

    #[test]
    fn trajectory_invariants_enforced() {
        assert!(Trajectory::new(vec![0.0], vec![vec![1.0]], Direction::Forward, None).is_err());
        assert!(Trajectory::new(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]], Direction::Forward, None).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![vec![1.0], vec![f64::NAN]], Direction::Forward, None).is_err());
    }

    #[test]
    fn stitch_and_csv() {
        let s = sys(r#"{"field":["-x1"]}"#);
        let opts = IntegrateOptions::rk4(0.5);
        let f = integrate(&s, &[1.0], 1.0, Direction::Forward, &opts).unwrap();
        let b = integrate(&s, &[1.0], 1.0, Direction::Backward, &opts).unwrap();
        let full = Trajectory::stitch(&b, &f).unwrap();
        assert_eq!(full.times(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(full.states()[2], vec![1.0]);
        let csv = f.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,1.0000000000000000e0"));
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
        let reparsed: f64 = csv.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(reparsed, f.states()[1][0]);
    }
}
