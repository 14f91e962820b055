//! Solid pointed convex cones and the partial orders they induce.
//!
//! A cone `C` defines `x <= y` iff `y - x ∈ C`, `x < y` iff additionally
//! `x != y`, and `x << y` iff `y - x ∈ Int C`. Cones are stored in
//! half-space form: `C = { d : <h_j, d> >= 0 for all j }`. An orthant is the
//! special case whose normals are the signed coordinate axes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum slack an interior certificate must achieve on the unit sphere.
pub const SOLIDITY_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("cone has no interior point (best minimum slack {best_slack:e})")]
    NonSolidCone { best_slack: f64 },
    #[error("cone is not pointed: normals span only rank {rank} of {dimension}")]
    NotPointed { rank: usize, dimension: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid orthant sign {0}: every sign must be +1 or -1")]
    InvalidSign(f64),
}

/// Wire form of a cone, as it appears in system configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConeSpec {
    Orthant { signs: Vec<f64> },
    Polyhedral { normals: Vec<Vec<f64>> },
}

impl ConeSpec {
    pub fn positive_orthant(dimension: usize) -> Self {
        ConeSpec::Orthant {
            signs: vec![1.0; dimension],
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            ConeSpec::Orthant { signs } => Some(signs.len()),
            ConeSpec::Polyhedral { normals } => normals.first().map(Vec::len),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConeKind {
    Orthant { signs: Vec<i8> },
    /// Unit-length half-space normals.
    Polyhedral { normals: Vec<Vec<f64>> },
}

/// Outcome of comparing two vectors under a cone order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderRelation {
    Equal,
    /// `x << y`.
    StrictInterior,
    /// `x < y` but not `x << y`.
    Strict,
    Incomparable,
}

impl OrderRelation {
    /// True when the relation implies `x <= y`.
    pub fn is_le(self) -> bool {
        !matches!(self, OrderRelation::Incomparable)
    }

    /// True for `<` in the wide sense (`Strict` or `StrictInterior`).
    pub fn is_strict(self) -> bool {
        matches!(self, OrderRelation::Strict | OrderRelation::StrictInterior)
    }
}

/// A validated solid, pointed convex cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    kind: ConeKind,
    dimension: usize,
    interior: Vec<f64>,
}

impl Cone {
    /// Validates a cone description.
    pub fn validate(spec: &ConeSpec) -> Result<Cone, ConeError> {
        match spec {
            ConeSpec::Orthant { signs } => Cone::orthant_from_f64(signs),
            ConeSpec::Polyhedral { normals } => Cone::polyhedral(normals),
        }
    }

    pub fn positive_orthant(dimension: usize) -> Result<Cone, ConeError> {
        Cone::orthant(&vec![1; dimension])
    }

    pub fn orthant(signs: &[i8]) -> Result<Cone, ConeError> {
        let as_f64: Vec<f64> = signs.iter().map(|&s| f64::from(s)).collect();
        Cone::orthant_from_f64(&as_f64)
    }

    fn orthant_from_f64(signs: &[f64]) -> Result<Cone, ConeError> {
        if signs.is_empty() {
            return Err(ConeError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut out = Vec::with_capacity(signs.len());
        for &s in signs {
            if s == 1.0 {
                out.push(1);
            } else if s == -1.0 {
                out.push(-1);
            } else {
                return Err(ConeError::InvalidSign(s));
            }
        }
        let scale = 1.0 / (signs.len() as f64).sqrt();
        let interior = out.iter().map(|&s| f64::from(s) * scale).collect();
        Ok(Cone {
            dimension: out.len(),
            kind: ConeKind::Orthant { signs: out },
            interior,
        })
    }

    pub fn polyhedral(normals: &[Vec<f64>]) -> Result<Cone, ConeError> {
        let dimension = normals.first().map(Vec::len).unwrap_or(0);
        if dimension == 0 {
            return Err(ConeError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if let Some(bad) = normals.iter().find(|h| h.len() != dimension) {
            return Err(ConeError::DimensionMismatch {
                expected: dimension,
                found: bad.len(),
            });
        }
        let rank = matrix_rank(normals, dimension);
        if rank < dimension {
            return Err(ConeError::NotPointed { rank, dimension });
        }
        let unit: Vec<Vec<f64>> = normals
            .iter()
            .map(|h| {
                let n = norm(h);
                if n > 0.0 {
                    h.iter().map(|v| v / n).collect()
                } else {
                    h.clone()
                }
            })
            .collect();
        let (interior, best_slack) = find_interior_point(&unit, dimension);
        if best_slack <= SOLIDITY_THRESHOLD {
            return Err(ConeError::NonSolidCone { best_slack });
        }
        Ok(Cone {
            kind: ConeKind::Polyhedral { normals: unit },
            dimension,
            interior,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    /// A unit vector in the interior of the cone.
    pub fn interior_point(&self) -> &[f64] {
        &self.interior
    }

    pub fn orthant_signs(&self) -> Option<&[i8]> {
        match &self.kind {
            ConeKind::Orthant { signs } => Some(signs),
            ConeKind::Polyhedral { .. } => None,
        }
    }

    /// Wire form of this cone.
    pub fn to_spec(&self) -> ConeSpec {
        match &self.kind {
            ConeKind::Orthant { signs } => ConeSpec::Orthant {
                signs: signs.iter().map(|&s| f64::from(s)).collect(),
            },
            ConeKind::Polyhedral { normals } => ConeSpec::Polyhedral {
                normals: normals.clone(),
            },
        }
    }

    pub fn num_constraints(&self) -> usize {
        match &self.kind {
            ConeKind::Orthant { signs } => signs.len(),
            ConeKind::Polyhedral { normals } => normals.len(),
        }
    }

    /// Values of the defining inequalities on `d`; `d ∈ C` iff all are `>= 0`.
    pub fn slacks(&self, d: &[f64]) -> Vec<f64> {
        match &self.kind {
            ConeKind::Orthant { signs } => signs
                .iter()
                .zip(d)
                .map(|(&s, &v)| f64::from(s) * v)
                .collect(),
            ConeKind::Polyhedral { normals } => normals.iter().map(|h| dot(h, d)).collect(),
        }
    }

    /// Minimum and maximum slack of `y - x`, without allocating.
    pub fn slack_range(&self, x: &[f64], y: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        match &self.kind {
            ConeKind::Orthant { signs } => {
                for ((&s, &a), &b) in signs.iter().zip(x).zip(y) {
                    let v = f64::from(s) * (b - a);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            ConeKind::Polyhedral { normals } => {
                for h in normals {
                    let v: f64 = h
                        .iter()
                        .zip(x.iter().zip(y))
                        .map(|(&hk, (&a, &b))| hk * (b - a))
                        .sum();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    }

    /// Classifies `y - x`. See [`OrderRelation`].
    pub fn order_relation(
        &self,
        x: &[f64],
        y: &[f64],
        tol: f64,
    ) -> Result<OrderRelation, ConeError> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        Ok(self.relation_unchecked(x, y, tol))
    }

    /// Same as [`Cone::order_relation`] without the dimension checks.
    pub fn relation_unchecked(&self, x: &[f64], y: &[f64], tol: f64) -> OrderRelation {
        let dist2: f64 = x.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum();
        if dist2.sqrt() <= tol {
            return OrderRelation::Equal;
        }
        let (lo, hi) = self.slack_range(x, y);
        if lo > tol {
            OrderRelation::StrictInterior
        } else if lo >= -tol && hi > tol {
            OrderRelation::Strict
        } else {
            OrderRelation::Incomparable
        }
    }

    /// Generators of the cone's extreme rays, each of unit length.
    pub fn extreme_rays(&self) -> Vec<Vec<f64>> {
        match &self.kind {
            ConeKind::Orthant { signs } => (0..self.dimension)
                .map(|i| {
                    let mut e = vec![0.0; self.dimension];
                    e[i] = f64::from(signs[i]);
                    e
                })
                .collect(),
            ConeKind::Polyhedral { normals } => polyhedral_rays(normals, self.dimension, &self.interior),
        }
    }

    pub fn check_dim(&self, found: usize) -> Result<(), ConeError> {
        if found == self.dimension {
            Ok(())
        } else {
            Err(ConeError::DimensionMismatch {
                expected: self.dimension,
                found,
            })
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn matrix_rank(rows: &[Vec<f64>], dimension: usize) -> usize {
    let m = DMatrix::from_fn(rows.len(), dimension, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-12 * max).count()
}

fn min_slack(normals: &[Vec<f64>], x: &[f64]) -> (f64, usize) {
    normals
        .iter()
        .enumerate()
        .map(|(j, h)| (dot(h, x), j))
        .fold((f64::INFINITY, 0), |acc, v| if v.0 < acc.0 { v } else { acc })
}

fn normalize(mut x: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&x);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= n);
    Some(x)
}

/// Maximizes the minimum slack over the unit sphere from a deterministic set
/// of starting directions, refining each by projected subgradient ascent.
fn find_interior_point(normals: &[Vec<f64>], dimension: usize) -> (Vec<f64>, f64) {
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut sum = vec![0.0; dimension];
    for h in normals {
        for (s, v) in sum.iter_mut().zip(h) {
            *s += v;
        }
        starts.push(h.clone());
    }
    starts.push(sum);
    for i in 0..dimension {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; dimension];
            e[i] = sign;
            starts.push(e);
        }
    }
    // Quasi-random directions from a Weyl sequence.
    let mut state = 0.5_f64;
    for _ in 0..64 {
        let dir: Vec<f64> = (0..dimension)
            .map(|k| {
                state = (state + 0.618_033_988_749_894_9 + 0.414_213_562_373_095_1 * k as f64).fract();
                2.0 * state - 1.0
            })
            .collect();
        starts.push(dir);
    }

    let mut best = (vec![0.0; dimension], f64::NEG_INFINITY);
    for start in starts {
        let Some(mut x) = normalize(start) else { continue };
        let (mut current, _) = min_slack(normals, &x);
        let mut step = 0.5;
        for _ in 0..400 {
            let (_, active) = min_slack(normals, &x);
            let trial: Vec<f64> = x
                .iter()
                .zip(&normals[active])
                .map(|(a, h)| a + step * h)
                .collect();
            if let Some(trial) = normalize(trial) {
                let (value, _) = min_slack(normals, &trial);
                if value > current {
                    x = trial;
                    current = value;
                    continue;
                }
            }
            step *= 0.7;
            if step < 1e-14 {
                break;
            }
        }
        if current > best.1 {
            best = (x, current);
        }
    }
    best
}

fn polyhedral_rays(normals: &[Vec<f64>], dimension: usize, interior: &[f64]) -> Vec<Vec<f64>> {
    if dimension == 1 {
        return vec![vec![interior[0].signum()]];
    }
    let k = dimension - 1;
    let mut rays: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        // Null vector of the chosen normals via SVD of the zero-padded square matrix.
        let mut padded = DMatrix::zeros(dimension, dimension);
        for (i, &row) in subset.iter().enumerate() {
            for j in 0..dimension {
                padded[(i, j)] = normals[row][j];
            }
        }
        let svd = padded.svd(false, true);
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10).count();
        if let (Some(vt), true) = (svd.v_t, rank == k) {
            let (min_idx, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
            let r: Vec<f64> = (0..dimension).map(|j| vt[(min_idx, j)]).collect();
            for sign in [1.0, -1.0] {
                let cand: Vec<f64> = r.iter().map(|v| sign * v).collect();
                let (lo, _) = min_slack(normals, &cand);
                if lo >= -1e-10 {
                    if let Some(cand) = normalize(cand) {
                        let dup = rays
                            .iter()
                            .any(|e| e.iter().zip(&cand).all(|(a, b)| (a - b).abs() < 1e-9));
                        if !dup {
                            rays.push(cand);
                        }
                    }
                }
            }
        }
        // Next k-combination of 0..normals.len().
        let n = normals.len();
        let mut i = k;
        loop {
            if i == 0 {
                return rays;
            }
            i -= 1;
            if subset[i] < n - k + i {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos2() -> Cone {
        Cone::positive_orthant(2).unwrap()
    }

    #[test]
    fn orthant_interior_point() {
        let c = Cone::orthant(&[1, 1]).unwrap();
        let p = c.interior_point();
        assert!((p[0] - p[1]).abs() < 1e-15 && p[0] > 0.0);
        assert_eq!(c.order_relation(&[0.0, 0.0], &[1.0, 1.0], 0.0), Ok(OrderRelation::StrictInterior));
    }

    #[test]
    fn h_form_of_orthant_is_valid() {
        let c = Cone::polyhedral(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(c.dimension(), 2);
        assert!(c.interior_point().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn opposing_normals_not_pointed() {
        let err = Cone::polyhedral(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, ConeError::NotPointed { rank: 1, dimension: 2 }));
    }

    #[test]
    fn ray_is_pointed_but_not_solid() {
        let err = Cone::polyhedral(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, ConeError::NonSolidCone { .. }));
    }

    #[test]
    fn bad_sign_and_dimension() {
        assert_eq!(
            Cone::validate(&ConeSpec::Orthant { signs: vec![1.0, 0.5] }),
            Err(ConeError::InvalidSign(0.5))
        );
        let err = Cone::polyhedral(&[vec![1.0, 0.0], vec![0.0]]).unwrap_err();
        assert!(matches!(err, ConeError::DimensionMismatch { expected: 2, found: 1 }));
        let c = pos2();
        assert!(c.order_relation(&[0.0], &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn relation_examples() {
        let c = pos2();
        assert_eq!(c.order_relation(&[0.0, 0.0], &[1.0, 0.0], 0.0), Ok(OrderRelation::Strict));
        assert_eq!(c.order_relation(&[1.0, 0.0], &[0.0, 1.0], 0.0), Ok(OrderRelation::Incomparable));
        assert_eq!(c.order_relation(&[3.0, 4.0], &[3.0, 4.0], 0.0), Ok(OrderRelation::Equal));
    }

    #[test]
    fn tolerance_makes_near_boundary_strict() {
        let c = pos2();
        assert_eq!(c.relation_unchecked(&[0.0, 0.0], &[1.0, -1e-7], 1e-6), OrderRelation::Strict);
        assert_eq!(c.relation_unchecked(&[0.0, 0.0], &[5e-7, 5e-7], 1e-6), OrderRelation::Equal);
        // Both directions can never be strict at once.
        assert_eq!(c.relation_unchecked(&[1.0, -1e-7], &[0.0, 0.0], 1e-6), OrderRelation::Incomparable);
    }

    #[test]
    fn mixed_orthant() {
        let c = Cone::orthant(&[1, -1]).unwrap();
        assert_eq!(c.relation_unchecked(&[0.0, 0.0], &[1.0, -1.0], 0.0), OrderRelation::StrictInterior);
        assert_eq!(c.extreme_rays(), vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
    }

    #[test]
    fn polyhedral_rays_of_wedge() {
        // Cone between the rays (1,0) and (1,1).
        let c = Cone::polyhedral(&[vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let rays = c.extreme_rays();
        assert_eq!(rays.len(), 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(rays.iter().any(|r| (r[0] - 1.0).abs() < 1e-9 && r[1].abs() < 1e-9));
        assert!(rays.iter().any(|r| (r[0] - s).abs() < 1e-9 && (r[1] - s).abs() < 1e-9));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec: ConeSpec = serde_json::from_str(r#"{"type":"orthant","signs":[1,-1]}"#).unwrap();
        assert_eq!(spec, ConeSpec::Orthant { signs: vec![1.0, -1.0] });
        let poly: ConeSpec = serde_json::from_str(r#"{"type":"polyhedral","normals":[[1,0],[0,1]]}"#).unwrap();
        assert!(Cone::validate(&poly).is_ok());
        assert!(serde_json::from_str::<ConeSpec>(r#"{"type":"generators","rays":[[1,0]]}"#).is_err());
    }
}
