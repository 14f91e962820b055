//! Vector-field definitions: parsing, evaluation and Jacobians.

pub mod expr;

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{Cone, ConeError, ConeSpec};
pub use expr::{Expr, ExprError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("parse error in {context} at position {position}: {message}")]
    Parse {
        context: String,
        position: usize,
        message: String,
    },
    #[error("unknown variable '{name}' in field component {component}")]
    UnknownVariable { component: usize, name: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid cone: {0}")]
    InvalidCone(#[from] ConeError),
    #[error("domain error in component {component}: {message}")]
    Domain { component: usize, message: String },
    #[error("invalid system: {0}")]
    Invalid(String),
}

/// The right-hand side of `x' = F(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    Expressions(Vec<Expr>),
    Linear(DMatrix<f64>),
    /// `f_i(x) = x_i (r_i + sum_j A_ij x_j)`.
    LotkaVolterra { r: Vec<f64>, a: DMatrix<f64> },
}

/// A parsed, validated autonomous system with its order cone.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDef {
    dimension: usize,
    field: VectorField,
    cone: Cone,
    declared_tstar: Option<f64>,
}

/// On-disk form of a system configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tstar: Option<f64>,
}

fn square_matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>, FieldError> {
    if rows.len() != n {
        return Err(FieldError::DimensionMismatch {
            expected: n,
            found: rows.len(),
        });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(FieldError::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_dimension(declared: Option<usize>, inferred: usize) -> Result<usize, FieldError> {
    match declared {
        Some(d) if d != inferred => Err(FieldError::DimensionMismatch {
            expected: d,
            found: inferred,
        }),
        _ if inferred == 0 => Err(FieldError::Invalid("dimension must be at least 1".into())),
        _ => Ok(inferred),
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemDef, FieldError> {
        let field = match (&self.field, self.family.as_deref()) {
            (Some(_), Some(_)) => {
                return Err(FieldError::Invalid(
                    "give either \"field\" or \"family\", not both".into(),
                ))
            }
            (Some(components), None) => {
                let n = check_dimension(self.dimension, components.len())?;
                let mut exprs = Vec::with_capacity(n);
                for (k, src) in components.iter().enumerate() {
                    let e = Expr::parse(src, n).map_err(|e| match e {
                        ExprError::Parse { position, message } => FieldError::Parse {
                            context: format!("field[{k}]"),
                            position,
                            message,
                        },
                        ExprError::UnknownVariable { name, .. } => {
                            FieldError::UnknownVariable { component: k, name }
                        }
                    })?;
                    exprs.push(e);
                }
                VectorField::Expressions(exprs)
            }
            (None, Some("linear")) => {
                let rows = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| FieldError::Invalid("linear family requires \"matrix\"".into()))?;
                let n = check_dimension(self.dimension, rows.len())?;
                VectorField::Linear(square_matrix(rows, n)?)
            }
            (None, Some("lotka_volterra")) => {
                let r = self.r.as_ref().ok_or_else(|| {
                    FieldError::Invalid("lotka_volterra family requires \"r\"".into())
                })?;
                let rows = self.a.as_ref().ok_or_else(|| {
                    FieldError::Invalid("lotka_volterra family requires \"A\"".into())
                })?;
                let n = check_dimension(self.dimension, r.len())?;
                VectorField::LotkaVolterra {
                    r: r.clone(),
                    a: square_matrix(rows, n)?,
                }
            }
            (None, Some(other)) => {
                return Err(FieldError::Invalid(format!("unknown family '{other}'")))
            }
            (None, None) => {
                return Err(FieldError::Invalid(
                    "system needs \"field\" or \"family\"".into(),
                ))
            }
        };
        let n = field.dimension();
        let cone = match &self.cone {
            Some(spec) => {
                let cone = Cone::validate(spec)?;
                if cone.dimension() != n {
                    return Err(FieldError::DimensionMismatch {
                        expected: n,
                        found: cone.dimension(),
                    });
                }
                cone
            }
            None => Cone::positive_orthant(n)?,
        };
        if let Some(t) = self.tstar {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(FieldError::Invalid(format!("tstar must be a finite number >= 0, got {t}")));
            }
        }
        SystemDef::new(field, cone, self.tstar)
    }
}

impl VectorField {
    pub fn dimension(&self) -> usize {
        match self {
            VectorField::Expressions(e) => e.len(),
            VectorField::Linear(m) => m.nrows(),
            VectorField::LotkaVolterra { r, .. } => r.len(),
        }
    }
}

impl SystemDef {
    pub fn new(field: VectorField, cone: Cone, declared_tstar: Option<f64>) -> Result<SystemDef, FieldError> {
        let dimension = field.dimension();
        match &field {
            VectorField::Linear(m) if !m.is_square() => {
                return Err(FieldError::DimensionMismatch {
                    expected: m.nrows(),
                    found: m.ncols(),
                })
            }
            VectorField::LotkaVolterra { a, .. } if a.nrows() != dimension || a.ncols() != dimension => {
                return Err(FieldError::DimensionMismatch {
                    expected: dimension,
                    found: a.ncols(),
                })
            }
            VectorField::Expressions(exprs) => {
                if let Some(v) = exprs.iter().filter_map(Expr::max_variable).max() {
                    if v >= dimension {
                        return Err(FieldError::UnknownVariable {
                            component: 0,
                            name: format!("x{}", v + 1),
                        });
                    }
                }
            }
            _ => {}
        }
        cone.check_dim(dimension)?;
        Ok(SystemDef {
            dimension,
            field,
            cone,
            declared_tstar,
        })
    }

    /// Parses a system from its JSON configuration.
    pub fn from_json(text: &str) -> Result<SystemDef, FieldError> {
        let config: SystemConfig = serde_json::from_str(text).map_err(|e| FieldError::Parse {
            context: "system JSON".into(),
            position: e.column(),
            message: format!("line {}: {e}", e.line()),
        })?;
        config.build()
    }

    pub fn from_path(path: &Path) -> Result<SystemDef, FieldError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FieldError::Invalid(format!("{}: {e}", path.display())))?;
        SystemDef::from_json(&text)
    }

    pub fn linear(matrix: DMatrix<f64>, cone: Cone) -> Result<SystemDef, FieldError> {
        SystemDef::new(VectorField::Linear(matrix), cone, None)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn declared_tstar(&self) -> Option<f64> {
        self.declared_tstar
    }

    pub fn with_cone(mut self, cone: Cone) -> Result<SystemDef, FieldError> {
        cone.check_dim(self.dimension)?;
        self.cone = cone;
        Ok(self)
    }

    pub fn linear_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.field {
            VectorField::Linear(m) => Some(m),
            _ => None,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<(), FieldError> {
        if x.len() != self.dimension {
            return Err(FieldError::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Writes `F(x)` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        self.check_input(x)?;
        match &self.field {
            VectorField::Expressions(exprs) => {
                for (k, (e, o)) in exprs.iter().zip(out.iter_mut()).enumerate() {
                    *o = e.eval(x).map_err(|err| FieldError::Domain {
                        component: k,
                        message: err.0,
                    })?;
                }
            }
            VectorField::Linear(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..self.dimension).map(|j| m[(i, j)] * x[j]).sum();
                }
            }
            VectorField::LotkaVolterra { r, a } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let inner: f64 = r[i] + (0..self.dimension).map(|j| a[(i, j)] * x[j]).sum::<f64>();
                    *o = x[i] * inner;
                }
            }
        }
        if let Some(k) = out.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::Domain {
                component: k,
                message: "non-finite value".into(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        let mut out = vec![0.0; self.dimension];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Jacobian of `F` at `x`: exact for the builtin families, central
    /// differences with step `max(1e-6, 1e-6 |x_j|)` for expressions.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        self.check_input(x)?;
        let n = self.dimension;
        match &self.field {
            VectorField::Linear(m) => Ok(m.clone()),
            VectorField::LotkaVolterra { r, a } => {
                let mut j = DMatrix::zeros(n, n);
                for i in 0..n {
                    let inner: f64 = r[i] + (0..n).map(|k| a[(i, k)] * x[k]).sum::<f64>();
                    for c in 0..n {
                        j[(i, c)] = x[i] * a[(i, c)];
                    }
                    j[(i, i)] += inner;
                }
                Ok(j)
            }
            VectorField::Expressions(_) => self.finite_difference_jacobian(x),
        }
    }

    /// Central-difference Jacobian, available for every family.
    pub fn finite_difference_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        self.check_input(x)?;
        let n = self.dimension;
        let mut j = DMatrix::zeros(n, n);
        let mut probe = x.to_vec();
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        for c in 0..n {
            let h = f64::max(1e-6, 1e-6 * x[c].abs());
            probe[c] = x[c] + h;
            self.eval_into(&probe, &mut plus)?;
            probe[c] = x[c] - h;
            self.eval_into(&probe, &mut minus)?;
            probe[c] = x[c];
            for i in 0..n {
                j[(i, c)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Ok(j)
    }
}
