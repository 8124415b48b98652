//! Constructive procedures: the Nekrasov scaling `W` and the `B⁺ + C` split.

use std::ops::Deref;

use crate::classify::nekrasov_profile;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Diagonal of a nonnegative diagonal matrix `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingVector(Vec<f64>);

impl ScalingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "scaling entries must be finite and nonnegative".into(),
            ));
        }
        Ok(ScalingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ScalingVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Optional strictness for [`nekrasov_scaling_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingOptions {
    /// Blend weight θ ∈ (0, 1): `w_i^(m-1) = (Λ'_i + θ(t_ii - Λ'_i)) / t_ii`.
    /// `None` gives the plain `w_i^(m-1) = Λ_i / t_ii`.
    pub theta: Option<f64>,
    /// Floor `Λ'_i = max(Λ_i, ε)` used with `theta`.
    pub epsilon: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            theta: None,
            epsilon: 1e-12,
        }
    }
}

impl ScalingOptions {
    pub fn strict() -> Self {
        ScalingOptions {
            theta: Some(0.5),
            ..Default::default()
        }
    }
}

/// `w_i = (Λ_i / t_{i..i})^(1/(m-1))`.
///
/// For an even-order Nekrasov Z tensor with positive diagonal, `T·diag(w)` is a
/// diagonally dominant Z tensor whose diagonal is `Λ(T)`. The vector is still
/// computed for odd orders; the dominance guarantee then does not apply.
pub fn nekrasov_scaling(t: &Tensor) -> Result<ScalingVector> {
    nekrasov_scaling_with(t, &ScalingOptions::default())
}

pub fn nekrasov_scaling_with(t: &Tensor, opts: &ScalingOptions) -> Result<ScalingVector> {
    if let Some((row, &value)) = t.diagonal().iter().enumerate().find(|(_, d)| d.is_nan() || **d <= 0.0) {
        return Err(Error::NonPositiveDiagonal { row, value });
    }
    if let Some(theta) = opts.theta {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidArgument(format!("theta {theta} outside (0, 1)")));
        }
    }
    let profile = nekrasov_profile(t)?;
    let exponent = 1.0 / (t.order() - 1) as f64;
    let w = profile
        .lambda
        .iter()
        .zip(&profile.diag)
        .map(|(&lambda, &d)| {
            let target = match opts.theta {
                None => lambda,
                Some(theta) => {
                    let floored = lambda.max(opts.epsilon);
                    floored + theta * (d - floored)
                }
            };
            (target / d).powf(exponent)
        })
        .collect();
    ScalingVector::new(w)
}

/// True when the scaling theorem's hypotheses on the order hold (even `m`).
pub fn dominance_guaranteed_order(t: &Tensor) -> bool {
    t.order().is_multiple_of(2)
}

/// `T = B⁺ + C` with `B⁺` a Z tensor and `C` nonnegative and constant on rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub b_plus: Tensor,
    pub c: Tensor,
    /// `r⁺_i = max(0, largest off-diagonal entry of row i)`.
    pub r_plus: Vec<f64>,
}

/// Shifts every entry of row `i` (diagonal included) down by `r⁺_i`.
pub fn decompose_plus(t: &Tensor) -> Decomposition {
    let n = t.dim();
    let row_len = t.row_len();
    let r_plus: Vec<f64> = (0..n)
        .map(|i| {
            let d = t.diagonal_in_row(i);
            t.row(i)
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != d)
                .fold(0.0f64, |acc, (_, v)| acc.max(*v))
        })
        .collect();
    let b_values: Vec<f64> = t
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v - r_plus[k / row_len])
        .collect();
    let c_values: Vec<f64> = (0..t.values().len()).map(|k| r_plus[k / row_len]).collect();
    Decomposition {
        b_plus: Tensor::from_values(t.order(), n, b_values).expect("shape preserved"),
        c: Tensor::from_values(t.order(), n, c_values).expect("shape preserved"),
        r_plus,
    }
}

/// Checks a decomposition against `t`.
///
/// `r⁺` must match its definition, every `C` entry of row `i` must equal
/// `r⁺_i`, every `B⁺` entry must equal the rounded difference `t - r⁺_i`, and
/// `B⁺` must be Z. Reconstruction `B⁺ + C` is then exact whenever the shift is
/// exact in binary64 (e.g. dyadic entries) and within one rounding otherwise.
pub fn verify_decomposition(d: &Decomposition, t: &Tensor) -> Result<bool> {
    for other in [&d.b_plus, &d.c] {
        if !other.same_shape(t) {
            return Err(Error::ShapeMismatch {
                left_order: other.order(),
                left_dim: other.dim(),
                right_order: t.order(),
                right_dim: t.dim(),
            });
        }
    }
    if d.r_plus.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            got: d.r_plus.len(),
        });
    }
    let expected = decompose_plus(t);
    if expected.r_plus != d.r_plus {
        return Ok(false);
    }
    let row_len = t.row_len();
    let rows_ok = t.values().iter().enumerate().all(|(k, tv)| {
        let r = d.r_plus[k / row_len];
        let b = d.b_plus.values()[k];
        let c = d.c.values()[k];
        c == r && c >= 0.0 && b == tv - r && (b + c - tv).abs() <= f64::EPSILON * tv.abs().max(r)
    });
    Ok(rows_ok && crate::classify::is_z(&d.b_plus))
}

/// `B⁺ + C == T` entrywise, with no rounding slack.
pub fn reconstructs_exactly(d: &Decomposition, t: &Tensor) -> bool {
    d.b_plus
        .checked_add(&d.c)
        .map(|sum| sum.values().iter().zip(t.values()).all(|(a, b)| a == b))
        .unwrap_or(false)
}
