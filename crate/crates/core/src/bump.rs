//! Compactly supported smooth bump functions with closed-form evaluators.
//!
//! Every bump carries a declared support box and evaluates to an exact 0
//! outside it. Built-ins cover the standard mollifier, scaled/shifted copies,
//! tensor products, finite shift sums, and smooth plateaus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// exp(-1/(1-t^2)) on (-1,1), 0 elsewhere.
fn std_bump_1d(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Smooth step: 0 for u <= 0, 1 for u >= 1, strictly increasing between.
fn smooth_step(u: f64) -> f64 {
    fn g(u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            (-1.0 / u).exp()
        }
    }
    let a = g(u);
    let b = g(1.0 - u);
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        1.0
    } else {
        a / (a + b)
    }
}

/// 1 on [i_lo, i_hi], 0 outside [o_lo, o_hi], smooth in between.
fn plateau_1d(t: f64, i_lo: f64, i_hi: f64, o_lo: f64, o_hi: f64) -> f64 {
    if t <= o_lo || t >= o_hi {
        return 0.0;
    }
    let rise = if t >= i_lo {
        1.0
    } else {
        smooth_step((t - o_lo) / (i_lo - o_lo))
    };
    let fall = if t <= i_hi {
        1.0
    } else {
        smooth_step((o_hi - t) / (o_hi - i_hi))
    };
    rise * fall
}

/// Symbolic, evaluable compactly supported smooth function.
///
/// The JSON form uses a `type` tag with the variant fields inline, e.g.
/// `{"type":"std_bump_scaled","center":0.0,"radius":0.25}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BumpSpec {
    /// 1-d standard mollifier on [-1, 1].
    StdBump,
    /// 1-d mollifier b((t - center)/radius) on [center-radius, center+radius].
    StdBumpScaled { center: f64, radius: f64 },
    /// Product of factors; dimension is the sum of factor dimensions.
    Tensor { factors: Vec<BumpSpec> },
    /// sum_i weights[i] * base(x - shifts[i]).
    ShiftSum {
        base: Box<BumpSpec>,
        shifts: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// 1 on the inner box, 0 outside the outer box, smooth transition between.
    Plateau {
        inner: Vec<(f64, f64)>,
        outer: Vec<(f64, f64)>,
    },
}

impl BumpSpec {
    pub fn scaled(center: f64, radius: f64) -> Self {
        BumpSpec::StdBumpScaled { center, radius }
    }

    /// d-fold tensor power of a 1-d factor.
    pub fn tensor_power(factor: BumpSpec, d: usize) -> Self {
        if d == 1 {
            factor
        } else {
            BumpSpec::Tensor {
                factors: vec![factor; d],
            }
        }
    }

    pub fn tensor(factors: Vec<BumpSpec>) -> Self {
        BumpSpec::Tensor { factors }
    }

    pub fn plateau(inner: Vec<(f64, f64)>, outer: Vec<(f64, f64)>) -> Self {
        BumpSpec::Plateau { inner, outer }
    }

    /// phi + phi(. - 1) in one dimension, the shifted-sum example family.
    pub fn shifted_pair(base: BumpSpec) -> Self {
        BumpSpec::ShiftSum {
            base: Box::new(base),
            shifts: vec![vec![0.0], vec![1.0]],
            weights: vec![1.0, 1.0],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BumpSpec::StdBump | BumpSpec::StdBumpScaled { .. } => 1,
            BumpSpec::Tensor { factors } => factors.iter().map(BumpSpec::dim).sum(),
            BumpSpec::ShiftSum { base, .. } => base.dim(),
            BumpSpec::Plateau { outer, .. } => outer.len(),
        }
    }

    /// Per-axis closed intervals containing the support.
    pub fn support_box(&self) -> Vec<(f64, f64)> {
        match self {
            BumpSpec::StdBump => vec![(-1.0, 1.0)],
            BumpSpec::StdBumpScaled { center, radius } => {
                vec![(center - radius, center + radius)]
            }
            BumpSpec::Tensor { factors } => {
                factors.iter().flat_map(BumpSpec::support_box).collect()
            }
            BumpSpec::ShiftSum { base, shifts, .. } => {
                let base_box = base.support_box();
                let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); base_box.len()];
                for s in shifts {
                    for (a, &(lo, hi)) in base_box.iter().enumerate() {
                        out[a].0 = out[a].0.min(lo + s[a]);
                        out[a].1 = out[a].1.max(hi + s[a]);
                    }
                }
                out
            }
            BumpSpec::Plateau { outer, .. } => outer.clone(),
        }
    }

    /// Evaluate at x; exact 0 outside the support box.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            BumpSpec::StdBump => std_bump_1d(x[0]),
            BumpSpec::StdBumpScaled { center, radius } => std_bump_1d((x[0] - center) / radius),
            BumpSpec::Tensor { factors } => {
                let mut acc = 1.0;
                let mut at = 0;
                for f in factors {
                    let d = f.dim();
                    acc *= f.eval(&x[at..at + d]);
                    if acc == 0.0 {
                        return 0.0;
                    }
                    at += d;
                }
                acc
            }
            BumpSpec::ShiftSum {
                base,
                shifts,
                weights,
            } => {
                let mut acc = 0.0;
                let mut y = vec![0.0; x.len()];
                for (s, &w) in shifts.iter().zip(weights) {
                    for a in 0..x.len() {
                        y[a] = x[a] - s[a];
                    }
                    acc += w * base.eval(&y);
                }
                acc
            }
            BumpSpec::Plateau { inner, outer } => {
                let mut acc = 1.0;
                for (a, (&(ilo, ihi), &(olo, ohi))) in inner.iter().zip(outer).enumerate() {
                    acc *= plateau_1d(x[a], ilo, ihi, olo, ohi);
                    if acc == 0.0 {
                        return 0.0;
                    }
                }
                acc
            }
        }
    }

    /// Structural validation of parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            BumpSpec::StdBump => Ok(()),
            BumpSpec::StdBumpScaled { center, radius } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::invalid("radius", "must be finite and positive"));
                }
                if !center.is_finite() {
                    return Err(Error::invalid("center", "must be finite"));
                }
                Ok(())
            }
            BumpSpec::Tensor { factors } => {
                if factors.is_empty() {
                    return Err(Error::invalid("factors", "tensor needs at least one factor"));
                }
                factors.iter().try_for_each(BumpSpec::validate)
            }
            BumpSpec::ShiftSum {
                base,
                shifts,
                weights,
            } => {
                base.validate()?;
                if shifts.len() != weights.len() || shifts.is_empty() {
                    return Err(Error::invalid(
                        "shifts",
                        "shifts and weights must be nonempty lists of equal length",
                    ));
                }
                let d = base.dim();
                for s in shifts {
                    if s.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: s.len(),
                        });
                    }
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::NonFinite("shift_sum weight"));
                }
                Ok(())
            }
            BumpSpec::Plateau { inner, outer } => {
                if inner.len() != outer.len() || inner.is_empty() {
                    return Err(Error::invalid(
                        "inner",
                        "inner and outer must be nonempty boxes of equal dimension",
                    ));
                }
                for (&(ilo, ihi), &(olo, ohi)) in inner.iter().zip(outer) {
                    if !(olo < ilo && ilo <= ihi && ihi < ohi) {
                        return Err(Error::invalid(
                            "plateau",
                            format!(
                                "need outer_lo < inner_lo <= inner_hi < outer_hi, got [{ilo},{ihi}] in [{olo},{ohi}]"
                            ),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn sup_abs_hint(&self) -> f64 {
        // Built-ins are bounded by the sum of absolute weights along the tree.
        match self {
            BumpSpec::StdBump | BumpSpec::StdBumpScaled { .. } => (-1.0f64).exp(),
            BumpSpec::Plateau { .. } => 1.0,
            BumpSpec::Tensor { factors } => factors.iter().map(BumpSpec::sup_abs_hint).product(),
            BumpSpec::ShiftSum { base, weights, .. } => {
                base.sup_abs_hint() * weights.iter().map(|w| w.abs()).sum::<f64>()
            }
        }
    }
}

pub fn bump_from_json(text: &str) -> Result<BumpSpec> {
    let b: BumpSpec = serde_json::from_str(text)?;
    b.validate()?;
    Ok(b)
}

pub fn bump_to_json(b: &BumpSpec) -> String {
    serde_json::to_string_pretty(b).expect("bump serialization cannot fail")
}

pub fn read_bump(path: impl AsRef<std::path::Path>) -> Result<BumpSpec> {
    bump_from_json(&std::fs::read_to_string(path)?)
}
