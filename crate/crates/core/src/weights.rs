//! Edge weight functions `w(t)`: the unit cost of an edge carrying flow `t`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("invalid weight parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("weight evaluated at negative or non-finite flow {0}")]
    NegativeFlow(f64),
    #[error("condition check needs a non-empty grid")]
    EmptyGrid,
    #[error("grid point {0} is negative or non-finite")]
    InvalidGridPoint(f64),
}

/// The built-in weight families.
///
/// `Power` with `alpha == 1` is canonicalized to `Affine` at construction,
/// so a degree-3 hypothesis such as `alpha ∈ (0, 1/2] ∪ {1}` is a plain
/// match on the variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFunction {
    /// `w(t) = d`
    Constant { d: f64 },
    /// `w(t) = d + h·t`
    Affine { d: f64, h: f64 },
    /// `w(t) = d + h·t^alpha`, `0 < alpha < 1`
    Power { d: f64, h: f64, alpha: f64 },
    /// `w(t) = ⌈(a·t + b) / c⌉`
    RoundedAffine { a: f64, b: f64, c: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<(), WeightError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(WeightError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<(), WeightError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(WeightError::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

/// Outcome of checking the four weight conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionReport {
    /// `w(0) ≥ 0` and `w(t) > 0` for `t > 0`.
    pub positive: bool,
    /// `w` is non-decreasing.
    pub nondecreasing: bool,
    /// `w(t1 + t2) ≤ w(t1) + w(t2)` for `t1, t2 > 0`.
    pub triangular: bool,
    /// `w` is concave.
    pub concave: bool,
}

impl ConditionReport {
    /// Positive, nondecreasing and subadditive: the weight defines a Gilbert
    /// network.
    pub fn is_gilbert(&self) -> bool {
        self.positive && self.nondecreasing && self.triangular
    }

    pub fn all(&self) -> bool {
        self.is_gilbert() && self.concave
    }
}

impl WeightFunction {
    pub fn constant(d: f64) -> Result<Self, WeightError> {
        positive("d", d)?;
        Ok(Self::Constant { d })
    }

    pub fn affine(d: f64, h: f64) -> Result<Self, WeightError> {
        positive("d", d)?;
        nonnegative("h", h)?;
        Ok(Self::Affine { d, h })
    }

    pub fn power(d: f64, h: f64, alpha: f64) -> Result<Self, WeightError> {
        positive("d", d)?;
        positive("h", h)?;
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
            return Err(WeightError::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must lie in (0, 1]",
            });
        }
        if alpha == 1.0 {
            return Ok(Self::Affine { d, h });
        }
        Ok(Self::Power { d, h, alpha })
    }

    pub fn rounded_affine(a: f64, b: f64, c: f64) -> Result<Self, WeightError> {
        positive("a", a)?;
        positive("b", b)?;
        positive("c", c)?;
        Ok(Self::RoundedAffine { a, b, c })
    }

    pub fn eval(&self, t: f64) -> Result<f64, WeightError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(WeightError::NegativeFlow(t));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { d } => d,
            Self::Affine { d, h } => d + h * t,
            Self::Power { d, h, alpha } => d + h * t.powf(alpha),
            Self::RoundedAffine { a, b, c } => ((a * t + b) / c).ceil(),
        }
    }

    /// Whether the family is concave on `[0, ∞)`. The rounded family is a
    /// non-constant step function and therefore never concave.
    pub fn is_concave(&self) -> bool {
        !matches!(self, Self::RoundedAffine { .. })
    }

    /// Checks positivity, monotonicity, subadditivity and concavity. The smooth
    /// families satisfy all four by
    /// construction; the rounded family is tested exhaustively on `grid`:
    /// positivity at every point, monotonicity over all pairs,
    /// subadditivity over all positive pairs whose sum is on the grid, and
    /// midpoint concavity over all arithmetic-progression triples.
    pub fn check_conditions(&self, grid: &[f64]) -> Result<ConditionReport, WeightError> {
        if grid.is_empty() {
            return Err(WeightError::EmptyGrid);
        }
        if let Some(&bad) = grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(WeightError::InvalidGridPoint(bad));
        }
        if !matches!(self, Self::RoundedAffine { .. }) {
            return Ok(ConditionReport {
                positive: true,
                nondecreasing: true,
                triangular: true,
                concave: true,
            });
        }

        let mut pts = grid.to_vec();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let w: Vec<f64> = pts.iter().map(|&t| self.eval_unchecked(t)).collect();
        let index_of = |t: f64| pts.binary_search_by(|p| p.total_cmp(&t)).ok();

        let positive = pts
            .iter()
            .zip(&w)
            .all(|(&t, &wt)| if t > 0.0 { wt > 0.0 } else { wt >= 0.0 });
        let nondecreasing = w.windows(2).all(|p| p[1] >= p[0]);

        let mut triangular = true;
        let mut concave = true;
        for i in 0..pts.len() {
            for j in i..pts.len() {
                if pts[i] > 0.0 {
                    if let Some(k) = index_of(pts[i] + pts[j]) {
                        if w[k] > w[i] + w[j] {
                            triangular = false;
                        }
                    }
                }
                if j > i {
                    // midpoint of pts[i], pts[j]
                    if let Some(k) = index_of(0.5 * (pts[i] + pts[j])) {
                        if 2.0 * w[k] < w[i] + w[j] {
                            concave = false;
                        }
                    }
                }
            }
        }
        Ok(ConditionReport {
            positive,
            nondecreasing,
            triangular,
            concave,
        })
    }
}
