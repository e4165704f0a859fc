//! Sign analysis of the general Harnack family on `v`.
//!
//! The evolution of `αΔv − β|∇v|² − b v/t − c n/t` contains the term
//! `(1 − 2(α−β)λ/α) b v/t²`, whose sign cannot be controlled, so a maximum
//! principle argument needs either
//!
//! 1. `1 − 2(α−β)λ/α = 0` (case one), after which the remaining terms have a
//!    sign when `α − β >= 0`, `b + β >= 0` and `α²/(4(α−β)) + b <= 0`, or
//! 2. `b = 0` (case two).
//!
//! In case one the three constraints force `α = 2β = −2b > 0`, i.e. Ni's
//! quantity up to scale; [`case_one_uniqueness_scan`] confirms this by brute
//! force over a grid.

use crate::harnack::{HarnackParams, Variant};
use crate::math::sqrt;
use crate::{Error, Result};

const EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    CaseOne,
    CaseTwo,
    Both,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedMatch {
    None,
    Ni,
    CaoHamiltonH,
    LiYau,
}

/// Sign constraints evaluated for one parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraints {
    pub alpha_minus_beta_nonneg: bool,
    pub b_plus_beta_nonneg: bool,
    /// `α²/(4(α−β)) + b <= 0` (false when `α <= β`).
    pub quarter_square_nonpos: bool,
    /// Case two: coefficient `−2(α−β)βλ/α` of `|∇v|²/t` is `<= 0`.
    pub gradient_coeff_nonpos: bool,
    /// Case two: the `n/t²` coefficient `(1 − 2(α−β)λ/α)c + (α−β)λ²/2` is `<= 0`.
    pub constant_coeff_nonpos: bool,
    pub maximum_principle_applicable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamClassification {
    pub case_tag: CaseTag,
    pub constraints: Constraints,
    pub named_match: NamedMatch,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQ_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Classifies `p` into case one / case two and evaluates the sign constraints.
pub fn classify(p: &HarnackParams) -> Result<ParamClassification> {
    if p.alpha == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    let gap = p.alpha - p.beta;
    let case_one = near(1.0 - p.damping(), 0.0);
    let case_two = near(p.b, 0.0);
    let case_tag = match (case_one, case_two) {
        (true, true) => CaseTag::Both,
        (true, false) => CaseTag::CaseOne,
        (false, true) => CaseTag::CaseTwo,
        (false, false) => CaseTag::Neither,
    };

    let alpha_minus_beta_nonneg = gap >= 0.0;
    let b_plus_beta_nonneg = p.b + p.beta >= -EQ_TOL;
    let quarter_square_nonpos = gap > 0.0 && p.alpha * p.alpha / (4.0 * gap) + p.b <= EQ_TOL;
    let gradient_coeff_nonpos = gap * p.beta * p.lambda / p.alpha >= -EQ_TOL;
    let constant = (1.0 - p.damping()) * p.c + gap * p.lambda * p.lambda / 2.0;
    let constant_coeff_nonpos = constant <= EQ_TOL;

    let case_one_ok = case_one && alpha_minus_beta_nonneg && b_plus_beta_nonneg && quarter_square_nonpos;
    let case_two_ok = case_two && alpha_minus_beta_nonneg && gradient_coeff_nonpos && constant_coeff_nonpos;

    Ok(ParamClassification {
        case_tag,
        constraints: Constraints {
            alpha_minus_beta_nonneg,
            b_plus_beta_nonneg,
            quarter_square_nonpos,
            gradient_coeff_nonpos,
            constant_coeff_nonpos,
            maximum_principle_applicable: case_one_ok || case_two_ok,
        },
        named_match: named_match(p),
    })
}

/// Recognizes the canonical tuples after rescaling `(α, β, b, c)` to `α = 2`.
fn named_match(p: &HarnackParams) -> NamedMatch {
    if p.alpha <= 0.0 {
        return NamedMatch::None;
    }
    let s = 2.0 / p.alpha;
    let scaled = [2.0, p.beta * s, p.b * s, p.c * s, p.lambda];
    let same = |q: &HarnackParams| {
        let target = [q.alpha, q.beta, q.b, q.c, q.lambda];
        scaled.iter().zip(target).all(|(&a, b)| near(a, b))
    };
    if p.variant == Variant::V && same(&HarnackParams::ni()) {
        NamedMatch::Ni
    } else if p.variant == Variant::V && same(&HarnackParams::li_yau()) {
        NamedMatch::LiYau
    } else if same(&HarnackParams::cao_hamilton(p.variant)) {
        NamedMatch::CaoHamiltonH
    } else {
        NamedMatch::None
    }
}

/// Grid over `(α, β, b)`: each axis runs from `lo` to `hi` in steps of `step`.
/// Endpoints must be integer multiples of `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub b: (f64, f64),
    pub step: f64,
}

impl ScanGrid {
    /// `α ∈ [0.5, 4]`, `β ∈ [−2, 3]`, `b ∈ [−3, 1]` at the given step.
    pub fn standard(step: f64) -> Self {
        ScanGrid { alpha: (0.5, 4.0), beta: (-2.0, 3.0), b: (-3.0, 1.0), step }
    }

    fn axis(&self, range: (f64, f64)) -> Result<(i64, i64)> {
        let (lo, hi) = range;
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidScanGrid("step must be positive"));
        }
        if !(lo < hi) {
            return Err(Error::InvalidScanGrid("each range needs lo < hi"));
        }
        let to_int = |x: f64| -> Result<i64> {
            let k = crate::math::round(x / self.step);
            if (k * self.step - x).abs() > 1e-9 * self.step.max(x.abs()) {
                return Err(Error::InvalidScanGrid("range endpoints must be multiples of the step"));
            }
            Ok(k as i64)
        };
        Ok((to_int(lo)?, to_int(hi)?))
    }

    fn lattice(&self) -> Result<[(i64, i64); 3]> {
        Ok([self.axis(self.alpha)?, self.axis(self.beta)?, self.axis(self.b)?])
    }

    pub fn point_count(&self) -> Result<usize> {
        let l = self.lattice()?;
        Ok(l.iter().map(|(lo, hi)| (hi - lo + 1) as usize).product())
    }
}

/// Exact feasibility of the case-one constraints at a lattice point, in units
/// where each coordinate is an integer. Returns `None` when `α = β`.
fn feasible(alpha: i64, beta: i64, b: i64) -> Option<bool> {
    let gap = i128::from(alpha - beta);
    if gap == 0 {
        return None;
    }
    let (a, bb, beta) = (i128::from(alpha), i128::from(b), i128::from(beta));
    // α²/(4(α−β)) + b <= 0  ⇔  α² + 4b(α−β) <= 0 when α − β > 0
    Some(gap > 0 && bb + beta >= 0 && a * a + 4 * bb * gap <= 0)
}

/// One scanned grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    /// `α / (2(α−β))`, forced by the case-one condition; `None` when `α = β`.
    pub lambda: Option<f64>,
    pub alpha_minus_beta: f64,
    pub b_plus_beta: f64,
    /// `α²/(4(α−β)) + b`; `None` when `α = β`.
    pub quarter_square: Option<f64>,
    /// All three constraints hold exactly at the point itself.
    pub exact: bool,
    /// Some point of the closed grid cell `p ± step/2` satisfies all three
    /// constraints (decided exactly on the half-step sub-lattice).
    pub survivor: bool,
}

/// Aggregate outcome of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanReport {
    pub grid: ScanGrid,
    pub points: usize,
    pub survivors: usize,
    pub exact_survivors: usize,
    /// Grid points with `α = β`, where the case-one `λ` is undefined.
    pub excluded_alpha_eq_beta: usize,
    /// `max |α − 2β|` over survivors.
    pub max_alpha_minus_two_beta: f64,
    /// `max |b + β|` over survivors.
    pub max_b_plus_beta: f64,
    /// Largest Euclidean distance from a survivor to the ray `α = 2β = −2b`.
    pub diameter: f64,
    /// `c = −b` throughout: `c` does not enter the case-one constraints.
    pub c_rule: &'static str,
}

/// Visits every grid point in `(α, β, b)` lexicographic order.
pub fn scan_points(grid: &ScanGrid, mut visit: impl FnMut(&ScanPoint)) -> Result<()> {
    let [(a0, a1), (b0, b1), (c0, c1)] = grid.lattice()?;
    let s = grid.step;
    for i in a0..=a1 {
        for j in b0..=b1 {
            for k in c0..=c1 {
                let (alpha, beta, b) = (i as f64 * s, j as f64 * s, k as f64 * s);
                let gap = alpha - beta;
                let exact = feasible(i, j, k) == Some(true);
                // half-step sub-lattice: coordinates doubled
                let mut survivor = false;
                'cell: for di in -1..=1 {
                    for dj in -1..=1 {
                        for dk in -1..=1 {
                            if feasible(2 * i + di, 2 * j + dj, 2 * k + dk) == Some(true) {
                                survivor = true;
                                break 'cell;
                            }
                        }
                    }
                }
                let point = ScanPoint {
                    alpha,
                    beta,
                    b,
                    lambda: (i != j).then(|| alpha / (2.0 * gap)),
                    alpha_minus_beta: gap,
                    b_plus_beta: b + beta,
                    quarter_square: (i != j).then(|| alpha * alpha / (4.0 * gap) + b),
                    exact,
                    survivor,
                };
                visit(&point);
            }
        }
    }
    Ok(())
}

/// Distance from `(α, β, b)` to the line spanned by `(2, 1, −1)`.
pub fn distance_to_ni_ray(alpha: f64, beta: f64, b: f64) -> f64 {
    let dir = [2.0, 1.0, -1.0];
    let norm2 = 6.0;
    let proj = (alpha * dir[0] + beta * dir[1] + b * dir[2]) / norm2;
    let r = [alpha - proj * dir[0], beta - proj * dir[1], b - proj * dir[2]];
    sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
}

/// Brute-force scan of the case-one constraints.
pub fn case_one_uniqueness_scan(grid: &ScanGrid) -> Result<ScanReport> {
    let mut report = ScanReport {
        grid: *grid,
        points: 0,
        survivors: 0,
        exact_survivors: 0,
        excluded_alpha_eq_beta: 0,
        max_alpha_minus_two_beta: 0.0,
        max_b_plus_beta: 0.0,
        diameter: 0.0,
        c_rule: "c = -b",
    };
    scan_points(grid, |p| {
        report.points += 1;
        if p.lambda.is_none() {
            report.excluded_alpha_eq_beta += 1;
        }
        if p.exact {
            report.exact_survivors += 1;
        }
        if p.survivor {
            report.survivors += 1;
            report.max_alpha_minus_two_beta = report.max_alpha_minus_two_beta.max((p.alpha - 2.0 * p.beta).abs());
            report.max_b_plus_beta = report.max_b_plus_beta.max((p.b + p.beta).abs());
            report.diameter = report.diameter.max(distance_to_ni_ray(p.alpha, p.beta, p.b));
        }
    })?;
    Ok(report)
}

/// The case-one tuple at a grid point with `c = −b`, rescaled to `α = 2`.
pub fn case_one_params(alpha: f64, beta: f64, b: f64) -> Result<HarnackParams> {
    if alpha == beta {
        return Err(Error::InvalidParameter("case one needs alpha != beta"));
    }
    let lambda = alpha / (2.0 * (alpha - beta));
    let s = 2.0 / alpha;
    HarnackParams::new(2.0, beta * s, b * s, -b * s, lambda, Variant::V)
}
