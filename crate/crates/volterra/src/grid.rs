//! Sampling grids and one-dimensional maximization on the unit disk.
//!
//! Every sup-type quantity in this crate is sampled the same way: a radial
//! grid that is geometric toward the boundary (the quantities of interest
//! degenerate only as r -> 1), an equispaced angular grid, and a
//! golden-section polish around the sampled argmax. Sampled sups are lower
//! estimates by construction; refinement only ever adds evaluation points,
//! so reported values are monotone under grid refinement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1 - 1/phi, the interior-point fraction of a golden-section step.
const INV_GOLD: f64 = 0.381_966_011_250_105_15;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid must have at least one radius and one angle")]
    Empty,
    #[error("refine_tol must be positive and finite")]
    BadTolerance,
    #[error("non-finite value sampled at r={r}, theta={theta}")]
    NonFinite { r: f64, theta: f64 },
}

/// Sampling plan for sup-type quantities.
///
/// Radii sit at `r = 1 - 2^(-j/radial_substeps)` for
/// `j = 0..=radial_levels*radial_substeps`, so the deepest radius is
/// `1 - 2^(-radial_levels)`. Angles are equispaced on the circle, halved to
/// `[0, pi]` when the integrand has conjugation symmetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Deepest dyadic level reached by the radial grid.
    pub radial_levels: u32,
    /// Radial sample points per dyadic level.
    pub radial_substeps: u32,
    /// Equispaced angles on the full circle.
    pub angles: usize,
    /// Relative bracket-width tolerance for golden-section refinement.
    pub refine_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            radial_levels: 14,
            radial_substeps: 2,
            angles: 256,
            refine_tol: 1e-4,
        }
    }
}

/// One radial sample: `r = 1 - 2^(-exponent)`.
#[derive(Clone, Copy, Debug)]
pub struct RadialPoint {
    pub exponent: f64,
    pub r: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.radial_substeps == 0 || self.angles == 0 {
            return Err(GridError::Empty);
        }
        if !(self.refine_tol > 0.0 && self.refine_tol.is_finite()) {
            return Err(GridError::BadTolerance);
        }
        Ok(())
    }

    /// Radial samples from r = 0 up to the deepest dyadic level, ascending.
    pub fn radii(&self) -> Vec<RadialPoint> {
        let steps = self.radial_levels * self.radial_substeps;
        (0..=steps)
            .map(|j| {
                let exponent = f64::from(j) / f64::from(self.radial_substeps);
                RadialPoint { exponent, r: dyadic_radius(exponent) }
            })
            .collect()
    }

    /// Angular samples; `[0, pi]` inclusive when `symmetric`, else `[0, 2pi)`.
    pub fn angles_for(&self, symmetric: bool) -> Vec<f64> {
        if symmetric {
            let half = self.angles / 2;
            if half == 0 {
                return vec![0.0];
            }
            (0..=half)
                .map(|k| std::f64::consts::PI * k as f64 / half as f64)
                .collect()
        } else {
            (0..self.angles)
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / self.angles as f64)
                .collect()
        }
    }
}

/// `1 - 2^(-exponent)`, the radius at a (possibly fractional) dyadic level.
pub fn dyadic_radius(exponent: f64) -> f64 {
    1.0 - (-exponent).exp2()
}

/// `1 - r^2` computed as `(1 - r)(1 + r)`.
///
/// The factored form keeps full precision at deep dyadic radii where the
/// naive `1 - r*r` loses every significant digit.
pub fn one_minus_r_sq(r: f64) -> f64 {
    (1.0 - r) * (1.0 + r)
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
///
/// Narrows the bracket until its width is below `rel_tol` times the initial
/// width and returns the best point actually evaluated, so the result never
/// undercuts any sample taken along the way.
pub fn golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_iter: u32,
) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let width0 = hi - lo;
    let mut x1 = lo + INV_GOLD * (hi - lo);
    let mut x2 = hi - INV_GOLD * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..max_iter {
        if hi - lo <= rel_tol * width0 {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + INV_GOLD * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - INV_GOLD * (hi - lo);
            f2 = f(x2);
        }
        if f1 > best_f {
            best_x = x1;
            best_f = f1;
        }
        if f2 > best_f {
            best_x = x2;
            best_f = f2;
        }
    }
    (best_x, best_f)
}

/// A sampled sup over the disk with its argmax and per-level history.
#[derive(Clone, Debug)]
pub struct SupOutcome {
    pub value: f64,
    pub r: f64,
    pub theta: f64,
    /// Running max per integer dyadic level. The polish step refines
    /// `value` and the witness but never the history: trend classifiers
    /// must see grid growth, not refinement lift.
    pub history: Vec<f64>,
}

/// Sampled sup of `expr(r, theta)` over the grid with golden-section polish.
///
/// Radii are scanned in parallel; the reduction is a sequential fold over
/// the (fixed) radius order, so the result does not depend on the schedule.
pub(crate) fn disk_sup<F>(expr: &F, grid: &GridSpec, symmetric: bool) -> Result<SupOutcome, GridError>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    use rayon::prelude::*;

    grid.validate()?;
    let radii = grid.radii();
    let thetas = grid.angles_for(symmetric);
    let full_circle = !symmetric;

    // Per radius: best angle on the grid, then a golden polish around it.
    let per_radius: Vec<Result<(f64, f64), GridError>> = radii
        .par_iter()
        .map(|rp| {
            let r = rp.r;
            let mut best_k = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for (k, &th) in thetas.iter().enumerate() {
                let v = expr(r, th);
                if !v.is_finite() {
                    return Err(GridError::NonFinite { r, theta: th });
                }
                if v > best_v {
                    best_v = v;
                    best_k = k;
                }
            }
            let (th_lo, th_hi) = angle_bracket(&thetas, best_k, full_circle);
            let (th_star, v_star) =
                golden_max(|th| expr(r, th), th_lo, th_hi, grid.refine_tol, 80);
            if !v_star.is_finite() {
                return Err(GridError::NonFinite { r, theta: th_star });
            }
            if v_star > best_v {
                Ok((v_star, th_star))
            } else {
                Ok((best_v, thetas[best_k]))
            }
        })
        .collect();

    let mut history = vec![f64::NEG_INFINITY; grid.radial_levels as usize + 1];
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, res) in per_radius.iter().enumerate() {
        let (v, _) = *res.as_ref().map_err(clone_grid_err)?;
        let first_level = radii[i].exponent.ceil() as usize;
        for h in history.iter_mut().skip(first_level) {
            *h = h.max(v);
        }
        if v > best.0 {
            best = (v, i);
        }
    }
    // Running max per level: make explicitly monotone (levels share points).
    for m in 1..history.len() {
        history[m] = history[m].max(history[m - 1]);
    }

    let (mut value, best_i) = best;
    let mut theta = per_radius[best_i].as_ref().unwrap().1;
    let mut r_star = radii[best_i].r;

    // Radial polish at the best angle, then one more angular polish there.
    let lo = if best_i == 0 { radii[0].r } else { radii[best_i - 1].r };
    let hi = if best_i + 1 < radii.len() { radii[best_i + 1].r } else { radii[best_i].r };
    if hi > lo {
        let (r_ref, v_ref) = golden_max(|r| expr(r, theta), lo, hi, grid.refine_tol, 80);
        if v_ref > value {
            value = v_ref;
            r_star = r_ref;
        }
    }
    let span = if thetas.len() > 1 { thetas[1] - thetas[0] } else { 0.0 };
    if span > 0.0 {
        let (th_ref, v_ref) = golden_max(
            |th| expr(r_star, th),
            theta - span,
            theta + span,
            grid.refine_tol,
            80,
        );
        if v_ref > value {
            value = v_ref;
            theta = th_ref;
        }
    }
    if !value.is_finite() {
        return Err(GridError::NonFinite { r: r_star, theta });
    }

    Ok(SupOutcome { value, r: r_star, theta, history })
}

fn clone_grid_err(e: &GridError) -> GridError {
    match e {
        GridError::Empty => GridError::Empty,
        GridError::BadTolerance => GridError::BadTolerance,
        GridError::NonFinite { r, theta } => GridError::NonFinite { r: *r, theta: *theta },
    }
}

/// Bracket around grid angle `k` for refinement; wraps on the full circle,
/// clamps to the half-circle endpoints otherwise.
pub(crate) fn angle_bracket(thetas: &[f64], k: usize, full_circle: bool) -> (f64, f64) {
    let n = thetas.len();
    if n == 1 {
        return (thetas[0], thetas[0]);
    }
    let span = thetas[1] - thetas[0];
    if full_circle {
        (thetas[k] - span, thetas[k] + span)
    } else {
        let lo = if k == 0 { thetas[0] } else { thetas[k - 1] };
        let hi = if k + 1 < n { thetas[k + 1] } else { thetas[n - 1] };
        (lo, hi)
    }
}
