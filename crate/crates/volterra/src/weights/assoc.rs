//! Two-sided estimation of the associated weight.
//!
//! The associated weight is the reciprocal of the norm of point evaluation
//! on the weighted sup-norm space. It is bracketed from below by the weight
//! itself and from above by monomial test functions: `z^n / M_n` with
//! `M_n = sup_s s^n nu(s)` lies in the unit ball, so `1/assoc(r) >= r^n/M_n`
//! for every n. A sampled linear program over higher-degree polynomials
//! tightens the upper bound; its solution is rescaled by a finely
//! recomputed weighted sup norm so the test function is feasible again
//! before the bound is read off.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;

use super::{RadialWeight, WeightError};
use crate::grid::{dyadic_radius, golden_max, GridSpec};
use crate::series::{evaluate, weighted_sup_norm, TruncatedSeries};

/// Sampling plan for the extremal linear program.
#[derive(Clone, Debug, Serialize)]
pub struct LpSpec {
    /// Polynomial degree of the test function; 0 disables the LP.
    pub degree: usize,
    /// Radial constraint samples (geometric toward the boundary).
    pub radial_samples: usize,
    /// Minimum angular constraint samples on the half circle; grows with
    /// the degree so the optimizer cannot thread spikes between samples.
    pub angle_samples: usize,
    /// Cut-generation budget: tangent rows added per refinement round.
    pub phase_count: usize,
}

impl Default for LpSpec {
    fn default() -> Self {
        LpSpec { degree: 12, radial_samples: 24, angle_samples: 13, phase_count: 24 }
    }
}

impl LpSpec {
    /// Monomial bounds only, no linear program.
    pub fn monomial_only() -> Self {
        LpSpec { degree: 0, ..LpSpec::default() }
    }
}

/// Radius-indexed bracket around the associated weight.
#[derive(Clone, Debug, Serialize)]
pub struct AssociatedSandwich {
    pub radii: Vec<f64>,
    /// The weight itself (the associated weight never sits below it).
    pub lower: Vec<f64>,
    /// Best monomial bound `min_n M_n / r^n`.
    pub upper: Vec<f64>,
    /// LP-refined upper bound, when the optimization succeeded.
    pub lp_refined_upper: Vec<Option<f64>>,
    /// Monomial powers probed for the upper bound.
    pub monomial_powers: Vec<u32>,
    pub lp_degree: usize,
}

impl AssociatedSandwich {
    /// Tightest available upper bound at sample i.
    pub fn best_upper(&self, i: usize) -> f64 {
        match self.lp_refined_upper[i] {
            Some(lp) => lp.min(self.upper[i]),
            None => self.upper[i],
        }
    }

    /// Bracket width at sample i.
    pub fn width(&self, i: usize) -> f64 {
        self.best_upper(i) - self.lower[i]
    }
}

/// `M_n = sup_s s^n nu(s)`, by coarse scan plus golden polish.
pub fn monomial_sup(nu: &RadialWeight, n: u32) -> f64 {
    monomial_sup_with(nu, n, &[])
}

fn monomial_sup_with(nu: &RadialWeight, n: u32, extra: &[f64]) -> f64 {
    let f = |s: f64| s.powi(n as i32) * nu.eval(s);
    let mut points: Vec<f64> = (0..=60).map(|i| 0.9375 * i as f64 / 60.0).collect();
    points.extend((1..=80).map(|j| dyadic_radius(4.0 + f64::from(j) * 0.25)));
    points.extend_from_slice(extra);
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &s) in points.iter().enumerate() {
        let v = f(s);
        if v > best.1 {
            best = (i, v);
        }
    }
    let lo = if best.0 == 0 { points[0] } else { points[best.0 - 1] };
    let hi = if best.0 + 1 < points.len() { points[best.0 + 1] } else { points[best.0] };
    let (_, polished) = golden_max(f, lo, hi, 1e-10, 120);
    polished.max(best.1)
}

/// Geometric ladder of monomial powers 0..=n_max used for upper bounds.
pub(crate) fn power_ladder(n_max: u32) -> Vec<u32> {
    let mut ladder: Vec<u32> = (0..=4.min(n_max)).collect();
    let mut x = 4.0f64;
    while (x * 1.15).round() <= f64::from(n_max) {
        x *= 1.15;
        ladder.push(x.round() as u32);
    }
    ladder.dedup();
    ladder
}

/// Bracket the associated weight at the given radii.
///
/// Lower bound is the weight itself; upper is the best monomial bound over
/// a geometric power ladder; `lp.degree > 0` additionally runs the extremal
/// linear program at each positive radius.
pub fn associated_weight_bounds(
    nu: &RadialWeight,
    radii: &[f64],
    n_max: u32,
    lp: &LpSpec,
) -> Result<AssociatedSandwich, WeightError> {
    if radii.iter().any(|&r| !(0.0..1.0).contains(&r)) {
        return Err(WeightError::Malformed("sandwich radii must lie in [0,1)".into()));
    }
    let ladder = power_ladder(n_max.max(1));
    let sups: Vec<f64> = ladder.iter().map(|&n| monomial_sup_with(nu, n, radii)).collect();

    let mut lower = Vec::with_capacity(radii.len());
    let mut upper = Vec::with_capacity(radii.len());
    let mut lp_refined = Vec::with_capacity(radii.len());
    for &r in radii {
        lower.push(nu.eval(r));
        let mut best = f64::INFINITY;
        for (&n, &m_n) in ladder.iter().zip(&sups) {
            // r = 0 only admits the constant test function; deep powers
            // underflow and are skipped rather than divided by.
            let denom = r.powi(n as i32);
            if denom > 0.0 {
                best = best.min(m_n / denom);
            }
        }
        upper.push(best);
        lp_refined.push(if lp.degree > 0 && r > 0.0 { lp_upper_bound(nu, r, lp) } else { None });
    }
    Ok(AssociatedSandwich {
        radii: radii.to_vec(),
        lower,
        upper,
        lp_refined_upper: lp_refined,
        monomial_powers: ladder,
        lp_degree: lp.degree,
    })
}

thread_local! {
    static SOLVER_GUARD: std::cell::Cell<bool> = const { std::cell::Cell::new(false) };
}
static SOLVER_HOOK: std::sync::Once = std::sync::Once::new();

/// Wraps the default panic hook with a filter keyed on the solver guard.
fn install_solver_hook() {
    SOLVER_HOOK.call_once(|| {
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(move |info| {
            if !SOLVER_GUARD.with(|g| g.get()) {
                prev(info);
            }
        }));
    });
}

/// Runs the LP solve with panics contained: the solver can panic on a
/// singular basis instead of returning `Err`, and a refinement failure must
/// neither take the process down nor spam stderr. The default panic hook is
/// wrapped once with a filter keyed on a thread-local flag that is raised
/// only for the duration of the solve.
fn solve_contained(problem: Problem) -> Option<minilp::Solution> {
    install_solver_hook();
    SOLVER_GUARD.with(|g| g.set(true));
    let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| problem.solve()));
    SOLVER_GUARD.with(|g| g.set(false));
    out.ok()?.ok()
}

/// Upper bound on the associated weight at r from the extremal LP:
/// maximize `Re f(r)` over real-coefficient polynomials subject to sampled
/// sup-norm constraints, each linearized as a phase rotation
/// `Re(e^{i phi} f) <= 1/nu`. The rotations are generated adaptively:
/// starting from a two-sided fan over the half circle, each round adds
/// tangent rows where the current optimizer most exceeds the true modulus
/// cap. Every tangent is a valid inequality of the continuous problem, and
/// the optimizer is rescaled by a finely recomputed weighted sup norm
/// before the bound `norm / f(r)` is read off, so the certificate stays
/// sound wherever the iteration stops. Results from the halved-degree
/// ladder (down to degree 8) are folded in, which makes the bound
/// nonincreasing as the requested degree doubles. `None` when every solve
/// in the ladder is degenerate or infeasible.
pub fn lp_upper_bound(nu: &RadialWeight, r: f64, lp: &LpSpec) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut degree = lp.degree;
    loop {
        if let Some(b) = lp_solve_at(nu, r, degree, lp) {
            best = Some(best.map_or(b, |x: f64| x.min(b)));
        }
        if degree <= 8 {
            return best;
        }
        degree = (degree / 2).max(8);
    }
}

/// One cut-generation solve at a fixed degree; see `lp_upper_bound`.
fn lp_solve_at(nu: &RadialWeight, r: f64, degree: usize, lp: &LpSpec) -> Option<f64> {
    const MAX_ROUNDS: usize = 24;
    /// Relative modulus excess below which a sample point is not worth a cut.
    const CUT_TOL: f64 = 1e-4;
    /// Norm slack at which further refinement stops paying for itself: the
    /// certificate is `norm / f(r)`, so this bounds the remaining upside.
    const DONE_TOL: f64 = 5e-3;
    /// Consecutive rounds without certificate improvement before giving up.
    const STALE_LIMIT: usize = 5;
    // Total cut rows one rung may add. Each added row re-optimizes the
    // standing basis at a cost growing with its size and with the degree, so
    // the budget shrinks as the degree grows: the low rungs of the ladder,
    // which converge well inside their budgets, carry the certificate
    // quality, and the high rungs stay affordable refinement attempts.
    let max_cuts = (4096 / degree.max(1)).clamp(64, 512);

    // Constraint radii: a uniform head plus a dyadic tail (the same hybrid
    // as the monomial scan) and the target r. Duplicated sample points would
    // inject identical rows and can make the solver's basis singular, so the
    // list is deduplicated.
    let mut samples: Vec<f64> = (0..16).map(|j| f64::from(j) / 16.0).collect();
    samples.extend(
        (0..lp.radial_samples)
            .map(|j| dyadic_radius(12.0 * j as f64 / (lp.radial_samples.max(2) - 1) as f64)),
    );
    samples.push(r);
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    // Seed fan: a degree-D polynomial restricts to a degree-D trig
    // polynomial on each circle, so half-degree resolution pins the worst
    // oscillations. Past that the seed is capped and the cuts repair the
    // rest; a denser fan would only bloat every re-optimization after it.
    let fan_count = lp.angle_samples.max(degree / 2 + 1).clamp(2, 17);
    let fan: Vec<f64> = (0..fan_count)
        .map(|k| std::f64::consts::PI * k as f64 / (fan_count - 1) as f64)
        .collect();
    // Violation scan mesh: radial midpoints and a doubled fan, so spikes
    // between constraint rows are seen.
    let mut scan_radii = samples.clone();
    scan_radii.extend(samples.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let scan_count = 4 * degree + 1;
    let scan_angles: Vec<f64> = (0..scan_count)
        .map(|k| std::f64::consts::PI * k as f64 / (scan_count - 1) as f64)
        .collect();

    // Real coefficients suffice: r is real and the weight radial, so an
    // extremal candidate can be averaged with the conjugate of its own
    // reflection f(conj z), which fixes the value at r and never grows the
    // norm. The seed problem is solved from scratch once; every later cut
    // re-optimizes the standing basis, which is far cheaper than a rebuild.
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> =
        (0..=degree).map(|m| problem.add_var(r.powi(m as i32), (-1e4, 1e4))).collect();
    let build_row = |s: f64, th: f64, phi: f64| -> Vec<(minilp::Variable, f64)> {
        vars.iter()
            .enumerate()
            .map(|(m, var)| (*var, s.powi(m as i32) * (phi + m as f64 * th).cos()))
            .collect()
    };
    for &s in &samples {
        // At s = 0 every angle yields the same row: keep one.
        let thetas = if s == 0.0 { &fan[..1] } else { &fan[..] };
        for &th in thetas {
            for phi in [0.0, std::f64::consts::PI] {
                problem.add_constraint(
                    build_row(s, th, phi).as_slice(),
                    ComparisonOp::Le,
                    1.0 / nu.eval(s),
                );
            }
        }
    }
    let mut solution = solve_contained(problem)?;

    let batch = lp.phase_count.max(4 * degree).min(128);
    let mut certificate: Option<f64> = None;
    let mut stale = 0usize;
    let mut added = 0usize;
    for _ in 0..MAX_ROUNDS {
        let coeffs: Vec<f64> = vars.iter().map(|v| solution[*v]).collect();
        let f = TruncatedSeries::from_real(&coeffs).ok()?;

        let at_r = evaluate(&f, num_complex::Complex64::new(r, 0.0)).re;
        if !(at_r > 1e-9) {
            return None;
        }
        let fine =
            GridSpec { radial_levels: 16, radial_substeps: 4, angles: 128, refine_tol: 1e-6 };
        let fine_norm = weighted_sup_norm(&f, nu, &fine);
        let norm = fine_norm.value;
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        let bound = norm / at_r;
        let improved = certificate.is_none_or(|c| bound < c - 1e-9);
        certificate = Some(certificate.map_or(bound, |c: f64| c.min(bound)));

        // The constraints cap nu|f| at 1, so the finely sampled norm is the
        // violation oracle: near-feasible means the bound is nearly as good
        // as this degree will deliver. Kelley iterations can also cycle
        // without progress, so stalls end the round loop too.
        stale = if improved { 0 } else { stale + 1 };
        if norm <= 1.0 + DONE_TOL || stale >= STALE_LIMIT || added >= max_cuts {
            break;
        }
        // One tangent cut at the polished argmax of the norm itself (the
        // spike the scan mesh missed), then batch cuts at the worst
        // relative modulus excesses over the scan mesh.
        let w_star =
            evaluate(&f, num_complex::Complex64::from_polar(fine_norm.r, fine_norm.theta));
        let mut new_rows = vec![(fine_norm.r, fine_norm.theta, -w_star.arg())];
        let mut cuts: Vec<(f64, f64, f64, f64)> = Vec::new();
        for &s in &scan_radii {
            let cap = 1.0 / nu.eval(s);
            for &th in &scan_angles {
                let w = evaluate(&f, num_complex::Complex64::from_polar(s, th));
                let excess = w.norm() - cap;
                if excess > CUT_TOL * cap {
                    cuts.push((excess / cap, s, th, -w.arg()));
                }
                if s == 0.0 {
                    break;
                }
            }
        }
        cuts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        new_rows.extend(cuts.iter().take(batch).map(|&(_, s, th, phi)| (s, th, phi)));
        for (s, th, phi) in new_rows {
            match recut_contained(solution, build_row(s, th, phi), 1.0 / nu.eval(s)) {
                Some(next) => solution = next,
                // A degenerate re-optimization cannot be recovered from (the
                // basis is consumed); the certificate so far stays valid.
                None => return certificate,
            }
            added += 1;
        }
    }
    certificate
}

/// Adds one cut to a standing solution with panics contained, like
/// `solve_contained`. `None` on solver failure of either kind.
fn recut_contained(
    solution: minilp::Solution,
    row: Vec<(minilp::Variable, f64)>,
    rhs: f64,
) -> Option<minilp::Solution> {
    install_solver_hook();
    SOLVER_GUARD.with(|g| g.set(true));
    let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(move || {
        solution.add_constraint(row.as_slice(), ComparisonOp::Le, rhs)
    }));
    SOLVER_GUARD.with(|g| g.set(false));
    out.ok()?.ok()
}

/// Certified (at the probed radii) upper estimate of the essentiality
/// constant: the worst ratio of the monomial upper bound to the weight.
pub fn essential_constant_estimate(
    nu: &RadialWeight,
    radii: &[f64],
) -> Result<f64, WeightError> {
    if radii.is_empty() {
        return Err(WeightError::Malformed("essential constant needs at least one radius".into()));
    }
    let sandwich = associated_weight_bounds(nu, radii, 4096, &LpSpec::monomial_only())?;
    let mut worst = 1.0f64;
    for i in 0..radii.len() {
        worst = worst.max(sandwich.upper[i] / sandwich.lower[i]);
    }
    Ok(worst)
}
