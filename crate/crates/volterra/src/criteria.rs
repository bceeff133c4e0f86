//! Criterion quantities: radial integrals, disk suprema, boundary limits
//! and the double-limit compactness profile.
//!
//! Every boundedness or compactness question reduces to one of a handful of
//! sampled quantities, parameterized by an integrand kind (for the integral
//! criteria) or a pointwise kind (for the quotient criteria) and by an
//! asymptotic mode. Verdicts are drawn from refinement histories, never
//! from a single value: divergence needs sustained growth, limits need a
//! settled tail.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{angle_bracket, disk_sup, dyadic_radius, golden_max, one_minus_r_sq, GridError, GridSpec};
use crate::operators::SymbolSpec;
use crate::weights::{check_property_u, monomial_sup, power_ladder, RadialWeight};

/// Magnitude a quantity must exceed before fast growth counts as divergence.
pub const DIVERGENCE_CAP: f64 = 1e6;
/// Net growth factor across the last three levels that, past the cap,
/// declares divergence.
const GROWTH_FACTOR: f64 = 1.2;
/// Per-level additive increment that declares slow (logarithmic) divergence
/// when sustained across the last four levels.
const INCREMENT_FLOOR: f64 = 1e-2;
/// Relative settling tolerance for a Finite verdict.
const STABLE_REL: f64 = 1e-3;
/// A boundary tail below this (with monotone decrease) is a zero limit.
const LIMIT_ZERO_TOL: f64 = 1e-3;
/// A boundary tail above this (flat or growing) is a nonzero limit.
const LIMIT_POSITIVE_FLOOR: f64 = 1e-2;
/// Relative spread of the last three levels that still counts as flat.
const LIMIT_FLAT_REL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum CriterionError {
    #[error("radial interval [{lo}, {hi}] must satisfy 0 <= lo < hi < 1")]
    BadInterval { lo: f64, hi: f64 },
    #[error("integrand not finite at r={radius}, theta={angle}")]
    NonFiniteIntegrand { radius: f64, angle: f64 },
    #[error("panel budget {budget} exhausted before the quadrature settled")]
    PanelBudget { budget: usize },
    #[error("bad quadrature spec: {0}")]
    BadQuad(String),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
}

/// Integrand selector for the radial-integral criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IntegralKind {
    /// |g'(re^it)| / nu(r)
    IT,
    /// |g(re^it)| / ((1-r^2) nu(r))
    IS,
    /// |g(re^it)| / nu(r)
    IB,
}

/// Expression selector for the pointwise quotient criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointwiseKind {
    /// mu |g| / nu
    K1,
    /// mu |g| / assoc(nu)
    K2,
    /// mu |g| / ((1-|z|^2) nu)
    K3,
    /// (1-|z|^2) mu |g| / assoc(nu)
    K4,
    /// (1-|z|^2) mu |g'| / assoc(nu)
    K5,
}

/// Asymptotic regime a criterion value was taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CriterionMode {
    Sup,
    /// Sup with mu identically 1, where the t-sup is an increasing limit.
    BoundaryOne,
    BoundaryLimit,
    DoubleLimit,
}

/// What a refinement history supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Finite,
    Divergent,
    ZeroLimit,
    NonzeroLimit,
    Inconclusive,
}

/// Argmax location of a sampled quantity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Witness {
    pub radius: f64,
    pub angle: f64,
}

/// A criterion value with the evidence that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub value: f64,
    pub mode: CriterionMode,
    pub witness: Witness,
    pub history: Vec<f64>,
    pub verdict: Verdict,
}

/// Panel quadrature parameters.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadSpec {
    /// Relative tolerance per panel.
    pub tol: f64,
    /// Gauss-Legendre nodes per panel.
    pub order: usize,
    /// Global panel budget per integral.
    pub max_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { tol: 1e-6, order: 16, max_panels: 1 << 16 }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<(), CriterionError> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(CriterionError::BadQuad("tol must be positive".into()));
        }
        if self.order < 2 || self.order > 64 {
            return Err(CriterionError::BadQuad("order must lie in 2..=64".into()));
        }
        if self.max_panels < 8 {
            return Err(CriterionError::BadQuad("max_panels must be at least 8".into()));
        }
        Ok(())
    }
}

/// How the associated weight is substituted in K2/K4/K5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AssocPolicy {
    /// Resolve from the weight: analytic witness, then property (U), then
    /// the two-sided sandwich.
    Auto,
    /// Substitute the weight itself (caller asserts it is admissible).
    ForceExact,
    /// Always evaluate both sandwich sides.
    ForceInterval,
}

/// What `AssocPolicy::Auto` resolved to for a given weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AssocResolution {
    /// Analytic witness: the associated weight equals the weight.
    Exact,
    /// Property (U): equal up to the essentiality constant.
    EquivalentUpToConstant,
    /// Neither: only the sandwich brackets it.
    Interval,
}

/// Resolution rule for substituting the associated weight.
pub fn resolve_assoc(nu: &RadialWeight) -> AssocResolution {
    if nu.has_analytic_witness() {
        AssocResolution::Exact
    } else if check_property_u(nu, 24).holds {
        AssocResolution::EquivalentUpToConstant
    } else {
        AssocResolution::Interval
    }
}

/// Level profile of the double-limit compactness quantity.
#[derive(Clone, Debug, Serialize)]
pub struct CompactnessProfile {
    /// Inner levels m, with t2 = 1 - 2^-m.
    pub levels: Vec<u32>,
    /// C(m): sup over t1 in (t2, 1) and theta of mu(t1) * integral(t2..t1).
    pub values: Vec<f64>,
    /// Intercept of a linear fit of C against 2^-m on the last 4 levels.
    pub extrapolated: f64,
    /// Argmax (t1, theta) of the deepest level.
    pub deepest: Witness,
    pub verdict: CompactnessVerdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CompactnessVerdict {
    CompactConsistent,
    NoncompactConsistent,
    Inconclusive,
}

/// View a double-limit profile as a criterion result: the extrapolated
/// boundary value with the per-level sups as history.
impl From<CompactnessProfile> for CriterionResult {
    fn from(p: CompactnessProfile) -> Self {
        CriterionResult {
            value: p.extrapolated,
            mode: CriterionMode::DoubleLimit,
            witness: p.deepest,
            history: p.values,
            verdict: match p.verdict {
                CompactnessVerdict::CompactConsistent => Verdict::ZeroLimit,
                CompactnessVerdict::NoncompactConsistent => Verdict::NonzeroLimit,
                CompactnessVerdict::Inconclusive => Verdict::Inconclusive,
            },
        }
    }
}

/// Classify a sup-mode refinement history.
///
/// Divergent needs sustained growth: either the value broke the cap while
/// still growing by a net factor across the last three levels, or the
/// increments stayed bounded below across the last four (the logarithmic
/// route, which never reaches the cap). Finite needs the tail settled to
/// relative tolerance. Everything else is Inconclusive.
pub fn classify_sup(value: f64, history: &[f64]) -> Verdict {
    if !value.is_finite() {
        return Verdict::Divergent;
    }
    let n = history.len();
    if n < 4 {
        let settled = n >= 2
            && (history[n - 1] - history[n - 2]).abs()
                <= STABLE_REL * history[n - 1].abs().max(1e-12);
        return if settled { Verdict::Finite } else { Verdict::Inconclusive };
    }
    if value > DIVERGENCE_CAP && history[n - 1] >= GROWTH_FACTOR * history[n - 3].max(1e-300) {
        return Verdict::Divergent;
    }
    if (n - 3..n).all(|i| history[i] - history[i - 1] >= INCREMENT_FLOOR) {
        return Verdict::Divergent;
    }
    if (history[n - 1] - history[n - 3]).abs() <= STABLE_REL * history[n - 1].abs().max(1e-12) {
        return Verdict::Finite;
    }
    Verdict::Inconclusive
}

/// Classify a boundary-limit history (per-level values, not running maxima).
pub fn classify_limit(history: &[f64]) -> Verdict {
    let n = history.len();
    if n < 4 {
        return Verdict::Inconclusive;
    }
    let tail = history[n - 1];
    if !tail.is_finite() {
        return Verdict::NonzeroLimit;
    }
    let decreasing = (n - 2..n).all(|i| history[i] <= history[i - 1] * (1.0 + 1e-9));
    if tail < LIMIT_ZERO_TOL && decreasing {
        return Verdict::ZeroLimit;
    }
    let last3 = &history[n - 3..];
    let hi = last3.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = last3.iter().cloned().fold(f64::INFINITY, f64::min);
    let flat = lo > 0.0 && hi / lo - 1.0 <= LIMIT_FLAT_REL;
    let growing = history[n - 1] >= GROWTH_FACTOR * history[n - 3].max(1e-300);
    if tail >= LIMIT_POSITIVE_FLOOR && (flat || growing) {
        return Verdict::NonzeroLimit;
    }
    Verdict::Inconclusive
}

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
fn gauss_legendre(order: usize) -> &'static [(f64, f64)] {
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static [(f64, f64)]>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    if let Some(rule) = map.get(&order) {
        return rule;
    }
    let mut rule = Vec::with_capacity(order);
    for i in 0..order {
        // Standard cosine initial guess, polished by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre_with_derivative(order, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(order, x);
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let leaked: &'static [(f64, f64)] = Box::leak(rule.into_boxed_slice());
    map.insert(order, leaked);
    leaked
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn integrand_at(
    kind: IntegralKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    theta: f64,
    r: f64,
) -> f64 {
    let z = Complex64::from_polar(r, theta);
    match kind {
        IntegralKind::IT => g.g_prime(z).norm() / nu.eval(r),
        IntegralKind::IS => g.g(z).norm() / (one_minus_r_sq(r) * nu.eval(r)),
        IntegralKind::IB => g.g(z).norm() / nu.eval(r),
    }
}

struct PanelBudget {
    used: usize,
    budget: usize,
}

fn panel_sum<F: Fn(f64) -> Result<f64, CriterionError>>(
    f: &F,
    a: f64,
    b: f64,
    rule: &[(f64, f64)],
) -> Result<f64, CriterionError> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in rule {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

fn adapt_panel<F: Fn(f64) -> Result<f64, CriterionError>>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    rule: &[(f64, f64)],
    tol: f64,
    budget: &mut PanelBudget,
) -> Result<f64, CriterionError> {
    budget.used += 2;
    if budget.used > budget.budget {
        return Err(CriterionError::PanelBudget { budget: budget.budget });
    }
    let mid = 0.5 * (a + b);
    let left = panel_sum(f, a, mid, rule)?;
    let right = panel_sum(f, mid, b, rule)?;
    let halves = left + right;
    if (whole - halves).abs() <= tol * halves.abs().max(1e-300) {
        return Ok(halves);
    }
    Ok(adapt_panel(f, a, mid, left, rule, tol, budget)?
        + adapt_panel(f, mid, b, right, rule, tol, budget)?)
}

/// Integral of the kind's integrand along the ray at `theta` over
/// [t_lo, t_hi], by adaptive Gauss panels seeded geometrically toward the
/// boundary end.
pub fn radial_integral(
    kind: IntegralKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    theta: f64,
    t_lo: f64,
    t_hi: f64,
    quad: &QuadSpec,
) -> Result<f64, CriterionError> {
    quad.validate()?;
    if !(0.0..1.0).contains(&t_lo) || !(t_lo < t_hi && t_hi < 1.0) {
        return Err(CriterionError::BadInterval { lo: t_lo, hi: t_hi });
    }
    let f = |r: f64| -> Result<f64, CriterionError> {
        let v = integrand_at(kind, g, nu, theta, r);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CriterionError::NonFiniteIntegrand { radius: r, angle: theta })
        }
    };
    let rule = gauss_legendre(quad.order);
    let mut budget = PanelBudget { used: 0, budget: quad.max_panels };

    // Seed panels geometrically toward t_hi, where the integrand peaks.
    let mut cuts = vec![t_lo];
    for j in (1..=6).rev() {
        cuts.push(t_hi - (t_hi - t_lo) * (0.5f64).powi(j));
    }
    cuts.push(t_hi);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let whole = panel_sum(&f, pair[0], pair[1], rule)?;
        total += adapt_panel(&f, pair[0], pair[1], whole, rule, quad.tol, &mut budget)?;
    }
    Ok(total)
}

/// Prefix integrals from 0 to each cut along one ray; cuts must ascend.
fn cumulative_along_ray(
    kind: IntegralKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    theta: f64,
    cuts: &[f64],
    quad: &QuadSpec,
) -> Result<Vec<f64>, CriterionError> {
    let mut out = Vec::with_capacity(cuts.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &t in cuts {
        if t > prev {
            acc += radial_integral(kind, g, nu, theta, prev, t, quad)?;
            prev = t;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Sup over dyadic t-levels and the angle grid of
/// mu(t) * integral_0^t integrand, with golden polish at the argmax.
///
/// The history holds the running scan maximum per integer dyadic level; the
/// polish refines the returned value and witness but stays out of the
/// history, since a polish lift reflects grid resolution, not growth.
/// With mu identically 1 the inner quantity is nondecreasing in t and the
/// mode is reported as BoundaryOne (the sup is the boundary limit).
pub fn boundedness_sup(
    kind: IntegralKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    grid: &GridSpec,
) -> Result<CriterionResult, CriterionError> {
    boundedness_sup_with(kind, g, nu, mu, grid, &QuadSpec::default())
}

/// `boundedness_sup` with an explicit quadrature plan.
pub fn boundedness_sup_with(
    kind: IntegralKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    grid: &GridSpec,
    quad: &QuadSpec,
) -> Result<CriterionResult, CriterionError> {
    grid.validate()?;
    quad.validate()?;
    let radii = grid.radii();
    let cuts: Vec<f64> = radii.iter().map(|rp| rp.r).collect();
    let thetas = grid.angles_for(g.real_coeffs());

    // Per angle: cumulative integrals at every cut, then mu-weighted values.
    let per_theta: Vec<Result<(Vec<f64>, f64, usize), CriterionError>> = thetas
        .par_iter()
        .map(|&th| {
            let prefix = cumulative_along_ray(kind, g, nu, th, &cuts, quad)?;
            let mut per_level = vec![f64::NEG_INFINITY; grid.radial_levels as usize + 1];
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (i, (&t, &integral)) in cuts.iter().zip(&prefix).enumerate() {
                let v = mu.eval(t) * integral;
                if !v.is_finite() {
                    return Err(CriterionError::NonFiniteIntegrand { radius: t, angle: th });
                }
                let first_level = radii[i].exponent.ceil() as usize;
                for slot in per_level.iter_mut().skip(first_level) {
                    *slot = slot.max(v);
                }
                if v > best.0 {
                    best = (v, i);
                }
            }
            Ok((per_level, best.0, best.1))
        })
        .collect();

    let mut history = vec![f64::NEG_INFINITY; grid.radial_levels as usize + 1];
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (k, res) in per_theta.into_iter().enumerate() {
        let (per_level, v, i) = res?;
        for (slot, lv) in history.iter_mut().zip(per_level) {
            *slot = slot.max(lv);
        }
        if v > best.0 {
            best = (v, i, k);
        }
    }
    for m in 1..history.len() {
        history[m] = history[m].max(history[m - 1]);
    }

    let (mut value, best_i, best_k) = best;
    let mut t_star = cuts[best_i];
    let mut theta_star = thetas[best_k];

    // Angular polish at the best level, then radial polish at that angle.
    let (th_lo, th_hi) = angle_bracket(&thetas, best_k, !g.real_coeffs());
    let polish_theta = |th: f64| match radial_integral(kind, g, nu, th, 0.0, t_star, quad) {
        Ok(integral) => mu.eval(t_star) * integral,
        Err(_) => f64::NEG_INFINITY,
    };
    if th_hi > th_lo && t_star > 0.0 {
        let (th, v) = golden_max(polish_theta, th_lo, th_hi, grid.refine_tol, 48);
        if v > value {
            value = v;
            theta_star = th;
        }
    }
    let t_lo_bracket = if best_i == 0 { cuts[0] } else { cuts[best_i - 1] };
    let t_hi_bracket = if best_i + 1 < cuts.len() { cuts[best_i + 1] } else { cuts[best_i] };
    let polish_t = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        match radial_integral(kind, g, nu, theta_star, 0.0, t, quad) {
            Ok(integral) => mu.eval(t) * integral,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    if t_hi_bracket > t_lo_bracket {
        let (t, v) = golden_max(polish_t, t_lo_bracket, t_hi_bracket, grid.refine_tol, 48);
        if v > value {
            value = v;
            t_star = t;
        }
    }

    let mode =
        if mu.is_constant_one() { CriterionMode::BoundaryOne } else { CriterionMode::Sup };
    let verdict = classify_sup(value, &history);
    Ok(CriterionResult {
        value,
        mode,
        witness: Witness { radius: t_star, angle: theta_star },
        history,
        verdict,
    })
}

/// Monomial upper bound for the associated weight, tabulated once and
/// evaluated pointwise.
struct SandwichUpper {
    powers: Vec<u32>,
    sups: Vec<f64>,
}

impl SandwichUpper {
    fn new(nu: &RadialWeight) -> Self {
        let powers = power_ladder(256);
        let sups = powers.iter().map(|&n| monomial_sup(nu, n)).collect();
        SandwichUpper { powers, sups }
    }

    fn eval(&self, r: f64) -> f64 {
        let mut best = f64::INFINITY;
        for (&n, &m_n) in self.powers.iter().zip(&self.sups) {
            let denom = r.powi(n as i32);
            if denom > 0.0 {
                best = best.min(m_n / denom);
            } else if n == 0 {
                best = best.min(m_n);
            }
        }
        best
    }
}

enum TildeSource<'a> {
    Weight(&'a RadialWeight),
    Upper(&'a SandwichUpper),
}

impl TildeSource<'_> {
    fn eval(&self, r: f64) -> f64 {
        match self {
            TildeSource::Weight(w) => w.eval(r),
            TildeSource::Upper(u) => u.eval(r),
        }
    }
}

fn pointwise_at(
    kind: PointwiseKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    tilde: &TildeSource<'_>,
    r: f64,
    theta: f64,
) -> f64 {
    let z = Complex64::from_polar(r, theta);
    match kind {
        PointwiseKind::K1 => mu.eval(r) * g.g(z).norm() / nu.eval(r),
        PointwiseKind::K2 => mu.eval(r) * g.g(z).norm() / tilde.eval(r),
        PointwiseKind::K3 => mu.eval(r) * g.g(z).norm() / (one_minus_r_sq(r) * nu.eval(r)),
        PointwiseKind::K4 => one_minus_r_sq(r) * mu.eval(r) * g.g(z).norm() / tilde.eval(r),
        PointwiseKind::K5 => one_minus_r_sq(r) * mu.eval(r) * g.g_prime(z).norm() / tilde.eval(r),
    }
}

/// Asymptotic mode of a pointwise criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointwiseMode {
    Sup,
    BoundaryLimit,
}

fn pointwise_variant(
    kind: PointwiseKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    tilde: &TildeSource<'_>,
    mode: PointwiseMode,
    grid: &GridSpec,
) -> CriterionResult {
    let expr =
        |r: f64, th: f64| pointwise_at(kind, g, nu, mu, tilde, r, th);
    match mode {
        PointwiseMode::Sup => match disk_sup(&expr, grid, g.real_coeffs()) {
            Ok(out) => {
                let verdict = classify_sup(out.value, &out.history);
                CriterionResult {
                    value: out.value,
                    mode: CriterionMode::Sup,
                    witness: Witness { radius: out.r, angle: out.theta },
                    history: out.history,
                    verdict,
                }
            }
            Err(GridError::NonFinite { r, theta }) => CriterionResult {
                value: f64::INFINITY,
                mode: CriterionMode::Sup,
                witness: Witness { radius: r, angle: theta },
                history: vec![f64::INFINITY],
                verdict: Verdict::Divergent,
            },
            Err(e) => panic!("invalid grid for pointwise criterion: {e}"),
        },
        PointwiseMode::BoundaryLimit => {
            let thetas = grid.angles_for(g.real_coeffs());
            let full_circle = !g.real_coeffs();
            let levels: Vec<u32> = (1..=grid.radial_levels).collect();
            let per_level: Vec<(f64, f64)> = levels
                .par_iter()
                .map(|&m| {
                    let r = dyadic_radius(f64::from(m));
                    let mut best = (f64::NEG_INFINITY, 0usize);
                    for (k, &th) in thetas.iter().enumerate() {
                        let v = expr(r, th);
                        if v > best.0 {
                            best = (v, k);
                        }
                    }
                    let (lo, hi) = angle_bracket(&thetas, best.1, full_circle);
                    let (th, v) = golden_max(|th| expr(r, th), lo, hi, grid.refine_tol, 48);
                    if v > best.0 {
                        (v, th)
                    } else {
                        (best.0, thetas[best.1])
                    }
                })
                .collect();
            let history: Vec<f64> = per_level.iter().map(|&(v, _)| v).collect();
            let (value, angle) = *per_level.last().expect("at least one radial level");
            let verdict = classify_limit(&history);
            CriterionResult {
                value,
                mode: CriterionMode::BoundaryLimit,
                witness: Witness { radius: dyadic_radius(f64::from(grid.radial_levels)), angle },
                history,
                verdict,
            }
        }
    }
}

/// Pointwise quotient criterion in sup or boundary-limit mode.
///
/// For the kinds that divide by the associated weight, the policy resolves
/// what to substitute. A weight with an analytic witness uses itself
/// exactly; a property-(U) weight uses itself up to its essentiality
/// constant; anything else is evaluated against both sandwich sides, and a
/// disagreement between the two verdicts is reported as Inconclusive.
pub fn pointwise_quantity(
    kind: PointwiseKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    mode: PointwiseMode,
    grid: &GridSpec,
    assoc: AssocPolicy,
) -> CriterionResult {
    grid.validate().expect("pointwise grid must be valid");
    let needs_assoc =
        matches!(kind, PointwiseKind::K2 | PointwiseKind::K4 | PointwiseKind::K5);
    let interval = needs_assoc
        && match assoc {
            AssocPolicy::Auto => resolve_assoc(nu) == AssocResolution::Interval,
            AssocPolicy::ForceExact => false,
            AssocPolicy::ForceInterval => true,
        };
    if !interval {
        return pointwise_variant(kind, g, nu, mu, &TildeSource::Weight(nu), mode, grid);
    }
    // Substituting nu itself (the lower sandwich side) overestimates the
    // quantity; the monomial upper bound underestimates it. Matching
    // verdicts decide; the reported value is the conservative one.
    let upper_variant = pointwise_variant(kind, g, nu, mu, &TildeSource::Weight(nu), mode, grid);
    let sandwich = SandwichUpper::new(nu);
    let lower_variant =
        pointwise_variant(kind, g, nu, mu, &TildeSource::Upper(&sandwich), mode, grid);
    let mut out = upper_variant;
    if lower_variant.verdict != out.verdict {
        out.verdict = Verdict::Inconclusive;
    }
    out
}

/// True when g vanishes to coefficient tolerance 1e-14.
pub fn sg_into_hinf_compact(g: &SymbolSpec) -> bool {
    g.coeffs().max_abs_coeff() <= 1e-14
}

/// Double-limit profile: for each inner level m (t2 = 1-2^-m), the sup over
/// a dyadic t1 sub-grid of (t2, 1) and over angles of
/// mu(t1) * integral_{t2}^{t1} integrand, golden-polished at the argmax.
pub fn compactness_double_limit(
    kind: IntegralKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    grid: &GridSpec,
) -> Result<CompactnessProfile, CriterionError> {
    compactness_double_limit_with(kind, g, nu, mu, grid, &QuadSpec::default())
}

/// `compactness_double_limit` with an explicit quadrature plan.
pub fn compactness_double_limit_with(
    kind: IntegralKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    grid: &GridSpec,
    quad: &QuadSpec,
) -> Result<CompactnessProfile, CriterionError> {
    grid.validate()?;
    quad.validate()?;
    const M_LO: u32 = 4;
    const M_HI: u32 = 12;
    /// Half-level reach of the t1 sub-grid past each t2 level.
    const T1_SPAN: u32 = 16;

    // One ascending exponent grid covers every (t2, t1) pair.
    let exps: Vec<f64> = (2 * M_LO..=2 * (M_HI + T1_SPAN / 2))
        .map(|j| f64::from(j) / 2.0)
        .collect();
    let cuts: Vec<f64> = exps.iter().map(|&e| dyadic_radius(e)).collect();
    let thetas = grid.angles_for(g.real_coeffs());
    let full_circle = !g.real_coeffs();
    let levels: Vec<u32> = (M_LO..=M_HI).collect();

    // Per angle: prefix integrals, then per-level maxima over the t1 grid.
    let per_theta: Vec<Result<Vec<(f64, usize)>, CriterionError>> = thetas
        .par_iter()
        .map(|&th| {
            let prefix = cumulative_along_ray(kind, g, nu, th, &cuts, quad)?;
            let at = |e: f64| -> (f64, f64) {
                let idx = ((e - f64::from(M_LO)) * 2.0).round() as usize;
                (cuts[idx], prefix[idx])
            };
            let mut rows = Vec::with_capacity(levels.len());
            for &m in &levels {
                let (_, base) = at(f64::from(m));
                let mut best = (f64::NEG_INFINITY, 0usize);
                for half in (2 * m + 1)..=(2 * m + T1_SPAN) {
                    let e1 = f64::from(half) / 2.0;
                    let idx = ((e1 - f64::from(M_LO)) * 2.0).round() as usize;
                    let v = mu.eval(cuts[idx]) * (prefix[idx] - base);
                    if !v.is_finite() {
                        return Err(CriterionError::NonFiniteIntegrand {
                            radius: cuts[idx],
                            angle: th,
                        });
                    }
                    if v > best.0 {
                        best = (v, idx);
                    }
                }
                rows.push(best);
            }
            Ok(rows)
        })
        .collect();

    let mut per_level: Vec<(f64, usize, usize)> = vec![(f64::NEG_INFINITY, 0, 0); levels.len()];
    for (k, res) in per_theta.into_iter().enumerate() {
        for (slot, (v, idx)) in per_level.iter_mut().zip(res?) {
            if v > slot.0 {
                *slot = (v, idx, k);
            }
        }
    }

    // Polish each level in theta, then in t1.
    let mut values = Vec::with_capacity(levels.len());
    let mut deepest = Witness { radius: 0.0, angle: 0.0 };
    for (li, &m) in levels.iter().enumerate() {
        let t2 = dyadic_radius(f64::from(m));
        let (mut value, t1_idx, th_idx) = per_level[li];
        let mut t1_star = cuts[t1_idx];
        let mut theta_star = thetas[th_idx];
        let eval_pair = |t1: f64, th: f64| match radial_integral(kind, g, nu, th, t2, t1, quad) {
            Ok(integral) => mu.eval(t1) * integral,
            Err(_) => f64::NEG_INFINITY,
        };
        let (th_lo, th_hi) = angle_bracket(&thetas, th_idx, full_circle);
        if th_hi > th_lo {
            let (th, v) = golden_max(|th| eval_pair(t1_star, th), th_lo, th_hi, grid.refine_tol, 48);
            if v > value {
                value = v;
                theta_star = th;
            }
        }
        let lo = cuts[t1_idx.saturating_sub(1)].max(t2 + (1.0 - t2) * 1e-6);
        let hi = cuts[(t1_idx + 1).min(cuts.len() - 1)];
        if hi > lo {
            let (t1, v) = golden_max(|t1| eval_pair(t1, theta_star), lo, hi, grid.refine_tol, 48);
            if v > value {
                value = v;
                t1_star = t1;
            }
        }
        deepest = Witness { radius: t1_star, angle: theta_star };
        values.push(value.max(0.0));
    }

    // Linear fit of C against x = 2^-m on the last four levels; the
    // intercept estimates the double limit.
    let tail = 4.min(values.len());
    let xs: Vec<f64> = levels[levels.len() - tail..]
        .iter()
        .map(|&m| (0.5f64).powi(m as i32))
        .collect();
    let ys = &values[values.len() - tail..];
    let n = tail as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let extrapolated = if denom.abs() > 1e-300 {
        ((sy * sxx - sx * sxy) / denom).max(0.0)
    } else {
        ys[tail - 1]
    };

    let first = values[0];
    let last = *values.last().expect("profile has levels");
    let tail_nonincreasing = values
        .windows(2)
        .skip(values.len().saturating_sub(5))
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let last3 = &values[values.len() - 3..];
    let hi3 = last3.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo3 = last3.iter().cloned().fold(f64::INFINITY, f64::min);
    let flat = lo3 > 0.0 && hi3 / lo3 - 1.0 <= LIMIT_FLAT_REL;
    let verdict = if last < 0.05 * first.max(1e-9) && tail_nonincreasing {
        CompactnessVerdict::CompactConsistent
    } else if last >= LIMIT_ZERO_TOL && flat {
        CompactnessVerdict::NoncompactConsistent
    } else {
        CompactnessVerdict::Inconclusive
    };

    Ok(CompactnessProfile { levels, values, extrapolated, deepest, verdict })
}
