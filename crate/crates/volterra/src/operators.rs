//! Symbols g and the integration operators they induce.
//!
//! A symbol is carried in two forms at once: a truncated coefficient series
//! (what the operators convolve against) and, for catalog entries, closed
//! forms for g, g' and g'' (what the criterion integrands evaluate, since
//! coefficient evaluation loses accuracy near the boundary). `make_symbol`
//! parses the catalog grammar; `apply_tg`/`apply_sg` act on series;
//! `opnorm_lower` searches test functions for operator-norm lower bounds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::criteria::{classify_sup, CriterionMode, CriterionResult, Verdict, Witness};
use crate::grid::{disk_sup, one_minus_r_sq, GridError, GridSpec};
use crate::series::{
    cauchy_product, differentiate, evaluate, volterra_antiderivative, weighted_bloch_norm,
    weighted_sup_norm, TruncatedSeries,
};
use crate::weights::RadialWeight;

/// Truncation degree of catalog coefficient series; chosen so the series
/// matches the closed form to well under 1e-8 everywhere on |z| <= 0.9.
const CATALOG_DEGREE: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum SymbolError {
    #[error("malformed symbol spec: {0}")]
    Malformed(String),
    #[error("unknown symbol `{0}`")]
    UnknownName(String),
    #[error("bad parameter for `{name}`: {reason}")]
    BadParameter { name: String, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
enum SymbolForm {
    Zero,
    Identity,
    NegLog,
    ExpZ,
    CayleyPow(f64),
    Poly,
}

/// An analytic symbol with coefficients, closed forms and catalog metadata.
#[derive(Clone, Debug)]
pub struct SymbolSpec {
    name: String,
    form: SymbolForm,
    coeffs: TruncatedSeries,
    d1: TruncatedSeries,
    d2: TruncatedSeries,
    univalent: bool,
    real_coeffs: bool,
}

impl std::fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name)
    }
}

impl PartialEq for SymbolSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl SymbolSpec {
    fn from_parts(name: String, form: SymbolForm, coeffs: TruncatedSeries, univalent: bool) -> Self {
        let d1 = differentiate(&coeffs);
        let d2 = differentiate(&d1);
        let real_coeffs = coeffs.has_real_coeffs();
        SymbolSpec { name, form, coeffs, d1, d2, univalent, real_coeffs }
    }

    /// Canonical spec string this symbol parses back from.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Taylor coefficients of g.
    pub fn coeffs(&self) -> &TruncatedSeries {
        &self.coeffs
    }

    /// Catalog metadata: whether g is marked univalent.
    pub fn univalent(&self) -> bool {
        self.univalent
    }

    /// All coefficients real (grids may then be halved by conjugation).
    pub fn real_coeffs(&self) -> bool {
        self.real_coeffs
    }

    /// g(z), closed form when cataloged.
    pub fn g(&self, z: Complex64) -> Complex64 {
        match self.form {
            SymbolForm::Zero => Complex64::new(0.0, 0.0),
            SymbolForm::Identity => z,
            SymbolForm::NegLog => -(Complex64::new(1.0, 0.0) - z).ln(),
            SymbolForm::ExpZ => z.exp(),
            SymbolForm::CayleyPow(gamma) => cayley(z).powf(gamma),
            SymbolForm::Poly => evaluate(&self.coeffs, z),
        }
    }

    /// g'(z), closed form when cataloged.
    pub fn g_prime(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self.form {
            SymbolForm::Zero => Complex64::new(0.0, 0.0),
            SymbolForm::Identity => one,
            SymbolForm::NegLog => one / (one - z),
            SymbolForm::ExpZ => z.exp(),
            SymbolForm::CayleyPow(gamma) => {
                2.0 * gamma * self.g(z) / ((one - z) * (one + z))
            }
            SymbolForm::Poly => evaluate(&self.d1, z),
        }
    }

    /// g''(z), closed form when cataloged.
    pub fn g_second(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self.form {
            SymbolForm::Zero | SymbolForm::Identity => Complex64::new(0.0, 0.0),
            SymbolForm::NegLog => {
                let inv = one / (one - z);
                inv * inv
            }
            SymbolForm::ExpZ => z.exp(),
            SymbolForm::CayleyPow(gamma) => {
                let denom = (one - z) * (one + z);
                4.0 * gamma * (gamma + z) * self.g(z) / (denom * denom)
            }
            SymbolForm::Poly => evaluate(&self.d2, z),
        }
    }
}

/// (1+z)/(1-z), the right-half-plane base of the cayleypow family.
fn cayley(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    (one + z) / (one - z)
}

/// Parse a symbol spec: `zero`, `identity`, `neglog1mz`, `expz`,
/// `cayleypow:<gamma>` or `poly:[c0,c1,...]` with complex entries.
pub fn make_symbol(spec: &str) -> Result<SymbolSpec, SymbolError> {
    let trimmed = spec.trim();
    if trimmed.is_empty() {
        return Err(SymbolError::Malformed("empty spec".into()));
    }
    let (head, param) = match trimmed.split_once(':') {
        Some((h, p)) => (h.trim(), Some(p.trim())),
        None => (trimmed, None),
    };
    match (head, param) {
        ("zero", None) => Ok(SymbolSpec::from_parts(
            "zero".into(),
            SymbolForm::Zero,
            TruncatedSeries::zero(),
            false,
        )),
        ("identity", None) => Ok(SymbolSpec::from_parts(
            "identity".into(),
            SymbolForm::Identity,
            TruncatedSeries::monomial(1),
            true,
        )),
        ("neglog1mz", None) => {
            // -log(1-z) = sum z^k/k.
            let mut coeffs = vec![Complex64::new(0.0, 0.0); CATALOG_DEGREE + 1];
            for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
                *c = Complex64::new(1.0 / k as f64, 0.0);
            }
            Ok(SymbolSpec::from_parts(
                "neglog1mz".into(),
                SymbolForm::NegLog,
                TruncatedSeries::new(coeffs).expect("finite by construction"),
                true,
            ))
        }
        ("expz", None) => {
            let mut coeffs = vec![Complex64::new(1.0, 0.0); CATALOG_DEGREE + 1];
            let mut factorial = 1.0f64;
            for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
                factorial *= k as f64;
                // 1/k! underflows to a subnormal and finally to 0 near
                // k = 170; both are fine as series coefficients.
                *c = Complex64::new(if factorial.is_finite() { 1.0 / factorial } else { 0.0 }, 0.0);
            }
            Ok(SymbolSpec::from_parts(
                "expz".into(),
                SymbolForm::ExpZ,
                TruncatedSeries::new(coeffs).expect("finite by construction"),
                false,
            ))
        }
        ("cayleypow", Some(p)) => {
            let gamma: f64 = p
                .parse()
                .map_err(|_| SymbolError::BadParameter {
                    name: "cayleypow".into(),
                    reason: format!("`{p}` is not a number"),
                })?;
            if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1.0) {
                return Err(SymbolError::BadParameter {
                    name: "cayleypow".into(),
                    reason: "gamma must lie in (0, 1]".into(),
                });
            }
            // ((1+z)/(1-z))^gamma satisfies (1-z^2) g' = 2 gamma g, giving
            // the coefficient recurrence below.
            let mut coeffs = vec![Complex64::new(0.0, 0.0); CATALOG_DEGREE + 1];
            coeffs[0] = Complex64::new(1.0, 0.0);
            coeffs[1] = Complex64::new(2.0 * gamma, 0.0);
            for n in 1..CATALOG_DEGREE {
                coeffs[n + 1] =
                    ((n as f64 - 1.0) * coeffs[n - 1] + 2.0 * gamma * coeffs[n]) / (n as f64 + 1.0);
            }
            Ok(SymbolSpec::from_parts(
                format!("cayleypow:{gamma}"),
                SymbolForm::CayleyPow(gamma),
                TruncatedSeries::new(coeffs).expect("finite by construction"),
                true,
            ))
        }
        ("poly", Some(p)) => {
            let inner = p
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| SymbolError::Malformed("poly wants `poly:[c0,c1,...]`".into()))?;
            let entries: Vec<Complex64> = if inner.trim().is_empty() {
                vec![Complex64::new(0.0, 0.0)]
            } else {
                inner.split(',').map(parse_complex).collect::<Result<_, _>>()?
            };
            let coeffs = TruncatedSeries::new(entries)
                .map_err(|e| SymbolError::Malformed(format!("poly coefficients: {e}")))?;
            let name = format!(
                "poly:[{}]",
                coeffs.coeffs().iter().map(|&c| format_complex(c)).collect::<Vec<_>>().join(",")
            );
            Ok(SymbolSpec::from_parts(name, SymbolForm::Poly, coeffs, false))
        }
        (other, None) => Err(SymbolError::UnknownName(other.into())),
        (other, Some(_)) if matches!(other, "zero" | "identity" | "neglog1mz" | "expz") => {
            Err(SymbolError::Malformed(format!("`{other}` takes no parameter")))
        }
        (other, Some(_)) => Err(SymbolError::UnknownName(other.into())),
    }
}

/// Parse one complex literal: `1.5`, `-2i`, `i`, `1+2i`, `3e-2-0.5i`.
fn parse_complex(s: &str) -> Result<Complex64, SymbolError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(SymbolError::Malformed("empty coefficient".into()));
    }
    let parse_part = |p: &str| -> Result<f64, SymbolError> {
        let v: f64 = p
            .parse()
            .map_err(|_| SymbolError::Malformed(format!("`{p}` is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SymbolError::Malformed(format!("`{p}` is not finite")))
        }
    };
    if let Some(body) = t.strip_suffix(['i', 'I']) {
        // Split off the imaginary part at the last sign that is neither
        // leading nor part of an exponent.
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            if matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                split = Some(i);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("", body),
        };
        let re = if re_str.is_empty() { 0.0 } else { parse_part(re_str)? };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => parse_part(other)?,
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(parse_part(t)?, 0.0))
    }
}

fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}{}i", c.re, c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

/// (T_g f)(z) = integral of f g' from 0 to z, as truncated coefficients.
pub fn apply_tg(f: &TruncatedSeries, g: &SymbolSpec, out_degree: usize) -> TruncatedSeries {
    assert!(out_degree >= 1, "out_degree must be at least 1");
    volterra_antiderivative(&cauchy_product(f, &g.d1, out_degree - 1))
}

/// (S_g f)(z) = integral of f' g from 0 to z, as truncated coefficients.
pub fn apply_sg(f: &TruncatedSeries, g: &SymbolSpec, out_degree: usize) -> TruncatedSeries {
    assert!(out_degree >= 1, "out_degree must be at least 1");
    volterra_antiderivative(&cauchy_product(&differentiate(f), &g.coeffs, out_degree - 1))
}

/// Which logarithmic derivative the Bloch seminorm is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LogDerivativeKind {
    /// (1-|z|^2) |g''/g'|, the log(g') Bloch seminorm.
    LogGPrime,
    /// (1-|z|^2) |g'/g|, the log(g) Bloch seminorm.
    LogG,
}

/// Sampled Bloch seminorm of log(g') or log(g).
///
/// A zero of the denominator on the grid poisons the expression and is
/// reported as Divergent with the offending point as witness.
pub fn log_bloch_seminorm(
    h_kind: LogDerivativeKind,
    g: &SymbolSpec,
    grid: &GridSpec,
) -> CriterionResult {
    let expr = |r: f64, th: f64| {
        let z = Complex64::from_polar(r, th);
        let (num, den) = match h_kind {
            LogDerivativeKind::LogGPrime => (g.g_second(z).norm(), g.g_prime(z).norm()),
            LogDerivativeKind::LogG => (g.g_prime(z).norm(), g.g(z).norm()),
        };
        one_minus_r_sq(r) * num / den
    };
    match disk_sup(&expr, grid, g.real_coeffs) {
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
        Err(e) => panic!("invalid grid for log-derivative seminorm: {e}"),
    }
}

/// Which operator is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OpKind {
    Tg,
    Sg,
}

/// Which norm a space carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpaceKind {
    Hinf,
    Bloch,
}

/// Budget and determinism knobs for the operator-norm search.
#[derive(Clone, Debug, Serialize)]
pub struct SearchSpec {
    pub seed: u64,
    pub restarts: usize,
    /// Degree of the test polynomials.
    pub degree: usize,
    pub random_candidates: usize,
    pub ascent_sweeps: usize,
    /// Shared grid for domain and codomain norms, so ratio noise cancels.
    pub grid: GridSpec,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            seed: 42,
            restarts: 3,
            degree: 16,
            random_candidates: 16,
            ascent_sweeps: 2,
            grid: GridSpec { radial_levels: 10, radial_substeps: 2, angles: 96, refine_tol: 1e-4 },
        }
    }
}

/// A lower operator-norm estimate with the witness that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub lower: f64,
    /// The matching criterion quantity, when a sufficiency criterion applies.
    pub criterion_upper: Option<f64>,
    pub witness: String,
}

fn space_norm(f: &TruncatedSeries, kind: SpaceKind, w: &RadialWeight, grid: &GridSpec) -> f64 {
    match kind {
        SpaceKind::Hinf => weighted_sup_norm(f, w, grid).value,
        SpaceKind::Bloch => weighted_bloch_norm(f, w, grid).value,
    }
}

/// Lower-bound the operator norm by maximizing ‖op f‖/‖f‖ over a test
/// family: monomials, seeded random polynomials on the sampled unit sphere,
/// and coordinate ascent from the best random start. Deterministic for a
/// fixed seed; restarts run in parallel and tie-break on restart order.
#[allow(clippy::too_many_arguments)]
pub fn opnorm_lower(
    op: OpKind,
    g: &SymbolSpec,
    nu: &RadialWeight,
    mu: &RadialWeight,
    domain: SpaceKind,
    codomain: SpaceKind,
    search: &SearchSpec,
) -> NormEstimate {
    let out_degree = search.degree + CATALOG_DEGREE;
    let ratio = |f: &TruncatedSeries| -> Option<f64> {
        let dnorm = space_norm(f, domain, nu, &search.grid);
        if !(dnorm > 1e-12) {
            return None;
        }
        let image = match op {
            OpKind::Tg => apply_tg(f, g, out_degree),
            OpKind::Sg => apply_sg(f, g, out_degree),
        };
        Some(space_norm(&image, codomain, mu, &search.grid) / dnorm)
    };

    let mut best = (0.0f64, String::from("none (all ratios zero)"));
    for n in 0..=search.degree {
        if let Some(v) = ratio(&TruncatedSeries::monomial(n)) {
            if v > best.0 {
                best = (v, format!("monomial z^{n}"));
            }
        }
    }

    let per_restart: Vec<(f64, String)> = (0..search.restarts)
        .into_par_iter()
        .map(|ri| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                search.seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(ri as u64 + 1)),
            );
            let mut local: (f64, String, Option<TruncatedSeries>) = (0.0, String::new(), None);
            for c in 0..search.random_candidates {
                let coeffs: Vec<Complex64> = (0..=search.degree)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
                    .collect();
                let f = TruncatedSeries::new(coeffs).expect("sampled coefficients are finite");
                if let Some(v) = ratio(&f) {
                    if v > local.0 {
                        local = (v, format!("random candidate {c} of restart {ri}"), Some(f));
                    }
                }
            }
            if let Some(mut f) = local.2.take() {
                let mut step = 0.25 * f.max_abs_coeff().max(1e-3);
                let mut improved = false;
                let dirs = [
                    Complex64::new(1.0, 0.0),
                    Complex64::new(-1.0, 0.0),
                    Complex64::new(0.0, 1.0),
                    Complex64::new(0.0, -1.0),
                ];
                for _ in 0..search.ascent_sweeps {
                    for k in 0..=search.degree {
                        for dir in dirs {
                            let mut cand = f.coeffs().to_vec();
                            cand[k] += step * dir;
                            let candidate =
                                TruncatedSeries::new(cand).expect("perturbation stays finite");
                            if let Some(v) = ratio(&candidate) {
                                if v > local.0 {
                                    local.0 = v;
                                    f = candidate;
                                    improved = true;
                                }
                            }
                        }
                    }
                    step *= 0.5;
                }
                if improved {
                    local.1 = format!("ascent from {}", local.1);
                }
            }
            (local.0, local.1)
        })
        .collect();

    for (v, w) in per_restart {
        if v > best.0 {
            best = (v, w);
        }
    }
    NormEstimate { lower: best.0, criterion_upper: None, witness: best.1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::make_weight;
    use proptest::prelude::*;
    use rand::Rng;

    const CATALOG: [&str; 6] =
        ["zero", "identity", "neglog1mz", "expz", "cayleypow:1", "cayleypow:0.5"];

    fn seeded_points(count: usize, max_radius: f64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..count)
            .map(|_| {
                let r = max_radius * rng.gen::<f64>();
                let th = std::f64::consts::TAU * rng.gen::<f64>();
                Complex64::from_polar(r, th)
            })
            .collect()
    }

    #[test]
    fn catalog_series_agrees_with_closed_forms() {
        for spec in CATALOG {
            let g = make_symbol(spec).unwrap();
            for z in seeded_points(200, 0.9) {
                let series = evaluate(g.coeffs(), z);
                let closed = g.g(z);
                assert!(
                    (series - closed).norm() <= 1e-8,
                    "{spec} at {z}: series {series} vs closed {closed}"
                );
            }
        }
    }

    #[test]
    fn closed_form_derivatives_match_coefficient_derivatives() {
        for spec in CATALOG {
            let g = make_symbol(spec).unwrap();
            for z in seeded_points(100, 0.8) {
                let d1 = evaluate(&g.d1, z);
                let d2 = evaluate(&g.d2, z);
                assert!((d1 - g.g_prime(z)).norm() <= 1e-7 * (1.0 + d1.norm()), "{spec} g'");
                assert!((d2 - g.g_second(z)).norm() <= 1e-6 * (1.0 + d2.norm()), "{spec} g''");
            }
        }
    }

    #[test]
    fn parser_rejects_junk() {
        for bad in [
            "", " ", "neglog", "poly", "poly:", "poly:[", "poly:[]extra", "poly:[1,", "poly:[1;2]",
            "cayleypow", "cayleypow:", "cayleypow:0", "cayleypow:1.5", "cayleypow:-1",
            "cayleypow:nan", "identity:1", "zero:0", "expz:2", "poly:[nan]", "poly:[1e999]",
            "poly:[1+2j]", "unknown",
        ] {
            assert!(make_symbol(bad).is_err(), "`{bad}` should not parse");
        }
    }

    #[test]
    fn poly_parser_handles_complex_literals() {
        let g = make_symbol("poly:[1, -2i, 1+2i, 3e-2-0.5i, i, -i, 0]").unwrap();
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -2.0),
            Complex64::new(1.0, 2.0),
            Complex64::new(3e-2, -0.5),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 0.0),
        ];
        assert_eq!(g.coeffs().coeffs(), &want);
    }

    #[test]
    fn tg_of_one_recovers_g_minus_g0() {
        for spec in ["neglog1mz", "expz", "cayleypow:0.5"] {
            let g = make_symbol(spec).unwrap();
            let image = apply_tg(&TruncatedSeries::one(), &g, CATALOG_DEGREE);
            assert_eq!(image.coeff(0), Complex64::new(0.0, 0.0), "{spec} constant term");
            for k in 1..=CATALOG_DEGREE {
                let got = image.coeff(k);
                let want = g.coeffs().coeff(k);
                // (c * k) / k is an IEEE round trip, exact only to 1 ulp.
                assert!(
                    (got - want).norm() <= 2.0 * f64::EPSILON * want.norm(),
                    "{spec} coefficient {k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn tg_with_identity_symbol_shifts_the_primitive() {
        let g = make_symbol("identity").unwrap();
        let f = make_symbol("poly:[3, 0, -1+1i]").unwrap().coeffs().clone();
        let image = apply_tg(&f, &g, 8);
        // g' = 1, so coefficient k+1 of the image is f_k/(k+1) exactly.
        assert_eq!(image.coeff(0), Complex64::new(0.0, 0.0));
        assert_eq!(image.coeff(1), Complex64::new(3.0, 0.0));
        assert_eq!(image.coeff(2), Complex64::new(0.0, 0.0));
        assert_eq!(image.coeff(3), Complex64::new(-1.0 / 3.0, 1.0 / 3.0));
    }

    #[test]
    fn hand_convolution_oracles() {
        // f = z, g = z^2: f g' = 2 z^2, T_g f = (2/3) z^3.
        let g = make_symbol("poly:[0,0,1]").unwrap();
        let f = TruncatedSeries::monomial(1);
        let image = apply_tg(&f, &g, 4);
        assert_eq!(image.coeff(3), Complex64::new(2.0 / 3.0, 0.0));
        assert_eq!(image.max_abs_coeff(), 2.0 / 3.0);

        // f = z^2, g = z: f' g = 2 z^2, S_g f = (2/3) z^3.
        let g = make_symbol("identity").unwrap();
        let f = TruncatedSeries::monomial(2);
        let image = apply_sg(&f, &g, 4);
        assert_eq!(image.coeff(3), Complex64::new(2.0 / 3.0, 0.0));
        assert_eq!(image.max_abs_coeff(), 2.0 / 3.0);
    }

    #[test]
    fn sg_with_unit_symbol_subtracts_the_value_at_zero() {
        let g = make_symbol("poly:[1]").unwrap();
        let f = make_symbol("poly:[5, 1, 0, 2i]").unwrap().coeffs().clone();
        let image = apply_sg(&f, &g, 6);
        assert_eq!(image.coeff(0), Complex64::new(0.0, 0.0));
        for k in 1..=3 {
            let got = image.coeff(k);
            let want = f.coeff(k);
            assert!((got - want).norm() <= 2.0 * f64::EPSILON * want.norm(), "coefficient {k}");
        }
    }

    #[test]
    fn sg_annihilates_constants_exactly() {
        let g = make_symbol("neglog1mz").unwrap();
        let f = TruncatedSeries::constant(Complex64::new(4.0, -7.0));
        let image = apply_sg(&f, &g, 32);
        assert_eq!(image.max_abs_coeff(), 0.0);
    }

    #[test]
    fn log_gprime_seminorm_of_neglog_is_two() {
        // g''/g' = 1/(1-z); sup (1-|z|^2)/|1-z| = sup (1+r) = 2.
        let g = make_symbol("neglog1mz").unwrap();
        let res = log_bloch_seminorm(LogDerivativeKind::LogGPrime, &g, &GridSpec::default());
        assert_eq!(res.verdict, Verdict::Finite);
        assert!((1.95..=2.0).contains(&res.value), "got {}", res.value);
        assert!(res.witness.angle.abs() < 1e-6, "max sits on the positive axis");
    }

    #[test]
    fn log_gprime_seminorm_of_identity_is_zero() {
        let g = make_symbol("identity").unwrap();
        let res = log_bloch_seminorm(LogDerivativeKind::LogGPrime, &g, &GridSpec::default());
        assert_eq!(res.verdict, Verdict::Finite);
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn log_g_seminorm_of_identity_diverges_at_the_origin() {
        // |g'/g| = 1/|z| has a pole at 0, which sits on the grid.
        let g = make_symbol("identity").unwrap();
        let res = log_bloch_seminorm(LogDerivativeKind::LogG, &g, &GridSpec::default());
        assert_eq!(res.verdict, Verdict::Divergent);
        assert_eq!(res.witness.radius, 0.0);
    }

    #[test]
    fn univalent_catalog_symbols_have_finite_log_gprime_seminorm() {
        for spec in CATALOG {
            let g = make_symbol(spec).unwrap();
            if !g.univalent() {
                continue;
            }
            let res = log_bloch_seminorm(LogDerivativeKind::LogGPrime, &g, &GridSpec::default());
            assert_eq!(res.verdict, Verdict::Finite, "{spec}: {res:?}");
        }
    }

    #[test]
    fn opnorm_of_zero_symbol_is_zero() {
        let nu = make_weight("std:1").unwrap();
        let g = make_symbol("zero").unwrap();
        let search = SearchSpec { restarts: 1, degree: 4, random_candidates: 4, ..Default::default() };
        let est =
            opnorm_lower(OpKind::Tg, &g, &nu, &nu, SpaceKind::Hinf, SpaceKind::Hinf, &search);
        assert_eq!(est.lower, 0.0);
    }

    #[test]
    fn opnorm_lower_for_neglog_meets_the_axis_oracle() {
        // Witness f = 1: ratio = ‖g - g(0)‖ = max_t (1-t^2) log(1/(1-t)),
        // which the 1-d oracle puts at 0.6140432240051007.
        let nu = make_weight("std:1").unwrap();
        let g = make_symbol("neglog1mz").unwrap();
        let est = opnorm_lower(
            OpKind::Tg,
            &g,
            &nu,
            &nu,
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            &SearchSpec::default(),
        );
        assert!(est.lower >= 0.6140432240051007 * (1.0 - 1e-4), "got {}", est.lower);
        // One-sided domination: the norm is at most the theorem quantity,
        // about 1.0174 for these weights.
        assert!(est.lower <= 1.0174 * 1.01, "got {}", est.lower);
    }

    #[test]
    fn opnorm_lower_for_unit_symbol_sg_sits_in_the_projection_bracket() {
        // S_g with g = 1 maps f to f - f(0): norm between 1 and 2.
        let nu = make_weight("std:1").unwrap();
        let g = make_symbol("poly:[1]").unwrap();
        let est = opnorm_lower(
            OpKind::Sg,
            &g,
            &nu,
            &nu,
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            &SearchSpec::default(),
        );
        assert!(est.lower >= 1.0 - 1e-9, "got {}", est.lower);
        assert!(est.lower <= 2.0 + 1e-3, "got {}", est.lower);
    }

    #[test]
    fn opnorm_search_is_deterministic() {
        let nu = make_weight("std:1").unwrap();
        let mu = make_weight("std:2").unwrap();
        let g = make_symbol("expz").unwrap();
        let search = SearchSpec { restarts: 2, degree: 6, random_candidates: 6, ..Default::default() };
        let a = opnorm_lower(OpKind::Sg, &g, &nu, &mu, SpaceKind::Hinf, SpaceKind::Bloch, &search);
        let b = opnorm_lower(OpKind::Sg, &g, &nu, &mu, SpaceKind::Hinf, SpaceKind::Bloch, &search);
        assert_eq!(a.lower.to_bits(), b.lower.to_bits());
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn bloch_norm_of_sg_image_matches_the_multiplier_reduction() {
        // (S_g f)(0) = 0 and (S_g f)' = g f', so the Bloch norm of the image
        // equals the sampled sup of mu |g f'|.
        let g = make_symbol("expz").unwrap();
        let mu = make_weight("std:1").unwrap();
        let f = {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let coeffs: Vec<Complex64> = (0..=12)
                .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
                .collect();
            TruncatedSeries::new(coeffs).unwrap()
        };
        let grid = GridSpec { radial_levels: 10, radial_substeps: 2, angles: 128, refine_tol: 1e-5 };
        let image = apply_sg(&f, &g, 12 + 200);
        let lhs = weighted_bloch_norm(&image, &mu, &grid).value;
        let fp = differentiate(&f);
        let rhs = crate::grid::disk_sup(
            &|r: f64, th: f64| {
                let z = Complex64::from_polar(r, th);
                mu.eval(r) * (g.g(z) * evaluate(&fp, z)).norm()
            },
            &grid,
            false,
        )
        .unwrap()
        .value;
        assert!((lhs - rhs).abs() <= 1e-6 * rhs, "bloch {lhs} vs multiplier sup {rhs}");
    }

    #[test]
    fn derivative_growth_constant_stays_small_on_random_polynomials() {
        // sup nu (1-|z|^2) |f'| <= C ‖f‖ for one fixed C across the sample.
        let nu = make_weight("std:1").unwrap();
        let grid = GridSpec { radial_levels: 10, radial_substeps: 2, angles: 64, refine_tol: 1e-4 };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let degree = 1 + rng.gen_range(0..32usize);
            let coeffs: Vec<Complex64> = (0..=degree)
                .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
                .collect();
            let f = TruncatedSeries::new(coeffs).unwrap();
            let norm = weighted_sup_norm(&f, &nu, &grid).value;
            if norm < 1e-12 {
                continue;
            }
            let fp = differentiate(&f);
            let dsup = crate::grid::disk_sup(
                &|r: f64, th: f64| {
                    let z = Complex64::from_polar(r, th);
                    nu.eval(r) * one_minus_r_sq(r) * evaluate(&fp, z).norm()
                },
                &grid,
                false,
            )
            .unwrap()
            .value;
            worst = worst.max(dsup / norm);
        }
        assert!(worst <= 20.0, "derivative growth constant blew up: {worst}");
        assert!(worst >= 0.5, "suspiciously small constant: {worst}");
    }

    fn arb_series(max_degree: usize) -> impl Strategy<Value = TruncatedSeries> {
        proptest::collection::vec((-8.0f64..8.0, -8.0f64..8.0), 1..=max_degree + 1)
            .prop_map(|parts| {
                let coeffs = parts.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
                TruncatedSeries::new(coeffs).expect("bounded coefficients are finite")
            })
    }

    proptest! {
        #[test]
        fn factorization_identity_for_sg(f in arb_series(12)) {
            // (S_g f)' = g f' on coefficients, up to the IEEE round trip of
            // dividing and re-multiplying by k.
            let g = make_symbol("expz").unwrap();
            let out = 48;
            let lhs = differentiate(&apply_sg(&f, &g, out));
            let rhs = cauchy_product(&differentiate(&f), g.coeffs(), out - 1);
            for k in 0..=out - 1 {
                let (a, b) = (lhs.coeff(k), rhs.coeff(k));
                prop_assert!(
                    (a - b).norm() <= 2.0 * f64::EPSILON * b.norm(),
                    "coefficient {}: {} vs {}", k, a, b
                );
            }
        }

        #[test]
        fn poly_display_round_trips(parts in proptest::collection::vec(
            (-1e6f64..1e6, -1e6f64..1e6), 1..8)) {
            let coeffs: Vec<Complex64> =
                parts.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            let name = format!(
                "poly:[{}]",
                coeffs.iter().map(|&c| format_complex(c)).collect::<Vec<_>>().join(",")
            );
            let parsed = make_symbol(&name).unwrap();
            prop_assert_eq!(parsed.coeffs().coeffs(), &coeffs[..]);
            prop_assert_eq!(parsed.name(), name.as_str());
        }

        #[test]
        fn symbol_parser_never_panics(spec in "\\PC*") {
            let _ = make_symbol(&spec);
        }
    }
}
