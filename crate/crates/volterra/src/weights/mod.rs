//! Radial weights on the unit disk: catalog families, analytic witnesses,
//! dyadic property checks, and two-sided bounds on the associated weight.
//!
//! A weight here is radial, strictly positive, and nonincreasing in r.
//! Strict positivity is required (every criterion divides by the weight);
//! the taxonomy flags — typical, analytic witness, quasi-normal whitelist —
//! are metadata consumed by the criterion dispatch.

mod assoc;
mod dyadic;

pub use assoc::{
    associated_weight_bounds, essential_constant_estimate, lp_upper_bound, monomial_sup,
    AssociatedSandwich, LpSpec,
};
pub(crate) use assoc::power_ladder;
pub use dyadic::{check_property_l, check_property_u, is_normal, LReport, LTail, UReport};

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::one_minus_r_sq;

/// Largest admissible exponent parameter for `std:`/`log:` families.
const ALPHA_MAX: f64 = 256.0;
/// Nesting depth guard for the spec parser.
const MAX_PARSE_DEPTH: u32 = 64;
/// Stored witness length in even powers (z-degree 2·(len-1)).
const WITNESS_HALF_LEN: usize = 2049;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("malformed weight spec: {0}")]
    Malformed(String),
    #[error("unknown weight family `{0}`")]
    UnknownFamily(String),
    #[error("bad parameter for `{family}`: {reason}")]
    BadParameter { family: &'static str, reason: String },
    #[error("weight spec nests deeper than {MAX_PARSE_DEPTH}")]
    TooDeep,
    #[error("trailing input after weight spec: `{0}`")]
    Trailing(String),
    #[error("weight not strictly positive at r={r}")]
    NotPositive { r: f64 },
    #[error("weight increases near r={r}")]
    NotNonincreasing { r: f64 },
    #[error("weight claims to vanish at the boundary but does not decay on the sampled grid")]
    NotTypical,
    #[error("optimization degenerate: {0}")]
    Degenerate(String),
}

/// Weight given by arbitrary code; used for tests and experiments.
#[derive(Clone)]
pub struct CustomWeight {
    pub eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub label: String,
    pub typical: bool,
}

impl fmt::Debug for CustomWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomWeight")
            .field("label", &self.label)
            .field("typical", &self.typical)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum WeightFamily {
    /// The constant weight 1.
    One,
    /// `(1-r^2)^alpha`.
    Standard(f64),
    /// `(1 + log(1/(1-r^2)))^(-alpha)`.
    Log(f64),
    /// Pointwise product of weights.
    Product(Vec<RadialWeight>),
    /// `(1-r^2)` times the inner weight.
    OmegaOf(RadialWeight),
    Custom(CustomWeight),
}

struct Inner {
    family: WeightFamily,
    witness: OnceLock<Option<AnalyticWitness>>,
}

/// A radial, positive, nonincreasing weight on [0,1).
#[derive(Clone)]
pub struct RadialWeight {
    inner: Arc<Inner>,
}

impl fmt::Debug for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialWeight({self})")
    }
}

impl fmt::Display for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family() {
            WeightFamily::One => write!(f, "one"),
            WeightFamily::Standard(a) => write!(f, "std:{a}"),
            WeightFamily::Log(a) => write!(f, "log:{a}"),
            WeightFamily::Product(ws) => {
                // Canonical binary form, right-nested for longer lists.
                write!(f, "product:{},", ws[0])?;
                if ws.len() == 2 {
                    write!(f, "{}", ws[1])
                } else {
                    let rest = RadialWeight::product_of(ws[1..].to_vec()).expect("tail nonempty");
                    write!(f, "{rest}")
                }
            }
            WeightFamily::OmegaOf(m) => write!(f, "omega:{m}"),
            WeightFamily::Custom(c) => write!(f, "{}", c.label),
        }
    }
}

impl PartialEq for RadialWeight {
    fn eq(&self, other: &Self) -> bool {
        match (self.family(), other.family()) {
            (WeightFamily::One, WeightFamily::One) => true,
            (WeightFamily::Standard(a), WeightFamily::Standard(b)) => a == b,
            (WeightFamily::Log(a), WeightFamily::Log(b)) => a == b,
            (WeightFamily::Product(a), WeightFamily::Product(b)) => a == b,
            (WeightFamily::OmegaOf(a), WeightFamily::OmegaOf(b)) => a == b,
            (WeightFamily::Custom(a), WeightFamily::Custom(b)) => a.label == b.label,
            _ => false,
        }
    }
}

impl RadialWeight {
    fn from_family(family: WeightFamily) -> Self {
        RadialWeight { inner: Arc::new(Inner { family, witness: OnceLock::new() }) }
    }

    pub fn one() -> Self {
        Self::from_family(WeightFamily::One)
    }

    /// The standard weight `(1-r^2)^alpha`, alpha >= 0.
    pub fn standard(alpha: f64) -> Result<Self, WeightError> {
        if !alpha.is_finite() || alpha < 0.0 || alpha > ALPHA_MAX {
            return Err(WeightError::BadParameter {
                family: "std",
                reason: format!("alpha must be in [0, {ALPHA_MAX}], got {alpha}"),
            });
        }
        Ok(Self::from_family(WeightFamily::Standard(alpha)))
    }

    /// The logarithmic weight `(1 + log(1/(1-r^2)))^(-alpha)`, alpha > 0.
    pub fn log_weight(alpha: f64) -> Result<Self, WeightError> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha > ALPHA_MAX {
            return Err(WeightError::BadParameter {
                family: "log",
                reason: format!("alpha must be in (0, {ALPHA_MAX}], got {alpha}"),
            });
        }
        Ok(Self::from_family(WeightFamily::Log(alpha)))
    }

    /// Pointwise product of two or more weights.
    pub fn product_of(ws: Vec<RadialWeight>) -> Result<Self, WeightError> {
        match ws.len() {
            0 => Err(WeightError::Malformed("product of no weights".into())),
            1 => Ok(ws.into_iter().next().unwrap()),
            _ => Ok(Self::from_family(WeightFamily::Product(ws))),
        }
    }

    /// The boundary-scaled weight `omega(r) = (1-r^2) mu(r)`; always typical.
    pub fn omega_of(mu: &RadialWeight) -> Self {
        Self::from_family(WeightFamily::OmegaOf(mu.clone()))
    }

    /// Weight given by arbitrary code, validated on a sampled dyadic grid:
    /// strictly positive, nonincreasing (slack 1e-12), and decaying if it
    /// claims to be typical. A sampled check, not a proof.
    pub fn custom(
        label: impl Into<String>,
        typical: bool,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, WeightError> {
        let mut prev = f64::INFINITY;
        let mut at_zero = 0.0;
        let mut deepest = 0.0;
        for j in 0..=96 {
            let r = crate::grid::dyadic_radius(f64::from(j) / 4.0);
            let v = eval(r);
            if !(v > 0.0 && v.is_finite()) {
                return Err(WeightError::NotPositive { r });
            }
            if v > prev * (1.0 + 1e-12) {
                return Err(WeightError::NotNonincreasing { r });
            }
            if j == 0 {
                at_zero = v;
            }
            deepest = v;
            prev = v;
        }
        if typical && deepest > 0.5 * at_zero {
            return Err(WeightError::NotTypical);
        }
        Ok(Self::from_family(WeightFamily::Custom(CustomWeight {
            eval: Arc::new(eval),
            label: label.into(),
            typical,
        })))
    }

    pub fn family(&self) -> &WeightFamily {
        &self.inner.family
    }

    /// Evaluate the weight at radius r in [0, 1).
    pub fn eval(&self, r: f64) -> f64 {
        match &self.inner.family {
            WeightFamily::One => 1.0,
            WeightFamily::Standard(a) => one_minus_r_sq(r).powf(*a),
            WeightFamily::Log(a) => (1.0 - one_minus_r_sq(r).ln()).powf(-a),
            WeightFamily::Product(ws) => ws.iter().map(|w| w.eval(r)).product(),
            WeightFamily::OmegaOf(m) => one_minus_r_sq(r) * m.eval(r),
            WeightFamily::Custom(c) => (c.eval)(r),
        }
    }

    /// Whether the weight is identically 1 (selects the unweighted-space
    /// corollaries in the dispatch).
    pub fn is_constant_one(&self) -> bool {
        matches!(self.inner.family, WeightFamily::One)
            || matches!(self.inner.family, WeightFamily::Standard(a) if a == 0.0)
    }

    /// Whether the weight tends to 0 at the boundary.
    pub fn typical(&self) -> bool {
        match &self.inner.family {
            WeightFamily::One => false,
            WeightFamily::Standard(a) => *a > 0.0,
            WeightFamily::Log(_) => true,
            WeightFamily::Product(ws) => ws.iter().any(|w| w.typical()),
            WeightFamily::OmegaOf(_) => true,
            WeightFamily::Custom(c) => c.typical,
        }
    }

    /// Whether the family admits an analytic witness by construction.
    pub fn has_analytic_witness(&self) -> bool {
        match &self.inner.family {
            WeightFamily::One | WeightFamily::Standard(_) | WeightFamily::Log(_) => true,
            WeightFamily::Product(ws) => ws.iter().all(|w| w.has_analytic_witness()),
            WeightFamily::OmegaOf(m) => m.has_analytic_witness(),
            WeightFamily::Custom(_) => false,
        }
    }

    /// The analytic witness `f` with `nu(r) = 1/f(r)` and nonnegative
    /// coefficients, when the family provides one. Computed lazily and cached.
    pub fn analytic_witness(&self) -> Option<&AnalyticWitness> {
        self.inner
            .witness
            .get_or_init(|| AnalyticWitness::for_family(&self.inner.family))
            .as_ref()
    }

    /// Dyadic lower-ratio bound known by construction (the infimum side of
    /// the normality sandwich). Never decided numerically.
    fn dyadic_lower_by_construction(&self) -> bool {
        match &self.inner.family {
            WeightFamily::One | WeightFamily::Standard(_) | WeightFamily::Log(_) => true,
            WeightFamily::Product(ws) => ws.iter().all(|w| w.dyadic_lower_by_construction()),
            WeightFamily::OmegaOf(m) => m.dyadic_lower_by_construction(),
            WeightFamily::Custom(_) => false,
        }
    }

    /// Dyadic upper-ratio bound strictly below 1 known by construction.
    /// Ratios of nonincreasing weights never exceed 1, so for a product one
    /// strict factor suffices.
    fn dyadic_upper_by_construction(&self) -> bool {
        match &self.inner.family {
            WeightFamily::Standard(a) => *a > 0.0,
            WeightFamily::Product(ws) => ws.iter().any(|w| w.dyadic_upper_by_construction()),
            WeightFamily::OmegaOf(_) => true,
            _ => false,
        }
    }

    /// Quasi-normality is a function-space identity, not decidable by
    /// sampling; only weights normal by construction are admitted.
    pub fn quasi_normal_whitelisted(&self) -> bool {
        self.dyadic_lower_by_construction() && self.dyadic_upper_by_construction()
    }
}

/// Parse a weight spec:
/// `std:<alpha>` | `log:<alpha>` | `one` | `product:<spec>,<spec>` |
/// `omega:<spec>`.
pub fn make_weight(spec: &str) -> Result<RadialWeight, WeightError> {
    let mut toks = Tokens::new(spec);
    let w = parse_weight(&mut toks, 0)?;
    if let Some(rest) = toks.next() {
        return Err(WeightError::Trailing(rest.to_string()));
    }
    Ok(w)
}

struct Tokens<'a> {
    iter: std::str::Split<'a, fn(char) -> bool>,
}

impl<'a> Tokens<'a> {
    fn new(spec: &'a str) -> Self {
        Tokens { iter: spec.split((|c| c == ':' || c == ',') as fn(char) -> bool) }
    }

    fn next(&mut self) -> Option<&'a str> {
        self.iter.next().map(str::trim)
    }
}

fn parse_weight(toks: &mut Tokens<'_>, depth: u32) -> Result<RadialWeight, WeightError> {
    if depth >= MAX_PARSE_DEPTH {
        return Err(WeightError::TooDeep);
    }
    let head = toks.next().ok_or_else(|| WeightError::Malformed("empty spec".into()))?;
    match head {
        "one" => Ok(RadialWeight::one()),
        "std" => RadialWeight::standard(parse_param(toks, "std")?),
        "log" => RadialWeight::log_weight(parse_param(toks, "log")?),
        "product" => {
            let a = parse_weight(toks, depth + 1)?;
            let b = parse_weight(toks, depth + 1)?;
            RadialWeight::product_of(vec![a, b])
        }
        "omega" => Ok(RadialWeight::omega_of(&parse_weight(toks, depth + 1)?)),
        other => Err(WeightError::UnknownFamily(other.to_string())),
    }
}

fn parse_param(toks: &mut Tokens<'_>, family: &'static str) -> Result<f64, WeightError> {
    let tok = toks.next().ok_or(WeightError::BadParameter {
        family,
        reason: "missing parameter".into(),
    })?;
    let v: f64 = tok.parse().map_err(|_| WeightError::BadParameter {
        family,
        reason: format!("`{tok}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(WeightError::BadParameter { family, reason: format!("`{tok}` is not finite") });
    }
    Ok(v)
}

/// Taylor coefficients of the analytic function `f` behind an analytic
/// weight, `nu(r) = 1/f(r)`. All catalog witnesses are even in z, so only
/// the coefficients of z^(2k) are stored. Nonnegativity of the coefficients
/// forces `|f(z)| <= f(|z|)` identically.
#[derive(Clone, Debug)]
pub struct AnalyticWitness {
    even_coeffs: Vec<f64>,
}

impl AnalyticWitness {
    /// Coefficients of z^0, z^2, z^4, ...
    pub fn even_coeffs(&self) -> &[f64] {
        &self.even_coeffs
    }

    /// Horner evaluation of `f(r)` in the variable r^2.
    pub fn eval_radius(&self, r: f64) -> f64 {
        let x = r * r;
        let mut acc = 0.0;
        for &c in self.even_coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation of `f(z)` in the variable z^2.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let x = z * z;
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.even_coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn min_coeff(&self) -> f64 {
        self.even_coeffs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn from_even(even_coeffs: Vec<f64>) -> Option<Self> {
        // Guard the certificate: any negative coefficient (which the catalog
        // recurrences never produce in exact arithmetic) voids the witness
        // rather than mislabeling the weight analytic.
        if even_coeffs.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return None;
        }
        Some(AnalyticWitness { even_coeffs })
    }

    fn for_family(family: &WeightFamily) -> Option<AnalyticWitness> {
        match family {
            WeightFamily::One => Self::from_even(vec![1.0]),
            WeightFamily::Standard(a) if *a == 0.0 => Self::from_even(vec![1.0]),
            WeightFamily::Standard(a) => {
                // (1-w)^(-a) = sum b_k w^k with b_{k+1} = b_k (k+a)/(k+1).
                let mut coeffs = Vec::with_capacity(WITNESS_HALF_LEN);
                let mut b = 1.0;
                for k in 0..WITNESS_HALF_LEN {
                    coeffs.push(b);
                    b *= (k as f64 + a) / (k as f64 + 1.0);
                }
                Self::from_even(coeffs)
            }
            WeightFamily::Log(a) => {
                // f = (1+u)^a with u = log(1/(1-w)) = sum_{k>=1} w^k/k,
                // via the power recurrence
                // n f_n = sum_{k=1..n} (a k - (n - k)) u_k f_{n-k}.
                let n_len = WITNESS_HALF_LEN;
                let mut f = Vec::with_capacity(n_len);
                f.push(1.0);
                for n in 1..n_len {
                    let mut acc = 0.0;
                    for k in 1..=n {
                        let u_k = 1.0 / k as f64;
                        acc += (a * k as f64 - (n - k) as f64) * u_k * f[n - k];
                    }
                    f.push(acc / n as f64);
                }
                Self::from_even(f)
            }
            WeightFamily::Product(ws) => {
                let mut acc = vec![1.0];
                for w in ws {
                    let next = w.analytic_witness()?;
                    acc = convolve_trunc(&acc, next.even_coeffs(), WITNESS_HALF_LEN);
                }
                Self::from_even(acc)
            }
            WeightFamily::OmegaOf(m) => {
                // 1/(1-w) contributes the all-ones sequence.
                let inner = m.analytic_witness()?;
                let ones = vec![1.0; WITNESS_HALF_LEN];
                Self::from_even(convolve_trunc(inner.even_coeffs(), &ones, WITNESS_HALF_LEN))
            }
            WeightFamily::Custom(_) => None,
        }
    }
}

fn convolve_trunc(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    let n = out_len.min(a.len() + b.len() - 1);
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate() {
        if i >= n {
            break;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j >= n {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}
