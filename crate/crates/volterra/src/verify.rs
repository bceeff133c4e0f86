//! Per-case reports: every applicable criterion, the hypothesis flags that
//! gate it, a direct operator-norm estimate, and the cross-checks between
//! them.
//!
//! The criterion catalog is a fixed dispatch on (operator, domain, codomain,
//! question). Each entry knows the hypotheses under which it characterizes
//! the answer ("iff") and whether it still decides one direction without
//! them ("sufficient"). Criteria whose hypotheses fail are listed as not
//! applicable with the missing hypotheses named, and never evaluated.
//! Disagreement between two applicable characterizations is the primary
//! self-check and is surfaced as a consistency flag.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{
    boundedness_sup_with, compactness_double_limit_with, pointwise_quantity,
    sg_into_hinf_compact, AssocPolicy, CriterionError, CriterionMode, CriterionResult,
    IntegralKind, PointwiseKind, PointwiseMode, QuadSpec, Verdict, Witness,
};
use crate::grid::GridSpec;
use crate::operators::{
    log_bloch_seminorm, make_symbol, opnorm_lower, LogDerivativeKind, NormEstimate, OpKind,
    SearchSpec, SpaceKind, SymbolError, SymbolSpec,
};
use crate::weights::{check_property_u, make_weight, RadialWeight, WeightError};

/// Schema tag stamped into every JSON report.
pub const REPORT_SCHEMA: &str = "volterra-report/1";

/// Slack factor for the lower-vs-upper norm cross-check: both sides are
/// sampled sups, so the lower estimate may poke past the upper one by grid
/// resolution, never by more than a percent.
const NORM_CHECK_SLACK: f64 = 1.01;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown operator `{0}` (expected tg or sg)")]
    BadOp(String),
    #[error("unknown space `{0}` (expected hinf or bloch)")]
    BadSpace(String),
    #[error("unknown question `{0}` (expected bounded or compact)")]
    BadQuestion(String),
    #[error("unknown format `{0}` (expected json, csv or markdown)")]
    BadFormat(String),
    #[error("no criterion catalog for {op:?}: {domain:?} -> {codomain:?}")]
    UnsupportedCase { op: OpKind, domain: SpaceKind, codomain: SpaceKind },
    #[error("symbol: {0}")]
    Symbol(#[from] SymbolError),
    #[error("weight: {0}")]
    Weight(#[from] WeightError),
    #[error("config: {0}")]
    Config(String),
    #[error("config json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which question a case asks of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Question {
    Bounded,
    Compact,
}

/// One fully resolved case: operator, symbol, weights, spaces, question.
#[derive(Clone, Debug)]
pub struct CaseSpec {
    op: OpKind,
    g: SymbolSpec,
    nu: RadialWeight,
    mu: RadialWeight,
    domain: SpaceKind,
    codomain: SpaceKind,
    question: Question,
}

impl CaseSpec {
    /// Build a case, rejecting operator/space combinations the criterion
    /// catalog does not cover (T_g is cataloged on the sup-norm pair only).
    pub fn new(
        op: OpKind,
        g: SymbolSpec,
        nu: RadialWeight,
        mu: RadialWeight,
        domain: SpaceKind,
        codomain: SpaceKind,
        question: Question,
    ) -> Result<Self, VerifyError> {
        let supported = match op {
            OpKind::Tg => domain == SpaceKind::Hinf && codomain == SpaceKind::Hinf,
            OpKind::Sg => true,
        };
        if !supported {
            return Err(VerifyError::UnsupportedCase { op, domain, codomain });
        }
        Ok(CaseSpec { op, g, nu, mu, domain, codomain, question })
    }

    pub fn question(&self) -> Question {
        self.question
    }

    pub fn op(&self) -> OpKind {
        self.op
    }

    pub fn symbol(&self) -> &SymbolSpec {
        &self.g
    }

    pub fn nu(&self) -> &RadialWeight {
        &self.nu
    }

    pub fn mu(&self) -> &RadialWeight {
        &self.mu
    }

    pub fn domain(&self) -> SpaceKind {
        self.domain
    }

    pub fn codomain(&self) -> SpaceKind {
        self.codomain
    }
}

/// Knobs shared by every evaluation a case performs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub quad: QuadSpec,
    pub search: SearchSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSpec::default(),
            quad: QuadSpec::default(),
            search: SearchSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        self.grid.validate().map_err(|e| VerifyError::Config(e.to_string()))?;
        if self.grid.radial_levels < 6 {
            return Err(VerifyError::Config("grid needs at least 6 radial levels".into()));
        }
        self.quad.validate().map_err(|e| VerifyError::Config(e.to_string()))?;
        if self.search.restarts == 0 || self.search.degree == 0 {
            return Err(VerifyError::Config("norm search needs restarts and degree >= 1".into()));
        }
        self.search.grid.validate().map_err(|e| VerifyError::Config(e.to_string()))
    }
}

/// Hypotheses the dispatch gates on, evaluated once per case.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisFlags {
    /// Sampled Bloch-seminorm verdict for log(g'); Finite means it holds.
    pub log_gprime_in_bloch: Verdict,
    /// Sampled Bloch-seminorm verdict for log(g).
    pub log_g_in_bloch: Verdict,
    /// Catalog flag; univalence implies log(g') has finite Bloch seminorm.
    pub g_univalent: bool,
    pub nu_analytic: bool,
    pub nu_property_u: bool,
    pub nu_quasi_normal: bool,
    pub mu_quasi_normal: bool,
    pub mu_constant_one: bool,
}

impl HypothesisFlags {
    fn log_gprime_ok(&self) -> bool {
        self.g_univalent || self.log_gprime_in_bloch == Verdict::Finite
    }

    fn log_g_ok(&self) -> bool {
        self.log_g_in_bloch == Verdict::Finite
    }
}

/// Whether a criterion decides the case, and in which direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Applicability {
    /// Hypotheses hold; the criterion characterizes the answer.
    Iff,
    /// The quantity still bounds one direction without the hypotheses.
    SufficientOnly,
    /// Hypotheses failed; not evaluated.
    NotApplicable { missing: Vec<String> },
}

/// One criterion entry of a report.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionRow {
    pub id: String,
    pub quantity: String,
    pub applicability: Applicability,
    pub result: Option<CriterionResult>,
}

/// Cross-checks between independent computations of the same case.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyFlags {
    /// No two definite verdicts point in opposite directions.
    pub equivalent_criteria_agree: bool,
    /// lower norm estimate <= criterion upper bound (with sampling slack);
    /// absent when no constant-free upper bound applies.
    pub norm_lower_within_upper: Option<bool>,
}

/// The answer a report commits to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OverallVerdict {
    Bounded,
    Unbounded,
    Compact,
    NotCompact,
    Inconclusive,
}

impl OverallVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            OverallVerdict::Bounded => "bounded",
            OverallVerdict::Unbounded => "unbounded",
            OverallVerdict::Compact => "compact",
            OverallVerdict::NotCompact => "not-compact",
            OverallVerdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::str::FromStr for OverallVerdict {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, VerifyError> {
        match s {
            "bounded" => Ok(OverallVerdict::Bounded),
            "unbounded" => Ok(OverallVerdict::Unbounded),
            "compact" => Ok(OverallVerdict::Compact),
            "not-compact" => Ok(OverallVerdict::NotCompact),
            "inconclusive" => Ok(OverallVerdict::Inconclusive),
            other => Err(VerifyError::Config(format!("unknown expected verdict `{other}`"))),
        }
    }
}

/// Spec strings of a case, as they round-trip through configs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseDescription {
    pub op: String,
    pub symbol: String,
    pub nu: String,
    pub mu: String,
    pub domain: String,
    pub codomain: String,
    pub question: String,
}

/// Everything run_case learned about one case.
#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub schema: &'static str,
    pub case: CaseDescription,
    pub hypotheses: HypothesisFlags,
    pub criteria: Vec<CriterionRow>,
    pub norm: NormEstimate,
    pub consistency: ConsistencyFlags,
    pub verdict: OverallVerdict,
    /// The statement id the verdict rests on, or "none" when inconclusive.
    pub governing: String,
    pub notes: Vec<String>,
}

fn op_str(op: OpKind) -> &'static str {
    match op {
        OpKind::Tg => "tg",
        OpKind::Sg => "sg",
    }
}

fn space_str(s: SpaceKind) -> &'static str {
    match s {
        SpaceKind::Hinf => "hinf",
        SpaceKind::Bloch => "bloch",
    }
}

fn question_str(q: Question) -> &'static str {
    match q {
        Question::Bounded => "bounded",
        Question::Compact => "compact",
    }
}

fn describe(case: &CaseSpec) -> CaseDescription {
    CaseDescription {
        op: op_str(case.op).into(),
        symbol: case.g.name().into(),
        nu: case.nu.to_string(),
        mu: case.mu.to_string(),
        domain: space_str(case.domain).into(),
        codomain: space_str(case.codomain).into(),
        question: question_str(case.question).into(),
    }
}

fn hypothesis_flags(case: &CaseSpec, grid: &GridSpec) -> HypothesisFlags {
    HypothesisFlags {
        log_gprime_in_bloch: log_bloch_seminorm(LogDerivativeKind::LogGPrime, &case.g, grid)
            .verdict,
        log_g_in_bloch: log_bloch_seminorm(LogDerivativeKind::LogG, &case.g, grid).verdict,
        g_univalent: case.g.univalent(),
        nu_analytic: case.nu.has_analytic_witness(),
        nu_property_u: check_property_u(&case.nu, 24).holds,
        nu_quasi_normal: case.nu.quasi_normal_whitelisted(),
        mu_quasi_normal: case.mu.quasi_normal_whitelisted(),
        mu_constant_one: case.mu.is_constant_one(),
    }
}

/// Iff when every hypothesis holds, else the missing ones by name.
fn gate(reqs: &[(bool, &str)]) -> Applicability {
    let missing: Vec<String> =
        reqs.iter().filter(|(ok, _)| !ok).map(|(_, name)| (*name).to_string()).collect();
    if missing.is_empty() {
        Applicability::Iff
    } else {
        Applicability::NotApplicable { missing }
    }
}

fn sup_row(kind: IntegralKind, case: &CaseSpec, config: &RunConfig) -> CriterionResult {
    match boundedness_sup_with(kind, &case.g, &case.nu, &case.mu, &config.grid, &config.quad) {
        Ok(res) => res,
        Err(CriterionError::NonFiniteIntegrand { radius, angle }) => CriterionResult {
            value: f64::INFINITY,
            mode: CriterionMode::Sup,
            witness: Witness { radius, angle },
            history: vec![f64::INFINITY],
            verdict: Verdict::Divergent,
        },
        Err(_) => inconclusive_result(CriterionMode::Sup),
    }
}

fn limit_row(kind: IntegralKind, case: &CaseSpec, config: &RunConfig) -> CriterionResult {
    match compactness_double_limit_with(
        kind,
        &case.g,
        &case.nu,
        &case.mu,
        &config.grid,
        &config.quad,
    ) {
        Ok(p) => p.into(),
        Err(CriterionError::NonFiniteIntegrand { radius, angle }) => CriterionResult {
            value: f64::INFINITY,
            mode: CriterionMode::DoubleLimit,
            witness: Witness { radius, angle },
            history: vec![f64::INFINITY],
            verdict: Verdict::NonzeroLimit,
        },
        Err(_) => inconclusive_result(CriterionMode::DoubleLimit),
    }
}

/// Quadrature gave up; decides nothing and conflicts with nothing.
fn inconclusive_result(mode: CriterionMode) -> CriterionResult {
    CriterionResult {
        value: f64::NAN,
        mode,
        witness: Witness { radius: 0.0, angle: 0.0 },
        history: Vec::new(),
        verdict: Verdict::Inconclusive,
    }
}

fn pointwise_row(
    kind: PointwiseKind,
    mode: PointwiseMode,
    case: &CaseSpec,
    config: &RunConfig,
) -> CriterionResult {
    pointwise_quantity(kind, &case.g, &case.nu, &case.mu, mode, &config.grid, AssocPolicy::Auto)
}

/// Coefficient test for compactness into the unweighted sup-norm space.
fn zero_symbol_row(g: &SymbolSpec) -> CriterionResult {
    let value = g.coeffs().max_abs_coeff();
    CriterionResult {
        value,
        mode: CriterionMode::Sup,
        witness: Witness { radius: 0.0, angle: 0.0 },
        history: vec![value],
        verdict: if sg_into_hinf_compact(g) { Verdict::ZeroLimit } else { Verdict::NonzeroLimit },
    }
}

fn row(
    id: &str,
    quantity: &str,
    applicability: Applicability,
    result: Option<CriterionResult>,
) -> CriterionRow {
    CriterionRow { id: id.into(), quantity: quantity.into(), applicability, result }
}

/// The dispatch table. Rows are pushed in governing-priority order: the
/// first applicable row with a definite verdict decides the case.
fn criterion_rows(case: &CaseSpec, h: &HypothesisFlags, config: &RunConfig) -> Vec<CriterionRow> {
    const IT_SUP: &str = "sup over t, theta of mu(t) * integral of |g'|/nu";
    const IS_SUP: &str = "sup over t, theta of mu(t) * integral of |g|/((1-r^2) nu)";
    const IB_SUP: &str = "sup over t, theta of mu(t) * integral of |g|/nu";
    const IT_LIM: &str = "double limit of mu(t1) * integral of |g'|/nu over (t2, t1)";
    const IS_LIM: &str = "double limit of mu(t1) * integral of |g|/((1-r^2) nu) over (t2, t1)";
    const IB_LIM: &str = "double limit of mu(t1) * integral of |g|/nu over (t2, t1)";
    const K1_SUP: &str = "sup of mu |g| / nu";
    const K1_LIM: &str = "boundary limit of mu |g| / nu";
    const K2_SUP: &str = "sup of mu |g| / assoc(nu)";
    const K2_LIM: &str = "boundary limit of mu |g| / assoc(nu)";
    const K3_SUP: &str = "sup of mu |g| / ((1-|z|^2) nu)";
    const K3_LIM: &str = "boundary limit of mu |g| / ((1-|z|^2) nu)";
    const K4_SUP: &str = "sup of (1-|z|^2) mu |g| / assoc(nu)";
    const K4_LIM: &str = "boundary limit of (1-|z|^2) mu |g| / assoc(nu)";
    const K5_SUP: &str = "sup of (1-|z|^2) mu |g'| / assoc(nu)";
    const K5_LIM: &str = "boundary limit of (1-|z|^2) mu |g'| / assoc(nu)";
    const COEFF: &str = "largest coefficient magnitude of g";

    let mut rows = Vec::new();
    match (case.op, case.domain, case.codomain, case.question) {
        (OpKind::Tg, SpaceKind::Hinf, SpaceKind::Hinf, Question::Bounded) => {
            // The integral condition is a characterization under the log
            // and analytic hypotheses, and stays sufficient without them.
            let iff = h.log_gprime_ok() && h.nu_analytic;
            let id = if !iff {
                "re1"
            } else if h.mu_constant_one {
                "cor1"
            } else {
                "thm1"
            };
            let app = if iff { Applicability::Iff } else { Applicability::SufficientOnly };
            rows.push(row(id, IT_SUP, app, Some(sup_row(IntegralKind::IT, case, config))));

            let app = gate(&[(h.mu_quasi_normal, "mu quasi-normal")]);
            let result = (app == Applicability::Iff)
                .then(|| pointwise_row(PointwiseKind::K5, PointwiseMode::Sup, case, config));
            rows.push(row("re3", K5_SUP, app, result));
        }
        (OpKind::Tg, SpaceKind::Hinf, SpaceKind::Hinf, Question::Compact) => {
            let iff = h.log_gprime_ok() && h.nu_analytic;
            let id = if iff { "thm7" } else { "re5" };
            let app = if iff { Applicability::Iff } else { Applicability::SufficientOnly };
            rows.push(row(id, IT_LIM, app, Some(limit_row(IntegralKind::IT, case, config))));

            let app = gate(&[(h.mu_quasi_normal, "mu quasi-normal")]);
            let result = (app == Applicability::Iff).then(|| {
                pointwise_row(PointwiseKind::K5, PointwiseMode::BoundaryLimit, case, config)
            });
            rows.push(row("re6", K5_LIM, app, result));
        }
        (OpKind::Sg, SpaceKind::Hinf, SpaceKind::Hinf, Question::Bounded) => {
            let thm2_app = gate(&[
                (h.log_g_ok(), "log(g) in Bloch"),
                (h.nu_analytic, "nu analytic"),
                (h.nu_quasi_normal, "nu quasi-normal"),
            ]);
            // One evaluation serves both the characterization and the
            // property-(U) sufficient condition.
            let shared = (thm2_app == Applicability::Iff || h.nu_property_u)
                .then(|| sup_row(IntegralKind::IS, case, config));
            let thm2_id = if thm2_app == Applicability::Iff && h.mu_constant_one {
                "cor2"
            } else {
                "thm2"
            };
            let thm2_result =
                if thm2_app == Applicability::Iff { shared.clone() } else { None };
            rows.push(row(thm2_id, IS_SUP, thm2_app, thm2_result));

            let app = gate(&[
                (h.nu_property_u, "nu property (U)"),
                (h.mu_quasi_normal, "mu quasi-normal"),
            ]);
            let result = (app == Applicability::Iff)
                .then(|| pointwise_row(PointwiseKind::K1, PointwiseMode::Sup, case, config));
            rows.push(row("thm3", K1_SUP, app, result));

            let (app, result) = if h.nu_property_u {
                (Applicability::SufficientOnly, shared)
            } else {
                (gate(&[(false, "nu property (U)")]), None)
            };
            rows.push(row("pro1", IS_SUP, app, result));
        }
        (OpKind::Sg, SpaceKind::Hinf, SpaceKind::Hinf, Question::Compact) => {
            let app = gate(&[(h.mu_constant_one, "mu identically 1")]);
            let result =
                (app == Applicability::Iff).then(|| zero_symbol_row(&case.g));
            rows.push(row("thm9.1", COEFF, app, result));

            let thm8_app = gate(&[
                (h.log_g_ok(), "log(g) in Bloch"),
                (h.nu_analytic, "nu analytic"),
                (h.nu_quasi_normal, "nu quasi-normal"),
            ]);
            let shared = (thm8_app == Applicability::Iff || h.nu_property_u)
                .then(|| limit_row(IntegralKind::IS, case, config));
            let thm8_result =
                if thm8_app == Applicability::Iff { shared.clone() } else { None };
            rows.push(row("thm8", IS_LIM, thm8_app, thm8_result));

            let app = gate(&[
                (h.nu_property_u, "nu property (U)"),
                (h.mu_quasi_normal, "mu quasi-normal"),
            ]);
            let result = (app == Applicability::Iff).then(|| {
                pointwise_row(PointwiseKind::K1, PointwiseMode::BoundaryLimit, case, config)
            });
            rows.push(row("thm9.2", K1_LIM, app, result));

            let (app, result) = if h.nu_property_u {
                (Applicability::SufficientOnly, shared)
            } else {
                (gate(&[(false, "nu property (U)")]), None)
            };
            rows.push(row("pro3", IS_LIM, app, result));
        }
        (OpKind::Sg, SpaceKind::Hinf, SpaceKind::Bloch, Question::Bounded) => {
            let app = gate(&[(h.nu_property_u, "nu property (U)")]);
            let result = (app == Applicability::Iff)
                .then(|| pointwise_row(PointwiseKind::K3, PointwiseMode::Sup, case, config));
            rows.push(row("thm5", K3_SUP, app, result));
        }
        (OpKind::Sg, SpaceKind::Hinf, SpaceKind::Bloch, Question::Compact) => {
            let app = gate(&[(h.nu_property_u, "nu property (U)")]);
            let result = (app == Applicability::Iff).then(|| {
                pointwise_row(PointwiseKind::K3, PointwiseMode::BoundaryLimit, case, config)
            });
            rows.push(row("thm11", K3_LIM, app, result));
        }
        (OpKind::Sg, SpaceKind::Bloch, SpaceKind::Hinf, Question::Bounded) => {
            let app = gate(&[(h.mu_quasi_normal, "mu quasi-normal")]);
            let result = (app == Applicability::Iff)
                .then(|| pointwise_row(PointwiseKind::K4, PointwiseMode::Sup, case, config));
            rows.push(row("thm6", K4_SUP, app, result));

            let app =
                gate(&[(h.log_g_ok(), "log(g) in Bloch"), (h.nu_analytic, "nu analytic")]);
            let result = (app == Applicability::Iff)
                .then(|| sup_row(IntegralKind::IB, case, config));
            rows.push(row("pro2", IB_SUP, app, result));
        }
        (OpKind::Sg, SpaceKind::Bloch, SpaceKind::Hinf, Question::Compact) => {
            let app = gate(&[(h.mu_quasi_normal, "mu quasi-normal")]);
            let result = (app == Applicability::Iff).then(|| {
                pointwise_row(PointwiseKind::K4, PointwiseMode::BoundaryLimit, case, config)
            });
            rows.push(row("thm12", K4_LIM, app, result));

            let app =
                gate(&[(h.log_g_ok(), "log(g) in Bloch"), (h.nu_analytic, "nu analytic")]);
            let result = (app == Applicability::Iff)
                .then(|| limit_row(IntegralKind::IB, case, config));
            rows.push(row("pro4", IB_LIM, app, result));
        }
        (OpKind::Sg, SpaceKind::Bloch, SpaceKind::Bloch, Question::Bounded) => {
            // Unconditional characterization; no hypotheses to gate on.
            let result = Some(pointwise_row(PointwiseKind::K2, PointwiseMode::Sup, case, config));
            rows.push(row("thm4", K2_SUP, Applicability::Iff, result));
        }
        (OpKind::Sg, SpaceKind::Bloch, SpaceKind::Bloch, Question::Compact) => {
            let result = Some(pointwise_row(
                PointwiseKind::K2,
                PointwiseMode::BoundaryLimit,
                case,
                config,
            ));
            rows.push(row("thm10", K2_LIM, Applicability::Iff, result));
        }
        (OpKind::Tg, _, _, _) => unreachable!("rejected by CaseSpec::new"),
    }
    rows
}

/// Definite direction of one verdict with respect to the question, if any.
fn outcome(question: Question, verdict: Verdict) -> Option<bool> {
    match question {
        Question::Bounded => match verdict {
            Verdict::Finite => Some(true),
            Verdict::Divergent => Some(false),
            _ => None,
        },
        Question::Compact => match verdict {
            Verdict::ZeroLimit => Some(true),
            Verdict::NonzeroLimit => Some(false),
            _ => None,
        },
    }
}

fn to_overall(question: Question, yes: bool) -> OverallVerdict {
    match (question, yes) {
        (Question::Bounded, true) => OverallVerdict::Bounded,
        (Question::Bounded, false) => OverallVerdict::Unbounded,
        (Question::Compact, true) => OverallVerdict::Compact,
        (Question::Compact, false) => OverallVerdict::NotCompact,
    }
}

fn decide(question: Question, rows: &[CriterionRow]) -> (OverallVerdict, String, Vec<String>) {
    let mut notes = Vec::new();
    for r in rows {
        match &r.applicability {
            Applicability::NotApplicable { missing } => {
                notes.push(format!("{} not applicable: needs {}", r.id, missing.join(", ")));
            }
            _ => {
                if let Some(res) = &r.result {
                    if res.verdict == Verdict::Inconclusive {
                        notes.push(format!("{} evaluated but inconclusive", r.id));
                    }
                }
            }
        }
    }
    for r in rows {
        if r.applicability != Applicability::Iff {
            continue;
        }
        if let Some(yes) = r.result.as_ref().and_then(|res| outcome(question, res.verdict)) {
            return (to_overall(question, yes), r.id.clone(), notes);
        }
    }
    // A sufficient condition that fires still decides the positive
    // direction; one that fails to fire decides nothing.
    for r in rows {
        if r.applicability != Applicability::SufficientOnly {
            continue;
        }
        if r.result.as_ref().and_then(|res| outcome(question, res.verdict)) == Some(true) {
            return (to_overall(question, true), r.id.clone(), notes);
        }
    }
    (OverallVerdict::Inconclusive, "none".into(), notes)
}

/// No definite "yes" may coexist with a definite "no". Characterizations
/// count in both directions, sufficient conditions only toward "yes".
fn criteria_agree(question: Question, rows: &[CriterionRow]) -> bool {
    let mut saw_yes = false;
    let mut saw_no = false;
    for r in rows {
        let Some(res) = &r.result else { continue };
        match (&r.applicability, outcome(question, res.verdict)) {
            (Applicability::Iff, Some(true)) => saw_yes = true,
            (Applicability::Iff, Some(false)) => saw_no = true,
            (Applicability::SufficientOnly, Some(true)) => saw_yes = true,
            _ => {}
        }
    }
    !(saw_yes && saw_no)
}

/// Evaluate one case end to end: hypotheses, every applicable criterion,
/// the direct norm estimate, and the cross-checks between them.
pub fn run_case(case: &CaseSpec, config: &RunConfig) -> CaseReport {
    config.validate().expect("run config must be valid");
    let hypotheses = hypothesis_flags(case, &config.grid);
    let criteria = criterion_rows(case, &hypotheses, config);
    let mut norm = opnorm_lower(
        case.op,
        &case.g,
        &case.nu,
        &case.mu,
        case.domain,
        case.codomain,
        &config.search,
    );
    // The sup-integral of |g'|/nu bounds the operator norm with constant 1,
    // so a Finite verdict there yields a certified upper bound.
    if case.op == OpKind::Tg && case.question == Question::Bounded {
        if let Some(res) = criteria
            .iter()
            .find(|r| matches!(r.id.as_str(), "thm1" | "cor1" | "re1"))
            .and_then(|r| r.result.as_ref())
        {
            if res.verdict == Verdict::Finite {
                norm.criterion_upper = Some(res.value);
            }
        }
    }
    let (verdict, governing, notes) = decide(case.question, &criteria);
    let consistency = ConsistencyFlags {
        equivalent_criteria_agree: criteria_agree(case.question, &criteria),
        norm_lower_within_upper: norm
            .criterion_upper
            .map(|upper| norm.lower <= upper * NORM_CHECK_SLACK),
    };
    CaseReport {
        schema: REPORT_SCHEMA,
        case: describe(case),
        hypotheses,
        criteria,
        norm,
        consistency,
        verdict,
        governing,
        notes,
    }
}

/// Evaluate only the canonical criterion of a case: the integral condition
/// on the sup-norm pairs (T_g via |g'|, S_g via |g|/(1-r^2)) and the
/// pointwise quantity on the pairs involving a Bloch-type space. Verdicts
/// match the corresponding report row; hypotheses are not consulted, so the
/// verdict carries iff-strength only when they hold.
pub fn canonical_criterion(case: &CaseSpec, config: &RunConfig) -> CriterionResult {
    config.validate().expect("run config must be valid");
    let pointwise_mode = match case.question {
        Question::Bounded => PointwiseMode::Sup,
        Question::Compact => PointwiseMode::BoundaryLimit,
    };
    match (case.op, case.domain, case.codomain) {
        (OpKind::Tg, SpaceKind::Hinf, SpaceKind::Hinf) => match case.question {
            Question::Bounded => sup_row(IntegralKind::IT, case, config),
            Question::Compact => limit_row(IntegralKind::IT, case, config),
        },
        (OpKind::Sg, SpaceKind::Hinf, SpaceKind::Hinf) => match case.question {
            Question::Bounded => sup_row(IntegralKind::IS, case, config),
            Question::Compact => limit_row(IntegralKind::IS, case, config),
        },
        (OpKind::Sg, SpaceKind::Hinf, SpaceKind::Bloch) => {
            pointwise_row(PointwiseKind::K3, pointwise_mode, case, config)
        }
        (OpKind::Sg, SpaceKind::Bloch, SpaceKind::Hinf) => {
            pointwise_row(PointwiseKind::K4, pointwise_mode, case, config)
        }
        (OpKind::Sg, SpaceKind::Bloch, SpaceKind::Bloch) => {
            pointwise_row(PointwiseKind::K2, pointwise_mode, case, config)
        }
        (OpKind::Tg, _, _) => unreachable!("rejected by CaseSpec::new"),
    }
}

/// One matrix line: the verdict of every evaluated criterion for a case.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixRow {
    pub case: CaseDescription,
    pub entries: Vec<MatrixEntry>,
    pub verdict: OverallVerdict,
    pub governing: String,
    /// Two criteria the catalog declares equivalent returned opposite
    /// definite verdicts.
    pub disagreement: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixEntry {
    pub id: String,
    pub verdict: Verdict,
}

/// Collapse a finished report to its matrix line.
pub fn matrix_row(report: &CaseReport) -> MatrixRow {
    MatrixRow {
        case: report.case.clone(),
        entries: report
            .criteria
            .iter()
            .filter_map(|r| {
                r.result.as_ref().map(|res| MatrixEntry { id: r.id.clone(), verdict: res.verdict })
            })
            .collect(),
        verdict: report.verdict,
        governing: report.governing.clone(),
        disagreement: !report.consistency.equivalent_criteria_agree,
    }
}

/// Run every case and tabulate per-criterion verdicts; rows keep input
/// order. Inconclusive entries never raise the disagreement flag.
pub fn equivalence_matrix(cases: &[CaseSpec], config: &RunConfig) -> Vec<MatrixRow> {
    assert!(!cases.is_empty(), "equivalence matrix needs at least one case");
    cases.par_iter().map(|case| matrix_row(&run_case(case, config))).collect()
}

/// Output encodings of a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, VerifyError> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(VerifyError::BadFormat(other.to_string())),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn applicability_str(a: &Applicability) -> String {
    match a {
        Applicability::Iff => "iff".into(),
        Applicability::SufficientOnly => "sufficient".into(),
        Applicability::NotApplicable { missing } => format!("n/a (needs {})", missing.join(", ")),
    }
}

/// Serialize a report. JSON is the canonical schema; CSV holds one line per
/// evaluated criterion; markdown is for reading.
pub fn emit_report(report: &CaseReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from(
                "op,symbol,nu,mu,domain,codomain,question,criterion,applicability,mode,value,verdict\n",
            );
            let c = &report.case;
            for r in report.criteria.iter().filter(|r| r.result.is_some()) {
                let res = r.result.as_ref().expect("filtered on result");
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{:?},{},{:?}\n",
                    csv_field(&c.op),
                    csv_field(&c.symbol),
                    csv_field(&c.nu),
                    csv_field(&c.mu),
                    csv_field(&c.domain),
                    csv_field(&c.codomain),
                    csv_field(&c.question),
                    csv_field(&r.id),
                    csv_field(&applicability_str(&r.applicability)),
                    res.mode,
                    res.value,
                    res.verdict,
                ));
            }
            s
        }
        ReportFormat::Markdown => {
            let c = &report.case;
            let mut s = format!(
                "# {} with symbol {}: {}({}) -> {}({}), {}\n\n",
                c.op, c.symbol, c.domain, c.nu, c.codomain, c.mu, c.question
            );
            s.push_str(&format!(
                "Verdict: **{:?}** (governing: {})\n\n",
                report.verdict, report.governing
            ));
            let h = &report.hypotheses;
            s.push_str(&format!(
                "Hypotheses: log(g') in Bloch: {:?}; log(g) in Bloch: {:?}; g univalent: {}; \
                 nu analytic: {}; nu property (U): {}; nu quasi-normal: {}; \
                 mu quasi-normal: {}; mu constant 1: {}\n\n",
                h.log_gprime_in_bloch,
                h.log_g_in_bloch,
                h.g_univalent,
                h.nu_analytic,
                h.nu_property_u,
                h.nu_quasi_normal,
                h.mu_quasi_normal,
                h.mu_constant_one,
            ));
            s.push_str("| criterion | applicability | mode | value | verdict |\n");
            s.push_str("|---|---|---|---|---|\n");
            for r in &report.criteria {
                match &r.result {
                    Some(res) => s.push_str(&format!(
                        "| {} | {} | {:?} | {} | {:?} |\n",
                        r.id,
                        applicability_str(&r.applicability),
                        res.mode,
                        res.value,
                        res.verdict,
                    )),
                    None => s.push_str(&format!(
                        "| {} | {} | - | - | - |\n",
                        r.id,
                        applicability_str(&r.applicability),
                    )),
                }
            }
            s.push_str(&format!(
                "\nNorm lower bound {} via {}",
                report.norm.lower, report.norm.witness
            ));
            if let Some(upper) = report.norm.criterion_upper {
                s.push_str(&format!(", criterion upper bound {upper}"));
            }
            s.push('\n');
            if !report.notes.is_empty() {
                s.push('\n');
                for n in &report.notes {
                    s.push_str(&format!("- {n}\n"));
                }
            }
            s
        }
    }
}

/// One case as it appears in a config file, all fields spec strings.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub op: String,
    pub symbol: String,
    pub nu: String,
    pub mu: String,
    pub domain: String,
    pub codomain: String,
    pub question: String,
    /// Expected overall verdict, for regression fixtures; a mismatch fails
    /// the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
}

impl CaseConfig {
    pub fn resolve(&self) -> Result<CaseSpec, VerifyError> {
        let op = match self.op.as_str() {
            "tg" => OpKind::Tg,
            "sg" => OpKind::Sg,
            other => return Err(VerifyError::BadOp(other.to_string())),
        };
        let parse_space = |s: &str| match s {
            "hinf" => Ok(SpaceKind::Hinf),
            "bloch" => Ok(SpaceKind::Bloch),
            other => Err(VerifyError::BadSpace(other.to_string())),
        };
        let question = match self.question.as_str() {
            "bounded" => Question::Bounded,
            "compact" => Question::Compact,
            other => return Err(VerifyError::BadQuestion(other.to_string())),
        };
        CaseSpec::new(
            op,
            make_symbol(&self.symbol)?,
            make_weight(&self.nu)?,
            make_weight(&self.mu)?,
            parse_space(&self.domain)?,
            parse_space(&self.codomain)?,
            question,
        )
    }
}

/// A batch run: cases plus optional knob overrides.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub cases: Vec<CaseConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub quad_tol: Option<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub search_degree: Option<usize>,
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub output: Option<String>,
}

/// Parse and sanity-check a config document.
pub fn load_config(text: &str) -> Result<VerifyConfig, VerifyError> {
    let cfg: VerifyConfig = serde_json::from_str(text)?;
    if cfg.cases.is_empty() {
        return Err(VerifyError::Config("config needs at least one case".into()));
    }
    if let Some(f) = &cfg.format {
        let _: ReportFormat = f.parse()?;
    }
    for case in &cfg.cases {
        if let Some(e) = &case.expect {
            let _: OverallVerdict = e.parse()?;
        }
    }
    Ok(cfg)
}

impl VerifyConfig {
    pub fn resolve_cases(&self) -> Result<Vec<CaseSpec>, VerifyError> {
        self.cases.iter().map(CaseConfig::resolve).collect()
    }

    /// Materialize the run knobs, validated. The seed set here loses to an
    /// explicit command-line or environment override.
    pub fn run_config(&self) -> Result<RunConfig, VerifyError> {
        let mut rc = RunConfig::default();
        if let Some(g) = &self.grid {
            rc.grid = g.clone();
        }
        if let Some(t) = self.quad_tol {
            rc.quad.tol = t;
        }
        if let Some(s) = self.seed {
            rc.search.seed = s;
        }
        if let Some(r) = self.restarts {
            rc.search.restarts = r;
        }
        if let Some(d) = self.search_degree {
            rc.search.degree = d;
        }
        rc.validate()?;
        Ok(rc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(
        op: OpKind,
        symbol: &str,
        nu: &str,
        mu: &str,
        domain: SpaceKind,
        codomain: SpaceKind,
        question: Question,
    ) -> CaseSpec {
        CaseSpec::new(
            op,
            make_symbol(symbol).unwrap(),
            make_weight(nu).unwrap(),
            make_weight(mu).unwrap(),
            domain,
            codomain,
            question,
        )
        .unwrap()
    }

    fn quick_config() -> RunConfig {
        let mut config = RunConfig::default();
        config.grid.angles = 64;
        config.search.restarts = 2;
        config.search.random_candidates = 8;
        config
    }

    #[test]
    fn unsupported_combinations_are_rejected_up_front() {
        let g = make_symbol("identity").unwrap();
        let w = make_weight("std:1").unwrap();
        for (domain, codomain) in [
            (SpaceKind::Bloch, SpaceKind::Bloch),
            (SpaceKind::Hinf, SpaceKind::Bloch),
            (SpaceKind::Bloch, SpaceKind::Hinf),
        ] {
            let err = CaseSpec::new(
                OpKind::Tg,
                g.clone(),
                w.clone(),
                w.clone(),
                domain,
                codomain,
                Question::Bounded,
            )
            .unwrap_err();
            assert!(matches!(err, VerifyError::UnsupportedCase { .. }));
        }
    }

    #[test]
    fn log_symbol_between_standard_weights_is_bounded_with_certified_norms() {
        let c = case(
            OpKind::Tg,
            "neglog1mz",
            "std:1",
            "std:1",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        let report = run_case(&c, &RunConfig::default());
        assert_eq!(report.verdict, OverallVerdict::Bounded);
        assert_eq!(report.governing, "thm1");
        let main = &report.criteria[0];
        assert_eq!(main.applicability, Applicability::Iff);
        let value = main.result.as_ref().unwrap().value;
        assert!((value - 1.0173824).abs() < 2e-3, "criterion value {value}");
        assert!(report.norm.lower >= 0.6140432240051007 * (1.0 - 1e-4), "{}", report.norm.lower);
        assert_eq!(report.norm.criterion_upper, Some(value));
        assert_eq!(report.consistency.norm_lower_within_upper, Some(true));
        assert!(report.consistency.equivalent_criteria_agree);
        // The quasi-normal remark applies too and must agree.
        let re3 = report.criteria.iter().find(|r| r.id == "re3").unwrap();
        assert_eq!(re3.applicability, Applicability::Iff);
        assert_eq!(re3.result.as_ref().unwrap().verdict, Verdict::Finite);
    }

    #[test]
    fn flat_weights_make_the_log_symbol_unbounded_via_the_boundary_integral() {
        let c = case(
            OpKind::Tg,
            "neglog1mz",
            "one",
            "one",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        let report = run_case(&c, &quick_config());
        assert_eq!(report.verdict, OverallVerdict::Unbounded);
        // mu is identically 1 and the symbol is univalent over an analytic
        // weight, so the increasing-integral special case governs.
        assert_eq!(report.governing, "cor1");
        assert!(report.hypotheses.g_univalent);
        assert!(report.hypotheses.mu_constant_one);
        assert_eq!(report.norm.criterion_upper, None);
    }

    #[test]
    fn zero_symbol_compactness_report_is_all_zeros() {
        let c = case(
            OpKind::Sg,
            "zero",
            "std:1",
            "std:1",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Compact,
        );
        let report = run_case(&c, &quick_config());
        assert_eq!(report.verdict, OverallVerdict::Compact);
        for r in &report.criteria {
            if let Some(res) = &r.result {
                assert_eq!(res.value, 0.0, "{} should vanish", r.id);
            }
        }
        assert_eq!(report.norm.lower, 0.0);
    }

    #[test]
    fn compactness_into_the_unweighted_space_requires_the_zero_symbol() {
        let c = case(
            OpKind::Sg,
            "identity",
            "std:1",
            "one",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Compact,
        );
        let report = run_case(&c, &quick_config());
        assert_eq!(report.verdict, OverallVerdict::NotCompact);
        assert_eq!(report.governing, "thm9.1");
    }

    #[test]
    fn undecidable_regime_names_the_failed_hypotheses() {
        // S_g into the flat-weight space with log(g) outside Bloch: only the
        // sufficient condition applies and it diverges, deciding nothing.
        let c = case(
            OpKind::Sg,
            "identity",
            "std:1",
            "one",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        let report = run_case(&c, &quick_config());
        assert_eq!(report.verdict, OverallVerdict::Inconclusive);
        assert_eq!(report.governing, "none");
        let note_text = report.notes.join("; ");
        assert!(note_text.contains("thm3"), "notes: {note_text}");
        assert!(note_text.contains("mu quasi-normal"), "notes: {note_text}");
        assert!(note_text.contains("log(g) in Bloch"), "notes: {note_text}");
        let pro1 = report.criteria.iter().find(|r| r.id == "pro1").unwrap();
        assert_eq!(pro1.applicability, Applicability::SufficientOnly);
        assert_eq!(pro1.result.as_ref().unwrap().verdict, Verdict::Divergent);
    }

    #[test]
    fn bloch_to_bloch_dispatch_needs_no_hypotheses() {
        let c = case(
            OpKind::Sg,
            "expz",
            "log:1",
            "std:1",
            SpaceKind::Bloch,
            SpaceKind::Bloch,
            Question::Bounded,
        );
        let report = run_case(&c, &quick_config());
        assert_eq!(report.criteria.len(), 1);
        assert_eq!(report.criteria[0].id, "thm4");
        assert_eq!(report.criteria[0].applicability, Applicability::Iff);
        assert_eq!(report.verdict, OverallVerdict::Bounded);
    }

    #[test]
    fn sup_norm_to_bloch_dispatch_gates_on_the_derivative_bound_property() {
        let c = case(
            OpKind::Sg,
            "identity",
            "std:1",
            "std:3",
            SpaceKind::Hinf,
            SpaceKind::Bloch,
            Question::Compact,
        );
        let report = run_case(&c, &quick_config());
        assert_eq!(report.governing, "thm11");
        // (1-|z|^2)^3 |z| / ((1-|z|^2) (1-|z|^2)) vanishes at the boundary.
        assert_eq!(report.verdict, OverallVerdict::Compact);
    }

    #[test]
    fn compact_consistent_cases_are_also_bounded() {
        for question in [Question::Bounded, Question::Compact] {
            let c = case(
                OpKind::Tg,
                "identity",
                "std:1",
                "std:2",
                SpaceKind::Hinf,
                SpaceKind::Hinf,
                question,
            );
            let report = run_case(&c, &quick_config());
            match question {
                Question::Bounded => assert_eq!(report.verdict, OverallVerdict::Bounded),
                Question::Compact => assert_eq!(report.verdict, OverallVerdict::Compact),
            }
        }
    }

    #[test]
    fn matrix_rows_stay_in_input_order_and_stay_consistent() {
        let cases = vec![
            case(
                OpKind::Tg,
                "neglog1mz",
                "std:1",
                "std:1",
                SpaceKind::Hinf,
                SpaceKind::Hinf,
                Question::Bounded,
            ),
            case(
                OpKind::Sg,
                "zero",
                "std:1",
                "std:1",
                SpaceKind::Hinf,
                SpaceKind::Hinf,
                Question::Compact,
            ),
            case(
                OpKind::Sg,
                "identity",
                "std:1",
                "std:1",
                SpaceKind::Bloch,
                SpaceKind::Bloch,
                Question::Bounded,
            ),
        ];
        let rows = equivalence_matrix(&cases, &quick_config());
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].case.symbol, "neglog1mz");
        assert_eq!(rows[1].case.symbol, "zero");
        assert_eq!(rows[2].case.symbol, "identity");
        for row in &rows {
            assert!(!row.disagreement, "case {:?} disagrees", row.case);
            assert!(!row.entries.is_empty());
        }
    }

    #[test]
    fn single_criterion_rows_are_trivially_consistent() {
        let cases = vec![case(
            OpKind::Sg,
            "identity",
            "std:1",
            "std:1",
            SpaceKind::Bloch,
            SpaceKind::Bloch,
            Question::Compact,
        )];
        let rows = equivalence_matrix(&cases, &quick_config());
        assert_eq!(rows[0].entries.len(), 1);
        assert!(!rows[0].disagreement);
    }

    #[test]
    fn json_output_is_identical_across_runs() {
        let c = case(
            OpKind::Sg,
            "neglog1mz",
            "std:0.5",
            "std:1",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        let config = quick_config();
        let a = emit_report(&run_case(&c, &config), ReportFormat::Json);
        let b = emit_report(&run_case(&c, &config), ReportFormat::Json);
        assert_eq!(a, b);
        assert!(a.contains(REPORT_SCHEMA));
    }

    #[test]
    fn csv_has_a_line_per_evaluated_criterion() {
        let c = case(
            OpKind::Sg,
            "identity",
            "std:1",
            "std:1",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        let report = run_case(&c, &quick_config());
        let evaluated = report.criteria.iter().filter(|r| r.result.is_some()).count();
        let csv = emit_report(&report, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), evaluated + 1, "{csv}");
        assert!(csv.starts_with("op,symbol,"));
    }

    #[test]
    fn markdown_names_the_governing_statement() {
        let c = case(
            OpKind::Sg,
            "identity",
            "std:1",
            "std:1",
            SpaceKind::Bloch,
            SpaceKind::Bloch,
            Question::Bounded,
        );
        let report = run_case(&c, &quick_config());
        let md = emit_report(&report, ReportFormat::Markdown);
        assert!(md.contains(&report.governing), "{md}");
        assert!(md.contains("| criterion |"), "{md}");
    }

    #[test]
    fn golden_zero_case_json_is_stable() {
        let c = case(
            OpKind::Sg,
            "zero",
            "std:1",
            "std:1",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Compact,
        );
        let got = emit_report(&run_case(&c, &RunConfig::default()), ReportFormat::Json);
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/sg_zero_compact.json");
        match std::fs::read_to_string(path) {
            Ok(want) => assert_eq!(got, want, "regenerate by deleting {path}"),
            Err(_) => {
                // First run bootstraps the fixture; later runs compare.
                std::fs::create_dir_all(std::path::Path::new(path).parent().unwrap()).unwrap();
                std::fs::write(path, &got).unwrap();
            }
        }
    }

    #[test]
    fn config_round_trip_resolves_cases_and_knobs() {
        let text = r#"{
            "cases": [
                {"op": "tg", "symbol": "neglog1mz", "nu": "std:1", "mu": "std:1",
                 "domain": "hinf", "codomain": "hinf", "question": "bounded"}
            ],
            "seed": 7,
            "grid": {"radial_levels": 10, "angles": 64},
            "quad_tol": 1e-5,
            "restarts": 2,
            "format": "csv"
        }"#;
        let cfg = load_config(text).unwrap();
        let cases = cfg.resolve_cases().unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].question(), Question::Bounded);
        let rc = cfg.run_config().unwrap();
        assert_eq!(rc.search.seed, 7);
        assert_eq!(rc.search.restarts, 2);
        assert_eq!(rc.grid.radial_levels, 10);
        assert_eq!(rc.grid.angles, 64);
        assert_eq!(rc.quad.tol, 1e-5);
    }

    #[test]
    fn config_parser_rejects_bad_documents() {
        assert!(load_config("").is_err());
        assert!(load_config("{}").is_err());
        assert!(load_config(r#"{"cases": []}"#).is_err());
        // Unknown top-level and per-case fields are refused.
        assert!(load_config(r#"{"cases": [], "bogus": 1}"#).is_err());
        let bad_case = r#"{"cases": [{"op": "tg", "symbol": "zero", "nu": "one", "mu": "one",
            "domain": "hinf", "codomain": "hinf", "question": "bounded", "extra": true}]}"#;
        assert!(load_config(bad_case).is_err());
        let bad_format = r#"{"cases": [{"op": "tg", "symbol": "zero", "nu": "one", "mu": "one",
            "domain": "hinf", "codomain": "hinf", "question": "bounded"}], "format": "yaml"}"#;
        assert!(load_config(bad_format).is_err());
    }

    #[test]
    fn case_resolution_reports_the_offending_field() {
        let mk = |op: &str, domain: &str, question: &str| CaseConfig {
            op: op.into(),
            symbol: "identity".into(),
            nu: "std:1".into(),
            mu: "std:1".into(),
            domain: domain.into(),
            codomain: "hinf".into(),
            question: question.into(),
            expect: None,
        };
        assert!(matches!(mk("vg", "hinf", "bounded").resolve(), Err(VerifyError::BadOp(_))));
        assert!(matches!(mk("tg", "disk", "bounded").resolve(), Err(VerifyError::BadSpace(_))));
        assert!(matches!(mk("tg", "hinf", "dense").resolve(), Err(VerifyError::BadQuestion(_))));
        assert!(matches!(
            mk("tg", "bloch", "bounded").resolve(),
            Err(VerifyError::UnsupportedCase { .. })
        ));
    }

    #[test]
    fn canonical_criterion_matches_the_reporting_dispatch() {
        let config = quick_config();
        // Integral condition on the sup-norm pair: the pinned closed-form
        // sup of (1-t^2)(ln(1/(1-t))/4 + t/(2(1-t)) + ln(1+t)/4).
        let pos = case(
            OpKind::Tg,
            "neglog1mz",
            "std:1",
            "std:1",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        let res = canonical_criterion(&pos, &config);
        assert_eq!(res.verdict, Verdict::Finite);
        assert!((res.value - 1.0173824).abs() < 2e-3, "{}", res.value);

        let zero = case(
            OpKind::Tg,
            "zero",
            "std:1",
            "std:1",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        assert_eq!(canonical_criterion(&zero, &config).value, 0.0);

        let neg = case(
            OpKind::Tg,
            "neglog1mz",
            "one",
            "one",
            SpaceKind::Hinf,
            SpaceKind::Hinf,
            Question::Bounded,
        );
        assert_eq!(canonical_criterion(&neg, &config).verdict, Verdict::Divergent);

        // Bloch-to-Bloch routes to the pointwise quantity.
        let pw = case(
            OpKind::Sg,
            "identity",
            "std:1",
            "std:1",
            SpaceKind::Bloch,
            SpaceKind::Bloch,
            Question::Bounded,
        );
        let res = canonical_criterion(&pw, &config);
        assert_eq!(res.mode, CriterionMode::Sup);
        assert_eq!(res.verdict, Verdict::Finite);
    }

    #[test]
    fn expected_verdicts_parse_and_round_trip() {
        for v in [
            OverallVerdict::Bounded,
            OverallVerdict::Unbounded,
            OverallVerdict::Compact,
            OverallVerdict::NotCompact,
            OverallVerdict::Inconclusive,
        ] {
            assert_eq!(v.as_str().parse::<OverallVerdict>().unwrap(), v);
        }
        assert!("Bounded".parse::<OverallVerdict>().is_err());
        let with_expect = r#"{"cases": [{"op": "tg", "symbol": "zero", "nu": "one", "mu": "one",
            "domain": "hinf", "codomain": "hinf", "question": "bounded", "expect": "bounded"}]}"#;
        assert!(load_config(with_expect).is_ok());
        let bad = with_expect.replace("\"bounded\"}", "\"maybe\"}");
        assert!(load_config(&bad).is_err());
    }

    #[test]
    fn run_config_validation_enforces_the_documented_floors() {
        let mut rc = RunConfig::default();
        rc.grid.radial_levels = 5;
        assert!(rc.validate().is_err());
        let mut rc = RunConfig::default();
        rc.search.restarts = 0;
        assert!(rc.validate().is_err());
        let mut rc = RunConfig::default();
        rc.quad.tol = 0.0;
        assert!(rc.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
