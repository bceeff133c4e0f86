//! Command-line front end: parse weight/symbol specs and case configs,
//! dispatch to the library, write reports.
//!
//! Exit codes: 0 on success, 1 when a verdict-level check fails (criterion
//! disagreement or a missed expectation), 2 on usage and parse errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use volterra::operators::opnorm_lower;
use volterra::verify::{
    canonical_criterion, emit_report, load_config, run_case, CaseConfig, CaseReport,
    OverallVerdict, ReportFormat, RunConfig, VerifyError,
};
use volterra::weights::{
    associated_weight_bounds, check_property_l, check_property_u, is_normal, make_weight, LpSpec,
};

type CliError = Box<dyn std::error::Error>;

const VERDICT_FAILURE: u8 = 1;
const USAGE_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "volterra")]
#[command(about = "Boundedness and compactness checks for Volterra-type operators \
between weighted sup-norm and Bloch-type spaces on the unit disk")]
#[command(version)]
struct Cli {
    /// Worker threads for case-level parallelism (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Weight taxonomy utilities
    Weights {
        #[command(subcommand)]
        action: WeightsCmd,
    },
    /// Evaluate the canonical criterion of one case, as JSON
    Criteria(CaseArgs),
    /// Direct operator-norm lower estimate for one case, as JSON
    Opnorm(OpnormArgs),
    /// Run a JSON case list and cross-check every verdict
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum WeightsCmd {
    /// Print the property table of a weight spec
    Check {
        /// Weight spec: std:<a>, log:<a>, one, product:<a>,<b>, omega:<spec>
        spec: String,
        /// Radii for the associated-weight sandwich
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.9")]
        radii: Vec<f64>,
        /// Largest monomial power probed for the sandwich upper bound
        #[arg(long, default_value_t = 256)]
        monomial_degree: u32,
        /// Degree of the extremal linear program (0 disables it)
        #[arg(long, default_value_t = 12)]
        lp_degree: usize,
        /// Radial constraint samples of the linear program
        #[arg(long, default_value_t = 24)]
        lp_samples: usize,
    },
}

/// Numeric knobs shared by the case-running commands. Flags override the
/// VOLTERRA_SEED environment variable, which overrides the config file.
#[derive(Args, Clone)]
struct Knobs {
    /// Dyadic radial levels of the evaluation grids
    #[arg(long)]
    levels: Option<u32>,
    /// Angle count of the evaluation grids
    #[arg(long)]
    angles: Option<usize>,
    /// Adaptive quadrature tolerance
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Norm-search seed
    #[arg(long)]
    seed: Option<u64>,
    /// Norm-search restarts
    #[arg(long)]
    restarts: Option<usize>,
    /// Norm-search test-function degree
    #[arg(long)]
    degree: Option<usize>,
    /// Random candidates per search restart
    #[arg(long)]
    candidates: Option<usize>,
}

impl Knobs {
    /// Layer environment then flags over a base config and validate.
    fn apply(&self, mut rc: RunConfig) -> Result<RunConfig, CliError> {
        if let Ok(text) = std::env::var("VOLTERRA_SEED") {
            rc.search.seed =
                text.parse().map_err(|_| format!("VOLTERRA_SEED is not an integer: `{text}`"))?;
        }
        if let Some(l) = self.levels {
            rc.grid.radial_levels = l;
            rc.search.grid.radial_levels = l;
        }
        if let Some(a) = self.angles {
            rc.grid.angles = a;
            rc.search.grid.angles = a;
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
        if let Some(d) = self.degree {
            rc.search.degree = d;
        }
        if let Some(c) = self.candidates {
            rc.search.random_candidates = c;
        }
        rc.validate()?;
        Ok(rc)
    }
}

#[derive(Args)]
struct CaseArgs {
    /// Operator: tg | sg
    #[arg(long)]
    op: String,
    /// Symbol spec: identity, neglog1mz, zero, expz, cayleypow:<p>, poly:[..]
    #[arg(long)]
    g: String,
    /// Domain-side weight spec
    #[arg(long)]
    nu: String,
    /// Codomain-side weight spec
    #[arg(long)]
    mu: String,
    /// Domain space: hinf | bloch
    #[arg(long, default_value = "hinf")]
    domain: String,
    /// Codomain space: hinf | bloch
    #[arg(long, default_value = "hinf")]
    codomain: String,
    /// Question: bounded | compact
    #[arg(long, default_value = "bounded")]
    question: String,
    /// Write the document here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct OpnormArgs {
    /// Operator: tg | sg
    #[arg(long)]
    op: String,
    /// Symbol spec
    #[arg(long)]
    g: String,
    /// Domain-side weight spec
    #[arg(long)]
    nu: String,
    /// Codomain-side weight spec
    #[arg(long)]
    mu: String,
    /// Domain space: hinf | bloch
    #[arg(long, default_value = "hinf")]
    domain: String,
    /// Codomain space: hinf | bloch
    #[arg(long, default_value = "hinf")]
    codomain: String,
    /// Write the document here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON config with a `cases` array and optional knob overrides
    config: PathBuf,
    /// Output format: json | csv | markdown (beats the config file)
    #[arg(long)]
    format: Option<String>,
    /// Write the document here instead of stdout (beats the config file)
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs.filter(|&j| j > 0) {
        // Fails only when a pool already exists; the default pool is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let outcome = match cli.command {
        Commands::Weights { action } => cmd_weights(action),
        Commands::Criteria(args) => cmd_criteria(args),
        Commands::Opnorm(args) => cmd_opnorm(args),
        Commands::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}

fn write_document(text: &str, output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_weights(action: WeightsCmd) -> Result<ExitCode, CliError> {
    let WeightsCmd::Check { spec, radii, monomial_degree, lp_degree, lp_samples } = action;
    let nu = make_weight(&spec)?;
    let u = check_property_u(&nu, 24);
    let l = check_property_l(&nu, 24, 8);
    let mut out = String::new();
    out.push_str(&format!("weight: {nu}\n"));
    out.push_str(&format!("typical: {}\n", nu.typical()));
    out.push_str(&format!("analytic witness: {}\n", nu.has_analytic_witness()));
    out.push_str(&format!("quasi-normal whitelist: {}\n", nu.quasi_normal_whitelisted()));
    out.push_str(&format!(
        "property (U): {} (inf ratio {:.4}{})\n",
        u.holds,
        u.inf_ratio,
        if u.conclusive { "" } else { ", inconclusive" }
    ));
    match l.best_k {
        Some(k) => out.push_str(&format!("property (L): {} (shift k={k})\n", l.holds)),
        None => out.push_str(&format!("property (L): {}\n", l.holds)),
    }
    out.push_str(&format!("normal: {}\n", is_normal(&nu)));

    let lp = LpSpec { degree: lp_degree, radial_samples: lp_samples, ..LpSpec::default() };
    let sandwich = associated_weight_bounds(&nu, &radii, monomial_degree, &lp)?;
    out.push_str(&format!(
        "associated-weight sandwich (monomials to degree {monomial_degree}, lp degree {lp_degree}):\n"
    ));
    for (i, &r) in sandwich.radii.iter().enumerate() {
        out.push_str(&format!(
            "  r={:.3}: [{:.6}, {:.6}]  width {:.3e}\n",
            r,
            sandwich.lower[i],
            sandwich.best_upper(i),
            sandwich.width(i)
        ));
    }
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

const VALID_COMBINATIONS: &str = "valid combinations: tg hinf->hinf, sg hinf->hinf, \
sg hinf->bloch, sg bloch->hinf, sg bloch->bloch";

fn resolve_case(config: CaseConfig) -> Result<volterra::verify::CaseSpec, CliError> {
    config.resolve().map_err(|e| {
        if matches!(e, VerifyError::UnsupportedCase { .. }) {
            format!("{e}\n{VALID_COMBINATIONS}").into()
        } else {
            CliError::from(e)
        }
    })
}

fn cmd_criteria(args: CaseArgs) -> Result<ExitCode, CliError> {
    let case = resolve_case(CaseConfig {
        op: args.op,
        symbol: args.g,
        nu: args.nu,
        mu: args.mu,
        domain: args.domain,
        codomain: args.codomain,
        question: args.question,
        expect: None,
    })?;
    let rc = args.knobs.apply(RunConfig::default())?;
    let result = canonical_criterion(&case, &rc);
    let mut doc = serde_json::to_string_pretty(&result)?;
    doc.push('\n');
    write_document(&doc, args.output.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_opnorm(args: OpnormArgs) -> Result<ExitCode, CliError> {
    let case = resolve_case(CaseConfig {
        op: args.op,
        symbol: args.g,
        nu: args.nu,
        mu: args.mu,
        domain: args.domain,
        codomain: args.codomain,
        question: "bounded".into(),
        expect: None,
    })?;
    let rc = args.knobs.apply(RunConfig::default())?;
    let estimate = opnorm_lower(
        case.op(),
        case.symbol(),
        case.nu(),
        case.mu(),
        case.domain(),
        case.codomain(),
        &rc.search,
    );
    let mut doc = serde_json::to_string_pretty(&estimate)?;
    doc.push('\n');
    write_document(&doc, args.output.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn render_reports(reports: &[CaseReport], format: ReportFormat) -> Result<String, CliError> {
    match format {
        ReportFormat::Json => {
            let mut doc = serde_json::to_string_pretty(reports)?;
            doc.push('\n');
            Ok(doc)
        }
        ReportFormat::Csv => {
            // One shared header; emit_report repeats it per case.
            let mut doc = String::new();
            for (i, report) in reports.iter().enumerate() {
                let body = emit_report(report, ReportFormat::Csv);
                if i == 0 {
                    doc.push_str(&body);
                } else {
                    doc.extend(body.splitn(2, '\n').nth(1));
                }
            }
            Ok(doc)
        }
        ReportFormat::Markdown => {
            Ok(reports.iter().map(|r| emit_report(r, ReportFormat::Markdown)).collect::<Vec<_>>().join("\n---\n\n"))
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let cfg = load_config(&text)?;
    let cases = cfg.resolve_cases()?;
    let rc = args.knobs.apply(cfg.run_config()?)?;
    let format: ReportFormat = match args.format.as_deref().or(cfg.format.as_deref()) {
        Some(name) => name.parse()?,
        None => ReportFormat::Json,
    };
    let output = args.output.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));

    let reports: Vec<CaseReport> = cases.par_iter().map(|case| run_case(case, &rc)).collect();

    let mut failures = 0usize;
    for (i, (case_cfg, report)) in cfg.cases.iter().zip(&reports).enumerate() {
        let label = format!(
            "case {}/{} {} {}: {}({}) -> {}({}), {}",
            i + 1,
            reports.len(),
            report.case.op,
            report.case.symbol,
            report.case.domain,
            report.case.nu,
            report.case.codomain,
            report.case.mu,
            report.case.question
        );
        let mut status = format!("{} via {}", report.verdict.as_str(), report.governing);
        if !report.consistency.equivalent_criteria_agree {
            failures += 1;
            status.push_str("  DISAGREEMENT between equivalent criteria");
        }
        if report.consistency.norm_lower_within_upper == Some(false) {
            failures += 1;
            status.push_str("  norm lower estimate exceeds the criterion upper bound");
        }
        if let Some(expect) = &case_cfg.expect {
            let expected: OverallVerdict = expect.parse()?;
            if expected != report.verdict {
                failures += 1;
                status.push_str(&format!(
                    "  expected {}, got {}",
                    expected.as_str(),
                    report.verdict.as_str()
                ));
            }
        }
        eprintln!("{label}: {status}");
    }

    write_document(&render_reports(&reports, format)?, output.as_ref())?;
    if failures > 0 {
        eprintln!("{failures} check(s) failed");
        Ok(ExitCode::from(VERDICT_FAILURE))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
