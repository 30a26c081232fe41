//! Command-line surface.
//!
//! Every command writes one JSON report carrying `"schema_version": 1` and a
//! `"report"` tag. Exit codes: 0 success, 1 input error, 2 verification
//! failure. The text format is a rendering of the same JSON.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{
    bipolar_report, verify_duality_chain, verify_representation, BipolarReport, ChainCheck, ConeConfig, ConeError,
    RepresentationReport, MEMBERSHIP_TOL,
};
use crate::market::{random_claim, ClaimSpec, MarketConfig, MarketError, MarketModel};
use crate::measures::{
    classify_measure, separating_polytope, Classification, EntropyMethod, MeasureConfig, MeasureError,
};
use crate::pricing::{
    suprep_dual_with, suprep_primal, truncation_gap_study, ConeChoice, GapRow, PricingError, StudyClaim,
    TruncationFamily, GAP_TOL,
};
use crate::scalar::{Rational, Scalar};
use crate::utility::{
    asymptotic_elasticity_minus, check_inada, conjugate, from_csv, growth_constants, growth_constants_with_b,
    Elasticity, GrowthCertificate, InadaReport, UtilityConfig, UtilityError, UtilityFunction,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOL_ENV: &str = "SUPERHEDGE_TOL";

#[derive(Debug, Parser)]
#[command(name = "superhedge", version, about = "Super-replication prices and duality checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Acceptance tolerance of the command's assertion; overrides SUPERHEDGE_TOL
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for random batteries
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeArg {
    Cu,
    Ku,
    Kadm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Market,
    Claim,
    Measure,
    Utility,
    Cone,
    Report,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Primal and dual super-replication price of a claim
    Price {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        claim: PathBuf,
        #[arg(long, value_enum, default_value_t = ConeArg::Cu)]
        cone: ConeArg,
        /// Admissibility bound L for `--cone kadm`
        #[arg(long, default_value_t = 1000.0)]
        lower_bound: f64,
        /// Solve in exact rational arithmetic
        #[arg(long)]
        exact: bool,
    },
    /// Dual price and optimizing vertex only
    Dual {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        claim: PathBuf,
    },
    /// Polar identities between the utility cones and the measure polytope
    VerifyDuality {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        exact: bool,
    },
    /// Membership in C_U against the projection test on sampled measures
    VerifyRepresentation {
        #[arg(long)]
        market: PathBuf,
        /// Single claim; without it, `--samples` random claims are drawn
        #[arg(long)]
        claim: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Inada limits, asymptotic elasticity, conjugate samples and growth constants
    UtilityCheck {
        #[arg(long)]
        utility: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        /// Fix the growth threshold instead of searching for it
        #[arg(long)]
        b: Option<f64>,
        /// Critical wealth of a CSV utility table
        #[arg(long, allow_hyphen_values = true)]
        critical_wealth: Option<f64>,
    },
    /// Loss and full entropy of a measure and its class membership
    EntropyClassify {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        utility: PathBuf,
        #[arg(long)]
        market: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        critical_wealth: Option<f64>,
    },
    /// Polar cone and bipolar check of a generated cone
    Polar {
        #[arg(long)]
        cone: PathBuf,
    },
    /// Primal and dual prices of a truncated countable market
    GapStudy {
        #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 100, 1000])]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 1000.0)]
        lower_bound: f64,
        #[arg(long, default_value_t = 0.9)]
        r: f64,
        #[arg(long, default_value_t = 2.0)]
        s0: f64,
    },
    /// Check an input file or an emitted report
    Validate {
        path: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<FileKind>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

fn market_code(e: &MarketError) -> &'static str {
    match e {
        MarketError::Dimension { .. } => "DimensionError",
        MarketError::SchemaVersion(_) => "SchemaVersion",
        _ => "ValidationError",
    }
}

fn measure_code(e: &MeasureError) -> &'static str {
    match e {
        MeasureError::NoMeasure => "NoMeasure",
        MeasureError::Normalization { .. } | MeasureError::NegativeDensity { .. } => "NormalizationError",
        MeasureError::Dimension { .. } | MeasureError::WeightMismatch => "DimensionError",
        MeasureError::Precondition(_) => "PreconditionError",
        MeasureError::SchemaVersion(_) => "SchemaVersion",
        MeasureError::Market(m) => market_code(m),
        MeasureError::Lp(_) => "LpError",
        MeasureError::Invalid(_) => "ValidationError",
    }
}

impl CliError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IoError",
            CliError::Parse { .. } => "ParseError",
            CliError::Usage(_) => "UsageError",
            CliError::Market(e) => market_code(e),
            CliError::Measure(e) => measure_code(e),
            CliError::Utility(e) => match e {
                UtilityError::NonInada { .. } => "NonInada",
                UtilityError::RaeRequired => "RaeRequired",
                UtilityError::SchemaVersion(_) => "SchemaVersion",
                _ => "UtilityError",
            },
            CliError::Cone(e) => match e {
                ConeError::EmptyMeasureSet => "NoMeasure",
                ConeError::Dimension { .. } => "DimensionError",
                ConeError::TooLarge { .. } | ConeError::NoVertices(_) => "TooLarge",
                ConeError::Measure(m) => measure_code(m),
                ConeError::Lp(_) => "LpError",
                ConeError::Invalid(_) => "ValidationError",
            },
            CliError::Pricing(e) => match e {
                PricingError::EmptyMeasureSet => "NoMeasure",
                PricingError::Unbounded => "Unbounded",
                PricingError::DualityGap { .. } => "DualityGap",
                PricingError::Dimension { .. } => "DimensionError",
                PricingError::Market(m) => market_code(m),
                PricingError::Measure(m) => measure_code(m),
                PricingError::Lp(_) => "LpError",
                PricingError::Invalid(_) => "ValidationError",
            },
        }
    }

    fn location(&self) -> Option<(usize, usize)> {
        match self {
            CliError::Parse { line, column, .. } => Some((*line, *column)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl From<&CliError> for ErrorDetail {
    fn from(e: &CliError) -> Self {
        let loc = e.location();
        ErrorDetail {
            code: e.code().into(),
            message: e.to_string(),
            line: loc.map(|l| l.0),
            column: loc.map(|l| l.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub report: String,
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceOutput {
    pub schema_version: u32,
    pub report: String,
    pub cone: ConeArg,
    pub exact: bool,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub dual_vertex: Vec<f64>,
    pub strategy: Vec<f64>,
    pub slack: Vec<f64>,
    pub tolerance: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualOutput {
    pub schema_version: u32,
    pub report: String,
    pub dual: f64,
    pub dual_vertex: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityOutput {
    pub schema_version: u32,
    pub report: String,
    pub tolerance: f64,
    pub chain_equalities: Vec<ChainCheck>,
    pub claims_checked: usize,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationOutput {
    pub schema_version: u32,
    pub report: String,
    pub seed: u64,
    pub claims: Vec<Vec<f64>>,
    pub result: RepresentationReport,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateSample {
    pub y: f64,
    #[serde(with = "crate::extended")]
    pub v: f64,
    #[serde(with = "crate::extended")]
    pub v_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityOutput {
    pub schema_version: u32,
    pub report: String,
    pub utility: String,
    #[serde(with = "crate::extended")]
    pub critical_wealth: f64,
    pub inada: InadaReport,
    pub elasticity: Elasticity<f64>,
    pub closed_form_conjugate: bool,
    pub conjugate: Vec<ConjugateSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthCertificate<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_error: Option<ErrorDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyOutput {
    pub schema_version: u32,
    pub report: String,
    pub utility: String,
    #[serde(with = "crate::extended")]
    pub loss_entropy: f64,
    #[serde(with = "crate::extended")]
    pub full_entropy: f64,
    pub b_used: f64,
    pub classification: Classification,
    pub method: EntropyMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarOutput {
    pub schema_version: u32,
    pub report: String,
    pub tolerance: f64,
    pub polar: ConeConfig,
    pub bipolar: BipolarReport,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapStudyOutput {
    pub schema_version: u32,
    pub report: String,
    pub family: TruncationFamily,
    pub tolerance: f64,
    pub rows: Vec<GapRow>,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationOutput {
    pub schema_version: u32,
    pub report: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<FileKind>,
    pub ok: bool,
    pub errors: Vec<ErrorDetail>,
}

/// Rendered report and exit code of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub rendered: String,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    parse_json(path, &read_text(path)?)
}

fn load_utility(path: &Path, critical_wealth: Option<f64>) -> Result<UtilityFunction<f64>, CliError> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let text = read_text(path)?;
        Ok(from_csv(text.as_bytes(), critical_wealth.unwrap_or(f64::NEG_INFINITY))?)
    } else {
        if critical_wealth.is_some() {
            return Err(CliError::Usage("--critical-wealth applies to CSV tables only".into()));
        }
        Ok(load::<UtilityConfig>(path)?.build()?)
    }
}

/// Flag, then `SUPERHEDGE_TOL`, then `default`.
pub fn resolve_tolerance(flag: Option<f64>, default: f64) -> Result<f64, CliError> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{TOL_ENV}={s} is not a number")))?,
            Err(_) => default,
        },
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

fn to_f64<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn price_generic<S: Scalar>(
    config: &MarketConfig,
    spec: &ClaimSpec,
    cone: ConeArg,
    lower_bound: f64,
    tol: f64,
    exact: bool,
) -> Result<PriceOutput, CliError> {
    let m = MarketModel::<S>::build(config)?;
    let poly = separating_polytope(&m)?;
    let x = m.make_claim(spec)?;
    let choice = match cone {
        ConeArg::Cu => ConeChoice::Cu,
        ConeArg::Ku => ConeChoice::Ku,
        ConeArg::Kadm => {
            if !(lower_bound > 0.0 && lower_bound.is_finite()) {
                return Err(CliError::Usage(format!("--lower-bound must be positive, got {lower_bound}")));
            }
            ConeChoice::KAdm {
                lower_bound: S::from_f64_lossy(lower_bound),
            }
        }
    };
    let (primal, pc) = suprep_primal(&m, &x, &choice)?;
    let (dual, dc) = suprep_dual_with(&poly, &x)?;
    let gap = (primal.clone() - dual.clone()).to_f64_lossy();
    Ok(PriceOutput {
        schema_version: SCHEMA_VERSION,
        report: "price".into(),
        cone,
        exact,
        primal: primal.to_f64_lossy(),
        dual: dual.to_f64_lossy(),
        gap,
        dual_vertex: to_f64(&dc.measure),
        strategy: to_f64(&pc.strategy),
        slack: to_f64(&pc.slack),
        tolerance: tol,
        verified: gap.abs() <= tol,
    })
}

fn conjugate_samples(u: &UtilityFunction<f64>) -> Result<(bool, Vec<ConjugateSample>), CliError> {
    let pair = conjugate(u)?;
    let samples = [0.01, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&y| ConjugateSample {
            y,
            v: pair.v(y),
            v_prime: pair.v_prime(y),
        })
        .collect();
    Ok((pair.is_closed_form(), samples))
}

/// JSON and exit code for a report whose `verified` flag decides 0 or 2.
struct Emitted {
    json: serde_json::Value,
    exit_code: i32,
}

fn emit<T: Serialize>(report: &T, verified: bool) -> Emitted {
    Emitted {
        json: serde_json::to_value(report).expect("reports serialize"),
        exit_code: if verified { 0 } else { 2 },
    }
}

fn dispatch(cli: &Cli) -> Result<Emitted, CliError> {
    match &cli.command {
        Command::Price {
            market,
            claim,
            cone,
            lower_bound,
            exact,
        } => {
            let tol = resolve_tolerance(cli.tol, GAP_TOL)?;
            let config: MarketConfig = load(market)?;
            let spec: ClaimSpec = load(claim)?;
            let out = if *exact {
                price_generic::<Rational>(&config, &spec, *cone, *lower_bound, tol, true)?
            } else {
                price_generic::<f64>(&config, &spec, *cone, *lower_bound, tol, false)?
            };
            let ok = out.verified;
            Ok(emit(&out, ok))
        }
        Command::Dual { market, claim } => {
            let m = MarketModel::<f64>::build(&load(market)?)?;
            let poly = separating_polytope(&m)?;
            let x = m.make_claim(&load(claim)?)?;
            let (dual, cert) = suprep_dual_with(&poly, &x)?;
            let out = DualOutput {
                schema_version: SCHEMA_VERSION,
                report: "dual".into(),
                dual,
                dual_vertex: cert.measure,
                density: cert.density,
            };
            Ok(emit(&out, true))
        }
        Command::VerifyDuality { market, exact } => {
            let tol = resolve_tolerance(cli.tol, MEMBERSHIP_TOL)?;
            let config: MarketConfig = load(market)?;
            let report = if *exact {
                verify_duality_chain(&MarketModel::<Rational>::build(&config)?)?
            } else {
                verify_duality_chain(&MarketModel::<f64>::build(&config)?)?
            };
            let chain: Vec<ChainCheck> = report
                .chain_equalities
                .into_iter()
                .map(|c| ChainCheck {
                    holds: c.max_violation <= tol,
                    ..c
                })
                .collect();
            let verified = chain.iter().all(|c| c.holds);
            let out = DualityOutput {
                schema_version: SCHEMA_VERSION,
                report: "duality".into(),
                tolerance: tol,
                chain_equalities: chain,
                claims_checked: report.claims_checked,
                verified,
            };
            Ok(emit(&out, verified))
        }
        Command::VerifyRepresentation { market, claim, samples } => {
            let m = MarketModel::<f64>::build(&load(market)?)?;
            let claims = match claim {
                Some(path) => vec![m.make_claim(&load(path)?)?],
                None => (0..*samples as u64)
                    .map(|i| m.claim(random_claim(cli.seed.wrapping_mul(1_000_003).wrapping_add(i), m.num_states(), 1.0)))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let result = verify_representation(&m, &claims, &[])?;
            let verified = result.all_consistent;
            let out = RepresentationOutput {
                schema_version: SCHEMA_VERSION,
                report: "representation".into(),
                seed: cli.seed,
                claims: claims.into_iter().map(|c| c.payoff).collect(),
                result,
                verified,
            };
            Ok(emit(&out, verified))
        }
        Command::UtilityCheck {
            utility,
            alpha,
            b,
            critical_wealth,
        } => {
            let u = load_utility(utility, *critical_wealth)?;
            let inada = check_inada(&u);
            let elasticity = asymptotic_elasticity_minus(&u)?;
            let (closed_form_conjugate, samples) = conjugate_samples(&u)?;
            let growth = match b {
                Some(b) => growth_constants_with_b(&conjugate(&u)?, *alpha, *b),
                None => growth_constants(&u, *alpha),
            };
            let (growth, growth_error) = match growth {
                Ok(g) => (Some(g), None),
                Err(e) => (None, Some(ErrorDetail::from(&CliError::from(e)))),
            };
            let out = UtilityOutput {
                schema_version: SCHEMA_VERSION,
                report: "utility".into(),
                utility: u.label(),
                critical_wealth: u.critical_wealth(),
                inada,
                elasticity,
                closed_form_conjugate,
                conjugate: samples,
                growth,
                growth_error,
            };
            Ok(emit(&out, true))
        }
        Command::EntropyClassify {
            measure,
            utility,
            market,
            b,
            critical_wealth,
        } => {
            let u = load_utility(utility, *critical_wealth)?;
            let pair = conjugate(&u)?;
            let config: MeasureConfig = load(measure)?;
            let m = match market {
                Some(path) => Some(MarketModel::<f64>::build(&load(path)?)?),
                None => None,
            };
            let q = config.build(m.as_ref())?;
            let r = classify_measure(&q, &pair, m.as_ref(), *b)?;
            let out = EntropyOutput {
                schema_version: SCHEMA_VERSION,
                report: "entropy".into(),
                utility: u.label(),
                loss_entropy: r.loss_entropy,
                full_entropy: r.full_entropy,
                b_used: r.b_used,
                classification: r.classification,
                method: r.method,
            };
            Ok(emit(&out, true))
        }
        Command::Polar { cone } => {
            let tol = resolve_tolerance(cli.tol, MEMBERSHIP_TOL)?;
            let c = load::<ConeConfig>(cone)?.build::<f64>()?;
            let polar = c.polar()?;
            let mut bipolar = bipolar_report(&c)?;
            bipolar.holds = bipolar.bipolar_violation <= tol && bipolar.hull_polar_violation <= tol;
            let verified = bipolar.holds;
            let out = PolarOutput {
                schema_version: SCHEMA_VERSION,
                report: "polar".into(),
                tolerance: tol,
                polar: ConeConfig::from_cone(&polar),
                bipolar,
                verified,
            };
            Ok(emit(&out, verified))
        }
        Command::GapStudy {
            levels,
            lower_bound,
            r,
            s0,
        } => {
            let tol = resolve_tolerance(cli.tol, GAP_TOL)?;
            let family = TruncationFamily { r: *r, s0: *s0 };
            let rows = truncation_gap_study(
                &family,
                levels,
                *lower_bound,
                &[StudyClaim::UnboundedBelow, StudyClaim::BoundedBelow],
            )?;
            // only the bounded-below claim carries a gap assertion
            let verified = rows
                .iter()
                .filter(|r| r.claim == StudyClaim::BoundedBelow)
                .all(|r| r.gap.abs() <= tol);
            let out = GapStudyOutput {
                schema_version: SCHEMA_VERSION,
                report: "gap_study".into(),
                family,
                tolerance: tol,
                rows,
                verified,
            };
            Ok(emit(&out, verified))
        }
        Command::Validate { path, kind } => {
            let (kind, errors) = validate_file(path, *kind);
            let ok = errors.is_empty();
            let out = ValidationOutput {
                schema_version: SCHEMA_VERSION,
                report: "validation".into(),
                path: path.display().to_string(),
                kind,
                ok,
                errors,
            };
            Ok(Emitted {
                json: serde_json::to_value(&out).expect("reports serialize"),
                exit_code: if ok { 0 } else { 1 },
            })
        }
    }
}

fn detect_kind(value: &serde_json::Value) -> Option<FileKind> {
    let obj = value.as_object()?;
    if obj.contains_key("report") {
        Some(FileKind::Report)
    } else if obj.contains_key("tree") {
        Some(FileKind::Market)
    } else if obj.contains_key("generators") {
        Some(FileKind::Cone)
    } else if obj.contains_key("density") || obj.contains_key("countable") {
        Some(FileKind::Measure)
    } else if obj.contains_key("kind") {
        Some(FileKind::Utility)
    } else if obj.contains_key("type") {
        Some(FileKind::Claim)
    } else {
        None
    }
}

fn check_report(path: &Path, text: &str, tag: &str) -> Result<(), CliError> {
    match tag {
        "price" => parse_json::<PriceOutput>(path, text).map(drop),
        "dual" => parse_json::<DualOutput>(path, text).map(drop),
        "duality" => parse_json::<DualityOutput>(path, text).map(drop),
        "representation" => parse_json::<RepresentationOutput>(path, text).map(drop),
        "utility" => parse_json::<UtilityOutput>(path, text).map(drop),
        "entropy" => parse_json::<EntropyOutput>(path, text).map(drop),
        "polar" => parse_json::<PolarOutput>(path, text).map(drop),
        "gap_study" => parse_json::<GapStudyOutput>(path, text).map(drop),
        "validation" => parse_json::<ValidationOutput>(path, text).map(drop),
        "error" => parse_json::<ErrorReport>(path, text).map(drop),
        other => Err(CliError::Usage(format!("unknown report tag `{other}`"))),
    }
}

fn validate_as(path: &Path, text: &str, value: &serde_json::Value, kind: FileKind) -> Result<(), CliError> {
    match value.get("schema_version") {
        None => {}
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => return Err(CliError::Usage(format!("unsupported schema_version {v}, expected 1"))),
    }
    match kind {
        FileKind::Market => {
            MarketModel::<f64>::build(&parse_json::<MarketConfig>(path, text)?)?;
        }
        FileKind::Claim => {
            let spec: ClaimSpec = parse_json(path, text)?;
            let (strike, values) = (spec.strike.is_some(), spec.values.is_some());
            let ok = match spec.kind {
                crate::market::ClaimKind::Vector => values && !strike,
                _ => strike && !values,
            };
            if !ok {
                return Err(MarketError::ClaimSpec("call/put need `strike`, vector needs `values`".into()).into());
            }
        }
        FileKind::Measure => {
            parse_json::<MeasureConfig>(path, text)?.build::<f64>(None)?;
        }
        FileKind::Utility => {
            parse_json::<UtilityConfig>(path, text)?.build::<f64>()?;
        }
        FileKind::Cone => {
            parse_json::<ConeConfig>(path, text)?.build::<f64>()?;
        }
        FileKind::Report => {
            let tag = value
                .get("report")
                .and_then(|t| t.as_str())
                .ok_or_else(|| CliError::Usage("report without a `report` tag".into()))?;
            check_report(path, text, tag)?;
        }
    }
    Ok(())
}

/// Parses `path` as `kind` (detected from its keys when `None`), then runs
/// the owning module's semantic checks. CSV files are utility tables.
pub fn validate_file(path: &Path, kind: Option<FileKind>) -> (Option<FileKind>, Vec<ErrorDetail>) {
    let text = match read_text(path) {
        Ok(t) => t,
        Err(e) => return (kind, vec![ErrorDetail::from(&e)]),
    };
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        let errors = match from_csv::<f64, _>(text.as_bytes(), f64::NEG_INFINITY) {
            Ok(_) => vec![],
            Err(e) => vec![ErrorDetail::from(&CliError::from(e))],
        };
        return (Some(FileKind::Utility), errors);
    }
    let value: serde_json::Value = match parse_json(path, &text) {
        Ok(v) => v,
        Err(e) => return (kind, vec![ErrorDetail::from(&e)]),
    };
    let Some(kind) = kind.or_else(|| detect_kind(&value)) else {
        let e = CliError::Usage("cannot tell the file kind from its keys; pass --kind".into());
        return (None, vec![ErrorDetail::from(&e)]);
    };
    match validate_as(path, &text, &value, kind) {
        Ok(()) => (Some(kind), vec![]),
        Err(e) => (Some(kind), vec![ErrorDetail::from(&e)]),
    }
}

fn render_text(value: &serde_json::Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                if v.is_object() || (v.is_array() && v.as_array().is_some_and(|a| a.iter().any(|x| x.is_object()))) {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render_text(v, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}{k}: {v}\n"));
                }
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                out.push_str(&format!("{pad}[{i}]\n"));
                render_text(v, indent + 1, out);
            }
        }
        other => out.push_str(&format!("{pad}{other}\n")),
    }
}

fn render(value: &serde_json::Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            render_text(value, 0, &mut s);
            s
        }
    }
}

fn error_value(e: &CliError) -> serde_json::Value {
    let report = ErrorReport {
        schema_version: SCHEMA_VERSION,
        report: "error".into(),
        error: ErrorDetail::from(e),
    };
    serde_json::to_value(&report).expect("reports serialize")
}

/// Runs a parsed command without touching stdout or the output file.
pub fn execute(cli: &Cli) -> Outcome {
    let (value, exit_code) = match dispatch(cli) {
        Ok(e) => (e.json, e.exit_code),
        Err(e) => (error_value(&e), 1),
    };
    Outcome {
        exit_code,
        rendered: render(&value, cli.format),
    }
}

/// Parses `args` (program name first), runs the command and writes the
/// report. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    let msg = e.kind().as_str().unwrap_or("invalid arguments").to_string();
                    print!("{}", render(&error_value(&CliError::Usage(msg)), Format::Json));
                    1
                }
            };
        }
    };
    let outcome = execute(&cli);
    if outcome.exit_code == 1 {
        eprintln!("superhedge: input error (see report)");
    } else if outcome.exit_code == 2 {
        eprintln!("superhedge: verification failed (see report)");
    }
    match &cli.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &outcome.rendered) {
                eprintln!("superhedge: {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{}", outcome.rendered),
    }
    outcome.exit_code
}
