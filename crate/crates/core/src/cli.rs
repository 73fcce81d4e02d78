//! `plansage` command-line interface.
//!
//! JSON goes to stdout, human-readable reports to stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::catalog::{load_ratings, scan_catalog_file, CatalogError, CatalogScan, Ratings, UserPreference};
use crate::compare::compare_seeded;
use crate::pipeline::{RecommendationRequest, Snapshot};
use crate::service::{self, ServiceConfig, ADMIN_TOKEN_ENV, CONFIG_ENV};
use crate::simeng::Metric;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CATALOG_LOAD: u8 = 3;
pub const EXIT_NO_CANDIDATES: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "plansage", version, about = "Health insurance plan recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Cosine,
    Knn,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cosine => Metric::Cosine,
            MetricArg::Knn => Metric::EuclideanKnn,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a catalog (and optionally a ratings file) and print a load report.
    Validate {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        ratings: Option<PathBuf>,
    },
    /// Run one recommendation and print the JSON payload.
    Recommend {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        ratings: PathBuf,
        /// Preference JSON file.
        #[arg(long)]
        pref: PathBuf,
        #[arg(long, value_enum, default_value = "cosine")]
        metric: MetricArg,
    },
    /// Compare cosine and KNN over seeded random preferences.
    Compare {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Start the HTTP service.
    Serve {
        /// TOML config; falls back to $PLANSAGE_CONFIG.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Output of a command: bytes for stdout, text for stderr, and an exit code.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

impl Outcome {
    fn fail(code: u8, stderr: String) -> Self {
        Outcome {
            stdout: String::new(),
            stderr,
            code,
        }
    }

    fn emit(self) -> ExitCode {
        let _ = std::io::stdout().lock().write_all(self.stdout.as_bytes());
        let _ = std::io::stderr().lock().write_all(self.stderr.as_bytes());
        ExitCode::from(self.code)
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Serve { config } => serve(config),
        other => execute(other).emit(),
    }
}

/// Runs every command except `serve`, capturing its output.
pub fn execute(command: Command) -> Outcome {
    match command {
        Command::Validate { catalog, ratings } => validate(&catalog, ratings.as_deref()),
        Command::Recommend {
            catalog,
            ratings,
            pref,
            metric,
        } => recommend(&catalog, &ratings, &pref, metric.into()),
        Command::Compare {
            catalog,
            ratings,
            trials,
            seed,
        } => compare(&catalog, &ratings, trials as usize, seed),
        Command::Serve { .. } => Outcome::fail(EXIT_INVALID, "serve cannot be captured\n".into()),
    }
}

fn describe_catalog_error(e: &CatalogError) -> String {
    let mut s = format!("error: {e}\n");
    if let CatalogError::SchemaViolation { violations } = e {
        for v in violations {
            let _ = writeln!(s, "  {v}");
        }
    }
    s
}

fn validate(catalog: &Path, ratings: Option<&Path>) -> Outcome {
    let scan = match scan_catalog_file(catalog) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(EXIT_INVALID, describe_catalog_error(&e)),
    };
    let mut out = String::new();
    let mut ok = scan.violations.is_empty();

    let _ = writeln!(out, "{} plans, {} violations", scan.plans.len(), scan.violations.len());
    for v in &scan.violations {
        let _ = writeln!(out, "  {v}");
    }
    if scan.plans.is_empty() && scan.violations.is_empty() {
        let _ = writeln!(out, "error: {}", CatalogError::EmptyCatalog);
        ok = false;
    }
    write_histograms(&mut out, &scan);

    if let Some(path) = ratings {
        match load_ratings(path) {
            Ok(r) => {
                let _ = writeln!(out, "{} rated HMOs", r.len());
                let unrated = unrated_hmos(&scan, &r);
                if !unrated.is_empty() {
                    let _ = writeln!(
                        out,
                        "note: {} HMO(s) without a rating (rank as 0.0): {}",
                        unrated.len(),
                        unrated.into_iter().collect::<Vec<_>>().join(", ")
                    );
                }
            }
            Err(e) => {
                out.push_str(&describe_catalog_error(&e));
                ok = false;
            }
        }
    }
    Outcome {
        stdout: String::new(),
        stderr: out,
        code: if ok { EXIT_OK } else { EXIT_INVALID },
    }
}

fn write_histograms(out: &mut String, scan: &CatalogScan) {
    let mut tiers: BTreeMap<u8, usize> = (1..=4).map(|t| (t, 0)).collect();
    let mut regions: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &scan.plans {
        *tiers.entry(p.premium_tier).or_default() += 1;
        *regions.entry(p.coverage_region.as_str()).or_default() += 1;
    }
    let tiers: Vec<String> = tiers.iter().map(|(t, n)| format!("tier{t}={n}")).collect();
    let regions: Vec<String> = regions.iter().map(|(r, n)| format!("{r}={n}")).collect();
    let _ = writeln!(out, "tiers: {}", tiers.join(" "));
    let _ = writeln!(out, "regions: {}", regions.join(" "));
    if scan.report.missing_values.is_empty() {
        let _ = writeln!(out, "missing values: none");
    } else {
        let missing: Vec<String> = scan
            .report
            .missing_values
            .iter()
            .map(|(f, n)| format!("{f}={n}"))
            .collect();
        let _ = writeln!(
            out,
            "missing values (defaulted to no): {} across {} rows",
            missing.join(" "),
            scan.report.row_warnings.len()
        );
    }
}

fn unrated_hmos<'a>(scan: &'a CatalogScan, ratings: &Ratings) -> BTreeSet<&'a str> {
    scan.plans
        .iter()
        .map(|p| p.hmo_id.as_str())
        .filter(|h| ratings.get(h).is_none())
        .collect()
}

fn read_preference(path: &Path) -> Result<UserPreference, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: invalid JSON: {e}", path.display()))?;
    UserPreference::from_json(&value).map_err(|errors| {
        errors
            .iter()
            .map(|e| format!("{}: {e}", path.display()))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn recommend(catalog: &Path, ratings: &Path, pref: &Path, metric: Metric) -> Outcome {
    let preference = match read_preference(pref) {
        Ok(p) => p,
        Err(e) => return Outcome::fail(EXIT_INVALID, format!("error: {e}\n")),
    };
    let snapshot = match Snapshot::load(catalog, ratings) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(EXIT_INVALID, describe_catalog_error(&e)),
    };
    let request = RecommendationRequest::new(preference).with_metric(metric);
    match snapshot.respond(&request) {
        Ok(resp) => {
            let (code, stderr) = if resp.is_empty() {
                (
                    EXIT_NO_CANDIDATES,
                    "no plan matches the requested location and budget\n".to_string(),
                )
            } else {
                (EXIT_OK, String::new())
            };
            Outcome {
                stdout: resp.to_json(),
                stderr,
                code,
            }
        }
        Err(e) => Outcome::fail(EXIT_INVALID, format!("error: {e}\n")),
    }
}

fn compare(catalog: &Path, ratings: &Path, trials: usize, seed: u64) -> Outcome {
    let snapshot = match Snapshot::load(catalog, ratings) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(EXIT_INVALID, describe_catalog_error(&e)),
    };
    let report = compare_seeded(&snapshot, trials, seed);
    Outcome {
        stdout: report.to_json(),
        stderr: report.summary(),
        code: EXIT_OK,
    }
}

fn serve(config: Option<PathBuf>) -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();

    let path = config.or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let config = match path
        .ok_or(service::ConfigError::NoConfig)
        .and_then(ServiceConfig::from_file)
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let token = std::env::var(ADMIN_TOKEN_ENV).ok();
    if token.as_deref().is_none_or(str::is_empty) {
        tracing::warn!("{ADMIN_TOKEN_ENV} is not set; /api/v1/admin/reload will reject every request");
    }

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match runtime.block_on(service::serve(config, token)) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                service::ServeError::Catalog(_) => EXIT_CATALOG_LOAD,
                service::ServeError::Config(_) | service::ServeError::Bind { .. } => EXIT_CONFIG,
                service::ServeError::Io(_) => EXIT_INVALID,
            };
            ExitCode::from(code)
        }
    }
}
