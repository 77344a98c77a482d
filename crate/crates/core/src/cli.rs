//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analytic::{quasi_power_params, rho_catalog};
use crate::classify::classify;
use crate::moments::{moments_of_row, summaries_csv};
use crate::oeis::{fetch_bfile, known_layout, match_triangle, FetchOptions, Layout, OeisError, Width};
use crate::poly::Poly;
use crate::rational::{fmt_rational, parse_rational, to_f64};
use crate::recurrence::{catalog_spec, load_spec, parse_params, FamilyId, RecurrenceSpec, RowGenerator, Shape};
use crate::verify::{pmf_csv, verify_law, ToleranceSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_GENERATION: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;
pub const EXIT_IO: i32 = 6;

/// Environment variable naming the fixture directory.
pub const FIXTURES_ENV: &str = "EULERLAW_FIXTURES";
/// Environment variable naming the b-file cache directory.
pub const CACHE_ENV: &str = "EULERLAW_CACHE";
/// Fixture directory used when neither the flag nor the environment names one.
pub const DEFAULT_FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/oeis");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "eulerlaw", version, about = "Eulerian-type recurrences: triangles, moments and limit laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print rows as `n,k,value`.
    Generate(CommonArgs),
    /// Print the limit law as JSON.
    Classify(CommonArgs),
    /// Compare rows with the classified law.
    Verify(CommonArgs),
    /// Print exact moments per row.
    Moments(CommonArgs),
    /// Compare the triangle with an OEIS b-file.
    Oeis(CommonArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// Spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Catalog family followed by its parameters, e.g. `--family A 1 1 1`.
    #[arg(long, num_args = 1.., action = clap::ArgAction::Append, value_name = "FAMILY PARAMS")]
    pub family: Option<Vec<String>>,
    /// Rows after the initial one.
    #[arg(long, default_value_t = 10)]
    pub rows: i64,
    /// Highest moment order.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `verify`: also write `n,k,empirical,limit` rows here.
    #[arg(long)]
    pub pmf: Option<PathBuf>,
    /// Comma-separated row indices for `verify`.
    #[arg(long, default_value = "100,200,400")]
    pub ns: String,
    /// Law to verify against; only `auto` (the classifier's answer).
    #[arg(long, default_value = "auto")]
    pub law: String,
    #[arg(long)]
    pub tol_moment: Option<f64>,
    #[arg(long)]
    pub tol_tv: Option<f64>,
    #[arg(long)]
    pub tol_ks: Option<f64>,
    /// Exit 4 when the law is unknown.
    #[arg(long)]
    pub strict: bool,
    /// Never touch the network.
    #[arg(long)]
    pub offline: bool,
    /// A-number for `oeis`.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Row index of the first triangle row.
    #[arg(long)]
    pub first_row: Option<i64>,
    /// Coefficients dropped at the low end of each row.
    #[arg(long)]
    pub lead_trim: Option<usize>,
    /// Entries per row as `a,b` for `a n + b`, or `degree`.
    #[arg(long)]
    pub width: Option<String>,
}

/// Input source: a spec file or a catalog family.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Spec(PathBuf),
    Family { family: FamilyId, params: Vec<String> },
}

/// Resolved configuration for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Input,
    pub rows: i64,
    pub order: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub pmf: Option<PathBuf>,
    pub ns: Vec<i64>,
    pub tolerances: ToleranceSet,
    pub strict: bool,
    pub offline: bool,
    pub id: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub cache: PathBuf,
    pub layout: Option<Layout>,
    pub first_row: Option<i64>,
    pub lead_trim: Option<usize>,
    pub width: Option<Width>,
}

impl RunConfig {
    /// Configuration for a spec file with defaults elsewhere.
    pub fn for_spec(path: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            input: Input::Spec(path.into()),
            rows: 10,
            order: 4,
            format: Format::Csv,
            output: None,
            pmf: None,
            ns: vec![100, 200, 400],
            tolerances: ToleranceSet::default(),
            strict: false,
            offline: false,
            id: None,
            fixtures: std::env::var_os(FIXTURES_ENV)
                .map(PathBuf::from)
                .or_else(|| Some(PathBuf::from(DEFAULT_FIXTURES)).filter(|p| p.is_dir())),
            cache: std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("cache")),
            layout: None,
            first_row: None,
            lead_trim: None,
            width: None,
        }
    }

    /// Resolve flags, then environment, then defaults.
    pub fn from_args(a: &CommonArgs) -> Result<RunConfig, CliError> {
        let input = match (&a.spec, &a.family) {
            (Some(p), None) => Input::Spec(p.clone()),
            (None, Some(f)) => {
                let (name, params) = f.split_first().ok_or_else(|| CliError::spec("--family needs a family name"))?;
                let family = FamilyId::parse(name).ok_or_else(|| CliError::spec(format!("unknown family `{name}`")))?;
                Input::Family { family, params: params.to_vec() }
            }
            _ => return Err(CliError::spec("give exactly one of --spec and --family")),
        };
        let ns = a
            .ns
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<i64>().map_err(|_| CliError::spec(format!("bad n `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let width = match a.width.as_deref() {
            None => None,
            Some("degree") => Some(Width::Degree),
            Some(s) => {
                let (x, y) = s.split_once(',').ok_or_else(|| CliError::spec("--width is `a,b` or `degree`"))?;
                let parse = |t: &str| t.trim().parse::<i64>().map_err(|_| CliError::spec(format!("bad width `{s}`")));
                Some(Width::Linear { a: parse(x)?, b: parse(y)? })
            }
        };
        let mut tol = ToleranceSet::default();
        if let Some(x) = a.tol_moment {
            tol.moment_rel = x;
            tol.moment_rel_slow = tol.moment_rel_slow.max(x);
        }
        if let Some(x) = a.tol_tv {
            tol.tv = x;
        }
        if let Some(x) = a.tol_ks {
            tol.ks_scale = x;
        }
        let mut cfg = RunConfig::for_spec(PathBuf::new());
        cfg.input = input;
        cfg.rows = a.rows;
        cfg.order = a.order;
        cfg.format = a.format;
        cfg.output = a.output.clone();
        cfg.pmf = a.pmf.clone();
        cfg.ns = ns;
        cfg.tolerances = tol;
        cfg.strict = a.strict;
        cfg.offline = a.offline;
        cfg.id = a.id.clone();
        if a.fixtures.is_some() {
            cfg.fixtures = a.fixtures.clone();
        }
        if let Some(c) = &a.cache {
            cfg.cache = c.clone();
        }
        cfg.first_row = a.first_row;
        cfg.lead_trim = a.lead_trim;
        cfg.width = width;
        if a.law != "auto" {
            return Err(CliError::spec(format!("unsupported --law `{}`; only `auto`", a.law)));
        }
        Ok(cfg)
    }
}

/// A failure with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        CliError { code, kind, message: message.into() }
    }

    fn spec(message: impl Into<String>) -> Self {
        CliError::new(EXIT_SPEC, "spec", message)
    }

    fn io(message: impl Into<String>) -> Self {
        CliError::new(EXIT_IO, "io", message)
    }

    pub fn to_json(&self) -> Value {
        json!({"error": {"kind": self.kind, "code": self.code, "message": self.message}})
    }
}

struct Loaded {
    spec: RecurrenceSpec,
    family: Option<(FamilyId, Vec<crate::rational::Rational>)>,
}

fn load_input(cfg: &RunConfig) -> Result<Loaded, CliError> {
    match &cfg.input {
        Input::Spec(path) => {
            let spec = load_spec(path).map_err(|e| match e {
                crate::recurrence::SpecError::Io(m) => CliError::io(m),
                other => CliError::spec(other.to_string()),
            })?;
            Ok(Loaded { spec, family: None })
        }
        Input::Family { family, params } => {
            let ps = parse_params(params).map_err(|e| CliError::spec(e.to_string()))?;
            let entry = catalog_spec(*family, &ps).map_err(|e| CliError::spec(e.to_string()))?;
            Ok(Loaded { spec: entry.spec, family: Some((*family, ps)) })
        }
    }
}

fn emit(cfg: &RunConfig, out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::io(e.to_string())),
    }
}

fn finish(res: Result<i32, CliError>, err: &mut dyn Write) -> i32 {
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.code
        }
    }
}

fn rows_of(spec: &RecurrenceSpec, count: i64) -> Result<Vec<(i64, Poly)>, CliError> {
    if count < 0 {
        return Err(CliError::spec("--rows must be nonnegative"));
    }
    let mut gen = RowGenerator::new(spec).map_err(|e| CliError::spec(e.to_string()))?;
    (0..=count).map(|_| gen.next_row().map_err(|e| CliError::new(EXIT_GENERATION, "generation", e.to_string()))).collect()
}

/// Rows as `n,k,value` CSV.
pub fn rows_csv(rows: &[(i64, Poly)]) -> String {
    let mut s = String::from("n,k,value\n");
    for (n, p) in rows {
        for (k, c) in p.coeffs().iter().enumerate() {
            s.push_str(&format!("{n},{k},{}\n", fmt_rational(c)));
        }
    }
    s
}

/// Read back [`rows_csv`] output.
pub fn parse_rows_csv(text: &str) -> Result<Vec<(i64, Poly)>, String> {
    let mut rows: Vec<(i64, Vec<crate::rational::Rational>)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(format!("line {}: expected 3 fields", i + 1));
        }
        let n: i64 = f[0].parse().map_err(|_| format!("line {}: bad n", i + 1))?;
        let k: usize = f[1].parse().map_err(|_| format!("line {}: bad k", i + 1))?;
        let v = parse_rational(f[2]).ok_or_else(|| format!("line {}: bad value", i + 1))?;
        if rows.last().map(|r| r.0) != Some(n) {
            rows.push((n, Vec::new()));
        }
        let row = &mut rows.last_mut().expect("pushed").1;
        if row.len() != k {
            return Err(format!("line {}: k out of order", i + 1));
        }
        row.push(v);
    }
    Ok(rows.into_iter().map(|(n, c)| (n, Poly::new(c))).collect())
}

pub fn cmd_generate(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| {
        let loaded = load_input(cfg)?;
        let rows = rows_of(&loaded.spec, cfg.rows)?;
        let text = match cfg.format {
            Format::Csv => rows_csv(&rows),
            Format::Json => {
                let v = json!({
                    "spec": loaded.spec.name,
                    "rows": rows.iter().map(|(n, p)| json!({
                        "n": n, "coeffs": p.coeffs().iter().map(fmt_rational).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                });
                format!("{v:#}\n")
            }
        };
        emit(cfg, out, &text)?;
        Ok(EXIT_OK)
    })();
    finish(res, err)
}

fn shape_name(s: &Shape) -> &'static str {
    match s {
        Shape::EulerianLinear { .. } => "EulerianLinear",
        Shape::NnForm(_) => "NnForm",
        Shape::BetaZero { .. } => "BetaZero",
        Shape::BetaRR(_) => "BetaRR",
        Shape::General { .. } => "General",
    }
}

pub fn cmd_classify(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| {
        let loaded = load_input(cfg)?;
        let (law, ctx) = classify(&loaded.spec);
        let mut v = json!({
            "spec": loaded.spec.name,
            "law": law.to_json(),
            "shape": shape_name(&ctx.canonical.shape),
            "nonneg_checked_upto": ctx.nonneg_checked_upto,
            "warnings": ctx.warnings,
        });
        if let Some((family, params)) = &loaded.family {
            v["analytic"] = match rho_catalog(*family, params).and_then(|e| quasi_power_params(&e).map(|q| (e, q))) {
                Ok((e, q)) => {
                    let agrees = match &law {
                        crate::classify::LimitLaw::Normal { mu, sigma2, .. } => {
                            (q.mu - to_f64(mu)).abs() < 1e-7 && (q.sigma2 - to_f64(sigma2)).abs() < 1e-7
                        }
                        _ => false,
                    };
                    json!({"entry": e.label, "mu": q.mu, "sigma2": q.sigma2, "err_mu": q.err_mu,
                           "err_sigma2": q.err_sigma2, "degenerate": q.degenerate, "agrees": agrees})
                }
                Err(e) => json!({"error": e.to_string()}),
            };
        }
        emit(cfg, out, &format!("{v:#}\n"))?;
        Ok(if law.is_unknown() && cfg.strict { EXIT_UNKNOWN } else { EXIT_OK })
    })();
    finish(res, err)
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| {
        let loaded = load_input(cfg)?;
        let (law, _) = classify(&loaded.spec);
        if law.is_unknown() {
            let code = if cfg.strict { EXIT_UNKNOWN } else { EXIT_VERIFY };
            return Err(CliError::new(code, "verification", format!("unknown law: {}", law.to_json()["params"]["reason"])));
        }
        let report = verify_law(&loaded.spec, &law, &cfg.ns, &cfg.tolerances)
            .map_err(|e| CliError::new(EXIT_GENERATION, "verification", e.to_string()))?;
        if let Some(path) = &cfg.pmf {
            let csv = pmf_csv(&loaded.spec, &law, &cfg.ns).map_err(|e| CliError::new(EXIT_GENERATION, "verification", e.to_string()))?;
            std::fs::write(path, csv).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        }
        emit(cfg, out, &format!("{:#}\n", report.to_json()))?;
        Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY })
    })();
    finish(res, err)
}

pub fn cmd_moments(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| {
        let loaded = load_input(cfg)?;
        let rows = rows_of(&loaded.spec, cfg.rows)?;
        let sums = rows
            .iter()
            .map(|(n, p)| moments_of_row(*n, p, cfg.order))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::new(EXIT_GENERATION, "moments", e.to_string()))?;
        let text = match cfg.format {
            Format::Csv => summaries_csv(&sums, cfg.order),
            Format::Json => {
                let v: Vec<Value> = sums
                    .iter()
                    .map(|s| {
                        json!({
                            "n": s.n, "total": fmt_rational(&s.total), "mean": fmt_rational(&s.mean),
                            "variance": fmt_rational(&s.variance),
                            "central": s.central.iter().take(cfg.order + 1).map(fmt_rational).collect::<Vec<_>>(),
                            "factorial": s.factorial.iter().take(cfg.order + 1).map(fmt_rational).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                format!("{:#}\n", Value::Array(v))
            }
        };
        emit(cfg, out, &text)?;
        Ok(EXIT_OK)
    })();
    finish(res, err)
}

pub fn cmd_oeis(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| {
        let id = cfg.id.as_deref().ok_or_else(|| CliError::spec("--id is required"))?;
        crate::oeis::validate_a_number(id).map_err(|e| CliError::spec(e.to_string()))?;
        let loaded = load_input(cfg)?;
        let opts = FetchOptions::new(cfg.cache.clone(), cfg.fixtures.clone(), cfg.offline);
        let bfile = fetch_bfile(id, &opts).map_err(|e| match e {
            OeisError::BadId(_) => CliError::spec(e.to_string()),
            OeisError::Malformed { .. } | OeisError::NonMonotone { .. } | OeisError::Empty | OeisError::Checksum(_) => {
                CliError::new(EXIT_VERIFY, "oeis", e.to_string())
            }
            other => CliError::io(other.to_string()),
        })?;
        let mut layout = cfg.layout.or_else(|| known_layout(id)).unwrap_or(Layout { first_row: loaded.spec.start, ..Layout::default() });
        if let Some(r) = cfg.first_row {
            layout.first_row = r;
        }
        if let Some(t) = cfg.lead_trim {
            layout.lead_trim = t;
        }
        if let Some(w) = cfg.width {
            layout.width = w;
        }
        let mut gen = RowGenerator::new(&loaded.spec).map_err(|e| CliError::spec(e.to_string()))?;
        let mut rows = Vec::new();
        let target = layout.rows_needed(bfile.len());
        let mut covered = 0usize;
        loop {
            let (n, p) = gen.next_row().map_err(|e| CliError::new(EXIT_GENERATION, "generation", e.to_string()))?;
            if n >= layout.first_row {
                covered += layout.row_entries(n, &p).len();
            }
            rows.push(p);
            let done = match target {
                Some(t) => n >= t,
                None => covered >= bfile.len() || n > layout.first_row + bfile.len() as i64,
            };
            if done {
                break;
            }
        }
        let m = match_triangle(id, &rows, loaded.spec.start, &bfile, &layout);
        let mut v = m.to_json();
        v["spec"] = json!(loaded.spec.name);
        v["entries"] = json!(bfile.len());
        emit(cfg, out, &format!("{v:#}\n"))?;
        Ok(if m.is_full() { EXIT_OK } else { EXIT_VERIFY })
    })();
    finish(res, err)
}

fn is_negative_param(s: &str) -> bool {
    s.strip_prefix('-').and_then(|t| t.chars().next()).is_some_and(|c| c.is_ascii_digit() || c == '.')
}

/// Rewrite each family token as `--family=<value>` so negative parameters are not read as flags.
fn protect_negative_params<I, T>(args: I) -> Vec<std::ffi::OsString>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString>,
{
    let mut out = Vec::new();
    let mut in_family = false;
    for a in args {
        let a: std::ffi::OsString = a.into();
        let s = a.to_string_lossy().into_owned();
        if s == "--family" {
            in_family = true;
            continue;
        }
        if in_family && (!s.starts_with('-') || is_negative_param(&s)) {
            out.push(format!("--family={s}").into());
            continue;
        }
        in_family = false;
        out.push(a);
    }
    out
}

type Handler = fn(&RunConfig, &mut dyn Write, &mut dyn Write) -> i32;

/// Parse arguments and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(protect_negative_params(args)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    let (args, f): (&CommonArgs, Handler) = match &cli.command {
        Command::Generate(a) => (a, cmd_generate),
        Command::Classify(a) => (a, cmd_classify),
        Command::Verify(a) => (a, cmd_verify),
        Command::Moments(a) => (a, cmd_moments),
        Command::Oeis(a) => (a, cmd_oeis),
    };
    match RunConfig::from_args(args) {
        Ok(cfg) => f(&cfg, out, err),
        Err(e) => finish(Err(e), err),
    }
}
