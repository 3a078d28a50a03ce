//! Command-line front end.
//!
//! Every subcommand option is also a config-file key of the same name. A run
//! resolves its settings from the config file, then command-line flags, then
//! defaults, and echoes the resolved set into `manifest.json` so it can be
//! replayed with `--config`.
//!
//! Exit status: 0 on success, 1 on internal or I/O failure, 2 on invalid input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde::{Deserialize, Serialize};

use crate::ensemble::{sample_wigner, EntryDistribution, WignerSpec};
use crate::error::Error;
use crate::expansion::{
    expand, format_terms, structural_stats, verify_reconstruction, ExpansionConfig, ExpansionTerm, InitialMonomial,
};
use crate::experiments::{
    edge_statistic, fluctuation_scan, hanson_wright_tail, loglog_fit, median, sample_seed, spectrum_study,
    summarize_cells, HansonWrightConfig, QuadraticFormKind, SampleRecord, ScanConfig, SpectrumConfig, SpectrumRecord,
    SpreadProxy, TailEstimate,
};
use crate::semicircle::{check_msc_bounds, SpectralPoint};
use crate::spectral::{error_terms, identity_suite, lambda_from_r, trace_identity_residual};

pub const OUT_DIR_ENV: &str = "SEMICIRCLE_LAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Validation(m) | Self::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Singular { .. } | Error::DepthCap { .. } | Error::NotHermitian { .. } => Self::Internal(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Internal(format!("{}: {e}", path.display()))
}

struct Key {
    name: &'static str,
    help: &'static str,
    default: Option<&'static str>,
    switch: bool,
}

const fn required(name: &'static str, help: &'static str) -> Key {
    Key { name, help, default: None, switch: false }
}

const fn optional(name: &'static str, help: &'static str, default: &'static str) -> Key {
    Key { name, help, default: Some(default), switch: false }
}

const fn switch(name: &'static str, help: &'static str) -> Key {
    Key { name, help, default: Some("false"), switch: true }
}

const GLOBAL_KEYS: &[Key] = &[
    optional("seed", "base seed of every random draw", "0"),
    optional("threads", "worker threads; never changes results", "1"),
];

const DISTRIBUTION_HELP: &str = "entry distribution: gaussian, rademacher or uniform";

const SUBCOMMANDS: &[(&str, &str, &[Key])] = &[
    (
        "msc",
        "Evaluate m_sc(z) and its bounds",
        &[required("E", "energy"), required("eta", "imaginary part, > 0")],
    ),
    (
        "identities",
        "Residuals of the resolvent identities on sampled matrices",
        &[
            optional("N", "matrix dimension", "8"),
            optional("E", "energy", "0.3"),
            optional("eta", "imaginary part, > 0", "0.5"),
            optional("instances", "number of sampled matrices", "1"),
            optional("distribution", DISTRIBUTION_HELP, "gaussian"),
        ],
    ),
    (
        "expand",
        "Expand 1/G_kk (type A) or G_kk (type B) over the lone coordinates",
        &[
            required("type", "A or B"),
            required("k", "diagonal index of the initial monomial (1-based)"),
            optional("lone", "comma-separated lone coordinates (1-based)", ""),
            optional("q", "moment order; at most 2q off-diagonal factors are expanded", "1"),
            switch("dump", "print the term dump to stdout"),
            optional("verify_n", "if positive, check the expansion numerically on a matrix of this size", "0"),
            optional("E", "energy used by verify_n", "0.4"),
            optional("eta", "imaginary part used by verify_n", "0.6"),
            optional("distribution", DISTRIBUTION_HELP, "gaussian"),
        ],
    ),
    (
        "scan",
        "Fluctuation scan of |m - m_sc| over N, E and eta",
        &[
            required("N", "comma-separated dimensions"),
            optional("E", "comma-separated energies", "0"),
            required("eta", "comma-separated imaginary parts; N*eta >= 5 for every cell"),
            required("samples", "samples per N"),
            optional("distribution", DISTRIBUTION_HELP, "gaussian"),
        ],
    ),
    (
        "counting",
        "Counting-function deviation sup|n - n_sc|",
        &[
            required("N", "comma-separated dimensions"),
            required("samples", "samples per N"),
            optional("distribution", DISTRIBUTION_HELP, "gaussian"),
        ],
    ),
    (
        "rigidity",
        "Eigenvalue deviation from the classical locations",
        &[
            required("N", "comma-separated dimensions"),
            required("samples", "samples per N"),
            optional("distribution", DISTRIBUTION_HELP, "gaussian"),
        ],
    ),
    (
        "edge",
        "Spread of the largest eigenvalue against N",
        &[
            required("N", "comma-separated dimensions, at least 3"),
            required("samples", "samples per N, at least 50"),
            optional("proxy", "spread measure: iqr or median_edge_distance", "iqr"),
            optional("distribution", DISTRIBUTION_HELP, "gaussian"),
        ],
    ),
    (
        "hw",
        "Tail of a centered quadratic form of a random vector",
        &[
            required("N", "vector dimension"),
            required("samples", "number of random vectors"),
            optional("deltas", "comma-separated thresholds, positive and ascending", "1,2,4"),
            optional("kind", "identity or resolvent", "identity"),
            optional("E", "energy of the resolvent kind", "0"),
            optional("eta", "imaginary part of the resolvent kind", "1"),
            optional("distribution", DISTRIBUTION_HELP, "gaussian"),
        ],
    ),
];

fn arg_for(key: &Key) -> Arg {
    let arg = Arg::new(key.name).long(key.name).help(key.help);
    if key.switch {
        arg.action(ArgAction::SetTrue)
    } else {
        arg.value_name("VALUE").allow_hyphen_values(true)
    }
}

pub fn command() -> Command {
    let mut cmd = Command::new("semicircle-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Wigner-matrix numerics: semicircle law, resolvent identities, minor expansions, Monte Carlo studies")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("out-dir").long("out-dir").global(true).value_name("DIR").help(
            "directory for results.csv and manifest.json [default: $SEMICIRCLE_LAB_OUT, else ./out]",
        ))
        .arg(Arg::new("config").long("config").global(true).value_name("FILE").help("flat `key = value` config file"));
    for key in GLOBAL_KEYS {
        cmd = cmd.arg(arg_for(key).global(true));
    }
    for (name, about, keys) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(*name).about(*about).args(keys.iter().map(arg_for)));
    }
    cmd
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = BTreeMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected `key = value`", number + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Validation(format!("config line {}: empty key", number + 1)));
        }
        if values.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::Validation(format!("config line {}: duplicate key `{key}`", number + 1)));
        }
    }
    Ok(values)
}

/// Inverse of [`parse_config`].
pub fn render_config(values: &BTreeMap<String, String>) -> String {
    values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Fully resolved settings of one run.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn resolve(keys: &[&Key], matches: &ArgMatches, config: Option<BTreeMap<String, String>>) -> Result<Self, CliError> {
        let mut values = config.unwrap_or_default();
        if let Some(unknown) = values.keys().find(|k| !keys.iter().any(|key| key.name == k.as_str())) {
            let known: Vec<&str> = keys.iter().map(|k| k.name).collect();
            return Err(CliError::Validation(format!(
                "unknown config key `{unknown}` (expected one of: {})",
                known.join(", ")
            )));
        }
        for key in keys {
            if matches.value_source(key.name) == Some(ValueSource::CommandLine) {
                let value = if key.switch {
                    matches.get_flag(key.name).to_string()
                } else {
                    matches.get_one::<String>(key.name).cloned().unwrap_or_default()
                };
                values.insert(key.name.to_string(), value);
            }
        }
        for key in keys {
            if !values.contains_key(key.name) {
                match key.default {
                    Some(default) => {
                        values.insert(key.name.to_string(), default.to_string());
                    }
                    None => {
                        return Err(CliError::Validation(format!(
                            "missing required key `{0}` (pass --{0} or set `{0} = ...` in the config file)",
                            key.name
                        )))
                    }
                }
            }
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` was not declared"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| CliError::Validation(format!("key `{key}`: cannot parse `{raw}`")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let raw = self.raw(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| CliError::Validation(format!("key `{key}`: cannot parse list item `{}`", item.trim())))
            })
            .collect()
    }

    fn distribution(&self) -> Result<EntryDistribution, CliError> {
        Ok(self.raw("distribution").parse()?)
    }

    fn point(&self) -> Result<SpectralPoint, CliError> {
        Ok(SpectralPoint::new(self.parse("E")?, self.parse("eta")?)?)
    }
}

/// Header plus rows, written with LF line endings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.render()).map_err(|e| io_error(path, e))
    }
}

/// 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SCAN_HEADER: &[&str] =
    &["N", "E", "eta", "sample", "abs_lambda", "im_lambda", "lambda_min", "lambda_max", "counting_stat", "rigidity_stat"];

pub fn scan_table(records: &[SampleRecord]) -> CsvTable {
    let mut table = CsvTable::new(SCAN_HEADER);
    table.rows = records
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                format_float(r.energy),
                format_float(r.eta),
                r.sample.to_string(),
                format_float(r.abs_lambda),
                format_float(r.im_lambda),
                format_float(r.lambda_min),
                format_float(r.lambda_max),
                format_float(r.counting_stat),
                format_float(r.rigidity_stat),
            ]
        })
        .collect();
    table
}

pub const SPECTRUM_HEADER: &[&str] =
    &["N", "sample", "lambda_min", "lambda_max", "counting_stat", "rigidity_stat", "rigidity_sqrt_log_stat"];

pub fn spectrum_table(records: &[SpectrumRecord]) -> CsvTable {
    let mut table = CsvTable::new(SPECTRUM_HEADER);
    table.rows = records
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.sample.to_string(),
                format_float(r.lambda_min),
                format_float(r.lambda_max),
                format_float(r.counting_stat),
                format_float(r.rigidity_stat),
                format_float(r.rigidity_sqrt_log_stat),
            ]
        })
        .collect();
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: BTreeMap<String, String>,
    pub base_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub tool_version: String,
    pub record_count: usize,
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_VALIDATION
            } else {
                let _ = write!(stdout, "{rendered}");
                EXIT_OK
            };
        }
    };
    match dispatch(&matches, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(matches: &ArgMatches, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let (_, _, keys) = SUBCOMMANDS.iter().find(|(n, _, _)| *n == name).expect("registered subcommand");
    let all_keys: Vec<&Key> = GLOBAL_KEYS.iter().chain(keys.iter()).collect();
    let config = match sub.get_one::<String>("config") {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read config file {path}: {e}")))?;
            Some(parse_config(&text)?)
        }
        None => None,
    };
    let settings = Settings::resolve(&all_keys, sub, config)?;
    let out_dir = sub
        .get_one::<String>("out-dir")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let base_seed: u64 = settings.parse("seed")?;
    let threads: usize = settings.parse("threads")?;
    if threads == 0 {
        return Err(CliError::Validation("key `threads`: must be at least 1".into()));
    }

    let started_at = timestamp();
    let mut report = String::new();
    let table = match name {
        "msc" => run_msc(&settings, &mut report)?,
        "identities" => run_identities(&settings, base_seed, &mut report)?,
        "expand" => run_expand(&settings, base_seed, &mut report)?,
        "scan" => run_scan(&settings, base_seed, threads, &mut report)?,
        "counting" | "rigidity" | "edge" => run_spectrum(name, &settings, base_seed, threads, &mut report)?,
        "hw" => run_hw(&settings, base_seed, &mut report)?,
        other => unreachable!("unhandled subcommand {other}"),
    };
    fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
    table.write(&out_dir.join("results.csv"))?;
    let manifest = RunManifest {
        command: name.to_string(),
        config_echo: settings.values.clone(),
        base_seed,
        started_at,
        finished_at: timestamp(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        record_count: table.rows.len(),
    };
    write_manifest(&manifest, &out_dir.join("manifest.json"))?;
    stdout.write_all(report.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(())
}

fn run_msc(settings: &Settings, report: &mut String) -> Result<CsvTable, CliError> {
    let z = settings.point()?;
    let r = check_msc_bounds(z);
    // adding 0.0 turns -0.0 into 0.0
    let _ = writeln!(report, "m_sc = {:.12} {:+.12}i", r.msc.re + 0.0, r.msc.im + 0.0);
    let _ = writeln!(report, "all bounds hold: {}", r.all_ok());
    let mut table = CsvTable::new(&[
        "E",
        "eta",
        "re",
        "im",
        "fixed_point_residual",
        "bound_lower_ok",
        "bound_upper_ok",
        "ratio_im_ok",
        "ratio_eta_ok",
        "edge_ratio",
    ]);
    table.rows.push(vec![
        format_float(z.energy()),
        format_float(z.eta()),
        format_float(r.msc.re),
        format_float(r.msc.im),
        format_float(r.fixed_point_residual),
        r.bound_lower_ok.to_string(),
        r.bound_upper_ok.to_string(),
        r.ratio_im_ok.to_string(),
        r.ratio_eta_ok.to_string(),
        format_float(r.edge_ratio),
    ]);
    Ok(table)
}

fn run_identities(settings: &Settings, base_seed: u64, report: &mut String) -> Result<CsvTable, CliError> {
    let n: usize = settings.parse("N")?;
    let instances: usize = settings.parse("instances")?;
    let z = settings.point()?;
    let distribution = settings.distribution()?;
    let mut table = CsvTable::new(&[
        "instance",
        "matrix_seed",
        "schur_diagonal",
        "diagonal_minor",
        "offdiag_expansion",
        "reciprocal_expansion",
        "offdiag_factorization",
        "ward",
        "trace_identity",
        "quadratic",
        "lambda_reconstruction",
        "max_residual",
    ]);
    let mut worst = 0.0_f64;
    for instance in 0..instances {
        let seed = sample_seed(base_seed, n, instance);
        let matrix = sample_wigner(&WignerSpec::new(n, distribution, seed)?);
        let suite = identity_suite(&matrix, z)?;
        let trace = trace_identity_residual(&matrix, z)?;
        let terms = error_terms(&matrix, z)?;
        let quadratic = terms.quadratic_residual();
        let reconstruction = (lambda_from_r(z, terms.r) - terms.lambda).norm();
        let max = [suite.max_residual(), trace, quadratic, reconstruction].into_iter().fold(0.0, f64::max);
        worst = worst.max(max);
        table.rows.push(vec![
            instance.to_string(),
            seed.to_string(),
            format_float(suite.schur_diagonal),
            format_float(suite.diagonal_minor),
            format_float(suite.offdiag_expansion),
            format_float(suite.reciprocal_expansion),
            format_float(suite.offdiag_factorization),
            format_float(suite.ward),
            format_float(trace),
            format_float(quadratic),
            format_float(reconstruction),
            format_float(max),
        ]);
    }
    let _ = writeln!(report, "max residual over {instances} instances: {worst:.3e}");
    Ok(table)
}

fn run_expand(settings: &Settings, base_seed: u64, report: &mut String) -> Result<CsvTable, CliError> {
    let k: usize = settings.parse("k")?;
    let initial = match settings.raw("type") {
        "A" | "a" => InitialMonomial::A(k),
        "B" | "b" => InitialMonomial::B(k),
        other => return Err(CliError::Validation(format!("key `type`: expected A or B (got `{other}`)"))),
    };
    let lone: Vec<usize> = settings.list("lone")?;
    let config = ExpansionConfig::new(initial, lone, settings.parse("q")?)?;
    let terms = expand(&config)?;
    let dump: bool = settings.parse("dump")?;
    if dump {
        report.push_str(&format_terms(&terms));
    } else {
        let _ = writeln!(report, "{} terms", terms.len());
    }
    let verify_n: usize = settings.parse("verify_n")?;
    if verify_n > 0 {
        let matrix = sample_wigner(&WignerSpec::new(verify_n, settings.distribution()?, base_seed)?);
        let check = verify_reconstruction(&config, &matrix, settings.point()?)?;
        let _ = writeln!(report, "reconstruction relative residual: {:.3e}", check.relative_residual);
    }
    Ok(expansion_table(&terms))
}

pub fn expansion_table(terms: &[ExpansionTerm]) -> CsvTable {
    let mut table = CsvTable::new(&["sigma", "sign", "terminal_reason", "gamma", "delta", "ones", "factors"]);
    table.rows = terms
        .iter()
        .map(|t| {
            let stats = structural_stats(t);
            let factors: Vec<String> = t.monomial.factors.iter().map(|f| f.to_string()).collect();
            vec![
                t.sigma.clone(),
                t.monomial.sign.to_string(),
                t.terminal_reason.name().to_string(),
                stats.gamma.to_string(),
                stats.delta.to_string(),
                stats.ones.to_string(),
                format!("\"{}\"", factors.join(" ")),
            ]
        })
        .collect();
    table
}

fn run_scan(settings: &Settings, base_seed: u64, threads: usize, report: &mut String) -> Result<CsvTable, CliError> {
    let config = ScanConfig {
        n_list: settings.list("N")?,
        eta_list: settings.list("eta")?,
        e_list: settings.list("E")?,
        samples: settings.parse("samples")?,
        base_seed,
        distribution: settings.distribution()?,
    };
    let records = fluctuation_scan(&config, threads)?;
    let cells = summarize_cells(&records);
    for cell in &cells {
        let _ = writeln!(
            report,
            "N={} E={} eta={} samples={} median|Lambda|={:.4e} median(N eta |Lambda|)={:.4}",
            cell.n,
            cell.energy,
            cell.eta,
            cell.samples,
            cell.median_abs_lambda,
            cell.median_abs_lambda * cell.n as f64 * cell.eta
        );
    }
    let mut groups: BTreeMap<(usize, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for cell in &cells {
        let group = groups.entry((cell.n, cell.energy.to_bits())).or_default();
        group.0.push(cell.n as f64 * cell.eta);
        group.1.push(cell.median_abs_lambda);
    }
    for ((n, energy), (x, y)) in &groups {
        if let Ok(fit) = loglog_fit(x, y) {
            let _ = writeln!(
                report,
                "N={n} E={}: slope of log median|Lambda| vs log(N eta) = {:.4} (r^2 = {:.4})",
                f64::from_bits(*energy),
                fit.slope,
                fit.r_squared
            );
        }
    }
    Ok(scan_table(&records))
}

fn run_spectrum(
    name: &str,
    settings: &Settings,
    base_seed: u64,
    threads: usize,
    report: &mut String,
) -> Result<CsvTable, CliError> {
    let config = SpectrumConfig {
        n_list: settings.list("N")?,
        samples: settings.parse("samples")?,
        base_seed,
        distribution: settings.distribution()?,
    };
    let proxy = if name == "edge" { Some(SpreadProxy::parse(settings.raw("proxy"))?) } else { None };
    if let Some(proxy) = proxy {
        // reject before sampling anything
        let mut distinct = config.n_list.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < crate::experiments::EDGE_MIN_GROUPS || config.samples < crate::experiments::EDGE_MIN_SAMPLES {
            return Err(Error::InsufficientData(format!(
                "edge fit ({}) needs at least {} distinct N and {} samples per N",
                proxy.name(),
                crate::experiments::EDGE_MIN_GROUPS,
                crate::experiments::EDGE_MIN_SAMPLES
            ))
            .into());
        }
    }
    let records = spectrum_study(&config, threads)?;
    let mut by_n: BTreeMap<usize, Vec<&SpectrumRecord>> = BTreeMap::new();
    for r in &records {
        by_n.entry(r.n).or_default().push(r);
    }
    match proxy {
        None => {
            for (n, rs) in &by_n {
                let stat = |f: fn(&SpectrumRecord) -> f64| median(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
                if name == "counting" {
                    let c = stat(|r| r.counting_stat);
                    let _ = writeln!(
                        report,
                        "N={n} samples={} median sup|n - n_sc|={c:.4e} median N sup|n - n_sc|/log N={:.4}",
                        rs.len(),
                        c * *n as f64 / (*n as f64).ln()
                    );
                } else {
                    let _ = writeln!(
                        report,
                        "N={n} samples={} median rigidity (log N)={:.4} median rigidity (sqrt log N)={:.4}",
                        rs.len(),
                        stat(|r| r.rigidity_stat),
                        stat(|r| r.rigidity_sqrt_log_stat)
                    );
                }
            }
        }
        Some(proxy) => {
            let pairs: Vec<(usize, f64)> = records.iter().map(|r| (r.n, r.lambda_max)).collect();
            let study = edge_statistic(&pairs, proxy)?;
            for g in &study.groups {
                let _ = writeln!(report, "N={} samples={} {}={:.4e}", g.n, g.samples, proxy.name(), g.spread);
            }
            let _ = writeln!(
                report,
                "slope of log {} vs log N = {:.4} +- {:.4} (r^2 = {:.4})",
                proxy.name(),
                study.fit.slope,
                study.fit.stderr_slope,
                study.fit.r_squared
            );
        }
    }
    Ok(spectrum_table(&records))
}

fn run_hw(settings: &Settings, base_seed: u64, report: &mut String) -> Result<CsvTable, CliError> {
    let kind = match settings.raw("kind") {
        "identity" => QuadraticFormKind::Identity,
        "resolvent" => QuadraticFormKind::RandomResolvent(settings.point()?),
        other => return Err(CliError::Validation(format!("key `kind`: expected identity or resolvent (got `{other}`)"))),
    };
    let config = HansonWrightConfig {
        n: settings.parse("N")?,
        kind,
        deltas: settings.list("deltas")?,
        samples: settings.parse("samples")?,
        seed: base_seed,
        distribution: settings.distribution()?,
    };
    let estimate: TailEstimate = hanson_wright_tail(&config)?;
    let tails = estimate.tails();
    let mut table = CsvTable::new(&["delta", "exceedances", "samples", "tail"]);
    for ((delta, count), tail) in estimate.deltas.iter().zip(&estimate.exceedances).zip(&tails) {
        let _ = writeln!(report, "delta={delta} tail={tail:.4e} ({count}/{})", estimate.samples);
        table.rows.push(vec![format_float(*delta), count.to_string(), estimate.samples.to_string(), format_float(*tail)]);
    }
    Ok(table)
}
