//! Command-line front end: parameter fitting, curve generation as CSV,
//! KL/crossover reports, sampling, and validation suites.
//!
//! Every run is deterministic given its flags; outputs written to `--out`
//! are accompanied by a `<out>.manifest.json` recording the full parameter
//! set and a SHA-256 checksum of the bytes, and re-running a manifest's
//! command line reproduces those bytes exactly, independent of `--threads`.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::diff::{
    self, asymptotic_log_tail, conv_log_pdf, conv_log_tail, conv_quantile, soa_log_tail,
    QuadratureSpec,
};
use crate::error::{Error, Result};
use crate::ig::{IGParams, PhysicalChannel};
use crate::mc::{self, SampleStream, SimConfig};
use crate::metrics::{self, ks_distance, TailMethod};
use crate::nig::{self, NIGParams};
use crate::special_fn::Accuracy;

const LN_10: f64 = std::f64::consts::LN_10;

/// Tail mass left outside the KL integration window on each side.
const KL_WINDOW_TAIL: f64 = 1e-7;

/// Tail probability at which auto-generated tail grids stop.
const TAIL_GRID_FLOOR: f64 = 1e-25;

#[derive(Parser)]
#[command(
    name = "igdiff",
    version,
    about = "Distribution of the difference of two inverse Gaussian first-hitting times",
    after_help = "Data-producing commands honor --format; fit, kl, crossover and validate \
                  always emit JSON. With --out set, a <out>.manifest.json records parameters \
                  and output checksums."
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Absolute quadrature tolerance
    #[arg(long, global = true, default_value_t = 1e-12)]
    abs_tol: f64,

    /// Relative quadrature tolerance
    #[arg(long, global = true, default_value_t = 1e-9)]
    rel_tol: f64,

    /// RNG seed for sampling commands
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; 0 means one per core. Never affects output bytes.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output encoding for data-producing commands
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output path (a directory for `figure`); stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    /// Density of Z = X1 - X2
    Pdf,
    /// Upper tail P(Z > z)
    Tail,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveMethod {
    /// Adaptive quadrature of the exact convolution
    Exact,
    /// Moment-matched NIG surrogate
    Nig,
    /// Large-z tail approximation (tail only)
    Asymptotic,
    /// Equal-parameter comparison tail formula (tail only)
    Soa,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CrossoverMethod {
    Exact,
    Nig,
    Asymptotic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// KS tests of the exact IG and NIG samplers against their laws
    Sampler,
    /// Frozen-value and self-consistency checks of the convolution pipeline
    Convolution,
    /// Tail-approximation ratio bounds at large z
    Theorem1,
    /// Brownian path simulator against the first-hitting-time law
    Physics,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the NIG surrogate for Z = X1 - X2 and report its parameters
    Fit {
        a1: f64,
        b1: f64,
        a2: f64,
        b2: f64,
    },
    /// Evaluate one curve over a z-grid
    Curve {
        #[arg(value_enum)]
        kind: CurveKind,
        #[arg(value_enum)]
        method: CurveMethod,
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        a2: f64,
        #[arg(long)]
        b2: f64,
        /// Grid as start:stop:step, endpoints inclusive; defaults to a
        /// scale-aware grid (density: mean +- 8 sd, 601 points; tail:
        /// [0, z at tail 1e-25], 401 points)
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Emit the curve bundle and manifest for one figure family (1..7)
    Figure {
        #[arg(long)]
        id: u32,
    },
    /// KL divergence between the exact density and the NIG surrogate,
    /// reported in both directions
    Kl {
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        a2: f64,
        #[arg(long)]
        b2: f64,
    },
    /// Crossover probability P(X1 - X2 > T)
    Crossover {
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        a2: f64,
        #[arg(long)]
        b2: f64,
        /// Horizon T >= 0
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = CrossoverMethod::Exact)]
        method: CrossoverMethod,
    },
    /// Draw reproducible samples of Z = X1 - X2
    Sample {
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        a2: f64,
        #[arg(long)]
        b2: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Run a validation suite; exit 1 if any check fails
    Validate {
        #[arg(value_enum)]
        suite: Suite,
    },
}

pub fn main() -> ! {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // ignore the error from a pool that already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_)
        | Error::InfeasibleMoments(_)
        | Error::DegenerateInput(_)
        | Error::Config(_) => 2,
        Error::AccuracyNotReached { .. } | Error::SupportMismatch(_) | Error::Io(_) => 1,
    }
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.cmd {
        Cmd::Fit { a1, b1, a2, b2 } => cmd_fit(cli, *a1, *b1, *a2, *b2),
        Cmd::Curve {
            kind,
            method,
            a1,
            b1,
            a2,
            b2,
            z,
        } => cmd_curve(cli, *kind, *method, *a1, *b1, *a2, *b2, z.as_deref()),
        Cmd::Figure { id } => cmd_figure(cli, *id),
        Cmd::Kl { a1, b1, a2, b2 } => cmd_kl(cli, *a1, *b1, *a2, *b2),
        Cmd::Crossover {
            a1,
            b1,
            a2,
            b2,
            t,
            method,
        } => cmd_crossover(cli, *a1, *b1, *a2, *b2, *t, *method),
        Cmd::Sample { a1, b1, a2, b2, n } => cmd_sample(cli, *a1, *b1, *a2, *b2, *n),
        Cmd::Validate { suite } => cmd_validate(cli, *suite),
    }
}

fn spec_of(cli: &Cli) -> Result<QuadratureSpec> {
    QuadratureSpec::new(cli.abs_tol, cli.rel_tol, 4000)
}

fn accuracy_of(cli: &Cli) -> Result<Accuracy> {
    Accuracy::new(cli.abs_tol, cli.rel_tol)
}

fn pair(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<(IGParams, IGParams)> {
    Ok((IGParams::new(a1, b1)?, IGParams::new(a2, b2)?))
}

// ---------------------------------------------------------------- manifest

struct Manifest {
    command: String,
    seed: u64,
    abs_tol: f64,
    rel_tol: f64,
    params: serde_json::Map<String, Value>,
    outputs: BTreeMap<String, String>,
}

impl Manifest {
    fn new(cli: &Cli, command: &str) -> Self {
        Self {
            command: command.to_string(),
            seed: cli.seed,
            abs_tol: cli.abs_tol,
            rel_tol: cli.rel_tol,
            params: serde_json::Map::new(),
            outputs: BTreeMap::new(),
        }
    }

    fn param(&mut self, key: &str, value: Value) {
        self.params.insert(key.to_string(), value);
    }

    fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "params": Value::Object(self.params.clone()),
            "outputs": self.outputs,
        })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let d = h.finalize();
    let mut s = String::with_capacity(64);
    for b in d {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Write `bytes` to `--out` (with its manifest) or to stdout (no manifest).
fn deliver(cli: &Cli, mut manifest: Manifest, bytes: &[u8]) -> Result<()> {
    match &cli.out {
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
        Some(path) => {
            std::fs::write(path, bytes)?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            manifest.outputs.insert(name, sha256_hex(bytes));
            write_manifest(&manifest, &manifest_path(path))
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(&manifest.to_json()).expect("static JSON shape");
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------- formatting

fn fmt_f64(x: f64) -> String {
    ryu::Buffer::new().format(x).to_string()
}

/// CSV cells (value, log10_value) from a natural-log result. A true zero
/// prints value 0 with an empty log cell; a value that merely underflows
/// f64 prints an empty value cell but keeps its log.
fn cells(l: f64) -> (String, String) {
    if l == f64::NEG_INFINITY {
        return ("0".to_string(), String::new());
    }
    let v = l.exp();
    let log10 = l / LN_10;
    if v == 0.0 {
        (String::new(), fmt_f64(log10))
    } else {
        (fmt_f64(v), fmt_f64(log10))
    }
}

fn curve_bytes(format: Format, zs: &[f64], logs: &[f64]) -> Vec<u8> {
    match format {
        Format::Csv => {
            let mut out = String::from("z,value,log10_value\n");
            for (&z, &l) in zs.iter().zip(logs) {
                let (v, lg) = cells(l);
                out.push_str(&fmt_f64(z));
                out.push(',');
                out.push_str(&v);
                out.push(',');
                out.push_str(&lg);
                out.push('\n');
            }
            out.into_bytes()
        }
        Format::Json => {
            let rows: Vec<Value> = zs
                .iter()
                .zip(logs)
                .map(|(&z, &l)| {
                    let (v, lg) = cells(l);
                    json!({
                        "z": z,
                        "value": if v.is_empty() { Value::Null } else { json!(v.parse::<f64>().unwrap()) },
                        "log10_value": if lg.is_empty() { Value::Null } else { json!(lg.parse::<f64>().unwrap()) },
                    })
                })
                .collect();
            let mut bytes = serde_json::to_vec_pretty(&Value::Array(rows)).expect("static shape");
            bytes.push(b'\n');
            bytes
        }
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("static JSON shape");
    bytes.push(b'\n');
    bytes
}

// ---------------------------------------------------------------- grids

/// Parse "start:stop:step" with inclusive endpoints.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let err = || {
        Error::Config(format!(
            "grid must be start:stop:step with step > 0, got {s:?}"
        ))
    };
    if parts.len() != 3 {
        return Err(err());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| err()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(err());
    }
    let span = stop - start;
    let n = (span / step + 1e-9).floor() as usize;
    let mut zs: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    // snap the endpoint when the span is an integral number of steps
    if let Some(last) = zs.last_mut() {
        if (*last - stop).abs() <= 1e-9 * step {
            *last = stop;
        }
    }
    Ok(zs)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
        .collect()
}

/// Default density grid: mean +- 8 standard deviations of Z, 601 points.
fn auto_pdf_grid(p1: &IGParams, p2: &IGParams) -> Vec<f64> {
    let m = nig::moments_of_diff(p1, p2);
    let sd = m.variance.sqrt();
    linspace(m.mean - 8.0 * sd, m.mean + 8.0 * sd, 601)
}

/// Default tail grid: [0, z_max] with P(Z > z_max) = 1e-25, 401 points.
fn auto_tail_grid(p1: &IGParams, p2: &IGParams, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let zmax = conv_quantile(p1, p2, TAIL_GRID_FLOOR, spec)?;
    Ok(linspace(0.0, zmax.max(1e-6), 401))
}

// ---------------------------------------------------------------- fit

fn detect_use_case(a1: f64, b1: f64, a2: f64, b2: f64) -> (Option<u32>, Option<f64>) {
    if a1 == a2 && b1 == b2 {
        return (Some(1), None);
    }
    let (c1, c2) = (b1 / a1, b2 / a2);
    if (c1 - c2).abs() <= 1e-12 * c1.abs().max(c2.abs()) {
        (Some(2), Some(0.5 * (c1 + c2)))
    } else {
        (None, None)
    }
}

fn cmd_fit(cli: &Cli, a1: f64, b1: f64, a2: f64, b2: f64) -> Result<i32> {
    let (p1, p2) = pair(a1, b1, a2, b2)?;
    let fitted = nig::approx_diff(&p1, &p2)?;
    let m = nig::moments_of_diff(&p1, &p2);
    let k = nig::diff_cumulants(&p1, &p2);
    let (uc, c) = detect_use_case(a1, b1, a2, b2);

    let report = json!({
        "alpha": fitted.alpha(),
        "beta": fitted.beta(),
        "mu": fitted.mu(),
        "delta": fitted.delta(),
        "moments": {
            "mean": m.mean,
            "variance": m.variance,
            "skewness": m.skewness,
            "excess_kurtosis": m.excess_kurtosis,
        },
        "cumulants": { "k1": k.k1, "k2": k.k2, "k3": k.k3, "k4": k.k4 },
        "use_case_detected": uc,
        "ratio_c": c,
    });

    let mut manifest = Manifest::new(cli, "fit");
    for (key, val) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        manifest.param(key, json!(val));
    }
    deliver(cli, manifest, &json_bytes(&report))?;
    Ok(0)
}

// ---------------------------------------------------------------- curve

#[allow(clippy::too_many_arguments)]
fn cmd_curve(
    cli: &Cli,
    kind: CurveKind,
    method: CurveMethod,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    zspec: Option<&str>,
) -> Result<i32> {
    let (p1, p2) = pair(a1, b1, a2, b2)?;
    let spec = spec_of(cli)?;
    let acc = accuracy_of(cli)?;

    if kind == CurveKind::Pdf
        && matches!(method, CurveMethod::Asymptotic | CurveMethod::Soa)
    {
        return Err(Error::Config(
            "asymptotic and soa are tail approximations; use kind `tail`".into(),
        ));
    }
    if method == CurveMethod::Soa && (a1 != a2 || b1 != b2) {
        return Err(Error::Config(format!(
            "the soa comparison formula only covers the equal-parameter case \
             (a1 = a2, b1 = b2); got ({a1}, {b1}) vs ({a2}, {b2})"
        )));
    }

    let fitted = if method == CurveMethod::Nig {
        Some(nig::approx_diff(&p1, &p2)?)
    } else {
        None
    };

    let zs = match zspec {
        Some(s) => parse_grid(s)?,
        None => match kind {
            CurveKind::Pdf => auto_pdf_grid(&p1, &p2),
            CurveKind::Tail => auto_tail_grid(&p1, &p2, &spec)?,
        },
    };

    let point = |z: f64| -> Result<f64> {
        Ok(match (kind, method) {
            (CurveKind::Pdf, CurveMethod::Exact) => conv_log_pdf(&p1, &p2, z, &spec)?,
            (CurveKind::Pdf, CurveMethod::Nig) => fitted.as_ref().unwrap().log_pdf(z),
            (CurveKind::Tail, CurveMethod::Exact) => conv_log_tail(&p1, &p2, z, &spec)?,
            (CurveKind::Tail, CurveMethod::Nig) => {
                fitted.as_ref().unwrap().log_tail(z, &acc)?
            }
            (CurveKind::Tail, CurveMethod::Asymptotic) => asymptotic_log_tail(&p1, &p2, z),
            (CurveKind::Tail, CurveMethod::Soa) => soa_log_tail(&p1, z),
            _ => unreachable!("rejected above"),
        })
    };
    let logs: Vec<f64> = zs.par_iter().map(|&z| point(z)).collect::<Result<_>>()?;

    let mut manifest = Manifest::new(cli, "curve");
    manifest.param(
        "kind",
        json!(match kind {
            CurveKind::Pdf => "pdf",
            CurveKind::Tail => "tail",
        }),
    );
    manifest.param(
        "method",
        json!(match method {
            CurveMethod::Exact => "exact",
            CurveMethod::Nig => "nig",
            CurveMethod::Asymptotic => "asymptotic",
            CurveMethod::Soa => "soa",
        }),
    );
    for (key, val) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        manifest.param(key, json!(val));
    }
    manifest.param(
        "z_grid",
        match zspec {
            Some(s) => json!(s),
            None => json!({
                "auto": true,
                "lo": zs[0],
                "hi": *zs.last().unwrap(),
                "points": zs.len(),
            }),
        },
    );
    deliver(cli, manifest, &curve_bytes(cli.format, &zs, &logs))?;
    Ok(0)
}

// ---------------------------------------------------------------- figure

struct FigureSet {
    label: &'static str,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
}

impl FigureSet {
    const fn uc1(label: &'static str, a: f64, b: f64) -> Self {
        Self {
            label,
            a1: a,
            b1: b,
            a2: a,
            b2: b,
        }
    }
    const fn uc2(label: &'static str, a1: f64, a2: f64, c: f64) -> Self {
        Self {
            label,
            a1,
            b1: c * a1,
            a2,
            b2: c * a2,
        }
    }
}

/// Parameter families of the figure bundles. The symmetric sets cover
/// a = b in {1, 3, 10, 30}; the unequal sets vary the ratio a/b; the
/// equal-ratio sets exercise the skewed branch of the fit.
fn figure_sets(id: u32) -> Result<(CurveKind, Vec<FigureSet>, Vec<CurveMethod>)> {
    let equal = || {
        vec![
            FigureSet::uc1("ab1", 1.0, 1.0),
            FigureSet::uc1("ab3", 3.0, 3.0),
            FigureSet::uc1("ab10", 10.0, 10.0),
            FigureSet::uc1("ab30", 30.0, 30.0),
        ]
    };
    let unequal = || {
        vec![
            FigureSet::uc1("a1_b3", 1.0, 3.0),
            FigureSet::uc1("a3_b1", 3.0, 1.0),
            FigureSet::uc1("a10_b30", 10.0, 30.0),
            FigureSet::uc1("a30_b10", 30.0, 10.0),
        ]
    };
    let ratio = || {
        vec![
            FigureSet::uc2("a2_a4_c1", 2.0, 4.0, 1.0),
            FigureSet::uc2("a4_a2_c1", 4.0, 2.0, 1.0),
            FigureSet::uc2("a1_a3_c2", 1.0, 3.0, 2.0),
        ]
    };
    let both = vec![CurveMethod::Exact, CurveMethod::Nig];
    Ok(match id {
        1 => (CurveKind::Pdf, equal(), both),
        2 => (CurveKind::Tail, equal(), both),
        3 => (CurveKind::Pdf, unequal(), both),
        4 => (CurveKind::Tail, unequal(), both),
        5 => (CurveKind::Pdf, ratio(), both),
        6 => (CurveKind::Tail, ratio(), both),
        7 => (
            CurveKind::Tail,
            vec![FigureSet::uc1("ab3", 3.0, 3.0)],
            vec![CurveMethod::Exact, CurveMethod::Asymptotic, CurveMethod::Soa],
        ),
        _ => {
            return Err(Error::Config(format!(
                "figure id must lie in 1..7, got {id}"
            )))
        }
    })
}

fn method_name(m: CurveMethod) -> &'static str {
    match m {
        CurveMethod::Exact => "exact",
        CurveMethod::Nig => "nig",
        CurveMethod::Asymptotic => "asymptotic",
        CurveMethod::Soa => "soa",
    }
}

fn cmd_figure(cli: &Cli, id: u32) -> Result<i32> {
    let (kind, sets, methods) = figure_sets(id)?;
    let spec = spec_of(cli)?;
    let acc = accuracy_of(cli)?;

    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("figure{id}")));
    std::fs::create_dir_all(&dir)?;

    let mut manifest = Manifest::new(cli, "figure");
    manifest.param("id", json!(id));
    manifest.param(
        "kind",
        json!(match kind {
            CurveKind::Pdf => "pdf",
            CurveKind::Tail => "tail",
        }),
    );

    let mut set_params = serde_json::Map::new();
    for set in &sets {
        let (p1, p2) = pair(set.a1, set.b1, set.a2, set.b2)?;
        let zs = match kind {
            CurveKind::Pdf => auto_pdf_grid(&p1, &p2),
            CurveKind::Tail => auto_tail_grid(&p1, &p2, &spec)?,
        };
        let fitted = nig::approx_diff(&p1, &p2)?;

        for &method in &methods {
            let point = |z: f64| -> Result<f64> {
                Ok(match (kind, method) {
                    (CurveKind::Pdf, CurveMethod::Exact) => conv_log_pdf(&p1, &p2, z, &spec)?,
                    (CurveKind::Pdf, CurveMethod::Nig) => fitted.log_pdf(z),
                    (CurveKind::Tail, CurveMethod::Exact) => conv_log_tail(&p1, &p2, z, &spec)?,
                    (CurveKind::Tail, CurveMethod::Nig) => fitted.log_tail(z, &acc)?,
                    (CurveKind::Tail, CurveMethod::Asymptotic) => {
                        asymptotic_log_tail(&p1, &p2, z)
                    }
                    (CurveKind::Tail, CurveMethod::Soa) => soa_log_tail(&p1, z),
                    _ => unreachable!("figure tables never pair pdf with tail formulas"),
                })
            };
            let logs: Vec<f64> = zs.par_iter().map(|&z| point(z)).collect::<Result<_>>()?;
            let bytes = curve_bytes(cli.format, &zs, &logs);
            let ext = match cli.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let name = format!("fig{id}_{}_{}.{ext}", set.label, method_name(method));
            std::fs::write(dir.join(&name), &bytes)?;
            manifest.outputs.insert(name, sha256_hex(&bytes));
        }

        let kl = kl_pair(&p1, &p2, cli)?;
        set_params.insert(
            set.label.to_string(),
            json!({
                "a1": set.a1, "b1": set.b1, "a2": set.a2, "b2": set.b2,
                "kl_exact_nig": kl.0,
                "kl_nig_exact": kl.1,
            }),
        );
    }
    manifest.param("sets", Value::Object(set_params));

    write_manifest(&manifest, &dir.join(format!("figure{id}.manifest.json")))?;
    Ok(0)
}

// ---------------------------------------------------------------- kl

/// Both KL directions over the window that keeps all but 1e-7 of the mass
/// per side. The outer integral runs 1000x looser than the inner density
/// evaluations so its refinement never chases inner quadrature noise.
fn kl_pair(p1: &IGParams, p2: &IGParams, cli: &Cli) -> Result<(f64, f64, (f64, f64))> {
    let inner = spec_of(cli)?;
    let outer = QuadratureSpec::new(cli.abs_tol * 1e3, cli.rel_tol * 1e3, 4000)?;
    let lo = -conv_quantile(p2, p1, KL_WINDOW_TAIL, &inner)?;
    let hi = conv_quantile(p1, p2, KL_WINDOW_TAIL, &inner)?;
    let fitted = nig::approx_diff(p1, p2)?;
    let exact = |z: f64| diff::conv_pdf(p1, p2, z, &inner).expect("inside the mass window");
    let approx = |z: f64| fitted.pdf(z);
    let forward = metrics::kl_divergence(&exact, &approx, (lo, hi), &outer)?;
    let reverse = metrics::kl_divergence(&approx, &exact, (lo, hi), &outer)?;
    Ok((forward, reverse, (lo, hi)))
}

fn cmd_kl(cli: &Cli, a1: f64, b1: f64, a2: f64, b2: f64) -> Result<i32> {
    let (p1, p2) = pair(a1, b1, a2, b2)?;
    let (forward, reverse, window) = kl_pair(&p1, &p2, cli)?;
    let report = json!({
        "kl_exact_nig": forward,
        "kl_nig_exact": reverse,
        "window": [window.0, window.1],
    });
    let mut manifest = Manifest::new(cli, "kl");
    for (key, val) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        manifest.param(key, json!(val));
    }
    deliver(cli, manifest, &json_bytes(&report))?;
    Ok(0)
}

// ---------------------------------------------------------------- crossover

fn cmd_crossover(
    cli: &Cli,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    t: f64,
    method: CrossoverMethod,
) -> Result<i32> {
    let (p1, p2) = pair(a1, b1, a2, b2)?;
    let spec = spec_of(cli)?;
    let tm = match method {
        CrossoverMethod::Exact => TailMethod::Exact,
        CrossoverMethod::Nig => TailMethod::Nig,
        CrossoverMethod::Asymptotic => TailMethod::Asymptotic,
    };
    let p = metrics::crossover_probability(&p1, &p2, t, tm, &spec)?;
    let report = json!({
        "t": t,
        "method": match method {
            CrossoverMethod::Exact => "exact",
            CrossoverMethod::Nig => "nig",
            CrossoverMethod::Asymptotic => "asymptotic",
        },
        "probability": p,
        "log10_probability": if p > 0.0 { json!(p.log10()) } else { Value::Null },
    });
    let mut manifest = Manifest::new(cli, "crossover");
    for (key, val) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2), ("t", t)] {
        manifest.param(key, json!(val));
    }
    deliver(cli, manifest, &json_bytes(&report))?;
    Ok(0)
}

// ---------------------------------------------------------------- sample

fn cmd_sample(cli: &Cli, a1: f64, b1: f64, a2: f64, b2: f64, n: usize) -> Result<i32> {
    let (p1, p2) = pair(a1, b1, a2, b2)?;
    let cfg = SimConfig::new(n, cli.seed, 1.0, 1)?;
    let samples = mc::sample_diff(&p1, &p2, &cfg);

    let bytes = match cli.format {
        Format::Csv => {
            let mut out = String::from("z\n");
            for &s in &samples {
                out.push_str(&fmt_f64(s));
                out.push('\n');
            }
            out.into_bytes()
        }
        Format::Json => json_bytes(&json!({ "samples": samples })),
    };
    let mut manifest = Manifest::new(cli, "sample");
    for (key, val) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        manifest.param(key, json!(val));
    }
    manifest.param("n", json!(n));
    deliver(cli, manifest, &bytes)?;
    Ok(0)
}

// ---------------------------------------------------------------- validate

struct Check {
    name: &'static str,
    measured: f64,
    bound: String,
    pass: bool,
}

impl Check {
    fn upper(name: &'static str, measured: f64, bound: f64) -> Self {
        Self {
            name,
            measured,
            bound: format!("<= {bound}"),
            pass: measured <= bound,
        }
    }
    fn interval(name: &'static str, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            name,
            measured,
            bound: format!("in [{lo}, {hi}]"),
            pass: (lo..=hi).contains(&measured),
        }
    }
}

fn cmd_validate(cli: &Cli, suite: Suite) -> Result<i32> {
    let checks = match suite {
        Suite::Sampler => validate_sampler(cli)?,
        Suite::Convolution => validate_convolution(cli)?,
        Suite::Theorem1 => validate_theorem1(cli)?,
        Suite::Physics => validate_physics(cli)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    let report = json!({
        "suite": match suite {
            Suite::Sampler => "sampler",
            Suite::Convolution => "convolution",
            Suite::Theorem1 => "theorem1",
            Suite::Physics => "physics",
        },
        "seed": cli.seed,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "measured": c.measured,
            "bound": c.bound,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
        "pass": pass,
    });
    let mut manifest = Manifest::new(cli, "validate");
    manifest.param("suite", report["suite"].clone());
    deliver(cli, manifest, &json_bytes(&report))?;
    Ok(if pass { 0 } else { 1 })
}

fn validate_sampler(cli: &Cli) -> Result<Vec<Check>> {
    const N: usize = 100_000;
    let threshold = 1.95 / (N as f64).sqrt();
    let mut checks = Vec::new();

    let p = IGParams::new(3.0, 3.0)?;
    let mut stream = SampleStream::new(cli.seed, 0);
    let mut xs: Vec<f64> = (0..N).map(|_| stream.ig(&p)).collect();
    xs.sort_by(f64::total_cmp);
    let d = ks_distance(&xs, &|x| p.cdf(x));
    checks.push(Check::upper("ig_sampler_ks", d, threshold));

    let q = nig::usecase1_params(3.0, 3.0)?;
    let mut stream = SampleStream::new(cli.seed, 1);
    let mut ys: Vec<f64> = (0..N).map(|_| stream.nig(&q)).collect();
    ys.sort_by(f64::total_cmp);
    let cdf = nig_cdf_table(&q);
    let d = ks_distance(&ys, &|y| cdf.eval(y));
    checks.push(Check::upper("nig_sampler_ks", d, threshold));

    Ok(checks)
}

/// Cumulative Simpson table of a NIG cdf over mean +- 14 sd; interpolation
/// error is far below the KS thresholds it serves.
struct CdfTable {
    lo: f64,
    h: f64,
    f: Vec<f64>,
}

impl CdfTable {
    fn eval(&self, x: f64) -> f64 {
        let t = (x - self.lo) / self.h;
        if t <= 0.0 {
            return 0.0;
        }
        let n = self.f.len() - 1;
        if t >= n as f64 {
            return 1.0;
        }
        let i = t as usize;
        let w = t - i as f64;
        (self.f[i] * (1.0 - w) + self.f[i + 1] * w).clamp(0.0, 1.0)
    }
}

fn nig_cdf_table(p: &NIGParams) -> CdfTable {
    const HALF_STEPS: usize = 1 << 14;
    let m = p.moments();
    let sd = m.variance.sqrt();
    let lo = m.mean - 14.0 * sd;
    let h = 28.0 * sd / (2 * HALF_STEPS) as f64;
    let pdf: Vec<f64> = (0..=2 * HALF_STEPS)
        .map(|i| p.pdf(lo + i as f64 * h))
        .collect();
    let mut f = Vec::with_capacity(HALF_STEPS + 1);
    f.push(0.0);
    let mut acc = 0.0;
    for k in 0..HALF_STEPS {
        let i = 2 * k;
        acc += h / 3.0 * (pdf[i] + 4.0 * pdf[i + 1] + pdf[i + 2]);
        f.push(acc);
    }
    // normalize away the trapezoid-level truncation of the window
    let total = *f.last().unwrap();
    for v in &mut f {
        *v /= total;
    }
    CdfTable {
        lo,
        h: 2.0 * h,
        f,
    }
}

fn validate_convolution(cli: &Cli) -> Result<Vec<Check>> {
    let spec = spec_of(cli)?;
    let p = IGParams::new(3.0, 3.0)?;
    let mut checks = Vec::new();

    let got = diff::conv_pdf(&p, &p, 0.0, &spec)?;
    let want = 0.936_539_357_318_624_047_9;
    checks.push(Check::upper(
        "pdf_center_rel_err",
        ((got - want) / want).abs(),
        1e-9,
    ));

    let got = diff::conv_tail(&p, &p, 2.0, &spec)?;
    let want = 2.724_512_428_482_898_579_2e-4;
    checks.push(Check::upper(
        "tail_spot_rel_err",
        ((got - want) / want).abs(),
        1e-8,
    ));

    let plus = diff::conv_pdf(&p, &p, 1.0, &spec)?;
    let minus = diff::conv_pdf(&p, &p, -1.0, &spec)?;
    checks.push(Check::upper(
        "pdf_symmetry_rel_err",
        ((plus - minus) / plus).abs(),
        1e-10,
    ));

    // mass outside [-60, 60] is far below the check threshold
    let f = |z: f64| diff::conv_pdf(&p, &p, z, &spec).expect("inside the mass window");
    let outer = QuadratureSpec::new(1e-10, 1e-8, 4000)?;
    let edges = [
        -60.0, -32.0, -16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 60.0,
    ];
    let mass = metrics::integral(&f, &edges, &outer)?;
    checks.push(Check::upper("pdf_mass_err", (mass - 1.0).abs(), 1e-6));

    Ok(checks)
}

fn validate_theorem1(cli: &Cli) -> Result<Vec<Check>> {
    let spec = spec_of(cli)?;
    let p = IGParams::new(1.0, 1.0)?;
    let mut checks = Vec::new();

    let ratio = |z: f64| -> Result<f64> {
        let lt = conv_log_tail(&p, &p, z, &spec)?;
        Ok((lt - asymptotic_log_tail(&p, &p, z)).exp())
    };
    let r40 = ratio(40.0)?;
    checks.push(Check::interval("tail_ratio_z40", r40, 0.95, 1.05));
    let r30 = ratio(30.0)?;
    checks.push(Check::upper(
        "tail_ratio_trend",
        (r40 - 1.0).abs(),
        (r30 - 1.0).abs().max(1e-12),
    ));

    Ok(checks)
}

fn validate_physics(cli: &Cli) -> Result<Vec<Check>> {
    let c = PhysicalChannel::new(1.0, 1.0, 0.5)?;
    let cfg = SimConfig::new(20_000, cli.seed, 4e-4, 50_000)?;
    let levels = mc::first_passage_multilevel(&c, &cfg, 1)?;
    let mut checks = Vec::new();

    let stats = |fp: &mc::FirstPassage| {
        let n = fp.times.len() as f64;
        let mean = fp.times.iter().sum::<f64>() / n;
        (mean, n)
    };
    let (mean0, n0) = stats(&levels[0]);
    // IG(1,1) has unit variance; 5 standard errors plus the Euler barrier
    // bias allowance 0.5826 sqrt(2 D dt) / v at the coarse level
    let allowance = 5.0 / n0.sqrt() + 0.5826 * (2.0 * 0.5 * 4e-4_f64).sqrt();
    checks.push(Check::upper(
        "mean_hitting_time_err",
        (mean0 - 1.0).abs(),
        allowance,
    ));

    let p = c.to_ig();
    let ks_of = |fp: &mc::FirstPassage| {
        let mut t = fp.times.clone();
        t.sort_by(f64::total_cmp);
        ks_distance(&t, &|x| p.cdf(x))
    };
    let ks0 = ks_of(&levels[0]);
    let ks1 = ks_of(&levels[1]);
    checks.push(Check::upper("ks_coarse", ks0, 0.05));
    checks.push(Check::upper("ks_halved_dt_improves", ks1, ks0));

    let censored = levels[0].censored.max(levels[1].censored) as f64;
    checks.push(Check::upper(
        "censoring_fraction",
        censored / n0,
        1e-3,
    ));

    Ok(checks)
}
