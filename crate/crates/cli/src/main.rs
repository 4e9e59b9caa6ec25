use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};

use phasecone::config::{QuadratureScheme, RunConfig};
use phasecone::experiment::{check_manifest, ExperimentRecord, MANIFEST};
use phasecone::fock::{self, DensityState, PSD_TOL, TRACE_TOL};
use phasecone::io::{self, fmt_f64, Encoding, Side};
use phasecone::phase::{grid_integral, PhaseFunction, PhasePoint, SpectralField, Weight};
use phasecone::positivity::{pd_test_classical, pd_test_quantum, PsdReport, SampleSet};
use phasecone::semigroup::{cq_apply, purity_from_char, twirl_apply, GaussianSemigroupParams};
use phasecone::transforms::{dequantize, wigner_from_state};
use phasecone::verify::{self, Suite, VerifyOptions};
use phasecone::Warning;

/// Exit status when a requested expectation or verification does not hold.
const EXIT_ASSERTION: u8 = 2;

#[derive(Parser)]
#[command(name = "phasecone", version, about = "Functions of positive type on phase space")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON config file (layered over $PHASECONE_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long = "out-dir", global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    fock_dim: Option<usize>,
    #[arg(long, global = true)]
    half_extent: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    quadrature: Option<Quadrature>,
    #[arg(long, global = true)]
    quadrature_order: Option<usize>,
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    /// Data encoding for emitted fields and operators.
    #[arg(long, global = true, value_enum, default_value_t = Enc::Bin)]
    encoding: Enc,
    /// -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quadrature {
    GaussHermite,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Enc {
    Bin,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Build a density operator and certify it.
    State(StateArgs),
    /// Characteristic function of a stored state.
    Char(FieldArgs),
    /// Wigner function of a stored state.
    Wigner(FieldArgs),
    /// Finite-sample positive-definiteness test.
    Positivity(PositivityArgs),
    /// Evolve a stored state under a Gaussian noise semigroup.
    Evolve(EvolveArgs),
    /// Run the cross-module identity suites.
    Verify(VerifyArgs),
    /// Re-hash the files listed in a manifest.
    CheckManifest {
        /// Directory holding manifest.json (defaults to the output directory).
        dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKind {
    Vacuum,
    Coherent,
    Fock,
    Thermal,
    Cat,
}

#[derive(Args)]
struct StateArgs {
    #[arg(value_enum)]
    kind: StateKind,
    /// Coherent or cat amplitude as `re,im`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    alpha: Option<(f64, f64)>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    nbar: Option<f64>,
    /// Output stem inside the output directory.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct FieldArgs {
    state: PathBuf,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Classical,
    Quantum,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Expect {
    Pass,
    Fail,
}

#[derive(Clone, Copy, ValueEnum)]
enum Interp {
    Spectral,
    Bilinear,
}

#[derive(Args)]
struct PositivityArgs {
    #[arg(value_enum)]
    mode: Mode,
    /// Analytic function: `one`, `gauss:c=<c>` or `point:q=<q>,p=<p>`.
    #[arg(long = "fn", group = "input")]
    function: Option<String>,
    /// Stored field (any of its header/data paths).
    #[arg(long, group = "input")]
    field: Option<PathBuf>,
    /// Stored state; tested through its exact characteristic function.
    #[arg(long, group = "input")]
    state: Option<PathBuf>,
    /// `lattice-50`, `random-50` or a q,p CSV file.
    #[arg(long, default_value = "lattice-50")]
    samples: String,
    /// Relative PSD tolerance; defaults by input kind.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    /// Off-node evaluation of stored fields.
    #[arg(long, value_enum, default_value_t = Interp::Spectral)]
    interp: Interp,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvolveMode {
    Cq,
    Twirl,
    Both,
}

#[derive(Args)]
struct EvolveArgs {
    state: PathBuf,
    /// Isotropic diffusion σ² (ignored when --cov is given).
    #[arg(long, default_value_t = 0.5)]
    sigma2: f64,
    /// Covariance `s_qq,s_qp,s_pp`.
    #[arg(long, value_parser = parse_triple)]
    cov: Option<(f64, f64, f64)>,
    /// Drift `q,p`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    drift: Option<(f64, f64)>,
    /// Comma-separated nonnegative ascending times.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1")]
    times: Vec<f64>,
    #[arg(long, value_enum, default_value_t = EvolveMode::Both)]
    mode: EvolveMode,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Multiplier,
    Star,
    Bochner,
    Schur,
    Intertwine,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    /// Debug mutation: conjugate the Weyl multiplier.
    #[arg(long)]
    flip_multiplier: bool,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_list(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let v = parse_list(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

/// Config keys set explicitly on the command line.
fn flag_layer(g: &Global) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_owned(), v);
    };
    if let Some(v) = g.fock_dim {
        put("fock_dim", v.into());
    }
    if let Some(v) = g.half_extent {
        put("half_extent", v.into());
    }
    if let Some(v) = g.points {
        put("points", v.into());
    }
    if let Some(v) = g.seed {
        put("seed", v.into());
    }
    if let Some(q) = g.quadrature {
        let s = match q {
            Quadrature::GaussHermite => QuadratureScheme::GaussHermite,
            Quadrature::MonteCarlo => QuadratureScheme::MonteCarlo,
        };
        put("quadrature", serde_json::to_value(s).expect("enum serializes"));
    }
    if let Some(v) = g.quadrature_order {
        put("quadrature_order", v.into());
    }
    if let Some(v) = g.mc_samples {
        put("mc_samples", v.into());
    }
    if let Some(v) = &g.output_dir {
        put("output_dir", v.to_string_lossy().into_owned().into());
    }
    if let Some(v) = g.threads {
        put("threads", v.into());
    }
    m
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = RunConfig::layered(g.config.as_deref()).context("loading configuration")?;
    let flags = flag_layer(g);
    if !flags.is_empty() {
        let mut base = match serde_json::to_value(&cfg)? {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        base.extend(flags);
        cfg = RunConfig::from_layers([base])?;
    }
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

fn init_threads(cfg: &RunConfig) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    if cfg.threads.is_some_and(|n| n > 1) {
        log::warn!("built without the parallel feature; --threads ignored");
    }
    Ok(())
}

/// Collects emitted files and writes the manifest when the command ends.
struct Run {
    root: PathBuf,
    record: ExperimentRecord,
    started: Instant,
    encoding: Encoding,
}

impl Run {
    fn new(cfg: &RunConfig, encoding: Encoding) -> Result<Self> {
        let root = cfg.output_dir.clone();
        std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        let command = std::env::args().skip(1).collect();
        Ok(Self { root, record: ExperimentRecord::new(cfg.clone(), command), started: Instant::now(), encoding })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn data_path(&self, stem: &str) -> PathBuf {
        let ext = match self.encoding {
            Encoding::F64le => "bin",
            Encoding::Csv => "csv",
        };
        self.path(&format!("{stem}.{ext}"))
    }

    fn emitted(&mut self, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            self.record.add_file(&self.root, p)?;
            println!("wrote {}", p.display());
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let p = self.path(name);
        io::write_json(&p, value)?;
        self.emitted(std::slice::from_ref(&p))?;
        Ok(p)
    }

    /// Keeps entries of an earlier manifest in the same directory unless
    /// this run rewrote them.
    fn finish(mut self) -> Result<bool> {
        let old = self.root.join(MANIFEST);
        if old.exists() {
            if let Ok(prev) = io::read_json::<ExperimentRecord>(&old) {
                for e in prev.files {
                    if !self.record.files.iter().any(|f| f.path == e.path) && self.root.join(&e.path).exists() {
                        self.record.files.push(e);
                    }
                }
            }
        }
        self.record.files.sort_by(|a, b| a.path.cmp(&b.path));
        self.record.wall_time_s = self.started.elapsed().as_secs_f64();
        self.record.write(&self.root)?;
        Ok(self.record.passed)
    }
}

fn report_warnings(ws: &[Warning]) {
    let mut seen: Vec<&Warning> = Vec::new();
    for w in ws {
        if !seen.contains(&w) {
            eprintln!("warning: {w}");
            seen.push(w);
        }
    }
}

fn load_state(path: &Path) -> Result<DensityState> {
    let op = io::read_operator(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(DensityState::certify(op, TRACE_TOL, PSD_TOL)?)
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "state".into())
}

fn cmd_state(cfg: &RunConfig, run: &mut Run, a: &StateArgs) -> Result<()> {
    let n = cfg.fock_dim;
    let alpha = a.alpha.map(|(re, im)| Complex64::new(re, im));
    let need_alpha = || alpha.context("--alpha re,im is required for this state");
    let (rho, default_name) = match a.kind {
        StateKind::Vacuum => (fock::state_vacuum(n)?, "vacuum".to_owned()),
        StateKind::Coherent => (fock::state_coherent(need_alpha()?, n)?, "coherent".into()),
        StateKind::Cat => (fock::state_cat(need_alpha()?, n)?, "cat".into()),
        StateKind::Fock => {
            let k = a.k.context("--k is required for a Fock state")?;
            (fock::state_fock(k, n)?, format!("fock{k}"))
        }
        StateKind::Thermal => {
            let nbar = a.nbar.context("--nbar is required for a thermal state")?;
            (fock::state_thermal(nbar, n)?, "thermal".into())
        }
    };
    let name = a.name.clone().unwrap_or(default_name);
    let files = io::write_operator(&run.data_path(&name), rho.op(), run.encoding)?;
    run.emitted(&files)?;
    let cert = rho.certification()?;
    run.json(&format!("{name}_cert.json"), &cert)?;
    println!(
        "certified: dim {} trace {} min_eig {:e} purity {}",
        cert.dim,
        fmt_f64(cert.trace),
        cert.min_eig,
        fmt_f64(cert.purity)
    );
    run.record.add_check("certification", true, cert.min_eig);
    Ok(())
}

#[derive(Serialize)]
struct FieldSummary {
    state: String,
    chi_origin_re: f64,
    chi_origin_im: f64,
    chi_sup_norm: f64,
    chi_l2_haar: f64,
    purity_operator: f64,
    wigner_integral: f64,
    wigner_min: f64,
    wigner_max_imag: f64,
    warnings: Vec<Warning>,
}

fn cmd_field(cfg: &RunConfig, run: &mut Run, a: &FieldArgs, side: Side) -> Result<()> {
    let grid = cfg.grid()?;
    let rho = load_state(&a.state)?;
    let mut warnings = Vec::new();
    let chi = dequantize(rho.op(), grid).drain_into(&mut warnings);
    let wig = wigner_from_state(rho.op(), grid)?.drain_into(&mut warnings);
    let base = stem_of(&a.state);
    let (suffix, field) = match side {
        Side::Wigner => ("wigner", &wig.field),
        _ => ("char", &chi.field),
    };
    let name = a.name.clone().unwrap_or_else(|| format!("{base}_{suffix}"));
    let files = io::write_field(&run.data_path(&name), field, side, run.encoding)?;
    run.emitted(&files)?;
    let origin = chi.field.at_origin();
    let l2 = grid_integral(&chi.field.map(|v| Complex64::new(v.norm_sqr(), 0.0)), Weight::Haar).value.re.sqrt();
    let summary = FieldSummary {
        state: a.state.display().to_string(),
        chi_origin_re: origin.re,
        chi_origin_im: origin.im,
        chi_sup_norm: chi.field.max_abs(),
        chi_l2_haar: l2,
        purity_operator: rho.purity(),
        wigner_integral: wig.integral(),
        wigner_min: wig.min_real(),
        wigner_max_imag: wig.max_imag(),
        warnings: warnings.clone(),
    };
    report_warnings(&warnings);
    println!(
        "chi(0) = {} | sup|chi| = {} | haar L2 = {} | wigner integral = {} | wigner min = {}",
        fmt_f64(origin.re),
        fmt_f64(summary.chi_sup_norm),
        fmt_f64(l2),
        fmt_f64(summary.wigner_integral),
        fmt_f64(summary.wigner_min)
    );
    run.json(&format!("{name}_summary.json"), &summary)?;
    Ok(())
}

/// `e^{−c|z|²}`, `1`, or a point-mass characteristic function.
fn analytic_fn(spec: &str) -> Result<Box<dyn PhaseFunction>> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut params = std::collections::BTreeMap::new();
    for kv in rest.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').with_context(|| format!("expected key=value in {kv:?}"))?;
        params.insert(k.trim().to_owned(), v.trim().parse::<f64>().with_context(|| format!("parsing {kv:?}"))?);
    }
    let get = |k: &str| params.get(k).copied().with_context(|| format!("{kind} needs {k}="));
    Ok(match kind {
        "one" => Box::new(|_: PhasePoint| Complex64::new(1.0, 0.0)),
        "gauss" => {
            let c = get("c")?;
            Box::new(move |z: PhasePoint| Complex64::new((-c * z.norm_sqr()).exp(), 0.0))
        }
        "point" => {
            let v = PhasePoint::new(get("q")?, get("p")?);
            Box::new(move |z: PhasePoint| Complex64::from_polar(1.0, phasecone::phase::symplectic_form(z, v)))
        }
        other => bail!("unknown function {other:?} (expected one, gauss:c=..., point:q=...,p=...)"),
    })
}

fn sample_set(spec: &str) -> Result<SampleSet> {
    Ok(match spec {
        "lattice-50" => SampleSet::lattice_50(),
        "random-50" => SampleSet::random_50(),
        path => io::read_sample_set(Path::new(path)).with_context(|| format!("reading samples {path}"))?,
    })
}

#[derive(Serialize)]
struct PositivityOutput<'a> {
    mode: &'static str,
    input: String,
    samples: &'a str,
    #[serde(flatten)]
    report: &'a PsdReport,
    expect: Option<Expect>,
}

fn cmd_positivity(cfg: &RunConfig, run: &mut Run, a: &PositivityArgs) -> Result<bool> {
    let s = sample_set(&a.samples)?;
    let test = |f: &dyn PhaseFunction, tol: f64| match a.mode {
        Mode::Classical => pd_test_classical(f, &s, tol),
        Mode::Quantum => pd_test_quantum(f, &s, tol),
    };
    let (report, input) = if let Some(spec) = &a.function {
        (test(analytic_fn(spec)?.as_ref(), a.tol.unwrap_or(cfg.psd_tol_analytic))?, spec.clone())
    } else if let Some(path) = &a.field {
        let (field, _) = io::read_field(path).with_context(|| format!("reading {}", path.display()))?;
        let tol = a.tol.unwrap_or(cfg.psd_tol_grid);
        let r = match a.interp {
            Interp::Spectral => test(&SpectralField(&field), tol)?,
            Interp::Bilinear => test(&field, tol)?,
        };
        (r, path.display().to_string())
    } else if let Some(path) = &a.state {
        let rho = load_state(path)?;
        let chi = phasecone::transforms::OperatorChar::new(rho.op());
        (test(&chi, a.tol.unwrap_or(cfg.psd_tol_analytic))?, path.display().to_string())
    } else {
        bail!("one of --fn, --field or --state is required");
    };
    let mode = match a.mode {
        Mode::Classical => "classical",
        Mode::Quantum => "quantum",
    };
    println!("{:>8} {:>24} {:>24} {:>12} {:>8}", "gram_dim", "min_eig", "max_eig", "herm_defect", "verdict");
    println!(
        "{:>8} {:>24} {:>24} {:>12.3e} {:>8}",
        report.gram_dim,
        fmt_f64(report.min_eig),
        fmt_f64(report.max_eig),
        report.hermiticity_defect,
        if report.passed() { "pass" } else { "fail" }
    );
    let name = a.name.clone().unwrap_or_else(|| format!("positivity_{mode}"));
    let out = PositivityOutput { mode, input, samples: &a.samples, report: &report, expect: a.expect };
    run.json(&format!("{name}.json"), &out)?;
    let ok = match a.expect {
        None => true,
        Some(Expect::Pass) => report.passed(),
        Some(Expect::Fail) => !report.passed(),
    };
    run.record.add_check(format!("{mode} positivity"), ok, report.min_eig);
    if !ok {
        eprintln!("expectation not met");
    }
    Ok(ok)
}

fn cmd_evolve(cfg: &RunConfig, run: &mut Run, a: &EvolveArgs) -> Result<()> {
    if a.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || a.times.windows(2).any(|w| w[1] < w[0]) {
        bail!("--times must be nonnegative and ascending");
    }
    let cov = match a.cov {
        Some((qq, qp, pp)) => [[qq, qp], [qp, pp]],
        None => [[a.sigma2, 0.0], [0.0, a.sigma2]],
    };
    let drift = a.drift.map(|(q, p)| PhasePoint::new(q, p)).unwrap_or_default();
    let params = GaussianSemigroupParams::new(drift, cov)?;
    let grid = cfg.grid()?;
    let quad = cfg.quadrature()?;
    let rho = load_state(&a.state)?;
    let mut warnings = Vec::new();
    let chi = dequantize(rho.op(), grid).drain_into(&mut warnings);

    let name = a.name.clone().unwrap_or_else(|| format!("{}_evolve", stem_of(&a.state)));
    let path = run.path(&format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["t", "purity_char", "purity_op", "intertwine_deviation"])?;
    for &t in &a.times {
        let mut row = vec![fmt_f64(t), String::new(), String::new(), String::new()];
        let cq = (a.mode != EvolveMode::Twirl).then(|| cq_apply(&params, t, &chi)).transpose()?;
        if let Some(c) = &cq {
            row[1] = fmt_f64(purity_from_char(c).drain_into(&mut warnings));
        }
        if a.mode != EvolveMode::Cq {
            let evolved = twirl_apply(&params, t, &rho, &quad)?.drain_into(&mut warnings);
            row[2] = fmt_f64(evolved.purity());
            if let Some(c) = &cq {
                let lhs = dequantize(evolved.op(), grid).drain_into(&mut warnings);
                row[3] = fmt_f64(lhs.field.max_abs_diff(&c.field)?);
            }
        }
        log::info!("t = {t}: {row:?}");
        w.write_record(&row)?;
    }
    w.flush()?;
    drop(w);
    report_warnings(&warnings);
    run.emitted(&[path])?;
    Ok(())
}

fn cmd_verify(cfg: &RunConfig, run: &mut Run, a: &VerifyArgs) -> Result<bool> {
    let suite = match a.suite {
        SuiteArg::Multiplier => Suite::Multiplier,
        SuiteArg::Star => Suite::Star,
        SuiteArg::Bochner => Suite::Bochner,
        SuiteArg::Schur => Suite::Schur,
        SuiteArg::Intertwine => Suite::Intertwine,
        SuiteArg::All => Suite::All,
    };
    let report = verify::run(suite, cfg, VerifyOptions { flip_multiplier: a.flip_multiplier })?;
    for c in &report.checks {
        let bound = match c.bound {
            verify::Bound::AtMost(b) => format!("<= {b:e}"),
            verify::Bound::AtLeast(b) => format!(">= {b:e}"),
        };
        println!(
            "{} {:<11} {:<58} {:>24} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            fmt_f64(c.measured),
            bound
        );
        run.record.add_check(format!("{}: {}", c.suite, c.name), c.passed, c.measured);
    }
    run.json(&format!("verify_{}.json", suite.name()), &report)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli.global)?;
    init_threads(&cfg)?;
    if let Command::CheckManifest { dir } = &cli.command {
        let dir = dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
        let bad = check_manifest(&dir).with_context(|| format!("checking {}", dir.join(MANIFEST).display()))?;
        for m in &bad {
            println!("MISMATCH {}: {}", m.path.display(), m.reason);
        }
        if bad.is_empty() {
            println!("manifest ok");
        }
        return Ok(bad.is_empty());
    }
    let encoding = match cli.global.encoding {
        Enc::Bin => Encoding::F64le,
        Enc::Csv => Encoding::Csv,
    };
    let mut run = Run::new(&cfg, encoding)?;
    let ok = match &cli.command {
        Command::State(a) => cmd_state(&cfg, &mut run, a).map(|_| true),
        Command::Char(a) => cmd_field(&cfg, &mut run, a, Side::Characteristic).map(|_| true),
        Command::Wigner(a) => cmd_field(&cfg, &mut run, a, Side::Wigner).map(|_| true),
        Command::Positivity(a) => cmd_positivity(&cfg, &mut run, a),
        Command::Evolve(a) => cmd_evolve(&cfg, &mut run, a).map(|_| true),
        Command::Verify(a) => cmd_verify(&cfg, &mut run, a),
        Command::CheckManifest { .. } => unreachable!(),
    }?;
    Ok(run.finish()? && ok)
}
