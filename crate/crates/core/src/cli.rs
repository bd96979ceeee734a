//! The `lrdfield` command line tool.
//!
//! Values are resolved in the order command line flag, environment variable
//! (`LRDFIELD_OUT_DIR`, `LRDFIELD_WORKERS`), configuration file (`--config`),
//! built-in default. Every subcommand writes only inside its output directory
//! and starts by writing `manifest.txt` there; the manifest is rewritten with
//! the end time and the produced files when the run finishes.
//!
//! Exit status: 0 success, 1 configuration or input error, 2 numeric failure
//! (including a failed `variance-check`), 3 resource limit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::field::{self, FieldSampler, SeedPolicy};
use crate::functionals::{
    exact_variance, FunctionalConfig, FunctionalEvaluator, FunctionalMode, WeightFunction, WeightKind,
};
use crate::hermite::{hermite_coeffs, Nonlinearity};
use crate::study::{self, fit_log_rate, run_study_with_progress, StudyConfig};
use crate::surface::{SurfaceCloud, SurfaceKind, SurfaceSpec};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const DEFAULT_OUT_DIR: &str = "lrdfield-out";
pub const DEFAULT_DENSITY: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 1;

/// Keys accepted in configuration files.
pub const CONFIG_KEYS: &[&str] = &[
    "surface",
    "weight",
    "alpha",
    "kappa",
    "g",
    "radii",
    "reference_radius",
    "replicates",
    "repeats",
    "points_density",
    "seed",
    "out_dir",
    "share_fields",
    "workers",
    "radius",
    "points",
];

/// A parsed `key = value` configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", no + 1), format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().to_ascii_lowercase();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::config(key, "unknown configuration key"));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::config(key, "given more than once"));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))))
            .transpose()
    }
}

/// Expand `start:end:step` (inclusive) or a comma-separated list.
pub fn parse_radii(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::config("radii", format!("`{s}`: {why}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    let radii = match parts.len() {
        1 => s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?,
        3 => {
            let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || end < start {
                return Err(bad("need start ≤ end and a positive step"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(bad("range has too many points"));
            }
            (0..count).map(|i| start + step * i as f64).collect()
        }
        _ => return Err(bad("expected start:end:step or a comma list")),
    };
    if radii.is_empty() {
        return Err(bad("empty grid"));
    }
    Ok(radii)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
    }
}

/// Record of one run, sufficient to repeat it with the same build.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub seed: Option<u64>,
    /// Fully resolved settings.
    pub settings: Vec<(String, String)>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub status: String,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: None,
            seed: None,
            settings: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            status: "running".into(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subcommand = {}", self.subcommand);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "started_unix = {:.3}", self.started_unix);
        if let Some(t) = self.finished_unix {
            let _ = writeln!(s, "finished_unix = {t:.3}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "status = {}", self.status);
        for (k, v) in &self.settings {
            let _ = writeln!(s, "config.{k} = {v}");
        }
        for p in &self.inputs {
            let _ = writeln!(s, "input = {}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(s, "output = {}", p.display());
        }
        s
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        fs::write(&path, self.render())?;
        Ok(path)
    }
}

#[derive(Debug, Parser)]
#[command(name = "lrdfield", version, about = "Simulation studies for long-range dependent Gaussian fields on spheres and cubes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the points of a sphere or cube cloud as CSV.
    SampleSurface(SampleSurfaceArgs),
    /// Simulate field replicates on a cloud.
    SimulateField(SimulateFieldArgs),
    /// Evaluate the weighted functional on stored field replicates.
    ComputeFunctional(ComputeFunctionalArgs),
    /// Run a Kolmogorov-distance convergence study.
    KsStudy(KsStudyArgs),
    /// Refit the log-distance rate from a distances.csv file.
    RateFit(RateFitArgs),
    /// Compare the exact variance of the functional with a Monte Carlo estimate.
    VarianceCheck(VarianceCheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Directory for every file this run writes.
    #[arg(long, env = "LRDFIELD_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CloudArgs {
    #[arg(long)]
    pub surface: Option<SurfaceKind>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Number of points (a target for cubes).
    #[arg(long)]
    pub points: Option<usize>,
    /// Points per unit area, used when `--points` is absent.
    #[arg(long = "density")]
    pub points_density: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleSurfaceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub cloud: CloudArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateFieldArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub cloud: CloudArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FieldFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Leading,
}

#[derive(Debug, Clone, Args)]
pub struct ComputeFunctionalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub cloud: CloudArgs,
    /// Field replicates as CSV or an LRF1 binary block.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, value_enum, default_value = "full")]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Args)]
pub struct KsStudyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub surface: Option<SurfaceKind>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub g: Option<String>,
    /// `start:end:step` or a comma list.
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long)]
    pub reference_radius: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long = "density")]
    pub points_density: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "LRDFIELD_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long)]
    pub share_fields: Option<bool>,
    /// Validate and write the manifest without simulating.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RateFitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// A distances.csv file written by `ks-study`.
    #[arg(long)]
    pub input: PathBuf,
    /// Only use rows of this surface.
    #[arg(long)]
    pub surface: Option<SurfaceKind>,
    /// Only use rows of this weight.
    #[arg(long)]
    pub weight: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct VarianceCheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub cloud: CloudArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run one subcommand; returns the exit status for runs that complete.
pub fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::SampleSurface(a) => sample_surface(a),
        Command::SimulateField(a) => simulate_field(a),
        Command::ComputeFunctional(a) => compute_functional(a),
        Command::KsStudy(a) => ks_study(a),
        Command::RateFit(a) => rate_fit(a),
        Command::VarianceCheck(a) => variance_check(a),
    }
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile> {
    common.config.as_deref().map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.parsed(key),
    }
}

fn pick_or<T: std::str::FromStr>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    Ok(pick(flag, file, key)?.unwrap_or(default))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    Ok(std::path::absolute(path)?)
}

/// Resolve, create and canonicalize the output directory.
fn prepare_out_dir(common: &CommonArgs, file: &ConfigFile) -> Result<PathBuf> {
    let dir = match &common.out_dir {
        Some(d) => d.clone(),
        None => file.get("out_dir").map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::config("out_dir", format!("cannot create {}: {e}", dir.display())))?;
    absolute(&dir)
}

struct Run {
    manifest: RunManifest,
    out_dir: PathBuf,
}

impl Run {
    fn start(name: &str, common: &CommonArgs, file: &ConfigFile) -> Result<Self> {
        let out_dir = prepare_out_dir(common, file)?;
        let mut manifest = RunManifest::new(name);
        manifest.set("out_dir", out_dir.display());
        if let Some(c) = &common.config {
            manifest.inputs.push(absolute(c)?);
        }
        Ok(Run { manifest, out_dir })
    }

    /// Write the manifest before the expensive part of the run.
    fn begin(&self) -> Result<()> {
        self.manifest.write(&self.out_dir)?;
        Ok(())
    }

    fn output(&mut self, name: &str, body: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, body)?;
        self.manifest.outputs.push(path.clone());
        Ok(path)
    }

    fn finish(mut self, status: &str) -> Result<()> {
        self.manifest.finished_unix = Some(unix_now());
        self.manifest.status = status.into();
        self.manifest.write(&self.out_dir)?;
        Ok(())
    }
}

struct ResolvedCloud {
    kind: SurfaceKind,
    radius: f64,
    points: usize,
}

fn resolve_cloud(a: &CloudArgs, file: &ConfigFile, default_radius: f64) -> Result<ResolvedCloud> {
    let kind = pick_or(a.surface, file, "surface", SurfaceKind::Sphere)?;
    let radius = pick_or(a.radius, file, "radius", default_radius)?;
    let spec = SurfaceSpec::new(kind, radius)?;
    let points = match pick(a.points, file, "points")? {
        Some(n) => n,
        None => spec.points_for_density(pick_or(a.points_density, file, "points_density", DEFAULT_DENSITY)?),
    };
    Ok(ResolvedCloud { kind, radius, points })
}

impl ResolvedCloud {
    fn build(&self) -> Result<SurfaceCloud> {
        SurfaceSpec::new(self.kind, self.radius)?.sample(self.points)
    }

    fn record(&self, m: &mut RunManifest) {
        m.set("surface", self.kind);
        m.set("radius", self.radius);
        m.set("points", self.points);
    }
}

fn model_for(alpha: f64) -> Result<CovarianceModel> {
    CovarianceModel::cauchy(SurfaceSpec::DIMENSION, alpha).map_err(|e| Error::config("alpha", e.to_string()))
}

fn functional_config(alpha: f64, kappa: Option<usize>, g: &str, weight: &str) -> Result<FunctionalConfig> {
    let g: Nonlinearity = g.parse()?;
    let weight = WeightFunction::new(weight.parse()?);
    let jmax = 10usize.max(kappa.unwrap_or(0));
    let spec = hermite_coeffs(&g, jmax, 40.max(jmax + 2))?;
    let kappa = kappa.unwrap_or(spec.rank);
    FunctionalConfig::with_kappa(model_for(alpha)?, weight, spec, kappa)
}

fn sample_surface(a: &SampleSurfaceArgs) -> Result<i32> {
    let file = load_config(&a.common)?;
    let cloud_args = resolve_cloud(&a.cloud, &file, 20.0)?;
    let mut run = Run::start("sample-surface", &a.common, &file)?;
    cloud_args.record(&mut run.manifest);
    let cloud = cloud_args.build()?;
    run.manifest.set("actual_points", cloud.len());
    run.begin()?;
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf)?;
    let path = run.output("points.csv", buf)?;
    println!("wrote {} points to {}", cloud.len(), path.display());
    run.finish("ok")?;
    Ok(0)
}

fn simulate_field(a: &SimulateFieldArgs) -> Result<i32> {
    let file = load_config(&a.common)?;
    let cloud_args = resolve_cloud(&a.cloud, &file, 20.0)?;
    let alpha = pick_or(a.alpha, &file, "alpha", 2.0 / 3.0)?;
    let seed = pick_or(a.seed, &file, "seed", DEFAULT_SEED)?;
    let replicates = pick_or(a.replicates, &file, "replicates", 1)?;
    if replicates == 0 {
        return Err(Error::config("replicates", "must be at least 1"));
    }
    let model = model_for(alpha)?;
    let mut run = Run::start("simulate-field", &a.common, &file)?;
    cloud_args.record(&mut run.manifest);
    run.manifest.set("alpha", alpha);
    run.manifest.set("replicates", replicates);
    run.manifest.set("format", format!("{:?}", a.format).to_lowercase());
    run.manifest.seed = Some(seed);
    let cloud = cloud_args.build()?;
    run.begin()?;
    let sampler = FieldSampler::new(&model, &cloud)?;
    let reps = sampler.simulate(&SeedPolicy::new(seed), replicates);
    let mut points = Vec::new();
    cloud.write_csv(&mut points)?;
    run.output("points.csv", points)?;
    let mut buf = Vec::new();
    let name = match a.format {
        FieldFormat::Csv => {
            field::write_csv(&reps, &mut buf)?;
            "field.csv"
        }
        FieldFormat::Binary => {
            field::write_binary(&reps, &mut buf)?;
            "field.bin"
        }
    };
    let path = run.output(name, buf)?;
    run.manifest.set("jitter", sampler.jitter());
    println!(
        "wrote {replicates} replicates on {} points to {} (jitter {:e})",
        cloud.len(),
        path.display(),
        sampler.jitter()
    );
    run.finish("ok")?;
    Ok(0)
}

/// Read field rows from CSV or an LRF1 block, chosen by the leading bytes.
pub fn read_field_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut f = fs::File::open(path).map_err(|e| Error::config("input", format!("cannot open {}: {e}", path.display())))?;
    let mut head = [0u8; 4];
    let got = f.read(&mut head)?;
    drop(f);
    let f = fs::File::open(path)?;
    if got == 4 && &head == field::LRF_MAGIC {
        field::read_binary(BufReader::new(f))
    } else {
        field::read_csv(BufReader::new(f))
    }
}

fn compute_functional(a: &ComputeFunctionalArgs) -> Result<i32> {
    let file = load_config(&a.common)?;
    let cloud_args = resolve_cloud(&a.cloud, &file, 20.0)?;
    let alpha = pick_or(a.alpha, &file, "alpha", 2.0 / 3.0)?;
    let kappa = pick(a.kappa, &file, "kappa")?;
    let g = pick_or(a.g.clone(), &file, "g", "hermite_2".to_string())?;
    let weight = pick_or(a.weight.clone(), &file, "weight", "constant_one".to_string())?;
    let cfg = functional_config(alpha, kappa, &g, &weight)?;
    let mode = match a.mode {
        ModeArg::Full => FunctionalMode::Full,
        ModeArg::Leading => FunctionalMode::LeadingTerm,
    };
    let mut run = Run::start("compute-functional", &a.common, &file)?;
    cloud_args.record(&mut run.manifest);
    run.manifest.set("alpha", alpha);
    run.manifest.set("kappa", cfg.kappa);
    run.manifest.set("g", &cfg.hermite.g);
    run.manifest.set("weight", cfg.weight.kind);
    run.manifest.set("mode", format!("{mode:?}"));
    run.manifest.inputs.push(absolute(&a.input)?);
    run.begin()?;
    let cloud = cloud_args.build()?;
    let rows = read_field_file(&a.input)?;
    let eval = FunctionalEvaluator::new(&cfg, &cloud, cloud_args.radius, mode)?;
    let mut out = String::from("replicate,x_value\n");
    for (k, row) in rows.iter().enumerate() {
        let _ = writeln!(out, "{k},{:.17e}", eval.eval(row)?);
    }
    let path = run.output("functional.csv", out)?;
    println!("wrote {} functional values to {}", rows.len(), path.display());
    run.finish("ok")?;
    Ok(0)
}

/// Resolve a study configuration from flags and a configuration file.
pub fn resolve_study(a: &KsStudyArgs, file: &ConfigFile) -> Result<StudyConfig> {
    let d = StudyConfig::default();
    let weight: WeightKind = pick_or(a.weight.clone(), file, "weight", "constant_one".to_string())?.parse()?;
    let g: Nonlinearity = pick_or(a.g.clone(), file, "g", "hermite_2".to_string())?.parse()?;
    let radii = match pick(a.radii.clone(), file, "radii")? {
        Some(s) => parse_radii(&s)?,
        None => d.radii.clone(),
    };
    let share_fields = match a.share_fields {
        Some(v) => v,
        None => file.get("share_fields").map(|v| parse_bool("share_fields", v)).transpose()?.unwrap_or(false),
    };
    let cfg = StudyConfig {
        surface: pick_or(a.surface, file, "surface", d.surface)?,
        weight: WeightFunction::new(weight),
        alpha: pick_or(a.alpha, file, "alpha", d.alpha)?,
        kappa: pick(a.kappa, file, "kappa")?,
        g,
        radii,
        reference_radius: pick(a.reference_radius, file, "reference_radius")?,
        replicates: pick_or(a.replicates, file, "replicates", d.replicates)?,
        repeats: pick_or(a.repeats, file, "repeats", d.repeats)?,
        points_density: pick_or(a.points_density, file, "points_density", d.points_density)?,
        seed: pick_or(a.seed, file, "seed", d.seed)?,
        workers: pick_or(a.workers, file, "workers", d.workers)?,
        share_fields,
        ..d
    };
    cfg.validate()?;
    Ok(cfg)
}

fn ks_study(a: &KsStudyArgs) -> Result<i32> {
    let file = load_config(&a.common)?;
    let cfg = resolve_study(a, &file)?;
    let fcfg = cfg.functional_config()?;
    let mut run = Run::start("ks-study", &a.common, &file)?;
    let m = &mut run.manifest;
    m.seed = Some(cfg.seed);
    m.set("surface", cfg.surface);
    m.set("weight", cfg.weight.kind);
    m.set("alpha", cfg.alpha);
    m.set("kappa", fcfg.kappa);
    m.set("g", &cfg.g);
    m.set("radii", cfg.radii.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    m.set("reference_radius", cfg.reference());
    m.set("replicates", cfg.replicates);
    m.set("repeats", cfg.repeats);
    m.set("points_density", cfg.points_density);
    m.set("share_fields", cfg.share_fields);
    m.set("workers", cfg.workers);
    m.set(
        "point_counts",
        cfg.point_counts()?.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    run.begin()?;
    if a.dry_run {
        println!("configuration valid; manifest written to {}", run.out_dir.join(MANIFEST_FILE).display());
        run.finish("dry-run")?;
        return Ok(0);
    }
    let result = run_study_with_progress(&cfg, &|k, total| eprintln!("PROGRESS {k}/{total}"))?;
    let written = study::write_outputs(&result, &run.out_dir)?;
    run.manifest.outputs.extend(written);
    for c in &result.meta.clouds {
        run.manifest.set(&format!("jitter_r{}", c.radius), c.jitter);
    }
    match &result.fit {
        Some(fit) => println!(
            "slope {:.6e} ± {:.2e} (intercept {:.4}, {} points, {} zeros excluded)",
            fit.slope, fit.slope_se, fit.intercept, fit.n_points, fit.excluded_zeros
        ),
        None => println!("too few positive distances for a rate fit"),
    }
    run.finish("ok")?;
    Ok(0)
}

/// Rows of a distances.csv file: `(surface, weight, r, repeat, distance)`.
pub fn read_distances(text: &str) -> Result<Vec<(String, String, f64, usize, f64)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::parse("distances.csv", "empty file"))?;
    if header.trim() != "surface,weight,r,repeat,ks_distance" {
        return Err(Error::parse("distances.csv", format!("unexpected header `{header}`")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::parse(format!("distances.csv line {}", i + 2), format!("cannot parse `{line}`"));
            if f.len() != 5 {
                return Err(bad());
            }
            Ok((
                f[0].to_string(),
                f[1].to_string(),
                f[2].parse().map_err(|_| bad())?,
                f[3].parse().map_err(|_| bad())?,
                f[4].parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn rate_fit(a: &RateFitArgs) -> Result<i32> {
    let file = load_config(&a.common)?;
    let weight = a.weight.as_deref().map(str::parse::<WeightKind>).transpose()?;
    let mut run = Run::start("rate-fit", &a.common, &file)?;
    run.manifest.inputs.push(absolute(&a.input)?);
    if let Some(s) = a.surface {
        run.manifest.set("surface", s);
    }
    if let Some(w) = weight {
        run.manifest.set("weight", w);
    }
    run.begin()?;
    let text = fs::read_to_string(&a.input).map_err(|e| Error::config("input", format!("cannot read {}: {e}", a.input.display())))?;
    let rows: Vec<_> = read_distances(&text)?
        .into_iter()
        .filter(|row| a.surface.is_none_or(|s| row.0 == s.to_string()))
        .filter(|row| weight.is_none_or(|w| row.1 == w.to_string()))
        .collect();
    let mut grid: Vec<f64> = rows.iter().map(|r| r.2).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    // One observation per row: feed the fit a single-column layout per row.
    let mut xs = Vec::with_capacity(rows.len());
    let mut ds = Vec::with_capacity(rows.len());
    for row in &rows {
        xs.push(row.2);
        ds.push(row.4);
    }
    let fit = fit_log_rate(&[ds], &xs)?;
    let path = run.output(study::RATE_FIT_FILE, study::rate_fit_csv(&fit))?;
    println!(
        "slope {:.6e} ± {:.2e}, intercept {:.4} from {} points over {} radii -> {}",
        fit.slope,
        fit.slope_se,
        fit.intercept,
        fit.n_points,
        grid.len(),
        path.display()
    );
    run.finish("ok")?;
    Ok(0)
}

/// Exact and Monte Carlo variance of the leading-term functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceComparison {
    pub exact: f64,
    pub monte_carlo: f64,
    /// Standard error of the Monte Carlo variance.
    pub standard_error: f64,
    pub replicates: usize,
}

impl VarianceComparison {
    pub fn z_score(&self) -> f64 {
        (self.monte_carlo - self.exact) / self.standard_error
    }

    pub fn passes(&self, sigmas: f64) -> bool {
        self.z_score().abs() <= sigmas
    }
}

/// Simulate `replicates` values of the leading-term functional on `cloud`
/// and compare their sample variance with [`exact_variance`].
pub fn compare_variance(cfg: &FunctionalConfig, cloud: &SurfaceCloud, r: f64, replicates: usize, seed: u64) -> Result<VarianceComparison> {
    if replicates < 2 {
        return Err(Error::config("replicates", "need at least 2"));
    }
    let exact = exact_variance(cfg, cloud, r)?;
    let eval = FunctionalEvaluator::new(cfg, cloud, r, FunctionalMode::LeadingTerm)?;
    let sampler = FieldSampler::new(&cfg.model, cloud)?;
    let mut xs = Vec::with_capacity(replicates);
    let mut failure = None;
    sampler.for_each_replicate(&SeedPolicy::new(seed), replicates, |_, v| match eval.eval(v) {
        Ok(x) => xs.push(x),
        Err(e) => failure = Some(e),
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (var, se) = variance_with_se(&xs);
    Ok(VarianceComparison {
        exact,
        monte_carlo: var,
        standard_error: se,
        replicates,
    })
}

/// Unbiased sample variance and its large-sample standard error
/// `sqrt((m₄ − s⁴) / N)`.
pub fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    (var, ((m4 - m2 * m2) / n).max(0.0).sqrt())
}

fn variance_check(a: &VarianceCheckArgs) -> Result<i32> {
    let file = load_config(&a.common)?;
    let mut cloud_args = resolve_cloud(&a.cloud, &file, 20.0)?;
    if a.cloud.points.is_none() && a.cloud.points_density.is_none() && file.get("points").is_none() && file.get("points_density").is_none() {
        cloud_args.points = 200;
    }
    let alpha = pick_or(a.alpha, &file, "alpha", 2.0 / 3.0)?;
    let kappa = pick(a.kappa, &file, "kappa")?;
    let g = pick_or(a.g.clone(), &file, "g", "hermite_2".to_string())?;
    let weight = pick_or(a.weight.clone(), &file, "weight", "constant_one".to_string())?;
    let replicates = pick_or(a.replicates, &file, "replicates", 10_000)?;
    let seed = pick_or(a.seed, &file, "seed", DEFAULT_SEED)?;
    let cfg = functional_config(alpha, kappa, &g, &weight)?;
    let mut run = Run::start("variance-check", &a.common, &file)?;
    cloud_args.record(&mut run.manifest);
    run.manifest.set("alpha", alpha);
    run.manifest.set("kappa", cfg.kappa);
    run.manifest.set("g", &cfg.hermite.g);
    run.manifest.set("weight", cfg.weight.kind);
    run.manifest.set("replicates", replicates);
    run.manifest.seed = Some(seed);
    let cloud = cloud_args.build()?;
    run.begin()?;
    let cmp = compare_variance(&cfg, &cloud, cloud_args.radius, replicates, seed)?;
    let verdict = if cmp.passes(3.0) { "PASS" } else { "FAIL" };
    let report = format!(
        "exact_variance = {:.10e}\nmonte_carlo_variance = {:.10e}\nstandard_error = {:.4e}\nz_score = {:.3}\nreplicates = {}\nresult = {verdict}\n",
        cmp.exact,
        cmp.monte_carlo,
        cmp.standard_error,
        cmp.z_score(),
        cmp.replicates
    );
    print!("{report}");
    run.output("variance_check.txt", report)?;
    run.finish(verdict)?;
    Ok(if verdict == "PASS" { 0 } else { 2 })
}
