//! Command-line front end: `simulate`, `discover` and `bench`.
//!
//! Settings come from an optional JSON config file; command-line flags
//! override it. Exit codes: 0 ok, 2 configuration, 3 stability, 4 I/O,
//! 5 discovery failure, 1 other numerical failures.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use stochlag::bench::{
    discover_models, run_benchmark, summary_csv, write_outputs, BenchConfig, DEFAULT_LAMBDA,
    DEFAULT_LAMBDA_DIFFUSION, DEFAULT_SEED,
};
use stochlag::library::{build_diffusion_library, build_lagrangian_library, LibraryOptions};
use stochlag::sim::{build_system, export_csv, generate_ensemble, load_ensemble, save_ensemble, SystemSpec, BENCHMARKS};
use stochlag::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "STOCHLAG_OUT";
pub const DEFAULT_OUT: &str = "stochlag-out";

#[derive(Debug, Parser)]
#[command(name = "stochlag", version, about = "Discover Lagrangians of stochastic systems from ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble and write it to disk.
    Simulate(SimulateArgs),
    /// Discover Lagrangian, diffusion, equations of motion and Hamiltonian.
    Discover(DiscoverArgs),
    /// Run the benchmark suite and write reports plus a summary table.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Base seed (default 2024).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long = "t-f")]
    pub t_f: Option<f64>,
    /// Number of realizations.
    #[arg(long = "n-real")]
    pub n_real: Option<usize>,
    /// System parameter override, `name=value` (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// Benchmark name.
    #[arg(long)]
    pub system: Option<String>,
    /// JSON system specification, instead of a benchmark name.
    #[arg(long, conflicts_with = "system")]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also export the first N realizations as CSV.
    #[arg(long = "csv")]
    pub csv_realizations: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ensemble file from `simulate`; simulated inline when absent.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Relative STLS threshold for the Lagrangian.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Relative STLS threshold for the diffusion.
    #[arg(long = "lambda-diffusion")]
    pub lambda_diffusion: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated subset of benchmarks.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    /// Relative STLS threshold for the Lagrangian.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Relative STLS threshold for the diffusion.
    #[arg(long = "lambda-diffusion")]
    pub lambda_diffusion: Option<f64>,
    /// Prediction window as a fraction of the training window.
    #[arg(long = "prediction-factor")]
    pub prediction_factor: Option<f64>,
    /// Realizations per prediction ensemble.
    #[arg(long = "prediction-n-real")]
    pub prediction_n_real: Option<usize>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must name the subcommand the file is used with.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub system: Option<String>,
    #[serde(default)]
    pub spec: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_f: Option<f64>,
    #[serde(default)]
    pub n_real: Option<usize>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_diffusion: Option<f64>,
    #[serde(default)]
    pub ensemble: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub only: Option<Vec<String>>,
    #[serde(default)]
    pub prediction_factor: Option<f64>,
    #[serde(default)]
    pub prediction_n_real: Option<usize>,
    #[serde(default)]
    pub csv_realizations: Option<usize>,
    #[serde(default)]
    pub lagrangian_library: Option<LibraryOptions>,
    #[serde(default)]
    pub diffusion_library: Option<LibraryOptions>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies the flags shared by every subcommand on top of the file.
    fn merge_common(&mut self, command: &str, c: &CommonArgs) -> Result<()> {
        if let Some(cmd) = &self.command {
            if cmd != command {
                return Err(Error::Config(format!("config is for `{cmd}`, not `{command}`")));
            }
        }
        self.command = Some(command.to_string());
        set(&mut self.out, &c.out);
        set(&mut self.seed, &c.seed);
        set(&mut self.dt, &c.dt);
        set(&mut self.t_f, &c.t_f);
        set(&mut self.n_real, &c.n_real);
        for kv in &c.params {
            let (k, v) = parse_param(kv)?;
            self.params.insert(k, v);
        }
        Ok(())
    }

    fn merge_system(&mut self, s: &SystemArgs) {
        if s.system.is_some() {
            self.spec = None;
            set(&mut self.system, &s.system);
        }
        if s.spec.is_some() {
            self.system = None;
            set(&mut self.spec, &s.spec);
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// The system to simulate or to interpret an ensemble with.
    fn system_spec(&self, fallback: Option<&str>) -> Result<SystemSpec> {
        if let Some(path) = &self.spec {
            if !self.params.is_empty() {
                return Err(Error::Config("--param applies to benchmark names, not spec files".into()));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let spec: SystemSpec =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            spec.validate()?;
            return Ok(spec);
        }
        match self.system.as_deref().or(fallback) {
            Some(name) => build_system(name, &self.params),
            None => Err(Error::Config("no system given; use --system NAME or --spec FILE".into())),
        }
    }
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = Some(v.clone());
    }
}

fn parse_param(kv: &str) -> Result<(String, f64)> {
    let (k, v) = kv
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--param expects NAME=VALUE, got `{kv}`")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("--param {k}: `{v}` is not a number")))?;
    Ok((k.trim().to_string(), v))
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

/// Runs a parsed command, returning lines for stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Discover(a) => discover(&a),
        Command::Bench(a) => bench(&a).map(|(text, _)| text),
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<String> {
    let mut cfg = load_config(&a.common.config)?;
    cfg.merge_common("simulate", &a.common)?;
    cfg.merge_system(&a.system);
    set(&mut cfg.csv_realizations, &a.csv_realizations);
    let spec = cfg.system_spec(None)?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let dt = cfg.dt.unwrap_or(spec.defaults.dt);
    let t_f = cfg.t_f.unwrap_or(spec.defaults.t_f);
    let n_real = cfg.n_real.unwrap_or(spec.defaults.n_real);
    let ens = generate_ensemble(&spec, dt, t_f, n_real, seed)?;

    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let name = &spec.name;
    let bin = dir.join(format!("{name}_ensemble.bin"));
    save_ensemble(&ens, &bin)?;
    let sys = dir.join(format!("{name}_system.json"));
    write(&sys, &serde_json::to_string_pretty(&spec)?)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "simulated {name}: {n_real} realizations × {} steps (dt = {dt}, seed = {seed})",
        ens.n_steps
    );
    let _ = writeln!(out, "wrote {}", bin.display());
    let _ = writeln!(out, "wrote {}", sys.display());
    if let Some(n) = cfg.csv_realizations {
        let csv = dir.join(format!("{name}_ensemble.csv"));
        export_csv(&ens, &csv, Some(n))?;
        let _ = writeln!(out, "wrote {}", csv.display());
    }
    Ok(out)
}

pub fn discover(a: &DiscoverArgs) -> Result<String> {
    let mut cfg = load_config(&a.common.config)?;
    cfg.merge_common("discover", &a.common)?;
    cfg.merge_system(&a.system);
    set(&mut cfg.ensemble, &a.ensemble);
    set(&mut cfg.lambda, &a.lambda);
    set(&mut cfg.lambda_diffusion, &a.lambda_diffusion);
    let lambda = cfg.lambda.unwrap_or(DEFAULT_LAMBDA);
    let lambda_d = cfg.lambda_diffusion.unwrap_or(DEFAULT_LAMBDA_DIFFUSION);

    let (spec, ens) = match &cfg.ensemble {
        Some(path) => {
            let ens = load_ensemble(path)?;
            (cfg.system_spec(Some(&ens.system))?, ens)
        }
        None => {
            let spec = cfg.system_spec(None)?;
            let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
            let ens = generate_ensemble(
                &spec,
                cfg.dt.unwrap_or(spec.defaults.dt),
                cfg.t_f.unwrap_or(spec.defaults.t_f),
                cfg.n_real.unwrap_or(spec.defaults.n_real),
                seed,
            )?;
            (spec, ens)
        }
    };
    let lag_opts = cfg
        .lagrangian_library
        .clone()
        .unwrap_or_else(|| LibraryOptions::lagrangian_default(&spec.name));
    let dif_opts = cfg
        .diffusion_library
        .clone()
        .unwrap_or_else(|| LibraryOptions::diffusion_default(&spec.name));
    let lag_lib = build_lagrangian_library(&spec, &lag_opts)?;
    let dif_lib = build_diffusion_library(&spec, &dif_opts)?;
    let found = discover_models(&spec, &ens, &lag_lib, &dif_lib, lambda, lambda_d)?;

    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let name = &spec.name;
    let text = format!(
        "Lagrangian: {}\nDiffusion: {}\nEquations of motion:\n{}\nHamiltonian: {}\n",
        found.lagrangian.expression,
        found.diffusion.expression,
        found.equations.text,
        found.hamiltonian.expression
    );
    let files = [
        ("lagrangian.json", serde_json::to_string_pretty(&found.lagrangian)?),
        ("diffusion.json", serde_json::to_string_pretty(&found.diffusion)?),
        ("eom.json", serde_json::to_string_pretty(&found.equations)?),
        ("hamiltonian.json", serde_json::to_string_pretty(&found.hamiltonian)?),
        ("models.txt", text.clone()),
    ];
    let mut out = text;
    for (suffix, body) in files {
        let p = dir.join(format!("{name}_{suffix}"));
        write(&p, &body)?;
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(out)
}

/// Returns the printed text and the exit code implied by per-benchmark
/// failures (0 when all succeed).
pub fn bench(a: &BenchArgs) -> Result<(String, i32)> {
    let mut cfg = load_config(&a.common.config)?;
    cfg.merge_common("bench", &a.common)?;
    set(&mut cfg.only, &a.only);
    set(&mut cfg.lambda, &a.lambda);
    set(&mut cfg.lambda_diffusion, &a.lambda_diffusion);
    set(&mut cfg.prediction_factor, &a.prediction_factor);
    set(&mut cfg.prediction_n_real, &a.prediction_n_real);
    if cfg.system.is_some() || cfg.spec.is_some() || cfg.ensemble.is_some() {
        return Err(Error::Config("bench selects benchmarks with `only`".into()));
    }
    let names: Vec<String> = match &cfg.only {
        Some(list) => {
            for n in list {
                if !BENCHMARKS.contains(&n.as_str()) {
                    return Err(Error::UnknownSystem {
                        name: n.clone(),
                        valid: BENCHMARKS.join(", "),
                    });
                }
            }
            list.clone()
        }
        None => BENCHMARKS.iter().map(|s| s.to_string()).collect(),
    };
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let dir = cfg.out_dir();
    create_dir(&dir)?;

    let mut out = String::new();
    let origin = if cfg.seed.is_some() { "" } else { " (default)" };
    let _ = writeln!(out, "# seed {seed}{origin}");
    let mut rows = Vec::new();
    let mut code = 0;
    for name in names {
        let mut bc = BenchConfig::new(&name);
        bc.params = cfg.params.clone();
        bc.dt = cfg.dt;
        bc.t_f = cfg.t_f;
        bc.n_real = cfg.n_real;
        bc.seed = seed;
        bc.lambda = cfg.lambda.unwrap_or(DEFAULT_LAMBDA);
        bc.lambda_diffusion = cfg.lambda_diffusion.unwrap_or(DEFAULT_LAMBDA_DIFFUSION);
        bc.prediction_factor = cfg.prediction_factor;
        if let Some(n) = cfg.prediction_n_real {
            bc.prediction_n_real = n;
        }
        bc.lagrangian_library = cfg.lagrangian_library.clone();
        bc.diffusion_library = cfg.diffusion_library.clone();
        match run_benchmark(&bc).and_then(|run| write_outputs(&run, &dir).map(|_| run)) {
            Ok(run) => {
                let r = &run.report;
                let _ = writeln!(
                    out,
                    "{name}: error {:.4}%  {}",
                    r.relative_error_percent,
                    r.discovered.equations.replace('\n', "; ")
                );
                rows.push((name, Ok(run.report)));
            }
            Err(e) => {
                let _ = writeln!(out, "{name}: FAILED ({e})");
                if code == 0 {
                    code = e.exit_code();
                }
                rows.push((name, Err(e.to_string())));
            }
        }
    }
    let summary = dir.join("summary.csv");
    write(&summary, &summary_csv(&rows))?;
    let _ = writeln!(out, "wrote {}", summary.display());
    Ok((out, code))
}
