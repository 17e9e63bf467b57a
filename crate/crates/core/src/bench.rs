//! End-to-end benchmark runs: simulate, discover, derive, evaluate.

use crate::basis::Series;
use crate::discovery::{
    derive_equations_of_motion, discover_diffusion, discover_lagrangian, legendre_transform, relative_error,
    support_labels, true_equations_of_motion, ContinuumParam, DiffusionModel, DiscoveryOptions, EquationsOfMotion,
    HamiltonianModel, LagrangianModel,
};
use crate::error::{Error, Result};
use crate::library::{build_diffusion_library, build_lagrangian_library, LibraryOptions, LibrarySet};
use crate::sim::{
    build_system, generate_ensemble, Ensemble, integrate, simulate_statistics, splitmix64, EnsembleStats, NoiseStream,
    SystemKind, SystemSpec, Trajectory,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_LAMBDA: f64 = 0.1;
/// The true diffusion support is a single dominant term, while noise in the
/// second-moment target is fitted by near-collinear pairs (`u³` against
/// `sin u`) at relative sizes up to ~0.25; 0.5 separates the two.
pub const DEFAULT_LAMBDA_DIFFUSION: f64 = 0.5;
pub const DEFAULT_PREDICTION_REALIZATIONS: usize = 200;

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_lambda_diffusion() -> f64 {
    DEFAULT_LAMBDA_DIFFUSION
}
fn default_prediction_n() -> usize {
    DEFAULT_PREDICTION_REALIZATIONS
}

/// Everything a benchmark run depends on. Unset fields take the system's
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub system: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_f: Option<f64>,
    #[serde(default)]
    pub n_real: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_lambda_diffusion")]
    pub lambda_diffusion: f64,
    /// Prediction window as a fraction of the training window; defaults to
    /// 1 for discrete systems and 0.5 for fields.
    #[serde(default)]
    pub prediction_factor: Option<f64>,
    #[serde(default = "default_prediction_n")]
    pub prediction_n_real: usize,
    #[serde(default)]
    pub lagrangian_library: Option<LibraryOptions>,
    #[serde(default)]
    pub diffusion_library: Option<LibraryOptions>,
}

impl BenchConfig {
    pub fn new(system: &str) -> Self {
        BenchConfig {
            system: system.to_string(),
            params: BTreeMap::new(),
            dt: None,
            t_f: None,
            n_real: None,
            seed: DEFAULT_SEED,
            lambda: DEFAULT_LAMBDA,
            lambda_diffusion: DEFAULT_LAMBDA_DIFFUSION,
            prediction_factor: None,
            prediction_n_real: DEFAULT_PREDICTION_REALIZATIONS,
            lagrangian_library: None,
            diffusion_library: None,
        }
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        build_system(&self.system, &self.params)
    }

    /// `(dt, t_f, n_real)` after applying defaults.
    pub fn resolved(&self, spec: &SystemSpec) -> (f64, f64, usize) {
        (
            self.dt.unwrap_or(spec.defaults.dt),
            self.t_f.unwrap_or(spec.defaults.t_f),
            self.n_real.unwrap_or(spec.defaults.n_real),
        )
    }

    pub fn prediction_factor_for(&self, kind: SystemKind) -> f64 {
        self.prediction_factor.unwrap_or(match kind {
            SystemKind::DiscreteSde => 1.0,
            SystemKind::ContinuousSpde => 0.5,
        })
    }

    fn validate(&self) -> Result<()> {
        for (what, v) in [("lambda", self.lambda), ("lambda_diffusion", self.lambda_diffusion)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{what} must be a finite number ≥ 0")));
            }
        }
        if let Some(f) = self.prediction_factor {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::Config("prediction_factor must be ≥ 0".into()));
            }
        }
        if self.prediction_n_real == 0 {
            return Err(Error::Config("prediction_n_real must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibrarySizes {
    pub lagrangian: usize,
    pub diffusion: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub lagrangian: String,
    pub equations: String,
    pub hamiltonian: String,
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCheck {
    pub exact: bool,
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    pub true_size: usize,
    pub discovered_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCheck {
    /// `100·max|H(t) − H(0)|/|H(0)|` of the true `H` along a noise-free
    /// trajectory of the true system.
    pub truth_drift_percent: f64,
    /// `100·max|H*(t) − H(t)|/max|H(t)|` on the first training realization.
    pub gap_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub n_real: usize,
    pub train_end: f64,
    pub horizon: f64,
    /// `100·RMS(mean* − mean)/RMS(mean)` over the prediction window (the
    /// training window when the prediction window is empty).
    pub rms_error_percent: Option<f64>,
    pub failure: Option<String>,
}

/// Versioned benchmark report. Runtime is deliberately absent so reruns are
/// byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub system: String,
    pub seed: u64,
    pub dt: f64,
    pub t_f: f64,
    pub n_real: usize,
    pub lambda: f64,
    pub lambda_diffusion: f64,
    pub library_sizes: LibrarySizes,
    pub truth: ModelSummary,
    pub discovered: ModelSummary,
    pub diffusion: String,
    /// `100·‖θ − θ*‖/‖θ‖` over the equation-of-motion parameters and gains.
    pub relative_error_percent: f64,
    /// Per equation (discrete systems).
    pub equation_errors_percent: Vec<(String, f64)>,
    /// Relative error of the noise gains alone.
    pub diffusion_error_percent: f64,
    pub continuum: Vec<ContinuumParam>,
    pub support: SupportCheck,
    pub hamiltonian: HamiltonianCheck,
    pub prediction: PredictionSummary,
    pub lagrangian_model: LagrangianModel,
    pub diffusion_model: DiffusionModel,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::to_value(self)?;
        if has_non_finite(&v) {
            return Err(Error::Numerical("report contains a non-finite number".into()));
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

fn has_non_finite(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Number(n) => n.as_f64().is_some_and(|x| !x.is_finite()),
        serde_json::Value::Array(a) => a.iter().any(has_non_finite),
        serde_json::Value::Object(o) => o.values().any(has_non_finite),
        _ => false,
    }
}

/// Mean and ±2σ envelopes of true and discovered ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBundle {
    pub dt: f64,
    pub n_steps: usize,
    pub train_steps: usize,
    pub truth: Option<EnsembleStats>,
    pub predicted: Option<EnsembleStats>,
    pub failure: Option<String>,
}

impl PredictionBundle {
    /// `100·RMS(mean* − mean)/RMS(mean)` over `coords` and steps `from..`.
    pub fn rms_error_percent(&self, coords: &[usize], from: usize) -> Option<f64> {
        let (t, p) = (self.truth.as_ref()?, self.predicted.as_ref()?);
        let (mut num, mut den) = (0.0, 0.0);
        for &c in coords {
            for (a, b) in t.mean_of(c)[from..].iter().zip(&p.mean_of(c)[from..]) {
                num += (a - b) * (a - b);
                den += a * a;
            }
        }
        (den > 0.0).then(|| 100.0 * (num / den).sqrt())
    }
}

/// Runs the true and the discovered system with shared noise over `n_steps`.
/// A failure in either simulation yields a bundle carrying the message.
pub fn prediction_comparison(
    truth: &SystemSpec,
    discovered: &SystemSpec,
    dt: f64,
    n_steps: usize,
    train_steps: usize,
    n_real: usize,
    seed: u64,
) -> PredictionBundle {
    let mut failure = None;
    let t = simulate_statistics(truth, dt, n_steps, n_real, seed)
        .map_err(|e| failure = Some(format!("truth: {e}")))
        .ok();
    let p = simulate_statistics(discovered, dt, n_steps, n_real, seed)
        .map_err(|e| failure = Some(format!("discovered: {e}")))
        .ok();
    PredictionBundle {
        dt,
        n_steps,
        train_steps,
        truth: t,
        predicted: p,
        failure,
    }
}

/// Substeps per sample for the noise-free reference path. At the ensemble
/// step the stiffest grid modes of the fields sit at `dt·ω ≈ 1`, where the
/// integrator's energy error is of order `dt·ω`; a finer step resolves them.
pub const QUIET_SUBSTEPS: usize = 10;

/// Noise-free path of `spec` sampled every `dt`, integrated at
/// `dt / QUIET_SUBSTEPS`.
pub fn quiet_path(spec: &SystemSpec, dt: f64, n_steps: usize) -> Result<Trajectory> {
    let k = QUIET_SUBSTEPS;
    let fine = integrate(&spec.with_noise_scale(0.0), dt / k as f64, (n_steps - 1) * k + 1, &NoiseStream::Seeded(0))?;
    let mut out = Trajectory {
        dim: fine.dim,
        n_steps,
        displacement: vec![0.0; fine.dim * n_steps],
        velocity: vec![0.0; fine.dim * n_steps],
    };
    for c in 0..fine.dim {
        for t in 0..n_steps {
            out.displacement[c * n_steps + t] = fine.displacement[c * fine.n_steps + t * k];
            out.velocity[c * n_steps + t] = fine.velocity[c * fine.n_steps + t * k];
        }
    }
    Ok(out)
}

/// `H` (with `H(0, 0) = 0`) along a realization.
pub fn hamiltonian_trajectory<S: Series + ?Sized>(model: &HamiltonianModel, s: &S) -> Vec<f64> {
    let mut out = vec![-model.offset; s.len()];
    for (c, f) in &model.terms {
        f.accumulate(*c, s, &mut out);
    }
    out
}

/// Report plus the series behind it.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BenchmarkReport,
    pub prediction: PredictionBundle,
    /// `t`, true `H` on a noise-free path, true and discovered `H` on the
    /// first training realization.
    pub hamiltonian: Vec<[f64; 4]>,
    /// Coordinates written to prediction CSVs.
    pub probes: Vec<usize>,
    pub runtime_s: f64,
}

fn probes(spec: &SystemSpec) -> Vec<usize> {
    let free = spec.free_coords();
    match spec.kind {
        SystemKind::DiscreteSde => free,
        SystemKind::ContinuousSpde => {
            let n = free.len();
            let mut p: Vec<usize> = [n / 4, n / 2, 3 * n / 4, n - 1].iter().map(|&k| free[k]).collect();
            p.dedup();
            p
        }
    }
}

fn support_check(truth: &[String], found: &[String]) -> SupportCheck {
    let t: BTreeSet<&String> = truth.iter().collect();
    let d: BTreeSet<&String> = found.iter().collect();
    let missing: Vec<String> = t.difference(&d).map(|s| s.to_string()).collect();
    let extra: Vec<String> = d.difference(&t).map(|s| s.to_string()).collect();
    SupportCheck {
        exact: missing.is_empty() && extra.is_empty(),
        missing,
        extra,
        true_size: t.len(),
        discovered_size: d.len(),
    }
}

fn max_abs(x: impl Iterator<Item = f64>) -> f64 {
    x.map(f64::abs).fold(0.0, f64::max)
}

/// Everything discovered from one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discovered {
    pub lagrangian: LagrangianModel,
    pub diffusion: DiffusionModel,
    /// Noise gain per coordinate (0 where none was identified).
    pub gains: Vec<f64>,
    pub equations: EquationsOfMotion,
    pub hamiltonian: HamiltonianModel,
}

/// Lagrangian, diffusion, equations of motion and Hamiltonian from an
/// ensemble of `spec`.
pub fn discover_models(
    spec: &SystemSpec,
    ens: &Ensemble,
    lag_lib: &LibrarySet,
    dif_lib: &LibrarySet,
    lambda: f64,
    lambda_diffusion: f64,
) -> Result<Discovered> {
    if ens.coords != spec.dim {
        return Err(Error::Schema(format!(
            "ensemble has {} coordinates but {} expects {}",
            ens.coords, spec.name, spec.dim
        )));
    }
    let lag = discover_lagrangian(ens, lag_lib, &DiscoveryOptions::for_kind(spec.kind, lambda))?;
    let dif = discover_diffusion(ens, &lag, dif_lib, lambda_diffusion)?;
    let gains = dif.gains(spec.dim);
    let equations = derive_equations_of_motion(&lag.lagrangian, &spec.free_coords(), &gains)?;
    let hamiltonian = legendre_transform(&lag.lagrangian)?;
    Ok(Discovered {
        lagrangian: lag,
        diffusion: dif,
        gains,
        equations,
        hamiltonian,
    })
}

/// Full pipeline for one benchmark.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchRun> {
    let start = Instant::now();
    cfg.validate()?;
    let spec = cfg.system_spec()?;
    let (dt, t_f, n_real) = cfg.resolved(&spec);
    let free = spec.free_coords();

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

    let ens = generate_ensemble(&spec, dt, t_f, n_real, cfg.seed)?;
    let Discovered {
        lagrangian: lag,
        diffusion: dif,
        gains,
        equations: eom,
        hamiltonian: h,
    } = discover_models(&spec, &ens, &lag_lib, &dif_lib, cfg.lambda, cfg.lambda_diffusion)?;

    let true_eom = true_equations_of_motion(&spec)?;
    let true_h = legendre_transform(&spec.lagrangian)?;

    let relative = relative_error(&true_eom.params(), &eom.params())?;
    let equation_errors = if spec.kind == SystemKind::DiscreteSde {
        true_eom
            .equations
            .iter()
            .zip(&eom.equations)
            .map(|(t, d)| Ok((t.name.clone(), relative_error(&t.params, &d.params)?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![]
    };
    let gain_pairs = |g: &[f64]| -> Vec<(String, f64)> { free.iter().map(|&c| (c.to_string(), g[c])).collect() };
    let diffusion_error = relative_error(&gain_pairs(&spec.noise), &gain_pairs(&gains))?;
    let support = support_check(&support_labels(&spec.lagrangian), &lag.support());

    // Energy: noise-free true path, then both Hamiltonians on realization 0.
    let n_train = ens.n_steps;
    let quiet = quiet_path(&spec, dt, n_train)?;
    let h_quiet = hamiltonian_trajectory(&true_h, &quiet);
    let h0 = h_quiet[0];
    let drift = if h0 != 0.0 {
        100.0 * max_abs(h_quiet.iter().map(|x| x - h0)) / h0.abs()
    } else {
        0.0
    };
    let sample = ens.realization(0);
    let h_true_sample = hamiltonian_trajectory(&true_h, &sample);
    let h_found_sample = hamiltonian_trajectory(&h, &sample);
    let scale = max_abs(h_true_sample.iter().cloned());
    let gap = if scale > 0.0 {
        100.0 * max_abs(h_true_sample.iter().zip(&h_found_sample).map(|(a, b)| a - b)) / scale
    } else {
        0.0
    };
    let hamiltonian: Vec<[f64; 4]> = (0..n_train)
        .map(|t| [t as f64 * dt, h_quiet[t], h_true_sample[t], h_found_sample[t]])
        .collect();

    // Prediction with shared noise, from the same initial state.
    let factor = cfg.prediction_factor_for(spec.kind);
    let pred_steps = n_train + (factor * (n_train - 1) as f64).round() as usize;
    let pred_seed = splitmix64(cfg.seed ^ 0x7072_6564_6963_7421);
    let found_spec = spec.with_dynamics(lag.lagrangian.clone(), gains.clone());
    let bundle = prediction_comparison(&spec, &found_spec, dt, pred_steps, n_train, cfg.prediction_n_real, pred_seed);
    let from = if pred_steps > n_train { n_train } else { 0 };
    let prediction = PredictionSummary {
        n_real: cfg.prediction_n_real,
        train_end: (n_train - 1) as f64 * dt,
        horizon: (pred_steps - 1) as f64 * dt,
        rms_error_percent: bundle.rms_error_percent(&free, from),
        failure: bundle.failure.clone(),
    };

    let report = BenchmarkReport {
        schema_version: REPORT_VERSION,
        system: spec.name.clone(),
        seed: cfg.seed,
        dt,
        t_f,
        n_real,
        lambda: cfg.lambda,
        lambda_diffusion: cfg.lambda_diffusion,
        library_sizes: LibrarySizes {
            lagrangian: lag_lib.len(),
            diffusion: dif_lib.len(),
        },
        truth: ModelSummary {
            lagrangian: spec.lagrangian.expression(),
            equations: true_eom.text.clone(),
            hamiltonian: true_h.expression.clone(),
            params: true_eom.params(),
        },
        discovered: ModelSummary {
            lagrangian: lag.expression.clone(),
            equations: eom.text.clone(),
            hamiltonian: h.expression.clone(),
            params: eom.params(),
        },
        diffusion: dif.expression.clone(),
        relative_error_percent: relative,
        equation_errors_percent: equation_errors,
        diffusion_error_percent: diffusion_error,
        continuum: eom.continuum.clone(),
        support,
        hamiltonian: HamiltonianCheck {
            truth_drift_percent: drift,
            gap_percent: gap,
        },
        prediction,
        lagrangian_model: lag,
        diffusion_model: dif,
    };
    Ok(BenchRun {
        report,
        prediction: bundle,
        hamiltonian,
        probes: probes(&spec),
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes `<system>_report.json`, one prediction CSV per probe coordinate and
/// `<system>_hamiltonian.csv`. Returns the paths written.
pub fn write_outputs(run: &BenchRun, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = &run.report.system;
    let mut written = Vec::new();
    let p = dir.join(format!("{name}_report.json"));
    write_file(&p, &run.report.to_json()?)?;
    written.push(p);

    let b = &run.prediction;
    if let (Some(t), Some(pr)) = (&b.truth, &b.predicted) {
        let naming = &run.report.lagrangian_model.lagrangian.naming;
        for &c in &run.probes {
            let mut s = String::from("t,truth_mean,pred_mean,truth_2sigma,pred_2sigma,abs_error\n");
            let (tm, pm, tv, pv) = (t.mean_of(c), pr.mean_of(c), t.var_of(c), pr.var_of(c));
            for k in 0..b.n_steps {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    k as f64 * b.dt,
                    tm[k],
                    pm[k],
                    2.0 * tv[k].sqrt(),
                    2.0 * pv[k].sqrt(),
                    (tm[k] - pm[k]).abs()
                );
            }
            let label: String = naming
                .pos(c)
                .chars()
                .map(|ch| if ch.is_alphanumeric() { ch } else { '_' })
                .collect();
            let p = dir.join(format!("{name}_prediction_{}.csv", label.trim_end_matches('_')));
            write_file(&p, &s)?;
            written.push(p);
        }
    }

    let mut s = String::from("t,truth_noise_free,truth,discovered\n");
    for r in &run.hamiltonian {
        let _ = writeln!(s, "{},{},{},{}", r[0], r[1], r[2], r[3]);
    }
    let p = dir.join(format!("{name}_hamiltonian.csv"));
    write_file(&p, &s)?;
    written.push(p);
    Ok(written)
}

/// One row per benchmark: `system,discovered_equations,relative_error_percent,…`.
/// Failed runs carry their error message.
pub fn summary_csv(rows: &[(String, std::result::Result<BenchmarkReport, String>)]) -> String {
    let mut s = String::from(
        "system,discovered_equations,relative_error_percent,diffusion_error_percent,exact_support,prediction_rms_percent,status\n",
    );
    let quote = |x: &str| format!("\"{}\"", x.replace('"', "\"\"").replace('\n', "; "));
    for (name, r) in rows {
        match r {
            Ok(rep) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},ok",
                    name,
                    quote(&rep.discovered.equations),
                    rep.relative_error_percent,
                    rep.diffusion_error_percent,
                    rep.support.exact,
                    rep.prediction.rms_error_percent.map(|v| v.to_string()).unwrap_or_default()
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{name},,,,,,{}", quote(&format!("error: {e}")));
            }
        }
    }
    s
}
