use stochlag::basis::Form;
use stochlag::bench::{discover_models, run_benchmark, BenchConfig, BenchmarkReport};
use stochlag::discovery::{discover_diffusion, discover_lagrangian, relative_error, DiscoveryOptions};
use stochlag::library::{build_diffusion_library, build_lagrangian_library, el_transform, split_kinetic, LibraryOptions};
use stochlag::numdiff::TimeDerivative;
use stochlag::regression::{least_squares, Matrix};
use stochlag::sim::{benchmark_spec, generate_ensemble};

fn quick(name: &str) -> BenchConfig {
    let mut cfg = BenchConfig::new(name);
    cfg.prediction_n_real = 10;
    cfg
}

fn params(v: &serde_json::Value) -> Vec<(String, f64)> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_str().unwrap().to_string(), p[1].as_f64().unwrap()))
        .collect()
}

#[test]
fn reported_error_matches_serialized_coefficients() {
    for name in ["harmonic", "3dof"] {
        let run = run_benchmark(&quick(name)).unwrap();
        let json = run.report.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let again = relative_error(&params(&v["truth"]["params"]), &params(&v["discovered"]["params"])).unwrap();
        let reported = v["relative_error_percent"].as_f64().unwrap();
        assert!((again - reported).abs() <= 1e-12 * reported.abs(), "{name}: {again} vs {reported}");
        let back: BenchmarkReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json);
    }
}

#[test]
fn report_bytes_repeat() {
    let a = run_benchmark(&quick("duffing")).unwrap().report.to_json().unwrap();
    let b = run_benchmark(&quick("duffing")).unwrap().report.to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn rediscovery_from_discovered_dynamics_is_consistent() {
    let cfg = quick("harmonic");
    let spec = cfg.system_spec().unwrap();
    let first = run_benchmark(&cfg).unwrap().report;
    let e1 = first.relative_error_percent;

    let found = spec.with_dynamics(first.lagrangian_model.lagrangian.clone(), first.diffusion_model.gains(spec.dim));
    let ens = generate_ensemble(&found, spec.defaults.dt, spec.defaults.t_f, spec.defaults.n_real, 77).unwrap();
    let lag = build_lagrangian_library(&spec, &LibraryOptions::lagrangian_default("harmonic")).unwrap();
    let dif = build_diffusion_library(&spec, &LibraryOptions::diffusion_default("harmonic")).unwrap();
    let second = discover_models(&spec, &ens, &lag, &dif, cfg.lambda, cfg.lambda_diffusion).unwrap();
    let shift = relative_error(&first.discovered.params, &second.equations.params()).unwrap();
    assert!(shift <= 2.0 * e1, "second discovery moved {shift}% (first error {e1}%)");
}

#[test]
fn harmonic_and_pendulum_coefficients() {
    let h = run_benchmark(&quick("harmonic")).unwrap().report;
    let c = h.lagrangian_model.lagrangian.potential_terms()[0].0;
    assert!((c + 500.06).abs() / 500.06 < 0.01, "{c}");
    let p = run_benchmark(&quick("pendulum")).unwrap().report;
    let c = p.lagrangian_model.lagrangian.potential_terms()[0].0;
    assert!((c.abs() - 9.80).abs() / 9.80 < 0.01, "{c}");
}

#[test]
fn noiseless_harmonic_matches_least_squares_on_true_columns() {
    let spec = benchmark_spec("harmonic").unwrap().with_noise_scale(0.0);
    let ens = generate_ensemble(&spec, spec.defaults.dt, spec.defaults.t_f, 4, 1).unwrap();
    let lib = build_lagrangian_library(&spec, &LibraryOptions::lagrangian_default("harmonic")).unwrap();
    let model = discover_lagrangian(&ens, &lib, &DiscoveryOptions::for_kind(spec.kind, 0.1)).unwrap();
    let found = model.lagrangian.potential_terms();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].1, Form::Monomial { coord: 0, degree: 2 });

    // Oracle: regress the kinetic column on the X² column alone.
    let cand = lib.for_particle(0).unwrap();
    let fm = el_transform(&cand, &ens, TimeDerivative::Central).unwrap();
    let split = split_kinetic(&fm, &cand).unwrap();
    let j = split.feature_labels.iter().position(|l| l == "X^2").unwrap();
    let a = Matrix::from_columns(&[split.features.col(j).to_vec()]).unwrap();
    let rhs: Vec<f64> = split.label.iter().map(|v| -v).collect();
    let oracle = least_squares(&a, &rhs).unwrap()[0];
    assert!((found[0].0 - oracle).abs() <= 1e-3 * oracle.abs(), "{} vs {oracle}", found[0].0);
    assert!((found[0].0 + 500.0).abs() <= 1e-3 * 500.0, "{}", found[0].0);
}

#[test]
fn zero_noise_gives_negligible_diffusion() {
    let spec = benchmark_spec("harmonic").unwrap().with_noise_scale(0.0);
    let ens = generate_ensemble(&spec, spec.defaults.dt, spec.defaults.t_f, 4, 1).unwrap();
    let lag_lib = build_lagrangian_library(&spec, &LibraryOptions::lagrangian_default("harmonic")).unwrap();
    let dif_lib = build_diffusion_library(&spec, &LibraryOptions::diffusion_default("harmonic")).unwrap();
    let lag = discover_lagrangian(&ens, &lag_lib, &DiscoveryOptions::for_kind(spec.kind, 0.1)).unwrap();
    let dif = discover_diffusion(&ens, &lag, &dif_lib, 0.5).unwrap();
    let p = &dif.particles[0];
    // Only the deterministic discretization residual remains.
    assert!(p.target_mean.sqrt() < 0.01, "{p:?}");
    assert!(p.gain.is_none_or(|g| g < 0.05), "{p:?}");
}
