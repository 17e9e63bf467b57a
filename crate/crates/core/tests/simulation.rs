use proptest::prelude::*;
use stochlag::sim::{
    benchmark_spec, generate_ensemble, integrate, realization_seed, wiener_increments, NoiseStream, SystemKind,
    SystemSpec, BENCHMARKS,
};

/// Classical RK4 on `ü = a(u)` with the system's constraints applied at
/// every stage.
fn rk4(spec: &SystemSpec, dt: f64, n: usize) -> Vec<f64> {
    let free = spec.free_coords();
    let drift = spec.lagrangian.drift(&free, spec.dim, false).unwrap();
    let d = spec.dim;
    let rhs = |u: &[f64], v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let (mut u, mut v) = (u.to_vec(), v.to_vec());
        spec.enforce(&mut u, &mut v);
        let mut a = vec![0.0; d];
        drift.accel(&u, &mut a);
        for c in 0..d {
            if !free.contains(&c) {
                a[c] = 0.0;
            }
        }
        (v, a)
    };
    let mut u = spec.initial_displacement.clone();
    let mut v = spec.initial_velocity.clone();
    spec.enforce(&mut u, &mut v);
    let axpy = |x: &[f64], y: &[f64], s: f64| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + s * b).collect() };
    for _ in 0..n {
        let (k1u, k1v) = rhs(&u, &v);
        let (k2u, k2v) = rhs(&axpy(&u, &k1u, 0.5 * dt), &axpy(&v, &k1v, 0.5 * dt));
        let (k3u, k3v) = rhs(&axpy(&u, &k2u, 0.5 * dt), &axpy(&v, &k2v, 0.5 * dt));
        let (k4u, k4v) = rhs(&axpy(&u, &k3u, dt), &axpy(&v, &k3v, dt));
        for c in 0..d {
            u[c] += dt / 6.0 * (k1u[c] + 2.0 * k2u[c] + 2.0 * k3u[c] + k4u[c]);
            v[c] += dt / 6.0 * (k1v[c] + 2.0 * k2v[c] + 2.0 * k3v[c] + k4v[c]);
        }
        spec.enforce(&mut u, &mut v);
    }
    u
}

fn final_displacement(spec: &SystemSpec, dt: f64, n: usize) -> Vec<f64> {
    let tr = integrate(spec, dt, n + 1, &NoiseStream::Seeded(0)).unwrap();
    (0..spec.dim).map(|c| tr.pos(c)[n]).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

fn order(h: &[f64], e: &[f64]) -> f64 {
    (e[0] / e[e.len() - 1]).ln() / (h[0] / h[h.len() - 1]).ln()
}

/// Errors of the noise-free integrator at `t_end` for a halving sequence of
/// steps starting at `dt0`, against a fine RK4 reference.
fn zero_noise_errors(name: &str, dt0: f64, t_end: f64, ref_dt: f64) -> (Vec<f64>, Vec<f64>) {
    let spec = benchmark_spec(name).unwrap().with_noise_scale(0.0);
    let exact = rk4(&spec, ref_dt, (t_end / ref_dt).round() as usize);
    let steps: Vec<f64> = (0..4).map(|k| dt0 / 2f64.powi(k)).collect();
    let errs = steps
        .iter()
        .map(|&dt| rel_err(&final_displacement(&spec, dt, (t_end / dt).round() as usize), &exact))
        .collect();
    (steps, errs)
}

#[test]
fn zero_noise_discrete_systems_match_rk4() {
    for (name, dt0, t_end) in [("harmonic", 2e-3, 0.5), ("pendulum", 2e-2, 2.0), ("duffing", 2e-3, 0.5), ("3dof", 2e-3, 0.5)] {
        let (steps, errs) = zero_noise_errors(name, dt0, t_end, dt0 / 64.0);
        let p = order(&steps, &errs);
        assert!(p >= 1.5 - 0.15, "{name}: order {p}, errors {errs:?}");
        // Every halving shrinks the error at least like dt^1.5.
        assert!(errs.windows(2).all(|w| w[0] / w[1] >= 2f64.powf(1.5 - 0.15)), "{name}: {errs:?}");
    }
}

/// The field integrator's noise-free limit is semi-implicit (symplectic)
/// Euler: the start-up kick leaves a global first-order error, so it matches
/// RK4 at order one, not 1.5.
#[test]
fn zero_noise_fields_converge_at_first_order() {
    for (name, dt0, t_end, ref_dt) in [("wave", 1e-3, 0.1, 2.5e-5), ("beam", 1e-4, 0.05, 5e-6)] {
        let (steps, errs) = zero_noise_errors(name, dt0, t_end, ref_dt);
        let p = order(&steps, &errs);
        assert!((p - 1.0).abs() <= 0.15, "{name}: order {p}, errors {errs:?}");
    }
}

#[test]
fn wiener_streams_are_uncorrelated_across_realizations() {
    let n = 4000;
    let steps = 8;
    let streams: Vec<Vec<f64>> = (0..n)
        .map(|r| wiener_increments(steps, 1e-3, realization_seed(2024, r)).unwrap())
        .collect();
    let corr = |x: &[f64], y: &[f64]| {
        let m = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    };
    let bound = 4.0 / ((n - 1) as f64).sqrt();
    for k in 0..steps {
        // Neighbouring realizations at the same step.
        let a: Vec<f64> = (0..n - 1).map(|r| streams[r][k]).collect();
        let b: Vec<f64> = (1..n).map(|r| streams[r][k]).collect();
        let r = corr(&a, &b);
        assert!(r.abs() < bound, "step {k}: r = {r}");
    }
}

#[test]
fn benchmark_kinds() {
    for name in BENCHMARKS {
        let s = benchmark_spec(name).unwrap();
        let field = matches!(name, "wave" | "beam");
        assert_eq!(s.kind == SystemKind::ContinuousSpde, field, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ensembles_are_bit_reproducible(seed in any::<u64>(), which in 0usize..6) {
        let name = BENCHMARKS[which];
        let spec = benchmark_spec(name).unwrap();
        let dt = spec.defaults.dt;
        let a = generate_ensemble(&spec, dt, 40.0 * dt, 3, seed).unwrap();
        let b = generate_ensemble(&spec, dt, 40.0 * dt, 3, seed).unwrap();
        prop_assert!(a == b);
        let c = generate_ensemble(&spec, dt, 40.0 * dt, 3, seed.wrapping_add(1)).unwrap();
        prop_assert!(a != c);
    }
}
