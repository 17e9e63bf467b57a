use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use stochlag::basis::{eval_sum, Var};
use stochlag::discovery::{derive_equations_of_motion, inverse_legendre, legendre_transform, true_equations_of_motion};
use stochlag::library::{
    build_diffusion_library, build_lagrangian_library, diffusion_features, el_transform, LibraryOptions,
};
use stochlag::numdiff::{
    central_first_derivative, central_second_derivative, field_spatial_derivatives, forward_first_derivative,
    lagrange_three_point, TimeDerivative,
};
use stochlag::regression::{least_squares, stls, Matrix, StlsOptions};
use stochlag::sim::{benchmark_spec, generate_ensemble, BENCHMARKS};

fn matrix(seed: u64, m: usize, p: usize) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let s = 10f64.powf(rng.random_range(-1.5..1.5));
            (0..m).map(|_| s * rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    // Sparse truth plus noise, so thresholds have something to prune.
    let mut b = vec![0.0; m];
    for (j, col) in cols.iter().enumerate() {
        if j % 3 == 0 {
            let w = rng.random_range(0.5..2.0) / (col.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt();
            b.iter_mut().zip(col).for_each(|(bi, c)| *bi += w * c);
        }
    }
    b.iter_mut().for_each(|bi| *bi += 0.05 * rng.random_range(-1.0..1.0));
    (Matrix::from_columns(&cols).unwrap(), b)
}

fn opts(lambda: f64) -> StlsOptions {
    StlsOptions {
        lambda,
        max_iter: 20,
        standardize: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stls_support_never_grows(seed in any::<u64>(), p in 2usize..15, extra in 5usize..100, lambda in 0.0f64..1.5) {
        let (a, b) = matrix(seed, p + extra, p);
        let fit = stls(&a, &b, &opts(lambda)).unwrap();
        for w in fit.support_history.windows(2) {
            let before: BTreeSet<_> = w[0].iter().collect();
            prop_assert!(w[1].iter().all(|j| before.contains(j)));
        }
    }

    #[test]
    fn stls_is_idempotent(seed in any::<u64>(), p in 2usize..15, extra in 5usize..100, lambda in 0.0f64..1.5) {
        let (a, b) = matrix(seed, p + extra, p);
        let fit = stls(&a, &b, &opts(lambda)).unwrap();
        prop_assume!(!fit.empty && fit.converged);
        let sub = a.select_columns(&fit.active_set);
        let again = stls(&sub, &b, &opts(lambda)).unwrap();
        prop_assert_eq!(again.active_set, (0..fit.active_set.len()).collect::<Vec<_>>());
        for (k, &j) in fit.active_set.iter().enumerate() {
            let (x, y) = (again.coefficients[k], fit.coefficients[j]);
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn stls_without_threshold_is_least_squares(seed in any::<u64>(), p in 1usize..20, extra in 20usize..480) {
        let (a, b) = matrix(seed, p + extra, p);
        let ls = least_squares(&a, &b).unwrap();
        let fit = stls(&a, &b, &opts(0.0)).unwrap();
        let num: f64 = ls.iter().zip(&fit.coefficients).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = ls.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(num <= 1e-10 * den);
    }

    #[test]
    fn stls_scales_with_the_target(seed in any::<u64>(), p in 2usize..12, lambda in 0.01f64..1.0, alpha in prop_oneof![0.01f64..0.5, 2.0f64..100.0]) {
        let (a, b) = matrix(seed, p + 40, p);
        let fit = stls(&a, &b, &opts(lambda)).unwrap();
        let scaled: Vec<f64> = b.iter().map(|v| alpha * v).collect();
        let fit2 = stls(&a, &scaled, &opts(alpha * lambda)).unwrap();
        prop_assert_eq!(&fit2.active_set, &fit.active_set);
        for (x, y) in fit2.coefficients.iter().zip(&fit.coefficients) {
            prop_assert!((x - alpha * y).abs() <= 1e-9 * (alpha * y).abs().max(1e-12));
        }
    }

    #[test]
    fn derivatives_are_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0, n in 6usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 0.01;
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| alpha * x + beta * y).collect();
        type Op = fn(&[f64], f64) -> Vec<f64>;
        let ops: [(&str, Op); 7] = [
            ("central first", |s, h| central_first_derivative(s, h).unwrap()),
            ("central second", |s, h| central_second_derivative(s, h).unwrap()),
            ("forward first", |s, h| forward_first_derivative(s, h).unwrap()),
            ("spatial 1", |s, h| field_spatial_derivatives(s, s.len(), 1, h, 1).unwrap()[0].clone()),
            ("spatial 2", |s, h| field_spatial_derivatives(s, s.len(), 1, h, 2).unwrap()[1].clone()),
            ("spatial 3", |s, h| field_spatial_derivatives(s, s.len(), 1, h, 3).unwrap()[2].clone()),
            ("spatial 4", |s, h| field_spatial_derivatives(s, s.len(), 1, h, 4).unwrap()[3].clone()),
        ];
        for (name, op) in ops {
            let (df, dg, dm) = (op(&f, h), op(&g, h), op(&mix, h));
            let scale = df.iter().chain(&dg).map(|v| v.abs()).fold(1.0, f64::max) * (alpha.abs() + beta.abs() + 1.0);
            for k in 0..n {
                prop_assert!((dm[k] - alpha * df[k] - beta * dg[k]).abs() <= 1e-13 * scale, "{name}");
            }
        }
    }

    #[test]
    fn three_point_stencil_reduces_to_uniform(w0 in -5.0f64..5.0, w1 in -5.0f64..5.0, w2 in -5.0f64..5.0, h in 1e-3f64..1.0) {
        let tol = |x: f64| 1e-12 * (1.0 + x.abs());
        let left = lagrange_three_point(w0, w1, w2, h, h, -1.0).unwrap();
        let mid = lagrange_three_point(w0, w1, w2, h, h, 0.0).unwrap();
        let right = lagrange_three_point(w0, w1, w2, h, h, 1.0).unwrap();
        let s = [w0, w1, w2];
        let central = central_first_derivative(&s, h).unwrap();
        let second = (w0 - 2.0 * w1 + w2) / (h * h);
        prop_assert!((left.first_derivative - central[0]).abs() <= tol(central[0]));
        prop_assert!((mid.first_derivative - central[1]).abs() <= tol(central[1]));
        prop_assert!((right.first_derivative - central[2]).abs() <= tol(central[2]));
        prop_assert!((mid.second_derivative - second).abs() <= tol(second));
    }
}

/// Every basis of every default library: analytic partials against central
/// differences at 100 random states.
#[test]
fn analytic_partials_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for name in BENCHMARKS {
        let spec = benchmark_spec(name).unwrap();
        let libs = [
            build_lagrangian_library(&spec, &LibraryOptions::lagrangian_default(name)).unwrap(),
            build_diffusion_library(&spec, &LibraryOptions::diffusion_default(name)).unwrap(),
        ];
        let dim = spec.dim;
        let scale = if spec.spatial.is_some() { 0.01 } else { 1.0 };
        for lib in &libs {
            let states = if dim > 10 { 10 } else { 100 };
            for _ in 0..states {
                let u: Vec<f64> = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                for b in &lib.bases {
                    for (var, c) in b.form.dependencies() {
                        let analytic = eval_sum(&b.form.partial(var, c), &u, &v);
                        let x = if var == Var::Pos { u[c] } else { v[c] };
                        let h = 1e-6 * x.abs().max(scale);
                        let at = |d: f64| {
                            let (mut uu, mut vv) = (u.clone(), v.clone());
                            match var {
                                Var::Pos => uu[c] += d,
                                Var::Vel => vv[c] += d,
                            }
                            b.form.eval_state(&uu, &vv)
                        };
                        let fd = (at(h) - at(-h)) / (2.0 * h);
                        let size = analytic.abs().max(b.form.eval_state(&u, &v).abs() / x.abs().max(scale));
                        assert!(
                            (analytic - fd).abs() <= 1e-6 * size.max(1e-12),
                            "{name} {}: ∂/∂{var:?}{c} analytic {analytic} vs fd {fd}",
                            b.label
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn el_features_average_over_realizations() {
    for name in ["harmonic", "3dof", "wave"] {
        let spec = benchmark_spec(name).unwrap();
        let ens = generate_ensemble(&spec, spec.defaults.dt, 60.0 * spec.defaults.dt, 4, 9).unwrap();
        let lag = build_lagrangian_library(&spec, &LibraryOptions::lagrangian_default(name)).unwrap();
        let dif = build_diffusion_library(&spec, &LibraryOptions::diffusion_default(name)).unwrap();
        let coord = spec.free_coords()[spec.free_coords().len() / 2];
        let (lc, dc) = (lag.for_particle(coord).unwrap(), dif.for_particle(coord).unwrap());
        let full = el_transform(&lc, &ens, TimeDerivative::Central).unwrap();
        let fullg = diffusion_features(&dc, &ens).unwrap();
        let parts: Vec<_> = (0..4)
            .map(|r| {
                let one = ens.subset(&[r]).unwrap();
                (
                    el_transform(&lc, &one, TimeDerivative::Central).unwrap(),
                    diffusion_features(&dc, &one).unwrap(),
                )
            })
            .collect();
        for j in 0..full.values.cols() {
            for t in 0..ens.n_steps {
                let mean: f64 = parts.iter().map(|(p, _)| p.values.col(j)[t]).sum::<f64>() / 4.0;
                let x = full.values.col(j)[t];
                assert!((x - mean).abs() <= 1e-12 * x.abs().max(mean.abs()).max(1e-300), "{name} {}", full.labels[j]);
            }
        }
        for j in 0..fullg.values.cols() {
            for t in 0..ens.n_steps {
                let mean: f64 = parts.iter().map(|(_, g)| g.values.col(j)[t]).sum::<f64>() / 4.0;
                let x = fullg.values.col(j)[t];
                assert!((x - mean).abs() <= 1e-12 * x.abs().max(mean.abs()).max(1e-300));
            }
        }
    }
}

#[test]
fn every_column_has_one_label() {
    for name in BENCHMARKS {
        let spec = benchmark_spec(name).unwrap();
        let ens = generate_ensemble(&spec, spec.defaults.dt, 10.0 * spec.defaults.dt, 2, 1).unwrap();
        for lib in [
            build_lagrangian_library(&spec, &LibraryOptions::lagrangian_default(name)).unwrap(),
            build_diffusion_library(&spec, &LibraryOptions::diffusion_default(name)).unwrap(),
        ] {
            let labels: BTreeSet<&String> = lib.bases.iter().map(|b| &b.label).collect();
            assert_eq!(labels.len(), lib.bases.len(), "{name}: duplicate library labels");
            let coord = spec.free_coords()[0];
            let cand = lib.for_particle(coord).unwrap();
            let m = if cand.kinetic_index.is_some() {
                el_transform(&cand, &ens, TimeDerivative::Central).unwrap()
            } else {
                diffusion_features(&cand, &ens).unwrap()
            };
            assert_eq!(m.labels.len(), m.values.cols());
            let expected: Vec<&String> = cand.bases.iter().map(|b| &b.label).collect();
            assert_eq!(m.labels.iter().collect::<Vec<_>>(), expected);
            assert_eq!(m.labels.iter().collect::<BTreeSet<_>>().len(), m.labels.len());
        }
    }
}

#[test]
fn legendre_transform_is_an_involution() {
    for name in BENCHMARKS {
        let l = benchmark_spec(name).unwrap().lagrangian;
        let back = inverse_legendre(&legendre_transform(&l).unwrap()).unwrap();
        assert_eq!(back, l, "{name}");
    }
}

#[test]
fn euler_lagrange_of_true_lagrangians_gives_true_equations() {
    for name in BENCHMARKS {
        let spec = benchmark_spec(name).unwrap();
        let eom = derive_equations_of_motion(&spec.lagrangian, &spec.free_coords(), &spec.noise).unwrap();
        assert_eq!(eom, true_equations_of_motion(&spec).unwrap(), "{name}");
    }
}
