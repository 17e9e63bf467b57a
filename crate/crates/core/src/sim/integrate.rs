use super::noise::{realization_seed, Draw, NoiseStream};
use super::{Ensemble, SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::model::CompiledDrift;

/// One realization: `dim × n_steps`, coordinate-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub n_steps: usize,
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl Trajectory {
    pub fn pos(&self, c: usize) -> &[f64] {
        &self.displacement[c * self.n_steps..(c + 1) * self.n_steps]
    }
    pub fn vel(&self, c: usize) -> &[f64] {
        &self.velocity[c * self.n_steps..(c + 1) * self.n_steps]
    }
    /// State vectors at step `t`.
    pub fn state(&self, t: usize) -> (Vec<f64>, Vec<f64>) {
        (
            (0..self.dim).map(|c| self.displacement[c * self.n_steps + t]).collect(),
            (0..self.dim).map(|c| self.velocity[c * self.n_steps + t]).collect(),
        )
    }
}

impl crate::basis::Series for Trajectory {
    fn pos(&self, c: usize) -> &[f64] {
        Trajectory::pos(self, c)
    }
    fn vel(&self, c: usize) -> &[f64] {
        Trajectory::vel(self, c)
    }
    fn len(&self) -> usize {
        self.n_steps
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Taylor15,
    SemiImplicitEm,
}

fn check_step(dt: f64, n_steps: usize) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if n_steps < 1 {
        return Err(Error::InvalidArgument("n_steps must be ≥ 1".into()));
    }
    Ok(())
}

/// Steps one realization, handing every state (including the initial one)
/// to `sink(step, u, v)`.
fn run(
    spec: &SystemSpec,
    drift: &CompiledDrift,
    scheme: Scheme,
    dt: f64,
    n_steps: usize,
    noise: &NoiseStream,
    realization: usize,
    sink: &mut dyn FnMut(usize, &[f64], &[f64]),
) -> Result<()> {
    let n = spec.dim;
    let mut u = spec.initial_displacement.clone();
    let mut v = spec.initial_velocity.clone();
    spec.enforce(&mut u, &mut v);
    sink(0, &u, &v);
    let need_dz = scheme == Scheme::Taylor15;
    let mut draw = Draw::new(noise, n, n_steps, need_dz)?;
    let mut dw = vec![0.0; n];
    let mut dz = vec![0.0; if need_dz { n } else { 0 }];
    let mut acc = vec![0.0; n];
    let mut jv = vec![0.0; n];
    let free = &drift.coords;
    let g = &spec.noise;
    let bound = spec.blowup_bound;
    for step in 1..n_steps {
        draw.step(dt, &mut dw, &mut dz);
        drift.accel(&u, &mut acc);
        match scheme {
            Scheme::Taylor15 => {
                drift.jacobian_times(&u, &v, &mut jv)?;
                let h2 = 0.5 * dt * dt;
                for &c in free {
                    let un = u[c] + v[c] * dt + acc[c] * h2 + g[c] * dz[c];
                    let vn = v[c] + acc[c] * dt + jv[c] * h2 + g[c] * dw[c];
                    u[c] = un;
                    v[c] = vn;
                }
            }
            Scheme::SemiImplicitEm => {
                for &c in free {
                    v[c] += acc[c] * dt + g[c] * dw[c];
                    u[c] += v[c] * dt;
                }
            }
        }
        spec.enforce(&mut u, &mut v);
        if u.iter().chain(&v).any(|x| !(x.abs() <= bound)) {
            return Err(Error::Divergence {
                realization,
                step,
                bound,
            });
        }
        sink(step, &u, &v);
    }
    Ok(())
}

fn scheme_for(spec: &SystemSpec, dt: f64) -> Result<(Scheme, CompiledDrift)> {
    spec.validate()?;
    let free = spec.free_coords();
    match spec.kind {
        SystemKind::DiscreteSde => Ok((Scheme::Taylor15, spec.lagrangian.drift(&free, spec.dim, true)?)),
        SystemKind::ContinuousSpde => {
            let limit = spec.stability_limit()?;
            if dt > limit {
                return Err(Error::Stability(format!(
                    "dt = {dt} exceeds the stability limit {limit:.6e} of the {} grid (2/ω_max; c·dt/dx ≤ 1 for waves)",
                    spec.name
                )));
            }
            Ok((Scheme::SemiImplicitEm, spec.lagrangian.drift(&free, spec.dim, false)?))
        }
    }
}

fn collect(
    spec: &SystemSpec,
    drift: &CompiledDrift,
    scheme: Scheme,
    dt: f64,
    n_steps: usize,
    noise: &NoiseStream,
) -> Result<Trajectory> {
    let n = spec.dim;
    let mut tr = Trajectory {
        dim: n,
        n_steps,
        displacement: vec![0.0; n * n_steps],
        velocity: vec![0.0; n * n_steps],
    };
    run(spec, drift, scheme, dt, n_steps, noise, 0, &mut |t, u, v| {
        for c in 0..n {
            tr.displacement[c * n_steps + t] = u[c];
            tr.velocity[c * n_steps + t] = v[c];
        }
    })?;
    Ok(tr)
}

/// Strong order 1.5 Taylor scheme for `ü = a(u) + g Ẇ` (additive noise):
///
/// `u ← u + v·dt + ½a·dt² + g·ΔZ`, `v ← v + a·dt + ½(J v)·dt² + g·ΔW`,
/// with `J = ∂a/∂u` from the Lagrangian's analytic second derivatives.
pub fn integrate_taylor15(spec: &SystemSpec, dt: f64, n_steps: usize, noise: &NoiseStream) -> Result<Trajectory> {
    check_step(dt, n_steps)?;
    if spec.kind != SystemKind::DiscreteSde {
        return Err(Error::InvalidArgument(format!("{} is not a discrete SDE", spec.name)));
    }
    let (scheme, drift) = scheme_for(spec, dt)?;
    collect(spec, &drift, scheme, dt, n_steps, noise)
}

/// Semi-implicit (symplectic) Euler–Maruyama for fields:
/// `v ← v + a(u)·dt + g·ΔW`, then `u ← u + v·dt`, boundary rows enforced each
/// step. The stability bound is checked before stepping.
pub fn integrate_euler_maruyama(
    spec: &SystemSpec,
    dt: f64,
    n_steps: usize,
    noise: &NoiseStream,
) -> Result<Trajectory> {
    check_step(dt, n_steps)?;
    if spec.kind != SystemKind::ContinuousSpde {
        return Err(Error::InvalidArgument(format!("{} is not a field system", spec.name)));
    }
    let (scheme, drift) = scheme_for(spec, dt)?;
    collect(spec, &drift, scheme, dt, n_steps, noise)
}

/// Dispatches on the system kind.
pub fn integrate(spec: &SystemSpec, dt: f64, n_steps: usize, noise: &NoiseStream) -> Result<Trajectory> {
    match spec.kind {
        SystemKind::DiscreteSde => integrate_taylor15(spec, dt, n_steps, noise),
        SystemKind::ContinuousSpde => integrate_euler_maruyama(spec, dt, n_steps, noise),
    }
}

fn steps_for(dt: f64, t_f: f64) -> Result<usize> {
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(Error::InvalidArgument(format!("t_f must be positive, got {t_f}")));
    }
    check_step(dt, 1)?;
    Ok((t_f / dt).round() as usize + 1)
}

/// `n_real` independent realizations over `[0, t_f]`; realization `r` uses the
/// seed derived from `(base_seed, r)`.
pub fn generate_ensemble(spec: &SystemSpec, dt: f64, t_f: f64, n_real: usize, base_seed: u64) -> Result<Ensemble> {
    let n_steps = steps_for(dt, t_f)?;
    if n_real == 0 {
        return Err(Error::InvalidArgument("n_real must be ≥ 1".into()));
    }
    let (scheme, drift) = scheme_for(spec, dt)?;
    let n = spec.dim;
    let block = n * n_steps;
    let mut displacement = vec![0.0; n_real * block];
    let mut velocity = vec![0.0; n_real * block];
    for r in 0..n_real {
        let noise = NoiseStream::Seeded(realization_seed(base_seed, r));
        let (d, v) = (
            &mut displacement[r * block..(r + 1) * block],
            &mut velocity[r * block..(r + 1) * block],
        );
        run(spec, &drift, scheme, dt, n_steps, &noise, r, &mut |t, u, vv| {
            for c in 0..n {
                d[c * n_steps + t] = u[c];
                v[c * n_steps + t] = vv[c];
            }
        })?;
    }
    Ok(Ensemble {
        system: spec.name.clone(),
        dt,
        n_steps,
        n_real,
        coords: n,
        displacement,
        velocity,
        spatial_grid: spec.grid(),
        naming: spec.naming().clone(),
    })
}

/// Streaming ensemble mean and variance of the displacement, without storing
/// realizations. Layout `coord * n_steps + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_steps: usize,
    pub dim: usize,
    pub n_real: usize,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl EnsembleStats {
    pub fn mean_of(&self, c: usize) -> &[f64] {
        &self.mean[c * self.n_steps..(c + 1) * self.n_steps]
    }
    pub fn var_of(&self, c: usize) -> &[f64] {
        &self.var[c * self.n_steps..(c + 1) * self.n_steps]
    }
}

/// Mean/variance over `n_real` realizations with the same seed derivation as
/// [`generate_ensemble`], so two systems run with one `base_seed` share noise paths.
pub fn simulate_statistics(
    spec: &SystemSpec,
    dt: f64,
    n_steps: usize,
    n_real: usize,
    base_seed: u64,
) -> Result<EnsembleStats> {
    check_step(dt, n_steps)?;
    if n_real == 0 {
        return Err(Error::InvalidArgument("n_real must be ≥ 1".into()));
    }
    let (scheme, drift) = scheme_for(spec, dt)?;
    let n = spec.dim;
    let mut sum = vec![0.0; n * n_steps];
    let mut sq = vec![0.0; n * n_steps];
    for r in 0..n_real {
        let noise = NoiseStream::Seeded(realization_seed(base_seed, r));
        run(spec, &drift, scheme, dt, n_steps, &noise, r, &mut |t, u, _| {
            for c in 0..n {
                sum[c * n_steps + t] += u[c];
                sq[c * n_steps + t] += u[c] * u[c];
            }
        })?;
    }
    let k = n_real as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / k).collect();
    let var = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| if n_real > 1 { ((q - k * m * m) / (k - 1.0)).max(0.0) } else { 0.0 })
        .collect();
    Ok(EnsembleStats {
        n_steps,
        dim: n,
        n_real,
        mean,
        var,
    })
}

/// Strong order 1.5 Taylor scheme for a first-order system
/// `dY = f(Y) dt + diag(g) dW` with constant gains:
///
/// `Y ← Y + f·dt + g∘ΔW + ½(J f)·dt² + J(g∘ΔZ)`.
///
/// `jac_times(y, w, out)` must write `J(y)·w`. The curvature correction
/// `½Σ g_j² ∂²f/∂y_j²` is omitted, so `f` must be affine along noisy directions.
/// Returns the path step-major (`step * dim + k`).
pub fn taylor15_first_order(
    drift: impl Fn(&[f64], &mut [f64]),
    jac_times: impl Fn(&[f64], &[f64], &mut [f64]),
    gains: &[f64],
    y0: &[f64],
    dt: f64,
    n_steps: usize,
    noise: &NoiseStream,
) -> Result<Vec<f64>> {
    check_step(dt, n_steps)?;
    let n = y0.len();
    if gains.len() != n {
        return Err(Error::InvalidArgument("gain vector length mismatch".into()));
    }
    let mut draw = Draw::new(noise, n, n_steps, true)?;
    let (mut dw, mut dz) = (vec![0.0; n], vec![0.0; n]);
    let (mut f, mut jf, mut gz, mut jgz) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut y = y0.to_vec();
    let mut path = Vec::with_capacity(n * n_steps);
    path.extend_from_slice(&y);
    for _ in 1..n_steps {
        draw.step(dt, &mut dw, &mut dz);
        drift(&y, &mut f);
        jac_times(&y, &f, &mut jf);
        for k in 0..n {
            gz[k] = gains[k] * dz[k];
        }
        jac_times(&y, &gz, &mut jgz);
        for k in 0..n {
            y[k] += f[k] * dt + gains[k] * dw[k] + 0.5 * jf[k] * dt * dt + jgz[k];
        }
        path.extend_from_slice(&y);
    }
    Ok(path)
}

/// Euler–Maruyama for `dY = f(Y) dt + diag(g) dW`; path step-major.
pub fn euler_maruyama_first_order(
    drift: impl Fn(&[f64], &mut [f64]),
    gains: &[f64],
    y0: &[f64],
    dt: f64,
    n_steps: usize,
    noise: &NoiseStream,
) -> Result<Vec<f64>> {
    check_step(dt, n_steps)?;
    let n = y0.len();
    if gains.len() != n {
        return Err(Error::InvalidArgument("gain vector length mismatch".into()));
    }
    let mut draw = Draw::new(noise, n, n_steps, false)?;
    let mut dw = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut y = y0.to_vec();
    let mut path = Vec::with_capacity(n * n_steps);
    path.extend_from_slice(&y);
    for _ in 1..n_steps {
        draw.step(dt, &mut dw, &mut []);
        drift(&y, &mut f);
        for k in 0..n {
            y[k] += f[k] * dt + gains[k] * dw[k];
        }
        path.extend_from_slice(&y);
    }
    Ok(path)
}
