//! Stochastic simulation of benchmark and user-defined systems.
//!
//! Every system is described by a mass-normalised Lagrangian
//! `L = Σ ½u̇_i² + f(u)` plus an additive noise gain per coordinate, so the
//! equations of motion are `ü_i = ∂f/∂u_i + g_i Ẇ_i`. Discrete systems are
//! integrated with the strong order 1.5 Taylor scheme; fields with a
//! semi-implicit Euler–Maruyama scheme.

mod integrate;
mod io;
mod noise;
mod systems;

pub use integrate::{
    euler_maruyama_first_order, generate_ensemble, integrate, integrate_euler_maruyama, integrate_taylor15,
    simulate_statistics, taylor15_first_order, EnsembleStats, Trajectory,
};
pub use io::{export_csv, load_ensemble, save_ensemble, EnsembleHeader};
pub use noise::{realization_seed, splitmix64, wiener_increments, NoiseStream};
pub use systems::{benchmark_spec, build_system, cantilever_mode, spatial_stencils, BENCHMARKS};

use crate::basis::{Naming, Series};
use crate::error::{Error, Result};
use crate::model::Lagrangian;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    DiscreteSde,
    ContinuousSpde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `u(0) = u(L)`; the last node mirrors the first.
    Periodic,
    /// Clamped at `x = 0`, free at `x = L`.
    Cantilever,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spatial {
    pub length: f64,
    pub dx: f64,
    pub boundary: Boundary,
}

/// Per-coordinate kinematic constraint, enforced after every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    Free,
    Fixed { value: f64 },
    /// Copies another coordinate (periodic wrap).
    Mirror { source: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDefaults {
    pub dt: f64,
    pub t_f: f64,
    pub n_real: usize,
}

/// A stochastic system: dynamics, noise, initial state and geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    pub kind: SystemKind,
    pub dim: usize,
    pub lagrangian: Lagrangian,
    /// Additive noise gain on each coordinate's acceleration.
    pub noise: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    pub initial_displacement: Vec<f64>,
    pub initial_velocity: Vec<f64>,
    pub spatial: Option<Spatial>,
    pub constraints: Vec<Constraint>,
    pub defaults: SimDefaults,
    pub blowup_bound: f64,
}

impl SystemSpec {
    pub fn naming(&self) -> &Naming {
        &self.lagrangian.naming
    }

    pub fn free_coords(&self) -> Vec<usize> {
        (0..self.dim)
            .filter(|&c| matches!(self.constraints[c], Constraint::Free))
            .collect()
    }

    pub fn grid(&self) -> Option<Vec<f64>> {
        self.spatial
            .as_ref()
            .map(|s| (0..self.dim).map(|i| i as f64 * s.dx).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("system must have at least one coordinate".into()));
        }
        for (what, len) in [
            ("noise", self.noise.len()),
            ("initial_displacement", self.initial_displacement.len()),
            ("initial_velocity", self.initial_velocity.len()),
            ("constraints", self.constraints.len()),
        ] {
            if len != self.dim {
                return Err(Error::Config(format!("{what} has length {len}, expected {}", self.dim)));
            }
        }
        if self.noise.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("noise gains must be finite".into()));
        }
        if let Some(s) = &self.spatial {
            if !(s.dx > 0.0 && s.length > 0.0) {
                return Err(Error::Config("spatial length and dx must be positive".into()));
            }
            let expect = (s.length / s.dx).round() as usize + 1;
            if expect != self.dim {
                return Err(Error::Config(format!(
                    "grid needs {expect} nodes for L={} dx={}, spec has {}",
                    s.length, s.dx, self.dim
                )));
            }
        }
        for (c, k) in self.constraints.iter().enumerate() {
            if let Constraint::Mirror { source } = k {
                if *source >= self.dim || !matches!(self.constraints[*source], Constraint::Free) {
                    return Err(Error::Config(format!("coordinate {c} mirrors an invalid source")));
                }
            }
        }
        for (_, f) in &self.lagrangian.terms {
            if f.dependencies().iter().any(|(_, c)| *c >= self.dim) {
                return Err(Error::Schema(format!(
                    "term {} references a missing coordinate",
                    f.label(self.naming())
                )));
            }
        }
        Ok(())
    }

    /// Same geometry and initial state with replaced dynamics.
    pub fn with_dynamics(&self, lagrangian: Lagrangian, noise: Vec<f64>) -> SystemSpec {
        SystemSpec {
            lagrangian,
            noise,
            ..self.clone()
        }
    }

    pub fn with_noise_scale(&self, scale: f64) -> SystemSpec {
        SystemSpec {
            noise: self.noise.iter().map(|g| g * scale).collect(),
            ..self.clone()
        }
    }

    /// Largest step keeping the semi-implicit scheme stable: `2/ω_max` with
    /// `ω_max²` bounded by the Gershgorin radius of the stiffness at the
    /// initial state. For the wave equation this is the CFL bound `dx/c`.
    pub fn stability_limit(&self) -> Result<f64> {
        let free = self.free_coords();
        let drift = self.lagrangian.drift(&free, self.dim, true)?;
        let rows = drift.jacobian_rows(&self.initial_displacement);
        let radius = rows
            .iter()
            .map(|(_, r)| r.iter().map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if radius == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(2.0 / radius.sqrt())
    }

    /// Applies the constraints (fixed nodes, mirrored boundary nodes) in place.
    pub fn enforce(&self, u: &mut [f64], v: &mut [f64]) {
        for (c, k) in self.constraints.iter().enumerate() {
            match k {
                Constraint::Free => {}
                Constraint::Fixed { value } => {
                    u[c] = *value;
                    v[c] = 0.0;
                }
                Constraint::Mirror { source } => {
                    u[c] = u[*source];
                    v[c] = v[*source];
                }
            }
        }
    }
}

/// `n_real` realizations × `coords` coordinates × `n_steps` samples of
/// displacement and velocity, stored realization-major then coordinate-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub system: String,
    pub dt: f64,
    pub n_steps: usize,
    pub n_real: usize,
    pub coords: usize,
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
    pub spatial_grid: Option<Vec<f64>>,
    pub naming: Naming,
}

impl Ensemble {
    pub fn index(&self, r: usize, c: usize, t: usize) -> usize {
        (r * self.coords + c) * self.n_steps + t
    }

    pub fn pos(&self, r: usize, c: usize) -> &[f64] {
        let i = self.index(r, c, 0);
        &self.displacement[i..i + self.n_steps]
    }

    pub fn vel(&self, r: usize, c: usize) -> &[f64] {
        let i = self.index(r, c, 0);
        &self.velocity[i..i + self.n_steps]
    }

    pub fn realization(&self, r: usize) -> RealizationView<'_> {
        RealizationView { ens: self, r }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_steps).map(|t| t as f64 * self.dt).collect()
    }

    /// Ensemble mean of one coordinate's displacement.
    pub fn mean_displacement(&self, c: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.n_steps];
        for r in 0..self.n_real {
            for (a, x) in m.iter_mut().zip(self.pos(r, c)) {
                *a += x;
            }
        }
        m.iter_mut().for_each(|a| *a /= self.n_real as f64);
        m
    }

    /// New ensemble holding the listed realizations.
    pub fn subset(&self, realizations: &[usize]) -> Result<Ensemble> {
        if realizations.iter().any(|&r| r >= self.n_real) || realizations.is_empty() {
            return Err(Error::InvalidArgument("invalid realization subset".into()));
        }
        let block = self.coords * self.n_steps;
        let mut d = Vec::with_capacity(block * realizations.len());
        let mut v = Vec::with_capacity(block * realizations.len());
        for &r in realizations {
            d.extend_from_slice(&self.displacement[r * block..(r + 1) * block]);
            v.extend_from_slice(&self.velocity[r * block..(r + 1) * block]);
        }
        Ok(Ensemble {
            n_real: realizations.len(),
            displacement: d,
            velocity: v,
            ..self.clone_header()
        })
    }

    fn clone_header(&self) -> Ensemble {
        Ensemble {
            system: self.system.clone(),
            dt: self.dt,
            n_steps: self.n_steps,
            n_real: self.n_real,
            coords: self.coords,
            displacement: vec![],
            velocity: vec![],
            spatial_grid: self.spatial_grid.clone(),
            naming: self.naming.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_real * self.coords * self.n_steps;
        if self.displacement.len() != n || self.velocity.len() != n {
            return Err(Error::Schema("ensemble arrays do not match (N, n, N_t)".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Schema("ensemble dt must be positive".into()));
        }
        if self.displacement.iter().chain(&self.velocity).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("ensemble contains non-finite samples".into()));
        }
        Ok(())
    }
}

/// One realization seen through [`Series`].
#[derive(Clone, Copy)]
pub struct RealizationView<'a> {
    ens: &'a Ensemble,
    r: usize,
}

impl Series for RealizationView<'_> {
    fn pos(&self, c: usize) -> &[f64] {
        self.ens.pos(self.r, c)
    }
    fn vel(&self, c: usize) -> &[f64] {
        self.ens.vel(self.r, c)
    }
    fn len(&self) -> usize {
        self.ens.n_steps
    }
}
