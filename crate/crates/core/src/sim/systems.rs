//! The six benchmark systems.

use super::{Boundary, Constraint, SimDefaults, Spatial, SystemKind, SystemSpec};
use crate::basis::{Form, Naming, TrigFn, Var};
use crate::error::{Error, Result};
use crate::model::Lagrangian;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const BENCHMARKS: [&str; 6] = ["harmonic", "pendulum", "duffing", "3dof", "wave", "beam"];

const BLOWUP: f64 = 1e6;

/// Benchmark with its default parameters.
pub fn benchmark_spec(name: &str) -> Result<SystemSpec> {
    build_system(name, &BTreeMap::new())
}

fn defaults(name: &str) -> Option<Vec<(&'static str, f64)>> {
    Some(match name {
        "harmonic" => vec![
            ("m", 1.0),
            ("k", 1000.0),
            ("sigma", 1.0),
            ("x0", 0.5),
            ("v0", 0.0),
            ("dt", 1e-4),
            ("t_f", 1.0),
            ("n_real", 200.0),
        ],
        "pendulum" => vec![
            ("m", 1.0),
            ("l", 1.0),
            ("g", 9.81),
            ("sigma", 0.1),
            ("theta0", 0.9),
            ("v0", 0.0),
            ("dt", 5e-4),
            ("t_f", 5.0),
            ("n_real", 200.0),
        ],
        "duffing" => vec![
            ("k", 1000.0),
            ("alpha", 5000.0),
            ("sigma", 1.0),
            ("x0", 0.4),
            ("v0", 0.0),
            ("dt", 1e-4),
            ("t_f", 1.0),
            ("n_real", 200.0),
        ],
        "3dof" => vec![
            ("m", 10.0),
            ("k", 10000.0),
            ("sigma", 1.0),
            ("x1", 0.25),
            ("x2", 0.5),
            ("x3", 0.0),
            ("dt", 1e-4),
            ("t_f", 1.0),
            ("n_real", 200.0),
        ],
        "wave" => vec![
            ("c", 2.0),
            ("sigma", 2.0),
            ("length", 1.0),
            ("dx", 0.01),
            ("dt", 1e-4),
            ("t_f", 1.0),
            ("n_real", 30.0),
        ],
        "beam" => vec![
            ("E", 2e10),
            ("width", 0.02),
            ("thickness", 0.001),
            ("rho", 8050.0),
            ("length", 1.0),
            ("psi", 0.596864 * PI),
            ("sigma", 20.0),
            ("dx", 0.01),
            ("dt", 1e-4),
            ("t_f", 2.0),
            ("n_real", 20.0),
        ],
        _ => return None,
    })
}

/// Benchmark with parameter overrides; unknown parameter names are rejected.
///
/// Beam accepts an explicit `c` overriding the value derived from
/// `E·I/(2ρA)`, `I = width·thickness³/12`, `A = width·thickness`.
pub fn build_system(name: &str, overrides: &BTreeMap<String, f64>) -> Result<SystemSpec> {
    let base = defaults(name).ok_or_else(|| Error::UnknownSystem {
        name: name.to_string(),
        valid: BENCHMARKS.join(", "),
    })?;
    let mut p: BTreeMap<String, f64> = base.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        let allowed = p.contains_key(k) || (name == "beam" && k == "c");
        if !allowed {
            return Err(Error::Config(format!(
                "unknown parameter `{k}` for {name}; valid: {}",
                p.keys().cloned().collect::<Vec<_>>().join(", ")
            )));
        }
        if !v.is_finite() {
            return Err(Error::Config(format!("parameter `{k}` must be finite")));
        }
        p.insert(k.clone(), *v);
    }
    let sim = SimDefaults {
        dt: p["dt"],
        t_f: p["t_f"],
        n_real: p["n_real"].round().max(1.0) as usize,
    };
    let spec = match name {
        "harmonic" => single_dof(name, "X", &p, sim, |p| {
            vec![(-0.5 * p["k"] / p["m"], Form::Monomial { coord: 0, degree: 2 })]
        }, p["sigma"] / p["m"], p["x0"], p["v0"]),
        "pendulum" => {
            let gain = p["sigma"] / (p["m"] * p["l"] * p["l"]);
            single_dof(name, "θ", &p, sim, |p| {
                vec![(p["g"] / p["l"], Form::Trig { func: TrigFn::Cos, var: Var::Pos, coord: 0, freq: 1.0 })]
            }, gain, p["theta0"], p["v0"])
        }
        "duffing" => single_dof(name, "X", &p, sim, |p| {
            vec![
                (-0.5 * p["k"], Form::Monomial { coord: 0, degree: 2 }),
                (-0.25 * p["alpha"], Form::Monomial { coord: 0, degree: 4 }),
            ]
        }, p["sigma"], p["x0"], p["v0"]),
        "3dof" => three_dof(&p, sim),
        "wave" => wave(&p, sim)?,
        "beam" => beam(&p, sim)?,
        _ => unreachable!(),
    };
    spec.validate()?;
    Ok(spec)
}

#[allow(clippy::too_many_arguments)]
fn single_dof(
    name: &str,
    symbol: &str,
    p: &BTreeMap<String, f64>,
    defaults: SimDefaults,
    potential: impl Fn(&BTreeMap<String, f64>) -> Vec<(f64, Form)>,
    gain: f64,
    x0: f64,
    v0: f64,
) -> SystemSpec {
    let mut terms = vec![(1.0, Form::Kinetic { coord: 0 })];
    terms.extend(potential(p));
    SystemSpec {
        name: name.to_string(),
        kind: SystemKind::DiscreteSde,
        dim: 1,
        lagrangian: Lagrangian::new(terms, Naming::Discrete(vec![symbol.to_string()])),
        noise: vec![gain],
        params: p.clone(),
        initial_displacement: vec![x0],
        initial_velocity: vec![v0],
        spatial: None,
        constraints: vec![Constraint::Free],
        defaults,
        blowup_bound: BLOWUP,
    }
}

/// Chain wall–m–m–m with equal masses and springs; mass-normalised so the
/// noise gain `sigma` acts directly on each acceleration.
fn three_dof(p: &BTreeMap<String, f64>, defaults: SimDefaults) -> SystemSpec {
    let w = -0.5 * p["k"] / p["m"];
    let mut terms: Vec<(f64, Form)> = (0..3).map(|c| (1.0, Form::Kinetic { coord: c })).collect();
    terms.push((w, Form::Monomial { coord: 0, degree: 2 }));
    terms.push((w, Form::DifferenceMonomial { a: 1, b: 0, degree: 2 }));
    terms.push((w, Form::DifferenceMonomial { a: 2, b: 1, degree: 2 }));
    SystemSpec {
        name: "3dof".into(),
        kind: SystemKind::DiscreteSde,
        dim: 3,
        lagrangian: Lagrangian::new(terms, Naming::Discrete(vec!["X1".into(), "X2".into(), "X3".into()])),
        noise: vec![p["sigma"]; 3],
        params: p.clone(),
        initial_displacement: vec![p["x1"], p["x2"], p["x3"]],
        initial_velocity: vec![0.0; 3],
        spatial: None,
        constraints: vec![Constraint::Free; 3],
        defaults,
        blowup_bound: BLOWUP,
    }
}

fn grid_nodes(length: f64, dx: f64) -> Result<usize> {
    if !(length > 0.0 && dx > 0.0) {
        return Err(Error::Config("length and dx must be positive".into()));
    }
    let cells = (length / dx).round();
    if cells < 4.0 || ((cells * dx) - length).abs() > 1e-9 * length {
        return Err(Error::Config(format!("length {length} is not a multiple of dx {dx} with ≥ 4 cells")));
    }
    Ok(cells as usize + 1)
}

/// Forward-difference strain stencils `(u[j+1] − u[j])/dx` on a periodic grid of
/// `m` independent nodes (node `m` mirrors node 0).
pub(crate) fn periodic_edges(m: usize, dx: f64) -> Vec<(usize, Vec<(usize, f64)>)> {
    (0..m)
        .map(|j| (j, vec![((j + 1) % m, 1.0 / dx), (j, -1.0 / dx)]))
        .collect()
}

/// Periodic curvature stencils.
pub(crate) fn periodic_curvatures(m: usize, dx: f64) -> Vec<(usize, Vec<(usize, f64)>)> {
    let h = 1.0 / (dx * dx);
    (0..m)
        .map(|j| (j, vec![((j + m - 1) % m, h), (j, -2.0 * h), ((j + 1) % m, h)]))
        .collect()
}

/// Cantilever strain stencils on nodes `0..=m`, node 0 clamped (dropped).
pub(crate) fn cantilever_edges(m: usize, dx: f64) -> Vec<(usize, Vec<(usize, f64)>)> {
    (0..m)
        .map(|j| {
            let mut s = vec![(j + 1, 1.0 / dx)];
            if j > 0 {
                s.push((j, -1.0 / dx));
            }
            (j, s)
        })
        .collect()
}

/// Cantilever curvature stencils `κ_j`, `j = 0..m-1`. The clamp uses the ghost
/// node `u[-1] = u[1]` (zero slope), so `κ_0 = 2u[1]/dx²`; the free end
/// carries no curvature term (zero moment).
pub(crate) fn cantilever_curvatures(m: usize, dx: f64) -> Vec<(usize, Vec<(usize, f64)>)> {
    let h = 1.0 / (dx * dx);
    (0..m)
        .map(|j| {
            if j == 0 {
                (0, vec![(1, 2.0 * h)])
            } else {
                let mut s = vec![(j + 1, h), (j, -2.0 * h)];
                if j > 1 {
                    s.push((j - 1, h));
                }
                (j, s)
            }
        })
        .collect()
}

/// `(node, [(coord, weight)])` stencils of spatial `order` (1 or 2) for a field
/// system, one per free node.
pub fn spatial_stencils(spec: &SystemSpec, order: u32) -> Result<Vec<(usize, Vec<(usize, f64)>)>> {
    let s = spec
        .spatial
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} has no spatial grid", spec.name)))?;
    let m = spec.dim - 1;
    match (s.boundary, order) {
        (Boundary::Periodic, 1) => Ok(periodic_edges(m, s.dx)),
        (Boundary::Periodic, 2) => Ok(periodic_curvatures(m, s.dx)),
        (Boundary::Cantilever, 1) => Ok(cantilever_edges(m, s.dx)),
        (Boundary::Cantilever, 2) => Ok(cantilever_curvatures(m, s.dx)),
        _ => Err(Error::InvalidArgument(format!("spatial order {order} not supported"))),
    }
}

/// `ü = c² u_xx + σ Ẇ` on a periodic grid, `u(x,0) = cos(2πx/L)`.
fn wave(p: &BTreeMap<String, f64>, defaults: SimDefaults) -> Result<SystemSpec> {
    let (length, dx) = (p["length"], p["dx"]);
    let n = grid_nodes(length, dx)?;
    let m = n - 1;
    let c2 = p["c"] * p["c"];
    let mut terms: Vec<(f64, Form)> = (0..m).map(|c| (1.0, Form::Kinetic { coord: c })).collect();
    for (node, stencil) in periodic_edges(m, dx) {
        terms.push((-0.5 * c2, Form::SpatialMonomial { node, order: 1, degree: 2, stencil }));
    }
    let mut constraints = vec![Constraint::Free; n];
    constraints[m] = Constraint::Mirror { source: 0 };
    let mut noise = vec![p["sigma"]; n];
    noise[m] = 0.0;
    Ok(SystemSpec {
        name: "wave".into(),
        kind: SystemKind::ContinuousSpde,
        dim: n,
        lagrangian: Lagrangian::new(terms, Naming::field("u")),
        noise,
        params: p.clone(),
        initial_displacement: (0..n).map(|i| (2.0 * PI * i as f64 * dx / length).cos()).collect(),
        initial_velocity: vec![0.0; n],
        spatial: Some(Spatial {
            length,
            dx,
            boundary: Boundary::Periodic,
        }),
        constraints,
        defaults,
        blowup_bound: BLOWUP,
    })
}

/// First cantilever mode shape `φ(x)` for wavenumber `ψ` on `[0, L]`.
pub fn cantilever_mode(x: f64, psi: f64, length: f64) -> f64 {
    let r = ((psi * length).cos() + (psi * length).cosh()) / ((psi * length).sin() + (psi * length).sinh());
    ((psi * x).cosh() - (psi * x).cos()) + r * ((psi * x).sin() - (psi * x).sinh())
}

/// `ü = −c u_xxxx + σ Ẇ`, clamped at 0 and free at L, started from the mode shape.
fn beam(p: &BTreeMap<String, f64>, defaults: SimDefaults) -> Result<SystemSpec> {
    let (length, dx) = (p["length"], p["dx"]);
    let n = grid_nodes(length, dx)?;
    let m = n - 1;
    let c = match p.get("c") {
        Some(c) => *c,
        None => {
            let (w, h) = (p["width"], p["thickness"]);
            let i = w * h.powi(3) / 12.0;
            p["E"] * i / (2.0 * p["rho"] * w * h)
        }
    };
    let mut params = p.clone();
    params.insert("c".into(), c);
    let mut terms: Vec<(f64, Form)> = (1..=m).map(|k| (1.0, Form::Kinetic { coord: k })).collect();
    for (node, stencil) in cantilever_curvatures(m, dx) {
        terms.push((-0.5 * c, Form::SpatialMonomial { node, order: 2, degree: 2, stencil }));
    }
    let mut constraints = vec![Constraint::Free; n];
    constraints[0] = Constraint::Fixed { value: 0.0 };
    let mut noise = vec![p["sigma"]; n];
    noise[0] = 0.0;
    let psi = p["psi"];
    let mut u0: Vec<f64> = (0..n).map(|i| cantilever_mode(i as f64 * dx, psi, length)).collect();
    u0[0] = 0.0;
    Ok(SystemSpec {
        name: "beam".into(),
        kind: SystemKind::ContinuousSpde,
        dim: n,
        lagrangian: Lagrangian::new(terms, Naming::field("u")),
        noise,
        params,
        initial_displacement: u0,
        initial_velocity: vec![0.0; n],
        spatial: Some(Spatial {
            length,
            dx,
            boundary: Boundary::Cantilever,
        }),
        constraints,
        defaults,
        blowup_bound: BLOWUP,
    })
}
