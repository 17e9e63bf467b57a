//! Lagrangian, diffusion, equation-of-motion and Hamiltonian discovery.
//!
//! Each particle `i` gets its own sparse regression: the kinetic column
//! `E[ü_i]` is the label and the remaining Euler–Lagrange columns the
//! features. The particle Lagrangians are merged into one total Lagrangian.
//! The noise gain follows from the quadratic variation of the Euler–Lagrange
//! residual: `dt·E[r_i²] → g_i²`.

use crate::basis::{eval_sum, partial_of_sum, Form, Naming, Var};
use crate::error::{Error, Result};
use crate::library::{diffusion_features, el_residual_moments, el_transform, split_kinetic, LibrarySet, LibraryKind};
use crate::model::{fmt_coef, group_by_family, join_terms, Lagrangian};
use crate::numdiff::TimeDerivative;
use crate::regression::{prune_support, stls, StlsOptions};
use crate::sim::{Ensemble, SystemKind, SystemSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Regression settings. Thresholds are relative: a term survives when its
/// standardized contribution is at least `lambda` times the RMS of the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoveryOptions {
    pub lambda: f64,
    pub max_iter: usize,
    /// Time derivative of the momentum in the Lagrangian regression.
    pub derivative: TimeDerivative,
}

impl DiscoveryOptions {
    /// Central differences for discrete systems; forward differences for
    /// fields, where the symplectic update makes them exact.
    pub fn for_kind(kind: SystemKind, lambda: f64) -> Self {
        DiscoveryOptions {
            lambda,
            max_iter: 20,
            derivative: match kind {
                SystemKind::DiscreteSde => TimeDerivative::Central,
                SystemKind::ContinuousSpde => TimeDerivative::Forward,
            },
        }
    }
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Sparse fit for one particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleLagrangian {
    pub coord: usize,
    pub name: String,
    /// Retained `(global basis index, label, coefficient)`; the kinetic basis
    /// (coefficient 1) is implicit.
    pub terms: Vec<(usize, String, f64)>,
    pub residual_norm: f64,
    pub label_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Discovered Lagrangian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianModel {
    pub particles: Vec<ParticleLagrangian>,
    /// Total Lagrangian. A term shared by several particles carries the mean
    /// of their coefficients.
    pub lagrangian: Lagrangian,
    pub expression: String,
    pub lambda: f64,
}

impl LagrangianModel {
    /// Labels of the non-kinetic terms in the total Lagrangian.
    pub fn support(&self) -> Vec<String> {
        support_labels(&self.lagrangian)
    }
}

/// Sorted labels of the non-kinetic terms of `l`.
pub fn support_labels(l: &Lagrangian) -> Vec<String> {
    let mut s: Vec<String> = l.potential_terms().iter().map(|(_, f)| f.label(&l.naming)).collect();
    s.sort();
    s
}

/// Per-particle sparse regression of the Euler–Lagrange equations, then merge.
pub fn discover_lagrangian(ens: &Ensemble, lib: &LibrarySet, opts: &DiscoveryOptions) -> Result<LagrangianModel> {
    if lib.kind != LibraryKind::Lagrangian {
        return Err(Error::InvalidArgument("expected a Lagrangian library".into()));
    }
    if lib.naming != ens.naming {
        return Err(Error::Schema("library and ensemble coordinate names differ".into()));
    }
    let mut particles = Vec::with_capacity(lib.coords.len());
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &i in &lib.coords {
        let cand = lib.for_particle(i)?;
        let fm = el_transform(&cand, ens, opts.derivative)?;
        let split = split_kinetic(&fm, &cand)?;
        let rhs: Vec<f64> = split.label.iter().map(|v| -v).collect();
        let label_rms = rms(&rhs);
        let fit = stls(
            &split.features,
            &rhs,
            &StlsOptions {
                lambda: opts.lambda * label_rms,
                max_iter: opts.max_iter,
                standardize: true,
            },
        )?;
        let name = lib.naming.pos(i);
        if fit.empty {
            return Err(Error::Discovery(format!(
                "empty support for particle {name}: label RMS {label_rms:.3e}, residual norm {:.3e}, λ = {}",
                fit.residual_norm, opts.lambda
            )));
        }
        let terms: Vec<(usize, String, f64)> = fit
            .active_set
            .iter()
            .map(|&k| {
                let local = split.feature_index[k];
                let g = cand.global_index[local];
                (g, cand.bases[local].label.clone(), fit.coefficients[k])
            })
            .collect();
        for (g, _, c) in &terms {
            let e = sums.entry(*g).or_insert((0.0, 0));
            e.0 += c;
            e.1 += 1;
        }
        particles.push(ParticleLagrangian {
            coord: i,
            name,
            terms,
            residual_norm: fit.residual_norm,
            label_rms,
            iterations: fit.iterations_used,
            converged: fit.converged,
        });
    }
    let mut total: Vec<(f64, Form)> = lib.coords.iter().map(|&c| (1.0, Form::Kinetic { coord: c })).collect();
    for (g, (s, n)) in sums {
        total.push((s / n as f64, lib.bases[g].form.clone()));
    }
    let lagrangian = Lagrangian::new(total, lib.naming.clone());
    Ok(LagrangianModel {
        particles,
        expression: lagrangian.expression(),
        lagrangian,
        lambda: opts.lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionStatus {
    /// Only `u_i²` retained: constant gain `√β`.
    Constant,
    /// A retained squared-space coefficient is negative.
    SignError,
    /// Retained set is not a perfect square of a single term.
    Unsupported,
    /// Nothing retained.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleDiffusion {
    pub coord: usize,
    pub name: String,
    /// Retained `(label, β)` in squared-potential space.
    pub terms: Vec<(String, f64)>,
    pub status: DiffusionStatus,
    /// Noise gain `∂σ_i/∂u_i` when `status` is `Constant`.
    pub gain: Option<f64>,
    pub target_mean: f64,
    pub residual_norm: f64,
}

/// Discovered Wiener potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionModel {
    pub particles: Vec<ParticleDiffusion>,
    pub expression: String,
    pub lambda: f64,
}

impl DiffusionModel {
    /// Gain per coordinate of a `dim`-dimensional system (0 where undetermined
    /// or constrained).
    pub fn gains(&self, dim: usize) -> Vec<f64> {
        let mut g = vec![0.0; dim];
        for p in &self.particles {
            if p.coord < dim {
                g[p.coord] = p.gain.unwrap_or(0.0);
            }
        }
        g
    }

    pub fn mean_gain(&self) -> Option<f64> {
        let g: Vec<f64> = self.particles.iter().filter_map(|p| p.gain).collect();
        (!g.is_empty()).then(|| g.iter().sum::<f64>() / g.len() as f64)
    }

    pub fn all_constant(&self) -> bool {
        self.particles.iter().all(|p| p.status == DiffusionStatus::Constant)
    }
}

/// Regresses `dt·E[r_i²]` on `E[½∂²Φ/∂u_i²]` for each particle, with `r_i`
/// the Euler–Lagrange residual of the discovered Lagrangian (forward
/// differences, so the residual is the per-step noise increment over `dt`).
pub fn discover_diffusion(
    ens: &Ensemble,
    model: &LagrangianModel,
    lib: &LibrarySet,
    lambda: f64,
) -> Result<DiffusionModel> {
    if lib.kind != LibraryKind::Diffusion {
        return Err(Error::InvalidArgument("expected a diffusion library".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be ≥ 0, got {lambda}")));
    }
    let mut particles = Vec::with_capacity(lib.coords.len());
    for &i in &lib.coords {
        let cand = lib.for_particle(i)?;
        let (_, sq) = el_residual_moments(&model.lagrangian, i, ens, TimeDerivative::Forward)?;
        // The last sample has no forward neighbour.
        let n = ens.n_steps - 1;
        let target: Vec<f64> = sq[..n].iter().map(|v| v * ens.dt).collect();
        let fm = diffusion_features(&cand, ens)?;
        let keep: Vec<usize> = (0..cand.len()).collect();
        let mut feats = fm.values.select_columns(&keep);
        feats = truncate_rows(&feats, n);
        let fit = stls(
            &feats,
            &target,
            &StlsOptions {
                lambda: lambda * rms(&target),
                max_iter: 20,
                standardize: true,
            },
        )?;
        // Same budget as the threshold: a unit-RMS column with coefficient
        // λ·rms(y) explains (λ‖y‖)² of the sum of squares.
        let fit = prune_support(&feats, &target, &fit, lambda * rms(&target) * (n as f64).sqrt())?;
        let terms: Vec<(String, f64)> = fit
            .active_set
            .iter()
            .map(|&k| (cand.bases[k].label.clone(), fit.coefficients[k]))
            .collect();
        let square = Form::Monomial { coord: i, degree: 2 };
        let (status, gain) = if fit.empty {
            (DiffusionStatus::Empty, None)
        } else if terms.iter().any(|(_, b)| *b < 0.0) {
            (DiffusionStatus::SignError, None)
        } else if fit.active_set.len() == 1 && cand.bases[fit.active_set[0]].form == square {
            (DiffusionStatus::Constant, Some(fit.coefficients[fit.active_set[0]].sqrt()))
        } else {
            (DiffusionStatus::Unsupported, None)
        };
        particles.push(ParticleDiffusion {
            coord: i,
            name: lib.naming.pos(i),
            terms,
            status,
            gain,
            target_mean: target.iter().sum::<f64>() / n as f64,
            residual_norm: fit.residual_norm,
        });
    }
    let expression = diffusion_expression(&particles, &lib.naming);
    Ok(DiffusionModel {
        particles,
        expression,
        lambda,
    })
}

fn truncate_rows(m: &crate::regression::Matrix, n: usize) -> crate::regression::Matrix {
    let cols: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.col(j)[..n].to_vec()).collect();
    crate::regression::Matrix::from_columns(&cols).expect("consistent columns")
}

fn diffusion_expression(particles: &[ParticleDiffusion], naming: &Naming) -> String {
    let part = |p: &ParticleDiffusion| match (p.status, p.gain) {
        (DiffusionStatus::Constant, Some(g)) => format!("{}{}", fmt_coef(g), p.name),
        (DiffusionStatus::Empty, _) => "0".to_string(),
        (s, _) => format!(
            "√({}) [{}]",
            join_terms(p.terms.iter().map(|(l, b)| (*b, l.clone())).collect()),
            serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        ),
    };
    match naming {
        Naming::Field { .. } if particles.len() > 1 => {
            let gains: Vec<f64> = particles.iter().filter_map(|p| p.gain).collect();
            if gains.len() == particles.len() {
                let n = gains.len() as f64;
                let mean = gains.iter().sum::<f64>() / n;
                let sd = (gains.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0)).sqrt();
                format!("σ_i = {}u_i (±{:.2e}, n={})", fmt_coef(mean), sd, gains.len())
            } else {
                let bad = particles.len() - gains.len();
                format!("{bad} of {} nodes without a constant gain", particles.len())
            }
        }
        _ => particles.iter().map(part).collect::<Vec<_>>().join(", "),
    }
}

/// One equation `ü_i − Σ drift = gain·Ẇ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub coord: usize,
    pub name: String,
    /// Acceleration `ü_i = Σ c_k φ_k`.
    pub drift: Vec<(f64, Form)>,
    pub gain: f64,
    /// `(label, coefficient)` in the normal form `ü + Σ a_k φ_k = gain·Ẇ`,
    /// with the gain under the label `Ẇ`.
    pub params: Vec<(String, f64)>,
    pub text: String,
}

/// A pooled continuum coefficient of a field equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumParam {
    /// e.g. `u_xx` or `u_xxxx`, or a node-sum family label.
    pub label: String,
    /// Coefficient on the right-hand side `ü = value·∂^{2k}u + …`.
    pub value: f64,
    pub spread: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationsOfMotion {
    pub equations: Vec<Equation>,
    /// Field systems only: pooled continuum parameters plus the mean gain (`Ẇ`).
    pub continuum: Vec<ContinuumParam>,
    pub text: String,
}

impl EquationsOfMotion {
    /// Parameter table used for error metrics: per-equation entries (prefixed
    /// with the equation name) for discrete systems, pooled entries for fields.
    pub fn params(&self) -> Vec<(String, f64)> {
        if !self.continuum.is_empty() {
            return self.continuum.iter().map(|c| (c.label.clone(), c.value)).collect();
        }
        self.equations
            .iter()
            .flat_map(|e| e.params.iter().map(move |(l, v)| (format!("{}: {l}", e.name), *v)))
            .collect()
    }
}

fn acceleration_name(naming: &Naming, c: usize) -> String {
    let v = naming.vel(c);
    // second dot
    let mut chars = v.chars();
    let first = chars.next().unwrap_or('u');
    let rest: String = chars.collect();
    format!("{first}\u{308}{}", rest.trim_start_matches('\u{307}'))
}

/// Euler–Lagrange equations of a natural Lagrangian with the given gains
/// (indexed by coordinate).
pub fn derive_equations_of_motion(l: &Lagrangian, coords: &[usize], gains: &[f64]) -> Result<EquationsOfMotion> {
    if !l.is_natural(coords) {
        return Err(Error::Unsupported(
            "equations of motion need L = ½Σu̇² + f(u); the Lagrangian has other velocity terms".into(),
        ));
    }
    let pot = l.potential_terms();
    let mut equations = Vec::with_capacity(coords.len());
    for &c in coords {
        let drift = partial_of_sum(&pot, Var::Pos, c);
        let gain = gains.get(c).copied().unwrap_or(0.0);
        let mut params: Vec<(String, f64)> = drift.iter().map(|(k, f)| (f.label(&l.naming), -k)).collect();
        params.push(("Ẇ".into(), gain));
        let lhs = join_terms(drift.iter().map(|(k, f)| (-k, f.label(&l.naming))).collect());
        let acc = acceleration_name(&l.naming, c);
        let text = if drift.is_empty() {
            format!("{acc} = {}Ẇ", fmt_coef(gain))
        } else if lhs.starts_with('-') {
            format!("{acc} - {} = {}Ẇ", &lhs[1..], fmt_coef(gain))
        } else {
            format!("{acc} + {lhs} = {}Ẇ", fmt_coef(gain))
        };
        equations.push(Equation {
            coord: c,
            name: l.naming.pos(c),
            drift,
            gain,
            params,
            text,
        });
    }
    let continuum = match l.naming {
        Naming::Field { .. } => continuum_params(l, coords, gains),
        Naming::Discrete(_) => vec![],
    };
    let text = if continuum.is_empty() {
        equations.iter().map(|e| e.text.clone()).collect::<Vec<_>>().join("\n")
    } else {
        continuum_text(&l.naming, &continuum)
    };
    Ok(EquationsOfMotion {
        equations,
        continuum,
        text,
    })
}

/// Pools a field Lagrangian by family. A degree-2 spatial family
/// `a·Σ(∂_x^k u)²` contributes `2a(−1)^k ∂_x^{2k}u` to the acceleration.
fn continuum_params(l: &Lagrangian, coords: &[usize], gains: &[f64]) -> Vec<ContinuumParam> {
    let pot = l.potential_terms();
    let mut out = Vec::new();
    for g in group_by_family(&pot, &l.naming) {
        let sample = pot
            .iter()
            .find(|(_, f)| f.family(&l.naming).as_deref() == Some(g.family.as_str()))
            .map(|(_, f)| f.clone());
        let (label, factor) = match sample {
            Some(Form::SpatialMonomial { order, degree: 2, .. }) => {
                let sym = match &l.naming {
                    Naming::Field { symbol, .. } => symbol.clone(),
                    Naming::Discrete(_) => "u".into(),
                };
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                (format!("{sym}_{}", "x".repeat(2 * order as usize)), 2.0 * sign)
            }
            _ => (g.family.clone(), 1.0),
        };
        out.push(ContinuumParam {
            label,
            value: factor * g.mean,
            spread: factor.abs() * g.spread,
            count: g.count,
        });
    }
    let gs: Vec<f64> = coords.iter().map(|&c| gains.get(c).copied().unwrap_or(0.0)).collect();
    let n = gs.len() as f64;
    let mean = gs.iter().sum::<f64>() / n;
    let sd = if gs.len() > 1 {
        (gs.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    out.push(ContinuumParam {
        label: "Ẇ".into(),
        value: mean,
        spread: sd,
        count: gs.len(),
    });
    out
}

fn continuum_text(naming: &Naming, params: &[ContinuumParam]) -> String {
    let sym = match naming {
        Naming::Field { symbol, .. } => symbol.clone(),
        Naming::Discrete(_) => "u".into(),
    };
    let acc = format!("{}\u{308}{}", &sym[..1], &sym[1..]);
    let (gain, rest): (Vec<&ContinuumParam>, Vec<&ContinuumParam>) = params.iter().partition(|p| p.label == "Ẇ");
    let lhs = join_terms(rest.iter().map(|p| (-p.value, p.label.clone())).collect());
    let g = gain.first().map(|p| p.value).unwrap_or(0.0);
    if rest.is_empty() {
        format!("{acc} = {}Ẇ", fmt_coef(g))
    } else if let Some(stripped) = lhs.strip_prefix('-') {
        format!("{acc} - {stripped} = {}Ẇ", fmt_coef(g))
    } else {
        format!("{acc} + {lhs} = {}Ẇ", fmt_coef(g))
    }
}

/// `H = Σ (∂L/∂u̇_i)u̇_i − L`, shifted so that `H(0, 0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianModel {
    pub terms: Vec<(f64, Form)>,
    pub naming: Naming,
    /// `H(0, 0)` before the shift.
    pub offset: f64,
    pub expression: String,
}

impl HamiltonianModel {
    /// Unshifted value.
    pub fn evaluate_raw(&self, u: &[f64], v: &[f64]) -> f64 {
        eval_sum(&self.terms, u, v)
    }

    /// Value with `H(0, 0) = 0`.
    pub fn evaluate(&self, u: &[f64], v: &[f64]) -> f64 {
        self.evaluate_raw(u, v) - self.offset
    }
}

fn max_coord(terms: &[(f64, Form)]) -> usize {
    terms
        .iter()
        .flat_map(|(_, f)| f.dependencies())
        .map(|(_, c)| c + 1)
        .max()
        .unwrap_or(0)
}

/// Legendre transform. A term homogeneous of degree `p` in the velocities
/// maps to `(p − 1)` times itself; only `p ≤ 2` is supported.
pub fn legendre_transform(l: &Lagrangian) -> Result<HamiltonianModel> {
    let mut terms = Vec::new();
    for (c, f) in &l.terms {
        match f.velocity_degree() {
            Some(p @ 0..=2) => {
                let k = (p as f64 - 1.0) * c;
                if k != 0.0 {
                    terms.push((k, f.clone()));
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "term {} is not homogeneous of degree ≤ 2 in the velocities",
                    f.label(&l.naming)
                )))
            }
        }
    }
    let n = max_coord(&terms);
    let zero = vec![0.0; n];
    let offset = eval_sum(&terms, &zero, &zero);
    let expression = Lagrangian::new(terms.clone(), l.naming.clone()).expression();
    Ok(HamiltonianModel {
        terms,
        naming: l.naming.clone(),
        offset,
        expression,
    })
}

/// Lagrangian whose Legendre transform is `h` (inverse of
/// [`legendre_transform`] on terms of velocity degree 0 and 2).
pub fn inverse_legendre(h: &HamiltonianModel) -> Result<Lagrangian> {
    let mut terms = Vec::new();
    for (c, f) in &h.terms {
        match f.velocity_degree() {
            Some(p @ (0 | 2)) => terms.push((c / (p as f64 - 1.0), f.clone())),
            _ => {
                return Err(Error::Unsupported(format!(
                    "term {} cannot be inverted",
                    f.label(&h.naming)
                )))
            }
        }
    }
    Ok(Lagrangian::new(terms, h.naming.clone()))
}

/// `100·‖θ − θ*‖/‖θ‖` over the union of labels; missing entries count as 0.
pub fn relative_error(truth: &[(String, f64)], found: &[(String, f64)]) -> Result<f64> {
    let mut t: BTreeMap<&str, f64> = BTreeMap::new();
    for (l, v) in truth {
        *t.entry(l.as_str()).or_insert(0.0) += v;
    }
    let mut d: BTreeMap<&str, f64> = BTreeMap::new();
    for (l, v) in found {
        *d.entry(l.as_str()).or_insert(0.0) += v;
    }
    let norm = t.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::UndefinedMetric("true parameter vector has zero norm".into()));
    }
    let mut keys: Vec<&str> = t.keys().chain(d.keys()).cloned().collect();
    keys.sort_unstable();
    keys.dedup();
    let diff = keys
        .iter()
        .map(|k| {
            let e = t.get(k).unwrap_or(&0.0) - d.get(k).unwrap_or(&0.0);
            e * e
        })
        .sum::<f64>()
        .sqrt();
    Ok(100.0 * diff / norm)
}

/// Equations of motion of a system's true dynamics.
pub fn true_equations_of_motion(spec: &SystemSpec) -> Result<EquationsOfMotion> {
    derive_equations_of_motion(&spec.lagrangian, &spec.free_coords(), &spec.noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::TrigFn;
    use crate::sim::benchmark_spec;

    fn named(v: &[(&str, f64)]) -> Vec<(String, f64)> {
        v.iter().map(|(l, x)| (l.to_string(), *x)).collect()
    }

    #[test]
    fn relative_error_examples() {
        let t = named(&[("X", 1000.0), ("Ẇ", 1.0)]);
        let d = named(&[("X", 1000.12), ("Ẇ", 1.03)]);
        let e = relative_error(&t, &d).unwrap();
        let want = 100.0 * (0.12f64.powi(2) + 0.03f64.powi(2)).sqrt() / (1000.0f64.powi(2) + 1.0).sqrt();
        assert!((e - want).abs() < 1e-12);
        // The printed coefficients are rounded, so only the scale matches 0.0116.
        assert!((e - 0.0116).abs() < 1e-3);
        assert_eq!(relative_error(&t, &t).unwrap(), 0.0);
        let w = relative_error(&named(&[("c", 4.0), ("g", 2.0)]), &named(&[("c", 4.0013), ("g", 2.13)])).unwrap();
        assert!((w - 2.9069).abs() < 1e-3, "{w}");
        assert_eq!(relative_error(&named(&[("X", 0.0)]), &t).unwrap_err().exit_code(), 1);
        // Missing and extra labels count against the discovery.
        let extra = relative_error(&named(&[("X", 3.0)]), &named(&[("X", 3.0), ("Y", 4.0)])).unwrap();
        assert!((extra - 100.0 * 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn true_equations_in_normal_form() {
        let h = true_equations_of_motion(&benchmark_spec("harmonic").unwrap()).unwrap();
        assert_eq!(h.equations[0].params, named(&[("X", 1000.0), ("Ẇ", 1.0)]));
        assert_eq!(h.text, "X\u{308} + 1000X = 1Ẇ");
        let p = true_equations_of_motion(&benchmark_spec("pendulum").unwrap()).unwrap();
        assert_eq!(p.equations[0].params, named(&[("sin(θ)", 9.81), ("Ẇ", 0.1)]));
        let d = true_equations_of_motion(&benchmark_spec("3dof").unwrap()).unwrap();
        let e1: BTreeMap<String, f64> = d.equations[0].params.iter().cloned().collect();
        assert_eq!(e1["X1"], 1000.0);
        assert_eq!(e1["(X2-X1)"], -1000.0);
        let e3: BTreeMap<String, f64> = d.equations[2].params.iter().cloned().collect();
        assert_eq!(e3["(X3-X2)"], 1000.0);
        let w = true_equations_of_motion(&benchmark_spec("wave").unwrap()).unwrap();
        let c: BTreeMap<String, f64> = w.params().into_iter().collect();
        assert!((c["u_xx"] - 4.0).abs() < 1e-12);
        assert!((c["Ẇ"] - 2.0).abs() < 1e-12);
        let b = true_equations_of_motion(&benchmark_spec("beam").unwrap()).unwrap();
        let c: BTreeMap<String, f64> = b.params().into_iter().collect();
        assert!((c["u_xxxx"] + 0.1035).abs() < 1e-4, "{}", c["u_xxxx"]);
    }

    #[test]
    fn legendre_examples() {
        let n = Naming::Discrete(vec!["X".into()]);
        let l = Lagrangian::new(
            vec![(1.0, Form::Kinetic { coord: 0 }), (-500.06, Form::Monomial { coord: 0, degree: 2 })],
            n.clone(),
        );
        let h = legendre_transform(&l).unwrap();
        assert_eq!(h.expression, "0.5X\u{307}^2 + 500.0600X^2");
        assert!((h.evaluate(&[0.5], &[0.0]) - 125.015).abs() < 1e-12);
        assert_eq!(inverse_legendre(&h).unwrap(), l);
        let t = Naming::Discrete(vec!["θ".into()]);
        let cos = Form::Trig { func: TrigFn::Cos, var: Var::Pos, coord: 0, freq: 1.0 };
        let l = Lagrangian::new(vec![(1.0, Form::Kinetic { coord: 0 }), (-9.8, cos)], t);
        let h = legendre_transform(&l).unwrap();
        assert_eq!(h.expression, "0.5θ\u{307}^2 + 9.8000cos(θ)");
        assert_eq!(h.evaluate(&[0.0], &[0.0]), 0.0);
        let free = Lagrangian::new(vec![(1.0, Form::Kinetic { coord: 0 })], n.clone());
        assert_eq!(legendre_transform(&free).unwrap().terms, free.terms);
        let bad = Lagrangian::new(vec![(1.0, Form::VelocityMonomial { coord: 0, degree: 3 })], n);
        assert_eq!(legendre_transform(&bad).unwrap_err().exit_code(), 5);
    }

    #[test]
    fn velocity_terms_block_equations() {
        let n = Naming::Discrete(vec!["X".into()]);
        let l = Lagrangian::new(
            vec![(1.0, Form::Kinetic { coord: 0 }), (0.1, Form::VelocityMonomial { coord: 0, degree: 3 })],
            n,
        );
        assert!(matches!(derive_equations_of_motion(&l, &[0], &[1.0]), Err(Error::Unsupported(_))));
    }
}
