//! Candidate libraries and the ensemble-averaged Euler–Lagrange features.
//!
//! A library is an ordered list of [`Form`]s over the system's free
//! coordinates. Discovery works particle by particle: [`LibrarySet::for_particle`]
//! keeps the bases that touch one coordinate, [`el_transform`] turns each into
//! the column `E[d/dt ∂D/∂u̇_i − ∂D/∂u_i]`, and [`split_kinetic`] pulls out the
//! `½u̇_i²` column as the regression label.

use crate::basis::{partial_of_sum, simplify, Form, Naming, TrigFn, Var};
use crate::error::{Error, Result};
use crate::model::Lagrangian;
use crate::numdiff::{time_derivative_into, TimeDerivative};
use crate::regression::Matrix;
use crate::sim::{Ensemble, SystemKind, SystemSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One candidate with its printable label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub label: String,
    pub form: Form,
}

/// A per-coordinate (or per-node) term generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    /// `½u̇²`.
    Kinetic,
    /// `u^d`.
    Position { degree: u32 },
    /// `u̇^d`.
    Velocity { degree: u32 },
    /// `sin(k·w)` / `cos(k·w)`.
    Trig { func: TrigFn, var: Var, freq: f64 },
    /// `w|w|`.
    AbsProduct { var: Var },
    /// `(∂_x^order u)^degree` at the node (fields only).
    Spatial { order: u32, degree: u32 },
}

/// Library composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryOptions {
    /// Include the constant basis `1`.
    #[serde(default)]
    pub constant: bool,
    /// Generated once per free coordinate.
    #[serde(default)]
    pub per_coordinate: Vec<TermSpec>,
    /// Degrees of adjacent-coordinate differences `(u_{c} − u_{c−1})^d`.
    #[serde(default)]
    pub differences: Vec<u32>,
    /// Terms summed over all free nodes, e.g. `Σ_i u_i³`.
    #[serde(default)]
    pub node_sums: Vec<TermSpec>,
}

fn pos(d: u32) -> TermSpec {
    TermSpec::Position { degree: d }
}
fn vel(d: u32) -> TermSpec {
    TermSpec::Velocity { degree: d }
}
fn trig(func: TrigFn, var: Var, freq: f64) -> TermSpec {
    TermSpec::Trig { func, var, freq }
}
fn vel_trig(func: TrigFn, freqs: std::ops::RangeInclusive<u32>) -> Vec<TermSpec> {
    freqs.map(|k| trig(func, Var::Vel, k as f64)).collect()
}
fn interleaved_vel_trig(n: u32) -> Vec<TermSpec> {
    (1..=n)
        .flat_map(|k| [trig(TrigFn::Sin, Var::Vel, k as f64), trig(TrigFn::Cos, Var::Vel, k as f64)])
        .collect()
}

impl LibraryOptions {
    /// Kinetic energy plus position monomials `u, …, u^cap`.
    pub fn with_degree_cap(cap: u32) -> Result<Self> {
        if cap < 2 {
            return Err(Error::InvalidArgument(format!(
                "degree cap {cap} < 2 leaves no room for the kinetic term"
            )));
        }
        let mut per = vec![TermSpec::Kinetic];
        per.extend((1..=cap).map(pos));
        Ok(LibraryOptions {
            constant: false,
            per_coordinate: per,
            differences: vec![],
            node_sums: vec![],
        })
    }

    /// Default Lagrangian library for a benchmark (25 / 25 / 15 / 50 / 254 / 421
    /// bases); other names get a quartic polynomial library.
    pub fn lagrangian_default(system: &str) -> Self {
        use TrigFn::{Cos, Sin};
        match system {
            "harmonic" | "pendulum" => {
                let mut per = vec![pos(1), pos(2), pos(3), TermSpec::Kinetic, vel(1), vel(3)];
                per.push(trig(Sin, Var::Pos, 1.0));
                per.push(trig(Cos, Var::Pos, 1.0));
                per.extend(interleaved_vel_trig(7));
                per.push(TermSpec::AbsProduct { var: Var::Pos });
                per.push(TermSpec::AbsProduct { var: Var::Vel });
                LibraryOptions {
                    constant: true,
                    per_coordinate: per,
                    differences: vec![],
                    node_sums: vec![],
                }
            }
            "duffing" => {
                let mut per = vec![pos(1), pos(2), pos(3), pos(4), TermSpec::Kinetic, vel(1), vel(3)];
                per.extend(interleaved_vel_trig(3));
                per.push(TermSpec::AbsProduct { var: Var::Vel });
                LibraryOptions {
                    constant: true,
                    per_coordinate: per,
                    differences: vec![],
                    node_sums: vec![],
                }
            }
            "3dof" => {
                let mut per = vec![pos(1), pos(2), pos(3), TermSpec::Kinetic, vel(1), vel(3)];
                per.push(trig(Sin, Var::Pos, 1.0));
                per.push(trig(Cos, Var::Pos, 1.0));
                per.extend(interleaved_vel_trig(2));
                per.push(TermSpec::AbsProduct { var: Var::Pos });
                per.push(TermSpec::AbsProduct { var: Var::Vel });
                LibraryOptions {
                    constant: false,
                    per_coordinate: per,
                    differences: vec![1, 2, 3, 4],
                    node_sums: vec![],
                }
            }
            "wave" => {
                let mut sums = vec![
                    pos(3),
                    trig(Sin, Var::Pos, 1.0),
                    TermSpec::AbsProduct { var: Var::Pos },
                    vel(3),
                    TermSpec::AbsProduct { var: Var::Vel },
                ];
                sums.extend(vel_trig(Sin, 1..=49));
                LibraryOptions {
                    constant: false,
                    per_coordinate: vec![TermSpec::Kinetic, TermSpec::Spatial { order: 1, degree: 2 }],
                    differences: vec![],
                    node_sums: sums,
                }
            }
            "beam" => {
                let mut sums = vec![
                    TermSpec::AbsProduct { var: Var::Pos },
                    vel(3),
                    TermSpec::AbsProduct { var: Var::Vel },
                ];
                sums.extend(vel_trig(Sin, 1..=18));
                LibraryOptions {
                    constant: false,
                    per_coordinate: vec![
                        TermSpec::Kinetic,
                        TermSpec::Spatial { order: 2, degree: 2 },
                        pos(3),
                        trig(Sin, Var::Pos, 1.0),
                    ],
                    differences: vec![],
                    node_sums: sums,
                }
            }
            _ => Self::with_degree_cap(4).expect("cap 4 is valid"),
        }
    }

    /// Default squared-potential library (12 / 12 / 12 / 17 / 204 / 200 bases).
    pub fn diffusion_default(system: &str) -> Self {
        use TrigFn::{Cos, Sin};
        match system {
            "3dof" => LibraryOptions {
                constant: false,
                per_coordinate: vec![pos(1), vel(1), pos(2), vel(2), pos(3)],
                differences: vec![3],
                node_sums: vec![],
            },
            "wave" => LibraryOptions {
                constant: false,
                per_coordinate: vec![pos(2), pos(4)],
                differences: vec![],
                node_sums: vec![
                    pos(3),
                    trig(Sin, Var::Pos, 1.0),
                    TermSpec::AbsProduct { var: Var::Pos },
                    trig(Cos, Var::Vel, 1.0),
                ],
            },
            "beam" => LibraryOptions {
                constant: false,
                per_coordinate: vec![pos(2), pos(4)],
                differences: vec![],
                node_sums: vec![],
            },
            _ => LibraryOptions {
                constant: false,
                per_coordinate: vec![
                    pos(1),
                    vel(1),
                    pos(2),
                    vel(2),
                    pos(3),
                    pos(4),
                    trig(Sin, Var::Pos, 1.0),
                    trig(Sin, Var::Vel, 1.0),
                    trig(Cos, Var::Vel, 1.0),
                    TermSpec::AbsProduct { var: Var::Pos },
                    TermSpec::AbsProduct { var: Var::Vel },
                    vel(3),
                ],
                differences: vec![],
                node_sums: vec![],
            },
        }
    }

    fn is_empty(&self) -> bool {
        !self.constant && self.per_coordinate.is_empty() && self.differences.is_empty() && self.node_sums.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LibraryKind {
    Lagrangian,
    Diffusion,
}

/// The full library over all free coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibrarySet {
    pub kind: LibraryKind,
    pub system: String,
    pub coords: Vec<usize>,
    pub naming: Naming,
    pub bases: Vec<BasisDescriptor>,
}

/// Bases relevant to one particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLibrary {
    pub target_coord: usize,
    pub bases: Vec<BasisDescriptor>,
    /// Position of `½u̇_i²` (Lagrangian libraries only).
    pub kinetic_index: Option<usize>,
    /// Index of each basis in the parent [`LibrarySet`].
    pub global_index: Vec<usize>,
}

impl CandidateLibrary {
    pub fn len(&self) -> usize {
        self.bases.len()
    }
    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
    pub fn labels(&self) -> Vec<String> {
        self.bases.iter().map(|b| b.label.clone()).collect()
    }
}

fn expand(term: &TermSpec, coord: usize, stencil: Option<&(usize, Vec<(usize, f64)>)>) -> Result<Form> {
    Ok(match term {
        TermSpec::Kinetic => Form::Kinetic { coord },
        TermSpec::Position { degree } => Form::Monomial { coord, degree: *degree },
        TermSpec::Velocity { degree } => Form::VelocityMonomial { coord, degree: *degree },
        TermSpec::Trig { func, var, freq } => Form::Trig {
            func: *func,
            var: *var,
            coord,
            freq: *freq,
        },
        TermSpec::AbsProduct { var } => Form::AbsProduct { var: *var, coord },
        TermSpec::Spatial { order, degree } => {
            let (node, st) = stencil.ok_or_else(|| {
                Error::InvalidArgument("spatial terms need a field system".into())
            })?;
            Form::SpatialMonomial {
                node: *node,
                order: *order,
                degree: *degree,
                stencil: st.clone(),
            }
        }
    })
}

fn spatial_orders(terms: &[TermSpec]) -> BTreeSet<u32> {
    terms
        .iter()
        .filter_map(|t| match t {
            TermSpec::Spatial { order, .. } => Some(*order),
            _ => None,
        })
        .collect()
}

fn build(spec: &SystemSpec, opts: &LibraryOptions, kind: LibraryKind) -> Result<LibrarySet> {
    if opts.is_empty() {
        return Err(Error::InvalidArgument("library options are empty".into()));
    }
    if kind == LibraryKind::Lagrangian && !opts.per_coordinate.contains(&TermSpec::Kinetic) {
        return Err(Error::InvalidArgument("the kinetic term ½u̇² must be in the library".into()));
    }
    if opts.differences.contains(&0) || opts.per_coordinate.iter().chain(&opts.node_sums).any(|t| {
        matches!(t, TermSpec::Position { degree: 0 } | TermSpec::Velocity { degree: 0 } | TermSpec::Spatial { degree: 0, .. })
    }) {
        return Err(Error::InvalidArgument("degree-0 terms duplicate the constant; use `constant`".into()));
    }
    let coords = spec.free_coords();
    let naming = spec.naming().clone();
    let orders = spatial_orders(&opts.per_coordinate).union(&spatial_orders(&opts.node_sums)).cloned().collect::<Vec<_>>();
    let mut stencils = std::collections::BTreeMap::new();
    for o in orders {
        if spec.kind != SystemKind::ContinuousSpde {
            return Err(Error::InvalidArgument("spatial terms need a field system".into()));
        }
        let s = crate::sim::spatial_stencils(spec, o)?;
        if s.len() != coords.len() {
            return Err(Error::Config("stencil count does not match free nodes".into()));
        }
        stencils.insert(o, s);
    }
    let stencil_for = |t: &TermSpec, k: usize| match t {
        TermSpec::Spatial { order, .. } => stencils.get(order).map(|s| &s[k]),
        _ => None,
    };
    let mut forms = Vec::new();
    if opts.constant {
        forms.push(Form::Constant);
    }
    for (k, &c) in coords.iter().enumerate() {
        for t in &opts.per_coordinate {
            forms.push(expand(t, c, stencil_for(t, k))?);
        }
    }
    for &d in &opts.differences {
        for w in coords.windows(2) {
            forms.push(Form::DifferenceMonomial { a: w[1], b: w[0], degree: d });
        }
    }
    let family_naming = naming.unindexed();
    for t in &opts.node_sums {
        let members = coords
            .iter()
            .enumerate()
            .map(|(k, &c)| expand(t, c, stencil_for(t, k)))
            .collect::<Result<Vec<_>>>()?;
        let family = members[0].label(&family_naming);
        forms.push(Form::NodeSum { family, members });
    }
    let bases: Vec<BasisDescriptor> = forms
        .into_iter()
        .map(|f| BasisDescriptor {
            label: f.label(&naming),
            form: f,
        })
        .collect();
    let mut seen = BTreeSet::new();
    for b in &bases {
        if !seen.insert(b.label.as_str()) {
            return Err(Error::InvalidArgument(format!("duplicate basis `{}`", b.label)));
        }
    }
    Ok(LibrarySet {
        kind,
        system: spec.name.clone(),
        coords,
        naming,
        bases,
    })
}

/// Candidate Lagrangian terms for every particle of `spec`.
pub fn build_lagrangian_library(spec: &SystemSpec, opts: &LibraryOptions) -> Result<LibrarySet> {
    build(spec, opts, LibraryKind::Lagrangian)
}

/// Candidate squared Wiener potentials for every particle of `spec`.
pub fn build_diffusion_library(spec: &SystemSpec, opts: &LibraryOptions) -> Result<LibrarySet> {
    build(spec, opts, LibraryKind::Diffusion)
}

impl LibrarySet {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.bases.iter().map(|b| b.label.clone()).collect()
    }

    /// Bases that depend on `coord`, plus coordinate-free ones (the constant).
    pub fn for_particle(&self, coord: usize) -> Result<CandidateLibrary> {
        if !self.coords.contains(&coord) {
            return Err(Error::InvalidArgument(format!("coordinate {coord} is not a free coordinate")));
        }
        let mut bases = Vec::new();
        let mut global_index = Vec::new();
        let mut kinetic_index = None;
        for (g, b) in self.bases.iter().enumerate() {
            if b.form.depends_on(coord) || b.form.dependencies().is_empty() {
                if b.form == (Form::Kinetic { coord }) {
                    kinetic_index = Some(bases.len());
                }
                bases.push(b.clone());
                global_index.push(g);
            }
        }
        if self.kind == LibraryKind::Lagrangian {
            if kinetic_index.is_none() {
                return Err(Error::InvalidArgument(format!("no kinetic basis for coordinate {coord}")));
            }
            if bases.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "library for coordinate {coord} has only the kinetic basis"
                )));
            }
        }
        Ok(CandidateLibrary {
            target_coord: coord,
            bases,
            kinetic_index,
            global_index,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evaluates a basis over one realization of an ensemble.
pub fn eval_basis(form: &Form, ens: &Ensemble, realization: usize) -> Result<Vec<f64>> {
    if realization >= ens.n_real {
        return Err(Error::InvalidArgument(format!("realization {realization} out of range")));
    }
    if let Some((_, c)) = form.dependencies().into_iter().find(|(_, c)| *c >= ens.coords) {
        return Err(Error::Schema(format!("basis references coordinate {c}, ensemble has {}", ens.coords)));
    }
    let mut out = vec![0.0; ens.n_steps];
    form.accumulate(1.0, &ens.realization(realization), &mut out);
    Ok(out)
}

/// `N_t × m` matrix of ensemble-averaged Euler–Lagrange (or diffusion) columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ElFeatureMatrix {
    pub labels: Vec<String>,
    pub values: Matrix,
}

fn check_coords(lib: &CandidateLibrary, ens: &Ensemble) -> Result<()> {
    if ens.n_steps < 3 {
        return Err(Error::InvalidArgument("ensemble needs at least 3 samples".into()));
    }
    for b in &lib.bases {
        if b.form.dependencies().iter().any(|(_, c)| *c >= ens.coords) {
            return Err(Error::Schema(format!("basis `{}` references a missing coordinate", b.label)));
        }
    }
    Ok(())
}

/// `E[d/dt g(t) − h(t)]` per time index, where `g = Σ ∂/∂u̇` and `h = Σ ∂/∂u`
/// terms, differentiating each realization before averaging.
fn el_column(
    dmom: &[(f64, Form)],
    dpos: &[(f64, Form)],
    ens: &Ensemble,
    deriv: TimeDerivative,
    col: &mut [f64],
    scratch: (&mut [f64], &mut [f64]),
) {
    let (p, d) = scratch;
    col.iter_mut().for_each(|x| *x = 0.0);
    for r in 0..ens.n_real {
        let s = ens.realization(r);
        if !dmom.is_empty() {
            p.iter_mut().for_each(|x| *x = 0.0);
            for (c, f) in dmom {
                f.accumulate(*c, &s, p);
            }
            time_derivative_into(deriv, p, ens.dt, d);
            col.iter_mut().zip(d.iter()).for_each(|(a, b)| *a += b);
        }
        for (c, f) in dpos {
            f.accumulate(-c, &s, col);
        }
    }
    let k = 1.0 / ens.n_real as f64;
    col.iter_mut().for_each(|x| *x *= k);
}

fn finite_or_err(m: &Matrix, labels: &[String]) -> Result<()> {
    for (j, l) in labels.iter().enumerate() {
        if m.col(j).iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite values in column `{l}`")));
        }
    }
    Ok(())
}

/// Euler–Lagrange columns `E[d/dt ∂D/∂u̇_i − ∂D/∂u_i]` for particle
/// `lib.target_coord`.
pub fn el_transform(lib: &CandidateLibrary, ens: &Ensemble, deriv: TimeDerivative) -> Result<ElFeatureMatrix> {
    check_coords(lib, ens)?;
    let i = lib.target_coord;
    let n = ens.n_steps;
    let mut values = Matrix::zeros(n, lib.len());
    let (mut p, mut d) = (vec![0.0; n], vec![0.0; n]);
    for (j, b) in lib.bases.iter().enumerate() {
        let dm = b.form.partial(Var::Vel, i);
        let dp = b.form.partial(Var::Pos, i);
        el_column(&dm, &dp, ens, deriv, values.col_mut(j), (&mut p, &mut d));
    }
    let labels = lib.labels();
    finite_or_err(&values, &labels)?;
    Ok(ElFeatureMatrix { labels, values })
}

/// Diffusion columns `E[½ ∂²Φ/∂u_i²]`: for `Φ = u_i²` the column is all ones,
/// so a constant gain `g` appears as the coefficient `g²`.
pub fn diffusion_features(lib: &CandidateLibrary, ens: &Ensemble) -> Result<ElFeatureMatrix> {
    check_coords(lib, ens)?;
    let i = lib.target_coord;
    let n = ens.n_steps;
    let mut values = Matrix::zeros(n, lib.len());
    let k = 1.0 / ens.n_real as f64;
    for (j, b) in lib.bases.iter().enumerate() {
        let second = simplify(partial_of_sum(&b.form.partial(Var::Pos, i), Var::Pos, i));
        let col = values.col_mut(j);
        for r in 0..ens.n_real {
            let s = ens.realization(r);
            for (c, f) in &second {
                f.accumulate(0.5 * c * k, &s, col);
            }
        }
    }
    let labels = lib.labels();
    finite_or_err(&values, &labels)?;
    Ok(ElFeatureMatrix { labels, values })
}

/// Per time index, `E[r]` and `E[r²]` of the Euler–Lagrange residual
/// `r = d/dt ∂L/∂u̇_i − ∂L/∂u_i` of `l` along each realization.
pub fn el_residual_moments(
    l: &Lagrangian,
    coord: usize,
    ens: &Ensemble,
    deriv: TimeDerivative,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if l.terms.iter().any(|(_, f)| f.dependencies().iter().any(|(_, c)| *c >= ens.coords)) {
        return Err(Error::Schema("Lagrangian references a coordinate missing from the ensemble".into()));
    }
    let n = ens.n_steps;
    let dm = partial_of_sum(&l.terms, Var::Vel, coord);
    let dp = partial_of_sum(&l.terms, Var::Pos, coord);
    let (mut mean, mut sq) = (vec![0.0; n], vec![0.0; n]);
    let (mut p, mut d, mut res) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for r in 0..ens.n_real {
        let s = ens.realization(r);
        p.iter_mut().for_each(|x| *x = 0.0);
        for (c, f) in &dm {
            f.accumulate(*c, &s, &mut p);
        }
        time_derivative_into(deriv, &p, ens.dt, &mut d);
        res.copy_from_slice(&d);
        for (c, f) in &dp {
            f.accumulate(-c, &s, &mut res);
        }
        for t in 0..n {
            mean[t] += res[t];
            sq[t] += res[t] * res[t];
        }
    }
    let k = 1.0 / ens.n_real as f64;
    mean.iter_mut().chain(sq.iter_mut()).for_each(|x| *x *= k);
    if sq.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite Euler–Lagrange residual".into()));
    }
    Ok((mean, sq))
}

/// Label column (the kinetic basis) and the remaining feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticSplit {
    /// `E[d/dt u̇_i] = E[ü_i]`.
    pub label: Vec<f64>,
    pub features: Matrix,
    pub feature_labels: Vec<String>,
    /// Position of each feature column in the candidate library.
    pub feature_index: Vec<usize>,
}

/// Separates the kinetic column. With `L_i = ½u̇_i² + Σ_k C_k D_k` the
/// Euler–Lagrange equation reads `label + features·C = 0`, so the regression
/// to solve is `features·C = −label`.
pub fn split_kinetic(fm: &ElFeatureMatrix, lib: &CandidateLibrary) -> Result<KineticSplit> {
    let k = lib
        .kinetic_index
        .ok_or_else(|| Error::InvalidArgument("library has no kinetic basis".into()))?;
    if k >= fm.values.cols() || fm.values.cols() != lib.len() {
        return Err(Error::InvalidArgument("feature matrix does not match the library".into()));
    }
    let keep: Vec<usize> = (0..lib.len()).filter(|&j| j != k).collect();
    Ok(KineticSplit {
        label: fm.values.col(k).to_vec(),
        features: fm.values.select_columns(&keep),
        feature_labels: keep.iter().map(|&j| fm.labels[j].clone()).collect(),
        feature_index: keep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{benchmark_spec, generate_ensemble};

    fn sizes(name: &str) -> (usize, usize) {
        let s = benchmark_spec(name).unwrap();
        let l = build_lagrangian_library(&s, &LibraryOptions::lagrangian_default(name)).unwrap();
        let d = build_diffusion_library(&s, &LibraryOptions::diffusion_default(name)).unwrap();
        (l.len(), d.len())
    }

    #[test]
    fn default_sizes() {
        assert_eq!(sizes("harmonic"), (25, 12));
        assert_eq!(sizes("pendulum"), (25, 12));
        assert_eq!(sizes("duffing"), (15, 12));
        assert_eq!(sizes("3dof"), (50, 17));
        assert_eq!(sizes("wave"), (254, 204));
        assert_eq!(sizes("beam"), (421, 200));
    }

    #[test]
    fn expected_members() {
        let s = benchmark_spec("harmonic").unwrap();
        let l = build_lagrangian_library(&s, &LibraryOptions::lagrangian_default("harmonic")).unwrap();
        let labels = l.labels();
        for want in ["0.5X\u{307}^2", "X^2", "cos(X)"] {
            assert!(labels.iter().any(|x| x == want), "{want}");
        }
        let s = benchmark_spec("3dof").unwrap();
        let l = build_lagrangian_library(&s, &LibraryOptions::lagrangian_default("3dof")).unwrap();
        let labels = l.labels();
        assert!(labels.contains(&"(X2-X1)^2".to_string()));
        assert!(labels.contains(&"(X3-X2)^2".to_string()));
        let s = benchmark_spec("beam").unwrap();
        let l = build_lagrangian_library(&s, &LibraryOptions::lagrangian_default("beam")).unwrap();
        let labels = l.labels();
        assert!(labels.contains(&"0.5u\u{307}[7]^2".to_string()));
        assert!(labels.contains(&"(u_xx[7])^2".to_string()));
    }

    #[test]
    fn option_errors() {
        assert!(LibraryOptions::with_degree_cap(1).is_err());
        let s = benchmark_spec("harmonic").unwrap();
        let empty = LibraryOptions {
            constant: false,
            per_coordinate: vec![],
            differences: vec![],
            node_sums: vec![],
        };
        assert_eq!(build_diffusion_library(&s, &empty).unwrap_err().exit_code(), 2);
        let no_kinetic = LibraryOptions {
            per_coordinate: vec![pos(2)],
            ..empty.clone()
        };
        assert!(build_lagrangian_library(&s, &no_kinetic).is_err());
        let spatial = LibraryOptions {
            per_coordinate: vec![TermSpec::Kinetic, TermSpec::Spatial { order: 1, degree: 2 }],
            ..empty
        };
        assert!(build_lagrangian_library(&s, &spatial).is_err());
    }

    #[test]
    fn particle_views() {
        let s = benchmark_spec("harmonic").unwrap();
        let l = build_lagrangian_library(&s, &LibraryOptions::lagrangian_default("harmonic")).unwrap();
        let p = l.for_particle(0).unwrap();
        assert_eq!(p.len(), 25);
        let s = benchmark_spec("wave").unwrap();
        let l = build_lagrangian_library(&s, &LibraryOptions::lagrangian_default("wave")).unwrap();
        let p = l.for_particle(5).unwrap();
        // kinetic, two edges, 54 node sums
        assert_eq!(p.len(), 57);
        assert!(l.for_particle(100).is_err());
    }

    #[test]
    fn eval_basis_examples() {
        let ens = Ensemble {
            system: "3dof".into(),
            dt: 0.1,
            n_steps: 4,
            n_real: 1,
            coords: 2,
            displacement: vec![0.25; 4].into_iter().chain(vec![0.5; 4]).collect(),
            velocity: vec![0.0; 8],
            spatial_grid: None,
            naming: Naming::Discrete(vec!["X1".into(), "X2".into()]),
        };
        let sq = eval_basis(&Form::Monomial { coord: 1, degree: 2 }, &ens, 0).unwrap();
        assert!(sq.iter().all(|x| *x == 0.25));
        let cos = Form::Trig { func: TrigFn::Cos, var: Var::Vel, coord: 0, freq: 1.0 };
        assert!(eval_basis(&cos, &ens, 0).unwrap().iter().all(|x| *x == 1.0));
        let d = eval_basis(&Form::DifferenceMonomial { a: 1, b: 0, degree: 2 }, &ens, 0).unwrap();
        assert!(d.iter().all(|x| *x == 0.0625));
        assert_eq!(
            eval_basis(&Form::Monomial { coord: 5, degree: 1 }, &ens, 0).unwrap_err().exit_code(),
            4
        );
    }

    #[test]
    fn kinetic_column_is_acceleration() {
        // Deterministic harmonic: E[d/dt Ẋ] = Ẍ = −1000 X.
        let spec = benchmark_spec("harmonic").unwrap().with_noise_scale(0.0);
        let ens = generate_ensemble(&spec, 1e-4, 0.2, 1, 0).unwrap();
        let l = build_lagrangian_library(&spec, &LibraryOptions::lagrangian_default("harmonic")).unwrap();
        let lib = l.for_particle(0).unwrap();
        let fm = el_transform(&lib, &ens, TimeDerivative::Central).unwrap();
        let split = split_kinetic(&fm, &lib).unwrap();
        assert_eq!(split.features.cols(), 24);
        let x = ens.pos(0, 0);
        let scale = 1000.0 * 0.5;
        for t in 1..ens.n_steps - 1 {
            assert!((split.label[t] + 1000.0 * x[t]).abs() < 1e-3 * scale, "t={t}");
        }
        let j = lib.labels().iter().position(|s| s == "X^2").unwrap();
        for t in 0..ens.n_steps {
            assert!((fm.values.col(j)[t] + 2.0 * x[t]).abs() < 1e-14);
        }
        let c = lib.labels().iter().position(|s| s == "1").unwrap();
        assert!(fm.values.col(c).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn toy_split() {
        let spec = benchmark_spec("harmonic").unwrap();
        let ens = generate_ensemble(&spec, 1e-3, 0.01, 2, 1).unwrap();
        let opts = LibraryOptions::with_degree_cap(2).unwrap();
        let opts = LibraryOptions {
            per_coordinate: vec![TermSpec::Kinetic, pos(2)],
            ..opts
        };
        let l = build_lagrangian_library(&spec, &opts).unwrap();
        let lib = l.for_particle(0).unwrap();
        let fm = el_transform(&lib, &ens, TimeDerivative::Central).unwrap();
        let sp = split_kinetic(&fm, &lib).unwrap();
        assert_eq!(sp.features.cols(), 1);
        assert_eq!(sp.feature_labels, vec!["X^2".to_string()]);
    }
}
