//! Symbolic candidate energy functions.
//!
//! A [`Form`] is one term of a candidate Lagrangian or squared Wiener
//! potential. The family is closed under `∂/∂u_i` and `∂/∂u̇_i`: every partial
//! derivative is returned as a finite sum of forms, so Euler–Lagrange columns,
//! equations of motion and Hamiltonians can all be produced analytically.

use serde::{Deserialize, Serialize};

/// Position or velocity argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Var {
    Pos,
    Vel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigFn {
    Sin,
    Cos,
}

/// One symbolic term. Coordinates index the ensemble's coordinate axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Form {
    Constant,
    /// `½ u̇_c²`.
    Kinetic { coord: usize },
    /// `u_c^d`.
    Monomial { coord: usize, degree: u32 },
    /// `u̇_c^d`.
    VelocityMonomial { coord: usize, degree: u32 },
    /// `(u_a − u_b)^d`.
    DifferenceMonomial { a: usize, b: usize, degree: u32 },
    /// `(Σ_k w_k u_{c_k})^d`: a finite-difference estimate of the `order`-th
    /// spatial derivative at grid point `node`, raised to `degree`.
    SpatialMonomial {
        node: usize,
        order: u32,
        degree: u32,
        stencil: Vec<(usize, f64)>,
    },
    /// `sin(k·w)` or `cos(k·w)` with `w` the position or velocity of `coord`.
    Trig {
        func: TrigFn,
        var: Var,
        coord: usize,
        freq: f64,
    },
    /// `w|w|`.
    AbsProduct { var: Var, coord: usize },
    /// `|w|`.
    Abs { var: Var, coord: usize },
    /// `sgn(w)`.
    Sign { var: Var, coord: usize },
    /// Sum of one per-node family over a set of nodes, e.g. `Σ_i u_i³`.
    NodeSum { family: String, members: Vec<Form> },
}

/// Read access to one realization's time series.
pub trait Series {
    fn pos(&self, coord: usize) -> &[f64];
    fn vel(&self, coord: usize) -> &[f64];
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How coordinates are printed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Naming {
    /// One name per coordinate, e.g. `X`, `θ`, `X1`.
    Discrete(Vec<String>),
    /// Grid field `u`; node indices printed as `u[i]` unless `indexed` is false
    /// (used for family keys).
    Field { symbol: String, indexed: bool },
}

impl Naming {
    pub fn field(symbol: &str) -> Self {
        Naming::Field {
            symbol: symbol.to_string(),
            indexed: true,
        }
    }

    /// Same naming with node indices suppressed.
    pub fn unindexed(&self) -> Self {
        match self {
            Naming::Field { symbol, .. } => Naming::Field {
                symbol: symbol.clone(),
                indexed: false,
            },
            d => d.clone(),
        }
    }

    pub fn pos(&self, c: usize) -> String {
        match self {
            Naming::Discrete(v) => v.get(c).cloned().unwrap_or_else(|| format!("q{c}")),
            Naming::Field { symbol, indexed } => {
                if *indexed {
                    format!("{symbol}[{c}]")
                } else {
                    symbol.clone()
                }
            }
        }
    }

    /// Velocity name: combining dot above the leading symbol (`Ẋ`, `θ̇`, `u̇[3]`).
    pub fn vel(&self, c: usize) -> String {
        dotted(&self.pos(c))
    }

    fn spatial(&self, order: u32, node: usize) -> String {
        let sub = "x".repeat(order as usize);
        match self {
            Naming::Discrete(_) => format!("D{order}[{node}]"),
            Naming::Field { symbol, indexed } => {
                if *indexed {
                    format!("{symbol}_{sub}[{node}]")
                } else {
                    format!("{symbol}_{sub}")
                }
            }
        }
    }
}

fn dotted(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(first) => {
            let mut s = String::new();
            s.push(first);
            s.push('\u{307}');
            s.extend(chars);
            s
        }
        None => String::new(),
    }
}

fn pow_suffix(d: u32) -> String {
    if d == 1 {
        String::new()
    } else {
        format!("^{d}")
    }
}

/// Prints a multiplier without a trailing `.0`.
pub(crate) fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn var_name(n: &Naming, var: Var, c: usize) -> String {
    match var {
        Var::Pos => n.pos(c),
        Var::Vel => n.vel(c),
    }
}

fn lower(form: Form, d: u32) -> Form {
    if d == 0 {
        Form::Constant
    } else {
        form
    }
}

impl Form {
    /// Printable label.
    pub fn label(&self, n: &Naming) -> String {
        match self {
            Form::Constant => "1".into(),
            Form::Kinetic { coord } => format!("0.5{}^2", n.vel(*coord)),
            Form::Monomial { coord, degree } => format!("{}{}", n.pos(*coord), pow_suffix(*degree)),
            Form::VelocityMonomial { coord, degree } => format!("{}{}", n.vel(*coord), pow_suffix(*degree)),
            Form::DifferenceMonomial { a, b, degree } => {
                format!("({}-{}){}", n.pos(*a), n.pos(*b), pow_suffix(*degree))
            }
            Form::SpatialMonomial { node, order, degree, .. } => {
                if *degree == 1 {
                    n.spatial(*order, *node)
                } else {
                    format!("({}){}", n.spatial(*order, *node), pow_suffix(*degree))
                }
            }
            Form::Trig { func, var, coord, freq } => {
                let f = match func {
                    TrigFn::Sin => "sin",
                    TrigFn::Cos => "cos",
                };
                let k = if *freq == 1.0 { String::new() } else { fmt_num(*freq) };
                format!("{f}({k}{})", var_name(n, *var, *coord))
            }
            Form::AbsProduct { var, coord } => {
                let w = var_name(n, *var, *coord);
                format!("{w}|{w}|")
            }
            Form::Abs { var, coord } => format!("|{}|", var_name(n, *var, *coord)),
            Form::Sign { var, coord } => format!("sgn({})", var_name(n, *var, *coord)),
            Form::NodeSum { family, .. } => format!("Σ{family}"),
        }
    }

    /// Key shared by all per-node members of one family (`(u_x)^2`, `u^3`, …);
    /// `None` for node sums and constants.
    pub fn family(&self, n: &Naming) -> Option<String> {
        match self {
            Form::Constant | Form::NodeSum { .. } => None,
            _ => Some(self.label(&n.unindexed())),
        }
    }

    /// `(var, coord)` pairs the form depends on.
    pub fn dependencies(&self) -> Vec<(Var, usize)> {
        match self {
            Form::Constant => vec![],
            Form::Kinetic { coord } | Form::VelocityMonomial { coord, .. } => vec![(Var::Vel, *coord)],
            Form::Monomial { coord, .. } => vec![(Var::Pos, *coord)],
            Form::DifferenceMonomial { a, b, .. } => vec![(Var::Pos, *a), (Var::Pos, *b)],
            Form::SpatialMonomial { stencil, .. } => stencil.iter().map(|(c, _)| (Var::Pos, *c)).collect(),
            Form::Trig { var, coord, .. }
            | Form::AbsProduct { var, coord }
            | Form::Abs { var, coord }
            | Form::Sign { var, coord } => vec![(*var, *coord)],
            Form::NodeSum { members, .. } => {
                let mut d: Vec<(Var, usize)> = members.iter().flat_map(|m| m.dependencies()).collect();
                d.sort_by_key(|(v, c)| (*c, *v == Var::Vel));
                d.dedup();
                d
            }
        }
    }

    pub fn depends_on(&self, coord: usize) -> bool {
        self.dependencies().iter().any(|(_, c)| *c == coord)
    }

    /// Degree of homogeneity in the velocities, if the form is homogeneous.
    pub fn velocity_degree(&self) -> Option<u32> {
        match self {
            Form::Kinetic { .. } => Some(2),
            Form::VelocityMonomial { degree, .. } => Some(*degree),
            Form::Trig { var: Var::Vel, .. } => None,
            Form::AbsProduct { var: Var::Vel, .. } => Some(2),
            Form::Abs { var: Var::Vel, .. } => Some(1),
            Form::Sign { var: Var::Vel, .. } => Some(0),
            Form::NodeSum { members, .. } => {
                let mut it = members.iter().map(|m| m.velocity_degree());
                let first = it.next().flatten()?;
                it.all(|d| d == Some(first)).then_some(first)
            }
            _ => Some(0),
        }
    }

    /// Analytic partial derivative as a sum of `(coefficient, form)` terms.
    /// The result is empty when the derivative vanishes identically (the
    /// distributional part of `∂ sgn(w)/∂w` is dropped).
    pub fn partial(&self, var: Var, coord: usize) -> Vec<(f64, Form)> {
        let hit = |v: Var, c: usize| v == var && c == coord;
        match self {
            Form::Constant => vec![],
            Form::Kinetic { coord: c } => {
                if hit(Var::Vel, *c) {
                    vec![(1.0, Form::VelocityMonomial { coord: *c, degree: 1 })]
                } else {
                    vec![]
                }
            }
            Form::Monomial { coord: c, degree } => {
                if hit(Var::Pos, *c) && *degree > 0 {
                    let f = Form::Monomial { coord: *c, degree: degree - 1 };
                    vec![(*degree as f64, lower(f, degree - 1))]
                } else {
                    vec![]
                }
            }
            Form::VelocityMonomial { coord: c, degree } => {
                if hit(Var::Vel, *c) && *degree > 0 {
                    let f = Form::VelocityMonomial { coord: *c, degree: degree - 1 };
                    vec![(*degree as f64, lower(f, degree - 1))]
                } else {
                    vec![]
                }
            }
            Form::DifferenceMonomial { a, b, degree } => {
                if var != Var::Pos || *degree == 0 || a == b {
                    return vec![];
                }
                let w = if coord == *a {
                    1.0
                } else if coord == *b {
                    -1.0
                } else {
                    return vec![];
                };
                let f = Form::DifferenceMonomial { a: *a, b: *b, degree: degree - 1 };
                vec![(w * *degree as f64, lower(f, degree - 1))]
            }
            Form::SpatialMonomial { node, order, degree, stencil } => {
                if var != Var::Pos || *degree == 0 {
                    return vec![];
                }
                let w: f64 = stencil.iter().filter(|(c, _)| *c == coord).map(|(_, w)| w).sum();
                if w == 0.0 {
                    return vec![];
                }
                let f = Form::SpatialMonomial {
                    node: *node,
                    order: *order,
                    degree: degree - 1,
                    stencil: stencil.clone(),
                };
                vec![(w * *degree as f64, lower(f, degree - 1))]
            }
            Form::Trig { func, var: v, coord: c, freq } => {
                if !hit(*v, *c) {
                    return vec![];
                }
                match func {
                    TrigFn::Sin => vec![(*freq, Form::Trig { func: TrigFn::Cos, var: *v, coord: *c, freq: *freq })],
                    TrigFn::Cos => vec![(-*freq, Form::Trig { func: TrigFn::Sin, var: *v, coord: *c, freq: *freq })],
                }
            }
            Form::AbsProduct { var: v, coord: c } => {
                if hit(*v, *c) {
                    vec![(2.0, Form::Abs { var: *v, coord: *c })]
                } else {
                    vec![]
                }
            }
            Form::Abs { var: v, coord: c } => {
                if hit(*v, *c) {
                    vec![(1.0, Form::Sign { var: *v, coord: *c })]
                } else {
                    vec![]
                }
            }
            Form::Sign { .. } => vec![],
            Form::NodeSum { members, .. } => {
                simplify(members.iter().flat_map(|m| m.partial(var, coord)).collect())
            }
        }
    }

    /// Value at a single state.
    pub fn eval_state(&self, u: &[f64], v: &[f64]) -> f64 {
        let arg = |var: Var, c: usize| match var {
            Var::Pos => u[c],
            Var::Vel => v[c],
        };
        match self {
            Form::Constant => 1.0,
            Form::Kinetic { coord } => 0.5 * v[*coord] * v[*coord],
            Form::Monomial { coord, degree } => u[*coord].powi(*degree as i32),
            Form::VelocityMonomial { coord, degree } => v[*coord].powi(*degree as i32),
            Form::DifferenceMonomial { a, b, degree } => (u[*a] - u[*b]).powi(*degree as i32),
            Form::SpatialMonomial { degree, stencil, .. } => {
                let s: f64 = stencil.iter().map(|(c, w)| w * u[*c]).sum();
                s.powi(*degree as i32)
            }
            Form::Trig { func, var, coord, freq } => {
                let x = freq * arg(*var, *coord);
                match func {
                    TrigFn::Sin => x.sin(),
                    TrigFn::Cos => x.cos(),
                }
            }
            Form::AbsProduct { var, coord } => {
                let w = arg(*var, *coord);
                w * w.abs()
            }
            Form::Abs { var, coord } => arg(*var, *coord).abs(),
            Form::Sign { var, coord } => sign(arg(*var, *coord)),
            Form::NodeSum { members, .. } => members.iter().map(|m| m.eval_state(u, v)).sum(),
        }
    }

    /// `out[t] += coef · form(t)` over a whole realization.
    pub fn accumulate<S: Series + ?Sized>(&self, coef: f64, s: &S, out: &mut [f64]) {
        let series = |var: Var, c: usize| match var {
            Var::Pos => s.pos(c),
            Var::Vel => s.vel(c),
        };
        match self {
            Form::Constant => out.iter_mut().for_each(|o| *o += coef),
            Form::Kinetic { coord } => {
                let h = 0.5 * coef;
                for (o, x) in out.iter_mut().zip(s.vel(*coord)) {
                    *o += h * x * x;
                }
            }
            Form::Monomial { coord, degree } => add_pow(coef, s.pos(*coord), *degree, out),
            Form::VelocityMonomial { coord, degree } => add_pow(coef, s.vel(*coord), *degree, out),
            Form::DifferenceMonomial { a, b, degree } => {
                let d = *degree as i32;
                for ((o, x), y) in out.iter_mut().zip(s.pos(*a)).zip(s.pos(*b)) {
                    *o += coef * (x - y).powi(d);
                }
            }
            Form::SpatialMonomial { degree, stencil, .. } => {
                let mut lin = vec![0.0; out.len()];
                for (c, w) in stencil {
                    for (l, x) in lin.iter_mut().zip(s.pos(*c)) {
                        *l += w * x;
                    }
                }
                add_pow(coef, &lin, *degree, out);
            }
            Form::Trig { func, var, coord, freq } => {
                let k = *freq;
                let w = series(*var, *coord);
                match func {
                    TrigFn::Sin => out.iter_mut().zip(w).for_each(|(o, x)| *o += coef * (k * x).sin()),
                    TrigFn::Cos => out.iter_mut().zip(w).for_each(|(o, x)| *o += coef * (k * x).cos()),
                }
            }
            Form::AbsProduct { var, coord } => {
                for (o, x) in out.iter_mut().zip(series(*var, *coord)) {
                    *o += coef * x * x.abs();
                }
            }
            Form::Abs { var, coord } => {
                for (o, x) in out.iter_mut().zip(series(*var, *coord)) {
                    *o += coef * x.abs();
                }
            }
            Form::Sign { var, coord } => {
                for (o, x) in out.iter_mut().zip(series(*var, *coord)) {
                    *o += coef * sign(*x);
                }
            }
            Form::NodeSum { members, .. } => {
                for m in members {
                    m.accumulate(coef, s, out);
                }
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn add_pow(coef: f64, x: &[f64], degree: u32, out: &mut [f64]) {
    match degree {
        0 => out.iter_mut().for_each(|o| *o += coef),
        1 => out.iter_mut().zip(x).for_each(|(o, x)| *o += coef * x),
        2 => out.iter_mut().zip(x).for_each(|(o, x)| *o += coef * x * x),
        d => {
            let d = d as i32;
            out.iter_mut().zip(x).for_each(|(o, x)| *o += coef * x.powi(d))
        }
    }
}

/// Merges identical forms and drops zero coefficients, keeping first-seen order.
pub fn simplify(terms: Vec<(f64, Form)>) -> Vec<(f64, Form)> {
    let mut out: Vec<(f64, Form)> = Vec::with_capacity(terms.len());
    for (c, f) in terms {
        if let Some(slot) = out.iter_mut().find(|(_, g)| *g == f) {
            slot.0 += c;
        } else {
            out.push((c, f));
        }
    }
    out.retain(|(c, _)| *c != 0.0);
    out
}

/// Applies a partial derivative to a linear combination of forms.
pub fn partial_of_sum(terms: &[(f64, Form)], var: Var, coord: usize) -> Vec<(f64, Form)> {
    simplify(
        terms
            .iter()
            .flat_map(|(c, f)| f.partial(var, coord).into_iter().map(move |(k, g)| (c * k, g)))
            .collect(),
    )
}

/// Evaluates `Σ c·form` at one state.
pub fn eval_sum(terms: &[(f64, Form)], u: &[f64], v: &[f64]) -> f64 {
    terms.iter().map(|(c, f)| c * f.eval_state(u, v)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Naming {
        Naming::Discrete(vec!["X1".into(), "X2".into(), "X3".into()])
    }

    #[test]
    fn labels() {
        let n = Naming::Discrete(vec!["X".into()]);
        assert_eq!(Form::Monomial { coord: 0, degree: 2 }.label(&n), "X^2");
        assert_eq!(Form::Kinetic { coord: 0 }.label(&n), "0.5X\u{307}^2");
        let t = Form::Trig { func: TrigFn::Cos, var: Var::Vel, coord: 0, freq: 3.0 };
        assert_eq!(t.label(&n), "cos(3X\u{307})");
        let d = Form::DifferenceMonomial { a: 1, b: 0, degree: 2 };
        assert_eq!(d.label(&names()), "(X2-X1)^2");
        let f = Naming::field("u");
        let s = Form::SpatialMonomial { node: 4, order: 2, degree: 2, stencil: vec![(4, 1.0)] };
        assert_eq!(s.label(&f), "(u_xx[4])^2");
        assert_eq!(s.family(&f).unwrap(), "(u_xx)^2");
    }

    #[test]
    fn eval_examples() {
        let u = [0.25, 0.5, 0.0];
        let v = [0.0; 3];
        assert_eq!(Form::Monomial { coord: 1, degree: 2 }.eval_state(&u, &v), 0.25);
        let c = Form::Trig { func: TrigFn::Cos, var: Var::Pos, coord: 2, freq: 1.0 };
        assert_eq!(c.eval_state(&u, &v), 1.0);
        let d = Form::DifferenceMonomial { a: 1, b: 0, degree: 2 };
        assert_eq!(d.eval_state(&u, &v), 0.0625);
    }

    #[test]
    fn difference_partials_have_opposite_signs() {
        let d = Form::DifferenceMonomial { a: 1, b: 0, degree: 2 };
        let p1 = d.partial(Var::Pos, 1);
        let p0 = d.partial(Var::Pos, 0);
        assert_eq!(p1[0].0, 2.0);
        assert_eq!(p0[0].0, -2.0);
        assert_eq!(p0[0].1, Form::DifferenceMonomial { a: 1, b: 0, degree: 1 });
        assert!(d.partial(Var::Pos, 2).is_empty());
        assert!(d.partial(Var::Vel, 1).is_empty());
    }

    #[test]
    fn monomial_degree_one_derivative_is_constant() {
        let m = Form::Monomial { coord: 0, degree: 1 };
        assert_eq!(m.partial(Var::Pos, 0), vec![(1.0, Form::Constant)]);
    }

    #[test]
    fn node_sum_partial_picks_single_member() {
        let members: Vec<Form> = (0..4).map(|c| Form::Monomial { coord: c, degree: 3 }).collect();
        let s = Form::NodeSum { family: "u^3".into(), members };
        let p = s.partial(Var::Pos, 2);
        assert_eq!(p, vec![(3.0, Form::Monomial { coord: 2, degree: 2 })]);
    }
}
