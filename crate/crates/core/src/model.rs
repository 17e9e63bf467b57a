//! Lagrangians as weighted sums of symbolic forms, and the drift they induce.

use crate::basis::{fmt_num, partial_of_sum, Form, Naming, Var};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `L = Σ c_k φ_k`. Kinetic parts are `Form::Kinetic` terms with coefficient 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lagrangian {
    pub terms: Vec<(f64, Form)>,
    pub naming: Naming,
}

impl Lagrangian {
    pub fn new(terms: Vec<(f64, Form)>, naming: Naming) -> Self {
        Lagrangian { terms, naming }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::basis::eval_sum(&self.terms, u, v)
    }

    /// Non-kinetic terms.
    pub fn potential_terms(&self) -> Vec<(f64, Form)> {
        self.terms
            .iter()
            .filter(|(_, f)| !matches!(f, Form::Kinetic { .. }))
            .cloned()
            .collect()
    }

    /// True when `L = Σ ½u̇_i² + f(u)` with unit kinetic coefficients on
    /// `coords` and no other velocity dependence.
    pub fn is_natural(&self, coords: &[usize]) -> bool {
        let kinetic_ok = coords.iter().all(|&c| {
            self.terms
                .iter()
                .any(|(k, f)| *f == Form::Kinetic { coord: c } && (*k - 1.0).abs() < 1e-12)
        });
        let pot_ok = self
            .potential_terms()
            .iter()
            .all(|(_, f)| f.dependencies().iter().all(|(v, _)| *v == Var::Pos));
        kinetic_ok && pot_ok
    }

    /// Acceleration field `ü_i = ∂L/∂u_i` of a natural Lagrangian.
    pub fn drift(&self, coords: &[usize], dim: usize, with_jacobian: bool) -> Result<CompiledDrift> {
        if !self.is_natural(coords) {
            return Err(Error::Unsupported(
                "drift requires L = ½Σu̇² + f(u); velocity-dependent terms present".into(),
            ));
        }
        let pot = self.potential_terms();
        let grad: Vec<Vec<(f64, Form)>> = coords.iter().map(|&c| partial_of_sum(&pot, Var::Pos, c)).collect();
        let jac = if with_jacobian {
            Some(
                grad.iter()
                    .map(|g| {
                        let mut deps: Vec<usize> = g
                            .iter()
                            .flat_map(|(_, f)| f.dependencies())
                            .filter(|(v, _)| *v == Var::Pos)
                            .map(|(_, c)| c)
                            .collect();
                        deps.sort_unstable();
                        deps.dedup();
                        deps.into_iter()
                            .map(|j| (j, partial_of_sum(g, Var::Pos, j)))
                            .filter(|(_, t)| !t.is_empty())
                            .collect()
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(CompiledDrift {
            coords: coords.to_vec(),
            dim,
            grad,
            jac,
        })
    }

    /// Human-readable expression. Field Lagrangians are grouped by family
    /// with the mean coefficient (and spread when it varies).
    pub fn expression(&self) -> String {
        match &self.naming {
            Naming::Discrete(_) => join_terms(
                self.terms
                    .iter()
                    .map(|(c, f)| (*c, f.label(&self.naming)))
                    .collect(),
            ),
            Naming::Field { .. } => {
                let groups = group_by_family(&self.terms, &self.naming);
                join_terms(
                    groups
                        .into_iter()
                        .map(|g| {
                            let mut label = format!("Σ{}", g.family);
                            if g.spread > 1e-9 * g.mean.abs().max(1e-300) && g.count > 1 {
                                label = format!("{label} (±{:.2e}, n={})", g.spread, g.count);
                            }
                            (g.mean, label)
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Summary of one per-node family in a field Lagrangian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyGroup {
    pub family: String,
    pub mean: f64,
    /// Sample standard deviation across nodes.
    pub spread: f64,
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

/// Groups terms by family key, preserving first-seen order. Node sums form
/// their own singleton groups.
pub fn group_by_family(terms: &[(f64, Form)], naming: &Naming) -> Vec<FamilyGroup> {
    let mut order: Vec<String> = Vec::new();
    let mut vals: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (c, f) in terms {
        let key = match f.family(naming) {
            Some(k) => k,
            None => f.label(naming).trim_start_matches('Σ').to_string(),
        };
        if !vals.contains_key(&key) {
            order.push(key.clone());
        }
        vals.entry(key).or_default().push(*c);
    }
    order
        .into_iter()
        .map(|k| {
            let v = &vals[&k];
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            FamilyGroup {
                family: k,
                mean,
                spread: var.sqrt(),
                count: v.len(),
                min: v.iter().cloned().fold(f64::INFINITY, f64::min),
                max: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Formats `Σ c_k·label_k` as `a·x - b·y + …`.
pub(crate) fn join_terms(terms: Vec<(f64, String)>) -> String {
    let mut s = String::new();
    for (i, (c, label)) in terms.iter().enumerate() {
        let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
        let num = if label == "1" {
            fmt_coef(mag)
        } else if label.starts_with("0.5") && (mag - 1.0).abs() < 1e-12 {
            String::new()
        } else if (mag - 1.0).abs() < 1e-12 {
            String::new()
        } else {
            fmt_coef(mag)
        };
        let body = if label == "1" { num } else { format!("{num}{label}") };
        if i == 0 {
            if sign == "-" {
                s.push('-');
            }
            s.push_str(&body);
        } else {
            s.push_str(&format!(" {sign} {body}"));
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// Four decimals for ordinary magnitudes, scientific otherwise.
pub(crate) fn fmt_coef(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && (a < 1e-3 || a >= 1e7) {
        format!("{x:.4e}")
    } else if x.fract() == 0.0 {
        fmt_num(x)
    } else {
        format!("{x:.4}")
    }
}

/// Gradient (and optionally Jacobian) of a natural Lagrangian's potential part,
/// ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledDrift {
    /// Driven coordinates; `grad[k]` is the acceleration of `coords[k]`.
    pub coords: Vec<usize>,
    pub dim: usize,
    grad: Vec<Vec<(f64, Form)>>,
    /// Per driven coordinate: `(j, ∂a/∂u_j)` for each coordinate it depends on.
    jac: Option<Vec<Vec<(usize, Vec<(f64, Form)>)>>>,
}

impl CompiledDrift {
    /// Writes accelerations into `acc` (indexed by coordinate; undriven left untouched).
    pub fn accel(&self, u: &[f64], acc: &mut [f64]) {
        for (k, &c) in self.coords.iter().enumerate() {
            acc[c] = crate::basis::eval_sum(&self.grad[k], u, &[]);
        }
    }

    /// `out[c] = Σ_j (∂a_c/∂u_j) v_j`.
    pub fn jacobian_times(&self, u: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let jac = self
            .jac
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("drift compiled without Jacobian".into()))?;
        for (k, &c) in self.coords.iter().enumerate() {
            out[c] = jac[k]
                .iter()
                .map(|(j, terms)| crate::basis::eval_sum(terms, u, &[]) * v[*j])
                .sum();
        }
        Ok(())
    }

    /// Dense Jacobian rows `(c, [(j, ∂a_c/∂u_j)])` at `u`.
    pub fn jacobian_rows(&self, u: &[f64]) -> Vec<(usize, Vec<(usize, f64)>)> {
        match &self.jac {
            Some(jac) => self
                .coords
                .iter()
                .zip(jac)
                .map(|(&c, row)| {
                    (
                        c,
                        row.iter().map(|(j, t)| (*j, crate::basis::eval_sum(t, u, &[]))).collect(),
                    )
                })
                .collect(),
            None => vec![],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::TrigFn;

    #[test]
    fn harmonic_drift() {
        let n = Naming::Discrete(vec!["X".into()]);
        let l = Lagrangian::new(
            vec![(1.0, Form::Kinetic { coord: 0 }), (-500.0, Form::Monomial { coord: 0, degree: 2 })],
            n,
        );
        let d = l.drift(&[0], 1, true).unwrap();
        let mut a = [0.0];
        d.accel(&[0.5], &mut a);
        assert!((a[0] + 500.0).abs() < 1e-12);
        let mut jv = [0.0];
        d.jacobian_times(&[0.5], &[2.0], &mut jv).unwrap();
        assert!((jv[0] + 2000.0).abs() < 1e-12);
        assert_eq!(l.expression(), "0.5X\u{307}^2 - 500X^2");
    }

    #[test]
    fn pendulum_expression_and_drift() {
        let n = Naming::Discrete(vec!["θ".into()]);
        let cos = Form::Trig { func: TrigFn::Cos, var: Var::Pos, coord: 0, freq: 1.0 };
        let l = Lagrangian::new(vec![(1.0, Form::Kinetic { coord: 0 }), (9.81, cos)], n);
        assert_eq!(l.expression(), "0.5θ̇^2 + 9.8100cos(θ)");
        let d = l.drift(&[0], 1, false).unwrap();
        let mut a = [0.0];
        d.accel(&[0.9], &mut a);
        assert!((a[0] + 9.81 * 0.9f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn velocity_terms_are_not_natural() {
        let n = Naming::Discrete(vec!["X".into()]);
        let l = Lagrangian::new(
            vec![(1.0, Form::Kinetic { coord: 0 }), (0.3, Form::VelocityMonomial { coord: 0, degree: 3 })],
            n,
        );
        assert!(l.drift(&[0], 1, false).is_err());
    }
}
