//! Dense least squares and sequential threshold least squares (STLS).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from equal-length columns.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let rows = cols.first().map_or(0, |c| c.len());
        if cols.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidArgument("columns differ in length".into()));
        }
        Ok(Matrix {
            rows,
            cols: cols.len(),
            data: cols.concat(),
        })
    }

    /// Builds from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::InvalidArgument("rows differ in length".into()));
        }
        let mut m = Matrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Copy of the listed columns.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (j, xj) in x.iter().enumerate().take(self.cols) {
            if *xj == 0.0 {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    // Scaled to avoid overflow on large columns.
    let m = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * a.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
}

/// In-place Householder QR, optionally with column pivoting.
/// Reflector `k` is stored below the diagonal of column `k` with implicit unit head.
struct Qr {
    a: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl Qr {
    fn new(mut a: Matrix, pivot: bool) -> Qr {
        let (m, n) = (a.rows, a.cols);
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..steps {
            if pivot {
                let mut best = k;
                let mut best_norm = -1.0;
                for j in k..n {
                    let nj = norm(&a.col(j)[k..]);
                    if nj > best_norm {
                        best_norm = nj;
                        best = j;
                    }
                }
                if best != k {
                    for i in 0..m {
                        a.data.swap(k * m + i, best * m + i);
                    }
                    perm.swap(k, best);
                }
            }
            let x = &a.col(k)[k..];
            let nx = norm(x);
            if nx == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let x0 = x[0];
            let beta = if x0 >= 0.0 { -nx } else { nx };
            let v0 = x0 - beta;
            tau[k] = (beta - x0) / beta;
            {
                let col = a.col_mut(k);
                col[k] = beta;
                for v in &mut col[k + 1..] {
                    *v /= v0;
                }
            }
            for j in k + 1..n {
                let (head, tail) = a.data.split_at_mut(j * m);
                let v = &head[k * m + k..k * m + m];
                let c = &mut tail[k..m];
                let w = c[0] + dot(&v[1..], &c[1..]);
                let tw = tau[k] * w;
                c[0] -= tw;
                for (ci, vi) in c[1..].iter_mut().zip(&v[1..]) {
                    *ci -= tw * vi;
                }
            }
        }
        Qr { a, tau, perm }
    }

    /// `b ← Qᵀ b`.
    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.a.rows;
        for (k, &t) in self.tau.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let v = &self.a.col(k)[k..m];
            let w = b[k] + dot(&v[1..], &b[k + 1..m]);
            let tw = t * w;
            b[k] -= tw;
            for (bi, vi) in b[k + 1..m].iter_mut().zip(&v[1..]) {
                *bi -= tw * vi;
            }
        }
    }

    /// `y ← Q y` for `y` of length `rows`.
    fn apply_q(&self, y: &mut [f64]) {
        let m = self.a.rows;
        for (k, &t) in self.tau.iter().enumerate().rev() {
            if t == 0.0 {
                continue;
            }
            let v = &self.a.col(k)[k..m];
            let w = y[k] + dot(&v[1..], &y[k + 1..m]);
            let tw = t * w;
            y[k] -= tw;
            for (yi, vi) in y[k + 1..m].iter_mut().zip(&v[1..]) {
                *yi -= tw * vi;
            }
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }
}

/// Minimises `‖A x − b‖₂` by Householder QR with column pivoting.
/// Rank-deficient systems get the minimum-norm solution through a complete
/// orthogonal decomposition.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    least_squares_with_floor(a, b, a.rows)
}

/// As [`least_squares`], with the rank tolerance set for a system that was
/// reduced from `source_rows` rows (round-off from the reduction scales with
/// the original height, not the reduced one).
fn least_squares_with_floor(a: &Matrix, b: &[f64], source_rows: usize) -> Result<Vec<f64>> {
    if b.len() != a.rows {
        return Err(Error::InvalidArgument(format!(
            "rhs length {} != rows {}",
            b.len(),
            a.rows
        )));
    }
    if !a.all_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in least-squares input".into()));
    }
    let (m, n) = (a.rows, a.cols);
    if n == 0 {
        return Ok(vec![]);
    }
    let qr = Qr::new(a.clone(), true);
    let mut c = b.to_vec();
    qr.apply_qt(&mut c);
    let steps = m.min(n);
    let r00 = if steps > 0 { qr.r(0, 0).abs() } else { 0.0 };
    let tol = (m.max(n).max(source_rows) as f64) * f64::EPSILON * r00;
    let rank = (0..steps).take_while(|&k| qr.r(k, k).abs() > tol).count();
    let mut y = vec![0.0; n];
    if rank == 0 {
        return Ok(y);
    }
    if rank == n {
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| qr.r(i, j) * y[j]).sum();
            y[i] = (c[i] - s) / qr.r(i, i);
        }
    } else {
        // W = R[0..rank, 0..n]; Wᵀ = Z U; solve Uᵀ s = c, y = Z s.
        let mut wt = Matrix::zeros(n, rank);
        for i in 0..rank {
            for j in i..n {
                wt[(j, i)] = qr.r(i, j);
            }
        }
        let z = Qr::new(wt, false);
        let mut s = vec![0.0; n];
        for i in 0..rank {
            let acc: f64 = (0..i).map(|j| z.r(j, i) * s[j]).sum();
            s[i] = (c[i] - acc) / z.r(i, i);
        }
        z.apply_q(&mut s);
        y = s;
    }
    let mut x = vec![0.0; n];
    for (k, &p) in qr.perm.iter().enumerate() {
        x[p] = y[k];
    }
    Ok(x)
}

/// STLS settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StlsOptions {
    /// Threshold; coefficients with `|c| < lambda` are pruned. With
    /// `standardize` the comparison uses coefficients of unit-RMS columns.
    pub lambda: f64,
    pub max_iter: usize,
    pub standardize: bool,
}

impl Default for StlsOptions {
    fn default() -> Self {
        StlsOptions {
            lambda: 0.1,
            max_iter: 20,
            standardize: true,
        }
    }
}

/// Result of a sparse regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseModel {
    pub coefficients: Vec<f64>,
    pub active_set: Vec<usize>,
    pub iterations_used: usize,
    pub residual_norm: f64,
    pub converged: bool,
    /// True when every coefficient was thresholded away.
    pub empty: bool,
    /// Active set after each pruning pass, starting with the initial set.
    pub support_history: Vec<Vec<usize>>,
}

/// Sequential threshold least squares.
///
/// Repeats {least squares on the active columns; drop coefficients with
/// `|c| < λ`} until the support stops changing or `max_iter` is hit, then refits
/// on the final support. Columns with (numerically) zero norm never enter the
/// active set.
pub fn stls(a: &Matrix, b: &[f64], opts: &StlsOptions) -> Result<SparseModel> {
    if !(opts.lambda >= 0.0) || !opts.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be ≥ 0, got {}", opts.lambda)));
    }
    if opts.max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be ≥ 1".into()));
    }
    if b.len() != a.rows {
        return Err(Error::InvalidArgument("rhs length does not match rows".into()));
    }
    if !a.all_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in regression input".into()));
    }
    let (m, p) = (a.rows, a.cols);
    let rms: Vec<f64> = (0..p).map(|j| norm(a.col(j)) / (m.max(1) as f64).sqrt()).collect();
    let max_rms = rms.iter().cloned().fold(0.0, f64::max);
    let usable: Vec<usize> = (0..p).filter(|&j| rms[j] > 1e-13 * max_rms && rms[j] > 0.0).collect();
    let scale: Vec<f64> = (0..p)
        .map(|j| if opts.standardize && rms[j] > 0.0 { rms[j] } else { 1.0 })
        .collect();

    let mut scaled = a.select_columns(&usable);
    for (k, &j) in usable.iter().enumerate() {
        let s = scale[j];
        scaled.col_mut(k).iter_mut().for_each(|v| *v /= s);
    }
    // Compress tall problems once: ‖A_S x − b‖² = ‖R_S x − c‖² + ‖b_⊥‖².
    let q = usable.len();
    let (sys, rhs, rss_perp) = if m > q && q > 0 {
        let qr = Qr::new(scaled, false);
        let mut c = b.to_vec();
        qr.apply_qt(&mut c);
        let perp = c[q..].iter().map(|v| v * v).sum::<f64>();
        let mut r = Matrix::zeros(q, q);
        for j in 0..q {
            for i in 0..=j {
                r[(i, j)] = qr.r(i, j);
            }
        }
        c.truncate(q);
        (r, c, perp)
    } else {
        (scaled, b.to_vec(), 0.0)
    };

    // Positions into `usable`.
    let mut active: Vec<usize> = (0..q).collect();
    let mut history = vec![active.iter().map(|&k| usable[k]).collect::<Vec<_>>()];
    let mut coef = vec![0.0; q];
    let mut converged = false;
    let mut iterations = 0;
    let solve = |act: &[usize]| -> Result<Vec<f64>> { least_squares_with_floor(&sys.select_columns(act), &rhs, m) };
    while iterations < opts.max_iter && !active.is_empty() {
        iterations += 1;
        let x = solve(&active)?;
        let keep: Vec<usize> = active
            .iter()
            .zip(&x)
            .filter(|(_, c)| c.abs() >= opts.lambda)
            .map(|(k, _)| *k)
            .collect();
        if keep.len() == active.len() {
            converged = true;
            coef.iter_mut().for_each(|c| *c = 0.0);
            for (k, c) in active.iter().zip(&x) {
                coef[*k] = *c;
            }
            break;
        }
        active = keep;
        history.push(active.iter().map(|&k| usable[k]).collect());
    }
    if active.is_empty() {
        converged = true;
        coef.iter_mut().for_each(|c| *c = 0.0);
    } else if !converged {
        let x = solve(&active)?;
        coef.iter_mut().for_each(|c| *c = 0.0);
        for (k, c) in active.iter().zip(&x) {
            coef[*k] = *c;
        }
    }
    let mut coefficients = vec![0.0; p];
    for (k, &j) in usable.iter().enumerate() {
        coefficients[j] = coef[k] / scale[j];
    }
    let fitted = sys.mul_vec(&coef);
    let rss = rss_perp + fitted.iter().zip(&rhs).map(|(f, r)| (f - r) * (f - r)).sum::<f64>();
    let active_set: Vec<usize> = active.iter().map(|&k| usable[k]).collect();
    Ok(SparseModel {
        empty: active_set.is_empty(),
        coefficients,
        active_set,
        iterations_used: iterations,
        residual_norm: rss.max(0.0).sqrt(),
        converged,
        support_history: history,
    })
}

/// Backward elimination on a fitted support.
///
/// Repeatedly refits without each active column and drops the one whose
/// removal raises the residual sum of squares least, while that rise stays
/// below `penalty²`. This catches groups of nearly collinear columns that
/// individually pass a coefficient threshold but jointly explain almost
/// nothing. Coefficients are refitted on the surviving support.
pub fn prune_support(a: &Matrix, b: &[f64], model: &SparseModel, penalty: f64) -> Result<SparseModel> {
    if !(penalty >= 0.0) || !penalty.is_finite() {
        return Err(Error::InvalidArgument(format!("penalty must be ≥ 0, got {penalty}")));
    }
    if b.len() != a.rows {
        return Err(Error::InvalidArgument("rhs length does not match rows".into()));
    }
    let rss_of = |act: &[usize]| -> Result<(Vec<f64>, f64)> {
        let sub = a.select_columns(act);
        let x = least_squares(&sub, b)?;
        let fit = sub.mul_vec(&x);
        Ok((x, fit.iter().zip(b).map(|(f, y)| (f - y) * (f - y)).sum()))
    };
    let mut active = model.active_set.clone();
    let mut history = model.support_history.clone();
    let (mut x, mut rss) = rss_of(&active)?;
    let mut changed = false;
    while active.len() > 1 {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for k in 0..active.len() {
            let mut trial = active.clone();
            trial.remove(k);
            let (xt, rt) = rss_of(&trial)?;
            if best.as_ref().is_none_or(|(_, _, r)| rt < *r) {
                best = Some((k, xt, rt));
            }
        }
        let (k, xt, rt) = best.expect("at least two active columns");
        if rt - rss >= penalty * penalty {
            break;
        }
        active.remove(k);
        history.push(active.clone());
        x = xt;
        rss = rt;
        changed = true;
    }
    if !changed {
        return Ok(model.clone());
    }
    let mut coefficients = vec![0.0; a.cols];
    for (&j, c) in active.iter().zip(&x) {
        coefficients[j] = *c;
    }
    Ok(SparseModel {
        coefficients,
        empty: active.is_empty(),
        active_set: active,
        iterations_used: model.iterations_used,
        residual_norm: rss.max(0.0).sqrt(),
        converged: model.converged,
        support_history: history,
    })
}
