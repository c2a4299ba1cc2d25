//! Dense simplex for covering problems
//!
//! ```text
//! minimize  cost·x   subject to  A x ≥ rhs,  x ≥ 0,   with cost ≥ 0
//! ```
//!
//! The dual `max rhs·y, Aᵀy ≤ cost, y ≥ 0` has the origin as a feasible
//! basis, so a single phase suffices. The primal solution is read off the
//! reduced costs of the dual slacks. An unbounded dual means the primal has
//! no solution.

use crate::error::{Error, Result};
use crate::Matrix;

/// Pivot and feasibility tolerance.
pub const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

/// Relative tolerance when checking a solution against the original rows.
const VERIFY_TOL: f64 = 1e-7;

/// Problems whose solutions would need more total power than this count as infeasible.
pub const POWER_CEILING: f64 = 1e12;

/// Solve the covering problem. `a` is row-major with `rhs.len()` rows and
/// `cost.len()` columns.
///
/// The answer is checked against the unscaled data: a returned optimum
/// satisfies every row, and an infeasibility claim comes with a verified
/// Farkas ray. When neither check passes the result is an error.
pub fn minimize(a: &[f64], rhs: &[f64], cost: &[f64]) -> Result<LpOutcome> {
    let n = cost.len();
    let m_all = rhs.len();
    assert_eq!(a.len(), n * m_all, "constraint matrix has the wrong size");
    if let Some(c) = cost.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(Error::Domain(format!("simplex cost must be finite and nonnegative, got {c}")));
    }

    // rows that can actually bind
    let mut rows: Vec<(&[f64], f64)> = Vec::with_capacity(m_all);
    for k in 0..m_all {
        let row = &a[k * n..(k + 1) * n];
        let b = rhs[k];
        if !b.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite constraint coefficient".into()));
        }
        if b <= 0.0 && row.iter().all(|&v| v >= 0.0) {
            continue;
        }
        if b == 0.0 && row.iter().all(|&v| v == 0.0) {
            continue;
        }
        rows.push((row, b));
    }
    let m = rows.len();
    if m == 0 {
        return Ok(LpOutcome::Optimal { x: vec![0.0; n], objective: 0.0 });
    }

    let scaled = Scaled::new(&rows, n);
    let width = m + n + 1;
    let mut t = vec![0.0; n * width];
    for u in 0..n {
        for k in 0..m {
            t[u * width + k] = scaled.a[k * n + u];
        }
        t[u * width + m + u] = 1.0;
        t[u * width + m + n] = cost[u] * scaled.col[u];
    }
    // objective row holds reduced costs of the maximization
    let mut z = vec![0.0; width];
    for k in 0..m {
        z[k] = -scaled.b[k];
    }
    let mut basis: Vec<usize> = (m..m + n).collect();

    let cap = 10 * (n + m);
    let mut iterations = 0;
    let mut stalled = 0;
    loop {
        // steepest reduced cost, falling back to Bland's rule while degenerate
        let enter = if stalled < 2 * (n + m) {
            (0..m + n).filter(|&j| z[j] < -TOL).min_by(|&i, &j| z[i].total_cmp(&z[j]))
        } else {
            (0..m + n).find(|&j| z[j] < -TOL)
        };
        let Some(enter) = enter else {
            break;
        };
        let mut min_ratio = f64::INFINITY;
        for i in 0..n {
            let p = t[i * width + enter];
            if p > TOL {
                min_ratio = min_ratio.min(t[i * width + m + n] / p);
            }
        }
        // among near-ties keep the largest pivot, then the lowest basic index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..n {
            let p = t[i * width + enter];
            if p > TOL && t[i * width + m + n] / p <= min_ratio + TOL {
                let better = match leave {
                    None => true,
                    Some((li, lp)) => p > lp * (1.0 + 1e-9) || (p >= lp * (1.0 - 1e-9) && basis[i] < basis[li]),
                };
                if better {
                    leave = Some((i, p));
                }
            }
        }
        let Some((r, _)) = leave else {
            let ray = farkas_ray(&t, &basis, width, m, enter);
            if scaled.certifies_infeasible(&ray, &rows) {
                return Ok(LpOutcome::Infeasible);
            }
            return Err(Error::Numerical(format!("unverified infeasibility after {iterations} pivots ({m}x{n})")));
        };
        if iterations == cap {
            return Err(Error::IterationLimit { iterations, rows: m, cols: n });
        }
        iterations += 1;
        let before = z[m + n];
        pivot(&mut t, &mut z, width, r, enter);
        if z[m + n] > before + TOL * before.abs().max(1.0) {
            stalled = 0;
        } else {
            stalled += 1;
        }
        basis[r] = enter;
    }

    // Primal values: reduced costs of the dual slacks, and the same point
    // recomputed from the final basis on the scaled data.
    let from_tableau: Vec<f64> = (0..n).map(|u| z[m + u].max(0.0) * scaled.col[u]).collect();
    let candidates = [scaled.resolve_basis(&basis, m), Some(from_tableau)];
    let x = candidates
        .into_iter()
        .flatten()
        .filter(|x| satisfies(&rows, x))
        .min_by(|p, q| dot(p, cost).total_cmp(&dot(q, cost)))
        .ok_or_else(|| Error::Numerical(format!("optimum violates its constraints after {iterations} pivots ({m}x{n})")))?;
    let objective = dot(&x, cost);
    Ok(LpOutcome::Optimal { x, objective })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Every row holds up to a tolerance relative to the terms involved.
fn satisfies(rows: &[(&[f64], f64)], x: &[f64]) -> bool {
    rows.iter().all(|(row, b)| {
        let lhs = dot(row, x);
        let mag: f64 = row.iter().zip(x).map(|(c, v)| (c * v).abs()).sum::<f64>() + b.abs();
        lhs - b >= -VERIFY_TOL * mag
    })
}

/// Dual ray along the entering column when no row limits it.
fn farkas_ray(t: &[f64], basis: &[usize], width: usize, m: usize, enter: usize) -> Vec<f64> {
    let mut y = vec![0.0; m];
    if enter < m {
        y[enter] = 1.0;
    }
    for (i, &v) in basis.iter().enumerate() {
        if v < m {
            y[v] = (-t[i * width + enter]).max(0.0);
        }
    }
    // drop round-off left on rows the ray does not use
    let top = y.iter().fold(0.0f64, |a, &b| a.max(b));
    for v in &mut y {
        if *v < 1e-12 * top {
            *v = 0.0;
        }
    }
    y
}

/// Rows and columns scaled to unit largest magnitude.
struct Scaled {
    a: Vec<f64>,
    b: Vec<f64>,
    row: Vec<f64>,
    col: Vec<f64>,
    n: usize,
}

impl Scaled {
    fn new(rows: &[(&[f64], f64)], n: usize) -> Self {
        let m = rows.len();
        let mut row = vec![1.0; m];
        let mut col = vec![1.0; n];
        for _ in 0..3 {
            for (k, (r, b)) in rows.iter().enumerate() {
                let big = r.iter().zip(&col).map(|(v, c)| (v * c).abs()).fold(b.abs(), f64::max);
                row[k] = if big > 0.0 { 1.0 / big } else { 1.0 };
            }
            for (u, c) in col.iter_mut().enumerate() {
                let big = rows.iter().zip(&row).map(|((r, _), s)| (r[u] * s).abs()).fold(0.0, f64::max);
                *c = if big > 0.0 { 1.0 / big } else { 1.0 };
            }
        }
        let mut a = Vec::with_capacity(m * n);
        for ((r, _), s) in rows.iter().zip(&row) {
            a.extend(r.iter().zip(&col).map(|(v, c)| v * s * c));
        }
        let b = rows.iter().zip(&row).map(|((_, b), s)| b * s).collect();
        Scaled { a, b, row, col, n }
    }

    /// Solve the rows whose duals are basic for the columns whose dual slacks are not.
    fn resolve_basis(&self, basis: &[usize], m: usize) -> Option<Vec<f64>> {
        let n = self.n;
        let tight: Vec<usize> = basis.iter().copied().filter(|&v| v < m).collect();
        let mut free: Vec<bool> = vec![true; n];
        for &v in basis {
            if v >= m {
                free[v - m] = false;
            }
        }
        let cols: Vec<usize> = (0..n).filter(|&u| free[u]).collect();
        if cols.len() != tight.len() {
            return None;
        }
        let mut x = vec![0.0; n];
        if !cols.is_empty() {
            let sys: Vec<Vec<f64>> = tight.iter().map(|&k| cols.iter().map(|&u| self.a[k * n + u]).collect()).collect();
            let rhs: Vec<f64> = tight.iter().map(|&k| self.b[k]).collect();
            let sol = Matrix::from_rows(&sys).solve(&rhs)?;
            for (&u, v) in cols.iter().zip(sol) {
                x[u] = v.max(0.0) * self.col[u];
            }
        }
        Some(x)
    }

    /// `y ≥ 0` on the scaled rows with `Aᵀy ≤ 0` and `b·y > 0`, checked on the original data.
    /// Round-off on `Aᵀy` is tolerated while it still rules out any point below [`POWER_CEILING`].
    fn certifies_infeasible(&self, y: &[f64], rows: &[(&[f64], f64)]) -> bool {
        let w: Vec<f64> = y.iter().zip(&self.row).map(|(y, s)| y * s).collect();
        let gain: f64 = rows.iter().zip(&w).map(|((_, b), w)| b * w).sum();
        let gain_mag: f64 = rows.iter().zip(&w).map(|((_, b), w)| (b * w).abs()).sum();
        if !(gain > VERIFY_TOL * gain_mag) {
            return false;
        }
        // An approximate ray still proves Σx ≥ gain / excess.
        let excess = (0..self.n)
            .map(|u| {
                let s: f64 = rows.iter().zip(&w).map(|((r, _), w)| r[u] * w).sum();
                let mag: f64 = rows.iter().zip(&w).map(|((r, _), w)| (r[u] * w).abs()).sum();
                (s - VERIFY_TOL * mag).max(0.0)
            })
            .fold(0.0, f64::max);
        excess * POWER_CEILING <= gain
    }
}

fn pivot(t: &mut [f64], z: &mut [f64], width: usize, r: usize, col: usize) {
    let p = t[r * width + col];
    for v in &mut t[r * width..(r + 1) * width] {
        *v /= p;
    }
    let rows = t.len() / width;
    for i in 0..rows {
        if i == r {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for j in 0..width {
                t[i * width + j] -= f * t[r * width + j];
            }
        }
    }
    let f = z[col];
    if f != 0.0 {
        for j in 0..width {
            z[j] -= f * t[r * width + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(out: LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, objective } => (x, objective),
            LpOutcome::Infeasible => panic!("expected an optimum"),
        }
    }

    #[test]
    fn single_variable() {
        // min x s.t. 2x ≥ 3
        let (x, obj) = opt(minimize(&[2.0], &[3.0], &[1.0]).unwrap());
        assert!((x[0] - 1.5).abs() < 1e-12);
        assert!((obj - 1.5).abs() < 1e-12);
    }

    #[test]
    fn two_variable_corner() {
        // min x + y s.t. x + 2y ≥ 4, 3x + y ≥ 6: corner at (1.6, 1.2)
        let (x, obj) = opt(minimize(&[1.0, 2.0, 3.0, 1.0], &[4.0, 6.0], &[1.0, 1.0]).unwrap());
        assert!((x[0] - 1.6).abs() < 1e-9 && (x[1] - 1.2).abs() < 1e-9);
        assert!((obj - 2.8).abs() < 1e-9);
    }

    #[test]
    fn interference_limited_is_infeasible() {
        // x − 2y ≥ 1 and y − 2x ≥ 1 cannot both hold with x, y ≥ 0
        assert_eq!(minimize(&[1.0, -2.0, -2.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn trivial_rows_are_dropped() {
        let (x, obj) = opt(minimize(&[1.0, 0.0], &[0.0], &[1.0, 1.0]).unwrap());
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(obj, 0.0);
    }

    #[test]
    fn upper_limit_rows() {
        // min x + y s.t. x + y ≥ 2, −x ≥ −0.5 (x ≤ 0.5), cost favours x
        let (x, _) = opt(minimize(&[1.0, 1.0, -1.0, 0.0], &[2.0, -0.5], &[1.0, 2.0]).unwrap());
        assert!((x[0] - 0.5).abs() < 1e-9 && (x[1] - 1.5).abs() < 1e-9);
        // x ≥ 1 and x ≤ 0.5
        assert_eq!(minimize(&[1.0, -1.0], &[1.0, -0.5], &[1.0]).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn rejects_negative_cost() {
        assert!(minimize(&[1.0], &[1.0], &[-1.0]).is_err());
    }
}
