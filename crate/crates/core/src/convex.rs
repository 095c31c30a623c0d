//! Convexity-constrained regularizers in the plane.
//!
//! A hull-polytope body with vertices `u_i / t_i` is convex exactly when
//! every vertex lies on or outside the chord joining its neighbors, which in
//! gauge form is the linear inequality
//!
//! ```text
//! t_i sin(th_{i+1} - th_{i-1}) <= t_{i-1} sin(th_{i+1} - th_i)
//!                                + t_{i+1} sin(th_i - th_{i-1})
//! ```
//!
//! with wraparound indices. Minimizing a nonnegative linear functional of
//! the gauges over these rows and the unit-volume cap
//! `sum_i sin(th_{i+1} - th_i) / (2 t_i t_{i+1}) <= 1` is a smooth convex
//! program (the volume is convex on the positive orthant), solved here by a
//! log-barrier Newton method.

use crate::geometry::{
    angle_of, lipschitz_polytope, locate_segment, norm2, GeometryError, SphereGrid, StarBody, TAU,
};
use crate::measures::{
    cost_matrix, expected_gauge, w1_distance, AtomicDistribution, CostKind, MeasureError,
};
use nalgebra::{Cholesky, DMatrix, DVector, SVD};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvexError {
    #[error("objective weights must be nonnegative and finite, got {value} at sector {index}")]
    BadWeight { index: usize, value: f64 },
    #[error("objective weights must not all vanish")]
    ZeroWeights,
    #[error("weights length {got} does not match the grid ({expected})")]
    LengthMismatch { got: usize, expected: usize },
    #[error("directions {prev}, {index}, {next} span {span} rad >= pi; the convexity rows need every second-neighbor arc below pi")]
    AngleGap { prev: usize, index: usize, next: usize, span: f64 },
    #[error("weights vanish on the arc between sectors {from} and {to} ({span} rad >= pi); the minimizing body flattens out and the infimum is not attained")]
    DegenerateSupport { from: usize, to: usize, span: f64 },
    #[error("barrier Newton stalled at stage mu={mu:e} after {iterations} steps; last iterate attached")]
    NotConverged { mu: f64, iterations: usize, last: Vec<f64> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// One convexity row `center*t_i - prev*t_{i-1} - next*t_{i+1} <= 0`.
#[derive(Debug, Clone)]
pub struct ConvexityRow {
    pub index: usize,
    pub center: f64,
    pub prev: f64,
    pub next: f64,
    /// Second neighbors exactly opposite (arc = pi): the row degenerates to
    /// `0 <= prev*t_{i-1} + next*t_{i+1}`, which never binds.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct ConvexityConstraintSet {
    rows: Vec<ConvexityRow>,
    pub any_degenerate: bool,
}

impl ConvexityConstraintSet {
    pub fn rows(&self) -> &[ConvexityRow] {
        &self.rows
    }

    /// `center*t_i - prev*t_{i-1} - next*t_{i+1}` for every row; feasible
    /// means every value is <= 0.
    pub fn evaluate(&self, t: &[f64]) -> Vec<f64> {
        let n = t.len();
        self.rows
            .iter()
            .map(|r| {
                r.center * t[r.index] - r.prev * t[(r.index + n - 1) % n]
                    - r.next * t[(r.index + 1) % n]
            })
            .collect()
    }
}

fn wrapped_sine(from: f64, to: f64) -> f64 {
    let s = ((to - from).rem_euclid(TAU)).sin();
    if s.abs() < 1e-12 {
        0.0
    } else {
        s
    }
}

/// One row per direction; errors when a second-neighbor arc reaches pi,
/// naming the offending triple. A row whose center coefficient vanishes
/// (arc exactly pi after rounding, as on the 4-direction grid) is kept but
/// flagged degenerate.
pub fn build_convexity_constraints(
    grid: &SphereGrid,
) -> Result<ConvexityConstraintSet, ConvexError> {
    let n = grid.len();
    let mut rows = Vec::with_capacity(n);
    let mut any_degenerate = false;
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let span = (grid.angle(next) - grid.angle(prev)).rem_euclid(TAU);
        if span > std::f64::consts::PI + 1e-12 {
            return Err(ConvexError::AngleGap { prev, index: i, next, span });
        }
        let row = ConvexityRow {
            index: i,
            center: wrapped_sine(grid.angle(prev), grid.angle(next)),
            prev: wrapped_sine(grid.angle(i), grid.angle(next)),
            next: wrapped_sine(grid.angle(prev), grid.angle(i)),
            degenerate: false,
        };
        let degenerate = row.center == 0.0;
        any_degenerate |= degenerate;
        rows.push(ConvexityRow { degenerate, ..row });
    }
    Ok(ConvexityConstraintSet { rows, any_degenerate })
}

/// Barrier schedule and Newton tolerances.
#[derive(Debug, Clone, Copy)]
pub struct ConvexOptions {
    pub newton_tol: f64,
    pub barrier_start: f64,
    pub barrier_factor: f64,
    pub barrier_final: f64,
    pub max_newton_per_stage: usize,
}

impl Default for ConvexOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            barrier_start: 1.0,
            barrier_factor: 10.0,
            barrier_final: 1e10,
            max_newton_per_stage: 120,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvexSolution {
    pub body: StarBody,
    /// Multipliers for the convexity rows, in row order.
    pub row_duals: Vec<f64>,
    pub volume_dual: f64,
    /// Infinity norm of the Lagrangian gradient at the returned point.
    pub kkt_residual: f64,
    pub active_set: Vec<bool>,
    pub newton_steps: usize,
}

/// Edge constants `c_i = sin(th_{i+1} - th_i) / 2`, so the polytope volume
/// is `sum_i c_i / (t_i t_{i+1})`.
fn edge_constants(grid: &SphereGrid) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| 0.5 * ((grid.angle((i + 1) % n) - grid.angle(i)).rem_euclid(TAU)).sin())
        .collect()
}

fn polytope_volume(c: &[f64], t: &[f64]) -> f64 {
    let n = t.len();
    (0..n).map(|i| c[i] / (t[i] * t[(i + 1) % n])).sum()
}

fn volume_gradient(c: &[f64], t: &[f64], out: &mut [f64]) {
    let n = t.len();
    for j in 0..n {
        let prev = (j + n - 1) % n;
        let next = (j + 1) % n;
        out[j] = -c[prev] / (t[prev] * t[j] * t[j]) - c[j] / (t[j] * t[j] * t[next]);
    }
}

/// A zero-weight arc bracketed by positive sectors more than pi apart lets
/// the gauges blow up along that arc (the objective never notices while the
/// rows admit the support numbers of an unbounded wedge), so the minimum is
/// not attained. Reject such inputs up front.
fn check_weight_support(a: &[f64], grid: &SphereGrid) -> Result<(), ConvexError> {
    let positive: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
    if positive.len() == 1 {
        return Err(ConvexError::DegenerateSupport {
            from: positive[0],
            to: positive[0],
            span: TAU,
        });
    }
    for (k, &p) in positive.iter().enumerate() {
        let q = positive[(k + 1) % positive.len()];
        if (q + a.len() - p) % a.len() <= 1 {
            continue; // adjacent positive sectors: no gap to grow in
        }
        let span = (grid.angle(q) - grid.angle(p)).rem_euclid(TAU);
        if span >= std::f64::consts::PI - 1e-9 {
            return Err(ConvexError::DegenerateSupport { from: p, to: q, span });
        }
    }
    Ok(())
}

struct BarrierState {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    value: f64,
}

/// Value, gradient, and Hessian of
/// `mu * <a, t> - sum_k ln(-g_k) - ln(1 - V)`; `None` if `t` is infeasible.
fn barrier_eval(
    a: &[f64],
    rows: &ConvexityConstraintSet,
    c: &[f64],
    t: &[f64],
    mu: f64,
    with_hessian: bool,
) -> Option<BarrierState> {
    let n = t.len();
    if t.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let vol = polytope_volume(c, t);
    let vol_slack = 1.0 - vol;
    if vol_slack <= 0.0 {
        return None;
    }

    let mut value = mu * a.iter().zip(t).map(|(ai, ti)| ai * ti).sum::<f64>();
    let mut grad = DVector::from_iterator(n, a.iter().map(|ai| mu * ai));
    let mut hess =
        if with_hessian { DMatrix::zeros(n, n) } else { DMatrix::zeros(0, 0) };

    for row in rows.rows() {
        let i = row.index;
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let g = row.center * t[i] - row.prev * t[prev] - row.next * t[next];
        if g >= 0.0 {
            return None;
        }
        value -= (-g).ln();
        let inv = 1.0 / -g; // d(-ln(-g)) = (dg) / (-g)
        grad[i] += row.center * inv;
        grad[prev] -= row.prev * inv;
        grad[next] -= row.next * inv;
        if with_hessian {
            let idx = [i, prev, next];
            let coef = [row.center, -row.prev, -row.next];
            for (p, &ip) in idx.iter().enumerate() {
                for (q, &iq) in idx.iter().enumerate() {
                    hess[(ip, iq)] += coef[p] * coef[q] * inv * inv;
                }
            }
        }
    }

    value -= vol_slack.ln();
    let mut vgrad = vec![0.0; n];
    volume_gradient(c, t, &mut vgrad);
    let inv_slack = 1.0 / vol_slack;
    for j in 0..n {
        grad[j] += vgrad[j] * inv_slack;
    }
    if with_hessian {
        for i in 0..n {
            for j in 0..n {
                hess[(i, j)] += vgrad[i] * vgrad[j] * inv_slack * inv_slack;
            }
        }
        // tridiagonal-plus-wrap curvature of the volume itself
        for j in 0..n {
            let prev = (j + n - 1) % n;
            let next = (j + 1) % n;
            hess[(j, j)] += (2.0 * c[prev] / (t[prev] * t[j].powi(3))
                + 2.0 * c[j] / (t[j].powi(3) * t[next]))
                * inv_slack;
            hess[(j, next)] += c[j] / (t[j] * t[j] * t[next] * t[next]) * inv_slack;
            hess[(next, j)] += c[j] / (t[j] * t[j] * t[next] * t[next]) * inv_slack;
        }
    }

    Some(BarrierState { grad, hess, value })
}

/// Minimizes `<a, t>` over the convexity rows and the unit-volume cap.
///
/// Weights may vanish on sectors without data; they must be nonnegative and
/// not all zero. The start point is the uniform profile at half volume,
/// which is strictly feasible on any admissible grid.
pub fn solve_convex_regularizer(
    a: &[f64],
    grid: &SphereGrid,
    opts: &ConvexOptions,
) -> Result<ConvexSolution, ConvexError> {
    let n = grid.len();
    if a.len() != n {
        return Err(ConvexError::LengthMismatch { got: a.len(), expected: n });
    }
    for (index, &value) in a.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(ConvexError::BadWeight { index, value });
        }
    }
    if a.iter().sum::<f64>() <= 0.0 {
        return Err(ConvexError::ZeroWeights);
    }
    check_weight_support(a, grid)?;
    let rows = build_convexity_constraints(grid)?;
    let c = edge_constants(grid);

    // uniform profile at half volume: V(t) = (sum c) / t^2
    let mut t = vec![(2.0 * c.iter().sum::<f64>()).sqrt(); n];
    let mut newton_steps = 0usize;

    let mut mu = opts.barrier_start;
    loop {
        let mut converged = false;
        for _ in 0..opts.max_newton_per_stage {
            let state = barrier_eval(a, &rows, &c, &t, mu, true)
                .expect("barrier iterates stay strictly feasible");
            let mut ridge = 0.0;
            let delta = loop {
                let mut h = state.hess.clone();
                if ridge > 0.0 {
                    for i in 0..n {
                        h[(i, i)] += ridge;
                    }
                }
                match Cholesky::new(h) {
                    Some(chol) => break chol.solve(&(-&state.grad)),
                    None => {
                        ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
                        assert!(ridge < 1.0, "barrier Hessian is irreparably indefinite");
                    }
                }
            };
            newton_steps += 1;
            let decrement = -state.grad.dot(&delta);
            // below the rounding floor of the barrier value the line search
            // would only compare noise, so treat the stage as centered
            let noise_floor = 64.0 * f64::EPSILON * (1.0 + state.value.abs());
            if decrement <= opts.newton_tol.max(noise_floor) {
                converged = true;
                break;
            }

            // exact ratio test on the linear rows, then backtracking with an
            // Armijo condition; the volume barrier rejects steps past the cap
            let mut alpha = 1.0f64;
            for row in rows.rows() {
                let i = row.index;
                let prev = (i + n - 1) % n;
                let next = (i + 1) % n;
                let g = row.center * t[i] - row.prev * t[prev] - row.next * t[next];
                let dg = row.center * delta[i] - row.prev * delta[prev] - row.next * delta[next];
                if dg > 0.0 {
                    alpha = alpha.min(0.99 * (-g) / dg);
                }
            }
            let mut accepted = false;
            for _ in 0..70 {
                let trial: Vec<f64> =
                    (0..n).map(|j| t[j] + alpha * delta[j]).collect();
                if let Some(trial_state) = barrier_eval(a, &rows, &c, &trial, mu, false) {
                    if trial_state.value <= state.value - 0.25 * alpha * decrement {
                        t = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                if decrement <= 1024.0 * f64::EPSILON * (1.0 + state.value.abs()) {
                    converged = true;
                    break;
                }
                return Err(ConvexError::NotConverged { mu, iterations: newton_steps, last: t });
            }
        }
        if !converged {
            return Err(ConvexError::NotConverged { mu, iterations: newton_steps, last: t });
        }
        if mu >= opts.barrier_final {
            // extra stages squeeze the volume slack (1/(mu * dual)) onto the
            // constraint when the volume multiplier happens to be small
            let vol_slack = 1.0 - polytope_volume(&c, &t);
            if vol_slack <= 1e-9 || mu >= 1e14 {
                break;
            }
        }
        mu = if mu < opts.barrier_final {
            (mu * opts.barrier_factor).min(opts.barrier_final)
        } else {
            mu * opts.barrier_factor
        };
    }

    // central-path multipliers y_k = 1/(mu * slack_k) identify the active
    // rows, but at slacks near 1e-10 the reciprocal amplifies the slack's
    // own rounding a million-fold; a least-squares fit of the active
    // gradients against the objective removes that noise from the
    // certificate
    let g = rows.evaluate(&t);
    let mut row_duals: Vec<f64> = g.iter().map(|&gk| 1.0 / (mu * -gk)).collect();
    let vol_slack = 1.0 - polytope_volume(&c, &t);
    let mut volume_dual = 1.0 / (mu * vol_slack);
    let t_scale = t.iter().cloned().fold(0.0, f64::max);
    let active_set: Vec<bool> = g.iter().map(|&gk| -gk <= 1e-6 * (1.0 + t_scale)).collect();

    let active: Vec<usize> = (0..n).filter(|&k| active_set[k]).collect();
    let mut m = DMatrix::zeros(n, active.len() + 1);
    let mut rhs = DVector::from_iterator(n, a.iter().map(|&ai| -ai));
    for (k, row) in rows.rows().iter().enumerate() {
        let i = row.index;
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        if let Some(col) = active.iter().position(|&ak| ak == k) {
            m[(i, col)] = row.center;
            m[(prev, col)] = -row.prev;
            m[(next, col)] = -row.next;
        } else {
            rhs[i] -= row_duals[k] * row.center;
            rhs[prev] += row_duals[k] * row.prev;
            rhs[next] += row_duals[k] * row.next;
        }
    }
    let mut vgrad = vec![0.0; n];
    volume_gradient(&c, &t, &mut vgrad);
    for j in 0..n {
        m[(j, active.len())] = vgrad[j];
    }
    if let Ok(y) = SVD::new(m, true, true).solve(&rhs, 1e-10) {
        for (col, &k) in active.iter().enumerate() {
            row_duals[k] = y[col].max(0.0);
        }
        volume_dual = y[active.len()].max(0.0);
    }

    let kkt_residual = lagrangian_residual(a, &rows, &c, &t, &row_duals, volume_dual);
    let body = StarBody::hull_polytope(grid.clone(), t)?;
    Ok(ConvexSolution { body, row_duals, volume_dual, kkt_residual, active_set, newton_steps })
}

fn lagrangian_residual(
    a: &[f64],
    rows: &ConvexityConstraintSet,
    c: &[f64],
    t: &[f64],
    row_duals: &[f64],
    volume_dual: f64,
) -> f64 {
    let n = t.len();
    let mut grad = a.to_vec();
    for (row, &y) in rows.rows().iter().zip(row_duals) {
        let i = row.index;
        grad[i] += y * row.center;
        grad[(i + n - 1) % n] -= y * row.prev;
        grad[(i + 1) % n] -= y * row.next;
    }
    let mut vgrad = vec![0.0; n];
    volume_gradient(c, t, &mut vgrad);
    for j in 0..n {
        grad[j] += volume_dual * vgrad[j];
    }
    grad.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Stationarity, dual feasibility, and complementary slackness at a solved
/// point; `passes` applies the documented tolerances.
#[derive(Debug, Clone)]
pub struct KktReport {
    pub stationarity: f64,
    pub min_dual: f64,
    pub complementarity: f64,
    pub feasibility: f64,
    pub passes: bool,
}

pub fn verify_kkt(sol: &ConvexSolution, a: &[f64], grid: &SphereGrid) -> Result<KktReport, ConvexError> {
    let rows = build_convexity_constraints(grid)?;
    let c = edge_constants(grid);
    let t = sol.body.gauges();
    let stationarity = lagrangian_residual(a, &rows, &c, t, &sol.row_duals, sol.volume_dual);
    let min_dual = sol
        .row_duals
        .iter()
        .cloned()
        .fold(sol.volume_dual, f64::min);
    let g = rows.evaluate(t);
    let mut complementarity = (1.0 - polytope_volume(&c, t)).abs() * sol.volume_dual;
    for (gk, y) in g.iter().zip(&sol.row_duals) {
        complementarity = complementarity.max(gk.abs() * y);
    }
    let feasibility = g.iter().cloned().fold(0.0f64, f64::max);
    let passes = stationarity <= 1e-7
        && min_dual >= -1e-12
        && complementarity <= 1e-8
        && feasibility <= 1e-9;
    Ok(KktReport { stationarity, min_dual, complementarity, feasibility, passes })
}

/// Linear objective weights for which `<a, t>` equals the expected hull
/// gauge of the distribution: each atom splits onto its bracketing grid
/// directions with chord-interpolation sines.
pub fn hull_gauge_weights(
    dist: &AtomicDistribution,
    grid: &SphereGrid,
) -> Result<Vec<f64>, ConvexError> {
    let n = grid.len();
    let mut a = vec![0.0; n];
    for atom in dist.atoms() {
        let r = norm2(atom.point);
        let (i, local, gap) = locate_segment(grid, angle_of(atom.point))?;
        let j = (i + 1) % n;
        let denom = gap.sin();
        a[i] += atom.mass * r * (gap - local).sin() / denom;
        a[j] += atom.mass * r * local.sin() / denom;
    }
    Ok(a)
}

/// Stability certificate for the solved regularizers of two distributions:
/// the expected gauge of `Q` under `P`'s body is controlled by `Q`'s own
/// value plus the combined Lipschitz constants times the transport distance.
#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub lhs: f64,
    pub rhs: f64,
    pub w1: f64,
    pub lip_p: f64,
    pub lip_q: f64,
    pub margin: f64,
    pub holds: bool,
}

pub fn robustness_bound_check(
    p: &AtomicDistribution,
    q: &AtomicDistribution,
    grid: &SphereGrid,
) -> Result<RobustnessReport, ConvexError> {
    let opts = ConvexOptions::default();
    let body_p = solve_convex_regularizer(&hull_gauge_weights(p, grid)?, grid, &opts)?.body;
    let body_q = solve_convex_regularizer(&hull_gauge_weights(q, grid)?, grid, &opts)?.body;

    let lhs = expected_gauge(q, &body_p)?;
    let value_q = expected_gauge(q, &body_q)?;
    let lip_p = lipschitz_polytope(&body_p)?;
    let lip_q = lipschitz_polytope(&body_q)?;
    let w1 = union_w1(p, q)?;
    let rhs = value_q + (lip_p + lip_q) * w1;
    let margin = rhs - lhs;
    Ok(RobustnessReport { lhs, rhs, w1, lip_p, lip_q, margin, holds: lhs <= rhs + 1e-8 })
}

/// Transport distance between two atomic distributions over the union of
/// their supports (exact coordinates deduplicated).
pub fn union_w1(p: &AtomicDistribution, q: &AtomicDistribution) -> Result<f64, ConvexError> {
    let mut points: Vec<[f64; 2]> = Vec::new();
    let index_of = |pt: [f64; 2], points: &mut Vec<[f64; 2]>| -> usize {
        match points.iter().position(|&e| e == pt) {
            Some(i) => i,
            None => {
                points.push(pt);
                points.len() - 1
            }
        }
    };
    let mut p_mass = Vec::new();
    let mut q_mass = Vec::new();
    for atom in p.atoms() {
        let i = index_of(atom.point, &mut points);
        if i == p_mass.len() {
            p_mass.push(0.0);
            q_mass.push(0.0);
        }
        p_mass[i] += atom.mass;
    }
    for atom in q.atoms() {
        let i = index_of(atom.point, &mut points);
        if i == p_mass.len() {
            p_mass.push(0.0);
            q_mass.push(0.0);
        }
        q_mass[i] += atom.mass;
    }
    let cost = cost_matrix(&points, CostKind::Euclid)?;
    let pad = |mass: Vec<f64>| -> Result<AtomicDistribution, MeasureError> {
        let pts: Vec<([f64; 2], f64)> =
            points.iter().cloned().zip(mass).collect();
        AtomicDistribution::from_weighted_points(&pts)
    };
    Ok(w1_distance(&pad(p_mass)?, &pad(q_mass)?, &cost)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gauge_polytope, make_uniform_grid, unit_vector, volume_polytope};
    use rand::prelude::*;

    const PI: f64 = std::f64::consts::PI;
    const SQRT_2: f64 = std::f64::consts::SQRT_2;

    fn solve(a: &[f64], grid: &SphereGrid) -> ConvexSolution {
        solve_convex_regularizer(a, grid, &ConvexOptions::default()).unwrap()
    }

    fn basis_weights(n: usize) -> Vec<f64> {
        // equal masses on the four unit basis directions, as sector weights
        let grid = make_uniform_grid(n).unwrap();
        let dist = AtomicDistribution::from_weighted_points(&[
            ([1.0, 0.0], 0.25),
            ([0.0, 1.0], 0.25),
            ([-1.0, 0.0], 0.25),
            ([0.0, -1.0], 0.25),
        ])
        .unwrap();
        hull_gauge_weights(&dist, &grid).unwrap()
    }

    #[test]
    fn rows_on_the_eight_direction_grid() {
        let grid = make_uniform_grid(8).unwrap();
        let set = build_convexity_constraints(&grid).unwrap();
        assert_eq!(set.rows().len(), 8);
        assert!(!set.any_degenerate);
        for row in set.rows() {
            assert!((row.center - 1.0).abs() < 1e-15, "sin(pi/2) center");
            assert!((row.prev - (PI / 4.0).sin()).abs() < 1e-15);
            assert!((row.next - (PI / 4.0).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_gauges_are_always_feasible() {
        for n in [5usize, 8, 12, 17] {
            let grid = make_uniform_grid(n).unwrap();
            let set = build_convexity_constraints(&grid).unwrap();
            let g = set.evaluate(&vec![1.3; n]);
            for (i, gi) in g.iter().enumerate() {
                assert!(*gi < 0.0, "regular polygon row {i} must be strict on n={n}");
            }
        }
    }

    #[test]
    fn four_direction_rows_degenerate_but_stay() {
        let grid = make_uniform_grid(4).unwrap();
        let set = build_convexity_constraints(&grid).unwrap();
        assert!(set.any_degenerate);
        for row in set.rows() {
            assert!(row.degenerate);
            assert_eq!(row.center, 0.0, "sin(pi) rounds to zero");
            assert!((row.prev - 1.0).abs() < 1e-15);
            assert!((row.next - 1.0).abs() < 1e-15);
        }
        // the degenerate rows never bind
        let g = set.evaluate(&vec![0.7, 2.0, 0.1, 5.0]);
        assert!(g.iter().all(|&v| v < 0.0));
    }

    #[test]
    fn wide_second_neighbor_arc_is_rejected() {
        let grid = SphereGrid::from_parts(
            vec![0.0, 0.1, 3.3, 3.4],
            vec![TAU / 4.0; 4],
            2,
        )
        .unwrap();
        match build_convexity_constraints(&grid) {
            Err(ConvexError::AngleGap { prev, index, next, span }) => {
                assert_eq!((prev, index, next), (0, 1, 2), "first offending triple");
                assert!(span > PI);
            }
            other => panic!("expected the angle-gap error, got {other:?}"),
        }
    }

    #[test]
    fn basis_data_on_the_axis_grid_gives_the_cross_polytope() {
        let grid = make_uniform_grid(4).unwrap();
        let sol = solve(&[0.25; 4], &grid);
        for &t in sol.body.gauges() {
            assert!((t - SQRT_2).abs() <= 1e-6, "unit-area cross polytope gauge, got {t}");
        }
        assert!((volume_polytope(&sol.body).unwrap() - 1.0).abs() <= 1e-8);
        let report = verify_kkt(&sol, &[0.25; 4], &grid).unwrap();
        assert!(report.passes, "kkt report: {report:?}");
    }

    #[test]
    fn basis_data_on_a_refined_grid_recovers_the_cross_polytope() {
        let n = 16;
        let grid = make_uniform_grid(n).unwrap();
        let a = basis_weights(n);
        let sol = solve(&a, &grid);
        for (i, &t) in sol.body.gauges().iter().enumerate() {
            let th = grid.angle(i);
            let expected = SQRT_2 * (th.cos().abs() + th.sin().abs());
            assert!(
                (t - expected).abs() <= 1e-5,
                "gauge at sector {i}: {t} vs cross polytope {expected}"
            );
        }
        let report = verify_kkt(&sol, &a, &grid).unwrap();
        assert!(report.passes && report.stationarity <= 1e-7, "kkt report: {report:?}");

        // diagonal vertices sit on the chords: those rows are active with
        // positive duals, the basis corners are strictly convex with
        // vanishing duals
        for i in 0..n {
            if i % 4 == 0 {
                assert!(!sol.active_set[i], "corner row {i} must be strict");
                assert!(sol.row_duals[i] <= 1e-8, "strict row keeps a vanishing dual");
            } else {
                assert!(sol.active_set[i], "edge row {i} must bind");
            }
        }
    }

    #[test]
    fn extreme_weights_get_extreme_gauges() {
        // cyclic neighbor coupling makes the interior of the profile
        // non-monotone (the sector beside the cheapest direction rides on
        // its low volume price), but the extremes always respond: heaviest
        // sector smallest gauge, lightest sector largest
        let grid = make_uniform_grid(4).unwrap();
        let a = [0.1, 0.2, 0.3, 0.4];
        let sol = solve(&a, &grid);
        let t = sol.body.gauges();
        assert!((0..4).all(|j| t[0] >= t[j]), "lightest sector inflates: {t:?}");
        assert!((0..4).all(|j| t[3] <= t[j]), "heaviest sector shrinks: {t:?}");
        // stationarity in closed form: a_j t_j^2 / (1/t_{j-1} + 1/t_{j+1})
        // equals the volume multiplier (times a constant) in every sector
        let ratio =
            |j: usize| a[j] * t[j] * t[j] / (1.0 / t[(j + 3) % 4] + 1.0 / t[(j + 1) % 4]);
        for j in 1..4 {
            assert!(
                (ratio(j) - ratio(0)).abs() <= 1e-6 * ratio(0),
                "sector {j} breaks the uniform multiplier: {} vs {}",
                ratio(j),
                ratio(0)
            );
        }
        assert!((volume_polytope(&sol.body).unwrap() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn weights_confined_to_a_half_plane_are_rejected() {
        // with no data pulling back on the far arc the body flattens without
        // bound, so the solver refuses the instance instead of diverging
        let grid = make_uniform_grid(8).unwrap();
        let mut a = vec![0.0; 8];
        a[0] = 0.5;
        a[1] = 0.5;
        match solve_convex_regularizer(&a, &grid, &ConvexOptions::default()) {
            Err(ConvexError::DegenerateSupport { span, .. }) => {
                assert!(span >= PI - 1e-9, "reported arc must reach a half turn, got {span}");
            }
            other => panic!("expected the degenerate-support error, got {other:?}"),
        }
    }

    #[test]
    fn objective_matches_the_scaling_oracle_on_four_sectors() {
        // with four directions the convexity rows are vacuous, and any
        // profile rescales onto the volume shell without changing ratios, so
        // the optimum is the free minimum of <a, t> sqrt(V(t))
        let grid = make_uniform_grid(4).unwrap();
        let a = [0.15, 0.2, 0.3, 0.35];
        let c = edge_constants(&grid);
        let h = |t: &[f64]| -> f64 {
            a.iter().zip(t).map(|(ai, ti)| ai * ti).sum::<f64>() * polytope_volume(&c, t).sqrt()
        };
        let mut t = vec![1.0; 4];
        let mut step = 0.25;
        let mut best = h(&t);
        while step > 1e-9 {
            let mut improved = false;
            for j in 0..4 {
                for dir in [-1.0, 1.0] {
                    let mut trial = t.clone();
                    trial[j] += dir * step;
                    if trial[j] > 0.05 {
                        let v = h(&trial);
                        if v < best {
                            best = v;
                            t = trial;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        let sol = solve(&a, &grid);
        let objective: f64 = a.iter().zip(sol.body.gauges()).map(|(ai, ti)| ai * ti).sum();
        assert!(
            (objective - best).abs() <= 1e-5 * best.max(1.0),
            "solver {objective} vs oracle {best}"
        );
    }

    #[test]
    fn perturbing_the_solution_breaks_stationarity() {
        let grid = make_uniform_grid(16).unwrap();
        let a = basis_weights(16);
        let sol = solve(&a, &grid);
        let mut t = sol.body.gauges().to_vec();
        t[3] *= 1.01;
        let c = edge_constants(&grid);
        let gamma = polytope_volume(&c, &t).sqrt();
        for v in t.iter_mut() {
            *v *= gamma; // back on the volume shell
        }
        let mut tampered = sol.clone();
        tampered.body = StarBody::hull_polytope(grid.clone(), t).unwrap();
        let report = verify_kkt(&tampered, &a, &grid).unwrap();
        assert!(!report.passes, "stationarity must flag the perturbed point: {report:?}");
    }

    #[test]
    fn boundary_vertices_reproduce_their_gauges() {
        let n = 16;
        let grid = make_uniform_grid(n).unwrap();
        let sol = solve(&basis_weights(n), &grid);
        for i in 0..n {
            let g = gauge_polytope(&sol.body, unit_vector(grid.angle(i))).unwrap();
            assert!(
                (g - sol.body.gauges()[i]).abs() <= 1e-10,
                "vertex {i} re-derived gauge {g} vs stored {}",
                sol.body.gauges()[i]
            );
        }
    }

    #[test]
    fn rotating_the_weights_permutes_the_solution() {
        let n = 8;
        let grid = make_uniform_grid(n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let shift = 3usize;
        let rotated: Vec<f64> = (0..n).map(|i| a[(i + n - shift) % n]).collect();
        let sol = solve(&a, &grid);
        let sol_rot = solve(&rotated, &grid);
        for i in 0..n {
            let expected = sol.body.gauges()[(i + n - shift) % n];
            let got = sol_rot.body.gauges()[i];
            assert!(
                (got - expected).abs() <= 1e-10,
                "equivariance at {i}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn optimal_value_is_concave_in_the_weights() {
        let n = 8;
        let grid = make_uniform_grid(n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let value = |a: &[f64]| -> f64 {
            let sol = solve(a, &grid);
            a.iter().zip(sol.body.gauges()).map(|(ai, ti)| ai * ti).sum()
        };
        for _ in 0..5 {
            let a1: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let a2: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            for lambda in [0.3, 0.5, 0.7] {
                let mix: Vec<f64> =
                    a1.iter().zip(&a2).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
                let v_mix = value(&mix);
                let bound = lambda * value(&a1) + (1.0 - lambda) * value(&a2);
                assert!(
                    v_mix >= bound - 1e-8,
                    "pointwise infimum of linear maps must be concave: {v_mix} < {bound}"
                );
            }
        }
    }

    #[test]
    fn weights_reproduce_the_expected_hull_gauge() {
        let n = 16;
        let grid = make_uniform_grid(n).unwrap();
        let body = solve(&basis_weights(n), &grid).body;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let pts: Vec<([f64; 2], f64)> = (0..6)
            .map(|_| {
                let th = rng.random_range(0.0..TAU);
                let r = rng.random_range(0.3..2.0);
                ([r * th.cos(), r * th.sin()], 1.0 / 6.0)
            })
            .collect();
        let dist = AtomicDistribution::from_weighted_points(&pts).unwrap();
        let a = hull_gauge_weights(&dist, &grid).unwrap();
        let lin: f64 = a.iter().zip(body.gauges()).map(|(ai, ti)| ai * ti).sum();
        let exact = expected_gauge(&dist, &body).unwrap();
        assert!(
            (lin - exact).abs() <= 1e-12 * (1.0 + exact),
            "sine weights must reproduce the hull gauge: {lin} vs {exact}"
        );
    }

    #[test]
    fn identical_distributions_meet_the_bound_with_zero_slack_terms() {
        let grid = make_uniform_grid(8).unwrap();
        let dist = AtomicDistribution::from_weighted_points(&[
            ([1.0, 0.2], 0.5),
            ([-0.4, 0.9], 0.3),
            ([0.1, -1.1], 0.2),
        ])
        .unwrap();
        let report = robustness_bound_check(&dist, &dist, &grid).unwrap();
        assert!(report.w1.abs() <= 1e-10, "no transport between equal inputs");
        assert!(report.holds);
        assert!((report.lhs - report.rhs).abs() <= 1e-8, "equality up to solver residue");
    }

    #[test]
    fn shifting_one_atom_keeps_the_bound() {
        let grid = make_uniform_grid(12).unwrap();
        let base: Vec<([f64; 2], f64)> = (0..4)
            .map(|k| {
                let th = TAU * k as f64 / 4.0 + 0.1;
                ([th.cos(), th.sin()], 0.25)
            })
            .collect();
        let p = AtomicDistribution::from_weighted_points(&base).unwrap();
        let mut shifted = base.clone();
        let phi = 0.1 + TAU / 25.0;
        shifted[0] = ([phi.cos(), phi.sin()], 0.25);
        let q = AtomicDistribution::from_weighted_points(&shifted).unwrap();
        let report = robustness_bound_check(&p, &q, &grid).unwrap();
        assert!(report.holds, "stability bound must hold: {report:?}");
        assert!(report.w1 > 0.0 && report.margin >= 0.0);
    }

    #[test]
    fn random_pairs_respect_the_stability_bound() {
        let grid = make_uniform_grid(8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for trial in 0..20 {
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
                // one atom per quadrant keeps every zero-weight arc well
                // below a half turn, so both regularizers stay bounded
                let k = 4 + rng.random_range(0..=2usize);
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let pts: Vec<([f64; 2], f64)> = raw
                    .iter()
                    .enumerate()
                    .map(|(j, m)| {
                        let th = if j < 4 {
                            TAU / 4.0 * j as f64 + rng.random_range(0.1..TAU / 4.0 - 0.1)
                        } else {
                            rng.random_range(0.0..TAU)
                        };
                        let r = rng.random_range(0.4..1.6);
                        ([r * th.cos(), r * th.sin()], m / total)
                    })
                    .collect();
                AtomicDistribution::from_weighted_points(&pts).unwrap()
            };
            let p = sample(&mut rng);
            let q = sample(&mut rng);
            let report = robustness_bound_check(&p, &q, &grid).unwrap();
            assert!(report.holds, "trial {trial}: {report:?}");
        }
    }
}
