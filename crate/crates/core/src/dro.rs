//! Distributionally robust gauge optimization.
//!
//! The robust objective for a candidate support `v_1..v_n` (one point per
//! sector: the data atom when the sector holds one, the unit vector at the
//! sector center otherwise) is
//!
//! ```text
//! F(t) = max { sum_j q_j b_j t_j : q reachable from p on budget eps }
//! ```
//!
//! minimized over unit-volume gauges `t`, where `b_j = |v_j|_2` and a plan
//! is reachable when it redistributes the source masses `p` at total
//! transport cost at most `eps`. Both sides of this saddle admit exact
//! oracles, and the solver pinches them together:
//!
//! * the inner maximum is a budget knapsack with per-source caps, solved
//!   exactly by spending the budget greedily along the per-source concave
//!   envelopes of the (cost, gain) menus;
//! * for a *fixed* plan `q` the best body has the same closed form as the
//!   zero-budget optimizer, so every feasible plan certifies a lower bound
//!   on the robust value;
//! * the plan is improved by line-searched Frank-Wolfe mixes toward the
//!   greedy reply at its own closed-form response and toward the plan seen
//!   at the current iterate, keeping the bound monotone.
//!
//! The gauge side takes projected subgradient steps with Polyak lengths
//! aimed at the certified bound, and the loop stops as soon as the duality
//! gap clears the requested tolerance. The returned duals `(s, lambda)` are
//! recovered exactly by solving the inner transport LP at the final gauges.
//!
//! The subgradient step runs in radial coordinates `rho = 1/t` (the problem
//! stays convex there). The volume rescaling `t <- beta t` then points along
//! the volume-constraint normal — on a uniform grid in the plane,
//! `grad vol = w rho` is parallel to `rho` — so its fixed points are exactly
//! the constrained optima. Stepping directly in `t` would make the same
//! rescaling attract to spurious points where the subgradient aligns with
//! `t` itself.
//!
//! The critic variant plays two transport balls against each other (the
//! contrast side enters with a negated gauge), boxes the gauges at
//! `t <= 1/eps_ball` since the signed objective is otherwise unbounded, and
//! draws its lower bounds from the capped signed closed form instead.

use crate::closed_form::{optimal_critic, ClosedFormError};
use crate::geometry::{
    angle_of, gauge_pc, gauge_polytope, norm2, unit_vector, BodyKind, GeometryError, SphereGrid,
    StarBody,
};
use crate::lp::{build_inner_primal, solve_lp, LpError, LpStatus};
use crate::measures::{
    cost_matrix, AtomicDistribution, CostKind, CostMatrix, MeasureError, SignedSummary,
};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DroError {
    #[error("robustness radius must be finite and nonnegative, got {0}")]
    BadRadius(f64),
    #[error("sector {sector} holds more than one distinct support point; the discretization carries one candidate per sector")]
    SectorConflict { sector: usize },
    #[error("gauge cap 1/{eps_ball} is infeasible: the capped body's volume is already {ball_volume} > 1")]
    InfeasibleCap { eps_ball: f64, ball_volume: f64 },
    #[error("cap radius must be positive and finite, got {0}")]
    BadCap(f64),
    #[error("potential scale must be positive, got {0}; below the Lipschitz scale the supremum is unbounded")]
    NonPositiveScale(f64),
    #[error("sweep radii must be sorted ascending; entry {index} breaks the order")]
    UnsortedSweep { index: usize },
    #[error("subgradient method stalled: relative certificate gap {rel_gap:e} exceeds the tolerance; best iterate attached")]
    NotConverged { rel_gap: f64, solution: Box<DroSolution> },
    #[error("critic subgradient method stalled: relative certificate gap {rel_gap:e} exceeds the tolerance; best iterate attached")]
    CriticNotConverged { rel_gap: f64, solution: Box<CriticDroSolution> },
    #[error("inner transport solve reported {0:?}")]
    InnerSolveFailed(LpStatus),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
}

/// Knobs for the projected subgradient loop.
#[derive(Debug, Clone, Copy)]
pub struct DroOptions {
    pub max_iters: usize,
    /// Positive: legacy `c/sqrt(k)` schedule with this constant (the
    /// direction is normalized, so the constant is in gauge units) and no
    /// early stopping. Zero, the default, takes Polyak steps aimed at the
    /// certified lower bound and stops once the duality gap clears
    /// `gap_tol`.
    pub step_scale: f64,
    /// Relative tolerance on the certificate gap.
    pub gap_tol: f64,
    /// Gauges never drop below this; hits are reported (they flag the
    /// memorization pathology of spiky atomic data).
    pub t_floor: f64,
}

impl Default for DroOptions {
    fn default() -> Self {
        Self { max_iters: 50_000, step_scale: 0.0, gap_tol: 1e-4, t_floor: 1e-8 }
    }
}

/// Discretized robust problem over one candidate point per sector.
#[derive(Debug, Clone)]
pub struct DroProblem {
    grid: SphereGrid,
    support: Vec<[f64; 2]>,
    radii: Vec<f64>,
    masses: Vec<f64>,
    cost: CostMatrix,
    eps: f64,
}

fn candidate_support(
    grid: &SphereGrid,
    dist: &AtomicDistribution,
) -> Result<(Vec<[f64; 2]>, Vec<f64>, Vec<f64>), DroError> {
    let n = grid.len();
    let mut support: Vec<Option<[f64; 2]>> = vec![None; n];
    let mut masses = vec![0.0; n];
    for atom in dist.atoms() {
        let sector = grid.sector_of(angle_of(atom.point));
        match support[sector] {
            None => support[sector] = Some(atom.point),
            Some(existing) if existing == atom.point => {}
            Some(_) => return Err(DroError::SectorConflict { sector }),
        }
        masses[sector] += atom.mass;
    }
    let support: Vec<[f64; 2]> = support
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.unwrap_or_else(|| unit_vector(grid.angle(i))))
        .collect();
    let radii = support.iter().map(|&p| norm2(p)).collect();
    Ok((support, radii, masses))
}

impl DroProblem {
    pub fn new(
        grid: SphereGrid,
        dist: &AtomicDistribution,
        kind: CostKind,
        eps: f64,
    ) -> Result<Self, DroError> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(DroError::BadRadius(eps));
        }
        let (support, radii, masses) = candidate_support(&grid, dist)?;
        let cost = cost_matrix(&support, kind)?;
        Ok(Self { grid, support, radii, masses, cost, eps })
    }

    /// Same data with a different robustness radius.
    pub fn with_eps(&self, eps: f64) -> Result<Self, DroError> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(DroError::BadRadius(eps));
        }
        Ok(Self { eps, ..self.clone() })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn support(&self) -> &[[f64; 2]] {
        &self.support
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Robust solution with its transport-dual certificate.
#[derive(Debug, Clone)]
pub struct DroSolution {
    pub body: StarBody,
    /// Transport scale from the inner LP dual at the returned body; also the
    /// exact minimizer of `F(t, .)` at the returned gauges.
    pub s: f64,
    /// Per-candidate potential values from the inner LP dual.
    pub lambda: Vec<f64>,
    /// Outer value `F(t, s)` at the returned `(t, s)`.
    pub objective: f64,
    /// `objective - inner_value(t)`: by strong duality both sides coincide
    /// at the certified `s`, so this is a pure consistency residual.
    pub certificate_gap: f64,
    pub iterations: usize,
    pub floor_hits: usize,
}

struct SubgradientScratch {
    g_t: Vec<f64>,
    occupied: Vec<usize>,
}

/// `F` and its subgradient at `(t, s)`; active `j` picked at lowest index.
fn eval_dro(
    problem: &DroProblem,
    t: &[f64],
    s: f64,
    scratch: &mut SubgradientScratch,
) -> (f64, f64) {
    let n = t.len();
    let (b, p, c) = (&problem.radii, &problem.masses, &problem.cost);
    scratch.g_t.iter_mut().for_each(|g| *g = 0.0);
    let mut value = s * problem.eps;
    let mut g_s = problem.eps;
    for &i in &scratch.occupied {
        let mut best = f64::NEG_INFINITY;
        let mut best_j = 0;
        for j in 0..n {
            let v = b[j] * t[j] - s * c.at(i, j);
            if v > best {
                best = v;
                best_j = j;
            }
        }
        value += p[i] * best;
        scratch.g_t[best_j] += p[i] * b[best_j];
        g_s -= p[i] * c.at(i, best_j);
    }
    (value, g_s)
}

/// A feasible transport plan, reported by its arrival masses and value.
struct InnerPlan {
    value: f64,
    q: Vec<f64>,
}

/// Exact optimum of the inner transport problem on the fixed support:
/// maximize `sum_j q_j g_j` over arrival masses `q` reachable from `masses`
/// at total cost at most `eps`. Each source's options form a menu of
/// (cost, gain) pairs per unit mass; since mass may split across entries,
/// the per-source value of a given spend is the upper concave envelope of
/// its menu, and the shared budget is then spent greedily on envelope
/// segments in slope order — exact for a knapsack with per-source caps.
fn inner_exact(gauges: &[f64], masses: &[f64], cost: &CostMatrix, eps: f64) -> InnerPlan {
    let n = gauges.len();
    // Envelope vertices per source: (spend, gain, destination), both per
    // unit mass, anchored at the best free move (staying counts).
    let mut hulls: Vec<(usize, Vec<(f64, f64, usize)>)> = Vec::new();
    let mut segments: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        if masses[i] <= 0.0 {
            continue;
        }
        let mut base = (0.0f64, i);
        for j in 0..n {
            if cost.at(i, j) == 0.0 {
                let v = gauges[j] - gauges[i];
                if v > base.0 {
                    base = (v, j);
                }
            }
        }
        let mut menu: Vec<(f64, f64, usize)> = (0..n)
            .filter_map(|j| {
                let c = cost.at(i, j);
                let v = gauges[j] - gauges[i];
                (c > 0.0 && v > base.0).then_some((c, v, j))
            })
            .collect();
        menu.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(b.1.partial_cmp(&a.1).unwrap())
                .then(a.2.cmp(&b.2))
        });
        let mut hull: Vec<(f64, f64, usize)> = vec![(0.0, base.0, base.1)];
        for (c, v, j) in menu {
            if v <= hull.last().unwrap().1 {
                continue;
            }
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // pop while the new point sees `a` at a steeper-or-equal
                // slope than `b` does (cross-multiplied, widths positive)
                if (v - a.1) * (b.0 - a.0) >= (b.1 - a.1) * (c - a.0) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push((c, v, j));
        }
        let h = hulls.len();
        for k in 0..hull.len() - 1 {
            let slope = (hull[k + 1].1 - hull[k].1) / (hull[k + 1].0 - hull[k].0);
            segments.push((slope, h, k));
        }
        hulls.push((i, hull));
    }
    segments
        .sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    // Per-source position on its envelope: current vertex plus the mass
    // fraction already moved toward the next one. A source's own slopes
    // strictly decrease, so the global slope order visits its segments in
    // order; a partial take only happens when the budget dies.
    let mut pos: Vec<(usize, f64)> = vec![(0, 0.0); hulls.len()];
    let mut budget = eps;
    for (_, h, k) in segments {
        if budget <= 0.0 {
            break;
        }
        if pos[h].0 != k {
            continue;
        }
        let (i, hull) = &hulls[h];
        let width = masses[*i] * (hull[k + 1].0 - hull[k].0);
        if width <= budget {
            budget -= width;
            pos[h] = (k + 1, 0.0);
        } else {
            pos[h] = (k, budget / width);
            budget = 0.0;
        }
    }

    let mut q = vec![0.0; n];
    for (idx, (i, hull)) in hulls.iter().enumerate() {
        let (k, frac) = pos[idx];
        let k = k.min(hull.len() - 1);
        let frac = if k + 1 < hull.len() { frac.clamp(0.0, 1.0) } else { 0.0 };
        q[hull[k].2] += masses[*i] * (1.0 - frac);
        if frac > 0.0 {
            q[hull[k + 1].2] += masses[*i] * frac;
        }
    }
    let value = q.iter().zip(gauges).map(|(qi, g)| qi * g).sum();
    InnerPlan { value, q }
}

/// `min <alpha, t>` over unit-volume bodies: `(S/d)^(1/d) * S` with
/// `S = sum w^(1/(d+1)) alpha^(d/(d+1))`. Sectors with `alpha = 0`
/// contribute nothing — their gauge drifts off to infinity in the infimum.
fn shell_value(weights: &[f64], alpha: &[f64], d: f64) -> f64 {
    let p = 1.0 / (d + 1.0);
    let s: f64 = weights
        .iter()
        .zip(alpha)
        .map(|(&w, &a)| if a > 0.0 { w.powf(p) * a.powf(d * p) } else { 0.0 })
        .sum();
    (s / d).powf(1.0 / d) * s
}

/// Minimizer behind [`shell_value`], with massless sectors capped at
/// `t_cap` so the result stays a usable gauge vector (its volume is then at
/// most one rather than exactly one).
fn shell_argmin(weights: &[f64], alpha: &[f64], d: f64, t_cap: f64) -> Vec<f64> {
    let p = 1.0 / (d + 1.0);
    let s: f64 = weights
        .iter()
        .zip(alpha)
        .map(|(&w, &a)| if a > 0.0 { w.powf(p) * a.powf(d * p) } else { 0.0 })
        .sum();
    if s <= 0.0 {
        return vec![t_cap; weights.len()];
    }
    let c = (s / d).powf(1.0 / d);
    weights
        .iter()
        .zip(alpha)
        .map(|(&w, &a)| if a > 0.0 { (c * (w / a).powf(p)).min(t_cap) } else { t_cap })
        .collect()
}

/// Lower bound certified by the plan `q`: the closed-form value at the
/// arrival summary `alpha_j = q_j b_j`.
fn plan_bound(weights: &[f64], radii: &[f64], q: &[f64], d: f64) -> f64 {
    mixed_bound(weights, radii, q, q, 0.0, d)
}

/// [`plan_bound`] along the segment `(1-gamma) q + gamma v`.
fn mixed_bound(weights: &[f64], radii: &[f64], q: &[f64], v: &[f64], gamma: f64, d: f64) -> f64 {
    let alpha: Vec<f64> =
        (0..weights.len()).map(|j| ((1.0 - gamma) * q[j] + gamma * v[j]) * radii[j]).collect();
    shell_value(weights, &alpha, d)
}

/// Golden-section maximization of a concave section over `[0, 1]`.
fn golden_max(evals: usize, f: &mut dyn FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..evals {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Running adversary plan and the bound it certifies.
struct Adversary {
    q: Vec<f64>,
    value: f64,
}

impl Adversary {
    /// Line-searched Frank-Wolfe mix toward a candidate plan. The feasible
    /// plans form a convex set, so every mix stays feasible and the bound
    /// never decreases.
    fn mix_toward(&mut self, cand: &[f64], weights: &[f64], radii: &[f64], d: f64) {
        let (gamma, value) =
            golden_max(24, &mut |g| mixed_bound(weights, radii, &self.q, cand, g, d));
        if value > self.value {
            for (qj, &cj) in self.q.iter_mut().zip(cand) {
                *qj = (1.0 - gamma) * *qj + gamma * cj;
            }
            self.value = value;
        }
    }
}

/// Cheap feasible plans to seed the adversary: stay put, spread toward the
/// global sector profile, spread within nearest-source cells (cost ties
/// split evenly), and spread within a few cost thresholds. Each spread
/// moves the largest budget-feasible fraction toward its target profile.
fn seed_plans(masses: &[f64], weights: &[f64], cost: &CostMatrix, eps: f64) -> Vec<Vec<f64>> {
    let n = masses.len();
    let mut plans = vec![masses.to_vec()];
    let mut push_spread = |share: &dyn Fn(usize, usize) -> f64| {
        let mut moved = vec![0.0; n];
        let mut total_cost = 0.0;
        for i in 0..n {
            if masses[i] <= 0.0 {
                continue;
            }
            let z: f64 = (0..n).map(|j| share(i, j)).sum();
            if z <= 0.0 {
                moved[i] += masses[i];
                continue;
            }
            for j in 0..n {
                let m = masses[i] * share(i, j) / z;
                moved[j] += m;
                total_cost += m * cost.at(i, j);
            }
        }
        let eta = if total_cost > 0.0 { (eps / total_cost).min(1.0) } else { 1.0 };
        plans.push((0..n).map(|j| (1.0 - eta) * masses[j] + eta * moved[j]).collect());
    };

    push_spread(&|_, j| weights[j]);

    let sources: Vec<usize> = (0..n).filter(|&i| masses[i] > 0.0).collect();
    if !sources.is_empty() {
        let mut cells = vec![0.0; n * n];
        for j in 0..n {
            let nearest =
                sources.iter().map(|&i| cost.at(i, j)).fold(f64::INFINITY, f64::min);
            let ties: Vec<usize> = sources
                .iter()
                .copied()
                .filter(|&i| cost.at(i, j) <= nearest + 1e-12 * (1.0 + nearest))
                .collect();
            for &i in &ties {
                cells[i * n + j] = weights[j] / ties.len() as f64;
            }
        }
        push_spread(&|i, j| cells[i * n + j]);
    }

    let diam = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max(cost.at(i, j)));
    for f in [0.5, 0.25, 0.125, 0.0625] {
        let r = diam * f;
        push_spread(&|i, j| if cost.at(i, j) <= r { weights[j] } else { 0.0 });
    }
    plans
}

fn volume_of_radial(grid: &SphereGrid, rho: &[f64]) -> f64 {
    let d = grid.dim() as i32;
    rho.iter()
        .enumerate()
        .map(|(i, &ri)| grid.weight(i) * ri.powi(d))
        .sum::<f64>()
        / grid.dim() as f64
}

/// Shrink back to the unit-volume shell when the volume overflows. In gauge
/// language this is `t <- beta t` with `beta = vol^(1/d)`, landing exactly on
/// volume 1 because the volume is `d`-homogeneous in the radial profile.
fn project_volume(grid: &SphereGrid, rho: &mut [f64]) {
    let vol = volume_of_radial(grid, rho);
    if vol > 1.0 {
        let beta = vol.powf(1.0 / grid.dim() as f64);
        rho.iter_mut().for_each(|ri| *ri /= beta);
    }
}

fn uniform_unit_volume_gauge(grid: &SphereGrid) -> f64 {
    let w_total: f64 = grid.weights().iter().sum();
    (w_total / grid.dim() as f64).powf(1.0 / grid.dim() as f64)
}

pub fn solve_dro(problem: &DroProblem, opts: &DroOptions) -> Result<DroSolution, DroError> {
    let n = problem.grid.len();
    let d = problem.grid.dim() as f64;
    let weights = problem.grid.weights();
    let radii = &problem.radii;
    let legacy = opts.step_scale > 0.0;

    let t0 = uniform_unit_volume_gauge(&problem.grid);
    let rho_cap = 1.0 / opts.t_floor;
    let mut rho = vec![1.0 / t0; n];
    let mut t = vec![t0; n];
    let mut floor_hits = 0usize;

    let mut adversary = Adversary { q: problem.masses.clone(), value: f64::NEG_INFINITY };
    for plan in seed_plans(&problem.masses, weights, &problem.cost, problem.eps) {
        let value = plan_bound(weights, radii, &plan, d);
        if value > adversary.value {
            adversary = Adversary { q: plan, value };
        }
    }

    let mut f_best = f64::INFINITY;
    let mut rho_best = rho.clone();
    let mut certified = false;
    let mut iters = 0usize;
    let mut gauges = vec![0.0; n];
    let mut g_rho = vec![0.0; n];

    for k in 1..=opts.max_iters {
        iters = k;
        for j in 0..n {
            gauges[j] = radii[j] * t[j];
        }
        let plan = inner_exact(&gauges, &problem.masses, &problem.cost, problem.eps);
        if plan.value < f_best {
            f_best = plan.value;
            rho_best.copy_from_slice(&rho);
        }

        // Adversary turn: best-response body to the running plan, the
        // greedy reply there as a fresh vertex (and a free upper
        // candidate), then monotone mixes toward both observed plans.
        let alpha: Vec<f64> = (0..n).map(|j| adversary.q[j] * radii[j]).collect();
        let t_resp = shell_argmin(weights, &alpha, d, rho_cap);
        for j in 0..n {
            gauges[j] = radii[j] * t_resp[j];
        }
        let reply = inner_exact(&gauges, &problem.masses, &problem.cost, problem.eps);
        if reply.value < f_best {
            f_best = reply.value;
            for j in 0..n {
                rho_best[j] = 1.0 / t_resp[j];
            }
        }
        adversary.mix_toward(&reply.q, weights, radii, d);
        adversary.mix_toward(&plan.q, weights, radii, d);

        if !legacy && f_best - adversary.value <= opts.gap_tol * (1.0 + f_best.abs()) {
            certified = true;
            break;
        }

        let mut g_sq = 0.0;
        for j in 0..n {
            // chain rule: d/d rho = -t^2 d/dt, and dF/dt_j = q_j b_j
            g_rho[j] = -plan.q[j] * radii[j] * t[j] * t[j];
            g_sq += g_rho[j] * g_rho[j];
        }
        if g_sq.sqrt() < 1e-15 {
            break; // the adversary scores zero; nothing left to shrink
        }
        let step = if legacy {
            opts.step_scale / (k as f64).sqrt() / g_sq.sqrt()
        } else {
            (plan.value - adversary.value).max(0.0) / g_sq
        };
        for j in 0..n {
            rho[j] -= step * g_rho[j];
            if rho[j] > rho_cap {
                rho[j] = rho_cap;
                floor_hits += 1;
            }
        }
        project_volume(&problem.grid, &mut rho);
        for j in 0..n {
            t[j] = 1.0 / rho[j];
        }
    }

    let mut scratch = SubgradientScratch {
        g_t: vec![0.0; n],
        occupied: (0..n).filter(|&i| problem.masses[i] > 0.0).collect(),
    };
    let best_t = rho_best.iter().map(|r| 1.0 / r).collect();
    let solution = finish_dro(problem, best_t, opts, floor_hits, iters, &mut scratch)?;
    if !legacy && !certified {
        let rel_gap = (f_best - adversary.value) / (1.0 + f_best.abs());
        return Err(DroError::NotConverged { rel_gap, solution: Box::new(solution) });
    }
    Ok(solution)
}

/// Polish at the final gauges: the inner transport LP pins the exact dual
/// pair `(s, lambda)`, and re-evaluating the outer objective at that `s`
/// must reproduce the LP optimum — the certificate.
fn finish_dro(
    problem: &DroProblem,
    t: Vec<f64>,
    opts: &DroOptions,
    floor_hits: usize,
    iterations: usize,
    scratch: &mut SubgradientScratch,
) -> Result<DroSolution, DroError> {
    let n = t.len();
    let gauges: Vec<f64> = (0..n).map(|j| problem.radii[j] * t[j]).collect();
    let lp = build_inner_primal(&gauges, &problem.masses, &problem.cost, problem.eps)?;
    let inner = solve_lp(&lp)?;
    if inner.status != LpStatus::Optimal {
        return Err(DroError::InnerSolveFailed(inner.status));
    }
    let s = inner.dual[0].max(0.0);
    let lambda = inner.dual[1..=n].to_vec();
    let (objective, _) = eval_dro(problem, &t, s, scratch);
    let body = StarBody::piecewise_constant(problem.grid.clone(), t)?;
    let certificate_gap = objective - inner.objective;
    let solution =
        DroSolution { body, s, lambda, objective, certificate_gap, iterations, floor_hits };
    let rel_gap = certificate_gap.abs() / (1.0 + inner.objective.abs());
    if rel_gap > opts.gap_tol {
        return Err(DroError::NotConverged { rel_gap, solution: Box::new(solution) });
    }
    Ok(solution)
}

/// One entry of an epsilon sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub eps: f64,
    /// `max t / min t`: 1 for the round body, large for spiky ones.
    pub anisotropy: f64,
    pub solution: DroSolution,
}

/// Solves the same problem across a sorted list of robustness radii. Entries
/// run in parallel; each solve is deterministic, so the output matches the
/// sequential order.
pub fn epsilon_sweep(
    problem: &DroProblem,
    eps_list: &[f64],
    opts: &DroOptions,
) -> Result<Vec<SweepEntry>, DroError> {
    for (index, pair) in eps_list.windows(2).enumerate() {
        if pair[1] < pair[0] {
            return Err(DroError::UnsortedSweep { index: index + 1 });
        }
    }
    eps_list
        .par_iter()
        .map(|&eps| {
            let solution = solve_dro(&problem.with_eps(eps)?, opts)?;
            let t = solution.body.gauges();
            let max = t.iter().cloned().fold(f64::MIN, f64::max);
            let min = t.iter().cloned().fold(f64::MAX, f64::min);
            Ok(SweepEntry { eps, anisotropy: max / min, solution })
        })
        .collect()
}

/// Critic problem: contrast two distributions over a shared candidate
/// support, with independent transport budgets and a gauge cap.
#[derive(Debug, Clone)]
pub struct CriticDroProblem {
    grid: SphereGrid,
    support: Vec<[f64; 2]>,
    radii: Vec<f64>,
    p: Vec<f64>,
    q: Option<Vec<f64>>,
    cost: CostMatrix,
    eps_p: f64,
    eps_q: f64,
    eps_ball: f64,
}

impl CriticDroProblem {
    pub fn new(
        grid: SphereGrid,
        dist_p: &AtomicDistribution,
        dist_q: Option<&AtomicDistribution>,
        kind: CostKind,
        eps_p: f64,
        eps_q: f64,
        eps_ball: f64,
    ) -> Result<Self, DroError> {
        if !eps_p.is_finite() || eps_p < 0.0 {
            return Err(DroError::BadRadius(eps_p));
        }
        if !eps_q.is_finite() || eps_q < 0.0 {
            return Err(DroError::BadRadius(eps_q));
        }
        if !eps_ball.is_finite() || eps_ball <= 0.0 {
            return Err(DroError::BadCap(eps_ball));
        }
        let d = grid.dim() as f64;
        let w_total: f64 = grid.weights().iter().sum();
        let ball_volume = w_total * eps_ball.powf(d) / d;
        if ball_volume > 1.0 + 1e-12 {
            return Err(DroError::InfeasibleCap { eps_ball, ball_volume });
        }

        let (support_p, _, p) = candidate_support(&grid, dist_p)?;
        let (support, q) = match dist_q {
            None => (support_p, None),
            Some(dq) => {
                let (support_q, _, q) = candidate_support(&grid, dq)?;
                // both sides must agree on the candidate they pin per sector
                let mut merged = Vec::with_capacity(grid.len());
                for i in 0..grid.len() {
                    let from_p = p[i] > 0.0;
                    let from_q = q[i] > 0.0;
                    merged.push(match (from_p, from_q) {
                        (true, true) if support_p[i] != support_q[i] => {
                            return Err(DroError::SectorConflict { sector: i })
                        }
                        (_, true) => support_q[i],
                        _ => support_p[i],
                    });
                }
                (merged, Some(q))
            }
        };
        let radii = support.iter().map(|&pt| norm2(pt)).collect();
        let cost = cost_matrix(&support, kind)?;
        Ok(Self { grid, support, radii, p, q, cost, eps_p, eps_q, eps_ball })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn support(&self) -> &[[f64; 2]] {
        &self.support
    }

    pub fn eps_ball(&self) -> f64 {
        self.eps_ball
    }
}

/// Certified transport dual for one side of the critic objective.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub s: f64,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CriticDroSolution {
    pub body: StarBody,
    pub p_side: DualCertificate,
    /// Absent when the problem has no contrast distribution.
    pub q_side: Option<DualCertificate>,
    pub objective: f64,
    pub certificate_gap: f64,
    pub iterations: usize,
    pub floor_hits: usize,
    pub cap_hits: usize,
}

/// Clamp the radial profile into `[rho_min, rho_max]` (the gauge cap is the
/// radial floor), then alternate volume rescaling and re-clamping.
/// Terminates because each pass either reaches the unit-volume shell or pins
/// strictly more coordinates at the radial floor, and the all-pinned profile
/// is volume-feasible by construction.
fn project_capped(grid: &SphereGrid, rho: &mut [f64], rho_min: f64, rho_max: f64) -> usize {
    let mut cap_hits = 0;
    for ri in rho.iter_mut() {
        if *ri > rho_max {
            *ri = rho_max;
        }
        if *ri < rho_min {
            *ri = rho_min;
            cap_hits += 1;
        }
    }
    for _ in 0..64 {
        let vol = volume_of_radial(grid, rho);
        if vol <= 1.0 + 1e-14 {
            break;
        }
        let beta = vol.powf(1.0 / grid.dim() as f64);
        for ri in rho.iter_mut() {
            *ri = (*ri / beta).max(rho_min);
        }
    }
    cap_hits
}

/// Capped signed closed form: value and gauges of the body minimizing
/// `<sigma, t>` over unit-volume bodies with `t <= 1/eps_ball`. Any pair of
/// feasible plans certifies this as a lower bound on the critic value.
fn critic_shell(problem: &CriticDroProblem, sigma: Vec<f64>) -> Result<(f64, Vec<f64>), DroError> {
    let summary = SignedSummary { grid: problem.grid.clone(), sigma };
    let solution = optimal_critic(&summary, problem.eps_ball)?;
    let t = solution.body.gauges().to_vec();
    let value = summary.sigma.iter().zip(&t).map(|(a, g)| a * g).sum();
    Ok((value, t))
}

/// Running plan pair for the critic adversary and the bound it certifies.
struct CriticAdversary {
    p: Vec<f64>,
    q: Vec<f64>,
    value: f64,
}

impl CriticAdversary {
    /// Joint line-searched mix toward a candidate plan pair; monotone for
    /// the same reason as the one-sided version. Failed closed-form
    /// evaluations (impossible past the constructor's feasibility checks)
    /// just leave the bound where it was.
    fn mix_toward(&mut self, problem: &CriticDroProblem, cand_p: &[f64], cand_q: &[f64]) {
        let radii = &problem.radii;
        let n = radii.len();
        let mut sigma = vec![0.0; n];
        let (gamma, value) = golden_max(20, &mut |g| {
            for j in 0..n {
                let p = (1.0 - g) * self.p[j] + g * cand_p[j];
                let q = (1.0 - g) * self.q[j] + g * cand_q[j];
                sigma[j] = (p - q) * radii[j];
            }
            critic_shell(problem, sigma.clone()).map_or(f64::NEG_INFINITY, |(v, _)| v)
        });
        if value > self.value {
            for j in 0..n {
                self.p[j] = (1.0 - gamma) * self.p[j] + gamma * cand_p[j];
                self.q[j] = (1.0 - gamma) * self.q[j] + gamma * cand_q[j];
            }
            self.value = value;
        }
    }
}

fn eval_critic(
    problem: &CriticDroProblem,
    t: &[f64],
    s_p: f64,
    s_q: f64,
    g_t: &mut [f64],
) -> (f64, f64, f64) {
    let n = t.len();
    let (b, c) = (&problem.radii, &problem.cost);
    g_t.iter_mut().for_each(|g| *g = 0.0);
    let mut value = s_p * problem.eps_p + s_q * problem.eps_q;
    let mut g_sp = problem.eps_p;
    let mut g_sq = problem.eps_q;
    for i in 0..n {
        if problem.p[i] > 0.0 {
            let mut best = f64::NEG_INFINITY;
            let mut best_j = 0;
            for j in 0..n {
                let v = b[j] * t[j] - s_p * c.at(i, j);
                if v > best {
                    best = v;
                    best_j = j;
                }
            }
            value += problem.p[i] * best;
            g_t[best_j] += problem.p[i] * b[best_j];
            g_sp -= problem.p[i] * c.at(i, best_j);
        }
    }
    if let Some(q) = &problem.q {
        for i in 0..n {
            if q[i] > 0.0 {
                let mut best = f64::NEG_INFINITY;
                let mut best_j = 0;
                for j in 0..n {
                    let v = -b[j] * t[j] - s_q * c.at(i, j);
                    if v > best {
                        best = v;
                        best_j = j;
                    }
                }
                value += q[i] * best;
                g_t[best_j] -= q[i] * b[best_j];
                g_sq -= q[i] * c.at(i, best_j);
            }
        }
    }
    (value, g_sp, g_sq)
}

pub fn solve_dro_critic(
    problem: &CriticDroProblem,
    opts: &DroOptions,
) -> Result<CriticDroSolution, DroError> {
    let n = problem.grid.len();
    let weights = problem.grid.weights();
    let radii = &problem.radii;
    let legacy = opts.step_scale > 0.0;
    let cap = 1.0 / problem.eps_ball;
    let rho_min = problem.eps_ball;
    let rho_max = 1.0 / opts.t_floor;
    let mut g_t = vec![0.0; n];

    // start on the cap: the zero-signal optimum, and feasible by the
    // constructor's volume check
    let mut rho = vec![rho_min; n];
    let mut t = vec![cap; n];
    let mut floor_hits = 0usize;
    let mut cap_hits = 0usize;

    let no_contrast = vec![0.0; n];
    let p_seeds = seed_plans(&problem.p, weights, &problem.cost, problem.eps_p);
    let q_seeds = match &problem.q {
        Some(q) => seed_plans(q, weights, &problem.cost, problem.eps_q),
        None => vec![no_contrast.clone()],
    };
    let mut adversary =
        CriticAdversary { p: problem.p.clone(), q: no_contrast.clone(), value: f64::NEG_INFINITY };
    for sp in &p_seeds {
        for sq in &q_seeds {
            let sigma = (0..n).map(|j| (sp[j] - sq[j]) * radii[j]).collect();
            let (value, _) = critic_shell(problem, sigma)?;
            if value > adversary.value {
                adversary = CriticAdversary { p: sp.clone(), q: sq.clone(), value };
            }
        }
    }

    let mut f_best = f64::INFINITY;
    let mut rho_best = rho.clone();
    let mut certified = false;
    let mut iterations = 0usize;
    let mut gauges = vec![0.0; n];
    let mut neg_gauges = vec![0.0; n];

    for k in 1..=opts.max_iters {
        iterations = k;
        for j in 0..n {
            gauges[j] = radii[j] * t[j];
            neg_gauges[j] = -gauges[j];
        }
        let plan_p = inner_exact(&gauges, &problem.p, &problem.cost, problem.eps_p);
        let plan_q = match &problem.q {
            Some(q) => inner_exact(&neg_gauges, q, &problem.cost, problem.eps_q),
            None => InnerPlan { value: 0.0, q: no_contrast.clone() },
        };
        let f = plan_p.value + plan_q.value;
        if f < f_best {
            f_best = f;
            rho_best.copy_from_slice(&rho);
        }

        let sigma = (0..n).map(|j| (adversary.p[j] - adversary.q[j]) * radii[j]).collect();
        let (_, t_resp) = critic_shell(problem, sigma)?;
        for j in 0..n {
            gauges[j] = radii[j] * t_resp[j];
            neg_gauges[j] = -gauges[j];
        }
        let reply_p = inner_exact(&gauges, &problem.p, &problem.cost, problem.eps_p);
        let reply_q = match &problem.q {
            Some(q) => inner_exact(&neg_gauges, q, &problem.cost, problem.eps_q),
            None => InnerPlan { value: 0.0, q: no_contrast.clone() },
        };
        if reply_p.value + reply_q.value < f_best {
            f_best = reply_p.value + reply_q.value;
            for j in 0..n {
                rho_best[j] = 1.0 / t_resp[j];
            }
        }
        adversary.mix_toward(problem, &reply_p.q, &reply_q.q);
        adversary.mix_toward(problem, &plan_p.q, &plan_q.q);

        if !legacy && f_best - adversary.value <= opts.gap_tol * (1.0 + f_best.abs()) {
            certified = true;
            break;
        }

        let mut g_sq_norm = 0.0;
        for j in 0..n {
            g_t[j] = -(plan_p.q[j] - plan_q.q[j]) * radii[j] * t[j] * t[j];
            g_sq_norm += g_t[j] * g_t[j];
        }
        if g_sq_norm.sqrt() < 1e-15 {
            break;
        }
        let step = if legacy {
            opts.step_scale / (k as f64).sqrt() / g_sq_norm.sqrt()
        } else {
            (f - adversary.value).max(0.0) / g_sq_norm
        };
        for j in 0..n {
            rho[j] -= step * g_t[j];
            if rho[j] > rho_max {
                floor_hits += 1;
            }
        }
        cap_hits += project_capped(&problem.grid, &mut rho, rho_min, rho_max);
        for j in 0..n {
            t[j] = 1.0 / rho[j];
        }
    }
    let best_t: Vec<f64> = rho_best.iter().map(|r| 1.0 / r).collect();
    let true_rel_gap = (f_best - adversary.value) / (1.0 + f_best.abs());

    // Certify each side with its own transport LP at the final gauges.
    let gauges: Vec<f64> = (0..n).map(|j| problem.radii[j] * best_t[j]).collect();
    let lp_p = build_inner_primal(&gauges, &problem.p, &problem.cost, problem.eps_p)?;
    let inner_p = solve_lp(&lp_p)?;
    if inner_p.status != LpStatus::Optimal {
        return Err(DroError::InnerSolveFailed(inner_p.status));
    }
    let p_side =
        DualCertificate { s: inner_p.dual[0].max(0.0), lambda: inner_p.dual[1..=n].to_vec() };
    let mut inner_value = inner_p.objective;
    let q_side = match &problem.q {
        None => None,
        Some(q) => {
            let neg_gauges: Vec<f64> = gauges.iter().map(|g| -g).collect();
            let lp_q = build_inner_primal(&neg_gauges, q, &problem.cost, problem.eps_q)?;
            let inner_q = solve_lp(&lp_q)?;
            if inner_q.status != LpStatus::Optimal {
                return Err(DroError::InnerSolveFailed(inner_q.status));
            }
            inner_value += inner_q.objective;
            Some(DualCertificate {
                s: inner_q.dual[0].max(0.0),
                lambda: inner_q.dual[1..=n].to_vec(),
            })
        }
    };

    let s_q_dual = q_side.as_ref().map_or(0.0, |c| c.s);
    let (objective, _, _) = eval_critic(problem, &best_t, p_side.s, s_q_dual, &mut g_t);
    let body = StarBody::piecewise_constant(problem.grid.clone(), best_t)?;
    let certificate_gap = objective - inner_value;
    let solution = CriticDroSolution {
        body,
        p_side,
        q_side,
        objective,
        certificate_gap,
        iterations,
        floor_hits,
        cap_hits,
    };
    let rel_gap = certificate_gap.abs() / (1.0 + inner_value.abs());
    if rel_gap > opts.gap_tol {
        return Err(DroError::CriticNotConverged { rel_gap, solution: Box::new(solution) });
    }
    if !legacy && !certified {
        return Err(DroError::CriticNotConverged {
            rel_gap: true_rel_gap,
            solution: Box::new(solution),
        });
    }
    Ok(solution)
}

/// Sampling resolution for [`critic_potential`].
#[derive(Debug, Clone, Copy)]
pub struct PotentialSamples {
    pub radial_steps: usize,
    pub angular_steps: usize,
    pub r_max: f64,
}

impl Default for PotentialSamples {
    fn default() -> Self {
        Self { radial_steps: 64, angular_steps: 128, r_max: 4.0 }
    }
}

/// Discrete supremum of `|y|_K - s |x - y|_2` over a polar sample grid
/// augmented with `y = x` and `y = 0`; a lower bound on the transport
/// potential, exact in the limit of dense sampling.
pub fn critic_potential(
    body: &StarBody,
    s: f64,
    x: [f64; 2],
    samples: &PotentialSamples,
) -> Result<f64, DroError> {
    if !(s > 0.0) {
        return Err(DroError::NonPositiveScale(s));
    }
    let gauge = |y: [f64; 2]| -> Result<f64, GeometryError> {
        match body.kind() {
            BodyKind::PiecewiseConstant => gauge_pc(body, y),
            BodyKind::HullPolytope => gauge_polytope(body, y),
        }
    };
    let score = |y: [f64; 2], best: &mut f64| -> Result<(), GeometryError> {
        let v = gauge(y)? - s * (x[0] - y[0]).hypot(x[1] - y[1]);
        if v > *best {
            *best = v;
        }
        Ok(())
    };
    let mut best = f64::NEG_INFINITY;
    score([0.0, 0.0], &mut best)?;
    score(x, &mut best)?;
    let m = samples.angular_steps.max(1);
    let r_steps = samples.radial_steps.max(1);
    for k in 0..m {
        let theta = crate::geometry::TAU * k as f64 / m as f64;
        let (cos, sin) = (theta.cos(), theta.sin());
        for ri in 1..=r_steps {
            let r = samples.r_max * ri as f64 / r_steps as f64;
            score([r * cos, r * sin], &mut best)?;
        }
    }
    Ok(best)
}

/// Exact growth rate of the inner transport value at zero budget: the best
/// per-unit-cost gauge improvement over mass-carrying sources,
/// `max_{i != j} (g_j - g_i) / C_ij`, clipped at zero. Pairs with zero cost
/// are skipped; with coincident support points the rate is meaningless, so
/// the cost matrix should have positive off-diagonal entries.
pub fn w1_slope_oracle(gauges: &[f64], masses: &[f64], cost: &CostMatrix) -> f64 {
    let n = cost.len();
    assert_eq!(gauges.len(), n, "one gauge per support point");
    assert_eq!(masses.len(), n, "one mass per support point");
    let mut slope = 0.0f64;
    for i in 0..n {
        if masses[i] <= 0.0 {
            continue;
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            let c = cost.at(i, j);
            if c > 0.0 {
                slope = slope.max((gauges[j] - gauges[i]) / c);
            }
        }
    }
    slope
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{optimal_critic, optimal_star_eps0};
    use crate::geometry::{make_uniform_grid, volume_pc, TAU};
    use crate::measures::{sector_summary_atomic, SignedSummary};
    use rand::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    fn basis_dist() -> AtomicDistribution {
        AtomicDistribution::from_weighted_points(&[
            ([1.0, 0.0], 0.25),
            ([0.0, 1.0], 0.25),
            ([-1.0, 0.0], 0.25),
            ([0.0, -1.0], 0.25),
        ])
        .unwrap()
    }

    fn occupied_dist(n: usize, seed: u64) -> AtomicDistribution {
        let grid = make_uniform_grid(n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let pts: Vec<([f64; 2], f64)> = (0..n)
            .map(|i| {
                let r = rng.random_range(0.5..2.0);
                let th = grid.angle(i);
                ([r * th.cos(), r * th.sin()], raw[i] / total)
            })
            .collect();
        AtomicDistribution::from_weighted_points(&pts).unwrap()
    }

    #[test]
    fn candidate_support_fills_empty_sectors_with_unit_vectors() {
        let grid = make_uniform_grid(8).unwrap();
        let problem = DroProblem::new(grid, &basis_dist(), CostKind::Arc, 0.1).unwrap();
        assert_eq!(problem.masses(), &[0.25, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25, 0.0]);
        for (j, &b) in problem.radii().iter().enumerate() {
            assert!((b - 1.0).abs() < 1e-15, "candidate {j} has radius {b}");
        }
        let sector1 = problem.support()[1];
        let expected = unit_vector(PI / 4.0);
        assert!((sector1[0] - expected[0]).abs() < 1e-12);
        assert!((sector1[1] - expected[1]).abs() < 1e-12);
    }

    #[test]
    fn two_atoms_in_one_sector_are_rejected() {
        let grid = make_uniform_grid(4).unwrap();
        let dist = AtomicDistribution::from_weighted_points(&[
            ([1.0, 0.0], 0.5),
            ([1.0, 0.1], 0.5),
        ])
        .unwrap();
        assert!(matches!(
            DroProblem::new(grid, &dist, CostKind::Euclid, 0.0),
            Err(DroError::SectorConflict { sector: 0 })
        ));
        // the same point listed twice is fine, masses accumulate
        let grid = make_uniform_grid(4).unwrap();
        let dup = AtomicDistribution::from_weighted_points(&[
            ([1.0, 0.0], 0.5),
            ([1.0, 0.0], 0.5),
        ])
        .unwrap();
        let problem = DroProblem::new(grid, &dup, CostKind::Euclid, 0.0).unwrap();
        assert_eq!(problem.masses()[0], 1.0);
    }

    #[test]
    fn negative_radius_is_rejected() {
        let grid = make_uniform_grid(4).unwrap();
        assert!(matches!(
            DroProblem::new(grid, &basis_dist(), CostKind::Arc, -0.5),
            Err(DroError::BadRadius(_))
        ));
    }

    #[test]
    fn tiny_eps_reproduces_the_closed_form() {
        let n = 8;
        let dist = occupied_dist(n, 3);
        let grid = make_uniform_grid(n).unwrap();
        let summary = sector_summary_atomic(&dist, &grid);
        let exact = optimal_star_eps0(&summary).unwrap();

        let problem = DroProblem::new(grid, &dist, CostKind::Euclid, 1e-6).unwrap();
        let opts = DroOptions { max_iters: 400_000, gap_tol: 1e-10, ..Default::default() };
        let sol = solve_dro(&problem, &opts).unwrap();
        let sup: f64 = sol
            .body
            .gauges()
            .iter()
            .zip(exact.gauges())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1e-3, "sup gauge gap vs closed form: {sup}");
        assert!((volume_pc(&sol.body).unwrap() - 1.0).abs() <= 1e-6, "volume active");
    }

    #[test]
    fn huge_eps_returns_the_uniform_prior() {
        let grid = make_uniform_grid(4).unwrap();
        // cost diameter is 2 under the euclid kind; eps far beyond it
        let problem = DroProblem::new(grid, &basis_dist(), CostKind::Euclid, 5.0).unwrap();
        let sol = solve_dro(&problem, &DroOptions::default()).unwrap();
        for &t in sol.body.gauges() {
            assert!((t - PI.sqrt()).abs() <= 0.02, "uniform gauge: {t}");
        }
        assert!(sol.s < 1e-3, "transport scale vanishes when the budget is slack: {}", sol.s);
    }

    #[test]
    fn certificate_invariants_hold() {
        let n = 8;
        let dist = occupied_dist(n, 11);
        let grid = make_uniform_grid(n).unwrap();
        let problem = DroProblem::new(grid, &dist, CostKind::Euclid, 0.05).unwrap();
        let sol = solve_dro(&problem, &DroOptions::default()).unwrap();

        // dual feasibility of the certificate rows
        let t = sol.body.gauges();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let viol = problem.radii()[j] * t[j]
                    - sol.s * problem.cost().at(i, j)
                    - sol.lambda[i];
                worst = worst.max(viol);
            }
        }
        assert!(worst <= 1e-7, "certificate rows violated by {worst}");
        assert!(sol.certificate_gap >= -1e-9, "outer value cannot undercut the inner optimum");
        assert!(volume_pc(&sol.body).unwrap() <= 1.0 + 1e-8);

        // scaling (t, lambda, s) by 2 keeps the rows feasible
        for i in 0..n {
            for j in 0..n {
                let viol = 2.0 * problem.radii()[j] * t[j]
                    - 2.0 * sol.s * problem.cost().at(i, j)
                    - 2.0 * sol.lambda[i];
                assert!(viol <= 2e-7, "scaled rows stay feasible");
            }
        }
    }

    #[test]
    fn objective_is_monotone_in_eps() {
        let grid = make_uniform_grid(8).unwrap();
        let dist = occupied_dist(8, 21);
        let problem = DroProblem::new(grid, &dist, CostKind::Euclid, 0.0).unwrap();
        let opts = DroOptions { max_iters: 120_000, ..Default::default() };
        let sweep = epsilon_sweep(&problem, &[0.0, 0.05, 0.2, 1.0], &opts).unwrap();
        for pair in sweep.windows(2) {
            let lo = pair[0].solution.objective - pair[0].solution.certificate_gap.abs();
            let hi = pair[1].solution.objective;
            assert!(
                hi >= lo - 1e-4,
                "robust value must grow with the budget: {} then {}",
                pair[0].solution.objective,
                pair[1].solution.objective
            );
        }
    }

    #[test]
    fn sweep_requires_sorted_radii_and_is_deterministic() {
        let grid = make_uniform_grid(4).unwrap();
        let problem = DroProblem::new(grid, &basis_dist(), CostKind::Arc, 0.0).unwrap();
        assert!(matches!(
            epsilon_sweep(&problem, &[0.2, 0.1], &DroOptions::default()),
            Err(DroError::UnsortedSweep { index: 1 })
        ));
        let opts = DroOptions { max_iters: 5_000, ..Default::default() };
        let a = epsilon_sweep(&problem, &[0.01, 0.1], &opts).unwrap();
        let b = epsilon_sweep(&problem, &[0.01, 0.1], &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                x.solution.body.gauges(),
                y.solution.body.gauges(),
                "parallel sweep must be bit-reproducible"
            );
            assert_eq!(x.solution.objective.to_bits(), y.solution.objective.to_bits());
        }
    }

    #[test]
    fn single_atom_drives_the_gauge_to_the_volume_floor() {
        // one atom, eps = 0: memorization. The occupied sector's gauge drops
        // until its own sector saturates the volume budget, everything else
        // inflates, and the robust value approaches sqrt(w/d).
        let grid = make_uniform_grid(4).unwrap();
        let w = grid.weight(0);
        let dist = AtomicDistribution::from_weighted_points(&[([1.0, 0.0], 1.0)]).unwrap();
        let problem = DroProblem::new(grid, &dist, CostKind::Euclid, 0.0).unwrap();
        let opts = DroOptions { max_iters: 30_000, gap_tol: 0.05, ..Default::default() };
        let sol = solve_dro(&problem, &opts).unwrap();
        let t = sol.body.gauges();
        let floor = (w / 2.0).sqrt();
        assert!(
            t[0] >= floor - 1e-9 && t[0] <= floor * 1.2,
            "occupied gauge should sit near the volume floor {floor}, got {}",
            t[0]
        );
        assert!(t[2] > 2.0 * t[0], "opposite sector inflates, got {}", t[2]);
        assert_eq!(sol.floor_hits, 0, "the hard floor stays untouched at default steps");
    }

    #[test]
    fn oversized_steps_hit_the_floor_and_are_reported() {
        let grid = make_uniform_grid(4).unwrap();
        let dist = AtomicDistribution::from_weighted_points(&[([1.0, 0.0], 1.0)]).unwrap();
        let problem = DroProblem::new(grid, &dist, CostKind::Euclid, 0.0).unwrap();
        // a step past the reciprocal of the floor shoots the radial profile
        // beyond 1/t_floor; the clamp catches it and the body stays feasible
        let opts = DroOptions {
            max_iters: 500,
            step_scale: 1e9,
            gap_tol: f64::INFINITY,
            ..Default::default()
        };
        let sol = solve_dro(&problem, &opts).unwrap();
        assert!(sol.floor_hits > 0, "the clamp must be reported");
        assert!(volume_pc(&sol.body).unwrap() <= 1.0 + 1e-8, "projection keeps feasibility");
    }

    #[test]
    fn critic_with_no_contrast_matches_the_closed_form_critic() {
        let n = 8;
        let dist = occupied_dist(n, 5);
        let grid = make_uniform_grid(n).unwrap();
        let eps_ball = 0.05;
        let problem =
            CriticDroProblem::new(grid.clone(), &dist, None, CostKind::Euclid, 0.0, 0.0, eps_ball)
                .unwrap();
        let opts = DroOptions { max_iters: 400_000, gap_tol: 1e-10, ..Default::default() };
        let sol = solve_dro_critic(&problem, &opts).unwrap();

        let summary = sector_summary_atomic(&dist, &grid);
        let exact = optimal_critic(
            &SignedSummary { grid: grid.clone(), sigma: summary.alpha.clone() },
            eps_ball,
        )
        .unwrap();
        let sup: f64 = sol
            .body
            .gauges()
            .iter()
            .zip(exact.body.gauges())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1e-3, "critic gauge gap vs closed form: {sup}");
    }

    #[test]
    fn critic_with_identical_sides_sits_on_the_cap() {
        let grid = make_uniform_grid(4).unwrap();
        let dist = basis_dist();
        let problem = CriticDroProblem::new(
            grid,
            &dist,
            Some(&dist),
            CostKind::Euclid,
            0.0,
            0.0,
            0.1,
        )
        .unwrap();
        let opts = DroOptions { max_iters: 20_000, ..Default::default() };
        let sol = solve_dro_critic(&problem, &opts).unwrap();
        for &t in sol.body.gauges() {
            assert!((t - 10.0).abs() < 1e-9, "cap body expected, got {t}");
        }
        assert!(sol.objective.abs() < 1e-9, "balanced sides cancel");
    }

    #[test]
    fn critic_value_grows_with_the_contrast_budget() {
        // on the 8-sector grid the diagonal contrast atoms sit in sectors
        // the axis-aligned data leaves empty, so the supports merge cleanly
        let p = basis_dist();
        let q = AtomicDistribution::from_weighted_points(&[
            ([0.7, 0.7], 0.5),
            ([-0.7, -0.7], 0.5),
        ])
        .unwrap();
        let opts = DroOptions { max_iters: 150_000, ..Default::default() };
        let mut last = f64::NEG_INFINITY;
        for eps_q in [0.0, 0.1, 0.3] {
            let problem = CriticDroProblem::new(
                make_uniform_grid(8).unwrap(),
                &p,
                Some(&q),
                CostKind::Euclid,
                0.0,
                eps_q,
                0.1,
            )
            .unwrap();
            let sol = solve_dro_critic(&problem, &opts).unwrap();
            assert!(
                sol.objective >= last - 1e-3,
                "value must not drop as the adversary strengthens: {last} -> {}",
                sol.objective
            );
            last = sol.objective;
        }
    }

    #[test]
    fn potential_respects_its_bounds() {
        let grid = make_uniform_grid(8).unwrap();
        let t: Vec<f64> = (0..8).map(|i| 1.0 + 0.1 * (i % 3) as f64).collect();
        let body = StarBody::piecewise_constant(grid.clone(), t.clone()).unwrap();
        let s = t.iter().cloned().fold(f64::MIN, f64::max) + 0.2;
        let samples = PotentialSamples::default();

        // at the origin the supremum is exactly zero
        let at_zero = critic_potential(&body, s, [0.0, 0.0], &samples).unwrap();
        assert!(at_zero.abs() <= 1e-12, "potential at origin: {at_zero}");

        for k in 0..8 {
            let x = unit_vector(grid.angle(k));
            let v = critic_potential(&body, s, x, &samples).unwrap();
            let gauge = gauge_pc(&body, x).unwrap();
            assert!(v >= gauge - 1e-12, "lower bound at sector {k}: {v} < {gauge}");
            assert!(v <= s * norm2(x) + 1e-12, "upper bound at sector {k}");
        }

        assert!(matches!(
            critic_potential(&body, 0.0, [1.0, 0.0], &samples),
            Err(DroError::NonPositiveScale(_))
        ));
    }

    #[test]
    fn potential_is_lipschitz_in_x() {
        let grid = make_uniform_grid(8).unwrap();
        let body = StarBody::piecewise_constant(grid, vec![1.5; 8]).unwrap();
        let s = 2.0;
        let samples = PotentialSamples { radial_steps: 32, angular_steps: 64, r_max: 3.0 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let x1 = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let x2 = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let v1 = critic_potential(&body, s, x1, &samples).unwrap();
            let v2 = critic_potential(&body, s, x2, &samples).unwrap();
            let dist = (x1[0] - x2[0]).hypot(x1[1] - x2[1]);
            assert!(
                (v1 - v2).abs() <= s * dist + 1e-8,
                "potential moved {} over distance {dist}",
                (v1 - v2).abs()
            );
        }
    }

    #[test]
    fn slope_oracle_matches_the_lp_growth_rate() {
        let pts = [[1.0, 0.0], [0.0, 1.0]];
        let cost = cost_matrix(&pts, CostKind::Euclid).unwrap();
        let gauges = [1.0, 2.0];
        let masses = [1.0, 0.0];
        let slope = w1_slope_oracle(&gauges, &masses, &cost);
        assert!((slope - 1.0 / 2f64.sqrt()).abs() < 1e-12, "slope: {slope}");

        // the inner LP at a small budget grows linearly with that slope
        let eps = 1e-3;
        let base: f64 = gauges.iter().zip(&masses).map(|(g, m)| g * m).sum();
        let lp = build_inner_primal(&gauges, &masses, &cost, eps).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!(
            (sol.objective - (base + eps * slope)).abs() <= 1e-9,
            "lp value {} vs linear model {}",
            sol.objective,
            base + eps * slope
        );

        // constant gauges have nothing to gain
        assert_eq!(w1_slope_oracle(&[1.5, 1.5], &masses, &cost), 0.0);

        // scaling the cost scales the slope down
        let far = [[2.0, 0.0], [0.0, 2.0]];
        let cost2 = cost_matrix(&far, CostKind::Euclid).unwrap();
        let slope2 = w1_slope_oracle(&gauges, &masses, &cost2);
        assert!((slope2 - slope / 2.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_inner_matches_the_transport_lp() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let kinds = [CostKind::Arc, CostKind::Euclid, CostKind::SqEuclid];
        for trial in 0..90 {
            let n = rng.random_range(2..9usize);
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| {
                    let r = rng.random_range(0.3..2.0);
                    let th = rng.random_range(0.0..TAU);
                    [r * th.cos(), r * th.sin()]
                })
                .collect();
            let cost = cost_matrix(&pts, kinds[trial % 3]).unwrap();
            let gauges: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
            let mut masses: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            if trial % 4 == 0 {
                masses[0] = 0.0; // sectors without mass still receive
            }
            let total: f64 = masses.iter().sum();
            masses.iter_mut().for_each(|m| *m /= total);
            let diam = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .fold(0.0f64, |m, (i, j)| m.max(cost.at(i, j)));
            let eps = rng.random_range(0.0..1.3 * diam + 1e-3);

            let plan = inner_exact(&gauges, &masses, &cost, eps);
            let arrived: f64 = plan.q.iter().sum();
            assert!((arrived - 1.0).abs() <= 1e-12, "plan must conserve mass, got {arrived}");
            let lp = build_inner_primal(&gauges, &masses, &cost, eps).unwrap();
            let sol = solve_lp(&lp).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!(
                (plan.value - sol.objective).abs() <= 1e-9 * (1.0 + sol.objective.abs()),
                "trial {trial}: greedy {} vs lp {}",
                plan.value,
                sol.objective
            );
        }
    }

    #[test]
    fn shell_helpers_agree_with_the_closed_form_body() {
        let grid = make_uniform_grid(6).unwrap();
        let alpha = vec![0.4, 1.3, 0.2, 2.0, 0.9, 0.6];
        let summary =
            crate::measures::SectorSummary { grid: grid.clone(), alpha: alpha.clone() };
        let body = optimal_star_eps0(&summary).unwrap();
        let t = shell_argmin(grid.weights(), &alpha, 2.0, 1e12);
        for (a, b) in t.iter().zip(body.gauges()) {
            assert!((a - b).abs() <= 1e-12, "argmin gauge {a} vs closed form {b}");
        }
        let value = shell_value(grid.weights(), &alpha, 2.0);
        let direct: f64 = alpha.iter().zip(&t).map(|(a, g)| a * g).sum();
        assert!((value - direct).abs() <= 1e-12 * (1.0 + direct), "value {value} vs {direct}");
        let vol: f64 =
            grid.weights().iter().zip(&t).map(|(w, g)| w / (g * g)).sum::<f64>() / 2.0;
        assert!((vol - 1.0).abs() <= 1e-12, "argmin volume {vol}");

        // massless sectors drop out of the value and cap the argmin
        let sparse = vec![0.0, 1.3, 0.0, 2.0, 0.9, 0.6];
        let capped = shell_argmin(grid.weights(), &sparse, 2.0, 1e12);
        assert_eq!(capped[0], 1e12, "empty sector runs to the cap");
        let sparse_value = shell_value(grid.weights(), &sparse, 2.0);
        let by_hand: f64 = {
            let s: f64 = grid
                .weights()
                .iter()
                .zip(&sparse)
                .filter(|(_, &a)| a > 0.0)
                .map(|(&w, &a)| w.powf(1.0 / 3.0) * a.powf(2.0 / 3.0))
                .sum();
            (s / 2.0).sqrt() * s
        };
        assert!((sparse_value - by_hand).abs() <= 1e-12 * (1.0 + by_hand));
    }

    #[test]
    fn solve_reports_a_certified_gap() {
        let n = 8;
        let dist = occupied_dist(n, 7);
        let grid = make_uniform_grid(n).unwrap();
        let problem = DroProblem::new(grid, &dist, CostKind::Euclid, 0.08).unwrap();
        let opts = DroOptions { gap_tol: 1e-6, ..Default::default() };
        let sol = solve_dro(&problem, &opts).unwrap();
        assert!(sol.iterations < opts.max_iters, "expected an early certificate");
        assert!(
            sol.certificate_gap.abs() <= 1e-6 * (1.0 + sol.objective.abs()),
            "inner consistency residual: {}",
            sol.certificate_gap
        );
        // an absurd tolerance must be refused, with the best body attached
        let strict = DroOptions { max_iters: 40, gap_tol: 1e-16, ..Default::default() };
        match solve_dro(&problem, &strict) {
            Err(DroError::NotConverged { rel_gap, solution }) => {
                assert!(rel_gap > 1e-16, "reported gap {rel_gap}");
                assert!(volume_pc(&solution.body).unwrap() <= 1.0 + 1e-8);
            }
            other => panic!("expected a stall report, got {other:?}"),
        }
    }

    #[test]
    fn figure_interpolation_from_spiky_to_round() {
        // basis atoms under the arc cost: tiny budgets give a spiky body,
        // budgets past the arc diameter give the round one
        let grid = make_uniform_grid(16).unwrap();
        let problem = DroProblem::new(grid, &basis_dist(), CostKind::Arc, 0.0).unwrap();
        let opts = DroOptions { max_iters: 150_000, ..Default::default() };
        let sweep = epsilon_sweep(&problem, &[0.01, 0.3, TAU], &opts).unwrap();
        assert!(
            sweep[0].anisotropy > 3.0,
            "tiny budget should be spiky, ratio {}",
            sweep[0].anisotropy
        );
        assert!(
            sweep[2].anisotropy <= 1.05,
            "huge budget should be round, ratio {}",
            sweep[2].anisotropy
        );
        assert!(sweep[0].anisotropy >= sweep[1].anisotropy - 0.05);
        assert!(sweep[1].anisotropy >= sweep[2].anisotropy - 0.05);
    }
}
