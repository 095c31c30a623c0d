//! Dense linear programming with a two-phase primal simplex method.
//!
//! The solver is deliberately simple: a dense tableau, Bland's rule for both
//! the entering and leaving choices (lowest index wins every tie), equality
//! rows handled natively, and duals recovered at the end by solving
//! `B^T y = c_B` against the original column data. That makes runs
//! bit-for-bit reproducible and cycling impossible, at the cost of speed on
//! large instances — the problems in this crate stay small (at most a few
//! hundred rows).
//!
//! Tolerances: a reduced cost is negative below `-1e-9`, a pivot candidate
//! must exceed `1e-9`, and phase 1 declares infeasibility above `1e-9`.
//!
//! Conventions for [`LpSolution`]:
//!
//! - `primal` is in the caller's variable space (bounds and direction are
//!   internal transformations);
//! - `dual[r]` is the shadow price of constraint `r`: the derivative of the
//!   optimal value with respect to that constraint's right-hand side;
//! - residual fields are absolute and measured on the caller's data.

use crate::measures::CostMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("constraint {index} has {got} coefficients, expected {expected}")]
    RowLength { index: usize, got: usize, expected: usize },
    #[error("bounds vectors must have one entry per variable")]
    BoundsLength,
    #[error("nonfinite value in {place}")]
    NonFinite { place: String },
    #[error("variable {index} has empty bound interval [{lo}, {hi}]")]
    EmptyBounds { index: usize, lo: f64, hi: f64 },
    #[error("simplex hit the pivot cap in {phase}: {iterations} pivots, objective {objective}")]
    IterationLimit { phase: &'static str, iterations: usize, objective: f64 },
    #[error("singular basis while recovering duals")]
    SingularBasis,
    #[error("inner transport LP needs {place}")]
    BadTransportData { place: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program over finitely many real variables.
///
/// Bounds default to `[0, +inf)`; `f64::NEG_INFINITY` /
/// `f64::INFINITY` mark unbounded sides.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(direction: Direction, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { direction, objective, constraints: Vec::new(), lower: vec![0.0; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Maximize, objective)
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::BoundsLength);
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite { place: "objective".into() });
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::RowLength { index: i, got: c.coeffs.len(), expected: n });
            }
            if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                return Err(LpError::NonFinite { place: format!("constraint {i}") });
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::NonFinite { place: format!("bounds of variable {j}") });
            }
            if lo > hi {
                return Err(LpError::EmptyBounds { index: j, lo, hi });
            }
        }
        Ok(())
    }

    /// Plain-text dump of the program, one line per objective / constraint /
    /// non-default bound, for cross-checking against external solvers.
    ///
    /// Format: `min|max: c0 c1 ...`, then `row <i>: a0 a1 ... <=|==|>= rhs`,
    /// then `bounds <j>: lo hi` for every variable whose bounds are not the
    /// default `[0, inf)`.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let dir = match self.direction {
            Direction::Minimize => "min",
            Direction::Maximize => "max",
        };
        write!(out, "{dir}:").unwrap();
        for c in &self.objective {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
        for (i, row) in self.constraints.iter().enumerate() {
            write!(out, "row {i}:").unwrap();
            for a in &row.coeffs {
                write!(out, " {a}").unwrap();
            }
            let sym = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "==",
                Sense::Ge => ">=",
            };
            writeln!(out, " {sym} {}", row.rhs).unwrap();
        }
        for j in 0..self.num_vars() {
            if self.lower[j] != 0.0 || self.upper[j] != f64::INFINITY {
                writeln!(out, "bounds {j}: {} {}", self.lower[j], self.upper[j]).unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point in the caller's variable space; empty unless optimal.
    pub primal: Vec<f64>,
    /// Shadow price per caller constraint; empty unless optimal.
    pub dual: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub cs_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
}

const TOL: f64 = 1e-9;

/// How each caller variable maps into the internal nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = shift + sign * col`
    Affine { col: usize, shift: f64, sign: f64 },
    /// `x = pos - neg` (free variable split)
    Split { pos: usize, neg: usize },
}

struct Canonical {
    /// Dense row-major equality system `A x = b`, `x >= 0`, `b >= 0`,
    /// including slack and artificial columns.
    a: Vec<f64>,
    b: Vec<f64>,
    cols: usize,
    rows: usize,
    /// Phase-2 costs per column (minimization).
    cost: Vec<f64>,
    var_map: Vec<VarMap>,
    n_struct: usize,
    first_artificial: usize,
    /// Sign applied to each caller row when its rhs was negated.
    row_sign: Vec<f64>,
    /// Number of caller constraints (rows beyond that encode upper bounds).
    n_caller_rows: usize,
}

fn canonicalize(lp: &LinearProgram) -> Canonical {
    let n = lp.num_vars();
    let flip = if lp.direction == Direction::Maximize { -1.0 } else { 1.0 };

    // Assign internal columns for the caller variables.
    let mut var_map = Vec::with_capacity(n);
    let mut n_struct = 0usize;
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let vm = if lo.is_finite() {
            VarMap::Affine { col: n_struct, shift: lo, sign: 1.0 }
        } else if hi.is_finite() {
            VarMap::Affine { col: n_struct, shift: hi, sign: -1.0 }
        } else {
            let pos = n_struct;
            n_struct += 1;
            VarMap::Split { pos, neg: n_struct }
        };
        n_struct += 1;
        var_map.push(vm);
    }

    // Upper-bound rows for doubly bounded variables.
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        if lp.lower[j].is_finite() && lp.upper[j].is_finite() {
            if let VarMap::Affine { col, shift, .. } = var_map[j] {
                bound_rows.push((col, lp.upper[j] - shift));
            }
        }
    }

    let n_caller_rows = lp.constraints.len();
    let rows = n_caller_rows + bound_rows.len();
    let n_slack = lp
        .constraints
        .iter()
        .filter(|c| c.sense != Sense::Eq)
        .count()
        + bound_rows.len();
    let cols = n_struct + n_slack + rows; // artificials allocated per row, trimmed below
    let first_artificial = n_struct + n_slack;

    let mut a = vec![0.0; rows * cols];
    let mut b = vec![0.0; rows];
    let mut row_sign = vec![1.0; rows];
    let mut senses = Vec::with_capacity(rows);

    for (r, con) in lp.constraints.iter().enumerate() {
        let mut rhs = con.rhs;
        for (j, &coef) in con.coeffs.iter().enumerate() {
            match var_map[j] {
                VarMap::Affine { col, shift, sign } => {
                    a[r * cols + col] += sign * coef;
                    rhs -= coef * shift;
                }
                VarMap::Split { pos, neg } => {
                    a[r * cols + pos] += coef;
                    a[r * cols + neg] -= coef;
                }
            }
        }
        b[r] = rhs;
        senses.push(con.sense);
    }
    for (k, &(col, ub)) in bound_rows.iter().enumerate() {
        let r = n_caller_rows + k;
        a[r * cols + col] = 1.0;
        b[r] = ub;
        senses.push(Sense::Le);
    }

    // Artificial identity block; kept in the canonical matrix so a basis that
    // retains an artificial (redundant row) is still invertible when duals
    // are recovered.
    for r in 0..rows {
        a[r * cols + first_artificial + r] = 1.0;
    }

    // Slacks, then normalize each row to a nonnegative rhs.
    let mut slack = n_struct;
    for r in 0..rows {
        match senses[r] {
            Sense::Le => {
                a[r * cols + slack] = 1.0;
                slack += 1;
            }
            Sense::Ge => {
                a[r * cols + slack] = -1.0;
                slack += 1;
            }
            Sense::Eq => {}
        }
        if b[r] < 0.0 {
            row_sign[r] = -1.0;
            b[r] = -b[r];
            for c in 0..first_artificial {
                a[r * cols + c] = -a[r * cols + c];
            }
        }
    }

    let mut cost = vec![0.0; cols];
    for j in 0..n {
        let c = flip * lp.objective[j];
        match var_map[j] {
            VarMap::Affine { col, sign, .. } => cost[col] += sign * c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    Canonical {
        a,
        b,
        cols,
        rows,
        cost,
        var_map,
        n_struct,
        first_artificial,
        row_sign,
        n_caller_rows,
    }
}

struct Tableau {
    a: Vec<f64>,
    b: Vec<f64>,
    cols: usize,
    rows: usize,
    basis: Vec<usize>,
    /// Reduced-cost row of the active phase.
    zrow: Vec<f64>,
    zval: f64,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let piv = self.a[r * cols + c];
        let inv = 1.0 / piv;
        for j in 0..cols {
            self.a[r * cols + j] *= inv;
        }
        self.b[r] *= inv;
        for rr in 0..self.rows {
            if rr == r {
                continue;
            }
            let f = self.a[rr * cols + c];
            if f == 0.0 {
                continue;
            }
            for j in 0..cols {
                self.a[rr * cols + j] -= f * self.a[r * cols + j];
            }
            self.a[rr * cols + c] = 0.0;
            self.b[rr] -= f * self.b[r];
        }
        let f = self.zrow[c];
        if f != 0.0 {
            for j in 0..cols {
                self.zrow[j] -= f * self.a[r * cols + j];
            }
            self.zrow[c] = 0.0;
            self.zval -= f * self.b[r];
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Runs Bland-rule pivots until the phase objective is optimal.
    fn run(&mut self, allowed_cols: usize, cap: usize, phase: &'static str) -> Result<PhaseOutcome, LpError> {
        loop {
            if self.iterations > cap {
                return Err(LpError::IterationLimit { phase, iterations: self.iterations, objective: self.zval });
            }
            let mut entering = None;
            for j in 0..allowed_cols {
                if self.zrow[j] < -TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let arc = self.at(r, c);
                if arc > TOL {
                    let ratio = self.b[r] / arc;
                    let better = ratio < best_ratio - TOL
                        || (ratio < best_ratio + TOL
                            && leave.is_some_and(|l| self.basis[r] < self.basis[l]));
                    if leave.is_none() || better {
                        best_ratio = ratio;
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            self.pivot(r, c);
        }
    }
}

/// Solves the program with the two-phase dense primal simplex method.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let canon = canonicalize(lp);
    let rows = canon.rows;
    let cols = canon.cols;
    let cap = 20_000 + 50 * (rows + cols);

    let mut t = Tableau {
        a: canon.a.clone(),
        b: canon.b.clone(),
        cols,
        rows,
        basis: vec![0; rows],
        zrow: vec![0.0; cols],
        zval: 0.0,
        iterations: 0,
    };

    // Initial basis: slack with +1 coefficient where available, otherwise an
    // artificial column (phase-1 cost 1).
    let mut artificial_used = vec![false; rows];
    for r in 0..rows {
        let mut found = None;
        for j in canon.n_struct..canon.first_artificial {
            if (t.at(r, j) - 1.0).abs() < 1e-12 {
                let alone = (0..rows).all(|rr| rr == r || t.at(rr, j) == 0.0);
                if alone {
                    found = Some(j);
                    break;
                }
            }
        }
        match found {
            Some(j) => t.basis[r] = j,
            None => {
                let j = canon.first_artificial + r;
                t.a[r * cols + j] = 1.0;
                t.basis[r] = j;
                artificial_used[r] = true;
            }
        }
    }

    // Phase 1: minimize the sum of artificials.
    let any_artificial = artificial_used.iter().any(|&u| u);
    if any_artificial {
        for r in 0..rows {
            if artificial_used[r] {
                for j in 0..cols {
                    t.zrow[j] -= t.at(r, j);
                }
                t.zval -= t.b[r];
            }
        }
        for r in 0..rows {
            if artificial_used[r] {
                t.zrow[canon.first_artificial + r] = 0.0;
            }
        }
        match t.run(canon.first_artificial, cap, "phase 1")? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
        }
        // zval tracks -(sum of artificials)
        if -t.zval > TOL {
            return Ok(infeasible_solution(t.iterations));
        }
        // Drive leftover artificials out of the basis where possible; a row
        // with no eligible pivot is redundant and keeps its artificial at 0.
        for r in 0..rows {
            if t.basis[r] >= canon.first_artificial {
                if let Some(j) = (0..canon.first_artificial).find(|&j| t.at(r, j).abs() > TOL) {
                    t.pivot(r, j);
                }
            }
        }
    }

    // Phase 2: minimize the canonical cost over non-artificial columns.
    t.zrow = canon.cost.clone();
    t.zval = 0.0;
    for r in 0..rows {
        let cb = if t.basis[r] < canon.first_artificial { canon.cost[t.basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..cols {
                t.zrow[j] -= cb * t.at(r, j);
            }
            t.zval -= cb * t.b[r];
        }
    }
    for r in 0..rows {
        t.zrow[t.basis[r]] = 0.0;
    }
    match t.run(canon.first_artificial, cap, "phase 2")? {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: Vec::new(),
                dual: Vec::new(),
                objective: match lp.direction {
                    Direction::Minimize => f64::NEG_INFINITY,
                    Direction::Maximize => f64::INFINITY,
                },
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                cs_residual: f64::NAN,
                duality_gap: f64::NAN,
                iterations: t.iterations,
            });
        }
    }

    // Internal primal values.
    let mut xi = vec![0.0; cols];
    for r in 0..rows {
        xi[t.basis[r]] = t.b[r];
    }

    // Caller-space primal.
    let n = lp.num_vars();
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match canon.var_map[j] {
            VarMap::Affine { col, shift, sign } => shift + sign * xi[col],
            VarMap::Split { pos, neg } => xi[pos] - xi[neg],
        };
    }

    // Duals from B^T y = c_B against the untouched canonical columns.
    let basis_mat = nalgebra::DMatrix::from_fn(rows, rows, |r, k| canon.a[r * cols + t.basis[k]]);
    let cb = nalgebra::DVector::from_fn(rows, |k, _| {
        if t.basis[k] < canon.first_artificial { canon.cost[t.basis[k]] } else { 0.0 }
    });
    let y = if rows > 0 {
        basis_mat
            .transpose()
            .lu()
            .solve(&cb)
            .ok_or(LpError::SingularBasis)?
            .iter()
            .cloned()
            .collect::<Vec<f64>>()
    } else {
        Vec::new()
    };

    // Certificates in the canonical space.
    let mut dual_residual: f64 = 0.0;
    let mut cs_residual: f64 = 0.0;
    for j in 0..canon.first_artificial {
        let mut red = canon.cost[j];
        for r in 0..rows {
            red -= y[r] * canon.a[r * cols + j];
        }
        dual_residual = dual_residual.max(-red);
        cs_residual = cs_residual.max((xi[j] * red).abs());
    }
    let primal_canon: f64 = (0..canon.first_artificial).map(|j| canon.cost[j] * xi[j]).sum();
    let dual_canon: f64 = (0..rows).map(|r| y[r] * canon.b[r]).sum();
    let duality_gap = (primal_canon - dual_canon).abs();

    // Shadow prices for caller rows: undo row negation and direction flip.
    let flip = if lp.direction == Direction::Maximize { -1.0 } else { 1.0 };
    let dual: Vec<f64> = (0..canon.n_caller_rows).map(|r| flip * canon.row_sign[r] * y[r]).collect();

    // Objective and feasibility residual on the caller's data.
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let mut primal_residual: f64 = 0.0;
    for con in &lp.constraints {
        let ax: f64 = con.coeffs.iter().zip(&x).map(|(a, v)| a * v).sum();
        let viol = match con.sense {
            Sense::Le => ax - con.rhs,
            Sense::Ge => con.rhs - ax,
            Sense::Eq => (ax - con.rhs).abs(),
        };
        primal_residual = primal_residual.max(viol);
    }
    for j in 0..n {
        primal_residual = primal_residual.max(lp.lower[j] - x[j]).max(x[j] - lp.upper[j]);
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal: x,
        dual,
        objective,
        primal_residual: primal_residual.max(0.0),
        dual_residual: dual_residual.max(0.0),
        cs_residual,
        duality_gap,
        iterations: t.iterations,
    })
}

fn infeasible_solution(iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        primal: Vec::new(),
        dual: Vec::new(),
        objective: f64::NAN,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        cs_residual: f64::NAN,
        duality_gap: f64::NAN,
        iterations,
    }
}

fn check_transport_data(
    gauges: &[f64],
    p: &[f64],
    cost: &CostMatrix,
    eps: f64,
) -> Result<usize, LpError> {
    let n = gauges.len();
    if n == 0 {
        return Err(LpError::BadTransportData { place: "a nonempty support".into() });
    }
    if p.len() != n || cost.len() != n {
        return Err(LpError::BadTransportData {
            place: format!("matching sizes (gauges {n}, masses {}, cost {})", p.len(), cost.len()),
        });
    }
    if gauges.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite { place: "gauge values".into() });
    }
    if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(LpError::BadTransportData { place: "nonnegative masses".into() });
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(LpError::BadTransportData { place: format!("masses summing to 1 (got {total})") });
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(LpError::BadTransportData { place: format!("a nonnegative budget (got {eps})") });
    }
    Ok(n)
}

/// Worst-case transported expectation as a primal LP.
///
/// Variables are the perturbed masses `q` followed by the row-major coupling
/// `pi`; the program is
///
/// ```text
/// max <gauges, q>
/// s.t. sum_ij C_ij pi_ij <= eps       (transport budget)
///      sum_j pi_ij = p_i   for all i  (marginal on the data)
///      sum_i pi_ij - q_j = 0 for all j
///      pi >= 0, q >= 0
/// ```
pub fn build_inner_primal(
    gauges: &[f64],
    p: &[f64],
    cost: &CostMatrix,
    eps: f64,
) -> Result<LinearProgram, LpError> {
    let n = check_transport_data(gauges, p, cost, eps)?;
    let n_vars = n + n * n;
    let mut objective = vec![0.0; n_vars];
    objective[..n].copy_from_slice(gauges);
    let mut lp = LinearProgram::maximize(objective);

    let mut budget = vec![0.0; n_vars];
    for i in 0..n {
        for j in 0..n {
            budget[n + i * n + j] = cost.at(i, j);
        }
    }
    lp.add_constraint(budget, Sense::Le, eps);

    for i in 0..n {
        let mut row = vec![0.0; n_vars];
        for j in 0..n {
            row[n + i * n + j] = 1.0;
        }
        lp.add_constraint(row, Sense::Eq, p[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; n_vars];
        for i in 0..n {
            row[n + i * n + j] = 1.0;
        }
        row[j] = -1.0;
        lp.add_constraint(row, Sense::Eq, 0.0);
    }
    Ok(lp)
}

/// Lagrangian dual of [`build_inner_primal`]: variables `(s, lambda)` with
///
/// ```text
/// min s * eps + <p, lambda>
/// s.t. s * C_ij + lambda_i >= gauges_j   for all i, j
///      s >= 0, lambda free
/// ```
pub fn build_inner_dual(
    gauges: &[f64],
    p: &[f64],
    cost: &CostMatrix,
    eps: f64,
) -> Result<LinearProgram, LpError> {
    let n = check_transport_data(gauges, p, cost, eps)?;
    let mut objective = vec![0.0; 1 + n];
    objective[0] = eps;
    objective[1..].copy_from_slice(p);
    let mut lp = LinearProgram::minimize(objective);
    for i in 0..n {
        lp.set_bounds(1 + i, f64::NEG_INFINITY, f64::INFINITY);
        for j in 0..n {
            let mut row = vec![0.0; 1 + n];
            row[0] = cost.at(i, j);
            row[1 + i] = 1.0;
            lp.add_constraint(row, Sense::Ge, gauges[j]);
        }
    }
    Ok(lp)
}
