//! Data distributions on the plane and their per-sector summaries.
//!
//! Two representations are supported: finitely many weighted atoms
//! ([`AtomicDistribution`]) and density oracles ([`DensityOracle`]) integrated
//! by quadrature. Either way the quantity the solvers consume is the sector
//! summary `alpha_U`: for atoms the mass-weighted radii landing in sector `U`,
//! for densities the integral of `r^d p(r v)` over the sector.
//!
//! Transport costs between support points come in three kinds; `Arc` and
//! `SqEuclid` measure the geodesic angle `min(|dtheta|, 2*pi - |dtheta|)`
//! in half-turn units (respectively its square) and ignore radii, `Euclid`
//! is the plane distance.

use crate::geometry::{
    angle_of, gauge_pc, gauge_polytope, norm2, BodyKind, GeometryError, SphereGrid, StarBody, TAU,
};
use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus, Sense};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("a distribution needs at least one atom")]
    EmptySupport,
    #[error("atom {index} sits at the origin")]
    AtomAtOrigin { index: usize },
    #[error("atom {index} has invalid coordinates")]
    NonFinitePoint { index: usize },
    #[error("atom {index} has mass {mass}; masses must be finite and nonnegative")]
    BadMass { index: usize, mass: f64 },
    #[error("atom masses must sum to 1, got {0}")]
    BadMassTotal(f64),
    #[error("summaries live on different grids")]
    GridMismatch,
    #[error("vector length {got} does not match the expected length {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("angular cost needs nonzero points; point {index} is at the origin")]
    ArcCostAtOrigin { index: usize },
    #[error("density returned {value} at ({x}, {y}); densities must be finite and nonnegative")]
    BadDensity { value: f64, x: f64, y: f64 },
    #[error("radial tail search did not stabilize below r = {0:e}; pass an explicit r_max")]
    TailSearchFailed(f64),
    #[error("quadrature parameters invalid: {0}")]
    BadQuadratureParams(String),
    #[error("density normalization came out as {0}; the total mass must be positive")]
    NormalizationFailed(f64),
    #[error("transport plan was {0:?} despite matched marginals")]
    TransportFailed(LpStatus),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One weighted support point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub point: [f64; 2],
    pub mass: f64,
}

/// Finitely supported probability distribution.
///
/// Masses are nonnegative (zero-mass atoms are legal placeholders for support
/// points a perturbation may occupy) and sum to 1; no atom may sit at the
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDistribution {
    atoms: Vec<Atom>,
}

impl AtomicDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        let mut total = 0.0;
        for (i, atom) in atoms.iter().enumerate() {
            if !atom.point[0].is_finite() || !atom.point[1].is_finite() {
                return Err(MeasureError::NonFinitePoint { index: i });
            }
            if norm2(atom.point) == 0.0 {
                return Err(MeasureError::AtomAtOrigin { index: i });
            }
            if !atom.mass.is_finite() || atom.mass < 0.0 {
                return Err(MeasureError::BadMass { index: i, mass: atom.mass });
            }
            total += atom.mass;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(MeasureError::BadMassTotal(total));
        }
        Ok(Self { atoms })
    }

    pub fn from_weighted_points(points: &[([f64; 2], f64)]) -> Result<Self, MeasureError> {
        Self::new(points.iter().map(|&(point, mass)| Atom { point, mass }).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.mass).collect()
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.atoms.iter().map(|a| a.point).collect()
    }
}

/// Whether a density integrates to 1 already or needs the quadrature to
/// estimate its normalization constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Normalized,
    Unnormalized,
}

/// Pointwise density query; implementations must be pure.
pub trait DensityOracle {
    fn density(&self, x: [f64; 2]) -> f64;

    fn normalization(&self) -> Normalization {
        Normalization::Normalized
    }

    /// Optional radial envelope: a radius beyond which the density is
    /// negligible, skipping the doubling search.
    fn radial_envelope(&self) -> Option<f64> {
        None
    }
}

/// Density defined by a plain function.
pub struct FnDensity<F: Fn([f64; 2]) -> f64> {
    f: F,
    normalization: Normalization,
    envelope: Option<f64>,
}

impl<F: Fn([f64; 2]) -> f64> FnDensity<F> {
    pub fn new(f: F, normalization: Normalization) -> Self {
        Self { f, normalization, envelope: None }
    }

    pub fn with_envelope(mut self, r_max: f64) -> Self {
        self.envelope = Some(r_max);
        self
    }
}

impl<F: Fn([f64; 2]) -> f64> DensityOracle for FnDensity<F> {
    fn density(&self, x: [f64; 2]) -> f64 {
        (self.f)(x)
    }

    fn normalization(&self) -> Normalization {
        self.normalization
    }

    fn radial_envelope(&self) -> Option<f64> {
        self.envelope
    }
}

/// Per-sector mass-radius summary `alpha_U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorSummary {
    pub grid: SphereGrid,
    pub alpha: Vec<f64>,
}

/// Difference of two summaries, `sigma = alpha_P - alpha_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSummary {
    pub grid: SphereGrid,
    pub sigma: Vec<f64>,
}

/// `alpha_U = sum of mass * ||point||_2 over atoms in sector U`.
pub fn sector_summary_atomic(dist: &AtomicDistribution, grid: &SphereGrid) -> SectorSummary {
    let mut alpha = vec![0.0; grid.len()];
    for atom in dist.atoms() {
        alpha[grid.sector_of(angle_of(atom.point))] += atom.mass * norm2(atom.point);
    }
    SectorSummary { grid: grid.clone(), alpha }
}

/// Quadrature resolution for [`sector_summary_density`].
///
/// The radial integral runs over composite Gauss-Legendre panels; the angular
/// integral uses midpoint subsamples inside each sector.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureParams {
    /// Gauss-Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Number of equal radial panels on `[0, r_max]`.
    pub radial_panels: usize,
    /// Midpoint subsamples per sector.
    pub angular_subsamples: usize,
    /// Radial truncation; when absent a doubling search finds a radius at
    /// which the total integral has stabilized to `tail_tol` relative change.
    pub r_max: Option<f64>,
    pub tail_tol: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self { radial_nodes: 24, radial_panels: 8, angular_subsamples: 8, r_max: None, tail_tol: 1e-12 }
    }
}

/// Sector summary of a density plus a per-sector quadrature-error proxy
/// (difference against a half-resolution recomputation).
#[derive(Debug, Clone)]
pub struct DensitySummary {
    pub summary: SectorSummary,
    pub error_proxy: Vec<f64>,
}

struct RadialRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialRule {
    /// Composite Gauss-Legendre rule on `[0, r_max]`.
    fn new(nodes_per_panel: usize, panels: usize, r_max: f64) -> Self {
        let deg = std::num::NonZeroUsize::new(nodes_per_panel.max(2)).expect("max(2) is nonzero");
        let gl = gauss_quad::GaussLegendre::new(deg);
        let width = r_max / panels as f64;
        let mut nodes = Vec::with_capacity(nodes_per_panel * panels);
        let mut weights = Vec::with_capacity(nodes_per_panel * panels);
        for p in 0..panels {
            let a = p as f64 * width;
            let b = a + width;
            // map the +-1 reference nodes onto [a, b]
            for &(x, w) in gl.as_node_weight_pairs() {
                nodes.push(0.5 * (b - a) * x + 0.5 * (a + b));
                weights.push(0.5 * (b - a) * w);
            }
        }
        Self { nodes, weights }
    }
}

/// `integral of r^power * p(r * u(theta)) dr` for one direction.
fn radial_integral(
    oracle: &dyn DensityOracle,
    rule: &RadialRule,
    theta: f64,
    power: f64,
) -> Result<f64, MeasureError> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut acc = 0.0;
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        let x = [r * c, r * s];
        let p = oracle.density(x);
        if !p.is_finite() || p < 0.0 {
            return Err(MeasureError::BadDensity { value: p, x: x[0], y: x[1] });
        }
        acc += w * r.powf(power) * p;
    }
    Ok(acc)
}

fn summarize_at(
    oracle: &dyn DensityOracle,
    grid: &SphereGrid,
    rule: &RadialRule,
    subsamples: usize,
    power: f64,
) -> Result<Vec<f64>, MeasureError> {
    let m = subsamples.max(1);
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let w = grid.weight(i);
        let lo = grid.angle(i) - w / 2.0;
        let mut acc = 0.0;
        for k in 0..m {
            let theta = lo + w * (k as f64 + 0.5) / m as f64;
            acc += radial_integral(oracle, rule, theta, power)?;
        }
        out[i] = acc * w / m as f64;
    }
    Ok(out)
}

fn resolve_r_max(
    oracle: &dyn DensityOracle,
    grid: &SphereGrid,
    params: &QuadratureParams,
) -> Result<f64, MeasureError> {
    if let Some(r) = params.r_max.or_else(|| oracle.radial_envelope()) {
        if !r.is_finite() || r <= 0.0 {
            return Err(MeasureError::BadQuadratureParams(format!("r_max = {r}")));
        }
        return Ok(r);
    }
    // The search doubles the truncation radius while holding the panel width
    // fixed (panel count grows with r, capped), so the totals it compares are
    // computed at a consistent per-unit resolution and cannot spuriously
    // agree just because the nodes overshot the support.
    let d = grid.dim() as f64;
    let mut r = 1.0;
    let mut panels = params.radial_panels;
    let rule = RadialRule::new(params.radial_nodes, panels, r);
    let mut prev: f64 = summarize_at(oracle, grid, &rule, 2, d)?.iter().sum();
    for _ in 0..60 {
        r *= 2.0;
        panels = (panels * 2).min(1024);
        let rule = RadialRule::new(params.radial_nodes, panels, r);
        let total: f64 = summarize_at(oracle, grid, &rule, 2, d)?.iter().sum();
        if total > 0.0 && (total - prev).abs() <= params.tail_tol * total {
            return Ok(r);
        }
        prev = total;
    }
    Err(MeasureError::TailSearchFailed(r))
}

/// Sector summary `alpha_U = integral over U of integral of r^d p(r v) dr dv`
/// by composite Gauss-Legendre radial quadrature and angular midpoints.
///
/// Unnormalized densities are divided by the quadrature estimate of their
/// total mass (the same integral with `r^(d-1)`).
pub fn sector_summary_density(
    oracle: &dyn DensityOracle,
    grid: &SphereGrid,
    params: &QuadratureParams,
) -> Result<DensitySummary, MeasureError> {
    if params.radial_nodes < 2 || params.radial_panels < 1 || params.angular_subsamples < 1 {
        return Err(MeasureError::BadQuadratureParams(format!("{params:?}")));
    }
    let d = grid.dim() as f64;
    let r_max = resolve_r_max(oracle, grid, params)?;
    let fine = RadialRule::new(params.radial_nodes, params.radial_panels, r_max);
    let coarse = RadialRule::new(
        (params.radial_nodes / 2).max(2),
        (params.radial_panels / 2).max(1),
        r_max,
    );

    let mut alpha = summarize_at(oracle, grid, &fine, params.angular_subsamples, d)?;
    let mut alpha_coarse =
        summarize_at(oracle, grid, &coarse, (params.angular_subsamples / 2).max(1), d)?;

    if oracle.normalization() == Normalization::Unnormalized {
        let z: f64 = summarize_at(oracle, grid, &fine, params.angular_subsamples, d - 1.0)?
            .iter()
            .sum();
        if !z.is_finite() || z <= 0.0 {
            return Err(MeasureError::NormalizationFailed(z));
        }
        for v in alpha.iter_mut().chain(alpha_coarse.iter_mut()) {
            *v /= z;
        }
    }

    let error_proxy = alpha
        .iter()
        .zip(&alpha_coarse)
        .map(|(f, c)| (f - c).abs() + 1e-15 * (1.0 + f.abs()))
        .collect();
    Ok(DensitySummary { summary: SectorSummary { grid: grid.clone(), alpha }, error_proxy })
}

/// `sigma = alpha_P - alpha_Q` on a shared grid.
pub fn signed_summary(p: &SectorSummary, q: &SectorSummary) -> Result<SignedSummary, MeasureError> {
    if p.grid != q.grid {
        return Err(MeasureError::GridMismatch);
    }
    let sigma = p.alpha.iter().zip(&q.alpha).map(|(a, b)| a - b).collect();
    Ok(SignedSummary { grid: p.grid.clone(), sigma })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// Geodesic angle between the directions of the two points, in units of
    /// a half turn: antipodal directions sit at distance 1, so the cost
    /// diameter is 1 and transport budgets read as fractions of the farthest
    /// possible move. (Raw radians would make the spiky-to-round
    /// interpolation finish near eps = pi/8 instead of inside [0, 1].)
    Arc,
    /// Euclidean distance in the plane.
    Euclid,
    /// Squared geodesic angle, in the same half-turn units.
    SqEuclid,
}

/// Dense symmetric transport cost matrix over a fixed support.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    kind: CostKind,
    entries: Vec<f64>,
    has_coincident_points: bool,
}

impl CostMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// True when two distinct support points have zero cost between them
    /// (coincident points, or equal angles under the angular kinds).
    pub fn has_coincident_points(&self) -> bool {
        self.has_coincident_points
    }
}

fn geodesic(a: f64, b: f64) -> f64 {
    let raw = (a - b).abs() % TAU;
    raw.min(TAU - raw)
}

pub fn cost_matrix(points: &[[f64; 2]], kind: CostKind) -> Result<CostMatrix, MeasureError> {
    let n = points.len();
    if n == 0 {
        return Err(MeasureError::EmptySupport);
    }
    for (i, p) in points.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(MeasureError::NonFinitePoint { index: i });
        }
        if kind != CostKind::Euclid && norm2(*p) == 0.0 {
            return Err(MeasureError::ArcCostAtOrigin { index: i });
        }
    }
    let angles: Vec<f64> = points.iter().map(|&p| angle_of(p)).collect();
    let mut entries = vec![0.0; n * n];
    let mut coincident = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = match kind {
                CostKind::Arc => geodesic(angles[i], angles[j]) / PI,
                CostKind::Euclid => {
                    (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1])
                }
                CostKind::SqEuclid => {
                    let g = geodesic(angles[i], angles[j]) / PI;
                    g * g
                }
            };
            if c == 0.0 {
                coincident = true;
            }
            entries[i * n + j] = c;
            entries[j * n + i] = c;
        }
    }
    Ok(CostMatrix { n, kind, entries, has_coincident_points: coincident })
}

/// `E_P[||x||_K]`, with the gauge read according to the body kind.
pub fn expected_gauge(dist: &AtomicDistribution, body: &StarBody) -> Result<f64, MeasureError> {
    let mut acc = 0.0;
    for atom in dist.atoms() {
        let g = match body.kind() {
            BodyKind::PiecewiseConstant => gauge_pc(body, atom.point)?,
            BodyKind::HullPolytope => gauge_polytope(body, atom.point)?,
        };
        acc += atom.mass * g;
    }
    Ok(acc)
}

/// Wasserstein-1 distance between two distributions listed on a shared
/// support, solved as the transport LP with the given ground cost.
pub fn w1_distance(
    p: &AtomicDistribution,
    q: &AtomicDistribution,
    cost: &CostMatrix,
) -> Result<f64, MeasureError> {
    let n = cost.len();
    if p.len() != n || q.len() != n {
        return Err(MeasureError::LengthMismatch {
            got: if p.len() != n { p.len() } else { q.len() },
            expected: n,
        });
    }
    let mut objective = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            objective[i * n + j] = cost.at(i, j);
        }
    }
    let mut lp = LinearProgram::minimize(objective);
    for (i, atom) in p.atoms().iter().enumerate() {
        let mut row = vec![0.0; n * n];
        for j in 0..n {
            row[i * n + j] = 1.0;
        }
        lp.add_constraint(row, Sense::Eq, atom.mass);
    }
    for (j, atom) in q.atoms().iter().enumerate() {
        let mut row = vec![0.0; n * n];
        for i in 0..n {
            row[i * n + j] = 1.0;
        }
        lp.add_constraint(row, Sense::Eq, atom.mass);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(MeasureError::TransportFailed(sol.status));
    }
    Ok(sol.objective.max(0.0))
}
