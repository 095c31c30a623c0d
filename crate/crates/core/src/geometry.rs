//! Angular grids and star bodies in the plane.
//!
//! Conventions used throughout:
//!
//! - A grid direction is an angle `theta in [0, 2*pi)`; directions are
//!   strictly increasing and each carries a positive sector weight `w_i`
//!   (arc length of the sector it represents). For planar grids the weights
//!   sum to `2*pi`.
//! - Sector `i` is the half-open arc `[theta_i - w_i/2, theta_i + w_i/2)`;
//!   an angle exactly on a shared boundary therefore belongs to the sector
//!   whose lower edge it sits on.
//! - A star body is stored through its gauge values `t_i > 0` at the grid
//!   directions; the radial function is `rho_i = 1 / t_i`. The
//!   `PiecewiseConstant` kind extends `t` as a step function in angle, the
//!   `HullPolytope` kind reads `t` as the gauge of the convex polygon with
//!   vertices `u_i / t_i`.

use thiserror::Error;

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("grid needs at least 3 directions, got {0}")]
    TooFewDirections(usize),
    #[error("grid angles must be strictly increasing within [0, 2*pi): angle[{index}] = {angle}")]
    BadAngle { index: usize, angle: f64 },
    #[error("grid weights must be positive and finite: weight[{index}] = {weight}")]
    BadWeight { index: usize, weight: f64 },
    #[error("planar sector weights must sum to 2*pi, got {0}")]
    WeightSum(f64),
    #[error("grid dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("gauge values must be positive and finite: t[{index}] = {value}")]
    BadGauge { index: usize, value: f64 },
    #[error("radial values must be positive and finite: rho[{index}] = {value}")]
    BadRadial { index: usize, value: f64 },
    #[error("expected a {expected:?} body, got {got:?}")]
    KindMismatch { expected: BodyKind, got: BodyKind },
    #[error("bodies must share one grid (angles, weights and dimension)")]
    GridMismatch,
    #[error("vector length {got} does not match the expected length {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error(
        "angular gap of {gap} rad between directions {i} and {j} must be below pi \
         for a polytope body"
    )]
    DegenerateSector { i: usize, j: usize, gap: f64 },
    #[error("combination weight must be nonnegative and finite, got {0}")]
    BadCombinationWeight(f64),
}

/// Discretization of the unit sphere of directions into weighted sectors.
///
/// Only the planar generator is shipped, but the dimension is kept explicit so
/// the volume and moment formulas stay written for general `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    angles: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl SphereGrid {
    /// Builds a grid from explicit angles and sector weights.
    pub fn from_parts(angles: Vec<f64>, weights: Vec<f64>, dim: usize) -> Result<Self, GeometryError> {
        if dim < 2 {
            return Err(GeometryError::BadDimension(dim));
        }
        if angles.len() < 3 {
            return Err(GeometryError::TooFewDirections(angles.len()));
        }
        if weights.len() != angles.len() {
            return Err(GeometryError::LengthMismatch {
                got: weights.len(),
                expected: angles.len(),
            });
        }
        for (i, &a) in angles.iter().enumerate() {
            let increasing = i == 0 || a > angles[i - 1];
            if !a.is_finite() || !(0.0..TAU).contains(&a) || !increasing {
                return Err(GeometryError::BadAngle { index: i, angle: a });
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(GeometryError::BadWeight { index: i, weight: w });
            }
        }
        if dim == 2 {
            let sum: f64 = weights.iter().sum();
            if (sum - TAU).abs() > 1e-9 {
                return Err(GeometryError::WeightSum(sum));
            }
        }
        Ok(Self { angles, weights, dim })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angles[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the sector containing `angle` (any real angle accepted).
    ///
    /// Sectors are the half-open arcs `[theta_i - w_i/2, theta_i + w_i/2)`;
    /// the scan runs in index order, so if a custom grid were to overlap the
    /// lowest index wins.
    pub fn sector_of(&self, angle: f64) -> usize {
        let a = angle.rem_euclid(TAU);
        for i in 0..self.len() {
            let lo = self.angles[i] - self.weights[i] / 2.0;
            let offset = (a - lo).rem_euclid(TAU);
            if offset < self.weights[i] {
                return i;
            }
        }
        // Unreachable for partitioning grids; fall back to the nearest center.
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for i in 0..self.len() {
            let raw = (a - self.angles[i]).rem_euclid(TAU);
            let dist = raw.min(TAU - raw);
            if dist < best_dist {
                best_dist = dist;
                best = i;
            }
        }
        best
    }
}

/// Uniform planar grid: `theta_i = 2*pi*i/n`, all weights `2*pi/n`.
pub fn make_uniform_grid(n: usize) -> Result<SphereGrid, GeometryError> {
    if n < 3 {
        return Err(GeometryError::TooFewDirections(n));
    }
    let angles = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let weights = vec![TAU / n as f64; n];
    SphereGrid::from_parts(angles, weights, 2)
}

/// How the sampled gauge values extend off the grid directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyKind {
    /// Gauge is constant in angle over each sector.
    PiecewiseConstant,
    /// Gauge of the convex hull of the points `u_i / t_i`.
    HullPolytope,
}

/// A star body sampled on a [`SphereGrid`] through its gauge values.
#[derive(Debug, Clone, PartialEq)]
pub struct StarBody {
    grid: SphereGrid,
    t: Vec<f64>,
    kind: BodyKind,
}

impl StarBody {
    pub fn new(grid: SphereGrid, t: Vec<f64>, kind: BodyKind) -> Result<Self, GeometryError> {
        if t.len() != grid.len() {
            return Err(GeometryError::LengthMismatch { got: t.len(), expected: grid.len() });
        }
        for (i, &v) in t.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(GeometryError::BadGauge { index: i, value: v });
            }
        }
        Ok(Self { grid, t, kind })
    }

    pub fn piecewise_constant(grid: SphereGrid, t: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(grid, t, BodyKind::PiecewiseConstant)
    }

    pub fn hull_polytope(grid: SphereGrid, t: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(grid, t, BodyKind::HullPolytope)
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    /// Gauge values at the grid directions.
    pub fn gauges(&self) -> &[f64] {
        &self.t
    }

    /// Radial values `rho_i = 1 / t_i` at the grid directions.
    pub fn radial(&self) -> Vec<f64> {
        self.t.iter().map(|&v| 1.0 / v).collect()
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    fn expect_kind(&self, expected: BodyKind) -> Result<(), GeometryError> {
        if self.kind != expected {
            return Err(GeometryError::KindMismatch { expected, got: self.kind });
        }
        Ok(())
    }
}

pub fn unit_vector(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

pub fn norm2(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

pub fn angle_of(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0]).rem_euclid(TAU)
}

/// Volume of a piecewise-constant star body: `(1/d) * sum_i w_i * t_i^(-d)`.
pub fn volume_pc(body: &StarBody) -> Result<f64, GeometryError> {
    body.expect_kind(BodyKind::PiecewiseConstant)?;
    Ok(volume_pc_raw(&body.grid, &body.t))
}

/// Same formula without the body wrapper; used in solver inner loops.
pub(crate) fn volume_pc_raw(grid: &SphereGrid, t: &[f64]) -> f64 {
    let d = grid.dim() as f64;
    let mut acc = 0.0;
    for i in 0..grid.len() {
        acc += grid.weight(i) * t[i].powf(-d);
    }
    acc / d
}

/// Area of the polygon with vertices `u_i / t_i`, summed as triangle fans:
/// `sum_i sin(theta_{i+1} - theta_i) / (2 * t_i * t_{i+1})` with wraparound.
pub fn volume_polytope(body: &StarBody) -> Result<f64, GeometryError> {
    body.expect_kind(BodyKind::HullPolytope)?;
    volume_polytope_raw(&body.grid, &body.t)
}

pub(crate) fn volume_polytope_raw(grid: &SphereGrid, t: &[f64]) -> Result<f64, GeometryError> {
    let n = grid.len();
    let mut acc = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        let gap = angular_gap(grid, i);
        if gap >= std::f64::consts::PI {
            return Err(GeometryError::DegenerateSector { i, j, gap });
        }
        acc += 0.5 * gap.sin() / (t[i] * t[j]);
    }
    Ok(acc)
}

/// Gap from direction `i` to its successor, with wraparound past `2*pi`.
pub(crate) fn angular_gap(grid: &SphereGrid, i: usize) -> f64 {
    let n = grid.len();
    if i + 1 < n {
        grid.angle(i + 1) - grid.angle(i)
    } else {
        TAU - grid.angle(n - 1) + grid.angle(0)
    }
}

/// Gauge of a piecewise-constant body: `||x||_2 * t_(sector of x)`.
///
/// The origin maps to 0.
pub fn gauge_pc(body: &StarBody, point: [f64; 2]) -> Result<f64, GeometryError> {
    body.expect_kind(BodyKind::PiecewiseConstant)?;
    let r = norm2(point);
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(r * body.t[body.grid.sector_of(angle_of(point))])
}

/// Exact gauge of the hull-polytope body.
///
/// Within the cone between directions `i` and `i+1` the boundary is the
/// segment joining `u_i / t_i` and `u_{i+1} / t_{i+1}`, giving
/// `||x||_2 * (t_i sin(theta_{i+1} - phi) + t_{i+1} sin(phi - theta_i)) / sin(theta_{i+1} - theta_i)`.
pub fn gauge_polytope(body: &StarBody, point: [f64; 2]) -> Result<f64, GeometryError> {
    body.expect_kind(BodyKind::HullPolytope)?;
    let r = norm2(point);
    if r == 0.0 {
        return Ok(0.0);
    }
    let (i, local, gap) = locate_segment(&body.grid, angle_of(point))?;
    let j = (i + 1) % body.grid.len();
    let interp = (body.t[i] * (gap - local).sin() + body.t[j] * local.sin()) / gap.sin();
    Ok(r * interp)
}

/// Finds the wedge `[theta_i, theta_{i+1})` containing `phi` and returns
/// `(i, phi - theta_i, gap)`.
pub(crate) fn locate_segment(
    grid: &SphereGrid,
    phi: f64,
) -> Result<(usize, f64, f64), GeometryError> {
    let n = grid.len();
    // angles are sorted, so the predecessor is found by scanning backwards
    // from the end; phi below the first angle wraps onto the last wedge.
    let i = match grid.angles().iter().rposition(|&a| a <= phi) {
        Some(i) => i,
        None => n - 1,
    };
    let gap = angular_gap(grid, i);
    if gap >= std::f64::consts::PI {
        return Err(GeometryError::DegenerateSector { i, j: (i + 1) % n, gap });
    }
    let local = (phi - grid.angle(i)).rem_euclid(TAU);
    Ok((i, local, gap))
}

/// Euclidean Lipschitz constant of the piecewise-constant gauge: `max_i t_i`.
pub fn lipschitz_pc(body: &StarBody) -> Result<f64, GeometryError> {
    body.expect_kind(BodyKind::PiecewiseConstant)?;
    Ok(body.t.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Euclidean Lipschitz constant of the hull-polytope gauge.
///
/// The gauge restricted to one wedge is `alpha cos(a) + beta sin(a)` in the
/// local angle `a`, so the supremum over directions is exact: either an
/// interior maximum `sqrt(alpha^2 + beta^2)` or a wedge endpoint value.
pub fn lipschitz_polytope(body: &StarBody) -> Result<f64, GeometryError> {
    body.expect_kind(BodyKind::HullPolytope)?;
    let grid = &body.grid;
    let n = grid.len();
    let mut sup: f64 = f64::NEG_INFINITY;
    for i in 0..n {
        let j = (i + 1) % n;
        let gap = angular_gap(grid, i);
        if gap >= std::f64::consts::PI {
            return Err(GeometryError::DegenerateSector { i, j, gap });
        }
        let alpha = body.t[i];
        let beta = (body.t[j] - body.t[i] * gap.cos()) / gap.sin();
        sup = sup.max(body.t[i]).max(body.t[j]);
        let a_star = beta.atan2(alpha);
        if a_star > 0.0 && a_star < gap {
            sup = sup.max(alpha.hypot(beta));
        }
    }
    Ok(sup)
}

/// Dual mixed volume `V~_i(K, L) = (1/d) * sum_j w_j * rho_K^i * rho_L^(d-i)`.
///
/// `i` may be any real number; `i = -1` is the index appearing in the Lutwak
/// inequality and `i = 0` recovers the volume of `L`.
pub fn dual_mixed_volume(k: &StarBody, l: &StarBody, i: f64) -> Result<f64, GeometryError> {
    if k.grid != l.grid {
        return Err(GeometryError::GridMismatch);
    }
    let grid = &k.grid;
    let d = grid.dim() as f64;
    let mut acc = 0.0;
    for j in 0..grid.len() {
        let rho_k = 1.0 / k.t[j];
        let rho_l = 1.0 / l.t[j];
        acc += grid.weight(j) * rho_k.powf(i) * rho_l.powf(d - i);
    }
    Ok(acc / d)
}

/// Both sides of the Lutwak dual-mixed-volume inequality
/// `V~_{-1}(K, L)^d >= vol(K)^(-1) * vol(L)^(d+1)`,
/// with equality exactly when `K` and `L` are dilates.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedVolumeReport {
    /// `V~_{-1}(K, L)`.
    pub v_minus_one: f64,
    /// `V~_{-1}(K, L)^d`.
    pub lhs: f64,
    /// `vol(K)^(-1) * vol(L)^(d+1)`.
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative up to rounding.
    pub slack: f64,
}

pub fn lutwak_report(k: &StarBody, l: &StarBody) -> Result<MixedVolumeReport, GeometryError> {
    let d = k.grid.dim() as f64;
    let v = dual_mixed_volume(k, l, -1.0)?;
    let vol_k = volume_pc_raw(&k.grid, &k.t);
    let vol_l = volume_pc_raw(&l.grid, &l.t);
    let lhs = v.powf(d);
    let rhs = vol_l.powf(d + 1.0) / vol_k;
    Ok(MixedVolumeReport { v_minus_one: v, lhs, rhs, slack: lhs - rhs })
}

/// `(d+1)`-th radial moment `M_{d+1}(S) = (1/d) * sum_j w_j * rho_j^(d+1)`.
pub fn moment_norm(body: &StarBody) -> f64 {
    let grid = &body.grid;
    let d = grid.dim() as f64;
    let mut acc = 0.0;
    for j in 0..grid.len() {
        acc += grid.weight(j) * body.t[j].powf(-(d + 1.0));
    }
    acc / d
}

/// Radial function of the harmonic combination
/// `rho = (d * rho_p^(d+1) + eps * rho_s^(d+1))^(1/(d+1))`, elementwise.
pub fn harmonic_radial_combination(
    rho_p: &[f64],
    rho_s: &[f64],
    eps: f64,
    dim: usize,
) -> Result<Vec<f64>, GeometryError> {
    if rho_p.len() != rho_s.len() {
        return Err(GeometryError::LengthMismatch { got: rho_s.len(), expected: rho_p.len() });
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(GeometryError::BadCombinationWeight(eps));
    }
    if dim < 2 {
        return Err(GeometryError::BadDimension(dim));
    }
    let d = dim as f64;
    let mut out = Vec::with_capacity(rho_p.len());
    for i in 0..rho_p.len() {
        if !rho_p[i].is_finite() || rho_p[i] <= 0.0 {
            return Err(GeometryError::BadRadial { index: i, value: rho_p[i] });
        }
        if !rho_s[i].is_finite() || rho_s[i] <= 0.0 {
            return Err(GeometryError::BadRadial { index: i, value: rho_s[i] });
        }
        out.push((d * rho_p[i].powf(d + 1.0) + eps * rho_s[i].powf(d + 1.0)).powf(1.0 / (d + 1.0)));
    }
    Ok(out)
}

/// `max_i |a_i - b_i|`.
pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> Result<f64, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::LengthMismatch { got: b.len(), expected: a.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    fn pc_body(n: usize, t: Vec<f64>) -> StarBody {
        StarBody::piecewise_constant(make_uniform_grid(n).unwrap(), t).unwrap()
    }

    fn hull_body(n: usize, t: Vec<f64>) -> StarBody {
        StarBody::hull_polytope(make_uniform_grid(n).unwrap(), t).unwrap()
    }

    #[test]
    fn uniform_grid_partitions_the_circle() {
        let g = make_uniform_grid(4).unwrap();
        assert_eq!(g.angles(), &[0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        assert!(g.weights().iter().all(|&w| (w - PI / 2.0).abs() < 1e-15));
        assert!((g.weights().iter().sum::<f64>() - TAU).abs() < 1e-12);
        assert!(make_uniform_grid(2).is_err(), "fewer than 3 directions must be rejected");
    }

    #[test]
    fn grid_validation_rejects_bad_input() {
        assert!(matches!(
            SphereGrid::from_parts(vec![0.0, 1.0, 0.5], vec![1.0; 3], 2),
            Err(GeometryError::BadAngle { index: 2, .. })
        ));
        assert!(matches!(
            SphereGrid::from_parts(vec![0.0, 1.0, 2.0], vec![1.0, -1.0, 1.0], 2),
            Err(GeometryError::BadWeight { index: 1, .. })
        ));
        assert!(matches!(
            SphereGrid::from_parts(vec![0.0, 1.0, 2.0], vec![1.0; 3], 2),
            Err(GeometryError::WeightSum(_))
        ));
    }

    #[test]
    fn sector_assignment_is_half_open() {
        let g = make_uniform_grid(4).unwrap();
        assert_eq!(g.sector_of(0.0), 0);
        assert_eq!(g.sector_of(-0.1), 0);
        assert_eq!(g.sector_of(PI / 4.0), 1, "shared boundary belongs to its upper sector");
        assert_eq!(g.sector_of(PI / 4.0 - 1e-9), 0);
        assert_eq!(g.sector_of(TAU - PI / 4.0), 0);
        assert_eq!(g.sector_of(7.0), g.sector_of(7.0 - TAU));
    }

    #[test]
    fn body_constructor_rejects_nonpositive_gauges() {
        let g = make_uniform_grid(3).unwrap();
        assert!(matches!(
            StarBody::piecewise_constant(g.clone(), vec![1.0, 0.0, 1.0]),
            Err(GeometryError::BadGauge { index: 1, .. })
        ));
        assert!(matches!(
            StarBody::piecewise_constant(g, vec![1.0, 1.0]),
            Err(GeometryError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pc_volume_matches_disk_and_unit_normalization() {
        assert!((volume_pc(&pc_body(4, vec![1.0; 4])).unwrap() - PI).abs() < 1e-12);
        let t = PI.sqrt();
        assert!((volume_pc(&pc_body(4, vec![t; 4])).unwrap() - 1.0).abs() < 1e-12);
        // 0 in a wrong-kind call is an error, not a silent fallback
        assert!(volume_pc(&hull_body(4, vec![1.0; 4])).is_err());
    }

    #[test]
    fn polytope_volume_matches_known_polygons() {
        // square through the four unit directions scaled so the area is 1
        let v = volume_polytope(&hull_body(4, vec![2f64.sqrt(); 4])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // square inscribed in the unit circle has area 2
        let v = volume_polytope(&hull_body(4, vec![1.0; 4])).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // equilateral triangle inscribed in the unit circle
        let v = volume_polytope(&hull_body(3, vec![1.0; 3])).unwrap();
        assert!((v - 3.0 * (2.0 * PI / 3.0).sin() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn polytope_volume_rejects_wide_gaps() {
        let g = SphereGrid::from_parts(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, TAU - 2.0], 2).unwrap();
        let b = StarBody::hull_polytope(g, vec![1.0; 3]).unwrap();
        assert!(matches!(volume_polytope(&b), Err(GeometryError::DegenerateSector { i: 2, j: 0, .. })));
    }

    #[test]
    fn pc_gauge_scales_with_radius_and_sector() {
        let b = pc_body(4, vec![2.0, 1.0, 1.0, 1.0]);
        assert!((gauge_pc(&b, [3.0, 0.0]).unwrap() - 6.0).abs() < 1e-12);
        assert!((gauge_pc(&b, [0.5, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((gauge_pc(&b, [0.0, -2.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(gauge_pc(&b, [0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn hull_gauge_matches_the_l1_ball() {
        // vertices (+-1/sqrt2, 0), (0, +-1/sqrt2): the l1 ball of area 1,
        // whose gauge is sqrt(2) * (|x| + |y|)
        let b = hull_body(4, vec![2f64.sqrt(); 4]);
        for &(p, expect) in &[
            ([1.0, 0.0], 2f64.sqrt()),
            ([0.5, 0.5], 2f64.sqrt()),
            ([-0.3, 0.7], 2f64.sqrt() * 1.0),
            ([0.0, 0.0], 0.0),
        ] {
            let g = gauge_polytope(&b, p).unwrap();
            assert!(
                (g - expect).abs() < 1e-12,
                "gauge at {p:?}: got {g}, want {expect}"
            );
        }
    }

    #[test]
    fn lipschitz_constants_for_both_kinds() {
        assert!((lipschitz_pc(&pc_body(4, vec![1.0, 3.0, 1.0, 2.0])).unwrap() - 3.0).abs() < 1e-15);
        // l1 ball of area 1: sup gauge over the circle is sqrt(2)*(|cos|+|sin|) at 45 deg
        let b = hull_body(4, vec![2f64.sqrt(); 4]);
        assert!((lipschitz_polytope(&b).unwrap() - 2.0).abs() < 1e-12);
        // round polygon: endpoints dominate when t is constant and gaps are small
        let b = hull_body(64, vec![1.0; 64]);
        let lip = lipschitz_polytope(&b).unwrap();
        assert!(lip >= 1.0 && lip < 1.01, "got {lip}");
    }

    #[test]
    fn dual_mixed_volume_identities() {
        let k = pc_body(8, (0..8).map(|i| 1.0 + 0.1 * i as f64).collect());
        let vol = volume_pc(&k).unwrap();
        for i in [-1.0, 0.0, 1.0, 2.0] {
            let v = dual_mixed_volume(&k, &k, i).unwrap();
            assert!((v - vol).abs() < 1e-12, "V~_{i}(K,K) should be vol(K): {v} vs {vol}");
        }
        let other = pc_body(4, vec![1.0; 4]);
        assert!(matches!(dual_mixed_volume(&k, &other, -1.0), Err(GeometryError::GridMismatch)));
    }

    #[test]
    fn lutwak_holds_with_equality_for_dilates() {
        let k = pc_body(6, vec![0.8, 1.1, 1.4, 0.9, 1.3, 1.0]);
        let l = StarBody::piecewise_constant(
            k.grid().clone(),
            k.gauges().iter().map(|&t| t / 1.7).collect(),
        )
        .unwrap();
        let report = lutwak_report(&k, &l).unwrap();
        assert!(report.slack.abs() < 1e-9 * report.rhs.abs(), "dilates: slack {}", report.slack);

        let m = pc_body(6, vec![1.5, 0.7, 1.0, 1.2, 0.8, 1.1]);
        let report = lutwak_report(&k, &m).unwrap();
        assert!(report.slack > 0.0, "non-dilates give strict inequality, slack {}", report.slack);
    }

    #[test]
    fn moment_norm_examples() {
        // unit disk: (1/2) * 2*pi = pi
        assert!((moment_norm(&pc_body(4, vec![1.0; 4])) - PI).abs() < 1e-12);
        // rho = 1/2 everywhere: pi / 8
        assert!((moment_norm(&pc_body(4, vec![2.0; 4])) - PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_combination_limits() {
        let rho_p = vec![0.9, 1.2, 0.7, 1.0];
        let rho_s = vec![1.0; 4];
        let at0 = harmonic_radial_combination(&rho_p, &rho_s, 0.0, 2).unwrap();
        for (out, rp) in at0.iter().zip(&rho_p) {
            assert!((out - 2f64.powf(1.0 / 3.0) * rp).abs() < 1e-12);
        }
        let at1 = harmonic_radial_combination(&vec![1.0; 4], &rho_s, 1.0, 2).unwrap();
        for out in &at1 {
            assert!((out - 3f64.powf(1.0 / 3.0)).abs() < 1e-12);
        }
        assert!(harmonic_radial_combination(&rho_p, &rho_s, -0.5, 2).is_err());
        assert!(harmonic_radial_combination(&rho_p, &rho_s[..3], 0.1, 2).is_err());
    }

    #[test]
    fn sup_norm_diff_basics() {
        assert_eq!(sup_norm_diff(&[1.0, 2.0], &[1.0, 2.5]).unwrap(), 0.5);
        assert_eq!(sup_norm_diff(&[], &[]).unwrap(), 0.0);
        assert!(sup_norm_diff(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn gauge_is_positively_homogeneous(
            scale in 0.01f64..100.0,
            angle in 0.0f64..TAU,
            t in proptest::collection::vec(0.2f64..5.0, 8),
        ) {
            let pc = pc_body(8, t.clone());
            let hull = hull_body(8, t);
            let p = [angle.cos() * 0.7, angle.sin() * 0.7];
            let q = [p[0] * scale, p[1] * scale];
            for (body, gauge) in [(&pc, gauge_pc as fn(&StarBody, [f64; 2]) -> Result<f64, GeometryError>), (&hull, gauge_polytope)] {
                let g1 = gauge(body, p).unwrap();
                let gs = gauge(body, q).unwrap();
                prop_assert!((gs - scale * g1).abs() <= 1e-12 * gs.abs().max(1.0));
            }
        }

        #[test]
        fn dilates_scale_volume_and_gauges(
            c in 0.1f64..10.0,
            t in proptest::collection::vec(0.2f64..5.0, 8),
        ) {
            let k = pc_body(8, t.clone());
            let ck = pc_body(8, t.iter().map(|&v| v / c).collect());
            let vol_k = volume_pc(&k).unwrap();
            let vol_ck = volume_pc(&ck).unwrap();
            // gauges divided by c dilate the body by c: volume scales by c^d
            prop_assert!((vol_ck - c.powi(2) * vol_k).abs() <= 1e-9 * vol_ck.abs());
        }

        #[test]
        fn hull_gauge_agrees_with_pc_at_grid_directions(
            t in proptest::collection::vec(0.5f64..2.0, 8),
        ) {
            let grid = make_uniform_grid(8).unwrap();
            let pc = StarBody::piecewise_constant(grid.clone(), t.clone()).unwrap();
            let hull = StarBody::hull_polytope(grid.clone(), t).unwrap();
            for i in 0..8 {
                let u = unit_vector(grid.angle(i));
                let gp = gauge_pc(&pc, u).unwrap();
                let gh = gauge_polytope(&hull, u).unwrap();
                prop_assert!((gp - gh).abs() <= 1e-10);
            }
        }
    }
}
