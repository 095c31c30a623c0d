//! Closed-form optimal regularizers.
//!
//! With no ambiguity budget the best unit-volume star body for a sector
//! summary `alpha` has an explicit per-sector solution: the radial in sector
//! `U` is proportional to `(alpha_U / w_U)^(1/(d+1))`, so the gauge is
//! `t_U = c (w_U / alpha_U)^(1/(d+1))` with `c` fixed by the volume
//! normalization. The critic variant minimizes a signed objective over
//! unit-volume bodies whose radial is floored at `eps_ball`; its solution is
//! the same power formula clamped at the floor, with the volume multiplier
//! found by bisection.

use crate::geometry::{make_uniform_grid, volume_pc, GeometryError, StarBody};
use crate::measures::{
    sector_summary_density, DensityOracle, MeasureError, QuadratureParams, SectorSummary,
    SignedSummary,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClosedFormError {
    #[error("sector {index} carries no mass, so the optimal body does not exist (its gauge would sink to zero there); use a positive ambiguity budget or a radial floor instead")]
    EmptySector { index: usize },
    #[error("sector coefficient {value} at index {index} is not usable")]
    BadCoefficient { index: usize, value: f64 },
    #[error("coefficient vector has length {got}, grid has {expected} sectors")]
    LengthMismatch { got: usize, expected: usize },
    #[error("radial floor must be positive and finite, got {0}")]
    BadFloor(f64),
    #[error("the floor ball alone has volume {ball_volume} > 1; no unit-volume body stays above eps_ball = {eps_ball}")]
    InfeasibleFloor { eps_ball: f64, ball_volume: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// `E_P[||x||_K]` for a piecewise-constant body, written against per-sector
/// mass-radius coefficients: the dot product of `alpha` with the gauges.
pub fn expected_gauge_pc(alpha: &[f64], body: &StarBody) -> Result<f64, ClosedFormError> {
    let t = body.gauges();
    if alpha.len() != t.len() {
        return Err(ClosedFormError::LengthMismatch { got: alpha.len(), expected: t.len() });
    }
    Ok(alpha.iter().zip(t).map(|(a, g)| a * g).sum())
}

/// Unit-volume star body minimizing `sum alpha_U t_U`, the expected gauge of
/// the summarized distribution. Requires every sector to carry mass;
/// otherwise the infimum is not attained (the body stretches without bound
/// along the empty sector).
pub fn optimal_star_eps0(summary: &SectorSummary) -> Result<StarBody, ClosedFormError> {
    let grid = &summary.grid;
    let alpha = &summary.alpha;
    if alpha.len() != grid.len() {
        return Err(ClosedFormError::LengthMismatch { got: alpha.len(), expected: grid.len() });
    }
    let d = grid.dim() as f64;
    let p = 1.0 / (d + 1.0);
    for (i, &a) in alpha.iter().enumerate() {
        if !a.is_finite() || a < 0.0 {
            return Err(ClosedFormError::BadCoefficient { index: i, value: a });
        }
        if a == 0.0 {
            return Err(ClosedFormError::EmptySector { index: i });
        }
    }
    // volume normalization: c^d = (1/d) * sum w^(1/(d+1)) alpha^(d/(d+1))
    let s: f64 = (0..grid.len())
        .map(|i| grid.weight(i).powf(p) * alpha[i].powf(d * p))
        .sum::<f64>()
        / d;
    let c = s.powf(1.0 / d);
    let t = (0..grid.len())
        .map(|i| c * (grid.weight(i) / alpha[i]).powf(p))
        .collect();
    Ok(StarBody::piecewise_constant(grid.clone(), t)?)
}

/// Critic body with its multiplier and clamp pattern.
#[derive(Debug, Clone)]
pub struct CriticSolution {
    pub body: StarBody,
    /// Volume multiplier; stationarity on unclamped sectors reads
    /// `sigma_U = d w_U lambda rho_U^(d+1)`.
    pub lambda_star: f64,
    /// Which sectors sit on the radial floor.
    pub clamped: Vec<bool>,
    /// `|volume - 1|` of the returned body. Nonzero (and equal to the floor
    /// ball's volume deficit) only in the degenerate all-clamped case.
    pub volume_residual: f64,
}

fn critic_radial(sigma: f64, w: f64, d: f64, lambda: f64, eps_ball: f64) -> f64 {
    if sigma <= 0.0 {
        eps_ball
    } else {
        (sigma / (d * w * lambda)).powf(1.0 / (d + 1.0)).max(eps_ball)
    }
}

/// Unit-volume body with radial floor `eps_ball` minimizing the signed
/// expected gauge `sum sigma_U t_U` (large where the negative side of
/// `sigma` lives, small where the positive side lives).
///
/// When no sector has positive `sigma` the volume constraint cannot bind:
/// every sector clamps to the floor and the floor ball itself is returned,
/// with `lambda_star = 0` and the volume shortfall reported in
/// `volume_residual`.
pub fn optimal_critic(
    signed: &SignedSummary,
    eps_ball: f64,
) -> Result<CriticSolution, ClosedFormError> {
    let grid = &signed.grid;
    let sigma = &signed.sigma;
    if sigma.len() != grid.len() {
        return Err(ClosedFormError::LengthMismatch { got: sigma.len(), expected: grid.len() });
    }
    if !eps_ball.is_finite() || eps_ball <= 0.0 {
        return Err(ClosedFormError::BadFloor(eps_ball));
    }
    for (i, &s) in sigma.iter().enumerate() {
        if !s.is_finite() {
            return Err(ClosedFormError::BadCoefficient { index: i, value: s });
        }
    }
    let d = grid.dim() as f64;
    let n = grid.len();
    let w_total: f64 = grid.weights().iter().sum();
    let ball_volume = w_total * eps_ball.powf(d) / d;
    if ball_volume > 1.0 + 1e-12 {
        return Err(ClosedFormError::InfeasibleFloor { eps_ball, ball_volume });
    }

    let volume_at = |lambda: f64| -> f64 {
        (0..n)
            .map(|i| {
                let w = grid.weight(i);
                w * critic_radial(sigma[i], w, d, lambda, eps_ball).powf(d)
            })
            .sum::<f64>()
            / d
    };

    let any_positive = sigma.iter().any(|&s| s > 0.0);
    let lambda_star = if !any_positive {
        0.0
    } else {
        // volume_at is continuous and nonincreasing in lambda, strictly
        // decreasing while any sector is unclamped; bracket then bisect.
        let mut lo = 1.0;
        while volume_at(lo) < 1.0 {
            lo /= 2.0;
            if lo < 1e-280 {
                break;
            }
        }
        let mut hi = lo.max(1.0);
        let mut doublings = 0;
        while volume_at(hi) > 1.0 && doublings < 1100 {
            hi *= 2.0;
            doublings += 1;
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let v = volume_at(mid);
            if (v - 1.0).abs() <= 1e-10 {
                break;
            }
            if v > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mid
    };

    let rho: Vec<f64> = (0..n)
        .map(|i| critic_radial(sigma[i], grid.weight(i), d, lambda_star, eps_ball))
        .collect();
    let clamped = rho.iter().map(|&r| r == eps_ball).collect();
    let t = rho.iter().map(|&r| 1.0 / r).collect();
    let body = StarBody::piecewise_constant(grid.clone(), t)?;
    let volume_residual = (volume_pc(&body)? - 1.0).abs();
    Ok(CriticSolution { body, lambda_star, clamped, volume_residual })
}

/// One row of a grid-refinement study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergencePoint {
    pub n: usize,
    /// `max_U |t_hat_U - t_star(theta_U)|` against the continuum optimum.
    pub sup_error: f64,
}

/// Solves the zero-budget problem on successively finer uniform grids and
/// reports the sup-norm gauge error against the continuum solution
/// `t*(theta) = c * a(theta)^(-1/(d+1))`, where `a(theta)` is the radial
/// moment density. The continuum side is evaluated with ten-fold finer
/// quadrature so discretization error dominates the comparison.
pub fn convergence_study(
    oracle: &dyn DensityOracle,
    grid_sizes: &[usize],
    params: &QuadratureParams,
) -> Result<Vec<ConvergencePoint>, ClosedFormError> {
    let mut out = Vec::with_capacity(grid_sizes.len());
    for &n in grid_sizes {
        let grid = make_uniform_grid(n)?;
        let d = grid.dim() as f64;
        let summary = sector_summary_density(oracle, &grid, params)?.summary;
        let body = optimal_star_eps0(&summary)?;

        let fine = QuadratureParams {
            radial_nodes: params.radial_nodes * 10,
            radial_panels: params.radial_panels,
            angular_subsamples: 1,
            ..*params
        };
        // a(theta_U) at the sector centers: one-sample "sectors" of the same
        // grid but with the moment read as a density (alpha_U / w_U -> a).
        let pointwise = sector_summary_density(
            oracle,
            &grid,
            &QuadratureParams { angular_subsamples: 1, ..fine },
        )?
        .summary;
        // normalization constant from a dense angular grid
        let dense = make_uniform_grid((n * 10).max(256))?;
        let dense_summary = sector_summary_density(oracle, &dense, &fine)?.summary;
        let p = 1.0 / (d + 1.0);
        let s: f64 = (0..dense.len())
            .map(|i| {
                let a = dense_summary.alpha[i] / dense.weight(i);
                dense.weight(i) * a.powf(d * p)
            })
            .sum::<f64>()
            / d;
        let c = s.powf(1.0 / d);

        let mut sup_error: f64 = 0.0;
        for i in 0..n {
            let a = pointwise.alpha[i] / grid.weight(i);
            if a <= 0.0 {
                return Err(ClosedFormError::EmptySector { index: i });
            }
            let t_star = c * a.powf(-p);
            sup_error = sup_error.max((body.gauges()[i] - t_star).abs());
        }
        out.push(ConvergencePoint { n, sup_error });
    }
    Ok(out)
}
