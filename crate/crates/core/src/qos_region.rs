//! Feasible QoS region `F(u) = {(θ, ϑ) : Λ(θ, ϑ) ≤ u}`, `u < 0`, and its
//! Pareto boundary.
//!
//! Since `Λ ≥ ln ε = −nϑ`, every member has `ϑ ≥ −u/n`; at high SNR the
//! boundary flattens onto that line. At fixed θ, Λ falls with ϑ while the
//! error term dominates and climbs back toward zero once the quantile rates
//! collapse, so a θ-slice of the region is an interval in ϑ and the boundary
//! solver has to expect more than one root.

use rayon::prelude::*;
use serde::Serialize;

use crate::effective_capacity::{min_theta_err, QosPair, ServiceModel, DEFAULT_THETA_ERR_MAX};
use crate::error::{Error, Result};
use crate::numeric::{bisect, logspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionQuery {
    /// Level `u < 0`.
    pub level: f64,
    pub blocklength: usize,
}

impl RegionQuery {
    pub fn new(level: f64, blocklength: usize) -> Result<Self> {
        if !(level < 0.0) || !level.is_finite() {
            return Err(Error::domain(format!("region level must be a finite negative number, got {level}")));
        }
        if blocklength == 0 {
            return Err(Error::domain("blocklength must be positive"));
        }
        Ok(Self { level, blocklength })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Member,
    NonMember,
    /// `|Λ − u|` below three standard errors.
    Undecidable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    /// Point-estimate verdict `Λ ≤ u`.
    pub member: bool,
    /// `Λ − u`.
    pub margin: f64,
    pub stderr: f64,
    pub decision: Decision,
}

fn check_model(model: &ServiceModel, query: &RegionQuery) -> Result<()> {
    if model.blocklength() == query.blocklength {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "query blocklength {} differs from model blocklength {}",
            query.blocklength,
            model.blocklength()
        )))
    }
}

pub fn region_membership(model: &ServiceModel, qos: &QosPair, query: &RegionQuery) -> Result<Membership> {
    check_model(model, query)?;
    let lambda = model.log_mgf(qos)?;
    let margin = lambda.mean - query.level;
    let decision = if margin.abs() < 3.0 * lambda.stderr {
        Decision::Undecidable
    } else if margin <= 0.0 {
        Decision::Member
    } else {
        Decision::NonMember
    };
    Ok(Membership { member: margin <= 0.0, margin, stderr: lambda.stderr, decision })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    pub theta_err_max: f64,
    /// Points of the logarithmic bracketing scan in ϑ.
    pub scan_points: usize,
    /// Bisection tolerance in ϑ.
    pub tolerance: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self { theta_err_max: DEFAULT_THETA_ERR_MAX, scan_points: 64, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub theta_delay: f64,
    /// Smallest root of `Λ(θ, ·) = u`.
    pub theta_err: f64,
    /// `Λ − u` at the reported root.
    pub lambda_residual: f64,
    pub lambda_stderr: f64,
    /// Every root found on the scan, ascending.
    pub roots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoCurve {
    pub level: f64,
    pub blocklength: usize,
    /// Boundary points in increasing θ.
    pub points: Vec<BoundaryPoint>,
    /// Grid values of θ where no root was bracketed.
    pub missing: Vec<f64>,
}

impl ParetoCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point_at(&self, theta_delay: f64) -> Option<&BoundaryPoint> {
        self.points.iter().find(|p| p.theta_delay == theta_delay)
    }
}

fn roots_at(model: &ServiceModel, query: &RegionQuery, theta: f64, opts: &BoundaryOptions) -> Result<Vec<f64>> {
    let grid = logspace(min_theta_err(query.blocklength), opts.theta_err_max, opts.scan_points);
    let h = |t: f64| -> Result<f64> { Ok(model.log_mgf(&QosPair::new(theta, t)?)?.mean - query.level) };
    let values = grid.iter().map(|&t| h(t)).collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            let r = bisect(h, grid[i], grid[i + 1], opts.tolerance, 200, |_, _| true)?;
            roots.push(r.x);
        }
    }
    Ok(roots)
}

/// Traces `Λ(θ, ϑ) = u` for each θ of `theta_grid` (positive, strictly increasing).
pub fn pareto_boundary(
    model: &ServiceModel,
    query: &RegionQuery,
    theta_grid: &[f64],
    opts: &BoundaryOptions,
) -> Result<ParetoCurve> {
    check_model(model, query)?;
    if theta_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || theta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("theta grid must be positive and strictly increasing"));
    }
    let per_theta: Vec<Result<Vec<f64>>> =
        theta_grid.par_iter().map(|&theta| roots_at(model, query, theta, opts)).collect();
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for (&theta, roots) in theta_grid.iter().zip(per_theta) {
        let roots = roots?;
        match roots.first() {
            None => missing.push(theta),
            Some(&t) => {
                let lambda = model.log_mgf(&QosPair::new(theta, t)?)?;
                points.push(BoundaryPoint {
                    theta_delay: theta,
                    theta_err: t,
                    lambda_residual: lambda.mean - query.level,
                    lambda_stderr: lambda.stderr,
                    roots,
                });
            }
        }
    }
    Ok(ParetoCurve { level: query.level, blocklength: query.blocklength, points, missing })
}

/// High-SNR boundary line `ϑ = −u/n` of the feasible region.
pub fn high_snr_region_limit(query: &RegionQuery) -> f64 {
    -query.level / query.blocklength as f64
}

/// Effective-capacity floor `−u/(nθ)` (nats per channel use) implied by
/// membership at level `u`.
pub fn ec_rate_guarantee(query: &RegionQuery, theta_delay: f64) -> Result<f64> {
    if !(theta_delay > 0.0) {
        return Err(Error::domain("delay exponent must be positive"));
    }
    Ok(-query.level / (query.blocklength as f64 * theta_delay))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbc_rate::FadingStates;

    fn stub(r0: f64, n: usize) -> ServiceModel {
        ServiceModel::new(FadingStates::deterministic(r0, 0.0).unwrap(), n).unwrap()
    }

    #[test]
    fn query_validation() {
        assert!(RegionQuery::new(0.0, 100).is_err());
        assert!(RegionQuery::new(0.5, 100).is_err());
        assert!(RegionQuery::new(-1.0, 0).is_err());
        assert!(RegionQuery::new(-1.0, 100).is_ok());
    }

    #[test]
    fn limit_and_guarantee_arithmetic() {
        let q = RegionQuery::new(-1.0, 100).unwrap();
        assert!((high_snr_region_limit(&q) - 0.01).abs() < 1e-15);
        assert!((high_snr_region_limit(&RegionQuery::new(-2.0, 100).unwrap()) - 0.02).abs() < 1e-15);
        assert!((ec_rate_guarantee(&q, 0.01).unwrap() - 1.0).abs() < 1e-12);
        assert!((ec_rate_guarantee(&q, 0.02).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stub_membership_follows_exact_lambda() {
        let n = 200;
        let m = stub(2.0, n);
        let qos = QosPair::new(1e-6, 0.05).unwrap();
        let eps = qos.error_prob(n);
        let exact = (eps + (1.0 - eps) * (-(n as f64) * 1e-6 * 2.0 * std::f64::consts::LN_2).exp()).ln();
        let q = RegionQuery::new(-1e-12, n).unwrap();
        let mem = region_membership(&m, &qos, &q).unwrap();
        assert_eq!(mem.member, exact <= -1e-12);
        assert!((mem.margin - (exact + 1e-12)).abs() < 1e-15);
        assert_eq!(mem.stderr, 0.0);
    }

    #[test]
    fn boundary_point_is_member() {
        // a level chosen as Λ at a point puts that point on the closed boundary
        let m = stub(2.0, 100);
        let qos = QosPair::new(0.02, 0.03).unwrap();
        let lambda = m.log_mgf(&qos).unwrap().mean;
        let q = RegionQuery::new(lambda, 100).unwrap();
        let mem = region_membership(&m, &qos, &q).unwrap();
        assert!(mem.member);
        assert_eq!(mem.margin, 0.0);
    }

    #[test]
    fn stub_boundary_matches_closed_form() {
        let (r0, n, u) = (2.0, 100, -1.0);
        let m = stub(r0, n);
        let q = RegionQuery::new(u, n).unwrap();
        let thetas = logspace(1e-3, 0.1, 12);
        let curve = pareto_boundary(&m, &q, &thetas, &BoundaryOptions::default()).unwrap();
        assert!(!curve.is_empty());
        for p in &curve.points {
            let s = (-(n as f64) * p.theta_delay * r0 * std::f64::consts::LN_2).exp();
            let oracle = -((u.exp() - s) / (1.0 - s)).ln() / n as f64;
            assert!((p.theta_err - oracle).abs() < 1e-6, "θ {}: {} vs {}", p.theta_delay, p.theta_err, oracle);
        }
        // θ too small for any admissible ϑ to reach the level
        for &t in &curve.missing {
            assert!((-(n as f64) * t * r0 * std::f64::consts::LN_2).exp() >= u.exp());
        }
    }

    #[test]
    fn unsorted_grid_is_rejected() {
        let m = stub(2.0, 100);
        let q = RegionQuery::new(-1.0, 100).unwrap();
        assert!(pareto_boundary(&m, &q, &[0.1, 0.01], &BoundaryOptions::default()).is_err());
        let other = RegionQuery::new(-1.0, 200).unwrap();
        assert!(pareto_boundary(&m, &other, &[0.1], &BoundaryOptions::default()).is_err());
    }

    #[test]
    fn unreachable_level_gives_empty_curve() {
        let m = stub(0.01, 100);
        let q = RegionQuery::new(-50.0, 100).unwrap();
        let opts = BoundaryOptions { theta_err_max: 0.3, ..Default::default() };
        let curve = pareto_boundary(&m, &q, &[0.001, 0.01], &opts).unwrap();
        assert!(curve.is_empty());
        assert_eq!(curve.missing.len(), 2);
    }
}
