//! One function per CLI subcommand, each producing a [`Table`].

use crate::effective_capacity::{min_theta_err, QosPair, ServiceModel};
use crate::error::{Error, Result};
use crate::error_exponent::ExponentModel;
use crate::fbc_rate::{solve_rate_on, FadingStates, RatePoint};
use crate::numeric::{bracketed_max, linspace, logspace};
use crate::qos_region::{high_snr_region_limit, pareto_boundary, BoundaryOptions, RegionQuery};
use crate::queue_sim::simulate_queue;
use crate::units::delay_exponent_per_bit;

use super::config::{ExperimentConfig, Sweep};
use super::table::{Cell, Table};

/// Tolerance of the golden-section refinement along ϑ.
pub const RIDGE_TOLERANCE: f64 = 1e-9;

fn service_model(cfg: &ExperimentConfig) -> Result<ServiceModel> {
    ServiceModel::sample(&cfg.channel.resolve()?, cfg.blocklength, &cfg.mc)
}

fn theta_err_grid(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let floor = min_theta_err(cfg.blocklength);
    match &cfg.grids.theta_err {
        Some(g) if g[0] < floor => Err(Error::config(format!(
            "grids.theta_err starts at {} below the admissible floor ln2/n = {floor}",
            g[0]
        ))),
        Some(g) => Ok(g.clone()),
        None => Ok(logspace(floor, cfg.tradeoff.theta_err_max, cfg.tradeoff.sweep_points)),
    }
}

/// Error exponent against coding rate: exact Gallager form and the
/// closed-form approximation.
pub fn exponent_curve(cfg: &ExperimentConfig) -> Result<Table> {
    let model = ExponentModel::sample(cfg.channel.resolve()?, cfg.blocklength, &cfg.mc)?;
    let capacity = model.capacity();
    let rates = match &cfg.grids.rates {
        Some(r) => {
            if let Some(bad) = r.iter().find(|&&v| v > capacity.mean) {
                return Err(Error::config(format!(
                    "rate {bad} exceeds the capacity estimate {}",
                    capacity.mean
                )));
            }
            r.clone()
        }
        None => linspace(0.2 * capacity.mean, 0.95 * capacity.mean, 10),
    };
    let mut table = Table::new(&["rate", "theta_err_exact", "theta_err_approx", "rho_star", "stderr"]);
    table.diagnostics.push(format!("capacity estimate {:.16e} (stderr {:.16e})", capacity.mean, capacity.stderr));
    for rate in rates {
        let exact = model.exponent(rate)?;
        let approx = model.approx_exponent(rate)?;
        table.push(vec![
            rate.into(),
            exact.theta_err.into(),
            approx.theta_err.into(),
            exact.rho_star.into(),
            exact.stderr.into(),
        ]);
    }
    Ok(table)
}

/// ε-effective capacity over the θ × ϑ grid, followed by one ridge row per θ
/// at the ϑ maximizing EC.
pub fn ec_surface(cfg: &ExperimentConfig) -> Result<Table> {
    let model = service_model(cfg)?;
    let thetas = cfg.grids.theta_delay.clone().unwrap_or_else(|| logspace(1e-3, 1e-1, 5));
    let errs = theta_err_grid(cfg)?;
    let mut table =
        Table::new(&["kind", "theta_delay", "theta_err", "ec", "ec_stderr", "lambda", "lambda_stderr"]);
    let row = |kind: &str, p: &crate::effective_capacity::EcSurfacePoint| {
        vec![
            kind.into(),
            p.qos.theta_delay.into(),
            p.qos.theta_err.into(),
            p.ec.into(),
            p.ec_stderr.into(),
            p.lambda.into(),
            p.lambda_stderr.into(),
        ]
    };
    let mut ridge = Vec::new();
    for &theta in &thetas {
        for p in model.ec_sweep(theta, &errs)? {
            table.push(row("surface", &p));
        }
        let best = bracketed_max(
            |t| Ok(model.effective_capacity(&QosPair::new(theta, t)?)?.ec),
            &errs,
            RIDGE_TOLERANCE,
        )?;
        ridge.push(model.effective_capacity(&QosPair::new(theta, best.x)?)?);
    }
    for p in &ridge {
        table.push(row("ridge", p));
    }
    Ok(table)
}

/// Pareto boundary of the feasible region for each level `u`.
pub fn pareto(cfg: &ExperimentConfig) -> Result<Table> {
    let levels = cfg.grids.levels.clone().unwrap_or_else(|| vec![-2.0, -1.0]);
    let queries = levels.iter().map(|&u| RegionQuery::new(u, cfg.blocklength)).collect::<Result<Vec<_>>>()?;
    let model = service_model(cfg)?;
    let thetas = cfg.grids.theta_delay.clone().unwrap_or_else(|| logspace(1e-3, 1.0, 20));
    let opts = BoundaryOptions { theta_err_max: cfg.tradeoff.theta_err_max, ..Default::default() };
    let mut table = Table::new(&[
        "level",
        "theta_delay",
        "theta_err",
        "lambda_residual",
        "lambda_stderr",
        "roots",
        "high_snr_line",
    ]);
    for q in &queries {
        let curve = pareto_boundary(&model, q, &thetas, &opts)?;
        if curve.is_empty() {
            table.diagnostics.push(format!("level {:.16e}: empty boundary on the theta grid", q.level));
        } else if !curve.missing.is_empty() {
            table.diagnostics.push(format!(
                "level {:.16e}: no boundary point at {} theta values",
                q.level,
                curve.missing.len()
            ));
        }
        for p in &curve.points {
            table.push(vec![
                q.level.into(),
                p.theta_delay.into(),
                p.theta_err.into(),
                p.lambda_residual.into(),
                p.lambda_stderr.into(),
                p.roots.len().into(),
                high_snr_region_limit(q).into(),
            ]);
        }
    }
    Ok(table)
}

/// Reliability exponent maximizing EC, against θ or against an error target.
pub fn tradeoff(cfg: &ExperimentConfig) -> Result<Table> {
    let model = service_model(cfg)?;
    let t = &cfg.tradeoff;
    match t.sweep {
        Sweep::Theta => {
            let thetas = cfg.grids.theta_delay.clone().unwrap_or_else(|| logspace(1e-3, 1.0, 10));
            let mut table = Table::new(&["theta_delay", "theta_err_opt", "ec", "ec_stderr", "flat"]);
            for theta in thetas {
                let opt = model.optimal_reliability_exponent(theta, t.theta_err_max, t.sweep_points)?;
                table.push(vec![
                    theta.into(),
                    opt.theta_err.into(),
                    opt.ec.into(),
                    opt.ec_stderr.into(),
                    opt.flat.into(),
                ]);
            }
            Ok(table)
        }
        Sweep::Eps => {
            let n = cfg.blocklength as f64;
            let probs = cfg.grids.error_probs.clone().unwrap_or_else(|| logspace(1e-6, 1e-1, 6));
            let mut table = Table::new(&["error_prob", "theta_delay", "theta_err_opt", "ec", "ec_stderr", "binding"]);
            for eps in probs {
                let lo = min_theta_err(cfg.blocklength).max(-eps.ln() / n);
                if lo >= t.theta_err_max {
                    table.diagnostics.push(format!(
                        "error_prob {eps:.16e}: required exponent {lo:.16e} exceeds theta_err_max"
                    ));
                    continue;
                }
                let grid = logspace(lo, t.theta_err_max, t.sweep_points);
                let best = bracketed_max(
                    |x| Ok(model.effective_capacity(&QosPair::new(t.theta_delay, x)?)?.ec),
                    &grid,
                    RIDGE_TOLERANCE,
                )?;
                let p = model.effective_capacity(&QosPair::new(t.theta_delay, best.x)?)?;
                table.push(vec![
                    eps.into(),
                    t.theta_delay.into(),
                    best.x.into(),
                    p.ec.into(),
                    p.ec_stderr.into(),
                    (best.x == lo).into(),
                ]);
            }
            Ok(table)
        }
    }
}

/// Queue simulations at arrivals tied to EC, with the tail fit of each run
/// against the per-bit delay exponent.
pub fn queue_validate(cfg: &ExperimentConfig) -> Result<Table> {
    let q = &cfg.queue;
    let channel = cfg.channel.resolve()?;
    let arrival = match q.arrival_bits {
        Some(a) => a,
        None => {
            let model = ServiceModel::sample(&channel, cfg.blocklength, &cfg.mc)?;
            let ec = model.effective_capacity(&QosPair::new(q.theta_delay, q.theta_err)?)?;
            q.arrival_factor * cfg.blocklength as f64 * ec.ec
        }
    };
    let target = delay_exponent_per_bit(q.theta_delay);
    let mut table = Table::new(&[
        "kind",
        "replication",
        "seed",
        "threshold",
        "overflow_prob",
        "log_prob",
        "events",
        "fitted_exponent",
        "target_exponent",
        "r_squared",
        "arrival_bits",
    ]);
    for k in 0..q.replications {
        let seed = cfg.mc.seed.wrapping_add(1 + k as u64);
        let trace = simulate_queue(&channel, arrival, q.theta_err, cfg.blocklength, q.blocks, seed)?;
        for ((x, p), e) in trace.thresholds.iter().zip(&trace.overflow_probs).zip(&trace.events) {
            table.push(vec![
                "tail".into(),
                k.into(),
                seed.into(),
                (*x).into(),
                (*p).into(),
                p.ln().into(),
                (*e).into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                arrival.into(),
            ]);
        }
        if trace.fitted_exponent.is_none() {
            table.diagnostics.push(format!("replication {k}: insufficient exceedance events, no exponent fitted"));
        }
        table.push(vec![
            "summary".into(),
            k.into(),
            seed.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            trace.fitted_exponent.into(),
            target.into(),
            trace.r_squared.into(),
            arrival.into(),
        ]);
    }
    Ok(table)
}

/// Normal-approximation rate against blocklength and against error target.
pub fn rate_curve(cfg: &ExperimentConfig) -> Result<Table> {
    let states = FadingStates::sample(&cfg.channel.resolve()?, &cfg.mc)?;
    let ns = cfg.grids.blocklengths.clone().unwrap_or_else(|| vec![100, 200, 500, 1000, 2000]);
    let probs = cfg.grids.error_probs.clone().unwrap_or_else(|| logspace(5e-3, 1e-1, 5));
    let mut table = Table::new(&["sweep", "blocklength", "error_prob", "rate", "residual", "residual_stderr"]);
    let mut push = |sweep: &str, p: RatePoint| {
        table.push(vec![
            sweep.into(),
            p.blocklength.into(),
            p.error_prob.into(),
            p.rate.into(),
            p.residual.into(),
            p.residual_stderr.into(),
        ]);
    };
    for n in ns {
        push("n", solve_rate_on(&states, n, cfg.rate_curve.error_prob)?);
    }
    for eps in probs {
        push("eps", solve_rate_on(&states, cfg.blocklength, eps)?);
    }
    Ok(table)
}
