//! Rayon drivers. Work items are collected by index and reduced in index
//! order, so results (and the first reported error) do not depend on scheduling.

use gmrd_core::design::{DesignError, validate_grid};
use gmrd_core::validate::{SimError, SimPlan, TrialStats};
use gmrd_core::zdsc::{ZdscError, ZdscRun, ZdscTrial};
use gmrd_core::{SystemModel, Tolerances, TradeoffCurve, TradeoffPoint, design_sensor};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("D = {d}: {source}")]
    Point { d: f64, source: DesignError },
    #[error(transparent)]
    Curve(DesignError),
}

fn first_error<T, E>(results: Vec<Result<T, E>>) -> Result<Vec<T>, E> {
    results.into_iter().collect()
}

/// Parallel counterpart of `sweep_curve`.
pub fn par_sweep_curve(model: &SystemModel, grid: &[f64], tol: &Tolerances) -> Result<TradeoffCurve, SweepError> {
    validate_grid(grid).map_err(SweepError::Curve)?;
    let results: Vec<Result<TradeoffPoint, SweepError>> = grid
        .par_iter()
        .map(|&d| design_sensor(model, d, tol).map_err(|source| SweepError::Point { d, source }))
        .collect();
    let points = first_error(results)?;
    TradeoffCurve::from_points(points, tol).map_err(SweepError::Curve)
}

/// Runs every trial of `plan`; statistics come back in trial order.
pub fn par_trials(plan: &SimPlan) -> Result<Vec<TrialStats>, SimError> {
    let results: Vec<_> = (0..plan.config().trials).into_par_iter().map(|i| plan.run_trial(i)).collect();
    first_error(results)
}

/// Runs `trials` ZDSC trials; results come back in trial order.
pub fn par_zdsc_trials(run: &ZdscRun, trials: u64) -> Result<Vec<ZdscTrial>, ZdscError> {
    let results: Vec<_> = (0..trials).into_par_iter().map(|i| run.run_trial(i)).collect();
    first_error(results)
}
