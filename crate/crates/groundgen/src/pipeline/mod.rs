//! Offline design pipeline: sweep the reeling-speed grid per wind value,
//! fit a power surrogate per wind, maximize and certify the optimum against
//! the simulator, then regress the optimal force laws.

mod manifold;
mod surface;

pub use manifold::fit_manifold;
pub use surface::ResponseSurface;

use std::path::Path;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::control::ManifoldModel;
use crate::cycle::evaluate_pair;
use crate::error::{Error, Result};

/// Power recorded for pairs that produced no feasible periodic cycle.
pub const PLACEHOLDER_POWER: f64 = -1.0e6;
/// Values at or below this mark penalized territory on a surface.
pub(crate) const FEASIBLE_THRESHOLD: f64 = 0.5 * PLACEHOLDER_POWER;

/// Sweep extent and surrogate hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Wind values of the design interval [m/s].
    pub winds: Vec<f64>,
    /// Reel-out grid values [m/s], positive.
    pub v_trac_values: Vec<f64>,
    /// Reel-in grid values [m/s], negative.
    pub v_retr_values: Vec<f64>,
    /// Kernel width as a multiple of the median pairwise center distance.
    pub surface_sigma_scale: f64,
    /// Ridge regularization weight on standardized targets.
    pub surface_ridge: f64,
    /// Budget of maximize-simulate-penalize rounds per wind value.
    pub certify_max_iter: usize,
    /// Run sweep evaluations on one thread even in parallel builds.
    pub force_sequential: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            winds: (0..8).map(|i| 6.5 + 0.5 * i as f64).collect(),
            v_trac_values: (0..7).map(|i| 0.8 + 0.4 * i as f64).collect(),
            v_retr_values: (0..8).map(|i| -5.4 + 0.6 * i as f64).collect(),
            surface_sigma_scale: 1.0,
            surface_ridge: 1e-8,
            certify_max_iter: 10,
            force_sequential: false,
        }
    }
}

impl SweepConfig {
    /// Pairs with the wrong sign are rejected here; pairs beyond the winch
    /// speed limits are allowed through and resolve to infeasible rows.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, list) in [
            ("winds", &self.winds),
            ("v_trac_values", &self.v_trac_values),
            ("v_retr_values", &self.v_retr_values),
        ] {
            if list.is_empty() {
                return Err(Error::config(format!("{prefix}.{name}"), "must be non-empty"));
            }
            if list.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("{prefix}.{name}"), "must be finite"));
            }
        }
        if self.winds.iter().any(|w| *w <= 0.0) {
            return Err(Error::config(format!("{prefix}.winds"), "must be positive"));
        }
        if self.v_trac_values.iter().any(|v| *v <= 0.0) {
            return Err(Error::config(
                format!("{prefix}.v_trac_values"),
                "reel-out speeds must be positive",
            ));
        }
        if self.v_retr_values.iter().any(|v| *v >= 0.0) {
            return Err(Error::config(
                format!("{prefix}.v_retr_values"),
                "reel-in speeds must be negative",
            ));
        }
        if !(self.surface_sigma_scale.is_finite() && self.surface_sigma_scale > 0.0) {
            return Err(Error::config(
                format!("{prefix}.surface_sigma_scale"),
                "must be positive",
            ));
        }
        if !(self.surface_ridge.is_finite() && self.surface_ridge >= 0.0) {
            return Err(Error::config(
                format!("{prefix}.surface_ridge"),
                "must be non-negative",
            ));
        }
        if self.certify_max_iter == 0 {
            return Err(Error::config(
                format!("{prefix}.certify_max_iter"),
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Materialized sweep extent: wind list and the reeling-speed pairs.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub winds: Vec<f64>,
    pub pairs: Vec<[f64; 2]>,
}

impl SweepGrid {
    pub fn from_config(cfg: &SweepConfig) -> Self {
        let mut pairs = Vec::with_capacity(cfg.v_trac_values.len() * cfg.v_retr_values.len());
        for &t in &cfg.v_trac_values {
            for &r in &cfg.v_retr_values {
                pairs.push([t, r]);
            }
        }
        SweepGrid {
            winds: cfg.winds.clone(),
            pairs,
        }
    }

    /// Box enclosing all pairs, the search region for `maximize`.
    pub fn bounds(&self) -> [[f64; 2]; 2] {
        let mut b = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
        for p in &self.pairs {
            for d in 0..2 {
                b[d][0] = b[d][0].min(p[d]);
                b[d][1] = b[d][1].max(p[d]);
            }
        }
        b
    }
}

/// Result of evaluating one reeling-speed pair at one wind value.
#[derive(Debug, Clone, Copy)]
pub struct PairEval {
    /// Cycle power of the settled cycle, or the placeholder [W].
    pub power: f64,
    pub feasible: bool,
    /// Average phase forces of the settled cycle [N]; zero when infeasible.
    pub f_trac: f64,
    pub f_retr: f64,
}

impl PairEval {
    pub fn infeasible() -> Self {
        PairEval {
            power: PLACEHOLDER_POWER,
            feasible: false,
            f_trac: 0.0,
            f_retr: 0.0,
        }
    }
}

/// Closed-loop evaluator backed by the cycle executor. Simulation errors
/// (instability, malformed cycles) downgrade to infeasible rows so a sweep
/// never aborts on a bad operating point.
pub fn plant_evaluator(cfg: &RunConfig) -> impl Fn(f64, f64, f64) -> PairEval + Sync + '_ {
    move |v_w, v_trac, v_retr| match evaluate_pair(cfg, v_w, v_trac, v_retr) {
        Ok(out) if out.feasible => {
            let m = out.final_metrics().expect("feasible run has settled cycles");
            PairEval {
                power: m.p_cycle,
                feasible: true,
                f_trac: m.f_trac_avg,
                f_retr: m.f_retr_avg,
            }
        }
        Ok(_) => PairEval::infeasible(),
        Err(e) => {
            log::warn!("evaluation failed at v_w={v_w} v_trac={v_trac} v_retr={v_retr}: {e}");
            PairEval::infeasible()
        }
    }
}

/// Order-preserving map, parallel when built and configured for it.
pub(crate) fn map_ordered<T, R, F>(items: &[T], sequential: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !sequential {
        return items.par_iter().map(&f).collect();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = sequential;
    items.iter().map(&f).collect()
}

/// One dataset row.
#[derive(Debug, Clone, Copy)]
pub struct PowerRow {
    pub v_w: f64,
    pub v_trac: f64,
    pub v_retr: f64,
    /// P-tilde: settled cycle power, or the placeholder when infeasible [W].
    pub power: f64,
    pub feasible: bool,
    pub f_trac: f64,
    pub f_retr: f64,
}

/// Sweep output: one row per (wind, pair) cell in grid order.
#[derive(Debug, Clone, Default)]
pub struct PowerDataset {
    pub rows: Vec<PowerRow>,
}

impl PowerDataset {
    /// Training points of one wind slice: ((v_trac, v_retr), P-tilde).
    pub fn slice(&self, v_w: f64) -> Vec<([f64; 2], f64)> {
        self.rows
            .iter()
            .filter(|r| r.v_w == v_w)
            .map(|r| ([r.v_trac, r.v_retr], r.power))
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["v_w", "v_trac", "v_retr", "P_W", "feasible"])?;
        for r in &self.rows {
            w.serialize((r.v_w, r.v_trac, r.v_retr, r.power, r.feasible as u8))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates every (wind, pair) cell. The output is keyed by cell order, so
/// it is independent of the execution schedule.
pub fn run_sweep<F>(grid: &SweepGrid, eval: &F, sequential: bool) -> PowerDataset
where
    F: Fn(f64, f64, f64) -> PairEval + Sync,
{
    let mut cells = Vec::with_capacity(grid.winds.len() * grid.pairs.len());
    for &w in &grid.winds {
        for &p in &grid.pairs {
            cells.push((w, p));
        }
    }
    let rows = map_ordered(&cells, sequential, |&(v_w, [v_trac, v_retr])| {
        let e = eval(v_w, v_trac, v_retr);
        log::debug!(
            "sweep v_w={v_w} v_trac={v_trac} v_retr={v_retr} -> P={} s={}",
            e.power,
            e.feasible
        );
        PowerRow {
            v_w,
            v_trac,
            v_retr,
            power: if e.feasible { e.power } else { PLACEHOLDER_POWER },
            feasible: e.feasible,
            f_trac: e.f_trac,
            f_retr: e.f_retr,
        }
    });
    PowerDataset { rows }
}

/// A certified (or given-up) per-wind optimum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimalPoint {
    pub v_w: f64,
    pub v_trac: f64,
    pub v_retr: f64,
    /// Simulated cycle power when verified, surrogate estimate otherwise [W].
    #[serde(rename = "P_W")]
    pub power: f64,
    #[serde(rename = "F_trac_N")]
    pub f_trac: f64,
    #[serde(rename = "F_retr_N")]
    pub f_retr: f64,
    pub verified: bool,
}

pub fn write_optima_csv(path: &Path, optima: &[OptimalPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in optima {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_optima_csv(path: &Path) -> Result<Vec<OptimalPoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Certified optimum plus the surface that proposed it.
#[derive(Debug, Clone)]
pub struct CertifyOutcome {
    pub point: OptimalPoint,
    pub surface: ResponseSurface,
    pub iterations: usize,
}

/// Surrogate-maximize / simulate / penalize loop for one wind value.
///
/// A verified candidate is accepted once its simulated power is within 1%
/// of the best raw feasible grid power (candidates are usually above it);
/// a verified but poorer candidate is fed back with its true power, an
/// infeasible one with the placeholder. If the budget runs out, the best
/// raw grid pair itself is re-certified as a fallback; only if even that
/// fails does an unverified point come back.
pub fn certify_optimum<F>(
    v_w: f64,
    training: &mut Vec<([f64; 2], f64)>,
    bounds: &[[f64; 2]; 2],
    cfg: &SweepConfig,
    eval: &F,
) -> Result<CertifyOutcome>
where
    F: Fn(f64, f64, f64) -> PairEval + Sync,
{
    let best_raw = training
        .iter()
        .filter(|(_, p)| *p > FEASIBLE_THRESHOLD)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .copied();
    let accept_floor = best_raw.map(|(_, p)| p - 0.01 * p.abs());

    let mut surface = ResponseSurface::fit(training, v_w, cfg.surface_sigma_scale, cfg.surface_ridge)?;
    let mut last_candidate = None;
    for iteration in 1..=cfg.certify_max_iter {
        let cand = surface.maximize(bounds)?;
        let e = eval(v_w, cand[0], cand[1]);
        if e.feasible && accept_floor.is_none_or(|floor| e.power >= floor) {
            return Ok(CertifyOutcome {
                point: OptimalPoint {
                    v_w,
                    v_trac: cand[0],
                    v_retr: cand[1],
                    power: e.power,
                    f_trac: e.f_trac,
                    f_retr: e.f_retr,
                    verified: true,
                },
                surface,
                iterations: iteration,
            });
        }
        log::debug!(
            "certify v_w={v_w}: candidate {cand:?} {} (P={})",
            if e.feasible { "below raw optimum" } else { "infeasible" },
            e.power
        );
        training.push((cand, if e.feasible { e.power } else { PLACEHOLDER_POWER }));
        surface = ResponseSurface::fit(training, v_w, cfg.surface_sigma_scale, cfg.surface_ridge)?;
        last_candidate = Some(cand);
    }

    if let Some((pair, _)) = best_raw {
        let e = eval(v_w, pair[0], pair[1]);
        if e.feasible {
            log::warn!("certify v_w={v_w}: budget exhausted, fell back to best grid pair {pair:?}");
            return Ok(CertifyOutcome {
                point: OptimalPoint {
                    v_w,
                    v_trac: pair[0],
                    v_retr: pair[1],
                    power: e.power,
                    f_trac: e.f_trac,
                    f_retr: e.f_retr,
                    verified: true,
                },
                surface,
                iterations: cfg.certify_max_iter + 1,
            });
        }
    }

    let cand = last_candidate.expect("certify_max_iter >= 1");
    log::warn!("certify v_w={v_w}: no verifiable optimum within budget");
    Ok(CertifyOutcome {
        point: OptimalPoint {
            v_w,
            v_trac: cand[0],
            v_retr: cand[1],
            power: surface.eval(cand),
            f_trac: 0.0,
            f_retr: 0.0,
            verified: false,
        },
        surface,
        iterations: cfg.certify_max_iter,
    })
}

/// Everything the offline phase produces.
#[derive(Debug, Clone)]
pub struct DesignArtifacts {
    pub dataset: PowerDataset,
    pub surfaces: Vec<ResponseSurface>,
    pub optima: Vec<OptimalPoint>,
    pub manifold: ManifoldModel,
}

/// Full offline phase against the simulator.
pub fn run_design(cfg: &RunConfig) -> Result<DesignArtifacts> {
    let eval = plant_evaluator(cfg);
    run_design_with(cfg, &eval)
}

/// Offline phase against an arbitrary evaluator (tests substitute analytic
/// plants here).
pub fn run_design_with<F>(cfg: &RunConfig, eval: &F) -> Result<DesignArtifacts>
where
    F: Fn(f64, f64, f64) -> PairEval + Sync,
{
    let grid = SweepGrid::from_config(&cfg.sweep);
    let bounds = grid.bounds();
    log::info!(
        "design sweep: {} winds x {} pairs",
        grid.winds.len(),
        grid.pairs.len()
    );
    let dataset = run_sweep(&grid, eval, cfg.sweep.force_sequential);

    let per_wind = map_ordered(&grid.winds, cfg.sweep.force_sequential, |&v_w| {
        let mut training = dataset.slice(v_w);
        if !training.iter().any(|(_, p)| *p > FEASIBLE_THRESHOLD) {
            log::warn!("wind slice v_w={v_w} has no feasible pairs; skipped");
            return None;
        }
        Some(certify_optimum(v_w, &mut training, &bounds, &cfg.sweep, eval))
    });

    let mut surfaces = Vec::new();
    let mut optima = Vec::new();
    for outcome in per_wind.into_iter().flatten() {
        let outcome = outcome?;
        log::info!(
            "v_w={}: optimum ({}, {}) P={} verified={} after {} iterations",
            outcome.point.v_w,
            outcome.point.v_trac,
            outcome.point.v_retr,
            outcome.point.power,
            outcome.point.verified,
            outcome.iterations
        );
        surfaces.push(outcome.surface);
        optima.push(outcome.point);
    }
    if optima.iter().filter(|p| p.verified).count() < 2 {
        return Err(Error::EmptyFeasibleSet(format!(
            "{} of {} wind slices produced a verified optimum; need 2 for the force laws",
            optima.iter().filter(|p| p.verified).count(),
            grid.winds.len()
        )));
    }
    let manifold = fit_manifold(&optima)?;
    Ok(DesignArtifacts {
        dataset,
        surfaces,
        optima,
        manifold,
    })
}

/// Writes dataset.csv, optima.csv, manifold.csv and one surface_<vw>.csv
/// level-set grid per wind into `out_dir`.
pub fn write_design_outputs(artifacts: &DesignArtifacts, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    artifacts.dataset.write_csv(&out_dir.join("dataset.csv"))?;
    write_optima_csv(&out_dir.join("optima.csv"), &artifacts.optima)?;
    artifacts
        .manifold
        .write_csv(&out_dir.join("manifold.csv"))?;
    for surface in &artifacts.surfaces {
        write_surface_csv(surface, out_dir)?;
    }
    Ok(())
}

/// 41x41 prediction grid over the surface's training box.
fn write_surface_csv(surface: &ResponseSurface, out_dir: &Path) -> Result<()> {
    const GRID: usize = 41;
    let path = out_dir.join(format!("surface_{}.csv", surface.v_w));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["v_trac", "v_retr", "P_hat_W"])?;
    let b = surface.training_bounds();
    for i in 0..GRID {
        let t = b[0][0] + (b[0][1] - b[0][0]) * i as f64 / (GRID - 1) as f64;
        for j in 0..GRID {
            let r = b[1][0] + (b[1][1] - b[1][0]) * j as f64 / (GRID - 1) as f64;
            w.serialize((t, r, surface.eval([t, r])))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave analytic plant: feasible inside the winch-speed box, optimum
    /// drifting with wind.
    fn analytic_eval(v_w: f64, v_trac: f64, v_retr: f64) -> PairEval {
        if v_trac.abs() > 7.0 || v_retr.abs() > 7.0 {
            return PairEval::infeasible();
        }
        let t_star = v_w / 5.0;
        let power = 1000.0 * v_w - 900.0 * (v_trac - t_star).powi(2) - 250.0 * (v_retr + 3.0).powi(2);
        PairEval {
            power,
            feasible: true,
            f_trac: 480.0 * v_trac * v_trac,
            f_retr: 40.0 * v_retr * v_retr,
        }
    }

    #[test]
    fn sweep_is_complete_and_order_independent() {
        let cfg = SweepConfig {
            winds: vec![7.0, 9.0],
            v_trac_values: vec![1.0, 2.0, 3.0],
            v_retr_values: vec![-4.0, -3.0, -2.0],
            ..SweepConfig::default()
        };
        let grid = SweepGrid::from_config(&cfg);
        let seq = run_sweep(&grid, &analytic_eval, true);
        let par = run_sweep(&grid, &analytic_eval, false);
        assert_eq!(seq.rows.len(), 18);
        for (a, b) in seq.rows.iter().zip(par.rows.iter()) {
            assert_eq!(a.power, b.power);
            assert_eq!((a.v_w, a.v_trac, a.v_retr), (b.v_w, b.v_trac, b.v_retr));
        }
    }

    #[test]
    fn out_of_limit_pair_becomes_placeholder_row() {
        let grid = SweepGrid {
            winds: vec![9.0],
            pairs: vec![[1.0, -8.5]],
        };
        let ds = run_sweep(&grid, &analytic_eval, true);
        assert_eq!(ds.rows[0].power, PLACEHOLDER_POWER);
        assert!(!ds.rows[0].feasible);
    }

    #[test]
    fn certify_accepts_feasible_candidate() {
        let cfg = SweepConfig::default();
        let grid = SweepGrid::from_config(&cfg);
        let ds = run_sweep(&grid, &analytic_eval, true);
        let mut training = ds.slice(8.0);
        let out = certify_optimum(8.0, &mut training, &grid.bounds(), &cfg, &analytic_eval).unwrap();
        assert!(out.point.verified);
        // analytic optimum at (1.6, -3.0)
        assert!((out.point.v_trac - 1.6).abs() < 0.05, "{}", out.point.v_trac);
        assert!((out.point.v_retr + 3.0).abs() < 0.1, "{}", out.point.v_retr);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn certify_penalizes_and_moves_off_infeasible_candidates() {
        // feasible plateau with an infeasible hole exactly at the optimum
        let eval = |v_w: f64, v_trac: f64, v_retr: f64| {
            let base = analytic_eval(v_w, v_trac, v_retr);
            if (v_trac - 1.6).abs() < 0.15 && (v_retr + 3.0).abs() < 0.2 {
                PairEval::infeasible()
            } else {
                base
            }
        };
        let cfg = SweepConfig::default();
        let grid = SweepGrid::from_config(&cfg);
        let ds = run_sweep(&grid, &eval, true);
        let mut training = ds.slice(8.0);
        let before = training.len();
        let out = certify_optimum(8.0, &mut training, &grid.bounds(), &cfg, &eval).unwrap();
        assert!(out.point.verified);
        assert!(training.len() > before, "dataset must grow on penalized rounds");
        assert!((out.point.v_trac - 1.6).abs() >= 0.15 || (out.point.v_retr + 3.0).abs() >= 0.2);
    }

    #[test]
    fn recertification_is_idempotent() {
        let cfg = SweepConfig::default();
        let grid = SweepGrid::from_config(&cfg);
        let ds = run_sweep(&grid, &analytic_eval, true);
        let run = || {
            let mut training = ds.slice(9.0);
            certify_optimum(9.0, &mut training, &grid.bounds(), &cfg, &analytic_eval)
                .unwrap()
                .point
        };
        let a = run();
        let b = run();
        assert_eq!(a.v_trac, b.v_trac);
        assert_eq!(a.v_retr, b.v_retr);
        assert_eq!(a.power, b.power);
    }

    #[test]
    fn design_pipeline_on_analytic_plant() {
        let mut cfg = RunConfig::default();
        cfg.sweep.winds = vec![6.5, 8.0, 10.0];
        cfg.sweep.force_sequential = true;
        let artifacts = run_design_with(&cfg, &analytic_eval).unwrap();
        assert_eq!(artifacts.dataset.rows.len(), 3 * 49);
        assert_eq!(artifacts.optima.len(), 3);
        assert!(artifacts.optima.iter().all(|p| p.verified));
        // forces were generated on exact quadratic laws
        assert!((artifacts.manifold.k_trac - 480.0).abs() < 1.0);
        assert!((artifacts.manifold.k_retr - 40.0).abs() < 0.5);
        assert!(artifacts.manifold.r2_trac > 0.999);
        assert!(artifacts.manifold.r2_retr > 0.999);
    }

    #[test]
    fn all_infeasible_grid_is_an_empty_feasible_set() {
        let mut cfg = RunConfig::default();
        cfg.sweep.winds = vec![7.0, 9.0];
        cfg.sweep.force_sequential = true;
        let eval = |_: f64, _: f64, _: f64| PairEval::infeasible();
        match run_design_with(&cfg, &eval) {
            Err(Error::EmptyFeasibleSet(_)) => {}
            other => panic!("expected empty feasible set, got {other:?}"),
        }
    }

    #[test]
    fn optima_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("optima.csv");
        let pts = vec![
            OptimalPoint {
                v_w: 6.5,
                v_trac: 1.3,
                v_retr: -3.2,
                power: 5231.125,
                f_trac: 811.5,
                f_retr: 402.25,
                verified: true,
            },
            OptimalPoint {
                v_w: 7.0,
                v_trac: 1.5,
                v_retr: -3.4,
                power: 6000.5,
                f_trac: 900.0,
                f_retr: 450.0,
                verified: false,
            },
        ];
        write_optima_csv(&path, &pts).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("v_w,v_trac,v_retr,P_W,F_trac_N,F_retr_N,verified"));
        let back = read_optima_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].power, 5231.125);
        assert!(!back[1].verified);
    }
}
