//! Strategy benchmark: the adaptive reeling law against fixed-speed
//! alternatives and the certified design optimum, per wind speed.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::control::ManifoldModel;
use crate::cycle::{evaluate_pair, run_cycles, CycleMetrics, ReelCommand, RunRequest};
use crate::error::{Error, Result};
use crate::pipeline::{map_ordered, OptimalPoint, PLACEHOLDER_POWER};

/// Strategy names in report order. The adaptive law runs first so ties
/// resolve in its favor.
pub const STRATEGY_ORDER: [&str; 4] = [
    "optimal_Pcycle",
    "optimal_Ptrac",
    "fast_recovery",
    "oracle",
];

/// One benchmark row: a strategy evaluated at one wind speed.
#[derive(Debug, Clone)]
pub struct StrategyRow {
    pub v_w: f64,
    pub strategy: &'static str,
    /// Reel-out speed the strategy settled on (cycle average for closed-loop
    /// runs, commanded value otherwise).
    pub v_trac: f64,
    pub v_retr: f64,
    pub p_cycle: f64,
    /// Sub-run completed with a periodic, constraint-clean cycle.
    pub ok: bool,
    /// Highest cycle power in its wind group; exactly one per group.
    pub best: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub rows: Vec<StrategyRow>,
}

impl ComparisonReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["v_w", "strategy", "v_trac", "v_retr", "P_cycle_W", "ok", "best"])?;
        for r in &self.rows {
            w.write_record(&[
                r.v_w.to_string(),
                r.strategy.to_string(),
                r.v_trac.to_string(),
                r.v_retr.to_string(),
                r.p_cycle.to_string(),
                u8::from(r.ok).to_string(),
                u8::from(r.best).to_string(),
            ])?;
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }

    /// Fixed-width table, one row per strategy grouped by wind speed.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>6}  {:<15} {:>7} {:>7} {:>11}  {}\n",
            "v_w", "strategy", "v_trac", "v_retr", "P_cycle_W", "best"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>6.2}  {:<15} {:>7.2} {:>7.2} {:>11.1}  {}\n",
                r.v_w,
                r.strategy,
                r.v_trac,
                r.v_retr,
                r.p_cycle,
                if r.best { "*" } else { "" }
            ));
        }
        out
    }

    pub fn write_table(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        f.write_all(self.table().as_bytes())?;
        Ok(())
    }
}

/// Marks the highest-power row in each consecutive wind group. Ties keep the
/// earliest row, so the adaptive law wins exact draws.
fn mark_best(rows: &mut [StrategyRow]) {
    let mut start = 0;
    while start < rows.len() {
        let v_w = rows[start].v_w;
        let mut end = start;
        while end < rows.len() && rows[end].v_w == v_w {
            end += 1;
        }
        let group = &mut rows[start..end];
        let mut best = 0;
        for (i, r) in group.iter().enumerate() {
            if r.p_cycle > group[best].p_cycle {
                best = i;
            }
        }
        for (i, r) in group.iter_mut().enumerate() {
            r.best = i == best;
        }
        start = end;
    }
}

fn failed_row(v_w: f64, strategy: &'static str, v_trac: f64, v_retr: f64) -> StrategyRow {
    StrategyRow {
        v_w,
        strategy,
        v_trac,
        v_retr,
        p_cycle: PLACEHOLDER_POWER,
        ok: false,
        best: false,
    }
}

fn fixed_pair_row(
    cfg: &RunConfig,
    v_w: f64,
    strategy: &'static str,
    v_trac: f64,
    v_retr: f64,
) -> StrategyRow {
    match evaluate_pair(cfg, v_w, v_trac, v_retr) {
        Ok(out) if out.feasible => {
            let m = out.final_metrics().expect("feasible run has settled cycles");
            StrategyRow {
                v_w,
                strategy,
                v_trac,
                v_retr,
                p_cycle: m.p_cycle,
                ok: true,
                best: false,
            }
        }
        Ok(_) => failed_row(v_w, strategy, v_trac, v_retr),
        Err(e) => {
            log::warn!("{strategy} run failed at v_w={v_w}: {e}");
            failed_row(v_w, strategy, v_trac, v_retr)
        }
    }
}

/// Runs the closed-loop law for the configured cycle count and returns the
/// last settled cycle, or None when the run aborts or never settles.
fn adaptive_run(cfg: &RunConfig, manifold: &ManifoldModel, v_w: f64) -> Option<CycleMetrics> {
    let winds = [v_w];
    let req = RunRequest {
        command: ReelCommand::Online { manifold },
        winds: &winds,
        max_cycles: cfg.online.cycles,
        stop_when_periodic: false,
    };
    match run_cycles(cfg, &req) {
        Ok(out) => {
            if out.violation.is_some() {
                return None;
            }
            out.final_metrics().cloned()
        }
        Err(e) => {
            log::warn!("adaptive run failed at v_w={v_w}: {e}");
            None
        }
    }
}

fn rows_for_wind(
    cfg: &RunConfig,
    manifold: &ManifoldModel,
    optima: &[OptimalPoint],
    v_w: f64,
) -> Vec<StrategyRow> {
    let trac_bounds = cfg.reel.trac_bounds;
    let retr_bounds = cfg.reel.retr_bounds;

    // (a) adaptive law; its realized speeds anchor the two fixed comparators.
    let adaptive = adaptive_run(cfg, manifold, v_w);
    let (anchor_vt, anchor_vr) = match &adaptive {
        Some(m) => (
            m.v_trac_avg.clamp(trac_bounds[0], trac_bounds[1]),
            m.v_retr_avg.clamp(retr_bounds[0], retr_bounds[1]),
        ),
        None => (cfg.reel.initial_trac_ref, cfg.reel.initial_retr_ref),
    };
    let mut rows = vec![match adaptive {
        Some(m) => StrategyRow {
            v_w,
            strategy: "optimal_Pcycle",
            v_trac: m.v_trac_avg,
            v_retr: m.v_retr_avg,
            p_cycle: m.p_cycle,
            ok: true,
            best: false,
        },
        None => failed_row(v_w, "optimal_Pcycle", anchor_vt, anchor_vr),
    }];

    // (b) best traction power over the reel-out grid, reel-in held at (a)'s.
    let mut trac_best: Option<(f64, StrategyRow)> = None;
    for &vt in &cfg.sweep.v_trac_values {
        match evaluate_pair(cfg, v_w, vt, anchor_vr) {
            Ok(out) if out.feasible => {
                let m = out.final_metrics().expect("feasible run has settled cycles");
                if trac_best.as_ref().is_none_or(|(p, _)| m.p_trac > *p) {
                    trac_best = Some((
                        m.p_trac,
                        StrategyRow {
                            v_w,
                            strategy: "optimal_Ptrac",
                            v_trac: vt,
                            v_retr: anchor_vr,
                            p_cycle: m.p_cycle,
                            ok: true,
                            best: false,
                        },
                    ));
                }
            }
            Ok(_) => {}
            Err(e) => log::warn!("optimal_Ptrac probe failed at v_w={v_w}, v_trac={vt}: {e}"),
        }
    }
    rows.push(match trac_best {
        Some((_, row)) => row,
        None => failed_row(v_w, "optimal_Ptrac", anchor_vt, anchor_vr),
    });

    // (c) same reel-out as (a), reel-in at the configured recovery cap.
    rows.push(fixed_pair_row(
        cfg,
        v_w,
        "fast_recovery",
        anchor_vt,
        cfg.compare.fast_recovery_vretr,
    ));

    // (d) certified optimum, copied verbatim so it matches the design output.
    rows.push(match optima.iter().find(|p| p.v_w == v_w) {
        Some(p) => StrategyRow {
            v_w,
            strategy: "oracle",
            v_trac: p.v_trac,
            v_retr: p.v_retr,
            p_cycle: p.power,
            ok: p.verified,
            best: false,
        },
        None => {
            log::warn!("no certified optimum for v_w={v_w}; oracle row marked failed");
            failed_row(v_w, "oracle", 0.0, 0.0)
        }
    });
    rows
}

/// Benchmarks the four strategies at every sweep wind speed.
pub fn run_compare(
    cfg: &RunConfig,
    manifold: &ManifoldModel,
    optima: &[OptimalPoint],
) -> Result<ComparisonReport> {
    manifold.validate()?;
    let groups = map_ordered(&cfg.sweep.winds, cfg.sweep.force_sequential, |&v_w| {
        rows_for_wind(cfg, manifold, optima, v_w)
    });
    let mut rows: Vec<StrategyRow> = groups.into_iter().flatten().collect();
    mark_best(&mut rows);
    Ok(ComparisonReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v_w: f64, strategy: &'static str, p: f64) -> StrategyRow {
        StrategyRow {
            v_w,
            strategy,
            v_trac: 1.0,
            v_retr: -3.0,
            p_cycle: p,
            ok: true,
            best: false,
        }
    }

    #[test]
    fn best_is_unique_per_wind_group() {
        let mut rows = vec![
            row(7.0, "optimal_Pcycle", 5000.0),
            row(7.0, "optimal_Ptrac", 4000.0),
            row(7.0, "fast_recovery", 3000.0),
            row(7.0, "oracle", 5100.0),
            row(8.0, "optimal_Pcycle", 9000.0),
            row(8.0, "optimal_Ptrac", 8000.0),
        ];
        mark_best(&mut rows);
        let winners: Vec<&str> = rows.iter().filter(|r| r.best).map(|r| r.strategy).collect();
        assert_eq!(winners, ["oracle", "optimal_Pcycle"]);
        assert_eq!(rows.iter().filter(|r| r.v_w == 7.0 && r.best).count(), 1);
    }

    #[test]
    fn best_tie_keeps_first_row() {
        let mut rows = vec![
            row(7.0, "optimal_Pcycle", 5000.0),
            row(7.0, "oracle", 5000.0),
        ];
        mark_best(&mut rows);
        assert!(rows[0].best);
        assert!(!rows[1].best);
    }

    #[test]
    fn report_csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("comparison.csv");
        let report = ComparisonReport {
            rows: vec![row(7.0, "optimal_Pcycle", 5000.0)],
        };
        report.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "v_w,strategy,v_trac,v_retr,P_cycle_W,ok,best"
        );
        assert_eq!(lines.next().unwrap(), "7,optimal_Pcycle,1,-3,5000,1,0");
    }

    #[test]
    fn table_marks_best_with_star() {
        let mut rows = vec![row(7.0, "optimal_Pcycle", 5000.0), row(7.0, "oracle", 100.0)];
        mark_best(&mut rows);
        let table = ComparisonReport { rows }.table();
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[0].contains("strategy"));
        assert!(lines[1].ends_with('*'));
        assert!(!lines[2].ends_with('*'));
    }
}
