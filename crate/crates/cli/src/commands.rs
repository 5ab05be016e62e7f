//! One function per subcommand, each producing a fixed-schema table.

use dqpt_core::entanglement::{self, Engine};
use dqpt_core::loschmidt;
use dqpt_core::model::{classify_phase, BOUNDARY_TOL};
use dqpt_core::oracle;
use rayon::prelude::*;

use crate::config::{EngineChoice, Settings};
use crate::output::{Cell, Table};
use crate::{CliError, Command, Outcome};

const DEFAULT_RING: usize = 96;
const DEFAULT_EXACT_RING: usize = 12;
const DEFAULT_ORACLE_RING: usize = 8;

fn done(table: Table) -> Result<Outcome, CliError> {
    Ok(Outcome { table, notes: Vec::new(), status: Ok(()) })
}

fn engine(s: &Settings) -> (Engine, usize) {
    match s.engine {
        EngineChoice::Covariance => (Engine::Covariance, s.size.unwrap_or(DEFAULT_RING)),
        EngineChoice::Exact => (Engine::Exact, s.size.unwrap_or(DEFAULT_EXACT_RING)),
    }
}

pub fn execute(cmd: Command, s: &Settings) -> Result<Outcome, CliError> {
    match cmd {
        Command::PhaseDiagram => phase_diagram(s),
        Command::RateFunction => rate_function(s),
        Command::CriticalTimes => critical_times(s),
        Command::DqptScan => dqpt_scan(s),
        Command::EntanglementDynamics => entanglement_dynamics(s),
        Command::GgmScan => ggm_scan(s),
        Command::OracleCheck => oracle_check(s),
    }
}

fn phase_diagram(s: &Settings) -> Result<Outcome, CliError> {
    let labels = s
        .grid
        .points()
        .par_iter()
        .map(|&(x, y)| Ok((x, y, classify_phase(&s.plane.point(&s.initial, x, y), BOUNDARY_TOL)?)))
        .collect::<Result<Vec<_>, dqpt_core::Error>>()?;
    let mut t = Table::new(&["x", "y", "phase"]);
    for (x, y, label) in labels {
        t.push(vec![Cell::Num(x), Cell::Num(y), Cell::Text(label.as_str().into())]);
    }
    done(t)
}

fn rate_function(s: &Settings) -> Result<Outcome, CliError> {
    let times = loschmidt::time_grid(s.t_max, s.dt)?;
    let series = loschmidt::rate_function(&s.quench()?, &s.momenta()?, &times)?;
    let mut t = Table::new(&["t", "F"]);
    for (time, f) in series.times.iter().zip(&series.rate) {
        t.push(vec![Cell::Num(*time), Cell::Num(*f)]);
    }
    done(t)
}

fn critical_times(s: &Settings) -> Result<Outcome, CliError> {
    let ct = loschmidt::find_critical_times(&s.quench()?, &s.momenta()?, s.t_max, s.eps_crit)?;
    let mut t = Table::new(&["n", "t_star", "phi_star", "residual"]);
    for (k, p) in ct.points.iter().enumerate() {
        t.push(vec![Cell::Int(k as i64 + 1), Cell::Num(p.t), Cell::Num(p.phi), Cell::Num(p.residual)]);
    }
    let mut notes = Vec::new();
    if let Some(sp) = ct.spacing() {
        notes.push(format!("spacing min {} max {} mean {}", sp.min, sp.max, sp.mean));
    }
    Ok(Outcome { table: t, notes, status: Ok(()) })
}

fn dqpt_scan(s: &Settings) -> Result<Outcome, CliError> {
    let rows = loschmidt::scan_region(&s.initial, &s.plane, &s.grid, &s.momenta()?, s.t_max, s.eps_crit)?;
    let mut t = Table::new(&["x", "y", "dqpt", "n_tstar", "first_tstar"]);
    let mut notes = Vec::new();
    for r in &rows {
        if let Some(why) = &r.failure {
            notes.push(format!("point ({}, {}) failed: {why}", r.x, r.y));
        }
        t.push(vec![
            Cell::Num(r.x),
            Cell::Num(r.y),
            Cell::Int(r.dqpt as i64),
            Cell::Int(r.n_tstar as i64),
            Cell::Num(r.first_tstar.unwrap_or(f64::NAN)),
        ]);
    }
    let status = if !rows.is_empty() && notes.len() == rows.len() {
        Err(CliError::Numerical("every scan point failed".into()))
    } else {
        Ok(())
    };
    Ok(Outcome { table: t, notes, status })
}

fn entanglement_dynamics(s: &Settings) -> Result<Outcome, CliError> {
    let q = s.quench()?;
    let times = loschmidt::time_grid(s.t_max, s.dt)?;
    let series = match engine(s) {
        (Engine::Covariance, n) => entanglement::entanglement_series_covariance(&q, n, &times)?,
        (Engine::Exact, n) => entanglement::entanglement_series_ed(&q, n, &times)?,
    };
    let mut t = Table::new(&["t", "logneg_eo", "ggm"]);
    for k in 0..series.times.len() {
        t.push(vec![Cell::Num(series.times[k]), Cell::Num(series.logneg_eo[k]), Cell::Num(series.ggm[k])]);
    }
    done(t)
}

fn ggm_scan(s: &Settings) -> Result<Outcome, CliError> {
    let (eng, n) = engine(s);
    let rows = entanglement::fluctuation_scan(&s.initial, &s.plane, &s.grid, n, s.tau, s.dt, eng)?;
    let mut t = Table::new(&["x", "y", "sigma_ggm"]);
    for r in rows {
        t.push(vec![Cell::Num(r.x), Cell::Num(r.y), Cell::Num(r.sigma)]);
    }
    done(t)
}

fn oracle_check(s: &Settings) -> Result<Outcome, CliError> {
    let checks = oracle::run_suite(s.size.unwrap_or(DEFAULT_ORACLE_RING))?;
    let mut t = Table::new(&["check", "deviation", "tolerance", "passed"]);
    let mut failed = Vec::new();
    for c in &checks {
        if !c.passed() {
            failed.push(c.name.clone());
        }
        // Names contain commas only in parenthetical detail; keep CSV flat.
        t.push(vec![
            Cell::Text(c.name.replace(',', ";")),
            Cell::Num(c.deviation),
            Cell::Num(c.tolerance),
            Cell::Int(c.passed() as i64),
        ]);
    }
    let status = if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("oracle checks failed: {}", failed.join("; "))))
    };
    Ok(Outcome { table: t, notes: Vec::new(), status })
}
