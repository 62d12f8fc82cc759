//! Capacity-versus-total-power sweeps under a fixed per-antenna power.

use std::io::Write;

use mimocap_core::{
    log_det_capacity, solve, ChannelGram, ConstraintRegime, HermitianMatrix, PowerBudget,
};

use crate::error::{CliError, CliResult};

/// One grid point of a sweep: capacities under the three regimes plus the
/// isotropic feasible point, and the joint solution's activity pattern.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub p_total: f64,
    pub c_tpc: f64,
    pub c_pac: f64,
    pub c_joint: f64,
    pub c_iso: f64,
    pub tpc_active: bool,
    pub pac_all_inactive: bool,
}

pub const CSV_HEADER: &str = "p_total,c_tpc,c_pac,c_joint,c_iso,tpc_active,pac_all_inactive";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.p_total,
            self.c_tpc,
            self.c_pac,
            self.c_joint,
            self.c_iso,
            self.tpc_active,
            self.pac_all_inactive
        )
    }
}

/// Evaluates one grid point. The PAC-only capacity does not depend on
/// `p_total`, so the caller computes it once and passes it in.
fn sweep_row(gram: &ChannelGram, p_antenna: f64, p_total: f64, c_pac: f64) -> CliResult<SweepRow> {
    let budget = PowerBudget::new(p_total, p_antenna)?;
    let joint = solve(gram, &budget, ConstraintRegime::Joint)?;
    let tpc = solve(gram, &budget, ConstraintRegime::TpcOnly)?;
    let iso = HermitianMatrix::scaled_identity(gram.dim(), budget.p_star(gram.dim()));
    let c_iso = log_det_capacity(gram, &iso)?;
    Ok(SweepRow {
        p_total,
        c_tpc: tpc.capacity,
        c_pac,
        c_joint: joint.capacity,
        c_iso,
        tpc_active: joint.tpc_active,
        pac_all_inactive: joint.pac_active.iter().all(|&a| !a),
    })
}

/// Runs the sweep over an inclusive linear grid of `steps` total-power
/// values. Rows are ordered by `p_total`.
pub fn sweep(
    gram: &ChannelGram,
    p_antenna: f64,
    pt_min: f64,
    pt_max: f64,
    steps: usize,
) -> CliResult<Vec<SweepRow>> {
    validate_grid(pt_min, pt_max, steps)?;
    let c_pac = pac_capacity(gram, p_antenna)?;
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let p_total = pt_min + (pt_max - pt_min) * i as f64 / (steps - 1) as f64;
        rows.push(sweep_row(gram, p_antenna, p_total, c_pac)?);
    }
    Ok(rows)
}

/// Streaming variant used by the CLI: writes each row as soon as it is
/// computed so that a failing grid point still leaves the finished rows
/// behind, and reports how many rows were written before the error.
pub fn sweep_to_writer(
    gram: &ChannelGram,
    p_antenna: f64,
    pt_min: f64,
    pt_max: f64,
    steps: usize,
    out: &mut dyn Write,
) -> Result<(), (usize, CliError)> {
    validate_grid(pt_min, pt_max, steps).map_err(|e| (0, e))?;
    let c_pac = pac_capacity(gram, p_antenna).map_err(|e| (0, e))?;
    writeln!(out, "{CSV_HEADER}").map_err(|e| (0, CliError::io("cannot write CSV", e)))?;
    for i in 0..steps {
        let p_total = pt_min + (pt_max - pt_min) * i as f64 / (steps - 1) as f64;
        let row = sweep_row(gram, p_antenna, p_total, c_pac).map_err(|e| (i, e))?;
        writeln!(out, "{}", row.to_csv()).map_err(|e| (i, CliError::io("cannot write CSV", e)))?;
    }
    Ok(())
}

fn validate_grid(pt_min: f64, pt_max: f64, steps: usize) -> CliResult<()> {
    if !(pt_min > 0.0 && pt_min.is_finite()) {
        return Err(CliError::Validation(format!(
            "--ptmin must be positive, got {pt_min}"
        )));
    }
    if !(pt_max > pt_min && pt_max.is_finite()) {
        return Err(CliError::Validation(format!(
            "--ptmax must exceed --ptmin, got {pt_max} <= {pt_min}"
        )));
    }
    if steps < 2 {
        return Err(CliError::Validation(format!(
            "--steps must be at least 2, got {steps}"
        )));
    }
    Ok(())
}

fn pac_capacity(gram: &ChannelGram, p_antenna: f64) -> CliResult<f64> {
    // Any positive p_total works here; PAC-only solves ignore it.
    let budget = PowerBudget::new(1.0, p_antenna)?;
    Ok(solve(gram, &budget, ConstraintRegime::PacOnly)?.capacity)
}
