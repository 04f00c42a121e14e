//! Successive convex approximation outer loop.

use std::io::Write;

use super::inner::solve_linearized;
use super::{SolverSettings, Sp2Instance};
use crate::error::Result;
use crate::matrix::LinkMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub surrogate_obj: f64,
    pub true_obj: f64,
    pub max_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSolution {
    pub power: LinkMatrix<f64>,
    /// Rates in workload units per slot.
    pub rates: LinkMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest Σ_i R_ij / C − 1 before any post-hoc scaling.
    pub capacity_excess_unscaled: f64,
    pub capacity_scaled: bool,
    pub trace: Vec<TraceRow>,
}

/// Runs the SCA loop from P^max/I on visible links.
pub fn sca(inst: &Sp2Instance, settings: &SolverSettings) -> PowerSolution {
    let mut current = inst.even_split();
    let mut trace = Vec::new();
    let mut converged = inst.link_count() == 0;
    let mut iterations = 0;
    if !converged {
        let eps = settings.epsilon_error_fraction * inst.p_max;
        let mut current_obj = inst.objective(&current);
        let mut current_feasible = inst.capacity_violation(&current) <= 0.0;
        for k in 1..=settings.max_sca_iters {
            iterations = k;
            let inner = solve_linearized(inst, &current, settings);
            let next_obj = inst.objective(&inner.power);
            let max_step = inner.power.max_abs_diff(&current);
            trace.push(TraceRow { iter: k, surrogate_obj: inner.surrogate_value, true_obj: next_obj, max_step });
            // The surrogate is a tangent minorant, so a drop can only come from
            // an inexact inner solve; keep the better point and stop.
            if current_feasible && next_obj < current_obj {
                converged = max_step < eps || inner.converged;
                break;
            }
            current = inner.power;
            current_obj = next_obj;
            current_feasible = inst.capacity_violation(&current) <= 0.0;
            if max_step < eps {
                converged = true;
                break;
            }
        }
    }
    let capacity_excess_unscaled = if inst.link_count() == 0 { -1.0 } else { inst.capacity_violation(&current) };
    let capacity_scaled = capacity_excess_unscaled > settings.capacity_tolerance;
    if capacity_scaled {
        enforce_capacity(inst, &mut current);
    }
    let rates = inst.rates(&current);
    let objective = inst.objective(&current);
    PowerSolution {
        power: current,
        rates,
        objective,
        iterations,
        converged,
        capacity_excess_unscaled,
        capacity_scaled,
        trace,
    }
}

fn satellite_excess(inst: &Sp2Instance, power: &LinkMatrix<f64>, j: usize) -> f64 {
    inst.rates(power).col_sum(j) / inst.capacity - 1.0
}

fn scale_column(power: &mut LinkMatrix<f64>, base: &LinkMatrix<f64>, j: usize, factor: f64) {
    for i in 0..power.rows() {
        power[(i, j)] = base[(i, j)] * factor;
    }
}

/// Uniform per-satellite down-scaling until the true capacity constraint
/// holds. Lowering one satellite's power raises the others' SINR, so the
/// sweep repeats; a common factor is the fallback.
fn enforce_capacity(inst: &Sp2Instance, power: &mut LinkMatrix<f64>) {
    for _ in 0..20 {
        let mut changed = false;
        for j in 0..inst.satellites() {
            if satellite_excess(inst, power, j) <= 0.0 {
                continue;
            }
            changed = true;
            let base = power.clone();
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                scale_column(power, &base, j, mid);
                if satellite_excess(inst, power, j) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            scale_column(power, &base, j, lo);
        }
        if !changed {
            return;
        }
    }
    if inst.capacity_violation(power) > 0.0 {
        let base = power.clone();
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            *power = base.map(|p| p * mid);
            if inst.capacity_violation(power) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        *power = base.map(|p| p * lo);
    }
}

/// Writes `iter, surrogate_obj, true_obj, max_step` rows.
pub fn write_trace<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "surrogate_obj", "true_obj", "max_step"])?;
    for row in trace {
        w.write_record([
            row.iter.to_string(),
            format!("{:.8e}", row.surrogate_obj),
            format!("{:.8e}", row.true_obj),
            format!("{:.8e}", row.max_step),
        ])?;
    }
    w.flush()?;
    Ok(())
}
