//! Convex subproblem: projected gradient ascent on the concave surrogate,
//! with the capacity constraint carried by an augmented Lagrangian.

use super::dc::{linearize_g, surrogate_gradient, surrogate_objective, AffineSurrogate, CapacitySurrogate};
use super::{SolverSettings, Sp2Instance};
use crate::matrix::LinkMatrix;

/// Euclidean projection of `y` onto {0 ≤ x ≤ cap, Σ x ≤ budget}, in place.
///
/// The shift τ in x = clamp(y − τ, 0, cap) is found by bisection and the
/// bracket end with Σ x ≤ budget is returned, so the budget holds exactly.
pub fn project_capped_simplex(y: &mut [f64], caps: &[f64], budget: f64) {
    let clipped = |tau: f64, y: &[f64]| -> f64 { y.iter().zip(caps).map(|(v, c)| (v - tau).clamp(0.0, *c)).sum() };
    if clipped(0.0, y) <= budget {
        for (v, c) in y.iter_mut().zip(caps) {
            *v = v.clamp(0.0, *c);
        }
        return;
    }
    let mut lo = 0.0;
    let mut hi = y.iter().copied().fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if clipped(mid, y) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for (v, c) in y.iter_mut().zip(caps) {
        *v = (*v - hi).clamp(0.0, *c);
    }
}

/// Projects each satellite's column onto its power budget; invisible links
/// are pinned to zero.
pub(crate) fn project(inst: &Sp2Instance, power: &mut LinkMatrix<f64>) {
    let (n_i, n_j) = (inst.stations(), inst.satellites());
    let mut col = Vec::with_capacity(n_i);
    let mut caps = Vec::with_capacity(n_i);
    for j in 0..n_j {
        col.clear();
        caps.clear();
        for i in 0..n_i {
            col.push(power[(i, j)]);
            caps.push(if inst.visible(i, j) { inst.p_max } else { 0.0 });
        }
        project_capped_simplex(&mut col, &caps, inst.p_max);
        for i in 0..n_i {
            power[(i, j)] = col[i];
        }
        // Guard the column sum against rounding in a different summation order.
        let total = power.col_sum(j);
        if total > inst.p_max {
            let f = inst.p_max / total * (1.0 - 4.0 * f64::EPSILON);
            for i in 0..n_i {
                power[(i, j)] *= f;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerResult {
    pub power: LinkMatrix<f64>,
    /// Surrogate objective at `power`.
    pub surrogate_value: f64,
    /// Largest normalized violation of the capacity surrogate.
    pub capacity_violation: f64,
    pub converged: bool,
}

struct Penalized<'a> {
    inst: &'a Sp2Instance,
    g_hat: &'a AffineSurrogate,
    cap: &'a CapacitySurrogate,
    multipliers: &'a [f64],
    rho: f64,
}

impl Penalized<'_> {
    fn value(&self, p: &LinkMatrix<f64>) -> f64 {
        let mut v = surrogate_objective(self.inst, self.g_hat, p);
        for (j, &lambda) in self.multipliers.iter().enumerate() {
            let shifted = (self.cap.value(self.inst, p, j) + lambda / self.rho).max(0.0);
            v -= 0.5 * self.rho * (shifted * shifted - (lambda / self.rho).powi(2));
        }
        v
    }

    fn gradient(&self, p: &LinkMatrix<f64>) -> LinkMatrix<f64> {
        let mut g = surrogate_gradient(self.inst, self.g_hat, p);
        for (j, &lambda) in self.multipliers.iter().enumerate() {
            let coef = (lambda + self.rho * self.cap.value(self.inst, p, j)).max(0.0);
            if coef > 0.0 {
                self.cap.add_gradient(self.inst, p, j, -coef, &mut g);
            }
        }
        g
    }
}

/// Projected gradient ascent with backtracking and Barzilai-Borwein steps.
/// Returns the final point and whether the step tolerance was reached.
fn ascend(obj: &Penalized<'_>, start: LinkMatrix<f64>, settings: &SolverSettings) -> (LinkMatrix<f64>, bool) {
    let inst = obj.inst;
    let tol = settings.inner_tolerance * inst.p_max;
    let mut p = start;
    project(inst, &mut p);
    let mut value = obj.value(&p);
    let mut grad = obj.gradient(&p);
    let gmax = grad.as_slice().iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gmax == 0.0 {
        return (p, true);
    }
    let mut step = inst.p_max / gmax;
    for _ in 0..settings.inner_max_iters {
        let mut accepted = None;
        for _ in 0..80 {
            let mut cand = LinkMatrix::from_fn(p.rows(), p.cols(), |i, j| p[(i, j)] + step * grad[(i, j)]);
            project(inst, &mut cand);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for ((c, q), g) in cand.as_slice().iter().zip(p.as_slice()).zip(grad.as_slice()) {
                let d = c - q;
                lin += g * d;
                sq += d * d;
            }
            if sq == 0.0 {
                return (p, true);
            }
            let cand_value = obj.value(&cand);
            let slack = 1e-12 * value.abs().max(1e-300);
            if cand_value + slack >= value + lin - sq / (2.0 * step) {
                accepted = Some((cand, cand_value));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            return (p, false);
        };
        let next_grad = obj.gradient(&next);
        let mut ss = 0.0;
        let mut sy = 0.0;
        let mut max_step = 0.0f64;
        for k in 0..next.as_slice().len() {
            let s = next.as_slice()[k] - p.as_slice()[k];
            let y = next_grad.as_slice()[k] - grad.as_slice()[k];
            ss += s * s;
            sy += s * y;
            max_step = max_step.max(s.abs());
        }
        p = next;
        value = next_value;
        grad = next_grad;
        if max_step < tol {
            return (p, true);
        }
        // Ascent on a concave function: s·y ≤ 0 along the path.
        step = if sy < 0.0 { (ss / -sy).min(1e3 * step.max(1e-300)) } else { step * 2.0 };
    }
    (p, false)
}

/// Maximizes the surrogate built at `anchor` subject to the conservative
/// capacity constraint and the per-satellite power budgets.
pub fn solve_linearized(inst: &Sp2Instance, anchor: &LinkMatrix<f64>, settings: &SolverSettings) -> InnerResult {
    let g_hat = linearize_g(inst, anchor);
    let cap = CapacitySurrogate::new(inst, anchor);
    let n_j = inst.satellites();
    let mut multipliers = vec![0.0; n_j];
    let weight_sum: f64 = inst.x_station.iter().sum();
    let mut rho = 10.0 * (weight_sum * inst.capacity).max(1.0);
    let mut p = anchor.clone();
    let mut converged = true;
    let mut prev_violation = f64::INFINITY;
    let mut violation = 0.0;
    for _ in 0..40 {
        let obj = Penalized { inst, g_hat: &g_hat, cap: &cap, multipliers: &multipliers, rho };
        let (next, ok) = ascend(&obj, p, settings);
        p = next;
        converged = ok;
        violation = (0..n_j).map(|j| cap.value(inst, &p, j)).fold(0.0, f64::max);
        if violation <= 1e-9 {
            break;
        }
        for (j, lambda) in multipliers.iter_mut().enumerate() {
            *lambda = (*lambda + rho * cap.value(inst, &p, j)).max(0.0);
        }
        if violation > 0.25 * prev_violation {
            rho *= 10.0;
        }
        prev_violation = violation;
    }
    let surrogate_value = surrogate_objective(inst, &g_hat, &p);
    InnerResult { power: p, surrogate_value, capacity_violation: violation, converged }
}
