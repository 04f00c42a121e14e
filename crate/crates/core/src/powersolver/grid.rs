//! Exhaustive grid search over small instances, used to validate SCA.

use std::f64::consts::LN_2;

use super::Sp2Instance;
use crate::error::{Error, Result};
use crate::matrix::LinkMatrix;

pub const GRID_LINK_LIMIT: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub objective: f64,
    pub power: LinkMatrix<f64>,
    pub feasible_points: usize,
}

/// Best true objective over the grid {k P^max/(n−1)} on every visible link,
/// keeping only points that satisfy the power budgets and the capacity limit.
pub fn grid_oracle(inst: &Sp2Instance, points_per_dim: usize) -> Result<GridResult> {
    let stations = inst.stations();
    if stations * inst.satellites() > GRID_LINK_LIMIT {
        return Err(Error::InstanceTooLarge { links: stations * inst.satellites(), limit: GRID_LINK_LIMIT });
    }
    if points_per_dim < 2 {
        return Err(Error::Domain("grid needs at least two points per dimension".into()));
    }
    let links: Vec<(usize, usize)> = (0..stations)
        .flat_map(|i| (0..inst.satellites()).map(move |j| (i, j)))
        .filter(|&(i, j)| inst.visible(i, j))
        .collect();
    let levels: Vec<f64> = (0..points_per_dim).map(|k| inst.p_max * k as f64 / (points_per_dim - 1) as f64).collect();
    let mut power = LinkMatrix::zeros(stations, inst.satellites());
    let mut best = GridResult { objective: inst.objective(&power), power: power.clone(), feasible_points: 0 };
    let mut idx = vec![0usize; links.len()];
    let mut received = vec![0.0; stations];
    let mut load = vec![0.0; inst.satellites()];
    loop {
        for (&(i, j), &k) in links.iter().zip(&idx) {
            power[(i, j)] = levels[k];
        }
        let budget_ok = (0..inst.satellites()).all(|j| power.col_sum(j) <= inst.p_max * (1.0 + 1e-12));
        if budget_ok {
            // Rates inline; this loop runs up to n^6 times.
            received.iter_mut().for_each(|r| *r = inst.noise);
            for &(i, j) in &links {
                received[i] += power[(i, j)] * inst.gain[(i, j)];
            }
            load.iter_mut().for_each(|l| *l = 0.0);
            let mut obj = 0.0;
            for &(i, j) in &links {
                let signal = power[(i, j)] * inst.gain[(i, j)];
                let rate = inst.rate_scale * (1.0 + signal / (received[i] - signal)).log2();
                load[j] += rate;
                obj += inst.x_station[i] * rate - inst.x_satellite[j] * power[(i, j)];
            }
            if load.iter().all(|&l| l <= inst.capacity) {
                best.feasible_points += 1;
                if obj > best.objective {
                    best.objective = obj;
                    best.power = power.clone();
                }
            }
        }
        // Odometer increment.
        let mut d = 0;
        loop {
            if d == idx.len() {
                return Ok(best);
            }
            idx[d] += 1;
            if idx[d] < points_per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Stationary point of X_i w log2(1 + hP/n) − X_j P on one link, clipped to
/// the power budget and to the capacity limit.
pub fn closed_form_single_link(inst: &Sp2Instance) -> f64 {
    let h = inst.gain[(0, 0)];
    if h <= 0.0 {
        return 0.0;
    }
    let (xi, xj) = (inst.x_station[0], inst.x_satellite[0]);
    let unconstrained = if xi <= 0.0 {
        0.0
    } else if xj <= 0.0 {
        inst.p_max
    } else {
        (xi * inst.rate_scale / (xj * LN_2) - inst.noise / h).max(0.0)
    };
    let capacity_power = inst.noise / h * ((inst.capacity / inst.rate_scale).exp2() - 1.0);
    unconstrained.min(inst.p_max).min(capacity_power)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::random_instance;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn refuses_large_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&mut rng, 3, 3, 1.0);
        assert!(matches!(grid_oracle(&inst, 5), Err(Error::InstanceTooLarge { .. })));
    }

    #[test]
    fn single_link_within_one_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let inst = random_instance(&mut rng, 1, 1, 1.0);
            let n = 41;
            let g = grid_oracle(&inst, n).unwrap();
            let p = closed_form_single_link(&inst);
            assert!((g.power[(0, 0)] - p).abs() <= inst.p_max / (n - 1) as f64 + 1e-9);
        }
    }

    #[test]
    fn returned_allocation_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let inst = random_instance(&mut rng, 2, 3, 0.8);
            let g = grid_oracle(&inst, 6).unwrap();
            assert!(inst.respects_power_limits(&g.power));
            assert!(inst.capacity_violation(&g.power) <= 0.0);
        }
    }

    #[test]
    fn inline_objective_matches_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let inst = random_instance(&mut rng, 2, 3, 0.8);
            let g = grid_oracle(&inst, 5).unwrap();
            let direct = inst.objective(&g.power);
            assert!((g.objective - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn refinement_never_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let inst = random_instance(&mut rng, 2, 2, 1.0);
            let coarse = grid_oracle(&inst, 6).unwrap();
            let fine = grid_oracle(&inst, 2 * (6 - 1) + 1).unwrap();
            assert!(fine.objective >= coarse.objective);
        }
    }
}
