//! Virtual queues, the energy-aware utility and the closed-form offloading
//! decisions of the drift-plus-penalty controller.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::LinkMatrix;
use crate::queues::{BacklogSet, Indicators, Thresholds};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub urllc: f64,
    pub ter_mmtc: f64,
    pub sat_mmtc: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("urllc", self.urllc), ("ter_mmtc", self.ter_mmtc), ("sat_mmtc", self.sat_mmtc)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(invalid(format!("tolerance {name}={e} outside (0, 1)")));
            }
        }
        if !(self.urllc < self.ter_mmtc && self.ter_mmtc < self.sat_mmtc) {
            return Err(invalid(format!(
                "tolerances must satisfy urllc < ter_mmtc < sat_mmtc, got {} / {} / {}",
                self.urllc, self.ter_mmtc, self.sat_mmtc
            )));
        }
        Ok(())
    }
}

/// Controller parameters. Workloads and rates share one unit per slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub v: f64,
    pub beta: f64,
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
    pub tolerances: Tolerances,
    pub thresholds: Vec<Thresholds>,
    pub b_max_ter: Vec<f64>,
    pub b_max_sat: Vec<f64>,
    /// Satellite capacity C^Sat per slot.
    pub c_sat: f64,
    pub p_max: f64,
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(invalid(format!("V must be non-negative, got {}", self.v)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        self.tolerances.validate()?;
        let stations = self.sigma.len();
        if self.thresholds.len() != stations || self.b_max_ter.len() != stations || self.b_max_sat.len() != stations {
            return Err(invalid("per-station controller vectors have inconsistent lengths"));
        }
        let total: f64 = self.sigma.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("sigma weights sum to {total}, expected 1")));
        }
        if !(self.c_sat > 0.0 && self.p_max > 0.0) {
            return Err(invalid("satellite capacity and max power must be positive"));
        }
        Ok(())
    }

    pub fn stations(&self) -> usize {
        self.sigma.len()
    }

    pub fn satellites(&self) -> usize {
        self.gamma.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualQueues {
    pub ter_mmtc: f64,
    pub sat_mmtc: f64,
    pub urllc: f64,
}

/// Z' = [Z + 1{·} − ε]⁺ for each virtual queue.
pub fn step_virtual_queues(z: &VirtualQueues, ind: &Indicators, eps: &Tolerances) -> VirtualQueues {
    let step = |z: f64, fired: bool, e: f64| (z + f64::from(u8::from(fired)) - e).max(0.0);
    VirtualQueues {
        ter_mmtc: step(z.ter_mmtc, ind.ter_mmtc, eps.ter_mmtc),
        sat_mmtc: step(z.sat_mmtc, ind.sat_mmtc, eps.sat_mmtc),
        urllc: step(z.urllc, ind.urllc, eps.urllc),
    }
}

/// η_U = β/(IM) Σ σ_i R_ij / C^Sat − (1−β)/(IM) Σ_j γ_j P_j / P^max.
pub fn utility(rates: &LinkMatrix<f64>, power: &LinkMatrix<f64>, params: &ControllerParams) -> f64 {
    let (i_n, m_n) = (rates.rows(), rates.cols());
    let scale = (i_n * m_n) as f64;
    let mut rate_term = 0.0;
    for i in 0..i_n {
        rate_term += params.sigma[i] * rates.row_sum(i);
    }
    let power_term: f64 = (0..m_n).map(|j| params.gamma[j] * power.col_sum(j)).sum();
    params.beta / scale * rate_term / params.c_sat - (1.0 - params.beta) / scale * power_term / params.p_max
}

/// Per-station quantities entering the offloading rules.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StationView {
    pub backlog: BacklogSet,
    pub virtual_queues: VirtualQueues,
    pub q_sum: f64,
    pub a_urllc: f64,
    pub a_embb: f64,
    pub c_ter: f64,
}

impl StationView {
    /// Coefficient of b_ter in the per-slot objective:
    /// 2Q_m^Ter + 2Q_u^Ter + Z_m^Ter + Z_u^Ter + 2A_u − 2C^Ter − Q^sum.
    pub fn ter_coefficient(&self) -> f64 {
        let q = &self.backlog;
        let z = &self.virtual_queues;
        2.0 * q.ter_mmtc + 2.0 * q.ter_urllc + z.ter_mmtc + z.urllc + 2.0 * self.a_urllc - 2.0 * self.c_ter - self.q_sum
    }

    /// Coefficient of b_sat: 2Q_m^Sat + Q_e^Sat + Z_m^Sat + A_e − Q^sum.
    pub fn sat_coefficient(&self) -> f64 {
        self.sat_weight() - self.q_sum
    }

    /// Queue part of the rate weight: 2Q_m^Sat + Q_e^Sat + Z_m^Sat + A_e.
    pub fn sat_weight(&self) -> f64 {
        let q = &self.backlog;
        2.0 * q.sat_mmtc + q.sat_embb + self.virtual_queues.sat_mmtc + self.a_embb
    }
}

/// b_ter = b_max when its objective coefficient is strictly negative.
pub fn sp1_terrestrial(view: &StationView, b_max: f64) -> f64 {
    if view.ter_coefficient() < 0.0 {
        b_max
    } else {
        0.0
    }
}

pub fn sp1_satellite(view: &StationView, b_max: f64) -> f64 {
    if view.sat_coefficient() < 0.0 {
        b_max
    } else {
        0.0
    }
}

/// Per-slot drift-plus-penalty bound terms that depend on the decisions.
pub fn slot_objective(
    views: &[StationView],
    b_ter: &[f64],
    b_sat: &[f64],
    power: &LinkMatrix<f64>,
    rates: &LinkMatrix<f64>,
    params: &ControllerParams,
) -> f64 {
    let scale = (power.rows() * power.cols()) as f64;
    let mut obj = 0.0;
    for j in 0..power.cols() {
        for i in 0..power.rows() {
            obj += params.v * (1.0 - params.beta) / scale * params.gamma[j] * power[(i, j)] / params.p_max;
            obj -= params.v * params.beta / scale * params.sigma[i] * rates[(i, j)] / params.c_sat;
            obj -= rates[(i, j)] * views[i].sat_weight();
        }
    }
    for (i, view) in views.iter().enumerate() {
        obj += b_ter[i] * view.ter_coefficient() + b_sat[i] * view.sat_coefficient();
    }
    obj
}

/// Queue vector Θ of one station.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StationQueues {
    pub q_sum: f64,
    pub backlog: BacklogSet,
    pub virtual_queues: VirtualQueues,
}

/// L(Θ) = ½ Σ Q² + ½ Σ Z².
pub fn lyapunov(state: &[StationQueues]) -> f64 {
    state
        .iter()
        .map(|s| {
            let q = &s.backlog;
            let z = &s.virtual_queues;
            0.5 * (s.q_sum.powi(2) + q.ter_mmtc.powi(2) + q.sat_mmtc.powi(2) + q.ter_urllc.powi(2) + q.sat_embb.powi(2))
                + 0.5 * (z.ter_mmtc.powi(2) + z.sat_mmtc.powi(2) + z.urllc.powi(2))
        })
        .sum()
}

/// Realized L(Θ(t+1)) − L(Θ(t)) − V η_U(t).
pub fn drift_bound_diag(state: &[StationQueues], next: &[StationQueues], v: f64, eta: f64) -> f64 {
    lyapunov(next) - lyapunov(state) - v * eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(i_n: usize, m_n: usize, beta: f64) -> ControllerParams {
        ControllerParams {
            v: 1.0,
            beta,
            sigma: vec![1.0 / i_n as f64; i_n],
            gamma: vec![1.0; m_n],
            tolerances: Tolerances { urllc: 1e-5, ter_mmtc: 1e-3, sat_mmtc: 1e-2 },
            thresholds: vec![Thresholds { ter_mmtc: 1.0, sat_mmtc: 1.0, urllc: 1.0 }; i_n],
            b_max_ter: vec![1.0; i_n],
            b_max_sat: vec![1.0; i_n],
            c_sat: 100.0,
            p_max: 1000.0,
        }
    }

    #[test]
    fn utility_examples() {
        let r = LinkMatrix::filled(2, 2, 10.0);
        let p = LinkMatrix::filled(2, 2, 300.0);
        let rate_only = utility(&r, &p, &params(2, 2, 1.0));
        assert!((rate_only - 0.25 * (0.5 * 20.0 + 0.5 * 20.0) / 100.0).abs() < 1e-15);
        let power_only = utility(&r, &p, &params(2, 2, 0.0));
        assert!((power_only + 0.25 * 1200.0 / 1000.0).abs() < 1e-15);

        let mut single = params(1, 1, 0.5);
        single.sigma = vec![1.0];
        let eta = utility(&LinkMatrix::filled(1, 1, 50.0), &LinkMatrix::filled(1, 1, 500.0), &single);
        assert_eq!(eta, 0.0);
    }

    #[test]
    fn virtual_queue_examples() {
        let eps = Tolerances { urllc: 1e-5, ter_mmtc: 1e-3, sat_mmtc: 1e-2 };
        let zero = step_virtual_queues(&VirtualQueues::default(), &Indicators::default(), &eps);
        assert_eq!(zero, VirtualQueues::default());
        let z = VirtualQueues { ter_mmtc: 0.5e-3, sat_mmtc: 0.0, urllc: 5.0 };
        let ind = Indicators { ter_mmtc: false, sat_mmtc: false, urllc: true };
        let next = step_virtual_queues(&z, &ind, &eps);
        assert!((next.urllc - 5.99999).abs() < 1e-12);
        assert_eq!(next.ter_mmtc, 0.0);
    }

    #[test]
    fn tolerance_ordering() {
        assert!(Tolerances { urllc: 1e-5, ter_mmtc: 1e-3, sat_mmtc: 1e-2 }.validate().is_ok());
        assert!(Tolerances { urllc: 1e-2, ter_mmtc: 1e-3, sat_mmtc: 1e-1 }.validate().is_err());
    }

    #[test]
    fn sp1_examples() {
        let mut v = StationView { q_sum: 100.0, ..Default::default() };
        v.backlog.ter_mmtc = 25.0; // left side 50
        assert_eq!(sp1_terrestrial(&v, 7.0), 7.0);
        v.backlog.ter_mmtc = 50.0; // left side 100
        assert_eq!(sp1_terrestrial(&v, 7.0), 0.0);
        assert_eq!(sp1_terrestrial(&StationView::default(), 7.0), 0.0);
        assert_eq!(sp1_satellite(&StationView::default(), 7.0), 0.0);

        let mut s = StationView { q_sum: 20.0, ..Default::default() };
        s.backlog.sat_mmtc = 5.0; // comparator 10
        assert_eq!(sp1_satellite(&s, 3.0), 3.0);
        s.backlog.sat_mmtc = 10.0; // comparator 20
        assert_eq!(sp1_satellite(&s, 3.0), 0.0);
    }

    fn random_view(rng: &mut ChaCha8Rng) -> StationView {
        let mut g = || rng.random_range(0.0..100.0);
        StationView {
            backlog: BacklogSet { ter_mmtc: g(), ter_urllc: g(), sat_mmtc: g(), sat_embb: g() },
            virtual_queues: VirtualQueues { ter_mmtc: g(), sat_mmtc: g(), urllc: g() },
            q_sum: 6.0 * g(),
            a_urllc: g(),
            a_embb: g(),
            c_ter: 2.0 * g(),
        }
    }

    #[test]
    fn sp1_minimizes_objective_over_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = params(1, 1, 0.5);
        p.sigma = vec![1.0];
        let zero = LinkMatrix::zeros(1, 1);
        for _ in 0..1000 {
            let view = random_view(&mut rng);
            let (bt, bs) = (sp1_terrestrial(&view, 40.0), sp1_satellite(&view, 60.0));
            let best = slot_objective(&[view], &[bt], &[bs], &zero, &zero, &p);
            for k in 0..=20 {
                for l in 0..=20 {
                    let other = slot_objective(&[view], &[2.0 * k as f64], &[3.0 * l as f64], &zero, &zero, &p);
                    assert!(best <= other + 1e-9 * other.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn slot_objective_zero_state() {
        let p = params(2, 2, 0.5);
        let zero = LinkMatrix::zeros(2, 2);
        let views = [StationView::default(); 2];
        assert_eq!(slot_objective(&views, &[0.0; 2], &[0.0; 2], &zero, &zero, &p), 0.0);
    }

    #[test]
    fn drift_examples() {
        let s = vec![StationQueues { q_sum: 3.0, ..Default::default() }];
        assert_eq!(drift_bound_diag(&s, &s, 10.0, 0.0), 0.0);
        let mut grown = s.clone();
        grown[0].backlog.sat_embb = 0.0 + 4.0;
        assert_eq!(drift_bound_diag(&s, &grown, 0.0, 0.0), 0.5 * 16.0);
    }

    proptest! {
        #[test]
        fn sp1_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_view(&mut rng);
            let mut w = v;
            for x in [
                &mut w.backlog.ter_mmtc, &mut w.backlog.ter_urllc, &mut w.backlog.sat_mmtc, &mut w.backlog.sat_embb,
                &mut w.virtual_queues.ter_mmtc, &mut w.virtual_queues.sat_mmtc, &mut w.virtual_queues.urllc,
                &mut w.q_sum, &mut w.a_urllc, &mut w.a_embb, &mut w.c_ter,
            ] {
                *x *= c;
            }
            // Both sides scale by c; allow for rounding right at the threshold.
            let tc = v.ter_coefficient();
            if tc.abs() > 1e-9 * v.q_sum.max(1.0) {
                prop_assert_eq!(sp1_terrestrial(&v, 1.0), sp1_terrestrial(&w, 1.0));
            }
            let sc = v.sat_coefficient();
            if sc.abs() > 1e-9 * v.q_sum.max(1.0) {
                prop_assert_eq!(sp1_satellite(&v, 1.0), sp1_satellite(&w, 1.0));
            }
        }

        #[test]
        fn virtual_queues_non_negative(z in 0.0f64..10.0, fired: bool) {
            let eps = Tolerances { urllc: 1e-5, ter_mmtc: 1e-3, sat_mmtc: 1e-2 };
            let ind = Indicators { ter_mmtc: fired, sat_mmtc: fired, urllc: fired };
            let q = VirtualQueues { ter_mmtc: z, sat_mmtc: z, urllc: z };
            let n = step_virtual_queues(&q, &ind, &eps);
            prop_assert!(n.ter_mmtc >= 0.0 && n.sat_mmtc >= 0.0 && n.urllc >= 0.0);
        }

        #[test]
        fn utility_affine_in_power(p0 in 0.0f64..500.0, dp in 0.0f64..500.0) {
            let pr = params(1, 2, 0.3);
            let r = LinkMatrix::zeros(1, 2);
            let a = utility(&r, &LinkMatrix::filled(1, 2, p0), &pr);
            let b = utility(&r, &LinkMatrix::filled(1, 2, p0 + dp), &pr);
            let slope = -(0.7 / 2.0) * 2.0 / 1000.0;
            prop_assert!((b - a - slope * dp).abs() < 1e-9);
        }
    }
}
