//! Difference-of-concave split of the weighted sum rate and its tangents.
//!
//! Sums run over visible links only; an invisible link contributes the same
//! term to F and G, so F − G is unchanged.

use std::f64::consts::LN_2;

use super::Sp2Instance;
use crate::error::{Error, Result};
use crate::matrix::LinkMatrix;

/// Received power plus noise at each station, Σ_j P_ij h_ij + n.
pub(crate) fn received(inst: &Sp2Instance, power: &LinkMatrix<f64>) -> Vec<f64> {
    (0..inst.stations())
        .map(|i| inst.noise + (0..inst.satellites()).map(|j| power[(i, j)] * inst.gain[(i, j)]).sum::<f64>())
        .collect()
}

fn visible_per_station(inst: &Sp2Instance) -> Vec<usize> {
    (0..inst.stations()).map(|i| (0..inst.satellites()).filter(|&j| inst.visible(i, j)).count()).collect()
}

/// (F, G) with F = Σ X_i w ln(Σ_j P_ij h_ij + n) and
/// G = Σ X_i w ln(Σ_{j'≠j} P_ij' h_ij' + n), summed over visible links.
pub fn dc_parts(inst: &Sp2Instance, power: &LinkMatrix<f64>) -> Result<(f64, f64)> {
    let s = received(inst, power);
    let (mut f, mut g) = (0.0, 0.0);
    for (i, &s_i) in s.iter().enumerate() {
        let weight = inst.x_station[i] * inst.rate_scale;
        for j in 0..inst.satellites() {
            if !inst.visible(i, j) {
                continue;
            }
            let noise_plus = inst.interference(power, i, j) + inst.noise;
            if !(s_i > 0.0 && noise_plus > 0.0) {
                return Err(Error::Domain("non-positive logarithm argument".into()));
            }
            f += weight * s_i.ln();
            g += weight * noise_plus.ln();
        }
    }
    Ok((f, g))
}

/// First-order expansion `value + Σ grad · (P − P̂)` of a concave function.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSurrogate {
    pub value: f64,
    pub grad: LinkMatrix<f64>,
    pub anchor: LinkMatrix<f64>,
}

impl AffineSurrogate {
    pub fn eval(&self, power: &LinkMatrix<f64>) -> f64 {
        self.value
            + self
                .grad
                .as_slice()
                .iter()
                .zip(power.as_slice().iter().zip(self.anchor.as_slice()))
                .map(|(g, (p, a))| g * (p - a))
                .sum::<f64>()
    }
}

/// Tangent of F at `anchor` with station weights `weights` (X_i for the
/// objective, ones for the capacity constraint). Overestimates F.
pub fn linearize_f(inst: &Sp2Instance, anchor: &LinkMatrix<f64>, weights: &[f64]) -> AffineSurrogate {
    let s = received(inst, anchor);
    let m = visible_per_station(inst);
    let mut value = 0.0;
    let mut grad = LinkMatrix::zeros(inst.stations(), inst.satellites());
    for i in 0..inst.stations() {
        let w = weights[i] * inst.rate_scale;
        value += w * m[i] as f64 * s[i].ln();
        for j in 0..inst.satellites() {
            if inst.visible(i, j) {
                grad[(i, j)] = w * m[i] as f64 * inst.gain[(i, j)] / s[i];
            }
        }
    }
    AffineSurrogate { value, grad, anchor: anchor.clone() }
}

/// Tangent of G at `anchor`, weighted by X_i. Overestimates G.
pub fn linearize_g(inst: &Sp2Instance, anchor: &LinkMatrix<f64>) -> AffineSurrogate {
    let mut value = 0.0;
    let mut grad = LinkMatrix::zeros(inst.stations(), inst.satellites());
    for i in 0..inst.stations() {
        let w = inst.x_station[i] * inst.rate_scale;
        for j in 0..inst.satellites() {
            if !inst.visible(i, j) {
                continue;
            }
            let denom = inst.interference(anchor, i, j) + inst.noise;
            value += w * denom.ln();
            for k in 0..inst.satellites() {
                if k != j && inst.visible(i, k) {
                    grad[(i, k)] += w * inst.gain[(i, k)] / denom;
                }
            }
        }
    }
    AffineSurrogate { value, grad, anchor: anchor.clone() }
}

/// Concave minorant (F(P) − Ĝ(P))/ln 2 − Σ X_j P_ij of the true objective.
pub fn surrogate_objective(inst: &Sp2Instance, g_hat: &AffineSurrogate, power: &LinkMatrix<f64>) -> f64 {
    let s = received(inst, power);
    let m = visible_per_station(inst);
    let f: f64 = (0..inst.stations()).map(|i| inst.x_station[i] * inst.rate_scale * m[i] as f64 * s[i].ln()).sum();
    let price: f64 = (0..inst.satellites()).map(|j| inst.x_satellite[j] * power.col_sum(j)).sum();
    (f - g_hat.eval(power)) / LN_2 - price
}

pub fn surrogate_gradient(inst: &Sp2Instance, g_hat: &AffineSurrogate, power: &LinkMatrix<f64>) -> LinkMatrix<f64> {
    let s = received(inst, power);
    let m = visible_per_station(inst);
    LinkMatrix::from_fn(inst.stations(), inst.satellites(), |i, j| {
        if !inst.visible(i, j) {
            return 0.0;
        }
        let df = inst.x_station[i] * inst.rate_scale * m[i] as f64 * inst.gain[(i, j)] / s[i];
        (df - g_hat.grad[(i, j)]) / LN_2 - inst.x_satellite[j]
    })
}

/// Conservative capacity surrogate of satellite `j`, normalized by the
/// capacity: Σ_i w(F̂_i(P) − ln(I_ij(P) + n))/ln 2 / C − 1.
pub(crate) struct CapacitySurrogate {
    anchor_received: Vec<f64>,
    anchor: LinkMatrix<f64>,
}

impl CapacitySurrogate {
    pub fn new(inst: &Sp2Instance, anchor: &LinkMatrix<f64>) -> Self {
        Self { anchor_received: received(inst, anchor), anchor: anchor.clone() }
    }

    fn f_hat(&self, inst: &Sp2Instance, power: &LinkMatrix<f64>, i: usize) -> f64 {
        let s = self.anchor_received[i];
        let delta: f64 =
            (0..inst.satellites()).map(|k| inst.gain[(i, k)] * (power[(i, k)] - self.anchor[(i, k)])).sum();
        s.ln() + delta / s
    }

    pub fn value(&self, inst: &Sp2Instance, power: &LinkMatrix<f64>, j: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..inst.stations() {
            if inst.visible(i, j) {
                let denom = inst.interference(power, i, j) + inst.noise;
                total += self.f_hat(inst, power, i) - denom.ln();
            }
        }
        total * inst.rate_scale / LN_2 / inst.capacity - 1.0
    }

    /// Adds `coef · ∇(value_j)` into `out`.
    pub fn add_gradient(
        &self,
        inst: &Sp2Instance,
        power: &LinkMatrix<f64>,
        j: usize,
        coef: f64,
        out: &mut LinkMatrix<f64>,
    ) {
        let scale = coef * inst.rate_scale / LN_2 / inst.capacity;
        for i in 0..inst.stations() {
            if !inst.visible(i, j) {
                continue;
            }
            let s = self.anchor_received[i];
            let denom = inst.interference(power, i, j) + inst.noise;
            for k in 0..inst.satellites() {
                if !inst.visible(i, k) {
                    continue;
                }
                let h = inst.gain[(i, k)];
                let mut d = h / s;
                if k != j {
                    d -= h / denom;
                }
                out[(i, k)] += scale * d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::random_instance;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_feasible<R: Rng>(rng: &mut R, inst: &Sp2Instance) -> LinkMatrix<f64> {
        let mut p = LinkMatrix::from_fn(inst.stations(), inst.satellites(), |i, j| {
            if inst.visible(i, j) {
                rng.random_range(0.0..inst.p_max)
            } else {
                0.0
            }
        });
        for j in 0..inst.satellites() {
            let total = p.col_sum(j);
            if total > inst.p_max {
                for i in 0..inst.stations() {
                    p[(i, j)] *= inst.p_max / total;
                }
            }
        }
        p
    }

    fn strong_interference(inst: &mut Sp2Instance) {
        // Push into a high-SINR regime so curvature terms matter.
        inst.noise *= 1e-3;
    }

    #[test]
    fn dc_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&mut rng, 3, 1, 1.0);
        let (_, g) = dc_parts(&inst, &inst.even_split()).unwrap();
        let expected: f64 = inst.x_station.iter().map(|x| x * inst.rate_scale * inst.noise.ln()).sum();
        assert!((g - expected).abs() <= 1e-12 * expected.abs());

        let zero = LinkMatrix::zeros(3, 1);
        let (f, g) = dc_parts(&inst, &zero).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn dc_difference_matches_rate_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let mut inst = random_instance(&mut rng, 3, 3, 0.8);
            strong_interference(&mut inst);
            let p = random_feasible(&mut rng, &inst);
            let (f, g) = dc_parts(&inst, &p).unwrap();
            let rates = inst.rates(&p);
            let direct: f64 = (0..3).map(|i| inst.x_station[i] * rates.row_sum(i)).sum();
            let via_dc = (f - g) / LN_2;
            assert!((via_dc - direct).abs() <= 1e-9 * direct.abs().max(1e-300), "{via_dc} vs {direct}");
        }
    }

    #[test]
    fn linearize_f_tangent_overestimates_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let mut inst = random_instance(&mut rng, 2, 3, 0.9);
            strong_interference(&mut inst);
            let anchor = random_feasible(&mut rng, &inst);
            let lin = linearize_f(&inst, &anchor, &inst.x_station);
            let (f0, _) = dc_parts(&inst, &anchor).unwrap();
            assert!((lin.eval(&anchor) - f0).abs() <= 1e-12 * f0.abs());

            for _ in 0..100 {
                let p = random_feasible(&mut rng, &inst);
                let (f, _) = dc_parts(&inst, &p).unwrap();
                assert!(lin.eval(&p) >= f - 1e-9 * f.abs());
            }

            let step = 1e-3;
            for i in 0..2 {
                for j in 0..3 {
                    if !inst.visible(i, j) {
                        continue;
                    }
                    let mut up = anchor.clone();
                    let mut down = anchor.clone();
                    up[(i, j)] += step;
                    down[(i, j)] -= step;
                    let fd = (dc_parts(&inst, &up).unwrap().0 - dc_parts(&inst, &down).unwrap().0) / (2.0 * step);
                    let g = lin.grad[(i, j)];
                    assert!((fd - g).abs() <= 1e-6 * g.abs(), "fd {fd} vs {g}");
                }
            }
        }
    }

    #[test]
    fn surrogate_is_minorant_and_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let mut inst = random_instance(&mut rng, 2, 3, 0.9);
            strong_interference(&mut inst);
            let anchor = random_feasible(&mut rng, &inst);
            let g_hat = linearize_g(&inst, &anchor);
            let at_anchor = surrogate_objective(&inst, &g_hat, &anchor);
            let truth = inst.objective(&anchor);
            assert!((at_anchor - truth).abs() <= 1e-9 * truth.abs().max(1.0));
            for _ in 0..100 {
                let p = random_feasible(&mut rng, &inst);
                let t = inst.objective(&p);
                assert!(surrogate_objective(&inst, &g_hat, &p) <= t + 1e-9 * t.abs().max(1.0));
            }
        }
    }

    #[test]
    fn capacity_surrogate_is_conservative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut inst = random_instance(&mut rng, 3, 2, 0.9);
            strong_interference(&mut inst);
            let anchor = random_feasible(&mut rng, &inst);
            let cap = CapacitySurrogate::new(&inst, &anchor);
            for _ in 0..50 {
                let p = random_feasible(&mut rng, &inst);
                let rates = inst.rates(&p);
                for j in 0..2 {
                    let truth = rates.col_sum(j) / inst.capacity - 1.0;
                    assert!(cap.value(&inst, &p, j) >= truth - 1e-9);
                }
            }
        }
    }

    #[test]
    fn capacity_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut inst = random_instance(&mut rng, 2, 3, 1.0);
        strong_interference(&mut inst);
        let anchor = random_feasible(&mut rng, &inst);
        let p = random_feasible(&mut rng, &inst);
        let cap = CapacitySurrogate::new(&inst, &anchor);
        for j in 0..3 {
            let mut grad = LinkMatrix::zeros(2, 3);
            cap.add_gradient(&inst, &p, j, 1.0, &mut grad);
            for i in 0..2 {
                for k in 0..3 {
                    let step = 1e-3;
                    let mut up = p.clone();
                    let mut down = p.clone();
                    up[(i, k)] += step;
                    down[(i, k)] -= step;
                    let fd = (cap.value(&inst, &up, j) - cap.value(&inst, &down, j)) / (2.0 * step);
                    assert!(
                        (fd - grad[(i, k)]).abs() <= 1e-6 * grad[(i, k)].abs().max(1e-12),
                        "{fd} vs {}",
                        grad[(i, k)]
                    );
                }
            }
        }
    }
}
