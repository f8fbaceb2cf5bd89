//! Equal-time normal-ordered correlation functions from photon-number
//! statistics, and the classical bound `g ≥ 1`.
//!
//! Normal-ordered intensity moments are factorial moments of the number
//! distribution, so `g^(m,n) = E[[n1]_m [n2]_n] / (E[n1]^m E[n2]^n)`.

use crate::detection::{coincidence_probability, DetectorModel};
use crate::error::{CphError, Result};
use crate::fock::{poisson_distribution, CutoffPolicy, PhotonDistribution};
use crate::optics::{JointDistribution, Mode};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub order: (usize, usize),
    pub value: f64,
    /// `value − 1`; negative means the classical bound is violated.
    pub classical_margin: f64,
    pub label: String,
}

impl CorrelationReport {
    fn new(order: (usize, usize), value: f64) -> Self {
        Self {
            order,
            value,
            classical_margin: value - 1.0,
            label: String::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_nonclassical(&self) -> bool {
        self.classical_margin < 0.0
    }
}

/// `[n]_k = n (n−1) ⋯ (n−k+1)`.
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).map(|i| (n - i) as f64).product()
}

/// `Σ_n P(n) [n]_order`.
pub fn falling_moment(probs: &[f64], order: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .skip(order)
        .map(|(n, p)| p * falling_factorial(n, order))
        .sum()
}

/// Single-mode `g^(n)(0)`.
pub fn g_n(dist: &PhotonDistribution, n: usize) -> Result<CorrelationReport> {
    let mean = dist.mean();
    if n > 0 && !(mean > 0.0) {
        return Err(CphError::ZeroMeanDenominator { m: n, n: 0 });
    }
    let value = falling_moment(dist.probs(), n) / mean.powi(n as i32);
    Ok(CorrelationReport::new((n, 0), value))
}

/// Two-mode `g^(m,n)(0)`; with `n = 0` this is `g^(m)` of mode 1.
pub fn g_mn(dist: &JointDistribution, m: usize, n: usize) -> Result<CorrelationReport> {
    let mean1 = if m > 0 {
        dist.marginal(Mode::One).mean()
    } else {
        1.0
    };
    let mean2 = if n > 0 {
        dist.marginal(Mode::Two).mean()
    } else {
        1.0
    };
    if !(mean1 > 0.0 && mean2 > 0.0) {
        return Err(CphError::ZeroMeanDenominator { m, n });
    }
    let moment: f64 = dist
        .iter()
        .filter(|(n1, n2, p)| *n1 >= m && *n2 >= n && *p != 0.0)
        .map(|(n1, n2, p)| p * falling_factorial(n1, m) * falling_factorial(n2, n))
        .sum();
    let value = moment / (mean1.powi(m as i32) * mean2.powi(n as i32));
    Ok(CorrelationReport::new((m, n), value))
}

/// `E[n1]^m E[n2]^n`: the smallest factorial moment `E[[n1]_m [n2]_n]` a
/// separable classical state with the same mean photon numbers can have.
pub fn classical_moment_floor(dist: &JointDistribution, m: usize, n: usize) -> f64 {
    dist.marginal(Mode::One).mean().powi(m as i32) * dist.marginal(Mode::Two).mean().powi(n as i32)
}

/// Classical bound in measured units: the `(c1, c2)` click probability that
/// a product of Poissonian (coherent) modes with the same mean photon numbers
/// produces through the same detectors. This reference saturates `g = 1`.
pub fn classical_floor(
    dist: &JointDistribution,
    c1: usize,
    c2: usize,
    det1: &DetectorModel,
    det2: &DetectorModel,
) -> Result<f64> {
    let policy = CutoffPolicy::new(1e-20, 256)?;
    let reference = JointDistribution::product(
        &poisson_distribution(dist.marginal(Mode::One).mean(), &policy)?,
        &poisson_distribution(dist.marginal(Mode::Two).mean(), &policy)?,
    );
    Ok(coincidence_probability(&reference, c1, c2, det1, det2))
}

/// Random separable classical state `P1 ⊗ P2`, each mode an independent
/// mixture of one to `max_components` Poissonians with means in
/// `(0, max_mean)`.
pub fn random_separable_mixture<R: Rng + ?Sized>(
    rng: &mut R,
    max_components: usize,
    max_mean: f64,
    policy: &CutoffPolicy,
) -> Result<JointDistribution> {
    if max_components == 0 {
        return Err(CphError::InvalidConfig(
            "a mixture needs at least one component".into(),
        ));
    }
    if !(max_mean > 0.0 && max_mean.is_finite()) {
        return Err(CphError::InvalidParameter {
            name: "max_mean",
            value: max_mean,
            reason: "must be positive and finite",
        });
    }
    let first = random_poisson_mixture(rng, max_components, max_mean, policy)?;
    let second = random_poisson_mixture(rng, max_components, max_mean, policy)?;
    Ok(JointDistribution::product(&first, &second))
}

fn random_poisson_mixture<R: Rng + ?Sized>(
    rng: &mut R,
    max_components: usize,
    max_mean: f64,
    policy: &CutoffPolicy,
) -> Result<PhotonDistribution> {
    let count = rng.random_range(1..=max_components);
    let components = (0..count)
        .map(|_| {
            let weight = rng.random_range(0.05..1.0);
            let mean = rng.random_range(0.01..1.0) * max_mean;
            Ok((weight, poisson_distribution(mean, policy)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let total_weight: f64 = components.iter().map(|(w, _)| w).sum();
    let dim = components
        .iter()
        .map(|(_, d)| d.probs().len())
        .max()
        .unwrap_or(1);
    let mut probs = vec![0.0; dim];
    let mut tail_bound = 0.0;
    for (w, d) in &components {
        let w = w / total_weight;
        tail_bound += w * d.tail_bound();
        for (slot, p) in probs.iter_mut().zip(d.probs()) {
            *slot += w * p;
        }
    }
    Ok(PhotonDistribution::from_probs(probs, tail_bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, thermal_distribution, FockVector};
    use crate::optics::{interfere, joint_distribution, loss_channel};
    use proptest::prelude::*;

    fn fine() -> CutoffPolicy {
        CutoffPolicy::new(1e-30, 128).unwrap()
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial(5, 0), 1.0);
        assert_eq!(falling_factorial(5, 2), 20.0);
        assert_eq!(falling_factorial(2, 3), 0.0);
        assert_eq!(falling_moment(&[0.0, 0.0, 1.0], 2), 2.0);
        let p = [0.2, 0.3, 0.5];
        assert!((falling_moment(&p, 1) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn poisson_factorial_moments_are_powers() {
        let mu: f64 = 1.7;
        let p = poisson_distribution(mu, &fine()).unwrap();
        for k in 1..=6 {
            let got = falling_moment(p.probs(), k);
            assert!((got - mu.powi(k as i32)).abs() <= 1e-10 * mu.powi(k as i32));
        }
    }

    #[test]
    fn coherent_and_thermal_references() {
        let coh = coherent_state(1.1, 0.3, &fine()).unwrap().probabilities();
        for n in 1..=5 {
            assert!((g_n(&coh, n).unwrap().value - 1.0).abs() < 1e-10);
        }
        let th = thermal_distribution(0.5, &CutoffPolicy::default()).unwrap();
        assert!((g_n(&th, 2).unwrap().value - 2.0).abs() < 1e-6);
        assert!((g_n(&th, 3).unwrap().value - 6.0).abs() < 1e-6);
        let one = FockVector::number(1).probabilities();
        let g = g_n(&one, 2).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.is_nonclassical());
    }

    #[test]
    fn zero_mean_is_an_error() {
        let vac = FockVector::vacuum().probabilities();
        assert!(matches!(
            g_n(&vac, 2),
            Err(CphError::ZeroMeanDenominator { .. })
        ));
        let d = JointDistribution::from_rows(&[vec![0.5], vec![0.5]], 0.0).unwrap();
        assert!(g_mn(&d, 1, 0).is_ok());
        assert!(matches!(
            g_mn(&d, 1, 1),
            Err(CphError::ZeroMeanDenominator { .. })
        ));
    }

    #[test]
    fn g_mn_reduces_to_single_mode() {
        let d = joint_distribution(&interfere(1.0, 0.4, 0.3, &CutoffPolicy::default()).unwrap());
        let a = g_mn(&d, 3, 0).unwrap().value;
        let b = g_n(&d.marginal(Mode::One), 3).unwrap().value;
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn thermal_product_bunches() {
        let policy = CutoffPolicy::new(1e-20, 128).unwrap();
        let d = JointDistribution::product(
            &thermal_distribution(0.4, &policy).unwrap(),
            &thermal_distribution(0.7, &policy).unwrap(),
        );
        for (m, n, want) in [(1, 1, 1.0), (2, 1, 2.0), (2, 2, 4.0), (3, 2, 12.0)] {
            assert!((g_mn(&d, m, n).unwrap().value - want).abs() < 1e-6 * want);
        }
    }

    #[test]
    fn moment_floor_scales_as_power() {
        let policy = fine();
        let d = |mu1| {
            JointDistribution::product(
                &poisson_distribution(mu1, &policy).unwrap(),
                &poisson_distribution(0.3, &policy).unwrap(),
            )
        };
        let ratio = classical_moment_floor(&d(0.4), 2, 2) / classical_moment_floor(&d(0.2), 2, 2);
        assert!((ratio - 4.0).abs() < 1e-10);
    }

    #[test]
    fn click_floor_scales_as_power_in_weak_limit() {
        let policy = fine();
        let d = |mu1| {
            JointDistribution::product(
                &poisson_distribution(mu1, &policy).unwrap(),
                &poisson_distribution(1e-4, &policy).unwrap(),
            )
        };
        let det = DetectorModel::multiplexed(2, 0.125).unwrap();
        let ratio = classical_floor(&d(2e-4), 2, 2, &det, &det).unwrap()
            / classical_floor(&d(1e-4), 2, 2, &det, &det).unwrap();
        assert!((ratio - 4.0).abs() < 4e-3);
    }

    #[test]
    fn coherent_floor_equals_coherent_curve() {
        let policy = fine();
        let det = DetectorModel::multiplexed(2, 0.125).unwrap();
        for phase in [0.0, 1.0, 2.5] {
            let d = joint_distribution(&interfere(0.9, phase, 0.0, &policy).unwrap());
            let curve = coincidence_probability(&d, 2, 2, &det, &det);
            let floor = classical_floor(&d, 2, 2, &det, &det).unwrap();
            assert!((curve - floor).abs() <= 1e-10 * floor);
        }
    }

    #[test]
    fn loss_leaves_g_unchanged() {
        let d = joint_distribution(&interfere(0.8, 1.2, 0.25, &CutoffPolicy::default()).unwrap());
        let lossy = loss_channel(&d, 0.125, 0.125).unwrap();
        for (m, n) in [(1, 1), (2, 2), (5, 0), (3, 1)] {
            let a = g_mn(&d, m, n).unwrap().value;
            let b = g_mn(&lossy, m, n).unwrap().value;
            assert!((a - b).abs() <= 1e-10 * a.max(1.0), "({m},{n}) {a} vs {b}");
        }
    }

    #[test]
    fn random_mixtures_are_classical() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let policy = CutoffPolicy::new(1e-20, 128).unwrap();
        for _ in 0..50 {
            let d = random_separable_mixture(&mut rng, 4, 2.0, &policy).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12);
            for (m, n) in [(1, 1), (2, 2), (5, 0)] {
                assert!(g_mn(&d, m, n).unwrap().value >= 1.0 - 1e-10);
            }
        }
        assert!(random_separable_mixture(&mut rng, 0, 1.0, &policy).is_err());
    }

    #[test]
    fn correlated_mixtures_fall_outside_the_bound() {
        let policy = fine();
        let on = poisson_distribution(1.0, &policy).unwrap();
        let off = FockVector::vacuum().probabilities();
        let d = JointDistribution::mixture(&[
            (0.5, JointDistribution::product(&on, &off)),
            (0.5, JointDistribution::product(&off, &on)),
        ])
        .unwrap();
        assert!(g_mn(&d, 1, 1).unwrap().value < 1e-12);
    }

    proptest! {
        #[test]
        fn poissonian_products_saturate(mu1 in 0.01f64..3.0, mu2 in 0.01f64..3.0, m in 0usize..=5, n in 0usize..=5) {
            let policy = fine();
            let d = JointDistribution::product(
                &poisson_distribution(mu1, &policy).unwrap(),
                &poisson_distribution(mu2, &policy).unwrap(),
            );
            let g = g_mn(&d, m, n).unwrap().value;
            prop_assert!((g - 1.0).abs() < 1e-10, "g = {}", g);
        }
    }
}
