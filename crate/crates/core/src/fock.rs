//! Single-mode truncated Fock-space states.
//!
//! Every constructor picks the smallest cutoff whose analytic tail bound falls
//! below the policy's `tail_epsilon`, and records that bound on the returned
//! value. Amplitudes are evaluated term by term in log space, so an amplitude
//! never depends on the cutoff it was built with.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{check_finite, CphError, Result};

const LN_FACT_TABLE: usize = 1024;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE + 1);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..=LN_FACT_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`, tabulated for small `n` and Stirling's series beyond the table.
pub fn log_factorial(n: usize) -> f64 {
    if n <= LN_FACT_TABLE {
        return ln_fact_table()[n];
    }
    let x = n as f64;
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn log_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

/// `k · ln_x` with the convention `0 · ln 0 = 0`.
pub(crate) fn xlogy(k: usize, ln_x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_x
    }
}

/// Truncation rules shared by all state constructors in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPolicy {
    tail_epsilon: f64,
    hard_max: usize,
    min_cutoff: usize,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self {
            tail_epsilon: 1e-12,
            hard_max: 128,
            min_cutoff: 0,
        }
    }
}

impl CutoffPolicy {
    pub fn new(tail_epsilon: f64, hard_max: usize) -> Result<Self> {
        if !(tail_epsilon > 0.0 && tail_epsilon < 1.0) {
            return Err(CphError::InvalidPolicy(format!(
                "tail_epsilon must lie in (0, 1), got {tail_epsilon}"
            )));
        }
        Ok(Self {
            tail_epsilon,
            hard_max,
            min_cutoff: 0,
        })
    }

    /// Forces every constructed state to carry at least `n + 1` amplitudes,
    /// e.g. so that a target photon number is always represented.
    pub fn with_min_cutoff(mut self, n: usize) -> Self {
        self.min_cutoff = n;
        self
    }

    pub fn tail_epsilon(&self) -> f64 {
        self.tail_epsilon
    }

    pub fn hard_max(&self) -> usize {
        self.hard_max
    }

    pub fn min_cutoff(&self) -> usize {
        self.min_cutoff
    }

    fn check_flux(&self, state: &'static str, mean: f64) -> Result<()> {
        if 4.0 * mean > self.hard_max as f64 {
            return Err(CphError::CutoffExceedsHardMax {
                state,
                required: (4.0 * mean).ceil() as usize,
                hard_max: self.hard_max,
            });
        }
        Ok(())
    }

    fn finish(&self, state: &'static str, cutoff: usize) -> Result<usize> {
        let cutoff = cutoff.max(self.min_cutoff);
        if cutoff > self.hard_max {
            return Err(CphError::CutoffExceedsHardMax {
                state,
                required: cutoff,
                hard_max: self.hard_max,
            });
        }
        Ok(cutoff)
    }
}

/// Pure single-mode state over photon numbers `0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
    tail_bound: f64,
}

impl FockVector {
    /// Wraps raw amplitudes. The caller vouches for `tail_bound`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, tail_bound: f64) -> Self {
        assert!(!amplitudes.is_empty(), "a Fock vector needs at least |0>");
        Self {
            amplitudes,
            tail_bound,
        }
    }

    /// Number state `|n>`.
    pub fn number(n: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            tail_bound: 0.0,
        }
    }

    pub fn vacuum() -> Self {
        Self::number(0)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> Complex64 {
        self.amplitudes
            .get(n)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Photon-number distribution `|a_n|^2`.
    pub fn probabilities(&self) -> PhotonDistribution {
        PhotonDistribution {
            probs: self.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
            tail_bound: self.tail_bound,
        }
    }
}

/// Single-mode photon-number statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_bound: f64,
}

impl PhotonDistribution {
    pub fn from_probs(probs: Vec<f64>, tail_bound: f64) -> Self {
        assert!(!probs.is_empty(), "a photon distribution needs P(0)");
        Self { probs, tail_bound }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Chernoff bound on `P(X >= k)` for `X ~ Poisson(mean)`, in log space.
fn poisson_log_tail(mean: f64, k: usize) -> f64 {
    let k = k as f64;
    -mean + k * (1.0 + mean.ln() - k.ln())
}

fn poisson_cutoff(mean: f64, policy: &CutoffPolicy, state: &'static str) -> Result<(usize, f64)> {
    policy.check_flux(state, mean)?;
    if mean == 0.0 {
        return Ok((policy.finish(state, 0)?, 0.0));
    }
    let ln_eps = policy.tail_epsilon.ln();
    // The bound only holds for k > mean.
    let mut k = mean.floor() as usize + 1;
    while poisson_log_tail(mean, k) > ln_eps {
        k += 1;
        if k > policy.hard_max + 1 {
            return Err(CphError::CutoffExceedsHardMax {
                state,
                required: k - 1,
                hard_max: policy.hard_max,
            });
        }
    }
    let cutoff = policy.finish(state, k - 1)?;
    Ok((cutoff, poisson_log_tail(mean, cutoff + 1).exp()))
}

/// Coherent state `|α>` with `α = magnitude · e^{i phase}`.
pub fn coherent_state(magnitude: f64, phase: f64, policy: &CutoffPolicy) -> Result<FockVector> {
    check_finite("magnitude", magnitude)?;
    check_finite("phase", phase)?;
    if magnitude < 0.0 {
        return Err(CphError::InvalidParameter {
            name: "magnitude",
            value: magnitude,
            reason: "must be nonnegative",
        });
    }
    let mean = magnitude * magnitude;
    let (cutoff, tail_bound) = poisson_cutoff(mean, policy, "coherent state")?;
    let ln_mag = magnitude.ln();
    let amplitudes = (0..=cutoff)
        .map(|n| {
            if magnitude == 0.0 {
                return if n == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            let modulus = (-0.5 * mean + xlogy(n, ln_mag) - 0.5 * log_factorial(n)).exp();
            Complex64::from_polar(modulus, n as f64 * phase)
        })
        .collect();
    Ok(FockVector {
        amplitudes,
        tail_bound,
    })
}

/// Single-mode squeezed vacuum with squeezing parameter `r` and zero
/// squeezing phase.
pub fn squeezed_vacuum(r: f64, policy: &CutoffPolicy) -> Result<FockVector> {
    check_finite("r", r)?;
    if r < 0.0 {
        return Err(CphError::InvalidParameter {
            name: "r",
            value: r,
            reason: "must be nonnegative",
        });
    }
    policy.check_flux("squeezed vacuum", r.sinh().powi(2))?;
    let ln_cosh = r.cosh().ln();
    let ln_tanh = r.tanh().ln();
    // P(2m) <= tanh^{2m}(r) / cosh(r), so the weight beyond pair number M is
    // at most tanh^{2M}(r) * cosh(r).
    let log_tail = |pairs: usize| xlogy(2 * pairs, ln_tanh) + ln_cosh;
    let (cutoff, tail_bound) = if r == 0.0 {
        (policy.finish("squeezed vacuum", 0)?, 0.0)
    } else {
        let ln_eps = policy.tail_epsilon.ln();
        let mut pairs = 1usize;
        while log_tail(pairs) > ln_eps {
            pairs += 1;
            if 2 * (pairs - 1) > policy.hard_max {
                return Err(CphError::CutoffExceedsHardMax {
                    state: "squeezed vacuum",
                    required: 2 * (pairs - 1),
                    hard_max: policy.hard_max,
                });
            }
        }
        let cutoff = policy.finish("squeezed vacuum", 2 * (pairs - 1))?;
        (cutoff, log_tail(cutoff / 2 + 1).exp())
    };
    let amplitudes = (0..=cutoff)
        .map(|n| {
            if n % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            let m = n / 2;
            let modulus = (0.5 * log_factorial(n) + xlogy(m, ln_tanh)
                - m as f64 * std::f64::consts::LN_2
                - log_factorial(m)
                - 0.5 * ln_cosh)
                .exp();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * modulus, 0.0)
        })
        .collect();
    Ok(FockVector {
        amplitudes,
        tail_bound,
    })
}

/// Bose-Einstein statistics with mean `nbar`.
pub fn thermal_distribution(nbar: f64, policy: &CutoffPolicy) -> Result<PhotonDistribution> {
    check_finite("nbar", nbar)?;
    if nbar < 0.0 {
        return Err(CphError::InvalidParameter {
            name: "nbar",
            value: nbar,
            reason: "must be nonnegative",
        });
    }
    policy.check_flux("thermal state", nbar)?;
    if nbar == 0.0 {
        let cutoff = policy.finish("thermal state", 0)?;
        let mut probs = vec![0.0; cutoff + 1];
        probs[0] = 1.0;
        return Ok(PhotonDistribution {
            probs,
            tail_bound: 0.0,
        });
    }
    // P(n >= c + 1) = q^{c+1} exactly.
    let ln_q = (nbar / (1.0 + nbar)).ln();
    let needed = (policy.tail_epsilon.ln() / ln_q).ceil().max(1.0) as usize;
    if needed - 1 > policy.hard_max {
        return Err(CphError::CutoffExceedsHardMax {
            state: "thermal state",
            required: needed - 1,
            hard_max: policy.hard_max,
        });
    }
    let cutoff = policy.finish("thermal state", needed - 1)?;
    let ln_norm = -(1.0 + nbar).ln();
    let probs = (0..=cutoff)
        .map(|n| (n as f64 * ln_q + ln_norm).exp())
        .collect();
    Ok(PhotonDistribution {
        probs,
        tail_bound: ((cutoff + 1) as f64 * ln_q).exp(),
    })
}

/// Poisson statistics with the given mean; the number statistics of a
/// coherent state.
pub fn poisson_distribution(mean: f64, policy: &CutoffPolicy) -> Result<PhotonDistribution> {
    check_finite("mean", mean)?;
    if mean < 0.0 {
        return Err(CphError::InvalidParameter {
            name: "mean",
            value: mean,
            reason: "must be nonnegative",
        });
    }
    let (cutoff, tail_bound) = poisson_cutoff(mean, policy, "poisson distribution")?;
    let ln_mean = mean.ln();
    let probs = (0..=cutoff)
        .map(|n| {
            if mean == 0.0 {
                return if n == 0 { 1.0 } else { 0.0 };
            }
            (-mean + xlogy(n, ln_mean) - log_factorial(n)).exp()
        })
        .collect();
    Ok(PhotonDistribution { probs, tail_bound })
}
