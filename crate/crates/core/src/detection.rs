//! Multiplexed click detection and phase-scan experiments.
//!
//! A detector array splits its input evenly over `k` on/off detectors, each
//! firing with efficiency `η`. Upstream transmission folds into `η`: thinning
//! the photon statistics by `η` and then detecting ideally gives the same
//! click statistics.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::correlations::{classical_floor, g_mn};
use crate::error::{check_finite, check_unit_interval, CphError, Result};
use crate::fock::{log_binomial, xlogy, CutoffPolicy};
use crate::optics::{interfere, joint_distribution, mean_photon, JointDistribution, Mode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorArray {
    k: usize,
    eta: f64,
}

impl DetectorArray {
    pub fn new(k: usize, eta: f64) -> Result<Self> {
        if k == 0 {
            return Err(CphError::InvalidConfig(
                "a detector array needs at least one detector".into(),
            ));
        }
        check_unit_interval("eta", eta)?;
        Ok(Self { k, eta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// How one output mode is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorModel {
    /// `k` on/off detectors behind a balanced split.
    Multiplexed(DetectorArray),
    /// Photon-number-resolving detection with efficiency `η` (the `k → ∞`
    /// limit of a multiplexed array).
    NumberResolving { eta: f64 },
    /// Mode is not post-selected; every photon number is accepted.
    Unmonitored,
}

impl DetectorModel {
    pub fn multiplexed(k: usize, eta: f64) -> Result<Self> {
        Ok(Self::Multiplexed(DetectorArray::new(k, eta)?))
    }

    pub fn number_resolving(eta: f64) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        Ok(Self::NumberResolving { eta })
    }

    pub fn ideal() -> Self {
        Self::NumberResolving { eta: 1.0 }
    }

    /// Efficiency applied to incident photons; 1 for an unmonitored mode.
    pub fn efficiency(&self) -> f64 {
        match self {
            Self::Multiplexed(a) => a.eta,
            Self::NumberResolving { eta } => *eta,
            Self::Unmonitored => 1.0,
        }
    }

    /// Largest click number this model can report, if bounded.
    pub fn max_clicks(&self) -> Option<usize> {
        match self {
            Self::Multiplexed(a) => Some(a.k),
            _ => None,
        }
    }

    /// `P(c | n)` for `n = 0..=max_n`.
    pub fn click_column(&self, c: usize, max_n: usize) -> Vec<f64> {
        match self {
            Self::Multiplexed(a) => click_column(c, max_n, a),
            _ => (0..=max_n).map(|n| self.click_probability(c, n)).collect(),
        }
    }

    /// `P(c clicks | n photons)`. For an unmonitored mode this is 1.
    pub fn click_probability(&self, c: usize, n: usize) -> f64 {
        match self {
            Self::Multiplexed(a) => click_probability(c, n, a),
            Self::NumberResolving { eta } => {
                if c > n {
                    0.0
                } else {
                    (log_binomial(n, c) + xlogy(c, eta.ln()) + xlogy(n - c, (1.0 - eta).ln())).exp()
                }
            }
            Self::Unmonitored => 1.0,
        }
    }
}

/// Probability that `n` photons produce exactly `c` clicks on the array.
/// Equals `C(k,c) Σ_j (−1)^j C(c,j) (η(c−j)/k + 1 − η)^n`, evaluated without
/// the alternating sum.
pub fn click_probability(c: usize, n: usize, array: &DetectorArray) -> f64 {
    click_column(c, n, array)[n]
}

/// `P(c | n)` for `n = 0..=max_n`. Photons arrive one at a time; each lands
/// on a uniformly chosen detector and fires it with probability `η`.
pub fn click_column(c: usize, max_n: usize, array: &DetectorArray) -> Vec<f64> {
    let (k, eta) = (array.k, array.eta);
    let mut lit = vec![0.0; k.min(max_n) + 1];
    lit[0] = 1.0;
    let mut column = Vec::with_capacity(max_n + 1);
    column.push(if c == 0 { 1.0 } else { 0.0 });
    for n in 1..=max_n {
        for l in (0..=k.min(n)).rev() {
            let stay = lit[l] * (1.0 - eta * (k - l) as f64 / k as f64);
            let fresh = if l > 0 {
                lit[l - 1] * eta * (k - l + 1) as f64 / k as f64
            } else {
                0.0
            };
            lit[l] = stay + fresh;
        }
        column.push(lit.get(c).copied().unwrap_or(0.0));
    }
    column
}

/// `Σ P(n1, n2) P(c1 | n1) P(c2 | n2)`.
pub fn coincidence_probability(
    dist: &JointDistribution,
    c1: usize,
    c2: usize,
    det1: &DetectorModel,
    det2: &DetectorModel,
) -> f64 {
    let (cut1, cut2) = dist.cutoffs();
    let p1 = det1.click_column(c1, cut1);
    let p2 = det2.click_column(c2, cut2);
    dist.iter()
        .filter(|(_, _, p)| *p != 0.0)
        .map(|(n1, n2, p)| p * p1[n1] * p2[n2])
        .sum()
}

/// `(max − min) / (max + min)`; 0 for an empty or all-zero curve.
pub fn visibility(curve: &[f64]) -> f64 {
    let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    if curve.is_empty() || max + min <= 0.0 {
        return 0.0;
    }
    (max - min) / (max + min)
}

/// One-sided significance of a count deficit below a classical floor,
/// assuming Poissonian counting noise on the floor.
pub fn bound_violation_sigma(probability: f64, classical_floor: f64, pulses: u64) -> f64 {
    let expected = probability * pulses as f64;
    let floor = classical_floor * pulses as f64;
    if expected < floor {
        (floor - expected) / floor.sqrt()
    } else {
        0.0
    }
}

/// Number of pulses for which a per-pulse `classical_floor` probability
/// yields `counts` expected events.
pub fn pulses_for_floor_counts(classical_floor: f64, counts: f64) -> Result<u64> {
    check_finite("floor_counts", counts)?;
    if !(counts > 0.0) {
        return Err(CphError::InvalidParameter {
            name: "floor_counts",
            value: counts,
            reason: "must be positive",
        });
    }
    if !(classical_floor > 0.0) {
        return Err(CphError::InvalidParameter {
            name: "classical_floor",
            value: classical_floor,
            reason: "must be positive to fix a pulse count",
        });
    }
    let pulses = (counts / classical_floor).round();
    if !(pulses >= 1.0 && pulses < u64::MAX as f64) {
        return Err(CphError::InvalidParameter {
            name: "floor_counts",
            value: counts,
            reason: "implies a pulse count outside 1..u64::MAX",
        });
    }
    Ok(pulses as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub n1: usize,
    pub n2: usize,
    pub gamma: f64,
    pub r: f64,
    pub detectors1: DetectorModel,
    pub detectors2: DetectorModel,
    pub phi_grid: Vec<f64>,
    pub pulses: Option<u64>,
    pub policy: CutoffPolicy,
}

impl ScanConfig {
    /// `points` phases evenly covering `[0, span)`.
    pub fn uniform_grid(points: usize, span: f64) -> Vec<f64> {
        (0..points)
            .map(|i| span * i as f64 / points as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("gamma", self.gamma)?;
        check_finite("r", self.r)?;
        if !(self.gamma > 0.0) {
            return Err(CphError::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                reason: "must be positive",
            });
        }
        if !(self.r > 0.0) {
            return Err(CphError::InvalidParameter {
                name: "r",
                value: self.r,
                reason: "must be positive",
            });
        }
        if self.phi_grid.is_empty() {
            return Err(CphError::InvalidConfig("phi grid is empty".into()));
        }
        if self.phi_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CphError::InvalidConfig(
                "phi grid must be strictly increasing".into(),
            ));
        }
        for (target, det, flag) in [
            (self.n1, &self.detectors1, "n1"),
            (self.n2, &self.detectors2, "n2"),
        ] {
            if let Some(k) = det.max_clicks() {
                if target > k {
                    return Err(CphError::InvalidConfig(format!(
                        "{flag} = {target} clicks needs at least {target} detectors, array has {k}"
                    )));
                }
            }
        }
        if self.pulses == Some(0) {
            return Err(CphError::InvalidConfig("pulses must be positive".into()));
        }
        Ok(())
    }

    /// Grid step if the grid is uniform and covers a whole number of
    /// `π`-periods, in which case the curve is treated as periodic.
    fn period_step(&self) -> Option<f64> {
        let grid = &self.phi_grid;
        if grid.len() < 3 {
            return None;
        }
        let step = grid[1] - grid[0];
        if grid
            .windows(2)
            .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0))
        {
            return None;
        }
        let span = grid[grid.len() - 1] - grid[0] + step;
        let periods = span / PI;
        ((periods - periods.round()).abs() < 1e-9 && periods.round() >= 1.0).then_some(step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub phi: f64,
    pub coincidence: f64,
    /// Mean photon number reaching each detector (after its efficiency).
    pub singles1: f64,
    pub singles2: f64,
    pub g_mn: f64,
    pub classical_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimumReport {
    pub index: usize,
    pub phi: f64,
    pub coincidence: f64,
    pub classical_floor: f64,
    pub g_mn: f64,
    /// `g − 1`; negative below the classical bound.
    pub g_margin: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub visibility: f64,
    pub minima: Vec<MinimumReport>,
}

impl ScanResult {
    pub fn coincidences(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.coincidence).collect()
    }

    /// Lowest point of the scanned curve.
    pub fn deepest(&self) -> Option<&ScanPoint> {
        self.points
            .iter()
            .min_by(|a, b| a.coincidence.total_cmp(&b.coincidence))
    }

    /// Recomputes the significance at every minimum for `pulses` pump pulses.
    pub fn set_pulses(&mut self, pulses: u64) {
        for m in &mut self.minima {
            m.sigma = Some(bound_violation_sigma(
                m.coincidence,
                m.classical_floor,
                pulses,
            ));
        }
    }
}

/// Strict local minima of `curve`; neighbours wrap around when `periodic`.
/// A curve whose total variation is at rounding level has none.
pub fn local_minima(curve: &[f64], periodic: bool) -> Vec<usize> {
    let n = curve.len();
    let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    if n < 3 || max - min <= 1e-9 * max.abs() {
        return Vec::new();
    }
    (0..n)
        .filter(|&i| {
            let (prev, next) = if periodic {
                ((i + n - 1) % n, (i + 1) % n)
            } else if i == 0 || i == n - 1 {
                return false;
            } else {
                (i - 1, i + 1)
            };
            curve[i] < curve[prev] && curve[i] <= curve[next]
        })
        .collect()
}

fn scan_point(config: &ScanConfig, phi: f64) -> Result<ScanPoint> {
    let magnitude = (config.gamma * config.r).sqrt();
    let floor = config.policy.min_cutoff().max(config.n1 + config.n2);
    let policy = config.policy.with_min_cutoff(floor);
    let dist = joint_distribution(&interfere(magnitude, phi, config.r, &policy)?);
    let (det1, det2) = (&config.detectors1, &config.detectors2);
    Ok(ScanPoint {
        phi,
        coincidence: coincidence_probability(&dist, config.n1, config.n2, det1, det2),
        singles1: det1.efficiency() * mean_photon(&dist, Mode::One),
        singles2: det2.efficiency() * mean_photon(&dist, Mode::Two),
        g_mn: g_mn(&dist, config.n1, config.n2)?.value,
        classical_floor: classical_floor(&dist, config.n1, config.n2, det1, det2)?,
    })
}

/// Simulates the coincidence curve over `config.phi_grid`.
pub fn phase_scan(config: &ScanConfig) -> Result<ScanResult> {
    config.validate()?;
    let points = config
        .phi_grid
        .par_iter()
        .map(|&phi| scan_point(config, phi))
        .collect::<Result<Vec<_>>>()?;
    let curve: Vec<f64> = points.iter().map(|p| p.coincidence).collect();
    let minima = local_minima(&curve, config.period_step().is_some())
        .into_iter()
        .map(|i| {
            let p = &points[i];
            MinimumReport {
                index: i,
                phi: p.phi,
                coincidence: p.coincidence,
                classical_floor: p.classical_floor,
                g_mn: p.g_mn,
                g_margin: p.g_mn - 1.0,
                sigma: config
                    .pulses
                    .map(|n| bound_violation_sigma(p.coincidence, p.classical_floor, n)),
            }
        })
        .collect();
    Ok(ScanResult {
        visibility: visibility(&curve),
        points,
        minima,
    })
}
