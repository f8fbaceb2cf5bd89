//! Two-mode states, the beamsplitter, and joint photon-number statistics.
//!
//! Beamsplitter convention: with transmissivity `t`, the input creation
//! operators map onto the outputs as
//!
//! ```text
//! a† → √t c† + √(1−t) d†
//! b† → √(1−t) c† − √t d†
//! ```
//!
//! which at `t = 1/2` is the real symmetric map `a → (c+d)/√2`,
//! `b → (c−d)/√2`. Under this convention a coherent state `|α>` in `a` leaves
//! as `|α/√2>_c |α/√2>_d`, so the vacuum-SPDC amplitude is
//! `e^{−|α|²/2} (α/√2)^{N1+N2} / √(N1! N2!)`.

use num_complex::Complex64;

use crate::error::{check_finite, check_unit_interval, CphError, Result};
use crate::fock::{log_binomial, log_factorial, xlogy, FockVector, PhotonDistribution};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabels {
    /// Beamsplitter inputs `a` (coherent) and `b` (SPDC).
    Input,
    /// Beamsplitter outputs `c` and `d`.
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
}

/// Joint amplitude grid over `(n1, n2)`, row-major in `n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    grid: Vec<Complex64>,
    dim1: usize,
    dim2: usize,
    labels: ModeLabels,
    tail_bound: f64,
}

impl TwoModeState {
    pub fn cutoffs(&self) -> (usize, usize) {
        (self.dim1 - 1, self.dim2 - 1)
    }

    pub fn labels(&self) -> ModeLabels {
        self.labels
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Amplitude at `(n1, n2)`, zero outside the grid.
    pub fn get(&self, n1: usize, n2: usize) -> Complex64 {
        if n1 < self.dim1 && n2 < self.dim2 {
            self.grid[n1 * self.dim2 + n2]
        } else {
            ZERO
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Squared norm of the fixed-total-photon-number block `n1 + n2 = total`.
    pub fn sector_norm_sqr(&self, total: usize) -> f64 {
        (0..=total)
            .map(|n1| self.get(n1, total - n1).norm_sqr())
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let dim2 = self.dim2;
        self.grid
            .iter()
            .enumerate()
            .map(move |(i, a)| (i / dim2, i % dim2, *a))
    }
}

/// Nonnegative joint photon-number statistics over `(n1, n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    probs: Vec<f64>,
    dim1: usize,
    dim2: usize,
    tail_bound: f64,
}

impl JointDistribution {
    /// Builds a distribution from a row-major table `rows[n1][n2]`.
    pub fn from_rows(rows: &[Vec<f64>], tail_bound: f64) -> Result<Self> {
        let dim1 = rows.len();
        let dim2 = rows.first().map_or(0, Vec::len);
        if dim1 == 0 || dim2 == 0 || rows.iter().any(|r| r.len() != dim2) {
            return Err(CphError::InvalidConfig(
                "joint distribution rows must be nonempty and rectangular".into(),
            ));
        }
        if rows
            .iter()
            .flatten()
            .any(|p| !(*p >= 0.0) || !p.is_finite())
        {
            return Err(CphError::InvalidConfig(
                "joint distribution entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            probs: rows.concat(),
            dim1,
            dim2,
            tail_bound,
        })
    }

    /// Independent modes with the given marginals.
    pub fn product(first: &PhotonDistribution, second: &PhotonDistribution) -> Self {
        let (p1, p2) = (first.probs(), second.probs());
        let probs = p1
            .iter()
            .flat_map(|a| p2.iter().map(move |b| a * b))
            .collect();
        Self {
            probs,
            dim1: p1.len(),
            dim2: p2.len(),
            tail_bound: first.tail_bound() + second.tail_bound(),
        }
    }

    /// Convex combination `Σ w_i D_i`; weights are normalised internally.
    pub fn mixture(components: &[(f64, JointDistribution)]) -> Result<Self> {
        let total_weight: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.is_empty() || components.iter().any(|(w, _)| *w < 0.0) || total_weight <= 0.0
        {
            return Err(CphError::InvalidConfig(
                "mixture needs nonnegative weights with a positive sum".into(),
            ));
        }
        let dim1 = components.iter().map(|(_, d)| d.dim1).max().unwrap();
        let dim2 = components.iter().map(|(_, d)| d.dim2).max().unwrap();
        let mut probs = vec![0.0; dim1 * dim2];
        let mut tail_bound = 0.0;
        for (w, d) in components {
            let w = w / total_weight;
            tail_bound += w * d.tail_bound;
            for (n1, n2, p) in d.iter() {
                probs[n1 * dim2 + n2] += w * p;
            }
        }
        Ok(Self {
            probs,
            dim1,
            dim2,
            tail_bound,
        })
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.dim1 - 1, self.dim2 - 1)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn get(&self, n1: usize, n2: usize) -> f64 {
        if n1 < self.dim1 && n2 < self.dim2 {
            self.probs[n1 * self.dim2 + n2]
        } else {
            0.0
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let dim2 = self.dim2;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (i / dim2, i % dim2, *p))
    }

    pub fn marginal(&self, mode: Mode) -> PhotonDistribution {
        let probs = match mode {
            Mode::One => (0..self.dim1)
                .map(|n1| {
                    self.probs[n1 * self.dim2..(n1 + 1) * self.dim2]
                        .iter()
                        .sum()
                })
                .collect(),
            Mode::Two => (0..self.dim2)
                .map(|n2| {
                    (0..self.dim1)
                        .map(|n1| self.probs[n1 * self.dim2 + n2])
                        .sum()
                })
                .collect(),
        };
        PhotonDistribution::from_probs(probs, self.tail_bound)
    }
}

/// Beamsplitter with power transmissivity `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamsplitterSpec {
    transmissivity: f64,
}

impl BeamsplitterSpec {
    pub fn new(transmissivity: f64) -> Result<Self> {
        check_unit_interval("transmissivity", transmissivity)?;
        Ok(Self { transmissivity })
    }

    pub fn balanced() -> Self {
        Self {
            transmissivity: 0.5,
        }
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }
}

impl Default for BeamsplitterSpec {
    fn default() -> Self {
        Self::balanced()
    }
}

/// Product state `|a> ⊗ |b>` on the beamsplitter inputs.
pub fn tensor(a: &FockVector, b: &FockVector) -> TwoModeState {
    let (dim1, dim2) = (a.cutoff() + 1, b.cutoff() + 1);
    let grid = a
        .amplitudes()
        .iter()
        .flat_map(|x| b.amplitudes().iter().map(move |y| x * y))
        .collect();
    TwoModeState {
        grid,
        dim1,
        dim2,
        labels: ModeLabels::Input,
        tail_bound: a.tail_bound() + b.tail_bound(),
    }
}

/// Applies the beamsplitter to every input basis state by expanding
/// `(a†)^n1 (b†)^n2` into output monomials. The output grid spans every total
/// photon number representable at the input, so no amplitude is dropped.
pub fn beamsplitter(state: &TwoModeState, spec: &BeamsplitterSpec) -> TwoModeState {
    let t = spec.transmissivity;
    let (ln_t, ln_1mt) = (0.5 * t.ln(), 0.5 * (1.0 - t).ln());
    let (c1, c2) = state.cutoffs();
    let dim = c1 + c2 + 1;
    let mut out = vec![ZERO; dim * dim];

    for (n1, n2, amp) in state.iter() {
        if amp == ZERO {
            continue;
        }
        let total = n1 + n2;
        let norm_in = -0.5 * (log_factorial(n1) + log_factorial(n2));
        for j in 0..=n1 {
            // j photons of a† go to c†, n1 − j to d†
            let from_a = log_binomial(n1, j) + xlogy(j, ln_t) + xlogy(n1 - j, ln_1mt);
            for k in 0..=n2 {
                // k photons of b† go to c†, n2 − k to d† (each with a minus sign)
                let from_b = log_binomial(n2, k) + xlogy(k, ln_1mt) + xlogy(n2 - k, ln_t);
                let p = j + k;
                let q = total - p;
                let ln_coeff =
                    from_a + from_b + norm_in + 0.5 * (log_factorial(p) + log_factorial(q));
                let coeff = ln_coeff.exp();
                if coeff == 0.0 {
                    continue;
                }
                let signed = if (n2 - k) % 2 == 0 { coeff } else { -coeff };
                out[p * dim + q] += amp * signed;
            }
        }
    }

    TwoModeState {
        grid: out,
        dim1: dim,
        dim2: dim,
        labels: match state.labels {
            ModeLabels::Input => ModeLabels::Output,
            ModeLabels::Output => ModeLabels::Input,
        },
        tail_bound: state.tail_bound,
    }
}

/// `<N1, N2 | ψ>`.
pub fn amplitude(state: &TwoModeState, n1: usize, n2: usize) -> Result<Complex64> {
    let (cutoff1, cutoff2) = state.cutoffs();
    if n1 > cutoff1 || n2 > cutoff2 {
        return Err(CphError::IndexOutOfCutoff {
            n1,
            n2,
            cutoff1,
            cutoff2,
        });
    }
    Ok(state.get(n1, n2))
}

/// Closed-form `(N1, N2)` output amplitude for a coherent state on `a` and
/// vacuum on `b` at the balanced beamsplitter.
pub fn coherent_only_amplitude(magnitude: f64, phase: f64, n1: usize, n2: usize) -> Complex64 {
    let total = n1 + n2;
    if magnitude == 0.0 {
        return if total == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        };
    }
    let ln_mod = -0.5 * magnitude * magnitude
        + xlogy(total, (magnitude / std::f64::consts::SQRT_2).ln())
        - 0.5 * (log_factorial(n1) + log_factorial(n2));
    Complex64::from_polar(ln_mod.exp(), total as f64 * phase)
}

pub fn joint_distribution(state: &TwoModeState) -> JointDistribution {
    JointDistribution {
        probs: state.grid.iter().map(|a| a.norm_sqr()).collect(),
        dim1: state.dim1,
        dim2: state.dim2,
        tail_bound: state.tail_bound,
    }
}

/// `thinning[k][n] = C(n,k) η^k (1−η)^{n−k}`.
fn thinning_matrix(dim: usize, eta: f64) -> Vec<Vec<f64>> {
    let (ln_eta, ln_loss) = (eta.ln(), (1.0 - eta).ln());
    (0..dim)
        .map(|k| {
            (0..dim)
                .map(|n| {
                    if k > n {
                        0.0
                    } else {
                        (log_binomial(n, k) + xlogy(k, ln_eta) + xlogy(n - k, ln_loss)).exp()
                    }
                })
                .collect()
        })
        .collect()
}

/// Independent binomial thinning of each mode with transmissions `eta1`,
/// `eta2`.
pub fn loss_channel(dist: &JointDistribution, eta1: f64, eta2: f64) -> Result<JointDistribution> {
    check_unit_interval("eta1", eta1)?;
    check_unit_interval("eta2", eta2)?;
    let (dim1, dim2) = (dist.dim1, dist.dim2);
    let t1 = thinning_matrix(dim1, eta1);
    let t2 = thinning_matrix(dim2, eta2);

    // Thin mode 2 within each row, then mode 1 across rows.
    let mut half = vec![0.0; dim1 * dim2];
    for n1 in 0..dim1 {
        let row = &dist.probs[n1 * dim2..(n1 + 1) * dim2];
        for k2 in 0..dim2 {
            half[n1 * dim2 + k2] = (k2..dim2).map(|n2| row[n2] * t2[k2][n2]).sum();
        }
    }
    let mut probs = vec![0.0; dim1 * dim2];
    for k1 in 0..dim1 {
        for n1 in k1..dim1 {
            let w = t1[k1][n1];
            if w == 0.0 {
                continue;
            }
            for k2 in 0..dim2 {
                probs[k1 * dim2 + k2] += w * half[n1 * dim2 + k2];
            }
        }
    }
    Ok(JointDistribution {
        probs,
        dim1,
        dim2,
        tail_bound: dist.tail_bound,
    })
}

pub fn mean_photon(dist: &JointDistribution, mode: Mode) -> f64 {
    dist.marginal(mode).mean()
}

/// Full pipeline `coherent(|α|, φ) ⊗ squeezed(r) → balanced beamsplitter`.
pub fn interfere(
    magnitude: f64,
    phase: f64,
    r: f64,
    policy: &crate::fock::CutoffPolicy,
) -> Result<TwoModeState> {
    check_finite("r", r)?;
    let a = crate::fock::coherent_state(magnitude, phase, policy)?;
    let b = crate::fock::squeezed_vacuum(r, policy)?;
    Ok(beamsplitter(&tensor(&a, &b), &BeamsplitterSpec::balanced()))
}
