//! Correlated photon holes: parameter points `(γ, φ)` at which the
//! `(N1, N2)` output amplitude vanishes.
//!
//! Writing the inputs as `|α>|ξ_r>` with `α = |α| e^{iφ}`, only input terms
//! with `N − 2m` coherent photons and `2m` SPDC photons feed the output sector
//! `N = N1 + N2`, so
//!
//! ```text
//! A_{N1,N2} = G · Σ_m c_m u^m,   u = tanh(r) e^{−2iφ} / |α|²,
//! G = e^{−|α|²/2} |α|^N e^{iNφ} / √cosh r
//! ```
//!
//! exactly. The coefficients `c_m` are recovered numerically by sampling the
//! full simulation at roots of unity in `u`; their roots seed a damped Newton
//! refinement on the simulated amplitude itself.
//!
//! Under the beamsplitter convention of [`crate::optics`] no extra phase
//! offset enters the `u ↔ φ` map: `φ = −arg(u)/2 (mod π)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{check_finite, CphError, Result};
use crate::fock::CutoffPolicy;
use crate::optics::{amplitude, coherent_only_amplitude, interfere};

/// Relative cancellation required of a returned hole:
/// `|A|² ≤ RESIDUAL_THRESHOLD · |A_coherent-only|²`.
pub const RESIDUAL_THRESHOLD: f64 = 1e-16;

const MAX_NEWTON_ITERATIONS: usize = 100;
const MAX_FIT_CONDITION: f64 = 1e8;
const COLLISION_DISTANCE: f64 = 1e-6;
/// Squeezing used while sampling the polynomial; any `r > 0` gives the same
/// coefficients.
const FIT_SQUEEZING: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleSpec {
    n1: usize,
    n2: usize,
    r: f64,
    gamma_max: f64,
}

impl HoleSpec {
    pub const DEFAULT_R: f64 = 1e-4;
    pub const DEFAULT_GAMMA_MAX: f64 = 1e6;

    pub fn new(n1: usize, n2: usize, r: f64) -> Result<Self> {
        if n1 + n2 < 2 {
            return Err(CphError::InvalidConfig(format!(
                "holes need N1 + N2 >= 2, got ({n1}, {n2})"
            )));
        }
        check_finite("r", r)?;
        if r <= 0.0 {
            return Err(CphError::InvalidParameter {
                name: "r",
                value: r,
                reason: "squeezing must be positive",
            });
        }
        Ok(Self {
            n1,
            n2,
            r,
            gamma_max: Self::DEFAULT_GAMMA_MAX,
        })
    }

    pub fn with_gamma_max(mut self, gamma_max: f64) -> Result<Self> {
        if !(gamma_max > 0.0) {
            return Err(CphError::InvalidParameter {
                name: "gamma_max",
                value: gamma_max,
                reason: "must be positive",
            });
        }
        self.gamma_max = gamma_max;
        Ok(self)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn total(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    /// Coherent amplitude `|α| = √(γ r)`.
    pub fn magnitude(&self, gamma: f64) -> f64 {
        (gamma * self.r).sqrt()
    }

    fn policy(&self) -> CutoffPolicy {
        CutoffPolicy::default().with_min_cutoff(self.total())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleSolution {
    pub n1: usize,
    pub n2: usize,
    pub r: f64,
    /// `|α|² / r`.
    pub gamma: f64,
    /// Coherent-state phase in `[0, π)`.
    pub phi: f64,
    /// `|A_{N1,N2}|²` at the solution.
    pub residual: f64,
    pub root_index: usize,
}

impl HoleSolution {
    pub fn gamma_squared(&self) -> f64 {
        self.gamma * self.gamma
    }

    /// `|A|²` relative to the same sector without SPDC.
    pub fn relative_residual(&self) -> f64 {
        let reference =
            coherent_only_amplitude((self.gamma * self.r).sqrt(), 0.0, self.n1, self.n2);
        self.residual / reference.norm_sqr()
    }
}

/// `(N1, N2)` output amplitude of the full truncated simulation at
/// `|α|² = γ r`.
pub fn hole_amplitude(gamma: f64, phi: f64, spec: &HoleSpec) -> Result<Complex64> {
    check_finite("gamma", gamma)?;
    check_finite("phi", phi)?;
    if gamma <= 0.0 {
        return Err(CphError::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "must be positive",
        });
    }
    let out = interfere(spec.magnitude(gamma), phi, spec.r, &spec.policy())?;
    amplitude(&out, spec.n1, spec.n2)
}

/// `A_{N1,N2} / G` as a polynomial in `u`; `coefficients[m]` multiplies `u^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolePolynomial {
    n1: usize,
    n2: usize,
    coefficients: Vec<Complex64>,
    condition: f64,
}

impl HolePolynomial {
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Condition number of the sampling system the coefficients came from.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn evaluate(&self, u: Complex64) -> Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    /// Reduced variable `u = tanh(r) e^{−2iφ} / (γ r)`.
    pub fn reduced_variable(gamma: f64, phi: f64, r: f64) -> Complex64 {
        Complex64::from_polar(r.tanh() / (gamma * r), -2.0 * phi)
    }

    /// Prefactor `G` relating the polynomial to the simulated amplitude.
    pub fn global_factor(&self, gamma: f64, phi: f64, r: f64) -> Complex64 {
        let total = self.n1 + self.n2;
        let mean = gamma * r;
        let ln_mod = -0.5 * mean + 0.5 * total as f64 * mean.ln() - 0.5 * r.cosh().ln();
        Complex64::from_polar(ln_mod.exp(), total as f64 * phi)
    }

    /// `G · P(u)`: the amplitude the polynomial predicts.
    pub fn predicted_amplitude(&self, gamma: f64, phi: f64, r: f64) -> Complex64 {
        self.global_factor(gamma, phi, r) * self.evaluate(Self::reduced_variable(gamma, phi, r))
    }

    /// Roots via eigenvalues of the companion matrix of the monic polynomial.
    pub fn roots(&self) -> Vec<Complex64> {
        let degree = self.degree();
        if degree == 0 {
            return Vec::new();
        }
        let lead = self.coefficients[degree];
        let mut companion = DMatrix::<Complex64>::zeros(degree, degree);
        for i in 1..degree {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..degree {
            companion[(i, degree - 1)] = -self.coefficients[i] / lead;
        }
        companion
            .eigenvalues()
            .expect("complex Schur decomposition converges for small companion matrices")
            .iter()
            .copied()
            .collect()
    }
}

/// Samples the simulated amplitude at `⌊N/2⌋ + 1` points on the unit circle
/// in `u` and solves the Vandermonde system for the coefficients.
pub fn build_hole_polynomial(n1: usize, n2: usize) -> Result<HolePolynomial> {
    let spec = HoleSpec::new(n1, n2, FIT_SQUEEZING)?;
    let half = spec.total() / 2;
    let samples = half + 1;
    // |u| = 1 puts the samples on roots of unity
    let gamma = FIT_SQUEEZING.tanh() / FIT_SQUEEZING;

    let mut vandermonde = DMatrix::<Complex64>::zeros(samples, samples);
    let mut values = DVector::<Complex64>::zeros(samples);
    let shape = HolePolynomial {
        n1,
        n2,
        coefficients: Vec::new(),
        condition: 1.0,
    };
    for k in 0..samples {
        let phi = PI * k as f64 / samples as f64;
        let u = HolePolynomial::reduced_variable(gamma, phi, FIT_SQUEEZING);
        let mut power = Complex64::new(1.0, 0.0);
        for m in 0..samples {
            vandermonde[(k, m)] = power;
            power *= u;
        }
        values[k] =
            hole_amplitude(gamma, phi, &spec)? / shape.global_factor(gamma, phi, FIT_SQUEEZING);
    }

    let singular = vandermonde.clone().singular_values();
    let condition = singular.max() / singular.min();
    if !(condition <= MAX_FIT_CONDITION) {
        return Err(CphError::IllConditionedFit { condition });
    }
    let solution = vandermonde
        .lu()
        .solve(&values)
        .ok_or(CphError::IllConditionedFit {
            condition: f64::INFINITY,
        })?;

    let mut coefficients: Vec<Complex64> = solution.iter().copied().collect();
    let scale = coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
    while coefficients.len() > 1 && coefficients.last().unwrap().norm() <= 1e-12 * scale {
        coefficients.pop();
    }
    Ok(HolePolynomial {
        n1,
        n2,
        coefficients,
        condition,
    })
}

/// Central-difference derivative of `(Re A, Im A)` with respect to `(γ, φ)`.
pub fn jacobian(gamma: f64, phi: f64, spec: &HoleSpec) -> Result<Matrix2<f64>> {
    jacobian_with_steps(gamma, phi, spec, 1e-6 * gamma.max(1.0), 1e-6)
}

pub fn jacobian_with_steps(
    gamma: f64,
    phi: f64,
    spec: &HoleSpec,
    h_gamma: f64,
    h_phi: f64,
) -> Result<Matrix2<f64>> {
    // keep the lower γ probe positive
    let h_gamma = h_gamma.min(0.5 * gamma);
    let d_gamma = (hole_amplitude(gamma + h_gamma, phi, spec)?
        - hole_amplitude(gamma - h_gamma, phi, spec)?)
        / (2.0 * h_gamma);
    let d_phi = (hole_amplitude(gamma, phi + h_phi, spec)?
        - hole_amplitude(gamma, phi - h_phi, spec)?)
        / (2.0 * h_phi);
    Ok(Matrix2::new(d_gamma.re, d_phi.re, d_gamma.im, d_phi.im))
}

/// Reduces a phase to `[0, π)`, snapping values within rounding of `π` to 0.
pub fn reduce_phase(phi: f64) -> f64 {
    let reduced = phi.rem_euclid(PI);
    if PI - reduced < 1e-12 {
        0.0
    } else {
        reduced
    }
}

/// Distance between two phases on the circle of circumference `π`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn relative_residual(amplitude: Complex64, gamma: f64, spec: &HoleSpec) -> f64 {
    let reference = coherent_only_amplitude(spec.magnitude(gamma), 0.0, spec.n1, spec.n2);
    amplitude.norm_sqr() / reference.norm_sqr()
}

/// Damped Newton on `(Re A, Im A) = 0` over `(γ, φ)`.
fn refine(spec: &HoleSpec, gamma0: f64, phi0: f64) -> Result<(f64, f64, Complex64)> {
    let scale = coherent_only_amplitude(spec.magnitude(gamma0), 0.0, spec.n1, spec.n2).norm();
    let (mut gamma, mut phi) = (gamma0, phi0);
    let mut value = hole_amplitude(gamma, phi, spec)?;

    for _ in 0..MAX_NEWTON_ITERATIONS {
        if relative_residual(value, gamma, spec) <= 1e-30 {
            break;
        }
        let jac = jacobian(gamma, phi, spec)? / scale;
        let rhs = -Vector2::new(value.re, value.im) / scale;
        let Some(step) = jac.lu().solve(&rhs) else {
            break;
        };
        let mut damping = 1.0;
        let mut accepted = false;
        while damping >= 1e-8 {
            let g = gamma + damping * step[0];
            let p = phi + damping * step[1];
            if g > 0.0 {
                let candidate = hole_amplitude(g, p, spec)?;
                if candidate.norm() < value.norm() {
                    gamma = g;
                    phi = p;
                    value = candidate;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            // stalled at the rounding floor
            break;
        }
        if (damping * step[0]).abs() <= 1e-15 * gamma && (damping * step[1]).abs() <= 1e-15 {
            break;
        }
    }

    let residual = relative_residual(value, gamma, spec);
    if !(residual <= RESIDUAL_THRESHOLD) {
        return Err(CphError::NoConvergence {
            n1: spec.n1,
            n2: spec.n2,
            gamma: gamma0,
            phi: phi0,
            residual,
        });
    }
    Ok((gamma, reduce_phase(phi), value))
}

/// All holes of `spec` with `γ ≤ gamma_max`, sorted by `γ` then `φ`.
pub fn solve_holes(spec: &HoleSpec) -> Result<Vec<HoleSolution>> {
    let polynomial = build_hole_polynomial(spec.n1, spec.n2)?;
    let tanh_over_r = spec.r.tanh() / spec.r;

    let mut solutions = Vec::new();
    for u in polynomial.roots() {
        if u.norm() == 0.0 || !u.is_finite() {
            continue;
        }
        let gamma_seed = tanh_over_r / u.norm();
        let phi_seed = reduce_phase(-0.5 * u.arg());
        let (gamma, phi, value) = refine(spec, gamma_seed, phi_seed)?;
        if gamma > spec.gamma_max {
            continue;
        }
        solutions.push(HoleSolution {
            n1: spec.n1,
            n2: spec.n2,
            r: spec.r,
            gamma,
            phi,
            residual: value.norm_sqr(),
            root_index: 0,
        });
    }

    solutions.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.phi.total_cmp(&b.phi)));
    for (i, a) in solutions.iter().enumerate() {
        for b in &solutions[i + 1..] {
            if (a.gamma - b.gamma).abs() < COLLISION_DISTANCE
                && phase_distance(a.phi, b.phi) < COLLISION_DISTANCE
            {
                return Err(CphError::RootCollision {
                    n1: spec.n1,
                    n2: spec.n2,
                    gamma_a: a.gamma,
                    phi_a: a.phi,
                    gamma_b: b.gamma,
                    phi_b: b.phi,
                });
            }
        }
    }
    for (i, s) in solutions.iter_mut().enumerate() {
        s.root_index = i;
    }
    Ok(solutions)
}
