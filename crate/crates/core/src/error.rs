use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CphError {
    /// The analytic tail bound could not be pushed below `tail_epsilon` without
    /// exceeding the policy's hard ceiling on the Fock cutoff.
    #[error(
        "{state}: required cutoff {required} exceeds hard_max {hard_max} \
         (lower the flux or raise hard_max)"
    )]
    CutoffExceedsHardMax {
        state: &'static str,
        required: usize,
        hard_max: usize,
    },

    #[error("invalid cutoff policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("index ({n1}, {n2}) outside cutoffs ({cutoff1}, {cutoff2})")]
    IndexOutOfCutoff {
        n1: usize,
        n2: usize,
        cutoff1: usize,
        cutoff2: usize,
    },

    #[error("ill-conditioned polynomial fit: Vandermonde condition number {condition:.3e}")]
    IllConditionedFit { condition: f64 },

    #[error(
        "Newton refinement did not converge for ({n1}, {n2}) from seed gamma={gamma:.6}, \
         phi={phi:.6}: relative residual {residual:.3e}"
    )]
    NoConvergence {
        n1: usize,
        n2: usize,
        gamma: f64,
        phi: f64,
        residual: f64,
    },

    #[error(
        "root collision for ({n1}, {n2}): solutions at (gamma={gamma_a:.9}, phi={phi_a:.9}) and \
         (gamma={gamma_b:.9}, phi={phi_b:.9}) coincide"
    )]
    RootCollision {
        n1: usize,
        n2: usize,
        gamma_a: f64,
        phi_a: f64,
        gamma_b: f64,
        phi_b: f64,
    },

    #[error(
        "correlation of order ({m}, {n}) undefined: mean photon number of a measured mode is zero"
    )]
    ZeroMeanDenominator { m: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, CphError>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CphError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CphError::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}
