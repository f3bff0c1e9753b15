//! Finite-volume log-partition function `Φ_Λ`, its gradient (macroscopic
//! moments) and Hessian (scaled covariance of `(N, P, H)`).
//!
//! Evaluation strategy: the velocity integrals factorize analytically into
//! the kinetic factor `K(λ, β)`; configurational integrals `Q_n` are exact
//! for `n <= 1`, deterministic radial quadrature for `n = 2`, and Monte Carlo
//! with frozen uniform position samples for `n >= 3`. Freezing the samples
//! makes `Φ̂` a smooth deterministic function of the parameters, so gradients
//! share randomness with values and Newton solvers see a consistent surface.

mod gcmc;
mod series;

pub use gcmc::{GcConfig, GcSampler, GcState, GcmcOpts};
pub use series::GrandPartition;

use serde::{Deserialize, Serialize};

use crate::domain::{norm3_sq, BoxDomain};
use crate::error::{Error, Result};
use crate::feasible_set::MacroState;
use crate::potentials::PairPotential;

/// Dual (thermodynamic) parameters `(μ, λ, β)` in the domain
/// `𝕀 = ℝ × ℝ³ × ℝ_{<0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    pub mu: f64,
    pub lambda: [f64; 3],
    pub beta: f64,
}

impl ThermoParams {
    pub fn new(mu: f64, lambda: [f64; 3], beta: f64) -> Result<Self> {
        if !(beta < 0.0) {
            return Err(Error::domain(format!(
                "beta must be negative (partition function diverges otherwise), got {beta}"
            )));
        }
        Ok(ThermoParams { mu, lambda, beta })
    }

    pub fn from_vec5(v: [f64; 5]) -> Self {
        ThermoParams { mu: v[0], lambda: [v[1], v[2], v[3]], beta: v[4] }
    }

    pub fn as_vec5(&self) -> [f64; 5] {
        [self.mu, self.lambda[0], self.lambda[1], self.lambda[2], self.beta]
    }

    /// Euclidean pairing with a constraint triple, `θ · (ρ, u, E)`.
    pub fn dot_state(&self, x: &MacroState) -> f64 {
        self.mu * x.rho
            + self.lambda[0] * x.u[0]
            + self.lambda[1] * x.u[1]
            + self.lambda[2] * x.u[2]
            + self.beta * x.e
    }

    /// The kinetic shift `τ = -|λ|²/(2β)`; `Φ(μ, λ, β) = Φ(μ + τ, 0, β)`.
    pub fn tau(&self) -> f64 {
        -norm3_sq(self.lambda) / (2.0 * self.beta)
    }
}

/// `log ∫ exp(λ·p + β|p|²/2) dp = (3/2) log(2π/(-β)) - |λ|²/(2β)`.
pub fn log_kinetic_factor(lambda: [f64; 3], beta: f64) -> Result<f64> {
    if !(beta < 0.0) {
        return Err(Error::domain(format!("kinetic factor requires beta < 0, got {beta}")));
    }
    Ok(1.5 * (2.0 * std::f64::consts::PI / (-beta)).ln() + norm3_sq(lambda) / (2.0 * (-beta)))
}

/// The single-particle velocity integral `∫ exp(λ·p + β|p|²/2) dp` over ℝ³.
pub fn kinetic_factor(lambda: [f64; 3], beta: f64) -> Result<f64> {
    Ok(log_kinetic_factor(lambda, beta)?.exp())
}

/// How a [`PartitionEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    /// Closed form (ideal gas).
    Exact,
    /// Series truncated at `n <= 2`: deterministic quadrature only.
    Quadrature,
    /// Series with Monte Carlo configurational integrals.
    MonteCarlo,
}

/// Standard errors attached to a [`PartitionEstimate`] (zero on the
/// deterministic paths).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionErrors {
    pub phi: f64,
    pub grad: [f64; 5],
}

/// Value, gradient and (optional) Hessian of `Φ_Λ` at one parameter point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub phi: f64,
    /// `(∂_μ, ∂_λ1, ∂_λ2, ∂_λ3, ∂_β) Φ_Λ = (ρ, u, E)`.
    pub grad: [f64; 5],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hessian: Option<[[f64; 5]; 5]>,
    pub stat_error: PartitionErrors,
    /// Truncation order of the particle-number series.
    pub n_max: usize,
    /// Certified bound on the dropped series tail (absolute, on `Z`).
    pub tail_bound: f64,
    pub method: EvalMethod,
}

impl PartitionEstimate {
    pub fn macro_state(&self) -> MacroState {
        MacroState { rho: self.grad[0], u: [self.grad[1], self.grad[2], self.grad[3]], e: self.grad[4] }
    }
}

/// Budgets and tolerances for partition-function evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOpts {
    /// Absolute bound required of the certified series tail.
    pub tail_eps: f64,
    /// Hard cap on the truncation order.
    pub n_cap: usize,
    /// Monte Carlo samples per particle number (split into `batches`).
    pub samples_per_n: usize,
    /// Independent sample batches used for standard errors.
    pub batches: usize,
    pub seed: u64,
    /// Refuse evaluations with `beta > beta_max`; estimator variance near
    /// the `β = 0` boundary is uncontrolled.
    pub beta_max: f64,
}

impl Default for PartitionOpts {
    fn default() -> Self {
        PartitionOpts {
            tail_eps: 1e-10,
            n_cap: 256,
            samples_per_n: 32_768,
            batches: 8,
            seed: 1,
            beta_max: -1e-3,
        }
    }
}

/// Macroscopic moments `(ρ, u, E) = ∇Φ_Λ` with their standard errors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Moments {
    pub state: MacroState,
    pub std_error: [f64; 5],
}

/// Evaluate `Φ_Λ` (with gradient) at `params`. One-shot convenience around
/// [`GrandPartition`]; reuse the context when evaluating repeatedly.
pub fn log_partition(
    potential: &PairPotential,
    bx: &BoxDomain,
    params: ThermoParams,
    opts: &PartitionOpts,
) -> Result<PartitionEstimate> {
    GrandPartition::new(potential, bx, opts.clone())?.eval(params, false)
}

/// The macroscopic moments `(ρ, u, E)` at `params`.
pub fn moments(
    potential: &PairPotential,
    bx: &BoxDomain,
    params: ThermoParams,
    opts: &PartitionOpts,
) -> Result<Moments> {
    let est = log_partition(potential, bx, params, opts)?;
    Ok(Moments { state: est.macro_state(), std_error: est.stat_error.grad })
}

/// The `5×5` Hessian of `Φ_Λ`: covariance of `(N, P, H)` divided by `|Λ|`.
pub fn hessian(
    potential: &PairPotential,
    bx: &BoxDomain,
    params: ThermoParams,
    opts: &PartitionOpts,
) -> Result<[[f64; 5]; 5]> {
    let est = GrandPartition::new(potential, bx, opts.clone())?.eval(params, true)?;
    Ok(est.hessian.expect("hessian requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn kinetic_factor_matches_gaussian_quadrature() {
        // 3D Gaussian oracle: product of 1D adaptive quadratures
        let oracle = |lambda: [f64; 3], beta: f64| -> f64 {
            let mut total = 1.0;
            for l in lambda {
                let f = move |p: f64| (l * p + beta * p * p / 2.0).exp();
                let (v, _) = crate::quad::integrate(f, -40.0, 40.0, 1e-13, 1e-13);
                total *= v;
            }
            total
        };
        assert_abs_diff_eq!(kinetic_factor([0.0; 3], -2.0 * PI).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            kinetic_factor([0.0; 3], -1.0).unwrap(),
            (2.0 * PI).powf(1.5),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            kinetic_factor([0.0; 3], -1.0).unwrap(),
            oracle([0.0; 3], -1.0),
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            kinetic_factor([1.0, 0.0, 0.0], -1.0).unwrap(),
            (2.0 * PI).powf(1.5) * 0.5f64.exp(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            kinetic_factor([1.0, 0.0, 0.0], -1.0).unwrap(),
            oracle([1.0, 0.0, 0.0], -1.0),
            epsilon = 1e-7
        );
    }

    #[test]
    fn kinetic_factor_domain() {
        assert!(kinetic_factor([0.0; 3], 0.0).is_err());
        assert!(kinetic_factor([0.0; 3], 1.0).is_err());
    }

    #[test]
    fn thermo_params_validation() {
        assert!(ThermoParams::new(0.0, [0.0; 3], -1.0).is_ok());
        assert!(ThermoParams::new(0.0, [0.0; 3], 0.0).is_err());
        assert!(ThermoParams::new(0.0, [0.0; 3], f64::NAN).is_err());
    }
}
