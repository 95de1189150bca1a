//! Parameter schedules for the discrete iteration and numeric checks of the
//! convergence-theorem hypotheses.
//!
//! A schedule term has the closed form `offset + coeff * n^exponent` with
//! `n >= 1`, which covers constants, power growth/decay and products like
//! `1/n^2` used in the summability examples.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};

/// `s_n = offset + coeff * n^exponent`, indexed from `n = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSeq {
    #[serde(default)]
    pub offset: f64,
    pub coeff: f64,
    #[serde(default)]
    pub exponent: f64,
}

impl PowerSeq {
    pub fn constant(c: f64) -> Self {
        PowerSeq {
            offset: 0.0,
            coeff: c,
            exponent: 0.0,
        }
    }

    pub fn value(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.offset + self.coeff * (n as f64).powf(self.exponent)
    }
}

/// How `lambda_n` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    Explicit(PowerSeq),
    /// `lambda_n = product / beta_n`, keeping `lambda_n beta_n` pinned.
    CoupledProduct { product: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub beta: PowerSeq,
    pub lambda: LambdaRule,
}

impl Schedule {
    /// Constant `lambda` and `beta`.
    pub fn constant(lambda: f64, beta: f64) -> Self {
        Schedule {
            beta: PowerSeq::constant(beta),
            lambda: LambdaRule::Explicit(PowerSeq::constant(lambda)),
        }
    }

    /// `beta_n = beta0 + n^p`, `lambda_n beta_n = rho / l` pinned.
    ///
    /// With `l = 0` (zero lower-level operator) the product is just `rho`.
    pub fn coupled_growth(rho: f64, l: f64, beta0: f64, p: f64) -> Self {
        let product = if l > 0.0 { rho / l } else { rho };
        Schedule {
            beta: PowerSeq {
                offset: beta0,
                coeff: 1.0,
                exponent: p,
            },
            lambda: LambdaRule::CoupledProduct { product },
        }
    }

    pub fn beta(&self, n: usize) -> f64 {
        self.beta.value(n)
    }

    pub fn lambda(&self, n: usize) -> f64 {
        match self.lambda {
            LambdaRule::Explicit(seq) => seq.value(n),
            LambdaRule::CoupledProduct { product } => product / self.beta(n),
        }
    }

    pub fn product(&self, n: usize) -> f64 {
        self.lambda(n) * self.beta(n)
    }

    /// Positivity and the step bound `lambda_n beta_n L < 1` over a horizon.
    pub fn validate(&self, l: f64, horizon: usize) -> Result<()> {
        for n in 1..=horizon.max(1) {
            let (lam, bet) = (self.lambda(n), self.beta(n));
            if lam <= 0.0 || bet <= 0.0 {
                return Err(SolverError::InvalidParameter(format!(
                    "schedule not positive at n = {n}: lambda = {lam}, beta = {bet}"
                )));
            }
            if lam * bet * l >= 1.0 {
                return Err(SolverError::InvalidParameter(format!(
                    "step bound violated at n = {n}: lambda * beta * L = {} >= 1",
                    lam * bet * l
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Constant,
    Decreasing,
}

/// Numeric witnesses for the convergence-theorem hypotheses over a finite
/// horizon, plus the derived pass/fail flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub horizon: usize,
    pub max_product_l: f64,
    pub min_lambda: f64,
    pub lambda_at_horizon: f64,
    pub beta_at_horizon: f64,
    pub beta_trend: Trend,
    pub partial_sum_product: f64,
    pub partial_sum_product_half: f64,
    /// Step bound: `0 < lambda_n beta_n L < 1` over the horizon.
    pub step_bound_ok: bool,
    /// Heuristic for `liminf lambda_n > 0`: the late-window ratio
    /// `lambda(h) / lambda(h/4)` stays near 1.
    pub liminf_lambda_positive: bool,
    /// Heuristic for `beta_n -> infinity`: still growing late in the horizon.
    pub beta_to_infinity: bool,
    /// Heuristic for `sum lambda_n beta_n < infinity`: the second half of the
    /// horizon contributes under 1% of the partial sum.
    pub product_summable: bool,
}

/// Evaluate the first `horizon` schedule terms and report which printed
/// hypotheses they satisfy numerically.
pub fn check_schedule(sched: &Schedule, l: f64, horizon: usize) -> ConditionReport {
    assert!(horizon >= 1);
    let mut max_product_l = f64::NEG_INFINITY;
    let mut min_lambda = f64::INFINITY;
    let mut sum = 0.0;
    let mut sum_half = 0.0;
    for n in 1..=horizon {
        let prod = sched.product(n);
        max_product_l = max_product_l.max(prod * l);
        min_lambda = min_lambda.min(sched.lambda(n));
        sum += prod;
        if n <= horizon / 2 {
            sum_half = sum;
        }
    }
    let quarter = (horizon / 4).max(1);
    let lam_h = sched.lambda(horizon);
    let lam_q = sched.lambda(quarter);
    let beta_h = sched.beta(horizon);
    let beta_q = sched.beta(quarter);
    let beta_1 = sched.beta(1);
    let beta_trend = if beta_h > beta_1 {
        Trend::Increasing
    } else if beta_h < beta_1 {
        Trend::Decreasing
    } else {
        Trend::Constant
    };
    ConditionReport {
        horizon,
        max_product_l,
        min_lambda,
        lambda_at_horizon: lam_h,
        beta_at_horizon: beta_h,
        beta_trend,
        partial_sum_product: sum,
        partial_sum_product_half: sum_half,
        step_bound_ok: max_product_l < 1.0 && sched.product(horizon) > 0.0,
        liminf_lambda_positive: lam_h > 0.0 && lam_h >= 0.95 * lam_q,
        beta_to_infinity: beta_h > beta_1 && beta_h >= 1.05 * beta_q,
        product_summable: horizon >= 4 && (sum - sum_half) <= 0.01 * sum,
    }
}
