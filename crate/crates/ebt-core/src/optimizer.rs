//! Constrained rate maximization: pick (W, w̄) for EBT, or the integer W_c
//! for the conventional scheme, subject to min_θ ψ ≤ -d.
//!
//! The search exploits two monotonicity facts: ψ* strictly increases in w̄
//! for fixed W (so the best w̄ per W is the largest feasible one, found by
//! incrementing from 1), and once no w̄ is feasible for some W it never is
//! for any larger W (so the outer scan stops early).

use crate::error::{Error, Result};
use crate::outage::{
    derive_traffic_rates, feasibility_check, min_psi_conventional, minimize_psi, SlotDistribution,
    TrafficRates,
};
use crate::rate::{
    mean_rate_conventional, mean_rate_ebt_exact, mean_rate_ebt_quadrature, ConvPlan, EbtPlan,
    MeanSnr, RateValue, W_EXACT_MAX,
};

/// Full scenario description for optimization and simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    n_channels: u32,
    lambda: f64,
    preambles: u32,
    slots: SlotDistribution,
    mean_snr: MeanSnr,
    qos_exponent: f64,
}

impl SystemParams {
    /// `lambda` may be zero only for simulation (the analytical operations
    /// require positive traffic); `qos_exponent` is d > 0 with the outage
    /// target expressed as e^{-d}.
    pub fn new(
        n_channels: u32,
        lambda: f64,
        preambles: u32,
        slots: SlotDistribution,
        mean_snr: MeanSnr,
        qos_exponent: f64,
    ) -> Result<Self> {
        if n_channels < 1 {
            return Err(Error::Domain("channel pool N must be >= 1".into()));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Domain(format!("arrival rate must be finite and >= 0, got {lambda}")));
        }
        if preambles < 1 {
            return Err(Error::Domain("preamble pool must contain at least one preamble".into()));
        }
        if !qos_exponent.is_finite() || qos_exponent <= 0.0 {
            return Err(Error::Domain(format!(
                "QoS exponent d must be finite and > 0, got {qos_exponent}"
            )));
        }
        Ok(SystemParams { n_channels, lambda, preambles, slots, mean_snr, qos_exponent })
    }

    pub fn n_channels(&self) -> u32 {
        self.n_channels
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn preambles(&self) -> u32 {
        self.preambles
    }

    pub fn slots(&self) -> &SlotDistribution {
        &self.slots
    }

    pub fn mean_snr(&self) -> MeanSnr {
        self.mean_snr
    }

    pub fn qos_exponent(&self) -> f64 {
        self.qos_exponent
    }

    /// Derived Poisson intensities (λ0, λ1); errs when λ = 0.
    pub fn traffic_rates(&self) -> Result<TrafficRates> {
        derive_traffic_rates(self.lambda, self.preambles, &self.slots)
    }
}

/// Optimized EBT side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EbtOptimum {
    pub plan: EbtPlan,
    pub rate: RateValue,
    pub psi_star: f64,
    pub theta_star: f64,
}

/// Optimized conventional side (integer channel count).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvOptimum {
    pub channels: u32,
    pub rate: RateValue,
    pub psi_star: f64,
    pub theta_star: f64,
}

/// Outcome of an optimization run. `feasible` is false when even
/// W = w̄ = 1 violates the QoS constraint, in which case both sides are
/// absent. `psi_evaluations` counts minimize_psi calls (the paper bounds
/// it by N(N+1)/2).
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationOutcome {
    pub ebt: Option<EbtOptimum>,
    pub conventional: Option<ConvOptimum>,
    pub feasible: bool,
    pub psi_evaluations: u64,
}

/// Largest w̄ ∈ 1..=W with ψ*(W, w̄) ≤ -d, or None when even w̄ = 1
/// violates the constraint. Valid because ψ* strictly increases in w̄.
pub fn optimal_wbar_for_w(
    w: u32,
    rates: &TrafficRates,
    n_channels: u32,
    qos_exponent: f64,
) -> Option<u32> {
    optimal_wbar_counted(w, rates, n_channels, qos_exponent, &mut 0).map(|(wb, _)| wb)
}

fn optimal_wbar_counted(
    w: u32,
    rates: &TrafficRates,
    n_channels: u32,
    qos_exponent: f64,
    evals: &mut u64,
) -> Option<(u32, crate::outage::PsiResult)> {
    let mut best = None;
    for w_bar in 1..=w {
        *evals += 1;
        match minimize_psi(w, w_bar, rates, n_channels) {
            Ok(r) if r.psi_star <= -qos_exponent => best = Some((w_bar, r)),
            // First violation (including loss of the θ* >= 0 precondition)
            // ends the scan.
            _ => break,
        }
    }
    best
}

fn ranking_rate(plan: EbtPlan, mean_snr: MeanSnr) -> Result<RateValue> {
    if plan.w() <= W_EXACT_MAX {
        mean_rate_ebt_exact(plan, mean_snr)
    } else {
        mean_rate_ebt_quadrature(plan, mean_snr)
    }
}

/// Scan W = 1, 2, … collecting (W, w̄*(W)) pairs until the first W with no
/// feasible w̄, then return the pair with the highest mean rate. Ties keep
/// the smaller W.
pub fn optimize_ebt(params: &SystemParams) -> Result<OptimizationOutcome> {
    let rates = params.traffic_rates()?;
    let mut evals = 0u64;
    if !feasibility_check(&rates, params.n_channels(), params.qos_exponent()) {
        return Ok(OptimizationOutcome { ebt: None, conventional: None, feasible: false, psi_evaluations: evals });
    }
    let mut best: Option<EbtOptimum> = None;
    for w in 1..=params.n_channels() {
        let Some((w_bar, psi)) =
            optimal_wbar_counted(w, &rates, params.n_channels(), params.qos_exponent(), &mut evals)
        else {
            break;
        };
        let plan = EbtPlan::new(w, w_bar)?;
        let rate = ranking_rate(plan, params.mean_snr())?;
        let better = match &best {
            Some(b) => rate.bits_per_slot() > b.rate.bits_per_slot(),
            None => true,
        };
        if better {
            best = Some(EbtOptimum { plan, rate, psi_star: psi.psi_star, theta_star: psi.theta_star });
        }
    }
    Ok(OptimizationOutcome {
        feasible: best.is_some(),
        ebt: best,
        conventional: None,
        psi_evaluations: evals,
    })
}

/// Largest integer W_c with ψ_c*(W_c) ≤ -d; ψ_c* increases in W_c so the
/// scan stops at the first violation.
pub fn optimize_conventional(params: &SystemParams) -> Result<OptimizationOutcome> {
    let rates = params.traffic_rates()?;
    let mut evals = 0u64;
    let mut best: Option<ConvOptimum> = None;
    for wc in 1..=params.n_channels() {
        evals += 1;
        match min_psi_conventional(wc, &rates, params.n_channels()) {
            Ok(r) if r.psi_star <= -params.qos_exponent() => {
                let rate = mean_rate_conventional(ConvPlan::new(wc as f64)?, params.mean_snr())?;
                best = Some(ConvOptimum {
                    channels: wc,
                    rate,
                    psi_star: r.psi_star,
                    theta_star: r.theta_star,
                });
            }
            _ => break,
        }
    }
    Ok(OptimizationOutcome {
        feasible: best.is_some(),
        conventional: best,
        ebt: None,
        psi_evaluations: evals,
    })
}

/// Optimize both schemes for the same scenario.
pub fn optimize(params: &SystemParams) -> Result<OptimizationOutcome> {
    let ebt = optimize_ebt(params)?;
    let conv = optimize_conventional(params)?;
    Ok(OptimizationOutcome {
        feasible: ebt.feasible || conv.feasible,
        ebt: ebt.ebt,
        conventional: conv.conventional,
        psi_evaluations: ebt.psi_evaluations + conv.psi_evaluations,
    })
}
