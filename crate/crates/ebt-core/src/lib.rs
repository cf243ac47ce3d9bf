//! Explore-before-talk (EBT) multichannel uplink allocation.
//!
//! EBT lets a newly admitted user probe `W` channels with pilots for one
//! slot, then transmit data for `s` slots on the `w_bar ≤ W` channels with
//! the highest SNRs, releasing the rest. This crate provides the analysis
//! and decision machinery around that scheme:
//!
//! - [`specfun`] — exponential integral E1 and exponential order-statistic
//!   primitives.
//! - [`rate`] — closed-form, quadrature, and approximate mean transmission
//!   rates for EBT and the no-exploration conventional allocation.
//! - [`outage`] — Poisson traffic model, the Chernoff exponent ψ(θ) and its
//!   minimization, and the resulting upper bound on Pr(Q > N).
//! - [`optimizer`] — rate maximization of (W, w_bar) and of the conventional
//!   channel count under a QoS-exponent constraint.
//! - [`sim`] — seeded slot-level Monte Carlo simulation of the whole uplink
//!   pipeline for validating the analytical model.
//!
//! All analytical operations are pure functions and safe to call from any
//! number of threads.

pub mod error;
pub mod optimizer;
pub mod outage;
pub mod rate;
pub mod sim;
pub mod specfun;

mod dd;
mod quad;

pub use error::{Error, Result};
pub use optimizer::{
    optimal_wbar_for_w, optimize, optimize_conventional, optimize_ebt, ConvOptimum, EbtOptimum,
    OptimizationOutcome, SystemParams,
};
pub use outage::{
    admitted_pmf, chernoff_outage_bound, derive_traffic_rates, feasibility_check, min_psi_conventional,
    minimize_psi, psi, PsiResult, SlotDistribution, TrafficRates,
};
pub use rate::{
    equivalent_conventional_width, mean_rate_conventional, mean_rate_ebt_approx,
    mean_rate_ebt_exact, mean_rate_ebt_lower_bound, mean_rate_ebt_quadrature, ConvPlan, EbtPlan,
    MeanSnr, RateValue, W_EXACT_MAX,
};
pub use sim::{
    draw_snrs, empirical_qos_exponent, run_simulation, run_simulation_traced,
    select_best_channels, simulate_preamble_step, Policy, QosExponent, SimMetrics, SlotLedger, Snr,
};
