//! Traffic model and the Chernoff bound on resource outage Pr(Q > N).
//!
//! A slot admits Z UEs out of K ~ Pois(λ) preamble transmitters; residual
//! uploaders from earlier slots linger for their remaining data slots.
//! With the Poisson approximation the slot demand is Q = W·Y0 + w̄·V with
//! Y0 ~ Pois(λ0), V ~ Pois(λ1) independent, and the bound follows from
//! minimizing the exponent ψ(θ) over θ ≥ 0.

use crate::error::{Error, Result};
use crate::specfun::ln_factorial;

/// Pmf of the per-UE data-slot count s ∈ {1..s_max}.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotDistribution {
    pmf: Vec<f64>,
    mean: f64,
}

impl SlotDistribution {
    /// Uniform ν_s = 1/s_max; the mean (s_max+1)/2 is carried exactly.
    pub fn uniform(s_max: u32) -> Result<Self> {
        if s_max < 1 {
            return Err(Error::Distribution("s_max must be >= 1".into()));
        }
        let p = 1.0 / s_max as f64;
        Ok(SlotDistribution {
            pmf: vec![p; s_max as usize],
            mean: (s_max as f64 + 1.0) / 2.0,
        })
    }

    /// From an explicit pmf over s = 1..=len. Must sum to 1 within 1e-12.
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::Distribution("pmf must be nonempty".into()));
        }
        if pmf.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Distribution("pmf entries must be finite and >= 0".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Distribution(format!("pmf sums to {total}, expected 1")));
        }
        let mean = pmf.iter().enumerate().map(|(i, &p)| (i + 1) as f64 * p).sum();
        Ok(SlotDistribution { pmf, mean })
    }

    pub fn s_max(&self) -> u32 {
        self.pmf.len() as u32
    }

    /// Mean slot count s̄ = Σ s·ν_s.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// ν_s, zero outside 1..=s_max.
    pub fn pmf(&self, s: u32) -> f64 {
        if s >= 1 && s <= self.s_max() {
            self.pmf[(s - 1) as usize]
        } else {
            0.0
        }
    }

    /// Tail Σ_{i=s}^{s_max} ν_i — the surviving fraction of UEs admitted
    /// s slots ago.
    pub fn tail_sum(&self, s: u32) -> f64 {
        if s < 1 {
            return 1.0;
        }
        self.pmf.iter().skip((s - 1) as usize).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pmf
    }
}

/// Poisson intensities of the admitted-UE process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrafficRates {
    lambda0: f64,
    lambda1: f64,
}

impl TrafficRates {
    /// Intensity of newly admitted UEs per slot, λ0 = λ e^{-λ/L}.
    pub fn lambda0(self) -> f64 {
        self.lambda0
    }

    /// Intensity of residual uploading UEs, λ1 = λ0·s̄.
    pub fn lambda1(self) -> f64 {
        self.lambda1
    }

    /// λ_c = λ0 + λ1.
    pub fn lambda_c(self) -> f64 {
        self.lambda0 + self.lambda1
    }
}

/// λ0 = λ e^{-λ/L} and λ1 = λ0·s̄ for Poisson arrivals of mean λ against a
/// pool of L preambles.
pub fn derive_traffic_rates(lambda: f64, preambles: u32, slots: &SlotDistribution) -> Result<TrafficRates> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain(format!("arrival rate must be finite and > 0, got {lambda}")));
    }
    if preambles < 1 {
        return Err(Error::Domain("preamble pool must contain at least one preamble".into()));
    }
    let lambda0 = lambda * (-lambda / preambles as f64).exp();
    Ok(TrafficRates { lambda0, lambda1: lambda0 * slots.mean() })
}

/// Pmf of the admitted count Z ~ Bin(L, p) at `admitted`, with
/// p = (λ/L)e^{-λ/L}. The Poisson form with intensity λ0 approximates it.
pub fn admitted_pmf(lambda: f64, preambles: u32, admitted: u32) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain(format!("arrival rate must be finite and > 0, got {lambda}")));
    }
    if preambles < 1 || preambles as usize >= 10_000 {
        return Err(Error::Domain(format!("preamble pool size {preambles} not in 1..10000")));
    }
    if admitted > preambles {
        return Err(Error::Index(format!("admitted count {admitted} exceeds pool size {preambles}")));
    }
    let l = preambles as f64;
    let p = (lambda / l) * (-lambda / l).exp();
    let a = admitted as f64;
    let ln_choose = ln_factorial(preambles as usize)
        - ln_factorial(admitted as usize)
        - ln_factorial((preambles - admitted) as usize);
    Ok((ln_choose + a * p.ln() + (l - a) * (-p).ln_1p()).exp())
}

/// Result of minimizing the Chernoff exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiResult {
    /// Minimizing θ* ≥ 0.
    pub theta_star: f64,
    /// ψ(θ*) ≤ 0.
    pub psi_star: f64,
    /// exp(ψ*) ≥ Pr(Q > N).
    pub bound: f64,
}

/// Chernoff exponent ψ(θ) = λ0 e^{Wθ} + λ1 e^{w̄θ} - (λ0 + λ1 + Nθ).
///
/// Convex in θ with ψ(0) = 0. Returns +∞ when e^{Wθ} would overflow.
pub fn psi(theta: f64, w: u32, w_bar: u32, rates: &TrafficRates, n_channels: u32) -> f64 {
    debug_assert!(theta >= 0.0, "psi is defined for theta >= 0");
    let wt = w as f64 * theta;
    if wt > 709.0 {
        return f64::INFINITY;
    }
    rates.lambda0() * wt.exp() + rates.lambda1() * (w_bar as f64 * theta).exp()
        - (rates.lambda_c() + n_channels as f64 * theta)
}

/// Stationarity left-hand side λ0 W e^{Wθ} + λ1 w̄ e^{w̄θ}, strictly
/// increasing in θ.
fn psi_derivative_lhs(theta: f64, w: f64, w_bar: f64, rates: &TrafficRates) -> f64 {
    let wt = w * theta;
    if wt > 709.0 {
        return f64::INFINITY;
    }
    rates.lambda0() * w * wt.exp() + rates.lambda1() * w_bar * (w_bar * theta).exp()
}

/// Minimize ψ over θ ≥ 0 by bisection on the stationarity equation
/// λ0 W e^{Wθ} + λ1 w̄ e^{w̄θ} = N.
///
/// Requires λ0·W + λ1·w̄ ≤ N, otherwise the minimizer would be negative
/// and the bound degenerates to 1.
pub fn minimize_psi(w: u32, w_bar: u32, rates: &TrafficRates, n_channels: u32) -> Result<PsiResult> {
    if w < 1 || w_bar < 1 || w_bar > w {
        return Err(Error::Domain(format!("need 1 <= w_bar <= w, got w={w}, w_bar={w_bar}")));
    }
    let n = n_channels as f64;
    let wf = w as f64;
    let wbf = w_bar as f64;
    let at_zero = rates.lambda0() * wf + rates.lambda1() * wbf;
    if at_zero > n {
        return Err(Error::Infeasible(format!(
            "lambda0*W + lambda1*w_bar = {at_zero} exceeds N = {n}; theta* would be negative"
        )));
    }
    if at_zero == n {
        return Ok(PsiResult { theta_star: 0.0, psi_star: 0.0, bound: 1.0 });
    }
    let mut hi = 1.0 / wf;
    while psi_derivative_lhs(hi, wf, wbf, rates) < n {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi_derivative_lhs(mid, wf, wbf, rates) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta_star = 0.5 * (lo + hi);
    let psi_star = psi(theta_star, w, w_bar, rates, n_channels).min(0.0);
    Ok(PsiResult { theta_star, psi_star, bound: psi_star.exp() })
}

/// Closed-form conventional minimum: ψ_c* = (N/W_c)(1 - ln(N/(W_c λ_c))) - λ_c
/// with θ* = ln(N/(W_c λ_c))/W_c, for N > W_c λ_c.
pub fn min_psi_conventional(wc: u32, rates: &TrafficRates, n_channels: u32) -> Result<PsiResult> {
    if wc < 1 {
        return Err(Error::Domain("W_c must be >= 1".into()));
    }
    let n = n_channels as f64;
    let wcf = wc as f64;
    let lambda_c = rates.lambda_c();
    if n <= wcf * lambda_c {
        return Err(Error::Infeasible(format!(
            "N = {n} must exceed W_c*lambda_c = {}",
            wcf * lambda_c
        )));
    }
    let log_ratio = (n / (wcf * lambda_c)).ln();
    let theta_star = log_ratio / wcf;
    let psi_star = (n / wcf) * (1.0 - log_ratio) - lambda_c;
    let psi_star = psi_star.min(0.0);
    Ok(PsiResult { theta_star, psi_star, bound: psi_star.exp() })
}

/// Chernoff upper bound exp(min_θ ψ) ≥ Pr(Q > N) under the Poisson model.
pub fn chernoff_outage_bound(w: u32, w_bar: u32, rates: &TrafficRates, n_channels: u32) -> Result<f64> {
    Ok(minimize_psi(w, w_bar, rates, n_channels)?.bound)
}

/// Existence of any feasible channel allocation for QoS exponent d:
/// N ≥ λ_c and N(1 - ln(N/λ_c)) - λ_c ≤ -d (the W = w̄ = 1 case).
pub fn feasibility_check(rates: &TrafficRates, n_channels: u32, qos_exponent: f64) -> bool {
    let n = n_channels as f64;
    let lambda_c = rates.lambda_c();
    if n < lambda_c {
        return false;
    }
    if n == lambda_c {
        return lambda_c >= qos_exponent;
    }
    n * (1.0 - (n / lambda_c).ln()) - lambda_c <= -qos_exponent
}
