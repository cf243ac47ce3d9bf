//! Mean transmission rates for EBT and the conventional allocation.
//!
//! A plan (W, w̄) explores W channels for one pilot slot and keeps the w̄
//! best for the data slots; rates are bits/s/Hz summed over the kept
//! channels, per data slot. The conventional scheme allocates W_c channels
//! blindly and is the W = w̄ = W_c special case.

use crate::dd::{Dd, LN2};
use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::{self, MAX_ORDER_STAT_W};

/// Largest W the closed form accepts; the quadrature path is authoritative
/// beyond it.
pub const W_EXACT_MAX: u32 = 30;

/// Mean SNR in linear scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSnr(f64);

impl MeanSnr {
    /// From a linear-scale value (> 0).
    pub fn from_linear(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain(format!("mean SNR must be finite and > 0, got {value}")));
        }
        Ok(MeanSnr(value))
    }

    /// From decibels: γ̄ = 10^(dB/10).
    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::Domain(format!("mean SNR in dB must be finite, got {db}")));
        }
        Self::from_linear(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// EBT allocation decision: explore `w` channels, keep the best `w_bar`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EbtPlan {
    w: u32,
    w_bar: u32,
}

impl EbtPlan {
    pub fn new(w: u32, w_bar: u32) -> Result<Self> {
        if w_bar < 1 || w_bar > w {
            return Err(Error::Domain(format!("plan requires 1 <= w_bar <= w, got w={w}, w_bar={w_bar}")));
        }
        Ok(EbtPlan { w, w_bar })
    }

    pub fn w(self) -> u32 {
        self.w
    }

    pub fn w_bar(self) -> u32 {
        self.w_bar
    }
}

/// Conventional allocation: `W_c` channels, no exploration. Real-valued for
/// analytical comparisons; the optimizer restricts itself to integers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvPlan(f64);

impl ConvPlan {
    pub fn new(channels: f64) -> Result<Self> {
        if !channels.is_finite() || channels <= 0.0 {
            return Err(Error::Domain(format!("W_c must be finite and > 0, got {channels}")));
        }
        Ok(ConvPlan(channels))
    }

    pub fn channels(self) -> f64 {
        self.0
    }
}

/// Mean rate in bits/s/Hz per data slot, summed over kept channels.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct RateValue(f64);

impl RateValue {
    pub fn bits_per_slot(self) -> f64 {
        self.0
    }
}

/// Exact binomial coefficient; inputs stay tiny (n ≤ W_EXACT_MAX).
fn binomial_u128(n: u32, k: u32) -> u128 {
    let k = k.min(n - k.min(n));
    let mut num = 1u128;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Closed-form mean EBT rate: per order statistic w in the kept range, the
/// binomial expansion of its pdf turns E[log2(1+γ̄x)] into a signed sum of
/// e^a/γ̄·E1(a/γ̄) terms with a = W-w+1+m.
///
/// The alternating sum is catastrophically ill-conditioned for large W
/// (condition number ~6e11 at W = 30), so coefficients are exact integers
/// and the accumulation runs in double-double precision.
pub fn mean_rate_ebt_exact(plan: EbtPlan, mean_snr: MeanSnr) -> Result<RateValue> {
    let w_total = plan.w();
    if w_total > W_EXACT_MAX {
        return Err(Error::OverflowGuard(format!(
            "closed form is limited to W <= {W_EXACT_MAX} (got {w_total}); use the quadrature variant"
        )));
    }
    let gbar = Dd::from_f64(mean_snr.linear());
    // g[a] = e^{a/γ̄} E1(a/γ̄) / (a ln 2), for a = 1..W.
    let mut g = Vec::with_capacity(w_total as usize + 1);
    g.push(Dd::ZERO);
    for a in 1..=w_total {
        let x = Dd::from_f64(a as f64).div(gbar);
        let scaled = x.exp_e1_scaled();
        g.push(scaled.div(LN2.mul_f64(a as f64)));
    }
    let mut total = Dd::ZERO;
    for w in (w_total - plan.w_bar() + 1)..=w_total {
        for m in 0..w {
            let a = w_total - w + 1 + m;
            let coef = w as u128 * binomial_u128(w_total, w) * binomial_u128(w - 1, m);
            let term = Dd::from_u128(coef).mul(g[a as usize]);
            total = if m % 2 == 0 { total.add(term) } else { total.sub(term) };
        }
    }
    Ok(RateValue(total.to_f64()))
}

/// Mean EBT rate by adaptive quadrature of Σ_w ∫ log2(1+γ̄x) f_(w)(x) dx
/// over the kept order statistics; authoritative for W > W_EXACT_MAX.
pub fn mean_rate_ebt_quadrature(plan: EbtPlan, mean_snr: MeanSnr) -> Result<RateValue> {
    let w_total = plan.w();
    if w_total > MAX_ORDER_STAT_W {
        return Err(Error::Domain(format!("W must be <= {MAX_ORDER_STAT_W}, got {w_total}")));
    }
    let gbar = mean_snr.linear();
    let lo = w_total - plan.w_bar() + 1;
    // Log-space pdf coefficients, one per kept order statistic.
    let ln_coefs: Vec<(f64, f64, f64)> = (lo..=w_total)
        .map(|w| {
            let c = specfun_ln_coef(w, w_total);
            (c, (w - 1) as f64, (w_total - w + 1) as f64)
        })
        .collect();
    let ln2 = std::f64::consts::LN_2;
    let integrand = move |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        let ln_one_minus = (-(-x).exp_m1()).ln();
        let mut density = 0.0;
        for &(ln_c, wm1, rem) in &ln_coefs {
            density += (ln_c + wm1 * ln_one_minus - rem * x).exp();
        }
        (gbar * x).ln_1p() / ln2 * density
    };
    let x_max = 100.0 + (w_total as f64).ln();
    let result = quad::integrate_segments(
        &integrand,
        &[(0.0, 1.0), (1.0, 5.0), (5.0, 20.0), (20.0, x_max)],
        1e-11,
        1e-14,
        4000,
    );
    if !result.converged {
        return Err(Error::QuadratureNonConvergence {
            value: result.value,
            error_estimate: result.error_estimate,
        });
    }
    Ok(RateValue(result.value))
}

fn specfun_ln_coef(w: u32, w_total: u32) -> f64 {
    // ln of W!/((w-1)!(W-w)!) via the shared factorial table.
    specfun::ln_factorial(w_total as usize)
        - specfun::ln_factorial((w - 1) as usize)
        - specfun::ln_factorial((w_total - w) as usize)
}

/// Conventional mean rate: W_c · e^{1/γ̄} E1(1/γ̄) / ln 2. Linear in W_c.
pub fn mean_rate_conventional(plan: ConvPlan, mean_snr: MeanSnr) -> Result<RateValue> {
    let per_channel = specfun::exp_integral_e1_scaled(1.0 / mean_snr.linear())?
        / std::f64::consts::LN_2;
    Ok(RateValue(plan.channels() * per_channel))
}

/// Large-W approximation Σ_{i=1}^{w̄} log2(1 + γ̄ ln(W/i)); requires w̄ < W.
pub fn mean_rate_ebt_approx(plan: EbtPlan, mean_snr: MeanSnr) -> Result<RateValue> {
    if plan.w_bar() >= plan.w() {
        return Err(Error::Domain(format!(
            "approximation requires w_bar < w, got w={}, w_bar={}",
            plan.w(),
            plan.w_bar()
        )));
    }
    let gbar = mean_snr.linear();
    let ln2 = std::f64::consts::LN_2;
    let sum = (1..=plan.w_bar())
        .map(|i| (gbar * (plan.w() as f64 / i as f64).ln()).ln_1p() / ln2)
        .sum();
    Ok(RateValue(sum))
}

/// Corollary lower bound w̄ · log2(1 + γ̄ ln(W/w̄)); requires w̄ < W.
pub fn mean_rate_ebt_lower_bound(plan: EbtPlan, mean_snr: MeanSnr) -> Result<RateValue> {
    if plan.w_bar() >= plan.w() {
        return Err(Error::Domain(format!(
            "lower bound requires w_bar < w, got w={}, w_bar={}",
            plan.w(),
            plan.w_bar()
        )));
    }
    let gbar = mean_snr.linear();
    let ratio = plan.w() as f64 / plan.w_bar() as f64;
    let value = plan.w_bar() as f64 * (gbar * ratio.ln()).ln_1p() / std::f64::consts::LN_2;
    Ok(RateValue(value))
}

/// Channel count that gives the conventional scheme the same total channel
/// budget as the EBT plan over 1+s slots: (W + s·w̄)/(1+s).
pub fn equivalent_conventional_width(plan: EbtPlan, data_slots: u32) -> Result<f64> {
    if data_slots < 1 {
        return Err(Error::Domain("data slot count must be >= 1".into()));
    }
    let s = data_slots as f64;
    Ok((plan.w() as f64 + s * plan.w_bar() as f64) / (1.0 + s))
}
