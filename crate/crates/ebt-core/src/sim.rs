//! Slot-level Monte Carlo simulation of the uplink pipeline.
//!
//! Per slot: Poisson arrivals contend with random preambles; collision-free
//! UEs are admitted, draw their data-slot count s and their channel SNRs,
//! and occupy channels for 1+s slots (pilot then data). Demand above the
//! channel pool N is an outage; that slot's new admissions are dropped and
//! existing UEs are unaffected.
//!
//! Randomness is a counter-based scheme: every (slot, ue) pair gets its own
//! ChaCha8 stream derived from the run seed, so runs are bit-reproducible
//! and independent of each other.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{Error, Result};
use crate::optimizer::SystemParams;
use crate::rate::{EbtPlan, MeanSnr};

/// One channel's SNR realization (linear scale).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Snr(f64);

impl Snr {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Domain(format!("SNR must be finite and >= 0, got {value}")));
        }
        Ok(Snr(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Allocation policy under simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Explore w channels for one slot, keep the best w̄.
    Ebt(EbtPlan),
    /// Occupy a fixed number of channels for the whole stay.
    Conventional { channels: u32 },
}

impl Policy {
    fn pilot_channels(self) -> u32 {
        match self {
            Policy::Ebt(p) => p.w(),
            Policy::Conventional { channels } => channels,
        }
    }

    fn kept_channels(self) -> u32 {
        match self {
            Policy::Ebt(p) => p.w_bar(),
            Policy::Conventional { channels } => channels,
        }
    }
}

/// Per-slot bookkeeping record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotLedger {
    pub slot: u64,
    /// K(t): preamble transmitters this slot.
    pub arrivals: u32,
    /// Z(t): collision-free (admitted) UEs, before any outage drop.
    pub admitted: u32,
    /// V(t): UEs in their data phase this slot.
    pub transmitting: u64,
    /// Q(t) = pilot·Z + kept·V.
    pub demand: u64,
    /// Q > N.
    pub outage: bool,
}

/// Empirical QoS exponent −ln(outage fraction).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QosExponent {
    Measured(f64),
    /// No outages observed; −ln(1/slots) bounds the exponent from below.
    LowerBound(f64),
}

impl QosExponent {
    pub fn value(self) -> f64 {
        match self {
            QosExponent::Measured(v) | QosExponent::LowerBound(v) => v,
        }
    }

    pub fn is_lower_bound(self) -> bool {
        matches!(self, QosExponent::LowerBound(_))
    }
}

/// Aggregated simulation output. Bit-identical across runs with the same
/// (params, policy, horizon, seed).
#[derive(Clone, Debug, PartialEq)]
pub struct SimMetrics {
    /// Mean of Σ log2(1+γ) over kept channels, per (UE, data slot) sample;
    /// None when no data slot was observed.
    pub mean_rate_per_data_slot: Option<f64>,
    /// Cluster-robust standard error of the mean rate (UEs are clusters).
    pub rate_std_error: Option<f64>,
    /// Fraction of measured slots with Q > N.
    pub outage_fraction: f64,
    pub outage_count: u64,
    /// Slots contributing to metrics (horizon minus warm-up).
    pub measured_slots: u64,
    /// UEs admitted and kept during the measured window.
    pub ue_count: u64,
    /// Number of (UE, data slot) samples behind the mean rate.
    pub data_slot_count: u64,
    /// Mean admitted count Z per measured slot.
    pub mean_admitted_per_slot: f64,
    /// Histogram of Z over measured slots, indices 0..=L.
    pub admitted_histogram: Vec<u64>,
    pub seed: u64,
}

impl SimMetrics {
    /// −ln(outage fraction), or the one-sided lower bound −ln(1/slots)
    /// when no outage was observed.
    pub fn qos_exponent(&self) -> QosExponent {
        empirical_qos_exponent(self)
    }
}

/// See [`SimMetrics::qos_exponent`].
pub fn empirical_qos_exponent(metrics: &SimMetrics) -> QosExponent {
    if metrics.outage_count == 0 {
        QosExponent::LowerBound((metrics.measured_slots.max(1) as f64).ln())
    } else {
        QosExponent::Measured(-metrics.outage_fraction.ln())
    }
}

/// Each of `arrivals` UEs picks one of `preambles` signatures uniformly;
/// returns how many signatures were picked exactly once.
pub fn simulate_preamble_step<R: Rng>(arrivals: u32, preambles: u32, rng: &mut R) -> u32 {
    let mut counts = vec![0u32; preambles as usize];
    preamble_step_with(arrivals, rng, &mut counts)
}

fn preamble_step_with<R: Rng>(arrivals: u32, rng: &mut R, counts: &mut [u32]) -> u32 {
    counts.fill(0);
    for _ in 0..arrivals {
        let pick = rng.gen_range(0..counts.len());
        counts[pick] = counts[pick].saturating_add(1);
    }
    counts.iter().filter(|&&c| c == 1).count() as u32
}

/// iid exponential SNRs with the given mean.
pub fn draw_snrs<R: Rng>(count: u32, mean_snr: MeanSnr, rng: &mut R) -> Vec<Snr> {
    let exp = Exp::new(1.0 / mean_snr.linear()).expect("mean SNR is positive");
    (0..count).map(|_| Snr(exp.sample(rng))).collect()
}

/// Keep the `keep` largest SNRs (ties to the lowest channel index) and
/// return them with the rate Σ log2(1+γ) they support.
pub fn select_best_channels(snrs: &[Snr], keep: u32) -> Result<(Vec<Snr>, f64)> {
    if keep as usize > snrs.len() {
        return Err(Error::Index(format!(
            "cannot keep {keep} of {} channels",
            snrs.len()
        )));
    }
    let mut order: Vec<usize> = (0..snrs.len()).collect();
    order.sort_by(|&a, &b| {
        snrs[b].0.partial_cmp(&snrs[a].0).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut kept_idx: Vec<usize> = order.into_iter().take(keep as usize).collect();
    kept_idx.sort_unstable();
    let kept: Vec<Snr> = kept_idx.iter().map(|&i| snrs[i]).collect();
    let rate = kept.iter().map(|s| s.0.ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
    Ok((kept, rate))
}

/// ChaCha8 stream for a (seed, slot, ue) triple; ue = 0 is the slot-level
/// stream (arrivals, preamble picks), admitted UEs use 1.., in admission
/// order.
fn stream_rng(seed: u64, slot: u64, ue: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((slot << 17) | (ue as u64 + 1));
    rng
}

/// Run the slot pipeline for `horizon_slots` slots; the first s_max slots
/// are warm-up and excluded from metrics.
pub fn run_simulation(
    params: &SystemParams,
    policy: Policy,
    horizon_slots: u64,
    seed: u64,
) -> Result<SimMetrics> {
    run_simulation_traced(params, policy, horizon_slots, seed, |_| {})
}

/// As [`run_simulation`], invoking `on_slot` with every slot's ledger.
pub fn run_simulation_traced(
    params: &SystemParams,
    policy: Policy,
    horizon_slots: u64,
    seed: u64,
    mut on_slot: impl FnMut(&SlotLedger),
) -> Result<SimMetrics> {
    let n = params.n_channels();
    let pilot = policy.pilot_channels();
    let kept = policy.kept_channels();
    if pilot < 1 || pilot > n {
        return Err(Error::Config(format!("policy needs {pilot} pilot channels but the pool has {n}")));
    }
    if params.preambles() >= (1 << 16) {
        return Err(Error::Config("preamble pool must be below 2^16 for stream addressing".into()));
    }
    if horizon_slots >= (1 << 46) {
        return Err(Error::Config("horizon must be below 2^46 slots".into()));
    }
    let warmup = params.slots().s_max() as u64;
    if horizon_slots <= warmup {
        return Err(Error::Config(format!(
            "horizon {horizon_slots} does not cover the {warmup}-slot warm-up"
        )));
    }

    let lambda = params.lambda();
    let poisson = if lambda > 0.0 { Some(Poisson::new(lambda).expect("validated")) } else { None };
    let exp_snr = Exp::new(1.0 / params.mean_snr().linear()).expect("mean SNR is positive");
    let slot_cdf: Vec<f64> = {
        let mut acc = 0.0;
        params
            .slots()
            .as_slice()
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect()
    };

    // Transmitting population as running totals plus a departure ring
    // indexed by slot mod (s_max + 2).
    let ring = params.slots().s_max() as usize + 2;
    let mut departures: Vec<(u64, f64)> = vec![(0, 0.0); ring];
    let mut v_count: u64 = 0;
    let mut v_rate: f64 = 0.0;
    let mut pending_count: u64 = 0;
    let mut pending_rate: f64 = 0.0;

    let mut counts_buf = vec![0u32; params.preambles() as usize];
    let mut snr_buf: Vec<f64> = Vec::with_capacity(pilot as usize);

    let mut measured_slots = 0u64;
    let mut outage_count = 0u64;
    let mut admitted_total = 0u64;
    let mut histogram = vec![0u64; params.preambles() as usize + 1];
    let mut rate_sum = 0.0f64;
    let mut data_slots = 0u64;
    let mut ue_count = 0u64;
    // Per-UE cluster sums for the rate standard error.
    let mut cl_s = 0.0f64;
    let mut cl_sr = 0.0f64;
    let mut cl_s2 = 0.0f64;
    let mut cl_s2r = 0.0f64;
    let mut cl_s2r2 = 0.0f64;

    for slot in 0..horizon_slots {
        // Last slot's admissions enter their data phase; finished UEs leave.
        v_count += pending_count;
        v_rate += pending_rate;
        pending_count = 0;
        pending_rate = 0.0;
        let idx = (slot % ring as u64) as usize;
        let (dep_count, dep_rate) = departures[idx];
        departures[idx] = (0, 0.0);
        v_count -= dep_count;
        v_rate -= dep_rate;

        let mut slot_rng = stream_rng(seed, slot, 0);
        let arrivals = match &poisson {
            Some(p) => p.sample(&mut slot_rng) as u64 as u32,
            None => 0,
        };
        let admitted = preamble_step_with(arrivals, &mut slot_rng, &mut counts_buf);
        let demand = pilot as u64 * admitted as u64 + kept as u64 * v_count;
        let outage = demand > n as u64;
        let measured = slot >= warmup;

        if measured {
            measured_slots += 1;
            if outage {
                outage_count += 1;
            }
            admitted_total += admitted as u64;
            histogram[admitted as usize] += 1;
            rate_sum += v_rate;
            data_slots += v_count;
        }

        if !outage {
            for ue in 0..admitted {
                let mut ue_rng = stream_rng(seed, slot, 1 + ue);
                let u: f64 = ue_rng.gen();
                let s = slot_cdf.iter().position(|&c| u <= c).unwrap_or(slot_cdf.len() - 1) as u32 + 1;
                snr_buf.clear();
                for _ in 0..pilot {
                    snr_buf.push(exp_snr.sample(&mut ue_rng));
                }
                let rate = top_k_rate(&mut snr_buf, kept as usize);
                pending_count += 1;
                pending_rate += rate;
                let dep_idx = ((slot + s as u64 + 1) % ring as u64) as usize;
                departures[dep_idx].0 += 1;
                departures[dep_idx].1 += rate;
                if measured {
                    ue_count += 1;
                    let sf = s as f64;
                    cl_s += sf;
                    cl_sr += sf * rate;
                    cl_s2 += sf * sf;
                    cl_s2r += sf * sf * rate;
                    cl_s2r2 += sf * sf * rate * rate;
                }
            }
        }

        on_slot(&SlotLedger { slot, arrivals, admitted, transmitting: v_count, demand, outage });
    }

    let outage_fraction = outage_count as f64 / measured_slots as f64;
    let (mean_rate, rate_se) = if data_slots > 0 {
        let mean = rate_sum / data_slots as f64;
        let se = if cl_s > 0.0 {
            // sqrt(Σ (s_u (r_u - m))²) / Σ s_u over admitted clusters.
            let m = cl_sr / cl_s;
            let var = cl_s2r2 - 2.0 * m * cl_s2r + m * m * cl_s2;
            Some(var.max(0.0).sqrt() / cl_s)
        } else {
            None
        };
        (Some(mean), se)
    } else {
        (None, None)
    };

    Ok(SimMetrics {
        mean_rate_per_data_slot: mean_rate,
        rate_std_error: rate_se,
        outage_fraction,
        outage_count,
        measured_slots,
        ue_count,
        data_slot_count: data_slots,
        mean_admitted_per_slot: admitted_total as f64 / measured_slots as f64,
        admitted_histogram: histogram,
        seed,
    })
}

/// Sum of log2(1+γ) over the k largest entries; scratch is reordered.
fn top_k_rate(snrs: &mut [f64], k: usize) -> f64 {
    let len = snrs.len();
    if k < len {
        snrs.select_nth_unstable_by(len - k, |a, b| a.partial_cmp(b).unwrap());
    }
    snrs[len - k..].iter().map(|g| g.ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outage::SlotDistribution;
    use approx::assert_relative_eq;

    fn base_params(n: u32, lambda: f64, preambles: u32, s_max: u32) -> SystemParams {
        SystemParams::new(
            n,
            lambda,
            preambles,
            SlotDistribution::uniform(s_max).unwrap(),
            MeanSnr::from_db(6.0).unwrap(),
            -(0.05f64.ln()),
        )
        .unwrap()
    }

    #[test]
    fn preamble_trivial_cases() {
        let mut rng = stream_rng(1, 0, 0);
        assert_eq!(simulate_preamble_step(0, 8, &mut rng), 0);
        for _ in 0..32 {
            assert_eq!(simulate_preamble_step(1, 8, &mut rng), 1);
        }
    }

    #[test]
    fn preamble_matches_analytic_expectation() {
        // E[Z | K] = K (1 - 1/L)^{K-1}
        let (k, l, trials) = (8u32, 32u32, 200_000u64);
        let mut rng = stream_rng(42, 0, 0);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..trials {
            let z = simulate_preamble_step(k, l, &mut rng) as f64;
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / trials as f64;
        let sigma = ((sumsq / trials as f64 - mean * mean) / trials as f64).sqrt();
        let expected = k as f64 * (1.0 - 1.0 / l as f64).powi(k as i32 - 1);
        assert!(
            (mean - expected).abs() <= 3.0 * sigma,
            "mean {mean} vs {expected} (3σ = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn snr_draws_match_exponential_moments() {
        let gbar = MeanSnr::from_db(10.0).unwrap();
        let mut rng = stream_rng(7, 3, 1);
        let n = 1_000_000u32;
        let snrs = draw_snrs(n, gbar, &mut rng);
        assert!(snrs.iter().all(|s| s.value() >= 0.0));
        let mean: f64 = snrs.iter().map(|s| s.value()).sum::<f64>() / n as f64;
        // σ of the sample mean of Exp(mean γ̄) is γ̄/√n.
        let sigma = gbar.linear() / (n as f64).sqrt();
        assert!((mean - gbar.linear()).abs() <= 3.0 * sigma, "mean {mean}");
        // Median of the exponential is γ̄ ln 2.
        let median_point = gbar.linear() * std::f64::consts::LN_2;
        let below = snrs.iter().filter(|s| s.value() <= median_point).count() as f64 / n as f64;
        let sigma_p = 0.5 / (n as f64).sqrt();
        assert!((below - 0.5).abs() <= 3.0 * sigma_p, "ecdf at median {below}");
    }

    #[test]
    fn select_best_examples() {
        let snrs: Vec<Snr> = [3.0, 1.0, 2.0].iter().map(|&v| Snr::new(v).unwrap()).collect();
        let (kept, rate) = select_best_channels(&snrs, 1).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].value(), 3.0);
        assert_relative_eq!(rate, 2.0, max_relative = 1e-15);

        let (kept, rate) = select_best_channels(&snrs, 3).unwrap();
        assert_eq!(kept.len(), 3);
        let full: f64 = snrs.iter().map(|s| s.value().ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
        assert_relative_eq!(rate, full, max_relative = 1e-15);

        assert!(select_best_channels(&snrs, 4).is_err());
    }

    #[test]
    fn select_best_breaks_ties_by_lowest_index() {
        let snrs: Vec<Snr> = [2.0, 5.0, 2.0, 5.0].iter().map(|&v| Snr::new(v).unwrap()).collect();
        let (kept, _) = select_best_channels(&snrs, 3).unwrap();
        // Indices 1, 3 (the fives) and then index 0 beats index 2.
        assert_eq!(kept.iter().map(|s| s.value()).collect::<Vec<_>>(), vec![2.0, 5.0, 5.0]);
    }

    #[test]
    fn zero_traffic_runs_clean() {
        let params = base_params(50, 0.0, 8, 3);
        let m = run_simulation(&params, Policy::Conventional { channels: 2 }, 2_000, 5).unwrap();
        assert_eq!(m.ue_count, 0);
        assert_eq!(m.outage_count, 0);
        assert!(m.mean_rate_per_data_slot.is_none());
        assert!(m.qos_exponent().is_lower_bound());
    }

    #[test]
    fn determinism_bit_exact() {
        let params = base_params(100, 4.0, 16, 4);
        let plan = EbtPlan::new(6, 2).unwrap();
        let a = run_simulation(&params, Policy::Ebt(plan), 5_000, 99).unwrap();
        let b = run_simulation(&params, Policy::Ebt(plan), 5_000, 99).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&params, Policy::Ebt(plan), 5_000, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn config_errors() {
        let params = base_params(10, 4.0, 16, 4);
        assert!(matches!(
            run_simulation(&params, Policy::Conventional { channels: 11 }, 1000, 1),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            run_simulation(&params, Policy::Conventional { channels: 2 }, 3, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn occupancy_accounting_identity() {
        // Q = W·Y0 + w̄·V at every slot, and the ledger exposes it.
        let params = base_params(120, 5.0, 16, 4);
        let plan = EbtPlan::new(7, 3).unwrap();
        let mut checked = 0u64;
        run_simulation_traced(&params, Policy::Ebt(plan), 4_000, 11, |ledger| {
            assert_eq!(
                ledger.demand,
                7 * ledger.admitted as u64 + 3 * ledger.transmitting,
                "slot {}",
                ledger.slot
            );
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, 4_000);
    }

    #[test]
    fn admitted_process_matches_model() {
        // Mean Z → λ e^{-λ/L} within 3σ, and the histogram passes a χ²
        // test against Bin(L, p) at the 1% level.
        let (lambda, l) = (8.0, 32u32);
        let params = base_params(4000, lambda, l, 4);
        let m = run_simulation(&params, Policy::Conventional { channels: 1 }, 200_000, 3).unwrap();
        assert_eq!(m.outage_count, 0, "pool sized to never outage");
        let lambda0 = lambda * (-lambda / l as f64).exp();
        // Var(Z) = L p (1-p)
        let p = (lambda / l as f64) * (-lambda / l as f64).exp();
        let var = l as f64 * p * (1.0 - p);
        let sigma = (var / m.measured_slots as f64).sqrt();
        assert!(
            (m.mean_admitted_per_slot - lambda0).abs() <= 3.0 * sigma,
            "mean Z {} vs λ0 {lambda0}",
            m.mean_admitted_per_slot
        );

        // χ² against the binomial pmf, pooling cells with expectation < 5.
        let slots = m.measured_slots as f64;
        let mut chi2 = 0.0;
        let mut df = 0i64;
        let mut pooled_obs = 0.0;
        let mut pooled_exp = 0.0;
        for a in 0..=l {
            let expect = slots * crate::outage::admitted_pmf(lambda, l, a).unwrap();
            let obs = m.admitted_histogram[a as usize] as f64;
            if expect < 5.0 {
                pooled_obs += obs;
                pooled_exp += expect;
            } else {
                chi2 += (obs - expect).powi(2) / expect;
                df += 1;
            }
        }
        if pooled_exp > 0.0 {
            chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
            df += 1;
        }
        df -= 1;
        // Wilson–Hilferty χ²_{0.99} quantile.
        let dff = df as f64;
        let crit = dff * (1.0 - 2.0 / (9.0 * dff) + 2.3263478740408408 * (2.0 / (9.0 * dff)).sqrt()).powi(3);
        assert!(chi2 < crit, "χ² = {chi2} >= {crit} (df = {df})");
    }

    #[test]
    fn qos_exponent_cases() {
        let mut m = SimMetrics {
            mean_rate_per_data_slot: None,
            rate_std_error: None,
            outage_fraction: (-3.0f64).exp(),
            outage_count: 10,
            measured_slots: 1000,
            ue_count: 0,
            data_slot_count: 0,
            mean_admitted_per_slot: 0.0,
            admitted_histogram: vec![],
            seed: 0,
        };
        assert_relative_eq!(m.qos_exponent().value(), 3.0, max_relative = 1e-12);
        m.outage_fraction = 0.05;
        assert_relative_eq!(m.qos_exponent().value(), 2.995732273553991, max_relative = 1e-12);
        m.outage_fraction = 1.0;
        assert_relative_eq!(m.qos_exponent().value(), 0.0, epsilon = 1e-12);
        m.outage_count = 0;
        let q = m.qos_exponent();
        assert!(q.is_lower_bound());
        assert_relative_eq!(q.value(), 1000f64.ln(), max_relative = 1e-12);
    }
}
