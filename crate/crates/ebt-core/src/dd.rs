//! Double-double arithmetic (~31 significant digits) for the ill-conditioned
//! alternating sums in the closed-form rate expression.
//!
//! The condition number of the Lemma-style binomial sum reaches ~6e11 at
//! W = 30, so plain f64 summation caps out near 1e-5 relative error no
//! matter how the terms are ordered. Carrying the inner sums in
//! double-double keeps the final error around 1e-20.
//!
//! Only the handful of operations the rate path needs are implemented:
//! +, -, *, /, exp, ln, and a scaled exponential integral e^x·E1(x).

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// ln(2) to double-double precision.
pub(crate) const LN2: Dd = Dd { hi: 0.6931471805599453, lo: 2.3190468138462996e-17 };

/// Euler–Mascheroni constant to double-double precision.
const EULER_GAMMA: Dd = Dd { hi: 0.5772156649015329, lo: -4.942915152430645e-18 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact conversion for values below 2^106 (all binomial products used
    /// by the rate path stay under 2^63).
    pub fn from_u128(x: u128) -> Dd {
        let hi = x as f64; // rounds to nearest
        let hi_int = hi as i128; // exact: hi is integral and < 2^127 here
        let lo = if hi_int >= x as i128 {
            -((hi_int - x as i128) as f64)
        } else {
            (x as i128 - hi_int) as f64
        };
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, rhs: Dd) -> Dd {
        self.add(rhs.neg())
    }

    #[inline]
    pub fn add_f64(self, rhs: f64) -> Dd {
        self.add(Dd::from_f64(rhs))
    }

    #[inline]
    pub fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, rhs: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs);
        let p2 = p2 + self.lo * rhs;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self.sub(rhs.mul_f64(q1));
        let q2 = r.hi / rhs.hi;
        let r = r.sub(rhs.mul_f64(q2));
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add_f64(q3)
    }

    #[inline]
    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    /// exp(x). Range-reduces by ln 2 and sums the Taylor series of e^r.
    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -709.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self.sub(LN2.mul_f64(k));
        // |r| <= ln2/2; terms below 1e-35 are noise.
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..40 {
            term = term.mul(r).mul_f64(1.0 / n as f64);
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 {
                break;
            }
        }
        let scale = (k as i32).max(-1074).min(1023);
        let factor = f64::powi(2.0, scale);
        Dd { hi: sum.hi * factor, lo: sum.lo * factor }
    }

    /// ln(x) for x > 0, via the f64 logarithm plus one residual correction.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let y = self.hi.ln();
        let z = self.mul(Dd::from_f64(-y).exp()); // z = x * e^-y = 1 + delta
        let delta = z.sub(Dd::ONE);
        // ln(1+delta) = delta - delta^2/2 + O(delta^3); delta ~ 1e-16.
        let corr = delta.sub(delta.mul(delta).mul_f64(0.5));
        Dd::from_f64(y).add(corr)
    }

    /// e^x * E1(x) for x > 0.
    ///
    /// Power series below x = 3, modified Lentz continued fraction above.
    /// The scaled product never under- or overflows for any positive x.
    pub fn exp_e1_scaled(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        if self.hi < 3.0 {
            // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
            let mut p = Dd::ONE;
            let mut sum = Dd::ZERO;
            for k in 1..80 {
                p = p.mul(self).mul_f64(1.0 / k as f64);
                let t = p.mul_f64(1.0 / k as f64);
                sum = if k % 2 == 1 { sum.add(t) } else { sum.sub(t) };
                if t.hi.abs() < 1e-36 * sum.hi.abs() + 1e-320 {
                    break;
                }
            }
            let e1 = sum.sub(EULER_GAMMA).sub(self.ln());
            self.exp().mul(e1)
        } else {
            // E1(x) = e^-x / (x+1- 1^2/(x+3- 2^2/(x+5- ...))); the scaled
            // product is the continued fraction value itself.
            let mut b = self.add_f64(1.0);
            let mut c = Dd::from_f64(1e300);
            let mut d = b.recip();
            let mut h = d;
            for i in 1..4000u64 {
                let a = -((i * i) as f64);
                b = b.add_f64(2.0);
                d = b.add(d.mul_f64(a)).recip();
                c = b.add(Dd::from_f64(a).div(c));
                let delta = c.mul(d);
                h = h.mul(delta);
                if (delta.to_f64() - 1.0).abs() < 1e-33 {
                    break;
                }
            }
            h
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_dd_close(v: Dd, hi: f64, lo: f64, tol: f64) {
        let err = ((v.hi - hi) + (v.lo - lo)).abs();
        let scale = hi.abs().max(1e-300);
        assert!(err / scale < tol, "got ({:e},{:e}), want ({:e},{:e})", v.hi, v.lo, hi, lo);
    }

    #[test]
    fn mul_div_roundtrip() {
        let a = Dd::from_f64(std::f64::consts::PI);
        let b = Dd::from_f64(1.0 / 3.0).add_f64(1e-20);
        let r = a.mul(b).div(b);
        assert_dd_close(r, a.hi, a.lo, 1e-30);
    }

    #[test]
    fn from_u128_is_exact() {
        for &c in &[0u128, 1, 362880362880362880, (1u128 << 63) + 12345, u64::MAX as u128] {
            let d = Dd::from_u128(c);
            let back = d.hi as i128 + d.lo as i128;
            assert_eq!(back, c as i128);
        }
    }

    #[test]
    fn exp_matches_f64_and_refines() {
        for &x in &[0.0, 1.0, -1.0, 10.0, -35.5, 300.0] {
            let v = Dd::from_f64(x).exp();
            let rel = (v.to_f64() - x.exp()).abs() / x.exp();
            assert!(rel < 1e-15, "exp({x}) rel {rel}");
        }
    }

    #[test]
    fn ln_inverts_exp() {
        for &x in &[1e-8, 0.5, 1.0, 3.25, 1e7] {
            let v = Dd::from_f64(x).ln().exp();
            let rel = (v.to_f64() - x).abs() / x;
            assert!(rel < 1e-28, "ln/exp roundtrip at {x}: {rel}");
        }
    }

    // Reference values computed with mpmath at 45 digits.
    #[test]
    fn scaled_e1_reference_values() {
        let cases = [
            (0.01, 4.078511443456426, -1.755700746141841e-16),
            (0.25, 1.3408854448313934, -2.7843432463727564e-17),
            (1.0, 0.5963473623231941, -2.2151491478788398e-19),
            (1.5, 0.448256669291583, -2.2549583029374964e-17),
            (2.9999, 0.2620908654139396, -2.09094174935783e-17),
            (3.0, 0.2620837402553185, -1.858213912241497e-18),
            (7.53, 0.11859735419630377, -2.4001331470187686e-18),
            (10.0, 0.09156333393978808, 4.433668811575241e-18),
            (25.0, 0.03851469884490402, 3.4740150989454103e-19),
        ];
        for &(x, hi, lo) in &cases {
            let v = Dd::from_f64(x).exp_e1_scaled();
            assert_dd_close(v, hi, lo, 1e-29);
        }
    }
}
