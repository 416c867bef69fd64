//! Normalized Black-Scholes pricing and exact implied total-volatility
//! inversion, carried in log-price end to end.
//!
//! Prices here are undiscounted and divided by the forward, so a call is
//! c(k, v) = Phi(d1) - e^k Phi(d2) with d_{1,2} = -k/v +- v/2 and
//! v = sigma sqrt(T) the total volatility. Deep out-of-the-money prices
//! like e^-300 survive because the subtraction is done through ratios of
//! scaled complementary error functions: for d1, d2 < 0 the identity
//! d1^2/2 = d2^2/2 - k collapses the exponents exactly, leaving
//! log c = log Phi(d1) + log(1 - erfcx(-d2/s2)/erfcx(-d1/s2)).

use crate::error::{Error, Result};
use crate::math::{erfcx, log1mexp, log_norm_cdf, norm_cdf};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Log-moneyness log(K / F_T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogStrike(pub f64);

impl LogStrike {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidInput(format!("log-strike must be finite, got {k}")));
        }
        Ok(LogStrike(k))
    }
}

/// Total implied volatility V = sigma_BS sqrt(T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVol(pub f64);

impl TotalVol {
    pub fn new(v: f64) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "total volatility must be finite and > 0, got {v}"
            )));
        }
        Ok(TotalVol(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionSide {
    Call,
    Put,
}

/// Natural log of a normalized option price, tagged with its side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPrice {
    pub log_price: f64,
    pub side: OptionSide,
}

fn d12(k: f64, v: f64) -> (f64, f64) {
    let d1 = -k / v + 0.5 * v;
    (d1, d1 - v)
}

/// log erfcx(x/sqrt(2)) for x >= 0; the log-tail building block.
fn ln_erfcx_scaled(x: f64) -> f64 {
    erfcx(x * FRAC_1_SQRT_2).ln()
}

/// Normalized Black-Scholes call, log price.
pub fn bs_call(k: LogStrike, v: TotalVol) -> NormalizedPrice {
    let (k, v) = (k.0, v.0);
    let (d1, d2) = d12(k, v);
    let log_price = if d1 < 0.0 {
        // Both CDFs are in the tail regime; the exponents of
        // L1 = log Phi(d1) and L2 = k + log Phi(d2) cancel exactly,
        // leaving a ratio of erfcx values.
        let l1 = log_norm_cdf(d1);
        let delta = ln_erfcx_scaled(-d2) - ln_erfcx_scaled(-d1); // = L2 - L1 < 0
        l1 + log1mexp(-delta)
    } else {
        (norm_cdf(d1) - k.exp() * norm_cdf(d2)).max(f64::MIN_POSITIVE).ln()
    };
    NormalizedPrice {
        log_price,
        side: OptionSide::Call,
    }
}

/// Normalized Black-Scholes put, log price: p = e^k Phi(-d2) - Phi(-d1).
pub fn bs_put(k: LogStrike, v: TotalVol) -> NormalizedPrice {
    let (k, v) = (k.0, v.0);
    let (d1, d2) = d12(k, v);
    let log_price = if d2 > 0.0 {
        // Deep OTM put: -d1 < -d2 < 0. Mirror of the call identity,
        // d2^2/2 = d1^2/2 + k collapses the exponents.
        let l1 = k + log_norm_cdf(-d2);
        let delta = ln_erfcx_scaled(d1) - ln_erfcx_scaled(d2); // = L2 - L1 < 0
        l1 + log1mexp(-delta)
    } else {
        (k.exp() * norm_cdf(-d2) - norm_cdf(-d1)).max(f64::MIN_POSITIVE).ln()
    };
    NormalizedPrice {
        log_price,
        side: OptionSide::Put,
    }
}

pub fn bs_price(k: LogStrike, v: TotalVol, side: OptionSide) -> NormalizedPrice {
    match side {
        OptionSide::Call => bs_call(k, v),
        OptionSide::Put => bs_put(k, v),
    }
}

/// Log intrinsic value for the side: call (1-e^k)^+, put (e^k-1)^+.
fn log_intrinsic(k: f64, side: OptionSide) -> f64 {
    match side {
        OptionSide::Call => {
            if k < 0.0 {
                (-k.exp_m1()).ln()
            } else {
                f64::NEG_INFINITY
            }
        }
        OptionSide::Put => {
            if k > 0.0 {
                k.exp_m1().ln()
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// Log of the v -> inf price limit: 1 for calls, e^k for puts.
fn log_sup_price(k: f64, side: OptionSide) -> f64 {
    match side {
        OptionSide::Call => 0.0,
        OptionSide::Put => k,
    }
}

/// Convergence tolerance of the inversion, in log-price.
pub const INVERSION_LOG_TOL: f64 = 1e-12;

/// Exact implied total volatility: the unique v with
/// bs_price(k, v).log_price = price.log_price, to 1e-12 in log-price.
///
/// Bracketed hybrid solver (bisection-safeguarded secant) on the initial
/// bracket [1e-8, sqrt(2|k|) + 10]; the upper end respects the large-k
/// bound V^2 < 2k with padding for small k.
pub fn implied_total_vol(price: &NormalizedPrice, k: LogStrike) -> Result<TotalVol> {
    let kk = k.0;
    let target = price.log_price;
    if !target.is_finite() {
        return Err(Error::PriceOutOfBounds(format!(
            "log-price must be finite, got {target}"
        )));
    }
    let lo_bound = log_intrinsic(kk, price.side);
    let hi_bound = log_sup_price(kk, price.side);
    if target <= lo_bound {
        return Err(Error::PriceOutOfBounds(format!(
            "log-price {target} at or below intrinsic {lo_bound} (k={kk})"
        )));
    }
    if target >= hi_bound {
        return Err(Error::PriceOutOfBounds(format!(
            "log-price {target} at or above the supremum {hi_bound} (k={kk})"
        )));
    }

    let mut lo = 1e-8;
    let mut hi = (2.0 * kk.abs()).sqrt() + 10.0;
    let f = |v: f64| bs_price(LogStrike(kk), TotalVol(v), price.side).log_price - target;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::BracketFailure(format!(
            "target log-price {target} not bracketed by v in [{lo}, {hi}] \
             (f(lo)={flo}, f(hi)={fhi}); upstream pricing is inconsistent"
        )));
    }
    if flo == 0.0 {
        return TotalVol::new(lo);
    }
    if fhi == 0.0 {
        return TotalVol::new(hi);
    }

    // Secant proposals clamped into the bracket, bisection fallback.
    let mut v0 = lo;
    let mut f0 = flo;
    let mut v1 = hi;
    let mut f1 = fhi;
    for _ in 0..200 {
        let mut v = if (f1 - f0).abs() > 0.0 {
            v1 - f1 * (v1 - v0) / (f1 - f0)
        } else {
            0.5 * (lo + hi)
        };
        if !(v > lo && v < hi) {
            v = 0.5 * (lo + hi);
        }
        let fv = f(v);
        if fv.abs() <= INVERSION_LOG_TOL {
            return TotalVol::new(v);
        }
        if fv < 0.0 {
            lo = v;
            flo = fv;
        } else {
            hi = v;
            fhi = fv;
        }
        v0 = v1;
        f0 = f1;
        v1 = v;
        f1 = fv;
        if hi - lo <= f64::EPSILON * (1.0 + hi) {
            break;
        }
    }
    // Fall out with the best bracket midpoint if f is extremely flat in v
    // (possible for prices within rounding of the intrinsic).
    let v = 0.5 * (lo + hi);
    if f(v).abs() <= 1e-9 || (flo.abs().min(fhi.abs()) <= 1e-9) {
        return TotalVol::new(if flo.abs() < fhi.abs() { lo } else { hi }.max(v.min(hi)));
    }
    Err(Error::BracketFailure(format!(
        "implied vol did not converge for k={kk}, target {target}"
    )))
}

/// Mill's-ratio bounds on the normal tail, for x > 0:
/// e^{-x^2/2}/(sqrt(2 pi) x) (1 - 1/x^2) <= Phi(-x) <= e^{-x^2/2}/(sqrt(2 pi) x).
pub fn normal_cdf_bounds(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "normal_cdf_bounds requires x > 0, got {x}"
        )));
    }
    let upper = (-0.5 * x * x).exp() / (crate::math::SQRT_2PI * x);
    let lower = upper * (1.0 - 1.0 / (x * x));
    Ok((lower, upper))
}

/// The residual eps1(k) = log c(k) + d1(k, v)^2 / 2; bounded by O(log k)
/// along any admissible smile.
pub fn epsilon1_residual(k: LogStrike, v: TotalVol, price: &NormalizedPrice) -> f64 {
    let (d1, _) = d12(k.0, v.0);
    price.log_price + 0.5 * d1 * d1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // mpmath reference values for the normalized log prices.
    const CALL_REF: [(f64, f64, f64); 6] = [
        (2.0, 0.3, -27.21302350058739071),
        (30.0, 1.0, -442.8493780823036354),
        (5.0, 0.7, -28.33237724620898829),
        (-2.0, 0.3, -0.1454134578686213197),
        (0.0, 0.2, -2.530042001547238511),
        (0.5, 2.5, -0.3120954153495418681),
    ];
    const PUT_REF: [(f64, f64, f64); 5] = [
        (-2.0, 0.3, -29.21302350058739071),
        (-30.0, 1.0, -472.8493780823036354),
        (-0.5, 0.2, -8.076139443267508447),
        (2.0, 0.3, 1.85458654213137868),
        (0.0, 0.2, -2.530042001547238511),
    ];

    #[test]
    fn call_log_prices_match_reference() {
        for &(k, v, want) in &CALL_REF {
            let got = bs_call(LogStrike(k), TotalVol(v)).log_price;
            assert!(
                (got - want).abs() < 1e-10 * want.abs().max(1.0),
                "c({k},{v}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn put_log_prices_match_reference() {
        for &(k, v, want) in &PUT_REF {
            let got = bs_put(LogStrike(k), TotalVol(v)).log_price;
            assert!(
                (got - want).abs() < 1e-10 * want.abs().max(1.0),
                "p({k},{v}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn atm_call_is_two_phi_minus_one() {
        // 2 Phi(0.1) - 1, cross-checked against a Taylor-series oracle for
        // Phi around 0 (independent of the erfcx route).
        let series_phi_0_1 = {
            // Phi(x) = 1/2 + phi(0) (x - x^3/6 + x^5/40 - x^7/336)
            let x: f64 = 0.1;
            0.5 + (x - x.powi(3) / 6.0 + x.powi(5) / 40.0 - x.powi(7) / 336.0)
                / crate::math::SQRT_2PI
        };
        let want = (2.0 * series_phi_0_1 - 1.0).ln();
        let got = bs_call(LogStrike(0.0), TotalVol(0.2)).log_price;
        assert!((got - want).abs() < 1e-12, "got {got} want {want}");
        // frozen mpmath value of the price itself
        assert!((got.exp() - 0.079655674554057962931).abs() < 1e-15);
    }

    #[test]
    fn small_vol_limits_are_intrinsic() {
        // OTM call: k=0.5, v -> 0+ gives price -> 0
        let c = bs_call(LogStrike(0.5), TotalVol(1e-6)).log_price;
        assert!(c < -1e9);
        // ITM call: k=-0.5, v -> 0+ gives price -> 1 - e^-0.5
        let c = bs_call(LogStrike(-0.5), TotalVol(1e-6)).log_price;
        let want = (1.0 - (-0.5_f64).exp()).ln();
        assert!((c - want).abs() < 1e-12, "got {c} want {want}");
    }

    #[test]
    fn monotone_in_vol() {
        for &k in &[-3.0, -0.5, 0.0, 0.5, 3.0, 10.0] {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..=60 {
                let v = 0.05 * i as f64;
                let c = bs_call(LogStrike(k), TotalVol(v)).log_price;
                assert!(c > prev, "k={k} v={v}: {c} <= {prev}");
                prev = c;
            }
        }
    }

    #[test]
    fn price_strictly_inside_bounds() {
        for &k in &[-4.0, -1.0, 0.0, 1.0, 4.0] {
            for &v in &[0.05, 0.5, 2.0] {
                let c = bs_call(LogStrike(k), TotalVol(v)).log_price;
                assert!(c < 0.0, "k={k} v={v}");
                if k < 0.0 {
                    assert!(c > (-(k.exp_m1())).ln(), "k={k} v={v}");
                }
            }
        }
    }

    #[test]
    fn put_call_parity_linear_regime() {
        // c - p = 1 - e^k where both prices are representable linearly
        for &k in &[-1.0, -0.3, 0.0, 0.3, 1.0] {
            for &v in &[0.2, 0.8, 1.5] {
                let c = bs_call(LogStrike(k), TotalVol(v)).log_price.exp();
                let p = bs_put(LogStrike(k), TotalVol(v)).log_price.exp();
                assert!(
                    (c - p - (1.0 - k.exp())).abs() < 1e-14,
                    "k={k} v={v}: {c} {p}"
                );
            }
        }
    }

    #[test]
    fn inversion_round_trip_spot_checks() {
        for &(k, v) in &[
            (0.0, 0.2),
            (2.0, 0.3),
            (30.0, 1.0),
            (5.0, 0.01),
            (-5.0, 0.01),
            (-2.0, 1.7),
            (0.5, 2.9),
        ] {
            let c = bs_call(LogStrike(k), TotalVol(v));
            let got = implied_total_vol(&c, LogStrike(k)).unwrap().0;
            assert!((got - v).abs() < 1e-10, "k={k} v={v}: got {got}");
            let p = bs_put(LogStrike(k), TotalVol(v));
            let got = implied_total_vol(&p, LogStrike(k)).unwrap().0;
            assert!((got - v).abs() < 1e-10, "put k={k} v={v}: got {got}");
        }
    }

    #[test]
    fn inversion_rejects_out_of_bounds() {
        // price exactly at intrinsic for an ITM call
        let k = -0.5_f64;
        let intrinsic = (1.0 - k.exp()).ln();
        let bad = NormalizedPrice {
            log_price: intrinsic,
            side: OptionSide::Call,
        };
        assert!(matches!(
            implied_total_vol(&bad, LogStrike(k)),
            Err(Error::PriceOutOfBounds(_))
        ));
        // price >= 1
        let bad = NormalizedPrice {
            log_price: 0.0,
            side: OptionSide::Call,
        };
        assert!(matches!(
            implied_total_vol(&bad, LogStrike(0.3)),
            Err(Error::PriceOutOfBounds(_))
        ));
    }

    #[test]
    fn mills_bounds_bracket_phi() {
        assert!(normal_cdf_bounds(0.0).is_err());
        assert!(normal_cdf_bounds(-1.0).is_err());
        let (lo, hi) = normal_cdf_bounds(1.0).unwrap();
        assert_eq!(lo, 0.0); // 1 - 1/x^2 = 0 at x = 1
        assert!(hi > 0.0);
        // Phi(-2) = 0.02275013... sits inside the bounds (mpmath value)
        let (lo, hi) = normal_cdf_bounds(2.0).unwrap();
        let phi_m2 = 0.0227501319481792072;
        assert!(lo <= phi_m2 && phi_m2 <= hi, "{lo} {phi_m2} {hi}");
        // the bounds tighten: upper/Phi -> 1
        for &x in &[5.0, 10.0, 20.0, 30.0] {
            let (lo, hi) = normal_cdf_bounds(x).unwrap();
            let phi = norm_cdf(-x);
            assert!(lo <= phi && phi <= hi, "x={x}");
            assert!(hi / phi < 1.0 + 2.0 / (x * x), "x={x}: {}", hi / phi);
        }
    }

    #[test]
    fn epsilon1_definition_and_growth() {
        // mpmath reference for BS sigma=0.2, T=1 flat smile
        const REF: [(f64, f64); 3] = [
            (2.0, -7.1624663283665586583),
            (4.0, -8.5272518485997885778),
            (8.0, -9.9080000462113624728),
        ];
        for &(k, want) in &REF {
            let v = TotalVol(0.2);
            let c = bs_call(LogStrike(k), v);
            let e1 = epsilon1_residual(LogStrike(k), v, &c);
            assert!((e1 - want).abs() < 1e-9, "k={k}: got {e1} want {want}");
        }
        // |eps1|/log k stays bounded on this sequence (oracle constant 11)
        for &(k, want) in &REF {
            assert!(want.abs() / k.ln() < 11.0);
        }
        // d1 = 0 at k = v^2/2: eps1 reduces to the log price
        let v = TotalVol(0.6);
        let k = LogStrike(0.18);
        let c = bs_call(k, v);
        let e1 = epsilon1_residual(k, v, &c);
        assert!((e1 - c.log_price).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn round_trip_property(k in -5.0_f64..5.0, v in 0.01_f64..3.0) {
            let c = bs_call(LogStrike(k), TotalVol(v));
            let got = implied_total_vol(&c, LogStrike(k)).unwrap().0;
            prop_assert!((got - v).abs() <= 1e-10, "k={} v={} got={}", k, v, got);
        }

        #[test]
        fn call_price_in_open_interval(k in -5.0_f64..5.0, v in 0.01_f64..3.0) {
            let c = bs_call(LogStrike(k), TotalVol(v)).log_price;
            prop_assert!(c < 0.0);
            if k < 0.0 {
                prop_assert!(c > (-(k.exp_m1())).ln());
            } else {
                prop_assert!(c.is_finite());
            }
        }
    }
}
