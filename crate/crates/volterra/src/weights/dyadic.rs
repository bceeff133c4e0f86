//! Dyadic ratio tests for the almost-increasing / almost-decreasing weight
//! properties.
//!
//! Property (U): `inf_n nu(1-2^-(n+1)) / nu(1-2^-n) > 0`.
//! Property (L): `limsup_n nu(1-2^-(n+k)) / nu(1-2^-n) < 1` for some shift k.
//! Both together make the weight normal. These are sampled estimates of
//! limit statements, so each check also reports whether the sampled trend
//! has actually settled; a drifting tail yields an inconclusive (and
//! therefore negative) answer instead of a false certificate.

use serde::Serialize;

use super::RadialWeight;
use crate::grid::dyadic_radius;

/// Default dyadic depth for the property checks.
pub const DEFAULT_N_MAX: u32 = 24;
/// Default largest shift probed for property (L).
pub const DEFAULT_K_MAX: u32 = 8;
/// An infimum at or below this is treated as vanishing.
const RATIO_FLOOR: f64 = 1e-3;
/// The tail must sit below 1 by this margin for property (L).
const L_MARGIN: f64 = 1e-3;
/// A sampled sequence whose last-window drift exceeds this is still moving.
const TREND_TOL: f64 = 1e-3;
/// Window (in levels) for limsup proxies and drift estimates.
const TAIL_WINDOW: usize = 6;

/// Outcome of the property (U) check.
#[derive(Clone, Debug, Serialize)]
pub struct UReport {
    pub holds: bool,
    /// Infimum of the sampled ratio sequence.
    pub inf_ratio: f64,
    /// Ratio at each level n: nu(1-2^-(n+1)) / nu(1-2^-n).
    pub ratios: Vec<f64>,
    /// Whether the running infimum had stopped drifting.
    pub conclusive: bool,
}

/// One probed shift of the property (L) check.
#[derive(Clone, Debug, Serialize)]
pub struct LTail {
    pub k: u32,
    /// Max of the ratio sequence over the last window (limsup proxy).
    pub tail_estimate: f64,
    /// Signed change of the ratio across the last window; positive means
    /// the sequence is still climbing.
    pub drift: f64,
    pub holds: bool,
}

/// Outcome of the property (L) check.
#[derive(Clone, Debug, Serialize)]
pub struct LReport {
    pub holds: bool,
    /// Smallest shift k that worked, if any.
    pub best_k: Option<u32>,
    pub tails: Vec<LTail>,
}

/// Sampled property (U): ratios of the weight across consecutive dyadic
/// levels, accepted when the running infimum stays above a floor and has
/// stopped moving over the last quarter of levels.
pub fn check_property_u(nu: &RadialWeight, n_max: u32) -> UReport {
    assert!(n_max >= 8, "property (U) needs dyadic depth of at least 8");
    let n_max = n_max as usize;
    let levels: Vec<f64> = (0..=n_max + 1).map(|n| nu.eval(dyadic_radius(n as f64))).collect();
    let ratios: Vec<f64> = (0..=n_max).map(|n| levels[n + 1] / levels[n]).collect();

    let mut running_inf = Vec::with_capacity(ratios.len());
    let mut inf = f64::INFINITY;
    for &q in &ratios {
        inf = inf.min(q);
        running_inf.push(inf);
    }
    let quarter = (ratios.len() / 4).max(2);
    let settled_at = running_inf.len() - 1 - quarter;
    let drift = running_inf[settled_at] - running_inf[running_inf.len() - 1];
    let conclusive = drift <= TREND_TOL;
    UReport { holds: conclusive && inf > RATIO_FLOOR, inf_ratio: inf, ratios, conclusive }
}

/// Sampled property (L): for each shift k, a limsup proxy over the deepest
/// window. A shift counts only if the proxy sits below 1 by a margin and
/// the sequence is no longer climbing — at any finite depth the log
/// weights' ratios are below 1 yet still drifting toward it, and must not
/// be certified.
pub fn check_property_l(nu: &RadialWeight, n_max: u32, k_max: u32) -> LReport {
    assert!(n_max >= 8, "property (L) needs dyadic depth of at least 8");
    assert!(k_max >= 1, "property (L) probes at least shift 1");
    let n_max = n_max as usize;
    let window = TAIL_WINDOW.min(n_max / 2);

    let deepest = n_max + k_max as usize;
    let levels: Vec<f64> = (0..=deepest).map(|n| nu.eval(dyadic_radius(n as f64))).collect();

    let mut tails = Vec::new();
    let mut best_k = None;
    for k in 1..=k_max {
        let ratios: Vec<f64> =
            (0..=n_max).map(|n| levels[n + k as usize] / levels[n]).collect();
        let tail_estimate =
            ratios[n_max - window..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let drift = ratios[n_max] - ratios[n_max - window];
        let holds = tail_estimate < 1.0 - L_MARGIN && drift <= TREND_TOL;
        if holds && best_k.is_none() {
            best_k = Some(k);
        }
        tails.push(LTail { k, tail_estimate, drift, holds });
    }
    LReport { holds: best_k.is_some(), best_k, tails }
}

/// Normal = (U) and (L), at the default dyadic depth.
pub fn is_normal(nu: &RadialWeight) -> bool {
    check_property_u(nu, DEFAULT_N_MAX).holds
        && check_property_l(nu, DEFAULT_N_MAX, DEFAULT_K_MAX).holds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::make_weight;

    #[test]
    fn standard_weights_have_u_with_ratio_two_to_minus_alpha() {
        for alpha in [0.5, 1.0, 2.0] {
            let nu = make_weight(&format!("std:{alpha}")).unwrap();
            let rep = check_property_u(&nu, 24);
            assert!(rep.holds, "std:{alpha} should satisfy (U)");
            // Dyadic oracle: ratio -> 2^-alpha.
            let last = *rep.ratios.last().unwrap();
            assert!(
                (last - 2f64.powf(-alpha)).abs() < 1e-3,
                "std:{alpha} deep ratio {last} vs 2^-{alpha}"
            );
        }
    }

    #[test]
    fn standard_weights_have_l_at_shift_one() {
        for alpha in [0.5, 1.0, 2.0] {
            let nu = make_weight(&format!("std:{alpha}")).unwrap();
            let rep = check_property_l(&nu, 24, 8);
            assert!(rep.holds);
            assert_eq!(rep.best_k, Some(1), "std:{alpha} should settle at shift 1");
            assert!(is_normal(&nu), "std:{alpha} should be normal");
        }
    }

    #[test]
    fn constant_weight_has_u_not_l() {
        let one = make_weight("one").unwrap();
        let u = check_property_u(&one, 24);
        assert!(u.holds);
        assert!((u.inf_ratio - 1.0).abs() < 1e-15, "constant ratios are exactly 1");
        let l = check_property_l(&one, 24, 8);
        assert!(!l.holds, "ratio identically 1 can never clear the margin");
        assert_eq!(l.best_k, None);
    }

    #[test]
    fn log_weights_have_u_not_l() {
        for alpha in [0.5, 1.0] {
            let nu = make_weight(&format!("log:{alpha}")).unwrap();
            let u = check_property_u(&nu, 40);
            assert!(u.holds, "log:{alpha} should satisfy (U)");
            // The ratio climbs toward 1; the running infimum is pinned at
            // the first level and is flat, hence conclusive.
            assert!(u.conclusive);
            assert!(*u.ratios.last().unwrap() > 0.9, "deep (U)-ratio approaches 1");

            let l = check_property_l(&nu, 40, 8);
            assert!(!l.holds, "log:{alpha} must fail (L): the tail keeps climbing");
            assert_eq!(l.best_k, None);
            for t in &l.tails {
                assert!(
                    t.drift > TREND_TOL || t.tail_estimate >= 1.0 - L_MARGIN,
                    "shift {} was wrongly accepted", t.k
                );
            }
        }
    }

    #[test]
    fn u_ratio_oracle_for_std_one() {
        // nu_1(1-2^-(n+1)) / nu_1(1-2^-n) = 2^-1 (2 - 2^-(n+1)) / (2 - 2^-n),
        // decreasing to 1/2 from above.
        let nu = make_weight("std:1").unwrap();
        let rep = check_property_u(&nu, 24);
        assert!((rep.inf_ratio - 0.5).abs() < 1e-3);
        for (n, &q) in rep.ratios.iter().enumerate() {
            let t0 = 2.0 - 2f64.powi(-(n as i32));
            let t1 = 2.0 - 2f64.powi(-(n as i32 + 1));
            let oracle = 0.5 * t1 / t0;
            assert!((q - oracle).abs() <= 1e-12, "level {n}: {q} vs oracle {oracle}");
        }
    }
}
