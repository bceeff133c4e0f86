//! Truncated power series with complex coefficients: the finite-dimensional
//! stand-in for an analytic function on the unit disk.
//!
//! Arithmetic is exact convolution/term-shift on coefficients; norms are
//! sampled sups over a [`GridSpec`] and are lower estimates by design.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{disk_sup, GridError, GridSpec};
use crate::weights::RadialWeight;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series needs at least one coefficient")]
    Empty,
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
}

/// Taylor coefficients `c_0..c_N` of a function analytic on the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (index, c) in coeffs.iter().enumerate() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(SeriesError::NonFinite { index });
            }
        }
        Ok(TruncatedSeries { coeffs })
    }

    /// Series from real coefficients.
    pub fn from_real(coeffs: &[f64]) -> Result<Self, SeriesError> {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        TruncatedSeries { coeffs: vec![Complex64::new(0.0, 0.0)] }
    }

    pub fn one() -> Self {
        TruncatedSeries { coeffs: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn constant(c: Complex64) -> Self {
        TruncatedSeries { coeffs: vec![c] }
    }

    /// The monomial z^n.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        TruncatedSeries { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `c_k`, zero beyond the truncation degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// True when every coefficient has zero imaginary part; such series
    /// satisfy |f(conj z)| = |f(z)| and sups need only half the circle.
    pub fn has_real_coeffs(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }
}

/// Coefficient-wise product truncated at `out_degree`:
/// `c_k = sum_{i+j=k} a_i b_j`.
pub fn cauchy_product(
    a: &TruncatedSeries,
    b: &TruncatedSeries,
    out_degree: usize,
) -> TruncatedSeries {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); out_degree + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let lo = k.saturating_sub(b.degree());
        let hi = k.min(a.degree());
        let mut acc = Complex64::new(0.0, 0.0);
        for i in lo..=hi {
            acc += a.coeffs[i] * b.coeffs[k - i];
        }
        *c = acc;
    }
    TruncatedSeries { coeffs }
}

/// Term-by-term derivative; the constant series maps to the zero series.
pub fn differentiate(a: &TruncatedSeries) -> TruncatedSeries {
    if a.degree() == 0 {
        return TruncatedSeries::zero();
    }
    let coeffs = a.coeffs[1..]
        .iter()
        .enumerate()
        .map(|(j, &c)| c * (j as f64 + 1.0))
        .collect();
    TruncatedSeries { coeffs }
}

/// The primitive vanishing at 0: coefficient k of the result is
/// `a_{k-1}/k` for k >= 1.
pub fn volterra_antiderivative(a: &TruncatedSeries) -> TruncatedSeries {
    let mut coeffs = Vec::with_capacity(a.coeffs.len() + 1);
    coeffs.push(Complex64::new(0.0, 0.0));
    for (j, &c) in a.coeffs.iter().enumerate() {
        coeffs.push(c / (j as f64 + 1.0));
    }
    TruncatedSeries { coeffs }
}

/// Horner evaluation of the truncated series at z.
pub fn evaluate(a: &TruncatedSeries, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in a.coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// A sampled weighted sup with its argmax witness and refinement history.
#[derive(Clone, Debug)]
pub struct SupNorm {
    pub value: f64,
    pub r: f64,
    pub theta: f64,
    /// Running max per dyadic level; golden refinement lifts `value` only.
    pub history: Vec<f64>,
}

impl From<crate::grid::SupOutcome> for SupNorm {
    fn from(o: crate::grid::SupOutcome) -> Self {
        SupNorm { value: o.value, r: o.r, theta: o.theta, history: o.history }
    }
}

/// Sampled `sup nu(|z|) |a(z)|` over the grid, a lower estimate of the
/// weighted sup norm.
pub fn weighted_sup_norm(a: &TruncatedSeries, nu: &RadialWeight, grid: &GridSpec) -> SupNorm {
    let expr = |r: f64, theta: f64| nu.eval(r) * evaluate(a, Complex64::from_polar(r, theta)).norm();
    match disk_sup(&expr, grid, a.has_real_coeffs()) {
        Ok(out) => out.into(),
        // Weights are validated finite and positive and |a| is a polynomial,
        // so this cannot trip; keep a loud failure rather than a silent NaN.
        Err(GridError::NonFinite { r, theta }) => {
            panic!("non-finite weighted sample at r={r}, theta={theta}")
        }
        Err(e) => panic!("invalid grid for weighted_sup_norm: {e}"),
    }
}

/// Sampled Bloch-type norm `|a(0)| + sup nu |a'(z)|`.
pub fn weighted_bloch_norm(a: &TruncatedSeries, nu: &RadialWeight, grid: &GridSpec) -> SupNorm {
    let head = a.coeff(0).norm();
    let mut sup = weighted_sup_norm(&differentiate(a), nu, grid);
    sup.value += head;
    for h in sup.history.iter_mut() {
        *h += head;
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::make_weight;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Brute-force convolution oracle, written independently of
    /// `cauchy_product` (index loops swapped, no range clipping).
    fn conv_oracle(a: &[Complex64], b: &[Complex64], out_degree: usize) -> Vec<Complex64> {
        let mut out = vec![c(0.0, 0.0); out_degree + 1];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                if i + j <= out_degree {
                    out[i + j] += ai * bj;
                }
            }
        }
        out
    }

    #[test]
    fn binomial_square() {
        let a = TruncatedSeries::from_real(&[1.0, 1.0]).unwrap();
        let p = cauchy_product(&a, &a, 2);
        assert_eq!(p.coeffs(), &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn multiplicative_identity() {
        let a = TruncatedSeries::new(vec![c(1.0, 2.0), c(-0.5, 0.25), c(0.0, 3.0)]).unwrap();
        let p = cauchy_product(&a, &TruncatedSeries::one(), a.degree());
        assert_eq!(p, a);
    }

    #[test]
    fn geometric_times_one_minus_z_telescopes() {
        let geo = TruncatedSeries::from_real(&[1.0; 11]).unwrap();
        let lin = TruncatedSeries::from_real(&[1.0, -1.0]).unwrap();
        let p = cauchy_product(&geo, &lin, 10);
        assert_eq!(p.coeff(0), c(1.0, 0.0));
        for k in 1..=10 {
            assert_eq!(p.coeff(k), c(0.0, 0.0), "coefficient {k} should cancel");
        }
    }

    #[test]
    fn derivative_of_square_and_constant() {
        let sq = TruncatedSeries::monomial(2);
        assert_eq!(differentiate(&sq).coeffs(), &[c(0.0, 0.0), c(2.0, 0.0)]);
        let k = TruncatedSeries::constant(c(5.0, 0.0));
        assert_eq!(differentiate(&k), TruncatedSeries::zero());
    }

    #[test]
    fn derivative_term_oracle_on_exponential() {
        // d/dz of sum z^n/n! (n <= 8) = the same series truncated at degree 7.
        let mut fac = 1.0;
        let mut coeffs = vec![1.0];
        for n in 1..=8 {
            fac *= n as f64;
            coeffs.push(1.0 / fac);
        }
        let e = TruncatedSeries::from_real(&coeffs).unwrap();
        let d = differentiate(&e);
        assert_eq!(d.degree(), 7);
        for k in 0..=7 {
            let expect = (k as f64 + 1.0) * e.coeff(k + 1);
            assert_eq!(d.coeff(k), expect);
            // Term oracle: (k+1) * 1/(k+1)! vs 1/k!.
            let direct = e.coeff(k);
            assert!((d.coeff(k) - direct).norm() <= 2.0 * f64::EPSILON * direct.norm());
        }
    }

    #[test]
    fn antiderivative_basics() {
        assert_eq!(
            volterra_antiderivative(&TruncatedSeries::one()).coeffs(),
            &[c(0.0, 0.0), c(1.0, 0.0)]
        );
        let two_z = TruncatedSeries::from_real(&[0.0, 2.0]).unwrap();
        assert_eq!(
            volterra_antiderivative(&two_z).coeffs(),
            &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
        );
    }

    #[test]
    fn evaluate_basics() {
        let a = TruncatedSeries::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(evaluate(&a, c(0.5, 0.0)), c(1.5, 0.0));
        let b = TruncatedSeries::new(vec![c(3.0, -1.0), c(2.0, 2.0)]).unwrap();
        assert_eq!(evaluate(&b, c(0.0, 0.0)), c(3.0, -1.0));
    }

    #[test]
    fn evaluate_geometric_sum_oracle() {
        let geo = TruncatedSeries::from_real(&[1.0; 51]).unwrap();
        let v = evaluate(&geo, c(0.5, 0.0));
        // Truncated geometric sum: (1 - 0.5^51) / (1 - 0.5).
        let expect = (1.0 - 0.5_f64.powi(51)) / 0.5;
        assert!((v - c(expect, 0.0)).norm() < 1e-12);
        assert!((v.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_of_constant_under_standard_weight() {
        let nu = make_weight("std:1").unwrap();
        let n = weighted_sup_norm(&TruncatedSeries::one(), &nu, &GridSpec::default());
        assert!((n.value - 1.0).abs() < 1e-12, "got {}", n.value);
        assert!(n.r < 1e-6, "argmax should sit at the origin, got r={}", n.r);
    }

    #[test]
    fn sup_norm_of_z_matches_calculus_oracle() {
        // max r(1-r^2) = 2/(3 sqrt 3) at r = 1/sqrt 3.
        let nu = make_weight("std:1").unwrap();
        let n = weighted_sup_norm(&TruncatedSeries::monomial(1), &nu, &GridSpec::default());
        let oracle = 2.0 / (3.0 * 3.0_f64.sqrt());
        assert!((n.value - oracle).abs() < 1e-6, "got {}, want {}", n.value, oracle);
        assert!((n.r - 1.0 / 3.0_f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn sup_norm_of_monomials_under_flat_weight() {
        let nu = make_weight("one").unwrap();
        for n in [1usize, 5, 16] {
            let s = weighted_sup_norm(&TruncatedSeries::monomial(n), &nu, &GridSpec::default());
            // Sup of r^n on the sampled radii: deepest grid point dominates.
            let deepest = 1.0 - 2.0_f64.powi(-14);
            assert!(s.value >= deepest.powi(n as i32) - 1e-12);
            assert!(s.value <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn bloch_norm_examples() {
        let nu = make_weight("std:1").unwrap();
        let grid = GridSpec::default();
        let one = weighted_bloch_norm(&TruncatedSeries::one(), &nu, &grid);
        assert!((one.value - 1.0).abs() < 1e-12);
        let z = weighted_bloch_norm(&TruncatedSeries::monomial(1), &nu, &grid);
        assert!((z.value - 1.0).abs() < 1e-12);
        let z2 = weighted_bloch_norm(&TruncatedSeries::monomial(2), &nu, &grid);
        let oracle = 4.0 / (3.0 * 3.0_f64.sqrt());
        assert!((z2.value - oracle).abs() < 1e-6, "got {}, want {}", z2.value, oracle);
    }

    #[test]
    fn errors_on_empty_and_non_finite() {
        assert!(matches!(TruncatedSeries::new(vec![]), Err(SeriesError::Empty)));
        let bad = TruncatedSeries::new(vec![c(1.0, 0.0), c(f64::NAN, 0.0)]);
        assert!(matches!(bad, Err(SeriesError::NonFinite { index: 1 })));
    }

    fn arb_series(max_degree: usize) -> impl Strategy<Value = TruncatedSeries> {
        prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..=max_degree + 1)
            .prop_map(|v| TruncatedSeries::new(v.into_iter().map(|(re, im)| c(re, im)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn cauchy_product_matches_convolution_oracle(
            a in arb_series(24), b in arb_series(24), extra in 0usize..8
        ) {
            let out_degree = a.degree() + b.degree() + extra;
            let p = cauchy_product(&a, &b, out_degree);
            let oracle = conv_oracle(a.coeffs(), b.coeffs(), out_degree);
            for k in 0..=out_degree {
                let d = (p.coeff(k) - oracle[k]).norm();
                prop_assert!(d <= 1e-12, "coefficient {} off by {}", k, d);
            }
        }

        #[test]
        fn fundamental_theorem_roundtrips(a in arb_series(32)) {
            // differentiate(antiderivative(a)) = a: one divide and one
            // multiply by the same integer, exact to a couple of ulps.
            let back = differentiate(&volterra_antiderivative(&a));
            prop_assert_eq!(back.degree(), a.degree());
            for k in 0..=a.degree() {
                let d = (back.coeff(k) - a.coeff(k)).norm();
                prop_assert!(d <= 2.0 * f64::EPSILON * a.coeff(k).norm(),
                    "coefficient {} drifted by {}", k, d);
            }
            // antiderivative(differentiate(a)) restores everything above the
            // constant term.
            let up = volterra_antiderivative(&differentiate(&a));
            prop_assert_eq!(up.coeff(0), c(0.0, 0.0));
            for k in 1..=a.degree() {
                let d = (up.coeff(k) - a.coeff(k)).norm();
                prop_assert!(d <= 2.0 * f64::EPSILON * a.coeff(k).norm(),
                    "coefficient {} drifted by {}", k, d);
            }
        }

        #[test]
        fn sup_norm_monotone_under_grid_refinement(a in arb_series(12)) {
            let nu = make_weight("std:1").unwrap();
            let coarse = GridSpec { radial_levels: 8, radial_substeps: 1, angles: 32, refine_tol: 1e-4 };
            let fine = GridSpec { radial_levels: 10, radial_substeps: 2, angles: 64, refine_tol: 1e-4 };
            // Coarse scan points are a subset of fine scan points, so the
            // scanned sup cannot drop. The polished values are not strictly
            // ordered though: each grid polishes inside its own brackets, and
            // the coarse one can get lucky, so the comparison allows a small
            // relative band on top of the guaranteed scan monotonicity.
            let lo = weighted_sup_norm(&a, &nu, &coarse).value;
            let hi = weighted_sup_norm(&a, &nu, &fine).value;
            prop_assert!(hi >= lo - lo.max(1e-9) * 1e-2, "refined {} < coarse {}", hi, lo);
        }
    }
}
