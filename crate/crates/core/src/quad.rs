//! Gaussian quadrature rules.
//!
//! [`gauss_hermite`] produces the m-point rule for the standard normal
//! weight (probabilists' convention, weights summing to 1), used for exact
//! disorder averages. [`gauss_legendre_01`] produces the n-point rule on
//! [0,1], used to integrate the interpolation parameter t.
//!
//! Nodes are roots of the orthonormal polynomials, found by a sign-change
//! scan plus bisection and polished with Newton steps; weights come from
//! the Christoffel sum 1/Σ p_k(x)². Both rules are symmetric by
//! construction: the negative half is the mirrored positive half.

use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Orthonormal Hermite value and derivative at x for the standard normal
/// weight: p0 = 1, p_{k+1} = (x·p_k − √k·p_{k−1})/√(k+1), p'_m = √m·p_{m−1}.
/// Also returns Σ_{k<m} p_k(x)² for the Christoffel weight.
fn hermite_eval(m: usize, x: f64) -> (f64, f64, f64) {
    let mut pkm1 = 0.0f64;
    let mut pk = 1.0f64;
    let mut christoffel = 1.0f64;
    for k in 0..m {
        let next = (x * pk - libm::sqrt(k as f64) * pkm1) / libm::sqrt((k + 1) as f64);
        pkm1 = pk;
        pk = next;
        if k + 1 < m {
            christoffel += pk * pk;
        }
    }
    let deriv = libm::sqrt(m as f64) * pkm1;
    (pk, deriv, christoffel)
}

/// m-point Gauss rule for the standard normal weight.
///
/// Returns (nodes ascending, weights); weights sum to 1 and the rule
/// integrates polynomials up to degree 2m−1 exactly.
pub fn gauss_hermite(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::InvalidQuadrature("Gauss-Hermite needs at least 1 node"));
    }
    if m == 1 {
        return Ok((vec![0.0], vec![1.0]));
    }
    // All roots lie inside ±√(4m+2); scan the positive half at a step well
    // below the minimal root spacing ~π/√m.
    let xmax = libm::sqrt((4 * m + 2) as f64);
    let step = core::f64::consts::PI / (8.0 * libm::sqrt(m as f64));
    let positive_roots = m / 2;
    let mut roots = Vec::with_capacity(positive_roots);
    // For odd m, x = 0 is a root; start the scan just above it either way.
    let mut lo = step * 1e-3;
    let mut flo = hermite_eval(m, lo).0;
    while roots.len() < positive_roots && lo < xmax + step {
        let hi = lo + step;
        let fhi = hermite_eval(m, hi).0;
        if flo == 0.0 {
            roots.push(lo);
        } else if flo * fhi < 0.0 {
            roots.push(refine_root(|x| hermite_eval(m, x), lo, hi));
        }
        lo = hi;
        flo = fhi;
    }
    debug_assert_eq!(roots.len(), positive_roots);
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for &r in roots.iter().rev() {
        nodes.push(-r);
        weights.push(1.0 / hermite_eval(m, r).2);
    }
    if m % 2 == 1 {
        nodes.push(0.0);
        weights.push(1.0 / hermite_eval(m, 0.0).2);
    }
    for &r in roots.iter() {
        nodes.push(r);
        weights.push(1.0 / hermite_eval(m, r).2);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok((nodes, weights))
}

/// Legendre P_n and P'_n at x via the three-term recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut pkm1 = 1.0f64;
    let mut pk = x;
    for k in 1..n {
        let next = (((2 * k + 1) as f64) * x * pk - (k as f64) * pkm1) / ((k + 1) as f64);
        pkm1 = pk;
        pk = next;
    }
    let deriv = (n as f64) * (x * pk - pkm1) / (x * x - 1.0);
    (pk, deriv)
}

/// n-point Gauss-Legendre rule mapped to [0,1]; weights sum to 1.
pub fn gauss_legendre_01(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidQuadrature("Gauss-Legendre needs at least 1 node"));
    }
    if n == 1 {
        return Ok((vec![0.5], vec![1.0]));
    }
    // Roots of P_n on (0,1) side of [-1,1], from Chebyshev initial guesses
    // polished by Newton; the negative side is the exact mirror.
    let half = n / 2;
    let mut pos = Vec::with_capacity(half);
    for i in 0..half {
        let mut x = libm::cos(core::f64::consts::PI * ((i as f64) + 0.75) / ((n as f64) + 0.5));
        for _ in 0..60 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if libm::fabs(dx) < 1e-16 {
                break;
            }
        }
        pos.push(x);
    }
    pos.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let weight_of = |x: f64| {
        let (_, dp) = legendre_eval(n, x);
        2.0 / ((1.0 - x * x) * dp * dp)
    };
    for &r in pos.iter().rev() {
        nodes.push(-r);
        weights.push(weight_of(r));
    }
    if n % 2 == 1 {
        nodes.push(0.0);
        weights.push(weight_of(0.0));
    }
    for &r in pos.iter() {
        nodes.push(r);
        weights.push(weight_of(r));
    }
    let total: f64 = weights.iter().sum();
    let mut out_nodes = Vec::with_capacity(n);
    let mut out_weights = Vec::with_capacity(n);
    for (x, w) in nodes.into_iter().zip(weights) {
        out_nodes.push(0.5 * (x + 1.0));
        out_weights.push(w / total);
    }
    Ok((out_nodes, out_weights))
}

/// Bisection to ~1e-15 of the bracket width, then two Newton polish steps.
fn refine_root(eval: impl Fn(f64) -> (f64, f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(lo).0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fmid = eval(mid).0;
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (p, dp, _) = eval(x);
        if dp != 0.0 {
            x -= p / dp;
        }
    }
    x
}

/// Compensated (Neumaier) accumulator for long weighted sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if libm::fabs(self.sum) >= libm::fabs(value) {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial_odd(j: usize) -> f64 {
        // (2j-1)!! = 1·3·5···(2j−1)
        (0..j).map(|i| (2 * i + 1) as f64).product()
    }

    #[test]
    fn hermite_five_matches_analytic_roots() {
        // Roots of the degree-5 polynomial: 0, ±√(5−√10), ±√(5+√10).
        let (nodes, weights) = gauss_hermite(5).unwrap();
        let inner = libm::sqrt(5.0 - libm::sqrt(10.0));
        let outer = libm::sqrt(5.0 + libm::sqrt(10.0));
        let expected = [-outer, -inner, 0.0, inner, outer];
        for (n, e) in nodes.iter().zip(expected) {
            assert!((n - e).abs() < 1e-14, "node {n} vs {e}");
        }
        // Independent oracle values (40-digit Golub-Welsch).
        let expected_w = [
            0.011257411327720688933,
            0.2220759220056126444,
            8.0 / 15.0,
            0.2220759220056126444,
            0.011257411327720688933,
        ];
        for (w, e) in weights.iter().zip(expected_w) {
            assert!((w - e).abs() < 1e-15, "weight {w} vs {e}");
        }
    }

    #[test]
    fn hermite_moments_exact() {
        for m in [2usize, 3, 5, 8, 13, 20, 40, 64] {
            let (nodes, weights) = gauss_hermite(m).unwrap();
            let sum: f64 = weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            // E[x^{2j}] = (2j−1)!! for 2j ≤ 2m−1; odd moments vanish by symmetry.
            for j in 0..m {
                let even: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(2 * j as i32))
                    .sum();
                let exact = double_factorial_odd(j);
                assert!(
                    (even - exact).abs() <= 1e-12 * exact.max(1.0),
                    "m={m} moment {}: {even} vs {exact}",
                    2 * j
                );
                let odd: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(2 * j as i32 + 1))
                    .sum();
                assert!(odd.abs() < 1e-12 * exact.max(1.0));
            }
        }
    }

    #[test]
    fn hermite_nodes_symmetric_bitwise() {
        for m in [2usize, 7, 20, 64, 200] {
            let (nodes, weights) = gauss_hermite(m).unwrap();
            assert_eq!(nodes.len(), m);
            for i in 0..m {
                assert_eq!(nodes[i], -nodes[m - 1 - i]);
                assert_eq!(weights[i], weights[m - 1 - i]);
            }
        }
    }

    #[test]
    fn hermite_large_order_is_sane() {
        let (nodes, weights) = gauss_hermite(200).unwrap();
        let sum: f64 = weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-13);
        let var: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
        assert!((var - 1.0).abs() < 1e-12);
        let m8: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 105.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_five_matches_reference() {
        let (nodes, weights) = gauss_legendre_01(5).unwrap();
        let expected_n = [
            0.046910077030668003601,
            0.23076534494715845448,
            0.5,
            0.76923465505284154552,
            0.9530899229693319964,
        ];
        let expected_w = [
            0.11846344252809454376,
            0.23931433524968323402,
            64.0 / 225.0,
            0.23931433524968323402,
            0.11846344252809454376,
        ];
        for (n, e) in nodes.iter().zip(expected_n) {
            assert!((n - e).abs() < 1e-15);
        }
        for (w, e) in weights.iter().zip(expected_w) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn legendre_monomials_exact() {
        for n in [2usize, 4, 8, 16, 32] {
            let (nodes, weights) = gauss_legendre_01(n).unwrap();
            for k in 0..2 * n {
                let got: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                let exact = 1.0 / ((k + 1) as f64);
                assert!(
                    (got - exact).abs() < 1e-13,
                    "n={n} k={k}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn accumulator_compensates() {
        let mut acc = Accumulator::default();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 10.0);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_legendre_01(0).is_err());
    }
}
