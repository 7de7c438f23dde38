//! Multivariate polynomials with complex coefficients in a monomial or
//! per-variable Chebyshev basis, with exact coefficient-level
//! differentiation.
//!
//! Coefficient maps are dense per multi-index and keyed in graded
//! lexicographic order, which fixes the enumeration order everywhere a
//! polynomial is flattened into a vector (LP columns, tables, reports).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multi-index α ∈ ℕ₀ᴺ ordered by total order first, lexicographic second.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// 1-D index (k).
    pub fn univariate(k: usize) -> Self {
        MultiIndex(vec![k])
    }

    /// k times the j-th canonical direction in dimension `dim`.
    pub fn axis(dim: usize, j: usize, k: usize) -> Self {
        let mut c = vec![0; dim];
        c[j] = k;
        MultiIndex(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |α| = α₁ + … + α_N.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    /// α! = α₁!·…·α_N! as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a).map(|i| i as f64).product::<f64>())
            .product()
    }

    /// Dash-joined rendering used by the CSV writers, e.g. `2-0-1`.
    pub fn dash_joined(&self) -> String {
        self.0
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Enumerate all α with dim `dim` and |α| ≤ `max_order`, graded-lex.
pub fn multi_indices_up_to(dim: usize, max_order: usize) -> Vec<MultiIndex> {
    fn rec(dim: usize, order: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if dim == 1 {
            prefix.push(order);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in 0..=order {
            prefix.push(first);
            rec(dim - 1, order - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for order in 0..=max_order {
        let mut prefix = Vec::with_capacity(dim);
        rec(dim, order, &mut prefix, &mut out);
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Monomial,
    /// Chebyshev polynomials of the first kind, per variable.
    Chebyshev,
}

/// Multivariate polynomial, nonzero coefficients only.
#[derive(Clone, Debug)]
pub struct Polynomial {
    dim: usize,
    basis: Basis,
    coeffs: BTreeMap<MultiIndex, Complex64>,
}

const COEFF_EPS: f64 = 0.0; // keep exact zeros out, everything else in

impl Polynomial {
    pub fn new(dim: usize, basis: Basis) -> Self {
        Polynomial {
            dim,
            basis,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        dim: usize,
        basis: Basis,
        terms: impl IntoIterator<Item = (MultiIndex, Complex64)>,
    ) -> Result<Self> {
        let mut p = Polynomial::new(dim, basis);
        for (alpha, c) in terms {
            if alpha.dim() != dim {
                return Err(Error::dim(format!(
                    "term index has dim {}, polynomial has dim {}",
                    alpha.dim(),
                    dim
                )));
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    /// 1-D Chebyshev polynomial T_n as a chebyshev-basis polynomial.
    pub fn chebyshev_t(n: usize) -> Self {
        let mut p = Polynomial::new(1, Basis::Chebyshev);
        p.add_term(MultiIndex::univariate(n), Complex64::new(1.0, 0.0));
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.keys().map(|a| a.order()).max()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Complex64 {
        self.coeffs
            .get(alpha)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: Complex64) {
        debug_assert_eq!(alpha.dim(), self.dim);
        let entry = self.coeffs.entry(alpha.clone()).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm_sqr() <= COEFF_EPS {
            self.coeffs.remove(&alpha);
        }
    }

    /// Exact coefficient-level Dᵅ.
    pub fn differentiate(&self, alpha: &MultiIndex) -> Result<Polynomial> {
        if alpha.dim() != self.dim {
            return Err(Error::dim(format!(
                "derivative index dim {} vs polynomial dim {}",
                alpha.dim(),
                self.dim
            )));
        }
        let mut p = self.clone();
        for (var, &times) in alpha.components().iter().enumerate() {
            for _ in 0..times {
                p = p.differentiate_once(var);
            }
        }
        Ok(p)
    }

    fn differentiate_once(&self, var: usize) -> Polynomial {
        match self.basis {
            Basis::Monomial => {
                let mut out = Polynomial::new(self.dim, self.basis);
                for (alpha, &c) in &self.coeffs {
                    let k = alpha.components()[var];
                    if k == 0 {
                        continue;
                    }
                    let mut comps = alpha.components().to_vec();
                    comps[var] = k - 1;
                    out.add_term(MultiIndex::new(comps), c * k as f64);
                }
                out
            }
            Basis::Chebyshev => self.map_1d_slices(var, cheb_derivative_coeffs),
        }
    }

    /// Apply a 1-D coefficient transform along variable `var`.
    fn map_1d_slices(
        &self,
        var: usize,
        f: impl Fn(&[Complex64]) -> Vec<Complex64>,
    ) -> Polynomial {
        // group coefficients by the multi-index with `var` zeroed
        let mut groups: BTreeMap<MultiIndex, Vec<Complex64>> = BTreeMap::new();
        for (alpha, &c) in &self.coeffs {
            let k = alpha.components()[var];
            let mut comps = alpha.components().to_vec();
            comps[var] = 0;
            let key = MultiIndex::new(comps);
            let slot = groups.entry(key).or_default();
            if slot.len() <= k {
                slot.resize(k + 1, Complex64::new(0.0, 0.0));
            }
            slot[k] = c;
        }
        let mut out = Polynomial::new(self.dim, self.basis);
        for (key, slice) in groups {
            for (k, c) in f(&slice).into_iter().enumerate() {
                if c != Complex64::new(0.0, 0.0) {
                    let mut comps = key.components().to_vec();
                    comps[var] = k;
                    out.add_term(MultiIndex::new(comps), c);
                }
            }
        }
        out
    }

    /// Evaluate at a point, Horner-style per variable (Clenshaw in the
    /// Chebyshev basis).
    pub fn evaluate(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.dim {
            return Err(Error::dim(format!(
                "point dim {} vs polynomial dim {}",
                z.len(),
                self.dim
            )));
        }
        if self.coeffs.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.eval_rec(z, 0, &self.collect_terms()))
    }

    fn collect_terms(&self) -> Vec<(Vec<usize>, Complex64)> {
        self.coeffs
            .iter()
            .map(|(a, c)| (a.components().to_vec(), *c))
            .collect()
    }

    fn eval_rec(&self, z: &[Complex64], var: usize, terms: &[(Vec<usize>, Complex64)]) -> Complex64 {
        if terms.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        if var == self.dim {
            return terms.iter().map(|(_, c)| *c).sum();
        }
        // 1-D coefficients in variable `var`, each a sub-evaluation
        let max_k = terms.iter().map(|(a, _)| a[var]).max().unwrap_or(0);
        let mut coeffs_1d = vec![Complex64::new(0.0, 0.0); max_k + 1];
        let mut buckets: Vec<Vec<(Vec<usize>, Complex64)>> = vec![Vec::new(); max_k + 1];
        for (a, c) in terms {
            buckets[a[var]].push((a.clone(), *c));
        }
        for (k, bucket) in buckets.into_iter().enumerate() {
            if !bucket.is_empty() {
                coeffs_1d[k] = self.eval_rec(z, var + 1, &bucket);
            }
        }
        match self.basis {
            Basis::Monomial => horner(&coeffs_1d, z[var]),
            Basis::Chebyshev => clenshaw(&coeffs_1d, z[var]),
        }
    }

    /// Convert between bases (per variable, exact recurrences).
    pub fn convert_to(&self, basis: Basis) -> Polynomial {
        if basis == self.basis {
            return self.clone();
        }
        let mut p = self.clone();
        for var in 0..self.dim {
            p = match basis {
                Basis::Monomial => p.map_1d_slices(var, cheb_to_mono_coeffs),
                Basis::Chebyshev => p.map_1d_slices(var, mono_to_cheb_coeffs),
            };
        }
        p.basis = basis;
        p
    }
}

fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn clenshaw(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    if coeffs.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    if coeffs.len() == 1 {
        return coeffs[0];
    }
    let two_x = x * 2.0;
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let b = two_x * b1 - b2 + c;
        b2 = b1;
        b1 = b;
    }
    coeffs[0] + x * b1 - b2
}

/// d/dx of Σ aₖTₖ in the Chebyshev basis: bₖ₋₁ = bₖ₊₁ + 2k·aₖ, b₀ halved.
fn cheb_derivative_coeffs(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut b = vec![Complex64::new(0.0, 0.0); n + 1];
    for k in (1..n).rev() {
        b[k - 1] = b[k + 1] + a[k] * (2.0 * k as f64);
    }
    b[0] *= 0.5;
    b.truncate(n - 1);
    b
}

/// Chebyshev-basis coefficients → monomial coefficients (1-D).
fn cheb_to_mono_coeffs(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    // rows of Chebyshev monomial expansions via T_{k+1} = 2xT_k - T_{k-1}
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut t_prev = vec![0.0f64; n]; // T_0
    t_prev[0] = 1.0;
    accumulate(&mut out, &t_prev, a[0]);
    if n == 1 {
        return out;
    }
    let mut t_cur = vec![0.0f64; n]; // T_1
    t_cur[1] = 1.0;
    accumulate(&mut out, &t_cur, a[1]);
    for k in 2..n {
        let mut t_next = vec![0.0f64; n];
        for j in 0..n - 1 {
            t_next[j + 1] += 2.0 * t_cur[j];
        }
        for j in 0..n {
            t_next[j] -= t_prev[j];
        }
        accumulate(&mut out, &t_next, a[k]);
        t_prev = t_cur;
        t_cur = t_next;
    }
    out
}

/// Monomial coefficients → Chebyshev-basis coefficients (1-D),
/// via xᵏ expansion with x·Tⱼ = (Tⱼ₊₁ + Tⱼ₋₁)/2.
fn mono_to_cheb_coeffs(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // x^0 in T basis
    let mut xk = vec![0.0f64; n];
    xk[0] = 1.0;
    accumulate(&mut out, &xk, a[0]);
    for k in 1..n {
        // multiply current T-expansion by x
        let mut next = vec![0.0f64; n];
        for j in 0..n {
            let c = xk[j];
            if c == 0.0 {
                continue;
            }
            if j == 0 {
                next[1] += c;
            } else {
                if j + 1 < n {
                    next[j + 1] += 0.5 * c;
                }
                next[j - 1] += 0.5 * c;
                if j == 1 {
                    // x·T_1 = (T_2 + T_0)/2 handled above; nothing extra
                }
            }
        }
        xk = next;
        accumulate(&mut out, &xk, a[k]);
    }
    out
}

fn accumulate(out: &mut [Complex64], basis_row: &[f64], coeff: Complex64) {
    if coeff == Complex64::new(0.0, 0.0) {
        return;
    }
    for (o, &b) in out.iter_mut().zip(basis_row) {
        if b != 0.0 {
            *o += coeff * b;
        }
    }
}

/// T_n^{(k)}(1) = n²(n²−1)…(n²−(k−1)²) / (1·3·…·(2k−1)), evaluated as a
/// running product of per-factor ratios to keep magnitudes tame.
pub fn chebyshev_derivative_at_one(n: usize, k: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("chebyshev_derivative_at_one: n must be >= 1"));
    }
    if k < 1 || k > n {
        return Err(Error::invalid(format!(
            "chebyshev_derivative_at_one: need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let n2 = (n * n) as f64;
    let mut acc = 1.0f64;
    for j in 0..k {
        acc *= (n2 - (j * j) as f64) / (2 * j + 1) as f64;
    }
    Ok(acc)
}

/// n!/(n−k)! as a float, overflow-safe iterative product.
pub fn factorial_ratio(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!(
            "factorial_ratio: need k <= n, got k={k}, n={n}"
        )));
    }
    let mut acc = 1.0f64;
    for j in 0..k {
        acc *= (n - j) as f64;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol * (1.0 + b.abs()),
            "expected {b}, got {a} (tol {tol})"
        );
    }

    #[test]
    fn multi_index_graded_lex_order() {
        let idx = multi_indices_up_to(2, 2);
        let rendered: Vec<String> = idx.iter().map(|a| a.dash_joined()).collect();
        assert_eq!(
            rendered,
            vec!["0-0", "0-1", "1-0", "0-2", "1-1", "2-0"]
        );
    }

    #[test]
    fn differentiate_power_rule() {
        // x^3 -> 3x^2
        let p = Polynomial::from_terms(1, Basis::Monomial, [(MultiIndex::univariate(3), re(1.0))])
            .unwrap();
        let d = p.differentiate(&MultiIndex::univariate(1)).unwrap();
        assert_eq!(d.coefficient(&MultiIndex::univariate(2)), re(3.0));
        assert_eq!(d.degree(), Some(2));
    }

    #[test]
    fn differentiate_t3_twice() {
        // T3 = 4x^3 - 3x, T3'' = 24x; hand-expanded oracle
        let t3 = Polynomial::chebyshev_t(3);
        let d2 = t3.differentiate(&MultiIndex::univariate(2)).unwrap();
        for x in [-1.0, -0.3, 0.2, 0.9, 2.0] {
            let got = d2.evaluate(&[re(x)]).unwrap();
            assert_close(got.re, 24.0 * x, 1e-12);
            assert!(got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn differentiate_mixed_partial() {
        // x^2 y, alpha = (1,1) -> 2x
        let p = Polynomial::from_terms(
            2,
            Basis::Monomial,
            [(MultiIndex::new(vec![2, 1]), re(1.0))],
        )
        .unwrap();
        let d = p.differentiate(&MultiIndex::new(vec![1, 1])).unwrap();
        assert_eq!(d.coefficient(&MultiIndex::new(vec![1, 0])), re(2.0));
        assert_eq!(d.degree(), Some(1));
    }

    #[test]
    fn differentiate_dimension_mismatch() {
        let p = Polynomial::chebyshev_t(3);
        assert!(p.differentiate(&MultiIndex::new(vec![1, 1])).is_err());
    }

    #[test]
    fn evaluate_chebyshev() {
        let t4 = Polynomial::chebyshev_t(4);
        assert_close(t4.evaluate(&[re(1.0)]).unwrap().re, 1.0, 1e-14);
        // T4(2) by the recurrence by hand: T2(2)=7, T3(2)=26, T4(2)=97
        assert_close(t4.evaluate(&[re(2.0)]).unwrap().re, 97.0, 1e-14);
    }

    #[test]
    fn evaluate_zero_polynomial() {
        let p = Polynomial::new(1, Basis::Monomial);
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
        assert_eq!(p.evaluate(&[re(5.0)]).unwrap(), re(0.0));
    }

    #[test]
    fn basis_roundtrip() {
        // The cheb/mono basis change has condition number ~(1+sqrt(2))^n,
        // so f64 round-trips are tight at moderate degree and loosen at
        // degree 32 (~2e12 amplification of unit roundoff).
        for (deg, tol) in [(8usize, 1e-12), (12, 1e-10), (32, 5e-7)] {
            let mut p = Polynomial::new(1, Basis::Chebyshev);
            for k in 0..=deg {
                let c = 1.0 / (1.0 + k as f64) * if k % 2 == 0 { 1.0 } else { -1.0 };
                p.add_term(MultiIndex::univariate(k), re(c));
            }
            let back = p.convert_to(Basis::Monomial).convert_to(Basis::Chebyshev);
            for k in 0..=deg {
                let a = p.coefficient(&MultiIndex::univariate(k));
                let b = back.coefficient(&MultiIndex::univariate(k));
                assert!(
                    (a - b).norm() <= tol * (1.0 + a.norm()),
                    "deg={deg} k={k}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn conversion_preserves_values_2d() {
        let p = Polynomial::from_terms(
            2,
            Basis::Chebyshev,
            [
                (MultiIndex::new(vec![3, 2]), re(1.5)),
                (MultiIndex::new(vec![0, 4]), Complex64::new(0.0, -2.0)),
                (MultiIndex::new(vec![1, 0]), re(-0.25)),
            ],
        )
        .unwrap();
        let q = p.convert_to(Basis::Monomial);
        for (x, y) in [(0.3, -0.7), (1.2, 0.5), (-2.0, 1.0)] {
            let a = p.evaluate(&[re(x), re(y)]).unwrap();
            let b = q.evaluate(&[re(x), re(y)]).unwrap();
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn derivative_commutes_with_conversion() {
        for deg in [4usize, 9, 16] {
            let mut p = Polynomial::new(1, Basis::Chebyshev);
            for k in 0..=deg {
                p.add_term(MultiIndex::univariate(k), re(((k + 1) as f64).sin()));
            }
            let alpha = MultiIndex::univariate(1);
            let a = p.convert_to(Basis::Monomial).differentiate(&alpha).unwrap();
            let b = p.differentiate(&alpha).unwrap().convert_to(Basis::Monomial);
            for k in 0..deg {
                let ca = a.coefficient(&MultiIndex::univariate(k));
                let cb = b.coefficient(&MultiIndex::univariate(k));
                assert!(
                    (ca - cb).norm() <= 1e-9 * (1.0 + ca.norm()),
                    "deg={deg} k={k}: {ca} vs {cb}"
                );
            }
        }
    }

    #[test]
    fn chebyshev_derivative_at_one_values() {
        assert_close(chebyshev_derivative_at_one(3, 1).unwrap(), 9.0, 1e-15);
        assert_close(chebyshev_derivative_at_one(4, 2).unwrap(), 80.0, 1e-15);
        assert_close(chebyshev_derivative_at_one(1, 1).unwrap(), 1.0, 1e-15);
        assert!(chebyshev_derivative_at_one(3, 4).is_err());
    }

    #[test]
    fn chebyshev_derivative_matches_symbolic_route() {
        // independent oracle: differentiate T_n k times and evaluate at 1
        for n in 1..=12usize {
            for k in 1..=n.min(4) {
                let tn = Polynomial::chebyshev_t(n);
                let d = tn.differentiate(&MultiIndex::univariate(k)).unwrap();
                let via_poly = d.evaluate(&[re(1.0)]).unwrap().re;
                let closed = chebyshev_derivative_at_one(n, k).unwrap();
                assert_close(via_poly, closed, 1e-8);
            }
        }
    }

    #[test]
    fn factorial_ratio_values() {
        assert_eq!(factorial_ratio(5, 1).unwrap(), 5.0);
        assert_eq!(factorial_ratio(5, 2).unwrap(), 20.0);
        assert_eq!(factorial_ratio(8, 8).unwrap(), 40320.0);
        assert!(factorial_ratio(3, 4).is_err());
    }
}
