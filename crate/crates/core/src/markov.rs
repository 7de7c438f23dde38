//! Sharp derivative factors M(E, n, α) = sup{‖DᵅP‖_E/‖P‖_E : deg P ≤ n},
//! exponent fits, and certificate checks for the two polynomial
//! inequality families: gradient bounds M·n^m (per-order) and the
//! stronger per-multi-index form M^{|α|} n^{m|α|}/(|α|!)^{m−1}.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::{ExtremalEngine, ExtremalOptions};
use crate::poly::{multi_indices_up_to, MultiIndex};
use crate::sets::CompactSetDescriptor;

#[derive(Clone, Copy, Debug)]
pub struct MarkovOptions {
    pub extremal: ExtremalOptions,
    /// Re-run at doubled density and flag entries drifting > 0.5%.
    pub stability_check: bool,
}

impl Default for MarkovOptions {
    fn default() -> Self {
        MarkovOptions {
            extremal: ExtremalOptions::default(),
            stability_check: true,
        }
    }
}

/// Relative density-doubling drift above which an entry is flagged.
pub const STABILITY_DRIFT: f64 = 0.005;

#[derive(Clone, Debug)]
pub struct MarkovFactorResult {
    pub factor: f64,
    pub stable: bool,
    pub drift: f64,
    pub phase_relaxation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovEntry {
    pub n: usize,
    #[serde(serialize_with = "ser_alpha")]
    pub alpha: MultiIndex,
    pub factor: f64,
    pub stable: bool,
    pub drift: f64,
}

fn ser_alpha<S: serde::Serializer>(a: &MultiIndex, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&a.dash_joined())
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovTable {
    pub set_id: String,
    pub ambient_dim: usize,
    pub entries: Vec<MarkovEntry>,
    pub density: usize,
    pub phase_count: usize,
    /// 1/cos(π/K) for complex sets, 1 for real ones.
    pub phase_relaxation: f64,
    pub max_drift: f64,
    /// A-priori certification upside of the fine-grid norm measurement.
    pub cert_slack: f64,
}

impl MarkovTable {
    /// Stored factor; the zero multi-index has factor 1 by definition.
    pub fn factor(&self, n: usize, alpha: &MultiIndex) -> Option<f64> {
        if alpha.order() == 0 {
            return Some(1.0);
        }
        self.entries
            .iter()
            .find(|e| e.n == n && &e.alpha == alpha)
            .map(|e| e.factor)
    }

    /// Discretization slack folded into certificate tolerances: the
    /// phase relaxation allowance plus the worst density-doubling drift.
    pub fn slack(&self) -> f64 {
        (self.phase_relaxation - 1.0) + self.max_drift + self.cert_slack
    }

    pub fn any_unstable(&self) -> bool {
        self.entries.iter().any(|e| !e.stable)
    }

    /// CSV rendering: set_id, n, alpha (dash-joined), factor,
    /// stability_flag, density, K.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("set_id,n,alpha,factor,stability_flag,density,K\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.set_id,
                e.n,
                e.alpha.dash_joined(),
                e.factor,
                if e.stable { "ok" } else { "unstable" },
                self.density,
                self.phase_count
            ));
        }
        s
    }
}

/// Sharp factor for one (n, α): scans every eval node (and, through the
/// engine, every constraint phase) for the certified LP maximum of
/// |DᵅP(z*)| over ‖P‖_E ≤ 1. Real sets use real coefficients only.
pub fn markov_factor(
    set: &CompactSetDescriptor,
    n: usize,
    alpha: &MultiIndex,
    opts: &MarkovOptions,
) -> Result<MarkovFactorResult> {
    if alpha.dim() != set.ambient_dim() {
        return Err(Error::dim("markov_factor: alpha dim vs ambient dim"));
    }
    let k = alpha.order();
    if k < 1 || k > n {
        return Err(Error::invalid(format!(
            "markov_factor: need 1 <= |alpha| <= n, got |alpha|={k}, n={n}"
        )));
    }
    let engine = ExtremalEngine::new(set, n, opts.extremal)?;
    let base = factor_on_engine(&engine, n, alpha)?;
    if !opts.stability_check {
        return Ok(MarkovFactorResult {
            factor: base.0,
            stable: true,
            drift: 0.0,
            phase_relaxation: base.1,
        });
    }
    let mut dense_opts = opts.extremal;
    dense_opts.density *= 2;
    let dense_engine = ExtremalEngine::new(set, n, dense_opts)?;
    let dense = factor_on_engine(&dense_engine, n, alpha)?;
    let drift = (dense.0 - base.0).abs() / base.0.max(f64::MIN_POSITIVE);
    Ok(MarkovFactorResult {
        factor: base.0,
        stable: drift <= STABILITY_DRIFT,
        drift,
        phase_relaxation: base.1,
    })
}

fn factor_on_engine(engine: &ExtremalEngine, n: usize, alpha: &MultiIndex) -> Result<(f64, f64)> {
    let values: Result<Vec<(f64, f64)>> = engine
        .eval_nodes()
        .to_vec()
        .par_iter()
        .map(|z| {
            let obj = engine.derivative_objective(z, alpha);
            let r = engine.certified_ratio(&obj, n)?;
            Ok((r.value, r.phase_relaxation))
        })
        .collect();
    let values = values?;
    let mut best = 0.0f64;
    let mut relax = 1.0f64;
    for (v, p) in values {
        if v > best {
            best = v;
        }
        relax = p;
    }
    if engine.set.is_real() {
        relax = 1.0;
    }
    Ok((best, relax))
}

/// Assemble the full table for degrees 1..=n_max and all multi-indices
/// with 1 ≤ |α| ≤ min(n, max_order), graded-lex, concurrent solves with
/// a deterministic reduction order.
pub fn build_markov_table(
    set: &CompactSetDescriptor,
    n_max: usize,
    max_order: usize,
    opts: &MarkovOptions,
) -> Result<MarkovTable> {
    if n_max < 1 || max_order < 1 {
        return Err(Error::invalid(
            "build_markov_table: n_max and max_order must be >= 1",
        ));
    }
    set.validate()?;
    let dim = set.ambient_dim();
    let engine = ExtremalEngine::new(set, n_max, opts.extremal)?;
    let dense_engine = if opts.stability_check {
        let mut dense_opts = opts.extremal;
        dense_opts.density *= 2;
        Some(ExtremalEngine::new(set, n_max, dense_opts)?)
    } else {
        None
    };

    let mut jobs = Vec::new();
    for n in 1..=n_max {
        for alpha in multi_indices_up_to(dim, n.min(max_order)) {
            if alpha.order() >= 1 {
                jobs.push((n, alpha));
            }
        }
    }
    let entries: Result<Vec<MarkovEntry>> = jobs
        .par_iter()
        .map(|(n, alpha)| {
            let (factor, _) = factor_on_engine(&engine, *n, alpha)?;
            let (stable, drift) = match &dense_engine {
                Some(de) => {
                    let (f2, _) = factor_on_engine(de, *n, alpha)?;
                    let drift = (f2 - factor).abs() / factor.max(f64::MIN_POSITIVE);
                    (drift <= STABILITY_DRIFT, drift)
                }
                None => (true, 0.0),
            };
            Ok(MarkovEntry {
                n: *n,
                alpha: alpha.clone(),
                factor,
                stable,
                drift,
            })
        })
        .collect();
    let entries = entries?;
    let max_drift = entries.iter().map(|e| e.drift).fold(0.0f64, f64::max);
    let phase_relaxation = if set.is_real() {
        1.0
    } else {
        1.0 / (std::f64::consts::PI / opts.extremal.phase_count as f64).cos()
    };
    Ok(MarkovTable {
        set_id: set.set_id(),
        ambient_dim: dim,
        entries,
        density: opts.extremal.density,
        phase_count: opts.extremal.phase_count,
        phase_relaxation,
        max_drift,
        cert_slack: engine.certification_slack(),
    })
}

/// Least-squares exponent fit at fixed derivative order.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub order: usize,
    /// Fitted growth exponent m̂ (slope of log factor vs log n, divided
    /// by the order).
    pub m_hat: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// Smallest M making the per-multi-index inequality hold over the
    /// whole table with m = m̂.
    pub big_m_hat: f64,
    pub degrees_used: Vec<usize>,
}

pub fn fit_markov_exponent(table: &MarkovTable, order: usize) -> Result<ExponentFit> {
    if order < 1 {
        return Err(Error::invalid("fit_markov_exponent: order must be >= 1"));
    }
    // envelope over multi-indices of the given order, stable entries only
    let mut per_n: Vec<(usize, f64)> = Vec::new();
    for e in &table.entries {
        if e.alpha.order() == order && e.stable {
            match per_n.iter_mut().find(|(n, _)| *n == e.n) {
                Some((_, f)) => *f = f.max(e.factor),
                None => per_n.push((e.n, e.factor)),
            }
        }
    }
    per_n.sort_by_key(|&(n, _)| n);
    if per_n.len() < 4 {
        return Err(Error::invalid(format!(
            "fit_markov_exponent: need >= 4 stable degrees at order {order}, have {}",
            per_n.len()
        )));
    }
    let pts: Vec<(f64, f64)> = per_n
        .iter()
        .map(|&(n, f)| ((n as f64).ln(), f.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let (slope, _intercept, residual) = least_squares(&pts);
    let m_hat = slope / order as f64;
    let big_m_hat = smallest_big_m(table, m_hat);
    Ok(ExponentFit {
        order,
        m_hat,
        residual,
        big_m_hat,
        degrees_used: per_n.iter().map(|&(n, _)| n).collect(),
    })
}

pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = if denom.abs() < 1e-300 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    };
    let intercept = (sy - slope * sx) / n;
    let rss: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

fn smallest_big_m(table: &MarkovTable, m: f64) -> f64 {
    let mut big = 0.0f64;
    for e in &table.entries {
        if !e.stable {
            continue;
        }
        let k = e.alpha.order() as f64;
        let bound = (e.factor * e.alpha.order_factorial().powf(m - 1.0)
            / (e.n as f64).powf(m * k))
        .powf(1.0 / k);
        big = big.max(bound);
    }
    big
}

/// Certificate for ‖DᵅP‖ ≤ M^{|α|} n^{m|α|}/(|α|!)^{m−1} ‖P‖ over the
/// checked table range.
#[derive(Clone, Debug, Serialize)]
pub struct VmiCertificate {
    pub m: f64,
    pub big_m: f64,
    pub max_degree: usize,
    /// max over (n, α) of factor·(|α|!)^{m−1}/(M^{|α|} n^{m|α|}).
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_vmi(table: &MarkovTable, m: f64, big_m: f64) -> Result<VmiCertificate> {
    if m < 1.0 || big_m <= 0.0 {
        return Err(Error::invalid("check_vmi: need m >= 1 and M > 0"));
    }
    let mut residual = 0.0f64;
    let mut max_degree = 0usize;
    for e in &table.entries {
        let k = e.alpha.order() as f64;
        let denom = big_m.powf(k) * (e.n as f64).powf(m * k);
        let r = e.factor * e.alpha.order_factorial().powf(m - 1.0) / denom;
        residual = residual.max(r);
        max_degree = max_degree.max(e.n);
    }
    let tolerance = 1e-6 + table.slack();
    Ok(VmiCertificate {
        m,
        big_m,
        max_degree,
        residual,
        tolerance,
        pass: residual <= 1.0 + tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AmiCheck {
    pub m: f64,
    pub big_m: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Gradient-form check restricted to |α| = 1, the gradient norm bounded
/// by √N times the worst single-direction factor.
pub fn check_ami(table: &MarkovTable, m: f64, big_m: f64) -> Result<AmiCheck> {
    if big_m <= 0.0 {
        return Err(Error::invalid("check_ami: need M > 0"));
    }
    let sqrt_n = (table.ambient_dim as f64).sqrt();
    let mut residual = 0.0f64;
    for e in &table.entries {
        if e.alpha.order() != 1 {
            continue;
        }
        let r = sqrt_n * e.factor / (big_m * (e.n as f64).powf(m));
        residual = residual.max(r);
    }
    let tolerance = 1e-6 + table.slack();
    Ok(AmiCheck {
        m,
        big_m,
        residual,
        tolerance,
        pass: residual <= 1.0 + tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundCheck {
    pub m: f64,
    pub fitted_b: f64,
    /// (order k, observed M_k = sup_n factor/n^{mk}, required B^k/(k!)^{m−1})
    pub per_order: Vec<(usize, f64, f64)>,
    pub holds: bool,
}

/// Checks that the per-order constants M_k = sup_n factor(n,k)/n^{mk}
/// stay above B^k/(k!)^{m−1} with B fitted from k = 1.
pub fn vmi_lower_bound_check(table: &MarkovTable, m: f64) -> Result<LowerBoundCheck> {
    let mut orders: Vec<usize> = table
        .entries
        .iter()
        .filter(|e| e.stable)
        .map(|e| e.alpha.order())
        .collect();
    orders.sort_unstable();
    orders.dedup();
    if orders.is_empty() {
        return Err(Error::invalid("vmi_lower_bound_check: empty table"));
    }
    let m_k = |k: usize| -> f64 {
        table
            .entries
            .iter()
            .filter(|e| e.stable && e.alpha.order() == k)
            .map(|e| e.factor / (e.n as f64).powf(m * k as f64))
            .fold(0.0f64, f64::max)
    };
    // finite tables undershoot the asymptotic per-order constants, so
    // the geometric base is anchored at half the k = 1 constant
    let fitted_b = 0.5 * m_k(1);
    let mut per_order = Vec::new();
    let mut holds = true;
    for &k in &orders {
        let observed = m_k(k);
        let kfact: f64 = (1..=k).map(|i| i as f64).product();
        let required = fitted_b.powi(k as i32) / kfact.powf(m - 1.0);
        if observed < required * (1.0 - 1e-9) {
            holds = false;
        }
        per_order.push((k, observed, required));
    }
    Ok(LowerBoundCheck {
        m,
        fitted_b,
        per_order,
        holds,
    })
}

impl MultiIndex {
    /// |α|! as a float (distinct from the componentwise α!).
    pub fn order_factorial(&self) -> f64 {
        (1..=self.order()).map(|i| i as f64).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{chebyshev_derivative_at_one, factorial_ratio};
    use crate::sets::CompactSetDescriptor as Set;

    fn uni(k: usize) -> MultiIndex {
        MultiIndex::univariate(k)
    }

    fn quick_opts() -> MarkovOptions {
        MarkovOptions {
            extremal: ExtremalOptions::default(),
            stability_check: false,
        }
    }

    #[test]
    fn interval_second_derivative_degree_four() {
        let set = Set::interval(-1.0, 1.0);
        let r = markov_factor(&set, 4, &uni(2), &quick_opts()).unwrap();
        assert!((r.factor - 80.0).abs() < 1e-4 * 80.0, "factor {}", r.factor);
    }

    #[test]
    fn disc_first_derivative_degree_five() {
        let set = Set::unit_disc();
        let r = markov_factor(&set, 5, &uni(1), &quick_opts()).unwrap();
        let band = r.phase_relaxation * 1.01;
        assert!(
            r.factor <= 5.0 * band && r.factor >= 5.0 / band,
            "factor {} band {band}",
            r.factor
        );
    }

    #[test]
    fn interval_degree_one_is_one() {
        let set = Set::interval(-1.0, 1.0);
        let r = markov_factor(&set, 1, &uni(1), &quick_opts()).unwrap();
        assert!((r.factor - 1.0).abs() < 1e-6, "factor {}", r.factor);
    }

    #[test]
    fn rejects_bad_orders() {
        let set = Set::interval(-1.0, 1.0);
        assert!(markov_factor(&set, 2, &uni(3), &quick_opts()).is_err());
        assert!(markov_factor(&set, 2, &uni(0), &quick_opts()).is_err());
    }

    #[test]
    fn chebyshev_exactness_small_degrees() {
        let set = Set::interval(-1.0, 1.0);
        for n in 1..=5usize {
            for k in 1..=n {
                let r = markov_factor(&set, n, &uni(k), &quick_opts()).unwrap();
                let expect = chebyshev_derivative_at_one(n, k).unwrap();
                assert!(
                    (r.factor - expect).abs() < 1e-4 * expect,
                    "n={n} k={k}: {} vs {expect}",
                    r.factor
                );
            }
        }
    }

    #[test]
    fn bernstein_exactness_small_degrees() {
        let set = Set::unit_disc();
        for n in [2usize, 4] {
            for k in [1usize, 2] {
                let r = markov_factor(&set, n, &uni(k), &quick_opts()).unwrap();
                let expect = factorial_ratio(n, k).unwrap();
                let band = r.phase_relaxation * 1.01;
                assert!(
                    r.factor <= expect * band && r.factor >= expect / band,
                    "n={n} k={k}: {} vs {expect}",
                    r.factor
                );
            }
        }
    }

    #[test]
    fn table_monotone_in_degree_and_csv() {
        let set = Set::interval(-1.0, 1.0);
        let table = build_markov_table(&set, 5, 2, &quick_opts()).unwrap();
        for k in 1..=2usize {
            let mut prev = 0.0;
            for n in k..=5 {
                let f = table.factor(n, &uni(k)).unwrap();
                assert!(f >= prev - 1e-9, "not monotone at n={n}, k={k}");
                prev = f;
            }
        }
        assert_eq!(table.factor(3, &MultiIndex::zero(1)), Some(1.0));
        let csv = table.to_csv();
        assert!(csv.starts_with("set_id,n,alpha,factor,stability_flag,density,K\n"));
        // degrees 1..5, orders min(n,2): 1+2+2+2+2 = 9 entries
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn exponent_fit_interval_and_degenerate() {
        let set = Set::interval(-1.0, 1.0);
        let table = build_markov_table(&set, 7, 1, &quick_opts()).unwrap();
        let fit = fit_markov_exponent(&table, 1).unwrap();
        assert!(
            fit.m_hat > 1.9 && fit.m_hat < 2.1,
            "interval m_hat {}",
            fit.m_hat
        );

        // degenerate: constant factors give slope 0 with zero residual
        let mut flat = table.clone();
        for e in &mut flat.entries {
            e.factor = 1.0;
        }
        let fit = fit_markov_exponent(&flat, 1).unwrap();
        assert_eq!(fit.m_hat, 0.0);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn vmi_certificates_interval() {
        let set = Set::interval(-1.0, 1.0);
        let table = build_markov_table(&set, 6, 3, &quick_opts()).unwrap();
        assert!(check_vmi(&table, 2.0, 1.0).unwrap().pass);
        let fail = check_vmi(&table, 2.0, 0.1).unwrap();
        assert!(!fail.pass && fail.residual > 1.0);
        assert!(check_ami(&table, 2.0, 1.0).unwrap().pass);
        let lower = vmi_lower_bound_check(&table, 2.0).unwrap();
        assert!(lower.holds && lower.fitted_b > 0.0);
    }

    #[test]
    fn vmi_certificates_disc() {
        let set = Set::unit_disc();
        let table = build_markov_table(&set, 5, 2, &quick_opts()).unwrap();
        assert!(check_vmi(&table, 1.0, 1.0).unwrap().pass);
        assert!(check_ami(&table, 1.0, 1.0).unwrap().pass);
        assert!(!check_ami(&table, 0.5, 1.0).unwrap().pass);
        // exponent 0 on the factorial: lower bound holds trivially
        assert!(vmi_lower_bound_check(&table, 1.0).unwrap().holds);
    }

    #[test]
    fn polydisc_and_box_upper_bounds() {
        // factor(n, α) ≤ r^{−α} n^{|α|} on a polydisc
        let set = Set::Polydisc {
            center: vec![num_complex::Complex64::new(0.0, 0.0).into()],
            radius: vec![0.5],
        };
        let r = markov_factor(&set, 3, &uni(1), &quick_opts()).unwrap();
        let bound = 2.0 * 3.0; // r^{-1} n
        assert!(r.factor <= bound * r.phase_relaxation * 1.01, "{}", r.factor);

        // factor ≤ 2^{|α|}/(b−a)^α · n^{2α}/α! on a real box ([0,1]: 2·n²)
        let set = Set::RealBox {
            lo: vec![0.0],
            hi: vec![1.0],
        };
        let r = markov_factor(&set, 3, &uni(1), &quick_opts()).unwrap();
        assert!(
            r.factor <= 18.0 * 1.001 && r.factor >= 18.0 * 0.999,
            "{}",
            r.factor
        );
    }

    #[test]
    fn stability_flag_on_smooth_fixture() {
        let set = Set::interval(-1.0, 1.0);
        let opts = MarkovOptions::default();
        let r = markov_factor(&set, 3, &uni(1), &opts).unwrap();
        assert!(r.stable, "drift {}", r.drift);
        assert!(r.drift < STABILITY_DRIFT);
    }

    #[test]
    fn iterated_direction_bound_on_product() {
        // on a product set, mixed factors are bounded by chaining the
        // per-direction factors with degree bookkeeping (plain
        // submultiplicativity is false in general and not asserted)
        let set = Set::Product {
            factors: vec![Set::interval(-1.0, 1.0), Set::interval(-1.0, 1.0)],
        };
        let opts = quick_opts();
        let n = 3usize;
        let f10 = markov_factor(&set, n, &MultiIndex::new(vec![1, 0]), &opts)
            .unwrap()
            .factor;
        let f01 = markov_factor(&set, n, &MultiIndex::new(vec![0, 1]), &opts)
            .unwrap()
            .factor;
        let f11 = markov_factor(&set, n, &MultiIndex::new(vec![1, 1]), &opts)
            .unwrap()
            .factor;
        assert!(f11 <= f10 * f01 * 1.01, "f11={f11} f10={f10} f01={f01}");
    }
}
