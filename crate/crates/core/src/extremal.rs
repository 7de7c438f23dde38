//! Shared engine for discretized sup-norm extremal problems.
//!
//! Both the derivative-factor and the extremal-function computations
//! reduce to: maximize a linear functional of polynomial coefficients
//! subject to ‖P‖ ≤ 1 on the nodes of a set discretization. On top of
//! the raw LP the engine adds
//!
//! * a per-set affine *basis frame* (mapped Chebyshev basis on real
//!   sets, shifted/scaled monomials elsewhere) keeping LP conditioning
//!   acceptable at degree > 16,
//! * *certification*: the LP-extremal polynomial is re-normalized by its
//!   sup-norm measured on a much finer grid, so the reported ratio is a
//!   genuine quotient of an explicit polynomial (grid relaxation makes
//!   the raw LP value overshoot, never the certified one),
//! * *exchange refinement*: nodes where the extremal polynomial exceeds
//!   norm 1 are appended and the LP re-solved, which converges to the
//!   continuous optimum in a handful of rounds.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linprog::{solve_ratio_extremal, RatioSolution};
use crate::poly::{multi_indices_up_to, Basis, MultiIndex};
use crate::sets::{discretize, CompactSetDescriptor, Discretization, Point};

/// Affine per-coordinate frame `u_j = (z_j − center_j)/scale_j` together
/// with the basis functions B_α(u) = Π_j B_{α_j}(u_j).
#[derive(Clone, Debug)]
pub struct BasisFrame {
    pub basis: Basis,
    pub center: Vec<Complex64>,
    pub scale: Vec<f64>,
    pub indices: Vec<MultiIndex>,
}

impl BasisFrame {
    pub fn for_set(set: &CompactSetDescriptor, degree: usize) -> Self {
        let basis = if set.is_real() {
            Basis::Chebyshev
        } else {
            Basis::Monomial
        };
        let boxes = set.bounding_box();
        BasisFrame {
            basis,
            center: boxes.iter().map(|(c, _)| *c).collect(),
            scale: boxes.iter().map(|(_, s)| *s).collect(),
            indices: multi_indices_up_to(boxes.len(), degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Number of basis functions of total degree ≤ d (a prefix of
    /// `indices`, which is graded).
    pub fn prefix_len(&self, d: usize) -> usize {
        self.indices.partition_point(|a| a.order() <= d)
    }

    fn local(&self, z: &[Complex64]) -> Vec<Complex64> {
        z.iter()
            .enumerate()
            .map(|(j, &zj)| (zj - self.center[j]) / self.scale[j])
            .collect()
    }

    /// Row of basis values B_α(z), α over `indices`.
    pub fn row(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.derivative_row(z, &MultiIndex::zero(self.dim()))
    }

    /// Row of derivative values DᵅB_β(z), β over `indices`, including
    /// the chain-rule scale factors of the frame.
    pub fn derivative_row(&self, z: &[Complex64], alpha: &MultiIndex) -> Vec<Complex64> {
        let u = self.local(z);
        let dim = self.dim();
        let max_deg = self.indices.last().map_or(0, |a| a.order());
        // per coordinate: table[a][k] = d^a/du^a B_k(u_j)
        let tables: Vec<Vec<Vec<Complex64>>> = (0..dim)
            .map(|j| {
                let a = alpha.components()[j];
                match self.basis {
                    Basis::Monomial => monomial_derivs(u[j], max_deg, a),
                    Basis::Chebyshev => cheb_derivs(u[j], max_deg, a),
                }
            })
            .collect();
        let scale: f64 = alpha
            .components()
            .iter()
            .enumerate()
            .map(|(j, &a)| self.scale[j].powi(-(a as i32)))
            .product();
        self.indices
            .iter()
            .map(|beta| {
                let mut v = Complex64::new(scale, 0.0);
                for j in 0..dim {
                    let a = alpha.components()[j];
                    let k = beta.components()[j];
                    v *= tables[j][a][k];
                }
                v
            })
            .collect()
    }
}

/// table[a][k] = d^a/du^a u^k for k = 0..=deg, a = 0..=amax.
fn monomial_derivs(u: Complex64, deg: usize, amax: usize) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(amax + 1);
    let mut pow = vec![Complex64::new(1.0, 0.0); deg + 1];
    for k in 1..=deg {
        pow[k] = pow[k - 1] * u;
    }
    for a in 0..=amax {
        let mut row = vec![Complex64::new(0.0, 0.0); deg + 1];
        for k in a..=deg {
            let mut f = 1.0;
            for i in 0..a {
                f *= (k - i) as f64;
            }
            row[k] = pow[k - a] * f;
        }
        out.push(row);
    }
    out
}

/// table[a][k] = T_k^{(a)}(u), via the differentiated recurrence
/// T_{k+1} = 2uT_k − T_{k−1}:  D^aT_{k+1} = 2uD^aT_k + 2aD^{a−1}T_k − D^aT_{k−1}.
fn cheb_derivs(u: Complex64, deg: usize, amax: usize) -> Vec<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![vec![zero; deg + 1]; amax + 1];
    out[0][0] = Complex64::new(1.0, 0.0);
    if deg >= 1 {
        out[0][1] = u;
        if amax >= 1 {
            out[1][1] = Complex64::new(1.0, 0.0);
        }
    }
    for k in 1..deg {
        for a in 0..=amax {
            let prev = if a >= 1 { out[a - 1][k] } else { zero };
            out[a][k + 1] = 2.0 * (u * out[a][k] + a as f64 * prev) - out[a][k - 1];
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct ExtremalOptions {
    pub density: usize,
    pub phase_count: usize,
    /// Exchange rounds after the initial solve (0 = certify only).
    pub max_refine_rounds: usize,
    /// Fine-grid density multiplier for certification.
    pub cert_density_factor: usize,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        ExtremalOptions {
            density: 4,
            phase_count: 32,
            max_refine_rounds: 10,
            cert_density_factor: 32,
        }
    }
}

impl ExtremalOptions {
    /// Tensor-product sets get a smaller certification multiplier; their
    /// fine grids grow with the power of the dimension.
    pub fn effective_cert_factor(&self, set: &CompactSetDescriptor) -> usize {
        if is_tensor(set) {
            self.cert_density_factor.min(4).max(2)
        } else {
            self.cert_density_factor
        }
    }
}

fn is_tensor(set: &CompactSetDescriptor) -> bool {
    match set {
        CompactSetDescriptor::RealBox { lo, .. } => lo.len() > 1,
        CompactSetDescriptor::Polydisc { center, .. } => center.len() > 1,
        CompactSetDescriptor::Product { .. } => true,
        CompactSetDescriptor::Union { members, .. } => members.iter().any(is_tensor),
        _ => false,
    }
}

/// A certified extremal ratio `L(P*)/‖P*‖` for an explicit polynomial.
#[derive(Clone, Debug)]
pub struct CertifiedRatio {
    /// Certified quotient (raw LP optimum divided by the measured
    /// sup-norm of the extremal polynomial).
    pub value: f64,
    /// Final LP optimum on the (refined) node set.
    pub raw_value: f64,
    /// Measured sup-norm of the extremal polynomial on the fine grid.
    pub sup_norm: f64,
    pub rounds: usize,
    pub phase_relaxation: f64,
    /// Coefficients of the extremal polynomial in the engine frame.
    pub coefficients: Vec<Complex64>,
}

/// Reusable per-(set, degree) solver state: node rows at the top degree,
/// a fine certification grid, and graded index bookkeeping that lets the
/// same rows serve every lower degree as a prefix.
pub struct ExtremalEngine {
    pub set: CompactSetDescriptor,
    pub frame: BasisFrame,
    pub degree: usize,
    pub opts: ExtremalOptions,
    real: bool,
    node_points: Vec<Point>,
    node_rows: Vec<Vec<Complex64>>,
    fine_rows: Vec<Vec<Complex64>>,
    fine_points: Vec<Point>,
    fine_segments: Vec<(usize, usize)>,
}

impl ExtremalEngine {
    pub fn new(
        set: &CompactSetDescriptor,
        degree: usize,
        opts: ExtremalOptions,
    ) -> Result<ExtremalEngine> {
        if degree < 1 {
            return Err(Error::invalid("extremal engine: degree must be >= 1"));
        }
        let frame = BasisFrame::for_set(set, degree);
        let disc = discretize(set, degree, opts.density, opts.phase_count)?;
        let cert = opts.effective_cert_factor(set);
        let fine = discretize(set, degree, opts.density * cert, opts.phase_count)?;
        let node_rows = disc
            .constraint_nodes
            .iter()
            .map(|p| frame.row(p))
            .collect();
        let fine_rows = fine
            .constraint_nodes
            .iter()
            .map(|p| frame.row(p))
            .collect();
        Ok(ExtremalEngine {
            set: set.clone(),
            real: set.is_real(),
            frame,
            degree,
            opts,
            node_points: disc.constraint_nodes,
            node_rows,
            fine_rows,
            fine_points: fine.constraint_nodes,
            fine_segments: fine.segments,
        })
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            constraint_nodes: self.node_points.clone(),
            eval_nodes: self.node_points.clone(),
            segments: Vec::new(),
            density: self.opts.density,
            phase_count: self.opts.phase_count,
            degree_cap: self.degree,
        }
    }

    pub fn eval_nodes(&self) -> &[Point] {
        &self.node_points
    }

    pub fn point_objective(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.frame.row(z)
    }

    pub fn derivative_objective(&self, z: &[Complex64], alpha: &MultiIndex) -> Vec<Complex64> {
        self.frame.derivative_row(z, alpha)
    }

    /// Certified sup ratio at total degree `sub_degree` ≤ engine degree.
    /// `objective` must have the engine's full row length; it is sliced
    /// to the graded prefix internally.
    pub fn certified_ratio(
        &self,
        objective: &[Complex64],
        sub_degree: usize,
    ) -> Result<CertifiedRatio> {
        if sub_degree < 1 || sub_degree > self.degree {
            return Err(Error::invalid(format!(
                "certified_ratio: sub_degree {} out of range 1..={}",
                sub_degree, self.degree
            )));
        }
        if objective.len() != self.frame.len() {
            return Err(Error::dim("certified_ratio: objective length mismatch"));
        }
        let t = self.frame.prefix_len(sub_degree);
        let obj = &objective[..t];
        let mut rows: Vec<Vec<Complex64>> = self
            .node_rows
            .iter()
            .map(|r| r[..t].to_vec())
            .collect();

        let mut rounds = 0usize;
        let mut sol: RatioSolution;
        loop {
            sol = solve_ratio_extremal(obj, &rows, self.real, self.opts.phase_count)?;
            let (sup, offenders) = self.measure(&sol.coefficients, t);
            if sup <= 1.0 + 1e-9 || rounds >= self.opts.max_refine_rounds || offenders.is_empty() {
                return Ok(CertifiedRatio {
                    value: if sol.value == 0.0 { 0.0 } else { sol.value / sup.max(1.0) },
                    raw_value: sol.value,
                    sup_norm: sup,
                    rounds,
                    phase_relaxation: sol.phase_relaxation,
                    coefficients: sol.coefficients,
                });
            }
            for idx in offenders {
                rows.push(self.fine_rows[idx][..t].to_vec());
            }
            rounds += 1;
        }
    }

    /// Measured sup-norm on the fine grid plus the local maxima above
    /// norm 1 (indices into the fine grid, largest first, capped).
    fn measure(&self, coeffs: &[Complex64], t: usize) -> (f64, Vec<usize>) {
        let vals: Vec<f64> = self
            .fine_rows
            .iter()
            .map(|row| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, b) in coeffs.iter().zip(&row[..t]) {
                    acc += c * b;
                }
                acc.norm()
            })
            .collect();
        let mut sup: f64 = 0.0;
        for &v in &vals {
            sup = sup.max(v);
        }
        let mut offenders = Vec::new();
        for &(start, end) in &self.fine_segments {
            for i in start..end {
                if vals[i] <= 1.0 + 1e-9 {
                    continue;
                }
                let left_ok = i == start || vals[i] >= vals[i - 1];
                let right_ok = i + 1 == end || vals[i] >= vals[i + 1];
                if left_ok && right_ok {
                    offenders.push(i);
                }
            }
        }
        offenders.sort_by(|&a, &b| {
            vals[b]
                .partial_cmp(&vals[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        offenders.truncate(4 * (self.degree + 1));
        (sup, offenders)
    }

    /// A-priori bound on the relative upside of certified ratios: the
    /// fine grid can under-measure the sup-norm of a degree-n polynomial
    /// by at most sec(πn/m) − 1 on an m-point member curve.
    pub fn certification_slack(&self) -> f64 {
        let mut slack = 0.0f64;
        for &(start, end) in &self.fine_segments {
            let m = (end - start).max(2) as f64;
            let arg = std::f64::consts::PI * self.degree as f64 / m;
            let s = if arg >= std::f64::consts::FRAC_PI_2 {
                1.0 // degenerate segment (points); sup there is exact
            } else {
                1.0 / arg.cos()
            };
            slack = slack.max(s - 1.0);
        }
        slack
    }

    /// Evaluate a frame-coefficient polynomial at an arbitrary point.
    pub fn eval_coeffs(&self, coeffs: &[Complex64], z: &[Complex64]) -> Complex64 {
        let row = self.frame.row(z);
        coeffs
            .iter()
            .zip(&row)
            .map(|(c, b)| c * b)
            .sum()
    }

    pub fn fine_points(&self) -> &[Point] {
        &self.fine_points
    }
}
