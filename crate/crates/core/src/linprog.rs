//! Self-contained dense linear-programming kernel.
//!
//! Problems are stated as `maximize c·x` over free variables subject to
//! two-sided row bounds `lo ≤ a·x ≤ hi`. Extremal-polynomial problems
//! have few variables (coefficients) and many constraint rows (nodes ×
//! phases), so the kernel pivots on the dual: `min b·y, Aᵀy = c, y ≥ 0`,
//! whose tableau has one row per coefficient. The simplex is two-phase
//! with Bland's anti-cycling rule throughout and a fixed pivot order, so
//! repeated solves are bitwise identical. Primal solutions are recovered
//! from the dual multipliers and re-verified against the stated
//! feasibility and optimality tolerances.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Feasibility / optimality tolerance.
pub const LP_TOL: f64 = 1e-9;
const REDCOST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 200_000;

#[derive(Clone, Debug)]
pub struct LinearProgram {
    /// Maximize `objective · x`.
    pub objective: Vec<f64>,
    /// Dense constraint rows.
    pub rows: Vec<Vec<f64>>,
    /// Per-row `(lo, hi)`; either side may be infinite, not both.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub optimum: f64,
    pub argument: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    /// Plain-text dump for debugging. Line 1: `maximize` followed by the
    /// objective entries; then one `row lo hi a_1 .. a_n` line per
    /// constraint (`-inf`/`inf` for missing bounds).
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("maximize");
        for c in &self.objective {
            write!(s, " {c}").unwrap();
        }
        s.push('\n');
        for (row, (lo, hi)) in self.rows.iter().zip(&self.bounds) {
            write!(s, "row {lo} {hi}").unwrap();
            for a in row {
                write!(s, " {a}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::invalid("lp: no variables"));
        }
        if self.rows.is_empty() {
            return Err(Error::invalid("lp: at least one constraint row required"));
        }
        if self.rows.len() != self.bounds.len() {
            return Err(Error::dim("lp: rows/bounds length mismatch"));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("lp: non-finite objective"));
        }
        for (row, (lo, hi)) in self.rows.iter().zip(&self.bounds) {
            if row.len() != n {
                return Err(Error::dim("lp: row length mismatch"));
            }
            if row.iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid("lp: non-finite row entry"));
            }
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::invalid("lp: bad row bounds"));
            }
            if lo.is_infinite() && hi.is_infinite() {
                return Err(Error::invalid("lp: row without a finite bound"));
            }
        }
        Ok(())
    }
}

/// One-sided inequalities a·x ≤ b equivalent to the stated rows.
fn to_inequalities(lp: &LinearProgram) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, &(lo, hi)) in lp.rows.iter().zip(&lp.bounds) {
        if hi.is_finite() {
            a.push(row.clone());
            b.push(hi);
        }
        if lo.is_finite() {
            a.push(row.iter().map(|v| -v).collect());
            b.push(-lo);
        }
    }
    (a, b)
}

/// Largest power of two not exceeding... rather, 2^ceil(log2 x): exact
/// rescalings only, so normalization never perturbs the solution set.
fn pow2_scale(x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        1.0
    } else {
        2.0f64.powi(x.log2().ceil() as i32)
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    // normalize magnitudes by powers of two: objectives of extremal
    // problems at far-away evaluation points reach 1e70+, which would
    // swamp the phase-1 tolerances otherwise
    let obj_scale = pow2_scale(lp.objective.iter().fold(0.0f64, |a, c| a.max(c.abs())));
    let mut scaled = LinearProgram {
        objective: lp.objective.iter().map(|c| c / obj_scale).collect(),
        rows: lp.rows.clone(),
        bounds: lp.bounds.clone(),
    };
    for (row, bounds) in scaled.rows.iter_mut().zip(scaled.bounds.iter_mut()) {
        let rs = pow2_scale(row.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        if rs != 1.0 {
            for v in row.iter_mut() {
                *v /= rs;
            }
            bounds.0 /= rs;
            bounds.1 /= rs;
        }
    }
    let mut sol = solve_normalized(&scaled)?;
    sol.optimum *= obj_scale;
    Ok(sol)
}

fn solve_normalized(lp: &LinearProgram) -> Result<LpSolution> {
    let (a, b) = to_inequalities(lp);
    let n = lp.objective.len();
    let m = a.len();

    // dual: min b·y s.t. Aᵀ y = c, y >= 0
    let mut at = vec![vec![0.0; m]; n];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            at[j][i] = v;
        }
    }
    match simplex_standard(&at, &lp.objective, &b)? {
        StdOutcome::Optimal {
            objective,
            multipliers,
            basis,
            iterations,
            ..
        } => {
            let viol = |x: &[f64]| -> f64 {
                let mut worst = 0.0f64;
                for (row, bi) in a.iter().zip(&b) {
                    let v: f64 = row.iter().zip(x).map(|(aj, xj)| aj * xj).sum();
                    worst = worst.max(v - bi);
                }
                worst
            };
            let mut x = multipliers;
            if let Some(exact) = recover_vertex(&a, &b, &basis, m, n) {
                if std::env::var("EK_LP_DEBUG").is_ok() {
                    eprintln!("lp-debug: viol(mult)={:.3e} viol(exact)={:.3e} iters={}",
                        viol(&x), viol(&exact), iterations);
                }
                if viol(&exact) <= viol(&x) {
                    x = exact;
                }
            } else if std::env::var("EK_LP_DEBUG").is_ok() {
                eprintln!("lp-debug: recover_vertex SINGULAR, viol(mult)={:.3e} iters={}", viol(&x), iterations);
            }
            // re-verify the recovered primal point; feasibility is
            // checked relative to the row's own magnitude at x
            for (row, &(lo, hi)) in lp.rows.iter().zip(&lp.bounds) {
                let mut v = 0.0;
                let mut mag = 1.0;
                for (a, xj) in row.iter().zip(&x) {
                    v += a * xj;
                    mag += (a * xj).abs();
                }
                if v > hi + LP_TOL * mag || v < lo - LP_TOL * mag {
                    return Err(Error::numerical(format!(
                        "lp: recovered argument violates a row by {:.3e}",
                        (v - hi).max(lo - v)
                    )));
                }
            }
            // report c·x of the refined argument; the drifted dual corner
            // value only serves as a strong-duality cross-check
            let cx: f64 = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
            if (cx - objective).abs() > 1e-4 * (1.0 + objective.abs()) {
                return Err(Error::numerical(format!(
                    "lp: primal/dual value gap {:.3e}",
                    (cx - objective).abs()
                )));
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                optimum: cx,
                argument: x,
                iterations,
            })
        }
        StdOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Infeasible,
            optimum: f64::NEG_INFINITY,
            argument: Vec::new(),
            iterations: 0,
        }),
        StdOutcome::Infeasible => {
            // dual infeasible: primal is unbounded if feasible at all
            if b.iter().all(|&bi| bi >= 0.0) {
                // x = 0 is primal feasible
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    optimum: f64::INFINITY,
                    argument: Vec::new(),
                    iterations: 0,
                });
            }
            if primal_feasible(&a, &b, n)? {
                Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    optimum: f64::INFINITY,
                    argument: Vec::new(),
                    iterations: 0,
                })
            } else {
                Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    optimum: f64::NEG_INFINITY,
                    argument: Vec::new(),
                    iterations: 0,
                })
            }
        }
    }
}

/// Feasibility of {x : a·x ≤ b} with free x, via a phase-1 problem on
/// split variables x = u − v and slacks.
fn primal_feasible(a: &[Vec<f64>], b: &[f64], n: usize) -> Result<bool> {
    let m = a.len();
    // rows of [A, -A, I] (u, v, s >= 0)
    let cols = 2 * n + m;
    let mut rows = vec![vec![0.0; cols]; m];
    for i in 0..m {
        for j in 0..n {
            rows[i][j] = a[i][j];
            rows[i][n + j] = -a[i][j];
        }
        rows[i][2 * n + i] = 1.0;
    }
    let cost = vec![0.0; cols];
    Ok(!matches!(
        simplex_standard(&rows, b, &cost)?,
        StdOutcome::Infeasible
    ))
}

enum StdOutcome {
    Optimal {
        objective: f64,
        #[allow(dead_code)]
        solution: Vec<f64>,
        /// Simplex multipliers of the equality rows.
        multipliers: Vec<f64>,
        /// Final basis assignment (variable basic in each row; values
        /// >= m are artificials).
        basis: Vec<usize>,
        iterations: usize,
    },
    Infeasible,
    Unbounded,
}

/// Two-phase tableau simplex for `min cost·y  s.t.  A y = rhs, y ≥ 0`.
/// Bland's rule for both entering and leaving choices.
fn simplex_standard(a: &[Vec<f64>], rhs: &[f64], cost: &[f64]) -> Result<StdOutcome> {
    let n = a.len(); // equality rows
    let m = cost.len(); // structural variables
    if n == 0 {
        return Ok(StdOutcome::Optimal {
            objective: 0.0,
            solution: Vec::new(),
            multipliers: Vec::new(),
            basis: Vec::new(),
            iterations: 0,
        });
    }
    let width = m + n + 1; // structural + artificial + rhs
    let mut t = vec![0.0f64; (n + 1) * width];
    let stride = width;
    let mut sign = vec![1.0f64; n];
    for i in 0..n {
        if rhs[i] < 0.0 {
            sign[i] = -1.0;
        }
        for j in 0..m {
            t[i * stride + j] = sign[i] * a[i][j];
        }
        t[i * stride + m + i] = 1.0;
        t[i * stride + m + n] = sign[i] * rhs[i];
    }
    let mut basis: Vec<usize> = (m..m + n).collect();

    // phase 1: minimize sum of artificials; reduced costs r_j = c_j - z_j
    for j in 0..m {
        let s: f64 = (0..n).map(|i| t[i * stride + j]).sum();
        t[n * stride + j] = -s;
    }
    t[n * stride + m + n] = -(0..n).map(|i| t[i * stride + m + n]).sum::<f64>();
    // artificial columns have reduced cost 0 in the starting basis

    let mut iterations = 0usize;
    run_simplex(&mut t, stride, n, m + n, &mut basis, &mut iterations, &|_| true)?;
    let phase1 = -t[n * stride + m + n];
    if phase1 > 1e-7 {
        return Ok(StdOutcome::Infeasible);
    }

    // drive artificial variables out of the basis where possible
    for i in 0..n {
        if basis[i] >= m {
            let mut pivot_col = None;
            for j in 0..m {
                if t[i * stride + j].abs() > PIVOT_TOL {
                    pivot_col = Some(j);
                    break;
                }
            }
            if let Some(j) = pivot_col {
                pivot(&mut t, stride, n, i, j);
                basis[i] = j;
            }
            // else: redundant row, artificial stays basic at level 0
        }
    }

    // phase 2: real cost; artificials barred from entering (their cost
    // is 0 so r_art = -pi_i at the end, giving the multipliers)
    for j in 0..m + n {
        t[n * stride + j] = 0.0;
    }
    t[n * stride + m + n] = 0.0;
    for j in 0..m {
        t[n * stride + j] = cost[j];
    }
    // subtract c_B rows to restore reduced-cost form
    for i in 0..n {
        let cb = if basis[i] < m { cost[basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                t[n * stride + j] -= cb * t[i * stride + j];
            }
        }
    }

    let allow = |j: usize| j < m; // bar artificials
    if !run_simplex(&mut t, stride, n, m + n, &mut basis, &mut iterations, &allow)? {
        return Ok(StdOutcome::Unbounded);
    }

    let mut y = vec![0.0; m];
    for i in 0..n {
        if basis[i] < m {
            y[basis[i]] = t[i * stride + m + n];
        }
    }
    let mut multipliers = vec![0.0; n];
    for i in 0..n {
        multipliers[i] = sign[i] * (-t[n * stride + m + i]);
    }
    Ok(StdOutcome::Optimal {
        objective: -t[n * stride + m + n],
        solution: y,
        multipliers,
        basis: basis.to_vec(),
        iterations,
    })
}

/// Exact recovery of the vertex defined by the final dual basis: each
/// basic structural column pins its primal row to equality, each basic
/// artificial pins its primal coordinate to zero. Solved from the
/// original data with partial pivoting, so tableau drift never reaches
/// the returned argument.
fn recover_vertex(
    a: &[Vec<f64>],
    b: &[f64],
    basis: &[usize],
    m: usize,
    n: usize,
) -> Option<Vec<f64>> {
    let mut sys = vec![vec![0.0f64; n + 1]; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < m {
            sys[i][..n].copy_from_slice(&a[bv]);
            sys[i][n] = b[bv];
        } else {
            sys[i][bv - m] = 1.0;
            sys[i][n] = 0.0;
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if sys[row][col].abs() > sys[piv][col].abs() {
                piv = row;
            }
        }
        if sys[piv][col].abs() < 1e-12 {
            return None;
        }
        sys.swap(col, piv);
        for row in col + 1..n {
            let f = sys[row][col] / sys[col][col];
            if f != 0.0 {
                for j in col..=n {
                    sys[row][j] -= f * sys[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut v = sys[col][n];
        for j in col + 1..n {
            v -= sys[col][j] * x[j];
        }
        x[col] = v / sys[col][col];
    }
    Some(x)
}


/// Simplex iterations on a prepared tableau: Dantzig pricing normally,
/// switching to Bland's rule whenever a streak of degenerate pivots
/// stalls the objective (anti-cycling on degeneracy). Returns false on
/// unboundedness.
fn run_simplex(
    t: &mut [f64],
    stride: usize,
    n: usize,
    ncols: usize,
    basis: &mut [usize],
    iterations: &mut usize,
    allow: &dyn Fn(usize) -> bool,
) -> Result<bool> {
    const DEGENERATE_STREAK: usize = 16;
    let mut stalled = 0usize;
    loop {
        *iterations += 1;
        if *iterations > MAX_ITERS {
            return Err(Error::numerical("simplex: iteration cap exceeded"));
        }
        let bland = stalled >= DEGENERATE_STREAK;
        let mut entering = None;
        if bland {
            // lowest index with negative reduced cost
            for j in 0..ncols {
                if allow(j) && t[n * stride + j] < -REDCOST_TOL {
                    entering = Some(j);
                    break;
                }
            }
        } else {
            // most negative reduced cost, ties by lowest index
            let mut best = -REDCOST_TOL;
            for j in 0..ncols {
                let r = t[n * stride + j];
                if allow(j) && r < best {
                    best = r;
                    entering = Some(j);
                }
            }
        }
        let Some(s) = entering else {
            return Ok(true);
        };
        // leaving: min ratio. In Bland mode exact ties break by lowest
        // basis index (the anti-cycling rule needs that); otherwise rows
        // within a hair of the minimal ratio are tie-broken by largest
        // pivot magnitude, which keeps the elimination growth bounded.
        let mut rmin = f64::INFINITY;
        for i in 0..n {
            let a = t[i * stride + s];
            if a > PIVOT_TOL {
                rmin = rmin.min((t[i * stride + ncols] / a).max(0.0));
            }
        }
        let mut leave: Option<(usize, f64)> = None;
        if rmin.is_finite() {
            if bland {
                for i in 0..n {
                    let a = t[i * stride + s];
                    if a > PIVOT_TOL {
                        let ratio = (t[i * stride + ncols] / a).max(0.0);
                        match leave {
                            None => leave = Some((i, ratio)),
                            Some((li, lr)) => {
                                if ratio < lr || (ratio == lr && basis[i] < basis[li]) {
                                    leave = Some((i, ratio));
                                }
                            }
                        }
                    }
                }
            } else {
                let band = rmin + 1e-9 * (1.0 + rmin);
                let mut best_pivot = 0.0f64;
                for i in 0..n {
                    let a = t[i * stride + s];
                    if a > PIVOT_TOL {
                        let ratio = (t[i * stride + ncols] / a).max(0.0);
                        if ratio <= band && a > best_pivot {
                            best_pivot = a;
                            leave = Some((i, rmin));
                        }
                    }
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return Ok(false);
        };
        if ratio <= PIVOT_TOL {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if std::env::var("EK_LP_DEBUG").is_ok() {
            let pv = t[r * stride + s].abs();
            if pv < 1e-6 {
                eprintln!("lp-debug: tiny pivot {:.3e} at iter {}", pv, *iterations);
            }
        }
        pivot(t, stride, n, r, s);
        basis[r] = s;
    }
}

fn pivot(t: &mut [f64], stride: usize, n: usize, r: usize, s: usize) {
    let piv = t[r * stride + s];
    let inv = 1.0 / piv;
    for j in 0..stride {
        t[r * stride + j] *= inv;
    }
    t[r * stride + s] = 1.0;
    for i in 0..=n {
        if i == r {
            continue;
        }
        let f = t[i * stride + s];
        if f != 0.0 {
            for j in 0..stride {
                t[i * stride + j] -= f * t[r * stride + j];
            }
            t[i * stride + s] = 0.0;
        }
    }
}

// ---------------------------------------------------------------------
// ratio-extremal encoding
// ---------------------------------------------------------------------

/// Solution of sup |L(P)| over the polynomials with discretized sup-norm
/// at most 1.
#[derive(Clone, Debug)]
pub struct RatioSolution {
    pub value: f64,
    /// Coefficients of the extremal polynomial in the caller's basis
    /// enumeration.
    pub coefficients: Vec<Complex64>,
    /// Norm relaxation of the phase encoding, 1/cos(π/K).
    pub phase_relaxation: f64,
    pub iterations: usize,
}

/// Maximize |L(P)| subject to |P(node_i)| ≤ 1 at every node.
///
/// With real coefficients each node gives one two-sided row. With
/// complex coefficients each modulus constraint becomes K half-plane
/// rows Re(e^{iθ_k}·P(node)) ≤ 1 over equally spaced phases, which
/// relaxes the norm by at most 1/cos(π/K).
///
/// The objective scan over a φ-grid collapses: the phase grid of the
/// constraints makes the feasible set invariant under P ↦ e^{iθ_k}P, so
/// every grid phase of the objective attains the same optimum and a
/// single solve suffices (for real coefficients the ±P symmetry halves
/// the grid instead). `tests::phase_scan_matches_single_solve` checks
/// this numerically.
pub fn solve_ratio_extremal(
    objective: &[Complex64],
    node_rows: &[Vec<Complex64>],
    real_coefficients: bool,
    phase_count: usize,
) -> Result<RatioSolution> {
    if node_rows.is_empty() {
        return Err(Error::invalid("solve_ratio_extremal: no constraint nodes"));
    }
    if phase_count < 8 {
        return Err(Error::invalid("solve_ratio_extremal: phase_count must be >= 8"));
    }
    let t = objective.len();
    if t == 0 || node_rows.iter().any(|r| r.len() != t) {
        return Err(Error::dim("solve_ratio_extremal: row length mismatch"));
    }
    let phase_relaxation = 1.0 / (std::f64::consts::PI / phase_count as f64).cos();

    if real_coefficients {
        let mut rows = Vec::with_capacity(node_rows.len());
        for row in node_rows {
            let r: Vec<f64> = row.iter().map(|w| w.re).collect();
            // nodes of real sets produce (numerically) real basis rows
            if row.iter().any(|w| w.im.abs() > 1e-9) {
                return Err(Error::invalid(
                    "solve_ratio_extremal: complex node rows with real coefficients",
                ));
            }
            rows.push(r);
        }
        let bounds = vec![(-1.0, 1.0); rows.len()];
        let obj_is_real = objective.iter().all(|w| w.im == 0.0);
        let phases: Vec<f64> = if obj_is_real {
            vec![0.0]
        } else {
            // ±P symmetry: phases modulo π
            (0..phase_count / 2)
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / phase_count as f64)
                .collect()
        };
        let mut best: Option<LpSolution> = None;
        let mut iterations = 0;
        for phi in phases {
            let c: Vec<f64> = objective
                .iter()
                .map(|w| phi.cos() * w.re - phi.sin() * w.im)
                .collect();
            let sol = solve(&LinearProgram {
                objective: c,
                rows: rows.clone(),
                bounds: bounds.clone(),
            })?;
            if sol.status != LpStatus::Optimal {
                return Err(Error::numerical(format!(
                    "solve_ratio_extremal: unexpected status {:?}",
                    sol.status
                )));
            }
            iterations += sol.iterations;
            if best.as_ref().map_or(true, |b| sol.optimum > b.optimum) {
                best = Some(sol);
            }
        }
        let best = best.unwrap();
        Ok(RatioSolution {
            value: best.optimum,
            coefficients: best
                .argument
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
            phase_relaxation,
            iterations,
        })
    } else {
        // variables [Re c_0 .. Re c_{t-1}, Im c_0 .. Im c_{t-1}]
        let mut rows = Vec::with_capacity(node_rows.len() * phase_count);
        let mut bounds = Vec::with_capacity(node_rows.len() * phase_count);
        for row in node_rows {
            for k in 0..phase_count {
                let th = 2.0 * std::f64::consts::PI * k as f64 / phase_count as f64;
                let (s, c) = th.sin_cos();
                let mut r = vec![0.0; 2 * t];
                for (j, w) in row.iter().enumerate() {
                    r[j] = c * w.re - s * w.im; // Re(e^{iθ} w_j)
                    r[t + j] = -(s * w.re + c * w.im); // coefficient of Im c_j
                }
                rows.push(r);
                bounds.push((f64::NEG_INFINITY, 1.0));
            }
        }
        let mut c = vec![0.0; 2 * t];
        for (j, w) in objective.iter().enumerate() {
            c[j] = w.re;
            c[t + j] = -w.im;
        }
        let sol = solve(&LinearProgram {
            objective: c,
            rows,
            bounds,
        })?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::numerical(format!(
                "solve_ratio_extremal: unexpected status {:?}",
                sol.status
            )));
        }
        let coefficients = (0..t)
            .map(|j| Complex64::new(sol.argument[j], sol.argument[t + j]))
            .collect();
        Ok(RatioSolution {
            value: sol.optimum,
            coefficients,
            phase_relaxation,
            iterations: sol.iterations,
        })
    }
}
