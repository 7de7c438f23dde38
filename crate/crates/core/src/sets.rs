//! Declarative geometry of compact sets in ℂ¹ and product sets in ℂᴺ:
//! deterministic discretization, Euclidean distance queries, coarse
//! surface sampling, and the parametric disconnected families (onion
//! arcs and polydisc chains accumulating at the origin).
//!
//! Set-description files are JSON objects `{"kind": "...", ...}`,
//! recursive for `union` / `product`. All reals are IEEE-754 doubles.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of ℂᴺ.
pub type Point = Vec<Complex64>;

/// Complex number wire format: `{"re": .., "im": ..}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Optional provenance attached to generated unions (family, truncation
/// index, construction parameters). Recorded in every report that
/// consumes the set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactSetDescriptor {
    RealInterval {
        a: f64,
        b: f64,
    },
    Disc {
        center: ComplexJson,
        radius: f64,
    },
    /// Circular arc {center + radius·e^{it} : t ∈ [theta_start, theta_end]}.
    Arc {
        center: ComplexJson,
        radius: f64,
        theta_start: f64,
        theta_end: f64,
    },
    RealBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Polydisc {
        center: Vec<ComplexJson>,
        radius: Vec<f64>,
    },
    Union {
        members: Vec<CompactSetDescriptor>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        meta: Option<SetMeta>,
    },
    Product {
        factors: Vec<CompactSetDescriptor>,
    },
    Point {
        location: Vec<ComplexJson>,
    },
}

use CompactSetDescriptor as Set;

impl CompactSetDescriptor {
    pub fn interval(a: f64, b: f64) -> Self {
        Set::RealInterval { a, b }
    }

    pub fn disc(center: Complex64, radius: f64) -> Self {
        Set::Disc {
            center: center.into(),
            radius,
        }
    }

    pub fn unit_disc() -> Self {
        Set::disc(Complex64::new(0.0, 0.0), 1.0)
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Set::RealInterval { .. } | Set::Disc { .. } | Set::Arc { .. } => 1,
            Set::RealBox { lo, .. } => lo.len(),
            Set::Polydisc { center, .. } => center.len(),
            Set::Union { members, .. } => members.first().map_or(0, |m| m.ambient_dim()),
            Set::Product { factors } => factors.len(),
            Set::Point { location } => location.len(),
        }
    }

    /// True when the set lies in ℝᴺ ⊂ ℂᴺ, so the extremal problems may
    /// be posed over real coefficients.
    pub fn is_real(&self) -> bool {
        match self {
            Set::RealInterval { .. } | Set::RealBox { .. } => true,
            Set::Disc { .. } | Set::Arc { .. } | Set::Polydisc { .. } => false,
            Set::Union { members, .. } => members.iter().all(|m| m.is_real()),
            Set::Product { factors } => factors.iter().all(|f| f.is_real()),
            Set::Point { location } => location.iter().all(|z| z.im == 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Set::RealInterval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::invalid(format!("real_interval requires a < b, got [{a}, {b}]")));
                }
            }
            Set::Disc { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || !center.re.is_finite() || !center.im.is_finite() {
                    return Err(Error::invalid("disc requires finite center and radius > 0"));
                }
            }
            Set::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                if !(radius.is_finite() && *radius > 0.0)
                    || !center.re.is_finite()
                    || !center.im.is_finite()
                    || !theta_start.is_finite()
                    || !theta_end.is_finite()
                    || theta_end <= theta_start
                {
                    return Err(Error::invalid("arc requires radius > 0 and theta_start < theta_end"));
                }
            }
            Set::RealBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::invalid("real_box requires matching nonempty lo/hi"));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if !(l.is_finite() && h.is_finite() && l < h) {
                        return Err(Error::invalid(format!("real_box requires lo < hi componentwise, got [{l}, {h}]")));
                    }
                }
            }
            Set::Polydisc { center, radius } => {
                if center.is_empty() || center.len() != radius.len() {
                    return Err(Error::invalid("polydisc requires matching nonempty center/radius"));
                }
                for r in radius {
                    if !(r.is_finite() && *r > 0.0) {
                        return Err(Error::invalid("polydisc requires positive polyradius"));
                    }
                }
            }
            Set::Union { members, .. } => {
                if members.is_empty() {
                    return Err(Error::invalid("union requires at least one member"));
                }
                let dim = members[0].ambient_dim();
                for m in members {
                    m.validate()?;
                    if m.ambient_dim() != dim {
                        return Err(Error::dim("union members must share ambient dimension"));
                    }
                }
            }
            Set::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::invalid("product requires at least one factor"));
                }
                for f in factors {
                    f.validate()?;
                    if f.ambient_dim() != 1 {
                        return Err(Error::dim("product factors must be 1-dimensional"));
                    }
                }
            }
            Set::Point { location } => {
                if location.is_empty() {
                    return Err(Error::invalid("point requires a location"));
                }
                for z in location {
                    if !z.re.is_finite() || !z.im.is_finite() {
                        return Err(Error::invalid("point location must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Short deterministic label used in CSV/report columns.
    pub fn set_id(&self) -> String {
        match self {
            Set::RealInterval { a, b } => format!("interval[{a},{b}]"),
            Set::Disc { center, radius } => {
                format!("disc(c={}+{}i,r={})", center.re, center.im, radius)
            }
            Set::Arc { radius, .. } => format!("arc(r={radius})"),
            Set::RealBox { lo, hi } => format!("box({lo:?}x{hi:?})"),
            Set::Polydisc { radius, .. } => format!("polydisc(r={radius:?})"),
            Set::Union { members, meta } => {
                if let Some(meta) = meta {
                    if let Some(fam) = &meta.family {
                        let trunc = meta.trunc.map_or(String::new(), |j| format!(",J={j}"));
                        return format!("{fam}({}{})", members.len(), trunc);
                    }
                }
                format!("union({})", members.len())
            }
            Set::Product { factors } => format!("product({})", factors.len()),
            Set::Point { .. } => "point".into(),
        }
    }

    pub fn meta(&self) -> Option<&SetMeta> {
        match self {
            Set::Union { meta, .. } => meta.as_ref(),
            _ => None,
        }
    }

    /// Per-coordinate enclosing box of the set (over ℂ, per real/imag
    /// part). Used to pick a well-conditioned affine basis frame.
    pub fn bounding_box(&self) -> Vec<(Complex64, f64)> {
        fn merge(acc: &mut Vec<(f64, f64, f64, f64)>, other: Vec<(f64, f64, f64, f64)>) {
            if acc.is_empty() {
                *acc = other;
            } else {
                for (a, o) in acc.iter_mut().zip(other) {
                    a.0 = a.0.min(o.0);
                    a.1 = a.1.max(o.1);
                    a.2 = a.2.min(o.2);
                    a.3 = a.3.max(o.3);
                }
            }
        }
        // (re_min, re_max, im_min, im_max) per coordinate
        fn boxes(set: &Set) -> Vec<(f64, f64, f64, f64)> {
            match set {
                Set::RealInterval { a, b } => vec![(*a, *b, 0.0, 0.0)],
                Set::Disc { center, radius } | Set::Arc { center, radius, .. } => vec![(
                    center.re - radius,
                    center.re + radius,
                    center.im - radius,
                    center.im + radius,
                )],
                Set::RealBox { lo, hi } => {
                    lo.iter().zip(hi).map(|(&l, &h)| (l, h, 0.0, 0.0)).collect()
                }
                Set::Polydisc { center, radius } => center
                    .iter()
                    .zip(radius)
                    .map(|(c, &r)| (c.re - r, c.re + r, c.im - r, c.im + r))
                    .collect(),
                Set::Union { members, .. } => {
                    let mut acc = Vec::new();
                    for m in members {
                        merge(&mut acc, boxes(m));
                    }
                    acc
                }
                Set::Product { factors } => factors.iter().flat_map(boxes).collect(),
                Set::Point { location } => location
                    .iter()
                    .map(|z| (z.re, z.re, z.im, z.im))
                    .collect(),
            }
        }
        boxes(self)
            .into_iter()
            .map(|(rl, rh, il, ih)| {
                let center = Complex64::new(0.5 * (rl + rh), 0.5 * (il + ih));
                let half = 0.5 * ((rh - rl).hypot(ih - il));
                (center, half.max(1e-12))
            })
            .collect()
    }
}

/// Discretized sup-norm data: nodes where ‖P‖ ≤ 1 is enforced and nodes
/// where objectives are scanned.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub constraint_nodes: Vec<Point>,
    pub eval_nodes: Vec<Point>,
    /// Contiguous runs of `constraint_nodes` tracing one member each;
    /// used for local-maximum detection along 1-D members.
    pub segments: Vec<(usize, usize)>,
    pub density: usize,
    pub phase_count: usize,
    pub degree_cap: usize,
}

/// Deterministic node placement: Chebyshev–Lobatto points on real
/// intervals, equally spaced boundary angles on discs/arcs, tensor
/// assembly for products, concatenation for unions. Node counts are
/// density·(degree_cap+1) per 1-D component.
pub fn discretize(
    set: &CompactSetDescriptor,
    degree_cap: usize,
    density: usize,
    phase_count: usize,
) -> Result<Discretization> {
    if degree_cap < 1 {
        return Err(Error::invalid("discretize: degree_cap must be >= 1"));
    }
    if density < 2 {
        return Err(Error::invalid("discretize: density must be >= 2"));
    }
    if phase_count < 8 {
        return Err(Error::invalid("discretize: phase_count must be >= 8"));
    }
    set.validate()?;
    let count = density * (degree_cap + 1);
    let mut nodes = Vec::new();
    let mut segments = Vec::new();
    collect_nodes(set, count, &mut nodes, &mut segments);
    Ok(Discretization {
        eval_nodes: nodes.clone(),
        constraint_nodes: nodes,
        segments,
        density,
        phase_count,
        degree_cap,
    })
}

fn collect_nodes(set: &Set, count: usize, out: &mut Vec<Point>, segments: &mut Vec<(usize, usize)>) {
    let start = out.len();
    match set {
        Set::RealInterval { a, b } => {
            for x in lobatto_points(*a, *b, count) {
                out.push(vec![Complex64::new(x, 0.0)]);
            }
            segments.push((start, out.len()));
        }
        Set::Disc { center, radius } => {
            let c: Complex64 = (*center).into();
            for j in 0..count {
                let t = 2.0 * PI * j as f64 / count as f64;
                out.push(vec![c + radius * Complex64::new(t.cos(), t.sin())]);
            }
            segments.push((start, out.len()));
        }
        Set::Arc {
            center,
            radius,
            theta_start,
            theta_end,
        } => {
            let c: Complex64 = (*center).into();
            let m = count.max(2);
            for j in 0..m {
                let t = theta_start + (theta_end - theta_start) * j as f64 / (m - 1) as f64;
                out.push(vec![c + radius * Complex64::new(t.cos(), t.sin())]);
            }
            segments.push((start, out.len()));
        }
        Set::RealBox { lo, hi } => {
            let grids: Vec<Vec<Complex64>> = lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| {
                    lobatto_points(l, h, count)
                        .into_iter()
                        .map(|x| Complex64::new(x, 0.0))
                        .collect()
                })
                .collect();
            tensor(&grids, out);
            segments.push((start, out.len()));
        }
        Set::Polydisc { center, radius } => {
            let grids: Vec<Vec<Complex64>> = center
                .iter()
                .zip(radius)
                .map(|(c, &r)| {
                    let c: Complex64 = (*c).into();
                    (0..count)
                        .map(|j| {
                            let t = 2.0 * PI * j as f64 / count as f64;
                            c + r * Complex64::new(t.cos(), t.sin())
                        })
                        .collect()
                })
                .collect();
            tensor(&grids, out);
            segments.push((start, out.len()));
        }
        Set::Union { members, .. } => {
            for m in members {
                collect_nodes(m, count, out, segments);
            }
        }
        Set::Product { factors } => {
            let mut grids = Vec::with_capacity(factors.len());
            for f in factors {
                let mut fnodes = Vec::new();
                let mut fseg = Vec::new();
                collect_nodes(f, count, &mut fnodes, &mut fseg);
                grids.push(fnodes.into_iter().map(|p| p[0]).collect::<Vec<_>>());
            }
            tensor(&grids, out);
            segments.push((start, out.len()));
        }
        Set::Point { location } => {
            out.push(location.iter().map(|&z| z.into()).collect());
            segments.push((start, out.len()));
        }
    }
}

/// Chebyshev–Lobatto points of [a, b], endpoints included, descending
/// from b to a. Deterministic for fixed inputs.
fn lobatto_points(a: f64, b: f64, count: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    if count == 1 {
        return vec![mid];
    }
    (0..count)
        .map(|j| mid + half * (PI * j as f64 / (count - 1) as f64).cos())
        .collect()
}

fn tensor(grids: &[Vec<Complex64>], out: &mut Vec<Point>) {
    let n = grids.len();
    let mut idx = vec![0usize; n];
    loop {
        out.push((0..n).map(|d| grids[d][idx[d]]).collect());
        let mut d = n;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < grids[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Euclidean distance from z to the set; 0 iff z ∈ E.
pub fn distance(set: &CompactSetDescriptor, z: &[Complex64]) -> Result<f64> {
    if z.len() != set.ambient_dim() {
        return Err(Error::dim(format!(
            "distance: point dim {} vs ambient dim {}",
            z.len(),
            set.ambient_dim()
        )));
    }
    Ok(dist_unchecked(set, z))
}

fn dist_unchecked(set: &Set, z: &[Complex64]) -> f64 {
    match set {
        Set::RealInterval { a, b } => {
            let x = z[0].re;
            let dx = (a - x).max(0.0).max(x - b);
            dx.hypot(z[0].im)
        }
        Set::Disc { center, radius } => {
            let c: Complex64 = (*center).into();
            ((z[0] - c).norm() - radius).max(0.0)
        }
        Set::Arc {
            center,
            radius,
            theta_start,
            theta_end,
        } => {
            let c: Complex64 = (*center).into();
            let w = z[0] - c;
            let rho = w.norm();
            let theta = w.im.atan2(w.re);
            // normalize into [theta_start, theta_start + 2π)
            let span = theta_end - theta_start;
            let mut t = theta - theta_start;
            t -= (t / (2.0 * PI)).floor() * 2.0 * PI;
            if rho > 0.0 && t <= span {
                (rho - radius).abs()
            } else {
                let e1 = c + radius * Complex64::new(theta_start.cos(), theta_start.sin());
                let e2 = c + radius * Complex64::new(theta_end.cos(), theta_end.sin());
                (z[0] - e1).norm().min((z[0] - e2).norm())
            }
        }
        Set::RealBox { lo, hi } => {
            let mut s = 0.0;
            for (j, zj) in z.iter().enumerate() {
                let dx = (lo[j] - zj.re).max(0.0).max(zj.re - hi[j]);
                s += dx * dx + zj.im * zj.im;
            }
            s.sqrt()
        }
        Set::Polydisc { center, radius } => {
            let mut s = 0.0;
            for (j, zj) in z.iter().enumerate() {
                let c: Complex64 = center[j].into();
                let d = ((zj - c).norm() - radius[j]).max(0.0);
                s += d * d;
            }
            s.sqrt()
        }
        Set::Union { members, .. } => members
            .iter()
            .map(|m| dist_unchecked(m, z))
            .fold(f64::INFINITY, f64::min),
        Set::Product { factors } => {
            let mut s = 0.0;
            for (j, f) in factors.iter().enumerate() {
                let d = dist_unchecked(f, &z[j..j + 1]);
                s += d * d;
            }
            s.sqrt()
        }
        Set::Point { location } => {
            let mut s = 0.0;
            for (j, zj) in z.iter().enumerate() {
                let p: Complex64 = location[j].into();
                s += (zj - p).norm_sqr();
            }
            s.sqrt()
        }
    }
}

/// Coarse deterministic sample of the outer boundary of the set,
/// `per_member` points per 1-D piece (endpoints always included).
/// Used as the x ∈ E sample when profiling V(x − w).
pub fn surface_samples(set: &CompactSetDescriptor, per_member: usize) -> Vec<Point> {
    let m = per_member.max(2);
    let mut out = Vec::new();
    fn rec(set: &Set, m: usize, out: &mut Vec<Point>) {
        match set {
            Set::RealInterval { a, b } => {
                for j in 0..m {
                    let x = b + (a - b) * j as f64 / (m - 1) as f64;
                    out.push(vec![Complex64::new(x, 0.0)]);
                }
            }
            Set::Disc { center, radius } => {
                let c: Complex64 = (*center).into();
                for j in 0..m {
                    let t = 2.0 * PI * j as f64 / m as f64;
                    out.push(vec![c + radius * Complex64::new(t.cos(), t.sin())]);
                }
            }
            Set::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let c: Complex64 = (*center).into();
                for j in 0..m {
                    let t = theta_start + (theta_end - theta_start) * j as f64 / (m - 1) as f64;
                    out.push(vec![c + radius * Complex64::new(t.cos(), t.sin())]);
                }
            }
            Set::RealBox { lo, hi } => {
                let grids: Vec<Vec<Complex64>> = lo
                    .iter()
                    .zip(hi)
                    .map(|(&l, &h)| {
                        (0..m)
                            .map(|j| Complex64::new(h + (l - h) * j as f64 / (m - 1) as f64, 0.0))
                            .collect()
                    })
                    .collect();
                tensor(&grids, out);
            }
            Set::Polydisc { center, radius } => {
                let grids: Vec<Vec<Complex64>> = center
                    .iter()
                    .zip(radius)
                    .map(|(c, &r)| {
                        let c: Complex64 = (*c).into();
                        (0..m)
                            .map(|j| {
                                let t = 2.0 * PI * j as f64 / m as f64;
                                c + r * Complex64::new(t.cos(), t.sin())
                            })
                            .collect()
                    })
                    .collect();
                tensor(&grids, out);
            }
            Set::Union { members, .. } => {
                for mem in members {
                    rec(mem, m, out);
                }
            }
            Set::Product { factors } => {
                let mut grids = Vec::new();
                for f in factors {
                    let mut fs = Vec::new();
                    rec(f, m, &mut fs);
                    grids.push(fs.into_iter().map(|p| p[0]).collect::<Vec<_>>());
                }
                tensor(&grids, out);
            }
            Set::Point { location } => {
                out.push(location.iter().map(|&z| z.into()).collect());
            }
        }
    }
    rec(set, m, &mut out);
    out
}

/// Admissibility report of an onion construction: per-arc check of
/// |1 − e^{iφ_j}| ≤ a_{j+1}.
#[derive(Clone, Debug, Serialize)]
pub struct OnionReport {
    pub violations: Vec<OnionViolation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OnionViolation {
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Union of J arcs C_j = {a_j e^{it} : t ∈ [φ_j, 2π]} plus the origin.
/// Radii must be strictly decreasing from a₁ = 1; angle-condition
/// violations are flagged in the report, not silently accepted.
pub fn build_onion_set(
    radii: &[f64],
    angles: &[f64],
    truncation: usize,
) -> Result<(CompactSetDescriptor, OnionReport)> {
    if truncation < 1 {
        return Err(Error::invalid("build_onion_set: truncation must be >= 1"));
    }
    if radii.len() < truncation || angles.len() < truncation {
        return Err(Error::invalid(
            "build_onion_set: radii and angles must have at least `truncation` entries",
        ));
    }
    if (radii[0] - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("build_onion_set: first radius must be 1"));
    }
    for j in 1..truncation {
        if !(radii[j] > 0.0 && radii[j] < radii[j - 1]) {
            return Err(Error::invalid(
                "build_onion_set: radii must be strictly decreasing and positive",
            ));
        }
    }
    for &phi in &angles[..truncation] {
        if !(phi > 0.0 && phi < PI / 2.0) {
            return Err(Error::invalid("build_onion_set: angles must lie in (0, pi/2)"));
        }
    }
    let mut violations = Vec::new();
    for j in 0..truncation.saturating_sub(1) {
        let lhs = 2.0 * (angles[j] / 2.0).sin(); // |1 - e^{i phi}|
        let rhs = radii[j + 1];
        if lhs > rhs {
            violations.push(OnionViolation { j: j + 1, lhs, rhs });
        }
    }
    let mut members: Vec<CompactSetDescriptor> = (0..truncation)
        .map(|j| Set::Arc {
            center: Complex64::new(0.0, 0.0).into(),
            radius: radii[j],
            theta_start: angles[j],
            theta_end: 2.0 * PI,
        })
        .collect();
    members.push(Set::Point {
        location: vec![Complex64::new(0.0, 0.0).into()],
    });
    let mut params = BTreeMap::new();
    for j in 0..truncation {
        params.insert(format!("a{}", j + 1), radii[j]);
        params.insert(format!("phi{}", j + 1), angles[j]);
    }
    let set = Set::Union {
        members,
        meta: Some(SetMeta {
            family: Some("onion".into()),
            trunc: Some(truncation),
            params,
        }),
    };
    Ok((set, OnionReport { violations }))
}

/// Union of J polydiscs E_j centered at (a_j, 0, …, 0) with polyradius
/// (r_j, …, r_j), plus the origin, where r₁ = 1, a₁ = 2,
/// r_j = b·r_{j−1}^μ and a_j = r_j + r_j².
pub fn build_chain_set(
    mu: f64,
    b: f64,
    n_dim: usize,
    truncation: usize,
) -> Result<CompactSetDescriptor> {
    if !(mu >= 2.0) {
        return Err(Error::invalid("build_chain_set: mu must be >= 2"));
    }
    let b_max = 2.0f64.sqrt() - 1.0;
    if !(b > 0.0 && b < b_max) {
        return Err(Error::invalid(format!(
            "build_chain_set: b must lie in (0, sqrt(2)-1 = {b_max:.6})"
        )));
    }
    if n_dim < 1 {
        return Err(Error::invalid("build_chain_set: dimension must be >= 1"));
    }
    if truncation < 1 {
        return Err(Error::invalid("build_chain_set: truncation must be >= 1"));
    }
    let mut members = Vec::with_capacity(truncation + 1);
    let mut r = 1.0f64;
    let mut a = 2.0f64;
    for j in 0..truncation {
        if j > 0 {
            r = b * r.powf(mu);
            a = r + r * r;
            if r == 0.0 || r * r == 0.0 {
                return Err(Error::invalid(format!(
                    "build_chain_set: radius underflows at member {} (truncation too deep)",
                    j + 1
                )));
            }
        }
        let mut center = vec![ComplexJson { re: 0.0, im: 0.0 }; n_dim];
        center[0] = ComplexJson { re: a, im: 0.0 };
        members.push(Set::Polydisc {
            center,
            radius: vec![r; n_dim],
        });
    }
    members.push(Set::Point {
        location: vec![ComplexJson { re: 0.0, im: 0.0 }; n_dim],
    });
    let mut params = BTreeMap::new();
    params.insert("mu".into(), mu);
    params.insert("b".into(), b);
    Ok(Set::Union {
        members,
        meta: Some(SetMeta {
            family: Some("chain".into()),
            trunc: Some(truncation),
            params,
        }),
    })
}

/// Parse a set-description JSON document.
pub fn parse_set_json(text: &str) -> Result<CompactSetDescriptor> {
    let set: CompactSetDescriptor =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("set file: {e}")))?;
    set.validate()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn discretize_interval_counts() {
        let set = Set::interval(-1.0, 1.0);
        let d = discretize(&set, 4, 2, 16).unwrap();
        assert_eq!(d.constraint_nodes.len(), 10);
        // Chebyshev-distributed in [-1,1], endpoints included
        assert!(d.constraint_nodes.iter().all(|p| p[0].im == 0.0));
        assert_eq!(d.constraint_nodes[0][0].re, 1.0);
        assert_eq!(d.constraint_nodes[9][0].re, -1.0);
    }

    #[test]
    fn discretize_disc_equal_angles() {
        let set = Set::unit_disc();
        let d = discretize(&set, 3, 2, 16).unwrap();
        assert_eq!(d.constraint_nodes.len(), 8);
        for (j, p) in d.constraint_nodes.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / 8.0;
            assert!((p[0] - c(t.cos(), t.sin())).norm() < 1e-15);
        }
    }

    #[test]
    fn discretize_union_assembles_members() {
        let set = Set::Union {
            members: vec![Set::interval(-2.0, -1.0), Set::interval(1.0, 2.0)],
            meta: None,
        };
        let d = discretize(&set, 4, 2, 16).unwrap();
        assert_eq!(d.constraint_nodes.len(), 20);
        assert_eq!(d.segments, vec![(0, 10), (10, 20)]);
    }

    #[test]
    fn discretize_rejects_out_of_range() {
        let set = Set::interval(-1.0, 1.0);
        assert!(discretize(&set, 0, 2, 16).is_err());
        assert!(discretize(&set, 4, 1, 16).is_err());
        assert!(discretize(&set, 4, 2, 4).is_err());
    }

    #[test]
    fn discretize_is_deterministic() {
        let set = Set::Union {
            members: vec![Set::unit_disc(), Set::interval(2.0, 3.0)],
            meta: None,
        };
        let d1 = discretize(&set, 6, 3, 16).unwrap();
        let d2 = discretize(&set, 6, 3, 16).unwrap();
        assert_eq!(d1.constraint_nodes.len(), d2.constraint_nodes.len());
        for (a, b) in d1.constraint_nodes.iter().zip(&d2.constraint_nodes) {
            assert_eq!(a[0].re.to_bits(), b[0].re.to_bits());
            assert_eq!(a[0].im.to_bits(), b[0].im.to_bits());
        }
    }

    #[test]
    fn distance_examples() {
        let interval = Set::interval(-1.0, 1.0);
        assert_eq!(distance(&interval, &[c(2.0, 0.0)]).unwrap(), 1.0);
        assert_eq!(distance(&interval, &[c(0.0, 1.0)]).unwrap(), 1.0);
        let disc = Set::unit_disc();
        assert_eq!(distance(&disc, &[c(0.0, 0.0)]).unwrap(), 0.0);
        assert!(distance(&disc, &[c(0.0, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn constraint_nodes_lie_on_set() {
        let sets = vec![
            Set::interval(-1.0, 1.0),
            Set::unit_disc(),
            Set::Arc {
                center: c(0.0, 0.0).into(),
                radius: 0.5,
                theta_start: 0.3,
                theta_end: 2.0,
            },
            Set::RealBox {
                lo: vec![-1.0, 0.0],
                hi: vec![1.0, 2.0],
            },
            Set::Polydisc {
                center: vec![c(0.0, 0.0).into(), c(1.0, 0.0).into()],
                radius: vec![1.0, 0.5],
            },
            build_chain_set(2.0, 0.4, 1, 3).unwrap(),
        ];
        for set in sets {
            let d = discretize(&set, 3, 2, 16).unwrap();
            for p in &d.constraint_nodes {
                assert!(
                    distance(&set, p).unwrap() <= 1e-12,
                    "node {:?} off {}",
                    p,
                    set.set_id()
                );
            }
        }
    }

    #[test]
    fn union_distance_is_member_min() {
        let m1 = Set::interval(-2.0, -1.0);
        let m2 = Set::unit_disc();
        let union = Set::Union {
            members: vec![m1.clone(), m2.clone()],
            meta: None,
        };
        for z in [c(0.5, 0.5), c(-3.0, 1.0), c(-1.5, -0.2), c(2.0, 2.0)] {
            let d = distance(&union, &[z]).unwrap();
            let expect = distance(&m1, &[z]).unwrap().min(distance(&m2, &[z]).unwrap());
            assert!((d - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn arc_distance_cases() {
        // upper half unit circle
        let arc = Set::Arc {
            center: c(0.0, 0.0).into(),
            radius: 1.0,
            theta_start: 0.0,
            theta_end: PI,
        };
        // radially inside the swept sector
        assert!((distance(&arc, &[c(0.0, 0.5)]).unwrap() - 0.5).abs() < 1e-14);
        // below: nearest endpoint is (1,0) or (-1,0)
        let d = distance(&arc, &[c(0.0, -1.0)]).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn onion_admissible_example() {
        // a_j = 2^{1-j}, phi_j = 2^{-j-1}: 2 sin(phi_j/2) <= a_{j+1}
        let radii = [1.0, 0.5, 0.25];
        let angles = [0.25, 0.125, 0.0625];
        let (set, report) = build_onion_set(&radii, &angles, 3).unwrap();
        assert!(report.violations.is_empty());
        // numeric check of the condition per j
        for j in 0..2 {
            assert!(2.0 * (angles[j] / 2.0).sin() <= radii[j + 1]);
        }
        match &set {
            Set::Union { members, .. } => assert_eq!(members.len(), 4), // 3 arcs + origin
            _ => panic!("expected union"),
        }
    }

    #[test]
    fn onion_flags_violation() {
        // |1 - e^{i pi/3}| = 2 sin(pi/6) = 1 > 0.9
        let (_, report) = build_onion_set(&[1.0, 0.9], &[PI / 3.0, 0.1], 2).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!((report.violations[0].lhs - 1.0).abs() < 1e-12);
        assert_eq!(report.violations[0].rhs, 0.9);
    }

    #[test]
    fn onion_single_arc_vacuous() {
        let (set, report) = build_onion_set(&[1.0], &[0.3], 1).unwrap();
        assert!(report.violations.is_empty());
        match set {
            Set::Union { members, .. } => assert_eq!(members.len(), 2),
            _ => panic!(),
        }
    }

    #[test]
    fn onion_rejects_nondecreasing_radii() {
        assert!(build_onion_set(&[1.0, 1.0], &[0.3, 0.3], 2).is_err());
        assert!(build_onion_set(&[0.9, 0.5], &[0.3, 0.3], 2).is_err());
    }

    #[test]
    fn chain_recurrence_values() {
        let set = build_chain_set(2.0, 0.4, 1, 3).unwrap();
        let members = match &set {
            Set::Union { members, .. } => members,
            _ => panic!(),
        };
        let expect = [(2.0, 1.0), (0.56, 0.4), (0.068096, 0.064)];
        for (m, (a, r)) in members.iter().zip(expect) {
            match m {
                Set::Polydisc { center, radius } => {
                    assert!((center[0].re - a).abs() < 1e-15, "center {} vs {a}", center[0].re);
                    assert!((radius[0] - r).abs() < 1e-15);
                }
                _ => panic!("expected polydisc"),
            }
        }
    }

    #[test]
    fn chain_single_disc() {
        let set = build_chain_set(2.0, 0.4, 1, 1).unwrap();
        match &set {
            Set::Union { members, .. } => {
                assert_eq!(members.len(), 2);
                match &members[0] {
                    Set::Polydisc { center, radius } => {
                        assert_eq!(center[0].re, 2.0);
                        assert_eq!(radius[0], 1.0);
                    }
                    _ => panic!(),
                }
            }
            _ => panic!(),
        }
    }

    #[test]
    fn chain_rejects_bad_params() {
        assert!(build_chain_set(2.0, 0.45, 1, 3).is_err()); // 0.45 > sqrt(2)-1
        assert!(build_chain_set(1.5, 0.3, 1, 3).is_err());
    }

    #[test]
    fn chain_rejects_underflowing_truncation() {
        // mu = 3 cubes the radius each step; by J = 8 it leaves f64
        assert!(build_chain_set(3.0, 0.3, 1, 8).is_err());
    }

    #[test]
    fn chain_discs_disjoint_and_shrinking() {
        for (mu, b, j) in [(2.0, 0.4, 8), (2.0, 0.2, 8), (3.0, 0.3, 5), (2.5, 0.1, 6)] {
            let set = build_chain_set(mu, b, 1, j).unwrap();
            let members = match &set {
                Set::Union { members, .. } => members,
                _ => panic!(),
            };
            let discs: Vec<(f64, f64)> = members
                .iter()
                .filter_map(|m| match m {
                    Set::Polydisc { center, radius } => Some((center[0].re, radius[0])),
                    _ => None,
                })
                .collect();
            for w in discs.windows(2) {
                let (a1, r1) = w[0];
                let (a2, r2) = w[1];
                assert!(r2 < r1, "radii must shrink (mu={mu}, b={b})");
                // a_j − r_j = r_j² and a_{j+1} + r_{j+1} = 2r_{j+1} + r_{j+1}²;
                // compare through the radii to dodge f64 absorption of the
                // tiny r² term inside a_j at deep truncations
                assert!(
                    r1 * r1 > 2.0 * r2 + r2 * r2,
                    "discs must be disjoint (mu={mu}, b={b})"
                );
                assert!(a1 > a2, "centers must decrease (mu={mu}, b={b})");
            }
        }
    }

    #[test]
    fn json_roundtrip_and_schema() {
        let set = Set::Union {
            members: vec![
                Set::interval(-1.0, 1.0),
                Set::Disc {
                    center: c(0.5, -0.25).into(),
                    radius: 2.0,
                },
            ],
            meta: None,
        };
        let text = serde_json::to_string_pretty(&set).unwrap();
        assert!(text.contains("\"kind\": \"union\""));
        assert!(text.contains("\"kind\": \"real_interval\""));
        let back = parse_set_json(&text).unwrap();
        assert_eq!(set, back);
        assert!(parse_set_json("{\"kind\": \"real_interval\", \"a\": 2, \"b\": 1}").is_err());
        assert!(parse_set_json("not json").is_err());
    }

    #[test]
    fn surface_samples_on_set() {
        let sets = [Set::interval(-1.0, 1.0), Set::unit_disc()];
        for set in sets {
            for p in surface_samples(&set, 8) {
                assert!(distance(&set, &p).unwrap() <= 1e-12);
            }
        }
        // endpoints present for intervals
        let s = surface_samples(&Set::interval(-1.0, 1.0), 5);
        assert!(s.iter().any(|p| p[0].re == 1.0));
        assert!(s.iter().any(|p| p[0].re == -1.0));
    }
}
