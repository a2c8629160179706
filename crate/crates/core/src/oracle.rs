//! Network-free reference computations: closed-form and brute-force
//! projections, and numeric checks of the separation and product arguments
//! used for uniqueness of boundary solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{LayoutKind, SymmetricLayout};
use crate::error::{Error, Result};
use crate::field::MarginField;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Orthogonal projection of `x` onto the hyperplane `w . x + b = 0`.
pub fn halfspace_projection(w: &[f64], b: f64, x: &[f64]) -> Result<Vec<f64>> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: x.len(),
        });
    }
    let ww = dot(w, w);
    if ww == 0.0 {
        return Err(Error::ZeroNorm(0));
    }
    let t = (dot(w, x) + b) / ww;
    Ok(x.iter().zip(w).map(|(xi, wi)| xi - t * wi).collect())
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds2 {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds2 {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let ok = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) && x_min < x_max && y_min < y_max;
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "bad bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == 2 && (self.x_min..=self.x_max).contains(&p[0]) && (self.y_min..=self.y_max).contains(&p[1])
    }
}

/// Zero crossings of a 2D field located on a regular grid.
///
/// A coarse pass (cells `COARSE_FACTOR` fine steps wide) marks cells whose
/// corners change sign, together with their 8 neighbours. Only marked cells
/// are scanned at the fine step; every fine edge whose endpoints change sign
/// is bisected to full precision. Edges shared by two cells are reported twice.
#[derive(Debug, Clone)]
pub struct GridCrossings {
    pub points: Vec<[f64; 2]>,
    pub step: f64,
}

const COARSE_FACTOR: usize = 40;

impl GridCrossings {
    pub fn scan<F: MarginField + ?Sized>(field: &F, bounds: Bounds2, step: f64) -> Result<Self> {
        if field.input_dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: field.input_dim(),
            });
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!("grid step must be positive, got {step}")));
        }
        let nx = ((bounds.x_max - bounds.x_min) / step).ceil() as usize;
        let ny = ((bounds.y_max - bounds.y_min) / step).ceil() as usize;
        let cx = nx.div_ceil(COARSE_FACTOR);
        let cy = ny.div_ceil(COARSE_FACTOR);
        let fx = |i: usize| (bounds.x_min + i as f64 * step).min(bounds.x_max);
        let fy = |j: usize| (bounds.y_min + j as f64 * step).min(bounds.y_max);

        let coarse_side: Vec<bool> = (0..=cy)
            .into_par_iter()
            .flat_map_iter(|cj| {
                let y = fy((cj * COARSE_FACTOR).min(ny));
                (0..=cx).map(move |ci| field.margin_at(&[fx((ci * COARSE_FACTOR).min(nx)), y]) > 0.0)
            })
            .collect();
        let side = |ci: usize, cj: usize| coarse_side[cj * (cx + 1) + ci];
        let mut marked = vec![false; cx * cy];
        for cj in 0..cy {
            for ci in 0..cx {
                let s = side(ci, cj);
                if side(ci + 1, cj) != s || side(ci, cj + 1) != s || side(ci + 1, cj + 1) != s {
                    for dj in cj.saturating_sub(1)..=(cj + 1).min(cy - 1) {
                        for di in ci.saturating_sub(1)..=(ci + 1).min(cx - 1) {
                            marked[dj * cx + di] = true;
                        }
                    }
                }
            }
        }
        let cells: Vec<usize> = (0..cx * cy).filter(|&k| marked[k]).collect();

        let points: Vec<[f64; 2]> = cells
            .par_iter()
            .flat_map_iter(|&k| {
                let (ci, cj) = (k % cx, k / cx);
                let i0 = ci * COARSE_FACTOR;
                let j0 = cj * COARSE_FACTOR;
                let i1 = (i0 + COARSE_FACTOR).min(nx);
                let j1 = (j0 + COARSE_FACTOR).min(ny);
                let w = i1 - i0 + 1;
                let mut m = Vec::with_capacity(w * (j1 - j0 + 1));
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        m.push(field.margin_at(&[fx(i), fy(j)]));
                    }
                }
                let mut found = Vec::new();
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        let here = m[(j - j0) * w + (i - i0)];
                        if i < i1 {
                            let right = m[(j - j0) * w + (i + 1 - i0)];
                            if (here > 0.0) != (right > 0.0) {
                                found.push(bisect_edge(field, [fx(i), fy(j)], [fx(i + 1), fy(j)], here));
                            }
                        }
                        if j < j1 {
                            let up = m[(j + 1 - j0) * w + (i - i0)];
                            if (here > 0.0) != (up > 0.0) {
                                found.push(bisect_edge(field, [fx(i), fy(j)], [fx(i), fy(j + 1)], here));
                            }
                        }
                    }
                }
                found
            })
            .collect();
        Ok(Self { points, step })
    }

    /// Closest crossing to `x` and its distance.
    pub fn nearest(&self, x: &[f64]) -> Result<([f64; 2], f64)> {
        self.points
            .iter()
            .map(|p| (*p, dist(p, x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::NoCrossing)
    }
}

fn bisect_edge<F: MarginField + ?Sized>(field: &F, mut a: [f64; 2], mut b: [f64; 2], ma: f64) -> [f64; 2] {
    let sa = ma > 0.0;
    for _ in 0..60 {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if mid == a || mid == b {
            break;
        }
        if (field.margin_at(&mid) > 0.0) == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Brute-force nearest boundary point of a 2D field inside `bounds`.
pub fn grid_boundary_projection<F: MarginField + ?Sized>(
    field: &F,
    x: &[f64],
    bounds: Bounds2,
    step: f64,
) -> Result<(Vec<f64>, f64)> {
    if !bounds.contains(x) {
        return Err(Error::InvalidConfig(format!("point {x:?} lies outside the grid bounds")));
    }
    let (p, d) = GridCrossings::scan(field, bounds, step)?.nearest(x)?;
    Ok((p.to_vec(), d))
}

/// `a/b + b/a`, which is at least 2 with equality iff `a = b`.
pub fn ratio_bound(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidConfig(format!("ratio_bound needs positive inputs, got ({a}, {b})")));
    }
    Ok(a / b + b / a)
}

/// Points with two sets of projection vectors, one per classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorProjectionInstance {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub f_vectors: Vec<Vec<f64>>,
    pub g_vectors: Vec<Vec<f64>>,
}

impl VectorProjectionInstance {
    pub fn validate(&self) -> Result<()> {
        let s = self.points.len();
        if s == 0 {
            return Err(Error::EmptyDataset);
        }
        for (name, len) in [
            ("labels", self.labels.len()),
            ("f_vectors", self.f_vectors.len()),
            ("g_vectors", self.g_vectors.len()),
        ] {
            if len != s {
                return Err(Error::InvalidDataset(format!("{name} has {len} entries, expected {s}")));
            }
        }
        let n = self.points[0].len();
        let all = self.points.iter().chain(&self.f_vectors).chain(&self.g_vectors);
        for v in all {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("instance vector"));
            }
        }
        if self.labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidDataset("labels must be 0 or 1".into()));
        }
        Ok(())
    }

    fn opposite_pairs(&self) -> Vec<(usize, usize)> {
        let s = self.points.len();
        (0..s)
            .flat_map(|i| (i + 1..s).map(move |j| (i, j)))
            .filter(|&(i, j)| self.labels[i] != self.labels[j])
            .collect()
    }

    /// `f_i . g_i = 0` for every sample, relative to the vector norms.
    pub fn pointwise_orthogonal(&self, tol: f64) -> bool {
        self.f_vectors
            .iter()
            .zip(&self.g_vectors)
            .all(|(f, g)| dot(f, g).abs() <= tol * norm(f) * norm(g))
    }
}

/// One inequality family evaluated over an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub name: String,
    pub checked: usize,
    pub passed: bool,
    /// Smallest `rhs - lhs` seen; negative means violated.
    pub min_slack: Option<f64>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub indices: Vec<usize>,
    pub slack: f64,
}

impl StepReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            checked: 0,
            passed: true,
            min_slack: None,
            violations: Vec::new(),
        }
    }

    /// Records `lhs < rhs` (strict) or `lhs <= rhs`.
    fn record(&mut self, indices: Vec<usize>, lhs: f64, rhs: f64, strict: bool, tol: f64) {
        let slack = rhs - lhs;
        self.checked += 1;
        self.min_slack = Some(self.min_slack.map_or(slack, |m| m.min(slack)));
        let ok = if strict { slack > tol } else { slack >= -tol };
        if !ok {
            self.passed = false;
            self.violations.push(Violation { indices, slack });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStatus {
    Pass,
    Fail,
    /// The orthogonality premise does not hold; only the unconditional
    /// triangle step was evaluated.
    Vacuous,
    PreconditionViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim1Report {
    pub status: ChainStatus,
    pub orthogonal: bool,
    pub preconditions: StepReport,
    pub strictness: StepReport,
    pub averaged_chain: StepReport,
    pub triangle: StepReport,
    pub midpoint_separation: StepReport,
}

/// Relative tolerance used by the chain and product checks.
pub const CLAIM_TOL: f64 = 1e-12;

/// Walks the separation chain for every opposite-label pair.
///
/// Preconditions: `|f_i| + |f_j| <= |x_i - x_j|` and the same for `g`.
/// Steps: (i) under pointwise orthogonality at least one of the two is strict;
/// (ii) the averaged sum is strictly below `|x_i - x_j|`; (iii) the per-sample
/// triangle inequality for the midpoint vector. The midpoint separation
/// `|h_i| + |h_j| < |x_i - x_j|` is reported alongside.
pub fn check_claim1_chain(inst: &VectorProjectionInstance) -> Result<Claim1Report> {
    inst.validate()?;
    let orthogonal = inst.pointwise_orthogonal(1e-9);
    let nf: Vec<f64> = inst.f_vectors.iter().map(|v| norm(v)).collect();
    let ng: Vec<f64> = inst.g_vectors.iter().map(|v| norm(v)).collect();
    let h: Vec<Vec<f64>> = inst
        .f_vectors
        .iter()
        .zip(&inst.g_vectors)
        .map(|(f, g)| f.iter().zip(g).map(|(a, b)| 0.5 * (a + b)).collect())
        .collect();

    let mut pre = StepReport::new("preconditions");
    let mut strict = StepReport::new("strictness");
    let mut avg = StepReport::new("averaged_chain");
    let mut tri = StepReport::new("triangle");
    let mut mid = StepReport::new("midpoint_separation");

    for i in 0..inst.points.len() {
        let scale = nf[i].max(ng[i]).max(1.0);
        tri.record(vec![i], norm(&h[i]), 0.5 * (nf[i] + ng[i]), false, CLAIM_TOL * scale);
    }

    let pairs = inst.opposite_pairs();
    for &(i, j) in &pairs {
        let d = dist(&inst.points[i], &inst.points[j]);
        let tol = CLAIM_TOL * d.max(1.0);
        pre.record(vec![i, j], nf[i] + nf[j], d, false, tol);
        pre.record(vec![i, j], ng[i] + ng[j], d, false, tol);
    }

    if orthogonal && pre.passed {
        for &(i, j) in &pairs {
            let d = dist(&inst.points[i], &inst.points[j]);
            let tol = CLAIM_TOL * d.max(1.0);
            let best = (nf[i] + nf[j]).min(ng[i] + ng[j]);
            strict.record(vec![i, j], best, d, true, tol);
            avg.record(vec![i, j], 0.5 * (nf[i] + ng[i]) + 0.5 * (nf[j] + ng[j]), d, true, tol);
            mid.record(vec![i, j], norm(&h[i]) + norm(&h[j]), d, true, tol);
        }
    }

    let status = if !pre.passed {
        ChainStatus::PreconditionViolated
    } else if !tri.passed {
        ChainStatus::Fail
    } else if !orthogonal {
        ChainStatus::Vacuous
    } else if strict.passed && avg.passed && mid.passed {
        ChainStatus::Pass
    } else {
        ChainStatus::Fail
    };
    Ok(Claim1Report {
        status,
        orthogonal,
        preconditions: pre,
        strictness: strict,
        averaged_chain: avg,
        triangle: tri,
        midpoint_separation: mid,
    })
}

/// Largest subset size enumerated for the `a/b + b/a >= 2` sub-step.
pub const SUBSET_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim2Report {
    /// Natural logs of the three norm products.
    pub log_prod_f: f64,
    pub log_prod_g: f64,
    pub log_prod_h: f64,
    pub orthogonal: bool,
    /// `prod |f| = prod |g|` within relative 1e-9.
    pub equal_products: bool,
    /// `prod |h| > prod |f|` and `prod |h| > prod |g|`.
    pub strict_holds: bool,
    /// `prod |h| = prod |f|` within relative 1e-9.
    pub equality: bool,
    /// The premises (orthogonality, equal products) hold but the strict
    /// conclusion does not.
    pub counterexample: bool,
    pub ratio_substep: StepReport,
    pub subsets_checked: usize,
}

/// Evaluates the product inequality `prod |h_i| > prod |f_i| = prod |g_i|`
/// with `h_i = (f_i + g_i) / 2`, and the AM-GM sub-step over index subsets.
///
/// Subsets are drawn from the first [`SUBSET_CAP`] indices.
pub fn check_claim2_product(inst: &VectorProjectionInstance) -> Result<Claim2Report> {
    inst.validate()?;
    let nf: Vec<f64> = inst.f_vectors.iter().map(|v| norm(v)).collect();
    let ng: Vec<f64> = inst.g_vectors.iter().map(|v| norm(v)).collect();
    if let Some(i) = nf.iter().chain(&ng).position(|&n| n == 0.0) {
        return Err(Error::ZeroNorm(i % nf.len()));
    }
    let nh: Vec<f64> = inst
        .f_vectors
        .iter()
        .zip(&inst.g_vectors)
        .map(|(f, g)| f.iter().zip(g).map(|(a, b)| 0.5 * (a + b)).map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let lf: f64 = nf.iter().map(|n| n.ln()).sum();
    let lg: f64 = ng.iter().map(|n| n.ln()).sum();
    let lh: f64 = nh.iter().map(|n| if *n > 0.0 { n.ln() } else { f64::NEG_INFINITY }).sum();
    let rel = 1e-9;
    let close = |a: f64, b: f64| (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0);
    let orthogonal = inst.pointwise_orthogonal(1e-9);
    let equal_products = close(lf, lg);
    let equality = close(lh, lf);
    let strict_holds = !equality && lh > lf && lh > lg;

    let k = nf.len().min(SUBSET_CAP);
    let mut sub = StepReport::new("ratio_bound");
    for mask in 1u32..(1u32 << k) {
        let (mut la, mut lb) = (0.0, 0.0);
        for t in 0..k {
            if mask & (1 << t) != 0 {
                la += ng[t].ln();
                lb += nf[t].ln();
            }
        }
        let r = (la - lb).exp() + (lb - la).exp();
        let members: Vec<usize> = (0..k).filter(|t| mask & (1 << t) != 0).collect();
        sub.record(members, 2.0, r, false, CLAIM_TOL);
    }
    Ok(Claim2Report {
        log_prod_f: lf,
        log_prod_g: lg,
        log_prod_h: lh,
        orthogonal,
        equal_products,
        strict_holds,
        equality,
        counterexample: orthogonal && equal_products && !strict_holds,
        subsets_checked: sub.checked,
        ratio_substep: sub,
    })
}

/// A choice of boundary target for every layout point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionAssignment {
    pub targets: Vec<[f64; 2]>,
    /// +1 when every projection turns counter-clockwise about the origin,
    /// -1 when every one turns clockwise.
    pub orientation: i8,
}

/// Enumerates the projection sets of a four-point xor-style layout onto the
/// boundary `|x1| = |x2|` (both diagonals).
///
/// Each point may project to the nearest point of either diagonal when both
/// are equally close. An assignment is kept when all projections turn the
/// same way about the origin, which is what a single rotation-symmetric
/// boundary solution produces. The exact square admits two such sets (one
/// per rotation sense); moving one point breaks the tie and leaves one.
pub fn enumerate_square_xor_projections(layout: &SymmetricLayout) -> Result<Vec<ProjectionAssignment>> {
    match layout.kind {
        LayoutKind::SquareXor | LayoutKind::Custom => {}
        other => return Err(Error::UnsupportedLayout(format!("{other} has no xor projection enumeration"))),
    }
    let data = &layout.data;
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.dim(),
        });
    }
    let diagonals: [([f64; 2], f64); 2] = [([1.0, -1.0], 0.0), ([1.0, 1.0], 0.0)];
    let mut options: Vec<Vec<([f64; 2], i8)>> = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let p = data.sample(i);
        let cands: Vec<(Vec<f64>, f64)> = diagonals
            .iter()
            .map(|(w, b)| {
                let q = halfspace_projection(w, *b, p)?;
                let d = dist(&q, p);
                Ok((q, d))
            })
            .collect::<Result<_>>()?;
        let best = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let mut opts = Vec::new();
        for (q, d) in cands {
            if d <= best + 1e-9 {
                let v = [q[0] - p[0], q[1] - p[1]];
                let turn = p[0] * v[1] - p[1] * v[0];
                let sense = if turn > 1e-12 {
                    1
                } else if turn < -1e-12 {
                    -1
                } else {
                    0
                };
                opts.push(([q[0], q[1]], sense));
            }
        }
        options.push(opts);
    }
    let mut out = Vec::new();
    for orientation in [1i8, -1] {
        let mut targets = Vec::with_capacity(options.len());
        for opts in &options {
            match opts.iter().find(|(_, s)| *s == orientation || *s == 0) {
                Some((q, _)) => targets.push(*q),
                None => break,
            }
        }
        if targets.len() == options.len() {
            out.push(ProjectionAssignment { targets, orientation });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_symmetric_layout, perturbed_square_xor};
    use crate::field::{FnField, LinearField};
    use proptest::prelude::*;

    #[test]
    fn halfspace_examples() {
        let p = halfspace_projection(&[3.0, 4.0], 0.0, &[5.0, 0.0]).unwrap();
        assert!((p[0] - 3.2).abs() < 1e-12 && (p[1] + 2.4).abs() < 1e-12);
        let on = halfspace_projection(&[3.0, 4.0], 0.0, &[4.0, -3.0]).unwrap();
        assert_eq!(on, vec![4.0, -3.0]);
        assert!(halfspace_projection(&[0.0, 0.0], 1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn grid_on_linear_field() {
        let f = LinearField { w: vec![1.0, 0.0], b: 0.0 };
        let b = Bounds2::new(-1.0, 3.0, -1.0, 3.0).unwrap();
        let (_, d) = grid_boundary_projection(&f, &[2.0, 1.0], b, 1e-3).unwrap();
        assert!((d - 2.0).abs() < 1e-3);
    }

    #[test]
    fn grid_on_circle() {
        let f = FnField::new(
            2,
            |p: &[f64]| p[0] * p[0] + p[1] * p[1] - 1.0,
            |p: &[f64]| vec![2.0 * p[0], 2.0 * p[1]],
        );
        let b = Bounds2::new(-2.0, 4.0, -2.0, 2.0).unwrap();
        let (q, d) = grid_boundary_projection(&f, &[3.0, 0.0], b, 1e-3).unwrap();
        assert!((d - 2.0).abs() < 1e-3, "{q:?} {d}");
    }

    #[test]
    fn grid_without_crossing() {
        let f = LinearField { w: vec![0.0, 0.0], b: 1.0 };
        let b = Bounds2::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert!(matches!(
            grid_boundary_projection(&f, &[0.0, 0.0], b, 1e-2),
            Err(Error::NoCrossing)
        ));
    }

    #[test]
    fn grid_rejects_outside_point() {
        let f = LinearField { w: vec![1.0, 0.0], b: 0.0 };
        let b = Bounds2::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert!(grid_boundary_projection(&f, &[5.0, 0.0], b, 1e-2).is_err());
    }

    #[test]
    fn ratio_bound_examples() {
        assert_eq!(ratio_bound(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(ratio_bound(2.0, 1.0).unwrap(), 2.5);
        assert!((ratio_bound(3.0, 4.0).unwrap() - 25.0 / 12.0).abs() < 1e-15);
        assert!(ratio_bound(0.0, 1.0).is_err());
        assert!(ratio_bound(1.0, -2.0).is_err());
    }

    fn hand_instance() -> VectorProjectionInstance {
        VectorProjectionInstance {
            points: vec![vec![0.0, 0.0], vec![4.0, 0.0]],
            labels: vec![0, 1],
            f_vectors: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            g_vectors: vec![vec![0.0, 1.0], vec![0.0, -1.0]],
        }
    }

    #[test]
    fn claim1_hand_instance() {
        let r = check_claim1_chain(&hand_instance()).unwrap();
        assert_eq!(r.status, ChainStatus::Pass);
        assert!(r.orthogonal);
        // 1/2 (1 + 1) + 1/2 (1 + 1) = 2, slack 2 against |x_i - x_j| = 4.
        assert_eq!(r.averaged_chain.min_slack, Some(2.0));
    }

    #[test]
    fn claim1_identical_vectors_are_vacuous() {
        let mut inst = hand_instance();
        inst.g_vectors = inst.f_vectors.clone();
        let r = check_claim1_chain(&inst).unwrap();
        assert_eq!(r.status, ChainStatus::Vacuous);
        assert!(r.triangle.passed);
        assert_eq!(r.averaged_chain.checked, 0);
    }

    #[test]
    fn claim1_precondition_violation_reported() {
        let mut inst = hand_instance();
        inst.f_vectors = vec![vec![3.0, 0.0], vec![-3.0, 0.0]];
        let r = check_claim1_chain(&inst).unwrap();
        assert_eq!(r.status, ChainStatus::PreconditionViolated);
        assert_eq!(r.preconditions.violations[0].indices, vec![0, 1]);
    }

    #[test]
    fn claim2_collinear_is_equality() {
        let mut inst = hand_instance();
        inst.g_vectors = inst.f_vectors.clone();
        let r = check_claim2_product(&inst).unwrap();
        assert!(r.equality);
        assert!(!r.strict_holds);
        assert!(!r.counterexample);
        assert!(r.ratio_substep.passed);
    }

    #[test]
    fn claim2_orthogonal_equal_norm_is_counterexample() {
        let r = check_claim2_product(&hand_instance()).unwrap();
        // |h_i| = |f_i| / sqrt(2) for both samples.
        assert!((r.log_prod_h - (r.log_prod_f - 2f64.ln())).abs() < 1e-12);
        assert!(r.counterexample);
        assert!(!r.strict_holds);
    }

    #[test]
    fn claim2_zero_vector_rejected() {
        let mut inst = hand_instance();
        inst.g_vectors[1] = vec![0.0, 0.0];
        assert!(matches!(check_claim2_product(&inst), Err(Error::ZeroNorm(1))));
    }

    #[test]
    fn square_xor_has_two_projection_sets() {
        let l = gen_symmetric_layout(LayoutKind::SquareXor).unwrap();
        let sets = enumerate_square_xor_projections(&l).unwrap();
        assert_eq!(sets.len(), 2);
        assert_ne!(sets[0].targets, sets[1].targets);
    }

    #[test]
    fn perturbed_square_has_one_projection_set() {
        let l = perturbed_square_xor(0.1).unwrap();
        assert_eq!(enumerate_square_xor_projections(&l).unwrap().len(), 1);
    }

    #[test]
    fn mirrored_pairs_unsupported() {
        let l = gen_symmetric_layout(LayoutKind::MirroredPairs).unwrap();
        assert!(matches!(
            enumerate_square_xor_projections(&l),
            Err(Error::UnsupportedLayout(_))
        ));
    }

    proptest! {
        #[test]
        fn halfspace_on_plane_and_minimal(
            w in proptest::collection::vec(-3.0f64..3.0, 3),
            b in -2.0f64..2.0,
            x in proptest::collection::vec(-5.0f64..5.0, 3),
            probe in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            prop_assume!(norm(&w) > 0.1);
            let p = halfspace_projection(&w, b, &x).unwrap();
            prop_assert!((dot(&w, &p) + b).abs() < 1e-12 * (1.0 + norm(&w) * norm(&x)) * 10.0);
            // any other plane point is no closer
            let q = halfspace_projection(&w, b, &probe).unwrap();
            prop_assert!(dist(&q, &x) >= dist(&p, &x) - 1e-9);
        }

        #[test]
        fn grid_resolution_bound(
            w0 in -2.0f64..2.0, w1 in -2.0f64..2.0, b in -0.5f64..0.5,
            x0 in -0.9f64..0.9, x1 in -0.9f64..0.9,
        ) {
            prop_assume!(w0.abs() + w1.abs() > 0.2);
            let f = LinearField { w: vec![w0, w1], b };
            let bounds = Bounds2::new(-3.0, 3.0, -3.0, 3.0).unwrap();
            let exact = dist(&halfspace_projection(&[w0, w1], b, &[x0, x1]).unwrap(), &[x0, x1]);
            if let Ok((_, d)) = grid_boundary_projection(&f, &[x0, x1], bounds, 1e-2) {
                prop_assert!(d >= exact - 1e-2);
                prop_assert!(d <= exact + 1e-2);
            }
        }

        #[test]
        fn ratio_bound_at_least_two(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            prop_assert!(ratio_bound(a, b).unwrap() >= 2.0 - 1e-12);
        }

        #[test]
        fn triangle_step_always_holds(
            f in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 2..6),
            g in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 6),
        ) {
            let s = f.len();
            let inst = VectorProjectionInstance {
                points: (0..s).map(|i| vec![i as f64 * 10.0, 0.0]).collect(),
                labels: (0..s).map(|i| (i % 2) as u8).collect(),
                f_vectors: f,
                g_vectors: g.into_iter().take(s).collect(),
            };
            prop_assert!(check_claim1_chain(&inst).unwrap().triangle.passed);
        }
    }
}
