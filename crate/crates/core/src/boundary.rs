//! Projection of points onto a classifier's decision boundary.
//!
//! The nearest boundary point is found with two candidates:
//!
//! 1. root-seeking from `x` (steps `-m(z) g / |g|^2`, bisection once the sign
//!    flips), followed by tangent-plane refinement;
//! 2. the crossing on the segment from `x` to its nearest opposite-side sample,
//!    refined the same way.
//!
//! Rays cast in fixed directions then look for nearer boundary pieces within
//! the best distance so far; each hit is refined too. The smallest distance
//! wins, so the result never lies farther than the segment crossing, and
//! hence never farther than any opposite-side sample.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::field::MarginField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    /// Root-seeking from the sample, then tangent refinement.
    NewtonRefine,
    /// Raw crossing on the segment toward the nearest opposite-side sample.
    SegmentBisection,
    /// Segment crossing improved by tangent refinement.
    Combined,
}

impl ProjectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NewtonRefine => "newton_refine",
            Self::SegmentBisection => "segment_bisection",
            Self::Combined => "combined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// The projected sample.
    pub origin: Vec<f64>,
    /// Boundary point `b`.
    pub point: Vec<f64>,
    /// `b - x`.
    pub vector: Vec<f64>,
    pub distance: f64,
    /// `|margin(b)|`.
    pub residual: f64,
    pub converged: bool,
    pub solver_iterations: usize,
    pub method: ProjectionMethod,
}

impl ProjectionResult {
    fn new(
        origin: &[f64],
        point: Vec<f64>,
        residual: f64,
        tol: f64,
        iterations: usize,
        method: ProjectionMethod,
    ) -> Self {
        let vector: Vec<f64> = point.iter().zip(origin).map(|(b, x)| b - x).collect();
        let distance = norm(&vector);
        Self {
            origin: origin.to_vec(),
            point,
            vector,
            distance,
            residual,
            converged: residual <= tol,
            solver_iterations: iterations,
            method,
        }
    }

    fn unconverged(origin: &[f64], residual: f64, iterations: usize) -> Self {
        Self {
            origin: origin.to_vec(),
            point: origin.to_vec(),
            vector: vec![0.0; origin.len()],
            distance: 0.0,
            residual,
            converged: false,
            solver_iterations: iterations,
            method: ProjectionMethod::NewtonRefine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectorOptions {
    /// Accept a point once `|margin| <= boundary_tolerance` (raw margin units).
    pub boundary_tolerance: f64,
    pub max_newton_steps: usize,
    pub max_refine_steps: usize,
    /// Stop refining once a round improves the distance by less than this.
    pub refine_tolerance: f64,
    pub overshoot_kappa: f64,
    /// Longest single root-seeking step.
    pub max_step: f64,
    /// Extra rays cast from `x` (up to the best distance found so far) to
    /// catch nearer boundary pieces the two main candidates miss.
    pub ray_starts: usize,
}

impl Default for ProjectorOptions {
    fn default() -> Self {
        Self {
            boundary_tolerance: 1e-6,
            max_newton_steps: 200,
            max_refine_steps: 500,
            refine_tolerance: 1e-9,
            overshoot_kappa: 0.0,
            max_step: 1.0,
            ray_starts: 32,
        }
    }
}

impl ProjectorOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("boundary_tolerance", self.boundary_tolerance)?;
        positive("refine_tolerance", self.refine_tolerance)?;
        positive("max_step", self.max_step)?;
        if !(self.overshoot_kappa >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "overshoot_kappa must be >= 0, got {}",
                self.overshoot_kappa
            )));
        }
        if self.max_newton_steps == 0 {
            return Err(Error::InvalidConfig("max_newton_steps must be >= 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// A point located on the boundary by bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub point: Vec<f64>,
    pub residual: f64,
    pub evaluations: usize,
}

const BISECTION_LIMIT: usize = 200;

/// Bisects `[a, b]` (margins `ma`, `mb` of opposite sign) until
/// `|margin| <= tol`.
fn bisect<F: MarginField + ?Sized>(
    field: &F,
    a: &[f64],
    b: &[f64],
    mut ma: f64,
    tol: f64,
) -> Crossing {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (b.to_vec(), f64::INFINITY);
    for k in 1..=BISECTION_LIMIT {
        let mid = 0.5 * (lo + hi);
        let p = lerp(a, b, mid);
        let m = field.margin_at(&p);
        if m.abs() <= tol {
            return Crossing {
                point: p,
                residual: m.abs(),
                evaluations: k,
            };
        }
        if m.abs() < best.1 {
            best = (p, m.abs());
        }
        if (m > 0.0) == (ma > 0.0) {
            lo = mid;
            ma = m;
        } else {
            hi = mid;
        }
    }
    Crossing {
        point: best.0,
        residual: best.1,
        evaluations: BISECTION_LIMIT,
    }
}

const SEGMENT_SCAN: usize = 32;

/// Finds a boundary crossing on the segment `x -> y`.
///
/// The segment is first scanned in equal steps from `x`; the first bracket
/// with a sign change is bisected, so the crossing returned is the one
/// nearest `x` at the scan resolution.
pub fn bisect_along_segment<F: MarginField + ?Sized>(
    field: &F,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<Crossing> {
    let mx = field.margin_at(x);
    let my = field.margin_at(y);
    if mx == 0.0 {
        return Ok(Crossing {
            point: x.to_vec(),
            residual: 0.0,
            evaluations: 2,
        });
    }
    if mx * my >= 0.0 && my != 0.0 {
        return Err(Error::SameSign { a: mx, b: my });
    }
    let mut c = first_crossing(field, x, mx, y, Some(my), tol)
        .expect("the segment end has the opposite sign");
    c.evaluations += 1;
    Ok(c)
}

/// Scans `x -> y` in equal steps and bisects the first bracket whose sign
/// differs from `mx`. Unlike [`bisect_along_segment`] the far end may lie on
/// the same side as `x`.
fn first_crossing<F: MarginField + ?Sized>(
    field: &F,
    x: &[f64],
    mx: f64,
    y: &[f64],
    my: Option<f64>,
    tol: f64,
) -> Option<Crossing> {
    let mut prev = (x.to_vec(), mx);
    for k in 1..=SEGMENT_SCAN {
        let p = if k == SEGMENT_SCAN {
            y.to_vec()
        } else {
            lerp(x, y, k as f64 / SEGMENT_SCAN as f64)
        };
        let m = match my {
            Some(v) if k == SEGMENT_SCAN => v,
            _ => field.margin_at(&p),
        };
        if m.abs() <= tol {
            return Some(Crossing {
                point: p,
                residual: m.abs(),
                evaluations: k + 1,
            });
        }
        if (m > 0.0) != (mx > 0.0) {
            let mut c = bisect(field, &prev.0, &p, prev.1, tol);
            c.evaluations += k + 1;
            return Some(c);
        }
        prev = (p, m);
    }
    None
}

/// Unit directions for the ray candidates: evenly spaced angles in 2D,
/// a fixed pseudo-random set otherwise.
fn ray_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    if dim == 2 {
        return (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    let mut rng = crate::rng::rng_from_seed(RAY_SEED);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim)
                .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
                .collect();
            let n = norm(&v);
            if n > 0.0 {
                break v.into_iter().map(|c| c / n).collect();
            }
        })
        .collect()
}

const RAY_SEED: u64 = 0x5eed_0f_2a75;

/// Root-seeking from `x` toward the boundary.
///
/// Each step is `-m(z) g / |g|^2` with `g` the margin gradient, capped at
/// `opts.max_step`. When consecutive iterates straddle the boundary the
/// segment between them is bisected. A vanishing gradient away from the
/// boundary is reported as [`Error::Stall`].
pub fn hit_boundary<F: MarginField + ?Sized>(
    field: &F,
    x: &[f64],
    opts: &ProjectorOptions,
) -> Result<ProjectionResult> {
    let tol = opts.boundary_tolerance;
    let mut z = x.to_vec();
    let mut m = field.margin_at(&z);
    if m == 0.0 {
        return Ok(ProjectionResult::new(
            x,
            z,
            0.0,
            tol,
            0,
            ProjectionMethod::NewtonRefine,
        ));
    }
    let mut evals = 1;
    for _ in 0..opts.max_newton_steps {
        if m.abs() <= tol {
            return Ok(ProjectionResult::new(
                x,
                z,
                m.abs(),
                tol,
                evals,
                ProjectionMethod::NewtonRefine,
            ));
        }
        let (mz, g) = field.margin_grad_at(&z);
        evals += 1;
        let g2 = dot(&g, &g);
        if g2 == 0.0 || !g2.is_finite() {
            return Err(Error::Stall { margin: mz });
        }
        let mut scale = -mz / g2;
        let len = scale.abs() * g2.sqrt();
        if len > opts.max_step {
            scale *= opts.max_step / len;
        }
        let next: Vec<f64> = z.iter().zip(&g).map(|(a, gi)| a + scale * gi).collect();
        let m_next = field.margin_at(&next);
        evals += 1;
        if m_next != 0.0 && (m_next > 0.0) != (mz > 0.0) && m_next.abs() > tol {
            let c = bisect(field, &z, &next, mz, tol);
            return Ok(ProjectionResult::new(
                x,
                c.point,
                c.residual,
                tol,
                evals + c.evaluations,
                ProjectionMethod::NewtonRefine,
            ));
        }
        z = next;
        m = m_next;
    }
    let converged = m.abs() <= tol;
    if converged {
        Ok(ProjectionResult::new(
            x,
            z,
            m.abs(),
            tol,
            evals,
            ProjectionMethod::NewtonRefine,
        ))
    } else {
        Ok(ProjectionResult::unconverged(x, m.abs(), evals))
    }
}

/// Tangent-plane refinement of a boundary point `b` toward the nearest point
/// to `x`. Returns the refined point, its residual, the evaluation count and
/// the sequence of accepted distances (non-increasing).
pub fn refine<F: MarginField + ?Sized>(
    field: &F,
    x: &[f64],
    b: Vec<f64>,
    residual: f64,
    opts: &ProjectorOptions,
) -> (Vec<f64>, f64, usize, Vec<f64>) {
    let mut b = b;
    let mut res = residual;
    let mut d = dist(x, &b);
    let mut history = vec![d];
    let mut evals = 0;
    for _ in 0..opts.max_refine_steps {
        let (_, g) = field.margin_grad_at(&b);
        evals += 1;
        let gn = norm(&g);
        if gn == 0.0 || !gn.is_finite() {
            break;
        }
        let r: Vec<f64> = x.iter().zip(&b).map(|(a, c)| a - c).collect();
        let along = dot(&r, &g) / (gn * gn);
        let t: Vec<f64> = r.iter().zip(&g).map(|(ri, gi)| ri - along * gi).collect();
        if norm(&t) <= opts.refine_tolerance {
            break;
        }
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..8 {
            let cand: Vec<f64> = b.iter().zip(&t).map(|(bi, ti)| bi + scale * ti).collect();
            if let Ok(hit) = hit_boundary(field, &cand, opts) {
                evals += hit.solver_iterations;
                if hit.converged {
                    let nd = dist(x, &hit.point);
                    if nd < d {
                        accepted = Some((hit.point, hit.residual, nd));
                        break;
                    }
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((p, r, nd)) => {
                let gain = d - nd;
                b = p;
                res = r;
                d = nd;
                history.push(d);
                if gain < opts.refine_tolerance {
                    break;
                }
            }
            None => break,
        }
    }
    (b, res, evals, history)
}

/// Nearest boundary point to `x` for `field`, using `data` for the
/// segment candidate. Ties favour the root-seeking candidate.
pub fn project_to_boundary<F: MarginField + ?Sized>(
    field: &F,
    x: &[f64],
    data: &Dataset,
    opts: &ProjectorOptions,
) -> Result<ProjectionResult> {
    if data.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: x.len(),
        });
    }
    let signs: Vec<f64> = (0..data.len()).map(|j| field.margin_at(data.sample(j))).collect();
    Ok(project_with_signs(field, x, data, &signs, opts))
}

fn nearest_opposite(x: &[f64], mx: f64, data: &Dataset, margins: &[f64]) -> Option<usize> {
    (0..data.len())
        .filter(|&j| margins[j] != 0.0 && (margins[j] > 0.0) != (mx > 0.0))
        .map(|j| (j, dist(x, data.sample(j))))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| j)
}

fn project_with_signs<F: MarginField + ?Sized>(
    field: &F,
    x: &[f64],
    data: &Dataset,
    margins: &[f64],
    opts: &ProjectorOptions,
) -> ProjectionResult {
    let tol = opts.boundary_tolerance;
    let mx = field.margin_at(x);
    if mx == 0.0 {
        return ProjectionResult::new(x, x.to_vec(), 0.0, tol, 0, ProjectionMethod::NewtonRefine);
    }

    let mut total_evals = 0;
    let mut candidates: Vec<ProjectionResult> = Vec::with_capacity(2);

    if let Ok(hit) = hit_boundary(field, x, opts) {
        total_evals += hit.solver_iterations;
        if hit.converged {
            let (p, r, e, _) = refine(field, x, hit.point, hit.residual, opts);
            total_evals += e;
            candidates.push(ProjectionResult::new(x, p, r, tol, 0, ProjectionMethod::NewtonRefine));
        }
    }

    if let Some(j) = nearest_opposite(x, mx, data, margins) {
        if let Ok(c) = bisect_along_segment(field, x, data.sample(j), tol) {
            total_evals += c.evaluations;
            if c.residual <= tol {
                let raw = ProjectionResult::new(
                    x,
                    c.point.clone(),
                    c.residual,
                    tol,
                    0,
                    ProjectionMethod::SegmentBisection,
                );
                let (p, r, e, _) = refine(field, x, c.point, c.residual, opts);
                total_evals += e;
                let refined = ProjectionResult::new(x, p, r, tol, 0, ProjectionMethod::Combined);
                candidates.push(if refined.distance < raw.distance {
                    refined
                } else {
                    raw
                });
            }
        }
    }

    let radius = candidates
        .iter()
        .filter(|c| c.converged)
        .map(|c| c.distance)
        .fold(f64::INFINITY, f64::min);
    if radius.is_finite() && radius > 0.0 && opts.ray_starts > 0 {
        let mut radius = radius;
        for dir in ray_directions(x.len(), opts.ray_starts) {
            let end: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + radius * d).collect();
            let Some(c) = first_crossing(field, x, mx, &end, None, tol) else {
                continue;
            };
            total_evals += c.evaluations;
            if c.residual > tol {
                continue;
            }
            let (p, r, e, _) = refine(field, x, c.point, c.residual, opts);
            total_evals += e;
            let cand = ProjectionResult::new(x, p, r, tol, 0, ProjectionMethod::Combined);
            if cand.converged && cand.distance < radius {
                radius = cand.distance;
                candidates.push(cand);
            }
        }
    }

    let best = candidates
        .into_iter()
        .filter(|c| c.converged)
        .reduce(|a, b| if b.distance < a.distance { b } else { a });
    match best {
        Some(mut r) => {
            r.solver_iterations = total_evals;
            r
        }
        None => ProjectionResult::unconverged(x, mx.abs(), total_evals),
    }
}

/// `x + (1 + kappa) * vector`: the projection pushed past the boundary.
pub fn adversarial_overshoot(result: &ProjectionResult, kappa: f64) -> Vec<f64> {
    result
        .origin
        .iter()
        .zip(&result.vector)
        .map(|(x, v)| x + (1.0 + kappa) * v)
        .collect()
}

/// Projects every sample of `data` onto the boundary of `field`.
///
/// Samples on the wrong side are rejected. Samples whose projection does not
/// converge keep their original coordinates and are flagged in the returned
/// results. Work is spread over the rayon pool; output order matches input
/// order.
pub fn project_dataset<F: MarginField + ?Sized>(
    field: &F,
    data: &Dataset,
    opts: &ProjectorOptions,
) -> Result<(Dataset, Vec<ProjectionResult>)> {
    opts.validate()?;
    if field.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.input_dim(),
            got: data.dim(),
        });
    }
    let margins: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|j| field.margin_at(data.sample(j)))
        .collect();
    for (i, (&m, &l)) in margins.iter().zip(data.labels()).enumerate() {
        let wrong = (l == 1 && m < 0.0) || (l == 0 && m > 0.0);
        if wrong {
            return Err(Error::Misclassified { index: i });
        }
    }
    let results: Vec<ProjectionResult> = (0..data.len())
        .into_par_iter()
        .map(|i| project_with_signs(field, data.sample(i), data, &margins, opts))
        .collect();
    let mut features = Array2::zeros((data.len(), data.dim()));
    for (i, r) in results.iter().enumerate() {
        let src = if r.converged { &r.point } else { &r.origin };
        features
            .row_mut(i)
            .iter_mut()
            .zip(src)
            .for_each(|(dst, v)| *dst = *v);
    }
    Ok((data.with_features(features)?, results))
}

/// Projection dump: `index,label,converged,distance,residual,method`.
pub fn projections_csv(data: &Dataset, results: &[ProjectionResult]) -> String {
    let mut out = String::from("index,label,converged,distance,residual,method\n");
    for (i, r) in results.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{:?},{:?},{}\n",
            data.label(i),
            r.converged,
            r.distance,
            r.residual,
            r.method.as_str()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FnField, LinearField};
    use crate::nn::{DenseLayer, MlpNetwork};
    use ndarray::{array, Array1};

    fn linear_net(w: [f64; 2], b: f64) -> MlpNetwork {
        MlpNetwork::from_layers(vec![DenseLayer {
            weights: array![[0.0, 0.0], [w[0], w[1]]],
            biases: Array1::from(vec![0.0, b]),
        }])
        .unwrap()
    }

    #[test]
    fn hit_linear_boundary() {
        let net = linear_net([3.0, 4.0], 0.0);
        let r = hit_boundary(&net, &[5.0, 0.0], &ProjectorOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.residual <= 1e-6);
        assert!((r.distance - 3.0).abs() < 1e-4, "{}", r.distance);
    }

    #[test]
    fn hit_from_boundary_is_identity() {
        let net = linear_net([3.0, 4.0], 0.0);
        let r = hit_boundary(&net, &[4.0, -3.0], &ProjectorOptions::default()).unwrap();
        assert_eq!(r.point, vec![4.0, -3.0]);
        assert_eq!(r.distance, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn dead_gradient_stalls_and_falls_back() {
        // Flat (dead) region for x1 < 1, linear ramp beyond it.
        let field = FnField::new(
            2,
            |x: &[f64]| (x[0] - 1.0).max(0.0) - 0.5,
            |x: &[f64]| vec![if x[0] > 1.0 { 1.0 } else { 0.0 }, 0.0],
        );
        let x = [0.0, 0.0];
        let opts = ProjectorOptions::default();
        assert!(matches!(hit_boundary(&field, &x, &opts), Err(Error::Stall { .. })));
        let data = Dataset::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.0]], vec![0, 1], "d").unwrap();
        let r = project_to_boundary(&field, &x, &data, &opts).unwrap();
        assert!(r.converged);
        assert!((r.point[0] - 1.5).abs() < 1e-5);
        assert_ne!(r.method, ProjectionMethod::NewtonRefine);
    }

    #[test]
    fn segment_bisection_linear() {
        let field = LinearField { w: vec![1.0, 0.0], b: 0.0 };
        let c = bisect_along_segment(&field, &[-1.0, 0.0], &[3.0, 0.0], 1e-10).unwrap();
        assert!(c.point[0].abs() <= 1e-10);
        assert!(c.residual <= 1e-10);
        assert!(matches!(
            bisect_along_segment(&field, &[1.0, 0.0], &[3.0, 0.0], 1e-10),
            Err(Error::SameSign { .. })
        ));
    }

    #[test]
    fn segment_prefers_crossing_near_start() {
        // Three crossings along the segment: 0.5, 1.0 and 2.5.
        let field = FnField::new(
            1,
            |x: &[f64]| (x[0] - 0.5) * (x[0] - 1.0) * (x[0] - 2.5),
            |_: &[f64]| vec![0.0],
        );
        let c = bisect_along_segment(&field, &[0.0], &[3.0], 1e-10).unwrap();
        assert!((c.point[0] - 0.5).abs() < 1e-6, "{:?}", c.point);
    }

    #[test]
    fn linear_projection_is_analytic() {
        let net = linear_net([3.0, 4.0], 0.0);
        let data = Dataset::from_rows(&[vec![5.0, 0.0], vec![-5.0, 0.0]], vec![1, 0], "d").unwrap();
        let r = project_to_boundary(&net, &[5.0, 0.0], &data, &ProjectorOptions::default()).unwrap();
        assert!((r.point[0] - 3.2).abs() < 1e-3 && (r.point[1] + 2.4).abs() < 1e-3);
        assert!((r.distance - norm(&r.vector)).abs() < 1e-12);
    }

    #[test]
    fn circle_projection_refines() {
        let field = FnField::new(
            2,
            |x: &[f64]| x[0] * x[0] + x[1] * x[1] - 1.0,
            |x: &[f64]| vec![2.0 * x[0], 2.0 * x[1]],
        );
        let data = Dataset::from_rows(&[vec![0.0, 0.0], vec![3.0, 1.0]], vec![0, 1], "c").unwrap();
        let x = [3.0, 1.0];
        let r = project_to_boundary(&field, &x, &data, &ProjectorOptions::default()).unwrap();
        let truth = 10f64.sqrt() - 1.0;
        assert!((r.distance - truth).abs() < 1e-6, "{} vs {truth}", r.distance);
    }

    #[test]
    fn refinement_is_monotone() {
        let field = FnField::new(
            2,
            |x: &[f64]| x[1] - (x[0]).sin(),
            |x: &[f64]| vec![-(x[0]).cos(), 1.0],
        );
        let x = [0.3, 2.0];
        let start = vec![1.5, 1.5f64.sin()];
        let (_, _, _, hist) = refine(&field, &x, start, 0.0, &ProjectorOptions::default());
        assert!(hist.len() > 1);
        assert!(hist.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn overshoot_behaviour() {
        let net = linear_net([3.0, 4.0], -1.0);
        let data = Dataset::from_rows(
            &[vec![5.0, 0.0], vec![-5.0, 1.0], vec![2.0, 2.0], vec![-1.0, -3.0]],
            vec![1, 0, 1, 0],
            "d",
        )
        .unwrap();
        let opts = ProjectorOptions::default();
        for i in 0..data.len() {
            let r = project_to_boundary(&net, data.sample(i), &data, &opts).unwrap();
            let on = adversarial_overshoot(&r, 0.0);
            assert!(net.margin(&on).unwrap().abs() <= 1e-6);
            let adv = adversarial_overshoot(&r, 0.1);
            let before = net.margin(data.sample(i)).unwrap();
            let after = net.margin(&adv).unwrap();
            assert!(before * after < 0.0);
        }
    }

    #[test]
    fn dataset_projection_contracts() {
        let net = linear_net([1.0, 0.0], 0.0);
        let data = Dataset::from_rows(
            &[vec![-1.0, 0.0], vec![-2.0, 1.0], vec![1.0, 3.0], vec![0.5, -1.0]],
            vec![0, 0, 1, 1],
            "d",
        )
        .unwrap();
        let (proj, results) = project_dataset(&net, &data, &ProjectorOptions::default()).unwrap();
        assert!(results.iter().all(|r| r.converged));
        for i in 0..proj.len() {
            assert!(proj.sample(i)[0].abs() <= 1e-6);
            assert_eq!(proj.label(i), data.label(i));
        }
    }

    #[test]
    fn fixpoint_and_misclassified() {
        let net = linear_net([1.0, 0.0], 0.0);
        let on = Dataset::from_rows(&[vec![0.0, 1.0], vec![0.0, -2.0]], vec![0, 1], "on").unwrap();
        let (proj, _) = project_dataset(&net, &on, &ProjectorOptions::default()).unwrap();
        assert_eq!(proj, on);
        let bad = Dataset::from_rows(&[vec![1.0, 1.0], vec![2.0, -2.0]], vec![0, 1], "bad").unwrap();
        assert!(matches!(
            project_dataset(&net, &bad, &ProjectorOptions::default()),
            Err(Error::Misclassified { index: 0 })
        ));
    }

    #[test]
    fn csv_dump_header() {
        let net = linear_net([1.0, 0.0], 0.0);
        let d = Dataset::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]], vec![0, 1], "d").unwrap();
        let (_, res) = project_dataset(&net, &d, &ProjectorOptions::default()).unwrap();
        let csv = projections_csv(&d, &res);
        assert!(csv.starts_with("index,label,converged,distance,residual,method\n0,0,true,"));
        assert_eq!(csv.lines().count(), 3);
    }
}
