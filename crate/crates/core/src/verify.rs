//! Self-check suites: projection solver against the oracles, the
//! separation/product inequality checks, and backprop against finite
//! differences.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{project_to_boundary, ProjectorOptions};
use crate::data::{gen_gaussian_blobs, Dataset};
use crate::error::{Error, Result};
use crate::field::MarginField;
use crate::nn::{train, DenseLayer, MlpNetwork, TrainConfig};
use crate::oracle::{
    check_claim1_chain, check_claim2_product, halfspace_projection, ratio_bound, Bounds2, ChainStatus,
    GridCrossings, VectorProjectionInstance,
};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oracle,
    Claims,
    Gradients,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "claims" => Ok(Self::Claims),
            "gradients" => Ok(Self::Gradients),
            other => Err(Error::InvalidConfig(format!(
                "unknown suite '{other}' (expected oracle, claims or gradients)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::Claims => "claims",
            Self::Gradients => "gradients",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub cases: Vec<CaseResult>,
    /// Input that made a case fail, serialized for replay.
    pub failing_instance: Option<serde_json::Value>,
}

impl SuiteReport {
    fn new(suite: Suite, cases: Vec<CaseResult>, failing_instance: Option<serde_json::Value>) -> Self {
        Self {
            suite,
            passed: cases.iter().all(|c| c.passed),
            cases,
            failing_instance,
        }
    }

    /// Plain-text pass/fail table.
    pub fn table(&self) -> String {
        let width = self.cases.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!("suite {}\n", self.suite);
        for c in &self.cases {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("  {:<width$}  {mark}  {}\n", c.name, c.detail));
        }
        out.push_str(&format!("result: {}\n", if self.passed { "PASS" } else { "FAIL" }));
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Extra instance for the claims suite.
    pub claims_instance: Option<VectorProjectionInstance>,
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Oracle => oracle_suite(opts.seed),
        Suite::Claims => claims_suite(opts.seed, opts.claims_instance.as_ref()),
        Suite::Gradients => gradients_suite(opts.seed),
    }
}

// ---------------------------------------------------------------------------
// Projection oracle equivalence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub compared: usize,
    pub failures: usize,
    pub max_rel_error: f64,
    /// Points for which the grid found no crossing inside its bounds.
    pub skipped: usize,
}

pub const ORACLE_GRID_STEP: f64 = 1e-3;
pub const ORACLE_REL_TOL: f64 = 0.02;

/// Trains `networks` small 2D classifiers on gaussian blobs and compares the
/// solver distance with the grid oracle at `points` random locations each.
///
/// A comparison passes when the relative error is within 2% or the absolute
/// error is within one grid step (the oracle's own resolution).
pub fn compare_with_grid(seed: u64, networks: usize, points: usize) -> Result<OracleComparison> {
    let opts = ProjectorOptions::default();
    let bounds = Bounds2::new(-4.0, 8.0, -5.0, 5.0)?;
    let per_net: Vec<Result<(usize, usize, f64, usize)>> = (0..networks)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, k as u64);
            let data = gen_gaussian_blobs(30, [&[0.0, 0.0], &[4.0, 0.0]], 0.7, s)?;
            let mut net = MlpNetwork::new(&[2, 16, 16, 2], derive_seed(s, 1))?;
            let cfg = TrainConfig {
                learning_rate: 1e-2,
                batch_size: data.len(),
                max_epochs: 2000,
                seed: derive_seed(s, 2),
                ..TrainConfig::default()
            };
            train(&mut net, &data, &cfg)?;
            let grid = GridCrossings::scan(&net, bounds, ORACLE_GRID_STEP)?;
            let mut rng = rng_from_seed(derive_seed(s, 3));
            let (mut compared, mut failures, mut worst, mut skipped) = (0, 0, 0.0f64, 0);
            for _ in 0..points {
                let x = [rng.random_range(-1.5..5.5), rng.random_range(-2.5..2.5)];
                let Ok((_, reference)) = grid.nearest(&x) else {
                    skipped += 1;
                    continue;
                };
                let r = project_to_boundary(&net, &x, &data, &opts)?;
                if !r.converged {
                    failures += 1;
                    compared += 1;
                    continue;
                }
                let abs = (r.distance - reference).abs();
                let rel = if reference > 0.0 { abs / reference } else { abs };
                compared += 1;
                worst = worst.max(rel);
                if rel > ORACLE_REL_TOL && abs > ORACLE_GRID_STEP {
                    failures += 1;
                }
            }
            Ok((compared, failures, worst, skipped))
        })
        .collect();
    let mut out = OracleComparison {
        compared: 0,
        failures: 0,
        max_rel_error: 0.0,
        skipped: 0,
    };
    for r in per_net {
        let (c, f, w, s) = r?;
        out.compared += c;
        out.failures += f;
        out.max_rel_error = out.max_rel_error.max(w);
        out.skipped += s;
    }
    Ok(out)
}

/// Largest absolute gap between the solver and the analytic halfspace
/// projection on random single-layer (affine) networks.
pub fn compare_with_halfspace(seed: u64, networks: usize, points: usize) -> Result<f64> {
    let opts = ProjectorOptions::default();
    let mut worst = 0.0f64;
    for k in 0..networks {
        let mut rng = rng_from_seed(derive_seed(seed, k as u64));
        let w: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);
        if w.iter().map(|v| v * v).sum::<f64>() < 0.01 {
            continue;
        }
        let net = MlpNetwork::from_layers(vec![DenseLayer {
            weights: ndarray::array![[0.0, 0.0], [w[0], w[1]]],
            biases: ndarray::Array1::from(vec![0.0, b]),
        }])?;
        let anchors: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let labels: Vec<u8> = anchors
            .iter()
            .map(|a| u8::from(net.margin_at(a) > 0.0))
            .collect();
        let data = Dataset::from_rows(&anchors, labels, "anchors")?;
        for _ in 0..points {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let r = project_to_boundary(&net, &x, &data, &opts)?;
            let exact = halfspace_projection(&w, b, &x)?;
            let exact_d = exact.iter().zip(&x).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
            worst = worst.max((r.distance - exact_d).abs());
        }
    }
    Ok(worst)
}

fn oracle_suite(seed: u64) -> Result<SuiteReport> {
    let grid = compare_with_grid(seed, 10, 50)?;
    let linear = compare_with_halfspace(seed, 10, 50)?;
    let cases = vec![
        CaseResult {
            name: "grid_equivalence".into(),
            passed: grid.failures == 0 && grid.compared > 0,
            detail: format!(
                "{}/{} within 2% (max rel err {:.4}, {} skipped)",
                grid.compared - grid.failures,
                grid.compared,
                grid.max_rel_error,
                grid.skipped
            ),
        },
        CaseResult {
            name: "halfspace_equivalence".into(),
            passed: linear <= 1e-3,
            detail: format!("max abs err {linear:.3e}"),
        },
    ];
    Ok(SuiteReport::new(Suite::Oracle, cases, None))
}

// ---------------------------------------------------------------------------
// Separation and product checks

/// Random instance satisfying the separation preconditions strictly, with
/// pointwise-orthogonal `f` and `g` vectors.
pub fn random_orthogonal_instance(seed: u64) -> VectorProjectionInstance {
    let mut rng = rng_from_seed(seed);
    let s = rng.random_range(2..=8usize);
    let n = rng.random_range(2..=5usize);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut labels: Vec<u8> = (0..s).map(|i| (i % 2) as u8).collect();
    labels.rotate_left(rng.random_range(0..s));
    for _ in 0..s {
        points.push((0..n).map(|_| rng.random_range(-5.0..5.0)).collect());
    }
    let mut min_d = f64::INFINITY;
    for i in 0..s {
        for j in 0..s {
            if labels[i] != labels[j] {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                min_d = min_d.min(d);
            }
        }
    }
    let cap = 0.5 * min_d;
    let gauss = |rng: &mut crate::rng::LabRng| -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    };
    let unit = |v: Vec<f64>| {
        let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / l).collect::<Vec<f64>>()
    };
    let mut f_vectors = Vec::with_capacity(s);
    let mut g_vectors = Vec::with_capacity(s);
    for _ in 0..s {
        let f = unit(gauss(&mut rng));
        let mut g = gauss(&mut rng);
        let p: f64 = f.iter().zip(&g).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(&f).for_each(|(gi, fi)| *gi -= p * fi);
        let g = unit(g);
        let (a, b) = (cap * rng.random_range(0.05..0.999), cap * rng.random_range(0.05..0.999));
        f_vectors.push(f.into_iter().map(|x| a * x).collect());
        g_vectors.push(g.into_iter().map(|x| b * x).collect());
    }
    VectorProjectionInstance {
        points,
        labels,
        f_vectors,
        g_vectors,
    }
}

/// The orthogonal equal-norm instance on which the product conclusion fails.
pub fn orthogonal_counterexample() -> VectorProjectionInstance {
    VectorProjectionInstance {
        points: vec![vec![0.0, 0.0], vec![4.0, 0.0]],
        labels: vec![0, 1],
        f_vectors: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        g_vectors: vec![vec![0.0, 1.0], vec![0.0, -1.0]],
    }
}

/// Same points with `g = f`, so the midpoint vectors equal `f`.
pub fn collinear_instance() -> VectorProjectionInstance {
    let mut inst = orthogonal_counterexample();
    inst.g_vectors = inst.f_vectors.clone();
    inst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim1Sweep {
    pub instances: usize,
    pub triangle_pass: usize,
    pub averaging_pass: usize,
    pub first_failure: Option<VectorProjectionInstance>,
}

pub fn sweep_claim1(seed: u64, instances: usize) -> Result<Claim1Sweep> {
    let mut out = Claim1Sweep {
        instances,
        triangle_pass: 0,
        averaging_pass: 0,
        first_failure: None,
    };
    for k in 0..instances {
        let inst = random_orthogonal_instance(derive_seed(seed, k as u64));
        let r = check_claim1_chain(&inst)?;
        if r.triangle.passed {
            out.triangle_pass += 1;
        }
        if r.status == ChainStatus::Pass && r.averaged_chain.passed {
            out.averaging_pass += 1;
        }
        if r.status != ChainStatus::Pass && out.first_failure.is_none() {
            out.first_failure = Some(inst);
        }
    }
    Ok(out)
}

/// Smallest `a/b + b/a` over `pairs` log-uniform positive pairs.
pub fn sweep_ratio_bound(seed: u64, pairs: usize) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let mut min = f64::INFINITY;
    for _ in 0..pairs {
        let a = 10f64.powf(rng.random_range(-6.0..6.0));
        let b = 10f64.powf(rng.random_range(-6.0..6.0));
        min = min.min(ratio_bound(a, b)?);
    }
    Ok(min)
}

fn claims_suite(seed: u64, extra: Option<&VectorProjectionInstance>) -> Result<SuiteReport> {
    let mut cases = Vec::new();
    let mut failing = None;

    let sweep = sweep_claim1(seed, 1000)?;
    cases.push(CaseResult {
        name: "claim1_triangle".into(),
        passed: sweep.triangle_pass == sweep.instances,
        detail: format!("{}/{}", sweep.triangle_pass, sweep.instances),
    });
    cases.push(CaseResult {
        name: "claim1_averaging".into(),
        passed: sweep.averaging_pass == sweep.instances,
        detail: format!("{}/{}", sweep.averaging_pass, sweep.instances),
    });
    if let Some(inst) = &sweep.first_failure {
        failing = Some(serde_json::to_value(inst)?);
    }

    let min_ratio = sweep_ratio_bound(derive_seed(seed, 1 << 32), 100_000)?;
    cases.push(CaseResult {
        name: "ratio_bound".into(),
        passed: min_ratio >= 2.0 - 1e-12,
        detail: format!("min {min_ratio:.15} over 100000 pairs"),
    });

    let ce = check_claim2_product(&orthogonal_counterexample())?;
    cases.push(CaseResult {
        name: "claim2_counterexample_flagged".into(),
        passed: ce.counterexample,
        detail: format!("log prod h - log prod f = {:.6}", ce.log_prod_h - ce.log_prod_f),
    });
    let eq = check_claim2_product(&collinear_instance())?;
    cases.push(CaseResult {
        name: "claim2_collinear_equality".into(),
        passed: eq.equality && !eq.counterexample && eq.ratio_substep.passed,
        detail: format!("equality {} counterexample {}", eq.equality, eq.counterexample),
    });

    if let Some(inst) = extra {
        let c1 = check_claim1_chain(inst)?;
        let c2 = check_claim2_product(inst)?;
        let ok = matches!(c1.status, ChainStatus::Pass | ChainStatus::Vacuous)
            && !c2.counterexample
            && c2.ratio_substep.passed;
        cases.push(CaseResult {
            name: "instance".into(),
            passed: ok,
            detail: format!(
                "claim1 {:?}, claim2 strict {} counterexample {}",
                c1.status, c2.strict_holds, c2.counterexample
            ),
        });
        if !ok {
            failing = Some(serde_json::json!({
                "instance": inst,
                "claim1": c1,
                "claim2": c2,
            }));
        }
    }
    Ok(SuiteReport::new(Suite::Claims, cases, failing))
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checks

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
pub const KINK_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub checked: usize,
    pub passed: usize,
    /// Draws rejected for sitting near a rectifier kink.
    pub excluded: usize,
    pub max_rel_error: f64,
}

/// Random network with random (non-zero) biases.
pub fn random_network(seed: u64) -> Result<MlpNetwork> {
    let mut rng = rng_from_seed(seed);
    let input = rng.random_range(2..=8usize);
    let hidden = rng.random_range(1..=3usize);
    let mut dims = vec![input];
    for _ in 0..hidden {
        dims.push(rng.random_range(4..=16usize));
    }
    dims.push(2);
    let mut net = MlpNetwork::new(&dims, derive_seed(seed, 1))?;
    let bias = Normal::new(0.0, 0.1).expect("valid normal");
    for layer in net.layers_mut() {
        layer.biases.mapv_inplace(|_| bias.sample(&mut rng));
    }
    Ok(net)
}

fn near_kink(net: &MlpNetwork, x: &[f64]) -> Result<bool> {
    if net.kink_distance(x)? < KINK_EXCLUSION {
        return Ok(true);
    }
    // A kink inside the difference stencil also spoils the comparison.
    let base = net.activation_pattern(x)?;
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        for s in [-FD_STEP, FD_STEP] {
            probe[k] = x[k] + s;
            if net.activation_pattern(&probe)? != base {
                return Ok(true);
            }
        }
        probe[k] = x[k];
    }
    Ok(false)
}

/// Compares backprop input gradients with central differences on `pairs`
/// random (network, input) pairs.
pub fn check_gradients(seed: u64, pairs: usize) -> Result<GradientCheck> {
    let mut out = GradientCheck {
        checked: 0,
        passed: 0,
        excluded: 0,
        max_rel_error: 0.0,
    };
    for k in 0..pairs {
        let s = derive_seed(seed, k as u64);
        let net = random_network(s)?;
        let mut rng = rng_from_seed(derive_seed(s, 2));
        let x = loop {
            let x: Vec<f64> = (0..net.input_dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            if near_kink(&net, &x)? {
                out.excluded += 1;
            } else {
                break x;
            }
        };
        let analytic = net.grad_input(&x)?;
        let mut worst = 0.0f64;
        let mut probe = x.clone();
        for (i, a) in analytic.iter().enumerate() {
            probe[i] = x[i] + FD_STEP;
            let up = net.margin(&probe)?;
            probe[i] = x[i] - FD_STEP;
            let down = net.margin(&probe)?;
            probe[i] = x[i];
            let numeric = (up - down) / (2.0 * FD_STEP);
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((a - numeric).abs() / denom);
        }
        out.checked += 1;
        out.max_rel_error = out.max_rel_error.max(worst);
        if worst < FD_REL_TOL {
            out.passed += 1;
        }
    }
    Ok(out)
}

fn gradients_suite(seed: u64) -> Result<SuiteReport> {
    let g = check_gradients(seed, 100)?;
    let cases = vec![CaseResult {
        name: "finite_differences".into(),
        passed: g.passed == g.checked,
        detail: format!(
            "{}/{} (max rel err {:.2e}, {} kink draws excluded)",
            g.passed, g.checked, g.max_rel_error, g.excluded
        ),
    }];
    Ok(SuiteReport::new(Suite::Gradients, cases, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("oracle".parse::<Suite>().unwrap(), Suite::Oracle);
        assert_eq!(Suite::Gradients.to_string(), "gradients");
        assert!(matches!("nope".parse::<Suite>(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn random_instances_meet_preconditions() {
        for k in 0..50 {
            let inst = random_orthogonal_instance(k);
            let r = check_claim1_chain(&inst).unwrap();
            assert!(r.preconditions.passed, "instance {k}");
            assert!(r.orthogonal);
        }
    }

    #[test]
    fn gradient_suite_passes() {
        let r = run_suite(Suite::Gradients, &VerifyOptions::default()).unwrap();
        assert!(r.passed, "{}", r.table());
    }

    #[test]
    fn claims_suite_passes_without_instance() {
        let r = run_suite(Suite::Claims, &VerifyOptions::default()).unwrap();
        assert!(r.passed, "{}", r.table());
        assert!(r.failing_instance.is_none());
    }

    #[test]
    fn claims_suite_fails_on_counterexample_instance() {
        let opts = VerifyOptions {
            seed: 0,
            claims_instance: Some(orthogonal_counterexample()),
        };
        let r = run_suite(Suite::Claims, &opts).unwrap();
        assert!(!r.passed);
        assert!(r.failing_instance.is_some());
    }

    #[test]
    fn halfspace_comparison_is_tight() {
        assert!(compare_with_halfspace(3, 3, 10).unwrap() <= 1e-3);
    }
}
