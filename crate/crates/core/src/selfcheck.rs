//! Numerical self-tests shipped with the binary: finite-difference gradient
//! checks, proximal-map optimality, NSD projection optimality and the
//! zero-model objective.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::PersonDescriptor;
use crate::metric::{
    l21_norm, loss_gradient, loss_l1, loss_l2, objective, similarity, LossKind, MetricBlock, MetricModel,
    TrainBatch, DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_LAMBDA,
};
use crate::solver::{max_eigenvalue, project_nsd, prox_l21};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn random_sym(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

fn random_model(rng: &mut ChaCha8Rng, dims: &[usize], scale: f64) -> MetricModel {
    MetricModel {
        blocks: dims
            .iter()
            .map(|&d| MetricBlock {
                w_m: random_sym(rng, d, scale),
                w_b: random_sym(rng, d, scale),
            })
            .collect(),
    }
}

fn dot(a: &MetricModel, b: &MetricModel) -> f64 {
    a.blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| x.w_m.dot(&y.w_m) + x.w_b.dot(&y.w_b))
        .sum()
}

/// Hinge brackets computed pair by pair from the similarity function.
fn brackets(model: &MetricModel, batch: &TrainBatch, kind: LossKind, alpha: f64) -> Vec<f64> {
    let n = batch.len();
    let g = |a: &PersonDescriptor, b: &PersonDescriptor| similarity(a, b, model).expect("shapes checked");
    let inter = {
        let s = &batch.gallery_subset;
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..s.len() {
            for k in j + 1..s.len() {
                sum += g(&batch.gallery[s[j]], &batch.gallery[s[k]]);
                count += 1;
            }
        }
        sum / count as f64
    };
    (0..n)
        .map(|i| {
            let pos = g(&batch.probes[i], &batch.gallery[i]);
            match kind {
                LossKind::L1 => {
                    let off: f64 = (0..n).filter(|&j| j != i).map(|j| g(&batch.probes[i], &batch.gallery[j])).sum();
                    alpha - pos + off / (n - 1) as f64
                }
                LossKind::L2 => alpha - pos + inter,
            }
        })
        .collect()
}

/// Central differences along random symmetric directions against the
/// analytic (sub)gradients of both losses.
pub fn check_gradients(seed: u64, directions: usize) -> CheckOutcome {
    let start = Instant::now();
    let (n, dims) = (6usize, [5usize, 5, 5]);
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let desc = |rng: &mut ChaCha8Rng| {
        PersonDescriptor::new(dims.iter().map(|&d| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect())
    };
    let probes = (0..n).map(|_| desc(&mut rng)).collect();
    let gallery = (0..n).map(|_| desc(&mut rng)).collect();
    let batch = TrainBatch::new(probes, gallery, (0..n).collect()).expect("valid batch");
    let model = random_model(&mut rng, &dims, 0.05);

    let mut worst: f64 = 0.0;
    let mut tested = 0;
    let mut skipped = 0;
    for (kind, alpha) in [(LossKind::L1, DEFAULT_ALPHA1), (LossKind::L2, DEFAULT_ALPHA2)] {
        let (_, grad) = loss_gradient(&model, &batch, kind, alpha).expect("gradient");
        let value = |m: &MetricModel| match kind {
            LossKind::L1 => loss_l1(m, &batch, alpha).expect("loss").value,
            LossKind::L2 => loss_l2(m, &batch, alpha).expect("loss").value,
        };
        for _ in 0..directions {
            let dir = random_model(&mut rng, &dims, 1.0);
            let plus = model.add(&dir.scale(h));
            let minus = model.sub(&dir.scale(h));
            let near_kink = [&model, &plus, &minus]
                .iter()
                .any(|m| brackets(m, &batch, kind, alpha).iter().any(|b| b.abs() < 1e-6));
            if near_kink {
                skipped += 1;
                continue;
            }
            let fd = (value(&plus) - value(&minus)) / (2.0 * h);
            let an = dot(&grad, &dir);
            let rel = (fd - an).abs() / an.abs().max(fd.abs()).max(1e-12);
            worst = worst.max(rel);
            tested += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    CheckOutcome {
        name: "gradient",
        passed: tested > 0 && worst < 1e-5 && elapsed < 10.0,
        detail: format!("{tested} directions, {skipped} near a kink, max relative error {worst:.2e}, {elapsed:.2}s"),
    }
}

/// Prox output against random perturbations and the row-shrinkage formula.
pub fn check_prox(seed: u64, pairs: usize, perturbations: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut formula_err: f64 = 0.0;
    for _ in 0..pairs {
        let (r, c) = (rng.random_range(1..7), rng.random_range(1..7));
        let w = DMatrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0));
        let tau = rng.random_range(0.0..3.0);
        let p = prox_l21(&w, tau).expect("non-negative tau");
        for i in 0..r {
            let norm = w.row(i).norm();
            let factor = if norm > tau { 1.0 - tau / norm } else { 0.0 };
            for j in 0..c {
                formula_err = formula_err.max((p[(i, j)] - factor * w[(i, j)]).abs());
            }
        }
        let obj = |x: &DMatrix<f64>| 0.5 * (x - &w).norm_squared() + tau * l21_norm(x);
        let best = obj(&p);
        for _ in 0..perturbations {
            let scale = 10f64.powf(rng.random_range(-4.0..0.5));
            let x = &p + DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale));
            if obj(&x) < best - 1e-12 {
                violations += 1;
            }
        }
    }
    CheckOutcome {
        name: "prox_l21",
        passed: violations == 0 && formula_err <= 1e-12,
        detail: format!("{pairs} instances, {violations} better perturbations, closed-form error {formula_err:.1e}"),
    }
}

/// Projection onto the NSD cone: eigenvalue bound, idempotence and
/// distance against random NSD matrices.
pub fn check_nsd(seed: u64, matrices: usize, samples: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max_eig, mut idem, mut closer): (f64, f64, usize) = (f64::NEG_INFINITY, 0.0, 0);
    for _ in 0..matrices {
        let w = random_sym(&mut rng, 5, 2.0);
        let p = project_nsd(&w).expect("square");
        max_eig = max_eig.max(max_eigenvalue(&p));
        idem = idem.max((project_nsd(&p).expect("square") - &p).amax());
        let dist = (&w - &p).norm();
        for _ in 0..samples {
            let a = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0)) * rng.random_range(0.01..2.0);
            let x = -(&a * a.transpose());
            if (&w - &x).norm() < dist - 1e-12 {
                closer += 1;
            }
        }
    }
    CheckOutcome {
        name: "project_nsd",
        passed: max_eig <= 1e-9 && idem <= 1e-10 && closer == 0,
        detail: format!(
            "{matrices} matrices, max eigenvalue {max_eig:.1e}, idempotence {idem:.1e}, {closer} closer samples"
        ),
    }
}

/// The zero model must score exactly the margins.
pub fn check_margin_defaults(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = [3usize, 2];
    let desc = |rng: &mut ChaCha8Rng| {
        PersonDescriptor::new(dims.iter().map(|&d| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect())
    };
    let n = 40;
    let probes = (0..n).map(|_| desc(&mut rng)).collect();
    let gallery = (0..n).map(|_| desc(&mut rng)).collect();
    let batch = TrainBatch::with_random_subset(probes, gallery, 50, seed).expect("valid batch");
    let obj = objective(&MetricModel::zeros(&dims), &batch, DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_LAMBDA)
        .expect("objective");
    CheckOutcome {
        name: "margin_defaults",
        passed: obj.total == 2.1 && obj.l1 == 1.0 && obj.l2 == 1.1 && obj.regularizer == 0.0,
        detail: format!("l1 {} l2 {} regularizer {} total {}", obj.l1, obj.l2, obj.regularizer, obj.total),
    }
}

pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_gradients(seed, 50),
        check_prox(seed, 100, 1000),
        check_nsd(seed, 100, 100),
        check_margin_defaults(seed),
    ]
}
