//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Every expected value is recomputed here from scratch
//! rather than through the library's own helpers.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reid_mstc::cli::{decode_model, encode_model, load_model, save_model, RunConfig};
use reid_mstc::dataset::{generate_synthetic, load_manifest, make_splits, Manifest};
use reid_mstc::eval::{average_trials, compute_cmc, CmcCurve};
use reid_mstc::features::{PcaModel, PcaModels, PersonDescriptor, RawRegionDescriptor, RegionKind, WindowParams};
use reid_mstc::metric::{
    loss_gradients, objective, similarity, MetricBlock, MetricModel, TrainBatch,
};
use reid_mstc::pipeline::{
    extract_raw_features, fit_pca_clamped, run_trial, test_sets, LayoutConfig, TrainedModel, TrialOutcome,
};
use reid_mstc::solver::{project_nsd, prox_l21, train, SolverConfig};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

// ---------------------------------------------------------------- oracles

fn g(a: &PersonDescriptor, b: &PersonDescriptor, m: &MetricModel) -> f64 {
    let mut s = 0.0;
    for (t, blk) in m.blocks.iter().enumerate() {
        let (x, y) = (&a.parts[t], &b.parts[t]);
        for p in 0..x.len() {
            for q in 0..x.len() {
                s += (x[p] - y[p]) * blk.w_m[(p, q)] * (x[q] - y[q]);
                s += x[p] * blk.w_b[(p, q)] * y[q] + y[p] * blk.w_b[(p, q)] * x[q];
            }
        }
    }
    s
}

fn brackets_l1(m: &MetricModel, b: &TrainBatch, alpha: f64) -> Vec<f64> {
    let n = b.len();
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| g(&b.probes[i], &b.gallery[j], m)).sum();
            alpha - g(&b.probes[i], &b.gallery[i], m) + off / (n - 1) as f64
        })
        .collect()
}

fn brackets_l2(m: &MetricModel, b: &TrainBatch, alpha: f64) -> Vec<f64> {
    let s = &b.gallery_subset;
    let (mut sum, mut cnt) = (0.0, 0.0);
    for j in 0..s.len() {
        for k in j + 1..s.len() {
            sum += g(&b.gallery[s[j]], &b.gallery[s[k]], m);
            cnt += 1.0;
        }
    }
    (0..b.len())
        .map(|i| alpha - g(&b.probes[i], &b.gallery[i], m) + sum / cnt)
        .collect()
}

fn hinge_mean(br: &[f64]) -> f64 {
    br.iter().map(|v| v.max(0.0)).sum::<f64>() / br.len() as f64
}

fn sym(rng: &mut ChaCha8Rng, d: usize, s: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-s..s));
    (&a + a.transpose()) * 0.5
}

fn rand_model(rng: &mut ChaCha8Rng, dims: &[usize], s: f64) -> MetricModel {
    MetricModel {
        blocks: dims
            .iter()
            .map(|&d| MetricBlock {
                w_m: sym(rng, d, s),
                w_b: sym(rng, d, s),
            })
            .collect(),
    }
}

fn rand_desc(rng: &mut ChaCha8Rng, dims: &[usize]) -> PersonDescriptor {
    PersonDescriptor::new(dims.iter().map(|&d| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect())
}

fn inner(a: &MetricModel, b: &MetricModel) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.blocks.iter().zip(&b.blocks) {
        for (p, q) in x.w_m.iter().zip(y.w_m.iter()) {
            s += p * q;
        }
        for (p, q) in x.w_b.iter().zip(y.w_b.iter()) {
            s += p * q;
        }
    }
    s
}

fn l21(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt())
        .sum()
}

fn eigen_max(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().max()
}

/// 1-based rank of the first same-identity gallery entry; ties count
/// against the probe only for lower gallery indices.
fn oracle_rank(scores: &[f64], gallery_ids: &[u32], id: u32) -> usize {
    let m = gallery_ids.iter().position(|&x| x == id).expect("match present");
    1 + (0..scores.len())
        .filter(|&j| scores[j] > scores[m] || (scores[j] == scores[m] && j < m))
        .count()
}

fn concat(d: &PersonDescriptor) -> Vec<f64> {
    d.parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn rank1_of(ranks: &[usize]) -> f64 {
    ranks.iter().filter(|&&r| r == 1).count() as f64 / ranks.len() as f64
}

// ---------------------------------------------------------------- criteria

const SYNTH_SEED: u64 = 7;
const SYNTH_PCA: [usize; 3] = [20, 20, 20];

fn c1_gradients() -> Outcome {
    let start = Instant::now();
    let (n, dims, h) = (6usize, [5usize, 5, 5], 1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    let probes = (0..n).map(|_| rand_desc(&mut rng, &dims)).collect();
    let gallery = (0..n).map(|_| rand_desc(&mut rng, &dims)).collect();
    let batch = TrainBatch::new(probes, gallery, (0..n).collect()).map_err(|e| e.to_string())?;
    let model = rand_model(&mut rng, &dims, 0.05);
    let (a1, a2) = (1.0, 1.1);
    let grads = loss_gradients(&model, &batch, a1, a2).map_err(|e| e.to_string())?;
    let (mut worst, mut used, mut skipped) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let dir = rand_model(&mut rng, &dims, 1.0);
        let plus = model.add(&dir.scale(h));
        let minus = model.sub(&dir.scale(h));
        let kink = [&model, &plus, &minus].iter().any(|m| {
            brackets_l1(m, &batch, a1)
                .iter()
                .chain(&brackets_l2(m, &batch, a2))
                .any(|b| b.abs() < 1e-6)
        });
        if kink {
            skipped += 1;
            continue;
        }
        for (grad, f) in [
            (&grads.l1, &(|m: &MetricModel| hinge_mean(&brackets_l1(m, &batch, a1))) as &dyn Fn(&MetricModel) -> f64),
            (&grads.l2, &|m: &MetricModel| hinge_mean(&brackets_l2(m, &batch, a2))),
        ] {
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let an = inner(grad, &dir);
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-12));
        }
        used += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(used >= 40, "only {used} directions away from kinks");
    ensure!(worst < 1e-5, "max relative error {worst:.3e}");
    ensure!(secs < 10.0, "took {secs:.1}s");
    Ok(format!("{used} directions ({skipped} near a kink), max rel. error {worst:.2e}, {secs:.2}s"))
}

fn c2_prox() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut formula: f64 = 0.0;
    for _ in 0..100 {
        let (r, c) = (rng.random_range(1..8), rng.random_range(1..8));
        let w = DMatrix::from_fn(r, c, |_, _| rng.random_range(-3.0..3.0));
        let tau = rng.random_range(0.0..4.0);
        let p = prox_l21(&w, tau).map_err(|e| e.to_string())?;
        for i in 0..r {
            let norm = (0..c).map(|j| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt();
            let k = if norm <= tau { 0.0 } else { (norm - tau) / norm };
            for j in 0..c {
                formula = formula.max((p[(i, j)] - k * w[(i, j)]).abs());
            }
        }
        let obj = |x: &DMatrix<f64>| 0.5 * (x - &w).norm_squared() + tau * l21(x);
        let best = obj(&p);
        for _ in 0..1000 {
            let s = 10f64.powf(rng.random_range(-5.0..0.5));
            let x = &p + DMatrix::from_fn(r, c, |_, _| rng.random_range(-s..s));
            ensure!(best <= obj(&x) + 1e-12, "perturbation beats prox: {} < {}", obj(&x), best);
        }
    }
    ensure!(formula <= 1e-12, "closed-form deviation {formula:.2e}");
    Ok(format!("100 instances x 1000 perturbations, closed-form deviation {formula:.1e}"))
}

fn c3_nsd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let (mut lmax, mut idem) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..100 {
        let w = sym(&mut rng, 5, 2.0);
        let p = project_nsd(&w).map_err(|e| e.to_string())?;
        lmax = lmax.max(eigen_max(&p));
        idem = idem.max((project_nsd(&p).map_err(|e| e.to_string())? - &p).amax());
        let dist = (&w - &p).norm();
        for _ in 0..100 {
            let a = DMatrix::from_fn(5, rng.random_range(1..6), |_, _| rng.random_range(-1.5..1.5));
            let x = -(&a * a.transpose());
            ensure!(dist <= (&w - &x).norm() + 1e-12, "an NSD sample is closer than the projection");
        }
    }
    ensure!(lmax <= 1e-9, "max eigenvalue {lmax:.2e}");
    ensure!(idem <= 1e-10, "idempotence error {idem:.2e}");
    Ok(format!("100 matrices x 100 samples, max eigenvalue {lmax:.1e}, idempotence {idem:.1e}"))
}

struct Synth {
    _dir: tempfile::TempDir,
    manifest: Manifest,
    raw: Vec<Vec<RawRegionDescriptor>>,
}

fn synth(n_ids: u32) -> Result<Synth, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_synthetic(n_ids, 2, SYNTH_SEED, dir.path()).map_err(|e| e.to_string())?;
    let manifest = load_manifest(&dir.path().join("manifest.json")).map_err(|e| e.to_string())?.manifest;
    let raw = extract_raw_features(&manifest, &WindowParams::default()).map_err(|e| e.to_string())?;
    Ok(Synth { _dir: dir, manifest, raw })
}

fn c4_admm() -> Outcome {
    let start = Instant::now();
    let s = synth(40)?;
    let pca = fit_pca_clamped(&s.raw, SYNTH_PCA).map_err(|e| e.to_string())?;
    let project = |i: usize| reid_mstc::features::project_regions(&s.raw[i], &pca).map_err(|e| e.to_string());
    let (mut probes, mut gallery) = (Vec::new(), Vec::new());
    for id in s.manifest.paired_identities() {
        let (p, q) = s.manifest.view_pair(id).ok_or("unpaired identity")?;
        probes.push(project(p)?);
        gallery.push(project(q)?);
    }
    ensure!(probes.len() == 40, "{} pairs", probes.len());
    let cfg = SolverConfig { seed: SYNTH_SEED, ..Default::default() };
    let batch = TrainBatch::with_random_subset(probes, gallery, cfg.subset_size, cfg.seed).map_err(|e| e.to_string())?;
    let zero = MetricModel::zeros(&batch.dims());
    let oracle_initial = hinge_mean(&brackets_l1(&zero, &batch, 1.0)) + hinge_mean(&brackets_l2(&zero, &batch, 1.1));
    let out = train(&batch, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let initial = out.trace[0].objective;
    let last = out.trace.last().unwrap();
    let min = out.trace.iter().map(|e| e.objective).fold(f64::INFINITY, f64::min);
    ensure!(initial == 2.1, "initial objective {initial:?}");
    // naive summation in the oracle rounds; the library value must be exact
    ensure!((oracle_initial - 2.1).abs() <= 1e-12, "oracle zero-model objective {oracle_initial:?}");
    ensure!(last.iteration <= 300, "{} iterations", last.iteration);
    ensure!(last.objective <= 0.2 * initial, "final objective {}", last.objective);
    ensure!(
        last.primal_residual < 1e-2 && last.dual_residual < 1e-2,
        "residuals {:.2e} / {:.2e}",
        last.primal_residual,
        last.dual_residual
    );
    ensure!(last.objective <= min * 1.05, "late blow-up: min {min}, final {}", last.objective);
    for (t, b) in out.model.blocks.iter().enumerate() {
        ensure!(eigen_max(&b.w_m) <= 1e-9, "block {t} not NSD");
    }
    ensure!(secs < 120.0, "took {secs:.1}s");
    Ok(format!(
        "objective 2.1 -> {:.4} in {} iterations, residuals {:.1e}/{:.1e}, {secs:.1}s",
        last.objective, last.iteration, last.primal_residual, last.dual_residual
    ))
}

/// Trials of the 60-identity run, shared by criteria 5 and 6.
fn sixty_id_trials() -> Result<(Synth, Vec<TrialOutcome>, f64), String> {
    let start = Instant::now();
    let s = synth(60)?;
    let cfg = SolverConfig { seed: SYNTH_SEED, ..Default::default() };
    let splits = make_splits(&s.manifest, 0.5, 10, SYNTH_SEED).map_err(|e| e.to_string())?;
    let trials = splits
        .iter()
        .map(|sp| run_trial(&s.manifest, &s.raw, sp, WindowParams::default(), SYNTH_PCA, &cfg))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok((s, trials, start.elapsed().as_secs_f64()))
}

fn c5_end_to_end(s: &Synth, trials: &[TrialOutcome], secs: f64) -> Outcome {
    let (mut trained, mut euclid) = (Vec::new(), Vec::new());
    for t in trials {
        let (probes, gallery) = test_sets(&s.manifest, &s.raw, &t.split.test_ids, &t.train.model.pca)
            .map_err(|e| e.to_string())?;
        let ids: Vec<u32> = gallery.iter().map(|x| x.person_id).collect();
        let (mut rt, mut re) = (Vec::new(), Vec::new());
        for p in &probes {
            let learned: Vec<f64> = gallery.iter().map(|x| g(&p.descriptor, &x.descriptor, &t.train.model.metric)).collect();
            let pv = concat(&p.descriptor);
            let dist: Vec<f64> = gallery
                .iter()
                .map(|x| -concat(&x.descriptor).iter().zip(&pv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .collect();
            rt.push(oracle_rank(&learned, &ids, p.person_id));
            re.push(oracle_rank(&dist, &ids, p.person_id));
        }
        let lib = t.curve.rank1();
        ensure!((lib - rank1_of(&rt)).abs() < 1e-12, "library rank-1 {lib} vs oracle {}", rank1_of(&rt));
        trained.push(rank1_of(&rt));
        euclid.push(rank1_of(&re));
    }
    let mt = trained.iter().sum::<f64>() / trained.len() as f64;
    let me = euclid.iter().sum::<f64>() / euclid.len() as f64;
    ensure!(mt >= 0.80, "trained rank-1 {mt:.3}");
    ensure!(mt >= me + 0.10, "trained rank-1 {mt:.3} vs euclidean {me:.3}");
    ensure!(secs < 300.0, "took {secs:.1}s");
    Ok(format!(
        "10-trial mean rank-1: trained {mt:.3}, euclidean on SRR {me:.3} (+{:.1} pp), {secs:.1}s",
        (mt - me) * 100.0
    ))
}

fn c6_cmc(s: &Synth, trials: &[TrialOutcome]) -> Outcome {
    let mut curves: Vec<CmcCurve> = Vec::new();
    for t in trials {
        let (probes, gallery) =
            test_sets(&s.manifest, &s.raw, &t.split.test_ids, &t.train.model.pca).map_err(|e| e.to_string())?;
        let c = compute_cmc(&probes, &gallery, &t.train.model.metric).map_err(|e| e.to_string())?;
        ensure!(c == t.curve, "trial {} curve not reproducible", t.split.trial_index);
        curves.push(c);
        curves.push(t.baseline.clone());
    }
    let trained: Vec<CmcCurve> = trials.iter().map(|t| t.curve.clone()).collect();
    let mean = average_trials(&trained).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..mean.rates.len() {
        let mut acc = 0.0;
        for c in &trained {
            acc += c.rates[k];
        }
        worst = worst.max((mean.rates[k] - acc / trained.len() as f64).abs());
    }
    curves.push(mean);
    for c in &curves {
        ensure!(c.rates.windows(2).all(|w| w[0] <= w[1]), "curve decreases");
        ensure!(*c.rates.last().unwrap() == 1.0, "terminal value {}", c.rates.last().unwrap());
        ensure!(c.rates.iter().all(|&r| (0.0..=1.0).contains(&r)), "rate outside [0, 1]");
    }
    ensure!(worst <= 1e-12, "average deviates by {worst:.2e}");
    Ok(format!("{} curves monotone ending at 1.0, trial average deviation {worst:.1e}", curves.len()))
}

fn run_bin(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_reidmstc"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(())
}

fn c7_reproducible() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    run_bin(&["synth", "--out", &p("data"), "--ids", "24", "--seed", "3"])?;
    let manifest = p("data/manifest.json");
    for run in ["a", "b"] {
        let out = p(run);
        let common = ["--manifest", &manifest, "--out", &out, "--seed", "11", "--pca-dims", "12:12:12", "--bitexact"];
        run_bin(&[&["train"][..], &common[..]].concat())?;
        let model = format!("{out}/model.mstc");
        run_bin(&[&["eval", "--model", &model, "--trials", "2"][..], &common[..]].concat())?;
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string());
    for f in ["model.mstc", "cmc.csv", "convergence.csv"] {
        ensure!(read(&format!("a/{f}"))? == read(&format!("b/{f}"))?, "{f} differs between runs");
    }
    Ok("model.mstc, cmc.csv and convergence.csv byte-identical across two runs".into())
}

fn c8_persistence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pca = PcaModels::new(
        RegionKind::ALL
            .iter()
            .map(|&kind| PcaModel {
                kind,
                mean: DVector::from_fn(10, |_, _| rng.random()),
                basis: DMatrix::from_fn(10, 4 + kind as usize, |_, _| rng.random_range(-1.0..1.0)),
            })
            .collect(),
    );
    let layout = LayoutConfig::new(128, 48, WindowParams::default(), &pca).map_err(|e| e.to_string())?;
    let mut metric = rand_model(&mut rng, &layout.dims, 1.0);
    for b in &mut metric.blocks {
        b.w_m = project_nsd(&b.w_m).map_err(|e| e.to_string())?;
    }
    let model = TrainedModel { layout, pca, metric };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("m.mstc");
    save_model(&model, &path).map_err(|e| e.to_string())?;
    let back = load_model(&path).map_err(|e| e.to_string())?;
    for _ in 0..100 {
        let a = rand_desc(&mut rng, &model.layout.dims);
        let b = rand_desc(&mut rng, &model.layout.dims);
        let before = similarity(&a, &b, &model.metric).map_err(|e| e.to_string())?;
        let after = similarity(&a, &b, &back.metric).map_err(|e| e.to_string())?;
        ensure!(before.to_bits() == after.to_bits(), "score changed: {before} vs {after}");
    }
    let bytes = encode_model(&model).map_err(|e| e.to_string())?;
    let expect_err = |b: &[u8], msg: &str| -> Result<(), String> {
        match decode_model(b) {
            Ok(_) => Err(format!("damaged file accepted (expected {msg:?})")),
            Err(e) if e.to_string() == msg => Ok(()),
            Err(e) => Err(format!("expected {msg:?}, got {e}")),
        }
    };
    let mut t = bytes.clone();
    *t.last_mut().unwrap() ^= 0xff;
    expect_err(&t, "checksum mismatch")?;
    let mut t = bytes.clone();
    let k = bytes.len() - 200;
    t[k] ^= 0x01;
    expect_err(&t, "checksum mismatch")?;
    expect_err(&bytes[..bytes.len() / 3], "unexpected end of file")?;
    let mut t = bytes.clone();
    t[0] = b'X';
    expect_err(&t, "not a model file")?;
    Ok("100 score pairs bit-identical; flipped checksum/body, truncation and bad magic rejected".into())
}

fn c9_margins() -> Outcome {
    let cfg = RunConfig::default().solver;
    ensure!(cfg.alpha1 == 1.0 && cfg.alpha2 == 1.1, "margins {} / {}", cfg.alpha1, cfg.alpha2);
    ensure!(cfg.lambda == 3e-4, "lambda {}", cfg.lambda);
    ensure!(cfg.subset_size == 50, "subset size {}", cfg.subset_size);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dims = [6usize, 4, 5];
    for n in [2usize, 7, 40, 120] {
        let probes = (0..n).map(|_| rand_desc(&mut rng, &dims)).collect();
        let gallery = (0..n).map(|_| rand_desc(&mut rng, &dims)).collect();
        let batch = TrainBatch::with_random_subset(probes, gallery, cfg.subset_size, n as u64).map_err(|e| e.to_string())?;
        let o = objective(&MetricModel::zeros(&dims), &batch, cfg.alpha1, cfg.alpha2, cfg.lambda).map_err(|e| e.to_string())?;
        ensure!(o.l1 == 1.0 && o.l2 == 1.1 && o.regularizer == 0.0, "N={n}: components {o:?}");
        ensure!(o.total == 2.1, "N={n}: total {:?}", o.total);
    }
    Ok("alpha1=1, alpha2=1.1, lambda=3e-4; zero-model objective = 1 + 1.1 + 0 = 2.1 exactly for N in {2,7,40,120}".into())
}

// ---------------------------------------------------------------- harness

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn guarded_trials() -> Result<(Synth, Vec<TrialOutcome>, f64), String> {
    match panic::catch_unwind(sixty_id_trials) {
        Ok(r) => r,
        Err(_) => Err("panicked while running trials".into()),
    }
}

fn main() {
    // quiet the default panic printer; failures are reported below
    panic::set_hook(Box::new(|_| {}));
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "gradient correctness", guarded(c1_gradients)),
        (2, "prox_l21 optimality", guarded(c2_prox)),
        (3, "project_nsd", guarded(c3_nsd)),
        (4, "ADMM behavior", guarded(c4_admm)),
    ];
    match guarded_trials() {
        Ok((s, trials, secs)) => {
            results.push((5, "end-to-end learning signal", guarded(|| c5_end_to_end(&s, &trials, secs))));
            results.push((6, "CMC properties", guarded(|| c6_cmc(&s, &trials))));
        }
        Err(e) => {
            results.push((5, "end-to-end learning signal", Err(e.clone())));
            results.push((6, "CMC properties", Err(e)));
        }
    }
    results.push((7, "reproducibility", guarded(c7_reproducible)));
    results.push((8, "persistence", guarded(c8_persistence)));
    results.push((9, "margin defaults", guarded(c9_margins)));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("PASS [{n}] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{n}] {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
