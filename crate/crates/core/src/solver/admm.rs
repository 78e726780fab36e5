use std::fs;
use std::path::Path;

use log::{debug, info, warn};

use super::prox::{project_nsd, prox_l21};
use crate::error::{ReidError, Result};
use crate::metric::{loss_gradient, objective, LossKind, MetricBlock, MetricModel, TrainBatch, MAX_SUBSET};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    pub eta: f64,
    pub inner_steps: usize,
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub lambda: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub subset_size: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 1.0,
            eta: 0.1,
            inner_steps: 5,
            max_iters: 300,
            primal_tol: 1e-3,
            dual_tol: 1e-3,
            lambda: crate::metric::DEFAULT_LAMBDA,
            alpha1: crate::metric::DEFAULT_ALPHA1,
            alpha2: crate::metric::DEFAULT_ALPHA2,
            subset_size: MAX_SUBSET,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("rho", self.rho), ("eta", self.eta)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ReidError::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("lambda", self.lambda),
            ("primal_tol", self.primal_tol),
            ("dual_tol", self.dual_tol),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ReidError::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.inner_steps == 0 {
            return Err(ReidError::InvalidArgument("inner_steps must be at least 1".into()));
        }
        if !(2..=MAX_SUBSET).contains(&self.subset_size) {
            return Err(ReidError::InvalidArgument(format!(
                "subset_size must lie in 2..={MAX_SUBSET}, got {}",
                self.subset_size
            )));
        }
        Ok(())
    }

    fn alpha(&self, which: LossKind) -> f64 {
        match which {
            LossKind::L1 => self.alpha1,
            LossKind::L2 => self.alpha2,
        }
    }
}

/// One row of the convergence record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub l1: f64,
    pub l2: f64,
    pub regularizer: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Split variables `w[0..4]` (L1, L2, regularizer, NSD constraint), their
/// consensus `z` and scaled duals `u`.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub w: [MetricModel; 4],
    pub z: MetricModel,
    pub u: [MetricModel; 4],
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Gradient step in use; halved when the objective blows up.
    pub eta: f64,
    pub loss_trace: Vec<TraceEntry>,
}

impl AdmmState {
    /// All variables and duals zero; the trace holds the objective at zero.
    pub fn zeros(batch: &TrainBatch, config: &SolverConfig) -> Result<Self> {
        let zero = MetricModel::zeros(&batch.dims());
        let obj = objective(&zero, batch, config.alpha1, config.alpha2, config.lambda)?;
        Ok(AdmmState {
            w: std::array::from_fn(|_| zero.clone()),
            u: std::array::from_fn(|_| zero.clone()),
            z: zero,
            iteration: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            eta: config.eta,
            loss_trace: vec![TraceEntry {
                iteration: 0,
                objective: obj.total,
                l1: obj.l1,
                l2: obj.l2,
                regularizer: obj.regularizer,
                primal_residual: 0.0,
                dual_residual: 0.0,
            }],
        })
    }
}

/// `inner_steps` explicit gradient steps on
/// `L_which(W) + rho/2 ||W - z + u||_F^2`, starting at `w`. Blocks are
/// re-symmetrized after every step.
pub fn update_loss_block(
    w: &MetricModel,
    which: LossKind,
    z: &MetricModel,
    u: &MetricModel,
    batch: &TrainBatch,
    config: &SolverConfig,
) -> Result<MetricModel> {
    w.check_shape(z)?;
    w.check_shape(u)?;
    let target = z.sub(u);
    let mut cur = w.clone();
    for _ in 0..config.inner_steps {
        let (_, grad) = loss_gradient(&cur, batch, which, config.alpha(which))?;
        // grad + rho (cur - z + u)
        let mut step = grad;
        step.axpy(config.rho, &cur);
        step.axpy(-config.rho, &target);
        cur.axpy(-config.eta, &step);
        cur.symmetrize();
    }
    Ok(cur)
}

fn prox_model(v: &MetricModel, tau: f64) -> Result<MetricModel> {
    let blocks = v
        .blocks
        .iter()
        .map(|b| {
            Ok(MetricBlock {
                w_m: prox_l21(&b.w_m, tau)?,
                w_b: prox_l21(&b.w_b, tau)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MetricModel { blocks })
}

/// Projects only the Mahalanobis blocks; bilinear blocks pass through.
pub fn project_model_nsd(v: &MetricModel) -> Result<MetricModel> {
    let blocks = v
        .blocks
        .iter()
        .map(|b| {
            Ok(MetricBlock {
                w_m: project_nsd(&b.w_m)?,
                w_b: b.w_b.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(MetricModel { blocks })
}

/// One sweep of scaled-dual consensus ADMM.
pub fn admm_iterate(mut state: AdmmState, batch: &TrainBatch, config: &SolverConfig) -> Result<AdmmState> {
    let cfg = SolverConfig {
        eta: state.eta,
        ..config.clone()
    };
    let z = &state.z;
    let w1 = update_loss_block(&state.w[0], LossKind::L1, z, &state.u[0], batch, &cfg)?;
    let w2 = update_loss_block(&state.w[1], LossKind::L2, z, &state.u[1], batch, &cfg)?;
    // Row shrinkage breaks symmetry; the symmetric part keeps every split
    // variable in the same space as the loss copies.
    let mut w3 = prox_model(&z.sub(&state.u[2]), config.lambda / config.rho)?;
    w3.symmetrize();
    let w4 = project_model_nsd(&z.sub(&state.u[3]))?;
    state.w = [w1, w2, w3, w4];

    let mut z_new = state.w[0].add(&state.u[0]);
    for k in 1..4 {
        z_new.axpy(1.0, &state.w[k]);
        z_new.axpy(1.0, &state.u[k]);
    }
    z_new = z_new.scale(0.25);
    z_new.symmetrize();

    let mut primal_sq = 0.0;
    for k in 0..4 {
        let r = state.w[k].sub(&z_new);
        primal_sq += r.frobenius_sq();
        state.u[k].axpy(1.0, &r);
    }
    state.primal_residual = primal_sq.sqrt();
    state.dual_residual = config.rho * z_new.sub(&state.z).frobenius();
    state.z = z_new;
    state.iteration += 1;

    let obj = objective(&state.z, batch, config.alpha1, config.alpha2, config.lambda)?;
    state.loss_trace.push(TraceEntry {
        iteration: state.iteration,
        objective: obj.total,
        l1: obj.l1,
        l2: obj.l2,
        regularizer: obj.regularizer,
        primal_residual: state.primal_residual,
        dual_residual: state.dual_residual,
    });
    let initial = state.loss_trace[0].objective;
    if obj.total > 10.0 * initial {
        state.eta *= 0.5;
        warn!(
            "objective {:.4} exceeds 10x its initial value at iteration {}; halving eta to {}",
            obj.total, state.iteration, state.eta
        );
    }
    debug!(
        "iter {:4} obj {:.6} (l1 {:.6} l2 {:.6} R {:.4}) primal {:.3e} dual {:.3e}",
        state.iteration, obj.total, obj.l1, obj.l2, obj.regularizer, state.primal_residual, state.dual_residual
    );
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: MetricModel,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub final_state: AdmmState,
}

/// Runs ADMM from zero until both residuals fall below tolerance or
/// `max_iters` sweeps are done. The returned model is the consensus variable
/// with its Mahalanobis blocks projected onto the NSD cone.
pub fn train(batch: &TrainBatch, config: &SolverConfig) -> Result<TrainOutput> {
    config.validate()?;
    if batch.is_empty() {
        return Err(ReidError::InsufficientSamples { found: 0, needed: 2 });
    }
    let mut state = AdmmState::zeros(batch, config)?;
    let mut converged = false;
    while state.iteration < config.max_iters {
        state = admm_iterate(state, batch, config)?;
        if state.primal_residual < config.primal_tol && state.dual_residual < config.dual_tol {
            converged = true;
            break;
        }
    }
    let last = state.loss_trace.last().expect("trace starts non-empty");
    info!(
        "training stopped after {} iterations (converged: {converged}); objective {:.6} -> {:.6}",
        state.iteration, state.loss_trace[0].objective, last.objective
    );
    Ok(TrainOutput {
        model: project_model_nsd(&state.z)?,
        trace: state.loss_trace.clone(),
        converged,
        final_state: state,
    })
}

/// Draws the gallery subset from `config.seed` and trains.
pub fn train_on_pairs(
    probes: Vec<crate::features::PersonDescriptor>,
    gallery: Vec<crate::features::PersonDescriptor>,
    config: &SolverConfig,
) -> Result<TrainOutput> {
    let batch = TrainBatch::with_random_subset(probes, gallery, config.subset_size, config.seed)?;
    train(&batch, config)
}

pub const TRACE_HEADER: &str = "iteration,objective,l1,l2,regularizer,primal_residual,dual_residual";

pub fn trace_to_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for e in trace {
        out.push_str(&format!(
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            e.iteration, e.objective, e.l1, e.l2, e.regularizer, e.primal_residual, e.dual_residual
        ));
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    fs::write(path, trace_to_csv(trace)).map_err(|e| ReidError::io(path, e))
}
