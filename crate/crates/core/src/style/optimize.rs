//! Gradient descent on raw target vectors.

use super::adam::Adam;
use super::schedule::{combine_gradients, GuidanceSchedule};
use super::sources::GuidanceSource;
use crate::darap::{deform_cached, DeformConfig, Forward, TargetNormals};
use crate::error::{Error, Result};
use crate::grad::vjp_deform;
use crate::mesh::{Mesh, Vec3};
use crate::ops::SurfaceOperators;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub updates_per_epoch: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub mask: Option<Vec<bool>>,
    pub seed: u64,
    pub restore_bbox: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            lambda: 8.0,
            learning_rate: 0.002,
            epochs: 2500,
            updates_per_epoch: 1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            mask: None,
            seed: 0,
            restore_bbox: false,
        }
    }
}

impl OptimizeConfig {
    pub fn deform_config(&self) -> DeformConfig {
        DeformConfig {
            lambda: self.lambda,
            mask: self.mask.clone(),
            centroid_target: None,
            restore_bbox: self.restore_bbox,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.updates_per_epoch == 0 {
            return Err(Error::InvalidInput("epochs and updates per epoch must be at least 1".into()));
        }
        Ok(())
    }
}

/// One trace line. The `total` source carries the weighted loss and the norm
/// of the gradient on the targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub source: String,
    pub weight: f64,
    pub loss: f64,
    pub grad_norm: f64,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from("epoch,source,weight,loss,grad_norm\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.source, r.weight, r.loss, r.grad_norm));
    }
    s
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub targets: TargetNormals,
    pub mesh: Mesh,
    pub trace: Vec<TraceRow>,
}

impl Optimized {
    /// Rows of the `total` source, one per evaluation.
    pub fn total_losses(&self) -> Vec<f64> {
        self.trace
            .iter()
            .filter(|r| r.source == "total")
            .map(|r| r.loss)
            .collect()
    }
}

/// What an observer sees after each backward pass.
pub struct EpochView<'a> {
    pub epoch: usize,
    pub forward: &'a Forward,
    pub target_grad: &'a [Vec3],
    pub targets: &'a TargetNormals,
}

fn norm(g: &[Vec3]) -> f64 {
    g.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
}

fn evaluate_sources(
    sources: &mut [Box<dyn GuidanceSource + '_>],
    schedule: &GuidanceSchedule,
    epoch: usize,
    fwd: &Forward,
    trace: &mut Vec<TraceRow>,
) -> Result<Vec<Vec3>> {
    let mut grads = Vec::with_capacity(sources.len());
    let mut weights = Vec::with_capacity(sources.len());
    for s in sources.iter_mut() {
        let name = s.name().to_string();
        let wrap = |e: Error| match e {
            Error::Guidance { .. } => e,
            other => Error::Guidance {
                source_name: name.clone(),
                epoch,
                message: other.to_string(),
            },
        };
        let (loss, g) = s.evaluate(epoch, &fwd.mesh).map_err(wrap)?;
        if g.len() != fwd.mesh.n_vertices() {
            return Err(wrap(Error::ShapeMismatch {
                what: "gradient rows",
                expected: fwd.mesh.n_vertices(),
                actual: g.len(),
            }));
        }
        if !loss.is_finite() || !g.iter().all(|v| v.iter().all(|c| c.is_finite())) {
            return Err(wrap(Error::Numerical("non-finite loss or gradient".into())));
        }
        let w = schedule.get(&name).expect("checked").weight(epoch);
        trace.push(TraceRow {
            epoch,
            source: name,
            weight: w,
            loss,
            grad_norm: norm(&g),
        });
        grads.push(g);
        weights.push(w);
    }
    combine_gradients(&grads, &weights)
}

/// Optimizes target normals starting from the source normals. Sources are
/// evaluated once more after the last update so the trace ends with the
/// final losses.
pub fn optimize(
    operators: &SurfaceOperators,
    sources: &mut [Box<dyn GuidanceSource + '_>],
    config: &OptimizeConfig,
    schedule: &GuidanceSchedule,
) -> Result<Optimized> {
    optimize_observed(operators, sources, config, schedule, |_| Ok(()))
}

pub fn optimize_observed(
    operators: &SurfaceOperators,
    sources: &mut [Box<dyn GuidanceSource + '_>],
    config: &OptimizeConfig,
    schedule: &GuidanceSchedule,
    mut observe: impl FnMut(&EpochView) -> Result<()>,
) -> Result<Optimized> {
    config.check()?;
    if sources.is_empty() {
        return Err(Error::InvalidInput("at least one guidance source is required".into()));
    }
    for s in sources.iter() {
        if schedule.get(s.name()).is_none() {
            return Err(Error::InvalidInput(format!("no schedule for source {}", s.name())));
        }
    }
    let deform_cfg = config.deform_config();
    let mut targets = TargetNormals::new(operators.source_normals().to_vec());
    let mut adam = Adam::new(targets.len(), config.learning_rate);
    adam.beta1 = config.beta1;
    adam.beta2 = config.beta2;
    adam.eps = config.eps;
    let mut trace = Vec::new();

    for epoch in 0..=config.epochs {
        let updates = if epoch == config.epochs { 1 } else { config.updates_per_epoch };
        for _ in 0..updates {
            let fwd = deform_cached(operators, &targets, &deform_cfg)?;
            let start = trace.len();
            let g_vertices = evaluate_sources(sources, schedule, epoch, &fwd, &mut trace)?;
            let total: f64 = trace[start..].iter().map(|r| r.weight * r.loss).sum();
            let g_targets = vjp_deform(operators, &fwd, &g_vertices)?;
            trace.push(TraceRow {
                epoch,
                source: "total".into(),
                weight: 1.0,
                loss: total,
                grad_norm: norm(&g_targets),
            });
            observe(&EpochView {
                epoch,
                forward: &fwd,
                target_grad: &g_targets,
                targets: &targets,
            })?;
            if epoch == config.epochs {
                for s in sources.iter_mut() {
                    s.finish()?;
                }
                return Ok(Optimized {
                    targets,
                    mesh: fwd.mesh,
                    trace,
                });
            }
            log::debug!("epoch {epoch}: loss {total:.6e}");
            adam.step(targets.values_mut(), &g_targets);
        }
    }
    unreachable!("loop returns at the final epoch")
}
