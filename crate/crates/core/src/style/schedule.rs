//! Per-source weight schedules and gradient combination.

use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Linear ramp from `start_weight` at `start_epoch` to `end_weight` at `end_epoch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_epoch: usize,
    pub end_epoch: usize,
    pub start_weight: f64,
    pub end_weight: f64,
}

impl Segment {
    pub fn new(start_epoch: usize, end_epoch: usize, start_weight: f64, end_weight: f64) -> Self {
        Self {
            start_epoch,
            end_epoch,
            start_weight,
            end_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSchedule {
    pub name: String,
    pub segments: Vec<Segment>,
}

impl SourceSchedule {
    /// Checks ordering, overlap and continuity at joints.
    pub fn new(name: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        let name = name.into();
        if segments.is_empty() {
            return Err(Error::InvalidInput(format!("schedule for {name} has no segments")));
        }
        for s in &segments {
            if s.end_epoch <= s.start_epoch || !s.start_weight.is_finite() || !s.end_weight.is_finite() {
                return Err(Error::InvalidInput(format!("bad segment {s:?} for {name}")));
            }
        }
        for w in segments.windows(2) {
            if w[1].start_epoch < w[0].end_epoch {
                return Err(Error::InvalidInput(format!("overlapping segments for {name}")));
            }
            if w[1].start_epoch == w[0].end_epoch && w[1].start_weight != w[0].end_weight {
                return Err(Error::InvalidInput(format!(
                    "schedule for {name} jumps at epoch {}",
                    w[0].end_epoch
                )));
            }
        }
        Ok(Self { name, segments })
    }

    pub fn constant(name: impl Into<String>, weight: f64) -> Self {
        Self {
            name: name.into(),
            segments: vec![Segment::new(0, 1, weight, weight)],
        }
    }

    /// 0 to 0.2 over 1000 epochs, 0.2 to 0.3 over the next 750, then 0.3.
    pub fn ramped(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            segments: vec![Segment::new(0, 1000, 0.0, 0.2), Segment::new(1000, 1750, 0.2, 0.3)],
        }
    }

    /// Piecewise-linear weight, held constant before the first and after the
    /// last segment and across gaps.
    pub fn weight(&self, epoch: usize) -> f64 {
        let mut w = self.segments[0].start_weight;
        for s in &self.segments {
            if epoch < s.start_epoch {
                break;
            }
            if epoch >= s.end_epoch {
                w = s.end_weight;
                continue;
            }
            let t = (epoch - s.start_epoch) as f64 / (s.end_epoch - s.start_epoch) as f64;
            return s.start_weight + t * (s.end_weight - s.start_weight);
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GuidanceSchedule {
    pub sources: Vec<SourceSchedule>,
}

impl GuidanceSchedule {
    pub fn new(sources: Vec<SourceSchedule>) -> Self {
        Self { sources }
    }

    /// Weight 1 for every named source.
    pub fn uniform<S: AsRef<str>>(names: &[S]) -> Self {
        Self::new(
            names
                .iter()
                .map(|n| SourceSchedule::constant(n.as_ref(), 1.0))
                .collect(),
        )
    }

    pub fn get(&self, name: &str) -> Option<&SourceSchedule> {
        self.sources.iter().find(|s| s.name == name)
    }
}

pub fn schedule_weight(schedule: &GuidanceSchedule, source: &str, epoch: usize) -> Result<f64> {
    schedule
        .get(source)
        .map(|s| s.weight(epoch))
        .ok_or_else(|| Error::InvalidInput(format!("no schedule for source {source}")))
}

/// `sum_i weights[i] * grads[i]`.
pub fn combine_gradients(grads: &[Vec<Vec3>], weights: &[f64]) -> Result<Vec<Vec3>> {
    if grads.len() != weights.len() {
        return Err(Error::ShapeMismatch {
            what: "gradient weights",
            expected: grads.len(),
            actual: weights.len(),
        });
    }
    let Some(first) = grads.first() else {
        return Err(Error::InvalidInput("no gradients to combine".into()));
    };
    let n = first.len();
    let mut out = vec![Vec3::zeros(); n];
    for (g, &w) in grads.iter().zip(weights) {
        if g.len() != n {
            return Err(Error::ShapeMismatch {
                what: "gradient rows",
                expected: n,
                actual: g.len(),
            });
        }
        for (o, v) in out.iter_mut().zip(g) {
            *o += v * w;
        }
    }
    Ok(out)
}
