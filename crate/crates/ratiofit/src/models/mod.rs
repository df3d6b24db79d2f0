//! Differentiable density-ratio models r: R^d -> (b_r, B_r).
//!
//! Three model classes cover the estimators in this crate:
//!
//! - [`MlpRatioModel`]: ReLU multilayer perceptron with a positive output
//!   link (softplus or exp) or a clamped sigmoid link for losses whose
//!   domain is (0, 1). Backpropagation is hand-derived for this fixed shape.
//! - [`KernelLinearModel`]: linear-in-parameter model over Gaussian kernel
//!   basis functions, used by the closed-form baselines.
//! - [`CappedModel`]: wraps any model and caps its output at a constant,
//!   the naive alternative to the risk correction.
//!
//! Models serialize to JSON with flat row-major parameter arrays; the decimal
//! rendering round-trips IEEE-754 doubles exactly.

mod kernel;
mod mlp;

pub use kernel::{median_heuristic, KernelLinearModel};
pub use mlp::{MlpRatioModel, OutputLink};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SampleSet;
use crate::{Error, Result};

/// Forward evaluation of a ratio model.
pub trait RatioModel {
    fn input_dim(&self) -> usize;

    /// The open interval (b_r, B_r) the outputs are guaranteed to land in.
    fn output_range(&self) -> (f64, f64);

    fn forward(&self, x: &[f64]) -> Result<f64>;

    /// Elementwise forward over the rows of `xs`, same order.
    fn forward_batch(&self, xs: &SampleSet) -> Result<Vec<f64>> {
        self.check_dim(xs)?;
        xs.rows().map(|row| self.forward(row)).collect()
    }

    fn check_dim(&self, xs: &SampleSet) -> Result<()> {
        if xs.dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects d = {}, samples have d = {}",
                self.input_dim(),
                xs.dim()
            )));
        }
        Ok(())
    }
}

/// A model whose parameters can be read, written, and differentiated.
pub trait Trainable: RatioModel {
    fn param_count(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, flat: &[f64]) -> Result<()>;

    /// Gradient of sum_i upstream[i] * r(x_i) with respect to the flat
    /// parameter vector.
    fn grad_params(&self, xs: &SampleSet, upstream: &[f64]) -> Result<Vec<f64>>;
}

/// min{inner(x), cap}: the naive way to bound a flexible model.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedModel<M> {
    pub inner: M,
    pub cap: f64,
}

impl<M: RatioModel> CappedModel<M> {
    pub fn new(inner: M, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::Config(format!("cap must be positive, got {cap}")));
        }
        Ok(Self { inner, cap })
    }
}

impl<M: RatioModel> RatioModel for CappedModel<M> {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn output_range(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.output_range();
        (lo.min(self.cap), hi.min(self.cap))
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inner.forward(x)?.min(self.cap))
    }
}

impl<M: Trainable> Trainable for CappedModel<M> {
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn params(&self) -> Vec<f64> {
        self.inner.params()
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        self.inner.set_params(flat)
    }

    fn grad_params(&self, xs: &SampleSet, upstream: &[f64]) -> Result<Vec<f64>> {
        // Where the cap is active the output is constant, so those samples
        // contribute nothing.
        let raw = self.inner.forward_batch(xs)?;
        if raw.len() != upstream.len() {
            return Err(Error::Shape(format!(
                "upstream length {} does not match batch size {}",
                upstream.len(),
                raw.len()
            )));
        }
        let gated: Vec<f64> = raw
            .iter()
            .zip(upstream)
            .map(|(&r, &u)| if r < self.cap { u } else { 0.0 })
            .collect();
        self.inner.grad_params(xs, &gated)
    }
}

/// Any of the built-in model kinds; the serialization and CLI surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyModel {
    Mlp(MlpRatioModel),
    Kernel(KernelLinearModel),
    Capped { cap: f64, inner: Box<AnyModel> },
}

impl From<MlpRatioModel> for AnyModel {
    fn from(m: MlpRatioModel) -> Self {
        AnyModel::Mlp(m)
    }
}

impl From<KernelLinearModel> for AnyModel {
    fn from(m: KernelLinearModel) -> Self {
        AnyModel::Kernel(m)
    }
}

impl AnyModel {
    pub fn capped(inner: AnyModel, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::Config(format!("cap must be positive, got {cap}")));
        }
        Ok(AnyModel::Capped { cap, inner: Box::new(inner) })
    }
}

impl RatioModel for AnyModel {
    fn input_dim(&self) -> usize {
        match self {
            AnyModel::Mlp(m) => m.input_dim(),
            AnyModel::Kernel(m) => m.input_dim(),
            AnyModel::Capped { inner, .. } => inner.input_dim(),
        }
    }

    fn output_range(&self) -> (f64, f64) {
        match self {
            AnyModel::Mlp(m) => m.output_range(),
            AnyModel::Kernel(m) => m.output_range(),
            AnyModel::Capped { cap, inner } => {
                let (lo, hi) = inner.output_range();
                (lo.min(*cap), hi.min(*cap))
            }
        }
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        match self {
            AnyModel::Mlp(m) => m.forward(x),
            AnyModel::Kernel(m) => m.forward(x),
            AnyModel::Capped { cap, inner } => Ok(inner.forward(x)?.min(*cap)),
        }
    }

    fn forward_batch(&self, xs: &SampleSet) -> Result<Vec<f64>> {
        match self {
            AnyModel::Mlp(m) => m.forward_batch(xs),
            AnyModel::Kernel(m) => m.forward_batch(xs),
            AnyModel::Capped { cap, inner } => {
                let mut out = inner.forward_batch(xs)?;
                for v in &mut out {
                    *v = v.min(*cap);
                }
                Ok(out)
            }
        }
    }
}

impl Trainable for AnyModel {
    fn param_count(&self) -> usize {
        match self {
            AnyModel::Mlp(m) => m.param_count(),
            AnyModel::Kernel(m) => m.param_count(),
            AnyModel::Capped { inner, .. } => inner.param_count(),
        }
    }

    fn params(&self) -> Vec<f64> {
        match self {
            AnyModel::Mlp(m) => m.params(),
            AnyModel::Kernel(m) => m.params(),
            AnyModel::Capped { inner, .. } => inner.params(),
        }
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        match self {
            AnyModel::Mlp(m) => m.set_params(flat),
            AnyModel::Kernel(m) => m.set_params(flat),
            AnyModel::Capped { inner, .. } => inner.set_params(flat),
        }
    }

    fn grad_params(&self, xs: &SampleSet, upstream: &[f64]) -> Result<Vec<f64>> {
        match self {
            AnyModel::Mlp(m) => m.grad_params(xs, upstream),
            AnyModel::Kernel(m) => m.grad_params(xs, upstream),
            AnyModel::Capped { cap, inner } => {
                let raw = inner.forward_batch(xs)?;
                if raw.len() != upstream.len() {
                    return Err(Error::Shape(format!(
                        "upstream length {} does not match batch size {}",
                        upstream.len(),
                        raw.len()
                    )));
                }
                let gated: Vec<f64> = raw
                    .iter()
                    .zip(upstream)
                    .map(|(&r, &u)| if r < *cap { u } else { 0.0 })
                    .collect();
                inner.grad_params(xs, &gated)
            }
        }
    }
}

/// Write a model as pretty JSON.
pub fn save_model(path: &Path, model: &AnyModel) -> Result<()> {
    let json = serde_json::to_string_pretty(model)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Read a model written by [`save_model`].
pub fn load_model(path: &Path) -> Result<AnyModel> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
