//! Mini-batch training of the corrected risk.
//!
//! Each epoch shuffles both sample streams with an epoch-specific seeded
//! permutation and splits them into paired mini-batches (the shorter stream
//! wraps around cyclically). Per batch, the clip aggregate
//! `E_de[l1] - C E_nu[l1]` decides the step: non-negative takes an Adam step
//! on the full corrected objective plus the parameter penalty, negative takes
//! a step on the negated aggregate plus the penalty (gradient ascent on the
//! aggregate, dropping the l2 term) to push the model back where the plain
//! risk is trusted.
//!
//! Training runs for exactly `epochs` epochs and records per-epoch
//! diagnostics; identical configuration and data reproduce the trace
//! bit for bit.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bregman::LossSpec;
use crate::data::{Role, SampleSet};
use crate::evalkit::{self, splitmix64, ScoredLabels};
use crate::models::Trainable;
use crate::numfmt::fmt_f64;
use crate::risk::{empirical_nnbr, nnbr_gradient_signal_from_values, Branch, CorrectionFn};
use crate::{Error, Result};

/// Parameter penalty added to every step's gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Penalty {
    #[default]
    L2,
    L1,
}

impl std::str::FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Penalty::L2),
            "l1" => Ok(Penalty::L1),
            other => Err(Error::Parse(format!("unknown penalty {other:?}"))),
        }
    }
}

impl Penalty {
    pub fn name(self) -> &'static str {
        match self {
            Penalty::L2 => "l2",
            Penalty::L1 => "l1",
        }
    }
}

/// Everything a training run needs besides the data and the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Penalty coefficient; the penalty gradient is added to the loss
    /// gradient before the Adam update in both branches.
    pub lambda: f64,
    pub penalty: Penalty,
    pub batch_size_nu: usize,
    pub batch_size_de: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Let the shorter stream wrap around cyclically so every batch has both
    /// roles; disabling it makes mismatched stream lengths a hard error.
    pub wrap: bool,
    pub correction: CorrectionFn,
}

impl TrainConfig {
    pub fn new(
        learning_rate: f64,
        batch_size_nu: usize,
        batch_size_de: usize,
        epochs: usize,
        seed: u64,
    ) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            lambda: 0.0,
            penalty: Penalty::L2,
            batch_size_nu,
            batch_size_de,
            epochs,
            seed,
            shuffle: true,
            wrap: true,
            correction: CorrectionFn::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0 < self.beta1 && self.beta1 < self.beta2 && self.beta2 < 1.0) {
            return Err(Error::Config(format!(
                "need 0 < beta1 < beta2 < 1, got ({}, {})",
                self.beta1, self.beta2
            )));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Config("adam epsilon must be positive".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda must be non-negative".into()));
        }
        if self.batch_size_nu == 0 || self.batch_size_de == 0 {
            return Err(Error::Config("batch sizes must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("need at least one epoch".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [f64],
    grad: &[f64],
    config: &TrainConfig,
) -> Result<()> {
    if params.len() != state.m.len() || grad.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam state holds {} parameters, got params {} / grad {}",
            state.m.len(),
            params.len(),
            grad.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_eps);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Mini-batches
// ---------------------------------------------------------------------------

/// Paired mini-batches for one epoch.
///
/// Both streams are permuted by an epoch-specific seeded shuffle, then split
/// into `N = max(ceil(n_nu/bs_nu), ceil(n_de/bs_de))` pairs; the stream that
/// runs out first continues cyclically through its permutation.
pub fn make_minibatches(
    nu: &SampleSet,
    de: &SampleSet,
    config: &TrainConfig,
    epoch_index: usize,
) -> Result<Vec<(SampleSet, SampleSet)>> {
    nu.expect_role(Role::Numerator)?;
    de.expect_role(Role::Denominator)?;
    config.validate()?;

    let batches_nu = nu.len().div_ceil(config.batch_size_nu);
    let batches_de = de.len().div_ceil(config.batch_size_de);
    let n_batches = batches_nu.max(batches_de);

    if !config.wrap && (batches_nu != n_batches || batches_de != n_batches) {
        return Err(Error::Config(format!(
            "streams need {batches_nu} vs {batches_de} batches and wrap-around is disabled"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(config.seed) ^ splitmix64(epoch_index as u64));
    let perm = |rng: &mut ChaCha8Rng, n: usize| -> Vec<usize> {
        let mut ix: Vec<usize> = (0..n).collect();
        if config.shuffle {
            ix.shuffle(rng);
        }
        ix
    };
    let perm_nu = perm(&mut rng, nu.len());
    let perm_de = perm(&mut rng, de.len());

    let slice_for = |perm: &[usize], bs: usize, full: usize, j: usize| -> Vec<usize> {
        let n = perm.len();
        if full == n_batches {
            // This stream defines the batch count; plain split, last may be short.
            let start = j * bs;
            let end = ((j + 1) * bs).min(n);
            perm[start..end].to_vec()
        } else {
            // Wrap cyclically through the permutation.
            (0..bs).map(|k| perm[(j * bs + k) % n]).collect()
        }
    };

    let mut out = Vec::with_capacity(n_batches);
    for j in 0..n_batches {
        let ix_nu = slice_for(&perm_nu, config.batch_size_nu, batches_nu, j);
        let ix_de = slice_for(&perm_de, config.batch_size_de, batches_de, j);
        out.push((nu.select(&ix_nu, Role::Numerator)?, de.select(&ix_de, Role::Denominator)?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Held-out data for per-epoch diagnostics.
#[derive(Debug, Clone)]
pub struct Holdout {
    /// Denominator samples for the normalization diagnostic E_de[r_hat].
    pub de: SampleSet,
    /// True ratio evaluated at the holdout rows; enables a per-epoch
    /// held-out squared-error trace on problems where r* is known.
    pub de_true_ratio: Option<Vec<f64>>,
    /// Labeled points for a per-epoch AUROC (+1 / -1 labels).
    pub labeled: Option<(SampleSet, Vec<i8>)>,
}

impl Holdout {
    pub fn new(de: SampleSet) -> Self {
        Self {
            de,
            de_true_ratio: None,
            labeled: None,
        }
    }
}

/// Per-epoch diagnostics; every array has length `epochs`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    /// Corrected risk on the full training data at the end of each epoch.
    pub risk: Vec<f64>,
    /// Mean over the epoch's batches of the raw clip aggregate.
    pub clip_raw: Vec<f64>,
    /// Fraction of batches that took the ascent branch.
    pub ascent_frac: Vec<f64>,
    /// E_de[r_hat] on the held-out denominator data (NaN without a holdout).
    pub e_de_r: Vec<f64>,
    /// AUROC on the labeled holdout (NaN without one).
    pub auroc: Vec<f64>,
    /// Mean squared error against the true ratio on the holdout (NaN unless
    /// the holdout carries true-ratio values).
    pub l2_holdout: Vec<f64>,
}

impl TrainTrace {
    /// CSV with header `epoch,risk,clip_raw,ascent_frac,e_de_r,auroc`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "epoch,risk,clip_raw,ascent_frac,e_de_r,auroc")?;
        for e in 0..self.risk.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                e + 1,
                fmt_f64(self.risk[e]),
                fmt_f64(self.clip_raw[e]),
                fmt_f64(self.ascent_frac[e]),
                fmt_f64(self.e_de_r[e]),
                fmt_f64(self.auroc[e]),
            )?;
        }
        Ok(())
    }
}

fn range_compatible(model_range: (f64, f64), spec: &LossSpec) -> bool {
    let domain = spec.domain();
    model_range.0 >= domain.lower && model_range.1 <= domain.upper
}

/// Train `model` by mini-batch Adam on the corrected risk.
///
/// Runs exactly `config.epochs` epochs. If a parameter or risk value becomes
/// non-finite, the model is rolled back to the last finite state and
/// `Error::Numerical` is returned.
pub fn train<M: Trainable>(
    model: &mut M,
    spec: &LossSpec,
    nu: &SampleSet,
    de: &SampleSet,
    config: &TrainConfig,
    holdout: Option<&Holdout>,
) -> Result<TrainTrace> {
    config.validate()?;
    nu.expect_role(Role::Numerator)?;
    de.expect_role(Role::Denominator)?;
    model.check_dim(nu)?;
    model.check_dim(de)?;
    if !range_compatible(model.output_range(), spec) {
        let (lo, hi) = model.output_range();
        return Err(Error::Config(format!(
            "model range ({lo}, {hi}) is not contained in the {} loss domain",
            spec.family.name()
        )));
    }

    if let Some(h) = holdout {
        h.de.expect_role(Role::Denominator)?;
        if let Some(truth) = &h.de_true_ratio {
            if truth.len() != h.de.len() {
                return Err(Error::Shape(format!(
                    "holdout carries {} true-ratio values for {} rows",
                    truth.len(),
                    h.de.len()
                )));
            }
        }
    }

    let mut state = AdamState::new(model.param_count());
    let mut trace = TrainTrace::default();
    let mut last_good = model.params();

    for epoch in 0..config.epochs {
        let batches = make_minibatches(nu, de, config, epoch)?;
        let mut clip_sum = 0.0;
        let mut ascent_count = 0usize;

        for (batch_nu, batch_de) in &batches {
            let r_nu = model.forward_batch(batch_nu)?;
            let r_de = model.forward_batch(batch_de)?;
            let signal =
                nnbr_gradient_signal_from_values(spec, &r_nu, &r_de, config.correction)?;
            if !signal.breakdown.total.is_finite() {
                model.set_params(&last_good)?;
                return Err(Error::Numerical(format!(
                    "batch risk became non-finite at epoch {}",
                    epoch + 1
                )));
            }
            clip_sum += signal.breakdown.term_clip_raw;
            if signal.branch == Branch::Ascent {
                ascent_count += 1;
            }

            let mut grad = model.grad_params(batch_nu, &signal.upstream_nu)?;
            let grad_de = model.grad_params(batch_de, &signal.upstream_de)?;
            for (g, gd) in grad.iter_mut().zip(&grad_de) {
                *g += gd;
            }

            let mut params = model.params();
            if config.lambda > 0.0 {
                match config.penalty {
                    Penalty::L2 => {
                        for (g, p) in grad.iter_mut().zip(&params) {
                            *g += config.lambda * p;
                        }
                    }
                    Penalty::L1 => {
                        for (g, p) in grad.iter_mut().zip(&params) {
                            if *p != 0.0 {
                                *g += config.lambda * p.signum();
                            }
                        }
                    }
                }
            }

            adam_step(&mut state, &mut params, &grad, config)?;
            if params.iter().any(|p| !p.is_finite()) {
                model.set_params(&last_good)?;
                return Err(Error::Numerical(format!(
                    "parameters became non-finite at epoch {}",
                    epoch + 1
                )));
            }
            model.set_params(&params)?;
            last_good = params;
        }

        let breakdown = empirical_nnbr(spec, model, nu, de, config.correction)?;
        if !breakdown.total.is_finite() {
            model.set_params(&last_good)?;
            return Err(Error::Numerical(format!(
                "epoch {} risk became non-finite",
                epoch + 1
            )));
        }
        trace.risk.push(breakdown.total);
        trace.clip_raw.push(clip_sum / batches.len() as f64);
        trace.ascent_frac.push(ascent_count as f64 / batches.len() as f64);

        match holdout {
            Some(h) => {
                let r_holdout = model.forward_batch(&h.de)?;
                trace
                    .e_de_r
                    .push(crate::risk::pairwise_sum(&r_holdout) / r_holdout.len() as f64);
                match &h.de_true_ratio {
                    Some(truth) => {
                        let sq: Vec<f64> = r_holdout
                            .iter()
                            .zip(truth)
                            .map(|(r, t)| (r - t) * (r - t))
                            .collect();
                        trace
                            .l2_holdout
                            .push(crate::risk::pairwise_sum(&sq) / sq.len() as f64);
                    }
                    None => trace.l2_holdout.push(f64::NAN),
                }
                match &h.labeled {
                    Some((xs, labels)) => {
                        let scores = model.forward_batch(xs)?;
                        let sl = ScoredLabels::new(scores, labels.clone())?;
                        trace.auroc.push(evalkit::auroc(&sl)?);
                    }
                    None => trace.auroc.push(f64::NAN),
                }
            }
            None => {
                trace.e_de_r.push(f64::NAN);
                trace.auroc.push(f64::NAN);
                trace.l2_holdout.push(f64::NAN);
            }
        }
    }
    Ok(trace)
}
