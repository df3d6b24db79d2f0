//! Downstream applications of the ratio estimate.
//!
//! - Inlier-based outlier detection: train the ratio of inlier-training to
//!   test densities and use r_hat(x) as an inlier score; AUROC with inliers
//!   as positives quantifies detection.
//! - Covariate shift adaptation: reweight training losses by
//!   w(x) = p_test(x) / p_train(x) so the empirical risk targets the test
//!   distribution; the ratio is estimated with the test-domain covariates as
//!   numerator and the train-domain covariates as denominator. The weighted
//!   learner here is kernel ridge regression in its dual form.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, LU};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines;
use crate::bregman::{LossFamily, LossSpec};
use crate::data::{Role, SampleSet};
use crate::evalkit::{self, ScoredLabels, SyntheticProblem};
use crate::models::{median_heuristic, MlpRatioModel, OutputLink, RatioModel};
use crate::numfmt::fmt_f64;
use crate::trainer::{train, TrainConfig};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Outlier scoring
// ---------------------------------------------------------------------------

/// Ratio-based outlier scores: higher means more inlier-like.
///
/// The model is assumed trained with the inlier training data as numerator
/// and the test data as denominator. For PULog the model estimates C * r*,
/// so the output is divided by C; that rescale changes values, not ranking.
pub fn outlier_scores(
    model: &dyn RatioModel,
    spec: &LossSpec,
    test: &SampleSet,
) -> Result<Vec<f64>> {
    let mut scores = model.forward_batch(test)?;
    if spec.family == LossFamily::PuLog {
        for s in &mut scores {
            *s /= spec.c;
        }
    }
    Ok(scores)
}

// ---------------------------------------------------------------------------
// Weighted kernel ridge regression
// ---------------------------------------------------------------------------

/// Kernel for ridge regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RidgeKernel {
    Linear,
    Gaussian { sigma: f64 },
    Polynomial { degree: u32, offset: f64 },
}

impl RidgeKernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            RidgeKernel::Linear => dot(x, y),
            RidgeKernel::Gaussian { sigma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            RidgeKernel::Polynomial { degree, offset } => {
                (dot(x, y) + offset).powi(degree as i32)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            RidgeKernel::Linear => "linear".into(),
            RidgeKernel::Gaussian { sigma } => format!("gaussian({sigma})"),
            RidgeKernel::Polynomial { degree, offset } => {
                format!("polynomial({degree},{offset})")
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RidgeKernel::Gaussian { sigma } if !(sigma > 0.0) => {
                Err(Error::Config(format!("gaussian kernel needs sigma > 0, got {sigma}")))
            }
            RidgeKernel::Polynomial { degree, .. } if degree == 0 => {
                Err(Error::Config("polynomial kernel needs degree >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Kernel choice plus ridge constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSpec {
    pub kernel: RidgeKernel,
    pub lambda: f64,
}

impl RidgeSpec {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("ridge lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Per-sample non-negative weights with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights {
    weights: Vec<f64>,
    source: String,
}

impl ImportanceWeights {
    pub fn new(weights: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        Ok(Self { weights, source: source.into() })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            source: "uniform".into(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Dual-form kernel ridge predictor g(x) = sum_i alpha_i k(x_i, x).
#[derive(Debug, Clone)]
pub struct RidgePredictor {
    train_x: SampleSet,
    alpha: Vec<f64>,
    kernel: RidgeKernel,
}

impl RidgePredictor {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.train_x.dim() {
            return Err(Error::Shape(format!(
                "input has length {}, predictor expects {}",
                x.len(),
                self.train_x.dim()
            )));
        }
        Ok(self
            .train_x
            .rows()
            .zip(&self.alpha)
            .map(|(xi, a)| a * self.kernel.eval(xi, x))
            .sum())
    }

    pub fn predict_batch(&self, xs: &SampleSet) -> Result<Vec<f64>> {
        xs.rows().map(|row| self.predict(row)).collect()
    }
}

/// Weighted kernel ridge: minimizes
/// `sum_i w_i (y_i - g(x_i))^2 + lambda ||g||_K^2` via the stationarity
/// system `(W K + lambda I) alpha = W y`. Zero-weight samples drop out
/// (their dual coefficient vanishes).
pub fn fit_weighted_ridge(
    train_x: &SampleSet,
    train_y: &[f64],
    weights: &ImportanceWeights,
    spec: &RidgeSpec,
) -> Result<RidgePredictor> {
    spec.validate()?;
    let n = train_x.len();
    if train_y.len() != n || weights.len() != n {
        return Err(Error::Shape(format!(
            "{} samples, {} targets, {} weights",
            n,
            train_y.len(),
            weights.len()
        )));
    }

    let k = gram(train_x, &spec.kernel);
    let w = weights.values();
    // A = W K + lambda I, rhs = W y.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = w[i] * k[(i, j)];
        }
        a[(i, i)] += spec.lambda;
    }
    let rhs = DVector::from_iterator(n, train_y.iter().zip(w).map(|(y, wi)| y * wi));

    let alpha = match LU::new(a.clone()).solve(&rhs) {
        Some(sol) => sol,
        None => {
            // Jitter retry scaled by the Gram trace.
            let jitter = 1e-10 * k.trace() / n as f64;
            for i in 0..n {
                a[(i, i)] += jitter;
            }
            LU::new(a).solve(&rhs).ok_or_else(|| {
                Error::SingularMatrix("weighted ridge system is singular".into())
            })?
        }
    };

    Ok(RidgePredictor {
        train_x: train_x.clone(),
        alpha: alpha.iter().copied().collect(),
        kernel: spec.kernel,
    })
}

/// Unweighted kernel ridge through the symmetric system `(K + lambda I) a = y`.
pub fn fit_ridge(train_x: &SampleSet, train_y: &[f64], spec: &RidgeSpec) -> Result<RidgePredictor> {
    spec.validate()?;
    let n = train_x.len();
    if train_y.len() != n {
        return Err(Error::Shape(format!("{} samples, {} targets", n, train_y.len())));
    }
    let mut k = gram(train_x, &spec.kernel);
    for i in 0..n {
        k[(i, i)] += spec.lambda;
    }
    let rhs = DVector::from_column_slice(train_y);
    let alpha = Cholesky::new(k)
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::SingularMatrix("ridge system is not positive definite".into()))?;
    Ok(RidgePredictor {
        train_x: train_x.clone(),
        alpha: alpha.iter().copied().collect(),
        kernel: spec.kernel,
    })
}

fn gram(xs: &SampleSet, kernel: &RidgeKernel) -> DMatrix<f64> {
    let n = xs.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(xs.row(i), xs.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Importance-weighted k-fold cross-validation for the ridge constant:
/// validation error is the weighted squared error on the held-out fold.
pub fn select_ridge_lambda(
    train_x: &SampleSet,
    train_y: &[f64],
    weights: &ImportanceWeights,
    kernel: RidgeKernel,
    lambdas: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    use rand::seq::SliceRandom;
    if lambdas.is_empty() {
        return Err(Error::Config("need at least one candidate lambda".into()));
    }
    let n = train_x.len();
    if folds < 2 || n < 2 * folds {
        return Err(Error::Config(format!("cannot make {folds} folds from {n} samples")));
    }
    let mut ix: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ix.shuffle(&mut rng);

    let mut best = (f64::INFINITY, lambdas[0]);
    for &lambda in lambdas {
        let spec = RidgeSpec { kernel, lambda };
        let mut total_err = 0.0;
        let mut total_w = 0.0;
        for f in 0..folds {
            let (fit_ix, val_ix): (Vec<usize>, Vec<usize>) = {
                let mut fit = Vec::new();
                let mut val = Vec::new();
                for (pos, &i) in ix.iter().enumerate() {
                    if pos % folds == f {
                        val.push(i);
                    } else {
                        fit.push(i);
                    }
                }
                (fit, val)
            };
            let x_fit = train_x.select(&fit_ix, train_x.role())?;
            let y_fit: Vec<f64> = fit_ix.iter().map(|&i| train_y[i]).collect();
            let w_fit: Vec<f64> = fit_ix.iter().map(|&i| weights.values()[i]).collect();
            let Ok(w_fit) = ImportanceWeights::new(w_fit, weights.source()) else {
                // All-zero fold weights: skip this fold.
                continue;
            };
            let predictor = fit_weighted_ridge(&x_fit, &y_fit, &w_fit, &spec)?;
            for &i in &val_ix {
                let pred = predictor.predict(train_x.row(i))?;
                let werr = weights.values()[i] * (pred - train_y[i]) * (pred - train_y[i]);
                total_err += werr;
                total_w += weights.values()[i];
            }
        }
        let score = if total_w > 0.0 { total_err / total_w } else { f64::INFINITY };
        if score < best.0 {
            best = (score, lambda);
        }
    }
    Ok(best.1)
}

// ---------------------------------------------------------------------------
// Covariate-shift experiment
// ---------------------------------------------------------------------------

/// How to produce importance weights for the training samples.
#[derive(Debug, Clone)]
pub enum DreMethod {
    /// No importance weighting.
    Uniform,
    /// Oracle: the problem's analytic ratio.
    TrueRatio,
    /// MLP trained on the corrected (or plain, per config) risk.
    NnbrMlp {
        label: String,
        spec: LossSpec,
        widths: Vec<usize>,
        link: OutputLink,
        train: TrainConfig,
    },
    /// Closed-form kernel uLSIF; `lambda = None` selects by cross-validation.
    KernelUlsif { n_basis: usize, lambda: Option<f64> },
    /// Projected-gradient kernel KLIEP.
    KernelKliep { n_basis: usize, max_iter: usize, step: f64 },
}

impl DreMethod {
    pub fn label(&self) -> String {
        match self {
            DreMethod::Uniform => "uniform".into(),
            DreMethod::TrueRatio => "true_ratio".into(),
            DreMethod::NnbrMlp { label, .. } => label.clone(),
            DreMethod::KernelUlsif { .. } => "kernel_ulsif".into(),
            DreMethod::KernelKliep { .. } => "kernel_kliep".into(),
        }
    }
}

/// Ridge constant: fixed, or picked per run by weighted cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub enum RidgeLambda {
    Fixed(f64),
    CvGrid(Vec<f64>),
}

/// A regression-under-shift setup built on a synthetic covariate problem:
/// the test domain is the problem's numerator density, the train domain its
/// denominator density, and targets are y = sin(freq * x_1) + noise.
#[derive(Debug, Clone)]
pub struct CovShiftConfig {
    pub problem: SyntheticProblem,
    pub n_train: usize,
    pub n_test: usize,
    pub target_freq: f64,
    pub noise_sd: f64,
    pub ridge_kernel: RidgeKernel,
    pub ridge_lambda: RidgeLambda,
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct CovShiftRow {
    pub method: String,
    pub kernel: String,
    pub mean_pd: f64,
    pub sd_pd: f64,
    pub mean_mse: f64,
    pub sd_mse: f64,
    pub seeds: usize,
}

impl CovShiftRow {
    pub fn csv_header() -> &'static str {
        "method,kernel,mean_pd,sd_pd,mean_mse,sd_mse,seeds"
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            self.method,
            self.kernel,
            fmt_f64(self.mean_pd),
            fmt_f64(self.sd_pd),
            fmt_f64(self.mean_mse),
            fmt_f64(self.sd_mse),
            self.seeds
        );
        s
    }
}

fn target_values(
    xs: &SampleSet,
    freq: f64,
    noise_sd: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    use rand_distr::StandardNormal;
    xs.rows()
        .map(|row| (freq * row[0]).sin() + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Importance weights for the train covariates under the chosen method.
pub fn estimate_weights(
    method: &DreMethod,
    problem: &SyntheticProblem,
    train_x: &SampleSet,
    test_x: &SampleSet,
    seed: u64,
) -> Result<ImportanceWeights> {
    match method {
        DreMethod::Uniform => Ok(ImportanceWeights::uniform(train_x.len())),
        DreMethod::TrueRatio => {
            let w: Vec<f64> = train_x.rows().map(|x| problem.true_ratio(x)).collect();
            ImportanceWeights::new(w, "true_ratio")
        }
        DreMethod::NnbrMlp { label, spec, widths, link, train: cfg } => {
            // Numerator = test-domain covariates, denominator = train-domain.
            let nu = test_x.with_role(Role::Numerator);
            let de = train_x.with_role(Role::Denominator);
            let mut model = MlpRatioModel::new(widths, *link, seed)?;
            let mut cfg = *cfg;
            cfg.seed = cfg.seed ^ evalkit::splitmix64(seed);
            train(&mut model, spec, &nu, &de, &cfg, None)?;
            let mut w = model.forward_batch(train_x)?;
            if spec.family == LossFamily::PuLog {
                for v in &mut w {
                    *v /= spec.c;
                }
            }
            ImportanceWeights::new(w, label.clone())
        }
        DreMethod::KernelUlsif { n_basis, lambda } => {
            let nu = test_x.with_role(Role::Numerator);
            let de = train_x.with_role(Role::Denominator);
            let sigma = median_heuristic(&[&nu, &de])?;
            let b = (*n_basis).min(nu.len());
            let lam = match lambda {
                Some(l) => *l,
                None => baselines::ulsif_cv_lambda(
                    &nu,
                    &de,
                    sigma,
                    b,
                    &[1e-4, 1e-3, 1e-2, 1e-1, 1.0],
                    5,
                    seed,
                )?,
            };
            let model = baselines::fit_ulsif_kernel(&nu, &de, sigma, lam, b)?;
            let w = model.forward_batch(train_x)?;
            ImportanceWeights::new(w, "kernel_ulsif")
        }
        DreMethod::KernelKliep { n_basis, max_iter, step } => {
            let nu = test_x.with_role(Role::Numerator);
            let de = train_x.with_role(Role::Denominator);
            let sigma = median_heuristic(&[&nu, &de])?;
            let b = (*n_basis).min(nu.len());
            let fit = baselines::fit_kliep_kernel(&nu, &de, sigma, b, *max_iter, *step)?;
            let w = fit.model.forward_batch(train_x)?;
            ImportanceWeights::new(w, "kernel_kliep")
        }
    }
}

/// Run the shift experiment for one method over the given seeds and report
/// mean/SD of pairwise disagreement and test MSE.
///
/// Per seed: draw train covariates from the problem's denominator density and
/// test covariates from its numerator density, attach noisy targets, estimate
/// weights, fit weighted kernel ridge, and score predictions on the test set.
/// PD thresholds the test targets at their median into pseudo-labels.
pub fn covshift_experiment(
    config: &CovShiftConfig,
    method: &DreMethod,
    seeds: &[u64],
) -> Result<CovShiftRow> {
    if seeds.is_empty() {
        return Err(Error::Config("need at least one seed".into()));
    }
    let mut pds = Vec::with_capacity(seeds.len());
    let mut mses = Vec::with_capacity(seeds.len());

    for &seed in seeds {
        let mixed = evalkit::splitmix64(seed);
        let train_x = config.problem.sample(Role::Denominator, config.n_train, mixed);
        let test_x = config
            .problem
            .sample(Role::Numerator, config.n_test, mixed.wrapping_add(1));
        let mut rng = ChaCha8Rng::seed_from_u64(mixed.wrapping_add(2));
        let y_train = target_values(&train_x, config.target_freq, config.noise_sd, &mut rng);
        let y_test = target_values(&test_x, config.target_freq, config.noise_sd, &mut rng);

        let weights = estimate_weights(method, &config.problem, &train_x, &test_x, seed)?;
        let lambda = match &config.ridge_lambda {
            RidgeLambda::Fixed(l) => *l,
            RidgeLambda::CvGrid(grid) => select_ridge_lambda(
                &train_x,
                &y_train,
                &weights,
                config.ridge_kernel,
                grid,
                5,
                mixed.wrapping_add(3),
            )?,
        };
        let spec = RidgeSpec { kernel: config.ridge_kernel, lambda };
        let predictor = fit_weighted_ridge(&train_x, &y_train, &weights, &spec)?;
        let preds = predictor.predict_batch(&test_x)?;

        let mse = preds
            .iter()
            .zip(&y_test)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / preds.len() as f64;
        mses.push(mse);

        // Median split of the test targets into pseudo-labels.
        let mut sorted = y_test.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let labels: Vec<i8> = y_test.iter().map(|&y| if y > median { 1 } else { -1 }).collect();
        let sl = ScoredLabels::new(preds, labels)?;
        pds.push(evalkit::pd(&sl)?);
    }

    let (mean_pd, sd_pd) = mean_sd(&pds);
    let (mean_mse, sd_mse) = mean_sd(&mses);
    Ok(CovShiftRow {
        method: method.label(),
        kernel: config.ridge_kernel.name(),
        mean_pd,
        sd_pd,
        mean_mse,
        sd_mse,
        seeds: seeds.len(),
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_xy(seed: u64, n: usize) -> (SampleSet, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin() + 0.05 * x).collect();
        (SampleSet::new(xs, n, 1, Role::Denominator).unwrap(), ys)
    }

    #[test]
    fn uniform_weights_equal_unweighted_ridge() {
        let (xs, ys) = toy_xy(1, 40);
        let spec = RidgeSpec {
            kernel: RidgeKernel::Gaussian { sigma: 0.7 },
            lambda: 0.1,
        };
        let weighted =
            fit_weighted_ridge(&xs, &ys, &ImportanceWeights::uniform(40), &spec).unwrap();
        let plain = fit_ridge(&xs, &ys, &spec).unwrap();
        for x in [-1.5, -0.2, 0.0, 0.9, 1.8] {
            let a = weighted.predict(&[x]).unwrap();
            let b = plain.predict(&[x]).unwrap();
            assert!((a - b).abs() <= 1e-10, "at {x}: {a} vs {b}");
        }
    }

    #[test]
    fn single_active_weight_interpolates_that_sample() {
        let (xs, ys) = toy_xy(2, 10);
        let mut w = vec![0.0; 10];
        w[3] = 1.0;
        let weights = ImportanceWeights::new(w, "point").unwrap();
        let spec = RidgeSpec {
            kernel: RidgeKernel::Gaussian { sigma: 1.0 },
            lambda: 1e-10,
        };
        let predictor = fit_weighted_ridge(&xs, &ys, &weights, &spec).unwrap();
        let at = predictor.predict(xs.row(3)).unwrap();
        assert!((at - ys[3]).abs() < 1e-6, "{at} vs {}", ys[3]);
        // Zero-weight samples drop out of the dual solution.
        for (i, a) in predictor.alpha.iter().enumerate() {
            if i != 3 {
                assert!(a.abs() < 1e-9, "alpha[{i}] = {a}");
            }
        }
    }

    #[test]
    fn weight_invariants_are_enforced() {
        assert!(ImportanceWeights::new(vec![], "x").is_err());
        assert!(ImportanceWeights::new(vec![1.0, -0.1], "x").is_err());
        assert!(ImportanceWeights::new(vec![0.0, 0.0], "x").is_err());
        assert!(ImportanceWeights::new(vec![1.0, f64::NAN], "x").is_err());
        assert!(ImportanceWeights::new(vec![0.0, 2.0], "x").is_ok());
    }

    #[test]
    fn outlier_scores_rescale_pulog_without_reordering() {
        use crate::models::KernelLinearModel;
        let model =
            KernelLinearModel::new(vec![0.0, 1.0], 2, 1, 1.0, vec![0.3, 0.2], false).unwrap();
        let test = SampleSet::new(vec![-1.0, 0.0, 0.5, 2.0], 4, 1, Role::Denominator).unwrap();
        let spec_pu = LossSpec::new(LossFamily::PuLog, 0.5).unwrap();
        let spec_lsif = LossSpec::new(LossFamily::Lsif, 0.5).unwrap();

        let plain = outlier_scores(&model, &spec_lsif, &test).unwrap();
        let scaled = outlier_scores(&model, &spec_pu, &test).unwrap();
        for (p, s) in plain.iter().zip(&scaled) {
            assert!((s - p / 0.5).abs() < 1e-15);
        }
        // Ranking unchanged by the monotone rescale.
        let order = |v: &[f64]| {
            let mut ix: Vec<usize> = (0..v.len()).collect();
            ix.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
            ix
        };
        assert_eq!(order(&plain), order(&scaled));
    }

    #[test]
    fn constant_scores_give_half_auroc() {
        let scores = vec![1.0; 10];
        let labels: Vec<i8> = (0..10).map(|i| if i < 4 { 1 } else { -1 }).collect();
        let sl = ScoredLabels::new(scores, labels).unwrap();
        assert_eq!(evalkit::auroc(&sl).unwrap(), 0.5);
    }

    #[test]
    fn covshift_row_is_deterministic() {
        let problem = SyntheticProblem::gauss_shift(1, 0.5, vec![1.0], 0).unwrap();
        let config = CovShiftConfig {
            problem,
            n_train: 60,
            n_test: 60,
            target_freq: 2.0,
            noise_sd: 0.1,
            ridge_kernel: RidgeKernel::Gaussian { sigma: 1.0 },
            ridge_lambda: RidgeLambda::Fixed(0.1),
        };
        let seeds = [1, 2, 3];
        let a = covshift_experiment(&config, &DreMethod::TrueRatio, &seeds).unwrap();
        let b = covshift_experiment(&config, &DreMethod::TrueRatio, &seeds).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seeds, 3);
    }

    #[test]
    fn true_ratio_weighting_beats_uniform_on_shifted_data() {
        // Moderate shift, enough samples for the effect to be stable.
        let problem = SyntheticProblem::gauss_shift(1, 0.5, vec![2.0], 0).unwrap();
        let config = CovShiftConfig {
            problem,
            n_train: 200,
            n_test: 200,
            target_freq: 2.0,
            noise_sd: 0.1,
            ridge_kernel: RidgeKernel::Gaussian { sigma: 1.0 },
            ridge_lambda: RidgeLambda::Fixed(0.01),
        };
        let seeds: Vec<u64> = (1..=10).collect();
        let oracle = covshift_experiment(&config, &DreMethod::TrueRatio, &seeds).unwrap();
        let uniform = covshift_experiment(&config, &DreMethod::Uniform, &seeds).unwrap();
        assert!(
            oracle.mean_mse < uniform.mean_mse,
            "oracle {} vs uniform {}",
            oracle.mean_mse,
            uniform.mean_mse
        );
    }

    #[test]
    fn weighted_train_loss_estimates_test_loss() {
        // With w = r* the weighted train-domain average of any fixed
        // function equals its test-domain expectation; check within 3 SE.
        let problem = SyntheticProblem::gauss_shift(1, 0.5, vec![2.0], 0).unwrap();
        let n = 10_000;
        let train = problem.sample(Role::Denominator, n, 100);
        let test = problem.sample(Role::Numerator, n, 101);
        let loss = |x: &[f64]| (x[0] - 0.5).powi(2).min(4.0);

        let weighted: Vec<f64> = train
            .rows()
            .map(|x| problem.true_ratio(x) * loss(x))
            .collect();
        let direct: Vec<f64> = test.rows().map(loss).collect();
        let (wm, wse) = {
            let m = weighted.iter().sum::<f64>() / n as f64;
            let v = weighted.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
            (m, (v / n as f64).sqrt())
        };
        let (dm, dse) = {
            let m = direct.iter().sum::<f64>() / n as f64;
            let v = direct.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
            (m, (v / n as f64).sqrt())
        };
        let tol = 3.0 * (wse * wse + dse * dse).sqrt();
        assert!((wm - dm).abs() <= tol, "weighted {wm} vs direct {dm} (tol {tol})");
    }
}
