//! Synthetic problems with analytic density ratios, plus evaluation metrics.
//!
//! The problems are chosen so that r*(x) = p_nu(x)/p_de(x) has a closed form
//! and a finite, known supremum, which makes every estimator testable against
//! ground truth:
//!
//! - `gauss_shift`: p_nu = N(0, I), p_de = (1-pi) N(0, I) + pi N(m, I).
//!   Then r*(x) = 1 / ((1-pi) + pi exp(x.m - |m|^2/2)) and sup r* = 1/(1-pi).
//! - `gauss_scale`: p_nu = N(0, s_nu^2 I), p_de = N(0, s_de^2 I) with
//!   s_nu <= s_de so the ratio stays bounded; sup r* = (s_de/s_nu)^d at 0.
//!
//! Metrics: AUROC by midrank Mann-Whitney (with an O(n^2) reference
//! implementation for oracle tests), PD = 1 - AUROC, the normalization
//! diagnostic E_de[r_hat] (close to 1 for a good estimate since
//! int p_de r* = 1), and the Monte-Carlo L2(p_de) error against r*.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use crate::data::Role;
use crate::data::SampleSet;
use crate::models::RatioModel;
use crate::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453; // ln(2 pi)

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    /// p_nu = N(0, I); p_de = (1 - pi) N(0, I) + pi N(shift, I).
    GaussShift { pi: f64, shift: Vec<f64> },
    /// p_nu = N(0, sigma_nu^2 I); p_de = N(0, sigma_de^2 I), sigma_nu <= sigma_de.
    GaussScale { sigma_nu: f64, sigma_de: f64 },
}

/// A sampling problem whose true ratio and its supremum are known exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem {
    kind: ProblemKind,
    dim: usize,
    seed: u64,
}

impl SyntheticProblem {
    pub fn gauss_shift(dim: usize, pi: f64, shift: Vec<f64>, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::Config(format!("mixture weight must lie in (0, 1), got {pi}")));
        }
        if shift.len() != dim {
            return Err(Error::Config(format!(
                "shift vector has length {}, dimension is {dim}",
                shift.len()
            )));
        }
        if shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("shift vector must be finite".into()));
        }
        Ok(Self {
            kind: ProblemKind::GaussShift { pi, shift },
            dim,
            seed,
        })
    }

    /// Rejects configurations with an unbounded ratio (sigma_nu > sigma_de).
    pub fn gauss_scale(dim: usize, sigma_nu: f64, sigma_de: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(sigma_nu > 0.0) || !(sigma_de > 0.0) {
            return Err(Error::Config("scales must be positive".into()));
        }
        if sigma_nu > sigma_de {
            return Err(Error::Config(format!(
                "sigma_nu = {sigma_nu} > sigma_de = {sigma_de} makes the ratio unbounded"
            )));
        }
        Ok(Self {
            kind: ProblemKind::GaussScale { sigma_nu, sigma_de },
            dim,
            seed,
        })
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Closed-form r*(x).
    pub fn true_ratio(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            ProblemKind::GaussShift { pi, shift } => {
                let dot: f64 = x.iter().zip(shift).map(|(a, b)| a * b).sum();
                let m2: f64 = shift.iter().map(|v| v * v).sum();
                1.0 / ((1.0 - pi) + pi * (dot - 0.5 * m2).exp())
            }
            ProblemKind::GaussScale { sigma_nu, sigma_de } => {
                let x2: f64 = x.iter().map(|v| v * v).sum();
                let d = self.dim as f64;
                let log_r = d * (sigma_de / sigma_nu).ln()
                    - 0.5 * x2 * (1.0 / (sigma_nu * sigma_nu) - 1.0 / (sigma_de * sigma_de));
                log_r.exp()
            }
        }
    }

    /// sup_x r*(x), in closed form.
    pub fn sup_ratio(&self) -> f64 {
        match &self.kind {
            ProblemKind::GaussShift { pi, .. } => 1.0 / (1.0 - pi),
            ProblemKind::GaussScale { sigma_nu, sigma_de } => {
                (sigma_de / sigma_nu).powi(self.dim as i32)
            }
        }
    }

    pub fn log_density_nu(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ProblemKind::GaussShift { .. } => log_normal(x, None, 1.0),
            ProblemKind::GaussScale { sigma_nu, .. } => log_normal(x, None, *sigma_nu),
        }
    }

    pub fn density_nu(&self, x: &[f64]) -> f64 {
        self.log_density_nu(x).exp()
    }

    pub fn density_de(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ProblemKind::GaussShift { pi, shift } => {
                (1.0 - pi) * log_normal(x, None, 1.0).exp()
                    + pi * log_normal(x, Some(shift), 1.0).exp()
            }
            ProblemKind::GaussScale { sigma_de, .. } => log_normal(x, None, *sigma_de).exp(),
        }
    }

    /// i.i.d. draws from the requested density; deterministic per
    /// (problem seed, role, seed).
    pub fn sample(&self, role: Role, n: usize, seed: u64) -> SampleSet {
        assert!(n >= 1, "need at least one sample");
        let tag = match role {
            Role::Numerator => 0x6e75,
            Role::Denominator => 0x6465,
        };
        let mixed = splitmix64(splitmix64(self.seed ^ tag) ^ seed);
        let mut rng = ChaCha8Rng::seed_from_u64(mixed);
        let mut data = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            match (&self.kind, role) {
                (ProblemKind::GaussShift { .. }, Role::Numerator) => {
                    for _ in 0..self.dim {
                        data.push(rng.sample::<f64, _>(StandardNormal));
                    }
                }
                (ProblemKind::GaussShift { pi, shift }, Role::Denominator) => {
                    let shifted = rng.random::<f64>() < *pi;
                    for k in 0..self.dim {
                        let z: f64 = rng.sample(StandardNormal);
                        data.push(if shifted { z + shift[k] } else { z });
                    }
                }
                (ProblemKind::GaussScale { sigma_nu, .. }, Role::Numerator) => {
                    for _ in 0..self.dim {
                        data.push(sigma_nu * rng.sample::<f64, _>(StandardNormal));
                    }
                }
                (ProblemKind::GaussScale { sigma_de, .. }, Role::Denominator) => {
                    for _ in 0..self.dim {
                        data.push(sigma_de * rng.sample::<f64, _>(StandardNormal));
                    }
                }
            }
        }
        SampleSet::new(data, n, self.dim, role).expect("generated samples are valid")
    }

    /// Per-axis bounding interval covering both densities' effective support,
    /// ten standard deviations past every component mean.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            ProblemKind::GaussShift { shift, .. } => (0..self.dim)
                .map(|k| {
                    let m = shift[k];
                    (m.min(0.0) - 10.0, m.max(0.0) + 10.0)
                })
                .collect(),
            ProblemKind::GaussScale { sigma_de, .. } => {
                let half = 10.0 * sigma_de;
                (0..self.dim).map(|_| (-half, half)).collect()
            }
        }
    }
}

fn log_normal(x: &[f64], mean: Option<&[f64]>, sigma: f64) -> f64 {
    let d = x.len() as f64;
    let sq: f64 = match mean {
        None => x.iter().map(|v| v * v).sum(),
        Some(m) => x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum(),
    };
    -0.5 * sq / (sigma * sigma) - d * sigma.ln() - 0.5 * d * LN_2PI
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// The analytic ratio r* wrapped as a model; the oracle every estimator is
/// measured against.
#[derive(Debug, Clone)]
pub struct TrueRatioModel {
    problem: SyntheticProblem,
}

impl TrueRatioModel {
    pub fn new(problem: SyntheticProblem) -> Self {
        Self { problem }
    }

    pub fn problem(&self) -> &SyntheticProblem {
        &self.problem
    }
}

impl RatioModel for TrueRatioModel {
    fn input_dim(&self) -> usize {
        self.problem.dim()
    }

    fn output_range(&self) -> (f64, f64) {
        (0.0, self.problem.sup_ratio())
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.problem.dim() {
            return Err(Error::Shape(format!(
                "input has length {}, problem has d = {}",
                x.len(),
                self.problem.dim()
            )));
        }
        Ok(self.problem.true_ratio(x))
    }
}

// ---------------------------------------------------------------------------
// Ranking metrics
// ---------------------------------------------------------------------------

/// Scores with binary labels (+1 positive, -1 negative).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<i8>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} scores vs {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::Label(format!("labels must be +1 or -1, got {bad}")));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::Label("scores contain NaN".into()));
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }
}

/// Area under the ROC curve via the rank formulation of the Mann-Whitney
/// statistic: ties get midranks, so a tied positive-negative pair counts 1/2.
/// O(n log n).
pub fn auroc(sl: &ScoredLabels) -> Result<f64> {
    let n = sl.scores.len();
    let n_pos = sl.labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Label(format!(
            "AUROC needs both classes: {n_pos} positive, {n_neg} negative"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sl.scores[a].partial_cmp(&sl.scores[b]).unwrap());

    // Midranks over groups of exactly equal scores (1-indexed ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && sl.scores[order[j]] == sl.scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if sl.labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }

    let np = n_pos as f64;
    let nn = n_neg as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Ok(u / (np * nn))
}

/// O(n^2) pairwise reference: mean over positive-negative pairs of
/// 1 [s_p > s_n] + 1/2 [s_p = s_n]. Exists to cross-check [`auroc`].
pub fn auroc_brute_force(sl: &ScoredLabels) -> Result<f64> {
    let pos: Vec<f64> = sl
        .scores
        .iter()
        .zip(&sl.labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = sl
        .scores
        .iter()
        .zip(&sl.labels)
        .filter(|(_, &l)| l == -1)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Label("AUROC needs both classes".into()));
    }
    let mut total = 0.0;
    for &p in &pos {
        for &q in &neg {
            if p > q {
                total += 1.0;
            } else if p == q {
                total += 0.5;
            }
        }
    }
    Ok(total / (pos.len() as f64 * neg.len() as f64))
}

/// Pairwise disagreement, 1 - AUROC.
pub fn pd(sl: &ScoredLabels) -> Result<f64> {
    Ok(1.0 - auroc(sl)?)
}

/// E_de[r_hat] on held-out denominator samples; close to 1 when the ratio is
/// estimated well, since int p_de r* = 1.
pub fn normalization_diag(model: &dyn RatioModel, de_holdout: &SampleSet) -> Result<f64> {
    de_holdout.expect_role(Role::Denominator)?;
    let values = model.forward_batch(de_holdout)?;
    Ok(crate::risk::pairwise_sum(&values) / values.len() as f64)
}

/// Monte-Carlo estimate of ||r_hat - r*||^2 over p_de, with its standard error.
pub fn l2_error(
    model: &dyn RatioModel,
    problem: &SyntheticProblem,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    assert!(n_mc >= 2);
    let draws = problem.sample(Role::Denominator, n_mc, seed);
    let r_hat = model.forward_batch(&draws)?;
    let sq: Vec<f64> = draws
        .rows()
        .zip(&r_hat)
        .map(|(x, &rh)| {
            let diff = rh - problem.true_ratio(x);
            diff * diff
        })
        .collect();
    let n = n_mc as f64;
    let mean = crate::risk::pairwise_sum(&sq) / n;
    let var = sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// L2 error of a fixed score vector already evaluated on denominator draws.
pub fn l2_error_of_scores(
    scores: &[f64],
    draws: &SampleSet,
    problem: &SyntheticProblem,
) -> (f64, f64) {
    let sq: Vec<f64> = draws
        .rows()
        .zip(scores)
        .map(|(x, &rh)| {
            let diff = rh - problem.true_ratio(x);
            diff * diff
        })
        .collect();
    let n = sq.len() as f64;
    let mean = crate::risk::pairwise_sum(&sq) / n;
    let var = sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift_1d() -> SyntheticProblem {
        SyntheticProblem::gauss_shift(1, 0.5, vec![2.0], 0).unwrap()
    }

    #[test]
    fn true_ratio_closed_form() {
        let p = shift_1d();
        // Independently evaluated Gaussian mixture ratio at the origin.
        assert!((p.true_ratio(&[0.0]) - 1.7615941559557646).abs() < 1e-14);
        assert!((p.sup_ratio() - 2.0).abs() < 1e-15);

        let flat = SyntheticProblem::gauss_shift(1, 0.5, vec![0.0], 0).unwrap();
        for x in [-3.0, 0.0, 1.7] {
            assert!((flat.true_ratio(&[x]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_scale_rejects_unbounded() {
        assert!(SyntheticProblem::gauss_scale(2, 2.0, 1.0, 0).is_err());
        let p = SyntheticProblem::gauss_scale(2, 1.0, 2.0, 0).unwrap();
        assert!((p.sup_ratio() - 4.0).abs() < 1e-15);
        assert!((p.true_ratio(&[0.0, 0.0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_density_quotient() {
        let p = shift_1d();
        for x in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let direct = p.density_nu(&[x]) / p.density_de(&[x]);
            assert!((p.true_ratio(&[x]) - direct).abs() < 1e-12, "at {x}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = shift_1d();
        let a = p.sample(Role::Denominator, 64, 7);
        let b = p.sample(Role::Denominator, 64, 7);
        assert_eq!(a.as_slice(), b.as_slice());
        let c = p.sample(Role::Denominator, 64, 8);
        assert_ne!(a.as_slice(), c.as_slice());
        assert_eq!(a.role(), Role::Denominator);
    }

    #[test]
    fn sample_moments_match() {
        let p = shift_1d();
        let nu = p.sample(Role::Numerator, 1_000_000, 42);
        let mean_nu: f64 = nu.as_slice().iter().sum::<f64>() / nu.len() as f64;
        assert!(mean_nu.abs() < 5e-3, "numerator mean {mean_nu}");

        // Mixture mean is pi * m = 1.0.
        let de = p.sample(Role::Denominator, 1_000_000, 43);
        let mean_de: f64 = de.as_slice().iter().sum::<f64>() / de.len() as f64;
        assert!((mean_de - 1.0).abs() < 0.01, "denominator mean {mean_de}");
    }

    #[test]
    fn sampled_ratio_never_exceeds_supremum() {
        let p = shift_1d();
        let sup = p.sup_ratio();
        for role in [Role::Numerator, Role::Denominator] {
            let xs = p.sample(role, 1_000_000, 3);
            for row in xs.rows() {
                let r = p.true_ratio(row);
                assert!(r <= sup, "r*({row:?}) = {r} > {sup}");
            }
        }
    }

    #[test]
    fn auroc_pinned_cases() {
        let perfect =
            ScoredLabels::new(vec![0.9, 0.8, 0.1, 0.7], vec![1, 1, -1, -1]).unwrap();
        assert_eq!(auroc(&perfect).unwrap(), 1.0);

        let tie = ScoredLabels::new(vec![0.5, 0.5], vec![1, -1]).unwrap();
        assert_eq!(auroc(&tie).unwrap(), 0.5);

        let single_class = ScoredLabels::new(vec![0.5, 0.6], vec![1, 1]).unwrap();
        assert!(auroc(&single_class).is_err());
    }

    #[test]
    fn auroc_matches_brute_force_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let n = 200;
            // Coarse grid scores force plenty of exact ties.
            let scores: Vec<f64> =
                (0..n).map(|_| (rng.random_range(0..20) as f64) / 10.0).collect();
            let labels: Vec<i8> =
                (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let Ok(sl) = ScoredLabels::new(scores, labels) else { continue };
            let (Ok(fast), Ok(slow)) = (auroc(&sl), auroc_brute_force(&sl)) else {
                continue;
            };
            assert!((fast - slow).abs() <= 1e-12, "trial {trial}: {fast} vs {slow}");
        }
    }

    #[test]
    fn auroc_invariant_under_monotone_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scores: Vec<f64> = (0..500).map(|_| rng.random_range(-3.0..3.0)).collect();
        let labels: Vec<i8> =
            (0..500).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let base = auroc(&ScoredLabels::new(scores.clone(), labels.clone()).unwrap()).unwrap();

        let exp_scores: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let affine: Vec<f64> = scores.iter().map(|s| 2.5 * s + 7.0).collect();
        for transformed in [exp_scores, affine] {
            let t = auroc(&ScoredLabels::new(transformed, labels.clone()).unwrap()).unwrap();
            assert!((t - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn pd_complements_auroc() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let scores: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<i8> =
            (0..300).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let sl = ScoredLabels::new(scores, labels).unwrap();
        assert!((pd(&sl).unwrap() + auroc(&sl).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_diag_of_true_ratio_is_one() {
        let p = shift_1d();
        struct Oracle(SyntheticProblem);
        impl RatioModel for Oracle {
            fn input_dim(&self) -> usize {
                self.0.dim()
            }
            fn output_range(&self) -> (f64, f64) {
                (0.0, self.0.sup_ratio())
            }
            fn forward(&self, x: &[f64]) -> crate::Result<f64> {
                Ok(self.0.true_ratio(x))
            }
        }
        let oracle = Oracle(p.clone());
        let holdout = p.sample(Role::Denominator, 100_000, 91);
        let diag = normalization_diag(&oracle, &holdout).unwrap();
        assert!((diag - 1.0).abs() < 0.02, "diag = {diag}");

        // And the role check fires on swapped roles.
        let wrong = p.sample(Role::Numerator, 10, 91);
        assert!(normalization_diag(&oracle, &wrong).is_err());
    }

    #[test]
    fn l2_error_of_constant_one() {
        // Quadrature reference for E_de[(r* - 1)^2] on the pi=0.5, m=2, d=1
        // problem, computed with an independent 4096-node rule.
        const REFERENCE: f64 = 0.5504004907935067;
        let p = shift_1d();
        struct One;
        impl RatioModel for One {
            fn input_dim(&self) -> usize {
                1
            }
            fn output_range(&self) -> (f64, f64) {
                (0.0, f64::INFINITY)
            }
            fn forward(&self, _x: &[f64]) -> crate::Result<f64> {
                Ok(1.0)
            }
        }
        let (est, se) = l2_error(&One, &p, 200_000, 17).unwrap();
        assert!((est - REFERENCE).abs() <= 3.0 * se, "est {est}, se {se}");

        // Exact-zero case: the model IS r*.
        struct Oracle(SyntheticProblem);
        impl RatioModel for Oracle {
            fn input_dim(&self) -> usize {
                1
            }
            fn output_range(&self) -> (f64, f64) {
                (0.0, f64::INFINITY)
            }
            fn forward(&self, x: &[f64]) -> crate::Result<f64> {
                Ok(self.0.true_ratio(x))
            }
        }
        let (zero, _) = l2_error(&Oracle(p.clone()), &p, 1000, 3).unwrap();
        assert_eq!(zero, 0.0);

        // No-shift problem: r* is identically 1, so the constant model is exact.
        let flat = SyntheticProblem::gauss_shift(1, 0.5, vec![0.0], 0).unwrap();
        let (flat_err, _) = l2_error(&One, &flat, 1000, 3).unwrap();
        assert_eq!(flat_err, 0.0);
    }
}
