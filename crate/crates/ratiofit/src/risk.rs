//! Empirical and population risks for ratio matching, with the non-negative
//! correction.
//!
//! The (shifted) empirical risk of a model r on numerator/denominator samples
//! is
//!
//! ```text
//! BR_hat(r) = E_nu[l2(r)] + E_de[l1(r)] - C * E_nu[l1(r)]
//! ```
//!
//! where the hats denote sample averages. The aggregate
//! `E_de[l1] - C E_nu[l1]` is non-negative in population whenever
//! C < 1/sup r*, but its empirical version can be driven to -inf by a
//! flexible model; the corrected risk clips it:
//!
//! ```text
//! nnBR_hat(r) = E_nu[l2(r)] + g( E_de[l1(r)] - C * E_nu[l1(r)] )
//! ```
//!
//! with g a consistent correction function (Lipschitz, non-negative, identity
//! on [0, inf)); the canonical choice is relu. When the clip is active, the
//! training step flips to gradient ascent on the clipped aggregate alone,
//! steering the model back into the region where the plain risk is trusted.
//!
//! Population risks are computed against the synthetic problems by
//! Gauss-Legendre quadrature (1-D/2-D) or Monte Carlo (higher dimensions),
//! using the exact convex generator f rather than the shifted l1/l2 forms.

use crate::bregman::{LossFamily, LossSpec};
use crate::data::{Role, SampleSet};
use crate::evalkit::SyntheticProblem;
use crate::models::RatioModel;
use crate::quad::GaussLegendre;
use crate::{Error, Result};

/// Consistent correction function: non-negative, Lipschitz, identity on
/// [0, inf). `Identity` disables the correction (plain empirical risk).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrectionFn {
    #[default]
    Relu,
    Identity,
}

impl CorrectionFn {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            CorrectionFn::Relu => x.max(0.0),
            CorrectionFn::Identity => x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CorrectionFn::Relu => "relu",
            CorrectionFn::Identity => "identity",
        }
    }
}

impl std::str::FromStr for CorrectionFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(CorrectionFn::Relu),
            "identity" | "none" => Ok(CorrectionFn::Identity),
            other => Err(Error::Parse(format!("unknown correction {other:?}"))),
        }
    }
}

/// The corrected risk split into its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskBreakdown {
    /// E_nu[l2(r)].
    pub term_nu_l2: f64,
    /// E_de[l1(r)] - C * E_nu[l1(r)], before correction.
    pub term_clip_raw: f64,
    /// correction(term_clip_raw).
    pub term_clip_corrected: f64,
    /// term_nu_l2 + term_clip_corrected.
    pub total: f64,
}

/// Deterministic pairwise summation; more accurate than left-to-right and a
/// fixed reduction order regardless of how the terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

fn mean_of(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

fn map_loss(spec: &LossSpec, values: &[f64], f: impl Fn(&LossSpec, f64) -> Result<f64>) -> Result<Vec<f64>> {
    values.iter().map(|&t| f(spec, t)).collect()
}

/// Plain empirical risk from pre-evaluated model outputs.
pub fn empirical_br_from_values(spec: &LossSpec, r_nu: &[f64], r_de: &[f64]) -> Result<f64> {
    Ok(empirical_nnbr_from_values(spec, r_nu, r_de, CorrectionFn::Identity)?.total)
}

/// Corrected empirical risk from pre-evaluated model outputs.
pub fn empirical_nnbr_from_values(
    spec: &LossSpec,
    r_nu: &[f64],
    r_de: &[f64],
    corr: CorrectionFn,
) -> Result<RiskBreakdown> {
    if r_nu.is_empty() || r_de.is_empty() {
        return Err(Error::Shape("risk needs at least one sample per role".into()));
    }
    let l1_nu = map_loss(spec, r_nu, |s, t| s.l1(t))?;
    let l1_de = map_loss(spec, r_de, |s, t| s.l1(t))?;
    let l2_nu = map_loss(spec, r_nu, |s, t| s.l2(t))?;

    let term_nu_l2 = mean_of(&l2_nu);
    let term_clip_raw = mean_of(&l1_de) - spec.c * mean_of(&l1_nu);
    let term_clip_corrected = corr.apply(term_clip_raw);
    Ok(RiskBreakdown {
        term_nu_l2,
        term_clip_raw,
        term_clip_corrected,
        total: term_nu_l2 + term_clip_corrected,
    })
}

fn batch_outputs(
    model: &dyn RatioModel,
    nu: &SampleSet,
    de: &SampleSet,
) -> Result<(Vec<f64>, Vec<f64>)> {
    nu.expect_role(Role::Numerator)?;
    de.expect_role(Role::Denominator)?;
    Ok((model.forward_batch(nu)?, model.forward_batch(de)?))
}

/// Sample analogue of the shifted population risk (no correction).
pub fn empirical_br(
    spec: &LossSpec,
    model: &dyn RatioModel,
    nu: &SampleSet,
    de: &SampleSet,
) -> Result<f64> {
    let (r_nu, r_de) = batch_outputs(model, nu, de)?;
    empirical_br_from_values(spec, &r_nu, &r_de)
}

/// Empirical risk with the non-negative correction applied to the whole-batch
/// aggregate (one scalar clip per batch, not per sample).
pub fn empirical_nnbr(
    spec: &LossSpec,
    model: &dyn RatioModel,
    nu: &SampleSet,
    de: &SampleSet,
    corr: CorrectionFn,
) -> Result<RiskBreakdown> {
    let (r_nu, r_de) = batch_outputs(model, nu, de)?;
    empirical_nnbr_from_values(spec, &r_nu, &r_de, corr)
}

/// Which objective the next parameter step descends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Clip inactive: descend the full corrected risk.
    Descent,
    /// Clip active: descend the negated clip aggregate (gradient ascent on
    /// the aggregate itself), dropping the l2 term.
    Ascent,
}

/// Per-sample derivative of the active objective with respect to the model
/// outputs, ready for backpropagation.
#[derive(Debug, Clone)]
pub struct GradientSignal {
    pub upstream_nu: Vec<f64>,
    pub upstream_de: Vec<f64>,
    pub branch: Branch,
    pub breakdown: RiskBreakdown,
}

/// Gradient signal for the corrected risk with relu-style branching.
///
/// Descent branch (clip term >= 0): d total / d r(x_i) for the full objective
/// `E_nu[l2] + E_de[l1] - C E_nu[l1]`. Ascent branch (clip term < 0):
/// derivative of `-(E_de[l1] - C E_nu[l1])`; the l2 term is dropped.
pub fn nnbr_gradient_signal(
    spec: &LossSpec,
    model: &dyn RatioModel,
    nu: &SampleSet,
    de: &SampleSet,
    corr: CorrectionFn,
) -> Result<GradientSignal> {
    let (r_nu, r_de) = batch_outputs(model, nu, de)?;
    nnbr_gradient_signal_from_values(spec, &r_nu, &r_de, corr)
}

pub fn nnbr_gradient_signal_from_values(
    spec: &LossSpec,
    r_nu: &[f64],
    r_de: &[f64],
    corr: CorrectionFn,
) -> Result<GradientSignal> {
    let breakdown = empirical_nnbr_from_values(spec, r_nu, r_de, corr)?;
    let n_nu = r_nu.len() as f64;
    let n_de = r_de.len() as f64;

    let ascent = corr == CorrectionFn::Relu && breakdown.term_clip_raw < 0.0;
    let branch = if ascent { Branch::Ascent } else { Branch::Descent };

    let mut upstream_nu = Vec::with_capacity(r_nu.len());
    for &t in r_nu {
        let d_l1 = spec.l1_deriv(t)?;
        let v = if ascent {
            spec.c * d_l1 / n_nu
        } else {
            (spec.l2_deriv(t)? - spec.c * d_l1) / n_nu
        };
        upstream_nu.push(v);
    }
    let mut upstream_de = Vec::with_capacity(r_de.len());
    for &t in r_de {
        let d_l1 = spec.l1_deriv(t)?;
        upstream_de.push(if ascent { -d_l1 / n_de } else { d_l1 / n_de });
    }

    Ok(GradientSignal {
        upstream_nu,
        upstream_de,
        branch,
        breakdown,
    })
}

// ---------------------------------------------------------------------------
// Population risks against synthetic problems
// ---------------------------------------------------------------------------

/// How to integrate over a synthetic problem's support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integration {
    /// Tensor-grid Gauss-Legendre. Supported for 1-D and 2-D problems.
    Quadrature { nodes_per_axis: usize },
    /// Monte Carlo with the given draw count; reports a standard error.
    MonteCarlo { n: usize, seed: u64 },
}

impl Integration {
    /// 2048 nodes for 1-D, 256 per axis for 2-D, a million draws above.
    pub fn default_for(problem: &SyntheticProblem) -> Self {
        match problem.dim() {
            1 => Integration::Quadrature { nodes_per_axis: 2048 },
            2 => Integration::Quadrature { nodes_per_axis: 256 },
            _ => Integration::MonteCarlo { n: 1_000_000, seed: 0 },
        }
    }
}

/// An integral estimate; `std_error` is set for Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

fn require_exact_f(spec: &LossSpec) -> Result<()> {
    if spec.family == LossFamily::PuLog {
        return Err(Error::UnsupportedFamily(
            "pulog has no exact-f population risk; its tabulated generator does not \
             match the empirical objective"
                .into(),
        ));
    }
    Ok(())
}

/// Integrate `g(x)` over the problem's bounding box (1-D/2-D grid) with the
/// given rule, or average draws from the chosen role for Monte Carlo.
fn integrate_grid(
    problem: &SyntheticProblem,
    nodes_per_axis: usize,
    mut g: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let boxes = problem.bounding_box();
    let rule = GaussLegendre::new(nodes_per_axis);
    match problem.dim() {
        1 => {
            let (a, b) = boxes[0];
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut terms = Vec::with_capacity(nodes_per_axis);
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                terms.push(w * g(&[mid + half * x])?);
            }
            Ok(pairwise_sum(&terms) * half)
        }
        2 => {
            let (a0, b0) = boxes[0];
            let (a1, b1) = boxes[1];
            let half0 = 0.5 * (b0 - a0);
            let mid0 = 0.5 * (a0 + b0);
            let half1 = 0.5 * (b1 - a1);
            let mid1 = 0.5 * (a1 + b1);
            let mut terms = Vec::with_capacity(nodes_per_axis * nodes_per_axis);
            for (&x0, &w0) in rule.nodes.iter().zip(&rule.weights) {
                for (&x1, &w1) in rule.nodes.iter().zip(&rule.weights) {
                    terms.push(w0 * w1 * g(&[mid0 + half0 * x0, mid1 + half1 * x1])?);
                }
            }
            Ok(pairwise_sum(&terms) * half0 * half1)
        }
        d => Err(Error::Quadrature(format!(
            "tensor-grid quadrature supports d <= 2, problem has d = {d}; use Monte Carlo"
        ))),
    }
}

fn mc_mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Population risk `E_de[f'(r)r - f(r)] - E_nu[f'(r)]` with the exact convex
/// generator f (the shifted form whose minimizer is r*).
pub fn population_br_exact(
    spec: &LossSpec,
    model: &dyn RatioModel,
    problem: &SyntheticProblem,
    method: Integration,
) -> Result<PopulationEstimate> {
    require_exact_f(spec)?;
    if model.input_dim() != problem.dim() {
        return Err(Error::Shape(format!(
            "model expects d = {}, problem has d = {}",
            model.input_dim(),
            problem.dim()
        )));
    }
    match method {
        Integration::Quadrature { nodes_per_axis } => {
            let value = integrate_grid(problem, nodes_per_axis, |x| {
                let r = model.forward(x)?;
                let fv = spec.f_value(r)?;
                let fd = spec.f_deriv(r)?;
                Ok(problem.density_de(x) * (fd * r - fv) - problem.density_nu(x) * fd)
            })?;
            Ok(PopulationEstimate { value, std_error: None })
        }
        Integration::MonteCarlo { n, seed } => {
            let de = problem.sample(Role::Denominator, n, seed);
            let nu = problem.sample(Role::Numerator, n, seed.wrapping_add(1));
            let mut de_terms = Vec::with_capacity(n);
            for x in de.rows() {
                let r = model.forward(x)?;
                de_terms.push(spec.f_deriv(r)? * r - spec.f_value(r)?);
            }
            let mut nu_terms = Vec::with_capacity(n);
            for x in nu.rows() {
                let r = model.forward(x)?;
                nu_terms.push(spec.f_deriv(r)?);
            }
            let (m_de, se_de) = mc_mean_se(&de_terms);
            let (m_nu, se_nu) = mc_mean_se(&nu_terms);
            Ok(PopulationEstimate {
                value: m_de - m_nu,
                std_error: Some((se_de * se_de + se_nu * se_nu).sqrt()),
            })
        }
    }
}

/// Pointwise-divergence form of the population risk:
/// `int p_de (f(r*) - f(r) - f'(r)(r* - r))`. Equals
/// `population_br_exact(r) - population_br_exact(r*)` and is zero at r = r*.
pub fn population_divergence_to_truth(
    spec: &LossSpec,
    model: &dyn RatioModel,
    problem: &SyntheticProblem,
    method: Integration,
) -> Result<PopulationEstimate> {
    require_exact_f(spec)?;
    let pointwise = |x: &[f64]| -> Result<f64> {
        let r = model.forward(x)?;
        let rs = problem.true_ratio(x);
        Ok(spec.f_value(rs)? - spec.f_value(r)? - spec.f_deriv(r)? * (rs - r))
    };
    match method {
        Integration::Quadrature { nodes_per_axis } => {
            let value = integrate_grid(problem, nodes_per_axis, |x| {
                Ok(problem.density_de(x) * pointwise(x)?)
            })?;
            Ok(PopulationEstimate { value, std_error: None })
        }
        Integration::MonteCarlo { n, seed } => {
            let de = problem.sample(Role::Denominator, n, seed);
            let mut terms = Vec::with_capacity(n);
            for x in de.rows() {
                terms.push(pointwise(x)?);
            }
            let (mean, se) = mc_mean_se(&terms);
            Ok(PopulationEstimate { value: mean, std_error: Some(se) })
        }
    }
}

/// `int p_de (r - r*)^2`, the squared L2(p_de) distance, by the same
/// integration machinery.
pub fn population_l2_sq(
    model: &dyn RatioModel,
    problem: &SyntheticProblem,
    method: Integration,
) -> Result<PopulationEstimate> {
    match method {
        Integration::Quadrature { nodes_per_axis } => {
            let value = integrate_grid(problem, nodes_per_axis, |x| {
                let diff = model.forward(x)? - problem.true_ratio(x);
                Ok(problem.density_de(x) * diff * diff)
            })?;
            Ok(PopulationEstimate { value, std_error: None })
        }
        Integration::MonteCarlo { n, seed } => {
            let de = problem.sample(Role::Denominator, n, seed);
            let mut terms = Vec::with_capacity(n);
            for x in de.rows() {
                let diff = model.forward(x)? - problem.true_ratio(x);
                terms.push(diff * diff);
            }
            let (mean, se) = mc_mean_se(&terms);
            Ok(PopulationEstimate { value: mean, std_error: Some(se) })
        }
    }
}

/// Monte-Carlo estimate of the population clip aggregate
/// `(E_de - C E_nu)[l1(r)]` with its standard error. Non-negative in
/// population whenever C <= 1/sup r*.
pub fn population_clip_term_mc(
    spec: &LossSpec,
    model: &dyn RatioModel,
    problem: &SyntheticProblem,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let de = problem.sample(Role::Denominator, n, seed);
    let nu = problem.sample(Role::Numerator, n, seed.wrapping_add(1));
    let mut de_terms = Vec::with_capacity(n);
    for x in de.rows() {
        de_terms.push(spec.l1(model.forward(x)?)?);
    }
    let mut nu_terms = Vec::with_capacity(n);
    for x in nu.rows() {
        nu_terms.push(spec.l1(model.forward(x)?)?);
    }
    let (m_de, se_de) = mc_mean_se(&de_terms);
    let (m_nu, se_nu) = mc_mean_se(&nu_terms);
    let se = (se_de * se_de + spec.c * spec.c * se_nu * se_nu).sqrt();
    Ok((m_de - spec.c * m_nu, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::LossFamily;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lsif(c: f64) -> LossSpec {
        LossSpec::new(LossFamily::Lsif, c).unwrap()
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..1001).map(|_| rng.random_range(-1.0..1.0)).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-10);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[4.0]), 4.0);
    }

    #[test]
    fn empirical_br_pinned() {
        // LSIF, C = 1, r identically 1: l2(1) + l1(1) - l1(1) = -0.5.
        let v = empirical_br_from_values(&lsif(1.0), &[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - (-0.5)).abs() < 1e-15);

        // nu outputs {2}, de outputs {0}: 0 + 0 - 2 = -2.
        let v = empirical_br_from_values(&lsif(1.0), &[2.0], &[0.0]).unwrap();
        assert!((v - (-2.0)).abs() < 1e-15);

        // UKL, C = 1, r identically 1: (1 - 0) + 1 - 1 = 1.
        let ukl = LossSpec::new(LossFamily::Ukl, 1.0).unwrap();
        let v = empirical_br_from_values(&ukl, &[1.0], &[1.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nnbr_clips_the_negative_aggregate() {
        // nu {2}, de {0}: raw = 0 - 2 = -2 -> corrected 0; total = l2(2) = 0.
        let b =
            empirical_nnbr_from_values(&lsif(1.0), &[2.0], &[0.0], CorrectionFn::Relu).unwrap();
        assert_eq!(b.term_clip_raw, -2.0);
        assert_eq!(b.term_clip_corrected, 0.0);
        assert_eq!(b.total, 0.0);

        // Same batch uncorrected: -2.
        let plain = empirical_br_from_values(&lsif(1.0), &[2.0], &[0.0]).unwrap();
        assert_eq!(plain, -2.0);

        // UKL, C = 0.5, both outputs 1: raw = 1 - 0.5 >= 0, total = 0.5 + 0.5.
        let ukl = LossSpec::new(LossFamily::Ukl, 0.5).unwrap();
        let b = empirical_nnbr_from_values(&ukl, &[1.0], &[1.0], CorrectionFn::Relu).unwrap();
        assert!((b.total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nnbr_equals_br_when_clip_inactive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let specs = [
            LossSpec::new(LossFamily::Lsif, 0.5).unwrap(),
            LossSpec::new(LossFamily::Ukl, 0.5).unwrap(),
            LossSpec::new(LossFamily::Bkl, 0.7).unwrap(),
            LossSpec::new(LossFamily::PuLog, 0.4).unwrap(),
        ];
        let mut agree = 0;
        for _ in 0..1000 {
            let spec = specs[rng.random_range(0..specs.len())];
            let draw = |rng: &mut ChaCha8Rng| -> f64 {
                match spec.family {
                    LossFamily::PuLog => rng.random_range(0.001..0.999),
                    _ => rng.random_range(0.01..5.0),
                }
            };
            let r_nu: Vec<f64> = (0..8).map(|_| draw(&mut rng)).collect();
            let r_de: Vec<f64> = (0..8).map(|_| draw(&mut rng)).collect();
            let b =
                empirical_nnbr_from_values(&spec, &r_nu, &r_de, CorrectionFn::Relu).unwrap();
            let plain = empirical_br_from_values(&spec, &r_nu, &r_de).unwrap();
            if b.term_clip_raw >= 0.0 {
                assert_eq!(b.total, plain, "exact equality when the clip is inactive");
                agree += 1;
            } else {
                assert!(b.total >= plain);
            }
            assert_eq!(b.total, b.term_nu_l2 + b.term_clip_corrected);
        }
        assert!(agree > 100, "the clip-inactive case must actually occur: {agree}");
    }

    #[test]
    fn relu_total_respects_l2_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for &c in &[0.2, 0.5, 1.0] {
            let spec = lsif(c);
            let bound = -0.5 / c;
            for _ in 0..500 {
                let r_nu: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..20.0)).collect();
                let r_de: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..20.0)).collect();
                let b =
                    empirical_nnbr_from_values(&spec, &r_nu, &r_de, CorrectionFn::Relu).unwrap();
                assert!(b.total >= bound - 1e-12, "total {} < bound {bound}", b.total);
                assert!(b.total >= b.term_nu_l2 - 1e-12);
            }
        }
    }

    #[test]
    fn gradient_signal_branches_and_values() {
        let spec = lsif(1.0);
        // Clip active: nu {2}, de {0} -> ascent, de upstream flips sign.
        let g = nnbr_gradient_signal_from_values(&spec, &[2.0], &[0.0], CorrectionFn::Relu)
            .unwrap();
        assert_eq!(g.branch, Branch::Ascent);
        assert_eq!(g.upstream_de[0], -0.0 / 1.0); // l1'(0) = 0 for LSIF
        assert_eq!(g.upstream_nu[0], 1.0 * 2.0); // C * l1'(2) / n_nu = 2

        // Clip inactive: r = 1 everywhere, C = 0.5.
        let spec = lsif(0.5);
        let g = nnbr_gradient_signal_from_values(&spec, &[1.0, 1.0], &[1.0], CorrectionFn::Relu)
            .unwrap();
        assert_eq!(g.branch, Branch::Descent);
        // upstream_de_i = l1'(r_i)/n_de = 1.
        assert_eq!(g.upstream_de[0], 1.0);
        // upstream_nu_i = (l2'(1) - C l1'(1)) / 2 = ((0.5 - 1) - 0.5) / 2 = -0.5.
        assert_eq!(g.upstream_nu[0], -0.5);

        // Identity correction never takes the ascent branch.
        let g =
            nnbr_gradient_signal_from_values(&lsif(1.0), &[2.0], &[0.0], CorrectionFn::Identity)
                .unwrap();
        assert_eq!(g.branch, Branch::Descent);
    }

    #[test]
    fn role_mismatch_is_rejected() {
        use crate::evalkit::{SyntheticProblem, TrueRatioModel};
        let p = SyntheticProblem::gauss_shift(1, 0.5, vec![2.0], 0).unwrap();
        let model = TrueRatioModel::new(p.clone());
        let nu = p.sample(Role::Numerator, 8, 0);
        let de = p.sample(Role::Denominator, 8, 1);
        assert!(empirical_br(&lsif(0.5), &model, &nu, &de).is_ok());
        assert!(matches!(
            empirical_br(&lsif(0.5), &model, &de, &nu),
            Err(Error::Role { .. })
        ));
    }

    #[test]
    fn pulog_population_risk_is_unsupported() {
        use crate::evalkit::{SyntheticProblem, TrueRatioModel};
        let p = SyntheticProblem::gauss_shift(1, 0.5, vec![2.0], 0).unwrap();
        let model = TrueRatioModel::new(p.clone());
        let spec = LossSpec::new(LossFamily::PuLog, 0.5).unwrap();
        assert!(matches!(
            population_br_exact(&spec, &model, &p, Integration::default_for(&p)),
            Err(Error::UnsupportedFamily(_))
        ));
    }
}
