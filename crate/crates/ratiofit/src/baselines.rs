//! Classical direct density-ratio baselines with linear-in-parameter
//! Gaussian-kernel models.
//!
//! - uLSIF: unconstrained least-squares importance fitting, solved in closed
//!   form. With Phi the kernel feature map, theta solves
//!   `(H_hat + lambda I) theta = h_hat` where
//!   `H_hat = mean_de[phi phi^T]` and `h_hat = mean_nu[phi]`; predictions
//!   clip negatives to zero.
//! - KLIEP: maximizes `mean_nu[log r]` subject to `mean_de[r] = 1`, theta >= 0,
//!   by projected gradient with a rescaling projection onto the normalization
//!   constraint. The best feasible iterate (by objective) is returned.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::data::{Role, SampleSet};
use crate::models::KernelLinearModel;
use crate::risk::pairwise_sum;
use crate::{Error, Result};

/// Ridge floor: the normal matrix always gets at least this much jitter so a
/// rank-deficient Gram matrix with lambda = 0 fails loudly rather than
/// returning garbage.
const JITTER_FLOOR: f64 = 1e-12;

fn feature_matrix(model: &KernelLinearModel, xs: &SampleSet) -> Vec<Vec<f64>> {
    xs.rows().map(|row| model.features(row)).collect()
}

/// Closed-form kernel uLSIF.
///
/// Basis centers are the first `n_basis` numerator rows. The solve is a
/// Cholesky factorization of `H_hat + max(lambda, 1e-12) I`.
pub fn fit_ulsif_kernel(
    nu: &SampleSet,
    de: &SampleSet,
    bandwidth: f64,
    lambda: f64,
    n_basis: usize,
) -> Result<KernelLinearModel> {
    nu.expect_role(Role::Numerator)?;
    de.expect_role(Role::Denominator)?;
    if lambda < 0.0 {
        return Err(Error::Config(format!("ridge lambda must be non-negative, got {lambda}")));
    }
    if n_basis > nu.len() {
        return Err(Error::Config(format!(
            "n_basis = {n_basis} exceeds the numerator sample count {}",
            nu.len()
        )));
    }
    let mut model = KernelLinearModel::with_centers_from(nu, n_basis, bandwidth, true)?;
    let b = model.n_basis();

    let phi_de = feature_matrix(&model, de);
    let phi_nu = feature_matrix(&model, nu);

    let n_de = de.len() as f64;
    let mut h_mat = DMatrix::<f64>::zeros(b, b);
    for phi in &phi_de {
        for j in 0..b {
            for k in j..b {
                h_mat[(j, k)] += phi[j] * phi[k];
            }
        }
    }
    for j in 0..b {
        for k in j..b {
            let v = h_mat[(j, k)] / n_de;
            h_mat[(j, k)] = v;
            h_mat[(k, j)] = v;
        }
    }

    let n_nu = nu.len() as f64;
    let mut h_vec = DVector::<f64>::zeros(b);
    for phi in &phi_nu {
        for j in 0..b {
            h_vec[j] += phi[j];
        }
    }
    h_vec /= n_nu;

    let ridge = lambda.max(JITTER_FLOOR);
    for j in 0..b {
        h_mat[(j, j)] += ridge;
    }
    let chol = Cholesky::new(h_mat).ok_or_else(|| {
        Error::SingularMatrix(format!(
            "uLSIF normal matrix is not positive definite at lambda = {lambda}"
        ))
    })?;
    let theta = chol.solve(&h_vec);
    model.set_theta(theta.iter().copied().collect())?;
    Ok(model)
}

/// The uLSIF objective `0.5 * mean_de[r^2] - mean_nu[r]` for a fitted model
/// evaluated on held-out data (no clipping; the quadratic objective is what
/// the closed form minimizes).
pub fn ulsif_objective(model: &KernelLinearModel, nu: &SampleSet, de: &SampleSet) -> Result<f64> {
    let raw = |xs: &SampleSet| -> Vec<f64> {
        xs.rows()
            .map(|row| {
                model
                    .features(row)
                    .iter()
                    .zip(model.theta())
                    .map(|(p, t)| p * t)
                    .sum::<f64>()
            })
            .collect()
    };
    let r_de = raw(de);
    let r_nu = raw(nu);
    let sq: Vec<f64> = r_de.iter().map(|r| r * r).collect();
    Ok(0.5 * pairwise_sum(&sq) / r_de.len() as f64 - pairwise_sum(&r_nu) / r_nu.len() as f64)
}

/// Pick the ridge constant by k-fold cross-validation on the uLSIF objective.
pub fn ulsif_cv_lambda(
    nu: &SampleSet,
    de: &SampleSet,
    bandwidth: f64,
    n_basis: usize,
    lambdas: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if lambdas.is_empty() {
        return Err(Error::Config("need at least one candidate lambda".into()));
    }
    if folds < 2 || nu.len() < folds || de.len() < folds {
        return Err(Error::Config(format!("cannot make {folds} folds")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut ix_nu: Vec<usize> = (0..nu.len()).collect();
    let mut ix_de: Vec<usize> = (0..de.len()).collect();
    ix_nu.shuffle(&mut rng);
    ix_de.shuffle(&mut rng);

    let fold_of = |ix: &[usize], f: usize| -> (Vec<usize>, Vec<usize>) {
        let val: Vec<usize> = ix
            .iter()
            .enumerate()
            .filter(|(pos, _)| pos % folds == f)
            .map(|(_, &i)| i)
            .collect();
        let fit: Vec<usize> = ix
            .iter()
            .enumerate()
            .filter(|(pos, _)| pos % folds != f)
            .map(|(_, &i)| i)
            .collect();
        (fit, val)
    };

    let mut best = (f64::INFINITY, lambdas[0]);
    for &lambda in lambdas {
        let mut scores = Vec::with_capacity(folds);
        for f in 0..folds {
            let (fit_nu, val_nu) = fold_of(&ix_nu, f);
            let (fit_de, val_de) = fold_of(&ix_de, f);
            let nu_fit = nu.select(&fit_nu, Role::Numerator)?;
            let de_fit = de.select(&fit_de, Role::Denominator)?;
            let nu_val = nu.select(&val_nu, Role::Numerator)?;
            let de_val = de.select(&val_de, Role::Denominator)?;
            let model = fit_ulsif_kernel(
                &nu_fit,
                &de_fit,
                bandwidth,
                lambda,
                n_basis.min(nu_fit.len()),
            )?;
            scores.push(ulsif_objective(&model, &nu_val, &de_val)?);
        }
        let mean = scores.iter().sum::<f64>() / folds as f64;
        if mean < best.0 {
            best = (mean, lambda);
        }
    }
    Ok(best.1)
}

/// Result of a KLIEP fit; `converged` is false when `max_iter` was exhausted
/// before the objective stabilized (the model is still usable).
#[derive(Debug, Clone)]
pub struct KliepFit {
    pub model: KernelLinearModel,
    pub converged: bool,
    pub iterations: usize,
    /// Best value of mean_nu[log r] seen at a feasible iterate.
    pub objective: f64,
}

/// Projected-gradient KLIEP: ascend `mean_nu[log r]`, project theta onto the
/// non-negative orthant, rescale so `mean_de[r] = 1`.
pub fn fit_kliep_kernel(
    nu: &SampleSet,
    de: &SampleSet,
    bandwidth: f64,
    n_basis: usize,
    max_iter: usize,
    step: f64,
) -> Result<KliepFit> {
    nu.expect_role(Role::Numerator)?;
    de.expect_role(Role::Denominator)?;
    if !(step > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {step}")));
    }
    if n_basis > nu.len() {
        return Err(Error::Config(format!(
            "n_basis = {n_basis} exceeds the numerator sample count {}",
            nu.len()
        )));
    }
    let mut model = KernelLinearModel::with_centers_from(nu, n_basis, bandwidth, false)?;
    let b = model.n_basis();
    let phi_nu = feature_matrix(&model, nu);
    let phi_de = feature_matrix(&model, de);

    let mean_de_r = |theta: &[f64]| -> f64 {
        let vals: Vec<f64> = phi_de
            .iter()
            .map(|phi| phi.iter().zip(theta).map(|(p, t)| p * t).sum())
            .collect();
        pairwise_sum(&vals) / vals.len() as f64
    };
    let objective = |theta: &[f64]| -> f64 {
        let vals: Vec<f64> = phi_nu
            .iter()
            .map(|phi| {
                let r: f64 = phi.iter().zip(theta).map(|(p, t)| p * t).sum();
                r.max(f64::MIN_POSITIVE).ln()
            })
            .collect();
        pairwise_sum(&vals) / vals.len() as f64
    };
    let rescale = |theta: &mut Vec<f64>| -> Result<()> {
        let s = mean_de_r(theta);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Numerical(format!(
                "KLIEP normalization factor became {s}"
            )));
        }
        for t in theta.iter_mut() {
            *t /= s;
        }
        Ok(())
    };

    // Feasible start: uniform positive weights, normalized.
    let mut theta = vec![1.0; b];
    rescale(&mut theta)?;
    let mut best_theta = theta.clone();
    let mut best_obj = objective(&theta);
    let mut prev_obj = best_obj;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it + 1;
        // Gradient of mean_nu[log r]: mean_i phi(x_i) / r(x_i).
        let mut grad = vec![0.0; b];
        for phi in &phi_nu {
            let r: f64 = phi.iter().zip(&theta).map(|(p, t)| p * t).sum();
            let r = r.max(f64::MIN_POSITIVE);
            for (g, p) in grad.iter_mut().zip(phi) {
                *g += p / r;
            }
        }
        let n_nu = phi_nu.len() as f64;
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t += step * g / n_nu;
            if *t < 0.0 {
                *t = 0.0;
            }
        }
        rescale(&mut theta)?;

        let obj = objective(&theta);
        if obj > best_obj {
            best_obj = obj;
            best_theta.copy_from_slice(&theta);
        }
        if (obj - prev_obj).abs() < 1e-8 {
            converged = true;
            break;
        }
        prev_obj = obj;
    }

    model.set_theta(best_theta)?;
    Ok(KliepFit {
        model,
        converged,
        iterations,
        objective: best_obj,
    })
}
