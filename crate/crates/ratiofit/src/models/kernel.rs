//! Linear-in-parameter model over Gaussian kernel basis functions.
//!
//! r(x) = sum_j theta_j * exp(-||x - c_j||^2 / (2 sigma^2)) with basis centers
//! c_j taken from numerator samples. The closed-form and projected-gradient
//! baselines fit these; non-negativity of predictions is enforced per method
//! (clip at zero for the least-squares fit, theta >= 0 for the KL fit).

use serde::{Deserialize, Serialize};

use super::{RatioModel, Trainable};
use crate::data::SampleSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelLinearModel {
    /// Basis centers, row-major b x d.
    centers: Vec<f64>,
    n_basis: usize,
    dim: usize,
    bandwidth: f64,
    theta: Vec<f64>,
    /// Clip negative predictions to zero (least-squares fits can go negative).
    clip_at_zero: bool,
}

impl KernelLinearModel {
    pub fn new(
        centers: Vec<f64>,
        n_basis: usize,
        dim: usize,
        bandwidth: f64,
        theta: Vec<f64>,
        clip_at_zero: bool,
    ) -> Result<Self> {
        if n_basis == 0 || dim == 0 {
            return Err(Error::Shape("kernel model needs n_basis >= 1 and d >= 1".into()));
        }
        if centers.len() != n_basis * dim {
            return Err(Error::Shape(format!(
                "centers buffer has length {}, expected b * d = {}",
                centers.len(),
                n_basis * dim
            )));
        }
        if theta.len() != n_basis {
            return Err(Error::Shape(format!(
                "theta has length {}, expected {}",
                theta.len(),
                n_basis
            )));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self {
            centers,
            n_basis,
            dim,
            bandwidth,
            theta,
            clip_at_zero,
        })
    }

    /// Centers taken from the first `n_basis` rows of `from` (a deterministic
    /// subsample; shuffle the set beforehand for a random one).
    pub fn with_centers_from(
        from: &SampleSet,
        n_basis: usize,
        bandwidth: f64,
        clip_at_zero: bool,
    ) -> Result<Self> {
        let b = n_basis.min(from.len());
        if b == 0 {
            return Err(Error::Shape("need at least one basis center".into()));
        }
        let mut centers = Vec::with_capacity(b * from.dim());
        for i in 0..b {
            centers.extend_from_slice(from.row(i));
        }
        Self::new(centers, b, from.dim(), bandwidth, vec![0.0; b], clip_at_zero)
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.n_basis {
            return Err(Error::Shape(format!(
                "theta has length {}, expected {}",
                theta.len(),
                self.n_basis
            )));
        }
        self.theta = theta;
        Ok(())
    }

    pub fn clip_at_zero(&self) -> bool {
        self.clip_at_zero
    }

    /// The feature vector phi(x), one Gaussian bump per center.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let two_s2 = 2.0 * self.bandwidth * self.bandwidth;
        (0..self.n_basis)
            .map(|j| {
                let c = &self.centers[j * self.dim..(j + 1) * self.dim];
                let sq: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / two_s2).exp()
            })
            .collect()
    }

    fn raw(&self, x: &[f64]) -> f64 {
        self.features(x)
            .iter()
            .zip(&self.theta)
            .map(|(phi, th)| phi * th)
            .sum()
    }
}

impl RatioModel for KernelLinearModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_range(&self) -> (f64, f64) {
        (if self.clip_at_zero { 0.0 } else { f64::NEG_INFINITY }, f64::INFINITY)
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "input has length {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        let v = self.raw(x);
        Ok(if self.clip_at_zero { v.max(0.0) } else { v })
    }
}

impl Trainable for KernelLinearModel {
    fn param_count(&self) -> usize {
        self.n_basis
    }

    fn params(&self) -> Vec<f64> {
        self.theta.clone()
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_basis {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_basis,
                flat.len()
            )));
        }
        self.theta.copy_from_slice(flat);
        Ok(())
    }

    fn grad_params(&self, xs: &SampleSet, upstream: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(xs)?;
        if upstream.len() != xs.len() {
            return Err(Error::Shape(format!(
                "upstream length {} does not match batch size {}",
                upstream.len(),
                xs.len()
            )));
        }
        let mut grad = vec![0.0; self.n_basis];
        for (row, &u) in xs.rows().zip(upstream) {
            if u == 0.0 {
                continue;
            }
            // Where the clip is active the output is constant zero.
            if self.clip_at_zero && self.raw(row) < 0.0 {
                continue;
            }
            for (g, phi) in grad.iter_mut().zip(self.features(row)) {
                *g += u * phi;
            }
        }
        Ok(grad)
    }
}

/// Median of all pairwise Euclidean distances of the pooled sample sets,
/// the standard bandwidth default. Quadratic in the pooled size.
pub fn median_heuristic(sets: &[&SampleSet]) -> Result<f64> {
    let dim = sets.first().map(|s| s.dim()).ok_or_else(|| {
        Error::Shape("median heuristic needs at least one sample set".into())
    })?;
    let mut pooled: Vec<&[f64]> = Vec::new();
    for s in sets {
        if s.dim() != dim {
            return Err(Error::Shape("sample sets have mismatched dimension".into()));
        }
        pooled.extend(s.rows());
    }
    if pooled.len() < 2 {
        return Err(Error::Shape("median heuristic needs at least two points".into()));
    }
    let mut dists = Vec::with_capacity(pooled.len() * (pooled.len() - 1) / 2);
    for i in 0..pooled.len() {
        for j in (i + 1)..pooled.len() {
            let sq: f64 = pooled[i]
                .iter()
                .zip(pooled[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if median > 0.0 {
        Ok(median)
    } else {
        // All points identical; any positive bandwidth works.
        Ok(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Role;

    #[test]
    fn zero_theta_gives_zero() {
        let m = KernelLinearModel::new(vec![0.0, 1.0], 2, 1, 1.0, vec![0.0, 0.0], false).unwrap();
        assert_eq!(m.forward(&[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn single_center_at_query_gives_theta() {
        let m = KernelLinearModel::new(vec![1.5], 1, 1, 2.0, vec![3.0], false).unwrap();
        assert!((m.forward(&[1.5]).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn clip_at_zero_truncates_negative_predictions() {
        let m = KernelLinearModel::new(vec![0.0], 1, 1, 1.0, vec![-2.0], true).unwrap();
        assert_eq!(m.forward(&[0.0]).unwrap(), 0.0);
        let un = KernelLinearModel::new(vec![0.0], 1, 1, 1.0, vec![-2.0], false).unwrap();
        assert_eq!(un.forward(&[0.0]).unwrap(), -2.0);
    }

    #[test]
    fn gradient_is_weighted_feature_sum() {
        let m = KernelLinearModel::new(vec![0.0, 2.0], 2, 1, 1.0, vec![0.5, 0.5], false).unwrap();
        let xs = SampleSet::new(vec![0.0, 1.0, 2.0], 3, 1, Role::Numerator).unwrap();
        let upstream = [1.0, -2.0, 0.5];
        let grad = m.grad_params(&xs, &upstream).unwrap();
        let mut want = vec![0.0; 2];
        for (row, &u) in xs.rows().zip(&upstream) {
            for (w, phi) in want.iter_mut().zip(m.features(row)) {
                *w += u * phi;
            }
        }
        for (g, w) in grad.iter().zip(&want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn median_heuristic_on_a_grid() {
        // Points 0, 1, 2: pairwise distances 1, 1, 2 -> median 1.
        let s = SampleSet::new(vec![0.0, 1.0, 2.0], 3, 1, Role::Numerator).unwrap();
        let sigma = median_heuristic(&[&s]).unwrap();
        assert!((sigma - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validates_shapes() {
        assert!(KernelLinearModel::new(vec![0.0], 1, 1, 0.0, vec![1.0], false).is_err());
        assert!(KernelLinearModel::new(vec![0.0], 2, 1, 1.0, vec![1.0, 1.0], false).is_err());
        assert!(KernelLinearModel::new(vec![0.0], 1, 1, 1.0, vec![1.0, 2.0], false).is_err());
    }
}
