//! ReLU multilayer perceptron with a range-constraining output link.
//!
//! The network is a stack of fully connected layers with ReLU activations and
//! a scalar output. The link maps the final pre-activation into the model's
//! declared range: softplus and exp guarantee r(x) > 0, the clamped sigmoid
//! guarantees r(x) in (eps, 1 - eps) as required by losses on (0, 1).
//!
//! Parameters live in one flat vector, layer by layer, each layer's weight
//! matrix row-major followed by its bias vector. Backpropagation is derived
//! by hand for this fixed architecture and returns the gradient of
//! sum_i upstream[i] * r(x_i) in the same flat layout.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RatioModel, Trainable};
use crate::data::SampleSet;
use crate::{Error, Result};

/// Output nonlinearity mapping the final pre-activation to the model range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "link", rename_all = "snake_case")]
pub enum OutputLink {
    /// ln(1 + e^a): positive, 1-Lipschitz, linear for large a.
    Softplus,
    /// e^a: positive, can overflow for large a.
    Exp,
    /// eps + (1 - 2 eps) * sigmoid(a): range (eps, 1 - eps).
    SigmoidClamped { epsilon: f64 },
}

impl OutputLink {
    pub fn apply(self, a: f64) -> f64 {
        match self {
            OutputLink::Softplus => softplus(a),
            OutputLink::Exp => a.exp(),
            OutputLink::SigmoidClamped { epsilon } => {
                epsilon + (1.0 - 2.0 * epsilon) * sigmoid(a)
            }
        }
    }

    pub fn deriv(self, a: f64) -> f64 {
        match self {
            OutputLink::Softplus => sigmoid(a),
            OutputLink::Exp => a.exp(),
            OutputLink::SigmoidClamped { epsilon } => {
                let s = sigmoid(a);
                (1.0 - 2.0 * epsilon) * s * (1.0 - s)
            }
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            OutputLink::Softplus | OutputLink::Exp => (0.0, f64::INFINITY),
            OutputLink::SigmoidClamped { epsilon } => (epsilon, 1.0 - epsilon),
        }
    }

    /// Final-layer bias that puts the initial output at the center of the
    /// sensible range: 1 for the positive links (the identical-densities
    /// ratio), mid-interval for the sigmoid.
    fn initial_bias(self) -> f64 {
        match self {
            // softplus(ln(e - 1)) = 1
            OutputLink::Softplus => (std::f64::consts::E - 1.0).ln(),
            // exp(0) = 1
            OutputLink::Exp => 0.0,
            OutputLink::SigmoidClamped { .. } => 0.0,
        }
    }
}

impl std::str::FromStr for OutputLink {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "softplus" => Ok(OutputLink::Softplus),
            "exp" => Ok(OutputLink::Exp),
            "sigmoid" => Ok(OutputLink::SigmoidClamped { epsilon: crate::bregman::DEFAULT_PU_EPSILON }),
            other => {
                if let Some(eps) = other.strip_prefix("sigmoid(").and_then(|r| r.strip_suffix(')')) {
                    let epsilon: f64 = eps
                        .parse()
                        .map_err(|e| Error::Parse(format!("bad sigmoid epsilon {eps:?}: {e}")))?;
                    Ok(OutputLink::SigmoidClamped { epsilon })
                } else {
                    Err(Error::Parse(format!("unknown output link {other:?}")))
                }
            }
        }
    }
}

fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Fully connected ReLU network with scalar linked output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpRatioModel {
    widths: Vec<usize>,
    #[serde(flatten)]
    link: OutputLink,
    /// Flat parameters: per layer, weight matrix row-major then bias.
    params: Vec<f64>,
    seed: u64,
}

impl MlpRatioModel {
    /// He-uniform initialization; the final bias is chosen so the initial
    /// output sits near the symmetric prior (r close to 1 for positive links).
    pub fn new(widths: &[usize], link: OutputLink, seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config(format!(
                "need at least input and output widths, got {widths:?}"
            )));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::Config(format!(
                "output width must be 1, got {widths:?}"
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Config(format!("zero width in {widths:?}")));
        }
        if let OutputLink::SigmoidClamped { epsilon } = link {
            if !(epsilon > 0.0 && epsilon < 0.5) {
                return Err(Error::Config(format!(
                    "sigmoid clamp epsilon must lie in (0, 0.5), got {epsilon}"
                )));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = widths.len() - 1;
        let mut params = Vec::with_capacity(param_count_for(widths));
        for l in 0..n_layers {
            let fan_in = widths[l];
            let fan_out = widths[l + 1];
            let limit = (6.0 / fan_in as f64).sqrt();
            for _ in 0..fan_out * fan_in {
                params.push(rng.random_range(-limit..limit));
            }
            let bias = if l == n_layers - 1 { link.initial_bias() } else { 0.0 };
            params.extend(std::iter::repeat(bias).take(fan_out));
        }
        Ok(Self {
            widths: widths.to_vec(),
            link,
            params,
            seed,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn link(&self) -> OutputLink {
        self.link
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Offset of layer l's weight block in the flat parameter vector.
    fn layer_offset(&self, l: usize) -> usize {
        let mut off = 0;
        for k in 0..l {
            off += self.widths[k + 1] * self.widths[k] + self.widths[k + 1];
        }
        off
    }

    /// Forward pass storing every pre-activation; used by backprop.
    fn forward_trace(&self, x: &[f64], pre: &mut Vec<Vec<f64>>) -> f64 {
        pre.clear();
        let mut input = x.to_vec();
        for l in 0..self.n_layers() {
            let fan_in = self.widths[l];
            let fan_out = self.widths[l + 1];
            let off = self.layer_offset(l);
            let w = &self.params[off..off + fan_out * fan_in];
            let b = &self.params[off + fan_out * fan_in..off + fan_out * fan_in + fan_out];
            let mut a = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(&input) {
                    acc += wi * xi;
                }
                a[o] = acc;
            }
            pre.push(a.clone());
            if l + 1 < self.n_layers() {
                for v in &mut a {
                    *v = v.max(0.0);
                }
            }
            input = a;
        }
        self.link.apply(pre.last().unwrap()[0])
    }
}

impl RatioModel for MlpRatioModel {
    fn input_dim(&self) -> usize {
        self.widths[0]
    }

    fn output_range(&self) -> (f64, f64) {
        self.link.range()
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has length {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::new();
        Ok(self.forward_trace(x, &mut pre))
    }

    fn forward_batch(&self, xs: &SampleSet) -> Result<Vec<f64>> {
        self.check_dim(xs)?;
        let mut pre = Vec::new();
        Ok(xs.rows().map(|row| self.forward_trace(row, &mut pre)).collect())
    }
}

impl Trainable for MlpRatioModel {
    fn param_count(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> Vec<f64> {
        self.params.clone()
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                flat.len()
            )));
        }
        self.params.copy_from_slice(flat);
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
        let n_layers = self.n_layers();
        let mut grad = vec![0.0; self.params.len()];
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n_layers);

        for (row, &u) in xs.rows().zip(upstream) {
            if u == 0.0 {
                continue;
            }
            self.forward_trace(row, &mut pre);

            // Post-activation of layer l - 1 (input of layer l).
            let post = |l: usize| -> Vec<f64> {
                if l == 0 {
                    row.to_vec()
                } else {
                    pre[l - 1].iter().map(|&a| a.max(0.0)).collect()
                }
            };

            let a_out = pre[n_layers - 1][0];
            let mut delta = vec![u * self.link.deriv(a_out)];

            for l in (0..n_layers).rev() {
                let fan_in = self.widths[l];
                let fan_out = self.widths[l + 1];
                let off = self.layer_offset(l);
                let input = post(l);
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let w_row = off + o * fan_in;
                    for i in 0..fan_in {
                        grad[w_row + i] += d * input[i];
                    }
                    grad[off + fan_out * fan_in + o] += d;
                }
                if l > 0 {
                    let mut prev = vec![0.0; fan_in];
                    let w = &self.params[off..off + fan_out * fan_in];
                    for o in 0..fan_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        let row_w = &w[o * fan_in..(o + 1) * fan_in];
                        for i in 0..fan_in {
                            prev[i] += row_w[i] * d;
                        }
                    }
                    // ReLU mask from layer l-1 pre-activations.
                    for (p, &a) in prev.iter_mut().zip(&pre[l - 1]) {
                        if a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok(grad)
    }
}

fn param_count_for(widths: &[usize]) -> usize {
    widths
        .windows(2)
        .map(|w| w[1] * w[0] + w[1])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Role;

    #[test]
    fn zero_weights_softplus_gives_ln2() {
        let mut m = MlpRatioModel::new(&[3, 4, 1], OutputLink::Softplus, 0).unwrap();
        m.set_params(&vec![0.0; m.param_count()]).unwrap();
        let r = m.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn initial_output_is_near_one_for_softplus() {
        let m = MlpRatioModel::new(&[2, 16, 1], OutputLink::Softplus, 3).unwrap();
        // At x = 0 the hidden layer contributes nothing (zero biases), so the
        // output is exactly softplus(final bias) = 1.
        let r = m.forward(&[0.0, 0.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "r(0) = {r}");
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = MlpRatioModel::new(&[4, 8, 8, 1], OutputLink::Exp, 99).unwrap();
        let b = MlpRatioModel::new(&[4, 8, 8, 1], OutputLink::Exp, 99).unwrap();
        assert_eq!(a.params(), b.params());
        let c = MlpRatioModel::new(&[4, 8, 8, 1], OutputLink::Exp, 100).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn output_stays_in_declared_range() {
        let links = [
            OutputLink::Softplus,
            OutputLink::Exp,
            OutputLink::SigmoidClamped { epsilon: 1e-6 },
        ];
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        for link in links {
            let m = MlpRatioModel::new(&[2, 8, 1], link, 17).unwrap();
            let (lo, hi) = m.output_range();
            for _ in 0..10_000 {
                let x = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
                let r = m.forward(&x).unwrap();
                assert!(r > lo && r < hi, "{link:?}: r = {r} outside ({lo}, {hi})");
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MlpRatioModel::new(&[2], OutputLink::Softplus, 0).is_err());
        assert!(MlpRatioModel::new(&[2, 3], OutputLink::Softplus, 0).is_err());
        assert!(MlpRatioModel::new(&[2, 0, 1], OutputLink::Softplus, 0).is_err());
        let m = MlpRatioModel::new(&[2, 4, 1], OutputLink::Softplus, 0).unwrap();
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let m = MlpRatioModel::new(&[2, 8, 1], OutputLink::Softplus, 1).unwrap();
        let xs = SampleSet::new(vec![0.1, 0.2, -0.3, 0.4], 2, 2, Role::Numerator).unwrap();
        let g = m.grad_params(&xs, &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    /// Full finite-difference check of the hand-derived backprop, every
    /// parameter, both architectures named by the gradient-correctness
    /// requirement and all three links.
    #[test]
    fn backprop_matches_finite_differences() {
        let shapes: [&[usize]; 2] = [&[2, 8, 1], &[5, 16, 16, 1]];
        let links = [
            OutputLink::Softplus,
            OutputLink::Exp,
            OutputLink::SigmoidClamped { epsilon: 1e-3 },
        ];
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1234);
        for shape in shapes {
            for link in links {
                let model = MlpRatioModel::new(shape, link, 77).unwrap();
                let d = shape[0];
                let n = 5;
                let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.5..1.5)).collect();
                let xs = SampleSet::new(data, n, d, Role::Numerator).unwrap();
                let upstream: Vec<f64> =
                    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

                let grad = model.grad_params(&xs, &upstream).unwrap();

                let objective = |m: &MlpRatioModel| -> f64 {
                    m.forward_batch(&xs)
                        .unwrap()
                        .iter()
                        .zip(&upstream)
                        .map(|(r, u)| r * u)
                        .sum()
                };
                let h = 1e-6;
                let base = model.params();
                let mut probe = model.clone();
                for (k, g_k) in grad.iter().enumerate() {
                    let mut p = base.clone();
                    p[k] += h;
                    probe.set_params(&p).unwrap();
                    let up = objective(&probe);
                    p[k] -= 2.0 * h;
                    probe.set_params(&p).unwrap();
                    let down = objective(&probe);
                    let fd = (up - down) / (2.0 * h);
                    let rel = (fd - g_k).abs() / (1.0 + g_k.abs());
                    assert!(
                        rel <= 1e-5,
                        "{shape:?} {link:?} param {k}: fd = {fd}, analytic = {g_k}"
                    );
                }
            }
        }
    }
}
