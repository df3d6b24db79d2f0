//! Parsers for the compact spec strings used on the command line:
//! synthetic problems, model architectures, and estimation methods.

use ratiofit::bregman::{LossFamily, LossSpec, DEFAULT_PU_EPSILON};
use ratiofit::evalkit::SyntheticProblem;
use ratiofit::models::{AnyModel, MlpRatioModel, OutputLink};
use ratiofit::risk::CorrectionFn;
use ratiofit::{Error, Result};

/// `gauss_shift:d=1,pi=0.5,m=2.0` (m scalar shifts the first axis; use
/// `m=1.0;0.5` for a full vector) or `gauss_scale:d=2,snu=1.0,sde=2.0`.
pub fn parse_problem(s: &str, seed: u64) -> Result<SyntheticProblem> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let params = parse_params(rest)?;
    let get = |key: &str| -> Result<&str> {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("problem spec {s:?} is missing {key:?}")))
    };
    match kind {
        "gauss_shift" => {
            let d: usize = parse_num(get("d")?, "d")?;
            let pi: f64 = parse_num(get("pi")?, "pi")?;
            let m_raw = get("m")?;
            let parts: Vec<f64> = m_raw
                .split(';')
                .map(|tok| parse_num(tok, "m"))
                .collect::<Result<_>>()?;
            let shift = if parts.len() == 1 && d > 1 {
                let mut v = vec![0.0; d];
                v[0] = parts[0];
                v
            } else {
                parts
            };
            SyntheticProblem::gauss_shift(d, pi, shift, seed)
        }
        "gauss_scale" => {
            let d: usize = parse_num(get("d")?, "d")?;
            let snu: f64 = parse_num(get("snu")?, "snu")?;
            let sde: f64 = parse_num(get("sde")?, "sde")?;
            SyntheticProblem::gauss_scale(d, snu, sde, seed)
        }
        other => Err(Error::Parse(format!("unknown problem kind {other:?}"))),
    }
}

/// Widths and link of an `mlp:<w1,...,wk>:<link>` spec.
pub fn parse_mlp_parts(s: &str) -> Result<(Vec<usize>, OutputLink)> {
    let Some(rest) = s.strip_prefix("mlp:") else {
        return Err(Error::Parse(format!("unknown model spec {s:?}")));
    };
    let (widths_str, link_str) = rest
        .rsplit_once(':')
        .ok_or_else(|| Error::Parse(format!("model spec {s:?} needs `mlp:<widths>:<link>`")))?;
    let widths: Vec<usize> = widths_str
        .split(',')
        .map(|tok| parse_num(tok, "width"))
        .collect::<Result<_>>()?;
    let link: OutputLink = link_str.parse()?;
    Ok((widths, link))
}

/// `mlp:<w1,...,wk>:<link>` or `capped:<cap>:mlp:<widths>:<link>`.
/// Links: `softplus`, `exp`, `sigmoid`, `sigmoid(<eps>)`.
pub fn parse_model(s: &str, input_dim: usize, seed: u64) -> Result<AnyModel> {
    if let Some(rest) = s.strip_prefix("capped:") {
        let (cap_str, inner) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("capped model spec {s:?} needs an inner model")))?;
        let cap: f64 = parse_num(cap_str, "cap")?;
        return AnyModel::capped(parse_model(inner, input_dim, seed)?, cap);
    }
    let (widths, link) = parse_mlp_parts(s)?;
    if widths.first() != Some(&input_dim) {
        return Err(Error::Config(format!(
            "model input width {:?} does not match data dimension {input_dim}",
            widths.first()
        )));
    }
    Ok(AnyModel::from(MlpRatioModel::new(&widths, link, seed)?))
}

/// Rewrite a parsed MLP spec with a clamped-sigmoid link (PULog models must
/// live in (eps, 1-eps)).
pub fn with_sigmoid_link(model_spec: &str, epsilon: f64) -> Result<String> {
    if let Some(rest) = model_spec.strip_prefix("capped:") {
        let (cap, inner) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad capped spec {model_spec:?}")))?;
        return Ok(format!("capped:{cap}:{}", with_sigmoid_link(inner, epsilon)?));
    }
    let rest = model_spec
        .strip_prefix("mlp:")
        .ok_or_else(|| Error::Parse(format!("unknown model spec {model_spec:?}")))?;
    let (widths, _link) = rest
        .rsplit_once(':')
        .ok_or_else(|| Error::Parse(format!("bad model spec {model_spec:?}")))?;
    Ok(format!("mlp:{widths}:sigmoid({epsilon})"))
}

/// An estimation method named on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    /// Oracle scores from the analytic ratio.
    TrueRatio,
    /// Uniform weights (covariate-shift experiments only).
    Uniform,
    /// Neural estimator: loss family + correction, optionally capped at 1/C.
    Nn {
        label: String,
        spec: LossSpec,
        correction: CorrectionFn,
        capped: bool,
    },
    /// Closed-form kernel uLSIF; lambda None selects by cross-validation.
    KernelUlsif { lambda: Option<f64> },
    KernelKliep,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::TrueRatio => "true_ratio".into(),
            MethodSpec::Uniform => "uniform".into(),
            MethodSpec::Nn { label, .. } => label.clone(),
            MethodSpec::KernelUlsif { .. } => "kernel_ulsif".into(),
            MethodSpec::KernelKliep => "kernel_kliep".into(),
        }
    }
}

/// Parse one method token.
///
/// Neural methods: `nnbr-lsif:c=0.5`, `nnbr-ukl:c=0.5`, `nnbr-bkl:c=0.5`,
/// `nnbr-pu:c=0.5[,eps=1e-6]` (corrected), `ulsif-nn`, `ukl-nn`, `bkl-nn`,
/// `pu-nn:c=0.5` (uncorrected), `bounded-ulsif:c=0.5` (uncorrected, capped
/// at 1/C). Kernel baselines: `kernel-ulsif[:lambda=0.1]`, `kernel-kliep`.
/// Oracles: `true_ratio`, `uniform`.
pub fn parse_method(token: &str) -> Result<MethodSpec> {
    let (name, rest) = token.split_once(':').unwrap_or((token, ""));
    let params = parse_params(rest)?;
    let c = params
        .iter()
        .find(|(k, _)| k == "c")
        .map(|(_, v)| parse_num::<f64>(v, "c"))
        .transpose()?;
    let eps = params
        .iter()
        .find(|(k, _)| k == "eps")
        .map(|(_, v)| parse_num::<f64>(v, "eps"))
        .transpose()?
        .unwrap_or(DEFAULT_PU_EPSILON);

    let nn = |family: LossFamily, correction: CorrectionFn, capped: bool| -> Result<MethodSpec> {
        // Uncorrected LSIF/UKL/BKL objectives do not depend on C (the
        // decomposition constants cancel), so a default is safe there.
        let c = match c {
            Some(v) => v,
            None if correction == CorrectionFn::Identity && family != LossFamily::PuLog => 0.5,
            None => {
                return Err(Error::Parse(format!(
                    "method {token:?} needs an explicit c parameter"
                )))
            }
        };
        Ok(MethodSpec::Nn {
            label: name.replace('-', "_"),
            spec: LossSpec::with_pu_epsilon(family, c, eps)?,
            correction,
            capped,
        })
    };

    match name {
        "true_ratio" => Ok(MethodSpec::TrueRatio),
        "uniform" => Ok(MethodSpec::Uniform),
        "nnbr-lsif" => nn(LossFamily::Lsif, CorrectionFn::Relu, false),
        "nnbr-ukl" => nn(LossFamily::Ukl, CorrectionFn::Relu, false),
        "nnbr-bkl" => nn(LossFamily::Bkl, CorrectionFn::Relu, false),
        "nnbr-pu" => nn(LossFamily::PuLog, CorrectionFn::Relu, false),
        "ulsif-nn" => nn(LossFamily::Lsif, CorrectionFn::Identity, false),
        "ukl-nn" => nn(LossFamily::Ukl, CorrectionFn::Identity, false),
        "bkl-nn" => nn(LossFamily::Bkl, CorrectionFn::Identity, false),
        "pu-nn" => nn(LossFamily::PuLog, CorrectionFn::Identity, false),
        "bounded-ulsif" => {
            if c.is_none() {
                return Err(Error::Parse(
                    "bounded-ulsif needs c to place the cap at 1/c".into(),
                ));
            }
            nn(LossFamily::Lsif, CorrectionFn::Identity, true)
        }
        "kernel-ulsif" => {
            let lambda = params
                .iter()
                .find(|(k, _)| k == "lambda")
                .map(|(_, v)| parse_num::<f64>(v, "lambda"))
                .transpose()?;
            Ok(MethodSpec::KernelUlsif { lambda })
        }
        "kernel-kliep" => Ok(MethodSpec::KernelKliep),
        other => Err(Error::Parse(format!("unknown method {other:?}"))),
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<MethodSpec>> {
    let methods: Vec<MethodSpec> = list
        .split(',')
        .filter(|tok| !tok.is_empty())
        .map(parse_method)
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::Parse("empty method list".into()));
    }
    Ok(methods)
}

fn parse_params(rest: &str) -> Result<Vec<(String, String)>> {
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    rest.split(',')
        .map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {pair:?}")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("bad {what} value {s:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratiofit::models::RatioModel;

    #[test]
    fn problem_specs_parse() {
        let p = parse_problem("gauss_shift:d=1,pi=0.5,m=2.0", 0).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.sup_ratio(), 2.0);

        let p2 = parse_problem("gauss_shift:d=3,pi=0.25,m=1.5", 0).unwrap();
        assert_eq!(p2.dim(), 3);

        let p3 = parse_problem("gauss_scale:d=2,snu=1.0,sde=2.0", 0).unwrap();
        assert_eq!(p3.sup_ratio(), 4.0);

        assert!(parse_problem("gauss_shift:d=1,pi=1.5,m=2", 0).is_err());
        assert!(parse_problem("mystery:d=1", 0).is_err());
    }

    #[test]
    fn model_specs_parse() {
        let m = parse_model("mlp:2,8,1:softplus", 2, 7).unwrap();
        assert_eq!(m.input_dim(), 2);
        assert!(parse_model("mlp:2,8,1:softplus", 3, 7).is_err(), "dim mismatch");

        let capped = parse_model("capped:2.0:mlp:1,4,1:exp", 1, 7).unwrap();
        let (_, hi) = capped.output_range();
        assert_eq!(hi, 2.0);

        let sig = parse_model("mlp:1,4,1:sigmoid(0.001)", 1, 7).unwrap();
        let (lo, hi) = sig.output_range();
        assert_eq!((lo, hi), (0.001, 0.999));
    }

    #[test]
    fn sigmoid_rewrite() {
        assert_eq!(
            with_sigmoid_link("mlp:1,32,1:softplus", 1e-6).unwrap(),
            "mlp:1,32,1:sigmoid(0.000001)"
        );
    }

    #[test]
    fn method_specs_parse() {
        let m = parse_method("nnbr-lsif:c=0.5").unwrap();
        match m {
            MethodSpec::Nn { spec, correction, capped, label } => {
                assert_eq!(spec.family, LossFamily::Lsif);
                assert_eq!(spec.c, 0.5);
                assert_eq!(correction, CorrectionFn::Relu);
                assert!(!capped);
                assert_eq!(label, "nnbr_lsif");
            }
            other => panic!("{other:?}"),
        }

        assert!(matches!(parse_method("true_ratio").unwrap(), MethodSpec::TrueRatio));
        assert!(matches!(
            parse_method("kernel-ulsif:lambda=0.1").unwrap(),
            MethodSpec::KernelUlsif { lambda: Some(l) } if l == 0.1
        ));
        // Corrected methods need an explicit C.
        assert!(parse_method("nnbr-lsif").is_err());
        // Uncorrected LSIF does not (C cancels).
        assert!(parse_method("ulsif-nn").is_ok());
        assert!(parse_method("pu-nn").is_err(), "PULog always needs C");
        assert!(parse_method("no-such-method").is_err());

        let methods = parse_methods("true_ratio,ulsif-nn,nnbr-lsif:c=0.5").unwrap();
        assert_eq!(methods.len(), 3);
    }
}
