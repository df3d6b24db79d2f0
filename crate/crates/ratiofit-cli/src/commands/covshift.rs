//! `ratiofit covshift`: importance-weighted kernel ridge regression on a
//! synthetic covariate-shift problem; emits one PD/MSE row per method.

use std::io::Write;

use ratiofit::apps::{
    covshift_experiment, CovShiftConfig, CovShiftRow, DreMethod, RidgeKernel, RidgeLambda,
};
use ratiofit::{Error, Result};

use crate::commands::ensure_out_dir;
use crate::config::{RunConfig, SchemaEntry};
use crate::specs::{parse_methods, parse_mlp_parts, parse_problem, with_sigmoid_link, MethodSpec};
use crate::CovshiftArgs;

pub const SCHEMA: &[SchemaEntry] = &[
    ("problem", Some("gauss_shift:d=1,pi=0.5,m=2.0")),
    ("methods", Some("uniform,true_ratio,nnbr-lsif:c=0.5")),
    ("seeds", Some("10")),
    ("seed", Some("0")),
    ("n_train", Some("200")),
    ("n_test", Some("200")),
    ("target_freq", Some("2.0")),
    ("noise_sd", Some("0.1")),
    // linear | gaussian:<sigma> | polynomial:<degree>,<offset>
    ("ridge_kernel", Some("gaussian:1.0")),
    // a number, or `cv` for weighted 5-fold selection over a default grid
    ("ridge_lambda", Some("0.01")),
    ("model", Some("mlp:1,32,32,1:softplus")),
    ("lr", Some("1e-3")),
    ("beta1", Some("0.9")),
    ("beta2", Some("0.999")),
    ("adam_eps", Some("1e-8")),
    ("lambda", Some("0.0")),
    ("penalty", Some("l2")),
    ("batch_nu", Some("64")),
    ("batch_de", Some("64")),
    ("epochs", Some("200")),
    ("shuffle", Some("true")),
    ("wrap", Some("true")),
    ("ulsif_basis", Some("100")),
    ("kliep_basis", Some("100")),
    ("kliep_iters", Some("2000")),
    ("kliep_step", Some("0.5")),
];

const RIDGE_CV_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

fn parse_ridge_kernel(s: &str) -> Result<RidgeKernel> {
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    match name {
        "linear" => Ok(RidgeKernel::Linear),
        "gaussian" => {
            let sigma: f64 = rest
                .parse()
                .map_err(|e| Error::Parse(format!("gaussian kernel sigma {rest:?}: {e}")))?;
            Ok(RidgeKernel::Gaussian { sigma })
        }
        "polynomial" => {
            let (deg, off) = rest
                .split_once(',')
                .ok_or_else(|| Error::Parse("polynomial kernel needs <degree>,<offset>".into()))?;
            Ok(RidgeKernel::Polynomial {
                degree: deg
                    .parse()
                    .map_err(|e| Error::Parse(format!("polynomial degree {deg:?}: {e}")))?,
                offset: off
                    .parse()
                    .map_err(|e| Error::Parse(format!("polynomial offset {off:?}: {e}")))?,
            })
        }
        other => Err(Error::Parse(format!("unknown ridge kernel {other:?}"))),
    }
}

fn dre_method_from(spec: &MethodSpec, cfg: &RunConfig, dim: usize) -> Result<DreMethod> {
    Ok(match spec {
        MethodSpec::Uniform => DreMethod::Uniform,
        MethodSpec::TrueRatio => DreMethod::TrueRatio,
        MethodSpec::Nn {
            label,
            spec: loss,
            correction,
            capped,
        } => {
            if *capped {
                return Err(Error::Config(
                    "capped models are not supported in the covshift experiment".into(),
                ));
            }
            let mut model_str = cfg.get("model").to_string();
            if loss.family == ratiofit::bregman::LossFamily::PuLog {
                model_str = with_sigmoid_link(&model_str, loss.pu_epsilon)?;
            }
            let (widths, link) = parse_mlp_parts(&model_str)?;
            if widths.first() != Some(&dim) {
                return Err(Error::Config(format!(
                    "model input width {:?} does not match problem dimension {dim}",
                    widths.first()
                )));
            }
            let mut train_cfg = super::train::train_config_from(cfg)?;
            train_cfg.correction = *correction;
            DreMethod::NnbrMlp {
                label: label.clone(),
                spec: *loss,
                widths,
                link,
                train: train_cfg,
            }
        }
        MethodSpec::KernelUlsif { lambda } => DreMethod::KernelUlsif {
            n_basis: cfg.get_usize("ulsif_basis")?,
            lambda: *lambda,
        },
        MethodSpec::KernelKliep => DreMethod::KernelKliep {
            n_basis: cfg.get_usize("kliep_basis")?,
            max_iter: cfg.get_usize("kliep_iters")?,
            step: cfg.get_f64("kliep_step")?,
        },
    })
}

pub fn run(args: &CovshiftArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref(), &args.set, SCHEMA)?;
    let base_seed = cfg.get_u64("seed")?;
    let problem = parse_problem(cfg.get("problem"), base_seed)?;
    let methods = parse_methods(cfg.get("methods"))?;
    let n_seeds = cfg.get_usize("seeds")?;
    if n_seeds == 0 {
        return Err(Error::Config("need at least one seed".into()));
    }
    let seeds: Vec<u64> = (0..n_seeds).map(|i| base_seed + i as u64).collect();

    let ridge_lambda = match cfg.get("ridge_lambda") {
        "cv" => RidgeLambda::CvGrid(RIDGE_CV_GRID.to_vec()),
        other => RidgeLambda::Fixed(
            other
                .parse()
                .map_err(|e| Error::Parse(format!("ridge_lambda {other:?}: {e}")))?,
        ),
    };
    let shift_config = CovShiftConfig {
        problem: problem.clone(),
        n_train: cfg.get_usize("n_train")?,
        n_test: cfg.get_usize("n_test")?,
        target_freq: cfg.get_f64("target_freq")?,
        noise_sd: cfg.get_f64("noise_sd")?,
        ridge_kernel: parse_ridge_kernel(cfg.get("ridge_kernel"))?,
        ridge_lambda,
    };

    let mut rows: Vec<CovShiftRow> = Vec::with_capacity(methods.len());
    for method_spec in &methods {
        let method = dre_method_from(method_spec, &cfg, problem.dim())?;
        rows.push(covshift_experiment(&shift_config, &method, &seeds)?);
    }

    ensure_out_dir(&args.out)?;
    std::fs::write(args.out.join("config.resolved"), cfg.resolved_text())?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(args.out.join("results.csv"))?);
    writeln!(out, "{}", CovShiftRow::csv_header())?;
    for row in &rows {
        writeln!(out, "{}", row.to_csv())?;
    }
    Ok(())
}
