//! `ratiofit synth-bench`: method comparison on a synthetic problem whose
//! ratio is known exactly.
//!
//! Per method and seed the command trains (or fits in closed form), then
//! reports AUROC of the ratio scores on a labeled evaluation draw (numerator
//! points positive, denominator points negative), the squared L2(p_de) error
//! against the analytic ratio (tensor quadrature in 1-D/2-D, Monte Carlo
//! above), and the normalization diagnostic E_de[r_hat] on a held-out
//! denominator draw. Neural methods also write their per-epoch traces.

use std::io::Write;

use ratiofit::baselines;
use ratiofit::bregman::LossFamily;
use ratiofit::data::{Role, SampleSet};
use ratiofit::evalkit::{
    auroc, normalization_diag, ScoredLabels, SyntheticProblem, TrueRatioModel,
};
use ratiofit::models::{median_heuristic, AnyModel, RatioModel};
use ratiofit::numfmt::fmt_f64;
use ratiofit::risk::{population_l2_sq, Integration};
use ratiofit::trainer::{train, Holdout, TrainTrace};
use ratiofit::{Error, Result};

use crate::commands::ensure_out_dir;
use crate::config::{RunConfig, SchemaEntry};
use crate::specs::{parse_methods, parse_model, parse_problem, with_sigmoid_link, MethodSpec};
use crate::BenchArgs;

pub const SCHEMA: &[SchemaEntry] = &[
    ("problem", None),
    ("methods", None),
    ("seeds", None),
    ("n_nu", Some("200")),
    ("n_de", Some("200")),
    ("n_holdout", Some("2000")),
    ("n_eval", Some("1000")),
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
    ("seed", Some("0")),
    ("ulsif_basis", Some("100")),
    ("kliep_basis", Some("100")),
    ("kliep_iters", Some("2000")),
    ("kliep_step", Some("0.5")),
    ("l2_mc", Some("200000")),
];

const ULSIF_CV_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

struct SeedData {
    nu: SampleSet,
    de: SampleSet,
    holdout_de: SampleSet,
    holdout_truth: Vec<f64>,
    eval_x: SampleSet,
    eval_labels: Vec<i8>,
}

struct MethodRun {
    auroc: f64,
    l2: f64,
    e_de_r: f64,
    trace: Option<TrainTrace>,
}

/// A model viewed through a constant rescale; PULog estimators output
/// C * r*, so their ratio estimate is the output divided by C.
struct Scaled<'a> {
    inner: &'a AnyModel,
    factor: f64,
}

impl RatioModel for Scaled<'_> {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
    fn output_range(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.output_range();
        (lo * self.factor, hi * self.factor)
    }
    fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inner.forward(x)? * self.factor)
    }
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let mut overrides = args.set.clone();
    overrides.push(format!("problem={}", args.problem));
    overrides.push(format!("methods={}", args.methods));
    overrides.push(format!("seeds={}", args.seeds));
    let cfg = RunConfig::load(args.config.as_deref(), &overrides, SCHEMA)?;

    let base_seed = cfg.get_u64("seed")?;
    let problem = parse_problem(cfg.get("problem"), base_seed)?;
    let methods = parse_methods(cfg.get("methods"))?;
    if methods.iter().any(|m| matches!(m, MethodSpec::Uniform)) {
        return Err(Error::Config(
            "`uniform` is a covshift method, not a bench method".into(),
        ));
    }
    let n_seeds = cfg.get_usize("seeds")?;
    if n_seeds == 0 {
        return Err(Error::Config("need at least one seed".into()));
    }

    let l2_method = if problem.dim() <= 2 {
        Integration::default_for(&problem)
    } else {
        Integration::MonteCarlo {
            n: cfg.get_usize("l2_mc")?,
            seed: base_seed ^ 0xACC0,
        }
    };

    // method index -> per-seed metrics
    let mut runs: Vec<Vec<MethodRun>> = methods.iter().map(|_| Vec::new()).collect();
    let mut traces: Vec<(String, TrainTrace)> = Vec::new();

    for i in 0..n_seeds {
        let s = base_seed + i as u64;
        let data = draw_seed_data(&problem, &cfg, s)?;
        for (mi, method) in methods.iter().enumerate() {
            let run = run_method(method, &problem, &data, &cfg, s, l2_method)?;
            if let Some(trace) = &run.trace {
                traces.push((format!("trace_{}_seed{}.csv", method.label(), i), trace.clone()));
            }
            runs[mi].push(run);
        }
    }

    ensure_out_dir(&args.out)?;
    std::fs::write(args.out.join("config.resolved"), cfg.resolved_text())?;
    for (name, trace) in &traces {
        trace.write_csv(&args.out.join(name))?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(args.out.join("aggregate.csv"))?);
    writeln!(
        out,
        "method,mean_auroc,sd_auroc,mean_l2,sd_l2,mean_e_de_r,sd_e_de_r,seeds"
    )?;
    for (method, method_runs) in methods.iter().zip(&runs) {
        let (ma, sa) = mean_sd(method_runs.iter().map(|r| r.auroc));
        let (ml, sl) = mean_sd(method_runs.iter().map(|r| r.l2));
        let (me, se) = mean_sd(method_runs.iter().map(|r| r.e_de_r));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            method.label(),
            fmt_f64(ma),
            fmt_f64(sa),
            fmt_f64(ml),
            fmt_f64(sl),
            fmt_f64(me),
            fmt_f64(se),
            n_seeds
        )?;
    }
    Ok(())
}

fn draw_seed_data(problem: &SyntheticProblem, cfg: &RunConfig, s: u64) -> Result<SeedData> {
    let t = s.wrapping_mul(16);
    let nu = problem.sample(Role::Numerator, cfg.get_usize("n_nu")?, t);
    let de = problem.sample(Role::Denominator, cfg.get_usize("n_de")?, t + 1);
    let holdout_de = problem.sample(Role::Denominator, cfg.get_usize("n_holdout")?, t + 2);
    let holdout_truth: Vec<f64> = holdout_de.rows().map(|x| problem.true_ratio(x)).collect();

    let n_eval = cfg.get_usize("n_eval")?;
    let eval_nu = problem.sample(Role::Numerator, n_eval, t + 3);
    let eval_de = problem.sample(Role::Denominator, n_eval, t + 4);
    let mut pooled = eval_nu.as_slice().to_vec();
    pooled.extend_from_slice(eval_de.as_slice());
    let eval_x = SampleSet::new(pooled, 2 * n_eval, problem.dim(), Role::Denominator)?;
    let eval_labels: Vec<i8> = (0..2 * n_eval)
        .map(|j| if j < n_eval { 1 } else { -1 })
        .collect();

    Ok(SeedData {
        nu,
        de,
        holdout_de,
        holdout_truth,
        eval_x,
        eval_labels,
    })
}

fn run_method(
    method: &MethodSpec,
    problem: &SyntheticProblem,
    data: &SeedData,
    cfg: &RunConfig,
    s: u64,
    l2_method: Integration,
) -> Result<MethodRun> {
    match method {
        MethodSpec::Uniform => unreachable!("rejected above"),
        MethodSpec::TrueRatio => {
            let oracle = TrueRatioModel::new(problem.clone());
            let scores = oracle.forward_batch(&data.eval_x)?;
            let sl = ScoredLabels::new(scores, data.eval_labels.clone())?;
            Ok(MethodRun {
                auroc: auroc(&sl)?,
                l2: population_l2_sq(&oracle, problem, l2_method)?.value,
                e_de_r: normalization_diag(&oracle, &data.holdout_de)?,
                trace: None,
            })
        }
        MethodSpec::Nn {
            spec,
            correction,
            capped,
            ..
        } => {
            let mut model_str = cfg.get("model").to_string();
            if spec.family == LossFamily::PuLog {
                model_str = with_sigmoid_link(&model_str, spec.pu_epsilon)?;
            }
            let mut model = parse_model(&model_str, problem.dim(), s)?;
            if *capped {
                model = AnyModel::capped(model, 1.0 / spec.c)?;
            }
            let mut train_cfg = super::train::train_config_from(cfg)?;
            train_cfg.seed = s;
            train_cfg.correction = *correction;

            let holdout = Holdout {
                de: data.holdout_de.clone(),
                de_true_ratio: Some(data.holdout_truth.clone()),
                labeled: Some((data.eval_x.clone(), data.eval_labels.clone())),
            };
            let trace = train(&mut model, spec, &data.nu, &data.de, &train_cfg, Some(&holdout))?;

            // PULog estimates C * r*: report diagnostics on the rescaled model.
            let factor = if spec.family == LossFamily::PuLog {
                1.0 / spec.c
            } else {
                1.0
            };
            let ratio_view = Scaled { inner: &model, factor };
            Ok(MethodRun {
                auroc: *trace.auroc.last().expect("per-epoch auroc"),
                l2: population_l2_sq(&ratio_view, problem, l2_method)?.value,
                e_de_r: trace.e_de_r.last().expect("per-epoch diag") * factor,
                trace: Some(trace),
            })
        }
        MethodSpec::KernelUlsif { lambda } => {
            let sigma = median_heuristic(&[&data.nu, &data.de])?;
            let b = cfg.get_usize("ulsif_basis")?.min(data.nu.len());
            let lam = match lambda {
                Some(l) => *l,
                None => baselines::ulsif_cv_lambda(
                    &data.nu,
                    &data.de,
                    sigma,
                    b,
                    &ULSIF_CV_GRID,
                    5,
                    s ^ 0xCF,
                )?,
            };
            let model = baselines::fit_ulsif_kernel(&data.nu, &data.de, sigma, lam, b)?;
            let scores = model.forward_batch(&data.eval_x)?;
            let sl = ScoredLabels::new(scores, data.eval_labels.clone())?;
            Ok(MethodRun {
                auroc: auroc(&sl)?,
                l2: population_l2_sq(&model, problem, l2_method)?.value,
                e_de_r: normalization_diag(&model, &data.holdout_de)?,
                trace: None,
            })
        }
        MethodSpec::KernelKliep => {
            let sigma = median_heuristic(&[&data.nu, &data.de])?;
            let b = cfg.get_usize("kliep_basis")?.min(data.nu.len());
            let fit = baselines::fit_kliep_kernel(
                &data.nu,
                &data.de,
                sigma,
                b,
                cfg.get_usize("kliep_iters")?,
                cfg.get_f64("kliep_step")?,
            )?;
            let scores = fit.model.forward_batch(&data.eval_x)?;
            let sl = ScoredLabels::new(scores, data.eval_labels.clone())?;
            Ok(MethodRun {
                auroc: auroc(&sl)?,
                l2: population_l2_sq(&fit.model, problem, l2_method)?.value,
                e_de_r: normalization_diag(&fit.model, &data.holdout_de)?,
                trace: None,
            })
        }
    }
}

fn mean_sd(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
