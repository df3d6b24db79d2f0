//! `ratiofit train`: fit a ratio model on two sample CSVs.

use std::io::Write;

use ratiofit::bregman::{LossFamily, LossSpec};
use ratiofit::data::{read_samples_csv, Role};
use ratiofit::evalkit::normalization_diag;
use ratiofit::models::save_model;
use ratiofit::risk::CorrectionFn;
use ratiofit::trainer::{train, Holdout, Penalty, TrainConfig};
use ratiofit::{Error, Result};

use crate::commands::{ensure_out_dir, json_num};
use crate::config::{RunConfig, SchemaEntry};
use crate::specs::parse_model;
use crate::TrainArgs;

pub const SCHEMA: &[SchemaEntry] = &[
    ("family", None),
    ("c", None),
    ("pu_epsilon", Some("1e-6")),
    ("model", None),
    ("lr", Some("1e-3")),
    ("beta1", Some("0.9")),
    ("beta2", Some("0.999")),
    ("adam_eps", Some("1e-8")),
    ("lambda", Some("0.0")),
    ("penalty", Some("l2")),
    ("batch_nu", Some("64")),
    ("batch_de", Some("64")),
    ("epochs", Some("100")),
    ("seed", Some("0")),
    ("shuffle", Some("true")),
    ("wrap", Some("true")),
    ("correction", Some("relu")),
    // Optional CSV of held-out denominator samples for the E_de[r] diagnostic.
    ("holdout_de", Some("")),
];

/// Shared training hyperparameters; the correction is command-specific
/// (`train` reads its `correction` key, the experiment commands set it per
/// method) and defaults to relu here.
pub fn train_config_from(cfg: &RunConfig) -> Result<TrainConfig> {
    Ok(TrainConfig {
        learning_rate: cfg.get_f64("lr")?,
        beta1: cfg.get_f64("beta1")?,
        beta2: cfg.get_f64("beta2")?,
        adam_eps: cfg.get_f64("adam_eps")?,
        lambda: cfg.get_f64("lambda")?,
        penalty: cfg.get("penalty").parse::<Penalty>()?,
        batch_size_nu: cfg.get_usize("batch_nu")?,
        batch_size_de: cfg.get_usize("batch_de")?,
        epochs: cfg.get_usize("epochs")?,
        seed: cfg.get_u64("seed")?,
        shuffle: cfg.get_bool("shuffle")?,
        wrap: cfg.get_bool("wrap")?,
        correction: CorrectionFn::Relu,
    })
}

pub fn loss_spec_from(cfg: &RunConfig) -> Result<LossSpec> {
    let family: LossFamily = cfg.get("family").parse()?;
    LossSpec::with_pu_epsilon(family, cfg.get_f64("c")?, cfg.get_f64("pu_epsilon")?)
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref(), &args.set, SCHEMA)?;
    let spec = loss_spec_from(&cfg)?;
    let mut train_cfg = train_config_from(&cfg)?;
    train_cfg.correction = cfg.get("correction").parse::<CorrectionFn>()?;
    train_cfg.validate()?;

    let nu = read_samples_csv(&args.nu, Role::Numerator)?;
    let de = read_samples_csv(&args.de, Role::Denominator)?;
    if nu.dim() != de.dim() {
        return Err(Error::Shape(format!(
            "numerator has d = {}, denominator has d = {}",
            nu.dim(),
            de.dim()
        )));
    }

    let holdout = match cfg.get("holdout_de") {
        "" => None,
        path => {
            let de_holdout = read_samples_csv(path.as_ref(), Role::Denominator)?;
            if de_holdout.dim() != de.dim() {
                return Err(Error::Shape(format!(
                    "holdout has d = {}, training data has d = {}",
                    de_holdout.dim(),
                    de.dim()
                )));
            }
            Some(Holdout::new(de_holdout))
        }
    };

    let mut model = parse_model(cfg.get("model"), nu.dim(), train_cfg.seed)?;
    let trace = train(&mut model, &spec, &nu, &de, &train_cfg, holdout.as_ref())?;

    // Diagnostics for metrics.json: final risk from the trace; the
    // normalization diagnostic prefers the holdout, falling back to the
    // training denominator data.
    let final_risk = *trace.risk.last().expect("at least one epoch");
    let e_de_r = match &holdout {
        Some(_) => *trace.e_de_r.last().expect("trace"),
        None => normalization_diag(&model, &de)?,
    };

    ensure_out_dir(&args.out)?;
    save_model(&args.out.join("model.json"), &model)?;
    trace.write_csv(&args.out.join("trace.csv"))?;
    std::fs::write(args.out.join("config.resolved"), cfg.resolved_text())?;
    write_metrics(
        &args.out.join("metrics.json"),
        final_risk,
        e_de_r,
        f64::NAN,
        f64::NAN,
        f64::NAN,
    )?;
    Ok(())
}

pub fn write_metrics(
    path: &std::path::Path,
    final_risk: f64,
    e_de_r: f64,
    auroc: f64,
    l2_error: f64,
    l2_se: f64,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{{")?;
    writeln!(out, "  \"final_risk\": {},", json_num(final_risk))?;
    writeln!(out, "  \"e_de_r\": {},", json_num(e_de_r))?;
    writeln!(out, "  \"auroc\": {},", json_num(auroc))?;
    writeln!(out, "  \"l2_error\": {},", json_num(l2_error))?;
    writeln!(out, "  \"l2_se\": {}", json_num(l2_se))?;
    writeln!(out, "}}")?;
    Ok(())
}
