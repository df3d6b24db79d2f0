//! `ratiofit score`: evaluate a saved model on data rows.

use std::io::Write;

use ratiofit::apps::outlier_scores;
use ratiofit::bregman::{LossFamily, LossSpec};
use ratiofit::data::{read_samples_csv, Role};
use ratiofit::models::{load_model, RatioModel};
use ratiofit::numfmt::fmt_f64;
use ratiofit::{Error, Result};

use crate::ScoreArgs;

pub fn run(args: &ScoreArgs) -> Result<()> {
    let family: LossFamily = args.family.parse()?;
    let spec = LossSpec::new(family, args.c)?;
    let model = load_model(&args.model)?;
    let data = read_samples_csv(&args.data, Role::Denominator)?;
    if data.dim() != model.input_dim() {
        return Err(Error::Shape(format!(
            "data has d = {}, model expects d = {}",
            data.dim(),
            model.input_dim()
        )));
    }

    let scores = outlier_scores(&model, &spec, &data)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    for s in &scores {
        writeln!(out, "{}", fmt_f64(*s))?;
    }
    Ok(())
}
