pub mod bench;
pub mod covshift;
pub mod score;
pub mod train;

use std::path::Path;

use ratiofit::numfmt::fmt_f64;
use ratiofit::Result;

/// Render a float as a JSON value; non-finite becomes null.
pub fn json_num(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".to_string()
    }
}

/// Create the output directory once all computation has succeeded.
pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
