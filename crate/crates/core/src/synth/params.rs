//! Text form of generator parameters, shared by metadata sidecars, config
//! files and command-line flags.

use crate::error::{Error, Result};

pub type Params = Vec<(String, String)>;

pub(crate) fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = match value.trim() {
        "inf" => f64::INFINITY,
        s => s
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("`{key}` expects a number, got `{value}`")))?,
    };
    if v.is_nan() {
        return Err(Error::InvalidSpec(format!("`{key}` is NaN")));
    }
    Ok(v)
}

pub(crate) fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("`{key}` expects a non-negative integer, got `{value}`")))
}

/// `lo:hi`, or a single value for a degenerate interval.
pub(crate) fn parse_range(key: &str, value: &str) -> Result<(f64, f64)> {
    match value.split_once(':') {
        Some((lo, hi)) => Ok((parse_f64(key, lo)?, parse_f64(key, hi)?)),
        None => {
            let v = parse_f64(key, value)?;
            Ok((v, v))
        }
    }
}

pub(crate) fn fmt_range((lo, hi): (f64, f64)) -> String {
    format!("{lo:?}:{hi:?}")
}
