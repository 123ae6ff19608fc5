//! File formats: CSV series, key-value model and problem files, SVG plots.

mod model_file;
mod plot;
mod problem;
mod series;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use model_file::{read_model, write_model, ModelFile};
pub use plot::{emit_plot, render_svg, PlotLabels};
pub use problem::read_problem;
pub use series::{read_controls, read_series, read_table, write_series, SeriesTable};

/// Shortest `%.17g`-style rendering: 17 significant digits with trailing
/// zeros removed, scientific notation outside `1e-5 ≤ |x| < 1e17`.
///
/// Parsing the output with `str::parse::<f64>` returns the same bits.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_rendering() {
        assert_eq!(format_g17(16.0), "16");
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(-0.0), "0");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(2.5), "2.5");
        assert_eq!(format_g17(-(2.0_f64.powi(-30))), "-9.3132257461547852e-10");
        assert_eq!(format_g17(1e20), "1e20");
        assert_eq!(format_g17(123456.0), "123456");
    }

    #[test]
    fn g17_is_lossless() {
        for x in [
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02214076e23,
            5e-324,
            f64::MAX,
            -2.0_f64.ln(),
            1e-5,
            9.999999999999999e16,
        ] {
            let s = format_g17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }
}
