//! File formats: matrices as `{"n":…,"re":[[…]],"im":[[…]]}` JSON and
//! spectra as `re,im` CSV lines, both written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::eigen::Spectrum;
use crate::error::{ChmError, Result};
use crate::matrix::{CMatrix, C64};

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_rows(out: &mut String, h: &CMatrix, part: impl Fn(&C64) -> f64) {
    out.push('[');
    for j in 0..h.rows() {
        if j > 0 {
            out.push(',');
        }
        out.push('[');
        for (k, z) in h.row(j).iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&fmt17(part(z)));
        }
        out.push(']');
    }
    out.push(']');
}

pub fn matrix_to_json(h: &CMatrix) -> Result<String> {
    let n = h.ensure_square()?;
    h.ensure_finite()?;
    let mut out = String::with_capacity(64 * n * n);
    let _ = write!(out, "{{\"n\":{n},\"re\":");
    push_rows(&mut out, h, |z| z.re);
    out.push_str(",\"im\":");
    push_rows(&mut out, h, |z| z.im);
    out.push('}');
    Ok(out)
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    matrix_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, h: &CMatrix) -> Result<()> {
    let mut text = matrix_to_json(h)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn spectrum_to_csv(s: &Spectrum) -> String {
    s.values().iter().map(|z| format!("{},{}\n", fmt17(z.re), fmt17(z.im))).collect()
}

pub fn spectrum_from_csv(text: &str) -> Result<Spectrum> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse = |field: Option<&str>| -> Result<f64> {
            field
                .map(str::trim)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| ChmError::Parse(format!("line {}: expected `re,im`, got {line:?}", i + 1)))
        };
        let mut fields = line.split(',');
        let (re, im) = (parse(fields.next())?, parse(fields.next())?);
        if fields.next().is_some() {
            return Err(ChmError::Parse(format!("line {}: too many fields in {line:?}", i + 1)));
        }
        values.push(C64::new(re, im));
    }
    Spectrum::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigenvalues;
    use crate::families::{gen_haagerup, gen_tao, OmegaBranch};
    use crate::matrix::cis;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let h = gen_haagerup(cis(0.3)).unwrap();
        let text = matrix_to_json(&h).unwrap();
        assert!(text.starts_with("{\"n\":6,\"re\":[["));
        let back = matrix_from_json(&text).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn ragged_and_malformed_rejected() {
        assert!(matrix_from_json(r#"{"n":2,"re":[[1,1],[1]],"im":[[0,0],[0,0]]}"#).is_err());
        assert!(matrix_from_json(r#"{"n":3,"re":[[1,1],[1,1]],"im":[[0,0],[0,0]]}"#).is_err());
        assert!(matrix_from_json("{\"n\":2,").is_err());
    }

    #[test]
    fn spectrum_round_trip() {
        let s = eigenvalues(&gen_tao(OmegaBranch::First)).unwrap();
        let csv = spectrum_to_csv(&s);
        assert_eq!(csv.lines().count(), 6);
        assert_eq!(spectrum_from_csv(&csv).unwrap(), s);
        assert!(spectrum_from_csv("1.0\n").is_err());
        assert!(spectrum_from_csv("1,2,3\n").is_err());
    }
}
