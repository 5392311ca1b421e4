//! State files: `{"dims": [...], "re": [[...]], "im": [[...]]}`, row-major.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{ComplexMatrix, DensityOperator, MultipartiteState};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Parses a raw matrix plus its dims without any positivity checks.
pub fn parse_matrix_json(text: &str) -> Result<(Vec<usize>, ComplexMatrix)> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Format("top level must be an object".into()))?;
    // keep only the three schema fields; witness files carry extra metadata
    let mut core = serde_json::Map::new();
    for key in ["dims", "re", "im"] {
        let v = obj
            .get(key)
            .ok_or_else(|| Error::Format(format!("missing field `{key}`")))?;
        core.insert(key.to_string(), v.clone());
    }
    let file: StateFile =
        serde_json::from_value(serde_json::Value::Object(core)).map_err(|e| Error::Format(e.to_string()))?;
    let n = file.re.len();
    if file.im.len() != n {
        return Err(Error::Format(format!("`im` has {} rows, `re` has {n}", file.im.len())));
    }
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        if file.re[i].len() != n {
            return Err(Error::Format(format!(
                "`re` row {i} has {} entries, expected {n}",
                file.re[i].len()
            )));
        }
        if file.im[i].len() != n {
            return Err(Error::Format(format!(
                "`im` row {i} has {} entries, expected {n}",
                file.im[i].len()
            )));
        }
        for j in 0..n {
            entries.push(Complex64::new(file.re[i][j], file.im[i][j]));
        }
    }
    let total: usize = file.dims.iter().product();
    if file.dims.is_empty() || total != n {
        return Err(Error::Format(format!(
            "`dims` {:?} multiply to {total}, matrix is {n}x{n}",
            file.dims
        )));
    }
    Ok((file.dims, ComplexMatrix::from_row_major(n, n, &entries)?))
}

pub fn parse_state_json(text: &str) -> Result<MultipartiteState> {
    let (dims, m) = parse_matrix_json(text)?;
    MultipartiteState::new(DensityOperator::from_matrix(m)?, dims)
}

pub fn read_state(path: impl AsRef<Path>) -> Result<MultipartiteState> {
    parse_state_json(&std::fs::read_to_string(path)?)
}

/// Serializes with 17 significant digits per entry.
pub fn matrix_to_json(dims: &[usize], m: &ComplexMatrix) -> String {
    matrix_to_json_with(dims, m, &[])
}

/// Like [`matrix_to_json`], appending extra numeric fields.
pub fn matrix_to_json_with(dims: &[usize], m: &ComplexMatrix, extra: &[(&str, f64)]) -> String {
    let mut s = String::new();
    let dims_s: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    write!(s, "{{\"dims\": [{}]", dims_s.join(", ")).unwrap();
    for (key, part) in [("re", 0usize), ("im", 1)] {
        write!(s, ",\n \"{key}\": [").unwrap();
        for i in 0..m.rows() {
            let row: Vec<String> = (0..m.cols())
                .map(|j| {
                    let z = m.get(i, j);
                    fmt17(if part == 0 { z.re } else { z.im })
                })
                .collect();
            let sep = if i + 1 < m.rows() { "," } else { "" };
            write!(s, "\n  [{}]{sep}", row.join(", ")).unwrap();
        }
        s.push_str("\n ]");
    }
    for (k, v) in extra {
        write!(s, ",\n \"{k}\": {}", fmt17(*v)).unwrap();
    }
    s.push_str("\n}\n");
    s
}

pub fn state_to_json(state: &MultipartiteState) -> String {
    matrix_to_json(state.dims(), state.state().matrix())
}

pub fn write_state(path: impl AsRef<Path>, state: &MultipartiteState) -> Result<()> {
    std::fs::write(path, state_to_json(state))?;
    Ok(())
}

/// Seventeen significant digits in scientific notation (valid JSON).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_density;

    #[test]
    fn round_trip_is_bit_exact() {
        let s = random_density(&[2, 3], 4, 99).unwrap();
        let text = state_to_json(&s);
        let back = parse_state_json(&text).unwrap();
        assert_eq!(back.dims(), s.dims());
        assert_eq!(back.state().matrix(), s.state().matrix());
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_state_json(r#"{"dims":[2],"re":[[1,0],[0,0]]}"#).unwrap_err();
        assert!(e.to_string().contains("`im`"), "{e}");
        let e = parse_state_json(r#"{"dims":[2],"re":[[1,0],[0]],"im":[[0,0],[0,0]]}"#).unwrap_err();
        assert!(e.to_string().contains("`re` row 1"), "{e}");
        let e = parse_state_json(r#"{"dims":[3],"re":[[1,0],[0,0]],"im":[[0,0],[0,0]]}"#).unwrap_err();
        assert!(e.to_string().contains("`dims`"), "{e}");
    }
}
