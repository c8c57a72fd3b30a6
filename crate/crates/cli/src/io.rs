//! Plain numeric CSV in and out, plus the scatter-matrix file format.

use std::fs;
use std::path::Path;

use sephill::{SampleMatrix, SquareMatrix};

use crate::error::{CliError, CliResult};
use crate::format::fmt17;

/// Relative asymmetry tolerated in a scatter file before it is rejected.
pub const SIGMA_SYMMETRY_TOL: f64 = 1e-9;

fn parse_row(line: &str, lineno: usize, source: &str) -> CliResult<Vec<f64>> {
    line.split(',')
        .map(|field| {
            let field = field.trim();
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::config(format!(
                    "{source}:{lineno}: not a finite number: {field:?}"
                ))),
            }
        })
        .collect()
}

/// Parses comma-separated rows.
///
/// Blank lines are ignored; a first line that does not start with a number is
/// taken as a header and skipped.
pub fn parse_csv(text: &str, source: &str) -> CliResult<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            let first = line.split(',').next().unwrap_or("").trim();
            if first.parse::<f64>().is_err() {
                continue;
            }
        }
        let row = parse_row(line, i + 1, source)?;
        if let Some(prev) = rows.first() {
            if prev.len() != row.len() {
                return Err(CliError::config(format!(
                    "{source}:{}: expected {} columns, found {}",
                    i + 1,
                    prev.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_sample(path: &Path) -> CliResult<SampleMatrix> {
    let rows = parse_csv(&read_text(path)?, &path.display().to_string())?;
    if rows.is_empty() {
        return Err(CliError::config(format!("{}: no data rows", path.display())));
    }
    Ok(SampleMatrix::from_rows(&rows)?)
}

/// Loads a scatter matrix: `identity` or a file of `d` rows of `d` values.
pub fn load_sigma(spec: &str, dim: Option<usize>) -> CliResult<SquareMatrix> {
    if spec == "identity" {
        let d = dim.ok_or_else(|| {
            CliError::config("--sigma identity needs the dimension (from --dim, --mu or the data)")
        })?;
        return Ok(SquareMatrix::identity(d));
    }
    let path = Path::new(spec);
    let rows = parse_csv(&read_text(path)?, spec)?;
    let m = SquareMatrix::from_rows(&rows)
        .map_err(|e| CliError::config(format!("--sigma {spec}: {e}")))?;
    if let Some(d) = dim {
        if m.dim() != d {
            return Err(CliError::config(format!(
                "--sigma {spec}: expected a {d}x{d} matrix, found {0}x{0}",
                m.dim()
            )));
        }
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    if m.asymmetry() > SIGMA_SYMMETRY_TOL * scale {
        return Err(CliError::config(format!(
            "--sigma {spec}: matrix is not symmetric (max |s_ij - s_ji| = {})",
            m.asymmetry()
        )));
    }
    Ok(m.symmetrized())
}

/// Parses a comma list of finite numbers for the flag `flag`.
pub fn parse_list(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::config(format!("{flag}: not a finite number: {s:?}")))
        })
        .collect()
}

pub fn parse_usize_list(flag: &str, text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("{flag}: not a non-negative integer: {s:?}")))
        })
        .collect()
}

/// Renders rows as CSV with 17 significant digits and LF endings.
pub fn format_rows<'a, I>(rows: I, header: Option<&[String]>) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in rows {
        let fields: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header_and_blank_lines() {
        let rows = parse_csv("x1,x2\n1,2\n\n3.5,-4e-3\n", "t").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.5, -4e-3]]);
    }

    #[test]
    fn csv_rejects_ragged_and_non_numeric() {
        assert!(matches!(parse_csv("1,2\n3\n", "t"), Err(CliError::Config(_))));
        assert!(matches!(parse_csv("1,2\n3,x\n", "t"), Err(CliError::Config(_))));
        assert!(matches!(parse_csv("1,NaN\n", "t"), Err(CliError::Config(_))));
    }

    #[test]
    fn sigma_file_is_symmetrised() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "2,0.5\n0.5000000000001,1\n").unwrap();
        let s = load_sigma(p.to_str().unwrap(), Some(2)).unwrap();
        assert_eq!(s.asymmetry(), 0.0);
        fs::write(&p, "2,0.5\n0.6,1\n").unwrap();
        assert!(matches!(load_sigma(p.to_str().unwrap(), Some(2)), Err(CliError::Config(_))));
        assert!(matches!(load_sigma(p.to_str().unwrap(), Some(3)), Err(CliError::Config(_))));
        assert!(matches!(
            load_sigma(dir.path().join("missing").to_str().unwrap(), Some(2)),
            Err(CliError::Io { .. })
        ));
    }

    #[test]
    fn rows_render_with_lf() {
        let rows = [vec![1.0, 0.5]];
        let s = format_rows(rows.iter().map(|r| r.as_slice()), Some(&["a".into(), "b".into()]));
        assert_eq!(s, "a,b\n1.0000000000000000,0.50000000000000000\n");
    }
}
