//! JSON matrix and triple files.
//!
//! A matrix file is `{"n": 2, "re": [[..], [..]], "im": [[..], [..]]}`;
//! `im` may be omitted for real matrices. A triple file adds
//! `"lambda": [re, im]` and `"v": [[re, im], ...]`.

use std::path::Path;

use eigenflow::{CMatrix, CVector, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

fn check_grid(name: &str, grid: &[Vec<f64>], n: usize) -> Result<(), CliError> {
    if grid.len() != n {
        return Err(CliError::input(format!("{name} has {} rows, expected {n}", grid.len())));
    }
    for (i, row) in grid.iter().enumerate() {
        if row.len() != n {
            return Err(CliError::input(format!(
                "{name} row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(CliError::input(format!("{name} row {i} entry {j} is not finite")));
        }
    }
    Ok(())
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<CMatrix, CliError> {
        let n = self.n;
        if n == 0 {
            return Err(CliError::input("n must be at least 1"));
        }
        check_grid("re", &self.re, n)?;
        if let Some(im) = &self.im {
            check_grid("im", im, n)?;
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |g| g[i][j]);
            C64::new(self.re[i][j], im)
        }))
    }

    pub fn from_matrix(a: &CMatrix) -> Self {
        let n = a.n();
        let re = (0..n).map(|i| a.row(i).iter().map(|z| z.re).collect()).collect();
        let im = (0..n).map(|i| a.row(i).iter().map(|z| z.im).collect()).collect();
        MatrixFile { n, re, im: Some(im) }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
    pub lambda: [f64; 2],
    pub v: Vec<[f64; 2]>,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_matrix(text: &str) -> Result<CMatrix, CliError> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(|e| CliError::input(format!("malformed matrix file: {e}")))?;
    file.to_matrix()
}

pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    parse_matrix(&read_text(path)?)
}

pub fn parse_triple(text: &str) -> Result<(CMatrix, C64, CVector), CliError> {
    let file: TripleFile =
        serde_json::from_str(text).map_err(|e| CliError::input(format!("malformed triple file: {e}")))?;
    let a = MatrixFile {
        n: file.n,
        re: file.re,
        im: file.im,
    }
    .to_matrix()?;
    if file.v.len() != file.n {
        return Err(CliError::input(format!("v has {} entries, expected {}", file.v.len(), file.n)));
    }
    let v = CVector::new(file.v.iter().map(|[re, im]| C64::new(*re, *im)).collect());
    if !v.all_finite() || !file.lambda.iter().all(|x| x.is_finite()) {
        return Err(CliError::input("lambda and v must be finite"));
    }
    if v.is_zero() {
        return Err(CliError::input("v must be nonzero"));
    }
    Ok((a, C64::new(file.lambda[0], file.lambda[1]), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_complex_files() {
        let a = parse_matrix(r#"{"n":2,"re":[[1,2],[3,4]]}"#).unwrap();
        assert_eq!(a[(1, 0)], C64::new(3.0, 0.0));
        let b = parse_matrix(r#"{"n":2,"re":[[1,2],[3,4]],"im":[[0,1],[0,0]]}"#).unwrap();
        assert_eq!(b[(0, 1)], C64::new(2.0, 1.0));
        let round = MatrixFile::from_matrix(&b).to_matrix().unwrap();
        assert_eq!(round, b);
    }

    #[test]
    fn ragged_rows_name_the_row() {
        let err = parse_matrix(r#"{"n":3,"re":[[1,2,3],[4,5],[6,7,8]]}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("row 1"), "{err}");
        let err = parse_matrix(r#"{"n":2,"re":[[1,2],[3,4]],"im":[[0,0],[1]]}"#).unwrap_err();
        assert!(err.to_string().contains("im row 1"), "{err}");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(parse_matrix(r#"{"n":0,"re":[]}"#).is_err());
        assert!(parse_matrix(r#"{"n":2,"re":[[1,2]]}"#).is_err());
        assert!(parse_matrix(r#"{"n":2,"re":[[1,2],[3,4]],"extra":1}"#).is_err());
        assert!(parse_matrix("not json").is_err());
    }

    #[test]
    fn triples() {
        let (a, l, v) = parse_triple(r#"{"n":2,"re":[[1,0],[0,-1]],"lambda":[1,0],"v":[[1,0],[0,0]]}"#).unwrap();
        assert_eq!(a.n(), 2);
        assert_eq!(l, C64::new(1.0, 0.0));
        assert_eq!(v[0], C64::new(1.0, 0.0));
        assert!(parse_triple(r#"{"n":2,"re":[[1,0],[0,-1]],"lambda":[1,0],"v":[[0,0],[0,0]]}"#).is_err());
    }
}
