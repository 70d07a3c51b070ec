//! File formats: TOML experiment and problem descriptions, matrices as CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::harness::{gen_gaussian_operator, ExperimentConfig};
use crate::linops::{LinearMap, ProblemInstance};

fn toml_error(e: toml::de::Error) -> Error {
    Error::Parse(e.to_string().trim_end().to_string())
}

/// Experiments of a config file: either one experiment at top level, or one
/// `[section]` per experiment (returned in name order).
pub fn parse_experiments(text: &str) -> Result<Vec<(String, ExperimentConfig)>> {
    let table: toml::Table = text.parse().map_err(toml_error)?;
    let sectioned = !table.is_empty() && table.values().all(|v| v.is_table());
    let out = if sectioned {
        let map: BTreeMap<String, ExperimentConfig> = toml::from_str(text).map_err(toml_error)?;
        map.into_iter().collect()
    } else {
        vec![("experiment".to_string(), toml::from_str(text).map_err(toml_error)?)]
    };
    for (name, c) in &out {
        c.validate().map_err(|e| Error::Parse(format!("[{name}]: {e}")))?;
    }
    Ok(out)
}

/// Row-major CSV with a `rows,cols` header line followed by the dimensions.
pub fn matrix_to_csv(x: &DMatrix<f64>) -> String {
    let mut out = format!("rows,cols\n{},{}\n", x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols()).map(|j| format!("{:.16e}", x[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    if lines.next().map(|(_, l)| l.trim()) != Some("rows,cols") {
        return Err(Error::Parse("line 1: expected header `rows,cols`".into()));
    }
    let (ln, dims) = lines.next().ok_or_else(|| Error::Parse("missing dimension line".into()))?;
    let d: Vec<usize> = dims
        .split(',')
        .map(|v| v.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("line {}: bad dimensions", ln + 1)))?;
    let [rows, cols] = d[..] else {
        return Err(Error::Parse(format!("line {}: expected two dimensions", ln + 1)));
    };
    let mut x = DMatrix::zeros(rows, cols);
    let mut seen = 0;
    for (ln, line) in lines {
        if seen == rows {
            return Err(Error::Parse(format!("line {}: more than {rows} rows", ln + 1)));
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("line {}: bad number", ln + 1)))?;
        if vals.len() != cols {
            return Err(Error::Parse(format!("line {}: expected {cols} values, got {}", ln + 1, vals.len())));
        }
        for (j, v) in vals.into_iter().enumerate() {
            x[(seen, j)] = v;
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse(format!("expected {rows} rows, got {seen}")));
    }
    Ok(x)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    matrix_from_csv(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// Seeded Gaussian operator with `l` rows.
    Gaussian { l: usize, seed: u64 },
    /// Explicit `[row, col]` entries.
    Sampling { indices: Vec<[usize; 2]> },
    /// Dense `l x nm` matrix in a matrix CSV file.
    Dense { path: String },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    pub operator: OperatorSpec,
    /// Measurements; mutually exclusive with `reference`.
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    /// Matrix CSV of a planted solution; `y` is computed from it.
    #[serde(default)]
    pub reference: Option<String>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(toml_error)
    }

    /// Build the instance, resolving relative paths against `dir`.
    pub fn instance(&self, dir: &Path) -> Result<ProblemInstance> {
        let (n, m) = (self.n, self.m);
        let map = match &self.operator {
            OperatorSpec::Gaussian { l, seed } => gen_gaussian_operator(n, m, *l, *seed)?,
            OperatorSpec::Sampling { indices } => LinearMap::sampling(n, m, indices.iter().map(|&[i, j]| (i, j)).collect())?,
            OperatorSpec::Dense { path } => LinearMap::dense(n, m, read_matrix(&dir.join(path))?)?,
        };
        match (&self.y, &self.reference) {
            (Some(y), None) => ProblemInstance::new(map, DVector::from_column_slice(y)),
            (None, Some(path)) => {
                let x = read_matrix(&dir.join(path))?;
                let rank = crate::harness::rank_eps(&x, crate::harness::RANK_EPS);
                ProblemInstance::from_reference(map, x, rank, 0)
            }
            _ => Err(Error::Parse("set exactly one of `y` and `reference`".into())),
        }
    }
}

/// Compact trace table: one line per recorded iteration.
pub fn trace_to_csv(rows: &[(usize, f64, f64, f64)]) -> String {
    let mut out = String::from("iteration,gamma,residual,step\n");
    for (i, g, r, s) in rows {
        let _ = writeln!(out, "{i},{g:.16e},{r:.16e},{s:.16e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let x = DMatrix::from_fn(3, 4, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0) - 0.1);
        let text = matrix_to_csv(&x);
        assert!(text.starts_with("rows,cols\n3,4\n"));
        assert_eq!(matrix_from_csv(&text).unwrap(), x);
        assert!(matrix_from_csv("rows,cols\n2,2\n1,2\n").is_err());
        assert!(matrix_from_csv("rows,cols\n1,2\n1,x\n").is_err());
    }

    #[test]
    fn experiment_configs() {
        let one = "n = 12\nm = 12\nr = 3\nl = 64\noperator = \"gaussian\"\nsolver = \"irls\"\np = 0.0\ntrials = 5\nk_max = 2\nbase_seed = 7\n";
        let parsed = parse_experiments(one).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].1.nu0, 1.2);
        let two = format!("[b]\n{one}\n[a]\n{}", one.replace("l = 64", "c_mf = 2.0"));
        let parsed = parse_experiments(&two).unwrap();
        assert_eq!(parsed.iter().map(|p| p.0.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        let err = parse_experiments(&one.replace("trials = 5", "trails = 5")).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        assert!(parse_experiments(&one.replace("trials = 5", "trials = 0")).is_err());
    }

    #[test]
    fn problem_files() {
        let text = "n = 2\nm = 2\ny = [1.0, 2.0]\n[operator]\nkind = \"sampling\"\nindices = [[0, 0], [1, 1]]\n";
        let p = ProblemFile::parse(text).unwrap().instance(Path::new(".")).unwrap();
        assert_eq!(p.map.samples().unwrap(), &[(0, 0), (1, 1)]);
        let text = "n = 2\nm = 2\n[operator]\nkind = \"gaussian\"\nl = 3\nseed = 1\n";
        assert!(ProblemFile::parse(text).unwrap().instance(Path::new(".")).is_err());
    }
}
