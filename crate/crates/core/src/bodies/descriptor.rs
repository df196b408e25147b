//! JSON body descriptors and header-free CSV matrices.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConvexBody;
use crate::error::{invalid, Result};
use crate::linalg::Matrix;

fn one() -> f64 {
    1.0
}

/// A matrix given inline (list of rows) or as a path to a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Path(String),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSource {
    pub fn load(&self, base_dir: &Path) -> Result<Matrix> {
        match self {
            MatrixSource::Path(p) => load_matrix_csv(base_dir.join(p)),
            MatrixSource::Rows(rows) => rows_to_matrix(rows),
        }
    }
}

/// JSON description of a body, e.g. `{"kind": "l1", "dim": 64, "radius": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyDescriptor {
    #[serde(alias = "euclidean")]
    L2 {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    L1 {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    #[serde(alias = "linf")]
    Cube {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipsoid { semi_axes: Vec<f64> },
    Polytope { vertices: MatrixSource },
    IntersectionL1L2 { dim: usize, rho: f64 },
    Image { base: Box<BodyDescriptor>, matrix: MatrixSource },
    Cap { base: Box<BodyDescriptor>, r: f64 },
}

impl BodyDescriptor {
    /// Builds the body; relative matrix paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<ConvexBody> {
        match self {
            BodyDescriptor::L2 { dim, radius } => ConvexBody::euclidean_ball(*dim, *radius),
            BodyDescriptor::L1 { dim, radius } => ConvexBody::l1_ball(*dim, *radius),
            BodyDescriptor::Cube { dim, radius } => ConvexBody::cube(*dim, *radius),
            BodyDescriptor::Ellipsoid { semi_axes } => ConvexBody::ellipsoid(semi_axes.clone()),
            BodyDescriptor::Polytope { vertices } => ConvexBody::polytope(vertices.load(base_dir)?),
            BodyDescriptor::IntersectionL1L2 { dim, rho } => ConvexBody::intersection_l1_l2(*dim, *rho),
            BodyDescriptor::Image { base, matrix } => {
                ConvexBody::linear_image(base.build(base_dir)?, matrix.load(base_dir)?)
            }
            BodyDescriptor::Cap { base, r } => ConvexBody::cap(base.build(base_dir)?, *r),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(invalid("matrix must have at least one row and one column"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(invalid(format!("matrix row {} has {} entries, expected {ncols}", i + 1, rows[i].len())));
    }
    Ok(Matrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

/// Reads a row-major, header-free CSV matrix.
pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path.as_ref())?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    invalid(format!("{}: line {}: cannot parse {field:?}: {e}", path.as_ref().display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    rows_to_matrix(&rows)
}

/// Writes a matrix as row-major, header-free CSV. Values round-trip exactly.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.row_iter() {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}
