//! Serde adapter writing an `Array2<f64>` as `{rows, cols, data}` with
//! `data` in row-major order. Nested row arrays are accepted on input.

use ndarray::Array2;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
    Dense {
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.iter().copied().collect(),
    }
    .serialize(s)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyMatrix {
    Dense(Dense),
    Rows(Vec<Vec<f64>>),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
    let dense = match AnyMatrix::deserialize(d)? {
        AnyMatrix::Dense(dense) => dense,
        AnyMatrix::Rows(rows) => {
            let cols = rows.first().map_or(0, Vec::len);
            if let Some(r) = rows.iter().position(|r| r.len() != cols) {
                return Err(D::Error::custom(format!(
                    "matrix row {r} has {} entries, expected {cols}",
                    rows[r].len()
                )));
            }
            Dense {
                rows: rows.len(),
                cols,
                data: rows.concat(),
            }
        }
    };
    if dense.rows * dense.cols != dense.data.len() {
        return Err(D::Error::custom(format!(
            "matrix {}x{} has {} entries",
            dense.rows,
            dense.cols,
            dense.data.len()
        )));
    }
    Array2::from_shape_vec((dense.rows, dense.cols), dense.data).map_err(D::Error::custom)
}
