//! JSON exchange helpers. Complex matrices are written as
//! `{"rows": r, "cols": c, "data": [[re, im], ...]}` in row-major order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMatrix, CVector, RMatrix, RVector};

#[derive(Serialize, Deserialize)]
struct ComplexMatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RealMatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn cmatrix_to_rows(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    data
}

pub fn cmatrix_from_rows(rows: usize, cols: usize, data: &[[f64; 2]]) -> Option<CMatrix> {
    if data.len() != rows * cols {
        return None;
    }
    Some(DMatrix::from_fn(rows, cols, |i, j| {
        let [re, im] = data[i * cols + j];
        Complex64::new(re, im)
    }))
}

pub mod cmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        ComplexMatrixRepr { rows: m.nrows(), cols: m.ncols(), data: cmatrix_to_rows(m) }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let r = ComplexMatrixRepr::deserialize(d)?;
        cmatrix_from_rows(r.rows, r.cols, &r.data)
            .ok_or_else(|| D::Error::custom(format!("expected {}x{} entries, got {}", r.rows, r.cols, r.data.len())))
    }
}

pub mod cvector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        let data: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        data.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let data = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVector::from_iterator(data.len(), data.iter().map(|[re, im]| Complex64::new(*re, *im))))
    }
}

pub mod rmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &RMatrix, s: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        RealMatrixRepr { rows: m.nrows(), cols: m.ncols(), data }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RMatrix, D::Error> {
        let r = RealMatrixRepr::deserialize(d)?;
        if r.data.len() != r.rows * r.cols {
            return Err(D::Error::custom("real matrix entry count mismatch"));
        }
        Ok(RMatrix::from_row_slice(r.rows, r.cols, &r.data))
    }
}

pub mod rvector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &RVector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RVector, D::Error> {
        Ok(RVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// `f64` lists where `null` stands for `+inf` (an absent cap).
pub mod uncapped {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let data: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        data.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let data = Vec::<Option<f64>>::deserialize(d)?;
        Ok(data.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}
