//! Serde adapters writing complex values as `[re, im]` pairs, vectors as
//! arrays of pairs and matrices as arrays of rows.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{CMat, CVec, C64};

pub fn c64_to_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn pair_to_c64(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

pub fn cvec_to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|&z| c64_to_pair(z)).collect()
}

pub fn pairs_to_cvec(p: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(p.len(), p.iter().map(|&q| pair_to_c64(q)))
}

pub fn cmat_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| c64_to_pair(m[(i, j)])).collect())
        .collect()
}

pub fn rows_to_cmat(rows: &[Vec<[f64; 2]>]) -> Result<CMat, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".to_string());
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| pair_to_c64(rows[i][j])))
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        c64_to_pair(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        <[f64; 2]>::deserialize(d).map(pair_to_c64)
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        cvec_to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        Vec::<[f64; 2]>::deserialize(d).map(|p| pairs_to_cvec(&p))
    }
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        cmat_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        rows_to_cmat(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod matrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<_> = ms.iter().map(cmat_to_rows).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        let all = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        all.iter()
            .map(|r| rows_to_cmat(r).map_err(serde::de::Error::custom))
            .collect()
    }
}
