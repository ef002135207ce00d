//! Portable matrix encodings: the "LSOP" little-endian binary layout and a
//! JSON form (rows of [re, im] pairs) for small matrices.

use faer::{c64, Mat};

use super::dense::CMat;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LSOP";
pub const VERSION: u32 = 1;
const HEADER: usize = 16;
/// Largest dimension accepted by the decoder.
pub const MAX_DECODE_DIM: u64 = 1 << 14;

/// Header (magic, u32 version, u64 dim) followed by row-major interleaved re/im f64.
pub fn encode_lsop(m: &CMat) -> Result<Vec<u8>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::domain("only square matrices are encoded"));
    }
    let mut out = Vec::with_capacity(HEADER + n * n * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_lsop(bytes: &[u8]) -> Result<CMat> {
    if bytes.len() < HEADER {
        return Err(Error::Decode(format!("need {HEADER} header bytes, got {}", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Decode("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Decode(format!("unsupported version {version}")));
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if dim > MAX_DECODE_DIM {
        return Err(Error::Decode(format!("dimension {dim} exceeds {MAX_DECODE_DIM}")));
    }
    let n = dim as usize;
    let payload = &bytes[HEADER..];
    if payload.len() != n * n * 16 {
        return Err(Error::Decode(format!(
            "payload has {} bytes, dimension {n} needs {}",
            payload.len(),
            n * n * 16
        )));
    }
    let f = |k: usize| f64::from_le_bytes(payload[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let m = Mat::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        c64::new(f(k), f(k + 1))
    });
    if m.as_ref().norm_max().is_nan() {
        return Err(Error::Decode("non-finite entry".into()));
    }
    Ok(m)
}

/// Square matrix from JSON rows of [re, im] pairs (or plain reals).
pub fn matrix_from_json(v: &serde_json::Value) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Validation("matrix must be an array of rows".into()))?;
    let n = rows.len();
    let mut m = Mat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Validation(format!("matrix row {i} is not an array")))?;
        if row.len() != n {
            return Err(Error::Validation(format!(
                "matrix row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = entry_from_json(e)
                .ok_or_else(|| Error::Validation(format!("matrix entry ({i},{j}) is not a number or [re, im]")))?;
        }
    }
    Ok(m)
}

fn entry_from_json(e: &serde_json::Value) -> Option<c64> {
    match e {
        serde_json::Value::Number(x) => Some(c64::new(x.as_f64()?, 0.0)),
        serde_json::Value::Array(p) if p.len() == 2 => {
            Some(c64::new(p[0].as_f64()?, p[1].as_f64()?))
        }
        _ => None,
    }
}

pub fn matrix_to_json(m: &CMat) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = (0..m.nrows())
        .map(|i| {
            serde_json::Value::Array(
                (0..m.ncols())
                    .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                    .collect(),
            )
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Serde adapter for `CMat` fields.
pub mod cmat_json {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        matrix_from_json(&v).map_err(serde::de::Error::custom)
    }
}
