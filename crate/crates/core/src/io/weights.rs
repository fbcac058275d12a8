//! JSON weights file: named arrays with explicit shapes and row-major
//! values, covering the GRU gates, both attention parameter sets, the time
//! encoder, and (optionally) the LUT with its fused products.

use crate::attention::{OutputTransform, SimplifiedAttnParams, VanillaAttnParams};
use crate::config::Dims;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::memory_update::GruParams;
use crate::params::ModelParams;
use crate::time_encoding::{CosineEncoderParams, TimeLut};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NamedArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl NamedArray {
    fn matrix(m: &Mat<f64>) -> Self {
        NamedArray {
            shape: vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        }
    }

    fn vector(v: &[f64]) -> Self {
        NamedArray {
            shape: vec![v.len()],
            data: v.to_vec(),
        }
    }

    fn table(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        NamedArray {
            shape: vec![rows.len(), cols],
            data: rows.iter().flatten().copied().collect(),
        }
    }
}

/// Serialized document. `arrays` keys follow the fixed schema below; the
/// map is ordered so serialization is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc {
    dims: Dims,
    n: usize,
    arrays: BTreeMap<String, NamedArray>,
}

const GRU_NAMES: [&str; 12] = [
    "gru.w_ir", "gru.w_hr", "gru.b_ir", "gru.b_hr", "gru.w_iz", "gru.w_hz", "gru.b_iz",
    "gru.b_hz", "gru.w_in", "gru.w_hn", "gru.b_in", "gru.b_hn",
];
const ATTN_NAMES: [&str; 8] = [
    "attn.w_s", "attn.b_s", "attn.w_q", "attn.b_q", "attn.w_k", "attn.b_k", "attn.w_v",
    "attn.b_v",
];
const OTHER_NAMES: [&str; 8] = [
    "sat.a", "sat.w_t", "out.w", "out.b", "time.omega", "time.phi", "lut.boundaries",
    "lut.entries",
];
const LUT_FUSED_PREFIX: &str = "lut.fused.";

fn known_name(name: &str) -> bool {
    GRU_NAMES.contains(&name)
        || ATTN_NAMES.contains(&name)
        || OTHER_NAMES.contains(&name)
        || name.starts_with(LUT_FUSED_PREFIX)
}

pub fn to_json(params: &ModelParams, dims: &Dims, n: usize) -> Result<String> {
    params.validate(dims, n)?;
    let mut arrays = BTreeMap::new();
    let g = &params.gru;
    arrays.insert("gru.w_ir".into(), NamedArray::matrix(&g.w_ir));
    arrays.insert("gru.w_hr".into(), NamedArray::matrix(&g.w_hr));
    arrays.insert("gru.b_ir".into(), NamedArray::vector(&g.b_ir));
    arrays.insert("gru.b_hr".into(), NamedArray::vector(&g.b_hr));
    arrays.insert("gru.w_iz".into(), NamedArray::matrix(&g.w_iz));
    arrays.insert("gru.w_hz".into(), NamedArray::matrix(&g.w_hz));
    arrays.insert("gru.b_iz".into(), NamedArray::vector(&g.b_iz));
    arrays.insert("gru.b_hz".into(), NamedArray::vector(&g.b_hz));
    arrays.insert("gru.w_in".into(), NamedArray::matrix(&g.w_in));
    arrays.insert("gru.w_hn".into(), NamedArray::matrix(&g.w_hn));
    arrays.insert("gru.b_in".into(), NamedArray::vector(&g.b_in));
    arrays.insert("gru.b_hn".into(), NamedArray::vector(&g.b_hn));
    let a = &params.attn;
    arrays.insert("attn.w_s".into(), NamedArray::matrix(&a.w_s));
    arrays.insert("attn.b_s".into(), NamedArray::vector(&a.b_s));
    arrays.insert("attn.w_q".into(), NamedArray::matrix(&a.w_q));
    arrays.insert("attn.b_q".into(), NamedArray::vector(&a.b_q));
    arrays.insert("attn.w_k".into(), NamedArray::matrix(&a.w_k));
    arrays.insert("attn.b_k".into(), NamedArray::vector(&a.b_k));
    arrays.insert("attn.w_v".into(), NamedArray::matrix(&a.w_v));
    arrays.insert("attn.b_v".into(), NamedArray::vector(&a.b_v));
    arrays.insert("sat.a".into(), NamedArray::vector(&params.sat.a));
    arrays.insert("sat.w_t".into(), NamedArray::matrix(&params.sat.w_t));
    arrays.insert("out.w".into(), NamedArray::matrix(&params.output.w));
    arrays.insert("out.b".into(), NamedArray::vector(&params.output.b));
    arrays.insert("time.omega".into(), NamedArray::vector(&params.encoder.omega));
    arrays.insert("time.phi".into(), NamedArray::vector(&params.encoder.phi));
    if let Some(lut) = &params.lut {
        arrays.insert("lut.boundaries".into(), NamedArray::vector(&lut.boundaries));
        arrays.insert("lut.entries".into(), NamedArray::table(&lut.entries));
        for (consumer, rows) in &lut.fused {
            arrays.insert(format!("{LUT_FUSED_PREFIX}{consumer}"), NamedArray::table(rows));
        }
    }
    let doc = WeightsDoc {
        dims: *dims,
        n,
        arrays,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::WeightsSchema(e.to_string()))
}

struct ArrayReader {
    arrays: BTreeMap<String, NamedArray>,
}

impl ArrayReader {
    fn take(&mut self, name: &str) -> Result<NamedArray> {
        let arr = self
            .arrays
            .remove(name)
            .ok_or_else(|| Error::WeightsSchema(format!("missing array '{name}'")))?;
        let count: usize = arr.shape.iter().product();
        if arr.data.len() != count {
            return Err(Error::WeightsSchema(format!(
                "array '{name}': shape {:?} implies {count} elements, found {}",
                arr.shape,
                arr.data.len()
            )));
        }
        Ok(arr)
    }

    fn matrix(&mut self, name: &str) -> Result<Mat<f64>> {
        let arr = self.take(name)?;
        if arr.shape.len() != 2 {
            return Err(Error::WeightsSchema(format!(
                "array '{name}' must be 2-dimensional"
            )));
        }
        Ok(Mat::from_vec(arr.shape[0], arr.shape[1], arr.data))
    }

    fn vector(&mut self, name: &str) -> Result<Vec<f64>> {
        let arr = self.take(name)?;
        if arr.shape.len() != 1 {
            return Err(Error::WeightsSchema(format!(
                "array '{name}' must be 1-dimensional"
            )));
        }
        Ok(arr.data)
    }

    fn table(&mut self, name: &str) -> Result<Vec<Vec<f64>>> {
        let arr = self.take(name)?;
        if arr.shape.len() != 2 {
            return Err(Error::WeightsSchema(format!(
                "array '{name}' must be 2-dimensional"
            )));
        }
        Ok(arr.data.chunks(arr.shape[1]).map(|c| c.to_vec()).collect())
    }
}

pub fn from_json(json: &str) -> Result<(ModelParams, Dims, usize)> {
    let doc: WeightsDoc =
        serde_json::from_str(json).map_err(|e| Error::WeightsSchema(e.to_string()))?;
    for name in doc.arrays.keys() {
        if !known_name(name) {
            return Err(Error::WeightsSchema(format!("unknown array '{name}'")));
        }
    }
    let has_lut = doc.arrays.contains_key("lut.entries");
    let fused_names: Vec<String> = doc
        .arrays
        .keys()
        .filter(|k| k.starts_with(LUT_FUSED_PREFIX))
        .cloned()
        .collect();
    let mut r = ArrayReader { arrays: doc.arrays };

    let gru = GruParams {
        w_ir: r.matrix("gru.w_ir")?,
        w_hr: r.matrix("gru.w_hr")?,
        b_ir: r.vector("gru.b_ir")?,
        b_hr: r.vector("gru.b_hr")?,
        w_iz: r.matrix("gru.w_iz")?,
        w_hz: r.matrix("gru.w_hz")?,
        b_iz: r.vector("gru.b_iz")?,
        b_hz: r.vector("gru.b_hz")?,
        w_in: r.matrix("gru.w_in")?,
        w_hn: r.matrix("gru.w_hn")?,
        b_in: r.vector("gru.b_in")?,
        b_hn: r.vector("gru.b_hn")?,
    };
    let attn = VanillaAttnParams {
        w_s: r.matrix("attn.w_s")?,
        b_s: r.vector("attn.b_s")?,
        w_q: r.matrix("attn.w_q")?,
        b_q: r.vector("attn.b_q")?,
        w_k: r.matrix("attn.w_k")?,
        b_k: r.vector("attn.b_k")?,
        w_v: r.matrix("attn.w_v")?,
        b_v: r.vector("attn.b_v")?,
    };
    let sat = SimplifiedAttnParams {
        a: r.vector("sat.a")?,
        w_t: r.matrix("sat.w_t")?,
    };
    let output = OutputTransform {
        w: r.matrix("out.w")?,
        b: r.vector("out.b")?,
    };
    let encoder = CosineEncoderParams {
        omega: r.vector("time.omega")?,
        phi: r.vector("time.phi")?,
    };
    let lut = if has_lut {
        let boundaries = r.vector("lut.boundaries")?;
        let entries = r.table("lut.entries")?;
        let mut fused = BTreeMap::new();
        for name in fused_names {
            let consumer = name[LUT_FUSED_PREFIX.len()..].to_string();
            fused.insert(consumer, r.table(&name)?);
        }
        Some(TimeLut {
            boundaries,
            entries,
            fused,
        })
    } else {
        None
    };

    let params = ModelParams {
        gru,
        attn,
        sat,
        output,
        encoder,
        lut,
    };
    params.validate(&doc.dims, doc.n)?;
    Ok((params, doc.dims, doc.n))
}

pub fn write_weights(path: &Path, params: &ModelParams, dims: &Dims, n: usize) -> Result<()> {
    std::fs::write(path, to_json(params, dims, n)?)?;
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<(ModelParams, Dims, usize)> {
    let json = std::fs::read_to_string(path)?;
    from_json(&json)
}
