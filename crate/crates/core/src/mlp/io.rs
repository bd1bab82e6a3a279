//! Binary weights format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic   "MLP1"
//! u32     layer count L
//! f64     dropout rate
//! u32     input_dim
//! u32     output_dim
//! L x     (u32 rows, u32 cols)
//! f64[]   input mean (input_dim)
//! f64[]   input std  (input_dim)
//! L x     W row-major (rows*cols f64), then b (rows f64)
//! ```

use std::path::Path;

use ndarray::{Array1, Array2};

use super::net::{Mlp, MlpArch};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"MLP1";

/// Serialize a network to bytes.
pub fn write_mlp(mlp: &Mlp) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(mlp.weights.len() as u32).to_le_bytes());
    out.extend_from_slice(&mlp.arch().dropout.to_le_bytes());
    out.extend_from_slice(&(mlp.arch().input_dim as u32).to_le_bytes());
    out.extend_from_slice(&(mlp.arch().output_dim as u32).to_le_bytes());
    for w in &mlp.weights {
        out.extend_from_slice(&(w.nrows() as u32).to_le_bytes());
        out.extend_from_slice(&(w.ncols() as u32).to_le_bytes());
    }
    for v in mlp.input_mean.iter().chain(mlp.input_std.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for l in 0..mlp.weights.len() {
        for v in mlp.weights[l].iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in mlp.biases[l].iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Validation("weights file truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// Deserialize a network from bytes.
pub fn read_mlp(bytes: &[u8]) -> Result<Mlp> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Validation("not a MLP1 weights file (bad magic)".into()));
    }
    let n_layers = r.u32()? as usize;
    if n_layers == 0 {
        return Err(Error::Validation("weights file has no layers".into()));
    }
    let dropout = r.f64()?;
    let input_dim = r.u32()? as usize;
    let output_dim = r.u32()? as usize;
    let mut dims = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        dims.push((rows, cols));
    }
    // Shape chaining.
    let mut prev = input_dim;
    for (i, &(rows, cols)) in dims.iter().enumerate() {
        if cols != prev {
            return Err(Error::Validation(format!(
                "layer {i} takes {cols} inputs but the previous layer produces {prev}"
            )));
        }
        prev = rows;
        if i + 1 < n_layers && rows != dims[0].0 {
            return Err(Error::Validation("hidden layers must share one width".into()));
        }
    }
    if prev != output_dim {
        return Err(Error::Validation(format!(
            "last layer produces {prev} outputs, header says {output_dim}"
        )));
    }

    let arch = MlpArch::new(
        input_dim,
        output_dim,
        n_layers - 1,
        if n_layers > 1 { dims[0].0 } else { 0 },
        dropout,
    );
    arch.validate()?;

    let mean = Array1::from_vec(r.f64_vec(input_dim)?);
    let std = Array1::from_vec(r.f64_vec(input_dim)?);
    let mut mlp = Mlp::init(&arch, 0);
    for l in 0..n_layers {
        let (rows, cols) = dims[l];
        mlp.weights[l] = Array2::from_shape_vec((rows, cols), r.f64_vec(rows * cols)?).expect("shape");
        mlp.biases[l] = Array1::from_vec(r.f64_vec(rows)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Validation("trailing bytes after weights".into()));
    }
    mlp.set_normalization(mean, std);
    Ok(mlp)
}

/// Write a network to a file.
pub fn save_mlp(mlp: &Mlp, path: &Path) -> Result<()> {
    std::fs::write(path, write_mlp(mlp)).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Read a network from a file.
pub fn load_mlp(path: &Path) -> Result<Mlp> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_mlp(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let arch = MlpArch::new(5, 3, 2, 8, 0.1);
        let mut mlp = Mlp::init(&arch, 99);
        mlp.set_normalization(
            Array1::from_vec(vec![0.1, -0.2, 0.3, 0.0, 2.0]),
            Array1::from_vec(vec![1.0, 2.0, 0.5, 1.5, 3.0]),
        );
        let bytes = write_mlp(&mlp);
        let back = read_mlp(&bytes).unwrap();
        assert_eq!(mlp, back);
        assert_eq!(bytes, write_mlp(&back));
    }

    #[test]
    fn bad_magic_rejected() {
        let arch = MlpArch::new(2, 1, 0, 0, 0.0);
        let mlp = Mlp::init(&arch, 1);
        let mut bytes = write_mlp(&mlp);
        bytes[0] = b'X';
        assert!(read_mlp(&bytes).is_err());
    }

    #[test]
    fn truncation_rejected() {
        let arch = MlpArch::new(2, 1, 1, 4, 0.0);
        let mlp = Mlp::init(&arch, 1);
        let bytes = write_mlp(&mlp);
        assert!(read_mlp(&bytes[..bytes.len() - 3]).is_err());
        let mut extended = bytes.clone();
        extended.push(0);
        assert!(read_mlp(&extended).is_err());
    }
}
