use std::fs;
use std::path::Path;

use super::DspError;

/// Side length of the square network input.
pub const MAP_SIDE: usize = 32;
const MAP_LEN: usize = MAP_SIDE * MAP_SIDE;
const FILE_MAGIC: &[u8; 4] = b"FMAP";
const FILE_VERSION: u32 = 1;
const FILE_LEN: usize = 8 + MAP_LEN * 4;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// A 32x32x1 network input. Values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(values: Vec<f64>) -> Result<Self, DspError> {
        if values.len() != MAP_LEN {
            return Err(DspError::InvalidMap(format!(
                "expected {MAP_LEN} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DspError::InvalidMap("non-finite entry".into()));
        }
        Ok(Self { values })
    }

    pub fn constant(v: f64) -> Self {
        Self {
            values: vec![v; MAP_LEN],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (MAP_SIDE, MAP_SIDE, 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * MAP_SIDE + col]
    }

    /// Little-endian f32 payload behind an 8-byte `FMAP` + version header.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FILE_LEN);
        out.extend_from_slice(FILE_MAGIC);
        out.extend_from_slice(&FILE_VERSION.to_le_bytes());
        for &v in &self.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DspError> {
        if bytes.len() != FILE_LEN {
            return Err(DspError::InvalidMap(format!(
                "feature map file is {} bytes, expected {FILE_LEN}",
                bytes.len()
            )));
        }
        if &bytes[..4] != FILE_MAGIC {
            return Err(DspError::InvalidMap("bad feature map magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FILE_VERSION {
            return Err(DspError::InvalidMap(format!(
                "unsupported feature map version {version}"
            )));
        }
        let values = bytes[8..]
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
            .collect();
        Self::new(values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DspError> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DspError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Rounds every value to f32 precision, as a save/load cycle would.
    pub fn quantized(&self) -> Self {
        Self {
            values: self.values.iter().map(|&v| f64::from(v as f32)).collect(),
        }
    }
}

/// Corner-aligned sample positions of `out` points over `len` source points.
fn sample_axis(len: usize, out: usize) -> Vec<(usize, usize, f64)> {
    (0..out)
        .map(|i| {
            if len == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (len - 1) as f64 / (out - 1) as f64;
            let lo = (pos.floor() as usize).min(len - 1);
            let hi = (lo + 1).min(len - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

// exact when a == b
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Bilinear resampling onto a 32x32 grid; corners map to corners.
pub fn resize_to_map(matrix: &Matrix) -> FeatureMap {
    assert!(matrix.rows >= 1 && matrix.cols >= 1, "cannot resize an empty matrix");
    if matrix.rows == MAP_SIDE && matrix.cols == MAP_SIDE {
        return FeatureMap {
            values: matrix.data.clone(),
        };
    }
    let rows = sample_axis(matrix.rows, MAP_SIDE);
    let cols = sample_axis(matrix.cols, MAP_SIDE);
    let mut values = Vec::with_capacity(MAP_LEN);
    for &(r0, r1, fr) in &rows {
        for &(c0, c1, fc) in &cols {
            let top = lerp(matrix.get(r0, c0), matrix.get(r0, c1), fc);
            let bottom = lerp(matrix.get(r1, c0), matrix.get(r1, c1), fc);
            values.push(lerp(top, bottom, fr));
        }
    }
    FeatureMap { values }
}

/// Min-max scaling to [0, 1]; a constant map becomes all zeros.
pub fn normalize_map(map: &FeatureMap) -> FeatureMap {
    let (lo, hi) = map
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return FeatureMap::constant(0.0);
    }
    FeatureMap {
        values: map.values.iter().map(|&v| (v - lo) / range).collect(),
    }
}
