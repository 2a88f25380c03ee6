use std::io::{BufRead, Read, Write};

use crate::error::{invalid, Error, Result};

/// A `d`-dimensional signal sampled on the uniform grid `t_i = i T / (n - 1)`.
///
/// Values are stored row-major: point `i` occupies `values[i * d..(i + 1) * d]`.
/// Times are derived from the index and never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    horizon: f64,
    dim: usize,
    values: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"YPGP";
const VERSION: u16 = 1;

impl GridPath {
    pub fn new(horizon: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid(format!("horizon must be positive and finite, got {horizon}"));
        }
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if values.len() % dim != 0 || values.len() / dim < 2 {
            return invalid(format!(
                "need at least 2 points of dimension {dim}, got {} values",
                values.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("path value at point {}", i / dim)));
        }
        Ok(GridPath { horizon, dim, values })
    }

    /// One-dimensional path `t ↦ f(t)` on `n_points` grid points.
    pub fn from_fn(horizon: f64, n_points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n_points < 2 {
            return invalid("n_points must be at least 2");
        }
        let h = horizon / (n_points - 1) as f64;
        let values = (0..n_points).map(|i| f(i as f64 * h)).collect();
        GridPath::new(horizon, 1, values)
    }

    /// Path with each column given separately; all columns must have equal length.
    pub fn from_columns(horizon: f64, columns: &[Vec<f64>]) -> Result<Self> {
        let dim = columns.len();
        if dim == 0 {
            return invalid("at least one column is required");
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return invalid("columns have different lengths");
        }
        let mut values = Vec::with_capacity(n * dim);
        for i in 0..n {
            for c in columns {
                values.push(c[i]);
            }
        }
        GridPath::new(horizon, dim, values)
    }

    /// The constant path equal to `point` everywhere.
    pub fn constant(horizon: f64, n_points: usize, point: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(n_points * point.len());
        for _ in 0..n_points {
            values.extend_from_slice(point);
        }
        GridPath::new(horizon, point.len(), values)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Grid spacing `T / (n - 1)`.
    pub fn step(&self) -> f64 {
        self.horizon / (self.n_points() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_points() {
            self.horizon
        } else {
            i as f64 * self.step()
        }
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Column `j` as a vector of length `n_points`.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Euclidean norm of the value at point `i`.
    pub fn norm_at(&self, i: usize) -> f64 {
        norm(self.value(i))
    }

    /// Euclidean norm of `x_{t_j} - x_{t_i}`.
    pub fn increment_norm(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.value(i), self.value(j));
        a.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt()
    }

    /// Sup norm over all points and components.
    pub fn sup_norm(&self) -> f64 {
        (0..self.n_points()).map(|i| self.norm_at(i)).fold(0.0, f64::max)
    }

    /// Pointwise map of the values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridPath {
        GridPath { horizon: self.horizon, dim: self.dim, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Every `stride`-th point; `n_points - 1` must be divisible by `stride`.
    pub fn subsample(&self, stride: usize) -> Result<GridPath> {
        let cells = self.n_points() - 1;
        if stride == 0 || cells % stride != 0 || cells / stride < 1 {
            return invalid(format!("stride {stride} does not divide {cells} cells"));
        }
        let mut values = Vec::with_capacity((cells / stride + 1) * self.dim);
        for i in (0..=cells).step_by(stride) {
            values.extend_from_slice(self.value(i));
        }
        GridPath::new(self.horizon, self.dim, values)
    }

    /// Points `i0..=i1` as a path on `[0, t_{i1} - t_{i0}]`.
    pub fn window(&self, i0: usize, i1: usize) -> Result<GridPath> {
        if i1 <= i0 || i1 >= self.n_points() {
            return invalid(format!("bad window {i0}..={i1}"));
        }
        let values = self.values[i0 * self.dim..(i1 + 1) * self.dim].to_vec();
        GridPath::new((i1 - i0) as f64 * self.step(), self.dim, values)
    }

    /// Linear interpolation at time `t ∈ [0, T]`.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let n = self.n_points();
        let pos = (t / self.step()).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let w = pos - i as f64;
        let (a, b) = (self.value(i), self.value(i + 1));
        a.iter().zip(b).map(|(p, q)| p + w * (q - p)).collect()
    }

    /// CSV with header `t,x1,...,xd` and shortest round-trip floats.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> =
            std::iter::once("t".to_string()).chain((1..=self.dim).map(|j| format!("x{j}"))).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n_points() {
            write!(out, "{}", self.time(i))?;
            for v in self.value(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Reads the CSV format of [`GridPath::write_csv`]. Lines starting with `#` are skipped.
    pub fn read_csv<R: BufRead>(input: R) -> Result<GridPath> {
        let mut lines = input
            .lines()
            .filter(|l| l.as_ref().map_or(true, |s| !s.starts_with('#') && !s.trim().is_empty()));
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 2 || cols[0] != "t" {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let dim = cols.len() - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::Parse(format!("expected {} fields in `{line}`", dim + 1)));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                values.push(parse(f)?);
            }
        }
        let horizon = *times.last().ok_or_else(|| Error::Parse("no rows".into()))?;
        let path = GridPath::new(horizon, dim, values)?;
        check_times(&path, &times)?;
        Ok(path)
    }

    /// Binary format: magic `YPGP`, version `u16`, dimension `u32`, point count `u64`,
    /// horizon `f64`, then the `t` column and the `d` value columns as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.n_points() as u64).to_le_bytes())?;
        out.write_all(&self.horizon.to_le_bytes())?;
        for i in 0..self.n_points() {
            out.write_all(&self.time(i).to_le_bytes())?;
        }
        for j in 0..self.dim {
            for i in 0..self.n_points() {
                out.write_all(&self.value(i)[j].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<GridPath> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("bad magic bytes".into()));
        }
        let mut b2 = [0u8; 2];
        input.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported version {version}")));
        }
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b8)?;
        let horizon = f64::from_le_bytes(b8);
        let mut read_col = || -> Result<Vec<f64>> {
            let mut col = Vec::with_capacity(n);
            for _ in 0..n {
                input.read_exact(&mut b8)?;
                col.push(f64::from_le_bytes(b8));
            }
            Ok(col)
        };
        let times = read_col()?;
        let columns = (0..dim).map(|_| read_col()).collect::<Result<Vec<_>>>()?;
        let path = GridPath::from_columns(horizon, &columns)?;
        check_times(&path, &times)?;
        Ok(path)
    }
}

fn check_times(path: &GridPath, times: &[f64]) -> Result<()> {
    let tol = 1e-9 * path.horizon();
    for (i, &t) in times.iter().enumerate() {
        if (t - path.time(i)).abs() > tol {
            return Err(Error::Parse(format!("time column is not uniform at row {i}")));
        }
    }
    Ok(())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}
