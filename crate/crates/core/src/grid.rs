//! Extended-real functions sampled on uniform rectangular grids.
//!
//! Storage is row-major with the last axis fastest. When a function carries a
//! split `(n_x, n_y)`, the first `n_x` axes are the base (`x`) and the last
//! `n_y` axes the fiber (`y`), so every fiber is a contiguous slice.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidInput(format!("axis needs at least 2 nodes, got {count}")));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::InvalidInput(format!("axis bounds [{min}, {max}] are not increasing")));
        }
        Ok(Self { min, max, count })
    }

    /// Axis with `count` nodes centred on zero with the given spacing.
    pub fn centered(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, half_width, count)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.coord(i)).collect()
    }

    /// Cell containing `v` and the fractional position inside it, or `None`
    /// outside `[min, max]` (with a relative slack of 1e-12 cells).
    pub fn locate(&self, v: f64) -> Option<(usize, f64)> {
        let s = (v - self.min) / self.step();
        let last = (self.count - 1) as f64;
        if !(s >= -1e-12 && s <= last + 1e-12) {
            return None;
        }
        let s = s.clamp(0.0, last);
        let i = (s.floor() as usize).min(self.count - 2);
        Some((i, s - i as f64))
    }

    /// Index of the node equal to `v` up to `1e-9` cells.
    pub fn node_index(&self, v: f64) -> Option<usize> {
        let s = (v - self.min) / self.step();
        let r = s.round();
        if (s - r).abs() <= 1e-9 && r >= 0.0 && r <= (self.count - 1) as f64 {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Sub-axis keeping nodes `lo..=hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Self> {
        if hi >= self.count || hi <= lo {
            return Err(Error::InvalidInput(format!("bad axis slice {lo}..={hi}")));
        }
        Ok(Self { min: self.coord(lo), max: self.coord(hi), count: hi - lo + 1 })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    axes: Vec<Axis>,
    values: Vec<f64>,
    split: Option<(usize, usize)>,
}

impl GridFn {
    /// Values must be finite or `+inf`; `-inf` and NaN are rejected.
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("grid has no axes".into()));
        }
        for a in &axes {
            Axis::new(a.min, a.max, a.count)?;
        }
        let len: usize = axes.iter().map(|a| a.count).product();
        if values.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
            return Err(Error::InvalidInput(format!("grid value {v} is not allowed")));
        }
        Ok(Self { axes, values, split: None })
    }

    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let len: usize = axes.iter().map(|a| a.count).product();
        let mut g = Self { axes, values: vec![0.0; len], split: None };
        let mut p = vec![0.0; g.ndim()];
        for k in 0..len {
            g.coords_into(k, &mut p);
            g.values[k] = f(&p);
        }
        Self::new(g.axes, g.values)
    }

    /// Builds on `x_axes × y_axes` with split `(x_axes.len(), y_axes.len())`.
    pub fn from_fn_split(
        x_axes: Vec<Axis>,
        y_axes: Vec<Axis>,
        f: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<Self> {
        let nx = x_axes.len();
        let ny = y_axes.len();
        let axes = x_axes.into_iter().chain(y_axes).collect();
        Self::from_fn(axes, |p| f(&p[..nx], &p[nx..]))?.with_split(nx, ny)
    }

    pub fn with_split(mut self, nx: usize, ny: usize) -> Result<Self> {
        if nx + ny != self.ndim() || nx == 0 || ny == 0 {
            return Err(Error::InvalidInput(format!(
                "split ({nx}, {ny}) does not match {} axes",
                self.ndim()
            )));
        }
        self.split = Some((nx, ny));
        Ok(self)
    }

    pub fn without_split(mut self) -> Self {
        self.split = None;
        self
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        self.split
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.ndim()];
        for d in (0..self.ndim().saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.axes[d + 1].count;
        }
        s
    }

    pub fn steps(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::step).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for d in (0..self.ndim()).rev() {
            idx[d] = flat % self.axes[d].count;
            flat /= self.axes[d].count;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.flat_index(idx);
        self.values[k] = v;
    }

    /// Replaces the value at a flat index. `-inf`/NaN are not checked here.
    pub fn set_flat(&mut self, k: usize, v: f64) {
        self.values[k] = v;
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.ndim()];
        self.coords_into(flat, &mut p);
        p
    }

    fn coords_into(&self, mut flat: usize, p: &mut [f64]) {
        for d in (0..self.ndim()).rev() {
            let c = self.axes[d].count;
            p[d] = self.axes[d].coord(flat % c);
            flat /= c;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut g = Self::new(self.axes.clone(), self.values.iter().map(|&v| f(v)).collect())?;
        g.split = self.split;
        Ok(g)
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFn, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.axes != other.axes {
            return Err(Error::InvalidInput("grids differ".into()));
        }
        let vals = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        let mut g = Self::new(self.axes.clone(), vals)?;
        g.split = self.split;
        Ok(g)
    }

    pub fn max_abs_finite(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn x_axes(&self) -> &[Axis] {
        match self.split {
            Some((nx, _)) => &self.axes[..nx],
            None => &self.axes,
        }
    }

    pub fn y_axes(&self) -> &[Axis] {
        match self.split {
            Some((nx, _)) => &self.axes[nx..],
            None => &[],
        }
    }

    /// Number of x-nodes and the length of each fiber.
    pub fn fiber_layout(&self) -> Result<(usize, usize)> {
        let (nx, _) = self.split.ok_or_else(|| Error::InvalidInput("grid has no (x; y) split".into()))?;
        let nxl: usize = self.axes[..nx].iter().map(|a| a.count).product();
        Ok((nxl, self.len() / nxl))
    }

    pub fn fiber_values(&self, x_flat: usize) -> Result<&[f64]> {
        let (_, ly) = self.fiber_layout()?;
        Ok(&self.values[x_flat * ly..(x_flat + 1) * ly])
    }

    /// The fiber `y ↦ f(x, y)` at an x-node, as a function on the y-axes.
    pub fn fiber(&self, x_flat: usize) -> Result<GridFn> {
        let v = self.fiber_values(x_flat)?.to_vec();
        GridFn::new(self.y_axes().to_vec(), v)
    }

    /// Builds a split function from one fiber per x-node.
    pub fn from_fibers(x_axes: Vec<Axis>, y_axes: Vec<Axis>, fibers: Vec<Vec<f64>>) -> Result<Self> {
        let nx = x_axes.len();
        let ny = y_axes.len();
        let values = fibers.concat();
        GridFn::new(x_axes.into_iter().chain(y_axes).collect(), values)?.with_split(nx, ny)
    }

    /// Multilinear interpolation; `+inf` propagates from any corner with
    /// nonzero weight. `None` outside the grid.
    pub fn sample(&self, p: &[f64]) -> Option<f64> {
        if p.len() != self.ndim() {
            return None;
        }
        let mut base = Vec::with_capacity(self.ndim());
        let mut frac = Vec::with_capacity(self.ndim());
        for (a, &v) in self.axes.iter().zip(p) {
            let (i, t) = a.locate(v)?;
            base.push(i);
            frac.push(t);
        }
        let strides = self.strides();
        let b0: usize = base.iter().zip(&strides).map(|(i, s)| i * s).sum();
        let mut acc = 0.0;
        for corner in 0..(1usize << self.ndim()) {
            let mut w = 1.0;
            let mut k = b0;
            for d in 0..self.ndim() {
                if corner >> d & 1 == 1 {
                    w *= frac[d];
                    k += strides[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w == 0.0 {
                continue;
            }
            let v = self.values[k];
            if v == f64::INFINITY {
                return Some(f64::INFINITY);
            }
            acc += w * v;
        }
        Some(acc)
    }

    /// Restriction to the index box `lo[d]..=hi[d]`; the split is kept.
    pub fn sub_grid(&self, lo: &[usize], hi: &[usize]) -> Result<Self> {
        let axes: Vec<Axis> = (0..self.ndim())
            .map(|d| self.axes[d].slice(lo[d], hi[d]))
            .collect::<Result<_>>()?;
        let shape: Vec<usize> = axes.iter().map(|a| a.count).collect();
        let len: usize = shape.iter().product();
        let mut vals = Vec::with_capacity(len);
        let mut idx = vec![0; self.ndim()];
        for mut k in 0..len {
            for d in (0..self.ndim()).rev() {
                idx[d] = lo[d] + k % shape[d];
                k /= shape[d];
            }
            vals.push(self.get(&idx));
        }
        let mut g = Self::new(axes, vals)?;
        g.split = self.split;
        Ok(g)
    }

    fn column_names(&self) -> Vec<String> {
        let mut names = match self.split {
            Some((nx, ny)) => (0..nx)
                .map(|i| format!("x{i}"))
                .chain((0..ny).map(|i| format!("y{i}")))
                .collect(),
            None => (0..self.ndim()).map(|i| format!("x{i}")).collect::<Vec<_>>(),
        };
        names.push("value".into());
        names
    }

    /// One row per node: coordinates then value, 17 significant digits,
    /// `inf` for `+inf`. Header row `x0,…,y0,…,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.column_names()).map_err(csv_err)?;
        let mut row = Vec::with_capacity(self.ndim() + 1);
        for k in 0..self.len() {
            row.clear();
            row.extend(self.coords(k).into_iter().map(fmt_f64));
            row.push(fmt_f64(self.values[k]));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Inverse of [`GridFn::write_csv`]; axes are recovered from the distinct
    /// coordinates, and rows may come in any order.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let ncols = headers.len();
        if ncols < 2 || &headers[ncols - 1] != "value" {
            return Err(Error::Parse("last CSV column must be `value`".into()));
        }
        let dim = ncols - 1;
        let nx = headers.iter().take(dim).filter(|h| h.starts_with('x')).count();
        let ny = headers.iter().take(dim).filter(|h| h.starts_with('y')).count();
        if nx + ny != dim {
            return Err(Error::Parse("coordinate columns must be named x* or y*".into()));
        }
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let mut nums = rec.iter().map(parse_f64);
            let coords = (0..dim).map(|_| nums.next().unwrap()).collect::<Result<Vec<_>>>()?;
            rows.push((coords, nums.next().unwrap()?));
        }
        let mut axes = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut c: Vec<f64> = rows.iter().map(|r| r.0[d]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            axes.push(Axis::new(c[0], *c.last().unwrap(), c.len())?);
        }
        let len: usize = axes.iter().map(|a| a.count).product();
        if rows.len() != len {
            return Err(Error::Parse(format!("expected {len} rows, found {}", rows.len())));
        }
        let mut g = Self { axes, values: vec![f64::NAN; len], split: None };
        for (coords, v) in rows {
            let idx = coords
                .iter()
                .zip(&g.axes)
                .map(|(&c, a)| a.node_index(c))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Parse("coordinate off the uniform grid".into()))?;
            g.set(&idx, v);
        }
        let mut g = Self::new(g.axes, g.values)?;
        if ny > 0 {
            g = g.with_split(nx, ny)?;
        }
        Ok(g)
    }

    /// Binary layout: magic `FSGF`, u32 version, u32 ndim, u32 n_x (0 when no
    /// split), then per axis `f64 min, f64 max, u64 count`, then the values,
    /// all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"FSGF")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.ndim() as u32).to_le_bytes())?;
        w.write_all(&(self.split.map_or(0, |s| s.0) as u32).to_le_bytes())?;
        for a in &self.axes {
            w.write_all(&a.min.to_le_bytes())?;
            w.write_all(&a.max.to_le_bytes())?;
            w.write_all(&(a.count as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"FSGF" {
            return Err(Error::Parse("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Parse(format!("unsupported version {version}")));
        }
        let ndim = read_u32(&mut r)? as usize;
        let nx = read_u32(&mut r)? as usize;
        let mut axes = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let min = read_f64(&mut r)?;
            let max = read_f64(&mut r)?;
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            axes.push(Axis::new(min, max, u64::from_le_bytes(b) as usize)?);
        }
        let len: usize = axes.iter().map(|a| a.count).product();
        let values = (0..len).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let g = Self::new(axes, values)?;
        if nx > 0 {
            g.with_split(nx, ndim - nx)
        } else {
            Ok(g)
        }
    }
}

/// Deterministic float text: 17 significant digits, `inf`/`-inf` literals.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_fn() -> GridFn {
        let x = Axis::new(-1.0, 1.0, 5).unwrap();
        let y = Axis::new(0.0, 2.0, 4).unwrap();
        GridFn::from_fn_split(vec![x], vec![y], |x, y| {
            if y[0] > 1.5 { f64::INFINITY } else { x[0] * 0.1 + y[0] / 3.0 }
        })
        .unwrap()
    }

    #[test]
    fn axis_basics() {
        let a = Axis::new(-2.0, 2.0, 5).unwrap();
        assert_eq!(a.step(), 1.0);
        assert_eq!(a.coords(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(a.locate(0.5), Some((2, 0.5)));
        assert_eq!(a.locate(2.0), Some((3, 1.0)));
        assert_eq!(a.locate(2.1), None);
        assert_eq!(a.node_index(1.0), Some(3));
        assert_eq!(a.node_index(0.5), None);
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        assert!(Axis::new(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let g = sample_fn();
        assert_eq!(g.shape(), vec![5, 4]);
        assert_eq!(g.strides(), vec![4, 1]);
        assert_eq!(g.multi_index(6), vec![1, 2]);
        assert_eq!(g.flat_index(&[1, 2]), 6);
        assert_eq!(g.fiber_layout().unwrap(), (5, 4));
        assert_eq!(g.fiber_values(1).unwrap(), &g.values()[4..8]);
    }

    #[test]
    fn rejects_bad_values() {
        let a = Axis::new(0.0, 1.0, 2).unwrap();
        assert!(GridFn::new(vec![a], vec![0.0, f64::NAN]).is_err());
        assert!(GridFn::new(vec![a], vec![0.0, f64::NEG_INFINITY]).is_err());
        assert!(GridFn::new(vec![a], vec![0.0]).is_err());
    }

    #[test]
    fn multilinear_sampling() {
        let a = Axis::new(0.0, 1.0, 3).unwrap();
        let g = GridFn::from_fn(vec![a, a], |p| 2.0 * p[0] - p[1] + 1.0).unwrap();
        let v = g.sample(&[0.3, 0.7]).unwrap();
        assert!((v - (0.6 - 0.7 + 1.0)).abs() < 1e-14);
        assert_eq!(g.sample(&[1.2, 0.0]), None);
        let h = sample_fn();
        assert_eq!(h.sample(&[0.0, 1.9]), Some(f64::INFINITY));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let g = sample_fn();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,y0,value\n"));
        assert!(text.contains(",inf\n"));
        let back = GridFn::read_csv(&buf[..]).unwrap();
        assert_eq!(back, g);
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn binary_roundtrip_is_exact() {
        let g = sample_fn();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 2 * 24 + 20 * 8);
        assert_eq!(GridFn::read_binary(&buf[..]).unwrap(), g);
        assert!(GridFn::read_binary(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn sub_grid_keeps_values() {
        let g = sample_fn();
        let s = g.sub_grid(&[1, 0], &[3, 2]).unwrap();
        assert_eq!(s.shape(), vec![3, 3]);
        assert_eq!(s.get(&[0, 1]), g.get(&[1, 1]));
        assert_eq!(s.axes()[0].min, -0.5);
    }
}
