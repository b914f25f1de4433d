//! Uniform grids over half-integer-aligned boxes and sampled complex fields.
//!
//! Boxes keep their endpoints in (1/2)Z, stored exactly as integer half-units,
//! and the sample rate m is an even integer. Every half-integer endpoint then
//! lands exactly on a grid node, so unit cubes, Q/2, and scaled cubes TQ all
//! align with grid cells.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bump::BumpSpec;
use crate::error::{Error, Result};

/// d-dimensional box with endpoints in (1/2)Z sampled at spacing 1/m.
///
/// Grid nodes along axis a are `lo[a] + j/m` for `j = 0..=len[a]*m`,
/// endpoints included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridBox {
    lo_half: Vec<i64>,
    hi_half: Vec<i64>,
    m: u32,
}

impl GridBox {
    /// Build from endpoints given in half-units (lo = lo_half/2).
    pub fn from_halves(lo_half: Vec<i64>, hi_half: Vec<i64>, m: u32) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(Error::BadSampleRate(m));
        }
        if lo_half.len() != hi_half.len() || lo_half.is_empty() {
            return Err(Error::BadBox("lo/hi dimension mismatch".into()));
        }
        for (l, h) in lo_half.iter().zip(&hi_half) {
            if l >= h {
                return Err(Error::BadBox(format!("lo {} >= hi {}", *l as f64 / 2.0, *h as f64 / 2.0)));
            }
        }
        Ok(GridBox { lo_half, hi_half, m })
    }

    /// Build from f64 endpoints which must be exact half-integers.
    pub fn new(lo: &[f64], hi: &[f64], m: u32) -> Result<Self> {
        let to_half = |v: f64| -> Result<i64> {
            let h = v * 2.0;
            if !h.is_finite() || h.round() != h || h.abs() > 1e15 {
                return Err(Error::BadBox(format!("{v} is not a half-integer")));
            }
            Ok(h as i64)
        };
        GridBox::from_halves(
            lo.iter().map(|&v| to_half(v)).collect::<Result<_>>()?,
            hi.iter().map(|&v| to_half(v)).collect::<Result<_>>()?,
            m,
        )
    }

    /// Symmetric cube [-a/2, a/2]^d at sample rate m (a given in half-units).
    pub fn centered_cube(d: usize, half_width_halves: i64, m: u32) -> Result<Self> {
        GridBox::from_halves(
            vec![-half_width_halves; d],
            vec![half_width_halves; d],
            m,
        )
    }

    /// The unit cube Q = [-1/2, 1/2]^d.
    pub fn unit_cube(d: usize, m: u32) -> Result<Self> {
        GridBox::centered_cube(d, 1, m)
    }

    /// Smallest grid box at rate m whose closed box contains `support`.
    pub fn hull_of_box(support: &[(f64, f64)], m: u32) -> Result<Self> {
        let lo: Vec<i64> = support
            .iter()
            .map(|&(l, _)| (l * 2.0).floor() as i64)
            .collect();
        let hi: Vec<i64> = support
            .iter()
            .map(|&(_, h)| (h * 2.0).ceil() as i64)
            .collect();
        // Degenerate support still needs a positive-width box.
        let hi = lo
            .iter()
            .zip(hi)
            .map(|(&l, h)| if h > l { h } else { l + 1 })
            .collect();
        GridBox::from_halves(lo, hi, m)
    }

    /// Smallest cube-partitioned box (half-odd endpoints) containing `support`.
    pub fn cube_hull_of_box(support: &[(f64, f64)], m: u32) -> Result<Self> {
        let round_down_odd = |v: f64| {
            let mut h = (v * 2.0).floor() as i64;
            if h.rem_euclid(2) == 0 {
                h -= 1;
            }
            h
        };
        let round_up_odd = |v: f64| {
            let mut h = (v * 2.0).ceil() as i64;
            if h.rem_euclid(2) == 0 {
                h += 1;
            }
            h
        };
        let lo: Vec<i64> = support.iter().map(|&(l, _)| round_down_odd(l)).collect();
        let hi: Vec<i64> = support.iter().map(|&(_, h)| round_up_odd(h)).collect();
        GridBox::from_halves(lo, hi, m)
    }

    pub fn dim(&self) -> usize {
        self.lo_half.len()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn lo_half(&self) -> &[i64] {
        &self.lo_half
    }

    pub fn hi_half(&self) -> &[i64] {
        &self.hi_half
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo_half[axis] as f64 / 2.0
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi_half[axis] as f64 / 2.0
    }

    /// Number of cells along an axis; node count is this plus one.
    pub fn cells(&self, axis: usize) -> usize {
        ((self.hi_half[axis] - self.lo_half[axis]) as usize) * (self.m as usize) / 2
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.cells(axis) + 1
    }

    pub fn node_counts(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.nodes(a)).collect()
    }

    pub fn total_nodes(&self) -> usize {
        (0..self.dim()).map(|a| self.nodes(a)).product()
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.lo(axis) + j as f64 / self.m as f64
    }

    /// Multi-index of a flat (row-major) node index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        for a in (0..d).rev() {
            let n = self.nodes(a);
            idx[a] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut flat = 0usize;
        for a in 0..self.dim() {
            flat = flat * self.nodes(a) + idx[a];
        }
        flat
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(a, &j)| self.coord(a, j))
            .collect()
    }

    /// Composite trapezoid weight of a node (product over axes).
    pub fn weight(&self, idx: &[usize]) -> f64 {
        let h = self.spacing();
        let mut w = 1.0;
        for a in 0..self.dim() {
            let n = self.cells(a);
            w *= if idx[a] == 0 || idx[a] == n { 0.5 * h } else { h };
        }
        w
    }

    /// Per-axis trapezoid weights, the building block of `weight`.
    pub fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing();
        let n = self.cells(axis);
        (0..=n)
            .map(|j| if j == 0 || j == n { 0.5 * h } else { h })
            .collect()
    }

    /// True when the box is a disjoint union of unit cubes nu + Q.
    pub fn is_cube_partition(&self) -> bool {
        self.lo_half
            .iter()
            .chain(&self.hi_half)
            .all(|h| h.rem_euclid(2) == 1)
    }

    /// Same sample rate and box containment.
    pub fn contains(&self, other: &GridBox) -> bool {
        self.m == other.m
            && self.dim() == other.dim()
            && self
                .lo_half
                .iter()
                .zip(&other.lo_half)
                .all(|(a, b)| a <= b)
            && self
                .hi_half
                .iter()
                .zip(&other.hi_half)
                .all(|(a, b)| a >= b)
    }

    /// Node offset of `other`'s origin inside `self` (same m required).
    pub fn offset_of(&self, other: &GridBox) -> Option<Vec<usize>> {
        if !self.contains(other) {
            return None;
        }
        Some(
            (0..self.dim())
                .map(|a| {
                    ((other.lo_half[a] - self.lo_half[a]) as usize) * (self.m as usize) / 2
                })
                .collect(),
        )
    }

    /// Translate the box by a vector given in half-units.
    pub fn shifted(&self, delta_half: &[i64]) -> GridBox {
        GridBox {
            lo_half: self
                .lo_half
                .iter()
                .zip(delta_half)
                .map(|(a, d)| a + d)
                .collect(),
            hi_half: self
                .hi_half
                .iter()
                .zip(delta_half)
                .map(|(a, d)| a + d)
                .collect(),
            m: self.m,
        }
    }

    /// Box refined to sample rate 2m (same endpoints).
    pub fn refined(&self) -> GridBox {
        GridBox {
            lo_half: self.lo_half.clone(),
            hi_half: self.hi_half.clone(),
            m: self.m * 2,
        }
    }

    /// Enlarge by `units` whole units on every side.
    pub fn enlarged(&self, units: i64) -> GridBox {
        GridBox {
            lo_half: self.lo_half.iter().map(|h| h - 2 * units).collect(),
            hi_half: self.hi_half.iter().map(|h| h + 2 * units).collect(),
            m: self.m,
        }
    }
}

/// Complex samples of a function on a grid, row-major over the node lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: GridBox,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(grid: GridBox, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_nodes() {
            return Err(Error::invalid(
                "values",
                format!(
                    "length {} does not match grid node count {}",
                    values.len(),
                    grid.total_nodes()
                ),
            ));
        }
        Ok(SampledField { grid, values })
    }

    pub fn zeros(grid: GridBox) -> Self {
        let n = grid.total_nodes();
        SampledField {
            grid,
            values: vec![Complex64::ZERO; n],
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SampledField {
        SampledField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise product with another field on the identical grid.
    pub fn pointwise_mul(&self, other: &SampledField) -> Result<SampledField> {
        if self.grid != other.grid {
            return Err(Error::Incommensurate(
                "pointwise product needs identical grids".into(),
            ));
        }
        Ok(SampledField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a * b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Sample a bump on a grid. Values outside the declared support are exact zeros.
pub fn sample(b: &BumpSpec, g: &GridBox) -> Result<SampledField> {
    if b.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: g.dim(),
        });
    }
    let support = b.support_box();
    let counts = g.node_counts();
    let d = g.dim();
    let mut values = Vec::with_capacity(g.total_nodes());
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    loop {
        let mut inside = true;
        for a in 0..d {
            x[a] = g.coord(a, idx[a]);
            if x[a] < support[a].0 || x[a] > support[a].1 {
                inside = false;
            }
        }
        values.push(if inside {
            Complex64::new(b.eval(&x), 0.0)
        } else {
            Complex64::ZERO
        });
        // odometer increment
        let mut a = d;
        loop {
            if a == 0 {
                return SampledField::new(g.clone(), values);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Composite trapezoid approximation of the integral over the field's box.
pub fn quad(f: &SampledField) -> Complex64 {
    let g = &f.grid;
    let d = g.dim();
    let axis_w: Vec<Vec<f64>> = (0..d).map(|a| g.axis_weights(a)).collect();
    let counts = g.node_counts();
    let mut acc = Complex64::ZERO;
    let mut idx = vec![0usize; d];
    for &v in &f.values {
        let mut w = 1.0;
        for a in 0..d {
            w *= axis_w[a][idx[a]];
        }
        acc += w * v;
        let mut a = d;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    acc
}

/// sqrt of the quadrature of |f|^2 over the box.
pub fn l2_norm(f: &SampledField) -> f64 {
    let sq = quad(&f.map(|v| Complex64::new(v.norm_sqr(), 0.0)));
    sq.re.max(0.0).sqrt()
}

#[derive(Serialize, Deserialize)]
struct GridDto {
    lo: Vec<f64>,
    hi: Vec<f64>,
    m: u32,
}

#[derive(Serialize, Deserialize)]
struct FieldDto {
    grid: GridDto,
    #[serde(skip_serializing_if = "Option::is_none")]
    re: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
    /// Path to raw little-endian f64 (re, im) pairs, relative to the sidecar.
    #[serde(skip_serializing_if = "Option::is_none")]
    raw: Option<String>,
}

pub fn field_to_json(f: &SampledField) -> String {
    let dto = FieldDto {
        grid: GridDto {
            lo: (0..f.grid.dim()).map(|a| f.grid.lo(a)).collect(),
            hi: (0..f.grid.dim()).map(|a| f.grid.hi(a)).collect(),
            m: f.grid.m(),
        },
        re: Some(f.values.iter().map(|v| v.re).collect()),
        im: Some(f.values.iter().map(|v| v.im).collect()),
        raw: None,
    };
    serde_json::to_string(&dto).expect("field serialization cannot fail")
}

pub fn field_from_json(text: &str, base_dir: Option<&Path>) -> Result<SampledField> {
    let dto: FieldDto = serde_json::from_str(text)?;
    let grid = GridBox::new(&dto.grid.lo, &dto.grid.hi, dto.grid.m)?;
    let values: Vec<Complex64> = if let Some(raw) = dto.raw {
        let path = match base_dir {
            Some(d) => d.join(raw),
            None => raw.into(),
        };
        let bytes = std::fs::read(path)?;
        if bytes.len() != grid.total_nodes() * 16 {
            return Err(Error::invalid(
                "raw",
                format!(
                    "raw file holds {} bytes, expected {}",
                    bytes.len(),
                    grid.total_nodes() * 16
                ),
            ));
        }
        bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect()
    } else {
        let re = dto.re.ok_or_else(|| Error::invalid("re", "missing"))?;
        let im = dto.im.unwrap_or_else(|| vec![0.0; re.len()]);
        if re.len() != im.len() {
            return Err(Error::invalid("im", "re/im length mismatch"));
        }
        re.iter()
            .zip(&im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    };
    SampledField::new(grid, values)
}

/// Write a field as a raw payload plus JSON sidecar; returns the sidecar text.
pub fn field_to_raw(f: &SampledField, raw_path: &Path) -> Result<String> {
    let mut bytes = Vec::with_capacity(f.values.len() * 16);
    for v in &f.values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    std::fs::write(raw_path, bytes)?;
    let dto = FieldDto {
        grid: GridDto {
            lo: (0..f.grid.dim()).map(|a| f.grid.lo(a)).collect(),
            hi: (0..f.grid.dim()).map(|a| f.grid.hi(a)).collect(),
            m: f.grid.m(),
        },
        re: None,
        im: None,
        raw: Some(
            raw_path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        ),
    };
    Ok(serde_json::to_string(&dto).expect("field sidecar serialization cannot fail"))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<SampledField> {
    let path = path.as_ref();
    field_from_json(&std::fs::read_to_string(path)?, path.parent())
}
