//! FFT evaluation of frequency-side quadrature sums.
//!
//! The basic primitive is the "zoom" transform: given samples c_j at nodes
//! xi_j = s0 + j/ms and target points x_k = t0 + k/mt, it evaluates
//!
//!   U_k = sum_j c_j exp(+2 pi i x_k xi_j)
//!
//! exactly (up to rounding) by splitting the phase into integer-reduced
//! rational parts and one kernel exp(2 pi i kj / L) with L = ms*mt, which a
//! single padded FFT of length L handles. Both source and target offsets are
//! half-integers, so every phase factor reduces exactly in integer arithmetic.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bump::BumpSpec;
use crate::error::{Error, Result};
use crate::grid::{sample, GridBox, SampledField};

/// Above this FFT length a dense per-line evaluation is cheaper and lighter.
const MAX_FFT_LEN: usize = 1 << 22;

/// Default samples per unit for bump transforms; the integrands here are
/// smooth and compactly supported, so trapezoid sums at this rate are
/// accurate to near machine precision.
pub const DEFAULT_TRANSFORM_RATE: u32 = 1024;

/// cis(2 pi num/den) with the argument reduced exactly as an integer fraction.
pub(crate) fn cis_frac(num: i64, den: i64) -> Complex64 {
    debug_assert!(den > 0);
    let r = num.rem_euclid(den);
    let arg = 2.0 * std::f64::consts::PI * (r as f64) / (den as f64);
    Complex64::new(arg.cos(), arg.sin())
}

/// Shared table of L-th roots of unity, omega[t] = cis(2 pi t / L).
pub(crate) struct OmegaTable {
    pub l: usize,
    w: Vec<Complex64>,
}

impl OmegaTable {
    pub fn new(l: usize) -> Arc<Self> {
        let w = (0..l).map(|t| cis_frac(t as i64, l as i64)).collect();
        Arc::new(OmegaTable { l, w })
    }

    #[inline]
    pub fn at(&self, t: usize) -> Complex64 {
        self.w[t % self.l]
    }
}

/// One-axis zoom transform plan between two aligned grids.
pub(crate) struct LineZoom {
    src_nodes: usize,
    dst_nodes: usize,
    omega: Arc<OmegaTable>,
    fft: Option<Arc<dyn Fft<f64>>>,
    /// Per-source-node phase, constant offset phase folded in.
    pre: Vec<Complex64>,
    /// Per-target-node phase.
    post: Vec<Complex64>,
    /// Source coordinates, used only by the dense fallback.
    src_coords: Vec<f64>,
    dst_coords: Vec<f64>,
}

impl LineZoom {
    pub fn new(
        src_lo_half: i64,
        src_m: u32,
        src_nodes: usize,
        dst_lo_half: i64,
        dst_m: u32,
        dst_nodes: usize,
        planner: &mut FftPlanner<f64>,
    ) -> Self {
        let l = (src_m as usize) * (dst_m as usize);
        let omega = OmegaTable::new(l);
        let fft = if l <= MAX_FFT_LEN {
            Some(planner.plan_fft_inverse(l))
        } else {
            None
        };
        let phase0 = cis_frac(dst_lo_half * src_lo_half, 4);
        let pre = (0..src_nodes)
            .map(|j| phase0 * cis_frac(dst_lo_half * j as i64, 2 * src_m as i64))
            .collect();
        let post = (0..dst_nodes)
            .map(|k| cis_frac(src_lo_half * k as i64, 2 * dst_m as i64))
            .collect();
        let src_coords = (0..src_nodes)
            .map(|j| src_lo_half as f64 / 2.0 + j as f64 / src_m as f64)
            .collect();
        let dst_coords = (0..dst_nodes)
            .map(|k| dst_lo_half as f64 / 2.0 + k as f64 / dst_m as f64)
            .collect();
        LineZoom {
            src_nodes,
            dst_nodes,
            omega,
            fft,
            pre,
            post,
            src_coords,
            dst_coords,
        }
    }

    /// out[k] = sum_j line[j] exp(2 pi i x_k xi_j), with caller-owned
    /// buffers so hot loops over many lines do not reallocate.
    pub fn apply_with_scratch(
        &self,
        line: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut ZoomScratch,
    ) {
        debug_assert_eq!(line.len(), self.src_nodes);
        debug_assert_eq!(out.len(), self.dst_nodes);
        match &self.fft {
            Some(fft) => {
                let l = self.omega.l;
                scratch.buf.clear();
                scratch.buf.resize(l, Complex64::ZERO);
                for (j, &c) in line.iter().enumerate() {
                    // source indices beyond L alias exactly (phase is periodic)
                    scratch.buf[j % l] += c * self.pre[j];
                }
                scratch
                    .fft_work
                    .resize(fft.get_inplace_scratch_len(), Complex64::ZERO);
                fft.process_with_scratch(&mut scratch.buf, &mut scratch.fft_work);
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.post[k] * scratch.buf[k % l];
                }
            }
            None => {
                for (k, o) in out.iter_mut().enumerate() {
                    let x = self.dst_coords[k];
                    let mut acc = Complex64::ZERO;
                    for (j, &c) in line.iter().enumerate() {
                        let arg = 2.0 * std::f64::consts::PI * x * self.src_coords[j];
                        acc += c * Complex64::new(arg.cos(), arg.sin());
                    }
                    *o = acc;
                }
            }
        }
    }
}

/// Reusable buffers for `LineZoom::apply_with_scratch`.
#[derive(Default)]
pub(crate) struct ZoomScratch {
    buf: Vec<Complex64>,
    fft_work: Vec<Complex64>,
}

/// Phase table for exp(2 pi i x_k xi_j) lookups on one axis pair.
pub(crate) struct PhaseTable {
    omega: Arc<OmegaTable>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(
        src_lo_half: i64,
        src_m: u32,
        src_nodes: usize,
        dst_lo_half: i64,
        dst_m: u32,
        dst_nodes: usize,
    ) -> Self {
        let l = (src_m as usize) * (dst_m as usize);
        let omega = OmegaTable::new(l);
        let phase0 = cis_frac(dst_lo_half * src_lo_half, 4);
        let pre = (0..src_nodes)
            .map(|j| phase0 * cis_frac(dst_lo_half * j as i64, 2 * src_m as i64))
            .collect();
        let post = (0..dst_nodes)
            .map(|k| cis_frac(src_lo_half * k as i64, 2 * dst_m as i64))
            .collect();
        PhaseTable { omega, pre, post }
    }

    /// Phases for a fixed source node over all targets.
    pub fn row(&self, j: usize, out: &mut [Complex64]) {
        let l = self.omega.l;
        let step = j % l;
        let mut t = 0usize;
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.pre[j] * self.post[k] * self.omega.at(t);
            t += step;
            if t >= l {
                t -= l;
            }
        }
    }

    /// Phases for a fixed target node over all sources.
    pub fn column(&self, k: usize, out: &mut [Complex64]) {
        let l = self.omega.l;
        let step = k % l;
        let mut t = 0usize;
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.pre[j] * self.post[k] * self.omega.at(t);
            t += step;
            if t >= l {
                t -= l;
            }
        }
    }
}

/// Apply a zoom transform along `axis` of a row-major array.
pub(crate) fn zoom_axis(
    data: &[Complex64],
    dims: &[usize],
    axis: usize,
    lz: &LineZoom,
    weights: Option<&[f64]>,
) -> (Vec<Complex64>, Vec<usize>) {
    let src_n = dims[axis];
    let dst_n = lz.dst_nodes;
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut new_dims = dims.to_vec();
    new_dims[axis] = dst_n;
    let mut out = vec![Complex64::ZERO; outer * dst_n * inner];
    let mut line = vec![Complex64::ZERO; src_n];
    let mut transformed = vec![Complex64::ZERO; dst_n];
    let mut scratch = ZoomScratch::default();
    for o in 0..outer {
        for i in 0..inner {
            let base = o * src_n * inner + i;
            for j in 0..src_n {
                let v = data[base + j * inner];
                line[j] = match weights {
                    Some(w) => v * w[j],
                    None => v,
                };
            }
            lz.apply_with_scratch(&line, &mut transformed, &mut scratch);
            let obase = o * dst_n * inner + i;
            for k in 0..dst_n {
                out[obase + k * inner] = transformed[k];
            }
        }
    }
    (out, new_dims)
}

/// In-place row-column FFT over a row-major multidimensional array.
pub(crate) fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..dims.len() {
        let n = dims[axis];
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let mut line = vec![Complex64::ZERO; n];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * n * inner + i;
                for j in 0..n {
                    line[j] = data[base + j * inner];
                }
                fft.process(&mut line);
                for j in 0..n {
                    data[base + j * inner] = line[j];
                }
            }
        }
    }
}

/// Trapezoid evaluation of int f(xi) e^{2 pi i x.xi} dxi over f's box at
/// every node of `target`, by per-axis padded FFTs.
pub fn inverse_fourier_field(f: &SampledField, target: &GridBox) -> Result<SampledField> {
    let d = f.grid.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.dim(),
        });
    }
    let mut planner = FftPlanner::new();
    let mut data = f.values.clone();
    let mut dims = f.grid.node_counts();
    for axis in 0..d {
        let lz = LineZoom::new(
            f.grid.lo_half()[axis],
            f.grid.m(),
            f.grid.nodes(axis),
            target.lo_half()[axis],
            target.m(),
            target.nodes(axis),
            &mut planner,
        );
        let w = f.grid.axis_weights(axis);
        let (next, next_dims) = zoom_axis(&data, &dims, axis, &lz, Some(&w));
        data = next;
        dims = next_dims;
    }
    SampledField::new(target.clone(), data)
}

/// inverse_fourier with an explicit transform-grid sample rate.
pub fn inverse_fourier_with(
    b: &BumpSpec,
    target: &GridBox,
    transform_m: u32,
) -> Result<SampledField> {
    if b.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: target.dim(),
        });
    }
    let hull = GridBox::hull_of_box(&b.support_box(), transform_m)?;
    let sampled = sample(b, &hull)?;
    inverse_fourier_field(&sampled, target)
}

/// Numerical inverse Fourier transform of a bump evaluated on `target`.
///
/// The bump is sampled on a refinement of its support box and the oscillatory
/// quadrature sum is evaluated by FFT; target points are hit exactly, no
/// interpolation is involved.
pub fn inverse_fourier(b: &BumpSpec, target: &GridBox) -> Result<SampledField> {
    inverse_fourier_with(b, target, DEFAULT_TRANSFORM_RATE)
}
