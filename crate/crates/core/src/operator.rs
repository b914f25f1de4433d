//! The bilinear multiplier operator: sigma assembly on a frequency grid,
//! application to band-limited inputs, and (L^2, l^q) amalgam norms.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::de::Visitor;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bump::BumpSpec;
use crate::error::{Error, Result};
use crate::fourier::{zoom_axis, LineZoom, PhaseTable};
use crate::grid::{l2_norm, sample, GridBox, SampledField};
use crate::lattice::LatticeIndex;
use crate::lattice::LatticeMatrix;

/// sigma_{A,Phi} sampled on a frequency grid covering its support.
#[derive(Debug, Clone)]
pub struct MultiplierField {
    pub matrix: LatticeMatrix,
    pub bump: BumpSpec,
    pub grid: GridBox,
    pub samples: Vec<Complex64>,
}

impl MultiplierField {
    pub fn n(&self) -> usize {
        self.grid.dim() / 2
    }

    /// Projection of the grid onto the first n (xi) axes.
    pub fn xi_box(&self) -> GridBox {
        let n = self.n();
        GridBox::from_halves(
            self.grid.lo_half()[..n].to_vec(),
            self.grid.hi_half()[..n].to_vec(),
            self.grid.m(),
        )
        .expect("projection of a valid box")
    }

    /// Projection of the grid onto the last n (eta) axes.
    pub fn eta_box(&self) -> GridBox {
        let n = self.n();
        GridBox::from_halves(
            self.grid.lo_half()[n..].to_vec(),
            self.grid.hi_half()[n..].to_vec(),
            self.grid.m(),
        )
        .expect("projection of a valid box")
    }

    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// sum over supp A of a_{mu,nu} Phi(xi - mu, eta - nu) on a cube-partitioned
/// grid covering the Minkowski sum of the index box and supp Phi.
///
/// Phi is sampled once on its aligned hull; integer translates land exactly
/// on grid nodes, so assembly is placement and addition.
pub fn assemble_sigma(a: &LatticeMatrix, phi: &BumpSpec, m: u32) -> Result<MultiplierField> {
    let n = a.n();
    if phi.dim() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: phi.dim(),
        });
    }
    if m < 2 || m % 2 != 0 {
        return Err(Error::BadSampleRate(m));
    }
    let support = phi.support_box();
    let (mu_r, nu_r) = a
        .index_ranges()
        .unwrap_or((vec![(0, 0); n], vec![(0, 0); n]));
    let mut sum_box = Vec::with_capacity(2 * n);
    for (axis, r) in mu_r.iter().chain(nu_r.iter()).enumerate() {
        sum_box.push((r.0 as f64 + support[axis].0, r.1 as f64 + support[axis].1));
    }
    let grid = GridBox::cube_hull_of_box(&sum_box, m)?;
    let phi_grid = GridBox::hull_of_box(&support, m)?;
    let phi_samples = sample(phi, &phi_grid)?;
    let d = 2 * n;
    let counts = grid.node_counts();
    let phi_counts = phi_grid.node_counts();
    let strides: Vec<usize> = (0..d).map(|a0| counts[a0 + 1..].iter().product()).collect();
    let mut values = vec![Complex64::ZERO; grid.total_nodes()];
    for (mu, nu, coeff) in a.iter() {
        let mut base = 0usize;
        for axis in 0..d {
            let shift = if axis < n { mu.0[axis] } else { nu.0[axis - n] };
            let off_half = 2 * shift + phi_grid.lo_half()[axis] - grid.lo_half()[axis];
            let off_nodes = off_half * (m as i64) / 2;
            if off_nodes < 0 || off_nodes as usize + phi_counts[axis] > counts[axis] {
                return Err(Error::SupportViolation(
                    "translated bump exceeds the assembled grid".into(),
                ));
            }
            base += off_nodes as usize * strides[axis];
        }
        let mut idx = vec![0usize; d];
        for &pv in &phi_samples.values {
            if pv != Complex64::ZERO {
                let mut at = base;
                for axis in 0..d {
                    at += idx[axis] * strides[axis];
                }
                values[at] += coeff * pv;
            }
            let mut axis = d;
            loop {
                if axis == 0 {
                    break;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < phi_counts[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }
    Ok(MultiplierField {
        matrix: a.clone(),
        bump: phi.clone(),
        grid,
        samples: values,
    })
}

/// Band-limited input described by its sampled spectrum; the declared L^2
/// norm is the quadrature norm of the spectrum (Plancherel).
#[derive(Debug, Clone)]
pub struct BandLimitedInput {
    pub spectrum: SampledField,
    pub l2: f64,
}

impl BandLimitedInput {
    pub fn new(spectrum: SampledField) -> Result<Self> {
        let l2 = l2_norm(&spectrum);
        if !l2.is_finite() {
            return Err(Error::NonFinite("spectrum"));
        }
        Ok(BandLimitedInput { spectrum, l2 })
    }

    /// Spectrum scaled to unit declared norm.
    pub fn normalized(&self) -> Result<Self> {
        if self.l2 == 0.0 {
            return Err(Error::invalid("spectrum", "cannot normalize a zero spectrum"));
        }
        let s = 1.0 / self.l2;
        BandLimitedInput::new(self.spectrum.map(|v| v * s))
    }
}

/// Extended exponent q in [1, inf]. Serializes as a number or "inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QExponent {
    Finite(f64),
    Infinity,
}

impl QExponent {
    pub fn validate(&self) -> Result<()> {
        if let QExponent::Finite(q) = self {
            if !q.is_finite() || *q < 1.0 {
                return Err(Error::invalid("q", "must lie in [1, inf]"));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if matches!(t, "inf" | "Inf" | "infinity" | "Infinity" | "oo") {
            return Ok(QExponent::Infinity);
        }
        let q: f64 = t
            .parse()
            .map_err(|_| Error::invalid("q", format!("cannot parse {t}")))?;
        let q = QExponent::Finite(q);
        q.validate()?;
        Ok(q)
    }

    pub fn label(&self) -> String {
        match self {
            QExponent::Finite(q) => format!("{q}"),
            QExponent::Infinity => "inf".to_string(),
        }
    }
}

impl Serialize for QExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            QExponent::Finite(q) => s.serialize_f64(*q),
            QExponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for QExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct QVisitor;
        impl Visitor<'_> for QVisitor {
            type Value = QExponent;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "a number in [1, inf) or the string \"inf\"")
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<QExponent, E> {
                Ok(QExponent::Finite(v))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<QExponent, E> {
                Ok(QExponent::Finite(v as f64))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<QExponent, E> {
                Ok(QExponent::Finite(v as f64))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<QExponent, E> {
                QExponent::parse(v).map_err(|e| E::custom(e.to_string()))
            }
        }
        d.deserialize_any(QVisitor)
    }
}

/// (L^2, l^q) norm data: per-cube L^2 masses and their l^q aggregate.
#[derive(Debug, Clone)]
pub struct AmalgamNorm {
    pub q: QExponent,
    pub per_cube: BTreeMap<LatticeIndex, f64>,
    pub value: f64,
}

/// Per-cube L^2 masses over the unit-cube partition of the field's box,
/// aggregated in l^q (max when q = inf).
pub fn amalgam_norm(f: &SampledField, q: QExponent) -> Result<AmalgamNorm> {
    q.validate()?;
    let g = &f.grid;
    if !g.is_cube_partition() {
        return Err(Error::NotCubeAligned);
    }
    let d = g.dim();
    let m = g.m() as usize;
    let counts = g.node_counts();
    let cubes_per_axis: Vec<usize> = (0..d).map(|a| g.cells(a) / m).collect();
    let h = g.spacing();
    let mut per_cube = BTreeMap::new();
    let mut cube = vec![0usize; d];
    loop {
        let mut acc = 0.0f64;
        let mut local = vec![0usize; d];
        loop {
            let mut flat = 0usize;
            let mut w = 1.0f64;
            for a in 0..d {
                let j = cube[a] * m + local[a];
                flat = flat * counts[a] + j;
                w *= if local[a] == 0 || local[a] == m {
                    0.5 * h
                } else {
                    h
                };
            }
            acc += w * f.values[flat].norm_sqr();
            let mut a = d;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                local[a] += 1;
                if local[a] <= m {
                    break;
                }
                local[a] = 0;
            }
            if local.iter().all(|&x| x == 0) {
                break;
            }
        }
        // cube center: lo is half-odd, so nu = (lo_half + 1)/2 + cube index
        let nu = LatticeIndex(
            (0..d)
                .map(|a| (g.lo_half()[a] + 1) / 2 + cube[a] as i64)
                .collect(),
        );
        per_cube.insert(nu, acc.max(0.0).sqrt());
        let mut a = d;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            cube[a] += 1;
            if cube[a] < cubes_per_axis[a] {
                break;
            }
            cube[a] = 0;
        }
        if cube.iter().all(|&x| x == 0) {
            break;
        }
    }
    let value = match q {
        QExponent::Infinity => per_cube.values().copied().fold(0.0, f64::max),
        QExponent::Finite(qv) => {
            let max = per_cube.values().copied().fold(0.0, f64::max);
            if max == 0.0 {
                0.0
            } else {
                // factor out the max for a stable power sum
                let s: f64 = per_cube.values().map(|v| (v / max).powf(qv)).sum();
                max * s.powf(1.0 / qv)
            }
        }
    };
    Ok(AmalgamNorm { q, per_cube, value })
}

/// Evaluation path for the bilinear operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyPath {
    /// Per-xi-node inverse FFT over eta, then phased accumulation.
    Fast,
    /// Literal triple-loop quadrature; the oracle path.
    Direct,
}

fn check_contained(outer: &GridBox, inner: &GridBox, what: &str) -> Result<()> {
    if outer.m() != inner.m() {
        return Err(Error::Incommensurate(format!(
            "{what}: spectrum rate m={} differs from multiplier rate m={}",
            inner.m(),
            outer.m()
        )));
    }
    if !outer.contains(inner) {
        return Err(Error::SpectrumOutOfRange(format!(
            "{what} box [{:?}, {:?}]/2 not inside [{:?}, {:?}]/2",
            inner.lo_half(),
            inner.hi_half(),
            outer.lo_half(),
            outer.hi_half()
        )));
    }
    Ok(())
}

/// Trapezoid weights of a whole grid, flattened in node order.
fn grid_weights(g: &GridBox) -> Vec<f64> {
    let d = g.dim();
    let counts = g.node_counts();
    let axis_w: Vec<Vec<f64>> = (0..d).map(|a| g.axis_weights(a)).collect();
    let mut out = Vec::with_capacity(g.total_nodes());
    let mut idx = vec![0usize; d];
    loop {
        let mut w = 1.0;
        for a in 0..d {
            w *= axis_w[a][idx[a]];
        }
        out.push(w);
        let mut a = d;
        loop {
            if a == 0 {
                return out;
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

struct SigmaRows<'a> {
    sigma: &'a [Complex64],
    xi_strides: Vec<usize>,
    eta_strides: Vec<usize>,
    eta_counts: Vec<usize>,
    xi_offset_base: usize,
    eta_offset_base: usize,
}

impl<'a> SigmaRows<'a> {
    fn new(
        sigma_grid: &GridBox,
        sigma: &'a [Complex64],
        xi_offset: &[usize],
        eta_offset: &[usize],
        eta_grid: &GridBox,
    ) -> Self {
        let n = xi_offset.len();
        let counts = sigma_grid.node_counts();
        let strides: Vec<usize> = (0..2 * n)
            .map(|a| counts[a + 1..].iter().product())
            .collect();
        let xi_strides = strides[..n].to_vec();
        let eta_strides = strides[n..].to_vec();
        let xi_offset_base: usize = xi_offset
            .iter()
            .zip(&xi_strides)
            .map(|(o, s)| o * s)
            .sum();
        let eta_offset_base: usize = eta_offset
            .iter()
            .zip(&eta_strides)
            .map(|(o, s)| o * s)
            .sum();
        SigmaRows {
            sigma,
            xi_strides,
            eta_strides,
            eta_counts: eta_grid.node_counts(),
            xi_offset_base,
            eta_offset_base,
        }
    }

    /// sigma(xi_I, eta_J) over all eta nodes J, for a fixed xi multi-index I.
    fn gather(&self, xi_idx: &[usize], out: &mut [Complex64]) {
        let n = xi_idx.len();
        let mut base = self.xi_offset_base + self.eta_offset_base;
        for a in 0..n {
            base += xi_idx[a] * self.xi_strides[a];
        }
        if n == 1 && self.eta_strides[0] == 1 {
            out.copy_from_slice(&self.sigma[base..base + out.len()]);
            return;
        }
        let mut j = vec![0usize; n];
        for o in out.iter_mut() {
            let mut at = base;
            for a in 0..n {
                at += j[a] * self.eta_strides[a];
            }
            *o = self.sigma[at];
            let mut a = n;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                j[a] += 1;
                if j[a] < self.eta_counts[a] {
                    break;
                }
                j[a] = 0;
            }
        }
    }
}

/// Product of per-axis phase columns over a flattened source grid.
fn phase_column_nd(
    tables: &[PhaseTable],
    counts: &[usize],
    xk: &[usize],
    out: &mut [Complex64],
) {
    let n = tables.len();
    if n == 1 {
        tables[0].column(xk[0], out);
        return;
    }
    let cols: Vec<Vec<Complex64>> = (0..n)
        .map(|a| {
            let mut c = vec![Complex64::ZERO; counts[a]];
            tables[a].column(xk[a], &mut c);
            c
        })
        .collect();
    let mut idx = vec![0usize; n];
    for o in out.iter_mut() {
        let mut ph = Complex64::new(1.0, 0.0);
        for a in 0..n {
            ph *= cols[a][idx[a]];
        }
        *o = ph;
        let mut a = n;
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
}

/// T(f, g)(x): quadrature of the double frequency integral
/// iint e^{2 pi i x.(xi+eta)} sigma(xi,eta) fhat(xi) ghat(eta) dxi deta
/// at every node of `x_grid`.
///
/// Fast path: for each xi node the inner eta integral over all x is one
/// padded inverse FFT; the outer loop accumulates with the e^{2 pi i x.xi}
/// phase. Cost O(N_xi (M log M + M)) for n = 1. The direct path is the
/// literal O(N_xi N_eta M) sum kept as an oracle.
pub fn apply_t_raw(
    sigma_grid: &GridBox,
    sigma: &[Complex64],
    fhat: &SampledField,
    ghat: &SampledField,
    x_grid: &GridBox,
    path: ApplyPath,
) -> Result<SampledField> {
    let n = fhat.grid.dim();
    if ghat.grid.dim() != n || x_grid.dim() != n || sigma_grid.dim() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: sigma_grid.dim(),
        });
    }
    if sigma.len() != sigma_grid.total_nodes() {
        return Err(Error::invalid("sigma", "sample count does not match grid"));
    }
    if !x_grid.is_cube_partition() {
        return Err(Error::NotCubeAligned);
    }
    let xi_proj = GridBox::from_halves(
        sigma_grid.lo_half()[..n].to_vec(),
        sigma_grid.hi_half()[..n].to_vec(),
        sigma_grid.m(),
    )?;
    let eta_proj = GridBox::from_halves(
        sigma_grid.lo_half()[n..].to_vec(),
        sigma_grid.hi_half()[n..].to_vec(),
        sigma_grid.m(),
    )?;
    check_contained(&xi_proj, &fhat.grid, "fhat")?;
    check_contained(&eta_proj, &ghat.grid, "ghat")?;
    let xi_offset = xi_proj.offset_of(&fhat.grid).expect("checked containment");
    let eta_offset = eta_proj.offset_of(&ghat.grid).expect("checked containment");
    let rows = SigmaRows::new(sigma_grid, sigma, &xi_offset, &eta_offset, &ghat.grid);

    let xi_counts = fhat.grid.node_counts();
    let eta_total = ghat.grid.total_nodes();
    let x_total = x_grid.total_nodes();
    let f_weighted: Vec<Complex64> = grid_weights(&fhat.grid)
        .into_iter()
        .zip(&fhat.values)
        .map(|(w, &v)| w * v)
        .collect();
    let g_weighted: Vec<Complex64> = grid_weights(&ghat.grid)
        .into_iter()
        .zip(&ghat.values)
        .map(|(w, &v)| w * v)
        .collect();
    let mut out = vec![Complex64::ZERO; x_total];
    let mut row = vec![Complex64::ZERO; eta_total];

    match path {
        ApplyPath::Fast => {
            let mut planner = FftPlanner::new();
            let zooms: Vec<LineZoom> = (0..n)
                .map(|a| {
                    LineZoom::new(
                        ghat.grid.lo_half()[a],
                        ghat.grid.m(),
                        ghat.grid.nodes(a),
                        x_grid.lo_half()[a],
                        x_grid.m(),
                        x_grid.nodes(a),
                        &mut planner,
                    )
                })
                .collect();
            let xi_phases: Vec<PhaseTable> = (0..n)
                .map(|a| {
                    PhaseTable::new(
                        fhat.grid.lo_half()[a],
                        fhat.grid.m(),
                        fhat.grid.nodes(a),
                        x_grid.lo_half()[a],
                        x_grid.m(),
                        x_grid.nodes(a),
                    )
                })
                .collect();
            let x_counts = x_grid.node_counts();
            let mut phase_rows: Vec<Vec<Complex64>> =
                (0..n).map(|a| vec![Complex64::ZERO; x_counts[a]]).collect();
            let mut idx = vec![0usize; n];
            for &coeff in f_weighted.iter() {
                if coeff != Complex64::ZERO {
                    rows.gather(&idx, &mut row);
                    for (r, gw) in row.iter_mut().zip(&g_weighted) {
                        *r *= gw;
                    }
                    // inner eta integral for all x at once
                    let mut data = row.clone();
                    let mut dims = ghat.grid.node_counts();
                    for a in 0..n {
                        let (next, nd) = zoom_axis(&data, &dims, a, &zooms[a], None);
                        data = next;
                        dims = nd;
                    }
                    for a in 0..n {
                        xi_phases[a].row(idx[a], &mut phase_rows[a]);
                    }
                    let mut k = vec![0usize; n];
                    for (o, &val) in out.iter_mut().zip(&data) {
                        let mut ph = coeff;
                        for a in 0..n {
                            ph *= phase_rows[a][k[a]];
                        }
                        *o += ph * val;
                        let mut a = n;
                        loop {
                            if a == 0 {
                                break;
                            }
                            a -= 1;
                            k[a] += 1;
                            if k[a] < x_counts[a] {
                                break;
                            }
                            k[a] = 0;
                        }
                    }
                }
                let mut a = n;
                loop {
                    if a == 0 {
                        break;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] < xi_counts[a] {
                        break;
                    }
                    idx[a] = 0;
                }
            }
        }
        ApplyPath::Direct => {
            let f_total = fhat.grid.total_nodes();
            // sigma rows with g weights folded in, gathered once
            let mut table = vec![Complex64::ZERO; f_total * eta_total];
            let mut idx = vec![0usize; n];
            for i in 0..f_total {
                let slot = &mut table[i * eta_total..(i + 1) * eta_total];
                rows.gather(&idx, slot);
                for (s, gw) in slot.iter_mut().zip(&g_weighted) {
                    *s *= gw;
                }
                let mut a = n;
                loop {
                    if a == 0 {
                        break;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] < xi_counts[a] {
                        break;
                    }
                    idx[a] = 0;
                }
            }
            let f_phase: Vec<PhaseTable> = (0..n)
                .map(|a| {
                    PhaseTable::new(
                        fhat.grid.lo_half()[a],
                        fhat.grid.m(),
                        fhat.grid.nodes(a),
                        x_grid.lo_half()[a],
                        x_grid.m(),
                        x_grid.nodes(a),
                    )
                })
                .collect();
            let g_phase: Vec<PhaseTable> = (0..n)
                .map(|a| {
                    PhaseTable::new(
                        ghat.grid.lo_half()[a],
                        ghat.grid.m(),
                        ghat.grid.nodes(a),
                        x_grid.lo_half()[a],
                        x_grid.m(),
                        x_grid.nodes(a),
                    )
                })
                .collect();
            let eta_counts = ghat.grid.node_counts();
            let mut fcol = vec![Complex64::ZERO; f_total];
            let mut gcol = vec![Complex64::ZERO; eta_total];
            for (xflat, o) in out.iter_mut().enumerate() {
                let xk = x_grid.unflatten(xflat);
                phase_column_nd(&f_phase, &xi_counts, &xk, &mut fcol);
                phase_column_nd(&g_phase, &eta_counts, &xk, &mut gcol);
                let mut acc = Complex64::ZERO;
                for (i, &fv) in f_weighted.iter().enumerate() {
                    if fv == Complex64::ZERO {
                        continue;
                    }
                    let slot = &table[i * eta_total..(i + 1) * eta_total];
                    let mut inner = Complex64::ZERO;
                    for (&s, &gp) in slot.iter().zip(gcol.iter()) {
                        inner += s * gp;
                    }
                    acc += fv * fcol[i] * inner;
                }
                *o = acc;
            }
        }
    }
    SampledField::new(x_grid.clone(), out)
}

/// Apply the operator of an assembled multiplier. See `apply_t_raw`.
pub fn apply_t(
    sigma: &MultiplierField,
    f: &BandLimitedInput,
    g: &BandLimitedInput,
    x_grid: &GridBox,
    path: ApplyPath,
) -> Result<SampledField> {
    apply_t_raw(
        &sigma.grid,
        &sigma.samples,
        &f.spectrum,
        &g.spectrum,
        x_grid,
        path,
    )
}

/// Random unit-norm band-limited input with spectrum on `band` (zero at the
/// box boundary so the trapezoid norm is exact).
pub fn random_band_limited(band: &GridBox, rng: &mut ChaCha8Rng) -> Result<BandLimitedInput> {
    let counts = band.node_counts();
    let d = band.dim();
    let total = band.total_nodes();
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let boundary = (0..d).any(|a| idx[a] == 0 || idx[a] == counts[a] - 1);
        if boundary {
            values.push(Complex64::ZERO);
        } else {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            values.push(Complex64::new(re, im));
        }
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
    let field = SampledField::new(band.clone(), values)?;
    BandLimitedInput::new(field)?.normalized()
}

/// Result of the Monte Carlo lower bound: the best value and the attaining pair.
#[derive(Debug, Clone)]
pub struct EmpiricalLower {
    pub value: f64,
    pub best: Option<(BandLimitedInput, BandLimitedInput)>,
}

/// Max over seeded random unit input pairs of the (L^2, l^q) norm of the
/// output on `x_grid`; always a valid lower bound for the multiplier norm,
/// never an upper bound.
pub fn empirical_operator_lower(
    sigma: &MultiplierField,
    q: QExponent,
    trials: usize,
    seed: u64,
    x_grid: &GridBox,
) -> Result<EmpiricalLower> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    if sigma.sup_abs() == 0.0 {
        return Ok(EmpiricalLower {
            value: 0.0,
            best: None,
        });
    }
    let xi = sigma.xi_box();
    let eta = sigma.eta_box();
    let mut best = EmpiricalLower {
        value: 0.0,
        best: None,
    };
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let f = random_band_limited(&xi, &mut rng)?;
        let g = random_band_limited(&eta, &mut rng)?;
        let out = apply_t(sigma, &f, &g, x_grid, ApplyPath::Fast)?;
        let nrm = amalgam_norm(&out, q)?.value;
        if nrm > best.value {
            best = EmpiricalLower {
                value: nrm,
                best: Some((f, g)),
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::inverse_fourier_field;
    use approx::assert_abs_diff_eq;

    fn idx(k: i64) -> LatticeIndex {
        LatticeIndex::scalar(k)
    }

    fn plateau2() -> BumpSpec {
        BumpSpec::tensor_power(
            BumpSpec::plateau(vec![(-0.25, 0.25)], vec![(-0.5, 0.5)]),
            2,
        )
    }

    #[test]
    fn assemble_single_translate_is_phi() {
        let a = LatticeMatrix::from_entries(1, vec![(idx(0), idx(0), Complex64::new(1.0, 0.0))])
            .unwrap();
        let sigma = assemble_sigma(&a, &plateau2(), 8).unwrap();
        let direct = sample(&plateau2(), &sigma.grid).unwrap();
        assert_eq!(sigma.samples, direct.values);
    }

    #[test]
    fn assemble_disjoint_translates_keep_sup() {
        let a = LatticeMatrix::from_entries(
            1,
            vec![
                (idx(0), idx(0), Complex64::new(1.0, 0.0)),
                (idx(3), idx(0), Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let sigma = assemble_sigma(&a, &plateau2(), 8).unwrap();
        assert_abs_diff_eq!(sigma.sup_abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn assemble_overlaps_match_pointwise_oracle() {
        let phi = BumpSpec::tensor_power(BumpSpec::StdBump, 2);
        let mut entries = Vec::new();
        for mu in 0..2 {
            for nu in 0..2 {
                entries.push((
                    idx(mu),
                    idx(nu),
                    Complex64::new(1.0 + mu as f64, 0.5 * nu as f64),
                ));
            }
        }
        let a = LatticeMatrix::from_entries(1, entries).unwrap();
        let sigma = assemble_sigma(&a, &phi, 16).unwrap();
        let g = &sigma.grid;
        let total = g.total_nodes();
        for t in 0..10 {
            let flat = (t * 997) % total;
            let p = g.point(flat);
            let mut expect = Complex64::ZERO;
            for (mu, nu, c) in a.iter() {
                expect += c * phi.eval(&[p[0] - mu.0[0] as f64, p[1] - nu.0[0] as f64]);
            }
            let got = sigma.samples[flat];
            assert_abs_diff_eq!(got.re, expect.re, epsilon = 1e-12);
            assert_abs_diff_eq!(got.im, expect.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn sigma_sup_bound_invariant() {
        let phi = BumpSpec::tensor_power(BumpSpec::StdBump, 2);
        let a = LatticeMatrix::from_entries(
            1,
            vec![
                (idx(0), idx(0), Complex64::new(1.0, 0.0)),
                (idx(1), idx(0), Complex64::new(-2.0, 1.0)),
                (idx(0), idx(1), Complex64::new(0.0, 3.0)),
            ],
        )
        .unwrap();
        let sigma = assemble_sigma(&a, &phi, 8).unwrap();
        // supp Phi is 2 units wide per axis: at most 3 translates cover a
        // point per axis, 9 in the plane
        let bound = 9.0 * phi.sup_abs_hint() * a.max_abs();
        assert!(sigma.sup_abs() <= bound + 1e-12);
    }

    #[test]
    fn multiplier_identity_sigma_one() {
        // sigma = 1 on a box covering both spectra: T(f,g) = f * g
        let m = 16;
        let band = GridBox::new(&[-0.5], &[0.5], m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_band_limited(&band, &mut rng).unwrap();
        let g = random_band_limited(&band, &mut rng).unwrap();
        let sigma_grid = GridBox::new(&[-0.5, -0.5], &[0.5, 0.5], m).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); sigma_grid.total_nodes()];
        let x_grid = GridBox::new(&[-2.5], &[2.5], 32).unwrap();
        let out = apply_t_raw(
            &sigma_grid,
            &ones,
            &f.spectrum,
            &g.spectrum,
            &x_grid,
            ApplyPath::Fast,
        )
        .unwrap();
        let fx = inverse_fourier_field(&f.spectrum, &x_grid).unwrap();
        let gx = inverse_fourier_field(&g.spectrum, &x_grid).unwrap();
        let mut sup = 0.0f64;
        for ((&o, &a), &b) in out.values.iter().zip(&fx.values).zip(&gx.values) {
            sup = sup.max((o - a * b).norm());
        }
        assert!(sup <= 1e-8, "sup deviation {sup}");
    }

    #[test]
    fn separable_sigma_is_product_of_filters() {
        let m = 16;
        let band = GridBox::new(&[-0.5], &[0.5], m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_band_limited(&band, &mut rng).unwrap();
        let g = random_band_limited(&band, &mut rng).unwrap();
        let u = BumpSpec::plateau(vec![(-0.25, 0.25)], vec![(-0.5, 0.5)]);
        let v = BumpSpec::scaled(0.0, 0.5);
        let sigma_grid = GridBox::new(&[-0.5, -0.5], &[0.5, 0.5], m).unwrap();
        let uf = sample(&u, &band).unwrap();
        let vf = sample(&v, &band).unwrap();
        let nb = band.total_nodes();
        let mut sep = Vec::with_capacity(nb * nb);
        for i in 0..nb {
            for j in 0..nb {
                sep.push(uf.values[i] * vf.values[j]);
            }
        }
        let x_grid = GridBox::new(&[-1.5], &[1.5], 32).unwrap();
        let out = apply_t_raw(
            &sigma_grid,
            &sep,
            &f.spectrum,
            &g.spectrum,
            &x_grid,
            ApplyPath::Fast,
        )
        .unwrap();
        let ffilt =
            inverse_fourier_field(&f.spectrum.pointwise_mul(&uf).unwrap(), &x_grid).unwrap();
        let gfilt =
            inverse_fourier_field(&g.spectrum.pointwise_mul(&vf).unwrap(), &x_grid).unwrap();
        let mut sup = 0.0f64;
        for ((&o, &a), &b) in out.values.iter().zip(&ffilt.values).zip(&gfilt.values) {
            sup = sup.max((o - a * b).norm());
        }
        assert!(sup <= 1e-8, "sup deviation {sup}");
    }

    #[test]
    fn fast_equals_direct_on_random_instance() {
        let m = 16;
        let a = LatticeMatrix::from_entries(
            1,
            vec![
                (idx(0), idx(0), Complex64::new(1.0, 0.5)),
                (idx(-1), idx(1), Complex64::new(-0.25, 1.0)),
            ],
        )
        .unwrap();
        let sigma = assemble_sigma(&a, &plateau2(), m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let f = random_band_limited(&sigma.xi_box(), &mut rng).unwrap();
        let g = random_band_limited(&sigma.eta_box(), &mut rng).unwrap();
        let x_grid = GridBox::new(&[-2.5], &[2.5], 16).unwrap();
        let fast = apply_t(&sigma, &f, &g, &x_grid, ApplyPath::Fast).unwrap();
        let direct = apply_t(&sigma, &f, &g, &x_grid, ApplyPath::Direct).unwrap();
        let scale = direct.max_abs().max(1e-300);
        let mut sup = 0.0f64;
        for (&af, &ad) in fast.values.iter().zip(&direct.values) {
            sup = sup.max((af - ad).norm() / scale);
        }
        assert!(sup <= 1e-10, "relative deviation {sup}");
    }

    #[test]
    fn spectrum_out_of_range_is_hard_error() {
        let a = LatticeMatrix::from_entries(1, vec![(idx(0), idx(0), Complex64::new(1.0, 0.0))])
            .unwrap();
        let sigma = assemble_sigma(&a, &plateau2(), 8).unwrap();
        let wide = GridBox::new(&[-3.5], &[3.5], 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_band_limited(&wide, &mut rng).unwrap();
        let g = random_band_limited(&sigma.eta_box(), &mut rng).unwrap();
        let x_grid = GridBox::new(&[-0.5], &[0.5], 8).unwrap();
        let err = apply_t(&sigma, &f, &g, &x_grid, ApplyPath::Fast).unwrap_err();
        assert!(matches!(err, Error::SpectrumOutOfRange(_)));
    }

    #[test]
    fn amalgam_single_cube_all_q() {
        // f = 1 on exactly one unit cube: the box is that cube
        let g = GridBox::new(&[-0.5], &[0.5], 8).unwrap();
        let f = SampledField::new(g, vec![Complex64::new(1.0, 0.0); 9]).unwrap();
        for q in [
            QExponent::Finite(1.0),
            QExponent::Finite(2.0),
            QExponent::Infinity,
        ] {
            let nrm = amalgam_norm(&f, q).unwrap();
            assert_abs_diff_eq!(nrm.value, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn amalgam_two_cubes_hand_values() {
        // f = 1 on two adjacent unit cubes
        let g = GridBox::new(&[-0.5], &[1.5], 8).unwrap();
        let f = SampledField::new(g, vec![Complex64::new(1.0, 0.0); 17]).unwrap();
        let q1 = amalgam_norm(&f, QExponent::Finite(1.0)).unwrap().value;
        let q2 = amalgam_norm(&f, QExponent::Finite(2.0)).unwrap().value;
        let qi = amalgam_norm(&f, QExponent::Infinity).unwrap().value;
        assert_abs_diff_eq!(q1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q2, 2.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(qi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn amalgam_q2_is_global_l2() {
        let band = GridBox::new(&[-0.5], &[0.5], 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = random_band_limited(&band, &mut rng).unwrap();
        let x_grid = GridBox::new(&[-4.5], &[4.5], 16).unwrap();
        let fx = inverse_fourier_field(&f.spectrum, &x_grid).unwrap();
        let amal = amalgam_norm(&fx, QExponent::Finite(2.0)).unwrap().value;
        let global = l2_norm(&fx);
        assert_abs_diff_eq!(amal, global, epsilon = 1e-10);
    }

    #[test]
    fn amalgam_rejects_misaligned_grid() {
        let g = GridBox::new(&[-1.0], &[1.0], 8).unwrap();
        let f = SampledField::zeros(g);
        assert!(matches!(
            amalgam_norm(&f, QExponent::Finite(2.0)),
            Err(Error::NotCubeAligned)
        ));
    }

    #[test]
    fn plancherel_declared_norm() {
        let band = GridBox::new(&[-1.5], &[1.5], 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_band_limited(&band, &mut rng).unwrap();
        assert_abs_diff_eq!(f.l2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l2_norm(&f.spectrum), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn empirical_zero_sigma_is_zero() {
        let a =
            LatticeMatrix::from_entries(1, vec![(idx(0), idx(0), Complex64::ZERO)]).unwrap();
        let sigma = assemble_sigma(&a, &plateau2(), 8).unwrap();
        let x_grid = GridBox::new(&[-1.5], &[1.5], 8).unwrap();
        let e = empirical_operator_lower(&sigma, QExponent::Infinity, 3, 0, &x_grid).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn empirical_is_monotone_in_trials() {
        let a = LatticeMatrix::from_entries(1, vec![(idx(0), idx(0), Complex64::new(1.0, 0.0))])
            .unwrap();
        let sigma = assemble_sigma(&a, &plateau2(), 8).unwrap();
        let x_grid = GridBox::new(&[-1.5], &[1.5], 8).unwrap();
        let e4 = empirical_operator_lower(&sigma, QExponent::Infinity, 4, 7, &x_grid).unwrap();
        let e8 = empirical_operator_lower(&sigma, QExponent::Infinity, 8, 7, &x_grid).unwrap();
        assert!(e8.value >= e4.value);
    }

    #[test]
    fn q_parsing() {
        assert_eq!(QExponent::parse("inf").unwrap(), QExponent::Infinity);
        assert_eq!(QExponent::parse("2").unwrap(), QExponent::Finite(2.0));
        assert!(QExponent::parse("0.5").is_err());
    }
}
