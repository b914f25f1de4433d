//! Dual-window analysis of bump translates.
//!
//! A bump Phi admits a compactly supported biorthogonal window Theta when the
//! moment problem int Theta Phi(.-alpha) = delta_{alpha,0} is solvable with
//! Theta supported in a chosen open window. On a grid this is a finite linear
//! system over the translates meeting the window: the target moment vector
//! lies in the row space (window found), or the row space has a defect whose
//! null direction with nonzero zeroth coordinate annihilates the translates
//! and obstructs every window candidate (window refuted), or neither can be
//! certified on this window.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bump::BumpSpec;
use crate::error::{Error, Result};
use crate::grid::{quad, sample, GridBox, SampledField};
use crate::lattice::LatticeIndex;

/// Relative singular-value cutoff for the numerical rank.
const RANK_TOL: f64 = 1e-8;

/// Relative amplitude below which obstruction coefficients are ignored when
/// fitting a geometric extension pattern.
const PATTERN_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Outcome of the dual-window search on one window.
#[derive(Debug, Clone)]
pub struct ConditionAReport {
    pub verdict: Verdict,
    pub window: GridBox,
    /// Mollified dual window (grid solution times the smooth cutoff).
    pub theta: Option<SampledField>,
    /// Annihilating coefficients with c_0 = 1, present when the verdict is
    /// Fails.
    pub obstruction: Option<Vec<(LatticeIndex, f64)>>,
    /// Singular values of the weighted translate system, descending.
    pub rank_data: Vec<f64>,
    /// Holds: max biorthogonality defect. Fails: relative annihilation
    /// residual. Inconclusive: distance of the moment vector from the row
    /// space.
    pub residual: f64,
}

/// Lattice translates of supp(phi) meeting the open window.
fn overlapping_translates(phi: &BumpSpec, window: &GridBox) -> Vec<LatticeIndex> {
    let support = phi.support_box();
    let d = window.dim();
    let mut ranges = Vec::with_capacity(d);
    for a in 0..d {
        let (slo, shi) = support[a];
        // alpha + slo < win_hi and alpha + shi > win_lo, strict overlap
        let lo = (window.lo(a) - shi).floor() as i64 + 1;
        let hi = (window.hi(a) - slo).ceil() as i64 - 1;
        ranges.push((lo, hi));
    }
    let mut out = vec![Vec::new()];
    for &(lo, hi) in &ranges {
        let mut next = Vec::new();
        for prefix in &out {
            for c in lo..=hi {
                let mut p = prefix.clone();
                p.push(c);
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(LatticeIndex).collect()
}

/// Smooth cutoff supported inside the window, equal to 1 on its middle half.
fn window_cutoff(window: &GridBox) -> BumpSpec {
    let d = window.dim();
    let mut inner = Vec::with_capacity(d);
    let mut outer = Vec::with_capacity(d);
    for a in 0..d {
        let lo = window.lo(a);
        let hi = window.hi(a);
        let c = 0.5 * (lo + hi);
        let w = 0.5 * (hi - lo);
        inner.push((c - 0.5 * w, c + 0.5 * w));
        outer.push((lo, hi));
    }
    BumpSpec::plateau(inner, outer)
}

/// Weighted translate rows and the raw samples behind them.
struct RowData {
    /// M[alpha, x] = w_x cutoff(x) phi(x - alpha).
    rows: Vec<Vec<f64>>,
    /// phi(x - alpha) without weights, for annihilation checks.
    raw: Vec<Vec<f64>>,
    cutoff: Vec<f64>,
    grid: GridBox,
}

fn build_rows(
    phi: &BumpSpec,
    window: &GridBox,
    translates: &[LatticeIndex],
    m: u32,
) -> Result<RowData> {
    let grid = GridBox::from_halves(window.lo_half().to_vec(), window.hi_half().to_vec(), m)?;
    let cutoff_bump = window_cutoff(window);
    let cutoff_field = sample(&cutoff_bump, &grid)?;
    let cutoff: Vec<f64> = cutoff_field.values.iter().map(|v| v.re).collect();
    let d = grid.dim();
    let total = grid.total_nodes();
    let counts = grid.node_counts();
    let axis_w: Vec<Vec<f64>> = (0..d).map(|a| grid.axis_weights(a)).collect();
    let nt = translates.len();
    let mut rows = vec![vec![0.0f64; total]; nt];
    let mut raw = vec![vec![0.0f64; total]; nt];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    let mut y = vec![0.0f64; d];
    for flat in 0..total {
        let mut w = 1.0;
        for a in 0..d {
            x[a] = grid.coord(a, idx[a]);
            w *= axis_w[a][idx[a]];
        }
        for (t, alpha) in translates.iter().enumerate() {
            for a in 0..d {
                y[a] = x[a] - alpha.0[a] as f64;
            }
            let v = phi.eval(&y);
            raw[t][flat] = v;
            rows[t][flat] = v * w * cutoff[flat];
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
    Ok(RowData {
        rows,
        raw,
        cutoff,
        grid,
    })
}

/// Thin SVD of the weighted row matrix, taken through a Householder QR of
/// its transpose so the small factor carries the conditioning.
struct RowSvd {
    /// Descending singular values.
    singular: Vec<f64>,
    rank: usize,
    /// Left singular vectors, nt x nt, columns in descending order.
    u: DMatrix<f64>,
    /// Right singular vectors, total x nt, columns in descending order.
    v: DMatrix<f64>,
}

fn row_svd(rows: &[Vec<f64>]) -> Result<RowSvd> {
    let nt = rows.len();
    let total = rows[0].len();
    if total < nt {
        return Err(Error::WindowTooSmall);
    }
    // A = M^T (total x nt); M = R^T Q^T from A = Q R
    let a = DMatrix::<f64>::from_fn(total, nt, |i, j| rows[j][i]);
    let qr = a.qr();
    let q = qr.q();
    let r = qr.r();
    let svd = r.transpose().svd(true, true);
    let us = svd.u.expect("u requested");
    let vs = svd.v_t.expect("v_t requested").transpose();
    let mut order: Vec<usize> = (0..nt).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .expect("finite singular values")
    });
    let singular: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut u = DMatrix::<f64>::zeros(nt, nt);
    let qvs = &q * &vs;
    let mut v = DMatrix::<f64>::zeros(total, nt);
    for (pos, &i) in order.iter().enumerate() {
        u.set_column(pos, &us.column(i));
        v.set_column(pos, &qvs.column(i));
    }
    let smax = singular.first().copied().unwrap_or(0.0);
    let rank = singular.iter().filter(|&&s| s > RANK_TOL * smax).count();
    Ok(RowSvd {
        singular,
        rank,
        u,
        v,
    })
}

struct WindowSystem {
    translates: Vec<LatticeIndex>,
    data: RowData,
    svd: RowSvd,
    /// Distance of e_0 from the row range.
    residual: f64,
    /// e_0 minus its range projection (the canonical null direction).
    defect: DVector<f64>,
}

fn build_system(
    phi: &BumpSpec,
    window: &GridBox,
    translates: &[LatticeIndex],
    m: u32,
) -> Result<WindowSystem> {
    let data = build_rows(phi, window, translates, m)?;
    let svd = row_svd(&data.rows)?;
    let nt = translates.len();
    let zero_pos = translates
        .iter()
        .position(LatticeIndex::is_zero)
        .ok_or(Error::WindowTooSmall)?;
    let e0 = DVector::<f64>::from_fn(nt, |i, _| if i == zero_pos { 1.0 } else { 0.0 });
    let mut proj = DVector::<f64>::zeros(nt);
    for i in 0..svd.rank {
        let col = svd.u.column(i);
        proj += col.dot(&e0) * col;
    }
    let defect = &e0 - &proj;
    let residual = defect.norm();
    Ok(WindowSystem {
        translates: translates.to_vec(),
        data,
        svd,
        residual,
        defect,
    })
}

/// Numerical rank of the weighted translate system at a given rate.
fn rank_at(
    phi: &BumpSpec,
    window: &GridBox,
    translates: &[LatticeIndex],
    m: u32,
) -> Result<usize> {
    let data = build_rows(phi, window, translates, m)?;
    Ok(row_svd(&data.rows)?.rank)
}

impl WindowSystem {
    fn zero_pos(&self) -> usize {
        self.translates
            .iter()
            .position(LatticeIndex::is_zero)
            .expect("zero translate present")
    }

    fn grid(&self) -> &GridBox {
        &self.data.grid
    }

    /// Minimum-norm grid solution of M t = e_0, returned mollified (t times
    /// the cutoff) on the window grid.
    fn solve_theta(&self) -> SampledField {
        let zero = self.zero_pos();
        let total = self.grid().total_nodes();
        // t = sum_i (u_i . e0) / s_i  v_i over the numerical rank
        let mut t_vec = vec![0.0f64; total];
        for i in 0..self.svd.rank {
            let c = self.svd.u.column(i)[zero] / self.svd.singular[i];
            if c != 0.0 {
                for (slot, &vi) in t_vec.iter_mut().zip(self.svd.v.column(i).iter()) {
                    *slot += c * vi;
                }
            }
        }
        let values = t_vec
            .iter()
            .zip(&self.data.cutoff)
            .map(|(&t, &c)| Complex64::new(t * c, 0.0))
            .collect();
        SampledField::new(self.grid().clone(), values).expect("grid-sized values")
    }

    /// Biorthogonality defect of a solved window:
    /// max_alpha |sum_x w cutoff t phi(.-alpha) - delta_{alpha,0}|.
    fn biorthogonality_defect(&self) -> f64 {
        let zero = self.zero_pos();
        let total = self.grid().total_nodes();
        let mut t_vec = vec![0.0f64; total];
        for i in 0..self.svd.rank {
            let c = self.svd.u.column(i)[zero] / self.svd.singular[i];
            if c != 0.0 {
                for (slot, &vi) in t_vec.iter_mut().zip(self.svd.v.column(i).iter()) {
                    *slot += c * vi;
                }
            }
        }
        let mut worst = 0.0f64;
        for (t, row) in self.data.rows.iter().enumerate() {
            let got: f64 = row.iter().zip(&t_vec).map(|(a, b)| a * b).sum();
            let want = if t == zero { 1.0 } else { 0.0 };
            worst = worst.max((got - want).abs());
        }
        worst
    }

    /// Normalized obstruction (c_0 = 1) from the canonical null direction,
    /// or None when e_0 sits in the row range.
    fn obstruction(&self, tol: f64) -> Option<Vec<(LatticeIndex, f64)>> {
        if self.residual <= tol {
            return None;
        }
        let zero = self.zero_pos();
        let c0 = self.defect[zero];
        if c0.abs() <= tol * self.defect.norm() {
            return None;
        }
        Some(
            self.translates
                .iter()
                .enumerate()
                .map(|(i, a)| (a.clone(), self.defect[i] / c0))
                .collect(),
        )
    }

    /// sup_x |sum_alpha c_alpha phi(x - alpha)| over the window grid,
    /// relative to the mass sup_x sum |c_alpha| |phi(x - alpha)|.
    fn annihilation_ratio(&self, coeffs: &BTreeMap<LatticeIndex, f64>) -> f64 {
        let total = self.grid().total_nodes();
        let mut sup = 0.0f64;
        let mut mass = 0.0f64;
        for flat in 0..total {
            let mut acc = 0.0f64;
            let mut m = 0.0f64;
            for (t, alpha) in self.translates.iter().enumerate() {
                if let Some(&c) = coeffs.get(alpha) {
                    acc += c * self.data.raw[t][flat];
                    m += c.abs() * self.data.raw[t][flat].abs();
                }
            }
            sup = sup.max(acc.abs());
            mass = mass.max(m);
        }
        if mass == 0.0 {
            1.0
        } else {
            sup / mass
        }
    }
}

/// Per-axis geometric ratio of an obstruction pattern, when consistent.
fn geometric_ratios(
    coeffs: &[(LatticeIndex, f64)],
    d: usize,
) -> Option<Vec<f64>> {
    let map: BTreeMap<&LatticeIndex, f64> = coeffs.iter().map(|(k, v)| (k, *v)).collect();
    let amp = coeffs.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut ratios = Vec::with_capacity(d);
    for a in 0..d {
        let mut candidates = Vec::new();
        for (k, &v) in &map {
            if v.abs() < PATTERN_FLOOR * amp {
                continue;
            }
            let mut next = (*k).clone();
            next.0[a] += 1;
            if let Some(&w) = map.get(&next) {
                if w.abs() >= PATTERN_FLOOR * amp {
                    candidates.push(w / v);
                }
            }
        }
        if candidates.is_empty() {
            return None;
        }
        let mean = candidates.iter().sum::<f64>() / candidates.len() as f64;
        if candidates.iter().any(|r| (r - mean).abs() > 1e-6 * mean.abs().max(1.0)) {
            return None;
        }
        ratios.push(mean);
    }
    Some(ratios)
}

/// Decide whether `phi` admits a dual window supported in `window`.
///
/// The verdict is window-scoped: Holds returns the mollified dual window,
/// Fails returns an annihilating relation with c_0 = 1 whose extension to an
/// enlarged window was verified, and Inconclusive reports that neither
/// certificate could be produced (a larger window may decide it).
pub fn check_condition_a(
    phi: &BumpSpec,
    window: &GridBox,
    m: u32,
    tol: f64,
) -> Result<ConditionAReport> {
    if phi.dim() != window.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: window.dim(),
        });
    }
    if m < 32 {
        return Err(Error::invalid("m", "need m >= 32 for a stable rank test"));
    }
    if m % 2 != 0 {
        return Err(Error::BadSampleRate(m));
    }
    if tol <= 0.0 {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let translates = overlapping_translates(phi, window);
    if translates.is_empty() || !translates.iter().any(LatticeIndex::is_zero) {
        return Err(Error::WindowTooSmall);
    }
    let sys = build_system(phi, window, &translates, m)?;
    let rank_2m = rank_at(phi, window, &translates, 2 * m)?;
    if sys.svd.rank != rank_2m {
        return Err(Error::RankUnstable {
            m,
            rank_m: sys.svd.rank,
            rank_2m,
        });
    }

    if sys.residual <= tol {
        let theta = sys.solve_theta();
        let residual = sys.biorthogonality_defect();
        return Ok(ConditionAReport {
            verdict: Verdict::Holds,
            window: window.clone(),
            theta: Some(theta),
            obstruction: None,
            rank_data: sys.svd.singular,
            residual,
        });
    }

    if let Some(obstruction) = sys.obstruction(tol) {
        let coeff_map: BTreeMap<LatticeIndex, f64> =
            obstruction.iter().cloned().collect();
        let on_window = sys.annihilation_ratio(&coeff_map);
        if on_window <= tol {
            // extension evidence on the window enlarged by one unit per side
            let big = window.enlarged(1);
            let big_translates = overlapping_translates(phi, &big);
            let big_sys = build_system(phi, &big, &big_translates, m)?;
            let extended_ok = match geometric_ratios(&obstruction, window.dim()) {
                Some(ratios) => {
                    // periodic extension suggested by the pattern itself
                    let ext: BTreeMap<LatticeIndex, f64> = big_translates
                        .iter()
                        .map(|alpha| {
                            let mut v = 1.0;
                            for (a, &r) in ratios.iter().enumerate() {
                                let p = alpha.0[a];
                                v *= if p >= 0 {
                                    r.powi(p as i32)
                                } else {
                                    (1.0 / r).powi(-p as i32)
                                };
                            }
                            (alpha.clone(), v)
                        })
                        .collect();
                    big_sys.annihilation_ratio(&ext) <= tol
                }
                None => {
                    // no geometric structure: require the canonical defect of
                    // the larger window to certify the same failure
                    big_sys.residual > tol
                        && big_sys
                            .obstruction(tol)
                            .map(|obs| {
                                let map: BTreeMap<LatticeIndex, f64> =
                                    obs.into_iter().collect();
                                big_sys.annihilation_ratio(&map) <= tol
                            })
                            .unwrap_or(false)
                }
            };
            if extended_ok {
                return Ok(ConditionAReport {
                    verdict: Verdict::Fails,
                    window: window.clone(),
                    theta: None,
                    obstruction: Some(obstruction),
                    rank_data: sys.svd.singular,
                    residual: on_window,
                });
            }
        }
    }

    Ok(ConditionAReport {
        verdict: Verdict::Inconclusive,
        window: window.clone(),
        theta: None,
        obstruction: None,
        rank_data: sys.svd.singular,
        residual: sys.residual,
    })
}

/// R(alpha) = int theta(x) phi(x - alpha) dx for |alpha|_inf <= radius.
/// Values for non-overlapping alpha are exact zeros.
pub fn lattice_cross_correlation(
    theta: &SampledField,
    phi: &BumpSpec,
    radius: i64,
) -> Result<BTreeMap<LatticeIndex, Complex64>> {
    let d = theta.grid.dim();
    if phi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: phi.dim(),
        });
    }
    if radius < 0 {
        return Err(Error::invalid("radius", "must be nonnegative"));
    }
    let support = phi.support_box();
    // alpha overlaps iff theta box meets supp(phi) + alpha
    let mut needed = 0i64;
    for a in 0..d {
        let lo = (theta.grid.lo(a) - support[a].1).ceil() as i64;
        let hi = (theta.grid.hi(a) - support[a].0).floor() as i64;
        needed = needed.max(lo.abs().max(hi.abs()));
    }
    if needed > radius {
        return Err(Error::RadiusTooSmall {
            got: radius,
            needed,
        });
    }
    let grid = &theta.grid;
    let counts = grid.node_counts();
    let axis_w: Vec<Vec<f64>> = (0..d).map(|a| grid.axis_weights(a)).collect();
    let mut out = BTreeMap::new();
    let mut alphas = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::new();
        for prefix in &alphas {
            for c in -radius..=radius {
                let mut p = prefix.clone();
                p.push(c);
                next.push(p);
            }
        }
        alphas = next;
    }
    for coords in alphas {
        let alpha = LatticeIndex(coords);
        let overlaps = (0..d).all(|a| {
            let lo = support[a].0 + alpha.0[a] as f64;
            let hi = support[a].1 + alpha.0[a] as f64;
            lo < grid.hi(a) && hi > grid.lo(a)
        });
        if !overlaps {
            out.insert(alpha, Complex64::ZERO);
            continue;
        }
        let mut acc = Complex64::ZERO;
        let mut idx = vec![0usize; d];
        let mut y = vec![0.0f64; d];
        for &tv in &theta.values {
            if tv != Complex64::ZERO {
                let mut w = 1.0;
                for a in 0..d {
                    y[a] = grid.coord(a, idx[a]) - alpha.0[a] as f64;
                    w *= axis_w[a][idx[a]];
                }
                acc += tv * w * phi.eval(&y);
            } else {
                // still advance weights implicitly via idx
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
        out.insert(alpha, acc);
    }
    Ok(out)
}

/// Cross-correlation with a symbolic theta, sampled at rate m on its hull.
pub fn lattice_cross_correlation_bump(
    theta: &BumpSpec,
    phi: &BumpSpec,
    m: u32,
    radius: i64,
) -> Result<BTreeMap<LatticeIndex, Complex64>> {
    let hull = GridBox::hull_of_box(&theta.support_box(), m)?;
    let field = sample(theta, &hull)?;
    lattice_cross_correlation(&field, phi, radius)
}

/// int theta phi over theta's grid; convenience for biorthogonality checks.
pub fn correlation_at_zero(theta: &SampledField, phi: &BumpSpec) -> Result<Complex64> {
    let d = theta.grid.dim();
    if phi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: phi.dim(),
        });
    }
    let phi_field = sample(phi, &theta.grid)?;
    Ok(quad(&theta.pointwise_mul(&phi_field)?))
}
