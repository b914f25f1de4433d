//! Separable Fourier expansion of a compactly supported bump on R^n x R^n.
//!
//! A bump Phi supported inside the quarter-size box of TQ x TQ expands into a
//! double Fourier series sum b_{k,l} e^{2 pi i k.xi/T} e^{2 pi i l.eta/T}
//! valid on TQ x TQ; multiplying by a plateau cutoff phi(xi) phi(eta) that is
//! 1 on half of TQ extends the identity to all of R^n x R^n. Coefficients
//! decay rapidly, so a finite index box reconstructs Phi to prescribed
//! accuracy.

use num_complex::Complex64;

use crate::bump::BumpSpec;
use crate::error::{Error, Result};
use crate::fourier::fft_nd;
use crate::lattice::LatticeIndex;

/// Hard cap on the symmetric index box of the truncated series.
pub const INDEX_CAP: i64 = 64;

/// Default samples per unit for the periodic sampling grid.
pub const DEFAULT_EXPANSION_RATE: u32 = 32;

/// Truncated separable expansion of a 2n-dimensional bump.
#[derive(Debug, Clone)]
pub struct SeparableExpansion {
    /// Period: the smallest even integer T with supp Phi inside (T/4)-boxes.
    pub t: i64,
    /// Plateau cutoff, 1 on [-T/4, T/4] and 0 outside [-T/2, T/2], one axis.
    pub cutoff: BumpSpec,
    /// Terms (k, l, b_{k,l}) with k, l in Z^n, |k|_inf, |l|_inf <= index_cap.
    pub terms: Vec<(LatticeIndex, LatticeIndex, Complex64)>,
    /// Symmetric index cap reached by the truncation.
    pub index_cap: i64,
    /// Sup reconstruction error on the sampling grid.
    pub achieved_error: f64,
}

impl SeparableExpansion {
    /// Max |b| over shells |k|_1 + |l|_1 = s, for s = 0..; decay profile.
    pub fn shell_maxima(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for (k, l, b) in &self.terms {
            let s = (k.0.iter().map(|c| c.abs()).sum::<i64>()
                + l.0.iter().map(|c| c.abs()).sum::<i64>()) as usize;
            if out.len() <= s {
                out.resize(s + 1, 0.0);
            }
            out[s] = out[s].max(b.norm());
        }
        out
    }
}

/// Expand a bump on R^n x R^n with an explicit periodic sample rate.
pub fn separable_expansion_with(
    phi: &BumpSpec,
    tol: f64,
    rate: u32,
) -> Result<SeparableExpansion> {
    let d = phi.dim();
    if d % 2 != 0 || d == 0 {
        return Err(Error::invalid(
            "phi",
            "expansion needs an even-dimensional bump on R^n x R^n",
        ));
    }
    if tol <= 0.0 {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if rate < 2 || rate % 2 != 0 {
        return Err(Error::BadSampleRate(rate));
    }
    let support = phi.support_box();
    let max_c = support
        .iter()
        .map(|&(lo, hi)| lo.abs().max(hi.abs()))
        .fold(0.0f64, f64::max);
    // smallest even T with supp Phi inside [-T/4, T/4]^d
    let mut t = (4.0 * max_c).ceil() as i64;
    if t % 2 != 0 {
        t += 1;
    }
    t = t.max(2);
    let s = (t * rate as i64) as usize; // nodes per axis, endpoint excluded
    let dims = vec![s; d];
    let total: usize = dims.iter().product();

    // samples of Phi on the periodic grid over [-T/2, T/2)^d
    let mut samples = vec![Complex64::ZERO; total];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    for slot in samples.iter_mut() {
        let mut inside = true;
        for a in 0..d {
            x[a] = -(t as f64) / 2.0 + idx[a] as f64 / rate as f64;
            if x[a] < support[a].0 || x[a] > support[a].1 {
                inside = false;
            }
        }
        if inside {
            *slot = Complex64::new(phi.eval(&x), 0.0);
        }
        let mut a = d;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < s {
                break;
            }
            idx[a] = 0;
        }
    }

    // Fourier coefficients b_k = (1/S^d) (-1)^{sum k} FFT[k mod S]
    let mut coeffs = samples.clone();
    fft_nd(&mut coeffs, &dims, false);
    let scale = 1.0 / total as f64;
    let bin = |k: i64| -> usize { k.rem_euclid(s as i64) as usize };
    let coeff_at = |k: &[i64]| -> Complex64 {
        let mut flat = 0usize;
        let mut sign = 0i64;
        for &ka in k {
            flat = flat * s + bin(ka);
            sign += ka;
        }
        let v = coeffs[flat] * scale;
        if sign.rem_euclid(2) == 1 {
            -v
        } else {
            v
        }
    };

    // cutoff values on the sampling grid, product across axes
    let cutoff = BumpSpec::plateau(
        vec![(-(t as f64) / 4.0, t as f64 / 4.0)],
        vec![(-(t as f64) / 2.0, t as f64 / 2.0)],
    );
    let axis_cut: Vec<f64> = (0..s)
        .map(|j| cutoff.eval(&[-(t as f64) / 2.0 + j as f64 / rate as f64]))
        .collect();

    let cap_limit = INDEX_CAP.min(s as i64 / 2 - 1);
    let mut achieved = f64::INFINITY;
    let mut chosen_cap = cap_limit;
    for cap in 0..=cap_limit {
        // reconstruction: inverse FFT of the coefficient array truncated to
        // the symmetric index box, evaluated on the sampling grid
        let mut trunc = vec![Complex64::ZERO; total];
        let mut k = vec![-cap; d];
        'fill: loop {
            let mut flat = 0usize;
            for &ka in &k {
                flat = flat * s + bin(ka);
            }
            trunc[flat] = coeffs[flat];
            let mut a = d;
            loop {
                if a == 0 {
                    break 'fill;
                }
                a -= 1;
                k[a] += 1;
                if k[a] <= cap {
                    break;
                }
                k[a] = -cap;
            }
        }
        fft_nd(&mut trunc, &dims, true);
        let inv_scale = 1.0 / total as f64;
        let mut sup = 0.0f64;
        let mut idx = vec![0usize; d];
        for (flat, &orig) in samples.iter().enumerate() {
            let mut cut = 1.0;
            for a in 0..d {
                cut *= axis_cut[idx[a]];
            }
            let recon = trunc[flat] * inv_scale * cut;
            sup = sup.max((recon - orig).norm());
            let mut a = d;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < s {
                    break;
                }
                idx[a] = 0;
            }
        }
        if sup <= tol {
            achieved = sup;
            chosen_cap = cap;
            break;
        }
        achieved = sup;
    }
    if achieved > tol {
        return Err(Error::TolUnreachable {
            achieved,
            cap: cap_limit,
        });
    }

    // emit terms over the chosen cap; drop only far-below-noise entries
    let n = d / 2;
    let drop = tol * 1e-8;
    let mut terms = Vec::new();
    let mut k = vec![-chosen_cap; d];
    'emit: loop {
        let b = coeff_at(&k);
        if b.norm() > drop {
            terms.push((
                LatticeIndex(k[..n].to_vec()),
                LatticeIndex(k[n..].to_vec()),
                b,
            ));
        }
        let mut a = d;
        loop {
            if a == 0 {
                break 'emit;
            }
            a -= 1;
            k[a] += 1;
            if k[a] <= chosen_cap {
                break;
            }
            k[a] = -chosen_cap;
        }
    }
    Ok(SeparableExpansion {
        t,
        cutoff,
        terms,
        index_cap: chosen_cap,
        achieved_error: achieved,
    })
}

/// Expand a bump on R^n x R^n: choose the smallest admissible even period,
/// compute coefficients by FFT, and truncate at the smallest symmetric index
/// box reaching `tol`.
pub fn separable_expansion(phi: &BumpSpec, tol: f64) -> Result<SeparableExpansion> {
    separable_expansion_with(phi, tol, DEFAULT_EXPANSION_RATE)
}
