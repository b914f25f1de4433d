//! Extremal witness construction for multiplier-norm lower bounds.
//!
//! The kit fixes a frequency profile theta supported in half the unit cube
//! with |F^-1 theta| bounded below on Q, and the plateau phi equal to 1 where
//! theta lives. Spectra built from unit sequences F, G through theta turn the
//! bilinear operator applied to (f, g), integrated on Q against a matched dual
//! function h, into the exact trilinear sum  sum a_{mu,nu} F(mu) G(nu) H(mu+nu).
//! That identity converts any witness triple into a certified operator-norm
//! lower bound with explicit kit constants.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::bump::BumpSpec;
use crate::error::{Error, Result};
use crate::fourier::inverse_fourier;
use crate::grid::{l2_norm, quad, sample, GridBox, SampledField};
use crate::lattice::{LatticeIndex, LatticeMatrix};
use crate::operator::{apply_t, assemble_sigma, ApplyPath, BandLimitedInput, MultiplierField};
use crate::seq::LatticeSeq;
use crate::trilinear::{trilinear_value, TrilinearEstimate};

/// Below this floor for min |F^-1 theta| on Q the kit refuses to build.
pub const C0_FLOOR: f64 = 1e-6;

/// Unit-norm tolerance for witness sequences.
const UNIT_TOL: f64 = 1e-8;

/// Fixed profiles and measured constants of the witness construction.
#[derive(Debug, Clone)]
pub struct WitnessKit {
    n: usize,
    m: u32,
    theta: BumpSpec,
    phi: BumpSpec,
    big_phi: BumpSpec,
    /// theta sampled on [-1/2,1/2]^n at rate m; translate placement block.
    theta_block: SampledField,
    /// F^-1 theta on the Q-grid at rate m (read-only after construction).
    inv_theta_q: SampledField,
    pub c0: f64,
    pub theta_l2: f64,
}

impl WitnessKit {
    /// Build the kit for lattice dimension n at sample rate m.
    ///
    /// theta is the n-fold tensor power of the standard mollifier squeezed to
    /// [-1/4, 1/4]; phi the plateau equal to 1 on [-1/4, 1/4] and 0 outside
    /// [-1/2, 1/2]; Phi = phi (x) phi. The constant c0 = min_Q |F^-1 theta|
    /// is measured on the Q-grid and must clear `C0_FLOOR`.
    pub fn new(n: usize, m: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "dimension must be at least 1"));
        }
        if m < 2 || m % 2 != 0 {
            return Err(Error::BadSampleRate(m));
        }
        let theta = BumpSpec::tensor_power(BumpSpec::scaled(0.0, 0.25), n);
        let phi = BumpSpec::plateau(vec![(-0.25, 0.25)], vec![(-0.5, 0.5)]);
        let big_phi = BumpSpec::tensor_power(phi.clone(), 2 * n);
        let q_grid = GridBox::unit_cube(n, m)?;
        let inv_theta_q = inverse_fourier(&theta, &q_grid)?;
        let c0 = inv_theta_q
            .values
            .iter()
            .map(|v| v.norm())
            .fold(f64::MAX, f64::min);
        if !(c0 > C0_FLOOR) {
            return Err(Error::DegenerateKit(c0));
        }
        let theta_block = sample(&theta, &GridBox::unit_cube(n, m)?)?;
        // reference-rate quadrature of |theta|^2
        let fine = sample(
            &theta,
            &GridBox::unit_cube(n, crate::fourier::DEFAULT_TRANSFORM_RATE)?,
        )?;
        let theta_l2 = l2_norm(&fine);
        Ok(WitnessKit {
            n,
            m,
            theta,
            phi,
            big_phi,
            theta_block,
            inv_theta_q,
            c0,
            theta_l2,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn theta(&self) -> &BumpSpec {
        &self.theta
    }

    pub fn phi(&self) -> &BumpSpec {
        &self.phi
    }

    /// The product bump phi (x) phi on R^{2n}.
    pub fn big_phi(&self) -> &BumpSpec {
        &self.big_phi
    }

    pub fn inv_theta_q(&self) -> &SampledField {
        &self.inv_theta_q
    }

    /// Lower-bound factor relating the certificate to the trilinear value:
    /// kappa = c0^2 / ||theta||_{L^2}^2, the reciprocal of
    /// ||theta||^2 sup ||h||.
    pub fn kappa(&self) -> f64 {
        self.c0 * self.c0 / (self.theta_l2 * self.theta_l2)
    }

    /// sigma_{A, phi (x) phi} at the kit's sample rate.
    pub fn assemble(&self, a: &LatticeMatrix) -> Result<MultiplierField> {
        assemble_sigma(a, &self.big_phi, self.m)
    }
}

/// Place integer translates of a sampled block, scaled by sequence values.
fn place_translates(
    seq: &LatticeSeq,
    block: &SampledField,
    out_grid: &GridBox,
) -> Result<SampledField> {
    let d = out_grid.dim();
    let counts = out_grid.node_counts();
    let block_counts = block.grid.node_counts();
    let strides: Vec<usize> = (0..d).map(|a| counts[a + 1..].iter().product()).collect();
    let m = out_grid.m() as i64;
    let mut values = vec![Complex64::ZERO; out_grid.total_nodes()];
    for (mu, c) in seq.iter() {
        let mut base = 0usize;
        for a in 0..d {
            let off_half = 2 * mu.0[a] + block.grid.lo_half()[a] - out_grid.lo_half()[a];
            let off_nodes = off_half * m / 2;
            if off_nodes < 0 || off_nodes as usize + block_counts[a] > counts[a] {
                return Err(Error::SupportViolation(
                    "translate exceeds the output grid".into(),
                ));
            }
            base += off_nodes as usize * strides[a];
        }
        let mut idx = vec![0usize; d];
        for &bv in &block.values {
            if bv != Complex64::ZERO {
                let mut at = base;
                for a in 0..d {
                    at += idx[a] * strides[a];
                }
                values[at] += c * bv;
            }
            let mut a = d;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < block_counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
    SampledField::new(out_grid.clone(), values)
}

fn seq_hull(seq: &LatticeSeq, n: usize, m: u32) -> Result<GridBox> {
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for (k, _) in seq.iter() {
        for a in 0..n {
            lo[a] = lo[a].min(k.0[a]);
            hi[a] = hi[a].max(k.0[a]);
        }
    }
    if lo[0] == i64::MAX {
        lo = vec![0; n];
        hi = vec![0; n];
    }
    GridBox::from_halves(
        lo.iter().map(|v| 2 * v - 1).collect(),
        hi.iter().map(|v| 2 * v + 1).collect(),
        m,
    )
}

/// Spectra fhat = sum F(mu) theta(. - mu), ghat likewise. Translates have
/// pairwise disjoint supports, so the declared norms equal
/// ||theta||_{L^2} ||F||_{l^2} up to quadrature.
pub fn build_witness_inputs(
    kit: &WitnessKit,
    f_seq: &LatticeSeq,
    g_seq: &LatticeSeq,
) -> Result<(BandLimitedInput, BandLimitedInput)> {
    for s in [f_seq, g_seq] {
        if s.n() != kit.n {
            return Err(Error::DimensionMismatch {
                expected: kit.n,
                got: s.n(),
            });
        }
        s.require_unit(UNIT_TOL)?;
    }
    let f_grid = seq_hull(f_seq, kit.n, kit.m)?;
    let g_grid = seq_hull(g_seq, kit.n, kit.m)?;
    let fhat = place_translates(f_seq, &kit.theta_block, &f_grid)?;
    let ghat = place_translates(g_seq, &kit.theta_block, &g_grid)?;
    Ok((BandLimitedInput::new(fhat)?, BandLimitedInput::new(ghat)?))
}

/// The dual function on Q:
/// h(x) = (sum_rho H(rho) e^{-2 pi i rho.x}) / (F^-1 theta(x))^2.
pub fn build_h(kit: &WitnessKit, h_seq: &LatticeSeq) -> Result<SampledField> {
    if h_seq.n() != kit.n {
        return Err(Error::DimensionMismatch {
            expected: kit.n,
            got: h_seq.n(),
        });
    }
    h_seq.require_unit(UNIT_TOL)?;
    if !(kit.c0 > C0_FLOOR) {
        return Err(Error::DegenerateKit(kit.c0));
    }
    let grid = kit.inv_theta_q.grid.clone();
    let total = grid.total_nodes();
    let mut values = Vec::with_capacity(total);
    for flat in 0..total {
        let x = grid.point(flat);
        let mut e = Complex64::ZERO;
        for (rho, hv) in h_seq.iter() {
            let arg = -2.0
                * std::f64::consts::PI
                * rho
                    .0
                    .iter()
                    .zip(&x)
                    .map(|(&r, &xx)| r as f64 * xx)
                    .sum::<f64>();
            e += hv * Complex64::new(arg.cos(), arg.sin());
        }
        let d = kit.inv_theta_q.values[flat];
        values.push(e / (d * d));
    }
    SampledField::new(grid, values)
}

/// Everything the witness pipeline measures for one (A, F, G, H).
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub pairing: Complex64,
    pub trilinear: Complex64,
    pub abs_error: f64,
    /// ||T(f,g)||_{L^2(Q)} / (||f|| ||g||), a certified lower bound for the
    /// (L^2, l^inf) multiplier norm of sigma_{A, phi (x) phi}.
    pub certificate: f64,
    pub theta_l2: f64,
    pub c0: f64,
    pub h_l2: f64,
    pub f_l2: f64,
    pub g_l2: f64,
}

/// Zero entries marking the corners of the union of the matrix index box
/// with the sequence supports; sigma is unchanged but its assembled grid
/// covers every spectrum translate.
fn pad_index_box(a: &LatticeMatrix, f: &LatticeSeq, g: &LatticeSeq) -> LatticeMatrix {
    let n = a.n();
    let (mut mu_r, mut nu_r) = a
        .index_ranges()
        .unwrap_or((vec![(0, 0); n], vec![(0, 0); n]));
    for (k, _) in f.iter() {
        for ax in 0..n {
            mu_r[ax].0 = mu_r[ax].0.min(k.0[ax]);
            mu_r[ax].1 = mu_r[ax].1.max(k.0[ax]);
        }
    }
    for (k, _) in g.iter() {
        for ax in 0..n {
            nu_r[ax].0 = nu_r[ax].0.min(k.0[ax]);
            nu_r[ax].1 = nu_r[ax].1.max(k.0[ax]);
        }
    }
    let mut out = a.clone();
    let corners = [
        (
            LatticeIndex(mu_r.iter().map(|r| r.0).collect()),
            LatticeIndex(nu_r.iter().map(|r| r.0).collect()),
        ),
        (
            LatticeIndex(mu_r.iter().map(|r| r.1).collect()),
            LatticeIndex(nu_r.iter().map(|r| r.1).collect()),
        ),
    ];
    for (mu, nu) in corners {
        if out.get(&mu, &nu) == Complex64::ZERO {
            out.set(mu, nu, Complex64::ZERO).expect("zero entry");
        }
    }
    out
}

/// Run the full witness pipeline: assemble sigma_{A, phi(x)phi}, build f, g
/// from F, G, apply the operator on the Q-grid, and pair against h.
///
/// The pairing contract is agreement with `trilinear_value(A, F, G, H)`
/// within discretization tolerance; the certificate is bounded below by
/// |pairing| / (||h|| ||f|| ||g||) by Cauchy-Schwarz on Q.
pub fn witness_report(
    a: &LatticeMatrix,
    kit: &WitnessKit,
    f_seq: &LatticeSeq,
    g_seq: &LatticeSeq,
    h_seq: &LatticeSeq,
) -> Result<WitnessReport> {
    if a.n() != kit.n {
        return Err(Error::DimensionMismatch {
            expected: kit.n,
            got: a.n(),
        });
    }
    let (f, g) = build_witness_inputs(kit, f_seq, g_seq)?;
    let h = build_h(kit, h_seq)?;
    let sigma = kit.assemble(&pad_index_box(a, f_seq, g_seq))?;
    let q_grid = GridBox::unit_cube(kit.n, kit.m)?;
    let t_on_q = apply_t(&sigma, &f, &g, &q_grid, ApplyPath::Fast)?;
    let pairing = quad(&t_on_q.pointwise_mul(&h)?);
    let trilinear = trilinear_value(a, f_seq, g_seq, h_seq)?;
    let h_l2 = l2_norm(&h);
    let t_l2 = l2_norm(&t_on_q);
    let denom = f.l2 * g.l2;
    let certificate = if denom > 0.0 { t_l2 / denom } else { 0.0 };
    Ok(WitnessReport {
        pairing,
        trilinear,
        abs_error: (pairing - trilinear).norm(),
        certificate,
        theta_l2: kit.theta_l2,
        c0: kit.c0,
        h_l2,
        f_l2: f.l2,
        g_l2: g.l2,
    })
}

/// int_Q T_{sigma_{A,Phi}}(f,g)(x) h(x) dx for witness inputs built from the
/// given unit triple.
pub fn pairing(
    a: &LatticeMatrix,
    kit: &WitnessKit,
    f_seq: &LatticeSeq,
    g_seq: &LatticeSeq,
    h_seq: &LatticeSeq,
) -> Result<Complex64> {
    Ok(witness_report(a, kit, f_seq, g_seq, h_seq)?.pairing)
}

/// Certified multiplier-norm lower bound from an estimate's witness triple.
pub fn lower_bound_certificate(
    a: &LatticeMatrix,
    kit: &WitnessKit,
    est: &TrilinearEstimate,
) -> Result<f64> {
    if est.witness.f.is_empty() {
        return Ok(0.0);
    }
    let r = witness_report(a, kit, &est.witness.f, &est.witness.g, &est.witness.h)?;
    // Cauchy-Schwarz on Q, exact for the shared quadrature rule
    debug_assert!(
        r.certificate * r.h_l2 * r.f_l2 * r.g_l2 >= r.pairing.norm() - 1e-9,
        "certificate chain violated"
    );
    Ok(r.certificate)
}

/// Entrywise mask a_{mu,nu} alpha_mu alpha'_nu with 0/1 masks given as the
/// sets where they equal 1.
pub fn mask_matrix(
    a: &LatticeMatrix,
    alpha: &BTreeSet<LatticeIndex>,
    alpha_prime: &BTreeSet<LatticeIndex>,
) -> LatticeMatrix {
    let mut out = LatticeMatrix::new(a.n());
    for (mu, nu, v) in a.iter() {
        if alpha.contains(mu) && alpha_prime.contains(nu) {
            out.set(mu.clone(), nu.clone(), v).expect("finite entry");
        }
    }
    out
}

/// Averages <sigma_{mu,nu}> = iint sigma_{mu,nu} over the listed indices.
/// Every field must be supported inside (mu, nu) + KQ x KQ.
pub fn average_matrix<F>(
    n: usize,
    indices: &[(LatticeIndex, LatticeIndex)],
    family: F,
    k_bound: f64,
) -> Result<LatticeMatrix>
where
    F: Fn(&LatticeIndex, &LatticeIndex) -> Result<SampledField>,
{
    let mut out = LatticeMatrix::new(n);
    for (mu, nu) in indices {
        let field = family(mu, nu)?;
        let g = &field.grid;
        if g.dim() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: g.dim(),
            });
        }
        for axis in 0..2 * n {
            let center = if axis < n {
                mu.0[axis] as f64
            } else {
                nu.0[axis - n] as f64
            };
            if g.lo(axis) < center - k_bound / 2.0 - 1e-12
                || g.hi(axis) > center + k_bound / 2.0 + 1e-12
            {
                return Err(Error::SupportViolation(format!(
                    "field box [{}, {}] exceeds ({center}) + {k_bound}Q on axis {axis}",
                    g.lo(axis),
                    g.hi(axis)
                )));
            }
        }
        out.set(mu.clone(), nu.clone(), quad(&field))?;
    }
    Ok(out)
}
