//! End-to-end equivalence experiment: trilinear norm estimates, witness
//! certificates, and empirical operator lower bounds per matrix family.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use latbump_core::condition_a::{check_condition_a, Verdict};
use latbump_core::lattice::{decay_matrix, read_matrix};
use latbump_core::operator::{
    amalgam_norm, apply_t, assemble_sigma, random_band_limited, ApplyPath, BandLimitedInput,
    QExponent,
};
use latbump_core::trilinear::bnorm_ascent;
use latbump_core::witness::{build_witness_inputs, witness_report, WitnessKit};
use latbump_core::{GridBox, LatticeIndex, LatticeMatrix};

use crate::config::{ExperimentConfig, MatrixSource};
use crate::error::{CliError, CliResult};

/// One realized matrix with its provenance.
#[derive(Debug, Clone)]
pub struct MatrixCase {
    pub label: String,
    pub family: String,
    /// Size parameter used by the trend regression (block size or radius).
    pub size: f64,
    pub matrix: LatticeMatrix,
}

fn gaussian_block(size: i64, seed: u64) -> LatticeMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = LatticeMatrix::new(1);
    for mu in 0..size {
        for nu in 0..size {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            m.set(
                LatticeIndex::scalar(mu),
                LatticeIndex::scalar(nu),
                Complex64::new(re, im),
            )
            .expect("finite entry");
        }
    }
    m
}

fn diagonal(size: i64) -> LatticeMatrix {
    let mut m = LatticeMatrix::new(1);
    for k in 0..size {
        m.set(
            LatticeIndex::scalar(k),
            LatticeIndex::scalar(k),
            Complex64::new(1.0, 0.0),
        )
        .expect("finite entry");
    }
    m
}

fn ones_block(size: i64) -> LatticeMatrix {
    let mut m = LatticeMatrix::new(1);
    for mu in 0..size {
        for nu in 0..size {
            m.set(
                LatticeIndex::scalar(mu),
                LatticeIndex::scalar(nu),
                Complex64::new(1.0, 0.0),
            )
            .expect("finite entry");
        }
    }
    m
}

/// Realize the configured matrix sources; random draws are seeded from the
/// config seed and the source position.
pub fn realize_sources(cfg: &ExperimentConfig) -> CliResult<Vec<MatrixCase>> {
    let mut out = Vec::new();
    for (pos, src) in cfg.matrices.iter().enumerate() {
        match src {
            MatrixSource::File { path } => {
                let matrix = read_matrix(path)
                    .map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                out.push(MatrixCase {
                    label: format!("file:{path}"),
                    family: "file".into(),
                    size: matrix.support_radius() as f64,
                    matrix,
                });
            }
            MatrixSource::RandomComplex { size, count } => {
                for c in 0..*count {
                    let seed = cfg
                        .seed
                        .wrapping_add(0x5EED_0000)
                        .wrapping_add((pos as u64) << 32)
                        .wrapping_add(c as u64);
                    out.push(MatrixCase {
                        label: format!("random-complex:{size}:{c}"),
                        family: "random-complex".into(),
                        size: *size as f64,
                        matrix: gaussian_block(*size, seed),
                    });
                }
            }
            MatrixSource::Diagonal { size } => out.push(MatrixCase {
                label: format!("diagonal:{size}"),
                family: "diagonal".into(),
                size: *size as f64,
                matrix: diagonal(*size),
            }),
            MatrixSource::OnesBlock { size } => out.push(MatrixCase {
                label: format!("ones-block:{size}"),
                family: "ones-block".into(),
                size: *size as f64,
                matrix: ones_block(*size),
            }),
            MatrixSource::WDecay { radius, decay } => out.push(MatrixCase {
                label: format!("w-decay:{radius}"),
                family: "w-decay".into(),
                size: *radius as f64,
                matrix: decay_matrix(1, *decay, *radius),
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub family: String,
    pub size: f64,
    pub bnorm_lower: f64,
    pub bnorm_upper: f64,
    pub restarts_used: usize,
    pub converged: bool,
    pub certificate: Option<f64>,
    /// (q label, max over input pairs of the output amalgam norm)
    pub empirical: Vec<(String, f64)>,
    /// empirical at q = 1 over bnorm_lower.
    pub ratio_upper: Option<f64>,
    /// max over q / min over q of the empirical values.
    pub q_spread: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyTrend {
    pub family: String,
    /// Least-squares slope of ratio_upper against the size parameter.
    pub slope: f64,
    /// slope * size span / mean ratio; signed, positive means the empirical
    /// ratio grows with the family size.
    pub rel_trend: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub upper_bounded: bool,
    pub lower_bounded: bool,
    pub q_spread_ok: bool,
    pub no_growth_trend: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub max_ratio_upper: Option<f64>,
    pub min_certificate_ratio: Option<f64>,
    pub max_q_spread: Option<f64>,
    pub kit_kappa: Option<f64>,
    pub kit_c0: Option<f64>,
    pub kit_theta_l2: Option<f64>,
    pub family_trends: Vec<FamilyTrend>,
    pub checks: Checks,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub rows: Vec<ReportRow>,
    pub aggregates: Aggregates,
}

fn row_seed(base: u64, row: usize) -> u64 {
    base.wrapping_add((row as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Amalgam norms of the operator output for one input pair, one per q.
fn pair_norms(
    sigma: &latbump_core::operator::MultiplierField,
    f: &BandLimitedInput,
    g: &BandLimitedInput,
    x_grid: &GridBox,
    qs: &[QExponent],
) -> CliResult<Vec<f64>> {
    let out = apply_t(sigma, f, g, x_grid, ApplyPath::Fast).map_err(CliError::from)?;
    qs.iter()
        .map(|&q| {
            amalgam_norm(&out, q)
                .map(|a| a.value)
                .map_err(CliError::from)
        })
        .collect()
}

fn process_case(
    cfg: &ExperimentConfig,
    kit: Option<&WitnessKit>,
    bump: &latbump_core::BumpSpec,
    x_grid: &GridBox,
    row_idx: usize,
    case: &MatrixCase,
) -> CliResult<ReportRow> {
    let seed = row_seed(cfg.seed, row_idx);
    let mut est =
        bnorm_ascent(&case.matrix, cfg.restarts, seed, cfg.tol).map_err(CliError::from)?;
    let mut matrix = case.matrix.clone();
    if cfg.normalize && est.lower > 0.0 {
        let s = Complex64::new(1.0 / est.lower, 0.0);
        matrix = matrix.scale(s);
        est.upper /= est.lower;
        est.witness.value /= est.lower;
        est.lower = 1.0;
    }

    let mut certificate = None;
    let mut witness_pair: Option<(BandLimitedInput, BandLimitedInput)> = None;
    if let Some(kit) = kit {
        if !est.witness.f.is_empty() {
            let r = witness_report(
                &matrix,
                kit,
                &est.witness.f,
                &est.witness.g,
                &est.witness.h,
            )
            .map_err(CliError::from)?;
            certificate = Some(r.certificate);
            let (f, g) = build_witness_inputs(kit, &est.witness.f, &est.witness.g)
                .map_err(CliError::from)?;
            witness_pair = Some((
                f.normalized().map_err(CliError::from)?,
                g.normalized().map_err(CliError::from)?,
            ));
        } else {
            certificate = Some(0.0);
        }
    }

    let sigma = assemble_sigma(&matrix, bump, cfg.m).map_err(CliError::from)?;
    let mut best = vec![0.0f64; cfg.qs.len()];
    if sigma.sup_abs() > 0.0 {
        let xi = sigma.xi_box();
        let eta = sigma.eta_box();
        for trial in 0..cfg.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(0xE11A)
                    .wrapping_add((trial as u64).wrapping_mul(0x0001_0001_0001)),
            );
            let f = random_band_limited(&xi, &mut rng).map_err(CliError::from)?;
            let g = random_band_limited(&eta, &mut rng).map_err(CliError::from)?;
            let norms = pair_norms(&sigma, &f, &g, x_grid, &cfg.qs)?;
            for (b, v) in best.iter_mut().zip(norms) {
                *b = b.max(v);
            }
        }
    }
    // The witness pair is one admissible input pair. When the experiment bump
    // is the kit's own product bump, fold it in at the kit rate so the
    // certificate can never exceed the empirical lower bound at q = inf: the
    // output cube mass on Q is the certificate's own numerator.
    if let (Some(kit), Some((f, g))) = (kit, &witness_pair) {
        if *bump == *kit.big_phi() {
            let sigma_kit = kit.assemble(&matrix).map_err(CliError::from)?;
            if sigma_kit.sup_abs() > 0.0 {
                let x_kit = GridBox::new(
                    &(0..x_grid.dim()).map(|a| x_grid.lo(a)).collect::<Vec<_>>(),
                    &(0..x_grid.dim()).map(|a| x_grid.hi(a)).collect::<Vec<_>>(),
                    kit.m(),
                )
                .map_err(CliError::from)?;
                let norms = pair_norms(&sigma_kit, f, g, &x_kit, &cfg.qs)?;
                for (b, v) in best.iter_mut().zip(norms) {
                    *b = b.max(v);
                }
            }
        }
    }

    let empirical: Vec<(String, f64)> = cfg
        .qs
        .iter()
        .zip(&best)
        .map(|(q, &v)| (q.label(), v))
        .collect();
    let ratio_upper = if est.lower > 0.0 {
        cfg.qs
            .iter()
            .position(|q| matches!(q, QExponent::Finite(v) if *v == 1.0))
            .map(|i| best[i] / est.lower)
    } else {
        None
    };
    let q_spread = if best.iter().any(|&v| v > 0.0) {
        let max = best.iter().copied().fold(f64::MIN, f64::max);
        let min = best.iter().copied().fold(f64::MAX, f64::min);
        if min > 0.0 {
            Some(max / min)
        } else {
            None
        }
    } else {
        None
    };
    Ok(ReportRow {
        label: case.label.clone(),
        family: case.family.clone(),
        size: case.size,
        bnorm_lower: est.lower,
        bnorm_upper: est.upper,
        restarts_used: est.restarts_used,
        converged: est.converged,
        certificate,
        empirical,
        ratio_upper,
        q_spread,
    })
}

fn family_trends(rows: &[ReportRow]) -> Vec<FamilyTrend> {
    use std::collections::BTreeMap;
    let mut by_family: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let Some(ratio) = r.ratio_upper {
            by_family.entry(&r.family).or_default().push((r.size, ratio));
        }
    }
    let mut out = Vec::new();
    for (family, pts) in by_family {
        let sizes: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let span = sizes.iter().cloned().fold(f64::MIN, f64::max)
            - sizes.iter().cloned().fold(f64::MAX, f64::min);
        if pts.len() < 2 || span == 0.0 {
            continue;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let rel_trend = if my.abs() > 0.0 {
            slope * span / my
        } else {
            0.0
        };
        out.push(FamilyTrend {
            family: family.to_string(),
            slope,
            rel_trend,
        });
    }
    out
}

/// Run the full experiment described by the config.
pub fn run_equivalence(cfg: &ExperimentConfig) -> CliResult<EquivalenceReport> {
    cfg.validate()?;
    let cases = realize_sources(cfg)?;
    let n = cases
        .first()
        .map(|c| c.matrix.n())
        .unwrap_or(1);
    if cases.iter().any(|c| c.matrix.n() != n) {
        return Err(CliError::Config(
            "all matrices in one run must share the lattice dimension".into(),
        ));
    }
    let bump = cfg.bump.load(None)?;
    if bump.dim() != 2 * n {
        return Err(CliError::Config(format!(
            "bump dimension {} does not match 2n = {}",
            bump.dim(),
            2 * n
        )));
    }

    let kit = if cfg.certificate {
        // the lower-bound leg requires the bump to admit a dual window
        let d = bump.dim();
        let window = GridBox::new(&vec![cfg.window.0; d], &vec![cfg.window.1; d], cfg.check_m)
            .map_err(CliError::from)?;
        let report = check_condition_a(&bump, &window, cfg.check_m, cfg.check_tol)
            .map_err(CliError::from)?;
        match report.verdict {
            Verdict::Holds => {}
            Verdict::Fails => {
                let obs = report
                    .obstruction
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(k, v)| format!("c[{:?}] = {v:.6}", k.0))
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(CliError::MathPrecondition(format!(
                    "bump admits no dual window on the test window; obstruction: {obs}"
                )));
            }
            Verdict::Inconclusive => {
                return Err(CliError::MathPrecondition(
                    "dual-window test inconclusive on the configured window; enlarge it".into(),
                ));
            }
        }
        Some(WitnessKit::new(n, cfg.witness_m).map_err(CliError::from)?)
    } else {
        None
    };

    let x_grid = GridBox::new(&vec![cfg.xbox.0; n], &vec![cfg.xbox.1; n], cfg.x_m)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if !x_grid.is_cube_partition() {
        return Err(CliError::Config(
            "xbox endpoints must be half-odd integers".into(),
        ));
    }

    let rows: Vec<CliResult<ReportRow>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, case)| process_case(cfg, kit.as_ref(), &bump, &x_grid, i, case))
        .collect();
    let rows: Vec<ReportRow> = rows.into_iter().collect::<CliResult<_>>()?;

    let max_ratio_upper = rows
        .iter()
        .filter_map(|r| r.ratio_upper)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let min_certificate_ratio = rows
        .iter()
        .filter_map(|r| {
            r.certificate.and_then(|c| {
                if r.bnorm_lower > 0.0 {
                    Some(c / r.bnorm_lower)
                } else {
                    None
                }
            })
        })
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    let max_q_spread = rows
        .iter()
        .filter_map(|r| r.q_spread)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let trends = family_trends(&rows);
    let kappa = kit.as_ref().map(|k| k.kappa());
    let checks = Checks {
        upper_bounded: max_ratio_upper.map_or(true, |v| v <= cfg.thresholds.upper_ratio_max),
        lower_bounded: match (min_certificate_ratio, kappa) {
            (Some(r), Some(k)) => r >= k - cfg.thresholds.certificate_slack,
            _ => true,
        },
        q_spread_ok: max_q_spread.map_or(true, |v| v <= cfg.thresholds.q_spread_max),
        no_growth_trend: trends
            .iter()
            .all(|t| t.rel_trend <= cfg.thresholds.slope_rel_max),
    };
    Ok(EquivalenceReport {
        rows,
        aggregates: Aggregates {
            max_ratio_upper,
            min_certificate_ratio,
            max_q_spread,
            kit_kappa: kappa,
            kit_c0: kit.as_ref().map(|k| k.c0),
            kit_theta_l2: kit.as_ref().map(|k| k.theta_l2),
            family_trends: trends,
            checks,
        },
    })
}
