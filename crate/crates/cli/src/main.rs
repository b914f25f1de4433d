//! Command-line harness for the lattice bump multiplier toolkit.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use latbump_cli::config::ExperimentConfig;
use latbump_cli::error::{CliError, CliResult};
use latbump_cli::experiment::run_equivalence;
use latbump_cli::report::{render_report, ReportFormat};
use latbump_core::bump::read_bump;
use latbump_core::condition_a::{check_condition_a, Verdict};
use latbump_core::expansion::separable_expansion_with;
use latbump_core::grid::{field_to_json, read_field};
use latbump_core::lattice::read_matrix;
use latbump_core::operator::{
    amalgam_norm, apply_t, assemble_sigma, ApplyPath, BandLimitedInput, QExponent,
};
use latbump_core::seq::read_seq;
use latbump_core::trilinear::{bnorm_ascent, bnorm_oracle, TrilinearEstimate};
use latbump_core::witness::{witness_report, WitnessKit};
use latbump_core::{GridBox, LatticeSeq};

#[derive(Parser)]
#[command(name = "latbump", version, about = "Lattice bump bilinear multiplier toolkit")]
struct Cli {
    /// Seed for every random draw of the invoked command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Experiment config file for `verify`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Two-sided trilinear norm estimate of a matrix file.
    Bnorm {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also run the dense random-search oracle (tiny instances only).
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1_000_000)]
        oracle_budget: usize,
    },
    /// Apply the bilinear operator of sigma_{A,Phi} to two spectra.
    Apply {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        bump: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        /// Frequency-grid rate for sigma (must match the spectra).
        #[arg(long)]
        m: u32,
        /// Output box LO,HI (half-odd endpoints).
        #[arg(long, allow_hyphen_values = true)]
        xbox: String,
        /// Output sample rate (defaults to m).
        #[arg(long)]
        x_m: Option<u32>,
        /// Use the literal quadrature path instead of the FFT path.
        #[arg(long)]
        direct: bool,
        /// Write the output field here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// (L^2, l^q) amalgam norm of a sampled field.
    Amalgam {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        q: String,
    },
    /// Dual-window test of a bump on a window.
    CheckA {
        #[arg(long)]
        bump: PathBuf,
        /// Window LO,HI applied on every axis.
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write the solved dual window as a sampled-field JSON.
        #[arg(long)]
        theta_out: Option<PathBuf>,
    },
    /// Separable Fourier expansion of a bump on R^n x R^n.
    Expand {
        #[arg(long)]
        bump: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 32)]
        rate: u32,
    },
    /// Witness pipeline: pairing, trilinear value, and certificate.
    Witness {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 64)]
        m: u32,
        #[arg(long)]
        seq_f: Option<PathBuf>,
        #[arg(long)]
        seq_g: Option<PathBuf>,
        #[arg(long)]
        seq_h: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run the end-to-end norm-equivalence experiment.
    Verify {
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// json (default) or csv; inferred from --out extension when absent.
        #[arg(long)]
        format: Option<String>,
    },
}

fn parse_interval(text: &str, what: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!("{what} must be LO,HI, got {text}")));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad {what} low endpoint: {}", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad {what} high endpoint: {}", parts[1])))?;
    Ok((lo, hi))
}

fn seq_json(s: &LatticeSeq) -> serde_json::Value {
    json!(s
        .iter()
        .map(|(k, v)| json!({"idx": k.0, "re": v.re, "im": v.im}))
        .collect::<Vec<_>>())
}

fn estimate_json(est: &TrilinearEstimate) -> serde_json::Value {
    json!({
        "lower": est.lower,
        "upper": est.upper,
        "witness": {
            "f": seq_json(&est.witness.f),
            "g": seq_json(&est.witness.g),
            "h": seq_json(&est.witness.h),
            "value": est.witness.value,
        },
        "restarts_used": est.restarts_used,
        "converged": est.converged,
    })
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.cmd {
        Cmd::Bnorm {
            matrix,
            restarts,
            tol,
            oracle,
            oracle_budget,
        } => {
            let a = read_matrix(&matrix)
                .map_err(|e| CliError::Config(format!("{}: {e}", matrix.display())))?;
            let est = bnorm_ascent(&a, restarts, seed, tol)?;
            let mut out = estimate_json(&est);
            if oracle {
                let v = bnorm_oracle(&a, oracle_budget, seed)?;
                out["oracle"] = json!(v);
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
        }
        Cmd::Apply {
            matrix,
            bump,
            f,
            g,
            m,
            xbox,
            x_m,
            direct,
            out,
        } => {
            let a = read_matrix(&matrix)
                .map_err(|e| CliError::Config(format!("{}: {e}", matrix.display())))?;
            let phi = read_bump(&bump)
                .map_err(|e| CliError::Config(format!("{}: {e}", bump.display())))?;
            let fhat = BandLimitedInput::new(read_field(&f)?)?;
            let ghat = BandLimitedInput::new(read_field(&g)?)?;
            let (lo, hi) = parse_interval(&xbox, "xbox")?;
            let n = a.n();
            let x_grid = GridBox::new(&vec![lo; n], &vec![hi; n], x_m.unwrap_or(m))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let sigma = assemble_sigma(&a, &phi, m)?;
            let path = if direct {
                ApplyPath::Direct
            } else {
                ApplyPath::Fast
            };
            let field = apply_t(&sigma, &fhat, &ghat, &x_grid, path)?;
            let text = field_to_json(&field);
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => println!("{text}"),
            }
        }
        Cmd::Amalgam { field, q } => {
            let f = read_field(&field)?;
            let q = QExponent::parse(&q)?;
            let norm = amalgam_norm(&f, q)?;
            let per_cube: Vec<serde_json::Value> = norm
                .per_cube
                .iter()
                .map(|(nu, mass)| json!({"cube": nu.0, "mass": mass}))
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "q": norm.q.label(),
                    "value": norm.value,
                    "per_cube": per_cube,
                }))
                .expect("json")
            );
        }
        Cmd::CheckA {
            bump,
            window,
            m,
            tol,
            theta_out,
        } => {
            let phi = read_bump(&bump)
                .map_err(|e| CliError::Config(format!("{}: {e}", bump.display())))?;
            let (lo, hi) = parse_interval(&window, "window")?;
            let d = phi.dim();
            let win = GridBox::new(&vec![lo; d], &vec![hi; d], m)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let report = check_condition_a(&phi, &win, m, tol)?;
            let verdict = match report.verdict {
                Verdict::Holds => "holds",
                Verdict::Fails => "fails",
                Verdict::Inconclusive => "inconclusive",
            };
            let obstruction: Option<Vec<serde_json::Value>> = report.obstruction.as_ref().map(
                |obs| {
                    obs.iter()
                        .map(|(k, v)| json!({"idx": k.0, "value": v}))
                        .collect()
                },
            );
            if let (Some(path), Some(theta)) = (&theta_out, &report.theta) {
                std::fs::write(path, field_to_json(theta))?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "verdict": verdict,
                    "window": {"lo": lo, "hi": hi, "m": m},
                    "residual": report.residual,
                    "rank_data": report.rank_data,
                    "obstruction": obstruction,
                    "theta_written": theta_out.is_some() && report.theta.is_some(),
                }))
                .expect("json")
            );
        }
        Cmd::Expand { bump, tol, rate } => {
            let phi = read_bump(&bump)
                .map_err(|e| CliError::Config(format!("{}: {e}", bump.display())))?;
            let e = separable_expansion_with(&phi, tol, rate)?;
            let terms: Vec<serde_json::Value> = e
                .terms
                .iter()
                .map(|(k, l, b)| json!({"k": k.0, "l": l.0, "re": b.re, "im": b.im}))
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "t": e.t,
                    "index_cap": e.index_cap,
                    "achieved_error": e.achieved_error,
                    "term_count": e.terms.len(),
                    "terms": terms,
                }))
                .expect("json")
            );
        }
        Cmd::Witness {
            matrix,
            m,
            seq_f,
            seq_g,
            seq_h,
            restarts,
            tol,
        } => {
            let a = read_matrix(&matrix)
                .map_err(|e| CliError::Config(format!("{}: {e}", matrix.display())))?;
            let kit = WitnessKit::new(a.n(), m)?;
            let (fs, gs, hs) = match (&seq_f, &seq_g, &seq_h) {
                (Some(fp), Some(gp), Some(hp)) => (
                    read_seq(fp)?.normalized(),
                    read_seq(gp)?.normalized(),
                    read_seq(hp)?.normalized(),
                ),
                (None, None, None) => {
                    let est = bnorm_ascent(&a, restarts, seed, tol)?;
                    if est.witness.f.is_empty() {
                        return Err(CliError::Config(
                            "matrix is empty; provide explicit sequences".into(),
                        ));
                    }
                    (est.witness.f, est.witness.g, est.witness.h)
                }
                _ => {
                    return Err(CliError::Config(
                        "provide all of --seq-f/--seq-g/--seq-h or none".into(),
                    ))
                }
            };
            let r = witness_report(&a, &kit, &fs, &gs, &hs)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "pairing": {"re": r.pairing.re, "im": r.pairing.im},
                    "trilinear": {"re": r.trilinear.re, "im": r.trilinear.im},
                    "abs_error": r.abs_error,
                    "certificate": r.certificate,
                    "kit_constants": {
                        "theta_l2": r.theta_l2,
                        "c0": r.c0,
                        "h_l2": r.h_l2,
                    },
                }))
                .expect("json")
            );
        }
        Cmd::Verify { out, format } => {
            let mut cfg = match &cli.config {
                Some(path) => ExperimentConfig::from_file(path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = run_equivalence(&cfg)?;
            let fmt = match format.as_deref() {
                Some(f) => ReportFormat::from_str(f)
                    .ok_or_else(|| CliError::Config(format!("unknown format {f}")))?,
                None => match out.as_ref().and_then(|p| p.extension()) {
                    Some(e) if e == "csv" => ReportFormat::Csv,
                    _ => ReportFormat::Json,
                },
            };
            let text = render_report(&report, fmt);
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
        {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
