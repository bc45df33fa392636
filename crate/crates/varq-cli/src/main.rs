//! `varq` — command-line driver for the q-variation laboratory.
//!
//! Exit codes: 0 success, 1 validation error, 2 identity/acceptance
//! failure, 3 resolution/precision error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use varq_core::harness::{
    emit_csv, emit_tsv, estimate_constant, identity_suite, sweep, write_structured,
    StructuredReport, SweepAxis,
};
use varq_core::martingale::{cotype_ratio, random_martingale, witness_linfty, WalshMartingale};
use varq_core::spaces::{NormKind, Point, Space};
use varq_core::transference::{
    build_blocks, certificate_grid_check, cotype_chain_report, lift_error, select_sequences,
    telescoping_error, ChainParams,
};
use varq_core::variation::{vq_dp, SamplePath};
use varq_core::{Error, Result};

#[derive(Parser)]
#[command(name = "varq", about = "q-variation laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MartingaleKind {
    Witness,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Exact q-variation of a sample path stored as JSON.
    Variation {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        q: f64,
    },
    /// Best-constant estimate for the configured operator family.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the estimate along an axis (q=…, dim=…, grid=…).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the identity suite; nonzero exit on any failure.
    Identities {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cotype-q ratio of a Walsh martingale.
    Cotype {
        /// Norm label: l1 | l2 | linf | lr:<r>
        #[arg(long)]
        space: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        q: f64,
        #[arg(long, value_enum, default_value = "witness")]
        kind: MartingaleKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
    },
    /// Certified transference run: lift, selection, telescoping, chain.
    Transfer {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 31)]
        fejer: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, value_enum, default_value = "witness")]
        kind: MartingaleKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Deserialize)]
struct PathFile {
    space: Space,
    labels: Vec<f64>,
    values: Vec<Vec<f64>>,
}

fn parse_norm(label: &str) -> Result<NormKind> {
    match label {
        "l1" => Ok(NormKind::L1),
        "l2" => Ok(NormKind::L2),
        "linf" => Ok(NormKind::Linf),
        other => {
            if let Some(r) = other.strip_prefix("lr:") {
                let r: f64 = r
                    .parse()
                    .map_err(|e| Error::Validation(format!("bad exponent '{r}': {e}")))?;
                let kind = NormKind::Lr(r);
                kind.validate()?;
                Ok(kind)
            } else {
                Err(Error::Validation(format!(
                    "unknown norm '{other}' (expected l1 | l2 | linf | lr:<r>)"
                )))
            }
        }
    }
}

/// Reports travel as `<out>.csv` plus a structured `<out>.json` sibling;
/// refuse to let the sibling silently overwrite the config file.
fn sibling_json(out: &Path, config: &Path) -> Result<PathBuf> {
    let json = out.with_extension("json");
    if json == config {
        return Err(Error::Validation(format!(
            "structured report {} would overwrite the config file; choose a \
             different --out stem",
            json.display()
        )));
    }
    Ok(json)
}

fn build_martingale(
    kind: MartingaleKind,
    space: Space,
    m: usize,
    seed: u64,
    amplitude: f64,
) -> Result<WalshMartingale> {
    match kind {
        MartingaleKind::Witness => witness_linfty(space.dim.max(m), m),
        MartingaleKind::Random => random_martingale(seed, space, m, amplitude),
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Variation { path, q } => {
            let text = std::fs::read_to_string(&path)?;
            let file: PathFile =
                serde_json::from_str(&text).map_err(|e| Error::Validation(e.to_string()))?;
            let points = file
                .values
                .into_iter()
                .map(|c| Point::new(file.space, c))
                .collect::<Result<Vec<_>>>()?;
            let sample = SamplePath::new(file.labels, points)?;
            let result = vq_dp(&sample, q)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(0)
        }
        Command::Estimate { config, out } => {
            let cfg = varq_core::harness::ExperimentConfig::from_json(
                &std::fs::read_to_string(&config)?,
            )?;
            let outcome = estimate_constant(&cfg)?;
            let rows = vec![outcome.row.clone()];
            std::fs::write(&out, emit_csv(&rows)?)?;
            let structured = StructuredReport {
                config: Some(cfg),
                rows,
            };
            write_structured(&structured, &sibling_json(&out, &config)?)?;
            println!(
                "estimate {} (gap {:.3e}, {} evaluations) -> {}",
                outcome.ratio,
                outcome.richardson_gap,
                outcome.evaluations,
                out.display()
            );
            Ok(0)
        }
        Command::Sweep { config, axis, out } => {
            let cfg = varq_core::harness::ExperimentConfig::from_json(
                &std::fs::read_to_string(&config)?,
            )?;
            let axis = SweepAxis::parse(&axis)?;
            let rows = sweep(&cfg, &axis)?;
            std::fs::write(&out, emit_csv(&rows)?)?;
            let curve: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.kind == "sweep")
                .map(|r| {
                    let x = match axis {
                        SweepAxis::Q(_) => r.q,
                        SweepAxis::Dim(_) => r.dim as f64,
                        SweepAxis::GridCount(_) => r
                            .experiment_id
                            .trim_start_matches("sweep[grid=")
                            .trim_end_matches(']')
                            .parse()
                            .unwrap_or(f64::NAN),
                    };
                    (x, r.estimate)
                })
                .collect();
            let label = match axis {
                SweepAxis::Q(_) => "q",
                SweepAxis::Dim(_) => "dim",
                SweepAxis::GridCount(_) => "grid",
            };
            std::fs::write(out.with_extension("tsv"), emit_tsv(label, &curve)?)?;
            let structured = StructuredReport {
                config: Some(cfg),
                rows,
            };
            write_structured(&structured, &sibling_json(&out, &config)?)?;
            println!("sweep written to {}", out.display());
            Ok(0)
        }
        Command::Identities { seed } => {
            let suite = identity_suite(seed)?;
            for r in &suite.rows {
                println!("{}: {} ({})", r.experiment_id, r.estimate, r.diagnostic);
            }
            if suite.all_pass {
                println!("identity suite: PASS");
                Ok(0)
            } else {
                println!("identity suite: FAIL");
                Ok(2)
            }
        }
        Command::Cotype {
            space,
            dim,
            m,
            q,
            kind,
            seed,
            amplitude,
        } => {
            let space = Space::new(dim, parse_norm(&space)?)?;
            let mart = match kind {
                MartingaleKind::Witness => witness_linfty(dim, m)?,
                MartingaleKind::Random => random_martingale(seed, space, m, amplitude)?,
            };
            let ratio = cotype_ratio(&mart, q)?;
            println!("numerator   {}", ratio.numerator);
            println!("denominator {}", ratio.denominator);
            println!("ratio       {}", ratio.ratio);
            Ok(0)
        }
        Command::Transfer {
            m,
            eps,
            fejer,
            out,
            q,
            kind,
            seed,
        } => {
            let space = match kind {
                MartingaleKind::Witness => Space::linf(m),
                MartingaleKind::Random => Space::l2(1),
            };
            let mart = build_martingale(kind, space, m, seed, 1.0)?;
            let blocks = build_blocks(&mart, fejer)?;
            let cert = select_sequences(&blocks, eps)?;
            let grid = 1 << 12;
            let check = certificate_grid_check(&blocks, &cert, grid, 2, seed)?;
            let tele = telescoping_error(&blocks, &cert, grid, 2, seed)?;
            let lifts = lift_error(&mart, fejer, q, 64)?;
            // the chain integrals collapse exactly for scalar and ℓ² spaces
            // at q = 2; other spaces integrate directly, so shrink the
            // circle grid if the default busts the budget, and record the
            // reason instead of failing when even that is too coarse
            let chain = match cotype_chain_report(&mart, q, eps, fejer, &ChainParams::default())
            {
                Ok(c) => serde_json::to_value(&c)?,
                Err(Error::Size(_)) => {
                    let small = ChainParams {
                        theta_grid: 256,
                        ..Default::default()
                    };
                    match cotype_chain_report(&mart, q, eps, fejer, &small) {
                        Ok(c) => serde_json::to_value(&c)?,
                        Err(e) => serde_json::json!({ "skipped": e.to_string() }),
                    }
                }
                Err(e) => return Err(e),
            };
            let report = serde_json::json!({
                "m": m,
                "eps": eps,
                "fejer_degree": fejer,
                "q": q,
                "seed": seed,
                "martingale": match kind {
                    MartingaleKind::Witness => "witness",
                    MartingaleKind::Random => "random",
                },
                "theta_grid": grid,
                "theta_samples": 2,
                "certificate": cert,
                "grid_check": check,
                "telescoping_errors": tele,
                "lift_errors": lifts,
                "chain": chain,
            });
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            let worst = tele.iter().cloned().fold(0.0f64, f64::max);
            println!(
                "transfer m={m} eps={eps}: n={:?}, telescoping max {worst:.3e} (bound {:.3e}) -> {}",
                cert.n,
                3.0 * eps,
                out.display()
            );
            if !check.all_strict || worst > 3.0 * eps + 1e-9 {
                println!("transfer check: FAIL");
                return Ok(2);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe closes instead of panicking mid-print
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
