//! Batch verification and fiducial search for SIC frames.
//!
//! Every subcommand writes a single JSON report to stdout with the stable
//! keys `command`, `inputs`, `residuals`, `pass`, `details`, `error`,
//! `timing_ms`, and exits 0 when all checks pass, 1 on a verification
//! failure, 2 on usage or input errors. All numerical work is delegated to
//! the library; this binary only parses arguments and formats reports.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sicframes::clifford::{
    displaced_parity, parity, parity_uniqueness_audit, symmetry_matrix, symplectic_unitary,
};
use sicframes::decomp::{
    even_block_structure, intertwiner, split_displacement, subspace_splitting_check, twirl_left,
    twirl_right, unorthodox_generators,
};
use sicframes::fidsearch::{
    find_fiducial, frame_potential_floor, load_fiducial, save_fiducial, SearchConfig,
};
use sicframes::matrix::{Complex64, ComplexMatrix};
use sicframes::sicalign::{
    check_alignment_c1, check_alignment_c2, extract_frames, pi_expansion_crosscheck, projector_pi,
    verify_sic, verify_symmetry, FiducialVector, FrameMode, PiKind, PiProjector, SicAlignError,
};
use sicframes::weylheis::{displacement, pauli_x, pauli_z, DisplacementIndex};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "sicframes",
    version,
    about = "Weyl-Heisenberg SIC verification and search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    PauliX,
    PauliZ,
    Displacement,
    Parity,
    DisplacedParity,
    SymmetryUnitary,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Coarse,
    Fine,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Emit an operator matrix as JSON.
    Gen {
        /// Hilbert-space dimension (symmetry-unitary derives it from --d).
        #[arg(long, required_unless_present = "d")]
        n: Option<u64>,
        #[arg(long, value_enum)]
        op: OpKind,
        /// First displacement index.
        #[arg(long, default_value_t = 0)]
        a: i64,
        /// Second displacement index.
        #[arg(long, default_value_t = 0)]
        b: i64,
        /// Alignment dimension d (symmetry-unitary only).
        #[arg(long)]
        d: Option<u64>,
    },
    /// Check the SIC overlap and resolution conditions of a fiducial file.
    VerifySic {
        #[arg(long)]
        fiducial: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Check alignment condition 1 (and 2, when a dimension-d fiducial is given).
    CheckAlignment {
        #[arg(long)]
        fiducial: PathBuf,
        #[arg(long)]
        d: u64,
        /// Fiducial file in dimension d; enables condition 2.
        #[arg(long)]
        fiducial_d: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Build the embedded-frame projectors and certify ranks and idempotency.
    PiRanks {
        #[arg(long)]
        fiducial: PathBuf,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Certify the coarse and fine frame partitions of an aligned SIC.
    ExtractFrames {
        #[arg(long)]
        fiducial: PathBuf,
        #[arg(long)]
        d: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Verify the order-2 symmetry clauses for an aligned fiducial.
    VerifySymmetry {
        #[arg(long)]
        fiducial: PathBuf,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Enumerate and verify the parity-operator candidates for one dimension.
    ParityAudit {
        #[arg(long)]
        n: u64,
    },
    /// Block-structure, Chinese-remaindering and twirl verifications.
    DecompAudit {
        /// Dimension divisible by 4: four-block representation checks.
        #[arg(long)]
        n: Option<u64>,
        /// Coprime factor pair: splitting and twirl checks.
        #[arg(long, requires = "n2")]
        n1: Option<u64>,
        #[arg(long, requires = "n1")]
        n2: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Even d ≥ 4: block splitting for the pair (d, d(d−2)).
        #[arg(long)]
        d: Option<u64>,
    },
    /// Search for a SIC fiducial, optionally penalized towards alignment.
    FindFiducial {
        #[arg(long)]
        n: u64,
        /// Target alignment dimension (requires n = d(d−2)).
        #[arg(long)]
        d: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        penalty_weight: Option<f64>,
        /// Restrict iterates to a Zauner eigenspace.
        #[arg(long)]
        zauner: bool,
        /// Disable the symmetry-subspace restriction of aligned searches.
        #[arg(long)]
        no_symmetry_subspace: bool,
        /// Write the found fiducial to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A verification outcome: pass/fail plus report fields.
struct Outcome {
    pass: bool,
    residuals: Map<String, Value>,
    details: Value,
}

enum RunError {
    /// Bad inputs: files, dimensions, arguments. Exit code 2.
    Usage(String),
    /// The computation ran and failed verification. Exit code 1.
    Failed {
        residuals: Map<String, Value>,
        details: Value,
        message: String,
    },
}

fn residual(map: &mut Map<String, Value>, key: &str, value: f64) {
    map.insert(key.to_string(), json!(value));
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|r| {
            let row: Vec<Value> = (0..m.cols())
                .map(|c| json!([m[(r, c)].re, m[(r, c)].im]))
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

fn load(path: &PathBuf) -> Result<FiducialVector, RunError> {
    let loaded = load_fiducial(path).map_err(|e| RunError::Usage(e.to_string()))?;
    if loaded.renormalized {
        eprintln!(
            "warning: {} renormalized (norm deviation {:.3e})",
            path.display(),
            loaded.norm_deviation
        );
    }
    Ok(loaded.fiducial)
}

/// Dimension and normalization problems are usage errors; everything else
/// from the library is a verification failure.
fn map_err_kind(e: SicAlignError) -> RunError {
    match e {
        SicAlignError::DimensionMismatch { .. } | SicAlignError::NotNormalized { .. } => {
            RunError::Usage(e.to_string())
        }
        other => RunError::Failed {
            residuals: Map::new(),
            details: Value::Null,
            message: other.to_string(),
        },
    }
}

fn run(cmd: &Command) -> Result<Outcome, RunError> {
    match cmd {
        Command::Gen { n, op, a, b, d } => {
            let need_n = || n.ok_or_else(|| RunError::Usage("--n required".into()));
            let matrix = match op {
                OpKind::PauliX => pauli_x(need_n()?),
                OpKind::PauliZ => pauli_z(need_n()?),
                OpKind::Displacement => displacement(&DisplacementIndex::new(*a, *b, need_n()?)),
                OpKind::Parity => parity(need_n()?),
                OpKind::DisplacedParity => {
                    displaced_parity(&DisplacementIndex::new(*a, *b, need_n()?))
                }
                OpKind::SymmetryUnitary => {
                    let d = d.ok_or_else(|| {
                        RunError::Usage("--d required for symmetry-unitary".into())
                    })?;
                    if d < 4 || d % 2 != 0 {
                        return Err(RunError::Usage(
                            "symmetry-unitary requires even d ≥ 4".into(),
                        ));
                    }
                    symplectic_unitary(&symmetry_matrix(d))
                }
            };
            let mut residuals = Map::new();
            residual(
                &mut residuals,
                "unitarity_defect",
                matrix.unitarity_defect(),
            );
            Ok(Outcome {
                pass: true,
                residuals,
                details: json!({ "matrix": matrix_json(&matrix) }),
            })
        }

        Command::VerifySic { fiducial, tol } => {
            let fid = load(fiducial)?;
            let report = verify_sic(&fid, *tol);
            let mut residuals = Map::new();
            residual(
                &mut residuals,
                "max_overlap_deviation",
                report.max_overlap_deviation,
            );
            residual(
                &mut residuals,
                "resolution_residual",
                report.resolution_residual,
            );
            Ok(Outcome {
                pass: report.pass,
                residuals,
                details: json!({
                    "dim": report.dim,
                    "worst_index": report.worst_index,
                    "tolerance": report.tolerance,
                }),
            })
        }

        Command::CheckAlignment {
            fiducial,
            d,
            fiducial_d,
            tol,
        } => {
            let fid = load(fiducial)?;
            let report = match fiducial_d {
                None => check_alignment_c1(&fid, *d, *tol).map_err(map_err_kind)?,
                Some(path) => {
                    let fid_d = load(path)?;
                    match check_alignment_c2(&fid, &fid_d, *d, *tol) {
                        Ok(r) => r,
                        Err(SicAlignError::SearchSpaceExhausted { best_residual }) => {
                            let mut residuals = Map::new();
                            residual(&mut residuals, "condition2_best_residual", best_residual);
                            return Err(RunError::Failed {
                                residuals,
                                details: Value::Null,
                                message: "no condition-2 witness found".into(),
                            });
                        }
                        Err(e) => return Err(map_err_kind(e)),
                    }
                }
            };
            let mut residuals = Map::new();
            residual(
                &mut residuals,
                "condition1_max_residual",
                report.condition1_max_residual,
            );
            if let Some(r2) = report.condition2_max_residual {
                residual(&mut residuals, "condition2_max_residual", r2);
            }
            let pass = report.condition1_pass && report.condition2_pass.unwrap_or(true);
            Ok(Outcome {
                pass,
                residuals,
                details: serde_json::to_value(&report).unwrap_or(Value::Null),
            })
        }

        Command::PiRanks { fiducial, d, tol } => {
            let fid = load(fiducial)?;
            let p1 = projector_pi(&fid, *d, PiKind::One).map_err(map_err_kind)?;
            let p2 = projector_pi(&fid, *d, PiKind::Two).map_err(map_err_kind)?;
            let crosscheck = pi_expansion_crosscheck(&fid, *d).map_err(map_err_kind)?;
            let mut residuals = Map::new();
            residual(&mut residuals, "pi1_idempotency", p1.idempotency_residual);
            residual(&mut residuals, "pi2_idempotency", p2.idempotency_residual);
            residual(&mut residuals, "expansion_crosscheck", crosscheck);
            let rank_ok = p1.rank == PiProjector::expected_rank(*d, PiKind::One)
                && p2.rank == PiProjector::expected_rank(*d, PiKind::Two);
            let pass =
                p1.is_projector(*tol) && p2.is_projector(*tol) && rank_ok && crosscheck < 1e-10;
            Ok(Outcome {
                pass,
                residuals,
                details: json!({
                    "pi1": { "rank": p1.rank, "rank_spectral": p1.rank_spectral, "trace": p1.trace },
                    "pi2": { "rank": p2.rank, "rank_spectral": p2.rank_spectral, "trace": p2.trace },
                }),
            })
        }

        Command::ExtractFrames {
            fiducial,
            d,
            mode,
            tol,
        } => {
            let fid = load(fiducial)?;
            let modes: Vec<FrameMode> = match mode {
                ModeArg::Coarse => vec![FrameMode::Coarse],
                ModeArg::Fine => vec![FrameMode::Fine],
                ModeArg::Both => vec![FrameMode::Coarse, FrameMode::Fine],
            };
            let mut residuals = Map::new();
            let mut details = Vec::new();
            let mut pass = true;
            for m in modes {
                let name = match m {
                    FrameMode::Coarse => "coarse",
                    FrameMode::Fine => "fine",
                };
                match extract_frames(&fid, *d, m, *tol) {
                    Ok(partition) => {
                        residual(
                            &mut residuals,
                            &format!("{name}_max_tightness"),
                            partition.max_tightness_residual,
                        );
                        residual(
                            &mut residuals,
                            &format!("{name}_max_equiangularity"),
                            partition.max_equiangularity_residual,
                        );
                        details.push(json!({
                            "mode": name,
                            "frame_count": partition.frame_count,
                            "vectors_per_frame": partition.vectors_per_frame,
                            "rank": partition.expected_rank,
                        }));
                    }
                    Err(SicAlignError::PartitionFailure { shift, reason }) => {
                        pass = false;
                        residual(&mut residuals, &format!("{name}_max_tightness"), f64::NAN);
                        residual(
                            &mut residuals,
                            &format!("{name}_max_equiangularity"),
                            f64::NAN,
                        );
                        details.push(json!({
                            "mode": name,
                            "failure": { "shift": shift, "reason": reason },
                        }));
                    }
                    Err(e) => return Err(map_err_kind(e)),
                }
            }
            Ok(Outcome {
                pass,
                residuals,
                details: Value::Array(details),
            })
        }

        Command::VerifySymmetry { fiducial, d, tol } => {
            let fid = load(fiducial)?;
            match verify_symmetry(&fid, *d, *tol) {
                Ok(report) => {
                    let mut residuals = Map::new();
                    residual(&mut residuals, "involution", report.involution_residual);
                    residual(&mut residuals, "fiducial_fix", report.fiducial_fix_residual);
                    residual(
                        &mut residuals,
                        "projector_permutation",
                        report.projector_permutation_residual,
                    );
                    residual(&mut residuals, "block_form", report.block_form_residual);
                    Ok(Outcome {
                        pass: report.pass,
                        residuals,
                        details: serde_json::to_value(&report).unwrap_or(Value::Null),
                    })
                }
                Err(SicAlignError::SymmetryFailure {
                    clause,
                    residual: r,
                }) => {
                    let mut residuals = Map::new();
                    residual(&mut residuals, "failed_clause_residual", r);
                    Err(RunError::Failed {
                        residuals,
                        details: json!({ "failed_clause": clause }),
                        message: format!("symmetry clause '{clause}' failed at {r:.3e}"),
                    })
                }
                Err(e) => Err(map_err_kind(e)),
            }
        }

        Command::ParityAudit { n } => {
            if !(2..=12).contains(n) {
                return Err(RunError::Usage("parity-audit supports 2 ≤ n ≤ 12".into()));
            }
            match parity_uniqueness_audit(*n) {
                Ok(report) => {
                    let worst = report
                        .cases
                        .iter()
                        .map(|c| c.residual)
                        .fold(0.0f64, f64::max);
                    let mut residuals = Map::new();
                    residual(&mut residuals, "worst_case_residual", worst);
                    Ok(Outcome {
                        pass: report.all_pass(),
                        residuals,
                        details: serde_json::to_value(&report).unwrap_or(Value::Null),
                    })
                }
                Err(e) => Err(RunError::Failed {
                    residuals: Map::new(),
                    details: Value::Null,
                    message: e.to_string(),
                }),
            }
        }

        Command::DecompAudit { n, n1, n2, seed, d } => {
            if n.is_none() && n1.is_none() && d.is_none() {
                return Err(RunError::Usage(
                    "decomp-audit needs --n, --n1/--n2, or --d".into(),
                ));
            }
            let mut residuals = Map::new();
            let mut details = Map::new();
            let mut pass = true;

            if let Some(n) = n {
                let (x, z) =
                    unorthodox_generators(*n).map_err(|e| RunError::Usage(e.to_string()))?;
                let u = intertwiner(*n).map_err(|e| RunError::Usage(e.to_string()))?;
                let x_dev = u
                    .mul_mat(&x)
                    .mul_mat(&u.adjoint())
                    .frobenius_distance(&pauli_x(*n));
                let z_dev = u
                    .mul_mat(&z)
                    .mul_mat(&u.adjoint())
                    .frobenius_distance(&pauli_z(*n));
                let mut block_dev: f64 = 0.0;
                let mut leakage: f64 = 0.0;
                let half = (*n / 2) as i64;
                for a in 0..half {
                    for b in 0..half {
                        match even_block_structure(*n, a, b) {
                            Ok(report) => {
                                block_dev = block_dev.max(report.max_block_deviation);
                                leakage = leakage.max(report.off_block_mass);
                            }
                            Err(e) => {
                                pass = false;
                                details.insert("block_error".into(), json!(e.to_string()));
                            }
                        }
                    }
                }
                residual(&mut residuals, "intertwiner_x", x_dev);
                residual(&mut residuals, "intertwiner_z", z_dev);
                residual(&mut residuals, "even_block_deviation", block_dev);
                residual(&mut residuals, "off_block_leakage", leakage);
                pass =
                    pass && x_dev < 1e-12 && z_dev < 1e-12 && block_dev < 1e-12 && leakage < 1e-13;
            }

            if let (Some(n1), Some(n2)) = (n1, n2) {
                let m = n1 * n2;
                let mut split_dev: f64 = 0.0;
                for a in 0..m as i64 {
                    for b in 0..m as i64 {
                        let dev = split_displacement(*n1, *n2, a, b)
                            .map_err(|e| RunError::Usage(e.to_string()))?;
                        split_dev = split_dev.max(dev);
                    }
                }
                // Twirl identities on seeded pseudo-random matrices versus
                // direct partial traces.
                let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
                let mut next = move || {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                };
                let mut twirl_dev: f64 = 0.0;
                for _ in 0..50 {
                    let a = ComplexMatrix::from_fn(m as usize, m as usize, |_, _| {
                        Complex64::new(next(), next())
                    });
                    let tl = twirl_left(&a, *n1, *n2);
                    let want = ComplexMatrix::identity(*n1 as usize)
                        .kron(&a.partial_trace_first(*n1 as usize, *n2 as usize));
                    twirl_dev = twirl_dev.max(tl.frobenius_distance(&want));
                    let tr = twirl_right(&a, *n1, *n2);
                    let want = a
                        .partial_trace_second(*n1 as usize, *n2 as usize)
                        .kron(&ComplexMatrix::identity(*n2 as usize));
                    twirl_dev = twirl_dev.max(tr.frobenius_distance(&want));
                }
                residual(&mut residuals, "splitting_max", split_dev);
                residual(&mut residuals, "twirl_max", twirl_dev);
                pass = pass && split_dev < 1e-12 && twirl_dev < 1e-12;
            }

            if let Some(d) = d {
                if *d < 4 || d % 2 != 0 {
                    return Err(RunError::Usage("--d must be even and ≥ 4".into()));
                }
                let report = subspace_splitting_check(*d).map_err(|e| RunError::Failed {
                    residuals: Map::new(),
                    details: Value::Null,
                    message: e.to_string(),
                })?;
                residual(
                    &mut residuals,
                    "subspace_first_family",
                    report.first_family_max,
                );
                residual(
                    &mut residuals,
                    "subspace_second_family",
                    report.second_family_max,
                );
                pass = pass && report.first_family_max < 1e-11 && report.second_family_max < 1e-11;
            }

            Ok(Outcome {
                pass,
                residuals,
                details: Value::Object(details),
            })
        }

        Command::FindFiducial {
            n,
            d,
            seed,
            restarts,
            max_iter,
            penalty_weight,
            zauner,
            no_symmetry_subspace,
            out,
        } => {
            if let Some(d) = d {
                if *d < 4 || d % 2 != 0 || *n != d * (d - 2) {
                    return Err(RunError::Usage(format!(
                        "alignment requires even d ≥ 4 and n = d(d−2); got n = {n}, d = {d}"
                    )));
                }
            }
            let mut cfg = match d {
                Some(d) => SearchConfig::with_alignment(*n, *d),
                None => SearchConfig::new(*n),
            };
            cfg.seed = *seed;
            if let Some(r) = restarts {
                cfg.restarts = (*r).max(1);
            }
            if let Some(m) = max_iter {
                cfg.max_iterations = *m;
            }
            if let Some(w) = penalty_weight {
                cfg.penalty_weight = *w;
            }
            cfg.use_zauner_subspace = *zauner;
            if *no_symmetry_subspace {
                cfg.use_symmetry_subspace = false;
            }
            let result = find_fiducial(&cfg);
            if let Some(path) = out {
                save_fiducial(&result.fiducial, path)
                    .map_err(|e| RunError::Usage(e.to_string()))?;
            }
            let mut residuals = Map::new();
            residual(
                &mut residuals,
                "frame_potential_gap",
                result.frame_potential - frame_potential_floor(*n),
            );
            residual(
                &mut residuals,
                "alignment_penalty",
                result.alignment_residual.unwrap_or(0.0),
            );
            Ok(Outcome {
                pass: result.converged,
                residuals,
                details: json!({
                    "frame_potential": result.frame_potential,
                    "iterations_used": result.iterations_used,
                    "converged": result.converged,
                    "out": out.as_ref().map(|p| p.display().to_string()),
                }),
            })
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Gen { .. } => "gen",
        Command::VerifySic { .. } => "verify-sic",
        Command::CheckAlignment { .. } => "check-alignment",
        Command::PiRanks { .. } => "pi-ranks",
        Command::ExtractFrames { .. } => "extract-frames",
        Command::VerifySymmetry { .. } => "verify-symmetry",
        Command::ParityAudit { .. } => "parity-audit",
        Command::DecompAudit { .. } => "decomp-audit",
        Command::FindFiducial { .. } => "find-fiducial",
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            let code = match e.kind() {
                DisplayHelp | DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let inputs =
        serde_json::to_value(std::env::args().skip(1).collect::<Vec<_>>()).unwrap_or(Value::Null);
    let started = Instant::now();
    let name = command_name(&cli.command);
    let (code, report) = match run(&cli.command) {
        Ok(outcome) => (
            i32::from(!outcome.pass),
            json!({
                "command": name,
                "inputs": inputs,
                "residuals": Value::Object(outcome.residuals),
                "pass": outcome.pass,
                "details": outcome.details,
                "error": Value::Null,
                "timing_ms": started.elapsed().as_secs_f64() * 1e3,
            }),
        ),
        Err(RunError::Failed {
            residuals,
            details,
            message,
        }) => (
            1,
            json!({
                "command": name,
                "inputs": inputs,
                "residuals": Value::Object(residuals),
                "pass": false,
                "details": details,
                "error": message,
                "timing_ms": started.elapsed().as_secs_f64() * 1e3,
            }),
        ),
        Err(RunError::Usage(message)) => (
            2,
            json!({
                "command": name,
                "inputs": inputs,
                "residuals": {},
                "pass": false,
                "details": Value::Null,
                "error": message,
                "timing_ms": started.elapsed().as_secs_f64() * 1e3,
            }),
        ),
    };
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    std::process::exit(code);
}
