//! Command-line front end: analyze, regularize and certify rank-one
//! semidefinite recovery problems, plus a self-contained demo.

use clap::{Args, Parser, Subcommand};
use dualcert::certificate::Objective;
use dualcert::harness::{self, AnalysisReport, ProblemInstance, RegularizationLogJson};
use dualcert::regularize::RegularizationStatus;
use dualcert::symmat::SymMat;
use dualcert::{Error, SolverConfig};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_INVALID_INPUT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dualcert",
    version,
    about = "Dual-certificate analysis for rank-one semidefinite recovery problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Base feasibility/membership tolerance (default 1e-7, or DUALCERT_TOL)
    #[arg(long)]
    tol: Option<f64>,
    /// Master seed for every random stream
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Randomized restarts for the face search
    #[arg(long)]
    restarts: Option<usize>,
    /// Iteration budget for the projection solver
    #[arg(long)]
    max_iter: Option<usize>,
    /// Sample budget for the feasible-point oracle
    #[arg(long)]
    samples: Option<usize>,
    /// Emit a machine-readable JSON report on stdout
    #[arg(long)]
    json: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::with_seed(self.seed);
        let env_tol = std::env::var("DUALCERT_TOL")
            .ok()
            .and_then(|s| s.parse::<f64>().ok());
        if let Some(t) = self.tol.or(env_tol) {
            cfg.tol = t;
        }
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(i) = self.max_iter {
            cfg.max_iter = i;
        }
        if let Some(s) = self.samples {
            cfg.samples = s;
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect the face and evaluate the completeness condition
    Analyze {
        /// Problem file (JSON)
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Append implied measurements until the problem is complete
    Regularize {
        /// Problem file (JSON)
        file: PathBuf,
        /// Where to write the completed problem
        #[arg(short, long)]
        output: PathBuf,
        /// Optional path for the completion log (JSON)
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Search for a dual certificate, verify it, and cross-check with the
    /// feasible-point oracle
    Certify {
        /// Problem file (JSON)
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Walk through the built-in degenerate example end to end
    Demo {
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidInput(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::DimensionMismatch(_)
                | Error::NonFinite(_) => EXIT_INVALID_INPUT,
                Error::Invariant(_) | Error::EigNonConvergence { .. } => EXIT_INTERNAL,
            }
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze { file, solver } => {
            let inst = ProblemInstance::load(&file)?;
            let cfg = solver.config();
            let report = harness::analyze(&inst, &cfg)?;
            if solver.json {
                println!("{}", report.to_json()?);
            } else {
                print_analysis(&report);
            }
            Ok(exit_for(&report))
        }
        Command::Regularize {
            file,
            output,
            log,
            solver,
        } => {
            let inst = ProblemInstance::load(&file)?;
            let cfg = solver.config();
            let (completed, reg_log) = harness::regularize_instance(&inst, &cfg)?;
            completed.save(&output)?;
            let log_json = RegularizationLogJson::from_log(&reg_log);
            if let Some(path) = log {
                std::fs::write(&path, serde_json::to_string_pretty(&log_json)?)?;
            }
            if solver.json {
                println!("{}", serde_json::to_string_pretty(&log_json)?);
            } else {
                println!(
                    "appended {} measurement(s) over {} round(s); span {} -> {}",
                    reg_log.total_appended(),
                    reg_log.iterations.len(),
                    reg_log.initial_span_dim,
                    reg_log.final_span_dim
                );
                for it in &reg_log.iterations {
                    for a in &it.appended {
                        println!("  constraint <X, {}> = 0", fmt_matrix_inline(&a.matrix));
                    }
                }
                println!("status: {:?}", reg_log.status);
                println!("completed problem written to {}", output.display());
            }
            Ok(match reg_log.status {
                RegularizationStatus::Completed => EXIT_OK,
                RegularizationStatus::Inconclusive | RegularizationStatus::BudgetExhausted => {
                    EXIT_INCONCLUSIVE
                }
            })
        }
        Command::Certify { file, solver } => {
            let inst = ProblemInstance::load(&file)?;
            let cfg = solver.config();
            let report = harness::certify(&inst, &cfg)?;
            if solver.json {
                println!("{}", report.to_json()?);
            } else {
                print_analysis(&report);
                print_certificate(&report);
            }
            Ok(exit_for(&report))
        }
        Command::Demo { solver } => demo(&solver),
    }
}

fn exit_for(report: &AnalysisReport) -> u8 {
    if report.inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}

fn fmt_matrix_inline(m: &SymMat) -> String {
    let rows: Vec<String> = m
        .to_dense()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.4}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn print_analysis(report: &AnalysisReport) {
    println!(
        "n = {}, m = {}, seed = {}, provenance = {}",
        report.n,
        report.m,
        report.seed,
        match &report.provenance {
            harness::Provenance::Example1 => "example1".to_string(),
            harness::Provenance::PhaseLift { n, m, seed } =>
                format!("phaselift(n={n}, m={m}, seed={seed})"),
            harness::Provenance::SparsePhaseLift { n, m, k, seed } =>
                format!("sparse_phaselift(n={n}, m={m}, k={k}, seed={seed})"),
            harness::Provenance::PlantedFace { .. } => "planted_face".to_string(),
            harness::Provenance::File { path } => format!("file({path})"),
        }
    );
    match (&report.face_status, &report.face) {
        (harness::FaceStatus::Found, Some(f)) => {
            println!(
                "face: found, range dimension {}, element A = {}",
                f.range_dim,
                fmt_matrix_inline(&f.matrix)
            );
            let lam: Vec<String> = f.lam.iter().map(|v| format!("{v:.4}")).collect();
            println!("      lambda = [{}]", lam.join(", "));
        }
        (harness::FaceStatus::Empty, _) => {
            println!("face: none (no PSD span element orthogonal to X0)")
        }
        _ => println!("face: inconclusive"),
    }
    println!(
        "complete: {}{}",
        report.completeness.complete,
        if report.completeness.inconclusive {
            " (inconclusive)"
        } else {
            ""
        }
    );
    for v in &report.completeness.violations {
        println!(
            "  violation: {}(e_{} (x) q_{}) is not a candidate certificate direction",
            match v.sign {
                dualcert::cone::Sign::Plus => "+",
                dualcert::cone::Sign::Minus => "-",
            },
            v.j + 1,
            v.k + 1
        );
    }
}

fn print_certificate(report: &AnalysisReport) {
    match &report.certificate {
        Some(harness::CertificateReport::Found {
            lambda,
            q,
            valid,
            ..
        }) => {
            let lam: Vec<String> = lambda.iter().map(|v| format!("{v:.4}")).collect();
            println!("certificate: found, lambda = [{}]", lam.join(", "));
            println!("             Q = {}", fmt_matrix_inline(q));
            println!("             verified: {valid}");
        }
        Some(harness::CertificateReport::Absent { residual }) => {
            println!("certificate: none (residual {residual:.3e})")
        }
        Some(harness::CertificateReport::Inconclusive { residual }) => {
            println!("certificate: inconclusive (residual {residual:.3e})")
        }
        None => {}
    }
    if let Some(o) = &report.oracle {
        println!(
            "oracle: {}/{} samples feasible, best objective {:.6} vs value at X0 {:.6}",
            o.feasible, o.attempts, o.best_value, o.x0_value
        );
    }
}

fn demo(solver: &SolverArgs) -> Result<u8, Error> {
    let cfg = solver.config();
    let inst = harness::gen_example1();

    if solver.json {
        // machine-readable demo: certify before and after regularization
        let before = harness::certify(&inst, &cfg)?;
        let (completed, log) = harness::regularize_instance(&inst, &cfg)?;
        let after = harness::certify(&completed, &cfg)?;
        let doc = serde_json::json!({
            "before": serde_json::from_str::<serde_json::Value>(&before.to_json()?)?,
            "regularization": RegularizationLogJson::from_log(&log),
            "after": serde_json::from_str::<serde_json::Value>(&after.to_json()?)?,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        let inconclusive = before.inconclusive
            || after.inconclusive
            || log.status != RegularizationStatus::Completed;
        return Ok(if inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK });
    }

    println!("minimize 0.5*||X||_F^2  subject to  X >= 0,");
    println!("  <X, [[0, 0], [0, 1]]> = 0");
    println!("  <X, [[1, 1], [1, 1]]> = 1");
    println!("ground truth X0 = e1 e1* (the only feasible point)\n");

    println!("step 1: search the measurement span for a PSD element orthogonal to X0");
    let report = harness::analyze(&inst, &cfg)?;
    print_analysis(&report);
    if report.inconclusive {
        return Ok(EXIT_INCONCLUSIVE);
    }

    println!("\nstep 2: no certificate exists for the raw problem");
    let raw = harness::certify(&inst, &cfg)?;
    print_certificate(&raw);

    println!("\nstep 3: append the implied measurements");
    let (completed, log) = harness::regularize_instance(&inst, &cfg)?;
    for it in &log.iterations {
        for a in &it.appended {
            println!("  appended <X, {}> = 0", fmt_matrix_inline(&a.matrix));
        }
    }
    if log.status != RegularizationStatus::Completed {
        println!("  completion did not finish: {:?}", log.status);
        return Ok(EXIT_INCONCLUSIVE);
    }

    println!("\nstep 4: certify the completed problem");
    let after = harness::certify(&completed, &cfg)?;
    print_certificate(&after);
    let got_certificate = matches!(
        after.certificate,
        Some(harness::CertificateReport::Found { valid: true, .. })
    );
    if !got_certificate {
        return Ok(EXIT_INCONCLUSIVE);
    }

    println!("\nstep 5: cross-check against the known closed form");
    let explicit = dualcert::certificate::CertificateCandidate {
        lam: vec![1.0, -1.0, 1.0],
        q: SymMat::zeros(2),
        g: inst.gt.lifted().clone(),
    };
    let check = dualcert::certificate::verify_certificate(
        &explicit,
        &completed.ms,
        &completed.gt,
        &Objective::HalfFroSq,
        1e-9,
    )?;
    println!(
        "  lambda = [1, -1, 1], Q = 0 verifies: {} (A*(lambda) = -X0)",
        check.valid
    );
    Ok(if check.valid && !after.inconclusive {
        EXIT_OK
    } else {
        EXIT_INCONCLUSIVE
    })
}
