use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steklov_core::fem::build_mesh;
use steklov_lab::config::{parse_config, Geometry, Method, RunConfig};
use steklov_lab::exit;
use steklov_lab::matrix::{builtin_entries, run_matrix, validate_checks, MatrixOptions};
use steklov_lab::run::execute;

#[derive(Parser)]
#[command(name = "steklov-lab", version, about = "Steklov and boundary Laplacian spectra with bound checks")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of logical processors.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    /// Absolute tolerance for the bound checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a configuration file.
    Run { config: PathBuf },
    /// Run the built-in domain matrix.
    Matrix {
        /// Comma-separated checks; an empty list emits spectra only.
        #[arg(long)]
        checks: Option<String>,
        /// Factor applied to the upper curvature bound in theorem1.
        #[arg(long, default_value_t = 1.0)]
        kappa_scale: f64,
    },
    /// Write the mesh of a planar configuration.
    MeshDump { config: PathBuf },
}

fn input_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(exit::INPUT_ERROR as u8)
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e.line {
        Some(line) => input_error(format!("{}:{line}: {}", path.display(), e.message)),
        None => input_error(format!("{}: {}", path.display(), e.message)),
    })
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn cmd_run(cli: &Cli, path: &Path) -> ExitCode {
    let config = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(t) = cli.tolerance {
        if !(t >= 0.0) || !t.is_finite() {
            return input_error(format!("--tolerance must be nonnegative, got {t}"));
        }
    }
    let outcome = match execute(&config, cli.tolerance) {
        Ok(o) => o,
        Err(e) => {
            return match e.line {
                Some(line) => input_error(format!("{}:{line}: {}", path.display(), e.message)),
                None => input_error(format!("{}: {}", path.display(), e.message)),
            }
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = outcome.write(&dir) {
        eprintln!("error: writing {}: {e}", dir.display());
        return code(exit::CHECK_FAILED);
    }
    for c in &outcome.summary.checks {
        println!("{} {} {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    if let Some(e) = &outcome.summary.error {
        println!("FAILED {e}");
    }
    println!(
        "{} passed, {} failed; outputs in {}",
        outcome.summary.passed,
        outcome.summary.failed,
        dir.display()
    );
    code(outcome.exit_code())
}

fn cmd_matrix(cli: &Cli, checks: &Option<String>, kappa_scale: f64) -> ExitCode {
    let checks = checks.as_ref().map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(String::from)
            .collect::<Vec<_>>()
    });
    if let Some(c) = &checks {
        if let Err(e) = validate_checks(c) {
            return input_error(e);
        }
    }
    if !(kappa_scale > 0.0) || !kappa_scale.is_finite() {
        return input_error(format!("--kappa-scale must be positive, got {kappa_scale}"));
    }
    if let Some(t) = cli.tolerance {
        if !(t >= 0.0) || !t.is_finite() {
            return input_error(format!("--tolerance must be nonnegative, got {t}"));
        }
    }
    let opts = MatrixOptions {
        checks,
        kappa_scale,
        tolerance: cli.tolerance,
    };
    let results = match run_matrix(&builtin_entries(), &opts, cli.jobs.map(|j| j as usize)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return code(exit::CHECK_FAILED);
        }
    };
    let mut report = String::new();
    let mut failures = 0;
    for line in results.iter().flat_map(|r| &r.lines) {
        let text = line.render();
        println!("{text}");
        report.push_str(&text);
        report.push('\n');
        failures += usize::from(!line.pass);
    }
    let total = results.iter().map(|r| r.lines.len()).sum::<usize>();
    println!("{} passed, {failures} failed", total - failures);
    if let Some(dir) = &cli.out {
        let written = fs::create_dir_all(dir).and_then(|_| {
            fs::write(dir.join("matrix_report.txt"), &report)?;
            for (name, contents) in results.iter().flat_map(|r| &r.files) {
                fs::write(dir.join(name), contents)?;
            }
            Ok(())
        });
        if let Err(e) = written {
            eprintln!("error: writing {}: {e}", dir.display());
            return code(exit::CHECK_FAILED);
        }
    }
    code(if failures == 0 { exit::PASS } else { exit::CHECK_FAILED })
}

fn cmd_mesh_dump(cli: &Cli, path: &Path) -> ExitCode {
    let config = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let (Geometry::Planar { curve, metric }, Method::Fem { refinement, .. }) = (&config.geometry, &config.method) else {
        return input_error(format!("{}: mesh-dump requires planar geometry", path.display()));
    };
    let mesh = match curve.build(metric).and_then(|c| build_mesh(&c, *refinement)) {
        Ok(m) => m,
        Err(e) => return input_error(format!("{}: {e}", path.display())),
    };
    let text = mesh.to_text();
    match &cli.out {
        Some(dir) => {
            if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("mesh.txt"), &text)) {
                eprintln!("error: writing {}: {e}", dir.display());
                return code(exit::CHECK_FAILED);
            }
        }
        None => print!("{text}"),
    }
    code(exit::PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j as usize).build_global();
    }
    match &cli.command {
        Command::Run { config } => cmd_run(&cli, config),
        Command::Matrix { checks, kappa_scale } => cmd_matrix(&cli, checks, *kappa_scale),
        Command::MeshDump { config } => cmd_mesh_dump(&cli, config),
    }
}
