//! The `ordgame` command line: argument parsing, command dispatch and report
//! output. `main.rs` only maps the outcome to a process exit code.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ordgame::corpus::{self, Example};
use ordgame::polytope::distance;
use ordgame::{
    brute_force_gne, check_gne_grid, check_svip, lhc_probe, run_suite, solve_svip, Certificate, CertificateKind,
    GameSpec, PreferenceSpec, Profile, Report, SolverConfig, Suite, SuiteConfig, Witness,
};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FAILED: u8 = 2;

/// Warning attached to reports on games where some strict preference is empty.
pub const DEGENERATE_WARNING: &str = "degenerate: empty strict preference";

/// Resolution of the lower hemicontinuity probe of the jump maps.
const LHC_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "ordgame",
    version,
    about = "Solve and certify generalized ordinal Nash games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the quasivariational inequality of a game and grid-check the result.
    Solve(SolveArgs),
    /// Grid-check a given profile.
    Verify(VerifyArgs),
    /// Run a seeded batch suite.
    Theorems(TheoremArgs),
    /// List, dump or run the bundled examples.
    Examples(ExampleArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem file (JSON).
    pub file: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Grid step for the equilibrium check.
    #[arg(long, default_value_t = 0.05)]
    pub grid: f64,
    /// Report path; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Stacked profile, comma separated.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    pub point: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub grid: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long, value_parser = parse_suite)]
    pub suite: Suite,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub grid: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    /// Example name; lists the names when omitted.
    #[arg(long)]
    pub name: Option<String>,
    /// Run the example's reference checks.
    #[arg(long)]
    pub run: bool,
    /// Write the problem file to PATH, or to standard output.
    #[arg(long, value_name = "PATH", num_args = 0..=1)]
    pub dump: Option<Option<PathBuf>>,
    #[arg(long, default_value_t = 0.05)]
    pub grid: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: ordgame::Error| e.to_string())
}

/// What a command produced: text for standard output, files to write, and
/// the exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<(PathBuf, String)>,
    pub exit: u8,
}

impl Outcome {
    fn report(report: &Report, out: Option<&Path>, exit: u8) -> Self {
        let mut o = Outcome {
            exit,
            ..Default::default()
        };
        o.emit(report.to_json(), out);
        o
    }

    fn emit(&mut self, text: String, path: Option<&Path>) {
        match path {
            Some(p) => self.files.push((p.to_path_buf(), text)),
            None => self.stdout.push_str(&text),
        }
    }

    /// Writes the files (each atomically) and then standard output.
    pub fn flush(&self) -> anyhow::Result<()> {
        for (path, text) in &self.files {
            write_atomic(path, text)?;
        }
        std::io::stdout().write_all(self.stdout.as_bytes())?;
        Ok(())
    }
}

/// Writes `text` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_game(path: &Path) -> anyhow::Result<GameSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GameSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn degenerate(game: &GameSpec) -> bool {
    game.players
        .iter()
        .any(|p| matches!(p.preference, PreferenceSpec::TrivialZero))
}

/// Runs one command. `argv` is echoed into the report.
pub fn execute(cli: &Cli, argv: &[String]) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    let mut report = Report::new(argv.iter().cloned());
    let (out, exit) = match &cli.command {
        Command::Solve(a) => (a.out.as_deref(), solve(a, &mut report)?),
        Command::Verify(a) => (a.out.as_deref(), verify(a, &mut report)?),
        Command::Theorems(a) => (a.out.as_deref(), theorems(a, &mut report)?),
        Command::Examples(a) => return examples(a, report, start),
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(Outcome::report(&report, out, exit))
}

fn solve(a: &SolveArgs, report: &mut Report) -> anyhow::Result<u8> {
    let game = load_game(&a.file)?;
    let cfg = SolverConfig {
        step: a.step,
        tol: a.tol,
        max_iters: a.max_iters,
        restarts: a.restarts,
        seed: a.seed,
        ..SolverConfig::default()
    };
    report.seed = Some(a.seed);
    report.game_digest = Some(game.digest());
    if degenerate(&game) {
        report.warnings.push(DEGENERATE_WARNING.to_string());
    }
    let sol = solve_svip(&game, &cfg)?;
    let cert = check_gne_grid(&game, &sol.point, a.grid)?;
    if !sol.converged {
        report.warnings.push(format!(
            "solver did not converge: residual {:e} after {} iterations",
            sol.residual, sol.iters
        ));
    }
    let exit = if sol.converged && cert.passed {
        EXIT_PASS
    } else {
        EXIT_FAILED
    };
    report.solution = Some(sol);
    report.certificates.push(cert);
    Ok(exit)
}

fn verify(a: &VerifyArgs, report: &mut Report) -> anyhow::Result<u8> {
    let game = load_game(&a.file)?;
    report.game_digest = Some(game.digest());
    if degenerate(&game) {
        report.warnings.push(DEGENERATE_WARNING.to_string());
    }
    let x = Profile::from_flat(&game, &a.point)?;
    let cert = check_gne_grid(&game, &x, a.grid)?;
    let exit = if cert.passed { EXIT_PASS } else { EXIT_FAILED };
    report.certificates.push(cert);
    Ok(exit)
}

fn theorems(a: &TheoremArgs, report: &mut Report) -> anyhow::Result<u8> {
    let outcome = run_suite(&SuiteConfig::new(a.suite, a.instances, a.seed, a.grid))?;
    report.seed = Some(a.seed);
    let exit = if outcome.summary.passed { EXIT_PASS } else { EXIT_FAILED };
    report.summary = Some(outcome.summary);
    report.certificates = outcome.certificates;
    Ok(exit)
}

fn examples(a: &ExampleArgs, mut report: Report, start: Instant) -> anyhow::Result<Outcome> {
    let Some(name) = &a.name else {
        return Ok(Outcome {
            stdout: corpus::EXAMPLE_NAMES.iter().map(|n| format!("{n}\n")).collect(),
            ..Default::default()
        });
    };
    if !a.run && a.dump.is_none() {
        bail!("nothing to do: pass --run and/or --dump");
    }
    if a.run && matches!(a.dump, Some(None)) && a.out.is_none() {
        bail!("--run and --dump both write to standard output; give --dump a path or set --out");
    }
    let example = corpus::by_name(name)?;
    let mut outcome = Outcome::default();
    if let Some(path) = &a.dump {
        let Example::Game(game) = &example else {
            bail!("{name} is a pair of contour maps and has no problem file");
        };
        outcome.emit(game.to_json(), path.as_deref());
    }
    if a.run {
        report.seed = Some(a.seed);
        match &example {
            Example::Game(game) => {
                report.game_digest = Some(game.digest());
                if degenerate(game) {
                    report.warnings.push(DEGENERATE_WARNING.to_string());
                }
                run_game_example(name, game, a, &mut report)?;
            }
            Example::ContourMaps(maps) => {
                let (bases, dirs, steps) = corpus::lhc_remark_probe_plan();
                report
                    .certificates
                    .push(lhc_probe(&maps.lhc, &bases, &dirs, &steps, LHC_TOL));
                let mut v = lhc_probe(&maps.boundary_variant, &bases, &dirs, &steps, LHC_TOL);
                v.expected_failure = !v.passed;
                report.certificates.push(v);
            }
        }
        report.wall_time_s = start.elapsed().as_secs_f64();
        outcome.exit = if report.all_passed() { EXIT_PASS } else { EXIT_FAILED };
        outcome.emit(report.to_json(), a.out.as_deref());
    }
    Ok(outcome)
}

/// Reference checks of the game examples. Failures that the example exists to
/// exhibit are flagged as expected.
fn run_game_example(name: &str, game: &GameSpec, a: &ExampleArgs, report: &mut Report) -> anyhow::Result<()> {
    let cfg = SolverConfig {
        seed: a.seed,
        ..SolverConfig::default()
    };
    match name {
        "trivial-pref" => {
            let origin = Profile::from_flat(game, &vec![0.0; game.total_dim()])?;
            report.certificates.push(check_gne_grid(game, &origin, a.grid)?);
            let mut direction = vec![0.0; game.total_dim()];
            direction[0] = 1.0;
            let mut svip = check_svip(game, &origin, &direction, 1e-9)?;
            svip.expected_failure = !svip.passed;
            report.certificates.push(svip);
        }
        _ => {
            let sol = solve_svip(game, &cfg)?;
            report.certificates.push(check_gne_grid(game, &sol.point, a.grid)?);
            if sol.operator_value.in_n0() {
                report.certificates.push(check_svip(
                    game,
                    &sol.point,
                    &sol.operator_value.stacked(),
                    10.0 * cfg.tol,
                )?);
            }
            let expected = match name {
                "coordinate-pref" => Some(vec![1.0; game.total_dim()]),
                "quadratic" => Some(vec![0.0; game.total_dim()]),
                _ => None,
            };
            if let Some(target) = &expected {
                let d = distance(sol.point.flat(), target);
                report.certificates.push(
                    Certificate::new(
                        CertificateKind::GneGrid,
                        sol.converged && d <= 1e-6,
                        format!("solver point at distance {d:e} from the known equilibrium {target:?}"),
                    )
                    .with_witness(Witness {
                        player: None,
                        point: sol.point.flat().to_vec(),
                        instance: None,
                    }),
                );
            }
            report
                .certificates
                .push(brute_force_summary(game, a.grid, expected.as_deref())?);
            report.solution = Some(sol);
        }
    }
    Ok(())
}

/// Grid equilibria exist and, if the equilibrium is known, all lie within
/// `h√2` of it. Ties between neighbouring grid points can leave more than one.
fn brute_force_summary(game: &GameSpec, h: f64, expected: Option<&[f64]>) -> anyhow::Result<Certificate> {
    let eqs = brute_force_gne(game, h)?;
    let points: Vec<Vec<f64>> = eqs.iter().map(|(x, _)| x.flat().to_vec()).collect();
    let radius = h * 2f64.sqrt() + 1e-12;
    let stray = expected.and_then(|target| points.iter().find(|p| distance(p, target) > radius));
    let passed = !points.is_empty() && stray.is_none();
    let mut cert = Certificate::new(
        CertificateKind::GneGrid,
        passed,
        format!("brute force found {} grid equilibria: {:?}", points.len(), points),
    )
    .at(h);
    if let Some(p) = stray.or(points.first()) {
        cert = cert.with_witness(Witness {
            player: None,
            point: p.clone(),
            instance: None,
        });
    }
    Ok(cert)
}

/// Report for a failed command: the error chain, nothing else.
pub fn error_report(argv: &[String], err: &anyhow::Error) -> Report {
    let mut report = Report::new(argv.iter().cloned());
    report.errors = err.chain().map(|e| e.to_string()).collect();
    report
}

/// Where the report of `cli` goes.
pub fn report_path(cli: &Cli) -> Option<&Path> {
    match &cli.command {
        Command::Solve(a) => a.out.as_deref(),
        Command::Verify(a) => a.out.as_deref(),
        Command::Theorems(a) => a.out.as_deref(),
        Command::Examples(a) => a.out.as_deref(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("ordgame").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults_match_the_documented_flags() {
        let Command::Solve(a) = parse(&["solve", "g.json"]).command else {
            panic!()
        };
        assert_eq!(
            (a.step, a.tol, a.max_iters, a.restarts, a.seed, a.grid),
            (0.1, 1e-8, 10_000, 16, 42, 0.05)
        );
    }

    #[test]
    fn points_accept_negative_values() {
        let Command::Verify(a) = parse(&["verify", "g.json", "--point", "-1,0.5"]).command else {
            panic!()
        };
        assert_eq!(a.point, vec![-1.0, 0.5]);
    }

    #[test]
    fn dump_path_is_optional() {
        let Command::Examples(a) = parse(&["examples", "--name", "quadratic", "--dump"]).command else {
            panic!()
        };
        assert_eq!(a.dump, Some(None));
        let Command::Examples(a) = parse(&["examples", "--name", "quadratic", "--dump", "q.json"]).command else {
            panic!()
        };
        assert_eq!(a.dump, Some(Some(PathBuf::from("q.json"))));
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(Cli::try_parse_from(["ordgame", "theorems", "--suite", "t3"]).is_err());
    }

    #[test]
    fn atomic_write_replaces_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
