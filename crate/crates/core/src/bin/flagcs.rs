use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flagcs::harness::{self, RunConfig};
use flagcs::weyl::{self, ThetaSet, WeylElement};
use flagcs::{Error, Result};

/// Largest `n` for which `S_n` is enumerated.
const MAX_WEYL_N: usize = 8;

#[derive(Parser)]
#[command(name = "flagcs", version, about = "Control sets of bilinear systems on flag manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and every configured check.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured flag type, e.g. `1,2`.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Weyl group combinatorics for S_n.
    Weyl {
        #[arg(long)]
        n: usize,
        /// Double cosets `W_L \ W / W_R`, written `L;R`, e.g. `1;2`.
        #[arg(long)]
        cosets: Option<String>,
        /// Reduced word of a permutation, e.g. `[3,1,2]`.
        #[arg(long)]
        word: Option<String>,
    },
    /// Run only the listed checks.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Stdout line that exits quietly once the reader has gone away.
macro_rules! say {
    ($($arg:tt)*) => {
        emit(format_args!($($arg)*))
    };
}

fn emit(args: fmt::Arguments) {
    if let Err(e) = writeln!(io::stdout().lock(), "{args}") {
        if e.kind() == io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn parse_theta(s: &str, n: usize) -> Result<ThetaSet> {
    let theta: ThetaSet = s.parse()?;
    theta.validate(n)?;
    Ok(theta)
}

fn print_report(report: &harness::VerificationReport) {
    for c in &report.checks {
        let status = match c.status {
            harness::Status::Pass => "PASS",
            harness::Status::Fail => "FAIL",
            harness::Status::Skip => "SKIP",
        };
        say!("{status} {:<18} {}", c.name, c.detail);
    }
}

fn analyze(config: RunConfig, out: Option<PathBuf>, csv: Option<PathBuf>) -> Result<i32> {
    let analysis = harness::analyze(&config)?;
    let report = &analysis.report;
    say!(
        "{} cells, radius {:.4}, epsilon {:.4}; {} control sets, {} chain sets; Θ(S) = {}, Θ(φ) = {}",
        report.cells,
        report.radius,
        report.epsilon,
        report.control_sets.len(),
        report.chain_sets.len(),
        report.theta_s.as_ref().map_or("?".into(), ToString::to_string),
        report.theta_phi.as_ref().map_or("?".into(), ToString::to_string),
    );
    print_report(report);
    if let Some(path) = out {
        fs::write(path, report.to_json())?;
    }
    if let Some(path) = csv {
        fs::write(path, harness::cells_csv(&analysis))?;
    }
    Ok(harness::exit_code(report))
}

fn weyl_info(n: usize, cosets: Option<String>, word: Option<String>) -> Result<i32> {
    if !(2..=MAX_WEYL_N).contains(&n) {
        return Err(Error::Config(format!("n = {n}: exhaustive enumeration supports 2..={MAX_WEYL_N}")));
    }
    let w0 = weyl::longest_element(n)?;
    say!("|W| = {}", weyl::all_elements(n).len());
    say!("w0 = {w0}, length {}, reduced word {:?}", w0.length(), weyl::reduced_word(&w0));
    if let Some(spec) = cosets {
        let (l, r) = spec.split_once(';').ok_or_else(|| Error::Config(format!("cosets {spec:?}: expected L;R")))?;
        let (left, right) = (parse_theta(l, n)?, parse_theta(r, n)?);
        let blocks = weyl::double_cosets(n, &left, &right)?;
        say!("|W_{left} \\ W / W_{right}| = {}", blocks.len());
        for b in &blocks {
            say!("  {} ({} elements)", b.representative, b.elements.len());
        }
    }
    if let Some(perm) = word {
        let w: WeylElement = perm.parse()?;
        if w.n() != n {
            return Err(Error::Dimension(format!("{w} is not in S_{n}")));
        }
        say!("{w}: length {}, reduced word {:?}", w.length(), weyl::reduced_word(&w));
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze { config, theta, out, csv } => RunConfig::load(&config).and_then(|mut c| {
            if let Some(t) = theta {
                c.theta = parse_theta(&t, c.system.n)?;
            }
            analyze(c, out, csv)
        }),
        Command::Weyl { n, cosets, word } => weyl_info(n, cosets, word),
        Command::Check { config, checks, out } => RunConfig::load(&config).and_then(|mut c| {
            c.checks = checks;
            c.validate()?;
            analyze(c, out, None)
        }),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
