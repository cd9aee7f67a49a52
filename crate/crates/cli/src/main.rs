//! `qsteiner`: build, solve, puncture and verify punctured q-Steiner systems.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qsteiner::counting::{count_c, count_d, count_n, gaussian, necessary_conditions, oracle};
use qsteiner::designs::{
    apply_transform, build_parallelism, build_spread, construct_fano_m4, construct_fano_m5, construct_recursive,
    construct_s3485, construct_uniform_design, puncture_design, trivial_base, verify_with_jobs, ColumnOp,
    DesignMultiset, DesignParams, ParallelismSource, DEFAULT_NODE_BUDGET,
};
use qsteiner::equations::{
    build_full, build_uniform, parse_pin, solve, uniform_family_solution, LinearSystem, Rational, SolveStatus,
    UniformFamily,
};
use qsteiner::io::{read_design_file, write_design, write_parallelism};

#[derive(Parser)]
#[command(name = "qsteiner", version, about = "Punctured q-Steiner systems S_q(t,k,n;m)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian binomial coefficient [n choose k]_q.
    Gauss { n: u32, k: u32, q: u32 },
    /// Divisibility conditions for S_q(t,k,n). Exit 1 when one fails.
    Necessary { t: u32, k: u32, n: u32, q: u32 },
    /// Compare a closed-form count against brute-force enumeration.
    Oracle {
        #[command(subcommand)]
        count: OracleCount,
    },
    /// Solve the uniform system (one unknown X_r per dimension).
    UniformSolve {
        #[command(flatten)]
        params: ParamArgs,
        /// Fix a variable, e.g. `X0=1`. Repeatable.
        #[arg(long = "pin", value_name = "NAME=VALUE")]
        pins: Vec<String>,
        /// Solve the full system (one unknown per subspace) instead.
        #[arg(long)]
        full: bool,
    },
    /// Solve the full system (one unknown per subspace).
    FullSolve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "pin", value_name = "NAME=VALUE")]
        pins: Vec<String>,
    },
    /// Construct a design, verify it and write it out.
    Build {
        /// fano-m4, fano-m5, s3485, recursive, or a uniform family
        /// (fano, 3-4-8-4, 4-5-11-6, 5-6-12-6, 3-4-2k-k).
        name: String,
        #[arg(long)]
        q: u32,
        /// Family index for `fano`, `3-4-2k-k` and `recursive`.
        #[arg(long)]
        k: Option<u32>,
        /// `auto` or a parallelism file.
        #[arg(long, default_value = "auto")]
        parallelism: String,
        /// Base design for `recursive` (defaults to S_2(2,3,3;1) when k = 3).
        #[arg(long)]
        base: Option<PathBuf>,
        #[command(flatten)]
        output: OutArgs,
    },
    /// Re-verify a design file. Exit 1 on failure.
    Verify {
        file: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Delete the last coordinate of every block and verify the result.
    Puncture {
        file: PathBuf,
        #[command(flatten)]
        output: OutArgs,
    },
    /// Desarguesian line spread of F_q^n, written as an S_q(1,2,n;n) design.
    Spread {
        q: u32,
        n: u32,
        #[command(flatten)]
        output: OutArgs,
    },
    /// Parallelism of the lines of F_q^n.
    Parallelism {
        q: u32,
        n: u32,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Parallelism file for `--mode file`.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply column operations `j:c0,c1,...` (column j becomes sum c_i v_i) and verify.
    Transform {
        file: PathBuf,
        #[arg(long = "op", value_name = "J:C0,C1,...", required = true)]
        ops: Vec<String>,
        #[command(flatten)]
        output: OutArgs,
    },
}

#[derive(Subcommand)]
enum OracleCount {
    /// t-subspaces of F_q^n puncturing onto a fixed s-subspace of F_q^m.
    N { s: u32, m: u32, t: u32, n: u32, q: u32 },
    /// t-subspaces of a k-extension of an r-subspace Y that puncture onto a fixed s-subspace of Y.
    C { s: u32, t: u32, r: u32, k: u32, q: u32 },
    /// r-subspaces of F_q^m containing a fixed s-subspace.
    D { s: u32, r: u32, m: u32, q: u32 },
}

#[derive(clap::Args)]
struct ParamArgs {
    q: u32,
    t: u32,
    k: u32,
    n: u32,
    m: u32,
}

impl ParamArgs {
    fn params(&self) -> DesignParams {
        DesignParams::new(self.q, self.t, self.k, self.n, self.m)
    }
}

#[derive(clap::Args)]
struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for verification.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Search,
    File,
    Auto,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but its check failed.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Gauss { n, k, q } => {
            println!("{}", gaussian(n, k, q));
            Ok(true)
        }
        Command::Necessary { t, k, n, q } => {
            let report = necessary_conditions(t, k, n, q)?;
            for e in &report.entries {
                match e.quotient() {
                    Some(x) => println!("i={}: {}/{} = {x}", e.i, e.numerator, e.denominator),
                    None => println!("i={}: {}/{} not an integer", e.i, e.numerator, e.denominator),
                }
            }
            match report.first_failure() {
                None => {
                    let qs: Vec<String> = report.entries.iter().filter_map(|e| e.quotient()).map(|x| x.to_string()).collect();
                    println!("PASS ({})", qs.join(", "));
                }
                Some(i) => println!("FAIL at i={i}"),
            }
            Ok(report.pass)
        }
        Command::Oracle { count } => {
            let (label, formula, brute) = match count {
                OracleCount::N { s, m, t, n, q } => {
                    (format!("N_(({s},{m}),({t},{n})) q={q}"), count_n(s, m, t, n, q)?, oracle::oracle_n(s, m, t, n, q)?)
                }
                OracleCount::C { s, t, r, k, q } => {
                    (format!("C_(({s},{t}),({r},{k})) q={q}"), count_c(s, t, r, k, q)?, oracle::oracle_c(s, t, r, k, q)?)
                }
                OracleCount::D { s, r, m, q } => {
                    (format!("D_(({s},{r}),{m}) q={q}"), count_d(s, r, m, q)?, oracle::oracle_d(s, r, m, q)?)
                }
            };
            let agree = formula == brute.into();
            println!("{label}: formula {formula}, enumeration {brute}: {}", if agree { "agree" } else { "DISAGREE" });
            Ok(agree)
        }
        Command::UniformSolve { params, pins, full } => {
            if full {
                solve_and_print(&build_full(params.params())?, &pins)
            } else {
                solve_and_print(&build_uniform(params.params())?, &pins)
            }
        }
        Command::FullSolve { params, pins } => solve_and_print(&build_full(params.params())?, &pins),
        Command::Build { name, q, k, parallelism, base, output } => {
            let design = build(&name, q, k, &parallelism, base.as_deref())?;
            emit_design(&design, &output)
        }
        Command::Verify { file, jobs } => {
            let design = read_design_file(&file).with_context(|| format!("reading {}", file.display()))?;
            let report = verify_with_jobs(&design, jobs)?;
            println!("{report}");
            println!("{} distinct blocks", design.distinct());
            Ok(report.passed)
        }
        Command::Puncture { file, output } => {
            let design = read_design_file(&file).with_context(|| format!("reading {}", file.display()))?;
            emit_design(&puncture_design(&design)?, &output)
        }
        Command::Spread { q, n, output } => emit_design(&build_spread(q, n)?.as_steiner()?.as_design()?, &output),
        Command::Parallelism { q, n, mode, file, budget, out } => {
            let source = match (mode, file) {
                (Mode::File, Some(path)) => ParallelismSource::File(path),
                (Mode::File, None) => bail!("--mode file needs --file"),
                (Mode::Search, _) => ParallelismSource::Search { node_budget: budget },
                (Mode::Auto, Some(path)) => ParallelismSource::File(path),
                (Mode::Auto, None) => ParallelismSource::Auto,
            };
            let par = build_parallelism(q, n, &source)?;
            write_text(&write_parallelism(&par), out.as_deref())?;
            eprintln!("{} spreads of {} lines", par.spreads().len(), par.spreads()[0].lines().len());
            Ok(true)
        }
        Command::Transform { file, ops, output } => {
            let design = read_design_file(&file).with_context(|| format!("reading {}", file.display()))?;
            let ops = ops.iter().map(|s| parse_op(s)).collect::<Result<Vec<_>>>()?;
            emit_design(&apply_transform(&design, &ops)?, &output)
        }
    }
}

fn build(name: &str, q: u32, k: Option<u32>, parallelism: &str, base: Option<&Path>) -> Result<DesignMultiset> {
    let source = || {
        if parallelism == "auto" {
            ParallelismSource::Auto
        } else {
            ParallelismSource::File(PathBuf::from(parallelism))
        }
    };
    Ok(match name {
        "fano-m4" => construct_fano_m4(q)?,
        "fano-m5" => construct_fano_m5(q, &build_parallelism(q, 4, &source())?)?,
        "s3485" => construct_s3485(q)?,
        "recursive" => {
            let k = k.context("recursive needs --k")?;
            let base = match base {
                Some(path) => read_design_file(path).with_context(|| format!("reading {}", path.display()))?,
                None if k == 3 => trivial_base(q)?,
                None => bail!("recursive with k = {k} needs --base"),
            };
            construct_recursive(q, k, &build_parallelism(q, k + 1, &source())?, &base)?
        }
        other => {
            let family = UniformFamily::from_str(other).map_err(anyhow::Error::msg)?;
            let sol = uniform_family_solution(family, q, k.unwrap_or(0))?;
            construct_uniform_design(sol.params, &sol.as_rationals())?
        }
    })
}

/// Writes the design and prints its verification verdict.
fn emit_design(design: &DesignMultiset, output: &OutArgs) -> Result<bool> {
    write_text(&write_design(design), output.out.as_deref())?;
    let report = verify_with_jobs(design, output.jobs)?;
    let line = format!("{report}\n{} distinct blocks", design.distinct());
    if output.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(report.passed)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve_and_print<S: LinearSystem>(system: &S, pins: &[String]) -> Result<bool> {
    let pins = pins.iter().map(|p| parse_pin(p)).collect::<Result<Vec<_>, _>>().map_err(anyhow::Error::msg)?;
    let out = solve(system, &pins)?;
    println!("status: {}", out.status);
    if out.status == SolveStatus::Inconsistent {
        return Ok(false);
    }
    for (i, (name, value)) in out.variables.iter().zip(&out.values).enumerate() {
        let free = if out.free.contains(&i) { " (free, set to 0)" } else { "" };
        println!("{name} = {value}{free}");
    }
    println!("nonnegative integers: {}", if out.nonneg_integer { "yes" } else { "no" });
    println!("solution: {}", join(&out.values));
    Ok(true)
}

fn join(values: &[Rational]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Parses `j:c0,c1,...`.
fn parse_op(s: &str) -> Result<ColumnOp> {
    let (column, coeffs) = s.split_once(':').with_context(|| format!("op {s:?} is not J:C0,C1,..."))?;
    let column = column.trim().parse().with_context(|| format!("bad column in {s:?}"))?;
    let coeffs = coeffs
        .split(',')
        .map(|c| c.trim().parse::<u8>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("bad coefficients in {s:?}"))?;
    Ok(ColumnOp::new(column, coeffs))
}
