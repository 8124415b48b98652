//! Command-line front end. Exit codes: 0 success, 1 domain error, 2 I/O or parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::classify::{self, classify};
use crate::error::{Error, Result};
use crate::generate::{generate, GeneratorSpec, TargetClass};
use crate::io::{parse_tensor, parse_vector, write_scaling, write_tensor};
use crate::report::{self, KeyValues};
use crate::tcp::{self, FixedPointOptions, NewtonOptions, TcpInstance};
use crate::transform::{self, ScalingOptions};

#[derive(Debug, Parser)]
#[command(name = "nekrasov", version, about = "Nekrasov Z tensors and tensor complementarity problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report every class predicate for a tensor.
    Classify {
        input: PathBuf,
        /// Samples for the P-tensor counterexample search.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Guard in the nonsingular H test.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Compute the Nekrasov scaling W and the scaled tensor T·W.
    Scale {
        input: PathBuf,
        /// Blend W toward the diagonal so that T·W is strictly dominant.
        #[arg(long)]
        strict: bool,
        /// Where to write T·W; printed after the report otherwise.
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Split T into B⁺ + C.
    Decompose {
        input: PathBuf,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Solve TCP(T, q).
    Solve {
        input: PathBuf,
        /// Comma-separated q, or a path to a one-line file.
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, value_enum, default_value_t = Method::Newton)]
        method: Method,
        #[arg(long, default_value_t = tcp::DEFAULT_TOL)]
        tol: f64,
        /// Defaults to 200 (newton) or 10000 (fixed).
        #[arg(long)]
        max_iter: Option<usize>,
        /// Initial step for the fixed-point method.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Comma-separated start point; defaults to (1/n, ..., 1/n).
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Spectral radius of a nonnegative tensor.
    Spectral {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Write a seeded random tensor of a given class.
    Generate {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Newton,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ClassArg {
    NekrasovZ,
    SddZ,
    ZOnly,
    Nonnegative,
    Arbitrary,
}

impl From<ClassArg> for TargetClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::NekrasovZ => TargetClass::NekrasovZ,
            ClassArg::SddZ => TargetClass::SddZ,
            ClassArg::ZOnly => TargetClass::ZOnly,
            ClassArg::Nonnegative => TargetClass::Nonnegative,
            ClassArg::Arbitrary => TargetClass::Arbitrary,
        }
    }
}

fn read_tensor(path: &Path) -> Result<crate::tensor::Tensor> {
    let text = std::fs::read_to_string(path)?;
    parse_tensor(&text)
}

fn read_vector_arg(arg: &str) -> Result<Vec<f64>> {
    let path = Path::new(arg);
    if path.is_file() {
        parse_vector(&std::fs::read_to_string(path)?)
    } else {
        parse_vector(arg)
    }
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Classify {
            input,
            samples,
            seed,
            tol,
            output,
        } => {
            let t = read_tensor(input)?;
            let mut kv = classify(&t).to_key_values();
            kv.push("nonsingular_h", classify::is_nonsingular_h(&t, *tol).as_str());
            let witness = classify::p_falsify(&t, *samples, *seed);
            kv.extend(report::p_search(witness.as_ref(), *samples));
            emit(&kv.render(), output.as_deref(), out)
        }
        Command::Scale { input, strict, output } => {
            let t = read_tensor(input)?;
            let opts = if *strict {
                ScalingOptions::strict()
            } else {
                ScalingOptions::default()
            };
            let w = transform::nekrasov_scaling_with(&t, &opts)?;
            let scaled = t.scale_columns(&w)?;
            let r = classify(&t);
            let guarantee = if r.is_nekrasov_z && r.positive_diagonal && transform::dominance_guaranteed_order(&t) {
                "theorem"
            } else {
                "outside theorem hypotheses"
            };
            let mut kv = KeyValues::new();
            kv.push("guarantee", guarantee)
                .push("scaled_is_z", classify::is_z(&scaled))
                .push("scaled_is_dd", classify::is_diag_dominant(&scaled, false))
                .push("scaled_is_sdd", classify::is_diag_dominant(&scaled, true));
            let mut text = write_scaling(&w);
            text.push_str(&kv.render());
            match output {
                Some(p) => std::fs::write(p, write_tensor(&scaled))?,
                None => text.push_str(&write_tensor(&scaled)),
            }
            out.write_all(text.as_bytes())?;
            Ok(())
        }
        Command::Decompose { input, output } => {
            let t = read_tensor(input)?;
            let d = transform::decompose_plus(&t);
            let verified = transform::verify_decomposition(&d, &t)?;
            let mut kv = KeyValues::new();
            kv.reals("r_plus", &d.r_plus).push("verified", verified);
            let blocks = format!(
                "# B+ then C\n{}{}",
                write_tensor(&d.b_plus),
                write_tensor(&d.c)
            );
            let mut text = kv.render();
            match output {
                Some(p) => std::fs::write(p, blocks)?,
                None => text.push_str(&blocks),
            }
            out.write_all(text.as_bytes())?;
            Ok(())
        }
        Command::Solve {
            input,
            q,
            method,
            tol,
            max_iter,
            step,
            x0,
            output,
        } => {
            let t = read_tensor(input)?;
            let q = read_vector_arg(q)?;
            let x0 = x0.as_deref().map(parse_vector).transpose()?;
            let inst = TcpInstance::new(t, q)?;
            let sol = match method {
                Method::Newton => tcp::solve_newton(
                    &inst,
                    &NewtonOptions {
                        tol: *tol,
                        max_iter: max_iter.unwrap_or(tcp::DEFAULT_NEWTON_MAX_ITER),
                    },
                    x0.as_deref(),
                )?,
                Method::Fixed => tcp::solve_fixed_point(
                    &inst,
                    &FixedPointOptions {
                        step: *step,
                        tol: *tol,
                        max_iter: max_iter.unwrap_or(tcp::DEFAULT_FIXED_POINT_MAX_ITER),
                    },
                    x0.as_deref(),
                )?,
            };
            emit(&sol.to_key_values().render(), output.as_deref(), out)
        }
        Command::Spectral {
            input,
            tol,
            max_iter,
            output,
        } => {
            let t = read_tensor(input)?;
            let e = classify::spectral_radius_nonneg(&t, *tol, *max_iter)?;
            emit(&e.to_key_values().render(), output.as_deref(), out)
        }
        Command::Generate {
            class,
            order,
            dim,
            seed,
            density,
            output,
        } => {
            let spec = GeneratorSpec::new(*order, *dim, (*class).into(), *seed).with_density(*density);
            let t = generate(&spec)?;
            let text = format!("{}\n{}", spec.header(), write_tensor(&t));
            emit(&text, output.as_deref(), out)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        1
    }
}
