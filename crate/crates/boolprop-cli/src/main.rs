use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use boolprop::io::{brute_force_marginals, generate, parse_jt, parse_model, write_jt, write_model, GenKind, GenParams, IoError};
use boolprop::junction::{construct, root_tree, validate, Factorisation, JunctionTree, ModelError, RootStrategy, RootedTree};
use boolprop::propagation::{compute_marginals, propagate, Engine, MarginalResult, MarginalStyle};
use boolprop::{OpCounters, PotentialError};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "boolprop", version, about = "Exact marginals of boolean factored distributions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single-variable marginals by junction-tree propagation.
    Marginals {
        #[arg(long, value_enum)]
        engine: EngineArg,
        #[arg(long)]
        input: PathBuf,
        /// Junction tree file; built by min-fill when absent.
        #[arg(long)]
        jt: Option<PathBuf>,
        /// 1-based root vertex, or `max` for the largest vertex.
        #[arg(long, default_value = "max")]
        root: String,
        #[arg(long)]
        stats: bool,
        #[arg(long, value_enum, default_value_t = StyleArg::Stream)]
        marginal_style: StyleArg,
    },
    /// Marginals by enumerating every labelling.
    Oracle {
        #[arg(long)]
        input: PathBuf,
    },
    /// Checks a junction tree against a model.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        jt: PathBuf,
    },
    /// Writes a synthetic model.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the junction tree of star and chain instances.
        #[arg(long)]
        jt_out: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        center: usize,
        #[arg(long, default_value_t = 2)]
        sep: usize,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, default_value_t = 8)]
        len: usize,
        #[arg(long, default_value_t = 3)]
        scope: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        factors: usize,
        #[arg(long, default_value_t = 4)]
        max_scope: usize,
        #[arg(long, default_value_t = 0.0)]
        zero_prob: f64,
    },
    /// Runs one propagation and reports counters and timing.
    Bench {
        #[arg(long, value_enum)]
        engine: EngineArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        jt: Option<PathBuf>,
        #[arg(long, default_value = "max")]
        root: String,
        /// Accepted for symmetry with `marginals`; bench always reports.
        #[arg(long)]
        stats: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Ss,
    Hugin,
    Arch1,
    #[value(name = "arch1-fast")]
    Arch1Fast,
    Arch2,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Ss => Engine::ShaferShenoy,
            EngineArg::Hugin => Engine::Hugin,
            EngineArg::Arch1 => Engine::Arch1Simple,
            EngineArg::Arch1Fast => Engine::Arch1Cached,
            EngineArg::Arch2 => Engine::Arch2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Stream,
    Dual,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Star,
    Chain,
    Random,
}

enum Failure {
    Input(String),
    Inconsistent(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Potential(p) => p.into(),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<PotentialError> for Failure {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::ZeroMass => Failure::Inconsistent(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let mut out = std::io::stdout().lock();
    match run(cli.cmd, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Inconsistent(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd, out: &mut impl std::io::Write) -> Result<(), Failure> {
    match cmd {
        Cmd::Marginals { engine, input, jt, root, stats, marginal_style } => {
            let f = read_model(&input)?;
            let rt = rooted(&f, jt.as_deref(), &root)?;
            let run = propagate(&rt, &f, engine.into())?;
            let style = match marginal_style {
                StyleArg::Stream => MarginalStyle::Stream,
                StyleArg::Dual => MarginalStyle::Dual,
            };
            let result = compute_marginals(&rt, &f, &run.messages, style)?;
            print_marginals(out, &result)?;
            if stats {
                let mut total = run.total();
                total += &result.counters;
                print_stats(&total, &[]);
            }
        }
        Cmd::Oracle { input } => {
            let f = read_model(&input)?;
            print_marginals(out, &brute_force_marginals(&f)?)?;
        }
        Cmd::Validate { input, jt } => {
            let f = read_model(&input)?;
            let jt = read_jt(&jt, &f)?;
            let violations = validate(&jt, &f);
            if !violations.is_empty() {
                let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                return Err(Failure::Input(text.join("\n")));
            }
            writeln!(out, "ok: {} vertices, width {}", jt.vertices.len(), jt.width()).map_err(io_fail)?;
        }
        Cmd::Gen { kind, seed, out: path, jt_out, center, sep, degree, len, scope, n, factors, max_scope, zero_prob } => {
            let kind = match kind {
                KindArg::Star => GenKind::Star { center, sep, degree },
                KindArg::Chain => GenKind::Chain { len, scope },
                KindArg::Random => GenKind::Random { n, factors, max_scope },
            };
            let (f, jt) = generate(&GenParams { kind, seed, zero_prob })?;
            write_file(&path, &write_model(&f))?;
            if let Some(jt_path) = jt_out {
                let jt = match jt {
                    Some(jt) => jt,
                    None => construct(&f)?,
                };
                write_file(&jt_path, &write_jt(&jt))?;
            }
        }
        Cmd::Bench { engine, input, jt, root, stats: _ } => {
            let f = read_model(&input)?;
            let rt = rooted(&f, jt.as_deref(), &root)?;
            let start = Instant::now();
            let run = propagate(&rt, &f, engine.into())?;
            let elapsed = start.elapsed().as_micros() as u64;
            let busiest = run.counters.iter().max_by_key(|c| c.multiplications + c.divisions).cloned().unwrap_or_default();
            print_stats(&run.total(), &[("busiest_vertex_multiplications", busiest.multiplications), ("elapsed_us", elapsed)]);
        }
    }
    Ok(())
}

fn io_fail(e: std::io::Error) -> Failure {
    Failure::Input(e.to_string())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<Factorisation, Failure> {
    parse_model(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_jt(path: &Path, f: &Factorisation) -> Result<JunctionTree, Failure> {
    parse_jt(&read_text(path)?, f).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn rooted(f: &Factorisation, jt: Option<&Path>, root: &str) -> Result<RootedTree, Failure> {
    let jt = match jt {
        Some(path) => {
            let jt = read_jt(path, f)?;
            if let Some(v) = validate(&jt, f).first() {
                return Err(Failure::Input(format!("{}: {v}", path.display())));
            }
            jt
        }
        None => construct(f)?,
    };
    let strategy = match root {
        "max" => RootStrategy::MaxCardinality,
        s => match s.parse::<usize>() {
            Ok(i) if i >= 1 => RootStrategy::Index(i - 1),
            _ => return Err(Failure::Input(format!("--root expects a 1-based vertex or `max`, got `{s}`"))),
        },
    };
    Ok(root_tree(&jt, strategy)?)
}

fn print_marginals(out: &mut impl std::io::Write, r: &MarginalResult) -> Result<(), Failure> {
    for m in &r.marginals {
        writeln!(out, "{} {} {}", m.var, sig12(m.p0), sig12(m.p1)).map_err(io_fail)?;
    }
    Ok(())
}

fn print_stats(c: &OpCounters, extra: &[(&str, u64)]) {
    for (name, v) in c.fields().iter().chain(extra) {
        eprintln!("STAT {name} {v}");
    }
}

/// `x` to 12 significant digits with trailing zeros removed, like `%.12g`.
fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..12).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let s = format!("{x:.*}", (11 - exp) as usize);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
