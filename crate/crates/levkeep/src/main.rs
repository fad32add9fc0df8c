//! Command-line front end: optimize AIGER files, run benchmark sweeps,
//! check equivalence, and generate test circuits.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levkeep::aiger::{self, Symbols};
use levkeep::cut::CutParams;
use levkeep::flow::{optimize, EngineKind, FlowParams, OperatorKind};
use levkeep::generators;
use levkeep::report;
use levkeep::verify;
use levkeep::{AigGraph, Error};

#[derive(Parser)]
#[command(name = "levkeep", version, about = "Level-bounded AIG optimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize an AIGER file with one engine and operator.
    Optimize(OptimizeArgs),
    /// Sweep generated circuits over engines and print CSV rows.
    Bench(BenchArgs),
    /// Check two AIGER files for functional equivalence by simulation.
    Verify(VerifyArgs),
    /// Generate a benchmark circuit and write it as AIGER.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Inclm,
    Pqlm,
    Boundlm,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Inclm => EngineKind::IncLm,
            EngineArg::Pqlm => EngineKind::PqLm,
            EngineArg::Boundlm => EngineKind::BoundLm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Refactor,
    Perturb,
}

impl From<OpArg> for OperatorKind {
    fn from(o: OpArg) -> Self {
        match o {
            OpArg::Refactor => OperatorKind::Refactor,
            OpArg::Perturb => OperatorKind::Perturb,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CircuitArg {
    Adder,
    Multiplier,
    Sorter,
    Random,
}

impl CircuitArg {
    fn name(self) -> &'static str {
        match self {
            CircuitArg::Adder => "adder",
            CircuitArg::Multiplier => "multiplier",
            CircuitArg::Sorter => "sorter",
            CircuitArg::Random => "random",
        }
    }

    fn build(self, size: u32, seed: u64, inputs: u32) -> Result<AigGraph, Error> {
        match self {
            CircuitArg::Adder => Ok(generators::gen_adder(size)),
            CircuitArg::Multiplier => Ok(generators::gen_multiplier(size)),
            CircuitArg::Sorter => {
                if !size.is_power_of_two() {
                    return Err(Error::Invalid(format!(
                        "sorter width must be a power of two, got {size}"
                    )));
                }
                Ok(generators::gen_sorter(size))
            }
            CircuitArg::Random => Ok(generators::gen_random(inputs, size, seed)),
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    /// Input AIGER file (.aag or .aig).
    input: PathBuf,
    /// Output AIGER file; a .aag extension selects ASCII.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "boundlm")]
    engine: EngineArg,
    #[arg(long = "op", value_enum, default_value = "refactor")]
    op: OpArg,
    /// Maximum cut leaves (2..=6).
    #[arg(short = 'k', long, default_value_t = 6)]
    cut_leaves: u32,
    /// Also accept zero-gain refactors that lower the site's level.
    #[arg(short = 'z', long)]
    zero_gain: bool,
    /// Level budget; defaults to the input's depth.
    #[arg(long)]
    lmax: Option<u32>,
    /// Seed for perturb decisions.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Print the full statistics block.
    #[arg(long)]
    stats: bool,
    /// Print a CSV row (with header) instead of prose.
    #[arg(long)]
    csv: bool,
    /// Re-simulate input against output and fail on mismatch.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "multiplier")]
    circuit: CircuitArg,
    /// Circuit sizes to sweep.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    sizes: Vec<u32>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "inclm,pqlm,boundlm")]
    engines: Vec<EngineArg>,
    #[arg(long = "op", value_enum, default_value = "refactor")]
    op: OpArg,
    /// Repetitions per configuration; each gets a distinct seed.
    #[arg(long, default_value_t = 1)]
    repeat: u32,
    #[arg(short = 'z', long)]
    zero_gain: bool,
    #[arg(long)]
    lmax: Option<u32>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Inputs for the random circuit kind.
    #[arg(long, default_value_t = 12)]
    inputs: u32,
}

#[derive(Args)]
struct VerifyArgs {
    a: PathBuf,
    b: PathBuf,
    /// Random patterns when the circuit has more than 16 inputs.
    #[arg(long, default_value_t = 4096)]
    patterns: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    circuit: CircuitArg,
    /// Bits for adder/multiplier, width for sorter, AND count for random.
    size: u32,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Inputs for the random circuit kind.
    #[arg(long, default_value_t = 12)]
    inputs: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Optimize(a) => cmd_optimize(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Gen(a) => cmd_gen(a),
    }
}

fn flow_params(
    engine: EngineArg,
    op: OpArg,
    cut_leaves: u32,
    zero_gain: bool,
    lmax: Option<u32>,
    seed: u64,
) -> FlowParams {
    let mut p = FlowParams::new(engine.into(), op.into());
    p.cut = CutParams::with_max_leaves(cut_leaves as usize);
    p.zero_gain = zero_gain;
    p.lmax = lmax;
    p.seed = seed;
    p
}

fn cmd_optimize(a: OptimizeArgs) -> Result<ExitCode, Error> {
    let (mut g, syms) = aiger::read_aiger_file(&a.input)?;
    let before = if a.verify { Some(g.clone()) } else { None };
    let params = flow_params(a.engine, a.op, a.cut_leaves, a.zero_gain, a.lmax, a.seed);
    let rep = optimize(&mut g, &params)?;

    let name = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    if a.csv {
        println!("{}", report::csv_header());
        println!("{}", report::csv_row(&name, &rep));
    } else if a.stats {
        print!("{}", report::human_summary(&name, &rep));
    } else {
        println!(
            "{name}: {} -> {} ANDs, level {} -> {} (budget {}), {} accepted",
            rep.initial_ands,
            rep.final_ands,
            rep.initial_level,
            rep.final_level,
            rep.lmax,
            rep.accepted
        );
    }

    if let Some(before) = before {
        let ok = verify::equivalent(&before, &g, 4096, a.seed)?;
        if !ok {
            eprintln!("verification FAILED: output is not equivalent to input");
            return Ok(ExitCode::from(2));
        }
        println!("verified: output equivalent to input");
    }
    if let Some(out) = a.output {
        aiger::write_aiger_file(&out, &g, &syms)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode, Error> {
    struct Job {
        circuit: CircuitArg,
        size: u32,
        engine: EngineArg,
        op: OpArg,
        zero_gain: bool,
        lmax: Option<u32>,
        seed: u64,
        inputs: u32,
    }

    let mut jobs = Vec::new();
    for &size in &a.sizes {
        for &engine in &a.engines {
            for rep in 0..a.repeat {
                jobs.push(Job {
                    circuit: a.circuit,
                    size,
                    engine,
                    op: a.op,
                    zero_gain: a.zero_gain,
                    lmax: a.lmax,
                    seed: a.seed + u64::from(rep),
                    inputs: a.inputs,
                });
            }
        }
    }

    let run_job = |j: &Job| -> Result<String, Error> {
        let mut g = j.circuit.build(j.size, j.seed, j.inputs)?;
        let params = flow_params(j.engine, j.op, 6, j.zero_gain, j.lmax, j.seed);
        let rep = optimize(&mut g, &params)?;
        Ok(report::csv_row(&format!("{}{}", j.circuit.name(), j.size), &rep))
    };

    let threads: usize = std::env::var("LEVKEEP_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&t| t > 1)
        .unwrap_or(1);

    println!("{}", report::csv_header());
    if threads <= 1 {
        for j in &jobs {
            println!("{}", run_job(j)?);
        }
    } else {
        // Striped static schedule; results are reordered so the output is
        // identical to a serial run.
        let rows = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let jobs = &jobs;
                    let run_job = &run_job;
                    s.spawn(move || {
                        jobs.iter()
                            .enumerate()
                            .filter(|(i, _)| i % threads == t)
                            .map(|(i, j)| (i, run_job(j)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            let mut rows: Vec<Option<Result<String, Error>>> = Vec::new();
            rows.resize_with(jobs.len(), || None);
            for h in handles {
                for (i, r) in h.join().expect("bench worker panicked") {
                    rows[i] = Some(r);
                }
            }
            rows
        });
        for r in rows {
            println!("{}", r.expect("job not scheduled")?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode, Error> {
    let (ga, _) = aiger::read_aiger_file(&a.a)?;
    let (gb, _) = aiger::read_aiger_file(&a.b)?;
    let ok = verify::equivalent(&ga, &gb, a.patterns, a.seed)?;
    if ok {
        println!("equivalent");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("NOT equivalent");
        Ok(ExitCode::from(1))
    }
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode, Error> {
    let g = a.circuit.build(a.size, a.seed, a.inputs)?;
    aiger::write_aiger_file(&a.output, &g, &Symbols::default())?;
    println!(
        "{}{}: {} inputs, {} ANDs, {} outputs -> {}",
        a.circuit.name(),
        a.size,
        g.num_inputs(),
        g.alive_count(),
        g.outputs().len(),
        a.output.display()
    );
    Ok(ExitCode::SUCCESS)
}
