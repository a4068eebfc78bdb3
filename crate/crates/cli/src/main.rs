//! Command-line front end: assembler, disassembler, static validator,
//! simulator runner/tracer, and the benchmark comparison harness.
//!
//! Exit codes: 0 success, 1 diagnostics or result mismatch, 2 usage error,
//! 3 simulation ended in a trap. Stdout carries only contractual output
//! (disassembly, memory dumps, trace records, digests, report paths);
//! everything else goes to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use refab_core::asm::{assemble, disassemble};
use refab_core::benchmarks::harness::{
    self, run_cnn_comparison, run_sha3_comparison, run_sift_comparison, run_swe_comparison,
    CnnProblem, Comparison, Sha3Problem,
};
use refab_core::benchmarks::sift::SiftProblem;
use refab_core::benchmarks::swe::RiemannProblem;
use refab_core::controller::{ControllerConfig, Machine, RunOutcome};
use refab_core::fabric::FabricConfig;
use refab_core::isa::{validate_program, ProgramImage};

const EXIT_DIAG: u8 = 1;
const EXIT_TRAP: u8 = 3;

#[derive(Parser)]
#[command(name = "refab", version, about = "Reconfigurable-fabric microcode toolchain")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble microcode text into a program image.
    Asm {
        /// Input assembly file.
        input: PathBuf,
        /// Output image file.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Disassemble a program image to stdout.
    Disasm {
        /// Input image file.
        input: PathBuf,
    },
    /// Statically validate a program image.
    Validate {
        /// Input image file.
        input: PathBuf,
    },
    /// Execute a program image.
    Run(RunArgs),
    /// Execute a program image, printing per-cycle trace records.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        /// Trace record format.
        #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
        format: TraceFormat,
    },
    /// Run a benchmark app against its software oracle and report.
    Bench {
        /// Benchmark application.
        app: App,
        /// Problem descriptor (JSON; raw message bytes for sha3).
        #[arg(long)]
        input: PathBuf,
        /// Fabric configuration (TOML).
        #[arg(long, env = "REFAB_FABRIC")]
        fabric: Option<PathBuf>,
        /// Number of identical comparison runs.
        #[arg(long, default_value_t = 1)]
        repeat: u32,
        /// Report output path (.json or .csv); stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Worker threads for repeated runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Input image file.
    image: PathBuf,
    /// Fabric configuration (TOML).
    #[arg(long, env = "REFAB_FABRIC")]
    fabric: Option<PathBuf>,
    /// Stream payload file, as slot:channel:path (little-endian u32 words).
    #[arg(long = "stream", value_name = "SLOT:CHAN:FILE")]
    streams: Vec<StreamSpec>,
    /// Dump LEN memory words starting at ADDR after the run.
    #[arg(long = "mem-dump", num_args = 2, value_names = ["ADDR", "LEN"])]
    mem_dump: Option<Vec<u32>>,
    /// Cycle safety limit.
    #[arg(long)]
    max_cycles: Option<u64>,
    /// Consecutive-stall trap threshold.
    #[arg(long)]
    stall_threshold: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum App {
    Sift,
    Swe,
    Cnn,
    Sha3,
}

#[derive(Clone)]
struct StreamSpec {
    slot: usize,
    channel: usize,
    path: PathBuf,
}

impl FromStr for StreamSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.splitn(3, ':');
        let (Some(slot), Some(chan), Some(path)) = (it.next(), it.next(), it.next()) else {
            return Err("expected SLOT:CHAN:FILE".into());
        };
        let slot: usize = slot.parse().map_err(|_| "slot must be 0..=4".to_string())?;
        let channel: usize = chan.parse().map_err(|_| "channel must be 0..=3".to_string())?;
        if slot > 4 || channel > 3 {
            return Err("slot must be 0..=4 and channel 0..=3".into());
        }
        Ok(StreamSpec {
            slot,
            channel,
            path: PathBuf::from(path),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("refab: error: {e:#}");
            ExitCode::from(EXIT_DIAG)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Asm { input, output } => cmd_asm(&input, &output),
        Cmd::Disasm { input } => cmd_disasm(&input),
        Cmd::Validate { input } => cmd_validate(&input),
        Cmd::Run(args) => cmd_run(&args, None),
        Cmd::Trace { run, format } => cmd_run(&run, Some(format)),
        Cmd::Bench {
            app,
            input,
            fabric,
            repeat,
            report,
            jobs,
        } => cmd_bench(app, &input, fabric.as_deref(), repeat, report.as_deref(), jobs),
    }
}

fn load_image(path: &Path) -> Result<ProgramImage> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    ProgramImage::from_bytes(&data).with_context(|| format!("parsing image {}", path.display()))
}

fn load_fabric(path: Option<&Path>) -> Result<FabricConfig> {
    match path {
        None => Ok(FabricConfig::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            FabricConfig::from_toml(&text)
                .with_context(|| format!("parsing fabric config {}", p.display()))
        }
    }
}

fn cmd_asm(input: &Path, output: &Path) -> Result<ExitCode> {
    let src =
        fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let file = input.display();
    match assemble(&src) {
        Err(diags) => {
            for d in diags {
                eprintln!("{file}:{d}");
            }
            Ok(ExitCode::from(EXIT_DIAG))
        }
        Ok(out) => {
            for d in &out.warnings {
                eprintln!("{file}:{d}");
            }
            fs::write(output, out.image.to_bytes())
                .with_context(|| format!("writing {}", output.display()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_disasm(input: &Path) -> Result<ExitCode> {
    let image = load_image(input)?;
    let text = disassemble(&image)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(input: &Path) -> Result<ExitCode> {
    let image = load_image(input)?;
    let diags = validate_program(&image);
    if diags.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for d in &diags {
        eprintln!("{}: error: {d}", input.display());
    }
    Ok(ExitCode::from(EXIT_DIAG))
}

fn read_stream_words(path: &Path) -> Result<Vec<u32>> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if data.len() % 4 != 0 {
        bail!(
            "stream file {} length {} is not a multiple of 4",
            path.display(),
            data.len()
        );
    }
    Ok(data
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn cmd_run(args: &RunArgs, trace: Option<TraceFormat>) -> Result<ExitCode> {
    let image = load_image(&args.image)?;
    let fabric_cfg = load_fabric(args.fabric.as_deref())?;
    let mut ctrl = ControllerConfig {
        stall_threshold: fabric_cfg.stall_threshold,
        ..ControllerConfig::default()
    };
    if let Some(n) = args.max_cycles {
        ctrl.max_cycles = n;
    }
    if let Some(n) = args.stall_threshold {
        ctrl.stall_threshold = n;
    }
    let mut m = Machine::boot(&image, ctrl, &fabric_cfg)
        .map_err(|e| anyhow::anyhow!("machine setup: {e}"))?;
    for s in &args.streams {
        for w in read_stream_words(&s.path)? {
            m.fabric.stream_push(s.slot, s.channel, w);
        }
    }

    let outcome: RunOutcome = match trace {
        None => m.run()?,
        Some(TraceFormat::Csv) => {
            println!("{}", refab_core::controller::TraceRecord::CSV_HEADER);
            m.run_with_trace(|r| println!("{}", r.to_csv_row()))?
        }
        Some(TraceFormat::Json) => m.run_with_trace(|r| {
            println!("{}", serde_json::to_string(r).expect("trace serialization"))
        })?,
    };

    eprintln!(
        "cycles={} retired={} stalled={}",
        outcome.cycles, outcome.retired, outcome.stalled
    );
    if let Some(dump) = &args.mem_dump {
        let (addr, len) = (dump[0], dump[1]);
        for a in addr..addr.saturating_add(len) {
            let w = m.fabric.mem_read(a).map_err(|e| anyhow::anyhow!("{e}"))?;
            println!("{a:#010x}: {w:#010x}");
        }
    }
    if let Some(trap) = &outcome.trap {
        eprintln!(
            "trap: {} at cycle {}, pc {}",
            trap.kind.name(),
            trap.cycle,
            trap.pc
        );
        return Ok(ExitCode::from(EXIT_TRAP));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing problem {}", path.display()))
}

fn cmd_bench(
    app: App,
    input: &Path,
    fabric: Option<&Path>,
    repeat: u32,
    report: Option<&Path>,
    jobs: usize,
) -> Result<ExitCode> {
    if repeat == 0 || jobs == 0 {
        bail!("--repeat and --jobs must be at least 1");
    }
    let fabric_cfg = load_fabric(fabric)?;

    enum Problem {
        Sift(SiftProblem),
        Swe(RiemannProblem),
        Cnn(CnnProblem),
        Sha3(Sha3Problem),
    }
    let problem = match app {
        App::Sift => Problem::Sift(parse_json(input)?),
        App::Swe => Problem::Swe(parse_json(input)?),
        App::Cnn => Problem::Cnn(parse_json(input)?),
        App::Sha3 => Problem::Sha3(Sha3Problem {
            message: fs::read(input).with_context(|| format!("reading {}", input.display()))?,
        }),
    };
    let run_one = |p: &Problem| -> Result<Comparison> {
        let c = match p {
            Problem::Sift(p) => run_sift_comparison(p, &fabric_cfg)?,
            Problem::Swe(p) => run_swe_comparison(p, &fabric_cfg)?,
            Problem::Cnn(p) => run_cnn_comparison(p, &fabric_cfg)?,
            Problem::Sha3(p) => run_sha3_comparison(p, &fabric_cfg)?,
        };
        Ok(c)
    };

    let results: Vec<Comparison> = if jobs <= 1 || repeat == 1 {
        (0..repeat).map(|_| run_one(&problem)).collect::<Result<_>>()?
    } else {
        // identical independent runs; split the repeat count across threads
        std::thread::scope(|scope| -> Result<Vec<Comparison>> {
            let mut handles = Vec::new();
            for t in 0..jobs {
                let share = (repeat as usize + jobs - 1 - t) / jobs;
                let problem = &problem;
                let run = &run_one;
                handles.push(scope.spawn(move || -> Result<Vec<Comparison>> {
                    (0..share).map(|_| run(problem)).collect()
                }));
            }
            let mut all = Vec::new();
            for h in handles {
                all.extend(h.join().expect("bench worker panicked")?);
            }
            Ok(all)
        })?
    };

    if let Problem::Sha3(p) = &problem {
        println!("{}", harness::sha3_digest_hex(p, &fabric_cfg)?);
    }
    let is_csv = report
        .and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let body = if is_csv {
        harness::report_csv(&results)
    } else {
        harness::report_json(&results)
    };
    match report {
        Some(path) => {
            fs::write(path, &body).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
        }
        None => print!("{body}"),
    }
    let all_matched = results.iter().all(|r| r.matched);
    if !all_matched {
        eprintln!("mismatch: {} of {} runs failed",
            results.iter().filter(|r| !r.matched).count(),
            results.len()
        );
        return Ok(ExitCode::from(EXIT_DIAG));
    }
    Ok(ExitCode::SUCCESS)
}
