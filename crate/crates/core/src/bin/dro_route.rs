//! Umbrella CLI: dataset generation, training, evaluation, classical
//! solving, and benchmark runs.
//!
//! Exit codes: 0 success, 2 parse error, 3 config error, 4 numerical abort.

use clap::{Parser, Subcommand, ValueEnum};
use droroute_core::bench::{
    emit_report, evaluate, evaluate_benchmark, load_best_known, parse_tsplib, to_model_input,
    EvalConfig, ReportFormat,
};
use droroute_core::instances::{
    build_group_dataset, load_dataset_dir, read_records, write_group_file, DistributionKind,
    GroupSpec, VrpInstance,
};
use droroute_core::policy::PolicyParams;
use droroute_core::solvers;
use droroute_core::tour::Tour;
use droroute_core::trainer::{log_header, log_row, TrainConfig, TrainMode, Trainer};
use droroute_core::{Error, Result};
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "dro-route",
    about = "Train and evaluate group-robust neural routing policies for TSP/CVRP"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a group file of instances from one spatial distribution.
    Gen {
        /// uniform|explosion|implosion|expansion|cluster|grid
        #[arg(long)]
        kind: String,
        /// Nodes per instance.
        #[arg(long)]
        n: usize,
        /// Instances to generate.
        #[arg(long)]
        count: usize,
        /// Group seed (overridden by DROROUTE_SEED).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; the file is named <kind>_<n>_<seed>.txt.
        #[arg(long)]
        out: PathBuf,
        /// Attach CVRP attributes (depot, demands, capacity).
        #[arg(long)]
        cvrp: bool,
        /// Vehicle capacity; defaults to 40 for n <= 50, else 50.
        #[arg(long)]
        capacity: Option<u32>,
    },
    /// Train a policy on a dataset directory of group files.
    Train {
        /// key = value config file covering the training parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory (one group file per group).
        #[arg(long)]
        data: PathBuf,
        /// Output directory for checkpoints and the training log.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's mode: dro|erm|supervised.
        #[arg(long)]
        mode: Option<String>,
        /// Resume from a checkpoint written by an earlier run (the stored
        /// config is authoritative).
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset directory.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Greedy starts per instance (0 = min(n, 8)).
        #[arg(long, default_value_t = 0)]
        starts: usize,
        /// Disable the x8 augmentation.
        #[arg(long)]
        no_augment: bool,
    },
    /// Run a classical solver on the first record of an instance file.
    Solve {
        #[arg(long, value_enum)]
        algo: Algo,
        /// Dataset record file or TSPLIB file.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Evaluate a checkpoint on TSPLIB/CVRPLIB files.
    Bench {
        #[arg(long)]
        checkpoint: PathBuf,
        /// TSPLIB files to evaluate.
        #[arg(long = "in", num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Sidecar table of best-known objectives (name value per line).
        #[arg(long)]
        best_known: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        starts: usize,
        #[arg(long)]
        no_augment: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    /// Exact Held-Karp (TSP, n <= 13).
    Hk,
    /// Nearest-neighbor + 2-opt (TSP).
    Nn2opt,
    /// Savings construction + intra-route 2-opt (CVRP).
    Cvrpref,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::UnsupportedFormat(_) => 2,
                Error::Config(_) | Error::Parameter(_) | Error::Dataset(_) => 3,
                Error::NumericalAbort(_) => 4,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

fn seed_override(seed: u64) -> Result<u64> {
    match std::env::var("DROROUTE_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("bad DROROUTE_SEED '{v}'"))),
        Err(_) => Ok(seed),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            kind,
            n,
            count,
            seed,
            out,
            cvrp,
            capacity,
        } => {
            let seed = seed_override(seed)?;
            let kind = DistributionKind::with_defaults(&kind, n)?;
            let capacity = if cvrp {
                Some(capacity.unwrap_or(if n <= 50 { 40 } else { 50 }))
            } else {
                capacity
            };
            let dataset = build_group_dataset(&[GroupSpec {
                kind: kind.clone(),
                count,
                n,
                seed,
                capacity,
            }])?;
            let path = write_group_file(&out, &kind, n, seed, &dataset.groups()[0].instances)?;
            println!("wrote {count} instances to {}", path.display());
            Ok(())
        }
        Command::Train {
            config,
            data,
            out,
            mode,
            resume,
        } => train(config, &data, &out, mode, resume),
        Command::Eval {
            checkpoint,
            data,
            format,
            out,
            starts,
            no_augment,
        } => {
            let params = PolicyParams::load(&checkpoint)?;
            let dataset = load_dataset_dir(&data)?;
            let metrics = evaluate(
                &params,
                &dataset,
                &EvalConfig {
                    starts,
                    augment: !no_augment,
                },
            )?;
            let text = emit_report(
                &metrics,
                match format {
                    Format::Csv => ReportFormat::Csv,
                    Format::Markdown => ReportFormat::Markdown,
                },
            );
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Solve { algo, input } => solve(algo, &input),
        Command::Bench {
            checkpoint,
            inputs,
            best_known,
            starts,
            no_augment,
        } => {
            let params = PolicyParams::load(&checkpoint)?;
            let table = match best_known {
                Some(path) => Some(load_best_known(&path)?),
                None => None,
            };
            let mut benches = Vec::new();
            for path in &inputs {
                let mut bench = parse_tsplib(&std::fs::read_to_string(path)?)?;
                if let Some(t) = &table {
                    bench.best_known = t.get(&bench.name).copied();
                }
                benches.push(bench);
            }
            let rows = evaluate_benchmark(
                &params,
                &benches,
                &EvalConfig {
                    starts,
                    augment: !no_augment,
                },
            )?;
            println!("name,n,model_obj,reference_obj,gap,reference,time_s");
            for r in &rows {
                println!(
                    "{},{},{},{},{:.4}%,{},{:.3}",
                    r.name,
                    r.n,
                    r.model_obj,
                    r.reference_obj,
                    r.gap * 100.0,
                    r.reference_label,
                    r.time_s
                );
            }
            Ok(())
        }
    }
}

fn train(
    config: Option<PathBuf>,
    data: &Path,
    out: &Path,
    mode: Option<String>,
    resume: Option<PathBuf>,
) -> Result<()> {
    let dataset = load_dataset_dir(data)?;
    std::fs::create_dir_all(out)?;
    let mut trainer = match &resume {
        Some(ckpt) => Trainer::resume(ckpt, &dataset)?,
        None => {
            let config = config.ok_or_else(|| {
                Error::Config("--config is required unless resuming".into())
            })?;
            let text = std::fs::read_to_string(config)?;
            let mut cfg = TrainConfig::parse(&text)?;
            if let Some(mode) = mode {
                cfg.mode = TrainMode::parse(&mode)?;
            }
            cfg.seed = seed_override(cfg.seed)?;
            Trainer::new(cfg, &dataset)?
        }
    };
    let log_path = out.join("train_log.csv");
    let append = resume.is_some() && log_path.exists();
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)?;
    if !append {
        writeln!(log, "{}", log_header(dataset.group_count()))?;
    }
    let interval = trainer.config().checkpoint_interval;
    let result: Result<()> = (|| {
        while !trainer.finished() {
            let rec = trainer.outer_step()?;
            writeln!(log, "{}", log_row(&rec))?;
            if interval > 0 && rec.t % interval == 0 {
                trainer.save(&out.join(format!("checkpoint_{}.ckpt", rec.t)))?;
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => {
            let final_path = out.join("final.ckpt");
            trainer.save(&final_path)?;
            println!(
                "trained to step {}; wrote {}",
                trainer.state().outer_step,
                final_path.display()
            );
            Ok(())
        }
        Err(e @ Error::NumericalAbort(_)) => {
            let abort_path = out.join("abort.ckpt");
            trainer.save(&abort_path)?;
            eprintln!("aborted; state saved to {}", abort_path.display());
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn solve(algo: Algo, input: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input)?;
    // Dataset record files start with a TSP/CVRP header; anything else is
    // treated as TSPLIB (objective reported in original integer units).
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.starts_with("TSP ") || first.starts_with("CVRP ") {
        let records = read_records(std::io::Cursor::new(&text))?;
        let inst = records
            .into_iter()
            .next()
            .ok_or_else(|| Error::Parse("empty instance file".into()))?;
        let tour = solve_instance(algo, &inst)?;
        let len = solvers::tour_length(&inst, &tour)?;
        println!("length {len}");
        print_tour(&tour);
    } else {
        let bench = parse_tsplib(&text)?;
        let (inst, scale) = to_model_input(&bench)?;
        let tour = solve_instance(algo, &inst)?;
        println!("length {}", scale.integer_tour_length(&tour));
        print_tour(&tour);
    }
    Ok(())
}

fn solve_instance(algo: Algo, inst: &VrpInstance) -> Result<Tour> {
    match (algo, inst) {
        (Algo::Hk, VrpInstance::Tsp(tsp)) => solvers::held_karp(tsp),
        (Algo::Nn2opt, VrpInstance::Tsp(tsp)) => {
            solvers::two_opt(tsp, &solvers::nearest_neighbor(tsp, 0)?)
        }
        (Algo::Cvrpref, VrpInstance::Cvrp(cvrp)) => solvers::cvrp_reference(cvrp),
        (Algo::Cvrpref, VrpInstance::Tsp(_)) => {
            Err(Error::Parameter("cvrpref needs a CVRP instance".into()))
        }
        (_, VrpInstance::Cvrp(_)) => {
            Err(Error::Parameter("hk/nn2opt need a TSP instance".into()))
        }
    }
}

fn print_tour(tour: &Tour) {
    match tour {
        Tour::Tsp { order } => {
            let s: Vec<String> = order.iter().map(|v| v.to_string()).collect();
            println!("tour {}", s.join(" "));
        }
        Tour::Cvrp { routes } => {
            for (i, route) in routes.iter().enumerate() {
                let s: Vec<String> = route.iter().map(|v| v.to_string()).collect();
                println!("route {} : {}", i, s.join(" "));
            }
        }
    }
}
