//! Command-line driver for generation, subsampling, splitting, and analysis.
//!
//! All randomness flows from one `--seed` flag; each consumer derives its
//! own sub-seed from a fixed label, so adding a consumer never perturbs the
//! streams of existing ones. Every run with identical flags and seed
//! produces byte-identical artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 split target
//! unreachable (the split file is still written, flagged on stderr).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dbca::compounds::PoolConfig;
use dbca::corpus::Corpus;
use dbca::dataset_io;
use dbca::error::Error;
use dbca::example::Example;
use dbca::gramgen::engine::Generator;
use dbca::metrics;
use dbca::rulesets::{builtin_mini_cfq, builtin_scan, RuleSet};
use dbca::splitter::{
    greedy_divergence_split, length_split, pattern_split, random_split, Split, SplitSide,
    SplitSpec, TargetDc,
};
use dbca::subsampler::subsample;

#[derive(Parser)]
#[command(name = "dbca", version, about = "Distribution-based compositionality assessment")]
struct Cli {
    /// Worker threads (default: DBCA_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a rule set.
    Generate {
        /// `scan`, `mini-cfq`, or a path to a rule set file.
        #[arg(long)]
        ruleset: String,
        /// Number of random examples; omit for exhaustive generation.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select a diverse subset by maximizing rule-distribution entropy.
    Subsample {
        #[arg(long = "in")]
        input: PathBuf,
        /// Number of examples to keep.
        #[arg(long)]
        target: usize,
        /// Complexity cap: examples above this level are dropped first.
        #[arg(long)]
        max_level: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Construct a train/validation/test split.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Compound divergence target for `target-dc` (omit to maximize).
        #[arg(long)]
        target_dc: Option<f64>,
        /// Atom divergence bound for `target-dc`.
        #[arg(long, default_value_t = 0.02)]
        max_da: f64,
        /// Length threshold for the length methods (train ≤ N < test).
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long, default_value_t = 0.4)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0.1)]
        val_fraction: f64,
        #[arg(long, default_value_t = 0.1)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report divergences and baseline statistics of a split.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, default_value_t = 7)]
        max_nodes: usize,
        #[arg(long, default_value_t = 50_000)]
        pool_cap: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Emit the complexity histogram and rule-frequency table as CSV.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Random,
    InputLength,
    OutputLength,
    InputPattern,
    OutputPattern,
    TargetDc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

/// Derive a labeled sub-seed (FNV-1a over the label, folded into the seed).
fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn load_ruleset(name: &str) -> Result<RuleSet, Error> {
    match name {
        "scan" => Ok(builtin_scan()),
        "mini-cfq" => Ok(builtin_mini_cfq()),
        path => RuleSet::parse(&std::fs::read_to_string(path)?),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("DBCA_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: config: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Generate { ruleset, count, seed, out } => {
            let ruleset = load_ruleset(&ruleset)?;
            let generator = Generator::new(&ruleset)?;
            let examples = match count {
                Some(n) => generator.generate_random(derive_seed(seed, "generate"), n)?,
                None => generator.generate_all()?,
            };
            dataset_io::write_dataset(&examples, &out)?;
            eprintln!("wrote {} examples", examples.len());
            Ok(0)
        }
        Command::Subsample { input, target, max_level, seed, out } => {
            let examples = dataset_io::read_dataset(&input)?;
            let corpus = Corpus::analyze(examples, PoolConfig::default())?;
            let ids = subsample(&corpus, target, max_level, derive_seed(seed, "subsample"))?;
            let mut kept: Vec<Example> = ids
                .into_iter()
                .map(|i| corpus.examples[i].clone())
                .collect();
            for (new_id, e) in kept.iter_mut().enumerate() {
                e.id = new_id;
            }
            dataset_io::write_dataset(&kept, &out)?;
            eprintln!("kept {} examples", kept.len());
            Ok(0)
        }
        Command::Split {
            input,
            method,
            target_dc,
            max_da,
            threshold,
            train_fraction,
            val_fraction,
            test_fraction,
            seed,
            out,
        } => {
            let examples = dataset_io::read_dataset(&input)?;
            let spec = SplitSpec {
                train_fraction,
                val_fraction,
                test_fraction,
                target_dc: match target_dc {
                    Some(v) => TargetDc::Value(v),
                    None => TargetDc::Max,
                },
                max_da,
                ..SplitSpec::default()
            };
            spec.validate()?;
            let seed = derive_seed(seed, "split");
            let need_threshold = || {
                threshold.ok_or_else(|| {
                    Error::Config("length methods require --threshold".into())
                })
            };
            let (split, flagged): (Split, bool) = match method {
                Method::Random => (random_split(examples.len(), &spec, seed)?, false),
                Method::InputLength => (
                    length_split(&examples, SplitSide::Input, need_threshold()?, &spec, seed)?,
                    false,
                ),
                Method::OutputLength => (
                    length_split(&examples, SplitSide::Output, need_threshold()?, &spec, seed)?,
                    false,
                ),
                Method::InputPattern => {
                    (pattern_split(&examples, SplitSide::Input, &spec, seed)?, false)
                }
                Method::OutputPattern => {
                    (pattern_split(&examples, SplitSide::Output, &spec, seed)?, false)
                }
                Method::TargetDc => {
                    let corpus = Corpus::analyze(examples, PoolConfig::default())?;
                    let outcome = greedy_divergence_split(&corpus, &spec, seed)?;
                    eprintln!(
                        "greedy split: D_A = {:.4}, D_C = {:.4}",
                        outcome.d_a, outcome.d_c
                    );
                    if outcome.constraint_violated {
                        eprintln!("warning: atom divergence bound {max_da} violated");
                    }
                    if outcome.target_missed {
                        eprintln!("warning: compound divergence target missed");
                    }
                    (
                        outcome.split,
                        outcome.constraint_violated || outcome.target_missed,
                    )
                }
            };
            dataset_io::write_split(&split, &out)?;
            eprintln!(
                "split sizes: train={} validation={} test={}",
                split.train.len(),
                split.validation.len(),
                split.test.len()
            );
            Ok(if flagged { 3 } else { 0 })
        }
        Command::Analyze { input, split, max_nodes, pool_cap, format } => {
            let examples = dataset_io::read_dataset(&input)?;
            let split = dataset_io::read_split(&split)?;
            let corpus = Corpus::analyze(examples, PoolConfig { max_nodes, pool_cap })?;
            let report = metrics::split_report(&corpus, &split)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Table => println!("{report}"),
            }
            Ok(0)
        }
        Command::Stats { input } => {
            let examples = dataset_io::read_dataset(&input)?;
            let mut complexity: BTreeMap<usize, usize> = BTreeMap::new();
            let mut rules: BTreeMap<String, usize> = BTreeMap::new();
            for e in &examples {
                *complexity.entry(e.complexity).or_default() += 1;
                if let Some(dag) = &e.dag {
                    for atom in dag.nodes() {
                        *rules.entry(atom.key()).or_default() += 1;
                    }
                }
            }
            println!("complexity,examples");
            for (level, n) in complexity {
                println!("{level},{n}");
            }
            println!();
            println!("rule,applications");
            for (rule, n) in rules {
                println!("{rule},{n}");
            }
            Ok(0)
        }
    }
}
