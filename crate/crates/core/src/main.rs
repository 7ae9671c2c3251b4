use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lms::data::{load_float_column, load_tables, validate, ExperimentConfig, KeyValues, LangDimPolicy, Partition, TablePaths, Tables};
use lms::eval::{histogram_to_tsv, lolo_evaluate, paired_bootstrap, paired_bootstrap_exhaustive, score_histogram, z_test};
use lms::inputs::FeatureResolver;
use lms::ranking::{format_history, grid_search, train, TrainConfig, BATCH_SIZE_GRID, LEARNING_RATE_GRID};
use lms::scorer::gradcheck::{gradcheck, REL_TOLERANCE};
use lms::scorer::{load_params, save_params};
use lms::selection::{select_en_dev, select_k_target, select_lms, select_pivot_dev, SelectionOutcome, Strategy, K_TARGET_EVAL_SET};
use lms::synth::{generate, write_dataset, SynthConfig};
use lms::{Error, Result};

#[derive(Parser)]
#[command(name = "lms", version, about = "Learned model selection for zero-shot cross-lingual transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// The four tables and the experiment config.
///
/// The config holds `key=value` lines: experiment keys (`pivot_langs`,
/// `target_lang`, `feature_strategy`, ...), training keys (`learning_rate`,
/// `batch_size`, `epochs`, ...) and `lang_dims=consistent|standard`.
#[derive(Args)]
struct DataArgs {
    /// Model features, `model_id corpus_lang dim values`
    #[arg(long)]
    features: PathBuf,
    /// Language embeddings; may be left out when lang_embedding_kind=none
    #[arg(long)]
    langvecs: Option<PathBuf>,
    /// Performance table, `model_id lang_id eval_set score`
    #[arg(long)]
    perf: PathBuf,
    /// Meta split, `model_id train|dev|test`
    #[arg(long)]
    split: PathBuf,
    /// Experiment and training config
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a planted oracle
    Gen {
        /// Synthetic generator config; built-in defaults when absent
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Check the tables against each other and the config
    Validate {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Train a scorer on the meta-train models
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        params_out: PathBuf,
        /// Hold this language out instead of the config's target
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        seed: u64,
    },
    /// Grid search over learning rate and batch size on the meta-dev models
    Grid {
        #[command(flatten)]
        data: DataArgs,
        /// Parameters of the winning grid point
        #[arg(long)]
        params_out: Option<PathBuf>,
        /// Grid points as TSV
        #[arg(long)]
        report_out: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        seed: u64,
    },
    /// Pick a meta-test model for the target language
    Select {
        #[command(flatten)]
        data: DataArgs,
        /// lms, en_dev, pivot_dev, k_target or all_target
        #[arg(long, default_value_t = Strategy::Lms)]
        strategy: Strategy,
        /// Trained parameters (lms only)
        #[arg(long)]
        params_in: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Leave-one-language-out evaluation of every strategy
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Report TSV; score histograms go next to it as `<stem>.hist.<target>.tsv`
        #[arg(long)]
        report_out: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Folds run in parallel
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Compare analytic gradients with central finite differences
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long)]
        seed: u64,
    },
    /// One-sided paired bootstrap over per-instance deltas
    Bootstrap {
        /// One delta (a - b) per line
        #[arg(long)]
        deltas: PathBuf,
        #[arg(long = "B", default_value_t = 10_000)]
        b: usize,
        /// Enumerate every resample instead of sampling (at most 8 deltas)
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        seed: u64,
    },
    /// Two-sample z test on per-split scores
    Ztest {
        /// Scores of system A, one per line
        #[arg(long)]
        a: PathBuf,
        /// Scores of system B, one per line
        #[arg(long)]
        b: PathBuf,
    },
}

struct Loaded {
    tables: Tables,
    cfg: ExperimentConfig,
    tcfg: TrainConfig,
}

fn load(data: &DataArgs, target: Option<&str>, seed: Option<u64>) -> Result<Loaded> {
    let mut kv = KeyValues::load(&data.config)?;
    let policy: LangDimPolicy = kv.take("lang_dims")?.unwrap_or_default();
    let mut cfg = ExperimentConfig::from_kv(&mut kv)?;
    let mut tcfg = TrainConfig::from_kv(&mut kv)?;
    kv.finish()?;
    if let Some(t) = target {
        cfg = cfg.fold(t);
    }
    if let Some(s) = seed {
        cfg.seed = s;
        tcfg.seed = s;
    }
    let paths = TablePaths {
        features: data.features.clone(),
        langvecs: data.langvecs.clone(),
        perf: data.perf.clone(),
        split: data.split.clone(),
    };
    let tables = load_tables(&paths, policy)?;
    Ok(Loaded { tables, cfg, tcfg })
}

/// Fails with every violation listed when the tables do not fit the config.
fn require_valid(l: &Loaded) -> Result<()> {
    let v = validate(&l.tables, &l.cfg);
    if v.is_empty() {
        return Ok(());
    }
    for x in &v {
        eprintln!("{x}");
    }
    Err(Error::Invalid(format!("{} validation violation(s)", v.len())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn hist_path(report: &Path, target: &str) -> PathBuf {
    let stem = report.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    report.with_file_name(format!("{stem}.hist.{target}.tsv"))
}

fn print_outcome(o: &SelectionOutcome) {
    let test = o.score_on_target_test.map_or_else(|| "NA".to_string(), |s| s.to_string());
    match &o.auxiliary {
        Some(p) => println!("{}\t{}\t{}\tpivot={p}", o.strategy, o.chosen_model, test),
        None => println!("{}\t{}\t{}", o.strategy, o.chosen_model, test),
    }
    for (m, s) in &o.ranking_scores {
        println!("#\t{m}\t{s}");
    }
}

/// `Ok(false)` means the command ran but its check failed.
fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Gen { config, out, seed } => {
            let mut sc = match config {
                Some(p) => {
                    let mut kv = KeyValues::load(&p)?;
                    let sc = SynthConfig::from_kv(&mut kv)?;
                    kv.finish()?;
                    sc
                }
                None => SynthConfig::default(),
            };
            sc.seed = seed;
            sc.check()?;
            let ds = generate(&sc)?;
            std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            write_dataset(&ds, &out)?;
            eprintln!("wrote dataset to {}", out.display());
            Ok(true)
        }
        Command::Validate { data } => {
            let l = load(&data, None, None)?;
            let v = validate(&l.tables, &l.cfg);
            for x in &v {
                println!("{x}");
            }
            eprintln!("{} violation(s)", v.len());
            Ok(v.is_empty())
        }
        Command::Train {
            data,
            params_out,
            target,
            seed,
        } => {
            let l = load(&data, target.as_deref(), Some(seed))?;
            require_valid(&l)?;
            let out = train(&l.tables, &l.cfg, &l.tcfg)?;
            save_params(&out.params, &params_out)?;
            print!("{}", format_history(&out.history));
            eprintln!(
                "trained on {} language(s), loss {} -> {}",
                out.languages.len(),
                out.initial_loss,
                out.final_loss
            );
            Ok(true)
        }
        Command::Grid {
            data,
            params_out,
            report_out,
            target,
            seed,
        } => {
            let l = load(&data, target.as_deref(), Some(seed))?;
            require_valid(&l)?;
            let g = grid_search(&l.tables, &l.cfg, &l.tcfg, &LEARNING_RATE_GRID, &BATCH_SIZE_GRID)?;
            let mut tsv = String::from("learning_rate\tbatch_size\tcriterion\n");
            for p in &g.points {
                tsv.push_str(&format!("{}\t{}\t{}\n", p.learning_rate, p.batch_size, p.criterion));
            }
            print!("{tsv}");
            println!("# best\t{}\t{}", g.best.learning_rate, g.best.batch_size);
            if let Some(p) = report_out {
                write(&p, &tsv)?;
            }
            if let Some(p) = params_out {
                save_params(&g.outcome.params, &p)?;
            }
            Ok(true)
        }
        Command::Select {
            data,
            strategy,
            params_in,
            target,
        } => {
            let l = load(&data, target.as_deref(), None)?;
            require_valid(&l)?;
            let candidates = l.tables.split.models(Partition::Test);
            let perf = &l.tables.perf;
            let t = l.cfg.target_lang.as_str();
            let outcome = match strategy {
                Strategy::Lms => {
                    let p = params_in.ok_or_else(|| Error::Config("--params-in is required for lms".into()))?;
                    let params = load_params(&p)?;
                    select_lms(&params, &FeatureResolver::new(&l.tables, &l.cfg), &candidates, perf)?
                }
                Strategy::EnDev => select_en_dev(&candidates, perf, &l.cfg.english_lang_id, t)?,
                Strategy::PivotDev => select_pivot_dev(
                    &candidates,
                    perf,
                    t,
                    &l.cfg.pivot_langs,
                    &l.tables.langvecs,
                    l.cfg.pivot_override.as_deref(),
                )?,
                Strategy::KTarget => select_k_target(&candidates, perf, t, K_TARGET_EVAL_SET)?,
                Strategy::AllTarget => select_k_target(&candidates, perf, t, "dev")?,
            };
            print_outcome(&outcome);
            Ok(true)
        }
        Command::Eval {
            data,
            report_out,
            bins,
            jobs,
            seed,
        } => {
            if bins == 0 {
                return Err(Error::Config("--bins must be at least 1".into()));
            }
            let l = load(&data, None, Some(seed))?;
            let (report, folds) = lolo_evaluate(&l.tables, &l.cfg, &l.tcfg, jobs)?;
            let tsv = report.to_tsv();
            write(&report_out, &tsv)?;
            print!("{tsv}");
            for f in &folds {
                let h = score_histogram(&f.candidate_test_scores, bins)?;
                write(&hist_path(&report_out, &f.target), &histogram_to_tsv(&h))?;
            }
            eprintln!("{} fold(s) evaluated, {} failure line(s)", folds.len(), report.failures.len());
            Ok(!folds.is_empty())
        }
        Command::Gradcheck { cases, seed } => {
            let r = gradcheck(seed, cases)?;
            println!(
                "max relative error {:e} over {} components in {} cases (tolerance {:e})",
                r.max_rel_error, r.components, r.cases, REL_TOLERANCE
            );
            Ok(r.passed())
        }
        Command::Bootstrap {
            deltas,
            b,
            exhaustive,
            seed,
        } => {
            let d = load_float_column(&deltas)?;
            let p = if exhaustive {
                paired_bootstrap_exhaustive(&d)?
            } else {
                paired_bootstrap(&d, b, seed)?
            };
            println!("p\t{p}");
            Ok(true)
        }
        Command::Ztest { a, b } => {
            let t = z_test(&load_float_column(&a)?, &load_float_column(&b)?)?;
            println!("z\t{}\np\t{}", t.z, t.p);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
