use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tnfeat::bench::{load_dataset, run_benchmark};
use tnfeat::classify::{csr, holdout_split, knn1_classify, lda_fit, lda_predict};
use tnfeat::config::ExperimentConfig;
use tnfeat::format::{load_dtf, save_dtf};
use tnfeat::hooi::{hooi_decompose, hooi_features, hooi_project_test, TKR_MAGIC};
use tnfeat::ingest::{ingest_dtf, ingest_ppm_dir, read_features, read_label_rows, save_dataset, write_features};
use tnfeat::mps::{features_from_core, mps_decompose, mps_project_test, MPS_MAGIC};
use tnfeat::report::BenchmarkReport;
use tnfeat::synth::{synth_dataset, SynthSpec};
use tnfeat::{DenseTensor, Error, FeatureMatrix, MpsModel, MpsOptions, Result, TruncationCriterion, TuckerModel, TuckerOptions};

#[derive(Parser)]
#[command(name = "tnfeat", version, about = "Tensor-network feature extraction and classification benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset as a DTF1 stack plus labels CSV.
    Synth {
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 40)]
        per_class: usize,
        /// Sample extents, e.g. 8x8x3.
        #[arg(long, default_value = "8x8x3")]
        shape: String,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 3.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.0)]
        separation: f64,
        #[arg(long)]
        tint: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Convert DTF1 files or PPM images into one DTF1 stack plus labels CSV.
    Ingest {
        #[arg(long, value_enum)]
        kind: IngestKind,
        /// Stack file or directory of samples.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_labels: PathBuf,
        /// Send this fraction of each class to a separate test stack.
        #[arg(long, requires_all = ["test_out", "test_labels"])]
        holdout: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        test_out: Option<PathBuf>,
        #[arg(long)]
        test_labels: Option<PathBuf>,
    },
    /// Decompose a training stack (samples on the last mode).
    Decompose {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        stack: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        eps: f64,
        #[arg(long)]
        core_position: Option<usize>,
        /// Chain order of the sample modes, e.g. 1,3,2.
        #[arg(long, value_delimiter = ',')]
        mode_order: Option<Vec<usize>>,
        #[arg(long)]
        max_bond: Option<usize>,
        /// Threshold on squared singular values instead of plain ones.
        #[arg(long)]
        energy: bool,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the training features, labeled from this CSV.
        #[arg(long, requires = "labels")]
        features: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Project a test stack onto a saved model's factors.
    Project {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        stack: PathBuf,
        /// Feature table to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Also save the projected core as DTF1.
        #[arg(long)]
        core_out: Option<PathBuf>,
    },
    /// Classify a test feature table against a labeled training table.
    Classify {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_enum, default_value_t = ClassifierArg::Knn1)]
        classifier: ClassifierArg,
        #[arg(long)]
        ridge: Option<f64>,
        /// Write `sample_id,predicted` rows here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a holdout benchmark described by a config file.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. --set eps=0.9,0.8. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Leave wall_ms empty so reports are byte-reproducible.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        audit: bool,
        /// Print the resolved config and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Print a saved report CSV as tables.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Pretty)]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IngestKind {
    Dtf,
    Ppm,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mps,
    Hooi,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Knn1,
    Lda,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Pretty,
    Csv,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            classes,
            per_class,
            shape,
            rank,
            noise,
            separation,
            tint,
            seed,
            out,
            labels,
        } => {
            let shape = shape
                .split('x')
                .map(|d| d.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad shape {shape:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let mut spec = SynthSpec::new(classes, per_class, shape);
            spec.rank = rank;
            spec.noise = noise;
            spec.separation = separation;
            spec.seed = seed;
            spec.last_mode_tint = tint;
            let ds = synth_dataset(&spec)?;
            save_dataset(&ds, &out, &labels)?;
            println!("wrote {} samples of shape {:?}", ds.len(), ds.sample_shape().unwrap_or(&[]));
        }
        Command::Ingest {
            kind,
            input,
            labels,
            out,
            out_labels,
            holdout,
            seed,
            test_out,
            test_labels,
        } => {
            let ds = match kind {
                IngestKind::Dtf => ingest_dtf(&input, &labels)?,
                IngestKind::Ppm => ingest_ppm_dir(&input, &labels)?,
            };
            match (holdout, test_out, test_labels) {
                (Some(r), Some(test_out), Some(test_labels)) => {
                    let (train, test) = holdout_split(&ds, r, seed)?;
                    save_dataset(&train, &out, &out_labels)?;
                    save_dataset(&test, &test_out, &test_labels)?;
                    println!("wrote {} training and {} test samples", train.len(), test.len());
                }
                _ => {
                    save_dataset(&ds, &out, &out_labels)?;
                    println!("wrote {} samples of shape {:?}", ds.len(), ds.sample_shape().unwrap_or(&[]));
                }
            }
        }
        Command::Decompose {
            method,
            stack,
            eps,
            core_position,
            mode_order,
            max_bond,
            energy,
            max_iters,
            tol,
            out,
            features,
            labels,
        } => {
            let stack = load_dtf(&stack)?;
            let core = match method {
                MethodArg::Mps => {
                    let mut opts = MpsOptions::new(eps);
                    if let Some(n) = core_position {
                        opts = opts.core_position(n);
                    }
                    if let Some(o) = mode_order {
                        opts = opts.mode_order(o);
                    }
                    if let Some(b) = max_bond {
                        opts = opts.max_bond(b);
                    }
                    if energy {
                        opts = opts.criterion(TruncationCriterion::Energy);
                    }
                    let model = mps_decompose(&stack, &opts)?;
                    model.save(&out)?;
                    println!(
                        "bonds {:?}, core {:?}, {} features",
                        model.bond_dims(),
                        model.core().shape(),
                        model.n_features()
                    );
                    model.core().clone()
                }
                MethodArg::Hooi => {
                    let model = hooi_decompose(&stack, &TuckerOptions::new(eps).max_iters(max_iters).tol(tol))?;
                    model.save(&out)?;
                    println!(
                        "ranks {:?}, {} iterations, fit {:.6}",
                        model.ranks(),
                        model.iterations_run(),
                        model.objective_trace().last().copied().unwrap_or(0.0)
                    );
                    model.core().clone()
                }
            };
            if let (Some(path), Some(labels)) = (features, labels) {
                write_core_features(&core, &path, Some(&labels))?;
            }
        }
        Command::Project {
            model,
            stack,
            out,
            labels,
            core_out,
        } => {
            let stack = load_dtf(&stack)?;
            let core = match read_magic(&model)? {
                m if &m == MPS_MAGIC => mps_project_test(&MpsModel::load(&model)?, &stack)?,
                m if &m == TKR_MAGIC => hooi_project_test(&TuckerModel::load(&model)?, &stack)?,
                m => return Err(Error::Format(format!("unknown model magic {:?}", String::from_utf8_lossy(&m)))),
            };
            if let Some(p) = core_out {
                save_dtf(p, &core)?;
            }
            write_core_features(&core, &out, labels.as_deref())?;
        }
        Command::Classify {
            train,
            test,
            classifier,
            ridge,
            out,
        } => {
            let (_, train) = read_features(&train)?;
            let (test_ids, test) = read_features(&test)?;
            let predicted = match classifier {
                ClassifierArg::Knn1 => knn1_classify(&train, &test)?,
                ClassifierArg::Lda => lda_predict(&lda_fit(&train, ridge)?, &test)?,
            };
            if let Some(truth) = test.labels() {
                println!("CSR {:.2}% over {} samples", csr(&predicted, truth)?, truth.len());
            }
            if let Some(path) = out {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["sample_id", "predicted"])?;
                for (id, p) in test_ids.iter().zip(&predicted) {
                    w.write_record([id.as_str(), &p.to_string()])?;
                }
                w.flush()?;
            }
        }
        Command::Bench {
            config,
            overrides,
            trials,
            seed,
            output,
            no_timing,
            audit,
            dry_run,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            for kv in &overrides {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
                cfg.set(k.trim(), v.trim())?;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = output {
                cfg.output = Some(o);
            }
            if no_timing {
                cfg.timing = false;
            }
            if audit {
                cfg.audit = true;
            }
            cfg.validate()?;
            if dry_run {
                print!("{}", cfg.to_kv_string());
                return Ok(());
            }
            let ds = load_dataset(&cfg)?;
            let report = run_benchmark(&cfg, &ds)?;
            match &cfg.output {
                Some(path) => {
                    report.save_csv(path)?;
                    print!("{}", report.pretty());
                }
                None => report.write_csv(std::io::stdout().lock())?,
            }
        }
        Command::Report { input, format } => {
            let report = BenchmarkReport::load_csv(&input)?;
            match format {
                ReportFormat::Pretty => print!("{}", report.pretty()),
                ReportFormat::Csv => report.write_csv(std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn read_magic(path: &Path) -> Result<[u8; 4]> {
    let mut magic = [0u8; 4];
    BufReader::new(File::open(path)?).read_exact(&mut magic)?;
    Ok(magic)
}

/// Features of a core whose sample mode is last. Labels CSV rows are taken
/// in stack order, which is how `synth` and `ingest` write them; without one
/// the ids are `0..K`.
fn write_core_features(core: &DenseTensor, path: &Path, labels: Option<&Path>) -> Result<()> {
    let f: FeatureMatrix = if core.order() == 3 {
        features_from_core(core, 3)?
    } else {
        hooi_features(core)?
    };
    let k = f.rows();
    match labels {
        Some(lp) => {
            let rows = read_label_rows(lp)?;
            if rows.len() != k {
                return Err(Error::DimensionMismatch(format!("{} labels for {k} samples", rows.len())));
            }
            let (ids, l): (Vec<String>, Vec<usize>) = rows.into_iter().unzip();
            write_features(path, &ids, &f.with_labels(l)?)
        }
        None => write_features(path, &(0..k).map(|i| i.to_string()).collect::<Vec<_>>(), &f),
    }
}
