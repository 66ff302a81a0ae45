use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hindex::baselines::import_external_predictions;
use hindex::error::{Error, ErrorKind, Result};
use hindex::graph::{CsGraph, LoadOptions};
use hindex::pipeline::{
    build_dataset, distribution_tsv, evaluate, graph_features, label_distribution, load_run, parse_split,
    predictions_tsv, prepare_inputs, report_named_predictions, run_experiment, text_features, Dataset, FeatureMode,
    Labels, ModelKind, ModelRun, RunReport, SplitSet, TrainConfig,
};
use hindex::synth::{generate_synthetic, SynthOptions};
use hindex::text::{embed_all, Corpus, CorpusOptions, EmbeddingTable};

const REPORT_JSON: &str = "report.json";
const REPORT_TABLE: &str = "report.txt";
const CONFIG_FILE: &str = "config.toml";
const SPLIT_FILE: &str = "split.tsv";
const EMBEDDINGS_FILE: &str = "embeddings.bin";

fn config_help() -> String {
    format!(
        "Configuration defaults (override with --config FILE; print with `hindex config`):\n\n{}",
        TrainConfig::default().to_toml()
    )
}

/// Author impact prediction from co-authorship graphs and abstracts.
#[derive(Parser)]
#[command(name = "hindex", version, after_long_help = config_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the nine structural metrics of every author.
    Metrics {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Output feature file (TSV).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train word vectors on abstracts and write per-author text features.
    Embed {
        /// Abstract file(s): `author_id<TAB>text` per line.
        #[arg(long, required = true, num_args = 1..)]
        abstracts: Vec<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        /// Output feature file (TSV).
        #[arg(long)]
        out: PathBuf,
        /// Also save the embedding table (binary).
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Train and evaluate models; writes checkpoints and a run report.
    #[command(after_long_help = config_help())]
    Train {
        #[command(flatten)]
        graph: GraphArgs,
        /// Abstract file(s); required for text and all feature sets.
        #[arg(long, num_args = 1..)]
        abstracts: Vec<PathBuf>,
        /// Label file: `author_id<TAB>h_index` per line.
        #[arg(long)]
        labels: PathBuf,
        /// Feature sets to train on: text, graph, all [default: every set the inputs support].
        #[arg(long, value_delimiter = ',')]
        features: Vec<FeatureMode>,
        /// Models to train: mean, lasso, sgd, mlp, gnn, gcn [default: all of them].
        #[arg(long, value_delimiter = ',')]
        model: Vec<ModelKind>,
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write wall-clock timings as JSON to this file.
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Score a prediction file (own or external) on one split set.
    Evaluate {
        /// Prediction file: `author_id<TAB>value` per line.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Split file written by `train`.
        #[arg(long)]
        split: PathBuf,
        /// Which split set to score: train, val or test.
        #[arg(long, default_value = "test")]
        set: String,
        /// Graph whose authors the predictions may cover [default: the labelled authors].
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Score only the covered authors when some predictions are missing.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Predict with a trained model directory (`<out>/<model>-<features>`).
    Predict {
        /// Model directory written by `train`.
        #[arg(long)]
        model_dir: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
        /// Abstract file(s), needed by text-feature models.
        #[arg(long, num_args = 1..)]
        abstracts: Vec<PathBuf>,
        /// Output prediction file (TSV).
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the result table of a run, or per-author predictions.
    Report {
        /// Output directory of `train`.
        #[arg(long)]
        run_dir: PathBuf,
        /// Authors to list with actual and predicted h-index.
        #[arg(long, value_delimiter = ',')]
        authors: Vec<String>,
        /// Label file, required with --authors.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Histogram of h-index values for plotting.
    Stats {
        #[arg(long)]
        labels: PathBuf,
        /// Output file [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset (graph.edges, abstracts.tsv, labels.tsv).
    Generate {
        /// Number of authors.
        #[arg(long, default_value_t = 5000)]
        n: usize,
        /// Mean links per newcomer in preferential attachment.
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default configuration.
    Config,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list: `src dst weight` per line.
    #[arg(long)]
    graph: PathBuf,
    /// Treat every co-authorship edge as weight 1.
    #[arg(long)]
    binarize_edges: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the configuration [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn load_graph(args: &GraphArgs) -> Result<CsGraph> {
    let (g, report) = CsGraph::load_edge_list(
        &args.graph,
        LoadOptions {
            binarize: args.binarize_edges,
        },
    )?;
    log::info!(
        "graph: {} authors, {} edges from {} records",
        g.num_vertices(),
        g.num_edges(),
        report.records
    );
    Ok(g)
}

fn load_corpus(paths: &[PathBuf], cfg: &TrainConfig) -> Result<Corpus> {
    let refs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    let c = Corpus::load(&refs, &CorpusOptions::with_min_count(cfg.corpus.min_count))?;
    if !c.excluded().is_empty() {
        log::warn!("{} authors have no usable abstract text", c.excluded().len());
    }
    Ok(c)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io(path, e))
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Metrics { graph, run, out } => {
            let cfg = run.load()?;
            let g = load_graph(&graph)?;
            graph_features(&g, &cfg)?.save_tsv(&out)
        }
        Command::Embed {
            abstracts,
            run,
            out,
            vectors,
        } => {
            let cfg = run.load()?;
            let corpus = load_corpus(&abstracts, &cfg)?;
            let (features, table, stats) = text_features(&corpus, &cfg)?;
            log::info!("skip-gram epoch losses: {:?}", stats.epoch_loss);
            features.save_tsv(&out)?;
            if let Some(v) = vectors {
                table.save(&v)?;
            }
            Ok(())
        }
        Command::Train {
            graph,
            abstracts,
            labels,
            features,
            model,
            run,
            out,
            timing,
        } => {
            let start = Instant::now();
            let cfg = run.load()?;
            cfg.validate()?;
            let g = load_graph(&graph)?;
            let labels = Labels::load(&labels)?;
            let corpus = if abstracts.is_empty() {
                None
            } else {
                Some(load_corpus(&abstracts, &cfg)?)
            };
            let modes = if features.is_empty() {
                if corpus.is_some() {
                    FeatureMode::ALL.to_vec()
                } else {
                    vec![FeatureMode::Graph]
                }
            } else {
                dedup(features)
            };
            if corpus.is_none() && modes.iter().any(|&m| m != FeatureMode::Graph) {
                return Err(Error::Config("text and all feature sets need --abstracts".into()));
            }
            let models = if model.is_empty() {
                ModelKind::ALL.to_vec()
            } else {
                dedup(model)
            };
            std::fs::create_dir_all(&out).map_err(|e| io(&out, e))?;
            let (dataset, table) = match &corpus {
                Some(c) => {
                    let (text, table, _) = text_features(c, &cfg)?;
                    let d = Dataset::new(&g, Some(graph_features(&g, &cfg)?), Some(text), &labels)?;
                    (d, Some(table))
                }
                None => (build_dataset(&g, None, &labels, &cfg)?, None),
            };
            let prepared = start.elapsed();
            if let Some(t) = table {
                t.save(&out.join(EMBEDDINGS_FILE))?;
            }
            let (report, split, _) = run_experiment(&dataset, &cfg, &models, &modes, Some(&out))?;
            write(&out.join(CONFIG_FILE), &cfg.to_toml())?;
            write(&out.join(SPLIT_FILE), &split.to_tsv(dataset.ids()))?;
            write(&out.join(REPORT_JSON), &report.to_json())?;
            write(&out.join(REPORT_TABLE), &report.table())?;
            print!("{}", report.table());
            let total = start.elapsed();
            log::info!("finished in {:.1}s", total.as_secs_f64());
            if let Some(t) = timing {
                let json = serde_json::json!({
                    "features_seconds": prepared.as_secs_f64(),
                    "total_seconds": total.as_secs_f64(),
                });
                write(&t, &format!("{json:#}\n"))?;
            }
            Ok(())
        }
        Command::Evaluate {
            predictions,
            labels,
            split,
            set,
            graph,
            allow_partial,
        } => {
            let set: SplitSet = set.parse()?;
            let labels = Labels::load(&labels)?;
            let members = parse_split(&read(&split)?, &split.display().to_string())?;
            let wanted: Vec<String> = members
                .into_iter()
                .filter(|(_, s)| *s == set)
                .map(|(id, _)| id)
                .collect();
            let universe: Vec<String> = match graph {
                Some(p) => CsGraph::load_edge_list(&p, LoadOptions::default())?.0.ids().to_vec(),
                None => labels.entries().iter().map(|(id, _)| id.clone()).collect(),
            };
            let known: HashSet<&str> = universe.iter().map(String::as_str).collect();
            let preds = import_external_predictions(&predictions, &wanted, &known, allow_partial)?;
            let (rows, values) = preds.covered();
            let y: Vec<f64> = rows
                .iter()
                .map(|&i| {
                    labels
                        .get(&wanted[i])
                        .map(|h| h as f64)
                        .ok_or_else(|| Error::Lookup(format!("author {} has no label", wanted[i])))
                })
                .collect::<Result<_>>()?;
            let mask: Vec<usize> = (0..y.len()).collect();
            let (mae, mse) = evaluate(&values, &y, &mask)?;
            let json = serde_json::json!({
                "authors": wanted.len(),
                "covered": y.len(),
                "coverage": preds.coverage,
                "mae": mae,
                "mse": mse,
            });
            println!("{json:#}");
            Ok(())
        }
        Command::Predict {
            model_dir,
            graph,
            abstracts,
            out,
        } => {
            let (spec, scaler, artifact) = load_run(&model_dir)?;
            let parent = model_dir.parent().unwrap_or(Path::new("."));
            let cfg = TrainConfig::load(&parent.join(CONFIG_FILE))?;
            let g = load_graph(&graph)?;
            let metrics = graph_features(&g, &cfg)?;
            let text = if spec.features == FeatureMode::Graph {
                None
            } else {
                if abstracts.is_empty() {
                    return Err(Error::Config(format!("a {} model needs --abstracts", spec.features)));
                }
                let corpus = load_corpus(&abstracts, &cfg)?;
                let table = EmbeddingTable::load(&parent.join(EMBEDDINGS_FILE))?;
                Some(embed_all(&corpus, &table)?)
            };
            let dataset = Dataset::new(&g, Some(metrics), text, &Labels::default())?;
            let x = prepare_inputs(&dataset, &spec, &scaler)?;
            let pred = artifact.restore(&spec, &dataset)?.predict(&x)?;
            write(&out, &predictions_tsv(dataset.ids(), &pred))
        }
        Command::Report {
            run_dir,
            authors,
            labels,
        } => {
            let report = RunReport::load(&run_dir.join(REPORT_JSON))?;
            if authors.is_empty() {
                print!("{}", report.table());
                return Ok(());
            }
            let labels = Labels::load(
                labels
                    .as_deref()
                    .ok_or_else(|| Error::Config("--authors needs --labels".into()))?,
            )?;
            let mut ids: Option<Vec<String>> = None;
            let mut models = Vec::new();
            for r in &report.results {
                let name = ModelRun::dir_name(r.model, r.features);
                let p = run_dir.join(&name).join(hindex::pipeline::PREDICTIONS_FILE);
                let recs = hindex::baselines::parse_predictions(&read(&p)?, &p.display().to_string())?;
                let (these, values): (Vec<String>, Vec<f64>) = recs.into_iter().unzip();
                if ids.as_ref().is_some_and(|i| *i != these) {
                    return Err(Error::Validation(format!("{name} covers different authors")));
                }
                ids = Some(these);
                models.push((name, values));
            }
            let ids = ids.unwrap_or_default();
            let y: Vec<Option<f64>> = ids.iter().map(|id| labels.get(id).map(|h| h as f64)).collect();
            print!("{}", report_named_predictions(&authors, &ids, &y, &models)?.render());
            Ok(())
        }
        Command::Stats { labels, out } => {
            let labels = Labels::load(&labels)?;
            let text = distribution_tsv(&label_distribution(&labels.values()));
            match out {
                Some(p) => write(&p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Generate { n, m, seed, out } => {
            let data = generate_synthetic(&SynthOptions::new(n, m, seed))?;
            data.write_to(&out)?;
            Ok(())
        }
        Command::Config => {
            print!("{}", TrainConfig::default().to_toml());
            Ok(())
        }
    }
}

fn dedup<T: PartialEq>(xs: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
