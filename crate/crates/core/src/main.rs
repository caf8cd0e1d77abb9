use std::collections::HashMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use laida::corpus::{dataset_stats, load_mci_records, parse_conllu, ParsedSentence, Strictness, DEFAULT_COMPARATORS};
use laida::eval::{self, render_table, EvalReport, Normalizer};
use laida::gat::{self, encode_sentence, read_params, write_params, write_reps_jsonl, ContrastiveForm, EncoderConfig, TrainConfig};
use laida::lingfeat::{
    build_posneg_matrix, read_similarity_matrix, sentence_distance, similarity_matrix, write_feature_matrices,
    write_similarity_matrix, Inventory, Sigma, SentenceProfile, SimilarityTransform,
};
use laida::promptgen::{preprocess_pipeline, read_raw_items, LlmClientSpec, PipelineOptions, PromptTemplate, TemplateKind};
use laida::retriever::{build_index, read_index, write_index, Metric};
use laida::workflow::{atomic_write, load_token_embeddings, run_stage, RunConfig, Stage};
use laida::{Error, Result};

/// Linguistics-aware example retrieval and prompt construction for metaphor
/// components identification.
#[derive(Parser)]
#[command(name = "laida", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one workflow stage from a config file.
    Run(RunArgs),
    /// Run every workflow stage in dependency order.
    All(WorkflowArgs),
    /// Feature matrices, pairwise scores and positive/negative mining.
    #[command(subcommand)]
    Featmat(FeatmatCmd),
    /// Train the sentence encoder or encode a corpus.
    #[command(subcommand)]
    Encoder(EncoderCmd),
    /// Build a vector index from sentence vectors.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Nearest stored sentences to a stored sentence.
    Retrieve(RetrieveArgs),
    /// Distractor generation and option assembly.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Score predictions against gold records.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Dataset statistics of a record file.
    Stats(StatsArgs),
}

#[derive(Args)]
struct WorkflowArgs {
    #[arg(long, default_value = "laida.toml")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Override `paths.work_dir`.
    #[arg(long)]
    work_dir: Option<String>,
    /// Override the LLM client endpoint.
    #[arg(long)]
    client: Option<String>,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RunArgs {
    /// preprocess, featmat, posneg, train, encode, index, retrieve, prompt or eval.
    stage: String,
    #[command(flatten)]
    common: WorkflowArgs,
}

#[derive(Args)]
struct SigmaArg {
    /// Fixed Gaussian width; defaults to max(m/4, 1).
    #[arg(long)]
    sigma: Option<f64>,
}

impl SigmaArg {
    fn get(&self) -> Sigma {
        self.sigma.map_or(Sigma::Proportional, Sigma::Fixed)
    }
}

#[derive(Subcommand)]
enum FeatmatCmd {
    /// Write LFM1 feature matrices and the SIM1 similarity matrix.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        similarity: PathBuf,
        #[command(flatten)]
        sigma: SigmaArg,
    },
    /// Match score and similarity of two sentences.
    Distance {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[command(flatten)]
        sigma: SigmaArg,
    },
    /// Mine top-K% positives from a similarity matrix.
    Posneg {
        #[arg(long)]
        similarity: PathBuf,
        #[arg(long, default_value_t = 20.0)]
        k: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EmbeddingArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Token embeddings; omitted means hash embeddings.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    embed_dim: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Literal,
    InfoNce,
}

#[derive(Subcommand)]
enum EncoderCmd {
    /// Train the encoder on a corpus and write a GAT1 model.
    Train {
        #[command(flatten)]
        emb: EmbeddingArgs,
        #[arg(long, default_value_t = 20.0)]
        k: f64,
        #[command(flatten)]
        sigma: SigmaArg,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        out_dim: usize,
        #[arg(long, value_enum, default_value_t = FormArg::Literal)]
        form: FormArg,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Encode every sentence with a trained model.
    Encode {
        #[command(flatten)]
        emb: EmbeddingArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Index sentence vectors from a JSONL file.
    Build {
        #[arg(long)]
        reps: PathBuf,
        #[arg(long, default_value = "euclidean")]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query_id: String,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Generate distractors and write shuffled MCI records.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        /// `mock`, `mock:<transcript.jsonl>` or an HTTP URL.
        #[arg(long, env = "LAIDA_LLM_ENDPOINT", default_value = "mock")]
        client: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        max_retries: u32,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        strict: bool,
        /// Replacement distractor template.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Accept a component when either string contains the other.
    #[arg(long)]
    fuzzy: bool,
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Multiple-choice accuracy of label predictions.
    Score(EvalArgs),
    /// Per-component accuracy of triplet predictions.
    Components(EvalArgs),
    /// Error-type breakdown of triplet predictions.
    Errors(EvalArgs),
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    records: PathBuf,
    /// JSON object mapping record id to its number of component groups.
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Comparator marker; repeatable. Defaults to the built-in list.
    #[arg(long = "comparator")]
    comparators: Vec<String>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<std::fs::File>> {
    Ok(BufReader::new(std::fs::File::open(path).map_err(|e| Error::io(path, e))?))
}

fn read_sentences(path: &Path) -> Result<Vec<ParsedSentence>> {
    Ok(parse_conllu(&read_text(path)?)?)
}

fn profiles(sentences: &[ParsedSentence]) -> Result<Vec<SentenceProfile>> {
    let (pos, rel) = (Inventory::universal_pos(), Inventory::universal_relations());
    Ok(sentences
        .iter()
        .map(|s| SentenceProfile::build(s, &pos, &rel))
        .collect::<std::result::Result<_, _>>()?)
}

fn json_line<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn workflow_config(args: &WorkflowArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if let Some(j) = args.jobs {
        cfg.run.jobs = j;
    }
    if let Some(w) = &args.work_dir {
        cfg.paths.work_dir = w.clone();
    }
    if let Some(c) = &args.client {
        cfg.client.endpoint = c.clone();
    }
    cfg.run.strict |= args.strict;
    cfg.validate()?;
    Ok(cfg)
}

fn run_featmat(cmd: FeatmatCmd) -> Result<()> {
    match cmd {
        FeatmatCmd::Build { corpus, features, similarity, sigma } => {
            let profiles = profiles(&read_sentences(&corpus)?)?;
            let sim = similarity_matrix(&profiles, sigma.get(), SimilarityTransform::default())?;
            let mats: Vec<_> = profiles.into_iter().map(|p| p.features).collect();
            let mut buf = Vec::new();
            write_feature_matrices(&mut buf, &mats).map_err(|e| Error::io(&features, e))?;
            atomic_write(&features, &buf)?;
            let mut buf = Vec::new();
            write_similarity_matrix(&mut buf, &sim).map_err(|e| Error::io(&similarity, e))?;
            atomic_write(&similarity, &buf)
        }
        FeatmatCmd::Distance { corpus, a, b, sigma } => {
            let profiles = profiles(&read_sentences(&corpus)?)?;
            let find = |id: &str| {
                profiles
                    .iter()
                    .find(|p| p.id == id)
                    .ok_or_else(|| Error::Data(format!("no sentence {id} in {}", corpus.display())))
            };
            let (pa, pb) = (find(&a)?, find(&b)?);
            let l = sentence_distance(&pa.features, &pa.central, &pb.features, &pb.central, sigma.get())?;
            let out = serde_json::json!({"a": a, "b": b, "match_score": l, "similarity": laida::lingfeat::similarity(l)});
            println!("{out}");
            Ok(())
        }
        FeatmatCmd::Posneg { similarity, k, out } => {
            let sim = read_similarity_matrix(&mut open(&similarity)?).map_err(|e| Error::io(&similarity, e))?;
            let pn = build_posneg_matrix(&sim, k)?;
            atomic_write(&out, &json_line(&pn))
        }
    }
}

fn run_encoder(cmd: EncoderCmd) -> Result<()> {
    match cmd {
        EncoderCmd::Train { emb, k, sigma, delta, tau, lr, batch, epochs, out_dim, form, out, trace } => {
            let sentences = read_sentences(&emb.corpus)?;
            let vectors = load_token_embeddings(emb.embeddings.as_deref(), &sentences, emb.embed_dim, emb.seed)?;
            let sim = similarity_matrix(&profiles(&sentences)?, sigma.get(), SimilarityTransform::default())?;
            let pn = build_posneg_matrix(&sim, k)?;
            let enc = EncoderConfig {
                out_dim,
                delta,
                tau,
                form: match form {
                    FormArg::Literal => ContrastiveForm::Literal,
                    FormArg::InfoNce => ContrastiveForm::InfoNce,
                },
                ..EncoderConfig::default()
            };
            let tc = TrainConfig {
                learning_rate: lr,
                batch_size: batch,
                epochs,
                seed: emb.seed,
                ..TrainConfig::default()
            };
            let res = gat::train(&vectors, &pn, &enc, &tc)?;
            let mut buf = Vec::new();
            write_params(&mut buf, &res.params).map_err(|e| Error::io(&out, e))?;
            atomic_write(&out, &buf)?;
            if let Some(t) = trace {
                atomic_write(&t, &json_line(&res.trace))?;
            }
            Ok(())
        }
        EncoderCmd::Encode { emb, model, out } => {
            let sentences = read_sentences(&emb.corpus)?;
            let vectors = load_token_embeddings(emb.embeddings.as_deref(), &sentences, emb.embed_dim, emb.seed)?;
            let params = read_params(&mut open(&model)?).map_err(|e| Error::io(&model, e))?;
            let reps = vectors
                .iter()
                .map(|v| encode_sentence(v, &params))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            atomic_write(&out, write_reps_jsonl(&reps).as_bytes())
        }
    }
}

fn run_eval(cmd: EvalCmd) -> Result<()> {
    let (args, which) = match cmd {
        EvalCmd::Score(a) => (a, 0),
        EvalCmd::Components(a) => (a, 1),
        EvalCmd::Errors(a) => (a, 2),
    };
    let records = load_mci_records(&args.gold, Strictness::Abort)?.records;
    let preds = eval::read_predictions(&read_text(&args.pred)?)?;
    let norm = if args.fuzzy { Normalizer::Containment } else { Normalizer::Trim };
    let mut report = EvalReport::default();
    match which {
        0 => report.accuracy = Some(eval::score_choices(&records, &preds)?),
        1 => report.components = Some(eval::component_accuracy(&records, &preds, norm)?),
        _ => report.errors = Some(eval::error_breakdown(&records, &preds, norm)?),
    }
    match args.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Table => print!("{}", render_table(&report)),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let stage: Stage = args.stage.parse()?;
            let cfg = workflow_config(&args.common)?;
            run_stage(&cfg, stage)?;
            Ok(())
        }
        Command::All(args) => {
            let cfg = workflow_config(&args)?;
            for stage in Stage::ALL {
                run_stage(&cfg, stage)?;
            }
            Ok(())
        }
        Command::Featmat(c) => run_featmat(c),
        Command::Encoder(c) => run_encoder(c),
        Command::Index(IndexCmd::Build { reps, metric, out }) => {
            let reps = gat::read_reps_jsonl(&read_text(&reps)?)?;
            let idx = build_index(&reps, metric.parse::<Metric>()?)?;
            let mut buf = Vec::new();
            write_index(&mut buf, &idx).map_err(|e| Error::io(&out, e))?;
            atomic_write(&out, &buf)
        }
        Command::Retrieve(a) => {
            let idx = read_index(&mut open(&a.index)?).map_err(|e| Error::io(&a.index, e))?;
            for n in idx.nearest_to_id(&a.query_id, a.k)? {
                println!("{}", serde_json::to_string(&n).expect("serializable"));
            }
            Ok(())
        }
        Command::Pipeline(PipelineCmd::Preprocess {
            input,
            client,
            seed,
            max_retries,
            timeout,
            jobs,
            strict,
            template,
            out,
            report,
        }) => {
            let items = read_raw_items(&read_text(&input)?)?;
            let spec = LlmClientSpec { endpoint: client, timeout_secs: timeout, max_retries };
            let client = spec.connect()?;
            let tpl = match template {
                Some(p) => PromptTemplate::from_file(TemplateKind::DistractorGen, &p)?,
                None => PromptTemplate::builtin(TemplateKind::DistractorGen),
            };
            let opts = PipelineOptions { seed, max_retries, jobs, strict };
            let res = preprocess_pipeline(&items, client.as_ref(), &tpl, &opts)?;
            let mut lines = String::new();
            for r in &res.records {
                lines.push_str(&serde_json::to_string(r).expect("serializable"));
                lines.push('\n');
            }
            atomic_write(&out, lines.as_bytes())?;
            atomic_write(&report, &json_line(&res.report))?;
            eprintln!("{} of {} items assembled", res.report.succeeded, res.report.total);
            Ok(())
        }
        Command::Eval(c) => run_eval(c),
        Command::Stats(a) => {
            let records = load_mci_records(&a.records, Strictness::Abort)?.records;
            let groups: HashMap<String, usize> = match &a.groups {
                Some(p) => serde_json::from_str(&read_text(p)?).map_err(|source| Error::Json {
                    context: p.display().to_string(),
                    source,
                })?,
                None => HashMap::new(),
            };
            let stats = if a.comparators.is_empty() {
                dataset_stats(&records, DEFAULT_COMPARATORS, &groups)
            } else {
                dataset_stats(&records, &a.comparators, &groups)
            };
            println!("{}", serde_json::to_string_pretty(&stats).expect("serializable"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("LAIDA_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
