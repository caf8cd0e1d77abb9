use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::artifacts::{atomic_write, sha256_file, sha256_hex, ArtifactEntry, Manifest};
use super::config::RunConfig;
use super::ConfigError;
use crate::corpus::{load_mci_records, parse_conllu, MetaphorRecord, ParsedSentence, Strictness};
use crate::eval::{self, EvalReport, Normalizer, PredictionMode};
use crate::gat::{
    self, encode_sentence, read_embeddings_bin, read_embeddings_jsonl, read_params, write_params, write_reps_jsonl,
    HashEmbedder, TokenEmbeddings,
};
use crate::lingfeat::{
    build_posneg_matrix, read_similarity_matrix, similarity_matrix, write_feature_matrices, write_similarity_matrix,
    Inventory, PosNegMatrix, SentenceProfile,
};
use crate::promptgen::{self, preprocess_pipeline, read_raw_items, render_task_prompt, PipelineOptions, PromptTemplate, TemplateKind};
use crate::retriever::{build_index, read_index, write_index};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Preprocess,
    Featmat,
    Posneg,
    Train,
    Encode,
    Index,
    Retrieve,
    Prompt,
    Eval,
}

impl Stage {
    /// Dependency order.
    pub const ALL: [Stage; 9] = [
        Stage::Preprocess,
        Stage::Featmat,
        Stage::Posneg,
        Stage::Train,
        Stage::Encode,
        Stage::Index,
        Stage::Retrieve,
        Stage::Prompt,
        Stage::Eval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::Featmat => "featmat",
            Stage::Posneg => "posneg",
            Stage::Train => "train",
            Stage::Encode => "encode",
            Stage::Index => "index",
            Stage::Retrieve => "retrieve",
            Stage::Prompt => "prompt",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = ConfigError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownStage(s.to_string()))
    }
}

/// Work-directory file names.
mod names {
    pub const RECORDS: &str = "records.jsonl";
    pub const FAILURES: &str = "failures.json";
    pub const FEATURES: &str = "features.lfm";
    pub const SIMILARITY: &str = "similarity.sim";
    pub const POSNEG: &str = "posneg.json";
    pub const MODEL: &str = "model.gat";
    pub const TRACE: &str = "train_trace.json";
    pub const REPS: &str = "reps.jsonl";
    pub const INDEX: &str = "index.idx";
    pub const RETRIEVED: &str = "retrieved.jsonl";
    pub const PROMPTS: &str = "prompts.jsonl";
    pub const EVAL: &str = "eval.json";
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageOutcome {
    pub written: Vec<PathBuf>,
    pub skipped: bool,
}

/// Positive/negative sets together with the sentence ids they index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosNegFile {
    pub ids: Vec<String>,
    pub matrix: PosNegMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RetrievedLine {
    id: String,
    neighbors: Vec<crate::retriever::Neighbor>,
}

#[derive(Debug, Clone, Serialize)]
struct PromptLine<'a> {
    id: &'a str,
    examples: Vec<&'a str>,
    prompt: String,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    stage: Stage,
    inputs: Vec<PathBuf>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig, stage: Stage) -> Self {
        Self {
            cfg,
            stage,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Declares a user-supplied input.
    fn input(&mut self, path: PathBuf) -> Result<PathBuf> {
        if !path.exists() {
            return Err(Error::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
        }
        self.inputs.push(path.clone());
        Ok(path)
    }

    /// Declares an artifact produced by an earlier stage.
    fn upstream(&mut self, name: &str, requires: Stage) -> Result<PathBuf> {
        let path = self.cfg.work(name);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                stage: self.stage.as_str(),
                requires: requires.as_str(),
                path,
            });
        }
        self.inputs.push(path.clone());
        Ok(path)
    }

    fn output(&mut self, name: &str, bytes: Vec<u8>) {
        self.outputs.push((self.cfg.work(name), bytes));
    }

    fn label(&self, p: &Path) -> String {
        let rel = p
            .strip_prefix(&self.cfg.base_dir)
            .ok()
            .filter(|r| !self.cfg.base_dir.as_os_str().is_empty() && !r.as_os_str().is_empty())
            .unwrap_or(p);
        rel.to_string_lossy().replace('\\', "/")
    }

    fn commit(self) -> Result<StageOutcome> {
        let work = self.cfg.work_dir();
        let mut manifest = Manifest::load_or_new(&work, self.cfg.to_json())?;
        let mut inputs = BTreeMap::new();
        for p in &self.inputs {
            inputs.insert(self.label(p), sha256_file(p)?);
        }
        let mut written = Vec::new();
        for (path, bytes) in &self.outputs {
            atomic_write(path, bytes)?;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            manifest.artifacts.insert(
                name,
                ArtifactEntry {
                    stage: self.stage.as_str().to_string(),
                    sha256: sha256_hex(bytes),
                    inputs: inputs.clone(),
                },
            );
            written.push(path.clone());
        }
        manifest.save(&work)?;
        Ok(StageOutcome { written, skipped: false })
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn jsonl_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("serializable"));
        s.push('\n');
    }
    s.into_bytes()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

fn read_corpus(path: &Path) -> Result<Vec<ParsedSentence>> {
    let sentences = parse_conllu(&read_text(path)?)?;
    if sentences.len() < 2 {
        return Err(Error::Data(format!("{}: need at least two sentences", path.display())));
    }
    let mut seen = HashSet::new();
    if let Some(s) = sentences.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(Error::Data(format!("{}: duplicate sentence id {}", path.display(), s.id)));
    }
    Ok(sentences)
}

fn read_records(path: &Path) -> Result<Vec<MetaphorRecord>> {
    Ok(load_mci_records(path, Strictness::Abort)?.records)
}

/// Token embeddings for `sentences`, in corpus order: read from `file` when
/// given (`.emb`/`.bin` as `EMB1`, anything else as JSON lines), otherwise
/// produced by the hash embedder.
pub fn load_token_embeddings(
    file: Option<&Path>,
    sentences: &[ParsedSentence],
    dim: usize,
    seed: u64,
) -> Result<Vec<TokenEmbeddings>> {
    let Some(path) = file else {
        let emb = HashEmbedder::new(dim, seed);
        return sentences
            .iter()
            .map(|s| emb.embed_sentence(s).map_err(Error::from))
            .collect();
    };
    let binary = matches!(path.extension().and_then(|e| e.to_str()), Some("emb" | "bin"));
    let all = if binary {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_embeddings_bin(&mut std::io::BufReader::new(f)).map_err(|e| Error::io(path, e))?
    } else {
        read_embeddings_jsonl(&read_text(path)?)?
    };
    gat::validate_corpus(&all)?;
    let mut by_id: HashMap<String, TokenEmbeddings> = all.into_iter().map(|e| (e.sentence_id.clone(), e)).collect();
    sentences
        .iter()
        .map(|s| {
            let e = by_id
                .remove(&s.id)
                .ok_or_else(|| Error::Data(format!("{}: no embeddings for sentence {}", path.display(), s.id)))?;
            if e.len() != s.len() {
                return Err(Error::Data(format!(
                    "sentence {}: {} token vectors for {} tokens",
                    s.id,
                    e.len(),
                    s.len()
                )));
            }
            Ok(e)
        })
        .collect()
}

fn template(cfg: &RunConfig, kind: TemplateKind, ctx: &mut Ctx<'_>) -> Result<PromptTemplate> {
    if let Some(dir) = cfg.optional_path(&cfg.paths.templates) {
        let path = dir.join(format!("{}.txt", kind.as_str()));
        if path.exists() {
            let path = ctx.input(path)?;
            return PromptTemplate::from_file(kind, &path);
        }
    }
    Ok(PromptTemplate::builtin(kind))
}

fn preprocess(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Preprocess);
    let raw = ctx.input(cfg.resolve(&cfg.paths.raw))?;
    let spec = cfg.client_spec();
    if let Some(p) = spec.endpoint.strip_prefix("mock:") {
        ctx.input(PathBuf::from(p))?;
    }
    let items = read_raw_items(&read_text(&raw)?)?;
    let tpl = template(cfg, TemplateKind::DistractorGen, &mut ctx)?;
    let client = spec.connect()?;
    let opts = PipelineOptions {
        seed: cfg.run.seed,
        max_retries: cfg.client.max_retries,
        jobs: cfg.run.jobs,
        strict: cfg.run.strict,
    };
    let out = preprocess_pipeline(&items, client.as_ref(), &tpl, &opts)?;
    log::info!("preprocess: {} of {} items assembled", out.report.succeeded, out.report.total);
    if out.records.is_empty() && !items.is_empty() {
        let client_only = out.report.failures.iter().all(|f| f.client_failure);
        let err = promptgen::PipelineError::ItemFailed {
            id: out.report.failures[0].id.clone(),
            reason: "every item failed".into(),
            client: client_only,
        };
        return Err(err.into());
    }
    ctx.output(names::RECORDS, jsonl_bytes(&out.records));
    ctx.output(names::FAILURES, json_bytes(&out.report));
    ctx.commit()
}

fn profiles(sentences: &[ParsedSentence]) -> Result<Vec<SentenceProfile>> {
    let pos = Inventory::universal_pos();
    let rel = Inventory::universal_relations();
    Ok(sentences
        .iter()
        .map(|s| SentenceProfile::build(s, &pos, &rel))
        .collect::<std::result::Result<_, _>>()?)
}

fn featmat(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Featmat);
    let corpus = ctx.input(cfg.resolve(&cfg.paths.corpus))?;
    let sentences = read_corpus(&corpus)?;
    let profiles = profiles(&sentences)?;
    let sim = similarity_matrix(&profiles, cfg.features.sigma(), cfg.features.transform()?)?;
    let matrices: Vec<_> = profiles.into_iter().map(|p| p.features).collect();
    let mut feat = Vec::new();
    write_feature_matrices(&mut feat, &matrices).map_err(|e| Error::io(cfg.work(names::FEATURES), e))?;
    let mut simb = Vec::new();
    write_similarity_matrix(&mut simb, &sim).map_err(|e| Error::io(cfg.work(names::SIMILARITY), e))?;
    ctx.output(names::FEATURES, feat);
    ctx.output(names::SIMILARITY, simb);
    ctx.commit()
}

fn posneg(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Posneg);
    let sim_path = ctx.upstream(names::SIMILARITY, Stage::Featmat)?;
    let corpus = ctx.input(cfg.resolve(&cfg.paths.corpus))?;
    let sentences = read_corpus(&corpus)?;
    let f = std::fs::File::open(&sim_path).map_err(|e| Error::io(&sim_path, e))?;
    let sim = read_similarity_matrix(&mut std::io::BufReader::new(f)).map_err(|e| Error::io(&sim_path, e))?;
    if sim.n() != sentences.len() {
        return Err(Error::Data(format!(
            "similarity matrix covers {} sentences, corpus has {}; rerun stage featmat",
            sim.n(),
            sentences.len()
        )));
    }
    let matrix = build_posneg_matrix(&sim, cfg.features.k_percent)?;
    let file = PosNegFile {
        ids: sentences.iter().map(|s| s.id.clone()).collect(),
        matrix,
    };
    ctx.output(names::POSNEG, json_bytes(&file));
    ctx.commit()
}

fn embeddings_for(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<(Vec<ParsedSentence>, Vec<TokenEmbeddings>)> {
    let corpus = ctx.input(cfg.resolve(&cfg.paths.corpus))?;
    let sentences = read_corpus(&corpus)?;
    let file = match cfg.optional_path(&cfg.paths.embeddings) {
        Some(p) => Some(ctx.input(p)?),
        None => None,
    };
    let emb = load_token_embeddings(file.as_deref(), &sentences, cfg.encoder.embed_dim, cfg.run.seed)?;
    Ok((sentences, emb))
}

fn train(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Train);
    let pn_path = ctx.upstream(names::POSNEG, Stage::Posneg)?;
    let (sentences, emb) = embeddings_for(cfg, &mut ctx)?;
    let pn: PosNegFile = read_json(&pn_path)?;
    if pn.ids.iter().ne(sentences.iter().map(|s| &s.id)) {
        return Err(Error::Data("posneg ids differ from the corpus; rerun stage posneg".into()));
    }
    pn.matrix.validate()?;
    let out = gat::train(&emb, &pn.matrix, &cfg.encoder_config(), &cfg.train_config())?;
    if let (Some(first), Some(last)) = (out.trace.first(), out.trace.last()) {
        log::info!("train: mean loss {:.6} -> {:.6} over {} epochs", first.mean_loss, last.mean_loss, out.trace.len());
    }
    let mut model = Vec::new();
    write_params(&mut model, &out.params).map_err(|e| Error::io(cfg.work(names::MODEL), e))?;
    ctx.output(names::MODEL, model);
    ctx.output(names::TRACE, json_bytes(&out.trace));
    ctx.commit()
}

fn encode(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Encode);
    let model_path = ctx.upstream(names::MODEL, Stage::Train)?;
    let (_, emb) = embeddings_for(cfg, &mut ctx)?;
    let f = std::fs::File::open(&model_path).map_err(|e| Error::io(&model_path, e))?;
    let params = read_params(&mut std::io::BufReader::new(f)).map_err(|e| Error::io(&model_path, e))?;
    let reps = emb
        .iter()
        .map(|e| encode_sentence(e, &params))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    ctx.output(names::REPS, write_reps_jsonl(&reps).into_bytes());
    ctx.commit()
}

fn index(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Index);
    let reps_path = ctx.upstream(names::REPS, Stage::Encode)?;
    let rec_path = ctx.upstream(names::RECORDS, Stage::Preprocess)?;
    let records: HashSet<String> = read_records(&rec_path)?.into_iter().map(|r| r.id).collect();
    let reps = gat::read_reps_jsonl(&read_text(&reps_path)?)?;
    let kept: Vec<_> = reps.into_iter().filter(|r| records.contains(&r.sentence_id)).collect();
    if kept.len() < records.len() {
        log::warn!("index: {} records have no sentence vector", records.len() - kept.len());
    }
    let idx = build_index(&kept, cfg.retrieval.metric)?;
    let mut bytes = Vec::new();
    write_index(&mut bytes, &idx).map_err(|e| Error::io(cfg.work(names::INDEX), e))?;
    ctx.output(names::INDEX, bytes);
    ctx.commit()
}

fn retrieve(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Retrieve);
    let idx_path = ctx.upstream(names::INDEX, Stage::Index)?;
    let rec_path = ctx.upstream(names::RECORDS, Stage::Preprocess)?;
    let f = std::fs::File::open(&idx_path).map_err(|e| Error::io(&idx_path, e))?;
    let idx = read_index(&mut std::io::BufReader::new(f)).map_err(|e| Error::io(&idx_path, e))?;
    let k = cfg.retrieval.k_examples;
    if idx.len() <= k {
        return Err(Error::Data(format!("index holds {} sentences, need more than k = {k}", idx.len())));
    }
    let mut lines = Vec::new();
    for r in read_records(&rec_path)? {
        if idx.vector(&r.id).is_none() {
            continue;
        }
        lines.push(RetrievedLine {
            neighbors: idx.nearest_to_id(&r.id, k)?,
            id: r.id,
        });
    }
    ctx.output(names::RETRIEVED, jsonl_bytes(&lines));
    ctx.commit()
}

fn prompt(cfg: &RunConfig) -> Result<StageOutcome> {
    let mut ctx = Ctx::new(cfg, Stage::Prompt);
    let ret_path = ctx.upstream(names::RETRIEVED, Stage::Retrieve)?;
    let rec_path = ctx.upstream(names::RECORDS, Stage::Preprocess)?;
    let tpl = template(cfg, TemplateKind::TaskIcl, &mut ctx)?;
    let records = read_records(&rec_path)?;
    let by_id: HashMap<&str, &MetaphorRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut out = Vec::new();
    for (i, line) in read_text(&ret_path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: RetrievedLine = serde_json::from_str(line).map_err(|source| Error::Json {
            context: format!("{} line {}", ret_path.display(), i + 1),
            source,
        })?;
        let find = |id: &str| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| Error::Data(format!("retrieved id {id} has no record; rerun stage retrieve")))
        };
        let query = find(&r.id)?;
        let examples = r.neighbors.iter().map(|n| find(&n.id).cloned()).collect::<Result<Vec<_>>>()?;
        let text = render_task_prompt(query, &examples, &tpl)?;
        out.push((query.id.clone(), examples.iter().map(|e| e.id.clone()).collect::<Vec<_>>(), text));
    }
    let lines: Vec<PromptLine<'_>> = out
        .iter()
        .map(|(id, ex, p)| PromptLine {
            id,
            examples: ex.iter().map(String::as_str).collect(),
            prompt: p.clone(),
        })
        .collect();
    ctx.output(names::PROMPTS, jsonl_bytes(&lines));
    ctx.commit()
}

fn evaluate(cfg: &RunConfig) -> Result<StageOutcome> {
    let Some(pred_path) = cfg.optional_path(&cfg.paths.predictions) else {
        log::info!("eval: no predictions configured, skipping");
        return Ok(StageOutcome { written: Vec::new(), skipped: true });
    };
    let mut ctx = Ctx::new(cfg, Stage::Eval);
    let rec_path = ctx.upstream(names::RECORDS, Stage::Preprocess)?;
    let pred_path = ctx.input(pred_path)?;
    let records = read_records(&rec_path)?;
    let preds = eval::read_predictions(&read_text(&pred_path)?)?;
    let report = match preds.mode {
        PredictionMode::Label => EvalReport {
            accuracy: Some(eval::score_choices(&records, &preds)?),
            ..Default::default()
        },
        PredictionMode::Triplet => EvalReport {
            components: Some(eval::component_accuracy(&records, &preds, Normalizer::Trim)?),
            errors: Some(eval::error_breakdown(&records, &preds, Normalizer::Trim)?),
            ..Default::default()
        },
    };
    let mut bytes = report.to_json().into_bytes();
    bytes.push(b'\n');
    ctx.output(names::EVAL, bytes);
    ctx.commit()
}

/// Runs one stage. Upstream artifacts must already exist in the work
/// directory.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<StageOutcome> {
    cfg.validate()?;
    log::info!("stage {stage}");
    match stage {
        Stage::Preprocess => preprocess(cfg),
        Stage::Featmat => featmat(cfg),
        Stage::Posneg => posneg(cfg),
        Stage::Train => train(cfg),
        Stage::Encode => encode(cfg),
        Stage::Index => index(cfg),
        Stage::Retrieve => retrieve(cfg),
        Stage::Prompt => prompt(cfg),
        Stage::Eval => evaluate(cfg),
    }
}
