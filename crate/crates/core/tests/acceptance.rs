use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use laida::corpus::{dataset_stats, ComponentTriplet, CorpusStats, Label, MetaphorRecord, ParsedSentence, Token, DEFAULT_COMPARATORS};
use laida::eval::{component_accuracy, error_breakdown, score_choices, ErrorType, Normalizer, Prediction, Predictions};
use laida::gat::{
    batch_loss_and_grad, contrastive_loss, encode_sentence, forward, numerical_gradient, train, ContrastiveForm, EncoderConfig,
    GatParams, HashEmbedder, TrainConfig,
};
use laida::lingfeat::{build_posneg_matrix, positive_count, sentence_distance, Inventory, PosNegMatrix, SentenceProfile, Sigma, SimilarityMatrix};
use laida::promptgen::assemble_options;
use laida::retriever::{build_index, Metric};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- match score

const POS: [&str; 5] = ["NOUN", "VERB", "ADJ", "ADV", "PRON"];
const REL: [&str; 5] = ["nsubj", "obj", "amod", "advmod", "nmod"];

fn random_tree(id: &str, len: usize, rng: &mut ChaCha8Rng) -> ParsedSentence {
    let mut order: Vec<usize> = (1..=len).collect();
    order.shuffle(rng);
    let mut heads = vec![0usize; len + 1];
    for k in 1..len {
        heads[order[k]] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=len)
        .map(|i| Token {
            index: i,
            surface: format!("w{i}"),
            pos_tag: POS[rng.gen_range(0..POS.len())].into(),
            head_index: heads[i],
            dep_relation: if heads[i] == 0 { "root".into() } else { REL[rng.gen_range(0..REL.len())].into() },
        })
        .collect();
    ParsedSentence { id: id.into(), tokens }
}

fn oracle_central(s: &ParsedSentence) -> Vec<usize> {
    let degree = |i: usize| {
        let own = usize::from(s.tokens[i - 1].head_index != 0);
        own + s.tokens.iter().filter(|t| t.head_index == i).count()
    };
    let max = (1..=s.len()).map(degree).max().unwrap();
    (1..=s.len()).filter(|&i| degree(i) == max).collect()
}

fn arc(s: &ParsedSentence, i: usize, k: usize) -> Option<&str> {
    let (ti, tk) = (&s.tokens[i - 1], &s.tokens[k - 1]);
    if ti.head_index == k {
        Some(&ti.dep_relation)
    } else if tk.head_index == i {
        Some(&tk.dep_relation)
    } else {
        None
    }
}

fn oracle_distance(s1: &ParsedSentence, s2: &ParsedSentence) -> f64 {
    let (c1, c2) = (oracle_central(s1), oracle_central(s2));
    let m = s1.len().min(s2.len());
    let sigma = (m as f64 / 4.0).max(1.0);
    let mut total = 0.0;
    for &a in &c1 {
        for &b in &c2 {
            for k in 1..=m {
                let pos_eq = s1.tokens[a - 1].pos_tag == s2.tokens[b - 1].pos_tag && s1.tokens[k - 1].pos_tag == s2.tokens[k - 1].pos_tag;
                if pos_eq && arc(s1, a, k) == arc(s2, b, k) {
                    let d = k as f64 - a as f64;
                    total += (-(d * d) / (2.0 * sigma * sigma)).exp();
                }
            }
        }
    }
    total / (c1.len() * c2.len()) as f64
}

fn match_score_oracle() -> Outcome {
    let (pos, rel) = (Inventory::universal_pos(), Inventory::universal_relations());
    let profile = |s: &ParsedSentence| SentenceProfile::build(s, &pos, &rel).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for p in 0..20 {
        let s1 = random_tree("a", rng.gen_range(1..=8), &mut rng);
        let s2 = random_tree("b", rng.gen_range(1..=8), &mut rng);
        let (p1, p2) = (profile(&s1), profile(&s2));
        ensure(p1.central.indices() == oracle_central(&s1).as_slice(), || format!("pair {p}: central words differ"))?;
        let got = sentence_distance(&p1.features, &p1.central, &p2.features, &p2.central, Sigma::Proportional).unwrap();
        let want = oracle_distance(&s1, &s2);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-12, || format!("pair {p}: {got} vs oracle {want}"))?;
    }
    for len in 3..=8 {
        // star tree: one hub, so exactly one central word
        let hub = rng.gen_range(1..=len);
        let tokens = (1..=len)
            .map(|i| Token {
                index: i,
                surface: format!("w{i}"),
                pos_tag: POS[i % POS.len()].into(),
                head_index: if i == hub { 0 } else { hub },
                dep_relation: if i == hub { "root".into() } else { REL[i % REL.len()].into() },
            })
            .collect();
        let s = ParsedSentence { id: "s".into(), tokens };
        let p = profile(&s);
        let got = sentence_distance(&p.features, &p.central, &p.features, &p.central, Sigma::Proportional).unwrap();
        let sigma = (len as f64 / 4.0).max(1.0);
        let closed: f64 = (1..=len)
            .map(|k| {
                let d = k as f64 - hub as f64;
                (-(d * d) / (2.0 * sigma * sigma)).exp()
            })
            .sum();
        ensure(got == closed, || format!("self-match l={len}: {got} vs closed form {closed}"))?;
    }
    Ok(format!("20 pairs, max |diff| {worst:.1e}; 6 self-matches exact"))
}

// ---------------------------------------------------------------- pos/neg

fn posneg_mining() -> Outcome {
    ensure(positive_count(11, 20.0) == 2, || "K=20, n=11 should give 2 positives".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows = 0;
    for n in [2usize, 6, 11, 50] {
        for k in [10u32, 20, 40] {
            // coarse scores so ties are common
            let scores: Vec<f64> = (0..n * n).map(|_| f64::from(rng.gen_range(0..5u8)) / 4.0).collect();
            let sim = SimilarityMatrix::new(n, scores.clone()).unwrap();
            let pn = build_posneg_matrix(&sim, f64::from(k)).unwrap();
            let take = ((k as usize * (n - 1)) / 100).max(1);
            for i in 0..n {
                let mut cols: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                cols.sort_by(|&a, &b| scores[i * n + b].partial_cmp(&scores[i * n + a]).unwrap());
                let mut pos = cols[..take].to_vec();
                let mut neg = cols[take..].to_vec();
                pos.sort_unstable();
                neg.sort_unstable();
                ensure(pn.positives(i) == pos.as_slice() && pn.negatives(i) == neg.as_slice(), || {
                    format!("n={n} K={k} row {i}: {:?} vs oracle {pos:?}", pn.positives(i))
                })?;
                rows += 1;
            }
            if n == 11 && k == 20 {
                ensure((0..n).all(|i| pn.positives(i).len() == 2), || "n=11 K=20 rows need 2 positives".into())?;
            }
        }
    }
    Ok(format!("{rows} rows over 12 (n, K) settings"))
}

// ---------------------------------------------------------------- gradients

fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn random_posneg(n: usize, rng: &mut ChaCha8Rng) -> PosNegMatrix {
    let positives = (0..n)
        .map(|i| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let take = rng.gen_range(1..others.len().max(2));
            let mut pos: Vec<usize> = others.choose_multiple(rng, take.min(others.len())).copied().collect();
            pos.sort_unstable();
            pos
        })
        .collect();
    PosNegMatrix::from_positive_sets(positives).unwrap()
}

fn gradient_check() -> Outcome {
    const STEP: f64 = 1e-5;
    let mut worst_loss = 0.0f64;
    let mut worst_enc = 0.0f64;
    let mut redraws = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let form = if seed % 2 == 0 { ContrastiveForm::Literal } else { ContrastiveForm::InfoNce };
        let b = rng.gen_range(3..=4);
        let d = rng.gen_range(2..=8);
        let pn = random_posneg(b, &mut rng);

        let reps: Vec<Array1<f64>> = (0..b).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let tau = 0.5;
        let out = contrastive_loss(&reps, &pn, tau, form).unwrap();
        let flat: Vec<f64> = reps.iter().flat_map(|r| r.iter().copied()).collect();
        let numeric = numerical_gradient(
            |x| {
                let r: Vec<Array1<f64>> = x.chunks(d).map(|c| Array1::from(c.to_vec())).collect();
                contrastive_loss(&r, &pn, tau, form).unwrap().loss
            },
            &flat,
            STEP,
        );
        let analytic: Vec<f64> = out.grads.iter().flat_map(|g| g.iter().copied()).collect();
        let e = max_rel_err(&analytic, &numeric);
        worst_loss = worst_loss.max(e);
        ensure(e < 1e-4, || format!("seed {seed}: loss gradient relative error {e:.2e}"))?;

        let enc = EncoderConfig { out_dim: rng.gen_range(2..=8), delta: 0.3, tau, ..Default::default() };
        let (params, batch) = loop {
            let params = GatParams::init(d, &enc, 0.6, &mut rng);
            let batch: Vec<Array2<f64>> = (0..b)
                .map(|_| {
                    let n = rng.gen_range(1..=5);
                    Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0))
                })
                .collect();
            let near_kink = batch.iter().any(|h| {
                let f = forward(h.view(), &params).unwrap();
                f.adjacency.iter().any(|a| (a - params.delta).abs() < 1e-3) || f.attention.logits.iter().any(|l| l.abs() < 1e-3)
            });
            if !near_kink {
                break (params, batch);
            }
            redraws += 1;
        };
        let views: Vec<ArrayView2<f64>> = batch.iter().map(|h| h.view()).collect();
        let res = batch_loss_and_grad(&params, &views, &pn, form).unwrap();
        let numeric = numerical_gradient(
            |x| batch_loss_and_grad(&params.with_flat(x), &views, &pn, form).unwrap().loss,
            &params.to_flat(),
            STEP,
        );
        let e = max_rel_err(&res.grads.to_flat(), &numeric);
        worst_enc = worst_enc.max(e);
        ensure(e < 1e-4, || format!("seed {seed}: encoder gradient relative error {e:.2e}"))?;
    }
    Ok(format!("50 seeds, max rel err loss {worst_loss:.1e}, encoder {worst_enc:.1e}, {redraws} redraws"))
}

// ---------------------------------------------------------------- training

fn training_sanity() -> Outcome {
    let per = 20;
    let emb = HashEmbedder::new(32, 7);
    let vocab = [["月", "光", "水", "银", "霜", "夜", "星", "云"], ["火", "山", "石", "铁", "风", "雷", "沙", "岩"]];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut corpus = Vec::new();
    for (c, words) in vocab.iter().enumerate() {
        for k in 0..per {
            let len = rng.gen_range(3..=7);
            let toks: Vec<&str> = (0..len).map(|_| words[rng.gen_range(0..words.len())]).collect();
            corpus.push(emb.embed_tokens(&format!("c{c}-{k:02}"), toks).unwrap());
        }
    }
    let n = corpus.len();
    let positives = (0..n).map(|i| (0..n).filter(|&j| j != i && j / per == i / per).collect()).collect();
    let pn = PosNegMatrix::from_positive_sets(positives).unwrap();
    let cfg = TrainConfig { epochs: 200, ..Default::default() };
    let out = train(&corpus, &pn, &EncoderConfig::default(), &cfg).map_err(|e| e.to_string())?;
    let (first, last) = (out.trace[0].mean_loss, out.trace[cfg.epochs - 1].mean_loss);
    ensure(last < first, || format!("mean loss did not fall: {first} -> {last}"))?;

    let reps: Vec<_> = corpus.iter().map(|e| encode_sentence(e, &out.params).unwrap()).collect();
    let index = build_index(&reps, Metric::Euclidean).unwrap();
    let good = reps
        .iter()
        .filter(|r| {
            let hits = index.nearest_to_id(&r.sentence_id, 3).unwrap();
            hits.iter().all(|h| h.id[..2] == r.sentence_id[..2])
        })
        .count();
    let share = good as f64 / n as f64;
    ensure(share >= 0.9, || format!("only {good}/{n} queries have an all-same-cluster top 3"))?;
    Ok(format!("loss {first:.4} -> {last:.4}; {good}/{n} queries with all top-3 same-cluster"))
}

// ---------------------------------------------------------------- retrieval

fn retrieval_exactness() -> Outcome {
    let (n, dim) = (10_000, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let reps: Vec<laida::gat::SentenceRep> = (0..n)
        .map(|i| laida::gat::SentenceRep {
            sentence_id: format!("v{i:05}"),
            e_lig: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        })
        .collect();
    let mut checked = 0;
    for metric in [Metric::Euclidean, Metric::Cosine] {
        let index = build_index(&reps, metric).unwrap();
        for q in 0..12 {
            let query: Vec<f64> = if q % 2 == 0 {
                reps[q * 700].e_lig.to_vec()
            } else {
                (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let exclude = (q % 2 == 0).then(|| reps[q * 700].sentence_id.as_str());
            let mut all: Vec<(f64, &str)> = reps
                .iter()
                .filter(|r| Some(r.sentence_id.as_str()) != exclude)
                .map(|r| {
                    let v = &r.e_lig;
                    let s = match metric {
                        Metric::Euclidean => v.iter().zip(&query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
                        Metric::Cosine => {
                            let dot: f64 = v.iter().zip(&query).map(|(a, b)| a * b).sum();
                            let na: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                            let nb: f64 = query.iter().map(|b| b * b).sum::<f64>().sqrt();
                            dot / (na * nb)
                        }
                    };
                    (s, r.sentence_id.as_str())
                })
                .collect();
            all.sort_by(|a, b| {
                let ord = a.0.partial_cmp(&b.0).unwrap();
                let ord = if metric == Metric::Cosine { ord.reverse() } else { ord };
                ord.then(a.1.cmp(b.1))
            });
            for k in [1, 3, 10] {
                let got: Vec<String> = index.nearest(&query, k, exclude).unwrap().into_iter().map(|h| h.id).collect();
                let want: Vec<&str> = all[..k].iter().map(|x| x.1).collect();
                ensure(got == want, || format!("{metric} q{q} k={k}: {got:?} vs oracle {want:?}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} queries over 10^4 vectors, recall@k = 1.0"))
}

// ---------------------------------------------------------------- shuffle

fn shuffle_uniformity() -> Outcome {
    let gold = ComponentTriplet::new("t", "v", "g");
    let d = [ComponentTriplet::new("x", "v", "g"), ComponentTriplet::new("t", "x", "g"), ComponentTriplet::new("t", "v", "x")];
    let runs = 10_000u64;
    let tally = || {
        let mut counts = [0usize; 4];
        let mut all = Vec::with_capacity(runs as usize);
        for seed in 0..runs {
            let (options, answer) = assemble_options(&gold, &d, seed).unwrap();
            counts[answer.index()] += 1;
            all.push((options, answer));
        }
        (counts, all)
    };
    let (counts, first) = tally();
    let (_, second) = tally();
    ensure(first == second, || "rerun with the same seeds differs".into())?;
    for (label, &c) in Label::ALL.iter().zip(&counts) {
        let share = c as f64 / runs as f64;
        ensure((share - 0.25).abs() <= 0.02, || format!("label {} holds the answer {:.2}% of the time", label.as_str(), share * 100.0))?;
    }
    Ok(format!("answer counts A..D {counts:?}; rerun identical"))
}

// ---------------------------------------------------------------- eval tables

fn record(i: usize) -> MetaphorRecord {
    let gold = ComponentTriplet::new(format!("t{i}"), format!("v{i}"), format!("g{i}"));
    let d = [
        ComponentTriplet::new("x", format!("v{i}"), format!("g{i}")),
        ComponentTriplet::new(format!("t{i}"), "x", format!("g{i}")),
        ComponentTriplet::new(format!("t{i}"), format!("v{i}"), "x"),
    ];
    let (options, answer) = assemble_options(&gold, &d, i as u64).unwrap();
    MetaphorRecord { id: format!("r{i:04}"), sentence: format!("s{i}"), gold, options, answer }
}

fn corrupt(gold: &ComponentTriplet, wrong: [bool; 3]) -> ComponentTriplet {
    let pick = |bad: bool, s: &str| if bad { format!("{s}?") } else { s.to_string() };
    ComponentTriplet::new(pick(wrong[0], &gold.tenor), pick(wrong[1], &gold.vehicle), pick(wrong[2], &gold.ground))
}

fn eval_tables() -> Outcome {
    // Table 2: 933 of 1001 choices right.
    let recs: Vec<MetaphorRecord> = (0..1001).map(record).collect();
    let labels = recs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let label = if i < 933 { r.answer } else { Label::ALL[(r.answer.index() + 1) % 4] };
            Prediction::Label { id: r.id.clone(), label }
        })
        .collect();
    let acc = score_choices(&recs, &Predictions::new(labels).unwrap()).unwrap().accuracy.percent_str();
    ensure(acc == "93.21", || format!("Table 2 accuracy {acc}"))?;

    // Table 3: 785 records, 22 tenor, 21 vehicle and 46 ground misses.
    let recs: Vec<MetaphorRecord> = (0..785).map(record).collect();
    let preds = recs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let wrong = [i < 22, (22..43).contains(&i), (43..89).contains(&i)];
            Prediction::Triplet { id: r.id.clone(), triplet: corrupt(&r.gold, wrong) }
        })
        .collect();
    let c = component_accuracy(&recs, &Predictions::new(preds).unwrap(), Normalizer::Trim).unwrap();
    let t3 = [c.tenor.percent_str(), c.vehicle.percent_str(), c.ground.percent_str()];
    ensure(t3 == ["97.20", "97.32", "94.14"], || format!("Table 3 {t3:?}"))?;

    // Table 4: 64 erroneous records among 200.
    let plan = [
        (ErrorType::T, 3, [true, false, false]),
        (ErrorType::V, 0, [false, true, false]),
        (ErrorType::G, 23, [false, false, true]),
        (ErrorType::TV, 2, [true, true, false]),
        (ErrorType::TG, 11, [true, false, true]),
        (ErrorType::VG, 13, [false, true, true]),
        (ErrorType::TVG, 12, [true, true, true]),
    ];
    let masks: Vec<[bool; 3]> = plan.iter().flat_map(|&(_, n, m)| std::iter::repeat_n(m, n)).collect();
    let recs: Vec<MetaphorRecord> = (0..200).map(record).collect();
    let preds = recs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let wrong = masks.get(i).copied().unwrap_or([false; 3]);
            Prediction::Triplet { id: r.id.clone(), triplet: corrupt(&r.gold, wrong) }
        })
        .collect();
    let e = error_breakdown(&recs, &Predictions::new(preds).unwrap(), Normalizer::Trim).unwrap();
    let got: Vec<String> = ErrorType::ALL.iter().map(|&t| e.get(t).percent_str()).collect();
    let want = ["4.69", "0.00", "35.94", "3.12", "17.19", "20.31", "18.75"];
    ensure(e.errors == 64 && got == want, || format!("Table 4 {got:?}"))?;
    let rounded = e.ground_within_tenor_from_rounded().percent_str();
    let exact = e.ground_within_tenor().percent_str();
    ensure(rounded == "82.15", || format!("ground-within-tenor from table percentages {rounded}"))?;
    ensure(exact == "82.14", || format!("ground-within-tenor from counts {exact}"))?;
    Ok(format!("T2 {acc}; T3 {}; T4 {}; G|T {rounded} (counts basis {exact})", t3.join("/"), want.join("/")))
}

// ---------------------------------------------------------------- statistics

fn dataset_statistics() -> Outcome {
    let sentences = [
        "月亮像银盘",
        "他的心，像石头",
        "时间是金钱",
        "她笑了，仿佛春风，吹过田野",
        "书是人类的阶梯",
        "雪花如鹅毛",
        "生活是一首歌，我们都是歌手",
        "他宛如一座山",
        "夜色, 温柔",
        "知识是力量",
        "她的眼睛好像星星，闪闪发光",
        "城市是一片森林",
        "风犹如刀子，割着脸",
        "爱是港湾，也是灯塔，更是归途",
        "孩子是花朵",
        "云似棉花",
        "记忆是河流，流向远方",
        "他跑得像风一样快",
        "青春是火焰",
        "人生如梦，梦如人生",
    ];
    let records: Vec<MetaphorRecord> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| MetaphorRecord { id: format!("r{:02}", i + 1), sentence: (*s).into(), ..record(i) })
        .collect();
    let groups: HashMap<String, usize> =
        [("r03", 2), ("r05", 1), ("r07", 3), ("r14", 2), ("r17", 2)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let stats = dataset_stats(&records, DEFAULT_COMPARATORS, &groups);
    // hand count: 4 multi-group ids, 31 segments, 10 sentences with a comparator
    let want = CorpusStats { sentence_count: 20, single_pct: 0.8, multiple_pct: 0.2, avg_sub_sents: 1.55, simile_pct: 0.5 };
    ensure(stats == want, || format!("{stats:?}"))?;
    let json = serde_json::to_string(&stats).unwrap();
    let back: CorpusStats = serde_json::from_str(&json).unwrap();
    ensure(back == stats, || "JSON round trip changed the statistics".into())?;
    Ok(json)
}

// ---------------------------------------------------------------- end to end

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn end_to_end() -> Outcome {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo");
    let mut trees = Vec::new();
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &dirs {
        for f in ["laida.toml", "corpus.conllu", "raw.jsonl", "transcript.jsonl", "predictions.jsonl"] {
            std::fs::copy(demo.join(f), dir.path().join(f)).unwrap();
        }
        let out = Command::new(env!("CARGO_BIN_EXE_laida"))
            .args(["all", "--config", "laida.toml", "--seed", "42"])
            .current_dir(dir.path())
            .env_remove("LAIDA_LLM_ENDPOINT")
            .output()
            .unwrap();
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        trees.push(read_tree(&dir.path().join("work")));
    }
    ensure(trees[0].len() >= 12, || format!("only {} artifacts", trees[0].len()))?;
    ensure(trees[0] == trees[1], || {
        let diff: Vec<_> = trees[0].iter().filter(|(k, v)| trees[1].get(*k) != Some(v)).map(|(k, _)| k.display().to_string()).collect();
        format!("artifacts differ: {diff:?}")
    })?;
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    Ok(format!("{} artifacts, {bytes} bytes, identical across runs", trees[0].len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("match score vs brute-force oracle (tol 1e-12)", Duration::from_secs(1), match_score_oracle),
        ("pos/neg mining vs full-sort oracle", Duration::from_secs(1), posneg_mining),
        ("gradient check, 50 seeds (rel err < 1e-4)", Duration::from_secs(30), gradient_check),
        ("training sanity, 200 epochs (>= 90% same-cluster)", Duration::from_secs(120), training_sanity),
        ("retrieval exactness on 10^4 vectors", Duration::from_secs(30), retrieval_exactness),
        ("option shuffle uniformity (25% +/- 2%)", Duration::from_secs(5), shuffle_uniformity),
        ("eval table reproduction", Duration::from_secs(1), eval_tables),
        ("dataset statistics fixture", Duration::from_secs(1), dataset_statistics),
        ("end-to-end determinism on the demo", Duration::from_secs(180), end_to_end),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match outcome {
            Ok(detail) if took <= budget => Ok(detail),
            Ok(detail) => Err(format!("over budget; {detail}")),
            Err(e) => Err(e),
        };
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!("{tag} {name} [{:.3}s / {}s] {detail}", took.as_secs_f64(), budget.as_secs());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
