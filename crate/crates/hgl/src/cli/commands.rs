use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use hgl_core::blocking::{self, Block, ClassifierConfig, Chunker};
use hgl_core::corpus::synth::{self, SynthConfig, SynthError};
use hgl_core::corpus::{estimate_noise_rate, weak_label, NoiseEntry, NoiseProfile};
use hgl_core::evaluation::{
    corpus_spans, export_denoised, pr_auc, precision_at_recall, span_f1, RankedPool, RankedResult, RECALL_LEVELS,
};
use hgl_core::training::{self, group_by_type, score_instances, ConfidenceSource, EpochRecord};
use hgl_core::{Accuracy, Corpus, DenoiserConfig, Dictionary, Instance, LossKind, TrainConfig};

use super::*;
use crate::formats::{self, corpus, dictionary, flat, instances, model, noise, report};

pub const MANIFEST: &str = "manifest.cfg";
pub const TIMING: &str = "timing.json";

fn require_files(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(Error::Data(format!("input file {} does not exist", p.display())));
        }
    }
    Ok(())
}

fn write_corpus_to(out: &mut Outputs, name: &str, c: &Corpus) -> Result<()> {
    let text = corpus::write_corpus(c).map_err(Error::Data)?;
    out.write(name, &text)
}

/// Writes the manifest and timing files, then commits the outputs.
fn finish(mut out: Outputs, command: &str, entries: Vec<(String, String)>, started: Instant) -> Result<()> {
    let mut all = vec![("command".to_string(), command.to_string())];
    all.extend(entries);
    let comments = vec![format!(
        "hgl {} (hgl-core {}); replay with: hgl {command} --config {MANIFEST}",
        env!("CARGO_PKG_VERSION"),
        hgl_core::VERSION
    )];
    out.write(MANIFEST, &flat::write_flat(&comments, &all))?;
    let timing = serde_json::json!({
        "command": command,
        "wall_seconds": started.elapsed().as_secs_f64(),
    });
    out.write(TIMING, &format!("{timing}\n"))?;
    out.commit();
    Ok(())
}

pub fn execute(command: &Command) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Synth(a) => synth(a, started),
        Command::Label(a) => label(a, started),
        Command::Estimate(a) => estimate(a, started),
        Command::Train(a) => train(a, started),
        Command::Block(a) => block(a, started),
        Command::Denoise(a) => denoise(a, started),
        Command::Eval(a) => eval(a, started),
    }
}

fn synth(a: &SynthArgs, started: Instant) -> Result<()> {
    let mut cfg = SynthConfig::default();
    for p in &a.param {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--param {p:?} is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| Error::Usage(e.to_string()))?;
    }
    let data = synth::generate(&cfg, a.seed).map_err(|e| match e {
        SynthError::Infeasible(_) => Error::Data(e.to_string()),
        _ => Error::Usage(e.to_string()),
    })?;
    let mut out = Outputs::create(&a.out, &[])?;
    write_corpus_to(&mut out, "train.bio", &data.train)?;
    write_corpus_to(&mut out, "dev.bio", &data.dev)?;
    out.write("dictionary.tsv", &dictionary::write_dictionary(&data.dictionary))?;
    let mut entries = flat_entries(a);
    entries.extend(cfg.entries());
    finish(out, "synth", entries, started)
}

fn load_pair(corpus: &Path, dict: &Path) -> Result<(Corpus, Dictionary)> {
    require_files(&[corpus, dict])?;
    Ok((formats::load_corpus(corpus)?, formats::load_dictionary(dict)?))
}

fn label(a: &LabelArgs, started: Instant) -> Result<()> {
    let (c, d) = load_pair(&a.corpus, &a.dictionary)?;
    let inst = weak_label(&c, &d);
    for (ty, pool) in group_by_type(&inst) {
        eprintln!("{ty}: {} instances", pool.len());
    }
    let mut out = Outputs::create(&a.out, &[&a.corpus, &a.dictionary])?;
    out.write("instances.tsv", &instances::write_instances(&c, inst.iter().map(|i| (i, None))))?;
    finish(out, "label", flat_entries(a), started)
}

fn estimate(a: &EstimateArgs, started: Instant) -> Result<()> {
    require_files(&[&a.dev, &a.corpus, &a.dictionary])?;
    let dict = formats::load_dictionary(&a.dictionary)?;
    let dev = formats::load_corpus(&a.dev)?;
    let train = formats::load_corpus(&a.corpus)?;
    let dev_inst = weak_label(&dev, &dict);
    let mut profile = NoiseProfile::new();
    for (ty, pool) in group_by_type(&weak_label(&train, &dict)) {
        let entry = estimate_noise_rate(&dev_inst, &ty, pool.len()).map_err(|e| Error::Data(e.to_string()))?;
        eprintln!("{ty}: accuracy {} over {} training instances", entry.accuracy, entry.population);
        profile.insert(ty, entry);
    }
    let mut out = Outputs::create(&a.out, &[&a.dev, &a.corpus, &a.dictionary])?;
    out.write("noise.tsv", &noise::write_profile(&profile))?;
    finish(out, "estimate", flat_entries(a), started)
}

/// Accuracy per pooled type: `--noise-rate` first, then the profile file.
/// Populations are the pool sizes.
fn resolve_profile(args: &NoiseArgs, pools: &BTreeMap<String, Vec<Instance>>) -> Result<NoiseProfile> {
    let file = match &args.noise {
        Some(p) => formats::load_profile(p)?,
        None => NoiseProfile::new(),
    };
    let mut overrides = BTreeMap::new();
    for s in &args.noise_rate {
        let (ty, acc) = noise::parse_override(s).map_err(Error::Usage)?;
        overrides.insert(ty, acc);
    }
    pools
        .iter()
        .map(|(ty, pool)| {
            let accuracy = overrides
                .get(ty)
                .copied()
                .or_else(|| file.get(ty).map(|e| e.accuracy))
                .ok_or_else(|| Error::Data(format!("no noise rate for type {ty:?}; pass --noise or --noise-rate")))?;
            Ok((
                ty.clone(),
                NoiseEntry {
                    accuracy,
                    population: pool.len(),
                },
            ))
        })
        .collect()
}

fn train_config(m: &ModelArgs) -> TrainConfig {
    let source = |c: Confidences| match c {
        Confidences::PerBatch => ConfidenceSource::PerBatch,
        Confidences::EpochFrozen => ConfidenceSource::EpochFrozen,
    };
    TrainConfig {
        batch_size: m.batch_size,
        learning_rate: m.learning_rate,
        epochs: m.epochs,
        seed: m.seed,
        loss: match m.loss {
            Loss::Hgl => LossKind::Hgl,
            Loss::Em => LossKind::InstanceEm,
            Loss::Xr => LossKind::Xr,
            Loss::Naive => LossKind::Naive,
        },
        ranking: source(m.ranking),
        em_targets: source(m.em_targets),
        denoiser: DenoiserConfig {
            dim: m.dim,
            hidden: m.hidden.clone(),
            context_window: m.context_window,
        },
        ..TrainConfig::default()
    }
}

fn chunker(c: ChunkerArg) -> Chunker {
    match c {
        ChunkerArg::Capitalized => Chunker::Capitalized,
        ChunkerArg::Auxiliary => Chunker::Auxiliary,
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("block fraction {f} is outside (0, 1]")))
    }
}

fn make_block(c: &Corpus, d: &Dictionary, ty: &str, fraction: f64, ch: Chunker, seed: u64) -> Result<Block> {
    let cands = blocking::extract_candidates(c, d, ty, ch);
    let trained = blocking::train_phrase_classifier(d, ty, &cands, &ClassifierConfig::default(), seed)?;
    for w in &trained.warnings {
        eprintln!("warning: {w:?}");
    }
    Ok(blocking::build_block(ty, cands, &trained.classifier, fraction)?)
}

fn log_line(r: &EpochRecord) -> String {
    let aux = r.mean_aux_loss.map_or_else(|| "-".to_string(), |v| format!("{v}"));
    format!(
        "{}\t{}\t{}\t{}\t{}\t{aux}\t{}\n",
        r.entity_type, r.epoch, r.batches, r.mean_loss, r.mean_target_mass, r.clamped
    )
}

fn train(a: &TrainArgs, started: Instant) -> Result<()> {
    let (c, d) = load_pair(&a.corpus, &a.dictionary)?;
    if let Some(p) = &a.noise.noise {
        require_files(&[p])?;
    }
    if let Some(f) = a.block_fraction {
        check_fraction(f)?;
        if a.block_accuracy.is_none() && a.dev.is_none() {
            return Err(Error::Usage("blocking needs --block-accuracy or --dev".into()));
        }
    }
    let dev = match (&a.dev, a.block_fraction) {
        (Some(p), Some(_)) => {
            require_files(&[p])?;
            Some(formats::load_corpus(p)?)
        }
        _ => None,
    };
    let config = train_config(&a.model);
    config.validate()?;
    let pools = group_by_type(&weak_label(&c, &d));
    if pools.is_empty() {
        return Err(Error::Data("the dictionary matches nothing in the corpus".into()));
    }
    let profile = resolve_profile(&a.noise, &pools)?;
    let mut log = String::from("type\tepoch\tbatches\tmean_loss\tmean_target_mass\tmean_aux_loss\tclamped\n");
    let mut observer = |r: &EpochRecord| {
        eprintln!("{} epoch {}: loss {:.6}", r.entity_type, r.epoch, r.mean_loss);
        log.push_str(&log_line(r));
    };
    let mut models = Vec::new();
    let mut blocks = Vec::new();
    for (ty, pool) in &pools {
        let accuracy = profile[ty].accuracy;
        let outcome = match a.block_fraction {
            None => training::train_type(&c, pool, accuracy, &config, &mut observer)?,
            Some(f) => {
                let block = make_block(&c, &d, ty, f, chunker(a.chunker), a.model.seed)?;
                let block_acc = match (a.block_accuracy, &dev) {
                    (Some(v), _) => Accuracy::snap(v).map_err(|e| Error::Usage(e.to_string()))?,
                    (None, Some(dev)) => block.estimate_accuracy(dev, &d, chunker(a.chunker))?,
                    (None, None) => unreachable!("checked above"),
                };
                let block = block.with_accuracy(block_acc);
                let o = blocking::joint_train(&c, pool, accuracy, &block, a.block_lambda, &config, &mut observer)?;
                blocks.push(block);
                o
            }
        };
        models.push(outcome.model);
    }
    let mut inputs: Vec<&Path> = vec![&a.corpus, &a.dictionary];
    inputs.extend(a.noise.noise.as_deref());
    inputs.extend(a.dev.as_deref());
    let mut out = Outputs::create(&a.out, &inputs)?;
    out.write("models.json", &model::write_models(&models))?;
    out.write("noise.tsv", &noise::write_profile(&profile))?;
    out.write("log.tsv", &log)?;
    if !blocks.is_empty() {
        out.write("blocks.tsv", &report::write_blocks(&blocks))?;
    }
    finish(out, "train", flat_entries(a), started)
}

fn block(a: &BlockArgs, started: Instant) -> Result<()> {
    check_fraction(a.fraction)?;
    let (c, d) = load_pair(&a.corpus, &a.dictionary)?;
    let dev = match &a.dev {
        Some(p) => {
            require_files(&[p])?;
            Some(formats::load_corpus(p)?)
        }
        None => None,
    };
    let types: Vec<String> = if a.types.is_empty() {
        d.types().map(String::from).collect()
    } else {
        a.types.clone()
    };
    let mut blocks = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut blocked = Vec::new();
    for ty in &types {
        let mut b = make_block(&c, &d, ty, a.fraction, chunker(a.chunker), a.seed)?;
        if let Some(dev) = &dev {
            b = b.clone().with_accuracy(b.estimate_accuracy(dev, &d, chunker(a.chunker))?);
        }
        let mut s = serde_json::json!({
            "candidates": b.ranked.len(),
            "admitted": b.admitted,
            "occurrences": b.instances(&c).len(),
        });
        if let Some(acc) = b.accuracy {
            s["accuracy"] = serde_json::json!(acc.value());
        }
        if c.has_gold() {
            let (covered, total) = blocking::false_negative_coverage(&b, &c, &d);
            s["false_negatives"] = serde_json::json!(total);
            s["false_negatives_covered"] = serde_json::json!(covered);
        }
        summary.insert(ty.clone(), s);
        blocked.extend(b.instances(&c));
        blocks.push(b);
    }
    let mut inputs: Vec<&Path> = vec![&a.corpus, &a.dictionary];
    inputs.extend(a.dev.as_deref());
    let mut out = Outputs::create(&a.out, &inputs)?;
    out.write("blocks.tsv", &report::write_blocks(&blocks))?;
    out.write("blocked.tsv", &instances::write_instances(&c, blocked.iter().map(|i| (i, None))))?;
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(summary)).expect("summary serialises");
    out.write("block_summary.json", &format!("{text}\n"))?;
    finish(out, "block", flat_entries(a), started)
}

fn denoise(a: &DenoiseArgs, started: Instant) -> Result<()> {
    let (c, d) = load_pair(&a.corpus, &a.dictionary)?;
    require_files(&[&a.models])?;
    let models =
        model::parse_models(&formats::read_text(&a.models)?).map_err(|e| Error::Data(format!("{}: {e}", a.models.display())))?;
    let pools = group_by_type(&weak_label(&c, &d));
    let profile = resolve_profile(&a.noise, &pools)?;
    let mut ranked = BTreeMap::new();
    for (ty, pool) in &pools {
        let m = models
            .get(ty)
            .ok_or_else(|| Error::Data(format!("no model for type {ty:?} in {}", a.models.display())))?;
        let scores = score_instances(m, &c, pool)?;
        ranked.insert(ty.clone(), RankedResult::from_instances(pool, &scores)?);
    }
    let ranked_pools: BTreeMap<String, RankedPool> = pools
        .iter()
        .map(|(ty, pool)| {
            (
                ty.clone(),
                RankedPool {
                    instances: pool,
                    ranked: &ranked[ty],
                },
            )
        })
        .collect();
    let denoised = export_denoised(&c, &ranked_pools, &profile)?;
    let rows = pools.iter().flat_map(|(ty, pool)| {
        ranked[ty]
            .entries
            .iter()
            .map(move |e| (&pool[e.index], Some(e.score)))
    });
    let mut inputs: Vec<&Path> = vec![&a.corpus, &a.dictionary, &a.models];
    inputs.extend(a.noise.noise.as_deref());
    let mut out = Outputs::create(&a.out, &inputs)?;
    out.write("scores.tsv", &instances::write_instances(&c, rows))?;
    write_corpus_to(&mut out, "denoised.bio", &denoised)?;
    out.write("noise.tsv", &noise::write_profile(&profile))?;
    finish(out, "denoise", flat_entries(a), started)
}

fn file_safe(ty: &str) -> Result<&str> {
    if !ty.is_empty() && ty.chars().all(|ch| ch.is_ascii_alphanumeric() || "_.-".contains(ch)) && ty != "." && ty != ".." {
        Ok(ty)
    } else {
        Err(Error::Data(format!("entity type {ty:?} cannot name a curve file")))
    }
}

fn eval(a: &EvalArgs, started: Instant) -> Result<()> {
    require_files(&[&a.scores])?;
    let gold = match &a.corpus {
        Some(p) => {
            require_files(&[p])?;
            Some(formats::load_corpus(p)?)
        }
        None => None,
    };
    let predicted = match &a.predicted {
        Some(p) => {
            require_files(&[p])?;
            Some(formats::load_corpus(p)?)
        }
        None => None,
    };
    let text = formats::read_text(&a.scores)?;
    let mut rows = instances::parse_scored(&text).map_err(|e| Error::parse(&a.scores, e))?;
    if let Some(g) = &gold {
        for r in &mut rows {
            let s = g.sentences.get(r.sentence).ok_or_else(|| {
                Error::Data(format!("scores refer to sentence {} beyond the gold corpus", r.sentence))
            })?;
            if r.end > s.len() {
                return Err(Error::Data(format!("span {}..{} exceeds sentence {}", r.start, r.end, r.sentence)));
            }
            r.gold = s.is_gold(hgl_core::Span::new(r.start, r.end), &r.entity_type);
        }
    }
    let mut by_type: BTreeMap<&str, Vec<&instances::ScoredRow>> = BTreeMap::new();
    for r in &rows {
        by_type.entry(&r.entity_type).or_default().push(r);
    }
    let mut types = BTreeMap::new();
    let mut curves = Vec::new();
    for (ty, rs) in by_type {
        let scores: Vec<f64> = rs.iter().map(|r| r.score).collect();
        let flags: Vec<Option<bool>> = rs.iter().map(|r| r.gold).collect();
        let ranked = RankedResult::new(&scores, &flags)?;
        let curve = pr_auc(&ranked)?;
        let at = precision_at_recall(&ranked, &RECALL_LEVELS)?;
        let lengths: Vec<usize> = rs.iter().map(|r| r.end - r.start).collect();
        let token_at = precision_at_recall(&ranked.clone().with_weights(&lengths)?, &RECALL_LEVELS)?;
        types.insert(
            ty.to_string(),
            report::TypeMetrics {
                instances: rs.len(),
                positives: flags.iter().filter(|f| **f == Some(true)).count(),
                auc: curve.auc,
                precision_at_recall: report::levels_map(&at),
                token_precision_at_recall: report::levels_map(&token_at),
            },
        );
        curves.push((format!("pr-{}.csv", file_safe(ty)?), report::write_pr_csv(&curve)));
    }
    let span = match (&gold, &predicted) {
        (Some(g), Some(p)) => Some(span_f1(&corpus_spans(p), &corpus_spans(g)).into()),
        _ => None,
    };
    let metrics = report::MetricsReport { types, span };
    let mut inputs: Vec<&Path> = vec![&a.scores];
    inputs.extend(a.corpus.as_deref());
    inputs.extend(a.predicted.as_deref());
    let mut out = Outputs::create(&a.out, &inputs)?;
    out.write("metrics.json", &report::write_report(&metrics))?;
    for (name, csv) in &curves {
        out.write(name, csv)?;
    }
    finish(out, "eval", flat_entries(a), started)
}
