use super::*;
use crate::corpus::synth::{generate, SynthConfig, SynthOutput};
use crate::corpus::{toks, Sentence};
use crate::training::train_type;
use alloc::vec;

fn corpus(sentences: &[&str]) -> Corpus {
    Corpus::new(
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| Sentence::new("d", alloc::format!("{i}"), toks(s)).unwrap())
            .collect(),
    )
}

fn dict(entries: &[(&str, &str)]) -> Dictionary {
    let mut d = Dictionary::new();
    for (ty, phrase) in entries {
        d.insert(ty, toks(phrase)).unwrap();
    }
    d
}

fn phrases(c: &[PhraseCandidate]) -> Vec<String> {
    c.iter().map(|c| c.tokens.join(" ")).collect()
}

#[test]
fn dictionary_matches_are_not_candidates() {
    let c = corpus(&["George Washington visited Mount Vernon"]);
    let d = dict(&[("PER", "George Washington")]);
    let got = extract_candidates(&c, &d, "PER", Chunker::Capitalized);
    assert_eq!(phrases(&got), vec!["Mount Vernon"]);
    let for_gpe = extract_candidates(&c, &d, "GPE", Chunker::Capitalized);
    assert_eq!(phrases(&for_gpe), vec!["George Washington", "Mount Vernon"]);
}

#[test]
fn lowercase_text_has_no_candidates() {
    let c = corpus(&["nothing capitalised here at all"]);
    assert!(extract_candidates(&c, &Dictionary::new(), "PER", Chunker::Capitalized).is_empty());
}

#[test]
fn long_runs_are_cut() {
    let t = toks("x A B C D E F G H y I");
    let spans = Chunker::Capitalized.chunks(&t, None);
    assert_eq!(spans, vec![Span::new(1, 7), Span::new(7, 9), Span::new(10, 11)]);
}

#[test]
fn auxiliary_chunks_are_used_verbatim() {
    let s = Sentence::new("d", "0", toks("the big dog met George Washington"))
        .unwrap()
        .with_chunks(vec![Span::new(0, 3), Span::new(4, 6)])
        .unwrap();
    let c = Corpus::new(vec![s]);
    let d = dict(&[("PER", "George Washington")]);
    let got = extract_candidates(&c, &d, "PER", Chunker::Auxiliary);
    assert_eq!(phrases(&got), vec!["the big dog"]);
    let plain = corpus(&["Some Caps"]);
    assert!(extract_candidates(&plain, &d, "PER", Chunker::Auxiliary).is_empty());
}

#[test]
fn candidates_group_occurrences() {
    let c = corpus(&["met Anna Bell", "saw Anna Bell today", "Zed"]);
    let got = extract_candidates(&c, &Dictionary::new(), "PER", Chunker::Capitalized);
    assert_eq!(phrases(&got), vec!["Anna Bell", "Zed"]);
    assert_eq!(got[0].occurrences, vec![(0, Span::new(1, 3)), (1, Span::new(1, 3))]);
}

fn candidates(n: usize) -> Vec<PhraseCandidate> {
    (0..n)
        .map(|i| PhraseCandidate {
            tokens: vec![alloc::format!("P{i:03}")],
            occurrences: vec![(0, Span::new(0, 1))],
            score: 0.0,
        })
        .collect()
}

fn tiny_classifier() -> PhraseClassifier {
    let d = dict(&[("PER", "Anna"), ("ORG", "Acme")]);
    train_phrase_classifier(&d, "PER", &[], &ClassifierConfig::default(), 1)
        .unwrap()
        .classifier
}

#[test]
fn block_sizes() {
    let clf = tiny_classifier();
    assert_eq!(build_block("PER", candidates(100), &clf, 0.10).unwrap().admitted, 10);
    assert_eq!(build_block("PER", candidates(30), &clf, 0.10).unwrap().admitted, 3);
    assert_eq!(build_block("PER", candidates(7), &clf, 1.0).unwrap().admitted, 7);
    let empty = build_block("PER", Vec::new(), &clf, 0.1).unwrap();
    assert!(empty.admitted().is_empty());
    assert!(matches!(
        build_block("PER", candidates(3), &clf, 0.0),
        Err(BlockingError::BadFraction(_))
    ));
}

#[test]
fn equal_scores_rank_by_phrase() {
    // Unseen features leave every candidate at the bias-only score.
    let clf = tiny_classifier();
    let mut c = candidates(5);
    c.reverse();
    let block = build_block("PER", c, &clf, 1.0).unwrap();
    assert_eq!(phrases(&block.ranked), vec!["P000", "P001", "P002", "P003", "P004"]);
}

#[test]
fn classifier_warns_on_small_dictionary_and_needs_positives() {
    let d = dict(&[("PER", "Anna"), ("ORG", "Acme")]);
    let t = train_phrase_classifier(&d, "PER", &[], &ClassifierConfig::default(), 1).unwrap();
    assert_eq!(
        t.warnings,
        vec![BlockingWarning::FewDictionaryPhrases {
            entity_type: "PER".into(),
            count: 1
        }]
    );
    assert!(matches!(
        train_phrase_classifier(&d, "GPE", &[], &ClassifierConfig::default(), 1),
        Err(BlockingError::NoPositives(_))
    ));
}

fn fn_synth() -> SynthOutput {
    let cfg = SynthConfig {
        types: vec!["PER".into(), "ORG".into()],
        instances_per_type: 800,
        noise_rate: 0.3,
        fn_rate: 0.5,
        capitalized_rate: 0.6,
        ..SynthConfig::default()
    };
    generate(&cfg, 21).unwrap()
}

#[test]
fn classifier_learns_dictionary_phrases() {
    let data = fn_synth();
    let cands = extract_candidates(&data.train, &data.dictionary, "PER", Chunker::Capitalized);
    let clf = train_phrase_classifier(&data.dictionary, "PER", &cands, &ClassifierConfig::default(), 3)
        .unwrap()
        .classifier;
    let pos: Vec<_> = data.dictionary.phrases("PER").collect();
    let high = pos.iter().filter(|p| clf.score(p) > 0.5).count();
    assert!(high as f64 >= 0.9 * pos.len() as f64, "{high}/{}", pos.len());
}

#[test]
fn block_covers_planted_false_negatives() {
    let data = fn_synth();
    for ty in ["PER", "ORG"] {
        let cands = extract_candidates(&data.train, &data.dictionary, ty, Chunker::Capitalized);
        let clf = train_phrase_classifier(&data.dictionary, ty, &cands, &ClassifierConfig::default(), 3)
            .unwrap()
            .classifier;
        let block = build_block(ty, cands, &clf, 0.10).unwrap();
        let (covered, total) = false_negative_coverage(&block, &data.train, &data.dictionary);
        assert!(total > 0);
        assert!(2 * covered >= total, "{ty}: {covered}/{total}");
        for inst in block.instances(&data.train) {
            assert!(!data.dictionary.contains(ty, inst.tokens(&data.train)));
            assert_eq!(inst.source, Source::BlockedCandidate);
        }
        let p = block.estimate_accuracy(&data.dev, &data.dictionary, Chunker::Capitalized).unwrap();
        assert!(p.value() > 0.0);
    }
}

#[test]
fn block_admission_is_deterministic() {
    let data = fn_synth();
    let build = || {
        let cands = extract_candidates(&data.train, &data.dictionary, "PER", Chunker::Capitalized);
        let clf = train_phrase_classifier(&data.dictionary, "PER", &cands, &ClassifierConfig::default(), 9)
            .unwrap()
            .classifier;
        build_block("PER", cands, &clf, 0.1).unwrap()
    };
    assert_eq!(build(), build());
}

fn joint_fixture() -> (SynthOutput, Vec<Instance>, Block) {
    let data = fn_synth();
    let pool: Vec<Instance> = weak_label(&data.train, &data.dictionary)
        .into_iter()
        .filter(|i| i.entity_type == "PER")
        .take(120)
        .collect();
    let cands = extract_candidates(&data.train, &data.dictionary, "PER", Chunker::Capitalized);
    let clf = train_phrase_classifier(&data.dictionary, "PER", &cands, &ClassifierConfig::default(), 3)
        .unwrap()
        .classifier;
    let block = build_block("PER", cands, &clf, 0.1)
        .unwrap()
        .with_accuracy(Accuracy::snap(0.5).unwrap());
    (data, pool, block)
}

fn small_config() -> TrainConfig {
    TrainConfig {
        batch_size: 30,
        epochs: 2,
        ..TrainConfig::default()
    }
}

#[test]
fn joint_training_without_block_is_plain_training() {
    let (data, pool, block) = joint_fixture();
    let p = Accuracy::snap(0.7).unwrap();
    let cfg = small_config();
    let plain = train_type(&data.train, &pool, p, &cfg, &mut |_| {}).unwrap();
    let zero = joint_train(&data.train, &pool, p, &block, 0.0, &cfg, &mut |_| {}).unwrap();
    assert_eq!(plain.model, zero.model);
    let mut empty = block.clone();
    empty.admitted = 0;
    let none = joint_train(&data.train, &pool, p, &empty, 1.0, &cfg, &mut |_| {}).unwrap();
    assert_eq!(plain.model, none.model);
    let joint = joint_train(&data.train, &pool, p, &block, 1.0, &cfg, &mut |_| {}).unwrap();
    assert_ne!(plain.model, joint.model);
    assert!(joint.log.iter().all(|r| r.mean_aux_loss.is_some()));
}

#[test]
fn joint_training_needs_block_accuracy_and_hgl() {
    let (data, pool, mut block) = joint_fixture();
    let p = Accuracy::snap(0.7).unwrap();
    let cfg = small_config();
    block.accuracy = None;
    assert!(matches!(
        joint_train(&data.train, &pool, p, &block, 1.0, &cfg, &mut |_| {}),
        Err(BlockingError::NoBlockAccuracy)
    ));
    let xr = TrainConfig {
        loss: LossKind::Xr,
        ..cfg
    };
    block.accuracy = Some(p);
    assert!(joint_train(&data.train, &pool, p, &block, 1.0, &xr, &mut |_| {}).is_err());
}

#[test]
fn pure_negative_block_pushes_candidates_down() {
    let (data, pool, block) = joint_fixture();
    let p = Accuracy::snap(0.7).unwrap();
    let cfg = TrainConfig {
        epochs: 4,
        ..small_config()
    };
    let negative = block.clone().with_accuracy(Accuracy::ZERO);
    let joint = joint_train(&data.train, &pool, p, &negative, 1.0, &cfg, &mut |_| {}).unwrap();
    let plain = train_type(&data.train, &pool, p, &cfg, &mut |_| {}).unwrap();
    let blocked = negative.instances(&data.train);
    let mean = |m| {
        let s = crate::training::score_instances(m, &data.train, &blocked).unwrap();
        s.iter().sum::<f64>() / s.len() as f64
    };
    assert!(mean(&joint.model) < mean(&plain.model));
}
