//! Stage 1: tag prediction. A hashed-feature linear model with four
//! classification heads over a shared feature space, trained by SGD on the
//! evenly weighted joint cross-entropy, plus a file-based tag source for
//! plugging in external taggers.

use std::io::{BufRead, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpe::{collapse_tags, project_tags, BpeError, BpeModel};
use crate::datapipe::AlignedExample;
use crate::tags::{
    parse_tag_record, validate_tagset, CapTag, DisfTag, ItnTag, PunctTag, TagFormatError,
    TagRecord, TagSet, Task, TaskTag,
};

pub const DEFAULT_FEATURE_DIM: usize = 1 << 20;

const MODEL_MAGIC: &[u8; 4] = b"S2WT";
const MODEL_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("loss component is not finite")]
    NonFiniteLoss,
    #[error("loss component is negative")]
    NegativeLoss,
    #[error("empty training stream")]
    EmptyStream,
    #[error("feature dimension must be a power of two, got {0}")]
    BadDimension(usize),
    #[error("tokenizer error: {0}")]
    Bpe(#[from] BpeError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic; not a tagger model file")]
    BadMagic,
    #[error("unsupported model version {0}")]
    BadVersion(u8),
    #[error("model head {head} has {found} classes, expected {expected}")]
    ClassCountMismatch {
        head: usize,
        found: usize,
        expected: usize,
    },
}

/// The four per-head cross-entropies and their arithmetic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub ce_i: f64,
    pub ce_p: f64,
    pub ce_c: f64,
    pub ce_d: f64,
    pub ce_joint: f64,
}

/// Combines four per-head losses into the evenly weighted joint loss.
pub fn joint_loss(ce_i: f64, ce_p: f64, ce_c: f64, ce_d: f64) -> Result<LossComponents, TaggerError> {
    for v in [ce_i, ce_p, ce_c, ce_d] {
        if !v.is_finite() {
            return Err(TaggerError::NonFiniteLoss);
        }
        if v < 0.0 {
            return Err(TaggerError::NegativeLoss);
        }
    }
    Ok(LossComponents {
        ce_i,
        ce_p,
        ce_c,
        ce_d,
        ce_joint: (ce_i + ce_p + ce_c + ce_d) / 4.0,
    })
}

/// Training hyperparameters. `heads[t]` enables gradient flow for task `t`
/// (indexed by [`Task`] order: ITN, punctuation, capitalization, disfluency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f32,
    pub epochs: usize,
    pub l2: f32,
    pub seed: u64,
    pub heads: [bool; 4],
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            dim: DEFAULT_FEATURE_DIM,
            learning_rate: 0.1,
            epochs: 5,
            l2: 0.0,
            seed: 0,
            heads: [true; 4],
        }
    }
}

/// One token-level training example (word tags projected onto subwords).
#[derive(Debug, Clone, PartialEq)]
pub struct TokenExample {
    pub tokens: Vec<String>,
    pub tags: TagSet,
}

/// Projects word-level examples onto BPE tokens for training.
pub fn prepare_token_examples(
    examples: &[AlignedExample],
    bpe: &BpeModel,
) -> Result<Vec<TokenExample>, BpeError> {
    examples
        .iter()
        .map(|ex| {
            let encoded = bpe.encode(&ex.spoken_words);
            let tags = project_tags(&ex.tags, &encoded.word_boundaries)?;
            Ok(TokenExample {
                tokens: encoded.tokens,
                tags,
            })
        })
        .collect()
}

/// Four dense weight matrices over a shared hashed feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    dim: usize,
    /// One row-major `class_count × dim` matrix per task, in [`Task`] order.
    heads: [Vec<f32>; 4],
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn token_shape(token: &str) -> &'static str {
    let mut has_digit = false;
    let mut has_alpha = false;
    for c in token.chars() {
        if c.is_ascii_digit() {
            has_digit = true;
        } else if c.is_alphabetic() {
            has_alpha = true;
        }
    }
    match (has_digit, has_alpha) {
        (true, true) => "mixed",
        (true, false) => "digit",
        (false, true) => "letter",
        (false, false) => "other",
    }
}

/// Hashed feature indices for one token position over a ±2-token window.
/// Indices are deduplicated and all lie in `[0, dim)`.
pub fn features(tokens: &[String], pos: usize, dim: usize) -> Vec<u32> {
    let mask = (dim - 1) as u64;
    let mut out: Vec<u32> = Vec::with_capacity(12);
    let mut push = |s: String| out.push((fnv1a(s.as_bytes()) & mask) as u32);
    push("bias".to_string());
    let center = &tokens[pos];
    push(format!("id={center}"));
    push(format!("lc={}", center.to_lowercase()));
    for offset in -2i64..=2 {
        let idx = pos as i64 + offset;
        let tok: &str = if idx < 0 {
            "<s>"
        } else if idx as usize >= tokens.len() {
            "</s>"
        } else {
            &tokens[idx as usize]
        };
        push(format!("id@{offset}={tok}"));
        push(format!("shape@{offset}={}", token_shape(tok)));
    }
    out.sort_unstable();
    out.dedup();
    out
}

impl JointModel {
    pub fn new(dim: usize) -> Result<JointModel, TaggerError> {
        if !dim.is_power_of_two() {
            return Err(TaggerError::BadDimension(dim));
        }
        Ok(JointModel {
            dim,
            heads: [
                vec![0.0; Task::Itn.class_count() * dim],
                vec![0.0; Task::Punct.class_count() * dim],
                vec![0.0; Task::Cap.class_count() * dim],
                vec![0.0; Task::Disf.class_count() * dim],
            ],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, head: usize, feats: &[u32]) -> Vec<f32> {
        let classes = TASKS[head].class_count();
        let w = &self.heads[head];
        let mut scores = vec![0.0f32; classes];
        for (c, s) in scores.iter_mut().enumerate() {
            let row = c * self.dim;
            for &f in feats {
                *s += w[row + f as usize];
            }
        }
        scores
    }

    /// Argmax with ties resolved to the lowest class index.
    fn classify(&self, head: usize, feats: &[u32]) -> usize {
        let scores = self.scores(head, feats);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }

    /// Serializes the model: magic, version, dim, then per head the class
    /// count and a dense row-major weight matrix of little-endian f32.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), TaggerError> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&[MODEL_VERSION])?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for (head, task) in TASKS.iter().enumerate() {
            w.write_all(&(task.class_count() as u32).to_le_bytes())?;
            let mut buf = Vec::with_capacity(self.heads[head].len() * 4);
            for &v in &self.heads[head] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<JointModel, TaggerError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(TaggerError::BadMagic);
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version)?;
        if version[0] != MODEL_VERSION {
            return Err(TaggerError::BadVersion(version[0]));
        }
        let mut dim8 = [0u8; 8];
        r.read_exact(&mut dim8)?;
        let dim = u64::from_le_bytes(dim8) as usize;
        let mut model = JointModel::new(dim)?;
        for (head, task) in TASKS.iter().enumerate() {
            let mut cc4 = [0u8; 4];
            r.read_exact(&mut cc4)?;
            let found = u32::from_le_bytes(cc4) as usize;
            if found != task.class_count() {
                return Err(TaggerError::ClassCountMismatch {
                    head,
                    found,
                    expected: task.class_count(),
                });
            }
            let mut buf = vec![0u8; found * dim * 4];
            r.read_exact(&mut buf)?;
            for (i, chunk) in buf.chunks_exact(4).enumerate() {
                model.heads[head][i] = f32::from_le_bytes(chunk.try_into().unwrap());
            }
        }
        Ok(model)
    }
}

const TASKS: [Task; 4] = [Task::Itn, Task::Punct, Task::Cap, Task::Disf];

fn softmax(scores: &[f32]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps: Vec<f64> = scores.iter().map(|&s| ((s as f64) - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn gold_class(tags: &TagSet, head: usize, pos: usize) -> usize {
    match head {
        0 => tags.itn[pos].class_index(),
        1 => tags.punct[pos].class_index(),
        2 => tags.cap[pos].class_index(),
        _ => tags.disf[pos].class_index(),
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: LossComponents,
}

/// Trains the joint model by SGD on the evenly weighted cross-entropy.
///
/// All four heads are evaluated for the loss log, but gradients flow only to
/// heads enabled in the config, scaled by the number of enabled heads so
/// that a one-head configuration is exactly single-task training.
pub fn train_joint(
    examples: &[TokenExample],
    config: &TrainConfig,
) -> Result<(JointModel, Vec<EpochLog>), TaggerError> {
    if examples.is_empty() {
        return Err(TaggerError::EmptyStream);
    }
    let mut model = JointModel::new(config.dim)?;
    let num_enabled = config.heads.iter().filter(|h| **h).count().max(1);
    let head_scale = 1.0 / num_enabled as f32;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut logs = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut ce_sums = [0.0f64; 4];
        let mut tokens_seen = 0u64;
        for &ei in &order {
            let ex = &examples[ei];
            for pos in 0..ex.tokens.len() {
                let feats = features(&ex.tokens, pos, config.dim);
                tokens_seen += 1;
                for head in 0..4 {
                    let scores = model.scores(head, &feats);
                    let probs = softmax(&scores);
                    let gold = gold_class(&ex.tags, head, pos);
                    ce_sums[head] += -probs[gold].max(f64::MIN_POSITIVE).ln();
                    if !config.heads[head] {
                        continue;
                    }
                    let lr = config.learning_rate * head_scale;
                    let w = &mut model.heads[head];
                    for (c, &p) in probs.iter().enumerate() {
                        let grad = p as f32 - if c == gold { 1.0 } else { 0.0 };
                        if grad == 0.0 && config.l2 == 0.0 {
                            continue;
                        }
                        let row = c * config.dim;
                        for &f in &feats {
                            let wi = &mut w[row + f as usize];
                            *wi -= lr * (grad + config.l2 * *wi);
                        }
                    }
                }
            }
        }
        let n = tokens_seen.max(1) as f64;
        let loss = joint_loss(
            ce_sums[0] / n,
            ce_sums[1] / n,
            ce_sums[2] / n,
            ce_sums[3] / n,
        )?;
        logs.push(EpochLog { epoch, loss });
    }
    Ok((model, logs))
}

/// Trains a single head: joint training with the other three heads disabled.
pub fn train_single(
    examples: &[TokenExample],
    task: Task,
    config: &TrainConfig,
) -> Result<(JointModel, Vec<EpochLog>), TaggerError> {
    let mut config = *config;
    config.heads = [false; 4];
    config.heads[TASKS.iter().position(|t| *t == task).unwrap()] = true;
    train_joint(examples, &config)
}

/// Repairs an ill-formed ITN sequence: a `Cont` that does not continue a
/// span of the same entity type becomes a `Begin`.
fn repair_itn(itn: &mut [ItnTag]) {
    let mut open = None;
    for tag in itn.iter_mut() {
        match *tag {
            ItnTag::O => open = None,
            ItnTag::Begin(e) => open = Some(e),
            ItnTag::Cont(e) => {
                if open != Some(e) {
                    *tag = ItnTag::Begin(e);
                }
                open = Some(e);
            }
        }
    }
}

/// Predicts a word-level tag set: encode to subwords, classify each token
/// per head, collapse to word level, and repair ITN well-formedness. The
/// result always passes `validate_tagset`.
pub fn predict(words: &[String], model: &JointModel, bpe: &BpeModel) -> TagSet {
    let encoded = bpe.encode(words);
    let n = encoded.tokens.len();
    let mut token_tags = TagSet::all_o(0);
    for pos in 0..n {
        let feats = features(&encoded.tokens, pos, model.dim);
        token_tags
            .itn
            .push(ItnTag::from_class_index(model.classify(0, &feats)).unwrap());
        token_tags
            .punct
            .push(PunctTag::from_class_index(model.classify(1, &feats)).unwrap());
        token_tags
            .cap
            .push(CapTag::from_class_index(model.classify(2, &feats)).unwrap());
        token_tags
            .disf
            .push(DisfTag::from_class_index(model.classify(3, &feats)).unwrap());
    }
    repair_itn(&mut token_tags.itn);
    let mut word_tags = collapse_tags(&token_tags, &encoded.word_boundaries)
        .expect("boundaries cover the tokens they came from");
    repair_itn(&mut word_tags.itn);
    debug_assert!(validate_tagset(&word_tags).is_ok());
    word_tags
}

/// Streams validated records from a tag-column file.
pub fn load_tags<R: BufRead>(reader: R) -> impl Iterator<Item = Result<TagRecord, TagFormatError>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(TagFormatError::Io(e))),
        Ok(line) if line.trim().is_empty() => None,
        Ok(line) => Some(parse_tag_record(&line, i + 1)),
    })
}

/// Mean cross-entropy per head of `model` over `examples` without updating
/// weights; used for gradient checks and reporting.
pub fn evaluate_loss(
    model: &JointModel,
    examples: &[TokenExample],
) -> Result<LossComponents, TaggerError> {
    let mut ce_sums = [0.0f64; 4];
    let mut tokens = 0u64;
    for ex in examples {
        for pos in 0..ex.tokens.len() {
            let feats = features(&ex.tokens, pos, model.dim);
            tokens += 1;
            for head in 0..4 {
                let probs = softmax(&model.scores(head, &feats));
                let gold = gold_class(&ex.tags, head, pos);
                ce_sums[head] += -probs[gold].max(f64::MIN_POSITIVE).ln();
            }
        }
    }
    let n = tokens.max(1) as f64;
    joint_loss(
        ce_sums[0] / n,
        ce_sums[1] / n,
        ce_sums[2] / n,
        ce_sums[3] / n,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train_bpe;
    use crate::tags::serialize_tag_record;
    use proptest::prelude::*;

    const DIM: usize = 1 << 14;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            dim: DIM,
            learning_rate: 0.5,
            epochs: 50,
            l2: 0.0,
            seed: 1,
            heads: [true; 4],
        }
    }

    fn word_bpe(corpus: &[&str]) -> BpeModel {
        let lines: Vec<String> = corpus.iter().map(|s| s.to_string()).collect();
        train_bpe(lines.iter().map(|s| s.as_str()), 200).unwrap()
    }

    fn phone_example() -> TokenExample {
        let words: Vec<String> = "call me at four thirty"
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let mut tags = TagSet::all_o(5);
        tags.itn[3] = ItnTag::Begin(crate::tags::EntityType::Time);
        tags.itn[4] = ItnTag::Cont(crate::tags::EntityType::Time);
        tags.punct[4] = PunctTag::Period;
        tags.cap[0] = CapTag::C;
        TokenExample {
            tokens: words,
            tags,
        }
    }

    #[test]
    fn joint_loss_examples() {
        assert_eq!(joint_loss(1.0, 1.0, 1.0, 1.0).unwrap().ce_joint, 1.0);
        assert_eq!(joint_loss(0.0, 0.0, 0.0, 0.0).unwrap().ce_joint, 0.0);
        assert_eq!(joint_loss(0.2, 0.4, 0.6, 0.8).unwrap().ce_joint, 0.5);
        assert!(matches!(
            joint_loss(f64::NAN, 0.0, 0.0, 0.0),
            Err(TaggerError::NonFiniteLoss)
        ));
        assert!(matches!(
            joint_loss(0.0, -1.0, 0.0, 0.0),
            Err(TaggerError::NegativeLoss)
        ));
    }

    proptest! {
        #[test]
        fn joint_loss_is_mean_within_one_ulp(
            a in 0.0f64..100.0, b in 0.0f64..100.0,
            c in 0.0f64..100.0, d in 0.0f64..100.0,
        ) {
            let lc = joint_loss(a, b, c, d).unwrap();
            let mean = (a + b + c + d) / 4.0;
            prop_assert!((lc.ce_joint - mean).abs() <= mean.abs() * f64::EPSILON);
        }

        #[test]
        fn joint_loss_linearity(
            a in 0.0f64..10.0, b in 0.0f64..10.0,
            c in 0.0f64..10.0, d in 0.0f64..10.0,
            lambda in 0.01f64..10.0,
        ) {
            let base = joint_loss(a, b, c, d).unwrap().ce_joint;
            let scaled = joint_loss(a * lambda, b * lambda, c * lambda, d * lambda)
                .unwrap()
                .ce_joint;
            prop_assert!((scaled - base * lambda).abs() < 1e-9 * (1.0 + base * lambda));
        }
    }

    #[test]
    fn features_dedup_and_range() {
        let toks: Vec<String> = ["a", "a", "a"].iter().map(|s| s.to_string()).collect();
        for pos in 0..3 {
            let f = features(&toks, pos, 1 << 10);
            let mut sorted = f.clone();
            sorted.dedup();
            assert_eq!(f, sorted);
            assert!(f.iter().all(|&i| (i as usize) < (1 << 10)));
        }
    }

    #[test]
    fn untrained_model_predicts_all_o() {
        let model = JointModel::new(DIM).unwrap();
        let bpe = word_bpe(&["call me at four thirty"]);
        let words: Vec<String> = "call me at four thirty"
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let tags = predict(&words, &model, &bpe);
        assert_eq!(tags, TagSet::all_o(5));
    }

    #[test]
    fn initial_loss_is_uniform_softmax_value() {
        let ex = phone_example();
        let model = JointModel::new(DIM).unwrap();
        let loss = evaluate_loss(&model, &[ex]).unwrap();
        let expected = (11f64.ln() + 4f64.ln() + 3f64.ln() + 7f64.ln()) / 4.0;
        assert!((loss.ce_joint - expected).abs() < 1e-12);
        assert!((loss.ce_i - 11f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn memorizes_single_example() {
        // train on the same subword tokens that predict() will see
        let word_ex = phone_example();
        let bpe = word_bpe(&["call me at four thirty"]);
        let encoded = bpe.encode(&word_ex.tokens);
        let token_ex = TokenExample {
            tokens: encoded.tokens,
            tags: project_tags(&word_ex.tags, &encoded.word_boundaries).unwrap(),
        };
        let (model, logs) = train_joint(&[token_ex], &tiny_config()).unwrap();
        assert!(
            logs.last().unwrap().loss.ce_joint < 0.01,
            "loss {:?}",
            logs.last()
        );
        let predicted = predict(&word_ex.tokens, &model, &bpe);
        assert_eq!(predicted, word_ex.tags);
    }

    #[test]
    fn training_log_satisfies_joint_identity() {
        let ex = phone_example();
        let mut config = tiny_config();
        config.epochs = 5;
        let (_, logs) = train_joint(&[ex], &config).unwrap();
        for log in logs {
            let l = log.loss;
            let mean = (l.ce_i + l.ce_p + l.ce_c + l.ce_d) / 4.0;
            assert!((l.ce_joint - mean).abs() <= mean * f64::EPSILON);
        }
    }

    #[test]
    fn single_head_joint_equals_train_single() {
        let ex = phone_example();
        let mut config = tiny_config();
        config.epochs = 3;
        let mut joint_cfg = config;
        joint_cfg.heads = [false, true, false, false];
        let (a, _) = train_joint(&[ex.clone()], &joint_cfg).unwrap();
        let (b, _) = train_single(&[ex], Task::Punct, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn determinism_by_seed() {
        let examples = vec![phone_example(), phone_example()];
        let mut config = tiny_config();
        config.epochs = 2;
        let (a, _) = train_joint(&examples, &config).unwrap();
        let (b, _) = train_joint(&examples, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_stream_errors() {
        assert!(matches!(
            train_joint(&[], &tiny_config()),
            Err(TaggerError::EmptyStream)
        ));
    }

    #[test]
    fn majority_class_corpus_predicts_majority() {
        // every word carries Period punctuation; the trained model should
        // predict Period everywhere on those words
        let words: Vec<String> = vec!["stop".into(), "stop".into()];
        let mut tags = TagSet::all_o(2);
        tags.punct = vec![PunctTag::Period; 2];
        let bpe = word_bpe(&["stop stop"]);
        let encoded = bpe.encode(&words);
        let ex = TokenExample {
            tokens: encoded.tokens,
            tags: project_tags(&tags, &encoded.word_boundaries).unwrap(),
        };
        let mut config = tiny_config();
        config.epochs = 20;
        let (model, _) = train_single(&[ex], Task::Punct, &config).unwrap();
        let predicted = predict(&words, &model, &bpe);
        assert_eq!(predicted.punct, vec![PunctTag::Period; 2]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // one position, one head, random-ish weights on the touched features
        let dim = 1 << 10;
        let mut model = JointModel::new(dim).unwrap();
        let tokens: Vec<String> = vec!["four".into(), "thirty".into()];
        let feats = features(&tokens, 0, dim);
        let head = 1; // punctuation, 4 classes
        for (i, &f) in feats.iter().enumerate() {
            for c in 0..4 {
                model.heads[head][c * dim + f as usize] = ((i + c) as f32 * 0.13).sin() * 0.5;
            }
        }
        let gold = 2usize;
        let ce = |m: &JointModel| -> f64 {
            let probs = softmax(&m.scores(head, &feats));
            -probs[gold].ln()
        };
        let probs = softmax(&model.scores(head, &feats));
        let eps = 1e-3f32;
        for c in 0..4 {
            // all features in `feats` share the same weight row offsets, so
            // the analytic gradient for one (class, feature) cell is p_c - 1[c=gold]
            let analytic = probs[c] - if c == gold { 1.0 } else { 0.0 };
            let cell = c * dim + feats[0] as usize;
            let orig = model.heads[head][cell];
            model.heads[head][cell] = orig + eps;
            let plus = ce(&model);
            model.heads[head][cell] = orig - eps;
            let minus = ce(&model);
            model.heads[head][cell] = orig;
            let numeric = (plus - minus) / (2.0 * eps as f64);
            let denom = analytic.abs().max(1e-3);
            assert!(
                (numeric - analytic).abs() / denom < 1e-3,
                "class {c}: analytic {analytic} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn repair_step_produces_valid_tagsets() {
        let mut itn = vec![
            ItnTag::Cont(crate::tags::EntityType::Time),
            ItnTag::Cont(crate::tags::EntityType::Money),
            ItnTag::O,
            ItnTag::Cont(crate::tags::EntityType::Time),
        ];
        repair_itn(&mut itn);
        assert_eq!(
            itn,
            vec![
                ItnTag::Begin(crate::tags::EntityType::Time),
                ItnTag::Begin(crate::tags::EntityType::Money),
                ItnTag::O,
                ItnTag::Begin(crate::tags::EntityType::Time),
            ]
        );
    }

    proptest! {
        #[test]
        fn repaired_sequences_always_validate(
            raw in proptest::collection::vec(0usize..11, 0..12)
        ) {
            let mut itn: Vec<ItnTag> =
                raw.iter().map(|&i| ItnTag::from_class_index(i).unwrap()).collect();
            repair_itn(&mut itn);
            prop_assert!(crate::tags::extract_itn_spans(&itn).is_ok());
        }
    }

    #[test]
    fn model_file_round_trip() {
        let ex = phone_example();
        let mut config = tiny_config();
        config.epochs = 2;
        config.dim = 1 << 10;
        let (model, _) = train_joint(&[ex], &config).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = JointModel::load(buf.as_slice()).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn model_load_rejects_bad_magic() {
        assert!(matches!(
            JointModel::load(&b"NOPE"[..]),
            Err(TaggerError::BadMagic)
        ));
    }

    #[test]
    fn load_tags_round_trip_and_errors() {
        let ex = phone_example();
        let record = TagRecord {
            words: ex.tokens.clone(),
            tags: ex.tags.clone(),
        };
        let text = format!("{}\n\n{}\n", serialize_tag_record(&record), "bad\tline");
        let mut iter = load_tags(text.as_bytes());
        assert_eq!(iter.next().unwrap().unwrap(), record);
        let err = iter.next().unwrap().unwrap_err();
        assert!(matches!(err, TagFormatError::FieldCount { line: 3, .. }));
        assert!(iter.next().is_none());
    }
}
