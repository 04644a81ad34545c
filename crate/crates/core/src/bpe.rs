//! Byte-pair-encoding subword tokenizer with word ↔ token alignment, and
//! projection of word-level tags onto tokens (and collapse back).
//!
//! BPE operates per word, never across word boundaries, with an end-of-word
//! marker suffix so word boundaries survive tokenization exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::ops::Range;

use thiserror::Error;

use crate::tags::{DisfTag, ItnTag, TagError, TagSet};

/// End-of-word marker appended as the final symbol of every word.
pub const WORD_MARKER: &str = "</w>";

pub const DEFAULT_VOCAB_SIZE: usize = 8_000;

#[derive(Debug, Error, PartialEq)]
pub enum BpeError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("vocab size {requested} is below the base alphabet size {alphabet}")]
    VocabTooSmall { requested: usize, alphabet: usize },
    #[error("model file line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },
    #[error("tag/word length mismatch: {tags} tags for {words} words")]
    LengthMismatch { tags: usize, words: usize },
    #[error("{0}")]
    Tag(TagError),
}

/// A trained BPE model: base alphabet plus an ordered merge list.
#[derive(Debug, Clone, PartialEq)]
pub struct BpeModel {
    alphabet: Vec<String>,
    merges: Vec<(String, String)>,
    vocab: HashMap<String, u32>,
}

impl BpeModel {
    fn build(alphabet: Vec<String>, merges: Vec<(String, String)>) -> BpeModel {
        let mut vocab = HashMap::new();
        for sym in &alphabet {
            let id = vocab.len() as u32;
            vocab.entry(sym.clone()).or_insert(id);
        }
        for (l, r) in &merges {
            let merged = format!("{l}{r}");
            let id = vocab.len() as u32;
            vocab.entry(merged).or_insert(id);
        }
        BpeModel {
            alphabet,
            merges,
            vocab,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.vocab.get(token).copied()
    }

    /// Splits one word into subword tokens by applying merges in learned
    /// order. Characters outside the alphabet stay as single-char tokens.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(|c| c.to_string()).collect();
        symbols.push(WORD_MARKER.to_string());
        for (left, right) in &self.merges {
            let mut i = 0;
            while i + 1 < symbols.len() {
                if symbols[i] == *left && symbols[i + 1] == *right {
                    let merged = format!("{}{}", symbols[i], symbols[i + 1]);
                    symbols[i] = merged;
                    symbols.remove(i + 1);
                } else {
                    i += 1;
                }
            }
        }
        symbols
    }

    pub fn encode(&self, words: &[String]) -> TokenizedSentence {
        let mut tokens = Vec::new();
        let mut word_boundaries = Vec::with_capacity(words.len());
        for word in words {
            let start = tokens.len();
            tokens.extend(self.encode_word(word));
            word_boundaries.push(start..tokens.len());
        }
        TokenizedSentence {
            tokens,
            word_boundaries,
        }
    }

    /// Recovers the original words. Exact inverse of [`BpeModel::encode`].
    pub fn decode(&self, sentence: &TokenizedSentence) -> Vec<String> {
        sentence
            .word_boundaries
            .iter()
            .map(|range| {
                let joined: String = sentence.tokens[range.clone()].concat();
                joined
                    .strip_suffix(WORD_MARKER)
                    .unwrap_or(&joined)
                    .to_string()
            })
            .collect()
    }

    /// Line-oriented model file: `bpe v1 <vocab_size>`, the alphabet on one
    /// line, then one merge per line as `left right`.
    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bpe v1 {}", self.vocab_size())?;
        writeln!(w, "{}", self.alphabet.join(" "))?;
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<BpeModel, BpeError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(BpeError::ModelFormat {
            line: 1,
            msg: "empty model file".to_string(),
        })?;
        let header = header.map_err(|e| BpeError::ModelFormat {
            line: 1,
            msg: e.to_string(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "bpe" || parts[1] != "v1" {
            return Err(BpeError::ModelFormat {
                line: 1,
                msg: format!("bad header `{header}`"),
            });
        }
        let declared: usize = parts[2].parse().map_err(|_| BpeError::ModelFormat {
            line: 1,
            msg: "bad vocab size".to_string(),
        })?;
        let (_, alphabet_line) = lines.next().ok_or(BpeError::ModelFormat {
            line: 2,
            msg: "missing alphabet line".to_string(),
        })?;
        let alphabet_line = alphabet_line.map_err(|e| BpeError::ModelFormat {
            line: 2,
            msg: e.to_string(),
        })?;
        let alphabet: Vec<String> = alphabet_line
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let mut merges = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| BpeError::ModelFormat {
                line: idx + 1,
                msg: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(l), Some(r), None) => merges.push((l.to_string(), r.to_string())),
                _ => {
                    return Err(BpeError::ModelFormat {
                        line: idx + 1,
                        msg: format!("expected `left right`, found `{line}`"),
                    })
                }
            }
        }
        let model = BpeModel::build(alphabet, merges);
        if model.vocab_size() != declared {
            return Err(BpeError::ModelFormat {
                line: 1,
                msg: format!(
                    "declared vocab size {declared} but reconstructed {}",
                    model.vocab_size()
                ),
            });
        }
        Ok(model)
    }
}

/// Subword tokens for one sentence plus each word's token range.
/// Ranges are contiguous, in order, and cover all tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    pub word_boundaries: Vec<Range<usize>>,
}

/// Learns a BPE merge list: repeatedly merge the most frequent adjacent
/// symbol pair until `vocab_size` is reached or no pair repeats.
/// Frequency ties break to the lexicographically smallest pair.
pub fn train_bpe<'a, I>(corpus: I, vocab_size: usize) -> Result<BpeModel, BpeError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut word_freq: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    let mut alphabet: BTreeSet<String> = BTreeSet::new();
    // items may be single words or whitespace-separated lines
    for word in corpus.into_iter().flat_map(str::split_whitespace) {
        if word.is_empty() {
            continue;
        }
        let mut symbols: Vec<String> = word.chars().map(|c| c.to_string()).collect();
        for s in &symbols {
            alphabet.insert(s.clone());
        }
        symbols.push(WORD_MARKER.to_string());
        *word_freq.entry(symbols).or_insert(0) += 1;
    }
    if word_freq.is_empty() {
        return Err(BpeError::EmptyCorpus);
    }
    alphabet.insert(WORD_MARKER.to_string());
    if vocab_size < alphabet.len() {
        return Err(BpeError::VocabTooSmall {
            requested: vocab_size,
            alphabet: alphabet.len(),
        });
    }

    let mut merges: Vec<(String, String)> = Vec::new();
    let mut words: Vec<(Vec<String>, u64)> = word_freq.into_iter().collect();
    while alphabet.len() + merges.len() < vocab_size {
        let mut pair_counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (symbols, freq) in &words {
            for pair in symbols.windows(2) {
                *pair_counts
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0) += freq;
            }
        }
        // max count, ties to lexicographically smallest pair (BTreeMap
        // iterates in pair order, so the first maximum wins)
        let best = pair_counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(pair, &count)| (pair.clone(), count));
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        for (symbols, _) in &mut words {
            let mut i = 0;
            while i + 1 < symbols.len() {
                if symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
                    let merged = format!("{}{}", symbols[i], symbols[i + 1]);
                    symbols[i] = merged;
                    symbols.remove(i + 1);
                } else {
                    i += 1;
                }
            }
        }
        merges.push(pair);
    }
    Ok(BpeModel::build(alphabet.into_iter().collect(), merges))
}

/// Expands word-level tags to token level:
/// cap and disf copy to every token of the word; ITN keeps `Begin` on the
/// first token and continues the span elsewhere; punctuation sits on the
/// last token of its word.
pub fn project_tags(word_tags: &TagSet, boundaries: &[Range<usize>]) -> Result<TagSet, BpeError> {
    if word_tags.len() != boundaries.len() {
        return Err(BpeError::LengthMismatch {
            tags: word_tags.len(),
            words: boundaries.len(),
        });
    }
    let token_count = boundaries.last().map(|r| r.end).unwrap_or(0);
    let mut out = TagSet::all_o(token_count);
    for (w, range) in boundaries.iter().enumerate() {
        for t in range.clone() {
            out.cap[t] = word_tags.cap[w];
            out.disf[t] = word_tags.disf[w];
            out.itn[t] = match word_tags.itn[w] {
                ItnTag::O => ItnTag::O,
                ItnTag::Begin(e) => {
                    if t == range.start {
                        ItnTag::Begin(e)
                    } else {
                        ItnTag::Cont(e)
                    }
                }
                ItnTag::Cont(e) => ItnTag::Cont(e),
            };
        }
        if let Some(last) = range.clone().last() {
            out.punct[last] = word_tags.punct[w];
        }
    }
    Ok(out)
}

/// Collapses token-level tags back to word level: cap and ITN take the first
/// token's tag, punctuation the last token's, disfluency the majority tag
/// over the word's tokens (ties go to the first token's tag).
/// Inverse of [`project_tags`] on well-formed word-level tag sets.
pub fn collapse_tags(token_tags: &TagSet, boundaries: &[Range<usize>]) -> Result<TagSet, BpeError> {
    let token_count = boundaries.last().map(|r| r.end).unwrap_or(0);
    if token_tags.len() != token_count {
        return Err(BpeError::LengthMismatch {
            tags: token_tags.len(),
            words: token_count,
        });
    }
    let mut out = TagSet::all_o(boundaries.len());
    for (w, range) in boundaries.iter().enumerate() {
        let Some(first) = range.clone().next() else {
            continue;
        };
        let last = range.clone().last().unwrap();
        out.itn[w] = token_tags.itn[first];
        out.cap[w] = token_tags.cap[first];
        out.punct[w] = token_tags.punct[last];
        // majority disfluency tag over the word's tokens
        let mut counts: HashMap<DisfTag, usize> = HashMap::new();
        for t in range.clone() {
            *counts.entry(token_tags.disf[t]).or_insert(0) += 1;
        }
        let first_tag = token_tags.disf[first];
        let max = counts.values().copied().max().unwrap_or(0);
        out.disf[w] = if counts.get(&first_tag) == Some(&max) {
            first_tag
        } else {
            // first token's tag loses; take the earliest token whose tag
            // has the maximum count
            range
                .clone()
                .map(|t| token_tags.disf[t])
                .find(|tag| counts[tag] == max)
                .unwrap_or(first_tag)
        };
    }
    Ok(out)
}
