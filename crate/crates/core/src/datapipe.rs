//! Training-data manufacture: cleans written corpora, expands them to spoken
//! form with alignment, derives gold tag sequences, translates disfluency
//! markup, and performs deterministic train/validation splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tagapply::apply_tags;
use crate::tags::{CapTag, DisfTag, ItnTag, PunctTag, TagSet};
use crate::wfst::GrammarSet;

/// Validation split cap from the preparation recipe.
pub const MAX_VALIDATION_ROWS: usize = 50_000;

#[derive(Debug, Error)]
pub enum DatapipeError {
    #[error("record {source_id}: round trip mismatch: expected {expected:?}, got {actual:?}")]
    RoundTrip {
        source_id: String,
        expected: String,
        actual: String,
    },
    #[error("record {source_id}: {message}")]
    Malformed { source_id: String, message: String },
    #[error("markup span {index} ({start}..{end}) out of bounds for {words} words")]
    SpanOutOfBounds {
        index: usize,
        start: usize,
        end: usize,
        words: usize,
    },
    #[error("markup span {index} is empty ({start}..{end})")]
    EmptySpan {
        index: usize,
        start: usize,
        end: usize,
    },
}

/// A spoken-form sentence with gold word-level tags and its written source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedExample {
    pub source_id: String,
    pub spoken_words: Vec<String>,
    pub tags: TagSet,
    pub written_text: String,
}

/// Aggregate statistics over a record stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub records: u64,
    pub words: u64,
    pub itn_tags: BTreeMap<String, u64>,
    pub punct_tags: BTreeMap<String, u64>,
    pub cap_tags: BTreeMap<String, u64>,
    pub disf_tags: BTreeMap<String, u64>,
    pub entity_spans: BTreeMap<String, u64>,
}

const SENTENCE_PUNCT: [char; 3] = [',', '.', '?'];

fn is_kept_char(c: char) -> bool {
    c.is_alphanumeric() || c.is_whitespace() || SENTENCE_PUNCT.contains(&c) || "'-$:".contains(c)
}

/// Cleans one raw written record, or rejects it.
///
/// Keeps letters, digits, `, . ?`, apostrophes, mid-word hyphens, `$`, and
/// `:`; collapses whitespace; attaches stray punctuation-only tokens to the
/// preceding word. Rejects records containing quotation marks or parentheses
/// and records shorter than four words. Rejection returns `None`.
pub fn clean_record(text: &str) -> Option<String> {
    if text
        .chars()
        .any(|c| "\"()[]{}".contains(c) || "\u{201c}\u{201d}\u{2018}\u{2019}".contains(c))
    {
        return None;
    }
    let filtered: String = text.chars().filter(|&c| is_kept_char(c)).collect();
    let mut words: Vec<String> = Vec::new();
    for token in filtered.split_whitespace() {
        // drop hyphens that are not between two word characters
        let mut tok = String::with_capacity(token.len());
        let chars: Vec<char> = token.chars().collect();
        for (i, &c) in chars.iter().enumerate() {
            if c == '-' {
                let before = i > 0 && chars[i - 1].is_alphanumeric();
                let after = i + 1 < chars.len() && chars[i + 1].is_alphanumeric();
                if !(before && after) {
                    continue;
                }
            }
            tok.push(c);
        }
        if tok.is_empty() {
            continue;
        }
        if tok.chars().all(|c| SENTENCE_PUNCT.contains(&c)) {
            // stray punctuation token: attach to the previous word
            if let Some(prev) = words.last_mut() {
                prev.push_str(&tok);
            }
            continue;
        }
        words.push(tok);
    }
    if words.len() < 4 {
        return None;
    }
    Some(words.join(" "))
}

/// Splits one written word into its bare form and trailing punctuation tag.
/// Multiple trailing punctuation characters collapse to the last one.
fn strip_trailing_punct(word: &str) -> (String, PunctTag) {
    let mut bare = word.to_string();
    let mut tag = PunctTag::O;
    while let Some(last) = bare.chars().last() {
        match last {
            ',' => tag = PunctTag::Comma,
            '.' => tag = PunctTag::Period,
            '?' => tag = PunctTag::QuestionMark,
            _ => break,
        }
        bare.pop();
    }
    (bare, tag)
}

fn derive_cap(word: &str) -> CapTag {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        return CapTag::O;
    }
    if letters.iter().all(|c| c.is_uppercase()) {
        // single uppercase letters ("I", "A") are tagged C so that
        // formatting capitalizes rather than uppercases them
        if letters.len() > 1 {
            return CapTag::U;
        }
        return CapTag::C;
    }
    if letters[0].is_uppercase() {
        return CapTag::C;
    }
    CapTag::O
}

/// Derives a gold-tagged spoken-form example from cleaned written text.
///
/// Trailing punctuation is split off per word, capitalization is read from
/// the casing, entity patterns are expanded to spoken words through the
/// inverted grammars, and the result is verified by formatting it back and
/// comparing byte-for-byte. A mismatch is an error so the caller can
/// quarantine the record instead of training on bad tags.
pub fn generate_example(
    source_id: &str,
    written_text: &str,
    grammars: &GrammarSet,
) -> Result<AlignedExample, DatapipeError> {
    let written_words: Vec<&str> = written_text.split_whitespace().collect();
    let mut bare = Vec::with_capacity(written_words.len());
    let mut punct = Vec::with_capacity(written_words.len());
    for w in &written_words {
        let (b, p) = strip_trailing_punct(w);
        if b.is_empty() {
            return Err(DatapipeError::Malformed {
                source_id: source_id.to_string(),
                message: format!("word {w:?} is punctuation only"),
            });
        }
        bare.push(b);
        punct.push(p);
    }

    let mut spoken = Vec::new();
    let mut tags = TagSet::all_o(0);

    // entity windows must not span an interior punctuation break, so the
    // sentence is normalized chunk by chunk, each chunk ending at a
    // punctuation-bearing word (or the sentence end)
    let mut chunk_start = 0;
    for i in 0..bare.len() {
        if punct[i] != PunctTag::O || i + 1 == bare.len() {
            let chunk = &bare[chunk_start..=i];
            let normalized = grammars.normalize_with_alignment(chunk);
            for segment in &normalized.segments {
                let seg_words = &normalized.spoken[segment.spoken.clone()];
                let written_last = chunk_start + segment.written.end - 1;
                match segment.entity {
                    Some(entity) => {
                        for (k, w) in seg_words.iter().enumerate() {
                            spoken.push(w.clone());
                            tags.itn.push(if k == 0 {
                                ItnTag::Begin(entity)
                            } else {
                                ItnTag::Cont(entity)
                            });
                            tags.cap.push(CapTag::O);
                            let last = k + 1 == seg_words.len();
                            tags.punct.push(if last { punct[written_last] } else { PunctTag::O });
                            tags.disf.push(DisfTag::O);
                        }
                    }
                    None => {
                        let word = &seg_words[0];
                        spoken.push(word.to_lowercase());
                        tags.itn.push(ItnTag::O);
                        tags.cap.push(derive_cap(word));
                        tags.punct.push(punct[written_last]);
                        tags.disf.push(DisfTag::O);
                    }
                }
            }
            chunk_start = i + 1;
        }
    }

    let example = AlignedExample {
        source_id: source_id.to_string(),
        spoken_words: spoken,
        tags,
        written_text: written_text.to_string(),
    };

    let formatted = apply_tags(&example.spoken_words, &example.tags, grammars).map_err(|e| {
        DatapipeError::Malformed {
            source_id: source_id.to_string(),
            message: e.to_string(),
        }
    })?;
    if formatted.text != example.written_text {
        return Err(DatapipeError::RoundTrip {
            source_id: source_id.to_string(),
            expected: example.written_text,
            actual: formatted.text,
        });
    }
    Ok(example)
}

/// Deterministically shuffles and splits records into (train, validation).
/// Validation size is `min(ceil(0.10 N), 50,000)`.
pub fn split_dataset(
    mut records: Vec<AlignedExample>,
    seed: u64,
) -> (Vec<AlignedExample>, Vec<AlignedExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    let n = records.len();
    let validation_size = n.div_ceil(10).min(MAX_VALIDATION_ROWS);
    let train = records.split_off(validation_size);
    (train, records)
}

/// Disfluency markup over one utterance, one JSON line per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisfMarkup {
    pub words: Vec<String>,
    #[serde(default)]
    pub spans: Vec<DisfSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisfSpan {
    pub kind: DisfKind,
    #[serde(default)]
    pub repetition: bool,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisfKind {
    Reparandum,
    Repair,
    Filler,
    Edit,
}

/// Translates markup spans into per-word disfluency tags. Later spans
/// overwrite earlier ones where they nest.
pub fn map_dialog_acts(
    num_words: usize,
    spans: &[DisfSpan],
) -> Result<Vec<DisfTag>, DatapipeError> {
    let mut tags = vec![DisfTag::O; num_words];
    for (index, span) in spans.iter().enumerate() {
        if span.start >= span.end {
            return Err(DatapipeError::EmptySpan {
                index,
                start: span.start,
                end: span.end,
            });
        }
        if span.end > num_words {
            return Err(DatapipeError::SpanOutOfBounds {
                index,
                start: span.start,
                end: span.end,
                words: num_words,
            });
        }
        let tag = match (span.kind, span.repetition) {
            (DisfKind::Reparandum, true) => DisfTag::RRt,
            (DisfKind::Reparandum, false) => DisfTag::R,
            (DisfKind::Repair, true) => DisfTag::CRt,
            (DisfKind::Repair, false) => DisfTag::C,
            (DisfKind::Filler, _) => DisfTag::F,
            (DisfKind::Edit, _) => DisfTag::D,
        };
        for t in &mut tags[span.start..span.end] {
            *t = tag;
        }
    }
    Ok(tags)
}

/// Accumulates [`CorpusStats`] over a record stream.
pub fn corpus_stats<'a, I>(records: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a AlignedExample>,
{
    use crate::tags::{extract_itn_spans, TaskTag};
    let mut stats = CorpusStats::default();
    for rec in records {
        stats.records += 1;
        stats.words += rec.spoken_words.len() as u64;
        for t in &rec.tags.itn {
            *stats.itn_tags.entry(t.as_str().to_string()).or_insert(0) += 1;
        }
        for t in &rec.tags.punct {
            *stats.punct_tags.entry(t.as_str().to_string()).or_insert(0) += 1;
        }
        for t in &rec.tags.cap {
            *stats.cap_tags.entry(t.as_str().to_string()).or_insert(0) += 1;
        }
        for t in &rec.tags.disf {
            *stats.disf_tags.entry(t.as_str().to_string()).or_insert(0) += 1;
        }
        if let Ok(spans) = extract_itn_spans(&rec.tags.itn) {
            for span in spans {
                *stats
                    .entity_spans
                    .entry(span.entity_type.name().to_string())
                    .or_insert(0) += 1;
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::EntityType;
    use std::sync::OnceLock;

    fn grammars() -> &'static GrammarSet {
        static G: OnceLock<GrammarSet> = OnceLock::new();
        G.get_or_init(GrammarSet::builtin)
    }

    #[test]
    fn clean_rejects_quotes_and_parens() {
        assert_eq!(clean_record("He said \"hi\" (loudly)."), None);
        assert_eq!(clean_record("see (note) here now"), None);
    }

    #[test]
    fn clean_rejects_short_records() {
        assert_eq!(clean_record("It costs $5."), None);
        assert_eq!(clean_record("one two three"), None);
        assert!(clean_record("one two three four").is_some());
    }

    #[test]
    fn clean_normalizes_whitespace_and_stray_punct() {
        assert_eq!(
            clean_record("a   b\tc d .").as_deref(),
            Some("a b c d.")
        );
    }

    #[test]
    fn clean_strips_disallowed_chars() {
        assert_eq!(
            clean_record("price* is $5 #total & more").as_deref(),
            Some("price is $5 total more")
        );
    }

    #[test]
    fn clean_keeps_midword_hyphen_drops_dangling() {
        assert_eq!(
            clean_record("a well-known fact - indeed so").as_deref(),
            Some("a well-known fact indeed so")
        );
    }

    #[test]
    fn clean_is_idempotent() {
        for raw in [
            "a   b\tc d .",
            "It costs $5 every single day.",
            "Meet me at 4:30 PM, okay?",
        ] {
            let once = clean_record(raw).unwrap();
            assert_eq!(clean_record(&once).as_deref(), Some(once.as_str()));
        }
    }

    #[test]
    fn derive_cap_buckets() {
        assert_eq!(derive_cap("hello"), CapTag::O);
        assert_eq!(derive_cap("Hello"), CapTag::C);
        assert_eq!(derive_cap("NASA"), CapTag::U);
        assert_eq!(derive_cap("I"), CapTag::C);
        assert_eq!(derive_cap("42"), CapTag::O);
    }

    #[test]
    fn generate_all_o_sentence() {
        let ex = generate_example("r1", "it is nice today", grammars()).unwrap();
        assert_eq!(ex.spoken_words, ["it", "is", "nice", "today"]);
        assert_eq!(ex.tags, TagSet::all_o(4));
    }

    #[test]
    fn generate_phone_sentence() {
        let ex = generate_example("r2", "Call me at 805-670-0423.", grammars()).unwrap();
        assert_eq!(
            ex.spoken_words,
            [
                "call", "me", "at", "eight", "zero", "five", "six", "seven", "zero", "zero",
                "four", "two", "three"
            ]
        );
        assert_eq!(ex.tags.cap[0], CapTag::C);
        assert_eq!(ex.tags.itn[3], ItnTag::Begin(EntityType::Numeric));
        assert!(ex.tags.itn[4..13]
            .iter()
            .all(|t| *t == ItnTag::Cont(EntityType::Numeric)));
        assert_eq!(*ex.tags.punct.last().unwrap(), PunctTag::Period);
        assert!(ex.tags.punct[..12].iter().all(|p| *p == PunctTag::O));
    }

    #[test]
    fn generate_time_sentence() {
        let ex = generate_example("r3", "Meet me at 4:30 PM.", grammars()).unwrap();
        assert_eq!(
            ex.spoken_words,
            ["meet", "me", "at", "four", "thirty", "p", "m"]
        );
        let spans = crate::tags::extract_itn_spans(&ex.tags.itn).unwrap();
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].entity_type, EntityType::Time);
        assert_eq!((spans[0].start, spans[0].end), (3, 7));
    }

    #[test]
    fn generate_entity_does_not_cross_punct() {
        // "4:30, PM" must not be matched as one time entity
        let ex = generate_example("r4", "I said 4:30, PM sharp", grammars()).unwrap();
        let spans = crate::tags::extract_itn_spans(&ex.tags.itn).unwrap();
        for span in spans {
            let interior = &ex.tags.punct[span.start..span.end - 1];
            assert!(interior.iter().all(|p| *p == PunctTag::O));
        }
    }

    #[test]
    fn generate_quarantines_unroundtrippable() {
        let err = generate_example("r5", "the iPhone is quite new", grammars()).unwrap_err();
        assert!(matches!(err, DatapipeError::RoundTrip { .. }));
    }

    #[test]
    fn split_sizes() {
        let rec = |i: usize| AlignedExample {
            source_id: format!("s{i}"),
            spoken_words: vec!["w".into()],
            tags: TagSet::all_o(1),
            written_text: "w".into(),
        };
        let recs: Vec<_> = (0..100).map(rec).collect();
        let (train, val) = split_dataset(recs, 7);
        assert_eq!((train.len(), val.len()), (90, 10));

        let (train, val) = split_dataset(vec![rec(0)], 7);
        assert_eq!((train.len(), val.len()), (0, 1));

        let (train, val) = split_dataset((0..15).map(rec).collect(), 7);
        assert_eq!((train.len(), val.len()), (13, 2));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let recs: Vec<_> = (0..57)
            .map(|i| AlignedExample {
                source_id: format!("s{i}"),
                spoken_words: vec![format!("w{i}")],
                tags: TagSet::all_o(1),
                written_text: format!("w{i}"),
            })
            .collect();
        let (t1, v1) = split_dataset(recs.clone(), 42);
        let (t2, v2) = split_dataset(recs.clone(), 42);
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);
        let mut ids: Vec<_> = t1.iter().chain(&v1).map(|r| r.source_id.clone()).collect();
        ids.sort();
        let mut want: Vec<_> = recs.iter().map(|r| r.source_id.clone()).collect();
        want.sort();
        assert_eq!(ids, want);
        // a different seed should give a different shuffle
        let (t3, _) = split_dataset(recs, 43);
        assert_ne!(t1, t3);
    }

    #[test]
    fn map_dialog_acts_canonical_repair() {
        let spans = [
            DisfSpan {
                kind: DisfKind::Reparandum,
                repetition: true,
                start: 0,
                end: 1,
            },
            DisfSpan {
                kind: DisfKind::Repair,
                repetition: true,
                start: 1,
                end: 2,
            },
            DisfSpan {
                kind: DisfKind::Filler,
                repetition: false,
                start: 2,
                end: 3,
            },
        ];
        assert_eq!(
            map_dialog_acts(4, &spans).unwrap(),
            [DisfTag::RRt, DisfTag::CRt, DisfTag::F, DisfTag::O]
        );
    }

    #[test]
    fn map_dialog_acts_trivia() {
        assert_eq!(map_dialog_acts(3, &[]).unwrap(), [DisfTag::O; 3]);
        let filler = [DisfSpan {
            kind: DisfKind::Filler,
            repetition: false,
            start: 0,
            end: 1,
        }];
        assert_eq!(map_dialog_acts(1, &filler).unwrap(), [DisfTag::F]);
    }

    #[test]
    fn map_dialog_acts_errors() {
        let bad = [DisfSpan {
            kind: DisfKind::Edit,
            repetition: false,
            start: 2,
            end: 5,
        }];
        assert!(matches!(
            map_dialog_acts(3, &bad).unwrap_err(),
            DatapipeError::SpanOutOfBounds { index: 0, .. }
        ));
        let empty = [DisfSpan {
            kind: DisfKind::Edit,
            repetition: false,
            start: 1,
            end: 1,
        }];
        assert!(matches!(
            map_dialog_acts(2, &empty).unwrap_err(),
            DatapipeError::EmptySpan { index: 0, .. }
        ));
    }

    #[test]
    fn markup_json_round_trip() {
        let line = r#"{"words":["i","i","mean","yes"],"spans":[{"kind":"reparandum","repetition":true,"start":0,"end":1}]}"#;
        let markup: DisfMarkup = serde_json::from_str(line).unwrap();
        assert_eq!(markup.words.len(), 4);
        assert_eq!(markup.spans[0].kind, DisfKind::Reparandum);
        let back = serde_json::to_string(&markup).unwrap();
        let again: DisfMarkup = serde_json::from_str(&back).unwrap();
        assert_eq!(markup, again);
    }

    #[test]
    fn stats_counts() {
        let empty: Vec<AlignedExample> = Vec::new();
        assert_eq!(corpus_stats(&empty), CorpusStats::default());

        let a = generate_example("a", "Call me at 4:30 PM.", grammars()).unwrap();
        let b = generate_example("b", "it is nice today", grammars()).unwrap();
        let stats = corpus_stats([&a, &b]);
        assert_eq!(stats.records, 2);
        assert_eq!(
            stats.words,
            (a.spoken_words.len() + b.spoken_words.len()) as u64
        );
        assert_eq!(stats.entity_spans.get("time"), Some(&1));
        let tag_total: u64 = stats.itn_tags.values().sum();
        assert_eq!(tag_total, stats.words);
    }
}
