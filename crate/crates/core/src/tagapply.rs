//! Stage 2: turns spoken-form words plus word-level tags into written-form
//! text. Entity spans are formatted by the grammar set; punctuation,
//! capitalization, and disfluency tags are applied by rule.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tags::{
    extract_itn_spans, validate_tagset, CapTag, DisfTag, EntitySpan, PunctTag, TagError, TagSet,
};
use crate::wfst::GrammarSet;

#[derive(Debug, Error, PartialEq)]
pub enum ApplyError {
    #[error("{0}")]
    Tag(#[from] TagError),
    #[error("tags length {tags} does not match word count {words}")]
    LengthMismatch { tags: usize, words: usize },
    #[error("empty span")]
    EmptySpan,
}

/// Result of applying tags to one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormattedOutput {
    pub text: String,
    /// (input word range, output word range) per kept unit, in order.
    pub word_alignment: Vec<(Range<usize>, Range<usize>)>,
    /// Input indices removed as disfluent.
    pub dropped: Vec<usize>,
    /// Spans where the grammar returned NoParse; their words were emitted
    /// verbatim.
    pub unparsed_spans: Vec<EntitySpan>,
}

/// Merge rule for a span whose words collapse into one formatted unit:
/// the last punctuation tag and the first capitalization tag win.
pub fn merge_span_tags(
    span: &EntitySpan,
    punct: &[PunctTag],
    cap: &[CapTag],
) -> Result<(PunctTag, CapTag), ApplyError> {
    if span.is_empty() || punct.is_empty() || cap.is_empty() {
        return Err(ApplyError::EmptySpan);
    }
    Ok((*punct.last().unwrap(), cap[0]))
}

/// Keeps only the words whose disfluency tag is `O`, order preserved.
pub fn remove_disfluencies(words: &[String], disf: &[DisfTag]) -> Result<Vec<String>, ApplyError> {
    if words.len() != disf.len() {
        return Err(ApplyError::LengthMismatch {
            tags: disf.len(),
            words: words.len(),
        });
    }
    Ok(words
        .iter()
        .zip(disf)
        .filter(|(_, d)| **d == DisfTag::O)
        .map(|(w, _)| w.clone())
        .collect())
}

fn capitalize_first(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    let mut done = false;
    for ch in word.chars() {
        if !done && ch.is_alphabetic() {
            out.extend(ch.to_uppercase());
            done = true;
        } else {
            out.push(ch);
        }
    }
    out
}

/// One output unit before deletion/casing: either a plain word or a
/// formatted entity span.
struct Unit {
    input: Range<usize>,
    words: Vec<String>,
    punct: PunctTag,
    cap: CapTag,
    disfluent: bool,
    grammar_formatted: bool,
}

/// Applies the four tag sequences to produce written-form text.
///
/// Pipeline order: ITN span formatting, disfluency deletion, capitalization,
/// punctuation, then joining with single spaces. A span is treated as
/// disfluent only when every word in it is disfluency-tagged, so formatted
/// entities survive stray disfluency tags on their inner words.
pub fn apply_tags(
    words: &[String],
    tags: &TagSet,
    grammars: &GrammarSet,
) -> Result<FormattedOutput, ApplyError> {
    validate_tagset(tags)?;
    if tags.len() != words.len() {
        return Err(ApplyError::LengthMismatch {
            tags: tags.len(),
            words: words.len(),
        });
    }

    let spans = extract_itn_spans(&tags.itn)?;
    let mut unparsed_spans = Vec::new();
    let mut units: Vec<Unit> = Vec::new();
    let mut pos = 0;
    let mut span_iter = spans.iter().peekable();
    while pos < words.len() {
        match span_iter.peek() {
            Some(span) if span.start == pos => {
                let span = *span_iter.next().unwrap();
                let span_words = &words[span.start..span.end];
                match grammars.apply_itn(span.entity_type, span_words) {
                    Some(translation) => {
                        let (punct, cap) = merge_span_tags(
                            &span,
                            &tags.punct[span.start..span.end],
                            &tags.cap[span.start..span.end],
                        )?;
                        let disfluent = tags.disf[span.start..span.end]
                            .iter()
                            .all(|d| *d != DisfTag::O);
                        units.push(Unit {
                            input: span.start..span.end,
                            words: translation.output,
                            punct,
                            cap,
                            disfluent,
                            grammar_formatted: true,
                        });
                    }
                    None => {
                        // NoParse fallback: emit the span's words verbatim,
                        // each with its own tags
                        unparsed_spans.push(span);
                        for i in span.start..span.end {
                            units.push(Unit {
                                input: i..i + 1,
                                words: vec![words[i].clone()],
                                punct: tags.punct[i],
                                cap: tags.cap[i],
                                disfluent: tags.disf[i] != DisfTag::O,
                                grammar_formatted: false,
                            });
                        }
                    }
                }
                pos = span.end;
            }
            _ => {
                units.push(Unit {
                    input: pos..pos + 1,
                    words: vec![words[pos].clone()],
                    punct: tags.punct[pos],
                    cap: tags.cap[pos],
                    disfluent: tags.disf[pos] != DisfTag::O,
                    grammar_formatted: false,
                });
                pos += 1;
            }
        }
    }

    // disfluency deletion; a trailing deleted unit's punctuation migrates
    // to the new last unit so sentences stay terminated
    let mut dropped = Vec::new();
    let mut kept: Vec<Unit> = Vec::new();
    for unit in units {
        if unit.disfluent {
            dropped.extend(unit.input.clone());
        } else {
            kept.push(unit);
        }
    }
    if let Some(last_dropped) = dropped.last().copied() {
        if last_dropped == words.len() - 1 {
            let migrated = tags.punct[last_dropped];
            if migrated != PunctTag::O {
                if let Some(last_kept) = kept.last_mut() {
                    last_kept.punct = migrated;
                }
            }
        }
    }

    // capitalization and punctuation
    let mut out_words: Vec<String> = Vec::new();
    let mut word_alignment = Vec::new();
    for unit in &kept {
        let start = out_words.len();
        let mut formatted = unit.words.clone();
        match unit.cap {
            CapTag::O => {}
            CapTag::C => {
                // grammar-formatted spans keep the grammar's casing
                if !unit.grammar_formatted {
                    if let Some(first) = formatted.first_mut() {
                        *first = capitalize_first(first);
                    }
                }
            }
            CapTag::U => {
                for w in &mut formatted {
                    *w = w.to_uppercase();
                }
            }
        }
        if let Some(ch) = unit.punct.character() {
            if let Some(last) = formatted.last_mut() {
                last.push(ch);
            }
        }
        out_words.extend(formatted);
        word_alignment.push((unit.input.clone(), start..out_words.len()));
    }

    Ok(FormattedOutput {
        text: out_words.join(" "),
        word_alignment,
        dropped,
        unparsed_spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::{EntityType, ItnTag};
    use crate::wfst::GrammarSet;
    use std::sync::OnceLock;

    fn grammars() -> &'static GrammarSet {
        static G: OnceLock<GrammarSet> = OnceLock::new();
        G.get_or_init(GrammarSet::builtin)
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identity_with_all_o_tags() {
        let w = words("hello world");
        let out = apply_tags(&w, &TagSet::all_o(2), grammars()).unwrap();
        assert_eq!(out.text, "hello world");
        assert!(out.dropped.is_empty());
        assert!(out.unparsed_spans.is_empty());
    }

    #[test]
    fn phone_number_sentence() {
        let w = words("please call me back at eight oh five six seven zero zero four two three");
        let mut tags = TagSet::all_o(w.len());
        tags.itn[5] = ItnTag::Begin(EntityType::Numeric);
        for t in tags.itn.iter_mut().take(15).skip(6) {
            *t = ItnTag::Cont(EntityType::Numeric);
        }
        tags.punct[14] = PunctTag::Period;
        tags.cap[0] = CapTag::C;
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "Please call me back at 805-670-0423.");
    }

    #[test]
    fn filler_deleted_cap_on_tagged_word() {
        let w = words("um yes");
        let mut tags = TagSet::all_o(2);
        tags.disf[0] = DisfTag::F;
        tags.punct[1] = PunctTag::Period;
        tags.cap[1] = CapTag::C;
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "Yes.");
        assert_eq!(out.dropped, vec![0]);
    }

    #[test]
    fn merge_rule_last_punct_first_cap() {
        let span = EntitySpan {
            entity_type: EntityType::Time,
            start: 0,
            end: 3,
        };
        let (p, c) = merge_span_tags(
            &span,
            &[PunctTag::O, PunctTag::O, PunctTag::Period],
            &[CapTag::C, CapTag::O, CapTag::O],
        )
        .unwrap();
        assert_eq!((p, c), (PunctTag::Period, CapTag::C));
    }

    #[test]
    fn merge_rule_single_word_span() {
        let span = EntitySpan {
            entity_type: EntityType::Numeric,
            start: 4,
            end: 5,
        };
        let (p, c) = merge_span_tags(&span, &[PunctTag::Comma], &[CapTag::U]).unwrap();
        assert_eq!((p, c), (PunctTag::Comma, CapTag::U));
    }

    #[test]
    fn merge_rule_two_word_span() {
        let span = EntitySpan {
            entity_type: EntityType::Money,
            start: 0,
            end: 2,
        };
        let (p, c) = merge_span_tags(
            &span,
            &[PunctTag::Comma, PunctTag::Period],
            &[CapTag::U, CapTag::C],
        )
        .unwrap();
        assert_eq!((p, c), (PunctTag::Period, CapTag::U));
    }

    #[test]
    fn merge_rule_empty_span_is_error() {
        let span = EntitySpan {
            entity_type: EntityType::Money,
            start: 2,
            end: 2,
        };
        assert_eq!(
            merge_span_tags(&span, &[], &[]).unwrap_err(),
            ApplyError::EmptySpan
        );
    }

    #[test]
    fn remove_disfluencies_repair() {
        let w = words("i i mean yes");
        let disf = [DisfTag::RRt, DisfTag::CRt, DisfTag::F, DisfTag::O];
        assert_eq!(remove_disfluencies(&w, &disf).unwrap(), vec!["yes"]);
    }

    #[test]
    fn remove_disfluencies_all_o() {
        let w = words("a b");
        assert_eq!(remove_disfluencies(&w, &[DisfTag::O; 2]).unwrap(), w);
    }

    #[test]
    fn remove_disfluencies_all_tagged() {
        let w = words("um uh");
        assert!(remove_disfluencies(&w, &[DisfTag::F; 2])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn remove_disfluencies_length_mismatch() {
        let w = words("a b");
        assert!(matches!(
            remove_disfluencies(&w, &[DisfTag::O]).unwrap_err(),
            ApplyError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn span_survives_partial_disfluency_tags() {
        // "oh" inside a tagged number must survive even if disfluency-tagged
        let w = words("eight oh five");
        let mut tags = TagSet::all_o(3);
        tags.itn[0] = ItnTag::Begin(EntityType::Numeric);
        tags.itn[1] = ItnTag::Cont(EntityType::Numeric);
        tags.itn[2] = ItnTag::Cont(EntityType::Numeric);
        tags.disf[1] = DisfTag::F;
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "805");
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn fully_disfluent_span_is_dropped() {
        let w = words("one two ok");
        let mut tags = TagSet::all_o(3);
        tags.itn[0] = ItnTag::Begin(EntityType::Numeric);
        tags.itn[1] = ItnTag::Cont(EntityType::Numeric);
        tags.disf[0] = DisfTag::R;
        tags.disf[1] = DisfTag::R;
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "ok");
        assert_eq!(out.dropped, vec![0, 1]);
    }

    #[test]
    fn trailing_deleted_word_migrates_punct() {
        let w = words("fine thanks uh");
        let mut tags = TagSet::all_o(3);
        tags.disf[2] = DisfTag::F;
        tags.punct[2] = PunctTag::Period;
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "fine thanks.");
    }

    #[test]
    fn noparse_falls_back_to_verbatim() {
        // "hello" is not in any grammar, so a Numeric span over it rejects
        let w = words("hello there");
        let mut tags = TagSet::all_o(2);
        tags.itn[0] = ItnTag::Begin(EntityType::Numeric);
        tags.cap[0] = CapTag::C;
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "Hello there");
        assert_eq!(out.unparsed_spans.len(), 1);
    }

    #[test]
    fn uppercase_overrides_grammar_casing() {
        let w = words("four thirty p m");
        let mut tags = TagSet::all_o(4);
        tags.itn[0] = ItnTag::Begin(EntityType::Time);
        for t in tags.itn.iter_mut().skip(1) {
            *t = ItnTag::Cont(EntityType::Time);
        }
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "4:30 PM");
        // C does not disturb grammar casing
        tags.cap[0] = CapTag::C;
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "4:30 PM");
    }

    #[test]
    fn capitalization_is_idempotent() {
        let once = capitalize_first("yes");
        assert_eq!(capitalize_first(&once), once);
    }

    #[test]
    fn alignment_covers_non_dropped_words() {
        let w = words("um the meeting is at four thirty");
        let mut tags = TagSet::all_o(7);
        tags.disf[0] = DisfTag::F;
        tags.itn[5] = ItnTag::Begin(EntityType::Time);
        tags.itn[6] = ItnTag::Cont(EntityType::Time);
        let out = apply_tags(&w, &tags, grammars()).unwrap();
        assert_eq!(out.text, "the meeting is at 4:30");
        let mut covered: Vec<usize> = out
            .word_alignment
            .iter()
            .flat_map(|(i, _)| i.clone())
            .collect();
        covered.extend(out.dropped.iter().copied());
        covered.sort_unstable();
        assert_eq!(covered, (0..7).collect::<Vec<_>>());
    }
}
