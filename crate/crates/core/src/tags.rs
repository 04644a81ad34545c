//! Tag taxonomies shared by every stage of the pipeline: the four parallel
//! per-position tag sequences (ITN, punctuation, capitalization, disfluency),
//! entity span extraction, and the tag-column text format.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five ITN entity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Alphanumeric,
    Numeric,
    Ordinal,
    Money,
    Time,
}

impl EntityType {
    pub const ALL: [EntityType; 5] = [
        EntityType::Alphanumeric,
        EntityType::Numeric,
        EntityType::Ordinal,
        EntityType::Money,
        EntityType::Time,
    ];

    /// Lowercase name used in serialized tags and grammar entry points.
    pub fn name(self) -> &'static str {
        match self {
            EntityType::Alphanumeric => "alphanumeric",
            EntityType::Numeric => "numeric",
            EntityType::Ordinal => "ordinal",
            EntityType::Money => "money",
            EntityType::Time => "time",
        }
    }

    pub fn from_name(name: &str) -> Option<EntityType> {
        EntityType::ALL.iter().copied().find(|e| e.name() == name)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// ITN tag: `O`, span opener (entity name), or span continuation
/// (entity name with a leading underscore).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItnTag {
    O,
    Begin(EntityType),
    Cont(EntityType),
}

/// Punctuation appended to the end of the tagged word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PunctTag {
    O,
    Comma,
    Period,
    QuestionMark,
}

impl PunctTag {
    /// The character appended for a non-O tag.
    pub fn character(self) -> Option<char> {
        match self {
            PunctTag::O => None,
            PunctTag::Comma => Some(','),
            PunctTag::Period => Some('.'),
            PunctTag::QuestionMark => Some('?'),
        }
    }
}

/// Capitalization: all lowercase, first letter capitalized, or all uppercase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CapTag {
    O,
    C,
    U,
}

/// Disfluency classes following the SwDA-derived taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DisfTag {
    O,
    /// Correction of repetition.
    CRt,
    /// Reparandum repetition.
    RRt,
    /// Correction.
    C,
    /// Reparandum.
    R,
    /// Filler word.
    F,
    /// All other disfluency.
    D,
}

/// Identifies one of the four tagging tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Itn,
    Punct,
    Cap,
    Disf,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Itn, Task::Punct, Task::Cap, Task::Disf];

    pub fn name(self) -> &'static str {
        match self {
            Task::Itn => "itn",
            Task::Punct => "punct",
            Task::Cap => "cap",
            Task::Disf => "disf",
        }
    }

    /// Number of tag classes for this task's classification head.
    pub fn class_count(self) -> usize {
        match self {
            Task::Itn => 11,
            Task::Punct => 4,
            Task::Cap => 3,
            Task::Disf => 7,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A decoded tag from any of the four tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnyTag {
    Itn(ItnTag),
    Punct(PunctTag),
    Cap(CapTag),
    Disf(DisfTag),
}

pub trait TaskTag: Sized + Copy + Eq {
    const TASK: Task;
    /// Serialized spelling of the tag.
    fn as_str(&self) -> &'static str;
    fn parse(s: &str) -> Option<Self>;
    /// Dense class index; `O` is always index 0.
    fn class_index(&self) -> usize;
    fn from_class_index(idx: usize) -> Option<Self>;
    fn is_o(&self) -> bool {
        self.class_index() == 0
    }
}

impl TaskTag for ItnTag {
    const TASK: Task = Task::Itn;

    fn as_str(&self) -> &'static str {
        match self {
            ItnTag::O => "O",
            ItnTag::Begin(e) => e.name(),
            ItnTag::Cont(EntityType::Alphanumeric) => "_alphanumeric",
            ItnTag::Cont(EntityType::Numeric) => "_numeric",
            ItnTag::Cont(EntityType::Ordinal) => "_ordinal",
            ItnTag::Cont(EntityType::Money) => "_money",
            ItnTag::Cont(EntityType::Time) => "_time",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        if s == "O" {
            return Some(ItnTag::O);
        }
        if let Some(rest) = s.strip_prefix('_') {
            return EntityType::from_name(rest).map(ItnTag::Cont);
        }
        EntityType::from_name(s).map(ItnTag::Begin)
    }

    fn class_index(&self) -> usize {
        match self {
            ItnTag::O => 0,
            ItnTag::Begin(e) => 1 + *e as usize,
            ItnTag::Cont(e) => 6 + *e as usize,
        }
    }

    fn from_class_index(idx: usize) -> Option<Self> {
        match idx {
            0 => Some(ItnTag::O),
            1..=5 => Some(ItnTag::Begin(EntityType::ALL[idx - 1])),
            6..=10 => Some(ItnTag::Cont(EntityType::ALL[idx - 6])),
            _ => None,
        }
    }
}

impl TaskTag for PunctTag {
    const TASK: Task = Task::Punct;

    fn as_str(&self) -> &'static str {
        match self {
            PunctTag::O => "O",
            PunctTag::Comma => "comma",
            PunctTag::Period => "period",
            PunctTag::QuestionMark => "question_mark",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "O" => Some(PunctTag::O),
            "comma" => Some(PunctTag::Comma),
            "period" => Some(PunctTag::Period),
            "question_mark" => Some(PunctTag::QuestionMark),
            _ => None,
        }
    }

    fn class_index(&self) -> usize {
        *self as usize
    }

    fn from_class_index(idx: usize) -> Option<Self> {
        [
            PunctTag::O,
            PunctTag::Comma,
            PunctTag::Period,
            PunctTag::QuestionMark,
        ]
        .get(idx)
        .copied()
    }
}

impl TaskTag for CapTag {
    const TASK: Task = Task::Cap;

    fn as_str(&self) -> &'static str {
        match self {
            CapTag::O => "O",
            CapTag::C => "C",
            CapTag::U => "U",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "O" => Some(CapTag::O),
            "C" => Some(CapTag::C),
            "U" => Some(CapTag::U),
            _ => None,
        }
    }

    fn class_index(&self) -> usize {
        *self as usize
    }

    fn from_class_index(idx: usize) -> Option<Self> {
        [CapTag::O, CapTag::C, CapTag::U].get(idx).copied()
    }
}

impl TaskTag for DisfTag {
    const TASK: Task = Task::Disf;

    fn as_str(&self) -> &'static str {
        match self {
            DisfTag::O => "O",
            DisfTag::CRt => "C_RT",
            DisfTag::RRt => "R_RT",
            DisfTag::C => "C",
            DisfTag::R => "R",
            DisfTag::F => "F",
            DisfTag::D => "D",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "O" => Some(DisfTag::O),
            "C_RT" => Some(DisfTag::CRt),
            "R_RT" => Some(DisfTag::RRt),
            "C" => Some(DisfTag::C),
            "R" => Some(DisfTag::R),
            "F" => Some(DisfTag::F),
            "D" => Some(DisfTag::D),
            _ => None,
        }
    }

    fn class_index(&self) -> usize {
        *self as usize
    }

    fn from_class_index(idx: usize) -> Option<Self> {
        [
            DisfTag::O,
            DisfTag::CRt,
            DisfTag::RRt,
            DisfTag::C,
            DisfTag::R,
            DisfTag::F,
            DisfTag::D,
        ]
        .get(idx)
        .copied()
    }
}

/// A maximal run of positions tagged as one ITN entity type.
/// `start` is inclusive, `end` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
}

impl EntitySpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

/// The four parallel tag sequences for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TagSet {
    pub itn: Vec<ItnTag>,
    pub punct: Vec<PunctTag>,
    pub cap: Vec<CapTag>,
    pub disf: Vec<DisfTag>,
}

impl TagSet {
    /// All-O tags for `len` positions.
    pub fn all_o(len: usize) -> TagSet {
        TagSet {
            itn: vec![ItnTag::O; len],
            punct: vec![PunctTag::O; len],
            cap: vec![CapTag::O; len],
            disf: vec![DisfTag::O; len],
        }
    }

    pub fn len(&self) -> usize {
        self.itn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.itn.is_empty()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TagError {
    #[error("unknown {task} tag `{token}` at column {column}")]
    UnknownTag {
        task: Task,
        token: String,
        column: usize,
    },
    #[error("orphan continuation at {0}")]
    OrphanCont(usize),
    #[error("continuation type mismatch at {position}: expected {expected}, found {found}")]
    ContTypeMismatch {
        position: usize,
        expected: EntityType,
        found: EntityType,
    },
    #[error("length mismatch: itn {itn}, punct {punct}, cap {cap}, disf {disf}")]
    LengthMismatch {
        itn: usize,
        punct: usize,
        cap: usize,
        disf: usize,
    },
}

/// Parses a whitespace-separated tag line for one task.
pub fn parse_tag_line<T: TaskTag>(line: &str) -> Result<Vec<T>, TagError> {
    line.split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            T::parse(tok).ok_or_else(|| TagError::UnknownTag {
                task: T::TASK,
                token: tok.to_string(),
                column: i,
            })
        })
        .collect()
}

/// Serializes a tag sequence as a whitespace-separated line.
/// Inverse of [`parse_tag_line`].
pub fn serialize_tag_line<T: TaskTag>(tags: &[T]) -> String {
    tags.iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Extracts maximal entity spans from a well-formed ITN tag sequence.
///
/// A `Begin` tag always opens a new span, even when the preceding position
/// carries the same entity type.
pub fn extract_itn_spans(itn: &[ItnTag]) -> Result<Vec<EntitySpan>, TagError> {
    check_itn_well_formed(itn)?;
    let mut spans = Vec::new();
    let mut current: Option<EntitySpan> = None;
    for (i, tag) in itn.iter().enumerate() {
        match tag {
            ItnTag::O => {
                if let Some(span) = current.take() {
                    spans.push(span);
                }
            }
            ItnTag::Begin(e) => {
                if let Some(span) = current.take() {
                    spans.push(span);
                }
                current = Some(EntitySpan {
                    entity_type: *e,
                    start: i,
                    end: i + 1,
                });
            }
            ItnTag::Cont(_) => {
                // well-formedness guarantees current is Some with matching type
                current.as_mut().expect("checked well-formed").end = i + 1;
            }
        }
    }
    if let Some(span) = current {
        spans.push(span);
    }
    Ok(spans)
}

fn check_itn_well_formed(itn: &[ItnTag]) -> Result<(), TagError> {
    let mut open: Option<EntityType> = None;
    for (i, tag) in itn.iter().enumerate() {
        match tag {
            ItnTag::O => open = None,
            ItnTag::Begin(e) => open = Some(*e),
            ItnTag::Cont(e) => match open {
                None => return Err(TagError::OrphanCont(i)),
                Some(prev) if prev != *e => {
                    return Err(TagError::ContTypeMismatch {
                        position: i,
                        expected: prev,
                        found: *e,
                    })
                }
                Some(_) => {}
            },
        }
    }
    Ok(())
}

/// Checks equal lengths and ITN well-formedness; returns the first violation.
pub fn validate_tagset(tags: &TagSet) -> Result<(), TagError> {
    let n = tags.itn.len();
    if tags.punct.len() != n || tags.cap.len() != n || tags.disf.len() != n {
        return Err(TagError::LengthMismatch {
            itn: tags.itn.len(),
            punct: tags.punct.len(),
            cap: tags.cap.len(),
            disf: tags.disf.len(),
        });
    }
    check_itn_well_formed(&tags.itn)
}

/// One record of the tag-column text format:
/// `tokens<TAB>itn<TAB>punct<TAB>cap<TAB>disf`, each field whitespace-separated.
#[derive(Debug, Clone, PartialEq)]
pub struct TagRecord {
    pub words: Vec<String>,
    pub tags: TagSet,
}

#[derive(Debug, Error)]
pub enum TagFormatError {
    #[error("line {line}: expected 5 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: {source}")]
    Tag { line: usize, source: TagError },
    #[error("line {line}: field token counts differ from word count {words}")]
    TokenCount { line: usize, words: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses one tag-column record. `line_no` is used for error reporting only.
pub fn parse_tag_record(line: &str, line_no: usize) -> Result<TagRecord, TagFormatError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(TagFormatError::FieldCount {
            line: line_no,
            found: fields.len(),
        });
    }
    let words: Vec<String> = fields[0].split_whitespace().map(str::to_string).collect();
    let tag_err = |source| TagFormatError::Tag {
        line: line_no,
        source,
    };
    let tags = TagSet {
        itn: parse_tag_line(fields[1]).map_err(tag_err)?,
        punct: parse_tag_line(fields[2]).map_err(tag_err)?,
        cap: parse_tag_line(fields[3]).map_err(tag_err)?,
        disf: parse_tag_line(fields[4]).map_err(tag_err)?,
    };
    if tags.itn.len() != words.len() {
        return Err(TagFormatError::TokenCount {
            line: line_no,
            words: words.len(),
        });
    }
    validate_tagset(&tags).map_err(tag_err)?;
    Ok(TagRecord { words, tags })
}

/// Serializes one record in the tag-column format (no trailing newline).
pub fn serialize_tag_record(record: &TagRecord) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}",
        record.words.join(" "),
        serialize_tag_line(&record.tags.itn),
        serialize_tag_line(&record.tags.punct),
        serialize_tag_line(&record.tags.cap),
        serialize_tag_line(&record.tags.disf),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_itn_line_underscore_convention() {
        let tags: Vec<ItnTag> = parse_tag_line("time _time _time _time").unwrap();
        assert_eq!(
            tags,
            vec![
                ItnTag::Begin(EntityType::Time),
                ItnTag::Cont(EntityType::Time),
                ItnTag::Cont(EntityType::Time),
                ItnTag::Cont(EntityType::Time),
            ]
        );
    }

    #[test]
    fn parse_punct_identity() {
        let tags: Vec<PunctTag> = parse_tag_line("O O O").unwrap();
        assert_eq!(tags, vec![PunctTag::O; 3]);
    }

    #[test]
    fn parse_disf_names() {
        let tags: Vec<DisfTag> = parse_tag_line("C_RT R F").unwrap();
        assert_eq!(tags, vec![DisfTag::CRt, DisfTag::R, DisfTag::F]);
    }

    #[test]
    fn parse_unknown_tag_reports_column() {
        let err = parse_tag_line::<PunctTag>("O bogus").unwrap_err();
        assert_eq!(
            err,
            TagError::UnknownTag {
                task: Task::Punct,
                token: "bogus".to_string(),
                column: 1
            }
        );
    }

    #[test]
    fn serialize_money_span() {
        let line = serialize_tag_line(&[
            ItnTag::Begin(EntityType::Money),
            ItnTag::Cont(EntityType::Money),
        ]);
        assert_eq!(line, "money _money");
    }

    #[test]
    fn serialize_empty() {
        assert_eq!(serialize_tag_line::<ItnTag>(&[]), "");
    }

    #[test]
    fn serialize_punct() {
        assert_eq!(
            serialize_tag_line(&[PunctTag::O, PunctTag::Period]),
            "O period"
        );
    }

    #[test]
    fn spans_single_time_entity() {
        let itn = vec![
            ItnTag::O,
            ItnTag::Begin(EntityType::Time),
            ItnTag::Cont(EntityType::Time),
            ItnTag::Cont(EntityType::Time),
            ItnTag::Cont(EntityType::Time),
        ];
        assert_eq!(
            extract_itn_spans(&itn).unwrap(),
            vec![EntitySpan {
                entity_type: EntityType::Time,
                start: 1,
                end: 5
            }]
        );
    }

    #[test]
    fn spans_none() {
        assert_eq!(extract_itn_spans(&[ItnTag::O, ItnTag::O]).unwrap(), vec![]);
    }

    #[test]
    fn begin_splits_adjacent_same_type_runs() {
        let itn = vec![
            ItnTag::Begin(EntityType::Numeric),
            ItnTag::Cont(EntityType::Numeric),
            ItnTag::Begin(EntityType::Numeric),
        ];
        let spans = extract_itn_spans(&itn).unwrap();
        assert_eq!(
            spans,
            vec![
                EntitySpan {
                    entity_type: EntityType::Numeric,
                    start: 0,
                    end: 2
                },
                EntitySpan {
                    entity_type: EntityType::Numeric,
                    start: 2,
                    end: 3
                },
            ]
        );
        // cross-check with an independent run-length scan
        assert_eq!(spans, brute_force_spans(&itn));
    }

    #[test]
    fn orphan_cont_is_error() {
        let err = extract_itn_spans(&[ItnTag::Cont(EntityType::Time)]).unwrap_err();
        assert_eq!(err, TagError::OrphanCont(0));
    }

    #[test]
    fn cont_type_mismatch_is_error() {
        let err = extract_itn_spans(&[
            ItnTag::Begin(EntityType::Time),
            ItnTag::Cont(EntityType::Money),
        ])
        .unwrap_err();
        assert!(matches!(err, TagError::ContTypeMismatch { position: 1, .. }));
    }

    #[test]
    fn validate_ok() {
        let mut t = TagSet::all_o(3);
        t.itn[0] = ItnTag::Begin(EntityType::Money);
        t.itn[1] = ItnTag::Cont(EntityType::Money);
        assert!(validate_tagset(&t).is_ok());
    }

    #[test]
    fn validate_orphan() {
        let t = TagSet {
            itn: vec![ItnTag::Cont(EntityType::Time)],
            punct: vec![PunctTag::O],
            cap: vec![CapTag::O],
            disf: vec![DisfTag::O],
        };
        assert_eq!(validate_tagset(&t).unwrap_err(), TagError::OrphanCont(0));
    }

    #[test]
    fn validate_length_mismatch() {
        let t = TagSet {
            itn: vec![ItnTag::O; 3],
            punct: vec![PunctTag::O; 2],
            cap: vec![CapTag::O; 3],
            disf: vec![DisfTag::O; 3],
        };
        assert!(matches!(
            validate_tagset(&t).unwrap_err(),
            TagError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn tag_record_round_trip() {
        let rec = TagRecord {
            words: vec!["four".into(), "thirty".into(), "p".into(), "m".into()],
            tags: TagSet {
                itn: vec![
                    ItnTag::Begin(EntityType::Time),
                    ItnTag::Cont(EntityType::Time),
                    ItnTag::Cont(EntityType::Time),
                    ItnTag::Cont(EntityType::Time),
                ],
                punct: vec![PunctTag::O, PunctTag::O, PunctTag::O, PunctTag::Period],
                cap: vec![CapTag::O; 4],
                disf: vec![DisfTag::O; 4],
            },
        };
        let line = serialize_tag_record(&rec);
        assert_eq!(parse_tag_record(&line, 1).unwrap(), rec);
    }

    /// Independent run-length scanner used as an oracle for span extraction.
    fn brute_force_spans(itn: &[ItnTag]) -> Vec<EntitySpan> {
        let mut spans = Vec::new();
        let mut i = 0;
        while i < itn.len() {
            if let ItnTag::Begin(e) = itn[i] {
                let mut j = i + 1;
                while j < itn.len() && itn[j] == ItnTag::Cont(e) {
                    j += 1;
                }
                spans.push(EntitySpan {
                    entity_type: e,
                    start: i,
                    end: j,
                });
                i = j;
            } else {
                i += 1;
            }
        }
        spans
    }

    fn arb_entity() -> impl Strategy<Value = EntityType> {
        prop::sample::select(EntityType::ALL.to_vec())
    }

    /// Random well-formed ITN sequences up to length 50.
    fn arb_well_formed_itn() -> impl Strategy<Value = Vec<ItnTag>> {
        prop::collection::vec((0u8..3, arb_entity(), 1usize..4), 0..12).prop_map(|chunks| {
            let mut out = Vec::new();
            for (kind, e, span_len) in chunks {
                match kind {
                    0 => out.push(ItnTag::O),
                    _ => {
                        out.push(ItnTag::Begin(e));
                        for _ in 1..span_len {
                            out.push(ItnTag::Cont(e));
                        }
                    }
                }
            }
            out.truncate(50);
            // truncation cannot orphan a Cont: prefixes of well-formed
            // sequences are well-formed
            out
        })
    }

    proptest! {
        #[test]
        fn spans_partition_non_o_positions(itn in arb_well_formed_itn()) {
            let spans = extract_itn_spans(&itn).unwrap();
            let mut covered = vec![false; itn.len()];
            for s in &spans {
                prop_assert!(s.start < s.end);
                for i in s.start..s.end {
                    prop_assert!(!covered[i], "overlap at {}", i);
                    covered[i] = true;
                }
            }
            for (i, tag) in itn.iter().enumerate() {
                prop_assert_eq!(covered[i], *tag != ItnTag::O);
            }
            prop_assert_eq!(spans, brute_force_spans(&itn));
        }

        #[test]
        fn itn_line_round_trip(itn in arb_well_formed_itn()) {
            let line = serialize_tag_line(&itn);
            prop_assert_eq!(parse_tag_line::<ItnTag>(&line).unwrap(), itn);
        }

        #[test]
        fn punct_line_round_trip(tags in prop::collection::vec(0usize..4, 0..50)) {
            let tags: Vec<PunctTag> =
                tags.into_iter().map(|i| PunctTag::from_class_index(i).unwrap()).collect();
            let line = serialize_tag_line(&tags);
            prop_assert_eq!(parse_tag_line::<PunctTag>(&line).unwrap(), tags);
        }

        #[test]
        fn cap_line_round_trip(tags in prop::collection::vec(0usize..3, 0..50)) {
            let tags: Vec<CapTag> =
                tags.into_iter().map(|i| CapTag::from_class_index(i).unwrap()).collect();
            let line = serialize_tag_line(&tags);
            prop_assert_eq!(parse_tag_line::<CapTag>(&line).unwrap(), tags);
        }

        #[test]
        fn disf_line_round_trip(tags in prop::collection::vec(0usize..7, 0..50)) {
            let tags: Vec<DisfTag> =
                tags.into_iter().map(|i| DisfTag::from_class_index(i).unwrap()).collect();
            let line = serialize_tag_line(&tags);
            prop_assert_eq!(parse_tag_line::<DisfTag>(&line).unwrap(), tags);
        }
    }
}
