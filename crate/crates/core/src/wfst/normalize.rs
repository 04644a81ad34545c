//! Compiled grammar sets for the five entity types, spoken→written
//! translation, written→spoken normalization with alignment, and the
//! binary grammar archive format.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeMap, HashSet};
use std::io::{Read, Write};
use std::ops::Range;

use thiserror::Error;

use super::fst::{shortest_path, Fst};
use super::grammar::{parse_rules, GrammarError, RuleSet};
use super::symbol::{SymbolTable, EPSILON, SPACE};
use crate::tags::EntityType;

/// Entity priority for tie-breaking between grammars that match the same
/// written span: Money > Time > Ordinal > Numeric > Alphanumeric.
pub const ENTITY_PRIORITY: [EntityType; 5] = [
    EntityType::Money,
    EntityType::Time,
    EntityType::Ordinal,
    EntityType::Numeric,
    EntityType::Alphanumeric,
];

/// Longest written-word window considered for one entity match.
const MAX_MATCH_WORDS: usize = 6;

const ARCHIVE_MAGIC: &[u8; 4] = b"S2WG";
const ARCHIVE_VERSION: u8 = 1;

/// The spoken→written translation of one entity span.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationResult {
    /// Written-form words (grammar output pieces joined at separator pieces).
    pub output: Vec<String>,
    pub weight: f64,
    /// (input word range, output word range) pairs covering both sides.
    pub alignment: Vec<(Range<usize>, Range<usize>)>,
}

/// One aligned region of a normalized sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub written: Range<usize>,
    pub spoken: Range<usize>,
    pub entity: Option<EntityType>,
}

/// Written→spoken normalization output with entity annotations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalizedText {
    pub spoken: Vec<String>,
    pub segments: Vec<Segment>,
}

impl NormalizedText {
    /// Entity annotations as (type, spoken word range) pairs.
    pub fn annotations(&self) -> Vec<(EntityType, Range<usize>)> {
        self.segments
            .iter()
            .filter_map(|s| s.entity.map(|e| (e, s.spoken.clone())))
            .collect()
    }
}

/// Per-entity-type compiled FSTs over a shared symbol table.
///
/// The forward direction maps spoken words to written output pieces; the
/// written→spoken direction is its inversion. Immutable after compilation.
#[derive(Debug, Clone)]
pub struct GrammarSet {
    table: SymbolTable,
    forward: BTreeMap<EntityType, Fst>,
    inverse: BTreeMap<EntityType, Fst>,
    /// First characters of any input piece of the inverse grammar; used to
    /// skip hopeless match attempts.
    first_chars: BTreeMap<EntityType, HashSet<char>>,
}

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic; not a grammar archive")]
    BadMagic,
    #[error("unsupported archive version {0}")]
    BadVersion(u8),
    #[error("corrupt archive: {0}")]
    Corrupt(String),
}

impl GrammarSet {
    /// Compiles a grammar set from rule sources. All sources are merged into
    /// one rule namespace; each entity type must define an `itn_<type>` entry.
    pub fn compile<'a, I>(sources: I) -> Result<GrammarSet, GrammarError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut rules = RuleSet::default();
        for src in sources {
            rules.merge(parse_rules(src)?)?;
        }
        let mut table = SymbolTable::new();
        let mut forward = BTreeMap::new();
        for entity in EntityType::ALL {
            let entry = format!("itn_{}", entity.name());
            let fst = rules.compile(&entry, &mut table)?;
            forward.insert(entity, fst);
        }
        Ok(GrammarSet::from_parts(table, forward))
    }

    /// Compiles the grammars bundled with the crate.
    pub fn builtin() -> GrammarSet {
        GrammarSet::compile(super::BUILTIN_GRAMMAR_SOURCES.iter().copied())
            .expect("bundled grammars compile")
    }

    fn from_parts(table: SymbolTable, forward: BTreeMap<EntityType, Fst>) -> GrammarSet {
        let inverse: BTreeMap<EntityType, Fst> =
            forward.iter().map(|(&e, f)| (e, f.invert())).collect();
        let mut first_chars = BTreeMap::new();
        for (&entity, fst) in &inverse {
            let mut chars = HashSet::new();
            for state in 0..fst.num_states() as u32 {
                for arc in fst.arcs(state) {
                    if arc.ilabel != EPSILON {
                        if let Some(sym) = table.symbol(arc.ilabel) {
                            if let Some(c) = sym.chars().next() {
                                chars.insert(c);
                            }
                        }
                    }
                }
            }
            first_chars.insert(entity, chars);
        }
        GrammarSet {
            table,
            forward,
            inverse,
            first_chars,
        }
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn forward(&self, entity: EntityType) -> &Fst {
        &self.forward[&entity]
    }

    pub fn inverse(&self, entity: EntityType) -> &Fst {
        &self.inverse[&entity]
    }

    /// Formats a spoken entity span as written form via the entity's grammar.
    /// Returns `None` (NoParse) when the grammar rejects the span.
    pub fn apply_itn<S: AsRef<str>>(
        &self,
        entity: EntityType,
        spoken: &[S],
    ) -> Option<TranslationResult> {
        if spoken.is_empty() {
            return None;
        }
        let input: Option<Vec<u32>> = spoken.iter().map(|w| self.table.id(w.as_ref())).collect();
        let path = shortest_path(&self.forward[&entity], &input?)?;
        let output = self.join_pieces(&path.olabels);
        if output.is_empty() {
            return None;
        }
        let alignment = vec![(0..spoken.len(), 0..output.len())];
        Some(TranslationResult {
            output,
            weight: path.weight,
            alignment,
        })
    }

    /// Expands written text into its spoken form, annotating entity spans.
    ///
    /// Scans left to right; at each position the longest written window
    /// matched by any inverted grammar wins, with ties between entity types
    /// broken by [`ENTITY_PRIORITY`]. Unmatched words pass through verbatim.
    pub fn normalize_with_alignment<S: AsRef<str>>(&self, written: &[S]) -> NormalizedText {
        let mut out = NormalizedText::default();
        let mut i = 0;
        while i < written.len() {
            let mut matched = None;
            let max_len = MAX_MATCH_WORDS.min(written.len() - i);
            'search: for len in (1..=max_len).rev() {
                let window: Vec<&str> = written[i..i + len].iter().map(|w| w.as_ref()).collect();
                let text = window.join(" ");
                for entity in ENTITY_PRIORITY {
                    if let Some(spoken) = self.match_written(entity, &text) {
                        matched = Some((len, entity, spoken));
                        break 'search;
                    }
                }
            }
            match matched {
                Some((len, entity, spoken)) => {
                    let spoken_start = out.spoken.len();
                    out.spoken.extend(spoken);
                    out.segments.push(Segment {
                        written: i..i + len,
                        spoken: spoken_start..out.spoken.len(),
                        entity: Some(entity),
                    });
                    i += len;
                }
                None => {
                    let spoken_start = out.spoken.len();
                    out.spoken.push(written[i].as_ref().to_string());
                    out.segments.push(Segment {
                        written: i..i + 1,
                        spoken: spoken_start..spoken_start + 1,
                        entity: None,
                    });
                    i += 1;
                }
            }
        }
        out
    }

    /// Matches the written text of a candidate window against the inverted
    /// grammar, returning the minimum-weight spoken expansion. The whole
    /// text must be consumed.
    pub fn match_written(&self, entity: EntityType, text: &str) -> Option<Vec<String>> {
        if text.is_empty() {
            return None;
        }
        let first = text.chars().next()?;
        if !self.first_chars[&entity].contains(&first) {
            return None;
        }
        let fst = &self.inverse[&entity];
        let olabels = match_string(fst, &self.table, text)?;
        let spoken: Vec<String> = olabels
            .iter()
            .filter_map(|&id| self.table.symbol(id))
            .map(str::to_string)
            .collect();
        if spoken.is_empty() {
            None
        } else {
            Some(spoken)
        }
    }

    /// Joins output piece ids into written words, splitting at the
    /// separator piece.
    fn join_pieces(&self, olabels: &[u32]) -> Vec<String> {
        let mut words = Vec::new();
        let mut current = String::new();
        for &id in olabels {
            match self.table.symbol(id) {
                Some(SPACE) => {
                    if !current.is_empty() {
                        words.push(std::mem::take(&mut current));
                    }
                }
                Some(piece) => current.push_str(piece),
                None => {}
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
        words
    }

    /// Writes the archive: magic, version, symbol table, then the five
    /// forward FSTs in entity order. Byte-stable across runs.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), ArchiveError> {
        w.write_all(ARCHIVE_MAGIC)?;
        w.write_all(&[ARCHIVE_VERSION])?;
        w.write_all(&(self.table.len() as u32).to_le_bytes())?;
        for (_, sym) in self.table.iter() {
            let bytes = sym.as_bytes();
            w.write_all(&(bytes.len() as u32).to_le_bytes())?;
            w.write_all(bytes)?;
        }
        w.write_all(&[self.forward.len() as u8])?;
        for (&entity, fst) in &self.forward {
            w.write_all(&[entity as u8])?;
            w.write_all(&(fst.num_states() as u32).to_le_bytes())?;
            w.write_all(&fst.start().to_le_bytes())?;
            let finals: Vec<(u32, f64)> = fst.finals().collect();
            w.write_all(&(finals.len() as u32).to_le_bytes())?;
            for (s, weight) in finals {
                w.write_all(&s.to_le_bytes())?;
                w.write_all(&weight.to_le_bytes())?;
            }
            for state in 0..fst.num_states() as u32 {
                let arcs = fst.arcs(state);
                w.write_all(&(arcs.len() as u32).to_le_bytes())?;
                for arc in arcs {
                    w.write_all(&arc.ilabel.to_le_bytes())?;
                    w.write_all(&arc.olabel.to_le_bytes())?;
                    w.write_all(&arc.weight.to_le_bytes())?;
                    w.write_all(&arc.next.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<GrammarSet, ArchiveError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != ARCHIVE_MAGIC {
            return Err(ArchiveError::BadMagic);
        }
        let version = read_u8(&mut r)?;
        if version != ARCHIVE_VERSION {
            return Err(ArchiveError::BadVersion(version));
        }
        let nsyms = read_u32(&mut r)? as usize;
        let mut table = SymbolTable::new();
        for _ in 1..nsyms {
            let len = read_u32(&mut r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            let sym = String::from_utf8(buf)
                .map_err(|_| ArchiveError::Corrupt("symbol is not utf-8".to_string()))?;
            table.intern(&sym);
        }
        let ngrammars = read_u8(&mut r)?;
        let mut forward = BTreeMap::new();
        for _ in 0..ngrammars {
            let ety = read_u8(&mut r)? as usize;
            let entity = *EntityType::ALL
                .get(ety)
                .ok_or_else(|| ArchiveError::Corrupt(format!("bad entity id {ety}")))?;
            let nstates = read_u32(&mut r)? as usize;
            let start = read_u32(&mut r)?;
            let mut fst = Fst::new();
            for _ in 0..nstates {
                fst.add_state();
            }
            if nstates > 0 {
                if start as usize >= nstates {
                    return Err(ArchiveError::Corrupt("start state out of range".to_string()));
                }
                fst.set_start(start);
            }
            let nfinals = read_u32(&mut r)? as usize;
            for _ in 0..nfinals {
                let s = read_u32(&mut r)?;
                let weight = read_f64(&mut r)?;
                if s as usize >= nstates {
                    return Err(ArchiveError::Corrupt("final state out of range".to_string()));
                }
                fst.set_final(s, weight);
            }
            for state in 0..nstates as u32 {
                let narcs = read_u32(&mut r)? as usize;
                for _ in 0..narcs {
                    let ilabel = read_u32(&mut r)?;
                    let olabel = read_u32(&mut r)?;
                    let weight = read_f64(&mut r)?;
                    let next = read_u32(&mut r)?;
                    if next as usize >= nstates {
                        return Err(ArchiveError::Corrupt("arc target out of range".to_string()));
                    }
                    fst.add_arc(
                        state,
                        super::fst::Arc {
                            ilabel,
                            olabel,
                            weight,
                            next,
                        },
                    );
                }
            }
            forward.insert(entity, fst);
        }
        if forward.len() != EntityType::ALL.len() {
            return Err(ArchiveError::Corrupt(format!(
                "expected {} grammars, found {}",
                EntityType::ALL.len(),
                forward.len()
            )));
        }
        Ok(GrammarSet::from_parts(table, forward))
    }
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8, ArchiveError> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ArchiveError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, ArchiveError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[derive(Clone)]
struct MatchItem {
    weight: f64,
    olabels: Vec<u32>,
    state: u32,
    pos: usize,
}

impl PartialEq for MatchItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for MatchItem {}
impl Ord for MatchItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight
            .partial_cmp(&self.weight)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.olabels.cmp(&self.olabels))
    }
}
impl PartialOrd for MatchItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path where input labels are matched as substrings of `text`
/// instead of whole tokens. The full text must be consumed.
fn match_string(fst: &Fst, table: &SymbolTable, text: &str) -> Option<Vec<u32>> {
    if fst.num_states() == 0 {
        return None;
    }
    let n = text.len();
    let mut heap = BinaryHeap::new();
    let mut settled: HashSet<(u32, usize)> = HashSet::new();
    heap.push(MatchItem {
        weight: 0.0,
        olabels: Vec::new(),
        state: fst.start(),
        pos: 0,
    });
    while let Some(item) = heap.pop() {
        if !settled.insert((item.state, item.pos)) {
            continue;
        }
        if item.pos == n && fst.final_weight(item.state).is_some() {
            return Some(item.olabels);
        }
        for arc in fst.arcs(item.state) {
            let next_pos = if arc.ilabel == EPSILON {
                item.pos
            } else {
                match table.symbol(arc.ilabel) {
                    Some(piece) if text[item.pos..].starts_with(piece) => item.pos + piece.len(),
                    _ => continue,
                }
            };
            if settled.contains(&(arc.next, next_pos)) {
                continue;
            }
            let mut olabels = item.olabels.clone();
            if arc.olabel != EPSILON {
                olabels.push(arc.olabel);
            }
            heap.push(MatchItem {
                weight: item.weight + arc.weight,
                olabels,
                state: arc.next,
                pos: next_pos,
            });
        }
    }
    None
}
