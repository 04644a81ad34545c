//! Two-stage conversion of spoken-form transcripts into written-form text.
//!
//! Stage 1 predicts four word-level tag sequences — inverse text
//! normalization (ITN) entities, punctuation, capitalization, and
//! disfluencies — with a pluggable tagger ([`tagger`]). Stage 2 applies the
//! tags ([`tagapply`]), formatting entity spans through weighted
//! finite-state transducer grammars ([`wfst`]).
//!
//! The remaining modules supply the surrounding machinery: tag taxonomies
//! and file formats ([`tags`]), subword tokenization with tag projection
//! ([`bpe`]), training-data manufacture ([`datapipe`]), and scoring
//! ([`eval`]).

pub mod bpe;
pub mod datapipe;
pub mod eval;
pub mod tagapply;
pub mod tagger;
pub mod tags;
pub mod wfst;

pub use tagapply::{apply_tags, FormattedOutput};
pub use tags::{CapTag, DisfTag, EntityType, ItnTag, PunctTag, TagSet, Task, TaskTag};
pub use wfst::GrammarSet;
