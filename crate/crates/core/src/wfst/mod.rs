//! Weighted finite-state transducer engine and the compiled entity grammars.

pub mod fst;
pub mod grammar;
pub mod normalize;
pub mod paths;
pub mod symbol;

pub use fst::{compose, shortest_path, Arc, Fst, PathOutput, Weight};
pub use grammar::{compile_grammar, parse_rules, GrammarError, RuleSet};
pub use normalize::{
    ArchiveError, GrammarSet, NormalizedText, Segment, TranslationResult, ENTITY_PRIORITY,
};
pub use paths::{enumerate_paths, FullPath};
pub use symbol::{SymbolTable, EPSILON, SPACE};

/// Bundled grammar rule sources for the five entity types, in the order
/// they are merged into one rule namespace.
pub static BUILTIN_GRAMMAR_SOURCES: &[&str] = &[
    include_str!("../../grammars/shared.rules"),
    include_str!("../../grammars/numeric.rules"),
    include_str!("../../grammars/ordinal.rules"),
    include_str!("../../grammars/money.rules"),
    include_str!("../../grammars/time.rules"),
    include_str!("../../grammars/alphanumeric.rules"),
];

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WfstError {
    #[error("symbol table mismatch: operands were compiled over different tables")]
    SymbolTableMismatch,
}

/// Composition guarded by a symbol-table identity check, for callers holding
/// FSTs from potentially different grammar sets.
pub fn compose_checked(
    a: &Fst,
    table_a: &SymbolTable,
    b: &Fst,
    table_b: &SymbolTable,
) -> Result<Fst, WfstError> {
    if table_a.len() != table_b.len()
        || table_a.iter().zip(table_b.iter()).any(|(x, y)| x != y)
    {
        return Err(WfstError::SymbolTableMismatch);
    }
    Ok(compose(a, b))
}
