//! Bidirectional token ↔ id map shared by all FSTs in a grammar set.
//! Id 0 is reserved for epsilon and never names a real token.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const EPSILON: u32 = 0;

/// The output piece that separates written-form words when grammar output
/// pieces are joined. A real token can never contain a space.
pub const SPACE: &str = " ";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SymbolTable {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable {
            symbols: vec!["<eps>".to_string()],
            ids: HashMap::new(),
        }
    }

    /// Interns `sym`, returning its id. Insertion order is stable, so tables
    /// built from the same input are identical.
    pub fn intern(&mut self, sym: &str) -> u32 {
        if let Some(&id) = self.ids.get(sym) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(sym.to_string());
        self.ids.insert(sym.to_string(), id);
        id
    }

    pub fn id(&self, sym: &str) -> Option<u32> {
        self.ids.get(sym).copied()
    }

    pub fn symbol(&self, id: u32) -> Option<&str> {
        if id == EPSILON {
            return None;
        }
        self.symbols.get(id as usize).map(String::as_str)
    }

    /// Number of entries including epsilon.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.len() <= 1
    }

    /// Symbols in id order, starting after epsilon.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.symbols
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, s)| (i as u32, s.as_str()))
    }
}
