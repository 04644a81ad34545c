//! Rule DSL for entity grammars and its compiler to FSTs.
//!
//! One rule per line: `fragment_name = expr ;` where `expr` supports string
//! literals `"four"`, cross-products `"four" : "4"`, concatenation by
//! juxtaposition, union `|`, optionality `?`, per-alternative weights `/ 1.5`,
//! parenthesized groups, and fragment references. Fragments are non-recursive.
//!
//! Input literals split on whitespace into word symbols. Output literals split
//! into pieces, with each run of spaces becoming a single word-separator
//! piece; pieces of one span concatenate into written-form words.

use std::collections::HashMap;

use thiserror::Error;

use super::fst::{Arc, Fst};
use super::symbol::{SymbolTable, EPSILON, SPACE};

#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown fragment `{name}` at line {line}")]
    UnknownFragment { name: String, line: usize },
    #[error("fragment `{name}` is recursive; rules must be non-recursive")]
    RecursiveRule { name: String },
    #[error("negative weight at line {line}; tropical weights must be non-negative")]
    NegativeWeight { line: usize },
    #[error("grammar `{entry}` has no accepting path")]
    EmptyGrammar { entry: String },
    #[error("duplicate rule `{name}` at line {line}")]
    DuplicateRule { name: String, line: usize },
    #[error("missing entry point `{0}`")]
    MissingEntry(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Union(Vec<Expr>),
    Concat(Vec<Expr>),
    Optional(Box<Expr>),
    Weighted(Box<Expr>, f64),
    /// Input word sequence mapped to output piece sequence.
    Mapping {
        input: Vec<String>,
        output: Vec<String>,
    },
    Ref(String, usize),
}

/// Parsed, unresolved rule set. Rule order is preserved.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<(String, Expr)>,
    index: HashMap<String, usize>,
}

impl RuleSet {
    pub fn rule_names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|(n, _)| n.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Merges another rule set into this one; duplicate names are an error.
    pub fn merge(&mut self, other: RuleSet) -> Result<(), GrammarError> {
        for (name, expr) in other.rules {
            if self.index.contains_key(&name) {
                return Err(GrammarError::DuplicateRule { name, line: 0 });
            }
            self.index.insert(name.clone(), self.rules.len());
            self.rules.push((name, expr));
        }
        Ok(())
    }

    /// Compiles the fragment `entry` into a trimmed FST over `table`.
    pub fn compile(&self, entry: &str, table: &mut SymbolTable) -> Result<Fst, GrammarError> {
        let idx = *self
            .index
            .get(entry)
            .ok_or_else(|| GrammarError::MissingEntry(entry.to_string()))?;
        let mut fst = Fst::new();
        let mut in_progress = vec![false; self.rules.len()];
        let (start, end) =
            self.build(&self.rules[idx].1, idx, &mut in_progress, &mut fst, table)?;
        fst.set_start(start);
        fst.set_final(end, 0.0);
        let trimmed = fst.trim();
        if !trimmed.has_accepting_path() {
            return Err(GrammarError::EmptyGrammar {
                entry: entry.to_string(),
            });
        }
        Ok(trimmed)
    }

    fn build(
        &self,
        expr: &Expr,
        current: usize,
        in_progress: &mut Vec<bool>,
        fst: &mut Fst,
        table: &mut SymbolTable,
    ) -> Result<(u32, u32), GrammarError> {
        if in_progress[current] {
            return Err(GrammarError::RecursiveRule {
                name: self.rules[current].0.clone(),
            });
        }
        in_progress[current] = true;
        let result = self.build_inner(expr, current, in_progress, fst, table);
        in_progress[current] = false;
        result
    }

    fn build_inner(
        &self,
        expr: &Expr,
        current: usize,
        in_progress: &mut Vec<bool>,
        fst: &mut Fst,
        table: &mut SymbolTable,
    ) -> Result<(u32, u32), GrammarError> {
        match expr {
            Expr::Mapping { input, output } => {
                let ilabels: Vec<u32> = input.iter().map(|w| table.intern(w)).collect();
                let olabels: Vec<u32> = output.iter().map(|p| table.intern(p)).collect();
                let len = ilabels.len().max(olabels.len()).max(1);
                let start = fst.add_state();
                let mut prev = start;
                for i in 0..len {
                    let next = fst.add_state();
                    fst.add_arc(
                        prev,
                        Arc {
                            ilabel: ilabels.get(i).copied().unwrap_or(EPSILON),
                            olabel: olabels.get(i).copied().unwrap_or(EPSILON),
                            weight: 0.0,
                            next,
                        },
                    );
                    prev = next;
                }
                Ok((start, prev))
            }
            Expr::Concat(parts) => {
                let start = fst.add_state();
                let mut prev = start;
                for part in parts {
                    let (ps, pe) = self.build_inner(part, current, in_progress, fst, table)?;
                    fst.add_arc(
                        prev,
                        Arc {
                            ilabel: EPSILON,
                            olabel: EPSILON,
                            weight: 0.0,
                            next: ps,
                        },
                    );
                    prev = pe;
                }
                Ok((start, prev))
            }
            Expr::Union(arms) => {
                let start = fst.add_state();
                let end = fst.add_state();
                for arm in arms {
                    let (s, e) = self.build_inner(arm, current, in_progress, fst, table)?;
                    fst.add_arc(
                        start,
                        Arc {
                            ilabel: EPSILON,
                            olabel: EPSILON,
                            weight: 0.0,
                            next: s,
                        },
                    );
                    fst.add_arc(
                        e,
                        Arc {
                            ilabel: EPSILON,
                            olabel: EPSILON,
                            weight: 0.0,
                            next: end,
                        },
                    );
                }
                Ok((start, end))
            }
            Expr::Optional(inner) => {
                let start = fst.add_state();
                let end = fst.add_state();
                let (s, e) = self.build_inner(inner, current, in_progress, fst, table)?;
                fst.add_arc(
                    start,
                    Arc {
                        ilabel: EPSILON,
                        olabel: EPSILON,
                        weight: 0.0,
                        next: s,
                    },
                );
                fst.add_arc(
                    e,
                    Arc {
                        ilabel: EPSILON,
                        olabel: EPSILON,
                        weight: 0.0,
                        next: end,
                    },
                );
                fst.add_arc(
                    start,
                    Arc {
                        ilabel: EPSILON,
                        olabel: EPSILON,
                        weight: 0.0,
                        next: end,
                    },
                );
                Ok((start, end))
            }
            Expr::Weighted(inner, w) => {
                let start = fst.add_state();
                let (s, e) = self.build_inner(inner, current, in_progress, fst, table)?;
                fst.add_arc(
                    start,
                    Arc {
                        ilabel: EPSILON,
                        olabel: EPSILON,
                        weight: *w,
                        next: s,
                    },
                );
                Ok((start, e))
            }
            Expr::Ref(name, line) => {
                let idx = *self
                    .index
                    .get(name)
                    .ok_or_else(|| GrammarError::UnknownFragment {
                        name: name.clone(),
                        line: *line,
                    })?;
                self.build(&self.rules[idx].1, idx, in_progress, fst, table)
            }
        }
    }
}

/// Parses rule source text into a [`RuleSet`]. `#` starts a line comment.
pub fn parse_rules(src: &str) -> Result<RuleSet, GrammarError> {
    Parser::new(src).parse_file()
}

/// Compiles a rule source into a single FST. The entry point is the rule
/// named `main` when present, otherwise the last rule defined.
pub fn compile_grammar(src: &str, table: &mut SymbolTable) -> Result<Fst, GrammarError> {
    let rules = parse_rules(src)?;
    let entry = if rules.contains("main") {
        "main".to_string()
    } else {
        rules
            .rule_names()
            .last()
            .ok_or_else(|| GrammarError::MissingEntry("main".to_string()))?
            .to_string()
    };
    rules.compile(&entry, table)
}

/// Splits an output literal into pieces: runs of spaces become a single
/// separator piece, everything else becomes verbatim pieces.
fn output_pieces(text: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    let mut in_space = false;
    for ch in text.chars() {
        if ch == ' ' {
            if !current.is_empty() {
                pieces.push(std::mem::take(&mut current));
            }
            if !in_space {
                pieces.push(SPACE.to_string());
            }
            in_space = true;
        } else {
            in_space = false;
            current.push(ch);
        }
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    pieces
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Literal(String),
    Number(f64),
    Equals,
    Semi,
    Pipe,
    Question,
    Colon,
    Slash,
    LParen,
    RParen,
}

struct Parser {
    tokens: Vec<(Token, usize, usize)>,
    pos: usize,
    /// Lexer error, if tokenization failed.
    lex_error: Option<GrammarError>,
}

impl Parser {
    fn new(src: &str) -> Parser {
        let mut tokens = Vec::new();
        let mut lex_error = None;
        'outer: for (lineno, line) in src.lines().enumerate() {
            let line_no = lineno + 1;
            let chars: Vec<char> = line.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let col = i + 1;
                let c = chars[i];
                match c {
                    '#' => break,
                    c if c.is_whitespace() => i += 1,
                    '=' => {
                        tokens.push((Token::Equals, line_no, col));
                        i += 1;
                    }
                    ';' => {
                        tokens.push((Token::Semi, line_no, col));
                        i += 1;
                    }
                    '|' => {
                        tokens.push((Token::Pipe, line_no, col));
                        i += 1;
                    }
                    '?' => {
                        tokens.push((Token::Question, line_no, col));
                        i += 1;
                    }
                    ':' => {
                        tokens.push((Token::Colon, line_no, col));
                        i += 1;
                    }
                    '/' => {
                        tokens.push((Token::Slash, line_no, col));
                        i += 1;
                    }
                    '(' => {
                        tokens.push((Token::LParen, line_no, col));
                        i += 1;
                    }
                    ')' => {
                        tokens.push((Token::RParen, line_no, col));
                        i += 1;
                    }
                    '"' => {
                        let mut lit = String::new();
                        i += 1;
                        loop {
                            if i >= chars.len() {
                                lex_error = Some(GrammarError::Syntax {
                                    line: line_no,
                                    col,
                                    msg: "unterminated string literal".to_string(),
                                });
                                break 'outer;
                            }
                            match chars[i] {
                                '"' => {
                                    i += 1;
                                    break;
                                }
                                '\\' if i + 1 < chars.len() => {
                                    lit.push(chars[i + 1]);
                                    i += 2;
                                }
                                c => {
                                    lit.push(c);
                                    i += 1;
                                }
                            }
                        }
                        tokens.push((Token::Literal(lit), line_no, col));
                    }
                    c if c.is_ascii_digit() || c == '-' || c == '.' => {
                        let mut num = String::new();
                        while i < chars.len()
                            && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '-')
                        {
                            num.push(chars[i]);
                            i += 1;
                        }
                        match num.parse::<f64>() {
                            Ok(v) => tokens.push((Token::Number(v), line_no, col)),
                            Err(_) => {
                                lex_error = Some(GrammarError::Syntax {
                                    line: line_no,
                                    col,
                                    msg: format!("invalid number `{num}`"),
                                });
                                break 'outer;
                            }
                        }
                    }
                    c if c.is_alphanumeric() || c == '_' => {
                        let mut ident = String::new();
                        while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                            ident.push(chars[i]);
                            i += 1;
                        }
                        tokens.push((Token::Ident(ident), line_no, col));
                    }
                    other => {
                        lex_error = Some(GrammarError::Syntax {
                            line: line_no,
                            col,
                            msg: format!("unexpected character `{other}`"),
                        });
                        break 'outer;
                    }
                }
            }
        }
        Parser {
            tokens,
            pos: 0,
            lex_error,
        }
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((1, 1))
    }

    fn syntax(&self, msg: impl Into<String>) -> GrammarError {
        let (line, col) = self.here();
        GrammarError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<(), GrammarError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax(format!("expected {what}"))),
        }
    }

    fn parse_file(mut self) -> Result<RuleSet, GrammarError> {
        if let Some(err) = self.lex_error.take() {
            return Err(err);
        }
        let mut rules = RuleSet::default();
        while self.peek().is_some() {
            let (line, _) = self.here();
            let name = match self.next() {
                Some(Token::Ident(name)) => name,
                _ => return Err(self.syntax("expected rule name")),
            };
            self.expect(&Token::Equals, "`=`")?;
            let expr = self.parse_union()?;
            self.expect(&Token::Semi, "`;`")?;
            if rules.index.contains_key(&name) {
                return Err(GrammarError::DuplicateRule { name, line });
            }
            rules.index.insert(name.clone(), rules.rules.len());
            rules.rules.push((name, expr));
        }
        Ok(rules)
    }

    fn parse_union(&mut self) -> Result<Expr, GrammarError> {
        let mut arms = vec![self.parse_alternative()?];
        while self.peek() == Some(&Token::Pipe) {
            self.pos += 1;
            arms.push(self.parse_alternative()?);
        }
        if arms.len() == 1 {
            Ok(arms.pop().unwrap())
        } else {
            Ok(Expr::Union(arms))
        }
    }

    fn parse_alternative(&mut self) -> Result<Expr, GrammarError> {
        let seq = self.parse_sequence()?;
        if self.peek() == Some(&Token::Slash) {
            let (line, _) = self.here();
            self.pos += 1;
            match self.next() {
                Some(Token::Number(w)) => {
                    if w < 0.0 {
                        return Err(GrammarError::NegativeWeight { line });
                    }
                    Ok(Expr::Weighted(Box::new(seq), w))
                }
                _ => Err(self.syntax("expected weight after `/`")),
            }
        } else {
            Ok(seq)
        }
    }

    fn parse_sequence(&mut self) -> Result<Expr, GrammarError> {
        let mut parts = Vec::new();
        loop {
            match self.peek() {
                Some(Token::Literal(_)) | Some(Token::Ident(_)) | Some(Token::LParen) => {
                    parts.push(self.parse_postfix()?);
                }
                _ => break,
            }
        }
        match parts.len() {
            0 => Ok(Expr::Mapping {
                input: Vec::new(),
                output: Vec::new(),
            }),
            1 => Ok(parts.pop().unwrap()),
            _ => Ok(Expr::Concat(parts)),
        }
    }

    fn parse_postfix(&mut self) -> Result<Expr, GrammarError> {
        let mut atom = self.parse_atom()?;
        while self.peek() == Some(&Token::Question) {
            self.pos += 1;
            atom = Expr::Optional(Box::new(atom));
        }
        Ok(atom)
    }

    fn parse_atom(&mut self) -> Result<Expr, GrammarError> {
        let (line, _) = self.here();
        match self.next() {
            Some(Token::Literal(input)) => {
                if self.peek() == Some(&Token::Colon) {
                    self.pos += 1;
                    match self.next() {
                        Some(Token::Literal(output)) => Ok(Expr::Mapping {
                            input: input.split_whitespace().map(str::to_string).collect(),
                            output: output_pieces(&output),
                        }),
                        _ => Err(self.syntax("expected output literal after `:`")),
                    }
                } else {
                    // plain literal transduces each word to itself
                    Ok(Expr::Mapping {
                        input: input.split_whitespace().map(str::to_string).collect(),
                        output: output_pieces(&input),
                    })
                }
            }
            Some(Token::Ident(name)) => Ok(Expr::Ref(name, line)),
            Some(Token::LParen) => {
                let inner = self.parse_union()?;
                self.expect(&Token::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.syntax("expected literal, fragment reference, or `(`")),
        }
    }
}
