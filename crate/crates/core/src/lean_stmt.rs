//! Lexing, parsing, rendering, and site location for Lean 4 theorem
//! statement headers.
//!
//! Grammar scope is deliberately narrow: `theorem <name> <binders> : <goal> :=`
//! with everything after `:=` carried through verbatim as an opaque trailer.
//! That is the surface form mutation and scoring operate on; full Lean
//! elaboration, proof terms, and name resolution are out of scope.
//!
//! The representation round-trips: rendering a parsed statement and parsing
//! it again yields the same token sequence, independent of the original
//! whitespace layout.

use std::collections::BTreeSet;

/// Byte range of a token in its source text, end-exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Numeral,
    Symbol,
    UnicodeOp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LeanStmtError {
    #[error("unknown character at byte {offset}")]
    UnknownCharacter { offset: usize },
    #[error("expected {expected}, found {found} at bytes {}..{}", span.start, span.end)]
    Parse {
        expected: String,
        found: String,
        span: Span,
    },
}

const KEYWORDS: [&str; 2] = ["theorem", "lemma"];

const UNICODE_OPS: [char; 24] = [
    'ℝ', 'ℚ', 'ℤ', 'ℕ', 'ℂ', '∧', '∨', '¬', '≠', '≤', '≥', '→', '↔', '∀', '∃', '×', '∈', '∉',
    '⊆', '∪', '∩', '∣', '∘', '√',
];

const ASCII_SYMBOLS: [char; 20] = [
    '(', ')', '{', '}', '[', ']', ':', ';', ',', '.', '=', '<', '>', '+', '-', '*', '/', '^', '|',
    '%',
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || ('α'..='ω').contains(&c)
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || ('₀'..='₉').contains(&c) || ('α'..='ω').contains(&c)
}

/// Splits `source` into tokens, skipping whitespace.
///
/// Subscript digits continue identifiers (`h₀` is one token), `:=` is a
/// single symbol, and numerals are unsigned decimal integers. Bytes outside
/// the accepted alphabet produce [`LeanStmtError::UnknownCharacter`].
pub fn tokenize(source: &str) -> Result<Vec<Token>, LeanStmtError> {
    let mut tokens = Vec::new();
    let mut chars = source.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if is_ident_start(c) {
            chars.next();
            let mut end = start + c.len_utf8();
            while let Some(&(i, c2)) = chars.peek() {
                if !is_ident_continue(c2) {
                    break;
                }
                end = i + c2.len_utf8();
                chars.next();
            }
            let text = &source[start..end];
            let kind = if KEYWORDS.contains(&text) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token {
                kind,
                text: text.to_string(),
                span: Span { start, end },
            });
        } else if c.is_ascii_digit() {
            chars.next();
            let mut end = start + 1;
            while let Some(&(i, c2)) = chars.peek() {
                if !c2.is_ascii_digit() {
                    break;
                }
                end = i + 1;
                chars.next();
            }
            tokens.push(Token {
                kind: TokenKind::Numeral,
                text: source[start..end].to_string(),
                span: Span { start, end },
            });
        } else if c == ':' {
            chars.next();
            if let Some(&(_, '=')) = chars.peek() {
                chars.next();
                tokens.push(Token {
                    kind: TokenKind::Symbol,
                    text: ":=".to_string(),
                    span: Span {
                        start,
                        end: start + 2,
                    },
                });
            } else {
                tokens.push(Token {
                    kind: TokenKind::Symbol,
                    text: ":".to_string(),
                    span: Span {
                        start,
                        end: start + 1,
                    },
                });
            }
        } else if ASCII_SYMBOLS.contains(&c) {
            chars.next();
            tokens.push(Token {
                kind: TokenKind::Symbol,
                text: c.to_string(),
                span: Span {
                    start,
                    end: start + 1,
                },
            });
        } else if UNICODE_OPS.contains(&c) {
            chars.next();
            tokens.push(Token {
                kind: TokenKind::UnicodeOp,
                text: c.to_string(),
                span: Span {
                    start,
                    end: start + c.len_utf8(),
                },
            });
        } else {
            return Err(LeanStmtError::UnknownCharacter { offset: start });
        }
    }
    Ok(tokens)
}

/// Token-sequence equality by kind and text, ignoring spans.
pub fn lexeme_eq(a: &[Token], b: &[Token]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.kind == y.kind && x.text == y.text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bracket {
    Paren,
    Implicit,
    Inst,
}

impl Bracket {
    pub fn open(self) -> &'static str {
        match self {
            Bracket::Paren => "(",
            Bracket::Implicit => "{",
            Bracket::Inst => "[",
        }
    }

    pub fn close(self) -> &'static str {
        match self {
            Bracket::Paren => ")",
            Bracket::Implicit => "}",
            Bracket::Inst => "]",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinderRole {
    VariableDecl,
    Hypothesis,
}

impl BinderRole {
    pub fn as_str(self) -> &'static str {
        match self {
            BinderRole::VariableDecl => "variable_decl",
            BinderRole::Hypothesis => "hypothesis",
        }
    }
}

/// Operators whose presence in a binder type marks the group as a
/// hypothesis rather than a variable declaration.
const HYPOTHESIS_OPS: [&str; 11] = ["=", "≠", "<", "≤", ">", "≥", "∧", "∨", "→", "∀", "∃"];

/// Pure function of the type tokens; same tokens always give the same role.
pub fn classify_role(type_tokens: &[Token]) -> BinderRole {
    if type_tokens
        .iter()
        .any(|t| HYPOTHESIS_OPS.contains(&t.text.as_str()))
    {
        BinderRole::Hypothesis
    } else {
        BinderRole::VariableDecl
    }
}

/// One bracketed declaration in a theorem header, e.g. `(b h v : ℝ)` or
/// `(h₂ : b = 30)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinderGroup {
    pub bracket: Bracket,
    pub names: Vec<String>,
    pub type_tokens: Vec<Token>,
    pub role: BinderRole,
}

impl BinderGroup {
    pub fn new(bracket: Bracket, names: Vec<String>, type_tokens: Vec<Token>) -> Self {
        let role = classify_role(&type_tokens);
        BinderGroup {
            bracket,
            names,
            type_tokens,
            role,
        }
    }

    pub fn render(&self) -> String {
        let texts = std::iter::once(self.bracket.open())
            .chain(self.names.iter().map(|s| s.as_str()))
            .chain(std::iter::once(":"))
            .chain(self.type_tokens.iter().map(|t| t.text.as_str()))
            .chain(std::iter::once(self.bracket.close()));
        join_token_texts(texts)
    }
}

/// A parsed theorem statement header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremStmt {
    pub name: String,
    pub binders: Vec<BinderGroup>,
    pub goal_tokens: Vec<Token>,
    /// Everything after `:=`, verbatim; empty when the header stands alone.
    pub trailer: String,
}

/// Where a [`Site`] lives inside a statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StmtPart {
    Binder(usize),
    Goal,
}

/// A located token: `token_index` indexes the binder's `type_tokens` or the
/// statement's `goal_tokens` depending on `part`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Site {
    pub part: StmtPart,
    pub token_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocateQuery {
    Numerals,
    EqOps,
    VariableOccurrences,
    TypedBinderGroups,
}

/// Scalar types eligible for the variable_type mutation.
pub const SCALAR_TYPES: [&str; 5] = ["ℝ", "ℚ", "ℤ", "ℕ", "ℂ"];

impl TheoremStmt {
    /// All names bound by any binder group, in sorted order.
    pub fn bound_names(&self) -> BTreeSet<&str> {
        self.binders
            .iter()
            .flat_map(|g| g.names.iter().map(|s| s.as_str()))
            .collect()
    }

    pub fn site_tokens(&self, part: StmtPart) -> &[Token] {
        match part {
            StmtPart::Binder(i) => &self.binders[i].type_tokens,
            StmtPart::Goal => &self.goal_tokens,
        }
    }

    pub fn site_tokens_mut(&mut self, part: StmtPart) -> &mut Vec<Token> {
        match part {
            StmtPart::Binder(i) => &mut self.binders[i].type_tokens,
            StmtPart::Goal => &mut self.goal_tokens,
        }
    }

    /// Lists candidate edit sites in document order. Implicit `{...}` and
    /// instance `[...]` groups are preserved by the parser but never
    /// reported as sites.
    pub fn locate(&self, what: LocateQuery) -> Vec<Site> {
        let mut sites = Vec::new();
        match what {
            LocateQuery::Numerals => {
                self.scan(&mut sites, |t| t.kind == TokenKind::Numeral);
            }
            LocateQuery::EqOps => {
                self.scan(&mut sites, |t| t.text == "=" || t.text == "≠");
            }
            LocateQuery::VariableOccurrences => {
                let bound = self.bound_names();
                for (i, g) in self.binders.iter().enumerate() {
                    if g.bracket != Bracket::Paren || g.role != BinderRole::Hypothesis {
                        continue;
                    }
                    for (j, t) in g.type_tokens.iter().enumerate() {
                        if t.kind == TokenKind::Identifier && bound.contains(t.text.as_str()) {
                            sites.push(Site {
                                part: StmtPart::Binder(i),
                                token_index: j,
                            });
                        }
                    }
                }
                for (j, t) in self.goal_tokens.iter().enumerate() {
                    if t.kind == TokenKind::Identifier && bound.contains(t.text.as_str()) {
                        sites.push(Site {
                            part: StmtPart::Goal,
                            token_index: j,
                        });
                    }
                }
            }
            LocateQuery::TypedBinderGroups => {
                for (i, g) in self.binders.iter().enumerate() {
                    if g.bracket == Bracket::Paren
                        && g.role == BinderRole::VariableDecl
                        && g.type_tokens.len() == 1
                        && SCALAR_TYPES.contains(&g.type_tokens[0].text.as_str())
                    {
                        sites.push(Site {
                            part: StmtPart::Binder(i),
                            token_index: 0,
                        });
                    }
                }
            }
        }
        sites
    }

    fn scan(&self, sites: &mut Vec<Site>, pred: impl Fn(&Token) -> bool) {
        for (i, g) in self.binders.iter().enumerate() {
            if g.bracket != Bracket::Paren {
                continue;
            }
            for (j, t) in g.type_tokens.iter().enumerate() {
                if pred(t) {
                    sites.push(Site {
                        part: StmtPart::Binder(i),
                        token_index: j,
                    });
                }
            }
        }
        for (j, t) in self.goal_tokens.iter().enumerate() {
            if pred(t) {
                sites.push(Site {
                    part: StmtPart::Goal,
                    token_index: j,
                });
            }
        }
    }

    /// Canonical layout: each binder group on its own line indented two
    /// spaces, the top-level `:` closing the last binder line, the goal on
    /// its own line ending with `:=`, and the trailer appended verbatim.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("theorem ");
        out.push_str(&self.name);
        if self.binders.is_empty() {
            out.push_str(" :");
        } else {
            let last = self.binders.len() - 1;
            for (i, group) in self.binders.iter().enumerate() {
                out.push_str("\n  ");
                out.push_str(&group.render());
                if i == last {
                    out.push_str(" :");
                }
            }
        }
        out.push_str("\n  ");
        out.push_str(&join_token_texts(
            self.goal_tokens.iter().map(|t| t.text.as_str()),
        ));
        out.push_str(" :=");
        out.push_str(&self.trailer);
        out
    }
}

const NO_SPACE_AFTER: [&str; 4] = ["(", "{", "[", "^"];
const NO_SPACE_BEFORE: [&str; 5] = [")", "}", "]", "^", ","];

/// Joins token texts with single spaces, tightening brackets, `^`, and
/// commas so that `(b^2 * h)` and `(b h v : ℝ)` read naturally.
/// Re-tokenizing the result reproduces the input token sequence.
pub fn join_token_texts<'a, I>(texts: I) -> String
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for text in texts {
        if let Some(p) = prev {
            if !NO_SPACE_AFTER.contains(&p) && !NO_SPACE_BEFORE.contains(&text) {
                out.push(' ');
            }
        }
        out.push_str(text);
        prev = Some(text);
    }
    out
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    source_len: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> LeanStmtError {
        match self.peek() {
            Some(t) => LeanStmtError::Parse {
                expected: expected.to_string(),
                found: format!("`{}`", t.text),
                span: t.span,
            },
            None => LeanStmtError::Parse {
                expected: expected.to_string(),
                found: "end of input".to_string(),
                span: Span {
                    start: self.source_len,
                    end: self.source_len,
                },
            },
        }
    }
}

fn parse_binder_group(cur: &mut Cursor, bracket: Bracket) -> Result<BinderGroup, LeanStmtError> {
    cur.advance();
    let mut names = Vec::new();
    while let Some(t) = cur.peek() {
        if t.kind != TokenKind::Identifier {
            break;
        }
        names.push(t.text.clone());
        cur.advance();
    }
    if names.is_empty() {
        return Err(cur.err("binder name"));
    }
    match cur.peek() {
        Some(t) if t.text == ":" => {
            cur.advance();
        }
        _ => return Err(cur.err("`:` after binder names")),
    }
    let mut type_tokens = Vec::new();
    let mut depth = 0usize;
    loop {
        match cur.peek() {
            None => {
                let close = format!("`{}`", bracket.close());
                return Err(cur.err(&close));
            }
            Some(t) if depth == 0 && matches!(t.text.as_str(), ")" | "}" | "]") => {
                if t.text != bracket.close() {
                    let close = format!("`{}`", bracket.close());
                    return Err(cur.err(&close));
                }
                if type_tokens.is_empty() {
                    return Err(cur.err("binder type"));
                }
                cur.advance();
                break;
            }
            Some(t) => {
                match t.text.as_str() {
                    "(" | "{" | "[" => depth += 1,
                    ")" | "}" | "]" => depth -= 1,
                    _ => {}
                }
                type_tokens.push(t.clone());
                cur.advance();
            }
        }
    }
    Ok(BinderGroup::new(bracket, names, type_tokens))
}

/// Parses a `theorem <name> <binders> : <goal> :=` header; any proof body
/// after `:=` is kept verbatim in [`TheoremStmt::trailer`].
pub fn parse_theorem(source: &str) -> Result<TheoremStmt, LeanStmtError> {
    let tokens = tokenize(source)?;
    let mut cur = Cursor {
        tokens: &tokens,
        pos: 0,
        source_len: source.len(),
    };

    match cur.peek() {
        Some(t) if t.kind == TokenKind::Keyword && t.text == "theorem" => {
            cur.advance();
        }
        _ => return Err(cur.err("`theorem`")),
    }
    let name = match cur.peek() {
        Some(t) if t.kind == TokenKind::Identifier => {
            let name = t.text.clone();
            cur.advance();
            name
        }
        _ => return Err(cur.err("theorem name")),
    };

    let mut binders = Vec::new();
    loop {
        match cur.peek() {
            Some(t) if t.text == "(" => binders.push(parse_binder_group(&mut cur, Bracket::Paren)?),
            Some(t) if t.text == "{" => {
                binders.push(parse_binder_group(&mut cur, Bracket::Implicit)?)
            }
            Some(t) if t.text == "[" => binders.push(parse_binder_group(&mut cur, Bracket::Inst)?),
            Some(t) if t.text == ":" => {
                cur.advance();
                break;
            }
            _ => return Err(cur.err("binder group or top-level `:`")),
        }
    }

    let mut goal_tokens = Vec::new();
    let mut depth = 0usize;
    let trailer_start;
    loop {
        match cur.peek() {
            None => return Err(cur.err("`:=`")),
            Some(t) if depth == 0 && t.text == ":=" => {
                if goal_tokens.is_empty() {
                    return Err(cur.err("goal tokens"));
                }
                trailer_start = t.span.end;
                cur.advance();
                break;
            }
            Some(t) => {
                match t.text.as_str() {
                    "(" | "{" | "[" => depth += 1,
                    ")" | "}" | "]" => {
                        if depth == 0 {
                            return Err(cur.err("balanced brackets before `:=`"));
                        }
                        depth -= 1;
                    }
                    _ => {}
                }
                goal_tokens.push(t.clone());
                cur.advance();
            }
        }
    }

    Ok(TheoremStmt {
        name,
        binders,
        goal_tokens,
        trailer: source[trailer_start..].to_string(),
    })
}
