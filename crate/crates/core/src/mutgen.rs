//! Misalignment strategies and corpus augmentation.
//!
//! Each strategy edits an aligned theorem header into a variant that still
//! parses but no longer says the same thing: nudging a constant, squaring a
//! variable occurrence, introducing an unused binder, switching a scalar
//! type, flipping `=`/`≠`, or pairing the informal text with another
//! record's formal statement. [`augment`] drives them to turn each aligned
//! record into a group of one positive plus `negatives_per_positive`
//! distinct negatives, deterministically for a given seed.
//!
//! Determinism scheme: every group draws from its own ChaCha8 stream seeded
//! from `(rng_seed, group_id)` (see [`group_rng`]), so output is identical
//! regardless of processing order.

use crate::fnv::fnv1a64;
use crate::lean_stmt::{
    parse_theorem, tokenize, BinderRole, Bracket, LocateQuery, Span, TheoremStmt, Token,
    TokenKind, SCALAR_TYPES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum MisalignKind {
    Constant,
    Exponent,
    VariableNew,
    VariableType,
    Equality,
    Random,
}

impl MisalignKind {
    pub const ALL: [MisalignKind; 6] = [
        MisalignKind::Constant,
        MisalignKind::Exponent,
        MisalignKind::VariableNew,
        MisalignKind::VariableType,
        MisalignKind::Equality,
        MisalignKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MisalignKind::Constant => "constant",
            MisalignKind::Exponent => "exponent",
            MisalignKind::VariableNew => "variable_new",
            MisalignKind::VariableType => "variable_type",
            MisalignKind::Equality => "equality",
            MisalignKind::Random => "random",
        }
    }
}

impl fmt::Display for MisalignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MisalignKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MisalignKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown misalignment kind `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Aligned,
    Misaligned,
}

/// One informal/formal pair. Aligned records never carry a
/// `misalign_kind`; misaligned records always do.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleRecord {
    pub id: String,
    pub group_id: String,
    pub informal: String,
    pub formal: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misalign_kind: Option<MisalignKind>,
}

impl ExampleRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() || self.group_id.is_empty() {
            return Err("id and group_id must be non-empty".to_string());
        }
        if self.informal.is_empty() || self.formal.is_empty() {
            return Err(format!("record {}: informal and formal must be non-empty", self.id));
        }
        match (self.label, self.misalign_kind.is_some()) {
            (Label::Aligned, true) => Err(format!(
                "record {}: aligned record carries misalign_kind",
                self.id
            )),
            (Label::Misaligned, false) => Err(format!(
                "record {}: misaligned record lacks misalign_kind",
                self.id
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AugmentConfig {
    pub negatives_per_positive: usize,
    /// Kinds missing from the map get weight 0. At least one weight must be
    /// positive; weights restrict to strategies applicable per statement.
    pub strategy_weights: BTreeMap<MisalignKind, f64>,
    pub rng_seed: u64,
    /// Resamples allowed per negative after the first attempt before the
    /// whole run aborts with [`MutError::AugmentationExhausted`].
    pub max_retries_per_negative: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            negatives_per_positive: 21,
            strategy_weights: MisalignKind::ALL.iter().map(|k| (*k, 1.0)).collect(),
            rng_seed: 0,
            max_retries_per_negative: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MutError {
    #[error("strategy not applicable to this statement")]
    NotApplicable,
    #[error("could not produce distinct negatives for group {group_id} within the retry budget")]
    AugmentationExhausted { group_id: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Independent per-group random stream derived from the run seed and the
/// group id; identical across platforms and processing orders.
pub fn group_rng(rng_seed: u64, group_id: &str) -> ChaCha8Rng {
    let h = fnv1a64(group_id.as_bytes());
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&rng_seed.to_le_bytes());
    key[8..16].copy_from_slice(&h.to_le_bytes());
    key[16..24].copy_from_slice(&h.wrapping_mul(0x9e37_79b9_7f4a_7c15).to_le_bytes());
    key[24..32].copy_from_slice(&(rng_seed ^ h.rotate_left(32)).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn tok(kind: TokenKind, text: &str) -> Token {
    Token {
        kind,
        text: text.to_string(),
        span: Span { start: 0, end: 0 },
    }
}

/// Re-parses the rendered edit so spans and roles are consistent again.
fn normalize(stmt: &TheoremStmt) -> TheoremStmt {
    parse_theorem(&stmt.render()).expect("edited statement must re-parse")
}

fn draw_delta<R: Rng>(rng: &mut R) -> i64 {
    let v = rng.gen_range(0..10i64);
    if v < 5 {
        v - 5
    } else {
        v - 4
    }
}

/// Changes one numeral by δ drawn uniformly from {−5..−1, 1..5}; a draw
/// that would go negative applies |δ| instead.
pub fn mutate_constant<R: Rng>(stmt: &TheoremStmt, rng: &mut R) -> Result<TheoremStmt, MutError> {
    let sites: Vec<_> = stmt
        .locate(LocateQuery::Numerals)
        .into_iter()
        .filter_map(|s| {
            stmt.site_tokens(s.part)[s.token_index]
                .text
                .parse::<u128>()
                .ok()
                .map(|value| (s, value))
        })
        .collect();
    if sites.is_empty() {
        return Err(MutError::NotApplicable);
    }
    let (site, value) = sites[rng.gen_range(0..sites.len())];
    let delta = draw_delta(rng);
    let magnitude = delta.unsigned_abs() as u128;
    let new_value = if delta > 0 || value >= magnitude {
        if delta > 0 {
            value + magnitude
        } else {
            value - magnitude
        }
    } else {
        value + magnitude
    };
    let mut out = stmt.clone();
    out.site_tokens_mut(site.part)[site.token_index] =
        tok(TokenKind::Numeral, &new_value.to_string());
    Ok(normalize(&out))
}

/// Squares one bound-variable occurrence, or bumps an existing power by one.
pub fn mutate_exponent<R: Rng>(stmt: &TheoremStmt, rng: &mut R) -> Result<TheoremStmt, MutError> {
    let sites = stmt.locate(LocateQuery::VariableOccurrences);
    if sites.is_empty() {
        return Err(MutError::NotApplicable);
    }
    let site = sites[rng.gen_range(0..sites.len())];
    let mut out = stmt.clone();
    let tokens = out.site_tokens_mut(site.part);
    let i = site.token_index;
    let existing_power = (tokens.get(i + 1).is_some_and(|t| t.text == "^"))
        .then(|| tokens.get(i + 2).and_then(|t| t.text.parse::<u128>().ok()))
        .flatten();
    if let Some(k) = existing_power {
        tokens[i + 2] = tok(TokenKind::Numeral, &(k + 1).to_string());
    } else {
        tokens.insert(i + 1, tok(TokenKind::Symbol, "^"));
        tokens.insert(i + 2, tok(TokenKind::Numeral, "2"));
    }
    Ok(normalize(&out))
}

const FRESH_NAMES: [&str; 10] = ["x", "y", "z", "w", "u", "t", "s", "r", "q", "p"];

fn fresh_name(bound: &HashSet<&str>) -> String {
    for name in FRESH_NAMES {
        if !bound.contains(name) {
            return name.to_string();
        }
    }
    let mut i = 1u64;
    loop {
        let candidate = format!("x{i}");
        if !bound.contains(candidate.as_str()) {
            return candidate;
        }
        i += 1;
    }
}

/// Appends a fresh, unused name to one variable-declaration group.
pub fn mutate_variable_new<R: Rng>(
    stmt: &TheoremStmt,
    rng: &mut R,
) -> Result<TheoremStmt, MutError> {
    let decls: Vec<usize> = stmt
        .binders
        .iter()
        .enumerate()
        .filter(|(_, g)| g.bracket == Bracket::Paren && g.role == BinderRole::VariableDecl)
        .map(|(i, _)| i)
        .collect();
    if decls.is_empty() {
        return Err(MutError::NotApplicable);
    }
    let target = decls[rng.gen_range(0..decls.len())];
    let name = {
        let bound: HashSet<&str> = stmt.bound_names().into_iter().collect();
        fresh_name(&bound)
    };
    let mut out = stmt.clone();
    out.binders[target].names.push(name);
    Ok(normalize(&out))
}

/// Replaces one scalar declaration type with a different member of
/// [`SCALAR_TYPES`].
pub fn mutate_variable_type<R: Rng>(
    stmt: &TheoremStmt,
    rng: &mut R,
) -> Result<TheoremStmt, MutError> {
    let sites = stmt.locate(LocateQuery::TypedBinderGroups);
    if sites.is_empty() {
        return Err(MutError::NotApplicable);
    }
    let site = sites[rng.gen_range(0..sites.len())];
    let current = stmt.site_tokens(site.part)[site.token_index].text.clone();
    let options: Vec<&str> = SCALAR_TYPES
        .iter()
        .copied()
        .filter(|t| *t != current)
        .collect();
    let new_type = options[rng.gen_range(0..options.len())];
    let mut out = stmt.clone();
    out.site_tokens_mut(site.part)[site.token_index] = tok(TokenKind::UnicodeOp, new_type);
    Ok(normalize(&out))
}

/// Swaps one `=` to `≠` or vice versa, in a hypothesis or the goal.
pub fn mutate_equality<R: Rng>(stmt: &TheoremStmt, rng: &mut R) -> Result<TheoremStmt, MutError> {
    let sites = stmt.locate(LocateQuery::EqOps);
    if sites.is_empty() {
        return Err(MutError::NotApplicable);
    }
    let site = sites[rng.gen_range(0..sites.len())];
    let replacement = if stmt.site_tokens(site.part)[site.token_index].text == "=" {
        tok(TokenKind::UnicodeOp, "≠")
    } else {
        tok(TokenKind::Symbol, "=")
    };
    let mut out = stmt.clone();
    out.site_tokens_mut(site.part)[site.token_index] = replacement;
    Ok(normalize(&out))
}

/// Pairs the informal side of `dataset[index]` with the formal side of a
/// uniformly drawn other aligned record.
pub fn mutate_random_pair<R: Rng>(
    dataset: &[ExampleRecord],
    index: usize,
    rng: &mut R,
) -> Result<ExampleRecord, MutError> {
    let positive = dataset
        .get(index)
        .ok_or_else(|| MutError::InvalidInput(format!("index {index} out of range")))?;
    if positive.label != Label::Aligned {
        return Err(MutError::InvalidInput(format!(
            "record {} is not aligned",
            positive.id
        )));
    }
    let others: Vec<usize> = dataset
        .iter()
        .enumerate()
        .filter(|(j, r)| *j != index && r.label == Label::Aligned)
        .map(|(j, _)| j)
        .collect();
    if others.is_empty() {
        return Err(MutError::NotApplicable);
    }
    let j = others[rng.gen_range(0..others.len())];
    Ok(ExampleRecord {
        id: format!("{}-random", positive.id),
        group_id: positive.group_id.clone(),
        informal: positive.informal.clone(),
        formal: dataset[j].formal.clone(),
        label: Label::Misaligned,
        misalign_kind: Some(MisalignKind::Random),
    })
}

fn token_key(formal: &str) -> Vec<(TokenKind, String)> {
    tokenize(formal)
        .expect("validated formal statement tokenizes")
        .into_iter()
        .map(|t| (t.kind, t.text))
        .collect()
}

fn applicable_strategies(stmt: &TheoremStmt, aligned_count: usize) -> Vec<MisalignKind> {
    let mut kinds = Vec::new();
    let has_constant_site = stmt.locate(LocateQuery::Numerals).iter().any(|s| {
        stmt.site_tokens(s.part)[s.token_index]
            .text
            .parse::<u128>()
            .is_ok()
    });
    if has_constant_site {
        kinds.push(MisalignKind::Constant);
    }
    if !stmt.locate(LocateQuery::VariableOccurrences).is_empty() {
        kinds.push(MisalignKind::Exponent);
    }
    if stmt
        .binders
        .iter()
        .any(|g| g.bracket == Bracket::Paren && g.role == BinderRole::VariableDecl)
    {
        kinds.push(MisalignKind::VariableNew);
    }
    if !stmt.locate(LocateQuery::TypedBinderGroups).is_empty() {
        kinds.push(MisalignKind::VariableType);
    }
    if !stmt.locate(LocateQuery::EqOps).is_empty() {
        kinds.push(MisalignKind::Equality);
    }
    if aligned_count >= 2 {
        kinds.push(MisalignKind::Random);
    }
    kinds
}

fn weighted_choice<R: Rng>(rng: &mut R, items: &[(MisalignKind, f64)]) -> MisalignKind {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut u = rng.gen::<f64>() * total;
    for (kind, w) in items {
        u -= w;
        if u <= 0.0 {
            return *kind;
        }
    }
    items.last().expect("weighted_choice on empty list").0
}

/// Expands every aligned record into itself plus
/// `config.negatives_per_positive` distinct misaligned records.
///
/// Output order is input order, each positive followed by its negatives.
/// Negatives within a group are pairwise distinct token sequences and
/// distinct from the positive. Identical inputs and seed give identical
/// output bytes.
pub fn augment(
    dataset: &[ExampleRecord],
    config: &AugmentConfig,
) -> Result<Vec<ExampleRecord>, MutError> {
    if config.negatives_per_positive == 0 {
        return Err(MutError::InvalidInput(
            "negatives_per_positive must be at least 1".to_string(),
        ));
    }
    if config
        .strategy_weights
        .values()
        .any(|w| !w.is_finite() || *w < 0.0)
    {
        return Err(MutError::InvalidInput(
            "strategy weights must be finite and non-negative".to_string(),
        ));
    }
    if !config.strategy_weights.values().any(|w| *w > 0.0) {
        return Err(MutError::InvalidInput(
            "at least one strategy weight must be positive".to_string(),
        ));
    }

    let mut parsed = Vec::with_capacity(dataset.len());
    let mut ids = HashSet::new();
    let mut groups = HashSet::new();
    for record in dataset {
        record.validate().map_err(MutError::InvalidInput)?;
        if record.label != Label::Aligned {
            return Err(MutError::InvalidInput(format!(
                "record {} must be aligned",
                record.id
            )));
        }
        if !ids.insert(record.id.as_str()) {
            return Err(MutError::InvalidInput(format!(
                "duplicate record id {}",
                record.id
            )));
        }
        if !groups.insert(record.group_id.as_str()) {
            return Err(MutError::InvalidInput(format!(
                "duplicate group_id {}",
                record.group_id
            )));
        }
        let stmt = parse_theorem(&record.formal)
            .map_err(|e| MutError::InvalidInput(format!("record {}: {e}", record.id)))?;
        parsed.push(stmt);
    }

    let aligned_count = dataset.len();
    let mut out = Vec::with_capacity(dataset.len() * (1 + config.negatives_per_positive));
    for (idx, record) in dataset.iter().enumerate() {
        let stmt = &parsed[idx];
        let mut rng = group_rng(config.rng_seed, &record.group_id);
        let weighted: Vec<(MisalignKind, f64)> = applicable_strategies(stmt, aligned_count)
            .into_iter()
            .map(|k| (k, config.strategy_weights.get(&k).copied().unwrap_or(0.0)))
            .filter(|(_, w)| *w > 0.0)
            .collect();
        let mut seen: HashSet<Vec<(TokenKind, String)>> = HashSet::new();
        seen.insert(token_key(&record.formal));
        out.push(record.clone());
        for k in 0..config.negatives_per_positive {
            let mut made = None;
            for _attempt in 0..=config.max_retries_per_negative {
                if weighted.is_empty() {
                    break;
                }
                let kind = weighted_choice(&mut rng, &weighted);
                let formal = match kind {
                    MisalignKind::Constant => mutate_constant(stmt, &mut rng)?.render(),
                    MisalignKind::Exponent => mutate_exponent(stmt, &mut rng)?.render(),
                    MisalignKind::VariableNew => mutate_variable_new(stmt, &mut rng)?.render(),
                    MisalignKind::VariableType => mutate_variable_type(stmt, &mut rng)?.render(),
                    MisalignKind::Equality => mutate_equality(stmt, &mut rng)?.render(),
                    MisalignKind::Random => mutate_random_pair(dataset, idx, &mut rng)?.formal,
                };
                if seen.insert(token_key(&formal)) {
                    made = Some((kind, formal));
                    break;
                }
            }
            let Some((kind, formal)) = made else {
                return Err(MutError::AugmentationExhausted {
                    group_id: record.group_id.clone(),
                });
            };
            out.push(ExampleRecord {
                id: format!("{}-n{:02}", record.id, k + 1),
                group_id: record.group_id.clone(),
                informal: record.informal.clone(),
                formal,
                label: Label::Misaligned,
                misalign_kind: Some(kind),
            });
        }
    }
    Ok(out)
}

/// Counts misaligned records per kind; kinds with no records report 0.
pub fn distribution_report(dataset: &[ExampleRecord]) -> BTreeMap<MisalignKind, usize> {
    let mut counts: BTreeMap<MisalignKind, usize> =
        MisalignKind::ALL.iter().map(|k| (*k, 0)).collect();
    for record in dataset {
        if let Some(kind) = record.misalign_kind {
            *counts.get_mut(&kind).expect("all kinds present") += 1;
        }
    }
    counts
}
