//! Shared fixture statements and corpus builders used across the test
//! suites and handy for trying the CLI.
//!
//! The statements are classic formalization-benchmark headers (miniF2F
//! names) written in the canonical layout produced by
//! [`crate::lean_stmt::TheoremStmt::render`], together with misaligned
//! variants exercising every mutation strategy.

use crate::mutgen::{ExampleRecord, Label};

/// Cone-volume problem, aligned formalization.
pub const CONE_VOLUME: &str = "theorem mathd_algebra_478
  (b h v : ℝ)
  (h₀ : 0 < b ∧ 0 < h ∧ 0 < v)
  (h₁ : v = 1 / 3 * (b * h))
  (h₂ : b = 30)
  (h₃ : h = 13 / 2) :
  v = 65 :=";

pub const CONE_VOLUME_INFORMAL: &str = "The volume of a cone is given by the formula V = 1/3 Bh, \
where B is the area of the base and h is the height. The area of the base of a cone is 30 square \
units, and its height is 6.5 units. What is the number of cubic units in its volume? Show that it \
is 65.";

/// Constant edit: 30 became 31.
pub const CONE_VOLUME_CONSTANT: &str = "theorem mathd_algebra_478
  (b h v : ℝ)
  (h₀ : 0 < b ∧ 0 < h ∧ 0 < v)
  (h₁ : v = 1 / 3 * (b * h))
  (h₂ : b = 31)
  (h₃ : h = 13 / 2) :
  v = 65 :=";

/// Exponent edit: b became b^2 inside h₁.
pub const CONE_VOLUME_EXPONENT: &str = "theorem mathd_algebra_478
  (b h v : ℝ)
  (h₀ : 0 < b ∧ 0 < h ∧ 0 < v)
  (h₁ : v = 1 / 3 * (b^2 * h))
  (h₂ : b = 30)
  (h₃ : h = 13 / 2) :
  v = 65 :=";

/// New binder name x appended to the declaration group.
pub const CONE_VOLUME_VARIABLE_NEW: &str = "theorem mathd_algebra_478
  (b h v x : ℝ)
  (h₀ : 0 < b ∧ 0 < h ∧ 0 < v)
  (h₁ : v = 1 / 3 * (b * h))
  (h₂ : b = 30)
  (h₃ : h = 13 / 2) :
  v = 65 :=";

/// Declaration type changed from ℝ to ℚ.
pub const CONE_VOLUME_VARIABLE_TYPE: &str = "theorem mathd_algebra_478
  (b h v : ℚ)
  (h₀ : 0 < b ∧ 0 < h ∧ 0 < v)
  (h₁ : v = 1 / 3 * (b * h))
  (h₂ : b = 30)
  (h₃ : h = 13 / 2) :
  v = 65 :=";

/// Equality in h₁ swapped to ≠.
pub const CONE_VOLUME_EQUALITY: &str = "theorem mathd_algebra_478
  (b h v : ℝ)
  (h₀ : 0 < b ∧ 0 < h ∧ 0 < v)
  (h₁ : v ≠ 1 / 3 * (b * h))
  (h₂ : b = 30)
  (h₃ : h = 13 / 2) :
  v = 65 :=";

/// Quotient problem, aligned formalization.
pub const QUOTIENT: &str = "theorem mathd_algebra_33
  (x y z : ℝ)
  (h₀ : x ≠ 0)
  (h₁ : 2 * x = 5 * y)
  (h₂ : 7 * y = 10 * z) :
  z / x = 7 / 25 :=";

pub const QUOTIENT_INFORMAL: &str =
    "Prove that if x ≠ 0, 2x = 5y, and 7y = 10z, then z / x = 7 / 25.";

/// Missing-condition variant: drops the x ≠ 0 hypothesis.
pub const QUOTIENT_MISSING_CONDITION: &str = "theorem mathd_algebra_33
  (x y z : ℝ)
  (h₀ : 2 * x = 5 * y)
  (h₁ : 7 * y = 10 * z) :
  z / x = 7 / 25 :=";

/// Wrong-constant variant: 5 became 8.
pub const QUOTIENT_WRONG_CONSTANT: &str = "theorem mathd_algebra_33
  (x y z : ℝ)
  (h₀ : x ≠ 0)
  (h₁ : 2 * x = 8 * y)
  (h₂ : 7 * y = 10 * z) :
  z / x = 7 / 25 :=";

/// Variable-type variant: ℝ became ℚ.
pub const QUOTIENT_VARIABLE_TYPE: &str = "theorem mathd_algebra_33
  (x y z : ℚ)
  (h₀ : x ≠ 0)
  (h₁ : 2 * x = 5 * y)
  (h₂ : 7 * y = 10 * z) :
  z / x = 7 / 25 :=";

/// Equality-violation variant: x ≠ 0 became x = 0.
pub const QUOTIENT_EQUALITY: &str = "theorem mathd_algebra_33
  (x y z : ℝ)
  (h₀ : x = 0)
  (h₁ : 2 * x = 5 * y)
  (h₂ : 7 * y = 10 * z) :
  z / x = 7 / 25 :=";

/// Unrelated statement used for cross-pairing examples.
pub const AMC_PRODUCT: &str = "theorem amc12b_2002_p2
  (x : ℤ)
  (h₀ : x = 4) :
  (3 * x - 2) * (4 * x + 1) - (3 * x - 2) * (4 * x) + 1 = 11 :=";

pub const AMC_PRODUCT_INFORMAL: &str =
    "For x = 4, show that (3x - 2)(4x + 1) - (3x - 2) * 4x + 1 = 11.";

/// Substituted formal for the random strategy; structurally this is just
/// another statement's formalization.
pub const CONE_VOLUME_RANDOM: &str = AMC_PRODUCT;

/// Every distinct fixture statement, aligned and misaligned.
pub fn all_statements() -> Vec<&'static str> {
    vec![
        CONE_VOLUME,
        CONE_VOLUME_CONSTANT,
        CONE_VOLUME_EXPONENT,
        CONE_VOLUME_VARIABLE_NEW,
        CONE_VOLUME_VARIABLE_TYPE,
        CONE_VOLUME_EQUALITY,
        QUOTIENT,
        QUOTIENT_MISSING_CONDITION,
        QUOTIENT_WRONG_CONSTANT,
        QUOTIENT_VARIABLE_TYPE,
        QUOTIENT_EQUALITY,
        AMC_PRODUCT,
    ]
}

/// The six misaligned counterparts of [`CONE_VOLUME`], one per strategy.
pub fn cone_volume_mutants() -> Vec<&'static str> {
    vec![
        CONE_VOLUME_CONSTANT,
        CONE_VOLUME_EXPONENT,
        CONE_VOLUME_VARIABLE_NEW,
        CONE_VOLUME_VARIABLE_TYPE,
        CONE_VOLUME_EQUALITY,
        CONE_VOLUME_RANDOM,
    ]
}

/// Synthetic aligned corpus with disjoint per-group vocabularies. The
/// informal text embeds every whitespace token of its formal statement, so
/// the deterministic mock backend scores positives near the top of its
/// range while any mutated formal introduces unseen tokens.
pub fn separation_corpus(groups: usize) -> Vec<ExampleRecord> {
    (0..groups)
        .map(|g| {
            let (k1, k2, k3, k4) = (1000 * g + 17, 1000 * g + 29, 1000 * g + 41, 1000 * g + 53);
            let formal = format!(
                "theorem thm{g}\n  (a{g} b{g} c{g} : ℝ)\n  (h{g} : a{g} = {k1})\n  (i{g} : b{g} = {k2})\n  (j{g} : c{g} = {k3}) :\n  a{g} + b{g} + c{g} = {k4} :="
            );
            let flat = formal.split_whitespace().collect::<Vec<_>>().join(" ");
            ExampleRecord {
                id: format!("p{g:02}"),
                group_id: format!("g{g:02}"),
                informal: format!("Problem {g}: show that {flat} holds."),
                formal,
                label: Label::Aligned,
                misalign_kind: None,
            }
        })
        .collect()
}

/// Informal/formal text pairs where each formal shares three quarters of
/// its whitespace tokens with its own informal and none with any other
/// group's.
pub fn token_share_corpus(groups: usize) -> Vec<(String, String)> {
    (0..groups)
        .map(|g| {
            let informal: Vec<String> = (0..12).map(|k| format!("n{g}w{k}")).collect();
            let mut formal = informal[..6].to_vec();
            formal.push(format!("f{g}u0"));
            formal.push(format!("f{g}u1"));
            (informal.join(" "), formal.join(" "))
        })
        .collect()
}
