//! Numeric core: pair scores, training losses, and the contrastive
//! gradient.
//!
//! Certainty is the geometric mean of token probabilities,
//! `exp(mean log-prob)`. Similarity is the cosine of the two final-position
//! hidden states. Alignment averages the two, so it lives in (−1/2, 1] and
//! is compared against a threshold of [`DEFAULT_THETA`]'s order by the
//! evaluation layer. Training combines token-level cross entropy with an
//! in-batch contrastive loss over cosine similarities at temperature
//! `tau`; [`BatchRepr::contrastive_grad`] gives the analytic gradient of
//! the latter, checked against central differences in the tests.

pub const DEFAULT_TAU: f64 = 0.07;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
}

fn validate_logprobs(token_logprobs: &[f64]) -> Result<(), ScoreError> {
    if token_logprobs.is_empty() {
        return Err(ScoreError::InvalidInput(
            "at least one token log-probability is required".to_string(),
        ));
    }
    if token_logprobs.iter().any(|x| !x.is_finite() || *x > 0.0) {
        return Err(ScoreError::InvalidInput(
            "token log-probabilities must be finite and at most 0".to_string(),
        ));
    }
    Ok(())
}

/// `exp` of the mean token log-probability, in (0, 1].
pub fn certainty_score(token_logprobs: &[f64]) -> Result<f64, ScoreError> {
    validate_logprobs(token_logprobs)?;
    let mean = token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64;
    Ok(mean.exp())
}

/// Negated sum of token log-probabilities.
pub fn ce_loss(token_logprobs: &[f64]) -> Result<f64, ScoreError> {
    validate_logprobs(token_logprobs)?;
    Ok(-token_logprobs.iter().sum::<f64>())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, ScoreError> {
    if a.is_empty() {
        return Err(ScoreError::InvalidInput(
            "vectors must be non-empty".to_string(),
        ));
    }
    if a.len() != b.len() {
        return Err(ScoreError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(ScoreError::InvalidInput(
            "vector entries must be finite".to_string(),
        ));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(ScoreError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine of the two final-position hidden states.
pub fn similarity_score(nl_hidden: &[f64], fl_hidden: &[f64]) -> Result<f64, ScoreError> {
    cosine(nl_hidden, fl_hidden)
}

/// Mean of certainty and similarity.
pub fn alignment_score(certainty: f64, similarity: f64) -> Result<f64, ScoreError> {
    if !certainty.is_finite() || !(0.0..=1.0).contains(&certainty) {
        return Err(ScoreError::InvalidInput(format!(
            "certainty must lie in [0, 1], got {certainty}"
        )));
    }
    if !similarity.is_finite() || !(-1.0..=1.0).contains(&similarity) {
        return Err(ScoreError::InvalidInput(format!(
            "similarity must lie in [-1, 1], got {similarity}"
        )));
    }
    Ok(0.5 * (certainty + similarity))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Scores {
    pub certainty: f64,
    pub similarity: f64,
    pub alignment: f64,
}

impl Scores {
    pub fn from_parts(certainty: f64, similarity: f64) -> Result<Scores, ScoreError> {
        let alignment = alignment_score(certainty, similarity)?;
        Ok(Scores {
            certainty,
            similarity,
            alignment,
        })
    }

    /// Scores a pair straight from backend outputs.
    pub fn from_outputs(
        token_logprobs: &[f64],
        nl_hidden: &[f64],
        fl_hidden: &[f64],
    ) -> Result<Scores, ScoreError> {
        Scores::from_parts(
            certainty_score(token_logprobs)?,
            similarity_score(nl_hidden, fl_hidden)?,
        )
    }
}

/// Formal-side embeddings of a contrastive batch.
///
/// `SelfConditioned` holds one embedding per pair. `CrossConditioned`
/// holds the full matrix `v[i][j]`: formal statement `j` encoded while
/// conditioned on informal statement `i`, as produced by concatenative
/// encoders.
#[derive(Clone, Debug, PartialEq)]
pub enum FormalSide {
    SelfConditioned(Vec<Vec<f64>>),
    CrossConditioned(Vec<Vec<Vec<f64>>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchRepr {
    pub informal: Vec<Vec<f64>>,
    pub formal: FormalSide,
    pub tau: f64,
}

impl BatchRepr {
    pub fn self_conditioned(informal: Vec<Vec<f64>>, formal: Vec<Vec<f64>>, tau: f64) -> Self {
        BatchRepr {
            informal,
            formal: FormalSide::SelfConditioned(formal),
            tau,
        }
    }

    pub fn cross_conditioned(
        informal: Vec<Vec<f64>>,
        formal: Vec<Vec<Vec<f64>>>,
        tau: f64,
    ) -> Self {
        BatchRepr {
            informal,
            formal: FormalSide::CrossConditioned(formal),
            tau,
        }
    }

    fn shape(&self) -> Result<(usize, usize), ScoreError> {
        let n = self.informal.len();
        if n == 0 {
            return Err(ScoreError::InvalidInput(
                "batch must contain at least one pair".to_string(),
            ));
        }
        let dim = self.informal[0].len();
        if dim == 0 {
            return Err(ScoreError::InvalidInput(
                "embeddings must be non-empty".to_string(),
            ));
        }
        if !self.tau.is_finite() || self.tau <= 0.0 {
            return Err(ScoreError::InvalidTemperature(self.tau));
        }
        let check_row = |row: &Vec<f64>| -> Result<(), ScoreError> {
            if row.len() != dim {
                return Err(ScoreError::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(ScoreError::InvalidInput(
                    "embedding entries must be finite".to_string(),
                ));
            }
            Ok(())
        };
        for row in &self.informal {
            check_row(row)?;
        }
        match &self.formal {
            FormalSide::SelfConditioned(rows) => {
                if rows.len() != n {
                    return Err(ScoreError::DimensionMismatch {
                        left: n,
                        right: rows.len(),
                    });
                }
                for row in rows {
                    check_row(row)?;
                }
            }
            FormalSide::CrossConditioned(grid) => {
                if grid.len() != n {
                    return Err(ScoreError::DimensionMismatch {
                        left: n,
                        right: grid.len(),
                    });
                }
                for inner in grid {
                    if inner.len() != n {
                        return Err(ScoreError::DimensionMismatch {
                            left: n,
                            right: inner.len(),
                        });
                    }
                    for row in inner {
                        check_row(row)?;
                    }
                }
            }
        }
        Ok((n, dim))
    }

    /// `S[i][j]` = cosine of informal `i` against formal `j` (conditioned
    /// on informal `i` in cross mode).
    pub fn similarity_matrix(&self) -> Result<Vec<Vec<f64>>, ScoreError> {
        let (n, _) = self.shape()?;
        let mut s = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let v = match &self.formal {
                    FormalSide::SelfConditioned(rows) => &rows[j],
                    FormalSide::CrossConditioned(grid) => &grid[i][j],
                };
                s[i][j] = cosine(&self.informal[i], v)?;
            }
        }
        Ok(s)
    }

    /// Mean over rows of `log-sum-exp(S_i/τ) − S_ii/τ`, computed with the
    /// row max subtracted. A batch of one pair gives exactly 0.
    pub fn contrastive_loss(&self) -> Result<f64, ScoreError> {
        let s = self.similarity_matrix()?;
        let n = s.len();
        let mut acc = 0.0;
        for (i, row) in s.iter().enumerate() {
            let scaled: Vec<f64> = row.iter().map(|x| x / self.tau).collect();
            let m = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + scaled.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            acc += lse - scaled[i];
        }
        Ok(acc / n as f64)
    }

    /// Analytic gradient of [`contrastive_loss`](Self::contrastive_loss)
    /// with respect to every embedding.
    pub fn contrastive_grad(&self) -> Result<ContrastiveGrad, ScoreError> {
        let (n, dim) = self.shape()?;
        let s = self.similarity_matrix()?;

        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            let scaled: Vec<f64> = s[i].iter().map(|x| x / self.tau).collect();
            let m = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scaled.iter().map(|x| (x - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            for j in 0..n {
                let p = exps[j] / z;
                let delta = if i == j { 1.0 } else { 0.0 };
                g[i][j] = (p - delta) / (n as f64 * self.tau);
            }
        }

        let unit = |v: &[f64]| {
            let nv = norm(v);
            (v.iter().map(|x| x / nv).collect::<Vec<f64>>(), nv)
        };
        let informal_units: Vec<(Vec<f64>, f64)> =
            self.informal.iter().map(|v| unit(v)).collect();

        let mut grad_informal = vec![vec![0.0; dim]; n];
        match &self.formal {
            FormalSide::SelfConditioned(rows) => {
                let formal_units: Vec<(Vec<f64>, f64)> = rows.iter().map(|v| unit(v)).collect();
                let mut grad_formal = vec![vec![0.0; dim]; n];
                for i in 0..n {
                    let (u_hat, u_norm) = &informal_units[i];
                    for j in 0..n {
                        let (v_hat, v_norm) = &formal_units[j];
                        for d in 0..dim {
                            grad_informal[i][d] +=
                                g[i][j] * (v_hat[d] - s[i][j] * u_hat[d]) / u_norm;
                            grad_formal[j][d] +=
                                g[i][j] * (u_hat[d] - s[i][j] * v_hat[d]) / v_norm;
                        }
                    }
                }
                Ok(ContrastiveGrad::SelfConditioned {
                    informal: grad_informal,
                    formal: grad_formal,
                })
            }
            FormalSide::CrossConditioned(grid) => {
                let mut grad_formal = vec![vec![vec![0.0; dim]; n]; n];
                for i in 0..n {
                    let (u_hat, u_norm) = &informal_units[i];
                    for j in 0..n {
                        let (v_hat, v_norm) = unit(&grid[i][j]);
                        for d in 0..dim {
                            grad_informal[i][d] +=
                                g[i][j] * (v_hat[d] - s[i][j] * u_hat[d]) / u_norm;
                            grad_formal[i][j][d] =
                                g[i][j] * (u_hat[d] - s[i][j] * v_hat[d]) / v_norm;
                        }
                    }
                }
                Ok(ContrastiveGrad::CrossConditioned {
                    informal: grad_informal,
                    formal: grad_formal,
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ContrastiveGrad {
    SelfConditioned {
        informal: Vec<Vec<f64>>,
        formal: Vec<Vec<f64>>,
    },
    CrossConditioned {
        informal: Vec<Vec<f64>>,
        formal: Vec<Vec<Vec<f64>>>,
    },
}

/// Cross entropy plus contrastive loss.
pub fn total_loss(token_logprobs: &[f64], batch: &BatchRepr) -> Result<f64, ScoreError> {
    Ok(ce_loss(token_logprobs)? + batch.contrastive_loss()?)
}
