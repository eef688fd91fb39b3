//! Parameterized scoring functions `f(d, q)` with exact analytic gradients.
//!
//! | kind | input | score |
//! |------|-------|-------|
//! | [`ScorerKind::Linear`] | features `x` | `w·x + b` |
//! | [`ScorerKind::Mlp1`] | features `x` | `w2·tanh(W1 x + b1) + b2` |
//! | [`ScorerKind::MatFac`] | user/item ids | `u_q·v_d + b_d` |
//! | [`ScorerKind::TextAvgEmbed`] | token ids | `mean(E[q])ᵀ M mean(E[d])` |
//!
//! The discriminator view is `D(d|q) = σ(f(d, q))`, see [`Scorer::discriminator_prob`].

mod checkpoint;
mod params;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use params::{ParamVector, Segment};

use thiserror::Error;

use crate::dataset::{Dataset, Pair};
use crate::math::{dot, sigmoid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScorerError {
    #[error("initialization scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("{kind} scorer cannot score document `{doc}`: {reason}")]
    Representation {
        kind: &'static str,
        doc: String,
        reason: String,
    },
    #[error("scorer does not fit dataset: {0}")]
    Incompatible(String),
    #[error("bad parameter layout: {0}")]
    Layout(String),
    #[error("non-finite parameter at index {0}")]
    NonFinite(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Architecture choice before it is sized against a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    Linear,
    Mlp1 { hidden: usize },
    MatFac { embed_dim: usize },
    TextAvgEmbed { embed_dim: usize },
}

impl ModelSpec {
    pub fn name(self) -> &'static str {
        match self {
            ModelSpec::Linear => "linear",
            ModelSpec::Mlp1 { .. } => "mlp1",
            ModelSpec::MatFac { .. } => "matfac",
            ModelSpec::TextAvgEmbed { .. } => "text-avg-embed",
        }
    }

    /// Size the architecture against a dataset's dimensions.
    pub fn resolve(self, ds: &Dataset) -> Result<ScorerKind, ScorerError> {
        let need_features = || {
            ds.feature_dim()
                .ok_or_else(|| ScorerError::Incompatible("dataset has no feature vectors".into()))
        };
        Ok(match self {
            ModelSpec::Linear => ScorerKind::Linear {
                dim: need_features()?,
            },
            ModelSpec::Mlp1 { hidden } => ScorerKind::Mlp1 {
                dim: need_features()?,
                hidden,
            },
            ModelSpec::MatFac { embed_dim } => ScorerKind::MatFac {
                users: ds.num_queries(),
                items: ds.num_items(),
                embed_dim,
            },
            ModelSpec::TextAvgEmbed { embed_dim } => ScorerKind::TextAvgEmbed {
                vocab: ds
                    .max_token()
                    .map(|t| t as usize + 1)
                    .ok_or_else(|| ScorerError::Incompatible("dataset has no tokens".into()))?,
                embed_dim,
            },
        })
    }
}

/// Fully sized scorer architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    Linear { dim: usize },
    Mlp1 { dim: usize, hidden: usize },
    MatFac { users: usize, items: usize, embed_dim: usize },
    TextAvgEmbed { vocab: usize, embed_dim: usize },
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Linear { .. } => "linear",
            ScorerKind::Mlp1 { .. } => "mlp1",
            ScorerKind::MatFac { .. } => "matfac",
            ScorerKind::TextAvgEmbed { .. } => "text-avg-embed",
        }
    }

    pub fn layout(self) -> Vec<(&'static str, usize)> {
        match self {
            ScorerKind::Linear { dim } => vec![("w", dim), ("b", 1)],
            ScorerKind::Mlp1 { dim, hidden } => {
                vec![("w1", hidden * dim), ("b1", hidden), ("w2", hidden), ("b2", 1)]
            }
            ScorerKind::MatFac {
                users,
                items,
                embed_dim,
            } => vec![
                ("user", users * embed_dim),
                ("item", items * embed_dim),
                ("item_bias", items),
            ],
            ScorerKind::TextAvgEmbed { vocab, embed_dim } => {
                vec![("embed", vocab * embed_dim), ("bilinear", embed_dim * embed_dim)]
            }
        }
    }

    pub fn num_params(self) -> usize {
        self.layout().iter().map(|(_, n)| n).sum()
    }
}

/// Parameter initialization for [`init_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    Uniform { scale: f64, seed: u64 },
}

pub fn init_params(kind: ScorerKind, init: Init) -> Result<ParamVector, ScorerError> {
    let layout = kind.layout();
    match init {
        Init::Zeros => Ok(ParamVector::zeros(&layout)),
        Init::Uniform { scale, seed } => ParamVector::uniform(&layout, scale, seed),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scorer {
    kind: ScorerKind,
    pub params: ParamVector,
}

impl Scorer {
    pub fn new(kind: ScorerKind, init: Init) -> Result<Self, ScorerError> {
        Ok(Self {
            kind,
            params: init_params(kind, init)?,
        })
    }

    pub fn from_params(kind: ScorerKind, params: ParamVector) -> Result<Self, ScorerError> {
        let expected = kind.layout();
        let matches = expected.len() == params.layout().len()
            && expected
                .iter()
                .zip(params.layout())
                .all(|((n, l), s)| *n == s.name && *l == s.len);
        if !matches {
            return Err(ScorerError::Layout(format!(
                "parameters do not match a {} scorer",
                kind.name()
            )));
        }
        Ok(Self { kind, params })
    }

    pub fn kind(&self) -> ScorerKind {
        self.kind
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Check up front that every pair of `ds` is scoreable.
    pub fn check_dataset(&self, ds: &Dataset) -> Result<(), ScorerError> {
        match self.kind {
            ScorerKind::MatFac { users, items, .. } => {
                if ds.num_queries() != users || ds.num_items() != items {
                    return Err(ScorerError::Incompatible(format!(
                        "matfac sized for {users} users x {items} items, dataset has {} x {}",
                        ds.num_queries(),
                        ds.num_items()
                    )));
                }
                Ok(())
            }
            _ => {
                for qi in 0..ds.num_queries() {
                    for di in 0..ds.pool(qi).len() {
                        self.score(ds.pair(qi, di))?;
                    }
                }
                Ok(())
            }
        }
    }

    fn mismatch(&self, pair: Pair<'_>, reason: impl Into<String>) -> ScorerError {
        ScorerError::Representation {
            kind: self.kind.name(),
            doc: pair.doc.id.to_string(),
            reason: reason.into(),
        }
    }

    fn features<'a>(&self, pair: Pair<'a>, dim: usize) -> Result<&'a [f64], ScorerError> {
        match &pair.doc.features {
            Some(x) if x.len() == dim => Ok(x),
            Some(x) => Err(self.mismatch(pair, format!("{} features, expected {dim}", x.len()))),
            None => Err(self.mismatch(pair, "document has no feature vector")),
        }
    }

    fn token_means(&self, pair: Pair<'_>, vocab: usize, k: usize) -> Result<(Vec<f64>, Vec<f64>), ScorerError> {
        let q = pair
            .query
            .tokens
            .as_deref()
            .ok_or_else(|| self.mismatch(pair, "query has no tokens"))?;
        let d = pair
            .doc
            .tokens
            .as_deref()
            .ok_or_else(|| self.mismatch(pair, "document has no tokens"))?;
        let embed = self.params.segment("embed");
        let mean = |toks: &[u32]| -> Result<Vec<f64>, ScorerError> {
            let mut m = vec![0.0; k];
            if toks.is_empty() {
                return Ok(m);
            }
            for &t in toks {
                let t = t as usize;
                if t >= vocab {
                    return Err(self.mismatch(pair, format!("token {t} outside vocabulary of {vocab}")));
                }
                crate::math::axpy(1.0, &embed[t * k..(t + 1) * k], &mut m);
            }
            let n = toks.len() as f64;
            m.iter_mut().for_each(|v| *v /= n);
            Ok(m)
        };
        Ok((mean(q)?, mean(d)?))
    }

    /// `f(d, q)`.
    pub fn score(&self, pair: Pair<'_>) -> Result<f64, ScorerError> {
        let p = &self.params;
        match self.kind {
            ScorerKind::Linear { dim } => {
                let x = self.features(pair, dim)?;
                Ok(dot(p.segment("w"), x) + p.segment("b")[0])
            }
            ScorerKind::Mlp1 { dim, hidden } => {
                let x = self.features(pair, dim)?;
                let w1 = p.segment("w1");
                let b1 = p.segment("b1");
                let w2 = p.segment("w2");
                let mut f = p.segment("b2")[0];
                for j in 0..hidden {
                    let h = (dot(&w1[j * dim..(j + 1) * dim], x) + b1[j]).tanh();
                    f += w2[j] * h;
                }
                Ok(f)
            }
            ScorerKind::MatFac {
                users,
                items,
                embed_dim: k,
            } => {
                let (u, i) = (pair.query_index, pair.item);
                if u >= users || i >= items {
                    return Err(self.mismatch(pair, "user or item index out of range"));
                }
                let uv = &p.segment("user")[u * k..(u + 1) * k];
                let iv = &p.segment("item")[i * k..(i + 1) * k];
                Ok(dot(uv, iv) + p.segment("item_bias")[i])
            }
            ScorerKind::TextAvgEmbed { vocab, embed_dim: k } => {
                let (a, b) = self.token_means(pair, vocab, k)?;
                let m = p.segment("bilinear");
                let mut f = 0.0;
                for r in 0..k {
                    f += a[r] * dot(&m[r * k..(r + 1) * k], &b);
                }
                Ok(f)
            }
        }
    }

    /// `out += scale * ∂f/∂params`, touching only the entries the pair uses.
    pub fn accumulate_gradient(
        &self,
        pair: Pair<'_>,
        scale: f64,
        out: &mut [f64],
    ) -> Result<(), ScorerError> {
        debug_assert_eq!(out.len(), self.params.len());
        let p = &self.params;
        match self.kind {
            ScorerKind::Linear { dim } => {
                let x = self.features(pair, dim)?;
                crate::math::axpy(scale, x, &mut out[..dim]);
                out[dim] += scale;
            }
            ScorerKind::Mlp1 { dim, hidden } => {
                let x = self.features(pair, dim)?;
                let w1 = p.segment("w1");
                let b1 = p.segment("b1");
                let w2 = p.segment("w2");
                let (o_b1, o_w2, o_b2) = (p.offset_of("b1"), p.offset_of("w2"), p.offset_of("b2"));
                for j in 0..hidden {
                    let h = (dot(&w1[j * dim..(j + 1) * dim], x) + b1[j]).tanh();
                    out[o_w2 + j] += scale * h;
                    // tanh' = 1 - h^2
                    let delta = scale * w2[j] * (1.0 - h * h);
                    if delta != 0.0 {
                        crate::math::axpy(delta, x, &mut out[j * dim..(j + 1) * dim]);
                        out[o_b1 + j] += delta;
                    }
                }
                out[o_b2] += scale;
            }
            ScorerKind::MatFac {
                users,
                items,
                embed_dim: k,
            } => {
                let (u, i) = (pair.query_index, pair.item);
                if u >= users || i >= items {
                    return Err(self.mismatch(pair, "user or item index out of range"));
                }
                let (o_user, o_item, o_bias) =
                    (p.offset_of("user"), p.offset_of("item"), p.offset_of("item_bias"));
                let uv = &p.segment("user")[u * k..(u + 1) * k];
                let iv = &p.segment("item")[i * k..(i + 1) * k];
                crate::math::axpy(scale, iv, &mut out[o_user + u * k..o_user + (u + 1) * k]);
                crate::math::axpy(scale, uv, &mut out[o_item + i * k..o_item + (i + 1) * k]);
                out[o_bias + i] += scale;
            }
            ScorerKind::TextAvgEmbed { vocab, embed_dim: k } => {
                let (a, b) = self.token_means(pair, vocab, k)?;
                let m = p.segment("bilinear");
                let o_m = p.offset_of("bilinear");
                // ∂f/∂M = a bᵀ
                for r in 0..k {
                    crate::math::axpy(scale * a[r], &b, &mut out[o_m + r * k..o_m + (r + 1) * k]);
                }
                // ∂f/∂a = M b, ∂f/∂b = Mᵀ a
                let mb: Vec<f64> = (0..k).map(|r| dot(&m[r * k..(r + 1) * k], &b)).collect();
                let mut mta = vec![0.0; k];
                for r in 0..k {
                    crate::math::axpy(a[r], &m[r * k..(r + 1) * k], &mut mta);
                }
                let q = pair.query.tokens.as_deref().unwrap_or_default();
                let d = pair.doc.tokens.as_deref().unwrap_or_default();
                for (toks, g) in [(q, &mb), (d, &mta)] {
                    if toks.is_empty() {
                        continue;
                    }
                    let w = scale / toks.len() as f64;
                    for &t in toks {
                        let t = t as usize;
                        crate::math::axpy(w, g, &mut out[t * k..(t + 1) * k]);
                    }
                }
            }
        }
        Ok(())
    }

    /// Dense `∂f/∂params` in the parameter layout.
    pub fn score_gradient(&self, pair: Pair<'_>) -> Result<Vec<f64>, ScorerError> {
        let mut g = vec![0.0; self.params.len()];
        self.accumulate_gradient(pair, 1.0, &mut g)?;
        Ok(g)
    }

    /// `D(d|q) = σ(f(d, q))`, strictly inside (0, 1).
    pub fn discriminator_prob(&self, pair: Pair<'_>) -> Result<f64, ScorerError> {
        Ok(sigmoid(self.score(pair)?))
    }

    /// `σ(f(d_i, q) − f(d_j, q))`: probability that `d_i` ranks above `d_j`.
    pub fn pairwise_prob(&self, di: Pair<'_>, dj: Pair<'_>) -> Result<f64, ScorerError> {
        Ok(sigmoid(self.score(di)? - self.score(dj)?))
    }

    /// Scores of the given pool positions of one query.
    pub fn score_pool(&self, ds: &Dataset, qi: usize, pool: &[usize]) -> Result<Vec<f64>, ScorerError> {
        pool.iter().map(|&di| self.score(ds.pair(qi, di))).collect()
    }
}
