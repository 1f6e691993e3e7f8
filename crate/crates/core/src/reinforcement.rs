//! Thematically reinforced tfidf, concept vectors and relatedness.
//!
//! The reinforced weight of `w` at page `p` adds to `t_p(w)` the categorical
//! tfidf of `w` at each tree ancestor of `p`, scaled by the matching entry of
//! a λ schedule: `t_p(w) + Σ_{i≥1} λ_i · t_{πⁱ(p)}(w)`, with `π¹` the parent.

use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::arborification::SpanningTree;
use crate::error::{Result, TesaError};
use crate::textproc::TermId;
use crate::vectors::{cosine, EsaSpace, SparseVector};
use crate::weighting::categorical_profile;

/// λ₁…λ_k, all finite and nonnegative; zero beyond `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LambdaSchedule(Vec<f64>);

impl LambdaSchedule {
    pub fn new(values: Vec<f64>) -> Result<LambdaSchedule> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(TesaError::Config(format!(
                "λ entries must be finite and nonnegative, got {bad}"
            )));
        }
        let schedule = LambdaSchedule(values);
        if !schedule.is_non_increasing() {
            warn!("λ schedule {schedule} is not non-increasing");
        }
        Ok(schedule)
    }

    /// The empty schedule: standard ESA.
    pub fn zero() -> LambdaSchedule {
        LambdaSchedule(Vec::new())
    }

    /// Comma-separated decimals; the empty string is the zero schedule.
    pub fn parse(text: &str) -> Result<LambdaSchedule> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(LambdaSchedule::zero());
        }
        let values = text
            .split(',')
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| TesaError::Config(format!("bad λ entry {field:?} in {text:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        LambdaSchedule::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// λ_i for 1-based `i`; 0 past the end.
    pub fn get(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.0.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }
}

impl TryFrom<Vec<f64>> for LambdaSchedule {
    type Error = TesaError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        LambdaSchedule::new(values)
    }
}

impl From<LambdaSchedule> for Vec<f64> {
    fn from(schedule: LambdaSchedule) -> Self {
        schedule.0
    }
}

impl fmt::Display for LambdaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// `t_p + Σ λ_i · ancestors[i-1]`, summed in ancestor order. Zero λ entries are
/// skipped, so the all-zero schedule returns `t_p` unchanged.
pub fn combine(t_p: f64, lambda: &LambdaSchedule, ancestors: impl IntoIterator<Item = f64>) -> f64 {
    let mut value = t_p;
    for (&l, t) in lambda.values().iter().zip(ancestors) {
        if l != 0.0 {
            value += l * t;
        }
    }
    value
}

/// Which pages carry a reinforced component for `w`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportMode {
    /// Every page whose ancestors mention `w`, even if `w ∉ p`.
    #[default]
    Inclusive,
    /// Only pages containing `w`.
    Exclusive,
}

/// Reinforced measures over an ESA space and a spanning tree of its
/// page/category digraph. Tree node `p < n_pages` is page dimension `p`;
/// node `n_pages + k` is category `k` of the descendant index.
#[derive(Clone, Debug)]
pub struct ReinforcedSpace<'a> {
    space: EsaSpace<'a>,
    tree: &'a SpanningTree,
    mode: SupportMode,
    /// Per page: ancestor categories `π¹, π², …` as category indices.
    paths: Vec<Vec<u32>>,
    /// Per category, per depth `i - 1`: pages with `πⁱ(p) = c`.
    buckets: Vec<Vec<Vec<u32>>>,
}

impl<'a> ReinforcedSpace<'a> {
    pub fn new(space: EsaSpace<'a>, tree: &'a SpanningTree) -> Result<ReinforcedSpace<'a>> {
        let n_pages = space.dim();
        let categories = space.descendants.category_ids();
        if tree.n_nodes() != n_pages + categories.len() {
            return Err(TesaError::Invalid("spanning tree does not cover the page space".into()));
        }
        if let Some(k) = (0..categories.len()).find(|&k| tree.name(n_pages + k) != categories[k]) {
            return Err(TesaError::Invalid(format!(
                "tree node order differs at category '{}'",
                categories[k]
            )));
        }
        let mut buckets: Vec<Vec<Vec<u32>>> = vec![Vec::new(); categories.len()];
        let mut paths = Vec::with_capacity(n_pages);
        for p in 0..n_pages {
            let path: Vec<u32> = tree.ancestors(p).into_iter().map(|v| (v - n_pages) as u32).collect();
            for (depth, &c) in path.iter().enumerate() {
                let slot = &mut buckets[c as usize];
                if slot.len() <= depth {
                    slot.resize(depth + 1, Vec::new());
                }
                slot[depth].push(p as u32);
            }
            paths.push(path);
        }
        Ok(ReinforcedSpace {
            space,
            tree,
            mode: SupportMode::default(),
            paths,
            buckets,
        })
    }

    pub fn with_mode(mut self, mode: SupportMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> SupportMode {
        self.mode
    }

    pub fn space(&self) -> &EsaSpace<'a> {
        &self.space
    }

    pub fn tree(&self) -> &SpanningTree {
        self.tree
    }

    /// Ancestor categories of a page dimension, parent first.
    pub fn ancestor_categories(&self, page: usize) -> &[u32] {
        &self.paths[page]
    }

    fn value_at(&self, page: usize, term: TermId, lambda: &LambdaSchedule, profile: &[(u32, f64)]) -> f64 {
        let t_c = |c: u32| {
            profile
                .binary_search_by_key(&c, |&(k, _)| k)
                .map_or(0.0, |i| profile[i].1)
        };
        let ancestors = self.paths[page].iter().map(|&c| t_c(c));
        combine(self.space.stats.tfidf(page, term), lambda, ancestors)
    }

    /// `t_{p,λ}(w)` for page dimension `page`.
    pub fn reinforced_tfidf(&self, page: usize, term: TermId, lambda: &LambdaSchedule) -> f64 {
        let profile = categorical_profile(term, self.space.stats, self.space.descendants);
        self.value_at(page, term, lambda, &profile)
    }

    /// `t_{p,λ}(w)` by page id and word.
    pub fn reinforced_tfidf_of(&self, page_id: &str, word: &str, lambda: &LambdaSchedule) -> Result<f64> {
        let page = self
            .tree
            .node(page_id)
            .filter(|&v| v < self.space.dim())
            .ok_or_else(|| TesaError::unknown("page", page_id))?;
        Ok(self.reinforced_tfidf(page, self.space.term(word)?, lambda))
    }

    /// Component at `p` is `t_{p,λ}(w)`. For the zero schedule this is the
    /// standard concept vector.
    pub fn concept_vector(&self, term: TermId, lambda: &LambdaSchedule) -> SparseVector {
        if lambda.is_zero() {
            return self.space.concept_vector(term);
        }
        let profile = categorical_profile(term, self.space.stats, self.space.descendants);
        let mut pages: Vec<u32> = self.space.stats.postings(term).iter().map(|&(p, _)| p).collect();
        if self.mode == SupportMode::Inclusive {
            for &(c, t) in &profile {
                if t == 0.0 {
                    continue;
                }
                for (depth, members) in self.buckets[c as usize].iter().enumerate() {
                    if lambda.get(depth + 1) != 0.0 {
                        pages.extend_from_slice(members);
                    }
                }
            }
            pages.sort_unstable();
            pages.dedup();
        }
        let values = pages
            .iter()
            .map(|&p| self.value_at(p as usize, term, lambda, &profile))
            .collect();
        SparseVector::from_sorted(pages, values)
    }

    pub fn concept_vector_of(&self, word: &str, lambda: &LambdaSchedule) -> Result<SparseVector> {
        Ok(self.concept_vector(self.space.term(word)?, lambda))
    }

    /// μ_λ(w, w′): cosine of the reinforced concept vectors.
    pub fn relatedness(&self, word: &str, other: &str, lambda: &LambdaSchedule) -> Result<f64> {
        let u = self.concept_vector_of(word, lambda)?;
        if u.is_zero() {
            return Err(TesaError::EmptyConceptVector(word.to_string()));
        }
        let v = self.concept_vector_of(other, lambda)?;
        if v.is_zero() {
            return Err(TesaError::EmptyConceptVector(other.to_string()));
        }
        Ok(cosine(&u, &v))
    }
}
