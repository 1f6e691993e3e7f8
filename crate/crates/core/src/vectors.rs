//! Sparse page-space vectors and the standard ESA measure.

use std::fmt::Write as _;

use crate::error::{Result, TesaError};
use crate::textproc::{TermId, Vocabulary};
use crate::weighting::{category_term_weights, DescendantIndex, TermStats};

/// Sparse vector with strictly increasing indices, no stored zeros and a
/// cached Euclidean norm.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
    norm: f64,
}

fn norm_of(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl SparseVector {
    pub fn zero() -> Self {
        SparseVector::default()
    }

    /// Build from arbitrary `(index, weight)` pairs: duplicates are summed in
    /// input order, zeros dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        Self::from_sorted(indices, values)
    }

    /// `indices` must already be strictly increasing.
    pub(crate) fn from_sorted(indices: Vec<u32>, values: Vec<f64>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let (indices, values): (Vec<u32>, Vec<f64>) =
            indices.into_iter().zip(values).filter(|&(_, v)| v != 0.0).unzip();
        let norm = norm_of(&values);
        SparseVector { indices, values, norm }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn get(&self, index: u32) -> f64 {
        self.indices.binary_search(&index).map_or(0.0, |k| self.values[k])
    }

    /// Inner product, summed in ascending index order.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        Self::from_sorted(self.indices.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    /// Unit-norm copy; the zero vector stays zero.
    pub fn normalized(&self) -> SparseVector {
        if self.norm == 0.0 {
            return SparseVector::zero();
        }
        Self::from_sorted(
            self.indices.clone(),
            self.values.iter().map(|v| v / self.norm).collect(),
        )
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut dense = vec![0.0; dim];
        for (i, v) in self.iter() {
            dense[i as usize] = v;
        }
        dense
    }

    /// `dim:weight` pairs separated by spaces, weights at 9 significant digits.
    pub fn to_text(&self, one_based: bool) -> String {
        let offset = u32::from(one_based);
        let mut out = String::new();
        for (k, (i, v)) in self.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}:{}", i + offset, format_significant(v, 9));
        }
        out
    }
}

/// ⟨u,v⟩ / (‖u‖·‖v‖), or 0 when either vector is zero.
pub fn cosine(u: &SparseVector, v: &SparseVector) -> f64 {
    if u.norm == 0.0 || v.norm == 0.0 {
        return 0.0;
    }
    u.dot(v) / (u.norm * v.norm)
}

/// Fixed-significant-digit decimal rendering (no exponent).
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let text = format!("{value:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.9999999996
    let rounded: f64 = text.parse().unwrap_or(value);
    if decimals > 0 && rounded.abs() >= 10f64.powi(magnitude + 1) {
        let decimals = decimals - 1;
        format!("{value:.decimals$}")
    } else {
        text
    }
}

/// Scatter-add buffer over a fixed dimension. Additions land in call order, so
/// callers control the floating-point summation order.
#[derive(Debug)]
pub struct SparseAccumulator {
    dense: Vec<f64>,
    touched: Vec<u32>,
    seen: Vec<bool>,
}

impl SparseAccumulator {
    pub fn new(dim: usize) -> Self {
        SparseAccumulator {
            dense: vec![0.0; dim],
            touched: Vec::new(),
            seen: vec![false; dim],
        }
    }

    pub fn add(&mut self, index: u32, value: f64) {
        let i = index as usize;
        if !self.seen[i] {
            self.seen[i] = true;
            self.touched.push(index);
        }
        self.dense[i] += value;
    }

    pub fn add_scaled(&mut self, v: &SparseVector, factor: f64) {
        for (i, x) in v.iter() {
            self.add(i, factor * x);
        }
    }

    /// Drain into a sparse vector and reset.
    pub fn take(&mut self) -> SparseVector {
        self.touched.sort_unstable();
        let mut indices = Vec::with_capacity(self.touched.len());
        let mut values = Vec::with_capacity(self.touched.len());
        for &i in &self.touched {
            let k = i as usize;
            indices.push(i);
            values.push(self.dense[k]);
            self.dense[k] = 0.0;
            self.seen[k] = false;
        }
        self.touched.clear();
        SparseVector::from_sorted(indices, values)
    }
}

/// Concept, page and category vectors over the page space of a corpus.
#[derive(Clone, Copy, Debug)]
pub struct EsaSpace<'a> {
    pub vocab: &'a Vocabulary,
    pub stats: &'a TermStats,
    pub descendants: &'a DescendantIndex,
}

impl<'a> EsaSpace<'a> {
    pub fn new(vocab: &'a Vocabulary, stats: &'a TermStats, descendants: &'a DescendantIndex) -> Self {
        EsaSpace {
            vocab,
            stats,
            descendants,
        }
    }

    pub fn dim(&self) -> usize {
        self.stats.n_pages()
    }

    pub fn term(&self, word: &str) -> Result<TermId> {
        self.vocab.id(word).ok_or_else(|| TesaError::unknown("word", word))
    }

    /// Component at page `p` is `t_p(w)`; the support is the set of pages
    /// containing `w` (empty when `w` occurs on every page).
    pub fn concept_vector(&self, term: TermId) -> SparseVector {
        let postings = self.stats.postings(term);
        let df = postings.len() as u64;
        let n = self.stats.n_pages();
        SparseVector::from_sorted(
            postings.iter().map(|&(p, _)| p).collect(),
            postings
                .iter()
                .map(|&(_, f)| crate::weighting::tfidf_value(f as u64, n, df))
                .collect(),
        )
    }

    pub fn concept_vector_of(&self, word: &str) -> Result<SparseVector> {
        Ok(self.concept_vector(self.term(word)?))
    }

    /// Standard ESA relatedness μ(w, w′).
    pub fn esa_relatedness(&self, word: &str, other: &str) -> Result<f64> {
        let u = self.concept_vector_of(word)?;
        if u.is_zero() {
            return Err(TesaError::EmptyConceptVector(word.to_string()));
        }
        let v = self.concept_vector_of(other)?;
        if v.is_zero() {
            return Err(TesaError::EmptyConceptVector(other.to_string()));
        }
        Ok(cosine(&u, &v))
    }

    fn weighted_sum(&self, acc: &mut SparseAccumulator, weights: impl Iterator<Item = (TermId, f64)>) -> SparseVector {
        for (term, weight) in weights {
            if weight != 0.0 {
                acc.add_scaled(&self.concept_vector(term), weight);
            }
        }
        acc.take()
    }

    /// normalize(Σ_{w∈p} t_p(w)·w⃗).
    pub fn page_vector(&self, page: usize) -> Result<SparseVector> {
        let mut acc = SparseAccumulator::new(self.dim());
        self.page_vector_with(page, &mut acc)
    }

    pub(crate) fn page_vector_with(&self, page: usize, acc: &mut SparseAccumulator) -> Result<SparseVector> {
        let weights = self
            .stats
            .page_terms(page)
            .iter()
            .map(|&(t, _)| (t, self.stats.tfidf(page, t)));
        let sum = self.weighted_sum(acc, weights);
        if sum.is_zero() {
            return Err(TesaError::Degenerate(format!("page #{page}")));
        }
        Ok(sum.normalized())
    }

    /// normalize(Σ_{w∈F(c)} t_c(w)·w⃗).
    pub fn category_vector(&self, category: usize) -> Result<SparseVector> {
        let mut acc = SparseAccumulator::new(self.dim());
        self.category_vector_with(category, &mut acc)
    }

    pub(crate) fn category_vector_with(&self, category: usize, acc: &mut SparseAccumulator) -> Result<SparseVector> {
        let weights = category_term_weights(category, self.stats, self.descendants)?;
        let sum = self.weighted_sum(acc, weights.into_iter());
        if sum.is_zero() {
            return Err(TesaError::Degenerate(format!(
                "category '{}'",
                self.descendants.category_ids()[category]
            )));
        }
        Ok(sum.normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.to_vec())
    }

    #[test]
    fn construction_invariants() {
        let v = sv(&[(3, 1.0), (1, 2.0), (3, -1.0), (7, 0.0), (1, 1.0)]);
        assert_eq!(v.indices(), &[1]);
        assert_eq!(v.values(), &[3.0]);
        assert_eq!(v.norm(), 3.0);
    }

    #[test]
    fn cosine_examples() {
        let u = sv(&[(0, 1.0), (1, 1.0)]);
        let v = sv(&[(0, 1.0)]);
        assert!((cosine(&u, &v) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((cosine(&u, &u) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&v, &sv(&[(5, 2.0)])), 0.0);
        assert_eq!(cosine(&v, &SparseVector::zero()), 0.0);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.5, 9), "0.500000000");
        assert_eq!(format_significant(2.3475, 9), "2.34750000");
        assert_eq!(format_significant(123.456, 4), "123.5");
        assert_eq!(format_significant(9.9999999996, 9), "10.0000000");
        assert_eq!(format_significant(-0.00012345678912, 9), "-0.000123456789");
        assert_eq!(format_significant(0.0, 9), "0");
    }

    #[test]
    fn text_export() {
        let v = sv(&[(0, 0.5), (4, 0.25)]);
        assert_eq!(v.to_text(true), "1:0.500000000 5:0.250000000");
        assert_eq!(v.to_text(false), "0:0.500000000 4:0.250000000");
    }

    #[test]
    fn accumulator_resets() {
        let mut acc = SparseAccumulator::new(4);
        acc.add(2, 1.0);
        acc.add(0, 2.0);
        acc.add(2, 1.0);
        assert_eq!(acc.take(), sv(&[(0, 2.0), (2, 2.0)]));
        assert!(acc.take().is_zero());
    }

    fn arb_vector() -> impl Strategy<Value = SparseVector> {
        prop::collection::vec((0u32..20, 0.0f64..10.0), 0..12).prop_map(SparseVector::from_pairs)
    }

    proptest! {
        #[test]
        fn cosine_symmetric_scale_invariant(u in arb_vector(), v in arb_vector(), alpha in 0.01f64..100.0) {
            prop_assert_eq!(cosine(&u, &v), cosine(&v, &u));
            let c = cosine(&u, &v);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
            prop_assert!((cosine(&u.scaled(alpha), &v) - c).abs() < 1e-12);
        }

        #[test]
        fn norm_matches_recomputation(u in arb_vector()) {
            let dense = u.to_dense(20);
            let n = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((u.norm() - n).abs() <= 1e-12 * n.max(1.0));
            prop_assert!(u.indices().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(u.values().iter().all(|&x| x != 0.0));
        }
    }
}
