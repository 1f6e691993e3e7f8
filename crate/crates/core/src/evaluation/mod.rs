//! Document vectors over an evaluation corpus, nearest-centroid
//! cross-validation, sparse-feature export and degree diagnostics.

mod degree;
mod export;

use std::collections::{BTreeMap, HashMap};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EvalCorpus;
use crate::error::{Result, TesaError};
use crate::reinforcement::{LambdaSchedule, ReinforcedSpace};
use crate::textproc::{normalize_text, PipelineConfig, TermId};
use crate::vectors::{cosine, SparseAccumulator, SparseVector};
use crate::weighting::tfidf_value;

pub use degree::{degree_distribution, fit_power_law, DegreeDistribution};
pub use export::{export_sparse_features, read_sparse_features, write_sparse_features};

/// Term frequencies of the evaluation documents with document frequencies
/// taken over the evaluation corpus itself.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalStats {
    n_docs: usize,
    /// Per document: `(term, frequency)` sorted by term.
    doc_terms: Vec<Vec<(String, u32)>>,
    df: BTreeMap<String, u64>,
}

impl EvalStats {
    pub fn build(corpus: &EvalCorpus, cfg: &PipelineConfig) -> EvalStats {
        let doc_terms: Vec<Vec<(String, u32)>> = corpus
            .documents
            .par_iter()
            .map(|doc| {
                let mut counts: BTreeMap<String, u32> = BTreeMap::new();
                for token in normalize_text(&doc.text, cfg) {
                    *counts.entry(token).or_default() += 1;
                }
                counts.into_iter().collect()
            })
            .collect();
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        for terms in &doc_terms {
            for (t, _) in terms {
                *df.entry(t.clone()).or_default() += 1;
            }
        }
        EvalStats {
            n_docs: doc_terms.len(),
            doc_terms,
            df,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, word: &str) -> u64 {
        self.df.get(word).copied().unwrap_or(0)
    }

    pub fn doc_terms(&self, doc: usize) -> &[(String, u32)] {
        &self.doc_terms[doc]
    }

    pub fn frequency(&self, doc: usize, word: &str) -> u32 {
        let terms = &self.doc_terms[doc];
        terms
            .binary_search_by(|(t, _)| t.as_str().cmp(word))
            .map_or(0, |i| terms[i].1)
    }

    /// `t_d(w) = (1 + ln f_d(w)) · ln(#docs / df(w))`; 0 when `w ∉ d`.
    pub fn eval_tfidf(&self, doc: usize, word: &str) -> f64 {
        match self.frequency(doc, word) {
            0 => 0.0,
            f => tfidf_value(f as u64, self.n_docs, self.df(word)),
        }
    }
}

/// Reinforced concept vectors of every evaluation term that the page-space
/// vocabulary knows, computed once per schedule.
#[derive(Debug)]
pub struct ConceptCache {
    vectors: HashMap<String, SparseVector>,
}

impl ConceptCache {
    pub fn build(rs: &ReinforcedSpace<'_>, stats: &EvalStats, lambda: &LambdaSchedule) -> ConceptCache {
        let known: Vec<(&String, TermId)> = stats
            .df
            .keys()
            .filter_map(|w| rs.space().vocab.id(w).map(|t| (w, t)))
            .collect();
        let vectors = known
            .par_iter()
            .map(|&(w, t)| (w.clone(), rs.concept_vector(t, lambda)))
            .collect();
        ConceptCache { vectors }
    }

    pub fn get(&self, word: &str) -> Option<&SparseVector> {
        self.vectors.get(word)
    }
}

/// `normalize(Σ_{w∈d} t_d(w) · w⃗_λ)`, summed in term order. Words outside
/// the page-space vocabulary contribute nothing; the result may be zero.
pub fn document_vector(
    doc: usize,
    stats: &EvalStats,
    cache: &ConceptCache,
    acc: &mut SparseAccumulator,
) -> SparseVector {
    for (word, _) in stats.doc_terms(doc) {
        if let Some(v) = cache.get(word) {
            let weight = stats.eval_tfidf(doc, word);
            if weight != 0.0 {
                acc.add_scaled(v, weight);
            }
        }
    }
    acc.take().normalized()
}

/// Document vectors for the whole evaluation corpus under `lambda`.
pub fn document_vectors(rs: &ReinforcedSpace<'_>, stats: &EvalStats, lambda: &LambdaSchedule) -> Vec<SparseVector> {
    let cache = ConceptCache::build(rs, stats, lambda);
    let dim = rs.space().dim();
    let vectors: Vec<SparseVector> = (0..stats.n_docs())
        .into_par_iter()
        .map_init(
            || SparseAccumulator::new(dim),
            |acc, d| document_vector(d, stats, &cache, acc),
        )
        .collect();
    let zero = vectors.iter().filter(|v| v.is_zero()).count();
    if zero > 0 {
        warn!("{zero} document(s) share no word with the page space; their vectors are zero");
    }
    vectors
}

/// One unit-norm (or zero) centroid per class.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestCentroid {
    pub classes: Vec<String>,
    pub centroids: Vec<SparseVector>,
}

impl NearestCentroid {
    /// `labels[i]` indexes `classes`. Members are summed in input order.
    pub fn train(classes: &[String], vectors: &[&SparseVector], labels: &[usize]) -> NearestCentroid {
        let dim = vectors
            .iter()
            .filter_map(|v| v.indices().last())
            .map(|&i| i as usize + 1)
            .max()
            .unwrap_or(0);
        let mut acc = SparseAccumulator::new(dim);
        let centroids = (0..classes.len())
            .map(|c| {
                for (v, &l) in vectors.iter().zip(labels) {
                    if l == c {
                        acc.add_scaled(v, 1.0);
                    }
                }
                acc.take().normalized()
            })
            .collect();
        NearestCentroid {
            classes: classes.to_vec(),
            centroids,
        }
    }

    /// Highest cosine; ties (including the zero vector) go to the first class.
    pub fn predict(&self, v: &SparseVector) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, centroid) in self.centroids.iter().enumerate() {
            let score = cosine(v, centroid);
            if score > best_score {
                best = c;
                best_score = score;
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub precision: f64,
    pub per_fold: Vec<f64>,
    pub lambda: LambdaSchedule,
    pub folds: usize,
    pub seed: u64,
}

/// Stratified fold index per document: each class is shuffled with one
/// seeded generator (classes in order) and dealt round-robin, continuing the
/// rotation from where the previous class stopped.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(TesaError::Config(format!("need at least 2 folds, got {folds}")));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    if let Some((c, m)) = members.iter().enumerate().find(|(_, m)| m.len() < folds) {
        return Err(TesaError::Invalid(format!(
            "class #{c} has {} document(s), fewer than {folds} folds",
            m.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for group in &mut members {
        group.shuffle(&mut rng);
        for &doc in group.iter() {
            assignment[doc] = offset % folds;
            offset += 1;
        }
    }
    Ok(assignment)
}

/// Nearest-centroid cross-validation; precision is the mean of the per-fold
/// accuracies.
pub fn cross_validate_vectors(
    vectors: &[SparseVector],
    labels: &[usize],
    classes: &[String],
    folds: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let assignment = stratified_folds(labels, classes.len(), folds, seed)?;
    let per_fold: Vec<f64> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let (mut train_v, mut train_l) = (Vec::new(), Vec::new());
            for (i, v) in vectors.iter().enumerate() {
                if assignment[i] != fold {
                    train_v.push(v);
                    train_l.push(labels[i]);
                }
            }
            let model = NearestCentroid::train(classes, &train_v, &train_l);
            let (mut hit, mut total) = (0usize, 0usize);
            for (i, v) in vectors.iter().enumerate() {
                if assignment[i] == fold {
                    total += 1;
                    hit += usize::from(model.predict(v) == labels[i]);
                }
            }
            hit as f64 / total as f64
        })
        .collect();
    let precision = per_fold.iter().sum::<f64>() / folds as f64;
    Ok((precision, per_fold))
}

/// Class index of every document, in `corpus.classes` order.
pub fn class_labels(corpus: &EvalCorpus) -> Vec<usize> {
    let index: HashMap<&str, usize> = corpus
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    corpus.documents.iter().map(|d| index[d.label.as_str()]).collect()
}

/// Document vectors under `lambda`, then cross-validation.
pub fn cross_validate(
    rs: &ReinforcedSpace<'_>,
    corpus: &EvalCorpus,
    stats: &EvalStats,
    lambda: &LambdaSchedule,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    let labels = class_labels(corpus);
    // validate before the expensive part
    stratified_folds(&labels, corpus.classes.len(), folds, seed)?;
    let vectors = document_vectors(rs, stats, lambda);
    let (precision, per_fold) = cross_validate_vectors(&vectors, &labels, &corpus.classes, folds, seed)?;
    Ok(CvReport {
        precision,
        per_fold,
        lambda: lambda.clone(),
        folds,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn docs(corpus_texts: &[(&str, &str)]) -> EvalCorpus {
        EvalCorpus::from_documents(
            corpus_texts
                .iter()
                .enumerate()
                .map(|(i, (label, text))| crate::corpus::LabeledDocument {
                    doc_id: format!("d{i}"),
                    label: label.to_string(),
                    text: text.to_string(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn eval_tfidf_formula() {
        let c = docs(&[("a", "x x y"), ("a", "y"), ("b", "y z"), ("b", "y")]);
        let s = EvalStats::build(&c, &PipelineConfig::default());
        assert_eq!(s.eval_tfidf(0, "y"), 0.0);
        let expected = (1.0 + 2f64.ln()) * 4f64.ln();
        assert!((s.eval_tfidf(0, "x") - expected).abs() < 1e-12);
        assert!((s.eval_tfidf(0, "x") - 2.347_200_389).abs() < 1e-8);
        assert_eq!(s.eval_tfidf(1, "x"), 0.0);
    }

    #[test]
    fn separable_classes_are_perfect() {
        let classes = vec!["a".to_string(), "b".to_string()];
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10u32 {
            vectors.push(SparseVector::from_pairs(vec![(i % 3, 1.0)]).normalized());
            labels.push(0);
            vectors.push(SparseVector::from_pairs(vec![(10 + i % 4, 1.0), (20, 0.5)]).normalized());
            labels.push(1);
        }
        let (precision, per_fold) = cross_validate_vectors(&vectors, &labels, &classes, 5, 3).unwrap();
        assert_eq!(precision, 1.0);
        assert_eq!(per_fold.len(), 5);
    }

    #[test]
    fn fold_errors() {
        let classes = vec!["a".to_string()];
        let v = vec![SparseVector::zero(); 3];
        assert!(cross_validate_vectors(&v, &[0, 0, 0], &classes, 1, 0).is_err());
        assert!(cross_validate_vectors(&v, &[0, 0, 0], &classes, 4, 0).is_err());
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<usize> = (0..23).map(|i| i % 3).collect();
        let a = stratified_folds(&labels, 3, 4, 11).unwrap();
        for c in 0..3 {
            let mut sizes = [0usize; 4];
            for (i, &l) in labels.iter().enumerate() {
                if l == c {
                    sizes[a[i]] += 1;
                }
            }
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert_eq!(a, stratified_folds(&labels, 3, 4, 11).unwrap());
    }

    #[test]
    fn zero_vector_goes_to_first_class() {
        let model = NearestCentroid {
            classes: vec!["a".into(), "b".into()],
            centroids: vec![
                SparseVector::from_pairs(vec![(0, 1.0)]),
                SparseVector::from_pairs(vec![(1, 1.0)]),
            ],
        };
        assert_eq!(model.predict(&SparseVector::zero()), 0);
        assert_eq!(model.predict(&SparseVector::from_pairs(vec![(0, 1.0), (1, 1.0)])), 0);
        assert_eq!(model.predict(&SparseVector::from_pairs(vec![(1, 2.0)])), 1);
    }

    #[test]
    fn eval_fix_vectors_are_unit() {
        let (built, eval) = fixtures::eval_fix_built();
        let rs = built.reinforced().unwrap();
        let stats = EvalStats::build(&eval, &built.pipeline);
        for lambda in [
            LambdaSchedule::zero(),
            LambdaSchedule::parse("1.5,0,0.5,0.25,0.125").unwrap(),
        ] {
            for v in document_vectors(&rs, &stats, &lambda) {
                assert!((v.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_word_document_is_normalized_concept_vector() {
        let built = fixtures::fix1_built();
        let rs = built.reinforced().unwrap();
        let c = docs(&[("a", "gamma"), ("b", "delta")]);
        let stats = EvalStats::build(&c, &built.pipeline);
        let lambda = LambdaSchedule::parse("0.5").unwrap();
        let vectors = document_vectors(&rs, &stats, &lambda);
        let expected = rs.concept_vector_of("gamma", &lambda).unwrap().normalized();
        for (x, y) in vectors[0].to_dense(4).iter().zip(expected.to_dense(4)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cv_is_deterministic_and_bounded() {
        let (built, eval) = fixtures::eval_fix_built();
        let rs = built.reinforced().unwrap();
        let stats = EvalStats::build(&eval, &built.pipeline);
        let lambda = LambdaSchedule::parse("0.5,0.25").unwrap();
        let a = cross_validate(&rs, &eval, &stats, &lambda, 5, 7).unwrap();
        let b = cross_validate(&rs, &eval, &stats, &lambda, 5, 7).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.precision));
        assert_eq!(a.per_fold.len(), 5);
    }
}
