//! Term statistics, tfidf, descendant page sets and categorical tfidf.

use std::collections::{HashMap, VecDeque};

use crate::corpus::Corpus;
use crate::error::{Result, TesaError};
use crate::textproc::{TermId, TokenizedPages, Vocabulary};

/// `(1 + ln tf) · ln(n / df)`.
///
/// Both standard and categorical tfidf go through this one expression so that
/// a category wrapping a single page reproduces the page tfidf bit for bit.
pub fn tfidf_value(tf: u64, n: usize, df: u64) -> f64 {
    debug_assert!(tf >= 1 && df >= 1);
    (1.0 + (tf as f64).ln()) * (n as f64 / df as f64).ln()
}

/// Sparse `(page, term) → frequency` table with document frequencies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermStats {
    n_pages: usize,
    /// Per term: `(page dim, frequency)` sorted by page.
    postings: Vec<Vec<(u32, u32)>>,
    /// Per page: `(term, frequency)` sorted by term.
    page_terms: Vec<Vec<(TermId, u32)>>,
}

impl TermStats {
    pub fn build(pages: &TokenizedPages, vocab: &Vocabulary) -> TermStats {
        let mut postings: Vec<Vec<(u32, u32)>> = vec![Vec::new(); vocab.len()];
        let mut page_terms = Vec::with_capacity(pages.len());
        for (dim, tokens) in pages.tokens.iter().enumerate() {
            let mut ids: Vec<TermId> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
            ids.sort_unstable();
            let mut counts: Vec<(TermId, u32)> = Vec::new();
            for id in ids {
                match counts.last_mut() {
                    Some((last, n)) if *last == id => *n += 1,
                    _ => counts.push((id, 1)),
                }
            }
            for &(id, f) in &counts {
                postings[id.index()].push((dim as u32, f));
            }
            page_terms.push(counts);
        }
        TermStats {
            n_pages: pages.len(),
            postings,
            page_terms,
        }
    }

    /// Rebuild from persisted postings (per term, sorted by page).
    pub fn from_postings(n_pages: usize, postings: Vec<Vec<(u32, u32)>>) -> Result<TermStats> {
        let mut page_terms: Vec<Vec<(TermId, u32)>> = vec![Vec::new(); n_pages];
        for (term, list) in postings.iter().enumerate() {
            let mut prev = None;
            for &(page, f) in list {
                if page as usize >= n_pages || f == 0 || prev.is_some_and(|p| p >= page) {
                    return Err(TesaError::CorruptIndex(format!(
                        "bad posting for term {term}: page {page}, frequency {f}"
                    )));
                }
                prev = Some(page);
                page_terms[page as usize].push((TermId(term as u32), f));
            }
        }
        Ok(TermStats {
            n_pages,
            postings,
            page_terms,
        })
    }

    /// `#𝒲`, the number of pages.
    pub fn n_pages(&self) -> usize {
        self.n_pages
    }

    pub fn n_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn df(&self, term: TermId) -> usize {
        self.postings[term.index()].len()
    }

    pub fn postings(&self, term: TermId) -> &[(u32, u32)] {
        &self.postings[term.index()]
    }

    pub fn all_postings(&self) -> &[Vec<(u32, u32)>] {
        &self.postings
    }

    pub fn page_terms(&self, page: usize) -> &[(TermId, u32)] {
        &self.page_terms[page]
    }

    /// `f_p(w)`, zero when the term is absent.
    pub fn frequency(&self, page: usize, term: TermId) -> u32 {
        let terms = &self.page_terms[page];
        terms
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| terms[i].1)
            .unwrap_or(0)
    }

    /// Standard page tfidf `t_p(w)`; zero when `w ∉ p`.
    pub fn tfidf(&self, page: usize, term: TermId) -> f64 {
        match self.frequency(page, term) {
            0 => 0.0,
            f => tfidf_value(f as u64, self.n_pages, self.df(term) as u64),
        }
    }
}

pub fn compute_term_stats(pages: &TokenizedPages, vocab: &Vocabulary) -> TermStats {
    TermStats::build(pages, vocab)
}

/// Category hierarchy over dense indices: pages `0..n_pages`, categories
/// `0..category_ids.len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryGraph {
    pub category_ids: Vec<String>,
    /// Subcategory edges `c → parent`.
    pub parents: Vec<Vec<usize>>,
    pub page_categories: Vec<Vec<usize>>,
}

impl CategoryGraph {
    pub fn from_corpus(corpus: &Corpus) -> CategoryGraph {
        let category_ids: Vec<String> = corpus.categories.keys().cloned().collect();
        let lookup: HashMap<&str, usize> = category_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let parents = corpus
            .categories
            .values()
            .map(|c| c.parents.iter().map(|p| lookup[p.as_str()]).collect())
            .collect();
        let page_categories = corpus
            .pages
            .values()
            .map(|p| p.categories.iter().map(|c| lookup[c.as_str()]).collect())
            .collect();
        CategoryGraph {
            category_ids,
            parents,
            page_categories,
        }
    }
}

/// `F(c)` for every category, plus the inverse relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescendantIndex {
    category_ids: Vec<String>,
    lookup: HashMap<String, usize>,
    descendants: Vec<Vec<u32>>,
    /// Per page, the categories whose descendant set contains it.
    page_ancestors: Vec<Vec<u32>>,
}

impl DescendantIndex {
    /// Upward closure from every page. Terminates on cyclic input as well,
    /// though the index is meant to be built on the cycle-broken graph.
    pub fn build(graph: &CategoryGraph) -> DescendantIndex {
        let n_cats = graph.category_ids.len();
        let mut descendants: Vec<Vec<u32>> = vec![Vec::new(); n_cats];
        let mut page_ancestors = Vec::with_capacity(graph.page_categories.len());
        let mut mark = vec![usize::MAX; n_cats];
        let mut queue = VecDeque::new();
        for (page, cats) in graph.page_categories.iter().enumerate() {
            let mut reached = Vec::new();
            for &c in cats {
                if mark[c] != page {
                    mark[c] = page;
                    queue.push_back(c);
                }
            }
            while let Some(c) = queue.pop_front() {
                reached.push(c as u32);
                for &parent in &graph.parents[c] {
                    if mark[parent] != page {
                        mark[parent] = page;
                        queue.push_back(parent);
                    }
                }
            }
            reached.sort_unstable();
            for &c in &reached {
                descendants[c as usize].push(page as u32);
            }
            page_ancestors.push(reached);
        }
        let lookup = graph
            .category_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        DescendantIndex {
            category_ids: graph.category_ids.clone(),
            lookup,
            descendants,
            page_ancestors,
        }
    }

    pub fn category_index(&self, id: &str) -> Result<usize> {
        self.lookup
            .get(id)
            .copied()
            .ok_or_else(|| TesaError::unknown("category", id))
    }

    pub fn category_ids(&self) -> &[String] {
        &self.category_ids
    }

    pub fn n_categories(&self) -> usize {
        self.category_ids.len()
    }

    /// `F(c)` as sorted page indices.
    pub fn pages_of(&self, category: usize) -> &[u32] {
        &self.descendants[category]
    }

    /// `F(c)` looked up by category id.
    pub fn descendant_pages(&self, id: &str) -> Result<&[u32]> {
        Ok(self.pages_of(self.category_index(id)?))
    }

    pub fn ancestors_of_page(&self, page: usize) -> &[u32] {
        &self.page_ancestors[page]
    }
}

/// Categorical tfidf `t_c(w)`.
///
/// Returns 0 when `w` occurs in no page of `F(c)`; errors when `F(c)` is empty.
pub fn categorical_tfidf(category: usize, term: TermId, stats: &TermStats, desc: &DescendantIndex) -> Result<f64> {
    let family = desc.pages_of(category);
    if family.is_empty() {
        return Err(TesaError::EmptyCategory(desc.category_ids[category].clone()));
    }
    let (mut sum, mut inside) = (0u64, 0u64);
    let postings = stats.postings(term);
    let (mut i, mut j) = (0, 0);
    while i < postings.len() && j < family.len() {
        match postings[i].0.cmp(&family[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += postings[i].1 as u64;
                inside += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(categorical_from_counts(
        sum,
        inside,
        stats.df(term) as u64,
        stats.n_pages(),
    ))
}

fn categorical_from_counts(sum: u64, inside: u64, df: u64, n_pages: usize) -> f64 {
    if sum == 0 {
        0.0
    } else {
        tfidf_value(sum, n_pages, 1 + (df - inside))
    }
}

/// `t_c(w)` for every category `c` whose descendant set contains `w`, sorted
/// by category. Categories absent from the result have `t_c(w) = 0`.
pub fn categorical_profile(term: TermId, stats: &TermStats, desc: &DescendantIndex) -> Vec<(u32, f64)> {
    let mut hits: Vec<(u32, u32)> = Vec::new();
    for &(page, f) in stats.postings(term) {
        hits.extend(desc.ancestors_of_page(page as usize).iter().map(|&c| (c, f)));
    }
    hits.sort_unstable_by_key(|&(c, _)| c);
    let df = stats.df(term) as u64;
    let mut out = Vec::new();
    let mut k = 0;
    while k < hits.len() {
        let cat = hits[k].0;
        let (mut sum, mut inside) = (0u64, 0u64);
        while k < hits.len() && hits[k].0 == cat {
            sum += hits[k].1 as u64;
            inside += 1;
            k += 1;
        }
        out.push((cat, categorical_from_counts(sum, inside, df, stats.n_pages())));
    }
    out
}

/// `t_c(w)` for every word occurring in some page of `F(c)`, sorted by term.
pub fn category_term_weights(category: usize, stats: &TermStats, desc: &DescendantIndex) -> Result<Vec<(TermId, f64)>> {
    let family = desc.pages_of(category);
    if family.is_empty() {
        return Err(TesaError::EmptyCategory(desc.category_ids[category].clone()));
    }
    let mut hits: Vec<(TermId, u32)> = family
        .iter()
        .flat_map(|&p| stats.page_terms(p as usize).iter().copied())
        .collect();
    hits.sort_unstable_by_key(|&(t, _)| t);
    let mut out = Vec::new();
    let mut k = 0;
    while k < hits.len() {
        let term = hits[k].0;
        let (mut sum, mut inside) = (0u64, 0u64);
        while k < hits.len() && hits[k].0 == term {
            sum += hits[k].1 as u64;
            inside += 1;
            k += 1;
        }
        out.push((
            term,
            categorical_from_counts(sum, inside, stats.df(term) as u64, stats.n_pages()),
        ));
    }
    Ok(out)
}
