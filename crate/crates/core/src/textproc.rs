//! Text normalization and vocabulary construction.
//!
//! The pipeline is fully determined by [`PipelineConfig`]: tokenization splits
//! on every non-alphanumeric character, tokens are lowercased, optionally
//! lemmatized, checked against the stopword list, stemmed, and finally dropped
//! when shorter than `min_token_len`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Result, TesaError};

/// Upper bound on repeated rule application; rule sets that never settle are cut here.
const MAX_REWRITE_PASSES: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixRule {
    pub suffix: String,
    pub replacement: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stemmer {
    /// Lowercasing only.
    #[default]
    Identity,
    /// Ordered suffix rewriting; the first matching rule wins on each pass and
    /// passes repeat until the token stops changing.
    SuffixRules { rules: Vec<SuffixRule> },
}

impl Stemmer {
    pub fn name(&self) -> &'static str {
        match self {
            Stemmer::Identity => "identity",
            Stemmer::SuffixRules { .. } => "suffix_rules",
        }
    }

    pub fn apply(&self, token: &str) -> String {
        match self {
            Stemmer::Identity => token.to_string(),
            Stemmer::SuffixRules { rules } => {
                let mut current = token.to_string();
                for _ in 0..MAX_REWRITE_PASSES {
                    let next = rules.iter().find_map(|rule| {
                        // never strip a token down to nothing
                        if current.len() > rule.suffix.len() && current.ends_with(&rule.suffix) {
                            let stem = &current[..current.len() - rule.suffix.len()];
                            Some(format!("{stem}{}", rule.replacement))
                        } else {
                            None
                        }
                    });
                    match next {
                        Some(n) if n != current => current = n,
                        _ => break,
                    }
                }
                current
            }
        }
    }
}

/// Lemmatization hook, applied before stemming.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lemmatizer {
    /// Form-to-lemma lookup table; unknown forms pass through.
    Lexicon { entries: BTreeMap<String, String> },
}

impl Lemmatizer {
    pub fn name(&self) -> &'static str {
        match self {
            Lemmatizer::Lexicon { .. } => "lexicon",
        }
    }

    pub fn apply(&self, token: &str) -> String {
        match self {
            Lemmatizer::Lexicon { entries } => {
                let mut current = token.to_string();
                for _ in 0..MAX_REWRITE_PASSES {
                    match entries.get(&current) {
                        Some(lemma) if *lemma != current => current = lemma.clone(),
                        _ => break,
                    }
                }
                current
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    pub min_token_len: usize,
    pub lemmatizer: Option<Lemmatizer>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stopwords: BTreeSet::new(),
            stemmer: Stemmer::Identity,
            min_token_len: 1,
            lemmatizer: None,
        }
    }
}

impl PipelineConfig {
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        self
    }

    pub fn with_suffix_rules(mut self, rules: Vec<SuffixRule>) -> Self {
        self.stemmer = Stemmer::SuffixRules { rules };
        self
    }

    fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    fn normalize_token(&self, raw: &str) -> Option<String> {
        let mut token = raw.to_lowercase();
        if let Some(lemmatizer) = &self.lemmatizer {
            token = lemmatizer.apply(&token);
        }
        if self.is_stopword(&token) {
            return None;
        }
        let stemmed = self.stemmer.apply(&token);
        if self.is_stopword(&stemmed) || stemmed.chars().count() < self.min_token_len {
            return None;
        }
        Some(stemmed)
    }
}

/// Tokenize and normalize `text`. Order and duplicates are preserved.
pub fn normalize_text(text: &str, cfg: &PipelineConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|piece| !piece.is_empty())
        .filter_map(|piece| cfg.normalize_token(piece))
        .collect()
}

/// Normalized token lists for every page, in page-id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedPages {
    pub ids: Vec<String>,
    pub tokens: Vec<Vec<String>>,
}

impl TokenizedPages {
    pub fn from_corpus(corpus: &Corpus, cfg: &PipelineConfig) -> Self {
        let pages: Vec<_> = corpus.pages.values().collect();
        let tokens = pages.par_iter().map(|page| normalize_text(&page.text, cfg)).collect();
        TokenizedPages {
            ids: pages.iter().map(|p| p.id.clone()).collect(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijection between normalized terms and dense ids, assigned in
/// lexicographic term order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    frequencies: Vec<u64>,
    lookup: HashMap<String, TermId>,
}

impl Vocabulary {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Self {
        let mut terms = Vec::with_capacity(counts.len());
        let mut frequencies = Vec::with_capacity(counts.len());
        let mut lookup = HashMap::with_capacity(counts.len());
        for (i, (term, freq)) in counts.into_iter().enumerate() {
            lookup.insert(term.clone(), TermId(i as u32));
            terms.push(term);
            frequencies.push(freq);
        }
        Vocabulary {
            terms,
            frequencies,
            lookup,
        }
    }

    pub fn build(pages: &TokenizedPages) -> Self {
        // sorted reduction keeps ids independent of map iteration order
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for tokens in &pages.tokens {
            for token in tokens {
                *counts.entry(token.clone()).or_insert(0) += 1;
            }
        }
        Vocabulary::from_counts(counts)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.index()]
    }

    /// Corpus-wide occurrence count of a term.
    pub fn frequency(&self, id: TermId) -> u64 {
        self.frequencies[id.index()]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Convenience wrapper: normalize every page of `corpus` and build the vocabulary.
pub fn build_vocabulary(corpus: &Corpus, cfg: &PipelineConfig) -> Vocabulary {
    Vocabulary::build(&TokenizedPages::from_corpus(corpus, cfg))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content = fs::read_to_string(path).map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
    Ok(content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// One stopword per line; blank lines and `#` comments are skipped.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    Ok(read_lines(path)?.into_iter().map(|w| w.to_lowercase()).collect())
}

/// Parse one `suffix→replacement` rule. `->` is accepted as an ASCII spelling
/// of the arrow and an empty replacement deletes the suffix.
pub fn parse_suffix_rule(line: &str) -> Option<SuffixRule> {
    let (suffix, replacement) = line.split_once('→').or_else(|| line.split_once("->"))?;
    let suffix = suffix.trim().trim_start_matches('-');
    if suffix.is_empty() {
        return None;
    }
    Some(SuffixRule {
        suffix: suffix.to_lowercase(),
        replacement: replacement.trim().to_lowercase(),
    })
}

pub fn load_suffix_rules(path: &Path) -> Result<Vec<SuffixRule>> {
    let content = fs::read_to_string(path).map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
    let mut rules = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rule = parse_suffix_rule(trimmed).ok_or_else(|| TesaError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected `suffix→replacement`, got {trimmed:?}"),
        })?;
        rules.push(rule);
    }
    Ok(rules)
}

/// Tab-separated `form<TAB>lemma` lines.
pub fn load_lexicon(path: &Path) -> Result<Lemmatizer> {
    let mut entries = BTreeMap::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        let (form, lemma) = line.split_once('\t').ok_or_else(|| TesaError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected `form<TAB>lemma`".into(),
        })?;
        entries.insert(form.trim().to_lowercase(), lemma.trim().to_lowercase());
    }
    Ok(Lemmatizer::Lexicon { entries })
}
