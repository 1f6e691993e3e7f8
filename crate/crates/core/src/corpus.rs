//! Page/category corpus and labeled evaluation documents, loaded from JSONL.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, TesaError};
use crate::textproc::{normalize_text, PipelineConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRecord {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub links_out: Vec<String>,
    #[serde(default)]
    pub categories: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRecord {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub parents: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub doc_id: String,
    pub label: String,
    #[serde(default)]
    pub text: String,
}

/// A fully resolved corpus: every category reference points at a known
/// category and `root_id` exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub pages: BTreeMap<String, PageRecord>,
    pub categories: BTreeMap<String, CategoryRecord>,
    pub root_id: String,
    /// Dropped references and self-parenting edges seen while resolving.
    pub warnings: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterThresholds {
    pub min_words: usize,
    pub min_links_in: usize,
    pub min_links_out: usize,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds {
            min_words: 125,
            min_links_in: 15,
            min_links_out: 15,
        }
    }
}

impl FilterThresholds {
    pub fn none() -> Self {
        FilterThresholds {
            min_words: 0,
            min_links_in: 0,
            min_links_out: 0,
        }
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| TesaError::io(format!("opening {}", path.display()), e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| TesaError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl Iterator<Item = T>) -> Result<()> {
    let io_err = |e| TesaError::io(format!("writing {}", path.display()), e);
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for record in records {
        let line = serde_json::to_string(&record).expect("records serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn dedup_in_order(items: &mut Vec<String>) {
    let mut seen = HashSet::new();
    items.retain(|x| seen.insert(x.clone()));
}

impl Corpus {
    /// Resolve raw records into a corpus. Unknown category references are
    /// dropped and counted in `warnings`; duplicate ids are fatal.
    pub fn from_records(pages: Vec<PageRecord>, categories: Vec<CategoryRecord>, root_id: &str) -> Result<Corpus> {
        let mut cat_map = BTreeMap::new();
        for cat in categories {
            if cat.id.is_empty() {
                return Err(TesaError::Invalid("category with empty id".into()));
            }
            if cat_map.contains_key(&cat.id) {
                return Err(TesaError::Invalid(format!("duplicate category id '{}'", cat.id)));
            }
            cat_map.insert(cat.id.clone(), cat);
        }
        if !cat_map.contains_key(root_id) {
            return Err(TesaError::Config(format!("root category '{root_id}' not found")));
        }

        let mut warnings = 0;
        let known: HashSet<String> = cat_map.keys().cloned().collect();
        for cat in cat_map.values_mut() {
            let before = cat.parents.len();
            let id = cat.id.clone();
            cat.parents.retain(|p| *p != id && known.contains(p));
            if cat.id == root_id && !cat.parents.is_empty() {
                warn!("root '{root_id}' lists parents; ignoring them");
                cat.parents.clear();
            }
            dedup_in_order(&mut cat.parents);
            let dropped = before - cat.parents.len();
            if dropped > 0 {
                warnings += dropped;
            }
        }

        let mut page_map = BTreeMap::new();
        for mut page in pages {
            if page.id.is_empty() {
                return Err(TesaError::Invalid("page with empty id".into()));
            }
            if known.contains(&page.id) {
                return Err(TesaError::Invalid(format!(
                    "id '{}' is used by both a page and a category",
                    page.id
                )));
            }
            if page_map.contains_key(&page.id) {
                return Err(TesaError::Invalid(format!("duplicate page id '{}'", page.id)));
            }
            let before = page.categories.len();
            page.categories.retain(|c| known.contains(c));
            warnings += before - page.categories.len();
            dedup_in_order(&mut page.categories);
            page_map.insert(page.id.clone(), page);
        }
        if warnings > 0 {
            warn!("dropped {warnings} dangling or self-referencing category reference(s)");
        }

        Ok(Corpus {
            pages: page_map,
            categories: cat_map,
            root_id: root_id.to_string(),
            warnings,
        })
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    /// Write the corpus back out in the JSONL layout `load_corpus` accepts.
    pub fn write_jsonl(&self, pages_path: &Path, categories_path: &Path) -> Result<()> {
        write_jsonl(pages_path, self.pages.values())?;
        write_jsonl(categories_path, self.categories.values())
    }

    /// Content hash over the canonical (sorted) serialization.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.root_id.as_bytes());
        hasher.update(b"\n");
        for page in self.pages.values() {
            hasher.update(serde_json::to_vec(page).expect("serializable"));
            hasher.update(b"\n");
        }
        for cat in self.categories.values() {
            hasher.update(serde_json::to_vec(cat).expect("serializable"));
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// Set of categories whose descendant set contains at least one page,
    /// following subcategory edges upward from each page.
    fn categories_with_pages(&self) -> BTreeSet<String> {
        let mut alive = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        for page in self.pages.values() {
            for c in &page.categories {
                if alive.insert(c.clone()) {
                    queue.push_back(c);
                }
            }
        }
        while let Some(c) = queue.pop_front() {
            for parent in &self.categories[c].parents {
                if alive.insert(parent.clone()) {
                    queue.push_back(parent);
                }
            }
        }
        alive
    }
}

pub fn load_corpus(pages_path: &Path, categories_path: &Path, root_id: &str) -> Result<Corpus> {
    let pages = read_jsonl::<PageRecord>(pages_path)?;
    let categories = read_jsonl::<CategoryRecord>(categories_path)?;
    Corpus::from_records(pages, categories, root_id)
}

/// Drop pages below the word/link thresholds, iterating until no page changes
/// status, then prune categories left without descendant pages.
///
/// Link counts only consider pages that are still retained; repeated links
/// and self links count once / not at all.
pub fn filter_corpus(corpus: &Corpus, thresholds: &FilterThresholds, cfg: &PipelineConfig) -> Result<Corpus> {
    let ids: Vec<&String> = corpus.pages.keys().collect();
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let out_links: Vec<Vec<usize>> = corpus
        .pages
        .values()
        .enumerate()
        .map(|(i, page)| {
            let mut targets: Vec<usize> = page
                .links_out
                .iter()
                .filter_map(|l| index.get(l.as_str()).copied())
                .filter(|&t| t != i)
                .collect();
            targets.sort_unstable();
            targets.dedup();
            targets
        })
        .collect();
    let mut in_links: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (source, targets) in out_links.iter().enumerate() {
        for &t in targets {
            in_links[t].push(source);
        }
    }

    let mut alive: Vec<bool> = corpus
        .pages
        .values()
        .map(|page| {
            let distinct: HashSet<String> = normalize_text(&page.text, cfg).into_iter().collect();
            distinct.len() >= thresholds.min_words
        })
        .collect();

    loop {
        let mut changed = false;
        for i in 0..ids.len() {
            if !alive[i] {
                continue;
            }
            let n_out = out_links[i].iter().filter(|&&t| alive[t]).count();
            let n_in = in_links[i].iter().filter(|&&s| alive[s]).count();
            if n_out < thresholds.min_links_out || n_in < thresholds.min_links_in {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let pages: BTreeMap<String, PageRecord> = corpus
        .pages
        .iter()
        .zip(&alive)
        .filter(|(_, &keep)| keep)
        .map(|((id, page), _)| (id.clone(), page.clone()))
        .collect();
    if pages.is_empty() {
        return Err(TesaError::EmptyCorpus);
    }

    let mut filtered = Corpus {
        pages,
        categories: BTreeMap::new(),
        root_id: corpus.root_id.clone(),
        warnings: corpus.warnings,
    };
    filtered.categories = corpus.categories.clone();
    let keep = filtered.categories_with_pages();
    filtered.categories.retain(|id, _| keep.contains(id));
    for cat in filtered.categories.values_mut() {
        cat.parents.retain(|p| keep.contains(p));
    }
    if !filtered.categories.contains_key(&filtered.root_id) {
        return Err(TesaError::Config(format!(
            "root category '{}' has no descendant pages after filtering",
            filtered.root_id
        )));
    }
    Ok(filtered)
}

/// Labeled documents in file order plus the sorted class set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalCorpus {
    pub documents: Vec<LabeledDocument>,
    pub classes: Vec<String>,
}

impl EvalCorpus {
    pub fn from_documents(documents: Vec<LabeledDocument>) -> Result<EvalCorpus> {
        if documents.is_empty() {
            return Err(TesaError::Invalid("evaluation corpus is empty".into()));
        }
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(TesaError::Invalid(format!("duplicate doc_id '{}'", doc.doc_id)));
            }
        }
        let classes: BTreeSet<String> = documents.iter().map(|d| d.label.clone()).collect();
        Ok(EvalCorpus {
            documents,
            classes: classes.into_iter().collect(),
        })
    }

    /// Document indices grouped per class, in class order.
    pub fn by_class(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, doc) in self.documents.iter().enumerate() {
            groups.entry(doc.label.as_str()).or_default().push(i);
        }
        groups
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_jsonl(path, self.documents.iter())
    }
}

pub fn load_eval_corpus(path: &Path) -> Result<EvalCorpus> {
    EvalCorpus::from_documents(read_jsonl(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_small_files() {
        let dir = tempfile::tempdir().unwrap();
        let pages = write(
            dir.path(),
            "pages.jsonl",
            "{\"id\":\"p1\",\"title\":\"P1\",\"text\":\"a b\",\"links_out\":[\"p2\"],\"categories\":[\"root\"]}\n\
             {\"id\":\"p2\",\"title\":\"P2\",\"text\":\"b c\",\"links_out\":[],\"categories\":[\"root\"]}\n",
        );
        let cats = write(
            dir.path(),
            "cats.jsonl",
            "{\"id\":\"root\",\"title\":\"Root\",\"parents\":[]}\n",
        );
        let corpus = load_corpus(&pages, &cats, "root").unwrap();
        assert_eq!(corpus.page_count(), 2);
        assert_eq!(corpus.category_count(), 1);
        assert_eq!(corpus.warnings, 0);
    }

    #[test]
    fn dangling_category_is_dropped_with_warning() {
        let pages = vec![PageRecord {
            id: "p1".into(),
            title: String::new(),
            text: "x".into(),
            links_out: vec![],
            categories: vec!["root".into(), "cX".into()],
        }];
        let cats = vec![CategoryRecord {
            id: "root".into(),
            title: String::new(),
            parents: vec![],
        }];
        let corpus = Corpus::from_records(pages, cats, "root").unwrap();
        assert_eq!(corpus.warnings, 1);
        assert_eq!(corpus.pages["p1"].categories, vec!["root".to_string()]);
    }

    #[test]
    fn self_parent_is_dropped() {
        let cats = vec![
            CategoryRecord {
                id: "root".into(),
                title: String::new(),
                parents: vec![],
            },
            CategoryRecord {
                id: "c".into(),
                title: String::new(),
                parents: vec!["c".into(), "root".into()],
            },
        ];
        let corpus = Corpus::from_records(vec![], cats, "root").unwrap();
        assert_eq!(corpus.categories["c"].parents, vec!["root".to_string()]);
        assert_eq!(corpus.warnings, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let pages = write(dir.path(), "pages.jsonl", "{\"id\":\"p1\"}\n{not json\n");
        let cats = write(dir.path(), "cats.jsonl", "{\"id\":\"root\"}\n");
        match load_corpus(&pages, &cats, "root") {
            Err(TesaError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_root_is_config_error() {
        let cats = vec![CategoryRecord {
            id: "c".into(),
            title: String::new(),
            parents: vec![],
        }];
        assert!(matches!(
            Corpus::from_records(vec![], cats, "Article"),
            Err(TesaError::Config(_))
        ));
    }

    #[test]
    fn fix1_counts() {
        let corpus = fixtures::fix1();
        assert_eq!(corpus.page_count(), 4);
        assert_eq!(corpus.category_count(), 3);
    }

    #[test]
    fn vacuous_filter_keeps_everything() {
        let corpus = fixtures::fix1();
        let filtered = filter_corpus(&corpus, &FilterThresholds::none(), &PipelineConfig::default()).unwrap();
        assert_eq!(filtered, corpus);
    }

    #[test]
    fn min_words_removes_short_page() {
        let corpus = fixtures::fix1();
        let t = FilterThresholds {
            min_words: 3,
            ..FilterThresholds::none()
        };
        let filtered = filter_corpus(&corpus, &t, &PipelineConfig::default()).unwrap();
        assert_eq!(filtered.page_count(), 3);
        assert!(!filtered.pages.contains_key("p4"));
    }

    #[test]
    fn default_thresholds_empty_fix1() {
        let corpus = fixtures::fix1();
        assert!(matches!(
            filter_corpus(&corpus, &FilterThresholds::default(), &PipelineConfig::default()),
            Err(TesaError::EmptyCorpus)
        ));
    }

    #[test]
    fn link_filter_reaches_fixed_point() {
        // chain p0 -> p1 -> p2 -> p3: with min_in = min_out = 1 the ends drop,
        // which in turn strips the interior pages of their links
        let pages = (0..4)
            .map(|i| PageRecord {
                id: format!("p{i}"),
                title: String::new(),
                text: "w".into(),
                links_out: if i < 3 { vec![format!("p{}", i + 1)] } else { vec![] },
                categories: vec!["root".into()],
            })
            .collect();
        let cats = vec![CategoryRecord {
            id: "root".into(),
            title: String::new(),
            parents: vec![],
        }];
        let corpus = Corpus::from_records(pages, cats, "root").unwrap();
        let t = FilterThresholds {
            min_words: 0,
            min_links_in: 1,
            min_links_out: 1,
        };
        assert!(matches!(
            filter_corpus(&corpus, &t, &PipelineConfig::default()),
            Err(TesaError::EmptyCorpus)
        ));
    }

    #[test]
    fn empty_categories_are_pruned() {
        let mut corpus = fixtures::fix1();
        corpus.categories.insert(
            "c3".into(),
            CategoryRecord {
                id: "c3".into(),
                title: String::new(),
                parents: vec!["root".into()],
            },
        );
        let t = FilterThresholds::none();
        let filtered = filter_corpus(&corpus, &t, &PipelineConfig::default()).unwrap();
        assert!(!filtered.categories.contains_key("c3"));
        assert_eq!(filtered.category_count(), 3);
    }

    #[test]
    fn filter_is_idempotent_and_thresholds_hold() {
        let (corpus, _) = fixtures::themed(&fixtures::ThemedSpec::noise_fix());
        let cfg = PipelineConfig::default();
        let t = FilterThresholds {
            min_words: 7,
            min_links_in: 2,
            min_links_out: 2,
        };
        let once = filter_corpus(&corpus, &t, &cfg).unwrap();
        let twice = filter_corpus(&once, &t, &cfg).unwrap();
        assert_eq!(once, twice);
        for page in once.pages.values() {
            let distinct: HashSet<_> = normalize_text(&page.text, &cfg).into_iter().collect();
            assert!(distinct.len() >= t.min_words);
            let out = page
                .links_out
                .iter()
                .filter(|l| once.pages.contains_key(*l) && **l != page.id)
                .collect::<HashSet<_>>()
                .len();
            let inc = once
                .pages
                .values()
                .filter(|q| q.id != page.id && q.links_out.contains(&page.id))
                .count();
            assert!(out >= t.min_links_out && inc >= t.min_links_in);
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = fixtures::fix1();
        let (p, c) = (dir.path().join("p.jsonl"), dir.path().join("c.jsonl"));
        corpus.write_jsonl(&p, &c).unwrap();
        let again = load_corpus(&p, &c, &corpus.root_id).unwrap();
        assert_eq!(again, corpus);
        assert_eq!(again.content_hash(), corpus.content_hash());
    }

    #[test]
    fn eval_corpus_classes_and_duplicates() {
        let docs: Vec<_> = (0..4)
            .map(|i| LabeledDocument {
                doc_id: format!("d{i}"),
                label: if i % 2 == 0 { "x" } else { "y" }.into(),
                text: "t".into(),
            })
            .collect();
        let eval = EvalCorpus::from_documents(docs.clone()).unwrap();
        assert_eq!(eval.classes.len(), 2);

        let mut dup = docs;
        dup[3].doc_id = "d0".into();
        assert!(EvalCorpus::from_documents(dup).is_err());
        assert!(EvalCorpus::from_documents(vec![]).is_err());
    }

    #[test]
    fn eval_fix_has_four_balanced_classes() {
        let dir = tempfile::tempdir().unwrap();
        let (_, eval) = fixtures::themed(&fixtures::ThemedSpec::eval_fix());
        let path = dir.path().join("eval.jsonl");
        eval.write_jsonl(&path).unwrap();
        let loaded = load_eval_corpus(&path).unwrap();
        assert_eq!(loaded.classes.len(), 4);
        for docs in loaded.by_class().values() {
            assert_eq!(docs.len(), 5);
        }
    }

    #[test]
    fn empty_eval_file_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "eval.jsonl", "");
        assert!(load_eval_corpus(&path).is_err());
    }
}
