//! Small deterministic corpora and graphs for tests, examples and the
//! acceptance suite, plus brute-force oracles that share no code with the
//! production paths they check.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arborification::WeightedDigraph;
use crate::corpus::{CategoryRecord, Corpus, EvalCorpus, LabeledDocument, PageRecord};
use crate::index::EsaModel;
use crate::textproc::PipelineConfig;

fn page(id: &str, text: &str, links: &[&str], cats: &[&str]) -> PageRecord {
    PageRecord {
        id: id.into(),
        title: id.into(),
        text: text.into(),
        links_out: links.iter().map(|s| s.to_string()).collect(),
        categories: cats.iter().map(|s| s.to_string()).collect(),
    }
}

fn category(id: &str, parents: &[&str]) -> CategoryRecord {
    CategoryRecord {
        id: id.into(),
        title: id.into(),
        parents: parents.iter().map(|s| s.to_string()).collect(),
    }
}

/// Four pages under two categories below `root`.
pub fn fix1_records() -> (Vec<PageRecord>, Vec<CategoryRecord>) {
    let pages = vec![
        page("p1", "alpha alpha beta gamma", &["p2", "p3"], &["c1"]),
        page("p2", "beta delta epsilon", &["p1", "p4"], &["c1"]),
        page("p3", "beta gamma delta", &["p4", "p1"], &["c2"]),
        page("p4", "beta epsilon", &["p3", "p2"], &["c2"]),
    ];
    let categories = vec![
        category("root", &[]),
        category("c1", &["root"]),
        category("c2", &["root"]),
    ];
    (pages, categories)
}

pub fn fix1() -> Corpus {
    let (pages, categories) = fix1_records();
    Corpus::from_records(pages, categories, "root").expect("fix1 is valid")
}

pub fn fix1_built() -> EsaModel {
    EsaModel::build(&fix1(), &PipelineConfig::default()).expect("fix1 builds")
}

/// A three-level themed corpus: `root → theme → subtheme → pages`.
///
/// Every page of subtheme `(t, s)` contains its anchor word once. Each noise
/// word occurs once on `pages_per_subtheme` pages spread over distinct
/// subthemes, so anchors and noise words share df and page-level tfidf.
#[derive(Clone, Debug, PartialEq)]
pub struct ThemedSpec {
    pub themes: usize,
    pub subthemes: usize,
    pub pages_per_subtheme: usize,
    /// Distinct content words per subtheme.
    pub subtheme_vocab: usize,
    /// Content words drawn (with replacement) per page.
    pub words_per_page: usize,
    pub noise_words: usize,
    pub docs_per_class: usize,
    pub doc_words: usize,
    /// Words per document drawn from other themes.
    pub doc_confusers: usize,
    pub seed: u64,
}

impl ThemedSpec {
    /// 4 themes, 5 documents per class.
    pub fn eval_fix() -> ThemedSpec {
        ThemedSpec {
            themes: 4,
            subthemes: 2,
            pages_per_subtheme: 4,
            subtheme_vocab: 8,
            words_per_page: 6,
            noise_words: 6,
            docs_per_class: 5,
            doc_words: 8,
            doc_confusers: 2,
            seed: 11,
        }
    }

    pub fn noise_fix() -> ThemedSpec {
        ThemedSpec {
            themes: 4,
            subthemes: 3,
            pages_per_subtheme: 5,
            subtheme_vocab: 30,
            words_per_page: 6,
            noise_words: 24,
            docs_per_class: 20,
            doc_words: 6,
            doc_confusers: 3,
            seed: 5,
        }
    }

    pub fn anchor(&self, theme: usize, sub: usize) -> String {
        format!("anchor{theme}x{sub}")
    }

    pub fn noise(&self, j: usize) -> String {
        format!("noise{j}")
    }

    fn content(&self, theme: usize, sub: usize, k: usize) -> String {
        format!("word{theme}x{sub}x{k}")
    }

    pub fn page_id(&self, theme: usize, sub: usize, i: usize) -> String {
        format!("page{theme}x{sub}x{i}")
    }

    /// Pages carrying noise word `j`: one per subtheme, walking the
    /// subthemes theme-first so consecutive carriers differ in theme.
    pub fn noise_pages(&self, j: usize) -> Vec<(usize, usize, usize)> {
        let n_sub = self.themes * self.subthemes;
        (0..self.pages_per_subtheme)
            .map(|r| {
                let flat = (j + r) % n_sub;
                let (theme, sub) = (flat % self.themes, (flat / self.themes) % self.subthemes);
                (theme, sub, (j + 2 * r) % self.pages_per_subtheme)
            })
            .collect()
    }
}

/// Build the themed corpus and its labeled evaluation documents.
pub fn themed(spec: &ThemedSpec) -> (Corpus, EvalCorpus) {
    assert!(spec.pages_per_subtheme <= spec.themes * spec.subthemes);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise_at: HashMap<(usize, usize, usize), Vec<String>> = HashMap::new();
    for j in 0..spec.noise_words {
        for key in spec.noise_pages(j) {
            noise_at.entry(key).or_default().push(spec.noise(j));
        }
    }

    let mut categories = vec![category("root", &[])];
    let mut pages = Vec::new();
    for t in 0..spec.themes {
        let theme = format!("theme{t}");
        categories.push(category(&theme, &["root"]));
        for s in 0..spec.subthemes {
            let sub = format!("sub{t}x{s}");
            categories.push(category(&sub, &[&theme]));
            for i in 0..spec.pages_per_subtheme {
                let mut words = vec![spec.anchor(t, s)];
                for _ in 0..spec.words_per_page {
                    words.push(spec.content(t, s, rng.random_range(0..spec.subtheme_vocab)));
                }
                words.extend(noise_at.get(&(t, s, i)).cloned().unwrap_or_default());
                let id = spec.page_id(t, s, i);
                let n = spec.pages_per_subtheme;
                let next = spec.page_id(t, s, (i + 1) % n);
                let prev = spec.page_id(t, s, (i + n - 1) % n);
                pages.push(page(&id, &words.join(" "), &[&next, &prev], &[&sub]));
            }
        }
    }

    let mut documents = Vec::new();
    for t in 0..spec.themes {
        for d in 0..spec.docs_per_class {
            let mut words = Vec::new();
            for _ in 0..spec.doc_words {
                let s = rng.random_range(0..spec.subthemes);
                words.push(spec.content(t, s, rng.random_range(0..spec.subtheme_vocab)));
            }
            for _ in 0..spec.doc_confusers {
                let other = (t + 1 + rng.random_range(0..spec.themes - 1)) % spec.themes;
                let s = rng.random_range(0..spec.subthemes);
                words.push(spec.content(other, s, rng.random_range(0..spec.subtheme_vocab)));
            }
            if spec.noise_words > 0 {
                words.push(spec.noise(rng.random_range(0..spec.noise_words)));
            }
            documents.push(LabeledDocument {
                doc_id: format!("doc{t}x{d}"),
                label: format!("theme{t}"),
                text: words.join(" "),
            });
        }
    }

    let corpus = Corpus::from_records(pages, categories, "root").expect("themed corpus is valid");
    let eval = EvalCorpus::from_documents(documents).expect("themed documents are valid");
    (corpus, eval)
}

pub fn themed_built(spec: &ThemedSpec) -> (EsaModel, EvalCorpus) {
    let (corpus, eval) = themed(spec);
    let model = EsaModel::build(&corpus, &PipelineConfig::default()).expect("themed corpus builds");
    (model, eval)
}

pub fn eval_fix_built() -> (EsaModel, EvalCorpus) {
    themed_built(&ThemedSpec::eval_fix())
}

pub fn noise_fix_built() -> (EsaModel, EvalCorpus) {
    themed_built(&ThemedSpec::noise_fix())
}

/// Three disjoint planted cycles (two 2-cycles and a triangle), each
/// with an exit to the root, plus acyclic chains.
pub fn cyc1() -> WeightedDigraph {
    let pages = ["pa1", "pa2", "pb", "pt1", "pt3", "px", "py"];
    let categories = ["a1", "a2", "b1", "b2", "t1", "t2", "t3", "x1", "x2", "y1", "root"];
    let edges = [
        ("pa1", "a1", 0.9),
        ("pa2", "a2", 0.8),
        ("pb", "b2", 0.7),
        ("pt1", "t1", 0.6),
        ("pt3", "t3", 0.5),
        ("px", "x1", 0.4),
        ("py", "y1", 0.3),
        ("a1", "a2", 0.75),
        ("a2", "a1", 0.25),
        ("a2", "root", 0.5),
        ("b1", "b2", 0.375),
        ("b2", "b1", 0.625),
        ("b1", "root", 0.125),
        ("t1", "t2", 0.5),
        ("t2", "t3", 0.5),
        ("t3", "t1", 0.25),
        ("t3", "root", 0.5),
        ("x1", "x2", 0.5),
        ("x2", "root", 0.5),
        ("y1", "root", 0.5),
        ("x1", "y1", 0.5),
    ];
    WeightedDigraph::new(
        pages.iter().map(|s| s.to_string()).collect(),
        categories.iter().map(|s| s.to_string()).collect(),
        edges
            .iter()
            .map(|(a, b, w)| (a.to_string(), b.to_string(), *w))
            .collect(),
        "root",
    )
    .expect("cyc1 is valid")
}

/// The planted cycles of [`cyc1`], rotated to start at their smallest id.
pub fn cyc1_cycles() -> Vec<Vec<String>> {
    let cycles: BTreeSet<Vec<String>> = [vec!["a1", "a2"], vec!["b1", "b2"], vec!["t1", "t2", "t3"]]
        .into_iter()
        .map(|c| c.into_iter().map(String::from).collect())
        .collect();
    cycles.into_iter().collect()
}

/// Random category digraph on `n` nodes (one of them the sink `root`) in which
/// every node reaches the sink. Weights are multiples of 1/1024, so sums of
/// up to a few thousand of them are exact in `f64`.
pub fn random_reachable_digraph(rng: &mut impl Rng, n: usize, extra_edge_prob: f64) -> WeightedDigraph {
    assert!(n >= 1);
    let names: Vec<String> = (0..n - 1)
        .map(|i| format!("n{i}"))
        .chain(["root".to_string()])
        .collect();
    let mut order: Vec<usize> = (0..n - 1).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let weight = |rng: &mut dyn rand::RngCore| rng.random_range(0..=1024u32) as f64 / 1024.0;
    for (pos, &v) in order.iter().enumerate() {
        // a guaranteed step toward the sink: the root or an earlier node
        let choices: Vec<usize> = order[..pos].iter().copied().chain([n - 1]).collect();
        let target = *choices.choose(rng).expect("nonempty");
        edges.insert((v, target), weight(rng));
    }
    for s in 0..n - 1 {
        for t in 0..n {
            if s != t && !edges.contains_key(&(s, t)) && rng.random_bool(extra_edge_prob) {
                edges.insert((s, t), weight(rng));
            }
        }
    }
    WeightedDigraph::new(
        vec![],
        names.clone(),
        edges
            .into_iter()
            .map(|((s, t), w)| (names[s].clone(), names[t].clone(), w))
            .collect(),
        "root",
    )
    .expect("random digraph is valid")
}

/// Category digraph whose category in-degree histogram is
/// `round(C · k^(-alpha))` for `k ≥ 1`, with `C` chosen so the histogram
/// covers about `n_categories` nodes; the rest have in-degree 0. Edges come
/// from pages `q0, q1, …`: a category of in-degree `k` is linked from
/// `q0..q(k-1)`.
pub fn power_law_digraph(n_categories: usize, alpha: f64) -> WeightedDigraph {
    let limit = n_categories;
    let zeta: f64 = (1..=limit).map(|k| (k as f64).powf(-alpha)).sum();
    let c = n_categories as f64 / zeta;
    let mut degrees = Vec::new();
    for k in 1..=limit {
        let count = (c * (k as f64).powf(-alpha)).round() as usize;
        degrees.extend(std::iter::repeat_n(k, count));
    }
    degrees.truncate(n_categories.saturating_sub(1));
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let pages: Vec<String> = (0..max_degree).map(|i| format!("q{i}")).collect();
    let mut categories: Vec<String> = (0..n_categories - 1).map(|i| format!("c{i:06}")).collect();
    categories.push("root".into());
    let mut edges = Vec::new();
    for (i, &k) in degrees.iter().enumerate() {
        for page in pages.iter().take(k) {
            edges.push((page.clone(), categories[i].clone(), 0.5));
        }
    }
    WeightedDigraph::new(pages, categories, edges, "root").expect("power-law digraph is valid")
}

/// Oracles computed from first principles with dense arithmetic.
pub mod oracle {
    use std::collections::{BTreeMap, BTreeSet, VecDeque};

    use crate::arborification::WeightedDigraph;
    use crate::corpus::Corpus;
    use crate::textproc::{normalize_text, PipelineConfig};

    /// Exhaustive maximum spanning in-tree weight: every choice of one
    /// outgoing edge per non-sink node, keeping the acyclic ones.
    pub fn brute_force_max_intree(g: &WeightedDigraph) -> Option<f64> {
        let n = g.n_nodes();
        let sink = g.sink();
        let mut options: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in g.edges() {
            options[e.source].push((e.target, e.weight));
        }
        let nodes: Vec<usize> = (0..n).filter(|&v| v != sink).collect();
        if nodes.iter().any(|&v| options[v].is_empty()) {
            return None;
        }
        let mut best: Option<f64> = None;
        let mut choice = vec![0usize; nodes.len()];
        loop {
            let mut parent = vec![usize::MAX; n];
            let mut total = 0.0;
            for (slot, &v) in nodes.iter().enumerate() {
                let (t, w) = options[v][choice[slot]];
                parent[v] = t;
                total += w;
            }
            let reaches = nodes.iter().all(|&v| {
                let mut u = v;
                for _ in 0..n {
                    if u == sink {
                        return true;
                    }
                    u = parent[u];
                }
                u == sink
            });
            if reaches && best.is_none_or(|b| total > b) {
                best = Some(total);
            }
            // odometer increment
            let mut slot = 0;
            loop {
                if slot == nodes.len() {
                    return best;
                }
                choice[slot] += 1;
                if choice[slot] < options[nodes[slot]].len() {
                    break;
                }
                choice[slot] = 0;
                slot += 1;
            }
        }
    }

    /// Dense ESA quantities for a small corpus.
    #[derive(Clone, Debug)]
    pub struct DenseEsa {
        pub pages: Vec<String>,
        pub terms: Vec<String>,
        /// `freq[p][w]`
        pub freq: Vec<Vec<f64>>,
        /// `tfidf[p][w]`
        pub tfidf: Vec<Vec<f64>>,
    }

    impl DenseEsa {
        pub fn new(corpus: &Corpus, cfg: &PipelineConfig) -> DenseEsa {
            let pages: Vec<String> = corpus.pages.keys().cloned().collect();
            let tokens: Vec<Vec<String>> = corpus.pages.values().map(|p| normalize_text(&p.text, cfg)).collect();
            let terms: Vec<String> = tokens
                .iter()
                .flatten()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let freq: Vec<Vec<f64>> = tokens
                .iter()
                .map(|toks| {
                    terms
                        .iter()
                        .map(|t| toks.iter().filter(|x| *x == t).count() as f64)
                        .collect()
                })
                .collect();
            let n = pages.len() as f64;
            let df: Vec<f64> = (0..terms.len())
                .map(|w| freq.iter().filter(|row| row[w] > 0.0).count() as f64)
                .collect();
            let tfidf = freq
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(w, &f)| {
                            if f > 0.0 {
                                (1.0 + f.ln()) * (n / df[w]).ln()
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            DenseEsa {
                pages,
                terms,
                freq,
                tfidf,
            }
        }

        pub fn term(&self, word: &str) -> usize {
            self.terms.iter().position(|t| t == word).expect("known term")
        }

        pub fn concept(&self, w: usize) -> Vec<f64> {
            self.tfidf.iter().map(|row| row[w]).collect()
        }

        /// Pages reachable downward from `category` in `g` (category and page
        /// ids as in `g`).
        pub fn family(g: &WeightedDigraph, category: &str) -> Vec<usize> {
            let target = g.node(category).expect("known category");
            let mut below: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for e in g.edges() {
                below.entry(e.target).or_default().push(e.source);
            }
            let mut seen = vec![false; g.n_nodes()];
            seen[target] = true;
            let mut queue = VecDeque::from([target]);
            let mut out = Vec::new();
            while let Some(v) = queue.pop_front() {
                if v < g.n_pages() {
                    out.push(v);
                }
                for &u in below.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
            out.sort_unstable();
            out
        }

        /// `(1 + ln Σ_{F} f) · ln(N / (1 + df outside F))`, 0 when absent.
        pub fn categorical(&self, family: &[usize], w: usize) -> f64 {
            let sum: f64 = family.iter().map(|&p| self.freq[p][w]).sum();
            if sum == 0.0 {
                return 0.0;
            }
            let outside = (0..self.pages.len())
                .filter(|p| !family.contains(p) && self.freq[*p][w] > 0.0)
                .count() as f64;
            (1.0 + sum.ln()) * (self.pages.len() as f64 / (1.0 + outside)).ln()
        }

        pub fn page_vector(&self, p: usize) -> Vec<f64> {
            let mut v = vec![0.0; self.pages.len()];
            for w in 0..self.terms.len() {
                let c = self.concept(w);
                for (x, y) in v.iter_mut().zip(&c) {
                    *x += self.tfidf[p][w] * y;
                }
            }
            normalize(v)
        }

        pub fn category_vector(&self, family: &[usize]) -> Vec<f64> {
            let mut v = vec![0.0; self.pages.len()];
            for w in 0..self.terms.len() {
                let t = self.categorical(family, w);
                let c = self.concept(w);
                for (x, y) in v.iter_mut().zip(&c) {
                    *x += t * y;
                }
            }
            normalize(v)
        }
    }

    pub fn dot(u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn normalize(v: Vec<f64>) -> Vec<f64> {
        let n = dot(&v, &v).sqrt();
        if n == 0.0 {
            v
        } else {
            v.into_iter().map(|x| x / n).collect()
        }
    }

    pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
        let (a, b) = (dot(u, u).sqrt(), dot(v, v).sqrt());
        if a == 0.0 || b == 0.0 {
            0.0
        } else {
            dot(u, v) / (a * b)
        }
    }
}
