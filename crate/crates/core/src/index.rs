//! End-to-end model build and the on-disk index.
//!
//! An index directory holds plain-text tables, one little-endian postings
//! file and a manifest listing the SHA-256 of every component. Everything is
//! written in a canonical order, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arborification::{
    break_cycles, build_weighted_digraph, max_spanning_intree, DigraphReport, Edge, SpanningTree, WeightedDigraph,
};
use crate::corpus::{filter_corpus, load_corpus, Corpus, FilterThresholds};
use crate::error::{Result, TesaError};
use crate::reinforcement::ReinforcedSpace;
use crate::textproc::{PipelineConfig, TokenizedPages, Vocabulary};
use crate::vectors::EsaSpace;
use crate::weighting::{CategoryGraph, DescendantIndex, TermStats};

pub const FORMAT_VERSION: u32 = 1;
const POSTINGS_MAGIC: &[u8; 8] = b"TESAPST\x01";

const MANIFEST: &str = "manifest.json";
const PIPELINE: &str = "pipeline.json";
const PAGES: &str = "pages.tsv";
const CATEGORIES: &str = "categories.tsv";
const TERMS: &str = "terms.tsv";
const POSTINGS: &str = "postings.bin";
const GRAPH: &str = "graph.tsv";
const REMOVED: &str = "removed.tsv";
const TREE: &str = "tree.tsv";

/// Everything derived from a filtered corpus.
///
/// Edge weights use descendant sets of the raw category graph (needed before
/// any cycle can be broken); `descendants` and the tree use the cycle-broken
/// graph.
#[derive(Clone, Debug)]
pub struct EsaModel {
    pub pipeline: PipelineConfig,
    pub root: String,
    pub vocab: Vocabulary,
    pub stats: TermStats,
    pub descendants: DescendantIndex,
    pub graph: WeightedDigraph,
    pub removed: Vec<Edge>,
    pub acyclic: WeightedDigraph,
    pub tree: SpanningTree,
    pub report: DigraphReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildSummary {
    pub pages: usize,
    pub categories: usize,
    pub terms: usize,
    pub membership_edges: usize,
    pub subcategory_edges: usize,
    pub removed_edges: usize,
    pub tree_weight: f64,
    pub degenerate_pages: usize,
    pub degenerate_categories: usize,
}

impl EsaModel {
    /// Build from an already filtered corpus.
    pub fn build(corpus: &Corpus, pipeline: &PipelineConfig) -> Result<EsaModel> {
        let tokens = TokenizedPages::from_corpus(corpus, pipeline);
        let vocab = Vocabulary::build(&tokens);
        let stats = TermStats::build(&tokens, &vocab);
        let hierarchy = CategoryGraph::from_corpus(corpus);
        let raw_descendants = DescendantIndex::build(&hierarchy);
        let space = EsaSpace::new(&vocab, &stats, &raw_descendants);
        let (graph, report) = build_weighted_digraph(&space, &tokens.ids, &hierarchy, &corpus.root_id)
            .map_err(|e| e.in_stage("digraph"))?;
        Self::from_parts(pipeline.clone(), corpus.root_id.clone(), vocab, stats, graph, report)
    }

    fn from_parts(
        pipeline: PipelineConfig,
        root: String,
        vocab: Vocabulary,
        stats: TermStats,
        graph: WeightedDigraph,
        report: DigraphReport,
    ) -> Result<EsaModel> {
        let (acyclic, removed) = break_cycles(&graph);
        let descendants = DescendantIndex::build(&acyclic.category_graph());
        let tree = max_spanning_intree(&acyclic).map_err(|e| e.in_stage("tree"))?;
        Ok(EsaModel {
            pipeline,
            root,
            vocab,
            stats,
            descendants,
            graph,
            removed,
            acyclic,
            tree,
            report,
        })
    }

    pub fn page_ids(&self) -> &[String] {
        &self.graph.names()[..self.graph.n_pages()]
    }

    pub fn category_ids(&self) -> &[String] {
        &self.graph.names()[self.graph.n_pages()..]
    }

    pub fn space(&self) -> EsaSpace<'_> {
        EsaSpace::new(&self.vocab, &self.stats, &self.descendants)
    }

    pub fn reinforced(&self) -> Result<ReinforcedSpace<'_>> {
        ReinforcedSpace::new(self.space(), &self.tree)
    }

    pub fn summary(&self) -> BuildSummary {
        BuildSummary {
            pages: self.graph.n_pages(),
            categories: self.graph.n_categories(),
            terms: self.vocab.len(),
            membership_edges: self.graph.membership_edge_count(),
            subcategory_edges: self.graph.subcategory_edge_count(),
            removed_edges: self.removed.len(),
            tree_weight: self.tree.total_weight(),
            degenerate_pages: self.report.degenerate_pages,
            degenerate_categories: self.report.degenerate_categories,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format_version: u32,
    pub corpus_hash: String,
    pub thresholds: FilterThresholds,
    pub pipeline_hash: String,
    pub root: String,
    pub files: Vec<ManifestFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn lines_of<I: IntoIterator<Item = String>>(items: I) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        out.extend_from_slice(item.as_bytes());
        out.push(b'\n');
    }
    out
}

fn edge_table(names: &[String], edges: &[Edge]) -> Vec<u8> {
    lines_of(
        edges
            .iter()
            .map(|e| format!("{}\t{}\t{}", names[e.source], names[e.target], e.weight)),
    )
}

fn encode_postings(stats: &TermStats) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(POSTINGS_MAGIC);
    out.extend_from_slice(&(stats.n_pages() as u64).to_le_bytes());
    out.extend_from_slice(&(stats.n_terms() as u64).to_le_bytes());
    for list in stats.all_postings() {
        out.extend_from_slice(&(list.len() as u64).to_le_bytes());
        for &(page, f) in list {
            out.extend_from_slice(&page.to_le_bytes());
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    out
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let slice = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(slice)
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

fn decode_postings(bytes: &[u8]) -> Result<TermStats> {
    let corrupt = |what: &str| TesaError::CorruptIndex(format!("{POSTINGS}: {what}"));
    let mut cur = ByteCursor { bytes, pos: 0 };
    if cur.take(8) != Some(POSTINGS_MAGIC.as_slice()) {
        return Err(corrupt("bad magic"));
    }
    let truncated = || corrupt("truncated");
    let n_pages = cur.u64().ok_or_else(truncated)? as usize;
    let n_terms = cur.u64().ok_or_else(truncated)? as usize;
    let mut postings = Vec::with_capacity(n_terms.min(bytes.len() / 8));
    for _ in 0..n_terms {
        let len = cur.u64().ok_or_else(truncated)? as usize;
        let raw = cur
            .take(len.checked_mul(8).ok_or_else(truncated)?)
            .ok_or_else(truncated)?;
        let list = raw
            .chunks_exact(8)
            .map(|c| {
                (
                    u32::from_le_bytes(c[..4].try_into().expect("4 bytes")),
                    u32::from_le_bytes(c[4..].try_into().expect("4 bytes")),
                )
            })
            .collect();
        postings.push(list);
    }
    if cur.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    TermStats::from_postings(n_pages, postings).map_err(|e| corrupt(&e.to_string()))
}

/// Write `model` into `dir` (created if needed).
pub fn write_index(
    dir: &Path,
    model: &EsaModel,
    corpus_hash: &str,
    thresholds: &FilterThresholds,
) -> Result<IndexManifest> {
    fs::create_dir_all(dir).map_err(|e| TesaError::io(format!("creating {}", dir.display()), e))?;
    let pipeline_json = serde_json::to_vec_pretty(&model.pipeline).expect("pipeline serializes");
    let names = model.graph.names();
    let components: Vec<(&str, Vec<u8>)> = vec![
        (CATEGORIES, lines_of(model.category_ids().iter().cloned())),
        (GRAPH, edge_table(names, model.graph.edges())),
        (PAGES, lines_of(model.page_ids().iter().cloned())),
        (PIPELINE, pipeline_json.clone()),
        (POSTINGS, encode_postings(&model.stats)),
        (REMOVED, edge_table(names, &model.removed)),
        (
            TERMS,
            lines_of(
                model
                    .vocab
                    .terms()
                    .iter()
                    .enumerate()
                    .map(|(i, t)| format!("{t}\t{}", model.vocab.frequency(crate::textproc::TermId(i as u32)))),
            ),
        ),
        (
            TREE,
            lines_of(
                model
                    .tree
                    .parent_lines()
                    .into_iter()
                    .map(|(v, p, w)| format!("{v}\t{p}\t{w}")),
            ),
        ),
    ];
    let mut files = Vec::new();
    for (name, bytes) in &components {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| TesaError::io(format!("writing {}", path.display()), e))?;
        files.push(ManifestFile {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = IndexManifest {
        format_version: FORMAT_VERSION,
        corpus_hash: corpus_hash.to_string(),
        thresholds: *thresholds,
        pipeline_hash: sha256_hex(&pipeline_json),
        root: model.root.clone(),
        files,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    let path = dir.join(MANIFEST);
    let mut file = fs::File::create(&path).map_err(|e| TesaError::io(format!("writing {}", path.display()), e))?;
    file.write_all(&bytes)
        .map_err(|e| TesaError::io(format!("writing {}", path.display()), e))?;
    Ok(manifest)
}

fn read_manifest(dir: &Path) -> Result<IndexManifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| TesaError::CorruptIndex(format!("{MANIFEST}: {e}")))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| TesaError::CorruptIndex(format!("{MANIFEST}: missing format_version")))?;
    if found != FORMAT_VERSION as u64 {
        return Err(TesaError::IndexVersion {
            found: found as u32,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| TesaError::CorruptIndex(format!("{MANIFEST}: {e}")))
}

/// Load and verify an index directory written by [`write_index`].
pub fn load_index(dir: &Path) -> Result<(EsaModel, IndexManifest)> {
    let manifest = read_manifest(dir)?;
    let mut contents: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    for name in [CATEGORIES, GRAPH, PAGES, PIPELINE, POSTINGS, REMOVED, TERMS, TREE] {
        let entry = manifest
            .files
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| TesaError::CorruptIndex(format!("manifest does not list {name}")))?;
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(TesaError::CorruptIndex(format!("{name} does not match its checksum")));
        }
        contents.insert(name, bytes);
    }
    let text = |name: &str| -> Result<String> {
        String::from_utf8(contents[name].clone()).map_err(|_| TesaError::CorruptIndex(format!("{name} is not UTF-8")))
    };
    let pipeline: PipelineConfig =
        serde_json::from_slice(&contents[PIPELINE]).map_err(|e| TesaError::CorruptIndex(format!("{PIPELINE}: {e}")))?;
    let pages: Vec<String> = text(PAGES)?.lines().map(str::to_string).collect();
    let categories: Vec<String> = text(CATEGORIES)?.lines().map(str::to_string).collect();
    let mut counts = BTreeMap::new();
    for line in text(TERMS)?.lines() {
        let (term, freq) = line
            .split_once('\t')
            .and_then(|(t, f)| Some((t.to_string(), f.parse::<u64>().ok()?)))
            .ok_or_else(|| TesaError::CorruptIndex(format!("{TERMS}: bad line {line:?}")))?;
        counts.insert(term, freq);
    }
    let vocab = Vocabulary::from_counts(counts);
    let stats = decode_postings(&contents[POSTINGS])?;
    if stats.n_pages() != pages.len() || stats.n_terms() != vocab.len() {
        return Err(TesaError::CorruptIndex("postings do not match pages/terms".into()));
    }

    let graph =
        WeightedDigraph::read_edges_with_nodes(&dir.join(GRAPH), pages.clone(), categories.clone(), &manifest.root)?;
    let removed_lines = crate::arborification::read_edge_lines(&dir.join(REMOVED))?;
    let mut removed = Vec::with_capacity(removed_lines.len());
    for (s, t, _) in &removed_lines {
        let edge = match (graph.node(s), graph.node(t)) {
            (Some(a), Some(b)) => graph.edges().iter().find(|e| e.source == a && e.target == b).copied(),
            _ => None,
        };
        removed
            .push(edge.ok_or_else(|| TesaError::CorruptIndex(format!("removed edge {s} → {t} is not in the graph")))?);
    }
    let acyclic = graph.without_edges(&removed);
    let descendants = DescendantIndex::build(&acyclic.category_graph());
    let tree = SpanningTree::read(&dir.join(TREE), &acyclic)?;
    info!(
        "loaded index {} ({} pages, {} terms)",
        dir.display(),
        pages.len(),
        vocab.len()
    );
    let model = EsaModel {
        pipeline,
        root: manifest.root.clone(),
        vocab,
        stats,
        descendants,
        graph,
        removed,
        acyclic,
        tree,
        report: DigraphReport::default(),
    };
    Ok((model, manifest))
}

/// Options for [`build_index`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub thresholds: FilterThresholds,
    pub pipeline: PipelineConfig,
}

/// load → filter → model → write. Errors carry the failing stage.
pub fn build_index(
    pages: &Path,
    categories: &Path,
    root: &str,
    options: &BuildOptions,
    out: &Path,
) -> Result<(EsaModel, BuildSummary)> {
    let corpus = load_corpus(pages, categories, root).map_err(|e| e.in_stage("load"))?;
    let filtered = filter_corpus(&corpus, &options.thresholds, &options.pipeline).map_err(|e| e.in_stage("filter"))?;
    info!(
        "kept {} of {} pages and {} of {} categories",
        filtered.page_count(),
        corpus.page_count(),
        filtered.category_count(),
        corpus.category_count()
    );
    let model = EsaModel::build(&filtered, &options.pipeline)?;
    write_index(out, &model, &corpus.content_hash(), &options.thresholds).map_err(|e| e.in_stage("write"))?;
    let summary = model.summary();
    Ok((model, summary))
}
