//! Weighted page/category digraph and its maximal spanning in-tree.
//!
//! Edges point upward: page → category for memberships and
//! category → parent for subcategory relations. The root category is the
//! global sink. Edge weights are inner products of unit page/category
//! vectors and therefore lie in `[0, 1]`.

mod cycles;
pub mod edmonds;
mod tree;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TesaError};
use crate::vectors::{EsaSpace, SparseAccumulator, SparseVector};
use crate::weighting::CategoryGraph;

pub use cycles::{break_cycles, is_acyclic, random_walk_cycle_census, strongly_connected_components, CycleCensus};
pub use tree::{max_spanning_intree, max_spanning_intree_reference, SpanningTree};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Page,
    Category,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Nodes are stored pages first, then categories, each block sorted by id.
/// Edges are sorted lexicographically by `(source id, target id)`; that order
/// is the tie-break preference everywhere downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedDigraph {
    names: Vec<String>,
    n_pages: usize,
    lookup: HashMap<String, usize>,
    edges: Vec<Edge>,
    sink: usize,
}

impl WeightedDigraph {
    /// Build from string ids. `sink` must be one of `categories`.
    pub fn new(
        pages: Vec<String>,
        categories: Vec<String>,
        edges: Vec<(String, String, f64)>,
        sink: &str,
    ) -> Result<WeightedDigraph> {
        let mut pages = pages;
        let mut categories = categories;
        pages.sort();
        categories.sort();
        let names: Vec<String> = pages.iter().chain(&categories).cloned().collect();
        let mut lookup = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if lookup.insert(name.clone(), i).is_some() {
                return Err(TesaError::Invalid(format!("duplicate node '{name}'")));
            }
        }
        let node = |id: &str| lookup.get(id).copied().ok_or_else(|| TesaError::unknown("node", id));
        let sink = node(sink)?;
        let edges = edges
            .iter()
            .map(|(s, t, w)| {
                Ok(Edge {
                    source: node(s)?,
                    target: node(t)?,
                    weight: *w,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(names, pages.len(), edges, sink)
    }

    fn assemble(names: Vec<String>, n_pages: usize, mut edges: Vec<Edge>, sink: usize) -> Result<WeightedDigraph> {
        if sink < n_pages {
            return Err(TesaError::Invalid(format!("sink '{}' is a page", names[sink])));
        }
        for e in &edges {
            let (s, t) = (&names[e.source], &names[e.target]);
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(TesaError::Invalid(format!(
                    "edge {s} → {t} has weight {} outside [0, 1]",
                    e.weight
                )));
            }
            if e.source == e.target {
                return Err(TesaError::Invalid(format!("self-loop on '{s}'")));
            }
            if e.source == sink {
                return Err(TesaError::Invalid(format!("sink '{s}' has an outgoing edge")));
            }
            if e.target < n_pages {
                return Err(TesaError::Invalid(format!("page '{t}' has an incoming edge")));
            }
        }
        edges.sort_by(|a, b| (&names[a.source], &names[a.target]).cmp(&(&names[b.source], &names[b.target])));
        if let Some(w) = edges
            .windows(2)
            .find(|w| w[0].source == w[1].source && w[0].target == w[1].target)
        {
            return Err(TesaError::Invalid(format!(
                "duplicate edge {} → {}",
                names[w[0].source], names[w[0].target]
            )));
        }
        let lookup = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Ok(WeightedDigraph {
            names,
            n_pages,
            lookup,
            edges,
            sink,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn n_pages(&self) -> usize {
        self.n_pages
    }

    pub fn n_categories(&self) -> usize {
        self.names.len() - self.n_pages
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        if node < self.n_pages {
            NodeKind::Page
        } else {
            NodeKind::Category
        }
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Outgoing edge indices per node, in edge order.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_nodes()];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.source].push(i);
        }
        out
    }

    pub fn membership_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.source < self.n_pages).count()
    }

    pub fn subcategory_edge_count(&self) -> usize {
        self.edges.len() - self.membership_edge_count()
    }

    /// Copy with the given `(source, target)` pairs removed.
    pub fn without_edges(&self, removed: &[Edge]) -> WeightedDigraph {
        let drop: HashSet<(usize, usize)> = removed.iter().map(|e| (e.source, e.target)).collect();
        let mut g = self.clone();
        g.edges.retain(|e| !drop.contains(&(e.source, e.target)));
        g
    }

    /// Category hierarchy view; category `k` is node `n_pages + k`.
    pub fn category_graph(&self) -> CategoryGraph {
        let mut parents = vec![Vec::new(); self.n_categories()];
        let mut page_categories = vec![Vec::new(); self.n_pages];
        for e in &self.edges {
            let target = e.target - self.n_pages;
            if e.source < self.n_pages {
                page_categories[e.source].push(target);
            } else {
                parents[e.source - self.n_pages].push(target);
            }
        }
        CategoryGraph {
            category_ids: self.names[self.n_pages..].to_vec(),
            parents,
            page_categories,
        }
    }

    /// Edge-list text, one `source<TAB>target<TAB>weight` line per edge.
    pub fn write_edges(&self, path: &Path) -> Result<()> {
        write_edge_lines(path, &self.names, &self.edges)
    }

    /// Read an edge list. Nodes that never appear as a target are taken to be
    /// pages; everything else, and the sink, is a category.
    pub fn read_edges(path: &Path, sink: &str) -> Result<WeightedDigraph> {
        let edges = read_edge_lines(path)?;
        let targets: HashSet<&str> = edges.iter().map(|(_, t, _)| t.as_str()).collect();
        let mut pages = HashSet::new();
        let mut categories: HashSet<String> = targets.iter().map(|t| t.to_string()).collect();
        categories.insert(sink.to_string());
        for (s, _, _) in &edges {
            if !categories.contains(s) {
                pages.insert(s.clone());
            }
        }
        WeightedDigraph::new(
            pages.into_iter().collect(),
            categories.into_iter().collect(),
            edges,
            sink,
        )
    }

    /// Rebuild with known node kinds (used when loading an index).
    pub fn read_edges_with_nodes(
        path: &Path,
        pages: Vec<String>,
        categories: Vec<String>,
        sink: &str,
    ) -> Result<WeightedDigraph> {
        WeightedDigraph::new(pages, categories, read_edge_lines(path)?, sink)
    }

    /// `(source id, target id, weight)` triples for `edges`.
    pub fn edge_lines(&self, edges: &[Edge]) -> Vec<(String, String, f64)> {
        edges
            .iter()
            .map(|e| (self.names[e.source].clone(), self.names[e.target].clone(), e.weight))
            .collect()
    }
}

pub(crate) fn write_edge_lines(path: &Path, names: &[String], edges: &[Edge]) -> Result<()> {
    let mut out = Vec::new();
    for e in edges {
        writeln!(out, "{}\t{}\t{}", names[e.source], names[e.target], e.weight).expect("in-memory write");
    }
    fs::write(path, out).map_err(|e| TesaError::io(format!("writing {}", path.display()), e))
}

pub(crate) fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split_whitespace().collect()
    }
}

pub(crate) fn read_edge_lines(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let content = fs::read_to_string(path).map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
    let mut edges = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| TesaError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields = split_fields(line);
        if fields.len() != 3 {
            return Err(parse_err(format!("expected `source target weight`, got {line:?}")));
        }
        let weight: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad weight {:?}", fields[2])))?;
        edges.push((fields[0].to_string(), fields[1].to_string(), weight));
    }
    Ok(edges)
}

/// Counts of vectors that came out degenerate while weighting edges.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DigraphReport {
    pub degenerate_pages: usize,
    pub degenerate_categories: usize,
}

/// Weight every membership and subcategory edge by the inner product of the
/// endpoint vectors. Degenerate vectors give weight-0 edges and are counted.
///
/// `space` supplies the vectors; `hierarchy` the edges. Pages are dimension
/// indices of `space`, categories indices into `hierarchy.category_ids`.
pub fn build_weighted_digraph(
    space: &EsaSpace<'_>,
    page_ids: &[String],
    hierarchy: &CategoryGraph,
    root: &str,
) -> Result<(WeightedDigraph, DigraphReport)> {
    let dim = space.dim();
    let page_vectors: Vec<Option<SparseVector>> = (0..page_ids.len())
        .into_par_iter()
        .map_init(
            || SparseAccumulator::new(dim),
            |acc, p| space.page_vector_with(p, acc).ok(),
        )
        .collect();
    let category_vectors: Vec<Option<SparseVector>> = (0..hierarchy.category_ids.len())
        .into_par_iter()
        .map_init(
            || SparseAccumulator::new(dim),
            |acc, c| space.category_vector_with(c, acc).ok(),
        )
        .collect();

    let report = DigraphReport {
        degenerate_pages: page_vectors.iter().filter(|v| v.is_none()).count(),
        degenerate_categories: category_vectors.iter().filter(|v| v.is_none()).count(),
    };
    if report.degenerate_pages + report.degenerate_categories > 0 {
        warn!(
            "{} page and {} category vector(s) are degenerate; their edges get weight 0",
            report.degenerate_pages, report.degenerate_categories
        );
    }

    let weight = |a: &Option<SparseVector>, b: &Option<SparseVector>| match (a, b) {
        (Some(a), Some(b)) => a.dot(b).clamp(0.0, 1.0),
        _ => 0.0,
    };
    let n_pages = page_ids.len();
    let mut edges = Vec::new();
    for (p, cats) in hierarchy.page_categories.iter().enumerate() {
        for &c in cats {
            edges.push(Edge {
                source: p,
                target: n_pages + c,
                weight: weight(&page_vectors[p], &category_vectors[c]),
            });
        }
    }
    for (c, parents) in hierarchy.parents.iter().enumerate() {
        for &parent in parents {
            edges.push(Edge {
                source: n_pages + c,
                target: n_pages + parent,
                weight: weight(&category_vectors[c], &category_vectors[parent]),
            });
        }
    }

    let names: Vec<String> = page_ids.iter().chain(&hierarchy.category_ids).cloned().collect();
    debug_assert!(page_ids.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(hierarchy.category_ids.windows(2).all(|w| w[0] < w[1]));
    let sink = n_pages
        + hierarchy
            .category_ids
            .iter()
            .position(|c| c == root)
            .ok_or_else(|| TesaError::unknown("category", root))?;
    Ok((WeightedDigraph::assemble(names, n_pages, edges, sink)?, report))
}
