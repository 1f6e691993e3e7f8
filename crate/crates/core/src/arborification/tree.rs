use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::edmonds::{min_arborescence, min_arborescence_reference, CoreEdge};
use super::{split_fields, NodeKind, WeightedDigraph};
use crate::error::{Result, TesaError};

/// Spanning in-tree: every non-root node has exactly one parent.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTree {
    names: Vec<String>,
    n_pages: usize,
    lookup: HashMap<String, usize>,
    root: usize,
    parent: Vec<Option<usize>>,
    weight: Vec<f64>,
    total_weight: f64,
}

impl SpanningTree {
    /// Assemble from a parent array over `g`'s nodes and check the structure.
    pub fn from_parents(g: &WeightedDigraph, parent: Vec<Option<usize>>, weight: Vec<f64>) -> Result<SpanningTree> {
        let n = g.n_nodes();
        if parent.len() != n || weight.len() != n {
            return Err(TesaError::Invalid("parent array does not match the graph".into()));
        }
        let tree = SpanningTree {
            names: g.names().to_vec(),
            n_pages: g.n_pages(),
            lookup: g.names().iter().enumerate().map(|(i, s)| (s.clone(), i)).collect(),
            root: g.sink(),
            total_weight: (0..n).filter(|&v| parent[v].is_some()).map(|v| weight[v]).sum(),
            parent,
            weight,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// One parent per non-root node, none for the root, and every node reaches
    /// the root.
    pub fn validate(&self) -> Result<()> {
        let n = self.names.len();
        for v in 0..n {
            match (v == self.root, self.parent[v]) {
                (true, Some(_)) => return Err(TesaError::Invalid("root has a parent".into())),
                (false, None) => {
                    return Err(TesaError::Invalid(format!("'{}' has no parent", self.names[v])));
                }
                (_, Some(p)) if p >= n => return Err(TesaError::Invalid("parent out of range".into())),
                _ => {}
            }
        }
        // 0 unknown, 1 in progress, 2 reaches root
        let mut state = vec![0u8; n];
        state[self.root] = 2;
        for v in 0..n {
            let mut path = Vec::new();
            let mut u = v;
            while state[u] == 0 {
                state[u] = 1;
                path.push(u);
                u = self.parent[u].expect("checked above");
            }
            if state[u] == 1 {
                return Err(TesaError::Invalid(format!("cycle through '{}'", self.names[u])));
            }
            for w in path {
                state[w] = 2;
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn root(&self) -> usize {
        self.root
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

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    /// Weight of the edge from `node` to its parent (0 for the root).
    pub fn edge_weight(&self, node: usize) -> f64 {
        if self.parent[node].is_some() {
            self.weight[node]
        } else {
            0.0
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// `[π¹(v), π²(v), …, root]`, excluding `v`.
    pub fn ancestors(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut u = node;
        while let Some(p) = self.parent[u] {
            out.push(p);
            u = p;
        }
        out
    }

    pub fn ancestor_path(&self, id: &str) -> Result<Vec<String>> {
        let node = self.node(id).ok_or_else(|| TesaError::unknown("node", id))?;
        Ok(self
            .ancestors(node)
            .into_iter()
            .map(|v| self.names[v].clone())
            .collect())
    }

    /// `(node, parent, weight)` for every non-root node, sorted by node id.
    pub fn parent_lines(&self) -> Vec<(String, String, f64)> {
        let mut lines: Vec<_> = (0..self.n_nodes())
            .filter_map(|v| self.parent[v].map(|p| (self.names[v].clone(), self.names[p].clone(), self.weight[v])))
            .collect();
        lines.sort_by(|a, b| a.0.cmp(&b.0));
        lines
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (v, p, w) in self.parent_lines() {
            writeln!(out, "{v}\t{p}\t{w}").expect("in-memory write");
        }
        fs::write(path, out).map_err(|e| TesaError::io(format!("writing {}", path.display()), e))
    }

    /// Read a `node parent weight` file over the nodes of `g`.
    pub fn read(path: &Path, g: &WeightedDigraph) -> Result<SpanningTree> {
        let content = fs::read_to_string(path).map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
        let n = g.n_nodes();
        let mut parent = vec![None; n];
        let mut weight = vec![0.0; n];
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| TesaError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let fields = split_fields(line);
            if fields.len() != 3 {
                return Err(parse_err(format!("expected `node parent weight`, got {line:?}")));
            }
            let v = g
                .node(fields[0])
                .ok_or_else(|| parse_err(format!("unknown node {:?}", fields[0])))?;
            let p = g
                .node(fields[1])
                .ok_or_else(|| parse_err(format!("unknown node {:?}", fields[1])))?;
            if parent[v].is_some() {
                return Err(parse_err(format!("second parent for {:?}", fields[0])));
            }
            parent[v] = Some(p);
            weight[v] = fields[2]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad weight {:?}", fields[2])))?;
        }
        SpanningTree::from_parents(g, parent, weight)
    }
}

/// Nodes with no directed path to the sink, by id.
fn unreachable_nodes(g: &WeightedDigraph) -> Vec<String> {
    let n = g.n_nodes();
    let mut incoming = vec![Vec::new(); n];
    for e in g.edges() {
        incoming[e.target].push(e.source);
    }
    let mut seen = vec![false; n];
    seen[g.sink()] = true;
    let mut queue = VecDeque::from([g.sink()]);
    while let Some(v) = queue.pop_front() {
        for &u in &incoming[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    let mut out: Vec<String> = (0..n).filter(|&v| !seen[v]).map(|v| g.name(v).to_string()).collect();
    out.sort();
    out
}

type Solver = fn(usize, usize, &[CoreEdge]) -> Option<Vec<Option<usize>>>;

// In-tree toward the sink = out-arborescence of the reversed graph rooted at
// the sink; maximum weight = minimum of negated weights. Edge index order is
// lexicographic, so equal weights favour the smaller (source, target).
fn solve_intree(g: &WeightedDigraph, solver: Solver) -> Result<SpanningTree> {
    let unreachable = unreachable_nodes(g);
    if !unreachable.is_empty() {
        return Err(TesaError::Unreachable(unreachable));
    }
    let reversed: Vec<CoreEdge> = g
        .edges()
        .iter()
        .map(|e| CoreEdge {
            from: e.target,
            to: e.source,
            cost: -e.weight,
        })
        .collect();
    let chosen = solver(g.n_nodes(), g.sink(), &reversed)
        .ok_or_else(|| TesaError::Invalid("arborescence solver found an unreachable node".into()))?;
    let mut parent = vec![None; g.n_nodes()];
    let mut weight = vec![0.0; g.n_nodes()];
    for (v, edge) in chosen.into_iter().enumerate() {
        if let Some(i) = edge {
            let e = g.edges()[i];
            debug_assert_eq!(e.source, v);
            parent[v] = Some(e.target);
            weight[v] = e.weight;
        }
    }
    SpanningTree::from_parents(g, parent, weight)
}

/// Maximum-weight spanning in-tree rooted at the sink, O(E log V).
pub fn max_spanning_intree(g: &WeightedDigraph) -> Result<SpanningTree> {
    solve_intree(g, min_arborescence)
}

/// Same result via the O(VE) recursive contraction.
pub fn max_spanning_intree_reference(g: &WeightedDigraph) -> Result<SpanningTree> {
    solve_intree(g, min_arborescence_reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(pages: &[&str], cats: &[&str], edges: &[(&str, &str, f64)]) -> WeightedDigraph {
        WeightedDigraph::new(
            pages.iter().map(|s| s.to_string()).collect(),
            cats.iter().map(|s| s.to_string()).collect(),
            edges
                .iter()
                .map(|(a, b, w)| (a.to_string(), b.to_string(), *w))
                .collect(),
            "root",
        )
        .unwrap()
    }

    fn parent_of(t: &SpanningTree, id: &str) -> String {
        t.name(t.parent(t.node(id).unwrap()).unwrap()).to_string()
    }

    #[test]
    fn two_trees_brute_force() {
        let g = graph(
            &[],
            &["a", "b", "root"],
            &[("a", "root", 0.2), ("a", "b", 0.9), ("b", "root", 0.5)],
        );
        for t in [
            max_spanning_intree(&g).unwrap(),
            max_spanning_intree_reference(&g).unwrap(),
        ] {
            assert_eq!(parent_of(&t, "a"), "b");
            assert_eq!(parent_of(&t, "b"), "root");
            assert!((t.total_weight() - 1.4).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_cycle_is_contracted() {
        let g = graph(
            &[],
            &["a", "b", "root"],
            &[("a", "b", 0.9), ("b", "a", 0.8), ("b", "root", 0.1)],
        );
        for t in [
            max_spanning_intree(&g).unwrap(),
            max_spanning_intree_reference(&g).unwrap(),
        ] {
            assert_eq!(parent_of(&t, "a"), "b");
            assert_eq!(parent_of(&t, "b"), "root");
            assert!((t.total_weight() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tree_input_unchanged() {
        let g = graph(&["p"], &["c", "root"], &[("p", "c", 0.25), ("c", "root", 0.5)]);
        let t = max_spanning_intree(&g).unwrap();
        assert_eq!(t.total_weight(), 0.75);
        assert_eq!(t.ancestor_path("p").unwrap(), vec!["c", "root"]);
        assert!(t.ancestor_path("root").unwrap().is_empty());
        assert!(t.ancestor_path("nope").is_err());
    }

    #[test]
    fn unreachable_nodes_are_named() {
        let g = graph(
            &["p", "q"],
            &["c", "d", "root"],
            &[("p", "c", 0.5), ("c", "root", 0.5), ("q", "d", 0.5)],
        );
        match max_spanning_intree(&g) {
            Err(TesaError::Unreachable(nodes)) => assert_eq!(nodes, vec!["d", "q"]),
            other => panic!("expected unreachable error, got {other:?}"),
        }
    }

    #[test]
    fn export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = graph(
            &["p1", "p2"],
            &["c1", "c2", "root"],
            &[
                ("p1", "c1", 0.7),
                ("p1", "c2", 0.2),
                ("p2", "c2", 0.3),
                ("c1", "root", 0.1),
                ("c2", "c1", 0.4),
                ("c2", "root", 0.3),
            ],
        );
        let t = max_spanning_intree(&g).unwrap();
        let path = dir.path().join("tree.tsv");
        t.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let first: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(first, vec!["c1", "c2", "p1", "p2"]);
        assert_eq!(SpanningTree::read(&path, &g).unwrap(), t);
    }
}
