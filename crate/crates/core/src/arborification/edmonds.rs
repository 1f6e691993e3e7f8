//! Minimum-cost arborescence (Chu-Liu/Edmonds).
//!
//! Edges here point away from the root. [`min_arborescence`] is the
//! O(E log V) contraction algorithm with mergeable heaps and a rollback
//! union-find; [`min_arborescence_reference`] is the textbook recursive
//! O(VE) version kept for differential testing.
//!
//! Both return, for every node, the index of its selected incoming edge
//! (`None` for the root), or `None` overall if some node is unreachable.
//! Equal costs are resolved in favour of the lower edge index.

use std::cmp::Ordering;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CoreEdge {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

const NIL: usize = usize::MAX;

fn key_cmp(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Arena of leftist heap nodes with lazy additive updates.
struct LeftistHeap {
    cost: Vec<f64>,
    edge: Vec<usize>,
    lazy: Vec<f64>,
    left: Vec<usize>,
    right: Vec<usize>,
    rank: Vec<u32>,
}

impl LeftistHeap {
    fn with_capacity(n: usize) -> Self {
        LeftistHeap {
            cost: Vec::with_capacity(n),
            edge: Vec::with_capacity(n),
            lazy: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            right: Vec::with_capacity(n),
            rank: Vec::with_capacity(n),
        }
    }

    fn make(&mut self, cost: f64, edge: usize) -> usize {
        self.cost.push(cost);
        self.edge.push(edge);
        self.lazy.push(0.0);
        self.left.push(NIL);
        self.right.push(NIL);
        self.rank.push(1);
        self.cost.len() - 1
    }

    fn rank_of(&self, node: usize) -> u32 {
        if node == NIL {
            0
        } else {
            self.rank[node]
        }
    }

    fn push_down(&mut self, node: usize) {
        let delta = self.lazy[node];
        if delta != 0.0 {
            self.cost[node] += delta;
            for child in [self.left[node], self.right[node]] {
                if child != NIL {
                    self.lazy[child] += delta;
                }
            }
            self.lazy[node] = 0.0;
        }
    }

    // recursion follows right spines only, so depth stays logarithmic
    fn merge(&mut self, a: usize, b: usize) -> usize {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        self.push_down(a);
        self.push_down(b);
        let (a, b) = if key_cmp((self.cost[b], self.edge[b]), (self.cost[a], self.edge[a])) == Ordering::Less {
            (b, a)
        } else {
            (a, b)
        };
        let merged = self.merge(self.right[a], b);
        self.right[a] = merged;
        if self.rank_of(self.left[a]) < self.rank_of(self.right[a]) {
            let (l, r) = (self.left[a], self.right[a]);
            (self.left[a], self.right[a]) = (r, l);
        }
        self.rank[a] = self.rank_of(self.right[a]) + 1;
        a
    }

    fn pop(&mut self, node: usize) -> usize {
        self.push_down(node);
        self.merge(self.left[node], self.right[node])
    }
}

struct RollbackUnionFind {
    // negative size for roots, parent index otherwise
    parent: Vec<isize>,
    history: Vec<(usize, isize)>,
}

impl RollbackUnionFind {
    fn new(n: usize) -> Self {
        RollbackUnionFind {
            parent: vec![-1; n],
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] >= 0 {
            x = self.parent[x] as usize;
        }
        x
    }

    fn time(&self) -> usize {
        self.history.len()
    }

    fn rollback(&mut self, t: usize) {
        while self.history.len() > t {
            let (i, v) = self.history.pop().unwrap();
            self.parent[i] = v;
        }
    }

    fn join(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.parent[a] > self.parent[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.history.push((a, self.parent[a]));
        self.history.push((b, self.parent[b]));
        self.parent[a] += self.parent[b];
        self.parent[b] = a as isize;
        true
    }
}

/// O(E log V) minimum-cost arborescence rooted at `root`.
pub fn min_arborescence(n: usize, root: usize, edges: &[CoreEdge]) -> Option<Vec<Option<usize>>> {
    let mut heap = LeftistHeap::with_capacity(edges.len());
    let mut queues = vec![NIL; n];
    for (i, e) in edges.iter().enumerate() {
        if e.to == root || e.from == e.to {
            continue;
        }
        let node = heap.make(e.cost, i);
        queues[e.to] = heap.merge(queues[e.to], node);
    }

    let mut uf = RollbackUnionFind::new(n);
    let mut seen: Vec<isize> = vec![-1; n];
    seen[root] = root as isize;
    let mut path = vec![0usize; n];
    let mut chosen = vec![0usize; n];
    let mut incoming: Vec<Option<usize>> = vec![None; n];
    let mut contractions: Vec<(usize, usize, Vec<usize>)> = Vec::new();

    for start in 0..n {
        let mut u = start;
        let mut depth = 0;
        while seen[u] < 0 {
            let top = queues[u];
            if top == NIL {
                return None;
            }
            heap.push_down(top);
            let (cost, edge) = (heap.cost[top], heap.edge[top]);
            // reduce every remaining candidate of this (super)node by the chosen cost
            heap.lazy[top] -= cost;
            queues[u] = heap.pop(top);
            chosen[depth] = edge;
            path[depth] = u;
            depth += 1;
            seen[u] = start as isize;
            u = uf.find(edges[edge].from);
            if seen[u] == start as isize {
                let mut merged = NIL;
                let end = depth;
                let time = uf.time();
                loop {
                    depth -= 1;
                    let w = path[depth];
                    merged = heap.merge(merged, queues[w]);
                    if !uf.join(u, w) {
                        break;
                    }
                }
                u = uf.find(u);
                queues[u] = merged;
                seen[u] = -1;
                contractions.push((u, time, chosen[depth..end].to_vec()));
            }
        }
        for &edge in &chosen[..depth] {
            incoming[uf.find(edges[edge].to)] = Some(edge);
        }
    }

    // expand contracted cycles, most recent first
    for (u, time, cycle) in contractions.iter().rev() {
        uf.rollback(*time);
        let entering = incoming[*u].expect("contracted node has an entering edge");
        for &edge in cycle {
            incoming[uf.find(edges[edge].to)] = Some(edge);
        }
        incoming[uf.find(edges[entering].to)] = Some(entering);
    }
    Some(incoming)
}

#[derive(Copy, Clone, Debug)]
struct KeyedEdge {
    from: usize,
    to: usize,
    cost: f64,
    // original edge index: tie-break key and expansion target
    key: usize,
}

/// Recursive O(VE) contraction: pick the cheapest incoming edge per node,
/// contract every cycle, recurse, expand.
pub fn min_arborescence_reference(n: usize, root: usize, edges: &[CoreEdge]) -> Option<Vec<Option<usize>>> {
    let keyed: Vec<KeyedEdge> = edges
        .iter()
        .enumerate()
        .map(|(i, e)| KeyedEdge {
            from: e.from,
            to: e.to,
            cost: e.cost,
            key: i,
        })
        .collect();
    let selected = contract_and_solve(n, root, &keyed)?;
    Some(selected.into_iter().map(|k| k.map(|i| keyed[i].key)).collect())
}

/// Returns indices into `edges`.
fn contract_and_solve(n: usize, root: usize, edges: &[KeyedEdge]) -> Option<Vec<Option<usize>>> {
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (i, e) in edges.iter().enumerate() {
        if e.to == root || e.from == e.to {
            continue;
        }
        let better = match best[e.to] {
            None => true,
            Some(j) => key_cmp((e.cost, e.key), (edges[j].cost, edges[j].key)) == Ordering::Less,
        };
        if better {
            best[e.to] = Some(i);
        }
    }
    if (0..n).any(|v| v != root && best[v].is_none()) {
        return None;
    }

    // label cycles of the best-parent graph
    let mut cycle_of: Vec<Option<usize>> = vec![None; n];
    let mut state = vec![0u8; n]; // 0 new, 1 on current walk, 2 done
    let mut n_cycles = 0;
    for v in 0..n {
        let mut walk = Vec::new();
        let mut u = v;
        while state[u] == 0 && u != root {
            state[u] = 1;
            walk.push(u);
            u = edges[best[u].unwrap()].from;
        }
        if u != root && state[u] == 1 {
            let mut w = u;
            loop {
                cycle_of[w] = Some(n_cycles);
                w = edges[best[w].unwrap()].from;
                if w == u {
                    break;
                }
            }
            n_cycles += 1;
        }
        for w in walk {
            state[w] = 2;
        }
    }
    if n_cycles == 0 {
        return Some(best);
    }

    // contracted ids: cycles first, then the remaining nodes in order
    let mut component = vec![0usize; n];
    let mut next = n_cycles;
    for v in 0..n {
        component[v] = match cycle_of[v] {
            Some(c) => c,
            None => {
                next += 1;
                next - 1
            }
        };
    }
    let mut reduced = Vec::new();
    let mut origin = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        let (cf, ct) = (component[e.from], component[e.to]);
        if cf == ct {
            continue;
        }
        let cost = match cycle_of[e.to] {
            Some(_) => e.cost - edges[best[e.to].unwrap()].cost,
            None => e.cost,
        };
        reduced.push(KeyedEdge {
            from: cf,
            to: ct,
            cost,
            key: e.key,
        });
        origin.push(i);
    }
    let sub = contract_and_solve(next, component[root], &reduced)?;

    let mut result: Vec<Option<usize>> = vec![None; n];
    for choice in sub.into_iter().flatten() {
        let original = origin[choice];
        result[edges[original].to] = Some(original);
    }
    for v in 0..n {
        if cycle_of[v].is_some() && result[v].is_none() {
            result[v] = best[v];
        }
    }
    Some(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(from: usize, to: usize, cost: f64) -> CoreEdge {
        CoreEdge { from, to, cost }
    }

    fn total(edges: &[CoreEdge], sel: &[Option<usize>]) -> f64 {
        sel.iter().flatten().map(|&i| edges[i].cost).sum()
    }

    #[test]
    fn simple_cycle_contraction() {
        // root 0; 1 ⇄ 2 cheap cycle, expensive entries from the root
        let edges = vec![e(0, 1, 10.0), e(0, 2, 12.0), e(1, 2, 1.0), e(2, 1, 1.0)];
        for solve in [min_arborescence, min_arborescence_reference] {
            let sel = solve(3, 0, &edges).unwrap();
            assert_eq!(sel[0], None);
            assert_eq!(total(&edges, &sel), 11.0);
            assert_eq!(sel[1], Some(0));
            assert_eq!(sel[2], Some(2));
        }
    }

    #[test]
    fn unreachable_node() {
        let edges = vec![e(0, 1, 1.0)];
        assert!(min_arborescence(3, 0, &edges).is_none());
        assert!(min_arborescence_reference(3, 0, &edges).is_none());
    }

    #[test]
    fn ties_prefer_lower_edge_index() {
        let edges = vec![e(0, 2, 1.0), e(1, 2, 1.0), e(0, 1, 1.0)];
        for solve in [min_arborescence, min_arborescence_reference] {
            let sel = solve(3, 0, &edges).unwrap();
            assert_eq!(sel[2], Some(0));
        }
    }

    #[test]
    fn nested_cycles() {
        // two-level contraction: {1,2} forms a cycle, then with 3 a larger one
        let edges = vec![
            e(0, 1, 20.0),
            e(1, 2, 1.0),
            e(2, 1, 1.0),
            e(2, 3, 2.0),
            e(3, 1, 2.0),
            e(0, 3, 15.0),
            e(0, 2, 30.0),
        ];
        let a = min_arborescence(4, 0, &edges).unwrap();
        let b = min_arborescence_reference(4, 0, &edges).unwrap();
        assert_eq!(total(&edges, &a), total(&edges, &b));
        assert_eq!(total(&edges, &a), 18.0);
    }
}
