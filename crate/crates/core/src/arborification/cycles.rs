use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Edge, WeightedDigraph};

/// Tarjan's algorithm, iterative. Components come out in reverse
/// topological order; nodes within a component are sorted.
pub fn strongly_connected_components(g: &WeightedDigraph) -> Vec<Vec<usize>> {
    let n = g.n_nodes();
    let out = g.out_edges();
    let edges = g.edges();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0;
    // (node, next out-edge position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for start in 0..n {
        if index[start] != UNVISITED {
            continue;
        }
        call.push((start, 0));
        while let Some(&(v, pos)) = call.last() {
            if pos == 0 && index[v] == UNVISITED {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if pos < out[v].len() {
                let w = edges[out[v][pos]].target;
                call.last_mut().expect("frame").1 += 1;
                if index[w] == UNVISITED {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                component.sort_unstable();
                components.push(component);
            }
        }
    }
    components
}

pub fn is_acyclic(g: &WeightedDigraph) -> bool {
    // Kahn's algorithm
    let n = g.n_nodes();
    let mut indegree = vec![0usize; n];
    for e in g.edges() {
        indegree[e.target] += 1;
    }
    let out = g.out_edges();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut done = 0;
    while let Some(v) = ready.pop() {
        done += 1;
        for &i in &out[v] {
            let t = g.edges()[i].target;
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push(t);
            }
        }
    }
    done == n
}

/// Within every non-trivial strongly connected component, drop the
/// lowest-weight internal edge (ties: lexicographic `(source, target)`) and
/// recompute, until no cycle remains. An edge whose removal would cut its
/// source off from the sink is passed over for the next lightest; some node
/// of each component has an edge leaving it, so a candidate always exists
/// when the sink was reachable. Removed edges are returned in edge order.
pub fn break_cycles(g: &WeightedDigraph) -> (WeightedDigraph, Vec<Edge>) {
    let mut current = g.clone();
    let mut removed: Vec<Edge> = Vec::new();
    loop {
        let components: Vec<Vec<usize>> = strongly_connected_components(&current)
            .into_iter()
            .filter(|c| c.len() > 1)
            .collect();
        if components.is_empty() {
            break;
        }
        let mut component_of = vec![usize::MAX; current.n_nodes()];
        for (k, component) in components.iter().enumerate() {
            for &v in component {
                component_of[v] = k;
            }
        }
        let mut internal: Vec<Vec<usize>> = vec![Vec::new(); components.len()];
        for (i, e) in current.edges().iter().enumerate() {
            let k = component_of[e.source];
            if k != usize::MAX && component_of[e.target] == k {
                internal[k].push(i);
            }
        }
        // components are disjoint, so one removal cannot affect another's
        // candidates; safety is still checked against the updated graph
        let mut alive = vec![true; current.edges().len()];
        let mut batch = Vec::new();
        for mut candidates in internal {
            // stable sort keeps edge order as the tie-break
            candidates.sort_by(|&a, &b| current.edges()[a].weight.total_cmp(&current.edges()[b].weight));
            let pick = candidates
                .iter()
                .copied()
                .find(|&i| keeps_sink_reachable(&current, &alive, i))
                .unwrap_or(candidates[0]);
            alive[pick] = false;
            batch.push(current.edges()[pick]);
        }
        current = current.without_edges(&batch);
        removed.extend(batch);
    }
    let order = |e: &Edge| (g.name(e.source).to_string(), g.name(e.target).to_string());
    removed.sort_by_key(order);
    (current, removed)
}

/// Whether dropping edge `i` leaves its source able to reach the sink, given
/// that it could before. Sources that could not reach it lose nothing.
fn keeps_sink_reachable(g: &WeightedDigraph, alive: &[bool], i: usize) -> bool {
    let out = g.out_edges();
    let reaches = |skip: Option<usize>| {
        let source = g.edges()[i].source;
        let mut seen = vec![false; g.n_nodes()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(v) = stack.pop() {
            if v == g.sink() {
                return true;
            }
            for &j in &out[v] {
                let t = g.edges()[j].target;
                if alive[j] && Some(j) != skip && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        false
    };
    !reaches(None) || reaches(Some(i))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleCensus {
    pub walks: usize,
    pub walks_with_cycle: usize,
    pub paths_with_cycle_fraction: f64,
    /// Distinct cycles, each rotated to start at its smallest node id.
    pub cycles: Vec<Vec<String>>,
}

/// Random upward walks from uniformly sampled pages (with replacement). At
/// each node one outgoing edge is drawn uniformly; the walk stops at a node
/// without outgoing edges or on the first revisit, which closes a cycle.
pub fn random_walk_cycle_census(g: &WeightedDigraph, seed: u64, starts: usize) -> CycleCensus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = g.out_edges();
    let mut cycles: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut walks_with_cycle = 0;
    let mut walks = 0;
    let mut position = vec![usize::MAX; g.n_nodes()];
    if g.n_pages() > 0 {
        for _ in 0..starts {
            walks += 1;
            let mut path: Vec<usize> = Vec::new();
            let mut v = rng.random_range(0..g.n_pages());
            loop {
                if position[v] != usize::MAX {
                    let cycle = &path[position[v]..];
                    let names: Vec<String> = cycle.iter().map(|&u| g.name(u).to_string()).collect();
                    let pivot = (0..names.len()).min_by_key(|&i| &names[i]).unwrap_or(0);
                    let mut rotated = names[pivot..].to_vec();
                    rotated.extend_from_slice(&names[..pivot]);
                    cycles.insert(rotated);
                    walks_with_cycle += 1;
                    break;
                }
                position[v] = path.len();
                path.push(v);
                if out[v].is_empty() {
                    break;
                }
                let pick = out[v][rng.random_range(0..out[v].len())];
                v = g.edges()[pick].target;
            }
            for u in path {
                position[u] = usize::MAX;
            }
        }
    }
    CycleCensus {
        walks,
        walks_with_cycle,
        paths_with_cycle_fraction: if walks == 0 {
            0.0
        } else {
            walks_with_cycle as f64 / walks as f64
        },
        cycles: cycles.into_iter().collect(),
    }
}
