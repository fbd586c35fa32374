//! Zhang–Shasha against an exhaustive shortest-path search.
//!
//! Every ordered forest with at most four nodes over a three-letter alphabet
//! is a vertex; deletions (children move up into the parent's place),
//! insertions (their reverse) and relabellings are unit edges. With unit
//! costs an optimal script can delete first, relabel, then insert, so no
//! intermediate forest is larger than the bigger endpoint.

use std::collections::{HashMap, VecDeque};

use bedkit::metrics::tree_edit::{tree_distance, Tree};

const MAX_NODES: usize = 4;
const LABELS: u8 = 3;

/// Preorder list of (label, depth); roots sit at depth 0.
type Forest = Vec<(u8, u8)>;

fn all_forests() -> Vec<Forest> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Forest> = vec![Vec::new()];
    for _ in 0..MAX_NODES {
        let mut next = Vec::new();
        for f in &frontier {
            let max_depth = f.last().map_or(0, |&(_, d)| d + 1);
            for d in 0..=max_depth {
                for l in 0..LABELS {
                    let mut g = f.clone();
                    g.push((l, d));
                    next.push(g);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn delete(f: &Forest, k: usize) -> Forest {
    let d = f[k].1;
    let mut g = f.clone();
    let mut m = k + 1;
    while m < g.len() && g[m].1 > d {
        g[m].1 -= 1;
        m += 1;
    }
    g.remove(k);
    g
}

fn neighbours(f: &Forest, deletes: &HashMap<Forest, Vec<Forest>>, inserts: &HashMap<Forest, Vec<Forest>>) -> Vec<Forest> {
    let mut out = Vec::new();
    for k in 0..f.len() {
        for l in 0..LABELS {
            if l != f[k].0 {
                let mut g = f.clone();
                g[k].0 = l;
                out.push(g);
            }
        }
    }
    out.extend(deletes[f].iter().cloned());
    if let Some(up) = inserts.get(f) {
        out.extend(up.iter().cloned());
    }
    out
}

fn to_tree(f: &[(u8, u8)]) -> Tree<u8> {
    fn build(f: &[(u8, u8)], at: &mut usize) -> Tree<u8> {
        let (label, depth) = f[*at];
        *at += 1;
        let mut children = Vec::new();
        while *at < f.len() && f[*at].1 == depth + 1 {
            children.push(build(f, at));
        }
        Tree::node(label, children)
    }
    let mut at = 0;
    let t = build(f, &mut at);
    assert_eq!(at, f.len());
    t
}

/// Outcome of comparing Zhang–Shasha with the search on every tree pair.
pub struct Comparison {
    pub pairs: usize,
    pub mismatches: Vec<String>,
}

pub fn compare_all_small_trees() -> Comparison {
    let forests = all_forests();
    assert_eq!(forests.len(), 1 + 3 + 18 + 135 + 1134);
    let mut deletes: HashMap<Forest, Vec<Forest>> = HashMap::new();
    let mut inserts: HashMap<Forest, Vec<Forest>> = HashMap::new();
    for f in &forests {
        let down: Vec<Forest> = (0..f.len()).map(|k| delete(f, k)).collect();
        for g in &down {
            inserts.entry(g.clone()).or_default().push(f.clone());
        }
        deletes.insert(f.clone(), down);
    }
    let trees: Vec<&Forest> = forests
        .iter()
        .filter(|f| !f.is_empty() && f.iter().filter(|(_, d)| *d == 0).count() == 1)
        .collect();
    assert_eq!(trees.len(), 471);
    let built: Vec<Tree<u8>> = trees.iter().map(|f| to_tree(f)).collect();

    let mut out = Comparison {
        pairs: 0,
        mismatches: Vec::new(),
    };
    for (a, source) in trees.iter().enumerate() {
        let mut dist: HashMap<Forest, usize> = HashMap::new();
        dist.insert((*source).clone(), 0);
        let mut queue = VecDeque::from([(*source).clone()]);
        while let Some(f) = queue.pop_front() {
            let d = dist[&f];
            for g in neighbours(&f, &deletes, &inserts) {
                dist.entry(g.clone()).or_insert_with(|| {
                    queue.push_back(g);
                    d + 1
                });
            }
        }
        for (b, target) in trees.iter().enumerate() {
            let expected = dist[*target];
            let got = tree_distance(&built[a], &built[b]);
            if got != expected {
                out.mismatches.push(format!("{source:?} -> {target:?}: {got} vs {expected}"));
            }
            out.pairs += 1;
        }
    }
    out
}
