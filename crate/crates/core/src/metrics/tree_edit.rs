//! Zhang–Shasha ordered tree edit distance with unit costs.

use crate::expr::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree<L> {
    pub label: L,
    pub children: Vec<Tree<L>>,
}

impl<L> Tree<L> {
    pub fn leaf(label: L) -> Tree<L> {
        Tree {
            label,
            children: Vec::new(),
        }
    }

    pub fn node(label: L, children: Vec<Tree<L>>) -> Tree<L> {
        Tree { label, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }
}

/// Node labels of an expression tree. Constants share one label: slot
/// numbers are positional, not part of the symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Var(usize),
    Const,
    Int(u64),
    Op(BinOp),
    Func(Func),
    Neg,
}

pub fn expr_tree(e: &Expr) -> Tree<NodeLabel> {
    let label = match e {
        Expr::Var(i) => NodeLabel::Var(*i),
        Expr::Const(_) => NodeLabel::Const,
        Expr::Int(v) => NodeLabel::Int(*v),
        Expr::Binary(op, ..) => NodeLabel::Op(*op),
        Expr::Unary(f, _) => NodeLabel::Func(*f),
        Expr::Neg(_) => NodeLabel::Neg,
    };
    Tree::node(label, e.children().into_iter().map(expr_tree).collect())
}

/// Postorder view of a tree: labels, leftmost leaf of each node, keyroots.
struct Postorder<'a, L> {
    labels: Vec<&'a L>,
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a, L> Postorder<'a, L> {
    fn new(tree: &'a Tree<L>) -> Self {
        fn walk<'a, L>(t: &'a Tree<L>, labels: &mut Vec<&'a L>, leftmost: &mut Vec<usize>) -> usize {
            let mut first = None;
            for c in &t.children {
                let l = walk(c, labels, leftmost);
                first.get_or_insert(l);
            }
            let idx = labels.len();
            labels.push(&t.label);
            let l = first.unwrap_or(idx);
            leftmost.push(l);
            l
        }
        let mut labels = Vec::new();
        let mut leftmost = Vec::new();
        walk(tree, &mut labels, &mut leftmost);
        let n = labels.len();
        // a keyroot is the highest node for its leftmost leaf
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Postorder {
            labels,
            leftmost,
            keyroots,
        }
    }
}

/// Minimum number of node insertions, deletions and relabelings turning `a`
/// into `b`.
pub fn tree_distance<L: PartialEq>(a: &Tree<L>, b: &Tree<L>) -> usize {
    let a = Postorder::new(a);
    let b = Postorder::new(b);
    let (n, m) = (a.labels.len(), b.labels.len());
    let mut tree_dist = vec![vec![0usize; m]; n];
    let mut forest = vec![vec![0usize; m + 1]; n + 1];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.leftmost[i], b.leftmost[j]);
            // forest[x][y]: distance between a[li..li+x) and b[lj..lj+y)
            forest[0][0] = 0;
            for x in 1..=i - li + 1 {
                forest[x][0] = forest[x - 1][0] + 1;
            }
            for y in 1..=j - lj + 1 {
                forest[0][y] = forest[0][y - 1] + 1;
            }
            for x in 1..=i - li + 1 {
                let ni = li + x - 1;
                for y in 1..=j - lj + 1 {
                    let nj = lj + y - 1;
                    let del = forest[x - 1][y] + 1;
                    let ins = forest[x][y - 1] + 1;
                    if a.leftmost[ni] == li && b.leftmost[nj] == lj {
                        let relabel = usize::from(a.labels[ni] != b.labels[nj]);
                        let best = del.min(ins).min(forest[x - 1][y - 1] + relabel);
                        forest[x][y] = best;
                        tree_dist[ni][nj] = best;
                    } else {
                        let px = a.leftmost[ni] - li;
                        let py = b.leftmost[nj] - lj;
                        forest[x][y] = del.min(ins).min(forest[px][py] + tree_dist[ni][nj]);
                    }
                }
            }
        }
    }
    tree_dist[n - 1][m - 1]
}

pub fn tree_edit_distance(u: &Expr, v: &Expr) -> usize {
    tree_distance(&expr_tree(u), &expr_tree(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        s.parse().unwrap()
    }

    #[test]
    fn expression_examples() {
        assert_eq!(tree_edit_distance(&e("sin(x)+C"), &e("sin(x)+C")), 0);
        assert_eq!(tree_edit_distance(&e("sin(x)"), &e("x")), 1);
        assert_eq!(tree_edit_distance(&e("x+C"), &e("x*C")), 1);
        assert_eq!(tree_edit_distance(&e("x"), &e("x-x^3/6")), 6);
    }

    #[test]
    fn classic_example() {
        // f(d(a c(b)) e) vs f(c(d(a b)) e), distance 2
        let l = |s: &'static str| Tree::leaf(s);
        let t1 = Tree::node(
            "f",
            vec![Tree::node("d", vec![l("a"), Tree::node("c", vec![l("b")])]), l("e")],
        );
        let t2 = Tree::node(
            "f",
            vec![Tree::node("c", vec![Tree::node("d", vec![l("a"), l("b")])]), l("e")],
        );
        assert_eq!(tree_distance(&t1, &t2), 2);
        assert_eq!(tree_distance(&t2, &t1), 2);
    }

    #[test]
    fn constants_share_a_label() {
        assert_eq!(tree_edit_distance(&e("C+C*x"), &e("C*x+C")), 2);
        assert_eq!(tree_edit_distance(&e("C"), &e("C")), 0);
    }
}
