//! Ordered tree edit distance (Zhang–Shasha) with unit costs on kind labels.

use alloc::vec;
use alloc::vec::Vec;

use crate::syntax::{SyntaxKind, SyntaxNode, SyntaxTree};

/// Postorder view of a tree: labels plus leftmost-leaf indices.
struct Flat {
    labels: Vec<SyntaxKind>,
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl Flat {
    fn new(root: &SyntaxNode) -> Self {
        let mut labels = Vec::new();
        let mut leftmost = Vec::new();
        // explicit stack: (node, next child index, leftmost leaf of node once known)
        let mut stack: Vec<(&SyntaxNode, usize, Option<usize>)> = vec![(root, 0, None)];
        while let Some(top) = stack.last_mut() {
            let (node, next, _) = *top;
            if next < node.children.len() {
                top.1 += 1;
                stack.push((&node.children[next], 0, None));
                continue;
            }
            let (node, _, lm) = stack.pop().unwrap_or((root, 0, None));
            let idx = labels.len();
            let lm = lm.unwrap_or(idx);
            labels.push(node.kind);
            leftmost.push(lm);
            if let Some(parent) = stack.last_mut() {
                if parent.2.is_none() {
                    parent.2 = Some(lm);
                }
            }
        }
        // a keyroot is the highest-numbered node sharing its leftmost leaf
        let mut highest = vec![usize::MAX; labels.len()];
        for (i, &lm) in leftmost.iter().enumerate() {
            highest[lm] = i;
        }
        let mut keyroots: Vec<usize> = highest.into_iter().filter(|&i| i != usize::MAX).collect();
        keyroots.sort_unstable();
        Self { labels, leftmost, keyroots }
    }
}

/// Minimum number of node insertions, deletions and relabelings turning one
/// tree into the other.
pub fn tree_edit_distance(a: &SyntaxNode, b: &SyntaxNode) -> usize {
    let fa = Flat::new(a);
    let fb = Flat::new(b);
    let (na, nb) = (fa.labels.len(), fb.labels.len());
    let mut tree = vec![0usize; na * nb];
    let mut forest = vec![0usize; (na + 1) * (nb + 1)];
    let w = nb + 1;

    for &i in &fa.keyroots {
        for &j in &fb.keyroots {
            let (li, lj) = (fa.leftmost[i], fb.leftmost[j]);
            let (rows, cols) = (i - li + 2, j - lj + 2);
            forest[0] = 0;
            for x in 1..rows {
                forest[x * w] = forest[(x - 1) * w] + 1;
            }
            for y in 1..cols {
                forest[y] = forest[y - 1] + 1;
            }
            for x in 1..rows {
                let di = li + x - 1;
                for y in 1..cols {
                    let dj = lj + y - 1;
                    let delete = forest[(x - 1) * w + y] + 1;
                    let insert = forest[x * w + y - 1] + 1;
                    let value = if fa.leftmost[di] == li && fb.leftmost[dj] == lj {
                        let relabel = usize::from(fa.labels[di] != fb.labels[dj]);
                        let v = delete.min(insert).min(forest[(x - 1) * w + y - 1] + relabel);
                        tree[di * nb + dj] = v;
                        v
                    } else {
                        let px = fa.leftmost[di] - li;
                        let py = fb.leftmost[dj] - lj;
                        delete.min(insert).min(forest[px * w + py] + tree[di * nb + dj])
                    };
                    forest[x * w + y] = value;
                }
            }
        }
    }
    tree[(na - 1) * nb + (nb - 1)]
}

/// Edit distance divided by the total node count of both trees: 0 for
/// identical trees, at most 1.
pub fn ast_distance(gen: &SyntaxTree, reference: &SyntaxTree) -> f64 {
    let d = tree_edit_distance(&gen.root, &reference.root);
    d as f64 / (gen.size() + reference.size()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_syntax;
    use crate::syntax::SyntaxKind as K;
    use proptest::prelude::*;

    fn n(kind: K, children: Vec<SyntaxNode>) -> SyntaxNode {
        SyntaxNode::new(kind, children)
    }

    fn leaf(kind: K) -> SyntaxNode {
        SyntaxNode::leaf(kind)
    }

    /// Preorder labels, parent pointers, and an ancestor table.
    struct Info {
        labels: Vec<K>,
        anc: Vec<Vec<bool>>,
    }

    fn info(t: &SyntaxNode) -> Info {
        fn walk(node: &SyntaxNode, parent: Option<usize>, labels: &mut Vec<K>, parents: &mut Vec<Option<usize>>) {
            let me = labels.len();
            labels.push(node.kind);
            parents.push(parent);
            for c in &node.children {
                walk(c, Some(me), labels, parents);
            }
        }
        let (mut labels, mut parents) = (Vec::new(), Vec::new());
        walk(t, None, &mut labels, &mut parents);
        let n = labels.len();
        let mut anc = vec![vec![false; n]; n];
        for d in 0..n {
            let mut p = parents[d];
            while let Some(a) = p {
                anc[a][d] = true;
                p = parents[a];
            }
        }
        Info { labels, anc }
    }

    /// Minimum cost over every valid mapping (one-to-one, ancestor- and
    /// order-preserving) between the two node sets.
    fn oracle(a: &SyntaxNode, b: &SyntaxNode) -> usize {
        let (ia, ib) = (info(a), info(b));
        let (na, nb) = (ia.labels.len(), ib.labels.len());
        let mut best = na + nb;
        let mut assign = vec![usize::MAX; na];
        fn rec(i: usize, assign: &mut Vec<usize>, used: &mut Vec<bool>, ia: &Info, ib: &Info, best: &mut usize) {
            let na = ia.labels.len();
            if i == na {
                let mut cost = 0;
                let mut mapped = 0;
                for x in 0..na {
                    if assign[x] != usize::MAX {
                        mapped += 1;
                        cost += usize::from(ia.labels[x] != ib.labels[assign[x]]);
                    }
                }
                cost += (na - mapped) + (ib.labels.len() - mapped);
                *best = (*best).min(cost);
                return;
            }
            assign[i] = usize::MAX;
            rec(i + 1, assign, used, ia, ib, best);
            for j in 0..ib.labels.len() {
                if used[j] {
                    continue;
                }
                let ok = (0..i).filter(|&x| assign[x] != usize::MAX).all(|x| {
                    let y = assign[x];
                    ia.anc[x][i] == ib.anc[y][j] && ia.anc[i][x] == ib.anc[j][y] && (x < i) == (y < j)
                });
                if ok {
                    assign[i] = j;
                    used[j] = true;
                    rec(i + 1, assign, used, ia, ib, best);
                    used[j] = false;
                    assign[i] = usize::MAX;
                }
            }
        }
        let mut used = vec![false; nb];
        rec(0, &mut assign, &mut used, &ia, &ib, &mut best);
        best
    }

    #[test]
    fn identity() {
        let t = parse_syntax("def f(a):\n    return a + 1\n");
        assert_eq!(ast_distance(&t, &t), 0.0);
    }

    #[test]
    fn forced_insertions_from_empty_module() {
        let empty = parse_syntax("");
        let r = parse_syntax("x = 1\ny = f(x)\n");
        let extra = r.size() - 1;
        let d = ast_distance(&empty, &r);
        assert_eq!(d, extra as f64 / (1 + r.size()) as f64);
    }

    #[test]
    fn textbook_pair() {
        // f(d(a, c(b)), e) vs f(c(d(a, b)), e): distance 2
        let a = n(K::Module, vec![n(K::Call, vec![leaf(K::Identifier), n(K::Number, vec![leaf(K::String)])]), leaf(K::Pass)]);
        let b = n(K::Module, vec![n(K::Number, vec![n(K::Call, vec![leaf(K::Identifier), leaf(K::String)])]), leaf(K::Pass)]);
        assert_eq!(tree_edit_distance(&a, &b), 2);
        assert_eq!(oracle(&a, &b), 2);
    }

    #[test]
    fn single_nodes() {
        assert_eq!(tree_edit_distance(&leaf(K::Pass), &leaf(K::Pass)), 0);
        assert_eq!(tree_edit_distance(&leaf(K::Pass), &leaf(K::Break)), 1);
    }

    fn tree(max_nodes: usize) -> impl Strategy<Value = SyntaxNode> {
        (1..=max_nodes).prop_flat_map(|size| {
            (
                proptest::collection::vec(proptest::sample::select(&[K::Module, K::Call, K::Pass][..]), size),
                proptest::collection::vec(any::<proptest::sample::Index>(), size),
            )
        })
        .prop_map(|(labels, parents)| build(&labels, &parents))
    }

    fn build(labels: &[K], parents: &[proptest::sample::Index]) -> SyntaxNode {
        // each node hangs off the current rightmost path, so index order is preorder
        let mut nodes: Vec<SyntaxNode> = Vec::new();
        let mut path: Vec<usize> = Vec::new();
        let mut kids: Vec<Vec<usize>> = Vec::new();
        for (i, k) in labels.iter().enumerate() {
            nodes.push(leaf(*k));
            kids.push(Vec::new());
            if i > 0 {
                let depth = parents[i].index(path.len());
                path.truncate(depth + 1);
                let p = path[depth];
                kids[p].push(i);
            }
            path.push(i);
        }
        fn assemble(i: usize, nodes: &[SyntaxNode], kids: &[Vec<usize>]) -> SyntaxNode {
            let ch = kids[i].iter().map(|&c| assemble(c, nodes, kids)).collect();
            SyntaxNode::new(nodes[i].kind, ch)
        }
        assemble(0, &nodes, &kids)
    }

    proptest! {
        #[test]
        fn agrees_with_mapping_search(a in tree(6), b in tree(6)) {
            prop_assert_eq!(tree_edit_distance(&a, &b), oracle(&a, &b));
        }

        #[test]
        fn metric_properties(a in tree(7), b in tree(7), c in tree(7)) {
            let ab = tree_edit_distance(&a, &b);
            prop_assert_eq!(ab, tree_edit_distance(&b, &a));
            prop_assert!(ab <= tree_edit_distance(&a, &c) + tree_edit_distance(&c, &b));
            prop_assert_eq!(tree_edit_distance(&a, &a), 0);
            let (ta, tb) = (SyntaxTree::new(a), SyntaxTree::new(b));
            let d = ast_distance(&ta, &tb);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d > 0.0, !ta.root.same_shape(&tb.root));
        }
    }
}
