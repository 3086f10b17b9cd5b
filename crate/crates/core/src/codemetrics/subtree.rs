//! Subtree-membership matching between two syntax trees.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::syntax::{SyntaxKind, SyntaxNode, SyntaxTree};

/// Hash-consing table: equal ids mean equal shape and kind labels.
#[derive(Default)]
struct ShapeTable {
    ids: BTreeMap<(SyntaxKind, Vec<u32>), u32>,
}

impl ShapeTable {
    /// Interns every subtree under `node`, returning the id of `node` and
    /// pushing all ids (postorder) into `out`.
    fn intern(&mut self, node: &SyntaxNode, out: &mut Vec<u32>) -> u32 {
        let children: Vec<u32> = node.children.iter().map(|c| self.intern(c, out)).collect();
        let next = self.ids.len() as u32;
        let id = *self.ids.entry((node.kind, children)).or_insert(next);
        out.push(id);
        id
    }
}

/// Fraction of reference nodes whose full subtree (kind labels only) occurs
/// somewhere in `gen`.
///
/// A single-node reference scores 1 when `gen` has any node of that kind.
pub fn syntax_match(gen: &SyntaxTree, reference: &SyntaxTree) -> f64 {
    if reference.root.children.is_empty() {
        let kind = reference.root.kind;
        return if gen.iter().any(|n| n.kind == kind) { 1.0 } else { 0.0 };
    }
    let mut table = ShapeTable::default();
    let mut gen_ids = Vec::new();
    table.intern(&gen.root, &mut gen_ids);
    let present: BTreeSet<u32> = gen_ids.into_iter().collect();
    let mut ref_ids = Vec::new();
    table.intern(&reference.root, &mut ref_ids);
    let matched = ref_ids.iter().filter(|id| present.contains(id)).count();
    matched as f64 / ref_ids.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_syntax;
    use crate::syntax::SyntaxKind as K;
    use alloc::vec;
    use proptest::prelude::*;

    fn n(kind: K, children: Vec<SyntaxNode>) -> SyntaxNode {
        SyntaxNode::new(kind, children)
    }

    fn leaf(kind: K) -> SyntaxNode {
        SyntaxNode::leaf(kind)
    }

    /// Enumerates reference nodes and asks, for each, whether some gen node has
    /// the same shape by direct pairwise comparison.
    fn oracle(gen: &SyntaxTree, r: &SyntaxTree) -> f64 {
        let gen_nodes: Vec<&SyntaxNode> = gen.iter().collect();
        let ref_nodes: Vec<&SyntaxNode> = r.iter().collect();
        if ref_nodes.len() == 1 {
            return if gen_nodes.iter().any(|g| g.kind == r.root.kind) { 1.0 } else { 0.0 };
        }
        let hits = ref_nodes.iter().filter(|rn| gen_nodes.iter().any(|g| g.same_shape(rn))).count();
        hits as f64 / ref_nodes.len() as f64
    }

    #[test]
    fn identity() {
        let t = parse_syntax("class A(Scene):\n    def construct(self):\n        self.add(Circle())\n");
        assert_eq!(syntax_match(&t, &t), 1.0);
    }

    #[test]
    fn single_node_reference() {
        let gen = SyntaxTree::new(n(K::Module, vec![n(K::ExprStmt, vec![leaf(K::Identifier)])]));
        assert_eq!(syntax_match(&gen, &SyntaxTree::new(leaf(K::Identifier))), 1.0);
        assert_eq!(syntax_match(&gen, &SyntaxTree::new(leaf(K::Module))), 1.0);
        assert_eq!(syntax_match(&gen, &SyntaxTree::new(leaf(K::Number))), 0.0);
    }

    #[test]
    fn three_of_five_subtrees() {
        // ref: Module(Assign(Identifier, Number), Pass) has 5 nodes.
        let r = SyntaxTree::new(n(
            K::Module,
            vec![n(K::Assign, vec![leaf(K::Identifier), leaf(K::Number)]), leaf(K::Pass)],
        ));
        // gen has Identifier, Number and Pass leaves but neither the Assign
        // shape nor the Module shape.
        let gen = SyntaxTree::new(n(
            K::Module,
            vec![n(K::Assign, vec![leaf(K::Identifier), leaf(K::String)]), leaf(K::Number), leaf(K::Pass)],
        ));
        let want = oracle(&gen, &r);
        assert_eq!(want, 0.6);
        assert_eq!(syntax_match(&gen, &r), want);
    }

    fn tree(depth: u32) -> impl Strategy<Value = SyntaxNode> {
        const KINDS: [K; 5] = [K::Module, K::Assign, K::Identifier, K::Number, K::Call];
        let leaf_s = proptest::sample::select(&KINDS[..]).prop_map(SyntaxNode::leaf);
        leaf_s.prop_recursive(depth, 12, 3, move |inner| {
            (proptest::sample::select(&KINDS[..]), proptest::collection::vec(inner, 1..3))
                .prop_map(|(k, ch)| SyntaxNode::new(k, ch))
        })
    }

    proptest! {
        #[test]
        fn agrees_with_pairwise_oracle(a in tree(3), b in tree(3)) {
            let (a, b) = (SyntaxTree::new(a), SyntaxTree::new(b));
            prop_assert_eq!(syntax_match(&a, &b), oracle(&a, &b));
            prop_assert_eq!(syntax_match(&a, &a), 1.0);
            let v = syntax_match(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
