//! Internal pair representation for alignment search: interned roles and
//! constants, a dense instance-credit matrix, and hashed relation /
//! attribute indexes so one mapping evaluation is a linear pass.

use std::collections::HashMap;

use crate::amr::{AmrGraph, NodeRef};

use super::similarity::ConceptSimilarity;

pub(super) struct PairProblem {
    pub na: usize,
    pub nb: usize,
    /// Assignment domain: `nb` real targets plus null slots when `na > nb`.
    pub domain: usize,
    /// Instance credit for mapping A-var i onto B-var j, row-major.
    sim: Vec<f64>,
    root_a: usize,
    root_b: usize,
    rel_a: Vec<(usize, u32, usize)>,
    rel_b: HashMap<(usize, u32, usize), u32>,
    attr_a: Vec<(usize, u32, u32)>,
    attr_b: HashMap<(usize, u32, u32), u32>,
    /// A carries duplicate relation/attribute triples, forcing multiset
    /// min-counting instead of plain lookups.
    dup_rel: bool,
    dup_attr: bool,
    pub total_a: f64,
    pub total_b: f64,
}

#[derive(Default)]
struct Interner {
    map: HashMap<String, u32>,
}

impl Interner {
    fn get(&mut self, s: &str) -> u32 {
        let next = self.map.len() as u32;
        *self.map.entry(s.to_string()).or_insert(next)
    }
}

impl PairProblem {
    pub fn new(a: &AmrGraph, b: &AmrGraph, sim_fn: &ConceptSimilarity) -> Self {
        let na = a.concept_node_count();
        let nb = b.concept_node_count();
        let mut roles = Interner::default();
        let mut consts = Interner::default();

        let mut sim = vec![0.0; na * nb];
        for i in 0..na {
            for j in 0..nb {
                sim[i * nb + j] = sim_fn.credit(
                    a.concept(crate::amr::NodeId::from_index(i)),
                    b.concept(crate::amr::NodeId::from_index(j)),
                );
            }
        }

        let mut rel_a = Vec::new();
        let mut attr_a = Vec::new();
        for e in a.edges() {
            let role = roles.get(&e.role);
            match &e.target {
                NodeRef::Node(t) => rel_a.push((e.source.index(), role, t.index())),
                NodeRef::Constant(c) => {
                    attr_a.push((e.source.index(), role, consts.get(&c.to_token())))
                }
            }
        }
        let mut rel_b: HashMap<(usize, u32, usize), u32> = HashMap::new();
        let mut attr_b: HashMap<(usize, u32, u32), u32> = HashMap::new();
        for e in b.edges() {
            let role = roles.get(&e.role);
            match &e.target {
                NodeRef::Node(t) => {
                    *rel_b.entry((e.source.index(), role, t.index())).or_insert(0) += 1
                }
                NodeRef::Constant(c) => {
                    *attr_b
                        .entry((e.source.index(), role, consts.get(&c.to_token())))
                        .or_insert(0) += 1
                }
            }
        }

        let dup_rel = has_dups(&rel_a);
        let dup_attr = has_dups(&attr_a);
        let total_a = (na + 1 + rel_a.len() + attr_a.len()) as f64;
        let total_b = (nb + 1 + b.edge_count()) as f64;

        PairProblem {
            na,
            nb,
            domain: nb.max(na),
            sim,
            root_a: a.root().index(),
            root_b: b.root().index(),
            rel_a,
            rel_b,
            attr_a,
            attr_b,
            dup_rel,
            dup_attr,
            total_a,
            total_b,
        }
    }

    #[inline]
    pub fn instance_credit(&self, i: usize, j: usize) -> f64 {
        self.sim[i * self.nb + j]
    }

    #[inline]
    fn mapped(&self, m: &[usize], i: usize) -> Option<usize> {
        let v = m[i];
        (v < self.nb).then_some(v)
    }

    /// Total matched credit of an injective mapping (`m[i] >= nb` = null).
    pub fn score_mapping(&self, m: &[usize]) -> f64 {
        let (node, edge) = self.score_parts(m);
        node + edge
    }

    /// Matched credit split into (instance, top+relation+attribute) parts.
    pub fn score_parts(&self, m: &[usize]) -> (f64, f64) {
        let mut node = 0.0;
        for i in 0..self.na {
            if let Some(j) = self.mapped(m, i) {
                node += self.instance_credit(i, j);
            }
        }
        let mut edge = 0.0;
        if self.mapped(m, self.root_a) == Some(self.root_b) {
            edge += 1.0;
        }
        if self.dup_rel {
            let mut tally: HashMap<(usize, u32, usize), u32> = HashMap::new();
            for &(s, r, t) in &self.rel_a {
                if let (Some(ms), Some(mt)) = (self.mapped(m, s), self.mapped(m, t)) {
                    *tally.entry((ms, r, mt)).or_insert(0) += 1;
                }
            }
            for (key, ca) in tally {
                let cb = self.rel_b.get(&key).copied().unwrap_or(0);
                edge += ca.min(cb) as f64;
            }
        } else {
            for &(s, r, t) in &self.rel_a {
                if let (Some(ms), Some(mt)) = (self.mapped(m, s), self.mapped(m, t)) {
                    if self.rel_b.contains_key(&(ms, r, mt)) {
                        edge += 1.0;
                    }
                }
            }
        }
        if self.dup_attr {
            let mut tally: HashMap<(usize, u32, u32), u32> = HashMap::new();
            for &(s, r, c) in &self.attr_a {
                if let Some(ms) = self.mapped(m, s) {
                    *tally.entry((ms, r, c)).or_insert(0) += 1;
                }
            }
            for (key, ca) in tally {
                let cb = self.attr_b.get(&key).copied().unwrap_or(0);
                edge += ca.min(cb) as f64;
            }
        } else {
            for &(s, r, c) in &self.attr_a {
                if let Some(ms) = self.mapped(m, s) {
                    if self.attr_b.contains_key(&(ms, r, c)) {
                        edge += 1.0;
                    }
                }
            }
        }
        (node, edge)
    }

    /// Instance-triple totals (node level) and edge-level totals
    /// (top + relations + attributes) for the per-kind breakdown.
    pub fn level_totals(&self) -> ((f64, f64), (f64, f64)) {
        let node = (self.na as f64, self.nb as f64);
        let edge = (
            self.total_a - self.na as f64,
            self.total_b - self.nb as f64,
        );
        (node, edge)
    }
}

fn has_dups<T: Ord + Copy>(items: &[T]) -> bool {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}
