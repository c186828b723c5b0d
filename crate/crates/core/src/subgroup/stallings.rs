//! Folded core graphs of finitely generated subgroups of a free group.

use crate::group::{Letter, Word};
use crate::{Error, Result};
use std::collections::VecDeque;

/// A folded, trimmed Stallings graph. Edges carry positive labels only; a
/// negative letter is read backwards along its edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StallingsGraph {
    rank: usize,
    num_vertices: usize,
    /// `(source, generator, target)`, sorted.
    edges: Vec<(usize, usize, usize)>,
    out: Vec<Vec<Option<usize>>>,
    inc: Vec<Vec<Option<usize>>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; the lower id survives.
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.0[hi] = lo;
    }
}

impl StallingsGraph {
    /// Builds the bouquet of generator petals at the basepoint `0` and folds
    /// it to a fixed point, always merging the conflict with the lowest
    /// `(vertex, label)` key first.
    pub fn build(rank: usize, generators: &[Word]) -> Result<Self> {
        if rank == 0 || rank > Letter::MAX_GENERATORS {
            return Err(Error::Malformed(format!("invalid rank {rank}")));
        }
        let mut edges: Vec<(usize, usize, usize)> = Vec::new();
        let mut next = 1;
        for w in generators {
            if let Some(g) = w.max_generator() {
                if g >= rank {
                    return Err(Error::Malformed(format!(
                        "generator {w} uses a letter outside rank {rank}"
                    )));
                }
            }
            let n = w.len();
            for (i, l) in w.letters().iter().enumerate() {
                let from = if i == 0 { 0 } else { next + i - 1 };
                let to = if i + 1 == n { 0 } else { next + i };
                if l.is_inverse() {
                    edges.push((to, l.generator(), from));
                } else {
                    edges.push((from, l.generator(), to));
                }
            }
            next += n.saturating_sub(1);
        }

        let mut uf = UnionFind((0..next).collect());
        loop {
            for e in edges.iter_mut() {
                *e = (uf.find(e.0), e.1, uf.find(e.2));
            }
            edges.sort_unstable();
            edges.dedup();
            if let Some((a, b)) = first_conflict(&edges) {
                uf.union(a, b);
            } else {
                break;
            }
        }

        // Trim vertices of degree one (other than the basepoint) until none remain.
        loop {
            let mut degree = vec![0usize; next];
            for &(s, _, t) in &edges {
                degree[s] += 1;
                degree[t] += 1;
            }
            let before = edges.len();
            edges.retain(|&(s, _, t)| !((s != 0 && degree[s] == 1) || (t != 0 && degree[t] == 1)));
            if edges.len() == before {
                break;
            }
        }

        Ok(Self::relabel(rank, &edges))
    }

    /// Renumbers vertices in breadth-first order from the basepoint, visiting
    /// neighbours in letter order.
    fn relabel(rank: usize, edges: &[(usize, usize, usize)]) -> Self {
        let max_id = edges.iter().map(|e| e.0.max(e.2)).max().unwrap_or(0);
        let mut out_raw = vec![vec![None; rank]; max_id + 1];
        let mut inc_raw = vec![vec![None; rank]; max_id + 1];
        for &(s, g, t) in edges {
            out_raw[s][g] = Some(t);
            inc_raw[t][g] = Some(s);
        }
        let mut id = vec![usize::MAX; max_id + 1];
        id[0] = 0;
        let mut order = vec![0];
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for g in 0..rank {
                for nb in [out_raw[v][g], inc_raw[v][g]].into_iter().flatten() {
                    if id[nb] == usize::MAX {
                        id[nb] = order.len();
                        order.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
        }
        let n = order.len();
        let mut new_edges: Vec<_> = edges.iter().map(|&(s, g, t)| (id[s], g, id[t])).collect();
        new_edges.sort_unstable();
        let mut out = vec![vec![None; rank]; n];
        let mut inc = vec![vec![None; rank]; n];
        for &(s, g, t) in &new_edges {
            out[s][g] = Some(t);
            inc[t][g] = Some(s);
        }
        Self {
            rank,
            num_vertices: n,
            edges: new_edges,
            out,
            inc,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    pub fn basepoint(&self) -> usize {
        0
    }

    /// Rank of the subgroup, `|E| - |V| + 1`.
    pub fn subgroup_rank(&self) -> usize {
        self.edges.len() + 1 - self.num_vertices
    }

    #[inline]
    fn step(&self, v: usize, l: Letter) -> Option<usize> {
        let g = l.generator();
        if g >= self.rank {
            return None;
        }
        if l.is_inverse() {
            self.inc[v][g]
        } else {
            self.out[v][g]
        }
    }

    /// Reads `w` from the basepoint; a member iff the path exists and closes.
    pub fn accepts(&self, w: &Word) -> bool {
        let mut v = 0;
        for &l in w.letters() {
            match self.step(v, l) {
                Some(t) => v = t,
                None => return false,
            }
        }
        v == 0
    }

    /// Number of subgroup elements of each exact length `0..=max_len`.
    ///
    /// In a folded graph reduced words readable from the basepoint are in
    /// bijection with reduced paths, so this counts reduced closed paths at
    /// the basepoint by dynamic programming over `(vertex, last letter)`.
    pub fn sphere_counts(&self, max_len: usize) -> Vec<u64> {
        let letters = 2 * self.rank;
        let idx = |v: usize, l: usize| v * letters + l;
        let mut counts = vec![0u64; max_len + 1];
        counts[0] = 1;
        let mut cur = vec![0u64; self.num_vertices * letters];
        for code in 0..letters {
            let l = Letter::new(code / 2, sign_of(code));
            if let Some(t) = self.step(0, l) {
                cur[idx(t, code)] += 1;
            }
        }
        for (len, slot) in counts.iter_mut().enumerate().skip(1) {
            *slot = (0..letters).map(|c| cur[idx(0, c)]).sum();
            if len == max_len {
                break;
            }
            let mut nxt = vec![0u64; cur.len()];
            for v in 0..self.num_vertices {
                for last in 0..letters {
                    let n = cur[idx(v, last)];
                    if n == 0 {
                        continue;
                    }
                    for code in 0..letters {
                        if code == (last ^ 1) {
                            continue;
                        }
                        let l = Letter::new(code / 2, sign_of(code));
                        if let Some(t) = self.step(v, l) {
                            nxt[idx(t, code)] += n;
                        }
                    }
                }
            }
            cur = nxt;
        }
        counts
    }
}

fn sign_of(code: usize) -> crate::Sign {
    if code & 1 == 1 {
        crate::Sign::Negative
    } else {
        crate::Sign::Positive
    }
}

/// First pair of vertices to identify, scanning outgoing then incoming
/// conflicts in sorted order.
fn first_conflict(sorted: &[(usize, usize, usize)]) -> Option<(usize, usize)> {
    let outgoing = sorted
        .windows(2)
        .find(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1)
        .map(|p| (p[0].2, p[1].2));
    let mut by_target: Vec<_> = sorted.iter().map(|&(s, g, t)| (t, g, s)).collect();
    by_target.sort_unstable();
    let incoming = by_target
        .windows(2)
        .find(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1)
        .map(|p| (p[0].2, p[1].2));
    let key = |c: &Option<(usize, usize)>| c.map(|(a, b)| a.min(b));
    match (outgoing, incoming) {
        (Some(o), Some(i)) => Some(if key(&Some(o)) <= key(&Some(i)) { o } else { i }),
        (o, i) => o.or(i),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn graph(gens: &[&str]) -> StallingsGraph {
        StallingsGraph::build(2, &gens.iter().map(|s| w(s)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_loop() {
        let g = graph(&["a"]);
        assert_eq!(g.num_vertices(), 1);
        assert_eq!(g.edges(), &[(0, 0, 0)]);
        assert!(g.accepts(&w("aaaaa")));
        assert!(g.accepts(&w("AA")));
        assert!(!g.accepts(&w("b")));
        assert!(!g.accepts(&w("ab")));
    }

    #[test]
    fn two_petals_of_length_two() {
        let g = graph(&["aa", "bb"]);
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.subgroup_rank(), 2);
        assert!(!g.accepts(&w("a")));
        assert!(g.accepts(&w("aabb")));
        assert!(!g.accepts(&w("ab")));
        assert!(g.accepts(&w("AAbbaa")));
    }

    #[test]
    fn whole_group_is_a_rose() {
        let g = graph(&["a", "b"]);
        assert_eq!(g.num_vertices(), 1);
        for s in ["a", "b", "abAB", "BBa"] {
            assert!(g.accepts(&w(s)));
        }
    }

    #[test]
    fn folding_merges_shared_prefixes() {
        // ⟨ab, aB⟩ folds: both petals start with `a`.
        let g = graph(&["ab", "aB"]);
        assert_eq!(g.num_vertices(), 2);
        assert!(g.accepts(&w("abbA")));
        // (aB)⁻¹(ab) = bb
        assert!(g.accepts(&w("bb")));
        assert!(!g.accepts(&w("b")));
        // ⟨a, aba⁻¹⟩ folds down to ⟨a, b⟩.
        let g = graph(&["a", "abA"]);
        assert_eq!(g.num_vertices(), 1);
        assert!(g.accepts(&w("b")));
    }

    #[test]
    fn trivial_generators_give_trivial_subgroup() {
        let g = graph(&["1", "aA"]);
        assert_eq!(g.num_vertices(), 1);
        assert!(g.edges().is_empty());
        assert!(g.accepts(&Word::empty()));
        assert!(!g.accepts(&w("a")));
    }

    #[test]
    fn hair_is_trimmed() {
        // a b a⁻¹ folds to a loop b hanging off an `a` edge; the graph keeps
        // the stem because the basepoint sits at its end.
        let g = graph(&["abA"]);
        assert_eq!(g.num_vertices(), 2);
        assert!(g.accepts(&w("abbA")));
        assert!(!g.accepts(&w("b")));
    }

    #[test]
    fn sphere_counts_for_whole_group() {
        let g = graph(&["a", "b"]);
        assert_eq!(g.sphere_counts(3), vec![1, 4, 12, 36]);
        let g = graph(&["aa", "bb"]);
        assert_eq!(g.sphere_counts(4), vec![1, 0, 4, 0, 12]);
    }
}
