//! Cayley balls, growth tables and distortion.
//!
//! Balls are built one sphere at a time: every element of the sphere of
//! radius `r + 1` is `x·s` for some `x` in the sphere of radius `r` and a
//! generator `s` that does not cancel. Candidates are expanded in parallel,
//! then sorted in shortlex order and deduplicated, so the output never depends
//! on the number of workers.

use crate::group::{Element, GroupDescriptor, Letter};
use crate::subgroup::{Membership, OracleKind, SubgroupOracle};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// Limits for exhaustive enumeration and subgroup-length search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Cap on the number of ambient elements visited by one enumeration.
    pub max_elements: usize,
    /// Cap on `|h|_Y` in subgroup-length search.
    pub max_depth: usize,
    /// Cap on search-tree nodes in subgroup-length search.
    pub max_search_nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_elements: 10_000_000,
            max_depth: 64,
            max_search_nodes: 200_000_000,
        }
    }
}

impl Budget {
    pub fn with_max_elements(max_elements: usize) -> Self {
        Self {
            max_elements,
            ..Self::default()
        }
    }
}

/// A (relative) ball in shortlex order.
#[derive(Debug, Clone)]
pub struct Ball {
    pub descriptor: GroupDescriptor,
    pub radius: usize,
    pub elements: Vec<Element>,
    /// Ambient elements whose membership came back `Unknown`; they are
    /// excluded from `elements`.
    pub unknown: usize,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements of length at most `r`, a prefix of the shortlex order.
    pub fn within(&self, r: usize) -> &[Element] {
        let end = self.elements.partition_point(|e| e.word_length() <= r);
        &self.elements[..end]
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.elements.binary_search(e).is_ok()
    }
}

/// `β(0), …, β(N)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrowthTable {
    pub counts: Vec<u64>,
    /// Pairs `(m, n)` with `β(m+n) > β(m)·β(n)`; only filled in for whole
    /// groups.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub milnor_violations: Option<Vec<(usize, usize)>>,
    /// Number of `Unknown` membership answers excluded from the counts.
    pub unknown: u64,
}

impl GrowthTable {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self {
            counts,
            milnor_violations: None,
            unknown: 0,
        }
    }

    pub fn from_spheres(spheres: &[u64]) -> Self {
        let counts = spheres
            .iter()
            .scan(0u64, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        Self::from_counts(counts)
    }

    pub fn max_radius(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    pub fn get(&self, n: usize) -> Option<u64> {
        self.counts.get(n).copied()
    }

    pub fn spheres(&self) -> Vec<u64> {
        let mut prev = 0;
        self.counts
            .iter()
            .map(|&c| {
                let s = c - prev;
                prev = c;
                s
            })
            .collect()
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self {
            counts: self.counts[..=n.min(self.max_radius())].to_vec(),
            milnor_violations: None,
            unknown: self.unknown,
        }
    }

    /// All `(m, n)` with `m ≤ n`, `m + n ≤ N` and `β(m+n) > β(m)·β(n)`.
    pub fn submultiplicativity_violations(&self) -> Vec<(usize, usize)> {
        let top = self.max_radius();
        let mut out = Vec::new();
        for m in 0..=top {
            for n in m..=top - m {
                let lhs = self.counts[m + n] as u128;
                let rhs = self.counts[m] as u128 * self.counts[n] as u128;
                if lhs > rhs {
                    out.push((m, n));
                }
            }
        }
        out
    }

    /// `radius,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,count\n");
        for (r, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{r},{c}\n"));
        }
        s
    }
}

/// Sphere-by-sphere breadth-first enumeration of a whole group.
pub struct SphereWalker {
    generators: Vec<(usize, Letter)>,
    current: Vec<Element>,
    radius: usize,
    visited: usize,
    budget: Budget,
    counts: Vec<u64>,
}

impl SphereWalker {
    pub fn new(descriptor: &GroupDescriptor, budget: Budget) -> Self {
        let generators = descriptor
            .generators()
            .into_iter()
            .map(|g| (g.factor, Letter::new(g.letter, g.sign)))
            .collect();
        Self {
            generators,
            current: vec![descriptor.identity()],
            radius: 0,
            visited: 1,
            budget,
            counts: vec![1],
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// The sorted sphere at the current radius.
    pub fn sphere(&self) -> &[Element] {
        &self.current
    }

    /// Advances to the next sphere, failing once the element budget is spent.
    pub fn advance(&mut self) -> Result<()> {
        let gens = &self.generators;
        let mut next: Vec<Element> = self
            .current
            .par_iter()
            .flat_map_iter(|x| {
                gens.iter()
                    .filter(move |&&(f, l)| x.component(f).last() != Some(l.inverse()))
                    .map(move |&(f, l)| x.mul_letter(f, l))
            })
            .collect();
        next.par_sort_unstable();
        next.dedup();
        if self.visited + next.len() > self.budget.max_elements {
            return Err(Error::BudgetExceeded {
                radius_reached: self.radius,
                limit: self.budget.max_elements,
                partial: self.counts.clone(),
            });
        }
        self.visited += next.len();
        self.radius += 1;
        self.counts.push(self.visited as u64);
        self.current = next;
        Ok(())
    }
}

/// Exact ball `B_G(n)` in shortlex order.
pub fn enumerate_ball(descriptor: &GroupDescriptor, n: usize, budget: Budget) -> Result<Ball> {
    let mut walker = SphereWalker::new(descriptor, budget);
    let mut elements = walker.sphere().to_vec();
    for _ in 0..n {
        walker.advance()?;
        elements.extend_from_slice(walker.sphere());
    }
    Ok(Ball {
        descriptor: descriptor.clone(),
        radius: n,
        elements,
        unknown: 0,
    })
}

/// `B_H(n) = H ∩ B_G(n)`, filtering the ambient ball sphere by sphere.
pub fn relative_ball(
    descriptor: &GroupDescriptor,
    oracle: &SubgroupOracle,
    n: usize,
    budget: Budget,
) -> Result<Ball> {
    check_oracle(descriptor, oracle)?;
    let mut walker = SphereWalker::new(descriptor, budget);
    let mut elements = Vec::new();
    let mut unknown = 0;
    for r in 0..=n {
        if r > 0 {
            walker.advance()?;
        }
        let answers: Vec<Membership> = walker
            .sphere()
            .par_iter()
            .map(|x| oracle.contains_unchecked(x))
            .collect();
        for (x, a) in walker.sphere().iter().zip(answers) {
            match a {
                Membership::Member => elements.push(x.clone()),
                Membership::Unknown => unknown += 1,
                Membership::NonMember => {}
            }
        }
    }
    Ok(Ball {
        descriptor: descriptor.clone(),
        radius: n,
        elements,
        unknown,
    })
}

fn check_oracle(descriptor: &GroupDescriptor, oracle: &SubgroupOracle) -> Result<()> {
    if oracle.descriptor() != descriptor {
        return Err(Error::DescriptorMismatch {
            expected: descriptor.num_factors(),
            found: oracle.descriptor().num_factors(),
        });
    }
    Ok(())
}

/// `β_G(0..=N)` or `β_H(0..=N)` by enumeration. On budget exhaustion the
/// error carries the exact partial table.
pub fn growth_sequence(
    descriptor: &GroupDescriptor,
    oracle: Option<&SubgroupOracle>,
    max_radius: usize,
    budget: Budget,
) -> Result<GrowthTable> {
    let mut walker = SphereWalker::new(descriptor, budget);
    let mut counts = Vec::with_capacity(max_radius + 1);
    let mut total = 0u64;
    let mut unknown = 0u64;
    if let Some(o) = oracle {
        check_oracle(descriptor, o)?;
    }
    for r in 0..=max_radius {
        if r > 0 {
            walker.advance().map_err(|e| match e {
                Error::BudgetExceeded {
                    radius_reached,
                    limit,
                    ..
                } => Error::BudgetExceeded {
                    radius_reached,
                    limit,
                    partial: counts.clone(),
                },
                other => other,
            })?;
        }
        match oracle {
            None => total += walker.sphere().len() as u64,
            Some(o) => {
                let (member, unk) = walker
                    .sphere()
                    .par_iter()
                    .map(|x| match o.contains_unchecked(x) {
                        Membership::Member => (1u64, 0u64),
                        Membership::Unknown => (0, 1),
                        Membership::NonMember => (0, 0),
                    })
                    .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
                total += member;
                unknown += unk;
            }
        }
        counts.push(total);
    }
    let mut table = GrowthTable::from_counts(counts);
    table.unknown = unknown;
    if oracle.is_none() || oracle.is_some_and(|o| matches!(o.kind(), OracleKind::Whole)) {
        table.milnor_violations = Some(table.submultiplicativity_violations());
    }
    Ok(table)
}

/// Exact growth by counting instead of enumerating, for the oracle shapes
/// where sphere sizes have a direct description: whole groups (free-group
/// spheres `2k(2k-1)^{n-1}` convolved over factors), Stallings graphs
/// (reduced closed paths at the basepoint), cyclic subgroups, products of
/// countable oracles and diagonal-type pullbacks with identity maps.
pub fn growth_by_counting(
    descriptor: &GroupDescriptor,
    oracle: Option<&SubgroupOracle>,
    max_radius: usize,
) -> Result<GrowthTable> {
    let spheres = match oracle {
        None => whole_spheres(descriptor, max_radius)?,
        Some(o) => {
            check_oracle(descriptor, o)?;
            oracle_spheres(o, max_radius)?
        }
    };
    let mut table = GrowthTable::from_spheres(&spheres);
    if oracle.is_none() {
        table.milnor_violations = Some(table.submultiplicativity_violations());
    }
    Ok(table)
}

fn overflow() -> Error {
    Error::Unsupported("growth count exceeds 64 bits".into())
}

fn free_spheres(rank: usize, n: usize) -> Result<Vec<u64>> {
    let k = rank as u64;
    let mut out = vec![1u64];
    let mut s = 2 * k;
    for r in 1..=n {
        if r > 1 {
            s = s.checked_mul(2 * k - 1).ok_or_else(overflow)?;
        }
        out.push(s);
    }
    Ok(out)
}

fn convolve(a: &[u64], b: &[u64], n: usize) -> Result<Vec<u64>> {
    let mut out = vec![0u64; n + 1];
    for (i, &x) in a.iter().enumerate().take(n + 1) {
        for (j, &y) in b.iter().enumerate().take(n + 1 - i) {
            let p = x.checked_mul(y).ok_or_else(overflow)?;
            out[i + j] = out[i + j].checked_add(p).ok_or_else(overflow)?;
        }
    }
    Ok(out)
}

fn whole_spheres(descriptor: &GroupDescriptor, n: usize) -> Result<Vec<u64>> {
    let mut acc = vec![1u64];
    acc.resize(n + 1, 0);
    for &k in descriptor.factors() {
        acc = convolve(&acc, &free_spheres(k, n)?, n)?;
    }
    Ok(acc)
}

fn oracle_spheres(o: &SubgroupOracle, n: usize) -> Result<Vec<u64>> {
    match o.kind() {
        OracleKind::Whole => whole_spheres(o.descriptor(), n),
        OracleKind::Stallings(g) => Ok(g.sphere_counts(n)),
        OracleKind::Cyclic(c) => {
            let mut out = vec![0u64; n + 1];
            out[0] = 1;
            if c.is_identity() {
                return Ok(out);
            }
            // |c^k| = Σ_i (2|p_i| + |k|·|r_i|) over the nontrivial components.
            let (fixed, per_step) = c
                .components()
                .iter()
                .filter(|w| !w.is_empty())
                .map(|w| w.cyclic_core())
                .fold((0, 0), |(a, b), (p, r)| (a + 2 * p.len(), b + r.len()));
            let mut k = 1;
            while fixed + k * per_step <= n {
                out[fixed + k * per_step] += 2;
                k += 1;
            }
            Ok(out)
        }
        OracleKind::Product(factors) => {
            let mut acc = vec![1u64];
            acc.resize(n + 1, 0);
            for f in factors {
                acc = convolve(&acc, &oracle_spheres(f, n)?, n)?;
            }
            Ok(acc)
        }
        OracleKind::Pullback { base, maps } => {
            if !maps.iter().all(|m| m.is_identity()) {
                return Err(Error::Unsupported(
                    "counting needs identity maps; enumerate instead".into(),
                ));
            }
            // |(w, …, w)| = m·|w|
            let m = o.descriptor().num_factors();
            let inner = oracle_spheres(base, n / m)?;
            let mut out = vec![0u64; n + 1];
            for (len, c) in inner.into_iter().enumerate() {
                out[len * m] = c;
            }
            Ok(out)
        }
        OracleKind::Budgeted { .. } => Err(Error::Unsupported(
            "budgeted enumeration oracles cannot be counted".into(),
        )),
    }
}

/// `Δ(r) = max{|h|_Y : h ∈ H, |h|_X ≤ r}` for every `r ≤ n`.
///
/// Membership comes from `oracle`, or from the Stallings graph of the
/// generators on a single free factor. `|h|_Y` is found by iterative
/// deepening over non-backtracking words in `Y ∪ Y⁻¹`, shared by all targets.
pub fn distortion_table(
    descriptor: &GroupDescriptor,
    generators: &[Element],
    oracle: Option<&SubgroupOracle>,
    n: usize,
    budget: Budget,
) -> Result<Vec<usize>> {
    for g in generators {
        descriptor.check(g)?;
    }
    let derived;
    let oracle = match oracle {
        Some(o) => o,
        None if descriptor.num_factors() == 1 => {
            derived = SubgroupOracle::stallings(
                descriptor,
                generators.iter().map(|g| g.component(0).clone()).collect(),
            )?;
            &derived
        }
        None => {
            return Err(Error::Unsupported(
                "distortion on a product needs an explicit membership oracle".into(),
            ))
        }
    };
    if !oracle.is_exact() {
        return Err(Error::Unsupported(
            "distortion needs an exact membership oracle".into(),
        ));
    }
    let targets = relative_ball(descriptor, oracle, n, budget)?;
    let lengths = subgroup_lengths(descriptor, generators, &targets.elements, budget)?;
    let mut table = vec![0usize; n + 1];
    for (h, len) in targets.elements.iter().zip(lengths) {
        let r = h.word_length();
        table[r] = table[r].max(len);
    }
    for r in 1..=n {
        table[r] = table[r].max(table[r - 1]);
    }
    Ok(table)
}

pub fn distortion(
    descriptor: &GroupDescriptor,
    generators: &[Element],
    n: usize,
    budget: Budget,
) -> Result<usize> {
    Ok(distortion_table(descriptor, generators, None, n, budget)?[n])
}

/// `|h|_Y` for each target, in the order given.
pub fn subgroup_lengths(
    descriptor: &GroupDescriptor,
    generators: &[Element],
    targets: &[Element],
    budget: Budget,
) -> Result<Vec<usize>> {
    let mut letters: Vec<Element> = Vec::with_capacity(2 * generators.len());
    for g in generators {
        letters.push(g.clone());
        letters.push(g.inverse());
    }
    let index: HashMap<&Element, usize> = targets.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut found: Vec<Option<usize>> = vec![None; targets.len()];
    let mut remaining = targets.len();
    let mut nodes = 0u64;

    struct Search<'a> {
        letters: &'a [Element],
        index: &'a HashMap<&'a Element, usize>,
        found: &'a mut [Option<usize>],
        remaining: &'a mut usize,
        nodes: &'a mut u64,
        limit: u64,
    }

    impl Search<'_> {
        fn dfs(
            &mut self,
            at: &Element,
            last: Option<usize>,
            depth_left: usize,
            depth: usize,
        ) -> bool {
            *self.nodes += 1;
            if *self.nodes > self.limit {
                return false;
            }
            if depth_left == 0 {
                if let Some(&i) = self.index.get(at) {
                    if self.found[i].is_none() {
                        self.found[i] = Some(depth);
                        *self.remaining -= 1;
                    }
                }
                return true;
            }
            for (j, y) in self.letters.iter().enumerate() {
                if last.is_some_and(|l| l ^ 1 == j) {
                    continue;
                }
                let next = at * y;
                if !self.dfs(&next, Some(j), depth_left - 1, depth) {
                    return false;
                }
                if *self.remaining == 0 {
                    return true;
                }
            }
            true
        }
    }

    let mut depth = 0;
    while remaining > 0 {
        if depth > budget.max_depth {
            break;
        }
        let mut s = Search {
            letters: &letters,
            index: &index,
            found: &mut found,
            remaining: &mut remaining,
            nodes: &mut nodes,
            limit: budget.max_search_nodes,
        };
        if !s.dfs(&descriptor.identity(), None, depth, depth) {
            break;
        }
        depth += 1;
    }
    if remaining > 0 {
        let missing = targets
            .iter()
            .zip(&found)
            .find(|(_, f)| f.is_none())
            .map(|(t, _)| t.to_string())
            .unwrap_or_default();
        return Err(Error::SearchBudgetExceeded { element: missing });
    }
    Ok(found.into_iter().map(|f| f.unwrap_or(0)).collect())
}
