//! Membership oracles for subgroups `H ≤ G`, plus the coordinate projections
//! `ψ_J` and embeddings `ι_J` of a direct product.
//!
//! Membership in arbitrary finitely generated subgroups of a product of free
//! groups is undecidable, so answers are three-valued: only
//! [`SubgroupOracle::budgeted`] can answer [`Membership::Unknown`], and it
//! never answers [`Membership::NonMember`].

mod stallings;

pub use stallings::StallingsGraph;

use crate::group::{Element, GroupDescriptor, Word};
use crate::{Error, Result};
use serde::Serialize;
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    NonMember,
    Unknown,
}

impl Membership {
    pub fn is_member(self) -> bool {
        self == Membership::Member
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Membership::Member
        } else {
            Membership::NonMember
        }
    }
}

/// A homomorphism from the free factor `0` into another free factor, given by
/// the images of the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    images: Vec<Word>,
}

impl Homomorphism {
    pub fn new(images: Vec<Word>) -> Self {
        Self { images }
    }

    pub fn identity(rank: usize) -> Self {
        Self {
            images: (0..rank)
                .map(|g| Word::generator(crate::Letter::new(g, crate::Sign::Positive)))
                .collect(),
        }
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn apply(&self, w: &Word) -> Word {
        let mut out = Word::empty();
        for l in w.letters() {
            let img = &self.images[l.generator()];
            if l.is_inverse() {
                out = out.mul(&img.inverse());
            } else {
                out = out.mul(img);
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.images.len())
    }
}

#[derive(Debug, Clone)]
pub enum OracleKind {
    /// `H = G`.
    Whole,
    Stallings(StallingsGraph),
    Cyclic(Element),
    /// One oracle per factor; membership is componentwise.
    Product(Vec<SubgroupOracle>),
    /// `{(w, φ_1(w), …, φ_{m-1}(w)) : w ∈ base}` with `base` a subgroup of
    /// factor `0`.
    Pullback {
        base: Box<SubgroupOracle>,
        maps: Vec<Homomorphism>,
    },
    /// Elements reachable by at most `radius` generator letters.
    Budgeted {
        radius: usize,
        members: HashSet<Element>,
    },
}

#[derive(Debug, Clone)]
pub struct SubgroupOracle {
    descriptor: GroupDescriptor,
    kind: OracleKind,
    generators: Vec<Element>,
}

impl SubgroupOracle {
    pub fn whole(descriptor: &GroupDescriptor) -> Self {
        Self {
            descriptor: descriptor.clone(),
            kind: OracleKind::Whole,
            generators: descriptor
                .generator_elements()
                .into_iter()
                .step_by(2)
                .collect(),
        }
    }

    pub fn stallings(descriptor: &GroupDescriptor, generators: Vec<Word>) -> Result<Self> {
        if descriptor.num_factors() != 1 {
            return Err(Error::Unsupported(
                "Stallings graphs need a single free factor; use prod(…), graph(…) or enum:… on products"
                    .into(),
            ));
        }
        let graph = StallingsGraph::build(descriptor.rank(0), &generators)?;
        Ok(Self {
            descriptor: descriptor.clone(),
            kind: OracleKind::Stallings(graph),
            generators: generators.into_iter().map(Element::from_word).collect(),
        })
    }

    pub fn cyclic(descriptor: &GroupDescriptor, generator: Element) -> Result<Self> {
        descriptor.check(&generator)?;
        Ok(Self {
            descriptor: descriptor.clone(),
            kind: OracleKind::Cyclic(generator.clone()),
            generators: vec![generator],
        })
    }

    /// `H = H_1 × … × H_m` with `H_i` an oracle over the `i`-th factor.
    pub fn product(descriptor: &GroupDescriptor, factors: Vec<SubgroupOracle>) -> Result<Self> {
        if factors.len() != descriptor.num_factors() {
            return Err(Error::DescriptorMismatch {
                expected: descriptor.num_factors(),
                found: factors.len(),
            });
        }
        let mut generators = Vec::new();
        for (i, o) in factors.iter().enumerate() {
            let own = descriptor.restrict(&[i])?;
            if o.descriptor != own {
                return Err(Error::Malformed(format!(
                    "factor oracle {i} is over {} but the factor is {own}",
                    o.descriptor
                )));
            }
            for g in &o.generators {
                generators.push(embed(g, &[i], descriptor)?);
            }
        }
        Ok(Self {
            descriptor: descriptor.clone(),
            kind: OracleKind::Product(factors),
            generators,
        })
    }

    /// Graph-of-homomorphisms subgroup `{(w, φ_1(w), …) : w ∈ base}`.
    pub fn pullback(
        descriptor: &GroupDescriptor,
        base: SubgroupOracle,
        maps: Vec<Homomorphism>,
    ) -> Result<Self> {
        let m = descriptor.num_factors();
        if m < 2 || maps.len() != m - 1 {
            return Err(Error::Malformed(format!(
                "a pullback over {m} factor(s) needs {} homomorphism(s), got {}",
                m.saturating_sub(1),
                maps.len()
            )));
        }
        let source = descriptor.restrict(&[0])?;
        if base.descriptor != source {
            return Err(Error::Malformed(
                "pullback base must live in factor 0".into(),
            ));
        }
        for (i, phi) in maps.iter().enumerate() {
            let target_rank = descriptor.rank(i + 1);
            if phi.images.len() != source.rank(0) {
                return Err(Error::Malformed(format!(
                    "homomorphism into factor {} lists {} image(s) for rank {}",
                    i + 1,
                    phi.images.len(),
                    source.rank(0)
                )));
            }
            if phi
                .images
                .iter()
                .any(|w| w.max_generator().is_some_and(|g| g >= target_rank))
            {
                return Err(Error::Malformed(format!(
                    "image outside factor {} of rank {target_rank}",
                    i + 1
                )));
            }
        }
        let generators = base
            .generators
            .iter()
            .map(|g| {
                let w = g.component(0);
                let mut comps = vec![w.clone()];
                comps.extend(maps.iter().map(|phi| phi.apply(w)));
                Element::from_components(comps)
            })
            .collect();
        Ok(Self {
            descriptor: descriptor.clone(),
            kind: OracleKind::Pullback {
                base: Box::new(base),
                maps,
            },
            generators,
        })
    }

    /// Diagonal `{(w, w, …, w)}` of a product of equal-rank factors.
    pub fn diagonal(descriptor: &GroupDescriptor) -> Result<Self> {
        let k = descriptor.rank(0);
        if descriptor.num_factors() < 2 || descriptor.factors().iter().any(|&r| r != k) {
            return Err(Error::Unsupported(
                "the diagonal needs at least two factors of equal rank".into(),
            ));
        }
        let source = descriptor.restrict(&[0])?;
        let maps = vec![Homomorphism::identity(k); descriptor.num_factors() - 1];
        Self::pullback(descriptor, Self::whole(&source), maps)
    }

    /// Breadth-first closure of the generators up to `radius` letters.
    pub fn budgeted(
        descriptor: &GroupDescriptor,
        generators: Vec<Element>,
        radius: usize,
    ) -> Result<Self> {
        for g in &generators {
            descriptor.check(g)?;
        }
        let mut letters: Vec<Element> = generators.clone();
        letters.extend(generators.iter().map(Element::inverse));
        let mut members = HashSet::from([descriptor.identity()]);
        let mut frontier = vec![descriptor.identity()];
        for _ in 0..radius {
            let mut next = Vec::new();
            for x in &frontier {
                for y in &letters {
                    let z = x * y;
                    if members.insert(z.clone()) {
                        next.push(z);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(Self {
            descriptor: descriptor.clone(),
            kind: OracleKind::Budgeted { radius, members },
            generators,
        })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    /// True when every answer is `Member` or `NonMember`.
    pub fn is_exact(&self) -> bool {
        match &self.kind {
            OracleKind::Budgeted { .. } => false,
            OracleKind::Product(fs) => fs.iter().all(Self::is_exact),
            OracleKind::Pullback { base, .. } => base.is_exact(),
            _ => true,
        }
    }

    pub fn contains(&self, g: &Element) -> Result<Membership> {
        if g.num_factors() != self.descriptor.num_factors() {
            return Err(Error::DescriptorMismatch {
                expected: self.descriptor.num_factors(),
                found: g.num_factors(),
            });
        }
        Ok(self.contains_unchecked(g))
    }

    pub(crate) fn contains_unchecked(&self, g: &Element) -> Membership {
        match &self.kind {
            OracleKind::Whole => Membership::Member,
            OracleKind::Stallings(graph) => Membership::from_bool(graph.accepts(g.component(0))),
            OracleKind::Cyclic(c) => Membership::from_bool(cyclic_exponent(c, g).is_some()),
            OracleKind::Product(factors) => {
                let mut unknown = false;
                for (i, o) in factors.iter().enumerate() {
                    match o.contains_unchecked(&Element::from_word(g.component(i).clone())) {
                        Membership::NonMember => return Membership::NonMember,
                        Membership::Unknown => unknown = true,
                        Membership::Member => {}
                    }
                }
                if unknown {
                    Membership::Unknown
                } else {
                    Membership::Member
                }
            }
            OracleKind::Pullback { base, maps } => {
                let w = g.component(0);
                let graph_ok = maps
                    .iter()
                    .enumerate()
                    .all(|(i, phi)| phi.apply(w) == *g.component(i + 1));
                if !graph_ok {
                    return Membership::NonMember;
                }
                base.contains_unchecked(&Element::from_word(w.clone()))
            }
            OracleKind::Budgeted { members, .. } => {
                if members.contains(g) {
                    Membership::Member
                } else {
                    Membership::Unknown
                }
            }
        }
    }

    /// Parses the subgroup grammar against a group:
    ///
    /// * `*`: the whole group
    /// * `aa, bb`: Stallings oracle of the listed words (single factor)
    /// * `cyclic:ab`: cyclic subgroup
    /// * `diag`: diagonal of equal factors
    /// * `graph(b,a)`: `{(w, φ(w))}`, one `;`-separated image list per extra
    ///   factor, optionally `graph(… | <base>)` to restrict the source
    /// * `prod(H1; H2; …)`: one sub-spec per factor
    /// * `enum:(a,a),(b,b)@6`: budgeted enumeration to radius 6
    ///
    /// Double quotes are ignored.
    pub fn parse(text: &str, descriptor: &GroupDescriptor) -> Result<Self> {
        let cleaned: String = text.chars().filter(|&c| c != '"').collect();
        parse_at(cleaned.trim(), descriptor, 0)
    }
}

fn parse_err(column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        column: column + 1,
        message: message.into(),
    }
}

/// Splits at `sep` when not nested in parentheses, keeping byte offsets.
fn split_top(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &text[start..]));
    out
}

fn parse_at(text: &str, d: &GroupDescriptor, offset: usize) -> Result<SubgroupOracle> {
    let lead = text.len() - text.trim_start().len();
    let t = text.trim();
    let offset = offset + lead;
    if t == "*" {
        return Ok(SubgroupOracle::whole(d));
    }
    if t == "diag" {
        return SubgroupOracle::diagonal(d).map_err(|e| parse_err(offset, e.to_string()));
    }
    if let Some(rest) = t.strip_prefix("cyclic:") {
        let g = crate::group::descriptor_parse_element_at(d, rest, offset + 7)?;
        return SubgroupOracle::cyclic(d, g);
    }
    if let Some(rest) = t.strip_prefix("enum:") {
        let (body, radius) = rest.rsplit_once('@').ok_or_else(|| {
            parse_err(
                offset + t.len(),
                "expected `@<radius>` after enum generators",
            )
        })?;
        let radius: usize = radius.trim().parse().map_err(|_| {
            parse_err(
                offset + 5 + body.len() + 1,
                "radius must be a natural number",
            )
        })?;
        let mut gens = Vec::new();
        for (pos, part) in split_top(body, ',') {
            gens.push(crate::group::descriptor_parse_element_at(
                d,
                part,
                offset + 5 + pos,
            )?);
        }
        return SubgroupOracle::budgeted(d, gens, radius);
    }
    if let Some(inner) = t.strip_prefix("prod(") {
        let inner = inner
            .strip_suffix(')')
            .ok_or_else(|| parse_err(offset + t.len(), "missing `)` after prod("))?;
        let parts = split_top(inner, ';');
        if parts.len() != d.num_factors() {
            return Err(parse_err(
                offset,
                format!(
                    "prod lists {} oracle(s) for {} factor(s)",
                    parts.len(),
                    d.num_factors()
                ),
            ));
        }
        let mut factors = Vec::new();
        for (i, (pos, part)) in parts.into_iter().enumerate() {
            factors.push(parse_at(part, &d.restrict(&[i])?, offset + 5 + pos)?);
        }
        return SubgroupOracle::product(d, factors);
    }
    if let Some(inner) = t.strip_prefix("graph(") {
        let inner = inner
            .strip_suffix(')')
            .ok_or_else(|| parse_err(offset + t.len(), "missing `)` after graph("))?;
        let source = d.restrict(&[0])?;
        let (maps_text, base) = match inner.split_once('|') {
            Some((m, b)) => (m, parse_at(b, &source, offset + 6 + m.len() + 1)?),
            None => (inner, SubgroupOracle::whole(&source)),
        };
        let mut maps = Vec::new();
        for (i, (pos, list)) in split_top(maps_text, ';').into_iter().enumerate() {
            let rank = *d.factors().get(i + 1).ok_or_else(|| {
                parse_err(offset + 6 + pos, "more image lists than extra factors")
            })?;
            let mut images = Vec::new();
            for (p, w) in split_top(list, ',') {
                images.push(Word::parse_at(w, rank, offset + 6 + pos + p)?);
            }
            maps.push(Homomorphism::new(images));
        }
        return SubgroupOracle::pullback(d, base, maps)
            .map_err(|e| parse_err(offset, e.to_string()));
    }
    if d.num_factors() != 1 {
        return Err(parse_err(
            offset,
            "a plain generator list needs a single free factor; use prod(…), graph(…), diag or enum:…",
        ));
    }
    let mut words = Vec::new();
    for (pos, part) in split_top(t, ',') {
        words.push(Word::parse_at(part, d.rank(0), offset + pos)?);
    }
    SubgroupOracle::stallings(d, words)
}

impl fmt::Display for SubgroupOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |items: &mut dyn Iterator<Item = String>| items.collect::<Vec<_>>().join(",");
        match &self.kind {
            OracleKind::Whole => f.write_str("*"),
            OracleKind::Stallings(_) => {
                f.write_str(&join(&mut self.generators.iter().map(|g| g.to_string())))
            }
            OracleKind::Cyclic(c) => write!(f, "cyclic:{c}"),
            OracleKind::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|o| o.to_string()).collect();
                write!(f, "prod({})", parts.join(";"))
            }
            OracleKind::Pullback { base, maps } => {
                if matches!(base.kind, OracleKind::Whole)
                    && maps.iter().all(Homomorphism::is_identity)
                {
                    return f.write_str("diag");
                }
                let lists: Vec<String> = maps
                    .iter()
                    .map(|m| join(&mut m.images.iter().map(|w| w.to_string())))
                    .collect();
                write!(f, "graph({}", lists.join(";"))?;
                if !matches!(base.kind, OracleKind::Whole) {
                    write!(f, "|{base}")?;
                }
                f.write_str(")")
            }
            OracleKind::Budgeted { radius, .. } => write!(
                f,
                "enum:{}@{radius}",
                join(&mut self.generators.iter().map(|g| g.to_string()))
            ),
        }
    }
}

/// The exponent `k` with `g = c^k`, if any.
///
/// Per nontrivial component `c_i = p r p⁻¹` with `r` cyclically reduced,
/// `g_i` is a power of `c_i` iff `p⁻¹ g_i p` is `r` or `r⁻¹` repeated. All
/// components must agree on `k`.
pub fn cyclic_exponent(c: &Element, g: &Element) -> Option<i64> {
    let mut exponent: Option<i64> = None;
    for (ci, gi) in c.components().iter().zip(g.components()) {
        if ci.is_empty() {
            if !gi.is_empty() {
                return None;
            }
            continue;
        }
        let k = word_exponent(ci, gi)?;
        match exponent {
            Some(e) if e != k => return None,
            _ => exponent = Some(k),
        }
    }
    Some(exponent.unwrap_or(0))
}

fn word_exponent(c: &Word, w: &Word) -> Option<i64> {
    let (p, r) = c.cyclic_core();
    let x = p.inverse().mul(w).mul(&p);
    if x.is_empty() {
        return Some(0);
    }
    if x.len() % r.len() != 0 {
        return None;
    }
    let k = x.len() / r.len();
    let matches_power = |base: &Word| {
        x.letters()
            .chunks(base.len())
            .all(|chunk| chunk == base.letters())
    };
    if matches_power(&r) {
        Some(k as i64)
    } else if matches_power(&r.inverse()) {
        Some(-(k as i64))
    } else {
        None
    }
}

/// `ψ_J`: keeps the components listed in `factor_set` (sorted, deduplicated).
pub fn project(g: &Element, factor_set: &[usize]) -> Result<Element> {
    let set = normalize_factor_set(factor_set, g.num_factors())?;
    Ok(Element::from_components(
        set.iter().map(|&i| g.component(i).clone()).collect(),
    ))
}

/// `ι_J`: places the components of `g` at the positions in `factor_set`, the
/// identity elsewhere.
pub fn embed(g: &Element, factor_set: &[usize], target: &GroupDescriptor) -> Result<Element> {
    let set = normalize_factor_set(factor_set, target.num_factors())?;
    if set.len() != g.num_factors() {
        return Err(Error::DescriptorMismatch {
            expected: set.len(),
            found: g.num_factors(),
        });
    }
    let mut comps: Vec<Word> = (0..target.num_factors()).map(|_| Word::empty()).collect();
    for (j, &i) in set.iter().enumerate() {
        comps[i] = g.component(j).clone();
    }
    let e = Element::from_components(comps);
    target.check(&e)?;
    Ok(e)
}

fn normalize_factor_set(factor_set: &[usize], n: usize) -> Result<Vec<usize>> {
    if factor_set.is_empty() {
        return Err(Error::Malformed("empty factor set".into()));
    }
    let mut set = factor_set.to_vec();
    set.sort_unstable();
    set.dedup();
    if let Some(&bad) = set.iter().find(|&&i| i >= n) {
        return Err(Error::Malformed(format!(
            "factor index {bad} out of range for {n} factor(s)"
        )));
    }
    Ok(set)
}
