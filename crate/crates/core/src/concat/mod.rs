//! Connector-based concatenation `Φ(u, v) = u·x_{u,v}·v` and empirical
//! ambiguity measurement.
//!
//! A [`ConnectorKit`] holds the four connecting pieces `gⁿ, g⁻ⁿ, hⁿ, h⁻ⁿ`.
//! The connector for `(u, v)` is the piece minimizing
//! `max((u⁻¹.x)₁, (v.x⁻¹)₁)`, ties going to the earlier piece, so `Φ` is a
//! well-defined function. The ambiguity of `Φ` over `B(s) × B(t)` is the
//! largest fiber `|Φ⁻¹(z)|`.

use crate::cayley::{enumerate_ball, relative_ball, Ball, Budget, GrowthTable};
use crate::group::{Element, GroupDescriptor};
use crate::hyperbolic::HalfInt;
use crate::rate::{le_scaled, FunctionSpec};
use crate::subgroup::{Membership, SubgroupOracle};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectorKit {
    descriptor: GroupDescriptor,
    g: Element,
    h: Element,
    exponent: u32,
    pieces: [Element; 4],
    c: usize,
}

impl ConnectorKit {
    /// Fails on a trivial `g` or `h`, on commuting `g, h` (in a free group:
    /// powers of a common element), and on coincident pieces.
    pub fn new(
        descriptor: &GroupDescriptor,
        g: Element,
        h: Element,
        exponent: u32,
    ) -> Result<Self> {
        descriptor.check(&g)?;
        descriptor.check(&h)?;
        if exponent == 0 {
            return Err(Error::Malformed(
                "connector exponent must be at least 1".into(),
            ));
        }
        for e in [&g, &h] {
            if e.is_identity() {
                return Err(Error::TrivialConnector(e.to_string()));
            }
        }
        if &g * &h == &h * &g {
            return Err(Error::DependentConnectors {
                g: g.to_string(),
                h: h.to_string(),
            });
        }
        let n = exponent as i64;
        let pieces = [g.pow(n), g.pow(-n), h.pow(n), h.pow(-n)];
        for i in 0..4 {
            for j in i + 1..4 {
                if pieces[i] == pieces[j] {
                    return Err(Error::CoincidentPieces(exponent));
                }
            }
        }
        let c = pieces.iter().map(Element::word_length).max().unwrap_or(0);
        Ok(Self {
            descriptor: descriptor.clone(),
            g,
            h,
            exponent,
            pieces,
            c,
        })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn g(&self) -> &Element {
        &self.g
    }

    pub fn h(&self) -> &Element {
        &self.h
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// `gⁿ, g⁻ⁿ, hⁿ, h⁻ⁿ` in tie-breaking order.
    pub fn pieces(&self) -> &[Element; 4] {
        &self.pieces
    }

    /// `max |z|` over the pieces.
    pub fn c(&self) -> usize {
        self.c
    }

    fn select_index(&self, u: &Element, v: &Element) -> (usize, HalfInt) {
        let (lu, lv) = (u.word_length() as i64, v.word_length() as i64);
        let mut best = (0, HalfInt::from_halves(i64::MAX));
        for (i, x) in self.pieces.iter().enumerate() {
            let lx = x.word_length() as i64;
            // (u⁻¹.x)₁ = ½(|u| + |x| - |ux|), (v.x⁻¹)₁ = ½(|v| + |x| - |xv|)
            let left = lu + lx - (u * x).word_length() as i64;
            let right = lv + lx - (x * v).word_length() as i64;
            let score = HalfInt::from_halves(left.max(right));
            if score < best.1 {
                best = (i, score);
            }
        }
        best
    }
}

impl fmt::Display for ConnectorKit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kit(g={}, h={}, n={})", self.g, self.h, self.exponent)
    }
}

/// The connector for `(u, v)` and its score `max((u⁻¹.x)₁, (v.x⁻¹)₁)`.
pub fn select_connector<'k>(
    kit: &'k ConnectorKit,
    u: &Element,
    v: &Element,
) -> Result<(&'k Element, HalfInt)> {
    kit.descriptor.check(u)?;
    kit.descriptor.check(v)?;
    let (i, score) = kit.select_index(u, v);
    Ok((&kit.pieces[i], score))
}

/// `u·x_{u,v}·v`.
pub fn concat_apply(kit: &ConnectorKit, u: &Element, v: &Element) -> Result<Element> {
    let (x, _) = select_connector(kit, u, v)?;
    Ok(&(u * x) * v)
}

/// Componentwise concatenation on a product, one kit per factor, each kit
/// living on its own free factor.
pub fn product_concat_apply(kits: &[ConnectorKit], u: &Element, v: &Element) -> Result<Element> {
    Concatenation::Product(kits.to_vec()).checked_apply(u, v)
}

/// A concatenation map `G × G → G`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Concatenation {
    /// `Φ(u, v) = uv`, the empty connector set.
    Naive,
    Kit(ConnectorKit),
    /// One kit per free factor, applied componentwise.
    Product(Vec<ConnectorKit>),
}

impl Concatenation {
    /// Upper bound on `|Φ(u,v)| - |u| - |v|`.
    pub fn c(&self) -> usize {
        match self {
            Concatenation::Naive => 0,
            Concatenation::Kit(k) => k.c(),
            Concatenation::Product(ks) => ks.iter().map(ConnectorKit::c).sum(),
        }
    }

    fn check(&self, descriptor: &GroupDescriptor) -> Result<()> {
        match self {
            Concatenation::Naive => Ok(()),
            Concatenation::Kit(k) => {
                if k.descriptor() != descriptor {
                    return Err(Error::DescriptorMismatch {
                        expected: descriptor.num_factors(),
                        found: k.descriptor().num_factors(),
                    });
                }
                Ok(())
            }
            Concatenation::Product(ks) => {
                if ks.len() != descriptor.num_factors() {
                    return Err(Error::DescriptorMismatch {
                        expected: descriptor.num_factors(),
                        found: ks.len(),
                    });
                }
                for (i, k) in ks.iter().enumerate() {
                    if k.descriptor().factors() != [descriptor.rank(i)] {
                        return Err(Error::Malformed(format!(
                            "kit {i} lives on {}, factor {i} is free:{}",
                            k.descriptor(),
                            descriptor.rank(i)
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// `Φ(u, v)` after checking that `u`, `v` and the kits agree.
    pub fn checked_apply(&self, u: &Element, v: &Element) -> Result<Element> {
        if u.num_factors() != v.num_factors() {
            return Err(Error::DescriptorMismatch {
                expected: u.num_factors(),
                found: v.num_factors(),
            });
        }
        match self {
            Concatenation::Naive => {}
            Concatenation::Kit(k) => {
                k.descriptor.check(u)?;
                k.descriptor.check(v)?;
            }
            Concatenation::Product(ks) => {
                if ks.len() != u.num_factors() {
                    return Err(Error::DescriptorMismatch {
                        expected: ks.len(),
                        found: u.num_factors(),
                    });
                }
                for (i, k) in ks.iter().enumerate() {
                    for w in [u, v] {
                        k.descriptor
                            .check(&Element::from_word(w.component(i).clone()))?;
                    }
                }
            }
        }
        Ok(self.apply(u, v).0)
    }

    /// `Φ(u, v)` and the selection score (zero for the naive map; the maximum
    /// over factors for products).
    pub fn apply(&self, u: &Element, v: &Element) -> (Element, HalfInt) {
        match self {
            Concatenation::Naive => (u * v, HalfInt::ZERO),
            Concatenation::Kit(k) => {
                let (i, score) = k.select_index(u, v);
                (&(u * &k.pieces[i]) * v, score)
            }
            Concatenation::Product(ks) => {
                let mut out = Vec::with_capacity(ks.len());
                let mut worst = HalfInt::ZERO;
                for (i, k) in ks.iter().enumerate() {
                    let ui = Element::from_word(u.component(i).clone());
                    let vi = Element::from_word(v.component(i).clone());
                    let (j, score) = k.select_index(&ui, &vi);
                    worst = worst.max(score);
                    out.push(
                        ui.component(0)
                            .mul(k.pieces[j].component(0))
                            .mul(vi.component(0)),
                    );
                }
                (Element::from_components(out), worst)
            }
        }
    }

    /// The connector actually inserted for `(u, v)`.
    pub fn connector(&self, u: &Element, v: &Element) -> Element {
        match self {
            Concatenation::Naive => Element::identity(u.num_factors()),
            Concatenation::Kit(k) => k.pieces[k.select_index(u, v).0].clone(),
            Concatenation::Product(ks) => Element::from_components(
                ks.iter()
                    .enumerate()
                    .map(|(i, k)| {
                        let ui = Element::from_word(u.component(i).clone());
                        let vi = Element::from_word(v.component(i).clone());
                        k.pieces[k.select_index(&ui, &vi).0].component(0).clone()
                    })
                    .collect(),
            ),
        }
    }

    /// Every element the map can insert between `u` and `v`.
    pub fn connector_set(&self, num_factors: usize) -> Vec<Element> {
        match self {
            Concatenation::Naive => vec![Element::identity(num_factors)],
            Concatenation::Kit(k) => k.pieces.to_vec(),
            Concatenation::Product(ks) => {
                let mut acc: Vec<Vec<crate::Word>> = vec![Vec::new()];
                for k in ks {
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            k.pieces.iter().map(move |p| {
                                let mut next = prefix.clone();
                                next.push(p.component(0).clone());
                                next
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(Element::from_components).collect()
            }
        }
    }
}

impl fmt::Display for Concatenation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concatenation::Naive => write!(f, "naive"),
            Concatenation::Kit(k) => write!(f, "{k}"),
            Concatenation::Product(ks) => {
                let parts: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
                write!(f, "product[{}]", parts.join("; "))
            }
        }
    }
}

/// All `(u, v)` in `B(s) × ball_v` with `Φ(u, v) = z`, found by solving for
/// `u = z·v⁻¹·x⁻¹` over connectors `x`, keeping `u` only when `|u| ≤ s`, `u`
/// is in the subgroup, and `x` is the connector `Φ` picks for `(u, v)`.
pub fn fiber(
    concat: &Concatenation,
    z: &Element,
    s: usize,
    ball_v: &[Element],
    oracle: Option<&SubgroupOracle>,
) -> Vec<(Element, Element)> {
    let connectors = concat.connector_set(z.num_factors());
    let mut out = Vec::new();
    for v in ball_v {
        let zv = z * &v.inverse();
        for x in &connectors {
            let u = &zv * &x.inverse();
            if u.word_length() > s {
                continue;
            }
            if oracle.is_some_and(|o| o.contains(&u).ok() != Some(Membership::Member)) {
                continue;
            }
            if concat.connector(&u, v) == *x {
                out.push((u, v.clone()));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguityCell {
    pub s: usize,
    pub t: usize,
    /// `s + t + c`: every image lies in this ball.
    pub radius: usize,
    pub max_fiber: u64,
    /// Shortlex-least image attaining `max_fiber`.
    pub argmax: Element,
}

/// `l(t) = slope·t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub slope: f64,
    pub intercept: f64,
    /// Largest `t` used in the fit.
    pub fit_t: usize,
}

impl Envelope {
    pub fn eval(&self, t: usize) -> f64 {
        self.slope * t as f64 + self.intercept
    }

    pub fn as_function(&self) -> FunctionSpec {
        FunctionSpec::Affine {
            slope: self.slope,
            intercept: self.intercept,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguityReport {
    pub concatenation: String,
    pub c: usize,
    pub s_max: usize,
    pub t_max: usize,
    pub pairs: u64,
    /// Row-major in `(s, t)`.
    pub cells: Vec<AmbiguityCell>,
    pub envelope: Envelope,
    /// Cells with `t` beyond the fit whose fiber exceeds the envelope.
    pub violations: Vec<(usize, usize)>,
    /// Largest connector-selection score seen.
    pub max_score: HalfInt,
    /// Pairs with `|Φ(u,v)| > |u| + |v| + c`; always zero for a correct map.
    pub containment_failures: u64,
    /// Ambient elements whose subgroup membership was `Unknown`.
    pub unknown: usize,
}

impl AmbiguityReport {
    pub fn cell(&self, s: usize, t: usize) -> Option<&AmbiguityCell> {
        if s > self.s_max || t > self.t_max {
            return None;
        }
        self.cells.get(s * (self.t_max + 1) + t)
    }

    /// Max fiber over all `s` for each `t`.
    pub fn column_maxima(&self) -> Vec<u64> {
        (0..=self.t_max)
            .map(|t| {
                (0..=self.s_max)
                    .filter_map(|s| self.cell(s, t))
                    .map(|c| c.max_fiber)
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    }

    /// `s,t,max_fiber,argmax_image` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,t,max_fiber,argmax_image\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{}\n", c.s, c.t, c.max_fiber, c.argmax));
        }
        out
    }
}

/// Least affine `l(t) = αt + γ`, `α ≥ 0`, lying on or above every point,
/// minimizing the sum of `l` over the points; ties go to the smaller slope.
pub fn fit_envelope(points: &[(usize, u64)]) -> (f64, f64) {
    let top = points.iter().map(|p| p.1).max().unwrap_or(0) as f64;
    let mut best = (0.0, top);
    let objective = |a: f64, g: f64| points.iter().map(|&(t, _)| a * t as f64 + g).sum::<f64>();
    let mut best_obj = objective(best.0, best.1);
    let feasible = |a: f64, g: f64| {
        points
            .iter()
            .all(|&(t, m)| a * t as f64 + g >= m as f64 - 1e-9)
    };
    for (i, &(t1, m1)) in points.iter().enumerate() {
        for &(t2, m2) in &points[i + 1..] {
            if t1 == t2 {
                continue;
            }
            let a = (m2 as f64 - m1 as f64) / (t2 as f64 - t1 as f64);
            if a < 0.0 {
                continue;
            }
            let g = m1 as f64 - a * t1 as f64;
            if !feasible(a, g) {
                continue;
            }
            let obj = objective(a, g);
            if obj < best_obj - 1e-9 || ((obj - best_obj).abs() <= 1e-9 && a < best.0) {
                best = (a, g);
                best_obj = obj;
            }
        }
    }
    best
}

/// Enumerates `Φ` over `B_H(s_max) × B_H(t_max)` (or the whole group when no
/// oracle is given), records the max fiber for every `(s, t)`, fits an
/// affine envelope on `t ≤ fit_t` and flags later cells above it.
///
/// Pairs are bucketed by sorting on the image, so results do not depend on
/// the number of workers. If `|B(s_max)|·|B(t_max)|` exceeds
/// `budget.max_elements`, the error carries the report for the largest
/// square range that fits.
pub fn measure_ambiguity(
    concat: &Concatenation,
    descriptor: &GroupDescriptor,
    oracle: Option<&SubgroupOracle>,
    s_max: usize,
    t_max: usize,
    fit_t: usize,
    budget: Budget,
) -> Result<AmbiguityReport> {
    concat.check(descriptor)?;
    let radius = s_max.max(t_max);
    let ball = match oracle {
        Some(o) => relative_ball(descriptor, o, radius, budget)?,
        None => enumerate_ball(descriptor, radius, budget)?,
    };
    let pairs = ball.within(s_max).len() as u128 * ball.within(t_max).len() as u128;
    if pairs > budget.max_elements as u128 {
        let mut r = s_max.min(t_max);
        while r > 0 && (ball.within(r).len() as u128).pow(2) > budget.max_elements as u128 {
            r -= 1;
        }
        let partial = ambiguity_on(concat, &ball, r, r, fit_t.min(r));
        return Err(Error::AmbiguityBudgetExceeded {
            limit: budget.max_elements,
            partial: Box::new(partial),
        });
    }
    Ok(ambiguity_on(concat, &ball, s_max, t_max, fit_t))
}

fn ambiguity_on(
    concat: &Concatenation,
    ball: &Ball,
    s_max: usize,
    t_max: usize,
    fit_t: usize,
) -> AmbiguityReport {
    let us = ball.within(s_max);
    let vs = ball.within(t_max);
    let c = concat.c();

    let (mut images, max_score, containment_failures) = us
        .par_iter()
        .map(|u| {
            let lu = u.word_length();
            let mut local = Vec::with_capacity(vs.len());
            let mut score = HalfInt::ZERO;
            let mut bad = 0u64;
            for v in vs {
                let lv = v.word_length();
                let (z, sc) = concat.apply(u, v);
                score = score.max(sc);
                if z.word_length() > lu + lv + c {
                    bad += 1;
                }
                local.push((z, lu as u8, lv as u8));
            }
            (local, score, bad)
        })
        .reduce(
            || (Vec::new(), HalfInt::ZERO, 0),
            |mut a, b| {
                a.0.extend(b.0);
                (a.0, a.1.max(b.1), a.2 + b.2)
            },
        );
    images.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));

    let mut starts = vec![0];
    for i in 1..images.len() {
        if images[i].0 != images[i - 1].0 {
            starts.push(i);
        }
    }
    starts.push(images.len());

    let width = t_max + 1;
    let cells = (s_max + 1) * width;
    // For each (s, t): (max fiber, index of the first group attaining it).
    let best = (0..starts.len() - 1)
        .into_par_iter()
        .fold(
            || vec![(0u64, usize::MAX); cells],
            |mut acc, gi| {
                let mut hist = vec![0u64; cells];
                for (_, lu, lv) in &images[starts[gi]..starts[gi + 1]] {
                    hist[*lu as usize * width + *lv as usize] += 1;
                }
                for s in 0..=s_max {
                    for t in 0..=t_max {
                        let mut v = hist[s * width + t];
                        if s > 0 {
                            v += hist[(s - 1) * width + t];
                        }
                        if t > 0 {
                            v += hist[s * width + t - 1];
                        }
                        if s > 0 && t > 0 {
                            v -= hist[(s - 1) * width + t - 1];
                        }
                        hist[s * width + t] = v;
                    }
                }
                for (slot, &v) in acc.iter_mut().zip(&hist) {
                    if v > slot.0 || (v == slot.0 && v > 0 && gi < slot.1) {
                        *slot = (v, gi);
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![(0u64, usize::MAX); cells],
            |a, b| {
                a.into_iter()
                    .zip(b)
                    .map(|(x, y)| {
                        if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                            y
                        } else {
                            x
                        }
                    })
                    .collect()
            },
        );

    let cells: Vec<AmbiguityCell> = best
        .into_iter()
        .enumerate()
        .map(|(i, (max_fiber, gi))| AmbiguityCell {
            s: i / width,
            t: i % width,
            radius: i / width + i % width + c,
            max_fiber,
            argmax: images[starts[gi]].0.clone(),
        })
        .collect();

    let mut report = AmbiguityReport {
        concatenation: concat.to_string(),
        c,
        s_max,
        t_max,
        pairs: images.len() as u64,
        cells,
        envelope: Envelope {
            slope: 0.0,
            intercept: 0.0,
            fit_t: fit_t.min(t_max),
        },
        violations: Vec::new(),
        max_score,
        containment_failures,
        unknown: ball.unknown,
    };
    let columns = report.column_maxima();
    let fit_points: Vec<(usize, u64)> = columns
        .iter()
        .copied()
        .enumerate()
        .take(report.envelope.fit_t + 1)
        .collect();
    let (slope, intercept) = fit_envelope(&fit_points);
    report.envelope.slope = slope;
    report.envelope.intercept = intercept;
    report.violations = report
        .cells
        .iter()
        .filter(|c| {
            c.t > report.envelope.fit_t && c.max_fiber as f64 > report.envelope.eval(c.t) + 1e-9
        })
        .map(|c| (c.s, c.t))
        .collect();
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupermultiplicativityCheck {
    pub holds: bool,
    pub violations: Vec<(usize, usize)>,
    pub pairs_checked: usize,
}

/// Checks `β(s)·β(t) ≤ l(t)·β(s+t+c)` for every `(s, t)` with
/// `s + t + c ≤ N`.
pub fn verify_supermultiplicativity(
    table: &GrowthTable,
    c: usize,
    l: &FunctionSpec,
) -> Result<SupermultiplicativityCheck> {
    let top = table.max_radius();
    if top < c {
        return Err(Error::RangeShortfall {
            needed: c,
            available: top,
        });
    }
    check_pairs(table, c, l, top - c, top - c)
}

/// As [`verify_supermultiplicativity`], restricted to `s ≤ s_max` and
/// `t ≤ t_max`; the table must reach `s_max + t_max + c`.
pub fn verify_supermultiplicativity_within(
    table: &GrowthTable,
    c: usize,
    l: &FunctionSpec,
    s_max: usize,
    t_max: usize,
) -> Result<SupermultiplicativityCheck> {
    if s_max + t_max + c > table.max_radius() {
        return Err(Error::RangeShortfall {
            needed: s_max + t_max + c,
            available: table.max_radius(),
        });
    }
    check_pairs(table, c, l, s_max, t_max)
}

fn check_pairs(
    table: &GrowthTable,
    c: usize,
    l: &FunctionSpec,
    s_max: usize,
    t_max: usize,
) -> Result<SupermultiplicativityCheck> {
    let top = table.max_radius();
    let mut violations = Vec::new();
    let mut pairs = 0;
    for s in 0..=s_max {
        for t in 0..=t_max {
            if s + t + c > top {
                continue;
            }
            let factor = l.eval(t).ok_or(Error::RangeShortfall {
                needed: t,
                available: match l {
                    FunctionSpec::Table(v) => v.len().saturating_sub(1),
                    _ => usize::MAX,
                },
            })?;
            pairs += 1;
            let lhs = table.counts[s] as u128 * table.counts[t] as u128;
            if !le_scaled(lhs, factor, table.counts[s + t + c]) {
                violations.push((s, t));
            }
        }
    }
    Ok(SupermultiplicativityCheck {
        holds: violations.is_empty(),
        violations,
        pairs_checked: pairs,
    })
}
