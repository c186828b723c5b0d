//! Gromov products, four-point hyperbolicity, quasigeodesics, Hausdorff
//! distance and acylindricity witnesses over finite configurations.
//!
//! Word-metric distances are integers, so every Gromov product is a multiple
//! of one half and is carried exactly as a [`HalfInt`].

use crate::cayley::{enumerate_ball, Budget};
use crate::group::{Element, GroupDescriptor};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::fmt;

/// Exhaustive δ scans refuse more than this many unordered quadruples.
pub const MAX_EXHAUSTIVE_QUADRUPLES: u128 = 200_000_000;

/// A number in `½ℤ`, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub fn from_halves(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub fn halves(self) -> i64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            let sign = if self.0 < 0 { "-" } else { "" };
            write!(f, "{sign}{}.5", self.0.unsigned_abs() / 2)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_integer() {
            s.serialize_i64(self.0 / 2)
        } else {
            s.serialize_f64(self.to_f64())
        }
    }
}

/// A finite metric space with integer distances.
#[derive(Debug, Clone)]
pub struct FiniteMetric {
    labels: Vec<String>,
    dist: Vec<u64>,
}

impl FiniteMetric {
    /// Validates symmetry, the zero diagonal, positivity off the diagonal and
    /// every triangle inequality.
    pub fn from_matrix(labels: Vec<String>, rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        if labels.len() != n {
            return Err(Error::Malformed(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Malformed(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            dist.extend_from_slice(row);
        }
        let m = Self { labels, dist };
        for i in 0..n {
            if m.d(i, i) != 0 {
                return Err(Error::Malformed(format!("d({i},{i}) is not zero")));
            }
            for j in 0..n {
                if m.d(i, j) != m.d(j, i) {
                    return Err(Error::Malformed(format!("d({i},{j}) != d({j},{i})")));
                }
                if i != j && m.d(i, j) == 0 {
                    return Err(Error::Malformed(format!("d({i},{j}) is zero")));
                }
            }
        }
        let bad = (0..n).into_par_iter().find_map_first(|i| {
            for j in 0..n {
                for k in 0..n {
                    if m.d(i, k) > m.d(i, j) + m.d(j, k) {
                        return Some((i, j, k));
                    }
                }
            }
            None
        });
        if let Some((i, j, k)) = bad {
            return Err(Error::Malformed(format!(
                "triangle inequality fails at ({i},{j},{k})"
            )));
        }
        Ok(m)
    }

    /// The word metric on a list of group elements. Repeated elements are
    /// kept as distinct points at distance zero.
    pub fn from_elements(descriptor: &GroupDescriptor, points: &[Element]) -> Result<Self> {
        for p in points {
            descriptor.check(p)?;
        }
        let n = points.len();
        let dist: Vec<u64> = (0..n * n)
            .into_par_iter()
            .map(|ij| points[ij / n].distance(&points[ij % n]) as u64)
            .collect();
        Ok(Self {
            labels: points.iter().map(|p| p.to_string()).collect(),
            dist,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> u64 {
        self.dist[i * self.labels.len() + j]
    }

    /// `(i.j)_o` in the stored metric.
    pub fn gromov_product(&self, i: usize, j: usize, o: usize) -> HalfInt {
        HalfInt(self.d(i, o) as i64 + self.d(j, o) as i64 - self.d(i, j) as i64)
    }

    /// Smallest δ making the four points `δ`-hyperbolic for every ordering:
    /// half the gap between the two largest pair sums.
    pub fn quadruple_delta(&self, q: [usize; 4]) -> HalfInt {
        let [a, b, c, e] = q;
        let mut s = [
            self.d(a, b) + self.d(c, e),
            self.d(a, c) + self.d(b, e),
            self.d(a, e) + self.d(b, c),
        ];
        s.sort_unstable();
        HalfInt((s[2] - s[1]) as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    Exhaustive,
    Random { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaEstimate {
    pub delta: HalfInt,
    /// Point indices of a quadruple attaining `delta`, if it is positive.
    pub witness: Option<[usize; 4]>,
    pub quadruples: u128,
}

fn binomial4(n: usize) -> u128 {
    let n = n as u128;
    if n < 4 {
        0
    } else {
        n * (n - 1) * (n - 2) * (n - 3) / 24
    }
}

/// Minimal δ for which `(x.y)_o ≥ min((x.z)_o, (z.y)_o) - δ` holds on all
/// (exhaustive) or sampled (random) ordered quadruples.
///
/// For a fixed set of four points, ranging over all orderings gives exactly
/// the four-point condition on pair sums, so the exhaustive scan visits each
/// unordered set of four distinct indices once: `C(n,4)` work. Quadruples
/// with a repeated point never force a positive δ.
pub fn estimate_delta(sample: &FiniteMetric, mode: DeltaMode) -> Result<DeltaEstimate> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::Empty("metric sample"));
    }
    match mode {
        DeltaMode::Exhaustive => {
            let count = binomial4(n);
            if count > MAX_EXHAUSTIVE_QUADRUPLES {
                return Err(Error::TooManyQuadruples {
                    count,
                    cap: MAX_EXHAUSTIVE_QUADRUPLES,
                });
            }
            let best = (0..n)
                .into_par_iter()
                .map(|a| {
                    let mut best: (HalfInt, Option<[usize; 4]>) = (HalfInt::ZERO, None);
                    for b in a + 1..n {
                        for c in b + 1..n {
                            for e in c + 1..n {
                                let q = [a, b, c, e];
                                let d = sample.quadruple_delta(q);
                                if d > best.0 {
                                    best = (d, Some(q));
                                }
                            }
                        }
                    }
                    best
                })
                .reduce(|| (HalfInt::ZERO, None), pick_delta);
            Ok(DeltaEstimate {
                delta: best.0,
                witness: best.1,
                quadruples: count,
            })
        }
        DeltaMode::Random { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: (HalfInt, Option<[usize; 4]>) = (HalfInt::ZERO, None);
            for _ in 0..trials {
                let q = [
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                ];
                let d = sample.quadruple_delta(q);
                best = pick_delta(best, (d, Some(q)));
            }
            Ok(DeltaEstimate {
                delta: best.0,
                witness: best.1.filter(|_| best.0 > HalfInt::ZERO),
                quadruples: trials as u128,
            })
        }
    }
}

type DeltaCandidate = (HalfInt, Option<[usize; 4]>);

fn pick_delta(x: DeltaCandidate, y: DeltaCandidate) -> DeltaCandidate {
    match x.0.cmp(&y.0) {
        std::cmp::Ordering::Greater => x,
        std::cmp::Ordering::Less => y,
        std::cmp::Ordering::Equal => match (x.1, y.1) {
            (Some(a), Some(b)) if b < a => y,
            (None, Some(_)) => y,
            _ => x,
        },
    }
}

/// `(x.y)_o = ½(d(x,o) + d(y,o) - d(x,y))`.
pub fn gromov_product(x: &Element, y: &Element, o: &Element) -> Result<HalfInt> {
    let dxo = x.checked_distance(o)? as i64;
    let dyo = y.checked_distance(o)? as i64;
    let dxy = x.checked_distance(y)? as i64;
    Ok(HalfInt(dxo + dyo - dxy))
}

/// `(x.y)_z = (gx.gy)_{gz}`.
pub fn check_equivariance(g: &Element, x: &Element, y: &Element, z: &Element) -> Result<bool> {
    let before = gromov_product(x, y, z)?;
    let after = gromov_product(&g.checked_mul(x)?, &g.checked_mul(y)?, &g.checked_mul(z)?)?;
    Ok(before == after)
}

/// A map from the integer interval `[start, start + len)` to group elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretePath {
    start: i64,
    points: Vec<Element>,
}

impl DiscretePath {
    pub fn new(start: i64, points: Vec<Element>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("path"));
        }
        let n = points[0].num_factors();
        if let Some(p) = points.iter().find(|p| p.num_factors() != n) {
            return Err(Error::DescriptorMismatch {
                expected: n,
                found: p.num_factors(),
            });
        }
        Ok(Self { start, points })
    }

    /// `t ↦ g^t` for `t` in `[from, to]`.
    pub fn orbit(g: &Element, from: i64, to: i64) -> Result<Self> {
        if to < from {
            return Err(Error::Empty("path"));
        }
        let mut points = Vec::with_capacity((to - from + 1) as usize);
        let mut cur = g.pow(from);
        for _ in from..=to {
            let next = &cur * g;
            points.push(cur);
            cur = next;
        }
        Self::new(from, points)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.points.len() as i64 - 1
    }

    pub fn at(&self, t: i64) -> Option<&Element> {
        usize::try_from(t - self.start)
            .ok()
            .and_then(|i| self.points.get(i))
    }

    pub fn points(&self) -> &[Element] {
        &self.points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasigeodesicCheck {
    pub holds: bool,
    /// The parameter pair `(t, t')` with the largest violation, ties going to
    /// the lexicographically smallest pair.
    pub violation: Option<(i64, i64)>,
}

/// Checks `|t'-t|/λ - ε ≤ d(c(t'), c(t)) ≤ λ|t'-t| + ε` on every pair.
pub fn is_quasigeodesic(
    path: &DiscretePath,
    lambda: f64,
    epsilon: f64,
) -> Result<QuasigeodesicCheck> {
    if lambda.is_nan() || lambda < 1.0 || epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::Malformed(format!(
            "need λ ≥ 1 and ε ≥ 0, got λ={lambda}, ε={epsilon}"
        )));
    }
    let n = path.points.len();
    let worst = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst: Option<(f64, usize, usize)> = None;
            for j in i + 1..n {
                let gap = (j - i) as f64;
                let d = path.points[i].distance(&path.points[j]) as f64;
                let deficit = (gap / lambda - epsilon - d).max(d - lambda * gap - epsilon);
                if deficit > 0.0 && worst.is_none_or(|w| deficit > w.0) {
                    worst = Some((deficit, i, j));
                }
            }
            worst
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => {
                    Some(if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                        y
                    } else {
                        x
                    })
                }
                (x, None) => x,
                (None, y) => y,
            },
        );
    Ok(QuasigeodesicCheck {
        holds: worst.is_none(),
        violation: worst.map(|(_, i, j)| (path.start + i as i64, path.start + j as i64)),
    })
}

/// `Hd(A, B)`: the larger of the two directed nearest-point deviations.
pub fn hausdorff_distance(a: &[Element], b: &[Element]) -> Result<usize> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let directed = |from: &[Element], to: &[Element]| -> Result<usize> {
        let mut worst = 0;
        for x in from {
            let mut near = usize::MAX;
            for y in to {
                near = near.min(x.checked_distance(y)?);
            }
            worst = worst.max(near);
        }
        Ok(worst)
    };
    Ok(directed(a, b)?.max(directed(b, a)?))
}

/// The vertices of the unique geodesic from `p` to `q` in a free group.
pub fn tree_geodesic(p: &Element, q: &Element) -> Result<Vec<Element>> {
    if p.num_factors() != 1 || q.num_factors() != 1 {
        return Err(Error::Unsupported(
            "geodesics are unique only in a single free factor".into(),
        ));
    }
    let (u, v) = (p.component(0), q.component(0));
    let l = u.common_prefix(v);
    let mut out: Vec<Element> = (l..=u.len())
        .rev()
        .map(|k| Element::from_word(u.prefix(k)))
        .collect();
    out.extend((l + 1..=v.len()).map(|k| Element::from_word(v.prefix(k))));
    Ok(out)
}

/// Hausdorff distance between the image of `path` and the geodesic joining
/// its endpoints.
pub fn quasigeodesic_deviation(path: &DiscretePath) -> Result<usize> {
    let first = &path.points[0];
    let last = &path.points[path.points.len() - 1];
    let geodesic = tree_geodesic(first, last)?;
    hausdorff_distance(&path.points, &geodesic)
}

/// All `g` with `d(x, gx) ≤ ε` and `d(y, gy) ≤ ε`, in shortlex order. The
/// first condition means `g = x w x⁻¹` with `|w| ≤ ε`.
pub fn acylindricity_witnesses(
    descriptor: &GroupDescriptor,
    x: &Element,
    y: &Element,
    epsilon: usize,
) -> Result<Vec<Element>> {
    descriptor.check(x)?;
    descriptor.check(y)?;
    let ball = enumerate_ball(descriptor, epsilon, Budget::with_max_elements(usize::MAX))?;
    let x_inv = x.inverse();
    let mut out: Vec<Element> = ball
        .elements
        .par_iter()
        .map(|w| &(x * w) * &x_inv)
        .filter(|g| y.distance(&(g * y)) <= epsilon)
        .collect();
    out.sort_unstable();
    Ok(out)
}
