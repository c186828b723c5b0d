//! Brackets for `lim f(n)^{1/n}` from a finite growth table.
//!
//! Under the hypothesis `f(m)f(n) ≤ ε(n)·f(m+n+l(n))` for `m, n ≥ C`, every
//! admissible `s` gives the lower bound `(f(s)/ε(s))^{1/(s+l(s))}`; the upper
//! end is the monotone envelope of the root sequence. Counts are exact
//! integers; roots are `f64` evaluations of `exp(ln x / n)`, snapped to an
//! integer when `x` is an exact integer power.

use crate::cayley::GrowthTable;
use crate::{Error, Result};
use serde::{Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// A function of one natural argument: constant, affine, or tabulated from 0.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Const(f64),
    Affine { slope: f64, intercept: f64 },
    Table(Vec<f64>),
}

impl FunctionSpec {
    pub fn eval(&self, n: usize) -> Option<f64> {
        match self {
            FunctionSpec::Const(c) => Some(*c),
            FunctionSpec::Affine { slope, intercept } => Some(slope * n as f64 + intercept),
            FunctionSpec::Table(v) => v.get(n).copied(),
        }
    }

    fn eval_or_err(&self, n: usize) -> Result<f64> {
        self.eval(n).ok_or(Error::RangeShortfall {
            needed: n,
            available: match self {
                FunctionSpec::Table(v) => v.len().saturating_sub(1),
                _ => usize::MAX,
            },
        })
    }

    /// Evaluates a shift, which must be a nonnegative integer.
    fn shift_at(&self, n: usize) -> Result<usize> {
        let v = self.eval_or_err(n)?;
        if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
            return Err(Error::Malformed(format!(
                "shift l({n}) = {v} is not a nonnegative integer"
            )));
        }
        Ok(v as usize)
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Const(c) => write!(f, "const:{}", fmt_num(*c)),
            FunctionSpec::Affine { slope, intercept } => {
                write!(f, "affine:{},{}", fmt_num(*slope), fmt_num(*intercept))
            }
            FunctionSpec::Table(v) => {
                let parts: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (kind, body) = text.split_once(':').ok_or_else(|| Error::Parse {
            column: 1,
            message: format!("expected const:, affine: or table:, got {text:?}"),
        })?;
        let offset = kind.len() + 2;
        let mut nums = Vec::new();
        let mut col = offset;
        for part in body.split(',') {
            let x: f64 = part.trim().parse().map_err(|_| Error::Parse {
                column: col,
                message: format!("not a number: {part:?}"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    column: col,
                    message: format!("not finite: {part:?}"),
                });
            }
            nums.push(x);
            col += part.len() + 1;
        }
        match (kind, nums.as_slice()) {
            ("const", [c]) => Ok(FunctionSpec::Const(*c)),
            ("affine", [slope, intercept]) => Ok(FunctionSpec::Affine {
                slope: *slope,
                intercept: *intercept,
            }),
            ("table", _) => Ok(FunctionSpec::Table(nums)),
            ("const" | "affine", _) => Err(Error::Parse {
                column: offset,
                message: format!("wrong number of values for {kind}"),
            }),
            _ => Err(Error::Parse {
                column: 1,
                message: format!("unknown function kind {kind:?}"),
            }),
        }
    }
}

/// `f(m)f(n) ≤ ε(n)·f(m+n+l(n))` for `m, n ≥ threshold`, and optionally
/// `1 ≤ f(n) ≤ B^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateHypothesis {
    pub epsilon: FunctionSpec,
    pub shift: FunctionSpec,
    pub threshold: usize,
    pub growth_bound: Option<f64>,
}

impl RateHypothesis {
    pub fn new(epsilon: FunctionSpec, shift: FunctionSpec) -> Self {
        Self {
            epsilon,
            shift,
            threshold: 1,
            growth_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub holds: bool,
    /// Pairs `(m, n)` where the inequality fails.
    pub violations: Vec<(usize, usize)>,
    /// Radii `n` where `1 ≤ f(n) ≤ B^n` fails.
    pub bound_violations: Vec<usize>,
    pub pairs_checked: usize,
}

/// One step of the quotient-remainder walk `n = q(s + l(s)) + r`, which gives
/// `f(n) ≥ f(q(s+l(s))) ≥ (f(s)/ε(s))^q` for nondecreasing `f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkStep {
    pub n: usize,
    pub q: usize,
    pub r: usize,
    /// `(f(s)/ε(s))^{q/n}`, the root lower bound implied at `n`.
    pub implied_root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    /// `(n, f(n)^{1/n})` for `n ≥ 1`.
    pub roots: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub witness_s: Vec<usize>,
    pub hypothesis_ok: bool,
    pub violations: Vec<(usize, usize)>,
    /// The walk for the first witness; diagnostic only.
    pub walk: Vec<WalkStep>,
}

/// `x^{1/n}`, exact when `x` is an integer `k^n`.
fn integer_root(x: f64, n: usize) -> f64 {
    let r = (x.ln() / n as f64).exp();
    let k = r.round();
    if x.fract() == 0.0 && x < 2f64.powi(53) && k >= 1.0 {
        let mut p: u128 = 1;
        for _ in 0..n {
            p = match p.checked_mul(k as u128) {
                Some(p) => p,
                None => return r,
            };
            if p > x as u128 {
                return r;
            }
        }
        if p == x as u128 {
            return k;
        }
    }
    r
}

fn check_entries(f: &GrowthTable) -> Result<()> {
    match f.counts.iter().position(|&c| c == 0) {
        Some(i) => Err(Error::ZeroEntry(i)),
        None => Ok(()),
    }
}

/// `a_n = f(n)^{1/n}` for `n = 1..=N`.
pub fn root_sequence(f: &GrowthTable) -> Result<Vec<(usize, f64)>> {
    check_entries(f)?;
    Ok(f.counts
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &c)| (n, integer_root(c as f64, n)))
        .collect())
}

/// `a ≤ e·b` with exact integer arithmetic when `e` is an integer.
pub(crate) fn le_scaled(a: u128, e: f64, b: u64) -> bool {
    if e >= 0.0 && e.fract() == 0.0 && e < 2f64.powi(64) {
        (e as u128)
            .checked_mul(b as u128)
            .is_none_or(|rhs| a <= rhs)
    } else {
        (a as f64) <= e * b as f64
    }
}

/// Checks the hypothesis on every `(m, n)` with `m, n ≥ C` whose shifted
/// index `m + n + l(n)` lies in the table.
pub fn check_hypothesis(f: &GrowthTable, hyp: &RateHypothesis) -> Result<HypothesisCheck> {
    let top = f.max_radius();
    let c = hyp.threshold;
    let mut violations = Vec::new();
    let mut pairs = 0;
    for n in c..=top {
        let l = hyp.shift.shift_at(n)?;
        if c + n + l > top {
            continue;
        }
        let e = hyp.epsilon.eval_or_err(n)?;
        for m in c..=top - n - l {
            pairs += 1;
            let lhs = f.counts[m] as u128 * f.counts[n] as u128;
            if !le_scaled(lhs, e, f.counts[m + n + l]) {
                violations.push((m, n));
            }
        }
    }
    if pairs == 0 {
        return Err(Error::RangeShortfall {
            needed: 2 * c + hyp.shift.shift_at(c)?,
            available: top,
        });
    }
    violations.sort_unstable();
    let bound_violations = match hyp.growth_bound {
        Some(b) => f
            .counts
            .iter()
            .enumerate()
            .filter(|&(n, &v)| v < 1 || (v as f64) > b.powi(n as i32))
            .map(|(n, _)| n)
            .collect(),
        None => Vec::new(),
    };
    Ok(HypothesisCheck {
        holds: violations.is_empty() && bound_violations.is_empty(),
        violations,
        bound_violations,
        pairs_checked: pairs,
    })
}

/// The certified lower bound and empirical upper bound. When the hypothesis
/// fails on the table the lower bound is conditional and `hypothesis_ok` is
/// false.
pub fn fekete_lower_bound(f: &GrowthTable, hyp: &RateHypothesis) -> Result<RateEstimate> {
    let roots = root_sequence(f)?;
    let top = f.max_radius();
    let check = check_hypothesis(f, hyp);
    let (hypothesis_ok, violations) = match check {
        Ok(c) => (c.holds, c.violations),
        Err(Error::RangeShortfall { .. }) => (false, Vec::new()),
        Err(e) => return Err(e),
    };

    let mut candidates = Vec::new();
    for s in hyp.threshold.max(1)..=top {
        let e = hyp.epsilon.eval_or_err(s)?;
        if e <= 0.0 {
            return Err(Error::Malformed(format!("ε({s}) = {e} is not positive")));
        }
        let period = s + hyp.shift.shift_at(s)?;
        let ratio = f.counts[s] as f64 / e;
        candidates.push((s, period, e, integer_root(ratio, period)));
    }
    if candidates.is_empty() {
        return Err(Error::Empty("admissible s range"));
    }
    let lower = candidates
        .iter()
        .map(|c| c.3)
        .fold(f64::NEG_INFINITY, f64::max);
    let witness_s: Vec<usize> = candidates
        .iter()
        .filter(|c| c.3 == lower)
        .map(|c| c.0)
        .collect();

    let mut suffix = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for &(_, a) in roots.iter().rev() {
        suffix = suffix.max(a);
        upper = upper.min(suffix);
    }

    let (s, period, e, _) = candidates
        .iter()
        .find(|c| c.0 == witness_s[0])
        .copied()
        .expect("witness among candidates");
    let log_base = (f.counts[s] as f64 / e).ln();
    let walk = (1..=top)
        .map(|n| {
            let q = n / period;
            WalkStep {
                n,
                q,
                r: n % period,
                implied_root: (q as f64 * log_base / n as f64).exp(),
            }
        })
        .collect();

    Ok(RateEstimate {
        roots,
        lower,
        upper,
        witness_s,
        hypothesis_ok,
        violations,
        walk,
    })
}

#[cfg(test)]
mod tests;
