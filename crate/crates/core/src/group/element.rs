use super::{GeneratorIndex, Letter, Word};
use crate::{Error, Result};
use serde::{Serialize, Serializer};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

/// A group element: one reduced word per direct factor, in factor order.
///
/// `Ord` is shortlex: total word length first, then the lexicographic order of
/// the concatenated `(factor, letter)` sequence.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Element {
    components: SmallVec<[Word; 2]>,
}

impl Element {
    pub fn identity(num_factors: usize) -> Self {
        Self {
            components: (0..num_factors).map(|_| Word::empty()).collect(),
        }
    }

    pub fn from_components(components: Vec<Word>) -> Self {
        Self {
            components: components.into(),
        }
    }

    /// Element of a single free factor.
    pub fn from_word(word: Word) -> Self {
        Self::from_components(vec![word])
    }

    /// Evaluates a sequence of global generators.
    pub fn from_generators(num_factors: usize, gens: &[GeneratorIndex]) -> Result<Self> {
        let mut e = Self::identity(num_factors);
        for g in gens {
            if g.factor >= num_factors {
                return Err(Error::Malformed(format!(
                    "factor {} out of range",
                    g.factor
                )));
            }
            e.components[g.factor].push(Letter::new(g.letter, g.sign));
        }
        Ok(e)
    }

    pub fn components(&self) -> &[Word] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Word {
        &self.components[i]
    }

    pub(crate) fn component_mut(&mut self, i: usize) -> &mut Word {
        &mut self.components[i]
    }

    pub fn num_factors(&self) -> usize {
        self.components.len()
    }

    pub fn is_identity(&self) -> bool {
        self.components.iter().all(Word::is_empty)
    }

    /// `|g|_X = Σ_i |g_i|_{X_i}`.
    pub fn word_length(&self) -> usize {
        self.components.iter().map(Word::len).sum()
    }

    pub fn inverse(&self) -> Self {
        Self {
            components: self.components.iter().map(Word::inverse).collect(),
        }
    }

    fn check_arity(&self, other: &Self) -> Result<()> {
        if self.num_factors() != other.num_factors() {
            return Err(Error::DescriptorMismatch {
                expected: self.num_factors(),
                found: other.num_factors(),
            });
        }
        Ok(())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        Ok(self * other)
    }

    pub fn checked_distance(&self, other: &Self) -> Result<usize> {
        self.check_arity(other)?;
        Ok(self.distance(other))
    }

    /// `|self⁻¹ other|`, computed without materializing the product: per
    /// factor it is the tree distance `|u| + |v| - 2·lcp(u, v)`.
    pub fn distance(&self, other: &Self) -> usize {
        debug_assert_eq!(self.num_factors(), other.num_factors());
        self.components
            .iter()
            .zip(other.components.iter())
            .map(|(u, v)| u.len() + v.len() - 2 * u.common_prefix(v))
            .sum()
    }

    /// Right multiplication by a single generator letter in one factor.
    pub fn mul_letter(&self, factor: usize, letter: Letter) -> Self {
        let mut e = self.clone();
        e.components[factor].push(letter);
        e
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Self::identity(self.num_factors());
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }

    /// Globally indexed letters in factor order.
    pub fn generator_sequence(&self) -> impl Iterator<Item = GeneratorIndex> + '_ {
        self.components.iter().enumerate().flat_map(|(f, w)| {
            w.letters()
                .iter()
                .map(move |l| GeneratorIndex::new(f, l.generator(), l.sign()))
        })
    }

    fn flat_keys(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.components
            .iter()
            .enumerate()
            .flat_map(|(f, w)| w.letters().iter().map(move |l| (f, l.code())))
    }
}

/// Panics if the operands have different numbers of factors; use
/// [`Element::checked_mul`] for a fallible product.
impl Mul for &Element {
    type Output = Element;

    fn mul(self, rhs: &Element) -> Element {
        assert_eq!(
            self.num_factors(),
            rhs.num_factors(),
            "multiplying elements of different groups"
        );
        Element {
            components: self
                .components
                .iter()
                .zip(rhs.components.iter())
                .map(|(u, v)| u.mul(v))
                .collect(),
        }
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.word_length()
            .cmp(&other.word_length())
            .then_with(|| self.num_factors().cmp(&other.num_factors()))
            .then_with(|| self.flat_keys().cmp(other.flat_keys()))
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [w] = self.components.as_slice() {
            return write!(f, "{w}");
        }
        f.write_str("(")?;
        for (i, w) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element({self})")
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
