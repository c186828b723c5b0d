//! Free groups, finite direct products of free groups, and their word metrics.
//!
//! Elements are stored in their unique freely reduced normal form, so
//! structural equality is group equality. The generating set is always the
//! standard symmetric one: `Σ 2k_i` letters for ranks `k_i`.
//!
//! Text syntax: a lowercase letter `a..z` is a generator of a factor, the
//! uppercase letter its inverse, `1` the empty word, and product elements are
//! written `(ab,B)`.

mod descriptor;
mod element;
mod word;

pub(crate) use descriptor::parse_element_at as descriptor_parse_element_at;
pub use descriptor::GroupDescriptor;
pub use element::Element;
pub use word::{GeneratorIndex, Letter, Sign, Word};

use crate::Result;
use std::cmp::Ordering;

/// Freely reduces a sequence of generators that all live in one factor.
pub fn reduce(raw: &[GeneratorIndex]) -> Result<Word> {
    Word::from_generators(raw)
}

pub fn multiply(u: &Element, v: &Element) -> Result<Element> {
    u.checked_mul(v)
}

pub fn invert(u: &Element) -> Element {
    u.inverse()
}

pub fn power(g: &Element, n: i64) -> Element {
    g.pow(n)
}

pub fn word_length(u: &Element) -> usize {
    u.word_length()
}

/// `d(u, v) = |u⁻¹v|`.
pub fn distance(u: &Element, v: &Element) -> Result<usize> {
    u.checked_distance(v)
}

pub fn shortlex_compare(u: &Element, v: &Element) -> Ordering {
    u.cmp(v)
}
