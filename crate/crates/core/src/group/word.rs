use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

/// A letter of the symmetric generating set, addressed globally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeneratorIndex {
    pub factor: usize,
    pub letter: usize,
    pub sign: Sign,
}

impl GeneratorIndex {
    pub fn new(factor: usize, letter: usize, sign: Sign) -> Self {
        Self {
            factor,
            letter,
            sign,
        }
    }
}

/// A letter inside one free factor, packed as `2 * generator + inverse_bit`.
///
/// The numeric order is the shortlex letter order: generator ascending, the
/// positive letter before its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u8);

impl Letter {
    pub const MAX_GENERATORS: usize = 26;

    pub fn new(generator: usize, sign: Sign) -> Self {
        debug_assert!(generator < Self::MAX_GENERATORS);
        let bit = matches!(sign, Sign::Negative) as u8;
        Letter((generator as u8) << 1 | bit)
    }

    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn sign(self) -> Sign {
        if self.0 & 1 == 0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + self.generator() as u8) as char
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'a'..='z' => Some(Letter::new(c as usize - 'a' as usize, Sign::Positive)),
            'A'..='Z' => Some(Letter::new(c as usize - 'A' as usize, Sign::Negative)),
            _ => None,
        }
    }
}

/// A freely reduced word in one free factor.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: SmallVec<[Letter; 16]>,
}

impl Word {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn generator(letter: Letter) -> Self {
        let mut w = Self::empty();
        w.letters.push(letter);
        w
    }

    /// Builds a word from arbitrary letters, cancelling adjacent inverse pairs
    /// with a stack.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Self::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn from_generators(raw: &[GeneratorIndex]) -> Result<Self> {
        if let Some(first) = raw.first() {
            if let Some(bad) = raw.iter().find(|g| g.factor != first.factor) {
                return Err(Error::Malformed(format!(
                    "word mixes factors {} and {}",
                    first.factor, bad.factor
                )));
            }
        }
        if let Some(bad) = raw.iter().find(|g| g.letter >= Letter::MAX_GENERATORS) {
            return Err(Error::Malformed(format!(
                "generator index {} out of range",
                bad.letter
            )));
        }
        Ok(Self::from_letters(
            raw.iter().map(|g| Letter::new(g.letter, g.sign)),
        ))
    }

    /// Appends a letter, cancelling against the last letter if needed.
    #[inline]
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    pub fn inverse(&self) -> Self {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &Word) -> Word {
        let cancel = self
            .letters
            .iter()
            .rev()
            .zip(other.letters.iter())
            .take_while(|(a, b)| a.inverse() == **b)
            .count();
        let mut letters = SmallVec::with_capacity(self.len() + other.len() - 2 * cancel);
        letters.extend_from_slice(&self.letters[..self.len() - cancel]);
        letters.extend_from_slice(&other.letters[cancel..]);
        Word { letters }
    }

    /// Length of the longest common prefix. In the Cayley tree this is the
    /// Gromov product `(self.other)_1`.
    pub fn common_prefix(&self, other: &Word) -> usize {
        self.letters
            .iter()
            .zip(other.letters.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Prefix of the given length.
    pub fn prefix(&self, len: usize) -> Word {
        Word {
            letters: SmallVec::from_slice(&self.letters[..len]),
        }
    }

    /// Splits off the conjugator: returns `(p, r)` with `self = p r p⁻¹` and
    /// `r` cyclically reduced.
    pub fn cyclic_core(&self) -> (Word, Word) {
        let n = self.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == self.letters[n - 1 - k].inverse() {
            k += 1;
        }
        (
            self.prefix(k),
            Word {
                letters: SmallVec::from_slice(&self.letters[k..n - k]),
            },
        )
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.generator()).max()
    }

    pub fn parse(text: &str, rank: usize) -> Result<Self> {
        Self::parse_at(text, rank, 0)
    }

    pub(crate) fn parse_at(text: &str, rank: usize, offset: usize) -> Result<Self> {
        let trimmed = text.trim();
        let lead = text.len() - text.trim_start().len();
        if trimmed == "1" {
            return Ok(Self::empty());
        }
        if trimmed.is_empty() {
            return Err(Error::Parse {
                column: offset + lead + 1,
                message: "empty word (write `1` for the identity)".into(),
            });
        }
        let mut w = Self::empty();
        for (i, c) in trimmed.char_indices() {
            let column = offset + lead + i + 1;
            let l = Letter::from_char(c).ok_or_else(|| Error::Parse {
                column,
                message: format!("unexpected character {c:?} in word"),
            })?;
            if l.generator() >= rank {
                return Err(Error::Parse {
                    column,
                    message: format!("letter {c:?} exceeds factor rank {rank}"),
                });
            }
            w.push(l);
        }
        Ok(w)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("1");
        }
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}
