use super::{Element, GeneratorIndex, Letter, Sign, Word};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// A free group `F_k` or a finite direct product `F_{k_1} × … × F_{k_m}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupDescriptor {
    factors: Vec<usize>,
}

impl GroupDescriptor {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Malformed("a group needs at least one factor".into()));
        }
        if let Some(&k) = factors
            .iter()
            .find(|&&k| k == 0 || k > Letter::MAX_GENERATORS)
        {
            return Err(Error::Malformed(format!(
                "free factor rank {k} outside 1..={}",
                Letter::MAX_GENERATORS
            )));
        }
        Ok(Self { factors })
    }

    pub fn free(rank: usize) -> Result<Self> {
        Self::new(vec![rank])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn rank(&self, factor: usize) -> usize {
        self.factors[factor]
    }

    /// `Σ 2k_i`.
    pub fn generating_set_size(&self) -> usize {
        self.factors.iter().map(|k| 2 * k).sum()
    }

    pub fn identity(&self) -> Element {
        Element::identity(self.num_factors())
    }

    /// The symmetric generating set in shortlex letter order: factor
    /// ascending, generator ascending, positive before negative.
    pub fn generators(&self) -> Vec<GeneratorIndex> {
        let mut out = Vec::with_capacity(self.generating_set_size());
        for (factor, &k) in self.factors.iter().enumerate() {
            for letter in 0..k {
                out.push(GeneratorIndex::new(factor, letter, Sign::Positive));
                out.push(GeneratorIndex::new(factor, letter, Sign::Negative));
            }
        }
        out
    }

    pub fn generator_elements(&self) -> Vec<Element> {
        self.generators()
            .into_iter()
            .map(|g| {
                let mut e = self.identity();
                e.component_mut(g.factor)
                    .push(Letter::new(g.letter, g.sign));
                e
            })
            .collect()
    }

    /// Checks arity and per-factor rank.
    pub fn check(&self, e: &Element) -> Result<()> {
        if e.num_factors() != self.num_factors() {
            return Err(Error::DescriptorMismatch {
                expected: self.num_factors(),
                found: e.num_factors(),
            });
        }
        for (i, w) in e.components().iter().enumerate() {
            if let Some(g) = w.max_generator() {
                if g >= self.factors[i] {
                    return Err(Error::Malformed(format!(
                        "component {i} of {e} uses generator {g} but the factor has rank {}",
                        self.factors[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses an element in text syntax: `abA` in a single factor, `(ab,B)`
    /// for products.
    pub fn parse_element(&self, text: &str) -> Result<Element> {
        parse_element_at(self, text, 0)
    }

    /// Sub-descriptor on the given factor indices.
    pub fn restrict(&self, factor_set: &[usize]) -> Result<Self> {
        if factor_set.is_empty() {
            return Err(Error::Malformed("empty factor set".into()));
        }
        let mut ranks = Vec::with_capacity(factor_set.len());
        for &i in factor_set {
            if i >= self.num_factors() {
                return Err(Error::Malformed(format!("factor index {i} out of range")));
            }
            ranks.push(self.factors[i]);
        }
        Self::new(ranks)
    }
}

pub(crate) fn parse_element_at(d: &GroupDescriptor, text: &str, offset: usize) -> Result<Element> {
    let lead = text.len() - text.trim_start().len();
    let t = text.trim();
    let start = offset + lead;
    if let Some(inner) = t.strip_prefix('(') {
        let inner = inner.strip_suffix(')').ok_or_else(|| Error::Parse {
            column: start + t.len(),
            message: "missing closing parenthesis".into(),
        })?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != d.num_factors() {
            return Err(Error::Parse {
                column: start + 1,
                message: format!(
                    "element has {} component(s) but the group has {} factor(s)",
                    parts.len(),
                    d.num_factors()
                ),
            });
        }
        let mut pos = start + 1;
        let mut comps = Vec::with_capacity(parts.len());
        for (i, p) in parts.iter().enumerate() {
            comps.push(Word::parse_at(p, d.rank(i), pos)?);
            pos += p.len() + 1;
        }
        Ok(Element::from_components(comps))
    } else if d.num_factors() == 1 {
        Ok(Element::from_components(vec![Word::parse_at(
            t,
            d.rank(0),
            start,
        )?]))
    } else if t == "1" {
        Ok(d.identity())
    } else {
        Err(Error::Parse {
            column: start + 1,
            message: format!(
                "product group with {} factors needs a parenthesised tuple",
                d.num_factors()
            ),
        })
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [k] = self.factors.as_slice() {
            return write!(f, "free:{k}");
        }
        f.write_str("product(")?;
        for (i, k) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "free:{k}")?;
        }
        f.write_str(")")
    }
}

/// Grammar: `free:<rank>` | `product(<spec>,<spec>,…)`. Nested products are
/// flattened.
impl FromStr for GroupDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = SpecParser { src: s, pos: 0 };
        let mut factors = Vec::new();
        p.group(&mut factors)?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input after group spec"));
        }
        Self::new(factors)
    }
}

struct SpecParser<'a> {
    src: &'a str,
    pos: usize,
}

impl SpecParser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            column: self.pos + 1,
            message: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn group(&mut self, out: &mut Vec<usize>) -> Result<()> {
        if self.eat("free:") {
            let digits: String = self.src[self.pos..]
                .chars()
                .take_while(|c| c.is_ascii_digit())
                .collect();
            if digits.is_empty() {
                return Err(self.error("expected a rank after `free:`"));
            }
            let rank: usize = digits.parse().map_err(|_| self.error("rank too large"))?;
            if rank == 0 || rank > Letter::MAX_GENERATORS {
                return Err(self.error("rank must be between 1 and 26"));
            }
            self.pos += digits.len();
            out.push(rank);
            Ok(())
        } else if self.eat("product(") {
            loop {
                self.group(out)?;
                if self.eat(",") {
                    continue;
                }
                if self.eat(")") {
                    return Ok(());
                }
                return Err(self.error("expected `,` or `)` in product"));
            }
        } else {
            Err(self.error("expected `free:<rank>` or `product(…)`"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_descriptors() {
        let d: GroupDescriptor = "free:2".parse().unwrap();
        assert_eq!(d.factors(), &[2]);
        let d: GroupDescriptor = "product(free:2, free:1)".parse().unwrap();
        assert_eq!(d.factors(), &[2, 1]);
        assert_eq!(d.to_string(), "product(free:2,free:1)");
        assert_eq!(d.generating_set_size(), 6);
        let d: GroupDescriptor = "product(free:1,product(free:2,free:3))".parse().unwrap();
        assert_eq!(d.factors(), &[1, 2, 3]);
    }

    #[test]
    fn parse_errors_carry_columns() {
        let e = "free:".parse::<GroupDescriptor>().unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                column: 6,
                message: "expected a rank after `free:`".into()
            }
        );
        assert!(matches!(
            "product(free:2;free:2)".parse::<GroupDescriptor>(),
            Err(Error::Parse { column: 15, .. })
        ));
        assert!("free:0".parse::<GroupDescriptor>().is_err());
        assert!("free:2 x".parse::<GroupDescriptor>().is_err());
    }

    #[test]
    fn generator_order() {
        let d: GroupDescriptor = "product(free:2,free:1)".parse().unwrap();
        let names: Vec<String> = d
            .generator_elements()
            .iter()
            .map(|e| e.to_string())
            .collect();
        assert_eq!(
            names,
            ["(a,1)", "(A,1)", "(b,1)", "(B,1)", "(1,a)", "(1,A)"]
        );
    }

    #[test]
    fn element_parsing() {
        let d: GroupDescriptor = "product(free:2,free:2)".parse().unwrap();
        let e = d.parse_element("(ab,B)").unwrap();
        assert_eq!(e.to_string(), "(ab,B)");
        assert!(matches!(d.parse_element("(ab)"), Err(Error::Parse { .. })));
        assert!(matches!(d.parse_element("ab"), Err(Error::Parse { .. })));
        assert!(matches!(
            d.parse_element("(ab,c)"),
            Err(Error::Parse { column: 5, .. })
        ));
        assert_eq!(d.parse_element("1").unwrap(), d.identity());
    }
}
