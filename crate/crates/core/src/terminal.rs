//! Signed variable terminals: the leaf alphabet `{x_1, ~x_1, ..., x_n, ~x_n}`.

use std::fmt;

use rand::Rng;

/// A signed variable: `x_i` (positive) or `~x_i` (negated), with `i >= 1`.
///
/// For a problem over `n` variables the terminal set has `2n` members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Terminal {
    index: u32,
    negated: bool,
}

impl Terminal {
    pub fn new(index: u32, negated: bool) -> Self {
        assert!(index >= 1, "terminal index must be >= 1");
        Terminal { index, negated }
    }

    pub fn positive(index: u32) -> Self {
        Terminal::new(index, false)
    }

    pub fn negated(index: u32) -> Self {
        Terminal::new(index, true)
    }

    pub fn index(self) -> u32 {
        self.index
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    pub fn is_positive(self) -> bool {
        !self.negated
    }

    /// The terminal with the same index and the opposite sign.
    pub fn complement(self) -> Self {
        Terminal {
            index: self.index,
            negated: !self.negated,
        }
    }

    /// Canonical enumeration of the `2n` terminals: slots `0..n` are
    /// `x_1..x_n`, slots `n..2n` are `~x_1..~x_n`.
    pub fn nth(slot: u32, n: u32) -> Self {
        assert!(n >= 1 && slot < 2 * n, "terminal slot out of range");
        if slot < n {
            Terminal::positive(slot + 1)
        } else {
            Terminal::negated(slot - n + 1)
        }
    }

    /// Draw a terminal uniformly from the `2n`-element alphabet.
    pub fn sample_uniform<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Self {
        Terminal::nth(rng.gen_range(0..2 * n), n)
    }

    /// Iterate the full alphabet in canonical order.
    pub fn all(n: u32) -> impl Iterator<Item = Terminal> {
        (0..2 * n).map(move |slot| Terminal::nth(slot, n))
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "~x{}", self.index)
        } else {
            write!(f, "x{}", self.index)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_involutive() {
        let t = Terminal::negated(4);
        assert_eq!(t.complement().complement(), t);
        assert_eq!(t.complement(), Terminal::positive(4));
    }

    #[test]
    fn canonical_enumeration_covers_alphabet() {
        let all: Vec<Terminal> = Terminal::all(3).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], Terminal::positive(1));
        assert_eq!(all[2], Terminal::positive(3));
        assert_eq!(all[3], Terminal::negated(1));
        assert_eq!(all[5], Terminal::negated(3));
    }

    #[test]
    fn display_matches_grammar() {
        assert_eq!(Terminal::positive(12).to_string(), "x12");
        assert_eq!(Terminal::negated(1).to_string(), "~x1");
    }

    #[test]
    #[should_panic]
    fn zero_index_rejected() {
        Terminal::positive(0);
    }
}
