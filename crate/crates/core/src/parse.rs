//! Canonical text form of GP trees.
//!
//! Grammar (UTF-8, bit-exact): `tree := leaf | "(J " tree " " tree ")"`,
//! `leaf := "x"<index> | "~x"<index>` with a decimal index >= 1 and no
//! leading zeros. Single spaces exactly as shown, no surrounding
//! whitespace.

use std::fmt;

use crate::terminal::Terminal;
use crate::tree::{BuildNode, GpTree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeParseError {
    /// The text deviates from the grammar at the given byte offset.
    Malformed { pos: usize, expected: &'static str },
    /// A leaf names a variable outside `[1, n]`.
    IndexOutOfRange { pos: usize, index: u64, n: u32 },
    /// A full tree was parsed but input remains.
    TrailingInput { pos: usize },
}

impl fmt::Display for TreeParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeParseError::Malformed { pos, expected } => {
                write!(f, "malformed tree text at byte {pos}: expected {expected}")
            }
            TreeParseError::IndexOutOfRange { pos, index, n } => {
                write!(f, "variable index {index} at byte {pos} outside [1, {n}]")
            }
            TreeParseError::TrailingInput { pos } => {
                write!(f, "trailing input after tree at byte {pos}")
            }
        }
    }
}

impl std::error::Error for TreeParseError {}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    n: u32,
    nodes: Vec<BuildNode>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8, expected: &'static str) -> Result<(), TreeParseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(TreeParseError::Malformed {
                pos: self.pos,
                expected,
            })
        }
    }

    fn parse_leaf(&mut self) -> Result<u32, TreeParseError> {
        let negated = if self.peek() == Some(b'~') {
            self.pos += 1;
            true
        } else {
            false
        };
        self.expect(b'x', "'x'")?;
        let start = self.pos;
        let mut index: u64 = 0;
        while let Some(b @ b'0'..=b'9') = self.peek() {
            index = index.saturating_mul(10).saturating_add((b - b'0') as u64);
            self.pos += 1;
        }
        if self.pos == start {
            return Err(TreeParseError::Malformed {
                pos: self.pos,
                expected: "decimal index",
            });
        }
        if self.bytes[start] == b'0' {
            // Canonical form has no leading zeros (and no index 0).
            return Err(TreeParseError::Malformed {
                pos: start,
                expected: "index without leading zero",
            });
        }
        if index < 1 || index > self.n as u64 {
            return Err(TreeParseError::IndexOutOfRange {
                pos: start,
                index,
                n: self.n,
            });
        }
        self.nodes
            .push(BuildNode::Leaf(Terminal::new(index as u32, negated)));
        Ok((self.nodes.len() - 1) as u32)
    }
}

/// Parse the canonical text form into a tree over `n` variables.
pub fn parse_tree(text: &str, n: u32) -> Result<GpTree, TreeParseError> {
    assert!(n >= 1, "problem size n must be >= 1");
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        n,
        nodes: Vec::new(),
    };

    // Explicit stack of joins awaiting children (holding a finished left
    // child or not yet), so deep input cannot overflow the call stack.
    let mut pending: Vec<Option<u32>> = Vec::new();
    let root: u32;
    'outer: loop {
        while p.peek() == Some(b'(') {
            p.pos += 1;
            p.expect(b'J', "'J' after '('")?;
            p.expect(b' ', "' ' after 'J'")?;
            pending.push(None);
        }
        let mut subtree = p.parse_leaf()?;
        loop {
            match pending.last_mut() {
                None => {
                    root = subtree;
                    break 'outer;
                }
                Some(slot @ None) => {
                    *slot = Some(subtree);
                    p.expect(b' ', "' ' between join children")?;
                    continue 'outer;
                }
                Some(Some(_)) => {
                    p.expect(b')', "')' closing join")?;
                    let left = pending.pop().flatten().expect("left child present");
                    p.nodes.push(BuildNode::Join {
                        left,
                        right: subtree,
                    });
                    subtree = (p.nodes.len() - 1) as u32;
                }
            }
        }
    }
    if p.pos != p.bytes.len() {
        return Err(TreeParseError::TrailingInput { pos: p.pos });
    }
    let tree = GpTree::assemble(p.nodes, root);
    debug_assert!(tree.audit().is_ok());
    Ok(tree)
}

/// Render the canonical text form.
pub fn serialize(tree: &GpTree) -> String {
    enum Item {
        Node(u32),
        Text(&'static str),
    }
    let mut out = String::new();
    let mut stack = vec![Item::Node(tree.root_id())];
    while let Some(item) = stack.pop() {
        match item {
            Item::Text(s) => out.push_str(s),
            Item::Node(id) => match tree.kind_of(id) {
                Err(terminal) => {
                    use std::fmt::Write;
                    write!(out, "{terminal}").expect("write to string");
                }
                Ok((left, right)) => {
                    out.push_str("(J ");
                    stack.push(Item::Text(")"));
                    stack.push(Item::Node(right));
                    stack.push(Item::Text(" "));
                    stack.push(Item::Node(left));
                }
            },
        }
    }
    out
}

impl fmt::Display for GpTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        let tree = parse_tree("(J x1 ~x4)", 4).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(tree.node_count(), 3);
        assert_eq!(serialize(&tree), "(J x1 ~x4)");

        let tree = parse_tree("x3", 3).unwrap();
        assert_eq!((tree.leaf_count(), tree.node_count()), (1, 1));
        assert_eq!(serialize(&tree), "x3");

        let tree = parse_tree("(J (J x1 ~x4) (J x2 ~x1))", 4).unwrap();
        assert_eq!(tree.leaf_count(), 4);
        let inorder: Vec<String> = tree
            .inorder_leaves()
            .iter()
            .map(|t| t.to_string())
            .collect();
        assert_eq!(inorder, ["x1", "~x4", "x2", "~x1"]);
        assert_eq!(serialize(&tree), "(J (J x1 ~x4) (J x2 ~x1))");
    }

    #[test]
    fn serializes_single_leaves_and_joins() {
        assert_eq!(serialize(&GpTree::leaf(Terminal::negated(2))), "~x2");
        assert_eq!(serialize(&parse_tree("(J x1 x1)", 1).unwrap()), "(J x1 x1)");
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in [
            "",
            "(J x1)",
            "(J x1 x2 x3)",
            "(J x1 x2",
            "(J  x1 x2)",
            "(Jx1 x2)",
            "( J x1 x2)",
            "x1 ",
            " x1",
            "(J x1 x2) ",
            "y1",
            "~~x1",
            "x01",
            "x0",
            "(J x1 x2))",
        ] {
            let err = parse_tree(bad, 9).unwrap_err();
            assert!(
                matches!(
                    err,
                    TreeParseError::Malformed { .. } | TreeParseError::TrailingInput { .. }
                ),
                "{bad:?} gave {err:?}"
            );
        }
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = parse_tree("(J x1 ~x4)", 3).unwrap_err();
        assert_eq!(
            err,
            TreeParseError::IndexOutOfRange {
                pos: 8,
                index: 4,
                n: 3
            }
        );
    }

    #[test]
    fn deep_vine_round_trips_without_recursion() {
        let mut text = String::from("x1");
        for _ in 0..20_000 {
            text = format!("(J {text} x1)");
        }
        let tree = parse_tree(&text, 1).unwrap();
        assert_eq!(tree.leaf_count(), 20_001);
        assert_eq!(serialize(&tree), text);
    }
}
