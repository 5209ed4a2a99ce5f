//! Arena-backed binary parse trees and the HVL-Mutate' edit primitives.
//!
//! Every internal node is a binary `J` (join); every leaf holds a
//! [`Terminal`]. The arena keeps parent links plus dense lists of live
//! nodes and live leaves, so uniform node/leaf sampling is O(1) and each
//! structural edit is O(depth). Edits are captured as replayable
//! [`MutationRecord`]s.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::terminal::Terminal;

const NIL: u32 = u32::MAX;

static NEXT_TREE_TAG: AtomicU64 = AtomicU64::new(1);

fn fresh_tag() -> u64 {
    NEXT_TREE_TAG.fetch_add(1, Ordering::Relaxed)
}

/// Which side of a join a child sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "L"),
            Side::Right => write!(f, "R"),
        }
    }
}

/// Left/right turns from the root identifying a node position.
///
/// Paths name positions in the pre-mutation tree, so a recorded edit can be
/// replayed on a structurally equal copy.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePath(Vec<Side>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn from_sides(sides: Vec<Side>) -> Self {
        NodePath(sides)
    }

    pub fn sides(&self) -> &[Side] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, ".");
        }
        for side in &self.0 {
            write!(f, "{side}")?;
        }
        Ok(())
    }
}

/// Handle to an arena node, valid only for the issuing tree until the next
/// mutation.
#[derive(Debug, Clone, Copy)]
pub struct NodeRef {
    id: u32,
    tag: u64,
    stamp: u64,
}

/// Handle that additionally guarantees the node is a leaf.
#[derive(Debug, Clone, Copy)]
pub struct LeafRef {
    id: u32,
    tag: u64,
    stamp: u64,
}

impl From<LeafRef> for NodeRef {
    fn from(leaf: LeafRef) -> NodeRef {
        NodeRef {
            id: leaf.id,
            tag: leaf.tag,
            stamp: leaf.stamp,
        }
    }
}

/// A handle was used after the tree changed, or on a different tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StaleHandle;

impl fmt::Display for StaleHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stale tree handle: the tree has been mutated or the handle belongs to another tree"
        )
    }
}

impl std::error::Error for StaleHandle {}

/// The three HVL-Mutate' sub-operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationOp {
    Substitute,
    Insert,
    Delete,
}

impl fmt::Display for MutationOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MutationOp::Substitute => write!(f, "sub"),
            MutationOp::Insert => write!(f, "ins"),
            MutationOp::Delete => write!(f, "del"),
        }
    }
}

/// One applied sub-operation, with enough detail to replay it on a copy of
/// the pre-mutation tree and to update terminal counts incrementally.
///
/// `added`/`removed` are the terminals entering/leaving the leaf multiset:
/// an insert only adds, a delete only removes (nothing on the vacuous
/// single-leaf delete), a substitution does both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationRecord {
    pub op: MutationOp,
    /// Position of the acted-on node in the pre-mutation tree.
    pub path: NodePath,
    pub added: Option<Terminal>,
    pub removed: Option<Terminal>,
    /// Insert only: which child of the new join the fresh leaf becomes.
    pub side: Option<Side>,
    /// Delete on a single-leaf tree leaves the tree unchanged.
    pub vacuous: bool,
}

impl fmt::Display for MutationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            MutationOp::Substitute => write!(
                f,
                "sub@{}:{}->{}",
                self.path,
                self.removed.expect("substitute records a removed terminal"),
                self.added.expect("substitute records an added terminal"),
            ),
            MutationOp::Insert => write!(
                f,
                "ins@{}:{}:{}",
                self.path,
                self.added.expect("insert records an added terminal"),
                self.side.expect("insert records a side"),
            ),
            MutationOp::Delete => {
                if self.vacuous {
                    write!(f, "del@{}:vacuous", self.path)
                } else {
                    write!(
                        f,
                        "del@{}:{}",
                        self.path,
                        self.removed.expect("delete records a removed terminal"),
                    )
                }
            }
        }
    }
}

/// Replaying a [`MutationRecord`] failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayError {
    /// The record's path does not name a node in this tree.
    BadPath(NodePath),
    /// The path resolves to a join where the operation needs a leaf.
    NotALeaf(NodePath),
    /// The record is internally inconsistent (e.g. an insert without a side).
    MalformedRecord,
}

impl fmt::Display for ReplayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayError::BadPath(p) => write!(f, "replay: no node at path {p}"),
            ReplayError::NotALeaf(p) => write!(f, "replay: node at path {p} is not a leaf"),
            ReplayError::MalformedRecord => write!(f, "replay: malformed mutation record"),
        }
    }
}

impl std::error::Error for ReplayError {}

/// A structural invariant of the arena failed a full recount.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditError(pub String);

impl fmt::Display for AuditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tree audit failed: {}", self.0)
    }
}

impl std::error::Error for AuditError {}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Join { left: u32, right: u32 },
    Leaf(Terminal),
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parent: u32,
    kind: Kind,
    /// Position in `live`.
    live_slot: u32,
    /// Position in `leaves` (leaves only, NIL otherwise).
    leaf_slot: u32,
}

/// Arena-backed GP tree.
///
/// Invariants kept at all times (see [`GpTree::audit`]):
/// node count `S = 2T - 1` for leaf count `T >= 1`, parent/child links
/// mutually consistent, and the live/leaf index lists exactly mirror the
/// nodes reachable from the root.
#[derive(Debug)]
pub struct GpTree {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    live: Vec<u32>,
    leaves: Vec<u32>,
    tag: u64,
    stamp: u64,
}

impl GpTree {
    /// The smallest legal tree: one leaf.
    pub fn leaf(terminal: Terminal) -> Self {
        let node = Node {
            parent: NIL,
            kind: Kind::Leaf(terminal),
            live_slot: 0,
            leaf_slot: 0,
        };
        GpTree {
            nodes: vec![node],
            free: Vec::new(),
            root: 0,
            live: vec![0],
            leaves: vec![0],
            tag: fresh_tag(),
            stamp: 0,
        }
    }

    /// Number of leaves `T`.
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Number of nodes `S = 2T - 1`.
    pub fn node_count(&self) -> usize {
        self.live.len()
    }

    pub fn root(&self) -> NodeRef {
        NodeRef {
            id: self.root,
            tag: self.tag,
            stamp: self.stamp,
        }
    }

    fn bump(&mut self) {
        self.stamp += 1;
    }

    fn check_node(&self, r: NodeRef) -> Result<u32, StaleHandle> {
        if r.tag == self.tag && r.stamp == self.stamp {
            Ok(r.id)
        } else {
            Err(StaleHandle)
        }
    }

    fn check_leaf(&self, r: LeafRef) -> Result<u32, StaleHandle> {
        if r.tag == self.tag && r.stamp == self.stamp {
            debug_assert!(matches!(self.nodes[r.id as usize].kind, Kind::Leaf(_)));
            Ok(r.id)
        } else {
            Err(StaleHandle)
        }
    }

    fn alloc(&mut self, node: Node) -> u32 {
        match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn push_live(&mut self, id: u32) {
        self.nodes[id as usize].live_slot = self.live.len() as u32;
        self.live.push(id);
    }

    fn remove_live(&mut self, id: u32) {
        let slot = self.nodes[id as usize].live_slot as usize;
        self.live.swap_remove(slot);
        if let Some(&moved) = self.live.get(slot) {
            self.nodes[moved as usize].live_slot = slot as u32;
        }
    }

    fn push_leaf_index(&mut self, id: u32) {
        self.nodes[id as usize].leaf_slot = self.leaves.len() as u32;
        self.leaves.push(id);
    }

    fn remove_leaf_index(&mut self, id: u32) {
        let slot = self.nodes[id as usize].leaf_slot as usize;
        self.leaves.swap_remove(slot);
        if let Some(&moved) = self.leaves.get(slot) {
            self.nodes[moved as usize].leaf_slot = slot as u32;
        }
    }

    // -- handles and lookups ------------------------------------------------

    /// Uniform draw over all `S` nodes (joins and leaves, root included).
    pub fn sample_node<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeRef {
        let id = self.live[rng.gen_range(0..self.live.len())];
        NodeRef {
            id,
            tag: self.tag,
            stamp: self.stamp,
        }
    }

    /// Uniform draw over all `T` leaves.
    pub fn sample_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> LeafRef {
        let id = self.leaves[rng.gen_range(0..self.leaves.len())];
        LeafRef {
            id,
            tag: self.tag,
            stamp: self.stamp,
        }
    }

    pub fn terminal_of(&self, leaf: LeafRef) -> Result<Terminal, StaleHandle> {
        let id = self.check_leaf(leaf)?;
        match self.nodes[id as usize].kind {
            Kind::Leaf(t) => Ok(t),
            Kind::Join { .. } => unreachable!("leaf handle on join"),
        }
    }

    /// The leaf at a given inorder position (0-based).
    pub fn leaf_at_inorder(&self, position: usize) -> Option<LeafRef> {
        let mut seen = 0usize;
        let mut found = None;
        self.visit_leaf_ids(|id| {
            if seen == position {
                found = Some(id);
            }
            seen += 1;
        });
        found.map(|id| LeafRef {
            id,
            tag: self.tag,
            stamp: self.stamp,
        })
    }

    pub fn node_at_path(&self, path: &NodePath) -> Option<NodeRef> {
        let id = self.id_at_path(path)?;
        Some(NodeRef {
            id,
            tag: self.tag,
            stamp: self.stamp,
        })
    }

    pub fn leaf_at_path(&self, path: &NodePath) -> Option<LeafRef> {
        let id = self.id_at_path(path)?;
        match self.nodes[id as usize].kind {
            Kind::Leaf(_) => Some(LeafRef {
                id,
                tag: self.tag,
                stamp: self.stamp,
            }),
            Kind::Join { .. } => None,
        }
    }

    fn id_at_path(&self, path: &NodePath) -> Option<u32> {
        let mut id = self.root;
        for side in path.sides() {
            match self.nodes[id as usize].kind {
                Kind::Join { left, right } => {
                    id = match side {
                        Side::Left => left,
                        Side::Right => right,
                    }
                }
                Kind::Leaf(_) => return None,
            }
        }
        Some(id)
    }

    pub fn path_of(&self, node: NodeRef) -> Result<NodePath, StaleHandle> {
        let id = self.check_node(node)?;
        Ok(self.path_of_id(id))
    }

    fn path_of_id(&self, mut id: u32) -> NodePath {
        let mut sides = Vec::new();
        loop {
            let parent = self.nodes[id as usize].parent;
            if parent == NIL {
                break;
            }
            match self.nodes[parent as usize].kind {
                Kind::Join { left, .. } => {
                    sides.push(if left == id { Side::Left } else { Side::Right });
                }
                Kind::Leaf(_) => unreachable!("leaf as parent"),
            }
            id = parent;
        }
        sides.reverse();
        NodePath(sides)
    }

    // -- traversal ----------------------------------------------------------

    /// Visit every leaf terminal in inorder (left subtree before right at
    /// every join), without allocating.
    pub fn for_each_leaf_inorder(&self, mut f: impl FnMut(Terminal)) {
        self.visit_leaf_ids(|id| match self.nodes[id as usize].kind {
            Kind::Leaf(t) => f(t),
            Kind::Join { .. } => unreachable!(),
        });
    }

    fn visit_leaf_ids(&self, mut f: impl FnMut(u32)) {
        let mut stack: Vec<u32> = Vec::with_capacity(16);
        let mut cur = self.root;
        loop {
            loop {
                match self.nodes[cur as usize].kind {
                    Kind::Join { left, .. } => {
                        stack.push(cur);
                        cur = left;
                    }
                    Kind::Leaf(_) => {
                        f(cur);
                        break;
                    }
                }
            }
            match stack.pop() {
                Some(join) => match self.nodes[join as usize].kind {
                    Kind::Join { right, .. } => cur = right,
                    Kind::Leaf(_) => unreachable!(),
                },
                None => return,
            }
        }
    }

    /// The inorder leaf sequence as an owned list.
    pub fn inorder_leaves(&self) -> Vec<Terminal> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.for_each_leaf_inorder(|t| out.push(t));
        out
    }

    // -- edit primitives ----------------------------------------------------

    /// Replace the leaf's terminal with `u`. `T` and `S` are unchanged;
    /// replacing a terminal with itself is a legal (vacuous) move.
    pub fn substitute(
        &mut self,
        leaf: LeafRef,
        u: Terminal,
    ) -> Result<MutationRecord, StaleHandle> {
        let id = self.check_leaf(leaf)?;
        let path = self.path_of_id(id);
        let old = match self.nodes[id as usize].kind {
            Kind::Leaf(t) => t,
            Kind::Join { .. } => unreachable!(),
        };
        self.nodes[id as usize].kind = Kind::Leaf(u);
        self.bump();
        Ok(MutationRecord {
            op: MutationOp::Substitute,
            path,
            added: Some(u),
            removed: Some(old),
            side: None,
            vacuous: false,
        })
    }

    /// Put a new join where `v` was; its children are a fresh leaf `u` and
    /// `v`, with `u` on `side`. Inserting at the root creates a new root.
    /// `T` grows by 1, `S` by 2.
    pub fn insert(
        &mut self,
        v: NodeRef,
        u: Terminal,
        side: Side,
    ) -> Result<MutationRecord, StaleHandle> {
        let vid = self.check_node(v)?;
        let path = self.path_of_id(vid);
        let parent = self.nodes[vid as usize].parent;

        let leaf_id = self.alloc(Node {
            parent: NIL,
            kind: Kind::Leaf(u),
            live_slot: NIL,
            leaf_slot: NIL,
        });
        let (left, right) = match side {
            Side::Left => (leaf_id, vid),
            Side::Right => (vid, leaf_id),
        };
        let join_id = self.alloc(Node {
            parent,
            kind: Kind::Join { left, right },
            live_slot: NIL,
            leaf_slot: NIL,
        });
        self.nodes[leaf_id as usize].parent = join_id;
        self.nodes[vid as usize].parent = join_id;

        if parent == NIL {
            self.root = join_id;
        } else {
            match &mut self.nodes[parent as usize].kind {
                Kind::Join { left, right } => {
                    if *left == vid {
                        *left = join_id;
                    } else {
                        debug_assert_eq!(*right, vid);
                        *right = join_id;
                    }
                }
                Kind::Leaf(_) => unreachable!("leaf as parent"),
            }
        }

        self.push_live(join_id);
        self.push_live(leaf_id);
        self.push_leaf_index(leaf_id);
        self.bump();
        Ok(MutationRecord {
            op: MutationOp::Insert,
            path,
            added: Some(u),
            removed: None,
            side: Some(side),
            vacuous: false,
        })
    }

    /// Remove leaf `v` and its parent join, promoting the sibling subtree.
    /// On a single-leaf tree this is a vacuous move: the tree is unchanged
    /// and the record is flagged.
    pub fn delete(&mut self, v: LeafRef) -> Result<MutationRecord, StaleHandle> {
        let vid = self.check_leaf(v)?;
        let path = self.path_of_id(vid);
        let parent = self.nodes[vid as usize].parent;

        if parent == NIL {
            // Single-leaf tree: nothing to promote.
            self.bump();
            return Ok(MutationRecord {
                op: MutationOp::Delete,
                path,
                added: None,
                removed: None,
                side: None,
                vacuous: true,
            });
        }

        let term = match self.nodes[vid as usize].kind {
            Kind::Leaf(t) => t,
            Kind::Join { .. } => unreachable!(),
        };
        let sibling = match self.nodes[parent as usize].kind {
            Kind::Join { left, right } => {
                if left == vid {
                    right
                } else {
                    debug_assert_eq!(right, vid);
                    left
                }
            }
            Kind::Leaf(_) => unreachable!("leaf as parent"),
        };
        let grand = self.nodes[parent as usize].parent;

        self.nodes[sibling as usize].parent = grand;
        if grand == NIL {
            self.root = sibling;
        } else {
            match &mut self.nodes[grand as usize].kind {
                Kind::Join { left, right } => {
                    if *left == parent {
                        *left = sibling;
                    } else {
                        debug_assert_eq!(*right, parent);
                        *right = sibling;
                    }
                }
                Kind::Leaf(_) => unreachable!("leaf as parent"),
            }
        }

        self.remove_leaf_index(vid);
        self.remove_live(vid);
        self.remove_live(parent);
        self.free.push(vid);
        self.free.push(parent);
        self.bump();
        Ok(MutationRecord {
            op: MutationOp::Delete,
            path,
            added: None,
            removed: Some(term),
            side: None,
            vacuous: false,
        })
    }

    /// One HVL-Mutate' step: choose substitute, insert, or delete with
    /// probability 1/3 each, then draw the operation's parameters uniformly
    /// (leaf over `T`, node over `S`, terminal over `2n`, side over 2).
    pub fn hvl_prime_step<R: Rng + ?Sized>(&mut self, rng: &mut R, n: u32) -> MutationRecord {
        match rng.gen_range(0..3u32) {
            0 => {
                let leaf = self.sample_leaf(rng);
                let u = Terminal::sample_uniform(n, rng);
                self.substitute(leaf, u).expect("fresh handle")
            }
            1 => {
                let node = self.sample_node(rng);
                let u = Terminal::sample_uniform(n, rng);
                let side = if rng.gen_range(0..2u32) == 0 {
                    Side::Left
                } else {
                    Side::Right
                };
                self.insert(node, u, side).expect("fresh handle")
            }
            _ => {
                let leaf = self.sample_leaf(rng);
                self.delete(leaf).expect("fresh handle")
            }
        }
    }

    /// Replay a recorded sub-operation. The record's path must resolve in
    /// this tree exactly as it did in the tree the record was taken from.
    pub fn apply_record(&mut self, record: &MutationRecord) -> Result<(), ReplayError> {
        match record.op {
            MutationOp::Substitute => {
                let leaf = self.resolve_leaf(&record.path)?;
                let u = record.added.ok_or(ReplayError::MalformedRecord)?;
                self.substitute(leaf, u).expect("fresh handle");
            }
            MutationOp::Insert => {
                let node = self
                    .node_at_path(&record.path)
                    .ok_or_else(|| ReplayError::BadPath(record.path.clone()))?;
                let u = record.added.ok_or(ReplayError::MalformedRecord)?;
                let side = record.side.ok_or(ReplayError::MalformedRecord)?;
                self.insert(node, u, side).expect("fresh handle");
            }
            MutationOp::Delete => {
                let leaf = self.resolve_leaf(&record.path)?;
                self.delete(leaf).expect("fresh handle");
            }
        }
        Ok(())
    }

    fn resolve_leaf(&self, path: &NodePath) -> Result<LeafRef, ReplayError> {
        let id = self
            .id_at_path(path)
            .ok_or_else(|| ReplayError::BadPath(path.clone()))?;
        match self.nodes[id as usize].kind {
            Kind::Leaf(_) => Ok(LeafRef {
                id,
                tag: self.tag,
                stamp: self.stamp,
            }),
            Kind::Join { .. } => Err(ReplayError::NotALeaf(path.clone())),
        }
    }

    // -- verification -------------------------------------------------------

    /// Full recount of every structural invariant: reachability, parent
    /// links, `S = 2T - 1`, and agreement of the live/leaf index lists.
    pub fn audit(&self) -> Result<(), AuditError> {
        let cap = self.nodes.len();
        let mut reached = vec![false; cap];
        let mut leaf_seen = 0usize;
        let mut node_seen = 0usize;

        if self.root as usize >= cap {
            return Err(AuditError("root out of bounds".into()));
        }
        if self.nodes[self.root as usize].parent != NIL {
            return Err(AuditError("root has a parent".into()));
        }

        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let idx = id as usize;
            if idx >= cap {
                return Err(AuditError(format!("node {id} out of bounds")));
            }
            if reached[idx] {
                return Err(AuditError(format!("node {id} reached twice")));
            }
            reached[idx] = true;
            node_seen += 1;
            match self.nodes[idx].kind {
                Kind::Leaf(_) => {
                    leaf_seen += 1;
                    let slot = self.nodes[idx].leaf_slot as usize;
                    if self.leaves.get(slot) != Some(&id) {
                        return Err(AuditError(format!("leaf {id} has a bad leaf slot")));
                    }
                }
                Kind::Join { left, right } => {
                    for child in [left, right] {
                        if child as usize >= cap {
                            return Err(AuditError(format!("child {child} out of bounds")));
                        }
                        if self.nodes[child as usize].parent != id {
                            return Err(AuditError(format!(
                                "child {child} does not point back to parent {id}"
                            )));
                        }
                        stack.push(child);
                    }
                }
            }
            let slot = self.nodes[idx].live_slot as usize;
            if self.live.get(slot) != Some(&id) {
                return Err(AuditError(format!("node {id} has a bad live slot")));
            }
        }

        if node_seen != self.live.len() {
            return Err(AuditError(format!(
                "live list has {} entries but {} nodes are reachable",
                self.live.len(),
                node_seen
            )));
        }
        if leaf_seen != self.leaves.len() {
            return Err(AuditError(format!(
                "leaf list has {} entries but {} leaves are reachable",
                self.leaves.len(),
                leaf_seen
            )));
        }
        if node_seen != 2 * leaf_seen - 1 {
            return Err(AuditError(format!(
                "S = {node_seen} but 2T - 1 = {}",
                2 * leaf_seen - 1
            )));
        }
        for &id in &self.free {
            if reached[id as usize] {
                return Err(AuditError(format!("free-list node {id} is reachable")));
            }
        }
        Ok(())
    }

    /// Shape-and-terminal equality, independent of arena layout.
    pub fn structural_eq(&self, other: &GpTree) -> bool {
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            match (&self.nodes[a as usize].kind, &other.nodes[b as usize].kind) {
                (Kind::Leaf(ta), Kind::Leaf(tb)) => {
                    if ta != tb {
                        return false;
                    }
                }
                (
                    Kind::Join {
                        left: la,
                        right: ra,
                    },
                    Kind::Join {
                        left: lb,
                        right: rb,
                    },
                ) => {
                    stack.push((*la, *lb));
                    stack.push((*ra, *rb));
                }
                _ => return false,
            }
        }
        true
    }

    pub(crate) fn root_id(&self) -> u32 {
        self.root
    }

    pub(crate) fn kind_of(&self, id: u32) -> Result<(u32, u32), Terminal> {
        match self.nodes[id as usize].kind {
            Kind::Join { left, right } => Ok((left, right)),
            Kind::Leaf(t) => Err(t),
        }
    }

    /// Assemble an arena from parser output. Every entry must be reachable
    /// from `root` exactly once; parent links and index lists are derived
    /// here.
    pub(crate) fn assemble(build: Vec<BuildNode>, root: u32) -> GpTree {
        let mut nodes: Vec<Node> = build
            .into_iter()
            .map(|b| Node {
                parent: NIL,
                kind: match b {
                    BuildNode::Leaf(t) => Kind::Leaf(t),
                    BuildNode::Join { left, right } => Kind::Join { left, right },
                },
                live_slot: NIL,
                leaf_slot: NIL,
            })
            .collect();

        let mut live = Vec::with_capacity(nodes.len());
        let mut leaves = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            nodes[id as usize].live_slot = live.len() as u32;
            live.push(id);
            match nodes[id as usize].kind {
                Kind::Leaf(_) => {
                    nodes[id as usize].leaf_slot = leaves.len() as u32;
                    leaves.push(id);
                }
                Kind::Join { left, right } => {
                    nodes[left as usize].parent = id;
                    nodes[right as usize].parent = id;
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        debug_assert_eq!(live.len(), nodes.len());

        GpTree {
            nodes,
            free: Vec::new(),
            root,
            live,
            leaves,
            tag: fresh_tag(),
            stamp: 0,
        }
    }
}

/// Parser-facing node description for [`GpTree::assemble`].
pub(crate) enum BuildNode {
    Leaf(Terminal),
    Join { left: u32, right: u32 },
}

impl PartialEq for GpTree {
    fn eq(&self, other: &Self) -> bool {
        self.structural_eq(other)
    }
}

impl Eq for GpTree {}

impl Clone for GpTree {
    fn clone(&self) -> Self {
        GpTree {
            nodes: self.nodes.clone(),
            free: self.free.clone(),
            root: self.root,
            live: self.live.clone(),
            leaves: self.leaves.clone(),
            tag: fresh_tag(),
            stamp: 0,
        }
    }

    /// Reuses the destination's buffers; the destination keeps its identity
    /// but all its outstanding handles are invalidated.
    fn clone_from(&mut self, source: &Self) {
        self.nodes.clone_from(&source.nodes);
        self.free.clone_from(&source.free);
        self.root = source.root;
        self.live.clone_from(&source.live);
        self.leaves.clone_from(&source.leaves);
        self.stamp += 1;
    }
}
