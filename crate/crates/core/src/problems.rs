//! The ORDER and MAJORITY fitness functions, deficit bookkeeping, and the
//! exact stuck-state characterization for strict single-step climbing on
//! MAJORITY.
//!
//! Both problems score a tree by inspecting its leaves: ORDER walks the
//! inorder leaf list and counts positive variables whose first occurrence
//! precedes any occurrence of their complement; MAJORITY counts variables
//! with at least as many positive as negated occurrences (and at least
//! one positive). Neither executes the program the tree denotes.

use std::fmt;

use crate::terminal::Terminal;
use crate::tree::{GpTree, MutationRecord};

/// Which model problem is being optimized, and over how many variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Order { n: u32 },
    Majority { n: u32 },
}

impl ProblemKind {
    pub fn n(self) -> u32 {
        match self {
            ProblemKind::Order { n } | ProblemKind::Majority { n } => n,
        }
    }

    pub fn is_majority(self) -> bool {
        matches!(self, ProblemKind::Majority { .. })
    }

    /// Evaluate a tree from scratch.
    pub fn evaluate(self, tree: &GpTree) -> Fitness {
        match self {
            ProblemKind::Order { n } => order_fitness_of_tree(tree, n),
            ProblemKind::Majority { n } => DeficitProfile::from_tree(tree, n).fitness(),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKind::Order { n } => write!(f, "order(n={n})"),
            ProblemKind::Majority { n } => write!(f, "majority(n={n})"),
        }
    }
}

/// An integer fitness value in `[0, n]`; `n` means optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fitness(u32);

impl Fitness {
    pub const ZERO: Fitness = Fitness(0);

    pub fn new(value: u32) -> Self {
        Fitness(value)
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// ORDER's conditional execution path: the first-occurrence subsequence of
/// the inorder leaf list, at most one terminal per variable index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionPath(Vec<Terminal>);

impl ExecutionPath {
    pub fn terminals(&self) -> &[Terminal] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ExecutionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
            first = false;
        }
        Ok(())
    }
}

/// ORDER fitness of a leaf sequence: scan front to back, expressing a
/// terminal only if neither it nor its complement has been expressed yet;
/// the score is the number of positive terminals expressed.
pub fn order_fitness(leaves: &[Terminal], n: u32) -> (Fitness, ExecutionPath) {
    let mut seen = vec![false; n as usize + 1];
    let mut path = Vec::new();
    let mut score = 0u32;
    for &t in leaves {
        let i = t.index() as usize;
        assert!(i <= n as usize, "leaf index {i} exceeds n = {n}");
        if !seen[i] {
            seen[i] = true;
            path.push(t);
            if t.is_positive() {
                score += 1;
            }
        }
    }
    (Fitness(score), ExecutionPath(path))
}

fn order_fitness_of_tree(tree: &GpTree, n: u32) -> Fitness {
    let mut scratch = OrderEvaluator::new(n);
    scratch.fitness_of_tree(tree)
}

/// Reusable ORDER evaluator: one scan per call, no per-call allocation.
///
/// ORDER is always evaluated by a fresh inorder scan; its first-occurrence
/// semantics do not decompose per mutation the way MAJORITY counts do.
#[derive(Debug, Clone)]
pub struct OrderEvaluator {
    n: u32,
    mark: Vec<u64>,
    epoch: u64,
}

impl OrderEvaluator {
    pub fn new(n: u32) -> Self {
        assert!(n >= 1);
        OrderEvaluator {
            n,
            mark: vec![0; n as usize + 1],
            epoch: 0,
        }
    }

    pub fn fitness_of_tree(&mut self, tree: &GpTree) -> Fitness {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut score = 0u32;
        tree.for_each_leaf_inorder(|t| {
            let i = t.index() as usize;
            debug_assert!(i <= self.n as usize);
            if self.mark[i] != epoch {
                self.mark[i] = epoch;
                if t.is_positive() {
                    score += 1;
                }
            }
        });
        Fitness(score)
    }
}

/// Per-variable occurrence counts for MAJORITY: `c(x_i)`, `c(~x_i)`, the
/// deficits `D_i = c(~x_i) - c(x_i)`, and an incrementally maintained
/// expressed-variable count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeficitProfile {
    pos: Vec<u32>,
    neg: Vec<u32>,
    expressed: u32,
    total: u64,
}

impl DeficitProfile {
    pub fn new(n: u32) -> Self {
        assert!(n >= 1);
        DeficitProfile {
            pos: vec![0; n as usize],
            neg: vec![0; n as usize],
            expressed: 0,
            total: 0,
        }
    }

    pub fn from_leaves(leaves: &[Terminal], n: u32) -> Self {
        let mut profile = DeficitProfile::new(n);
        for &t in leaves {
            profile.add(t);
        }
        profile
    }

    pub fn from_tree(tree: &GpTree, n: u32) -> Self {
        let mut profile = DeficitProfile::new(n);
        tree.for_each_leaf_inorder(|t| profile.add(t));
        profile
    }

    pub fn n(&self) -> u32 {
        self.pos.len() as u32
    }

    fn slot(&self, index: u32) -> usize {
        assert!(
            index >= 1 && index <= self.n(),
            "variable index {index} outside [1, {}]",
            self.n()
        );
        (index - 1) as usize
    }

    pub fn c_pos(&self, index: u32) -> u32 {
        self.pos[self.slot(index)]
    }

    pub fn c_neg(&self, index: u32) -> u32 {
        self.neg[self.slot(index)]
    }

    /// `D_i = c(~x_i) - c(x_i)`.
    pub fn deficit(&self, index: u32) -> i64 {
        let s = self.slot(index);
        self.neg[s] as i64 - self.pos[s] as i64
    }

    /// The aggregate deficit `D = max_i D_i`.
    pub fn max_deficit(&self) -> i64 {
        (1..=self.n())
            .map(|i| self.deficit(i))
            .max()
            .expect("n >= 1")
    }

    /// A variable is expressed when `D_i <= 0` and `c(x_i) > 0`.
    pub fn is_expressed(&self, index: u32) -> bool {
        let s = self.slot(index);
        self.pos[s] >= self.neg[s] && self.pos[s] > 0
    }

    pub fn fitness(&self) -> Fitness {
        Fitness(self.expressed)
    }

    /// Total leaf occurrences accounted for (equals `T` when built from a
    /// whole tree).
    pub fn total_leaves(&self) -> u64 {
        self.total
    }

    /// Indices of expressed variables, ascending.
    pub fn expressed_vars(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.n()).filter(|&i| self.is_expressed(i))
    }

    pub fn add(&mut self, t: Terminal) {
        let s = self.slot(t.index());
        let was = self.expressed_slot(s);
        if t.is_negated() {
            self.neg[s] += 1;
        } else {
            self.pos[s] += 1;
        }
        self.total += 1;
        self.update_expressed(s, was);
    }

    pub fn remove(&mut self, t: Terminal) {
        let s = self.slot(t.index());
        let was = self.expressed_slot(s);
        if t.is_negated() {
            assert!(self.neg[s] > 0, "removing absent terminal {t}");
            self.neg[s] -= 1;
        } else {
            assert!(self.pos[s] > 0, "removing absent terminal {t}");
            self.pos[s] -= 1;
        }
        self.total -= 1;
        self.update_expressed(s, was);
    }

    fn expressed_slot(&self, s: usize) -> bool {
        self.pos[s] >= self.neg[s] && self.pos[s] > 0
    }

    fn update_expressed(&mut self, s: usize, was: bool) {
        let now = self.expressed_slot(s);
        match (was, now) {
            (false, true) => self.expressed += 1,
            (true, false) => self.expressed -= 1,
            _ => {}
        }
    }

    /// Fold one mutation record into the counts. Each sub-operation touches
    /// at most two variables.
    pub fn apply(&mut self, record: &MutationRecord) {
        if let Some(t) = record.removed {
            self.remove(t);
        }
        if let Some(t) = record.added {
            self.add(t);
        }
    }

    /// Undo [`DeficitProfile::apply`].
    pub fn revert(&mut self, record: &MutationRecord) {
        if let Some(t) = record.added {
            self.remove(t);
        }
        if let Some(t) = record.removed {
            self.add(t);
        }
    }
}

/// MAJORITY fitness of a leaf sequence; leaf order is irrelevant.
pub fn majority_fitness(leaves: &[Terminal], n: u32) -> (Fitness, DeficitProfile) {
    let profile = DeficitProfile::from_leaves(leaves, n);
    (profile.fitness(), profile)
}

/// Whether strict single-step climbing on MAJORITY can never improve from
/// this profile: the fitness is suboptimal and every unexpressed variable
/// has a deficit of at least 3.
///
/// One HVL-Mutate' step changes any deficit by at most 2 (a substitution
/// swapping `~x_i` for `x_i`), so a deficit of 3 or more can never be
/// closed in one strictly improving move; conversely an unexpressed
/// variable with deficit <= 1 is expressed by one insertion or deletion
/// and one with deficit 2 by one substitution.
pub fn is_stuck_gpstar_single_majority(profile: &DeficitProfile) -> bool {
    let n = profile.n();
    if profile.fitness().value() == n {
        return false;
    }
    (1..=n).all(|i| profile.is_expressed(i) || profile.deficit(i) >= 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_tree;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn terms(spec: &[(u32, bool)]) -> Vec<Terminal> {
        spec.iter().map(|&(i, neg)| Terminal::new(i, neg)).collect()
    }

    #[test]
    fn order_worked_example() {
        // l = (x1, ~x4, x2, ~x1, x3, ~x6)
        let leaves = terms(&[
            (1, false),
            (4, true),
            (2, false),
            (1, true),
            (3, false),
            (6, true),
        ]);
        let (fitness, path) = order_fitness(&leaves, 6);
        assert_eq!(fitness, Fitness::new(3));
        assert_eq!(
            path.terminals(),
            terms(&[(1, false), (4, true), (2, false), (3, false), (6, true)]).as_slice()
        );
    }

    #[test]
    fn order_edge_cases() {
        let (f, _) = order_fitness(&terms(&[(1, false)]), 1);
        assert_eq!(f, Fitness::new(1));
        let (f, _) = order_fitness(&terms(&[(1, true), (1, false)]), 1);
        assert_eq!(f, Fitness::new(0));
    }

    #[test]
    fn majority_worked_example() {
        // l = (x1, ~x4, x2, ~x1, ~x3, ~x6, x1, x4)
        let leaves = terms(&[
            (1, false),
            (4, true),
            (2, false),
            (1, true),
            (3, true),
            (6, true),
            (1, false),
            (4, false),
        ]);
        let (fitness, profile) = majority_fitness(&leaves, 6);
        assert_eq!(fitness, Fitness::new(3));
        assert_eq!(profile.expressed_vars().collect::<Vec<_>>(), vec![1, 2, 4]);
    }

    #[test]
    fn majority_edge_cases() {
        let (f, _) = majority_fitness(&terms(&[(1, true)]), 1);
        assert_eq!(f, Fitness::new(0));
    }

    #[test]
    fn majority_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut leaves = terms(&[
            (1, false),
            (4, true),
            (2, false),
            (1, true),
            (3, true),
            (6, true),
            (1, false),
            (4, false),
        ]);
        let (baseline, _) = majority_fitness(&leaves, 6);
        for _ in 0..50 {
            leaves.shuffle(&mut rng);
            let (f, _) = majority_fitness(&leaves, 6);
            assert_eq!(f, baseline);
        }
    }

    #[test]
    fn expressed_rule() {
        let mut p = DeficitProfile::new(1);
        assert!(!p.is_expressed(1)); // c_pos = c_neg = 0
        p.add(Terminal::positive(1));
        p.add(Terminal::negated(1));
        assert!(p.is_expressed(1)); // D = 0 with c_pos > 0
        p.add(Terminal::negated(1));
        p.add(Terminal::negated(1));
        p.add(Terminal::positive(1));
        assert!(!p.is_expressed(1)); // c_pos = 2, c_neg = 3
    }

    #[test]
    fn tree_and_leaf_list_agree_for_both_problems() {
        let tree = parse_tree("(J (J x1 (J ~x4 x2)) (J ~x1 (J x3 ~x6)))", 6).unwrap();
        let leaves = tree.inorder_leaves();
        assert_eq!(
            leaves,
            terms(&[
                (1, false),
                (4, true),
                (2, false),
                (1, true),
                (3, false),
                (6, true)
            ])
        );
        let (f_list, _) = order_fitness(&leaves, 6);
        assert_eq!(ProblemKind::Order { n: 6 }.evaluate(&tree), f_list);
        let (f_list, _) = majority_fitness(&leaves, 6);
        assert_eq!(ProblemKind::Majority { n: 6 }.evaluate(&tree), f_list);
    }

    #[test]
    fn order_evaluator_matches_slice_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tree = parse_tree("(J x1 (J x2 ~x3))", 3).unwrap();
        let mut eval = OrderEvaluator::new(3);
        for _ in 0..2000 {
            tree.hvl_prime_step(&mut rng, 3);
            let (expected, _) = order_fitness(&tree.inorder_leaves(), 3);
            assert_eq!(eval.fitness_of_tree(&tree), expected);
        }
    }

    #[test]
    fn incremental_profile_matches_scratch_over_long_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 4;
        let mut tree = parse_tree("(J (J x1 ~x2) (J x3 ~x4))", n).unwrap();
        let mut profile = DeficitProfile::from_tree(&tree, n);
        for _ in 0..100_000 {
            let rec = tree.hvl_prime_step(&mut rng, n);
            profile.apply(&rec);
            debug_assert_eq!(profile, DeficitProfile::from_tree(&tree, n));
        }
        // One full check at the end even in release builds.
        assert_eq!(profile, DeficitProfile::from_tree(&tree, n));
        assert_eq!(profile.total_leaves(), tree.leaf_count() as u64);
    }

    #[test]
    fn stuck_characterization_cases() {
        // T_lopt with n = 3: leaves x1, x2 and four copies of ~x3.
        let leaves = terms(&[
            (1, false),
            (2, false),
            (3, true),
            (3, true),
            (3, true),
            (3, true),
        ]);
        let (f, profile) = majority_fitness(&leaves, 3);
        assert_eq!(f, Fitness::new(2));
        assert_eq!(profile.deficit(3), 4);
        assert!(is_stuck_gpstar_single_majority(&profile));

        // An unexpressed variable at deficit 2 is one substitution away.
        let leaves = terms(&[(1, true), (1, true)]);
        let (_, profile) = majority_fitness(&leaves, 1);
        assert_eq!(profile.deficit(1), 2);
        assert!(!is_stuck_gpstar_single_majority(&profile));

        // Optimal profiles are finished, not stuck.
        let leaves = terms(&[(1, false), (2, false), (3, false)]);
        let (f, profile) = majority_fitness(&leaves, 3);
        assert_eq!(f, Fitness::new(3));
        assert!(!is_stuck_gpstar_single_majority(&profile));
    }
}
