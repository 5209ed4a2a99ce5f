//! Exact verification machinery: the full single-step mutation outcome
//! distribution with rational probabilities, the insertion-improvement
//! lower-bound check, substitution decomposability for MAJORITY, and
//! cross-validation of the stuck-state characterization.
//!
//! All probability accounting uses exact rationals; floating point appears
//! only in reports.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::problems::{is_stuck_gpstar_single_majority, DeficitProfile, Fitness, ProblemKind};
use crate::terminal::Terminal;
use crate::tree::{GpTree, MutationOp, MutationRecord, Side};

/// Enumeration is refused above this `S * n` product so oracle suites stay
/// fast.
pub const ENUMERATION_GUARD: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// The instance exceeds the enumeration guard.
    InstanceTooLarge { nodes: u64, n: u32 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::InstanceTooLarge { nodes, n } => write!(
                f,
                "instance too large to enumerate: S * n = {} * {} > {}",
                nodes, n, ENUMERATION_GUARD
            ),
        }
    }
}

impl std::error::Error for OracleError {}

/// One possible outcome of a single HVL-Mutate' step.
#[derive(Debug, Clone)]
pub struct WeightedOutcome {
    pub record: MutationRecord,
    pub probability: BigRational,
    pub fitness: Fitness,
}

/// Every single-step outcome of a tree, with exact probabilities summing
/// to 1. Outcome counts are `T * 2n` substitutions, `S * 2n * 2` inserts,
/// and `T` deletes.
#[derive(Debug, Clone)]
pub struct MutationDistribution {
    pub base_fitness: Fitness,
    pub outcomes: Vec<WeightedOutcome>,
}

impl MutationDistribution {
    pub fn total_mass(&self) -> BigRational {
        self.outcomes
            .iter()
            .map(|o| &o.probability)
            .fold(BigRational::zero(), |acc, p| acc + p)
    }

    /// Total probability of strictly improving the fitness.
    pub fn improving_mass(&self) -> BigRational {
        self.mass_where(|o| o.fitness > self.base_fitness)
    }

    /// Strictly improving probability restricted to one sub-operation.
    pub fn improving_mass_for(&self, op: MutationOp) -> BigRational {
        self.mass_where(|o| o.record.op == op && o.fitness > self.base_fitness)
    }

    pub fn mass_where(&self, pred: impl Fn(&WeightedOutcome) -> bool) -> BigRational {
        self.outcomes
            .iter()
            .filter(|o| pred(o))
            .map(|o| &o.probability)
            .fold(BigRational::zero(), |acc, p| acc + p)
    }
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn guard(tree: &GpTree, n: u32) -> Result<(), OracleError> {
    let nodes = tree.node_count() as u64;
    if nodes * n as u64 > ENUMERATION_GUARD {
        return Err(OracleError::InstanceTooLarge { nodes, n });
    }
    Ok(())
}

/// Enumerate every (operation, position, terminal, side) outcome of one
/// HVL-Mutate' step and evaluate the given problem on each result.
///
/// Probabilities: substitution `1/3 * 1/T * 1/2n`, insertion
/// `1/3 * 1/S * 1/2n * 1/2`, deletion `1/3 * 1/T`.
pub fn enumerate_single_mutations(
    tree: &GpTree,
    problem: ProblemKind,
) -> Result<MutationDistribution, OracleError> {
    let n = problem.n();
    guard(tree, n)?;
    let t = tree.leaf_count() as u64;
    let s = tree.node_count() as u64;
    let base_fitness = problem.evaluate(tree);

    let mut outcomes = Vec::with_capacity((t * 2 * n as u64 + s * 4 * n as u64 + t) as usize);
    let mut scratch = tree.clone();

    // Substitutions: leaf uniform over T, replacement uniform over 2n.
    let p_sub = ratio(1, 3 * t * 2 * n as u64);
    for position in 0..t as usize {
        for u in Terminal::all(n) {
            scratch.clone_from(tree);
            let leaf = scratch.leaf_at_inorder(position).expect("leaf position");
            let record = scratch.substitute(leaf, u).expect("fresh handle");
            outcomes.push(WeightedOutcome {
                record,
                probability: p_sub.clone(),
                fitness: problem.evaluate(&scratch),
            });
        }
    }

    // Insertions: node uniform over S (preorder enumeration), terminal
    // uniform over 2n, side uniform over 2.
    let p_ins = ratio(1, 3 * s * 2 * n as u64 * 2);
    let paths = preorder_paths(tree);
    debug_assert_eq!(paths.len() as u64, s);
    for path in &paths {
        for u in Terminal::all(n) {
            for side in [Side::Left, Side::Right] {
                scratch.clone_from(tree);
                let node = scratch.node_at_path(path).expect("preorder path");
                let record = scratch.insert(node, u, side).expect("fresh handle");
                outcomes.push(WeightedOutcome {
                    record,
                    probability: p_ins.clone(),
                    fitness: problem.evaluate(&scratch),
                });
            }
        }
    }

    // Deletions: leaf uniform over T.
    let p_del = ratio(1, 3 * t);
    for position in 0..t as usize {
        scratch.clone_from(tree);
        let leaf = scratch.leaf_at_inorder(position).expect("leaf position");
        let record = scratch.delete(leaf).expect("fresh handle");
        outcomes.push(WeightedOutcome {
            record,
            probability: p_del.clone(),
            fitness: problem.evaluate(&scratch),
        });
    }

    let dist = MutationDistribution {
        base_fitness,
        outcomes,
    };
    debug_assert!(dist.total_mass().is_one());
    Ok(dist)
}

fn preorder_paths(tree: &GpTree) -> Vec<crate::tree::NodePath> {
    let mut out = Vec::with_capacity(tree.node_count());
    let mut stack = vec![(tree.root_id(), Vec::new())];
    while let Some((id, sides)) = stack.pop() {
        match tree.kind_of(id) {
            Err(_) => out.push(path_from(&sides)),
            Ok((left, right)) => {
                out.push(path_from(&sides));
                let mut l = sides.clone();
                l.push(Side::Left);
                let mut r = sides;
                r.push(Side::Right);
                stack.push((right, r));
                stack.push((left, l));
            }
        }
    }
    out
}

fn path_from(sides: &[Side]) -> crate::tree::NodePath {
    // NodePath keeps its representation private; rebuild through the tree
    // walk used everywhere else.
    crate::tree::NodePath::from_sides(sides.to_vec())
}

/// Result of checking the exact insertion-improvement mass against the
/// analytic lower bound `(n-k)(n-k+1) / (24 e n S)`, which applies when
/// `T >= n - k`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub n: u32,
    pub fitness_k: u32,
    pub leaves_t: u64,
    pub nodes_s: u64,
    /// Whether the bound's case applies (`T >= n - k`).
    pub applicable: bool,
    pub insertion_mass: BigRational,
    /// The bound, rounded up: `e` is replaced by the rational lower bound
    /// 2.718281828459045, which only makes the bound larger.
    pub bound: BigRational,
    pub pass: bool,
}

impl BoundReport {
    pub fn bound_f64(&self) -> f64 {
        self.bound.to_f64().unwrap_or(f64::NAN)
    }

    pub fn insertion_mass_f64(&self) -> f64 {
        self.insertion_mass.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} T={} S={} mass={}~{:.6} bound={:.6} applicable={} pass={}",
            self.fitness_k,
            self.leaves_t,
            self.nodes_s,
            self.insertion_mass,
            self.insertion_mass_f64(),
            self.bound_f64(),
            self.applicable,
            self.pass
        )
    }
}

/// A rational lower bound on Euler's number, used so the analytic bound is
/// rounded up when compared against the exact mass.
fn euler_lower_bound() -> BigRational {
    BigRational::new(
        BigInt::from(2_718_281_828_459_045u64),
        BigInt::from(1_000_000_000_000_000u64),
    )
}

/// Check that the exact probability of an insertion improving ORDER
/// fitness is at least `(n-k)(n-k+1) / (24 e n S)`, with `k` the tree's
/// current ORDER fitness.
pub fn check_lemma1(tree: &GpTree, n: u32) -> Result<BoundReport, OracleError> {
    let dist = enumerate_single_mutations(tree, ProblemKind::Order { n })?;
    let k = dist.base_fitness.value();
    let t = tree.leaf_count() as u64;
    let s = tree.node_count() as u64;
    let gap = (n - k) as u64;
    let applicable = t >= gap;
    let insertion_mass = dist.improving_mass_for(MutationOp::Insert);
    // (n-k)(n-k+1) / (24 n S e), with e rounded down so the bound rounds up.
    let bound = ratio(gap * (gap + 1), 24 * n as u64 * s) / euler_lower_bound();
    let pass = !applicable || insertion_mass >= bound;
    Ok(BoundReport {
        n,
        fitness_k: k,
        leaves_t: t,
        nodes_s: s,
        applicable,
        insertion_mass,
        bound,
        pass,
    })
}

/// Substitution decomposability for MAJORITY: the fitness-delta
/// distribution of one substitution (leaf uniform over T, terminal uniform
/// over 2n) equals that of a deletion followed by an insertion.
///
/// Both distributions weight every (leaf, terminal) pair by exactly
/// `1/(T * 2n)`, so comparing exact rational-weighted multisets reduces to
/// comparing integer outcome counts per delta. Note the property concerns
/// the paper-defined deletion, which requires `T >= 2`; on a single-leaf
/// tree deletion is vacuous and the equivalence genuinely fails.
pub fn check_sdp(tree: &GpTree, n: u32) -> Result<bool, OracleError> {
    guard(tree, n)?;
    let profile = DeficitProfile::from_tree(tree, n);
    let base = profile.fitness().value() as i64;
    let leaves = tree.inorder_leaves();

    let mut substitution: BTreeMap<i64, u64> = BTreeMap::new();
    let mut compound: BTreeMap<i64, u64> = BTreeMap::new();
    let mut work = profile.clone();
    for &victim in &leaves {
        for u in Terminal::all(n) {
            // Substitution: replace victim by u.
            work.remove(victim);
            work.add(u);
            let delta = work.fitness().value() as i64 - base;
            work.remove(u);
            work.add(victim);
            *substitution.entry(delta).or_insert(0) += 1;

            // Deletion then insertion, evaluated as a unit. Deletion is
            // vacuous when the tree has a single leaf.
            let delta = if leaves.len() >= 2 {
                work.remove(victim);
                work.add(u);
                let d = work.fitness().value() as i64 - base;
                work.remove(u);
                work.add(victim);
                d
            } else {
                work.add(u);
                let d = work.fitness().value() as i64 - base;
                work.remove(u);
                d
            };
            *compound.entry(delta).or_insert(0) += 1;
        }
    }
    Ok(substitution == compound)
}

/// Agreement between the deficit-profile stuck characterization and the
/// brute-force "no single step strictly improves" oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StuckCrosscheck {
    pub profile_stuck: bool,
    pub enumeration_stuck: bool,
}

impl StuckCrosscheck {
    pub fn agree(self) -> bool {
        self.profile_stuck == self.enumeration_stuck
    }
}

/// Cross-validate [`is_stuck_gpstar_single_majority`] against exhaustive
/// one-step enumeration on a MAJORITY instance.
pub fn crosscheck_stuck(tree: &GpTree, n: u32) -> Result<StuckCrosscheck, OracleError> {
    let profile = DeficitProfile::from_tree(tree, n);
    let profile_stuck = is_stuck_gpstar_single_majority(&profile);
    let dist = enumerate_single_mutations(tree, ProblemKind::Majority { n })?;
    let suboptimal = dist.base_fitness.value() < n;
    let improvable = dist.outcomes.iter().any(|o| o.fitness > dist.base_fitness);
    Ok(StuckCrosscheck {
        profile_stuck,
        enumeration_stuck: suboptimal && !improvable,
    })
}

// ---------------------------------------------------------------------------
// Exhaustive instance generators for sweeps
// ---------------------------------------------------------------------------

/// A binary tree shape, abstracted from terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Leaf,
    Join(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn leaf_count(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Join(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }
}

/// All binary shapes with exactly `leaves` leaves (Catalan many).
pub fn shapes_with_leaves(leaves: usize) -> Vec<Shape> {
    assert!(leaves >= 1);
    if leaves == 1 {
        return vec![Shape::Leaf];
    }
    let mut out = Vec::new();
    for left in 1..leaves {
        for l in shapes_with_leaves(left) {
            for r in shapes_with_leaves(leaves - left) {
                out.push(Shape::Join(Box::new(l.clone()), Box::new(r)));
            }
        }
    }
    out
}

/// Build a tree with the given shape and inorder leaf terminals.
pub fn tree_from_shape(shape: &Shape, leaves: &[Terminal]) -> GpTree {
    assert_eq!(shape.leaf_count(), leaves.len());
    fn rec(shape: &Shape, leaves: &mut std::slice::Iter<'_, Terminal>, out: &mut String) {
        match shape {
            Shape::Leaf => {
                use std::fmt::Write;
                write!(out, "{}", leaves.next().expect("enough leaves")).unwrap();
            }
            Shape::Join(l, r) => {
                out.push_str("(J ");
                rec(l, leaves, out);
                out.push(' ');
                rec(r, leaves, out);
                out.push(')');
            }
        }
    }
    let mut text = String::new();
    let mut iter = leaves.iter();
    rec(shape, &mut iter, &mut text);
    let n = leaves.iter().map(|t| t.index()).max().unwrap_or(1);
    crate::parse::parse_tree(&text, n).expect("generated text parses")
}

/// Outcome of an exhaustive sweep: how many instances were checked and a
/// description of every failing one.
#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub instances: u64,
    pub failures: Vec<String>,
}

impl SweepReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check SDP on one canonical (vine) representative per leaf multiset with
/// `t_min <= T <= t_max` leaves over every alphabet up to `n_max`.
///
/// MAJORITY fitness deltas depend only on the leaf multiset, so this is
/// exhaustive over all tree shapes for the checked sizes.
pub fn sweep_sdp_multisets(
    t_min: usize,
    t_max: usize,
    n_max: u32,
) -> Result<SweepReport, OracleError> {
    let mut report = SweepReport::default();
    for n in 1..=n_max {
        for t in t_min..=t_max {
            let mut error = None;
            for_each_leaf_multiset(t, n, |leaves| {
                if error.is_some() {
                    return;
                }
                let tree = crate::init::vine(leaves);
                match check_sdp(&tree, n) {
                    Ok(true) => {}
                    Ok(false) => report
                        .failures
                        .push(format!("sdp n={n} leaves={}", describe(leaves))),
                    Err(e) => error = Some(e),
                }
                report.instances += 1;
            });
            if let Some(e) = error {
                return Err(e);
            }
        }
    }
    Ok(report)
}

/// Check SDP literally on every (shape, leaf assignment) pair with
/// `t_min <= T <= t_max` leaves over every alphabet up to `n_max`.
pub fn sweep_sdp_shapes(
    t_min: usize,
    t_max: usize,
    n_max: u32,
) -> Result<SweepReport, OracleError> {
    let mut report = SweepReport::default();
    for n in 1..=n_max {
        for t in t_min..=t_max {
            for shape in shapes_with_leaves(t) {
                let mut error = None;
                for_each_leaf_assignment(t, n, |leaves| {
                    if error.is_some() {
                        return;
                    }
                    let tree = tree_from_shape(&shape, leaves);
                    match check_sdp(&tree, n) {
                        Ok(true) => {}
                        Ok(false) => report.failures.push(format!("sdp n={n} tree={tree}")),
                        Err(e) => error = Some(e),
                    }
                    report.instances += 1;
                });
                if let Some(e) = error {
                    return Err(e);
                }
            }
        }
    }
    Ok(report)
}

/// Cross-check the stuck characterization on one canonical representative
/// per leaf multiset with `1 <= T <= t_max` leaves over every alphabet up
/// to `n_max`. Exhaustive over shapes: both sides of the check depend only
/// on the leaf multiset.
pub fn sweep_stuck_multisets(t_max: usize, n_max: u32) -> Result<SweepReport, OracleError> {
    let mut report = SweepReport::default();
    for n in 1..=n_max {
        for t in 1..=t_max {
            let mut error = None;
            for_each_leaf_multiset(t, n, |leaves| {
                if error.is_some() {
                    return;
                }
                let tree = crate::init::vine(leaves);
                match crosscheck_stuck(&tree, n) {
                    Ok(check) if check.agree() => {}
                    Ok(check) => report.failures.push(format!(
                        "stuck n={n} leaves={} profile={} enumeration={}",
                        describe(leaves),
                        check.profile_stuck,
                        check.enumeration_stuck
                    )),
                    Err(e) => error = Some(e),
                }
                report.instances += 1;
            });
            if let Some(e) = error {
                return Err(e);
            }
        }
    }
    Ok(report)
}

/// Cross-check the stuck characterization literally on every
/// (shape, leaf assignment) pair up to `t_max` leaves.
pub fn sweep_stuck_shapes(t_max: usize, n_max: u32) -> Result<SweepReport, OracleError> {
    let mut report = SweepReport::default();
    for n in 1..=n_max {
        for t in 1..=t_max {
            for shape in shapes_with_leaves(t) {
                let mut error = None;
                for_each_leaf_assignment(t, n, |leaves| {
                    if error.is_some() {
                        return;
                    }
                    let tree = tree_from_shape(&shape, leaves);
                    match crosscheck_stuck(&tree, n) {
                        Ok(check) if check.agree() => {}
                        Ok(check) => report.failures.push(format!(
                            "stuck n={n} tree={tree} profile={} enumeration={}",
                            check.profile_stuck, check.enumeration_stuck
                        )),
                        Err(e) => error = Some(e),
                    }
                    report.instances += 1;
                });
                if let Some(e) = error {
                    return Err(e);
                }
            }
        }
    }
    Ok(report)
}

/// Check the insertion-improvement bound on seeded random ORDER instances
/// with `n <= n_max` and `T` drawn from `[n, 4n]`.
pub fn sweep_lemma1_random(cases: u32, n_max: u32, seed: u64) -> Result<SweepReport, OracleError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = SweepReport::default();
    for _ in 0..cases {
        let n = rng.gen_range(1..=n_max);
        let t = rng.gen_range(n as usize..=4 * n as usize);
        let tree = crate::init::random_uniform_attachment_tree(t, n, &mut rng);
        let check = check_lemma1(&tree, n)?;
        if !check.pass {
            report
                .failures
                .push(format!("lemma1 n={n} tree={tree} {check}"));
        }
        report.instances += 1;
    }
    Ok(report)
}

fn describe(leaves: &[Terminal]) -> String {
    let parts: Vec<String> = leaves.iter().map(|t| t.to_string()).collect();
    parts.join(",")
}

/// Visit every length-`t` leaf assignment over the `2n`-terminal alphabet
/// (the full `(2n)^t` product).
pub fn for_each_leaf_assignment(t: usize, n: u32, mut f: impl FnMut(&[Terminal])) {
    let alphabet: Vec<Terminal> = Terminal::all(n).collect();
    let mut digits = vec![0usize; t];
    let mut leaves: Vec<Terminal> = vec![alphabet[0]; t];
    loop {
        for (slot, &digit) in digits.iter().enumerate() {
            leaves[slot] = alphabet[digit];
        }
        f(&leaves);
        // Increment the odometer.
        let mut position = 0;
        loop {
            if position == t {
                return;
            }
            digits[position] += 1;
            if digits[position] < alphabet.len() {
                break;
            }
            digits[position] = 0;
            position += 1;
        }
    }
}

/// Visit every leaf multiset of size `t` over the `2n`-terminal alphabet
/// (combinations with repetition), as a sorted terminal list.
///
/// MAJORITY fitness and the one-step improvement predicate depend only on
/// the leaf multiset, so sweeping multisets is exhaustive over all trees
/// for those checks.
pub fn for_each_leaf_multiset(t: usize, n: u32, mut f: impl FnMut(&[Terminal])) {
    let alphabet: Vec<Terminal> = Terminal::all(n).collect();
    let mut chosen: Vec<Terminal> = Vec::with_capacity(t);
    fn rec(
        alphabet: &[Terminal],
        start: usize,
        remaining: usize,
        chosen: &mut Vec<Terminal>,
        f: &mut impl FnMut(&[Terminal]),
    ) {
        if remaining == 0 {
            f(chosen);
            return;
        }
        for i in start..alphabet.len() {
            chosen.push(alphabet[i]);
            rec(alphabet, i, remaining - 1, chosen, f);
            chosen.pop();
        }
    }
    rec(&alphabet, 0, t, &mut chosen, &mut f);
}
