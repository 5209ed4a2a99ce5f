//! Initial solutions: unity-expectation random trees, the adversarial
//! all-`~x1` tree, the inescapable local optimum `t_lopt`, and explicit
//! trees from text.

use std::fmt;

use rand::Rng;

use crate::parse::{parse_tree, TreeParseError};
use crate::terminal::Terminal;
use crate::tree::{GpTree, Side};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitError {
    /// `t_lopt` needs at least two variables.
    TLoptTooSmall { n: u32 },
    /// An explicit tree failed to parse.
    Parse(TreeParseError),
    /// An initializer id string was not recognized.
    UnknownId(String),
}

impl fmt::Display for InitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitError::TLoptTooSmall { n } => {
                write!(f, "t-lopt initializer requires n >= 2, got n = {n}")
            }
            InitError::Parse(e) => write!(f, "text initializer: {e}"),
            InitError::UnknownId(id) => write!(
                f,
                "unknown initializer '{id}' (expected unity, adversarial-neg1, t-lopt, or text:<tree>)"
            ),
        }
    }
}

impl std::error::Error for InitError {}

impl From<TreeParseError> for InitError {
    fn from(e: TreeParseError) -> Self {
        InitError::Parse(e)
    }
}

/// Which initial solution a run starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitSpec {
    /// 2n leaves drawn i.i.d. uniformly from the 2n terminals.
    Unity,
    /// 2n leaves, all `~x1`.
    AdversarialNeg1,
    /// Leaves `x1..x_{n-1}` plus `n+1` copies of `~x_n`.
    TLopt,
    /// An explicit tree in canonical text form.
    Text(String),
}

impl InitSpec {
    /// Parse an initializer id: `unity`, `adversarial-neg1`, `t-lopt`, or
    /// `text:<serialized tree>`.
    pub fn parse_id(id: &str) -> Result<Self, InitError> {
        match id {
            "unity" => Ok(InitSpec::Unity),
            "adversarial-neg1" => Ok(InitSpec::AdversarialNeg1),
            "t-lopt" => Ok(InitSpec::TLopt),
            _ => match id.strip_prefix("text:") {
                Some(tree) => Ok(InitSpec::Text(tree.to_string())),
                None => Err(InitError::UnknownId(id.to_string())),
            },
        }
    }

    pub fn id_string(&self) -> String {
        match self {
            InitSpec::Unity => "unity".into(),
            InitSpec::AdversarialNeg1 => "adversarial-neg1".into(),
            InitSpec::TLopt => "t-lopt".into(),
            InitSpec::Text(t) => format!("text:{t}"),
        }
    }

    pub fn build<R: Rng + ?Sized>(&self, n: u32, rng: &mut R) -> Result<GpTree, InitError> {
        match self {
            InitSpec::Unity => Ok(init_unity_expectation(n, rng)),
            InitSpec::AdversarialNeg1 => Ok(init_adversarial_majority(n)),
            InitSpec::TLopt => init_t_lopt(n),
            InitSpec::Text(text) => Ok(init_from_text(text, n)?),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id_string())
    }
}

/// Grow a random shape with `leaves` leaves by repeated uniform attachment,
/// then fill the leaves with i.i.d. uniform terminals.
///
/// Shape growth: start from a root join over two open slots; repeatedly
/// pick a uniformly random open slot and place a join there (net +1 slot)
/// until `leaves` slots exist. Open slots are placeholder leaves, so the
/// uniform slot pick is exactly a uniform leaf draw.
pub fn random_uniform_attachment_tree<R: Rng + ?Sized>(
    leaves: usize,
    n: u32,
    rng: &mut R,
) -> GpTree {
    assert!(leaves >= 1 && n >= 1);
    let placeholder = Terminal::positive(1);
    if leaves == 1 {
        return GpTree::leaf(Terminal::sample_uniform(n, rng));
    }
    let mut tree = GpTree::leaf(placeholder);
    tree.insert(tree.root(), placeholder, Side::Left)
        .expect("fresh handle");
    for _ in 0..leaves - 2 {
        let slot = tree.sample_leaf(rng);
        tree.insert(slot.into(), placeholder, Side::Left)
            .expect("fresh handle");
    }
    debug_assert_eq!(tree.leaf_count(), leaves);
    for position in 0..leaves {
        let leaf = tree.leaf_at_inorder(position).expect("position in range");
        tree.substitute(leaf, Terminal::sample_uniform(n, rng))
            .expect("fresh handle");
    }
    tree
}

/// Unity-expectation initialization: 2n leaves each drawn uniformly from
/// the 2n terminals, so every terminal appears once in expectation.
pub fn init_unity_expectation<R: Rng + ?Sized>(n: u32, rng: &mut R) -> GpTree {
    random_uniform_attachment_tree(2 * n as usize, n, rng)
}

/// Left-leaning vine `(J (J (J l1 l2) l3) l4)...` over the given leaves;
/// the canonical deterministic shape for a leaf sequence.
pub fn vine(leaves: &[Terminal]) -> GpTree {
    assert!(!leaves.is_empty());
    let mut tree = GpTree::leaf(leaves[0]);
    for &leaf in &leaves[1..] {
        tree.insert(tree.root(), leaf, Side::Right)
            .expect("fresh handle");
    }
    tree
}

/// The adversarial MAJORITY start: 2n leaves, all `~x1`, so `D_1 = 2n`.
/// Deterministic left-leaning shape.
pub fn init_adversarial_majority(n: u32) -> GpTree {
    assert!(n >= 1);
    let leaves = vec![Terminal::negated(1); 2 * n as usize];
    vine(&leaves)
}

/// The local optimum `t_lopt`: leaves `x1..x_{n-1}` once each plus `n+1`
/// copies of `~x_n` (2n leaves total), MAJORITY fitness `n - 1`.
/// Deterministic left-leaning shape.
pub fn init_t_lopt(n: u32) -> Result<GpTree, InitError> {
    if n < 2 {
        return Err(InitError::TLoptTooSmall { n });
    }
    let mut leaves: Vec<Terminal> = (1..n).map(Terminal::positive).collect();
    leaves.extend(std::iter::repeat_n(Terminal::negated(n), n as usize + 1));
    Ok(vine(&leaves))
}

/// Build a tree from its canonical text form (delegates to the parser).
pub fn init_from_text(text: &str, n: u32) -> Result<GpTree, TreeParseError> {
    parse_tree(text, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{is_stuck_gpstar_single_majority, DeficitProfile, Fitness, ProblemKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unity_tree_has_2n_leaves_and_valid_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1u32, 2, 3, 8, 16] {
            let tree = init_unity_expectation(n, &mut rng);
            assert_eq!(tree.leaf_count(), 2 * n as usize);
            assert_eq!(tree.node_count(), 4 * n as usize - 1);
            tree.audit().unwrap();
        }
    }

    #[test]
    fn unity_leaf_marginals_are_uniform() {
        let n = 4u32;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples = 4000usize;
        let mut counts = vec![0u64; 2 * n as usize];
        for _ in 0..samples {
            let tree = init_unity_expectation(n, &mut rng);
            tree.for_each_leaf_inorder(|t| {
                let slot = if t.is_negated() {
                    n + t.index() - 1
                } else {
                    t.index() - 1
                };
                counts[slot as usize] += 1;
            });
        }
        let draws = (samples * 2 * n as usize) as f64;
        let p = 1.0 / (2.0 * n as f64);
        let sigma = (p * (1.0 - p) / draws).sqrt();
        for &c in &counts {
            let freq = c as f64 / draws;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "leaf marginal {freq} outside uniform 3 sigma band"
            );
        }
    }

    #[test]
    fn unity_matches_exact_bad_variable_probability() {
        // Probability that ~x1 appears exactly k times and x1 not at all:
        // C(2n, k) (2n-2)^(2n-k) / (2n)^(2n), checked for k = 3, n = 8.
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use num_traits::ToPrimitive;

        let n = 8u32;
        let k = 3u32;
        let two_n = 2 * n as u64;
        let choose = |n: u64, k: u64| -> BigInt {
            let mut num = BigInt::from(1);
            let mut den = BigInt::from(1);
            for i in 0..k {
                num *= BigInt::from(n - i);
                den *= BigInt::from(i + 1);
            }
            num / den
        };
        let exact = BigRational::new(
            choose(two_n, k as u64) * BigInt::from(two_n - 2).pow(2 * n - k),
            BigInt::from(two_n).pow(2 * n),
        );
        let p = exact.to_f64().unwrap();

        let samples = 10_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hits = 0u64;
        for _ in 0..samples {
            let tree = init_unity_expectation(n, &mut rng);
            let profile = DeficitProfile::from_tree(&tree, n);
            if profile.c_neg(1) == k && profile.c_pos(1) == 0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / samples as f64;
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * sigma,
            "frequency {freq} vs exact {p} outside 3 sigma"
        );
    }

    #[test]
    fn adversarial_tree_shape_and_profile() {
        assert_eq!(init_adversarial_majority(1).to_string(), "(J ~x1 ~x1)");
        assert_eq!(
            init_adversarial_majority(2).to_string(),
            "(J (J (J ~x1 ~x1) ~x1) ~x1)"
        );
        for n in [1u32, 2, 5] {
            let tree = init_adversarial_majority(n);
            tree.audit().unwrap();
            assert_eq!(tree.leaf_count(), 2 * n as usize);
            let profile = DeficitProfile::from_tree(&tree, n);
            assert_eq!(profile.fitness(), Fitness::ZERO);
            assert_eq!(profile.deficit(1), 2 * n as i64);
            for i in 2..=n {
                assert_eq!(profile.deficit(i), 0);
                assert_eq!(profile.c_pos(i), 0);
            }
        }
    }

    #[test]
    fn t_lopt_shape_fitness_and_stuckness() {
        assert!(matches!(
            init_t_lopt(1),
            Err(InitError::TLoptTooSmall { n: 1 })
        ));
        let tree = init_t_lopt(2).unwrap();
        assert_eq!(
            ProblemKind::Majority { n: 2 }.evaluate(&tree),
            Fitness::new(1)
        );
        for n in 2..=12u32 {
            let tree = init_t_lopt(n).unwrap();
            tree.audit().unwrap();
            assert_eq!(tree.leaf_count(), 2 * n as usize);
            let profile = DeficitProfile::from_tree(&tree, n);
            assert_eq!(profile.fitness(), Fitness::new(n - 1));
            assert_eq!(profile.deficit(n), n as i64 + 1);
            assert!(is_stuck_gpstar_single_majority(&profile));
        }
    }

    #[test]
    fn t_lopt_golden_serialization() {
        assert_eq!(
            init_t_lopt(3).unwrap().to_string(),
            "(J (J (J (J (J x1 x2) ~x3) ~x3) ~x3) ~x3)"
        );
    }

    #[test]
    fn id_strings_round_trip() {
        for id in ["unity", "adversarial-neg1", "t-lopt", "text:(J x1 ~x2)"] {
            let spec = InitSpec::parse_id(id).unwrap();
            assert_eq!(spec.id_string(), id);
        }
        assert!(matches!(
            InitSpec::parse_id("bogus"),
            Err(InitError::UnknownId(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = InitSpec::parse_id("text:(J x1 ~x2)")
            .unwrap()
            .build(2, &mut rng)
            .unwrap();
        assert_eq!(tree.to_string(), "(J x1 ~x2)");
    }
}
