//! The (1+1) evolutionary loop: propose k HVL-Mutate' steps on a copy of
//! the current solution, evaluate once, accept per policy, and terminate
//! on the optimum, a provably stuck state, or an evaluation budget.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::init::{InitError, InitSpec};
use crate::problems::{
    is_stuck_gpstar_single_majority, DeficitProfile, Fitness, OrderEvaluator, ProblemKind,
};
use crate::tree::{GpTree, MutationRecord};

/// Whether neutral moves are accepted: `NonStrict` accepts `f' >= f`
/// (the plain climber), `Strict` only `f' > f` (the starred climber).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcceptancePolicy {
    NonStrict,
    Strict,
}

impl fmt::Display for AcceptancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcceptancePolicy::NonStrict => write!(f, "nonstrict"),
            AcceptancePolicy::Strict => write!(f, "strict"),
        }
    }
}

/// How many sub-operations one proposal applies: always one, or
/// `1 + Pois(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpCountPolicy {
    Single,
    Multi,
}

impl fmt::Display for OpCountPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpCountPolicy::Single => write!(f, "single"),
            OpCountPolicy::Multi => write!(f, "multi"),
        }
    }
}

/// Whether to record a per-evaluation text trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceLevel {
    #[default]
    Off,
    Moves,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub acceptance: AcceptancePolicy,
    pub ops: OpCountPolicy,
    pub init: InitSpec,
    pub seed: u64,
    /// Maximum number of fitness evaluations; 0 means unlimited, which is
    /// only valid for configurations guaranteed to terminate.
    pub budget: u64,
    pub stuck_detection: bool,
    pub trace: TraceLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Optimal,
    Stuck,
    BudgetExhausted,
}

impl RunStatus {
    /// Stable token used in CSV output.
    pub fn token(self) -> &'static str {
        match self {
            RunStatus::Optimal => "optimal",
            RunStatus::Stuck => "stuck",
            RunStatus::BudgetExhausted => "budget",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub status: RunStatus,
    /// Fitness evaluations performed, counting the initial solution's
    /// evaluation as evaluation 1 and every proposal (accepted, rejected,
    /// or vacuous) as one more.
    pub evaluations: u64,
    /// Largest node count of any tree materialized during the run
    /// (initial solution, proposals, and accepted solutions).
    pub t_max_nodes: u64,
    pub final_fitness: Fitness,
    pub accepted_moves: u64,
    pub initial_nodes: u64,
    /// Canonical text of the final current solution.
    pub final_tree: String,
    /// One line per evaluation when tracing is on, empty otherwise.
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineError {
    /// The configuration cannot be run as given.
    InvalidConfig(String),
    Init(InitError),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::InvalidConfig(msg) => write!(f, "invalid run configuration: {msg}"),
            EngineError::Init(e) => write!(f, "initializer failed: {e}"),
        }
    }
}

impl std::error::Error for EngineError {}

impl From<InitError> for EngineError {
    fn from(e: InitError) -> Self {
        EngineError::Init(e)
    }
}

/// Number of sub-operations for one proposal: 1, or `1 + Pois(1)` sampled
/// with Knuth's product-of-uniforms method (platform-stable given the
/// generator stream).
pub fn sample_op_count<R: Rng + ?Sized>(policy: OpCountPolicy, rng: &mut R) -> u32 {
    match policy {
        OpCountPolicy::Single => 1,
        OpCountPolicy::Multi => 1 + poisson_unit(rng),
    }
}

fn poisson_unit<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    let threshold = (-1.0f64).exp();
    let mut k = 0u32;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= threshold {
            return k;
        }
        k += 1;
    }
}

/// The acceptance rule. Fitness never decreases under either policy.
pub fn accept(policy: AcceptancePolicy, f_old: Fitness, f_new: Fitness) -> bool {
    match policy {
        AcceptancePolicy::NonStrict => f_new >= f_old,
        AcceptancePolicy::Strict => f_new > f_old,
    }
}

impl RunConfig {
    /// A configuration with no budget must be guaranteed to terminate:
    /// either problem under strict acceptance on ORDER, the non-strict
    /// single-step climber on MAJORITY, or the strict single-step climber
    /// on MAJORITY with stuck detection. Stuck detection itself is exact
    /// only for that last combination.
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.problem.n() < 1 {
            return Err(EngineError::InvalidConfig("n must be >= 1".into()));
        }
        // Keeps 2n (the alphabet size) and 4n - 1 (the unity tree's node
        // count) inside u32 arithmetic everywhere.
        if self.problem.n() > u32::MAX / 4 {
            return Err(EngineError::InvalidConfig(format!(
                "n must be at most {}",
                u32::MAX / 4
            )));
        }
        let strict = self.acceptance == AcceptancePolicy::Strict;
        let single = self.ops == OpCountPolicy::Single;
        let majority = self.problem.is_majority();
        if self.stuck_detection && !(strict && single && majority) {
            return Err(EngineError::InvalidConfig(
                "stuck detection is exact only for strict single-step runs on majority".into(),
            ));
        }
        if self.budget == 0 {
            let terminating = match self.problem {
                ProblemKind::Order { .. } => true,
                ProblemKind::Majority { .. } => {
                    (single && !strict) || (single && strict && self.stuck_detection)
                }
            };
            if !terminating {
                return Err(EngineError::InvalidConfig(format!(
                    "unlimited budget with no termination guarantee for {} {} on {}",
                    self.acceptance, self.ops, self.problem
                )));
            }
        }
        Ok(())
    }
}

enum Evaluator {
    Order(OrderEvaluator),
    /// Counts for the current solution; proposal deltas are applied and
    /// reverted around each evaluation.
    Majority(DeficitProfile),
}

/// Execute one run to termination.
pub fn run(config: &RunConfig) -> Result<RunResult, EngineError> {
    config.validate()?;
    let n = config.problem.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = config.init.build(n, &mut rng)?;

    let strict_single =
        config.acceptance == AcceptancePolicy::Strict && config.ops == OpCountPolicy::Single;
    let initial_nodes = current.node_count() as u64;
    // Strict acceptance caps accepted moves at n, and a single-step
    // proposal adds at most two nodes, so the tree can never outgrow this.
    let node_cap = initial_nodes + 2 * n as u64;

    let mut evaluator = match config.problem {
        ProblemKind::Order { n } => Evaluator::Order(OrderEvaluator::new(n)),
        ProblemKind::Majority { n } => Evaluator::Majority(DeficitProfile::from_tree(&current, n)),
    };
    let mut fitness = match &mut evaluator {
        Evaluator::Order(eval) => eval.fitness_of_tree(&current),
        Evaluator::Majority(profile) => profile.fitness(),
    };

    let mut evaluations: u64 = 1;
    let mut accepted_moves: u64 = 0;
    let mut t_max_nodes = initial_nodes;
    let mut trace = Vec::new();
    if config.trace == TraceLevel::Moves {
        trace.push(format!(
            "eval=1 init={} T={} S={} f={}",
            config.init.id_string(),
            current.leaf_count(),
            current.node_count(),
            fitness
        ));
    }

    let finish = |status: RunStatus,
                  evaluations: u64,
                  t_max_nodes: u64,
                  fitness: Fitness,
                  accepted_moves: u64,
                  current: &GpTree,
                  trace: Vec<String>| RunResult {
        status,
        evaluations,
        t_max_nodes,
        final_fitness: fitness,
        accepted_moves,
        initial_nodes,
        final_tree: current.to_string(),
        trace,
    };

    if fitness.value() == n {
        return Ok(finish(
            RunStatus::Optimal,
            evaluations,
            t_max_nodes,
            fitness,
            accepted_moves,
            &current,
            trace,
        ));
    }

    let mut proposal = current.clone();
    let mut records: Vec<MutationRecord> = Vec::new();
    loop {
        if config.stuck_detection {
            if let Evaluator::Majority(profile) = &evaluator {
                if is_stuck_gpstar_single_majority(profile) {
                    return Ok(finish(
                        RunStatus::Stuck,
                        evaluations,
                        t_max_nodes,
                        fitness,
                        accepted_moves,
                        &current,
                        trace,
                    ));
                }
            }
        }
        if config.budget > 0 && evaluations >= config.budget {
            return Ok(finish(
                RunStatus::BudgetExhausted,
                evaluations,
                t_max_nodes,
                fitness,
                accepted_moves,
                &current,
                trace,
            ));
        }

        // Propose: k sub-operations applied sequentially to a copy, each
        // sampled against the intermediate tree; evaluated once as a unit.
        proposal.clone_from(&current);
        let k = sample_op_count(config.ops, &mut rng);
        records.clear();
        for _ in 0..k {
            records.push(proposal.hvl_prime_step(&mut rng, n));
            t_max_nodes = t_max_nodes.max(proposal.node_count() as u64);
        }

        let proposal_fitness = match &mut evaluator {
            Evaluator::Order(eval) => eval.fitness_of_tree(&proposal),
            Evaluator::Majority(profile) => {
                for rec in &records {
                    profile.apply(rec);
                }
                profile.fitness()
            }
        };
        evaluations += 1;

        let accepted = accept(config.acceptance, fitness, proposal_fitness);
        if config.trace == TraceLevel::Moves {
            let ops: Vec<String> = records.iter().map(|r| r.to_string()).collect();
            trace.push(format!(
                "eval={} k={} ops=[{}] f={}->{} {}",
                evaluations,
                k,
                ops.join(";"),
                fitness,
                proposal_fitness,
                if accepted { "accepted" } else { "rejected" }
            ));
        }

        if accepted {
            std::mem::swap(&mut current, &mut proposal);
            fitness = proposal_fitness;
            accepted_moves += 1;
        } else if let Evaluator::Majority(profile) = &mut evaluator {
            for rec in records.iter().rev() {
                profile.revert(rec);
            }
        }

        if strict_single {
            assert!(
                current.node_count() as u64 <= node_cap,
                "strict single-step run exceeded the node-count cap: {} > {}",
                current.node_count(),
                node_cap
            );
        }

        if fitness.value() == n {
            return Ok(finish(
                RunStatus::Optimal,
                evaluations,
                t_max_nodes,
                fitness,
                accepted_moves,
                &current,
                trace,
            ));
        }
    }
}
