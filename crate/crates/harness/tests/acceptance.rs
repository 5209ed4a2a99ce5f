//! End-to-end acceptance suite. Each test is one numbered criterion and
//! prints a pass line with the measured values (visible with
//! `cargo test -- --nocapture`).

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treegp::oracle::{
    enumerate_single_mutations, sweep_lemma1_random, sweep_sdp_multisets, sweep_sdp_shapes,
    sweep_stuck_multisets, sweep_stuck_shapes,
};
use treegp::{
    majority_fitness, order_fitness, parse_tree, AcceptancePolicy, Fitness, InitSpec,
    OpCountPolicy, ProblemKind, RunConfig, RunStatus, Terminal, TraceLevel,
};
use treegp_harness::{fit_scaling_exponent, preset, run_experiment};

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

#[test]
fn criterion_01_worked_example_fidelity() {
    let leaves = [
        Terminal::positive(1),
        Terminal::negated(4),
        Terminal::positive(2),
        Terminal::negated(1),
        Terminal::positive(3),
        Terminal::negated(6),
    ];
    let (fitness, path) = order_fitness(&leaves, 6);
    assert_eq!(fitness, Fitness::new(3));
    let expected_path = [
        Terminal::positive(1),
        Terminal::negated(4),
        Terminal::positive(2),
        Terminal::positive(3),
        Terminal::negated(6),
    ];
    assert_eq!(path.terminals(), expected_path);

    let leaves = [
        Terminal::positive(1),
        Terminal::negated(4),
        Terminal::positive(2),
        Terminal::negated(1),
        Terminal::negated(3),
        Terminal::negated(6),
        Terminal::positive(1),
        Terminal::positive(4),
    ];
    let (fitness, profile) = majority_fitness(&leaves, 6);
    assert_eq!(fitness, Fitness::new(3));
    assert_eq!(profile.expressed_vars().collect::<Vec<_>>(), vec![1, 2, 4]);

    println!("criterion 1 (worked-example fidelity): PASS order f=3, majority f=3");
}

#[test]
fn criterion_02_operator_distribution_oracle() {
    let tree = parse_tree("(J ~x1 x1)", 1).unwrap();
    let dist = enumerate_single_mutations(&tree, ProblemKind::Order { n: 1 }).unwrap();
    let improving = dist.improving_mass();
    assert_eq!(improving, ratio(11, 36), "exact rational equality");

    // 10^6 engine proposals from the same start.
    let p = improving.to_f64().unwrap();
    let trials = 1_000_000u32;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut improving_count = 0u32;
    let mut scratch = tree.clone();
    let mut eval = treegp::OrderEvaluator::new(1);
    for _ in 0..trials {
        scratch.clone_from(&tree);
        scratch.hvl_prime_step(&mut rng, 1);
        if eval.fitness_of_tree(&scratch) > dist.base_fitness {
            improving_count += 1;
        }
    }
    let freq = improving_count as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    assert!(
        (freq - p).abs() <= 3.0 * sigma,
        "empirical {freq} vs exact {p} beyond 3 sigma {sigma}"
    );
    println!(
        "criterion 2 (operator-distribution oracle): PASS mass=11/36, empirical={freq:.6} within 3 sigma"
    );
}

#[test]
fn criterion_03_lemma1_constant_check() {
    let report = sweep_lemma1_random(200, 6, 20_26).unwrap();
    assert_eq!(report.instances, 200);
    assert!(
        report.pass(),
        "insertion mass fell below the bound: {:?}",
        report.failures.first()
    );
    println!("criterion 3 (lemma1 constant check): PASS 200/200 random instances");
}

#[test]
fn criterion_04_sdp_exhaustive_check() {
    // Complete over leaf multisets (which determine MAJORITY deltas) and,
    // independently, literal over every shape/assignment pair. Single-leaf
    // trees are excluded: deletion there is vacuous by definition, so the
    // delete-then-insert compound is not the paper-defined deletion.
    let multisets = sweep_sdp_multisets(2, 6, 3).unwrap();
    assert!(multisets.pass(), "{:?}", multisets.failures.first());
    let shapes = sweep_sdp_shapes(2, 6, 3).unwrap();
    assert!(shapes.pass(), "{:?}", shapes.failures.first());
    println!(
        "criterion 4 (sdp exhaustive): PASS {} multisets + {} shape/assignment trees",
        multisets.instances, shapes.instances
    );
}

#[test]
fn criterion_05_t_lopt_theorems() {
    // Strict single-step climbing from t_lopt is stuck immediately at
    // fitness n - 1, independent of the seed.
    for n in 2..=12u32 {
        for seed in [0u64, 1, 99] {
            let config = RunConfig {
                problem: ProblemKind::Majority { n },
                acceptance: AcceptancePolicy::Strict,
                ops: OpCountPolicy::Single,
                init: InitSpec::TLopt,
                seed,
                budget: 0,
                stuck_detection: true,
                trace: TraceLevel::Off,
            };
            let result = treegp::run(&config).unwrap();
            assert_eq!(result.status, RunStatus::Stuck, "n={n} seed={seed}");
            assert_eq!(result.final_fitness, Fitness::new(n - 1));
            assert_eq!(result.evaluations, 1);
        }
    }

    // Strict multi-step climbing from t_lopt(20) burns the whole budget in
    // at least 99 of 100 seeded trials.
    let config = preset("tlopt-multi").unwrap();
    assert_eq!(config.n_values, vec![20]);
    assert_eq!(config.trials_per_n, 100);
    assert_eq!(config.budget, 1_000_000);
    let outcome = run_experiment(&config).unwrap();
    let exhausted = outcome
        .rows
        .iter()
        .filter(|r| r.result.status == RunStatus::BudgetExhausted)
        .count();
    assert!(exhausted >= 99, "only {exhausted}/100 exhausted the budget");
    println!(
        "criterion 5 (t_lopt theorems): PASS stuck at n-1 for n=2..12; {exhausted}/100 budget-exhausted at n=20"
    );
}

#[test]
fn criterion_06_fig3_replication() {
    let config = preset("fig3").unwrap();
    assert_eq!(config.n_values, vec![10, 20, 50]);
    assert_eq!(config.trials_per_n, 100);
    let outcome = run_experiment(&config).unwrap();
    for row in &outcome.summary {
        assert!(
            row.stuck_fraction >= 0.05,
            "n={} stuck_fraction={} below 0.05",
            row.n,
            row.stuck_fraction
        );
        assert_eq!(row.budget_fraction, 0.0);
    }
    let fractions: Vec<String> = outcome
        .summary
        .iter()
        .map(|r| format!("n={} {:.2}", r.n, r.stuck_fraction))
        .collect();
    println!(
        "criterion 6 (fig3 replication): PASS stuck fractions {}",
        fractions.join(", ")
    );
}

#[test]
fn criterion_07_fig2_replication() {
    let config = preset("fig2").unwrap();
    assert_eq!(config.n_values, vec![8, 16, 32, 64, 128]);
    assert_eq!(config.trials_per_n, 50);
    let outcome = run_experiment(&config).unwrap();
    for row in &outcome.summary {
        assert!(row.all_optimal(), "n={} had non-optimal trials", row.n);
    }
    for pair in outcome.summary.windows(2) {
        assert!(
            pair[0].mean_evaluations < pair[1].mean_evaluations,
            "mean evaluations not monotone between n={} and n={}",
            pair[0].n,
            pair[1].n
        );
    }
    let fit = fit_scaling_exponent(&outcome.summary).unwrap();
    assert!(
        fit.exponent > 0.9 && fit.exponent < 2.0,
        "exponent {} outside (0.9, 2.0)",
        fit.exponent
    );
    println!(
        "criterion 7 (fig2 replication): PASS all optimal, monotone means, exponent {:.3}",
        fit.exponent
    );
}

#[test]
fn criterion_08_order_strict_single_bound() {
    let config = preset("order-scaling").unwrap();
    assert_eq!(config.n_values, vec![16, 32, 64, 128]);
    assert_eq!(config.trials_per_n, 50);
    let outcome = run_experiment(&config).unwrap();
    for row in &outcome.rows {
        assert_eq!(row.result.status, RunStatus::Optimal);
        let cap = row.result.initial_nodes + 2 * row.n as u64;
        assert!(
            row.result.t_max_nodes <= cap,
            "n={} trial={} node count {} exceeded initial + 2n = {}",
            row.n,
            row.trial,
            row.result.t_max_nodes,
            cap
        );
    }
    let fit = fit_scaling_exponent(&outcome.summary).unwrap();
    assert!(fit.exponent <= 2.3, "exponent {} above 2.3", fit.exponent);
    println!(
        "criterion 8 (order strict-single bound): PASS node cap held in all {} trials, exponent {:.3}",
        outcome.rows.len(),
        fit.exponent
    );
}

#[test]
fn criterion_09_stuck_characterization_equivalence() {
    // Complete over leaf multisets up to T = 8 (both sides of the check
    // are functions of the multiset alone) and literal over every
    // shape/assignment pair up to T = 4.
    let multisets = sweep_stuck_multisets(8, 3).unwrap();
    assert!(multisets.pass(), "{:?}", multisets.failures.first());
    let shapes = sweep_stuck_shapes(4, 3).unwrap();
    assert!(shapes.pass(), "{:?}", shapes.failures.first());
    println!(
        "criterion 9 (stuck characterization): PASS {} multisets + {} shape/assignment trees",
        multisets.instances, shapes.instances
    );
}

#[test]
fn criterion_10_fig3_determinism() {
    let config = preset("fig3").unwrap();
    let first = run_experiment(&config).unwrap();
    let second = run_experiment(&config).unwrap();
    assert_eq!(first.csv().into_bytes(), second.csv().into_bytes());
    assert_eq!(first.summary_csv(), second.summary_csv());
    println!(
        "criterion 10 (determinism): PASS fig3 CSV byte-identical across runs ({} rows)",
        first.rows.len()
    );
}
