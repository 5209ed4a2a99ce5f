//! Seeded multi-trial experiments: sweeps over problem size, parallel
//! trial execution, CSV emission, and per-size summary statistics.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use treegp::{
    AcceptancePolicy, EngineError, InitSpec, OpCountPolicy, ProblemKind, RunConfig, RunResult,
    RunStatus, TraceLevel,
};

/// Stable header of the per-trial CSV.
pub const CSV_HEADER: &str = "n,trial,seed,status,evaluations,accepted,t_max_nodes,final_fitness";

/// Which problem an experiment sweeps; `n` is supplied per sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemTemplate {
    Order,
    Majority,
}

impl ProblemTemplate {
    pub fn with_n(self, n: u32) -> ProblemKind {
        match self {
            ProblemTemplate::Order => ProblemKind::Order { n },
            ProblemTemplate::Majority => ProblemKind::Majority { n },
        }
    }
}

impl fmt::Display for ProblemTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemTemplate::Order => write!(f, "order"),
            ProblemTemplate::Majority => write!(f, "majority"),
        }
    }
}

/// Which summary column the plot data file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMetric {
    /// `n mean_evaluations std_evaluations`
    Evaluations,
    /// `n stuck_fraction`
    StuckFraction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemTemplate,
    pub acceptance: AcceptancePolicy,
    pub ops: OpCountPolicy,
    pub init: InitSpec,
    /// Strictly increasing problem sizes.
    pub n_values: Vec<u32>,
    pub trials_per_n: u32,
    pub master_seed: u64,
    pub budget: u64,
    pub stuck_detection: bool,
    /// Worker threads; 0 uses the default pool size.
    pub threads: usize,
    pub plot_metric: PlotMetric,
}

#[derive(Debug)]
pub enum HarnessError {
    InvalidConfig(String),
    Engine(EngineError),
    Io(io::Error),
    /// Too few all-optimal sweep points for a scaling fit.
    InsufficientFitPoints {
        have: usize,
        need: usize,
    },
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::InvalidConfig(msg) => write!(f, "invalid experiment config: {msg}"),
            HarnessError::Engine(e) => write!(f, "{e}"),
            HarnessError::Io(e) => write!(f, "i/o error: {e}"),
            HarnessError::InsufficientFitPoints { have, need } => write!(
                f,
                "scaling fit needs at least {need} all-optimal sweep points, have {have}"
            ),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<EngineError> for HarnessError {
    fn from(e: EngineError) -> Self {
        HarnessError::Engine(e)
    }
}

impl From<io::Error> for HarnessError {
    fn from(e: io::Error) -> Self {
        HarnessError::Io(e)
    }
}

/// One finished trial.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub n: u32,
    pub trial: u32,
    pub seed: u64,
    pub result: RunResult,
}

impl TrialRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.trial,
            self.seed,
            self.result.status.token(),
            self.result.evaluations,
            self.result.accepted_moves,
            self.result.t_max_nodes,
            self.result.final_fitness
        )
    }
}

/// Per-`n` aggregates. Mean and standard deviation of evaluations cover
/// only trials that reached the optimum; non-optimal outcomes appear as
/// fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n: u32,
    pub trials: u32,
    pub mean_evaluations: f64,
    pub std_evaluations: f64,
    pub stuck_fraction: f64,
    pub budget_fraction: f64,
    pub mean_t_max_nodes: f64,
}

impl SummaryRow {
    pub fn all_optimal(&self) -> bool {
        self.stuck_fraction == 0.0 && self.budget_fraction == 0.0
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.trials,
            self.mean_evaluations,
            self.std_evaluations,
            self.stuck_fraction,
            self.budget_fraction,
            self.mean_t_max_nodes
        )
    }
}

pub const SUMMARY_HEADER: &str =
    "n,trials,mean_evaluations,std_evaluations,stuck_fraction,budget_fraction,mean_t_max_nodes";

/// Everything an experiment produces, in deterministic order.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for row in &self.summary {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

/// 64-bit finalizer (splitmix64-style) used to derive per-trial seeds.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed from (master seed, n, trial), independent of execution
/// order.
pub fn trial_seed(master_seed: u64, n: u32, trial: u32) -> u64 {
    let h = mix64(master_seed ^ 0x9e37_79b9_7f4a_7c15);
    let h = mix64(h ^ (n as u64).wrapping_mul(0xff51_afd7_ed55_8ccd));
    mix64(h ^ (trial as u64).wrapping_mul(0xc4ce_b9fe_1a85_ec53))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_values.is_empty() {
            return Err(HarnessError::InvalidConfig("n_values is empty".into()));
        }
        if !self.n_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(HarnessError::InvalidConfig(
                "n_values must be strictly increasing".into(),
            ));
        }
        if self.trials_per_n < 1 {
            return Err(HarnessError::InvalidConfig(
                "trials_per_n must be >= 1".into(),
            ));
        }
        for &n in &self.n_values {
            self.run_config(n, 0).validate()?;
        }
        Ok(())
    }

    pub fn run_config(&self, n: u32, trial: u32) -> RunConfig {
        RunConfig {
            problem: self.problem.with_n(n),
            acceptance: self.acceptance,
            ops: self.ops,
            init: self.init.clone(),
            seed: trial_seed(self.master_seed, n, trial),
            budget: self.budget,
            stuck_detection: self.stuck_detection,
            trace: TraceLevel::Off,
        }
    }
}

/// Run every (n, trial) pair. Trials execute in parallel but the returned
/// rows are ordered by (n, trial), so output is independent of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let jobs: Vec<(u32, u32)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.trials_per_n).map(move |trial| (n, trial)))
        .collect();

    let execute = |(n, trial): &(u32, u32)| -> Result<TrialRow, HarnessError> {
        let run_config = config.run_config(*n, *trial);
        let result = treegp::run(&run_config)?;
        Ok(TrialRow {
            n: *n,
            trial: *trial,
            seed: run_config.seed,
            result,
        })
    };

    let rows: Result<Vec<TrialRow>, HarnessError> = if config.threads == 1 {
        jobs.iter().map(execute).collect()
    } else if config.threads == 0 {
        jobs.par_iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| HarnessError::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(execute).collect())
    };
    let rows = rows?;

    let summary = summarize(&rows);
    Ok(ExperimentOutcome { rows, summary })
}

/// Aggregate rows (already ordered by n) into per-`n` summaries.
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    let mut index = 0;
    while index < rows.len() {
        let n = rows[index].n;
        let group_end = rows[index..]
            .iter()
            .position(|r| r.n != n)
            .map(|offset| index + offset)
            .unwrap_or(rows.len());
        let group = &rows[index..group_end];
        out.push(summarize_group(n, group));
        index = group_end;
    }
    out
}

fn summarize_group(n: u32, group: &[TrialRow]) -> SummaryRow {
    let trials = group.len() as u32;
    let optimal: Vec<f64> = group
        .iter()
        .filter(|r| r.result.status == RunStatus::Optimal)
        .map(|r| r.result.evaluations as f64)
        .collect();
    let stuck = group
        .iter()
        .filter(|r| r.result.status == RunStatus::Stuck)
        .count();
    let budget = group
        .iter()
        .filter(|r| r.result.status == RunStatus::BudgetExhausted)
        .count();
    let (mean, std) = mean_and_sample_std(&optimal);
    let t_max_mean = group
        .iter()
        .map(|r| r.result.t_max_nodes as f64)
        .sum::<f64>()
        / trials as f64;
    SummaryRow {
        n,
        trials,
        mean_evaluations: mean,
        std_evaluations: std,
        stuck_fraction: stuck as f64 / trials as f64,
        budget_fraction: budget as f64 / trials as f64,
        mean_t_max_nodes: t_max_mean,
    }
}

/// Sample mean and standard deviation (n - 1 convention). NaN when there
/// are no values, 0 standard deviation for one value.
pub fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Whitespace-separated plot data consumable by standard plotting tools:
/// `n mean std` for evaluation metrics, `n fraction` for stuck fractions.
pub fn plot_data(summary: &[SummaryRow], metric: PlotMetric) -> String {
    let mut out = String::new();
    for row in summary {
        match metric {
            PlotMetric::Evaluations => out.push_str(&format!(
                "{} {} {}\n",
                row.n, row.mean_evaluations, row.std_evaluations
            )),
            PlotMetric::StuckFraction => {
                out.push_str(&format!("{} {}\n", row.n, row.stuck_fraction))
            }
        }
    }
    out
}

/// Write `<name>.csv`, `<name>.summary.csv`, and `<name>.dat` under `dir`.
pub fn write_outputs(
    config: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", config.name));
    let summary_path = dir.join(format!("{}.summary.csv", config.name));
    let plot_path = dir.join(format!("{}.dat", config.name));
    fs::write(&csv_path, outcome.csv())?;
    fs::write(&summary_path, outcome.summary_csv())?;
    fs::write(&plot_path, plot_data(&outcome.summary, config.plot_metric))?;
    Ok(vec![csv_path, summary_path, plot_path])
}

// ---------------------------------------------------------------------------
// Named presets
// ---------------------------------------------------------------------------

pub const PRESET_NAMES: [&str; 4] = ["fig2", "fig3", "order-scaling", "tlopt-multi"];

/// The named replication experiments, runnable by id.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    match name {
        // Non-strict single-step climbing on MAJORITY from the all-~x1
        // start: terminates almost surely, so no budget.
        "fig2" => Some(ExperimentConfig {
            name: "fig2".into(),
            problem: ProblemTemplate::Majority,
            acceptance: AcceptancePolicy::NonStrict,
            ops: OpCountPolicy::Single,
            init: InitSpec::AdversarialNeg1,
            n_values: vec![8, 16, 32, 64, 128],
            trials_per_n: 50,
            master_seed: 42,
            budget: 0,
            stuck_detection: false,
            threads: 0,
            plot_metric: PlotMetric::Evaluations,
        }),
        // Strict single-step climbing on MAJORITY from random starts:
        // exact stuck detection replaces a budget.
        "fig3" => Some(ExperimentConfig {
            name: "fig3".into(),
            problem: ProblemTemplate::Majority,
            acceptance: AcceptancePolicy::Strict,
            ops: OpCountPolicy::Single,
            init: InitSpec::Unity,
            n_values: vec![10, 20, 50],
            trials_per_n: 100,
            master_seed: 42,
            budget: 0,
            stuck_detection: true,
            threads: 0,
            plot_metric: PlotMetric::StuckFraction,
        }),
        // Strict single-step climbing on ORDER from random starts.
        "order-scaling" => Some(ExperimentConfig {
            name: "order-scaling".into(),
            problem: ProblemTemplate::Order,
            acceptance: AcceptancePolicy::Strict,
            ops: OpCountPolicy::Single,
            init: InitSpec::Unity,
            n_values: vec![16, 32, 64, 128],
            trials_per_n: 50,
            master_seed: 42,
            budget: 0,
            stuck_detection: false,
            threads: 0,
            plot_metric: PlotMetric::Evaluations,
        }),
        // Strict multi-step climbing from the inescapable local optimum:
        // escaping needs simultaneous lucky operations whose probability
        // is astronomically small, so exhausting the budget is the
        // expected outcome.
        "tlopt-multi" => Some(ExperimentConfig {
            name: "tlopt-multi".into(),
            problem: ProblemTemplate::Majority,
            acceptance: AcceptancePolicy::Strict,
            ops: OpCountPolicy::Multi,
            init: InitSpec::TLopt,
            n_values: vec![20],
            trials_per_n: 100,
            master_seed: 42,
            budget: 1_000_000,
            stuck_detection: false,
            threads: 0,
            plot_metric: PlotMetric::Evaluations,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            problem: ProblemTemplate::Majority,
            acceptance: AcceptancePolicy::NonStrict,
            ops: OpCountPolicy::Single,
            init: InitSpec::Unity,
            n_values: vec![4, 6],
            trials_per_n: 5,
            master_seed: 7,
            budget: 0,
            stuck_detection: false,
            threads: 1,
            plot_metric: PlotMetric::Evaluations,
        }
    }

    #[test]
    fn rows_are_ordered_and_deterministic() {
        let config = tiny_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.csv(), b.csv());
        let keys: Vec<(u32, u32)> = a.rows.iter().map(|r| (r.n, r.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn parallel_and_sequential_runs_agree() {
        let mut config = tiny_config();
        config.threads = 1;
        let sequential = run_experiment(&config).unwrap();
        config.threads = 4;
        let parallel = run_experiment(&config).unwrap();
        assert_eq!(sequential.csv(), parallel.csv());
        assert_eq!(sequential.summary_csv(), parallel.summary_csv());
    }

    #[test]
    fn csv_header_is_stable() {
        assert_eq!(
            CSV_HEADER,
            "n,trial,seed,status,evaluations,accepted,t_max_nodes,final_fitness"
        );
        let outcome = run_experiment(&tiny_config()).unwrap();
        assert!(outcome.csv().starts_with(CSV_HEADER));
        assert_eq!(outcome.csv().lines().count(), 1 + 10);
    }

    #[test]
    fn summary_statistics_match_hand_values() {
        let (mean, std) = mean_and_sample_std(&[100.0]);
        assert_eq!((mean, std), (100.0, 0.0));
        let (mean, std) = mean_and_sample_std(&[100.0, 200.0]);
        assert_eq!(mean, 150.0);
        assert!((std - 70.71067811865476).abs() < 1e-9);
        let (mean, std) = mean_and_sample_std(&[]);
        assert!(mean.is_nan() && std.is_nan());
    }

    #[test]
    fn non_optimal_trials_are_excluded_from_means() {
        use treegp::{Fitness, RunResult, RunStatus};
        let row = |n, trial, status, evals| TrialRow {
            n,
            trial,
            seed: 0,
            result: RunResult {
                status,
                evaluations: evals,
                t_max_nodes: 10,
                final_fitness: Fitness::new(3),
                accepted_moves: 1,
                initial_nodes: 7,
                final_tree: String::new(),
                trace: Vec::new(),
            },
        };
        let rows = vec![
            row(4, 0, RunStatus::Optimal, 100),
            row(4, 1, RunStatus::Stuck, 999_999),
            row(4, 2, RunStatus::Optimal, 200),
            row(4, 3, RunStatus::BudgetExhausted, 777),
        ];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 1);
        let s = &summary[0];
        assert_eq!(s.trials, 4);
        assert_eq!(s.mean_evaluations, 150.0);
        assert_eq!(s.stuck_fraction, 0.25);
        assert_eq!(s.budget_fraction, 0.25);
        assert!(!s.all_optimal());
    }

    #[test]
    fn trial_seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(42, 8, 0), trial_seed(42, 8, 0));
        let mut seen = std::collections::HashSet::new();
        for n in [8u32, 16, 32] {
            for trial in 0..100u32 {
                assert!(seen.insert(trial_seed(42, n, trial)));
            }
        }
        assert_ne!(trial_seed(42, 8, 0), trial_seed(43, 8, 0));
    }

    #[test]
    fn presets_exist_and_validate() {
        for name in PRESET_NAMES {
            let config = preset(name).unwrap_or_else(|| panic!("preset {name}"));
            assert_eq!(config.name, name);
            config.validate().unwrap();
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = tiny_config();
        config.n_values = vec![6, 4];
        assert!(matches!(
            run_experiment(&config),
            Err(HarnessError::InvalidConfig(_))
        ));
        let mut config = tiny_config();
        config.n_values.clear();
        assert!(run_experiment(&config).is_err());
        let mut config = tiny_config();
        config.ops = OpCountPolicy::Multi; // majority multi needs a budget
        assert!(matches!(
            run_experiment(&config),
            Err(HarnessError::Engine(_))
        ));
    }

    #[test]
    fn plot_data_formats() {
        let summary = vec![SummaryRow {
            n: 8,
            trials: 2,
            mean_evaluations: 150.0,
            std_evaluations: 70.71067811865476,
            stuck_fraction: 0.5,
            budget_fraction: 0.0,
            mean_t_max_nodes: 31.0,
        }];
        assert_eq!(
            plot_data(&summary, PlotMetric::Evaluations),
            "8 150 70.71067811865476\n"
        );
        assert_eq!(plot_data(&summary, PlotMetric::StuckFraction), "8 0.5\n");
    }
}
