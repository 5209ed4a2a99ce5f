//! Command-line harness: single runs, batch experiments, oracle checks,
//! and ad-hoc tree inspection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use treegp::oracle;
use treegp::{parse_tree, InitSpec, ProblemKind, RunConfig, TraceLevel};
use treegp_harness::{
    config::{parse_acceptance, parse_ops, parse_problem, parse_run_config},
    fit_scaling_exponent, parse_experiment_config, preset, run_experiment, write_outputs,
    PlotMetric, PRESET_NAMES,
};

/// (1+1) genetic-programming hill climbers on the ORDER and MAJORITY
/// model problems.
#[derive(Parser)]
#[command(name = "treegp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single run and print its result.
    Run(RunArgs),
    /// Run a named preset or a config file; writes CSV, summary, and plot
    /// data.
    Experiment(ExperimentArgs),
    /// Exact verification checks; exits nonzero if any check fails.
    Oracle(OracleArgs),
    /// Parse, evaluate, or mutate a tree given in canonical text form.
    Tree(TreeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Read the run configuration from a key-value file instead of flags
    /// (--seed and --trace still apply on top).
    #[arg(long, conflicts_with_all = ["problem", "n", "accept", "ops", "init", "budget", "stuck_detection"])]
    config: Option<PathBuf>,
    /// order | majority
    #[arg(long, required_unless_present = "config")]
    problem: Option<String>,
    /// Number of variables.
    #[arg(long, required_unless_present = "config")]
    n: Option<u32>,
    /// nonstrict (accept f' >= f) | strict (accept f' > f)
    #[arg(long, default_value = "nonstrict")]
    accept: String,
    /// single (k = 1) | multi (k = 1 + Pois(1))
    #[arg(long, default_value = "single")]
    ops: String,
    /// unity | adversarial-neg1 | t-lopt | text:<tree>
    #[arg(long, default_value = "unity")]
    init: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum fitness evaluations; 0 = unlimited (terminating configs
    /// only).
    #[arg(long, default_value_t = 0)]
    budget: u64,
    /// Detect the exact stuck state (strict single-step on majority only).
    #[arg(long, default_value_t = false)]
    stuck_detection: bool,
    /// Print one line per evaluation.
    #[arg(long, default_value_t = false)]
    trace: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Preset name (fig2, fig3, order-scaling, tlopt-multi) or a config
    /// file path.
    spec: String,
    /// Output directory (default: $TREEGP_OUT_DIR, else the current
    /// directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override trials per n.
    #[arg(long)]
    trials: Option<u32>,
    /// Override worker thread count (0 = default pool).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// distribution | lemma1 | sdp | stuck | all
    check: String,
    /// Instance tree in canonical text form (distribution and single-
    /// instance lemma1/sdp/stuck checks).
    #[arg(long)]
    tree: Option<String>,
    /// Number of variables for --tree instances.
    #[arg(long)]
    n: Option<u32>,
    /// Largest leaf count for exhaustive sweeps.
    #[arg(long)]
    t_max: Option<usize>,
    /// Largest alphabet for exhaustive sweeps.
    #[arg(long)]
    n_max: Option<u32>,
    /// Random-case count for the lemma1 sweep.
    #[arg(long, default_value_t = 200)]
    cases: u32,
    /// Seed for randomized sweeps.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct TreeArgs {
    /// parse | eval | mutate
    action: String,
    /// Tree in canonical text form.
    #[arg(long)]
    tree: String,
    /// Number of variables.
    #[arg(long)]
    n: u32,
    /// Problem for eval: order | majority.
    #[arg(long, default_value = "order")]
    problem: String,
    /// Seed for mutate.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of mutation steps for mutate.
    #[arg(long, default_value_t = 1)]
    steps: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Tree(args) => cmd_tree(args),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, String> {
    let mut config = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_run_config(&text).map_err(|e| e.to_string())?
        }
        None => {
            let problem = args.problem.as_deref().expect("required by clap");
            let template =
                parse_problem(problem).ok_or_else(|| format!("unknown problem '{problem}'"))?;
            RunConfig {
                problem: template.with_n(args.n.expect("required by clap")),
                acceptance: parse_acceptance(&args.accept)
                    .ok_or_else(|| format!("unknown acceptance '{}'", args.accept))?,
                ops: parse_ops(&args.ops)
                    .ok_or_else(|| format!("unknown op-count policy '{}'", args.ops))?,
                init: InitSpec::parse_id(&args.init).map_err(|e| e.to_string())?,
                seed: 0,
                budget: args.budget,
                stuck_detection: args.stuck_detection,
                trace: TraceLevel::Off,
            }
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.trace {
        config.trace = TraceLevel::Moves;
    }
    let result = treegp::run(&config).map_err(|e| e.to_string())?;
    for line in &result.trace {
        println!("{line}");
    }
    println!(
        "status={} evaluations={} accepted={} final_fitness={} t_max_nodes={} initial_nodes={}",
        result.status,
        result.evaluations,
        result.accepted_moves,
        result.final_fitness,
        result.t_max_nodes,
        result.initial_nodes
    );
    println!("final_tree={}", result.final_tree);
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode, String> {
    let mut config = match preset(&args.spec) {
        Some(config) => config,
        None => {
            let text = std::fs::read_to_string(&args.spec).map_err(|e| {
                format!(
                    "'{}' is neither a preset ({}) nor a readable config file: {e}",
                    args.spec,
                    PRESET_NAMES.join(", ")
                )
            })?;
            parse_experiment_config(&text).map_err(|e| e.to_string())?
        }
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials_per_n = trials;
    }
    if let Some(threads) = args.threads {
        config.threads = threads;
    }
    let out_dir = args
        .out
        .or_else(|| std::env::var_os("TREEGP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let outcome = run_experiment(&config).map_err(|e| e.to_string())?;
    let paths = write_outputs(&config, &outcome, &out_dir).map_err(|e| e.to_string())?;

    println!("experiment {} ({} trials)", config.name, outcome.rows.len());
    print!("{}", outcome.summary_csv());
    if config.plot_metric == PlotMetric::Evaluations {
        match fit_scaling_exponent(&outcome.summary) {
            Ok(fit) => println!(
                "scaling exponent {:.4} over {} points (residual norm {:.4})",
                fit.exponent, fit.points, fit.residual_norm
            ),
            Err(e) => println!("scaling exponent unavailable: {e}"),
        }
    }
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

struct OracleOutput {
    failed: bool,
}

impl OracleOutput {
    fn new() -> Self {
        OracleOutput { failed: false }
    }

    fn line(&mut self, check: &str, instance: &str, pass: bool, details: &str) {
        if !pass {
            self.failed = true;
        }
        println!(
            "{check}\t{instance}\t{}\t{details}",
            if pass { "pass" } else { "fail" }
        );
    }

    fn sweep(&mut self, check: &str, instance: &str, report: &oracle::SweepReport) {
        let details = if report.pass() {
            format!("{} instances", report.instances)
        } else {
            format!(
                "{} instances, {} failures, first: {}",
                report.instances,
                report.failures.len(),
                report.failures[0]
            )
        };
        self.line(check, instance, report.pass(), &details);
    }

    fn exit_code(&self) -> ExitCode {
        if self.failed {
            ExitCode::FAILURE
        } else {
            ExitCode::SUCCESS
        }
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode, String> {
    let mut out = OracleOutput::new();
    match args.check.as_str() {
        "distribution" => {
            let (tree, n) = instance(&args, "(J ~x1 x1)", 1)?;
            let problem = ProblemKind::Order { n };
            let dist =
                oracle::enumerate_single_mutations(&tree, problem).map_err(|e| e.to_string())?;
            let improving = dist.improving_mass();
            out.line(
                "distribution",
                &format!("{tree} n={n}"),
                num_traits::One::is_one(&dist.total_mass()),
                &format!(
                    "outcomes={} base_fitness={} improving_mass={}",
                    dist.outcomes.len(),
                    dist.base_fitness,
                    improving
                ),
            );
        }
        "lemma1" => {
            if args.tree.is_some() {
                let (tree, n) = instance(&args, "", 1)?;
                let report = oracle::check_lemma1(&tree, n).map_err(|e| e.to_string())?;
                out.line(
                    "lemma1",
                    &format!("{tree} n={n}"),
                    report.pass,
                    &report.to_string(),
                );
            } else {
                let report =
                    oracle::sweep_lemma1_random(args.cases, args.n_max.unwrap_or(6), args.seed)
                        .map_err(|e| e.to_string())?;
                out.sweep("lemma1", &format!("random cases={}", args.cases), &report);
            }
        }
        "sdp" => {
            if args.tree.is_some() {
                let (tree, n) = instance(&args, "", 1)?;
                let pass = oracle::check_sdp(&tree, n).map_err(|e| e.to_string())?;
                out.line("sdp", &format!("{tree} n={n}"), pass, "");
            } else {
                let t_max = args.t_max.unwrap_or(6);
                let n_max = args.n_max.unwrap_or(3);
                let report =
                    oracle::sweep_sdp_multisets(2, t_max, n_max).map_err(|e| e.to_string())?;
                out.sweep(
                    "sdp",
                    &format!("multisets T=2..{t_max} n<={n_max}"),
                    &report,
                );
            }
        }
        "stuck" => {
            if args.tree.is_some() {
                let (tree, n) = instance(&args, "", 1)?;
                let check = oracle::crosscheck_stuck(&tree, n).map_err(|e| e.to_string())?;
                out.line(
                    "stuck",
                    &format!("{tree} n={n}"),
                    check.agree(),
                    &format!(
                        "profile={} enumeration={}",
                        check.profile_stuck, check.enumeration_stuck
                    ),
                );
            } else {
                let t_max = args.t_max.unwrap_or(8);
                let n_max = args.n_max.unwrap_or(3);
                let report =
                    oracle::sweep_stuck_multisets(t_max, n_max).map_err(|e| e.to_string())?;
                out.sweep(
                    "stuck",
                    &format!("multisets T<={t_max} n<={n_max}"),
                    &report,
                );
            }
        }
        "all" => {
            let tree = parse_tree("(J ~x1 x1)", 1).map_err(|e| e.to_string())?;
            let dist = oracle::enumerate_single_mutations(&tree, ProblemKind::Order { n: 1 })
                .map_err(|e| e.to_string())?;
            let expected = num_rational::BigRational::new(11.into(), 36.into());
            out.line(
                "distribution",
                "(J ~x1 x1) n=1",
                dist.improving_mass() == expected,
                &format!("improving_mass={}", dist.improving_mass()),
            );
            let report =
                oracle::sweep_lemma1_random(args.cases, 6, args.seed).map_err(|e| e.to_string())?;
            out.sweep("lemma1", &format!("random cases={}", args.cases), &report);
            let report = oracle::sweep_sdp_multisets(2, 6, 3).map_err(|e| e.to_string())?;
            out.sweep("sdp", "multisets T=2..6 n<=3", &report);
            let report = oracle::sweep_stuck_multisets(8, 3).map_err(|e| e.to_string())?;
            out.sweep("stuck", "multisets T<=8 n<=3", &report);
        }
        other => return Err(format!("unknown oracle check '{other}'")),
    }
    Ok(out.exit_code())
}

fn instance(
    args: &OracleArgs,
    default_tree: &str,
    default_n: u32,
) -> Result<(treegp::GpTree, u32), String> {
    let text = args.tree.as_deref().unwrap_or(default_tree);
    let n = args.n.unwrap_or(default_n);
    require_positive_n(n)?;
    let tree = parse_tree(text, n).map_err(|e| e.to_string())?;
    Ok((tree, n))
}

fn require_positive_n(n: u32) -> Result<(), String> {
    if n < 1 {
        return Err("n must be >= 1".into());
    }
    if n > u32::MAX / 4 {
        return Err(format!("n must be at most {}", u32::MAX / 4));
    }
    Ok(())
}

fn cmd_tree(args: TreeArgs) -> Result<ExitCode, String> {
    require_positive_n(args.n)?;
    let mut tree = parse_tree(&args.tree, args.n).map_err(|e| e.to_string())?;
    match args.action.as_str() {
        "parse" => {
            println!("canonical={tree}");
            println!("leaves={} nodes={}", tree.leaf_count(), tree.node_count());
            let inorder: Vec<String> = tree
                .inorder_leaves()
                .iter()
                .map(|t| t.to_string())
                .collect();
            println!("inorder={}", inorder.join(" "));
        }
        "eval" => match parse_problem(&args.problem) {
            Some(template) => match template.with_n(args.n) {
                ProblemKind::Order { n } => {
                    let (fitness, path) = treegp::order_fitness(&tree.inorder_leaves(), n);
                    println!("problem=order fitness={fitness}");
                    println!("execution_path={path}");
                }
                ProblemKind::Majority { n } => {
                    let (fitness, profile) = treegp::majority_fitness(&tree.inorder_leaves(), n);
                    println!("problem=majority fitness={fitness}");
                    let expressed: Vec<String> =
                        profile.expressed_vars().map(|i| format!("x{i}")).collect();
                    println!("expressed={}", expressed.join(" "));
                    for i in 1..=n {
                        println!(
                            "var=x{i} c_pos={} c_neg={} deficit={}",
                            profile.c_pos(i),
                            profile.c_neg(i),
                            profile.deficit(i)
                        );
                    }
                }
            },
            None => return Err(format!("unknown problem '{}'", args.problem)),
        },
        "mutate" => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
            for step in 1..=args.steps {
                let record = tree.hvl_prime_step(&mut rng, args.n);
                println!("step={step} op={record}");
            }
            println!("result={tree}");
            println!("leaves={} nodes={}", tree.leaf_count(), tree.node_count());
        }
        other => return Err(format!("unknown tree action '{other}'")),
    }
    Ok(ExitCode::SUCCESS)
}
