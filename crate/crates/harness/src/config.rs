//! Flat key-value experiment config files: one `key = value` per line,
//! `#` comments and blank lines ignored.
//!
//! ```text
//! name = my-sweep
//! problem = majority
//! accept = nonstrict
//! ops = single
//! init = adversarial-neg1
//! n = 8,16,32
//! trials = 50
//! seed = 42
//! budget = 0
//! stuck_detection = false
//! threads = 0
//! plot = evaluations
//! ```

use std::fmt;

use treegp::{AcceptancePolicy, InitSpec, OpCountPolicy};

use crate::experiment::{ExperimentConfig, PlotMetric, ProblemTemplate};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigParseError {}

fn err(line: usize, message: impl Into<String>) -> ConfigParseError {
    ConfigParseError {
        line,
        message: message.into(),
    }
}

pub fn parse_acceptance(token: &str) -> Option<AcceptancePolicy> {
    match token {
        "nonstrict" | "ge" => Some(AcceptancePolicy::NonStrict),
        "strict" | "gt" => Some(AcceptancePolicy::Strict),
        _ => None,
    }
}

pub fn parse_ops(token: &str) -> Option<OpCountPolicy> {
    match token {
        "single" => Some(OpCountPolicy::Single),
        "multi" => Some(OpCountPolicy::Multi),
        _ => None,
    }
}

pub fn parse_problem(token: &str) -> Option<ProblemTemplate> {
    match token {
        "order" => Some(ProblemTemplate::Order),
        "majority" => Some(ProblemTemplate::Majority),
        _ => None,
    }
}

/// Parse a single-run config from file text: the experiment keys minus
/// sweeping (`n` is one value, `seed` seeds the run directly, `trace`
/// turns on per-evaluation tracing).
pub fn parse_run_config(text: &str) -> Result<treegp::RunConfig, ConfigParseError> {
    let mut problem = ProblemTemplate::Majority;
    let mut n: Option<u32> = None;
    let mut acceptance = AcceptancePolicy::NonStrict;
    let mut ops = OpCountPolicy::Single;
    let mut init = InitSpec::Unity;
    let mut seed = 0u64;
    let mut budget = 0u64;
    let mut stuck_detection = false;
    let mut trace = false;

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, "expected 'key = value'"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "problem" => {
                problem = parse_problem(value)
                    .ok_or_else(|| err(line_no, format!("unknown problem '{value}'")))?;
            }
            "n" => {
                n = Some(
                    value
                        .parse()
                        .map_err(|_| err(line_no, format!("bad n value '{value}'")))?,
                );
            }
            "accept" => {
                acceptance = parse_acceptance(value)
                    .ok_or_else(|| err(line_no, format!("unknown acceptance '{value}'")))?;
            }
            "ops" => {
                ops = parse_ops(value)
                    .ok_or_else(|| err(line_no, format!("unknown op-count policy '{value}'")))?;
            }
            "init" => {
                init = InitSpec::parse_id(value).map_err(|e| err(line_no, e.to_string()))?;
            }
            "seed" => {
                seed = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad seed '{value}'")))?;
            }
            "budget" => {
                budget = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad budget '{value}'")))?;
            }
            "stuck_detection" => {
                stuck_detection = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(err(line_no, format!("bad boolean '{value}'"))),
                };
            }
            "trace" => {
                trace = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(err(line_no, format!("bad boolean '{value}'"))),
                };
            }
            _ => return Err(err(line_no, format!("unknown key '{key}'"))),
        }
    }
    let n = n.ok_or_else(|| err(0, "missing required key 'n'"))?;
    Ok(treegp::RunConfig {
        problem: problem.with_n(n),
        acceptance,
        ops,
        init,
        seed,
        budget,
        stuck_detection,
        trace: if trace {
            treegp::TraceLevel::Moves
        } else {
            treegp::TraceLevel::Off
        },
    })
}

/// Parse an experiment config from file text. Unknown keys are errors.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig, ConfigParseError> {
    let mut config = ExperimentConfig {
        name: "experiment".into(),
        problem: ProblemTemplate::Majority,
        acceptance: AcceptancePolicy::NonStrict,
        ops: OpCountPolicy::Single,
        init: InitSpec::Unity,
        n_values: Vec::new(),
        trials_per_n: 1,
        master_seed: 0,
        budget: 0,
        stuck_detection: false,
        threads: 0,
        plot_metric: PlotMetric::Evaluations,
    };

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "name" => config.name = value.to_string(),
            "problem" => {
                config.problem = parse_problem(value)
                    .ok_or_else(|| err(line_no, format!("unknown problem '{value}'")))?;
            }
            "accept" => {
                config.acceptance = parse_acceptance(value)
                    .ok_or_else(|| err(line_no, format!("unknown acceptance '{value}'")))?;
            }
            "ops" => {
                config.ops = parse_ops(value)
                    .ok_or_else(|| err(line_no, format!("unknown op-count policy '{value}'")))?;
            }
            "init" => {
                config.init = InitSpec::parse_id(value).map_err(|e| err(line_no, e.to_string()))?;
            }
            "n" => {
                config.n_values = value
                    .split(',')
                    .map(|part| {
                        part.trim()
                            .parse::<u32>()
                            .map_err(|_| err(line_no, format!("bad n value '{part}'")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "trials" => {
                config.trials_per_n = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad trial count '{value}'")))?;
            }
            "seed" => {
                config.master_seed = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad seed '{value}'")))?;
            }
            "budget" => {
                config.budget = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad budget '{value}'")))?;
            }
            "stuck_detection" => {
                config.stuck_detection = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(err(line_no, format!("bad boolean '{value}'"))),
                };
            }
            "threads" => {
                config.threads = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad thread count '{value}'")))?;
            }
            "plot" => {
                config.plot_metric = match value {
                    "evaluations" => PlotMetric::Evaluations,
                    "stuck-fraction" => PlotMetric::StuckFraction,
                    _ => return Err(err(line_no, format!("unknown plot metric '{value}'"))),
                };
            }
            _ => return Err(err(line_no, format!("unknown key '{key}'"))),
        }
    }
    Ok(config)
}
