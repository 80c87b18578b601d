use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use distrl_core::dist::ProjectionSpec;
use distrl_core::dp::{
    brute_force_optimal, evaluate_policy_exact, evaluate_policy_projected, plan_distributional,
    plan_distributional_projected, plan_expected, plan_exponential, PlanningResult,
};
use distrl_core::experiments::{self, ExperimentReport};
use distrl_core::qlearn::{extract_greedy, learn, root_value, LearningConfig, LearningMode};
use distrl_core::{DeterministicPolicy, Functional, TabularMdp};
use serde_json::{json, Value};

/// Finite-horizon distributional RL experiments.
#[derive(Debug, Parser)]
#[command(name = "distrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Projected vs exact evaluation on the Bernoulli(0.5) chain, for every
    /// horizon prefix.
    EvalError {
        #[arg(long, default_value_t = 70)]
        horizon: usize,
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
        /// CVaR levels, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25])]
        alpha: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-step projection errors on the tightness chain.
    Tightness {
        #[arg(long)]
        resolution: usize,
        #[arg(long, default_value_t = 1.0)]
        delta0: f64,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Searches for a property violation and measures the planning gap on
    /// the matching counter-example MDP.
    Counterexample {
        /// Functional as JSON, e.g. '{"kind":"cvar","alpha":0.5}'.
        #[arg(long)]
        functional: String,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plans on an MDP file and prints the policy, root value and Q table.
    Plan {
        #[arg(long)]
        mdp: PathBuf,
        /// Functional as JSON; required unless --method is expected.
        #[arg(long)]
        functional: Option<String>,
        #[arg(long, value_enum, default_value_t = Method::Greedy)]
        method: Method,
        /// Projects every backup when set (greedy method only).
        #[arg(long, value_enum)]
        projection: Option<Projection>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact (and optionally projected) return distributions of a policy.
    Evaluate {
        #[arg(long)]
        mdp: PathBuf,
        /// Policy file holding `actions[h][x]` as JSON; defaults to action 0 everywhere.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, value_enum)]
        projection: Option<Projection>,
        #[arg(long)]
        resolution: Option<usize>,
        /// Also reports this functional of every root return distribution.
        #[arg(long)]
        functional: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabular Q-learning from sampled episodes.
    Qlearn {
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exponential)]
        mode: Mode,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// Offset of the linear target.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
        #[arg(long, default_value_t = 50_000)]
        episodes: usize,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    /// Greedy distributional dynamic programming.
    Greedy,
    /// Exhaustive search over deterministic Markov policies.
    BruteForce,
    /// Log-space exponential-utility planning; reads λ from the functional.
    Exponential,
    /// Scalar expected-value planning.
    Expected,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Projection {
    Quantile,
    Categorical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exponential,
    Linear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::EvalError {
            horizon,
            resolution,
            alpha,
            out,
        } => report(
            experiments::eval_error(horizon, resolution, &alpha)?,
            out.as_deref(),
        ),
        Command::Tightness {
            resolution,
            delta0,
            horizon,
            out,
        } => report(
            experiments::tightness(resolution, delta0, horizon)?,
            out.as_deref(),
        ),
        Command::Counterexample {
            functional,
            budget,
            seed,
            out,
        } => {
            let s = parse_functional(&functional)?;
            report(
                experiments::counterexample(&s, budget, seed)?,
                out.as_deref(),
            )
        }
        Command::Plan {
            mdp,
            functional,
            method,
            projection,
            resolution,
            out,
        } => {
            let model = load_mdp(&mdp)?;
            let s = functional.as_deref().map(parse_functional).transpose()?;
            let spec = projection_spec(&model, projection, resolution)?;
            let result = plan(&model, s.as_ref(), method, spec.as_ref())?;
            let mut value = serde_json::to_value(&result)?;
            value["method"] = json!(method.to_possible_value().expect("named").get_name());
            if let Some(s) = &s {
                value["functional"] = json!(s.to_string());
            }
            emit(&value, out.as_deref())
        }
        Command::Evaluate {
            mdp,
            policy,
            projection,
            resolution,
            functional,
            out,
        } => {
            let model = load_mdp(&mdp)?;
            let policy = match policy {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let actions: Vec<Vec<usize>> = serde_json::from_str(&text)
                        .with_context(|| format!("parsing policy {}", path.display()))?;
                    DeterministicPolicy::new(&model, actions)?
                }
                None => DeterministicPolicy::constant(&model, 0)?,
            };
            let s = functional.as_deref().map(parse_functional).transpose()?;
            let spec = projection_spec(&model, projection, resolution)?;
            emit(
                &evaluate(&model, &policy, spec.as_ref(), s.as_ref())?,
                out.as_deref(),
            )
        }
        Command::Qlearn {
            mdp,
            mode,
            lambda,
            offset,
            episodes,
            epsilon,
            seed,
            out,
        } => {
            let model = load_mdp(&mdp)?;
            let mode = match mode {
                Mode::Exponential => LearningMode::Exponential { lambda },
                Mode::Linear => LearningMode::Linear { lambda, b: offset },
            };
            let cfg = LearningConfig {
                mode,
                episodes,
                step_size: Default::default(),
                seed,
                epsilon,
            };
            let q = learn(&model, &cfg)?;
            let value = json!({
                "config": cfg,
                "policy": extract_greedy(&q),
                "root_value": root_value(&q, &model),
                "q": q,
            });
            emit(&value, out.as_deref())
        }
    }
}

fn parse_functional(text: &str) -> Result<Functional> {
    Functional::from_json(text).with_context(|| format!("parsing functional {text}"))
}

fn load_mdp(path: &Path) -> Result<TabularMdp> {
    TabularMdp::load(path).with_context(|| format!("loading MDP {}", path.display()))
}

fn projection_spec(
    mdp: &TabularMdp,
    projection: Option<Projection>,
    resolution: Option<usize>,
) -> Result<Option<ProjectionSpec>> {
    let spec = match (projection, resolution) {
        (None, None) => return Ok(None),
        (None, Some(_)) => bail!("--resolution needs --projection"),
        (Some(_), None) => bail!("--projection needs --resolution"),
        (Some(Projection::Quantile), Some(n)) => ProjectionSpec::quantile(n),
        (Some(Projection::Categorical), Some(n)) => {
            let (lo, hi) = mdp.return_hull();
            if hi > lo && n > 1 {
                ProjectionSpec::categorical_on(n, lo, hi)
            } else {
                ProjectionSpec::categorical(n, None)
            }
        }
    };
    spec.validate()?;
    Ok(Some(spec))
}

fn plan(
    mdp: &TabularMdp,
    s: Option<&Functional>,
    method: Method,
    spec: Option<&ProjectionSpec>,
) -> Result<PlanningResult> {
    if spec.is_some() && !matches!(method, Method::Greedy) {
        bail!("--projection only applies to the greedy method");
    }
    let need = || s.context("--functional is required for this method");
    Ok(match method {
        Method::Expected => plan_expected(mdp)?,
        Method::Greedy => match spec {
            Some(spec) => plan_distributional_projected(mdp, need()?, spec)?,
            None => plan_distributional(mdp, need()?)?,
        },
        Method::BruteForce => brute_force_optimal(mdp, need()?)?,
        Method::Exponential => match need()? {
            Functional::ExponentialUtility { lambda } => plan_exponential(mdp, *lambda)?,
            other => bail!("the exponential method needs an exponential functional, got {other}"),
        },
    })
}

fn evaluate(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
    spec: Option<&ProjectionSpec>,
    s: Option<&Functional>,
) -> Result<Value> {
    let exact = evaluate_policy_exact(mdp, policy)?;
    let x0 = mdp.initial_state();
    let root_values = |table: &distrl_core::dp::QDistributionTable| -> Result<Option<Vec<f64>>> {
        s.map(|s| {
            (0..mdp.num_actions())
                .map(|a| s.evaluate(table.get(0, x0, a)))
                .collect()
        })
        .transpose()
        .map_err(Into::into)
    };
    let mut value = json!({
        "policy": policy,
        "exact": exact,
    });
    if let Some(s) = s {
        value["functional"] = json!(s.to_string());
        value["exact_root_values"] = json!(root_values(&exact)?);
    }
    if let Some(spec) = spec {
        let projected = evaluate_policy_projected(mdp, policy, spec)?;
        let errors = projected.projection_errors().unwrap_or_default();
        value["projection"] = serde_json::to_value(spec)?;
        value["sup_w1_error"] = json!(exact.sup_w1_at(&projected, 0));
        value["cumulative_projection_error"] = json!(errors.iter().sum::<f64>());
        if let ProjectionSpec::Quantile { resolution, .. } = spec {
            let (lo, hi) = mdp.return_hull();
            value["w1_bound"] =
                json!(mdp.horizon() as f64 * (hi - lo) / (2.0 * *resolution as f64));
        }
        if s.is_some() {
            value["projected_root_values"] = json!(root_values(&projected)?);
        }
        value["projected"] = serde_json::to_value(&projected)?;
    }
    Ok(value)
}

fn report(report: ExperimentReport, out: Option<&Path>) -> Result<()> {
    for check in &report.checks {
        let status = if check.passed { "ok" } else { "FAIL" };
        eprintln!("{} [{status}]: {}", check.name, check.detail);
    }
    match out {
        Some(path) => report
            .write(path)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", report.to_csv()?),
    }
    Ok(())
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}
