//! Reproducible experiments with self-auditing reports.
//!
//! Every report carries its raw rows and a summary; [`ExperimentReport::audit`]
//! recomputes the pass/fail checks from those alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dist::{wasserstein1, DiscreteDistribution, ProjectionSpec};
use crate::dp::{
    brute_force_optimal, evaluate_policy_exact, evaluate_policy_projected,
    find_property_violation_seeded, plan_distributional,
};
use crate::error::{invalid, Error, Result};
use crate::functionals::Functional;
use crate::mdp::{build_chain, build_tightness_chain, tightness_deltas, DeterministicPolicy};

/// Slack on inequalities that hold exactly in real arithmetic.
pub const FLOAT_SLACK: f64 = 1e-9;

/// Prefix horizons used for the CVaR log-log slope.
pub const SLOPE_WINDOW: (f64, f64) = (10.0, 70.0);

/// Accepted range of that slope.
pub const SLOPE_RANGE: (f64, f64) = (1.7, 2.3);

/// Plotting multiplier applied to the W1 bound in the `w1_bound_scaled` column.
pub const BOUND_DISPLAY_SCALE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    fn new(experiment: &str, params: BTreeMap<String, Value>, columns: Vec<String>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            params,
            columns,
            rows: Vec::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    fn finish(mut self) -> Result<Self> {
        self.checks = self.audit()?;
        Ok(self)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    fn need_column(&self, name: &str) -> Result<Vec<f64>> {
        self.column(name)
            .ok_or_else(|| invalid(format!("report has no column {name:?}")))
    }

    fn need_summary(&self, name: &str) -> Result<f64> {
        self.summary
            .get(name)
            .copied()
            .ok_or_else(|| invalid(format!("report has no summary value {name:?}")))
    }

    /// Recomputes the checks from rows, summary and params.
    pub fn audit(&self) -> Result<Vec<Check>> {
        match self.experiment.as_str() {
            "eval-error" => self.audit_eval_error(),
            "tightness" => self.audit_tightness(),
            "counterexample" => self.audit_counterexample(),
            other => Err(invalid(format!("unknown experiment {other:?}"))),
        }
    }

    fn audit_eval_error(&self) -> Result<Vec<Check>> {
        let horizon = self.need_column("horizon")?;
        let measured = self.need_column("w1_error")?;
        let cumulative = self.need_column("cumulative_projection_error")?;
        let bound = self.need_column("w1_bound")?;
        let mut checks = vec![
            all_rows(
                "w1_error <= cumulative_projection_error",
                &horizon,
                measured
                    .iter()
                    .zip(&cumulative)
                    .map(|(m, c)| *m <= c + FLOAT_SLACK),
            ),
            all_rows(
                "cumulative_projection_error <= w1_bound",
                &horizon,
                cumulative
                    .iter()
                    .zip(&bound)
                    .map(|(c, b)| *c <= b + FLOAT_SLACK),
            ),
        ];
        if let (Some(m), Some(c)) = (measured.last(), cumulative.last()) {
            checks.push(Check {
                name: "w1_error >= cumulative_projection_error / 2 at the full horizon".into(),
                passed: *m >= c / 2.0,
                detail: format!("measured {m:.6}, cumulative {c:.6}, ratio {:.4}", c / m),
            });
        }
        for alpha in self.alphas()? {
            let err = self.need_column(&format!("cvar_error_{alpha}"))?;
            let bnd = self.need_column(&format!("cvar_bound_{alpha}"))?;
            checks.push(all_rows(
                &format!("cvar_error_{alpha} <= cvar_bound_{alpha}"),
                &horizon,
                err.iter().zip(&bnd).map(|(e, b)| *e <= b + FLOAT_SLACK),
            ));
            let (lo, hi) = SLOPE_WINDOW;
            let points: Vec<(f64, f64)> = horizon
                .iter()
                .zip(&err)
                .filter(|(h, e)| **h >= lo && **h <= hi && **e > 0.0)
                .map(|(h, e)| (h.ln(), e.ln()))
                .collect();
            checks.push(match log_log_slope(&points) {
                Some(slope) => Check {
                    name: format!(
                        "log-log slope of cvar_error_{alpha} in [{}, {}]",
                        SLOPE_RANGE.0, SLOPE_RANGE.1
                    ),
                    passed: slope >= SLOPE_RANGE.0 && slope <= SLOPE_RANGE.1,
                    detail: format!(
                        "slope {slope:.4} over {} horizons in [{lo}, {hi}]",
                        points.len()
                    ),
                },
                None => Check {
                    name: format!("log-log slope of cvar_error_{alpha}"),
                    passed: false,
                    detail: "fewer than two positive errors in the slope window".into(),
                },
            });
        }
        Ok(checks)
    }

    fn alphas(&self) -> Result<Vec<String>> {
        Ok(self
            .columns
            .iter()
            .filter_map(|c| c.strip_prefix("cvar_error_").map(String::from))
            .collect())
    }

    fn audit_tightness(&self) -> Result<Vec<Check>> {
        let step = self.need_column("step")?;
        let measured = self.need_column("projection_error")?;
        let predicted = self.need_column("predicted_error")?;
        let total = self.need_summary("total_w1_error")?;
        let summed: f64 = predicted.iter().sum();
        Ok(vec![
            all_rows(
                "projection_error = predicted_error within 1e-9 relative",
                &step,
                measured
                    .iter()
                    .zip(&predicted)
                    .map(|(m, p)| (m - p).abs() <= 1e-9 * p.abs()),
            ),
            Check {
                name: "total W1 error < summed per-step bound".into(),
                passed: total < summed,
                detail: format!("total {total:.9}, summed bound {summed:.9}"),
            },
        ])
    }

    fn audit_counterexample(&self) -> Result<Vec<Check>> {
        let found = self.need_summary("violation_found")? > 0.0;
        if !found {
            return Ok(vec![Check {
                name: "property violation".into(),
                passed: true,
                detail: "no violation found within budget".into(),
            }]);
        }
        let greedy = self.need_column("greedy_value")?;
        let brute = self.need_column("brute_force_value")?;
        let gap = brute[0] - greedy[0];
        Ok(vec![Check {
            name: "brute_force_value - greedy_value > 1e-6".into(),
            passed: gap > 1e-6,
            detail: format!("gap {gap:.9}"),
        }])
    }

    /// Rows as CSV with a header line.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("ASCII output"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// Writes `<path>` as CSV and a sibling `.json` with the full report.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::File::create(path)?.write_all(self.to_csv()?.as_bytes())?;
        std::fs::write(path.with_extension("json"), self.to_json())?;
        Ok(())
    }
}

fn all_rows(name: &str, index: &[f64], ok: impl Iterator<Item = bool>) -> Check {
    let failing: Vec<f64> = index
        .iter()
        .zip(ok)
        .filter(|(_, ok)| !ok)
        .map(|(i, _)| *i)
        .collect();
    Check {
        name: name.into(),
        passed: failing.is_empty(),
        detail: if failing.is_empty() {
            format!("all {} rows", index.len())
        } else {
            format!(
                "{} of {} rows fail, first at {}",
                failing.len(),
                index.len(),
                failing[0]
            )
        },
    }
}

/// Least-squares slope of `y` on `x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn float_label(v: f64) -> String {
    format!("{v}")
}

/// Quantile-projected versus exact evaluation on the Bernoulli(½) chain.
///
/// Row `k` reports prefix horizon `k`, i.e. the entries `k` steps before the
/// end of a single horizon-`H` run.
pub fn eval_error(horizon: usize, resolution: usize, alphas: &[f64]) -> Result<ExperimentReport> {
    if horizon < 1 || resolution < 1 {
        return Err(invalid("eval-error needs H >= 1 and N >= 1"));
    }
    let cvars = alphas
        .iter()
        .map(|&a| Functional::cvar(a))
        .collect::<Result<Vec<_>>>()?;
    let reward = DiscreteDistribution::bernoulli(0.5)?;
    let delta_r = reward.support_length();
    let mdp = build_chain(horizon, &reward)?;
    let policy = DeterministicPolicy::constant(&mdp, 0)?;
    let exact = evaluate_policy_exact(&mdp, &policy)?;
    let projected =
        evaluate_policy_projected(&mdp, &policy, &ProjectionSpec::quantile(resolution))?;
    let errors = projected.projection_errors().expect("recorded").to_vec();

    let mut columns: Vec<String> = [
        "horizon",
        "w1_error",
        "cumulative_projection_error",
        "w1_bound",
        "w1_bound_scaled",
    ]
    .map(String::from)
    .to_vec();
    for &a in alphas {
        columns.push(format!("cvar_error_{}", float_label(a)));
        columns.push(format!("cvar_bound_{}", float_label(a)));
    }
    let params = BTreeMap::from([
        ("horizon".into(), json!(horizon)),
        ("resolution".into(), json!(resolution)),
        ("alphas".into(), json!(alphas)),
        ("reward".into(), json!(reward)),
        ("bound_display_scale".into(), json!(BOUND_DISPLAY_SCALE)),
    ]);
    let mut report = ExperimentReport::new("eval-error", params, columns);
    let n = resolution as f64;
    for k in 1..=horizon {
        let h = horizon - k;
        let kf = k as f64;
        let bound = kf * kf * delta_r / (2.0 * n);
        let cumulative: f64 = errors[h..].iter().sum();
        let mut row = vec![
            kf,
            projected.sup_w1_at(&exact, h),
            cumulative,
            bound,
            bound * BOUND_DISPLAY_SCALE,
        ];
        for s in &cvars {
            let mut worst: f64 = 0.0;
            for x in 0..mdp.num_states() {
                let e = s.evaluate(exact.get(h, x, 0))?;
                let p = s.evaluate(projected.get(h, x, 0))?;
                worst = worst.max((e - p).abs());
            }
            row.push(worst);
            row.push(s.lipschitz_constant(kf * delta_r)? * bound);
        }
        report.rows.push(row);
    }
    report.finish()
}

/// Left-grid quantile projection on the tightness chain.
pub fn tightness(resolution: usize, delta0: f64, horizon: usize) -> Result<ExperimentReport> {
    tightness_capped(resolution, delta0, horizon, usize::MAX)
}

/// As [`tightness`], with a cap on the atoms of the exact return distribution.
pub fn tightness_capped(
    resolution: usize,
    delta0: f64,
    horizon: usize,
    cap: usize,
) -> Result<ExperimentReport> {
    let mdp = build_tightness_chain(resolution, delta0, horizon)?;
    let policy = DeterministicPolicy::constant(&mdp, 0)?;
    let spec = ProjectionSpec::quantile_left_grid(resolution);
    let projected = evaluate_policy_projected(&mdp, &policy, &spec)?;
    let errors = projected.projection_errors().expect("recorded");
    let deltas = tightness_deltas(resolution, delta0, horizon);
    let n = resolution as f64;

    let columns = ["step", "h", "delta", "projection_error", "predicted_error"]
        .map(String::from)
        .to_vec();
    let params = BTreeMap::from([
        ("resolution".into(), json!(resolution)),
        ("delta0".into(), json!(delta0)),
        ("horizon".into(), json!(horizon)),
    ]);
    let mut report = ExperimentReport::new("tightness", params, columns);
    for (k, &delta) in deltas.iter().enumerate() {
        let h = horizon - 1 - k;
        report.rows.push(vec![
            k as f64,
            h as f64,
            delta,
            errors[h],
            delta / (2.0 * n),
        ]);
    }

    // exact root return, built step by step so only one distribution is alive
    let mut exact = DiscreteDistribution::dirac(0.0);
    for h in (0..horizon).rev() {
        exact = mdp.reward(h, 0, 0).convolve_capped(&exact, cap)?;
    }
    let total = wasserstein1(projected.get(0, 0, 0), &exact);
    report.summary.insert("total_w1_error".into(), total);
    report
        .summary
        .insert("exact_atoms".into(), exact.len() as f64);
    report.summary.insert(
        "summed_bound".into(),
        deltas.iter().map(|d| d / (2.0 * n)).sum(),
    );
    report.finish()
}

/// Property-violation search followed by greedy versus brute-force planning
/// on the matching counter-example MDP.
pub fn counterexample(s: &Functional, budget: usize, seed: u64) -> Result<ExperimentReport> {
    if budget < 1 {
        return Err(invalid("search budget must be positive"));
    }
    let mut params = BTreeMap::from([
        ("functional".into(), json!(s.to_string())),
        ("budget".into(), json!(budget)),
        ("seed".into(), json!(seed)),
    ]);
    let witness = find_property_violation_seeded(s, budget, seed)?;
    let columns = ["greedy_value", "brute_force_value", "gap"]
        .map(String::from)
        .to_vec();
    let Some(witness) = witness else {
        let mut report = ExperimentReport::new("counterexample", params, columns);
        report.summary.insert("violation_found".into(), 0.0);
        return report.finish();
    };
    params.insert("witness".into(), serde_json::to_value(&witness)?);
    let mdp = witness.build_mdp()?;
    let greedy = plan_distributional(&mdp, s)?;
    let brute = brute_force_optimal(&mdp, s)?;
    params.insert(
        "greedy_policy".into(),
        serde_json::to_value(&greedy.policy)?,
    );
    params.insert(
        "brute_force_policy".into(),
        serde_json::to_value(&brute.policy)?,
    );
    let mut report = ExperimentReport::new("counterexample", params, columns);
    report.summary.insert("violation_found".into(), 1.0);
    report.rows.push(vec![
        greedy.root_value,
        brute.root_value,
        brute.root_value - greedy.root_value,
    ]);
    report.finish()
}
