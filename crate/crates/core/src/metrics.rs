//! Per-epoch learning metrics and their CSV exports.

use std::fmt::Write as _;

use crate::agent::EvalStats;

pub const METRICS_SCHEMA: &str = "# schema: lsm-metrics v1";
pub const SUMMARY_SCHEMA: &str = "# schema: lsm-summary v1";
pub const TRACE_SCHEMA: &str = "# schema: lsm-trace v1";

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean accumulated reward of training gameplays finished in the epoch
    /// (NaN when none finished).
    pub train_reward: f64,
    pub train_gameplays: usize,
    /// Mean accumulated reward per evaluation gameplay.
    pub eval_reward: f64,
    pub eval_reward_median: f64,
    pub eval_gameplays: usize,
    pub epsilon: f64,
    /// Mean minibatch loss over the epoch's updates.
    pub loss: f64,
}

impl EpochMetrics {
    pub fn new(
        epoch: usize,
        finished: &[f64],
        eval: Option<&EvalStats>,
        epsilon: f64,
        loss: f64,
    ) -> Self {
        let train_reward = if finished.is_empty() {
            f64::NAN
        } else {
            finished.iter().sum::<f64>() / finished.len() as f64
        };
        let (eval_reward, eval_reward_median, eval_gameplays) = match eval {
            Some(e) => (e.mean_reward(), e.median_reward(), e.gameplay_rewards.len()),
            None => (f64::NAN, f64::NAN, 0),
        };
        Self {
            epoch,
            train_reward,
            train_gameplays: finished.len(),
            eval_reward,
            eval_reward_median,
            eval_gameplays,
            epsilon,
            loss,
        }
    }
}

/// Linear-interpolated percentile (`q` in [0, 100]) of unsorted data.
pub fn percentile(data: &[f64], q: f64) -> Option<f64> {
    let mut v: Vec<f64> = data.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 100.0) / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

pub fn median(data: &[f64]) -> Option<f64> {
    percentile(data, 50.0)
}

pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut out = String::new();
    writeln!(out, "{METRICS_SCHEMA}").unwrap();
    writeln!(
        out,
        "epoch,train_reward,train_gameplays,eval_reward,eval_reward_median,eval_gameplays,epsilon,loss"
    )
    .unwrap();
    for m in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.epoch,
            m.train_reward,
            m.train_gameplays,
            m.eval_reward,
            m.eval_reward_median,
            m.eval_gameplays,
            m.epsilon,
            m.loss
        )
        .unwrap();
    }
    out
}

/// One row of cross-seed statistics of the evaluation reward.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub epoch: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub seeds: usize,
}

/// Median and quartiles of `eval_reward` across runs, per epoch.
pub fn summarize(runs: &[Vec<EpochMetrics>]) -> Vec<SummaryRow> {
    let epochs = runs.iter().map(Vec::len).max().unwrap_or(0);
    (0..epochs)
        .map(|e| {
            let vals: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.get(e))
                .map(|m| m.eval_reward)
                .collect();
            SummaryRow {
                epoch: e + 1,
                median: median(&vals).unwrap_or(f64::NAN),
                p25: percentile(&vals, 25.0).unwrap_or(f64::NAN),
                p75: percentile(&vals, 75.0).unwrap_or(f64::NAN),
                seeds: vals.len(),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{SUMMARY_SCHEMA}").unwrap();
    writeln!(out, "epoch,median,p25,p75,seeds").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.median, r.p25, r.p75, r.seeds
        )
        .unwrap();
    }
    out
}

pub fn trace_csv(rows: &[crate::agent::TraceRow], actions: usize) -> String {
    let mut out = String::new();
    writeln!(out, "{TRACE_SCHEMA}").unwrap();
    let q_cols: Vec<String> = (0..actions).map(|a| format!("q{a}")).collect();
    writeln!(
        out,
        "step,gameplay,action,reward,terminal,{},state_value",
        q_cols.join(",")
    )
    .unwrap();
    for r in rows {
        let qs: Vec<String> = r.q.iter().map(f64::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            r.gameplay,
            r.action,
            r.reward,
            u8::from(r.terminal),
            qs.join(","),
            r.state_value()
        )
        .unwrap();
    }
    out
}
