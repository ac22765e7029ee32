//! Success, Progress, SPL and PPL, their aggregation, and the seen/unseen
//! and conditional-success analyses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("total geodesic distance must be positive, got {0}")]
    Domain(f64),
    #[error("no records to aggregate")]
    EmptySet,
    #[error("inconsistent record: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    WrongFound,
    Timeout,
    PolicyError(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalEvents {
    pub found_step: Option<usize>,
    /// The goal became visible before its predecessor was found.
    pub seen: bool,
    /// Wrong FOUND calls made while this goal was current.
    pub wrong_before: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_index: usize,
    pub world_id: String,
    pub m: usize,
    pub success: bool,
    pub goals_found: usize,
    pub path_length: f64,
    pub chain: Vec<f64>,
    pub goals: Vec<GoalEvents>,
    pub termination: Termination,
    pub steps: usize,
}

impl EpisodeRecord {
    /// Structural checks: `s = 1` iff every goal was found with a success
    /// termination; lengths match `m`.
    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: &str| Err(MetricsError::Inconsistent(m.to_string()));
        if self.chain.len() != self.m || self.goals.len() != self.m {
            return bad("chain/goal lengths differ from m");
        }
        if self.goals_found > self.m {
            return bad("more goals found than exist");
        }
        let complete = self.goals_found == self.m;
        if self.success != (complete && self.termination == Termination::Success) {
            return bad("success flag disagrees with goals found and termination");
        }
        if complete && self.termination != Termination::Success {
            return bad("all goals found but termination is not success");
        }
        if !(self.path_length >= 0.0) {
            return bad("negative path length");
        }
        Ok(())
    }
}

pub fn success(record: &EpisodeRecord) -> f64 {
    debug_assert!(
        !(record.goals_found == record.m && record.termination == Termination::WrongFound),
        "wrong-found termination with all goals found"
    );
    if record.goals_found == record.m && record.termination == Termination::Success {
        1.0
    } else {
        0.0
    }
}

pub fn progress(record: &EpisodeRecord) -> f64 {
    record.goals_found as f64 / record.m as f64
}

/// `s * d / max(p, d)` with `d` the summed chain.
pub fn spl(s: f64, p: f64, chain: &[f64]) -> Result<f64, MetricsError> {
    let d: f64 = chain.iter().sum();
    if !(d > 0.0) {
        return Err(MetricsError::Domain(d));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    // Ratio first: it never exceeds 1, so the result never exceeds `s`.
    Ok(s * (d / p.max(d)))
}

/// `progress * d_l / max(p, d_l)` with `d_l` the chain summed over the first
/// `l` legs; 0 when `l = 0`.
pub fn ppl(progress: f64, p: f64, chain: &[f64], l: usize) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let d: f64 = chain[..l.min(chain.len())].iter().sum();
    if !(d > 0.0) {
        return 0.0;
    }
    progress * (d / p.max(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub success: f64,
    pub progress: f64,
    pub spl: f64,
    pub ppl: f64,
}

pub fn episode_metrics(record: &EpisodeRecord) -> Result<EpisodeMetrics, MetricsError> {
    let s = success(record);
    let pr = progress(record);
    Ok(EpisodeMetrics {
        success: s,
        progress: pr,
        spl: spl(s, record.path_length, &record.chain)?,
        ppl: ppl(pr, record.path_length, &record.chain, record.goals_found),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub success: f64,
    pub progress: f64,
    pub spl: f64,
    pub ppl: f64,
    pub count: usize,
    pub wrong_found_terminations: usize,
    pub timeouts: usize,
}

pub fn aggregate(records: &[EpisodeRecord]) -> Result<MetricsSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut sum = EpisodeMetrics {
        success: 0.0,
        progress: 0.0,
        spl: 0.0,
        ppl: 0.0,
    };
    for r in records {
        let e = episode_metrics(r)?;
        sum.success += e.success;
        sum.progress += e.progress;
        sum.spl += e.spl;
        sum.ppl += e.ppl;
    }
    let n = records.len() as f64;
    Ok(MetricsSummary {
        success: sum.success / n,
        progress: sum.progress / n,
        spl: sum.spl / n,
        ppl: sum.ppl / n,
        count: records.len(),
        wrong_found_terminations: records
            .iter()
            .filter(|r| r.termination == Termination::WrongFound)
            .count(),
        timeouts: records.iter().filter(|r| r.termination == Termination::Timeout).count(),
    })
}

/// Success on one goal given the previous goal was reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub attempts: usize,
    pub successes: usize,
}

impl Stratum {
    /// `None` for an empty stratum.
    pub fn rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeenUnseenRow {
    /// 1-based goal number.
    pub goal: usize,
    pub seen: Stratum,
    pub unseen: Stratum,
}

/// For each goal `k >= 2`, success at goal `k` among episodes that reached
/// goal `k - 1`, split by whether goal `k` was seen before then.
pub fn seen_unseen_analysis(records: &[EpisodeRecord]) -> Vec<SeenUnseenRow> {
    let max_m = records.iter().map(|r| r.m).max().unwrap_or(0);
    (2..=max_m)
        .map(|k| {
            let mut row = SeenUnseenRow {
                goal: k,
                seen: Stratum {
                    attempts: 0,
                    successes: 0,
                },
                unseen: Stratum {
                    attempts: 0,
                    successes: 0,
                },
            };
            for r in records.iter().filter(|r| r.m >= k && r.goals_found >= k - 1) {
                let stratum = if r.goals[k - 1].seen {
                    &mut row.seen
                } else {
                    &mut row.unseen
                };
                stratum.attempts += 1;
                if r.goals_found >= k {
                    stratum.successes += 1;
                }
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    pub m: usize,
    pub observed: f64,
    /// `Success(1)^m`.
    pub expected: f64,
    pub observed_below_expected: bool,
}

/// Compares `Success(m)` with the independent-goal expectation `Success(1)^m`.
/// `success_by_m[i]` holds Success for `m = i + 1`.
pub fn conditional_success(success_by_m: &[f64]) -> Vec<ConditionalRow> {
    let Some(&base) = success_by_m.first() else {
        return Vec::new();
    };
    success_by_m
        .iter()
        .enumerate()
        .map(|(i, &observed)| {
            let expected = base.powi(i as i32 + 1);
            ConditionalRow {
                m: i + 1,
                observed,
                expected,
                observed_below_expected: observed <= expected,
            }
        })
        .collect()
}
