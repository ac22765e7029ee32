use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{csv_field, HarnessError, RunConfig, SummaryRow, OUTPUT_VERSION};
use crate::metrics::{aggregate, conditional_success, seen_unseen_analysis, EpisodeRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub agent: String,
    pub m: usize,
    pub budget: u32,
    pub record: EpisodeRecord,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordsHeader {
    version: String,
    kind: String,
    config_hash: String,
    tool_version: String,
}

fn stamp(kind: &str, hash: &str) -> String {
    format!(
        "# kind={kind} version={OUTPUT_VERSION} config={hash} tool={}\n",
        crate::VERSION
    )
}

pub fn summary_csv(rows: &[SummaryRow], config_hash: &str) -> String {
    let mut out = stamp("summary", config_hash);
    out.push_str("agent,m,budget,count,success,progress,spl,ppl,wrong_found_terminations,timeouts\n");
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            csv_field(&r.agent),
            r.m,
            r.budget,
            s.count,
            s.success,
            s.progress,
            s.spl,
            s.ppl,
            s.wrong_found_terminations,
            s.timeouts
        )
        .expect("string write");
    }
    out
}

pub fn records_to_string(records: &[RecordLine], config_hash: &str) -> String {
    let header = RecordsHeader {
        version: OUTPUT_VERSION.into(),
        kind: "records".into(),
        config_hash: config_hash.into(),
        tool_version: crate::VERSION.into(),
    };
    let mut out = serde_json::to_string(&header).expect("header serialises");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialises"));
        out.push('\n');
    }
    out
}

/// Returns the config hash and the records.
pub fn parse_records(text: &str) -> Result<(String, Vec<RecordLine>), HarnessError> {
    let mut lines = text.lines();
    let header: RecordsHeader = lines
        .next()
        .ok_or_else(|| HarnessError::Runtime("empty records file".into()))
        .and_then(|l| serde_json::from_str(l).map_err(|e| HarnessError::Runtime(format!("records line 1: {e}"))))?;
    if header.version != OUTPUT_VERSION || header.kind != "records" {
        return Err(HarnessError::Runtime(format!(
            "unsupported records file {} {}",
            header.kind, header.version
        )));
    }
    let records = lines
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Runtime(format!("records line {}: {e}", i + 2)))
        })
        .collect::<Result<Vec<RecordLine>, _>>()?;
    Ok((header.config_hash, records))
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

/// Markdown report: summary table, seen/unseen strata, conditional success
/// and the episode-distance histogram. Row order follows the records.
pub fn render_report(cfg: &RunConfig, config_hash: &str, records: &[RecordLine]) -> Result<String, HarnessError> {
    let mut groups: Vec<(String, usize, u32)> = Vec::new();
    for r in records {
        let key = (r.agent.clone(), r.m, r.budget);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let collect = |agent: &str, m: usize, budget: u32| -> Vec<EpisodeRecord> {
        records
            .iter()
            .filter(|r| r.agent == agent && r.m == m && r.budget == budget)
            .map(|r| r.record.clone())
            .collect()
    };

    let mut out = String::new();
    writeln!(out, "# Evaluation report\n").ok();
    writeln!(
        out,
        "Config `{config_hash}`, tool version {}, {} episode records.\n",
        crate::VERSION,
        records.len()
    )
    .ok();

    writeln!(out, "## Summary\n").ok();
    writeln!(
        out,
        "| agent | m | budget | episodes | Success | Progress | SPL | PPL |"
    )
    .ok();
    writeln!(out, "|---|---|---|---|---|---|---|---|").ok();
    for (agent, m, budget) in &groups {
        let s = aggregate(&collect(agent, *m, *budget))?;
        writeln!(
            out,
            "| {agent} | {m} | {budget} | {} | {:.3} | {:.3} | {:.3} | {:.3} |",
            s.count, s.success, s.progress, s.spl, s.ppl
        )
        .ok();
    }

    let mut agents: Vec<(String, u32)> = Vec::new();
    for (a, _, b) in &groups {
        if !agents.contains(&(a.clone(), *b)) {
            agents.push((a.clone(), *b));
        }
    }

    writeln!(out, "\n## Seen vs unseen goals\n").ok();
    writeln!(
        out,
        "Success on goal k among episodes that reached goal k-1, split by whether goal k was visible before then.\n"
    )
    .ok();
    writeln!(
        out,
        "| agent | budget | m | goal | seen n | seen success | unseen n | unseen success |"
    )
    .ok();
    writeln!(out, "|---|---|---|---|---|---|---|---|").ok();
    for (agent, budget) in &agents {
        let Some(m) = groups
            .iter()
            .filter(|(a, _, b)| a == agent && b == budget)
            .map(|g| g.1)
            .max()
        else {
            continue;
        };
        for row in seen_unseen_analysis(&collect(agent, m, *budget)) {
            writeln!(
                out,
                "| {agent} | {budget} | {m} | {} | {} | {} | {} | {} |",
                row.goal,
                row.seen.attempts,
                fmt_rate(row.seen.rate()),
                row.unseen.attempts,
                fmt_rate(row.unseen.rate())
            )
            .ok();
        }
    }

    writeln!(out, "\n## Conditional success\n").ok();
    writeln!(out, "| agent | budget | m | Success | Success(1)^m |").ok();
    writeln!(out, "|---|---|---|---|---|").ok();
    for (agent, budget) in &agents {
        let max_m = groups
            .iter()
            .filter(|(a, _, b)| a == agent && b == budget)
            .map(|g| g.1)
            .max()
            .unwrap_or(0);
        let mut by_m = Vec::new();
        for m in 1..=max_m {
            let recs = collect(agent, m, *budget);
            if recs.is_empty() {
                break;
            }
            by_m.push(aggregate(&recs)?.success);
        }
        for row in conditional_success(&by_m) {
            writeln!(
                out,
                "| {agent} | {budget} | {} | {:.3} | {:.3} |",
                row.m, row.observed, row.expected
            )
            .ok();
        }
    }

    if let Some((agent, m, budget)) = groups.iter().max_by_key(|g| g.1).cloned() {
        let recs = collect(&agent, m, budget);
        let width = 2.0;
        let span = m as f64 * cfg.episodes.sampling.d_max;
        let bins = ((span / width).ceil() as usize).max(1);
        let mut counts = vec![0usize; bins];
        for r in &recs {
            let d: f64 = r.chain.iter().sum();
            counts[((d / width).floor().max(0.0) as usize).min(bins - 1)] += 1;
        }
        writeln!(out, "\n## Episode geodesic distance ({m} goals)\n").ok();
        writeln!(out, "| distance (m) | episodes |").ok();
        writeln!(out, "|---|---|").ok();
        for (i, c) in counts.iter().enumerate() {
            writeln!(out, "| {:.0}-{:.0} | {c} |", i as f64 * width, (i + 1) as f64 * width).ok();
        }
    }
    Ok(out)
}
