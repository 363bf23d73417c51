use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{run_batch_labeled, AgentPool, BatchOptions, HarnessError};
use crate::dataset::Dataset;
use crate::game::{Ablation, GameConfig, MetricsReport};
use crate::referee::Referee;

/// One column of the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Nc,
    Jc,
    JcDc,
    JcDcSc,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Nc, Arm::Jc, Arm::JcDc, Arm::JcDcSc];

    pub fn label(self) -> &'static str {
        match self {
            Arm::Nc => "NC(Baseline)",
            Arm::Jc => "JC",
            Arm::JcDc => "JC & DC",
            Arm::JcDcSc => "JC & DC & SC",
        }
    }

    /// Directory-safe name.
    pub fn slug(self) -> &'static str {
        match self {
            Arm::Nc => "nc",
            Arm::Jc => "jc",
            Arm::JcDc => "jc-dc",
            Arm::JcDcSc => "jc-dc-sc",
        }
    }

    pub fn ablation(self) -> Ablation {
        let (judge_cot, describe_cot, spy_cot) = match self {
            Arm::Nc => (false, false, false),
            Arm::Jc => (true, false, false),
            Arm::JcDc => (true, true, false),
            Arm::JcDcSc => (true, true, true),
        };
        Ablation {
            judge_cot,
            describe_cot,
            spy_cot,
        }
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "nc" | "ncbaseline" | "baseline" => Ok(Arm::Nc),
            "jc" => Ok(Arm::Jc),
            "jcdc" => Ok(Arm::JcDc),
            "jcdcsc" => Ok(Arm::JcDcSc),
            _ => Err(format!("unknown arm `{s}` (expected nc, jc, jc-dc or jc-dc-sc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<(Arm, MetricsReport)>,
}

impl AblationReport {
    fn labeled(&self) -> Vec<(String, MetricsReport)> {
        self.rows.iter().map(|(arm, r)| (arm.label().to_string(), r.clone())).collect()
    }

    /// Markdown table with one column per arm.
    pub fn render(&self) -> String {
        render_table(&self.labeled())
    }
}

/// Markdown metrics table with one column per labeled report.
pub fn render_table(rows: &[(String, MetricsReport)]) -> String {
    let mut out = header("Arm", rows);
    let line = |name: &str, cell: &dyn Fn(&MetricsReport) -> String| {
        let mut s = format!("| {name} |");
        for (_, r) in rows {
            let _ = write!(s, " {} |", cell(r));
        }
        s.push('\n');
        s
    };
    out.push_str(&line("Game Count", &|r| r.games.to_string()));
    out.push_str(&line("Spy Out", &|r| r.spy_out.to_string()));
    out.push_str(&line("Civilian Out", &|r| r.civilian_out.to_string()));
    out.push_str(&line("Draw", &|r| r.draw.to_string()));
    out.push_str(&line("CWR", &|r| r.cwr.to_string()));
    out.push_str(&line("CMR", &|r| r.cmr.to_string()));
    if rows.iter().any(|(_, r)| r.aborted > 0) {
        out.push_str(&line("Aborted", &|r| r.aborted.to_string()));
    }
    out
}

fn header(corner: &str, rows: &[(String, MetricsReport)]) -> String {
    let mut out = format!("| {corner} |");
    for (label, _) in rows {
        let _ = write!(out, " {label} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(rows.len()));
    out.push('\n');
    out
}

/// Markdown table of wrong-civilian-vote counts per game, one column per arm.
pub fn render_tickets(report: &AblationReport) -> String {
    render_ticket_table(&report.labeled())
}

pub fn render_ticket_table(rows: &[(String, MetricsReport)]) -> String {
    let mut out = header("Wrong civilian votes", rows);
    for k in 0..4 {
        let _ = write!(out, "| {k} |");
        for (_, r) in rows {
            let _ = write!(out, " {} |", r.ticket_histogram[k]);
        }
        out.push('\n');
    }
    out
}

/// Runs the same seeded batch under each arm. Game `j` of every arm uses the
/// same word group and seat assignment. Archives go to `out_dir/<arm slug>`.
pub async fn run_ablation(
    referee: &Referee,
    base: &GameConfig,
    arms: &[Arm],
    pool: &AgentPool,
    dataset: &Dataset,
    options: &BatchOptions,
) -> Result<AblationReport, HarnessError> {
    if arms.is_empty() {
        return Err(HarnessError::InvalidConfig(crate::game::RuleError::InvalidConfig(
            "no ablation arms selected".into(),
        )));
    }
    let mut rows = Vec::with_capacity(arms.len());
    for &arm in arms {
        let config = GameConfig {
            ablation: arm.ablation(),
            ..base.clone()
        };
        let opts = BatchOptions {
            out_dir: options.out_dir.as_ref().map(|d| d.join(arm.slug())),
            ..options.clone()
        };
        tracing::info!(arm = arm.label(), "running arm");
        let out = run_batch_labeled(referee, &config, pool, dataset, &opts, Some(arm.label())).await?;
        rows.push((arm, out.report));
    }
    Ok(AblationReport { rows })
}
