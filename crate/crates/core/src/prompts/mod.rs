//! Prompt construction for every phase: the plain baseline prompts and the
//! describe, judge and spy chain-of-thought pipelines, plus parsing of the
//! structured judgment block and the vote rule applied to a judgment.

mod catalogue;
mod judgment;

use serde::{Deserialize, Serialize};

pub use catalogue::{render, CatalogueError, CatalogueStamp, PromptCatalogue};
pub use judgment::{
    decide_vote, parse_description, parse_judgment, parse_vote, render_judgment, ParseError,
};

use crate::game::{Description, Judgment, Phase, PlayerId};
use crate::referee::ViolationKind;
use crate::text;

/// Which builder produced a prompt; recorded in transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuilderTag {
    RulesBrief,
    BaselineDescribe,
    BaselineJudge,
    DescribeCot,
    JudgeCot,
    SpyCot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMeta {
    pub phase: Phase,
    pub round: u32,
    pub builder: BuilderTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
    pub meta: PromptMeta,
}

impl PromptBundle {
    /// The same request with a referee notice appended to the user text.
    pub fn with_notice(&self, notice: &str) -> PromptBundle {
        let mut b = self.clone();
        b.user.push_str("\n\n");
        b.user.push_str(notice);
        b
    }
}

/// What one seat is allowed to see: every public description, and only its
/// own earlier judgments.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleHistory {
    pub descriptions: Vec<Description>,
    pub own_prior_judgments: Vec<Judgment>,
}

const MASK: &str = "***";

impl VisibleHistory {
    pub fn new(mut descriptions: Vec<Description>, mut own_prior_judgments: Vec<Judgment>) -> Self {
        descriptions.sort_by_key(|d| (d.round, d.player));
        own_prior_judgments.sort_by_key(|j| j.round);
        VisibleHistory {
            descriptions,
            own_prior_judgments,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.descriptions.is_empty()
    }

    /// Copy with every occurrence of `keyword` replaced by a mask.
    pub fn masked(&self, keyword: &str) -> VisibleHistory {
        let descriptions = self
            .descriptions
            .iter()
            .map(|d| Description {
                text: text::mask_keyword(&d.text, keyword, MASK),
                ..d.clone()
            })
            .collect();
        let own_prior_judgments = self
            .own_prior_judgments
            .iter()
            .map(|j| Judgment {
                guesses: j.guesses.clone().map(|g| text::mask_keyword(&g, keyword, MASK)),
                ..j.clone()
            })
            .collect();
        VisibleHistory {
            descriptions,
            own_prior_judgments,
        }
    }
}

/// Inputs shared by the describe and spy pipelines.
#[derive(Debug, Clone, Copy)]
pub struct DescribeInput<'a> {
    pub seat: PlayerId,
    pub keyword: &'a str,
    pub category: &'a str,
    pub round: u32,
    pub history: &'a VisibleHistory,
    pub limit: u32,
}

/// Judge pipeline input. Deliberately has no keyword field.
#[derive(Debug, Clone, Copy)]
pub struct JudgeInput<'a> {
    pub seat: PlayerId,
    pub category: &'a str,
    pub round: u32,
    pub history: &'a VisibleHistory,
}

impl PromptCatalogue {
    pub fn system(&self) -> &str {
        self.section("system.txt", "system")
    }

    fn bundle(&self, user: String, phase: Phase, round: u32, builder: BuilderTag) -> PromptBundle {
        PromptBundle {
            system: self.system().to_string(),
            user,
            meta: PromptMeta { phase, round, builder },
        }
    }

    pub fn rules_brief(&self) -> PromptBundle {
        let user = format!(
            "{}\n\n{}",
            self.section("rules.txt", "rules"),
            self.section("rules.txt", "acknowledge")
        );
        self.bundle(user, Phase::RulesBrief, 0, BuilderTag::RulesBrief)
    }

    pub fn baseline_describe(&self, seat: PlayerId, keyword: &str, round: u32) -> PromptBundle {
        let order = seat.to_string();
        let user = self.fill("baseline_describe.txt", "user", &[("order", &order), ("keyword", keyword)]);
        self.bundle(user, Phase::Describe, round, BuilderTag::BaselineDescribe)
    }

    /// Rules, the full description history, then the plain vote instruction.
    pub fn baseline_judge(&self, history: &VisibleHistory, round: u32) -> PromptBundle {
        let rendered = self.render_descriptions(history);
        let user = format!(
            "{}\n\n{}\n\n{}",
            self.section("rules.txt", "rules"),
            self.fill("baseline_judge.txt", "history", &[("history", &rendered)]),
            self.section("baseline_judge.txt", "vote"),
        );
        self.bundle(user, Phase::Vote, round, BuilderTag::BaselineJudge)
    }

    fn describe_intro(&self, input: &DescribeInput<'_>) -> String {
        let order = input.seat.to_string();
        let round = input.round.to_string();
        let limit = input.limit.to_string();
        self.fill(
            "describe_cot.txt",
            "intro",
            &[
                ("order", &order),
                ("keyword", input.keyword),
                ("category", input.category),
                ("round", &round),
                ("limit", &limit),
            ],
        )
    }

    /// Round 1 asks for basic information and the most prominent in-category
    /// features; later rounds ask for attributes nobody has mentioned yet.
    pub fn describe_cot(&self, input: &DescribeInput<'_>) -> PromptBundle {
        let limit = input.limit.to_string();
        let body = if input.round <= 1 {
            self.fill(
                "describe_cot.txt",
                "first_round",
                &[("category", input.category), ("limit", &limit)],
            )
        } else {
            let history = self.render_descriptions(input.history);
            self.fill(
                "describe_cot.txt",
                "later_round",
                &[("history", &history), ("category", input.category), ("limit", &limit)],
            )
        };
        let user = format!("{}\n\n{}", self.describe_intro(input), body);
        self.bundle(user, Phase::Describe, input.round, BuilderTag::DescribeCot)
    }

    /// Callers pass a history already masked for the requesting seat's keyword.
    pub fn judge_cot(&self, input: &JudgeInput<'_>) -> PromptBundle {
        let order = input.seat.to_string();
        let round = input.round.to_string();
        let history = self.render_descriptions(input.history);
        let mut parts = vec![
            self.fill("judge_cot.txt", "intro", &[("order", &order), ("category", input.category)]),
            self.fill("judge_cot.txt", "history", &[("history", &history), ("round", &round)]),
        ];
        if input.round >= 2 && !input.history.own_prior_judgments.is_empty() {
            let prior = self.render_judgments(&input.history.own_prior_judgments);
            parts.push(self.fill("judge_cot.txt", "prior", &[("prior", &prior)]));
        }
        parts.push(self.fill("judge_cot.txt", "instruction", &[("order", &order)]));
        self.bundle(parts.join("\n\n"), Phase::Judge, input.round, BuilderTag::JudgeCot)
    }

    /// Disguise pipeline for a seat whose last judgment named itself.
    pub fn spy_cot(&self, input: &DescribeInput<'_>) -> PromptBundle {
        let limit = input.limit.to_string();
        let history = self.render_descriptions(input.history);
        let body = self.fill("spy_cot.txt", "instruction", &[("history", &history), ("limit", &limit)]);
        let user = format!("{}\n\n{}", self.describe_intro(input), body);
        self.bundle(user, Phase::Describe, input.round, BuilderTag::SpyCot)
    }

    pub fn retry_notice(&self, kind: ViolationKind, limit: u32) -> String {
        let name = kind.name();
        let limit = limit.to_string();
        let reason = self.fill("retry_notice.txt", name, &[("limit", &limit)]);
        self.fill("retry_notice.txt", "notice", &[("kind", name), ("reason", &reason)])
    }

    pub fn render_descriptions(&self, history: &VisibleHistory) -> String {
        if history.descriptions.is_empty() {
            return self.section("history.txt", "empty").to_string();
        }
        let mut lines = Vec::new();
        let mut current_round = None;
        for d in &history.descriptions {
            if current_round != Some(d.round) {
                current_round = Some(d.round);
                lines.push(self.fill("history.txt", "round", &[("round", &d.round.to_string())]));
            }
            lines.push(self.fill(
                "history.txt",
                "description",
                &[("order", &d.player.to_string()), ("text", &d.text)],
            ));
        }
        lines.join("\n")
    }

    fn render_judgments(&self, judgments: &[Judgment]) -> String {
        let sep = match self.language() {
            text::Language::En => ", ",
            text::Language::Zh => "，",
        };
        judgments
            .iter()
            .map(|j| {
                let guesses = PlayerId::ALL
                    .iter()
                    .map(|p| {
                        self.fill(
                            "history.txt",
                            "guess",
                            &[("order", &p.to_string()), ("word", j.guess(*p))],
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(sep);
                self.fill(
                    "history.txt",
                    "judgment",
                    &[
                        ("round", &j.round.to_string()),
                        ("guesses", &guesses),
                        ("spy", &j.spy_pick.to_string()),
                    ],
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
