//! Playing a seat from the terminal, and printing finished games.

use std::fmt::Write;

use tokio::io::{AsyncBufReadExt, BufReader};

use whospy_core::agents::{HumanAction, HumanMailbox, Verdict};
use whospy_core::game::{Phase, PlayerId, RoleAssignment, NUM_PLAYERS};
use whospy_core::referee::{GameEvent, GameObserver, GameRecord};
use whospy_core::text;

/// Prints what the human seat is allowed to see as the game unfolds.
pub struct Narrator {
    seat: PlayerId,
    hidden: Vec<String>,
}

impl Narrator {
    pub fn new(seat: PlayerId, assignment: &RoleAssignment) -> Self {
        let own = assignment.word(seat);
        let hidden = assignment.words().iter().filter(|w| *w != own).cloned().collect();
        Narrator { seat, hidden }
    }

    fn mask(&self, s: &str) -> String {
        self.hidden.iter().fold(s.to_string(), |t, w| text::mask_keyword(&t, w, "***"))
    }
}

impl GameObserver for Narrator {
    fn on_event(&self, event: &GameEvent) {
        match event {
            GameEvent::Started {
                assignment,
                category,
                num_rounds,
            } => {
                println!(
                    "You are player {}. Your keyword is \"{}\" (category: {category}). {num_rounds} round(s) before the vote.",
                    self.seat,
                    assignment.word(self.seat)
                );
            }
            GameEvent::Rejected { seat, kind, .. } if *seat == self.seat => {
                println!("  rejected: {kind}");
            }
            GameEvent::DescriptionAccepted(d) => {
                println!("[round {}] player {}: {}", d.round, d.player, self.mask(&d.text));
            }
            GameEvent::JudgmentAccepted(j) if j.judge == self.seat => {
                println!("[round {}] your judgment recorded (spy: player {})", j.round, j.spy_pick);
            }
            GameEvent::VoteAccepted { voter, target } => println!("player {voter} voted for player {target}"),
            _ => {}
        }
    }
}

fn prompt_for(phase: Phase) -> &'static str {
    match phase {
        Phase::Describe => "Describe your keyword without saying it:",
        Phase::Judge => "Guess every player's keyword and name the spy, as `w1, w2, w3, w4; spy`:",
        Phase::Vote => "Vote for the player you think is the spy (1-4, not yourself):",
        Phase::RulesBrief => "",
    }
}

/// Reads one action for `phase`. `None` means the line could not be understood.
pub fn parse_action(phase: Phase, line: &str) -> Option<HumanAction> {
    let line = line.trim();
    match phase {
        Phase::Describe => Some(HumanAction::Describe { text: line.to_string() }),
        Phase::Judge => {
            let (words, spy) = line.rsplit_once(';')?;
            let guesses: Vec<String> = words.split(',').map(|w| w.trim().to_string()).collect();
            let guesses: [String; NUM_PLAYERS] = guesses.try_into().ok()?;
            Some(HumanAction::Judge {
                guesses,
                spy: spy.trim().parse().ok()?,
            })
        }
        Phase::Vote => Some(HumanAction::Vote {
            target: line.parse().ok()?,
        }),
        Phase::RulesBrief => None,
    }
}

/// Answers the referee's requests from stdin until the game closes the seat.
pub async fn play(mut mailbox: HumanMailbox) {
    let mut lines = BufReader::new(tokio::io::stdin()).lines();
    while let Ok(phase) = mailbox.wait_turn().await {
        println!("{}", prompt_for(phase));
        let line = match lines.next_line().await {
            Ok(Some(l)) => l,
            _ => return,
        };
        let Some(action) = parse_action(phase, &line) else {
            println!("  could not read that, try again");
            continue;
        };
        match mailbox.submit(action).await {
            Ok(Verdict::Accepted) => {}
            // The narrator reports rejections as they are logged.
            Ok(Verdict::Rejected(_)) => {}
            Ok(Verdict::OutOfTurn) => println!("  not your turn"),
            Err(_) => return,
        }
    }
}

/// Plain-text account of a finished or aborted game, keywords included.
pub fn summary(record: &GameRecord) -> String {
    let mut s = String::new();
    let spy = record.assignment.spy();
    let _ = writeln!(
        s,
        "\ngroup {} ({}): civilians \"{}\", spy \"{}\" at player {spy}",
        record.group.id(),
        record.group.category(),
        record.group.civilian_word(),
        record.group.spy_word()
    );
    for p in PlayerId::ALL {
        let _ = writeln!(s, "  player {p}: {} [{}]", record.assignment.word(p), record.agents[p.slot()]);
    }
    for d in &record.descriptions {
        let _ = writeln!(s, "round {} player {}: {}", d.round, d.player, d.text);
    }
    if let Some(votes) = &record.votes {
        let line: Vec<String> = PlayerId::ALL.iter().map(|p| format!("{p}->{}", votes.target(*p))).collect();
        let _ = writeln!(s, "votes: {}", line.join(" "));
    }
    for v in &record.violations {
        let _ = writeln!(s, "violation: player {} {} in round {}", v.player, v.kind, v.round);
    }
    match (&record.outcome, &record.abort) {
        (Some(o), _) => {
            let _ = writeln!(s, "outcome: {:?} (top: {:?})", o.kind, o.top_voted.iter().map(|p| p.index()).collect::<Vec<_>>());
        }
        (None, Some(a)) => {
            let _ = writeln!(s, "aborted: player {} ran out of attempts in {:?}", a.seat, a.phase);
        }
        (None, None) => {}
    }
    s
}
