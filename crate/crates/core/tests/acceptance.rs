//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng;

use whospy_core::agents::{Agent, AgentError, AgentRequest, AgentResponse, ScriptedAgent, Seats};
use whospy_core::dataset::{builtin_en, builtin_zh};
use whospy_core::game::{
    assign_roles, compute_cmr, compute_cwr, determine_outcome, tally_votes, Ablation, GameConfig, GameOutcome,
    Judgment, OutcomeKind, Phase, PlayerId, RoleAssignment, Tallies, VoteMatrix, WordGroup,
};
use whospy_core::harness::{
    archive_digest, read_records, report_from_records, run_ablation, run_batch, AgentPool, AgentSpec, Arm,
    BatchOptions,
};
use whospy_core::llm::mock::{MockChatServer, MockReply, MockScript};
use whospy_core::llm::LlmConfig;
use whospy_core::prompts::{parse_judgment, render_judgment, ParseError, PromptCatalogue, VisibleHistory};
use whospy_core::referee::{Referee, RefereeError, ViolationKind};
use whospy_core::seed;
use whospy_core::text::{self, Language};

type Outcome = Result<String, String>;

fn p(i: u8) -> PlayerId {
    PlayerId::new(i).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- outcome oracle

/// Independent brute force: count ballots by hand, find the maximum, decide.
fn oracle_outcome(targets: [u8; 4], spy: u8) -> OutcomeKind {
    let mut counts = [0u32; 5];
    for t in targets {
        counts[t as usize] += 1;
    }
    let max = *counts[1..].iter().max().unwrap();
    let leaders: Vec<u8> = (1..=4u8).filter(|&s| counts[s as usize] == max).collect();
    if leaders.len() > 1 {
        OutcomeKind::Draw
    } else if leaders[0] == spy {
        OutcomeKind::SpyOut
    } else {
        OutcomeKind::CivilianOut
    }
}

fn legal_profiles() -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    for a in 1..=4u8 {
        for b in 1..=4u8 {
            for c in 1..=4u8 {
                for d in 1..=4u8 {
                    let t = [a, b, c, d];
                    if (0..4).all(|i| t[i] != i as u8 + 1) {
                        out.push(t);
                    }
                }
            }
        }
    }
    out
}

fn outcome_oracle() -> Outcome {
    let start = Instant::now();
    let group = WordGroup::new("g", "bear", "lion", "forest animals").unwrap();
    let profiles = legal_profiles();
    ensure(profiles.len() == 81, || format!("{} legal profiles, expected 81", profiles.len()))?;
    let mut cases = 0;
    for t in &profiles {
        for spy in 1..=4u8 {
            let a = RoleAssignment::with_spy(&group, p(spy));
            let m = VoteMatrix::from_targets(t.map(p)).map_err(|e| e.to_string())?;
            let got = determine_outcome(&tally_votes(&m), &a).kind;
            let want = oracle_outcome(*t, spy);
            ensure(got == want, || format!("targets {t:?} spy {spy}: got {got:?}, oracle {want:?}"))?;
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("{cases}/324 cases agree in {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

// ---------------------------------------------------------------- table values

fn outcomes(spy_out: usize, civ: usize, draw: usize) -> Vec<GameOutcome> {
    let mk = |kind| GameOutcome {
        kind,
        tallies: Tallies([0; 4]),
        top_voted: Vec::new(),
    };
    std::iter::repeat_n(mk(OutcomeKind::SpyOut), spy_out)
        .chain(std::iter::repeat_n(mk(OutcomeKind::CivilianOut), civ))
        .chain(std::iter::repeat_n(mk(OutcomeKind::Draw), draw))
        .collect()
}

/// Vote fixtures with the spy at seat 4, indexed by number of wrong civilian votes.
fn template(kind: OutcomeKind, wrong: u32) -> [u8; 4] {
    match (kind, wrong) {
        (OutcomeKind::SpyOut, 0) => [4, 4, 4, 1],
        (OutcomeKind::SpyOut, 1) => [2, 4, 4, 1],
        (OutcomeKind::CivilianOut, 2) => [2, 4, 2, 2],
        (OutcomeKind::CivilianOut, 3) => [2, 1, 2, 2],
        (OutcomeKind::Draw, 1) => [2, 4, 4, 2],
        (OutcomeKind::Draw, 2) => [2, 3, 4, 1],
        (OutcomeKind::Draw, 3) => [2, 1, 1, 2],
        _ => unreachable!("no template for {kind:?} with {wrong} wrong votes"),
    }
}

/// Builds `n` vote records with the given outcome mix and exactly `wrong_total`
/// wrong civilian votes, starting from the minimum per outcome and upgrading.
fn fixture(mix: (usize, usize, usize), wrong_total: u32) -> Option<Vec<(OutcomeKind, u32)>> {
    let mut games: Vec<(OutcomeKind, u32)> = std::iter::repeat_n((OutcomeKind::SpyOut, 0), mix.0)
        .chain(std::iter::repeat_n((OutcomeKind::CivilianOut, 2), mix.1))
        .chain(std::iter::repeat_n((OutcomeKind::Draw, 1), mix.2))
        .collect();
    let max = |k| match k {
        OutcomeKind::SpyOut => 1,
        _ => 3,
    };
    let mut total: u32 = games.iter().map(|g| g.1).sum();
    for g in games.iter_mut() {
        while total < wrong_total && g.1 < max(g.0) {
            g.1 += 1;
            total += 1;
        }
    }
    (total == wrong_total).then_some(games)
}

fn table_values() -> Outcome {
    // (spy out, civilian out, draw), CWR %, CMR %
    let rows = [
        ("NC", (7, 68, 25), 7.0, 200.0 / 3.0),
        ("JC", (72, 13, 15), 72.0, 20.0),
        ("JC & DC", (81, 15, 4), 81.0, 50.0 / 3.0),
        ("JC & DC & SC", (75, 22, 3), 75.0, 25.0),
    ];
    let group = WordGroup::new("g", "bear", "lion", "forest animals").unwrap();
    let a = RoleAssignment::with_spy(&group, p(4));
    let mut detail = Vec::new();
    for (name, mix, cwr_target, cmr_target) in rows {
        let cwr = compute_cwr(&outcomes(mix.0, mix.1, mix.2)).map_err(|e| e.to_string())?;
        ensure((cwr.percent() - cwr_target).abs() < 1e-9, || format!("{name}: CWR {} != {cwr_target}%", cwr))?;

        let wrong = (cmr_target * 3.0_f64).round() as u32;
        let games = fixture(mix, wrong).ok_or_else(|| format!("{name}: no fixture with {wrong} wrong votes"))?;
        let matrices: Vec<VoteMatrix> = games
            .iter()
            .map(|(k, w)| VoteMatrix::from_targets(template(*k, *w).map(p)).unwrap())
            .collect();
        for (m, (k, _)) in matrices.iter().zip(&games) {
            let o = determine_outcome(&tally_votes(m), &a);
            ensure(o.kind == *k, || format!("{name}: fixture outcome {:?} != {k:?}", o.kind))?;
        }
        let cmr = compute_cmr(matrices.iter().map(|m| (m, &a))).map_err(|e| e.to_string())?;
        ensure((cmr.percent() - cmr_target).abs() <= 0.05, || {
            format!("{name}: CMR {} vs {cmr_target:.2}%", cmr.percent())
        })?;
        let recomputed = compute_cwr(
            &matrices.iter().map(|m| determine_outcome(&tally_votes(m), &a)).collect::<Vec<_>>(),
        )
        .unwrap();
        ensure(recomputed == cwr, || format!("{name}: fixture CWR {recomputed} != {cwr}"))?;
        detail.push(format!("{name} CWR {cwr} CMR {cmr}"));
    }
    Ok(detail.join("; "))
}

// ---------------------------------------------------------------- roles

fn role_uniformity() -> Outcome {
    let group = WordGroup::new("g", "bear", "lion", "forest animals").unwrap();
    let mut counts = [0u32; 4];
    for s in 0..10_000u64 {
        let a = assign_roles(&group, s);
        let spies = a.words().iter().filter(|w| *w == "lion").count();
        ensure(spies == 1 && a.word(a.spy()) == "lion", || format!("seed {s}: {spies} spies"))?;
        counts[a.spy().slot()] += 1;
    }
    ensure(counts.iter().all(|c| c.abs_diff(2500) <= 150), || format!("spy counts {counts:?}"))?;
    Ok(format!("spy counts per seat {counts:?}"))
}

// ---------------------------------------------------------------- determinism

async fn determinism() -> Outcome {
    let dataset = builtin_en();
    let config = GameConfig {
        ablation: Ablation::FULL,
        rng_seed: 20_240_101,
        ..GameConfig::default()
    };
    let pool = AgentPool::new(AgentSpec::Oracle { accuracy: 0.6 }).unwrap();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let referee = Referee::default();
    let mut digests = Vec::new();
    let mut bytes = Vec::new();
    for (run, parallelism) in [(0, 1), (1, 1), (2, 4), (3, 4)] {
        let dir = tmp.path().join(format!("run{run}"));
        let opts = BatchOptions {
            n_games: 10,
            parallelism,
            out_dir: Some(dir.clone()),
        };
        let out = run_batch(&referee, &config, &pool, &dataset, &opts).await.map_err(|e| e.to_string())?;
        ensure(out.records.len() == 10, || "batch did not produce 10 records".into())?;
        digests.push(archive_digest(&dir).map_err(|e| e.to_string())?);
        bytes.push(std::fs::read(dir.join("games.jsonl")).map_err(|e| e.to_string())?);
    }
    ensure(digests.iter().all(|d| d == &digests[0]), || format!("digests differ: {digests:?}"))?;
    ensure(bytes.iter().all(|b| b == &bytes[0]), || "archive bytes differ".into())?;
    Ok(format!("4 runs (parallelism 1,1,4,4) share digest {}", &digests[0][..16]))
}

// ---------------------------------------------------------------- referee

fn scripted(queues: [Vec<String>; 4]) -> Seats {
    queues.map(|q| Box::new(ScriptedAgent::new(q)) as Box<dyn Agent>)
}

fn seed_with_spy(group: &WordGroup, spy: u8) -> u64 {
    (0..)
        .find(|s| {
            let c = GameConfig {
                rng_seed: *s,
                ..GameConfig::default()
            };
            Referee::roles_for(&c, group).spy() == p(spy)
        })
        .unwrap()
}

fn valid_block(judge: u8) -> String {
    let j = Judgment::new(p(judge), 1, ["bear", "bear", "bear", "lion"].map(String::from), p(4));
    render_judgment(&j)
}

struct Case {
    name: &'static str,
    judge_cot: bool,
    seat: u8,
    phase: Phase,
    output: String,
    expect: ViolationKind,
}

async fn run_case(case: &Case, group: &WordGroup, seed: u64) -> Result<(), String> {
    let config = GameConfig {
        num_rounds: 1,
        rng_seed: seed,
        ablation: Ablation {
            judge_cot: case.judge_cot,
            ..Ablation::NONE
        },
        ..GameConfig::default()
    };
    let clue = ["furry and round", "lives among trees", "a big cute animal", "strong and majestic"];
    let votes = ["4", "4", "4", "1"];
    let queues: [Vec<String>; 4] = std::array::from_fn(|i| {
        let seat = i as u8 + 1;
        let mut describe = vec![clue[i].to_string()];
        let mut judge = if case.judge_cot { vec![valid_block(seat)] } else { vec![] };
        let mut vote = vec![votes[i].to_string()];
        if seat == case.seat {
            let slot = match case.phase {
                Phase::Describe => &mut describe,
                Phase::Judge => &mut judge,
                _ => &mut vote,
            };
            slot.insert(0, case.output.clone());
        }
        describe.into_iter().chain(judge).chain(vote).collect()
    });
    let mut seats = scripted(queues);
    let record = Referee::default()
        .run_game(&config, &mut seats, group)
        .await
        .map_err(|e| format!("{}: {e}", case.name))?;
    let kinds: Vec<ViolationKind> = record.violations.iter().map(|v| v.kind).collect();
    ensure(kinds == [case.expect], || format!("{}: violations {kinds:?}, expected [{:?}]", case.name, case.expect))?;
    ensure(record.violations[0].raw_output == case.output, || format!("{}: raw output not logged", case.name))?;
    record.check_invariants().map_err(|e| format!("{}: {e}", case.name))
}

async fn referee_enforcement() -> Outcome {
    let group = WordGroup::new("g", "bear", "lion", "forest animals").unwrap();
    let seed = seed_with_spy(&group, 4);
    let long = vec!["tree"; 61].join(" ");
    let block = |lines: &[&str]| lines.join("\n");
    use Phase::{Describe as D, Judge as J, Vote as V};
    use ViolationKind::*;
    let c = |name, judge_cot, seat, phase, output: String, expect| Case {
        name,
        judge_cot,
        seat,
        phase,
        output,
        expect,
    };
    let cases = vec![
        c("plain leak", false, 1, D, "a bear in the woods".into(), KeywordLeak),
        c("upper-case leak", false, 2, D, "A BEAR cub".into(), KeywordLeak),
        c("full-width leak", false, 3, D, "ｂｅａｒ hug".into(), KeywordLeak),
        c("full-width capital leak", false, 1, D, "big Ｂｅａｒ".into(), KeywordLeak),
        c("plural inside word leak", false, 2, D, "teddy-BEARS everywhere".into(), KeywordLeak),
        c("spy leak", false, 4, D, "The Lion King".into(), KeywordLeak),
        c("over limit", false, 1, D, long, OverLimit),
        c("empty description", false, 3, D, "   ".into(), BadFormat),
        c("empty marker", false, 2, D, "thinking...\nDESCRIPTION:   ".into(), BadFormat),
        c("no block", true, 1, J, "I think it is player 4.".into(), BadFormat),
        c(
            "missing seat",
            true,
            2,
            J,
            block(&["PLAYER 1: bear", "PLAYER 2: bear", "PLAYER 4: lion", "SPY: 4"]),
            BadFormat,
        ),
        c(
            "spy index 5",
            true,
            3,
            J,
            block(&["PLAYER 1: bear", "PLAYER 2: bear", "PLAYER 3: bear", "PLAYER 4: lion", "SPY: 5"]),
            OutOfRange,
        ),
        c(
            "spy index 0",
            true,
            4,
            J,
            block(&["PLAYER 1: bear", "PLAYER 2: bear", "PLAYER 3: bear", "PLAYER 4: lion", "SPY: 0"]),
            OutOfRange,
        ),
        c(
            "seat 7 line",
            true,
            1,
            J,
            block(&["PLAYER 1: bear", "PLAYER 7: bear", "PLAYER 3: bear", "PLAYER 4: lion", "SPY: 4"]),
            OutOfRange,
        ),
        c(
            "duplicate seat",
            true,
            2,
            J,
            block(&["PLAYER 1: bear", "PLAYER 1: bear", "PLAYER 3: bear", "PLAYER 4: lion", "SPY: 4"]),
            BadFormat,
        ),
        c(
            "empty guess",
            true,
            3,
            J,
            block(&["PLAYER 1: bear", "PLAYER 2:", "PLAYER 3: bear", "PLAYER 4: lion", "SPY: 4"]),
            BadFormat,
        ),
        c("self vote", false, 2, V, "2".into(), SelfVote),
        c("vote 5", false, 1, V, "5".into(), OutOfRange),
        c("vote 0", false, 3, V, "0".into(), OutOfRange),
        c("no number", false, 4, V, "nobody".into(), BadFormat),
    ];
    ensure(cases.len() == 20, || format!("{} cases", cases.len()))?;
    for case in &cases {
        run_case(case, &group, seed).await?;
    }

    // Retry cap exhaustion.
    let config = GameConfig {
        num_rounds: 1,
        rng_seed: seed,
        ..GameConfig::default()
    };
    let mut seats = scripted([
        vec!["bear".into(); 5],
        vec!["x".into()],
        vec!["x".into()],
        vec!["x".into()],
    ]);
    match Referee::default().run_game(&config, &mut seats, &group).await {
        Err(RefereeError::Aborted(record)) => {
            let kinds: Vec<_> = record.violations.iter().map(|v| (v.kind, v.attempt)).collect();
            ensure(kinds == [(KeywordLeak, 1), (KeywordLeak, 2), (KeywordLeak, 3)], || {
                format!("abort ledger {kinds:?}")
            })?;
            ensure(record.abort.as_ref().is_some_and(|a| a.seat == p(1) && a.phase == D), || {
                "abort info missing".into()
            })?;
            record.check_invariants()?;
        }
        other => return Err(format!("expected abort, got {:?}", other.map(|r| r.outcome))),
    }
    Ok("20/20 adversarial outputs rejected with the expected kind; cap of 3 aborts with 3 KeywordLeak records".into())
}

// ---------------------------------------------------------------- parser

const PROSE: &[&str] = &[
    "the", "clue", "about", "forest", "seems", "likely", "because", "of", "river", "and", "fur", "trees", "step", "one",
    "two", "reason", "maybe", "hmm", "so", "overall", "猜测", "描述",
];
const WORDS: &[&str] = &["bear", "Lion", "watermelon", "cantaloupe", "熊", "狮子", "hot dog", "air conditioner"];

fn prose(rng: &mut impl Rng, lines: usize) -> String {
    (0..lines)
        .map(|_| {
            let n = rng.random_range(1..12);
            (0..n).map(|_| *PROSE.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn styled_block(rng: &mut impl Rng, guesses: &[String; 4], spy: u8) -> String {
    let mut out = String::new();
    for (i, g) in guesses.iter().enumerate() {
        let label = ["PLAYER", "Player", "player"].choose(rng).unwrap();
        let line = match rng.random_range(0..3) {
            0 => format!("{label} {}: {g}", i + 1),
            1 => format!("**{label} {}:** {g}", i + 1),
            _ => format!("- {label} {}: {g}", i + 1),
        };
        out.push_str(&line);
        out.push('\n');
    }
    let spy_label = ["SPY", "Spy", "spy", "**SPY**"].choose(rng).unwrap();
    out.push_str(&format!("{spy_label}: {spy}"));
    out
}

fn parser_robustness() -> Outcome {
    let mut rng = seed::rng(7);
    let mut roundtrips = 0;
    let mut rejected = 0;
    for i in 0..1000 {
        let guesses: [String; 4] = std::array::from_fn(|_| WORDS.choose(&mut rng).unwrap().to_string());
        let spy = rng.random_range(1..=4u8);
        let judge = p(rng.random_range(1..=4u8));
        let prefix_lines = rng.random_range(0..6);
        let suffix_lines = rng.random_range(0..4);
        let block = styled_block(&mut rng, &guesses, spy);
        let raw = format!("{}\n\n{}\n\n{}", prose(&mut rng, prefix_lines), block, prose(&mut rng, suffix_lines));
        let j = parse_judgment(&raw, judge, 1).map_err(|e| format!("case {i}: {e}\n{raw}"))?;
        ensure(j.guesses == guesses && j.spy_pick == p(spy) && j.judge == judge, || {
            format!("case {i}: parsed {j:?}\n{raw}")
        })?;
        // The canonical rendering parses back to the same judgment.
        let again = parse_judgment(&render_judgment(&j), judge, 1).map_err(|e| e.to_string())?;
        ensure(again == j, || format!("case {i}: render/parse mismatch"))?;
        roundtrips += 1;

        let mut lines: Vec<&str> = block.lines().collect();
        let drop = rng.random_range(0..4);
        lines.remove(drop);
        let missing = format!("{}\n{}", prose(&mut rng, 2), lines.join("\n"));
        ensure(matches!(parse_judgment(&missing, judge, 1), Err(ParseError::MissingSeat(_))), || {
            format!("case {i}: missing seat accepted\n{missing}")
        })?;
        let bad = [0, 5, 9, 42].choose(&mut rng).unwrap();
        let bad_spy = format!("{}\nSPY: {bad}", block.lines().take(4).collect::<Vec<_>>().join("\n"));
        ensure(matches!(parse_judgment(&bad_spy, judge, 1), Err(ParseError::SpyOutOfRange(_))), || {
            format!("case {i}: bad SPY index accepted\n{bad_spy}")
        })?;
        rejected += 2;
    }
    Ok(format!("{roundtrips}/1000 blocks round-trip; {rejected}/2000 malformed variants rejected"))
}

// ---------------------------------------------------------------- prompts

const SYSTEM: &str = "You are not an AI assistant now, you are a player participating in the game 'Who is the Spy.' Please output content that matches the player's identity.";
const VOTE: &str = "Please vote and enter the number of the player you think is the spy. This number should be between 1 and 4. Do not output any other information.";

/// Whole-word match for spaced scripts, substring match for CJK keywords.
fn mentions(haystack: &str, keyword: &str) -> bool {
    let h = text::normalize(haystack);
    let k = text::normalize(keyword);
    if keyword.chars().any(text::is_cjk) {
        h.contains(&k)
    } else {
        format!(" {h} ").contains(&format!(" {k} "))
    }
}

/// Records Judge requests; describes using the *other* seats' word so the
/// history is full of keywords that must be masked.
struct Prober {
    group: WordGroup,
    log: std::sync::Arc<std::sync::Mutex<Vec<(AgentRequest, String)>>>,
    rng: seed::GameRng,
}

#[async_trait::async_trait]
impl Agent for Prober {
    async fn handle(&mut self, req: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let text = match req.kind {
            Phase::RulesBrief => "OK".to_string(),
            Phase::Describe => {
                let own = req.context.keyword.clone().unwrap_or_default();
                let other = if own == self.group.civilian_word() { self.group.spy_word() } else { self.group.civilian_word() };
                let variant = match self.rng.random_range(0..3) {
                    0 => other.to_uppercase(),
                    1 => other.chars().map(|c| char::from_u32(c as u32 + 0xFEE0).filter(|_| c.is_ascii_alphanumeric()).unwrap_or(c)).collect(),
                    _ => other.to_string(),
                };
                if req.rejected.is_some() { "something familiar".into() } else { format!("not quite a {variant}, honestly") }
            }
            Phase::Judge => {
                self.log.lock().unwrap().push((req.clone(), String::new()));
                let w = [self.group.civilian_word(), self.group.spy_word()];
                let guesses = std::array::from_fn(|i| w[i % 2].to_string());
                render_judgment(&Judgment::new(req.seat, req.round, guesses, req.seat))
            }
            Phase::Vote => {
                if req.prompt.is_some() {
                    self.log.lock().unwrap().push((req.clone(), String::new()));
                }
                req.seat.others()[0].to_string()
            }
        };
        Ok(AgentResponse::raw(text))
    }

    fn label(&self) -> String {
        "prober".into()
    }
}

async fn prompt_fidelity() -> Outcome {
    let en = PromptCatalogue::builtin(Language::En);
    ensure(en.system() == SYSTEM, || format!("system prompt differs: {:?}", en.system()))?;
    let d = en.baseline_describe(p(3), "bear", 1);
    let want = "You are player No. 3, and the keyword you are assigned is: bear. Please start describing. Only output the description, and do not include any other information. Note that your answer must not contain your keyword bear.";
    ensure(d.user == want, || format!("baseline describe differs: {:?}", d.user))?;
    ensure(d.system == SYSTEM, || "baseline describe system differs".into())?;
    let v = en.baseline_judge(&VisibleHistory::default(), 2);
    ensure(v.user.ends_with(VOTE), || format!("baseline vote instruction differs: {:?}", v.user))?;
    ensure(v.system == SYSTEM, || "baseline judge system differs".into())?;

    // Fuzz: every Judge (and baseline vote) prompt served by the referee
    // must not name the requesting seat's keyword.
    let mut checked = 0;
    let referee = Referee::default();
    for (lang, dataset) in [("en", builtin_en()), ("zh", builtin_zh())] {
        for (i, group) in dataset.groups().iter().enumerate() {
            for ablation in [Ablation::FULL, Ablation::NONE] {
                let config = GameConfig {
                    rng_seed: seed::derive(99, lang, i as u64),
                    ablation,
                    ..GameConfig::default()
                };
                let log = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
                let mut seats: Seats = std::array::from_fn(|s| {
                    Box::new(Prober {
                        group: group.clone(),
                        log: log.clone(),
                        rng: seed::rng(seed::derive(config.rng_seed, "prober", s as u64)),
                    }) as Box<dyn Agent>
                });
                let record = match referee.run_game(&config, &mut seats, group).await {
                    Ok(r) => r,
                    Err(RefereeError::Aborted(r)) => *r,
                    Err(e) => return Err(e.to_string()),
                };
                for (req, _) in log.lock().unwrap().iter() {
                    let own = record.assignment.word(req.seat);
                    let prompt = req.prompt.as_ref().ok_or("judge request without prompt")?;
                    ensure(req.context.keyword.is_none(), || "keyword in judge context".into())?;
                    let serialized = serde_json::to_string(req).unwrap();
                    for hay in [&prompt.system, &prompt.user, &serialized] {
                        ensure(!mentions(hay, own), || {
                            format!("group {} seat {} {:?} prompt names own keyword {own:?}", group.id(), req.seat, req.kind)
                        })?;
                    }
                    checked += 1;
                }
            }
        }
    }
    ensure(checked > 0, || "no judge prompts observed".into())?;
    Ok(format!("verbatim system/describe/vote texts match; {checked} judge and vote payloads exclude the requester's keyword"))
}

// ---------------------------------------------------------------- mock LLM game

const R1: [&str; 4] = [
    "A common animal in the forest, furry, likes to climb trees.",
    "There is an animal living in the forest, it has thick fur, always likes to climb trees, looks very cute.",
    "The big and cute guy in the forest, it likes to shuttle between trees, and sometimes goes to the river to play.",
    "The majestic animal in the forest, strong and powerful, often strolls on the grassland.",
];
const R2: [&str; 4] = [
    "It sleeps through the cold months and loves honey.",
    "It can stand on two legs and catches fish in streams.",
    "Its cubs stay with the mother for about two years.",
    "This animal lives in arid grasslands, and they usually seek shaded places to avoid the heat during the hot season. Their body structure allows them to run quickly and adapt to the vast grasslands. They feed on meat and are strong among predators. Although they show great strength in battle, they show a gentle side in the family, especially with their cubs.",
];
const R2_SEAT4_RETRY: &str = "This animal rules the grasslands and seeks shade in the hot season. It runs fast, feeds on meat and is strong among predators, yet it is gentle with its cubs.";
const JUDGE_REASONING: &str = "Player 2's description is similar to Player 1's, mentioning forests, thick fur, climbing trees, and cuteness, which also points to bears. Player 4's description mentions \"majestic animals\" and \"walking on the grassland\", which is inconsistent with the image of bears.";

pub fn case_study_script() -> MockScript {
    let mut script = MockScript::default()
        .rule(["Reply with \"OK\""], vec![MockReply::text("OK")])
        .rule(["(OverLimit)"], vec![MockReply::text(format!("Let me shorten it.\nDESCRIPTION: {R2_SEAT4_RETRY}"))]);
    for seat in 1..=4usize {
        for (round, texts) in [(1, &R1), (2, &R2)] {
            script = script.rule(
                [
                    format!("You are player No. {seat} in a four-player"),
                    format!("This is round {round} of the description phase"),
                ],
                vec![MockReply::text(format!("Step 1: thinking.\nDESCRIPTION: {}", texts[seat - 1]))],
            );
            let self_tag = |k: usize| if k == seat { " (self)" } else { "" };
            let block = format!(
                "{JUDGE_REASONING}\nPLAYER 1{}: Bear\nPLAYER 2{}: Bear\nPLAYER 3{}: Bear\nPLAYER 4{}: Lion\nSPY: 4",
                self_tag(1),
                self_tag(2),
                self_tag(3),
                self_tag(4)
            );
            script = script.rule(
                [
                    format!("You are player No. {seat} in a four-player game of \"Who is the Spy\". Your task now is to judge"),
                    format!("(this is round {round})"),
                ],
                vec![MockReply::text(block)],
            );
        }
    }
    script
}

async fn mock_llm_game() -> Outcome {
    let server = MockChatServer::start(case_study_script()).await.map_err(|e| e.to_string())?;
    let dataset = builtin_en();
    let group = dataset.groups().iter().find(|g| g.civilian_word() == "bear").unwrap().clone();
    let config = GameConfig {
        ablation: Arm::JcDc.ablation(),
        rng_seed: seed_with_spy(&group, 4),
        ..GameConfig::default()
    };
    let pool = AgentPool::new(AgentSpec::Llm {
        config: LlmConfig {
            endpoint: server.endpoint(),
            backoff_base_ms: 1,
            ..LlmConfig::default()
        },
    })
    .map_err(|e| e.to_string())?;
    let mut seats = pool.seats(&config, &group);
    let record = Referee::default().run_game(&config, &mut seats, &group).await.map_err(|e| e.to_string())?;
    record.check_invariants()?;
    let outcome = record.outcome.as_ref().ok_or("no outcome")?;
    ensure(outcome.kind == OutcomeKind::SpyOut, || format!("outcome {:?}", outcome.kind))?;
    ensure(record.judgments.len() == 8 && record.judgments.iter().all(|j| j.spy_pick == p(4)), || {
        format!("judgments {:?}", record.judgments.iter().map(|j| j.spy_pick).collect::<Vec<_>>())
    })?;
    let over: Vec<_> = record.violations.iter().map(|v| (v.player, v.round, v.kind)).collect();
    ensure(over == [(p(4), 2, ViolationKind::OverLimit)], || format!("violations {over:?}"))?;
    let bodies = server.received();
    ensure(bodies.iter().all(|b| b["temperature"] == 0.3 && b["max_tokens"] == 10_000), || {
        "request bodies do not carry the configured sampling settings".into()
    })?;
    Ok(format!(
        "SpyOut with tallies {:?}; spy_pick = 4 in all 8 judgments; {} chat requests",
        outcome.tallies.0,
        bodies.len()
    ))
}

// ---------------------------------------------------------------- ablation shape

async fn ablation_shape() -> Outcome {
    let dataset = builtin_en();
    let pool = AgentPool::new(AgentSpec::Oracle { accuracy: 0.8 }).unwrap();
    let opts = BatchOptions {
        n_games: 8,
        parallelism: 4,
        out_dir: None,
    };
    let base = GameConfig {
        rng_seed: 11,
        ..GameConfig::default()
    };
    let report = run_ablation(&Referee::default(), &base, &Arm::ALL, &pool, &dataset, &opts)
        .await
        .map_err(|e| e.to_string())?;
    let table = report.render();
    for label in ["Game Count", "Spy Out", "Civilian Out", "Draw", "CWR", "CMR", "NC(Baseline)", "JC & DC & SC"] {
        ensure(table.contains(label), || format!("table lacks {label}:\n{table}"))?;
    }
    ensure(report.rows.iter().all(|(_, r)| r.games == 8), || "arm game counts differ".into())?;

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = BatchOptions {
        out_dir: Some(tmp.path().to_path_buf()),
        ..opts
    };
    let live = run_batch(&Referee::default(), &base, &pool, &dataset, &opts).await.map_err(|e| e.to_string())?;
    let stored = report_from_records(&read_records(tmp.path()).map_err(|e| e.to_string())?);
    ensure(stored == live.report, || "report recomputed from archive differs".into())?;
    Ok("live-model win rates are not gated; the ablation runner renders the table shape for manual comparison".into())
}

// ---------------------------------------------------------------- main

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let results: Vec<(&str, Outcome)> = vec![
        ("outcome oracle equivalence", outcome_oracle()),
        ("table metric reproduction", table_values()),
        ("role assignment uniformity", role_uniformity()),
        ("batch determinism", rt.block_on(determinism())),
        ("referee enforcement", rt.block_on(referee_enforcement())),
        ("parser robustness", parser_robustness()),
        ("prompt fidelity", rt.block_on(prompt_fidelity())),
        ("mock LLM integration", rt.block_on(mock_llm_game())),
        ("non-reproducibility note", rt.block_on(ablation_shape())),
    ];
    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
