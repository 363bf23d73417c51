use whospy_core::dataset::{builtin_en, Dataset};
use whospy_core::game::{Ablation, GameConfig, WordGroup};
use whospy_core::harness::{
    archive_digest, game_seed, read_manifest, read_records, render_tickets, report_from_records, run_ablation,
    run_batch, ticket_statistics, AgentPool, AgentSpec, Arm, BatchOptions, HarnessError, ARCHIVE_FORMAT, GAMES_FILE,
};
use whospy_core::llm::mock::{MockChatServer, MockReply, MockScript};
use whospy_core::llm::LlmConfig;
use whospy_core::prompts::BuilderTag;
use whospy_core::referee::Referee;

fn opts(n_games: usize, parallelism: usize, out_dir: Option<std::path::PathBuf>) -> BatchOptions {
    BatchOptions {
        n_games,
        parallelism,
        out_dir,
    }
}

fn full(seed: u64) -> GameConfig {
    GameConfig {
        ablation: Ablation::FULL,
        rng_seed: seed,
        ..GameConfig::default()
    }
}

#[tokio::test]
async fn archive_round_trips_and_report_is_recomputable() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = AgentPool::new(AgentSpec::Oracle { accuracy: 0.5 }).unwrap();
    let out = run_batch(&Referee::default(), &full(3), &pool, &builtin_en(), &opts(25, 4, Some(tmp.path().into())))
        .await
        .unwrap();
    assert_eq!(out.archive.as_deref(), Some(tmp.path()));

    let manifest = read_manifest(tmp.path()).unwrap();
    assert_eq!(manifest.format, ARCHIVE_FORMAT);
    assert_eq!((manifest.master_seed, manifest.n_games), (3, 25));
    assert_eq!(manifest.agents, AgentSpec::Oracle { accuracy: 0.5 });
    assert_eq!(manifest.dataset.groups, 100);
    assert_eq!(manifest.prompt_catalogues.len(), 1);

    let records = read_records(tmp.path()).unwrap();
    assert_eq!(records, out.records);
    assert_eq!(report_from_records(&records), out.report);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.config.rng_seed, game_seed(3, i));
        assert_eq!(r.group.id(), builtin_en().group_for_game(i).id());
        r.check_invariants().unwrap();
    }
    let hist = ticket_statistics(&records).unwrap();
    assert_eq!(hist.iter().sum::<u64>(), out.report.games);
}

#[tokio::test]
async fn digest_changes_with_the_master_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = AgentPool::new(AgentSpec::Random).unwrap();
    let mut digests = Vec::new();
    for seed in [1, 1, 2] {
        let dir = tmp.path().join(format!("s{seed}-{}", digests.len()));
        run_batch(&Referee::default(), &full(seed), &pool, &builtin_en(), &opts(6, 3, Some(dir.clone())))
            .await
            .unwrap();
        digests.push(archive_digest(&dir).unwrap());
    }
    assert_eq!(digests[0], digests[1]);
    assert_ne!(digests[0], digests[2]);
}

#[tokio::test]
async fn ablation_arms_share_groups_and_roles() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = AgentPool::new(AgentSpec::Oracle { accuracy: 0.7 }).unwrap();
    let report = run_ablation(
        &Referee::default(),
        &full(9),
        &Arm::ALL,
        &pool,
        &builtin_en(),
        &opts(6, 2, Some(tmp.path().into())),
    )
    .await
    .unwrap();
    assert_eq!(report.rows.iter().map(|r| r.0).collect::<Vec<_>>(), Arm::ALL);

    let per_arm: Vec<_> = Arm::ALL.iter().map(|a| read_records(&tmp.path().join(a.slug())).unwrap()).collect();
    for records in &per_arm[1..] {
        for (a, b) in records.iter().zip(&per_arm[0]) {
            assert_eq!(a.group, b.group);
            assert_eq!(a.assignment, b.assignment);
        }
    }
    // NC never judges; the full arm judges every round.
    assert!(per_arm[0].iter().all(|r| r.judgments.is_empty()));
    assert!(per_arm[3].iter().all(|r| r.judgments.len() == 8));
    assert!(per_arm[0]
        .iter()
        .flat_map(|r| &r.requests)
        .all(|q| !matches!(q.builder, Some(BuilderTag::JudgeCot | BuilderTag::DescribeCot | BuilderTag::SpyCot))));
    let manifest = read_manifest(&tmp.path().join("jc-dc")).unwrap();
    assert_eq!(manifest.arm.as_deref(), Some("JC & DC"));

    let tickets = render_tickets(&report);
    assert_eq!(tickets.lines().count(), 6);
}

#[tokio::test]
async fn llm_batch_against_mock_server_keeps_exchanges() {
    let script = MockScript::default()
        .rule(["Reply with \"OK\""], vec![MockReply::text("OK")])
        .rule(["Your task now is to judge"], vec![MockReply::text(
            "PLAYER 1: x\nPLAYER 2: x\nPLAYER 3: x\nPLAYER 4: y\nSPY: 4",
        )])
        .fallback(MockReply::text("Thinking.\nDESCRIPTION: quiet and unremarkable"));
    let server = MockChatServer::start(script).await.unwrap();
    let pool = AgentPool::new(AgentSpec::Llm {
        config: LlmConfig {
            endpoint: server.endpoint(),
            ..LlmConfig::default()
        },
    })
    .unwrap();
    let group = WordGroup::new("m-1", "bear", "lion", "forest animals").unwrap();
    let dataset = Dataset::new(vec![group], "mem").unwrap();
    let config = GameConfig {
        ablation: Arm::JcDc.ablation(),
        rng_seed: 4,
        ..GameConfig::default()
    };
    let tmp = tempfile::tempdir().unwrap();
    let out = run_batch(&Referee::default(), &config, &pool, &dataset, &opts(3, 3, Some(tmp.path().into())))
        .await
        .unwrap();
    assert_eq!(out.report.games, 3);
    for r in &out.records {
        // 4 briefs, 8 descriptions and 8 judgments; votes are decided locally.
        assert_eq!(r.exchanges.len(), 20);
        assert!(r.agents.iter().all(|a| a == "llm(glm-4-9b-flash)"));
    }
    let stored = std::fs::read_to_string(tmp.path().join(GAMES_FILE)).unwrap();
    assert!(stored.contains("quiet and unremarkable"));
}

#[tokio::test]
async fn empty_inputs_are_rejected() {
    let pool = AgentPool::new(AgentSpec::Random).unwrap();
    let r = run_ablation(&Referee::default(), &full(1), &[], &pool, &builtin_en(), &opts(1, 1, None)).await;
    assert!(matches!(r, Err(HarnessError::InvalidConfig(_))));
    assert!(matches!(ticket_statistics(&[]), Err(HarnessError::EmptyArchive)));
    let bad = GameConfig {
        num_rounds: 0,
        ..full(1)
    };
    let r = run_batch(&Referee::default(), &bad, &pool, &builtin_en(), &opts(1, 1, None)).await;
    assert!(matches!(r, Err(HarnessError::InvalidConfig(_))));
}

#[test]
fn missing_archive_reports_path() {
    let err = read_records(std::path::Path::new("/nonexistent/archive")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/archive"));
}
