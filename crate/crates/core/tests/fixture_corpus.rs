use cardlab::fixtures::{all_fixtures, load_fixture, ExpectedOutcome, FixtureError};

#[test]
fn corpus_replays_under_twenty_seeds() {
    for f in all_fixtures().unwrap() {
        for seed in 0..20 {
            f.replay(seed).unwrap_or_else(|e| panic!("{e}"));
        }
    }
}

#[test]
fn replay_is_deterministic() {
    let f = load_fixture("juang_lost_card_attack").unwrap();
    let a = f.run(9).unwrap();
    let b = f.run(9).unwrap();
    assert_eq!(a.observed.transcript, b.observed.transcript);
    assert_ne!(a.observed.transcript, f.run(10).unwrap().observed.transcript);
}

#[test]
fn li_fixture_expects_one_login() {
    let f = load_fixture("li_single_login_attack").unwrap();
    let run = f.replay(0).unwrap();
    assert_eq!(run.observed.outcome, ExpectedOutcome::FoundPassword);
    assert_eq!(run.observed.login_requests_sent, 1);
}

#[test]
fn xu_fixture_expects_impersonation() {
    let run = load_fixture("xu_insider").unwrap().replay(5).unwrap();
    assert_eq!(run.observed.outcome, ExpectedOutcome::ImpersonationAccepted);
}

#[test]
fn mismatch_is_reported() {
    let mut f = load_fixture("hsiang_lost_card_attack").unwrap();
    f.expect.online_messages = Some(1);
    assert!(matches!(f.replay(0), Err(FixtureError::Mismatch { .. })));
}

#[test]
fn unknown_fixture() {
    assert!(matches!(load_fixture("nonexistent"), Err(FixtureError::Unknown(_))));
}
