//! Golden renderings. Regenerate deliberately with
//! `cargo test -p cardlab --test golden -- --ignored regenerate`.

use std::path::PathBuf;

use cardlab::evaluation::{render_matrix, run_attack_scenarios, MatrixFormat};
use cardlab::fixtures::{self, FixtureKind};
use cardlab::proto::ProtocolId;
use cardlab::runner;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn matrix_text() -> String {
    render_matrix(&run_attack_scenarios(0).unwrap(), MatrixFormat::Text).unwrap()
}

fn juang_honest_transcript() -> String {
    let f = fixtures::default_fixture(ProtocolId::Juang, FixtureKind::Honest).unwrap();
    runner::run_honest(ProtocolId::Juang, &f.participants, 0, &f.options)
        .unwrap()
        .transcript
        .render_text()
}

fn goldens() -> [(&'static str, String); 2] {
    [
        ("matrix_seed0.txt", matrix_text()),
        ("juang_honest_seed0.txt", juang_honest_transcript()),
    ]
}

#[test]
fn renderings_match_golden_files() {
    for (name, actual) in goldens() {
        let expected = std::fs::read_to_string(golden_path(name))
            .unwrap_or_else(|e| panic!("{name}: {e}; run the regenerate test"));
        assert_eq!(actual, expected, "{name} drifted");
    }
}

#[test]
#[ignore]
fn regenerate() {
    for (name, actual) in goldens() {
        std::fs::write(golden_path(name), actual).unwrap();
    }
}
