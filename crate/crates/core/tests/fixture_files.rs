//! The JSON files under fixtures/ describe the same games as `sinkrank::fixtures`.

use std::path::PathBuf;

use sinkrank::fixtures;
use sinkrank::formats::{parse_document, parse_game, parse_graph, parse_meta, Document};
use sinkrank::game_model::{MetaGame, DEFAULT_PROFILE_CAP};

fn read(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn meta_files_match_fixtures() {
    let cases: [(&str, MetaGame); 6] = [
        ("fig2.json", fixtures::fig2(0.25)),
        ("coordination.json", fixtures::coordination(1.0, 0.1)),
        ("tied_coordination.json", fixtures::coordination(0.5, 0.5)),
        ("prisoners_dilemma.json", fixtures::prisoners_dilemma()),
        ("cycle_vs_pne.json", fixtures::cycle_vs_pne()),
        ("near_max_stable.json", fixtures::near_max_stable()),
    ];
    for (file, want) in cases {
        assert_eq!(parse_meta(&read(file)).unwrap(), want, "{file}");
    }
}

#[test]
fn graph_file_matches_fixture() {
    let g = parse_graph(&read("fig1a_graph.json")).unwrap();
    let f = fixtures::fig1a_graph();
    assert_eq!(g.labels(), f.labels());
    assert_eq!(g.edges().collect::<Vec<_>>(), f.edges().collect::<Vec<_>>());
    assert!(g.weights().is_some());
}

#[test]
fn empty_strategy_file_is_rejected() {
    let err = parse_document(&read("empty_strategy.json")).unwrap_err().to_string();
    assert!(err.contains("line 4") && err.contains("empty"), "{err}");
}

#[test]
fn stochastic_game_file_enumerates_policies() {
    let doc = parse_game(&read("maintenance_game.json")).unwrap();
    assert_eq!(doc.game.states(), 2);
    assert!(doc.policies.is_none());
    let meta = MetaGame::from_stochastic(doc.game, None, DEFAULT_PROFILE_CAP).unwrap();
    // two actions in two states: four policies per agent
    assert_eq!(meta.space().dims(), &[4, 4]);
    assert!(matches!(parse_document(&read("maintenance_game.json")).unwrap(), Document::Game(_)));
}
