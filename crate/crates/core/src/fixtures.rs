//! Small reference games used by tests, the acceptance suite and the CLI examples.

use crate::game_model::MetaGame;
use crate::response_graph::SbrGraph;

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

fn two_player(rows: Vec<String>, cols: Vec<String>, table: &[&[(f64, f64)]]) -> MetaGame {
    let payoffs = table
        .iter()
        .flat_map(|row| row.iter().map(|&(a, b)| vec![a, b]))
        .collect();
    MetaGame::from_table(vec![rows, cols], payoffs).expect("fixture tables are well formed")
}

/// Three-by-three game without pure equilibria whose unique sink is the
/// 4-cycle (a1,b2) -> (a2,b2) -> (a2,b3) -> (a1,b3) -> (a1,b2).
pub fn fig2(eps: f64) -> MetaGame {
    let e = 1.0 - eps;
    two_player(
        names("a", 3),
        names("b", 3),
        &[
            &[(1.0, e), (0.0, 1.0), (1.0, 0.0)],
            &[(0.0, e), (1.0, 0.0), (0.0, 1.0)],
            &[(0.0, 0.0), (e, 0.0), (e, 1.0)],
        ],
    )
}

/// Strategies {a1, a3} x {b1, b2} of [`fig2`] at eps = 1/3.
pub fn prop1_ii() -> MetaGame {
    fig2(1.0 / 3.0)
        .restrict(&[vec![0, 2], vec![0, 1]])
        .expect("valid restriction")
}

/// Strategies {a1, a2} x {b2, b3} of [`fig2`]; these payoffs do not depend on eps.
pub fn prop1_iii() -> MetaGame {
    fig2(0.25)
        .restrict(&[vec![0, 1], vec![1, 2]])
        .expect("valid restriction")
}

pub fn prisoners_dilemma() -> MetaGame {
    two_player(
        vec!["C".into(), "D".into()],
        vec!["C".into(), "D".into()],
        &[&[(0.6, 0.6), (0.0, 1.0)], &[(1.0, 0.0), (0.2, 0.2)]],
    )
}

/// Coordination game with two strict pure equilibria (A,A) and (B,B), worth
/// `high` and `low` to both agents; miscoordination pays 0.
pub fn coordination(high: f64, low: f64) -> MetaGame {
    two_player(
        vec!["A".into(), "B".into()],
        vec!["A".into(), "B".into()],
        &[&[(high, high), (0.0, 0.0)], &[(0.0, 0.0), (low, low)]],
    )
}

/// Graph with nodes a{1,2}b{1,2,3} whose unique sink is (a1,b1); the sequence
/// (a1b2, a2b2, a2b3) follows its edges.
pub fn fig1a_graph() -> SbrGraph {
    let labels: Vec<String> = ["a1b1", "a1b2", "a1b3", "a2b1", "a2b2", "a2b3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let idx = |l: &str| labels.iter().position(|x| x == l).unwrap();
    let edges = [
        ("a1b2", "a2b2"),
        ("a2b2", "a2b3"),
        ("a2b3", "a1b3"),
        ("a1b3", "a1b1"),
        ("a2b1", "a1b1"),
    ]
    .iter()
    .map(|(a, b)| (idx(a), idx(b)))
    .collect::<Vec<_>>();
    SbrGraph::from_edges(labels, &edges, None).expect("fixture graph is well formed")
}

/// Three agents with two strategies each; (0,0,0) is the only profile paying
/// anything, so it is a strict pure equilibrium.
pub fn three_agent_pne() -> MetaGame {
    let names = vec![
        vec!["x0".into(), "x1".into()],
        vec!["y0".into(), "y1".into()],
        vec!["z0".into(), "z1".into()],
    ];
    let payoffs = (0..8)
        .map(|p| if p == 0 { vec![1.0; 3] } else { vec![0.0; 3] })
        .collect();
    MetaGame::from_table(names, payoffs).expect("fixture table is well formed")
}

/// Two sinks: a 6-cycle through the upper-left 3x3 block (welfare 0.6 on every
/// member) and the strict equilibrium (r4,c4) with welfare 0.2.
pub fn cycle_vs_pne() -> MetaGame {
    two_player(
        names("r", 4),
        names("c", 4),
        &[
            &[(0.9, 0.3), (0.3, 0.9), (0.0, 0.0), (0.0, 0.0)],
            &[(0.0, 0.0), (0.9, 0.3), (0.3, 0.9), (0.0, 0.0)],
            &[(0.3, 0.9), (0.0, 0.0), (0.9, 0.3), (0.0, 0.0)],
            &[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.2, 0.2)],
        ],
    )
}

/// Two pure equilibria: (r1,c2) with welfare 0.375 and (r2,c1) with welfare
/// 0.425. The row agent is indifferent at c1, so (r2,c1) is left with a single
/// exploration while (r1,c2) needs two; the worse equilibrium is the stable one.
pub fn near_max_stable() -> MetaGame {
    two_player(
        names("r", 2),
        names("c", 2),
        &[&[(0.4, 0.2), (0.2, 0.55)], &[(0.4, 0.45), (0.1, 0.3)]],
    )
}
