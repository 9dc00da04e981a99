//! Artifacts emitted by the command-line tool: run manifests, summaries and
//! the fixed-column CSV tables.
//!
//! CSV columns:
//! - analyze:   `profile,sink_id,pne`
//! - rank:      `profile,sink_id,metric,W`
//! - occupancy: `profile,sink_id,visits,frequency`
//! - chain:     `history,rcc,gamma,stable,limit`
//!
//! `sink_id` is empty for profiles outside every sink equilibrium.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::chain::{HistorySpace, TheoremReport};
use crate::dynamics::TrajectorySummary;
use crate::metrics::RankRow;
use crate::response_graph::{sink_equilibria, sink_membership, SbrGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Hex SHA-256 of the input file.
    pub input_digest: String,
    pub flags: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch; taken from SOURCE_DATE_EPOCH when set.
    pub timestamp: u64,
}

/// Any emitted JSON document: the result plus the manifest that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub manifest: RunManifest,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkRow {
    pub id: usize,
    pub size: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRow {
    pub profile: String,
    pub sink_id: Option<usize>,
    pub pne: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeSummary {
    pub profiles: usize,
    pub edges: Vec<[String; 2]>,
    pub pne: Vec<String>,
    pub sinks: Vec<SinkRow>,
    pub membership: Vec<MembershipRow>,
}

pub fn analyze(graph: &SbrGraph) -> AnalyzeSummary {
    let sinks = sink_equilibria(graph);
    let of = sink_membership(graph, &sinks);
    AnalyzeSummary {
        profiles: graph.node_count(),
        edges: graph
            .edges()
            .map(|(a, e)| [graph.label(a).to_string(), graph.label(e.to).to_string()])
            .collect(),
        pne: graph.pne_nodes().iter().map(|&v| graph.label(v).to_string()).collect(),
        sinks: sinks
            .iter()
            .map(|q| SinkRow {
                id: q.id,
                size: q.members.len(),
                members: q.members.iter().map(|&v| graph.label(v).to_string()).collect(),
            })
            .collect(),
        membership: (0..graph.node_count())
            .map(|v| MembershipRow {
                profile: graph.label(v).to_string(),
                sink_id: of[v],
                pne: graph.is_pne(v),
            })
            .collect(),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn analyze_csv(s: &AnalyzeSummary) -> String {
    let mut out = String::from("profile,sink_id,pne\n");
    for r in &s.membership {
        let _ = writeln!(out, "{},{},{}", quote(&r.profile), opt(r.sink_id), r.pne);
    }
    out
}

pub fn rank_csv(rows: &[RankRow]) -> String {
    let mut out = String::from("profile,sink_id,metric,W\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", quote(&r.label), opt(r.sink_id), r.metric, r.performance);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyRow {
    pub profile: String,
    pub sink_id: Option<usize>,
    pub visits: u64,
    pub frequency: f64,
}

pub fn occupancy(graph: &SbrGraph, summary: &TrajectorySummary) -> Vec<OccupancyRow> {
    let of = sink_membership(graph, &sink_equilibria(graph));
    summary
        .profile_visits
        .iter()
        .enumerate()
        .map(|(s, &visits)| OccupancyRow {
            profile: graph.label(s).to_string(),
            sink_id: of[s],
            visits,
            frequency: summary.frequency(visits),
        })
        .collect()
}

pub fn occupancy_csv(rows: &[OccupancyRow]) -> String {
    let mut out = String::from("profile,sink_id,visits,frequency\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", quote(&r.profile), opt(r.sink_id), r.visits, r.frequency);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub summary: TrajectorySummary,
    pub occupancy: Vec<OccupancyRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    /// Window labels, oldest first, joined with " > ".
    pub history: String,
    pub rcc: Option<usize>,
    pub gamma: f64,
    pub stable: bool,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub gamma_table: Vec<GammaRow>,
    pub stable_histories: Vec<String>,
    /// Extrapolated limit frequency of each profile.
    pub stable_profiles: Vec<(String, f64)>,
    pub theorems: TheoremReport,
}

pub fn history_label(graph: &SbrGraph, space: &HistorySpace, h: usize) -> String {
    space
        .decode(h)
        .iter()
        .map(|&s| graph.label(s))
        .collect::<Vec<_>>()
        .join(" > ")
}

/// Readable view of a theorem report; `None` when no stationary analysis ran.
pub fn chain_report(graph: &SbrGraph, theorems: TheoremReport) -> Option<ChainReport> {
    let st = theorems.stability.as_ref()?;
    let space = HistorySpace::new(graph.node_count(), st.memory, usize::MAX).ok()?;
    let mut rcc_of = vec![None; space.size()];
    for (i, c) in st.rccs.iter().enumerate() {
        for &h in &c.states {
            rcc_of[h] = Some(i);
        }
    }
    let gamma_table: Vec<GammaRow> = (0..space.size())
        .map(|h| GammaRow {
            history: history_label(graph, &space, h),
            rcc: rcc_of[h],
            gamma: st.gamma[h],
            stable: st.stable_set.binary_search(&h).is_ok(),
            limit: st.limit[h],
        })
        .collect();
    let stable_histories = st.stable_set.iter().map(|&h| history_label(graph, &space, h)).collect();
    let stable_profiles = st
        .profile_limit
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| (graph.label(s).to_string(), p))
        .collect();
    Some(ChainReport {
        gamma_table,
        stable_histories,
        stable_profiles,
        theorems,
    })
}

pub fn chain_csv(r: &ChainReport) -> String {
    let mut out = String::from("history,rcc,gamma,stable,limit\n");
    for g in &r.gamma_table {
        let _ = writeln!(out, "{},{},{},{},{}", quote(&g.history), opt(g.rcc), g.gamma, g.stable, g.limit);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::game_model::EXACT_TIE_TOL;
    use crate::response_graph::build_sbr_graph;

    #[test]
    fn fig2_summary() {
        let g = build_sbr_graph(&fixtures::fig2(0.25), EXACT_TIE_TOL).unwrap();
        let s = analyze(&g);
        assert_eq!(s.profiles, 9);
        assert!(s.pne.is_empty());
        assert_eq!(s.sinks.len(), 1);
        assert_eq!(s.sinks[0].size, 4);
        let csv = analyze_csv(&s);
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.contains("\"a1,b2\",0,false"));
    }

    #[test]
    fn summary_round_trip() {
        let g = build_sbr_graph(&fixtures::coordination(1.0, 0.1), EXACT_TIE_TOL).unwrap();
        let a = Artifact {
            manifest: RunManifest {
                command: "analyze".into(),
                input_digest: "00".into(),
                flags: BTreeMap::from([("format".to_string(), "json".to_string())]),
                seed: 7,
                version: "0.1.0".into(),
                timestamp: 0,
            },
            result: analyze(&g),
        };
        let text = serde_json::to_string(&a).unwrap();
        let back: Artifact<AnalyzeSummary> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(quote("a1"), "a1");
        assert_eq!(quote("a,b"), "\"a,b\"");
        assert_eq!(quote("x\"y"), "\"x\"\"y\"");
    }
}
