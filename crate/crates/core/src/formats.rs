//! JSON input formats (`"format": "sinkrank-v1"`): stochastic games,
//! meta-games and bare graphs. Errors carry the line of the offending key.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::game_model::{MetaGame, StochasticGame};
use crate::response_graph::SbrGraph;

pub const FORMAT_TAG: &str = "sinkrank-v1";

/// A stochastic game plus the optional list of policies to use as strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct GameDoc {
    pub game: StochasticGame,
    /// `policies[i][k][x]`; `None` means enumerate every deterministic policy.
    pub policies: Option<Vec<Vec<Vec<usize>>>>,
}

#[derive(Debug, Clone)]
pub enum Document {
    Game(GameDoc),
    Meta(MetaGame),
    Graph(SbrGraph),
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, key: &str) -> Option<usize> {
        let needle = format!("\"{key}\"");
        self.text
            .find(&needle)
            .map(|pos| self.text[..pos].matches('\n').count() + 1)
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        match self.line_of(key) {
            Some(l) => Error::Format(format!("line {l}: {msg}")),
            None => Error::Format(msg.to_string()),
        }
    }

    fn field<'v>(&self, obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value> {
        obj.get(key)
            .ok_or_else(|| Error::Format(format!("missing required field \"{key}\"")))
    }

    fn number(&self, key: &str, v: &Value, what: &str) -> Result<f64> {
        v.as_f64()
            .ok_or_else(|| self.err(key, format!("{what} must be a number, found {v}")))
    }

    fn strings(&self, key: &str, v: &Value) -> Result<Vec<String>> {
        let arr = v
            .as_array()
            .ok_or_else(|| self.err(key, format!("\"{key}\" must be an array of names")))?;
        let out: Vec<String> = arr
            .iter()
            .map(|s| {
                s.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| self.err(key, format!("\"{key}\" entries must be strings, found {s}")))
            })
            .collect::<Result<_>>()?;
        if out.is_empty() {
            return Err(self.err(key, format!("\"{key}\" is empty")));
        }
        for (i, a) in out.iter().enumerate() {
            if out[..i].contains(a) {
                return Err(self.err(key, format!("duplicate name '{a}' in \"{key}\"")));
            }
        }
        Ok(out)
    }

    fn name_lists(&self, key: &str, v: &Value) -> Result<Vec<Vec<String>>> {
        let arr = v
            .as_array()
            .ok_or_else(|| self.err(key, format!("\"{key}\" must be an array with one list per agent")))?;
        if arr.is_empty() {
            return Err(self.err(key, format!("\"{key}\" lists no agents")));
        }
        arr.iter()
            .enumerate()
            .map(|(i, a)| {
                self.strings(key, a)
                    .map_err(|e| self.err(key, format!("agent {i}: {}", strip(&e))))
            })
            .collect()
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Format(m) => match m.split_once(": ") {
            Some((l, rest)) if l.starts_with("line ") => rest.to_owned(),
            _ => m.clone(),
        },
        other => other.to_string(),
    }
}

fn parse_root(text: &str) -> Result<Map<String, Value>> {
    let v: Value = serde_json::from_str(text).map_err(|e| {
        Error::Format(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let Value::Object(obj) = v else {
        return Err(Error::Format("line 1: top level must be a JSON object".into()));
    };
    match obj.get("format").and_then(Value::as_str) {
        Some(FORMAT_TAG) => {}
        Some(other) => {
            return Err(Error::Format(format!(
                "unsupported format '{other}', expected '{FORMAT_TAG}'"
            )))
        }
        None => return Err(Error::Format(format!("missing \"format\": \"{FORMAT_TAG}\""))),
    }
    Ok(obj)
}

fn check_agents(ctx: &Ctx, obj: &Map<String, Value>, n: usize) -> Result<()> {
    if let Some(v) = obj.get("agents") {
        let a = v
            .as_u64()
            .ok_or_else(|| ctx.err("agents", "\"agents\" must be a positive integer"))?;
        if a as usize != n {
            return Err(ctx.err("agents", format!("\"agents\" is {a} but {n} agents are described")));
        }
    }
    Ok(())
}

/// Parse any of the three document kinds, chosen by their distinguishing field.
pub fn parse_document(text: &str) -> Result<Document> {
    let obj = parse_root(text)?;
    if obj.contains_key("nodes") {
        graph_from_obj(text, &obj).map(Document::Graph)
    } else if obj.contains_key("transition") {
        game_from_obj(text, &obj).map(Document::Game)
    } else if obj.contains_key("payoffs") {
        meta_from_obj(text, &obj).map(Document::Meta)
    } else {
        Err(Error::Format(
            "cannot tell the document kind: expected \"payoffs\", \"transition\" or \"nodes\"".into(),
        ))
    }
}

pub fn parse_meta(text: &str) -> Result<MetaGame> {
    meta_from_obj(text, &parse_root(text)?)
}

pub fn parse_game(text: &str) -> Result<GameDoc> {
    game_from_obj(text, &parse_root(text)?)
}

pub fn parse_graph(text: &str) -> Result<SbrGraph> {
    graph_from_obj(text, &parse_root(text)?)
}

fn flatten(ctx: &Ctx, key: &str, v: &Value, dims: &[usize], n: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) -> Result<()> {
    let arr = v.as_array().ok_or_else(|| {
        ctx.err(key, format!("\"{key}\"{:?} must be an array", path))
    })?;
    match dims.split_first() {
        Some((&d, rest)) => {
            if arr.len() != d {
                return Err(ctx.err(
                    key,
                    format!("\"{key}\"{path:?} has {} entries, expected {d}", arr.len()),
                ));
            }
            for (k, sub) in arr.iter().enumerate() {
                path.push(k);
                flatten(ctx, key, sub, rest, n, path, out)?;
                path.pop();
            }
        }
        None => {
            if arr.len() != n {
                return Err(ctx.err(
                    key,
                    format!("\"{key}\"{path:?} holds {} values, expected one per agent ({n})", arr.len()),
                ));
            }
            let row = arr
                .iter()
                .map(|x| ctx.number(key, x, &format!("\"{key}\"{path:?}")))
                .collect::<Result<Vec<f64>>>()?;
            out.push(row);
        }
    }
    Ok(())
}

fn meta_from_obj(text: &str, obj: &Map<String, Value>) -> Result<MetaGame> {
    let ctx = Ctx { text };
    let names = ctx.name_lists("strategies", ctx.field(obj, "strategies")?)?;
    let n = names.len();
    check_agents(&ctx, obj, n)?;
    let dims: Vec<usize> = names.iter().map(Vec::len).collect();
    let mut payoffs = Vec::new();
    flatten(&ctx, "payoffs", ctx.field(obj, "payoffs")?, &dims, n, &mut Vec::new(), &mut payoffs)?;
    let meta = match obj.get("std_err") {
        Some(v) => {
            let mut se = Vec::new();
            flatten(&ctx, "std_err", v, &dims, n, &mut Vec::new(), &mut se)?;
            MetaGame::from_estimates(names, payoffs, se)
        }
        None => MetaGame::from_table(names, payoffs),
    };
    meta.map_err(|e| ctx.err("payoffs", e))
}

fn game_from_obj(text: &str, obj: &Map<String, Value>) -> Result<GameDoc> {
    let ctx = Ctx { text };
    let states = ctx.strings("states", ctx.field(obj, "states")?)?;
    let actions = ctx.name_lists("actions", ctx.field(obj, "actions")?)?;
    let n = actions.len();
    check_agents(&ctx, obj, n)?;
    let nx = states.len();
    let state_index = |key: &str, name: &str| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ctx.err(key, format!("unknown state '{name}' in \"{key}\"")))
    };
    let joint = crate::game_model::ProfileSpace::new(actions.iter().map(Vec::len).collect())
        .map_err(|e| ctx.err("actions", e))?;
    let joint_index = |key: &str, label: &str| -> Result<usize> {
        let parts: Vec<&str> = label.split(',').map(str::trim).collect();
        if parts.len() != n {
            return Err(ctx.err(key, format!("joint action '{label}' must name {n} actions")));
        }
        let mut idx = Vec::with_capacity(n);
        for (i, p) in parts.iter().enumerate() {
            idx.push(
                actions[i]
                    .iter()
                    .position(|a| a == p)
                    .ok_or_else(|| ctx.err(key, format!("agent {i} has no action '{p}'")))?,
            );
        }
        Ok(joint.encode(&idx))
    };
    let table = |key: &str| -> Result<&Map<String, Value>> {
        ctx.field(obj, key)?
            .as_object()
            .ok_or_else(|| ctx.err(key, format!("\"{key}\" must map states to joint actions")))
    };

    let mut transition = vec![vec![Vec::new(); joint.size()]; nx];
    for (x_name, per_action) in table("transition")? {
        let x = state_index("transition", x_name)?;
        let per_action = per_action
            .as_object()
            .ok_or_else(|| ctx.err(x_name, format!("transition of state '{x_name}' must be an object")))?;
        for (a_label, dist) in per_action {
            let a = joint_index(a_label, a_label)?;
            let dist = dist
                .as_object()
                .ok_or_else(|| ctx.err(a_label, format!("transition ({x_name}, {a_label}) must map states to probabilities")))?;
            let mut row = vec![0.0; nx];
            for (y_name, p) in dist {
                let y = state_index("transition", y_name)?;
                row[y] = ctx.number(a_label, p, &format!("P({y_name} | {x_name}, {a_label})"))?;
            }
            transition[x][a] = row;
        }
    }
    let mut rewards = vec![vec![Vec::new(); joint.size()]; nx];
    for (x_name, per_action) in table("rewards")? {
        let x = state_index("rewards", x_name)?;
        let per_action = per_action
            .as_object()
            .ok_or_else(|| ctx.err("rewards", format!("rewards of state '{x_name}' must be an object")))?;
        for (a_label, r) in per_action {
            let a = joint_index("rewards", a_label)?;
            let r = match r {
                Value::Array(v) => v
                    .iter()
                    .map(|x| ctx.number("rewards", x, &format!("R({x_name}, {a_label})")))
                    .collect::<Result<Vec<f64>>>()?,
                other if n == 1 => vec![ctx.number("rewards", other, &format!("R({x_name}, {a_label})"))?],
                _ => return Err(ctx.err("rewards", format!("R({x_name}, {a_label}) must list {n} rewards"))),
            };
            rewards[x][a] = r;
        }
    }
    for x in 0..nx {
        for a in 0..joint.size() {
            let label = joint
                .decode(a)
                .iter()
                .enumerate()
                .map(|(i, &k)| actions[i][k].as_str())
                .collect::<Vec<_>>()
                .join(",");
            if transition[x][a].is_empty() {
                return Err(ctx.err("transition", format!("no transition for state '{}' under '{label}'", states[x])));
            }
            if rewards[x][a].is_empty() {
                return Err(ctx.err("rewards", format!("no reward for state '{}' under '{label}'", states[x])));
            }
        }
    }
    let discounts = ctx
        .field(obj, "discounts")?
        .as_array()
        .ok_or_else(|| ctx.err("discounts", "\"discounts\" must be an array"))?
        .iter()
        .map(|v| ctx.number("discounts", v, "discount"))
        .collect::<Result<Vec<f64>>>()?;

    let policies = match obj.get("policies") {
        None => None,
        Some(v) => {
            let per_agent = v
                .as_array()
                .filter(|a| a.len() == n)
                .ok_or_else(|| ctx.err("policies", format!("\"policies\" must hold one list per agent ({n})")))?;
            let mut out = Vec::with_capacity(n);
            for (i, list) in per_agent.iter().enumerate() {
                let list = list
                    .as_array()
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| ctx.err("policies", format!("agent {i} must list at least one policy")))?;
                let mut ps = Vec::with_capacity(list.len());
                for pol in list {
                    let map = pol
                        .as_object()
                        .ok_or_else(|| ctx.err("policies", "each policy maps states to actions"))?;
                    let mut acts = vec![usize::MAX; nx];
                    for (x_name, a) in map {
                        let x = state_index("policies", x_name)?;
                        let a = a.as_str().and_then(|a| actions[i].iter().position(|b| b == a)).ok_or_else(|| {
                            ctx.err("policies", format!("agent {i}: invalid action {a} in state '{x_name}'"))
                        })?;
                        acts[x] = a;
                    }
                    if let Some(x) = acts.iter().position(|&a| a == usize::MAX) {
                        return Err(ctx.err("policies", format!("agent {i}: a policy leaves state '{}' unassigned", states[x])));
                    }
                    ps.push(acts);
                }
                out.push(ps);
            }
            Some(out)
        }
    };
    let game = StochasticGame::new(states, actions, transition, rewards, discounts)
        .map_err(|e| ctx.err("transition", e))?;
    Ok(GameDoc { game, policies })
}

fn graph_from_obj(text: &str, obj: &Map<String, Value>) -> Result<SbrGraph> {
    let ctx = Ctx { text };
    let nodes = ctx.strings("nodes", ctx.field(obj, "nodes")?)?;
    let index = |name: &str| {
        nodes
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ctx.err("edges", format!("edge refers to unknown node '{name}'")))
    };
    let mut edges = Vec::new();
    if let Some(v) = obj.get("edges") {
        let arr = v
            .as_array()
            .ok_or_else(|| ctx.err("edges", "\"edges\" must be an array of [from, to] pairs"))?;
        for e in arr {
            match e.as_array().map(Vec::as_slice) {
                Some([Value::String(a), Value::String(b)]) => edges.push((index(a)?, index(b)?)),
                _ => return Err(ctx.err("edges", format!("edge {e} must be a [from, to] pair of node names"))),
            }
        }
    }
    let weights = match obj.get("weights") {
        None => None,
        Some(v) => {
            let map = v
                .as_object()
                .ok_or_else(|| ctx.err("weights", "\"weights\" must map node names to numbers"))?;
            let mut w = vec![f64::NAN; nodes.len()];
            for (name, x) in map {
                let i = nodes
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| ctx.err("weights", format!("weight for unknown node '{name}'")))?;
                w[i] = ctx.number("weights", x, &format!("weight of '{name}'"))?;
            }
            if let Some(i) = w.iter().position(|x| x.is_nan()) {
                return Err(ctx.err("weights", format!("node '{}' has no weight", nodes[i])));
            }
            Some(w)
        }
    };
    SbrGraph::from_edges(nodes, &edges, weights).map_err(|e| ctx.err("edges", e))
}

fn nest(dims: &[usize], rows: &mut impl Iterator<Item = Vec<f64>>) -> Value {
    match dims.split_first() {
        Some((&d, rest)) => Value::Array((0..d).map(|_| nest(rest, rows)).collect()),
        None => json!(rows.next().expect("table covers the profile space")),
    }
}

pub fn meta_to_json(meta: &MetaGame) -> Value {
    let dims = meta.space().dims().to_vec();
    let mut v = json!({
        "format": FORMAT_TAG,
        "agents": meta.agents(),
        "strategies": meta.strategy_names(),
        "payoffs": nest(&dims, &mut meta.payoff_table().iter().cloned()),
    });
    if let Some(se) = meta.std_err_table() {
        v["std_err"] = nest(&dims, &mut se.iter().cloned());
    }
    v
}

pub fn graph_to_json(graph: &SbrGraph) -> Value {
    let edges: Vec<[&str; 2]> = graph
        .edges()
        .map(|(a, e)| [graph.label(a), graph.label(e.to)])
        .collect();
    let mut v = json!({
        "format": FORMAT_TAG,
        "nodes": graph.labels(),
        "edges": edges,
    });
    if let Some(w) = graph.weights() {
        let map: Map<String, Value> = graph
            .labels()
            .iter()
            .zip(w)
            .map(|(l, x)| (l.clone(), json!(x)))
            .collect();
        v["weights"] = Value::Object(map);
    }
    v
}

pub fn game_to_json(doc: &GameDoc) -> Value {
    let g = &doc.game;
    let states = g.state_names();
    let actions = g.action_names();
    let joint = g.joint_actions();
    let label = |a: usize| {
        joint
            .decode(a)
            .iter()
            .enumerate()
            .map(|(i, &k)| actions[i][k].as_str())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut transition = Map::new();
    let mut rewards = Map::new();
    for (x, xn) in states.iter().enumerate() {
        let mut t = Map::new();
        let mut r = Map::new();
        for a in 0..joint.size() {
            let dist: Map<String, Value> = g
                .transition(x, a)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p != 0.0)
                .map(|(y, &p)| (states[y].clone(), json!(p)))
                .collect();
            t.insert(label(a), Value::Object(dist));
            r.insert(
                label(a),
                json!((0..g.agents()).map(|i| g.reward(x, a, i)).collect::<Vec<_>>()),
            );
        }
        transition.insert(xn.clone(), Value::Object(t));
        rewards.insert(xn.clone(), Value::Object(r));
    }
    let mut v = json!({
        "format": FORMAT_TAG,
        "agents": g.agents(),
        "states": states,
        "actions": actions,
        "transition": transition,
        "rewards": rewards,
        "discounts": g.discounts(),
    });
    if let Some(p) = &doc.policies {
        let pols: Vec<Vec<Map<String, Value>>> = p
            .iter()
            .enumerate()
            .map(|(i, list)| {
                list.iter()
                    .map(|acts| {
                        acts.iter()
                            .enumerate()
                            .map(|(x, &a)| (states[x].clone(), json!(actions[i][a])))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        v["policies"] = json!(pols);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn meta_round_trip() {
        let meta = fixtures::fig2(0.25);
        let text = serde_json::to_string_pretty(&meta_to_json(&meta)).unwrap();
        assert_eq!(parse_meta(&text).unwrap(), meta);
    }

    #[test]
    fn graph_round_trip() {
        let g = fixtures::fig1a_graph();
        let text = serde_json::to_string(&graph_to_json(&g)).unwrap();
        let back = parse_graph(&text).unwrap();
        assert_eq!(back.labels(), g.labels());
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        assert_eq!(back.weights(), g.weights());
    }

    #[test]
    fn empty_strategy_set_is_a_schema_error() {
        let text = "{\n  \"format\": \"sinkrank-v1\",\n  \"agents\": 2,\n  \"strategies\": [[\"a\"], []],\n  \"payoffs\": []\n}";
        let err = parse_meta(text).unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        assert!(err.contains("empty"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "{\n \"format\": \"sinkrank-v1\",\n \"payoffs\": [1,,2]\n}";
        let err = parse_document(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn wrong_format_tag() {
        let err = parse_meta("{\"format\": \"v0\", \"strategies\": [[\"a\"]], \"payoffs\": [[1]]}").unwrap_err();
        assert!(err.to_string().contains("sinkrank-v1"));
    }

    #[test]
    fn game_document() {
        let text = r#"{
  "format": "sinkrank-v1",
  "agents": 1,
  "states": ["x0", "x1"],
  "actions": [["stay", "go"]],
  "transition": {
    "x0": {"stay": {"x0": 1.0}, "go": {"x1": 1.0}},
    "x1": {"stay": {"x1": 1.0}, "go": {"x0": 0.5, "x1": 0.5}}
  },
  "rewards": {
    "x0": {"stay": [1.0], "go": [0.0]},
    "x1": {"stay": 0.0, "go": [2.0]}
  },
  "discounts": [0.5],
  "policies": [[{"x0": "stay", "x1": "go"}, {"x0": "go", "x1": "go"}]]
}"#;
        let doc = parse_game(text).unwrap();
        assert_eq!(doc.game.states(), 2);
        assert_eq!(doc.policies.as_ref().unwrap()[0], vec![vec![0, 1], vec![1, 1]]);
        let again = serde_json::to_string(&game_to_json(&doc)).unwrap();
        assert_eq!(parse_game(&again).unwrap(), doc);
    }

    #[test]
    fn missing_transition_entry() {
        let text = r#"{"format": "sinkrank-v1", "states": ["x"], "actions": [["a", "b"]],
  "transition": {"x": {"a": {"x": 1.0}}},
  "rewards": {"x": {"a": [1.0], "b": [0.0]}}, "discounts": [0.9]}"#;
        let err = parse_game(text).unwrap_err().to_string();
        assert!(err.contains("under 'b'"), "{err}");
    }
}
