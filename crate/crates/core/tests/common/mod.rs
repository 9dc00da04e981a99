#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sinkrank::game_model::{JointPolicy, StochasticGame};
use sinkrank::metrics::mean_weight;

/// Random digraph on n nodes containing the cycle 0 -> 1 -> ... -> 0, so it is
/// strongly connected.
pub fn strongly_connected(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let mut succ: Vec<Vec<usize>> = (0..n).map(|v| vec![(v + 1) % n]).collect();
    for u in 0..n {
        for v in 0..n {
            if u != v && v != (u + 1) % n && r.gen_bool(0.3) {
                succ[u].push(v);
            }
        }
    }
    succ
}

pub fn brute_min_cycle(succ: &[Vec<usize>], w: &[f64]) -> Option<f64> {
    fn dfs(succ: &[Vec<usize>], w: &[f64], start: usize, path: &mut Vec<usize>, best: &mut Option<f64>) {
        let u = *path.last().unwrap();
        for &v in &succ[u] {
            if v == start {
                let m = mean_weight(path.iter().map(|&x| w[x]));
                *best = Some(best.map_or(m, |b: f64| b.min(m)));
            } else if v > start && !path.contains(&v) {
                path.push(v);
                dfs(succ, w, start, path, best);
                path.pop();
            }
        }
    }
    let mut best = None;
    for s in 0..succ.len() {
        dfs(succ, w, s, &mut vec![s], &mut best);
    }
    best
}

pub fn brute_min_walk(succ: &[Vec<usize>], w: &[f64], m: usize) -> f64 {
    fn go(succ: &[Vec<usize>], w: &[f64], m: usize, walk: &mut Vec<usize>, best: &mut f64) {
        if walk.len() == m {
            *best = best.min(mean_weight(walk.iter().map(|&x| w[x])));
            return;
        }
        let u = *walk.last().unwrap();
        for &v in &succ[u] {
            walk.push(v);
            go(succ, w, m, walk, best);
            walk.pop();
        }
    }
    let mut best = f64::INFINITY;
    for s in 0..succ.len() {
        go(succ, w, m, &mut vec![s], &mut best);
    }
    best
}

pub fn random_game(r: &mut ChaCha8Rng) -> StochasticGame {
    let n = r.gen_range(1..=2);
    let nx = r.gen_range(1..=4);
    let actions: Vec<Vec<String>> = (0..n)
        .map(|i| (0..r.gen_range(1..=3)).map(|k| format!("a{i}{k}")).collect())
        .collect();
    let joint: usize = actions.iter().map(Vec::len).product();
    let mut transition = Vec::new();
    let mut rewards = Vec::new();
    for _ in 0..nx {
        let mut t = Vec::new();
        let mut rw = Vec::new();
        for _ in 0..joint {
            let raw: Vec<f64> = (0..nx).map(|_| r.gen_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let rest: f64 = row[1..].iter().sum();
            row[0] = 1.0 - rest;
            t.push(row);
            rw.push((0..n).map(|_| r.gen_range(-1.0..1.0)).collect());
        }
        transition.push(t);
        rewards.push(rw);
    }
    let discounts = (0..n).map(|_| r.gen_range(0.1..0.95)).collect();
    StochasticGame::new(
        (0..nx).map(|x| format!("x{x}")).collect(),
        actions,
        transition,
        rewards,
        discounts,
    )
    .unwrap()
}

pub fn value_iteration(g: &StochasticGame, policy: &JointPolicy, agent: usize) -> Vec<f64> {
    let nx = g.states();
    let beta = g.discounts()[agent];
    let joint: Vec<usize> = (0..nx)
        .map(|x| {
            let acts: Vec<usize> = policy.actions.iter().map(|a| a[x]).collect();
            g.joint_actions().encode(&acts)
        })
        .collect();
    let mut v = vec![0.0; nx];
    loop {
        let next: Vec<f64> = (0..nx)
            .map(|x| {
                let a = joint[x];
                g.reward(x, a, agent)
                    + beta * g.transition(x, a).iter().zip(&v).map(|(p, vy)| p * vy).sum::<f64>()
            })
            .collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff < 1e-14 {
            return v;
        }
    }
}

pub fn coin_game() -> StochasticGame {
    // reward 1 in "hi", 0 in "lo"; every step moves to a fair coin flip
    let t = vec![vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]];
    let r = vec![vec![vec![1.0]], vec![vec![0.0]]];
    StochasticGame::new(vec!["hi".into(), "lo".into()], vec![vec!["go".into()]], t, r, vec![0.8]).unwrap()
}

