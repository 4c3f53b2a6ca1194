//! Shared helpers for the integration tests: a plain-loop reference evaluator
//! and access to the shipped scenarios.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use aibt::btree::NodeKind;
use aibt::domain::GroundAction;
use aibt::scenario::Scenario;

pub const EPS: f64 = 1e-16;

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn scenario_path(name: &str) -> PathBuf {
    scenario_dir().join(format!("{name}.toml"))
}

pub fn load(name: &str) -> Scenario {
    Scenario::from_path(scenario_path(name)).unwrap_or_else(|e| panic!("{e}"))
}

pub fn shipped() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "toml").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

/// Every action a prior node of the scenario can choose, by label.
pub fn candidate_table(s: &Scenario) -> BTreeMap<String, GroundAction> {
    let mut out = BTreeMap::new();
    for node in s.tree.nodes() {
        if let NodeKind::Prior { params, .. } = &node.kind {
            for a in s.domain.candidates(params) {
                out.insert(a.label(), a);
            }
        }
    }
    out
}

fn ln(p: f64) -> f64 {
    p.max(EPS).ln()
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let top = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// One state factor: `a[o][s]`, `b[action][to][from]`.
#[derive(Debug, Clone)]
pub struct RefFactor {
    pub a: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub c: Vec<f64>,
    pub obs: Option<Vec<f64>>,
    pub b: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct RefOutcome {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub pi: Vec<f64>,
    /// `[policy][factor][step]`
    pub s: Vec<Vec<[Vec<f64>; 2]>>,
}

/// `ln(B) v` at `[to]`.
fn log_b_fwd(b: &[Vec<f64>], v: &[f64], to: usize) -> f64 {
    (0..v.len()).map(|from| ln(b[to][from]) * v[from]).sum()
}

/// `ln(B)ᵀ v` at `[from]`.
fn log_b_back(b: &[Vec<f64>], v: &[f64], from: usize) -> f64 {
    (0..v.len()).map(|to| ln(b[to][from]) * v[to]).sum()
}

fn log_a_evidence(a: &[Vec<f64>], o: &[f64], s: usize) -> f64 {
    (0..o.len()).map(|k| ln(a[k][s]) * o[k]).sum()
}

/// Two-step beliefs for one factor under action `u`: forward initialization,
/// then coordinate sweeps to a fixed point (tolerance 1e-6, at most 10 passes).
pub fn beliefs(f: &RefFactor, u: usize) -> [Vec<f64>; 2] {
    let m = f.d.len();
    let b = &f.b[u];
    let x0 = |s2: Option<&Vec<f64>>| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let mut x = ln(f.d[i]);
                if let Some(o) = &f.obs {
                    x += log_a_evidence(&f.a, o, i);
                }
                if let Some(n) = s2 {
                    x += log_b_back(b, n, i);
                }
                x
            })
            .collect()
    };
    let x1 = |s1: &Vec<f64>| -> Vec<f64> { (0..m).map(|i| log_b_fwd(b, s1, i)).collect() };
    let mut s1 = softmax(&x0(None));
    let mut s2 = softmax(&x1(&s1));
    for _ in 0..10 {
        let n1 = softmax(&x0(Some(&s2)));
        let mut change = n1.iter().zip(&s1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        s1 = n1;
        let n2 = softmax(&x1(&s1));
        change = n2.iter().zip(&s2).map(|(a, b)| (a - b).abs()).fold(change, f64::max);
        s2 = n2;
        if change < 1e-6 {
            break;
        }
    }
    [s1, s2]
}

pub fn free_energy(f: &RefFactor, u: usize, s: &[Vec<f64>; 2]) -> f64 {
    let m = f.d.len();
    let mut total = 0.0;
    for i in 0..m {
        let mut t = ln(s[0][i]) - ln(f.d[i]);
        if let Some(o) = &f.obs {
            t -= log_a_evidence(&f.a, o, i);
        }
        total += s[0][i] * t;
    }
    for i in 0..m {
        total += s[1][i] * (ln(s[1][i]) - log_b_fwd(&f.b[u], &s[0], i));
    }
    total
}

pub fn expected_free_energy(f: &RefFactor, s2: &[f64]) -> f64 {
    let (rows, cols) = (f.a.len(), s2.len());
    let mut g = 0.0;
    for k in 0..rows {
        let o: f64 = (0..cols).map(|j| f.a[k][j] * s2[j]).sum();
        g += o * (ln(o) - f.c[k]);
    }
    for j in 0..cols {
        let h: f64 = -(0..rows).map(|k| f.a[k][j] * ln(f.a[k][j])).sum::<f64>();
        g += s2[j] * h;
    }
    g
}

/// Scores every one-step policy `0..actions`.
pub fn evaluate(factors: &[RefFactor], actions: usize) -> RefOutcome {
    let mut out = RefOutcome { f: vec![], g: vec![], pi: vec![], s: vec![] };
    for u in 0..actions {
        let (mut f_total, mut g_total, mut s_all) = (0.0, 0.0, vec![]);
        for f in factors {
            let s = beliefs(f, u);
            f_total += free_energy(f, u, &s);
            if f.c.iter().any(|&v| v != 0.0) {
                g_total += expected_free_energy(f, &s[1]);
            }
            s_all.push(s);
        }
        out.f.push(f_total);
        out.g.push(g_total);
        out.s.push(s_all);
    }
    let neg: Vec<f64> = out.f.iter().zip(&out.g).map(|(f, g)| -f - g).collect();
    out.pi = softmax(&neg);
    out
}

/// First index within 1e-9 of the largest entry.
pub fn argmax(v: &[f64]) -> usize {
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v.iter().position(|&x| x >= top - 1e-9).expect("non-empty")
}
