//! Independent reference implementations used as test oracles, and random
//! instance generators. Nothing here calls into the clustering code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use protoabs::{Corpus, FieldToken, LabeledSample, Message};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ARI by direct enumeration of all point pairs.
pub fn pair_count_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut neither) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_a += 1.0,
                (false, true) => only_b += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let pairs = both + only_a + only_b + neither;
    let same_a = both + only_a;
    let same_b = both + only_b;
    let expected = same_a * same_b / pairs;
    let max = 0.5 * (same_a + same_b);
    if max == expected {
        return if both == max { 1.0 } else { 0.0 };
    }
    (both - expected) / (max - expected)
}

/// Purity by listing each cluster's members and counting the majority class.
pub fn hand_purity(clusters: &[usize], classes: &[usize]) -> f64 {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&k, &c) in clusters.iter().zip(classes) {
        groups.entry(k).or_default().push(c);
    }
    let mut hits = 0;
    for members in groups.values() {
        let best = members.iter().map(|c| members.iter().filter(|&&x| x == *c).count()).max().unwrap();
        hits += best;
    }
    hits as f64 / clusters.len() as f64
}

pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, parts: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..parts)).collect()
}

/// Small random instance: token rows plus labeled samples.
#[derive(Clone, Debug)]
pub struct Instance {
    pub rows: Vec<Vec<String>>,
    pub samples: Vec<LabeledSample>,
}

impl Instance {
    pub fn corpus(&self) -> Corpus {
        let messages = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Message::new(r.iter().map(|t| FieldToken::new(t.as_str())).collect(), format!("p{i}")).unwrap()
            })
            .collect();
        Corpus::from_messages(messages).unwrap()
    }
}

/// `n` rows of `arity` tokens over a per-position alphabet of `symbols`
/// letters, with some suffix padding, and `labeled` points tagged with one of
/// `classes` classes.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    arity: usize,
    symbols: usize,
    labeled: usize,
    classes: usize,
) -> Instance {
    let rows = (0..n)
        .map(|_| {
            let len = if rng.random_bool(0.3) { rng.random_range(1..=arity) } else { arity };
            (0..arity)
                .map(|f| {
                    if f < len {
                        format!("F{f}={}", (b'a' + rng.random_range(0..symbols) as u8) as char)
                    } else {
                        "ABSENT".to_owned()
                    }
                })
                .collect()
        })
        .collect();
    let mut picked = BTreeSet::new();
    while picked.len() < labeled.min(n) {
        picked.insert(rng.random_range(0..n));
    }
    let samples =
        picked.into_iter().map(|index| LabeledSample { index, class_id: rng.random_range(0..classes) }).collect();
    Instance { rows, samples }
}

/// Two planted classes: each point copies one of two random prototypes and
/// resamples every field with probability `flip`. Labels follow the planted
/// class.
pub fn planted_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    arity: usize,
    symbols: usize,
    labeled: usize,
    flip: f64,
) -> Instance {
    let symbol =
        |rng: &mut ChaCha8Rng, f: usize| format!("F{f}={}", (b'a' + rng.random_range(0..symbols) as u8) as char);
    let prototypes: Vec<Vec<String>> = (0..2).map(|_| (0..arity).map(|f| symbol(rng, f)).collect()).collect();
    let classes: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let rows = classes
        .iter()
        .map(|&c| {
            (0..arity).map(|f| if rng.random_bool(flip) { symbol(rng, f) } else { prototypes[c][f].clone() }).collect()
        })
        .collect();
    let mut picked = BTreeSet::new();
    while picked.len() < labeled.min(n) {
        picked.insert(rng.random_range(0..n));
    }
    let samples = picked.into_iter().map(|index| LabeledSample { index, class_id: classes[index] }).collect();
    Instance { rows, samples }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn hamming(a: &[String], b: &[String]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64
}

/// Objective under unit metrics with per-field mode centroids, evaluated
/// straight from the definition.
pub fn unit_objective(inst: &Instance, assignment: &[usize], k: usize, w: f64, w_bar: f64) -> f64 {
    let arity = inst.rows[0].len();
    let mut total = 0.0;
    for h in 0..k {
        let members: Vec<&Vec<String>> =
            inst.rows.iter().zip(assignment).filter(|(_, &l)| l == h).map(|(r, _)| r).collect();
        for f in 0..arity {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in &members {
                *counts.entry(r[f].as_str()).or_default() += 1;
            }
            let mode = counts.values().copied().max().unwrap_or(0);
            total += (members.len() - mode) as f64;
        }
    }
    let labeled: Vec<(usize, usize)> = inst.samples.iter().map(|s| (s.index, s.class_id)).collect();
    let cannot_points: BTreeSet<usize> =
        labeled.iter().flat_map(|&(i, ci)| labeled.iter().filter(move |&&(_, cj)| cj != ci).map(move |_| i)).collect();
    let cannot_points: Vec<usize> = cannot_points.into_iter().collect();
    let mut max_sq: f64 = 0.0;
    for (a, &p) in cannot_points.iter().enumerate() {
        for &q in &cannot_points[a + 1..] {
            max_sq = max_sq.max(hamming(&inst.rows[p], &inst.rows[q]));
        }
    }
    for (a, &(i, ci)) in labeled.iter().enumerate() {
        for &(j, cj) in &labeled[a + 1..] {
            let d = hamming(&inst.rows[i], &inst.rows[j]);
            if ci == cj && assignment[i] != assignment[j] {
                total += w * d;
            }
            if ci != cj && assignment[i] == assignment[j] {
                total += w_bar * (max_sq - d);
            }
        }
    }
    total
}

/// Minimum of [`unit_objective`] over all assignments into two non-empty clusters.
pub fn exhaustive_two_cluster_optimum(inst: &Instance, w: f64, w_bar: f64) -> f64 {
    let n = inst.rows.len();
    let mut best = f64::INFINITY;
    for mask in 1..(1u32 << n) - 1 {
        let assignment: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        best = best.min(unit_objective(inst, &assignment, 2, w, w_bar));
    }
    best
}
