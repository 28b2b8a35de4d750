//! Seeded experiment runs and parameter sweeps.
//!
//! Labeled samples are drawn on RNG stream 1 of the run seed; clustering uses
//! stream 0, so changing the label draw never perturbs initialization.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{run_kmeans, run_mpck, ClusterModel, MpckConfig};
use crate::constraints::{constraints_from_labels, ConstraintSet, LabeledSample};
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::message::{Corpus, LabelVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// Exactly `c` labels per class.
    Balanced,
    /// Per-class counts uniform in `1..=c`, at least one class at `c`.
    Unbalanced,
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(LabelMode::Balanced),
            "unbalanced" => Ok(LabelMode::Unbalanced),
            _ => Err(Error::InvalidInput(format!("unknown label mode `{s}`"))),
        }
    }
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelMode::Balanced => "balanced",
            LabelMode::Unbalanced => "unbalanced",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kmeans,
    Mpck,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Algorithm::Kmeans),
            "mpck" => Ok(Algorithm::Mpck),
            _ => Err(Error::InvalidInput(format!("unknown algorithm `{s}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Mpck => "mpck",
        })
    }
}

fn label_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Draws labeled samples from the reference labels. Classes without members
/// are skipped. Samples come back sorted by index.
pub fn draw_labeled_samples(
    labels: &LabelVector,
    per_class: usize,
    mode: LabelMode,
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    let members = labels.class_members();
    let present: Vec<usize> = (0..members.len()).filter(|&c| !members[c].is_empty()).collect();
    if present.is_empty() {
        return Err(Error::NoLabels);
    }
    let mut rng = label_rng(seed);
    let mut counts = vec![0usize; members.len()];
    match mode {
        LabelMode::Balanced => present.iter().for_each(|&c| counts[c] = per_class),
        LabelMode::Unbalanced if per_class > 0 => {
            for &c in &present {
                counts[c] = rng.random_range(1..=per_class);
            }
            counts[present[rng.random_range(0..present.len())]] = per_class;
        }
        LabelMode::Unbalanced => {}
    }
    let mut samples = Vec::new();
    for &c in &present {
        if counts[c] > members[c].len() {
            return Err(Error::InsufficientLabels { class: c, requested: counts[c], available: members[c].len() });
        }
        samples
            .extend(members[c].choose_multiple(&mut rng, counts[c]).map(|&index| LabeledSample { index, class_id: c }));
    }
    samples.sort_unstable();
    Ok(samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRequest {
    pub algorithm: Algorithm,
    pub k: usize,
    pub labels_per_class: usize,
    pub mode: LabelMode,
    pub seed: u64,
    pub w: f64,
    pub w_bar: f64,
    pub max_iterations: usize,
    pub objective_tolerance: f64,
}

impl ClusterRequest {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        let defaults = MpckConfig::new(k);
        ClusterRequest {
            algorithm,
            k,
            labels_per_class: 5,
            mode: LabelMode::Balanced,
            seed: 0,
            w: 1.0,
            w_bar: 1.0,
            max_iterations: defaults.max_iterations,
            objective_tolerance: defaults.objective_tolerance,
        }
    }

    fn config(&self) -> MpckConfig {
        MpckConfig {
            max_iterations: self.max_iterations,
            objective_tolerance: self.objective_tolerance,
            ..MpckConfig::new(self.k).with_seed(self.seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub request: ClusterRequest,
    pub report: EvalReport,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub labeled: usize,
    pub must_links: usize,
    pub cannot_links: usize,
    /// Wall-clock seconds; not serialized so artifacts stay reproducible.
    #[serde(skip)]
    pub duration_secs: f64,
}

/// Runs one clustering and scores it against `labels`. k-means ignores the
/// label settings and uses no constraints.
pub fn run_experiment(
    corpus: &Corpus,
    labels: &LabelVector,
    request: &ClusterRequest,
) -> Result<(ExperimentResult, ClusterModel)> {
    let start = Instant::now();
    let config = request.config();
    let (model, labeled, constraints) = match request.algorithm {
        Algorithm::Kmeans => (run_kmeans(corpus, &config)?, 0, ConstraintSet::empty()),
        Algorithm::Mpck => {
            let samples = draw_labeled_samples(labels, request.labels_per_class, request.mode, request.seed)?;
            let constraints = constraints_from_labels(&samples, request.w, request.w_bar)?;
            (run_mpck(corpus, &constraints, &config)?, samples.len(), constraints)
        }
    };
    let result = ExperimentResult {
        request: request.clone(),
        report: EvalReport::new(&model.assignments, labels)?,
        objective: model.objective,
        iterations: model.iterations,
        converged: model.converged,
        labeled,
        must_links: constraints.must_links().len(),
        cannot_links: constraints.cannot_links().len(),
        duration_secs: start.elapsed().as_secs_f64(),
    };
    Ok((result, model))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: usize,
    pub seed: u64,
    pub purity: f64,
    pub ari: f64,
    pub objective: f64,
    pub iterations: usize,
    pub must_links: usize,
    pub cannot_links: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMean {
    pub param: usize,
    pub purity: f64,
    pub ari: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// CSV column name of the swept parameter.
    pub param_name: String,
    /// Ordered by parameter, then by seed position.
    pub rows: Vec<SweepRow>,
    pub means: Vec<SweepMean>,
}

impl Sweep {
    fn from_rows(param_name: &str, params: &[usize], rows: Vec<SweepRow>) -> Self {
        let means = params
            .iter()
            .map(|&p| {
                let runs: Vec<&SweepRow> = rows.iter().filter(|r| r.param == p).collect();
                let n = runs.len() as f64;
                SweepMean {
                    param: p,
                    purity: runs.iter().map(|r| r.purity).sum::<f64>() / n,
                    ari: runs.iter().map(|r| r.ari).sum::<f64>() / n,
                }
            })
            .collect();
        Sweep { param_name: param_name.to_owned(), rows, means }
    }

    /// Parameter with the highest mean ARI; ties go to the smallest.
    pub fn best(&self) -> Option<&SweepMean> {
        self.means.iter().fold(None, |best: Option<&SweepMean>, m| match best {
            Some(b) if b.ari >= m.ari => Some(b),
            _ => Some(m),
        })
    }

    /// Consecutive parameter pairs whose mean ARI decreases.
    pub fn monotonicity_violations(&self) -> Vec<(usize, usize)> {
        self.means.windows(2).filter(|p| p[1].ari < p[0].ari).map(|p| (p[0].param, p[1].param)).collect()
    }

    /// One row per run, then one `mean` row per parameter value.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},seed,purity,ari,objective,iterations,must_links,cannot_links\n", self.param_name);
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.param, r.seed, r.purity, r.ari, r.objective, r.iterations, r.must_links, r.cannot_links
            );
        }
        for m in &self.means {
            let _ = writeln!(out, "{},mean,{},{},,,,", m.param, m.purity, m.ari);
        }
        out
    }
}

fn sweep(
    corpus: &Corpus,
    labels: &LabelVector,
    param_name: &str,
    params: &[usize],
    seeds: &[u64],
    request_for: impl Fn(usize, u64) -> ClusterRequest + Sync,
) -> Result<Sweep> {
    if params.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidInput(format!("{param_name} sweep needs at least one value and one seed")));
    }
    let jobs: Vec<(usize, u64)> = params.iter().flat_map(|&p| seeds.iter().map(move |&s| (p, s))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(param, seed)| {
            let (r, _) = run_experiment(corpus, labels, &request_for(param, seed))?;
            Ok(SweepRow {
                param,
                seed,
                purity: r.report.purity,
                ari: r.report.ari,
                objective: r.objective,
                iterations: r.iterations,
                must_links: r.must_links,
                cannot_links: r.cannot_links,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep::from_rows(param_name, params, rows))
}

/// One run per `(K, seed)` with every other setting taken from `base`.
pub fn sweep_k(
    corpus: &Corpus,
    labels: &LabelVector,
    ks: &[usize],
    seeds: &[u64],
    base: &ClusterRequest,
) -> Result<Sweep> {
    sweep(corpus, labels, "k", ks, seeds, |k, seed| ClusterRequest { k, seed, ..base.clone() })
}

/// One run per `(labels per class, seed)` with every other setting taken from `base`.
pub fn sweep_labels(
    corpus: &Corpus,
    labels: &LabelVector,
    counts: &[usize],
    seeds: &[u64],
    base: &ClusterRequest,
) -> Result<Sweep> {
    sweep(corpus, labels, "labels_per_class", counts, seeds, |labels_per_class, seed| ClusterRequest {
        labels_per_class,
        seed,
        ..base.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> LabelVector {
        LabelVector::from_classes(&[0, 0, 0, 1, 1, 1, 1, 2, 2, 2])
    }

    #[test]
    fn balanced_draw() {
        let s = draw_labeled_samples(&labels(), 2, LabelMode::Balanced, 4).unwrap();
        assert_eq!(s.len(), 6);
        for c in 0..3 {
            assert_eq!(s.iter().filter(|x| x.class_id == c).count(), 2);
        }
        assert!(s.iter().all(|x| labels().get(x.index) == Some(x.class_id)));
        assert!(s.windows(2).all(|p| p[0].index < p[1].index));
        assert_eq!(s, draw_labeled_samples(&labels(), 2, LabelMode::Balanced, 4).unwrap());
    }

    #[test]
    fn unbalanced_draw() {
        for seed in 0..20 {
            let s = draw_labeled_samples(&labels(), 3, LabelMode::Unbalanced, seed).unwrap();
            let counts: Vec<usize> = (0..3).map(|c| s.iter().filter(|x| x.class_id == c).count()).collect();
            assert!(counts.iter().all(|&n| (1..=3).contains(&n)));
            assert!(counts.contains(&3));
        }
    }

    #[test]
    fn insufficient_labels() {
        assert!(matches!(
            draw_labeled_samples(&labels(), 4, LabelMode::Balanced, 0),
            Err(Error::InsufficientLabels { class: 0, requested: 4, available: 3 })
        ));
    }

    #[test]
    fn sweep_summary() {
        let row = |param, seed, ari| SweepRow {
            param,
            seed,
            purity: 1.0,
            ari,
            objective: 0.0,
            iterations: 1,
            must_links: 0,
            cannot_links: 0,
        };
        let sweep =
            Sweep::from_rows("k", &[2, 3], vec![row(2, 0, 0.5), row(2, 1, 1.0), row(3, 0, 0.5), row(3, 1, 0.5)]);
        assert_eq!(sweep.best().unwrap().param, 2);
        assert_eq!(sweep.monotonicity_violations(), vec![(2, 3)]);
        let csv = sweep.to_csv();
        assert!(csv.starts_with("k,seed,purity,ari,"));
        assert!(csv.contains("\n2,mean,1,0.75,,,,\n"));
    }
}
