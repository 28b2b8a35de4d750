//! MPCK-means over categorical messages, and the unsupervised k-means
//! baseline as its constraint-free, metric-free special case.
//!
//! The objective minimized is
//!
//! ```text
//! J = Σ_i [ d²(x_i, μ_{l_i})_{A_{l_i}} − log det A_{l_i} ]
//!   + Σ_{(i,j) ∈ ML} w · f_M(x_i, x_j) · 1[l_i ≠ l_j]
//!   + Σ_{(i,j) ∈ CL} w̄ · f_C(x_i, x_j) · 1[l_i = l_j]
//! ```
//!
//! with `f_M = ½ d²_{A_{l_i}} + ½ d²_{A_{l_j}}` and
//! `f_C = d²(x', x'')_{A_h} − d²(x_i, x_j)_{A_h}` for the cluster `h` both points
//! share, `(x', x'')` being the pair of cannot-linked points that is maximally
//! separated under `A_h`. Every `A_h` is diagonal, so `d²` is a weighted
//! Hamming distance.
//!
//! Each EM iteration visits the points in a seeded random order and greedily
//! reassigns each one (E-step), reseeds empty clusters, recomputes the
//! per-field mode centroids and, when enabled, the closed-form diagonal
//! metrics (M-step).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{neighborhoods, ConstraintSet};
use crate::error::{Error, Result};
use crate::message::{Corpus, Message};
use crate::metric::{
    distance_sq, max_pair_sorted, update_metric, weighted_mismatch, DiagonalMetric, FieldViolations, MaxPair,
    MetricBounds,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpckConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Stop once the objective changes by less than this between iterations.
    pub objective_tolerance: f64,
    pub seed: u64,
    pub metric_update_enabled: bool,
    pub bounds: MetricBounds,
}

impl MpckConfig {
    pub fn new(k: usize) -> Self {
        MpckConfig {
            k,
            max_iterations: 200,
            objective_tolerance: 1e-6,
            seed: 0,
            metric_update_enabled: true,
            bounds: MetricBounds::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_metric_updates(mut self, enabled: bool) -> Self {
        self.metric_update_enabled = enabled;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::TooManyClusters { k: self.k, n });
        }
        if self.objective_tolerance.is_nan() || self.objective_tolerance <= 0.0 {
            return Err(Error::InvalidInput("objective tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Bookkeeping for one EM iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// Objective carried through the assignment pass by per-move deltas.
    pub tracked_after_assignment: f64,
    /// The same state's objective recomputed from scratch.
    pub recomputed_after_assignment: f64,
    /// Objective after centroid and metric updates.
    pub objective: f64,
    pub reassigned: usize,
    pub reseeded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Message>,
    pub metrics: Vec<DiagonalMetric>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationStats>,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.assignments {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Max-separated pairs per cluster metric, over the cannot-linked points.
///
/// Restricting the search domain to points that take part in a cannot-link
/// keeps the refresh cheap and still bounds every cannot-link distance, so
/// `f_C` is non-negative by construction.
#[derive(Clone, Debug)]
pub struct PenaltyContext {
    domain: Vec<usize>,
    metrics: Vec<DiagonalMetric>,
    tables: Vec<Option<MaxPair>>,
    stale: bool,
}

impl PenaltyContext {
    pub fn new(corpus: &Corpus, constraints: &ConstraintSet, metrics: Vec<DiagonalMetric>) -> Self {
        let mut ctx = PenaltyContext {
            domain: constraints.cannot_linked_points(),
            tables: vec![None; metrics.len()],
            metrics,
            stale: true,
        };
        ctx.refresh(corpus);
        ctx
    }

    pub fn metrics(&self) -> &[DiagonalMetric] {
        &self.metrics
    }

    /// Replaces one cluster metric; the context is stale until [`refresh`](Self::refresh).
    pub fn set_metric(&mut self, cluster: usize, metric: DiagonalMetric) {
        self.metrics[cluster] = metric;
        self.stale = true;
    }

    pub fn refresh(&mut self, corpus: &Corpus) {
        for (table, metric) in self.tables.iter_mut().zip(&self.metrics) {
            *table = max_pair_sorted(&self.domain, corpus, metric.weights());
        }
        self.stale = false;
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }

    pub fn max_pair(&self, cluster: usize) -> Result<Option<MaxPair>> {
        if self.stale {
            return Err(Error::StaleContext);
        }
        Ok(self.tables[cluster])
    }

    fn max_sq(&self, cluster: usize) -> f64 {
        self.tables[cluster].map_or(0.0, |p| p.sq_distance)
    }
}

/// Must-link violation penalty.
pub fn f_must(x_i: &Message, x_j: &Message, m_i: &DiagonalMetric, m_j: &DiagonalMetric) -> Result<f64> {
    Ok(0.5 * distance_sq(x_i, x_j, m_i)? + 0.5 * distance_sq(x_i, x_j, m_j)?)
}

/// Cannot-link violation penalty for two points sharing `cluster`.
pub fn f_cannot(x_i: &Message, x_j: &Message, cluster: usize, ctx: &PenaltyContext) -> Result<f64> {
    let max_sq = ctx.max_pair(cluster)?.map_or(0.0, |p| p.sq_distance);
    Ok((max_sq - distance_sq(x_i, x_j, &ctx.metrics[cluster])?).max(0.0))
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn new(start: f64) -> Self {
        CompensatedSum { sum: start, compensation: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

struct Adjacency {
    must: Vec<Vec<usize>>,
    cannot: Vec<Vec<usize>>,
}

impl Adjacency {
    fn new(n: usize, constraints: &ConstraintSet) -> Result<Self> {
        if let Some(max) = constraints.max_index() {
            if max >= n {
                return Err(Error::InvalidInput(format!("constraint references message {max} but the corpus has {n}")));
            }
        }
        let mut must = vec![Vec::new(); n];
        let mut cannot = vec![Vec::new(); n];
        for &(a, b) in constraints.must_links() {
            must[a].push(b);
            must[b].push(a);
        }
        for &(a, b) in constraints.cannot_links() {
            cannot[a].push(b);
            cannot[b].push(a);
        }
        Ok(Adjacency { must, cannot })
    }
}

/// Everything the objective depends on, borrowed.
struct State<'a> {
    corpus: &'a Corpus,
    constraints: &'a ConstraintSet,
    adjacency: &'a Adjacency,
    centroids: &'a [Vec<u32>],
    ctx: &'a PenaltyContext,
    log_dets: &'a [f64],
    assignments: &'a [usize],
}

impl State<'_> {
    fn weights(&self, h: usize) -> &[f64] {
        self.ctx.metrics[h].weights()
    }

    fn f_cannot_codes(&self, i: usize, j: usize, h: usize) -> f64 {
        let d = weighted_mismatch(self.corpus.codes(i), self.corpus.codes(j), self.weights(h));
        (self.ctx.max_sq(h) - d).max(0.0)
    }

    fn f_must_codes(&self, i: usize, j: usize, h_i: usize, h_j: usize) -> f64 {
        let (xi, xj) = (self.corpus.codes(i), self.corpus.codes(j));
        0.5 * weighted_mismatch(xi, xj, self.weights(h_i)) + 0.5 * weighted_mismatch(xi, xj, self.weights(h_j))
    }

    /// Cost of placing point `i` in each cluster, all other assignments fixed.
    fn point_costs(&self, i: usize, out: &mut [f64]) {
        let xi = self.corpus.codes(i);
        for (h, cost) in out.iter_mut().enumerate() {
            *cost = weighted_mismatch(xi, &self.centroids[h], self.weights(h)) - self.log_dets[h];
        }
        let w = self.constraints.w;
        for &j in &self.adjacency.must[i] {
            let l_j = self.assignments[j];
            for (h, cost) in out.iter_mut().enumerate() {
                if h != l_j {
                    *cost += w * self.f_must_codes(i, j, h, l_j);
                }
            }
        }
        let w_bar = self.constraints.w_bar;
        for &j in &self.adjacency.cannot[i] {
            let l_j = self.assignments[j];
            out[l_j] += w_bar * self.f_cannot_codes(i, j, l_j);
        }
    }

    fn objective(&self) -> f64 {
        let mut total = CompensatedSum::default();
        for (i, &l) in self.assignments.iter().enumerate() {
            total.add(weighted_mismatch(self.corpus.codes(i), &self.centroids[l], self.weights(l)));
            total.add(-self.log_dets[l]);
        }
        for &(i, j) in self.constraints.must_links() {
            let (l_i, l_j) = (self.assignments[i], self.assignments[j]);
            if l_i != l_j {
                total.add(self.constraints.w * self.f_must_codes(i, j, l_i, l_j));
            }
        }
        for &(i, j) in self.constraints.cannot_links() {
            let l = self.assignments[i];
            if l == self.assignments[j] {
                total.add(self.constraints.w_bar * self.f_cannot_codes(i, j, l));
            }
        }
        total.value()
    }
}

/// Per-field mode of `members`; ties go to the lexicographically smallest token.
fn mode_codes(corpus: &Corpus, members: &[usize]) -> Vec<u32> {
    (0..corpus.arity())
        .map(|pos| {
            let mut counts = vec![0usize; corpus.vocabulary(pos).len()];
            for &i in members {
                counts[corpus.codes(i)[pos] as usize] += 1;
            }
            let mut best = 0u32;
            for (code, &count) in counts.iter().enumerate().skip(1) {
                let best_count = counts[best as usize];
                if count > best_count
                    || (count == best_count && corpus.token(pos, code as u32) < corpus.token(pos, best))
                {
                    best = code as u32;
                }
            }
            best
        })
        .collect()
}

fn members_by_cluster(assignments: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (i, &l) in assignments.iter().enumerate() {
        members[l].push(i);
    }
    members
}

fn check_assignments(assignments: &[usize], n: usize, k: usize) -> Result<()> {
    if assignments.len() != n {
        return Err(Error::InvalidInput(format!("{} assignments for {n} messages", assignments.len())));
    }
    if let Some(bad) = assignments.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidInput(format!("assignment {bad} outside 0..{k}")));
    }
    Ok(())
}

/// Per-field mode centroids of every cluster.
pub fn update_centroids(corpus: &Corpus, assignments: &[usize], k: usize) -> Result<Vec<Message>> {
    check_assignments(assignments, corpus.len(), k)?;
    members_by_cluster(assignments, k)
        .iter()
        .enumerate()
        .map(|(h, members)| {
            if members.is_empty() {
                return Err(Error::EmptyCluster { cluster: Some(h) });
            }
            corpus.decode_centroid(&mode_codes(corpus, members), format!("centroid-{h}"))
        })
        .collect()
}

struct ModelView {
    adjacency: Adjacency,
    centroids: Vec<Vec<u32>>,
    log_dets: Vec<f64>,
}

impl ModelView {
    fn new(corpus: &Corpus, model: &ClusterModel, constraints: &ConstraintSet) -> Result<Self> {
        check_assignments(&model.assignments, corpus.len(), model.k)?;
        if model.centroids.len() != model.k || model.metrics.len() != model.k {
            return Err(Error::InvalidInput("model has inconsistent cluster count".into()));
        }
        for m in &model.metrics {
            if m.arity() != corpus.arity() {
                return Err(Error::ArityMismatch { expected: corpus.arity(), found: m.arity() });
            }
        }
        Ok(ModelView {
            adjacency: Adjacency::new(corpus.len(), constraints)?,
            centroids: model.centroids.iter().map(|c| corpus.encode(c)).collect::<Result<_>>()?,
            log_dets: model.metrics.iter().map(DiagonalMetric::log_det).collect(),
        })
    }
}

/// Objective of a model's stored state, recomputed from scratch.
pub fn evaluate_objective(corpus: &Corpus, model: &ClusterModel, constraints: &ConstraintSet) -> Result<f64> {
    let view = ModelView::new(corpus, model, constraints)?;
    let ctx = PenaltyContext::new(corpus, constraints, model.metrics.clone());
    Ok(State {
        corpus,
        constraints,
        adjacency: &view.adjacency,
        centroids: &view.centroids,
        ctx: &ctx,
        log_dets: &view.log_dets,
        assignments: &model.assignments,
    }
    .objective())
}

/// Best cluster for point `i` with every other point's assignment held fixed.
/// Ties go to the smallest cluster id.
pub fn assign_point(
    i: usize,
    corpus: &Corpus,
    model: &ClusterModel,
    constraints: &ConstraintSet,
    ctx: &PenaltyContext,
) -> Result<usize> {
    if ctx.is_stale() {
        return Err(Error::StaleContext);
    }
    if i >= corpus.len() {
        return Err(Error::InvalidInput(format!("point {i} outside corpus of {}", corpus.len())));
    }
    let view = ModelView::new(corpus, model, constraints)?;
    let state = State {
        corpus,
        constraints,
        adjacency: &view.adjacency,
        centroids: &view.centroids,
        ctx,
        log_dets: &view.log_dets,
        assignments: &model.assignments,
    };
    let mut costs = vec![0.0; model.k];
    state.point_costs(i, &mut costs);
    Ok(argmin(&costs))
}

fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (h, &c) in costs.iter().enumerate().skip(1) {
        if c < costs[best] {
            best = h;
        }
    }
    best
}

/// Seeds centroids from the largest must-link neighborhoods, then
/// farthest-first under the unit Hamming metric.
fn initialize(
    corpus: &Corpus,
    constraints: &ConstraintSet,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<u32>>, Vec<usize>) {
    let n = corpus.len();
    let unit = vec![1.0; corpus.arity()];
    let mut centroids: Vec<Vec<u32>> = Vec::with_capacity(k);
    let mut assignments = vec![usize::MAX; n];
    for (h, hood) in neighborhoods(constraints).iter().take(k).enumerate() {
        centroids.push(mode_codes(corpus, &hood.members));
        for &m in &hood.members {
            assignments[m] = h;
        }
    }
    if centroids.is_empty() {
        centroids.push(corpus.codes(rng.random_range(0..n)).to_vec());
    }
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| centroids.iter().map(|c| weighted_mismatch(corpus.codes(i), c, &unit)).fold(f64::INFINITY, f64::min))
        .collect();
    while centroids.len() < k {
        let far = nearest.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..n).filter(|&i| nearest[i] == far).collect();
        let pick = tied[rng.random_range(0..tied.len())];
        let centroid = corpus.codes(pick).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(weighted_mismatch(corpus.codes(i), &centroid, &unit));
        }
        centroids.push(centroid);
    }
    for (i, l) in assignments.iter_mut().enumerate() {
        if *l == usize::MAX {
            let costs: Vec<f64> = centroids.iter().map(|c| weighted_mismatch(corpus.codes(i), c, &unit)).collect();
            *l = argmin(&costs);
        }
    }
    (centroids, assignments)
}

/// MPCK-means. See the module docs for the objective and iteration order.
pub fn run_mpck(corpus: &Corpus, constraints: &ConstraintSet, config: &MpckConfig) -> Result<ClusterModel> {
    let n = corpus.len();
    let k = config.k;
    config.validate(n)?;
    let adjacency = Adjacency::new(n, constraints)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (mut centroids, mut assignments) = initialize(corpus, constraints, k, &mut rng);
    let mut ctx = PenaltyContext::new(corpus, constraints, vec![DiagonalMetric::unit(corpus.arity()); k]);
    let mut log_dets = vec![0.0; k];

    macro_rules! state {
        () => {
            State {
                corpus,
                constraints,
                adjacency: &adjacency,
                centroids: &centroids,
                ctx: &ctx,
                log_dets: &log_dets,
                assignments: &assignments,
            }
        };
    }

    let mut objective = state!().objective();
    let mut history = Vec::new();
    let mut converged = false;
    let mut order: Vec<usize> = (0..n).collect();
    let mut costs = vec![0.0; k];

    for iteration in 1..=config.max_iterations {
        order.shuffle(&mut rng);
        let mut tracked = CompensatedSum::new(objective);
        let mut reassigned = 0;
        for &i in &order {
            let current = assignments[i];
            state!().point_costs(i, &mut costs);
            let best = argmin(&costs);
            if best != current {
                tracked.add(costs[best] - costs[current]);
                assignments[i] = best;
                reassigned += 1;
            }
        }
        let recomputed = state!().objective();

        let reseeded = reseed_empty_clusters(corpus, &mut assignments, &mut centroids, ctx.metrics(), k);

        let members = members_by_cluster(&assignments, k);
        let mut moved = false;
        for (h, m) in members.iter().enumerate() {
            let mode = mode_codes(corpus, m);
            moved |= mode != centroids[h];
            centroids[h] = mode;
        }

        if config.metric_update_enabled {
            let violations = state!().field_violations(k);
            for (h, (m, v)) in members.iter().zip(&violations).enumerate() {
                let metric = update_metric(corpus, m, &centroids[h], v, &config.bounds)
                    .map_err(|_| Error::Invariant(format!("cluster {h} empty after reseeding")))?;
                log_dets[h] = metric.log_det();
                moved |= metric != ctx.metrics()[h];
                ctx.set_metric(h, metric);
            }
            ctx.refresh(corpus);
        }

        let next = state!().objective();
        history.push(IterationStats {
            iteration,
            tracked_after_assignment: tracked.value(),
            recomputed_after_assignment: recomputed,
            objective: next,
            reassigned,
            reseeded,
        });
        let delta = (objective - next).abs();
        objective = next;
        if (reassigned == 0 && reseeded == 0 && !moved) || delta < config.objective_tolerance {
            converged = true;
            break;
        }
    }

    Ok(ClusterModel {
        k,
        seed: config.seed,
        centroids: centroids
            .iter()
            .enumerate()
            .map(|(h, c)| corpus.decode_centroid(c, format!("centroid-{h}")))
            .collect::<Result<_>>()?,
        metrics: ctx.metrics().to_vec(),
        iterations: history.len(),
        assignments,
        objective,
        converged,
        history,
    })
}

impl State<'_> {
    /// Per-cluster violation tallies for the metric update, using the max
    /// pairs of the metrics currently in the context.
    fn field_violations(&self, k: usize) -> Vec<FieldViolations> {
        let arity = self.corpus.arity();
        let mut out = vec![FieldViolations::zeros(arity); k];
        let half_w = 0.5 * self.constraints.w;
        for &(i, j) in self.constraints.must_links() {
            let (l_i, l_j) = (self.assignments[i], self.assignments[j]);
            if l_i == l_j {
                continue;
            }
            for (f, (a, b)) in self.corpus.codes(i).iter().zip(self.corpus.codes(j)).enumerate() {
                if a != b {
                    out[l_i].must[f] += half_w;
                    out[l_j].must[f] += half_w;
                }
            }
        }
        let w_bar = self.constraints.w_bar;
        for &(i, j) in self.constraints.cannot_links() {
            let h = self.assignments[i];
            if h != self.assignments[j] {
                continue;
            }
            let Some(pair) = self.ctx.tables[h] else { continue };
            let (p, q) = (self.corpus.codes(pair.first), self.corpus.codes(pair.second));
            let (xi, xj) = (self.corpus.codes(i), self.corpus.codes(j));
            for f in 0..arity {
                let far = f64::from(u8::from(p[f] != q[f]));
                let near = f64::from(u8::from(xi[f] != xj[f]));
                out[h].cannot[f] += w_bar * (far - near);
            }
        }
        out
    }
}

/// Moves the point farthest from its own centroid into each empty cluster.
fn reseed_empty_clusters(
    corpus: &Corpus,
    assignments: &mut [usize],
    centroids: &mut [Vec<u32>],
    metrics: &[DiagonalMetric],
    k: usize,
) -> usize {
    let mut sizes = vec![0usize; k];
    for &l in assignments.iter() {
        sizes[l] += 1;
    }
    let mut reseeded = 0;
    for h in 0..k {
        if sizes[h] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &l) in assignments.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = weighted_mismatch(corpus.codes(i), &centroids[l], metrics[l].weights());
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let Some((i, _)) = best else { break };
        sizes[assignments[i]] -= 1;
        sizes[h] = 1;
        assignments[i] = h;
        centroids[h] = corpus.codes(i).to_vec();
        reseeded += 1;
    }
    reseeded
}

/// Classical k-means under unit Hamming distance: MPCK-means with no
/// constraints and frozen unit metrics.
pub fn run_kmeans(corpus: &Corpus, config: &MpckConfig) -> Result<ClusterModel> {
    let config = config.clone().with_metric_updates(false);
    run_mpck(corpus, &ConstraintSet::empty(), &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{build_corpus, FieldToken, RawMessage};

    fn corpus_of(rows: &[&[&str]]) -> Corpus {
        let raw: Vec<RawMessage> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| RawMessage::new(r.iter().map(|t| FieldToken::new(*t)).collect(), format!("m{i}")))
            .collect();
        let arity = rows.iter().map(|r| r.len()).max().unwrap();
        build_corpus(&raw, arity).unwrap()
    }

    fn metric(w: &[f64]) -> DiagonalMetric {
        DiagonalMetric::new(w.to_vec(), &MetricBounds::default()).unwrap()
    }

    #[test]
    fn f_must_examples() {
        let c = corpus_of(&[&["A", "B", "C"], &["X", "Y", "Z"], &["A", "Y", "Z"]]);
        let (a, b, d) = (c.message(0), c.message(1), c.message(2));
        let unit = DiagonalMetric::unit(3);
        assert_eq!(f_must(a, a, &unit, &unit).unwrap(), 0.0);
        assert_eq!(f_must(a, b, &unit, &unit).unwrap(), 3.0);
        // d² = 2 under unit weights, 4 under doubled weights.
        assert_eq!(f_must(a, d, &unit, &metric(&[2.0, 2.0, 2.0])).unwrap(), 3.0);
    }

    #[test]
    fn f_cannot_examples() {
        let c = corpus_of(&[&["A", "B"], &["X", "Y"], &["A", "Y"]]);
        let cs = ConstraintSet::new([], [(0, 1), (1, 2)], 1.0, 1.0).unwrap();
        let ctx = PenaltyContext::new(&c, &cs, vec![metric(&[2.0, 3.0])]);
        assert_eq!(ctx.max_pair(0).unwrap().unwrap(), MaxPair { first: 0, second: 1, sq_distance: 5.0 });
        assert_eq!(f_cannot(c.message(0), c.message(1), 0, &ctx).unwrap(), 0.0);
        assert_eq!(f_cannot(c.message(2), c.message(2), 0, &ctx).unwrap(), 5.0);
        assert_eq!(f_cannot(c.message(1), c.message(2), 0, &ctx).unwrap(), 3.0);
    }

    #[test]
    fn stale_context_rejected() {
        let c = corpus_of(&[&["A"], &["B"]]);
        let cs = ConstraintSet::new([], [(0, 1)], 1.0, 1.0).unwrap();
        let mut ctx = PenaltyContext::new(&c, &cs, vec![DiagonalMetric::unit(1)]);
        ctx.set_metric(0, metric(&[2.0]));
        assert!(matches!(f_cannot(c.message(0), c.message(1), 0, &ctx), Err(Error::StaleContext)));
        ctx.refresh(&c);
        assert_eq!(f_cannot(c.message(0), c.message(0), 0, &ctx).unwrap(), 2.0);
    }

    #[test]
    fn centroid_modes() {
        let c = corpus_of(&[&["A", "C"], &["A", "B"], &["B", "D"], &["A", "E"], &["Q", "R"]]);
        let cents = update_centroids(&c, &[0, 0, 1, 1, 2], 3).unwrap();
        // Tie between C and B at field 1 goes to B.
        assert_eq!(cents[0].fields(), &[FieldToken::new("A"), FieldToken::new("B")]);
        assert_eq!(cents[1].fields(), &[FieldToken::new("A"), FieldToken::new("D")]);
        assert_eq!(&cents[2], c.message(4));
        let c3 = corpus_of(&[&["A"], &["B"], &["A"]]);
        assert_eq!(update_centroids(&c3, &[0, 0, 0], 1).unwrap()[0].fields(), &[FieldToken::new("A")]);
        assert!(matches!(update_centroids(&c3, &[0, 0, 0], 2), Err(Error::EmptyCluster { cluster: Some(1) })));
    }

    fn model_with(c: &Corpus, assignments: Vec<usize>, k: usize, metrics: Vec<DiagonalMetric>) -> ClusterModel {
        ClusterModel {
            k,
            seed: 0,
            centroids: update_centroids(c, &assignments, k).unwrap(),
            assignments,
            metrics,
            objective: 0.0,
            iterations: 0,
            converged: true,
            history: vec![],
        }
    }

    #[test]
    fn objective_examples() {
        let c = corpus_of(&[&["A", "B"], &["A", "B"], &["A", "B"]]);
        let model = model_with(&c, vec![0, 0, 0], 1, vec![DiagonalMetric::unit(2)]);
        assert_eq!(evaluate_objective(&c, &model, &ConstraintSet::empty()).unwrap(), 0.0);

        // Points 0 and 1 are identical singletons' neighbours; the violated
        // must-link between 0 (cluster 0) and 2 (cluster 1) is the only cost.
        let c = corpus_of(&[&["A", "B"], &["A", "B"], &["A", "C"]]);
        let cs = ConstraintSet::new([(0, 2)], [], 1.0, 1.0).unwrap();
        let model = model_with(&c, vec![0, 0, 1], 2, vec![DiagonalMetric::unit(2); 2]);
        let expected = f_must(c.message(0), c.message(2), &model.metrics[0], &model.metrics[1]).unwrap();
        assert_eq!(expected, 1.0);
        assert_eq!(evaluate_objective(&c, &model, &cs).unwrap(), expected);
    }

    #[test]
    fn assignment_tie_breaks_low() {
        let c = corpus_of(&[&["A", "B"], &["A", "B"], &["A", "C"]]);
        let model = model_with(&c, vec![0, 1, 0], 2, vec![DiagonalMetric::unit(2); 2]);
        let cs = ConstraintSet::empty();
        let ctx = PenaltyContext::new(&c, &cs, model.metrics.clone());
        // Cluster 0 = {0, 2} has centroid [A, B], cluster 1 = {1} also [A, B].
        assert_eq!(assign_point(1, &c, &model, &cs, &ctx).unwrap(), 0);
    }

    #[test]
    fn cannot_link_pushes_point_away() {
        // Point 2 is closest to cluster 0 but cannot-linked to both members.
        let c = corpus_of(&[&["A", "B"], &["A", "B"], &["A", "C"], &["Z", "Z"]]);
        let cs = ConstraintSet::new([], [(0, 2), (1, 2), (0, 3)], 1.0, 10.0).unwrap();
        let model = model_with(&c, vec![0, 0, 1, 1], 2, vec![DiagonalMetric::unit(2); 2]);
        let ctx = PenaltyContext::new(&c, &cs, model.metrics.clone());
        // Cluster 0 cost: d²([A,C],[A,B]) = 1 plus 2·10·(2 − 1) = 21.
        // Cluster 1 centroid is the mode of {[A,C],[Z,Z]} = [A,C]: cost 0.
        assert_eq!(assign_point(2, &c, &model, &cs, &ctx).unwrap(), 1);
    }

    #[test]
    fn unconstrained_assignment_is_nearest_centroid() {
        let c = corpus_of(&[&["A", "B", "C"], &["A", "B", "D"], &["X", "Y", "Z"], &["X", "Y", "C"]]);
        let model = model_with(&c, vec![0, 0, 1, 1], 2, vec![DiagonalMetric::unit(3); 2]);
        let cs = ConstraintSet::empty();
        let ctx = PenaltyContext::new(&c, &cs, model.metrics.clone());
        for i in 0..4 {
            assert_eq!(assign_point(i, &c, &model, &cs, &ctx).unwrap(), i / 2);
        }
    }

    #[test]
    fn kmeans_edge_cases() {
        let c = corpus_of(&[&["A", "B"], &["A", "C"], &["D", "C"], &["E", "F"]]);
        let model = run_kmeans(&c, &MpckConfig::new(4)).unwrap();
        let mut sorted = model.assignments.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        assert_eq!(model.objective, 0.0);

        let model = run_kmeans(&c, &MpckConfig::new(1)).unwrap();
        assert_eq!(model.assignments, vec![0; 4]);
        assert_eq!(model.centroids[0].fields(), &[FieldToken::new("A"), FieldToken::new("C")]);

        assert!(matches!(run_kmeans(&c, &MpckConfig::new(5)), Err(Error::TooManyClusters { k: 5, n: 4 })));
    }

    #[test]
    fn model_objective_matches_recomputation() {
        let c = corpus_of(&[
            &["A", "B", "C"],
            &["A", "B", "D"],
            &["A", "Q", "C"],
            &["X", "Y", "Z"],
            &["X", "Y", "C"],
            &["X", "R", "Z"],
        ]);
        let cs = ConstraintSet::new([(0, 1)], [(0, 3), (2, 4)], 1.0, 1.0).unwrap();
        let model = run_mpck(&c, &cs, &MpckConfig::new(2).with_seed(7)).unwrap();
        let again = evaluate_objective(&c, &model, &cs).unwrap();
        assert!((model.objective - again).abs() < 1e-9);
        assert!(model.cluster_sizes().iter().all(|&s| s > 0));
    }
}
