//! Must-link / cannot-link constraints derived from a few labeled messages.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabeledSample {
    pub index: usize,
    pub class_id: usize,
}

/// Unordered index pair stored as `(min, max)`.
pub type Pair = (usize, usize);

fn pair(a: usize, b: usize) -> Pair {
    (a.min(b), a.max(b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    must_links: BTreeSet<Pair>,
    cannot_links: BTreeSet<Pair>,
    /// Must-link violation penalty.
    pub w: f64,
    /// Cannot-link violation penalty.
    pub w_bar: f64,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet::empty()
    }
}

impl ConstraintSet {
    pub fn empty() -> Self {
        ConstraintSet { must_links: BTreeSet::new(), cannot_links: BTreeSet::new(), w: 1.0, w_bar: 1.0 }
    }

    /// Normalizes pairs to `(min, max)`; self-pairs are rejected. No closure is
    /// applied, see [`close_constraints`].
    pub fn new(
        must_links: impl IntoIterator<Item = Pair>,
        cannot_links: impl IntoIterator<Item = Pair>,
        w: f64,
        w_bar: f64,
    ) -> Result<Self> {
        if !(w >= 0.0 && w_bar >= 0.0 && w.is_finite() && w_bar.is_finite()) {
            return Err(Error::InvalidInput(format!("penalties must be non-negative, got w={w} w_bar={w_bar}")));
        }
        let normalize = |pairs: &mut dyn Iterator<Item = Pair>| -> Result<BTreeSet<Pair>> {
            pairs
                .map(|(a, b)| {
                    if a == b {
                        Err(Error::InvalidInput(format!("constraint pair ({a}, {b}) links a point to itself")))
                    } else {
                        Ok(pair(a, b))
                    }
                })
                .collect()
        };
        let must_links = normalize(&mut must_links.into_iter())?;
        let cannot_links = normalize(&mut cannot_links.into_iter())?;
        if let Some(&(a, b)) = must_links.intersection(&cannot_links).next() {
            return Err(Error::InconsistentConstraints(a, b));
        }
        Ok(ConstraintSet { must_links, cannot_links, w, w_bar })
    }

    pub fn must_links(&self) -> &BTreeSet<Pair> {
        &self.must_links
    }

    pub fn cannot_links(&self) -> &BTreeSet<Pair> {
        &self.cannot_links
    }

    pub fn is_empty(&self) -> bool {
        self.must_links.is_empty() && self.cannot_links.is_empty()
    }

    /// Every point appearing in at least one constraint, ascending.
    pub fn constrained_points(&self) -> Vec<usize> {
        let set: BTreeSet<usize> =
            self.must_links.iter().chain(&self.cannot_links).flat_map(|&(a, b)| [a, b]).collect();
        set.into_iter().collect()
    }

    /// Points appearing in at least one cannot-link pair, ascending.
    pub fn cannot_linked_points(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.cannot_links.iter().flat_map(|&(a, b)| [a, b]).collect();
        set.into_iter().collect()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.must_links.iter().chain(&self.cannot_links).map(|&(_, b)| b).max()
    }
}

/// All same-class pairs become must-links, all cross-class pairs cannot-links.
pub fn constraints_from_labels(samples: &[LabeledSample], w: f64, w_bar: f64) -> Result<ConstraintSet> {
    let mut by_index: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        match by_index.insert(s.index, s.class_id) {
            Some(prev) if prev != s.class_id => {
                return Err(Error::ConflictingLabels { index: s.index, first: prev, second: s.class_id })
            }
            _ => {}
        }
    }
    let labeled: Vec<(usize, usize)> = by_index.into_iter().collect();
    let mut must = Vec::new();
    let mut cannot = Vec::new();
    for (a, &(i, ci)) in labeled.iter().enumerate() {
        for &(j, cj) in &labeled[a + 1..] {
            if ci == cj {
                must.push((i, j));
            } else {
                cannot.push((i, j));
            }
        }
    }
    ConstraintSet::new(must, cannot, w, w_bar)
}

struct DisjointSets {
    parent: BTreeMap<usize, usize>,
}

impl DisjointSets {
    fn new(points: &[usize]) -> Self {
        DisjointSets { parent: points.iter().map(|&p| (p, p)).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[&root] != root {
            root = self.parent[&root];
        }
        let mut cur = x;
        while cur != root {
            let next = self.parent[&cur];
            self.parent.insert(cur, root);
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as the root so components are canonical.
            self.parent.insert(ra.max(rb), ra.min(rb));
        }
    }

    /// Components keyed by root, members ascending.
    fn components(&mut self) -> BTreeMap<usize, Vec<usize>> {
        let points: Vec<usize> = self.parent.keys().copied().collect();
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for p in points {
            let r = self.find(p);
            out.entry(r).or_default().push(p);
        }
        out
    }
}

fn must_link_components(cs: &ConstraintSet) -> (DisjointSets, BTreeMap<usize, Vec<usize>>) {
    let mut sets = DisjointSets::new(&cs.constrained_points());
    for &(a, b) in &cs.must_links {
        sets.union(a, b);
    }
    let components = sets.components();
    (sets, components)
}

/// Smallest superset that is transitively closed under must-link and
/// propagates cannot-links across must-link components.
pub fn close_constraints(cs: &ConstraintSet) -> Result<ConstraintSet> {
    let (mut sets, components) = must_link_components(cs);
    let mut must = BTreeSet::new();
    for members in components.values() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                must.insert((i, j));
            }
        }
    }
    let mut cannot = BTreeSet::new();
    for &(a, b) in &cs.cannot_links {
        let (ra, rb) = (sets.find(a), sets.find(b));
        if ra == rb {
            return Err(Error::InconsistentConstraints(a, b));
        }
        for &i in &components[&ra] {
            for &j in &components[&rb] {
                cannot.insert(pair(i, j));
            }
        }
    }
    ConstraintSet::new(must, cannot, cs.w, cs.w_bar)
}

/// Connected component of the must-link graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighborhood {
    pub members: Vec<usize>,
}

/// Must-link components over all constrained points, largest first, ties by
/// smallest member.
pub fn neighborhoods(cs: &ConstraintSet) -> Vec<Neighborhood> {
    let (_, components) = must_link_components(cs);
    let mut out: Vec<Neighborhood> = components.into_values().map(|members| Neighborhood { members }).collect();
    out.sort_by(|a, b| b.members.len().cmp(&a.members.len()).then(a.members[0].cmp(&b.members[0])));
    out
}

/// Parses `<message_index> <class_id>` lines; `#` starts a comment.
pub fn parse_labeled_samples(text: &str) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { path: None, line: n + 1, message };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [index, class_id] = parts.as_slice() else {
            return Err(parse_err(format!("expected `<index> <class>`, got `{line}`")));
        };
        let index = index.parse().map_err(|e| parse_err(format!("bad index `{index}`: {e}")))?;
        let class_id = class_id.parse().map_err(|e| parse_err(format!("bad class `{class_id}`: {e}")))?;
        out.push(LabeledSample { index, class_id });
    }
    Ok(out)
}

pub fn read_labeled_samples(path: &Path) -> Result<Vec<LabeledSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labeled_samples(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse { path: Some(path.to_owned()), line, message },
        other => other,
    })
}
