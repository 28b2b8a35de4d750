use std::collections::BTreeSet;

use proptest::prelude::*;
use protoabs::{close_constraints, constraints_from_labels, neighborhoods, ConstraintSet, LabeledSample};

fn samples() -> impl Strategy<Value = Vec<LabeledSample>> {
    prop::collection::btree_map(0usize..200, 0usize..8, 0..40)
        .prop_map(|m| m.into_iter().map(|(index, class_id)| LabeledSample { index, class_id }).collect())
}

type Pairs = Vec<(usize, usize)>;

fn random_pairs() -> impl Strategy<Value = (Pairs, Pairs)> {
    let pair = (0usize..12, 0usize..12).prop_filter("distinct", |(a, b)| a != b);
    (prop::collection::vec(pair.clone(), 0..10), prop::collection::vec(pair, 0..6))
}

proptest! {
    #[test]
    fn label_constraints_cover_every_pair(s in samples()) {
        let cs = constraints_from_labels(&s, 1.0, 1.0).unwrap();
        let l = s.len();
        prop_assert_eq!(cs.must_links().len() + cs.cannot_links().len(), l * l.saturating_sub(1) / 2);
        prop_assert!(cs.must_links().is_disjoint(cs.cannot_links()));
        prop_assert_eq!(close_constraints(&cs).unwrap(), cs.clone());
        let classes: BTreeSet<usize> = s.iter().map(|x| x.class_id).collect();
        // With a single class and one label nothing is constrained.
        if classes.len() > 1 || l > 1 {
            prop_assert_eq!(neighborhoods(&cs).len(), classes.len());
        }
    }

    #[test]
    fn closure_invariants((must, cannot) in random_pairs()) {
        let Ok(cs) = ConstraintSet::new(must, cannot, 1.0, 1.0) else { return Ok(()); };
        let Ok(closed) = close_constraints(&cs) else { return Ok(()); };
        let m = closed.must_links();
        let c = closed.cannot_links();
        prop_assert!(cs.must_links().is_subset(m) && cs.cannot_links().is_subset(c));
        prop_assert!(m.is_disjoint(c));
        let linked = |set: &BTreeSet<(usize, usize)>, a: usize, b: usize| set.contains(&(a.min(b), a.max(b)));
        let points = closed.constrained_points();
        for &a in &points {
            for &b in &points {
                for &x in &points {
                    if a != b && b != x && a != x {
                        if linked(m, a, b) && linked(m, b, x) {
                            prop_assert!(linked(m, a, x));
                        }
                        if linked(c, a, b) && linked(m, b, x) {
                            prop_assert!(linked(c, a, x));
                        }
                    }
                }
            }
        }
        let hoods = neighborhoods(&closed);
        let mut covered: Vec<usize> = hoods.iter().flat_map(|h| h.members.clone()).collect();
        covered.sort_unstable();
        prop_assert_eq!(covered, points);
        for h in &hoods {
            for (i, &a) in h.members.iter().enumerate() {
                for &b in &h.members[i + 1..] {
                    prop_assert!(!linked(c, a, b));
                }
            }
        }
    }
}

#[test]
fn one_label_per_class_gives_singleton_neighborhoods() {
    let s: Vec<LabeledSample> = (0..21).map(|c| LabeledSample { index: c * 10, class_id: c }).collect();
    let cs = constraints_from_labels(&s, 1.0, 1.0).unwrap();
    assert!(cs.must_links().is_empty());
    let hoods = neighborhoods(&cs);
    assert_eq!(hoods.len(), 21);
    assert!(hoods.iter().all(|h| h.members.len() == 1));
}

#[test]
fn five_labels_per_class_closed_neighborhoods() {
    let s: Vec<LabeledSample> = (0..105).map(|i| LabeledSample { index: i * 3, class_id: i % 21 }).collect();
    let cs = close_constraints(&constraints_from_labels(&s, 1.0, 1.0).unwrap()).unwrap();
    let hoods = neighborhoods(&cs);
    assert_eq!(hoods.len(), 21);
    assert!(hoods.iter().all(|h| h.members.len() == 5));
}
