// Licensed to the Apache Software Foundation (ASF) under one
// or more contributor license agreements.  See the NOTICE file
// distributed with this work for additional information
// regarding copyright ownership.  The ASF licenses this file
// to you under the Apache License, Version 2.0 (the
// "License"); you may not use this file except in compliance
// with the License.  You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

//! Equivalence, the GuessComplete containment test and fix computation.

use std::collections::BTreeSet;

use crate::annotation::{AfkAnnotation, Attribute};
use crate::error::{Error, Result};
use crate::predicate::FilterPredicate;

/// Identical attributes (derived ones by signature), filters, keys and
/// sources.
pub fn equivalent(q: &AfkAnnotation, v: &AfkAnnotation) -> bool {
    q == v
}

/// `v` could take part in some rewrite of `q`, alone or merged with other
/// views: it reads no foreign source and its filters are weaker than `q`'s.
pub fn relevant(q: &AfkAnnotation, v: &AfkAnnotation) -> bool {
    v.sources.is_subset(&q.sources) && q.filters.implies(&v.filters)
}

/// Grouping can only move from ungrouped to grouped, or to a strictly
/// coarser key set.
pub fn keys_reachable(from: &BTreeSet<String>, to: &BTreeSet<String>) -> bool {
    from == to || (!to.is_empty() && (from.is_empty() || (to.is_subset(from) && to != from)))
}

/// Necessary conditions for `v` to be rewritable into `q` by compensations
/// alone. A `false` answer is final; a `true` answer may still fail in the
/// enumerator.
pub fn guess_complete(q: &AfkAnnotation, v: &AfkAnnotation) -> bool {
    if q.sources != v.sources || !q.filters.implies(&v.filters) || !keys_reachable(&v.keys, &q.keys) {
        return false;
    }
    let regroup = q.keys != v.keys;
    let available: BTreeSet<&str> = v.names().union(&q.names()).copied().collect();
    if regroup && !q.keys.iter().all(|k| available.contains(k.as_str())) {
        return false;
    }
    q.attrs
        .values()
        .all(|g| v.contains_attr(g) || producible(g, q, v, regroup, &available))
}

fn producible(g: &Attribute, q: &AfkAnnotation, v: &AfkAnnotation, regroup: bool, available: &BTreeSet<&str>) -> bool {
    let Some(sig) = &g.signature else {
        return false;
    };
    if !sig.required_attrs.iter().all(|r| available.contains(r.as_str())) {
        return false;
    }
    // Anything computed on top of v sees at least v's filters.
    let computable_here = q.filters.implies(&sig.filters) && sig.filters.implies(&v.filters);
    match sig.aggregate {
        None => computable_here && (sig.keys == v.keys || (regroup && sig.keys == q.keys)),
        Some(kind) => {
            if !regroup || sig.keys != q.keys {
                return false;
            }
            if v.keys.is_empty() {
                return computable_here && sig.udf_name == kind.name();
            }
            v.attrs.values().any(|h| {
                h.signature.as_ref().is_some_and(|hs| {
                    hs.aggregate == Some(kind)
                        && hs.required_attrs == sig.required_attrs
                        && hs.udf_name == sig.udf_name
                        && hs.filters == sig.filters
                        && hs.keys == v.keys
                })
            })
        }
    }
}

/// What a rewrite must add on top of a view to produce the target.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Fix {
    /// Target attributes the view lacks (aggregates included).
    pub missing_attrs: Vec<Attribute>,
    pub missing_filters: Vec<FilterPredicate>,
    /// Target keys, when the view is grouped differently.
    pub regroup: Option<BTreeSet<String>>,
    /// View attributes the target does not have, removed by a final projection.
    pub surplus_attrs: BTreeSet<String>,
}

impl Fix {
    pub fn is_empty(&self) -> bool {
        self.missing_attrs.is_empty()
            && self.missing_filters.is_empty()
            && self.regroup.is_none()
            && self.surplus_attrs.is_empty()
    }

    /// Number of compensating operations, the final projection excluded.
    pub fn size(&self) -> usize {
        self.missing_attrs.iter().filter(|a| a.aggregate().is_none()).count()
            + self.missing_filters.len()
            + usize::from(self.regroup.is_some())
    }
}

/// Set differences of attributes, filters and keys between `q` and `v`.
pub fn compute_fix(q: &AfkAnnotation, v: &AfkAnnotation) -> Result<Fix> {
    if !guess_complete(q, v) {
        return Err(Error::NotComplete);
    }
    Ok(Fix {
        missing_attrs: q.attrs.values().filter(|a| !v.contains_attr(a)).cloned().collect(),
        missing_filters: q.filters.difference(&v.filters),
        regroup: (q.keys != v.keys).then(|| q.keys.clone()),
        surplus_attrs: v.attrs.keys().filter(|n| !q.has(n)).cloned().collect(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::annotation::{AfkOp, AggKind, AggOutput};
    use crate::predicate::CmpOp;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    /// v = ({a,b,c}, ∅, ∅); q = ({b,c,d}, {d<10}, {c}) with d derived from a, b.
    pub(crate) fn derive_filter_group() -> (AfkAnnotation, AfkAnnotation) {
        let v = AfkAnnotation::base("log", ["a", "b", "c"]);
        let q = v
            .apply(
                &AfkOp::Add {
                    name: "d".into(),
                    required: set(&["a", "b"]),
                },
                Some("U"),
            )
            .unwrap()
            .apply(&AfkOp::Filter(vec![FilterPredicate::new("d", CmpOp::Lt, 10.0)]), None)
            .unwrap()
            .apply(&AfkOp::Group(set(&["c"])), None)
            .unwrap()
            .apply(&AfkOp::Drop(set(&["a"])), None)
            .unwrap();
        (q, v)
    }

    #[test]
    fn equivalence_basics() {
        let (q, v) = derive_filter_group();
        assert!(equivalent(&q, &q));
        assert!(!equivalent(&q, &v));
        let extra = v.clone().with_attr(Attribute::base("z"));
        assert!(!equivalent(&v, &extra));
    }

    #[test]
    fn derive_filter_group_is_guessed_complete() {
        let (q, v) = derive_filter_group();
        assert!(guess_complete(&q, &v));
        let fix = compute_fix(&q, &v).unwrap();
        assert_eq!(
            fix.missing_attrs.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
            vec!["d"]
        );
        let d = &fix.missing_attrs[0];
        assert_eq!(d.signature.as_ref().unwrap().required_attrs, set(&["a", "b"]));
        assert_eq!(fix.missing_filters, vec![FilterPredicate::new("d", CmpOp::Lt, 10.0)]);
        assert_eq!(fix.regroup, Some(set(&["c"])));
        assert_eq!(fix.surplus_attrs, set(&["a"]));
        assert_eq!(fix.size(), 3);
    }

    #[test]
    fn stronger_view_filter_is_not_complete() {
        let q = AfkAnnotation::base("log", ["x"]);
        let v = q.clone().with_filter(FilterPredicate::new("x", CmpOp::Lt, 5.0));
        assert!(!guess_complete(&q, &v));
        assert!(matches!(compute_fix(&q, &v), Err(Error::NotComplete)));
    }

    #[test]
    fn other_log_is_not_complete() {
        let q = AfkAnnotation::base("log", ["x"]);
        let v = AfkAnnotation::base("other", ["x"]);
        assert!(!guess_complete(&q, &v));
        assert!(!relevant(&q, &v));
    }

    #[test]
    fn equivalent_pair_has_empty_fix() {
        let (q, _) = derive_filter_group();
        assert!(compute_fix(&q, &q).unwrap().is_empty());
    }

    #[test]
    fn single_missing_filter() {
        let v = AfkAnnotation::base("log", ["x", "y"]);
        let q = v.clone().with_filter(FilterPredicate::new("y", CmpOp::Eq, 3.0));
        let fix = compute_fix(&q, &v).unwrap();
        assert_eq!(fix.missing_filters, vec![FilterPredicate::new("y", CmpOp::Eq, 3.0)]);
        assert!(fix.missing_attrs.is_empty() && fix.regroup.is_none() && fix.surplus_attrs.is_empty());
    }

    pub(crate) fn counts(keys: &[&str]) -> AfkAnnotation {
        AfkAnnotation::base("checkins", ["user", "day", "venue"])
            .apply(
                &AfkOp::Aggregate {
                    keys: set(keys),
                    outputs: vec![AggOutput {
                        name: "n".into(),
                        kind: AggKind::Count,
                        input: Some("venue".into()),
                    }],
                },
                None,
            )
            .unwrap()
    }

    #[test]
    fn finer_counts_roll_up() {
        let v = counts(&["user", "day"]);
        let q = counts(&["user"]);
        assert!(guess_complete(&q, &v));
        assert!(!guess_complete(&v, &q), "cannot split coarser groups");
        let fix = compute_fix(&q, &v).unwrap();
        assert_eq!(fix.regroup, Some(set(&["user"])));
        assert_eq!(fix.missing_attrs.len(), 1);
    }

    #[test]
    fn rollup_ignores_filters_added_after_the_aggregate() {
        let late = FilterPredicate::new("venue", CmpOp::Lt, 3.0);
        let v = counts(&["user", "day"])
            .apply(&AfkOp::Filter(vec![late.clone()]), None)
            .unwrap();
        let q = counts(&["user"]).apply(&AfkOp::Filter(vec![late]), None).unwrap();
        assert!(guess_complete(&q, &v));
        let fix = compute_fix(&q, &v).unwrap();
        assert!(fix.missing_filters.is_empty());
        assert_eq!(fix.regroup, Some(set(&["user"])));
    }

    #[test]
    fn keys_only_coarsen() {
        assert!(keys_reachable(&set(&[]), &set(&["a"])));
        assert!(keys_reachable(&set(&["a", "b"]), &set(&["a"])));
        assert!(!keys_reachable(&set(&["a"]), &set(&["a", "b"])));
        assert!(!keys_reachable(&set(&["a"]), &set(&[])));
        assert!(keys_reachable(&set(&["a"]), &set(&["a"])));
    }
}
