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

//! Conjunctive attribute-vs-constant predicates kept in a canonical,
//! per-attribute interval form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        };
        f.write_str(s)
    }
}

/// `attr op constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FilterPredicate {
    pub attr: String,
    pub op: CmpOp,
    #[serde(rename = "const")]
    pub constant: OrderedFloat<f64>,
}

impl FilterPredicate {
    pub fn new(attr: impl Into<String>, op: CmpOp, constant: f64) -> Self {
        Self {
            attr: attr.into(),
            op,
            constant: OrderedFloat(constant),
        }
    }
}

impl fmt::Display for FilterPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.attr, self.op, self.constant)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Bound {
    value: f64,
    inclusive: bool,
}

/// The set of values an attribute may take under a conjunction of predicates:
/// an interval with optional excluded points.
#[derive(Clone, Debug, PartialEq)]
pub struct Range {
    lo: Option<Bound>,
    hi: Option<Bound>,
    holes: BTreeSet<OrderedFloat<f64>>,
}

impl Default for Range {
    fn default() -> Self {
        Self::full()
    }
}

impl Range {
    pub fn full() -> Self {
        Self {
            lo: None,
            hi: None,
            holes: BTreeSet::new(),
        }
    }

    fn tighten_lo(&mut self, value: f64, inclusive: bool) {
        self.lo = Some(match self.lo {
            Some(b) if b.value > value || (b.value == value && !b.inclusive) => b,
            Some(b) if b.value == value => Bound {
                value,
                inclusive: b.inclusive && inclusive,
            },
            _ => Bound { value, inclusive },
        });
    }

    fn tighten_hi(&mut self, value: f64, inclusive: bool) {
        self.hi = Some(match self.hi {
            Some(b) if b.value < value || (b.value == value && !b.inclusive) => b,
            Some(b) if b.value == value => Bound {
                value,
                inclusive: b.inclusive && inclusive,
            },
            _ => Bound { value, inclusive },
        });
    }

    pub fn restrict(&mut self, op: CmpOp, c: f64) {
        match op {
            CmpOp::Lt => self.tighten_hi(c, false),
            CmpOp::Le => self.tighten_hi(c, true),
            CmpOp::Gt => self.tighten_lo(c, false),
            CmpOp::Ge => self.tighten_lo(c, true),
            CmpOp::Eq => {
                self.tighten_lo(c, true);
                self.tighten_hi(c, true);
            }
            CmpOp::Ne => {
                self.holes.insert(OrderedFloat(c));
            }
        }
    }

    fn in_bounds(&self, x: f64) -> bool {
        let lo_ok = match self.lo {
            None => true,
            Some(b) => x > b.value || (b.inclusive && x == b.value),
        };
        let hi_ok = match self.hi {
            None => true,
            Some(b) => x < b.value || (b.inclusive && x == b.value),
        };
        lo_ok && hi_ok
    }

    pub fn contains(&self, x: f64) -> bool {
        self.in_bounds(x) && !self.holes.contains(&OrderedFloat(x))
    }

    pub fn is_empty(&self) -> bool {
        match (self.lo, self.hi) {
            (Some(l), Some(h)) => {
                l.value > h.value
                    || (l.value == h.value
                        && (!l.inclusive || !h.inclusive || self.holes.contains(&OrderedFloat(l.value))))
            }
            _ => false,
        }
    }

    pub fn is_full(&self) -> bool {
        self.lo.is_none() && self.hi.is_none() && self.holes.is_empty()
    }

    /// Every value allowed by `self` is allowed by `other`.
    pub fn subset_of(&self, other: &Range) -> bool {
        if self.is_empty() {
            return true;
        }
        let lo_ok = match (other.lo, self.lo) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s.value > o.value || (s.value == o.value && (o.inclusive || !s.inclusive)),
        };
        let hi_ok = match (other.hi, self.hi) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s.value < o.value || (s.value == o.value && (o.inclusive || !s.inclusive)),
        };
        lo_ok && hi_ok && other.holes.iter().all(|h| !self.contains(h.0))
    }

    /// Canonical predicate list for this range. Equal ranges give equal lists.
    pub fn to_predicates(&self, attr: &str) -> Vec<FilterPredicate> {
        if self.is_empty() {
            return vec![
                FilterPredicate::new(attr, CmpOp::Gt, 0.0),
                FilterPredicate::new(attr, CmpOp::Lt, 0.0),
            ];
        }
        let mut r = self.clone();
        if let Some(b) = r.lo {
            if b.inclusive && r.holes.contains(&OrderedFloat(b.value)) {
                r.lo = Some(Bound { inclusive: false, ..b });
            }
        }
        if let Some(b) = r.hi {
            if b.inclusive && r.holes.contains(&OrderedFloat(b.value)) {
                r.hi = Some(Bound { inclusive: false, ..b });
            }
        }
        let mut out = Vec::new();
        match (r.lo, r.hi) {
            (Some(l), Some(h)) if l.value == h.value && l.inclusive && h.inclusive => {
                out.push(FilterPredicate::new(attr, CmpOp::Eq, l.value));
                return out;
            }
            _ => {}
        }
        if let Some(l) = r.lo {
            let op = if l.inclusive { CmpOp::Ge } else { CmpOp::Gt };
            out.push(FilterPredicate::new(attr, op, l.value));
        }
        if let Some(h) = r.hi {
            let op = if h.inclusive { CmpOp::Le } else { CmpOp::Lt };
            out.push(FilterPredicate::new(attr, op, h.value));
        }
        for hole in &r.holes {
            if r.in_bounds(hole.0) {
                out.push(FilterPredicate::new(attr, CmpOp::Ne, hole.0));
            }
        }
        out
    }
}

/// A conjunction of predicates in canonical form, so that two conjunctions
/// denoting the same value set per attribute compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<FilterPredicate>", into = "Vec<FilterPredicate>")]
pub struct Filters(BTreeSet<FilterPredicate>);

impl From<Vec<FilterPredicate>> for Filters {
    fn from(preds: Vec<FilterPredicate>) -> Self {
        Filters::from_preds(preds)
    }
}

impl From<Filters> for Vec<FilterPredicate> {
    fn from(f: Filters) -> Self {
        f.0.into_iter().collect()
    }
}

impl Filters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_preds(preds: impl IntoIterator<Item = FilterPredicate>) -> Self {
        let mut ranges: BTreeMap<String, Range> = BTreeMap::new();
        for p in preds {
            ranges.entry(p.attr).or_default().restrict(p.op, p.constant.0);
        }
        Self::from_ranges(&ranges)
    }

    fn from_ranges(ranges: &BTreeMap<String, Range>) -> Self {
        let mut set = BTreeSet::new();
        for (attr, r) in ranges {
            set.extend(r.to_predicates(attr));
        }
        Filters(set)
    }

    pub fn ranges(&self) -> BTreeMap<String, Range> {
        let mut ranges: BTreeMap<String, Range> = BTreeMap::new();
        for p in &self.0 {
            ranges.entry(p.attr.clone()).or_default().restrict(p.op, p.constant.0);
        }
        ranges
    }

    pub fn with(&self, p: FilterPredicate) -> Self {
        Self::from_preds(self.0.iter().cloned().chain(std::iter::once(p)))
    }

    pub fn union(&self, other: &Filters) -> Self {
        Self::from_preds(self.0.iter().chain(other.0.iter()).cloned())
    }

    /// `self` implies `weaker`: every row passing `self` passes `weaker`.
    pub fn implies(&self, weaker: &Filters) -> bool {
        let mine = self.ranges();
        if mine.values().any(Range::is_empty) {
            return true;
        }
        let full = Range::full();
        weaker
            .ranges()
            .iter()
            .all(|(attr, w)| mine.get(attr).unwrap_or(&full).subset_of(w))
    }

    /// Predicates of `self` that do not appear in `other`.
    pub fn difference(&self, other: &Filters) -> Vec<FilterPredicate> {
        self.0.difference(&other.0).cloned().collect()
    }

    pub fn contains(&self, p: &FilterPredicate) -> bool {
        self.0.contains(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FilterPredicate> {
        self.0.iter()
    }

    pub fn attrs(&self) -> BTreeSet<&str> {
        self.0.iter().map(|p| p.attr.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Filters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
