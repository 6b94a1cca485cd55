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

//! Gray-box `(A, F, K)` annotations of data edges and the transforms that
//! the query language applies to them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::OpKind;
use crate::error::{schema, Result};
use crate::predicate::{FilterPredicate, Filters};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggKind {
    Count,
    Sum,
    Min,
    Max,
}

impl AggKind {
    pub const ALL: [AggKind; 4] = [AggKind::Count, AggKind::Sum, AggKind::Min, AggKind::Max];

    pub fn name(self) -> &'static str {
        match self {
            AggKind::Count => "count",
            AggKind::Sum => "sum",
            AggKind::Min => "min",
            AggKind::Max => "max",
        }
    }
}

/// Provenance of a derived attribute: the state it was computed in and by whom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub required_attrs: BTreeSet<String>,
    #[serde(default)]
    pub filters: Filters,
    #[serde(default)]
    pub keys: BTreeSet<String>,
    pub udf_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<AggKind>,
}

#[derive(Serialize, Deserialize)]
struct AttributeRepr {
    name: String,
    #[serde(default)]
    derived: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    signature: Option<Signature>,
}

/// A named column. Derived columns carry the signature that produced them and
/// compare equal only when the signatures match.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "AttributeRepr", into = "AttributeRepr")]
pub struct Attribute {
    pub name: String,
    pub signature: Option<Signature>,
}

impl TryFrom<AttributeRepr> for Attribute {
    type Error = String;
    fn try_from(r: AttributeRepr) -> std::result::Result<Self, String> {
        if r.derived != r.signature.is_some() {
            return Err(format!(
                "attribute `{}`: `derived` must be true exactly when a signature is present",
                r.name
            ));
        }
        Ok(Attribute {
            name: r.name,
            signature: r.signature,
        })
    }
}

impl From<Attribute> for AttributeRepr {
    fn from(a: Attribute) -> Self {
        AttributeRepr {
            name: a.name,
            derived: a.signature.is_some(),
            signature: a.signature,
        }
    }
}

impl Attribute {
    pub fn base(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            signature: None,
        }
    }

    pub fn derived(name: impl Into<String>, signature: Signature) -> Self {
        Self {
            name: name.into(),
            signature: Some(signature),
        }
    }

    pub fn is_derived(&self) -> bool {
        self.signature.is_some()
    }

    pub fn aggregate(&self) -> Option<AggKind> {
        self.signature.as_ref().and_then(|s| s.aggregate)
    }
}

/// One output column of an aggregation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggOutput {
    pub name: String,
    pub kind: AggKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

/// Query-language operation on an annotation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AfkOp {
    Add {
        name: String,
        required: BTreeSet<String>,
    },
    Drop(BTreeSet<String>),
    Filter(Vec<FilterPredicate>),
    Group(BTreeSet<String>),
    Aggregate {
        keys: BTreeSet<String>,
        outputs: Vec<AggOutput>,
    },
}

impl AfkOp {
    pub fn kind(&self) -> OpKind {
        match self {
            AfkOp::Add { .. } => OpKind::Add,
            AfkOp::Drop(_) => OpKind::Project,
            AfkOp::Filter(_) => OpKind::Filter,
            AfkOp::Group(_) => OpKind::Group,
            AfkOp::Aggregate { .. } => OpKind::Aggregate,
        }
    }

    pub fn rekeys(&self) -> bool {
        matches!(self, AfkOp::Group(_) | AfkOp::Aggregate { .. })
    }
}

/// Attributes, filters and grouping keys of a data edge, plus the base
/// sources it was computed from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AfkAnnotation {
    pub attrs: BTreeMap<String, Attribute>,
    pub filters: Filters,
    pub keys: BTreeSet<String>,
    pub sources: BTreeSet<String>,
}

impl AfkAnnotation {
    /// An ungrouped, unfiltered base relation.
    pub fn base<I, S>(source: &str, attrs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let attrs = attrs
            .into_iter()
            .map(|n| {
                let a = Attribute::base(n);
                (a.name.clone(), a)
            })
            .collect();
        Self {
            attrs,
            filters: Filters::new(),
            keys: BTreeSet::new(),
            sources: BTreeSet::from([source.to_string()]),
        }
    }

    pub fn with_attr(mut self, attr: Attribute) -> Self {
        self.attrs.insert(attr.name.clone(), attr);
        self
    }

    pub fn with_filter(mut self, p: FilterPredicate) -> Self {
        self.filters = self.filters.with(p);
        self
    }

    pub fn with_keys<I, S>(mut self, keys: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.keys = keys.into_iter().map(Into::into).collect();
        self
    }

    pub fn names(&self) -> BTreeSet<&str> {
        self.attrs.keys().map(String::as_str).collect()
    }

    pub fn has(&self, name: &str) -> bool {
        self.attrs.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&Attribute> {
        self.attrs.get(name)
    }

    pub fn contains_attr(&self, attr: &Attribute) -> bool {
        self.attrs.get(&attr.name) == Some(attr)
    }

    /// Names reachable from the present attributes through derived-attribute
    /// requirements.
    pub fn closure(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.attrs.keys().cloned().collect();
        for a in self.attrs.values() {
            if let Some(sig) = &a.signature {
                out.extend(sig.required_attrs.iter().cloned());
            }
        }
        out
    }

    /// Every filter attribute and key must be present or recoverable from a
    /// derived attribute's requirements.
    pub fn check_invariant(&self) -> Result<()> {
        let closure = self.closure();
        for attr in self.filters.attrs() {
            if !closure.contains(attr) {
                return Err(schema(format!(
                    "filter on `{attr}` which is neither present nor required"
                )));
            }
        }
        for k in &self.keys {
            if !closure.contains(k) {
                return Err(schema(format!("key `{k}` is neither present nor required")));
            }
        }
        Ok(())
    }

    fn require_present<'a>(&self, names: impl IntoIterator<Item = &'a String>) -> Result<()> {
        for n in names {
            if !self.has(n) {
                return Err(schema(format!("attribute `{n}` is absent")));
            }
        }
        Ok(())
    }

    /// Applies one query-language operation. `udf` names the producer recorded
    /// in new signatures; built-in aggregates pass `None` and are recorded
    /// under their aggregate kind.
    pub fn apply(&self, op: &AfkOp, udf: Option<&str>) -> Result<Self> {
        let mut out = self.clone();
        match op {
            AfkOp::Add { name, required } => {
                if self.has(name) {
                    return Err(schema(format!("attribute `{name}` already exists")));
                }
                self.require_present(required)?;
                let udf_name = udf.ok_or_else(|| schema(format!("`{name}` added without a producing UDF")))?;
                let sig = Signature {
                    required_attrs: required.clone(),
                    filters: self.filters.clone(),
                    keys: self.keys.clone(),
                    udf_name: udf_name.to_string(),
                    aggregate: None,
                };
                out.attrs.insert(name.clone(), Attribute::derived(name.clone(), sig));
            }
            AfkOp::Drop(names) => {
                self.require_present(names)?;
                for n in names {
                    out.attrs.remove(n);
                }
                out.check_invariant()?;
            }
            AfkOp::Filter(preds) => {
                for p in preds {
                    if !self.has(&p.attr) {
                        return Err(schema(format!("filter on absent attribute `{}`", p.attr)));
                    }
                }
                out.filters = Filters::from_preds(self.filters.iter().chain(preds.iter()).cloned());
            }
            AfkOp::Group(keys) => {
                self.require_present(keys)?;
                out.keys = keys.clone();
            }
            AfkOp::Aggregate { keys, outputs } => {
                self.require_present(keys)?;
                for o in outputs {
                    if let Some(input) = &o.input {
                        self.require_present([input])?;
                    }
                    if out.has(&o.name) {
                        return Err(schema(format!("attribute `{}` already exists", o.name)));
                    }
                    let sig = Signature {
                        required_attrs: o.input.iter().cloned().collect(),
                        filters: self.filters.clone(),
                        keys: keys.clone(),
                        udf_name: udf.unwrap_or(o.kind.name()).to_string(),
                        aggregate: Some(o.kind),
                    };
                    out.attrs
                        .insert(o.name.clone(), Attribute::derived(o.name.clone(), sig));
                }
                out.keys = keys.clone();
            }
        }
        Ok(out)
    }

    /// Brings several inputs together ahead of a multi-input operation:
    /// attribute and filter union, ungrouped. Shared names must denote the
    /// same attribute.
    pub fn combine(inputs: &[AfkAnnotation]) -> Result<Self> {
        let mut out = AfkAnnotation::default();
        for (i, input) in inputs.iter().enumerate() {
            for (name, attr) in &input.attrs {
                match out.attrs.get(name) {
                    Some(existing) if existing != attr => {
                        return Err(schema(format!("input {i} redefines attribute `{name}`")));
                    }
                    _ => {
                        out.attrs.insert(name.clone(), attr.clone());
                    }
                }
            }
            out.filters = out.filters.union(&input.filters);
            out.sources.extend(input.sources.iter().cloned());
        }
        if inputs.len() == 1 {
            out.keys = inputs[0].keys.clone();
        }
        Ok(out)
    }
}

impl fmt::Display for AfkAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let attrs: Vec<&str> = self.attrs.keys().map(String::as_str).collect();
        let keys: Vec<&str> = self.keys.iter().map(String::as_str).collect();
        write!(
            f,
            "A={{{}}} F={} K={{{}}}",
            attrs.join(","),
            self.filters,
            keys.join(",")
        )
    }
}
