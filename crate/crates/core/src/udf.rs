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

//! Gray-box UDF descriptors: a UDF is a sequence of local functions, each a
//! small set of add/drop, filter and group operations.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::annotation::{AfkAnnotation, AfkOp};
use crate::cost::Job;
use crate::error::{schema, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Map,
    Reduce,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalFunction {
    pub phase: Phase,
    pub ops: Vec<AfkOp>,
}

impl LocalFunction {
    pub fn new(phase: Phase, ops: Vec<AfkOp>) -> Self {
        Self { phase, ops }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UdfDescriptor {
    pub name: String,
    #[serde(default = "one_input")]
    pub inputs: usize,
    pub local_functions: Vec<LocalFunction>,
    #[serde(default = "one")]
    pub cost_scalar: f64,
    /// Output depends on something other than the input rows.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub nondeterministic: bool,
    /// Output schema depends on data values (pivots and the like).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub data_dependent_schema: bool,
}

fn one_input() -> usize {
    1
}

impl UdfDescriptor {
    pub fn new(name: impl Into<String>, inputs: usize, local_functions: Vec<LocalFunction>) -> Self {
        Self {
            name: name.into(),
            inputs,
            local_functions,
            cost_scalar: 1.0,
            nondeterministic: false,
            data_dependent_schema: false,
        }
    }

    pub fn with_scalar(mut self, scalar: f64) -> Self {
        self.cost_scalar = scalar;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidDescriptor {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.nondeterministic {
            return bad("non-deterministic UDFs cannot be modeled");
        }
        if self.data_dependent_schema {
            return bad("UDFs whose schema depends on the data cannot be modeled");
        }
        if self.inputs == 0 {
            return bad("arity must be at least one");
        }
        if self.local_functions.is_empty() {
            return bad("at least one local function is required");
        }
        if !(self.cost_scalar > 0.0) {
            return bad("cost_scalar must be positive");
        }
        for lf in &self.local_functions {
            if lf.ops.is_empty() {
                return bad("local functions need at least one operation");
            }
            if lf.phase == Phase::Map && lf.ops.iter().any(AfkOp::rekeys) {
                return bad("map-phase local functions may not re-key");
            }
        }
        Ok(())
    }

    pub fn job(&self) -> Job {
        Job {
            udf_name: Some(self.name.clone()),
            scalar: self.cost_scalar,
            local_functions: self.local_functions.clone(),
        }
    }
}

/// Append-only set of descriptors, looked up by name.
#[derive(Clone, Debug, Default)]
pub struct UdfRegistry {
    udfs: BTreeMap<String, Arc<UdfDescriptor>>,
}

impl UdfRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a descriptor. Re-registering an identical one is a no-op.
    pub fn register(&mut self, descriptor: UdfDescriptor) -> Result<()> {
        descriptor.validate()?;
        match self.udfs.get(&descriptor.name) {
            Some(existing) if **existing == descriptor => Ok(()),
            Some(_) => Err(Error::ConflictingRedefinition(descriptor.name)),
            None => {
                self.udfs.insert(descriptor.name.clone(), Arc::new(descriptor));
                Ok(())
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Arc<UdfDescriptor>> {
        self.udfs.get(name)
    }

    pub fn scalar(&self, name: &str) -> f64 {
        self.get(name).map_or(1.0, |d| d.cost_scalar)
    }

    pub fn len(&self) -> usize {
        self.udfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.udfs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &UdfDescriptor> {
        self.udfs.values().map(|d| d.as_ref())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::error::read_file(path)?;
        let descriptors: Vec<UdfDescriptor> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut reg = Self::new();
        for d in descriptors {
            reg.register(d)?;
        }
        Ok(reg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let all: Vec<&UdfDescriptor> = self.iter().collect();
        crate::error::write_file(path, serde_json::to_string_pretty(&all).expect("descriptors serialize"))?;
        Ok(())
    }
}

/// Output annotation of `descriptor` over its inputs: the local functions'
/// operations folded left over the combined input.
pub fn apply_udf_model(descriptor: &UdfDescriptor, inputs: &[AfkAnnotation]) -> Result<AfkAnnotation> {
    if inputs.len() != descriptor.inputs {
        return Err(schema(format!(
            "`{}` takes {} inputs, got {}",
            descriptor.name,
            descriptor.inputs,
            inputs.len()
        )));
    }
    let mut ann = AfkAnnotation::combine(inputs)?;
    for lf in &descriptor.local_functions {
        for op in &lf.ops {
            ann = ann.apply(op, Some(&descriptor.name))?;
        }
    }
    Ok(ann)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::{CmpOp, FilterPredicate};
    use std::collections::BTreeSet;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn foodies() -> UdfDescriptor {
        UdfDescriptor::new(
            "UDF_FOODIES",
            1,
            vec![
                LocalFunction::new(
                    Phase::Map,
                    vec![AfkOp::Add {
                        name: "sent_sum".into(),
                        required: set(&["user_id", "tweet_text"]),
                    }],
                ),
                LocalFunction::new(
                    Phase::Reduce,
                    vec![
                        AfkOp::Group(set(&["user_id"])),
                        AfkOp::Filter(vec![FilterPredicate::new("sent_sum", CmpOp::Gt, 0.5)]),
                        AfkOp::Drop(set(&["tweet_id", "tweet_text"])),
                    ],
                ),
            ],
        )
    }

    #[test]
    fn foodies_model() {
        let mut reg = UdfRegistry::new();
        reg.register(foodies()).unwrap();
        let d = reg.get("UDF_FOODIES").unwrap();
        assert_eq!(d.inputs, 1);
        assert_eq!(d.local_functions.len(), 2);

        let input = AfkAnnotation::base("tweets", ["user_id", "tweet_id", "tweet_text"]).with_keys(["tweet_id"]);
        let out = apply_udf_model(d, &[input]).unwrap();
        assert_eq!(out.names(), BTreeSet::from(["user_id", "sent_sum"]));
        assert_eq!(out.keys, set(&["user_id"]));
        let want = crate::predicate::Filters::from_preds([FilterPredicate::new("sent_sum", CmpOp::Gt, 0.5)]);
        assert_eq!(out.filters, want);
        let sig = out.get("sent_sum").unwrap().signature.as_ref().unwrap();
        assert_eq!(sig.required_attrs, set(&["user_id", "tweet_text"]));
        assert!(sig.filters.is_empty());
        assert_eq!(sig.keys, set(&["tweet_id"]));
        assert_eq!(sig.udf_name, "UDF_FOODIES");
    }

    #[test]
    fn registration_is_idempotent_and_rejects_conflicts() {
        let mut reg = UdfRegistry::new();
        reg.register(foodies()).unwrap();
        reg.register(foodies()).unwrap();
        assert_eq!(reg.len(), 1);
        let mut other = foodies();
        other.local_functions.pop();
        assert!(matches!(reg.register(other), Err(Error::ConflictingRedefinition(_))));
    }

    #[test]
    fn excluded_classes_are_rejected() {
        let mut d = foodies();
        d.nondeterministic = true;
        assert!(UdfRegistry::new().register(d).is_err());
        let mut d = foodies();
        d.local_functions[0].ops.push(AfkOp::Group(set(&["user_id"])));
        assert!(UdfRegistry::new().register(d).is_err());
    }

    #[test]
    fn empty_effect_function_is_identity() {
        let d = UdfDescriptor::new(
            "noop",
            1,
            vec![LocalFunction::new(Phase::Map, vec![AfkOp::Drop(BTreeSet::new())])],
        );
        let input = AfkAnnotation::base("t", ["a", "b"]).with_keys(["a"]);
        assert_eq!(apply_udf_model(&d, std::slice::from_ref(&input)).unwrap(), input);
    }

    #[test]
    fn new_attributes_carry_descriptor_name() {
        let input = AfkAnnotation::base("tweets", ["user_id", "tweet_id", "tweet_text"]).with_keys(["tweet_id"]);
        let out = apply_udf_model(&foodies(), std::slice::from_ref(&input)).unwrap();
        for (name, a) in &out.attrs {
            if !input.has(name) {
                assert_eq!(a.signature.as_ref().unwrap().udf_name, "UDF_FOODIES");
            }
        }
    }

    #[test]
    fn descriptor_json_tags() {
        let json = serde_json::to_string(&foodies()).unwrap();
        assert!(json.contains(r#""add":"#) && json.contains(r#""group":"#) && json.contains(r#""drop":"#));
        let back: UdfDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, foodies());
    }
}
