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

//! Settings shared by every search over one catalog.

use std::collections::BTreeSet;

use crate::cost::CostConstants;
use crate::udf::UdfRegistry;

/// Operations a rewrite may use on top of a view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteLanguage {
    ops: BTreeSet<String>,
}

impl Default for RewriteLanguage {
    fn default() -> Self {
        let ops = ["select", "project", "join", "group-by", "count", "sum", "min", "max"];
        Self {
            ops: ops.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RewriteLanguage {
    pub fn with_udf(mut self, name: impl Into<String>) -> Self {
        self.ops.insert(name.into());
        self
    }

    pub fn without(mut self, op: &str) -> Self {
        self.ops.remove(op);
        self
    }

    pub fn allows(&self, op: &str) -> bool {
        self.ops.contains(op)
    }

    pub fn ops(&self) -> impl Iterator<Item = &str> {
        self.ops.iter().map(String::as_str)
    }
}

/// Cost constants, UDF registry, rewrite language and search limits.
#[derive(Clone, Debug)]
pub struct RewriteContext {
    pub constants: CostConstants,
    pub registry: UdfRegistry,
    pub lang: RewriteLanguage,
    pub max_join_arity: usize,
    pub max_fix: usize,
}

impl Default for RewriteContext {
    fn default() -> Self {
        Self {
            constants: CostConstants::default(),
            registry: UdfRegistry::new(),
            lang: RewriteLanguage::default(),
            max_join_arity: 4,
            max_fix: 8,
        }
    }
}

impl RewriteContext {
    pub fn new(constants: CostConstants, registry: UdfRegistry, lang: RewriteLanguage) -> Self {
        Self {
            constants,
            registry,
            lang,
            ..Self::default()
        }
    }
}
