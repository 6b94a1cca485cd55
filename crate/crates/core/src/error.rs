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

use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors raised while building plans, loading inputs or searching for rewrites.
#[derive(Debug, Error)]
pub enum Error {
    #[error("plan contains a cycle through node {0}")]
    CycleDetected(i64),
    #[error("plan has more than one sink: {0:?}")]
    MultipleSinks(Vec<i64>),
    #[error("edge references unknown node {0}")]
    DanglingEdge(i64),
    #[error("duplicate node id {0}")]
    DuplicateNode(i64),
    #[error("plan has no nodes")]
    EmptyPlan,
    #[error("unknown node {0}")]
    UnknownNode(i64),
    #[error("unknown UDF `{0}`")]
    UnknownUdf(String),
    #[error("inconsistent schema: {0}")]
    InconsistentSchema(String),
    #[error("UDF `{0}` is already registered with a different descriptor")]
    ConflictingRedefinition(String),
    #[error("invalid descriptor `{name}`: {reason}")]
    InvalidDescriptor { name: String, reason: String },
    #[error("view is not guessed complete for this target")]
    NotComplete,
    #[error("no operation of the local function applies to its input")]
    NoApplicableOp,
    #[error("fix has {size} elements, the enumeration limit is {limit}")]
    FixTooLarge { size: usize, limit: usize },
    #[error("instance too large for the oracle: {0}")]
    InstanceTooLarge(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Attaches `path` to an IO error.
pub fn at(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(at(path))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(at(path))
}

pub(crate) fn schema(msg: impl Into<String>) -> Error {
    Error::InconsistentSchema(msg.into())
}
