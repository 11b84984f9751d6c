#![allow(dead_code)]

pub mod models;
pub mod mps_reader;
pub mod vertex_oracle;

use std::path::PathBuf;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}
