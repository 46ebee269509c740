//! Exact shortest-path and distance queries on road networks.
//!
//! Five query techniques share one [`graph::RoadNetwork`] type:
//!
//! * [`dijkstra`]: plain and bidirectional Dijkstra, also the correctness
//!   oracle for everything else;
//! * [`ch`]: Contraction Hierarchies;
//! * [`tnr`]: Transit Node Routing on a uniform grid, backed by CH or
//!   bidirectional Dijkstra for local queries;
//! * [`silc`]: per-vertex first-hop maps compressed into Z-order intervals;
//! * [`pcpd`]: path-coherent pair decomposition.
//!
//! [`workload`] generates benchmark query sets and measures path
//! redundancy; [`container`] and [`harness`] persist indexes and drive the
//! `roadbench` CLI.

pub mod ch;
pub mod container;
pub mod dijkstra;
pub mod fixtures;
pub mod graph;
pub mod harness;
pub mod morton;
pub mod pcpd;
pub mod rng;
pub mod silc;
pub mod synth;
pub mod tnr;
pub mod workload;

use thiserror::Error;

pub use graph::{Distance, Path, RoadNetwork, VertexId, Weight, INFINITY};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("vertex {0} out of range")]
    VertexOutOfRange(VertexId),
    #[error("no path from {0} to {1}")]
    Unreachable(VertexId, VertexId),
    #[error("index corruption: {0}")]
    Corrupt(String),
}

/// A point-to-point query engine over an immutable index. Engines own their
/// scratch buffers, so use one per worker.
pub trait QueryEngine {
    fn distance(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError>;
    fn path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError>;
}

/// Bidirectional Dijkstra as a [`QueryEngine`].
pub struct BaselineEngine<'a> {
    net: &'a RoadNetwork,
    search: dijkstra::BidiDijkstra,
}

impl<'a> BaselineEngine<'a> {
    pub fn new(net: &'a RoadNetwork) -> Self {
        BaselineEngine { net, search: dijkstra::BidiDijkstra::new(net.n()) }
    }
}

impl QueryEngine for BaselineEngine<'_> {
    fn distance(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError> {
        self.path(s, t).map(|p| p.length)
    }

    fn path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        check_range(self.net, s)?;
        check_range(self.net, t)?;
        self.search
            .query(self.net, s, t)
            .map(|(_, p)| p)
            .ok_or(QueryError::Unreachable(s, t))
    }
}

pub(crate) fn check_range(net: &RoadNetwork, v: VertexId) -> Result<(), QueryError> {
    if (v as usize) < net.n() {
        Ok(())
    } else {
        Err(QueryError::VertexOutOfRange(v))
    }
}
