//! Python bindings. Vertex ids are the dense 0-based ids used by the core
//! crate; `Network.original_id` and `Network.dense_id` convert to and from
//! DIMACS ids.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use roadbench::container::{Index as CoreIndex, Method};
use roadbench::graph::load_dimacs;
use roadbench::harness::{build_index, BuildOptions};
use roadbench::tnr::FallbackKind;
use roadbench::{dijkstra, fixtures, synth, workload, RoadNetwork, VertexId};

type DeltaRow = (VertexId, VertexId, u64, Option<u64>);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An undirected road network with coordinates.
#[pyclass(frozen, module = "pyroadbench")]
pub struct Network {
    inner: Arc<RoadNetwork>,
}

#[pymethods]
impl Network {
    /// Loads a DIMACS `.gr` file and its `.co` coordinate file.
    #[staticmethod]
    fn load(graph: &str, coords: &str) -> PyResult<Self> {
        let open = |p: &str| File::open(p).map(BufReader::new).map_err(|e| PyIOError::new_err(format!("{p}: {e}")));
        let net = load_dimacs(open(graph)?, open(coords)?).map_err(value_err)?;
        Ok(Network { inner: Arc::new(net) })
    }

    /// Seeded synthetic road-like grid network.
    #[staticmethod]
    #[pyo3(signature = (n, seed = 1))]
    fn synthetic(n: usize, seed: u64) -> Self {
        Network { inner: Arc::new(synth::road_like(n, seed)) }
    }

    /// The eight-vertex example network.
    #[staticmethod]
    fn example() -> Self {
        Network { inner: Arc::new(fixtures::fig1()) }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn fingerprint(&self) -> u64 {
        self.inner.fingerprint()
    }

    fn original_id(&self, v: VertexId) -> PyResult<u32> {
        if (v as usize) < self.inner.n() {
            Ok(self.inner.original_id(v))
        } else {
            Err(value_err(format!("vertex {v} out of range")))
        }
    }

    fn dense_id(&self, original: u32) -> Option<VertexId> {
        self.inner.dense_id(original)
    }

    fn coord(&self, v: VertexId) -> PyResult<(i64, i64)> {
        if (v as usize) < self.inner.n() {
            let p = self.inner.coord(v);
            Ok((p.x, p.y))
        } else {
            Err(value_err(format!("vertex {v} out of range")))
        }
    }

    /// Undirected edges as `(u, v, weight)` with `u < v`.
    fn edges(&self) -> Vec<(VertexId, VertexId, u32)> {
        self.inner.edges().collect()
    }

    /// Oracle distance by bidirectional Dijkstra; `None` if unreachable.
    fn dijkstra_distance(&self, s: VertexId, t: VertexId) -> PyResult<Option<u64>> {
        self.check(s)?;
        self.check(t)?;
        Ok(dijkstra::bidi_query(&self.inner, s, t).map(|(d, _)| d))
    }

    fn __repr__(&self) -> String {
        format!("Network(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

impl Network {
    fn check(&self, v: VertexId) -> PyResult<()> {
        if (v as usize) < self.inner.n() {
            Ok(())
        } else {
            Err(value_err(format!("vertex {v} out of range")))
        }
    }
}

/// A built or loaded index bound to its network.
#[pyclass(frozen, module = "pyroadbench")]
pub struct Index {
    net: Arc<RoadNetwork>,
    inner: CoreIndex,
}

#[pymethods]
impl Index {
    /// Builds an index: method is one of `ch`, `tnr`, `silc`, `pcpd`.
    #[staticmethod]
    #[pyo3(signature = (net, method, grid = 128, fallback = "ch"))]
    fn build(py: Python<'_>, net: &Network, method: &str, grid: u32, fallback: &str) -> PyResult<Self> {
        let opts = BuildOptions {
            method: method.parse::<Method>().map_err(value_err)?,
            grid,
            fallback: fallback.parse::<FallbackKind>().map_err(value_err)?,
            ..Default::default()
        };
        let arc = net.inner.clone();
        let (inner, _) = py.detach(|| build_index(&arc, &opts)).map_err(value_err)?;
        Ok(Index { net: arc, inner })
    }

    /// Loads a container written by `store` or the CLI.
    #[staticmethod]
    fn load(path: &str, net: &Network) -> PyResult<Self> {
        let inner = CoreIndex::load(path, &net.inner).map_err(value_err)?;
        Ok(Index { net: net.inner.clone(), inner })
    }

    /// Writes the container and returns its size in bytes.
    fn store(&self, path: &str) -> PyResult<usize> {
        self.inner.store(&self.net, path).map_err(value_err)
    }

    /// The serialized container.
    fn to_bytes(&self) -> Vec<u8> {
        self.inner.to_bytes(&self.net)
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method().name()
    }

    fn distance(&self, s: VertexId, t: VertexId) -> PyResult<u64> {
        self.inner.engine(&self.net).distance(s, t).map_err(value_err)
    }

    /// Shortest path as `(vertices, length)`.
    fn path(&self, s: VertexId, t: VertexId) -> PyResult<(Vec<VertexId>, u64)> {
        let p = self.inner.engine(&self.net).path(s, t).map_err(value_err)?;
        Ok((p.vertices, p.length))
    }

    /// Distances for many pairs, reusing one engine.
    fn distances(&self, py: Python<'_>, pairs: Vec<(VertexId, VertexId)>) -> PyResult<Vec<u64>> {
        py.detach(|| {
            let mut e = self.inner.engine(&self.net);
            pairs.iter().map(|&(s, t)| e.distance(s, t)).collect::<Result<Vec<_>, _>>()
        })
        .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Index(method={}, n={})", self.inner.method(), self.net.n())
    }
}

/// Q_1..Q_10 sets bucketed by L-infinity distance: list of `(label, pairs)`.
#[pyfunction]
#[pyo3(signature = (net, count, seed = 1))]
fn gen_linf_sets(net: &Network, count: usize, seed: u64) -> Vec<(String, Vec<(VertexId, VertexId)>)> {
    workload::gen_linf_sets(&net.inner, count, seed).0.into_iter().map(|s| (s.label, s.pairs)).collect()
}

/// R_1..R_10 sets bucketed by network distance: list of `(label, pairs)`.
#[pyfunction]
#[pyo3(signature = (net, count, seed = 1))]
fn gen_network_sets(net: &Network, count: usize, seed: u64) -> Vec<(String, Vec<(VertexId, VertexId)>)> {
    workload::gen_network_sets(&net.inner, count, seed).0.into_iter().map(|s| (s.label, s.pairs)).collect()
}

/// Redundancy rows `(s, t, len_p, len_pprime or None)`.
#[pyfunction]
fn measure_delta(net: &Network, pairs: Vec<(VertexId, VertexId)>) -> PyResult<Vec<DeltaRow>> {
    for &(s, t) in &pairs {
        net.check(s)?;
        net.check(t)?;
    }
    Ok(workload::measure_delta(&net.inner, &pairs).rows.into_iter().map(|r| (r.s, r.t, r.len_p, r.len_pprime)).collect())
}

/// Exact shortest-path engines for road networks.
#[pymodule]
fn pyroadbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<Index>()?;
    m.add_function(wrap_pyfunction!(gen_linf_sets, m)?)?;
    m.add_function(wrap_pyfunction!(gen_network_sets, m)?)?;
    m.add_function(wrap_pyfunction!(measure_delta, m)?)?;
    Ok(())
}
