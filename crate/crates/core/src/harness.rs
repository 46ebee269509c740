//! Building, timing, verifying and reporting, shared by the CLI and tests.
//!
//! CSV schemas:
//!
//! * build rows: `dataset,method,params,vertices,edges,build_s,index_bytes`
//! * query rows: `dataset,method,queryset,mode,threads,count,mean_us`
//!   (`mean_us` blank for empty sets), preceded by `#` comment lines
//!   describing the timing protocol
//! * report: one row per `(dataset, method)` with build columns followed by
//!   one `<queryset>:<mode>` latency column per observed combination; gaps
//!   stay blank
//!
//! Latency is the mean monotonic wall time per query, in microseconds,
//! after a warm-up of the first [`WARMUP`] queries of each set (run once,
//! not timed). Timings exclude graph and index loading.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::Path as FsPath;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::ch::{self, ChParams};
use crate::container::{ContainerError, Index, Method};
use crate::dijkstra::BidiDijkstra;
use crate::graph::{load_dimacs, Distance, GraphError, RoadNetwork, VertexId};
use crate::pcpd::build_pcp_set;
use crate::silc::build_silc;
use crate::tnr::{build_tnr, FallbackKind, TnrError};
use crate::workload::{QuerySet, WorkloadError};
use crate::{BaselineEngine, QueryEngine, QueryError};

pub const WARMUP: usize = 10;
/// Default RAM budget for benchmarking an index, in bytes.
pub const DEFAULT_RAM_BUDGET: u64 = 4 << 30;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Verification(String),
}

impl HarnessError {
    /// Process exit code: 1 usage, 2 verification failure, 3 data error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Verification(_) => 2,
            HarnessError::Data(_) => 3,
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(GraphError, ContainerError, WorkloadError, TnrError, QueryError, std::io::Error, csv::Error);

pub fn load_network(graph: &FsPath, coords: &FsPath) -> Result<RoadNetwork, HarnessError> {
    let open = |p: &FsPath| {
        File::open(p).map(BufReader::new).map_err(|e| HarnessError::Data(format!("{}: {e}", p.display())))
    };
    Ok(load_dimacs(open(graph)?, open(coords)?)?)
}

/// Dataset name used in CSV rows: the graph file stem.
pub fn dataset_name(graph: &FsPath) -> String {
    graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into())
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub method: Method,
    pub grid: u32,
    pub fallback: FallbackKind,
    pub ch: ChParams,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { method: Method::Ch, grid: 128, fallback: FallbackKind::Ch, ch: ChParams::default() }
    }
}

impl BuildOptions {
    pub fn params(&self) -> String {
        match self.method {
            Method::Tnr => format!("grid={};fallback={}", self.grid, self.fallback),
            _ => String::new(),
        }
    }
}

/// Builds an index and reports the preprocessing wall time.
pub fn build_index(net: &RoadNetwork, opts: &BuildOptions) -> Result<(Index, Duration), HarnessError> {
    let start = Instant::now();
    let idx = match opts.method {
        Method::Ch => Index::Ch(ch::build(net, &opts.ch)),
        Method::Tnr => Index::Tnr(build_tnr(net, opts.grid, opts.fallback)?),
        Method::Silc => Index::Silc(build_silc(net)),
        Method::Pcpd => Index::Pcpd(build_pcp_set(net)),
    };
    Ok((idx, start.elapsed()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildRow {
    pub dataset: String,
    pub method: String,
    pub params: String,
    pub vertices: usize,
    pub edges: usize,
    pub build_s: f64,
    pub index_bytes: u64,
}

pub const BUILD_HEADER: [&str; 7] = ["dataset", "method", "params", "vertices", "edges", "build_s", "index_bytes"];
pub const QUERY_HEADER: [&str; 7] = ["dataset", "method", "queryset", "mode", "threads", "count", "mean_us"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Distance,
    Path,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distance" => Ok(Mode::Distance),
            "path" => Ok(Mode::Path),
            other => Err(format!("unknown mode `{other}` (expected distance or path)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Distance => "distance",
            Mode::Path => "path",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryRow {
    pub dataset: String,
    pub method: String,
    pub queryset: String,
    pub mode: Mode,
    pub threads: usize,
    pub count: usize,
    pub mean_us: Option<f64>,
}

/// Outcome of running one query set.
#[derive(Clone, Debug, PartialEq)]
pub struct SetResult {
    pub count: usize,
    pub mean: Option<Duration>,
    /// Answer per query, in input order.
    pub distances: Vec<Distance>,
}

fn answer(
    engine: &mut dyn QueryEngine,
    net: &RoadNetwork,
    s: VertexId,
    t: VertexId,
    mode: Mode,
    verify_paths: bool,
) -> Result<Distance, HarnessError> {
    match mode {
        Mode::Distance => Ok(engine.distance(s, t)?),
        Mode::Path => {
            let p = engine.path(s, t)?;
            if verify_paths {
                net.check_path(&p)
                    .map_err(|e| HarnessError::Verification(format!("invalid path for ({s}, {t}): {e}")))?;
            }
            Ok(p.length)
        }
    }
}

/// Runs a set on one engine: the first [`WARMUP`] queries untimed, then
/// every query timed individually.
pub fn run_set(
    engine: &mut dyn QueryEngine,
    net: &RoadNetwork,
    pairs: &[(VertexId, VertexId)],
    mode: Mode,
    verify_paths: bool,
) -> Result<SetResult, HarnessError> {
    for &(s, t) in pairs.iter().take(WARMUP) {
        answer(engine, net, s, t, mode, verify_paths)?;
    }
    let mut total = Duration::ZERO;
    let mut distances = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        let start = Instant::now();
        let d = answer(engine, net, s, t, mode, verify_paths)?;
        total += start.elapsed();
        distances.push(d);
    }
    let mean = (!pairs.is_empty()).then(|| total / pairs.len() as u32);
    Ok(SetResult { count: pairs.len(), mean, distances })
}

/// Something that hands out fresh query engines.
pub trait EngineSource: Sync {
    fn engine<'a>(&'a self, net: &'a RoadNetwork) -> Box<dyn QueryEngine + 'a>;
    fn name(&self) -> String;
}

impl EngineSource for Index {
    fn engine<'a>(&'a self, net: &'a RoadNetwork) -> Box<dyn QueryEngine + 'a> {
        Index::engine(self, net)
    }

    fn name(&self) -> String {
        self.method().to_string()
    }
}

/// Bidirectional Dijkstra without an index.
pub struct Baseline;

impl EngineSource for Baseline {
    fn engine<'a>(&'a self, net: &'a RoadNetwork) -> Box<dyn QueryEngine + 'a> {
        Box::new(BaselineEngine::new(net))
    }

    fn name(&self) -> String {
        "bidijkstra".into()
    }
}

/// Throughput mode: queries are spread over `threads` workers, each with
/// its own engine; the reported mean is wall time divided by query count.
pub fn run_set_parallel(
    source: &dyn EngineSource,
    net: &RoadNetwork,
    pairs: &[(VertexId, VertexId)],
    mode: Mode,
    threads: usize,
) -> Result<SetResult, HarnessError> {
    if threads <= 1 {
        return run_set(source.engine(net).as_mut(), net, pairs, mode, false);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    pool.install(|| {
        let start = Instant::now();
        let chunk = pairs.len().div_ceil(threads).max(1);
        let parts: Vec<Result<Vec<Distance>, HarnessError>> = pairs
            .par_chunks(chunk)
            .map(|part| {
                let mut e = source.engine(net);
                part.iter().map(|&(s, t)| answer(e.as_mut(), net, s, t, mode, false)).collect()
            })
            .collect();
        let elapsed = start.elapsed();
        let mut distances = Vec::with_capacity(pairs.len());
        for p in parts {
            distances.extend(p?);
        }
        let mean = (!pairs.is_empty()).then(|| elapsed / pairs.len() as u32);
        Ok(SetResult { count: pairs.len(), mean, distances })
    })
}

/// Refuses indexes whose container exceeds the RAM budget unless overridden.
pub fn check_budget(bytes: u64, budget: u64, allow_over: bool) -> Result<(), HarnessError> {
    if bytes > budget && !allow_over {
        return Err(HarnessError::Data(format!(
            "index is {bytes} bytes, above the RAM budget of {budget} bytes; raise the budget or pass the override flag"
        )));
    }
    Ok(())
}

fn open_append(path: &FsPath) -> Result<(File, bool), HarnessError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let f = OpenOptions::new().create(true).append(true).open(path)?;
    Ok((f, fresh))
}

pub fn append_build_rows(path: &FsPath, rows: &[BuildRow]) -> Result<(), HarnessError> {
    let (f, fresh) = open_append(path)?;
    let mut w = csv::Writer::from_writer(f);
    if fresh {
        w.write_record(BUILD_HEADER)?;
    }
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.method.clone(),
            r.params.clone(),
            r.vertices.to_string(),
            r.edges.to_string(),
            format!("{:.6}", r.build_s),
            r.index_bytes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_query_rows<W: Write>(mut out: W, rows: &[QueryRow], header: bool) -> Result<(), HarnessError> {
    if header {
        writeln!(out, "# timing: mean monotonic wall time per query in microseconds")?;
        writeln!(out, "# warmup: first {WARMUP} queries of each set run once untimed before measurement")?;
        writeln!(out, "# excluded: graph and index loading")?;
    }
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(QUERY_HEADER)?;
    }
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.method.clone(),
            r.queryset.clone(),
            r.mode.to_string(),
            r.threads.to_string(),
            r.count.to_string(),
            r.mean_us.map(|m| format!("{m:.3}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn append_query_rows(path: &FsPath, rows: &[QueryRow]) -> Result<(), HarnessError> {
    let (f, fresh) = open_append(path)?;
    write_query_rows(f, rows, fresh)
}

/// Runs every set and returns one row per set.
#[allow(clippy::too_many_arguments)]
pub fn bench_sets(
    source: &dyn EngineSource,
    net: &RoadNetwork,
    dataset: &str,
    sets: &[QuerySet],
    mode: Mode,
    threads: usize,
    verify_paths: bool,
) -> Result<(Vec<QueryRow>, Vec<SetResult>), HarnessError> {
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for set in sets {
        let res = if threads > 1 {
            run_set_parallel(source, net, &set.pairs, mode, threads)?
        } else {
            run_set(source.engine(net).as_mut(), net, &set.pairs, mode, verify_paths)?
        };
        rows.push(QueryRow {
            dataset: dataset.to_string(),
            method: source.name(),
            queryset: set.label.clone(),
            mode,
            threads: threads.max(1),
            count: res.count,
            mean_us: res.mean.map(|d| d.as_secs_f64() * 1e6),
        });
        results.push(res);
    }
    Ok((rows, results))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub method: String,
    pub s: VertexId,
    pub t: VertexId,
    pub got: String,
    pub want: Distance,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}, {}): got {}, want {}", self.method, self.s, self.t, self.got, self.want)
    }
}

/// Checks every source against bidirectional Dijkstra on `pairs`: exact
/// distances, valid paths, and path length equal to the distance.
pub fn verify(
    net: &RoadNetwork,
    sources: &[&dyn EngineSource],
    pairs: &[(VertexId, VertexId)],
) -> Vec<Mismatch> {
    let oracle: Vec<Option<Distance>> = pairs
        .par_iter()
        .map_init(|| BidiDijkstra::new(net.n()), |b, &(s, t)| b.query(net, s, t).map(|(d, _)| d))
        .collect();
    let mut out = Vec::new();
    for src in sources {
        let mut e = src.engine(net);
        for (&(s, t), want) in pairs.iter().zip(&oracle) {
            let want = want.unwrap_or(crate::INFINITY);
            let mut bad = |got: String| {
                out.push(Mismatch { method: src.name(), s: net.original_id(s), t: net.original_id(t), got, want })
            };
            match e.distance(s, t) {
                Ok(d) if d == want => {}
                Ok(d) => bad(d.to_string()),
                Err(err) => bad(format!("error: {err}")),
            }
            match e.path(s, t) {
                Ok(p) => {
                    if let Err(err) = net.check_path(&p) {
                        bad(format!("invalid path: {err}"));
                    } else if p.length != want || p.source() != s || p.target() != t {
                        bad(format!("path of length {} from {} to {}", p.length, p.source(), p.target()));
                    }
                }
                Err(err) => bad(format!("path error: {err}")),
            }
        }
    }
    out
}

/// Build and query rows merged into one table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub columns: Vec<String>,
    /// `(dataset, method)` → cells aligned with `columns`.
    pub rows: BTreeMap<(String, String), Vec<Option<String>>>,
}

impl Summary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["dataset".to_string(), "method".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for ((d, m), cells) in &self.rows {
            let mut rec = vec![d.clone(), m.clone()];
            rec.extend(cells.iter().map(|c| c.clone().unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Merges build and query CSVs. The schema of each input is recognized by
/// its header; anything else is an error.
pub fn merge_reports(inputs: &[(String, String)]) -> Result<Summary, HarnessError> {
    let mut build: BTreeMap<(String, String), [String; 4]> = BTreeMap::new();
    let mut lat: BTreeMap<(String, String), BTreeMap<String, String>> = BTreeMap::new();
    let mut lat_cols: BTreeSet<(usize, String, String)> = BTreeSet::new();
    for (name, text) in inputs {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header == BUILD_HEADER {
            for rec in r.records() {
                let rec = rec?;
                build.insert(
                    (rec[0].to_string(), rec[1].to_string()),
                    [rec[2].to_string(), rec[5].to_string(), rec[6].to_string(), rec[3].to_string()],
                );
            }
        } else if header == QUERY_HEADER {
            for rec in r.records() {
                let rec = rec?;
                let col = format!("{}:{}", &rec[2], &rec[3]);
                // Order columns by set family, set number, then mode.
                let label = &rec[2];
                let num: usize = label.trim_start_matches(|c: char| !c.is_ascii_digit()).parse().unwrap_or(0);
                let family = label.trim_end_matches(|c: char| c.is_ascii_digit()).to_string();
                lat_cols.insert((0, format!("{family}{num:05}:{}", &rec[3]), col.clone()));
                lat.entry((rec[0].to_string(), rec[1].to_string())).or_default().insert(col, rec[6].to_string());
            }
        } else {
            return Err(HarnessError::Data(format!("{name}: unrecognized CSV header {header:?}")));
        }
    }
    let mut columns: Vec<String> = ["params", "build_s", "index_bytes", "vertices"].map(String::from).to_vec();
    let lat_names: Vec<String> = lat_cols.into_iter().map(|c| c.2).collect();
    columns.extend(lat_names.iter().cloned());
    let keys: BTreeSet<(String, String)> = build.keys().chain(lat.keys()).cloned().collect();
    let mut rows = BTreeMap::new();
    for k in keys {
        let mut cells: Vec<Option<String>> = match build.get(&k) {
            Some(b) => b.iter().map(|s| Some(s.clone())).collect(),
            None => vec![None; 4],
        };
        for c in &lat_names {
            cells.push(lat.get(&k).and_then(|m| m.get(c)).filter(|s| !s.is_empty()).cloned());
        }
        rows.insert(k, cells);
    }
    Ok(Summary { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::synth;
    use crate::workload::gen_linf_sets;

    fn all_indexes(net: &RoadNetwork, grid: u32) -> Vec<Index> {
        [Method::Ch, Method::Tnr, Method::Silc, Method::Pcpd]
            .into_iter()
            .map(|method| build_index(net, &BuildOptions { method, grid, ..Default::default() }).unwrap().0)
            .collect()
    }

    #[test]
    fn fig1_verify_passes_for_all_methods() {
        let net = fixtures::fig1();
        let idx = all_indexes(&net, 16);
        let mut sources: Vec<&dyn EngineSource> = idx.iter().map(|i| i as &dyn EngineSource).collect();
        sources.push(&Baseline);
        let pairs: Vec<_> = (0..8).flat_map(|s| (s + 1..8).map(move |t| (s, t))).collect();
        assert_eq!(pairs.len(), 28);
        assert!(verify(&net, &sources, &pairs).is_empty());
        assert!(verify(&net, &sources, &[]).is_empty());
    }

    #[test]
    fn run_set_counts_and_empty_sets() {
        let net = synth::road_like(800, 2);
        let idx = all_indexes(&net, 16);
        let (sets, _) = gen_linf_sets(&net, 20, 1);
        for i in &idx {
            let (rows, res) = bench_sets(i, &net, "toy", &sets, Mode::Distance, 1, false).unwrap();
            assert_eq!(rows.len(), 10);
            for (r, s) in rows.iter().zip(&sets) {
                assert_eq!(r.count, s.pairs.len());
                assert_eq!(r.mean_us.is_none(), s.pairs.is_empty());
            }
            let (_, res_path) = bench_sets(i, &net, "toy", &sets, Mode::Path, 1, true).unwrap();
            assert_eq!(res, res.clone());
            for (a, b) in res.iter().zip(&res_path) {
                assert_eq!(a.distances, b.distances);
            }
        }
        let empty = QuerySet { label: "Q1".into(), seed: 0, lo: 0.0, hi: 1.0, pairs: vec![] };
        let (rows, _) = bench_sets(&Baseline, &net, "toy", &[empty], Mode::Distance, 1, false).unwrap();
        assert_eq!((rows[0].count, rows[0].mean_us), (0, None));
        let mut out = Vec::new();
        write_query_rows(&mut out, &rows, true).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("# warmup: first 10 queries"));
        assert!(text.ends_with("toy,bidijkstra,Q1,distance,1,0,\n"));
    }

    #[test]
    fn parallel_answers_match_serial() {
        let net = synth::road_like(800, 2);
        let (idx, _) = build_index(&net, &BuildOptions::default()).unwrap();
        let pairs = crate::workload::random_pairs(&net, 300, 2);
        let a = run_set_parallel(&idx, &net, &pairs, Mode::Path, 1).unwrap();
        let b = run_set_parallel(&idx, &net, &pairs, Mode::Path, 3).unwrap();
        assert_eq!(a.distances, b.distances);
    }

    #[test]
    fn budget_rule() {
        assert!(check_budget(10, 100, false).is_ok());
        assert_eq!(check_budget(1000, 100, false).unwrap_err().exit_code(), 3);
        assert!(check_budget(1000, 100, true).is_ok());
    }

    #[test]
    fn merge_with_gaps() {
        let b1 = "dataset,method,params,vertices,edges,build_s,index_bytes\nde,ch,,10,12,0.5,100\n";
        let b2 = "dataset,method,params,vertices,edges,build_s,index_bytes\nde,tnr,grid=128;fallback=ch,10,12,0.9,300\n";
        let q = "# comment\ndataset,method,queryset,mode,threads,count,mean_us\nde,ch,Q2,distance,1,5,3.5\nde,ch,Q10,distance,1,5,7.0\nde,silc,Q2,distance,1,5,1.0\n";
        let inputs = [("b1".to_string(), b1.to_string()), ("b2".into(), b2.into()), ("q".into(), q.into())];
        let s = merge_reports(&inputs).unwrap();
        assert_eq!(s.columns, vec!["params", "build_s", "index_bytes", "vertices", "Q2:distance", "Q10:distance"]);
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "dataset,method,params,build_s,index_bytes,vertices,Q2:distance,Q10:distance\n\
             de,ch,,0.5,100,10,3.5,7.0\n\
             de,silc,,,,,1.0,\n\
             de,tnr,grid=128;fallback=ch,0.9,300,10,,\n"
        );
        let bad = [("x".to_string(), "a,b\n1,2\n".to_string())];
        assert_eq!(merge_reports(&bad).unwrap_err().exit_code(), 3);
    }
}
