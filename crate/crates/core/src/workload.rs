//! Benchmark query sets and path-redundancy measurement.
//!
//! `Q_1..Q_10` bucket pairs by the L∞ distance of their coordinates: with
//! `l` the cell side of a 1024×1024 grid over the bounding box (longer
//! side), `Q_i` holds pairs with L∞ in `[2^(i-1)·l, 2^i·l)`. `R_1..R_10`
//! bucket by network distance: `R_i` holds pairs with distance in
//! `[2^(i-11)·l_d, 2^(i-10)·l_d)`, where `l_d` is a double-sweep estimate of
//! the network diameter.
//!
//! All sampling uses [`XorShift64Star`] streams derived from the seed, so a
//! seed fixes the output byte for byte.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::dijkstra::Dijkstra;
use crate::graph::{Distance, Path, RoadNetwork, VertexId, INFINITY};
use crate::rng::XorShift64Star;

pub const BUCKETS: u32 = 10;
/// Attempt cap per bucket, as a multiple of the requested count.
pub const ATTEMPTS_PER_QUERY: usize = 1000;

/// Bounds are kept as integers over a common scale so bucket tests are exact:
/// a value `v` lies in the bucket iff `lo <= v * SCALE < hi`.
const SCALE: u128 = 2048;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Bucket {
    lo: u128,
    hi: u128,
}

impl Bucket {
    fn contains(&self, v: u128) -> bool {
        let x = v * SCALE;
        self.lo <= x && x < self.hi
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lo as f64 / SCALE as f64, self.hi as f64 / SCALE as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuerySet {
    pub label: String,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    /// Dense vertex ids.
    pub pairs: Vec<(VertexId, VertexId)>,
}

/// A bucket that could not be filled within the attempt cap.
#[derive(Clone, Debug, PartialEq)]
pub struct Shortfall {
    pub label: String,
    pub wanted: usize,
    pub found: usize,
}

fn linf_bucket(extent: i64, i: u32) -> Bucket {
    // l = extent / 1024; [2^(i-1) l, 2^i l) scaled by 2048.
    let e = extent as u128;
    Bucket { lo: e << i, hi: e << (i + 1) }
}

fn network_bucket(ld: Distance, i: u32) -> Bucket {
    // [2^(i-11) l_d, 2^(i-10) l_d) scaled by 2048.
    let d = ld as u128;
    Bucket { lo: d << i, hi: d << (i + 1) }
}

/// `l` of the L∞ buckets.
pub fn linf_unit(net: &RoadNetwork) -> f64 {
    let bb = net.bounding_box();
    bb.width().max(bb.height()) as f64 / 1024.0
}

/// Ten sets `Q_1..Q_10` of `count` pairs each.
///
/// Sources are uniform. Targets are uniform among the vertices of the
/// 3×3 block of grid cells (side = the bucket's upper bound) around the
/// source and are accepted when their L∞ distance falls in the bucket.
pub fn gen_linf_sets(net: &RoadNetwork, count: usize, seed: u64) -> (Vec<QuerySet>, Vec<Shortfall>) {
    let bb = net.bounding_box();
    let extent = bb.width().max(bb.height());
    let n = net.n() as u64;
    let results: Vec<(QuerySet, Option<Shortfall>)> = (1..=BUCKETS)
        .into_par_iter()
        .map(|i| {
            let bucket = linf_bucket(extent, i);
            let (lo, hi) = bucket.bounds();
            let label = format!("Q{i}");
            let mut set = QuerySet { label: label.clone(), seed, lo, hi, pairs: Vec::with_capacity(count) };
            if count == 0 || n < 2 || extent == 0 {
                let short = (count > 0).then_some(Shortfall { label, wanted: count, found: 0 });
                return (set, short);
            }
            let side = (hi.ceil() as i64).max(1);
            let cell = |p: crate::graph::Point| ((p.x - bb.min_x).div_euclid(side), (p.y - bb.min_y).div_euclid(side));
            let mut grid: HashMap<(i64, i64), Vec<VertexId>> = HashMap::new();
            for v in 0..n as VertexId {
                grid.entry(cell(net.coord(v))).or_default().push(v);
            }
            let mut rng = XorShift64Star::stream(seed, i as u64);
            let mut window = Vec::new();
            for _ in 0..count * ATTEMPTS_PER_QUERY {
                if set.pairs.len() == count {
                    break;
                }
                let s = rng.below(n) as VertexId;
                let (cx, cy) = cell(net.coord(s));
                window.clear();
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if let Some(vs) = grid.get(&(cx + dx, cy + dy)) {
                            window.extend_from_slice(vs);
                        }
                    }
                }
                let t = window[rng.below(window.len() as u64) as usize];
                let d = net.coord(s).linf(&net.coord(t));
                if s != t && bucket.contains(d as u128) {
                    set.pairs.push((s, t));
                }
            }
            let short = (set.pairs.len() < count).then_some(Shortfall { label, wanted: count, found: set.pairs.len() });
            (set, short)
        })
        .collect();
    split_results(results)
}

fn split_results(results: Vec<(QuerySet, Option<Shortfall>)>) -> (Vec<QuerySet>, Vec<Shortfall>) {
    let mut sets = Vec::new();
    let mut short = Vec::new();
    for (s, f) in results {
        sets.push(s);
        short.extend(f);
    }
    (sets, short)
}

/// Double-sweep estimate of the largest shortest-path distance: starting
/// from a random vertex, repeatedly jump to the farthest vertex found.
pub fn estimate_diameter(net: &RoadNetwork, seed: u64, sweeps: usize) -> Distance {
    if net.n() == 0 {
        return 0;
    }
    let mut rng = XorShift64Star::stream(seed, 0xd1a);
    let mut search = Dijkstra::new(net.n());
    let mut v = rng.below(net.n() as u64) as VertexId;
    let mut best = 0;
    for _ in 0..sweeps.max(1) {
        search.run(net, v, |_, _| false);
        let far = *search.settled_order().last().expect("source is settled");
        best = best.max(search.dist(far));
        if far == v {
            break;
        }
        v = far;
    }
    best
}

/// Sources examined per parallel batch when filling `R_i`.
const BATCH: usize = 32;
/// A bucket without a single candidate after this many sources is given up.
const PROBE_SOURCES: usize = 256;

/// Ten sets `R_1..R_10` of `count` pairs each. Every sampled source gets
/// one full search; each unfilled bucket then draws one target uniformly
/// among the vertices at an in-bucket distance.
pub fn gen_network_sets(net: &RoadNetwork, count: usize, seed: u64) -> (Vec<QuerySet>, Vec<Shortfall>, Distance) {
    let ld = estimate_diameter(net, seed, 4);
    let buckets: Vec<Bucket> = (1..=BUCKETS).map(|i| network_bucket(ld, i)).collect();
    let mut sets: Vec<QuerySet> = buckets
        .iter()
        .zip(1..)
        .map(|(b, i)| {
            let (lo, hi) = b.bounds();
            QuerySet { label: format!("R{i}"), seed, lo, hi, pairs: Vec::with_capacity(count) }
        })
        .collect();
    let n = net.n();
    let mut seen = vec![false; BUCKETS as usize];
    let mut attempts = 0usize;
    let cap = count * ATTEMPTS_PER_QUERY;
    let mut next_source = 0u64;
    while count > 0 && n >= 2 && attempts < cap {
        let open: Vec<usize> = (0..BUCKETS as usize)
            .filter(|&b| sets[b].pairs.len() < count && (seen[b] || attempts < PROBE_SOURCES))
            .collect();
        if open.is_empty() {
            break;
        }
        let batch: Vec<u64> = (next_source..next_source + BATCH as u64).collect();
        next_source += BATCH as u64;
        let picks: Vec<Vec<(usize, VertexId, VertexId)>> = batch
            .par_iter()
            .map_init(
                || Dijkstra::new(n),
                |search, &k| {
                    let mut rng = XorShift64Star::stream(seed, k + 1);
                    let s = rng.below(n as u64) as VertexId;
                    search.run(net, s, |_, _| false);
                    let mut cand: Vec<Vec<VertexId>> = vec![Vec::new(); BUCKETS as usize];
                    for &t in search.settled_order() {
                        let d = search.dist(t) as u128;
                        for &b in &open {
                            if t != s && buckets[b].contains(d) {
                                cand[b].push(t);
                            }
                        }
                    }
                    open.iter()
                        .filter(|&&b| !cand[b].is_empty())
                        .map(|&b| (b, s, cand[b][rng.below(cand[b].len() as u64) as usize]))
                        .collect()
                },
            )
            .collect();
        for pick in picks {
            attempts += 1;
            for (b, s, t) in pick {
                seen[b] = true;
                if sets[b].pairs.len() < count {
                    sets[b].pairs.push((s, t));
                }
            }
        }
    }
    let short = sets
        .iter()
        .filter(|s| s.pairs.len() < count)
        .map(|s| Shortfall { label: s.label.clone(), wanted: count, found: s.pairs.len() })
        .collect();
    (sets, short, ld)
}

/// `count` uniform pairs of distinct vertices.
pub fn random_pairs(net: &RoadNetwork, count: usize, seed: u64) -> Vec<(VertexId, VertexId)> {
    let n = net.n() as u64;
    if n < 2 {
        return Vec::new();
    }
    let mut rng = XorShift64Star::stream(seed, 0x5eed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (s, t) = (rng.below(n) as VertexId, rng.below(n) as VertexId);
        if s != t {
            out.push((s, t));
        }
    }
    out
}

/// Writes sets in the text query format, using original DIMACS ids.
pub fn write_query_sets<W: Write>(mut w: W, net: &RoadNetwork, sets: &[QuerySet]) -> std::io::Result<()> {
    let mut buf = String::new();
    for set in sets {
        writeln!(buf, "# queryset {} {} {} {}", set.label, set.seed, set.lo, set.hi).expect("string write");
        for &(s, t) in &set.pairs {
            writeln!(buf, "{} {}", net.original_id(s), net.original_id(t)).expect("string write");
        }
    }
    w.write_all(buf.as_bytes())
}

/// Parses one or more query sets; ids are mapped back to dense ids.
pub fn read_query_sets(text: &str, net: &RoadNetwork) -> Result<Vec<QuerySet>, WorkloadError> {
    let mut sets: Vec<QuerySet> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| WorkloadError::Parse { line, msg };
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if f.first() != Some(&"queryset") {
                continue;
            }
            if f.len() != 5 {
                return Err(err("expected `# queryset <label> <seed> <lo> <hi>`".into()));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad bound `{s}`")));
            sets.push(QuerySet {
                label: f[1].to_string(),
                seed: f[2].parse().map_err(|_| err(format!("bad seed `{}`", f[2])))?,
                lo: num(f[3])?,
                hi: num(f[4])?,
                pairs: Vec::new(),
            });
            continue;
        }
        let set = sets.last_mut().ok_or_else(|| err("query before any `# queryset` header".into()))?;
        let mut it = l.split_whitespace();
        let mut id = || -> Result<VertexId, WorkloadError> {
            let tok = it.next().ok_or_else(|| err("expected `s t`".into()))?;
            let orig: u32 = tok.parse().map_err(|_| err(format!("bad vertex id `{tok}`")))?;
            net.dense_id(orig).ok_or_else(|| err(format!("vertex {orig} is not in the network")))
        };
        let (s, t) = (id()?, id()?);
        if it.next().is_some() {
            return Err(err("trailing fields".into()));
        }
        set.pairs.push((s, t));
    }
    Ok(sets)
}

/// One row of a redundancy measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaRow {
    pub s: VertexId,
    pub t: VertexId,
    pub len_p: Distance,
    /// Length of the best path avoiding the interior of `P`, if any.
    pub len_pprime: Option<Distance>,
}

impl DeltaRow {
    pub fn ratio(&self) -> Option<f64> {
        self.len_pprime.map(|d| d as f64 / self.len_p as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RedundancyReport {
    pub rows: Vec<DeltaRow>,
}

impl RedundancyReport {
    pub fn min_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(DeltaRow::ratio).min_by(f64::total_cmp)
    }

    /// Queries whose endpoints are separated once `P`'s interior is removed.
    pub fn no_alternative(&self) -> usize {
        self.rows.iter().filter(|r| r.len_pprime.is_none()).count()
    }

    /// CSV `s,t,len_p,len_pprime,ratio` with original ids; blank fields when
    /// no alternative exists.
    pub fn write_csv<W: Write>(&self, w: W, net: &RoadNetwork) -> Result<(), WorkloadError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s", "t", "len_p", "len_pprime", "ratio"])?;
        for r in &self.rows {
            out.write_record([
                net.original_id(r.s).to_string(),
                net.original_id(r.t).to_string(),
                r.len_p.to_string(),
                r.len_pprime.map(|d| d.to_string()).unwrap_or_default(),
                r.ratio().map(|x| format!("{x:.6}")).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn delta_row(net: &RoadNetwork, search: &mut Dijkstra, blocked: &mut [bool], s: VertexId, t: VertexId) -> Option<DeltaRow> {
    search.run(net, s, |u, _| u == t);
    let p: Path = search.path_to(t)?;
    let interior = &p.vertices[1..p.vertices.len() - 1];
    for &v in interior {
        blocked[v as usize] = true;
    }
    let single_edge = p.k() == 1;
    let allow = |u: VertexId, v: VertexId| {
        !blocked[v as usize] && !(single_edge && ((u == s && v == t) || (u == t && v == s)))
    };
    search.run_filtered(net, s, allow, |u, _| u == t);
    let alt = search.dist(t);
    for &v in interior {
        blocked[v as usize] = false;
    }
    Some(DeltaRow { s, t, len_p: p.length, len_pprime: (alt != INFINITY).then_some(alt) })
}

/// For every pair, compares the canonical shortest path `P` with the
/// shortest path sharing no interior vertex with it (for a single-edge `P`,
/// the shortest path not using that edge). Pairs with `s == t` or no path
/// are skipped.
pub fn measure_delta(net: &RoadNetwork, pairs: &[(VertexId, VertexId)]) -> RedundancyReport {
    let rows = pairs
        .par_iter()
        .map_init(
            || (Dijkstra::new(net.n()), vec![false; net.n()]),
            |(search, blocked), &(s, t)| if s == t { None } else { delta_row(net, search, blocked, s, t) },
        )
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    RedundancyReport { rows }
}
