//! SILC: per-source first-hop maps compressed into Z-order intervals.
//!
//! For a source `s`, every other vertex is colored by the neighbor of `s`
//! that starts the canonical shortest path to it. A quadtree over the
//! quantized plane splits until each square is single-colored; the leaf
//! squares are contiguous Morton code intervals, stored sorted so a
//! lookup is one binary search. A path query repeats the lookup from each
//! hop until the target is reached.

use rayon::prelude::*;

use crate::container::{ByteReader, ByteWriter, ContainerError};
use crate::dijkstra::Dijkstra;
use crate::graph::{BoundingBox, Distance, Path, RoadNetwork, VertexId, NO_VERTEX};
use crate::morton::{Quantizer, DEFAULT_BITS};
use crate::tnr::coords_fingerprint;
use crate::{check_range, QueryEngine, QueryError};

/// Vertex count above which the build warns about index size.
pub const LARGE_GRAPH_WARNING: usize = 1_000_000;

/// First hop of the canonical shortest path from `source` to every vertex;
/// `NO_VERTEX` for the source itself and for unreachable vertices.
pub fn first_hop_partition(net: &RoadNetwork, source: VertexId) -> Vec<VertexId> {
    let mut search = Dijkstra::new(net.n());
    first_hop_with(net, source, &mut search)
}

fn first_hop_with(net: &RoadNetwork, source: VertexId, search: &mut Dijkstra) -> Vec<VertexId> {
    search.run(net, source, |_, _| false);
    let mut hop = vec![NO_VERTEX; net.n()];
    // Parents settle before children, so one pass in settle order suffices.
    for &u in &search.settled_order()[1..] {
        let p = search.parent(u);
        hop[u as usize] = if p == source { u } else { hop[p as usize] };
    }
    hop
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColoredInterval {
    pub lo: u32,
    pub hi: u32,
    pub color: VertexId,
}

/// Compressed first-hop map of one source.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ColoredIntervalMap {
    pub source: VertexId,
    /// Sorted, disjoint.
    pub intervals: Vec<ColoredInterval>,
    /// `(vertex, color)` overrides sorted by vertex, for vertices sharing a
    /// quantized point with differently colored vertices.
    pub exceptions: Vec<(VertexId, VertexId)>,
}

impl ColoredIntervalMap {
    pub fn lookup(&self, t: VertexId, code: u32) -> Option<VertexId> {
        if let Ok(i) = self.exceptions.binary_search_by_key(&t, |e| e.0) {
            return Some(self.exceptions[i].1);
        }
        let i = self.intervals.partition_point(|iv| iv.lo <= code).checked_sub(1)?;
        let iv = self.intervals[i];
        (code <= iv.hi).then_some(iv.color)
    }
}

/// Quadtree compression of a first-hop partition. `codes[v]` is the Morton
/// code of vertex `v`; vertices colored `NO_VERTEX` are skipped.
pub fn build_interval_map(
    source: VertexId,
    partition: &[VertexId],
    codes: &[u32],
    quantizer: &Quantizer,
) -> ColoredIntervalMap {
    let mut points: Vec<(u32, VertexId, VertexId)> = partition
        .iter()
        .enumerate()
        .filter(|&(v, &c)| v as VertexId != source && c != NO_VERTEX)
        .map(|(v, &c)| (codes[v], v as VertexId, c))
        .collect();
    points.sort_unstable();
    let mut map = ColoredIntervalMap { source, ..Default::default() };
    split(&points, 0, 0, quantizer, &mut map);
    map.exceptions.sort_unstable();

    let mut merged: Vec<ColoredInterval> = Vec::with_capacity(map.intervals.len());
    for iv in map.intervals.drain(..) {
        match merged.last_mut() {
            // Gaps between leaves hold no vertices, so merging across them
            // changes no lookup.
            Some(last) if last.color == iv.color => last.hi = iv.hi,
            _ => merged.push(iv),
        }
    }
    map.intervals = merged;
    map
}

fn split(points: &[(u32, VertexId, VertexId)], depth: u32, prefix: u32, q: &Quantizer, map: &mut ColoredIntervalMap) {
    if points.is_empty() {
        return;
    }
    let (lo, hi) = q.square_range(depth, prefix);
    let first = points[0].2;
    if points.iter().all(|p| p.2 == first) {
        map.intervals.push(ColoredInterval { lo, hi, color: first });
        return;
    }
    if depth == q.bits() {
        // One quantized point with several colors: the majority color takes
        // the interval (smaller id on ties), the rest become exceptions.
        let mut colors: Vec<VertexId> = points.iter().map(|p| p.2).collect();
        colors.sort_unstable();
        let mut best = (0usize, NO_VERTEX);
        for run in colors.chunk_by(|a, b| a == b) {
            if run.len() > best.0 {
                best = (run.len(), run[0]);
            }
        }
        map.intervals.push(ColoredInterval { lo, hi, color: best.1 });
        map.exceptions.extend(points.iter().filter(|p| p.2 != best.1).map(|p| (p.1, p.2)));
        return;
    }
    let mut rest = points;
    for child in 0..4 {
        let cp = (prefix << 2) | child;
        let (_, chi) = q.square_range(depth + 1, cp);
        let cut = rest.partition_point(|p| p.0 <= chi);
        split(&rest[..cut], depth + 1, cp, q, map);
        rest = &rest[cut..];
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SilcIndex {
    quantizer: Quantizer,
    coords_fingerprint: u64,
    codes: Vec<u32>,
    first: Vec<u64>,
    lo: Vec<u32>,
    hi: Vec<u32>,
    color: Vec<VertexId>,
    exc_first: Vec<u64>,
    exceptions: Vec<(VertexId, VertexId)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SilcStats {
    pub intervals: usize,
    pub exceptions: usize,
    pub mean_intervals_per_vertex: f64,
}

fn vertex_codes(net: &RoadNetwork, q: &Quantizer) -> Vec<u32> {
    net.coords().iter().map(|&p| q.code(p)).collect()
}

/// Builds one interval map per vertex, in parallel over sources.
pub fn build_silc(net: &RoadNetwork) -> SilcIndex {
    build_silc_with_bits(net, DEFAULT_BITS)
}

pub fn build_silc_with_bits(net: &RoadNetwork, bits: u32) -> SilcIndex {
    if net.n() > LARGE_GRAPH_WARNING {
        log::warn!(
            "building SILC on {} vertices; the index grows superlinearly and may not fit in memory",
            net.n()
        );
    }
    let quantizer = Quantizer::new(net.bounding_box(), bits);
    let codes = vertex_codes(net, &quantizer);
    let maps: Vec<ColoredIntervalMap> = (0..net.n() as VertexId)
        .into_par_iter()
        .map_init(
            || Dijkstra::new(net.n()),
            |search, s| build_interval_map(s, &first_hop_with(net, s, search), &codes, &quantizer),
        )
        .collect();
    SilcIndex::from_maps(quantizer, coords_fingerprint(net), codes, maps)
}

impl SilcIndex {
    fn from_maps(quantizer: Quantizer, coords_fingerprint: u64, codes: Vec<u32>, maps: Vec<ColoredIntervalMap>) -> Self {
        let mut idx = SilcIndex {
            quantizer,
            coords_fingerprint,
            codes,
            first: vec![0],
            lo: Vec::new(),
            hi: Vec::new(),
            color: Vec::new(),
            exc_first: vec![0],
            exceptions: Vec::new(),
        };
        for m in maps {
            for iv in m.intervals {
                idx.lo.push(iv.lo);
                idx.hi.push(iv.hi);
                idx.color.push(iv.color);
            }
            idx.first.push(idx.lo.len() as u64);
            idx.exceptions.extend(m.exceptions);
            idx.exc_first.push(idx.exceptions.len() as u64);
        }
        idx
    }

    pub fn n(&self) -> usize {
        self.codes.len()
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    /// The map of source `s`, copied out.
    pub fn map(&self, s: VertexId) -> ColoredIntervalMap {
        let (a, b) = (self.first[s as usize] as usize, self.first[s as usize + 1] as usize);
        let (ea, eb) = (self.exc_first[s as usize] as usize, self.exc_first[s as usize + 1] as usize);
        ColoredIntervalMap {
            source: s,
            intervals: (a..b).map(|i| ColoredInterval { lo: self.lo[i], hi: self.hi[i], color: self.color[i] }).collect(),
            exceptions: self.exceptions[ea..eb].to_vec(),
        }
    }

    pub fn interval_count(&self, s: VertexId) -> usize {
        (self.first[s as usize + 1] - self.first[s as usize]) as usize
    }

    pub fn stats(&self) -> SilcStats {
        SilcStats {
            intervals: self.lo.len(),
            exceptions: self.exceptions.len(),
            mean_intervals_per_vertex: if self.n() == 0 { 0.0 } else { self.lo.len() as f64 / self.n() as f64 },
        }
    }

    /// Neighbor of `s` starting the canonical shortest path to `t` (`s ≠ t`).
    pub fn lookup_first_hop(&self, s: VertexId, t: VertexId) -> Result<VertexId, QueryError> {
        let (ea, eb) = (self.exc_first[s as usize] as usize, self.exc_first[s as usize + 1] as usize);
        let exc = &self.exceptions[ea..eb];
        if let Ok(i) = exc.binary_search_by_key(&t, |e| e.0) {
            return Ok(exc[i].1);
        }
        let (a, b) = (self.first[s as usize] as usize, self.first[s as usize + 1] as usize);
        let code = self.codes[t as usize];
        let lo = &self.lo[a..b];
        let i = lo.partition_point(|&l| l <= code);
        if i == 0 || self.hi[a + i - 1] < code {
            return Err(QueryError::Corrupt(format!("vertex {t} not covered by the map of {s}")));
        }
        Ok(self.color[a + i - 1])
    }

    /// Path by iterated first-hop lookups.
    pub fn path(&self, net: &RoadNetwork, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        let mut path = Path::trivial(s);
        let mut cur = s;
        while cur != t {
            if path.k() >= net.n() {
                return Err(QueryError::Corrupt(format!("first-hop walk from {s} to {t} revisits a vertex")));
            }
            let hop = self.lookup_first_hop(cur, t)?;
            let w = net
                .edge_weight(cur, hop)
                .ok_or_else(|| QueryError::Corrupt(format!("first hop {hop} is not adjacent to {cur}")))?;
            path.vertices.push(hop);
            path.length += w as Distance;
            cur = hop;
        }
        Ok(path)
    }

    pub(crate) fn write_payload(&self, w: &mut ByteWriter) {
        w.u32(self.quantizer.bits());
        let bb = self.quantizer.bbox();
        for x in [bb.min_x, bb.min_y, bb.max_x, bb.max_y] {
            w.i64(x);
        }
        w.u64(self.coords_fingerprint);
        w.u64(self.n() as u64);
        for s in 0..self.n() {
            let (a, b) = (self.first[s] as usize, self.first[s + 1] as usize);
            w.u32((b - a) as u32);
            for i in a..b {
                w.u32(self.lo[i]);
                w.u32(self.hi[i]);
                w.u32(self.color[i]);
            }
            let (ea, eb) = (self.exc_first[s] as usize, self.exc_first[s + 1] as usize);
            w.u32((eb - ea) as u32);
            for &(v, c) in &self.exceptions[ea..eb] {
                w.u32(v);
                w.u32(c);
            }
        }
    }

    pub(crate) fn read_payload(r: &mut ByteReader<'_>, net: &RoadNetwork) -> Result<Self, ContainerError> {
        let bad = |m: String| ContainerError::Payload(m);
        let bits = r.u32()?;
        if !(1..=16).contains(&bits) {
            return Err(bad(format!("bits per axis {bits} out of range")));
        }
        let (min_x, min_y, max_x, max_y) = (r.i64()?, r.i64()?, r.i64()?, r.i64()?);
        let quantizer = Quantizer::new(BoundingBox { min_x, min_y, max_x, max_y }, bits);
        if r.u64()? != coords_fingerprint(net) {
            return Err(bad("coordinates differ from the indexed network".into()));
        }
        let n = r.count(8)?;
        if n != net.n() {
            return Err(bad(format!("index has {n} maps for {} vertices", net.n())));
        }
        let mut maps = Vec::with_capacity(n);
        for s in 0..n as VertexId {
            let mut m = ColoredIntervalMap { source: s, ..Default::default() };
            let count = r.u32()? as usize;
            for _ in 0..count {
                let iv = ColoredInterval { lo: r.u32()?, hi: r.u32()?, color: r.u32()? };
                let ordered = m.intervals.last().is_none_or(|p| p.hi < iv.lo);
                if iv.lo > iv.hi || !ordered || iv.color as usize >= n {
                    return Err(bad(format!("malformed interval list for vertex {s}")));
                }
                m.intervals.push(iv);
            }
            let count = r.u32()? as usize;
            for _ in 0..count {
                let e = (r.u32()?, r.u32()?);
                let ordered = m.exceptions.last().is_none_or(|p| p.0 < e.0);
                if !ordered || e.0 as usize >= n || e.1 as usize >= n {
                    return Err(bad(format!("malformed exception list for vertex {s}")));
                }
                m.exceptions.push(e);
            }
            maps.push(m);
        }
        let codes = vertex_codes(net, &quantizer);
        Ok(SilcIndex::from_maps(quantizer, coords_fingerprint(net), codes, maps))
    }
}

pub struct SilcEngine<'a> {
    idx: &'a SilcIndex,
    net: &'a RoadNetwork,
}

impl<'a> SilcEngine<'a> {
    pub fn new(idx: &'a SilcIndex, net: &'a RoadNetwork) -> Self {
        SilcEngine { idx, net }
    }
}

impl QueryEngine for SilcEngine<'_> {
    /// SILC has no shortcut to distances: the path is walked and summed.
    fn distance(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError> {
        self.path(s, t).map(|p| p.length)
    }

    fn path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        check_range(self.net, s)?;
        check_range(self.net, t)?;
        self.idx.path(self.net, s, t)
    }
}
