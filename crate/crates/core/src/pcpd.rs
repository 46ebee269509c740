//! Path-coherent pair decomposition.
//!
//! A pair of disjoint quadtree squares `(X, Y)` is path-coherent with
//! element `psi` (a vertex or a directed edge) when the canonical shortest
//! path from every vertex of `X` to every vertex of `Y` contains `psi`.
//! Starting from `(root, root)`, candidates that fail the test (and all
//! diagonal candidates `X = Y`) are split 16 ways; squares without
//! vertices are dropped. Every ordered pair of distinct vertices ends up
//! covered by exactly one stored pair, or by a per-pair exception when both
//! vertices share a quantized point.
//!
//! A path query looks up the pair covering `(s, t)` and recurses on both
//! sides of `psi`.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::container::{ByteReader, ByteWriter, ContainerError};
use crate::dijkstra::Dijkstra;
use crate::graph::{BoundingBox, Distance, Path, RoadNetwork, VertexId, NO_VERTEX};
use crate::morton::{Quantizer, DEFAULT_BITS};
use crate::tnr::coords_fingerprint;
use crate::{check_range, QueryError};

/// Default memory allowed for precomputed shortest-path trees.
pub const DEFAULT_TREE_BUDGET: usize = 2 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Psi {
    Vertex(VertexId),
    /// Directed as traversed from the `X` side.
    Edge(VertexId, VertexId),
}

impl Psi {
    /// Kind tag followed by one id for a vertex or two for an edge.
    fn write(self, w: &mut ByteWriter) {
        match self {
            Psi::Vertex(v) => {
                w.u8(1);
                w.u32(v);
            }
            Psi::Edge(a, b) => {
                w.u8(2);
                w.u32(a);
                w.u32(b);
            }
        }
    }
}

/// A stored pair: squares `x` and `y` at `depth`, named by Morton prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PathCoherentPair {
    pub depth: u32,
    pub x: u32,
    pub y: u32,
    pub psi: Psi,
}

/// Pairs of one depth keyed by `x << 32 | y`.
type Level = FxHashMap<u64, Psi>;
type Child<'a> = (u32, &'a [VertexId]);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcpdIndex {
    quantizer: Quantizer,
    coords_fingerprint: u64,
    codes: Vec<u32>,
    /// Indexed by depth.
    levels: Vec<Level>,
    /// Pairs of vertices sharing a quantized point: `((s, t), psi)`.
    exceptions: Vec<((VertexId, VertexId), Psi)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcpdStats {
    pub pairs: usize,
    pub exceptions: usize,
    pub max_depth: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct PcpdParams {
    pub bits: u32,
    /// Bytes allowed for all-pairs parent trees; above it trees are
    /// recomputed per candidate.
    pub tree_budget: usize,
}

impl Default for PcpdParams {
    fn default() -> Self {
        PcpdParams { bits: DEFAULT_BITS, tree_budget: DEFAULT_TREE_BUDGET }
    }
}

enum Trees {
    All { n: usize, parent: Vec<VertexId> },
    OnDemand,
}

struct Builder<'a> {
    net: &'a RoadNetwork,
    q: Quantizer,
    codes: Vec<u32>,
    trees: Trees,
}

/// Per-task scratch for the common-element test.
struct TestScratch {
    tree: TreeScratch,
    pos: Vec<u32>,
    stamp: Vec<u32>,
    round: u32,
}

impl TestScratch {
    fn new(n: usize) -> Self {
        TestScratch { tree: TreeScratch::default(), pos: vec![0; n], stamp: vec![0; n], round: 0 }
    }
}

#[derive(Default)]
struct TreeScratch {
    search: Option<Dijkstra>,
    row: Vec<VertexId>,
}

enum Record {
    Pair(PathCoherentPair),
    Exception((VertexId, VertexId), Psi),
}

impl Builder<'_> {
    /// Parent row of the canonical tree rooted at `s`.
    fn parents<'s>(&'s self, s: VertexId, scratch: &'s mut TreeScratch) -> &'s [VertexId] {
        match &self.trees {
            Trees::All { n, parent } => &parent[s as usize * n..(s as usize + 1) * n],
            Trees::OnDemand => {
                let search = scratch.search.get_or_insert_with(|| Dijkstra::new(self.net.n()));
                search.run(self.net, s, |_, _| false);
                scratch.row.clear();
                scratch.row.extend_from_slice(search.parents());
                &scratch.row
            }
        }
    }

    /// Canonical path `s → t` as vertices from `t` back to `s`.
    fn path_back(parents: &[VertexId], s: VertexId, t: VertexId, out: &mut Vec<VertexId>) -> bool {
        out.clear();
        let mut cur = t;
        out.push(cur);
        while cur != s {
            cur = parents[cur as usize];
            if cur == NO_VERTEX || out.len() > parents.len() {
                return false;
            }
            out.push(cur);
        }
        true
    }

    /// Element shared by the canonical paths of every pair in `xs × ys`.
    fn common_element(&self, xs: &[VertexId], ys: &[VertexId], scratch: &mut TestScratch) -> Option<Psi> {
        // Candidate elements, in order along the witness path.
        let mut vertices: Vec<VertexId> = Vec::new();
        let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
        let mut back = Vec::new();
        let mut first = true;
        let TestScratch { tree, pos, stamp, round } = scratch;
        for &s in xs {
            let parents = self.parents(s, tree);
            for &t in ys {
                if !Self::path_back(parents, s, t, &mut back) {
                    return None;
                }
                back.reverse();
                if first {
                    first = false;
                    let k = back.len() - 1;
                    vertices.extend_from_slice(&back[1..k]);
                    edges.extend(back.windows(2).map(|w| (w[0], w[1])));
                    continue;
                }
                *round = round.wrapping_add(1);
                if *round == 0 {
                    stamp.fill(0);
                    *round = 1;
                }
                let r = *round;
                for (i, &v) in back.iter().enumerate() {
                    stamp[v as usize] = r;
                    pos[v as usize] = i as u32;
                }
                let last = (back.len() - 1) as u32;
                let on = |v: VertexId| stamp[v as usize] == r;
                vertices.retain(|&v| on(v) && pos[v as usize] != 0 && pos[v as usize] != last);
                edges.retain(|&(a, b)| on(a) && on(b) && pos[a as usize] + 1 == pos[b as usize]);
                if vertices.is_empty() && edges.is_empty() {
                    return None;
                }
            }
        }
        if let Some(&m) = vertices.get(vertices.len() / 2) {
            Some(Psi::Vertex(m))
        } else {
            edges.get(edges.len() / 2).map(|&(a, b)| Psi::Edge(a, b))
        }
    }

    /// Element for a single pair: the middle interior vertex, or the edge.
    fn single_psi(&self, s: VertexId, t: VertexId, scratch: &mut TreeScratch) -> Option<Psi> {
        let parents = self.parents(s, scratch);
        let mut back = Vec::new();
        if !Self::path_back(parents, s, t, &mut back) {
            return None;
        }
        back.reverse();
        if back.len() == 2 {
            Some(Psi::Edge(s, t))
        } else {
            Some(Psi::Vertex(back[(back.len() - 1) / 2]))
        }
    }

    fn exceptions(&self, xs: &[VertexId], ys: &[VertexId], out: &mut Vec<Record>) {
        let mut scratch = TreeScratch::default();
        for &s in xs {
            for &t in ys {
                if s != t {
                    if let Some(psi) = self.single_psi(s, t, &mut scratch) {
                        out.push(Record::Exception((s, t), psi));
                    }
                }
            }
        }
    }

    fn split4<'v>(&self, vs: &'v [VertexId], depth: u32, prefix: u32) -> [(u32, &'v [VertexId]); 4] {
        let mut rest = vs;
        std::array::from_fn(|c| {
            let cp = (prefix << 2) | c as u32;
            let (_, hi) = self.q.square_range(depth + 1, cp);
            let cut = rest.partition_point(|&v| self.codes[v as usize] <= hi);
            let (head, tail) = rest.split_at(cut);
            rest = tail;
            (cp, head)
        })
    }

    /// Processes the 16 children of candidate `(xp, yp)` at `depth`.
    /// `xs`, `ys` are sorted by code.
    fn subdivide(&self, depth: u32, xp: u32, yp: u32, xs: &[VertexId], ys: &[VertexId]) -> Vec<Record> {
        let xc = self.split4(xs, depth, xp);
        let yc = self.split4(ys, depth, yp);
        let children: Vec<(Child, Child)> = xc
            .iter()
            .flat_map(|&x| yc.iter().map(move |&y| (x, y)))
            .filter(|((_, a), (_, b))| !a.is_empty() && !b.is_empty())
            .collect();
        let d = depth + 1;
        let results: Vec<Vec<Record>> = children
            .into_par_iter()
            .map(|((cx, xv), (cy, yv))| self.candidate(d, cx, cy, xv, yv))
            .collect();
        results.into_iter().flatten().collect()
    }

    fn candidate(&self, depth: u32, xp: u32, yp: u32, xs: &[VertexId], ys: &[VertexId]) -> Vec<Record> {
        let full = depth == self.q.bits();
        let mut out = Vec::new();
        if xp == yp && xs.len() < 2 {
            return out;
        }
        if xp != yp {
            let mut scratch = TestScratch::new(self.net.n());
            if let Some(psi) = self.common_element(xs, ys, &mut scratch) {
                out.push(Record::Pair(PathCoherentPair { depth, x: xp, y: yp, psi }));
                return out;
            }
        }
        if full {
            self.exceptions(xs, ys, &mut out);
            return out;
        }
        self.subdivide(depth, xp, yp, xs, ys)
    }
}

pub fn build_pcp_set(net: &RoadNetwork) -> PcpdIndex {
    build_pcp_set_with(net, &PcpdParams::default())
}

pub fn build_pcp_set_with(net: &RoadNetwork, params: &PcpdParams) -> PcpdIndex {
    let q = Quantizer::new(net.bounding_box(), params.bits);
    let codes: Vec<u32> = net.coords().iter().map(|&p| q.code(p)).collect();
    let n = net.n();
    let trees = if n.saturating_mul(n).saturating_mul(4) <= params.tree_budget {
        let rows: Vec<Vec<VertexId>> = (0..n as VertexId)
            .into_par_iter()
            .map_init(
                || Dijkstra::new(n),
                |search, s| {
                    search.run(net, s, |_, _| false);
                    search.parents().to_vec()
                },
            )
            .collect();
        Trees::All { n, parent: rows.concat() }
    } else {
        Trees::OnDemand
    };
    let builder = Builder { net, q, codes, trees };
    let mut all: Vec<VertexId> = (0..n as VertexId).collect();
    all.sort_by_key(|&v| (builder.codes[v as usize], v));
    let records = if n < 2 { Vec::new() } else { builder.subdivide(0, 0, 0, &all, &all) };

    let mut levels: Vec<Level> = vec![Level::default(); params.bits as usize + 1];
    let mut exceptions = Vec::new();
    for r in records {
        match r {
            Record::Pair(p) => {
                levels[p.depth as usize].insert((p.x as u64) << 32 | p.y as u64, p.psi);
            }
            Record::Exception(k, psi) => exceptions.push((k, psi)),
        }
    }
    exceptions.sort_unstable();
    PcpdIndex { quantizer: q, coords_fingerprint: coords_fingerprint(net), codes: builder.codes, levels, exceptions }
}

/// How a pair was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lookup {
    pub psi: Psi,
    /// Depth of the stored pair, or `None` for a per-pair exception.
    pub depth: Option<u32>,
    /// Number of levels probed.
    pub probes: u32,
}

impl PcpdIndex {
    pub fn n(&self) -> usize {
        self.codes.len()
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn code(&self, v: VertexId) -> u32 {
        self.codes[v as usize]
    }

    pub fn pairs(&self) -> impl Iterator<Item = PathCoherentPair> + '_ {
        self.levels.iter().enumerate().flat_map(|(d, l)| {
            let mut keys: Vec<(u64, Psi)> = l.iter().map(|(&k, &psi)| (k, psi)).collect();
            keys.sort_unstable();
            keys.into_iter().map(move |(k, psi)| PathCoherentPair { depth: d as u32, x: (k >> 32) as u32, y: k as u32, psi })
        })
    }

    pub fn exceptions(&self) -> &[((VertexId, VertexId), Psi)] {
        &self.exceptions
    }

    pub fn stats(&self) -> PcpdStats {
        PcpdStats {
            pairs: self.levels.iter().map(Level::len).sum(),
            exceptions: self.exceptions.len(),
            max_depth: self.levels.iter().rposition(|l| !l.is_empty()).unwrap_or(0) as u32,
        }
    }

    /// The pair covering `(s, t)`, `s ≠ t`, probing depths top-down.
    pub fn lookup_pair(&self, s: VertexId, t: VertexId) -> Result<Lookup, QueryError> {
        let (cs, ct) = (self.codes[s as usize], self.codes[t as usize]);
        let mut probes = 0;
        for d in 1..=self.quantizer.bits() {
            let (ps, pt) = (self.quantizer.prefix(cs, d), self.quantizer.prefix(ct, d));
            if ps == pt {
                continue;
            }
            probes += 1;
            if let Some(&psi) = self.levels[d as usize].get(&((ps as u64) << 32 | pt as u64)) {
                return Ok(Lookup { psi, depth: Some(d), probes });
            }
        }
        match self.exceptions.binary_search_by_key(&(s, t), |e| e.0) {
            Ok(i) => Ok(Lookup { psi: self.exceptions[i].1, depth: None, probes }),
            Err(_) => Err(QueryError::Corrupt(format!("no pair covers ({s}, {t})"))),
        }
    }

    /// Shortest path by recursive decomposition around `psi`.
    pub fn path(&self, net: &RoadNetwork, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        enum Task {
            Seg(VertexId, VertexId),
            Edge(VertexId, VertexId),
        }
        let mut path = Path::trivial(s);
        let mut stack = vec![Task::Seg(s, t)];
        let mut budget = 4 * net.n() + 4;
        while let Some(task) = stack.pop() {
            match task {
                Task::Seg(a, b) if a == b => {}
                Task::Seg(a, b) => {
                    budget = budget
                        .checked_sub(1)
                        .ok_or_else(|| QueryError::Corrupt(format!("decomposition of ({s}, {t}) does not terminate")))?;
                    match self.lookup_pair(a, b)?.psi {
                        Psi::Vertex(m) if m == a || m == b => {
                            return Err(QueryError::Corrupt(format!("pair ({a}, {b}) splits at an endpoint")));
                        }
                        Psi::Vertex(m) => {
                            stack.push(Task::Seg(m, b));
                            stack.push(Task::Seg(a, m));
                        }
                        Psi::Edge(u, v) => {
                            stack.push(Task::Seg(v, b));
                            stack.push(Task::Edge(u, v));
                            stack.push(Task::Seg(a, u));
                        }
                    }
                }
                Task::Edge(u, v) => {
                    let w = net.edge_weight(u, v).filter(|_| path.target() == u).ok_or_else(|| {
                        QueryError::Corrupt(format!("pair element ({u}, {v}) does not continue the path"))
                    })?;
                    path.vertices.push(v);
                    path.length += w as Distance;
                }
            }
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
        w.u64(self.stats().pairs as u64);
        for p in self.pairs() {
            w.u8(p.depth as u8);
            w.u32(p.x);
            w.u32(p.y);
            p.psi.write(w);
        }
        w.u64(self.exceptions.len() as u64);
        for &((s, t), psi) in &self.exceptions {
            w.u32(s);
            w.u32(t);
            psi.write(w);
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
        let n = net.n() as u32;
        let psi = |r: &mut ByteReader<'_>| -> Result<Psi, ContainerError> {
            let (kind, a) = (r.u8()?, r.u32()?);
            match kind {
                1 if a < n => Ok(Psi::Vertex(a)),
                2 => {
                    let b = r.u32()?;
                    if a < n && b < n {
                        Ok(Psi::Edge(a, b))
                    } else {
                        Err(ContainerError::Payload(format!("bad pair edge ({a}, {b})")))
                    }
                }
                _ => Err(ContainerError::Payload(format!("bad pair element ({kind}, {a})"))),
            }
        };
        let mut levels: Vec<Level> = vec![Level::default(); bits as usize + 1];
        let mut last: Vec<Option<u64>> = vec![None; bits as usize + 1];
        let count = r.count(14)?;
        for _ in 0..count {
            let (depth, x, y) = (r.u8()? as usize, r.u32()?, r.u32()?);
            if depth == 0 || depth > bits as usize {
                return Err(bad(format!("pair depth {depth} out of range")));
            }
            let key = (x as u64) << 32 | y as u64;
            let p = psi(r)?;
            if last[depth].is_some_and(|l| l >= key) {
                return Err(bad("pairs out of order".into()));
            }
            last[depth] = Some(key);
            levels[depth].insert(key, p);
        }
        let count = r.count(13)?;
        let mut exceptions = Vec::with_capacity(count);
        for _ in 0..count {
            let k = (r.u32()?, r.u32()?);
            let p = psi(r)?;
            exceptions.push((k, p));
        }
        if exceptions.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(bad("exceptions out of order".into()));
        }
        let codes = net.coords().iter().map(|&p| quantizer.code(p)).collect();
        Ok(PcpdIndex { quantizer, coords_fingerprint: coords_fingerprint(net), codes, levels, exceptions })
    }
}

pub struct PcpdEngine<'a> {
    idx: &'a PcpdIndex,
    net: &'a RoadNetwork,
}

impl<'a> PcpdEngine<'a> {
    pub fn new(idx: &'a PcpdIndex, net: &'a RoadNetwork) -> Self {
        PcpdEngine { idx, net }
    }
}

impl crate::QueryEngine for PcpdEngine<'_> {
    fn distance(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError> {
        self.path(s, t).map(|p| p.length)
    }

    fn path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        check_range(self.net, s)?;
        check_range(self.net, t)?;
        self.idx.path(self.net, s, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dijkstra::sssp;
    use crate::fixtures::{self, v};
    use crate::graph::{NetworkBuilder, Point};
    use crate::synth;
    use crate::QueryEngine;

    /// Vertices inside the square `(depth, prefix)`.
    fn members(idx: &PcpdIndex, depth: u32, prefix: u32) -> Vec<VertexId> {
        let (lo, hi) = idx.quantizer().square_range(depth, prefix);
        (0..idx.n() as VertexId).filter(|&v| (lo..=hi).contains(&idx.code(v))).collect()
    }

    fn coverage(idx: &PcpdIndex) -> Vec<u32> {
        let n = idx.n();
        let mut count = vec![0u32; n * n];
        for p in idx.pairs() {
            for s in members(idx, p.depth, p.x) {
                for t in members(idx, p.depth, p.y) {
                    count[s as usize * n + t as usize] += 1;
                }
            }
        }
        for &((s, t), _) in idx.exceptions() {
            count[s as usize * n + t as usize] += 1;
        }
        count
    }

    fn on_path(p: &Path, psi: Psi) -> bool {
        match psi {
            Psi::Vertex(m) => p.vertices[1..p.vertices.len() - 1].contains(&m),
            Psi::Edge(a, b) => p.vertices.windows(2).any(|w| w == [a, b]),
        }
    }

    #[test]
    fn fig1_quadrant_pair_through_v8() {
        let net = fixtures::fig1_quadrants();
        let idx = build_pcp_set(&net);
        let pair = idx.pairs().find(|p| p.depth == 1 && p.x == 0 && p.y == 3).expect("pair stored");
        assert_eq!(pair.psi, Psi::Vertex(v(8)));
        for s in [1, 2, 3] {
            for t in [4, 5, 6, 7] {
                let l = idx.lookup_pair(v(s), v(t)).unwrap();
                assert_eq!((l.psi, l.depth, l.probes), (Psi::Vertex(v(8)), Some(1), 1));
            }
        }
        let p = idx.path(&net, v(3), v(7)).unwrap();
        net.check_path(&p).unwrap();
        assert_eq!(p.length, 6);
        assert_eq!(p.vertices, vec![v(3), v(1), v(8), v(6), v(5), v(7)]);
    }

    #[test]
    fn fig1_all_pairs() {
        let net = fixtures::fig1();
        let idx = build_pcp_set(&net);
        let mut e = PcpdEngine::new(&idx, &net);
        assert_eq!(e.distance(v(3), v(7)).unwrap(), 6);
        for s in 0..8 {
            let st = sssp(&net, s, None);
            for t in 0..8 {
                let p = e.path(s, t).unwrap();
                net.check_path(&p).unwrap();
                assert_eq!(p.length, st.dist[t as usize]);
            }
        }
    }

    #[test]
    fn single_edge_graph() {
        let mut b = NetworkBuilder::new(2);
        b.coord(0, Point::new(0, 0)).coord(1, Point::new(10, 10)).edge(0, 1, 4);
        let net = b.build().unwrap();
        let idx = build_pcp_set(&net);
        let pairs: Vec<_> = idx.pairs().collect();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].psi, Psi::Edge(0, 1));
        assert_eq!(pairs[1].psi, Psi::Edge(1, 0));
        let p = idx.path(&net, 1, 0).unwrap();
        assert_eq!((p.vertices, p.length), (vec![1, 0], 4));
    }

    #[test]
    fn colliding_points_become_exceptions() {
        let mut b = NetworkBuilder::new(3);
        b.coord(0, Point::new(0, 0)).coord(1, Point::new(50, 50)).coord(2, Point::new(50, 50));
        b.edge(0, 1, 1).edge(1, 2, 1);
        let net = b.build().unwrap();
        let idx = build_pcp_set(&net);
        assert_eq!(idx.exceptions(), &[((1, 2), Psi::Edge(1, 2)), ((2, 1), Psi::Edge(2, 1))]);
        assert_eq!(idx.lookup_pair(1, 2).unwrap().depth, None);
        let count = coverage(&idx);
        for s in 0..3 {
            for t in 0..3 {
                assert_eq!(count[s * 3 + t], u32::from(s != t));
            }
        }
    }

    #[test]
    fn unique_coverage_and_soundness() {
        for seed in [3, 11] {
            let net = synth::random_geometric(200, 3, 1..=5, seed);
            let idx = build_pcp_set(&net);
            let n = net.n();
            let count = coverage(&idx);
            for s in 0..n {
                let st = sssp(&net, s as VertexId, None);
                for t in 0..n {
                    assert_eq!(count[s * n + t], u32::from(s != t), "({s},{t})");
                    if s != t {
                        let psi = idx.lookup_pair(s as VertexId, t as VertexId).unwrap().psi;
                        let p = st.path_to(t as VertexId).unwrap();
                        assert!(on_path(&p, psi), "psi {psi:?} off path {s}->{t}");
                    }
                }
            }
        }
    }

    #[test]
    fn exhaustive_oracle() {
        let net = synth::random_geometric(200, 3, 1..=9, 5);
        let idx = build_pcp_set(&net);
        let on_demand = build_pcp_set_with(&net, &PcpdParams { tree_budget: 0, ..Default::default() });
        assert_eq!(idx, on_demand);
        let mut e = PcpdEngine::new(&idx, &net);
        for s in 0..net.n() as VertexId {
            let st = sssp(&net, s, None);
            for t in 0..net.n() as VertexId {
                let p = e.path(s, t).unwrap();
                net.check_path(&p).unwrap();
                assert_eq!(p.length, st.dist[t as usize]);
            }
        }
    }

    #[test]
    fn corrupt_pair_is_detected() {
        let net = fixtures::fig1_quadrants();
        let mut idx = build_pcp_set(&net);
        for level in &mut idx.levels {
            for psi in level.values_mut() {
                if let Psi::Vertex(_) = psi {
                    *psi = Psi::Edge(v(4), v(5));
                }
            }
        }
        assert!(matches!(idx.path(&net, v(3), v(7)), Err(QueryError::Corrupt(_))));
    }
}
