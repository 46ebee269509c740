//! Dijkstra single-source search and bidirectional point-to-point queries.
//!
//! Every search breaks distance ties towards the smaller parent id, so the
//! shortest-path tree rooted at a source is canonical: the same network and
//! source always give the same tree, regardless of heap internals.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::{Distance, Path, RoadNetwork, VertexId, INFINITY, NO_VERTEX};

/// Result of a single-source search.
#[derive(Clone, Debug)]
pub struct SearchState {
    pub source: VertexId,
    pub dist: Vec<Distance>,
    pub parent: Vec<VertexId>,
    pub settled: Vec<bool>,
    /// Vertices in the order they were settled.
    pub order: Vec<VertexId>,
}

impl SearchState {
    /// Canonical shortest path from the source to `t`, if `t` was settled.
    pub fn path_to(&self, t: VertexId) -> Option<Path> {
        if !self.settled[t as usize] {
            return None;
        }
        let mut vertices = vec![t];
        let mut cur = t;
        while cur != self.source {
            cur = self.parent[cur as usize];
            vertices.push(cur);
        }
        vertices.reverse();
        Some(Path { vertices, length: self.dist[t as usize] })
    }
}

/// Reusable single-source search with buffers that reset in time
/// proportional to the previous search space.
#[derive(Clone, Debug)]
pub struct Dijkstra {
    source: VertexId,
    dist: Vec<Distance>,
    parent: Vec<VertexId>,
    settled: Vec<bool>,
    heap: BinaryHeap<Reverse<(Distance, VertexId)>>,
    touched: Vec<VertexId>,
    order: Vec<VertexId>,
}

impl Dijkstra {
    pub fn new(n: usize) -> Self {
        Dijkstra {
            source: NO_VERTEX,
            dist: vec![INFINITY; n],
            parent: vec![NO_VERTEX; n],
            settled: vec![false; n],
            heap: BinaryHeap::new(),
            touched: Vec::new(),
            order: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v as usize] = INFINITY;
            self.parent[v as usize] = NO_VERTEX;
            self.settled[v as usize] = false;
        }
        self.touched.clear();
        self.order.clear();
        self.heap.clear();
    }

    /// Runs until the queue is exhausted or `stop(v, dist)` returns true right
    /// after settling `v`.
    pub fn run<S>(&mut self, net: &RoadNetwork, source: VertexId, stop: S)
    where
        S: FnMut(VertexId, Distance) -> bool,
    {
        self.run_filtered(net, source, |_, _| true, stop)
    }

    /// Like [`Dijkstra::run`], but only relaxes arcs `(u, v)` for which
    /// `allow(u, v)` holds.
    pub fn run_filtered<A, S>(&mut self, net: &RoadNetwork, source: VertexId, allow: A, mut stop: S)
    where
        A: Fn(VertexId, VertexId) -> bool,
        S: FnMut(VertexId, Distance) -> bool,
    {
        self.reset();
        self.source = source;
        self.dist[source as usize] = 0;
        self.touched.push(source);
        self.heap.push(Reverse((0, source)));
        while let Some(Reverse((d, u))) = self.heap.pop() {
            if self.settled[u as usize] || d > self.dist[u as usize] {
                continue;
            }
            self.settled[u as usize] = true;
            self.order.push(u);
            if stop(u, d) {
                break;
            }
            for (v, w) in net.neighbors(u) {
                if self.settled[v as usize] || !allow(u, v) {
                    continue;
                }
                let nd = d + w as Distance;
                let cur = self.dist[v as usize];
                if nd < cur {
                    if cur == INFINITY {
                        self.touched.push(v);
                    }
                    self.dist[v as usize] = nd;
                    self.parent[v as usize] = u;
                    self.heap.push(Reverse((nd, v)));
                } else if nd == cur && u < self.parent[v as usize] {
                    self.parent[v as usize] = u;
                }
            }
        }
    }

    #[inline]
    pub fn dist(&self, v: VertexId) -> Distance {
        self.dist[v as usize]
    }

    #[inline]
    pub fn parent(&self, v: VertexId) -> VertexId {
        self.parent[v as usize]
    }

    #[inline]
    pub fn is_settled(&self, v: VertexId) -> bool {
        self.settled[v as usize]
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    /// Settled vertices in settle order.
    pub fn settled_order(&self) -> &[VertexId] {
        &self.order
    }

    pub fn parents(&self) -> &[VertexId] {
        &self.parent
    }

    pub fn distances(&self) -> &[Distance] {
        &self.dist
    }

    /// Canonical path from the source to `t`, if settled.
    pub fn path_to(&self, t: VertexId) -> Option<Path> {
        if !self.settled[t as usize] {
            return None;
        }
        let mut vertices = vec![t];
        let mut cur = t;
        while cur != self.source {
            cur = self.parent[cur as usize];
            vertices.push(cur);
        }
        vertices.reverse();
        Some(Path { vertices, length: self.dist[t as usize] })
    }

    pub fn to_state(&self) -> SearchState {
        SearchState {
            source: self.source,
            dist: self.dist.clone(),
            parent: self.parent.clone(),
            settled: self.settled.clone(),
            order: self.order.clone(),
        }
    }
}

/// Single-source shortest paths from `source`. With a stop predicate the
/// search ends as soon as the predicate fires on a freshly settled vertex.
pub fn sssp(
    net: &RoadNetwork,
    source: VertexId,
    stop: Option<&mut dyn FnMut(VertexId, Distance) -> bool>,
) -> SearchState {
    let mut d = Dijkstra::new(net.n());
    match stop {
        Some(f) => d.run(net, source, f),
        None => d.run(net, source, |_, _| false),
    }
    d.to_state()
}

/// Counters from one bidirectional query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BidiStats {
    pub settled_forward: usize,
    pub settled_backward: usize,
    /// Largest key settled by either direction.
    pub max_settled_key: Distance,
}

#[derive(Clone, Debug)]
struct Side {
    dist: Vec<Distance>,
    parent: Vec<VertexId>,
    settled: Vec<bool>,
    heap: BinaryHeap<Reverse<(Distance, VertexId)>>,
    touched: Vec<VertexId>,
}

impl Side {
    fn new(n: usize) -> Self {
        Side {
            dist: vec![INFINITY; n],
            parent: vec![NO_VERTEX; n],
            settled: vec![false; n],
            heap: BinaryHeap::new(),
            touched: Vec::new(),
        }
    }

    fn reset(&mut self, root: VertexId) {
        for &v in &self.touched {
            self.dist[v as usize] = INFINITY;
            self.parent[v as usize] = NO_VERTEX;
            self.settled[v as usize] = false;
        }
        self.touched.clear();
        self.heap.clear();
        self.dist[root as usize] = 0;
        self.touched.push(root);
        self.heap.push(Reverse((0, root)));
    }

    fn min_key(&mut self) -> Distance {
        while let Some(&Reverse((d, v))) = self.heap.peek() {
            if self.settled[v as usize] || d > self.dist[v as usize] {
                self.heap.pop();
            } else {
                return d;
            }
        }
        INFINITY
    }

    /// Walks parents from `v` back to the root, yielding `v` first.
    fn chain(&self, mut v: VertexId) -> Vec<VertexId> {
        let mut out = vec![v];
        while self.parent[v as usize] != NO_VERTEX {
            v = self.parent[v as usize];
            out.push(v);
        }
        out
    }
}

/// Bidirectional Dijkstra with reusable per-worker buffers.
#[derive(Clone, Debug)]
pub struct BidiDijkstra {
    fwd: Side,
    bwd: Side,
    stats: BidiStats,
}

impl BidiDijkstra {
    pub fn new(n: usize) -> Self {
        BidiDijkstra { fwd: Side::new(n), bwd: Side::new(n), stats: BidiStats::default() }
    }

    pub fn stats(&self) -> BidiStats {
        self.stats
    }

    /// Exact distance and a shortest path from `s` to `t`; `None` if
    /// unreachable.
    pub fn query(&mut self, net: &RoadNetwork, s: VertexId, t: VertexId) -> Option<(Distance, Path)> {
        self.stats = BidiStats::default();
        if s == t {
            return Some((0, Path::trivial(s)));
        }
        self.fwd.reset(s);
        self.bwd.reset(t);
        let mut best = INFINITY;
        // (forward end, backward end) of the best bridge; equal for a meeting vertex.
        let mut bridge = (NO_VERTEX, NO_VERTEX);
        loop {
            let kf = self.fwd.min_key();
            let kb = self.bwd.min_key();
            if kf == INFINITY || kb == INFINITY || kf.saturating_add(kb) >= best {
                break;
            }
            let forward = kf <= kb;
            let (this, other) = if forward {
                (&mut self.fwd, &self.bwd)
            } else {
                (&mut self.bwd, &self.fwd)
            };
            let Reverse((d, u)) = this.heap.pop().expect("non-empty queue");
            this.settled[u as usize] = true;
            if forward {
                self.stats.settled_forward += 1;
            } else {
                self.stats.settled_backward += 1;
            }
            self.stats.max_settled_key = self.stats.max_settled_key.max(d);
            if other.dist[u as usize] != INFINITY && d + other.dist[u as usize] < best {
                best = d + other.dist[u as usize];
                bridge = (u, u);
            }
            for (v, w) in net.neighbors(u) {
                let nd = d + w as Distance;
                if !this.settled[v as usize] {
                    let cur = this.dist[v as usize];
                    if nd < cur {
                        if cur == INFINITY {
                            this.touched.push(v);
                        }
                        this.dist[v as usize] = nd;
                        this.parent[v as usize] = u;
                        this.heap.push(Reverse((nd, v)));
                    } else if nd == cur && u < this.parent[v as usize] {
                        this.parent[v as usize] = u;
                    }
                }
                let od = other.dist[v as usize];
                if od != INFINITY && nd + od < best {
                    best = nd + od;
                    bridge = if forward { (u, v) } else { (v, u) };
                }
            }
        }
        if best == INFINITY {
            return None;
        }
        let mut vertices = self.fwd.chain(bridge.0);
        vertices.reverse();
        if bridge.0 != bridge.1 {
            vertices.extend(self.bwd.chain(bridge.1));
        } else {
            vertices.extend(self.bwd.chain(bridge.1).into_iter().skip(1));
        }
        Some((best, Path { vertices, length: best }))
    }
}

/// One-shot bidirectional query.
pub fn bidi_query(net: &RoadNetwork, s: VertexId, t: VertexId) -> Option<(Distance, Path)> {
    BidiDijkstra::new(net.n()).query(net, s, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, v};
    use crate::graph::{NetworkBuilder, Point};
    use crate::synth;

    #[test]
    fn fig1_from_v8() {
        let net = fixtures::fig1();
        let st = sssp(&net, v(8), None);
        assert_eq!(st.dist[v(3) as usize], 2);
        assert_eq!(st.dist[v(7) as usize], 4);
    }

    #[test]
    fn fig1_from_v3() {
        let net = fixtures::fig1();
        let st = sssp(&net, v(3), None);
        assert_eq!(st.dist[v(7) as usize], 6);
        let p = st.path_to(v(7)).unwrap();
        assert_eq!(p.vertices, [3, 1, 8, 6, 5, 7].map(v).to_vec());
    }

    #[test]
    fn single_vertex_source() {
        let mut b = NetworkBuilder::new(1);
        b.coord(0, Point::new(0, 0));
        let net = b.build().unwrap();
        let st = sssp(&net, 0, None);
        assert_eq!(st.dist, vec![0]);
        assert_eq!(st.parent, vec![NO_VERTEX]);
    }

    #[test]
    fn stop_predicate_ends_search() {
        let net = fixtures::fig1();
        let mut stop = |u: VertexId, _d: Distance| u == v(1);
        let st = sssp(&net, v(8), Some(&mut stop));
        assert!(st.settled[v(1) as usize]);
        assert!(!st.settled[v(7) as usize]);
    }

    #[test]
    fn ties_prefer_smaller_parent() {
        // Square 0-1-3, 0-2-3 with unit weights: both routes to 3 have length 2.
        let mut b = NetworkBuilder::new(4);
        b.edge(0, 1, 1).edge(0, 2, 1).edge(1, 3, 1).edge(2, 3, 1);
        for i in 0..4 {
            b.coord(i, Point::new(i as i64, 0));
        }
        let net = b.build().unwrap();
        assert_eq!(sssp(&net, 0, None).parent[3], 1);
    }

    #[test]
    fn bidi_fig1() {
        let net = fixtures::fig1();
        let (d, p) = bidi_query(&net, v(3), v(7)).unwrap();
        assert_eq!(d, 6);
        assert_eq!(p.vertices, [3, 1, 8, 6, 5, 7].map(v).to_vec());
        net.check_path(&p).unwrap();
        assert_eq!(bidi_query(&net, v(1), v(7)).unwrap().0, 5);
        let (d, p) = bidi_query(&net, v(4), v(4)).unwrap();
        assert_eq!((d, p.vertices), (0, vec![v(4)]));
    }

    #[test]
    fn bidi_matches_sssp_exhaustively() {
        for seed in 0..4 {
            let net = synth::random_geometric(120, 3, 1..=4, seed);
            let mut bidi = BidiDijkstra::new(net.n());
            let max_w = net.max_weight() as Distance;
            for s in 0..net.n() as VertexId {
                let st = sssp(&net, s, None);
                for t in 0..net.n() as VertexId {
                    let (d, p) = bidi.query(&net, s, t).unwrap();
                    assert_eq!(d, st.dist[t as usize], "seed {seed} ({s},{t})");
                    net.check_path(&p).unwrap();
                    assert_eq!((p.source(), p.target()), (s, t));
                    assert!(bidi.stats().max_settled_key <= d + max_w);
                }
            }
        }
    }

    #[test]
    fn parent_chain_strictly_decreases() {
        let net = synth::random_geometric(200, 3, 1..=5, 9);
        let st = sssp(&net, 17, None);
        for t in 0..net.n() {
            let p = st.parent[t];
            if p != NO_VERTEX {
                assert!(st.dist[p as usize] < st.dist[t]);
            }
        }
    }
}
