//! Road-network representation, DIMACS ingestion and path primitives.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

/// Dense, zero-based vertex index.
pub type VertexId = u32;
/// Edge weight in travel-time units.
pub type Weight = u32;
/// Accumulated path length. Sums of edge weights never overflow this type.
pub type Distance = u64;

/// Reserved "unreachable" distance, larger than any sum of `n` max-weight edges.
pub const INFINITY: Distance = u64::MAX;
/// Sentinel for "no vertex".
pub const NO_VERTEX: VertexId = u32::MAX;

pub const DEFAULT_MAX_DEGREE: usize = 16;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("cannot concatenate: path ends at {end} but next starts at {start}")]
    EndpointMismatch { end: VertexId, start: VertexId },
    #[error("({0}, {1}) is not an edge")]
    MissingEdge(VertexId, VertexId),
    #[error("stored length {stored} differs from edge sum {actual}")]
    LengthMismatch { stored: Distance, actual: Distance },
    #[error("path is empty")]
    Empty,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    pub fn linf(&self, other: &Point) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_x: i64,
    pub min_y: i64,
    pub max_x: i64,
    pub max_y: i64,
}

impl BoundingBox {
    pub fn of(points: &[Point]) -> Self {
        let mut bb = BoundingBox {
            min_x: i64::MAX,
            min_y: i64::MAX,
            max_x: i64::MIN,
            max_y: i64::MIN,
        };
        for p in points {
            bb.min_x = bb.min_x.min(p.x);
            bb.min_y = bb.min_y.min(p.y);
            bb.max_x = bb.max_x.max(p.x);
            bb.max_y = bb.max_y.max(p.y);
        }
        if points.is_empty() {
            bb = BoundingBox { min_x: 0, min_y: 0, max_x: 0, max_y: 0 };
        }
        bb
    }

    pub fn width(&self) -> i64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> i64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}

/// Undirected, weighted road network with planar coordinates, stored as a
/// symmetric adjacency array. Neighbor lists are sorted by vertex id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoadNetwork {
    first_out: Vec<u32>,
    head: Vec<VertexId>,
    weight: Vec<Weight>,
    coords: Vec<Point>,
    original_ids: Vec<u32>,
    raw_arc_count: usize,
    asymmetric_arcs: usize,
}

/// Collects raw arcs and produces a normalized [`RoadNetwork`].
#[derive(Debug)]
pub struct NetworkBuilder {
    n: usize,
    arcs: Vec<(VertexId, VertexId, Weight)>,
    coords: Vec<Option<Point>>,
    max_degree: usize,
}

impl NetworkBuilder {
    pub fn new(n: usize) -> Self {
        NetworkBuilder {
            n,
            arcs: Vec::new(),
            coords: vec![None; n],
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }

    pub fn max_degree(mut self, bound: usize) -> Self {
        self.max_degree = bound;
        self
    }

    pub fn arc(&mut self, u: VertexId, v: VertexId, w: Weight) -> &mut Self {
        self.arcs.push((u, v, w));
        self
    }

    /// Adds both directions of an undirected edge.
    pub fn edge(&mut self, u: VertexId, v: VertexId, w: Weight) -> &mut Self {
        self.arcs.push((u, v, w));
        self.arcs.push((v, u, w));
        self
    }

    pub fn coord(&mut self, v: VertexId, p: Point) -> &mut Self {
        self.coords[v as usize] = Some(p);
        self
    }

    /// Symmetrizes (minimum weight wins), drops self-loops and restricts the
    /// result to the largest connected component. Ids are remapped densely in
    /// ascending order of their input id.
    pub fn build(self) -> Result<RoadNetwork, GraphError> {
        let n = self.n;
        for &(u, v, _) in &self.arcs {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::Format(format!(
                    "arc ({u}, {v}) references a vertex outside [0, {n})"
                )));
            }
        }
        let raw_arc_count = self.arcs.len();

        // Directed minimum per ordered pair, used to count asymmetric inputs.
        let mut directed: Vec<(VertexId, VertexId, Weight)> =
            self.arcs.iter().copied().filter(|&(u, v, _)| u != v).collect();
        directed.sort_unstable();
        directed.dedup_by(|b, a| a.0 == b.0 && a.1 == b.1);
        let mut asymmetric_arcs = 0;
        for &(u, v, w) in &directed {
            let rev = directed.binary_search_by(|&(a, b, _)| (a, b).cmp(&(v, u)));
            match rev {
                Ok(i) if directed[i].2 == w => {}
                _ => asymmetric_arcs += 1,
            }
        }

        let mut undirected: Vec<(VertexId, VertexId, Weight)> = directed
            .iter()
            .map(|&(u, v, w)| (u.min(v), u.max(v), w))
            .collect();
        undirected.sort_unstable();
        undirected.dedup_by(|b, a| a.0 == b.0 && a.1 == b.1);

        let mut adj: Vec<Vec<(VertexId, Weight)>> = vec![Vec::new(); n];
        for &(u, v, w) in &undirected {
            adj[u as usize].push((v, w));
            adj[v as usize].push((u, w));
        }

        let keep = largest_component(&adj);
        let mut remap = vec![NO_VERTEX; n];
        let mut original_ids = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            remap[old as usize] = new as VertexId;
            original_ids.push(old);
        }

        let mut coords = Vec::with_capacity(keep.len());
        for &old in &keep {
            match self.coords[old as usize] {
                Some(p) => coords.push(p),
                None => {
                    return Err(GraphError::Format(format!(
                        "missing coordinates for vertex {}",
                        old + 1
                    )))
                }
            }
        }

        let mut first_out = Vec::with_capacity(keep.len() + 1);
        let mut head = Vec::new();
        let mut weight = Vec::new();
        first_out.push(0u32);
        for &old in &keep {
            let mut nbrs: Vec<(VertexId, Weight)> = adj[old as usize]
                .iter()
                .map(|&(v, w)| (remap[v as usize], w))
                .collect();
            nbrs.sort_unstable();
            if nbrs.len() > self.max_degree {
                return Err(GraphError::Format(format!(
                    "vertex {} has degree {} (bound {})",
                    old + 1,
                    nbrs.len(),
                    self.max_degree
                )));
            }
            for (v, w) in nbrs {
                head.push(v);
                weight.push(w);
            }
            first_out.push(head.len() as u32);
        }

        Ok(RoadNetwork {
            first_out,
            head,
            weight,
            coords,
            original_ids,
            raw_arc_count,
            asymmetric_arcs,
        })
    }
}

fn largest_component(adj: &[Vec<(VertexId, Weight)>]) -> Vec<VertexId> {
    let n = adj.len();
    let mut comp = vec![u32::MAX; n];
    let mut best: (usize, u32) = (0, 0);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != u32::MAX {
            continue;
        }
        comp[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &(v, _) in &adj[u] {
                if comp[v as usize] == u32::MAX {
                    comp[v as usize] = next;
                    queue.push_back(v as usize);
                }
            }
        }
        if size > best.0 {
            best = (size, next);
        }
        next += 1;
    }
    (0..n as u32).filter(|&v| comp[v as usize] == best.1).collect()
}

impl RoadNetwork {
    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.head.len() / 2
    }

    /// Number of arc lines in the raw input (before pairing).
    pub fn raw_arc_count(&self) -> usize {
        self.raw_arc_count
    }

    /// Number of input arcs without an equal-weight reverse arc.
    pub fn asymmetric_arcs(&self) -> usize {
        self.asymmetric_arcs
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, Weight)> + '_ {
        let lo = self.first_out[v as usize] as usize;
        let hi = self.first_out[v as usize + 1] as usize;
        self.head[lo..hi].iter().copied().zip(self.weight[lo..hi].iter().copied())
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        (self.first_out[v as usize + 1] - self.first_out[v as usize]) as usize
    }

    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> Option<Weight> {
        let lo = self.first_out[u as usize] as usize;
        let hi = self.first_out[u as usize + 1] as usize;
        self.head[lo..hi]
            .binary_search(&v)
            .ok()
            .map(|i| self.weight[lo + i])
    }

    pub fn coord(&self, v: VertexId) -> Point {
        self.coords[v as usize]
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of(&self.coords)
    }

    /// Original (1-based DIMACS) id of a dense vertex id.
    pub fn original_id(&self, v: VertexId) -> u32 {
        self.original_ids[v as usize] + 1
    }

    /// Dense id for an original DIMACS id, if the vertex survived loading.
    pub fn dense_id(&self, original: u32) -> Option<VertexId> {
        if original == 0 {
            return None;
        }
        self.original_ids
            .binary_search(&(original - 1))
            .ok()
            .map(|i| i as VertexId)
    }

    /// Undirected edges `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, Weight)> + '_ {
        (0..self.n() as VertexId).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    pub fn max_weight(&self) -> Weight {
        self.weight.iter().copied().max().unwrap_or(0)
    }

    /// 64-bit FNV-1a over the sorted `(u, v, w)` triples, little-endian.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: [u8; 4]| {
            for b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        feed((self.n() as u32).to_le_bytes());
        for (u, v, w) in self.edges() {
            feed(u.to_le_bytes());
            feed(v.to_le_bytes());
            feed(w.to_le_bytes());
        }
        h
    }

    /// Sum of edge weights along `vertices`, or `None` if a hop is not an edge.
    pub fn path_length(&self, vertices: &[VertexId]) -> Option<Distance> {
        vertices.windows(2).try_fold(0, |acc, hop| {
            self.edge_weight(hop[0], hop[1]).map(|w| acc + w as Distance)
        })
    }

    /// Checks every consecutive pair is an edge and the stored length matches.
    pub fn check_path(&self, path: &Path) -> Result<(), PathError> {
        if path.vertices.is_empty() {
            return Err(PathError::Empty);
        }
        let mut total: Distance = 0;
        for hop in path.vertices.windows(2) {
            match self.edge_weight(hop[0], hop[1]) {
                Some(w) => total += w as Distance,
                None => return Err(PathError::MissingEdge(hop[0], hop[1])),
            }
        }
        if total != path.length {
            return Err(PathError::LengthMismatch { stored: path.length, actual: total });
        }
        Ok(())
    }

    /// Writes the network back out as a DIMACS `.gr` / `.co` pair, using the
    /// retained original ids.
    pub fn write_dimacs<G: Write, C: Write>(&self, mut gr: G, mut co: C) -> std::io::Result<()> {
        let max_id = self.original_ids.last().map_or(0, |&v| v + 1);
        writeln!(gr, "p sp {} {}", max_id, self.head.len())?;
        for u in 0..self.n() as VertexId {
            for (v, w) in self.neighbors(u) {
                writeln!(gr, "a {} {} {}", self.original_id(u), self.original_id(v), w)?;
            }
        }
        writeln!(co, "p aux sp co {}", max_id)?;
        for v in 0..self.n() as VertexId {
            let p = self.coord(v);
            writeln!(co, "v {} {} {}", self.original_id(v), p.x, p.y)?;
        }
        Ok(())
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, GraphError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

/// Loads a DIMACS `.gr` arc list plus its `.co` coordinate file.
pub fn load_dimacs<G: BufRead, C: BufRead>(gr: G, co: C) -> Result<RoadNetwork, GraphError> {
    load_dimacs_with(gr, co, DEFAULT_MAX_DEGREE)
}

pub fn load_dimacs_with<G: BufRead, C: BufRead>(
    gr: G,
    co: C,
    max_degree: usize,
) -> Result<RoadNetwork, GraphError> {
    let mut builder: Option<NetworkBuilder> = None;
    let mut n = 0usize;
    for (i, line) in gr.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None | Some("c") => continue,
            Some("p") => {
                if builder.is_some() {
                    return Err(parse_err(lineno, "duplicate problem line"));
                }
                match toks.next() {
                    Some("sp") => {}
                    other => return Err(parse_err(lineno, format!("expected `p sp`, got {other:?}"))),
                }
                n = field(toks.next(), lineno, "vertex count")?;
                let _m: usize = field(toks.next(), lineno, "arc count")?;
                builder = Some(NetworkBuilder::new(n).max_degree(max_degree));
            }
            Some("a") => {
                let b = builder
                    .as_mut()
                    .ok_or_else(|| parse_err(lineno, "arc before problem line"))?;
                let u: u64 = field(toks.next(), lineno, "tail id")?;
                let v: u64 = field(toks.next(), lineno, "head id")?;
                let w: Weight = field(toks.next(), lineno, "weight")?;
                if u == 0 || v == 0 || u as usize > n || v as usize > n {
                    return Err(GraphError::Format(format!(
                        "line {lineno}: arc ({u}, {v}) outside id range 1..={n}"
                    )));
                }
                b.arc((u - 1) as VertexId, (v - 1) as VertexId, w);
            }
            Some(tok) => return Err(parse_err(lineno, format!("unknown line type `{tok}`"))),
        }
    }
    let mut builder = builder.ok_or_else(|| GraphError::Format("missing problem line".into()))?;

    for (i, line) in co.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None | Some("c") | Some("p") => continue,
            Some("v") => {
                let id: u64 = field(toks.next(), lineno, "vertex id")?;
                let x: i64 = field(toks.next(), lineno, "x coordinate")?;
                let y: i64 = field(toks.next(), lineno, "y coordinate")?;
                if id == 0 || id as usize > n {
                    return Err(GraphError::Format(format!(
                        "line {lineno}: coordinate id {id} outside id range 1..={n}"
                    )));
                }
                builder.coord((id - 1) as VertexId, Point::new(x, y));
            }
            Some(tok) => return Err(parse_err(lineno, format!("unknown line type `{tok}`"))),
        }
    }
    builder.build()
}

/// Diagnostics produced by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub n: usize,
    pub edges: usize,
    pub symmetric: bool,
    pub connected: bool,
    pub max_degree: usize,
    pub self_loops: usize,
    pub parallel_edges: usize,
    pub duplicate_coordinates: usize,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.symmetric && self.connected && self.self_loops == 0 && self.parallel_edges == 0
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices: {}", self.n)?;
        writeln!(f, "edges: {}", self.edges)?;
        writeln!(f, "symmetric: {}", self.symmetric)?;
        writeln!(f, "connected: {}", if self.connected { "yes" } else { "not connected" })?;
        writeln!(f, "max degree: {}", self.max_degree)?;
        writeln!(f, "self loops: {}", self.self_loops)?;
        writeln!(f, "parallel edges: {}", self.parallel_edges)?;
        write!(f, "duplicate coordinates: {}", self.duplicate_coordinates)
    }
}

/// Scans a network for structural invariant violations.
pub fn validate(net: &RoadNetwork) -> ValidationReport {
    let n = net.n();
    let mut symmetric = true;
    let mut self_loops = 0;
    let mut parallel_edges = 0;
    let mut max_degree = 0;
    for u in 0..n as VertexId {
        max_degree = max_degree.max(net.degree(u));
        let mut prev = None;
        for (v, w) in net.neighbors(u) {
            if v == u {
                self_loops += 1;
            }
            if prev == Some(v) {
                parallel_edges += 1;
            }
            prev = Some(v);
            if net.edge_weight(v, u) != Some(w) {
                symmetric = false;
            }
        }
    }

    let mut seen = vec![false; n];
    let mut reached = 0;
    if n > 0 {
        let mut stack = vec![0 as VertexId];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            reached += 1;
            for (v, _) in net.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
    }

    let mut pts: Vec<Point> = net.coords().to_vec();
    pts.sort_unstable_by_key(|p| (p.x, p.y));
    let duplicate_coordinates = pts.windows(2).filter(|w| w[0] == w[1]).count();

    ValidationReport {
        n,
        edges: net.edge_count(),
        symmetric,
        connected: reached == n,
        max_degree,
        self_loops,
        parallel_edges,
        duplicate_coordinates,
    }
}

/// A path of original edges, `vertices[0]` to `vertices[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    pub length: Distance,
}

impl Path {
    /// The zero-edge path at `v`.
    pub fn trivial(v: VertexId) -> Self {
        Path { vertices: vec![v], length: 0 }
    }

    pub fn source(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn target(&self) -> VertexId {
        *self.vertices.last().expect("path has at least one vertex")
    }

    /// Edge count.
    pub fn k(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn concat(mut self, other: Path) -> Result<Path, PathError> {
        let (end, start) = (self.target(), other.source());
        if end != start {
            return Err(PathError::EndpointMismatch { end, start });
        }
        self.vertices.extend_from_slice(&other.vertices[1..]);
        self.length += other.length;
        Ok(self)
    }
}
