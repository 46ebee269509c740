//! Seeded synthetic networks for tests and desk-scale benchmarks.

use std::ops::RangeInclusive;

use crate::graph::{NetworkBuilder, Point, RoadNetwork, VertexId, Weight};
use crate::rng::XorShift64Star;

const CAP: usize = 8;

/// Uniform random points joined by a nearest-predecessor spanning tree plus
/// each point's `k` nearest neighbors. Weights are drawn uniformly from
/// `weights`; narrow ranges give many equal-length alternatives.
pub fn random_geometric(n: usize, k: usize, weights: RangeInclusive<Weight>, seed: u64) -> RoadNetwork {
    assert!(n > 0);
    let mut rng = XorShift64Star::new(seed);
    let pts: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.below(10_000) as i64, rng.below(10_000) as i64))
        .collect();
    let d2 = |a: usize, b: usize| {
        let dx = pts[a].x - pts[b].x;
        let dy = pts[a].y - pts[b].y;
        dx * dx + dy * dy
    };
    let span = (*weights.end() - *weights.start()) as u64 + 1;
    let draw = |rng: &mut XorShift64Star| *weights.start() + rng.below(span) as Weight;

    let mut degree = vec![0usize; n];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut has = std::collections::HashSet::new();
    for i in 1..n {
        let j = (0..i)
            .filter(|&j| degree[j] < CAP)
            .min_by_key(|&j| (d2(i, j), j))
            .expect("some predecessor has spare degree");
        edges.push((j, i));
        has.insert((j, i));
        degree[i] += 1;
        degree[j] += 1;
    }
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by_key(|&j| (d2(i, j), j));
        for &j in order.iter().take(k) {
            let key = (i.min(j), i.max(j));
            if has.contains(&key) || degree[i] >= CAP || degree[j] >= CAP {
                continue;
            }
            has.insert(key);
            edges.push(key);
            degree[i] += 1;
            degree[j] += 1;
        }
    }

    let mut b = NetworkBuilder::new(n);
    for (i, p) in pts.iter().enumerate() {
        b.coord(i as VertexId, *p);
    }
    for (u, v) in edges {
        let w = draw(&mut rng);
        b.edge(u as VertexId, v as VertexId, w);
    }
    b.build().expect("generator respects the degree bound")
}

/// Jittered grid with thinned local streets, sparse diagonals and faster
/// arterial rows/columns every eighth line. Weights are travel times derived
/// from Euclidean length and speed, so they carry a loose hierarchy like
/// real road data. The result is restricted to its largest component, so it
/// can have slightly fewer than `n` vertices.
pub fn road_like(n: usize, seed: u64) -> RoadNetwork {
    let side = (n as f64).sqrt().ceil().max(2.0) as usize;
    let rows = n.div_ceil(side);
    let mut rng = XorShift64Star::new(seed);
    let id = |r: usize, c: usize| (r * side + c) as VertexId;
    let count = rows * side;
    let mut b = NetworkBuilder::new(count);
    let mut pts = Vec::with_capacity(count);
    for r in 0..rows {
        for c in 0..side {
            let jx = rng.below(61) as i64 - 30;
            let jy = rng.below(61) as i64 - 30;
            let p = Point::new(c as i64 * 100 + jx, r as i64 * 100 + jy);
            pts.push(p);
            b.coord(id(r, c), p);
        }
    }
    let travel = |a: Point, bb: Point, speed: f64| -> Weight {
        let dx = (a.x - bb.x) as f64;
        let dy = (a.y - bb.y) as f64;
        ((dx * dx + dy * dy).sqrt() * 10.0 / speed).round().max(1.0) as Weight
    };
    for r in 0..rows {
        for c in 0..side {
            let u = id(r, c);
            if c + 1 < side {
                let arterial = r % 8 == 0;
                if arterial || rng.unit() < 0.85 {
                    let speed = if arterial { 3.0 } else { 1.0 };
                    let w = travel(pts[u as usize], pts[id(r, c + 1) as usize], speed);
                    b.edge(u, id(r, c + 1), w);
                }
            }
            if r + 1 < rows {
                let arterial = c % 8 == 0;
                if arterial || rng.unit() < 0.85 {
                    let speed = if arterial { 3.0 } else { 1.0 };
                    let w = travel(pts[u as usize], pts[id(r + 1, c) as usize], speed);
                    b.edge(u, id(r + 1, c), w);
                }
            }
            if r + 1 < rows && c + 1 < side && rng.unit() < 0.08 {
                let w = travel(pts[u as usize], pts[id(r + 1, c + 1) as usize], 1.0);
                b.edge(u, id(r + 1, c + 1), w);
            }
        }
    }
    b.build().expect("grid degree is at most 8")
}

/// Path graph `0 - 1 - ... - (n-1)` with unit weights along the x axis.
pub fn path_graph(n: usize) -> RoadNetwork {
    let mut b = NetworkBuilder::new(n);
    for i in 0..n {
        b.coord(i as VertexId, Point::new(i as i64, (i % 2) as i64));
        if i + 1 < n {
            b.edge(i as VertexId, i as VertexId + 1, 1);
        }
    }
    b.build().expect("path graph")
}

/// Star with center 0 and `leaves` unit-weight spokes.
pub fn star_graph(leaves: usize) -> RoadNetwork {
    let mut b = NetworkBuilder::new(leaves + 1);
    b.coord(0, Point::new(0, 0));
    for i in 1..=leaves {
        let a = i as f64 * std::f64::consts::TAU / leaves as f64;
        b.coord(i as VertexId, Point::new((a.cos() * 100.0) as i64, (a.sin() * 100.0) as i64));
        b.edge(0, i as VertexId, 1);
    }
    b.build().expect("star graph")
}

/// Cycle of `n` unit edges on a circle.
pub fn cycle_graph(n: usize) -> RoadNetwork {
    let mut b = NetworkBuilder::new(n);
    for i in 0..n {
        let a = i as f64 * std::f64::consts::TAU / n as f64;
        b.coord(i as VertexId, Point::new((a.cos() * 100.0) as i64, (a.sin() * 100.0) as i64));
        b.edge(i as VertexId, ((i + 1) % n) as VertexId, 1);
    }
    b.build().expect("cycle graph")
}
