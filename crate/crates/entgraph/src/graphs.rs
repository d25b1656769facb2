//! Catalog of ordered interaction graphs: rings, complete clusters, stars,
//! the platonic solids, and hexagonal/trigonal tori, with adjacency, degree
//! and spectral utilities.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid size parameter for {family}: {why}")]
    InvalidSize { family: &'static str, why: String },
    #[error("unknown platonic solid `{0}`")]
    UnknownSolid(String),
}

/// Simple undirected graph with a catalog tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub tag: String,
}

fn normalize(n: usize, mut edges: Vec<(usize, usize)>, tag: &str) -> Graph {
    for e in &mut edges {
        if e.0 > e.1 {
            *e = (e.1, e.0);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Graph { n, edges, tag: tag.to_string() }
}

/// Cycle on `n >= 3` vertices.
pub fn ring(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidSize { family: "ring", why: format!("n = {n} < 3") });
    }
    let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Ok(normalize(n, edges, "ring"))
}

/// Complete graph on `n >= 2` vertices (permutation-invariant cluster).
pub fn complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize { family: "complete", why: format!("n = {n} < 2") });
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j));
        }
    }
    Ok(normalize(n, edges, "complete"))
}

/// Star with a central vertex 0 and `m >= 1` leaves.
pub fn star(m: usize) -> Result<Graph, GraphError> {
    if m < 1 {
        return Err(GraphError::InvalidSize { family: "star", why: "m = 0 leaves".into() });
    }
    let edges = (1..=m).map(|i| (0, i)).collect();
    Ok(normalize(m + 1, edges, "star"))
}

// Fixed adjacency data for the five platonic solids, standard labellings.
const TETRAHEDRON: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

// Cube vertices are 3-bit strings; edges flip one bit.
const CUBE: [(usize, usize); 12] = [
    (0, 1), (0, 2), (0, 4), (1, 3), (1, 5), (2, 3),
    (2, 6), (3, 7), (4, 5), (4, 6), (5, 7), (6, 7),
];

// Octahedron = K_{2,2,2}: everything except the antipodal pairs (0,3), (1,4), (2,5).
const OCTAHEDRON: [(usize, usize); 12] = [
    (0, 1), (0, 2), (0, 4), (0, 5), (1, 2), (1, 3),
    (1, 5), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5),
];

// Dodecahedron as the generalized Petersen graph GP(10, 2): outer cycle
// 0..9, spokes to 10..19, inner edges skip two.
const DODECAHEDRON: [(usize, usize); 30] = [
    (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (9, 0),
    (0, 10), (1, 11), (2, 12), (3, 13), (4, 14), (5, 15), (6, 16), (7, 17), (8, 18), (9, 19),
    (10, 12), (12, 14), (14, 16), (16, 18), (18, 10),
    (11, 13), (13, 15), (15, 17), (17, 19), (19, 11),
];

// Icosahedron: apex 0, upper pentagon 1..5, lower pentagon 6..10 (rotated), apex 11.
const ICOSAHEDRON: [(usize, usize); 30] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5),
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 1),
    (6, 7), (7, 8), (8, 9), (9, 10), (10, 6),
    (1, 6), (2, 7), (3, 8), (4, 9), (5, 10),
    (1, 7), (2, 8), (3, 9), (4, 10), (5, 6),
    (11, 6), (11, 7), (11, 8), (11, 9), (11, 10),
];

/// One of the five platonic solids by name.
pub fn platonic(name: &str) -> Result<Graph, GraphError> {
    let (n, edges): (usize, &[(usize, usize)]) = match name {
        "tetrahedron" => (4, &TETRAHEDRON),
        "cube" => (8, &CUBE),
        "octahedron" => (6, &OCTAHEDRON),
        "dodecahedron" => (20, &DODECAHEDRON),
        "icosahedron" => (12, &ICOSAHEDRON),
        other => return Err(GraphError::UnknownSolid(other.to_string())),
    };
    Ok(normalize(n, edges.to_vec(), name))
}

/// Names of the five platonic solids in catalog order.
pub const PLATONIC_NAMES: [&str; 5] =
    ["tetrahedron", "cube", "octahedron", "dodecahedron", "icosahedron"];

/// Hexagonal (honeycomb) torus as a brick-wall quotient of the square
/// torus: vertex (x, y) -> x + a*y, horizontal edges everywhere, vertical
/// edges where x + y is even. Both tiling dimensions must be even for the
/// parity pattern to close; `a >= 4` keeps the graph simple.
pub fn hex_torus(a: usize, b: usize) -> Result<Graph, GraphError> {
    if a % 2 != 0 || b % 2 != 0 || a < 4 || b < 2 {
        return Err(GraphError::InvalidSize {
            family: "hex_torus",
            why: format!("need even a >= 4, even b >= 2, got ({a}, {b})"),
        });
    }
    let v = |x: usize, y: usize| (x % a) + a * (y % b);
    let mut edges = Vec::with_capacity(3 * a * b / 2);
    for y in 0..b {
        for x in 0..a {
            edges.push((v(x, y), v(x + 1, y)));
            if (x + y) % 2 == 0 {
                edges.push((v(x, y), v(x, y + 1)));
            }
        }
    }
    Ok(normalize(a * b, edges, "hex_torus"))
}

/// Triangular torus: vertex (x, y) -> x + a*y with neighbors at offsets
/// (1,0), (0,1), (1,1). Dimensions below 3 would collapse parallel edges.
pub fn tri_torus(a: usize, b: usize) -> Result<Graph, GraphError> {
    if a < 3 || b < 3 {
        return Err(GraphError::InvalidSize {
            family: "tri_torus",
            why: format!("need a, b >= 3, got ({a}, {b})"),
        });
    }
    let v = |x: usize, y: usize| (x % a) + a * (y % b);
    let mut edges = Vec::with_capacity(3 * a * b);
    for y in 0..b {
        for x in 0..a {
            edges.push((v(x, y), v(x + 1, y)));
            edges.push((v(x, y), v(x, y + 1)));
            edges.push((v(x, y), v(x + 1, y + 1)));
        }
    }
    Ok(normalize(a * b, edges, "tri_torus"))
}

impl Graph {
    /// Symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency(&self) -> Mat<f64> {
        let mut a = Mat::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Vertex degrees.
    pub fn degree(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    /// Adjacency eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        self.adjacency()
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("adjacency eigendecomposition converges")
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Whether all vertices have the same degree; returns it if so.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree();
        let first = *d.first()?;
        d.iter().all(|&x| x == first).then_some(first)
    }

    /// Catalog graphs are vertex-transitive except the star; user-supplied
    /// (untagged) graphs are not certified.
    pub fn is_vertex_transitive_catalog(&self) -> bool {
        matches!(
            self.tag.as_str(),
            "ring" | "complete" | "hex_torus" | "tri_torus" | "tetrahedron" | "cube"
                | "octahedron" | "dodecahedron" | "icosahedron"
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_three_equals_complete_three() {
        assert_eq!(ring(3).unwrap().edges, complete(3).unwrap().edges);
    }

    #[test]
    fn catalog_counts_and_regularity() {
        // (graph, vertices, edges, degree)
        let cases = [
            (platonic("tetrahedron").unwrap(), 4, 6, 3),
            (platonic("cube").unwrap(), 8, 12, 3),
            (platonic("octahedron").unwrap(), 6, 12, 4),
            (platonic("dodecahedron").unwrap(), 20, 30, 3),
            (platonic("icosahedron").unwrap(), 12, 30, 5),
            (ring(7).unwrap(), 7, 7, 2),
            (complete(6).unwrap(), 6, 15, 5),
            (tri_torus(4, 4).unwrap(), 16, 48, 6),
            (hex_torus(4, 2).unwrap(), 8, 12, 3),
            (hex_torus(6, 4).unwrap(), 24, 36, 3),
        ];
        for (g, n, e, d) in cases {
            assert_eq!(g.n, n, "{}", g.tag);
            assert_eq!(g.edges.len(), e, "{}", g.tag);
            assert_eq!(g.regular_degree(), Some(d), "{}", g.tag);
            assert!(g.is_connected(), "{}", g.tag);
        }
    }

    #[test]
    fn star_degree_list() {
        let g = star(5).unwrap();
        let mut d = g.degree();
        assert_eq!(d.remove(0), 5);
        assert!(d.iter().all(|&x| x == 1));
        assert!(!g.is_vertex_transitive_catalog());
    }

    #[test]
    fn ring_spectrum_matches_circulant_closed_form() {
        let n = 8;
        let g = ring(n).unwrap();
        let mut want: Vec<f64> = (0..n)
            .map(|k| 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = g.spectrum();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn complete_spectrum_is_rank_one_shift() {
        let n = 6;
        let got = complete(n).unwrap().spectrum();
        for v in &got[..n - 1] {
            assert!((v + 1.0).abs() < 1e-10);
        }
        assert!((got[n - 1] - (n as f64 - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn spectrum_traces_and_radius() {
        for g in [
            ring(9).unwrap(),
            complete(5).unwrap(),
            star(4).unwrap(),
            platonic("icosahedron").unwrap(),
            tri_torus(3, 5).unwrap(),
        ] {
            let s = g.spectrum();
            let trace: f64 = s.iter().sum();
            assert!(trace.abs() < 1e-8, "{}: trace {trace}", g.tag);
            let radius = s.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let max_deg = *g.degree().iter().max().unwrap() as f64;
            assert!(radius <= max_deg + 1e-10, "{}", g.tag);
        }
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        assert!(ring(2).is_err());
        assert!(complete(1).is_err());
        assert!(star(0).is_err());
        assert!(hex_torus(3, 2).is_err());
        assert!(hex_torus(2, 2).is_err());
        assert!(tri_torus(2, 4).is_err());
        assert!(platonic("teapot").is_err());
    }

    #[test]
    fn graph_json_round_trips() {
        let g = ring(5).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: Graph = serde_json::from_str(&json).unwrap();
        assert_eq!(g.n, back.n);
        assert_eq!(g.edges, back.edges);
        assert_eq!(g.tag, back.tag);
    }
}
