//! Harmonic oscillators on graphs: quadratic Hamiltonian matrices, ground
//! energy and covariance, neighboring-mode EPR variances, and the maximal
//! nearest-neighbor entanglement curves for symmetric graph families.
//!
//! Conventions: the covariance matrix uses the anticommutator form, so the
//! vacuum has unit covariance and `V(v·R) = vᵀ Γ v / 2`; the separability
//! threshold for the EPR parameter is `delta = 1`.

use faer::{Mat, Side};
use thiserror::Error;

use crate::graphs::Graph;

/// Eigenvalues at or below this are treated as exact zeros (kernel
/// directions of the Hamiltonian blocks).
pub const KERNEL_EPS: f64 = 1e-10;

/// Maximal overlap of an EPR test vector with a divergent kernel direction
/// before the variance is reported divergent.
const OVERLAP_TOL: f64 = 1e-9;

/// Dense eigendecomposition cap on the number of modes.
pub const DENSE_NODE_CAP: usize = 4096;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph `{0}` is not a vertex-transitive catalog graph")]
    NonTransitive(String),
    #[error("{0} modes exceed the dense cap of {DENSE_NODE_CAP}")]
    TooLarge(usize),
    #[error("symmetrized product has eigenvalue {0:.2e} below -1e-8")]
    IndefiniteProduct(f64),
    #[error("h_q and h_p share a kernel direction")]
    SharedKernel,
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("graph has no edges")]
    NoEdges,
}

/// Position and momentum blocks of the optimal nearest-neighbor
/// Hamiltonian `Σ_edges (Q_k + Q_l)² + (P_k - P_l)²`.
pub struct HamiltonianPair {
    h_q: Mat<f64>,
    h_p: Mat<f64>,
    graph: Graph,
}

/// Expand the edge sum into `h_q = D + A` and `h_p = D - A`.
pub fn hamiltonian_pair(g: &Graph) -> Result<HamiltonianPair, GaussianError> {
    if !g.is_connected() {
        return Err(GaussianError::Disconnected);
    }
    if g.n > DENSE_NODE_CAP {
        return Err(GaussianError::TooLarge(g.n));
    }
    let n = g.n;
    let mut h_q = Mat::<f64>::zeros(n, n);
    let mut h_p = Mat::<f64>::zeros(n, n);
    for &(k, l) in &g.edges {
        // (Q_k + Q_l)²: diagonal +1 on both, off-diagonal +1.
        h_q[(k, k)] += 1.0;
        h_q[(l, l)] += 1.0;
        h_q[(k, l)] += 1.0;
        h_q[(l, k)] += 1.0;
        // (P_k - P_l)²: diagonal +1, off-diagonal -1.
        h_p[(k, k)] += 1.0;
        h_p[(l, l)] += 1.0;
        h_p[(k, l)] -= 1.0;
        h_p[(l, k)] -= 1.0;
    }
    Ok(HamiltonianPair { h_q, h_p, graph: g.clone() })
}

impl HamiltonianPair {
    pub fn h_q(&self) -> &Mat<f64> {
        &self.h_q
    }

    pub fn h_p(&self) -> &Mat<f64> {
        &self.h_p
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn modes(&self) -> usize {
        self.graph.n
    }
}

/// Spectral function of a symmetric matrix from its eigendecomposition.
fn sym_apply(m: &Mat<f64>, f: impl Fn(f64) -> f64) -> Mat<f64> {
    let n = m.nrows();
    let evd = m.self_adjoint_eigen(Side::Lower).expect("symmetric eigendecomposition converges");
    let u = evd.U();
    let vals: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let mut out = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        let fk = f(vals[k]);
        if fk != 0.0 {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += fk * u[(i, k)] * u[(j, k)];
                }
            }
        }
    }
    out
}

/// Ground energy `e0 = ||sqrt(h_q h_p)||_1`, evaluated as the trace of the
/// square root of the symmetrized product `sqrt(h_q) h_p sqrt(h_q)`.
pub fn ground_energy(pair: &HamiltonianPair) -> Result<f64, GaussianError> {
    let sqrt_q = sym_apply(&pair.h_q, |x| x.max(0.0).sqrt());
    let m = &sqrt_q * &pair.h_p * &sqrt_q;
    let eigs = m
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("symmetric eigendecomposition converges");
    if let Some(&min) = eigs.first() {
        if min < -1e-8 {
            return Err(GaussianError::IndefiniteProduct(min));
        }
    }
    // Eigenvalues below KERNEL_EPS are exact zeros of h_q h_p; without the
    // clamp the square root amplifies O(eps) dirt to O(sqrt(eps)).
    Ok(eigs
        .iter()
        .map(|&mu| if mu > KERNEL_EPS { mu.sqrt() } else { 0.0 })
        .sum())
}

/// Ground-state covariance blocks with kernel bookkeeping.
///
/// `gamma_q` and `gamma_p_finite` carry zeros on their divergent
/// directions (pseudo-inverse convention); the kernels of `h_q` and `h_p`
/// are reported separately as the infinitely squeezed directions.
pub struct GroundStateCm {
    gamma_q: Mat<f64>,
    gamma_p_finite: Mat<f64>,
    q_kernel: Vec<Vec<f64>>,
    p_kernel: Vec<Vec<f64>>,
}

impl GroundStateCm {
    /// Q block of the ground covariance, zero on both kernels.
    pub fn gamma_q(&self) -> &Mat<f64> {
        &self.gamma_q
    }

    /// P block restricted to the complement of `ker(h_p)`.
    pub fn gamma_p_finite(&self) -> &Mat<f64> {
        &self.gamma_p_finite
    }

    /// Orthonormal basis of `ker(h_p)`: divergent directions of the P block.
    pub fn kernel_basis(&self) -> &[Vec<f64>] {
        &self.p_kernel
    }

    /// Orthonormal basis of `ker(h_q)`: divergent directions of the Q block.
    pub fn q_kernel_basis(&self) -> &[Vec<f64>] {
        &self.q_kernel
    }
}

/// Ground covariance `Γ0 = sqrt(h_p h_q^{-1}) ⊕ sqrt(h_q h_p^{-1})`.
///
/// Regular graphs share the adjacency eigenbasis, where the blocks are
/// diagonal with entries `sqrt(p_k / q_k)` and `sqrt(q_k / p_k)`;
/// non-regular graphs fall back to the symmetrized-product form
/// `Γ_Q = h_q^{-1/2} W h_q^{-1/2}`, `Γ_P = h_q^{1/2} W^{-1} h_q^{1/2}`
/// with `W = (h_q^{1/2} h_p h_q^{1/2})^{1/2}`, pseudo-inverting kernels.
pub fn ground_cm(pair: &HamiltonianPair) -> Result<GroundStateCm, GaussianError> {
    let n = pair.modes();
    if let Some(d) = pair.graph.regular_degree() {
        let a = pair.graph.adjacency();
        let evd = a.self_adjoint_eigen(Side::Lower).expect("adjacency eigendecomposition");
        let u = evd.U();
        let alphas: Vec<f64> = evd.S().column_vector().iter().copied().collect();
        let d = d as f64;
        let mut gamma_q = Mat::<f64>::zeros(n, n);
        let mut gamma_p = Mat::<f64>::zeros(n, n);
        let mut q_kernel = Vec::new();
        let mut p_kernel = Vec::new();
        for k in 0..n {
            let q = d + alphas[k];
            let p = d - alphas[k];
            let col: Vec<f64> = (0..n).map(|i| u[(i, k)]).collect();
            if q <= KERNEL_EPS && p <= KERNEL_EPS {
                return Err(GaussianError::SharedKernel);
            }
            if q <= KERNEL_EPS {
                q_kernel.push(col);
                continue;
            }
            if p <= KERNEL_EPS {
                p_kernel.push(col);
                // gamma_q eigenvalue sqrt(p/q) = 0 on this direction.
                continue;
            }
            let gq = (p / q).sqrt();
            let gp = (q / p).sqrt();
            for i in 0..n {
                for j in 0..n {
                    gamma_q[(i, j)] += gq * col[i] * col[j];
                    gamma_p[(i, j)] += gp * col[i] * col[j];
                }
            }
        }
        return Ok(GroundStateCm { gamma_q, gamma_p_finite: gamma_p, q_kernel, p_kernel });
    }

    // Non-regular fallback.
    let q_evd = pair.h_q.self_adjoint_eigen(Side::Lower).expect("h_q eigendecomposition");
    let q_vals: Vec<f64> = q_evd.S().column_vector().iter().copied().collect();
    let p_evd = pair.h_p.self_adjoint_eigen(Side::Lower).expect("h_p eigendecomposition");
    let p_vals: Vec<f64> = p_evd.S().column_vector().iter().copied().collect();
    let q_kernel: Vec<Vec<f64>> = q_vals
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v <= KERNEL_EPS)
        .map(|(k, _)| (0..n).map(|i| q_evd.U()[(i, k)]).collect())
        .collect();
    let p_kernel: Vec<Vec<f64>> = p_vals
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v <= KERNEL_EPS)
        .map(|(k, _)| (0..n).map(|i| p_evd.U()[(i, k)]).collect())
        .collect();
    // A vector killed by both blocks would be killed by h_q + h_p = 2D,
    // impossible unless some vertex is isolated.
    let sum = &pair.h_q + &pair.h_p;
    let sum_eigs = sum
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("symmetric eigendecomposition converges");
    if sum_eigs.first().copied().unwrap_or(0.0) <= KERNEL_EPS {
        return Err(GaussianError::SharedKernel);
    }
    let sqrt_q = sym_apply(&pair.h_q, |x| x.max(0.0).sqrt());
    let inv_sqrt_q = sym_apply(&pair.h_q, |x| {
        if x > KERNEL_EPS {
            1.0 / x.sqrt()
        } else {
            0.0
        }
    });
    let m = &sqrt_q * &pair.h_p * &sqrt_q;
    let w = sym_apply(&m, |x| x.max(0.0).sqrt());
    let w_pinv = sym_apply(&m, |x| {
        if x > KERNEL_EPS {
            1.0 / x.max(0.0).sqrt()
        } else {
            0.0
        }
    });
    let gamma_q = &inv_sqrt_q * &w * &inv_sqrt_q;
    let gamma_p_finite = &sqrt_q * &w_pinv * &sqrt_q;
    Ok(GroundStateCm { gamma_q, gamma_p_finite, q_kernel, p_kernel })
}

/// EPR variances of one edge: `vq = V(Q_a + Q_b)`, `vp = V(P_a - P_b)`,
/// and their geometric mean `delta`. `Divergent` marks pairs whose test
/// vectors hit an infinitely squeezed or anti-squeezed direction; the
/// single-edge graph is of this kind (the original EPR pair).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EprVariances {
    Finite { vq: f64, vp: f64, delta: f64 },
    Divergent,
}

impl EprVariances {
    pub fn delta(&self) -> Option<f64> {
        match self {
            EprVariances::Finite { delta, .. } => Some(*delta),
            EprVariances::Divergent => None,
        }
    }
}

/// EPR variances on the first edge of a vertex-transitive catalog graph.
pub fn epr_variances(g: &Graph) -> Result<EprVariances, GaussianError> {
    if !g.is_vertex_transitive_catalog() {
        return Err(GaussianError::NonTransitive(g.tag.clone()));
    }
    let &(a, b) = g.edges.first().ok_or(GaussianError::NoEdges)?;
    epr_variances_on_edge(g, (a, b))
}

/// Same as [`epr_variances`] but on a caller-chosen edge, without the
/// catalog-transitivity gate. Vertex relabeling by any automorphism leaves
/// delta unchanged, so this is the hook for symmetry checks and for user
/// graphs that carry their own transitivity guarantee.
pub fn epr_variances_on_edge(
    g: &Graph,
    (a, b): (usize, usize),
) -> Result<EprVariances, GaussianError> {
    let pair = hamiltonian_pair(g)?;
    let cm = ground_cm(&pair)?;
    let n = g.n;

    let quad = |m: &Mat<f64>, v: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += v[i] * m[(i, j)] * v[j];
            }
        }
        acc / 2.0
    };
    let overlaps = |kernel: &[Vec<f64>], v: &[f64]| -> bool {
        kernel.iter().any(|k| {
            let o: f64 = k.iter().zip(v).map(|(x, y)| x * y).sum();
            o.abs() > OVERLAP_TOL
        })
    };
    // Variance of the squeezed combinations, for both sign choices; the
    // product is minimized over the local squeezing freedom.
    let mut best: Option<(f64, f64)> = None;
    for s in [1.0f64, -1.0] {
        let mut uq = vec![0.0; n];
        uq[a] += 1.0;
        uq[b] += s;
        let mut up = vec![0.0; n];
        up[a] += 1.0;
        up[b] -= s;
        let vq = if overlaps(&cm.q_kernel, &uq) { f64::INFINITY } else { quad(&cm.gamma_q, &uq) };
        let vp = if overlaps(&cm.p_kernel, &up) { f64::INFINITY } else { quad(&cm.gamma_p_finite, &up) };
        let product = vq * vp;
        let better = match best {
            None => true,
            Some((bq, bp)) => product < bq * bp,
        };
        if better {
            best = Some((vq, vp));
        }
    }
    let (vq, vp) = best.expect("two sign choices evaluated");
    if !vq.is_finite() || !vp.is_finite() || vq <= 1e-12 || vp <= 1e-12 {
        return Ok(EprVariances::Divergent);
    }
    Ok(EprVariances::Finite { vq, vp, delta: (vq * vp).sqrt() })
}

/// Entanglement of formation (ebits) of a symmetric two-mode Gaussian
/// state with EPR parameter `delta`: zero at and above the separability
/// threshold `delta = 1`, diverging as `delta -> 0`.
pub fn eof_symmetric(delta: f64) -> Result<f64, GaussianError> {
    if delta <= 0.0 {
        return Err(GaussianError::NonPositiveDelta(delta));
    }
    if delta >= 1.0 {
        return Ok(0.0);
    }
    let root = delta.sqrt();
    let c_plus = (1.0 / root + root).powi(2) / 4.0;
    let c_minus = (1.0 / root - root).powi(2) / 4.0;
    Ok(c_plus * c_plus.log2() - c_minus * c_minus.log2())
}

/// Maximal nearest-neighbor entanglement (ebits) over Gaussian states with
/// the graph's symmetry; infinite for divergent (EPR-limit) pairs.
pub fn max_nn_eof(g: &Graph) -> Result<f64, GaussianError> {
    match epr_variances(g)? {
        EprVariances::Finite { delta, .. } => eof_symmetric(delta),
        EprVariances::Divergent => Ok(f64::INFINITY),
    }
}

/// EPR parameter of the N-ring from the circulant spectrum:
/// `delta = (1/N) Σ_k |sin(2πk/N)|`. Exact for every N; tends to `2/π`.
pub fn ring_delta(n: usize) -> f64 {
    let mut sum = 0.0;
    for k in 0..n {
        sum += (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin().abs();
    }
    sum / n as f64
}

/// The infinite-ring limit `(delta, eof) = (2/π, eof_symmetric(2/π))`,
/// the closed integral of the circulant spectral sum.
pub fn ring_limit() -> (f64, f64) {
    let delta = 2.0 / std::f64::consts::PI;
    (delta, eof_symmetric(delta).expect("2/pi is in (0, 1)"))
}

/// One row of a family scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanRow {
    pub n: usize,
    pub vq: f64,
    pub vp: f64,
    pub delta: f64,
    /// Ebits; infinite for divergent pairs.
    pub eof: f64,
    pub e0_per_mode: f64,
}

/// Graph family selector for [`scan`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Ring,
    Cluster,
    HexTorus,
    TriTorus,
    Platonic,
}

/// Scan a family over vertex counts in `[n_min, n_max]`, ordered by N.
///
/// Rings use the analytic circulant sums (cheap up to millions of modes);
/// the other families go through the dense spectral path. Tori are scanned
/// on square tilings.
pub fn scan(family: Family, n_min: usize, n_max: usize) -> Result<Vec<ScanRow>, GaussianError> {
    let mut rows = Vec::new();
    match family {
        Family::Ring => {
            for n in n_min.max(3)..=n_max {
                let delta = ring_delta(n);
                let eof = eof_symmetric(delta)?;
                rows.push(ScanRow {
                    n,
                    vq: delta,
                    vp: delta,
                    delta,
                    eof,
                    e0_per_mode: 2.0 * delta,
                });
            }
        }
        Family::Cluster => {
            for n in n_min.max(2)..=n_max {
                rows.push(dense_row(&crate::graphs::complete(n).expect("n >= 2"))?);
            }
        }
        Family::HexTorus => {
            let mut a = 4;
            while a * a <= n_max {
                if a * a >= n_min {
                    rows.push(dense_row(&crate::graphs::hex_torus(a, a).expect("even a >= 4"))?);
                }
                a += 2;
            }
        }
        Family::TriTorus => {
            let mut a = 3;
            while a * a <= n_max {
                if a * a >= n_min {
                    rows.push(dense_row(&crate::graphs::tri_torus(a, a).expect("a >= 3"))?);
                }
                a += 1;
            }
        }
        Family::Platonic => {
            for name in crate::graphs::PLATONIC_NAMES {
                let g = crate::graphs::platonic(name).expect("catalog solid");
                if g.n >= n_min && g.n <= n_max {
                    rows.push(dense_row(&g)?);
                }
            }
            rows.sort_by_key(|r| r.n);
        }
    }
    Ok(rows)
}

fn dense_row(g: &Graph) -> Result<ScanRow, GaussianError> {
    let pair = hamiltonian_pair(g)?;
    let e0 = ground_energy(&pair)?;
    let row = match epr_variances(g)? {
        EprVariances::Finite { vq, vp, delta } => ScanRow {
            n: g.n,
            vq,
            vp,
            delta,
            eof: eof_symmetric(delta)?,
            e0_per_mode: e0 / g.n as f64,
        },
        EprVariances::Divergent => ScanRow {
            n: g.n,
            vq: 0.0,
            vp: 0.0,
            delta: 0.0,
            eof: f64::INFINITY,
            e0_per_mode: e0 / g.n as f64,
        },
    };
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;

    const PI: f64 = std::f64::consts::PI;

    fn single_edge() -> Graph {
        graphs::complete(2).unwrap()
    }

    #[test]
    fn hamiltonian_pair_single_edge() {
        let pair = hamiltonian_pair(&single_edge()).unwrap();
        for (i, j, q, p) in [
            (0, 0, 1.0, 1.0),
            (1, 1, 1.0, 1.0),
            (0, 1, 1.0, -1.0),
            (1, 0, 1.0, -1.0),
        ] {
            assert_eq!(pair.h_q()[(i, j)], q);
            assert_eq!(pair.h_p()[(i, j)], p);
        }
    }

    #[test]
    fn hamiltonian_pair_matches_expansion_oracle() {
        // Independent oracle: expand Σ_edges (Q_k + Q_l)² and (P_k - P_l)²
        // term by term into coefficient matrices.
        for g in [graphs::ring(6).unwrap(), graphs::complete(5).unwrap()] {
            let n = g.n;
            let mut q = vec![vec![0.0f64; n]; n];
            let mut p = vec![vec![0.0f64; n]; n];
            for &(k, l) in &g.edges {
                for (i, ci) in [(k, 1.0), (l, 1.0)] {
                    for (j, cj) in [(k, 1.0), (l, 1.0)] {
                        q[i][j] += ci * cj;
                    }
                }
                for (i, ci) in [(k, 1.0), (l, -1.0)] {
                    for (j, cj) in [(k, 1.0), (l, -1.0)] {
                        p[i][j] += ci * cj;
                    }
                }
            }
            let pair = hamiltonian_pair(&g).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(pair.h_q()[(i, j)], q[i][j], "{} ({i},{j})", g.tag);
                    assert_eq!(pair.h_p()[(i, j)], p[i][j], "{} ({i},{j})", g.tag);
                }
            }
        }
    }

    #[test]
    fn complete_graph_blocks_have_closed_form() {
        let n = 7;
        let pair = hamiltonian_pair(&graphs::complete(n).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let (q, p) = if i == j {
                    ((n as f64 - 2.0) + 1.0, n as f64 - 1.0)
                } else {
                    (1.0, -1.0)
                };
                assert_eq!(pair.h_q()[(i, j)], q);
                assert_eq!(pair.h_p()[(i, j)], p);
            }
        }
    }

    #[test]
    fn ground_energy_closed_forms() {
        // Single edge: h_q h_p = 0, the infinitely squeezed EPR limit.
        let e = ground_energy(&hamiltonian_pair(&single_edge()).unwrap()).unwrap();
        assert!(e.abs() < 1e-10);
        // Triangle: Σ 2|sin(2πk/3)| = 2√3.
        let e = ground_energy(&hamiltonian_pair(&graphs::ring(3).unwrap()).unwrap()).unwrap();
        assert!((e - 2.0 * 3.0f64.sqrt()).abs() < 1e-8, "{e}");
    }

    #[test]
    fn ground_energy_matches_circulant_sum_on_rings() {
        for n in [4usize, 5, 8, 13] {
            let e = ground_energy(&hamiltonian_pair(&graphs::ring(n).unwrap()).unwrap()).unwrap();
            let want: f64 = (0..n).map(|k| 2.0 * (2.0 * PI * k as f64 / n as f64).sin().abs()).sum();
            assert!((e - want).abs() < 1e-8, "ring({n}): {e} vs {want}");
        }
    }

    #[test]
    fn ground_cm_of_complete_graph() {
        let n = 5;
        let pair = hamiltonian_pair(&graphs::complete(n).unwrap()).unwrap();
        let cm = ground_cm(&pair).unwrap();
        // Constant vector spans ker(h_p); gamma_q vanishes there and has
        // sqrt(n/(n-2)) on the complement.
        assert_eq!(cm.kernel_basis().len(), 1);
        assert_eq!(cm.q_kernel_basis().len(), 0);
        let eigs = cm.gamma_q().self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(eigs[0].abs() < 1e-10);
        let want = (n as f64 / (n as f64 - 2.0)).sqrt();
        for &v in &eigs[1..] {
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_cm_of_ring4_has_both_kernels() {
        let pair = hamiltonian_pair(&graphs::ring(4).unwrap()).unwrap();
        let cm = ground_cm(&pair).unwrap();
        assert_eq!(cm.kernel_basis().len(), 1);
        assert_eq!(cm.q_kernel_basis().len(), 1);
        // gamma_q spectrum {0, 0 (pseudo), 1, 1}: q values (4,2,0,2) and
        // p values (0,2,4,2) give sqrt(p/q) = {0, 1, divergent, 1}.
        let mut eigs = cm.gamma_q().self_adjoint_eigenvalues(Side::Lower).unwrap();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(eigs[0].abs() < 1e-10 && eigs[1].abs() < 1e-10);
        assert!((eigs[2] - 1.0).abs() < 1e-10 && (eigs[3] - 1.0).abs() < 1e-10);
    }

    /// Max of |gamma_q gamma_p v - v| / |v| over canonical vectors
    /// projected onto the complement of both kernels.
    fn purity_residual(cm: &GroundStateCm, n: usize) -> f64 {
        // Orthonormalize the kernel vectors (they need not be mutually
        // orthogonal on non-regular graphs).
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for k in cm.q_kernel_basis().iter().chain(cm.kernel_basis()) {
            let mut v = k.clone();
            for b in &basis {
                let o: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= o * bi;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for vi in &mut v {
                    *vi /= norm;
                }
                basis.push(v);
            }
        }
        let product = cm.gamma_q() * cm.gamma_p_finite();
        let mut worst = 0.0f64;
        for e in 0..n {
            let mut v = vec![0.0; n];
            v[e] = 1.0;
            for b in &basis {
                let o: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= o * bi;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 0.1 {
                continue;
            }
            let mut residual = 0.0f64;
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += product[(i, j)] * v[j];
                }
                residual += (acc - v[i]) * (acc - v[i]);
            }
            worst = worst.max(residual.sqrt() / norm);
        }
        worst
    }

    #[test]
    fn purity_on_the_mutual_kernel_complement() {
        for g in [
            graphs::ring(4).unwrap(),
            graphs::ring(5).unwrap(),
            graphs::complete(4).unwrap(),
            graphs::platonic("octahedron").unwrap(),
        ] {
            let cm = ground_cm(&hamiltonian_pair(&g).unwrap()).unwrap();
            let residual = purity_residual(&cm, g.n);
            assert!(residual < 1e-8, "{}: purity residual {residual}", g.tag);
        }
    }

    #[test]
    fn epr_variances_on_ring4() {
        match epr_variances(&graphs::ring(4).unwrap()).unwrap() {
            EprVariances::Finite { vq, vp, delta } => {
                assert!((vq - 0.5).abs() < 1e-10);
                assert!((vp - 0.5).abs() < 1e-10);
                assert!((delta - 0.5).abs() < 1e-10);
            }
            EprVariances::Divergent => panic!("ring(4) is finite"),
        }
    }

    #[test]
    fn triangle_delta_agrees_with_complete_graph_closed_form() {
        // ring(3) = complete(3): circulant sum vs sqrt((n-2)/n).
        let delta = epr_variances(&graphs::ring(3).unwrap())
            .unwrap()
            .delta()
            .unwrap();
        let closed = (1.0f64 / 3.0).sqrt();
        assert!((delta - closed).abs() < 1e-10);
        let delta_c = epr_variances(&graphs::complete(3).unwrap())
            .unwrap()
            .delta()
            .unwrap();
        assert!((delta - delta_c).abs() < 1e-10);
        // And both match the analytic ring path.
        assert!((ring_delta(3) - closed).abs() < 1e-12);
    }

    #[test]
    fn single_edge_is_divergent() {
        assert_eq!(epr_variances(&single_edge()).unwrap(), EprVariances::Divergent);
        assert_eq!(max_nn_eof(&single_edge()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn star_graphs_are_rejected() {
        assert!(matches!(
            epr_variances(&graphs::star(3).unwrap()),
            Err(GaussianError::NonTransitive(_))
        ));
    }

    #[test]
    fn rings_have_equal_epr_variances_via_the_dense_path() {
        for n in [5usize, 6, 9] {
            match epr_variances(&graphs::ring(n).unwrap()).unwrap() {
                EprVariances::Finite { vq, vp, delta } => {
                    assert!((vq - vp).abs() < 1e-12, "ring({n}): {vq} vs {vp}");
                    assert!((delta - ring_delta(n)).abs() < 1e-10);
                }
                EprVariances::Divergent => panic!("ring({n}) is finite"),
            }
        }
    }

    #[test]
    fn delta_is_invariant_across_platonic_edges() {
        for name in ["cube", "dodecahedron", "icosahedron"] {
            let g = graphs::platonic(name).unwrap();
            let reference = epr_variances(&g).unwrap().delta().unwrap();
            for &(a, b) in g.edges.iter().skip(1).step_by(7) {
                let d = epr_variances_on_edge(&g, (a, b)).unwrap().delta().unwrap();
                assert!((d - reference).abs() < 1e-9, "{name} edge ({a},{b})");
            }
        }
    }

    #[test]
    fn eof_symmetric_threshold_and_squeezed_state_oracle() {
        assert_eq!(eof_symmetric(1.0).unwrap(), 0.0);
        assert_eq!(eof_symmetric(1.7).unwrap(), 0.0);
        assert!(eof_symmetric(0.0).is_err());
        // Two-mode squeezed state with squeezing r: delta = exp(-2r) and
        // the entanglement is the pure-state reduced entropy.
        for r in [0.3f64, 0.7, 1.2] {
            let delta = (-2.0 * r).exp();
            let ch2 = r.cosh().powi(2);
            let sh2 = r.sinh().powi(2);
            let want = ch2 * ch2.log2() - sh2 * sh2.log2();
            let got = eof_symmetric(delta).unwrap();
            assert!((got - want).abs() < 1e-9, "r = {r}: {got} vs {want}");
        }
        let (_, eof) = ring_limit();
        assert!((eof - 0.2984).abs() < 5e-4);
    }

    #[test]
    fn ring_limit_matches_quadrature() {
        // Independent oracle: Simpson quadrature of (1/4π) ∫ 2|sin θ| dθ.
        let m = 4000;
        let h = 2.0 * PI / m as f64;
        let f = |theta: f64| 2.0 * theta.sin().abs();
        let mut integral = f(0.0) + f(2.0 * PI);
        for k in 1..m {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * f(k as f64 * h);
        }
        integral *= h / 3.0;
        let quad_delta = integral / (4.0 * PI);
        let (delta, _) = ring_limit();
        assert!((delta - 2.0 / PI).abs() < 1e-15);
        assert!((quad_delta - delta).abs() < 1e-9, "{quad_delta} vs {delta}");
    }

    #[test]
    fn known_eof_values() {
        assert!((max_nn_eof(&graphs::ring(4).unwrap()).unwrap() - 0.5662).abs() < 5e-4);
        assert!((max_nn_eof(&graphs::complete(3).unwrap()).unwrap() - 0.4015).abs() < 5e-4);
    }

    #[test]
    fn ring_scan_matches_reported_sequence() {
        let rows = scan(Family::Ring, 3, 8).unwrap();
        let want = [0.4015, 0.5662, 0.3328, 0.4015, 0.3155, 0.3534];
        for (row, w) in rows.iter().zip(want) {
            assert!((row.eof - w).abs() < 5e-4, "N = {}: {} vs {w}", row.n, row.eof);
        }
        // Per-mode energy tends to 4/π.
        let big = scan(Family::Ring, 2000, 2000).unwrap();
        assert!((big[0].e0_per_mode - 4.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn cluster_scan_divergent_start_and_closed_form() {
        let rows = scan(Family::Cluster, 2, 6).unwrap();
        assert_eq!(rows[0].n, 2);
        assert!(rows[0].eof.is_infinite());
        for row in &rows[1..] {
            let want = ((row.n as f64 - 2.0) / row.n as f64).sqrt();
            assert!((row.delta - want).abs() < 1e-9, "N = {}", row.n);
        }
    }

    #[test]
    fn nonregular_fallback_stays_pure() {
        // Path on three vertices exercises the symmetrized-product branch;
        // its two kernels are distinct but not orthogonal.
        let path = Graph { n: 3, edges: vec![(0, 1), (1, 2)], tag: "custom".into() };
        let pair = hamiltonian_pair(&path).unwrap();
        let cm = ground_cm(&pair).unwrap();
        assert_eq!(cm.kernel_basis().len(), 1);
        assert_eq!(cm.q_kernel_basis().len(), 1);
        let residual = purity_residual(&cm, 3);
        assert!(residual < 1e-8, "fallback purity residual {residual}");
    }

    #[test]
    fn disconnected_graphs_are_rejected() {
        let g = Graph { n: 4, edges: vec![(0, 1), (2, 3)], tag: "custom".into() };
        assert!(matches!(hamiltonian_pair(&g), Err(GaussianError::Disconnected)));
    }
}
