//! Qubit clusters and rings: singlet-projector ground energies, maximal
//! singlet fractions, Wootters and variational concurrence, and the
//! permutation-invariant cluster entanglement curve.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graphs::Graph;
use crate::quantum::{self, CMat, DensityOp, QuantumError};

/// Dense diagonalization cap in qubits.
pub const QUBIT_CAP: usize = 14;

/// Default number of random restarts for the variational concurrence.
pub const DEFAULT_RESTARTS: usize = 32;

/// Central-difference step for numerical gradients.
const GRAD_STEP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("{0} qubits exceed the dense cap of {QUBIT_CAP}")]
    CapExceeded(usize),
    #[error("interaction block is not Hermitian (residual {0:.2e})")]
    NotHermitian(f64),
    #[error("interaction block must be 4x4, got side {0}")]
    BadBlock(usize),
    #[error("expected a two-qubit state")]
    NotTwoQubits,
    #[error("graph `{0}` is not a catalog graph")]
    NotCatalog(String),
    #[error("concurrence argument {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("optimizer failed to converge; best value {best}")]
    NonConvergence { best: f64 },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Projector onto the two-qubit singlet,
/// `1/4 [1 - sx⊗sx - sy⊗sy - sz⊗sz]`. Real in the computational basis.
pub fn singlet_projector() -> CMat {
    let mut p: CMat = Mat::zeros(4, 4);
    p[(1, 1)] = Complex64::new(0.5, 0.0);
    p[(2, 2)] = Complex64::new(0.5, 0.0);
    p[(1, 2)] = Complex64::new(-0.5, 0.0);
    p[(2, 1)] = Complex64::new(-0.5, 0.0);
    p
}

enum Assembled {
    Real(Mat<f64>),
    Complex(CMat),
}

/// Nearest-neighbor Hamiltonian: one 4x4 Hermitian block repeated on every
/// edge of a graph of qubits.
pub struct SpinHamiltonian {
    graph: Graph,
    two_site: CMat,
    assembled: Assembled,
}

impl SpinHamiltonian {
    pub fn new(graph: Graph, two_site: CMat) -> Result<Self, SpinError> {
        if two_site.nrows() != 4 || two_site.ncols() != 4 {
            return Err(SpinError::BadBlock(two_site.nrows()));
        }
        let herm = quantum::hermitian_residual(&two_site);
        if herm > 1e-10 {
            return Err(SpinError::NotHermitian(herm));
        }
        let n = graph.n;
        if n > QUBIT_CAP {
            return Err(SpinError::CapExceeded(n));
        }
        let real_block = (0..16).all(|i| two_site[(i / 4, i % 4)].im.abs() < 1e-15);
        let side = 1usize << n;

        // H[r, c] += B[(a_k a_l), (b_k b_l)] over assignments of the other
        // bits. Bit k is the (n-1-k)-th binary digit (factor 0 slowest).
        let assembled = if real_block {
            let mut h = Mat::<f64>::zeros(side, side);
            for &(k, l) in &graph.edges {
                add_edge_block(&mut h, n, k, l, |i, j| two_site[(i, j)].re);
            }
            Assembled::Real(h)
        } else {
            let mut h: CMat = Mat::zeros(side, side);
            for &(k, l) in &graph.edges {
                add_edge_block(&mut h, n, k, l, |i, j| two_site[(i, j)]);
            }
            Assembled::Complex(h)
        };
        Ok(Self { graph, two_site, assembled })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn two_site(&self) -> &CMat {
        &self.two_site
    }

    pub fn qubits(&self) -> usize {
        self.graph.n
    }

    /// The assembled dense matrix (complex copy for real-block inputs).
    pub fn assembled(&self) -> CMat {
        match &self.assembled {
            Assembled::Real(h) => Mat::from_fn(h.nrows(), h.ncols(), |i, j| {
                Complex64::new(h[(i, j)], 0.0)
            }),
            Assembled::Complex(h) => h.clone(),
        }
    }

    /// Minimal eigenvalue and a ground eigenvector with residual <= 1e-8.
    pub fn ground_energy(&self) -> (f64, Vec<Complex64>) {
        match &self.assembled {
            Assembled::Real(h) => {
                let evd = h.self_adjoint_eigen(Side::Lower).expect("symmetric eigen converges");
                let e0 = *evd.S().column_vector().iter().next().expect("nonempty spectrum");
                let side = h.nrows();
                let u = evd.U();
                let v: Vec<f64> = (0..side).map(|i| u[(i, 0)]).collect();
                let mut residual = 0.0f64;
                for i in 0..side {
                    let mut hv = 0.0;
                    for j in 0..side {
                        hv += h[(i, j)] * v[j];
                    }
                    residual += (hv - e0 * v[i]) * (hv - e0 * v[i]);
                }
                debug_assert!(residual.sqrt() <= 1e-8, "ground residual {}", residual.sqrt());
                (e0, v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
            }
            Assembled::Complex(h) => {
                let evd = h.self_adjoint_eigen(Side::Lower).expect("hermitian eigen converges");
                let e0 = evd.S().column_vector().iter().next().expect("nonempty spectrum").re;
                let side = h.nrows();
                let u = evd.U();
                let v: Vec<Complex64> = (0..side).map(|i| u[(i, 0)]).collect();
                let mut residual = 0.0f64;
                for i in 0..side {
                    let mut hv = quantum::czero();
                    for j in 0..side {
                        hv += h[(i, j)] * v[j];
                    }
                    residual += (hv - v[i] * Complex64::new(e0, 0.0)).norm_sqr();
                }
                debug_assert!(residual.sqrt() <= 1e-8, "ground residual {}", residual.sqrt());
                (e0, v)
            }
        }
    }

    /// Minimal eigenvalue only (skips the eigenvector back-transform).
    pub fn ground_energy_value(&self) -> f64 {
        match &self.assembled {
            Assembled::Real(h) => {
                h.self_adjoint_eigenvalues(Side::Lower).expect("symmetric eigen converges")[0]
            }
            Assembled::Complex(h) => {
                h.self_adjoint_eigenvalues(Side::Lower).expect("hermitian eigen converges")[0]
            }
        }
    }
}

fn add_edge_block<T, F>(h: &mut Mat<T>, n: usize, k: usize, l: usize, block: F)
where
    T: core::ops::AddAssign + Copy + faer::traits::ComplexField,
    F: Fn(usize, usize) -> T,
{
    let bit_k = n - 1 - k;
    let bit_l = n - 1 - l;
    let rest_bits: Vec<usize> = (0..n).filter(|&q| q != k && q != l).map(|q| n - 1 - q).collect();
    let rest = 1usize << rest_bits.len();
    for r in 0..rest {
        let mut base = 0usize;
        for (t, &b) in rest_bits.iter().enumerate() {
            if r >> t & 1 == 1 {
                base |= 1 << b;
            }
        }
        for a in 0..4 {
            let row = base | (a >> 1) << bit_k | (a & 1) << bit_l;
            for b in 0..4 {
                let col = base | (b >> 1) << bit_k | (b & 1) << bit_l;
                *h.get_mut(row, col) += block(a, b);
            }
        }
    }
}

/// Maximal singlet fraction over states with a catalog graph's symmetry:
/// `-e0 / |edges|` for the Hamiltonian `-Σ_edges P_singlet`.
pub fn max_singlet_fraction(g: &Graph) -> Result<f64, SpinError> {
    if g.tag == "custom" {
        return Err(SpinError::NotCatalog(g.tag.clone()));
    }
    let p = singlet_projector();
    let minus_p = Mat::from_fn(4, 4, |i, j| -p[(i, j)]);
    let h = SpinHamiltonian::new(g.clone(), minus_p)?;
    Ok(-h.ground_energy_value() / g.edges.len() as f64)
}

fn require_two_qubits(rho: &DensityOp) -> Result<(), SpinError> {
    if rho.dims() != [2, 2] {
        return Err(SpinError::NotTwoQubits);
    }
    Ok(())
}

/// Wootters concurrence: `max{0, l1 - l2 - l3 - l4}` with `l_i` the
/// decreasing square roots of the eigenvalues of `rho * rho_tilde`,
/// computed through the Hermitian form `sqrt(rho) rho_tilde sqrt(rho)`.
pub fn concurrence_wootters(rho: &DensityOp) -> Result<f64, SpinError> {
    require_two_qubits(rho)?;
    let m = rho.matrix();

    // rho_tilde = (sy ⊗ sy) conj(rho) (sy ⊗ sy). In the computational
    // basis (sy ⊗ sy)[i, j] is the anti-diagonal with signs -, +, +, -.
    let yy_sign = [-1.0, 1.0, 1.0, -1.0];
    let tilde = Mat::from_fn(4, 4, |i, j| {
        let v = m[(3 - i, 3 - j)].conj();
        v * Complex64::new(yy_sign[i] * yy_sign[j], 0.0)
    });

    let evd = m.self_adjoint_eigen(Side::Lower).expect("state eigendecomposition converges");
    let u = evd.U();
    let sqrt_rho = {
        let mut s: CMat = Mat::zeros(4, 4);
        for k in 0..4 {
            let lam = evd.S()[k].re.max(0.0).sqrt();
            for i in 0..4 {
                for j in 0..4 {
                    s[(i, j)] += u[(i, k)] * u[(j, k)].conj() * Complex64::new(lam, 0.0);
                }
            }
        }
        s
    };
    let inner = &sqrt_rho * &tilde * &sqrt_rho;
    let mut lams: Vec<f64> = inner
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("hermitian eigendecomposition converges")
        .into_iter()
        .map(|v: f64| v.max(0.0).sqrt())
        .collect();
    lams.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((lams[0] - lams[1] - lams[2] - lams[3]).max(0.0))
}

/// `exp(M)` for traceless complex 2x2 `M` via `M² = (a² + bc) 1`.
fn exp_traceless(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 4] {
    let mu2 = a * a + b * c;
    let mu = mu2.sqrt();
    let (ch, shc) = if mu.norm() < 1e-8 {
        // cosh mu ~ 1 + mu²/2, sinh(mu)/mu ~ 1 + mu²/6.
        (
            Complex64::new(1.0, 0.0) + mu2 * Complex64::new(0.5, 0.0),
            Complex64::new(1.0, 0.0) + mu2 * Complex64::new(1.0 / 6.0, 0.0),
        )
    } else {
        (mu.cosh(), mu.sinh() / mu)
    };
    [ch + shc * a, shc * b, shc * c, ch - shc * a]
}

/// `Re tr[rho (X ⊗ X† F)]` for the unit-determinant `X` parametrized by
/// six real coordinates of a traceless matrix exponent.
fn flip_functional(rho: &CMat, theta: &[f64]) -> f64 {
    let a = Complex64::new(theta[0], theta[1]);
    let b = Complex64::new(theta[2], theta[3]);
    let c = Complex64::new(theta[4], theta[5]);
    let x = exp_traceless(a, b, c);
    let xm = |i: usize, j: usize| x[i * 2 + j];
    // (X ⊗ X† F)[(k,l),(i,j)] = X[k,j] conj(X[i,l]).
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    acc += rho[(2 * i + j, 2 * k + l)] * xm(k, j) * xm(i, l).conj();
                }
            }
        }
    }
    acc.re
}

/// Multi-start local descent: Polak-Ribière conjugate directions with
/// Armijo backtracking on central-difference gradients. The nonconvex
/// landscapes here have long shallow valleys where plain steepest descent
/// crawls.
fn descend(
    f: &dyn Fn(&[f64]) -> f64,
    mut x: Vec<f64>,
    max_iters: usize,
) -> (Vec<f64>, f64, bool) {
    let dim = x.len();
    let mut fx = f(&x);
    let mut step = 0.5;
    let mut converged = false;
    let mut grad_prev: Option<Vec<f64>> = None;
    let mut dir = vec![0.0; dim];
    // Convergence by stall: improvement over a trailing window.
    let mut window_start = fx;
    for iter in 0..max_iters {
        let mut grad = vec![0.0; dim];
        let mut gnorm2 = 0.0;
        for d in 0..dim {
            let keep = x[d];
            x[d] = keep + GRAD_STEP;
            let fp = f(&x);
            x[d] = keep - GRAD_STEP;
            let fm = f(&x);
            x[d] = keep;
            grad[d] = (fp - fm) / (2.0 * GRAD_STEP);
            gnorm2 += grad[d] * grad[d];
        }
        if gnorm2.sqrt() < 1e-7 {
            converged = true;
            break;
        }
        // PR+ direction, reset to steepest when it stops descending.
        let beta = match &grad_prev {
            Some(gp) => {
                let num: f64 = grad.iter().zip(gp).map(|(g, p)| g * (g - p)).sum();
                let den: f64 = gp.iter().map(|p| p * p).sum();
                (num / den).max(0.0)
            }
            None => 0.0,
        };
        let mut slope = 0.0;
        for d in 0..dim {
            dir[d] = -grad[d] + beta * dir[d];
            slope += dir[d] * grad[d];
        }
        if slope >= 0.0 {
            for d in 0..dim {
                dir[d] = -grad[d];
            }
            slope = -gnorm2;
        }
        grad_prev = Some(grad);

        step = f64::min(step * 4.0, 2.0);
        let mut accepted = false;
        while step > 1e-14 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let ft = f(&trial);
            if ft < fx + 1e-4 * step * slope {
                x = trial;
                fx = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent at numerical resolution.
            converged = true;
            break;
        }
        if iter % 20 == 19 {
            if window_start - fx < 1e-10 {
                converged = true;
                break;
            }
            window_start = fx;
        }
    }
    (x, fx, converged)
}

/// Variational concurrence: minimize `Re tr[rho (X ⊗ X† F)]` over
/// unit-determinant `X` by multi-start descent; returns `max{0, -min}`.
///
/// Agrees with [`concurrence_wootters`] within 1e-4; reports the best value
/// found if no restart converges.
pub fn concurrence_variational(
    rho: &DensityOp,
    restarts: usize,
    seed: u64,
) -> Result<f64, SpinError> {
    require_two_qubits(rho)?;
    let mat = rho.matrix().clone();
    let objective = move |theta: &[f64]| flip_functional(&mat, theta);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut any_converged = false;
    for r in 0..restarts.max(1) {
        let x0: Vec<f64> = if r == 0 {
            vec![0.0; 6]
        } else {
            (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let (_, fx, converged) = descend(&objective, x0, 400);
        any_converged |= converged;
        best = best.min(fx);
    }
    // A positive minimum clamps to zero concurrence; only a still-moving
    // negative minimum is an unreliable answer.
    if !any_converged && best <= 1e-6 {
        return Err(SpinError::NonConvergence { best: (-best).max(0.0) });
    }
    Ok((-best).max(0.0))
}

/// Entanglement of formation (ebits) from a two-qubit concurrence.
pub fn eof_from_concurrence(c: f64) -> Result<f64, SpinError> {
    if !(-1e-9..=1.0 + 1e-9).contains(&c) {
        return Err(SpinError::OutOfRange(c));
    }
    let c = c.clamp(0.0, 1.0);
    let x = (1.0 + (1.0 - c * c).sqrt()) / 2.0;
    Ok(binary_entropy(x))
}

fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Maximal pairwise entanglement in an N-qubit permutation-invariant
/// cluster: concurrence `2/N` converted to ebits, for N = 2..=n_max.
pub fn qubit_cluster_curve(n_max: usize) -> Vec<(usize, f64)> {
    (2..=n_max)
        .map(|n| {
            let c = 2.0 / n as f64;
            (n, eof_from_concurrence(c).expect("2/N is in range"))
        })
        .collect()
}

/// Numerically maximize the pairwise concurrence over pure symmetric
/// (Dicke-superposition) states of `n` qubits by multi-start ascent.
/// The accepted optimum is `2/n`.
pub fn max_symmetric_pair_concurrence(n: usize, restarts: usize, seed: u64) -> f64 {
    assert!((2..=8).contains(&n), "intended for small clusters");
    let dicke = dicke_basis(n);
    let dim = 2 * (n + 1);
    let objective = move |theta: &[f64]| -> f64 {
        let amps: Vec<Complex64> = (0..=n)
            .map(|k| Complex64::new(theta[2 * k], theta[2 * k + 1]))
            .collect();
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm2 < 1e-12 {
            return 0.0;
        }
        let mut state = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (k, col) in dicke.iter().enumerate() {
            for &(idx, v) in col {
                state[idx] += amps[k] * Complex64::new(v / norm2.sqrt(), 0.0);
            }
        }
        let rho = DensityOp::from_pure(vec![2; n], &state).expect("normalized symmetric state");
        let pair = quantum::partial_trace(&rho, &[0, 1]).expect("two-qubit reduction");
        -concurrence_wootters(&pair).expect("pair state is two qubits")
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for r in 0..restarts.max(1) {
        let x0: Vec<f64> = if r == 0 {
            // W state: Dicke weight k = 1.
            let mut x = vec![0.0; dim];
            x[2] = 1.0;
            x
        } else {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let (_, fx, _) = descend(&objective, x0, 150);
        best = best.min(fx);
    }
    -best
}

/// Computational-basis support of each Dicke state `|D^n_k>`:
/// `(index, amplitude)` pairs.
fn dicke_basis(n: usize) -> Vec<Vec<(usize, f64)>> {
    let mut cols = vec![Vec::new(); n + 1];
    for idx in 0..1usize << n {
        cols[idx.count_ones() as usize].push(idx);
    }
    cols.into_iter()
        .map(|indices| {
            let amp = 1.0 / (indices.len() as f64).sqrt();
            indices.into_iter().map(|i| (i, amp)).collect()
        })
        .collect()
}

/// Least-squares fit of `f(N) = f_inf + a / N²` through the given points,
/// returning the extrapolated `f_inf`.
pub fn extrapolate_inverse_square(points: &[(usize, f64)]) -> f64 {
    // Normal equations for the basis {1, 1/N²}.
    let (mut s11, mut s1x, mut sxx, mut s1y, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(n, f) in points {
        let x = 1.0 / (n * n) as f64;
        s11 += 1.0;
        s1x += x;
        sxx += x * x;
        s1y += f;
        sxy += x * f;
    }
    let det = s11 * sxx - s1x * s1x;
    (sxx * s1y - s1x * sxy) / det
}
