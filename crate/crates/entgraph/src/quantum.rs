//! Small-dimension quantum states and measurements: Born-rule pair tables,
//! partial trace, permutation twirling, and the joint distributions carried
//! by symmetric-extension states.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{DistTable, ObservableDecl, ProbError};

/// Dense complex matrix used throughout the quantum layer.
pub type CMat = Mat<Complex64>;

/// Total Hilbert-space dimension cap (2^14).
pub const DIM_CAP: usize = 1 << 14;

/// Hard cap on enumerated permutation groups.
pub const GROUP_CAP: usize = 1_000_000;

/// Tolerance for hermiticity, trace and positivity of ingested operators.
const OP_TOL: f64 = 1e-10;

/// Tolerance for verifying symmetry of extension states (twirled inputs
/// carry accumulated round-off, so this is looser than [`OP_TOL`]).
const SYM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("matrix side {side} does not match factor dimensions (product {product})")]
    ShapeMismatch { side: usize, product: usize },
    #[error("total dimension {0} exceeds the cap {DIM_CAP}")]
    DimCap(usize),
    #[error("operator is not Hermitian (residual {0:.2e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("operator has eigenvalue {0:.2e} below -1e-10")]
    NotPositive(f64),
    #[error("effects do not sum to the identity (residual {0:.2e})")]
    IncompleteEffects(f64),
    #[error("invalid factor index {0}")]
    InvalidFactor(usize),
    #[error("factor permutation is malformed or mismatches dimensions")]
    BadPermutation,
    #[error("permutation group exceeds {GROUP_CAP} elements")]
    GroupTooLarge,
    #[error("extension state is not symmetric (residual {0:.2e})")]
    AsymmetricState(f64),
    #[error("dimension mismatch between state and measurement")]
    DimensionMismatch,
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub(crate) fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub(crate) fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub(crate) fn hermitian_residual(m: &CMat) -> f64 {
    let mut res = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            res = res.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    res
}

pub(crate) fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).fold(czero(), |s, v| s + v)
}

/// `tr[rho * op]` without forming the product matrix.
pub(crate) fn trace_product(rho: &CMat, op: &CMat) -> Complex64 {
    let n = rho.nrows();
    let mut acc = czero();
    for r in 0..n {
        for c in 0..n {
            acc += rho[(r, c)] * op[(c, r)];
        }
    }
    acc
}

fn sup_norm_diff(a: &CMat, b: &CMat) -> f64 {
    let mut res = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            res = res.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    res
}

/// Density operator on a tensor product of finite factors.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawDensityOp", into = "RawDensityOp")]
pub struct DensityOp {
    dims: Vec<usize>,
    matrix: CMat,
}

#[derive(Serialize, Deserialize)]
struct RawDensityOp {
    dims: Vec<usize>,
    /// Row-major entries, interleaved real/imaginary parts.
    entries: Vec<f64>,
}

impl TryFrom<RawDensityOp> for DensityOp {
    type Error = QuantumError;
    fn try_from(raw: RawDensityOp) -> Result<Self, QuantumError> {
        let side = raw.dims.iter().product::<usize>();
        if raw.entries.len() != 2 * side * side {
            return Err(QuantumError::ShapeMismatch { side, product: raw.entries.len() / 2 });
        }
        let m = Mat::from_fn(side, side, |i, j| {
            let base = 2 * (i * side + j);
            Complex64::new(raw.entries[base], raw.entries[base + 1])
        });
        DensityOp::new(raw.dims, m)
    }
}

impl From<DensityOp> for RawDensityOp {
    fn from(op: DensityOp) -> Self {
        let side = op.side();
        let mut entries = Vec::with_capacity(2 * side * side);
        for i in 0..side {
            for j in 0..side {
                entries.push(op.matrix[(i, j)].re);
                entries.push(op.matrix[(i, j)].im);
            }
        }
        RawDensityOp { dims: op.dims, entries }
    }
}

impl DensityOp {
    /// Validate hermiticity, unit trace and positivity within 1e-10.
    pub fn new(dims: Vec<usize>, matrix: CMat) -> Result<Self, QuantumError> {
        let product: usize = dims.iter().product();
        if product > DIM_CAP {
            return Err(QuantumError::DimCap(product));
        }
        if matrix.nrows() != product || matrix.ncols() != product {
            return Err(QuantumError::ShapeMismatch { side: matrix.nrows(), product });
        }
        let herm = hermitian_residual(&matrix);
        if herm > OP_TOL {
            return Err(QuantumError::NotHermitian(herm));
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > OP_TOL || tr.im.abs() > OP_TOL {
            return Err(QuantumError::BadTrace(tr.re));
        }
        let eigs = matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("hermitian eigendecomposition converges");
        if let Some(&min) = eigs.first() {
            if min < -OP_TOL {
                return Err(QuantumError::NotPositive(min));
            }
        }
        Ok(Self { dims, matrix })
    }

    /// Rank-one state from an unnormalized vector.
    pub fn from_pure(dims: Vec<usize>, vector: &[Complex64]) -> Result<Self, QuantumError> {
        let product: usize = dims.iter().product();
        if vector.len() != product {
            return Err(QuantumError::ShapeMismatch { side: vector.len(), product });
        }
        let norm: f64 = vector.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let m = Mat::from_fn(product, product, |i, j| {
            vector[i] * vector[j].conj() / (norm * norm)
        });
        Self::new(dims, m)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Positive-operator-valued measure with labelled outcomes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawPovm", into = "RawPovm")]
pub struct Povm {
    effects: Vec<CMat>,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawPovm {
    /// One entry per effect: row-major interleaved real/imaginary parts.
    effects: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl TryFrom<RawPovm> for Povm {
    type Error = QuantumError;
    fn try_from(raw: RawPovm) -> Result<Self, QuantumError> {
        let mut effects = Vec::with_capacity(raw.effects.len());
        for e in &raw.effects {
            let side = ((e.len() / 2) as f64).sqrt().round() as usize;
            if 2 * side * side != e.len() {
                return Err(QuantumError::ShapeMismatch { side, product: e.len() / 2 });
            }
            effects.push(Mat::from_fn(side, side, |i, j| {
                let base = 2 * (i * side + j);
                Complex64::new(e[base], e[base + 1])
            }));
        }
        Povm::new(effects, raw.labels)
    }
}

impl From<Povm> for RawPovm {
    fn from(p: Povm) -> Self {
        let effects = p
            .effects
            .iter()
            .map(|m| {
                let side = m.nrows();
                let mut entries = Vec::with_capacity(2 * side * side);
                for i in 0..side {
                    for j in 0..side {
                        entries.push(m[(i, j)].re);
                        entries.push(m[(i, j)].im);
                    }
                }
                entries
            })
            .collect();
        RawPovm { effects, labels: p.labels }
    }
}

impl Povm {
    /// Validate each effect PSD and completeness within 1e-10.
    pub fn new(effects: Vec<CMat>, labels: Vec<String>) -> Result<Self, QuantumError> {
        let side = effects.first().map(|e| e.nrows()).unwrap_or(0);
        if side == 0 {
            return Err(QuantumError::ShapeMismatch { side: 0, product: 0 });
        }
        let mut sum: CMat = Mat::zeros(side, side);
        for e in &effects {
            if e.nrows() != side || e.ncols() != side {
                return Err(QuantumError::ShapeMismatch { side: e.nrows(), product: side });
            }
            let herm = hermitian_residual(e);
            if herm > OP_TOL {
                return Err(QuantumError::NotHermitian(herm));
            }
            let eigs = e
                .self_adjoint_eigenvalues(Side::Lower)
                .expect("hermitian eigendecomposition converges");
            if let Some(&min) = eigs.first() {
                if min < -OP_TOL {
                    return Err(QuantumError::NotPositive(min));
                }
            }
            sum += e;
        }
        let mut residual = 0.0f64;
        for i in 0..side {
            for j in 0..side {
                let want = if i == j { 1.0 } else { 0.0 };
                residual = residual.max((sum[(i, j)] - Complex64::new(want, 0.0)).norm());
            }
        }
        if residual > OP_TOL {
            return Err(QuantumError::IncompleteEffects(residual));
        }
        let labels = if labels.is_empty() {
            (0..effects.len()).map(|i| i.to_string()).collect()
        } else if labels.len() == effects.len() {
            labels
        } else {
            return Err(QuantumError::ShapeMismatch { side: labels.len(), product: effects.len() });
        };
        Ok(Self { effects, labels })
    }

    /// Two-outcome projective measurement along a Bloch direction in the
    /// x-z plane at the given angle.
    pub fn qubit_projective(angle: f64) -> Povm {
        let (s, c) = angle.sin_cos();
        let plus = Mat::from_fn(2, 2, |i, j| {
            let v = match (i, j) {
                (0, 0) => 1.0 + c,
                (1, 1) => 1.0 - c,
                _ => s,
            };
            Complex64::new(0.5 * v, 0.0)
        });
        let minus = Mat::from_fn(2, 2, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            Complex64::new(id, 0.0) - plus[(i, j)]
        });
        Povm::new(vec![plus, minus], vec!["+".into(), "-".into()]).expect("projectors form a POVM")
    }

    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn side(&self) -> usize {
        self.effects[0].nrows()
    }
}

fn factor_strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Conjugate `m` by the unitary that sends factor `k` to slot `perm[k]`.
/// Requires `dims[perm[k]] == dims[k]` so the layout is preserved.
pub(crate) fn permute_factors(
    m: &CMat,
    dims: &[usize],
    perm: &[usize],
) -> Result<CMat, QuantumError> {
    let n = dims.len();
    if perm.len() != n {
        return Err(QuantumError::BadPermutation);
    }
    let mut seen = vec![false; n];
    for (k, &p) in perm.iter().enumerate() {
        if p >= n || seen[p] {
            return Err(QuantumError::BadPermutation);
        }
        seen[p] = true;
        if dims[p] != dims[k] {
            return Err(QuantumError::BadPermutation);
        }
    }
    let strides = factor_strides(dims);
    let side = m.nrows();
    // Flat index map: digit k of the source becomes digit perm[k].
    let mut map = vec![0usize; side];
    for (idx, slot) in map.iter_mut().enumerate() {
        let mut out = 0usize;
        for k in 0..n {
            let digit = idx / strides[k] % dims[k];
            out += digit * strides[perm[k]];
        }
        *slot = out;
    }
    let mut out: CMat = Mat::zeros(side, side);
    for r in 0..side {
        for c in 0..side {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Standard reduction onto the kept factors, in the order given.
pub fn partial_trace(rho: &DensityOp, keep: &[usize]) -> Result<DensityOp, QuantumError> {
    let n = rho.dims.len();
    if keep.is_empty() {
        return Err(QuantumError::InvalidFactor(usize::MAX));
    }
    let mut seen = vec![false; n];
    for &k in keep {
        if k >= n || seen[k] {
            return Err(QuantumError::InvalidFactor(k));
        }
        seen[k] = true;
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();

    let strides = factor_strides(&rho.dims);
    let keep_dims: Vec<usize> = sorted.iter().map(|&k| rho.dims[k]).collect();
    let keep_strides = factor_strides(&keep_dims);
    let env: Vec<usize> = (0..n).filter(|k| !sorted.contains(k)).collect();
    let out_side: usize = keep_dims.iter().product();
    let env_size: usize = env.iter().map(|&k| rho.dims[k]).product();

    let mut out: CMat = Mat::zeros(out_side, out_side);
    for i in 0..out_side {
        for j in 0..out_side {
            // Base indices with environment digits zero.
            let mut bi = 0usize;
            let mut bj = 0usize;
            for (t, &k) in sorted.iter().enumerate() {
                bi += (i / keep_strides[t] % keep_dims[t]) * strides[k];
                bj += (j / keep_strides[t] % keep_dims[t]) * strides[k];
            }
            let mut acc = czero();
            for e in 0..env_size {
                let mut off = 0usize;
                let mut rem = e;
                for &k in env.iter().rev() {
                    off += (rem % rho.dims[k]) * strides[k];
                    rem /= rho.dims[k];
                }
                acc += rho.matrix[(bi + off, bj + off)];
            }
            out[(i, j)] = acc;
        }
    }

    if sorted != keep {
        // Reorder the kept factors to the requested order: factor at
        // sorted-position t must move to the slot where `keep` lists it.
        let perm: Vec<usize> = sorted
            .iter()
            .map(|k| keep.iter().position(|x| x == k).expect("same set"))
            .collect();
        let permuted = permute_factors(&out, &keep_dims, &perm)?;
        let dims: Vec<usize> = keep.iter().map(|&k| rho.dims[k]).collect();
        return DensityOp::new(dims, permuted);
    }
    DensityOp::new(keep_dims, out)
}

/// Breadth-first closure of a generating set of factor permutations.
fn close_group(generators: &[Vec<usize>], n: usize) -> Result<Vec<Vec<usize>>, QuantumError> {
    use std::collections::BTreeSet;
    let identity: Vec<usize> = (0..n).collect();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(identity.clone());
    let mut queue = vec![identity];
    let mut head = 0;
    while head < queue.len() {
        let cur = queue[head].clone();
        head += 1;
        for g in generators {
            // Compose: first cur, then g.
            let composed: Vec<usize> = (0..n).map(|k| g[cur[k]]).collect();
            if seen.insert(composed.clone()) {
                if seen.len() > GROUP_CAP {
                    return Err(QuantumError::GroupTooLarge);
                }
                queue.push(composed);
            }
        }
    }
    Ok(queue)
}

/// Average a state over the group generated by the given factor
/// permutations. Idempotent; the output commutes with every generator.
pub fn twirl(rho: &DensityOp, generators: &[Vec<usize>]) -> Result<DensityOp, QuantumError> {
    let n = rho.dims.len();
    for g in generators {
        if g.len() != n {
            return Err(QuantumError::BadPermutation);
        }
    }
    let group = close_group(generators, n)?;
    let side = rho.side();
    let mut acc: CMat = Mat::zeros(side, side);
    for g in &group {
        acc += &permute_factors(&rho.matrix, &rho.dims, g)?;
    }
    let w = Complex64::new(1.0 / group.len() as f64, 0.0);
    let avg = Mat::from_fn(side, side, |i, j| acc[(i, j)] * w);
    DensityOp::new(rho.dims.clone(), avg)
}

/// Born-rule pair tables `P(a, b) = tr[rho (F_i(a) ⊗ G_j(b))]` for every
/// pair of one A-observable and one B-observable, in row-major (i, j)
/// order. Scope ids are `A{i+1}` and `B{j+1}`.
pub fn born_pairs(
    rho_ab: &DensityOp,
    a_povms: &[Povm],
    b_povms: &[Povm],
) -> Result<Vec<DistTable>, QuantumError> {
    if rho_ab.dims.len() != 2 {
        return Err(QuantumError::DimensionMismatch);
    }
    let (da, db) = (rho_ab.dims[0], rho_ab.dims[1]);
    let mut tables = Vec::with_capacity(a_povms.len() * b_povms.len());
    for (i, fa) in a_povms.iter().enumerate() {
        if fa.side() != da {
            return Err(QuantumError::DimensionMismatch);
        }
        for (j, gb) in b_povms.iter().enumerate() {
            if gb.side() != db {
                return Err(QuantumError::DimensionMismatch);
            }
            let mut values = Vec::with_capacity(fa.outcomes() * gb.outcomes());
            for ea in fa.effects() {
                for eb in gb.effects() {
                    let op = kron(ea, eb);
                    values.push(trace_product(&rho_ab.matrix, &op).re);
                }
            }
            let scope = vec![
                ObservableDecl::new(format!("A{}", i + 1), fa.outcomes()),
                ObservableDecl::new(format!("B{}", j + 1), gb.outcomes()),
            ];
            tables.push(DistTable::new(scope, values)?);
        }
    }
    Ok(tables)
}

/// Joint distributions carried by a star-symmetric extension state on
/// `A ⊗ B^{⊗m}`: one table per A-observable over scope
/// `{A_i, B_1, ..., B_m}`, with entries
/// `tr[rho F_i(a) ⊗ G_1(b_1) ⊗ ... ⊗ G_m(b_m)]`.
///
/// All bipartite reductions onto `(A, B_j)` must agree within 1e-8.
pub fn star_extension_joint(
    rho: &DensityOp,
    f_povms: &[Povm],
    g_povms: &[Povm],
) -> Result<Vec<DistTable>, QuantumError> {
    let m = g_povms.len();
    if rho.dims.len() != m + 1 || m == 0 {
        return Err(QuantumError::DimensionMismatch);
    }
    let da = rho.dims[0];
    let db = rho.dims[1];
    if rho.dims[1..].iter().any(|&d| d != db) {
        return Err(QuantumError::DimensionMismatch);
    }
    for f in f_povms {
        if f.side() != da {
            return Err(QuantumError::DimensionMismatch);
        }
    }
    for g in g_povms {
        if g.side() != db {
            return Err(QuantumError::DimensionMismatch);
        }
    }

    // Verify the defining symmetry: all rho_{AB_j} equal.
    let reference = partial_trace(rho, &[0, 1])?;
    for j in 2..=m {
        let other = partial_trace(rho, &[0, j])?;
        let res = sup_norm_diff(reference.matrix(), other.matrix());
        if res > SYM_TOL {
            return Err(QuantumError::AsymmetricState(res));
        }
    }

    let mut tables = Vec::with_capacity(f_povms.len());
    for (i, f) in f_povms.iter().enumerate() {
        let mut scope = vec![ObservableDecl::new(format!("A{}", i + 1), f.outcomes())];
        for (j, g) in g_povms.iter().enumerate() {
            scope.push(ObservableDecl::new(format!("B{}", j + 1), g.outcomes()));
        }
        let len: usize = scope.iter().map(|o| o.alphabet_size).product();
        let mut values = Vec::with_capacity(len);
        let mut outcome = vec![0usize; m + 1];
        for idx in 0..len {
            let mut rem = idx;
            for slot in (0..=m).rev() {
                let k = scope[slot].alphabet_size;
                outcome[slot] = rem % k;
                rem /= k;
            }
            let mut op = f.effects()[outcome[0]].clone();
            for (j, g) in g_povms.iter().enumerate() {
                op = kron(&op, &g.effects()[outcome[j + 1]]);
            }
            values.push(trace_product(&rho.matrix, &op).re);
        }
        tables.push(DistTable::new(scope, values)?);
    }
    Ok(tables)
}

/// Joint distribution carried by a layered extension state: `n-1` layers of
/// `m` particles each plus one single particle, with `m` observables per
/// layer (one per copy) and one on the single site.
///
/// Scope ids are `L{layer}.{copy}` followed by `S`; dropping all but one
/// observable per layer reproduces the n-partite Born table of the reduced
/// state, independent of which copies are dropped.
pub fn layered_extension_joint(
    rho: &DensityOp,
    layer_povms: &[Vec<Povm>],
    single_povm: &Povm,
) -> Result<DistTable, QuantumError> {
    let layers = layer_povms.len();
    if layers == 0 {
        return Err(QuantumError::DimensionMismatch);
    }
    let m = layer_povms[0].len();
    if m == 0 || layer_povms.iter().any(|l| l.len() != m) {
        return Err(QuantumError::DimensionMismatch);
    }
    if rho.dims.len() != layers * m + 1 {
        return Err(QuantumError::DimensionMismatch);
    }
    for (i, povms) in layer_povms.iter().enumerate() {
        let d = rho.dims[i * m];
        if rho.dims[i * m..(i + 1) * m].iter().any(|&x| x != d) {
            return Err(QuantumError::DimensionMismatch);
        }
        if povms.iter().any(|p| p.side() != d) {
            return Err(QuantumError::DimensionMismatch);
        }
    }
    if single_povm.side() != rho.dims[layers * m] {
        return Err(QuantumError::DimensionMismatch);
    }

    // Verify permutation symmetry within each layer via the twirl residual.
    let n_factors = rho.dims.len();
    let mut generators = Vec::new();
    for layer in 0..layers {
        for k in 0..m - 1 {
            let mut perm: Vec<usize> = (0..n_factors).collect();
            perm.swap(layer * m + k, layer * m + k + 1);
            generators.push(perm);
        }
    }
    if !generators.is_empty() {
        let symmetrized = twirl(rho, &generators)?;
        let res = sup_norm_diff(rho.matrix(), symmetrized.matrix());
        if res > SYM_TOL {
            return Err(QuantumError::AsymmetricState(res));
        }
    }

    let mut scope = Vec::with_capacity(layers * m + 1);
    for (i, povms) in layer_povms.iter().enumerate() {
        for (k, p) in povms.iter().enumerate() {
            scope.push(ObservableDecl::new(format!("L{}.{}", i + 1, k + 1), p.outcomes()));
        }
    }
    scope.push(ObservableDecl::new("S", single_povm.outcomes()));

    let len: usize = scope.iter().map(|o| o.alphabet_size).product();
    if len > crate::prob::DENSE_CAP {
        return Err(QuantumError::DimCap(len));
    }
    let mut values = Vec::with_capacity(len);
    let mut outcome = vec![0usize; scope.len()];
    for idx in 0..len {
        let mut rem = idx;
        for slot in (0..scope.len()).rev() {
            let k = scope[slot].alphabet_size;
            outcome[slot] = rem % k;
            rem /= k;
        }
        let mut op: Option<CMat> = None;
        for (i, povms) in layer_povms.iter().enumerate() {
            for (k, p) in povms.iter().enumerate() {
                let e = &p.effects()[outcome[i * m + k]];
                op = Some(match op {
                    None => e.clone(),
                    Some(acc) => kron(&acc, e),
                });
            }
        }
        let e = &single_povm.effects()[outcome[scope.len() - 1]];
        let op = match op {
            None => e.clone(),
            Some(acc) => kron(&acc, e),
        };
        values.push(trace_product(&rho.matrix, &op).re);
    }
    Ok(DistTable::new(scope, values)?)
}

/// Random density operator (mixture of a few random pure states).
pub fn random_density(dims: &[usize], rng: &mut impl Rng) -> DensityOp {
    let side: usize = dims.iter().product();
    let mixtures = 3.min(side);
    let mut m: CMat = Mat::zeros(side, side);
    let mut weights = vec![0.0; mixtures];
    let total: f64 = {
        for w in &mut weights {
            *w = rng.gen_range(0.1..1.0);
        }
        weights.iter().sum()
    };
    for &w in &weights {
        let v: Vec<Complex64> = (0..side)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let scale = w / (total * norm * norm);
        for i in 0..side {
            for j in 0..side {
                m[(i, j)] += v[i] * v[j].conj() * Complex64::new(scale, 0.0);
            }
        }
    }
    DensityOp::new(dims.to_vec(), m).expect("random mixture is a valid state")
}

/// Random pure state.
pub fn random_pure(dims: &[usize], rng: &mut impl Rng) -> DensityOp {
    let side: usize = dims.iter().product();
    let v: Vec<Complex64> = (0..side)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    DensityOp::from_pure(dims.to_vec(), &v).expect("random vector normalizes")
}

/// Random two-outcome POVM `{E, 1 - E}` with `0 <= E <= 1`.
pub fn random_dichotomic_povm(side: usize, rng: &mut impl Rng) -> Povm {
    // E = V diag(u) V* with u in [0, 1] and V the eigenbasis of a random
    // Hermitian matrix.
    let h = Mat::from_fn(side, side, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let herm = Mat::from_fn(side, side, |i, j| (h[(i, j)] + h[(j, i)].conj()) * Complex64::new(0.5, 0.0));
    let evd = herm
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigendecomposition converges");
    let v = evd.U();
    let u: Vec<f64> = (0..side).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut e: CMat = Mat::zeros(side, side);
    for k in 0..side {
        for i in 0..side {
            for j in 0..side {
                e[(i, j)] += v[(i, k)] * v[(j, k)].conj() * Complex64::new(u[k], 0.0);
            }
        }
    }
    let one_minus = Mat::from_fn(side, side, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - e[(i, j)]
    });
    Povm::new(vec![e, one_minus], vec!["0".into(), "1".into()]).expect("E and 1-E form a POVM")
}

/// Two-qubit singlet state `(|01> - |10>)/sqrt(2)`.
pub fn singlet() -> DensityOp {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityOp::from_pure(
        vec![2, 2],
        &[czero(), Complex64::new(s, 0.0), Complex64::new(-s, 0.0), czero()],
    )
    .expect("singlet is a valid state")
}

/// Maximally mixed state on the given factors.
pub fn maximally_mixed(dims: &[usize]) -> DensityOp {
    let side: usize = dims.iter().product();
    let m = Mat::from_fn(side, side, |i, j| {
        if i == j {
            Complex64::new(1.0 / side as f64, 0.0)
        } else {
            czero()
        }
    });
    DensityOp::new(dims.to_vec(), m).expect("maximally mixed state is valid")
}
