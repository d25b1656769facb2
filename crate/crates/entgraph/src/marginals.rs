//! Joint-distribution existence for pair-marginal scenarios.
//!
//! A [`MarginalScenario`] fixes pair distributions on the edges of a graph
//! of observables. Trees always extend to a joint distribution via a closed
//! form ([`tree_extend`]); general graphs are decided by linear feasibility
//! over deterministic assignments ([`joint_feasible`]), whose dual is a
//! Bell-type inequality witness. Joints and local-hidden-variable models
//! convert into each other losslessly ([`lhv_from_joint`],
//! [`joint_from_lhv`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{self, DistTable, ObservableDecl, ProbError};
use crate::simplex::{self, DenseMat, PhaseOne};

/// Compatibility tolerance for overlapping marginals at construction.
pub const COMPAT_TOL: f64 = 1e-9;

/// Vertex-marginal values at or below this are treated as exact zeros in
/// the tree-extension closed form.
const ZERO_EPS: f64 = 1e-12;

/// Memory guard for the feasibility tableau (entries of f64).
const LP_ENTRY_CAP: usize = 1 << 26;

#[derive(Debug, Error)]
pub enum MarginalsError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("unknown observable id `{0}` in edge list")]
    UnknownObservable(String),
    #[error("self-loop on observable `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(String, String),
    #[error("edge ({i}, {j}) table scope does not match its endpoints")]
    EdgeScopeMismatch { i: String, j: String },
    #[error("overlapping marginals of edges ({0}, {1}) and ({2}, {3}) disagree beyond {COMPAT_TOL}")]
    Incompatible(String, String, String, String),
    #[error("scenario graph contains a loop through ({0}, {1})")]
    CycleDetected(String, String),
    #[error("scenario too large for dense feasibility: {0} tableau entries")]
    ScenarioTooLarge(usize),
    #[error("hidden-variable ensemble weights sum to {0}, expected 1")]
    BadWeights(f64),
    #[error("response row for `{id}` sums to {sum}, expected 1")]
    BadResponseRow { id: String, sum: f64 },
    #[error("negative weight or response entry")]
    NegativeEnsemble,
    #[error("missing response row for observable `{0}`")]
    MissingResponse(String),
    #[error("partition does not cover the joint scope exactly")]
    BadPartition,
    #[error("tree extension degenerated to zero mass")]
    DegenerateExtension,
}

/// One fixed pair distribution on the edge (i, j).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub i: String,
    pub j: String,
    pub table: DistTable,
}

/// A graph of observables with fixed pair distributions on its edges.
///
/// Construction validates simplicity of the graph, scope/alphabet agreement
/// of every edge table, and pairwise compatibility of all overlapping
/// marginals within [`COMPAT_TOL`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct MarginalScenario {
    observables: Vec<ObservableDecl>,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct RawScenario {
    observables: Vec<ObservableDecl>,
    edges: Vec<Edge>,
}

impl TryFrom<RawScenario> for MarginalScenario {
    type Error = MarginalsError;
    fn try_from(raw: RawScenario) -> Result<Self, MarginalsError> {
        MarginalScenario::new(raw.observables, raw.edges)
    }
}

impl From<MarginalScenario> for RawScenario {
    fn from(sc: MarginalScenario) -> Self {
        RawScenario { observables: sc.observables, edges: sc.edges }
    }
}

impl MarginalScenario {
    pub fn new(observables: Vec<ObservableDecl>, edges: Vec<Edge>) -> Result<Self, MarginalsError> {
        // Unique ids with positive alphabets.
        prob::scope_len(&observables)?;
        for (i, a) in observables.iter().enumerate() {
            if observables[..i].iter().any(|b| b.id == a.id) {
                return Err(ProbError::DuplicateObservable(a.id.clone()).into());
            }
        }
        let find = |id: &str| observables.iter().find(|o| o.id == id);

        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.i == e.j {
                return Err(MarginalsError::SelfLoop(e.i));
            }
            let oi = find(&e.i).ok_or_else(|| MarginalsError::UnknownObservable(e.i.clone()))?;
            let oj = find(&e.j).ok_or_else(|| MarginalsError::UnknownObservable(e.j.clone()))?;
            if normalized.iter().any(|p: &Edge| {
                (p.i == e.i && p.j == e.j) || (p.i == e.j && p.j == e.i)
            }) {
                return Err(MarginalsError::DuplicateEdge(e.i, e.j));
            }
            // Accept the table with its scope in either endpoint order.
            let ids: Vec<&str> = e.table.scope().iter().map(|o| o.id.as_str()).collect();
            let table = if ids == [e.i.as_str(), e.j.as_str()] {
                e.table
            } else if ids == [e.j.as_str(), e.i.as_str()] {
                e.table.reordered(&[&e.i, &e.j])?
            } else {
                return Err(MarginalsError::EdgeScopeMismatch { i: e.i, j: e.j });
            };
            let scope = table.scope();
            if scope[0].alphabet_size != oi.alphabet_size || scope[1].alphabet_size != oj.alphabet_size {
                return Err(MarginalsError::EdgeScopeMismatch { i: e.i, j: e.j });
            }
            normalized.push(Edge { i: e.i, j: e.j, table });
        }

        // Pairwise compatibility of overlapping marginals.
        for (a, ea) in normalized.iter().enumerate() {
            for eb in &normalized[a + 1..] {
                if !prob::compatible(&ea.table, &eb.table, COMPAT_TOL) {
                    return Err(MarginalsError::Incompatible(
                        ea.i.clone(),
                        ea.j.clone(),
                        eb.i.clone(),
                        eb.j.clone(),
                    ));
                }
            }
        }
        Ok(Self { observables, edges: normalized })
    }

    pub fn observables(&self) -> &[ObservableDecl] {
        &self.observables
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn position(&self, id: &str) -> usize {
        self.observables.iter().position(|o| o.id == id).expect("validated id")
    }
}

/// One coefficient table of a Bell-type witness, over the outcomes of the
/// edge (i, j), row-major with i slowest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessTerm {
    pub i: String,
    pub j: String,
    pub coeffs: Vec<f64>,
}

/// Outcome of the joint-distribution existence decision.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawWitness", into = "RawWitness")]
pub enum JointWitness {
    /// A joint distribution matching every edge marginal.
    Feasible { joint: DistTable },
    /// A Bell-type inequality separating the scenario from all joints:
    /// every deterministic assignment scores at most `bound`, while the
    /// scenario's edge tables score strictly more.
    Infeasible { witness: Vec<WitnessTerm>, bound: f64 },
}

#[derive(Serialize, Deserialize)]
struct RawWitness {
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint: Option<DistTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<WitnessTerm>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

impl TryFrom<RawWitness> for JointWitness {
    type Error = String;
    fn try_from(raw: RawWitness) -> Result<Self, String> {
        if raw.feasible {
            Ok(JointWitness::Feasible {
                joint: raw.joint.ok_or("feasible witness requires `joint`")?,
            })
        } else {
            Ok(JointWitness::Infeasible {
                witness: raw.witness.ok_or("infeasible witness requires `witness`")?,
                bound: raw.bound.ok_or("infeasible witness requires `bound`")?,
            })
        }
    }
}

impl From<JointWitness> for RawWitness {
    fn from(w: JointWitness) -> Self {
        match w {
            JointWitness::Feasible { joint } => RawWitness {
                feasible: true,
                joint: Some(joint),
                witness: None,
                bound: None,
            },
            JointWitness::Infeasible { witness, bound } => RawWitness {
                feasible: false,
                joint: None,
                witness: Some(witness),
                bound: Some(bound),
            },
        }
    }
}

/// Finite hidden-variable ensemble with per-observable response rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lambda {
    pub weight: f64,
    pub responses: BTreeMap<String, Vec<f64>>,
}

/// Mixture of factorized response functions over a finite hidden variable.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawLhv", into = "RawLhv")]
pub struct LhvModel {
    lambdas: Vec<Lambda>,
}

#[derive(Serialize, Deserialize)]
struct RawLhv {
    lambdas: Vec<Lambda>,
}

impl TryFrom<RawLhv> for LhvModel {
    type Error = MarginalsError;
    fn try_from(raw: RawLhv) -> Result<Self, MarginalsError> {
        LhvModel::new(raw.lambdas)
    }
}

impl From<LhvModel> for RawLhv {
    fn from(m: LhvModel) -> Self {
        RawLhv { lambdas: m.lambdas }
    }
}

impl LhvModel {
    pub fn new(lambdas: Vec<Lambda>) -> Result<Self, MarginalsError> {
        let mut total = 0.0;
        for l in &lambdas {
            if l.weight < 0.0 {
                return Err(MarginalsError::NegativeEnsemble);
            }
            total += l.weight;
            for (id, row) in &l.responses {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&v| v < 0.0) {
                    return Err(MarginalsError::NegativeEnsemble);
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(MarginalsError::BadResponseRow { id: id.clone(), sum });
                }
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(MarginalsError::BadWeights(total));
        }
        Ok(Self { lambdas })
    }

    pub fn lambdas(&self) -> &[Lambda] {
        &self.lambdas
    }
}

/// Closed-form joint distribution for an acyclic scenario.
///
/// The joint is the product of all edge tables times each vertex marginal
/// raised to one minus its degree, with zero vertex marginals annihilating
/// every assignment through them. Isolated observables enter as uniform
/// factors; disconnected components multiply, which is the same formula
/// evaluated globally.
pub fn tree_extend(sc: &MarginalScenario) -> Result<DistTable, MarginalsError> {
    let n = sc.observables.len();

    // Cycle check (union-find).
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for e in &sc.edges {
        let (a, b) = (sc.position(&e.i), sc.position(&e.j));
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra == rb {
            return Err(MarginalsError::CycleDetected(e.i.clone(), e.j.clone()));
        }
        parent[ra] = rb;
    }

    // Degrees and vertex marginals (from the first incident edge; all
    // incident edges agree within COMPAT_TOL by construction).
    let mut degree = vec![0usize; n];
    let mut marginal: Vec<Option<Vec<f64>>> = vec![None; n];
    for e in &sc.edges {
        for (id, pos) in [(&e.i, sc.position(&e.i)), (&e.j, sc.position(&e.j))] {
            degree[pos] += 1;
            if marginal[pos].is_none() {
                marginal[pos] = Some(e.table.marginalize(&[id])?.values().to_vec());
            }
        }
    }
    for (pos, m) in marginal.iter_mut().enumerate() {
        if m.is_none() {
            let k = sc.observables[pos].alphabet_size;
            *m = Some(vec![1.0 / k as f64; k]);
        }
    }

    let len = prob::scope_len(&sc.observables)?;
    let strides = prob::strides(&sc.observables);
    let edge_pos: Vec<(usize, usize)> = sc
        .edges
        .iter()
        .map(|e| (sc.position(&e.i), sc.position(&e.j)))
        .collect();

    let mut values = vec![0.0; len];
    let mut outcome = vec![0usize; n];
    let mut sum = 0.0;
    'assignments: for (idx, slot) in values.iter_mut().enumerate() {
        prob::decode(idx, &strides, &sc.observables, &mut outcome);
        let mut p = 1.0;
        for (e, &(a, b)) in sc.edges.iter().zip(&edge_pos) {
            p *= e.table.entry(&[outcome[a], outcome[b]]);
            if p == 0.0 {
                continue 'assignments;
            }
        }
        for v in 0..n {
            let m = marginal[v].as_ref().expect("filled above")[outcome[v]];
            match degree[v] {
                0 => p *= m,
                1 => {}
                d => {
                    if m <= ZERO_EPS {
                        continue 'assignments;
                    }
                    p /= m.powi(d as i32 - 1);
                }
            }
        }
        *slot = p;
        sum += p;
    }
    if sum < 0.5 {
        return Err(MarginalsError::DegenerateExtension);
    }
    for v in &mut values {
        *v /= sum;
    }
    Ok(DistTable::new(sc.observables.clone(), values)?)
}

/// Decide whether a joint distribution matching every edge marginal exists.
///
/// The feasibility problem is posed over weights on all deterministic
/// global assignments; a feasible basic solution is returned as the joint,
/// an infeasible one yields the phase-I dual, reported as a Bell-type
/// witness normalized so its maximal deterministic value is 1.
pub fn joint_feasible(sc: &MarginalScenario) -> Result<JointWitness, MarginalsError> {
    let cols = prob::scope_len(&sc.observables)?;
    let rows: usize = sc
        .edges
        .iter()
        .map(|e| e.table.len())
        .sum::<usize>()
        + 1;
    let entries = rows
        .checked_mul(cols + rows + 1)
        .ok_or(MarginalsError::ScenarioTooLarge(usize::MAX))?;
    if entries > LP_ENTRY_CAP {
        return Err(MarginalsError::ScenarioTooLarge(entries));
    }

    let strides = prob::strides(&sc.observables);
    let edge_pos: Vec<(usize, usize)> = sc
        .edges
        .iter()
        .map(|e| (sc.position(&e.i), sc.position(&e.j)))
        .collect();

    // Row layout: per edge a block of k_i * k_j rows (i slowest), then one
    // normalization row.
    let mut a = DenseMat::zeros(rows, cols);
    let mut b = vec![0.0; rows];
    let mut row_base = vec![0usize; sc.edges.len()];
    {
        let mut next = 0usize;
        for (e_idx, e) in sc.edges.iter().enumerate() {
            row_base[e_idx] = next;
            b[next..next + e.table.len()].copy_from_slice(e.table.values());
            next += e.table.len();
        }
        b[next] = 1.0;
    }
    let mut outcome = vec![0usize; sc.observables.len()];
    for d in 0..cols {
        prob::decode(d, &strides, &sc.observables, &mut outcome);
        for (e_idx, e) in sc.edges.iter().enumerate() {
            let (pi, pj) = edge_pos[e_idx];
            let kj = e.table.scope()[1].alphabet_size;
            let row = row_base[e_idx] + outcome[pi] * kj + outcome[pj];
            *a.at_mut(row, d) = 1.0;
        }
        *a.at_mut(rows - 1, d) = 1.0;
    }

    match simplex::phase_one(&a, &b) {
        PhaseOne::Feasible(mut x) => {
            let total: f64 = x.iter().sum();
            for v in &mut x {
                *v = (*v / total).max(0.0);
            }
            let joint = DistTable::new(sc.observables.clone(), x)?;
            Ok(JointWitness::Feasible { joint })
        }
        PhaseOne::Infeasible { y, residual } => {
            debug_assert!(residual > 0.0);
            Ok(build_witness(sc, &edge_pos, &row_base, &strides, &y))
        }
    }
}

/// Turn a Farkas dual into a normalized Bell-type witness.
fn build_witness(
    sc: &MarginalScenario,
    edge_pos: &[(usize, usize)],
    row_base: &[usize],
    strides: &[usize],
    y: &[f64],
) -> JointWitness {
    let mut coeffs: Vec<Vec<f64>> = sc
        .edges
        .iter()
        .enumerate()
        .map(|(e_idx, e)| y[row_base[e_idx]..row_base[e_idx] + e.table.len()].to_vec())
        .collect();

    let sup = coeffs
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    debug_assert!(sup > 0.0, "a Farkas dual cannot be supported on the normalization row alone");
    for c in coeffs.iter_mut().flatten() {
        *c /= sup;
    }

    let eval = |coeffs: &[Vec<f64>]| -> f64 {
        coeffs
            .iter()
            .zip(&sc.edges)
            .map(|(c, e)| c.iter().zip(e.table.values()).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    };
    let det_bound = |coeffs: &[Vec<f64>]| -> f64 {
        let cols = prob::scope_len(&sc.observables).expect("validated scope");
        let mut outcome = vec![0usize; sc.observables.len()];
        let mut best = f64::NEG_INFINITY;
        for d in 0..cols {
            prob::decode(d, strides, &sc.observables, &mut outcome);
            let mut v = 0.0;
            for (e_idx, e) in sc.edges.iter().enumerate() {
                let (pi, pj) = edge_pos[e_idx];
                let kj = e.table.scope()[1].alphabet_size;
                v += coeffs[e_idx][outcome[pi] * kj + outcome[pj]];
            }
            best = best.max(v);
        }
        best
    };

    // Rescale so the violation is comfortably above the 1e-7 verification
    // floor, then shift every edge block equally so the deterministic bound
    // lands at 1.
    let mut bound = det_bound(&coeffs);
    let violation = eval(&coeffs) - bound;
    if violation < 1e-6 {
        let lambda = 1e-6 / violation;
        for c in coeffs.iter_mut().flatten() {
            *c *= lambda;
        }
        bound *= lambda;
    }
    let shift = (1.0 - bound) / sc.edges.len() as f64;
    for c in coeffs.iter_mut().flatten() {
        *c += shift;
    }
    let bound = det_bound(&coeffs);

    let witness = sc
        .edges
        .iter()
        .zip(coeffs)
        .map(|(e, c)| WitnessTerm { i: e.i.clone(), j: e.j.clone(), coeffs: c })
        .collect();
    JointWitness::Infeasible { witness, bound }
}

/// Value of a witness on the scenario's edge tables, `Σ_e Σ_o c_e(o) P_e(o)`.
pub fn evaluate_witness(witness: &[WitnessTerm], sc: &MarginalScenario) -> f64 {
    let mut total = 0.0;
    for term in witness {
        let edge = sc
            .edges
            .iter()
            .find(|e| e.i == term.i && e.j == term.j)
            .expect("witness term refers to a scenario edge");
        total += term
            .coeffs
            .iter()
            .zip(edge.table.values())
            .map(|(c, p)| c * p)
            .sum::<f64>();
    }
    total
}

/// Maximal witness value over all deterministic assignments, by exhaustive
/// enumeration. This is the independent soundness check for Farkas duals.
pub fn deterministic_bound(witness: &[WitnessTerm], observables: &[ObservableDecl]) -> f64 {
    let cols = prob::scope_len(observables).expect("scope within cap");
    let strides = prob::strides(observables);
    let pos = |id: &str| observables.iter().position(|o| o.id == id).expect("known id");
    let terms: Vec<(usize, usize, usize, &[f64])> = witness
        .iter()
        .map(|t| {
            let pi = pos(&t.i);
            let pj = pos(&t.j);
            (pi, pj, observables[pj].alphabet_size, t.coeffs.as_slice())
        })
        .collect();
    let mut outcome = vec![0usize; observables.len()];
    let mut best = f64::NEG_INFINITY;
    for d in 0..cols {
        prob::decode(d, &strides, observables, &mut outcome);
        let v: f64 = terms
            .iter()
            .map(|&(pi, pj, kj, c)| c[outcome[pi] * kj + outcome[pj]])
            .sum();
        best = best.max(v);
    }
    best
}

/// Deterministic hidden-variable model read off a joint's support.
///
/// One lambda per support point with the joint probability as weight and
/// unit response rows selecting that point's outcomes. The `partition`
/// argument only fixes which observables play each side; it must cover the
/// scope exactly.
pub fn lhv_from_joint(
    joint: &DistTable,
    partition: (&[&str], &[&str]),
) -> Result<LhvModel, MarginalsError> {
    let (side_a, side_b) = partition;
    let mut seen = vec![false; joint.scope().len()];
    for id in side_a.iter().chain(side_b) {
        match joint.position(id) {
            Some(pos) if !seen[pos] => seen[pos] = true,
            _ => return Err(MarginalsError::BadPartition),
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(MarginalsError::BadPartition);
    }

    let strides = prob::strides(joint.scope());
    let mut outcome = vec![0usize; joint.scope().len()];
    let mut lambdas = Vec::new();
    for (idx, &p) in joint.values().iter().enumerate() {
        if p > 0.0 {
            prob::decode(idx, &strides, joint.scope(), &mut outcome);
            let responses = joint
                .scope()
                .iter()
                .enumerate()
                .map(|(i, obs)| {
                    let mut row = vec![0.0; obs.alphabet_size];
                    row[outcome[i]] = 1.0;
                    (obs.id.clone(), row)
                })
                .collect();
            lambdas.push(Lambda { weight: p, responses });
        }
    }
    LhvModel::new(lambdas)
}

/// Joint distribution generated by a hidden-variable model,
/// `P(a) = Σ_λ w(λ) Π_i χ_i(a_i, λ)`.
pub fn joint_from_lhv(model: &LhvModel, scope_ids: &[&str]) -> Result<DistTable, MarginalsError> {
    let mut scope = Vec::with_capacity(scope_ids.len());
    for &id in scope_ids {
        let mut k = None;
        for l in &model.lambdas {
            let row = l
                .responses
                .get(id)
                .ok_or_else(|| MarginalsError::MissingResponse(id.to_string()))?;
            match k {
                None => k = Some(row.len()),
                Some(prev) if prev != row.len() => {
                    return Err(MarginalsError::MissingResponse(id.to_string()))
                }
                _ => {}
            }
        }
        let k = k.ok_or_else(|| MarginalsError::MissingResponse(id.to_string()))?;
        scope.push(ObservableDecl::new(id, k));
    }
    let len = prob::scope_len(&scope)?;
    let strides = prob::strides(&scope);
    let mut values = vec![0.0; len];
    let mut outcome = vec![0usize; scope.len()];
    for (idx, slot) in values.iter_mut().enumerate() {
        prob::decode(idx, &strides, &scope, &mut outcome);
        let mut total = 0.0;
        for l in &model.lambdas {
            let mut p = l.weight;
            for (i, &id) in scope_ids.iter().enumerate() {
                p *= l.responses[id][outcome[i]];
                if p == 0.0 {
                    break;
                }
            }
            total += p;
        }
        *slot = total;
    }
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        return Err(MarginalsError::DegenerateExtension);
    }
    for v in &mut values {
        *v /= sum;
    }
    Ok(DistTable::new(scope, values)?)
}
