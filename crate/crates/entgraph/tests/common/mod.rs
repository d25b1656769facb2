//! Helpers shared by the integration suites: randomized joints, scenarios
//! built from joints, and the CHSH construction.

use entgraph::marginals::{Edge, MarginalScenario};
use entgraph::prob::{DistTable, ObservableDecl};
use entgraph::quantum::{self, DensityOp, Povm};
use faer::Mat;
use num_complex::Complex64;
use rand::Rng;

pub fn obs(id: &str, k: usize) -> ObservableDecl {
    ObservableDecl::new(id, k)
}

/// Random dense joint over the given scope.
pub fn random_joint(scope: Vec<ObservableDecl>, rng: &mut impl Rng) -> DistTable {
    let len: usize = scope.iter().map(|o| o.alphabet_size).product();
    let mut values: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
    let sum: f64 = values.iter().sum();
    for v in &mut values {
        *v /= sum;
    }
    DistTable::new(scope, values).expect("normalized random table")
}

/// Random joint supported on a random subset of outcomes (exercises the
/// zero-handling paths).
pub fn random_sparse_joint(scope: Vec<ObservableDecl>, rng: &mut impl Rng) -> DistTable {
    let len: usize = scope.iter().map(|o| o.alphabet_size).product();
    let mut values = vec![0.0; len];
    let support = rng.gen_range(1..=len.max(2) / 2 + 1);
    for _ in 0..support {
        values[rng.gen_range(0..len)] = rng.gen_range(0.1..1.0);
    }
    let sum: f64 = values.iter().sum();
    for v in &mut values {
        *v /= sum;
    }
    DistTable::new(scope, values).expect("normalized sparse table")
}

/// Random forest on the scope's observables with edge tables taken as
/// marginals of one global joint, so compatibility holds by construction.
pub fn random_forest_scenario(rng: &mut impl Rng) -> MarginalScenario {
    let n = rng.gen_range(2..=8);
    let scope: Vec<ObservableDecl> = (0..n)
        .map(|i| obs(&format!("X{}", i + 1), rng.gen_range(2..=3)))
        .collect();
    let joint = if rng.gen_bool(0.5) {
        random_joint(scope.clone(), rng)
    } else {
        random_sparse_joint(scope.clone(), rng)
    };
    let mut edges = Vec::new();
    for j in 1..n {
        if rng.gen_bool(0.8) {
            let i = rng.gen_range(0..j);
            let table = joint
                .marginalize(&[&scope[i].id, &scope[j].id])
                .expect("ids are in scope");
            edges.push(Edge { i: scope[i].id.clone(), j: scope[j].id.clone(), table });
        }
    }
    MarginalScenario::new(scope, edges).expect("marginals of one joint are compatible")
}

/// Isotropic two-qubit state: visibility v toward the singlet.
pub fn isotropic_singlet(v: f64) -> DensityOp {
    let s = quantum::singlet();
    let mm = quantum::maximally_mixed(&[2, 2]);
    let m = Mat::from_fn(4, 4, |i, j| {
        s.matrix()[(i, j)] * Complex64::new(v, 0.0)
            + mm.matrix()[(i, j)] * Complex64::new(1.0 - v, 0.0)
    });
    DensityOp::new(vec![2, 2], m).expect("isotropic mixture is a state")
}

/// The 2x2 CHSH scenario at the standard angles for a given visibility.
pub fn chsh_scenario(visibility: f64) -> MarginalScenario {
    use std::f64::consts::PI;
    let rho = isotropic_singlet(visibility);
    let a_povms: Vec<Povm> = [0.0, PI / 2.0].iter().map(|&t| Povm::qubit_projective(t)).collect();
    let b_povms: Vec<Povm> = [PI / 4.0, -PI / 4.0]
        .iter()
        .map(|&t| Povm::qubit_projective(t))
        .collect();
    let tables = quantum::born_pairs(&rho, &a_povms, &b_povms).expect("2x2 Born tables");
    let observables = vec![obs("A1", 2), obs("A2", 2), obs("B1", 2), obs("B2", 2)];
    let mut edges = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            edges.push(Edge {
                i: format!("A{}", i + 1),
                j: format!("B{}", j + 1),
                table: tables[i * 2 + j].clone(),
            });
        }
    }
    MarginalScenario::new(observables, edges).expect("Born tables are compatible")
}

/// Three-observable total-anticorrelation triangle.
pub fn triangle_anticorrelation() -> MarginalScenario {
    let anti = |a: &str, b: &str| Edge {
        i: a.to_string(),
        j: b.to_string(),
        table: DistTable::new(vec![obs(a, 2), obs(b, 2)], vec![0.0, 0.5, 0.5, 0.0])
            .expect("anticorrelation table"),
    };
    MarginalScenario::new(
        vec![obs("X1", 2), obs("X2", 2), obs("X3", 2)],
        vec![anti("X1", "X2"), anti("X2", "X3"), anti("X1", "X3")],
    )
    .expect("pairwise compatible")
}
