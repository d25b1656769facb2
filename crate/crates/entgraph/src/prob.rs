//! Finite-alphabet probability tables.
//!
//! A [`DistTable`] is a dense joint distribution over an ordered set of
//! named observables, stored row-major with the first observable varying
//! slowest. Marginalization, outer products and compatibility checks on
//! these tables are the substrate for everything else in this crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the number of entries of any dense table (2^24).
pub const DENSE_CAP: usize = 1 << 24;

/// Tolerance for normalization of ingested data.
pub const NORM_TOL: f64 = 1e-9;

/// Tolerance for internal algebraic identities.
pub const EXACT_TOL: f64 = 1e-12;

/// Entries above this (negative) floor are clamped to zero on ingestion.
const NEG_CLAMP: f64 = -1e-12;

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("unknown observable id `{0}`")]
    UnknownObservable(String),
    #[error("duplicate observable id `{0}`")]
    DuplicateObservable(String),
    #[error("observable `{0}` has empty alphabet")]
    EmptyAlphabet(String),
    #[error("table has {got} entries, scope implies {want}")]
    SizeMismatch { got: usize, want: usize },
    #[error("table would have {0} entries, cap is {DENSE_CAP}")]
    TooLarge(usize),
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entries sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("expected single-observable table, scope has {0} observables")]
    NotSingle(usize),
}

/// A named observable together with the size of its outcome alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableDecl {
    pub id: String,
    #[serde(rename = "k")]
    pub alphabet_size: usize,
}

impl ObservableDecl {
    pub fn new(id: impl Into<String>, alphabet_size: usize) -> Self {
        Self { id: id.into(), alphabet_size }
    }
}

/// Dense probability table over an ordered scope of observables.
///
/// Index convention: row-major over the scope order, first observable
/// slowest. Construction validates nonnegativity (entries down to −1e−12
/// are clamped to zero) and normalization to 1 within [`NORM_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistTable", into = "RawDistTable")]
pub struct DistTable {
    scope: Vec<ObservableDecl>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistTable {
    scope: Vec<ObservableDecl>,
    values: Vec<f64>,
}

impl TryFrom<RawDistTable> for DistTable {
    type Error = ProbError;
    fn try_from(raw: RawDistTable) -> Result<Self, ProbError> {
        DistTable::new(raw.scope, raw.values)
    }
}

impl From<DistTable> for RawDistTable {
    fn from(t: DistTable) -> Self {
        RawDistTable { scope: t.scope, values: t.values }
    }
}

/// Number of entries implied by a scope, or an error past the dense cap.
pub(crate) fn scope_len(scope: &[ObservableDecl]) -> Result<usize, ProbError> {
    let mut len = 1usize;
    for obs in scope {
        if obs.alphabet_size == 0 {
            return Err(ProbError::EmptyAlphabet(obs.id.clone()));
        }
        len = len
            .checked_mul(obs.alphabet_size)
            .ok_or(ProbError::TooLarge(usize::MAX))?;
        if len > DENSE_CAP {
            return Err(ProbError::TooLarge(len));
        }
    }
    Ok(len)
}

fn check_unique(scope: &[ObservableDecl]) -> Result<(), ProbError> {
    for (i, a) in scope.iter().enumerate() {
        if scope[..i].iter().any(|b| b.id == a.id) {
            return Err(ProbError::DuplicateObservable(a.id.clone()));
        }
    }
    Ok(())
}

/// Row-major strides for a scope (first observable slowest).
pub(crate) fn strides(scope: &[ObservableDecl]) -> Vec<usize> {
    let mut s = vec![1usize; scope.len()];
    for i in (0..scope.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * scope[i + 1].alphabet_size;
    }
    s
}

impl DistTable {
    pub fn new(scope: Vec<ObservableDecl>, mut values: Vec<f64>) -> Result<Self, ProbError> {
        check_unique(&scope)?;
        let want = scope_len(&scope)?;
        if values.len() != want {
            return Err(ProbError::SizeMismatch { got: values.len(), want });
        }
        let mut sum = 0.0;
        for (i, v) in values.iter_mut().enumerate() {
            if *v < NEG_CLAMP {
                return Err(ProbError::NegativeEntry { index: i, value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
            sum += *v;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(ProbError::NotNormalized(sum));
        }
        Ok(Self { scope, values })
    }

    /// Uniform distribution over the given scope.
    pub fn uniform(scope: Vec<ObservableDecl>) -> Result<Self, ProbError> {
        check_unique(&scope)?;
        let len = scope_len(&scope)?;
        let v = 1.0 / len as f64;
        Ok(Self { scope, values: vec![v; len] })
    }

    pub fn scope(&self) -> &[ObservableDecl] {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of an observable id within the scope.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.scope.iter().position(|o| o.id == id)
    }

    /// Entry at a full multi-index over the scope.
    pub fn entry(&self, outcome: &[usize]) -> f64 {
        let st = strides(&self.scope);
        let idx: usize = outcome.iter().zip(&st).map(|(o, s)| o * s).sum();
        self.values[idx]
    }

    /// Sum entries over the discarded observables, keeping `keep`.
    ///
    /// The returned scope is `keep` reordered to the table's scope order;
    /// normalization is preserved exactly (same summands, regrouped).
    pub fn marginalize(&self, keep: &[&str]) -> Result<DistTable, ProbError> {
        for id in keep {
            if self.position(id).is_none() {
                return Err(ProbError::UnknownObservable(id.to_string()));
            }
        }
        let kept: Vec<usize> = (0..self.scope.len())
            .filter(|&i| keep.iter().any(|id| *id == self.scope[i].id))
            .collect();
        if kept.len() != keep.len() {
            // Some id was listed twice.
            for (i, a) in keep.iter().enumerate() {
                if keep[..i].contains(a) {
                    return Err(ProbError::DuplicateObservable(a.to_string()));
                }
            }
        }
        let out_scope: Vec<ObservableDecl> = kept.iter().map(|&i| self.scope[i].clone()).collect();
        let out_strides = strides(&out_scope);
        let in_strides = strides(&self.scope);
        let mut out = vec![0.0; scope_len(&out_scope)?];
        let mut outcome = vec![0usize; self.scope.len()];
        for (idx, &v) in self.values.iter().enumerate() {
            decode(idx, &in_strides, &self.scope, &mut outcome);
            let mut o = 0usize;
            for (j, &pos) in kept.iter().enumerate() {
                o += outcome[pos] * out_strides[j];
            }
            out[o] += v;
        }
        Ok(DistTable { scope: out_scope, values: out })
    }

    /// Permute the scope axes into the given id order (same distribution).
    pub fn reordered(&self, order: &[&str]) -> Result<DistTable, ProbError> {
        if order.len() != self.scope.len() {
            return Err(ProbError::SizeMismatch { got: order.len(), want: self.scope.len() });
        }
        let mut perm = Vec::with_capacity(order.len());
        for id in order {
            let pos = self
                .position(id)
                .ok_or_else(|| ProbError::UnknownObservable(id.to_string()))?;
            if perm.contains(&pos) {
                return Err(ProbError::DuplicateObservable(id.to_string()));
            }
            perm.push(pos);
        }
        let out_scope: Vec<ObservableDecl> = perm.iter().map(|&p| self.scope[p].clone()).collect();
        let out_strides = strides(&out_scope);
        let in_strides = strides(&self.scope);
        let mut out = vec![0.0; self.values.len()];
        let mut outcome = vec![0usize; self.scope.len()];
        for (idx, &v) in self.values.iter().enumerate() {
            decode(idx, &in_strides, &self.scope, &mut outcome);
            let o: usize = perm.iter().zip(&out_strides).map(|(&p, s)| outcome[p] * s).sum();
            out[o] = v;
        }
        Ok(DistTable { scope: out_scope, values: out })
    }
}

/// Decode a flat row-major index into a per-observable outcome vector.
pub(crate) fn decode(idx: usize, strides: &[usize], scope: &[ObservableDecl], out: &mut [usize]) {
    for (i, (&s, obs)) in strides.iter().zip(scope).enumerate() {
        out[i] = idx / s % obs.alphabet_size;
    }
}

/// Outer product of single-observable tables with pairwise disjoint scopes.
pub fn product_extension(singles: &[DistTable]) -> Result<DistTable, ProbError> {
    let mut scope = Vec::with_capacity(singles.len());
    for t in singles {
        if t.scope.len() != 1 {
            return Err(ProbError::NotSingle(t.scope.len()));
        }
        scope.push(t.scope[0].clone());
    }
    check_unique(&scope)?;
    let len = scope_len(&scope)?;
    let mut values = vec![1.0; len];
    let st = strides(&scope);
    for (idx, v) in values.iter_mut().enumerate() {
        for (j, t) in singles.iter().enumerate() {
            *v *= t.values[idx / st[j] % scope[j].alphabet_size];
        }
    }
    DistTable::new(scope, values)
}

/// True iff the marginals of `a` and `b` onto their shared scope agree
/// entrywise within `tol`. Vacuously true for disjoint scopes.
pub fn compatible(a: &DistTable, b: &DistTable, tol: f64) -> bool {
    let shared: Vec<&str> = a
        .scope
        .iter()
        .filter(|o| b.position(&o.id).is_some())
        .map(|o| o.id.as_str())
        .collect();
    if shared.is_empty() {
        return true;
    }
    let ma = a.marginalize(&shared).expect("shared ids are in scope");
    let mb = b
        .marginalize(&shared)
        .and_then(|m| m.reordered(&shared))
        .expect("shared ids are in scope");
    ma.values
        .iter()
        .zip(&mb.values)
        .all(|(x, y)| (x - y).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(id: &str, k: usize) -> ObservableDecl {
        ObservableDecl::new(id, k)
    }

    fn anticorrelated(a: &str, b: &str) -> DistTable {
        DistTable::new(vec![obs(a, 2), obs(b, 2)], vec![0.0, 0.5, 0.5, 0.0]).unwrap()
    }

    #[test]
    fn marginalize_full_scope_is_identity() {
        let t = anticorrelated("X1", "X2");
        let m = t.marginalize(&["X1", "X2"]).unwrap();
        assert_eq!(m, t);
    }

    #[test]
    fn marginalize_anticorrelation_gives_uniform() {
        let t = anticorrelated("X1", "X2");
        let m = t.marginalize(&["X1"]).unwrap();
        assert_eq!(m.scope().len(), 1);
        assert!((m.values()[0] - 0.5).abs() < EXACT_TOL);
        assert!((m.values()[1] - 0.5).abs() < EXACT_TOL);
    }

    #[test]
    fn overlapping_marginals_agree() {
        // P_{X1,X2} and P_{X1,X3} both anticorrelated: marginalizing either
        // onto X1 yields the same P_{X1}.
        let t12 = anticorrelated("X1", "X2");
        let t13 = anticorrelated("X1", "X3");
        let m12 = t12.marginalize(&["X1"]).unwrap();
        let m13 = t13.marginalize(&["X1"]).unwrap();
        for (a, b) in m12.values().iter().zip(m13.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn product_of_uniform_singles() {
        let s1 = DistTable::new(vec![obs("A", 2)], vec![0.5, 0.5]).unwrap();
        let s2 = DistTable::new(vec![obs("B", 2)], vec![0.5, 0.5]).unwrap();
        let p = product_extension(&[s1, s2]).unwrap();
        assert_eq!(p.values(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn product_of_deterministic_singles() {
        let s1 = DistTable::new(vec![obs("A", 2)], vec![1.0, 0.0]).unwrap();
        let s2 = DistTable::new(vec![obs("B", 2)], vec![0.0, 1.0]).unwrap();
        let p = product_extension(&[s1, s2]).unwrap();
        assert_eq!(p.values(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn product_of_three_random_singles_matches_direct_oracle() {
        // Alphabets 2, 3, 2: twelve entries; marginals reproduce inputs.
        let s1 = DistTable::new(vec![obs("A", 2)], vec![0.3, 0.7]).unwrap();
        let s2 = DistTable::new(vec![obs("B", 3)], vec![0.2, 0.5, 0.3]).unwrap();
        let s3 = DistTable::new(vec![obs("C", 2)], vec![0.9, 0.1]).unwrap();
        let p = product_extension(&[s1.clone(), s2.clone(), s3.clone()]).unwrap();
        assert_eq!(p.len(), 12);
        // Independent oracle: direct nested loops.
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    let want = s1.values()[i] * s2.values()[j] * s3.values()[k];
                    assert!((p.entry(&[i, j, k]) - want).abs() < EXACT_TOL);
                }
            }
        }
        for (single, id) in [(&s1, "A"), (&s2, "B"), (&s3, "C")] {
            let m = p.marginalize(&[id]).unwrap();
            for (a, b) in m.values().iter().zip(single.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_rejects_duplicate_ids() {
        let s1 = DistTable::new(vec![obs("A", 2)], vec![0.5, 0.5]).unwrap();
        let s2 = DistTable::new(vec![obs("A", 2)], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            product_extension(&[s1, s2]),
            Err(ProbError::DuplicateObservable(_))
        ));
    }

    #[test]
    fn compatible_identity_and_mismatch() {
        let t = anticorrelated("X1", "X2");
        assert!(compatible(&t, &t, 1e-9));
        assert!(compatible(&anticorrelated("X1", "X2"), &anticorrelated("X1", "X3"), 1e-9));
        let single = DistTable::new(vec![obs("X1", 2)], vec![0.7, 0.3]).unwrap();
        assert!(!compatible(&single, &t, 1e-9));
        // Disjoint scopes are vacuously compatible.
        let other = anticorrelated("Y1", "Y2");
        assert!(compatible(&t, &other, 1e-9));
    }

    #[test]
    fn ingestion_clamps_small_negatives_and_rejects_large() {
        let t = DistTable::new(vec![obs("A", 2)], vec![1.0, -0.5e-12]).unwrap();
        assert_eq!(t.values()[1], 0.0);
        assert!(matches!(
            DistTable::new(vec![obs("A", 2)], vec![1.0, -1e-6]),
            Err(ProbError::NegativeEntry { .. })
        ));
        assert!(matches!(
            DistTable::new(vec![obs("A", 2)], vec![0.5, 0.6]),
            Err(ProbError::NotNormalized(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let scope: Vec<ObservableDecl> = (0..25).map(|i| obs(&format!("X{i}"), 2)).collect();
        assert!(matches!(DistTable::uniform(scope), Err(ProbError::TooLarge(_))));
    }

    #[test]
    fn marginalize_unknown_id_fails() {
        let t = anticorrelated("X1", "X2");
        assert!(matches!(
            t.marginalize(&["X9"]),
            Err(ProbError::UnknownObservable(_))
        ));
    }

    #[test]
    fn reordered_permutes_axes() {
        let t = DistTable::new(
            vec![obs("A", 2), obs("B", 3)],
            vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.25],
        )
        .unwrap();
        let r = t.reordered(&["B", "A"]).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(t.entry(&[i, j]), r.entry(&[j, i]));
            }
        }
    }

    proptest! {
        // marginalize commutes with further marginalization: first down to
        // {A, C}, then to {A}, equals marginalizing straight to {A}.
        #[test]
        fn marginalization_commutes(values in proptest::collection::vec(0.0f64..1.0, 12)) {
            let sum: f64 = values.iter().sum();
            prop_assume!(sum > 1e-3);
            let values: Vec<f64> = values.iter().map(|v| v / sum).collect();
            let t = DistTable::new(vec![obs("A", 2), obs("B", 3), obs("C", 2)], values).unwrap();
            let two_step = t.marginalize(&["A", "C"]).unwrap().marginalize(&["A"]).unwrap();
            let one_step = t.marginalize(&["A"]).unwrap();
            for (a, b) in two_step.values().iter().zip(one_step.values()) {
                prop_assert!((a - b).abs() < EXACT_TOL);
            }
        }

        #[test]
        fn json_roundtrip_is_bit_stable(values in proptest::collection::vec(0.0f64..1.0, 6)) {
            let sum: f64 = values.iter().sum();
            prop_assume!(sum > 1e-3);
            let values: Vec<f64> = values.iter().map(|v| v / sum).collect();
            let t = DistTable::new(vec![obs("A", 2), obs("B", 3)], values).unwrap();
            let json = serde_json::to_string(&t).unwrap();
            let back: DistTable = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(t.values(), back.values());
            prop_assert_eq!(t.scope(), back.scope());
        }
    }
}
