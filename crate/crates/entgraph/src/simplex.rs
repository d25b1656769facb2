//! Phase-I simplex for equality-form feasibility, `Ax = b, x >= 0`.
//!
//! Dense tableau with Bland's rule (lowest-index entering and leaving
//! variable), so the pivot sequence is deterministic and cycling is
//! impossible. When the system is infeasible the final multipliers form a
//! Farkas certificate: `y` with `yᵀA <= 0` componentwise and `yᵀb > 0`.

/// Feasibility tolerance on the phase-I optimum.
pub(crate) const FEAS_TOL: f64 = 1e-8;

/// Threshold below which a reduced cost is considered non-improving.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug)]
pub(crate) enum PhaseOne {
    /// A solution of `Ax = b` with `x >= 0`.
    Feasible(Vec<f64>),
    /// Farkas certificate `y`: `yᵀA <= tol` componentwise while `yᵀb > tol`.
    Infeasible { y: Vec<f64>, residual: f64 },
}

/// Dense row-major matrix of constraint coefficients.
pub(crate) struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Solve the phase-I problem `min Σ s  s.t.  Ax + s = b, x, s >= 0`.
///
/// Rows with negative right-hand side are sign-flipped first. The tableau
/// carries the artificial columns explicitly so the dual multipliers can be
/// read off their reduced costs at termination.
pub(crate) fn phase_one(a: &DenseMat, b: &[f64]) -> PhaseOne {
    let m = a.rows;
    let n = a.cols;
    assert_eq!(b.len(), m);

    // Tableau: m rows x (n + m) columns plus RHS column, artificials last.
    let width = n + m + 1;
    let mut t = vec![0.0; m * width];
    let mut row_sign = vec![1.0; m];
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        row_sign[r] = sign;
        for c in 0..n {
            t[r * width + c] = sign * a.at(r, c);
        }
        t[r * width + n + r] = 1.0;
        t[r * width + n + m] = sign * b[r];
    }

    // Objective row: reduced costs of min Σ artificials with the artificial
    // basis, i.e. z_j - c_j = Σ_r t[r][j] for structural j, 0 for
    // artificials; objective value = Σ_r rhs_r.
    let mut obj = vec![0.0; width];
    for r in 0..m {
        for c in 0..width {
            obj[c] += t[r * width + c];
        }
    }
    for c in n..n + m {
        obj[c] = 0.0;
    }

    let mut basis: Vec<usize> = (n..n + m).collect();

    // Bland's rule precludes cycling; the cap only guards against numeric
    // stalls on degenerate inputs.
    for _ in 0..20_000 {
        // Bland: entering variable = lowest index with positive reduced cost
        // (maximizing Σ s reduction; obj stores z_j - c_j).
        let mut enter = None;
        for c in 0..n + m {
            if obj[c] > PIVOT_TOL {
                enter = Some(c);
                break;
            }
        }
        let Some(enter) = enter else { break };

        // Ratio test; ties broken by lowest basic variable index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coef = t[r * width + enter];
            if coef > PIVOT_TOL {
                let ratio = t[r * width + n + m] / coef;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((br, best)) => {
                        if ratio < best - 1e-12
                            || ((ratio - best).abs() <= 1e-12 && basis[r] < basis[br])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            // Unbounded phase-I cannot happen (objective bounded below by 0);
            // numerically treat as stalled.
            break;
        };

        // Pivot.
        let pc = enter;
        let pr = pivot_row;
        let pivot = t[pr * width + pc];
        for c in 0..width {
            t[pr * width + c] /= pivot;
        }
        for r in 0..m {
            if r != pr {
                let f = t[r * width + pc];
                if f != 0.0 {
                    for c in 0..width {
                        t[r * width + c] -= f * t[pr * width + c];
                    }
                }
            }
        }
        let f = obj[pc];
        if f != 0.0 {
            for c in 0..width {
                obj[c] -= f * t[pr * width + c];
            }
        }
        basis[pr] = pc;
    }

    let objective = obj[n + m];
    if objective.abs() <= FEAS_TOL {
        let mut x = vec![0.0; n];
        for (r, &var) in basis.iter().enumerate() {
            if var < n {
                x[var] = t[r * width + n + m].max(0.0);
            }
        }
        PhaseOne::Feasible(x)
    } else {
        // Reduced cost of artificial i is z_i - 1 = -(sign_i * y_i) - ... in
        // tableau form obj[n+i] = y'_i - 1 with y' the multipliers of the
        // sign-flipped system; recover y for the original rows.
        let mut y = vec![0.0; m];
        for r in 0..m {
            y[r] = row_sign[r] * (obj[n + r] + 1.0);
        }
        PhaseOne::Infeasible { y, residual: objective }
    }
}
