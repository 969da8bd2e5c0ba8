//! Small dense linear algebra: a 4×4 complex matrix type with a deterministic
//! Jacobi eigensolver for Hermitian matrices, and Gaussian elimination for the
//! real steady-state systems.
//!
//! The eigensolver uses cyclic Jacobi sweeps so that results are bit-stable
//! across platforms; no external LAPACK-style routine is involved.

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Errors from the dense solvers.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("jacobi eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("linear system is numerically singular (condition estimate {cond:.3e})")]
    SingularSystem { cond: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, rhs has length {rhs}")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
}

/// 4×4 complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat4 {
    pub e: [[C64; 4]; 4],
}

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4 { e: [[C64::new(0.0, 0.0); 4]; 4] }
    }

    pub fn identity() -> Self {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            m.e[i][i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn adjoint(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = self.e[j][i].conj();
            }
        }
        m
    }

    pub fn mul(&self, other: &Mat4) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..4 {
                    acc += self.e[i][k] * other.e[k][j];
                }
                m.e[i][j] = acc;
            }
        }
        m
    }

    pub fn add(&self, other: &Mat4) -> Mat4 {
        let mut m = self.clone();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] += other.e[i][j];
            }
        }
        m
    }

    pub fn scale(&self, c: f64) -> Mat4 {
        let mut m = self.clone();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] *= c;
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1] + self.e[2][2] + self.e[3][3]
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for row in &self.e {
            for v in row {
                m = m.max(v.norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..4 {
            if self.e[i][i].im.abs() > tol {
                return false;
            }
            for j in (i + 1)..4 {
                if (self.e[i][j] - self.e[j][i].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Column `j` as a 4-vector.
    pub fn column(&self, j: usize) -> [C64; 4] {
        [self.e[0][j], self.e[1][j], self.e[2][j], self.e[3][j]]
    }
}

/// |<a|b>|^2 for two complex 4-vectors.
pub fn overlap2(a: &[C64; 4], b: &[C64; 4]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..4 {
        acc += a[k].conj() * b[k];
    }
    acc.norm_sqr()
}

/// Eigen-decomposition of a 4×4 Hermitian matrix.
///
/// `values` are ascending; column `j` of `vectors` is the eigenvector of
/// `values[j]`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: [f64; 4],
    pub vectors: Mat4,
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Diagonalizes a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Each rotation first removes the phase of the targeted off-diagonal element
/// and then applies the classical real rotation that annihilates it. Sweeps
/// stop once every off-diagonal magnitude is below `1e-12 * max|H|`. The
/// rotation order is fixed, so the output is deterministic.
pub fn eigen_hermitian(h: &Mat4) -> Result<EigenDecomposition, LinalgError> {
    // Work on the Hermitian average to wash out construction round-off.
    let mut a = h.add(&h.adjoint()).scale(0.5);
    let mut v = Mat4::identity();

    let scale = a.max_abs();
    if scale == 0.0 {
        return Ok(EigenDecomposition { values: [0.0; 4], vectors: v });
    }
    let thr = 1e-12 * scale;

    for sweep in 0..=JACOBI_MAX_SWEEPS {
        let mut off = 0.0_f64;
        for p in 0..3 {
            for q in (p + 1)..4 {
                off = off.max(a.e[p][q].norm());
            }
        }
        if off < thr {
            return Ok(sorted_eigen(&a, &v));
        }
        if sweep == JACOBI_MAX_SWEEPS {
            break;
        }

        for p in 0..3 {
            for q in (p + 1)..4 {
                let z = a.e[p][q];
                let r = z.norm();
                if r < thr * 1e-2 {
                    continue;
                }
                let phase = z / r; // e^{i phi}
                let app = a.e[p][p].re;
                let aqq = a.e[q][q].re;
                let theta = 0.5 * (2.0 * r).atan2(app - aqq);
                let c = theta.cos();
                let s = theta.sin();

                // U restricted to the (p,q) plane:
                //   U[p][p] = c          U[p][q] = -s
                //   U[q][p] = s e^{-i phi}  U[q][q] = c e^{-i phi}
                let upp = C64::new(c, 0.0);
                let upq = C64::new(-s, 0.0);
                let uqp = phase.conj() * s;
                let uqq = phase.conj() * c;

                // A <- A U (columns p,q)
                for k in 0..4 {
                    let akp = a.e[k][p];
                    let akq = a.e[k][q];
                    a.e[k][p] = akp * upp + akq * uqp;
                    a.e[k][q] = akp * upq + akq * uqq;
                }
                // A <- U^H A (rows p,q)
                for k in 0..4 {
                    let apk = a.e[p][k];
                    let aqk = a.e[q][k];
                    a.e[p][k] = upp.conj() * apk + uqp.conj() * aqk;
                    a.e[q][k] = upq.conj() * apk + uqq.conj() * aqk;
                }
                // V <- V U
                for k in 0..4 {
                    let vkp = v.e[k][p];
                    let vkq = v.e[k][q];
                    v.e[k][p] = vkp * upp + vkq * uqp;
                    v.e[k][q] = vkp * upq + vkq * uqq;
                }
                // Pin the annihilated pair exactly.
                a.e[p][q] = C64::new(0.0, 0.0);
                a.e[q][p] = C64::new(0.0, 0.0);
            }
        }
    }
    Err(LinalgError::NoConvergence(JACOBI_MAX_SWEEPS))
}

fn sorted_eigen(a: &Mat4, v: &Mat4) -> EigenDecomposition {
    let mut order = [0usize, 1, 2, 3];
    let vals = [a.e[0][0].re, a.e[1][1].re, a.e[2][2].re, a.e[3][3].re];
    // Stable insertion sort keeps tie ordering deterministic.
    for i in 1..4 {
        let mut j = i;
        while j > 0 && vals[order[j - 1]] > vals[order[j]] {
            order.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut values = [0.0; 4];
    let mut vectors = Mat4::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = vals[src];
        for k in 0..4 {
            vectors.e[k][dst] = v.e[k][src];
        }
    }
    EigenDecomposition { values, vectors }
}

/// Maximum |pivot| / minimum |pivot| ratio above which a system is declared
/// numerically singular.
pub const SINGULARITY_COND_LIMIT: f64 = 1e14;

/// Solves the dense real system `a x = b` in place by Gaussian elimination
/// with partial pivoting. `a` is row-major `n*n`.
///
/// The pivot ratio max|p|/min|p| serves as a cheap condition estimate and
/// triggers [`LinalgError::SingularSystem`] above [`SINGULARITY_COND_LIMIT`].
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    if a.len() != n * n || b.len() != n {
        return Err(LinalgError::DimensionMismatch { rows: a.len() / n.max(1), cols: n, rhs: b.len() });
    }
    let mut max_piv = 0.0_f64;
    let mut min_piv = f64::INFINITY;

    for col in 0..n {
        // Partial pivot.
        let mut piv_row = col;
        let mut piv_val = a[col * n + col].abs();
        for row in (col + 1)..n {
            let v = a[row * n + col].abs();
            if v > piv_val {
                piv_val = v;
                piv_row = row;
            }
        }
        if piv_val == 0.0 {
            return Err(LinalgError::SingularSystem { cond: f64::INFINITY });
        }
        if piv_row != col {
            for k in 0..n {
                a.swap(col * n + k, piv_row * n + k);
            }
            b.swap(col, piv_row);
        }
        max_piv = max_piv.max(piv_val);
        min_piv = min_piv.min(piv_val);

        let inv = 1.0 / a[col * n + col];
        for row in (col + 1)..n {
            let f = a[row * n + col] * inv;
            if f == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in (col + 1)..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }

    let cond = max_piv / min_piv;
    if !cond.is_finite() || cond > SINGULARITY_COND_LIMIT {
        return Err(LinalgError::SingularSystem { cond });
    }

    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col * n + k] * x[k];
        }
        x[col] = acc / a[col * n + col];
    }
    Ok(x)
}

/// Inverse of a dense real `n*n` matrix via Gauss-Jordan elimination with
/// partial pivoting.
pub fn invert_dense(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    let mut work = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let mut max_piv = 0.0_f64;
    let mut min_piv = f64::INFINITY;

    for col in 0..n {
        let mut piv_row = col;
        let mut piv_val = work[col * n + col].abs();
        for row in (col + 1)..n {
            let v = work[row * n + col].abs();
            if v > piv_val {
                piv_val = v;
                piv_row = row;
            }
        }
        if piv_val == 0.0 {
            return Err(LinalgError::SingularSystem { cond: f64::INFINITY });
        }
        if piv_row != col {
            for k in 0..n {
                work.swap(col * n + k, piv_row * n + k);
                inv.swap(col * n + k, piv_row * n + k);
            }
        }
        max_piv = max_piv.max(piv_val);
        min_piv = min_piv.min(piv_val);

        let pinv = 1.0 / work[col * n + col];
        for k in 0..n {
            work[col * n + k] *= pinv;
            inv[col * n + k] *= pinv;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = work[row * n + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                work[row * n + k] -= f * work[col * n + k];
                inv[row * n + k] -= f * inv[col * n + k];
            }
        }
    }

    let cond = max_piv / min_piv;
    if !cond.is_finite() || cond > SINGULARITY_COND_LIMIT {
        return Err(LinalgError::SingularSystem { cond });
    }
    Ok(inv)
}
