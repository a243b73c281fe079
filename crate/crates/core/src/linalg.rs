//! Small dense complex linear algebra: LU with log-magnitude accumulation and
//! Hermitian Cholesky. Matrices are row-major `Vec<C64>` of size `n * n`.

use num_complex::Complex64 as C64;

/// Pivots below this magnitude (after row scaling to unit max) count as zero.
pub const SINGULAR_PIVOT: f64 = 1e-300;

/// In-place LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    /// log |det|^2 of the factored matrix, -inf when singular.
    pub log_abs_det2: f64,
}

impl Lu {
    pub fn factor(mut a: Vec<C64>, n: usize) -> Self {
        debug_assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut log_det = 0.0;
        let mut singular = false;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].norm();
            for row in col + 1..n {
                let v = a[row * n + col].norm();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if !(best > SINGULAR_PIVOT) {
                singular = true;
                break;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            let p = a[col * n + col];
            log_det += p.norm_sqr().ln();
            for row in col + 1..n {
                let f = a[row * n + col] / p;
                a[row * n + col] = f;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in col + 1..n {
                    let t = a[col * n + j];
                    a[row * n + j] -= f * t;
                }
            }
        }
        Lu {
            n,
            lu: a,
            perm,
            log_abs_det2: if singular { f64::NEG_INFINITY } else { log_det },
        }
    }

    pub fn is_singular(&self) -> bool {
        self.log_abs_det2 == f64::NEG_INFINITY
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Row `j` of the inverse, i.e. the solution of `y^T A = e_j^T`.
    pub fn inverse_row(&self, j: usize) -> Vec<C64> {
        // A = P^T L U, so A^T y = e_j  <=>  U^T L^T P y = e_j.
        let n = self.n;
        let mut w = vec![C64::new(0.0, 0.0); n];
        w[j] = C64::new(1.0, 0.0);
        for i in 0..n {
            let mut s = w[i];
            for k in 0..i {
                s -= self.lu[k * n + i] * w[k];
            }
            w[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for k in i + 1..n {
                s -= self.lu[k * n + i] * w[k];
            }
            w[i] = s;
        }
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = w[i];
        }
        y
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix,
/// `G = L L^*`. Returns `None` if a non-positive pivot appears.
pub fn cholesky(g: &[C64], n: usize) -> Option<Vec<C64>> {
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = g[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let dj = d.sqrt();
        l[j * n + j] = C64::new(dj, 0.0);
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / dj;
        }
    }
    Some(l)
}

/// Solve `L x = b` for lower-triangular `L`.
pub fn forward_sub(l: &[C64], n: usize, b: &[C64]) -> Vec<C64> {
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Solve `L^* x = b` for lower-triangular `L`.
pub fn backward_sub_adjoint(l: &[C64], n: usize, b: &[C64]) -> Vec<C64> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * x[k];
        }
        x[i] = s / l[i * n + i].conj();
    }
    x
}

/// Solve the real tridiagonal system with sub-, main and super-diagonals.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
