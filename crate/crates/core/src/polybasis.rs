//! Multinomial bases of the polynomials of degree at most `k` on `C^n`,
//! point configurations, and log-magnitude Vandermonde determinants.
//!
//! The Vandermonde determinant of `N_k` points is `det(e_i(z_j))` for the
//! multinomial basis `e_i`. Its magnitude spans hundreds of orders of magnitude
//! for moderate `N`, so only `log |D|^2` is ever formed. In one variable the
//! classical product formula `|D|^2 = prod_{i<j} |z_i - z_j|^2` is used; it is
//! exact in structure and serves as the oracle for the matrix route.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Lu, SINGULAR_PIVOT};

/// `binomial(n + k, n)`, the dimension of the polynomials of degree `<= k` on `C^n`.
pub fn basis_size(n: usize, k: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension n must be positive".into()));
    }
    // C(n+k, n) = prod_{i=1}^{n} (k+i)/i, exact at every step.
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc
            .checked_mul(k as u128 + i)
            .ok_or(Error::DegreeTooLarge { n, k })?
            / i;
    }
    usize::try_from(acc)
        .ok()
        .filter(|&v| v <= isize::MAX as usize / 64)
        .ok_or(Error::DegreeTooLarge { n, k })
}

/// Multinomials `z^alpha` with `|alpha| <= k`, in graded lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndexBasis {
    n: usize,
    k: usize,
    exponents: Vec<Vec<u32>>,
}

impl MultiIndexBasis {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let size = basis_size(n, k)?;
        if size > 1_000_000 {
            return Err(Error::DegreeTooLarge { n, k });
        }
        let mut exponents = Vec::with_capacity(size);
        for d in 0..=k as u32 {
            let mut cur = vec![0u32; n];
            push_degree(&mut exponents, &mut cur, 0, d);
        }
        debug_assert_eq!(exponents.len(), size);
        Ok(MultiIndexBasis { n, k, exponents })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn size(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Values `e_i(z)` of every basis element at one point.
    pub fn evaluate(&self, z: &[C64]) -> Vec<C64> {
        let pows = powers(z, self.k);
        self.exponents
            .iter()
            .map(|a| monomial(&pows, a))
            .collect()
    }

    /// Holomorphic partials `d e_i / d z_l (z)`, laid out `[l][i]`.
    pub fn evaluate_derivatives(&self, z: &[C64]) -> Vec<Vec<C64>> {
        let pows = powers(z, self.k);
        (0..self.n)
            .map(|l| {
                self.exponents
                    .iter()
                    .map(|a| {
                        if a[l] == 0 {
                            return C64::new(0.0, 0.0);
                        }
                        let mut v = C64::new(a[l] as f64, 0.0);
                        for (m, &e) in a.iter().enumerate() {
                            let e = if m == l { e - 1 } else { e };
                            v *= pows[m][e as usize];
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }
}

// Within a fixed total degree, earlier coordinates get the larger exponent first:
// 1, z1, z2, z1^2, z1 z2, z2^2, ...
fn push_degree(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        push_degree(out, cur, pos + 1, remaining - e);
    }
    cur[pos] = 0;
}

fn powers(z: &[C64], k: usize) -> Vec<Vec<C64>> {
    z.iter()
        .map(|&zl| {
            let mut p = Vec::with_capacity(k + 1);
            let mut acc = C64::new(1.0, 0.0);
            for _ in 0..=k {
                p.push(acc);
                acc *= zl;
            }
            p
        })
        .collect()
}

fn monomial(pows: &[Vec<C64>], a: &[u32]) -> C64 {
    a.iter()
        .enumerate()
        .fold(C64::new(1.0, 0.0), |acc, (l, &e)| acc * pows[l][e as usize])
}

/// How the coordinates of a configuration are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Complex,
    RealLine,
    RealTropical,
}

/// An ordered list of `N` points of `C^n` stored flat, point-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    n: usize,
    mode: Mode,
    coords: Vec<C64>,
}

impl Configuration {
    pub fn new(n: usize, mode: Mode, coords: Vec<C64>) -> Result<Self> {
        if n == 0 || !coords.len().is_multiple_of(n) {
            return Err(Error::InvalidConfiguration(format!(
                "{} coordinates do not split into points of dimension {n}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidConfiguration("non-finite coordinate".into()));
        }
        if mode != Mode::Complex && coords.iter().any(|c| c.im != 0.0) {
            return Err(Error::InvalidConfiguration(
                "real-mode configuration has a non-zero imaginary part".into(),
            ));
        }
        Ok(Configuration { n, mode, coords })
    }

    /// One-variable complex configuration.
    pub fn from_complex(points: &[C64]) -> Result<Self> {
        Self::new(1, Mode::Complex, points.to_vec())
    }

    /// One-variable configuration on the real line.
    pub fn from_real(points: &[f64]) -> Result<Self> {
        Self::new(
            1,
            Mode::RealLine,
            points.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[C64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[C64]> {
        self.coords.chunks(self.n)
    }

    /// Real coordinates of one point, `[re_1..re_n, im_1..im_n]`.
    pub fn real_coords(&self, i: usize) -> Vec<f64> {
        let p = self.point(i);
        p.iter().map(|c| c.re).chain(p.iter().map(|c| c.im)).collect()
    }

    /// Indices of the points sorted by a total order on their coordinates.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| cmp_points(self.point(a), self.point(b)));
        idx
    }

    fn has_duplicate(&self, order: &[usize]) -> bool {
        order
            .windows(2)
            .any(|w| cmp_points(self.point(w[0]), self.point(w[1])) == Ordering::Equal)
    }
}

fn cmp_points(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn check_size(basis: &MultiIndexBasis, config: &Configuration) -> Result<()> {
    if config.dimension() != basis.dimension() {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension(),
            got: config.dimension(),
        });
    }
    if config.len() != basis.size() {
        return Err(Error::SizeMismatch {
            expected: basis.size(),
            got: config.len(),
        });
    }
    Ok(())
}

/// `log |D(z_1..z_N)|^2`, `-inf` on (numerically) singular configurations.
///
/// One variable uses the pairwise product formula; `n >= 2` factors the
/// evaluation matrix.
pub fn log_abs_det2(basis: &MultiIndexBasis, config: &Configuration) -> Result<f64> {
    check_size(basis, config)?;
    if basis.dimension() == 1 {
        Ok(log_abs_det2_pairwise(config))
    } else {
        log_abs_det2_matrix(basis, config)
    }
}

/// `sum_{i<j} log |z_i - z_j|^2` for a one-variable configuration, summed in
/// canonical point order so the result is bitwise permutation invariant.
pub fn log_abs_det2_pairwise(config: &Configuration) -> f64 {
    debug_assert_eq!(config.dimension(), 1);
    let order = config.canonical_order();
    let z: Vec<C64> = order.iter().map(|&i| config.point(i)[0]).collect();
    let mut total = 0.0;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let d = (z[i] - z[j]).norm_sqr();
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            total += d.ln();
        }
    }
    total
}

/// Matrix route: `log |det A|^2` for the evaluation matrix `A` of the
/// basis at the points (canonical order), through its QR factorization.
///
/// The columns of `Q` are built one basis element at a time, Arnoldi style:
/// `e_i = z_l e_parent` becomes `z_l q_parent`, orthogonalized twice against
/// the previous columns. The graded order is a monomial order, so `R` is
/// triangular with `R_ii = R_parent h_i` and `|det A| = prod R_ii`. The
/// monomial columns themselves, whose conditioning grows exponentially with
/// the degree, are never formed.
pub fn log_abs_det2_matrix(basis: &MultiIndexBasis, config: &Configuration) -> Result<f64> {
    check_size(basis, config)?;
    let order = config.canonical_order();
    if config.has_duplicate(&order) {
        return Ok(f64::NEG_INFINITY);
    }
    let npts = order.len();
    let index: HashMap<&[u32], usize> = basis.exponents.iter().enumerate().map(|(i, a)| (a.as_slice(), i)).collect();
    let zero = C64::new(0.0, 0.0);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(npts);
    let mut log_r = Vec::with_capacity(npts);
    q.push(vec![C64::new(1.0 / (npts as f64).sqrt(), 0.0); npts]);
    log_r.push(0.5 * (npts as f64).ln());
    for a in &basis.exponents[1..] {
        let l = a.iter().position(|&e| e > 0).unwrap();
        let mut parent = a.clone();
        parent[l] -= 1;
        let p = index[parent.as_slice()];
        let mut w: Vec<C64> = order.iter().zip(&q[p]).map(|(&j, v)| config.point(j)[l] * v).collect();
        let start = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for _ in 0..2 {
            for qj in &q {
                let c: C64 = qj.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, x) in w.iter_mut().zip(qj) {
                    *wi -= c * x;
                }
            }
        }
        let h = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(h > SINGULAR_PIVOT * start) {
            return Ok(f64::NEG_INFINITY);
        }
        log_r.push(log_r[p] + h.ln());
        q.push(w.iter().map(|v| if h > 0.0 { v / h } else { zero }).collect());
    }
    Ok(2.0 * log_r.iter().sum::<f64>())
}

/// Row-scaled LU of the evaluation matrix (rows are basis elements, columns
/// points in canonical order), for the gradient.
fn scaled_lu(basis: &MultiIndexBasis, config: &Configuration) -> Option<ScaledLu> {
    let order = config.canonical_order();
    if config.has_duplicate(&order) {
        return None;
    }
    let n = basis.size();
    // a[i][c] = e_i(z_order[c])
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for (c, &p) in order.iter().enumerate() {
        for (i, v) in basis.evaluate(config.point(p)).into_iter().enumerate() {
            a[i * n + c] = v;
        }
    }
    let mut scales = vec![0.0; n];
    for i in 0..n {
        let m = a[i * n..(i + 1) * n].iter().map(|v| v.norm()).fold(0.0, f64::max);
        if m == 0.0 || !m.is_finite() {
            return None;
        }
        scales[i] = m;
        for v in &mut a[i * n..(i + 1) * n] {
            *v /= m;
        }
    }
    let lu = Lu::factor(a, n);
    if lu.is_singular() {
        return None;
    }
    Some(ScaledLu { lu, scales, order })
}

/// LU of the row-scaled evaluation matrix plus the bookkeeping to undo it.
#[derive(Debug, Clone)]
struct ScaledLu {
    lu: Lu,
    scales: Vec<f64>,
    order: Vec<usize>,
}

/// Real gradient of `log |D|^2`, laid out point by point as
/// `[d/d re_1..re_n, d/d im_1..im_n]`.
pub fn grad_log_abs_det2(basis: &MultiIndexBasis, config: &Configuration) -> Result<Vec<f64>> {
    check_size(basis, config)?;
    let n = basis.dimension();
    let npts = config.len();
    // For holomorphic f = log det, d(2 Re f)/dx = 2 Re w and d/dy = -2 Im w
    // with w = df/dz.
    let mut w = vec![C64::new(0.0, 0.0); npts * n];
    if n == 1 {
        for i in 0..npts {
            let zi = config.point(i)[0];
            for j in 0..npts {
                if i == j {
                    continue;
                }
                let d = zi - config.point(j)[0];
                if d.norm_sqr() == 0.0 {
                    return Err(Error::GradientUndefined("coincident points".into()));
                }
                w[i] += d.inv();
            }
        }
    } else {
        let fact = scaled_lu(basis, config).ok_or_else(|| Error::GradientUndefined("singular evaluation matrix".into()))?;
        for (c, &p) in fact.order.iter().enumerate() {
            // (A^{-1})_{c, i} with A = S * Ahat  =>  (Ahat^{-1})_{c,i} / s_i
            let inv_row = fact.lu.inverse_row(c);
            let derivs = basis.evaluate_derivatives(config.point(p));
            for l in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..basis.size() {
                    s += inv_row[i] * derivs[l][i] / fact.scales[i];
                }
                w[p * n + l] = s;
            }
        }
    }
    let mut grad = vec![0.0; npts * 2 * n];
    for p in 0..npts {
        for l in 0..n {
            let v = w[p * n + l];
            grad[p * 2 * n + l] = 2.0 * v.re;
            grad[p * 2 * n + n + l] = -2.0 * v.im;
        }
    }
    if config.mode() != Mode::Complex {
        for p in 0..npts {
            for l in 0..n {
                grad[p * 2 * n + n + l] = 0.0;
            }
        }
    }
    Ok(grad)
}
