//! Dense real linear algebra for small matrices.
//!
//! Everything here works on [`Mat`], a row-major `f64` matrix. The routines
//! are sized for the layer widths of feedforward state-transition networks
//! (a few dozen rows), not for large-scale work.

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex scalar used for eigenvalues and their roots.
pub type Cplx = num_complex::Complex64;

/// Maximum shifted-QR sweeps spent on a single eigenvalue before giving up.
pub const MAX_SWEEPS_PER_EIGENVALUE: usize = 100;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension error: {0}")]
    Dimension(String),
    /// QR iteration stalled. `found` holds the eigenvalues that did converge.
    #[error("eigenvalue iteration did not converge at index {index} ({} eigenvalues found)", found.len())]
    NoConvergence { index: usize, found: Vec<Cplx> },
}

/// Row-major dense real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Mat { rows: rows.len(), cols, data })
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Mat::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product. Panics if the inner dimensions differ; see [`Mat::try_matmul`].
    pub fn matmul(&self, rhs: &Mat) -> Mat {
        self.try_matmul(rhs).expect("matmul dimension mismatch")
    }

    pub fn try_matmul(&self, rhs: &Mat) -> Result<Mat, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * v`. Panics on length mismatch.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ * v`. Panics on length mismatch.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Leading `rows x cols` block.
    pub fn top_left(&self, rows: usize, cols: usize) -> Mat {
        assert!(rows <= self.rows && cols <= self.cols);
        let mut out = Mat::zeros(rows, cols);
        for i in 0..rows {
            out.data[i * cols..(i + 1) * cols].copy_from_slice(&self.row(i)[..cols]);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Householder QR of a square matrix. Returns orthogonal `q` and upper-triangular `r`
/// with `q * r = m`.
pub fn qr_decompose(m: &Mat) -> Result<(Mat, Mat), LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Dimension(format!(
            "QR expects a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut r = m.clone();
    let mut q = Mat::identity(n);
    let mut v = vec![0.0; n];

    for k in 0..n.saturating_sub(1) {
        let norm = (k..n).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        for i in 0..n {
            v[i] = if i < k { 0.0 } else { r[(i, k)] };
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // r <- (I - 2vvᵀ/vᵀv) r
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                r[(i, j)] -= f * v[i];
            }
        }
        // q <- q (I - 2vvᵀ/vᵀv)
        for i in 0..n {
            let dot: f64 = (k..n).map(|j| q[(i, j)] * v[j]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k..n {
                q[(i, j)] -= f * v[j];
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            r[(i, j)] = 0.0;
        }
    }
    Ok((q, r))
}

/// Samples a `d x d` orthogonal matrix from the Haar measure.
///
/// QR of a standard Gaussian matrix, with each column of `Q` multiplied by the
/// sign of the matching diagonal entry of `R`. Without that correction the
/// distribution depends on the QR convention and is not uniform.
pub fn sample_haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Mat, LinalgError> {
    if d == 0 {
        return Err(LinalgError::Dimension("Haar sample needs d >= 1".into()));
    }
    let data: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
    let g = Mat::from_vec(d, d, data)?;
    let (mut q, r) = qr_decompose(&g)?;
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// All eigenvalues of a real square matrix, with multiplicity.
///
/// Householder reduction to upper Hessenberg form followed by Francis
/// double-shift QR iteration. Complex eigenvalues are returned as exact
/// conjugate pairs, positive imaginary part first.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Cplx>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Dimension(format!(
            "eigenvalues expect a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(LinalgError::Dimension("matrix has non-finite entries".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = m.clone();
    reduce_to_hessenberg(&mut h);
    hessenberg_qr(h)
}

fn reduce_to_hessenberg(h: &mut Mat) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let f = (m..=high).rev().map(|i| ort[i] * h[(i, j)]).sum::<f64>() / hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let f = (m..=high).rev().map(|j| ort[j] * h[(i, j)]).sum::<f64>() / hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }
}

fn hessenberg_qr(mut h: Mat) -> Result<Vec<Cplx>, LinalgError> {
    let nn = h.rows();
    let eps = f64::EPSILON;
    let mut re = vec![0.0; nn];
    let mut im = vec![0.0; nn];
    let mut exshift = 0.0;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let collect = |re: &[f64], im: &[f64], from: usize| -> Vec<Cplx> {
        (from..nn).map(|i| Cplx::new(re[i], im[i])).collect()
    };

    // `n` is the active trailing index; i64 so it can step below zero.
    let mut n = nn as i64 - 1;
    let mut iter = 0usize;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);

    while n >= 0 {
        let nu = n as usize;
        // Deflation point: smallest l with a negligible subdiagonal at l.
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            h[(nu, nu)] += exshift;
            re[nu] = h[(nu, nu)];
            im[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                re[nu - 1] = x + z;
                re[nu] = re[nu - 1];
                if z != 0.0 {
                    re[nu] = x - w / z;
                }
                im[nu - 1] = 0.0;
                im[nu] = 0.0;
            } else {
                re[nu - 1] = x + p;
                re[nu] = x + p;
                im[nu - 1] = z;
                im[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)];
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }
            // Exceptional shifts break cycles on matrices the standard shift cannot.
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(LinalgError::NoConvergence {
                    index: nu,
                    found: collect(&re, &im, nu + 1),
                });
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=n, columns m..=n.
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }

    Ok(collect(&re, &im, 0))
}

/// Principal n-th root: the root whose argument is `arg(z) / n`, with
/// `arg(z)` taken in `(-π, π]`.
pub fn principal_nth_root(z: Cplx, n: u32) -> Cplx {
    assert!(n >= 1, "root order must be at least 1");
    if n == 1 {
        return z;
    }
    let (r, mut theta) = z.to_polar();
    if r == 0.0 {
        return Cplx::new(0.0, 0.0);
    }
    // atan2(-0.0, x<0) is -π; the principal branch wants +π.
    if theta <= -std::f64::consts::PI {
        theta = std::f64::consts::PI;
    }
    Cplx::from_polar(r.powf(1.0 / n as f64), theta / n as f64)
}

/// Hausdorff distance between two finite point sets in the complex plane.
/// Returns 0 for two empty sets and infinity if exactly one is empty.
pub fn hausdorff_distance(a: &[Cplx], b: &[Cplx]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |from: &[Cplx], to: &[Cplx]| {
        from.iter()
            .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Mat {
        let data = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        Mat::from_vec(n, n, data).unwrap()
    }

    fn orthogonality_error(q: &Mat) -> f64 {
        q.transpose().matmul(q).max_abs_diff(&Mat::identity(q.rows()))
    }

    #[test]
    fn qr_identity() {
        let (q, r) = qr_decompose(&Mat::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((q[(i, j)].abs() - expect).abs() < 1e-14);
                assert!((r[(i, j)].abs() - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn qr_permutation() {
        let m = Mat::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let (q, r) = qr_decompose(&m).unwrap();
        assert!(orthogonality_error(&q) < 1e-12);
        assert_eq!(r[(1, 0)], 0.0);
        assert!((r[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((r[(1, 1)].abs() - 1.0).abs() < 1e-12);
        assert!(q.matmul(&r).max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn qr_reconstructs_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = gaussian(5, &mut rng);
        let (q, r) = qr_decompose(&m).unwrap();
        assert!(q.matmul(&r).max_abs_diff(&m) < 1e-10);
        assert!(orthogonality_error(&q) < 1e-10);
        for i in 1..5 {
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn qr_rejects_non_square() {
        assert!(matches!(qr_decompose(&Mat::zeros(2, 3)), Err(LinalgError::Dimension(_))));
    }

    #[test]
    fn haar_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = sample_haar_orthogonal(1, &mut rng).unwrap();
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!(sample_haar_orthogonal(0, &mut rng).is_err());

        let q4 = sample_haar_orthogonal(4, &mut rng).unwrap();
        assert!(orthogonality_error(&q4) < 1e-10);

        let a = sample_haar_orthogonal(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_haar_orthogonal(3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(a.max_abs_diff(&b) > 1e-3);
    }

    #[test]
    fn haar_first_entry_is_symmetric() {
        // Haar measure is invariant under negation of any row, so the sign of
        // Q[0,0] is a fair coin. Naive QR (positive-diagonal-R convention
        // skipped) biases it.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4000;
        let positive = (0..n)
            .filter(|_| sample_haar_orthogonal(3, &mut rng).unwrap()[(0, 0)] > 0.0)
            .count();
        let frac = positive as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.03, "fraction positive {frac}");
    }

    fn sorted(mut v: Vec<Cplx>) -> Vec<Cplx> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn eigenvalues_small_cases() {
        let d = Mat::from_rows(&[[2.0, 0.0], [0.0, 3.0]]).unwrap();
        let e = sorted(eigenvalues(&d).unwrap());
        assert!((e[0] - Cplx::new(2.0, 0.0)).norm() < 1e-14);
        assert!((e[1] - Cplx::new(3.0, 0.0)).norm() < 1e-14);

        let rot = Mat::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let e = sorted(eigenvalues(&rot).unwrap());
        assert!((e[0] - Cplx::new(0.0, -1.0)).norm() < 1e-14);
        assert!((e[1] - Cplx::new(0.0, 1.0)).norm() < 1e-14);

        // companion matrix of z² + z + 1
        let comp = Mat::from_rows(&[[0.0, 1.0], [-1.0, -1.0]]).unwrap();
        let e = eigenvalues(&comp).unwrap();
        let s3 = 3f64.sqrt() / 2.0;
        let expect = [Cplx::new(-0.5, s3), Cplx::new(-0.5, -s3)];
        assert!(hausdorff_distance(&e, &expect) < 1e-12);
    }

    #[test]
    fn eigenvalues_rejects_non_square() {
        assert!(eigenvalues(&Mat::zeros(3, 2)).is_err());
    }

    #[test]
    fn eigenvalues_of_triangular_are_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3, 7, 20] {
            let mut m = gaussian(n, &mut rng);
            for i in 0..n {
                for j in 0..i {
                    m[(i, j)] = 0.0;
                }
            }
            let diag: Vec<Cplx> = (0..n).map(|i| Cplx::new(m[(i, i)], 0.0)).collect();
            // similarity by a Haar matrix hides the structure
            let q = sample_haar_orthogonal(n, &mut rng).unwrap();
            let hidden = q.transpose().matmul(&m).matmul(&q);
            let e = eigenvalues(&hidden).unwrap();
            let d = hausdorff_distance(&e, &diag);
            // non-normal with close diagonal entries, so eigenvalues are ill-conditioned
            assert!(d < 1e-6, "n={n} d={d}");
        }
    }

    #[test]
    fn eigenvalues_are_conjugate_closed_and_match_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 2, 5, 16, 64] {
            let m = gaussian(n, &mut rng);
            let e = eigenvalues(&m).unwrap();
            assert_eq!(e.len(), n);
            for z in &e {
                assert!(e.iter().any(|w| (w - z.conj()).norm() < 1e-12));
            }
            let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
            let sum: Cplx = e.iter().sum();
            assert!((sum.re - trace).abs() < 1e-8 * (1.0 + trace.abs()) * n as f64);
            assert!(sum.im.abs() < 1e-9);
        }
    }

    #[test]
    fn principal_roots() {
        assert!((principal_nth_root(Cplx::new(4.0, 0.0), 2) - Cplx::new(2.0, 0.0)).norm() < 1e-15);
        assert!((principal_nth_root(Cplx::new(-1.0, 0.0), 2) - Cplx::new(0.0, 1.0)).norm() < 1e-15);
        assert!((principal_nth_root(Cplx::new(-1.0, -0.0), 2) - Cplx::new(0.0, 1.0)).norm() < 1e-15);
        let r = principal_nth_root(Cplx::new(-8.0, 0.0), 3);
        assert!((r - Cplx::new(1.0, 3f64.sqrt())).norm() < 1e-14);
        assert!((r.powu(3) - Cplx::new(-8.0, 0.0)).norm() < 1e-12 * 8.0);
        assert_eq!(principal_nth_root(Cplx::new(0.0, 0.0), 3), Cplx::new(0.0, 0.0));
    }

    #[test]
    fn hausdorff_basics() {
        let a = [Cplx::new(0.0, 0.0), Cplx::new(1.0, 0.0)];
        let b = [Cplx::new(0.0, 0.0)];
        assert_eq!(hausdorff_distance(&a, &b), 1.0);
        assert_eq!(hausdorff_distance(&[], &[]), 0.0);
        assert!(hausdorff_distance(&a, &[]).is_infinite());
    }
}
