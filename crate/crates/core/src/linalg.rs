//! Dense real matrices over MPFR floats and the handful of factorizations the
//! entanglement pipeline needs: cyclic Jacobi for symmetric eigenproblems,
//! Cholesky, LU inversion with iterative refinement and a Padé matrix
//! exponential.

use std::ops::{Index, IndexMut};

use rug::ops::{NegAssign, SubFrom};
use rug::{Assign, Float};

use crate::error::{Error, Result};
use crate::precision::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    prec: u32,
    data: Vec<Float>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        Self {
            rows,
            cols,
            prec,
            data: vec![Float::new(prec); rows * cols],
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Self::zeros(n, n, prec);
        for i in 0..n {
            m[(i, i)].assign(1);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, prec: u32, mut f: impl FnMut(usize, usize) -> Float) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(Float::with_val(prec, f(i, j)));
            }
        }
        Self { rows, cols, prec, data }
    }

    pub fn from_f64(rows: usize, cols: usize, prec: u32, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self::from_fn(rows, cols, prec, |i, j| Float::with_val(prec, values[i * cols + j]))
    }

    pub fn diag(values: &[Float], prec: u32) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n, prec);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)].assign(v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Float] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Float> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        Self::from_fn(self.rows, self.cols, prec, |i, j| self[(i, j)].clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.prec, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, rhs: &Mat) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols, self.prec);
        let rt = rhs.transpose();
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..rhs.cols {
                let b = rt.row(j);
                let acc = &mut out.data[i * rhs.cols + j];
                for k in 0..self.cols {
                    *acc += &a[k] * &b[k];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Float]) -> Vec<Float> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v, self.prec)).collect()
    }

    fn zip_with(&self, rhs: &Mat, f: impl Fn(&Float, &Float) -> Float) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            prec: self.prec,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, rhs: &Mat) -> Self {
        let p = self.prec;
        self.zip_with(rhs, |a, b| Float::with_val(p, a + b))
    }

    pub fn sub(&self, rhs: &Mat) -> Self {
        let p = self.prec;
        self.zip_with(rhs, |a, b| Float::with_val(p, a - b))
    }

    pub fn neg(&self) -> Self {
        self.scale(&Float::with_val(self.prec, -1))
    }

    pub fn scale(&self, s: &Float) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            prec: self.prec,
            data: self.data.iter().map(|a| Float::with_val(self.prec, a * s)).collect(),
        }
    }

    /// `self · a · selfᵀ`.
    pub fn congruence(&self, a: &Mat) -> Self {
        self.matmul(a).matmul(&self.transpose())
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, self.prec, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Mat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)].assign(&b[(i, j)]);
            }
        }
    }

    /// Block matrix from a row-major grid of equally sized blocks.
    pub fn from_blocks(grid: &[&[&Mat]]) -> Self {
        let br = grid[0][0].rows;
        let bc = grid[0][0].cols;
        let prec = grid[0][0].prec;
        let mut out = Self::zeros(br * grid.len(), bc * grid[0].len(), prec);
        for (bi, row) in grid.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                assert_eq!((b.rows, b.cols), (br, bc), "block shape mismatch");
                out.set_block(bi * br, bj * bc, b);
            }
        }
        out
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Mat) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols, self.prec);
        out.set_block(0, 0, self);
        out.set_block(self.rows, self.cols, other);
        out
    }

    pub fn max_abs(&self) -> Real {
        let mut m = Float::new(self.prec);
        for x in &self.data {
            if x.cmp_abs(&m) == Some(std::cmp::Ordering::Greater) {
                m.assign(&*x.as_abs());
            }
        }
        m
    }

    pub fn frobenius(&self) -> Real {
        let mut s = Float::new(self.prec);
        for x in &self.data {
            s += Float::with_val(self.prec, x.square_ref());
        }
        s.sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Largest absolute asymmetry `max |a_ij − a_ji|`.
    pub fn asymmetry(&self) -> Real {
        self.sub(&self.transpose()).max_abs()
    }

    pub fn trace(&self) -> Real {
        let mut t = Float::new(self.prec);
        for i in 0..self.rows.min(self.cols) {
            t += &self[(i, i)];
        }
        t
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].to_f64()).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = Float;
    fn index(&self, (i, j): (usize, usize)) -> &Float {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Float {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[Float], b: &[Float], prec: u32) -> Real {
    assert_eq!(a.len(), b.len());
    let mut acc = Float::new(prec);
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `xᵀ A y`.
pub fn bilinear(x: &[Float], a: &Mat, y: &[Float]) -> Real {
    dot(x, &a.mul_vec(y), a.prec())
}

pub fn norm(v: &[Float], prec: u32) -> Real {
    dot(v, v, prec).sqrt()
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Ascending eigenvalues.
    pub values: Vec<Real>,
    /// Column `k` is the unit eigenvector of `values[k]` (when requested).
    pub vectors: Option<Mat>,
    /// Frobenius norm of the off-diagonal mass discarded at convergence.
    pub offdiag: Real,
    /// Rounding error estimate `c · n · ε · ‖A‖_F` for the rotation sequence.
    pub rounding: Real,
}

impl SymEigen {
    /// Absolute error bound shared by every eigenvalue (Weyl).
    pub fn abs_bound(&self) -> Real {
        Float::with_val(self.offdiag.prec(), &self.offdiag + &self.rounding)
    }

    pub fn min(&self) -> &Real {
        &self.values[0]
    }

    pub fn max(&self) -> &Real {
        self.values.last().expect("empty spectrum")
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Cyclic Jacobi eigensolver.
///
/// Off-diagonal entries are annihilated until every `|a_pq|` falls below
/// `ε·sqrt(|a_pp a_qq|)`, which preserves relative accuracy of small
/// eigenvalues for well-scaled positive definite inputs.
pub fn sym_eigen(a: &Mat, want_vectors: bool) -> Result<SymEigen> {
    assert!(a.is_square(), "sym_eigen needs a square matrix");
    let n = a.rows();
    let prec = a.prec();
    let mut m = a.clone();
    // force exact symmetry from the upper triangle
    for i in 0..n {
        for j in 0..i {
            let v = m[(j, i)].clone();
            m[(i, j)].assign(&v);
        }
    }
    let mut v = want_vectors.then(|| Mat::identity(n, prec));
    let eps = Float::with_val(prec, Float::i_exp(1, 1 - prec as i32));
    let mut dropped = Float::new(prec);

    let mut theta = Float::new(prec);
    let mut t = Float::new(prec);
    let mut c = Float::new(prec);
    let mut s = Float::new(prec);
    let mut tau = Float::new(prec);
    let mut h = Float::new(prec);
    let mut g0 = Float::new(prec);
    let mut h0 = Float::new(prec);
    let mut t1 = Float::new(prec);
    let mut thresh = Float::new(prec);

    let mut converged = n <= 1;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let pq = p * n + q;
                if m.data[pq].is_zero() {
                    continue;
                }
                thresh.assign(&m.data[p * n + p] * &m.data[q * n + q]);
                thresh.abs_mut();
                thresh.sqrt_mut();
                thresh *= &eps;
                if m.data[pq].cmp_abs(&thresh) != Some(std::cmp::Ordering::Greater) {
                    dropped += Float::with_val(prec, m.data[pq].square_ref()) * 2u32;
                    m.data[pq].assign(0);
                    m.data[q * n + p].assign(0);
                    continue;
                }
                rotated = true;
                // theta = (a_qq - a_pp) / (2 a_pq)
                theta.assign(&m.data[q * n + q] - &m.data[p * n + p]);
                t1.assign(&m.data[pq] * 2u32);
                theta /= &t1;
                // t = sign(theta) / (|theta| + sqrt(theta^2 + 1))
                t.assign(theta.square_ref());
                t += 1u32;
                t.sqrt_mut();
                t1.assign(&*theta.as_abs());
                t += &t1;
                t.recip_mut();
                if theta.is_sign_negative() {
                    t.neg_assign();
                }
                c.assign(t.square_ref());
                c += 1u32;
                c.sqrt_mut();
                c.recip_mut();
                s.assign(&t * &c);
                tau.assign(&c + 1u32);
                tau.recip_mut();
                tau *= &s;
                h.assign(&t * &m.data[pq]);
                m.data[p * n + p] -= &h;
                m.data[q * n + q] += &h;
                m.data[pq].assign(0);
                m.data[q * n + p].assign(0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let kp = k * n + p;
                    let kq = k * n + q;
                    g0.assign(&m.data[kp]);
                    h0.assign(&m.data[kq]);
                    // a_kp = g - s (h + g tau)
                    t1.assign(&g0 * &tau);
                    t1 += &h0;
                    t1 *= &s;
                    m.data[kp].assign(&g0 - &t1);
                    // a_kq = h + s (g - h tau)
                    t1.assign(&h0 * &tau);
                    t1.sub_from(&g0);
                    t1 *= &s;
                    m.data[kq].assign(&h0 + &t1);
                    g0.assign(&m.data[kp]);
                    m.data[p * n + k].assign(&g0);
                    g0.assign(&m.data[kq]);
                    m.data[q * n + k].assign(&g0);
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let kp = k * n + p;
                        let kq = k * n + q;
                        g0.assign(&v.data[kp]);
                        h0.assign(&v.data[kq]);
                        t1.assign(&g0 * &tau);
                        t1 += &h0;
                        t1 *= &s;
                        v.data[kp].assign(&g0 - &t1);
                        t1.assign(&h0 * &tau);
                        t1.sub_from(&g0);
                        t1 *= &s;
                        v.data[kq].assign(&h0 + &t1);
                    }
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.data[i * n + i]
            .partial_cmp(&m.data[j * n + j])
            .expect("NaN eigenvalue")
    });
    let values = order.iter().map(|&i| m.data[i * n + i].clone()).collect();
    let vectors = v.map(|v| Mat::from_fn(n, n, prec, |i, j| v[(i, order[j])].clone()));
    let mut rounding = a.frobenius();
    rounding *= &eps;
    rounding *= (8 * n.max(1)) as u32;
    Ok(SymEigen {
        values,
        vectors,
        offdiag: dropped.sqrt(),
        rounding,
    })
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    assert!(a.is_square());
    let n = a.rows();
    let prec = a.prec();
    let mut l = Mat::zeros(n, n, prec);
    let mut acc = Float::new(prec);
    for j in 0..n {
        acc.assign(&a[(j, j)]);
        for k in 0..j {
            acc -= Float::with_val(prec, l[(j, k)].square_ref());
        }
        if acc <= 0 {
            return Err(Error::NotPositiveDefinite(format!("pivot {j} is {}", acc.to_f64())));
        }
        let ljj = Float::with_val(prec, acc.sqrt_ref());
        for i in j + 1..n {
            acc.assign(&a[(i, j)]);
            for k in 0..j {
                acc -= &l[(i, k)] * &l[(j, k)];
            }
            l[(i, j)].assign(&acc / &ljj);
        }
        l[(j, j)] = ljj;
    }
    Ok(l)
}

/// Solve `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Mat, b: &[Float]) -> Vec<Float> {
    let n = l.rows();
    let prec = l.prec();
    let mut x: Vec<Float> = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Float::with_val(prec, &b[i]);
        for (k, xk) in x.iter().enumerate() {
            acc -= &l[(i, k)] * xk;
        }
        acc /= &l[(i, i)];
        x.push(acc);
    }
    x
}

/// Solve `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Mat, b: &[Float]) -> Vec<Float> {
    let n = l.rows();
    let prec = l.prec();
    let mut x = vec![Float::new(prec); n];
    for i in (0..n).rev() {
        let mut acc = Float::with_val(prec, &b[i]);
        for k in i + 1..n {
            acc -= &l[(k, i)] * &x[k];
        }
        acc /= &l[(i, i)];
        x[i] = acc;
    }
    x
}

struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

fn lu_factor(a: &Mat) -> Result<Lu> {
    let n = a.rows();
    let prec = a.prec();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut factor = Float::new(prec);
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[(i, k)].cmp_abs(&lu[(piv, k)]) == Some(std::cmp::Ordering::Greater) {
                piv = i;
            }
        }
        if lu[(piv, k)].is_zero() {
            return Err(Error::Singular(format!("zero pivot in column {k}")));
        }
        if piv != k {
            for j in 0..n {
                lu.data.swap(k * n + j, piv * n + j);
            }
            perm.swap(k, piv);
        }
        for i in k + 1..n {
            factor.assign(&lu[(i, k)] / &lu[(k, k)]);
            lu[(i, k)].assign(&factor);
            for j in k + 1..n {
                let t = Float::with_val(prec, &factor * &lu[(k, j)]);
                lu[(i, j)] -= &t;
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, b: &[Float]) -> Vec<Float> {
        let n = self.lu.rows();
        let prec = self.lu.prec();
        let mut y: Vec<Float> = self.perm.iter().map(|&p| Float::with_val(prec, &b[p])).collect();
        for i in 0..n {
            for k in 0..i {
                let t = Float::with_val(prec, &self.lu[(i, k)] * &y[k]);
                y[i] -= &t;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = Float::with_val(prec, &self.lu[(i, k)] * &y[k]);
                y[i] -= &t;
            }
            y[i] /= &self.lu[(i, i)];
        }
        y
    }

    fn inverse(&self) -> Mat {
        let n = self.lu.rows();
        let prec = self.lu.prec();
        let mut inv = Mat::zeros(n, n, prec);
        let mut e = vec![Float::new(prec); n];
        for j in 0..n {
            e[j].assign(1);
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
            e[j].assign(0);
        }
        inv
    }
}

/// Inverse together with its residual `max |A·A⁻¹ − 𝟙|`.
#[derive(Clone, Debug)]
pub struct Inverse {
    pub inv: Mat,
    pub residual: Real,
}

/// LU inverse with one step of iterative refinement, `X ← X + X(𝟙 − A X)`.
pub fn inverse(a: &Mat) -> Result<Inverse> {
    assert!(a.is_square());
    let n = a.rows();
    let prec = a.prec();
    let lu = lu_factor(a)?;
    let x0 = lu.inverse();
    let id = Mat::identity(n, prec);
    let r0 = id.sub(&a.matmul(&x0));
    let x1 = x0.add(&x0.matmul(&r0));
    let residual = id.sub(&a.matmul(&x1)).max_abs();
    Ok(Inverse { inv: x1, residual })
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// whose degree is chosen from the working precision.
pub fn expm(a: &Mat) -> Result<Mat> {
    assert!(a.is_square());
    let n = a.rows();
    let prec = a.prec();
    // one-norm
    let mut norm1 = Float::new(prec);
    for j in 0..n {
        let mut s = Float::new(prec);
        for i in 0..n {
            s += &*a[(i, j)].as_abs();
        }
        if s > norm1 {
            norm1 = s;
        }
    }
    let mut squarings = 0u32;
    let half = Float::with_val(prec, 0.5);
    let mut scaled_norm = norm1.clone();
    while scaled_norm > half {
        scaled_norm /= 2u32;
        squarings += 1;
    }
    // smallest q with 2^(3-2q) (q!)^2 / ((2q)! (2q+1)!) < 2^-prec
    let mut q = 1u32;
    loop {
        let mut log2_bound = 3.0 - 2.0 * q as f64;
        log2_bound += 2.0 * ln_factorial(q) / std::f64::consts::LN_2;
        log2_bound -= (ln_factorial(2 * q) + ln_factorial(2 * q + 1)) / std::f64::consts::LN_2;
        if log2_bound < -(prec as f64) - 2.0 || q > 200 {
            break;
        }
        q += 1;
    }
    let scale = Float::with_val(prec, Float::i_exp(1, -(squarings as i32)));
    let x = a.scale(&scale);
    let mut num = Mat::identity(n, prec);
    let mut den = Mat::identity(n, prec);
    let mut power = Mat::identity(n, prec);
    let mut coeff = Float::with_val(prec, 1);
    for k in 1..=q {
        // c_k = c_{k-1} (q - k + 1) / ((2q - k + 1) k)
        coeff *= q - k + 1;
        coeff /= (2 * q - k + 1) * k;
        power = power.matmul(&x);
        let term = power.scale(&coeff);
        num = num.add(&term);
        den = if k % 2 == 0 { den.add(&term) } else { den.sub(&term) };
    }
    let lu = lu_factor(&den)?;
    let mut r = Mat::zeros(n, n, prec);
    for j in 0..n {
        let col = lu.solve(&num.col(j));
        for (i, v) in col.into_iter().enumerate() {
            r[(i, j)] = v;
        }
    }
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn close(a: &Float, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol
    }

    #[test]
    fn jacobi_two_by_two() {
        let a = Mat::from_f64(2, 2, P, &[2.0, 1.0, 1.0, 2.0]);
        let e = sym_eigen(&a, true).unwrap();
        assert!(close(&e.values[0], 1.0, 1e-15));
        assert!(close(&e.values[1], 3.0, 1e-15));
        let v = e.vectors.unwrap();
        // A v = λ v
        let av = a.mul_vec(&v.col(1));
        for i in 0..2 {
            let r = Float::with_val(P, &av[i] - &v[(i, 1)] * Float::with_val(P, 3));
            assert!(r.to_f64().abs() < 1e-70);
        }
    }

    #[test]
    fn jacobi_reconstructs_hilbert_matrix() {
        let n = 8;
        let a = Mat::from_fn(n, n, P, |i, j| Float::with_val(P, 1) / Float::with_val(P, i + j + 1));
        let e = sym_eigen(&a, true).unwrap();
        let v = e.vectors.clone().unwrap();
        let rebuilt = v.matmul(&Mat::diag(&e.values, P)).matmul(&v.transpose());
        assert!(rebuilt.sub(&a).max_abs().to_f64() < 1e-70);
        // smallest Hilbert eigenvalue for n = 8 is 1.11153896e-10
        assert!((e.values[0].to_f64() / 1.111_538_966_946_1e-10 - 1.0).abs() < 1e-9);
        assert!(e.abs_bound().to_f64() < 1e-70);
    }

    #[test]
    fn cholesky_and_triangular_solves() {
        let a = Mat::from_f64(3, 3, P, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let l = cholesky(&a).unwrap();
        assert!(l.matmul(&l.transpose()).sub(&a).max_abs().to_f64() < 1e-70);
        let b: Vec<Float> = [1.0, -2.0, 0.5].iter().map(|&x| Float::with_val(P, x)).collect();
        let y = solve_lower(&l, &b);
        let x = solve_lower_transpose(&l, &y);
        let ax = a.mul_vec(&x);
        for i in 0..3 {
            assert!(Float::with_val(P, &ax[i] - &b[i]).to_f64().abs() < 1e-70);
        }
        let not_pd = Mat::from_f64(2, 2, P, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky(&not_pd), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn lu_inverse_with_refinement() {
        let a = Mat::from_f64(3, 3, P, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let inv = inverse(&a).unwrap();
        assert!(inv.residual.to_f64() < 1e-70);
        let singular = Mat::from_f64(2, 2, P, &[1.0, 2.0, 2.0, 4.0]);
        assert!(inverse(&singular).is_err());
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp([[0, θ], [-θ, 0]]) = [[cos θ, sin θ], [-sin θ, cos θ]]
        let theta = 1.3_f64;
        let a = Mat::from_f64(2, 2, P, &[0.0, theta, -theta, 0.0]);
        let e = expm(&a).unwrap();
        let th = Float::with_val(P, theta);
        let c = Float::with_val(P, th.cos_ref());
        let s = Float::with_val(P, th.sin_ref());
        let diff = [
            Float::with_val(P, &e[(0, 0)] - &c),
            Float::with_val(P, &e[(0, 1)] - &s),
            Float::with_val(P, &e[(1, 0)] + &s),
            Float::with_val(P, &e[(1, 1)] - &c),
        ];
        for d in diff {
            assert!(d.to_f64().abs() < 1e-70, "{}", d);
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Mat::zeros(4, 4, P);
        assert_eq!(expm(&z).unwrap(), Mat::identity(4, P));
    }
}
