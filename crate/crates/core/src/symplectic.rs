//! Symplectic eigenvalues and normal-form bases.
//!
//! For a CM without field-momentum correlations, `σ = X ⊕ P`, the symplectic
//! eigenvalues are `√spec(XP)`. With `P = L Lᵀ` they are the square roots of
//! the eigenvalues of the symmetric matrix `M = Lᵀ X L`, and an orthonormal
//! eigenvector `w` of `M` gives the canonical pair
//!
//! ```text
//! φ-row  a = L w / √ν,   π-row  b = L⁻ᵀ w · √ν,   aᵀb = 1,  aᵀXa = bᵀPb = ν.
//! ```

use rug::Float;
use serde::Serialize;

use crate::cmkit::{plus_minus_split, RegionPairCM};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, solve_lower_transpose, sym_eigen, Mat, SymEigen};
use crate::precision::{pow10, PrecisionPolicy, Real};

/// `Ω = [[0, 𝟙ₙ], [−𝟙ₙ, 0]]`.
pub fn symplectic_form(n: usize, prec: u32) -> Mat {
    Mat::from_fn(2 * n, 2 * n, prec, |i, j| {
        if j == i + n {
            Float::with_val(prec, 1)
        } else if i == j + n {
            Float::with_val(prec, -1)
        } else {
            Float::new(prec)
        }
    })
}

/// `max |S Ω Sᵀ − Ω|`.
pub fn check_symplectic(s: &Mat) -> Real {
    assert!(s.is_square() && s.rows().is_multiple_of(2), "symplectic matrices are 2n × 2n");
    let omega = symplectic_form(s.rows() / 2, s.prec());
    s.matmul(&omega).matmul(&s.transpose()).sub(&omega).max_abs()
}

#[derive(Clone, Debug, Serialize)]
pub struct SymplecticSpectrum {
    /// Ascending; each value stands for a degenerate pair of the full spectrum.
    #[serde(serialize_with = "crate::precision::ser_reals")]
    pub values: Vec<Real>,
    /// Certified absolute error bound per value.
    #[serde(serialize_with = "crate::precision::ser_reals")]
    pub margins: Vec<Real>,
    /// Values certified below one (`ν < 1 − 10·margin`).
    pub n_minus: usize,
    /// Values whose margin straddles one.
    pub n_undecided: usize,
}

impl SymplecticSpectrum {
    fn new(values: Vec<Real>, margins: Vec<Real>) -> Self {
        let mut n_minus = 0;
        let mut n_undecided = 0;
        for (v, m) in values.iter().zip(&margins) {
            let band = Float::with_val(v.prec(), m * 10u32);
            if *v < Float::with_val(v.prec(), 1u32 - &band) {
                n_minus += 1;
            } else if *v <= Float::with_val(v.prec(), 1u32 + &band) {
                n_undecided += 1;
            }
        }
        Self { values, margins, n_minus, n_undecided }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> &Real {
        &self.values[0]
    }

    pub fn is_decided(&self) -> bool {
        self.n_undecided == 0
    }

    /// Merge of two spectra, re-sorted.
    pub fn union(&self, other: &Self) -> Self {
        let mut pairs: Vec<(Real, Real)> = self
            .values
            .iter()
            .cloned()
            .zip(self.margins.iter().cloned())
            .chain(other.values.iter().cloned().zip(other.margins.iter().cloned()))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN in spectrum"));
        let (values, margins) = pairs.into_iter().unzip();
        Self::new(values, margins)
    }
}

/// `ν − √(ν² − δ)`, the worst-case shift of ν when ν² moves by δ.
fn nu_margin(nu2: &Real, delta: &Real) -> Real {
    let prec = nu2.prec();
    let nu = Float::with_val(prec, nu2.sqrt_ref());
    let mut lower = Float::with_val(prec, nu2 - delta);
    if lower.is_sign_negative() {
        lower = Float::new(prec);
    }
    lower.sqrt_mut();
    nu - lower
}

/// Cholesky-symmetrized product eigenproblem.
pub(crate) struct ProductDecomp {
    pub l: Mat,
    pub eig: SymEigen,
    pub nu: Vec<Real>,
    pub margins: Vec<Real>,
}

/// Solves `XP` through `M = Lᵀ X L`. `x_err`, `p_err` bound (in Frobenius
/// norm) how far the inputs are from the exact blocks.
pub(crate) fn product_decomp(x: &Mat, p: &Mat, x_err: &Real, p_err: &Real, want_vectors: bool) -> Result<ProductDecomp> {
    let n = x.rows();
    let prec = x.prec();
    let l = cholesky(p)?;
    let mut m = l.transpose().matmul(&x.matmul(&l));
    // enforce exact symmetry
    for i in 0..n {
        for j in 0..i {
            let avg = Float::with_val(prec, &m[(i, j)] + &m[(j, i)]) / 2u32;
            m[(i, j)] = avg.clone();
            m[(j, i)] = avg;
        }
    }
    let eig = sym_eigen(&m, want_vectors)?;
    let eps = Float::with_val(prec, Float::i_exp(1, 1 - prec as i32));
    let xf = x.frobenius();
    let pf = p.frobenius();
    let mut delta = eig.abs_bound();
    delta += Float::with_val(prec, &eps * &xf) * &pf * (4 * n * n) as u32;
    delta += Float::with_val(prec, &pf * x_err);
    delta += Float::with_val(prec, &xf * p_err);
    let mut nu = Vec::with_capacity(n);
    let mut margins = Vec::with_capacity(n);
    for v in &eig.values {
        if *v <= delta {
            return Err(Error::NotPositiveDefinite(format!(
                "product spectrum has a non-positive eigenvalue {} (bound {})",
                v.to_f64(),
                delta.to_f64()
            )));
        }
        nu.push(Float::with_val(prec, v.sqrt_ref()));
        margins.push(nu_margin(v, &delta));
    }
    Ok(ProductDecomp { l, eig, nu, margins })
}

/// `√spec(XP)` for symmetric positive definite `X`, `P`, treating the inputs
/// as exact up to working precision.
pub fn product_spectrum(x: &Mat, p: &Mat, policy: &PrecisionPolicy) -> Result<SymplecticSpectrum> {
    let _ = policy;
    let zero = Float::new(x.prec());
    let d = product_decomp(x, p, &zero, &zero, false)?;
    Ok(SymplecticSpectrum::new(d.nu, d.margins))
}

fn is_block_diagonal(sigma: &Mat) -> bool {
    let n = sigma.rows() / 2;
    (0..n).all(|i| (0..n).all(|j| sigma[(i, j + n)].is_zero() && sigma[(i + n, j)].is_zero()))
}

/// Williamson spectrum of a `2n × 2n` positive definite CM. Block-diagonal
/// inputs use the product form; others go through [`williamson_spectrum_general`].
pub fn williamson_spectrum(sigma: &Mat, policy: &PrecisionPolicy) -> Result<SymplecticSpectrum> {
    check_cm_shape(sigma)?;
    if is_block_diagonal(sigma) {
        let n = sigma.rows() / 2;
        let x = sigma.block(0, 0, n, n);
        let p = sigma.block(n, n, n, n);
        product_spectrum(&x, &p, policy)
    } else {
        williamson_spectrum_general(sigma, policy)
    }
}

fn check_cm_shape(sigma: &Mat) -> Result<()> {
    if !sigma.is_square() || !sigma.rows().is_multiple_of(2) || sigma.rows() == 0 {
        return Err(Error::InvalidInput("a CM must be 2n × 2n".into()));
    }
    if !sigma.is_symmetric() {
        return Err(Error::InvalidInput("a CM must be symmetric".into()));
    }
    Ok(())
}

/// Williamson spectrum from the eigenvalues of `AᵀA`, `A = Lᵀ Ω L`,
/// `σ = L Lᵀ`. Every eigenvalue of `AᵀA` is a doubly degenerate `ν²`.
pub fn williamson_spectrum_general(sigma: &Mat, policy: &PrecisionPolicy) -> Result<SymplecticSpectrum> {
    check_cm_shape(sigma)?;
    let dim = sigma.rows();
    let prec = sigma.prec();
    let l = cholesky(sigma)?;
    let omega = symplectic_form(dim / 2, prec);
    let a = l.transpose().matmul(&omega.matmul(&l));
    let mut b = a.transpose().matmul(&a);
    for i in 0..dim {
        for j in 0..i {
            let avg = Float::with_val(prec, &b[(i, j)] + &b[(j, i)]) / 2u32;
            b[(i, j)] = avg.clone();
            b[(j, i)] = avg;
        }
    }
    let eig = sym_eigen(&b, false)?;
    let eps = Float::with_val(prec, Float::i_exp(1, 1 - prec as i32));
    let sf = sigma.frobenius();
    let mut delta = eig.abs_bound();
    delta += Float::with_val(prec, &eps * &sf) * &sf * (8 * dim * dim) as u32;
    let pair_tol = pow10(prec, -((policy.target_digits / 2) as i32));
    let mut values = Vec::with_capacity(dim / 2);
    let mut margins = Vec::with_capacity(dim / 2);
    for k in 0..dim / 2 {
        let (u, v) = (&eig.values[2 * k], &eig.values[2 * k + 1]);
        let gap = Float::with_val(prec, v - u).abs();
        let scale = Float::with_val(prec, &*v.as_abs() * &pair_tol) + &delta;
        if gap > scale {
            return Err(Error::Inconsistency(format!(
                "unpaired symplectic spectrum: {} vs {}",
                u.to_f64(),
                v.to_f64()
            )));
        }
        if *u <= delta {
            return Err(Error::NotPositiveDefinite("zero symplectic eigenvalue".into()));
        }
        let nu2 = Float::with_val(prec, u + v) / 2u32;
        values.push(Float::with_val(prec, nu2.sqrt_ref()));
        let d = Float::with_val(prec, &delta + &gap);
        margins.push(nu_margin(&nu2, &d));
    }
    Ok(SymplecticSpectrum::new(values, margins))
}

/// Smallest eigenvalue of the Hermitian matrix `σ + iΩ`, from its real
/// representation `[[σ, −Ω], [Ω, σ]]`. Non-negative iff σ is physical.
pub fn physical_min_eig(sigma: &Mat) -> Result<Real> {
    check_cm_shape(sigma)?;
    let prec = sigma.prec();
    let omega = symplectic_form(sigma.rows() / 2, prec);
    let h = Mat::from_blocks(&[&[sigma, &omega.neg()], &[&omega, sigma]]);
    let e = sym_eigen(&h, false)?;
    Ok(e.min().clone())
}

/// Perturbation of the blocks relative to their exact values, from the
/// correlator error bounds (every entry carries `2^(10−bits)` relative).
fn block_error(cm: &RegionPairCM, a: &Mat, ab: &Mat) -> Real {
    let prec = cm.prec();
    let eps_in = Float::with_val(prec, Float::i_exp(1, 10 - prec as i32));
    Float::with_val(prec, &a.frobenius() + &ab.frobenius()) * eps_in
}

/// PT symplectic spectrum split by sector: `(minus, plus)` where
/// `minus = √spec((phiA − phiAB)(piA + piAB))` carries every value below one
/// and `plus = √spec((phiA + phiAB)(piA − piAB))` is always at least one.
pub fn pt_spectrum_reduced(cm: &RegionPairCM) -> Result<(SymplecticSpectrum, SymplecticSpectrum)> {
    let (minus, plus) = reduced_decomps(cm, false)?;
    Ok((
        SymplecticSpectrum::new(minus.nu, minus.margins),
        SymplecticSpectrum::new(plus.nu, plus.margins),
    ))
}

fn reduced_decomps(cm: &RegionPairCM, want_vectors: bool) -> Result<(ProductDecomp, ProductDecomp)> {
    if cm.pt_flag {
        return Err(Error::InvalidInput("pass the untransposed CM; the transpose is applied internally".into()));
    }
    let (plus, minus) = plus_minus_split(cm, true);
    let xe = block_error(cm, &cm.phi_a, &cm.phi_ab);
    let pe = block_error(cm, &cm.pi_a, &cm.pi_ab);
    let m = product_decomp(&minus.phi, &minus.pi, &xe, &pe, want_vectors)?;
    let p = product_decomp(&plus.phi, &plus.pi, &xe, &pe, want_vectors)?;
    Ok((m, p))
}

/// The two PT sectors. `VN` is AB-antisymmetric and holds all negativity;
/// `VNSlash` is AB-symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sector {
    #[serde(rename = "V_N")]
    VN,
    #[serde(rename = "V_N_slash")]
    VNSlash,
}

/// Canonical row vectors diagonalizing one PT sector.
#[derive(Clone, Debug)]
pub struct NormalFormBasis {
    pub sector: Sector,
    pub d: usize,
    /// Ascending PT symplectic eigenvalues of the sector.
    pub values: Vec<Real>,
    pub margins: Vec<Real>,
    /// Region-A field coefficients `a_k` (length d); B carries `∓a_k` by symmetry.
    pub phi_half: Vec<Vec<Real>>,
    /// Region-A momentum coefficients `b_k`.
    pub pi_half: Vec<Vec<Real>>,
}

impl NormalFormBasis {
    fn sign(&self) -> i32 {
        match self.sector {
            Sector::VN => -1,
            Sector::VNSlash => 1,
        }
    }

    fn embed(&self, half: &[Real], offset: usize) -> Vec<Real> {
        let d = self.d;
        let prec = half[0].prec();
        let mut s2 = Float::with_val(prec, 2);
        s2.sqrt_mut();
        let mut row = vec![Float::new(prec); 4 * d];
        for (i, x) in half.iter().enumerate() {
            let v = Float::with_val(prec, x / &s2);
            row[offset + d + i] = Float::with_val(prec, &v * self.sign());
            row[offset + i] = v;
        }
        row
    }

    /// Full `4d` field row of mode `k` in CM ordering.
    pub fn phi_row(&self, k: usize) -> Vec<Real> {
        self.embed(&self.phi_half[k], 0)
    }

    /// Full `4d` momentum row of mode `k` in CM ordering.
    pub fn pi_row(&self, k: usize) -> Vec<Real> {
        self.embed(&self.pi_half[k], 2 * self.d)
    }

    /// `2d × 4d` matrix: field rows of every mode, then momentum rows.
    pub fn matrix(&self) -> Mat {
        let d = self.d;
        let prec = self.values[0].prec();
        let mut s = Mat::zeros(2 * d, 4 * d, prec);
        for k in 0..d {
            for (j, v) in self.phi_row(k).into_iter().enumerate() {
                s[(k, j)] = v;
            }
            for (j, v) in self.pi_row(k).into_iter().enumerate() {
                s[(d + k, j)] = v;
            }
        }
        s
    }
}

/// Stacks the two sectors into a `4d × 4d` symplectic matrix with mode order
/// (first sector's modes, second sector's modes).
pub fn stack_bases(first: &NormalFormBasis, second: &NormalFormBasis) -> Mat {
    let d = first.d;
    let a = first.matrix();
    let b = second.matrix();
    let mut s = Mat::zeros(4 * d, 4 * d, a.prec());
    let take = |s: &mut Mat, src: &Mat, from: usize, to: usize| {
        for j in 0..4 * d {
            s[(to, j)] = src[(from, j)].clone();
        }
    };
    for k in 0..d {
        take(&mut s, &a, k, k);
        take(&mut s, &b, k, d + k);
        take(&mut s, &a, d + k, 2 * d + k);
        take(&mut s, &b, d + k, 3 * d + k);
    }
    s
}

/// Orthonormal basis of span(W) from projecting e₀, e₁, … in turn. Makes the
/// basis of a degenerate cluster independent of the eigensolver's choice.
fn canonical_cluster(cols: &[Vec<Real>]) -> Vec<Vec<Real>> {
    let k = cols.len();
    let n = cols[0].len();
    let prec = cols[0][0].prec();
    let mut out: Vec<Vec<Real>> = Vec::with_capacity(k);
    for i in 0..n {
        if out.len() == k {
            break;
        }
        // projection of e_i onto span(W)
        let mut v = vec![Float::new(prec); n];
        for c in cols {
            for (vj, cj) in v.iter_mut().zip(c) {
                *vj += Float::with_val(prec, cj * &c[i]);
            }
        }
        for u in &out {
            let h = dot(u, &v, prec);
            for (vj, uj) in v.iter_mut().zip(u) {
                *vj -= Float::with_val(prec, uj * &h);
            }
        }
        let nv = dot(&v, &v, prec).sqrt();
        if nv > 1e-3 / (n as f64).sqrt() {
            for x in v.iter_mut() {
                *x /= &nv;
            }
            out.push(v);
        }
    }
    out
}

/// Normal-form rows of one PT sector of `cm` (untransposed input).
pub fn normal_form_basis(cm: &RegionPairCM, sector: Sector) -> Result<NormalFormBasis> {
    let (minus, plus) = reduced_decomps(cm, true)?;
    let dec = match sector {
        Sector::VN => minus,
        Sector::VNSlash => plus,
    };
    let d = cm.d();
    let prec = cm.prec();
    let vectors = dec.eig.vectors.as_ref().expect("vectors requested");
    let mut ws: Vec<Vec<Real>> = (0..d).map(|k| vectors.col(k)).collect();

    let tol = pow10(prec, -((cm.policy().target_digits / 2) as i32));
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d {
            let gap = Float::with_val(prec, &dec.eig.values[end] - &dec.eig.values[start]);
            if gap > Float::with_val(prec, &*dec.eig.values[end].as_abs() * &tol) {
                break;
            }
            end += 1;
        }
        if end - start > 1 {
            let canon = canonical_cluster(&ws[start..end]);
            if canon.len() != end - start {
                return Err(Error::Inconsistency("degenerate cluster lost rank".into()));
            }
            for (slot, v) in ws[start..end].iter_mut().zip(canon) {
                *slot = v;
            }
        }
        start = end;
    }

    let mut phi_half = Vec::with_capacity(d);
    let mut pi_half = Vec::with_capacity(d);
    for (k, w) in ws.iter().enumerate() {
        let sq = Float::with_val(prec, dec.nu[k].sqrt_ref());
        let mut a = dec.l.mul_vec(w);
        let mut b = solve_lower_transpose(&dec.l, w);
        // gauge: the largest field coefficient is positive
        let mut imax = 0;
        for (i, x) in a.iter().enumerate() {
            if x.cmp_abs(&a[imax]) == Some(std::cmp::Ordering::Greater) {
                imax = i;
            }
        }
        let flip = a[imax].is_sign_negative();
        for x in a.iter_mut() {
            *x /= &sq;
            if flip {
                *x = -x.clone();
            }
        }
        for x in b.iter_mut() {
            *x *= &sq;
            if flip {
                *x = -x.clone();
            }
        }
        phi_half.push(a);
        pi_half.push(b);
    }
    Ok(NormalFormBasis {
        sector,
        d,
        values: dec.nu,
        margins: dec.margins,
        phi_half,
        pi_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 200;

    #[test]
    fn omega_properties() {
        let o = symplectic_form(3, P);
        assert_eq!(o.matmul(&o), Mat::identity(6, P).neg());
        assert_eq!(o.transpose(), o.neg());
        assert_eq!(symplectic_form(1, P), Mat::from_f64(2, 2, P, &[0.0, 1.0, -1.0, 0.0]));
        assert!(check_symplectic(&Mat::identity(4, P)).is_zero());
    }

    #[test]
    fn scalar_rescaling_spectrum() {
        let pol = PrecisionPolicy::for_target(40);
        let x = Mat::identity(3, P).scale(&Float::with_val(P, 2));
        let p = Mat::identity(3, P).scale(&Float::with_val(P, 8));
        let s = williamson_spectrum(&x.direct_sum(&p), &pol).unwrap();
        for v in &s.values {
            assert!((v.to_f64() - 4.0).abs() < 1e-40);
        }
        let g = williamson_spectrum_general(&x.direct_sum(&p), &pol).unwrap();
        for v in &g.values {
            assert!((v.to_f64() - 4.0).abs() < 1e-30);
        }
    }

    #[test]
    fn general_route_handles_correlated_cm() {
        // single mode [[a, c], [c, b]]: ν = √(ab − c²)
        let pol = PrecisionPolicy::for_target(40);
        let s = Mat::from_f64(2, 2, P, &[2.0, 0.5, 0.5, 3.0]);
        let g = williamson_spectrum(&s, &pol).unwrap();
        assert!((g.values[0].to_f64() - (6.0f64 - 0.25).sqrt()).abs() < 1e-14);
        assert!(physical_min_eig(&s).unwrap() > 0);
    }

    #[test]
    fn classification_uses_margin_band() {
        let one = Float::with_val(P, 1);
        let tiny = Float::with_val(P, 1e-30);
        let below = Float::with_val(P, 1) - Float::with_val(P, 1e-20);
        let s = SymplecticSpectrum::new(vec![below, one], vec![tiny.clone(), tiny]);
        assert_eq!(s.n_minus, 1);
        assert_eq!(s.n_undecided, 1);
    }
}
