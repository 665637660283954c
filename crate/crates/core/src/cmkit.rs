//! Region-pair covariance matrices of the lattice vacuum.
//!
//! Two regions of `d` sites separated by `r̃` sites. Modes are ordered
//! `(φ_{A_d} … φ_{A_1}, φ_{B_1} … φ_{B_d}, π_{A_d} … π_{A_1}, π_{B_1} … π_{B_d})`,
//! where `A_d` and `B_1` face each other across the gap. In this ordering the
//! region blocks are Toeplitz and the cross blocks are Hankel:
//!
//! ```text
//! (phiA)_ij  = 2⟨φ₀φ_|i−j|⟩        (phiAB)_ij = 2⟨φ₀φ_(r̃+i+j+1)⟩
//! ```
//!
//! and likewise for momenta.

use rug::{Float, Rational};
use serde::Serialize;

use crate::corrlat::{corr_table, CorrelationTable};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, inverse, sym_eigen, Mat};
use crate::precision::{format_rational, Mass, PrecisionPolicy, Real};
use crate::symplectic;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeConfig {
    pub d: usize,
    pub r_tilde: usize,
    pub m: Mass,
    pub policy: PrecisionPolicy,
}

impl LatticeConfig {
    pub fn new(d: usize, r_tilde: usize, m: Mass, policy: PrecisionPolicy) -> Result<Self> {
        let c = Self { d, r_tilde, m, policy };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidInput("region size d must be at least 1".into()));
        }
        if self.r_tilde == 0 {
            return Err(Error::InvalidInput("separation r_tilde must be at least 1".into()));
        }
        self.policy.validate()
    }

    /// `m·d`, exact.
    pub fn md(&self) -> Rational {
        self.m.times(self.d)
    }

    /// `m·r̃`, exact.
    pub fn mrt(&self) -> Rational {
        self.m.times(self.r_tilde)
    }

    /// Largest correlator offset the blocks need.
    pub fn n_max(&self) -> usize {
        self.r_tilde + 2 * self.d - 1
    }

    pub fn with_policy(&self, policy: PrecisionPolicy) -> Self {
        Self { policy, ..self.clone() }
    }

    pub fn label(&self) -> String {
        format!("d={} r_tilde={} m={}", self.d, self.r_tilde, format_rational(self.m.as_rational()))
    }
}

/// Mode ordering of the blocks. Only the one described in the module docs exists.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Ordering {
    #[default]
    MirroredA,
}

#[derive(Clone, Debug)]
pub struct RegionPairCM {
    pub config: LatticeConfig,
    pub phi_a: Mat,
    pub phi_ab: Mat,
    pub pi_a: Mat,
    pub pi_ab: Mat,
    pub ordering: Ordering,
    /// Whether the B momenta have been sign-flipped (partial transpose).
    pub pt_flag: bool,
}

impl RegionPairCM {
    pub fn d(&self) -> usize {
        self.config.d
    }

    pub fn policy(&self) -> &PrecisionPolicy {
        &self.config.policy
    }

    pub fn prec(&self) -> u32 {
        self.phi_a.prec()
    }

    /// The four blocks in a fixed order with their names.
    pub fn blocks(&self) -> [(&'static str, &Mat); 4] {
        [
            ("phiA", &self.phi_a),
            ("phiAB", &self.phi_ab),
            ("piA", &self.pi_a),
            ("piAB", &self.pi_ab),
        ]
    }

    /// Same blocks with B momenta sign-flipped, regardless of the current flag.
    pub fn flip_b_momenta(&self) -> Self {
        Self {
            pi_ab: self.pi_ab.neg(),
            pt_flag: !self.pt_flag,
            ..self.clone()
        }
    }
}

fn blocks_from_table(t: &CorrelationTable, d: usize, r: usize) -> [Mat; 4] {
    let prec = t.policy.bits();
    let toeplitz = |vals: &[Real]| Mat::from_fn(d, d, prec, |i, j| vals[i.abs_diff(j)].clone());
    let hankel = |vals: &[Real]| Mat::from_fn(d, d, prec, |i, j| vals[r + i + j + 1].clone());
    [
        toeplitz(&t.phi_vals),
        hankel(&t.phi_vals),
        toeplitz(&t.pi_vals),
        hankel(&t.pi_vals),
    ]
}

/// Builds the blocks and checks symmetry and positive definiteness of the
/// region blocks. Skips the eigenvalue-based checks of
/// [`build_region_pair_cm`]; meant for sweeps that certify their results
/// downstream.
pub fn build_region_pair_cm_unchecked(config: &LatticeConfig) -> Result<RegionPairCM> {
    config.validate()?;
    let table = corr_table(config.n_max(), &config.m, &config.policy)?;
    let [phi_a, phi_ab, pi_a, pi_ab] = blocks_from_table(&table, config.d, config.r_tilde);
    let cm = RegionPairCM {
        config: config.clone(),
        phi_a,
        phi_ab,
        pi_a,
        pi_ab,
        ordering: Ordering::MirroredA,
        pt_flag: false,
    };
    for (name, b) in cm.blocks() {
        if !b.is_symmetric() {
            return Err(Error::BlockInvariant { block: name, property: "symmetry".into() });
        }
    }
    for (name, b) in [("phiA", &cm.phi_a), ("piA", &cm.pi_a)] {
        cholesky(b).map_err(|_| Error::BlockInvariant {
            block: name,
            property: "positive definiteness".into(),
        })?;
    }
    Ok(cm)
}

/// Builds the region-pair CM and verifies every block invariant: symmetric
/// positive definite region blocks, `phiAB ⪰ 0`, `piAB ⪯ 0`,
/// `(σ_π⁻¹)_AB ⪰ 0` and physicality `σ + iΩ ⪰ 0`.
pub fn build_region_pair_cm(config: &LatticeConfig) -> Result<RegionPairCM> {
    let cm = build_region_pair_cm_unchecked(config)?;
    let report = semidef_report(&cm)?;
    if !report.phi_ab_pass {
        return Err(Error::BlockInvariant { block: "phiAB", property: "positive semidefiniteness".into() });
    }
    if !report.pi_ab_pass {
        return Err(Error::BlockInvariant { block: "piAB", property: "negative semidefiniteness".into() });
    }
    if !report.inv_pi_ab_pass {
        return Err(Error::BlockInvariant {
            block: "inv(sigma_pi)_AB",
            property: "positive semidefiniteness".into(),
        });
    }
    let phys = physicality(&cm)?;
    if !phys.pass {
        return Err(Error::BlockInvariant {
            block: "sigma",
            property: format!("physicality (smallest symplectic eigenvalue {})", phys.min_nu.to_f64()),
        });
    }
    Ok(cm)
}

/// Dense `4d × 4d` matrix `σ_φ ⊕ σ_π`.
pub fn assemble_full(cm: &RegionPairCM) -> Mat {
    let phi = Mat::from_blocks(&[&[&cm.phi_a, &cm.phi_ab], &[&cm.phi_ab, &cm.phi_a]]);
    let pi = Mat::from_blocks(&[&[&cm.pi_a, &cm.pi_ab], &[&cm.pi_ab, &cm.pi_a]]);
    phi.direct_sum(&pi)
}

/// `σ̃ = ΛσΛ`: negates `piAB`.
pub fn partial_transpose(cm: &RegionPairCM) -> Result<RegionPairCM> {
    if cm.pt_flag {
        return Err(Error::InvalidInput("covariance matrix is already partially transposed".into()));
    }
    Ok(cm.flip_b_momenta())
}

/// A `d×d` field block and momentum block describing `d` modes.
#[derive(Clone, Debug)]
pub struct BlockPair {
    pub phi: Mat,
    pub pi: Mat,
}

/// Splits into AB-symmetric and AB-antisymmetric sectors.
///
/// Returns `(plus, minus)` with field parts `phiA ± phiAB`. Momentum parts are
/// `piA ± piAB` for the state itself and `piA ∓ piAB` when `pt` is set, so
/// `minus` is `(phiA − phiAB) ⊕ (piA + piAB)` for the partial transpose.
pub fn plus_minus_split(cm: &RegionPairCM, pt: bool) -> (BlockPair, BlockPair) {
    let pi_ab = if pt { cm.pi_ab.neg() } else { cm.pi_ab.clone() };
    let plus = BlockPair {
        phi: cm.phi_a.add(&cm.phi_ab),
        pi: cm.pi_a.add(&pi_ab),
    };
    let minus = BlockPair {
        phi: cm.phi_a.sub(&cm.phi_ab),
        pi: cm.pi_a.sub(&pi_ab),
    };
    (plus, minus)
}

/// Inverse of [`plus_minus_split`]: `(phiA, phiAB, piA, piAB)`.
pub fn unsplit(plus: &BlockPair, minus: &BlockPair, pt: bool) -> [Mat; 4] {
    let prec = plus.phi.prec();
    let half = Float::with_val(prec, 0.5);
    let phi_a = plus.phi.add(&minus.phi).scale(&half);
    let phi_ab = plus.phi.sub(&minus.phi).scale(&half);
    let pi_a = plus.pi.add(&minus.pi).scale(&half);
    let mut pi_ab = plus.pi.sub(&minus.pi).scale(&half);
    if pt {
        pi_ab = pi_ab.neg();
    }
    [phi_a, phi_ab, pi_a, pi_ab]
}

/// Pure vacuum CM `K⁻¹ ⊕ K` of an `n`-site periodic chain, `K = √(m² − ∇²)`.
pub fn build_full_vacuum_cm(n: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<Mat> {
    if n < 2 {
        return Err(Error::InvalidInput("the periodic chain needs at least 2 sites".into()));
    }
    let bits = policy.bits();
    let m2 = Float::with_val(bits, Rational::from(m.as_rational().square_ref()));
    let two_pi = Float::with_val(bits, rug::float::Constant::Pi) * 2u32;
    // circulant eigenvalues ω_q = √(m² + 4 sin²(πq/n))
    let omega: Vec<Float> = (0..n)
        .map(|q| {
            let mut s = Float::with_val(bits, &two_pi * q as u32) / (2 * n) as u32;
            s.sin_mut();
            s.square_mut();
            s *= 4u32;
            s += &m2;
            s.sqrt()
        })
        .collect();
    let cosines: Vec<Float> = (0..n)
        .map(|k| {
            let mut c = Float::with_val(bits, &two_pi * k as u32) / n as u32;
            c.cos_mut();
            c
        })
        .collect();
    let row = |inv: bool| -> Vec<Float> {
        (0..n)
            .map(|k| {
                let mut s = Float::new(bits);
                for (q, w) in omega.iter().enumerate() {
                    let c = &cosines[(q * k) % n];
                    if inv {
                        s += Float::with_val(bits, c / w);
                    } else {
                        s += Float::with_val(bits, c * w);
                    }
                }
                s / n as u32
            })
            .collect()
    };
    let kinv = row(true);
    let k = row(false);
    let circ = |r: &[Float]| {
        Mat::from_fn(n, n, bits, |i, j| {
            let k = i.abs_diff(j);
            r[k.min(n - k)].clone()
        })
    };
    Ok(circ(&kinv).direct_sum(&circ(&k)))
}

#[derive(Clone, Debug, Serialize)]
pub struct SemidefReport {
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub min_eig_phi_ab: Real,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub max_eig_pi_ab: Real,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub min_eig_inv_pi_ab: Real,
    pub phi_ab_pass: bool,
    pub pi_ab_pass: bool,
    pub inv_pi_ab_pass: bool,
    /// Tolerances `10^(−target+4)·‖block‖` used for each of the three checks.
    #[serde(serialize_with = "crate::precision::ser_reals")]
    pub tolerances: Vec<Real>,
}

impl SemidefReport {
    pub fn pass(&self) -> bool {
        self.phi_ab_pass && self.pi_ab_pass && self.inv_pi_ab_pass
    }
}

/// `(σ_π⁻¹)_AB = −piA⁻¹ piAB S⁻¹` with the Schur complement
/// `S = piA − piAB piA⁻¹ piAB`; the product form avoids the cancellation of
/// the equivalent `((piA + piAB)⁻¹ − (piA − piAB)⁻¹)/2` at large separations.
pub fn inverse_pi_ab(cm: &RegionPairCM) -> Result<Mat> {
    let a_inv = inverse(&cm.pi_a)?.inv;
    let ainv_b = a_inv.matmul(&cm.pi_ab);
    let schur = cm.pi_a.sub(&cm.pi_ab.matmul(&ainv_b));
    let s_inv = inverse(&schur)?.inv;
    let mut out = ainv_b.matmul(&s_inv).neg();
    let prec = cm.prec();
    let n = out.rows();
    for i in 0..n {
        for j in 0..i {
            let avg = Float::with_val(prec, &out[(i, j)] + &out[(j, i)]) / 2u32;
            out[(i, j)] = avg.clone();
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}

/// Eigenvalue checks of `phiAB ⪰ 0`, `piAB ⪯ 0` and `(σ_π⁻¹)_AB ⪰ 0`.
pub fn semidef_report(cm: &RegionPairCM) -> Result<SemidefReport> {
    if cm.pt_flag {
        return Err(Error::InvalidInput("semidefiniteness report expects the untransposed state".into()));
    }
    let tol = cm.policy().semidef_tol();
    let inv_ab = inverse_pi_ab(cm)?;
    let mut tolerances = Vec::with_capacity(3);
    let mut extreme = |b: &Mat, want_max: bool| -> Result<Real> {
        let e = sym_eigen(b, false)?;
        let t = Float::with_val(cm.prec(), &tol * &b.max_abs()) * b.rows() as u32;
        tolerances.push(t);
        Ok(if want_max { e.max().clone() } else { e.min().clone() })
    };
    let min_phi = extreme(&cm.phi_ab, false)?;
    let max_pi = extreme(&cm.pi_ab, true)?;
    let min_inv = extreme(&inv_ab, false)?;
    let phi_ab_pass = min_phi >= -Float::with_val(cm.prec(), &tolerances[0]);
    let pi_ab_pass = max_pi <= tolerances[1];
    let inv_pi_ab_pass = min_inv >= -Float::with_val(cm.prec(), &tolerances[2]);
    Ok(SemidefReport {
        min_eig_phi_ab: min_phi,
        max_eig_pi_ab: max_pi,
        min_eig_inv_pi_ab: min_inv,
        phi_ab_pass,
        pi_ab_pass,
        inv_pi_ab_pass,
        tolerances,
    })
}

#[derive(Clone, Debug)]
pub struct PhysicalityReport {
    /// Smallest symplectic eigenvalue of σ.
    pub min_nu: Real,
    pub pass: bool,
}

/// `σ + iΩ ⪰ 0` via the sector-split Williamson spectrum (every ν ≥ 1).
pub fn physicality(cm: &RegionPairCM) -> Result<PhysicalityReport> {
    let (plus, minus) = plus_minus_split(cm, false);
    let a = symplectic::product_spectrum(&plus.phi, &plus.pi, cm.policy())?;
    let b = symplectic::product_spectrum(&minus.phi, &minus.pi, cm.policy())?;
    let min_nu = if a.values[0] < b.values[0] { a.values[0].clone() } else { b.values[0].clone() };
    let bound = Float::with_val(cm.prec(), 1u32) - cm.policy().semidef_tol();
    let pass = min_nu >= bound;
    Ok(PhysicalityReport { min_nu, pass })
}
