//! Logarithmic negativity, the reduced Peres–Horodecki test with its explicit
//! separable state, and consolidation into two-mode pairs.

use rug::Float;
use serde::Serialize;

use crate::cmkit::{build_region_pair_cm_unchecked, plus_minus_split, RegionPairCM};
use crate::error::{Error, Result};
use crate::linalg::{bilinear, dot, inverse, sym_eigen, Mat};
use crate::precision::{ln2, PrecisionPolicy, Real};
use crate::symplectic::{normal_form_basis, product_spectrum, pt_spectrum_reduced, williamson_spectrum, Sector, SymplecticSpectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Separable,
    Entangled,
    Undecided,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Separable => "separable",
            Verdict::Entangled => "entangled",
            Verdict::Undecided => "undecided",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `−log₂ x`.
fn neg_log2(x: &Real) -> Real {
    let prec = x.prec();
    let mut l = Float::with_val(prec, x.ln_ref());
    l /= ln2(prec);
    -l
}

/// Bits to nats.
pub fn bits_to_nats(bits: &Real) -> Real {
    Float::with_val(bits.prec(), bits * ln2(bits.prec()))
}

#[derive(Clone, Debug, Serialize)]
pub struct NegativityResult {
    /// Log-negativity in bits: sum of `contributions`.
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub value: Real,
    pub n_minus: usize,
    /// `−log₂ ν̃_j` for every certified `ν̃_j < 1`, largest first.
    #[serde(serialize_with = "crate::precision::ser_reals")]
    pub contributions: Vec<Real>,
    /// Error bound on `value`, including undecided eigenvalues.
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub certified_margin: Real,
    /// Eigenvalues too close to one to classify at the final precision.
    pub n_undecided: usize,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub nu_min: Real,
    pub policy: PrecisionPolicy,
    #[serde(skip)]
    pub spectrum: SymplecticSpectrum,
}

impl NegativityResult {
    pub fn is_decided(&self) -> bool {
        self.n_undecided == 0
    }

    pub fn verdict(&self) -> Verdict {
        if self.n_minus > 0 {
            Verdict::Entangled
        } else if self.n_undecided == 0 {
            Verdict::Separable
        } else {
            Verdict::Undecided
        }
    }

    pub fn value_nats(&self) -> Real {
        bits_to_nats(&self.value)
    }
}

fn negativity_from_spectrum(spec: SymplecticSpectrum, policy: &PrecisionPolicy) -> NegativityResult {
    let prec = spec.values[0].prec();
    let mut value = Float::new(prec);
    let mut margin = Float::new(prec);
    let mut contributions = Vec::new();
    let ln2 = ln2(prec);
    for (v, m) in spec.values.iter().zip(&spec.margins) {
        let band = Float::with_val(prec, m * 10u32);
        let upper = Float::with_val(prec, 1u32 + &band);
        if *v < Float::with_val(prec, 1u32 - &band) {
            let c = neg_log2(v);
            value += &c;
            contributions.push(c);
            // d(−log₂ν) = dν / (ν ln 2)
            margin += Float::with_val(prec, m / v) / &ln2;
        } else if *v <= upper {
            // at most −log₂(ν − margin) if the value were below one
            let lo = Float::with_val(prec, v - m);
            if lo < 1 && lo > 0 {
                margin += neg_log2(&lo);
            }
        }
    }
    contributions.sort_by(|a, b| b.partial_cmp(a).expect("NaN contribution"));
    NegativityResult {
        value,
        n_minus: spec.n_minus,
        contributions,
        certified_margin: margin,
        n_undecided: spec.n_undecided,
        nu_min: spec.values[0].clone(),
        policy: policy.clone(),
        spectrum: spec,
    }
}

/// Negativity at the CM's own precision, without escalation.
pub fn log_negativity_once(cm: &RegionPairCM) -> Result<NegativityResult> {
    let (minus, _) = pt_spectrum_reduced(cm)?;
    Ok(negativity_from_spectrum(minus, cm.policy()))
}

/// `N = −Σ log₂ ν̃_j` over PT symplectic eigenvalues below one. Eigenvalues
/// too close to one trigger a rebuild of the CM at the next precision rung;
/// if they persist the result is returned with `n_undecided > 0`.
pub fn log_negativity(cm: &RegionPairCM) -> Result<NegativityResult> {
    let mut result = log_negativity_once(cm)?;
    let mut policy = cm.policy().clone();
    while !result.is_decided() {
        let Some(next) = policy.escalate() else { break };
        let cm2 = build_region_pair_cm_unchecked(&cm.config.with_policy(next.clone()))?;
        result = log_negativity_once(&cm2)?;
        policy = next;
    }
    Ok(result)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparabilityCertificate {
    pub verdict: Verdict,
    /// Smallest eigenvalue of `(phiA − phiAB) − (piA + piAB)⁻¹`.
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub ph_min_eig: Real,
    /// Smallest eigenvalue of the companion `(phiA + phiAB) − (piA − piAB)⁻¹`.
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub companion_min_eig: Real,
    /// Error bound below which the sign of `ph_min_eig` is not trusted.
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub tolerance: Real,
    /// Region block `(phiA − phiAB) ⊕ (piA + piAB)` of `σ^sep` when separable.
    #[serde(skip)]
    pub sep_state: Option<SepState>,
    /// Smallest eigenvalue of `σ − σ^sep`.
    #[serde(serialize_with = "ser_opt_real")]
    pub noise_check: Option<Real>,
    /// Smallest symplectic eigenvalue of `σ^sep`.
    #[serde(serialize_with = "ser_opt_real")]
    pub sep_min_nu: Option<Real>,
    pub policy: PrecisionPolicy,
}

fn ser_opt_real<S: serde::Serializer>(x: &Option<Real>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => crate::precision::ser_real(v, s),
        None => s.serialize_none(),
    }
}

/// Separable state with both region blocks equal to `x ⊕ p` and no
/// inter-region correlations.
#[derive(Clone, Debug)]
pub struct SepState {
    pub x: Mat,
    pub p: Mat,
}

impl SepState {
    /// Dense `4d × 4d` form in CM ordering.
    pub fn assemble(&self) -> Mat {
        let z = Mat::zeros(self.x.rows(), self.x.rows(), self.x.prec());
        let phi = Mat::from_blocks(&[&[&self.x, &z], &[&z, &self.x]]);
        let pi = Mat::from_blocks(&[&[&self.p, &z], &[&z, &self.p]]);
        phi.direct_sum(&pi)
    }
}

struct PhMatrix {
    min_eig: Real,
    error: Real,
}

/// Smallest eigenvalue of `x − p⁻¹` and an error bound for it.
fn ph_matrix(cm: &RegionPairCM, x: &Mat, p: &Mat) -> Result<PhMatrix> {
    let prec = cm.prec();
    let n = x.rows();
    let inv = inverse(p)?;
    let q = x.sub(&inv.inv);
    let mut q = q;
    for i in 0..n {
        for j in 0..i {
            let avg = Float::with_val(prec, &q[(i, j)] + &q[(j, i)]) / 2u32;
            q[(i, j)] = avg.clone();
            q[(j, i)] = avg;
        }
    }
    let e = sym_eigen(&q, false)?;
    let eps = Float::with_val(prec, Float::i_exp(1, 1 - prec as i32));
    let eps_in = Float::with_val(prec, Float::i_exp(1, 10 - prec as i32));
    let pinv = inv.inv.frobenius();
    let x_err = Float::with_val(prec, &cm.phi_a.frobenius() + &cm.phi_ab.frobenius()) * &eps_in;
    let p_err = Float::with_val(prec, &cm.pi_a.frobenius() + &cm.pi_ab.frobenius()) * &eps_in;
    let mut error = e.abs_bound();
    error += &x_err;
    error += Float::with_val(prec, pinv.square_ref()) * &p_err;
    error += Float::with_val(prec, &inv.residual * &pinv) * n as u32;
    error += Float::with_val(prec, &x.frobenius() + &pinv) * &eps * (4 * n) as u32;
    Ok(PhMatrix { min_eig: e.min().clone(), error })
}

fn ph_once(cm: &RegionPairCM) -> Result<SeparabilityCertificate> {
    if cm.pt_flag {
        return Err(Error::InvalidInput("the separability test expects the untransposed state".into()));
    }
    let (plus, minus) = plus_minus_split(cm, true);
    let main = ph_matrix(cm, &minus.phi, &minus.pi)?;
    let companion = ph_matrix(cm, &plus.phi, &plus.pi)?;
    let band = Float::with_val(cm.prec(), &main.error * 10u32);
    let verdict = if main.min_eig < Float::with_val(cm.prec(), -&band) {
        Verdict::Entangled
    } else if main.min_eig > band {
        Verdict::Separable
    } else {
        Verdict::Undecided
    };
    Ok(SeparabilityCertificate {
        verdict,
        ph_min_eig: main.min_eig,
        companion_min_eig: companion.min_eig,
        tolerance: band,
        sep_state: None,
        noise_check: None,
        sep_min_nu: None,
        policy: cm.policy().clone(),
    })
}

/// Reduced Peres–Horodecki test: entangled iff
/// `(phiA − phiAB) − (piA + piAB)⁻¹` has a negative eigenvalue. Undecided
/// signs trigger precision escalation.
pub fn ph_criterion(cm: &RegionPairCM) -> Result<SeparabilityCertificate> {
    let mut cert = ph_once(cm)?;
    let mut policy = cm.policy().clone();
    while cert.verdict == Verdict::Undecided {
        let Some(next) = policy.escalate() else { break };
        let cm2 = build_region_pair_cm_unchecked(&cm.config.with_policy(next.clone()))?;
        cert = ph_once(&cm2)?;
        policy = next;
    }
    Ok(cert)
}

/// Noise matrix `Y = σ − σ^sep`, split into field and momentum parts.
pub fn noise_matrix(cm: &RegionPairCM, sep: &SepState) -> (Mat, Mat) {
    let zx = cm.phi_a.sub(&sep.x);
    let zp = cm.pi_a.sub(&sep.p);
    let phi = Mat::from_blocks(&[&[&zx, &cm.phi_ab], &[&cm.phi_ab, &zx]]);
    let pi = Mat::from_blocks(&[&[&zp, &cm.pi_ab], &[&cm.pi_ab, &zp]]);
    (phi, pi)
}

/// Builds `σ^sep` and checks that it is physical and that `σ ⪰ σ^sep`, with
/// the noise `Y = σ − σ^sep` of the form `phiAB ⊗ [[1,1],[1,1]] ⊕ (−piAB) ⊗ [[1,−1],[−1,1]]`.
pub fn separable_witness(cm: &RegionPairCM) -> Result<SeparabilityCertificate> {
    let cert = ph_criterion(cm)?;
    if cert.verdict != Verdict::Separable {
        return Ok(cert);
    }
    let cm = if cert.policy != *cm.policy() {
        build_region_pair_cm_unchecked(&cm.config.with_policy(cert.policy.clone()))?
    } else {
        cm.clone()
    };
    let prec = cm.prec();
    let (_, minus) = plus_minus_split(&cm, true);
    let sep = SepState { x: minus.phi, p: minus.pi };

    let spec = product_spectrum(&sep.x, &sep.p, cm.policy())?;
    let sep_min_nu = spec.values[0].clone();
    let one_minus = Float::with_val(prec, 1u32 - &*spec.margins[0].as_abs()) - Float::with_val(prec, &spec.margins[0] * 10u32);
    if sep_min_nu < one_minus {
        return Err(Error::Inconsistency(format!(
            "separable certificate is unphysical: smallest symplectic eigenvalue {}",
            sep_min_nu.to_f64()
        )));
    }

    let (y_phi, y_pi) = noise_matrix(&cm, &sep);
    let d = cm.d();
    let tol = Float::with_val(prec, &cert.tolerance + Float::with_val(prec, Float::i_exp(1, 12 - prec as i32)) * &cm.phi_a.max_abs());
    // block pattern: every field block equals phiAB, momentum blocks ∓piAB
    for i in 0..d {
        for j in 0..d {
            let checks = [
                (&y_phi[(i, j)], cm.phi_ab[(i, j)].clone()),
                (&y_phi[(i + d, j + d)], cm.phi_ab[(i, j)].clone()),
                (&y_pi[(i, j)], -cm.pi_ab[(i, j)].clone()),
                (&y_pi[(i + d, j + d)], -cm.pi_ab[(i, j)].clone()),
            ];
            for (got, want) in checks {
                if Float::with_val(prec, got - &want).abs() > tol {
                    return Err(Error::Inconsistency("noise matrix does not have the expected block pattern".into()));
                }
            }
        }
    }
    let e_phi = sym_eigen(&y_phi, false)?;
    let e_pi = sym_eigen(&y_pi, false)?;
    let noise = if e_phi.min() < e_pi.min() { e_phi.min().clone() } else { e_pi.min().clone() };
    let scale = Float::with_val(prec, &cm.phi_ab.max_abs() + &cm.pi_ab.max_abs());
    // entries of Y carry the rounding of the region blocks they were formed from
    let entry_err = Float::with_val(prec, &cm.phi_a.max_abs() + &cm.pi_a.max_abs())
        * Float::with_val(prec, Float::i_exp(1, 12 - prec as i32))
        * (4 * d) as u32;
    let noise_tol = Float::with_val(prec, &e_phi.abs_bound() + &e_pi.abs_bound())
        + Float::with_val(prec, &scale * cm.policy().semidef_tol())
        + entry_err;
    if noise < Float::with_val(prec, -&noise_tol) {
        return Err(Error::Inconsistency(format!("sigma - sigma_sep has eigenvalue {}", noise.to_f64())));
    }
    Ok(SeparabilityCertificate {
        sep_state: Some(sep),
        noise_check: Some(noise),
        sep_min_nu: Some(sep_min_nu),
        ..cert
    })
}

/// PT of a two-mode CM in `(Φ_A, Φ_B, Π_A, Π_B)` order, then
/// `N = Σ max(0, −log₂ ν̃)`.
pub fn two_mode_negativity(cm4: &Mat, policy: &PrecisionPolicy) -> Result<Real> {
    if cm4.rows() != 4 || cm4.cols() != 4 {
        return Err(Error::InvalidInput("two-mode CM must be 4 × 4".into()));
    }
    let prec = cm4.prec();
    let phys = williamson_spectrum(cm4, policy)?;
    let slack = Float::with_val(prec, &phys.margins[0] * 10u32) + policy.semidef_tol();
    if phys.values[0] < Float::with_val(prec, 1u32 - &slack) {
        return Err(Error::InvalidInput(format!(
            "two-mode CM is unphysical (smallest symplectic eigenvalue {})",
            phys.values[0].to_f64()
        )));
    }
    let mut pt = cm4.clone();
    for k in 0..4 {
        if k != 3 {
            pt[(3, k)] = -pt[(3, k)].clone();
            pt[(k, 3)] = -pt[(k, 3)].clone();
        }
    }
    let spec = williamson_spectrum(&pt, policy)?;
    let mut n = Float::new(prec);
    for v in &spec.values {
        if *v < 1 {
            n += neg_log2(v);
        }
    }
    Ok(n)
}

/// A consolidated `(1_A × 1_B)` pair.
#[derive(Clone, Debug)]
pub struct ModePair {
    /// `4 × 4` CM in `(Φ_A, Φ_B, Π_A, Π_B)` order.
    pub cm: Mat,
    pub negativity: Real,
    /// The PT symplectic eigenvalue the pair was built from.
    pub nu: Real,
}

#[derive(Clone, Debug)]
pub struct ConsolidationResult {
    /// Entangled pairs, descending negativity.
    pub pairs: Vec<ModePair>,
    /// Pairs whose eigenvalue is at least one.
    pub residual_pairs: Vec<ModePair>,
    pub total: NegativityResult,
}

impl ConsolidationResult {
    pub fn pair_sum(&self) -> Real {
        let prec = self.total.value.prec();
        let mut s = Float::new(prec);
        for p in &self.pairs {
            s += &p.negativity;
        }
        s
    }
}

/// Local symplectic built from the region components of the `V_N` basis,
/// applied to σ; returns the resulting `(1_A × 1_B)` pairs.
pub fn consolidate(cm: &RegionPairCM) -> Result<ConsolidationResult> {
    let total = log_negativity(cm)?;
    if total.n_minus == 0 {
        return Err(Error::InvalidInput("consolidation needs an entangled configuration".into()));
    }
    let cm = if total.policy != *cm.policy() {
        build_region_pair_cm_unchecked(&cm.config.with_policy(total.policy.clone()))?
    } else {
        cm.clone()
    };
    let basis = normal_form_basis(&cm, Sector::VN)?;
    let prec = cm.prec();
    let d = cm.d();

    // region rows must be symplectically orthonormal
    let tol = Float::with_val(prec, Float::i_exp(1, 40 - prec as i32)) * (d * d) as u32;
    for i in 0..d {
        for j in 0..d {
            let mut g = dot(&basis.phi_half[i], &basis.pi_half[j], prec);
            if i == j {
                g -= 1u32;
            }
            if g.abs() > tol {
                return Err(Error::Inconsistency("local region rows are not symplectically orthonormal".into()));
            }
        }
    }

    let mut pairs = Vec::new();
    let mut residual_pairs = Vec::new();
    for k in 0..d {
        let a = &basis.phi_half[k];
        let b = &basis.pi_half[k];
        // B rows are the mirrored components (−a, −b)
        let na: Vec<Real> = a.iter().map(|x| -x.clone()).collect();
        let nb: Vec<Real> = b.iter().map(|x| -x.clone()).collect();
        let faa = bilinear(a, &cm.phi_a, a);
        let fab = bilinear(a, &cm.phi_ab, &na);
        let paa = bilinear(b, &cm.pi_a, b);
        let pab = bilinear(b, &cm.pi_ab, &nb);
        let z = Float::new(prec);
        let cm4 = Mat::from_fn(4, 4, prec, |i, j| match (i, j) {
            (0, 0) | (1, 1) => faa.clone(),
            (0, 1) | (1, 0) => fab.clone(),
            (2, 2) | (3, 3) => paa.clone(),
            (2, 3) | (3, 2) => pab.clone(),
            _ => z.clone(),
        });
        let negativity = two_mode_negativity(&cm4, cm.policy())?;
        let pair = ModePair { cm: cm4, negativity, nu: basis.values[k].clone() };
        let band = Float::with_val(prec, &basis.margins[k] * 10u32);
        if basis.values[k] < Float::with_val(prec, 1u32 - &band) {
            pairs.push(pair);
        } else {
            residual_pairs.push(pair);
        }
    }
    pairs.sort_by(|x, y| y.negativity.partial_cmp(&x.negativity).expect("NaN negativity"));
    Ok(ConsolidationResult { pairs, residual_pairs, total })
}
