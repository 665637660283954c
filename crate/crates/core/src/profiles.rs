//! Optimal collective detector profiles, two-mode extraction and the
//! beamsplitter swap onto single-mode detectors.
//!
//! Profile vectors are stored in internal order: index 0 is the site next to
//! the gap in both regions. Exports use physical labels `A_1..A_d`, `B_1..B_d`
//! counted left to right.

use std::io::{Read, Write};

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cmkit::RegionPairCM;
use crate::entangle::{log_negativity, two_mode_negativity, NegativityResult};
use crate::error::{Error, Result};
use crate::linalg::{bilinear, dot, expm, norm, Mat};
use crate::precision::{fmt_real, pi, PrecisionPolicy, Real};
use crate::symplectic::{normal_form_basis, symplectic_form, Sector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// `f_B = f_A` after reflection.
    AbSymmetric,
    /// `f_B = −f_A` after reflection.
    AbAntisymmetric,
}

#[derive(Clone, Debug)]
pub struct DetectorProfilePair {
    pub f_phi_a: Vec<Real>,
    pub f_pi_a: Vec<Real>,
    pub f_phi_b: Vec<Real>,
    pub f_pi_b: Vec<Real>,
    pub symmetry: Symmetry,
    /// `Σ f_phi·f_pi` per region before renormalization.
    pub raw_normalization: [Real; 2],
    /// Set when the smallest PT eigenvalue was degenerate.
    pub tie: bool,
}

impl DetectorProfilePair {
    pub fn d(&self) -> usize {
        self.f_phi_a.len()
    }

    pub fn prec(&self) -> u32 {
        self.f_phi_a[0].prec()
    }

    /// `Σ f_phi_X·f_pi_X − 1` for X = A, B.
    pub fn normalization_defect(&self) -> [Real; 2] {
        let p = self.prec();
        let mut a = dot(&self.f_phi_a, &self.f_pi_a, p);
        let mut b = dot(&self.f_phi_b, &self.f_pi_b, p);
        a -= 1u32;
        b -= 1u32;
        [a, b]
    }

    /// Profiles selecting one site (internal index) in each region.
    pub fn site_selector(d: usize, site: usize, prec: u32) -> Self {
        let e: Vec<Real> = (0..d).map(|i| Float::with_val(prec, (i == site) as u32)).collect();
        Self {
            f_phi_a: e.clone(),
            f_pi_a: e.clone(),
            f_phi_b: e.clone(),
            f_pi_b: e,
            symmetry: Symmetry::AbSymmetric,
            raw_normalization: [Float::with_val(prec, 1), Float::with_val(prec, 1)],
            tie: false,
        }
    }

    /// Applies a single-mode squeezer `(Φ, Π) → (sΦ, Π/s)` to both collective modes.
    pub fn squeezed(&self, s: &Real) -> Self {
        let inv = Float::with_val(s.prec(), s.recip_ref());
        let mul = |v: &[Real], f: &Real| v.iter().map(|x| Float::with_val(x.prec(), x * f)).collect();
        Self {
            f_phi_a: mul(&self.f_phi_a, s),
            f_pi_a: mul(&self.f_pi_a, &inv),
            f_phi_b: mul(&self.f_phi_b, s),
            f_pi_b: mul(&self.f_pi_b, &inv),
            ..self.clone()
        }
    }

    /// `4 × 4d` extraction matrix `S_f` in CM ordering.
    pub fn extraction_matrix(&self) -> Mat {
        let d = self.d();
        let mut s = Mat::zeros(4, 4 * d, self.prec());
        for i in 0..d {
            s[(0, i)] = self.f_phi_a[i].clone();
            s[(1, d + i)] = self.f_phi_b[i].clone();
            s[(2, 2 * d + i)] = self.f_pi_a[i].clone();
            s[(3, 3 * d + i)] = self.f_pi_b[i].clone();
        }
        s
    }

    /// `max |S_f Ω S_fᵀ − Ω₂|`.
    pub fn ccr_residual(&self) -> Real {
        let s = self.extraction_matrix();
        let got = s.matmul(&symplectic_form(2 * self.d(), self.prec())).matmul(&s.transpose());
        got.sub(&symplectic_form(2, self.prec())).max_abs()
    }
}

/// Profiles of the smallest `V_N` eigenvalue, normalized so that
/// `Σ f_phi·f_pi = 1` in each region.
pub fn optimal_profiles(cm: &RegionPairCM) -> Result<DetectorProfilePair> {
    let basis = normal_form_basis(cm, Sector::VN)?;
    let prec = cm.prec();
    let tie = basis.values.len() > 1 && {
        let gap = Float::with_val(prec, &basis.values[1] - &basis.values[0]);
        gap <= Float::with_val(prec, &basis.margins[0] + &basis.margins[1]) * 10u32
    };
    // region components of the embedded rows carry 1/√2; the symplectic
    // product of the A parts is therefore 1/2 before renormalization
    let mut h = Float::with_val(prec, 2);
    h.sqrt_mut();
    h.recip_mut();
    let a: Vec<Real> = basis.phi_half[0].iter().map(|x| Float::with_val(prec, x * &h)).collect();
    let b: Vec<Real> = basis.pi_half[0].iter().map(|x| Float::with_val(prec, x * &h)).collect();
    let raw = dot(&a, &b, prec);
    if raw <= 0 {
        return Err(Error::Inconsistency("region components have non-positive symplectic product".into()));
    }
    let scale = Float::with_val(prec, raw.sqrt_ref()).recip();
    let f_phi_a: Vec<Real> = a.iter().map(|x| Float::with_val(prec, x * &scale)).collect();
    let f_pi_a: Vec<Real> = b.iter().map(|x| Float::with_val(prec, x * &scale)).collect();
    let f_phi_b = f_phi_a.iter().map(|x| -x.clone()).collect();
    let f_pi_b = f_pi_a.iter().map(|x| -x.clone()).collect();
    Ok(DetectorProfilePair {
        f_phi_a,
        f_pi_a,
        f_phi_b,
        f_pi_b,
        symmetry: Symmetry::AbAntisymmetric,
        raw_normalization: [raw.clone(), raw],
        tie,
    })
}

/// `σ_f = S_f σ S_fᵀ` in `(Φ_A, Φ_B, Π_A, Π_B)` order.
pub fn extract_two_mode_cm(cm: &RegionPairCM, p: &DetectorProfilePair) -> Result<Mat> {
    if p.d() != cm.d() {
        return Err(Error::InvalidInput(format!("profile length {} does not match d = {}", p.d(), cm.d())));
    }
    let prec = cm.prec();
    let tol = Float::with_val(prec, Float::i_exp(1, 20 - prec as i32)) * (cm.d() as u32);
    for (region, defect) in ["A", "B"].iter().zip(p.normalization_defect()) {
        if defect.abs() > tol {
            return Err(Error::InvalidInput(format!("profile for region {region} is not symplectically normalized")));
        }
    }
    let faa = bilinear(&p.f_phi_a, &cm.phi_a, &p.f_phi_a);
    let fbb = bilinear(&p.f_phi_b, &cm.phi_a, &p.f_phi_b);
    let fab = bilinear(&p.f_phi_a, &cm.phi_ab, &p.f_phi_b);
    let paa = bilinear(&p.f_pi_a, &cm.pi_a, &p.f_pi_a);
    let pbb = bilinear(&p.f_pi_b, &cm.pi_a, &p.f_pi_b);
    let pab = bilinear(&p.f_pi_a, &cm.pi_ab, &p.f_pi_b);
    let z = Float::new(prec);
    Ok(Mat::from_fn(4, 4, prec, |i, j| match (i, j) {
        (0, 0) => faa.clone(),
        (1, 1) => fbb.clone(),
        (0, 1) | (1, 0) => fab.clone(),
        (2, 2) => paa.clone(),
        (3, 3) => pbb.clone(),
        (2, 3) | (3, 2) => pab.clone(),
        _ => z.clone(),
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nines {
    Count(u32),
    /// Extraction is complete within the certified margin.
    Exact,
}

impl Serialize for Nines {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Nines::Count(n) => s.serialize_u32(*n),
            Nines::Exact => s.serialize_str("exact"),
        }
    }
}

/// Number of leading nines in `extracted / total`.
pub fn nines_ratio(extracted: &Real, total: &Real, margin: &Real) -> Result<Nines> {
    if *total <= 0 {
        return Err(Error::InvalidInput("total negativity must be positive".into()));
    }
    if *extracted < 0 || Float::with_val(total.prec(), extracted - total) > *margin {
        return Err(Error::InvalidInput("extracted negativity must lie in (0, total]".into()));
    }
    let prec = total.prec();
    let deficit = Float::with_val(prec, total - extracted);
    if deficit <= *margin {
        return Ok(Nines::Exact);
    }
    let one_minus = deficit / total;
    let mut x = Float::with_val(prec, one_minus.log10_ref());
    x = -x;
    // absorb rounding in ratios such as 0.999
    x += Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2));
    Ok(Nines::Count(x.floor().to_f64().max(0.0) as u32))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractionReport {
    #[serde(serialize_with = "ser_mat")]
    pub two_mode_cm: Mat,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub extracted_n: Real,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub total_n: Real,
    pub nines: Nines,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub incompressible_residual: Real,
    pub n_minus: usize,
    pub tie: bool,
}

pub(crate) fn ser_mat<S: serde::Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let digits = crate::precision::bits_to_digits(m.prec());
    let mut seq = s.serialize_seq(Some(m.rows()))?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| fmt_real(x, digits)).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// Optimal profiles, extracted pair and its quality for an entangled `cm`.
pub fn extraction_report(cm: &RegionPairCM) -> Result<(DetectorProfilePair, ExtractionReport, NegativityResult)> {
    let total = log_negativity(cm)?;
    if total.n_minus == 0 {
        return Err(Error::InvalidInput("profiles need an entangled configuration".into()));
    }
    let cm = if total.policy != *cm.policy() {
        crate::cmkit::build_region_pair_cm_unchecked(&cm.config.with_policy(total.policy.clone()))?
    } else {
        cm.clone()
    };
    let profiles = optimal_profiles(&cm)?;
    let cm4 = extract_two_mode_cm(&cm, &profiles)?;
    let extracted = two_mode_negativity(&cm4, cm.policy())?;
    let prec = cm.prec();
    let margin = Float::with_val(prec, &total.certified_margin + cm.policy().target_tol() * &total.value);
    let nines = nines_ratio(&extracted, &total.value, &margin)?;
    let residual = Float::with_val(prec, &total.value - &extracted);
    let report = ExtractionReport {
        two_mode_cm: cm4,
        extracted_n: extracted,
        total_n: total.value.clone(),
        nines,
        incompressible_residual: residual,
        n_minus: total.n_minus,
        tie: profiles.tie,
    };
    Ok((profiles, report, total))
}

/// Extracted negativity when `p` (typically built for another configuration)
/// is applied to `cm`.
pub fn cross_apply(cm: &RegionPairCM, p: &DetectorProfilePair) -> Result<Real> {
    let p = if p.prec() != cm.prec() { with_prec(p, cm.prec()) } else { p.clone() };
    two_mode_negativity(&extract_two_mode_cm(cm, &p)?, cm.policy())
}

fn with_prec(p: &DetectorProfilePair, prec: u32) -> DetectorProfilePair {
    let conv = |v: &[Real]| v.iter().map(|x| Float::with_val(prec, x)).collect();
    DetectorProfilePair {
        f_phi_a: conv(&p.f_phi_a),
        f_pi_a: conv(&p.f_pi_a),
        f_phi_b: conv(&p.f_phi_b),
        f_pi_b: conv(&p.f_pi_b),
        symmetry: p.symmetry,
        raw_normalization: [Float::with_val(prec, &p.raw_normalization[0]), Float::with_val(prec, &p.raw_normalization[1])],
        tie: p.tie,
    }
}

/// Best extraction found under the constraint `f_phi = f_pi`.
#[derive(Clone, Debug)]
pub struct EqualProfileDiagnostic {
    pub profile: Vec<Real>,
    pub constrained_n: Real,
    pub optimal_n: Real,
}

/// `ln(gᵀXg) + ln(gᵀPg)` for unit `g`; its minimum gives the constrained `ν̃²`.
fn equal_profile_objective(x: &Mat, p: &Mat, g: &[Real]) -> (Real, Vec<Real>) {
    let prec = x.prec();
    let xg = x.mul_vec(g);
    let pg = p.mul_vec(g);
    let gx = dot(g, &xg, prec);
    let gp = dot(g, &pg, prec);
    let val = Float::with_val(prec, &gx * &gp);
    let mut grad: Vec<Real> = xg
        .iter()
        .zip(&pg)
        .map(|(a, b)| Float::with_val(prec, a / &gx) * 2u32 + Float::with_val(prec, b / &gp) * 2u32)
        .collect();
    // project onto the tangent space of the sphere
    let radial = dot(g, &grad, prec);
    for (gi, x) in grad.iter_mut().zip(g) {
        *gi -= Float::with_val(prec, x * &radial);
    }
    (val, grad)
}

fn normalize(v: &mut [Real]) {
    let prec = v[0].prec();
    let n = norm(v, prec);
    for x in v.iter_mut() {
        *x /= &n;
    }
}

/// Searches the equal-profile family: starts from the region components of
/// the entangled `V_N` modes and refines by projected gradient descent.
pub fn equal_profile_diagnostic(cm: &RegionPairCM) -> Result<EqualProfileDiagnostic> {
    let (_, report, total) = extraction_report(cm)?;
    let prec = cm.prec();
    let basis = normal_form_basis(cm, Sector::VN)?;
    let x = cm.phi_a.sub(&cm.phi_ab);
    let p = cm.pi_a.add(&cm.pi_ab);

    let mut starts = Vec::new();
    for k in 0..total.n_minus.max(1) {
        let a = basis.phi_half[k].clone();
        let b = basis.pi_half[k].clone();
        let mean: Vec<Real> = a.iter().zip(&b).map(|(u, v)| Float::with_val(prec, u + v)).collect();
        starts.extend([a, b, mean]);
    }
    let mut best: Option<(Real, Vec<Real>)> = None;
    for mut g in starts {
        normalize(&mut g);
        let (mut val, mut grad) = equal_profile_objective(&x, &p, &g);
        let mut step = Float::with_val(prec, 0.1);
        for _ in 0..400 {
            let gn = norm(&grad, prec);
            if gn.is_zero() || step < Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2)) {
                break;
            }
            let mut trial: Vec<Real> =
                g.iter().zip(&grad).map(|(a, b)| Float::with_val(prec, a - Float::with_val(prec, b * &step))).collect();
            normalize(&mut trial);
            let (tv, tg) = equal_profile_objective(&x, &p, &trial);
            if tv < val {
                g = trial;
                val = tv;
                grad = tg;
                step *= 2u32;
            } else {
                step /= 4u32;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, g));
        }
    }
    let (_, g) = best.expect("at least one start");
    let neg: Vec<Real> = g.iter().map(|v| -v.clone()).collect();
    let prof = DetectorProfilePair {
        f_phi_a: g.clone(),
        f_pi_a: g.clone(),
        f_phi_b: neg.clone(),
        f_pi_b: neg,
        symmetry: Symmetry::AbAntisymmetric,
        raw_normalization: [Float::with_val(prec, 1), Float::with_val(prec, 1)],
        tie: false,
    };
    let constrained = two_mode_negativity(&extract_two_mode_cm(cm, &prof)?, cm.policy())?;
    Ok(EqualProfileDiagnostic { profile: g, constrained_n: constrained, optimal_n: report.extracted_n })
}

/// `4 × 4` beamsplitter generator `M` on `(Φ, φ_D, Π, π_D)` with
/// `H = ½ rᵀMr = Πφ_D − Φπ_D`.
pub fn beamsplitter_generator(prec: u32) -> Mat {
    let mut m = Mat::zeros(4, 4, prec);
    m[(2, 1)] = Float::with_val(prec, 1);
    m[(1, 2)] = Float::with_val(prec, 1);
    m[(0, 3)] = Float::with_val(prec, -1);
    m[(3, 0)] = Float::with_val(prec, -1);
    m
}

/// `S_BS = exp(Ω M θ)` on one collective/detector pair.
pub fn beamsplitter_symplectic(theta: &Real) -> Result<Mat> {
    let prec = theta.prec();
    let om = symplectic_form(2, prec);
    expm(&om.matmul(&beamsplitter_generator(prec)).scale(theta))
}

/// Couples each collective mode of `cm_f` to a vacuum detector. Output order:
/// `(Φ_A, Φ_B, φ_DA, φ_DB, Π_A, Π_B, π_DA, π_DB)`.
pub fn beamsplitter_swap(cm_f: &Mat, theta: &Real) -> Result<Mat> {
    if cm_f.rows() != 4 || cm_f.cols() != 4 {
        return Err(Error::InvalidInput("collective pair CM must be 4 × 4".into()));
    }
    let prec = cm_f.prec();
    let theta = Float::with_val(prec, theta);
    let s4 = beamsplitter_symplectic(&theta)?;
    // (Φ, φ_D, Π, π_D) of pair x ∈ {0, 1} in the 8-mode ordering
    let slots = |x: usize| [x, 2 + x, 4 + x, 6 + x];
    let mut s8 = Mat::zeros(8, 8, prec);
    for x in 0..2 {
        let idx = slots(x);
        for i in 0..4 {
            for j in 0..4 {
                s8[(idx[i], idx[j])] = s4[(i, j)].clone();
            }
        }
    }
    let mut sigma = Mat::identity(8, prec);
    let coll = [0, 1, 4, 5];
    for i in 0..4 {
        for j in 0..4 {
            sigma[(coll[i], coll[j])] = cm_f[(i, j)].clone();
        }
    }
    Ok(s8.congruence(&sigma))
}

/// Reduced `(φ_DA, φ_DB, π_DA, π_DB)` CM from a swap output.
pub fn detector_pair_cm(cm8: &Mat) -> Mat {
    let idx = [2, 3, 6, 7];
    Mat::from_fn(4, 4, cm8.prec(), |i, j| cm8[(idx[i], idx[j])].clone())
}

/// `{0, π/8, π/4, 3π/8, π/2}`.
pub fn theta_grid(prec: u32) -> Vec<Real> {
    let p = pi(prec);
    (0..5u32).map(|k| Float::with_val(prec, &p * k) / 8u32).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SwapPoint {
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub theta: Real,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub detector_n: Real,
    #[serde(serialize_with = "crate::precision::ser_real")]
    pub collective_n: Real,
}

pub fn swap_scan(cm_f: &Mat, thetas: &[Real], policy: &PrecisionPolicy) -> Result<Vec<SwapPoint>> {
    let collective_n = two_mode_negativity(cm_f, policy)?;
    thetas
        .iter()
        .map(|t| {
            let out = beamsplitter_swap(cm_f, t)?;
            Ok(SwapPoint {
                theta: t.clone(),
                detector_n: two_mode_negativity(&detector_pair_cm(&out), policy)?,
                collective_n: collective_n.clone(),
            })
        })
        .collect()
}

pub const PROFILE_COLUMNS: [&str; 5] = ["site_index", "f_phi_A", "f_pi_A", "f_phi_B", "f_pi_B"];

/// Internal index of physical sites `A_j` and `B_j` (1-based `j`).
fn physical_to_internal(d: usize, j: usize) -> (usize, usize) {
    (d - j, j - 1)
}

/// CSV export with physical site labels.
pub fn export_profiles_csv<W: Write>(p: &DetectorProfilePair, digits: u32, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_COLUMNS)?;
    let d = p.d();
    for j in 1..=d {
        let (ia, ib) = physical_to_internal(d, j);
        w.write_record([
            j.to_string(),
            fmt_real(&p.f_phi_a[ia], digits),
            fmt_real(&p.f_pi_a[ia], digits),
            fmt_real(&p.f_phi_b[ib], digits),
            fmt_real(&p.f_pi_b[ib], digits),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_real(s: &str, prec: u32) -> Result<Real> {
    let parsed = Float::parse(s.trim()).map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

/// Reads a CSV written by [`export_profiles_csv`].
pub fn import_profiles_csv<R: Read>(input: R, prec: u32, symmetry: Symmetry) -> Result<DetectorProfilePair> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(PROFILE_COLUMNS) {
        return Err(Error::InvalidInput(format!("unexpected profile columns {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let j: usize = rec[0].parse().map_err(|_| Error::InvalidInput(format!("bad site index {:?}", &rec[0])))?;
        let vals = (1..5).map(|k| parse_real(&rec[k], prec)).collect::<Result<Vec<_>>>()?;
        rows.push((j, vals));
    }
    let d = rows.len();
    if d == 0 {
        return Err(Error::InvalidInput("empty profile file".into()));
    }
    let zero = vec![Float::new(prec); d];
    let (mut fa, mut pa, mut fb, mut pb) = (zero.clone(), zero.clone(), zero.clone(), zero);
    for (j, v) in rows {
        if j == 0 || j > d {
            return Err(Error::InvalidInput(format!("site index {j} out of range 1..={d}")));
        }
        let (ia, ib) = physical_to_internal(d, j);
        let [a, b, c, e]: [Real; 4] = v.try_into().expect("four columns");
        fa[ia] = a;
        pa[ia] = b;
        fb[ib] = c;
        pb[ib] = e;
    }
    let ra = dot(&fa, &pa, prec);
    let rb = dot(&fb, &pb, prec);
    Ok(DetectorProfilePair {
        f_phi_a: fa,
        f_pi_a: pa,
        f_phi_b: fb,
        f_pi_b: pb,
        symmetry,
        raw_normalization: [ra, rb],
        tie: false,
    })
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    symmetry: Symmetry,
    tie: bool,
    site_index: Vec<usize>,
    f_phi_a: Vec<String>,
    f_pi_a: Vec<String>,
    f_phi_b: Vec<String>,
    f_pi_b: Vec<String>,
}

pub fn export_profiles_json<W: Write>(p: &DetectorProfilePair, digits: u32, out: W) -> Result<()> {
    let d = p.d();
    let col = |v: &[Real], a: bool| {
        (1..=d)
            .map(|j| {
                let (ia, ib) = physical_to_internal(d, j);
                fmt_real(&v[if a { ia } else { ib }], digits)
            })
            .collect()
    };
    let js = ProfileJson {
        symmetry: p.symmetry,
        tie: p.tie,
        site_index: (1..=d).collect(),
        f_phi_a: col(&p.f_phi_a, true),
        f_pi_a: col(&p.f_pi_a, true),
        f_phi_b: col(&p.f_phi_b, false),
        f_pi_b: col(&p.f_pi_b, false),
    };
    serde_json::to_writer_pretty(out, &js)?;
    Ok(())
}

pub fn import_profiles_json<R: Read>(input: R, prec: u32) -> Result<DetectorProfilePair> {
    let js: ProfileJson = serde_json::from_reader(input)?;
    let d = js.site_index.len();
    let zero = vec![Float::new(prec); d];
    let mut out = [zero.clone(), zero.clone(), zero.clone(), zero];
    for (n, &j) in js.site_index.iter().enumerate() {
        if j == 0 || j > d {
            return Err(Error::InvalidInput(format!("site index {j} out of range 1..={d}")));
        }
        let (ia, ib) = physical_to_internal(d, j);
        out[0][ia] = parse_real(&js.f_phi_a[n], prec)?;
        out[1][ia] = parse_real(&js.f_pi_a[n], prec)?;
        out[2][ib] = parse_real(&js.f_phi_b[n], prec)?;
        out[3][ib] = parse_real(&js.f_pi_b[n], prec)?;
    }
    let [fa, pa, fb, pb] = out;
    let ra = dot(&fa, &pa, prec);
    let rb = dot(&fb, &pb, prec);
    Ok(DetectorProfilePair {
        f_phi_a: fa,
        f_pi_a: pa,
        f_phi_b: fb,
        f_pi_b: pb,
        symmetry: js.symmetry,
        raw_normalization: [ra, rb],
        tie: js.tie,
    })
}
