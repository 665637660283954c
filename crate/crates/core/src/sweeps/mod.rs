//! Configuration scans: entanglement-sphere search, heatmaps over physical
//! labels, minimum-negativity and decay scans, sphere growth, and their fits.

mod fit;
mod persist;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rug::{Float, Integer, Rational};
use serde::Serialize;

pub use fit::{fit_exp_linear, fit_exp_quadratic, fit_sqrt_shift, FitModel, FitResult};
pub use persist::{append_csv, persist, read_csv, write_csv, write_json, CsvRow, Format, Manifest, CSV_COLUMNS};

use crate::cmkit::{build_region_pair_cm_unchecked, LatticeConfig};
use crate::entangle::{log_negativity, ph_criterion, Verdict};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::precision::{fmt_real, format_rational, Mass, PrecisionPolicy, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Requested point has no lattice realization at this pixelation.
    Skipped,
    Failed,
}

#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub d: usize,
    pub r_tilde: usize,
    pub m: Rational,
    pub target_digits: u32,
    /// Requested `m·r̃` when the record comes from a pixelated physical target.
    pub requested_mrt: Option<Rational>,
    pub n_bits: Option<Real>,
    pub n_minus: Option<usize>,
    pub verdict: Option<Verdict>,
    pub nu_min: Option<Real>,
    pub digits_used: Option<u32>,
    pub status: Status,
    pub error: Option<String>,
    /// Not serialized; artifacts stay byte-identical across runs.
    pub wall_time: Duration,
}

impl SweepRecord {
    pub fn md(&self) -> Rational {
        Rational::from(&self.m * Integer::from(self.d))
    }

    pub fn mrt(&self) -> Rational {
        Rational::from(&self.m * Integer::from(self.r_tilde))
    }

    pub fn key(&self) -> String {
        config_key(self.d, self.r_tilde, &self.m, self.target_digits)
    }

    pub fn csv_row(&self) -> CsvRow {
        let t = self.target_digits;
        let opt = |x: &Option<Real>| x.as_ref().map(|v| fmt_real(v, t)).unwrap_or_default();
        CsvRow {
            d: self.d.to_string(),
            r_tilde: self.r_tilde.to_string(),
            m: format_rational(&self.m),
            md: format_rational(&self.md()),
            mrt: format_rational(&self.mrt()),
            n_bits: opt(&self.n_bits),
            n_minus: self.n_minus.map(|n| n.to_string()).unwrap_or_default(),
            verdict: match (self.status, self.verdict) {
                (Status::Ok, Some(v)) => v.as_str().to_string(),
                (Status::Skipped, _) => "skipped".into(),
                _ => "error".into(),
            },
            nu_min: opt(&self.nu_min),
            digits_used: self.digits_used.map(|n| n.to_string()).unwrap_or_default(),
        }
    }

    /// `N_bits` as `f64` (zero when absent).
    pub fn n_f64(&self) -> f64 {
        self.n_bits.as_ref().map(|v| v.to_f64()).unwrap_or(0.0)
    }

    /// `ln N_bits` in double precision, computed without underflow; `None`
    /// for zero or below `10⁻³⁰⁰`.
    pub fn ln_n(&self) -> Option<f64> {
        let v = self.n_bits.as_ref()?;
        if *v <= 0 {
            return None;
        }
        let l = Float::with_val(v.prec(), v.ln_ref()).to_f64();
        (l > -300.0 * std::f64::consts::LN_10).then_some(l)
    }

    fn skipped(d: usize, r_tilde: usize, m: Rational, target: u32, requested: Rational) -> Self {
        Self {
            d,
            r_tilde,
            m,
            target_digits: target,
            requested_mrt: Some(requested),
            n_bits: None,
            n_minus: None,
            verdict: None,
            nu_min: None,
            digits_used: None,
            status: Status::Skipped,
            error: None,
            wall_time: Duration::ZERO,
        }
    }
}

#[derive(Serialize)]
struct RecordJson {
    #[serde(flatten)]
    row: CsvRow,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    requested_mrt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Serialize for SweepRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RecordJson {
            row: self.csv_row(),
            status: self.status,
            requested_mrt: self.requested_mrt.as_ref().map(format_rational),
            error: self.error.clone(),
        }
        .serialize(s)
    }
}

pub fn config_key(d: usize, r_tilde: usize, m: &Rational, target: u32) -> String {
    format!("d={d};r_tilde={r_tilde};m={};target={target}", format_rational(m))
}

/// Negativity record for one configuration; errors are recorded, not raised.
pub fn evaluate(config: &LatticeConfig) -> SweepRecord {
    let start = Instant::now();
    let mut rec = SweepRecord {
        d: config.d,
        r_tilde: config.r_tilde,
        m: config.m.as_rational().clone(),
        target_digits: config.policy.target_digits,
        requested_mrt: None,
        n_bits: None,
        n_minus: None,
        verdict: None,
        nu_min: None,
        digits_used: None,
        status: Status::Ok,
        error: None,
        wall_time: Duration::ZERO,
    };
    let result = build_region_pair_cm_unchecked(config).and_then(|cm| log_negativity(&cm));
    match result {
        Ok(n) => {
            rec.verdict = Some(n.verdict());
            rec.n_bits = Some(n.value);
            rec.n_minus = Some(n.n_minus);
            rec.nu_min = Some(n.nu_min);
            rec.digits_used = Some(n.policy.working_digits);
        }
        Err(e) => {
            rec.status = Status::Failed;
            rec.error = Some(e.to_string());
        }
    }
    rec.wall_time = start.elapsed();
    rec
}

pub fn evaluate_all(configs: &[LatticeConfig], exec: Execution) -> Vec<SweepRecord> {
    exec::map(configs, exec, evaluate)
}

/// Evaluates configs not yet in the manifest, appending records to `csv` in
/// input order after every chunk so an interrupted run can resume.
pub fn run_resumable(
    configs: &[LatticeConfig],
    csv: &Path,
    manifest: &mut Manifest,
    exec: Execution,
    chunk: usize,
) -> Result<Vec<SweepRecord>> {
    let todo: Vec<LatticeConfig> = configs
        .iter()
        .filter(|c| !manifest.contains(&config_key(c.d, c.r_tilde, c.m.as_rational(), c.policy.target_digits)))
        .cloned()
        .collect();
    let mut out = Vec::with_capacity(todo.len());
    for part in todo.chunks(chunk.max(1)) {
        let recs = evaluate_all(part, exec);
        append_csv(&recs, csv)?;
        manifest.mark(&recs.iter().map(SweepRecord::key).collect::<Vec<_>>())?;
        out.extend(recs);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SphereRadius {
    Exact(usize),
    /// The radius lies in `[lo, hi]`; verdicts inside could not be decided.
    Bracket(usize, usize),
}

impl SphereRadius {
    /// Point value, or the midpoint of a bracket.
    pub fn estimate(&self) -> f64 {
        match *self {
            SphereRadius::Exact(r) => r as f64,
            SphereRadius::Bracket(lo, hi) => (lo + hi) as f64 / 2.0,
        }
    }

    /// Largest separation certified entangled, if any.
    pub fn last_entangled(&self) -> Option<usize> {
        let lo = match *self {
            SphereRadius::Exact(r) | SphereRadius::Bracket(r, _) => r,
        };
        (lo > 1).then(|| lo - 1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereResult {
    pub d: usize,
    #[serde(serialize_with = "ser_rational")]
    pub m: Rational,
    pub radius: SphereRadius,
    /// Every `(r̃, verdict, working digits)` evaluated, ascending in `r̃`.
    pub evaluations: Vec<(usize, Verdict, u32)>,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(q))
}

const MAX_SEPARATION: usize = 1 << 24;

/// Smallest `r̃` with a separable verdict, by exponential bracketing and
/// integer bisection on the reduced PH criterion.
pub fn entanglement_sphere(d: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<SphereResult> {
    let mut seen: BTreeMap<usize, (Verdict, u32)> = BTreeMap::new();
    let mut verdict = |r: usize| -> Result<Verdict> {
        if let Some((v, _)) = seen.get(&r) {
            return Ok(*v);
        }
        let cfg = LatticeConfig::new(d, r, m.clone(), policy.clone())?;
        let cert = ph_criterion(&build_region_pair_cm_unchecked(&cfg)?)?;
        seen.insert(r, (cert.verdict, cert.policy.working_digits));
        Ok(cert.verdict)
    };

    let radius = 'search: {
        if verdict(1)? == Verdict::Separable {
            break 'search SphereRadius::Exact(1);
        }
        // lo: largest certified entangled; hi: smallest certified separable
        let mut lo = if verdict(1)? == Verdict::Entangled { 1 } else { 0 };
        let mut hi = 2;
        loop {
            match verdict(hi)? {
                Verdict::Separable => break,
                Verdict::Entangled => lo = hi,
                Verdict::Undecided => {}
            }
            hi *= 2;
            if hi > MAX_SEPARATION {
                return Err(Error::InvalidInput(format!("no separable verdict up to r_tilde = {MAX_SEPARATION}")));
            }
        }
        let mut undecided = false;
        let (mut a, mut b) = (lo, hi);
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            match verdict(mid)? {
                Verdict::Entangled => a = mid,
                Verdict::Separable => b = mid,
                Verdict::Undecided => {
                    undecided = true;
                    break;
                }
            }
        }
        if undecided || a == 0 {
            SphereRadius::Bracket(a + 1, b)
        } else {
            SphereRadius::Exact(b)
        }
    };

    // verdicts must be monotone in r̃
    let mut sep_seen = false;
    for (r, (v, _)) in &seen {
        match v {
            Verdict::Separable => sep_seen = true,
            Verdict::Entangled if sep_seen => {
                return Err(Error::Inconsistency(format!(
                    "verdict not monotone in r_tilde at d={d}: entangled at {r} after a separable point"
                )))
            }
            _ => {}
        }
    }
    Ok(SphereResult {
        d,
        m: m.as_rational().clone(),
        radius,
        evaluations: seen.into_iter().map(|(r, (v, w))| (r, v, w)).collect(),
    })
}

/// `m = md/d` exactly.
pub fn pixel_mass(md: &Rational, d: usize) -> Result<Mass> {
    Mass::new(Rational::from(md / Integer::from(d)))
}

/// `r̃ = round(mr̃·d/md)`, half away from zero.
pub fn pixel_separation(md: &Rational, mrt: &Rational, d: usize) -> usize {
    let q = Rational::from(mrt * Integer::from(d)) / md;
    let r = Integer::from(q.round_ref());
    r.to_usize().unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelationRule {
    pub d: usize,
    /// Points whose rounded separation falls below this are skipped.
    pub min_r_tilde: usize,
}

impl PixelationRule {
    pub fn new(d: usize) -> Self {
        Self { d, min_r_tilde: 1 }
    }

    /// Lattice configuration for a physical target, or `None` when unattained.
    pub fn realize(&self, md: &Rational, mrt: &Rational, policy: &PrecisionPolicy) -> Result<Option<LatticeConfig>> {
        let m = pixel_mass(md, self.d)?;
        let r = pixel_separation(md, mrt, self.d);
        if r < self.min_r_tilde.max(1) {
            return Ok(None);
        }
        LatticeConfig::new(self.d, r, m, policy.clone()).map(Some)
    }
}

/// One record per `(md, mr̃)` grid point, `md` outer, in grid order.
pub fn negativity_heatmap(
    md_grid: &[Rational],
    mrt_grid: &[Rational],
    rule: PixelationRule,
    policy: &PrecisionPolicy,
    exec: Execution,
) -> Result<Vec<SweepRecord>> {
    if md_grid.iter().chain(mrt_grid).any(|x| *x <= 0) {
        return Err(Error::InvalidInput("heatmap grids must be positive".into()));
    }
    let points: Vec<(Rational, Rational)> =
        md_grid.iter().flat_map(|md| mrt_grid.iter().map(move |mrt| (md.clone(), mrt.clone()))).collect();
    let out = exec::map(&points, exec, |(md, mrt)| -> Result<SweepRecord> {
        match rule.realize(md, mrt, policy)? {
            Some(cfg) => {
                let mut rec = evaluate(&cfg);
                rec.requested_mrt = Some(mrt.clone());
                Ok(rec)
            }
            None => {
                let m = pixel_mass(md, rule.d)?;
                let r = pixel_separation(md, mrt, rule.d);
                Ok(SweepRecord::skipped(rule.d, r, m.as_rational().clone(), policy.target_digits, mrt.clone()))
            }
        }
    });
    out.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct MinNegativityScan {
    pub spheres: Vec<SphereResult>,
    /// Record at the last entangled separation for each `d`.
    pub records: Vec<SweepRecord>,
    pub fit: FitResult,
    /// `d` values left out of the fit.
    pub excluded: Vec<usize>,
}

/// Smallest d included in the minimum-negativity fit.
pub const MIN_FIT_D: usize = 10;

/// Negativity at `r̃_slash − 1` for each `d` at fixed `md`; fits `ln N` against
/// `d` for `d ≥ 10`.
pub fn min_negativity_scan(
    md: &Rational,
    d_list: &[usize],
    policy: &PrecisionPolicy,
    exec: Execution,
) -> Result<MinNegativityScan> {
    if d_list.windows(2).any(|w| w[0] >= w[1]) || d_list.iter().any(|&d| d < 4) {
        return Err(Error::InvalidInput("d_list must be ascending with every d ≥ 4".into()));
    }
    let rows = exec::map(d_list, exec, |&d| -> Result<(SphereResult, Option<SweepRecord>)> {
        let m = pixel_mass(md, d)?;
        let sphere = entanglement_sphere(d, &m, policy)?;
        let rec = match sphere.radius.last_entangled() {
            Some(r) => Some(evaluate(&LatticeConfig::new(d, r, m, policy.clone())?)),
            None => None,
        };
        Ok((sphere, rec))
    });
    let mut spheres = Vec::new();
    let mut records = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for (row, &d) in rows.into_iter().zip(d_list) {
        let (sphere, rec) = row?;
        spheres.push(sphere);
        match rec.as_ref().and_then(|r| r.ln_n()) {
            Some(l) if d >= MIN_FIT_D => {
                xs.push(d as f64);
                ys.push(l);
            }
            _ => excluded.push(d),
        }
        records.extend(rec);
    }
    let fit = fit_exp_linear(&xs, &ys)?;
    Ok(MinNegativityScan { spheres, records, fit, excluded })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayCurve {
    pub d: usize,
    /// `(realized m·r̃, ln N)` for entangled points.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayScan {
    pub records: Vec<SweepRecord>,
    pub curves: Vec<DecayCurve>,
    /// Largest relative difference in `N` between successive pixelations.
    pub pixelation_gaps: Vec<f64>,
    /// Successive pixelations agree within 1 %.
    pub converged: Vec<bool>,
    /// Gaps shrink along the pixelation sequence.
    pub convergent_sequence: bool,
    /// `ln N` linear in `mr̃` for `mr̃ < md`, finest pixelation.
    pub linear_fit: Option<FitResult>,
    /// Large-separation fits (`mr̃ ≥ md`), finest pixelation.
    pub quadratic_fit: Option<FitResult>,
    pub large_linear_fit: Option<FitResult>,
}

impl DecayScan {
    /// Quadratic-exponential model fits the large-separation tail better.
    pub fn prefers_quadratic(&self) -> Option<bool> {
        Some(self.quadratic_fit.as_ref()?.residual_rms < self.large_linear_fit.as_ref()?.residual_rms)
    }
}

/// `N(mr̃)` at fixed `md` for several pixelations.
pub fn decay_scan(
    md: &Rational,
    mrt_list: &[Rational],
    d_pixelations: &[usize],
    policy: &PrecisionPolicy,
    exec: Execution,
) -> Result<DecayScan> {
    if mrt_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("mrt_list must be ascending".into()));
    }
    let mut configs = Vec::new();
    let mut requested = Vec::new();
    for &d in d_pixelations {
        let rule = PixelationRule::new(d);
        for mrt in mrt_list {
            if let Some(c) = rule.realize(md, mrt, policy)? {
                configs.push(c);
                requested.push(mrt.clone());
            }
        }
    }
    let mut records = evaluate_all(&configs, exec);
    for (r, q) in records.iter_mut().zip(requested) {
        r.requested_mrt = Some(q);
    }

    let mut curves = Vec::new();
    for &d in d_pixelations {
        let points = records
            .iter()
            .filter(|r| r.d == d)
            .filter_map(|r| Some((r.mrt().to_f64(), r.ln_n()?)))
            .collect();
        curves.push(DecayCurve { d, points });
    }

    let mut gaps = Vec::new();
    for w in d_pixelations.windows(2) {
        let a: Vec<&SweepRecord> = records.iter().filter(|r| r.d == w[0]).collect();
        let b: Vec<&SweepRecord> = records.iter().filter(|r| r.d == w[1]).collect();
        let mut gap: f64 = 0.0;
        for ra in &a {
            if let Some(rb) = b.iter().find(|rb| rb.requested_mrt == ra.requested_mrt) {
                let (x, y) = (ra.n_f64(), rb.n_f64());
                if x > 0.0 && y > 0.0 {
                    gap = gap.max((x - y).abs() / y);
                }
            }
        }
        gaps.push(gap);
    }
    let converged = gaps.iter().map(|g| *g < 0.01).collect();
    let convergent_sequence = gaps.windows(2).all(|w| w[1] <= w[0]);

    let md_f = md.to_f64();
    let finest = curves.last().map(|c| c.points.clone()).unwrap_or_default();
    let split = |small: bool| -> (Vec<f64>, Vec<f64>) {
        finest.iter().filter(|(x, _)| (*x < md_f) == small).map(|&(x, y)| (x, y)).unzip()
    };
    let (lx, ly) = split(true);
    let (qx, qy) = split(false);
    Ok(DecayScan {
        records,
        curves,
        pixelation_gaps: gaps,
        converged,
        convergent_sequence,
        linear_fit: fit_exp_linear(&lx, &ly).ok(),
        quadratic_fit: fit_exp_quadratic(&qx, &qy).ok(),
        large_linear_fit: fit_exp_linear(&qx, &qy).ok(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereGrowth {
    pub spheres: Vec<SphereResult>,
    /// Record at the sphere radius for each `d`.
    pub records: Vec<SweepRecord>,
    /// `(d, m·r̃_slash / (m·d))`.
    pub ratios: Vec<(usize, f64)>,
    pub fit: FitResult,
}

impl SphereGrowth {
    /// Fitted `a + b√(d + c)` at `d`.
    pub fn predict(&self, d: f64) -> f64 {
        self.fit.param("a") + self.fit.param("b") * (d + self.fit.param("c")).sqrt()
    }
}

/// Sphere radius in units of the region size against `d` at fixed `md`, fitted
/// to `a + b√(d + c)`.
pub fn sphere_growth(md: &Rational, d_list: &[usize], policy: &PrecisionPolicy, exec: Execution) -> Result<SphereGrowth> {
    if d_list.len() < 4 || d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("d_list must be ascending with at least 4 entries".into()));
    }
    let rows = exec::map(d_list, exec, |&d| -> Result<(SphereResult, SweepRecord)> {
        let m = pixel_mass(md, d)?;
        let sphere = entanglement_sphere(d, &m, policy)?;
        let r = sphere.radius.estimate().round() as usize;
        let rec = evaluate(&LatticeConfig::new(d, r.max(1), m, policy.clone())?);
        Ok((sphere, rec))
    });
    let mut spheres = Vec::new();
    let mut records = Vec::new();
    let mut ratios = Vec::new();
    for (row, &d) in rows.into_iter().zip(d_list) {
        let (s, rec) = row?;
        ratios.push((d, s.radius.estimate() / d as f64));
        spheres.push(s);
        records.push(rec);
    }
    let xs: Vec<f64> = ratios.iter().map(|(d, _)| *d as f64).collect();
    let ys: Vec<f64> = ratios.iter().map(|(_, y)| *y).collect();
    let fit = fit_sqrt_shift(&xs, &ys)?;
    if fit.param("b") <= 0.0 {
        return Err(Error::Fit(format!(
            "sphere radius does not grow: fitted b = {} (a = {}, c = {}, rms = {})",
            fit.param("b"),
            fit.param("a"),
            fit.param("c"),
            fit.residual_rms
        )));
    }
    Ok(SphereGrowth { spheres, records, ratios, fit })
}
