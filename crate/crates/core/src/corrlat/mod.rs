//! Vacuum two-point functions of the infinite 1D lattice scalar field.
//!
//! With s = 2 + m² and z = 4/s²,
//!
//! 2⟨φ₀φₙ⟩ = Γ(n+½) / (√π Γ(n+1) s^(n+½)) · ₂F₁((2n+1)/4, (2n+3)/4; n+1; z)
//! 2⟨π₀πₙ⟩ = −Γ(n−½) / (2√π Γ(n+1) s^(n−½)) · ₂F₁((2n−1)/4, (2n+1)/4; n+1; z)
//!
//! Momentum correlators are cross-checked against the lattice equation of
//! motion 2⟨π₀πₙ⟩ = s·2⟨φ₀φₙ⟩ − 2⟨φ₀φₙ₊₁⟩ − 2⟨φ₀φₙ₋₁⟩.

mod hyp;
mod quad;

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::precision::{bits_to_digits, format_rational, pow10, Mass, PrecisionPolicy, Real};

pub use quad::quadrature_oracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Phi,
    Pi,
}

/// A correlator value with a certified absolute error bound.
#[derive(Clone, Debug)]
pub struct Certified {
    pub value: Real,
    pub error: Real,
}

impl Certified {
    /// Number of correct significant decimal digits implied by the bound.
    pub fn digits(&self) -> u32 {
        if self.error.is_zero() {
            return bits_to_digits(self.value.prec());
        }
        let r = Float::with_val(64, &self.error / &*self.value.as_abs());
        let d = -r.log10().to_f64();
        if d.is_finite() && d > 0.0 {
            (d.floor() as u32).min(bits_to_digits(self.value.prec()))
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    kind: Kind,
    n: usize,
    m: String,
    working_digits: u32,
    target_digits: u32,
}

fn cache() -> &'static RwLock<HashMap<CacheKey, Certified>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Certified>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Drops every memoized correlator.
pub fn clear_cache() {
    cache().write().unwrap().clear();
}

fn key(kind: Kind, n: usize, m: &Mass, policy: &PrecisionPolicy) -> CacheKey {
    CacheKey {
        kind,
        n,
        m: format_rational(m.as_rational()),
        working_digits: policy.working_digits,
        target_digits: policy.target_digits,
    }
}

struct Kinematics {
    s: Float,
    z: Float,
    w: Float,
    sqrt_pi: Float,
}

fn kinematics(m: &Mass, bits: u32) -> Kinematics {
    let m2 = Rational::from(m.as_rational().square_ref());
    let s = Rational::from(&m2 + 2u32);
    let s2 = Rational::from(s.square_ref());
    let z = Rational::from(4u32) / &s2;
    // 1 − z = m²(m² + 4)/s², exact
    let w = (&m2 * Rational::from(&m2 + 4u32)) / &s2;
    let mut sqrt_pi = Float::with_val(bits, rug::float::Constant::Pi);
    sqrt_pi.sqrt_mut();
    Kinematics {
        s: Float::with_val(bits, &s),
        z: Float::with_val(bits, &z),
        w: Float::with_val(bits, &w),
        sqrt_pi,
    }
}

/// One evaluation of the closed form at `bits` of precision.
fn closed_form(kind: Kind, n: usize, m: &Mass, bits: u32) -> Result<hyp::SeriesSum> {
    let k = kinematics(m, bits);
    let n2 = 2 * n as i64;
    let q = |num: i64| Float::with_val(bits, num) / 4u32;
    let c = Float::with_val(bits, n as u64 + 1);
    let (a, b, shift) = match kind {
        Kind::Phi => (q(n2 + 1), q(n2 + 3), 1i64),
        Kind::Pi => (q(n2 - 1), q(n2 + 1), -1i64),
    };
    let f = hyp::hyp2f1(&a, &b, &c, &k.z, &k.w, bits)?;
    // Γ(n ± ½) / (√π Γ(n+1) s^(n ± ½))
    let half = Float::with_val(bits, n2 + shift) / 2u32;
    let mut pref = Float::with_val(bits, half.gamma_ref());
    pref /= &k.sqrt_pi;
    pref /= Float::with_val(bits, c.gamma_ref());
    let mut sp = Float::with_val(bits, k.s.ln_ref());
    sp *= &half;
    sp.exp_mut();
    pref /= &sp;
    if kind == Kind::Pi {
        pref /= -2i32;
    }
    Ok(f.scaled(&pref))
}

fn evaluate(kind: Kind, n: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<Certified> {
    policy.validate()?;
    let goal_bits = policy.bits();
    let goal = Float::with_val(goal_bits, Float::i_exp(1, 8 - goal_bits as i32));
    let target = policy.target_tol();
    let mut extra = 8u32;
    let mut best: Option<hyp::SeriesSum> = None;
    let mut escalations = 0;
    for rung in policy.ladder() {
        let bits = rung.bits().max(goal_bits) + extra;
        let s = match closed_form(kind, n, m, bits) {
            Ok(s) => s,
            Err(Error::PrecisionExhausted { .. }) => {
                extra *= 2;
                escalations = rung.escalation_level;
                continue;
            }
            Err(e) => return Err(e),
        };
        let rel = s.relative_error();
        if rel <= goal {
            return Ok(finish(s, goal_bits));
        }
        extra += s.cancellation_bits + 16;
        escalations = rung.escalation_level;
        let better = best.as_ref().is_none_or(|b| b.relative_error() > rel);
        if better {
            best = Some(s);
        }
    }
    match best {
        Some(s) if s.relative_error() <= target => Ok(finish(s, goal_bits)),
        Some(s) => Err(Error::PrecisionExhausted {
            escalations,
            estimate: s.value.to_string_radix(10, Some(30)),
            bound: s.error.to_string_radix(10, Some(6)),
        }),
        None => Err(Error::PrecisionExhausted {
            escalations,
            estimate: "none".into(),
            bound: "hypergeometric series did not converge".into(),
        }),
    }
}

fn finish(s: hyp::SeriesSum, bits: u32) -> Certified {
    let mut value = s.value;
    value.set_prec(bits);
    // account for the final rounding
    let mut error = s.error;
    error.set_prec(bits);
    error += Float::with_val(bits, &*value.as_abs() * Float::with_val(bits, Float::i_exp(1, -(bits as i32))));
    Certified { value, error }
}

fn cached(kind: Kind, n: usize, m: &Mass, policy: &PrecisionPolicy, compute: impl FnOnce() -> Result<Certified>) -> Result<Certified> {
    let k = key(kind, n, m, policy);
    if let Some(c) = cache().read().unwrap().get(&k) {
        return Ok(c.clone());
    }
    let c = compute()?;
    cache().write().unwrap().entry(k).or_insert_with(|| c.clone());
    Ok(c)
}

/// 2⟨0|φ₀φₙ|0⟩ with its error bound.
pub fn phi_certified(n: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<Certified> {
    cached(Kind::Phi, n, m, policy, || evaluate(Kind::Phi, n, m, policy))
}

/// 2⟨0|π₀πₙ|0⟩ with its error bound, after checking the hypergeometric value
/// against the field-correlator recurrence.
pub fn pi_certified(n: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<Certified> {
    cached(Kind::Pi, n, m, policy, || {
        let direct = evaluate(Kind::Pi, n, m, policy)?;
        let (rec, rec_err) = recurrence(n, m, policy)?;
        let bits = policy.bits();
        let diff = Float::with_val(bits, &direct.value - &rec).abs();
        let mut tol = Float::with_val(bits, &rec_err + &direct.error);
        tol *= 4u32;
        tol += Float::with_val(bits, &*direct.value.as_abs() * pow10(bits, -(policy.target_digits as i32)));
        if diff > tol {
            return Err(Error::Inconsistency(format!(
                "2<pi0 pi{n}> from the series ({}) and from the recurrence ({}) differ by {}",
                direct.value.to_string_radix(10, Some(25)),
                rec.to_string_radix(10, Some(25)),
                diff.to_string_radix(10, Some(5)),
            )));
        }
        Ok(direct)
    })
}

/// s·φₙ − φₙ₊₁ − φ_{|n−1|} and the propagated error bound.
fn recurrence(n: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<(Real, Real)> {
    let bits = policy.bits();
    let prev = phi_certified(n.abs_diff(1), m, policy)?;
    let cur = phi_certified(n, m, policy)?;
    let next = phi_certified(n + 1, m, policy)?;
    let s = Float::with_val(bits, Rational::from(m.as_rational().square_ref()) + 2u32);
    let mut v = Float::with_val(bits, &s * &cur.value);
    v -= &next.value;
    v -= &prev.value;
    let mut err = Float::with_val(bits, &s * &cur.error);
    err += &next.error;
    err += &prev.error;
    let mut scale = Float::with_val(bits, &s * &*cur.value.as_abs());
    scale += &*next.value.as_abs();
    scale += &*prev.value.as_abs();
    err += scale * Float::with_val(bits, Float::i_exp(1, 2 - bits as i32));
    Ok((v, err))
}

/// 2⟨0|φ₀φₙ|0⟩ to the policy's target digits.
pub fn phi_corr(n: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<Real> {
    phi_certified(n, m, policy).map(|c| c.value)
}

/// 2⟨0|π₀πₙ|0⟩ to the policy's target digits.
pub fn pi_corr(n: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<Real> {
    pi_certified(n, m, policy).map(|c| c.value)
}

/// Parses `m` and rejects the massless limit.
pub fn mass(text: &str) -> Result<Mass> {
    text.parse()
}

#[derive(Clone, Debug)]
pub struct CorrelationTable {
    pub m: Mass,
    pub n_max: usize,
    /// 2⟨φ₀φₙ⟩ for n = 0..=n_max.
    pub phi_vals: Vec<Real>,
    /// 2⟨π₀πₙ⟩ for n = 0..=n_max.
    pub pi_vals: Vec<Real>,
    /// Certified digits of the weaker of the two entries at each offset.
    pub digits: Vec<u32>,
    pub policy: PrecisionPolicy,
}

impl CorrelationTable {
    pub fn phi(&self, n: usize) -> &Real {
        &self.phi_vals[n]
    }

    pub fn pi(&self, n: usize) -> &Real {
        &self.pi_vals[n]
    }

    pub fn digits_certified(&self) -> u32 {
        self.digits.iter().copied().min().unwrap_or(0)
    }

    /// Checks signs, monotonicity and the recurrence residual.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check_invariants(&self) -> Result<()> {
        let bits = self.policy.bits();
        if !self.phi_vals[0].is_sign_positive() || self.phi_vals[0].is_zero() || !(self.pi_vals[0] > 0) {
            return Err(Error::Inconsistency("diagonal correlators must be positive".into()));
        }
        for n in 1..=self.n_max {
            if !(self.phi_vals[n] > 0) || !(self.phi_vals[n] < self.phi_vals[n - 1]) {
                return Err(Error::Inconsistency(format!("2<phi0 phi{n}> not positive and decreasing")));
            }
            if !(self.pi_vals[n] < 0) {
                return Err(Error::Inconsistency(format!("2<pi0 pi{n}> not negative")));
            }
        }
        let s = Float::with_val(bits, Rational::from(self.m.as_rational().square_ref()) + 2u32);
        let tol = pow10(bits, -(self.policy.target_digits as i32));
        for n in 1..self.n_max {
            let mut r = Float::with_val(bits, &s * &self.phi_vals[n]);
            r -= &self.phi_vals[n + 1];
            r -= &self.phi_vals[n - 1];
            r -= &self.pi_vals[n];
            let bound = Float::with_val(bits, &*self.pi_vals[n].as_abs() * &tol);
            if r.abs() > bound {
                return Err(Error::Inconsistency(format!("recurrence residual too large at n = {n}")));
            }
        }
        Ok(())
    }
}

/// Correlators for offsets 0..=n_max, evaluated once each (and memoized).
pub fn corr_table(n_max: usize, m: &Mass, policy: &PrecisionPolicy) -> Result<CorrelationTable> {
    corr_table_with(n_max, m, policy, Execution::default())
}

pub fn corr_table_with(n_max: usize, m: &Mass, policy: &PrecisionPolicy, exec: Execution) -> Result<CorrelationTable> {
    if n_max < 1 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    policy.validate()?;
    let offsets: Vec<usize> = (0..=n_max).collect();
    let rows = exec::map(&offsets, exec, |&n| -> Result<(Certified, Certified)> {
        let at = |e: Error| Error::AtOffset { n, source: Box::new(e) };
        let phi = phi_certified(n, m, policy).map_err(at)?;
        let pi = pi_certified(n, m, policy).map_err(at)?;
        Ok((phi, pi))
    });
    let mut phi_vals = Vec::with_capacity(n_max + 1);
    let mut pi_vals = Vec::with_capacity(n_max + 1);
    let mut digits = Vec::with_capacity(n_max + 1);
    for row in rows {
        let (phi, pi) = row?;
        digits.push(phi.digits().min(pi.digits()));
        phi_vals.push(phi.value);
        pi_vals.push(pi.value);
    }
    let table = CorrelationTable {
        m: m.clone(),
        n_max,
        phi_vals,
        pi_vals,
        digits,
        policy: policy.clone(),
    };
    table.check_invariants()?;
    Ok(table)
}
