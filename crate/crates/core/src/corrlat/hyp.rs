//! Gauss hypergeometric function ₂F₁(a, b; c; z) for real parameters and
//! `0 ≤ z < 1`, in the two forms the lattice correlators need:
//!
//! * the defining power series for `z ≤ 1/2`;
//! * the linear transformation `z → 1 − z` in the logarithmic case
//!   `c − a − b = m ∈ ℕ` (Abramowitz & Stegun 15.3.10–15.3.11) otherwise.
//!
//! Every evaluation reports an absolute error bound (ratio-test truncation
//! tail plus a rounding estimate) and how many bits were lost to cancellation,
//! so callers can re-run at a higher precision.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Float};

use crate::error::{Error, Result};

const MAX_TERMS: usize = 2_000_000;

#[derive(Clone, Debug)]
pub(crate) struct SeriesSum {
    pub value: Float,
    /// Absolute error bound on `value`.
    pub error: Float,
    /// `log2(Σ|terms| / |value|)`, zero when all terms share a sign.
    pub cancellation_bits: u32,
}

impl SeriesSum {
    pub fn relative_error(&self) -> Float {
        if self.value.is_zero() {
            return Float::with_val(self.value.prec(), rug::float::Special::Infinity);
        }
        Float::with_val(self.value.prec(), &self.error / &*self.value.as_abs())
    }

    pub fn scaled(&self, factor: &Float) -> Self {
        let p = self.value.prec();
        Self {
            value: Float::with_val(p, &self.value * factor),
            error: Float::with_val(p, &self.error * &*factor.as_abs()),
            cancellation_bits: self.cancellation_bits,
        }
    }
}

fn eps(bits: u32) -> Float {
    Float::with_val(bits, Float::i_exp(1, 1 - bits as i32))
}

fn cancellation(abs_total: &Float, value: &Float) -> u32 {
    if value.is_zero() {
        return abs_total.prec();
    }
    let r = Float::with_val(64, abs_total / &*value.as_abs());
    let bits = r.log2().to_f64();
    if bits.is_finite() && bits > 0.0 {
        bits.ceil() as u32
    } else {
        0
    }
}

/// ₂F₁(a, b; c; z) where `w = 1 − z` is supplied exactly by the caller.
pub(crate) fn hyp2f1(a: &Float, b: &Float, c: &Float, z: &Float, w: &Float, bits: u32) -> Result<SeriesSum> {
    if z.is_sign_negative() || *z >= 1 {
        return Err(Error::InvalidInput(format!(
            "hypergeometric argument must lie in [0, 1), got {}",
            z.to_f64()
        )));
    }
    if *z <= 0.5 {
        return direct_series(a, b, c, z, bits);
    }
    let excess = Float::with_val(bits, c - a) - b;
    let m = excess.to_f64().round();
    let is_integer = excess.is_integer();
    if !is_integer || m < 0.0 {
        return Err(Error::InvalidInput(
            "linear transformation is only implemented for c - a - b a non-negative integer".into(),
        ));
    }
    if m == 0.0 {
        log_case_zero(a, b, w, bits)
    } else {
        log_case(a, b, c, w, m as u32, bits)
    }
}

/// Σ (a)_k (b)_k / ((c)_k k!) z^k.
pub(crate) fn direct_series(a: &Float, b: &Float, c: &Float, z: &Float, bits: u32) -> Result<SeriesSum> {
    let eps = eps(bits);
    let mut term = Float::with_val(bits, 1);
    let mut sum = Float::with_val(bits, 1);
    let mut abs_total = Float::with_val(bits, 1);
    let mut ratio = Float::new(bits);
    let mut tmp = Float::new(bits);
    let zf = z.to_f64();
    for k in 0..MAX_TERMS {
        // ratio = (a+k)(b+k) z / ((c+k)(k+1))
        ratio.assign(a + k as u32);
        tmp.assign(b + k as u32);
        ratio *= &tmp;
        ratio *= z;
        tmp.assign(c + k as u32);
        tmp *= (k + 1) as u32;
        ratio /= &tmp;
        term *= &ratio;
        sum += &term;
        abs_total += &*term.as_abs();
        let r = ratio.to_f64().abs();
        if r < 1.0 {
            let rho = r.max(zf);
            let mut tail = Float::with_val(bits, &*term.as_abs());
            tail *= rho / (1.0 - rho);
            tmp.assign(&eps * &*sum.as_abs());
            if tail <= tmp {
                let mut error = Float::with_val(bits, &abs_total * &eps);
                error *= (4 * (k + 2)) as u32;
                error += &tail;
                let cancellation_bits = cancellation(&abs_total, &sum);
                return Ok(SeriesSum { value: sum, error, cancellation_bits });
            }
        }
    }
    Err(Error::PrecisionExhausted {
        escalations: 0,
        estimate: sum.to_string_radix(10, Some(20)),
        bound: "series did not converge".into(),
    })
}

/// c = a + b: Γ(a+b)/(Γ(a)Γ(b)) Σ (a)_k(b)_k/(k!)² [2ψ(k+1) − ψ(a+k) − ψ(b+k) − ln w] w^k.
fn log_case_zero(a: &Float, b: &Float, w: &Float, bits: u32) -> Result<SeriesSum> {
    let eps = eps(bits);
    let lnw = Float::with_val(bits, w.ln_ref());
    let mut psi1 = -Float::with_val(bits, Constant::Euler);
    let mut psia = Float::with_val(bits, a.digamma_ref());
    let mut psib = Float::with_val(bits, b.digamma_ref());
    let mut coef = Float::with_val(bits, 1);
    let mut sum = Float::new(bits);
    let mut abs_total = Float::new(bits);
    let mut bracket = Float::new(bits);
    let mut tmp = Float::new(bits);
    let mut ratio = Float::new(bits);
    let wf = w.to_f64();
    for k in 0..MAX_TERMS {
        bracket.assign(&psi1 * 2u32);
        bracket -= &psia;
        bracket -= &psib;
        bracket -= &lnw;
        tmp.assign(&coef * &bracket);
        sum += &tmp;
        abs_total += &*tmp.as_abs();
        // advance
        ratio.assign(a + k as u32);
        tmp.assign(b + k as u32);
        ratio *= &tmp;
        ratio *= w;
        ratio /= ((k + 1) * (k + 1)) as u32;
        coef *= &ratio;
        tmp.assign(a + k as u32);
        tmp.recip_mut();
        psia += &tmp;
        tmp.assign(b + k as u32);
        tmp.recip_mut();
        psib += &tmp;
        psi1 += Float::with_val(bits, 1) / ((k + 1) as u32);
        let r = ratio.to_f64().abs();
        if r < 1.0 && k > 0 {
            let rho = r.max(wf);
            let bmax = bracket.to_f64().abs() + lnw.to_f64().abs() + 1.0;
            let mut tail = Float::with_val(bits, &*coef.as_abs());
            tail *= bmax * rho / (1.0 - rho) + bmax;
            tmp.assign(&eps * &*sum.as_abs());
            if tail <= tmp {
                let pref = gamma_ratio(a, b, bits);
                let mut error = Float::with_val(bits, &abs_total * &eps);
                error *= (8 * (k + 2)) as u32;
                error += &tail;
                let cancellation_bits = cancellation(&abs_total, &sum);
                let s = SeriesSum { value: sum, error, cancellation_bits };
                return Ok(s.scaled(&pref));
            }
        }
    }
    Err(Error::PrecisionExhausted {
        escalations: 0,
        estimate: sum.to_string_radix(10, Some(20)),
        bound: "logarithmic series did not converge".into(),
    })
}

/// Γ(a+b) / (Γ(a) Γ(b)).
fn gamma_ratio(a: &Float, b: &Float, bits: u32) -> Float {
    let ab = Float::with_val(bits, a + b);
    let mut g = Float::with_val(bits, ab.gamma_ref());
    g /= Float::with_val(bits, a.gamma_ref());
    g /= Float::with_val(bits, b.gamma_ref());
    g
}

/// c = a + b + m, m ≥ 1 (A&S 15.3.11):
///
/// F = Γ(m)Γ(c)/(Γ(a+m)Γ(b+m)) Σ_{k<m} (a)_k(b)_k/(k!(1−m)_k) w^k
///   − (−w)^m Γ(c)/(Γ(a)Γ(b)) Σ_k (a+m)_k(b+m)_k/(k!(k+m)!) w^k
///       [ln w − ψ(k+1) − ψ(k+m+1) + ψ(a+k+m) + ψ(b+k+m)]
fn log_case(a: &Float, b: &Float, c: &Float, w: &Float, m: u32, bits: u32) -> Result<SeriesSum> {
    let eps = eps(bits);
    let gc = Float::with_val(bits, c.gamma_ref());

    // finite part
    let mut finite = Float::new(bits);
    let mut coef = Float::with_val(bits, 1);
    let mut tmp = Float::new(bits);
    for k in 0..m {
        finite += &coef;
        // (a+k)(b+k) w / ((k+1)(1-m+k))
        tmp.assign(a + k);
        coef *= &tmp;
        tmp.assign(b + k);
        coef *= &tmp;
        coef *= w;
        coef /= (k + 1) as i64 * (k as i64 + 1 - m as i64);
    }
    let mut fpref = Float::with_val(bits, Float::with_val(bits, m).gamma_ref());
    fpref *= &gc;
    fpref /= Float::with_val(bits, Float::with_val(bits, a + m).gamma_ref());
    fpref /= Float::with_val(bits, Float::with_val(bits, b + m).gamma_ref());
    finite *= &fpref;

    // logarithmic part
    let lnw = Float::with_val(bits, w.ln_ref());
    let mut psi_k1 = -Float::with_val(bits, Constant::Euler);
    let mut psi_km1 = Float::with_val(bits, Float::with_val(bits, m + 1).digamma_ref());
    let am = Float::with_val(bits, a + m);
    let bm = Float::with_val(bits, b + m);
    let mut psi_a = Float::with_val(bits, am.digamma_ref());
    let mut psi_b = Float::with_val(bits, bm.digamma_ref());
    let mut factorial_m = Float::with_val(bits, 1);
    for i in 2..=m {
        factorial_m *= i;
    }
    let mut u = Float::with_val(bits, factorial_m.recip_ref());
    let mut sum = Float::new(bits);
    let mut abs_total = Float::new(bits);
    let mut bracket = Float::new(bits);
    let mut ratio = Float::new(bits);
    let wf = w.to_f64();
    let mut converged = None;
    for k in 0..MAX_TERMS {
        bracket.assign(&lnw - &psi_k1);
        bracket -= &psi_km1;
        bracket += &psi_a;
        bracket += &psi_b;
        tmp.assign(&u * &bracket);
        sum += &tmp;
        abs_total += &*tmp.as_abs();
        ratio.assign(&am + k as u32);
        tmp.assign(&bm + k as u32);
        ratio *= &tmp;
        ratio *= w;
        ratio /= ((k + 1) as u64 * (k as u64 + m as u64 + 1)) as f64;
        u *= &ratio;
        tmp.assign(&am + k as u32);
        tmp.recip_mut();
        psi_a += &tmp;
        tmp.assign(&bm + k as u32);
        tmp.recip_mut();
        psi_b += &tmp;
        psi_k1 += Float::with_val(bits, 1) / ((k + 1) as u32);
        psi_km1 += Float::with_val(bits, 1) / ((k as u32) + m + 1);
        let r = ratio.to_f64().abs();
        if r < 1.0 && k > 0 {
            let rho = r.max(wf);
            let bmax = bracket.to_f64().abs() + lnw.to_f64().abs() + 1.0;
            let mut tail = Float::with_val(bits, &*u.as_abs());
            tail *= bmax * rho / (1.0 - rho) + bmax;
            tmp.assign(&eps * &*sum.as_abs());
            if tail <= tmp {
                converged = Some((k, tail));
                break;
            }
        }
    }
    let Some((k, tail)) = converged else {
        return Err(Error::PrecisionExhausted {
            escalations: 0,
            estimate: sum.to_string_radix(10, Some(20)),
            bound: "logarithmic series did not converge".into(),
        });
    };
    // −(−w)^m Γ(c)/(Γ(a)Γ(b))
    let mut lpref = Float::with_val(bits, Float::with_val(bits, w).pow(m));
    if m.is_multiple_of(2) {
        lpref = -lpref;
    }
    lpref *= &gc;
    lpref /= Float::with_val(bits, a.gamma_ref());
    lpref /= Float::with_val(bits, b.gamma_ref());

    let log_part = Float::with_val(bits, &sum * &lpref);
    let mut value = Float::with_val(bits, &finite + &log_part);
    let mut abs_all = Float::with_val(bits, &abs_total * &*lpref.as_abs());
    abs_all += &*finite.as_abs();
    let mut error = Float::with_val(bits, &abs_all * &eps);
    error *= (8 * (k + 2 + m as usize)) as u32;
    error += Float::with_val(bits, &tail * &*lpref.as_abs());
    let cancellation_bits = cancellation(&abs_all, &value);
    value.set_prec(bits);
    Ok(SeriesSum { value, error, cancellation_bits })
}
