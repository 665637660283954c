//! Independent check on the correlators: the Brillouin-zone integrals
//!
//! 2⟨φ₀φₙ⟩ = (1/π) ∫₀^π cos(np) / ω(p) dp,   2⟨π₀πₙ⟩ = (1/π) ∫₀^π cos(np) ω(p) dp,
//!
//! with ω(p) = √(m² + 4 sin²(p/2)), evaluated by tanh-sinh quadrature on
//! pieces split at the mass scale and at the zeros of cos(np).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::float::Constant;
use rug::{Assign, Float};

use crate::error::{Error, Result};
use crate::precision::{pow10, Mass, PrecisionPolicy, Real};

use super::Kind;

const MAX_LEVEL: u32 = 12;

/// Nodes of one refinement level on [-1, 1], positive abscissae only:
/// (1 − x, weight / h). Level 0 also carries the centre node first.
type Nodes = Arc<Vec<(Float, Float)>>;

fn node_cache() -> &'static Mutex<HashMap<(u32, u32), Nodes>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Nodes>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn nodes(bits: u32, level: u32) -> Nodes {
    if let Some(n) = node_cache().lock().unwrap().get(&(bits, level)) {
        return n.clone();
    }
    let computed = Arc::new(compute_nodes(bits, level));
    node_cache()
        .lock()
        .unwrap()
        .entry((bits, level))
        .or_insert(computed)
        .clone()
}

fn compute_nodes(bits: u32, level: u32) -> Vec<(Float, Float)> {
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    let h = Float::with_val(bits, Float::i_exp(1, -(level as i32)));
    let cutoff = Float::with_val(bits, Float::i_exp(1, -(bits as i32) - 40));
    let mut out = Vec::new();
    if level == 0 {
        out.push((Float::with_val(bits, 1), half_pi.clone()));
    }
    let step = if level == 0 { 1 } else { 2 };
    let mut k: u64 = 1;
    loop {
        let t = Float::with_val(bits, &h * k);
        let u = Float::with_val(bits, t.sinh_ref()) * &half_pi;
        // 1 − tanh u = 2 / (e^{2u} + 1)
        let e2u = Float::with_val(bits, Float::with_val(bits, &u * 2u32).exp_ref());
        let delta = Float::with_val(bits, 2u32 / Float::with_val(bits, &e2u + 1u32));
        let cu = Float::with_val(bits, u.cosh_ref());
        let mut w = Float::with_val(bits, t.cosh_ref()) * &half_pi;
        w /= Float::with_val(bits, cu.square_ref());
        if w < cutoff {
            break;
        }
        out.push((delta, w));
        k += step;
    }
    out
}

struct Piece {
    value: Float,
    error: Float,
}

fn integrand(kind: Kind, n: usize, m2: &Float, p: &Float, bits: u32) -> Float {
    let mut s = Float::with_val(bits, p / 2u32);
    s.sin_mut();
    s.square_mut();
    s *= 4u32;
    s += m2;
    s.sqrt_mut();
    let mut c = Float::with_val(bits, p * n as u32);
    c.cos_mut();
    match kind {
        Kind::Phi => c / s,
        Kind::Pi => c * s,
    }
}

fn integrate_piece(kind: Kind, n: usize, m2: &Float, lo: &Float, hi: &Float, bits: u32) -> Result<Piece> {
    let half = Float::with_val(bits, hi - lo) / 2u32;
    let rel = Float::with_val(bits, Float::i_exp(1, 24 - bits as i32));
    let mut total = Float::new(bits);
    let mut prev: Option<Float> = None;
    let mut x = Float::new(bits);
    let mut tmp = Float::new(bits);
    for level in 0..=MAX_LEVEL {
        let nodes = nodes(bits, level);
        for (j, (delta, w)) in nodes.iter().enumerate() {
            tmp.assign(&half * delta);
            if level == 0 && j == 0 {
                // centre node, δ = 1
                x.assign(lo + &tmp);
                total += integrand(kind, n, m2, &x, bits) * w;
                continue;
            }
            x.assign(hi - &tmp);
            let mut f = integrand(kind, n, m2, &x, bits);
            x.assign(lo + &tmp);
            f += integrand(kind, n, m2, &x, bits);
            f *= w;
            total += &f;
        }
        let h = Float::with_val(bits, Float::i_exp(1, -(level as i32)));
        let estimate = Float::with_val(bits, &total * &h) * &half;
        if let Some(p) = prev {
            let diff = Float::with_val(bits, &estimate - &p).abs();
            let scale = Float::with_val(bits, &*estimate.as_abs() * &rel);
            if level >= 3 && diff <= scale {
                return Ok(Piece { value: estimate, error: diff });
            }
        }
        prev = Some(estimate);
    }
    Err(Error::PrecisionExhausted {
        escalations: 0,
        estimate: prev.map(|p| p.to_string_radix(10, Some(20))).unwrap_or_default(),
        bound: format!("tanh-sinh did not settle by level {MAX_LEVEL}"),
    })
}

fn breakpoints(n: usize, m: &Float, bits: u32) -> Vec<Float> {
    let pi = Float::with_val(bits, Constant::Pi);
    let mut pts = vec![Float::new(bits), pi.clone()];
    let mut s = m.clone();
    while s < pi {
        pts.push(s.clone());
        s *= 2u32;
    }
    for j in 1..n {
        pts.push(Float::with_val(bits, &pi * j as u32) / n as u32);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min_gap = pi.to_f64() * 1e-9;
    let mut out: Vec<Float> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(q) if (p.to_f64() - q.to_f64()).abs() < min_gap && p != pi => {}
            _ => out.push(p),
        }
    }
    // keep π as the exact upper endpoint
    if let Some(last) = out.last_mut() {
        if *last != pi {
            if (last.to_f64() - pi.to_f64()).abs() < min_gap {
                *last = pi.clone();
            } else {
                out.push(pi);
            }
        }
    }
    out
}

fn integrate(kind: Kind, n: usize, m: &Mass, bits: u32) -> Result<(Float, Float)> {
    let mf = m.to_real(bits);
    let m2 = Float::with_val(bits, mf.square_ref());
    let pts = breakpoints(n, &mf, bits);
    let mut value = Float::new(bits);
    let mut error = Float::new(bits);
    for w in pts.windows(2) {
        let piece = integrate_piece(kind, n, &m2, &w[0], &w[1], bits)?;
        value += &piece.value;
        error += &piece.error;
    }
    let pi = Float::with_val(bits, Constant::Pi);
    value /= &pi;
    error /= &pi;
    Ok((value, error))
}

/// Evaluates the correlator integral directly; shares no code with the
/// hypergeometric evaluation.
pub fn quadrature_oracle(n: usize, m: &Mass, kind: Kind, policy: &PrecisionPolicy) -> Result<Real> {
    policy.validate()?;
    let mut extra = 16u32;
    let mut last = None;
    let mut escalations = 0;
    for p in policy.ladder() {
        let bits = p.bits() + extra;
        let (value, error) = integrate(kind, n, m, bits)?;
        let tol = Float::with_val(bits, &*value.as_abs() * pow10(bits, -(policy.target_digits as i32)));
        if error <= tol {
            let mut v = value;
            v.set_prec(policy.bits());
            return Ok(v);
        }
        // cancellation between pieces: add the missing bits on top of the next rung
        let lost = Float::with_val(64, &error / &tol).log2().to_f64();
        if lost.is_finite() {
            extra += lost.ceil().max(0.0) as u32 + 8;
        }
        last = Some((value, error));
        escalations = p.escalation_level;
    }
    let (value, error) = last.expect("ladder is never empty");
    Err(Error::PrecisionExhausted {
        escalations,
        estimate: value.to_string_radix(10, Some(30)),
        bound: error.to_string_radix(10, Some(6)),
    })
}
