use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;
use vacneg::corrlat::{corr_table, phi_corr, pi_corr, quadrature_oracle, Kind};
use vacneg::precision::pow10;
use vacneg::{Mass, PrecisionPolicy};

fn mass(s: &str) -> Mass {
    s.parse().unwrap()
}

fn assert_rel(a: &Float, b: &Float, digits: u32, what: &str) {
    let bits = a.prec().max(b.prec());
    let diff = Float::with_val(bits, a - b).abs();
    let tol = Float::with_val(bits, &*b.as_abs() * pow10(bits, -(digits as i32)));
    assert!(diff <= tol, "{what}: {} vs {} (diff {})", a.to_f64(), b.to_f64(), diff.to_f64());
}

#[test]
fn phi_matches_quadrature_at_unit_mass() {
    let p = PrecisionPolicy::for_target(50);
    let m = mass("1");
    let series = phi_corr(0, &m, &p).unwrap();
    let quad = quadrature_oracle(0, &m, Kind::Phi, &p).unwrap();
    assert_rel(&series, &quad, 50, "phi(0), m = 1");
}

#[test]
fn pi_matches_quadrature_and_is_negative() {
    let p = PrecisionPolicy::for_target(40);
    let m = mass("1");
    let series = pi_corr(1, &m, &p).unwrap();
    assert!(series < 0);
    let quad = quadrature_oracle(1, &m, Kind::Pi, &p).unwrap();
    assert_rel(&series, &quad, 40, "pi(1), m = 1");
}

#[test]
fn oracle_sign_and_large_mass_limit() {
    let p = PrecisionPolicy::for_target(30);
    assert!(quadrature_oracle(7, &mass("0.3"), Kind::Pi, &p).unwrap() < 0);
    let big = quadrature_oracle(0, &mass("1e6"), Kind::Pi, &p).unwrap().to_f64();
    assert!((big / 1e6 - 1.0).abs() < 1e-11);
}

#[test]
fn small_mass_table_matches_oracle_at_random_offsets() {
    let p = PrecisionPolicy::for_target(30);
    let m = mass("0.02");
    let t = corr_table(50, &m, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let n = rng.gen_range(0..=50);
        let qp = quadrature_oracle(n, &m, Kind::Phi, &p).unwrap();
        let qm = quadrature_oracle(n, &m, Kind::Pi, &p).unwrap();
        assert_rel(t.phi(n), &qp, 30, &format!("phi({n})"));
        assert_rel(t.pi(n), &qm, 30, &format!("pi({n})"));
    }
}

#[test]
fn recurrence_holds_across_masses() {
    let p = PrecisionPolicy::for_target(40);
    for m in ["1e-3", "0.1", "1", "10"] {
        let m = mass(m);
        let s = Float::with_val(p.bits(), rug::Rational::from(m.as_rational() * m.as_rational())) + 2u32;
        let t = corr_table(61, &m, &p).unwrap();
        for n in 1..=60 {
            let rec = Float::with_val(p.bits(), &s * t.phi(n)) - t.phi(n + 1) - t.phi(n - 1);
            assert_rel(&rec, t.pi(n), 38, &format!("recurrence at n = {n}, m = {m}"));
        }
    }
}

#[test]
fn recurrence_example_at_mass_one_half() {
    let p = PrecisionPolicy::for_target(40);
    let m = mass("0.5");
    let s = Float::with_val(p.bits(), 2.25);
    let rec = Float::with_val(p.bits(), &s * phi_corr(3, &m, &p).unwrap())
        - phi_corr(4, &m, &p).unwrap()
        - phi_corr(2, &m, &p).unwrap();
    assert_rel(&rec, &pi_corr(3, &m, &p).unwrap(), 38, "pi(3), m = 0.5");
}

#[test]
fn sign_pattern() {
    let p = PrecisionPolicy::for_target(30);
    for m in ["1e-10", "0.01", "0.7", "3"] {
        let t = corr_table(40, &mass(m), &p).unwrap();
        assert!(t.pi(0) > &0);
        for n in 0..=40 {
            assert!(t.phi(n) > &0);
            if n > 0 {
                assert!(t.pi(n) < &0);
                assert!(t.phi(n) < t.phi(n - 1));
            }
        }
    }
}

#[test]
fn massless_limit_is_an_error() {
    assert!("0".parse::<Mass>().is_err());
    assert!("0.000".parse::<Mass>().is_err());
}

// Σ_n 2⟨π₀πₙ⟩·2⟨φ₀φ_{n−k}⟩ over |n| ≤ N approaches δ_{0k} as N grows.
#[test]
fn momentum_and_field_correlators_are_inverse() {
    let p = PrecisionPolicy::for_target(30);
    let m = mass("1");
    let big = 4000usize;
    let t = corr_table(big + 2, &m, &p).unwrap();
    let bits = p.bits();
    let defect = |k: usize, cut: usize| {
        let mut s = Float::new(bits);
        for n in -(cut as i64)..=(cut as i64) {
            let j = (n - k as i64).unsigned_abs() as usize;
            s += Float::with_val(bits, t.pi(n.unsigned_abs() as usize) * t.phi(j));
        }
        if k == 0 {
            s -= 1u32;
        }
        s.abs().to_f64()
    };
    for k in 0..=2 {
        let mut previous = f64::INFINITY;
        let mut cut = 8;
        while cut <= big {
            let d = defect(k, cut);
            assert!(d <= previous || d < 1e-30, "k = {k}, N = {cut}: {d:e}");
            previous = d;
            cut *= 2;
        }
        assert!(defect(k, big) < 1e-30);
    }
}

#[test]
fn concurrent_evaluation_is_consistent() {
    let p = PrecisionPolicy::for_target(30);
    let m = mass("0.37");
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (m, p) = (m.clone(), p.clone());
            std::thread::spawn(move || corr_table(20, &m, &p).unwrap())
        })
        .collect();
    let tables: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    for t in &tables[1..] {
        assert_eq!(t.phi_vals, tables[0].phi_vals);
        assert_eq!(t.pi_vals, tables[0].pi_vals);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn series_agrees_with_quadrature(log_m in -2.0f64..1.0, n in 0usize..25) {
        let p = PrecisionPolicy::for_target(25);
        let m: Mass = format!("{:.6}", 10f64.powf(log_m)).parse().unwrap();
        let phi = phi_corr(n, &m, &p).unwrap();
        let pi = pi_corr(n, &m, &p).unwrap();
        assert_rel(&phi, &quadrature_oracle(n, &m, Kind::Phi, &p).unwrap(), 25, "phi");
        assert_rel(&pi, &quadrature_oracle(n, &m, Kind::Pi, &p).unwrap(), 25, "pi");
    }
}
