//! Pipelines behind each subcommand. Every runner writes its artifact (when
//! `out` is set) and returns the one-line summary plus an outcome.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use vacneg::cmkit::{build_region_pair_cm, physicality, semidef_report, LatticeConfig};
use vacneg::corrlat::{phi_certified, pi_certified};
use vacneg::entangle::{consolidate, log_negativity, Verdict};
use vacneg::linalg::Mat;
use vacneg::precision::{bits_to_digits, fmt_real, format_rational, Real};
use vacneg::profiles::{export_profiles_csv, export_profiles_json, extraction_report, swap_scan, theta_grid};
use vacneg::sweeps::{
    decay_scan, entanglement_sphere, min_negativity_scan, negativity_heatmap, persist, run_resumable, sphere_growth,
    write_json, Format, Manifest, SphereRadius, Status, SweepRecord,
};
use vacneg::symplectic::pt_spectrum_reduced;
use vacneg::{Error, Mass, Result};

use crate::config::{Cmd, Plan, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Undecided,
    Failed,
}

pub struct Report {
    pub summary: Value,
    pub outcome: Outcome,
}

fn done(summary: Value) -> Report {
    Report { summary, outcome: Outcome::Done }
}

fn s(x: &Real, digits: u32) -> String {
    fmt_real(x, digits)
}

fn mat(m: &Mat) -> Vec<Vec<String>> {
    let digits = bits_to_digits(m.prec());
    (0..m.rows()).map(|i| m.row(i).iter().map(|x| fmt_real(x, digits)).collect()).collect()
}

fn config_json(c: &LatticeConfig) -> Value {
    json!({
        "d": c.d,
        "r_tilde": c.r_tilde,
        "m": format_rational(c.m.as_rational()),
        "md": format_rational(&c.md()),
        "mrt": format_rational(&c.mrt()),
        "target_digits": c.policy.target_digits,
    })
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn artifact<T: Serialize + ?Sized>(plan: &Plan, value: &T) -> Result<()> {
    match &plan.out {
        Some(p) => write_json(value, p),
        None => Ok(()),
    }
}

fn verdict_outcome(v: Verdict) -> Outcome {
    if v == Verdict::Undecided {
        Outcome::Undecided
    } else {
        Outcome::Done
    }
}

pub fn run(plan: &Plan) -> Result<Report> {
    match &plan.target {
        Target::Corr { m, offsets, table } => corr(plan, m, offsets, *table),
        Target::Single(c) => match plan.cmd {
            Cmd::Cm => cm(plan, c),
            Cmd::Spectrum => spectrum(plan, c),
            Cmd::Neg => neg(plan, c),
            Cmd::Consolidate => consolidation(plan, c),
            Cmd::Profile => profile(plan, c),
            Cmd::Swap => swap(plan, c),
            _ => unreachable!("single-config target for {}", plan.cmd),
        },
        Target::Sphere { d, m } => sphere(plan, *d, m),
        Target::Heatmap { md_list, mrt_list, rule } => {
            let records = match &plan.manifest {
                Some(man) => {
                    let out = plan.out.as_ref().expect("validated");
                    let mut configs = Vec::new();
                    let mut skipped = 0usize;
                    for md in md_list {
                        for mrt in mrt_list {
                            match rule.realize(md, mrt, &plan.policy)? {
                                Some(c) => configs.push(c),
                                None => skipped += 1,
                            }
                        }
                    }
                    let mut manifest = Manifest::open(man)?;
                    let recs = run_resumable(&configs, out, &mut manifest, plan.exec, 16)?;
                    return Ok(records_report(
                        plan,
                        &recs,
                        json!({"resumed": configs.len() - recs.len(), "skipped": skipped}),
                    ));
                }
                None => negativity_heatmap(md_list, mrt_list, *rule, &plan.policy, plan.exec)?,
            };
            if let Some(p) = &plan.out {
                persist(&records, p, plan.format)?;
            }
            Ok(records_report(plan, &records, json!({})))
        }
        Target::ScanMin { md, d_list } => {
            let r = min_negativity_scan(md, d_list, &plan.policy, plan.exec)?;
            scan_artifact(plan, &r, &r.records)?;
            Ok(done(json!({
                "command": "scan-min",
                "md": format_rational(md),
                "fit": r.fit,
                "excluded": r.excluded,
            })))
        }
        Target::ScanDecay { md, mrt_list, d_list } => {
            let r = decay_scan(md, mrt_list, d_list, &plan.policy, plan.exec)?;
            scan_artifact(plan, &r, &r.records)?;
            Ok(done(json!({
                "command": "scan-decay",
                "md": format_rational(md),
                "pixelation_gaps": r.pixelation_gaps,
                "convergent_sequence": r.convergent_sequence,
                "linear_fit": r.linear_fit,
                "quadratic_fit": r.quadratic_fit,
                "large_linear_fit": r.large_linear_fit,
                "prefers_quadratic": r.prefers_quadratic(),
            })))
        }
        Target::SphereGrowth { md, d_list } => {
            let r = sphere_growth(md, d_list, &plan.policy, plan.exec)?;
            scan_artifact(plan, &r, &r.records)?;
            let undecided = r.spheres.iter().any(|s| matches!(s.radius, SphereRadius::Bracket(..)));
            Ok(Report {
                summary: json!({
                    "command": "sphere-growth",
                    "md": format_rational(md),
                    "ratios": r.ratios,
                    "fit": r.fit,
                }),
                outcome: if undecided { Outcome::Undecided } else { Outcome::Done },
            })
        }
    }
}

fn scan_artifact<T: Serialize>(plan: &Plan, full: &T, records: &[SweepRecord]) -> Result<()> {
    match (&plan.out, plan.format) {
        (Some(p), Format::Csv) => persist(records, p, Format::Csv),
        _ => artifact(plan, full),
    }
}

fn records_report(plan: &Plan, records: &[SweepRecord], extra: Value) -> Report {
    let count = |f: &dyn Fn(&SweepRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let failed = count(&|r| r.status == Status::Failed);
    let undecided = count(&|r| r.verdict == Some(Verdict::Undecided));
    let summary = with(
        json!({
            "command": plan.cmd.as_str(),
            "points": records.len(),
            "entangled": count(&|r| r.verdict == Some(Verdict::Entangled)),
            "separable": count(&|r| r.verdict == Some(Verdict::Separable)),
            "undecided": undecided,
            "skipped": count(&|r| r.status == Status::Skipped),
            "failed": failed,
        }),
        extra,
    );
    let outcome = if failed > 0 {
        Outcome::Failed
    } else if undecided > 0 {
        Outcome::Undecided
    } else {
        Outcome::Done
    };
    Report { summary, outcome }
}

fn corr(plan: &Plan, m: &Mass, offsets: &[usize], table: bool) -> Result<Report> {
    let t = plan.policy.target_digits;
    let rows = vacneg::exec::map(offsets, plan.exec, |&n| -> Result<(usize, Real, Real, u32)> {
        let phi = phi_certified(n, m, &plan.policy)?;
        let pi = pi_certified(n, m, &plan.policy)?;
        let digits = phi.digits().min(pi.digits());
        Ok((n, phi.value, pi.value, digits))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let text: Vec<[String; 4]> =
        rows.iter().map(|(n, a, b, k)| [n.to_string(), s(a, t), s(b, t), k.to_string()]).collect();
    if let Some(p) = &plan.out {
        match plan.format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(p)?;
                w.write_record(["n", "phi", "pi", "digits"])?;
                for r in &text {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            Format::Json => {
                let rows: Vec<Value> =
                    text.iter().map(|r| json!({"n": r[0].parse::<usize>().unwrap_or(0), "phi": r[1], "pi": r[2], "digits": r[3].parse::<u32>().unwrap_or(0)})).collect();
                write_json(&json!({"m": m.to_string(), "policy": plan.policy, "rows": rows}), p)?;
            }
        }
    }
    let summary = if table {
        json!({
            "command": "corr",
            "m": m.to_string(),
            "n_max": offsets.last(),
            "digits_certified": rows.iter().map(|r| r.3).min(),
        })
    } else {
        let r = &text[0];
        json!({"command": "corr", "m": m.to_string(), "n": rows[0].0, "phi": r[1], "pi": r[2], "digits": rows[0].3})
    };
    Ok(done(summary))
}

fn cm(plan: &Plan, c: &LatticeConfig) -> Result<Report> {
    let cm = build_region_pair_cm(c)?;
    let phys = physicality(&cm)?;
    let semidef = semidef_report(&cm)?;
    let t = c.policy.target_digits;
    let blocks: serde_json::Map<String, Value> =
        cm.blocks().iter().map(|(name, m)| (name.to_string(), json!(mat(m)))).collect();
    artifact(
        plan,
        &json!({
            "config": config_json(c),
            "blocks": blocks,
            "min_nu": s(&phys.min_nu, t),
            "physical": phys.pass,
            "semidefinite": semidef,
        }),
    )?;
    Ok(done(with(
        json!({"command": "cm"}),
        with(config_json(c), json!({"physical": phys.pass, "min_nu": s(&phys.min_nu, t), "semidefinite": semidef.pass()})),
    )))
}

fn spectrum(plan: &Plan, c: &LatticeConfig) -> Result<Report> {
    let cm = build_region_pair_cm(c)?;
    let (minus, plus) = pt_spectrum_reduced(&cm)?;
    artifact(plan, &json!({"config": config_json(c), "minus": minus, "plus": plus}))?;
    let undecided = minus.n_undecided + plus.n_undecided;
    Ok(Report {
        summary: with(
            json!({"command": "spectrum"}),
            with(
                config_json(c),
                json!({
                    "nu_min": s(minus.min(), c.policy.target_digits),
                    "n_minus": minus.n_minus,
                    "n_undecided": undecided,
                }),
            ),
        ),
        outcome: if undecided > 0 { Outcome::Undecided } else { Outcome::Done },
    })
}

fn neg(plan: &Plan, c: &LatticeConfig) -> Result<Report> {
    let cm = build_region_pair_cm(c)?;
    let r = log_negativity(&cm)?;
    let t = c.policy.target_digits;
    let verdict = r.verdict();
    artifact(plan, &json!({"config": config_json(c), "verdict": verdict, "negativity": r}))?;
    Ok(Report {
        summary: with(
            json!({"command": "neg"}),
            with(
                config_json(c),
                json!({
                    "N_bits": s(&r.value, t),
                    "N_nats": s(&r.value_nats(), t),
                    "n_minus": r.n_minus,
                    "verdict": verdict,
                    "nu_min": s(&r.nu_min, t),
                    "digits_used": r.policy.working_digits,
                }),
            ),
        ),
        outcome: verdict_outcome(verdict),
    })
}

fn consolidation(plan: &Plan, c: &LatticeConfig) -> Result<Report> {
    let cm = build_region_pair_cm(c)?;
    let r = consolidate(&cm)?;
    let t = c.policy.target_digits;
    let pair = |p: &vacneg::entangle::ModePair| json!({"N_bits": s(&p.negativity, t), "nu": s(&p.nu, t), "cm": mat(&p.cm)});
    let pairs: Vec<Value> = r.pairs.iter().map(pair).collect();
    let residual: Vec<Value> = r.residual_pairs.iter().map(pair).collect();
    let sum = r.pair_sum();
    artifact(
        plan,
        &json!({
            "config": config_json(c),
            "total": r.total,
            "pair_sum": s(&sum, t),
            "pairs": pairs,
            "residual_pairs": residual,
        }),
    )?;
    Ok(done(with(
        json!({"command": "consolidate"}),
        with(
            config_json(c),
            json!({
                "N_bits": s(&r.total.value, t),
                "pair_sum": s(&sum, t),
                "pairs": r.pairs.len(),
                "pair_N_bits": r.pairs.iter().map(|p| s(&p.negativity, t)).collect::<Vec<_>>(),
            }),
        ),
    )))
}

fn write_profiles(p: &vacneg::profiles::DetectorProfilePair, digits: u32, path: &Path, format: Format) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => export_profiles_csv(p, digits, out),
        Format::Json => export_profiles_json(p, digits, out),
    }
}

fn profile(plan: &Plan, c: &LatticeConfig) -> Result<Report> {
    let cm = build_region_pair_cm(c)?;
    let (profiles, report, _) = extraction_report(&cm)?;
    let digits = bits_to_digits(profiles.prec());
    if let Some(p) = &plan.out {
        match plan.format {
            Format::Csv => write_profiles(&profiles, digits, p, Format::Csv)?,
            Format::Json => write_json(&json!({"config": config_json(c), "report": report}), p)?,
        }
    }
    if let Some(p) = &plan.profiles_out {
        let format = match p.extension() {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        };
        write_profiles(&profiles, digits, p, format)?;
    }
    let t = c.policy.target_digits;
    Ok(done(with(
        json!({"command": "profile"}),
        with(
            config_json(c),
            json!({
                "extracted_N_bits": s(&report.extracted_n, t),
                "total_N_bits": s(&report.total_n, t),
                "nines": report.nines,
                "n_minus": report.n_minus,
                "tie": report.tie,
            }),
        ),
    )))
}

fn swap(plan: &Plan, c: &LatticeConfig) -> Result<Report> {
    let cm = build_region_pair_cm(c)?;
    let (_, report, total) = extraction_report(&cm)?;
    let thetas = theta_grid(report.two_mode_cm.prec());
    let points = swap_scan(&report.two_mode_cm, &thetas, &total.policy)?;
    artifact(plan, &json!({"config": config_json(c), "points": points}))?;
    let t = c.policy.target_digits;
    let last = points.last().ok_or_else(|| Error::Inconsistency("empty theta grid".into()))?;
    Ok(done(with(
        json!({"command": "swap"}),
        with(
            config_json(c),
            json!({
                "detector_N_bits": points.iter().map(|p| s(&p.detector_n, t)).collect::<Vec<_>>(),
                "collective_N_bits": s(&last.collective_n, t),
            }),
        ),
    )))
}

fn sphere(plan: &Plan, d: usize, m: &Mass) -> Result<Report> {
    let r = entanglement_sphere(d, m, &plan.policy)?;
    artifact(plan, &r)?;
    let md = m.times(d);
    let (bracket, slash) = match r.radius {
        SphereRadius::Exact(k) => (false, Some(format_rational(&m.times(k)))),
        SphereRadius::Bracket(..) => (true, None),
    };
    Ok(Report {
        summary: json!({
            "command": "sphere",
            "d": d,
            "m": m.to_string(),
            "md": format_rational(&md),
            "radius": r.radius,
            "mr_slash": slash,
            "evaluations": r.evaluations.len(),
        }),
        outcome: if bracket { Outcome::Undecided } else { Outcome::Done },
    })
}
