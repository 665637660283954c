//! Run configuration: command-line flags merged over an optional JSON file,
//! then resolved into a typed plan or a list of violations.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use rug::Rational;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use vacneg::cmkit::LatticeConfig;
use vacneg::exec::Execution;
use vacneg::precision::parse_rational;
use vacneg::sweeps::{pixel_mass, pixel_separation, Format, PixelationRule};
use vacneg::{Mass, PrecisionPolicy};

pub const DIGITS_ENV: &str = "VACNEG_DIGITS";
pub const DEFAULT_DIGITS: u32 = 30;
pub const MIN_DIGITS: u32 = 16;
pub const MAX_DIGITS: u32 = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmd {
    Corr,
    Cm,
    Spectrum,
    Neg,
    Consolidate,
    Profile,
    Swap,
    Sphere,
    Heatmap,
    ScanMin,
    ScanDecay,
    SphereGrowth,
}

impl Cmd {
    pub const ALL: [Cmd; 12] = [
        Cmd::Corr,
        Cmd::Cm,
        Cmd::Spectrum,
        Cmd::Neg,
        Cmd::Consolidate,
        Cmd::Profile,
        Cmd::Swap,
        Cmd::Sphere,
        Cmd::Heatmap,
        Cmd::ScanMin,
        Cmd::ScanDecay,
        Cmd::SphereGrowth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Cmd::Corr => "corr",
            Cmd::Cm => "cm",
            Cmd::Spectrum => "spectrum",
            Cmd::Neg => "neg",
            Cmd::Consolidate => "consolidate",
            Cmd::Profile => "profile",
            Cmd::Swap => "swap",
            Cmd::Sphere => "sphere",
            Cmd::Heatmap => "heatmap",
            Cmd::ScanMin => "scan-min",
            Cmd::ScanDecay => "scan-decay",
            Cmd::SphereGrowth => "sphere-growth",
        }
    }

    fn csv_capable(self) -> bool {
        matches!(
            self,
            Cmd::Corr | Cmd::Profile | Cmd::Heatmap | Cmd::ScanMin | Cmd::ScanDecay | Cmd::SphereGrowth
        )
    }
}

impl fmt::Display for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cmd {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Cmd::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown subcommand {s:?}"))
    }
}

/// Flags shared by every subcommand. Each one overrides the config-file key
/// of the same name.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Region size in sites (file key `d`)
    #[arg(long)]
    pub d: Option<usize>,
    /// Separation in sites between the regions (file key `r_tilde`)
    #[arg(long = "r", visible_alias = "r-tilde")]
    pub r_tilde: Option<usize>,
    /// Lattice mass, exact decimal (file key `m`)
    #[arg(long)]
    pub m: Option<String>,
    /// Physical region size m·d, exact decimal (file key `md`)
    #[arg(long)]
    pub md: Option<String>,
    /// Physical separation m·r̃, exact decimal (file key `mrt`)
    #[arg(long)]
    pub mrt: Option<String>,
    /// Correlator offset for `corr` (file key `n`)
    #[arg(long)]
    pub n: Option<usize>,
    /// Tabulate `corr` for offsets 0..=n_max (file key `n_max`)
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Certified decimal digits, 16..=600; default from VACNEG_DIGITS, else 30 (file key `target_digits`)
    #[arg(long = "digits", visible_alias = "target-digits")]
    pub target_digits: Option<u32>,
    /// Working digits; default target + 20 (file key `working_digits`)
    #[arg(long)]
    pub working_digits: Option<u32>,
    /// Precision escalations allowed (file key `max_escalations`)
    #[arg(long)]
    pub max_escalations: Option<u32>,
    /// Artifact path (file key `out`)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Artifact format, csv or json; default from the `out` extension (file key `format`)
    #[arg(long)]
    pub format: Option<String>,
    /// Comma-separated m·d values (file key `md_list`)
    #[arg(long, value_delimiter = ',')]
    pub md_list: Option<Vec<String>>,
    /// Comma-separated m·r̃ values (file key `mrt_list`)
    #[arg(long, value_delimiter = ',')]
    pub mrt_list: Option<Vec<String>>,
    /// Comma-separated region sizes (file key `d_list`)
    #[arg(long, value_delimiter = ',')]
    pub d_list: Option<Vec<usize>>,
    /// Heatmap points whose rounded separation is below this are skipped (file key `min_r`)
    #[arg(long)]
    pub min_r: Option<usize>,
    /// Resume file of completed heatmap points; results are appended to `out` (file key `manifest`)
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Where `profile` writes the detector profiles, csv or json by extension (file key `profiles_out`)
    #[arg(long, value_name = "PATH")]
    pub profiles_out: Option<PathBuf>,
    /// Worker threads (file key `jobs`)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Evaluate on the calling thread only (file key `sequential`)
    #[arg(long)]
    pub sequential: bool,
}

/// Decimal read from a JSON string, or from a JSON number via its shortest
/// decimal text.
#[derive(Clone, Debug)]
struct Exact(String);

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(Exact(s)),
            serde_json::Value::Number(n) => Ok(Exact(n.to_string())),
            other => Err(D::Error::custom(format!("expected a decimal string or number, got {other}"))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Option<String>,
    d: Option<usize>,
    #[serde(alias = "r")]
    r_tilde: Option<usize>,
    m: Option<Exact>,
    md: Option<Exact>,
    mrt: Option<Exact>,
    n: Option<usize>,
    n_max: Option<usize>,
    target_digits: Option<u32>,
    working_digits: Option<u32>,
    max_escalations: Option<u32>,
    out: Option<PathBuf>,
    format: Option<String>,
    md_list: Option<Vec<Exact>>,
    mrt_list: Option<Vec<Exact>>,
    d_list: Option<Vec<usize>>,
    min_r: Option<usize>,
    manifest: Option<PathBuf>,
    profiles_out: Option<PathBuf>,
    jobs: Option<usize>,
    sequential: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Flags merged over the config file.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub subcommand: Option<String>,
    pub d: Option<usize>,
    pub r_tilde: Option<usize>,
    pub m: Option<String>,
    pub md: Option<String>,
    pub mrt: Option<String>,
    pub n: Option<usize>,
    pub n_max: Option<usize>,
    pub target_digits: Option<u32>,
    pub working_digits: Option<u32>,
    pub max_escalations: Option<u32>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub md_list: Option<Vec<String>>,
    pub mrt_list: Option<Vec<String>>,
    pub d_list: Option<Vec<usize>>,
    pub min_r: Option<usize>,
    pub manifest: Option<PathBuf>,
    pub profiles_out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub sequential: bool,
}

fn read_file(path: &Path) -> Result<FileConfig, Violation> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Violation::new("config", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Violation::new("config", format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Merges `flags` over the file named by `--config`, if any.
    pub fn load(flags: Flags) -> (Self, Vec<Violation>) {
        let mut violations = Vec::new();
        let file = match &flags.config {
            Some(p) => read_file(p).unwrap_or_else(|v| {
                violations.push(v);
                FileConfig::default()
            }),
            None => FileConfig::default(),
        };
        let exact = |x: Option<Exact>| x.map(|e| e.0);
        let exacts = |x: Option<Vec<Exact>>| x.map(|v| v.into_iter().map(|e| e.0).collect());
        let cfg = Self {
            subcommand: file.subcommand,
            d: flags.d.or(file.d),
            r_tilde: flags.r_tilde.or(file.r_tilde),
            m: flags.m.or(exact(file.m)),
            md: flags.md.or(exact(file.md)),
            mrt: flags.mrt.or(exact(file.mrt)),
            n: flags.n.or(file.n),
            n_max: flags.n_max.or(file.n_max),
            target_digits: flags.target_digits.or(file.target_digits),
            working_digits: flags.working_digits.or(file.working_digits),
            max_escalations: flags.max_escalations.or(file.max_escalations),
            out: flags.out.or(file.out),
            format: flags.format.or(file.format),
            md_list: flags.md_list.or(exacts(file.md_list)),
            mrt_list: flags.mrt_list.or(exacts(file.mrt_list)),
            d_list: flags.d_list.or(file.d_list),
            min_r: flags.min_r.or(file.min_r),
            manifest: flags.manifest.or(file.manifest),
            profiles_out: flags.profiles_out.or(file.profiles_out),
            jobs: flags.jobs.or(file.jobs),
            sequential: flags.sequential || file.sequential.unwrap_or(false),
        };
        (cfg, violations)
    }
}

/// What a subcommand runs on.
#[derive(Clone, Debug)]
pub enum Target {
    Corr { m: Mass, offsets: Vec<usize>, table: bool },
    Single(LatticeConfig),
    Sphere { d: usize, m: Mass },
    Heatmap { md_list: Vec<Rational>, mrt_list: Vec<Rational>, rule: PixelationRule },
    ScanMin { md: Rational, d_list: Vec<usize> },
    ScanDecay { md: Rational, mrt_list: Vec<Rational>, d_list: Vec<usize> },
    SphereGrowth { md: Rational, d_list: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub cmd: Cmd,
    pub policy: PrecisionPolicy,
    pub target: Target,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub manifest: Option<PathBuf>,
    pub profiles_out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub exec: Execution,
}

fn rational(field: &str, text: &Option<String>, v: &mut Vec<Violation>) -> Option<Rational> {
    match text {
        None => {
            v.push(Violation::new(field, "missing"));
            None
        }
        Some(t) => match parse_rational(t) {
            Ok(q) if q > 0 => Some(q),
            Ok(_) => {
                v.push(Violation::new(field, format!("must be positive, got {t}")));
                None
            }
            Err(e) => {
                v.push(Violation::new(field, e.to_string()));
                None
            }
        },
    }
}

fn rationals(field: &str, list: &Option<Vec<String>>, v: &mut Vec<Violation>) -> Option<Vec<Rational>> {
    let Some(list) = list else {
        v.push(Violation::new(field, "missing"));
        return None;
    };
    if list.is_empty() {
        v.push(Violation::new(field, "empty"));
        return None;
    }
    let before = v.len();
    let out: Vec<Rational> = list
        .iter()
        .enumerate()
        .filter_map(|(i, t)| rational(&format!("{field}[{i}]"), &Some(t.clone()), v))
        .collect();
    (v.len() == before).then_some(out)
}

fn mass(text: &Option<String>, v: &mut Vec<Violation>) -> Option<Mass> {
    let q = rational("m", text, v)?;
    match Mass::new(q) {
        Ok(m) => Some(m),
        Err(e) => {
            v.push(Violation::new("m", e.to_string()));
            None
        }
    }
}

fn required<T: Clone>(field: &str, x: &Option<T>, v: &mut Vec<Violation>) -> Option<T> {
    if x.is_none() {
        v.push(Violation::new(field, "missing"));
    }
    x.clone()
}

fn d_list(cfg: &RunConfig, v: &mut Vec<Violation>) -> Option<Vec<usize>> {
    let list = required("d_list", &cfg.d_list, v)?;
    if list.is_empty() || list.contains(&0) || list.windows(2).any(|w| w[0] >= w[1]) {
        v.push(Violation::new("d_list", "must be non-empty, positive and strictly ascending"));
        return None;
    }
    Some(list)
}

fn unused(cfg: &RunConfig, cmd: Cmd, fields: &[&str], v: &mut Vec<Violation>) {
    for &f in fields {
        let set = match f {
            "r_tilde" => cfg.r_tilde.is_some(),
            "mrt" => cfg.mrt.is_some(),
            "m" => cfg.m.is_some(),
            "md" => cfg.md.is_some(),
            _ => false,
        };
        if set {
            v.push(Violation::new(f, format!("not used by {cmd}")));
        }
    }
}

fn policy(cfg: &RunConfig, v: &mut Vec<Violation>) -> Option<PrecisionPolicy> {
    let target = match cfg.target_digits {
        Some(t) => t,
        None => match std::env::var(DIGITS_ENV) {
            Ok(s) => match s.trim().parse::<u32>() {
                Ok(t) => t,
                Err(_) => {
                    v.push(Violation::new("target_digits", format!("{DIGITS_ENV}={s:?} is not an integer")));
                    return None;
                }
            },
            Err(_) => DEFAULT_DIGITS,
        },
    };
    if !(MIN_DIGITS..=MAX_DIGITS).contains(&target) {
        v.push(Violation::new(
            "target_digits",
            format!("must be within {MIN_DIGITS}..={MAX_DIGITS}, got {target}"),
        ));
        return None;
    }
    let mut p = PrecisionPolicy::for_target(target);
    if let Some(w) = cfg.working_digits {
        p.working_digits = w;
    }
    if let Some(e) = cfg.max_escalations {
        p.max_escalations = e;
    }
    if let Err(e) = p.validate() {
        v.push(Violation::new("working_digits", e.to_string()));
        return None;
    }
    Some(p)
}

/// Lattice-native `(d, r̃, m)` or physical `(md, mr̃, d)`, exactly one.
fn single(cfg: &RunConfig, policy: &Option<PrecisionPolicy>, v: &mut Vec<Violation>) -> Option<LatticeConfig> {
    let physical = cfg.md.is_some() || cfg.mrt.is_some();
    let lattice = cfg.r_tilde.is_some() || cfg.m.is_some();
    if physical && lattice {
        v.push(Violation::new(
            "spec",
            "give either lattice-native (d, r, m) or physical (md, mrt, d), not both",
        ));
        return None;
    }
    let d = required("d", &cfg.d, v);
    if d == Some(0) {
        v.push(Violation::new("d", "must be at least 1"));
    }
    let (r, m) = if physical {
        let md = rational("md", &cfg.md, v);
        let mrt = rational("mrt", &cfg.mrt, v);
        let (d, md, mrt) = (d.filter(|&d| d > 0)?, md?, mrt?);
        let r = pixel_separation(&md, &mrt, d);
        if r == 0 {
            v.push(Violation::new("mrt", format!("separation rounds to 0 sites at d = {d}")));
        }
        let m = pixel_mass(&md, d).map_err(|e| v.push(Violation::new("md", e.to_string()))).ok();
        (Some(r), m)
    } else {
        let r = required("r_tilde", &cfg.r_tilde, v);
        if r == Some(0) {
            v.push(Violation::new("r_tilde", "must be at least 1"));
        }
        (r, mass(&cfg.m, v))
    };
    let (d, r, m, p) = (d?, r?, m?, policy.clone()?);
    match LatticeConfig::new(d, r, m, p) {
        Ok(c) => Some(c),
        Err(e) => {
            v.push(Violation::new("spec", e.to_string()));
            None
        }
    }
}

fn target(cmd: Cmd, cfg: &RunConfig, policy: &Option<PrecisionPolicy>, v: &mut Vec<Violation>) -> Option<Target> {
    match cmd {
        Cmd::Corr => {
            unused(cfg, cmd, &["r_tilde", "md", "mrt"], v);
            let m = mass(&cfg.m, v);
            let (offsets, table) = match (cfg.n, cfg.n_max) {
                (Some(_), Some(_)) => {
                    v.push(Violation::new("n", "give n or n_max, not both"));
                    return None;
                }
                (_, Some(k)) => ((0..=k).collect(), true),
                (n, None) => (vec![n.unwrap_or(0)], false),
            };
            Some(Target::Corr { m: m?, offsets, table })
        }
        Cmd::Cm | Cmd::Spectrum | Cmd::Neg | Cmd::Consolidate | Cmd::Profile | Cmd::Swap => {
            single(cfg, policy, v).map(Target::Single)
        }
        Cmd::Sphere => {
            unused(cfg, cmd, &["r_tilde", "mrt"], v);
            let d = required("d", &cfg.d, v).filter(|&d| {
                if d == 0 {
                    v.push(Violation::new("d", "must be at least 1"));
                }
                d > 0
            });
            let m = match (&cfg.m, &cfg.md) {
                (Some(_), Some(_)) => {
                    v.push(Violation::new("spec", "give m or md, not both"));
                    None
                }
                (None, Some(_)) => {
                    let md = rational("md", &cfg.md, v);
                    match (md, d) {
                        (Some(md), Some(d)) => {
                            pixel_mass(&md, d).map_err(|e| v.push(Violation::new("md", e.to_string()))).ok()
                        }
                        _ => None,
                    }
                }
                _ => mass(&cfg.m, v),
            };
            Some(Target::Sphere { d: d?, m: m? })
        }
        Cmd::Heatmap => {
            unused(cfg, cmd, &["r_tilde", "m", "md", "mrt"], v);
            let md_list = rationals("md_list", &cfg.md_list, v);
            let mrt_list = rationals("mrt_list", &cfg.mrt_list, v);
            let d = required("d", &cfg.d, v);
            let mut rule = PixelationRule::new(d.unwrap_or(1));
            if let Some(k) = cfg.min_r {
                rule.min_r_tilde = k.max(1);
            }
            if d == Some(0) {
                v.push(Violation::new("d", "must be at least 1"));
            }
            d?;
            Some(Target::Heatmap { md_list: md_list?, mrt_list: mrt_list?, rule })
        }
        Cmd::ScanMin | Cmd::SphereGrowth => {
            unused(cfg, cmd, &["r_tilde", "m", "mrt"], v);
            let md = rational("md", &cfg.md, v);
            let d_list = d_list(cfg, v);
            let (md, d_list) = (md?, d_list?);
            Some(if cmd == Cmd::ScanMin {
                Target::ScanMin { md, d_list }
            } else {
                Target::SphereGrowth { md, d_list }
            })
        }
        Cmd::ScanDecay => {
            unused(cfg, cmd, &["r_tilde", "m", "mrt"], v);
            let md = rational("md", &cfg.md, v);
            let mrt_list = rationals("mrt_list", &cfg.mrt_list, v);
            let d_list = d_list(cfg, v);
            Some(Target::ScanDecay { md: md?, mrt_list: mrt_list?, d_list: d_list? })
        }
    }
}

/// Full validation without execution.
pub fn resolve(cmd: Cmd, cfg: &RunConfig) -> Result<Plan, Vec<Violation>> {
    let mut v = Vec::new();
    if let Some(s) = &cfg.subcommand {
        if s != cmd.as_str() {
            v.push(Violation::new("subcommand", format!("config file is for {s:?}, running {cmd}")));
        }
    }
    let policy = policy(cfg, &mut v);
    let target = target(cmd, cfg, &policy, &mut v);

    let format = match &cfg.format {
        Some(f) => f.parse::<Format>().map_err(|e| v.push(Violation::new("format", e.to_string()))).ok(),
        None => Some(match cfg.out.as_ref().and_then(|p| p.extension()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }),
    };
    if format == Some(Format::Csv) && !cmd.csv_capable() {
        v.push(Violation::new("format", format!("{cmd} writes JSON only")));
    }
    if cfg.manifest.is_some() {
        if cmd != Cmd::Heatmap {
            v.push(Violation::new("manifest", format!("not used by {cmd}")));
        } else if cfg.out.is_none() || format != Some(Format::Csv) {
            v.push(Violation::new("manifest", "resuming needs a CSV `out` to append to"));
        }
    }
    if cfg.profiles_out.is_some() && cmd != Cmd::Profile {
        v.push(Violation::new("profiles_out", format!("not used by {cmd}")));
    }
    if cfg.jobs == Some(0) {
        v.push(Violation::new("jobs", "must be at least 1"));
    }
    if !v.is_empty() {
        return Err(v);
    }
    Ok(Plan {
        cmd,
        policy: policy.expect("checked"),
        target: target.expect("checked"),
        out: cfg.out.clone(),
        format: format.expect("checked"),
        manifest: cfg.manifest.clone(),
        profiles_out: cfg.profiles_out.clone(),
        jobs: cfg.jobs,
        exec: if cfg.sequential { Execution::Sequential } else { Execution::Parallel },
    })
}
