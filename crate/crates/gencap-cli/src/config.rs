//! Flat, line-oriented `key = value` experiment configuration.
//!
//! Repeated keys form lists (`sigma = 0.1` on several lines builds the σ
//! sweep). `#` starts a comment. Unknown keys, malformed values, and
//! inconsistent parameter combinations are reported with their line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use gencap_core::{CostKind, CrnScheme, Method};

/// Which sweep the run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    GibbsMarginals,
    IcVsBeta,
    GcVsSigma,
    GcVsD,
    CostComparison,
    CorrelatedElogz,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gibbs_marginals" => Self::GibbsMarginals,
            "ic_vs_beta" => Self::IcVsBeta,
            "gc_vs_sigma" => Self::GcVsSigma,
            "gc_vs_d" => Self::GcVsD,
            "cost_comparison" => Self::CostComparison,
            "correlated_elogz" => Self::CorrelatedElogz,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GibbsMarginals => "gibbs_marginals",
            Self::IcVsBeta => "ic_vs_beta",
            Self::GcVsSigma => "gc_vs_sigma",
            Self::GcVsD => "gc_vs_d",
            Self::CostComparison => "cost_comparison",
            Self::CorrelatedElogz => "correlated_elogz",
        }
    }
}

/// A fully parsed and validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: Vec<u32>,
    /// Sparsity levels; empty means the unconstrained full space.
    pub k: Vec<u32>,
    pub sigma: Vec<f64>,
    pub n: u32,
    pub method: Method,
    pub r: usize,
    pub m: usize,
    pub crn: CrnScheme,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_count: usize,
    pub seed: u64,
    pub cost: CostKind,
    /// Inner sample size of the correlated estimator.
    pub p: usize,
    /// Exact Y_h or the η-representative collapse.
    pub yh_exact: bool,
    /// Uniform off-diagonal correlation of Σ (0 = identity).
    pub rho: f64,
    pub out: Option<String>,
}

/// One validation finding, tied to the config line that caused it (line 0
/// marks a file-level problem such as a missing required key).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Default)]
struct RawConfig {
    /// key -> list of (line, value) in file order.
    entries: BTreeMap<String, Vec<(usize, String)>>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment", "d", "k", "sigma", "n", "method", "r", "m", "crn", "beta_min", "beta_max",
    "beta_count", "seed", "cost", "p", "yh", "rho", "out",
];

fn parse_raw(text: &str, diags: &mut Vec<Diagnostic>) -> RawConfig {
    let mut raw = RawConfig::default();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            diags.push(Diagnostic {
                line: lineno,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            diags.push(Diagnostic { line: lineno, message: format!("unknown key `{key}`") });
            continue;
        }
        raw.entries.entry(key.to_string()).or_default().push((lineno, value.to_string()));
    }
    raw
}

impl RawConfig {
    fn single(&self, key: &str, diags: &mut Vec<Diagnostic>) -> Option<(usize, &str)> {
        let list = self.entries.get(key)?;
        if list.len() > 1 {
            diags.push(Diagnostic {
                line: list[1].0,
                message: format!("key `{key}` given more than once"),
            });
        }
        list.first().map(|(l, v)| (*l, v.as_str()))
    }

    fn list(&self, key: &str) -> impl Iterator<Item = (usize, &str)> {
        self.entries.get(key).into_iter().flatten().map(|(l, v)| (*l, v.as_str()))
    }
}

fn parse_num<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<T> {
    match value.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            diags.push(Diagnostic {
                line,
                message: format!("cannot parse `{value}` as a value for `{key}`"),
            });
            None
        }
    }
}

/// Parses and validates config text. Returns the config only when no
/// diagnostics were produced.
pub fn parse_config(text: &str) -> (Option<ExperimentConfig>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let raw = parse_raw(text, &mut diags);

    let kind = match raw.single("experiment", &mut diags) {
        Some((line, v)) => match ExperimentKind::parse(v) {
            Some(k) => Some(k),
            None => {
                diags.push(Diagnostic {
                    line,
                    message: format!("unknown experiment `{v}`"),
                });
                None
            }
        },
        None => {
            diags.push(Diagnostic { line: 0, message: "missing required key `experiment`".into() });
            None
        }
    };

    let mut d = Vec::new();
    for (line, v) in raw.list("d") {
        if let Some(x) = parse_num::<u32>(line, "d", v, &mut diags) {
            if x == 0 {
                diags.push(Diagnostic { line, message: "d must be positive".into() });
            } else {
                d.push(x);
            }
        }
    }
    let mut k = Vec::new();
    for (line, v) in raw.list("k") {
        if let Some(x) = parse_num::<u32>(line, "k", v, &mut diags) {
            if let Some(&dmax) = d.iter().max() {
                if x > dmax {
                    diags.push(Diagnostic {
                        line,
                        message: format!("k = {x} exceeds every configured d (max {dmax})"),
                    });
                    continue;
                }
            }
            k.push(x);
        }
    }
    let mut sigma = Vec::new();
    for (line, v) in raw.list("sigma") {
        if let Some(x) = parse_num::<f64>(line, "sigma", v, &mut diags) {
            if !(x > 0.0) {
                diags.push(Diagnostic { line, message: "sigma must be positive".into() });
            } else {
                sigma.push(x);
            }
        }
    }

    let n = raw
        .single("n", &mut diags)
        .and_then(|(l, v)| parse_num::<u32>(l, "n", v, &mut diags))
        .unwrap_or(100);
    let method = match raw.single("method", &mut diags) {
        Some((line, v)) => match v {
            "exhaustive" => Method::Exhaustive,
            "uniform" => Method::Uniform,
            "importance" => Method::Importance,
            _ => {
                diags.push(Diagnostic {
                    line,
                    message: format!("method must be exhaustive|uniform|importance, got `{v}`"),
                });
                Method::Exhaustive
            }
        },
        None => Method::Exhaustive,
    };
    let r = raw
        .single("r", &mut diags)
        .and_then(|(l, v)| parse_num::<usize>(l, "r", v, &mut diags))
        .unwrap_or(100);
    let m = raw
        .single("m", &mut diags)
        .and_then(|(l, v)| parse_num::<usize>(l, "m", v, &mut diags))
        .unwrap_or(100);
    let crn = match raw.single("crn", &mut diags) {
        Some((line, v)) => match v {
            "1" => CrnScheme::Crn1,
            "2" => CrnScheme::Crn2,
            "3" => CrnScheme::Crn3,
            _ => {
                diags.push(Diagnostic {
                    line,
                    message: format!("crn must be 1, 2 or 3, got `{v}`"),
                });
                CrnScheme::Crn3
            }
        },
        None => CrnScheme::Crn3,
    };
    let beta_min = raw
        .single("beta_min", &mut diags)
        .and_then(|(l, v)| parse_num::<f64>(l, "beta_min", v, &mut diags))
        .unwrap_or(0.01);
    let beta_max = raw
        .single("beta_max", &mut diags)
        .and_then(|(l, v)| parse_num::<f64>(l, "beta_max", v, &mut diags))
        .unwrap_or(20.0);
    let beta_count = raw
        .single("beta_count", &mut diags)
        .and_then(|(l, v)| parse_num::<usize>(l, "beta_count", v, &mut diags))
        .unwrap_or(100);
    let seed = match raw.single("seed", &mut diags) {
        Some((l, v)) => parse_num::<u64>(l, "seed", v, &mut diags).unwrap_or(0),
        None => {
            diags.push(Diagnostic {
                line: 0,
                message: "missing required key `seed` (runs never seed from the clock)".into(),
            });
            0
        }
    };
    let cost = match raw.single("cost", &mut diags) {
        Some((line, v)) => match v {
            "l2" => CostKind::SquaredL2,
            "l1sq" => CostKind::L1Squared,
            "l1" => CostKind::L1,
            _ => {
                diags.push(Diagnostic {
                    line,
                    message: format!("cost must be l2|l1sq|l1, got `{v}`"),
                });
                CostKind::SquaredL2
            }
        },
        None => CostKind::SquaredL2,
    };
    let p = raw
        .single("p", &mut diags)
        .and_then(|(l, v)| parse_num::<usize>(l, "p", v, &mut diags))
        .unwrap_or(50);
    let yh_exact = match raw.single("yh", &mut diags) {
        Some((line, v)) => match v {
            "exact" => true,
            "eta" => false,
            _ => {
                diags.push(Diagnostic {
                    line,
                    message: format!("yh must be exact|eta, got `{v}`"),
                });
                true
            }
        },
        None => true,
    };
    let rho = raw
        .single("rho", &mut diags)
        .and_then(|(l, v)| parse_num::<f64>(l, "rho", v, &mut diags))
        .unwrap_or(0.0);
    let out = raw.single("out", &mut diags).map(|(_, v)| v.to_string());

    // cross-field checks
    if d.is_empty() {
        diags.push(Diagnostic { line: 0, message: "at least one `d` is required".into() });
    }
    if sigma.is_empty() {
        diags.push(Diagnostic { line: 0, message: "at least one `sigma` is required".into() });
    }
    if n == 0 {
        diags.push(Diagnostic { line: 0, message: "n must be at least 1".into() });
    }
    if m < 2 {
        diags.push(Diagnostic { line: 0, message: "m must be at least 2".into() });
    }
    if method != Method::Exhaustive && r == 0 {
        diags.push(Diagnostic { line: 0, message: "sampling methods need r >= 1".into() });
    }
    if !(beta_min > 0.0 && beta_max > beta_min) {
        diags.push(Diagnostic {
            line: 0,
            message: "beta grid needs 0 < beta_min < beta_max".into(),
        });
    }
    if beta_count < 2 {
        diags.push(Diagnostic { line: 0, message: "beta_count must be at least 2".into() });
    }
    if !(-1.0..1.0).contains(&rho) {
        diags.push(Diagnostic { line: 0, message: "rho must lie in (-1, 1)".into() });
    }
    if let Some(kind) = kind {
        match kind {
            ExperimentKind::CorrelatedElogz => {
                if k.is_empty() {
                    diags.push(Diagnostic {
                        line: 0,
                        message: "correlated_elogz requires `k`".into(),
                    });
                }
                if p == 0 {
                    diags.push(Diagnostic { line: 0, message: "p must be at least 1".into() });
                }
            }
            ExperimentKind::CostComparison | ExperimentKind::GcVsD => {
                if k.is_empty() {
                    diags.push(Diagnostic {
                        line: 0,
                        message: format!("{} requires `k`", kind.name()),
                    });
                }
            }
            _ => {}
        }
        if method == Method::Importance && k.is_empty() {
            diags.push(Diagnostic {
                line: 0,
                message: "importance sampling requires the sparse class (`k`)".into(),
            });
        }
    }

    if !diags.is_empty() {
        return (None, diags);
    }
    let config = ExperimentConfig {
        kind: kind.expect("checked above"),
        d,
        k,
        sigma,
        n,
        method,
        r,
        m,
        crn,
        beta_min,
        beta_max,
        beta_count,
        seed,
        cost,
        p,
        yh_exact,
        rho,
        out,
    };
    (Some(config), diags)
}

/// Reads and validates a config file; the diagnostics list is empty exactly
/// when the file is runnable.
pub fn validate_config(path: &Path) -> std::io::Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text).1)
}

/// Reads a config file, failing with printable diagnostics.
pub fn load_config(path: &Path) -> std::io::Result<Result<ExperimentConfig, Vec<Diagnostic>>> {
    let text = std::fs::read_to_string(path)?;
    let (config, diags) = parse_config(&text);
    Ok(match config {
        Some(c) => Ok(c),
        None => Err(diags),
    })
}
