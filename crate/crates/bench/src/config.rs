//! Run configuration: a flat key-value text format (also accepted as JSON),
//! validated before anything executes and serializable without loss.

use serde::{Deserialize, Serialize};

use crate::error::BenchError;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ProblemId {
    Nls2d { n: usize, alpha: f64 },
    AllenCahn2d { n: usize, kappa: f64 },
    Nls3d { n: usize, alpha: f64, gamma: f64 },
    AllenCahn3d { n: usize, kappa: f64 },
}

impl ProblemId {
    pub fn is_tensor(&self) -> bool {
        matches!(self, ProblemId::Nls3d { .. } | ProblemId::AllenCahn3d { .. })
    }

    pub fn slug(&self) -> String {
        match self {
            ProblemId::Nls2d { n, alpha } => format!("nls2d_n{n}_a{alpha}"),
            ProblemId::AllenCahn2d { n, kappa } => format!("ac2d_n{n}_k{kappa}"),
            ProblemId::Nls3d { n, alpha, gamma } => format!("nls3d_n{n}_a{alpha}_g{gamma}"),
            ProblemId::AllenCahn3d { n, kappa } => format!("ac3d_n{n}_k{kappa}"),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodId {
    Prk1,
    Prk2,
    Prk3,
    Perk1,
    Perk2,
    TuckerPrk1,
    TuckerPrk2,
    TuckerPrk3,
}

impl MethodId {
    pub fn is_tensor(&self) -> bool {
        matches!(
            self,
            MethodId::TuckerPrk1 | MethodId::TuckerPrk2 | MethodId::TuckerPrk3
        )
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, MethodId::Perk1 | MethodId::Perk2)
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "prk1" => MethodId::Prk1,
            "prk2" => MethodId::Prk2,
            "prk3" => MethodId::Prk3,
            "perk1" => MethodId::Perk1,
            "perk2" => MethodId::Perk2,
            "tucker-prk1" => MethodId::TuckerPrk1,
            "tucker-prk2" => MethodId::TuckerPrk2,
            "tucker-prk3" => MethodId::TuckerPrk3,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Prk1 => "prk1",
            MethodId::Prk2 => "prk2",
            MethodId::Prk3 => "prk3",
            MethodId::Perk1 => "perk1",
            MethodId::Perk2 => "perk2",
            MethodId::TuckerPrk1 => "tucker-prk1",
            MethodId::TuckerPrk2 => "tucker-prk2",
            MethodId::TuckerPrk3 => "tucker-prk3",
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ProjectionId {
    Orthogonal,
    DeimGreedy,
    DeimQdeim,
    DeimSrrqr { eta: f64 },
    DeimArp,
}

impl ProjectionId {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "orthogonal" => ProjectionId::Orthogonal,
            "deim:greedy" => ProjectionId::DeimGreedy,
            "deim:qdeim" => ProjectionId::DeimQdeim,
            "deim:arp" => ProjectionId::DeimArp,
            other => {
                let eta = other.strip_prefix("deim:srrqr:")?.parse().ok()?;
                ProjectionId::DeimSrrqr { eta }
            }
        })
    }

    pub fn as_string(&self) -> String {
        match self {
            ProjectionId::Orthogonal => "orthogonal".into(),
            ProjectionId::DeimGreedy => "deim:greedy".into(),
            ProjectionId::DeimQdeim => "deim:qdeim".into(),
            ProjectionId::DeimSrrqr { eta } => format!("deim:srrqr:{eta}"),
            ProjectionId::DeimArp => "deim:arp".into(),
        }
    }

    pub fn mode(&self) -> lodei_core::steppers::ProjectionMode {
        use lodei_core::steppers::{ProjectionMode, SelectorBase};
        match self {
            ProjectionId::Orthogonal => ProjectionMode::Orthogonal,
            ProjectionId::DeimGreedy => ProjectionMode::Oblique(SelectorBase::Greedy),
            ProjectionId::DeimQdeim => ProjectionMode::Oblique(SelectorBase::Qdeim),
            ProjectionId::DeimSrrqr { eta } => {
                ProjectionMode::Oblique(SelectorBase::Srrqr { eta: *eta })
            }
            ProjectionId::DeimArp => ProjectionMode::Oblique(SelectorBase::Arp),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum RefPolicy {
    /// No reference; error columns stay empty.
    Skip,
    /// Compute in memory (and share within the process).
    Compute { h_ref: Option<f64> },
    /// Load from a cache file; refuse on key mismatch or missing file.
    Load { path: String },
    /// Load when the key matches, otherwise compute and save.
    Cache { path: String, h_ref: Option<f64> },
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub method: MethodId,
    pub projection: ProjectionId,
    pub rank: usize,
    pub h: f64,
    pub t_final: f64,
    /// None = problem default (dense warm-up where the benchmark uses one).
    pub warmup: Option<bool>,
    pub reference: RefPolicy,
    pub seed: u64,
    /// Number of error checkpoints along the trajectory (>= 1; the final
    /// time is always included).
    pub checkpoints: usize,
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.rank == 0 {
            return bad("rank must be >= 1".into());
        }
        if !(self.h > 0.0) {
            return bad("h must be positive".into());
        }
        if !(self.t_final > 0.0) {
            return bad("T must be positive".into());
        }
        if self.checkpoints == 0 {
            return bad("checkpoints must be >= 1".into());
        }
        let n = match &self.problem {
            ProblemId::Nls2d { n, .. }
            | ProblemId::AllenCahn2d { n, .. }
            | ProblemId::Nls3d { n, .. }
            | ProblemId::AllenCahn3d { n, .. } => *n,
        };
        if self.rank > n {
            return bad(format!("rank {} exceeds the mode size {n}", self.rank));
        }
        if self.method.is_tensor() != self.problem.is_tensor() {
            return bad(format!(
                "method {} does not apply to problem {}",
                self.method.as_str(),
                self.problem.slug()
            ));
        }
        if self.method.is_exponential()
            && !matches!(self.problem, ProblemId::AllenCahn2d { .. })
        {
            return bad("exponential integrators need the split allen-cahn-2d problem".into());
        }
        Ok(())
    }

    /// Stable identifier derived from the configuration (not the outputs).
    pub fn run_id(&self) -> String {
        let s = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in s.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{:016x}", h)
    }
}

/// Parse a configuration file: JSON when it starts with '{', otherwise the
/// flat `key = value` format with '#' comments.
pub fn parse_config(text: &str) -> Result<RunConfig, BenchError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let cfg: RunConfig =
            serde_json::from_str(trimmed).map_err(|e| BenchError::Config(format!("json: {e}")))?;
        cfg.validate()?;
        return Ok(cfg);
    }
    let mut kv = std::collections::BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            BenchError::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    config_from_kv(&kv)
}

fn config_from_kv(
    kv: &std::collections::BTreeMap<String, String>,
) -> Result<RunConfig, BenchError> {
    let get = |k: &str| -> Result<&String, BenchError> {
        kv.get(k)
            .ok_or_else(|| BenchError::Config(format!("missing key '{k}'")))
    };
    let parse_f = |k: &str| -> Result<f64, BenchError> {
        get(k)?
            .parse()
            .map_err(|_| BenchError::Config(format!("key '{k}' is not a number")))
    };
    let parse_u = |k: &str| -> Result<usize, BenchError> {
        get(k)?
            .parse()
            .map_err(|_| BenchError::Config(format!("key '{k}' is not an integer")))
    };
    let problem = match get("problem")?.as_str() {
        "nls2d" => ProblemId::Nls2d {
            n: parse_u("n")?,
            alpha: parse_f("alpha")?,
        },
        "allen-cahn-2d" | "ac2d" => ProblemId::AllenCahn2d {
            n: parse_u("n")?,
            kappa: parse_f("kappa")?,
        },
        "nls3d" => {
            let n = parse_u("n")?;
            let gamma = match kv.get("gamma") {
                Some(g) => g
                    .parse()
                    .map_err(|_| BenchError::Config("key 'gamma' is not a number".into()))?,
                None => 0.1 * n as f64,
            };
            ProblemId::Nls3d {
                n,
                alpha: parse_f("alpha")?,
                gamma,
            }
        }
        "allen-cahn-3d" | "ac3d" => ProblemId::AllenCahn3d {
            n: parse_u("n")?,
            kappa: parse_f("kappa")?,
        },
        other => return Err(BenchError::Config(format!("unknown problem '{other}'"))),
    };
    let method_str = get("method")?.clone();
    let method = MethodId::parse(&method_str)
        .ok_or_else(|| BenchError::Config(format!("unknown method '{method_str}'")))?;
    let projection_str = get("projection")?.clone();
    let projection = ProjectionId::parse(&projection_str)
        .ok_or_else(|| BenchError::Config(format!("unknown projection '{projection_str}'")))?;
    let reference = match kv.get("reference").map(String::as_str).unwrap_or("compute") {
        "skip" => RefPolicy::Skip,
        "compute" => RefPolicy::Compute { h_ref: None },
        other => {
            if let Some(h) = other.strip_prefix("compute:") {
                RefPolicy::Compute {
                    h_ref: Some(h.parse().map_err(|_| {
                        BenchError::Config("reference step is not a number".into())
                    })?),
                }
            } else if let Some(p) = other.strip_prefix("load:") {
                RefPolicy::Load { path: p.into() }
            } else if let Some(p) = other.strip_prefix("cache:") {
                RefPolicy::Cache {
                    path: p.into(),
                    h_ref: None,
                }
            } else {
                return Err(BenchError::Config(format!(
                    "unknown reference policy '{other}'"
                )));
            }
        }
    };
    let warmup = match kv.get("warmup").map(String::as_str) {
        None | Some("auto") => None,
        Some("on") | Some("true") => Some(true),
        Some("off") | Some("false") => Some(false),
        Some(other) => {
            return Err(BenchError::Config(format!(
                "warmup must be auto/on/off, got '{other}'"
            )))
        }
    };
    let cfg = RunConfig {
        problem,
        method,
        projection,
        rank: parse_u("rank")?,
        h: parse_f("h")?,
        t_final: parse_f("T")?,
        warmup,
        reference,
        seed: kv
            .get("seed")
            .map(|s| s.parse())
            .transpose()
            .map_err(|_| BenchError::Config("seed is not an integer".into()))?
            .unwrap_or(0),
        checkpoints: kv
            .get("checkpoints")
            .map(|s| s.parse())
            .transpose()
            .map_err(|_| BenchError::Config("checkpoints is not an integer".into()))?
            .unwrap_or(10),
        out_dir: kv.get("out").cloned(),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = "\
# benchmark run
problem = nls2d
n = 128
alpha = 0.1
method = prk2
projection = deim:arp
rank = 8
h = 1e-3
T = 1.0
seed = 7
reference = compute
checkpoints = 5
";

    #[test]
    fn flat_and_json_round_trip() {
        let cfg = parse_config(FLAT).unwrap();
        assert_eq!(cfg.method, MethodId::Prk2);
        assert_eq!(cfg.projection, ProjectionId::DeimArp);
        assert_eq!(cfg.seed, 7);
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back = parse_config(&json).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.run_id(), back.run_id());
    }

    #[test]
    fn validation_rejects_mismatched_method() {
        let mut cfg = parse_config(FLAT).unwrap();
        cfg.method = MethodId::TuckerPrk2;
        assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
        cfg.method = MethodId::Perk2;
        assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
    }

    #[test]
    fn selector_strings_round_trip() {
        for s in ["orthogonal", "deim:greedy", "deim:qdeim", "deim:srrqr:2", "deim:arp"] {
            let p = ProjectionId::parse(s).unwrap();
            assert_eq!(ProjectionId::parse(&p.as_string()), Some(p));
        }
        assert!(ProjectionId::parse("deim:unknown").is_none());
    }
}
