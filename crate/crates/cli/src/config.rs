//! Run configuration: a versioned JSON document with one experiment.

use std::path::{Path, PathBuf};

use jkolip::entropic2d::EntropicJkoConfig;
use jkolip::jko1d::JkoConfig;
use jkolip::lipverify::TheoremTolerance;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Jko1d(Jko1dConfig),
    Jko2d(Jko2dConfig),
    TheoremSweep(SweepConfig),
    ExtensionAudit(ExtensionAuditConfig),
    FpCompare(FpCompareConfig),
    LemmaProbe(LemmaProbeConfig),
}

pub const KINDS: [(&str, &str); 6] = [
    (
        "jko1d",
        "1-D JKO trajectory with per-step contraction checks and decay envelope",
    ),
    ("jko2d", "2-D entropic JKO trajectory along an eps ladder"),
    (
        "theorem-sweep",
        "seeded random 1-D instances over an (alpha, tau) ladder",
    ),
    (
        "extension-audit",
        "convex/Lipschitz extension, mollification and penalty diagnostics",
    ),
    (
        "fp-compare",
        "JKO trajectories against the finite-volume PDE solver along a tau ladder",
    ),
    (
        "lemma-probe",
        "interior argmax of |grad phi| on balls, 1-D exact and 2-D entropic",
    ),
];

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Jko1d(_) => "jko1d",
            Experiment::Jko2d(_) => "jko2d",
            Experiment::TheoremSweep(_) => "theorem-sweep",
            Experiment::ExtensionAudit(_) => "extension-audit",
            Experiment::FpCompare(_) => "fp-compare",
            Experiment::LemmaProbe(_) => "lemma-probe",
        }
    }

    /// The experiment of `kind` with every field at its default.
    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "jko1d" => Experiment::Jko1d(Default::default()),
            "jko2d" => Experiment::Jko2d(Default::default()),
            "theorem-sweep" => Experiment::TheoremSweep(Default::default()),
            "extension-audit" => Experiment::ExtensionAudit(Default::default()),
            "fp-compare" => Experiment::FpCompare(Default::default()),
            "lemma-probe" => Experiment::LemmaProbe(Default::default()),
            other => return Err(CliError::UnknownKind(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval {
        a: f64,
        b: f64,
        n: usize,
    },
    Box {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        nx: usize,
        ny: usize,
    },
    Disc {
        cx: f64,
        cy: f64,
        radius: f64,
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    TruncatedGaussian {
        #[serde(default)]
        mean: [f64; 2],
        sigma: f64,
    },
    Gibbs,
    PerturbedGibbs {
        amplitude: f64,
        frequency: f64,
    },
    /// CSV with `index` and `value` columns, relative to the config file.
    Csv {
        path: PathBuf,
    },
    /// Seeded random smooth positive density (sweeps and probes only).
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Quadratic {
        alpha: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    DoubleWell {
        a: f64,
        b: f64,
    },
    /// CSV values with an explicitly declared modulus.
    Csv {
        path: PathBuf,
        alpha: f64,
    },
}

/// Solver settings of the entropic step; `eps` comes from the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropicSettings {
    pub tol_rho: f64,
    pub tol_marg: f64,
    pub max_iter: usize,
}

impl Default for EntropicSettings {
    fn default() -> Self {
        let d = EntropicJkoConfig::default();
        Self {
            tol_rho: d.tol_rho,
            tol_marg: d.tol_marg,
            max_iter: d.max_iter,
        }
    }
}

impl EntropicSettings {
    pub fn with_eps(&self, eps: f64) -> EntropicJkoConfig {
        EntropicJkoConfig {
            eps,
            tol_rho: self.tol_rho,
            tol_marg: self.tol_marg,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaLadder {
    pub ns: Vec<usize>,
    pub source: DensitySpec,
    pub target: DensitySpec,
    pub min_order: f64,
}

impl Default for MaLadder {
    fn default() -> Self {
        Self {
            ns: vec![64, 128, 256],
            source: DensitySpec::TruncatedGaussian {
                mean: [-0.2, 0.0],
                sigma: 0.4,
            },
            target: DensitySpec::TruncatedGaussian {
                mean: [0.2, 0.0],
                sigma: 0.5,
            },
            min_order: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Jko1dConfig {
    pub domain: DomainSpec,
    pub density: DensitySpec,
    pub potential: PotentialSpec,
    pub tau: f64,
    pub steps: usize,
    pub jko: JkoConfig,
    pub tolerance: TheoremTolerance,
    /// Largest optimality residual accepted on converged steps.
    pub residual_max: f64,
    /// Also check that the Gibbs density is fixed by both 1-D solvers.
    pub gibbs_check: bool,
    pub gibbs_tol: f64,
    pub ma_ladder: Option<MaLadder>,
}

impl Default for Jko1dConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::Interval {
                a: -1.0,
                b: 1.0,
                n: 200,
            },
            density: DensitySpec::PerturbedGibbs {
                amplitude: 0.5,
                frequency: 2.0,
            },
            potential: PotentialSpec::Quadratic {
                alpha: 1.0,
                center: [0.0, 0.0],
            },
            tau: 0.2,
            steps: 20,
            jko: JkoConfig::default(),
            tolerance: TheoremTolerance::default(),
            residual_max: 1e-7,
            gibbs_check: false,
            gibbs_tol: 1e-8,
            ma_ladder: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Jko2dConfig {
    pub domain: DomainSpec,
    pub density: DensitySpec,
    pub potential: PotentialSpec,
    pub tau: f64,
    pub steps: usize,
    /// Ladder of `eps / h^2`, largest first; the trajectory uses the last.
    pub eps_factors: Vec<f64>,
    pub entropic: EntropicSettings,
    pub tolerance: TheoremTolerance,
    /// Check that the Gibbs error shrinks along the eps ladder.
    pub gibbs_check: bool,
}

impl Default for Jko2dConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::Box {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
                nx: 24,
                ny: 24,
            },
            density: DensitySpec::TruncatedGaussian {
                mean: [0.3, 0.6],
                sigma: 0.25,
            },
            potential: PotentialSpec::Quadratic {
                alpha: 1.0,
                center: [0.5, 0.5],
            },
            tau: 0.1,
            steps: 3,
            eps_factors: vec![8.0, 4.0, 2.0],
            entropic: EntropicSettings::default(),
            tolerance: TheoremTolerance::default(),
            gibbs_check: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheck {
    pub energy_tol: f64,
    pub l1_tol: f64,
}

impl Default for OracleCheck {
    fn default() -> Self {
        Self {
            energy_tol: 1e-5,
            l1_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Interval domain; its `n` is the base resolution.
    pub domain: DomainSpec,
    /// Second resolution for the refinement study.
    pub refine_n: Option<usize>,
    /// Allowed margin loss under refinement.
    pub refine_slack: f64,
    pub alphas: Vec<f64>,
    pub taus: Vec<f64>,
    pub instances: usize,
    /// Initial density: `random`, `gibbs` or `perturbed-gibbs`.
    pub density: DensitySpec,
    pub jko: JkoConfig,
    pub tolerance: TheoremTolerance,
    /// Compare every step with the atomic oracle.
    pub oracle: Option<OracleCheck>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::Interval {
                a: -1.0,
                b: 1.0,
                n: 200,
            },
            refine_n: Some(400),
            refine_slack: 1e-3,
            alphas: vec![-0.5, 0.0, 1.0, 4.0],
            taus: vec![0.05, 0.2],
            instances: 50,
            density: DensitySpec::Random,
            jko: JkoConfig::default(),
            tolerance: TheoremTolerance::default(),
            oracle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtensionAuditConfig {
    pub inner: DomainSpec,
    pub outer: DomainSpec,
    pub potentials: Vec<PotentialSpec>,
    pub density: DensitySpec,
    pub ns: Vec<usize>,
    /// Round-off allowance on the sandwich bounds.
    pub quadrature_tol: f64,
    /// `Lip(V_n) - Lip(V)` on the domain may not exceed this.
    pub lip_excess_max: f64,
    /// `|grad h_n| <= Lip(h) + grad_slack`.
    pub grad_slack: f64,
    /// Mass of `g_n` farther than this from the domain must decay along `ns`.
    pub decay_delta: f64,
}

impl Default for ExtensionAuditConfig {
    fn default() -> Self {
        Self {
            inner: DomainSpec::Interval {
                a: 0.0,
                b: 1.0,
                n: 100,
            },
            outer: DomainSpec::Interval {
                a: -1.0,
                b: 2.0,
                n: 300,
            },
            potentials: vec![
                PotentialSpec::Zero,
                PotentialSpec::Quadratic {
                    alpha: 1.0,
                    center: [0.3, 0.0],
                },
                PotentialSpec::Quadratic {
                    alpha: 4.0,
                    center: [0.6, 0.0],
                },
                PotentialSpec::DoubleWell { a: 0.5, b: 0.5 },
            ],
            density: DensitySpec::PerturbedGibbs {
                amplitude: 0.5,
                frequency: 3.0,
            },
            ns: vec![5, 10, 20, 40],
            quadrature_tol: 1e-12,
            lip_excess_max: 2.05,
            grad_slack: 0.02,
            decay_delta: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpCompareConfig {
    pub domain: DomainSpec,
    pub density: DensitySpec,
    pub potential: PotentialSpec,
    pub t_final: f64,
    pub taus: Vec<f64>,
    /// Reference time step is `tau / dt_ratio`.
    pub dt_ratio: usize,
    pub min_order: f64,
    pub jko: JkoConfig,
}

impl Default for FpCompareConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::Interval {
                a: -1.0,
                b: 1.0,
                n: 200,
            },
            density: DensitySpec::PerturbedGibbs {
                amplitude: 0.6,
                frequency: 2.0,
            },
            potential: PotentialSpec::Quadratic {
                alpha: 1.0,
                center: [0.0, 0.0],
            },
            t_final: 0.5,
            taus: vec![0.1, 0.05, 0.025],
            dt_ratio: 50,
            min_order: 0.8,
            jko: JkoConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaProbeConfig {
    /// Random 1-D pairs on `[-radius_1d, radius_1d]`.
    pub pairs_1d: usize,
    pub n_1d: usize,
    pub radius_1d: f64,
    /// Random 2-D pairs on the disc of radius `radius_2d`.
    pub discs: usize,
    pub n_2d: usize,
    pub radius_2d: f64,
    /// `eps = eps_factor h^2`.
    pub eps_factor: f64,
    /// The bound is `sqrt(2) R + bound_slack R`.
    pub bound_slack: f64,
}

impl Default for LemmaProbeConfig {
    fn default() -> Self {
        Self {
            pairs_1d: 20,
            n_1d: 200,
            radius_1d: 1.0,
            discs: 3,
            n_2d: 64,
            radius_2d: 1.0,
            eps_factor: 2.0,
            bound_slack: 0.05,
        }
    }
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(
            key,
            format!("must be a finite number > 0, got {x}"),
        ))
    }
}

fn nonempty<T>(key: &str, xs: &[T]) -> Result<()> {
    if xs.is_empty() {
        Err(CliError::config(key, "must not be empty"))
    } else {
        Ok(())
    }
}

fn at_least(key: &str, x: usize, min: usize) -> Result<()> {
    if x >= min {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must be >= {min}, got {x}")))
    }
}

fn core_param(key: &str, r: jkolip::Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        jkolip::Error::InvalidParameter { name, reason } => {
            CliError::config(format!("{key}.{name}"), reason)
        }
        other => CliError::config(key, other.to_string()),
    })
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    fn validate(&self, key: &str) -> Result<()> {
        let ordered = |lo: f64, hi: f64, name: &str| {
            if lo.is_finite() && hi.is_finite() && lo < hi {
                Ok(())
            } else {
                Err(CliError::config(
                    format!("{key}.{name}"),
                    format!("need a finite, nonempty range, got [{lo}, {hi}]"),
                ))
            }
        };
        match *self {
            DomainSpec::Interval { a, b, n } => {
                ordered(a, b, "b")?;
                at_least(&format!("{key}.n"), n, 2)
            }
            DomainSpec::Box {
                x0,
                x1,
                y0,
                y1,
                nx,
                ny,
            } => {
                ordered(x0, x1, "x1")?;
                ordered(y0, y1, "y1")?;
                at_least(&format!("{key}.nx"), nx, 2)?;
                at_least(&format!("{key}.ny"), ny, 2)
            }
            DomainSpec::Disc { cx, cy, radius, n } => {
                if !(cx.is_finite() && cy.is_finite()) {
                    return Err(CliError::config(
                        format!("{key}.cx"),
                        "center must be finite",
                    ));
                }
                positive(&format!("{key}.radius"), radius)?;
                at_least(&format!("{key}.n"), n, 4)
            }
        }
    }
}

impl DensitySpec {
    fn validate(&self, key: &str, allow_random: bool) -> Result<()> {
        match self {
            DensitySpec::TruncatedGaussian { mean, sigma } => {
                if !mean.iter().all(|m| m.is_finite()) {
                    return Err(CliError::config(format!("{key}.mean"), "must be finite"));
                }
                positive(&format!("{key}.sigma"), *sigma)
            }
            DensitySpec::PerturbedGibbs {
                amplitude,
                frequency,
            } => {
                if !(amplitude.is_finite() && frequency.is_finite()) {
                    return Err(CliError::config(
                        format!("{key}.amplitude"),
                        "amplitude and frequency must be finite",
                    ));
                }
                Ok(())
            }
            DensitySpec::Random if !allow_random => Err(CliError::config(
                format!("{key}.family"),
                "`random` is only available in theorem-sweep",
            )),
            _ => Ok(()),
        }
    }
}

impl PotentialSpec {
    fn validate(&self, key: &str) -> Result<()> {
        match self {
            PotentialSpec::Quadratic { alpha, center } => {
                if !alpha.is_finite() || !center.iter().all(|c| c.is_finite()) {
                    return Err(CliError::config(
                        format!("{key}.alpha"),
                        "alpha and center must be finite",
                    ));
                }
                Ok(())
            }
            PotentialSpec::DoubleWell { a, b } => {
                positive(&format!("{key}.a"), *a)?;
                if !b.is_finite() {
                    return Err(CliError::config(format!("{key}.b"), "must be finite"));
                }
                Ok(())
            }
            PotentialSpec::Csv { alpha, .. } => {
                if !alpha.is_finite() {
                    return Err(CliError::config(format!("{key}.alpha"), "must be finite"));
                }
                Ok(())
            }
            PotentialSpec::Zero => Ok(()),
        }
    }
}

impl RunConfig {
    /// Parse and validate; errors name the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(
                if path == "." {
                    "(root)".to_string()
                } else {
                    path
                },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        let key = "experiment";
        match &self.experiment {
            Experiment::Jko1d(c) => {
                c.domain.validate(&format!("{key}.domain"))?;
                if c.domain.dim() != 1 {
                    return Err(CliError::config(
                        format!("{key}.domain.shape"),
                        "jko1d needs an interval",
                    ));
                }
                c.density.validate(&format!("{key}.density"), false)?;
                c.potential.validate(&format!("{key}.potential"))?;
                positive(&format!("{key}.tau"), c.tau)?;
                at_least(&format!("{key}.steps"), c.steps, 1)?;
                core_param(&format!("{key}.jko"), c.jko.validate())?;
                positive(&format!("{key}.tolerance.factor"), c.tolerance.factor)?;
                positive(&format!("{key}.residual_max"), c.residual_max)?;
                positive(&format!("{key}.gibbs_tol"), c.gibbs_tol)?;
                if let Some(m) = &c.ma_ladder {
                    nonempty(&format!("{key}.ma_ladder.ns"), &m.ns)?;
                    if m.ns.len() < 2 {
                        return Err(CliError::config(
                            format!("{key}.ma_ladder.ns"),
                            "need at least two resolutions",
                        ));
                    }
                    for n in &m.ns {
                        at_least(&format!("{key}.ma_ladder.ns"), *n, 4)?;
                    }
                    m.source
                        .validate(&format!("{key}.ma_ladder.source"), false)?;
                    m.target
                        .validate(&format!("{key}.ma_ladder.target"), false)?;
                }
            }
            Experiment::Jko2d(c) => {
                c.domain.validate(&format!("{key}.domain"))?;
                if c.domain.dim() != 2 {
                    return Err(CliError::config(
                        format!("{key}.domain.shape"),
                        "jko2d needs a box or a disc",
                    ));
                }
                c.density.validate(&format!("{key}.density"), false)?;
                c.potential.validate(&format!("{key}.potential"))?;
                positive(&format!("{key}.tau"), c.tau)?;
                at_least(&format!("{key}.steps"), c.steps, 1)?;
                nonempty(&format!("{key}.eps_factors"), &c.eps_factors)?;
                for f in &c.eps_factors {
                    positive(&format!("{key}.eps_factors"), *f)?;
                }
                positive(&format!("{key}.entropic.tol_rho"), c.entropic.tol_rho)?;
                positive(&format!("{key}.entropic.tol_marg"), c.entropic.tol_marg)?;
                at_least(&format!("{key}.entropic.max_iter"), c.entropic.max_iter, 1)?;
                positive(&format!("{key}.tolerance.factor"), c.tolerance.factor)?;
            }
            Experiment::TheoremSweep(c) => {
                c.domain.validate(&format!("{key}.domain"))?;
                if c.domain.dim() != 1 {
                    return Err(CliError::config(
                        format!("{key}.domain.shape"),
                        "theorem-sweep needs an interval",
                    ));
                }
                if let Some(n) = c.refine_n {
                    at_least(&format!("{key}.refine_n"), n, 2)?;
                }
                if !(c.refine_slack >= 0.0) {
                    return Err(CliError::config(
                        format!("{key}.refine_slack"),
                        "must be >= 0",
                    ));
                }
                nonempty(&format!("{key}.alphas"), &c.alphas)?;
                if !c.alphas.iter().all(|a| a.is_finite()) {
                    return Err(CliError::config(format!("{key}.alphas"), "must be finite"));
                }
                nonempty(&format!("{key}.taus"), &c.taus)?;
                for t in &c.taus {
                    positive(&format!("{key}.taus"), *t)?;
                }
                at_least(&format!("{key}.instances"), c.instances, 1)?;
                match &c.density {
                    DensitySpec::Random
                    | DensitySpec::Gibbs
                    | DensitySpec::PerturbedGibbs { .. } => {}
                    _ => {
                        return Err(CliError::config(
                            format!("{key}.density.family"),
                            "theorem-sweep supports random, gibbs and perturbed-gibbs",
                        ))
                    }
                }
                c.density.validate(&format!("{key}.density"), true)?;
                core_param(&format!("{key}.jko"), c.jko.validate())?;
                positive(&format!("{key}.tolerance.factor"), c.tolerance.factor)?;
                if let Some(o) = &c.oracle {
                    positive(&format!("{key}.oracle.energy_tol"), o.energy_tol)?;
                    positive(&format!("{key}.oracle.l1_tol"), o.l1_tol)?;
                }
            }
            Experiment::ExtensionAudit(c) => {
                c.inner.validate(&format!("{key}.inner"))?;
                c.outer.validate(&format!("{key}.outer"))?;
                if c.inner.dim() != c.outer.dim() {
                    return Err(CliError::config(
                        format!("{key}.outer.shape"),
                        "inner and outer domains differ in dimension",
                    ));
                }
                nonempty(&format!("{key}.potentials"), &c.potentials)?;
                for (i, p) in c.potentials.iter().enumerate() {
                    p.validate(&format!("{key}.potentials[{i}]"))?;
                }
                c.density.validate(&format!("{key}.density"), false)?;
                nonempty(&format!("{key}.ns"), &c.ns)?;
                for n in &c.ns {
                    at_least(&format!("{key}.ns"), *n, 1)?;
                }
                if !c.ns.windows(2).all(|w| w[0] < w[1]) {
                    return Err(CliError::config(
                        format!("{key}.ns"),
                        "must be strictly increasing",
                    ));
                }
                positive(&format!("{key}.quadrature_tol"), c.quadrature_tol)?;
                positive(&format!("{key}.lip_excess_max"), c.lip_excess_max)?;
                positive(&format!("{key}.grad_slack"), c.grad_slack)?;
                positive(&format!("{key}.decay_delta"), c.decay_delta)?;
            }
            Experiment::FpCompare(c) => {
                c.domain.validate(&format!("{key}.domain"))?;
                if c.domain.dim() != 1 {
                    return Err(CliError::config(
                        format!("{key}.domain.shape"),
                        "fp-compare needs an interval",
                    ));
                }
                c.density.validate(&format!("{key}.density"), false)?;
                c.potential.validate(&format!("{key}.potential"))?;
                positive(&format!("{key}.t_final"), c.t_final)?;
                if c.taus.len() < 2 {
                    return Err(CliError::config(
                        format!("{key}.taus"),
                        "need at least two step sizes",
                    ));
                }
                for t in &c.taus {
                    positive(&format!("{key}.taus"), *t)?;
                    let k = c.t_final / t;
                    if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                        return Err(CliError::config(
                            format!("{key}.taus"),
                            format!("t_final is not a multiple of tau = {t}"),
                        ));
                    }
                }
                at_least(&format!("{key}.dt_ratio"), c.dt_ratio, 1)?;
                if !c.min_order.is_finite() {
                    return Err(CliError::config(
                        format!("{key}.min_order"),
                        "must be finite",
                    ));
                }
                core_param(&format!("{key}.jko"), c.jko.validate())?;
            }
            Experiment::LemmaProbe(c) => {
                if c.pairs_1d + c.discs == 0 {
                    return Err(CliError::config(
                        format!("{key}.pairs_1d"),
                        "need at least one probe",
                    ));
                }
                at_least(&format!("{key}.n_1d"), c.n_1d, 4)?;
                at_least(&format!("{key}.n_2d"), c.n_2d, 4)?;
                positive(&format!("{key}.radius_1d"), c.radius_1d)?;
                positive(&format!("{key}.radius_2d"), c.radius_2d)?;
                positive(&format!("{key}.eps_factor"), c.eps_factor)?;
                if !(c.bound_slack >= 0.0) {
                    return Err(CliError::config(
                        format!("{key}.bound_slack"),
                        "must be >= 0",
                    ));
                }
            }
        }
        Ok(())
    }
}
