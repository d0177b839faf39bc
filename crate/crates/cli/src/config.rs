use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stochdelay::linalg::Matrix;
use stochdelay::semigroup::{
    FiniteDimSemigroup, Generator, McKendrickSemigroup, RenewalConfig, Semigroup, TransportSemigroup,
};
use stochdelay::solver::{DelayKernel, DelayProblem, Drift, PicardConfig, ScalarMap};
use stochdelay::space::{GridFunction, SegmentFunction, SpaceTag, SpatialGrid};

use crate::error::{CliError, Result};
use crate::profile::{Profile, Separable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Transport,
    Mckendrick,
    FiniteDim,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Self::Transport, Self::Mckendrick, Self::FiniteDim];

    pub fn name(self) -> &'static str {
        match self {
            Self::Transport => "transport",
            Self::Mckendrick => "mckendrick",
            Self::FiniteDim => "finite_dim",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Transport => "damped transport on C0([0,1]) with distributed delay and additive noise",
            Self::Mckendrick => "age-structured McKendrick population on L1(0,L) with nonlocal births",
            Self::FiniteDim => "linear system dX = (MX + phi)dt + psi dW on R^n (oracle scenario)",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| {
            let valid: Vec<_> = Self::ALL.iter().map(|s| s.name()).collect();
            CliError::Config(format!(
                "unknown scenario `{name}`; valid scenarios: {}",
                valid.join(", ")
            ))
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    #[default]
    None,
    /// Solve with `-φ` while checking residuals against `φ`.
    FlipDriftSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportParams {
    /// `μ ≥ 0` in `S(t)x(ξ) = e^{-μt}x(ξ-t)`.
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McKendrickParams {
    /// Age truncation `L`.
    pub truncation: f64,
    /// Weight `w` of `L¹_w`; must exceed `sup|b_μ|`.
    pub weight: f64,
    pub mortality: Profile,
    pub birth: Profile,
    /// `d` with `supp σ ⊂ [0, d]`.
    pub noise_support: f64,
    pub renewal_tol: f64,
    pub renewal_max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteDimParams {
    /// Rows of `M`.
    pub matrix: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    /// Noise columns `ψe_c`.
    pub noise: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub x0: Profile,
    pub history: Separable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftParams {
    pub phi: Option<Separable>,
    pub k: Option<Separable>,
    pub f1: ScalarMap,
    pub f2: ScalarMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardParams {
    pub beta: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub ensemble: usize,
    /// Leading ensemble members written out in full.
    pub saved_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    /// `Δt = 2^{-base_level}` at the coarsest refinement level.
    pub base_level: u32,
    pub levels: usize,
    pub random_functionals: usize,
    pub paths: usize,
    pub min_order: f64,
    pub covariance_paths: usize,
    pub probes: usize,
    /// Factorization exponent for the weighted γ-norm checks.
    pub alpha: f64,
    pub gamma_mc: usize,
    /// Relative change allowed in the weighted γ-norm under one refinement.
    pub gamma_stability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaParams {
    pub min_depth: u32,
    pub depth: u32,
    pub n_mc: usize,
    pub tail_from: u32,
    pub tail_draws: usize,
    /// `β > 1` of the almost-sure Gaussian growth bound in the tail envelope.
    pub envelope_beta: f64,
    /// Allowed relative growth of the estimate over the last two depths.
    pub stabilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    pub paths: usize,
    pub probes: usize,
    pub z_max: f64,
    /// Level for the closed-form check, which also sees the `O(Δt)` bias of the scheme.
    pub closed_form_level: u32,
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    pub seed: u64,
    pub horizon: f64,
    pub p: f64,
    pub q: f64,
    /// `Δt = 2^{-level}` (and `Δξ = Δt` on function spaces) for simulate / gamma-norm / oracle.
    pub level: u32,
    #[serde(default)]
    pub fault: Fault,
    pub transport: Option<TransportParams>,
    pub mckendrick: Option<McKendrickParams>,
    pub finite_dim: Option<FiniteDimParams>,
    pub initial: Option<Initial>,
    pub noise: Option<Vec<Profile>>,
    pub drift: DriftParams,
    pub picard: PicardParams,
    pub simulate: SimulateParams,
    pub verify: VerifyParams,
    pub gamma: GammaParams,
    pub oracle: OracleParams,
}

/// Sections replaced wholesale rather than merged key by key.
const REPLACED: [&str; 4] = ["drift", "initial", "noise", "finite_dim"];

fn sine(amplitude: f64) -> Profile {
    Profile::Sine {
        amplitude,
        frequency: 1.0,
        phase: 0.0,
    }
}

fn affine(c0: f64, c1: f64) -> Profile {
    Profile::Quadratic { c0, c1, c2: 0.0 }
}

impl Config {
    /// The registry default for `scenario`.
    pub fn default_for(scenario: Scenario) -> Self {
        let common = |level: u32, base_level: u32| Config {
            scenario,
            seed: 0,
            horizon: 1.0,
            p: 2.0,
            q: 2.0,
            level,
            fault: Fault::None,
            transport: None,
            mckendrick: None,
            finite_dim: None,
            initial: None,
            noise: None,
            drift: DriftParams {
                phi: None,
                k: None,
                f1: ScalarMap::Zero,
                f2: ScalarMap::Zero,
            },
            picard: PicardParams {
                beta: None,
                tol: 1e-10,
                max_iter: 200,
            },
            simulate: SimulateParams {
                ensemble: 200,
                saved_paths: 2,
            },
            verify: VerifyParams {
                base_level,
                levels: 3,
                random_functionals: 5,
                paths: 1,
                min_order: 0.4,
                covariance_paths: 4000,
                probes: 5,
                alpha: 0.3,
                gamma_mc: 2000,
                gamma_stability: 0.05,
            },
            gamma: GammaParams {
                min_depth: 4,
                depth: 10,
                n_mc: 2000,
                tail_from: 4,
                tail_draws: 64,
                envelope_beta: 2.0,
                stabilization: 0.02,
            },
            oracle: OracleParams {
                paths: 10_000,
                probes: 5,
                z_max: 5.0,
                closed_form_level: 10,
            },
        };
        match scenario {
            Scenario::Transport => Config {
                transport: Some(TransportParams { decay: 0.5 }),
                initial: Some(Initial {
                    x0: sine(1.0),
                    history: Separable {
                        theta: affine(1.0, 0.5),
                        space: sine(1.0),
                    },
                }),
                noise: Some(vec![Profile::Product {
                    factors: vec![sine(0.5), Profile::Ramp { slope: 1.0 }],
                }]),
                drift: DriftParams {
                    phi: Some(Separable {
                        theta: affine(0.6, 0.6),
                        space: sine(1.0),
                    }),
                    k: Some(Separable {
                        theta: affine(0.4, 0.2),
                        space: Profile::Ramp { slope: 1.0 },
                    }),
                    f1: ScalarMap::Sine {
                        amplitude: 0.8,
                        frequency: 1.0,
                    },
                    f2: ScalarMap::Tanh {
                        amplitude: 0.5,
                        scale: 2.0,
                    },
                },
                ..common(6, 6)
            },
            Scenario::Mckendrick => Config {
                mckendrick: Some(McKendrickParams {
                    truncation: 10.0,
                    weight: 1.0,
                    mortality: Profile::Quadratic {
                        c0: 0.2,
                        c1: 0.0,
                        c2: 0.01,
                    },
                    birth: Profile::Product {
                        factors: vec![
                            Profile::Indicator {
                                from: 1.0,
                                to: 5.0,
                                value: 1.0,
                            },
                            Profile::Sine {
                                amplitude: 0.6,
                                frequency: 0.25,
                                phase: -0.25,
                            },
                        ],
                    },
                    noise_support: 2.0,
                    renewal_tol: 1e-13,
                    renewal_max_iter: 500,
                }),
                initial: Some(Initial {
                    x0: Profile::Bump {
                        center: 2.0,
                        width: 1.5,
                        height: 1.0,
                    },
                    history: Separable {
                        theta: Profile::Constant { value: 1.0 },
                        space: Profile::Bump {
                            center: 2.0,
                            width: 1.5,
                            height: 1.0,
                        },
                    },
                }),
                noise: Some(vec![Profile::Bump {
                    center: 1.0,
                    width: 1.0,
                    height: 0.3,
                }]),
                drift: DriftParams {
                    phi: Some(Separable {
                        theta: affine(0.3, 0.3),
                        space: Profile::ExpDecay {
                            amplitude: 1.0,
                            rate: 0.25,
                        },
                    }),
                    k: None,
                    f1: ScalarMap::Tanh {
                        amplitude: 0.3,
                        scale: 1.0,
                    },
                    f2: ScalarMap::Zero,
                },
                ..common(5, 4)
            },
            Scenario::FiniteDim => Config {
                finite_dim: Some(FiniteDimParams {
                    matrix: vec![vec![-1.0, 0.3], vec![-0.2, -0.5]],
                    x0: vec![1.0, -0.5],
                    noise: vec![vec![0.4, 0.1]],
                }),
                drift: DriftParams {
                    phi: None,
                    k: None,
                    f1: ScalarMap::Tanh {
                        amplitude: 0.5,
                        scale: 1.0,
                    },
                    f2: ScalarMap::Zero,
                },
                ..common(6, 5)
            },
        }
    }

    /// Parses a TOML document over the defaults of the scenario it names, then validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let name = match user.get("scenario") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(CliError::Config("`scenario` must be a string".into())),
            None => return Err(CliError::Config("missing `scenario`".into())),
        };
        let scenario = Scenario::parse(&name)?;
        for other in Scenario::ALL.into_iter().filter(|&s| s != scenario) {
            if user.contains_key(other.name()) {
                return Err(CliError::Config(format!(
                    "section [{}] does not apply to scenario `{scenario}`",
                    other.name()
                )));
            }
        }
        let defaults =
            toml::Table::try_from(Self::default_for(scenario)).map_err(|e| CliError::Config(e.to_string()))?;
        let merged = merge(defaults, user, true);
        let cfg: Config = merged
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML rendering; the config hash is taken over this text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks the hypothesis list of the scenario by building the problem at
    /// the simulation level and at every verification level.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(CliError::Config(format!("`{name}` must be a finite number >= 1")));
            }
        }
        if !(self.horizon > 0.0) {
            return Err(CliError::Config("`horizon` must be positive".into()));
        }
        for map in [self.drift.f1, self.drift.f2] {
            if !map.lipschitz().is_finite() {
                return Err(CliError::Hypothesis(format!(
                    "drift map {map:?} has no finite Lipschitz constant"
                )));
            }
        }
        let v = &self.verify;
        if v.levels < 2 {
            return Err(CliError::Config("`verify.levels` must be at least 2".into()));
        }
        if v.paths == 0 || self.simulate.ensemble == 0 || v.probes == 0 || self.oracle.probes == 0 {
            return Err(CliError::Config(
                "path, ensemble and probe counts must be positive".into(),
            ));
        }
        if !(v.alpha > 0.0 && v.alpha < 0.5) {
            return Err(CliError::Hypothesis(format!(
                "factorization exponent alpha = {} must lie in (0, 1/2)",
                v.alpha
            )));
        }
        let g = &self.gamma;
        if g.min_depth > g.depth || g.depth > 14 || g.tail_from == 0 || g.n_mc == 0 {
            return Err(CliError::Config(
                "gamma depths must satisfy 1 <= tail_from, min_depth <= depth <= 14 and n_mc >= 1".into(),
            ));
        }
        if self.oracle.closed_form_level > 14 {
            return Err(CliError::Config("`oracle.closed_form_level` must be at most 14".into()));
        }
        if !(g.envelope_beta > 1.0) {
            return Err(CliError::Config("`gamma.envelope_beta` must exceed 1".into()));
        }
        match self.scenario {
            Scenario::Transport => {
                let t = self.section(&self.transport, "transport")?;
                if !(t.decay >= 0.0) {
                    return Err(CliError::Hypothesis("transport decay must be non-negative".into()));
                }
            }
            Scenario::Mckendrick => {
                let m = self.section(&self.mckendrick, "mckendrick")?;
                if !(m.noise_support > 0.0 && m.noise_support <= m.truncation) {
                    return Err(CliError::Config("`noise_support` must lie in (0, truncation]".into()));
                }
            }
            Scenario::FiniteDim => {
                let f = self.section(&self.finite_dim, "finite_dim")?;
                let n = f.matrix.len();
                if n == 0 || f.matrix.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(
                        "`finite_dim.matrix` must be square and non-empty".into(),
                    ));
                }
                if f.x0.len() != n || f.noise.is_empty() || f.noise.iter().any(|c| c.len() != n) {
                    return Err(CliError::Config(
                        "`finite_dim` x0 and noise columns must have the matrix dimension".into(),
                    ));
                }
            }
        }
        if self.scenario != Scenario::FiniteDim && (self.initial.is_none() || self.noise.is_none()) {
            return Err(CliError::Config(
                "`initial` and `noise` are required for function-space scenarios".into(),
            ));
        }
        self.problem(self.level)?;
        for l in 0..v.levels as u32 {
            self.problem(v.base_level + l)?;
        }
        Ok(())
    }

    fn section<'a, S>(&self, s: &'a Option<S>, name: &str) -> Result<&'a S> {
        s.as_ref()
            .ok_or_else(|| CliError::Config(format!("missing section [{name}]")))
    }

    pub fn picard(&self) -> PicardConfig<f64> {
        PicardConfig {
            beta: self.picard.beta,
            tol: self.picard.tol,
            max_iter: self.picard.max_iter,
        }
    }

    /// The problem at `Δt = 2^{-level}`, as configured.
    pub fn problem(&self, level: u32) -> Result<DelayProblem<f64>> {
        if level > 16 {
            return Err(CliError::Config(format!("level {level} is too fine (max 16)")));
        }
        let m = 1usize << level;
        let h = 1.0 / m as f64;
        let ctx = format!("{} problem at level {level}", self.scenario);
        let err = |e| CliError::core(ctx.clone())(e);
        let (generator, tag) = match self.scenario {
            Scenario::Transport => {
                let t = self.section(&self.transport, "transport")?;
                let grid = SpatialGrid::unit_interval(m + 1).map_err(err)?;
                (
                    Generator::Transport(TransportSemigroup::new(grid, t.decay).map_err(err)?),
                    SpaceTag::C0,
                )
            }
            Scenario::Mckendrick => {
                let p = self.section(&self.mckendrick, "mckendrick")?;
                let grid = SpatialGrid::half_line_with_step(h, p.truncation).map_err(err)?;
                let nodes = grid.nodes().to_vec();
                let cfg = RenewalConfig {
                    tol: p.renewal_tol,
                    max_iter: p.renewal_max_iter,
                };
                let sg = McKendrickSemigroup::new(
                    grid,
                    p.mortality.sample(&nodes, h),
                    p.birth.sample(&nodes, h),
                    p.weight,
                    cfg,
                )
                .map_err(err)?;
                (Generator::McKendrick(sg), SpaceTag::L1)
            }
            Scenario::FiniteDim => {
                let f = self.section(&self.finite_dim, "finite_dim")?;
                let n = f.matrix.len();
                let mat = Matrix::new(n, f.matrix.concat()).map_err(err)?;
                (
                    Generator::FiniteDim(FiniteDimSemigroup::new(mat).map_err(err)?),
                    SpaceTag::Euclidean,
                )
            }
        };
        let grid = generator.grid().clone();
        let nodes = grid.nodes().to_vec();
        let dxi = grid.step();
        let (x0, history, noise) = match &self.finite_dim {
            Some(f) if self.scenario == Scenario::FiniteDim => {
                (f.x0.clone(), vec![f.x0.clone(); m + 1], f.noise.clone())
            }
            _ => {
                let init = self.section(&self.initial, "initial")?;
                let noise = self.section(&self.noise, "noise")?;
                (
                    init.x0.sample(&nodes, dxi),
                    init.history.rows(&nodes, dxi, m),
                    noise.iter().map(|c| c.sample(&nodes, dxi)).collect(),
                )
            }
        };
        if self.scenario == Scenario::Mckendrick {
            let d = self.mckendrick.as_ref().map_or(f64::INFINITY, |p| p.noise_support);
            for col in &noise {
                if nodes.iter().zip(col).any(|(&a, &v)| a > d + 1e-12 && v != 0.0) {
                    return Err(CliError::Hypothesis(format!(
                        "noise profile sigma is not supported in [0, d] with d = {d}"
                    )));
                }
            }
        }
        let kernel = |k: &Option<Separable>| -> Result<Option<DelayKernel<f64>>> {
            k.as_ref()
                .map(|k| DelayKernel::new(k.rows(&nodes, dxi, m)).map_err(err))
                .transpose()
        };
        let drift = Drift {
            phi: kernel(&self.drift.phi)?,
            k: kernel(&self.drift.k)?,
            f1: self.drift.f1,
            f2: self.drift.f2,
        };
        let problem = DelayProblem {
            generator,
            drift,
            noise: noise
                .into_iter()
                .map(|c| GridFunction::new(grid.clone(), c, tag))
                .collect::<stochdelay::Result<_>>()
                .map_err(err)?,
            x0: GridFunction::new(grid.clone(), x0, tag).map_err(err)?,
            f0: SegmentFunction::new(grid, tag, history, self.p).map_err(err)?,
            p: self.p,
            q: self.q,
            horizon: self.horizon,
            noise_support: self.mckendrick.as_ref().map(|p| p.noise_support),
        };
        problem.validate().map_err(err)?;
        Ok(problem)
    }

    /// The problem actually handed to the solver (differs under fault injection).
    pub fn solved_problem(&self, level: u32) -> Result<DelayProblem<f64>> {
        let mut pb = self.problem(level)?;
        if self.fault == Fault::FlipDriftSign {
            pb.drift = pb.drift.negated();
        }
        Ok(pb)
    }
}

fn merge(mut base: toml::Table, over: toml::Table, top: bool) -> toml::Table {
    for (k, v) in over {
        let replace = top && REPLACED.contains(&k.as_str());
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !replace => {
                base.insert(k, toml::Value::Table(merge(b, o, false)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}
