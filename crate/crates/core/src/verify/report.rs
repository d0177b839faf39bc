use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::noise::{member_seed, sample_path};
use crate::scalar::Real;
use crate::solver::{picard_solve, DelayProblem, PicardConfig};
use crate::verify::functional::functional_suite;
use crate::verify::residual::all_residuals;

/// Settings of a refinement study.
#[derive(Debug, Clone)]
pub struct ReportConfig<T> {
    pub picard: PicardConfig<T>,
    /// Check times as fractions of the horizon.
    pub check_fractions: Vec<T>,
    pub n_random_functionals: usize,
    /// Number of noise paths; residuals are root-mean-square over paths.
    pub paths: usize,
    pub seed: u64,
}

impl<T: Real> Default for ReportConfig<T> {
    fn default() -> Self {
        Self {
            picard: PicardConfig::default(),
            check_fractions: vec![T::half(), T::one()],
            n_random_functionals: 5,
            paths: 1,
            seed: 0,
        }
    }
}

/// Residuals at one refinement level (max over check times, RMS over paths).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResiduals<T> {
    pub level: usize,
    pub dt: T,
    pub dxi: T,
    /// Per test functional.
    pub weak: Vec<T>,
    pub mild: T,
    /// `None` when skipped (ill-conditioned boundary elimination).
    pub strong: Option<T>,
    pub picard_iterations: usize,
}

impl<T: Real> LevelResiduals<T> {
    pub fn weak_max(&self) -> T {
        self.weak.iter().copied().fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    Weak,
    Mild,
    Strong,
}

impl ResidualKind {
    pub const ALL: [Self; 3] = [Self::Weak, Self::Mild, Self::Strong];

    pub fn name(self) -> &'static str {
        match self {
            Self::Weak => "weak",
            Self::Mild => "mild",
            Self::Strong => "strong",
        }
    }
}

/// Outcome of the joint-vanishing checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// Residual table over refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport<T> {
    pub functional_ids: Vec<String>,
    pub levels: Vec<LevelResiduals<T>>,
    pub tol: T,
    /// Whether the drift vanishes; the mild residual is then an identity of the scheme.
    pub drift_free: bool,
}

impl<T: Real> ResidualReport<T> {
    pub fn series(&self, kind: ResidualKind) -> Option<Vec<T>> {
        self.levels
            .iter()
            .map(|l| match kind {
                ResidualKind::Weak => Some(l.weak_max()),
                ResidualKind::Mild => Some(l.mild),
                ResidualKind::Strong => l.strong,
            })
            .collect()
    }

    fn floor(&self) -> T {
        T::lit(10.0) * self.tol
    }

    /// `log₂(r_{l−1}/r_l)` for consecutive levels.
    pub fn pairwise_orders(&self, kind: ResidualKind) -> Vec<Option<T>> {
        let Some(s) = self.series(kind) else {
            return vec![None; self.levels.len().saturating_sub(1)];
        };
        s.windows(2)
            .map(|w| (w[0] > T::zero() && w[1] > T::zero()).then(|| (w[0] / w[1]).log2()))
            .collect()
    }

    /// Least-squares slope of `−log₂ r` against the level, over levels above the
    /// tolerance floor; `None` if fewer than two such levels.
    pub fn fitted_order(&self, kind: ResidualKind) -> Option<T> {
        let s = self.series(kind)?;
        let pts: Vec<(T, T)> = s
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > self.floor())
            .map(|(l, &r)| (T::from_count(l), -r.log2()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = T::from_count(pts.len());
        let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
        let my = pts.iter().map(|p| p.1).sum::<T>() / n;
        let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }

    /// Non-increasing across levels (values under the floor count as equal).
    pub fn monotone(&self, kind: ResidualKind) -> Option<bool> {
        let s = self.series(kind)?;
        let f = self.floor();
        Some(s.windows(2).all(|w| w[1] <= w[0] || (w[0] <= f && w[1] <= f)))
    }

    /// Levels where one residual is below `10·tol` while another exceeds `100·tol`.
    /// The mild residual is left out when the drift vanishes.
    pub fn divergence_levels(&self) -> Vec<usize> {
        let lo = self.floor();
        let hi = T::lit(100.0) * self.tol;
        self.levels
            .iter()
            .filter(|l| {
                let mut vals = vec![l.weak_max()];
                if !self.drift_free {
                    vals.push(l.mild);
                }
                vals.extend(l.strong);
                let min = vals.iter().copied().fold(T::infinity(), T::min);
                let max = vals.iter().copied().fold(T::zero(), T::max);
                min < lo && max > hi
            })
            .map(|l| l.level)
            .collect()
    }

    /// Joint shrinkage verdict with a minimum fitted order.
    pub fn verdict(&self, min_order: T) -> Verdict {
        let mut reasons = Vec::new();
        for kind in ResidualKind::ALL {
            if self.series(kind).is_none() {
                continue;
            }
            if self.monotone(kind) == Some(false) {
                reasons.push(format!("{} residual does not shrink monotonically", kind.name()));
            }
            if let Some(order) = self.fitted_order(kind) {
                if order < min_order {
                    reasons.push(format!(
                        "{} residual order {:.3} below {:.3}",
                        kind.name(),
                        order.as_f64(),
                        min_order.as_f64()
                    ));
                }
            }
        }
        let div = self.divergence_levels();
        if !div.is_empty() {
            reasons.push(format!("residuals diverge from each other at levels {div:?}"));
        }
        Verdict {
            pass: reasons.is_empty(),
            reasons,
        }
    }
}

/// Solves the problem produced by `build(level)` at every level on bridge-refined
/// noise (level 0 draws the path, level `l` refines it `l` times) and tabulates
/// the weak, mild and strong residuals.
pub fn equivalence_report<T, F>(build: F, levels: usize, cfg: &ReportConfig<T>) -> Result<ResidualReport<T>>
where
    T: Real,
    F: Fn(usize) -> Result<DelayProblem<T>> + Sync,
{
    equivalence_report_against(&build, &build, levels, cfg)
}

/// As [`equivalence_report`], but the trajectories come from solving
/// `solve(level)` while residuals are evaluated against `model(level)`.
/// Used for fault injection: a mis-specified solve must not pass.
pub fn equivalence_report_against<T, F, G>(
    model: F,
    solve: G,
    levels: usize,
    cfg: &ReportConfig<T>,
) -> Result<ResidualReport<T>>
where
    T: Real,
    F: Fn(usize) -> Result<DelayProblem<T>> + Sync,
    G: Fn(usize) -> Result<DelayProblem<T>> + Sync,
{
    if levels < 2 {
        return Err(invalid("levels", "a refinement study needs at least two levels"));
    }
    if cfg.paths == 0 {
        return Err(invalid("paths", "must be at least 1"));
    }
    let problems = (0..levels).map(&model).collect::<Result<Vec<_>>>()?;
    let solved = (0..levels).map(&solve).collect::<Result<Vec<_>>>()?;
    let coarse = &problems[0];
    coarse.validate()?;
    let bases = (0..cfg.paths)
        .map(|p| {
            sample_path(
                coarse.steps(),
                coarse.dt(),
                coarse.noise.len(),
                member_seed(cfg.seed, p as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let suites: Vec<_> = problems
        .iter()
        .map(|pb| functional_suite(&pb.generator, cfg.n_random_functionals, cfg.seed))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..levels).flat_map(|l| (0..cfg.paths).map(move |p| (l, p))).collect();
    let results = jobs
        .par_iter()
        .map(|&(l, p)| {
            let problem = &problems[l];
            let path = bases[p].refine_by(l as u32);
            let sol = picard_solve(&solved[l], &path, &cfg.picard)?;
            let mut weak = vec![T::zero(); suites[l].len()];
            let mut mild = T::zero();
            let mut strong = Some(T::zero());
            for &f in &cfg.check_fractions {
                let n = (f * T::from_count(problem.steps())).round().to_usize().unwrap_or(0);
                let t = problem.dt() * T::from_count(n);
                let (w, m, s) = all_residuals(problem, &sol.trajectory, &path, &suites[l], t)?;
                for (a, b) in weak.iter_mut().zip(w) {
                    *a = a.max(b);
                }
                mild = mild.max(m);
                strong = match (strong, s) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            Ok((weak, mild, strong, sol.diagnostics.iterations))
        })
        .collect::<Result<Vec<_>>>()?;
    let np = T::from_count(cfg.paths);
    let rms = |v: &mut dyn Iterator<Item = T>| (v.map(|x| x * x).sum::<T>() / np).sqrt();
    let levels_out = (0..levels)
        .map(|l| {
            let rows = &results[l * cfg.paths..(l + 1) * cfg.paths];
            let weak = (0..suites[l].len())
                .map(|k| rms(&mut rows.iter().map(|r| r.0[k])))
                .collect();
            let strong = rows
                .iter()
                .map(|r| r.2)
                .collect::<Option<Vec<T>>>()
                .map(|v| rms(&mut v.into_iter()));
            LevelResiduals {
                level: l,
                dt: problems[l].dt(),
                dxi: problems[l].grid().step(),
                weak,
                mild: rms(&mut rows.iter().map(|r| r.1)),
                strong,
                picard_iterations: rows.iter().map(|r| r.3).max().unwrap_or(0),
            }
        })
        .collect();
    Ok(ResidualReport {
        functional_ids: suites[0].iter().map(|f| f.id.clone()).collect(),
        levels: levels_out,
        tol: cfg.picard.tol,
        drift_free: coarse.drift.is_zero(),
    })
}
