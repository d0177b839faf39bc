use crate::error::{invalid, Error, Result};
use crate::noise::NoisePath;
use crate::scalar::Real;
use crate::semigroup::DelaySemigroup;
use crate::solver::picard::{bielecki_weight, check_path, PicardConfig, PicardDiagnostics, Solution};
use crate::solver::problem::DelayProblem;
use crate::space::{norm_ep, GridFunction, LiftedState, Trajectory};

/// `Y(t_n) + [v, 0]`.
fn kick<T: Real>(y: &LiftedState<T>, v: &[T]) -> LiftedState<T> {
    let head: Vec<T> = y.head.values().iter().zip(v).map(|(&a, &b)| a + b).collect();
    LiftedState {
        head: GridFunction::from_parts_unchecked(y.head.grid().clone(), head, y.head.tag()),
        tail: y.tail.clone(),
    }
}

fn lifted_difference<T: Real>(a: &LiftedState<T>, b: &LiftedState<T>, p: T) -> Result<T> {
    let head = a.head.sub(&b.head)?;
    let rows: Vec<Vec<T>> = a
        .tail
        .rows()
        .iter()
        .zip(b.tail.rows())
        .map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| u - v).collect())
        .collect();
    let tail = crate::space::SegmentFunction::new(a.tail.grid().clone(), a.tail.tag(), rows, p)?;
    norm_ep(&LiftedState::new(head, tail)?, p)
}

/// The Markovian lift `Y = [X, X_t]` on `E × Lᵖ(-1,0;E)` solved by Picard
/// iteration with the delay semigroup: each sweep runs
/// `Y(t_{n+1}) = T(Δt)(Y(t_n) + [Δt·φ(Z(t_n)) + ψΔW_n, 0])` with `φ` read from
/// the previous sweep's lifted states. The returned trajectory's states are `π₁Y`.
pub fn markov_lift_solve<T: Real>(
    problem: &DelayProblem<T>,
    path: &NoisePath<T>,
    cfg: &PicardConfig<T>,
) -> Result<Solution<T>> {
    problem.validate()?;
    check_path(problem, path)?;
    if !(cfg.tol > T::zero()) || cfg.max_iter == 0 {
        return Err(invalid("picard", "tol must be positive and max_iter at least 1"));
    }
    let (beta, lipschitz, contraction_bound) = bielecki_weight(problem, cfg);
    let dt = problem.dt();
    let steps = problem.steps();
    let m = problem.history_steps();
    let n = problem.grid().len();
    let p = problem.p;
    let dsg = DelaySemigroup::new(problem.generator.clone(), m, p)?;
    let y0 = LiftedState::new(problem.x0.clone(), problem.f0.clone())?;

    let noise: Vec<Vec<T>> = (0..steps)
        .map(|i| {
            let mut v = vec![T::zero(); n];
            for (col, &dw) in problem.noise.iter().zip(path.increment(i)) {
                for (o, &c) in v.iter_mut().zip(col.values()) {
                    *o += dw * c;
                }
            }
            v
        })
        .collect();
    // `f₂` of the tail rows is carried along the sweep: one step of the delay
    // semigroup moves row j+1 to row j and adds a new row m.
    let drift_of = |y: &LiftedState<T>, f2_tail: &[Vec<T>]| -> Vec<T> {
        problem
            .drift
            .eval_mapped(y.head.values(), m, &|j| y.tail.row(j), Some(&|j| &f2_tail[j]))
            .into_iter()
            .map(|v| v * dt)
            .collect()
    };
    let advance = |f2_tail: &mut Vec<Vec<T>>, next: &LiftedState<T>| {
        f2_tail.remove(0);
        f2_tail.push(problem.drift.map_f2(&[next.tail.row(m).to_vec()]).remove(0));
    };

    // Free sweep: Z₀ = T(·)Y₀.
    let drift_free = problem.drift.is_zero();
    let mut lifted = Vec::with_capacity(steps + 1);
    let mut kicks = Vec::with_capacity(steps);
    let mut f2_tail = problem.drift.map_f2(y0.tail.rows());
    lifted.push(y0.clone());
    for i in 0..steps {
        let mut v = noise[i].clone();
        if !drift_free {
            for (o, d) in v.iter_mut().zip(drift_of(&lifted[i], &f2_tail)) {
                *o += d;
            }
        }
        kicks.push(v);
        let next = dsg.apply(dt, &lifted[i])?;
        advance(&mut f2_tail, &next);
        lifted.push(next);
    }

    let mut diagnostics = PicardDiagnostics {
        iterations: 0,
        distances: Vec::new(),
        ratios: Vec::new(),
        beta,
        lipschitz,
        contraction_bound,
    };
    let mut prev_weighted: Option<T> = None;
    let mut growing = 0;
    loop {
        if diagnostics.iterations >= cfg.max_iter {
            return Err(Error::NotConverged {
                what: "lifted Picard iteration",
                iterations: diagnostics.iterations,
                distance: diagnostics.distances.last().map_or(f64::NAN, |d| d.as_f64()),
            });
        }
        diagnostics.iterations += 1;
        let mut current = y0.clone();
        let mut f2_tail = problem.drift.map_f2(y0.tail.rows());
        let mut dist = T::zero();
        let mut weighted = T::zero();
        let mut new_kicks = Vec::with_capacity(steps);
        for i in 0..steps {
            let next = dsg.apply(dt, &kick(&current, &kicks[i]))?;
            let d = lifted_difference(&next, &lifted[i + 1], p)?;
            dist = dist.max(next.head.sub(&lifted[i + 1].head)?.norm());
            weighted = weighted.max((-beta * dt * T::from_count(i + 1)).exp() * d);
            let mut v = noise[i].clone();
            if !drift_free {
                for (o, dv) in v.iter_mut().zip(drift_of(&current, &f2_tail)) {
                    *o += dv;
                }
            }
            new_kicks.push(v);
            advance(&mut f2_tail, &next);
            lifted[i] = current;
            current = next;
        }
        lifted[steps] = current;
        diagnostics.distances.push(dist);
        if let Some(prev) = prev_weighted {
            if prev > T::zero() && weighted > T::zero() {
                let r = weighted / prev;
                diagnostics.ratios.push(r);
                growing = if r >= T::one() { growing + 1 } else { 0 };
                if growing >= 3 {
                    return Err(Error::NonContraction {
                        ratios: diagnostics.ratios.iter().map(|r| r.as_f64()).collect(),
                    });
                }
            }
        }
        prev_weighted = Some(weighted);
        // a sweep driven by unchanged kicks reproduces itself
        let unchanged = new_kicks == kicks;
        kicks = new_kicks;
        if dist < cfg.tol || unchanged {
            break;
        }
    }
    let states = lifted.iter().map(|y| y.head.clone()).collect();
    let trajectory = Trajectory::new(dt, states, problem.f0.clone())?.with_lifted(lifted)?;
    Ok(Solution {
        trajectory,
        diagnostics,
    })
}
