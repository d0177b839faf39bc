use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::semigroup::{check_time, Generator, Semigroup};
use crate::space::{ensure_compatible, GridFunction, LiftedState, SegmentFunction};

/// Left translation `T_l(t)f(θ) = f(θ+t)` for `θ+t ≤ 0`, zero otherwise. At
/// `t = 1` only the node `θ = -1` survives (it carries `f(0)`); for `t > 1`
/// the segment vanishes.
pub fn left_translation_apply<T: Real>(t: T, f: &SegmentFunction<T>) -> Result<SegmentFunction<T>> {
    check_time(t)?;
    let m = f.history_steps();
    let k = crate::scalar::nearest_multiple(t, f.step()).0;
    let n = f.grid().len();
    let rows = (0..=m)
        .map(|j| {
            if j + k <= m {
                f.row(j + k).to_vec()
            } else {
                vec![T::zero(); n]
            }
        })
        .collect();
    Ok(SegmentFunction::from_rows_unchecked(
        f.grid().clone(),
        f.tag(),
        rows,
        f.p(),
    ))
}

/// `𝒮_s x(θ) = S(θ+s)x` for `θ ∈ (-s, 0]`, zero for `θ ≤ -s`.
///
/// The boundary node `θ = -s` takes the zero branch, so `𝒮_s x` is the left
/// limit of the mild solution's segment; `𝒮_0 = 0`.
pub fn s_curl_apply<T: Real, S: Semigroup<T> + ?Sized>(
    sg: &S,
    s: T,
    x: &GridFunction<T>,
    history_steps: usize,
    p: T,
) -> Result<SegmentFunction<T>> {
    check_time(s)?;
    ensure_compatible(sg.grid(), x.grid(), "s_curl argument")?;
    if history_steps == 0 {
        return Err(crate::error::invalid("history_steps", "must be at least 1"));
    }
    let step = T::one() / T::from_count(history_steps);
    let k = crate::scalar::nearest_multiple(s, step).0;
    let orbit = sg.orbit_values(step, k, x.values())?;
    let rows = s_curl_rows(&orbit, k, history_steps, x.len());
    Ok(SegmentFunction::from_rows_unchecked(x.grid().clone(), x.tag(), rows, p))
}

/// Row `j` (at `θ_j = -1 + j/m`) of `𝒮_{kΔ}`, read from the orbit `S(iΔ)x`.
fn s_curl_rows<T: Real>(orbit: &[Vec<T>], k: usize, m: usize, n: usize) -> Vec<Vec<T>> {
    (0..=m)
        .map(|j| {
            // θ_j + s = (j + k - m)Δ
            if j + k > m {
                orbit[j + k - m].clone()
            } else {
                vec![T::zero(); n]
            }
        })
        .collect()
}

/// The delay semigroup `[[S(t), 0], [𝒮_t, T_l(t)]]` on `E × Lᵖ(-1,0;E)`.
#[derive(Debug, Clone)]
pub struct DelaySemigroup<T> {
    inner: Generator<T>,
    history_steps: usize,
    p: T,
}

impl<T: Real> DelaySemigroup<T> {
    pub fn new(inner: Generator<T>, history_steps: usize, p: T) -> Result<Self> {
        if history_steps == 0 {
            return Err(crate::error::invalid("history_steps", "must be at least 1"));
        }
        if !(p >= T::one()) {
            return Err(crate::error::invalid("p", "must be at least 1"));
        }
        Ok(Self {
            inner,
            history_steps,
            p,
        })
    }

    pub fn inner(&self) -> &Generator<T> {
        &self.inner
    }

    pub fn history_steps(&self) -> usize {
        self.history_steps
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn step(&self) -> T {
        T::one() / T::from_count(self.history_steps)
    }

    pub fn apply(&self, t: T, y: &LiftedState<T>) -> Result<LiftedState<T>> {
        check_time(t)?;
        ensure_compatible(self.inner.grid(), y.head.grid(), "lifted head")?;
        if y.tail.history_steps() != self.history_steps {
            return Err(Error::GridMismatch(format!(
                "tail has {} history steps, semigroup expects {}",
                y.tail.history_steps(),
                self.history_steps
            )));
        }
        let m = self.history_steps;
        let k = crate::scalar::nearest_multiple(t, self.step()).0;
        let orbit = self.inner.orbit_values(self.step(), k, y.head.values())?;
        let curl = s_curl_rows(&orbit, k, m, y.head.len());
        let shifted = left_translation_apply(t, &y.tail)?;
        let rows = curl
            .into_iter()
            .zip(shifted.rows())
            .map(|(a, b)| a.iter().zip(b).map(|(&u, &v)| u + v).collect())
            .collect();
        let head = GridFunction::from_parts_unchecked(
            y.head.grid().clone(),
            orbit.into_iter().next_back().expect("orbit is non-empty"),
            y.head.tag(),
        );
        let tail = SegmentFunction::from_rows_unchecked(y.tail.grid().clone(), y.tail.tag(), rows, y.tail.p());
        Ok(LiftedState { head, tail })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::TransportSemigroup;
    use crate::space::{SpaceTag, SpatialGrid};

    fn setup() -> (DelaySemigroup<f64>, LiftedState<f64>) {
        let grid = SpatialGrid::unit_interval(17).unwrap();
        let sg = TransportSemigroup::new(grid.clone(), 0.2).unwrap();
        let dsg = DelaySemigroup::new(Generator::Transport(sg), 16, 2.0).unwrap();
        let head = GridFunction::from_fn(grid.clone(), SpaceTag::C0, |x| x * (1.0 - x)).unwrap();
        let tail = SegmentFunction::from_fn(grid, SpaceTag::C0, 16, 2.0, |th, x| (1.0 + th) * x).unwrap();
        (dsg, LiftedState::new(head, tail).unwrap())
    }

    #[test]
    fn identity_at_zero() {
        let (dsg, y) = setup();
        assert_eq!(dsg.apply(0.0, &y).unwrap(), y);
    }

    #[test]
    fn left_translation_of_constant() {
        let grid = SpatialGrid::unit_interval(5).unwrap();
        let f = SegmentFunction::from_fn(grid, SpaceTag::L1, 8, 2.0, |_, _| 3.0).unwrap();
        let g = left_translation_apply(0.5, &f).unwrap();
        for j in 0..=8 {
            let expect = if j <= 4 { 3.0 } else { 0.0 };
            assert!(g.row(j).iter().all(|&v| v == expect), "row {j}");
        }
        let z = left_translation_apply(1.0, &f).unwrap();
        assert!(z.row(0).iter().all(|&v| v == 3.0));
        assert!(z.rows()[1..].iter().flatten().all(|&v| v == 0.0));
        let z = left_translation_apply(1.5, &f).unwrap();
        assert!(z.rows().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn s_curl_matches_transport() {
        let (dsg, y) = setup();
        let seg = s_curl_apply(dsg.inner(), 0.5, &y.head, 16, 2.0).unwrap();
        // θ = -0.25 is row 12
        let direct = dsg.inner().apply(0.25, &y.head).unwrap();
        assert_eq!(seg.row(12), direct.values());
        assert!(seg.row(8).iter().all(|&v| v == 0.0));
        let zero = s_curl_apply(dsg.inner(), 0.0, &y.head, 16, 2.0).unwrap();
        assert!(zero.rows().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn delay_semigroup_law_on_aligned_times() {
        let (dsg, y) = setup();
        let a = dsg.apply(0.75, &y).unwrap();
        let b = dsg.apply(0.25, &dsg.apply(0.5, &y).unwrap()).unwrap();
        for (ra, rb) in a.tail.rows().iter().zip(b.tail.rows()) {
            for (u, v) in ra.iter().zip(rb) {
                assert!((u - v).abs() < 1e-14);
            }
        }
        for (u, v) in a.head.values().iter().zip(b.head.values()) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}
