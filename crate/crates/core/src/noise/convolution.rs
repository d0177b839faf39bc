use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::scalar::{exact_multiple, Real};
use crate::semigroup::Semigroup;
use crate::space::{ensure_compatible, GridFunction};

fn check_columns<T: Real, S: Semigroup<T> + ?Sized>(
    sg: &S,
    psi: &[GridFunction<T>],
    path: &NoisePath<T>,
) -> Result<()> {
    if psi.len() != path.dim() {
        return Err(Error::GridMismatch(format!(
            "{} noise columns for a {}-dimensional Wiener path",
            psi.len(),
            path.dim()
        )));
    }
    for col in psi {
        ensure_compatible(sg.grid(), col.grid(), "noise column")?;
    }
    Ok(())
}

/// Itô left-point sum `Σ_{t_i < t} S(t − t_i) ψ ΔW_i`.
pub fn stochastic_convolution<T: Real, S: Semigroup<T> + ?Sized>(
    sg: &S,
    psi: &[GridFunction<T>],
    path: &NoisePath<T>,
    t: T,
) -> Result<GridFunction<T>> {
    check_columns(sg, psi, path)?;
    let n = exact_multiple(t, path.dt())
        .filter(|&n| n <= path.n_steps())
        .ok_or(Error::OffGrid {
            t: t.as_f64(),
            step: path.dt().as_f64(),
        })?;
    let grid = sg.grid().clone();
    let mut out = vec![T::zero(); grid.len()];
    for (c, col) in psi.iter().enumerate() {
        let orbit = sg.orbit_values(path.dt(), n, col.values())?;
        for i in 0..n {
            let dw = path.increment(i)[c];
            for (o, &v) in out.iter_mut().zip(&orbit[n - i]) {
                *o += dw * v;
            }
        }
    }
    Ok(GridFunction::from_parts_unchecked(grid, out, sg.tag()))
}

/// The stochastic convolution at every node `t_0..=t_N` of the path, from
/// precomputed orbits `orbits[c][k] = S(k·dt) ψ_c`.
pub(crate) fn convolution_series<T: Real>(orbits: &[Vec<Vec<T>>], path: &NoisePath<T>) -> Vec<Vec<T>> {
    let steps = path.n_steps();
    let len = orbits.first().map_or(0, |o| o[0].len());
    (0..=steps)
        .map(|n| {
            let mut out = vec![T::zero(); len];
            for (c, orbit) in orbits.iter().enumerate() {
                for i in 0..n {
                    let dw = path.increment(i)[c];
                    if dw == T::zero() {
                        continue;
                    }
                    for (o, &v) in out.iter_mut().zip(&orbit[n - i]) {
                        *o += dw * v;
                    }
                }
            }
            out
        })
        .collect()
}
