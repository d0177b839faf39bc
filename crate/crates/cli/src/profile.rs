use serde::{Deserialize, Serialize};
use stochdelay::verify::bump;

/// A scalar profile `x ↦ f(x)` sampled on a spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Constant {
        value: f64,
    },
    /// Smooth bump `height·exp(1 − 1/(1 − r²))`, `r = (x − center)/width`.
    Bump {
        center: f64,
        width: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `amplitude·sin(π(frequency·x + phase))`.
    Sine {
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `slope·x`
    Ramp {
        slope: f64,
    },
    /// `c0 + c1·x + c2·x²`
    Quadratic {
        #[serde(default)]
        c0: f64,
        #[serde(default)]
        c1: f64,
        #[serde(default)]
        c2: f64,
    },
    /// `amplitude·e^{−rate·x}`
    ExpDecay {
        amplitude: f64,
        rate: f64,
    },
    /// `value` on `[from, to)`, zero elsewhere.
    Indicator {
        from: f64,
        to: f64,
        #[serde(default = "one")]
        value: f64,
    },
    /// `mass/h` at the node nearest `at`, zero elsewhere: a discrete Dirac
    /// mass whose `L²` norm blows up as the grid is refined.
    GridSpike {
        at: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    Product {
        factors: Vec<Profile>,
    },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    /// Samples the profile at `nodes` (uniform with spacing `h`).
    pub fn sample(&self, nodes: &[f64], h: f64) -> Vec<f64> {
        match self {
            Self::GridSpike { at, mass } => {
                let k = nodes
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - at).abs().total_cmp(&(b.1 - at).abs()))
                    .map_or(0, |(i, _)| i);
                let mut v = vec![0.0; nodes.len()];
                if let Some(x) = v.get_mut(k) {
                    *x = mass / h;
                }
                v
            }
            Self::Product { factors } => {
                let mut v = vec![1.0; nodes.len()];
                for f in factors {
                    for (a, b) in v.iter_mut().zip(f.sample(nodes, h)) {
                        *a *= b;
                    }
                }
                v
            }
            _ => nodes.iter().map(|&x| self.eval(x)).collect(),
        }
    }

    /// Pointwise value; grid spikes evaluate to zero off the grid.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Zero | Self::GridSpike { .. } => 0.0,
            Self::Constant { value } => value,
            Self::Bump { center, width, height } => height * bump(x, center, width),
            Self::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (std::f64::consts::PI * (frequency * x + phase)).sin(),
            Self::Ramp { slope } => slope * x,
            Self::Quadratic { c0, c1, c2 } => c0 + x * (c1 + x * c2),
            Self::ExpDecay { amplitude, rate } => amplitude * (-rate * x).exp(),
            Self::Indicator { from, to, value } => {
                if (from..to).contains(&x) {
                    value
                } else {
                    0.0
                }
            }
            Self::Product { ref factors } => factors.iter().map(|f| f.eval(x)).product(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant { value } => *value == 0.0,
            Self::Product { factors } => factors.iter().any(Profile::is_zero),
            _ => false,
        }
    }
}

/// A separable kernel `κ(θ, x) = theta(θ)·space(x)` on `[-1, 0] × grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Separable {
    pub theta: Profile,
    pub space: Profile,
}

impl Separable {
    /// Rows `j = 0..=m` at `θ_j = -1 + j/m`.
    pub fn rows(&self, nodes: &[f64], h: f64, m: usize) -> Vec<Vec<f64>> {
        let space = self.space.sample(nodes, h);
        (0..=m)
            .map(|j| {
                let c = self.theta.eval(-1.0 + j as f64 / m as f64);
                space.iter().map(|&v| c * v).collect()
            })
            .collect()
    }
}
