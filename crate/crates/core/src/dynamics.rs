//! Separated-set entropy estimates for `z -> z^k` on the circle and for the
//! odometer on `Z/p^L`.

use std::f64::consts::TAU;

use serde_json::json;

use crate::error::{QpError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CircleMapSpec {
    pub k: i64,
    pub grid_size: u64,
    pub n_max: u32,
    /// Separation threshold in arc length.
    pub epsilon: f64,
}

impl CircleMapSpec {
    pub const DEFAULT_GRID: u64 = 1 << 16;
    pub const DEFAULT_N_MAX: u32 = 10;
    pub const DEFAULT_EPSILON: f64 = TAU / 32.0;

    pub fn new(k: i64) -> Self {
        CircleMapSpec {
            k,
            grid_size: Self::DEFAULT_GRID,
            n_max: Self::DEFAULT_N_MAX,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(QpError::ZeroWinding);
        }
        if self.n_max < 4 {
            return Err(QpError::Range(format!("n_max = {} must be at least 4", self.n_max)));
        }
        if self.grid_size < 2 || (self.grid_size as f64) < TAU / self.epsilon {
            return Err(QpError::GridTooCoarse {
                grid_size: self.grid_size,
                epsilon: self.epsilon,
            });
        }
        Ok(())
    }

    fn step(&self) -> u64 {
        (self.k as i128).rem_euclid(self.grid_size as i128) as u64
    }
}

/// Circle distance between grid offsets, in grid units.
fn circ(delta: u64, g: u64) -> u64 {
    delta.min(g - delta)
}

/// Greedy separated set on `Z/g` for a translation-invariant Bowen metric:
/// `close[delta]` tells whether offset `delta` is within epsilon.
fn greedy_count(close: &[bool]) -> u64 {
    let g = close.len();
    let offsets: Vec<usize> = (0..g).filter(|&d| close[d]).collect();
    let mut blocked = vec![false; g];
    let mut count = 0;
    for a in 0..g {
        if blocked[a] {
            continue;
        }
        count += 1;
        for &d in &offsets {
            let b = a + d;
            blocked[if b >= g { b - g } else { b }] = true;
        }
    }
    count
}

/// Size of a greedy maximal `(n, epsilon)`-separated set of grid points,
/// scanning from angle 0.
pub fn separated_count(spec: &CircleMapSpec, n: u32) -> Result<u64> {
    spec.validate()?;
    if n == 0 || n > spec.n_max {
        return Err(QpError::Range(format!("n = {n} must lie in [1, {}]", spec.n_max)));
    }
    let g = spec.grid_size;
    let k = spec.step();
    let unit = TAU / g as f64;
    // T_k is multiplication by k on the grid, so d_n(a, b) depends on a - b only
    let close: Vec<bool> = (0..g)
        .map(|delta| {
            let mut x = delta;
            for _ in 0..n {
                if circ(x, g) as f64 * unit > spec.epsilon {
                    return false;
                }
                x = ((x as u128 * k as u128) % g as u128) as u64;
            }
            true
        })
        .collect();
    Ok(greedy_count(&close))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyRun {
    pub k: i64,
    pub counts: Vec<(u32, u64)>,
    pub used: Vec<u32>,
    pub estimate: f64,
}

impl EntropyRun {
    pub fn target(&self) -> f64 {
        (self.k.unsigned_abs() as f64).ln()
    }

    /// Within 10% of `log|k|`, or at most 0.05 when `|k| = 1`.
    pub fn within_tolerance(&self) -> bool {
        let t = self.target();
        if self.k.unsigned_abs() == 1 {
            self.estimate <= 0.05 && self.estimate >= -0.05
        } else {
            (self.estimate - t).abs() <= 0.1 * t
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count,log_count\n");
        for (n, c) in &self.counts {
            out.push_str(&format!("{n},{c},{:.12}\n", (*c as f64).ln()));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "k": self.k,
            "estimate": self.estimate,
            "target": "log|k|",
            "target_value": self.target(),
            "within_tolerance": self.within_tolerance(),
        })
    }
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn fit(counts: &[(u32, u64)], saturation: u64) -> Result<(Vec<u32>, f64)> {
    let usable: Vec<(u32, u64)> = counts
        .iter()
        .copied()
        .filter(|&(n, c)| n >= 2 && c < saturation)
        .collect();
    if usable.len() < 3 {
        return Err(QpError::InsufficientData { usable: usable.len() });
    }
    let xs: Vec<f64> = usable.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, c)| (c as f64).ln()).collect();
    Ok((usable.iter().map(|&(n, _)| n).collect(), slope(&xs, &ys)))
}

/// Slope of `log separated_count` against `n` over the unsaturated range.
pub fn entropy_run(spec: &CircleMapSpec) -> Result<EntropyRun> {
    spec.validate()?;
    let counts = (1..=spec.n_max)
        .map(|n| separated_count(spec, n).map(|c| (n, c)))
        .collect::<Result<Vec<_>>>()?;
    let (used, estimate) = fit(&counts, spec.grid_size / 10)?;
    Ok(EntropyRun {
        k: spec.k,
        counts,
        used,
        estimate,
    })
}

pub fn entropy_estimate(spec: &CircleMapSpec) -> Result<f64> {
    entropy_run(spec).map(|r| r.estimate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OdometerSpec {
    pub p: u32,
    pub level: u32,
    pub step: i64,
}

impl OdometerSpec {
    pub fn new(p: u32, level: u32, step: i64) -> Result<Self> {
        if p < 2 {
            return Err(QpError::InvalidParameter(p.into()));
        }
        if level == 0 {
            return Err(QpError::Range("level must be at least 1".into()));
        }
        u64::from(p)
            .checked_pow(level)
            .filter(|&m| m <= 1 << 32)
            .ok_or_else(|| QpError::Range(format!("{p}^{level} is too large to enumerate")))?;
        Ok(OdometerSpec { p, level, step })
    }

    pub fn modulus(&self) -> u64 {
        u64::from(self.p).pow(self.level)
    }

    fn apply(&self, x: u64) -> u64 {
        let m = self.modulus() as i128;
        (x as i128 + self.step as i128).rem_euclid(m) as u64
    }

    /// `p^-v(x - y)` on `Z/p^L`, with `v(0) = L` giving distance 0.
    fn distance(&self, x: u64, y: u64) -> f64 {
        let m = self.modulus();
        let mut delta = (x + m - y) % m;
        if delta == 0 {
            return 0.0;
        }
        let mut v = 0;
        while delta.is_multiple_of(u64::from(self.p)) {
            delta /= u64::from(self.p);
            v += 1;
        }
        f64::from(self.p).powi(-v)
    }
}

/// Size of the forward orbit of `start` under `x -> x + k`.
pub fn odometer_orbit(spec: &OdometerSpec, start: i64) -> u64 {
    let m = spec.modulus();
    let s = start.rem_euclid(m as i64) as u64;
    let mut x = spec.apply(s);
    let mut size = 1;
    while x != s {
        x = spec.apply(x);
        size += 1;
    }
    size
}

/// Separated-set entropy of the odometer `x -> x + 1` on `Z/p^level` with
/// `epsilon = p^-ceil(level/2)`, fitted over `n = 1..=n_max`.
pub fn odometer_entropy_run(p: u32, level: u32, n_max: u32) -> Result<EntropyRun> {
    let spec = OdometerSpec::new(p, level, 1)?;
    let m = spec.modulus();
    let epsilon = f64::from(p).powi(-(level.div_ceil(2) as i32));
    let mut counts = Vec::new();
    for n in 1..=n_max {
        // the map is a translation, so closeness depends on the offset only
        let close: Vec<bool> = (0..m)
            .map(|delta| {
                let (mut x, mut y) = (delta, 0);
                for _ in 0..n {
                    if spec.distance(x, y) > epsilon {
                        return false;
                    }
                    x = spec.apply(x);
                    y = spec.apply(y);
                }
                true
            })
            .collect();
        counts.push((n, greedy_count(&close)));
    }
    let (used, estimate) = fit(&counts, u64::MAX)?;
    Ok(EntropyRun {
        k: 1,
        counts,
        used,
        estimate,
    })
}

pub fn odometer_entropy_estimate(p: u32, level: u32) -> Result<f64> {
    odometer_entropy_run(p, level, CircleMapSpec::DEFAULT_N_MAX).map(|r| r.estimate)
}
