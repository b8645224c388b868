//! Scalar functions of one variable used for loads, initial data and toughness.
//!
//! A [`Profile`] is either a closed-form preset with an analytic derivative or a
//! sampled table interpolated by a piecewise cubic.

use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};

/// Closed-form presets and sampled tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant {
        value: f64,
    },
    Affine {
        offset: f64,
        slope: f64,
    },
    /// `amplitude * sin^2(pi (x - start) / (end - start))` on `[start, end]`, zero elsewhere.
    SineBump {
        amplitude: f64,
        start: f64,
        end: f64,
    },
    /// Coefficients in increasing degree.
    Polynomial {
        coefficients: Vec<f64>,
    },
    Sampled {
        table: PiecewiseCubic,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn affine(offset: f64, slope: f64) -> Self {
        Profile::Affine { offset, slope }
    }

    pub fn sine_bump(amplitude: f64, start: f64, end: f64) -> Self {
        Profile::SineBump {
            amplitude,
            start,
            end,
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Profile::Polynomial { coefficients }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Zero => Ok(()),
            Profile::Constant { value } => finite("constant value", *value),
            Profile::Affine { offset, slope } => {
                finite("offset", *offset)?;
                finite("slope", *slope)
            }
            Profile::SineBump {
                amplitude,
                start,
                end,
            } => {
                finite("amplitude", *amplitude)?;
                if !(start.is_finite() && end.is_finite() && start < end) {
                    return Err(DebondError::InvalidData(format!(
                        "sine bump needs start < end, got [{start}, {end}]"
                    )));
                }
                Ok(())
            }
            Profile::Polynomial { coefficients } => {
                for c in coefficients {
                    finite("polynomial coefficient", *c)?;
                }
                Ok(())
            }
            Profile::Sampled { table } => table.validate(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => *value,
            Profile::Affine { offset, slope } => offset + slope * x,
            Profile::SineBump {
                amplitude,
                start,
                end,
            } => {
                if x <= *start || x >= *end {
                    0.0
                } else {
                    let s = (std::f64::consts::PI * (x - start) / (end - start)).sin();
                    amplitude * s * s
                }
            }
            Profile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Profile::Sampled { table } => table.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Zero | Profile::Constant { .. } => 0.0,
            Profile::Affine { slope, .. } => *slope,
            Profile::SineBump {
                amplitude,
                start,
                end,
            } => {
                if x <= *start || x >= *end {
                    0.0
                } else {
                    let k = std::f64::consts::PI / (end - start);
                    amplitude * k * (2.0 * k * (x - start)).sin()
                }
            }
            Profile::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, c)| acc * x + n as f64 * c),
            Profile::Sampled { table } => table.derivative(x),
        }
    }

    /// Whether `derivative` is exact rather than taken from an interpolant.
    pub fn has_analytic_derivative(&self) -> bool {
        !matches!(self, Profile::Sampled { .. })
    }

    /// Points where the profile stops being smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::SineBump { start, end, .. } => vec![*start, *end],
            Profile::Sampled { table } => table.abscissae().to_vec(),
            _ => Vec::new(),
        }
    }
}

fn finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(DebondError::InvalidData(format!("{what} is not finite")))
    }
}

/// Piecewise cubic Hermite interpolant with exact cell integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl PiecewiseCubic {
    /// Hermite interpolant through values `ys` with slopes `ds`.
    pub fn hermite(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != ds.len() {
            return Err(DebondError::InvalidData(
                "piecewise cubic needs at least two samples with matching lengths".into(),
            ));
        }
        let mut table = PiecewiseCubic {
            xs,
            ys,
            ds,
            cumulative: Vec::new(),
        };
        table.validate()?;
        table.rebuild_cumulative();
        Ok(table)
    }

    /// Monotonicity-preserving cubic (Fritsch–Carlson slopes).
    pub fn monotone(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || n != ys.len() {
            return Err(DebondError::InvalidData(
                "monotone cubic needs at least two samples with matching lengths".into(),
            ));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();
        let mut ds = vec![0.0; n];
        ds[0] = secants[0];
        ds[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let (a, b) = (secants[k - 1], secants[k]);
            if a * b <= 0.0 {
                ds[k] = 0.0;
            } else {
                let (h0, h1) = (xs[k] - xs[k - 1], xs[k + 1] - xs[k]);
                ds[k] = (h1 * a + h0 * b) / (h0 + h1);
            }
        }
        for k in 0..n - 1 {
            let delta = secants[k];
            if delta == 0.0 {
                ds[k] = 0.0;
                ds[k + 1] = 0.0;
                continue;
            }
            let a = ds[k] / delta;
            let b = ds[k + 1] / delta;
            if a < 0.0 {
                ds[k] = 0.0;
            }
            if b < 0.0 {
                ds[k + 1] = 0.0;
            }
            let norm = a * a + b * b;
            if norm > 9.0 {
                let tau = 3.0 / norm.sqrt();
                ds[k] = tau * a * delta;
                ds[k + 1] = tau * b * delta;
            }
        }
        Self::hermite(xs, ys, ds)
    }

    /// Hermite interpolant with three-point finite-difference slopes.
    pub fn with_difference_slopes(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || n != ys.len() {
            return Err(DebondError::InvalidData(
                "cubic table needs at least two samples with matching lengths".into(),
            ));
        }
        let mut ds = vec![0.0; n];
        if n == 2 {
            let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            ds = vec![s, s];
        } else {
            let three = |x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, at: f64| {
                y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
                    + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
                    + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
            };
            for k in 0..n {
                let c = k.clamp(1, n - 2);
                ds[k] = three(xs[c - 1], xs[c], xs[c + 1], ys[c - 1], ys[c], ys[c + 1], xs[k]);
            }
        }
        Self::hermite(xs, ys, ds)
    }

    fn validate(&self) -> Result<()> {
        if self.xs.len() < 2 || self.xs.len() != self.ys.len() || self.xs.len() != self.ds.len() {
            return Err(DebondError::InvalidData("malformed sample table".into()));
        }
        for w in self.xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(DebondError::InvalidData(format!(
                    "sample abscissae must increase strictly ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if self
            .ys
            .iter()
            .chain(self.ds.iter())
            .chain(self.xs.iter())
            .any(|v| !v.is_finite())
        {
            return Err(DebondError::InvalidData("sample table holds a non-finite entry".into()));
        }
        Ok(())
    }

    fn rebuild_cumulative(&mut self) {
        let mut cum = Vec::with_capacity(self.xs.len());
        cum.push(0.0);
        for k in 0..self.xs.len() - 1 {
            let h = self.xs[k + 1] - self.xs[k];
            let cell = h * (0.5 * (self.ys[k] + self.ys[k + 1]) + h * (self.ds[k] - self.ds[k + 1]) / 12.0);
            cum.push(cum[k] + cell);
        }
        self.cumulative = cum;
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.ds
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn cell(&self, x: f64) -> usize {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0;
        }
        if x >= self.xs[n - 1] {
            return n - 2;
        }
        match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(k) => k.min(n - 2),
            Err(k) => k - 1,
        }
    }

    /// Value; linear extrapolation with the end slope outside the table.
    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0] + self.ds[0] * (x - self.xs[0]);
        }
        if x > self.xs[n - 1] {
            return self.ys[n - 1] + self.ds[n - 1] * (x - self.xs[n - 1]);
        }
        let k = self.cell(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        self.ys[k] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + h * self.ds[k] * (s3 - 2.0 * s2 + s)
            + self.ys[k + 1] * (-2.0 * s3 + 3.0 * s2)
            + h * self.ds[k + 1] * (s3 - s2)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ds[0];
        }
        if x > self.xs[n - 1] {
            return self.ds[n - 1];
        }
        let k = self.cell(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        (self.ys[k] * (6.0 * s2 - 6.0 * s) + self.ys[k + 1] * (-6.0 * s2 + 6.0 * s)) / h
            + self.ds[k] * (3.0 * s2 - 4.0 * s + 1.0)
            + self.ds[k + 1] * (3.0 * s2 - 2.0 * s)
    }

    /// Integral of the interpolant from the first abscissa to `x`.
    pub fn integral(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let cum = if self.cumulative.len() == n {
            std::borrow::Cow::Borrowed(&self.cumulative)
        } else {
            let mut t = self.clone();
            t.rebuild_cumulative();
            std::borrow::Cow::Owned(t.cumulative)
        };
        if x <= self.xs[0] {
            let dx = x - self.xs[0];
            return self.ys[0] * dx + 0.5 * self.ds[0] * dx * dx;
        }
        if x >= self.xs[n - 1] {
            let dx = x - self.xs[n - 1];
            return cum[n - 1] + self.ys[n - 1] * dx + 0.5 * self.ds[n - 1] * dx * dx;
        }
        let k = self.cell(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        cum[k]
            + h * (self.ys[k] * (0.5 * s4 - s3 + s)
                + h * self.ds[k] * (0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2)
                + self.ys[k + 1] * (-0.5 * s4 + s3)
                + h * self.ds[k + 1] * (0.25 * s4 - s3 / 3.0))
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Five-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss5(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * GAUSS5.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Composite Gauss rule over `[a, b]` split at the given interior points.
pub fn integrate_split(a: f64, b: f64, breaks: &[f64], cells: usize, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|p| *p > a && *p < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for w in pts.windows(2) {
        let n = cells.max(1);
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let lo = w[0] + k as f64 * h;
            total += gauss5(lo, lo + h, &f);
        }
    }
    total
}
