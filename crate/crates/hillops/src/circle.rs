//! Uniform-grid calculus on the circle S¹ = ℝ/ℤ: periodic r-densities with
//! spectral differentiation, quadrature (periodic and arc), trigonometric
//! interpolation/resampling, monotone grid functions and their inversion, and
//! the finite-difference weight generator used for quasi-periodic data.

use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

pub const TAU: f64 = std::f64::consts::TAU;

fn is_valid_grid(n: usize) -> bool {
    n >= 16 && n.is_power_of_two()
}

fn fft(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(samples.len())
        .process(&mut buf);
    buf
}

fn ifft_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re / n as f64).collect()
}

/// Signed frequency of DFT bin k for length n (Nyquist bin maps to +n/2).
fn signed_freq(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Spectral m-th derivative of a periodic sample array.
pub fn spectral_derivative(samples: &[f64], m: u32) -> Vec<f64> {
    let n = samples.len();
    let mut coeffs = fft(samples);
    for (k, c) in coeffs.iter_mut().enumerate() {
        if m % 2 == 1 && 2 * k == n {
            // odd derivative of the Nyquist mode is identically zero
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let w = Complex64::new(0.0, TAU * signed_freq(k, n) as f64);
        *c *= w.powu(m);
    }
    ifft_real(coeffs)
}

/// Trigonometric interpolant of a periodic sample array, evaluable anywhere.
pub struct TrigInterp {
    n: usize,
    /// a0, then (re, im) of c_k for k = 1..n/2-1, then Nyquist coefficient.
    mean: f64,
    re: Vec<f64>,
    im: Vec<f64>,
    nyquist: f64,
}

impl TrigInterp {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let coeffs = fft(samples);
        let mean = coeffs[0].re / n as f64;
        let mut re = Vec::with_capacity(n / 2 - 1);
        let mut im = Vec::with_capacity(n / 2 - 1);
        for k in 1..n / 2 {
            re.push(2.0 * coeffs[k].re / n as f64);
            im.push(2.0 * coeffs[k].im / n as f64);
        }
        let nyquist = coeffs[n / 2].re / n as f64;
        TrigInterp { n, mean, re, im, nyquist }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.mean;
        // recurrence for cos/sin(2πkx)
        let (s1, c1) = (TAU * x).sin_cos();
        let (mut s, mut c) = (s1, c1);
        for k in 1..self.n / 2 {
            acc += self.re[k - 1] * c - self.im[k - 1] * s;
            let (cn, sn) = (c * c1 - s * s1, s * c1 + c * s1);
            c = cn;
            s = sn;
        }
        acc += self.nyquist * (TAU * (self.n / 2) as f64 * x).cos();
        acc
    }
}

/// Resample a periodic array to a finer power-of-two grid by zero padding.
pub fn resample(samples: &[f64], m: usize) -> Vec<f64> {
    let n = samples.len();
    assert!(m >= n && m.is_power_of_two());
    if m == n {
        return samples.to_vec();
    }
    let coeffs = fft(samples);
    let scale = m as f64 / n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        let f = signed_freq(k, n);
        let idx = if f >= 0 { f as usize } else { (m as i64 + f) as usize };
        if 2 * k == n {
            // split the Nyquist mode symmetrically
            out[k] += coeffs[k] * (0.5 * scale);
            out[m - k] += coeffs[k] * (0.5 * scale);
        } else {
            out[idx] = coeffs[k] * scale;
        }
    }
    ifft_real(out)
}

// Endpoint-corrected trapezoid (Gregory) weights, derived exactly from the
// Euler-Maclaurin series; q rows for rules using q correction nodes per end.
const GREGORY: [&[f64]; 8] = [
    &[0.0],
    &[-1.0 / 12.0, 1.0 / 12.0],
    &[-1.0 / 8.0, 1.0 / 6.0, -1.0 / 24.0],
    &[-109.0 / 720.0, 59.0 / 240.0, -29.0 / 240.0, 19.0 / 720.0],
    &[-49.0 / 288.0, 77.0 / 240.0, -7.0 / 30.0, 73.0 / 720.0, -3.0 / 160.0],
    &[
        -11153.0 / 60480.0,
        23719.0 / 60480.0,
        -11371.0 / 30240.0,
        7381.0 / 30240.0,
        -5449.0 / 60480.0,
        863.0 / 60480.0,
    ],
    &[
        -3383.0 / 17280.0,
        6961.0 / 15120.0,
        -66109.0 / 120960.0,
        33.0 / 70.0,
        -31523.0 / 120960.0,
        1247.0 / 15120.0,
        -275.0 / 24192.0,
    ],
    &[
        -744383.0 / 3628800.0,
        1908311.0 / 3628800.0,
        -299587.0 / 403200.0,
        115963.0 / 145152.0,
        -426809.0 / 725760.0,
        112477.0 / 403200.0,
        -278921.0 / 3628800.0,
        33953.0 / 3628800.0,
    ],
];

/// High-order quadrature of a smooth (not necessarily periodic) function
/// sampled at uniform spacing `h`, endpoints included.
pub fn gregory_integrate(values: &[f64], h: f64) -> f64 {
    let m = values.len();
    assert!(m >= 2);
    let q = (m / 2).min(8);
    let d = GREGORY[q - 1];
    let mut acc: f64 = values.iter().sum::<f64>() - 0.5 * (values[0] + values[m - 1]);
    for i in 0..q {
        acc += d[i] * (values[i] + values[m - 1 - i]);
    }
    h * acc
}

/// Fornberg finite-difference weights: for nodes `x` and evaluation point `z`,
/// returns weights such that f^(m)(z) ≈ Σ w_i f(x_i).
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m);
    let mut c = vec![vec![0.0f64; m + 1]; n];
    let mut c1 = 1.0f64;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0f64;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// A periodic r-density on the circle, stored as N uniform samples of its
/// coefficient function under the trivialization by |∂x|^r.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledDensity {
    pub weight: f64,
    pub grid_size: usize,
    pub samples: Vec<f64>,
}

impl SampledDensity {
    pub fn new(weight: f64, samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if !is_valid_grid(n) {
            return Err(Error::BadGridSize(n));
        }
        Ok(SampledDensity { weight, grid_size: n, samples })
    }

    pub fn from_fn(weight: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(weight, (0..n).map(|k| f(k as f64 / n as f64)).collect())
    }

    pub fn constant(weight: f64, c: f64, n: usize) -> Result<Self> {
        Self::new(weight, vec![c; n])
    }

    /// Sample a finite Fourier series: cos[k] ↦ cos(2πkx) (k from 0),
    /// sin[k] ↦ sin(2π(k+1)x).
    pub fn from_fourier(weight: f64, cos: &[f64], sin: &[f64], n: usize) -> Result<Self> {
        Self::from_fn(weight, n, |x| {
            let mut acc = 0.0;
            for (k, c) in cos.iter().enumerate() {
                acc += c * (TAU * k as f64 * x).cos();
            }
            for (k, s) in sin.iter().enumerate() {
                acc += s * (TAU * (k + 1) as f64 * x).sin();
            }
            acc
        })
    }

    pub fn interp(&self) -> TrigInterp {
        TrigInterp::new(&self.samples)
    }

    /// Spectral derivative of the coefficient function; weight goes up by 1.
    pub fn differentiate(&self) -> SampledDensity {
        SampledDensity {
            weight: self.weight + 1.0,
            grid_size: self.grid_size,
            samples: spectral_derivative(&self.samples, 1),
        }
    }

    pub fn integrate_period(&self) -> Result<f64> {
        if self.weight != 1.0 {
            return Err(Error::WeightMismatch { expected: 1.0, got: self.weight });
        }
        Ok(self.samples.iter().sum::<f64>() / self.grid_size as f64)
    }

    /// Quadrature over the oriented arc from grid index x0 to x1 (universal
    /// cover indices; x1 may exceed N, meaning wrap with unit shift).
    pub fn integrate_arc(&self, x0: i64, x1: i64) -> f64 {
        let n = self.grid_size as i64;
        if x0 == x1 {
            return 0.0;
        }
        let (a, b, sign) = if x1 > x0 { (x0, x1, 1.0) } else { (x1, x0, -1.0) };
        // whole periods integrate exactly by the periodic Riemann sum; the
        // remainder arc (shorter than one period) uses the Gregory rule
        let periods = (b - a) / n;
        let mean = self.samples.iter().sum::<f64>() / n as f64;
        let b_rem = b - periods * n;
        let mut acc = periods as f64 * mean;
        if b_rem > a {
            let vals: Vec<f64> =
                (a..=b_rem).map(|k| self.samples[(k.rem_euclid(n)) as usize]).collect();
            acc += gregory_integrate(&vals, 1.0 / n as f64);
        }
        sign * acc
    }

    pub fn resample_to(&self, m: usize) -> Result<SampledDensity> {
        if !is_valid_grid(m) || m < self.grid_size {
            return Err(Error::BadGridSize(m));
        }
        Ok(SampledDensity {
            weight: self.weight,
            grid_size: m,
            samples: resample(&self.samples, m),
        })
    }

    fn align(a: &SampledDensity, b: &SampledDensity) -> (SampledDensity, SampledDensity) {
        let m = a.grid_size.max(b.grid_size);
        (a.resample_to(m).unwrap(), b.resample_to(m).unwrap())
    }

    /// Pointwise product; weights add.
    pub fn multiply(&self, other: &SampledDensity) -> SampledDensity {
        let (a, b) = Self::align(self, other);
        SampledDensity {
            weight: a.weight + b.weight,
            grid_size: a.grid_size,
            samples: a.samples.iter().zip(&b.samples).map(|(x, y)| x * y).collect(),
        }
    }

    /// Pointwise sum; requires equal weights.
    pub fn add(&self, other: &SampledDensity) -> Result<SampledDensity> {
        if self.weight != other.weight {
            return Err(Error::WeightMismatch { expected: self.weight, got: other.weight });
        }
        let (a, b) = Self::align(self, other);
        Ok(SampledDensity {
            weight: a.weight,
            grid_size: a.grid_size,
            samples: a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> SampledDensity {
        SampledDensity {
            weight: self.weight,
            grid_size: self.grid_size,
            samples: self.samples.iter().map(|x| c * x).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Load a density from JSON: either explicit samples
/// {"weight": r, "grid_size": N, "samples": [...]} or a finite Fourier series
/// {"weight": r, "fourier": {"cos": [...], "sin": [...]}}.
pub fn density_from_json(v: &serde_json::Value, default_n: usize) -> Result<SampledDensity> {
    let weight = v
        .get("weight")
        .and_then(|w| w.as_f64())
        .ok_or_else(|| Error::InvalidInput("density JSON missing numeric \"weight\"".into()))?;
    if let Some(f) = v.get("fourier") {
        let read = |key: &str| -> Vec<f64> {
            f.get(key)
                .and_then(|a| a.as_array())
                .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
                .unwrap_or_default()
        };
        let n = v
            .get("grid_size")
            .and_then(|x| x.as_u64())
            .map(|x| x as usize)
            .unwrap_or(default_n);
        SampledDensity::from_fourier(weight, &read("cos"), &read("sin"), n)
    } else if let Some(s) = v.get("samples") {
        let samples: Vec<f64> = s
            .as_array()
            .ok_or_else(|| Error::InvalidInput("\"samples\" must be an array".into()))?
            .iter()
            .filter_map(|x| x.as_f64())
            .collect();
        SampledDensity::new(weight, samples)
    } else {
        Err(Error::InvalidInput("density JSON needs \"samples\" or \"fourier\"".into()))
    }
}

/// Strictly increasing function g on [0,1] (N+1 samples, both endpoints) with
/// a constant seam increment g(x+1) − g(x). Hosts Diff_ℤ lifts (seam 1) and
/// monotone constructions like φ + π inverses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneGridFunction {
    pub grid_size: usize,
    pub seam: f64,
    /// N+1 samples at k/N, k = 0..N.
    pub samples: Vec<f64>,
}

impl MonotoneGridFunction {
    pub fn new(seam: f64, samples: Vec<f64>) -> Result<Self> {
        let n = samples.len().saturating_sub(1);
        if !is_valid_grid(n) {
            return Err(Error::BadGridSize(n));
        }
        let min_diff = samples
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if min_diff <= 0.0 {
            return Err(Error::NotMonotone { min_diff });
        }
        let g = MonotoneGridFunction { grid_size: n, seam, samples };
        let err = (g.samples[n] - g.samples[0] - seam).abs();
        if err > 1e-8 * seam.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "seam increment mismatch: declared {seam}, sampled {}",
                g.samples[n] - g.samples[0]
            )));
        }
        Ok(g)
    }

    pub fn from_fn(seam: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(seam, (0..=n).map(|k| f(k as f64 / n as f64)).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(1.0, n, |x| x).unwrap()
    }

    /// Periodic part p(x) = g(x) − seam·x, as N samples.
    pub fn periodic_part(&self) -> Vec<f64> {
        let n = self.grid_size;
        (0..n)
            .map(|k| self.samples[k] - self.seam * k as f64 / n as f64)
            .collect()
    }

    /// Spectral m-th derivative samples (N values at k/N).
    pub fn deriv_samples(&self, m: u32) -> Vec<f64> {
        let mut d = spectral_derivative(&self.periodic_part(), m);
        if m == 1 {
            for x in d.iter_mut() {
                *x += self.seam;
            }
        }
        d
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let shift = x.floor();
        let frac = x - shift;
        let p = TrigInterp::new(&self.periodic_part());
        p.eval(frac) + self.seam * (frac + shift)
    }

    /// Evaluate many points sharing one interpolant build.
    pub fn evaluate_many(&self, xs: &[f64]) -> Vec<f64> {
        let p = TrigInterp::new(&self.periodic_part());
        xs.iter()
            .map(|&x| {
                let shift = x.floor();
                let frac = x - shift;
                p.eval(frac) + self.seam * (frac + shift)
            })
            .collect()
    }

    /// Solve g(x) = y to ~1e−12 by bracketing + bisection/Newton polish,
    /// using seam equivariance to reduce y to the fundamental window.
    pub fn invert(&self, y: f64) -> f64 {
        let p = TrigInterp::new(&self.periodic_part());
        let eval = |x: f64| {
            let shift = x.floor();
            p.eval(x - shift) + self.seam * x
        };
        // reduce into [g(0), g(0)+seam)
        let k = ((y - self.samples[0]) / self.seam).floor();
        let y0 = y - k * self.seam;
        let n = self.grid_size;
        // bracket on the sample grid
        let mut lo = 0.0;
        let mut hi = 1.0;
        for i in 0..n {
            if self.samples[i] <= y0 && y0 <= self.samples[i + 1] {
                lo = i as f64 / n as f64;
                hi = (i + 1) as f64 / n as f64;
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = eval(x) - y0;
            if f.abs() < 1e-14 {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            // Newton step with bisection fallback
            let h = 1e-6;
            let df = (eval(x + h) - eval(x - h)) / (2.0 * h);
            let mut xn = x - f / df;
            if !(lo..=hi).contains(&xn) {
                xn = 0.5 * (lo + hi);
            }
            if (xn - x).abs() < 1e-15 {
                x = xn;
                break;
            }
            x = xn;
        }
        x + k
    }

    /// Composition self ∘ other; other must have integer seam.
    pub fn compose(&self, other: &MonotoneGridFunction) -> Result<MonotoneGridFunction> {
        let m = other.seam.round();
        if (other.seam - m).abs() > 1e-10 {
            return Err(Error::InvalidInput(
                "compose requires the inner function to have integer seam".into(),
            ));
        }
        let n = self.grid_size.max(other.grid_size);
        let inner = other.evaluate_many(&(0..=n).map(|k| k as f64 / n as f64).collect::<Vec<_>>());
        let outer = self.evaluate_many(&inner);
        MonotoneGridFunction::new(m * self.seam, outer)
    }

    /// Inverse as a grid function; requires seam 1 (Diff_ℤ elements).
    pub fn inverse(&self) -> Result<MonotoneGridFunction> {
        if (self.seam - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput("inverse requires seam 1".into()));
        }
        let n = self.grid_size;
        let samples: Vec<f64> = (0..=n).map(|k| self.invert(k as f64 / n as f64)).collect();
        MonotoneGridFunction::new(1.0, samples)
    }
}
