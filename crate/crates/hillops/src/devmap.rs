//! Developing maps γ = (sin φ : cos φ) into RP¹ with lifted monodromy
//! φ(x+1) = h̃·φ(x): constructors from group paths, the projections p (Hill
//! potential) and q (lifted monodromy), the commuting projective and
//! reparametrization actions, stabilizers, and the coadjoint-orbit
//! classification pipeline for Hill potentials.

use crate::circle::{fd_weights, spectral_derivative, MonotoneGridFunction, SampledDensity};
use crate::hill::{solve_hill, HillPotential};
use crate::sl2::{
    classify, compose, exp_sl2, in_positive_subset, invert, lifted_action, sl2_cover_matrix,
    translation_number, ConjClass, Mat2, Sl2TildeElement, PI,
};
use crate::{Error, Result};

const STENCIL: usize = 7; // half-width of the high-order interior stencils

/// An angle function φ on [0,1] (N+1 samples, strictly increasing, immersion)
/// together with the lifted monodromy h̃ realizing the seam φ(x+1) = h̃·φ(x).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DevelopingMap {
    pub grid_size: usize,
    pub phi: Vec<f64>,
    pub monodromy: Sl2TildeElement,
}

impl DevelopingMap {
    pub fn new(phi: Vec<f64>, monodromy: Sl2TildeElement) -> Result<Self> {
        let n = phi.len().checked_sub(1).ok_or(Error::BadGridSize(0))?;
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::BadGridSize(n));
        }
        let seam_err = (phi[n] - lifted_action(&monodromy, phi[0])).abs();
        if seam_err > 1e-8 {
            return Err(Error::MonodromyMismatch { residual: seam_err });
        }
        if !in_positive_subset(&monodromy) {
            return Err(Error::InvalidInput(
                "monodromy is not in the positive subset".into(),
            ));
        }
        let gamma = DevelopingMap { grid_size: n, phi, monodromy };
        let d1 = gamma.phi_derivative(1);
        let min_slope = d1.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_slope <= 0.0 {
            return Err(Error::NotImmersion { min_slope });
        }
        // seam smoothness: the centered derivative through the quasi-periodic
        // extension must agree with a one-sided interior stencil at x = 0
        let h = 1.0 / n as f64;
        let nodes: Vec<f64> = (0..=2 * STENCIL).map(|j| j as f64 * h).collect();
        let w = fd_weights(0.0, &nodes, 1);
        // subtract the expansion point's value: the h⁻¹-scaled weights sum to
        // zero exactly, so this removes the dominant cancellation error
        let one_sided: f64 = (0..=2 * STENCIL)
            .map(|j| w[j] * (gamma.phi[j] - gamma.phi[0]))
            .sum();
        let scale = d1[0].abs().max(1.0);
        if (one_sided - d1[0]).abs() > 1e-7 * scale {
            return Err(Error::InvalidInput(format!(
                "angle samples are not smooth across the seam (derivative gap {:e})",
                (one_sided - d1[0]).abs()
            )));
        }
        Ok(gamma)
    }

    /// Quasi-periodically extended samples at indices −pad..=N+pad,
    /// returned with offset `pad` (slot j holds φ((j − pad)/N)).
    fn extended(&self, pad: usize) -> Vec<f64> {
        let n = self.grid_size;
        let hinv = invert(&self.monodromy);
        let mut out = vec![0.0; n + 1 + 2 * pad];
        out[pad..=pad + n].copy_from_slice(&self.phi);
        for j in 1..=pad {
            out[pad + n + j] = lifted_action(&self.monodromy, self.phi[j]);
            out[pad - j] = lifted_action(&hinv, self.phi[n - j]);
        }
        out
    }

    /// m-th derivative of φ at the N+1 sample points. Affine seams
    /// (φ(x+1) = φ(x) + c) are handled spectrally; general monodromy uses
    /// 8th-order centered differences on the exact quasi-periodic extension.
    pub fn phi_derivative(&self, m: u32) -> Vec<f64> {
        let n = self.grid_size;
        let c = self.phi[n] - self.phi[0];
        let affine = (0..=8).all(|j| {
            let k = j * n / 8;
            (lifted_action(&self.monodromy, self.phi[k]) - self.phi[k] - c).abs() < 1e-11
        });
        if affine {
            let periodic: Vec<f64> = (0..n)
                .map(|k| self.phi[k] - c * k as f64 / n as f64)
                .collect();
            let mut d = spectral_derivative(&periodic, m);
            if m == 1 {
                for v in d.iter_mut() {
                    *v += c;
                }
            }
            d.push(d[0]);
            return d;
        }
        let h = 1.0 / n as f64;
        let ext = self.extended(STENCIL);
        let nodes: Vec<f64> = (0..=2 * STENCIL)
            .map(|j| (j as f64 - STENCIL as f64) * h)
            .collect();
        let w = fd_weights(0.0, &nodes, m as usize);
        // centered values keep the h⁻ᵐ-scaled weight sums free of the large
        // constant term (the weights annihilate constants exactly)
        (0..=n)
            .map(|k| {
                let center = ext[k + STENCIL];
                (0..=2 * STENCIL).map(|j| w[j] * (ext[k + j] - center)).sum()
            })
            .collect()
    }

    /// Evaluate φ at an arbitrary real x by 15-point polynomial interpolation
    /// on the quasi-periodic extension (x reduced to [0,1) by the monodromy).
    /// The wide stencil keeps the cell-to-cell interpolation error below the
    /// level that downstream h⁻³-scaled derivative stencils would amplify.
    pub fn eval_phi(&self, x: f64) -> f64 {
        const W: usize = 7;
        let shift = x.floor();
        let x0 = x - shift;
        let n = self.grid_size;
        let h = 1.0 / n as f64;
        let ext = self.extended(W);
        let k = ((x0 * n as f64).round() as i64).clamp(0, n as i64) as usize;
        let z = x0 - k as f64 * h;
        let nodes: Vec<f64> = (0..=2 * W).map(|j| (j as f64 - W as f64) * h).collect();
        let w = fd_weights(z, &nodes, 0);
        let center = ext[k + W];
        let mut val: f64 =
            center + (0..=2 * W).map(|j| w[j] * (ext[k + j] - center)).sum::<f64>();
        let mut steps = shift as i64;
        let hinv = invert(&self.monodromy);
        while steps > 0 {
            val = lifted_action(&self.monodromy, val);
            steps -= 1;
        }
        while steps < 0 {
            val = lifted_action(&hinv, val);
            steps += 1;
        }
        val
    }

    /// Invert φ: the unique y with φ(y) = target (φ is a strictly increasing
    /// bijection of ℝ when the monodromy has positive translation number).
    pub fn invert_phi(&self, target: f64) -> f64 {
        let n = self.grid_size;
        // bracket by whole periods first
        let mut lo_shift = 0i64;
        while self.eval_phi(lo_shift as f64) > target {
            lo_shift -= 1;
        }
        while self.eval_phi((lo_shift + 1) as f64) < target {
            lo_shift += 1;
        }
        // locate the grid cell inside [lo_shift, lo_shift+1]
        let mut lo = lo_shift as f64;
        let mut hi = lo + 1.0;
        for k in 1..=n {
            let x = lo_shift as f64 + k as f64 / n as f64;
            if self.eval_phi(x) >= target {
                hi = x;
                lo = x - 1.0 / n as f64;
                break;
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.eval_phi(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// How an exponential factor's parameter depends on x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorMode {
    /// coefficient c(x) = x
    X,
    /// coefficient c(x) = 1
    Const,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PathFactor {
    #[serde(rename = "X")]
    pub x: Mat2,
    pub mode: FactorMode,
}

/// γ(x) = Π_i exp(c_i(x) X_i) · (sin φ₀ : cos φ₀) with traceless X_i.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GroupPathSpec {
    pub factors: Vec<PathFactor>,
    pub phi0: f64,
}

impl GroupPathSpec {
    pub fn validate(&self) -> Result<()> {
        for f in &self.factors {
            if f.x.trace().abs() > 1e-12 {
                return Err(Error::InvalidInput("path factor is not traceless".into()));
            }
        }
        Ok(())
    }

    fn product_at(&self, x: f64) -> Mat2 {
        let mut p = Mat2::IDENTITY;
        for f in &self.factors {
            let c = match f.mode {
                FactorMode::X => x,
                FactorMode::Const => 1.0,
            };
            p = p.mul(&exp_sl2(&f.x, c));
        }
        p
    }
}

fn raw_angle(g: &Mat2, phi: f64) -> f64 {
    let v = g.apply([phi.sin(), phi.cos()]);
    v[0].atan2(v[1])
}

/// Build a developing map on an N-point grid from a group path, lifting the
/// angle continuously and deriving the lifted monodromy from the x = 1
/// product (branch pinned by the lift). Quasi-periodicity of the path beyond
/// x = 1 is verified, since multi-factor products need not satisfy it.
pub fn from_group_path(spec: &GroupPathSpec, n: usize) -> Result<DevelopingMap> {
    spec.validate()?;
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::BadGridSize(n));
    }
    let angle_at = |x: f64, prev: f64| -> f64 {
        let raw = raw_angle(&spec.product_at(x), spec.phi0);
        raw + PI * ((prev - raw) / PI).round()
    };
    let mut phi = Vec::with_capacity(n + 1);
    phi.push(angle_at(0.0, spec.phi0));
    for k in 1..=n {
        let prev = phi[k - 1];
        phi.push(angle_at(k as f64 / n as f64, prev));
    }
    for k in 1..=n {
        if phi[k] <= phi[k - 1] {
            return Err(Error::NotImmersion { min_slope: (phi[k] - phi[k - 1]) * n as f64 });
        }
    }
    // projective monodromy candidate from the endpoint products
    let g = spec.product_at(1.0).mul(&spec.product_at(0.0).inverse());
    let det = g.det();
    if (det - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("path product has det {det}")));
    }
    let principal = Sl2TildeElement::principal_lift(g)?;
    let image = lifted_action(&principal, phi[0]);
    let k = ((phi[n] - image) / PI).round();
    let h = Sl2TildeElement::new(principal.g, principal.psi0 + k * PI)?;
    // verify the path is genuinely quasi-periodic with this monodromy
    let mut worst: f64 = 0.0;
    for j in [0usize, n / 3, 2 * n / 3, n] {
        let x = j as f64 / n as f64;
        let cont = angle_at(1.0 + x, phi[n] + (phi[j] - phi[0]));
        worst = worst.max((cont - lifted_action(&h, phi[j])).abs());
    }
    if worst > 1e-8 {
        return Err(Error::MonodromyMismatch { residual: worst });
    }
    DevelopingMap::new(phi, h)
}

/// Hill potential of a developing map: 𝒯 = (φ')² + ½S(φ), where the
/// Schwarzian is built from the quasi-periodic derivatives. The result is
/// periodic even though φ is not; periodicity is asserted.
pub fn hill_of(gamma: &DevelopingMap) -> Result<HillPotential> {
    let n = gamma.grid_size;
    let d1 = gamma.phi_derivative(1);
    let d2 = gamma.phi_derivative(2);
    let d3 = gamma.phi_derivative(3);
    let t = |k: usize| {
        d1[k] * d1[k] + 0.5 * (d3[k] / d1[k] - 1.5 * (d2[k] / d1[k]).powi(2))
    };
    let wrap = (t(0) - t(n)).abs();
    let scale = t(0).abs().max(1.0);
    if wrap > 1e-6 * scale {
        return Err(Error::InvalidInput(format!(
            "Hill potential fails to close up at the seam (gap {wrap:e})"
        )));
    }
    HillPotential::new(SampledDensity {
        weight: 2.0,
        grid_size: n,
        samples: (0..n).map(t).collect(),
    })
}

/// Normalized lift u₁ = (φ')^{−½} sin φ, u₂ = (φ')^{−½} cos φ (a pair of
/// −½-density solutions of the associated Hill equation with Wronskian −1).
/// Global sign fixed by u₂(0) ≥ 0 (and u₁(0) > 0 if u₂(0) = 0).
pub fn normalized_lift(gamma: &DevelopingMap) -> (Vec<f64>, Vec<f64>) {
    let d1 = gamma.phi_derivative(1);
    let mut u1: Vec<f64> = gamma
        .phi
        .iter()
        .zip(&d1)
        .map(|(&p, &dp)| p.sin() / dp.sqrt())
        .collect();
    let mut u2: Vec<f64> = gamma
        .phi
        .iter()
        .zip(&d1)
        .map(|(&p, &dp)| p.cos() / dp.sqrt())
        .collect();
    let flip = u2[0] < 0.0 || (u2[0] == 0.0 && u1[0] < 0.0);
    if flip {
        for v in u1.iter_mut().chain(u2.iter_mut()) {
            *v = -*v;
        }
    }
    (u1, u2)
}

/// The lifted monodromy q(γ), cross-checked against the Floquet monodromy of
/// the associated Hill equation: with U(0) the initial frame of the
/// normalized lift in the (u', u) basis, U(0)·Aᵀ·U(0)⁻¹ must reproduce the
/// ODE monodromy, A being the cover matrix of h̃.
pub fn q_of(gamma: &DevelopingMap) -> Result<Sl2TildeElement> {
    let t = hill_of(gamma)?;
    let n = gamma.grid_size;
    let sol = solve_hill(&t, 16 * n)?;
    let d1 = gamma.phi_derivative(1);
    let d2 = gamma.phi_derivative(2);
    // u_j' at x = 0 from the angle data: u = (φ')^{−½}·trig(φ) gives
    // u' = (φ')^{½}·trig'(φ) − ½ φ''(φ')^{−3/2}·trig(φ); the global sign of
    // the lift cancels in the conjugation below
    let dlift = |sin_part: bool| -> f64 {
        let (s, c) = (gamma.phi[0].sin(), gamma.phi[0].cos());
        let sq = d1[0].sqrt();
        let trig_deriv = if sin_part { c } else { -s };
        let trig = if sin_part { s } else { c };
        trig_deriv * sq - 0.5 * d2[0] / (d1[0] * sq) * trig
    };
    let sq = d1[0].sqrt();
    let u0 = Mat2::new(
        dlift(true),
        dlift(false),
        gamma.phi[0].sin() / sq,
        gamma.phi[0].cos() / sq,
    );
    let a = sl2_cover_matrix(&gamma.monodromy);
    let frame_monodromy = u0.mul(&a.transpose()).mul(&u0.inverse());
    let residual = frame_monodromy
        .sub(&sol.monodromy_matrix)
        .norm()
        .min(frame_monodromy.scale(-1.0).sub(&sol.monodromy_matrix).norm());
    if residual > 1e-6 {
        return Err(Error::MonodromyMismatch { residual });
    }
    Ok(gamma.monodromy.clone())
}

/// Projective action (g·γ)(x) = g·γ(x): the lifted action of (a lift of) g is
/// applied pointwise to φ — it is continuous in the angle, so branch
/// continuity is automatic — and the monodromy is conjugated by that lift.
pub fn act_psl2(g: &Mat2, gamma: &DevelopingMap) -> Result<DevelopingMap> {
    if (g.det() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("det g = {} ≠ 1", g.det())));
    }
    let lift = Sl2TildeElement::principal_lift(*g)?;
    let phi: Vec<f64> = gamma.phi.iter().map(|&p| lifted_action(&lift, p)).collect();
    let h = compose(&compose(&lift, &gamma.monodromy), &invert(&lift));
    DevelopingMap::new(phi, h)
}

/// Reparametrization action (F·γ)(x) = γ(F⁻¹(x)) for F a unit-seam lift of a
/// circle diffeomorphism. The monodromy is untouched: q is Diff-invariant.
pub fn act_diff(f: &MonotoneGridFunction, gamma: &DevelopingMap) -> Result<DevelopingMap> {
    if (f.seam - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput("reparametrization needs a seam-1 lift".into()));
    }
    let finv = f.inverse()?;
    let n = gamma.grid_size;
    let phi: Vec<f64> = (0..=n)
        .map(|k| gamma.eval_phi(finv.evaluate(k as f64 / n as f64)))
        .collect();
    DevelopingMap::new(phi, gamma.monodromy.clone())
}

/// Generator of the stabilizer of γ in the reparametrization action:
/// F = φ⁻¹ ∘ (φ + π). Its seam is exactly 1, because the lifted monodromy
/// action commutes with the deck shift θ ↦ θ + π.
pub fn stabilizer_generator(gamma: &DevelopingMap) -> Result<MonotoneGridFunction> {
    let tau = translation_number(&gamma.monodromy);
    if tau <= 0.0 {
        return Err(Error::ZeroTranslationNumber);
    }
    let n = gamma.grid_size;
    let mut samples: Vec<f64> = (0..n)
        .map(|k| gamma.invert_phi(gamma.phi[k] + PI))
        .collect();
    samples.push(samples[0] + 1.0);
    MonotoneGridFunction::new(1.0, samples)
}

/// Limits of the angle function and fixed points of the monodromy action for
/// translation number 0: the developing map's range is the open arc bounded
/// by the fixed points.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RangeEndpoints {
    /// lim φ(x) as x → +periods (attracting fixed point)
    pub forward_limit: f64,
    /// lim φ(x) as x → −periods (repelling fixed point)
    pub backward_limit: f64,
    /// fixed points of the lifted action in [φ(0), φ(0) + π)
    pub fixed_points: Vec<f64>,
}

pub fn range_endpoints(gamma: &DevelopingMap, periods: u32) -> Result<RangeEndpoints> {
    let tau = translation_number(&gamma.monodromy);
    if tau > 0.0 {
        return Err(Error::PositiveTranslationNumber(tau));
    }
    let h = &gamma.monodromy;
    let hinv = invert(h);
    let mut fwd = gamma.phi[0];
    let mut bwd = gamma.phi[0];
    for _ in 0..periods {
        fwd = lifted_action(h, fwd);
        bwd = lifted_action(&hinv, bwd);
    }
    // fixed points of f(θ) − θ on a π-window (the displacement is π-periodic)
    let lo = gamma.phi[0];
    let m = 4096usize;
    let disp = |theta: f64| lifted_action(h, theta) - theta;
    let mut fixed_points = Vec::new();
    // half-open window [lo, lo + π): exact zeros at sample points are taken
    // directly, strict sign changes are refined by bisection
    for j in 0..m {
        let theta = lo + PI * j as f64 / m as f64;
        let next = lo + PI * (j + 1) as f64 / m as f64;
        let (p, c) = (disp(theta), disp(next));
        if p == 0.0 {
            fixed_points.push(theta);
        } else if p * c < 0.0 {
            let (mut a, mut b) = (theta, next);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if disp(mid) * p > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            fixed_points.push(0.5 * (a + b));
        }
    }
    fixed_points.dedup_by(|a, b| (*a - *b).abs() < 1e-4);
    if fixed_points.is_empty() {
        // parabolic: the displacement touches zero without a sign change
        let (mut best, mut best_val) = (lo, f64::INFINITY);
        for j in 0..m {
            let theta = lo + PI * j as f64 / m as f64;
            if disp(theta).abs() < best_val {
                best_val = disp(theta).abs();
                best = theta;
            }
        }
        // golden-section refine |disp|
        let (mut a, mut b) = (best - PI / m as f64, best + PI / m as f64);
        for _ in 0..200 {
            let m1 = a + 0.382 * (b - a);
            let m2 = a + 0.618 * (b - a);
            if disp(m1).abs() < disp(m2).abs() {
                b = m2;
            } else {
                a = m1;
            }
        }
        fixed_points.push(0.5 * (a + b));
    }
    // hyperbolic limits converge geometrically; parabolic ones only like
    // 1/periods, so the agreement tolerance must account for that
    let tol = if fixed_points.len() >= 2 {
        1e-4
    } else {
        5.0 / periods as f64
    };
    let agree = fixed_points.iter().any(|&p| {
        let d = (fwd - p).rem_euclid(PI);
        d.min(PI - d) < tol
    }) && fixed_points.iter().any(|&p| {
        let d = (bwd - p).rem_euclid(PI);
        d.min(PI - d) < tol
    });
    if !agree {
        return Err(Error::MonodromyMismatch {
            residual: f64::NAN,
        });
    }
    Ok(RangeEndpoints { forward_limit: fwd, backward_limit: bwd, fixed_points })
}

/// Reconstruct a developing map from a Hill potential via the Floquet frame:
/// φ = atan2(u₁, u₂) lifted continuously (strictly increasing since
/// φ' = 1/(u₁² + u₂²)), monodromy pinned by φ(1).
pub fn devmap_from_potential(t: &HillPotential) -> Result<DevelopingMap> {
    let n = t.grid_size();
    let sol = solve_hill(t, 16 * n)?;
    let mut phi = Vec::with_capacity(n + 1);
    phi.push(0.0f64); // atan2(u₁(0), u₂(0)) = atan2(0, 1)
    for k in 1..=n {
        let raw = sol.u1[k].atan2(sol.u2[k]);
        let prev = phi[k - 1];
        phi.push(raw + PI * ((prev - raw) / PI).round());
    }
    // cover matrix of the monodromy in the (u₁, u₂) vector basis: U(x+1) =
    // U(x)Aᵀ with U(0) = I gives A = U(1)ᵀ = Mᵀ in the (u', u) ODE basis
    let a = sol.monodromy_matrix.transpose();
    let g = if a.d > 0.0 || (a.d == 0.0 && a.b > 0.0) {
        a
    } else {
        a.scale(-1.0)
    };
    let principal = Sl2TildeElement::principal_lift(g)?;
    let image = lifted_action(&principal, phi[0]);
    let k = ((phi[n] - image) / PI).round();
    let h = Sl2TildeElement::new(principal.g, principal.psi0 + k * PI)?;
    DevelopingMap::new(phi, h)
}

/// Conjugacy invariants of the coadjoint orbit through a Hill potential:
/// the complete classification pipeline p⁻¹ then q then classify.
pub fn orbit_invariants(t: &HillPotential) -> Result<ConjClass> {
    let gamma = devmap_from_potential(t)?;
    classify(&q_of(&gamma)?)
}
