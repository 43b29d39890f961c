//! Drinfeld–Sokolov structures for the trivialized PSL(2,R) bundle over the
//! circle: the connection attached to a Hill potential, the frame embedding
//! of developing maps, the right-trivialized variation field Ξ̌ with its
//! loop-space 2-form, the nilpotent gauge action with its slice reduction,
//! and the gauge-field image of a circle reparametrization.

use crate::circle::{gregory_integrate, MonotoneGridFunction, SampledDensity, TrigInterp};
use crate::devmap::{hill_of, DevelopingMap};
use crate::forms::{
    d_l_field, fd4_mat, phi_prime_two_periods, phi_two_periods, theta, DevMapFamily,
};
use crate::hill::{coadjoint_action, HillPotential};
use crate::sl2::{Mat2, Sl2TildeElement};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Window padding for the frame fields: φ is extended exactly, so the only
/// pad loss is the one 15-point stencil used for φ''.
const DS_PAD: usize = 16;

/// A connection 1-form on the trivialized bundle S¹ × PSL(2,R), sampled as N
/// traceless matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeConnection {
    pub grid_size: usize,
    #[serde(rename = "A")]
    pub a: Vec<Mat2>,
}

impl GaugeConnection {
    pub fn new(a: Vec<Mat2>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::BadGridSize(0));
        }
        for m in &a {
            if m.trace().abs() > 1e-12 {
                return Err(Error::InvalidInput("connection must be traceless".into()));
            }
        }
        Ok(GaugeConnection { grid_size: a.len(), a })
    }
}

/// A quasi-periodic section of the frame bundle: τ(x) = [[u₁', u₂'],[u₁, u₂]]
/// on [0,1] built from a normalized lift, with the lifted monodromy of the
/// underlying developing map. det τ = 1 and τ(1) = ±q·τ(0).
#[derive(Debug, Clone)]
pub struct QuasiPeriodicFrame {
    pub grid_size: usize,
    pub tau: Vec<Mat2>,
    pub monodromy: Sl2TildeElement,
}

/// The connection of a Hill operator: A = (0 𝒯; −1 0).
pub fn ds_connection(t: &HillPotential) -> GaugeConnection {
    let a = t
        .t
        .samples
        .iter()
        .map(|&v| Mat2::new(0.0, v, -1.0, 0.0))
        .collect();
    GaugeConnection { grid_size: t.grid_size(), a }
}

/// Frame fields of one family member over the padded two-period window:
/// τ = [[u₁', u₂'],[u₁, u₂]] and its x-derivative τ' = [[−𝒯u₁, −𝒯u₂],[u₁', u₂']]
/// (using u'' = −𝒯u). All entries come from the exact quasi-periodic φ
/// extension, so det τ = 1 holds identically.
struct FrameWindow {
    grid_size: usize,
    pad: usize,
    tau: Vec<Mat2>,
    taup: Vec<Mat2>,
}

impl FrameWindow {
    fn tau_at(&self, slot: i64) -> Mat2 {
        self.tau[(slot + self.pad as i64) as usize]
    }
    fn taup_at(&self, slot: i64) -> Mat2 {
        self.taup[(slot + self.pad as i64) as usize]
    }
}

/// The sign convention of the normalized lift: flip so the cosine-type
/// solution is positive at x = 0 (ties broken by the sine-type one).
fn lift_flip(g: &DevelopingMap) -> bool {
    let d1 = g.phi_derivative(1);
    let u1 = g.phi[0].sin() / d1[0].sqrt();
    let u2 = g.phi[0].cos() / d1[0].sqrt();
    u2 < 0.0 || (u2 == 0.0 && u1 < 0.0)
}

fn frame_window(g: &DevelopingMap, flip: bool) -> Result<FrameWindow> {
    let n = g.grid_size;
    let phi = phi_two_periods(g, DS_PAD);
    let phip = phi_prime_two_periods(g, &phi, DS_PAD);
    let phipp = phi.derivative(2);
    let t = hill_of(g)?;
    let pad = phipp.pad;
    let sign = if flip { -1.0 } else { 1.0 };
    let lo = -(pad as i64);
    let hi = (2 * n + pad) as i64;
    let mut tau = Vec::with_capacity((hi - lo + 1) as usize);
    let mut taup = Vec::with_capacity(tau.capacity());
    for s in lo..=hi {
        let p = phi.at(s);
        let dp = phip.at(s);
        let ddp = phipp.at(s);
        if dp <= 0.0 {
            return Err(Error::NotImmersion { min_slope: dp });
        }
        let (sp, cp) = (p.sin(), p.cos());
        let sq = dp.sqrt();
        let u1 = sign * sp / sq;
        let u2 = sign * cp / sq;
        let u1p = sign * (sq * cp - 0.5 * ddp * sp / (dp * sq));
        let u2p = sign * (-sq * sp - 0.5 * ddp * cp / (dp * sq));
        let tt = t.t.samples[(s.rem_euclid(n as i64)) as usize];
        tau.push(Mat2::new(u1p, u2p, u1, u2));
        taup.push(Mat2::new(-tt * u1, -tt * u2, u1p, u2p));
    }
    Ok(FrameWindow { grid_size: n, pad, tau, taup })
}

/// The frame embedding of a developing map: τ assembled from the normalized
/// lift on [0,1], monodromy carried over.
pub fn frame_of(gamma: &DevelopingMap) -> Result<QuasiPeriodicFrame> {
    let n = gamma.grid_size;
    let w = frame_window(gamma, lift_flip(gamma))?;
    let tau: Vec<Mat2> = (0..=n as i64).map(|s| w.tau_at(s)).collect();
    Ok(QuasiPeriodicFrame { grid_size: n, tau, monodromy: gamma.monodromy })
}

/// Frame windows of the five members used by the parameter stencil of one
/// direction, plus the base.
fn stencil_windows(
    family: &DevMapFamily,
    dir: usize,
) -> Result<(FrameWindow, [FrameWindow; 4])> {
    let base = family.base();
    let flip = lift_flip(&base);
    let off = |delta: i64| -> Vec<i64> {
        let mut v = vec![0i64; family.k];
        v[dir] = delta;
        v
    };
    let w = |delta: i64| -> Result<FrameWindow> {
        frame_window(&*family.member(&off(delta))?, flip)
    };
    Ok((
        frame_window(&base, flip)?,
        [w(-2)?, w(-1)?, w(1)?, w(2)?],
    ))
}

/// Ξ̌ = (δτ)τ⁻¹ for one direction of a family, on the padded window; also τ
/// and τ' of the base for covariant derivatives.
struct XiWindow {
    grid_size: usize,
    pad: usize,
    xi: Vec<Mat2>,
    xip: Vec<Mat2>,
}

impl XiWindow {
    fn at(&self, slot: i64) -> Mat2 {
        self.xi[(slot + self.pad as i64) as usize]
    }
    fn deriv_at(&self, slot: i64) -> Mat2 {
        self.xip[(slot + self.pad as i64) as usize]
    }
}

fn xi_window(family: &DevMapFamily, dir: usize) -> Result<XiWindow> {
    let (base, st) = stencil_windows(family, dir)?;
    let n = base.grid_size;
    let pad = base.pad;
    let eps = family.eps;
    let lo = -(pad as i64);
    let hi = (2 * n + pad) as i64;
    let mut xi = Vec::with_capacity((hi - lo + 1) as usize);
    let mut xip = Vec::with_capacity(xi.capacity());
    for s in lo..=hi {
        let tinv = base.tau_at(s).inverse();
        let dtau = fd4_mat(&st[0].tau_at(s), &st[1].tau_at(s), &st[2].tau_at(s), &st[3].tau_at(s), eps);
        let dtaup = fd4_mat(&st[0].taup_at(s), &st[1].taup_at(s), &st[2].taup_at(s), &st[3].taup_at(s), eps);
        let x = dtau.mul(&tinv);
        // d/dx[(δτ)τ⁻¹] = (δτ')τ⁻¹ − (δτ)τ⁻¹τ'τ⁻¹, all factors analytic per
        // member, so no stencil is applied to the differenced field
        let xp = dtaup.mul(&tinv).sub(&x.mul(&base.taup_at(s)).mul(&tinv));
        xi.push(x);
        xip.push(xp);
    }
    Ok(XiWindow { grid_size: n, pad, xi, xip })
}

/// ∂_AΞ̌ = Ξ̌' + [A, Ξ̌] at a slot, with A the base-member connection extended
/// periodically.
fn d_a_xi(xi: &XiWindow, t: &HillPotential, slot: i64) -> Mat2 {
    let n = xi.grid_size as i64;
    let tt = t.t.samples[slot.rem_euclid(n) as usize];
    let a = Mat2::new(0.0, tt, -1.0, 0.0);
    let x = xi.at(slot);
    xi.deriv_at(slot).add(&a.mul(&x).sub(&x.mul(&a)))
}

/// Ξ̌ of one direction on [0,1]: the finite-difference field (δτ)τ⁻¹ together
/// with its closed form [[−½Θ', ½Θ''+𝒯Θ],[−Θ, ½Θ']] from the variation field.
pub fn xi_matrix(family: &DevMapFamily, dir: usize) -> Result<(Vec<Mat2>, Vec<Mat2>)> {
    let xi = xi_window(family, dir)?;
    let n = xi.grid_size;
    let fd: Vec<Mat2> = (0..=n as i64).map(|s| xi.at(s)).collect();
    let th = theta(family, dir)?;
    let thp = th.derivative(1);
    let thpp = th.derivative(2);
    let t = hill_of(&family.base())?;
    let closed: Vec<Mat2> = (0..=n as i64)
        .map(|s| {
            let tt = t.t.samples[(s.rem_euclid(n as i64)) as usize];
            Mat2::new(
                -0.5 * thp.at(s),
                0.5 * thpp.at(s) + tt * th.at(s),
                -th.at(s),
                0.5 * thp.at(s),
            )
        })
        .collect();
    Ok((fd, closed))
}

/// Max-norm residual of the integrand identity: tr(Ξ̌ᵢ ∂_AΞ̌ⱼ) − tr(Ξ̌ⱼ ∂_AΞ̌ᵢ)
/// versus the wedge evaluation Θᵢ(D_LΘⱼ) − Θⱼ(D_LΘᵢ), pointwise on [0,1].
pub fn integrand_check(family: &DevMapFamily, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidInput("directions must differ".into()));
    }
    let xi_i = xi_window(family, i)?;
    let xi_j = xi_window(family, j)?;
    let t = hill_of(&family.base())?;
    let th_i = theta(family, i)?;
    let th_j = theta(family, j)?;
    let dl_i = d_l_field(&th_i, &t);
    let dl_j = d_l_field(&th_j, &t);
    let n = xi_i.grid_size;
    let mut worst: f64 = 0.0;
    for s in 0..=n as i64 {
        let lhs = xi_i.at(s).mul(&d_a_xi(&xi_j, &t, s)).trace()
            - xi_j.at(s).mul(&d_a_xi(&xi_i, &t, s)).trace();
        let rhs = th_i.at(s) * dl_j.at(s) - th_j.at(s) * dl_i.at(s);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Max-norm residual of ∂_AΞ̌ against its strictly-upper-triangular form
/// (0, −D_LΘ; 0, 0) for one direction.
pub fn d_a_xi_form_check(family: &DevMapFamily, dir: usize) -> Result<f64> {
    let xi = xi_window(family, dir)?;
    let t = hill_of(&family.base())?;
    let th = theta(family, dir)?;
    let dl = d_l_field(&th, &t);
    let n = xi.grid_size;
    let mut worst: f64 = 0.0;
    for s in 0..=n as i64 {
        let expect = Mat2::new(0.0, -dl.at(s), 0.0, 0.0);
        worst = worst.max(d_a_xi(&xi, &t, s).sub(&expect).norm());
    }
    Ok(worst)
}

/// The loop-space 2-form on quasi-periodic frames, evaluated on directions
/// (i, j) of a family with base point x₀ (in grid units):
///
///   ϖ_𝒫(δᵢ,δⱼ) = ∫_{x₀}^{x₀+1} [tr(Ξ̌ᵢ∂_AΞ̌ⱼ) − tr(Ξ̌ⱼ∂_AΞ̌ᵢ)]
///               + [tr(Ξ̌ᵢ(x₀)Ξ̌ⱼ(x₀+1)) − tr(Ξ̌ⱼ(x₀)Ξ̌ᵢ(x₀+1))].
///
/// This is the orientation under which the form is x₀-independent AND
/// satisfies the stated contraction/differential properties (generating
/// PSL(2,R) contractions −½⟨θ^L+θ^R, X⟩, dϖ = pullback of the Cartan
/// 3-form with the −1/12 normalization) and pulls back to the developing-map
/// 2-form under the frame embedding. The base-point formula as printed,
/// −½∫⟨Ξ,Ξ'⟩ + ½⟨Ξ_{x₀}, q*θ^L⟩, carries the opposite overall sign — the
/// source it cites is explicitly flagged as using "a different sign
/// convention", and the properties fix the sign used here.
pub fn varpi_p(family: &DevMapFamily, i: usize, j: usize, x0: usize) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidInput("directions must differ".into()));
    }
    let xi_i = xi_window(family, i)?;
    let xi_j = xi_window(family, j)?;
    let t = hill_of(&family.base())?;
    let n = xi_i.grid_size;
    if x0 > n + xi_i.pad.saturating_sub(0) {
        return Err(Error::InvalidInput("base point outside window".into()));
    }
    let k0 = x0 as i64;
    let vals: Vec<f64> = (k0..=k0 + n as i64)
        .map(|s| {
            xi_i.at(s).mul(&d_a_xi(&xi_j, &t, s)).trace()
                - xi_j.at(s).mul(&d_a_xi(&xi_i, &t, s)).trace()
        })
        .collect();
    let integral = gregory_integrate(&vals, 1.0 / n as f64);
    let boundary = xi_i.at(k0).mul(&xi_j.at(k0 + n as i64)).trace()
        - xi_j.at(k0).mul(&xi_i.at(k0 + n as i64)).trace();
    Ok(integral + boundary)
}

/// The action of the nilpotent gauge group element (1 χ; 0 1) on a traceless
/// connection.
pub fn n_gauge_action(chi: &SampledDensity, a: &GaugeConnection) -> Result<GaugeConnection> {
    let n = a.grid_size;
    let chi = chi.resample_to(n)?;
    let chip = chi.differentiate();
    let out = (0..n)
        .map(|k| {
            let m = &a.a[k];
            let (x, xp) = (chi.samples[k], chip.samples[k]);
            Mat2::new(
                m.a + x * m.c,
                m.b - 2.0 * x * m.a - x * x * m.c - xp,
                m.c,
                m.d - x * m.c,
            )
        })
        .collect();
    GaugeConnection::new(out)
}

/// Reduction to the Hill slice: for A on the level set A₂₁ ≡ −1, gauge by
/// χ = A₁₁ (which zeroes the diagonal) and return the upper-right entry
/// 𝒯 = A₁₂ − A₁₁² − A₁₁' as a Hill potential.
pub fn ds_reduce(a: &GaugeConnection) -> Result<HillPotential> {
    let n = a.grid_size;
    for m in &a.a {
        if (m.c + 1.0).abs() > 1e-10 {
            return Err(Error::NotOnLevelSet(m.c));
        }
        if m.trace().abs() > 1e-12 {
            return Err(Error::InvalidInput("connection must be traceless".into()));
        }
    }
    let diag = SampledDensity {
        weight: 0.0,
        grid_size: n,
        samples: a.a.iter().map(|m| m.a).collect(),
    };
    let diagp = diag.differentiate();
    let t = SampledDensity {
        weight: 2.0,
        grid_size: n,
        samples: (0..n)
            .map(|k| a.a[k].b - diag.samples[k] * diag.samples[k] - diagp.samples[k])
            .collect(),
    };
    HillPotential::new(t)
}

/// The gauge-field part of the canonical inclusion of a reparametrization:
/// g = (F'^{½}, −½F''F'^{−3/2}; 0, F'^{−½}), sampled on the grid.
pub fn diff_to_gauge(f: &MonotoneGridFunction) -> Result<Vec<Mat2>> {
    if (f.seam - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("reparametrization must have seam 1".into()));
    }
    let d1 = f.deriv_samples(1);
    let d2 = f.deriv_samples(2);
    let n = f.grid_size;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if d1[k] <= 0.0 {
            return Err(Error::NotMonotone { min_diff: d1[k] });
        }
        let sq = d1[k].sqrt();
        out.push(Mat2::new(sq, -0.5 * d2[k] / (d1[k] * sq), 0.0, 1.0 / sq));
    }
    Ok(out)
}

/// A combined bundle-automorphism transform of a connection: pull the base
/// point back through F (with the 1-form weight F'), then apply the gauge
/// field g pointwise: A ↦ g·(F*A)·g⁻¹ − g'g⁻¹. Entries of g must be periodic
/// (seam-1 reparametrizations guarantee this).
pub fn aut_transform(
    g: &[Mat2],
    f: &MonotoneGridFunction,
    a: &GaugeConnection,
) -> Result<GaugeConnection> {
    let n = a.grid_size;
    if g.len() != n || f.grid_size != n {
        return Err(Error::GridMismatch(g.len(), a.grid_size));
    }
    let interp: Vec<TrigInterp> = [
        a.a.iter().map(|m| m.a).collect::<Vec<f64>>(),
        a.a.iter().map(|m| m.b).collect(),
        a.a.iter().map(|m| m.c).collect(),
        a.a.iter().map(|m| m.d).collect(),
    ]
    .iter()
    .map(|v| TrigInterp::new(v))
    .collect();
    let d1 = f.deriv_samples(1);
    // spectral derivative of the (periodic) gauge-field entries
    let gp: Vec<Vec<f64>> = [
        g.iter().map(|m| m.a).collect::<Vec<f64>>(),
        g.iter().map(|m| m.b).collect(),
        g.iter().map(|m| m.c).collect(),
        g.iter().map(|m| m.d).collect(),
    ]
    .iter()
    .map(|v| {
        SampledDensity { weight: 0.0, grid_size: n, samples: v.clone() }
            .differentiate()
            .samples
    })
    .collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let x = k as f64 / n as f64;
        let y = f.evaluate(x).rem_euclid(1.0);
        let pulled = Mat2::new(
            interp[0].eval(y),
            interp[1].eval(y),
            interp[2].eval(y),
            interp[3].eval(y),
        )
        .scale(d1[k]);
        let gk = &g[k];
        let gpk = Mat2::new(gp[0][k], gp[1][k], gp[2][k], gp[3][k]);
        let m = gk.mul(&pulled).mul(&gk.inverse()).sub(&gpk.mul(&gk.inverse()));
        out.push(m);
    }
    GaugeConnection::new(out)
}

/// Equivariance of the slice reduction: transforming the Hill connection by
/// the canonical inclusion of F⁻¹ and reducing equals the potential-level
/// pullback action. Returns the max-norm residual against
/// coadjoint_action(F, 𝒯) where g = diff_to_gauge(F).
pub fn ds_equivariance_residual(f: &MonotoneGridFunction, t: &HillPotential) -> Result<f64> {
    let g = diff_to_gauge(f)?;
    let transformed = aut_transform(&g, f, &ds_connection(t))?;
    let reduced = ds_reduce(&transformed)?;
    let expect = coadjoint_action(f, t)?;
    let resid = reduced
        .t
        .add(&expect.t.scale(-1.0))?
        .max_abs();
    Ok(resid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::TAU;
    use crate::devmap::{devmap_from_potential, normalized_lift};
    use crate::forms::{standard_family, varpi_d, Deformation};
    use crate::sl2::{exp_sl2, metric, sl2_cover_matrix, PI};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const N: usize = 256;
    const EPS: f64 = 1e-3;

    fn smooth_potential(rng: &mut ChaCha8Rng) -> HillPotential {
        let base: f64 = rng.gen_range(1.5..8.0);
        let a: f64 = rng.gen_range(-0.4..0.4);
        let b: f64 = rng.gen_range(-0.3..0.3);
        HillPotential::from_fn(N, |x| base + a * (TAU * x).sin() + b * (2.0 * TAU * x).cos())
            .unwrap()
    }

    fn smooth_vf(rng: &mut ChaCha8Rng) -> SampledDensity {
        let a: f64 = rng.gen_range(-0.3..0.3);
        let b: f64 = rng.gen_range(-0.2..0.2);
        let c: f64 = rng.gen_range(0.0..1.0);
        SampledDensity::from_fn(-1.0, N, |x| a * (TAU * (x + c)).sin() + b * (2.0 * TAU * x).cos())
            .unwrap()
    }

    fn smooth_dt(rng: &mut ChaCha8Rng) -> SampledDensity {
        let a: f64 = rng.gen_range(-0.5..0.5);
        let b: f64 = rng.gen_range(-0.5..0.5);
        let c: f64 = rng.gen_range(-0.3..0.3);
        SampledDensity::from_fn(2.0, N, |x| a + b * (TAU * x).sin() + c * (2.0 * TAU * x).cos())
            .unwrap()
    }

    fn random_traceless(rng: &mut ChaCha8Rng, scale: f64) -> Mat2 {
        let a: f64 = rng.gen_range(-scale..scale);
        let b: f64 = rng.gen_range(-scale..scale);
        let c: f64 = rng.gen_range(-scale..scale);
        Mat2::new(a, b, c, -a)
    }

    fn two_dir_family(rng: &mut ChaCha8Rng) -> DevMapFamily {
        let t = smooth_potential(rng);
        standard_family(
            t,
            vec![
                Deformation::Potential(smooth_dt(rng)),
                Deformation::DiffFlow(smooth_vf(rng)),
            ],
            EPS,
        )
        .unwrap()
    }

    #[test]
    fn ds_connection_examples() {
        let z = ds_connection(&HillPotential::constant(0.0, 16).unwrap());
        for m in &z.a {
            assert!(m.sub(&Mat2::new(0.0, 0.0, -1.0, 0.0)).norm() < 1e-15);
        }
        let alpha2 = 2.3;
        let c = ds_connection(&HillPotential::constant(alpha2, 16).unwrap());
        for m in &c.a {
            assert!((m.det() - alpha2).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_det_seam_and_connection() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..3 {
            let t = smooth_potential(&mut rng);
            let g = devmap_from_potential(&t).unwrap();
            let fr = frame_of(&g).unwrap();
            for m in &fr.tau {
                assert!((m.det() - 1.0).abs() < 1e-8);
            }
            // seam: τ(1) = ±τ(0)·qᵀ — solutions propagate by the Floquet
            // matrix τ(0)qᵀτ(0)⁻¹, so the cover matrix acts by transposed
            // right multiplication on the frame
            let q = sl2_cover_matrix(&fr.monodromy);
            let qt = Mat2::new(q.a, q.c, q.b, q.d);
            let lhs = fr.tau[N];
            let rhs = fr.tau[0].mul(&qt);
            let r = lhs.sub(&rhs).norm().min(lhs.add(&rhs).norm());
            assert!(r < 1e-7, "seam residual {r}");
            // A = −τ'τ⁻¹ reproduces the Hill connection
            let w = frame_window(&g, lift_flip(&g)).unwrap();
            let a = ds_connection(&t);
            let mut worst: f64 = 0.0;
            for s in 0..N as i64 {
                let am = w.taup_at(s).mul(&w.tau_at(s).inverse()).scale(-1.0);
                worst = worst.max(am.sub(&a.a[s as usize]).norm());
            }
            assert!(worst < 1e-6, "connection residual {worst}");
        }
    }

    #[test]
    fn frame_of_linear_angle_is_trig() {
        // φ = αx: normalized lift α^{−½}(sin αx, cos αx), frame rows follow
        let alpha: f64 = 1.7;
        let rot = Mat2::new(alpha.cos(), alpha.sin(), -alpha.sin(), alpha.cos());
        let mono = Sl2TildeElement::new(rot, alpha).unwrap();
        let phi: Vec<f64> = (0..=N).map(|k| alpha * k as f64 / N as f64).collect();
        let g = DevelopingMap::new(phi, mono).unwrap();
        let fr = frame_of(&g).unwrap();
        let (u1, u2) = normalized_lift(&g);
        for k in (0..=N).step_by(16) {
            let x = k as f64 / N as f64;
            let su = alpha.powf(-0.5) * (alpha * x + g.phi[0]).sin();
            let cu = alpha.powf(-0.5) * (alpha * x + g.phi[0]).cos();
            // match up to the global lift sign
            let d = ((u1[k] - su).abs() + (u2[k] - cu).abs())
                .min((u1[k] + su).abs() + (u2[k] + cu).abs());
            assert!(d < 1e-6, "lift mismatch {d} at {k}");
            assert!((fr.tau[k].c - u1[k]).abs() < 1e-12);
            assert!((fr.tau[k].d - u2[k]).abs() < 1e-12);
            let sup = alpha.powf(0.5) * (alpha * x + g.phi[0]).cos();
            let dd = (fr.tau[k].a - sup).abs().min((fr.tau[k].a + sup).abs());
            assert!(dd < 1e-6, "derivative row mismatch {dd}");
        }
    }

    #[test]
    fn frame_monodromy_matches_hill_floquet() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let t = smooth_potential(&mut rng);
        let g = devmap_from_potential(&t).unwrap();
        let fr = frame_of(&g).unwrap();
        let sol = crate::hill::solve_hill(&t, 16 * N).unwrap();
        // τ(1)τ(0)⁻¹ is the frame monodromy in the (u', u) basis; compare to
        // the Floquet matrix up to overall sign
        let fm = fr.tau[N].mul(&fr.tau[0].inverse());
        let hm = sol.monodromy_matrix;
        let r = fm.sub(&hm).norm().min(fm.add(&hm).norm());
        assert!(r < 1e-6, "monodromy residual {r}");
    }

    #[test]
    fn xi_static_and_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        // static direction: zero PSL2 generator
        let t = smooth_potential(&mut rng);
        let fam = standard_family(
            t,
            vec![Deformation::Psl2(Mat2::new(0.0, 0.0, 0.0, 0.0))],
            EPS,
        )
        .unwrap();
        let (fd, _) = xi_matrix(&fam, 0).unwrap();
        for m in &fd {
            assert!(m.norm() < 1e-9);
        }
        for _ in 0..2 {
            let fam = two_dir_family(&mut rng);
            for dir in 0..2 {
                let (fd, closed) = xi_matrix(&fam, dir).unwrap();
                let mut worst: f64 = 0.0;
                for (a, b) in fd.iter().zip(&closed) {
                    worst = worst.max(a.sub(b).norm());
                    assert!(a.trace().abs() < 1e-8);
                }
                assert!(worst < 1e-5, "closed-form residual {worst}");
            }
        }
    }

    #[test]
    fn integrand_and_upper_triangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for _ in 0..2 {
            let fam = two_dir_family(&mut rng);
            let r = integrand_check(&fam, 0, 1).unwrap();
            assert!(r < 1e-5, "integrand residual {r}");
            for dir in 0..2 {
                let r = d_a_xi_form_check(&fam, dir).unwrap();
                assert!(r < 1e-5, "upper-triangular residual {r}");
            }
        }
        let fam = two_dir_family(&mut rng);
        assert!(matches!(integrand_check(&fam, 1, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn varpi_p_x0_independence_and_pullback() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..2 {
            let fam = two_dir_family(&mut rng);
            let w0 = varpi_p(&fam, 0, 1, 0).unwrap();
            for x0 in [N / 4, N / 2, 3 * N / 4] {
                let w = varpi_p(&fam, 0, 1, x0).unwrap();
                assert!((w - w0).abs() < 1e-5, "x0 dependence {}", (w - w0).abs());
            }
            // antisymmetry
            assert!((varpi_p(&fam, 1, 0, 0).unwrap() + w0).abs() < 1e-12);
            // pullback: matches the developing-map 2-form
            let wd = varpi_d(&fam, 0, 1, 0).unwrap();
            assert!((w0 - wd).abs() < 1e-5, "pullback residual {}", (w0 - wd).abs());
        }
    }

    #[test]
    fn varpi_p_psl2_contraction_and_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let t = smooth_potential(&mut rng);
        let x = random_traceless(&mut rng, 0.5);
        // generating direction: exp(−tX) family in direction 0
        let fam = standard_family(
            t.clone(),
            vec![
                Deformation::Psl2(x.scale(-1.0)),
                Deformation::Potential(smooth_dt(&mut rng)),
            ],
            EPS,
        )
        .unwrap();
        let lhs = varpi_p(&fam, 0, 1, 0).unwrap();
        let base = vec![0i64; 2];
        let a = crate::forms::DevMapFamily::base(&fam);
        let q = sl2_cover_matrix(&a.monodromy);
        let dq = crate::forms::delta_q(&fam, 1, &base).unwrap();
        let theta_l = q.inverse().mul(&dq);
        let theta_r = dq.mul(&q.inverse());
        // −½⟨θ^L+θ^R, X⟩ with ⟨,⟩ = 2tr
        let rhs = -0.5 * metric(&theta_l.add(&theta_r), &x);
        assert!((lhs - rhs).abs() < 1e-5, "contraction lhs {lhs} rhs {rhs}");
        // invariance under a global frame rotation of every member
        let g0 = exp_sl2(&random_traceless(&mut rng, 0.4), 1.0);
        let t2 = t.clone();
        let dt2 = {
            let mut r2 = ChaCha8Rng::seed_from_u64(65);
            let _ = smooth_potential(&mut r2);
            let _ = random_traceless(&mut r2, 0.5);
            smooth_dt(&mut r2)
        };
        let eps = EPS;
        let xm = x.scale(-1.0);
        let fam_g = DevMapFamily::new(
            2,
            eps,
            Box::new(move |p: &[f64]| {
                let tt = HillPotential::new(t2.t.add(&dt2.scale(p[1])).unwrap()).unwrap();
                let g = devmap_from_potential(&tt)?;
                let g = crate::devmap::act_psl2(&exp_sl2(&xm, p[0]), &g)?;
                crate::devmap::act_psl2(&g0, &g)
            }),
        )
        .unwrap();
        let wg = varpi_p(&fam_g, 0, 1, 0).unwrap();
        assert!((wg - lhs).abs() < 1e-5, "G-invariance residual {}", (wg - lhs).abs());
    }

    #[test]
    fn n_gauge_group_law_and_moment_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let t = smooth_potential(&mut rng);
        let a = ds_connection(&t);
        let chi0 = SampledDensity::constant(0.0, 0.0, N).unwrap();
        let same = n_gauge_action(&chi0, &a).unwrap();
        for (m1, m2) in a.a.iter().zip(&same.a) {
            assert!(m1.sub(m2).norm() < 1e-15);
        }
        for _ in 0..3 {
            let chi1 = SampledDensity::from_fn(0.0, N, |x| {
                0.3 * (TAU * (x + 0.2)).sin() + 0.1 * (2.0 * TAU * x).cos()
            })
            .unwrap();
            let c2a: f64 = rng.gen_range(-0.5..0.5);
            let c2b: f64 = rng.gen_range(-0.5..0.5);
            let chi2 =
                SampledDensity::from_fn(0.0, N, |x| c2a * (TAU * x).cos() + c2b).unwrap();
            let step = n_gauge_action(&chi2, &n_gauge_action(&chi1, &a).unwrap()).unwrap();
            let sum = n_gauge_action(&chi1.add(&chi2).unwrap(), &a).unwrap();
            let mut worst: f64 = 0.0;
            for (m1, m2) in step.a.iter().zip(&sum.a) {
                worst = worst.max(m1.sub(m2).norm());
                // moment component unchanged
            }
            assert!(worst < 1e-8, "group-law residual {worst}");
            for (m1, m2) in step.a.iter().zip(&a.a) {
                assert!((m1.c - m2.c).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ds_reduce_round_trip_and_level_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..3 {
            let t = smooth_potential(&mut rng);
            let a = ds_connection(&t);
            // slice element: identical potential back, exactly
            let back = ds_reduce(&a).unwrap();
            for (x, y) in back.t.samples.iter().zip(&t.t.samples) {
                assert!((x - y).abs() < 1e-12);
            }
            let chi = SampledDensity::from_fn(0.0, N, |x| {
                0.4 * (TAU * x).sin() - 0.2 * (2.0 * TAU * (x + 0.1)).cos()
            })
            .unwrap();
            let moved = n_gauge_action(&chi, &a).unwrap();
            let rt = ds_reduce(&moved).unwrap();
            let resid = rt.t.add(&t.t.scale(-1.0)).unwrap().max_abs();
            assert!(resid < 1e-7, "round-trip residual {resid}");
        }
        // off the level set
        let bad = GaugeConnection::new(vec![Mat2::new(0.0, 1.0, -0.5, 0.0); N]).unwrap();
        assert!(matches!(ds_reduce(&bad), Err(Error::NotOnLevelSet(_))));
    }

    #[test]
    fn diff_to_gauge_entries() {
        let idf = MonotoneGridFunction::identity(N);
        for m in diff_to_gauge(&idf).unwrap() {
            assert!(m.sub(&Mat2::new(1.0, 0.0, 0.0, 1.0)).norm() < 1e-12);
        }
        let f = MonotoneGridFunction::from_fn(1.0, N, |x| x + 0.05 * (TAU * x).sin()).unwrap();
        let g = diff_to_gauge(&f).unwrap();
        let fine =
            MonotoneGridFunction::from_fn(1.0, 4096, |x| x + 0.05 * (TAU * x).sin()).unwrap();
        let gf = diff_to_gauge(&fine).unwrap();
        let step = 4096 / N;
        let mut worst: f64 = 0.0;
        for k in 0..N {
            worst = worst.max(g[k].sub(&gf[k * step]).norm());
            assert!((g[k].det() - 1.0).abs() < 1e-10);
        }
        assert!(worst < 1e-7, "refinement residual {worst}");
    }

    #[test]
    fn ds_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(68);
        for _ in 0..2 {
            let t = smooth_potential(&mut rng);
            let amp: f64 = rng.gen_range(0.01..0.06);
            let ph: f64 = rng.gen_range(0.0..1.0);
            let f = MonotoneGridFunction::from_fn(1.0, N, |x| {
                x + amp * (TAU * (x + ph)).sin()
            })
            .unwrap();
            let r = ds_equivariance_residual(&f, &t).unwrap();
            assert!(r < 1e-5, "equivariance residual {r}");
        }
    }

    #[test]
    fn gauge_connection_json_round_trip() {
        let t = HillPotential::from_fn(16, |x| 2.0 + (TAU * x).sin()).unwrap();
        let a = ds_connection(&t);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"grid_size\":16") && s.contains("\"A\""));
        let b: GaugeConnection = serde_json::from_str(&s).unwrap();
        for (m1, m2) in a.a.iter().zip(&b.a) {
            assert!(m1.sub(m2).norm() < 1e-15);
        }
    }

    #[test]
    fn pi_shift_same_frame_data() {
        // the lift is defined up to sign; a π-shifted developing map gives
        // the same frame up to overall sign, hence identical Ξ̌
        let mut rng = ChaCha8Rng::seed_from_u64(69);
        let t = smooth_potential(&mut rng);
        let g = devmap_from_potential(&t).unwrap();
        let mut g2 = g.clone();
        for v in g2.phi.iter_mut() {
            *v += PI;
        }
        let f1 = frame_of(&g).unwrap();
        let f2 = frame_of(&g2).unwrap();
        let mut worst: f64 = 0.0;
        for (m1, m2) in f1.tau.iter().zip(&f2.tau) {
            worst = worst.max(m1.sub(m2).norm().min(m1.add(m2).norm()));
        }
        assert!(worst < 1e-9, "π-shift residual {worst}");
    }
}
