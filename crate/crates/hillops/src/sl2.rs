//! SL(2,R) linear algebra, its universal cover, the lifted projective action
//! on ℝ (the universal cover of RP(1) with the angle convention
//! γ = (sin φ : cos φ)), Poincaré translation numbers, conjugacy
//! classification, and the bi-invariant metric / Cartan 3-form.

use crate::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const PI: f64 = std::f64::consts::PI;

/// A real 2×2 matrix. Group elements have det 1; algebra elements trace 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Serialize for Mat2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [[self.a, self.b], [self.c, self.d]].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 2]; 2]>::deserialize(d)?;
        let m = Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
        if !m.a.is_finite() || !m.b.is_finite() || !m.c.is_finite() || !m.d.is_finite() {
            return Err(D::Error::custom("non-finite matrix entry"));
        }
        Ok(m)
    }
}

impl Mat2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    /// J₁ = (0 1; −1 0): infinitesimal rotation, exp(αJ₁) acts by φ ↦ φ + α.
    pub const J1: Mat2 = Mat2::new(0.0, 1.0, -1.0, 0.0);
    /// J₂ = (1 0; 0 −1): boost.
    pub const J2: Mat2 = Mat2::new(1.0, 0.0, 0.0, -1.0);
    /// J₃ = (0 1; 0 0): nilpotent.
    pub const J3: Mat2 = Mat2::new(0.0, 1.0, 0.0, 0.0);

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(s * self.a, s * self.b, s * self.c, s * self.d)
    }

    pub fn commutator(&self, o: &Mat2) -> Mat2 {
        self.mul(o).sub(&o.mul(self))
    }

    /// Inverse of a general invertible matrix.
    pub fn inverse(&self) -> Mat2 {
        let det = self.det();
        Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Apply to a column vector.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Ad_g X = g X g⁻¹.
    pub fn ad(&self, x: &Mat2) -> Mat2 {
        self.mul(x).mul(&self.inverse())
    }
}

/// Matrix exponential exp(tX) of a traceless X, by the closed form in
/// Δ = det X: trigonometric for Δ > 0, hyperbolic for Δ < 0, affine for Δ = 0.
pub fn exp_sl2(x: &Mat2, t: f64) -> Mat2 {
    debug_assert!(x.trace().abs() < 1e-10);
    let delta = x.det();
    let (cos_part, sinc) = if delta > 1e-24 {
        let w = delta.sqrt();
        ((t * w).cos(), (t * w).sin() / w)
    } else if delta < -1e-24 {
        let m = (-delta).sqrt();
        ((t * m).cosh(), (t * m).sinh() / m)
    } else {
        (1.0, t)
    };
    Mat2::new(
        cos_part + sinc * x.a,
        sinc * x.b,
        sinc * x.c,
        cos_part + sinc * x.d,
    )
}

/// Bi-invariant metric ⟨X,Y⟩ = 2 tr(XY) on sl(2,R).
pub fn metric(x: &Mat2, y: &Mat2) -> f64 {
    2.0 * (x.mul(y)).trace()
}

/// Cartan 3-form η = (1/6) tr(θ^L ∧ [θ^L, θ^L]) evaluated on left-trivialized
/// tangent vectors, under the no-factorial wedge convention. The permutation
/// sum collapses (every one of the six terms equals tr(X[Y,Z])) to:
pub fn cartan3(x: &Mat2, y: &Mat2, z: &Mat2) -> f64 {
    x.mul(&y.commutator(z)).trace()
}

/// An element of the universal cover of SL(2,R): a det-1 matrix together with
/// ψ₀, the image of the base angle 0 under the lifted projective action.
/// (g, ψ₀) and (−g, ψ₀) are the same element; the stored representative is
/// canonicalized to d > 0, or b > 0 when d = 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sl2TildeElement {
    pub g: Mat2,
    pub psi0: f64,
}

/// Raw (projective, mod π) angle of g applied to the direction of angle φ.
fn raw_angle(g: &Mat2, phi: f64) -> f64 {
    let w = g.apply([phi.sin(), phi.cos()]);
    w[0].atan2(w[1])
}

impl Sl2TildeElement {
    pub fn new(g: Mat2, psi0: f64) -> Result<Self> {
        if (g.det() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("det = {} is not 1", g.det())));
        }
        let g = canonical_sign(g);
        // consistency: (sin ψ₀ : cos ψ₀) must be the projective image g·(0:1)
        let (b, d) = (g.b, g.d);
        let norm = (b * b + d * d).sqrt();
        let resid = (psi0.sin() * d - psi0.cos() * b).abs() / norm;
        if resid > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "psi0 = {psi0} is not a lift of the image of the base angle (residual {resid})"
            )));
        }
        Ok(Sl2TildeElement { g, psi0 })
    }

    pub fn identity() -> Self {
        Sl2TildeElement { g: Mat2::IDENTITY, psi0: 0.0 }
    }

    /// The lift of g whose ψ₀ lies in (−π/2, π/2] (principal branch).
    pub fn principal_lift(g: Mat2) -> Result<Self> {
        let g = canonical_sign(g);
        Self::new(g, raw_angle(&g, 0.0))
    }

    /// The lift of g with ψ₀ nearest to `hint` on the correct π-coset.
    pub fn lift_near(g: Mat2, hint: f64) -> Result<Self> {
        let g = canonical_sign(g);
        let raw = raw_angle(&g, 0.0);
        Self::new(g, raw + PI * ((hint - raw) / PI).round())
    }

    /// Elliptic/central representative r_α (lift of exp(αJ₁)).
    pub fn r_alpha(alpha: f64) -> Self {
        Sl2TildeElement::new(exp_sl2(&Mat2::J1, alpha), alpha).unwrap()
    }

    /// Hyperbolic representative h_{β,n} (lift of exp(βJ₂) with τ = n).
    pub fn h_beta_n(beta: f64, n: i64) -> Self {
        Sl2TildeElement::new(exp_sl2(&Mat2::J2, beta), n as f64 * PI).unwrap()
    }

    /// Parabolic representative p_n^± (lift of exp(±J₃) with τ = n).
    pub fn p_n(sign: i8, n: i64) -> Self {
        let g = exp_sl2(&Mat2::J3, sign as f64);
        let raw = raw_angle(&g, 0.0);
        Sl2TildeElement::new(g, raw + n as f64 * PI).unwrap()
    }

    /// Central element r_{πn} (lift of ±I).
    pub fn central(n: i64) -> Self {
        Sl2TildeElement { g: Mat2::IDENTITY, psi0: n as f64 * PI }
    }
}

fn canonical_sign(g: Mat2) -> Mat2 {
    if g.d < 0.0 || (g.d == 0.0 && g.b < 0.0) {
        g.scale(-1.0)
    } else {
        g
    }
}

/// The unique continuous strictly increasing lift f of the projective action
/// of h's matrix with f(0) = ψ₀, evaluated at φ. Satisfies
/// f(φ + π) = f(φ) + π exactly.
pub fn lifted_action(h: &Sl2TildeElement, phi: f64) -> f64 {
    // reduce by exact π-equivariance
    let m = (phi / PI).floor();
    let phi0 = phi - m * PI; // in [0, π)
    // continue the branch from the base point in steps of at most π/4,
    // bisecting adaptively whenever an increment is too large to be
    // branch-unambiguous
    let mut f = h.psi0;
    let steps = 4;
    for i in 1..=steps {
        let x0 = phi0 * (i - 1) as f64 / steps as f64;
        let x1 = phi0 * i as f64 / steps as f64;
        f = advance_branch(&h.g, x0, f, x1, 0);
    }
    f + m * PI
}

/// Continue the lift from (x0, f0) to x1, resolving the π-branch with a
/// [−π/4, 3π/4) increment window and bisecting when the increment is > π/4.
fn advance_branch(g: &Mat2, x0: f64, f0: f64, x1: f64, depth: u32) -> f64 {
    let raw = raw_angle(g, x1);
    let k = ((f0 - raw) / PI - 0.25).ceil();
    let f1 = raw + k * PI;
    // a large increment is ambiguous; a negative one beyond rounding noise
    // means the [−π/4, 3π/4) window grabbed the wrong branch of an increment
    // near π — both are resolved by bisection
    if (f1 - f0 > PI / 4.0 || f1 - f0 < -1e-9) && depth < 48 && x1 - x0 > 1e-14 {
        let xm = 0.5 * (x0 + x1);
        let fm = advance_branch(g, x0, f0, xm, depth + 1);
        return advance_branch(g, xm, fm, x1, depth + 1);
    }
    f1
}

/// The matrix in SL(2,R) (specific sign) that h projects to under the
/// covering map to SL(2,R), i.e. the A with
/// A·(sin φ, cos φ)ᵀ = r·(sin f(φ), cos f(φ)), r > 0.
pub fn sl2_cover_matrix(h: &Sl2TildeElement) -> Mat2 {
    let w = h.g.apply([0.0, 1.0]);
    if h.psi0.cos() * w[1] + h.psi0.sin() * w[0] >= 0.0 {
        h.g
    } else {
        h.g.scale(-1.0)
    }
}

pub fn compose(h1: &Sl2TildeElement, h2: &Sl2TildeElement) -> Sl2TildeElement {
    let g = canonical_sign(h1.g.mul(&h2.g));
    Sl2TildeElement { g, psi0: lifted_action(h1, h2.psi0) }
}

pub fn invert(h: &Sl2TildeElement) -> Sl2TildeElement {
    let ginv = canonical_sign(h.g.inverse());
    let raw = raw_angle(&ginv, 0.0);
    // pin the branch so that f_h(ψ₀_inv) = 0
    let probe = Sl2TildeElement { g: h.g, psi0: h.psi0 };
    let image = lifted_action(&probe, raw);
    let k = (-image / PI).round();
    Sl2TildeElement { g: ginv, psi0: raw + k * PI }
}

/// Conjugacy class in the universal cover of SL(2,R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConjClass {
    Central { n: i64 },
    Elliptic { alpha: f64 },
    Hyperbolic { beta: f64, n: i64 },
    Parabolic { sign: i8, n: i64 },
}

const CLASS_TOL: f64 = 1e-9;

/// Numeric Poincaré translation number estimate: lim f^N(0)/(Nπ) with
/// N = 2¹⁴ iterations, using the second-half average to cancel the bounded
/// orbit-deviation term.
pub fn translation_number_numeric(h: &Sl2TildeElement) -> f64 {
    let n: usize = 1 << 14;
    let mut y = 0.0f64;
    let mut half = 0.0f64;
    for i in 0..n {
        if i == n / 2 {
            half = y;
        }
        y = lifted_action(h, y);
    }
    (y - half) / ((n / 2) as f64 * PI)
}

/// Translation number τ(h̃): numeric iteration cross-checked against (and
/// snapped to) the classification-exact value when unambiguous.
pub fn translation_number(h: &Sl2TildeElement) -> f64 {
    let t = h.g.trace();
    if t.abs() >= 2.0 - CLASS_TOL {
        // hyperbolic / parabolic / central: τ is an exact integer
        return translation_number_numeric(h).round();
    }
    // Elliptic: no fixed points, so the displacement f(φ) − φ keeps a constant
    // π-interval (kπ, (k+1)π), which contains τπ = α. Within that interval the
    // two candidates kπ + α₀ and (k+1)π − α₀ (cos = ±t/2) are separated by the
    // sign of cos α, read off the SL(2,R) double-cover representative.
    let alpha0 = (t / 2.0).clamp(-1.0, 1.0).acos(); // in (0, π), cos α₀ = t/2
    let k = ((lifted_action(h, 0.0)) / PI).floor();
    let cos_alpha = sl2_cover_matrix(h).trace() / 2.0;
    let cand1 = k * PI + alpha0; // cos = (−1)^k t/2
    let cand2 = (k + 1.0) * PI - alpha0; // cos = −(−1)^k t/2
    let parity = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let alpha = if (parity * t / 2.0 - cos_alpha).abs() <= (-parity * t / 2.0 - cos_alpha).abs()
    {
        cand1
    } else {
        cand2
    };
    alpha / PI
}

/// Classify h̃ into its conjugacy class via |tr| and τ.
pub fn classify(h: &Sl2TildeElement) -> Result<ConjClass> {
    let t = h.g.trace();
    let tau = translation_number(h);
    if t.abs() < 2.0 - CLASS_TOL {
        return Ok(ConjClass::Elliptic { alpha: tau * PI });
    }
    if t.abs() > 2.0 + CLASS_TOL {
        return Ok(ConjClass::Hyperbolic {
            beta: (t.abs() / 2.0).acosh(),
            n: tau.round() as i64,
        });
    }
    // |tr| within the boundary band: central vs parabolic by nilpotent part
    let s = if t >= 0.0 { 1.0 } else { -1.0 };
    let nilp = h.g.scale(s).sub(&Mat2::IDENTITY);
    let n = tau.round();
    if nilp.norm() < CLASS_TOL {
        if (tau - n).abs() > CLASS_TOL {
            return Err(Error::BoundaryAmbiguous { tau });
        }
        return Ok(ConjClass::Central { n: n as i64 });
    }
    // parabolic sign: sample f(φ) − φ − nπ away from the fixed point
    let grid = 512;
    let mut best = 0.0f64;
    for i in 0..grid {
        let phi = PI * i as f64 / grid as f64;
        let v = lifted_action(h, phi) - phi - n * PI;
        if v.abs() > best.abs() {
            best = v;
        }
    }
    Ok(ConjClass::Parabolic { sign: if best >= 0.0 { 1 } else { -1 }, n: n as i64 })
}

/// Membership in the image of q: {h̃ : h̃·φ > φ for some φ}.
pub fn in_positive_subset(h: &Sl2TildeElement) -> bool {
    let grid = 1024;
    (0..grid).any(|i| {
        let phi = PI * i as f64 / grid as f64;
        lifted_action(h, phi) - phi > CLASS_TOL
    })
}

/// Approximate equality of conjugacy classes (continuous parameters compared
/// within `tol`).
pub fn classes_match(a: &ConjClass, b: &ConjClass, tol: f64) -> bool {
    match (a, b) {
        (ConjClass::Central { n }, ConjClass::Central { n: m }) => n == m,
        (ConjClass::Elliptic { alpha }, ConjClass::Elliptic { alpha: alpha2 }) => {
            (alpha - alpha2).abs() <= tol
        }
        (ConjClass::Hyperbolic { beta, n }, ConjClass::Hyperbolic { beta: beta2, n: m }) => {
            n == m && (beta - beta2).abs() <= tol
        }
        (ConjClass::Parabolic { sign, n }, ConjClass::Parabolic { sign: s2, n: m }) => {
            n == m && sign == s2
        }
        _ => false,
    }
}

/// Whether a class belongs to the positive-subset representative list
/// {r_α | α > 0} ∪ {h_{β,n} | n ≥ 0} ∪ {p_n^± | n > 0} ∪ {p₀⁺}.
pub fn class_in_positive_list(c: &ConjClass) -> bool {
    match *c {
        ConjClass::Central { n } => n > 0,
        ConjClass::Elliptic { alpha } => alpha > 0.0,
        ConjClass::Hyperbolic { n, .. } => n >= 0,
        ConjClass::Parabolic { sign, n } => n > 0 || (n == 0 && sign > 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_traceless(rng: &mut ChaCha8Rng, scale: f64) -> Mat2 {
        let a: f64 = rng.gen_range(-scale..scale);
        let b: f64 = rng.gen_range(-scale..scale);
        let c: f64 = rng.gen_range(-scale..scale);
        Mat2::new(a, b, c, -a)
    }

    pub(crate) fn random_element(rng: &mut ChaCha8Rng) -> Sl2TildeElement {
        let x = random_traceless(rng, 1.2);
        let y = random_traceless(rng, 1.2);
        let a = Sl2TildeElement::principal_lift(exp_sl2(&x, 1.0)).unwrap();
        let b = Sl2TildeElement::principal_lift(exp_sl2(&y, 1.0)).unwrap();
        let n: i64 = rng.gen_range(-2..=2);
        compose(&compose(&a, &b), &Sl2TildeElement::central(n))
    }

    #[test]
    fn exp_examples() {
        let r = exp_sl2(&Mat2::J1, PI / 2.0);
        assert!(r.sub(&Mat2::new(0.0, 1.0, -1.0, 0.0)).norm() < 1e-13);
        let h = exp_sl2(&Mat2::J2, 0.7);
        assert!(h.sub(&Mat2::new(0.7f64.exp(), 0.0, 0.0, (-0.7f64).exp())).norm() < 1e-13);
        let p = exp_sl2(&Mat2::J3, 0.3);
        assert!(p.sub(&Mat2::new(1.0, 0.3, 0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn lifted_action_examples() {
        let id = Sl2TildeElement::identity();
        for phi in [-3.0, 0.0, 0.4, 2.0, 10.0] {
            assert!((lifted_action(&id, phi) - phi).abs() < 1e-12);
        }
        let r = Sl2TildeElement::r_alpha(0.3);
        assert!((lifted_action(&r, 0.0) - 0.3).abs() < 1e-12);
        // rotations act as translations in the angle coordinate
        for phi in [0.2, 1.0, 4.0] {
            assert!((lifted_action(&r, phi) - (phi + 0.3)).abs() < 1e-10);
        }
        let p = Sl2TildeElement::p_n(1, 0);
        assert!((p.psi0 - PI / 4.0).abs() < 1e-12);
        assert!((lifted_action(&p, PI / 2.0) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lifted_action_pi_equivariance_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let h = random_element(&mut rng);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..200 {
                let phi = -2.0 + 7.0 * i as f64 / 200.0;
                let f = lifted_action(&h, phi);
                assert!(f > prev, "lift must be strictly increasing");
                prev = f;
                assert!((lifted_action(&h, phi + PI) - (f + PI)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn compose_invert_associativity() {
        let r = Sl2TildeElement::r_alpha(PI);
        let rr = compose(&r, &r);
        assert!((rr.psi0 - 2.0 * PI).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let h = random_element(&mut rng);
            let e = compose(&h, &invert(&h));
            assert!(e.g.sub(&Mat2::IDENTITY).norm() < 1e-9);
            assert!(e.psi0.abs() < 1e-9);
            let (a, b, c) = (
                random_element(&mut rng),
                random_element(&mut rng),
                random_element(&mut rng),
            );
            let lhs = compose(&compose(&a, &b), &c);
            let rhs = compose(&a, &compose(&b, &c));
            assert!(lhs.g.sub(&rhs.g).norm() < 1e-9);
            assert!((lhs.psi0 - rhs.psi0).abs() < 1e-8);
        }
    }

    #[test]
    fn translation_numbers_of_representatives() {
        for alpha in [0.3, 1.0, 2.5, 4.0, -0.7] {
            let r = Sl2TildeElement::r_alpha(alpha);
            assert!((translation_number(&r) - alpha / PI).abs() < 1e-9, "alpha={alpha}");
        }
        for n in [-1i64, 0, 1, 3] {
            for beta in [0.5, 1.0, 2.0] {
                let h = Sl2TildeElement::h_beta_n(beta, n);
                assert!((translation_number(&h) - n as f64).abs() < 1e-12);
            }
            for sign in [1i8, -1] {
                let p = Sl2TildeElement::p_n(sign, n);
                assert!((translation_number(&p) - n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn classify_representatives() {
        let r = Sl2TildeElement::r_alpha(0.3);
        assert!(matches!(classify(&r).unwrap(),
            ConjClass::Elliptic { alpha } if (alpha - 0.3).abs() < 1e-9));
        let h = Sl2TildeElement::h_beta_n(1.0, 0);
        assert!(matches!(classify(&h).unwrap(),
            ConjClass::Hyperbolic { beta, n: 0 } if (beta - 1.0).abs() < 1e-9));
        let c = Sl2TildeElement::central(1);
        assert_eq!(classify(&c).unwrap(), ConjClass::Central { n: 1 });
        let p = Sl2TildeElement::p_n(-1, 2);
        assert_eq!(classify(&p).unwrap(), ConjClass::Parabolic { sign: -1, n: 2 });
    }

    #[test]
    fn conjugation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = [
            Sl2TildeElement::r_alpha(0.9),
            Sl2TildeElement::h_beta_n(0.8, 1),
            Sl2TildeElement::p_n(1, 0),
            Sl2TildeElement::p_n(-1, 1),
        ];
        for rep in &reps {
            for _ in 0..5 {
                let g = random_element(&mut rng);
                let conj = compose(&compose(&g, rep), &invert(&g));
                let (t1, t2) = (translation_number(rep), translation_number(&conj));
                assert!((t1 - t2).abs() < 1e-6);
                assert!(classes_match(
                    &classify(rep).unwrap(),
                    &classify(&conj).unwrap(),
                    1e-6
                ));
            }
        }
    }

    #[test]
    fn quasi_homomorphism_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let a = random_element(&mut rng);
            let b = random_element(&mut rng);
            let lhs = translation_number(&compose(&a, &b));
            let gap = (lhs - translation_number(&a) - translation_number(&b)).abs();
            assert!(gap <= 1.0 + 1e-9, "gap = {gap}");
        }
    }

    #[test]
    fn positive_subset_representatives() {
        assert!(in_positive_subset(&Sl2TildeElement::r_alpha(0.5)));
        assert!(!in_positive_subset(&Sl2TildeElement::r_alpha(-0.5)));
        assert!(in_positive_subset(&Sl2TildeElement::h_beta_n(1.0, 0)));
        assert!(!in_positive_subset(&Sl2TildeElement::h_beta_n(1.0, -1)));
        assert!(in_positive_subset(&Sl2TildeElement::p_n(1, 0)));
        assert!(!in_positive_subset(&Sl2TildeElement::p_n(-1, 0)));
        assert!(in_positive_subset(&Sl2TildeElement::p_n(-1, 1)));
    }

    #[test]
    fn positive_subset_matches_class_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let h = random_element(&mut rng);
            if let Ok(c) = classify(&h) {
                assert_eq!(in_positive_subset(&h), class_in_positive_list(&c), "{c:?}");
            }
        }
    }

    #[test]
    fn metric_and_cartan3() {
        assert!((metric(&Mat2::J1, &Mat2::J1) + 4.0).abs() < 1e-14);
        // permutation-sum oracle for the Cartan 3-form under the no-factorial
        // wedge convention: (1/6) Σ_{σ∈S₃} sgn(σ) tr(X_{σ1}[X_{σ2},X_{σ3}])
        let perm_oracle = |x: &Mat2, y: &Mat2, z: &Mat2| -> f64 {
            let terms: [(f64, [&Mat2; 3]); 6] = [
                (1.0, [x, y, z]),
                (-1.0, [x, z, y]),
                (-1.0, [y, x, z]),
                (1.0, [y, z, x]),
                (1.0, [z, x, y]),
                (-1.0, [z, y, x]),
            ];
            terms
                .iter()
                .map(|(s, [p, q, r])| s * p.mul(&q.commutator(r)).trace())
                .sum::<f64>()
                / 6.0
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let x = random_traceless(&mut rng, 1.0);
            let y = random_traceless(&mut rng, 1.0);
            let z = random_traceless(&mut rng, 1.0);
            assert!((cartan3(&x, &y, &z) - perm_oracle(&x, &y, &z)).abs() < 1e-12);
            assert!(cartan3(&x, &x, &y).abs() < 1e-12);
        }
        // frozen value from the oracle
        assert!((cartan3(&Mat2::J1, &Mat2::J2, &Mat2::J3) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn cover_matrix_sign() {
        let r = Sl2TildeElement::r_alpha(0.4);
        assert!(sl2_cover_matrix(&r).sub(&exp_sl2(&Mat2::J1, 0.4)).norm() < 1e-12);
        // r_{α+π} projects to the negative of the canonical representative
        let r2 = Sl2TildeElement::r_alpha(0.4 + PI);
        let expect = exp_sl2(&Mat2::J1, 0.4 + PI);
        assert!(sl2_cover_matrix(&r2).sub(&expect).norm() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let h = Sl2TildeElement::r_alpha(0.8);
        let s = serde_json::to_string(&h).unwrap();
        let h2: Sl2TildeElement = serde_json::from_str(&s).unwrap();
        assert!(h.g.sub(&h2.g).norm() < 1e-15 && (h.psi0 - h2.psi0).abs() < 1e-15);
        let c = ConjClass::Hyperbolic { beta: 1.0, n: 2 };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"type\":\"hyperbolic\""));
        assert_eq!(serde_json::from_str::<ConjClass>(&s).unwrap(), c);
    }
}
