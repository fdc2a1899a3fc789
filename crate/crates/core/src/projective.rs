//! Conics in homogeneous coordinates and the planar homology carrying a
//! section ellipse onto its section circle, with centre at the contact point.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::ellipsoid::PlaneSection;
use crate::error::{Result, SteeringError};
use crate::tol;

/// A conic `x̄ᵀ A x̄ = 0`, `x̄ = (u, v, 1)`, defined up to scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic(pub Matrix3<f64>);

fn hom(z: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(z[0], z[1], 1.0)
}

impl Conic {
    /// Circle of radius `r` centred at `(r, 0)`.
    pub fn circle(r: f64) -> Self {
        Conic(Matrix3::new(1.0, 0.0, -r, 0.0, 1.0, 0.0, -r, 0.0, 0.0))
    }

    /// Ellipse with semiaxes `m`, `n`, the `m` axis at angle `delta` from the
    /// u axis, passing through the origin tangent to the v axis.
    pub fn tangent_ellipse(m: f64, n: f64, delta: f64) -> Self {
        let (mu, nu, xi, _) = ellipse_coefficients(m, n, delta);
        Conic(Matrix3::new(1.0 - 2.0 * mu, -nu, -xi, -nu, 1.0, 0.0, -xi, 0.0, 0.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// `x̄ᵀ A x̄`. For the constructors above this is negative inside.
    pub fn value(&self, z: &Vector2<f64>) -> f64 {
        let x = hom(z);
        x.dot(&(self.0 * x))
    }

    /// Scaled so the largest-magnitude entry equals 1.
    pub fn normalized(&self) -> Self {
        let pivot = self
            .0
            .iter()
            .copied()
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        Conic(self.0 / pivot)
    }

    /// Pull-back `HᵀAH`: the conic whose points `x` have `Hx` on this one.
    pub fn pulled_back(&self, h: &Matrix3<f64>) -> Self {
        Conic(h.transpose() * self.0 * h)
    }

    /// Frobenius distance between the normalized forms.
    pub fn distance(&self, other: &Conic) -> f64 {
        (self.normalized().0 - other.normalized().0).norm()
    }

    /// Other intersection of the line `x0 + t·dir` with the conic, given `x0`
    /// on it. A tangent line returns `x0`.
    pub fn second_intersection(&self, x0: &Vector2<f64>, dir: &Vector2<f64>) -> Vector2<f64> {
        let d = Vector3::new(dir[0], dir[1], 0.0);
        let a = d.dot(&(self.0 * d));
        let b = hom(x0).dot(&(self.0 * d));
        if a.abs() <= f64::EPSILON * self.0.norm() * dir.norm_squared() {
            return *x0;
        }
        x0 + dir * (-2.0 * b / a)
    }
}

/// `(μ, ν, ξ, G)` for the tangent ellipse with semiaxes `m`, `n` and tilt `delta`.
pub fn ellipse_coefficients(m: f64, n: f64, delta: f64) -> (f64, f64, f64, f64) {
    let diff = m * m - n * n;
    let (s2, c2) = (2.0 * delta).sin_cos();
    let g2 = m * m + n * n + diff * c2;
    let g = g2.sqrt();
    let xi = 2.0 * std::f64::consts::SQRT_2 * m * m * n * n / (g2 * g);
    (diff * c2 / g2, diff * s2 / g2, xi, g)
}

/// Centre of the tangent ellipse.
pub fn ellipse_centre(m: f64, n: f64, delta: f64) -> Vector2<f64> {
    let (_, _, _, g) = ellipse_coefficients(m, n, delta);
    let diff = m * m - n * n;
    Vector2::new(
        g / std::f64::consts::SQRT_2,
        diff * (2.0 * delta).sin() / (std::f64::consts::SQRT_2 * g),
    )
}

/// Point of the tangent ellipse at parameter `t`.
pub fn ellipse_point(m: f64, n: f64, delta: f64, t: f64) -> Vector2<f64> {
    let (sd, cd) = delta.sin_cos();
    let (st, ct) = t.sin_cos();
    ellipse_centre(m, n, delta) + Vector2::new(cd, sd) * (m * ct) + Vector2::new(-sd, cd) * (n * st)
}

/// Number of ellipse samples used to verify nesting in the circle.
const NESTING_SAMPLES: usize = 720;

/// Planar homology `H = [[1,0,0],[0,1,0],[α,β,γ]]` with centre at the origin.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Homology {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub radius: f64,
}

impl Homology {
    /// Homology mapping the tangent ellipse `(m, n, delta)` onto the circle of
    /// radius `radius`. Fails with `NotNested` if the ellipse leaves the circle.
    pub fn new(m: f64, n: f64, delta: f64, radius: f64) -> Result<Self> {
        if !(m > 0.0 && n > 0.0 && radius > 0.0) || !delta.is_finite() {
            return Err(SteeringError::InvalidParameter(format!("m={m}, n={n}, R={radius}")));
        }
        let worst = (0..NESTING_SAMPLES)
            .map(|i| {
                let z = ellipse_point(m, n, delta, i as f64 * std::f64::consts::TAU / NESTING_SAMPLES as f64);
                Conic::circle(radius).value(&z) / radius
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > tol::GEOM {
            return Err(SteeringError::NotNested(worst));
        }
        Ok(Self::new_unchecked(m, n, delta, radius))
    }

    /// As [`new`](Self::new) without the nesting check.
    pub fn new_unchecked(m: f64, n: f64, delta: f64, radius: f64) -> Self {
        let (mu, nu, xi, _) = ellipse_coefficients(m, n, delta);
        Self {
            alpha: mu / radius,
            beta: nu / radius,
            gamma: xi / radius,
            radius,
        }
    }

    /// Homology of a plane section. Needle sections are rejected.
    pub fn from_section(section: &PlaneSection) -> Result<Self> {
        if section.needle {
            return Err(SteeringError::DegeneratePlane(section.n));
        }
        Self::new(section.m, section.n, section.delta, section.radius)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, self.alpha, self.beta, self.gamma)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        let g = self.gamma;
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -self.alpha / g, -self.beta / g, 1.0 / g)
    }

    /// `(u, v) ↦ (u, v)/(αu + βv + γ)`.
    pub fn apply(&self, z: &Vector2<f64>) -> Result<Vector2<f64>> {
        let den = self.alpha * z[0] + self.beta * z[1] + self.gamma;
        if den.abs() < tol::AT_INFINITY {
            return Err(SteeringError::AtInfinity);
        }
        Ok(z / den)
    }

    /// `(u, v) ↦ γ(u, v)/(1 − αu − βv)`.
    pub fn inverse_apply(&self, z: &Vector2<f64>) -> Result<Vector2<f64>> {
        let den = 1.0 - self.alpha * z[0] - self.beta * z[1];
        if den.abs() < tol::AT_INFINITY {
            return Err(SteeringError::AtInfinity);
        }
        Ok(z * (self.gamma / den))
    }

    /// Image `h` of Bob's reduced state `b` in the plane.
    pub fn map_b_to_h(&self, b: &Vector2<f64>) -> Result<Vector2<f64>> {
        self.apply(b)
    }
}

/// Builds `h` from `b` with ruler constructions only: the chord through `e₁`
/// and `b` meets the ellipse again at `e₂`; `pe₁` and `pe₂` meet the circle at
/// `c₁` and `c₂`; `h` is where `pb` crosses `c₁c₂`.
pub fn chord_construction(
    ellipse: &Conic,
    circle: &Conic,
    e1: &Vector2<f64>,
    b: &Vector2<f64>,
) -> Result<Vector2<f64>> {
    let e2 = ellipse.second_intersection(e1, &(b - e1));
    // pe₁ or pe₂ has no direction when the chord ends at the contact point
    if e1.norm() <= tol::GEOM || e2.norm() <= tol::GEOM {
        return Err(SteeringError::InvalidParameter(
            "chord ends at the contact point".into(),
        ));
    }
    let origin = Vector2::zeros();
    let c1 = circle.second_intersection(&origin, e1);
    let c2 = circle.second_intersection(&origin, &e2);
    // intersection of the line through the origin along b with c1c2
    let dir = c2 - c1;
    let cross = |x: &Vector2<f64>, y: &Vector2<f64>| x[0] * y[1] - x[1] * y[0];
    let den = cross(b, &dir);
    if den.abs() <= tol::GEOM * b.norm() * dir.norm() {
        return Err(SteeringError::InvalidParameter("chord parallel to pb".into()));
    }
    let s = cross(&c1, &dir) / den;
    Ok(b * s)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Smallest circle radius containing the tangent ellipse, by dense sampling.
    pub(crate) fn min_enclosing_radius(m: f64, n: f64, delta: f64) -> f64 {
        (1..4000)
            .map(|i| {
                let z = ellipse_point(
                    m,
                    n,
                    delta,
                    std::f64::consts::PI + i as f64 * std::f64::consts::TAU / 4000.0,
                );
                if z[0] > 1e-15 {
                    z.norm_squared() / (2.0 * z[0])
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn circle_conic_entries() {
        let c = Conic::circle(1.0);
        assert_eq!(*c.matrix(), Matrix3::new(1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0));
        for r in [0.3, 1.0, 2.5] {
            let c = Conic::circle(r);
            assert_eq!(c.value(&Vector2::zeros()), 0.0);
            assert_abs_diff_eq!(c.value(&Vector2::new(2.0 * r, 0.0)), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn equal_semiaxes_give_circle() {
        let (mu, nu, xi, g) = ellipse_coefficients(0.4, 0.4, 0.7);
        assert_abs_diff_eq!(mu, 0.0);
        assert_abs_diff_eq!(nu, 0.0);
        assert_abs_diff_eq!(xi, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(g, 0.4 * std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_eq!(ellipse_coefficients(0.5, 0.2, 0.0).1, 0.0);
    }

    #[test]
    fn ellipse_centre_is_stationary_point() {
        for (m, n, d) in [(0.5, 0.3, 0.4), (0.2, 0.6, -1.1), (0.7, 0.1, 1.5)] {
            let e = Conic::tangent_ellipse(m, n, d);
            let a = e.matrix();
            // ∇ = 0: upper 2×2 block times centre = −(a13, a23)
            let block = a.fixed_view::<2, 2>(0, 0).into_owned();
            let rhs = -Vector2::new(a[(0, 2)], a[(1, 2)]);
            let solved = block.lu().solve(&rhs).unwrap();
            assert_abs_diff_eq!((solved - ellipse_centre(m, n, d)).norm(), 0.0, epsilon = 1e-12);
            for i in 0..12 {
                assert_abs_diff_eq!(e.value(&ellipse_point(m, n, d, i as f64 * 0.5)), 0.0, epsilon = 1e-12);
            }
            // tangent to the v axis at the origin
            assert_eq!(e.value(&Vector2::zeros()), 0.0);
            assert_eq!(a[(1, 2)], 0.0);
        }
    }

    #[test]
    fn sphere_homology_is_diagonal() {
        let h = Homology::new(0.5, 0.5, 0.3, 1.0).unwrap();
        assert_abs_diff_eq!(h.alpha, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.beta, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.gamma, 0.5, epsilon = 1e-15);
        let img = h.apply(&Vector2::new(0.3, -0.1)).unwrap();
        assert_abs_diff_eq!((img - Vector2::new(0.6, -0.2)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn x_section_coefficients() {
        let (m, n) = (0.5_f64, 0.4_f64);
        let h = Homology::new(m, n, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(h.alpha, (m * m - n * n) / (2.0 * m * m), epsilon = 1e-14);
        assert_eq!(h.beta, 0.0);
        assert_abs_diff_eq!(h.gamma, n * n / m, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_are_one_one_gamma() {
        let h = Homology::new(0.45, 0.3, 0.35, 1.0).unwrap();
        let mut ev: Vec<f64> = h.matrix().complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let mut want = vec![1.0, 1.0, h.gamma];
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn escaping_ellipse_is_rejected() {
        assert!(matches!(
            Homology::new(0.9, 0.2, 0.0, 0.5),
            Err(SteeringError::NotNested(_))
        ));
    }

    #[test]
    fn origin_is_fixed_and_pole_is_at_infinity() {
        let h = Homology::new(0.5, 0.3, 0.2, 1.0).unwrap();
        assert_eq!(h.apply(&Vector2::zeros()).unwrap(), Vector2::zeros());
        assert_eq!(h.map_b_to_h(&Vector2::zeros()).unwrap(), Vector2::zeros());
        // a point on the vanishing line αu + βv + γ = 0
        let z = Vector2::new(-h.gamma / h.alpha, 0.0);
        assert_eq!(h.apply(&z), Err(SteeringError::AtInfinity));
    }

    #[test]
    fn inverse_pulls_back_circle_to_ellipse() {
        let (m, n, d, r) = (0.5, 0.3, 0.4, 0.95);
        let h = Homology::new(m, n, d, r).unwrap();
        let e = Conic::tangent_ellipse(m, n, d);
        let b = Conic::circle(r).pulled_back(&h.matrix());
        assert!(b.distance(&e) < 1e-12);
        for i in 0..16 {
            let c = Vector2::new(r, 0.0) + Vector2::new((i as f64).cos(), (i as f64).sin()) * r;
            if let Ok(x) = h.inverse_apply(&c) {
                assert_abs_diff_eq!(e.value(&x), 0.0, epsilon = 1e-12);
            }
        }
        // sphere case inverse is a uniform scaling by γ
        let s = Homology::new(0.4, 0.4, 0.0, 1.0).unwrap();
        let z = s.inverse_apply(&Vector2::new(1.0, 0.5)).unwrap();
        assert_abs_diff_eq!((z - Vector2::new(0.4, 0.2)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_section_b_on_axis() {
        let h = Homology::new(0.3, 0.3, 0.0, 1.0).unwrap();
        let b = Vector2::new(0.25, 0.0);
        let want = Vector2::new(0.25 / 0.3, 0.0);
        assert_abs_diff_eq!((h.map_b_to_h(&b).unwrap() - want).norm(), 0.0, epsilon = 1e-14);
        let e = Conic::tangent_ellipse(0.3, 0.3, 0.0);
        let got = chord_construction(&e, &Conic::circle(1.0), &ellipse_point(0.3, 0.3, 0.0, 1.0), &b).unwrap();
        assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-12);
    }

    fn nested_config() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (0.05f64..1.0, 0.05f64..1.0, -1.5f64..1.5, 0.01f64..2.0).prop_map(|(m, n, d, s)| {
            let (m, n) = if m >= n { (m, n) } else { (n, m) };
            (m, n, d, min_enclosing_radius(m, n, d) * (1.0 + s))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn transport_identity((m, n, d, r) in nested_config()) {
            let h = Homology::new(m, n, d, r).unwrap();
            let moved = Conic::tangent_ellipse(m, n, d).pulled_back(&h.inverse_matrix());
            prop_assert!(moved.distance(&Conic::circle(r)) < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_central_projection(
            (m, n, d, r) in nested_config(),
            u in -2.0f64..2.0,
            v in -2.0f64..2.0,
        ) {
            let h = Homology::new(m, n, d, r).unwrap();
            let z = Vector2::new(u, v);
            if let Ok(img) = h.apply(&z) {
                // origin, z and its image are collinear
                prop_assert!((z[0] * img[1] - z[1] * img[0]).abs() <= 1e-9 * (1.0 + img.norm()));
                if let Ok(back) = h.inverse_apply(&img) {
                    prop_assert!((back - z).norm() <= 1e-9 * (1.0 + z.norm()));
                }
            }
        }

        #[test]
        fn ellipse_points_land_on_circle((m, n, d, r) in nested_config(), t in 0.1f64..6.2) {
            let h = Homology::new(m, n, d, r).unwrap();
            let e = ellipse_point(m, n, d, t);
            let img = h.apply(&e).unwrap();
            prop_assert!(Conic::circle(r).value(&img).abs() <= 1e-9 * r * r);
        }

        #[test]
        fn collinearity_is_preserved(
            (m, n, d, r) in nested_config(),
            x in prop::array::uniform2(-1.0f64..1.0),
            y in prop::array::uniform2(-1.0f64..1.0),
            s in -1.0f64..2.0,
        ) {
            let h = Homology::new(m, n, d, r).unwrap();
            let (x, y) = (Vector2::from(x), Vector2::from(y));
            let z = x + (y - x) * s;
            let mx = h.matrix();
            let (hx, hy, hz) = (mx * hom(&x), mx * hom(&y), mx * hom(&z));
            let scale = hx.norm() * hy.norm() * hz.norm();
            prop_assert!(hx.cross(&hy).dot(&hz).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn chord_construction_is_independent_of_e1(
            (m, n, d, r) in nested_config(),
            s in 0.05f64..0.95,
            t in 0.0f64..std::f64::consts::TAU,
        ) {
            let h = Homology::new(m, n, d, r).unwrap();
            let e = Conic::tangent_ellipse(m, n, d);
            let c = Conic::circle(r);
            // b strictly inside: shrink a boundary point towards the centre
            let centre = ellipse_centre(m, n, d);
            let b = centre + (ellipse_point(m, n, d, t) - centre) * s;
            let want = h.map_b_to_h(&b).unwrap();
            let mut used = 0;
            for k in 0..12 {
                let e1 = ellipse_point(m, n, d, 0.3 + k as f64 * std::f64::consts::TAU / 12.0);
                // skip choices where the construction is ill-conditioned
                let e2 = e.second_intersection(&e1, &(b - e1));
                if e1.norm() < 1e-3 || e2.norm() < 1e-3 {
                    continue;
                }
                if let Ok(got) = chord_construction(&e, &c, &e1, &b) {
                    prop_assert!((got - want).norm() <= 1e-9 * (1.0 + want.norm()), "{got} vs {want}");
                    used += 1;
                }
            }
            prop_assert!(used >= 8);
        }
    }
}
