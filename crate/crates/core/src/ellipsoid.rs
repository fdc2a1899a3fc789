//! Bob's quantum steering ellipsoid, its contact with the Bloch sphere, and
//! plane sections through the contact point.

use nalgebra::{Complex, Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector2, Vector3};

use crate::error::{Result, SteeringError};
use crate::paulicore::{setting_for_surface_point, SteeringSetting, TwoQubitState};
use crate::quartic;
use crate::tol;

/// The steering ellipsoid `{x : (x−c)ᵀ Q⁻¹ (x−c) = 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringEllipsoid {
    centre: Vector3<f64>,
    q: Matrix3<f64>,
    semiaxes: [f64; 3],
    axes: Matrix3<f64>,
    shape_inv: Option<Matrix3<f64>>,
}

/// Computes the centre and orientation matrix of Bob's steering ellipsoid.
pub fn steering_ellipsoid(state: &TwoQubitState) -> Result<SteeringEllipsoid> {
    SteeringEllipsoid::from_pauli(state.a(), state.b(), state.t())
}

impl SteeringEllipsoid {
    /// Ellipsoid geometry for arbitrary Pauli parameters, physical or not.
    pub fn from_pauli(a: &Vector3<f64>, b: &Vector3<f64>, t: &Matrix3<f64>) -> Result<Self> {
        let gamma = 1.0 - a.norm_squared();
        if gamma <= tol::GEOM {
            return Err(SteeringError::AliceReducedPure);
        }
        let centre = (b - t.transpose() * a) / gamma;
        let shifted = t - a * b.transpose();
        let metric = Matrix3::identity() + a * a.transpose() / gamma;
        let q = shifted.transpose() * metric * shifted / gamma;
        Ok(Self::from_orientation_matrix(centre, q))
    }

    /// Builds the ellipsoid from its centre and a symmetric PSD orientation
    /// matrix whose eigenvalues are the squared semiaxes.
    pub fn from_orientation_matrix(centre: Vector3<f64>, q: Matrix3<f64>) -> Self {
        let q = (q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(q);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mut axes = Matrix3::zeros();
        let mut semiaxes = [0.0; 3];
        for (k, &i) in order.iter().enumerate() {
            semiaxes[k] = eig.eigenvalues[i].max(0.0).sqrt();
            axes.set_column(k, &eig.eigenvectors.column(i));
        }
        if axes.determinant() < 0.0 {
            let flipped = -axes.column(2);
            axes.set_column(2, &flipped);
        }
        Self::assemble(centre, q, semiaxes, axes)
    }

    /// Builds the ellipsoid from geometry: `axes` holds unit semiaxis
    /// directions as columns, matched to `semiaxes`.
    pub fn from_geometry(centre: Vector3<f64>, semiaxes: [f64; 3], axes: Matrix3<f64>) -> Result<Self> {
        if semiaxes.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SteeringError::InvalidParameter(format!("semiaxes {semiaxes:?}")));
        }
        let orth = (axes.transpose() * axes - Matrix3::identity()).norm();
        if orth > 1e-9 {
            return Err(SteeringError::InvalidParameter("axes are not orthonormal".into()));
        }
        let q = axes * Matrix3::from_diagonal(&Vector3::from(semiaxes.map(|s| s * s))) * axes.transpose();
        Ok(Self::from_orientation_matrix(centre, q))
    }

    fn assemble(centre: Vector3<f64>, q: Matrix3<f64>, semiaxes: [f64; 3], axes: Matrix3<f64>) -> Self {
        let shape_inv = (semiaxes[2] > tol::GEOM).then(|| {
            let inv = Vector3::from(semiaxes.map(|s| 1.0 / (s * s)));
            axes * Matrix3::from_diagonal(&inv) * axes.transpose()
        });
        Self {
            centre,
            q,
            semiaxes,
            axes,
            shape_inv,
        }
    }

    pub fn centre(&self) -> &Vector3<f64> {
        &self.centre
    }

    /// Orientation matrix `Q`.
    pub fn q(&self) -> &Matrix3<f64> {
        &self.q
    }

    /// Semiaxis lengths, descending.
    pub fn semiaxes(&self) -> [f64; 3] {
        self.semiaxes
    }

    /// Unit semiaxis directions as columns, right-handed, matched to
    /// [`semiaxes`](Self::semiaxes).
    pub fn axes(&self) -> &Matrix3<f64> {
        &self.axes
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.semiaxes.iter().product::<f64>()
    }

    /// True when the smallest semiaxis is at or below `tol::GEOM`.
    pub fn is_zero_volume(&self) -> bool {
        self.shape_inv.is_none()
    }

    /// `Q⁻¹`, available when the ellipsoid has nonzero volume.
    pub fn shape_inverse(&self) -> Result<&Matrix3<f64>> {
        self.shape_inv.as_ref().ok_or(SteeringError::ZeroVolume)
    }

    /// `(x−c)ᵀ Q⁻¹ (x−c) − 1`: negative inside, zero on the surface.
    pub fn quadric_value(&self, x: &Vector3<f64>) -> Result<f64> {
        let d = x - self.centre;
        Ok(d.dot(&(self.shape_inverse()? * d)) - 1.0)
    }

    /// Surface point `c + Σ sᵢ yᵢ eᵢ` for a unit vector `y` in the principal frame.
    pub fn surface_point(&self, y: &Vector3<f64>) -> Vector3<f64> {
        self.centre
            + self.axes
                * Vector3::new(
                    self.semiaxes[0] * y[0],
                    self.semiaxes[1] * y[1],
                    self.semiaxes[2] * y[2],
                )
    }

    /// Homogeneous 4×4 quadric matrix, negative on the interior.
    pub fn homogeneous(&self) -> Result<Matrix4<f64>> {
        let m = self.shape_inverse()?;
        let mc = m * self.centre;
        let mut e = Matrix4::zeros();
        e.fixed_view_mut::<3, 3>(0, 0).copy_from(m);
        for i in 0..3 {
            e[(i, 3)] = -mc[i];
            e[(3, i)] = -mc[i];
        }
        e[(3, 3)] = self.centre.dot(&mc) - 1.0;
        Ok(e)
    }

    /// Roots of `χ(κ) = det(κS − E)` with `S = diag(1,1,1,−1)` the Bloch sphere,
    /// taken as eigenvalues of `S E`. Going through the polynomial would split
    /// every double root by `√ε`, including the semisimple ones.
    pub fn characteristic_roots(&self) -> Result<[Complex<f64>; 4]> {
        let e = self.homogeneous()?;
        let s = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        // det(κS − E) = det(S) det(κI − S E)
        let ev = (s * e).complex_eigenvalues();
        let mut roots = [ev[0], ev[1], ev[2], ev[3]];
        roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        Ok(roots)
    }

    /// Coefficients `[c0, c1, c2, c3]` of the monic `χ(κ)`.
    pub fn characteristic_polynomial(&self) -> Result<[f64; 4]> {
        let e = self.homogeneous()?;
        let s = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        Ok(quartic::char_poly(&(s * e)))
    }

    /// Farthest points of the surface from the origin.
    ///
    /// Maximizes `|c + A y|` over unit `y` through the secular equation
    /// `Σ gᵢ²/(λ − sᵢ²)² = 1`, `gᵢ = sᵢ (Rᵀc)ᵢ`. When the maximizer is not
    /// unique the reported point is the midpoint of the maximizer set and
    /// `spread` is that set's diameter.
    pub fn farthest_point(&self) -> FarthestPoint {
        let w = self.axes.transpose() * self.centre;
        let s = self.semiaxes;
        let g = [s[0] * w[0], s[1] * w[1], s[2] * w[2]];
        let top = s[0] * s[0];
        let gap = [0.0, top - s[1] * s[1], top - s[2] * s[2]];
        let in_top: [bool; 3] = std::array::from_fn(|i| gap[i] <= 1e-12 * top.max(f64::MIN_POSITIVE));
        let g_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let g_top = (0..3).filter(|&i| in_top[i]).map(|i| g[i] * g[i]).sum::<f64>().sqrt();

        let secular = |mu: f64, skip_top: bool| -> f64 {
            (0..3)
                .filter(|&i| !(skip_top && in_top[i]))
                .map(|i| {
                    let d = mu + gap[i];
                    g[i] * g[i] / (d * d)
                })
                .sum()
        };
        let solve = |skip_top: bool| -> f64 {
            // f decreases on (0, |g|] and f(|g|) ≤ 1
            let (mut lo, mut hi) = (0.0_f64, g_norm.max(f64::MIN_POSITIVE));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if secular(mid, skip_top) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };

        let mut y = Vector3::zeros();
        if g_top > 1e-12 * g_norm.max(1.0) {
            let mu = solve(false);
            for i in 0..3 {
                y[i] = g[i] / (mu + gap[i]);
            }
        } else if secular(0.0, true) < 1.0 {
            let mut used = 0.0;
            for i in 0..3 {
                if !in_top[i] {
                    y[i] = g[i] / gap[i];
                    used += y[i] * y[i];
                }
            }
            let rest = (1.0 - used).max(0.0).sqrt();
            let spread = 2.0 * s[0] * rest;
            // every maximizer has the same norm; the midpoint does not
            let mut sq = 0.0;
            for i in 0..3 {
                let x = w[i] + s[i] * y[i];
                sq += x * x;
            }
            let point = self.surface_point(&y);
            return FarthestPoint {
                point,
                norm: (sq + (s[0] * rest).powi(2)).sqrt(),
                spread,
            };
        } else {
            let mu = solve(true);
            for i in 0..3 {
                if !in_top[i] {
                    y[i] = g[i] / (mu + gap[i]);
                }
            }
        }
        let point = self.surface_point(&y);
        FarthestPoint {
            point,
            norm: point.norm(),
            spread: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarthestPoint {
    pub point: Vector3<f64>,
    pub norm: f64,
    pub spread: f64,
}

/// How the ellipsoid touches the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TangencyStatus {
    SingleTangent { point: [f64; 3] },
    NoContact,
    MultiTangent,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TangencyReport {
    /// Real parts of the roots of `χ(κ)`, ascending.
    pub roots: [f64; 4],
    /// Largest imaginary part among the roots, relative to the largest root.
    pub max_imag: f64,
    /// Whether `0 < κ₁ = κ₂ ≤ κ₃ ≤ κ₄` holds at `tol::ROOT`.
    pub root_pattern: bool,
    pub status: TangencyStatus,
    /// `max |x|` over the ellipsoid surface.
    pub max_norm: f64,
    /// Setting and outcome that steer to the contact point, when known.
    pub setting: Option<SteeringSetting>,
}

impl TangencyReport {
    pub fn contact_point(&self) -> Option<Vector3<f64>> {
        match self.status {
            TangencyStatus::SingleTangent { point } => Some(Vector3::from(point)),
            _ => None,
        }
    }
}

/// Classifies the contact between the ellipsoid and the Bloch sphere.
///
/// Contact is decided geometrically from the farthest surface point; the
/// quartic roots are reported alongside. The root pattern alone cannot
/// separate a single osculating contact from the whole sphere: both give a
/// fourfold root.
pub fn tangency(ell: &SteeringEllipsoid) -> TangencyReport {
    let far = ell.farthest_point();
    let roots = ell.characteristic_roots().ok();
    let (re, max_imag, pattern) = match roots {
        Some(r) => {
            let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let max_imag = r.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
            let re = [r[0].re, r[1].re, r[2].re, r[3].re];
            let pattern = re[0] > 0.0 && (r[1] - r[0]).norm() <= tol::ROOT * r[0].norm();
            (re, max_imag, pattern)
        }
        None => ([f64::NAN; 4], f64::NAN, false),
    };
    let status = if ell.is_zero_volume() || max_imag > 1e-3 || far.norm > 1.0 + tol::CONTACT {
        TangencyStatus::Degenerate
    } else if far.norm < 1.0 - tol::CONTACT {
        TangencyStatus::NoContact
    } else if far.spread > tol::CONTACT_SPREAD {
        TangencyStatus::MultiTangent
    } else {
        let p = far.point / far.norm;
        TangencyStatus::SingleTangent {
            point: [p[0], p[1], p[2]],
        }
    };
    TangencyReport {
        roots: re,
        max_imag,
        root_pattern: pattern,
        status,
        max_norm: far.norm,
        setting: None,
    }
}

/// [`tangency`] for a state's ellipsoid, with the steering setting filled in.
pub fn tangency_for_state(state: &TwoQubitState) -> Result<(SteeringEllipsoid, TangencyReport)> {
    let ell = steering_ellipsoid(state)?;
    let mut report = tangency(&ell);
    if let Some(p) = report.contact_point() {
        report.setting = Some(setting_for_surface_point(state, &p)?);
    }
    Ok((ell, report))
}

/// Orthonormal frame in a plane through a point `p` of the unit sphere.
///
/// The origin is `p`, and `u` points from `p` to the centre of the circle
/// the plane cuts from the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: Vector3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub normal: Vector3<f64>,
    /// Radius of the circle cut from the unit sphere.
    pub radius: f64,
}

impl PlaneFrame {
    /// Frame for the plane `{x : normal·(x − p) = 0}`; `p` must be a unit vector.
    pub fn through(p: &Vector3<f64>, normal: &Vector3<f64>) -> Result<Self> {
        let nn = normal.norm();
        if !(nn > 0.0) {
            return Err(SteeringError::InvalidParameter("zero plane normal".into()));
        }
        let normal = normal / nn;
        let d = normal.dot(p);
        let to_centre = normal * d - p;
        let radius = to_centre.norm();
        if radius <= tol::GEOM {
            return Err(SteeringError::TangentPlane);
        }
        let u = to_centre / radius;
        let v = normal.cross(&u);
        Ok(Self {
            origin: *p,
            u,
            v,
            normal,
            radius,
        })
    }

    pub fn to_local(&self, x: &Vector3<f64>) -> Vector2<f64> {
        let d = x - self.origin;
        Vector2::new(d.dot(&self.u), d.dot(&self.v))
    }

    pub fn to_global(&self, z: &Vector2<f64>) -> Vector3<f64> {
        self.origin + self.u * z[0] + self.v * z[1]
    }

    /// Signed distance of `x` from the plane.
    pub fn offset(&self, x: &Vector3<f64>) -> f64 {
        (x - self.origin).dot(&self.normal)
    }
}

/// Cross-section of the Bloch ball and the steering ellipsoid by a plane
/// through the contact point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSection {
    pub frame: PlaneFrame,
    /// Radius of the circle, centred at `(R, 0)` in the local frame.
    pub radius: f64,
    /// Semiaxis along `(cos δ, sin δ)`, the longer one.
    pub m: f64,
    /// Semiaxis along `(−sin δ, cos δ)`.
    pub n: f64,
    /// Tilt of the `m` axis from the local `u` axis, in `(−π/2, π/2]`.
    pub delta: f64,
    /// Ellipse centre in the local frame.
    pub centre: Vector2<f64>,
    /// Set when the ellipse collapses (`n ≤ tol::GEOM`).
    pub needle: bool,
}

impl PlaneSection {
    /// Local point of the ellipse at parameter `t`.
    pub fn ellipse_point(&self, t: f64) -> Vector2<f64> {
        let (sd, cd) = self.delta.sin_cos();
        let (st, ct) = t.sin_cos();
        self.centre + Vector2::new(cd, sd) * (self.m * ct) + Vector2::new(-sd, cd) * (self.n * st)
    }

    /// Normalized ellipse equation: negative strictly inside.
    pub fn ellipse_value(&self, z: &Vector2<f64>) -> f64 {
        let (sd, cd) = self.delta.sin_cos();
        let d = z - self.centre;
        let along = d[0] * cd + d[1] * sd;
        let across = -d[0] * sd + d[1] * cd;
        (along / self.m).powi(2) + (across / self.n).powi(2) - 1.0
    }
}

/// Cuts the ellipsoid and the Bloch sphere with the plane through `p`
/// normal to `plane_normal`.
///
/// The ellipse comes from restricting the quadric to the plane, so it is
/// exact for any `p` on the ellipsoid surface, not only at the contact point.
pub fn plane_section(ell: &SteeringEllipsoid, p: &Vector3<f64>, plane_normal: &Vector3<f64>) -> Result<PlaneSection> {
    let frame = PlaneFrame::through(p, plane_normal)?;
    section_in_frame(ell, frame)
}

pub(crate) fn section_in_frame(ell: &SteeringEllipsoid, frame: PlaneFrame) -> Result<PlaneSection> {
    let m = ell.shape_inverse()?;
    let d0 = frame.origin - ell.centre;
    let mu = m * frame.u;
    let mv = m * frame.v;
    let k = Matrix2::new(frame.u.dot(&mu), frame.u.dot(&mv), frame.v.dot(&mu), frame.v.dot(&mv));
    let g = Vector2::new(mu.dot(&d0), mv.dot(&d0));
    let mut k0 = d0.dot(&(m * d0)) - 1.0;
    // an origin on the surface within tolerance is put exactly on it, so
    // the section ellipse passes through the origin
    if k0.abs() <= tol::GEOM {
        k0 = 0.0;
    }
    let det = k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)];
    if !(det > 0.0) {
        return Err(SteeringError::EmptySection);
    }
    let centre = -Vector2::new(k[(1, 1)] * g[0] - k[(0, 1)] * g[1], k[(0, 0)] * g[1] - k[(1, 0)] * g[0]) / det;
    let level = centre.dot(&(k * centre)) - k0;
    if !(level > 0.0) {
        return Err(SteeringError::EmptySection);
    }
    // eigen-decomposition of the 2×2 shape K / level, closed form
    let (a, b, c) = (k[(0, 0)] / level, k[(0, 1)] / level, k[(1, 1)] / level);
    let half_tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lam_small = half_tr - disc;
    let lam_large = half_tr + disc;
    let major = 1.0 / lam_small.sqrt();
    let minor = 1.0 / lam_large.sqrt();
    // eigenvector of lam_small
    let mut delta = if disc == 0.0 {
        0.0
    } else {
        0.5 * (2.0 * b).atan2(a - c) + std::f64::consts::FRAC_PI_2
    };
    if delta > std::f64::consts::FRAC_PI_2 {
        delta -= std::f64::consts::PI;
    } else if delta <= -std::f64::consts::FRAC_PI_2 {
        delta += std::f64::consts::PI;
    }
    Ok(PlaneSection {
        frame,
        radius: frame.radius,
        m: major,
        n: minor,
        delta,
        centre,
        needle: minor <= tol::GEOM,
    })
}
