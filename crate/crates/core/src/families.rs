//! State families with closed-form steering criteria: tangent X-states,
//! maximally obese states, tangent spheres and spheroids.

use nalgebra::{Matrix3, Vector3};

use crate::ellipsoid::SteeringEllipsoid;
use crate::error::{Result, SteeringError};
use crate::paulicore::{state_from_pauli, TwoQubitState};
use crate::tol;

/// X-state with `a = (0,0,a)`, `b = (0,0,b)`, `T = diag(t_x, t_y, 1+a−b)`.
/// Its steering ellipsoid touches the Bloch sphere at the north pole, and
/// also at the south pole when `a = b`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TangentXParams {
    pub a: f64,
    pub b: f64,
    pub t_x: f64,
    pub t_y: f64,
}

impl TangentXParams {
    pub fn new(a: f64, b: f64, t_x: f64, t_y: f64) -> Self {
        Self { a, b, t_x, t_y }
    }

    pub fn t_z(&self) -> f64 {
        1.0 + self.a - self.b
    }

    fn pauli(&self) -> (Vector3<f64>, Vector3<f64>, Matrix3<f64>) {
        (
            Vector3::new(0.0, 0.0, self.a),
            Vector3::new(0.0, 0.0, self.b),
            Matrix3::from_diagonal(&Vector3::new(self.t_x, self.t_y, self.t_z())),
        )
    }

    /// `τ_θ` for the plane containing the z axis at angle `theta` from x.
    pub fn tau(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        (self.t_x * self.t_y).abs() / (self.t_x * self.t_x * s * s + self.t_y * self.t_y * c * c).sqrt()
    }

    fn check(&self) -> Result<()> {
        let ok = [self.a, self.b, self.t_x, self.t_y].iter().all(|x| x.is_finite()) && self.a.abs() < 1.0;
        if !ok {
            return Err(SteeringError::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Semiaxes of a tangent X-state ellipsoid, with `n_x ≥ n_y`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct XGeometry {
    /// Semiaxis along z, towards the contact point.
    pub m: f64,
    pub n_x: f64,
    pub n_y: f64,
}

pub fn x_state_geometry(params: &TangentXParams) -> Result<XGeometry> {
    params.check()?;
    let s = (1.0 - params.a * params.a).sqrt();
    let (hi, lo) = if params.t_x.abs() >= params.t_y.abs() {
        (params.t_x, params.t_y)
    } else {
        (params.t_y, params.t_x)
    };
    Ok(XGeometry {
        m: (1.0 - params.b) / (1.0 - params.a),
        n_x: hi.abs() / s,
        n_y: lo.abs() / s,
    })
}

/// The X-state ellipsoid, whether or not the parameters are a valid state.
pub fn x_state_ellipsoid(params: &TangentXParams) -> Result<SteeringEllipsoid> {
    params.check()?;
    let (a, b, t) = params.pauli();
    SteeringEllipsoid::from_pauli(&a, &b, &t)
}

pub fn tangent_x_state(params: &TangentXParams) -> Result<TwoQubitState> {
    params.check()?;
    let (a, b, t) = params.pauli();
    state_from_pauli(a, b, t)
}

/// Both forms of the X-state steering test in the plane at angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct XVerdict {
    /// `τ_θ² > (1−b)(b−a)`.
    pub algebraic: bool,
    /// `1−b < 2m n_θ²/(n_θ² + m − m²)`.
    pub geometric: bool,
    /// `τ_θ² − (1−b)(b−a)`.
    pub margin: f64,
}

impl XVerdict {
    pub fn agree(&self) -> bool {
        self.algebraic == self.geometric
    }
}

pub fn x_state_steerable(params: &TangentXParams, theta: f64) -> Result<XVerdict> {
    params.check()?;
    let tau = params.tau(theta);
    let margin = tau * tau - (1.0 - params.b) * (params.b - params.a);
    let m = (1.0 - params.b) / (1.0 - params.a);
    let n2 = tau * tau / (1.0 - params.a * params.a);
    Ok(XVerdict {
        algebraic: margin > 0.0,
        geometric: 1.0 - params.b < 2.0 * m * n2 / (n2 + m - m * m),
        margin,
    })
}

/// Position on the u axis of the image of `b` in the plane at angle `theta`.
pub fn x_state_locus_point(params: &TangentXParams, theta: f64) -> f64 {
    let tau = params.tau(theta);
    let d = (1.0 - params.b).powi(2);
    2.0 * d / (tau * tau + d)
}

/// Pure-state-probability thresholds along the z axis: with `b` on the axis,
/// every second measurement steers above `.1` and some do above `.0`.
pub fn x_state_p_bounds(params: &TangentXParams) -> Result<(f64, f64)> {
    let g = x_state_geometry(params)?;
    if g.n_y <= tol::GEOM || g.m <= tol::GEOM {
        return Err(SteeringError::ZeroVolume);
    }
    let k = g.m * (1.0 - g.m);
    Ok((k / (k + g.n_x * g.n_x), k / (k + g.n_y * g.n_y)))
}

/// Maximally obese state with ellipsoid centre `(0, 0, c)`.
pub fn obese_state(c: f64) -> Result<TwoQubitState> {
    if !(0.0..1.0).contains(&c) {
        return Err(SteeringError::InvalidParameter(format!("c = {c} outside [0, 1)")));
    }
    use crate::paulicore::C64;
    let norm = (2.0 - c).sqrt();
    let mut psi = nalgebra::Vector4::<C64>::zeros();
    psi[1] = C64::new((1.0 - c).sqrt() / norm, 0.0);
    psi[2] = C64::new(1.0 / norm, 0.0);
    let mut rho = psi * psi.adjoint() * C64::new(1.0 - c / 2.0, 0.0);
    rho[(0, 0)] += C64::new(c / 2.0, 0.0);
    TwoQubitState::from_density_matrix(&rho)
}

/// Whether the maximally obese state with centre `c` steers with one pure
/// steered state: always, unless the ellipsoid is a point.
pub fn obese_steerable(c: f64) -> bool {
    (0.0..1.0).contains(&c)
}

/// Threshold on the pure-state probability for a tangent sphere of radius `r`.
pub fn sphere_threshold(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(SteeringError::InvalidParameter(format!(
            "sphere radius {r} outside (0, 1)"
        )));
    }
    Ok(1.0 - r)
}

/// Reduced states inside this sphere steer with every second measurement.
pub fn inner_sphere(r: f64) -> Result<(Vector3<f64>, f64)> {
    sphere_threshold(r)?;
    Ok((Vector3::new(0.0, 0.0, 1.0 - r * r), r * r))
}

/// Canonical state whose ellipsoid is a spheroid touching the north pole:
/// semiaxis `m` along z and `n` across. If `b` is given, Alice's side is
/// filtered so Bob's Bloch vector is `b`; the ellipsoid does not change.
pub fn spheroid_state(m: f64, n: f64, b: Option<Vector3<f64>>) -> Result<TwoQubitState> {
    if !(m > 0.0 && m < 1.0 && n > 0.0 && n * n <= m + tol::GEOM) {
        return Err(SteeringError::InvalidSemiaxes { m, n });
    }
    let centre = Vector3::new(0.0, 0.0, 1.0 - m);
    let t = Matrix3::from_diagonal(&Vector3::new(n, -n, m));
    let state = state_from_pauli(Vector3::zeros(), centre, t)?;
    let Some(b) = b else { return Ok(state) };
    let ell = SteeringEllipsoid::from_pauli(state.a(), state.b(), state.t())?;
    if !(ell.quadric_value(&b)? < 0.0) {
        return Err(SteeringError::BOutsideEllipsoid);
    }
    let alpha = Vector3::new((b[0] - centre[0]) / n, -(b[1] - centre[1]) / n, (b[2] - centre[2]) / m);
    state.with_alice_bloch(&alpha)
}

/// Tangent sphere of radius `r` touching the north pole.
pub fn tangent_sphere_state(r: f64, b: Option<Vector3<f64>>) -> Result<TwoQubitState> {
    sphere_threshold(r)?;
    spheroid_state(r, r, b)
}

/// `(p_min, p_max)` over all planes for the spheroid `(m, n)`.
pub fn spheroid_p_bounds(m: f64, n: f64) -> Result<(f64, f64)> {
    if !(m > 0.0 && m < 1.0 && n > 0.0 && n * n <= m + tol::GEOM) {
        return Err(SteeringError::InvalidSemiaxes { m, n });
    }
    let limit = 1.0 - n * n / m;
    let k = m * (1.0 - m);
    let axis = k / (k + n * n);
    Ok(if m > n {
        (axis, limit)
    } else if m < n {
        (limit, axis)
    } else {
        (1.0 - m, 1.0 - m)
    })
}
