//! Steerability with one pure steered state: the per-plane test through the
//! planar homology, classification over the pencil of planes containing the
//! line `pb`, and bounds on the pure-state probability over all planes
//! through `p`.

use nalgebra::{Vector2, Vector3};

use crate::ellipsoid::{plane_section, tangency, PlaneSection, SteeringEllipsoid, TangencyStatus};
use crate::error::{Result, SteeringError};
use crate::paulicore::TwoQubitState;
use crate::projective::{Conic, Homology};
use crate::tol;

/// A steering ellipsoid with its contact point `p` on the Bloch sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentEllipsoid {
    ell: SteeringEllipsoid,
    p: Vector3<f64>,
    basis: [Vector3<f64>; 2],
}

impl TangentEllipsoid {
    /// Requires the ellipsoid to touch the sphere at exactly one point.
    pub fn new(ell: SteeringEllipsoid) -> Result<Self> {
        match tangency(&ell).status {
            TangencyStatus::SingleTangent { point } => Ok(Self::build(ell, Vector3::from(point))),
            _ => Err(SteeringError::NotSingleTangent),
        }
    }

    /// Uses `p` as the contact point. This admits ellipsoids that touch the
    /// sphere elsewhere too, such as the Bloch sphere itself.
    pub fn with_contact(ell: SteeringEllipsoid, p: Vector3<f64>) -> Result<Self> {
        let bad = || SteeringError::NotAContactPoint([p[0], p[1], p[2]]);
        if (p.norm() - 1.0).abs() > tol::GEOM {
            return Err(bad());
        }
        if ell.quadric_value(&p)?.abs() > 1e-7 || ell.farthest_point().norm > 1.0 + tol::CONTACT {
            return Err(bad());
        }
        Ok(Self::build(ell, p))
    }

    pub fn from_state(state: &TwoQubitState) -> Result<Self> {
        Self::new(crate::ellipsoid::steering_ellipsoid(state)?)
    }

    fn build(ell: SteeringEllipsoid, p: Vector3<f64>) -> Self {
        let basis = orthonormal_complement(&p);
        Self { ell, p, basis }
    }

    pub fn ellipsoid(&self) -> &SteeringEllipsoid {
        &self.ell
    }

    pub fn contact(&self) -> &Vector3<f64> {
        &self.p
    }

    /// Unit normal of the plane through `p` at polar angle `theta` from `p`
    /// and azimuth `phi` about it. `theta = 0` is the tangent plane; the
    /// section circle has radius `sin θ`.
    pub fn plane_normal(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let [e1, e2] = self.basis;
        self.p * theta.cos() + (e1 * phi.cos() + e2 * phi.sin()) * theta.sin()
    }

    pub fn section(&self, normal: &Vector3<f64>) -> Result<PlaneSection> {
        plane_section(&self.ell, &self.p, normal)
    }

    pub fn section_at(&self, theta: f64, phi: f64) -> Result<PlaneSection> {
        self.section(&self.plane_normal(theta, phi))
    }

    /// Normals of `count` planes evenly spread over the pencil containing
    /// the line from `p` to `b`.
    pub fn pencil_normals(&self, b: &Vector3<f64>, count: usize) -> Result<Vec<Vector3<f64>>> {
        let d = b - self.p;
        if d.norm() <= tol::GEOM {
            return Err(SteeringError::BAtContact);
        }
        Ok(pencil_about(&d, count))
    }
}

/// Normals of `count` planes evenly spread over the pencil containing `axis`.
fn pencil_about(axis: &Vector3<f64>, count: usize) -> Vec<Vector3<f64>> {
    let [w1, w2] = orthonormal_complement(axis);
    (0..count)
        .map(|i| {
            let psi = i as f64 * std::f64::consts::PI / count as f64;
            w1 * psi.cos() + w2 * psi.sin()
        })
        .collect()
}

/// Two unit vectors completing `v` to an orthonormal frame.
fn orthonormal_complement(v: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let v = v.normalize();
    let least = (0..3).min_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).unwrap_or(0);
    let e1 = v.cross(&Vector3::ith(least, 1.0)).normalize();
    let e2 = v.cross(&e1);
    [e1, e2]
}

/// Outcome of the per-plane test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneVerdict {
    pub section: PlaneSection,
    pub homology: Homology,
    pub b_local: Vector2<f64>,
    pub h_local: Vector2<f64>,
    pub steerable: bool,
    /// Positive exactly when the image `h` of `b` is strictly inside the ellipse.
    pub margin: f64,
}

impl PlaneVerdict {
    /// True when the margin is too close to zero to call.
    pub fn indeterminate(&self) -> bool {
        self.margin.abs() < tol::MARGIN_BAND
    }
}

/// `2R(γ² + β(1+γ)v)u − (1 − 2Rα(1+γ))u² − v²` for `b = (u, v)`.
pub fn margin(h: &Homology, b: &Vector2<f64>) -> f64 {
    let (u, v) = (b[0], b[1]);
    let (r, al, be, ga) = (h.radius, h.alpha, h.beta, h.gamma);
    2.0 * r * (ga * ga + be * (1.0 + ga) * v) * u - (1.0 - 2.0 * r * al * (1.0 + ga)) * u * u - v * v
}

/// Decides whether the two-setting assemblages in this plane steer, given
/// Bob's reduced state in the plane's local frame.
pub fn steerable_in_plane(section: &PlaneSection, b_local: &Vector2<f64>) -> Result<PlaneVerdict> {
    let homology = Homology::from_section(section)?;
    verdict_with(section, homology, b_local)
}

fn verdict_with(section: &PlaneSection, homology: Homology, b_local: &Vector2<f64>) -> Result<PlaneVerdict> {
    if section.needle {
        return Err(SteeringError::DegeneratePlane(section.n));
    }
    if !(section.ellipse_value(b_local) < 0.0) || b_local.norm() <= tol::GEOM {
        return Err(SteeringError::InvalidReducedState);
    }
    let h_local = homology.apply(b_local)?;
    let margin = margin(&homology, b_local);
    Ok(PlaneVerdict {
        section: *section,
        homology,
        b_local: *b_local,
        h_local,
        steerable: margin > 0.0,
        margin,
    })
}

/// Per-plane verdict for a 3D reduced state `b`, which must lie in the plane.
pub fn verdict_for_point(te: &TangentEllipsoid, normal: &Vector3<f64>, b: &Vector3<f64>) -> Result<PlaneVerdict> {
    let section = te.section(normal)?;
    if section.frame.offset(b).abs() > tol::GEOM {
        return Err(SteeringError::InvalidParameter("b is not in the cutting plane".into()));
    }
    steerable_in_plane(&section, &section.frame.to_local(b))
}

/// How the images of `b` over the pencil of planes containing `pb` sit
/// relative to the section ellipses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocusClass {
    /// Every second measurement steers.
    AllInside,
    /// Some second measurements steer and some do not.
    Crossing,
    /// No second measurement steers.
    AllOutside,
}

/// Verdicts for `samples` planes of the pencil containing the line `pb`.
pub fn pencil_verdicts(te: &TangentEllipsoid, b: &Vector3<f64>, samples: usize) -> Result<Vec<PlaneVerdict>> {
    check_reduced_state(te, b)?;
    te.pencil_normals(b, samples)?
        .iter()
        .map(|n| verdict_for_point(te, n, b))
        .collect()
}

/// Positions in 3D of the image of `b` under each plane's homology.
pub fn locus_of_h(te: &TangentEllipsoid, b: &Vector3<f64>, samples: usize) -> Result<Vec<Vector3<f64>>> {
    Ok(pencil_verdicts(te, b, samples)?
        .iter()
        .map(|v| v.section.frame.to_global(&v.h_local))
        .collect())
}

pub fn classify_locus(te: &TangentEllipsoid, b: &Vector3<f64>, samples: usize) -> Result<LocusClass> {
    let verdicts = pencil_verdicts(te, b, samples)?;
    let steering = verdicts.iter().filter(|v| v.steerable).count();
    Ok(if steering == verdicts.len() {
        LocusClass::AllInside
    } else if steering == 0 {
        LocusClass::AllOutside
    } else {
        LocusClass::Crossing
    })
}

fn check_reduced_state(te: &TangentEllipsoid, b: &Vector3<f64>) -> Result<()> {
    if (b - te.p).norm() <= tol::GEOM {
        return Err(SteeringError::BAtContact);
    }
    if !(te.ell.quadric_value(b)? < 0.0) {
        return Err(SteeringError::BOutsideEllipsoid);
    }
    Ok(())
}

/// Probability `1 − |pb|/|pq|` of steering to `p`, where `q` is the far
/// intersection of the line `pb` with the ellipsoid.
pub fn pure_state_probability(te: &TangentEllipsoid, b: &Vector3<f64>) -> Result<f64> {
    check_reduced_state(te, b)?;
    let m = te.ell.shape_inverse()?;
    let d = b - te.p;
    let t = -2.0 * (te.p - te.ell.centre()).dot(&(m * d)) / d.dot(&(m * d));
    Ok(1.0 - 1.0 / t)
}

/// Threshold `p(k, b_k)` for the line from `p` along `dir` in a plane with
/// homology `h`: reduced states on that line steer iff their pure-state
/// probability exceeds it. `dir = (1, k)` gives the slope form; `(0, 1)`
/// gives the limit `1 − γ`.
pub fn p_threshold(h: &Homology, dir: &Vector2<f64>) -> f64 {
    let (u, v) = (dir[0], dir[1]);
    let q = u * u + v * v;
    let lin = 2.0 * h.radius * u * (h.alpha * u + h.beta * v);
    (q * (1.0 - h.gamma) - lin) / (q - (1.0 + h.gamma) * lin)
}

/// `(min, max)` of [`p_threshold`] over all lines through `p` in the plane.
pub fn p_bounds_in_plane(section: &PlaneSection) -> Result<(f64, f64)> {
    Ok(bounds_for_homology(&Homology::from_section(section)?))
}

/// Closed-form extrema of the threshold over lines through `p`.
pub fn bounds_for_homology(h: &Homology) -> (f64, f64) {
    let (r, al, be, ga) = (h.radius, h.alpha, h.beta, h.gamma);
    if be == 0.0 {
        let limit = 1.0 - ga;
        let stationary = (1.0 - ga - 2.0 * r * al) / (1.0 - 2.0 * r * al * (1.0 + ga));
        return if al > 0.0 {
            (stationary, limit)
        } else if al < 0.0 {
            (limit, stationary)
        } else {
            (limit, limit)
        };
    }
    let root = (al * al + be * be).sqrt();
    let base = 1.0 - ga - r * r * be * be * (1.0 + ga) - r * al * (2.0 - ga * ga);
    let den = 1.0 - r * (1.0 + ga) * (2.0 * al + r * be * be * (1.0 + ga));
    let spread = r * ga * ga * root;
    let (lo, hi) = ((base - spread) / den, (base + spread) / den);
    (lo.min(hi), lo.max(hi))
}

/// Threshold extrema over the pencil of planes containing the line from `p`
/// along `direction`. A reduced state on that line steers with every second
/// measurement iff its pure-state probability exceeds `max`, and with some
/// second measurement iff it exceeds `min`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PencilThresholds {
    pub min: f64,
    pub max: f64,
}

pub fn pencil_thresholds(te: &TangentEllipsoid, direction: &Vector3<f64>, samples: usize) -> Result<PencilThresholds> {
    if direction.norm() <= tol::GEOM || direction.dot(&te.p) >= 0.0 {
        return Err(SteeringError::InvalidParameter(
            "direction must point into the ball".into(),
        ));
    }
    let mut out = PencilThresholds {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for n in pencil_about(direction, samples) {
        let section = te.section(&n)?;
        let h = Homology::from_section(&section)?;
        let local = Vector2::new(direction.dot(&section.frame.u), direction.dot(&section.frame.v));
        let t = p_threshold(&h, &local);
        out.min = out.min.min(t);
        out.max = out.max.max(t);
    }
    Ok(out)
}

/// Per-plane bounds at one grid point of the plane scan.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PlaneBounds {
    pub theta: f64,
    pub phi: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// Bounds on the pure-state probability over every plane through `p`.
///
/// If the probability exceeds `p_max`, every second measurement steers; if
/// it is at most `p_min`, none does.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProbBounds {
    pub p_min: f64,
    pub p_max: f64,
    /// `(θ, φ)` of the plane attaining `p_min`.
    pub argmin: (f64, f64),
    pub argmax: (f64, f64),
    /// False if the local refinement did not settle.
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_plane: Option<Vec<PlaneBounds>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub theta_steps: usize,
    pub phi_steps: usize,
    /// Angular tolerance of the golden-section refinement.
    pub refine_tol: f64,
    pub keep_table: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            theta_steps: 180,
            phi_steps: 360,
            refine_tol: 1e-10,
            keep_table: false,
        }
    }
}

fn plane_bounds(te: &TangentEllipsoid, theta: f64, phi: f64) -> Result<(f64, f64)> {
    let section = te.section_at(theta, phi)?;
    if section.needle {
        return Err(SteeringError::DegeneratePlane(section.n));
    }
    Ok(bounds_for_homology(&Homology::new_unchecked(
        section.m,
        section.n,
        section.delta,
        section.radius,
    )))
}

/// Scans planes through `p` on a `(θ, φ)` grid, then refines the extrema
/// by coordinate-wise golden-section search.
pub fn p_bounds(te: &TangentEllipsoid, opts: &ScanOptions) -> Result<ProbBounds> {
    if opts.theta_steps == 0 || opts.phi_steps == 0 {
        return Err(SteeringError::InvalidParameter("empty plane grid".into()));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let dtheta = half_pi / opts.theta_steps as f64;
    let dphi = std::f64::consts::TAU / opts.phi_steps as f64;
    let mut table = opts.keep_table.then(Vec::new);
    let (mut lo, mut hi) = ((f64::INFINITY, (0.0, 0.0)), (f64::NEG_INFINITY, (0.0, 0.0)));
    for i in 0..opts.theta_steps {
        let theta = (i + 1) as f64 * dtheta;
        for j in 0..opts.phi_steps {
            let phi = j as f64 * dphi;
            let (pmin, pmax) = plane_bounds(te, theta, phi)?;
            if pmin < lo.0 {
                lo = (pmin, (theta, phi));
            }
            if pmax > hi.0 {
                hi = (pmax, (theta, phi));
            }
            if let Some(t) = table.as_mut() {
                t.push(PlaneBounds {
                    theta,
                    phi,
                    p_min: pmin,
                    p_max: pmax,
                });
            }
        }
    }
    // thinner slivers than one grid step lose precision as the section shrinks
    let theta_range = (dtheta, half_pi);
    let (max_val, max_at, ok_max) = refine(
        |t, f| plane_bounds(te, t, f).map(|b| b.1),
        hi,
        dtheta,
        dphi,
        theta_range,
        opts.refine_tol,
    )?;
    let (neg_min, min_at, ok_min) = refine(
        |t, f| plane_bounds(te, t, f).map(|b| -b.0),
        (-lo.0, lo.1),
        dtheta,
        dphi,
        theta_range,
        opts.refine_tol,
    )?;
    Ok(ProbBounds {
        p_min: -neg_min,
        p_max: max_val,
        argmin: min_at,
        argmax: max_at,
        converged: ok_max && ok_min,
        per_plane: table,
    })
}

/// Maximizes `f(θ, φ)` near a grid optimum by alternating golden-section
/// searches on brackets one grid step wide. Never returns less than the
/// starting value.
fn refine(
    f: impl Fn(f64, f64) -> Result<f64>,
    start: (f64, (f64, f64)),
    dtheta: f64,
    dphi: f64,
    theta_range: (f64, f64),
    angle_tol: f64,
) -> Result<(f64, (f64, f64), bool)> {
    let (mut best, (mut theta, mut phi)) = start;
    for _ in 0..200 {
        let before = best;
        let (t_lo, t_hi) = ((theta - dtheta).max(theta_range.0), (theta + dtheta).min(theta_range.1));
        let (t_new, v_t) = golden_max(|t| f(t, phi), t_lo, t_hi, angle_tol)?;
        let mut moved = 0.0_f64;
        if v_t >= best {
            moved = moved.max((t_new - theta).abs());
            best = v_t;
            theta = t_new;
        }
        let (f_new, v_f) = golden_max(|x| f(theta, x), phi - dphi, phi + dphi, angle_tol)?;
        if v_f >= best {
            moved = moved.max((f_new - phi).abs());
            best = v_f;
            phi = f_new;
        }
        // flat directions never stop moving, so stalled values also count
        if moved <= 10.0 * angle_tol || best - before <= 1e-15 * best.abs().max(1.0) {
            return Ok((best, (theta, phi.rem_euclid(std::f64::consts::TAU)), true));
        }
    }
    Ok((best, (theta, phi.rem_euclid(std::f64::consts::TAU)), false))
}

/// Golden-section maximization on `[lo, hi]`, including both endpoints.
fn golden_max(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, tol_x: f64) -> Result<(f64, f64)> {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol_x {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc > fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Ellipses bounding the steerable reduced states in a plane: states inside
/// `A` steer for every line through `p`, states outside `D` for none.
pub fn shrunken_ellipses(section: &PlaneSection) -> Result<(Conic, Conic)> {
    let (p_lo, p_hi) = p_bounds_in_plane(section)?;
    let e = Conic::tangent_ellipse(section.m, section.n, section.delta);
    let shrink = |p: f64| e.pulled_back(&nalgebra::Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 1.0 - p)));
    Ok((shrink(p_hi), shrink(p_lo)))
}
