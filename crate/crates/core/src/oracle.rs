//! Direct geometric test of two-setting assemblages with one pure steered
//! state: the triangle criterion and an explicit search for a local hidden
//! state model. Nothing here goes through the planar homology.

use nalgebra::{Vector2, Vector3};

use crate::ellipsoid::PlaneFrame;
use crate::error::{Result, SteeringError};
use crate::paulicore::{steered_ensemble, Outcome, TwoQubitState};
use crate::tol;

/// Two-setting assemblage in which the first setting steers to a pure state.
///
/// Points are in the local frame of their common plane, origin at the pure
/// state `p`. Setting 0 outcome `+` is the pure one after relabelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage1PQA {
    pub frame: PlaneFrame,
    /// Which physical outcome of setting 0 gave the pure state.
    pub pure_outcome: Outcome,
    /// `s_{−|0}`, the mixed state of setting 0.
    pub s_minus0: Vector2<f64>,
    /// `s_{+|1}`, `s_{−|1}`.
    pub s1: [Vector2<f64>; 2],
    /// `[[p_{+|0}, p_{−|0}], [p_{+|1}, p_{−|1}]]`.
    pub probs: [[f64; 2]; 2],
    /// Bob's reduced state.
    pub b: Vector2<f64>,
}

impl Assemblage1PQA {
    pub fn p(&self) -> Vector2<f64> {
        Vector2::zeros()
    }

    /// Largest violation of no-signalling and normalization.
    pub fn no_signalling_residual(&self) -> f64 {
        let [[pp0, pm0], [pp1, pm1]] = self.probs;
        let b0 = self.s_minus0 * pm0;
        let b1 = self.s1[0] * pp1 + self.s1[1] * pm1;
        (b0 - b1)
            .norm()
            .max((b0 - self.b).norm())
            .max((pp0 + pm0 - 1.0).abs())
            .max((pp1 + pm1 - 1.0).abs())
    }
}

/// Bob's steered states for Alice measuring along `axis0` and `axis1`,
/// which must steer to exactly one pure state, from `axis0`.
pub fn assemblage_from_measurements(
    state: &TwoQubitState,
    axis0: &Vector3<f64>,
    axis1: &Vector3<f64>,
) -> Result<Assemblage1PQA> {
    let e0 = steered_ensemble(state, axis0)?;
    let e1 = steered_ensemble(state, axis1)?;
    let is_pure = |s: &Vector3<f64>| s.norm() >= 1.0 - tol::CONTACT;
    let pure0: Vec<Outcome> = Outcome::BOTH.into_iter().filter(|&r| is_pure(e0.state(r))).collect();
    let pure_outcome = match pure0.as_slice() {
        [] => return Err(SteeringError::NoPureState),
        [r] => *r,
        _ => return Err(SteeringError::MultiplePureStates),
    };
    let mixed = pure_outcome.flipped();
    let p = *e0.state(pure_outcome);
    let s_m0 = *e0.state(mixed);
    let (sp1, sm1) = (*e1.state(Outcome::Plus), *e1.state(Outcome::Minus));
    let normal = (s_m0 - p).cross(&(sp1 - sm1));
    if normal.norm() <= tol::GEOM * (s_m0 - p).norm().max(tol::GEOM) * (sp1 - sm1).norm().max(tol::GEOM)
        || (sp1 - sm1).norm() <= tol::GEOM
    {
        return Err(SteeringError::CollinearSteeredStates);
    }
    if is_pure(&sp1) || is_pure(&sm1) {
        return Err(SteeringError::MultiplePureStates);
    }
    let frame = PlaneFrame::through(&(p / p.norm()), &normal)?;
    Ok(Assemblage1PQA {
        frame,
        pure_outcome,
        s_minus0: frame.to_local(&s_m0),
        s1: [frame.to_local(&sp1), frame.to_local(&sm1)],
        probs: [
            [e0.prob(pure_outcome), e0.prob(mixed)],
            [e1.prob(Outcome::Plus), e1.prob(Outcome::Minus)],
        ],
        b: frame.to_local(state.b()),
    })
}

fn cross2(x: &Vector2<f64>, y: &Vector2<f64>) -> f64 {
    x[0] * y[1] - x[1] * y[0]
}

/// Far intersection of the ray from `p` along `d` with the section circle.
fn circle_hit(radius: f64, d: &Vector2<f64>) -> Vector2<f64> {
    d * (2.0 * radius * d[0] / d.norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleVerdict {
    pub steerable: bool,
    pub c1: Vector2<f64>,
    pub c2: Vector2<f64>,
    /// Smallest signed distance from `s_{−|0}` to an edge of `p c₁ c₂`,
    /// positive inside the triangle.
    pub depth: f64,
}

/// Steerable iff `s_{−|0}` lies strictly outside the triangle `p c₁ c₂`,
/// where `c₁`, `c₂` extend `p s_{±|1}` to the section circle.
pub fn triangle_criterion(asm: &Assemblage1PQA) -> TriangleVerdict {
    let r = asm.frame.radius;
    let c1 = circle_hit(r, &asm.s1[0]);
    let c2 = circle_hit(r, &asm.s1[1]);
    let depth = triangle_depth(&asm.p(), &c1, &c2, &asm.s_minus0);
    TriangleVerdict {
        steerable: depth < 0.0,
        c1,
        c2,
        depth,
    }
}

/// Minimum over edges of the signed distance of `x` to the edge line,
/// oriented so that the interior is positive.
fn triangle_depth(a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>, x: &Vector2<f64>) -> f64 {
    let orient = cross2(&(b - a), &(c - a)).signum();
    [(a, b), (b, c), (c, a)]
        .iter()
        .map(|(u, v)| {
            let e = *v - *u;
            orient * cross2(&e, &(x - *u)) / e.norm().max(f64::MIN_POSITIVE)
        })
        .fold(f64::INFINITY, f64::min)
}

/// A local hidden state model for the assemblage: hidden states `p`, `p`,
/// `s₂`, `s₃` with weights `p₀…p₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhsTriangle {
    pub s2: Vector2<f64>,
    pub s3: Vector2<f64>,
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub weights: [f64; 4],
    /// Largest error over the four reproduced conditional states.
    pub mixture_residual: f64,
    /// Disagreement between the two barycentric expansions of `b`.
    pub barycentric_residual: f64,
}

/// Searches for a triangle `p s₂ s₃` containing all steered states on its
/// boundary, with `s₂` on `[s_{+|1}, c₁]` sampled at `grid + 1` points and
/// `s₃` on `[s_{−|1}, c₂]` solved so that `s_{−|0}` lies on `s₂s₃`.
pub fn triangle_search(asm: &Assemblage1PQA, grid: usize) -> Option<LhsTriangle> {
    let r = asm.frame.radius;
    let [sp1, sm1] = asm.s1;
    let c1 = circle_hit(r, &sp1);
    let c2 = circle_hit(r, &sm1);
    let target = asm.s_minus0;
    let grid = grid.max(1);
    for i in 0..=grid {
        let s2 = sp1 + (c1 - sp1) * (i as f64 / grid as f64);
        // s2 + λ(target − s2) = sm1 + μ(c2 − sm1)
        let dir = target - s2;
        let edge = c2 - sm1;
        let den = cross2(&dir, &edge);
        if den.abs() <= f64::EPSILON * dir.norm() * edge.norm() {
            continue;
        }
        let w = sm1 - s2;
        let lambda = cross2(&w, &edge) / den;
        let mu = cross2(&w, &dir) / den;
        let slack = tol::GEOM;
        if lambda >= 1.0 - slack && (-slack..=1.0 + slack).contains(&mu) {
            let s3 = sm1 + edge * mu.clamp(0.0, 1.0);
            return Some(reconstruct(asm, s2, s3));
        }
    }
    None
}

fn reconstruct(asm: &Assemblage1PQA, s2: Vector2<f64>, s3: Vector2<f64>) -> LhsTriangle {
    let [sp1, sm1] = asm.s1;
    let [[pp0, pm0], [pp1, pm1]] = asm.probs;
    let eps_plus = 1.0 - sp1.norm() / s2.norm();
    let eps_minus = 1.0 - sm1.norm() / s3.norm();
    let weights = [
        pp1 * eps_plus,
        pm1 * eps_minus,
        pp1 * (1.0 - eps_plus),
        pm1 * (1.0 - eps_minus),
    ];
    let states = [Vector2::zeros(), Vector2::zeros(), s2, s3];
    // sub-normalized states as (weight, weight · Bloch vector)
    let mix = |idx: &[usize]| -> (f64, Vector2<f64>) {
        idx.iter().fold((0.0, Vector2::zeros()), |(w, v), &k| {
            (w + weights[k], v + states[k] * weights[k])
        })
    };
    let diff = |(w, v): (f64, Vector2<f64>), p: f64, s: &Vector2<f64>| (w - p).abs().max((v - s * p).norm());
    let mixture_residual = [
        diff(mix(&[0, 1]), pp0, &Vector2::zeros()),
        diff(mix(&[2, 3]), pm0, &asm.s_minus0),
        diff(mix(&[0, 2]), pp1, &sp1),
        diff(mix(&[1, 3]), pm1, &sm1),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    // b in barycentric coordinates of (p, s₂, s₃), once from the model and
    // once from the first measurement
    let from_model = mix(&[0, 1, 2, 3]).1;
    let t = (asm.s_minus0 - s2).norm() / (s3 - s2).norm().max(f64::MIN_POSITIVE);
    let from_first = (s2 * (1.0 - t) + s3 * t) * pm0;
    let barycentric_residual = (from_model - asm.b).norm().max((from_first - asm.b).norm());
    LhsTriangle {
        s2,
        s3,
        eps_plus,
        eps_minus,
        weights,
        mixture_residual,
        barycentric_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{verdict_for_point, TangentEllipsoid};
    use crate::ellipsoid::tangency_for_state;
    use crate::families::{tangent_x_state, TangentXParams};
    use crate::sampling::{random_tangent_state, random_unit_vector, rng};
    use approx::assert_abs_diff_eq;

    fn x_state() -> TwoQubitState {
        tangent_x_state(&TangentXParams::new(0.2, 0.5, 0.6, -0.6)).unwrap()
    }

    #[test]
    fn x_state_pure_axis() {
        let s = x_state();
        let asm = assemblage_from_measurements(&s, &Vector3::z(), &Vector3::new(0.8, 0.0, 0.6)).unwrap();
        assert_eq!(asm.pure_outcome, Outcome::Plus);
        assert_abs_diff_eq!(asm.probs[0][0], 0.6, epsilon = 1e-15);
        assert!(asm.no_signalling_residual() < 1e-12);
        assert_eq!(
            assemblage_from_measurements(&s, &Vector3::z(), &Vector3::z()),
            Err(SteeringError::CollinearSteeredStates)
        );
        assert_eq!(
            assemblage_from_measurements(&s, &Vector3::x(), &Vector3::z()),
            Err(SteeringError::NoPureState)
        );
    }

    #[test]
    fn steered_points_lie_on_section_ellipse() {
        let s = x_state();
        let (ell, _) = tangency_for_state(&s).unwrap();
        let asm = assemblage_from_measurements(&s, &Vector3::z(), &Vector3::new(0.3, 0.5, -0.2).normalize()).unwrap();
        for z in [asm.s_minus0, asm.s1[0], asm.s1[1]] {
            assert_abs_diff_eq!(
                ell.quadric_value(&asm.frame.to_global(&z)).unwrap(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn hand_built_configurations() {
        let frame = PlaneFrame::through(&Vector3::z(), &Vector3::y()).unwrap();
        let base = |s_minus0: Vector2<f64>| {
            // only the geometry enters the criterion and the search
            let s1 = [Vector2::new(0.5, 0.4), Vector2::new(0.5, -0.4)];
            Assemblage1PQA {
                frame,
                pure_outcome: Outcome::Plus,
                s_minus0,
                s1,
                probs: [[0.5, 0.5], [0.5, 0.5]],
                b: s_minus0 * 0.5,
            }
        };
        // c₁, c₂ at u = 2R·0.5/0.41; the chord sits near u ≈ 1.22
        let inside = triangle_criterion(&base(Vector2::new(1.0, 0.0)));
        assert!(!inside.steerable);
        assert!(triangle_search(&base(Vector2::new(1.0, 0.0)), 500).is_some());
        let beyond = triangle_criterion(&base(Vector2::new(1.5, 0.0)));
        assert!(beyond.steerable);
        assert!(triangle_search(&base(Vector2::new(1.5, 0.0)), 2000).is_none());
    }

    #[test]
    fn criterion_matches_search_and_homology_test() {
        let mut r = rng(17);
        let (mut found, mut steer) = (0, 0);
        for _ in 0..1000 {
            let (state, _) = random_tangent_state(&mut r).unwrap();
            let (_, rep) = tangency_for_state(&state).unwrap();
            let setting = rep.setting.unwrap();
            let axis0 = Vector3::from(setting.axis);
            let axis1 = random_unit_vector(&mut r);
            let Ok(asm) = assemblage_from_measurements(&state, &axis0, &axis1) else {
                continue;
            };
            assert!(asm.no_signalling_residual() < 1e-9);
            let tri = triangle_criterion(&asm);
            let te = TangentEllipsoid::from_state(&state).unwrap();
            let v = verdict_for_point(&te, &asm.frame.normal, state.b()).unwrap();
            if v.indeterminate() {
                continue;
            }
            assert_eq!(tri.steerable, v.steerable, "margin {} depth {}", v.margin, tri.depth);
            match triangle_search(&asm, 1000) {
                Some(lhs) => {
                    found += 1;
                    assert!(!tri.steerable || tri.depth.abs() < 1e-6);
                    assert!(lhs.mixture_residual < 1e-9, "{}", lhs.mixture_residual);
                    assert!(lhs.barycentric_residual < 1e-9, "{}", lhs.barycentric_residual);
                    assert!(lhs.weights.iter().all(|&w| w >= -1e-12));
                    assert_abs_diff_eq!(lhs.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                }
                None => {
                    steer += 1;
                    assert!(tri.steerable || tri.depth.abs() < 1e-6);
                }
            }
        }
        assert!(found > 10 && steer > 10, "found {found}, steering {steer}");
    }
}
