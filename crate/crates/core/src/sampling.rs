//! Seeded random states and directions.

use nalgebra::{Complex, Matrix4, Quaternion, Rotation3, UnitQuaternion, Vector2, Vector3, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::paulicore::{DensityMatrix, TwoQubitState, C64};

pub use rand::SeedableRng;

pub type StdRng = ChaCha8Rng;

pub fn rng(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_unit_vector(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(normal(rng), normal(rng), normal(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Haar-random rotation.
pub fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    let q = Quaternion::from(Vector4::new(normal(rng), normal(rng), normal(rng), normal(rng)));
    UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

fn ginibre(rng: &mut impl Rng) -> Matrix4<C64> {
    Matrix4::from_fn(|_, _| Complex::new(normal(rng), normal(rng)))
}

fn normalized(rho: DensityMatrix) -> DensityMatrix {
    let rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace().re;
    rho / C64::new(tr, 0.0)
}

/// Hilbert–Schmidt random state.
pub fn random_state(rng: &mut impl Rng) -> Result<TwoQubitState> {
    let g = ginibre(rng);
    TwoQubitState::from_density_matrix(&normalized(g * g.adjoint()))
}

fn random_qubit(rng: &mut impl Rng) -> Vector2<C64> {
    let v = Vector2::new(
        Complex::new(normal(rng), normal(rng)),
        Complex::new(normal(rng), normal(rng)),
    );
    v / C64::new(v.norm(), 0.0)
}

/// Random state with no support on a random product vector `|φ⟩|χ⟩`.
///
/// When Alice finds `|φ⟩`, Bob is left in the pure state orthogonal to
/// `|χ⟩`, so the steering ellipsoid touches the Bloch sphere. Returns the
/// state and that contact point.
pub fn random_tangent_state(rng: &mut impl Rng) -> Result<(TwoQubitState, Vector3<f64>)> {
    let phi = random_qubit(rng);
    let chi = random_qubit(rng);
    let mut prod = nalgebra::Vector4::<C64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            prod[2 * i + j] = phi[i] * chi[j];
        }
    }
    let proj = Matrix4::<C64>::identity() - prod * prod.adjoint();
    let g = ginibre(rng);
    let state = TwoQubitState::from_density_matrix(&normalized(proj * g * g.adjoint() * proj))?;
    // Bloch vector of |χ⟩, negated
    let off = chi[0].conj() * chi[1];
    let bloch = Vector3::new(2.0 * off.re, 2.0 * off.im, chi[0].norm_sqr() - chi[1].norm_sqr());
    Ok((state, -bloch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipsoid::{tangency_for_state, TangencyStatus};
    use crate::paulicore::steered_ensemble;

    #[test]
    fn same_seed_same_state() {
        let a = random_state(&mut rng(7)).unwrap();
        let b = random_state(&mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tangent_states_touch_at_the_predicted_point() {
        let mut r = rng(3);
        for _ in 0..50 {
            let (state, p) = random_tangent_state(&mut r).unwrap();
            let (_, rep) = tangency_for_state(&state).unwrap();
            match rep.status {
                TangencyStatus::SingleTangent { point } => {
                    assert!((Vector3::from(point) - p).norm() < 1e-6, "{point:?} vs {p}");
                    let setting = rep.setting.unwrap();
                    let ens = steered_ensemble(&state, &Vector3::from(setting.axis)).unwrap();
                    assert!((ens.state(setting.outcome) - p).norm() < 1e-6);
                }
                other => panic!("expected a single contact, got {other:?}"),
            }
        }
    }
}
