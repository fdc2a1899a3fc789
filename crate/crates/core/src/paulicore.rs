//! Two-qubit states in Pauli form and the ensembles Alice steers Bob to.
//!
//! A state is stored as `(a, b, T)`:
//!
//! ```text
//! ρ = ¼ (I⊗I + a·σ⊗I + I⊗b·σ + Σᵢⱼ Tᵢⱼ σᵢ⊗σⱼ)
//! ```
//!
//! The 4×4 density matrix is rebuilt on demand in the computational basis
//! (`|00⟩, |01⟩, |10⟩, |11⟩`, Alice first) for validation and filtering.

use nalgebra::{Complex, Matrix2, Matrix3, Matrix4, Rotation3, Vector3};

use crate::error::{Result, SteeringError};
use crate::tol;

pub type C64 = Complex<f64>;
pub type DensityMatrix = Matrix4<C64>;

/// Pauli matrices σx, σy, σz.
pub fn pauli(i: usize) -> Matrix2<C64> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    match i {
        0 => Matrix2::new(z, one, one, z),
        1 => Matrix2::new(z, -im, im, z),
        2 => Matrix2::new(one, z, z, -one),
        _ => panic!("pauli index out of range: {i}"),
    }
}

fn kron2(x: &Matrix2<C64>, y: &Matrix2<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for r in 0..2 {
        for c in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[(2 * r + i, 2 * c + j)] = x[(r, c)] * y[(i, j)];
                }
            }
        }
    }
    out
}

/// `I + v·σ` raised to a real power, for |v| < 1 (or |v| ≤ 1 with a
/// nonnegative exponent).
fn bloch_power(v: &Vector3<f64>, exponent: f64) -> Matrix2<C64> {
    let r = v.norm();
    let identity = Matrix2::<C64>::identity();
    if r == 0.0 {
        return identity;
    }
    let up = (1.0 + r).powf(exponent);
    let down = (1.0 - r).powf(exponent);
    let x = 0.5 * (up + down);
    let y = 0.5 * (up - down) / r;
    let mut sigma = Matrix2::<C64>::zeros();
    for i in 0..3 {
        sigma += pauli(i) * C64::new(v[i], 0.0);
    }
    identity * C64::new(x, 0.0) + sigma * C64::new(y, 0.0)
}

/// Outcome label `r = ±1` of a dichotomic measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// A physical two-qubit state in Pauli form.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    a: Vector3<f64>,
    b: Vector3<f64>,
    t: Matrix3<f64>,
}

/// Builds a state from its Pauli parameters and checks that it is physical.
pub fn state_from_pauli(a: Vector3<f64>, b: Vector3<f64>, t: Matrix3<f64>) -> Result<TwoQubitState> {
    state_from_pauli_with_tol(a, b, t, tol::PSD)
}

pub fn state_from_pauli_with_tol(
    a: Vector3<f64>,
    b: Vector3<f64>,
    t: Matrix3<f64>,
    tol_psd: f64,
) -> Result<TwoQubitState> {
    if !(a.iter().chain(b.iter()).chain(t.iter()).all(|x| x.is_finite())) {
        return Err(SteeringError::InvalidParameter("non-finite Pauli parameter".into()));
    }
    let state = TwoQubitState { a, b, t };
    let min = state.min_eigenvalue();
    if min < -tol_psd {
        return Err(SteeringError::NonPhysical { min_eigenvalue: min });
    }
    Ok(state)
}

impl TwoQubitState {
    /// The maximally mixed state.
    pub fn maximally_mixed() -> Self {
        Self {
            a: Vector3::zeros(),
            b: Vector3::zeros(),
            t: Matrix3::zeros(),
        }
    }

    /// Reads the Pauli parameters off a 4×4 density matrix, after checking
    /// it is Hermitian, unit-trace and positive semidefinite.
    pub fn from_density_matrix(rho: &DensityMatrix) -> Result<Self> {
        Self::from_density_matrix_with_tol(rho, tol::PSD)
    }

    pub fn from_density_matrix_with_tol(rho: &DensityMatrix, tol_psd: f64) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let trace_dev = (rho.trace() - C64::new(1.0, 0.0)).norm();
        let dev = herm.max(trace_dev);
        if !dev.is_finite() || dev > tol::GEOM.max(tol_psd) {
            return Err(SteeringError::NotDensityMatrix(dev));
        }
        let id = Matrix2::<C64>::identity();
        let expect = |op: Matrix4<C64>| (rho * op).trace().re;
        let mut a = Vector3::zeros();
        let mut b = Vector3::zeros();
        let mut t = Matrix3::zeros();
        for i in 0..3 {
            a[i] = expect(kron2(&pauli(i), &id));
            b[i] = expect(kron2(&id, &pauli(i)));
            for j in 0..3 {
                t[(i, j)] = expect(kron2(&pauli(i), &pauli(j)));
            }
        }
        state_from_pauli_with_tol(a, b, t, tol_psd)
    }

    pub fn a(&self) -> &Vector3<f64> {
        &self.a
    }

    pub fn b(&self) -> &Vector3<f64> {
        &self.b
    }

    pub fn t(&self) -> &Matrix3<f64> {
        &self.t
    }

    /// The 4×4 density matrix in the computational basis.
    pub fn density_matrix(&self) -> DensityMatrix {
        pauli_to_density(&self.a, &self.b, &self.t)
    }

    /// Eigenvalues of the density matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let ev = self.density_matrix().symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Applies local rotations: Alice's Bloch frame by `alice`, Bob's by `bob`.
    ///
    /// Every local unitary acts on Pauli parameters this way, so physicality
    /// is preserved exactly.
    pub fn rotated(&self, alice: &Rotation3<f64>, bob: &Rotation3<f64>) -> Self {
        let oa = alice.matrix();
        let ob = bob.matrix();
        Self {
            a: oa * self.a,
            b: ob * self.b,
            t: oa * self.t * ob.transpose(),
        }
    }

    /// Applies the local filter `F ⊗ I` and renormalizes.
    pub fn filtered_by_alice(&self, filter: &Matrix2<C64>) -> Result<Self> {
        let f = kron2(filter, &Matrix2::identity());
        let rho = f * self.density_matrix() * f.adjoint();
        let tr = rho.trace().re;
        if tr <= tol::PROB {
            return Err(SteeringError::InvalidParameter("filter annihilates the state".into()));
        }
        let mut rho = rho / C64::new(tr, 0.0);
        // clean up roundoff so the Hermiticity check sees an exact adjoint
        rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
        Self::from_density_matrix(&rho)
    }

    /// Moves Alice's reduced state to Bloch vector `alpha` starting from a
    /// state where Alice is maximally mixed. Bob's ellipsoid is unchanged and
    /// his Bloch vector becomes `b + Tᵀ alpha`.
    pub fn with_alice_bloch(&self, alpha: &Vector3<f64>) -> Result<Self> {
        if alpha.norm() >= 1.0 {
            return Err(SteeringError::InvalidParameter(format!(
                "Alice's Bloch vector must have norm < 1, got {}",
                alpha.norm()
            )));
        }
        if self.a.norm() > tol::GEOM {
            return Err(SteeringError::InvalidParameter(
                "with_alice_bloch expects Alice maximally mixed".into(),
            ));
        }
        self.filtered_by_alice(&bloch_power(alpha, 0.5))
    }
}

pub(crate) fn pauli_to_density(a: &Vector3<f64>, b: &Vector3<f64>, t: &Matrix3<f64>) -> DensityMatrix {
    let id = Matrix2::<C64>::identity();
    let mut rho = kron2(&id, &id);
    for i in 0..3 {
        rho += kron2(&pauli(i), &id) * C64::new(a[i], 0.0);
        rho += kron2(&id, &pauli(i)) * C64::new(b[i], 0.0);
        for j in 0..3 {
            rho += kron2(&pauli(i), &pauli(j)) * C64::new(t[(i, j)], 0.0);
        }
    }
    rho * C64::new(0.25, 0.0)
}

/// Bob's two conditional states for Alice's projective measurement along
/// `axis`. Index 0 is outcome `+1`, index 1 is outcome `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeredEnsemble {
    pub axis: Vector3<f64>,
    pub states: [Vector3<f64>; 2],
    pub probs: [f64; 2],
}

impl SteeredEnsemble {
    pub fn state(&self, r: Outcome) -> &Vector3<f64> {
        &self.states[r.index()]
    }

    pub fn prob(&self, r: Outcome) -> f64 {
        self.probs[r.index()]
    }

    /// `Σ_r p_r s_r`, which no-signalling pins to Bob's Bloch vector.
    pub fn barycentre(&self) -> Vector3<f64> {
        self.states[0] * self.probs[0] + self.states[1] * self.probs[1]
    }
}

pub fn steered_ensemble(state: &TwoQubitState, axis: &Vector3<f64>) -> Result<SteeredEnsemble> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > tol::GEOM {
        return Err(SteeringError::InvalidAxis(norm));
    }
    let mut states = [Vector3::zeros(); 2];
    let mut probs = [0.0; 2];
    let tn = state.t.transpose() * axis;
    let na = axis.dot(&state.a);
    for r in Outcome::BOTH {
        let s = r.sign();
        let weight = 1.0 + s * na;
        if weight <= tol::PROB {
            return Err(SteeringError::DegenerateOutcome { outcome: s as i8 });
        }
        states[r.index()] = (state.b + tn * s) / weight;
        probs[r.index()] = 0.5 * weight;
    }
    Ok(SteeredEnsemble {
        axis: *axis,
        states,
        probs,
    })
}

/// Measurement setting and outcome that steer Bob to a given point of the
/// ellipsoid surface.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SteeringSetting {
    pub axis: [f64; 3],
    pub outcome: Outcome,
    pub probability: f64,
}

/// Inverts the steering map: finds the unit `n` with
/// `(b + Tᵀn)/(1 + n·a) = point`, reported as an axis whose largest
/// component is positive together with the outcome sign.
pub fn setting_for_surface_point(state: &TwoQubitState, point: &Vector3<f64>) -> Result<SteeringSetting> {
    let lhs = state.t.transpose() - point * state.a.transpose();
    let rhs = point - state.b;
    let n = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SteeringError::InvalidParameter("steering map is singular".into()))?;
    let norm = n.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(SteeringError::InvalidParameter(format!(
            "point is not on the steering ellipsoid surface (|n| = {norm})"
        )));
    }
    let n = n / norm;
    let lead = n
        .iter()
        .copied()
        .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    let (axis, outcome) = if lead >= 0.0 {
        (n, Outcome::Plus)
    } else {
        (-n, Outcome::Minus)
    };
    Ok(SteeringSetting {
        axis: [axis[0], axis[1], axis[2]],
        outcome,
        probability: 0.5 * (1.0 + outcome.sign() * axis.dot(&state.a)),
    })
}

/// Local filtering that makes Alice's reduced state maximally mixed.
///
/// Bob's steering ellipsoid is invariant under the filter; afterwards his
/// Bloch vector sits at the ellipsoid centre. No local rotation is applied,
/// so the ellipsoid keeps its orientation.
pub fn canonical_form(state: &TwoQubitState) -> Result<TwoQubitState> {
    if 1.0 - state.a.norm_squared() <= tol::GEOM {
        return Err(SteeringError::AliceReducedPure);
    }
    state.filtered_by_alice(&bloch_power(&state.a, -0.5))
}
