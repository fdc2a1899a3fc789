//! Characteristic polynomials of 4×4 matrices and their roots via the
//! companion matrix.

use nalgebra::{Complex, Matrix4};

/// Coefficients `[c0, c1, c2, c3]` of `det(κI − M) = κ⁴ + c3κ³ + c2κ² + c1κ + c0`
/// by the Faddeev–LeVerrier recursion.
pub fn char_poly(m: &Matrix4<f64>) -> [f64; 4] {
    let id = Matrix4::<f64>::identity();
    let mut coeffs = [0.0; 4];
    let mut aux = *m;
    let mut c = -aux.trace();
    coeffs[3] = c;
    for k in 2..=4 {
        aux = m * (aux + id * c);
        c = -aux.trace() / k as f64;
        coeffs[4 - k] = c;
    }
    coeffs
}

/// Roots of the monic quartic `κ⁴ + c3κ³ + c2κ² + c1κ + c0` as eigenvalues
/// of its companion matrix.
pub fn monic_quartic_roots(coeffs: [f64; 4]) -> [Complex<f64>; 4] {
    let [c0, c1, c2, c3] = coeffs;
    #[rustfmt::skip]
    let companion = Matrix4::new(
        0.0, 0.0, 0.0, -c0,
        1.0, 0.0, 0.0, -c1,
        0.0, 1.0, 0.0, -c2,
        0.0, 0.0, 1.0, -c3,
    );
    let ev = companion.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distinct_roots() {
        // (κ-1)(κ-2)(κ-3)(κ-4)
        let roots = monic_quartic_roots([24.0, -50.0, 35.0, -10.0]);
        for (r, want) in roots.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert_abs_diff_eq!(r.re, want, epsilon = 1e-10);
            assert_abs_diff_eq!(r.im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn char_poly_of_diagonal() {
        let m = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 2.0, 3.0, 4.0));
        let c = char_poly(&m);
        assert_abs_diff_eq!(c[0], 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], -50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[2], 35.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[3], -10.0, epsilon = 1e-12);
    }

    #[test]
    fn double_root_splits_by_sqrt_eps() {
        // (κ-2)²(κ-5)(κ-7)
        let c = char_poly(&Matrix4::from_diagonal(&nalgebra::Vector4::new(2.0, 2.0, 5.0, 7.0)));
        let roots = monic_quartic_roots(c);
        assert!((roots[0] - roots[1]).norm() < 1e-6);
        assert_abs_diff_eq!(roots[2].re, 5.0, epsilon = 1e-9);
    }
}
