//! Numerical tolerances shared across the crate.
//!
//! Every computation here is closed-form in double precision, so the
//! geometric tolerances sit a few orders of magnitude above machine epsilon.

/// Smallest eigenvalue of a density matrix still accepted as positive.
pub const PSD: f64 = 1e-9;

/// Tolerance for geometric identities (norms, incidences, no-signalling).
pub const GEOM: f64 = 1e-9;

/// Outcome probabilities at or below this make a steered state undefined.
pub const PROB: f64 = 1e-12;

/// Relative tolerance for treating quartic roots as coincident.
pub const ROOT: f64 = 1e-7;

/// Largest gap `1 - max|x|` over the ellipsoid still counted as contact.
pub const CONTACT: f64 = 1e-7;

/// Maximizer sets of |x| narrower than this are a single contact point.
pub const CONTACT_SPREAD: f64 = 1e-6;

/// Margins with magnitude below this are reported as indeterminate.
pub const MARGIN_BAND: f64 = 1e-8;

/// Homogeneous points with |w| below this are treated as ideal points.
pub const AT_INFINITY: f64 = 1e-12;

/// Tolerances that callers may override as a group (the CLI does).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub psd: f64,
    pub geom: f64,
    pub prob: f64,
    pub root: f64,
    pub margin_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd: PSD,
            geom: GEOM,
            prob: PROB,
            root: ROOT,
            margin_band: MARGIN_BAND,
        }
    }
}
