//! Serializable reports behind the command-line tool: full analysis of a
//! state, family sweeps and criterion-versus-oracle comparisons.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::criteria::{
    classify_locus, p_bounds, pencil_thresholds, pencil_verdicts, pure_state_probability, steerable_in_plane,
    verdict_for_point, LocusClass, PencilThresholds, ProbBounds, ScanOptions, TangentEllipsoid,
};
use crate::ellipsoid::{tangency_for_state, SteeringEllipsoid, TangencyReport, TangencyStatus};
use crate::error::{Result, SteeringError};
use crate::families;
use crate::oracle::{assemblage_from_measurements, triangle_criterion, triangle_search};
use crate::paulicore::{state_from_pauli_with_tol, DensityMatrix, TwoQubitState, C64};
use crate::projective::Homology;
use crate::sampling;
use crate::tol::{self, Tolerances};

/// State input: Pauli parameters or a density matrix of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StateInput {
    Pauli {
        a: [f64; 3],
        b: [f64; 3],
        #[serde(rename = "T")]
        t: [[f64; 3]; 3],
    },
    Density {
        density_matrix: [[[f64; 2]; 4]; 4],
    },
}

impl StateInput {
    pub fn to_state(&self, tol_psd: f64) -> Result<TwoQubitState> {
        match self {
            StateInput::Pauli { a, b, t } => state_from_pauli_with_tol(
                Vector3::from(*a),
                Vector3::from(*b),
                Matrix3::from_fn(|i, j| t[i][j]),
                tol_psd,
            ),
            StateInput::Density { density_matrix } => {
                let rho = DensityMatrix::from_fn(|i, j| C64::new(density_matrix[i][j][0], density_matrix[i][j][1]));
                TwoQubitState::from_density_matrix_with_tol(&rho, tol_psd)
            }
        }
    }

    pub fn from_state(state: &TwoQubitState) -> Self {
        let t = state.t();
        StateInput::Pauli {
            a: (*state.a()).into(),
            b: (*state.b()).into(),
            t: std::array::from_fn(|i| std::array::from_fn(|j| t[(i, j)])),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    a: Option<[f64; 3]>,
    b: Option<[f64; 3]>,
    #[serde(rename = "T")]
    t: Option<[[f64; 3]; 3]>,
    density_matrix: Option<[[[f64; 2]; 4]; 4]>,
}

/// Parses a state file. Errors carry the line and column of the problem.
pub fn parse_state_json(text: &str) -> std::result::Result<StateInput, String> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    match file {
        StateFile {
            a: Some(a),
            b: Some(b),
            t: Some(t),
            density_matrix: None,
        } => Ok(StateInput::Pauli { a, b, t }),
        StateFile {
            a: None,
            b: None,
            t: None,
            density_matrix: Some(density_matrix),
        } => Ok(StateInput::Density { density_matrix }),
        StateFile {
            density_matrix: Some(_),
            ..
        } => Err("give either a, b, T or density_matrix, not both".into()),
        _ => Err("missing field: a state needs all of a, b, T or a density_matrix".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidSummary {
    pub centre: [f64; 3],
    pub semiaxes: [f64; 3],
    /// Unit semiaxis directions, one per row, matched to `semiaxes`.
    pub axes: [[f64; 3]; 3],
    pub volume: f64,
}

impl EllipsoidSummary {
    pub fn new(ell: &SteeringEllipsoid) -> Self {
        let axes = ell.axes();
        Self {
            centre: (*ell.centre()).into(),
            semiaxes: ell.semiaxes(),
            axes: std::array::from_fn(|k| std::array::from_fn(|i| axes[(i, k)])),
            volume: ell.volume(),
        }
    }
}

/// One plane of the pencil containing the line from the contact point to `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneRow {
    pub index: usize,
    pub normal: [f64; 3],
    pub radius: f64,
    pub m: f64,
    pub n: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub b_local: [f64; 2],
    pub h_local: [f64; 2],
    pub margin: f64,
    pub steerable: bool,
    pub indeterminate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OracleStats {
    pub compared: usize,
    pub agreements: usize,
    pub disagreements: usize,
    /// Comparisons skipped because the margin was inside the band.
    pub in_band: usize,
    /// Second axes that did not give a valid assemblage.
    pub skipped: usize,
    pub triangles_found: usize,
    pub max_mixture_residual: f64,
}

impl OracleStats {
    fn merge(&mut self, other: &OracleStats) {
        self.compared += other.compared;
        self.agreements += other.agreements;
        self.disagreements += other.disagreements;
        self.in_band += other.in_band;
        self.skipped += other.skipped;
        self.triangles_found += other.triangles_found;
        self.max_mixture_residual = self.max_mixture_residual.max(other.max_mixture_residual);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// The pure-state probability exceeds the sufficient bound.
    pub steerable_for_every_plane: bool,
    /// The pure-state probability exceeds the necessary bound.
    pub steerable_for_some_plane: bool,
    pub locus: LocusClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub input: StateInput,
    pub tolerances: Tolerances,
    pub eigenvalues: [f64; 4],
    pub ellipsoid: EllipsoidSummary,
    pub tangency: TangencyReport,
    pub pure_state_probability: f64,
    pub planes: Vec<PlaneRow>,
    /// Thresholds for reduced states on the line from the contact point
    /// through `b`, over the planes containing that line.
    pub line_thresholds: PencilThresholds,
    pub bounds: ProbBounds,
    pub verdict: Verdict,
    pub oracle: OracleStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub planes: usize,
    pub scan: ScanOptions,
    pub seed: u64,
    pub oracle_samples: usize,
    pub oracle_grid: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            planes: 36,
            scan: ScanOptions::default(),
            seed: 0,
            oracle_samples: 32,
            oracle_grid: 500,
        }
    }
}

/// Why an analysis stopped before the plane-by-plane stage.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// The ellipsoid does not touch the sphere at exactly one point.
    NoTangency(Box<(EllipsoidSummary, TangencyReport)>),
    Steering(SteeringError),
}

impl From<SteeringError> for AnalysisError {
    fn from(e: SteeringError) -> Self {
        AnalysisError::Steering(e)
    }
}

pub fn analyze(
    state: &TwoQubitState,
    tolerances: Tolerances,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    let (ell, tangency) = tangency_for_state(state)?;
    let TangencyStatus::SingleTangent { .. } = tangency.status else {
        return Err(AnalysisError::NoTangency(Box::new((
            EllipsoidSummary::new(&ell),
            tangency,
        ))));
    };
    let te = TangentEllipsoid::new(ell.clone())?;
    let b = *state.b();
    let pp = pure_state_probability(&te, &b)?;
    let verdicts = pencil_verdicts(&te, &b, opts.planes)?;
    let planes = verdicts
        .iter()
        .enumerate()
        .map(|(index, v)| PlaneRow {
            index,
            normal: v.section.frame.normal.into(),
            radius: v.section.radius,
            m: v.section.m,
            n: v.section.n,
            delta: v.section.delta,
            alpha: v.homology.alpha,
            beta: v.homology.beta,
            gamma: v.homology.gamma,
            b_local: v.b_local.into(),
            h_local: v.h_local.into(),
            margin: v.margin,
            steerable: v.steerable,
            indeterminate: v.indeterminate(),
        })
        .collect();
    let line_thresholds = pencil_thresholds(&te, &(b - te.contact()), opts.planes.max(1))?;
    let bounds = p_bounds(&te, &opts.scan)?;
    let locus = classify_locus(&te, &b, opts.planes)?;
    let setting = tangency.setting.ok_or(SteeringError::NotSingleTangent)?;
    let mut rng = sampling::rng(opts.seed);
    let oracle = compare_state(
        state,
        &te,
        &Vector3::from(setting.axis),
        opts.oracle_samples,
        opts.oracle_grid,
        &mut rng,
    );
    Ok(AnalysisReport {
        input: StateInput::from_state(state),
        tolerances,
        eigenvalues: state.eigenvalues(),
        ellipsoid: EllipsoidSummary::new(&ell),
        tangency,
        pure_state_probability: pp,
        planes,
        line_thresholds,
        verdict: Verdict {
            steerable_for_every_plane: pp > bounds.p_max,
            steerable_for_some_plane: pp > bounds.p_min,
            locus,
        },
        bounds,
        oracle,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionVerdict {
    pub b_local: [f64; 2],
    pub h_local: [f64; 2],
    pub margin: f64,
    pub steerable: bool,
    pub indeterminate: bool,
}

/// One cutting plane through the contact point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionReport {
    pub contact: [f64; 3],
    pub normal: [f64; 3],
    pub u: [f64; 3],
    pub v: [f64; 3],
    pub radius: f64,
    pub m: f64,
    pub n: f64,
    pub delta: f64,
    pub centre: [f64; 2],
    pub homology: Homology,
    /// Present when Bob's reduced state lies in the plane.
    pub verdict: Option<SectionVerdict>,
}

/// Which plane to cut: an explicit normal, or the plane of the steered
/// states when Alice measures along the contact axis and then `Axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlaneChoice {
    Normal(Vector3<f64>),
    Axis(Vector3<f64>),
}

pub fn section_report(state: &TwoQubitState, choice: PlaneChoice) -> Result<SectionReport, AnalysisError> {
    let (ell, tangency) = tangency_for_state(state)?;
    let TangencyStatus::SingleTangent { .. } = tangency.status else {
        return Err(AnalysisError::NoTangency(Box::new((
            EllipsoidSummary::new(&ell),
            tangency,
        ))));
    };
    let te = TangentEllipsoid::new(ell)?;
    let normal = match choice {
        PlaneChoice::Normal(n) => n,
        PlaneChoice::Axis(axis1) => {
            let setting = tangency.setting.ok_or(SteeringError::NotSingleTangent)?;
            assemblage_from_measurements(state, &Vector3::from(setting.axis), &axis1)?
                .frame
                .normal
        }
    };
    let section = te.section(&normal)?;
    let b = state.b();
    let (homology, verdict) = if section.frame.offset(b).abs() <= tol::GEOM {
        let v = steerable_in_plane(&section, &section.frame.to_local(b))?;
        let verdict = SectionVerdict {
            b_local: v.b_local.into(),
            h_local: v.h_local.into(),
            margin: v.margin,
            steerable: v.steerable,
            indeterminate: v.indeterminate(),
        };
        (v.homology, Some(verdict))
    } else {
        (Homology::from_section(&section)?, None)
    };
    let f = &section.frame;
    Ok(SectionReport {
        contact: (*te.contact()).into(),
        normal: f.normal.into(),
        u: f.u.into(),
        v: f.v.into(),
        radius: section.radius,
        m: section.m,
        n: section.n,
        delta: section.delta,
        centre: section.centre.into(),
        homology,
        verdict,
    })
}

/// Compares the per-plane test with the triangle criterion and the LHS
/// search for `samples` random second measurements.
fn compare_state(
    state: &TwoQubitState,
    te: &TangentEllipsoid,
    axis0: &Vector3<f64>,
    samples: usize,
    grid: usize,
    rng: &mut sampling::StdRng,
) -> OracleStats {
    let mut stats = OracleStats::default();
    for _ in 0..samples {
        let axis1 = sampling::random_unit_vector(rng);
        let Ok(asm) = assemblage_from_measurements(state, axis0, &axis1) else {
            stats.skipped += 1;
            continue;
        };
        let Ok(v) = verdict_for_point(te, &asm.frame.normal, state.b()) else {
            stats.skipped += 1;
            continue;
        };
        if v.indeterminate() {
            stats.in_band += 1;
            continue;
        }
        stats.compared += 1;
        let tri = triangle_criterion(&asm);
        let lhs = triangle_search(&asm, grid);
        if let Some(l) = &lhs {
            stats.triangles_found += 1;
            stats.max_mixture_residual = stats.max_mixture_residual.max(l.mixture_residual);
        }
        if tri.steerable == v.steerable {
            stats.agreements += 1;
        } else {
            stats.disagreements += 1;
        }
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub seed: u64,
    pub states: usize,
    pub axes_per_state: usize,
    /// States whose ellipsoid did not touch at a single point.
    pub rejected_states: usize,
    pub stats: OracleStats,
    pub agreement_rate: f64,
}

/// Random tangent states, each with random second measurements, compared
/// against the oracle.
pub fn oracle_compare(samples: usize, axes_per_state: usize, seed: u64, grid: usize) -> OracleSummary {
    let mut rng = sampling::rng(seed);
    let mut stats = OracleStats::default();
    let mut rejected = 0;
    for _ in 0..samples {
        let prepared = sampling::random_tangent_state(&mut rng).and_then(|(state, _)| {
            let (_, rep) = tangency_for_state(&state)?;
            let setting = rep.setting.ok_or(SteeringError::NotSingleTangent)?;
            let te = TangentEllipsoid::from_state(&state)?;
            Ok((state, te, Vector3::from(setting.axis)))
        });
        match prepared {
            Ok((state, te, axis0)) => {
                stats.merge(&compare_state(&state, &te, &axis0, axes_per_state, grid, &mut rng));
            }
            Err(_) => rejected += 1,
        }
    }
    let agreement_rate = if stats.compared == 0 {
        1.0
    } else {
        stats.agreements as f64 / stats.compared as f64
    };
    OracleSummary {
        seed,
        states: samples,
        axes_per_state,
        rejected_states: rejected,
        stats,
        agreement_rate,
    }
}

/// State families available to sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Sphere,
    Obese,
    XState,
    Spheroid,
}

/// A parameter range `start..=stop` in steps of `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return vec![];
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        Ok(Range {
            start: num(start)?,
            stop: num(stop)?,
            step: num(step)?,
        })
    }
}

impl Family {
    pub fn default_range(self) -> Range {
        match self {
            Family::Sphere => Range {
                start: 0.1,
                stop: 0.9,
                step: 0.1,
            },
            Family::Obese => Range {
                start: 0.0,
                stop: 0.99,
                step: 0.01,
            },
            Family::XState => Range {
                start: -0.8,
                stop: 0.8,
                step: 0.2,
            },
            Family::Spheroid => Range {
                start: 0.1,
                stop: 0.9,
                step: 0.1,
            },
        }
    }
}

/// One row of a family sweep. Parameters not used by a family are absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: Vec<(String, f64)>,
    /// Every second measurement steers at the family's reduced state.
    pub steerable: bool,
    pub p_p: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Smallest per-plane margin over the pencil through the reduced state.
    pub margin: f64,
    /// X-states only: the two forms of the criterion agree, or the margin
    /// is inside the tolerance band.
    pub forms_agree: Option<bool>,
}

fn pencil_summary(te: &TangentEllipsoid, b: &Vector3<f64>, planes: usize) -> Result<(bool, f64, f64)> {
    let verdicts = pencil_verdicts(te, b, planes)?;
    let margin = verdicts.iter().map(|v| v.margin).fold(f64::INFINITY, f64::min);
    Ok((
        verdicts.iter().all(|v| v.steerable),
        margin,
        pure_state_probability(te, b)?,
    ))
}

/// Sweeps a family over `range` (its leading parameter). Rows come out in
/// a fixed order. Grid points that are not valid states are left out.
pub fn family_sweep(family: Family, range: &Range, planes: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    match family {
        Family::Sphere => {
            for r in range.values() {
                let state = families::tangent_sphere_state(r, None)?;
                let te = TangentEllipsoid::from_state(&state)?;
                let (steerable, margin, p_p) = pencil_summary(&te, state.b(), planes)?;
                let t = families::sphere_threshold(r)?;
                rows.push(SweepRow {
                    params: vec![("r".into(), r)],
                    steerable,
                    p_p,
                    p_min: t,
                    p_max: t,
                    margin,
                    forms_agree: None,
                });
            }
        }
        Family::Obese => {
            for c in range.values() {
                let state = families::obese_state(c)?;
                let ell = crate::ellipsoid::steering_ellipsoid(&state)?;
                // at c = 0 the ellipsoid is the whole sphere; any point is a contact
                let te = TangentEllipsoid::with_contact(ell, Vector3::z())?;
                let (steerable, margin, p_p) = pencil_summary(&te, state.b(), planes)?;
                let (p_min, p_max) = families::x_state_p_bounds(&families::TangentXParams::new(
                    0.0,
                    c,
                    (1.0 - c).sqrt(),
                    -(1.0 - c).sqrt(),
                ))?;
                rows.push(SweepRow {
                    params: vec![("c".into(), c)],
                    steerable,
                    p_p,
                    p_min,
                    p_max,
                    margin,
                    forms_agree: None,
                });
            }
        }
        Family::XState => {
            let values = range.values();
            for &a in &values {
                for &b in values.iter().filter(|&&b| b >= a && b < 1.0) {
                    let t_max = ((1.0 + a) * (1.0 - b)).sqrt();
                    for k in 1..=4 {
                        let t = t_max * k as f64 / 4.0;
                        let params = families::TangentXParams::new(a, b, t, -t);
                        let Ok(state) = families::tangent_x_state(&params) else {
                            continue;
                        };
                        let Ok(te) = TangentEllipsoid::from_state(&state) else {
                            continue;
                        };
                        let (steerable, margin, p_p) = pencil_summary(&te, state.b(), planes)?;
                        let (p_min, p_max) = families::x_state_p_bounds(&params)?;
                        for j in 0..=4 {
                            let theta = j as f64 * std::f64::consts::FRAC_PI_8;
                            let xv = families::x_state_steerable(&params, theta)?;
                            rows.push(SweepRow {
                                params: vec![
                                    ("a".into(), a),
                                    ("b".into(), b),
                                    ("t_x".into(), t),
                                    ("t_y".into(), -t),
                                    ("theta".into(), theta),
                                ],
                                steerable,
                                p_p,
                                p_min,
                                p_max,
                                margin,
                                forms_agree: Some(xv.agree() || xv.margin.abs() <= tol::MARGIN_BAND),
                            });
                        }
                    }
                }
            }
        }
        Family::Spheroid => {
            for m in range.values() {
                for k in 1..=4 {
                    let n = m.sqrt() * k as f64 / 4.0;
                    let Ok(state) = families::spheroid_state(m, n, None) else {
                        continue;
                    };
                    let te = TangentEllipsoid::from_state(&state)?;
                    let (steerable, margin, p_p) = pencil_summary(&te, state.b(), planes)?;
                    let (p_min, p_max) = families::spheroid_p_bounds(m, n)?;
                    rows.push(SweepRow {
                        params: vec![("m".into(), m), ("n".into(), n)],
                        steerable,
                        p_p,
                        p_min,
                        p_max,
                        margin,
                        forms_agree: None,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Formats a float for CSV with 17 significant digits.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes sweep rows as CSV: parameter columns, then the common columns.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        let mut header: Vec<String> = first.params.iter().map(|(k, _)| k.clone()).collect();
        header.extend(["steerable", "p_p", "p_min", "p_max", "margin"].map(String::from));
        if first.forms_agree.is_some() {
            header.push("forms_agree".into());
        }
        w.write_record(&header)?;
    }
    for row in rows {
        let mut rec: Vec<String> = row.params.iter().map(|(_, v)| csv_float(*v)).collect();
        rec.push(row.steerable.to_string());
        rec.extend([row.p_p, row.p_min, row.p_max, row.margin].map(csv_float));
        if let Some(agree) = row.forms_agree {
            rec.push(agree.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-plane table of an analysis as CSV.
pub fn write_planes_csv<W: std::io::Write>(rows: &[PlaneRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "index",
        "normal_x",
        "normal_y",
        "normal_z",
        "radius",
        "m",
        "n",
        "delta",
        "alpha",
        "beta",
        "gamma",
        "b_u",
        "b_v",
        "h_u",
        "h_v",
        "margin",
        "steerable",
        "indeterminate",
    ])?;
    for r in rows {
        let mut rec = vec![r.index.to_string()];
        rec.extend(
            [
                r.normal[0],
                r.normal[1],
                r.normal[2],
                r.radius,
                r.m,
                r.n,
                r.delta,
                r.alpha,
                r.beta,
                r.gamma,
                r.b_local[0],
                r.b_local[1],
                r.h_local[0],
                r.h_local[1],
                r.margin,
            ]
            .map(csv_float),
        );
        rec.push(r.steerable.to_string());
        rec.push(r.indeterminate.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
