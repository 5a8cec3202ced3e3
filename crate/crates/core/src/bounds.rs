//! The lower-bound formulas, their hypothesis gates, and verification of
//! bounds and the gradient estimate against solver output.

use crate::chart::Chart;
use crate::eigen::EigenResult;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry;
use crate::quad::tanh_sinh;
use crate::space1d::{Bc, ModelSpace1D, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiPMode {
    ClosedForm,
    Quadrature,
}

/// The generalized half-period pi_p = 2 int_0^1 (1 - s^p)^{-1/p} ds.
pub fn pi_p(p: f64, mode: PiPMode) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("pi_p needs p > 1, got {p}")));
    }
    Ok(match mode {
        PiPMode::ClosedForm => {
            2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin())
        }
        PiPMode::Quadrature => {
            // integrable endpoint singularity at s = 1; evaluate 1 - s^p
            // through the distance to the endpoint to dodge cancellation
            2.0 * tanh_sinh(
                |_s, _da, db| {
                    let one_minus_sp = -f64::exp_m1(p * f64::ln_1p(-db));
                    one_minus_sp.powf(-1.0 / p)
                },
                0.0,
                1.0,
                1e-12,
            )
        }
    })
}

/// Eq (1.8) / (1.9): the Lichnerowicz-type bound under Ric_f^m >= K g, K > 0.
pub fn bound_lichnerowicz(p: f64, m: Option<f64>, k: f64) -> Result<f64> {
    if p < 2.0 {
        return Err(Error::NotApplicable(format!("requires p >= 2, got p = {p}")));
    }
    if k <= 0.0 {
        return Err(Error::NotApplicable(format!("requires K > 0, got K = {k}")));
    }
    match m {
        Some(m) => {
            if m <= 1.0 {
                return Err(Error::InvalidArgument(format!("finite m = {m} must exceed 1")));
            }
            Ok((m * k / (m - 1.0)).powf(p / 2.0) / (p - 1.0).powf(p - 1.0))
        }
        None => Ok(k.powf(p / 2.0) / (p - 1.0).powf(p - 1.0)),
    }
}

/// Theorem 1.3: the zero-curvature diameter bound (p-1)(pi_p / 2D)^p.
pub fn bound_liyau(p: f64, d: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("requires p > 1, got {p}")));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("requires D > 0, got {d}")));
    }
    Ok((p - 1.0) * (pi_p(p, PiPMode::ClosedForm)? / (2.0 * d)).powf(p))
}

/// Theorem 1.5: the negative-curvature bound C(p,m) D^{-p} e^{-sqrt((m-1)K) D}
/// with C(p,m) = 2/(m+1) (p/(p-1))^{p-1} e^{-p}.
pub fn bound_negative(p: f64, m: Option<f64>, k: f64, d: f64) -> Result<f64> {
    let Some(m) = m else {
        return Err(Error::NotApplicable("requires finite m".into()));
    };
    if !(p > 1.0) || m <= 1.0 || !(d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "requires p > 1, m > 1, D > 0; got p = {p}, m = {m}, D = {d}"
        )));
    }
    if k < 0.0 {
        return Err(Error::InvalidArgument(format!("requires K >= 0, got {k}")));
    }
    let c = 2.0 / (m + 1.0) * (p / (p - 1.0)).powf(p - 1.0) * (-p).exp();
    Ok(c * d.powf(-p) * (-(((m - 1.0) * k).sqrt()) * d).exp())
}

#[derive(Debug, Clone, Copy)]
pub struct Hypotheses {
    /// Infimum over samples of the minimum generalized eigenvalue of Ric_f^m.
    pub k_min: f64,
    /// None encodes m = infinity.
    pub m: Option<f64>,
    pub d: f64,
    pub has_boundary: bool,
    pub hf_min: Option<f64>,
    pub ii_min: Option<f64>,
    pub p: f64,
}

/// Either flavor of space the scanners accept.
pub enum SpaceRef<'a> {
    Model(&'a ModelSpace1D),
    Chart(&'a Chart),
}

pub fn hypothesis_scan(
    space: &SpaceRef,
    f: &ScalarField,
    m: Option<f64>,
    p: f64,
    samples: usize,
) -> Result<Hypotheses> {
    if samples < 64 {
        return Err(Error::InvalidArgument(format!("samples = {samples} < 64")));
    }
    match space {
        SpaceRef::Model(model) => {
            let k_min = model.curvature_min(m, samples)?;
            let (has_boundary, hf_min, ii_min) = match model.kind {
                SpaceKind::Circle | SpaceKind::SphereN => (false, None, None),
                SpaceKind::Interval => {
                    // point boundaries: II vanishes and H_f = -df/dn
                    let j0 = model.f.eval_jet(&[0.0], 1)?;
                    let j1 = model.f.eval_jet(&[model.length], 1)?;
                    let hf = j0.partial(0).value().min(-j1.partial(0).value());
                    (true, Some(hf), Some(0.0))
                }
                SpaceKind::BallN => {
                    let r = model.length;
                    let jr = model.f.eval_jet(&[r], 1)?;
                    let n = model.n_ambient as f64;
                    let hf = (n - 1.0) / r - jr.partial(0).value();
                    (true, Some(hf), Some(1.0 / r))
                }
            };
            Ok(Hypotheses {
                k_min,
                m,
                d: model.diameter,
                has_boundary,
                hf_min,
                ii_min,
                p,
            })
        }
        SpaceRef::Chart(chart) => {
            let boxes = chart.sampling_box();
            let per_axis = match chart.dim {
                1 => samples,
                _ => (samples as f64).sqrt().ceil() as usize,
            };
            let mut k_min = f64::INFINITY;
            let mut visit = |x: &[f64]| -> Result<()> {
                let curv = geometry::curvature(chart, f, m, x)?;
                k_min = k_min.min(curv.min_eig);
                Ok(())
            };
            match chart.dim {
                1 => {
                    for i in 0..=per_axis {
                        let x =
                            boxes[0].0 + (boxes[0].1 - boxes[0].0) * i as f64 / per_axis as f64;
                        visit(&[x])?;
                    }
                }
                _ => {
                    for i in 0..=per_axis {
                        for j in 0..=per_axis {
                            let x0 = boxes[0].0
                                + (boxes[0].1 - boxes[0].0) * i as f64 / per_axis as f64;
                            let x1 = boxes[1].0
                                + (boxes[1].1 - boxes[1].0) * j as f64 / per_axis as f64;
                            visit(&[x0, x1])?;
                        }
                    }
                }
            }
            let has_boundary = chart.has_boundary();
            let (hf_min, ii_min) = if has_boundary {
                let mut hf = f64::INFINITY;
                let mut ii = f64::INFINITY;
                for (seg_idx, seg) in chart.boundary.iter().enumerate() {
                    let (lo, hi) = seg.param_range;
                    for k in 0..=per_axis.max(64) {
                        let s = lo + (hi - lo) * k as f64 / per_axis.max(64) as f64;
                        let data = geometry::boundary_geometry(chart, f, seg_idx, s)?;
                        hf = hf.min(data.h_f);
                        ii = ii.min(data.ii);
                    }
                }
                (Some(hf), Some(ii))
            } else {
                (None, None)
            };
            let d = chart.diameter;
            if !(d > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "chart {} has no usable diameter metadata",
                    chart.id.as_str()
                )));
            }
            Ok(Hypotheses {
                k_min,
                m,
                d,
                has_boundary,
                hf_min,
                ii_min,
                p,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    T11Closed,
    T11Dirichlet,
    T11Neumann,
    T13Closed,
    T13Dirichlet,
    T13Neumann,
    T15,
}

impl TheoremId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::T11Closed => "T1.1-closed",
            TheoremId::T11Dirichlet => "T1.1-dirichlet",
            TheoremId::T11Neumann => "T1.1-neumann",
            TheoremId::T13Closed => "T1.3-closed",
            TheoremId::T13Dirichlet => "T1.3-dirichlet",
            TheoremId::T13Neumann => "T1.3-neumann",
            TheoremId::T15 => "T1.5",
        }
    }

    pub fn parse(s: &str) -> Result<TheoremId> {
        Ok(match s {
            "T1.1-closed" => TheoremId::T11Closed,
            "T1.1-dirichlet" => TheoremId::T11Dirichlet,
            "T1.1-neumann" => TheoremId::T11Neumann,
            "T1.3-closed" => TheoremId::T13Closed,
            "T1.3-dirichlet" => TheoremId::T13Dirichlet,
            "T1.3-neumann" => TheoremId::T13Neumann,
            "T1.5" => TheoremId::T15,
            other => return Err(Error::InvalidArgument(format!("unknown theorem id {other}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub applicable: bool,
    pub reason: String,
    pub rhs: f64,
    pub lambda: f64,
    pub margin: f64,
    pub pass: bool,
}

const MARGIN_TOL: f64 = 1e-6;

fn inapplicable(theorem: TheoremId, lambda: f64, reason: String) -> BoundReport {
    BoundReport {
        theorem,
        applicable: false,
        reason,
        rhs: f64::NAN,
        lambda,
        margin: f64::NAN,
        pass: true,
    }
}

/// Gate a theorem's hypotheses exactly and compare lambda against its bound.
pub fn check_bound(theorem: TheoremId, hyp: &Hypotheses, lambda: f64) -> Result<BoundReport> {
    use TheoremId::*;
    let boundary_gate = |needs: &str| -> Option<String> {
        match (needs, hyp.has_boundary) {
            ("closed", true) => Some("space has a boundary".into()),
            ("closed", false) => None,
            (_, false) => Some("space has no boundary".into()),
            ("dirichlet", true) => match hyp.hf_min {
                Some(hf) if hf >= 0.0 => None,
                Some(hf) => Some(format!("Hf_min = {hf} < 0")),
                None => Some("Hf_min unavailable".into()),
            },
            ("neumann", true) => match hyp.ii_min {
                Some(ii) if ii >= 0.0 => None,
                Some(ii) => Some(format!("II_min = {ii} < 0")),
                None => Some("II_min unavailable".into()),
            },
            _ => unreachable!(),
        }
    };
    let gate_failure: Option<String> = match theorem {
        T11Closed | T11Dirichlet | T11Neumann => {
            if hyp.p < 2.0 {
                Some(format!("p = {} < 2", hyp.p))
            } else if hyp.k_min <= 0.0 {
                Some(format!("K_min = {} is not positive", hyp.k_min))
            } else {
                let needs = match theorem {
                    T11Closed => "closed",
                    T11Dirichlet => "dirichlet",
                    _ => "neumann",
                };
                boundary_gate(needs)
            }
        }
        T13Closed | T13Dirichlet | T13Neumann => {
            if hyp.m.is_some() {
                Some("Theorem 1.3 is stated for Ric_f (m = infinity)".into())
            } else if hyp.k_min < 0.0 {
                Some(format!("K_min = {} < 0", hyp.k_min))
            } else {
                let needs = match theorem {
                    T13Closed => "closed",
                    T13Dirichlet => "dirichlet",
                    _ => "neumann",
                };
                boundary_gate(needs)
            }
        }
        T15 => match hyp.m {
            None => Some("Theorem 1.5 requires finite m".into()),
            Some(_) => {
                if !hyp.has_boundary {
                    None
                } else {
                    match hyp.ii_min {
                        Some(ii) if ii >= 0.0 => None,
                        Some(ii) => Some(format!("boundary not convex: II_min = {ii}")),
                        None => Some("II_min unavailable".into()),
                    }
                }
            }
        },
    };
    if let Some(reason) = gate_failure {
        return Ok(inapplicable(theorem, lambda, reason));
    }
    let rhs = match theorem {
        T11Closed | T11Dirichlet | T11Neumann => {
            bound_lichnerowicz(hyp.p, hyp.m, hyp.k_min)?
        }
        T13Closed | T13Dirichlet | T13Neumann => bound_liyau(hyp.p, hyp.d)?,
        T15 => {
            let m = hyp.m.unwrap();
            // the theorem is phrased with Ric_f^m >= -(m-1)K, K >= 0
            let k = (-hyp.k_min).max(0.0) / (m - 1.0);
            bound_negative(hyp.p, Some(m), k, hyp.d)?
        }
    };
    let margin = lambda - rhs;
    Ok(BoundReport {
        theorem,
        applicable: true,
        reason: String::new(),
        rhs,
        lambda,
        margin,
        pass: margin >= -MARGIN_TOL * rhs.abs().max(1.0),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GradientEstimate {
    pub max_f: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Lemma 3.1 check: |u'|^p / (1 - |u|^p) <= lambda / (p-1) on closed spaces
/// with nonnegative Ric_f.
pub fn gradient_estimate_check(
    space: &ModelSpace1D,
    result: &EigenResult,
    p: f64,
) -> Result<GradientEstimate> {
    if space.bc != Bc::Closed {
        return Err(Error::NotApplicable(
            "gradient estimate requires a closed space".into(),
        ));
    }
    let k_min = space.curvature_min(None, 4096)?;
    if k_min < -1e-10 {
        return Err(Error::NotApplicable(format!(
            "Ric_f >= 0 violated: K_min = {k_min}"
        )));
    }
    // orient so the positive extremum dominates, then pull strictly inside
    // the unit band
    let max = result.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = result.u.iter().cloned().fold(f64::INFINITY, f64::min);
    let flip = if max.abs() >= min.abs() { 1.0 } else { -1.0 };
    let eps = 1e-6;
    let scale = (1.0 - eps) / max.abs().max(min.abs());
    let u: Vec<f64> = result.u.iter().map(|&v| flip * scale * v).collect();
    let n = u.len();
    let h = space.length / n as f64;
    let mut max_f = 0.0f64;
    for i in 0..n {
        let j = (i + 1) % n;
        let slope = (u[j] - u[i]) / h;
        let mid = 0.5 * (u[i] + u[j]);
        let denom = 1.0 - mid.abs().powf(p);
        if denom > 0.0 {
            max_f = max_f.max(slope.abs().powf(p) / denom);
        }
    }
    let bound = result.lambda / (p - 1.0);
    Ok(GradientEstimate {
        max_f,
        bound,
        pass: max_f <= bound * (1.0 + 1e-3),
    })
}
