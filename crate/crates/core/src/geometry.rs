//! Chart-based Riemannian calculus: Christoffel symbols, covariant
//! derivatives, Bakry-Emery curvature tensors and boundary geometry, all
//! differentiated through jets of the metric fields.

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jet::{Jet, Univariate};

/// Below this |grad u|^2 the direction-dependent quantities error out.
pub const DEGENERATE_W_THRESHOLD: f64 = 1e-12;

/// Jets of the metric, its inverse and the Christoffel symbols at a point.
///
/// Metric jets are exact to order 3, so Christoffel jets are valid to order 2
/// and curvature values (one more derivative) to order 1.
pub struct MetricFrame {
    pub dim: usize,
    pub g: Vec<Jet>,
    pub ginv: Vec<Jet>,
    pub det: Jet,
    /// Gamma^k_ij at k*dim*dim + i*dim + j.
    pub gamma: Vec<Jet>,
}

impl MetricFrame {
    pub fn new(chart: &Chart, x: &[f64]) -> Result<MetricFrame> {
        let dim = chart.dim;
        let mut g = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                g.push(chart.metric_entry(i, j).eval_jet(x, dim)?);
            }
        }
        let det = match dim {
            1 => g[0].clone(),
            2 => &(&g[0] * &g[3]) - &(&g[1] * &g[2]),
            _ => unreachable!("catalog charts are 1- or 2-dimensional"),
        };
        if det.value() <= 1e-300 || g[0].value() <= 0.0 {
            return Err(Error::SingularPoint(format!(
                "metric degenerate at {x:?} on {}",
                chart.id.as_str()
            )));
        }
        let det_inv = det.recip()?;
        let ginv = match dim {
            1 => vec![det_inv],
            2 => vec![
                &g[3] * &det_inv,
                -&(&g[1] * &det_inv),
                -&(&g[2] * &det_inv),
                &g[0] * &det_inv,
            ],
            _ => unreachable!(),
        };

        let mut gamma = vec![Jet::constant(0.0, dim); dim * dim * dim];
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    let mut sum = Jet::constant(0.0, dim);
                    for l in 0..dim {
                        let term = &(&g[j * dim + l].partial(i) + &g[i * dim + l].partial(j))
                            - &g[i * dim + j].partial(l);
                        sum = &sum + &(&ginv[k * dim + l] * &term);
                    }
                    gamma[(k * dim + i) * dim + j] = sum.scale(0.5);
                }
            }
        }
        Ok(MetricFrame {
            dim,
            g,
            ginv,
            det,
            gamma,
        })
    }

    pub fn g_val(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.dim + j].value()
    }

    pub fn ginv_val(&self, i: usize, j: usize) -> f64 {
        self.ginv[i * self.dim + j].value()
    }

    pub fn gamma_jet(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.dim + i) * self.dim + j]
    }

    pub fn gamma_val(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma_jet(k, i, j).value()
    }

    /// Covariant Hessian of a scalar jet, as jets valid through order 1.
    pub fn hessian_jets(&self, field: &Jet) -> Vec<Jet> {
        let dim = self.dim;
        let mut out = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut h = field.partial(i).partial(j);
                for k in 0..dim {
                    h = &h - &(self.gamma_jet(k, i, j) * &field.partial(k));
                }
                out.push(h);
            }
        }
        out
    }

    /// <grad a, grad b> for scalar jets, as a jet.
    pub fn inner_grad(&self, a: &Jet, b: &Jet) -> Jet {
        let dim = self.dim;
        let mut sum = Jet::constant(0.0, dim);
        for i in 0..dim {
            for j in 0..dim {
                sum = &sum + &(&(&self.ginv[i * dim + j] * &a.partial(i)) * &b.partial(j));
            }
        }
        sum
    }
}

/// Christoffel symbols Gamma^k_ij at a point, index [k][i][j].
pub fn christoffel(chart: &Chart, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let frame = MetricFrame::new(chart, x)?;
    let dim = chart.dim;
    let mut out = vec![vec![vec![0.0; dim]; dim]; dim];
    for k in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                out[k][i][j] = frame.gamma_val(k, i, j);
            }
        }
    }
    Ok(out)
}

/// First-order covariant data of u at a point.
#[derive(Debug, Clone)]
pub struct CovariantData {
    /// Contravariant gradient components.
    pub grad_u: Vec<f64>,
    /// |grad u|^2.
    pub w: f64,
    /// Covariant Hessian, row-major.
    pub hess_u: Vec<f64>,
    pub lap_u: f64,
    pub lap_f_u: f64,
    /// Normalized infinity-Laplacian; defined only where w is nondegenerate.
    pub delta_inf_u: Option<f64>,
    pub hess_sq: f64,
    /// |Hess u|^2_A for the given p; requires w nondegenerate unless p = 2.
    pub hess_sq_a: Option<f64>,
}

pub fn covariant_data(
    chart: &Chart,
    u: &ScalarField,
    f: &ScalarField,
    p: f64,
    x: &[f64],
) -> Result<CovariantData> {
    let frame = MetricFrame::new(chart, x)?;
    let dim = chart.dim;
    let u_jet = u.eval_jet(x, dim)?;
    let f_jet = f.eval_jet(x, dim)?;

    let du: Vec<f64> = (0..dim).map(|i| u_jet.partial(i).value()).collect();
    let df: Vec<f64> = (0..dim).map(|i| f_jet.partial(i).value()).collect();
    let grad_u: Vec<f64> = (0..dim)
        .map(|i| (0..dim).map(|j| frame.ginv_val(i, j) * du[j]).sum())
        .collect();
    let w: f64 = (0..dim).map(|i| grad_u[i] * du[i]).sum();

    let hess_jets = frame.hessian_jets(&u_jet);
    let hess_u: Vec<f64> = hess_jets.iter().map(|h| h.value()).collect();
    let lap_u: f64 = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| frame.ginv_val(i, j) * hess_u[i * dim + j])
        .sum();
    let grad_f_dot_grad_u: f64 = (0..dim).map(|i| grad_u[i] * df[i]).sum();
    let lap_f_u = lap_u - grad_f_dot_grad_u;

    // |Hess u|^2 with both index pairs raised.
    let mut hess_sq = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    hess_sq += frame.ginv_val(i, k)
                        * frame.ginv_val(j, l)
                        * hess_u[i * dim + j]
                        * hess_u[k * dim + l];
                }
            }
        }
    }

    if w <= DEGENERATE_W_THRESHOLD {
        if p != 2.0 {
            return Err(Error::DegenerateGradient(format!(
                "|grad u|^2 = {w:.3e} at {x:?} with p = {p}"
            )));
        }
        return Ok(CovariantData {
            grad_u,
            w,
            hess_u,
            lap_u,
            lap_f_u,
            delta_inf_u: None,
            hess_sq,
            hess_sq_a: Some(hess_sq),
        });
    }

    let hess_grad_grad: f64 = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| hess_u[i * dim + j] * grad_u[i] * grad_u[j])
        .sum();
    let delta_inf = hess_grad_grad / w;

    // w as a jet gives grad w for the A-norm identity.
    let w_jet = w_as_jet(&frame, &u_jet);
    let dw: Vec<f64> = (0..dim).map(|i| w_jet.partial(i).value()).collect();
    let grad_w_sq: f64 = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| frame.ginv_val(i, j) * dw[i] * dw[j])
        .sum();
    let du_dot_dw: f64 = (0..dim).map(|i| grad_u[i] * dw[i]).sum();
    let hess_sq_a = hess_sq
        + (p - 2.0) / 2.0 * grad_w_sq / w
        + (p - 2.0).powi(2) / 4.0 * du_dot_dw.powi(2) / (w * w);

    Ok(CovariantData {
        grad_u,
        w,
        hess_u,
        lap_u,
        lap_f_u,
        delta_inf_u: Some(delta_inf),
        hess_sq,
        hess_sq_a: Some(hess_sq_a),
    })
}

/// |grad u|^2 as a jet (valid through order 2).
pub fn w_as_jet(frame: &MetricFrame, u_jet: &Jet) -> Jet {
    let dim = frame.dim;
    let mut w = Jet::constant(0.0, dim);
    for i in 0..dim {
        for j in 0..dim {
            w = &w + &(&(&frame.ginv[i * dim + j] * &u_jet.partial(i)) * &u_jet.partial(j));
        }
    }
    w
}

/// Curvature tensors and the smallest generalized eigenvalue of Ric_f^m.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub ric: Vec<f64>,
    pub ric_f: Vec<f64>,
    pub ric_fm: Vec<f64>,
    pub min_eig: f64,
}

pub fn curvature(chart: &Chart, f: &ScalarField, m: Option<f64>, x: &[f64]) -> Result<CurvatureData> {
    let dim = chart.dim;
    if let Some(m) = m {
        if m <= dim as f64 {
            return Err(Error::InvalidArgument(format!(
                "m = {m} must exceed the chart dimension {dim} (or be infinite)"
            )));
        }
    }
    let frame = MetricFrame::new(chart, x)?;
    let ric = ricci_values(&frame);

    let f_jet = f.eval_jet(x, dim)?;
    let hess_f = frame.hessian_jets(&f_jet);
    let df: Vec<f64> = (0..dim).map(|i| f_jet.partial(i).value()).collect();

    let mut ric_f = ric.clone();
    for i in 0..dim * dim {
        ric_f[i] += hess_f[i].value();
    }
    let mut ric_fm = ric_f.clone();
    if let Some(m) = m {
        let denom = m - dim as f64;
        for i in 0..dim {
            for j in 0..dim {
                ric_fm[i * dim + j] -= df[i] * df[j] / denom;
            }
        }
    }

    let g: Vec<f64> = (0..dim * dim).map(|i| frame.g[i].value()).collect();
    let min_eig = min_generalized_eig(&ric_fm, &g, dim);
    Ok(CurvatureData {
        ric,
        ric_f,
        ric_fm,
        min_eig,
    })
}

/// Ricci tensor values from Christoffel jets:
/// R_ij = d_k Gamma^k_ij - d_j Gamma^k_ki + Gamma^k_kl Gamma^l_ij - Gamma^k_jl Gamma^l_ki.
pub fn ricci_values(frame: &MetricFrame) -> Vec<f64> {
    let dim = frame.dim;
    let mut ric = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut r = 0.0;
            for k in 0..dim {
                r += frame.gamma_jet(k, i, j).partial(k).value();
                r -= frame.gamma_jet(k, k, i).partial(j).value();
                for l in 0..dim {
                    r += frame.gamma_val(k, k, l) * frame.gamma_val(l, i, j);
                    r -= frame.gamma_val(k, j, l) * frame.gamma_val(l, k, i);
                }
            }
            ric[i * dim + j] = r;
        }
    }
    ric
}

/// Smallest root of det(A - mu G) = 0 for symmetric A against SPD G.
pub fn min_generalized_eig(a: &[f64], g: &[f64], dim: usize) -> f64 {
    match dim {
        1 => a[0] / g[0],
        2 => {
            let det_g = g[0] * g[3] - g[1] * g[2];
            let b = a[0] * g[3] + a[3] * g[0] - a[1] * g[2] - a[2] * g[1];
            let det_a = a[0] * a[3] - a[1] * a[2];
            // det_g * mu^2 - b * mu + det_a = 0
            let disc = (b * b - 4.0 * det_g * det_a).max(0.0).sqrt();
            (b - disc) / (2.0 * det_g)
        }
        _ => unreachable!(),
    }
}

/// Expanded weighted p-Laplacian w^{p/2-1}(Delta_f u + (p-2) Delta_inf u).
pub fn p_laplacian(
    chart: &Chart,
    f: &ScalarField,
    p: f64,
    u: &ScalarField,
    x: &[f64],
) -> Result<f64> {
    let data = covariant_data(chart, u, f, p, x)?;
    if p == 2.0 {
        return Ok(data.lap_f_u);
    }
    let delta_inf = data.delta_inf_u.ok_or_else(|| {
        Error::DegenerateGradient(format!("|grad u|^2 = {:.3e} at {x:?}", data.w))
    })?;
    Ok(data.w.powf(p / 2.0 - 1.0) * (data.lap_f_u + (p - 2.0) * delta_inf))
}

/// Geometry and field data on a boundary segment at parameter s.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub point: Vec<f64>,
    /// Contravariant components of the outward unit normal.
    pub normal: Vec<f64>,
    /// Second fundamental form on the unit tangent.
    pub ii: f64,
    pub h: f64,
    pub h_f: f64,
    pub u_n: f64,
    /// Tangential gradient of u, component along the unit tangent.
    pub grad_bdy_u: f64,
    pub lap_bdy_f_u: f64,
    /// Arc-length derivative of s -> u_n(s).
    pub grad_bdy_un: f64,
    /// Boundary volume element sqrt(g_bb) at s.
    pub sqrt_induced: f64,
}

pub fn boundary_data(
    chart: &Chart,
    f: &ScalarField,
    u: &ScalarField,
    segment: usize,
    s: f64,
) -> Result<BoundaryData> {
    let seg = chart.boundary.get(segment).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "chart {} has no boundary segment {segment}",
            chart.id.as_str()
        ))
    })?;
    let dim = chart.dim;
    let a = seg.fixed_axis;
    let b = seg.param_axis;
    let mut x = vec![0.0; dim];
    x[a] = seg.fixed_value;
    x[b] = s;

    let frame = MetricFrame::new(chart, &x)?;
    debug_assert!(
        frame.g_val(a, b).abs() < 1e-14,
        "catalog boundary charts have diagonal metrics"
    );

    // Outward unit normal along the fixed axis.
    let n_a_jet = Jet::chain(Univariate::Pow(-0.5), &frame.g[a * dim + a])?.scale(seg.outward_sign);
    let mut normal = vec![0.0; dim];
    normal[a] = n_a_jet.value();

    let ii = frame.gamma_val(b, b, a) * normal[a];
    let h = ii;

    let f_jet = f.eval_jet(&x, dim)?;
    let grad_f_dot_n = f_jet.partial(a).value() * normal[a];
    let h_f = h - grad_f_dot_n;

    let u_jet = u.eval_jet(&x, dim)?;
    let un_jet = u_jet.partial(a).try_mul(&n_a_jet)?;
    let u_n = un_jet.value();

    let g_bb = frame.g[b * dim + b].clone();
    let big_g = g_bb.value();
    let big_g_prime = g_bb.partial(b).value();
    let sqrt_g = big_g.sqrt();

    let u_s = u_jet.partial(b).value();
    let u_ss = u_jet.partial(b).partial(b).value();
    let f_s = f_jet.partial(b).value();

    let grad_bdy_u = u_s / sqrt_g;
    let lap_bdy_u = u_ss / big_g - big_g_prime * u_s / (2.0 * big_g * big_g);
    let lap_bdy_f_u = lap_bdy_u - f_s * u_s / big_g;
    let grad_bdy_un = un_jet.partial(b).value() / sqrt_g;

    Ok(BoundaryData {
        point: x,
        normal,
        ii,
        h,
        h_f,
        u_n,
        grad_bdy_u,
        lap_bdy_f_u,
        grad_bdy_un,
        sqrt_induced: sqrt_g,
    })
}

/// Geometry-only boundary data (n, II, H, H_f).
pub fn boundary_geometry(
    chart: &Chart,
    f: &ScalarField,
    segment: usize,
    s: f64,
) -> Result<BoundaryData> {
    boundary_data(chart, f, &ScalarField::zero(), segment, s)
}
