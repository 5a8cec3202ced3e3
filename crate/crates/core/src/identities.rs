//! Pointwise p-Bochner identities and the integrated p-Reilly identity,
//! evaluated as residuals between two deliberately independent code paths.
//!
//! The left-hand sides differentiate composed power-of-gradient fields through
//! jets; the right-hand sides are assembled from covariant data and curvature.
//! A shared transcription bug therefore cannot cancel out of the residual.

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{
    self, boundary_data, curvature, MetricFrame, DEGENERATE_W_THRESHOLD,
};
use crate::jet::Jet;
use crate::quad::{gauss_legendre_on, periodic_trapezoid};

/// Quadrature resolution for the Reilly identity.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    pub interior_nodes_per_axis: usize,
    pub boundary_nodes: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            interior_nodes_per_axis: 64,
            boundary_nodes: 256,
        }
    }
}

/// Both sides of Eqs for L_f and the curly linearized operator, with
/// normalized residuals.
#[derive(Debug, Clone)]
pub struct BochnerResidual {
    pub lhs22: f64,
    pub rhs22: f64,
    pub lhs23: f64,
    pub rhs23: f64,
    pub res22: f64,
    pub res23: f64,
    /// Largest summand magnitude, used for normalization.
    pub scale: f64,
}

/// Interior and boundary sides of the integrated identity.
#[derive(Debug, Clone)]
pub struct ReillyResidual {
    pub interior_lhs: f64,
    pub boundary_rhs: f64,
    pub residual: f64,
    pub quad_nodes: (usize, usize),
    /// p = 2 cross-check: boundary integral in the integrated-by-parts form.
    pub p2_variant_boundary: Option<f64>,
    /// Bound on the contribution of the collar omitted around singular axes.
    pub collar_bound: f64,
}

/// All jets of u-derived quantities needed at one point.
///
/// Validity orders: `u_jet` is exact to 3, first derivatives to 2, the
/// composed fields (w, psi) to 2, and everything involving second covariant
/// derivatives (Hessians, the p-Laplacian) to 1.
pub struct PointCalculus {
    pub frame: MetricFrame,
    pub dim: usize,
    pub p: f64,
    pub u_jet: Jet,
    pub f_jet: Jet,
    /// Contravariant gradient components as jets.
    pub grad_u: Vec<Jet>,
    pub w_jet: Jet,
    pub hess_u: Vec<Jet>,
    pub lap_f_u: Jet,
    pub delta_inf: Jet,
    /// Composed weighted p-Laplacian of u as a jet.
    pub dpf: Jet,
}

impl PointCalculus {
    pub fn new(
        chart: &Chart,
        u: &ScalarField,
        f: &ScalarField,
        p: f64,
        x: &[f64],
    ) -> Result<PointCalculus> {
        let dim = chart.dim;
        let frame = MetricFrame::new(chart, x)?;
        let u_jet = u.eval_jet(x, dim)?;
        let f_jet = f.eval_jet(x, dim)?;

        let grad_u: Vec<Jet> = (0..dim)
            .map(|i| {
                let mut v = Jet::constant(0.0, dim);
                for j in 0..dim {
                    v = &v + &(&frame.ginv[i * dim + j] * &u_jet.partial(j));
                }
                v
            })
            .collect();
        let w_jet = geometry::w_as_jet(&frame, &u_jet);
        if w_jet.value() <= DEGENERATE_W_THRESHOLD {
            return Err(Error::DegenerateGradient(format!(
                "|grad u|^2 = {:.3e} at {x:?}",
                w_jet.value()
            )));
        }

        let hess_u = frame.hessian_jets(&u_jet);
        let mut lap_u = Jet::constant(0.0, dim);
        for i in 0..dim {
            for j in 0..dim {
                lap_u = &lap_u + &(&frame.ginv[i * dim + j] * &hess_u[i * dim + j]);
            }
        }
        let lap_f_u = &lap_u - &frame.inner_grad(&f_jet, &u_jet);

        let mut hess_grad_grad = Jet::constant(0.0, dim);
        for i in 0..dim {
            for j in 0..dim {
                let t = hess_u[i * dim + j].try_mul(&grad_u[i])?;
                hess_grad_grad = &hess_grad_grad + &t.try_mul(&grad_u[j])?;
            }
        }
        let delta_inf = hess_grad_grad.try_mul(&w_jet.recip()?)?;

        let dpf = if p == 2.0 {
            lap_f_u.clone()
        } else {
            let factor = w_jet.powf(p / 2.0 - 1.0)?;
            factor.try_mul(&(&lap_f_u + &delta_inf.scale(p - 2.0)))?
        };

        Ok(PointCalculus {
            frame,
            dim,
            p,
            u_jet,
            f_jet,
            grad_u,
            w_jet,
            hess_u,
            lap_f_u,
            delta_inf,
            dpf,
        })
    }

    pub fn w(&self) -> f64 {
        self.w_jet.value()
    }

    /// Hess psi(grad u, grad u) at order 0 for a scalar jet psi.
    fn hess_on_grad(&self, psi: &Jet) -> f64 {
        let hess = self.frame.hessian_jets(psi);
        let mut out = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out += hess[i * self.dim + j].value()
                    * self.grad_u[i].value()
                    * self.grad_u[j].value();
            }
        }
        out
    }

    /// Hess u(grad u, grad psi) at order 0.
    fn hess_u_grad_u_grad(&self, psi: &Jet) -> f64 {
        let mut out = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let grad_psi_j: f64 = (0..self.dim)
                    .map(|k| self.frame.ginv_val(j, k) * psi.partial(k).value())
                    .sum();
                out += self.hess_u[i * self.dim + j].value() * self.grad_u[i].value() * grad_psi_j;
            }
        }
        out
    }

    fn lap_f_of(&self, psi: &Jet) -> f64 {
        let hess = self.frame.hessian_jets(psi);
        let mut lap = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                lap += self.frame.ginv_val(i, j) * hess[i * self.dim + j].value();
            }
        }
        lap - self.frame.inner_grad(&self.f_jet, psi).value()
    }

    /// Second-order linearized operator L_f applied to a scalar jet.
    pub fn straight_apply(&self, psi: &Jet) -> f64 {
        let w = self.w();
        let p = self.p;
        w.powf(p / 2.0 - 1.0) * self.lap_f_of(psi)
            + (p - 2.0) * w.powf(p / 2.0 - 2.0) * self.hess_on_grad(psi)
    }

    /// Full linearized operator including the first-order terms.
    pub fn curly_apply(&self, psi: &Jet) -> f64 {
        let w = self.w();
        let p = self.p;
        let grad_u_grad_psi = self.frame.inner_grad(&self.u_jet, psi).value();
        let hess_u_mixed = self.hess_u_grad_u_grad(psi);
        let delta_inf = self.delta_inf.value();
        // Hess u(grad u, grad psi - grad u <grad u, grad psi>/w)
        let orthogonal_part = hess_u_mixed - delta_inf * grad_u_grad_psi;
        self.straight_apply(psi)
            + (p - 2.0) * self.dpf.value() * grad_u_grad_psi / w
            + 2.0 * (p - 2.0) * w.powf(p / 2.0 - 2.0) * orthogonal_part
    }
}

/// The field x -> |grad u|^p, evaluable to a jet valid through order 2.
///
/// Not an expression tree: the metric contraction is assembled from jets of u
/// and the chart metric at each evaluation point.
pub struct GradPowerField<'a> {
    chart: &'a Chart,
    u: &'a ScalarField,
    p: f64,
}

pub fn grad_power_field<'a>(chart: &'a Chart, u: &'a ScalarField, p: f64) -> GradPowerField<'a> {
    GradPowerField { chart, u, p }
}

impl GradPowerField<'_> {
    pub fn eval_jet(&self, x: &[f64]) -> Result<Jet> {
        let frame = MetricFrame::new(self.chart, x)?;
        let u_jet = self.u.eval_jet(x, self.chart.dim)?;
        let w = geometry::w_as_jet(&frame, &u_jet);
        if w.value() <= DEGENERATE_W_THRESHOLD {
            return Err(Error::DegenerateGradient(format!(
                "|grad u|^2 = {:.3e} at {x:?}",
                w.value()
            )));
        }
        w.powf(self.p / 2.0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_jet(x)?.value())
    }
}

/// Curly and straight linearized operators applied to psi at a point.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedApply {
    pub curly: f64,
    pub straight: f64,
}

pub fn linearized_apply(
    chart: &Chart,
    f: &ScalarField,
    p: f64,
    u: &ScalarField,
    psi: &ScalarField,
    x: &[f64],
) -> Result<LinearizedApply> {
    let calc = PointCalculus::new(chart, u, f, p, x)?;
    let psi_jet = psi.eval_jet(x, chart.dim)?;
    Ok(LinearizedApply {
        curly: calc.curly_apply(&psi_jet),
        straight: calc.straight_apply(&psi_jet),
    })
}

pub fn bochner_residual(
    chart: &Chart,
    f: &ScalarField,
    p: f64,
    u: &ScalarField,
    x: &[f64],
) -> Result<BochnerResidual> {
    if p < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "Bochner residuals require p >= 2, got {p}"
        )));
    }
    let calc = PointCalculus::new(chart, u, f, p, x)?;
    let dim = chart.dim;
    let w = calc.w();

    // LHS path: differentiate the composed field w^{p/2} through jets.
    let psi = calc.w_jet.powf(p / 2.0)?;
    let lhs22 = calc.straight_apply(&psi) / p;
    let lhs23 = calc.curly_apply(&psi) / p;

    // RHS path: assemble from covariant data and curvature.
    let curv = curvature(chart, f, None, x)?;
    let mut ric_f_grad_grad = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            ric_f_grad_grad +=
                curv.ric_f[i * dim + j] * calc.grad_u[i].value() * calc.grad_u[j].value();
        }
    }
    let mut hess_sq = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    hess_sq += calc.frame.ginv_val(i, k)
                        * calc.frame.ginv_val(j, l)
                        * calc.hess_u[i * dim + j].value()
                        * calc.hess_u[k * dim + l].value();
                }
            }
        }
    }
    let delta_inf = calc.delta_inf.value();
    let dpf = calc.dpf.value();
    let grad_dpf_grad_u = calc.frame.inner_grad(&calc.dpf, &calc.u_jet).value();

    let w_jet_for_a = &calc.w_jet;
    let dw: Vec<f64> = (0..dim).map(|i| w_jet_for_a.partial(i).value()).collect();
    let mut grad_w_sq = 0.0;
    let mut du_dot_dw = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            grad_w_sq += calc.frame.ginv_val(i, j) * dw[i] * dw[j];
        }
        du_dot_dw += calc.grad_u[i].value() * dw[i];
    }
    let hess_sq_a = hess_sq
        + (p - 2.0) / 2.0 * grad_w_sq / w
        + (p - 2.0).powi(2) / 4.0 * du_dot_dw.powi(2) / (w * w);

    let term22_second_order =
        w.powf(p - 2.0) * (hess_sq + p * (p - 2.0) * delta_inf * delta_inf + ric_f_grad_grad);
    let term22_first_order =
        w.powf(p / 2.0 - 1.0) * (grad_dpf_grad_u - (p - 2.0) * delta_inf * dpf);
    let rhs22 = term22_second_order + term22_first_order;

    let rhs23 = w.powf(p - 2.0) * (hess_sq_a + ric_f_grad_grad)
        + w.powf(p / 2.0 - 1.0) * grad_dpf_grad_u;

    let scale = [
        lhs22.abs(),
        lhs23.abs(),
        term22_second_order.abs(),
        term22_first_order.abs(),
        (w.powf(p - 2.0) * hess_sq_a).abs(),
        (w.powf(p - 2.0) * ric_f_grad_grad).abs(),
        (w.powf(p / 2.0 - 1.0) * grad_dpf_grad_u).abs(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);

    let denom = scale.max(1.0);
    Ok(BochnerResidual {
        lhs22,
        rhs22,
        lhs23,
        rhs23,
        res22: (lhs22 - rhs22).abs() / denom,
        res23: (lhs23 - rhs23).abs() / denom,
        scale,
    })
}

/// Classical weighted Bochner formula residual, p-free code path.
///
/// (1/2) Delta_f |grad u|^2 = |Hess u|^2 + Ric_f(grad u, grad u)
///                          + <grad u, grad Delta_f u>.
pub fn classical_bochner_residual(
    chart: &Chart,
    f: &ScalarField,
    u: &ScalarField,
    x: &[f64],
) -> Result<(f64, f64)> {
    let calc = PointCalculus::new(chart, u, f, 2.0, x)?;
    let dim = chart.dim;
    let lhs = 0.5 * calc.lap_f_of(&calc.w_jet);

    let curv = curvature(chart, f, None, x)?;
    let mut ric_f_grad_grad = 0.0;
    let mut hess_sq = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            ric_f_grad_grad +=
                curv.ric_f[i * dim + j] * calc.grad_u[i].value() * calc.grad_u[j].value();
            for k in 0..dim {
                for l in 0..dim {
                    hess_sq += calc.frame.ginv_val(i, k)
                        * calc.frame.ginv_val(j, l)
                        * calc.hess_u[i * dim + j].value()
                        * calc.hess_u[k * dim + l].value();
                }
            }
        }
    }
    let rhs = hess_sq + ric_f_grad_grad + calc.frame.inner_grad(&calc.lap_f_u, &calc.u_jet).value();
    Ok((lhs, rhs))
}

/// Nodes (point, weight) for the interior of a chart: Gauss-Legendre on
/// bounded axes, trapezoid on periodic ones.
fn interior_nodes(chart: &Chart, n_per_axis: usize) -> Vec<(Vec<f64>, f64)> {
    let boxes = chart.interior_box();
    let mut per_axis: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for (axis, &(lo, hi)) in boxes.iter().enumerate() {
        if chart.periodic[axis] {
            per_axis.push(periodic_trapezoid(n_per_axis, lo, hi));
        } else {
            per_axis.push(gauss_legendre_on(n_per_axis, lo, hi));
        }
    }
    match chart.dim {
        1 => per_axis[0]
            .0
            .iter()
            .zip(&per_axis[0].1)
            .map(|(&x, &w)| (vec![x], w))
            .collect(),
        2 => {
            let mut out = Vec::with_capacity(n_per_axis * n_per_axis);
            for (&x0, &w0) in per_axis[0].0.iter().zip(&per_axis[0].1) {
                for (&x1, &w1) in per_axis[1].0.iter().zip(&per_axis[1].1) {
                    out.push((vec![x0, x1], w0 * w1));
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

pub fn reilly_residual(
    chart: &Chart,
    f: &ScalarField,
    p: f64,
    u: &ScalarField,
    quad: &QuadSpec,
) -> Result<ReillyResidual> {
    if !chart.has_boundary() {
        return Err(Error::InvalidArgument(format!(
            "chart {} has no boundary",
            chart.id.as_str()
        )));
    }
    if p < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "Reilly residual requires p >= 2, got {p}"
        )));
    }

    // Interior side. The collar omitted around singular axes contributes
    // O(offset^2) because the volume density vanishes linearly there, so a
    // tight offset keeps it far below the quadrature error.
    let mut quad_chart = chart.clone();
    quad_chart.interior_offset = 1e-5;
    let mut interior = 0.0;
    let mut max_integrand = 0.0f64;
    for (x, weight) in interior_nodes(&quad_chart, quad.interior_nodes_per_axis) {
        let calc = match PointCalculus::new(chart, u, f, p, &x) {
            Ok(c) => c,
            Err(Error::DegenerateGradient(_)) if p > 2.0 => {
                return Err(Error::DegenerateGradient(format!(
                    "interior quadrature node {x:?} has degenerate gradient with p = {p}"
                )))
            }
            Err(Error::DegenerateGradient(_)) => continue,
            Err(e) => return Err(e),
        };
        let dim = chart.dim;
        let curv = curvature(chart, f, None, &x)?;
        let mut ric_f_grad_grad = 0.0;
        let mut hess_sq = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                ric_f_grad_grad +=
                    curv.ric_f[i * dim + j] * calc.grad_u[i].value() * calc.grad_u[j].value();
                for k in 0..dim {
                    for l in 0..dim {
                        hess_sq += calc.frame.ginv_val(i, k)
                            * calc.frame.ginv_val(j, l)
                            * calc.hess_u[i * dim + j].value()
                            * calc.hess_u[k * dim + l].value();
                    }
                }
            }
        }
        let w = calc.w();
        let dw: Vec<f64> = (0..dim).map(|i| calc.w_jet.partial(i).value()).collect();
        let mut grad_w_sq = 0.0;
        let mut du_dot_dw = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                grad_w_sq += calc.frame.ginv_val(i, j) * dw[i] * dw[j];
            }
            du_dot_dw += calc.grad_u[i].value() * dw[i];
        }
        let hess_sq_a = hess_sq
            + (p - 2.0) / 2.0 * grad_w_sq / w
            + (p - 2.0).powi(2) / 4.0 * du_dot_dw.powi(2) / (w * w);

        let dpf = calc.dpf.value();
        let integrand = dpf * dpf - w.powf(p - 2.0) * (hess_sq_a + ric_f_grad_grad);
        let density = (-calc.f_jet.value()).exp() * calc.frame.det.value().sqrt();
        interior += integrand * density * weight;
        max_integrand = max_integrand.max((integrand * density).abs());
    }

    // Boundary side.
    let mut boundary = 0.0;
    let mut p2_variant = 0.0;
    for (seg_idx, seg) in chart.boundary.iter().enumerate() {
        let (lo, hi) = seg.param_range;
        let (nodes, weights) = if seg.param_periodic {
            periodic_trapezoid(quad.boundary_nodes, lo, hi)
        } else {
            gauss_legendre_on(quad.boundary_nodes, lo, hi)
        };
        for (&s, &wq) in nodes.iter().zip(&weights) {
            let data = boundary_data(chart, f, u, seg_idx, s)?;
            // Full |grad u|^2 at the boundary point.
            let cov = geometry::covariant_data(chart, u, f, 2.0, &data.point)?;
            let w_bdy = cov.w;
            let wpow = if p == 2.0 { 1.0 } else { w_bdy.powf(p - 2.0) };
            let core = (data.h_f * data.u_n + data.lap_bdy_f_u) * data.u_n
                + data.ii * data.grad_bdy_u * data.grad_bdy_u
                - data.grad_bdy_u * data.grad_bdy_un;
            let f_val = f.eval(&data.point)?;
            let sigma = (-f_val).exp() * data.sqrt_induced;
            boundary += wpow * core * sigma * wq;
            if p == 2.0 {
                let variant = (data.h_f * data.u_n + 2.0 * data.lap_bdy_f_u) * data.u_n
                    + data.ii * data.grad_bdy_u * data.grad_bdy_u;
                p2_variant += variant * sigma * wq;
            }
        }
    }

    // Bound on the omitted collar around singular axes.
    let full: Vec<(f64, f64)> = chart.domain.clone();
    let shrunk = quad_chart.interior_box();
    let mut collar_volume = 0.0;
    for axis in 0..chart.dim {
        let omitted = (shrunk[axis].0 - full[axis].0) + (full[axis].1 - shrunk[axis].1);
        if omitted > 0.0 {
            let other_extent: f64 = (0..chart.dim)
                .filter(|&a| a != axis)
                .map(|a| full[a].1 - full[a].0)
                .product();
            collar_volume += omitted * other_extent;
        }
    }
    let collar_bound = max_integrand * collar_volume;

    let residual = (interior - boundary).abs() / interior.abs().max(boundary.abs()).max(1.0);
    Ok(ReillyResidual {
        interior_lhs: interior,
        boundary_rhs: boundary,
        residual,
        quad_nodes: (quad.interior_nodes_per_axis, quad.boundary_nodes),
        p2_variant_boundary: (p == 2.0).then_some(p2_variant),
        collar_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn random_trig(rng: &mut ChaCha8Rng, dim: usize) -> ScalarField {
        let mut field = ScalarField::constant(rng.gen_range(-1.0..1.0));
        for axis in 0..dim {
            let coord = ScalarField::coord(axis);
            for k in 1..=2 {
                let arg = coord.scale(k as f64);
                field = field.add(&arg.sin().scale(rng.gen_range(-1.0..1.0)));
                field = field.add(&arg.cos().scale(rng.gen_range(-1.0..1.0)));
            }
            // affine part pushes critical points off the sampling lattice
            field = field.add(&coord.scale(rng.gen_range(0.2..0.8)));
        }
        field
    }

    #[test]
    fn grad_power_field_examples() {
        let plane = Chart::euclidean_plane();
        let u = ScalarField::parse("x", 2).unwrap();
        let field = grad_power_field(&plane, &u, 4.0);
        assert_relative_eq!(field.eval(&[0.3, 0.9]).unwrap(), 1.0, epsilon = 1e-13);

        let sphere = Chart::sphere2();
        let u_sph = ScalarField::parse("cos(theta)", 2).unwrap();
        let field = grad_power_field(&sphere, &u_sph, 2.0);
        assert_relative_eq!(
            field.eval(&[FRAC_PI_4, 1.0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );

        // 1D slice: u = x^2 at x = 1, p = 2 -> value 4, derivative 8.
        let line = Chart::line1d();
        let u_sq = ScalarField::parse("x^2", 1).unwrap();
        let field = grad_power_field(&line, &u_sq, 2.0);
        let jet = field.eval_jet(&[1.0]).unwrap();
        assert_relative_eq!(jet.value(), 4.0, epsilon = 1e-13);
        assert_relative_eq!(jet.partial(0).value(), 8.0, epsilon = 1e-13);
    }

    #[test]
    fn linearized_on_u_gives_p_laplacian() {
        let torus = Chart::flat_torus();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let u = random_trig(&mut rng, 2);
            let f = random_trig(&mut rng, 2);
            let p = *[2.0, 3.0, 4.0].get(rng.gen_range(0..3)).unwrap();
            let x = [rng.gen_range(0.5..5.5), rng.gen_range(0.5..5.5)];
            let calc = match PointCalculus::new(&torus, &u, &f, p, &x) {
                Ok(c) if c.w() > 0.1 => c,
                _ => continue,
            };
            let apply = linearized_apply(&torus, &f, p, &u, &u, &x).unwrap();
            let dpf = calc.dpf.value();
            assert_relative_eq!(apply.straight, dpf, max_relative = 1e-9);
            assert_relative_eq!(apply.curly, (p - 1.0) * dpf, max_relative = 1e-9);
        }
    }

    #[test]
    fn linearized_p2_reduces_to_weighted_laplacian() {
        let plane = Chart::euclidean_plane();
        let u = ScalarField::parse("x + 0.3*y", 2).unwrap();
        let f = ScalarField::parse("x^2/2", 2).unwrap();
        let psi = ScalarField::parse("sin(x)*cos(y)", 2).unwrap();
        let x = [0.4, 0.8];
        let apply = linearized_apply(&plane, &f, 2.0, &u, &psi, &x).unwrap();
        // Delta_f psi for psi = sin x cos y, f = x^2/2:
        let expected = -2.0 * x[0].sin() * x[1].cos() - x[0] * x[0].cos() * x[1].cos();
        assert_relative_eq!(apply.straight, expected, max_relative = 1e-10);
        assert_relative_eq!(apply.curly, expected, max_relative = 1e-10);
    }

    #[test]
    fn linearized_flat_p4_example() {
        // u = x, f = 0, p = 4, psi = y^2: straight = |grad u|^2 Delta psi = 2.
        let plane = Chart::euclidean_plane();
        let u = ScalarField::parse("x", 2).unwrap();
        let f = ScalarField::zero();
        let psi = ScalarField::parse("y^2", 2).unwrap();
        let apply = linearized_apply(&plane, &f, 4.0, &u, &psi, &[0.5, 0.7]).unwrap();
        assert_relative_eq!(apply.straight, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn bochner_classical_p2_on_torus() {
        let torus = Chart::flat_torus();
        let u = ScalarField::parse("sin(x) + 2*cos(y)", 2).unwrap();
        let f = ScalarField::zero();
        let res = bochner_residual(&torus, &f, 2.0, &u, &[1.0, 2.0]).unwrap();
        assert!(res.res22 <= 1e-8, "res22 = {:e}", res.res22);
        assert!(res.res23 <= 1e-8, "res23 = {:e}", res.res23);
    }

    #[test]
    fn bochner_linear_u_all_zero() {
        let plane = Chart::euclidean_plane();
        let u = ScalarField::parse("x + 2*y", 2).unwrap();
        let f = ScalarField::zero();
        for p in [2.0, 3.0, 4.0] {
            let res = bochner_residual(&plane, &f, p, &u, &[0.3, -0.4]).unwrap();
            assert!(res.lhs22.abs() < 1e-12 && res.rhs22.abs() < 1e-12);
            assert!(res.lhs23.abs() < 1e-12 && res.rhs23.abs() < 1e-12);
        }
    }

    #[test]
    fn bochner_sphere_weighted_p3() {
        let sphere = Chart::sphere2();
        let u = ScalarField::parse("cos(theta)", 2).unwrap();
        let f = ScalarField::parse("0.3*sin(theta)", 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let x = [rng.gen_range(0.5..2.6), rng.gen_range(0.2..6.0)];
            let res = bochner_residual(&sphere, &f, 3.0, &u, &x).unwrap();
            assert!(res.res22 <= 1e-7, "res22 = {:e} at {x:?}", res.res22);
            assert!(res.res23 <= 1e-7, "res23 = {:e} at {x:?}", res.res23);
        }
    }

    #[test]
    fn bochner_randomized_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let charts = [Chart::flat_torus(), Chart::sphere2()];
        let mut checked = 0;
        while checked < 20 {
            let chart = &charts[rng.gen_range(0..2)];
            let u = random_trig(&mut rng, 2);
            let f = random_trig(&mut rng, 2);
            let p = [2.0, 3.0, 4.0][rng.gen_range(0..3)];
            let boxes = chart.sampling_box();
            let x = [
                rng.gen_range(boxes[0].0.max(0.3)..boxes[0].1.min(boxes[0].0 + 10.0)),
                rng.gen_range(boxes[1].0..boxes[1].1),
            ];
            let Ok(calc) = PointCalculus::new(chart, &u, &f, p, &x) else {
                continue;
            };
            if calc.w() <= 0.1 {
                continue;
            }
            let res = bochner_residual(chart, &f, p, &u, &x).unwrap();
            assert!(
                res.res22 <= 1e-7 && res.res23 <= 1e-7,
                "residuals {:e}/{:e} for p={p} at {x:?} on {}",
                res.res22,
                res.res23,
                chart.id.as_str()
            );
            checked += 1;
        }
    }

    #[test]
    fn bochner_homogeneity_scaling() {
        // Both sides scale as c^{2p-2} under u -> c u.
        let torus = Chart::flat_torus();
        let f = ScalarField::parse("0.2*sin(x)", 2).unwrap();
        let u = ScalarField::parse("sin(x) + 2*cos(y) + 0.4*x", 2).unwrap();
        let x = [1.3, 2.2];
        for p in [2.0, 3.0] {
            let base = bochner_residual(&torus, &f, p, &u, &x).unwrap();
            for c in [2.0f64, -1.0] {
                let scaled_u = u.scale(c);
                let scaled = bochner_residual(&torus, &f, p, &scaled_u, &x).unwrap();
                let factor = c.abs().powf(2.0 * p - 2.0);
                assert_relative_eq!(scaled.lhs22, base.lhs22 * factor, max_relative = 1e-9);
                assert_relative_eq!(scaled.rhs22, base.rhs22 * factor, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn p2_reduction_matches_classical_path() {
        let sphere = Chart::sphere2();
        let u = ScalarField::parse("cos(theta) + 0.2*sin(theta)*cos(phi)", 2).unwrap();
        let f = ScalarField::parse("0.4*cos(theta)", 2).unwrap();
        let x = [1.1, 0.7];
        let res = bochner_residual(&sphere, &f, 2.0, &u, &x).unwrap();
        let (lhs, rhs) = classical_bochner_residual(&sphere, &f, &u, &x).unwrap();
        assert_relative_eq!(res.lhs23, lhs, max_relative = 1e-9);
        assert_relative_eq!(res.rhs23, rhs, max_relative = 1e-9);
    }

    #[test]
    fn reilly_disk_harmonic_p2() {
        let disk = Chart::disk_polar();
        let u = ScalarField::parse("r*cos(phi)", 2).unwrap();
        let f = ScalarField::zero();
        let res = reilly_residual(&disk, &f, 2.0, &u, &QuadSpec::default()).unwrap();
        assert!(res.interior_lhs.abs() < 1e-8, "{:e}", res.interior_lhs);
        assert!(res.boundary_rhs.abs() < 1e-8, "{:e}", res.boundary_rhs);
    }

    #[test]
    fn reilly_hemisphere_p2() {
        let hemi = Chart::hemisphere2();
        let u = ScalarField::parse("cos(theta)", 2).unwrap();
        let f = ScalarField::zero();
        let res = reilly_residual(&hemi, &f, 2.0, &u, &QuadSpec::default()).unwrap();
        assert!(res.interior_lhs.abs() < 1e-8, "{:e}", res.interior_lhs);
        assert!(res.boundary_rhs.abs() < 1e-8, "{:e}", res.boundary_rhs);
    }

    #[test]
    fn reilly_disk_weighted_p3() {
        let disk = Chart::disk_polar();
        let u = ScalarField::parse("r*cos(phi) + 2", 2).unwrap();
        let f = ScalarField::parse("0.2*r^2", 2).unwrap();
        let res = reilly_residual(&disk, &f, 3.0, &u, &QuadSpec::default()).unwrap();
        assert!(res.residual <= 1e-6, "residual {:e}", res.residual);
    }

    #[test]
    fn reilly_p2_variant_agrees_on_closed_boundary() {
        let disk = Chart::disk_polar();
        let u = ScalarField::parse("r^2*cos(phi) + 0.5*r*sin(phi) + 1.5", 2).unwrap();
        let f = ScalarField::parse("0.1*r^2", 2).unwrap();
        let res = reilly_residual(&disk, &f, 2.0, &u, &QuadSpec::default()).unwrap();
        let variant = res.p2_variant_boundary.unwrap();
        assert_relative_eq!(res.boundary_rhs, variant, epsilon = 1e-8);
    }

    #[test]
    fn reilly_missing_boundary_errors() {
        let torus = Chart::flat_torus();
        let u = ScalarField::parse("sin(x)", 2).unwrap();
        let f = ScalarField::zero();
        assert!(reilly_residual(&torus, &f, 2.0, &u, &QuadSpec::default()).is_err());
    }
}
