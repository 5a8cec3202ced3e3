//! 1D weighted model spaces: intervals, circles, and radial warped-product
//! reductions of spheres and balls.
//!
//! The density is rho(x) = J(x) e^{-f(x)} where J is the volume Jacobian of
//! the reduction. Curvature of the represented manifold is exposed through an
//! analytic per-family scanner rather than the chart machinery.

use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Interval,
    Circle,
    SphereN,
    BallN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    Dirichlet,
    Neumann,
    Closed,
    /// Free endpoint at a pole where the Jacobian vanishes; enforced as
    /// q = rho |u'|^{p-2} u' -> 0.
    Natural,
}

impl Bc {
    pub fn as_str(&self) -> &'static str {
        match self {
            Bc::Dirichlet => "dirichlet",
            Bc::Neumann => "neumann",
            Bc::Closed => "closed",
            Bc::Natural => "natural",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelSpace1D {
    pub kind: SpaceKind,
    /// Domain is [0, length]; circumference for circles.
    pub length: f64,
    pub f: ScalarField,
    /// Dimension of the manifold the space represents.
    pub n_ambient: usize,
    pub bc: Bc,
    pub diameter: f64,
}

const PERIODICITY_TOL: f64 = 1e-10;

impl ModelSpace1D {
    pub fn interval(length: f64, f: ScalarField, bc: Bc) -> Result<ModelSpace1D> {
        if length <= 0.0 {
            return Err(Error::InvalidSpace(format!("length {length} <= 0")));
        }
        if bc == Bc::Closed || bc == Bc::Natural {
            return Err(Error::InvalidSpace(format!(
                "interval does not support {} boundary conditions",
                bc.as_str()
            )));
        }
        let space = ModelSpace1D {
            kind: SpaceKind::Interval,
            length,
            f,
            n_ambient: 1,
            bc,
            diameter: length,
        };
        space.check_density()?;
        Ok(space)
    }

    pub fn circle(length: f64, f: ScalarField) -> Result<ModelSpace1D> {
        if length <= 0.0 {
            return Err(Error::InvalidSpace(format!("length {length} <= 0")));
        }
        // f must close up with matching jets to order 2.
        let j0 = f.eval_jet(&[0.0], 1)?;
        let j1 = f.eval_jet(&[length], 1)?;
        let d0 = [
            j0.value(),
            j0.partial(0).value(),
            j0.partial(0).partial(0).value(),
        ];
        let d1 = [
            j1.value(),
            j1.partial(0).value(),
            j1.partial(0).partial(0).value(),
        ];
        for k in 0..3 {
            if (d0[k] - d1[k]).abs() > PERIODICITY_TOL * d0[k].abs().max(1.0) {
                return Err(Error::InvalidSpace(format!(
                    "f is not periodic: order-{k} jet differs by {:.3e} across the seam",
                    (d0[k] - d1[k]).abs()
                )));
            }
        }
        let space = ModelSpace1D {
            kind: SpaceKind::Circle,
            length,
            f,
            n_ambient: 1,
            bc: Bc::Closed,
            diameter: length / 2.0,
        };
        space.check_density()?;
        Ok(space)
    }

    /// Radial reduction of the unit n-sphere: J = sin^{n-1} x on [0, pi].
    pub fn sphere_n(n: usize, f: ScalarField) -> Result<ModelSpace1D> {
        if n < 2 {
            return Err(Error::InvalidSpace(format!("sphere_n needs n >= 2, got {n}")));
        }
        let space = ModelSpace1D {
            kind: SpaceKind::SphereN,
            length: std::f64::consts::PI,
            f,
            n_ambient: n,
            bc: Bc::Natural,
            diameter: std::f64::consts::PI,
        };
        space.check_density()?;
        Ok(space)
    }

    /// Radial reduction of a flat n-ball: J = x^{n-1} on [0, R].
    pub fn ball_n(n: usize, radius: f64, f: ScalarField, bc: Bc) -> Result<ModelSpace1D> {
        if n < 2 {
            return Err(Error::InvalidSpace(format!("ball_n needs n >= 2, got {n}")));
        }
        if radius <= 0.0 {
            return Err(Error::InvalidSpace(format!("radius {radius} <= 0")));
        }
        if bc == Bc::Closed || bc == Bc::Natural {
            return Err(Error::InvalidSpace(
                "ball_n outer boundary must be dirichlet or neumann".into(),
            ));
        }
        let space = ModelSpace1D {
            kind: SpaceKind::BallN,
            length: radius,
            f,
            n_ambient: n,
            bc,
            diameter: 2.0 * radius,
        };
        space.check_density()?;
        Ok(space)
    }

    pub fn jacobian(&self, x: f64) -> f64 {
        match self.kind {
            SpaceKind::Interval | SpaceKind::Circle => 1.0,
            SpaceKind::SphereN => x.sin().powi(self.n_ambient as i32 - 1),
            SpaceKind::BallN => x.powi(self.n_ambient as i32 - 1),
        }
    }

    /// Whether the Jacobian vanishes at an endpoint (pole / center).
    pub fn singular_ends(&self) -> (bool, bool) {
        match self.kind {
            SpaceKind::SphereN => (true, true),
            SpaceKind::BallN => (true, false),
            _ => (false, false),
        }
    }

    pub fn rho(&self, x: f64) -> Result<f64> {
        Ok(self.jacobian(x) * (-self.f.eval(&[x])?).exp())
    }

    fn check_density(&self) -> Result<()> {
        let (sing_lo, sing_hi) = self.singular_ends();
        let a = if sing_lo { self.length * 1e-4 } else { 0.0 };
        let b = if sing_hi {
            self.length * (1.0 - 1e-4)
        } else {
            self.length
        };
        for k in 0..=512 {
            let x = a + (b - a) * k as f64 / 512.0;
            let r = self.rho(x)?;
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidSpace(format!(
                    "density rho({x}) = {r} is not positive"
                )));
            }
        }
        Ok(())
    }

    /// Minimum generalized eigenvalue of Ric_f^m against g at radial
    /// coordinate x, from the closed forms for each family.
    ///
    /// `m = None` means the Bakry-Emery limit m = infinity.
    pub fn curvature_scan(&self, m: Option<f64>, x: f64) -> Result<f64> {
        let n = match self.kind {
            SpaceKind::Interval | SpaceKind::Circle => 1,
            _ => self.n_ambient,
        } as f64;
        if let Some(m) = m {
            if m < n {
                return Err(Error::InvalidArgument(format!(
                    "finite m = {m} must be at least the dimension {n}"
                )));
            }
        }
        let jet = self.f.eval_jet(&[x], 1)?;
        let f1 = jet.partial(0).value();
        let f2 = jet.partial(0).partial(0).value();
        let sharp = match m {
            // m == n is admissible only for constant f; there the sharp
            // term vanishes identically.
            Some(m) if m == n => {
                if f1.abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "m = dimension = {n} requires constant f, got f'({x}) = {f1}"
                    )));
                }
                0.0
            }
            Some(m) => f1 * f1 / (m - n),
            None => 0.0,
        };
        Ok(match self.kind {
            SpaceKind::Interval | SpaceKind::Circle => f2 - sharp,
            SpaceKind::SphereN => {
                let radial = (n - 1.0) + f2 - sharp;
                let tangential = (n - 1.0) + f1 / x.tan();
                radial.min(tangential)
            }
            SpaceKind::BallN => {
                let radial = f2 - sharp;
                let tangential = f1 / x;
                radial.min(tangential)
            }
        })
    }

    /// Dense minimum of `curvature_scan` over the interior.
    pub fn curvature_min(&self, m: Option<f64>, samples: usize) -> Result<f64> {
        let (sing_lo, sing_hi) = self.singular_ends();
        let a = if sing_lo { self.length * 1e-4 } else { 0.0 };
        let b = if sing_hi {
            self.length * (1.0 - 1e-4)
        } else {
            self.length
        };
        let mut min = f64::INFINITY;
        for k in 0..=samples {
            let x = a + (b - a) * k as f64 / samples as f64;
            min = min.min(self.curvature_scan(m, x)?);
        }
        Ok(min)
    }
}
