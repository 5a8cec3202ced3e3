//! Catalog of model-manifold charts.
//!
//! Every chart ships with its metric as jet-evaluable scalar fields plus the
//! analytic metadata (domain box, periodicity, boundary segments, diameter,
//! singular-axis offsets) that the identity checks and quadrature need. The
//! catalog is closed: no user-defined metrics.

use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const DEFAULT_INTERIOR_OFFSET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartId {
    EuclideanPlane,
    FlatTorus,
    Sphere2,
    DiskPolar,
    Hemisphere2,
    Line1d,
    Circle1d,
}

impl ChartId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChartId::EuclideanPlane => "euclidean_plane",
            ChartId::FlatTorus => "flat_torus",
            ChartId::Sphere2 => "sphere2",
            ChartId::DiskPolar => "disk_polar",
            ChartId::Hemisphere2 => "hemisphere2",
            ChartId::Line1d => "line1d",
            ChartId::Circle1d => "circle1d",
        }
    }
}

/// A boundary component lying on a coordinate line of the chart.
#[derive(Debug, Clone)]
pub struct BoundarySegment {
    /// Axis held fixed on the boundary.
    pub fixed_axis: usize,
    pub fixed_value: f64,
    /// Axis that parameterizes the boundary.
    pub param_axis: usize,
    pub param_range: (f64, f64),
    pub param_periodic: bool,
    /// +1 if the outward normal points toward increasing `fixed_axis`.
    pub outward_sign: f64,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub id: ChartId,
    pub dim: usize,
    /// Metric entries g_ij, row-major, dim*dim fields.
    pub metric: Vec<ScalarField>,
    pub domain: Vec<(f64, f64)>,
    pub periodic: Vec<bool>,
    pub boundary: Vec<BoundarySegment>,
    /// Offset excluding singular coordinate axes from sampling and quadrature.
    pub interior_offset: f64,
    pub diameter: f64,
}

impl Chart {
    pub fn by_id(id: &str) -> Result<Chart> {
        match id {
            "euclidean_plane" => Ok(Self::euclidean_plane()),
            "flat_torus" => Ok(Self::flat_torus()),
            "sphere2" => Ok(Self::sphere2()),
            "disk_polar" => Ok(Self::disk_polar()),
            "hemisphere2" => Ok(Self::hemisphere2()),
            "line1d" => Ok(Self::line1d()),
            "circle1d" => Ok(Self::circle1d()),
            other => Err(Error::InvalidArgument(format!("unknown chart id {other:?}"))),
        }
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.metric[i * self.dim + j]
    }

    pub fn has_boundary(&self) -> bool {
        !self.boundary.is_empty()
    }

    /// Domain box shrunk by the interior offset at singular axis ends only;
    /// regular ends (including boundary segments) keep the full extent.
    pub fn interior_box(&self) -> Vec<(f64, f64)> {
        self.domain
            .iter()
            .enumerate()
            .map(|(axis, &(lo, hi))| {
                let (off_lo, off_hi) = self.axis_offsets(axis);
                (lo + off_lo, hi - off_hi)
            })
            .collect()
    }

    /// Per-end interior offsets: only ends where the chart metric degenerates
    /// (sphere poles, disk center) are shrunk.
    fn axis_offsets(&self, axis: usize) -> (f64, f64) {
        match (self.id, axis) {
            (ChartId::Sphere2, 0) => (self.interior_offset, self.interior_offset),
            (ChartId::Hemisphere2, 0) | (ChartId::DiskPolar, 0) => (self.interior_offset, 0.0),
            _ => (0.0, 0.0),
        }
    }

    /// Interior sampling box for randomized checks: shrinks singular axes by
    /// the offset and boundary-terminated axes by the same margin.
    pub fn sampling_box(&self) -> Vec<(f64, f64)> {
        let mut boxes = self.interior_box();
        for seg in &self.boundary {
            let (lo, hi) = boxes[seg.fixed_axis];
            if seg.outward_sign > 0.0 {
                boxes[seg.fixed_axis] = (lo, hi - self.interior_offset);
            } else {
                boxes[seg.fixed_axis] = (lo + self.interior_offset, hi);
            }
        }
        boxes
    }

    pub fn contains_interior(&self, x: &[f64]) -> bool {
        self.interior_box()
            .iter()
            .zip(x)
            .zip(&self.periodic)
            .all(|((&(lo, hi), &xi), &per)| per || (xi >= lo && xi <= hi))
    }

    pub fn euclidean_plane() -> Chart {
        Chart {
            id: ChartId::EuclideanPlane,
            dim: 2,
            metric: flat_metric(2),
            domain: vec![(-2.0, 2.0), (-2.0, 2.0)],
            periodic: vec![false, false],
            boundary: vec![],
            interior_offset: DEFAULT_INTERIOR_OFFSET,
            diameter: 32.0f64.sqrt(),
        }
    }

    pub fn flat_torus() -> Chart {
        let tau = 2.0 * std::f64::consts::PI;
        Chart {
            id: ChartId::FlatTorus,
            dim: 2,
            metric: flat_metric(2),
            domain: vec![(0.0, tau), (0.0, tau)],
            periodic: vec![true, true],
            boundary: vec![],
            interior_offset: DEFAULT_INTERIOR_OFFSET,
            diameter: (2.0f64).sqrt() * std::f64::consts::PI,
        }
    }

    /// Unit sphere in polar coordinates (theta, phi), g = diag(1, sin^2 theta).
    pub fn sphere2() -> Chart {
        let sin_sq = ScalarField::coord(0).sin().mul(&ScalarField::coord(0).sin());
        Chart {
            id: ChartId::Sphere2,
            dim: 2,
            metric: diag_metric(ScalarField::constant(1.0), sin_sq),
            domain: vec![(0.0, std::f64::consts::PI), (0.0, 2.0 * std::f64::consts::PI)],
            periodic: vec![false, true],
            boundary: vec![],
            interior_offset: DEFAULT_INTERIOR_OFFSET,
            diameter: std::f64::consts::PI,
        }
    }

    /// Unit disk in polar coordinates (r, phi), g = diag(1, r^2).
    pub fn disk_polar() -> Chart {
        let r_sq = ScalarField::coord(0).mul(&ScalarField::coord(0));
        Chart {
            id: ChartId::DiskPolar,
            dim: 2,
            metric: diag_metric(ScalarField::constant(1.0), r_sq),
            domain: vec![(0.0, 1.0), (0.0, 2.0 * std::f64::consts::PI)],
            periodic: vec![false, true],
            boundary: vec![BoundarySegment {
                fixed_axis: 0,
                fixed_value: 1.0,
                param_axis: 1,
                param_range: (0.0, 2.0 * std::f64::consts::PI),
                param_periodic: true,
                outward_sign: 1.0,
            }],
            interior_offset: DEFAULT_INTERIOR_OFFSET,
            diameter: 2.0,
        }
    }

    /// Upper unit hemisphere, theta in [0, pi/2], boundary at the equator.
    pub fn hemisphere2() -> Chart {
        let sin_sq = ScalarField::coord(0).sin().mul(&ScalarField::coord(0).sin());
        Chart {
            id: ChartId::Hemisphere2,
            dim: 2,
            metric: diag_metric(ScalarField::constant(1.0), sin_sq),
            domain: vec![
                (0.0, std::f64::consts::FRAC_PI_2),
                (0.0, 2.0 * std::f64::consts::PI),
            ],
            periodic: vec![false, true],
            boundary: vec![BoundarySegment {
                fixed_axis: 0,
                fixed_value: std::f64::consts::FRAC_PI_2,
                param_axis: 1,
                param_range: (0.0, 2.0 * std::f64::consts::PI),
                param_periodic: true,
                outward_sign: 1.0,
            }],
            interior_offset: DEFAULT_INTERIOR_OFFSET,
            diameter: std::f64::consts::PI,
        }
    }

    pub fn line1d() -> Chart {
        Chart {
            id: ChartId::Line1d,
            dim: 1,
            metric: flat_metric(1),
            domain: vec![(-1.0, 1.0)],
            periodic: vec![false],
            boundary: vec![],
            interior_offset: DEFAULT_INTERIOR_OFFSET,
            diameter: 2.0,
        }
    }

    pub fn circle1d() -> Chart {
        Chart {
            id: ChartId::Circle1d,
            dim: 1,
            metric: flat_metric(1),
            domain: vec![(0.0, 2.0 * std::f64::consts::PI)],
            periodic: vec![true],
            boundary: vec![],
            interior_offset: DEFAULT_INTERIOR_OFFSET,
            diameter: std::f64::consts::PI,
        }
    }
}

fn flat_metric(dim: usize) -> Vec<ScalarField> {
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            entries.push(ScalarField::constant(if i == j { 1.0 } else { 0.0 }));
        }
    }
    entries
}

fn diag_metric(g00: ScalarField, g11: ScalarField) -> Vec<ScalarField> {
    vec![g00, ScalarField::zero(), ScalarField::zero(), g11]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn catalog_lookup() {
        for id in [
            "euclidean_plane",
            "flat_torus",
            "sphere2",
            "disk_polar",
            "hemisphere2",
            "line1d",
            "circle1d",
        ] {
            let chart = Chart::by_id(id).unwrap();
            assert_eq!(chart.id.as_str(), id);
        }
        assert!(Chart::by_id("klein_bottle").is_err());
    }

    #[test]
    fn sphere_metric_entries() {
        let chart = Chart::sphere2();
        let theta = std::f64::consts::FRAC_PI_3;
        let g11 = chart.metric_entry(1, 1).eval(&[theta, 0.4]).unwrap();
        assert_relative_eq!(g11, theta.sin().powi(2), epsilon = 1e-15);
        assert_eq!(chart.metric_entry(0, 1).eval(&[theta, 0.4]).unwrap(), 0.0);
    }

    #[test]
    fn periodic_axes_have_full_period() {
        let torus = Chart::flat_torus();
        for ((lo, hi), per) in torus.domain.iter().zip(&torus.periodic) {
            assert!(*per);
            assert_relative_eq!(hi - lo, 2.0 * std::f64::consts::PI, epsilon = 1e-15);
        }
    }

    #[test]
    fn disk_interior_box_keeps_boundary() {
        let disk = Chart::disk_polar();
        let boxes = disk.interior_box();
        assert_relative_eq!(boxes[0].0, DEFAULT_INTERIOR_OFFSET, epsilon = 1e-15);
        assert_relative_eq!(boxes[0].1, 1.0, epsilon = 1e-15);
        let sample = disk.sampling_box();
        assert!(sample[0].1 < 1.0);
    }
}
