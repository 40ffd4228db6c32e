//! Box discretisation of a rectangular 2-D domain.
//!
//! Boxes are ordered row-major with `x` (longitude) fastest, so box `(ix, iy)`
//! has index `iy * nx + ix`. In spherical mode the axes are degrees of
//! longitude/latitude and all lengths and areas are in metres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::median;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Planar,
    Spherical,
}

/// Direction of a face normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Normal along x / longitude.
    X,
    /// Normal along y / latitude.
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Centre in domain coordinates (degrees in spherical mode).
    pub centre: [f64; 2],
    /// Side length along x / longitude.
    pub side_x: f64,
    /// Side length along y / latitude.
    pub side_y: f64,
    pub area: f64,
}

/// One directed face `from -> to`. Every shared face appears twice, once per
/// direction, with opposite `sign`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub from: usize,
    pub to: usize,
    pub axis: Axis,
    /// +1 when the outward normal of `from` points along the positive axis.
    pub sign: i8,
    /// Length of the face.
    pub measure: f64,
    /// Position of the face on its normal axis (domain coordinates).
    pub position: f64,
    /// Extent of the face along the tangential axis (domain coordinates).
    pub span: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub geometry: Geometry,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_radius")]
    pub earth_radius: f64,
}

fn default_radius() -> f64 {
    EARTH_RADIUS_M
}

impl GridSpec {
    pub fn planar(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Self {
        GridSpec {
            geometry: Geometry::Planar,
            x_range,
            y_range,
            nx,
            ny,
            earth_radius: EARTH_RADIUS_M,
        }
    }

    pub fn spherical(
        lon_range: (f64, f64),
        lat_range: (f64, f64),
        nx: usize,
        ny: usize,
        earth_radius: f64,
    ) -> Self {
        GridSpec {
            geometry: Geometry::Spherical,
            x_range: lon_range,
            y_range: lat_range,
            nx,
            ny,
            earth_radius,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    spec: GridSpec,
    cells: Vec<Cell>,
    faces: Vec<Face>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Grid> {
        let GridSpec {
            geometry,
            x_range,
            y_range,
            nx,
            ny,
            earth_radius,
        } = spec;
        if nx == 0 || ny == 0 {
            return Err(Error::domain(format!("grid needs nx, ny >= 1 (got {nx}x{ny})")));
        }
        for (name, (lo, hi)) in [("x_range", x_range), ("y_range", y_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::domain(format!("{name} [{lo}, {hi}] is empty or inverted")));
            }
        }
        if geometry == Geometry::Spherical {
            if y_range.0 < -90.0 || y_range.1 > 90.0 {
                return Err(Error::domain(format!(
                    "latitude range [{}, {}] outside [-90, 90]",
                    y_range.0, y_range.1
                )));
            }
            if !(earth_radius.is_finite() && earth_radius > 0.0) {
                return Err(Error::domain("earth_radius must be positive"));
            }
        }

        let dx = (x_range.1 - x_range.0) / nx as f64;
        let dy = (y_range.1 - y_range.0) / ny as f64;
        let grid_x = |i: usize| x_range.0 + i as f64 * dx;
        let grid_y = |j: usize| y_range.0 + j as f64 * dy;
        let per_degree = earth_radius * std::f64::consts::PI / 180.0;

        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let centre = [grid_x(i) + 0.5 * dx, grid_y(j) + 0.5 * dy];
                let (side_x, side_y) = match geometry {
                    Geometry::Planar => (dx, dy),
                    Geometry::Spherical => {
                        (per_degree * dx * centre[1].to_radians().cos(), per_degree * dy)
                    }
                };
                cells.push(Cell {
                    centre,
                    side_x,
                    side_y,
                    area: side_x * side_y,
                });
            }
        }

        let lat_face_length = |y: f64| match geometry {
            Geometry::Planar => dx,
            Geometry::Spherical => per_degree * dx * y.to_radians().cos(),
        };
        let lon_face_length = match geometry {
            Geometry::Planar => dy,
            Geometry::Spherical => per_degree * dy,
        };

        // Per box in index order: west, east, south, north.
        let mut faces = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let y_span = (grid_y(j), grid_y(j + 1));
                let x_span = (grid_x(i), grid_x(i + 1));
                if i > 0 {
                    faces.push(Face {
                        from: k,
                        to: k - 1,
                        axis: Axis::X,
                        sign: -1,
                        measure: lon_face_length,
                        position: grid_x(i),
                        span: y_span,
                    });
                }
                if i + 1 < nx {
                    faces.push(Face {
                        from: k,
                        to: k + 1,
                        axis: Axis::X,
                        sign: 1,
                        measure: lon_face_length,
                        position: grid_x(i + 1),
                        span: y_span,
                    });
                }
                if j > 0 {
                    faces.push(Face {
                        from: k,
                        to: k - nx,
                        axis: Axis::Y,
                        sign: -1,
                        measure: lat_face_length(grid_y(j)),
                        position: grid_y(j),
                        span: x_span,
                    });
                }
                if j + 1 < ny {
                    faces.push(Face {
                        from: k,
                        to: k + nx,
                        axis: Axis::Y,
                        sign: 1,
                        measure: lat_face_length(grid_y(j + 1)),
                        position: grid_y(j + 1),
                        span: x_span,
                    });
                }
            }
        }

        Ok(Grid { spec, cells, faces })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn geometry(&self) -> Geometry {
        self.spec.geometry
    }

    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    pub fn ny(&self) -> usize {
        self.spec.ny
    }

    /// Number of boxes `N`.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Box areas `m(B_i)` in index order.
    pub fn measures(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.area).collect()
    }

    pub fn centres(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.cells.iter().map(|c| c.centre)
    }

    /// Whether all boxes have the same area (the plain row-sum form applies).
    pub fn has_uniform_measure(&self) -> bool {
        let a0 = self.cells[0].area;
        self.cells.iter().all(|c| (c.area - a0).abs() <= 1e-14 * a0)
    }

    /// Domain area: planar width·height; spherical sum over latitude rows of
    /// (row-centre longitudinal extent)·(latitudinal box length), i.e. the
    /// same midpoint convention the box areas use.
    pub fn domain_area(&self) -> f64 {
        let (x0, x1) = self.spec.x_range;
        let (y0, y1) = self.spec.y_range;
        match self.spec.geometry {
            Geometry::Planar => (x1 - x0) * (y1 - y0),
            Geometry::Spherical => {
                let per_degree = self.spec.earth_radius * std::f64::consts::PI / 180.0;
                let dy = (y1 - y0) / self.spec.ny as f64;
                (0..self.spec.ny)
                    .map(|j| {
                        let lat = y0 + (j as f64 + 0.5) * dy;
                        per_degree * (x1 - x0) * lat.to_radians().cos() * per_degree * dy
                    })
                    .sum()
            }
        }
    }

    /// Median over both side lengths of every box.
    pub fn median_side_length(&self) -> f64 {
        let sides: Vec<f64> = self
            .cells
            .iter()
            .flat_map(|c| [c.side_x, c.side_y])
            .collect();
        median(sides).expect("grid has at least one box")
    }

    /// Longest side of the domain `L_max`, in metres for spherical grids.
    pub fn longest_domain_extent(&self) -> f64 {
        let (x0, x1) = self.spec.x_range;
        let (y0, y1) = self.spec.y_range;
        match self.spec.geometry {
            Geometry::Planar => (x1 - x0).max(y1 - y0),
            Geometry::Spherical => {
                let per_degree = self.spec.earth_radius * std::f64::consts::PI / 180.0;
                let lat_extent = per_degree * (y1 - y0);
                let widest_lat = if y0 <= 0.0 && y1 >= 0.0 {
                    0.0
                } else {
                    y0.abs().min(y1.abs())
                };
                let lon_extent = per_degree * (x1 - x0) * widest_lat.to_radians().cos();
                lat_extent.max(lon_extent)
            }
        }
    }

    /// Index of the box containing `(x, y)`, if inside the domain.
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        let (x0, x1) = self.spec.x_range;
        let (y0, y1) = self.spec.y_range;
        if !(x0..=x1).contains(&x) || !(y0..=y1).contains(&y) {
            return None;
        }
        let nx = self.spec.nx;
        let ny = self.spec.ny;
        let i = (((x - x0) / (x1 - x0) * nx as f64) as usize).min(nx - 1);
        let j = (((y - y0) / (y1 - y0) * ny as f64) as usize).min(ny - 1);
        Some(j * nx + i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn east_block() -> Grid {
        Grid::new(GridSpec::spherical((15.0, 60.0), (30.0, 75.0), 45, 45, EARTH_RADIUS_M)).unwrap()
    }

    #[test]
    fn double_gyre_grid_has_square_boxes() {
        let g = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 75, 50)).unwrap();
        assert_eq!(g.len(), 3750);
        for c in g.cells() {
            assert_relative_eq!(c.side_x, 0.04, max_relative = 1e-12);
            assert_relative_eq!(c.side_y, 0.04, max_relative = 1e-12);
        }
        assert_relative_eq!(g.median_side_length(), 0.04, max_relative = 1e-12);
        assert_eq!(g.longest_domain_extent(), 3.0);
    }

    #[test]
    fn single_box_has_no_faces() {
        let g = Grid::new(GridSpec::planar((0.0, 1.0), (0.0, 1.0), 1, 1)).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.cell(0).area, 1.0);
        assert!(g.faces().is_empty());
    }

    #[test]
    fn one_by_two_median_side() {
        let g = Grid::new(GridSpec::planar((0.0, 2.0), (0.0, 1.0), 2, 1)).unwrap();
        // sides {1, 1, 1, 1}
        assert_eq!(g.median_side_length(), 1.0);
    }

    #[test]
    fn spherical_side_lengths() {
        let g = east_block();
        let per_degree = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        assert_relative_eq!(per_degree, 111_194.9, max_relative = 1e-6);
        for c in g.cells() {
            assert_relative_eq!(c.side_y, per_degree, max_relative = 1e-12);
        }
        // first row centre latitude 30.5
        assert_relative_eq!(g.cell(0).side_x, per_degree * 30.5f64.to_radians().cos(), max_relative = 1e-12);
        assert!((g.cell(0).side_x - 95_815.0).abs() < 10.0);
        for j in 1..45 {
            assert!(g.cell(j * 45).side_x < g.cell((j - 1) * 45).side_x);
        }
    }

    #[test]
    fn east_block_median_and_extent() {
        let g = east_block();
        let m = g.median_side_length();
        assert!((m - 103_618.0).abs() / 103_618.0 < 0.005, "median {m}");
        assert_relative_eq!(g.longest_domain_extent(), 45.0 * 111_194.93, max_relative = 1e-6);
    }

    #[test]
    fn tiling_planar_and_spherical() {
        let g = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 7, 5)).unwrap();
        let total: f64 = g.measures().iter().sum();
        assert_relative_eq!(total, g.domain_area(), max_relative = 1e-10);

        let s = east_block();
        let total: f64 = s.measures().iter().sum();
        assert_relative_eq!(total, s.domain_area(), max_relative = 1e-6);
        // the exact spherical zone area differs only by the midpoint error
        let r = EARTH_RADIUS_M;
        let exact = r * r * 45f64.to_radians() * (75f64.to_radians().sin() - 30f64.to_radians().sin());
        assert_relative_eq!(total, exact, max_relative = 1e-4);
    }

    #[test]
    fn adjacency_is_symmetric_with_bounded_face_counts() {
        let g = Grid::new(GridSpec::planar((0.0, 1.0), (0.0, 1.0), 4, 3)).unwrap();
        let mut count = vec![0; g.len()];
        for f in g.faces() {
            count[f.from] += 1;
            let back = g
                .faces()
                .iter()
                .filter(|b| b.from == f.to && b.to == f.from)
                .collect::<Vec<_>>();
            assert_eq!(back.len(), 1);
            assert_eq!(back[0].sign, -f.sign);
            assert_eq!(back[0].axis, f.axis);
        }
        // interior boxes of a 4x3 grid: (1,1), (2,1)
        assert_eq!(count[5], 4);
        assert_eq!(count[6], 4);
        assert_eq!(count[0], 2);
        assert!(count.iter().all(|&c| c <= 4));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(Grid::new(GridSpec::planar((1.0, 0.0), (0.0, 1.0), 2, 2)).is_err());
        assert!(Grid::new(GridSpec::planar((0.0, 1.0), (0.0, 1.0), 0, 2)).is_err());
        assert!(Grid::new(GridSpec::spherical((0.0, 10.0), (80.0, 95.0), 2, 2, EARTH_RADIUS_M)).is_err());
    }

    #[test]
    fn builds_are_deterministic() {
        let spec = GridSpec::spherical((15.0, 60.0), (30.0, 75.0), 9, 7, EARTH_RADIUS_M);
        let a = Grid::new(spec).unwrap();
        let b = Grid::new(spec).unwrap();
        assert_eq!(a.cells(), b.cells());
        assert_eq!(a.faces(), b.faces());
    }

    #[test]
    fn locate_maps_points_to_boxes() {
        let g = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 75, 50)).unwrap();
        let k = g.locate(0.5, 1.0).unwrap();
        let c = g.cell(k).centre;
        assert!((c[0] - 0.5).abs() <= 0.02 + 1e-12 && (c[1] - 1.0).abs() <= 0.02 + 1e-12);
        assert_eq!(g.locate(3.5, 1.0), None);
    }
}
