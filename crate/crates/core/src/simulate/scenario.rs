//! Desk-scale stand-in for a stabilized well site.
//!
//! A graded block centred on a vertical well: the well and eight freezing
//! columns are square cutouts whose walls carry boundary tags; cells are
//! painted as frozen-ground soil, a sand cap, a polystyrene slab around the
//! well head and a cement sleeve around the well.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::config::{
    BoundaryValue, ConfigError, ControllerSection, DirichletSection, MeshSource, OutputSection,
    SimulationConfig, SolverSection, SurfaceCondition, TimeSection,
};
use crate::fem::TemperatureField;
use crate::mesh::{Mesh, MeshError, Point, Tag, TensorGrid};
use crate::physics::{ColumnMode, Material, PhaseModel, SeasonalForcing};

pub const SOIL: Tag = 1;
pub const SAND: Tag = 2;
pub const POLYSTYRENE: Tag = 3;
pub const CEMENT: Tag = 4;

/// Ground surface (`+z` face of the block).
pub const SURFACE_TAG: Tag = 6;
pub const WELL_TAG: Tag = 7;
pub const COLUMN_TAG: Tag = 8;

/// Geometry of the well site, meters. The surface is at `z = 0`, depth is `-z`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WellSite {
    /// Half of the lateral block size.
    pub half_width: f64,
    pub depth: f64,
    /// Half-width of the square well cutout.
    pub well_half_width: f64,
    pub cement_thickness: f64,
    /// Distance of the axis-aligned columns from the well axis; the four
    /// diagonal columns sit at `(±r, ±r)`.
    pub column_ring: f64,
    pub column_half_width: f64,
    pub column_depth: f64,
    pub sand_thickness: f64,
    pub slab_half_width: f64,
    pub slab_thickness: f64,
    /// Lateral cell size `a + b·|x|` used between geometric breakpoints.
    pub lateral_size: [f64; 2],
    /// Vertical cell size `a + b·depth`.
    pub vertical_size: [f64; 2],
}

impl Default for WellSite {
    fn default() -> Self {
        Self {
            half_width: 20.0,
            depth: 40.0,
            well_half_width: 0.1,
            cement_thickness: 0.2,
            column_ring: 2.0,
            column_half_width: 0.05,
            column_depth: 14.0,
            sand_thickness: 2.0,
            slab_half_width: 5.0,
            slab_thickness: 0.2,
            lateral_size: [0.25, 0.3],
            vertical_size: [0.5, 0.25],
        }
    }
}

fn graded(breaks: &[f64], size: [f64; 2]) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = size[0] + size[1] * 0.5 * (a + b).abs();
        let k = ((b - a) / h).ceil().max(1.0) as usize;
        for i in 1..=k {
            out.push(a + (b - a) * i as f64 / k as f64);
        }
    }
    out
}

impl WellSite {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("half_width", self.half_width),
            ("depth", self.depth),
            ("well_half_width", self.well_half_width),
            ("cement_thickness", self.cement_thickness),
            ("column_ring", self.column_ring),
            ("column_half_width", self.column_half_width),
            ("column_depth", self.column_depth),
            ("sand_thickness", self.sand_thickness),
            ("slab_half_width", self.slab_half_width),
            ("slab_thickness", self.slab_thickness),
            ("lateral_size[0]", self.lateral_size[0]),
            ("vertical_size[0]", self.vertical_size[0]),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError(format!(
                    "mesh.{name} must be positive, got {v}"
                )));
            }
        }
        if self.lateral_size[1] < 0.0 || self.vertical_size[1] < 0.0 {
            return Err(ConfigError(
                "mesh grading slopes must be non-negative".into(),
            ));
        }
        let c = self.column_half_width;
        if !(self.well_half_width + self.cement_thickness < self.column_ring - c
            && self.column_ring + c < self.half_width
            && self.slab_half_width < self.half_width
            && c < self.well_half_width)
        {
            return Err(ConfigError(
                "mesh: need column_half_width < well_half_width, cement inside the column ring, \
                 and columns and slab inside the block"
                    .into(),
            ));
        }
        if !(self.slab_thickness < self.sand_thickness
            && self.sand_thickness < self.column_depth
            && self.column_depth < self.depth)
        {
            return Err(ConfigError(
                "mesh: need slab_thickness < sand_thickness < column_depth < depth".into(),
            ));
        }
        Ok(())
    }

    /// Grid lines, symmetric about the well axis laterally.
    pub fn grid(&self) -> Result<TensorGrid, MeshError> {
        let mut breaks = vec![
            0.0,
            self.column_half_width,
            self.well_half_width,
            self.well_half_width + self.cement_thickness,
            self.column_ring - self.column_half_width,
            self.column_ring + self.column_half_width,
            self.slab_half_width,
            self.half_width,
        ];
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let positive = graded(&breaks, self.lateral_size);
        let mut lateral: Vec<f64> = positive.iter().rev().map(|v| -v).collect();
        lateral.extend_from_slice(&positive[1..]);

        let mut vbreaks = vec![
            0.0,
            self.slab_thickness,
            self.sand_thickness,
            self.column_depth,
            self.depth,
        ];
        vbreaks.sort_by(f64::total_cmp);
        vbreaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let down = graded(&vbreaks, self.vertical_size);
        let vertical: Vec<f64> = down.iter().rev().map(|v| -v).collect();
        TensorGrid::new(lateral.clone(), lateral, vertical)
    }

    /// Column centres in the horizontal plane.
    pub fn column_centres(&self) -> [[f64; 2]; 8] {
        let r = self.column_ring;
        [
            [r, 0.0],
            [r, r],
            [0.0, r],
            [-r, r],
            [-r, 0.0],
            [-r, -r],
            [0.0, -r],
            [r, -r],
        ]
    }

    fn region(&self, p: Point) -> Tag {
        let (x, y, depth) = (p[0].abs(), p[1].abs(), -p[2]);
        let sleeve = self.well_half_width + self.cement_thickness;
        if x < sleeve && y < sleeve {
            CEMENT
        } else if depth < self.slab_thickness
            && x < self.slab_half_width
            && y < self.slab_half_width
        {
            POLYSTYRENE
        } else if depth < self.sand_thickness {
            SAND
        } else {
            SOIL
        }
    }

    fn cutout(&self, p: Point) -> Option<Tag> {
        if p[0].abs() < self.well_half_width && p[1].abs() < self.well_half_width {
            return Some(WELL_TAG);
        }
        if -p[2] < self.column_depth {
            let c = self.column_half_width;
            for [cx, cy] in self.column_centres() {
                if (p[0] - cx).abs() < c && (p[1] - cy).abs() < c {
                    return Some(COLUMN_TAG);
                }
            }
        }
        None
    }

    pub fn build_mesh(&self) -> Result<Mesh, MeshError> {
        self.grid()?.build(|p| self.region(p), |p| self.cutout(p))
    }

    /// Probe 1 m below the surface, half a meter outside the `+x` column.
    pub fn reference_probe(&self) -> Point {
        [self.column_ring + 0.5, 0.0, -1.0]
    }
}

/// Frozen-ground soil, sand, polystyrene and cement.
///
/// Ice values are not tabulated with the others; standard ice properties
/// are used.
pub fn default_materials() -> BTreeMap<String, Material> {
    let mut m = BTreeMap::new();
    m.insert(
        SOIL.to_string(),
        Material::FreezingPorous {
            porosity: 0.3,
            skeleton_capacity: 2.17e6,
            water_capacity: 2.42e6,
            ice_capacity: 1.93e6,
            skeleton_conductivity: 2.43,
            water_conductivity: 2.22,
            ice_conductivity: 2.22,
        },
    );
    m.insert(
        SAND.to_string(),
        Material::SinglePhase {
            capacity: 1.34e6,
            conductivity: 0.47,
        },
    );
    m.insert(
        POLYSTYRENE.to_string(),
        Material::SinglePhase {
            capacity: 0.2e6,
            conductivity: 0.03,
        },
    );
    m.insert(
        CEMENT.to_string(),
        Material::SinglePhase {
            capacity: 0.8e6,
            conductivity: 0.21,
        },
    );
    m
}

/// Well-site run: oil at 20 °C in the well, ground initially at -5 °C,
/// seasonal columns, daily steps for five years.
pub fn well_site_config(site: WellSite) -> SimulationConfig {
    let probe = site.reference_probe();
    let mut tags = BTreeMap::new();
    tags.insert(WELL_TAG.to_string(), BoundaryValue::Constant(20.0));
    SimulationConfig {
        mesh: MeshSource::WellSite(site),
        materials: default_materials(),
        phase: PhaseModel::default(),
        forcing: SeasonalForcing::default(),
        controller: ControllerSection {
            mode: ColumnMode::Seasonal,
            column_tags: vec![COLUMN_TAG],
            literal_paper_rule: false,
            column_temperature: None,
            probe: Some(probe),
        },
        time: TimeSection::default(),
        dirichlet: DirichletSection {
            tags,
            surface: SurfaceCondition::None,
            surface_tag: SURFACE_TAG,
        },
        output: OutputSection {
            probes: vec![probe, [1.0, 0.0, -7.0]],
            cadence: 30,
            ..OutputSection::default()
        },
        solver: SolverSection::default(),
    }
}

/// Radial distance from the well axis to the thaw front at depth `z`.
///
/// Walks the four axis-aligned node lines leaving the well at the grid
/// plane nearest `z` and linearly interpolates the first fall below
/// `t_star`; the result is the mean over the four directions. A line that
/// never falls below `t_star` contributes its full length.
pub fn thaw_radius(
    mesh: &Mesh,
    field: &TemperatureField,
    centre: [f64; 2],
    z: f64,
    t_star: f64,
) -> f64 {
    let nodes = mesh.nodes();
    let plane = nodes
        .iter()
        .map(|p| p[2])
        .min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs()))
        .unwrap_or(z);
    let tol = 1e-9 * (1.0 + plane.abs());
    let mut total = 0.0;
    for (axis, sign) in [(0usize, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)] {
        let other = 1 - axis;
        let mut line: Vec<(f64, f64)> = nodes
            .iter()
            .zip(&field.values)
            .filter(|(p, _)| {
                (p[2] - plane).abs() < tol
                    && (p[other] - centre[other]).abs() < 1e-9
                    && sign * (p[axis] - centre[axis]) > 0.0
            })
            .map(|(p, &t)| (sign * (p[axis] - centre[axis]), t))
            .collect();
        line.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Some(&(r0, t0)) = line.first() else {
            continue;
        };
        let mut radius = if t0 < t_star {
            r0
        } else {
            line.last().unwrap().0
        };
        if t0 >= t_star {
            for w in line.windows(2) {
                let ((ra, ta), (rb, tb)) = (w[0], w[1]);
                if ta >= t_star && tb < t_star {
                    radius = ra + (rb - ra) * (ta - t_star) / (ta - tb);
                    break;
                }
            }
        }
        total += radius;
    }
    total / 4.0
}
