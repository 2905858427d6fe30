//! Phase-change coefficients, ground material mixtures, seasonal air
//! temperature and the freezing-column switch.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Deserialize;

use crate::mesh::Tag;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhysicsError {
    #[error("invalid phase model: {0}")]
    Phase(String),
    #[error("invalid material for region {region}: {message}")]
    Material { region: Tag, message: String },
    #[error("no material defined for region {0}")]
    MissingRegion(Tag),
    #[error("invalid seasonal forcing: {0}")]
    Forcing(String),
    #[error("invalid column controller: {0}")]
    Controller(String),
}

/// Smoothed water-ice transition over `[t_star - delta, t_star + delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseModel {
    /// Phase-change temperature, °C.
    pub t_star: f64,
    /// Half-width of the smoothing interval, °C.
    pub delta: f64,
    /// Latent heat per unit volume of thawed ground, J/m³.
    pub latent_volumetric: f64,
}

impl Default for PhaseModel {
    fn default() -> Self {
        Self {
            t_star: 0.0,
            delta: 1.0,
            latent_volumetric: 1.04e8,
        }
    }
}

impl PhaseModel {
    pub fn new(t_star: f64, delta: f64, latent_volumetric: f64) -> Result<Self, PhysicsError> {
        let m = Self {
            t_star,
            delta,
            latent_volumetric,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !self.t_star.is_finite() {
            return Err(PhysicsError::Phase("t_star must be finite".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(PhysicsError::Phase(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.latent_volumetric >= 0.0 && self.latent_volumetric.is_finite()) {
            return Err(PhysicsError::Phase(format!(
                "latent_volumetric must be non-negative, got {}",
                self.latent_volumetric
            )));
        }
        Ok(())
    }
}

/// Thawed fraction: 0 below the interval, linear ramp inside, 1 above.
pub fn phi_delta(t: f64, model: &PhaseModel) -> f64 {
    let lo = model.t_star - model.delta;
    let hi = model.t_star + model.delta;
    if t <= lo {
        0.0
    } else if t >= hi {
        1.0
    } else {
        (t - lo) / (2.0 * model.delta)
    }
}

/// Derivative of [`phi_delta`]; zero at the interval endpoints.
pub fn phi_delta_prime(t: f64, model: &PhaseModel) -> f64 {
    if t > model.t_star - model.delta && t < model.t_star + model.delta {
        1.0 / (2.0 * model.delta)
    } else {
        0.0
    }
}

/// Ground material. Capacities are volumetric, J/(m³·°C); conductivities W/(m·°C).
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Material {
    /// Porous skeleton whose pores hold water or ice.
    FreezingPorous {
        porosity: f64,
        skeleton_capacity: f64,
        water_capacity: f64,
        ice_capacity: f64,
        skeleton_conductivity: f64,
        water_conductivity: f64,
        ice_conductivity: f64,
    },
    /// Material without a phase change (sand, polystyrene, cement).
    SinglePhase { capacity: f64, conductivity: f64 },
}

/// Frozen (`-`) and thawed (`+`) coefficients of a material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoefficients {
    pub frozen_capacity: f64,
    pub thawed_capacity: f64,
    pub frozen_conductivity: f64,
    pub thawed_conductivity: f64,
}

impl Material {
    pub fn validate(&self, region: Tag) -> Result<(), PhysicsError> {
        let bad = |message: String| PhysicsError::Material { region, message };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            Material::FreezingPorous {
                porosity,
                skeleton_capacity,
                water_capacity,
                ice_capacity,
                skeleton_conductivity,
                water_conductivity,
                ice_conductivity,
            } => {
                if !(porosity > 0.0 && porosity < 1.0) {
                    return Err(bad(format!("porosity must lie in (0, 1), got {porosity}")));
                }
                positive("skeleton_capacity", skeleton_capacity)?;
                positive("water_capacity", water_capacity)?;
                positive("ice_capacity", ice_capacity)?;
                positive("skeleton_conductivity", skeleton_conductivity)?;
                positive("water_conductivity", water_conductivity)?;
                positive("ice_conductivity", ice_conductivity)
            }
            Material::SinglePhase {
                capacity,
                conductivity,
            } => {
                positive("capacity", capacity)?;
                positive("conductivity", conductivity)
            }
        }
    }

    /// Whether latent heat is released or absorbed in this material.
    pub fn freezes(&self) -> bool {
        matches!(self, Material::FreezingPorous { .. })
    }
}

/// Porosity-weighted mixture of skeleton and pore-filling water or ice.
pub fn frozen_thawed_coeffs(mat: &Material) -> PhaseCoefficients {
    match *mat {
        Material::FreezingPorous {
            porosity: m,
            skeleton_capacity,
            water_capacity,
            ice_capacity,
            skeleton_conductivity,
            water_conductivity,
            ice_conductivity,
        } => PhaseCoefficients {
            frozen_capacity: (1.0 - m) * skeleton_capacity + m * ice_capacity,
            thawed_capacity: (1.0 - m) * skeleton_capacity + m * water_capacity,
            frozen_conductivity: (1.0 - m) * skeleton_conductivity + m * ice_conductivity,
            thawed_conductivity: (1.0 - m) * skeleton_conductivity + m * water_conductivity,
        },
        Material::SinglePhase {
            capacity,
            conductivity,
        } => PhaseCoefficients {
            frozen_capacity: capacity,
            thawed_capacity: capacity,
            frozen_conductivity: conductivity,
            thawed_conductivity: conductivity,
        },
    }
}

pub fn alpha_of_phi(phi: f64, frozen_capacity: f64, thawed_capacity: f64) -> f64 {
    frozen_capacity + phi * (thawed_capacity - frozen_capacity)
}

pub fn lambda_of_phi(phi: f64, frozen_conductivity: f64, thawed_conductivity: f64) -> f64 {
    frozen_conductivity + phi * (thawed_conductivity - frozen_conductivity)
}

/// Apparent heat capacity including the latent-heat spike.
///
/// Materials that do not freeze contribute no latent term.
pub fn effective_capacity(t: f64, mat: &Material, model: &PhaseModel) -> f64 {
    let c = frozen_thawed_coeffs(mat);
    let alpha = alpha_of_phi(phi_delta(t, model), c.frozen_capacity, c.thawed_capacity);
    if mat.freezes() {
        alpha + model.latent_volumetric * phi_delta_prime(t, model)
    } else {
        alpha
    }
}

/// Thermal conductivity at temperature `t`.
pub fn conductivity(t: f64, mat: &Material, model: &PhaseModel) -> f64 {
    let c = frozen_thawed_coeffs(mat);
    lambda_of_phi(
        phi_delta(t, model),
        c.frozen_conductivity,
        c.thawed_conductivity,
    )
}

/// Materials by region tag, sharing one phase model.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    materials: BTreeMap<Tag, Material>,
    phase: PhaseModel,
}

impl MaterialTable {
    pub fn new(
        materials: BTreeMap<Tag, Material>,
        phase: PhaseModel,
    ) -> Result<Self, PhysicsError> {
        phase.validate()?;
        for (&region, mat) in &materials {
            mat.validate(region)?;
        }
        Ok(Self { materials, phase })
    }

    pub fn get(&self, region: Tag) -> Result<&Material, PhysicsError> {
        self.materials
            .get(&region)
            .ok_or(PhysicsError::MissingRegion(region))
    }

    pub fn phase(&self) -> &PhaseModel {
        &self.phase
    }

    pub fn regions(&self) -> impl Iterator<Item = Tag> + '_ {
        self.materials.keys().copied()
    }

    /// Checks that every listed region has a material.
    pub fn covers(&self, regions: &[Tag]) -> Result<(), PhysicsError> {
        regions.iter().try_for_each(|&r| self.get(r).map(|_| ()))
    }
}

/// Sinusoidal yearly air temperature.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeasonalForcing {
    pub amplitude: f64,
    pub day_offset: f64,
    pub mean: f64,
    pub seconds_per_day: f64,
    pub days_per_year: f64,
}

impl Default for SeasonalForcing {
    fn default() -> Self {
        Self {
            amplitude: 41.0,
            day_offset: 250.0,
            mean: -10.2,
            seconds_per_day: 86400.0,
            days_per_year: 365.0,
        }
    }
}

impl SeasonalForcing {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.seconds_per_day > 0.0) || !(self.days_per_year > 0.0) {
            return Err(PhysicsError::Forcing(
                "seconds_per_day and days_per_year must be positive".into(),
            ));
        }
        if !(self.amplitude.is_finite() && self.day_offset.is_finite() && self.mean.is_finite()) {
            return Err(PhysicsError::Forcing("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// One forcing period in seconds.
    pub fn period(&self) -> f64 {
        self.seconds_per_day * self.days_per_year
    }
}

/// Air temperature (°C) at time `t` seconds.
pub fn air_temperature(t: f64, f: &SeasonalForcing) -> f64 {
    f.amplitude * (2.0 * PI * (t / f.seconds_per_day + f.day_offset) / f.days_per_year).sin()
        + f.mean
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnMode {
    AlwaysOn,
    AlwaysOff,
    Seasonal,
}

/// Freezing-column switch.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnController {
    pub column_tags: Vec<Tag>,
    pub mode: ColumnMode,
    /// Switch columns on when the ground is colder than the air (the
    /// inverted rule). Off by default.
    pub literal_paper_rule: bool,
    /// Temperature imposed by an active column; the air temperature if unset.
    pub column_temperature: Option<f64>,
}

impl ColumnController {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if self.mode != ColumnMode::AlwaysOff && self.column_tags.is_empty() {
            return Err(PhysicsError::Controller(
                "column_tags must be nonempty unless mode is always_off".into(),
            ));
        }
        if let Some(t) = self.column_temperature {
            if !t.is_finite() {
                return Err(PhysicsError::Controller(
                    "column_temperature must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    /// Temperature an active column imposes at time `t`.
    pub fn imposed_temperature(&self, t: f64, f: &SeasonalForcing) -> f64 {
        self.column_temperature
            .unwrap_or_else(|| air_temperature(t, f))
    }
}

/// Seasonal columns run while the air is colder than the reference ground temperature.
pub fn columns_active(
    t: f64,
    soil_ref_t: f64,
    ctrl: &ColumnController,
    f: &SeasonalForcing,
) -> bool {
    match ctrl.mode {
        ColumnMode::AlwaysOn => true,
        ColumnMode::AlwaysOff => false,
        ColumnMode::Seasonal => {
            let air = air_temperature(t, f);
            if ctrl.literal_paper_rule {
                soil_ref_t < air
            } else {
                air < soil_ref_t
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_model() -> PhaseModel {
        PhaseModel::new(0.0, 1.0, 1.04e8).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn phi_delta_values() {
        let m = unit_model();
        assert_eq!(phi_delta(-2.0, &m), 0.0);
        assert_eq!(phi_delta(0.0, &m), 0.5);
        assert_eq!(phi_delta(0.5, &m), 0.75);
        assert_eq!(phi_delta(1.0, &m), 1.0);
        assert_eq!(phi_delta(-1.0, &m), 0.0);
    }

    #[test]
    fn phi_delta_prime_values() {
        let m = unit_model();
        assert_eq!(phi_delta_prime(-5.0, &m), 0.0);
        assert_eq!(phi_delta_prime(0.0, &m), 0.5);
        assert_eq!(phi_delta_prime(1.0, &m), 0.0);
        assert_eq!(phi_delta_prime(-1.0, &m), 0.0);
    }

    #[test]
    fn phase_model_validation() {
        assert!(PhaseModel::new(0.0, 0.0, 1.0).is_err());
        assert!(PhaseModel::new(0.0, 1.0, -1.0).is_err());
        assert!(PhaseModel::new(f64::NAN, 1.0, 1.0).is_err());
    }

    fn porous(m: f64) -> Material {
        Material::FreezingPorous {
            porosity: m,
            skeleton_capacity: 2.0e6,
            water_capacity: 4.2e6,
            ice_capacity: 1.9e6,
            skeleton_conductivity: 2.43,
            water_conductivity: 0.56,
            ice_conductivity: 2.22,
        }
    }

    #[test]
    fn mixture_rule() {
        let c = frozen_thawed_coeffs(&porous(0.5));
        assert!(close(c.frozen_capacity, 1.95e6, 1e-15));
        assert!(close(c.thawed_capacity, 3.10e6, 1e-15));
        assert!(close(c.frozen_conductivity, 0.5 * 2.43 + 0.5 * 2.22, 1e-15));
        assert!(close(c.thawed_conductivity, 0.5 * 2.43 + 0.5 * 0.56, 1e-15));
    }

    #[test]
    fn zero_porosity_limit() {
        let c = frozen_thawed_coeffs(&porous(1e-12));
        assert!(close(c.frozen_capacity, 2.0e6, 1e-9));
        assert!(close(c.thawed_capacity, 2.0e6, 1e-9));
        assert!(close(c.thawed_conductivity, 2.43, 1e-9));
    }

    #[test]
    fn cement_is_single_phase() {
        let cement = Material::SinglePhase {
            capacity: 0.8e6,
            conductivity: 0.21,
        };
        let c = frozen_thawed_coeffs(&cement);
        assert_eq!(
            (
                c.frozen_capacity,
                c.thawed_capacity,
                c.frozen_conductivity,
                c.thawed_conductivity
            ),
            (0.8e6, 0.8e6, 0.21, 0.21)
        );
    }

    #[test]
    fn material_validation() {
        assert!(porous(0.0).validate(1).is_err());
        assert!(porous(1.0).validate(1).is_err());
        assert!(porous(0.3).validate(1).is_ok());
        let bad = Material::SinglePhase {
            capacity: 0.0,
            conductivity: 1.0,
        };
        assert!(matches!(
            bad.validate(4),
            Err(PhysicsError::Material { region: 4, .. })
        ));
    }

    #[test]
    fn interpolation_endpoints() {
        assert_eq!(alpha_of_phi(0.0, 1e6, 3e6), 1e6);
        assert_eq!(lambda_of_phi(1.0, 2.0, 1.5), 1.5);
        assert_eq!(alpha_of_phi(0.25, 1e6, 3e6), 1.5e6);
    }

    #[test]
    fn effective_capacity_values() {
        let mat = Material::FreezingPorous {
            porosity: 0.5,
            skeleton_capacity: 2e6,
            water_capacity: 2e6,
            ice_capacity: 2e6,
            skeleton_conductivity: 1.0,
            water_conductivity: 1.0,
            ice_conductivity: 1.0,
        };
        let m = unit_model();
        assert!(close(effective_capacity(0.0, &mat, &m), 5.4e7, 1e-14));
        assert_eq!(effective_capacity(-20.0, &mat, &m), 2e6);

        let frozen = frozen_thawed_coeffs(&porous(0.3)).frozen_capacity;
        assert_eq!(effective_capacity(-20.0, &porous(0.3), &m), frozen);

        let no_latent = PhaseModel::new(0.0, 1.0, 0.0).unwrap();
        let c = frozen_thawed_coeffs(&porous(0.3));
        for t in [-3.0, -0.5, 0.0, 0.25, 3.0] {
            let expected = alpha_of_phi(
                phi_delta(t, &no_latent),
                c.frozen_capacity,
                c.thawed_capacity,
            );
            assert_eq!(effective_capacity(t, &porous(0.3), &no_latent), expected);
        }
    }

    #[test]
    fn single_phase_has_no_latent_spike() {
        let sand = Material::SinglePhase {
            capacity: 1.34e6,
            conductivity: 0.47,
        };
        assert_eq!(effective_capacity(0.0, &sand, &unit_model()), 1.34e6);
    }

    #[test]
    fn air_temperature_values() {
        let f = SeasonalForcing::default();
        assert!((air_temperature(0.0, &f) - (-47.82092866843513)).abs() < 1e-9);
        let peak = 206.25 * 86400.0;
        assert!((air_temperature(peak, &f) - 30.8).abs() < 1e-12);
        for t in [0.0, 1.0e5, 3.3e6, 2.0e7] {
            let shifted = air_temperature(t + 365.0 * 86400.0, &f);
            assert!((air_temperature(t, &f) - shifted).abs() < 1e-9);
        }
    }

    #[test]
    fn controller_modes() {
        let f = SeasonalForcing::default();
        let mut ctrl = ColumnController {
            column_tags: vec![8],
            mode: ColumnMode::AlwaysOff,
            literal_paper_rule: false,
            column_temperature: None,
        };
        assert!(!columns_active(0.0, 100.0, &ctrl, &f));
        ctrl.mode = ColumnMode::AlwaysOn;
        assert!(columns_active(0.0, -100.0, &ctrl, &f));

        // Constant forcing isolates the comparison.
        ctrl.mode = ColumnMode::Seasonal;
        let cold = SeasonalForcing {
            amplitude: 0.0,
            mean: -30.0,
            ..f
        };
        let warm = SeasonalForcing {
            amplitude: 0.0,
            mean: 25.0,
            ..f
        };
        assert!(columns_active(0.0, -5.0, &ctrl, &cold));
        assert!(!columns_active(0.0, -2.0, &ctrl, &warm));
        ctrl.literal_paper_rule = true;
        assert!(!columns_active(0.0, -5.0, &ctrl, &cold));
        assert!(columns_active(0.0, -2.0, &ctrl, &warm));
    }

    #[test]
    fn controller_needs_tags() {
        let ctrl = ColumnController {
            column_tags: vec![],
            mode: ColumnMode::Seasonal,
            literal_paper_rule: false,
            column_temperature: None,
        };
        assert!(ctrl.validate().is_err());
    }

    #[test]
    fn missing_region() {
        let table = MaterialTable::new(BTreeMap::new(), unit_model()).unwrap();
        assert_eq!(table.get(99).unwrap_err(), PhysicsError::MissingRegion(99));
    }
}
