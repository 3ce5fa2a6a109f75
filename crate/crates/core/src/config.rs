//! Scenario inputs: materials, plate geometry, frequency list and mesh density.
//!
//! Scenario files use the engineering units of the material table (GPa,
//! g/cm³, mm, MHz). Everything is converted to SI on load and back on write.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const GPA: f64 = 1e9;
const G_PER_CC: f64 = 1000.0;
const MM: f64 = 1e-3;
const MHZ: f64 = 1e6;

/// Default half-thickness `h` of the reference plate (total thickness 1 mm).
pub const DEFAULT_HALF_THICKNESS: f64 = 0.5e-3;

/// Elements per shortest bulk shear wavelength used when the scenario does
/// not fix the mesh. Controls the accumulated phase error of the travelling
/// waves (no-crack identity at 1e-3 over the whole domain).
pub const AUTO_ELEMENTS_PER_WAVELENGTH: f64 = 24.0;

/// Minimum elements across the total plate thickness for automatic meshes of
/// cracked plates. The crack-tip singularity limits the convergence of the
/// modal amplitudes (roughly second order in the element size) independently
/// of frequency, so low-frequency meshes are capped by this rule rather than
/// by the wavelength. Sized so that halving the element size changes every
/// modal amplitude by well under 1%.
pub const AUTO_ELEMENTS_THROUGH_THICKNESS: f64 = 48.0;

/// Below this many nodes per shortest wavelength a mesh is flagged.
pub const MIN_NODES_PER_WAVELENGTH: f64 = 10.0;

/// Isotropic layer material. Only `mu` and `rho` enter the antiplane problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Shear modulus, Pa.
    pub mu: f64,
    /// Density, kg/m³.
    pub rho: f64,
    /// First Lamé constant, Pa. Stored for completeness; unused.
    pub lambda_lame: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, mu: f64, rho: f64, lambda_lame: f64) -> Result<Self> {
        let name = name.into();
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid(format!("mu of material '{name}' must be positive")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid(format!("rho of material '{name}' must be positive")));
        }
        Ok(Self {
            name,
            mu,
            rho,
            lambda_lame,
        })
    }

    /// Bulk shear wave speed sqrt(mu / rho), m/s.
    pub fn shear_speed(&self) -> f64 {
        (self.mu / self.rho).sqrt()
    }
}

/// Looks up one of the tabulated materials (case-insensitive).
pub fn builtin_material(name: &str) -> Result<Material> {
    let (canonical, lambda, mu, rho) = match name.trim().to_ascii_lowercase().as_str() {
        "steel" => ("steel", 115.5, 79.0, 7.8),
        "aluminum" | "aluminium" => ("aluminum", 58.2, 26.1, 2.7),
        "titanium" => ("titanium", 66.9, 44.6, 4.5),
        _ => {
            return Err(Error::UnknownMaterial {
                name: name.to_string(),
            })
        }
    };
    Material::new(canonical, mu * GPA, rho * G_PER_CC, lambda * GPA)
}

/// Which layer of the plate a point or element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    /// Upper layer, 0 <= x2 <= h_a.
    A,
    /// Lower layer, -h_b <= x2 <= 0.
    B,
}

/// Two-layer plate with an interface debond centred at x1 = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BilayerPlate {
    pub layer_a: Material,
    pub layer_b: Material,
    pub h_a: f64,
    pub h_b: f64,
    pub crack_length: f64,
    /// Distance from the origin to each virtual boundary.
    pub a_virtual: f64,
    pub plate_half_length: f64,
}

impl BilayerPlate {
    pub fn new(
        layer_a: Material,
        layer_b: Material,
        h_a: f64,
        h_b: f64,
        crack_length: f64,
        a_virtual: f64,
        plate_half_length: f64,
    ) -> Result<Self> {
        let plate = Self {
            layer_a,
            layer_b,
            h_a,
            h_b,
            crack_length,
            a_virtual,
            plate_half_length,
        };
        plate.validate()?;
        Ok(plate)
    }

    /// Reference geometry: 1 mm total thickness split at `h_a`, L = 30h,
    /// virtual boundaries at 7.5h.
    pub fn reference(
        layer_a: Material,
        layer_b: Material,
        h_a: f64,
        crack_length: f64,
    ) -> Result<Self> {
        let h = DEFAULT_HALF_THICKNESS;
        Self::new(
            layer_a,
            layer_b,
            h_a,
            2.0 * h - h_a,
            crack_length,
            7.5 * h,
            15.0 * h,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_a > 0.0) {
            return Err(invalid("h_a must be positive"));
        }
        if !(self.h_b > 0.0) {
            return Err(invalid("h_b must be positive"));
        }
        if !(self.crack_length >= 0.0) {
            return Err(invalid("crack_length must be non-negative"));
        }
        if !(self.a_virtual > 0.0) {
            return Err(invalid("a_virtual must be positive"));
        }
        if !(self.crack_length < 2.0 * self.a_virtual) {
            return Err(invalid("crack_length must be shorter than 2 * a_virtual"));
        }
        if !(self.a_virtual < self.plate_half_length) {
            return Err(invalid("a_virtual must be smaller than plate_half_length"));
        }
        Ok(())
    }

    pub fn thickness(&self) -> f64 {
        self.h_a + self.h_b
    }

    pub fn material(&self, layer: Layer) -> &Material {
        match layer {
            Layer::A => &self.layer_a,
            Layer::B => &self.layer_b,
        }
    }

    pub fn layer_thickness(&self, layer: Layer) -> f64 {
        match layer {
            Layer::A => self.h_a,
            Layer::B => self.h_b,
        }
    }

    /// Smallest bulk shear speed of the two layers.
    pub fn min_shear_speed(&self) -> f64 {
        self.layer_a.shear_speed().min(self.layer_b.shear_speed())
    }

    /// Distance between a virtual boundary and the nearest crack tip.
    pub fn clearance(&self) -> f64 {
        self.a_virtual - 0.5 * self.crack_length
    }

    pub fn is_homogeneous(&self) -> bool {
        self.layer_a.mu == self.layer_b.mu && self.layer_a.rho == self.layer_b.rho
    }
}

/// Structured mesh resolution and element quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshDensity {
    pub elems_x: usize,
    pub elems_y_a: usize,
    pub elems_y_b: usize,
    pub quadrature_order: usize,
}

impl MeshDensity {
    /// Resolution giving [`AUTO_ELEMENTS_PER_WAVELENGTH`] elements per bulk
    /// shear wavelength of the slower layer at `f_max`, and, when the plate
    /// has a debond, no fewer than [`AUTO_ELEMENTS_THROUGH_THICKNESS`]
    /// elements through the plate.
    pub fn auto(plate: &BilayerPlate, f_max: f64) -> Self {
        let mut size = plate.min_shear_speed() / f_max / AUTO_ELEMENTS_PER_WAVELENGTH;
        if plate.crack_length > 0.0 {
            size = size.min(plate.thickness() / AUTO_ELEMENTS_THROUGH_THICKNESS);
        }
        Self::with_element_size(plate, size)
    }

    pub fn with_elements_per_wavelength(plate: &BilayerPlate, f_max: f64, epw: f64) -> Self {
        Self::with_element_size(plate, plate.min_shear_speed() / f_max / epw)
    }

    /// Square-ish elements of edge `size` (m).
    pub fn with_element_size(plate: &BilayerPlate, size: f64) -> Self {
        let count = |len: f64| ((len / size).ceil() as usize).max(2);
        Self {
            elems_x: count(2.0 * plate.a_virtual),
            elems_y_a: count(plate.h_a),
            elems_y_b: count(plate.h_b),
            quadrature_order: 3,
        }
    }

    /// Scales every element count by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            elems_x: self.elems_x * factor,
            elems_y_a: self.elems_y_a * factor,
            elems_y_b: self.elems_y_b * factor,
            quadrature_order: self.quadrature_order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.elems_x < 2 {
            return Err(invalid("elems_x must be at least 2"));
        }
        if self.elems_y_a < 2 {
            return Err(invalid("elems_y_a must be at least 2"));
        }
        if self.elems_y_b < 2 {
            return Err(invalid("elems_y_b must be at least 2"));
        }
        if self.quadrature_order < 3 {
            return Err(invalid("quadrature_order must be at least 3"));
        }
        Ok(())
    }

    /// Warns when the mesh has fewer than [`MIN_NODES_PER_WAVELENGTH`] nodes
    /// per shortest wavelength. Returns the worst nodes-per-wavelength value.
    pub fn check_resolution(&self, plate: &BilayerPlate, f_max: f64) -> f64 {
        let lambda = plate.min_shear_speed() / f_max;
        let dx = 2.0 * plate.a_virtual / self.elems_x as f64;
        let dy = (plate.h_a / self.elems_y_a as f64).max(plate.h_b / self.elems_y_b as f64);
        // quadratic elements carry two node spacings per element
        let npw = 2.0 * lambda / dx.max(dy);
        if npw < MIN_NODES_PER_WAVELENGTH {
            log::warn!(
                "mesh resolves the shortest wavelength with {npw:.1} nodes (< {MIN_NODES_PER_WAVELENGTH})"
            );
        }
        npw
    }
}

/// A validated scattering scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plate: BilayerPlate,
    /// Excitation frequencies, Hz.
    pub frequencies: Vec<f64>,
    /// 1-based index of the incident mode (mode 1 has the largest wavenumber).
    pub incident_mode: usize,
    pub mesh: MeshDensity,
}

impl Scenario {
    pub fn new(
        plate: BilayerPlate,
        frequencies: Vec<f64>,
        incident_mode: usize,
        mesh: Option<MeshDensity>,
    ) -> Result<Self> {
        plate.validate()?;
        if frequencies.is_empty() {
            return Err(invalid("at least one frequency is required"));
        }
        if frequencies.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(invalid("frequencies must be positive"));
        }
        if incident_mode < 1 {
            return Err(invalid("incident_mode must be at least 1"));
        }
        let f_max = frequencies.iter().cloned().fold(0.0, f64::max);
        let mesh = mesh.unwrap_or_else(|| MeshDensity::auto(&plate, f_max));
        mesh.validate()?;
        Ok(Self {
            plate,
            frequencies,
            incident_mode,
            mesh,
        })
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.iter().cloned().fold(0.0, f64::max)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.into_scenario()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScenarioFile::from_scenario(self))?)
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_json_str(&text)
}

/// Writes a scenario in the file schema (engineering units).
pub fn write_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json_string()?).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    plate: PlateFile,
    frequencies_mhz: Vec<f64>,
    #[serde(default = "default_incident_mode")]
    incident_mode: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mesh: Option<MeshFile>,
}

fn default_incident_mode() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu_gpa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_gcc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_gpa: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlateFile {
    layer_a: LayerFile,
    layer_b: LayerFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h_a_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h_b_mm: Option<f64>,
    crack_length_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a_virtual_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plate_half_length_mm: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    elems_x: usize,
    elems_y_a: usize,
    elems_y_b: usize,
    #[serde(default = "default_quadrature")]
    quadrature_order: usize,
}

fn default_quadrature() -> usize {
    3
}

impl LayerFile {
    fn into_material(self, which: &str) -> Result<Material> {
        match (self.mu_gpa, self.rho_gcc) {
            (Some(mu), Some(rho)) => Material::new(
                self.name.unwrap_or_else(|| "custom".to_string()),
                mu * GPA,
                rho * G_PER_CC,
                self.lambda_gpa.unwrap_or(0.0) * GPA,
            ),
            (None, None) => match self.name {
                Some(name) => builtin_material(&name),
                None => Err(invalid(format!("{which} needs a name or mu_gpa and rho_gcc"))),
            },
            _ => Err(invalid(format!("{which} must give both mu_gpa and rho_gcc"))),
        }
    }

    fn from_material(m: &Material) -> Self {
        Self {
            name: Some(m.name.clone()),
            mu_gpa: Some(m.mu / GPA),
            rho_gcc: Some(m.rho / G_PER_CC),
            lambda_gpa: Some(m.lambda_lame / GPA),
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let p = self.plate;
        let h_a = p.h_a_mm.map_or(DEFAULT_HALF_THICKNESS, |v| v * MM);
        let h_b = p.h_b_mm.map_or(DEFAULT_HALF_THICKNESS, |v| v * MM);
        if !(h_a > 0.0) {
            return Err(invalid("h_a must be positive"));
        }
        if !(h_b > 0.0) {
            return Err(invalid("h_b must be positive"));
        }
        let h = 0.5 * (h_a + h_b);
        let plate = BilayerPlate::new(
            p.layer_a.into_material("layer_a")?,
            p.layer_b.into_material("layer_b")?,
            h_a,
            h_b,
            p.crack_length_mm * MM,
            p.a_virtual_mm.map_or(7.5 * h, |v| v * MM),
            p.plate_half_length_mm.map_or(15.0 * h, |v| v * MM),
        )?;
        let mesh = self.mesh.map(|m| MeshDensity {
            elems_x: m.elems_x,
            elems_y_a: m.elems_y_a,
            elems_y_b: m.elems_y_b,
            quadrature_order: m.quadrature_order,
        });
        let frequencies = self.frequencies_mhz.iter().map(|f| f * MHZ).collect();
        Scenario::new(plate, frequencies, self.incident_mode, mesh)
    }

    fn from_scenario(s: &Scenario) -> Self {
        let p = &s.plate;
        Self {
            plate: PlateFile {
                layer_a: LayerFile::from_material(&p.layer_a),
                layer_b: LayerFile::from_material(&p.layer_b),
                h_a_mm: Some(p.h_a / MM),
                h_b_mm: Some(p.h_b / MM),
                crack_length_mm: p.crack_length / MM,
                a_virtual_mm: Some(p.a_virtual / MM),
                plate_half_length_mm: Some(p.plate_half_length / MM),
            },
            frequencies_mhz: s.frequencies.iter().map(|f| f / MHZ).collect(),
            incident_mode: s.incident_mode,
            mesh: Some(MeshFile {
                elems_x: s.mesh.elems_x,
                elems_y_a: s.mesh.elems_y_a,
                elems_y_b: s.mesh.elems_y_b,
                quadrature_order: s.mesh.quadrature_order,
            }),
        }
    }
}
