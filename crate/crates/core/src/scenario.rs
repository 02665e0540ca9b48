//! Scenario files and the end-to-end pipeline: beam, PO currents, modal
//! spectrum, requested field outputs, optional reference comparisons, and
//! timing sweeps.
//!
//! Scenarios are TOML. Lengths are in wavelengths unless
//! `length_unit = "meter"`. See `scenarios/paper_iv_downscaled.toml` for a
//! complete annotated file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::excitation::{gaussian_beam_field, po_currents, surface_points, GaussianBeamParams, MediumParams, SurfaceCurrents};
use crate::farfield::{direction_grid, far_field, FarFieldGrid};
use crate::field::{relative_l2, FieldGrid, Warning};
use crate::geometry::{partition_slices, read_surface_csv, CylGrid, QuasiCylSurface, SlicePartition, SurfaceOptions, SurfaceShape};
use crate::nearfield::{field_on_cylinder, field_on_plane, write_plane_csv, PlaneSpec};
use crate::oracle::{radiate_far_zone, radiate_sources, sources_from_surface, OracleConfig, PointSource};
use crate::spectral::{modal_coefficients_direct, modal_coefficients_tifft, ModalGrid, ModalSpectrum};

/// Built-in scenarios, by name.
pub const BUILTINS: [(&str, &str); 3] = [
    ("paper_iv_downscaled", include_str!("../scenarios/paper_iv_downscaled.toml")),
    ("perfect_cylinder_smoke", include_str!("../scenarios/perfect_cylinder_smoke.toml")),
    ("paper_iv_full", include_str!("../scenarios/paper_iv_full.toml")),
];

/// Field floor, relative to the peak, for pointwise dB comparisons.
pub const DB_COMPARISON_FLOOR: f64 = 1e-3;
/// Required drop of the plane field at the axial raster ends, in dB.
pub const Z_BOUNDARY_DB: f64 = -60.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    #[default]
    Wavelength,
    Meter,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    n_phi: usize,
    n_z: usize,
    length_z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SurfaceFile {
    Cylinder { radius: f64 },
    TiltedCosine { radius: f64, amplitude: f64 },
    CosinePerturbed { radius: f64, amplitude: f64, period_x: f64, period_z: f64 },
    /// Radii in meters, header `phi_index,z_index,rho_meters`; relative
    /// paths resolve against the scenario file.
    Csv { path: PathBuf },
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeamFile {
    waist_x: f64,
    waist_y: f64,
    waist_center: [f64; 3],
    polarization: [f64; 3],
    propagation_axis: [f64; 3],
    #[serde(default = "default_amplitude")]
    amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolverFile {
    taylor_order: usize,
    slice_thickness: f64,
    max_relative_deviation: f64,
}

impl Default for SolverFile {
    fn default() -> Self {
        Self {
            taylor_order: 3,
            slice_thickness: 0.05,
            max_relative_deviation: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CompareFile {
    direct: bool,
    oracle: bool,
    oracle_refine_phi: usize,
    oracle_refine_z: usize,
}

impl Default for CompareFile {
    fn default() -> Self {
        Self {
            direct: false,
            oracle: false,
            oracle_refine_phi: 4,
            oracle_refine_z: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum OutputFile {
    Plane { y: f64, x_min: f64, x_max: f64, n_x: usize },
    Cylinder { radius: f64 },
    FarField {
        distance: f64,
        theta_min_deg: f64,
        theta_max_deg: f64,
        n_theta: usize,
        phi_min_deg: f64,
        phi_max_deg: f64,
        n_phi: usize,
    },
    Spectrum,
}

fn default_budget() -> f64 {
    120.0
}

fn default_repeats() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    sizes: Vec<usize>,
    #[serde(default = "default_budget")]
    direct_budget_s: f64,
    #[serde(default = "default_repeats")]
    repeats: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    length_unit: LengthUnit,
    frequency: f64,
    grid: GridFile,
    surface: SurfaceFile,
    beam: BeamFile,
    #[serde(default)]
    solver: SolverFile,
    #[serde(default)]
    compare: CompareFile,
    #[serde(default)]
    outputs: Vec<OutputFile>,
    bench: Option<BenchFile>,
}

/// Where the surface radii come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSource {
    Shape(SurfaceShape),
    Csv(PathBuf),
}

/// A requested artifact, lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Plane(PlaneSpec),
    Cylinder { radius: f64 },
    FarField { distance: f64, directions: Vec<(f64, f64)> },
    Spectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub direct_budget_s: f64,
    pub repeats: usize,
}

/// A validated scenario with all lengths in meters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    /// SHA-256 of the scenario text.
    pub digest: String,
    pub medium: MediumParams,
    pub beam: GaussianBeamParams,
    pub surface: SurfaceSource,
    pub grid: CylGrid,
    pub taylor_order: usize,
    pub slice_thickness: f64,
    pub max_relative_deviation: f64,
    pub compare_direct: bool,
    pub compare_oracle: bool,
    pub oracle_refine: (usize, usize),
    pub outputs: Vec<Output>,
    pub bench: Option<BenchConfig>,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Scenario {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

/// Key or table name on the line holding a byte offset of the source text.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?.trim();
    let key = line.split('=').next()?.trim().trim_matches(|c| c == '[' || c == ']');
    (!key.is_empty()).then(|| key.to_string())
}

/// Field name quoted in a deserializer message such as "missing field `radius`".
fn quoted_name(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let end = start + message[start..].find('`')?;
    Some(message[start..end].to_string())
}

impl Scenario {
    /// Parses scenario text; `base_dir` resolves relative CSV paths.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let field = quoted_name(&message)
                .filter(|_| message.starts_with("missing field") || message.starts_with("unknown field"))
                .or_else(|| e.span().and_then(|s| key_at(text, s.start)))
                .unwrap_or_else(|| "<document>".into());
            invalid(&field, message)
        })?;
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        Self::resolve(file, digest, base_dir)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("<file>", format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text, Path::new(".")).expect("built-in scenarios are valid"))
    }

    /// A file path, or a built-in scenario name when no such file exists.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            return Self::from_path(path);
        }
        Self::builtin(spec).ok_or_else(|| invalid("<file>", format!("no scenario file or built-in named `{spec}`")))
    }

    fn resolve(file: ScenarioFile, digest: String, base_dir: &Path) -> Result<Self> {
        let frequency = positive("frequency", file.frequency)?;
        let medium = MediumParams::free_space(frequency).map_err(|e| invalid("frequency", e.to_string()))?;
        let unit = match file.length_unit {
            LengthUnit::Wavelength => medium.wavelength(),
            LengthUnit::Meter => 1.0,
        };
        let len = |field: &str, v: f64| positive(field, v).map(|v| v * unit);

        for (field, n) in [("grid.n_phi", file.grid.n_phi), ("grid.n_z", file.grid.n_z)] {
            if !n.is_power_of_two() || n < 2 {
                return Err(invalid(field, format!("must be a power of two >= 2, got {n}")));
            }
        }
        let grid = CylGrid::new(file.grid.n_phi, file.grid.n_z, len("grid.length_z", file.grid.length_z)?)
            .map_err(|e| invalid("grid", e.to_string()))?;

        let surface = match file.surface {
            SurfaceFile::Cylinder { radius } => SurfaceSource::Shape(SurfaceShape::Cylinder {
                radius: len("surface.radius", radius)?,
            }),
            SurfaceFile::TiltedCosine { radius, amplitude } => SurfaceSource::Shape(SurfaceShape::TiltedCosine {
                radius: len("surface.radius", radius)?,
                amplitude: amplitude * unit,
            }),
            SurfaceFile::CosinePerturbed { radius, amplitude, period_x, period_z } => {
                SurfaceSource::Shape(SurfaceShape::CosinePerturbed {
                    radius: len("surface.radius", radius)?,
                    amplitude: amplitude * unit,
                    period_x: len("surface.period_x", period_x)?,
                    period_z: len("surface.period_z", period_z)?,
                })
            }
            SurfaceFile::Csv { path } => {
                let path = if path.is_absolute() { path } else { base_dir.join(path) };
                if !path.exists() {
                    return Err(invalid("surface.path", format!("{} does not exist", path.display())));
                }
                SurfaceSource::Csv(path)
            }
        };

        let b = &file.beam;
        let beam = GaussianBeamParams {
            waist_x: len("beam.waist_x", b.waist_x)?,
            waist_y: len("beam.waist_y", b.waist_y)?,
            waist_center: b.waist_center.map(|v| v * unit),
            polarization: b.polarization,
            propagation_axis: b.propagation_axis,
            amplitude: b.amplitude,
        };
        beam.validate().map_err(|e| invalid("beam", e.to_string()))?;

        let slice_thickness = len("solver.slice_thickness", file.solver.slice_thickness)?;
        let max_relative_deviation = positive("solver.max_relative_deviation", file.solver.max_relative_deviation)?;
        if file.compare.oracle_refine_phi == 0 || file.compare.oracle_refine_z == 0 {
            return Err(invalid("compare.oracle_refine_phi", "refinement factors must be at least 1"));
        }
        for (name, f) in [("compare.oracle_refine_phi", file.compare.oracle_refine_phi), ("compare.oracle_refine_z", file.compare.oracle_refine_z)] {
            if !f.is_power_of_two() {
                return Err(invalid(name, "refinement factors must be powers of two"));
            }
        }

        let mut outputs = Vec::new();
        for (n, o) in file.outputs.into_iter().enumerate() {
            let field = |s: &str| format!("outputs[{n}].{s}");
            outputs.push(match o {
                OutputFile::Plane { y, x_min, x_max, n_x } => {
                    if n_x == 0 {
                        return Err(invalid(&field("n_x"), "must be at least 1"));
                    }
                    if x_max < x_min {
                        return Err(invalid(&field("x_max"), "must not be below x_min"));
                    }
                    Output::Plane(PlaneSpec { y: y * unit, x_min: x_min * unit, x_max: x_max * unit, n_x })
                }
                OutputFile::Cylinder { radius } => Output::Cylinder { radius: len(&field("radius"), radius)? },
                OutputFile::FarField { distance, theta_min_deg, theta_max_deg, n_theta, phi_min_deg, phi_max_deg, n_phi } => {
                    if !(0.0..180.0).contains(&theta_min_deg) || theta_max_deg > 180.0 || theta_max_deg <= theta_min_deg {
                        return Err(invalid(&field("theta_min_deg"), "need 0 <= theta_min < theta_max <= 180"));
                    }
                    if n_theta == 0 || n_phi == 0 {
                        return Err(invalid(&field("n_theta"), "direction counts must be at least 1"));
                    }
                    Output::FarField {
                        distance: len(&field("distance"), distance)?,
                        directions: direction_grid(
                            (theta_min_deg.to_radians(), theta_max_deg.to_radians()),
                            n_theta,
                            (phi_min_deg.to_radians(), phi_max_deg.to_radians()),
                            n_phi,
                        ),
                    }
                }
                OutputFile::Spectrum => Output::Spectrum,
            });
        }

        let bench = match file.bench {
            None => None,
            Some(b) => {
                if b.sizes.is_empty() || b.sizes.iter().any(|s| !s.is_power_of_two() || *s < 4) {
                    return Err(invalid("bench.sizes", "sizes must be powers of two, at least 4"));
                }
                Some(BenchConfig {
                    sizes: b.sizes,
                    direct_budget_s: positive("bench.direct_budget_s", b.direct_budget_s)?,
                    repeats: b.repeats.max(1),
                })
            }
        };

        Ok(Self {
            name: file.name,
            digest,
            medium,
            beam,
            surface,
            grid,
            taylor_order: file.solver.taylor_order,
            slice_thickness,
            max_relative_deviation,
            compare_direct: file.compare.direct,
            compare_oracle: file.compare.oracle,
            oracle_refine: (file.compare.oracle_refine_phi, file.compare.oracle_refine_z),
            outputs,
            bench,
        })
    }

    fn surface_options(&self) -> SurfaceOptions {
        SurfaceOptions {
            max_relative_deviation: self.max_relative_deviation,
            reference_radius: None,
        }
    }

    /// Samples the surface on `grid`.
    pub fn build_surface(&self, grid: CylGrid) -> Result<QuasiCylSurface> {
        match &self.surface {
            SurfaceSource::Shape(shape) => shape.build(grid, self.surface_options()),
            SurfaceSource::Csv(path) => {
                if grid != self.grid {
                    return Err(Error::Mismatch("CSV surfaces exist only on the scenario grid".into()));
                }
                read_surface_csv(path, grid, self.surface_options())
            }
        }
    }

    /// Surface, PO currents and modal grid on `grid`.
    pub fn prepare_on(&self, grid: CylGrid) -> Result<Prepared> {
        let surface = self.build_surface(grid)?;
        let incident = gaussian_beam_field(&self.beam, &self.medium, &surface_points(&surface))?;
        let currents = po_currents(&incident, &surface, self.beam.propagation_axis)?;
        let modal = ModalGrid::for_surface(&surface, &self.medium)?;
        let partition = partition_slices(&surface, self.slice_thickness)?;
        Ok(Prepared {
            surface,
            currents,
            modal,
            partition,
        })
    }

    pub fn prepare(&self) -> Result<Prepared> {
        self.prepare_on(self.grid)
    }

    /// Current elements for the reference solver, on the scenario grid
    /// refined by `oracle_refine`. CSV surfaces are not refined.
    pub fn oracle_sources(&self) -> Result<(Vec<PointSource>, QuasiCylSurface, Vec<Warning>)> {
        let (rp, rz) = self.oracle_refine;
        let mut warnings = Vec::new();
        let grid = match self.surface {
            SurfaceSource::Shape(_) => CylGrid::new(self.grid.n_phi * rp, self.grid.n_z * rz, self.grid.length_z)?,
            SurfaceSource::Csv(_) => {
                if (rp, rz) != (1, 1) {
                    warnings.push(Warning::new("scenario", "CSV surface: reference solver uses the unrefined grid"));
                }
                self.grid
            }
        };
        let prepared = self.prepare_on(grid)?;
        let sources = sources_from_surface(&prepared.currents, &prepared.surface)?;
        Ok((sources, prepared.surface, warnings))
    }
}

/// Scenario state ready for the modal solvers.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub surface: QuasiCylSurface,
    pub currents: SurfaceCurrents,
    pub modal: ModalGrid,
    pub partition: SlicePartition,
}

impl Prepared {
    pub fn tifft(&self, medium: &MediumParams, taylor_order: usize) -> Result<ModalSpectrum> {
        modal_coefficients_tifft(&self.currents, &self.surface, &self.partition, medium, &self.modal, taylor_order)
    }

    pub fn direct(&self, medium: &MediumParams) -> Result<ModalSpectrum> {
        modal_coefficients_direct(&self.currents, &self.surface, medium, &self.modal)
    }
}

/// Agreement of one quantity with a reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub relative_l2: f64,
    /// Largest `|20 log10|a| - 20 log10|b||` where the reference exceeds
    /// [`DB_COMPARISON_FLOOR`] of its peak.
    pub max_db_difference: f64,
}

impl Comparison {
    pub fn new(name: impl Into<String>, values: &[Complex64], reference: &[Complex64]) -> Self {
        let peak = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let max_db_difference = values
            .iter()
            .zip(reference)
            .filter(|(_, r)| r.norm() >= DB_COMPARISON_FLOOR * peak && r.norm() > 0.0)
            .map(|(v, r)| (20.0 * (v.norm() / r.norm()).log10()).abs())
            .fold(0.0, f64::max);
        Self {
            name: name.into(),
            relative_l2: relative_l2(values.iter().copied(), reference.iter().copied()),
            max_db_difference,
        }
    }
}

/// Run-time options outside the scenario file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub strict: bool,
}

/// Summary of one pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub digest: String,
    pub comparisons: Vec<Comparison>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    pub timings_s: Vec<(String, f64)>,
}

struct Artifacts<'a> {
    scenario: &'a Scenario,
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Artifacts<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Records an artifact and writes its JSON sidecar.
    fn finish(&mut self, name: &str, kind: &str, extra: serde_json::Value) -> Result<()> {
        let g = self.scenario.grid;
        let sidecar = json!({
            "artifact": name,
            "kind": kind,
            "scenario": self.scenario.name,
            "scenario_digest": self.scenario.digest,
            "frequency_hz": self.scenario.medium.frequency,
            "grid": { "n_phi": g.n_phi, "n_z": g.n_z, "length_z_m": g.length_z },
            "taylor_order": self.scenario.taylor_order,
            "slice_thickness_m": self.scenario.slice_thickness,
            "details": extra,
        });
        let side = self.path(&format!("{name}.json"));
        std::fs::write(&side, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        self.written.push(self.path(name));
        self.written.push(side);
        Ok(())
    }
}

/// Checks that a sidecar belongs to `scenario`.
pub fn sidecar_matches(sidecar: &Path, scenario: &Scenario) -> Result<bool> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
    Ok(value["scenario_digest"].as_str() == Some(scenario.digest.as_str()))
}

fn write_db_map(field: &FieldGrid, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,z,db_Ex,db_Ey,db_Ez")?;
    for (p, e) in field.points.iter().zip(&field.e) {
        let db = |c: Complex64| 20.0 * c.norm().max(f64::MIN_POSITIVE).log10();
        writeln!(out, "{:e},{:e},{:.6},{:.6},{:.6}", p[0], p[2], db(e[0]), db(e[1]), db(e[2]))?;
    }
    Ok(())
}

fn write_cylinder_csv(field: &FieldGrid, grid: CylGrid, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "phi,z,re_Erho,im_Erho,re_Ephi,im_Ephi,re_Ez,im_Ez")?;
    for (idx, e) in field.e.iter().enumerate() {
        let mut line = format!("{:e},{:e}", grid.phi_of(idx), grid.z_of(idx));
        for c in e {
            write!(line, ",{:e},{:e}", c.re, c.im).expect("string write");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Peak of `|E|` over the first and last axial rows of a plane raster,
/// relative to the overall peak, in dB.
pub fn z_boundary_level_db(field: &FieldGrid, n_z: usize) -> f64 {
    let mag = |e: &[Complex64; 3]| e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let peak = field.e.iter().map(mag).fold(0.0, f64::max);
    let edge = field
        .e
        .iter()
        .enumerate()
        .filter(|(i, _)| i % n_z == 0 || i % n_z == n_z - 1)
        .map(|(_, e)| mag(e))
        .fold(0.0, f64::max);
    if peak == 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * (edge / peak).log10()
    }
}

/// Reference plane field from the refined radiation integral.
pub fn oracle_plane(scenario: &Scenario, sources: &[PointSource], surface: &QuasiCylSurface, points: &[[f64; 3]]) -> Result<FieldGrid> {
    radiate_sources(sources, &scenario.medium, points, &OracleConfig::for_surface(surface))
}

/// Reference far field from the refined radiation integral.
pub fn oracle_far_field(scenario: &Scenario, sources: &[PointSource], directions: &[(f64, f64)], distance: f64) -> Result<FarFieldGrid> {
    radiate_far_zone(sources, directions, distance, &scenario.medium)
}

/// Runs the scenario, writing artifacts into `options.output_dir`.
pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<RunReport> {
    std::fs::create_dir_all(&options.output_dir)?;
    let medium = &scenario.medium;
    let mut timings = Vec::new();
    let mut warnings: Vec<Warning> = Vec::new();
    let mut comparisons = Vec::new();
    let mut artifacts = Artifacts {
        scenario,
        dir: &options.output_dir,
        written: Vec::new(),
    };

    let t = Instant::now();
    let prepared = scenario.prepare()?;
    timings.push(("prepare".to_string(), t.elapsed().as_secs_f64()));
    log::info!(
        "{}: {} nodes, m_max {}, {} shells",
        scenario.name,
        prepared.surface.grid.len(),
        prepared.modal.m_max,
        prepared.partition.n_shells()
    );

    let t = Instant::now();
    let spectrum = prepared.tifft(medium, scenario.taylor_order)?;
    timings.push(("modal_tifft".to_string(), t.elapsed().as_secs_f64()));
    warnings.extend(spectrum.warnings.iter().cloned());

    if scenario.compare_direct {
        let t = Instant::now();
        let direct = prepared.direct(medium)?;
        timings.push(("modal_direct".to_string(), t.elapsed().as_secs_f64()));
        let err = spectrum.relative_error(&direct, medium);
        log::info!("TI-FFT vs direct modal coefficients: relative error {err:.3e}");
        comparisons.push(Comparison {
            name: "modal_coefficients_tifft_vs_direct".into(),
            relative_l2: err,
            max_db_difference: f64::NAN,
        });
    }

    let oracle = if scenario.compare_oracle && scenario.outputs.iter().any(|o| matches!(o, Output::Plane(_) | Output::FarField { .. })) {
        let (sources, surface, w) = scenario.oracle_sources()?;
        warnings.extend(w);
        Some((sources, surface))
    } else {
        None
    };

    for (n, output) in scenario.outputs.iter().enumerate() {
        match output {
            Output::Plane(plane) => {
                let t = Instant::now();
                let field = field_on_plane(&spectrum, plane, medium)?;
                timings.push((format!("plane_{n}"), t.elapsed().as_secs_f64()));
                warnings.extend(field.warnings.iter().cloned());
                let edge = z_boundary_level_db(&field, scenario.grid.n_z);
                if edge > Z_BOUNDARY_DB {
                    warnings.push(Warning::new(
                        "scenario",
                        format!("plane {n}: field at the axial raster ends is {edge:.1} dB, above {Z_BOUNDARY_DB} dB; axial period too short"),
                    ));
                }
                let name = format!("plane_{n}.csv");
                write_plane_csv(&field, artifacts.path(&name))?;
                artifacts.finish(&name, "plane_field", json!({ "y_m": plane.y, "x_min_m": plane.x_min, "x_max_m": plane.x_max, "n_x": plane.n_x, "z_boundary_db": edge }))?;
                let db_name = format!("plane_{n}_db.csv");
                write_db_map(&field, &artifacts.path(&db_name))?;
                artifacts.finish(&db_name, "plane_db_map", json!({ "convention": "20 log10 |E component|" }))?;

                if let Some((sources, surface)) = &oracle {
                    let t = Instant::now();
                    let reference = oracle_plane(scenario, sources, surface, &field.points)?;
                    timings.push((format!("plane_{n}_oracle"), t.elapsed().as_secs_f64()));
                    let ref_name = format!("plane_{n}_oracle.csv");
                    write_plane_csv(&reference, artifacts.path(&ref_name))?;
                    artifacts.finish(&ref_name, "plane_field_oracle", json!({ "oracle_refine": scenario.oracle_refine }))?;
                    for (c, label) in ["Ex", "Ey", "Ez"].iter().enumerate() {
                        let a: Vec<Complex64> = field.e.iter().map(|e| e[c]).collect();
                        let b: Vec<Complex64> = reference.e.iter().map(|e| e[c]).collect();
                        comparisons.push(Comparison::new(format!("plane_{n}_{label}"), &a, &b));
                    }
                }
            }
            Output::Cylinder { radius } => {
                let field = field_on_cylinder(&spectrum, *radius, medium, scenario.grid)?;
                warnings.extend(field.warnings.iter().cloned());
                let name = format!("cylinder_{n}.csv");
                write_cylinder_csv(&field, scenario.grid, &artifacts.path(&name))?;
                artifacts.finish(&name, "cylinder_field", json!({ "radius_m": radius }))?;
            }
            Output::FarField { distance, directions } => {
                let ff = far_field(&spectrum, directions, *distance, medium)?;
                let name = format!("farfield_{n}.csv");
                ff.write_csv(artifacts.path(&name))?;
                artifacts.finish(&name, "far_field", json!({ "distance_m": distance, "directions": directions.len() }))?;
                if let Some((sources, _)) = &oracle {
                    let reference = oracle_far_field(scenario, sources, directions, *distance)?;
                    let ref_name = format!("farfield_{n}_oracle.csv");
                    reference.write_csv(artifacts.path(&ref_name))?;
                    artifacts.finish(&ref_name, "far_field_oracle", json!({ "form": "far-zone radiation integral" }))?;
                    let a: Vec<Complex64> = ff.e_samples().collect();
                    let b: Vec<Complex64> = reference.e_samples().collect();
                    comparisons.push(Comparison::new(format!("farfield_{n}"), &a, &b));
                }
            }
            Output::Spectrum => {
                let name = format!("spectrum_{n}.csv");
                spectrum.write_csv(artifacts.path(&name))?;
                artifacts.finish(&name, "modal_spectrum", json!({ "m_max": spectrum.grid.m_max }))?;
            }
        }
    }

    let report = RunReport {
        scenario: scenario.name.clone(),
        digest: scenario.digest.clone(),
        comparisons,
        warnings: warnings.iter().map(|w| format!("{}: {}", w.source, w.message)).collect(),
        artifacts: artifacts.written,
        timings_s: timings,
    };
    std::fs::write(options.output_dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    if options.strict {
        if let Some(w) = warnings.first() {
            return Err(Error::Strict(format!("{}: {}", w.source, w.message)));
        }
    }
    Ok(report)
}

/// One row of the timing sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub n_phi: usize,
    pub n_z: usize,
    pub t_ti: f64,
    /// `None` when the direct path would exceed the budget.
    pub t_di: Option<f64>,
}

impl BenchRow {
    pub fn ratio(&self) -> Option<f64> {
        self.t_di.map(|d| d / self.t_ti)
    }
}

/// `n_phi x n_z` split of a power-of-two node count, `n_phi >= n_z`.
pub fn split_size(n: usize) -> (usize, usize) {
    let p = n.trailing_zeros();
    (1 << p.div_ceil(2), 1 << (p / 2))
}

/// Wall time over which the TI-FFT path is repeated, beyond `repeats` calls.
/// The direct path gets a quarter of this.
pub const BENCH_MIN_WALL_S: f64 = 1.0;

/// Minimum over at least `repeats` calls and at least `min_wall_s` seconds.
fn min_time(repeats: usize, min_wall_s: f64, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    let mut best = f64::INFINITY;
    let mut calls = 0;
    while calls < repeats || start.elapsed().as_secs_f64() < min_wall_s {
        let t = Instant::now();
        f()?;
        best = best.min(t.elapsed().as_secs_f64());
        calls += 1;
    }
    Ok(best)
}

/// Times the TI-FFT and direct modal paths over grid sizes, single-threaded.
/// The direct path is skipped once its extrapolated cost exceeds the budget.
pub fn bench(scenario: &Scenario, sizes: &[usize], direct_budget_s: f64, repeats: usize) -> Result<Vec<BenchRow>> {
    if sizes.iter().any(|s| !s.is_power_of_two() || *s < 4) {
        return Err(invalid("bench.sizes", "sizes must be powers of two, at least 4"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Mismatch(e.to_string()))?;
    let medium = &scenario.medium;
    let mut rows = Vec::new();
    // Direct cost model: active nodes x propagating bins x azimuthal orders.
    let mut last_direct: Option<(f64, f64)> = None;
    for &n in sizes {
        let (n_phi, n_z) = split_size(n);
        let grid = CylGrid::new(n_phi, n_z, scenario.grid.length_z)?;
        let prepared = scenario.prepare_on(grid)?;
        let work = {
            let active = (0..grid.len()).filter(|&i| !prepared.currents.is_zero_at(i)).count() as f64;
            active * prepared.modal.valid_bins().count() as f64 * (2 * prepared.modal.m_max + 1) as f64
        };
        let (t_ti, t_di) = pool.install(|| -> Result<(f64, Option<f64>)> {
            prepared.tifft(medium, scenario.taylor_order)?;
            let t_ti = min_time(repeats, BENCH_MIN_WALL_S, || prepared.tifft(medium, scenario.taylor_order).map(|_| ()))?;
            let predicted = last_direct.map(|(t, w)| t * work / w).unwrap_or(0.0);
            let t_di = if predicted <= direct_budget_s {
                Some(min_time(1, 0.25 * BENCH_MIN_WALL_S, || prepared.direct(medium).map(|_| ()))?)
            } else {
                log::info!("N = {n}: direct path censored (predicted {predicted:.1} s)");
                None
            };
            Ok((t_ti, t_di))
        })?;
        if let Some(t) = t_di {
            last_direct = Some((t, work));
        }
        log::info!("N = {n}: t_TI = {t_ti:.4} s, t_DI = {t_di:?}");
        rows.push(BenchRow { n, n_phi, n_z, t_ti, t_di });
    }
    Ok(rows)
}

/// Writes `n,n_phi,n_z,t_ti_s,t_di_s,ratio`; censored entries are empty.
pub fn write_bench_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "n,n_phi,n_z,t_ti_s,t_di_s,ratio")?;
    for r in rows {
        let di = r.t_di.map(|t| format!("{t:e}")).unwrap_or_default();
        let ratio = r.ratio().map(|t| format!("{t:e}")).unwrap_or_default();
        writeln!(out, "{},{},{},{:e},{di},{ratio}", r.n, r.n_phi, r.n_z, r.t_ti)?;
    }
    Ok(())
}

/// Least-squares exponent `p` in `t ~ (N log2 N)^p`.
pub fn nlogn_exponent(rows: &[BenchRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (((r.n as f64) * (r.n as f64).log2()).ln(), r.t_ti.ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    num / den
}

/// Machine-readable error record: `{"error", "field", "message", "exit_code"}`.
pub fn error_record(err: &Error) -> serde_json::Value {
    let (kind, field) = match err {
        Error::Scenario { field, .. } => ("validation", Some(field.clone())),
        Error::Strict(_) => ("strict", None),
        _ => ("solver", None),
    };
    json!({
        "error": kind,
        "field": field,
        "message": err.to_string(),
        "exit_code": exit_code(err),
    })
}

/// 2 for validation failures, 1 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Scenario { .. } => 2,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for (name, _) in BUILTINS {
            let s = Scenario::builtin(name).unwrap();
            assert_eq!(s.name, name);
            assert_eq!(s.digest.len(), 64);
        }
    }

    #[test]
    fn downscaled_geometry_in_meters() {
        let s = Scenario::builtin("paper_iv_downscaled").unwrap();
        let lambda = s.medium.wavelength();
        assert!((s.medium.frequency - 110e9).abs() < 1.0);
        assert_eq!((s.grid.n_phi, s.grid.n_z), (128, 128));
        match s.surface {
            SurfaceSource::Shape(SurfaceShape::CosinePerturbed { radius, amplitude, period_x, period_z }) => {
                assert!((radius / lambda - 20.0).abs() < 1e-12);
                assert!((amplitude / lambda - 0.1).abs() < 1e-12);
                assert!((period_x / lambda - 20.0).abs() < 1e-12);
                assert!((period_z / lambda - 20.0).abs() < 1e-12);
            }
            ref other => panic!("unexpected surface {other:?}"),
        }
        assert!((s.beam.waist_x / lambda - 4.0).abs() < 1e-12);
        assert_eq!(s.taylor_order, 3);
        assert!((s.slice_thickness / lambda - 0.05).abs() < 1e-12);
    }

    fn broken(text: &str) -> (String, i32) {
        let err = Scenario::parse(text, Path::new(".")).unwrap_err();
        let field = match &err {
            Error::Scenario { field, .. } => field.clone(),
            other => panic!("unexpected {other:?}"),
        };
        (field, exit_code(&err))
    }

    const MINIMAL: &str = r#"
name = "t"
frequency = 1e10
[grid]
n_phi = 16
n_z = 16
length_z = 8.0
[surface]
kind = "cylinder"
radius = 2.0
[beam]
waist_x = 1.0
waist_y = 1.0
waist_center = [0.0, 3.0, 0.0]
polarization = [1.0, 0.0, 0.0]
propagation_axis = [0.0, -1.0, 0.0]
"#;

    #[test]
    fn minimal_file_uses_defaults() {
        let s = Scenario::parse(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(s.taylor_order, 3);
        assert!(s.outputs.is_empty());
        assert!(!s.compare_oracle);
        assert_eq!(s.beam.amplitude, 1.0);
    }

    #[test]
    fn validation_errors_name_the_field() {
        assert_eq!(broken(&MINIMAL.replace("n_phi = 16", "n_phi = 17")), ("grid.n_phi".into(), 2));
        assert_eq!(broken(&MINIMAL.replace("radius = 2.0", "radius = -2.0")).0, "surface.radius");
        assert_eq!(broken(&MINIMAL.replace("radius = 2.0", "")).0, "radius");
        assert_eq!(broken(&MINIMAL.replace("frequency = 1e10", "frequency = \"x\"")).0, "frequency");
        assert_eq!(broken(&MINIMAL.replace("waist_x = 1.0", "waist_x = 1.0\nwaist_z = 2.0")).0, "waist_z");
        assert_eq!(
            broken(&MINIMAL.replace("polarization = [1.0, 0.0, 0.0]", "polarization = [0.0, 1.0, 0.0]")).0,
            "beam"
        );
        assert_eq!(broken(&(MINIMAL.to_string() + "[bench]\nsizes = [1000]\n")).0, "bench.sizes");
    }

    #[test]
    fn size_split() {
        assert_eq!(split_size(1 << 10), (32, 32));
        assert_eq!(split_size(1 << 11), (64, 32));
        assert_eq!(split_size(1 << 16), (256, 256));
    }
}
