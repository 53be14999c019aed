//! Run configuration: a flat, sectioned `key = value` text format.
//!
//! Units ride in the key names (`gamma0_MHz`, `write_us`), full-line
//! comments start with `#`, and unknown sections or keys are rejected
//! with their line number. Parsing materializes every default, and
//! [`RunConfig::echo`] serializes the fully-resolved configuration in
//! canonical order; re-running from an echoed config reproduces the run.

use std::collections::HashSet;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::floquet::SpectrumOptions;
use crate::memory::{MemoryOptions, PulseSequence};
use crate::params::{FieldDrive, MagneticEnvironment, ModelTag, Polarization, SystemParams};
use crate::quadrature::VelocityQuadratureSpec;
use crate::units;

/// Fully-resolved run configuration in boundary units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // [system]
    pub gamma0_mhz: f64,
    pub gamma_t_khz: f64,
    pub gamma_opt_mhz: f64,
    pub doppler_hwhm_mhz: f64,
    pub omega_c_mhz: f64,
    pub omega_p_khz: f64,
    // [drive]
    pub polarization: Polarization,
    pub coupling_detuning_mhz: f64,
    // [magnetic]
    pub b0_g: f64,
    pub db_dz_mg_cm: f64,
    pub gradients_mg_cm: Vec<f64>,
    pub cell_length_cm: f64,
    pub zeeman_ground_mhz_g: f64,
    pub zeeman_excited_mhz_g: f64,
    pub include_excited_zeeman: bool,
    // [grid]
    pub delta_min_mhz: f64,
    pub delta_max_mhz: f64,
    pub delta_points: usize,
    // [quadrature]
    pub velocity_nodes_per_panel: usize,
    pub velocity_span_hwhm: f64,
    pub velocity_core_widths: f64,
    pub velocity_panel_ratio: f64,
    pub z_nodes: usize,
    // [sequence]
    pub write_us: f64,
    pub read_us: f64,
    pub ramp_us: f64,
    pub storage_times_us: Vec<f64>,
    pub write_pulses: bool,
    // [run]
    pub model: ModelTag,
    pub linear_transmission: f64,
    pub workers: usize,
    pub out_dir: String,
    pub reproducible: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma0_mhz: 5.2,
            gamma_t_khz: 40.0,
            gamma_opt_mhz: 2.6,
            doppler_hwhm_mhz: 190.0,
            omega_c_mhz: 0.4,
            omega_p_khz: 70.0,
            polarization: Polarization::LinPerpLin,
            coupling_detuning_mhz: 0.0,
            b0_g: 0.9,
            db_dz_mg_cm: 0.0,
            gradients_mg_cm: vec![0.0],
            cell_length_cm: MagneticEnvironment::DEFAULT_CELL_LENGTH_CM,
            zeeman_ground_mhz_g: MagneticEnvironment::DEFAULT_ZEEMAN_GROUND_MHZ_PER_G,
            zeeman_excited_mhz_g: MagneticEnvironment::DEFAULT_ZEEMAN_EXCITED_MHZ_PER_G,
            include_excited_zeeman: true,
            delta_min_mhz: -1.5,
            delta_max_mhz: 1.5,
            delta_points: 301,
            velocity_nodes_per_panel: 16,
            velocity_span_hwhm: 3.5,
            velocity_core_widths: 4.0,
            velocity_panel_ratio: 3.0,
            z_nodes: 65,
            write_us: 100.0,
            read_us: 6.0,
            ramp_us: 0.0,
            // The default log grid, rounded to 0.1 ns so the canonical
            // echo reproduces it exactly.
            storage_times_us: crate::memory::default_storage_grid()
                .iter()
                .map(|&t| (units::to_us(t) * 1.0e4).round() / 1.0e4)
                .collect(),
            write_pulses: true,
            model: ModelTag::Floquet,
            linear_transmission: 0.27,
            workers: 0,
            out_dir: "out".to_string(),
            reproducible: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut gamma_opt_set = false;
        let mut section = String::new();
        let mut seen = HashSet::new();

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                match section.as_str() {
                    "system" | "drive" | "magnetic" | "grid" | "quadrature" | "sequence"
                    | "run" => {}
                    other => {
                        return Err(Error::Parse {
                            path: path.to_string(),
                            line: lineno,
                            message: format!("unknown section [{other}]"),
                        })
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let qualified = format!("{section}.{key}");
            if !seen.insert(qualified.clone()) {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: format!("duplicate key '{key}' in [{section}]"),
                });
            }

            let err = |message: String| Error::Parse {
                path: path.to_string(),
                line: lineno,
                message,
            };
            let f = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| err(format!("'{v}' is not a number")))
            };
            let u = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|_| err(format!("'{v}' is not a nonnegative integer")))
            };
            let b = |v: &str| -> Result<bool> {
                match v {
                    "true" => Ok(true),
                    "false" => Ok(false),
                    _ => Err(err(format!("'{v}' is not true/false"))),
                }
            };
            let list = |v: &str| -> Result<Vec<f64>> {
                if v.is_empty() {
                    return Ok(Vec::new());
                }
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| err(format!("'{}' is not a number", s.trim())))
                    })
                    .collect()
            };

            match qualified.as_str() {
                "system.gamma0_MHz" => cfg.gamma0_mhz = f(value)?,
                "system.gamma_t_kHz" => cfg.gamma_t_khz = f(value)?,
                "system.gamma_opt_MHz" => {
                    cfg.gamma_opt_mhz = f(value)?;
                    gamma_opt_set = true;
                }
                "system.doppler_hwhm_MHz" => cfg.doppler_hwhm_mhz = f(value)?,
                "system.omega_c_MHz" => cfg.omega_c_mhz = f(value)?,
                "system.omega_p_kHz" => cfg.omega_p_khz = f(value)?,
                "drive.polarization" => cfg.polarization = value.parse()?,
                "drive.coupling_detuning_MHz" => cfg.coupling_detuning_mhz = f(value)?,
                "magnetic.b0_G" => cfg.b0_g = f(value)?,
                "magnetic.db_dz_mG_cm" => cfg.db_dz_mg_cm = f(value)?,
                "magnetic.gradients_mG_cm" => cfg.gradients_mg_cm = list(value)?,
                "magnetic.cell_length_cm" => cfg.cell_length_cm = f(value)?,
                "magnetic.zeeman_ground_MHz_G" => cfg.zeeman_ground_mhz_g = f(value)?,
                "magnetic.zeeman_excited_MHz_G" => cfg.zeeman_excited_mhz_g = f(value)?,
                "magnetic.include_excited_zeeman" => cfg.include_excited_zeeman = b(value)?,
                "grid.delta_min_MHz" => cfg.delta_min_mhz = f(value)?,
                "grid.delta_max_MHz" => cfg.delta_max_mhz = f(value)?,
                "grid.delta_points" => cfg.delta_points = u(value)?,
                "quadrature.velocity_nodes_per_panel" => {
                    cfg.velocity_nodes_per_panel = u(value)?
                }
                "quadrature.velocity_span_hwhm" => cfg.velocity_span_hwhm = f(value)?,
                "quadrature.velocity_core_widths" => cfg.velocity_core_widths = f(value)?,
                "quadrature.velocity_panel_ratio" => cfg.velocity_panel_ratio = f(value)?,
                "quadrature.z_nodes" => cfg.z_nodes = u(value)?,
                "sequence.write_us" => cfg.write_us = f(value)?,
                "sequence.read_us" => cfg.read_us = f(value)?,
                "sequence.ramp_us" => cfg.ramp_us = f(value)?,
                "sequence.storage_times_us" => cfg.storage_times_us = list(value)?,
                "sequence.write_pulses" => cfg.write_pulses = b(value)?,
                "run.model" => cfg.model = value.parse()?,
                "run.linear_transmission" => cfg.linear_transmission = f(value)?,
                "run.workers" => cfg.workers = u(value)?,
                "run.out_dir" => cfg.out_dir = value.to_string(),
                "run.reproducible" => cfg.reproducible = b(value)?,
                _ => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        message: format!("unknown key '{key}' in section [{section}]"),
                    })
                }
            }
        }
        if !gamma_opt_set {
            cfg.gamma_opt_mhz = cfg.gamma0_mhz / 2.0;
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Canonical serialization with every key present. Floats use the
    /// shortest exact representation, so parse(echo(c)) == c.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let fl = |v: f64| format!("{v}");
        let lst = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        s.push_str("[system]\n");
        s.push_str(&format!("gamma0_MHz = {}\n", fl(self.gamma0_mhz)));
        s.push_str(&format!("gamma_t_kHz = {}\n", fl(self.gamma_t_khz)));
        s.push_str(&format!("gamma_opt_MHz = {}\n", fl(self.gamma_opt_mhz)));
        s.push_str(&format!("doppler_hwhm_MHz = {}\n", fl(self.doppler_hwhm_mhz)));
        s.push_str(&format!("omega_c_MHz = {}\n", fl(self.omega_c_mhz)));
        s.push_str(&format!("omega_p_kHz = {}\n", fl(self.omega_p_khz)));
        s.push_str("\n[drive]\n");
        s.push_str(&format!("polarization = {}\n", self.polarization.tag()));
        s.push_str(&format!(
            "coupling_detuning_MHz = {}\n",
            fl(self.coupling_detuning_mhz)
        ));
        s.push_str("\n[magnetic]\n");
        s.push_str(&format!("b0_G = {}\n", fl(self.b0_g)));
        s.push_str(&format!("db_dz_mG_cm = {}\n", fl(self.db_dz_mg_cm)));
        s.push_str(&format!(
            "gradients_mG_cm = {}\n",
            lst(&self.gradients_mg_cm)
        ));
        s.push_str(&format!("cell_length_cm = {}\n", fl(self.cell_length_cm)));
        s.push_str(&format!(
            "zeeman_ground_MHz_G = {}\n",
            fl(self.zeeman_ground_mhz_g)
        ));
        s.push_str(&format!(
            "zeeman_excited_MHz_G = {}\n",
            fl(self.zeeman_excited_mhz_g)
        ));
        s.push_str(&format!(
            "include_excited_zeeman = {}\n",
            self.include_excited_zeeman
        ));
        s.push_str("\n[grid]\n");
        s.push_str(&format!("delta_min_MHz = {}\n", fl(self.delta_min_mhz)));
        s.push_str(&format!("delta_max_MHz = {}\n", fl(self.delta_max_mhz)));
        s.push_str(&format!("delta_points = {}\n", self.delta_points));
        s.push_str("\n[quadrature]\n");
        s.push_str(&format!(
            "velocity_nodes_per_panel = {}\n",
            self.velocity_nodes_per_panel
        ));
        s.push_str(&format!(
            "velocity_span_hwhm = {}\n",
            fl(self.velocity_span_hwhm)
        ));
        s.push_str(&format!(
            "velocity_core_widths = {}\n",
            fl(self.velocity_core_widths)
        ));
        s.push_str(&format!(
            "velocity_panel_ratio = {}\n",
            fl(self.velocity_panel_ratio)
        ));
        s.push_str(&format!("z_nodes = {}\n", self.z_nodes));
        s.push_str("\n[sequence]\n");
        s.push_str(&format!("write_us = {}\n", fl(self.write_us)));
        s.push_str(&format!("read_us = {}\n", fl(self.read_us)));
        s.push_str(&format!("ramp_us = {}\n", fl(self.ramp_us)));
        s.push_str(&format!(
            "storage_times_us = {}\n",
            lst(&self.storage_times_us)
        ));
        s.push_str(&format!("write_pulses = {}\n", self.write_pulses));
        s.push_str("\n[run]\n");
        s.push_str(&format!("model = {}\n", self.model.tag()));
        s.push_str(&format!(
            "linear_transmission = {}\n",
            fl(self.linear_transmission)
        ));
        s.push_str(&format!("workers = {}\n", self.workers));
        s.push_str(&format!("out_dir = {}\n", self.out_dir));
        s.push_str(&format!("reproducible = {}\n", self.reproducible));
        s
    }

    /// Hex digest identifying the physics inputs: the canonical echo
    /// minus the operational keys (output directory, worker count,
    /// timestamp suppression), which cannot change any computed value.
    pub fn hash(&self) -> String {
        let physics: String = self
            .echo()
            .lines()
            .filter(|l| {
                !(l.starts_with("out_dir ")
                    || l.starts_with("workers ")
                    || l.starts_with("reproducible "))
            })
            .collect::<Vec<_>>()
            .join("\n");
        let mut hasher = Sha256::new();
        hasher.update(physics.as_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    // -- typed views ------------------------------------------------------

    pub fn system_params(&self) -> SystemParams {
        SystemParams::new(
            units::mhz(self.gamma0_mhz),
            units::khz(self.gamma_t_khz),
            units::mhz(self.doppler_hwhm_mhz),
            units::mhz(self.omega_c_mhz),
            units::khz(self.omega_p_khz),
        )
        .with_gamma_opt(units::mhz(self.gamma_opt_mhz))
    }

    pub fn field_drive(&self) -> FieldDrive {
        FieldDrive::from_rabi(&self.system_params(), self.polarization, 0.0)
            .with_coupling_detuning(units::mhz(self.coupling_detuning_mhz))
    }

    pub fn magnetic_environment(&self, gradient_mg_cm: f64) -> MagneticEnvironment {
        MagneticEnvironment {
            b0: self.b0_g,
            db_dz: 1.0e-3 * gradient_mg_cm,
            cell_length: self.cell_length_cm,
            zeeman_ground: self.zeeman_ground_mhz_g,
            zeeman_excited: self.zeeman_excited_mhz_g,
        }
    }

    pub fn delta_grid(&self) -> Result<Vec<f64>> {
        if self.delta_points == 0 {
            return Err(Error::validation("empty_delta_grid", "delta_points = 0"));
        }
        if self.delta_points == 1 {
            return Ok(vec![units::mhz(self.delta_min_mhz)]);
        }
        if self.delta_max_mhz <= self.delta_min_mhz {
            return Err(Error::validation(
                "trace_grid_not_increasing",
                format!(
                    "delta_max_MHz = {} must exceed delta_min_MHz = {}",
                    self.delta_max_mhz, self.delta_min_mhz
                ),
            ));
        }
        let n = self.delta_points;
        Ok((0..n)
            .map(|k| {
                units::mhz(
                    self.delta_min_mhz
                        + (self.delta_max_mhz - self.delta_min_mhz) * k as f64 / (n - 1) as f64,
                )
            })
            .collect())
    }

    pub fn velocity_spec(&self) -> VelocityQuadratureSpec {
        VelocityQuadratureSpec {
            nodes_per_panel: self.velocity_nodes_per_panel,
            span_hwhm: self.velocity_span_hwhm,
            core_widths: self.velocity_core_widths,
            panel_ratio: self.velocity_panel_ratio,
        }
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            velocity: self.velocity_spec(),
            z_nodes: self.z_nodes,
            include_excited_zeeman: self.include_excited_zeeman,
            linear_transmission: self.linear_transmission,
        }
    }

    pub fn pulse_sequence(&self, storage_time_s: f64) -> PulseSequence {
        PulseSequence {
            write_duration: units::us(self.write_us),
            storage_time: storage_time_s,
            read_duration: units::us(self.read_us),
            ramp: units::us(self.ramp_us),
        }
    }

    pub fn memory_options(&self) -> MemoryOptions {
        MemoryOptions {
            z_nodes: self.z_nodes,
            include_excited_zeeman: self.include_excited_zeeman,
            velocity: self.velocity_spec(),
            ..MemoryOptions::default()
        }
    }

    pub fn storage_times_s(&self) -> Vec<f64> {
        self.storage_times_us.iter().map(|&t| units::us(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_echo() {
        let cfg = RunConfig::default();
        let echoed = cfg.echo();
        let reparsed = RunConfig::parse(&echoed, "<echo>").unwrap();
        assert_eq!(cfg, reparsed);
        assert_eq!(cfg.hash(), reparsed.hash());
    }

    #[test]
    fn unknown_key_rejected_with_line_number() {
        let text = "[system]\ngamma0_MHz = 5.2\nbogus_key = 1\n";
        match RunConfig::parse(text, "test.cfg") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("bogus_key"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_rejected() {
        let text = "[systems]\ngamma0_MHz = 5.2\n";
        assert!(RunConfig::parse(text, "test.cfg").is_err());
    }

    #[test]
    fn gamma_opt_defaults_to_half_gamma0() {
        let text = "[system]\ngamma0_MHz = 6.0\n";
        let cfg = RunConfig::parse(text, "t").unwrap();
        assert_eq!(cfg.gamma_opt_mhz, 3.0);
        let text2 = "[system]\ngamma0_MHz = 6.0\ngamma_opt_MHz = 2.0\n";
        let cfg2 = RunConfig::parse(text2, "t").unwrap();
        assert_eq!(cfg2.gamma_opt_mhz, 2.0);
    }

    #[test]
    fn empty_delta_grid_is_validation_error() {
        let mut cfg = RunConfig::default();
        cfg.delta_points = 0;
        assert!(cfg.delta_grid().is_err());
    }

    #[test]
    fn hash_tracks_physics_changes() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.b0_g = 1.0;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn lists_parse_with_spaces() {
        let text = "[magnetic]\ngradients_mG_cm = 0, 15, 30 ,45,60\n";
        let cfg = RunConfig::parse(text, "t").unwrap();
        assert_eq!(cfg.gradients_mg_cm, vec![0.0, 15.0, 30.0, 45.0, 60.0]);
    }
}
