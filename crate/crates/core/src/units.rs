//! Unit-tagged quantities and conversion into the internal system.
//!
//! Internally the pump group velocity, the pump bandwidth and the pump photon
//! energy are all one. Given the physical values of those three scales, a
//! tagged SI quantity converts with
//!
//! * frequency unit `sigma` (rad/s)
//! * time unit `1 / sigma`
//! * length unit `v_p / sigma`
//! * velocity unit `v_p`
//! * energy unit `hbar * omega_p`
//!
//! Bare numbers and the tag `internal` are taken as already dimensionless.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Length,
    Time,
    Frequency,
    Velocity,
    Energy,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Frequency => "angular frequency",
            Dimension::Velocity => "velocity",
            Dimension::Energy => "energy",
        };
        f.write_str(s)
    }
}

/// A recognised unit tag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unit {
    pub tag: &'static str,
    /// `None` for the internal system.
    pub dimension: Option<Dimension>,
    /// Size of one unit in SI.
    pub si_factor: f64,
}

const UNITS: &[Unit] = &[
    Unit { tag: "internal", dimension: None, si_factor: 1.0 },
    Unit { tag: "m", dimension: Some(Dimension::Length), si_factor: 1.0 },
    Unit { tag: "mm", dimension: Some(Dimension::Length), si_factor: 1e-3 },
    Unit { tag: "um", dimension: Some(Dimension::Length), si_factor: 1e-6 },
    Unit { tag: "nm", dimension: Some(Dimension::Length), si_factor: 1e-9 },
    Unit { tag: "s", dimension: Some(Dimension::Time), si_factor: 1.0 },
    Unit { tag: "ms", dimension: Some(Dimension::Time), si_factor: 1e-3 },
    Unit { tag: "us", dimension: Some(Dimension::Time), si_factor: 1e-6 },
    Unit { tag: "ns", dimension: Some(Dimension::Time), si_factor: 1e-9 },
    Unit { tag: "ps", dimension: Some(Dimension::Time), si_factor: 1e-12 },
    Unit { tag: "fs", dimension: Some(Dimension::Time), si_factor: 1e-15 },
    Unit { tag: "rad/s", dimension: Some(Dimension::Frequency), si_factor: 1.0 },
    Unit { tag: "rad/ps", dimension: Some(Dimension::Frequency), si_factor: 1e12 },
    Unit { tag: "rad/fs", dimension: Some(Dimension::Frequency), si_factor: 1e15 },
    Unit { tag: "m/s", dimension: Some(Dimension::Velocity), si_factor: 1.0 },
    Unit { tag: "J", dimension: Some(Dimension::Energy), si_factor: 1.0 },
];

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        UNITS.iter().find(|u| u.tag == s).copied().ok_or_else(|| {
            let known: Vec<&str> = UNITS.iter().map(|u| u.tag).collect();
            format!("unknown unit `{s}`; expected one of {}", known.join(", "))
        })
    }
}

/// A number, optionally tagged with a unit: either `1.5` or
/// `{"value": 1.5, "unit": "mm"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Bare(f64),
    Tagged { value: f64, unit: String },
}

impl Quantity {
    pub fn internal(value: f64) -> Self {
        Quantity::Bare(value)
    }

    pub fn tagged(value: f64, unit: &str) -> Self {
        Quantity::Tagged {
            value,
            unit: unit.to_string(),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Quantity::Bare(v) | Quantity::Tagged { value: v, .. } => *v,
        }
    }

    pub fn unit_tag(&self) -> &str {
        match self {
            Quantity::Bare(_) => "internal",
            Quantity::Tagged { unit, .. } => unit,
        }
    }
}

/// Physical values of the three internal scales, in SI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scales {
    /// Pump bandwidth, rad/s.
    pub sigma: f64,
    /// Pump group velocity, m/s.
    pub v_p: f64,
    /// Pump photon energy, J.
    pub photon_energy: f64,
}

impl Scales {
    pub fn new(sigma: f64, v_p: f64, photon_energy: f64) -> Result<Self> {
        for (name, x) in [("scales.sigma", sigma), ("scales.v_p", v_p), ("scales.photon_energy", photon_energy)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::config(name, format!("must be positive and finite, got {x}")));
            }
        }
        Ok(Self { sigma, v_p, photon_energy })
    }

    /// SI size of one internal unit of `dim`.
    pub fn unit_size(&self, dim: Dimension) -> f64 {
        match dim {
            Dimension::Length => self.v_p / self.sigma,
            Dimension::Time => 1.0 / self.sigma,
            Dimension::Frequency => self.sigma,
            Dimension::Velocity => self.v_p,
            Dimension::Energy => self.photon_energy,
        }
    }
}

/// One conversion applied at ingestion, kept for the run report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conversion {
    pub field: String,
    pub value: f64,
    pub unit: String,
    pub internal: f64,
}

/// Converts quantities against optional scales and logs every SI conversion.
#[derive(Clone, Debug, Default)]
pub struct Converter {
    scales: Option<Scales>,
    log: Vec<Conversion>,
}

impl Converter {
    pub fn new(scales: Option<Scales>) -> Self {
        Self { scales, log: Vec::new() }
    }

    pub fn scales(&self) -> Option<Scales> {
        self.scales
    }

    pub fn convert(&mut self, q: &Quantity, dim: Dimension, field: &str) -> Result<f64> {
        let value = q.value();
        if !value.is_finite() {
            return Err(Error::config(field, format!("non-finite value {value}")));
        }
        let unit: Unit = q.unit_tag().parse().map_err(|e: String| Error::config(field, e))?;
        let Some(unit_dim) = unit.dimension else {
            return Ok(value);
        };
        if unit_dim != dim {
            return Err(Error::config(field, format!("expected a {dim}, but `{}` is a {unit_dim}", unit.tag)));
        }
        let scales = self.scales.ok_or_else(|| {
            Error::config(
                field,
                format!("unit `{}` needs the physical scales (`scales.sigma`, `scales.v_p`, `scales.photon_energy`)", unit.tag),
            )
        })?;
        let internal = value * unit.si_factor / scales.unit_size(dim);
        self.log.push(Conversion {
            field: field.to_string(),
            value,
            unit: unit.tag.to_string(),
            internal,
        });
        Ok(internal)
    }

    pub fn into_log(self) -> Vec<Conversion> {
        self.log
    }
}

/// Reads a scale that must carry an SI unit of the given dimension.
pub fn si_value(q: &Quantity, dim: Dimension, field: &str) -> Result<f64> {
    let unit: Unit = q.unit_tag().parse().map_err(|e: String| Error::config(field, e))?;
    if unit.dimension != Some(dim) {
        return Err(Error::config(field, format!("needs an SI {dim} unit, got `{}`", unit.tag)));
    }
    Ok(q.value() * unit.si_factor)
}
