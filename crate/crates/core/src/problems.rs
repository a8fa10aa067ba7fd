//! Manufactured solutions of `-Δu = f` on the unit cube.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, VemError};
use crate::mesh::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSolution {
    /// `sin(πx) sin(πy) sin(πz)`, vanishing on the cube boundary.
    Sine,
    /// `1 + x + y + z`, harmonic.
    Linear,
    Zero,
}

impl ExactSolution {
    pub fn value(self, x: &Point3) -> f64 {
        match self {
            ExactSolution::Sine => (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin(),
            ExactSolution::Linear => 1.0 + x[0] + x[1] + x[2],
            ExactSolution::Zero => 0.0,
        }
    }

    pub fn gradient(self, x: &Point3) -> [f64; 3] {
        match self {
            ExactSolution::Sine => {
                let (s, c): (Vec<f64>, Vec<f64>) = x.iter().map(|v| ((PI * v).sin(), (PI * v).cos())).unzip();
                [PI * c[0] * s[1] * s[2], PI * s[0] * c[1] * s[2], PI * s[0] * s[1] * c[2]]
            }
            ExactSolution::Linear => [1.0; 3],
            ExactSolution::Zero => [0.0; 3],
        }
    }

    /// `f = -Δu`.
    pub fn forcing(self, x: &Point3) -> f64 {
        match self {
            ExactSolution::Sine => 3.0 * PI * PI * self.value(x),
            ExactSolution::Linear | ExactSolution::Zero => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExactSolution::Sine => "u1",
            ExactSolution::Linear => "u2",
            ExactSolution::Zero => "zero",
        }
    }
}

impl fmt::Display for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExactSolution {
    type Err = VemError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u1" | "sine" => Ok(ExactSolution::Sine),
            "u2" | "linear" => Ok(ExactSolution::Linear),
            "zero" => Ok(ExactSolution::Zero),
            _ => Err(VemError::InvalidArgument(format!("unknown solution '{s}'"))),
        }
    }
}
