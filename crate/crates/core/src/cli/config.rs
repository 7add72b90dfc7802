//! JSON run configuration.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::certificate::{Gate, LyapunovWeights};
use crate::error::{Error, Result};
use crate::params::{BeamParameters, BoundaryLayout, ParameterField, DEFAULT_GRID};
use crate::simulate::{IcComponent, InitialCondition, IntegrationOptions};
use crate::weight_search::SearchConfig;

/// A number, or a string such as `"2pi"`, `"-pi/2"`, `"3*pi/4"` or `"0.5"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Expr(s) => parse_pi_expr(s),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

fn parse_number(s: &str, whole: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidField(format!("cannot parse `{whole}` as a number or pi expression")))
}

/// `[sign] [coefficient [*]] pi [/ denominator]`, or a plain number.
pub fn parse_pi_expr(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let s = s.replace('π', "pi");
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let (num, den) = match rest.split_once('/') {
        Some((n, d)) => (n, Some(parse_number(d, text)?)),
        None => (rest, None),
    };
    let numerator = match num.split_once("pi") {
        Some((coef, tail)) => {
            if !tail.is_empty() {
                return Err(Error::InvalidField(format!("unexpected `{tail}` in `{text}`")));
            }
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let c = if coef.is_empty() { 1.0 } else { parse_number(coef, text)? };
            c * PI
        }
        None => parse_number(num, text)?,
    };
    let value = sign * numerator / den.unwrap_or(1.0);
    if !value.is_finite() {
        return Err(Error::InvalidField(format!("`{text}` is not finite")));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    Sinusoid {
        base: f64,
        amplitude: f64,
        frequency: Scalar,
        phase: Scalar,
    },
    Tabulated {
        values: Vec<f64>,
    },
}

impl FieldSpec {
    pub fn to_field(&self, length: f64) -> Result<ParameterField> {
        match self {
            FieldSpec::Constant { value } => Ok(ParameterField::constant(*value, length)),
            FieldSpec::Sinusoid {
                base,
                amplitude,
                frequency,
                phase,
            } => Ok(ParameterField::sinusoid(
                *base,
                *amplitude,
                frequency.value()?,
                phase.value()?,
                length,
            )),
            FieldSpec::Tabulated { values } => ParameterField::tabulated(values.clone(), length),
        }
    }

    fn normalized(&self) -> Result<Self> {
        Ok(match self {
            FieldSpec::Sinusoid {
                base,
                amplitude,
                frequency,
                phase,
            } => FieldSpec::Sinusoid {
                base: *base,
                amplitude: *amplitude,
                frequency: frequency.value()?.into(),
                phase: phase.value()?.into(),
            },
            other => other.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub length: f64,
    pub rho: FieldSpec,
    pub i_rho: FieldSpec,
    pub k_shear: FieldSpec,
    pub ei: FieldSpec,
    pub gamma: FieldSpec,
    pub delta: FieldSpec,
    #[serde(default)]
    pub layout: BoundaryLayout,
}

impl BeamSpec {
    /// Validated parameters in physical coordinates.
    pub fn to_parameters(&self) -> Result<BeamParameters> {
        let l = self.length;
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameters(format!("length must be positive, got {l}")));
        }
        BeamParameters {
            rho: self.rho.to_field(l)?,
            i_rho: self.i_rho.to_field(l)?,
            k_shear: self.k_shear.to_field(l)?,
            ei: self.ei.to_field(l)?,
            gamma: self.gamma.to_field(l)?,
            delta: self.delta.to_field(l)?,
            length: l,
        }
        .validated()
    }

    fn normalized(&self) -> Result<Self> {
        Ok(BeamSpec {
            length: self.length,
            rho: self.rho.normalized()?,
            i_rho: self.i_rho.normalized()?,
            k_shear: self.k_shear.normalized()?,
            ei: self.ei.normalized()?,
            gamma: self.gamma.normalized()?,
            delta: self.delta.normalized()?,
            layout: self.layout,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSpec {
    pub n_elements: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        DiscretizationSpec {
            n_elements: 50,
            dt: 1e-3,
            t_end: 50.0,
            record_every: 1,
        }
    }
}

impl DiscretizationSpec {
    pub fn integration_options(&self) -> IntegrationOptions {
        IntegrationOptions {
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcSpec {
    Zero,
    /// `scale · (1 − cos(2πξ/L))`
    CosineBump { scale: f64 },
    /// Samples on a uniform grid over `[0, L]`.
    Tabulated { values: Vec<f64> },
}

impl IcSpec {
    fn to_component(&self, length: f64) -> Result<IcComponent> {
        Ok(match self {
            IcSpec::Zero => IcComponent::Zero,
            IcSpec::CosineBump { scale } => IcComponent::CosineBump { scale: *scale },
            IcSpec::Tabulated { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidField("initial condition samples must be finite".into()));
                }
                IcComponent::Tabulated(ParameterField::tabulated(values.clone(), length)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditionSpec {
    pub z1: IcSpec,
    pub z2: IcSpec,
    pub z3: IcSpec,
    pub z4: IcSpec,
}

impl Default for InitialConditionSpec {
    fn default() -> Self {
        InitialConditionSpec {
            z1: IcSpec::Zero,
            z2: IcSpec::Zero,
            z3: IcSpec::CosineBump { scale: 0.5 },
            z4: IcSpec::CosineBump { scale: 1.0 },
        }
    }
}

impl InitialConditionSpec {
    pub fn to_initial_condition(&self, length: f64) -> Result<InitialCondition> {
        Ok(InitialCondition {
            components: [
                self.z1.to_component(length)?,
                self.z2.to_component(length)?,
                self.z3.to_component(length)?,
                self.z4.to_component(length)?,
            ],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Also write `system.txt` with the dense `J`, `R`, `Q`.
    #[serde(default)]
    pub dump_system: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_directory(),
            dump_system: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub beam: BeamSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<LyapunovWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub initial_condition: InitialConditionSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub gate: Gate,
    /// Grid intervals for the coefficient infima.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

impl RunConfig {
    /// Parses a JSON document. Syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Precondition(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Same configuration with every pi expression replaced by its value.
    pub fn normalized(&self) -> Result<Self> {
        Ok(RunConfig {
            beam: self.beam.normalized()?,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.beam.to_parameters()?;
        if let Some(w) = &self.weights {
            w.validate()?;
        }
        if let Some(s) = &self.search {
            s.validate()?;
        }
        let d = &self.discretization;
        if d.n_elements < 2 {
            return Err(Error::Precondition(format!(
                "discretization.n_elements must be at least 2, got {}",
                d.n_elements
            )));
        }
        if !(d.dt > 0.0 && d.t_end >= 0.0 && d.dt.is_finite() && d.t_end.is_finite()) {
            return Err(Error::Precondition(
                "discretization.dt must be positive and t_end non-negative".into(),
            ));
        }
        if d.record_every < 1 {
            return Err(Error::Precondition("discretization.record_every must be at least 1".into()));
        }
        if self.grid < 16 {
            return Err(Error::Precondition(format!("grid must be at least 16, got {}", self.grid)));
        }
        self.initial_condition.to_initial_condition(self.beam.length)?;
        Ok(())
    }

    /// Search settings with the run-level gate and grid applied. Top-level
    /// `weights` become the starting point unless `search.initial` is set.
    pub fn search_config(&self) -> SearchConfig {
        let base = self.search.clone().unwrap_or_default();
        SearchConfig {
            gate: self.gate,
            n_grid: self.grid,
            initial: base.initial.or(self.weights),
            ..base
        }
    }
}
