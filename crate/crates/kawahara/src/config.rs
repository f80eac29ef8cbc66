//! Problem files: a strict JSON schema and its materialization.
//!
//! Unknown keys are rejected everywhere — a silently ignored misspelling of
//! `g0` would invalidate every hypothesis check downstream. Sampled data
//! are given as arrays, closed-form data by preset name. The file is kept
//! verbatim through a run so reports can echo it and saving a loaded file
//! reproduces it byte for byte.

use serde::{Deserialize, Serialize};

use crate::error::{KawaError, Result};
use crate::grid::{Domain, SpaceTimeGrid};
use crate::presets::{space_preset, time_preset};
use crate::problem::{Coefficients, Problem};
use crate::signal::{NormExponent, TimeSignal};
use crate::source::{preset_source, SourceShape};
use crate::weight::preset_weight;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub alpha: f64,
    pub beta: f64,
    pub nonlinearity_power: u8,
    pub domain: DomainSection,
    pub grid: GridSection,
    pub u0: DataSection,
    pub mu: DataSection,
    pub nu: DataSection,
    pub g: SourceSection,
    pub omega: WeightSection,
    pub phi: DataSection,
    pub p: ExponentValue,
    pub g0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: String,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left_cutoff: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub h: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

/// Either a named preset (with optional amplitude) or explicit samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    pub preset: String,
}

/// `p` is a number at least two, or the string `"inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentValue {
    Number(f64),
    Text(String),
}

impl ExponentValue {
    fn materialize(&self) -> Result<NormExponent> {
        match self {
            ExponentValue::Number(v) => NormExponent::finite(*v),
            ExponentValue::Text(s) if s == "inf" => Ok(NormExponent::Infinity),
            ExponentValue::Text(s) => Err(KawaError::Parse(format!(
                "norm exponent must be a number >= 2 or \"inf\", got \"{s}\""
            ))),
        }
    }
}

impl DataSection {
    fn materialize_time(&self, name: &str, n_time: usize, tau: f64) -> Result<TimeSignal> {
        match (&self.preset, &self.samples) {
            (Some(p), None) => time_preset(p, self.amplitude.unwrap_or(1.0), n_time, tau),
            (None, Some(samples)) => {
                if samples.len() != n_time + 1 {
                    return Err(KawaError::Parse(format!(
                        "{name}: expected {} samples, got {}",
                        n_time + 1,
                        samples.len()
                    )));
                }
                if self.amplitude.is_some() {
                    return Err(KawaError::Parse(format!(
                        "{name}: amplitude applies to presets, not samples"
                    )));
                }
                Ok(TimeSignal::new(samples.clone(), tau))
            }
            _ => Err(KawaError::Parse(format!(
                "{name}: give exactly one of `preset` or `samples`"
            ))),
        }
    }

    fn materialize_space(&self, name: &str, grid: &SpaceTimeGrid) -> Result<Vec<f64>> {
        match (&self.preset, &self.samples) {
            (Some(p), None) => space_preset(p, self.amplitude.unwrap_or(1.0), grid),
            (None, Some(samples)) => {
                if samples.len() != grid.n_space + 1 {
                    return Err(KawaError::Parse(format!(
                        "{name}: expected {} samples, got {}",
                        grid.n_space + 1,
                        samples.len()
                    )));
                }
                Ok(samples.clone())
            }
            _ => Err(KawaError::Parse(format!(
                "{name}: give exactly one of `preset` or `samples`"
            ))),
        }
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KawaError::Parse(e.to_string()))
    }

    /// Canonical serialization: pretty-printed, stable field order, one
    /// trailing newline. Saving what was loaded is byte-identical.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schema serialization");
        s.push('\n');
        s
    }

    /// Build the runnable problem.
    pub fn materialize(&self) -> Result<Problem> {
        let coefficients = Coefficients::new(self.alpha, self.beta, self.nonlinearity_power)?;
        let domain = match self.domain.kind.as_str() {
            "right_half_line" => {
                if self.domain.left_cutoff.is_some() {
                    return Err(KawaError::Parse(
                        "left_cutoff applies only to the real_line domain".into(),
                    ));
                }
                Domain::right_half_line(self.domain.radius)
            }
            "real_line" => {
                let left = self.domain.left_cutoff.ok_or_else(|| {
                    KawaError::Parse("real_line domains need a left_cutoff".into())
                })?;
                Domain::real_line(left, self.domain.radius)
            }
            other => {
                return Err(KawaError::Parse(format!(
                    "unknown domain kind '{other}' (expected right_half_line or real_line)"
                )))
            }
        };
        domain.validate()?;

        let length = domain.length();
        let n_space = (length / self.grid.h).round() as usize;
        if n_space == 0 || (n_space as f64 * self.grid.h - length).abs() > 1e-9 * length {
            return Err(KawaError::Parse(format!(
                "spatial step {} does not tile the domain of length {length}",
                self.grid.h
            )));
        }
        let n_time = (self.grid.horizon / self.grid.tau).round() as usize;
        if n_time == 0
            || (n_time as f64 * self.grid.tau - self.grid.horizon).abs()
                > 1e-9 * self.grid.horizon
        {
            return Err(KawaError::Parse(format!(
                "time step {} does not tile the horizon {}",
                self.grid.tau, self.grid.horizon
            )));
        }
        let grid = SpaceTimeGrid::new(&domain, n_space, n_time, self.grid.horizon)?;

        let u0 = self.u0.materialize_space("u0", &grid)?;
        let mu = self.mu.materialize_time("mu", n_time, grid.tau)?;
        let nu = self.nu.materialize_time("nu", n_time, grid.tau)?;
        let phi = self.phi.materialize_time("phi", n_time, grid.tau)?;
        let g = match (&self.g.preset, &self.g.samples) {
            (Some(p), None) => preset_source(p, &grid)?,
            (None, Some(rows)) => {
                if rows.len() != n_time + 1 || rows.iter().any(|r| r.len() != n_space + 1) {
                    return Err(KawaError::Parse(format!(
                        "g: expected {} rows of {} samples",
                        n_time + 1,
                        n_space + 1
                    )));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                let table = ndarray::Array2::from_shape_vec((n_time + 1, n_space + 1), flat)
                    .expect("shape");
                SourceShape::from_samples(&grid, table)?
            }
            _ => {
                return Err(KawaError::Parse(
                    "g: give exactly one of `preset` or `samples`".into(),
                ))
            }
        };
        let omega = preset_weight(&self.omega.preset, &grid)?;
        let p = self.p.materialize()?;
        if !(self.g0 > 0.0) || !self.g0.is_finite() {
            return Err(KawaError::Parse(format!(
                "g0 must be a positive number, got {}",
                self.g0
            )));
        }

        Ok(Problem {
            coefficients,
            domain,
            grid,
            u0,
            mu,
            nu,
            g,
            omega,
            phi,
            p,
            g0: self.g0,
        })
    }

    /// The canonical control experiment as a problem file.
    pub fn canonical() -> Self {
        ProblemFile {
            alpha: 1.0,
            beta: 1.0,
            nonlinearity_power: 1,
            domain: DomainSection {
                kind: "right_half_line".into(),
                radius: 40.0,
                left_cutoff: None,
            },
            grid: GridSection {
                h: 0.05,
                tau: 0.0025,
                horizon: 1.0,
            },
            u0: DataSection {
                preset: Some("zero".into()),
                amplitude: None,
                samples: None,
            },
            mu: DataSection {
                preset: Some("zero".into()),
                amplitude: None,
                samples: None,
            },
            nu: DataSection {
                preset: Some("zero".into()),
                amplitude: None,
                samples: None,
            },
            g: SourceSection {
                preset: Some("exp_decay".into()),
                samples: None,
            },
            omega: WeightSection {
                preset: "cubic_exp".into(),
            },
            phi: DataSection {
                preset: Some("ramp_exp".into()),
                amplitude: Some(0.01),
                samples: None,
            },
            p: ExponentValue::Number(2.0),
            g0: 0.3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_file_materializes_and_validates() {
        let file = ProblemFile::canonical();
        let pb = file.materialize().unwrap();
        let report = pb.validate();
        assert!(report.passed, "{:?}", report.checks);
        assert_eq!(pb.grid.n_space, 800);
        assert_eq!(pb.grid.n_time, 400);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let file = ProblemFile::canonical();
        let text = file.to_json();
        let reloaded = ProblemFile::from_json(&text).unwrap();
        assert_eq!(text, reloaded.to_json());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&ProblemFile::canonical().to_json()).unwrap();
        v.as_object_mut()
            .unwrap()
            .insert("gO".into(), serde_json::json!(0.5));
        let text = serde_json::to_string(&v).unwrap();
        let err = ProblemFile::from_json(&text).unwrap_err();
        assert!(matches!(err, KawaError::Parse(_)), "{err}");
    }

    #[test]
    fn non_numeric_alpha_is_a_parse_error() {
        let text = ProblemFile::canonical().to_json().replace(
            "\"alpha\": 1.0",
            "\"alpha\": \"NaN\"",
        );
        let err = ProblemFile::from_json(&text).unwrap_err();
        assert!(matches!(err, KawaError::Parse(_)));
    }

    #[test]
    fn preset_and_samples_are_mutually_exclusive() {
        let mut file = ProblemFile::canonical();
        file.phi.samples = Some(vec![0.0; 401]);
        assert!(file.materialize().is_err());
        file.phi.preset = None;
        file.phi.amplitude = None;
        assert!(file.materialize().is_ok());
    }

    #[test]
    fn infinity_exponent_parses() {
        let text = ProblemFile::canonical()
            .to_json()
            .replace("\"p\": 2.0", "\"p\": \"inf\"");
        let file = ProblemFile::from_json(&text).unwrap();
        let pb = file.materialize().unwrap();
        assert_eq!(pb.p, NormExponent::Infinity);
    }

    #[test]
    fn misfit_grid_step_rejected() {
        let mut file = ProblemFile::canonical();
        file.grid.h = 0.7; // 40 / 0.7 is not an integer
        assert!(matches!(file.materialize(), Err(KawaError::Parse(_))));
    }
}
