//! Flat key-value scenario files.
//!
//! One `key = value` per line, `#` starts a comment, dotted keys select
//! sections (for example `loop.filter_gain = 0.3`). Every unspecified key
//! takes a documented default; unknown and duplicate keys are errors. The
//! full key table lives in the project README.

use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use tanlock::{
    AdaptationConfig, DividerConfig, Edge, FsmConfig, GainRule, LockCriteria, LoopParams,
    RunConfig, StimulusSpec, Variant,
};

/// Error with the offending line number when it comes from parsing.
#[derive(Debug)]
pub struct ScenarioError {
    pub line: Option<usize>,
    pub message: String,
}

impl ScenarioError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

/// Run-length settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSettings {
    pub samples: usize,
}

/// Analysis thresholds and the jitter window policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisSettings {
    /// Lock band, rad.
    pub epsilon: f64,
    /// Consecutive in-band samples required for lock.
    pub hold: usize,
    /// Trailing fraction of the (post-lock) trace used for jitter.
    pub jitter_window_fraction: f64,
}

/// SNR sweep grid for `compare`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSettings {
    pub snr_min: f64,
    pub snr_max: f64,
    pub snr_step: f64,
    pub trials: usize,
}

impl SweepSettings {
    pub fn grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut snr = self.snr_min;
        while snr <= self.snr_max + 1e-9 {
            grid.push(snr);
            snr += self.snr_step;
        }
        grid
    }
}

/// Fully resolved scenario with every default applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    /// Whether the file pinned the loop variant. Templates for `compare`
    /// and `lockrange` must leave it unset.
    pub variant_specified: bool,
    #[serde(rename = "loop")]
    pub loop_params: LoopParams,
    pub stimulus: StimulusSpec,
    pub divider: DividerConfig,
    pub adaptation: AdaptationConfig,
    pub fsm: FsmConfig,
    pub run: RunSettings,
    pub analysis: AnalysisSettings,
    pub sweep: SweepSettings,
}

impl Scenario {
    /// Assemble the library run configuration.
    pub fn to_run_config(&self) -> RunConfig {
        RunConfig {
            params: self.loop_params,
            stimulus: self.stimulus.clone(),
            divider: self.divider,
            adaptation: self.adaptation,
            fsm: self.fsm,
            samples: self.run.samples,
        }
    }

    pub fn lock_criteria(&self) -> LockCriteria {
        LockCriteria {
            epsilon: self.analysis.epsilon,
            hold: self.analysis.hold,
        }
    }

    /// Parse scenario text, apply defaults and validate every invariant.
    pub fn parse_str(text: &str) -> Result<Self, ScenarioError> {
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut pairs: HashMap<String, (usize, String)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ScenarioError::at(
                    line_no,
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(ScenarioError::at(
                    line_no,
                    format!("empty value for `{key}`"),
                ));
            }
            if let Some(first) = seen.get(&key) {
                return Err(ScenarioError::at(
                    line_no,
                    format!("duplicate key `{key}` (first set on line {first})"),
                ));
            }
            seen.insert(key.clone(), line_no);
            pairs.insert(key, (line_no, value));
        }

        let mut keys = Keys { pairs };

        let name = keys
            .take("name")?
            .map(|(_, v)| v)
            .unwrap_or_else(|| "scenario".to_string());

        let variant = match keys.take("loop.variant")? {
            Some((line, v)) => Some(match v.as_str() {
                "tdtl" => Variant::Tdtl,
                "ndtl" => Variant::Ndtl,
                other => {
                    return Err(ScenarioError::at(
                        line,
                        format!("unknown variant `{other}` (expected tdtl or ndtl)"),
                    ))
                }
            }),
            None => None,
        };
        let sensitivity = keys.take_f64("loop.dco_sensitivity")?.unwrap_or(32.0);
        let dc_constant = keys.take_f64("loop.dco_dc_constant")?.unwrap_or(3.125);
        let filter_gain = keys.take_f64("loop.filter_gain")?.unwrap_or(0.25);
        let f_free = sensitivity * dc_constant;
        let tdtl_delay = keys
            .take_f64("loop.tdtl_delay")?
            .unwrap_or(1.0 / (4.0 * f_free));
        let f_floor = keys.take_f64("loop.f_floor")?.unwrap_or(1e-3 * f_free);
        let f_ceil = keys.take_f64("loop.f_ceil")?.unwrap_or(100.0 * f_free);
        let loop_params = LoopParams {
            variant: variant.unwrap_or(Variant::Ndtl),
            dco_sensitivity: sensitivity,
            dco_dc_constant: dc_constant,
            filter_gain,
            tdtl_delay,
            f_floor,
            f_ceil,
        };

        let base_frequency = keys.take_f64("stimulus.base_frequency")?.unwrap_or(f_free);
        let stimulus = StimulusSpec {
            base_frequency,
            step_value: keys.take_f64("stimulus.step_value")?.unwrap_or(0.0),
            step_scale: keys
                .take_f64("stimulus.step_scale")?
                .unwrap_or(base_frequency),
            step_time: keys.take_f64("stimulus.step_time")?.unwrap_or(1.0),
            amplitude: keys.take_f64("stimulus.amplitude")?.unwrap_or(1.0),
            initial_phase: keys.take_f64("stimulus.initial_phase")?.unwrap_or(0.0),
            snr_db: keys.take_f64("stimulus.snr_db")?,
            seed: keys.take_u64("stimulus.seed")?.unwrap_or(42),
        };

        let (frac_num, frac_den) = match keys.take("divider.ratio_frac")? {
            Some((line, v)) => parse_fraction(line, &v)?,
            None => (0, 1),
        };
        let divider = DividerConfig {
            ratio_int: keys.take_u32("divider.ratio_int")?.unwrap_or(4),
            frac_num,
            frac_den,
            edge: match keys.take("divider.edge")? {
                Some((line, v)) => match v.as_str() {
                    "positive" => Edge::Positive,
                    "negative" => Edge::Negative,
                    other => {
                        return Err(ScenarioError::at(
                            line,
                            format!("unknown edge `{other}` (expected positive or negative)"),
                        ))
                    }
                },
                None => Edge::Positive,
            },
        };

        let adaptation = AdaptationConfig {
            gain_rule: match keys.take("adaptation.gain_rule")? {
                Some((line, v)) => match v.as_str() {
                    "beta_plus_one" => GainRule::BetaPlusOne,
                    "beta" => GainRule::Beta,
                    other => {
                        return Err(ScenarioError::at(
                            line,
                            format!("unknown gain rule `{other}` (expected beta_plus_one or beta)"),
                        ))
                    }
                },
                None => GainRule::BetaPlusOne,
            },
            enabled: keys.take_bool("adaptation.enabled")?.unwrap_or(true),
        };

        let fsm = FsmConfig {
            window: keys.take_usize("fsm.window")?.unwrap_or(8),
            deadband: keys.take_f64("fsm.deadband")?.unwrap_or(1e-3),
        };

        let run = RunSettings {
            samples: keys.take_usize("run.samples")?.unwrap_or(3000),
        };
        let analysis = AnalysisSettings {
            epsilon: keys.take_f64("analysis.epsilon")?.unwrap_or(0.01),
            hold: keys.take_usize("analysis.hold")?.unwrap_or(100),
            jitter_window_fraction: keys
                .take_f64("analysis.jitter_window_fraction")?
                .unwrap_or(0.5),
        };
        let sweep = SweepSettings {
            snr_min: keys.take_f64("sweep.snr_min")?.unwrap_or(0.0),
            snr_max: keys.take_f64("sweep.snr_max")?.unwrap_or(30.0),
            snr_step: keys.take_f64("sweep.snr_step")?.unwrap_or(5.0),
            trials: keys.take_usize("sweep.trials")?.unwrap_or(10),
        };

        if let Some((key, (line, _))) = keys.pairs.iter().min_by_key(|(_, (line, _))| *line) {
            return Err(ScenarioError::at(*line, format!("unknown key `{key}`")));
        }

        let scenario = Scenario {
            name,
            variant_specified: variant.is_some(),
            loop_params,
            stimulus,
            divider,
            adaptation,
            fsm,
            run,
            analysis,
            sweep,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Cross-field validation of the resolved scenario.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.to_run_config()
            .validate()
            .map_err(|e| ScenarioError::validation(e.to_string()))?;
        if !self.analysis.epsilon.is_finite() || self.analysis.epsilon <= 0.0 {
            return Err(ScenarioError::validation(format!(
                "analysis.epsilon must be positive, got {}",
                self.analysis.epsilon
            )));
        }
        if self.analysis.hold < 1 {
            return Err(ScenarioError::validation(
                "analysis.hold must be at least 1".to_string(),
            ));
        }
        if self.run.samples < self.analysis.hold {
            return Err(ScenarioError::validation(format!(
                "run.samples ({}) must be at least analysis.hold ({})",
                self.run.samples, self.analysis.hold
            )));
        }
        if !(self.analysis.jitter_window_fraction > 0.0
            && self.analysis.jitter_window_fraction <= 1.0)
        {
            return Err(ScenarioError::validation(format!(
                "analysis.jitter_window_fraction must lie in (0, 1], got {}",
                self.analysis.jitter_window_fraction
            )));
        }
        if !self.sweep.snr_step.is_finite() || self.sweep.snr_step <= 0.0 {
            return Err(ScenarioError::validation(format!(
                "sweep.snr_step must be positive, got {}",
                self.sweep.snr_step
            )));
        }
        if self.sweep.snr_max < self.sweep.snr_min {
            return Err(ScenarioError::validation(format!(
                "sweep.snr_max ({}) must be at least sweep.snr_min ({})",
                self.sweep.snr_max, self.sweep.snr_min
            )));
        }
        if self.sweep.trials < 1 {
            return Err(ScenarioError::validation(
                "sweep.trials must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Load and resolve a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::validation(format!("cannot read {}: {e}", path.display())))?;
    Scenario::parse_str(&text)
}

struct Keys {
    pairs: HashMap<String, (usize, String)>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Result<Option<(usize, String)>, ScenarioError> {
        Ok(self.pairs.remove(key))
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, ScenarioError> {
        match self.pairs.remove(key) {
            Some((line, v)) => v.parse::<f64>().map(Some).map_err(|_| {
                ScenarioError::at(line, format!("`{key}` expects a number, got `{v}`"))
            }),
            None => Ok(None),
        }
    }

    fn take_u64(&mut self, key: &str) -> Result<Option<u64>, ScenarioError> {
        match self.pairs.remove(key) {
            Some((line, v)) => v.parse::<u64>().map(Some).map_err(|_| {
                ScenarioError::at(
                    line,
                    format!("`{key}` expects an unsigned integer, got `{v}`"),
                )
            }),
            None => Ok(None),
        }
    }

    fn take_u32(&mut self, key: &str) -> Result<Option<u32>, ScenarioError> {
        match self.pairs.remove(key) {
            Some((line, v)) => v.parse::<u32>().map(Some).map_err(|_| {
                ScenarioError::at(
                    line,
                    format!("`{key}` expects an unsigned integer, got `{v}`"),
                )
            }),
            None => Ok(None),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>, ScenarioError> {
        match self.pairs.remove(key) {
            Some((line, v)) => v.parse::<usize>().map(Some).map_err(|_| {
                ScenarioError::at(
                    line,
                    format!("`{key}` expects an unsigned integer, got `{v}`"),
                )
            }),
            None => Ok(None),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>, ScenarioError> {
        match self.pairs.remove(key) {
            Some((line, v)) => match v.as_str() {
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                _ => Err(ScenarioError::at(
                    line,
                    format!("`{key}` expects true or false, got `{v}`"),
                )),
            },
            None => Ok(None),
        }
    }
}

fn parse_fraction(line: usize, value: &str) -> Result<(u32, u32), ScenarioError> {
    let Some((num, den)) = value.split_once('/') else {
        return Err(ScenarioError::at(
            line,
            format!("fraction must be NUM/DEN, got `{value}`"),
        ));
    };
    let num: u32 = num
        .trim()
        .parse()
        .map_err(|_| ScenarioError::at(line, format!("bad fraction numerator `{}`", num.trim())))?;
    let den: u32 = den.trim().parse().map_err(|_| {
        ScenarioError::at(line, format!("bad fraction denominator `{}`", den.trim()))
    })?;
    Ok((num, den))
}
