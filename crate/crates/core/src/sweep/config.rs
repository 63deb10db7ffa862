use std::str::FromStr;

use serde_json::{Map, Value};

use super::params::{ModelKind, ParamError, ParamSet, Preset};
use super::SweepError;
use crate::cascaded::Channel;

pub const MAX_AXES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    /// Grid values; endpoints are reproduced exactly.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k == 0 {
                    return self.min;
                }
                if k + 1 == self.points {
                    return self.max;
                }
                let t = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}, expected \"csv\" or \"json\"")),
        }
    }
}

/// A scalar that can be evaluated at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    N1,
    N2,
    N1Closed,
    N2Closed,
    M1,
    M2,
    Dn1,
    Dn2,
    Dn1Closed,
    Dn2Closed,
    Eta(Channel),
    Theta { channel: Channel, s: f64 },
    StabilityMargin,
    FResidual,
}

impl Quantity {
    /// Whether the value needs the equal-rate closed forms.
    pub fn needs_equal_rates(self) -> bool {
        matches!(
            self,
            Quantity::N1Closed
                | Quantity::N2Closed
                | Quantity::M1
                | Quantity::M2
                | Quantity::Dn1
                | Quantity::Dn2
                | Quantity::Dn1Closed
                | Quantity::Dn2Closed
        )
    }
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "n1" => Quantity::N1,
            "n2" => Quantity::N2,
            "n1_closed" => Quantity::N1Closed,
            "n2_closed" => Quantity::N2Closed,
            "m1" => Quantity::M1,
            "m2" => Quantity::M2,
            "dn1" => Quantity::Dn1,
            "dn2" => Quantity::Dn2,
            "dn1_closed" => Quantity::Dn1Closed,
            "dn2_closed" => Quantity::Dn2Closed,
            "eta1" => Quantity::Eta(Channel::Local1),
            "eta2" => Quantity::Eta(Channel::Local2),
            "eta3" => Quantity::Eta(Channel::Common),
            "stability_margin" => Quantity::StabilityMargin,
            "F_residual" => Quantity::FResidual,
            other => {
                let bad = || format!("unknown output {other:?}");
                let rest = other.strip_prefix("theta").ok_or_else(bad)?;
                let (ch, s) = rest.split_once('@').ok_or_else(bad)?;
                let channel = ch
                    .parse::<usize>()
                    .ok()
                    .and_then(Channel::from_index)
                    .ok_or_else(|| format!("{other:?}: channel must be 1, 2 or 3"))?;
                let s: f64 = s.parse().map_err(|_| format!("{other:?}: cannot parse s"))?;
                if !s.is_finite() {
                    return Err(format!("{other:?}: s must be finite"));
                }
                Quantity::Theta { channel, s }
            }
        })
    }
}

/// One output column.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// Column name exactly as configured.
    pub name: String,
    pub kind: OutputKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputKind {
    Value(Quantity),
    /// Central finite difference `d(quantity)/d(param)`.
    Derivative { of: Quantity, param: String },
}

impl Output {
    pub fn parse(name: &str, model: ModelKind) -> Result<Self, String> {
        let kind = if let Some(inner) = name.strip_prefix("d(") {
            let (of, rest) = inner
                .split_once(")/d(")
                .ok_or_else(|| format!("expected d(<output>)/d(<param>), got {name:?}"))?;
            let param = rest
                .strip_suffix(')')
                .ok_or_else(|| format!("expected d(<output>)/d(<param>), got {name:?}"))?;
            if !model.accepts(param) {
                return Err(format!("{name:?}: unknown parameter {param:?} for model {model}"));
            }
            OutputKind::Derivative { of: of.parse()?, param: param.to_string() }
        } else {
            OutputKind::Value(name.parse()?)
        };
        Ok(Output { name: name.to_string(), kind })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub params: ParamSet,
    pub axes: Vec<Axis>,
    pub outputs: Vec<Output>,
    pub format: Format,
    pub parallel: bool,
}

impl SweepConfig {
    pub fn model(&self) -> ModelKind {
        self.params.model
    }

    /// Column names: axes, outputs, then `status`.
    pub fn columns(&self) -> Vec<String> {
        self.axes
            .iter()
            .map(|a| a.name.clone())
            .chain(self.outputs.iter().map(|o| o.name.clone()))
            .chain(std::iter::once("status".to_string()))
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> SweepError {
    SweepError::Schema { path: path.into(), message: message.into() }
}

fn param_error(path: &str, e: ParamError) -> SweepError {
    match e {
        ParamError::NegativeOccupation { name, value } => SweepError::NegativeOccupation { name, value },
        other => schema(path, other.to_string()),
    }
}

fn number(v: &Value, path: &str) -> Result<f64, SweepError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| schema(path, "expected a finite number"))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, SweepError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), SweepError> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(format!("{path}.{k}"), "unknown key")),
        None => Ok(()),
    }
}

fn parse_axis(v: &Value, path: &str, model: ModelKind) -> Result<Axis, SweepError> {
    let map = object(v, path)?;
    reject_unknown(map, &["name", "min", "max", "points", "spacing"], path)?;
    let field = |k: &str| map.get(k).ok_or_else(|| schema(format!("{path}.{k}"), "required"));
    let name = field("name")?
        .as_str()
        .ok_or_else(|| schema(format!("{path}.name"), "expected a string"))?;
    if !model.accepts(name) {
        return Err(schema(format!("{path}.name"), format!("unknown parameter {name:?} for model {model}")));
    }
    let min = number(field("min")?, &format!("{path}.min"))?;
    let max = number(field("max")?, &format!("{path}.max"))?;
    let points = field("points")?
        .as_u64()
        .ok_or_else(|| schema(format!("{path}.points"), "expected a positive integer"))?
        as usize;
    if points == 0 {
        return Err(schema(format!("{path}.points"), "must be at least 2"));
    }
    if points == 1 && min != max {
        return Err(schema(format!("{path}.points"), "must be at least 2 unless min == max"));
    }
    let spacing = match map.get("spacing") {
        None => Spacing::Linear,
        Some(Value::String(s)) if s == "linear" => Spacing::Linear,
        Some(Value::String(s)) if s == "log" => Spacing::Log,
        Some(_) => return Err(schema(format!("{path}.spacing"), "expected \"linear\" or \"log\"")),
    };
    if spacing == Spacing::Log && !(min > 0.0 && max > 0.0) {
        return Err(schema(format!("{path}.spacing"), "log spacing needs positive bounds"));
    }
    Ok(Axis { name: name.to_string(), min, max, points, spacing })
}

/// Parse and validate a sweep configuration document.
///
/// Every corner of the axis box is built once, so invalid parameters and
/// negative bath occupations surface here rather than per row.
pub fn parse_config(text: &str) -> Result<SweepConfig, SweepError> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let map = object(&root, "$")?;
    reject_unknown(map, &["model", "params", "axes", "outputs", "format", "parallel"], "$")?;
    let field = |k: &str| map.get(k).ok_or_else(|| schema(format!("$.{k}"), "required"));

    let model: ModelKind = field("model")?
        .as_str()
        .ok_or_else(|| schema("$.model", "expected a string"))?
        .parse()
        .map_err(|e: String| schema("$.model", e))?;

    let mut params = ParamSet::new(model);
    if let Some(v) = map.get("params") {
        for (k, v) in object(v, "$.params")? {
            let path = format!("$.params.{k}");
            match k.as_str() {
                "preset" => {
                    let name = v.as_str().ok_or_else(|| schema(&path, "expected a string"))?;
                    params.preset = Some(name.parse::<Preset>().map_err(|e| schema(&path, e))?);
                }
                "design" => params.design = v.as_bool().ok_or_else(|| schema(&path, "expected a boolean"))?,
                _ => params.set(k, number(v, &path)?).map_err(|e| param_error(&path, e))?,
            }
        }
    }

    let axes_value = field("axes")?
        .as_array()
        .ok_or_else(|| schema("$.axes", "expected an array"))?;
    if axes_value.is_empty() || axes_value.len() > MAX_AXES {
        return Err(schema("$.axes", format!("expected 1 to {MAX_AXES} axes")));
    }
    let axes = axes_value
        .iter()
        .enumerate()
        .map(|(i, v)| parse_axis(v, &format!("$.axes[{i}]"), model))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(schema(format!("$.axes[{i}].name"), format!("{:?} swept twice", a.name)));
        }
    }
    params
        .check_consistency(axes.iter().map(|a| a.name.as_str()))
        .map_err(|e| param_error("$.axes", e))?;

    let outputs_value = field("outputs")?
        .as_array()
        .ok_or_else(|| schema("$.outputs", "expected an array"))?;
    if outputs_value.is_empty() {
        return Err(schema("$.outputs", "expected at least one output"));
    }
    let mut outputs = Vec::with_capacity(outputs_value.len());
    for (i, v) in outputs_value.iter().enumerate() {
        let path = format!("$.outputs[{i}]");
        let name = v.as_str().ok_or_else(|| schema(&path, "expected a string"))?;
        if name == "status" || axes.iter().any(|a| a.name == name) || outputs.iter().any(|o: &Output| o.name == name) {
            return Err(schema(&path, format!("duplicate column {name:?}")));
        }
        let out = Output::parse(name, model).map_err(|e| schema(&path, e))?;
        if let OutputKind::Derivative { param, .. } = &out.kind {
            let mut probe = params.clone();
            probe
                .check_consistency(axes.iter().map(|a| a.name.as_str()).chain([param.as_str()]))
                .map_err(|e| schema(&path, e.to_string()))?;
            if !axes.iter().any(|a| &a.name == param) {
                probe.effective(param).map_err(|e| schema(&path, e.to_string()))?;
            }
            probe.set(param, 0.0).map_err(|e| schema(&path, e.to_string()))?;
        }
        outputs.push(out);
    }

    let format = match map.get("format") {
        None => Format::Csv,
        Some(v) => v
            .as_str()
            .ok_or_else(|| schema("$.format", "expected a string"))?
            .parse()
            .map_err(|e: String| schema("$.format", e))?,
    };
    let parallel = match map.get("parallel") {
        None => false,
        Some(v) => v.as_bool().ok_or_else(|| schema("$.parallel", "expected a boolean"))?,
    };

    let cfg = SweepConfig { params, axes, outputs, format, parallel };
    for corner in 0..(1usize << cfg.axes.len()) {
        let mut p = cfg.params.clone();
        for (i, a) in cfg.axes.iter().enumerate() {
            let v = if corner >> i & 1 == 0 { a.min } else { a.max };
            p.set(&a.name, v).map_err(|e| param_error("$.axes", e))?;
        }
        p.build().map_err(|e| param_error("$.params", e))?;
    }
    Ok(cfg)
}
