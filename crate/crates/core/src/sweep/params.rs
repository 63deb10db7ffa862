//! Named parameters for both models, shared by sweep configs and the CLI.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::cascaded::CascadedParams;
use crate::optomech::{apply_design, preset_microwave, OmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Cascaded,
    Optomech,
}

const CASCADED_NAMES: &[&str] = &[
    "omega1", "omega2", "Delta", "kappa", "kappa1", "kappa2", "gamma1", "gamma2", "phi", "F",
    "F_phase", "Nbar1", "Nbar2", "Nbar3", "m1", "m2", "m3",
];

const OPTOMECH_NAMES: &[&str] = &[
    "omega_m", "gamma_m", "Delta1", "Delta2", "kappa1", "kappa2", "kappa_ext1", "kappa_ext2", "J",
    "phi", "G1", "G2", "Omega", "Nbar1", "Nbar2", "Nbar_m",
];

impl ModelKind {
    /// Numeric parameter names accepted for this model.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Cascaded => CASCADED_NAMES,
            ModelKind::Optomech => OPTOMECH_NAMES,
        }
    }

    pub fn accepts(self, name: &str) -> bool {
        self.param_names().contains(&name)
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cascaded" => Ok(ModelKind::Cascaded),
            "optomech" => Ok(ModelKind::Optomech),
            other => Err(format!("unknown model {other:?}, expected \"cascaded\" or \"optomech\"")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Cascaded => "cascaded",
            ModelKind::Optomech => "optomech",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Microwave,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "microwave" => Ok(Preset::Microwave),
            other => Err(format!("unknown preset {other:?}, expected \"microwave\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamError {
    Unknown(String),
    Conflict(String),
    Missing(String),
    NegativeOccupation { name: String, value: f64 },
    Invalid(String),
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::Unknown(m) => write!(f, "unknown parameter {m}"),
            ParamError::Conflict(m) => write!(f, "conflicting parameters: {m}"),
            ParamError::Missing(m) => write!(f, "missing parameter: {m}"),
            ParamError::NegativeOccupation { name, value } => {
                write!(f, "{name} = {value} is negative after converting baselines to bath occupations")
            }
            ParamError::Invalid(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ParamError {}

/// Model parameters after aliases, presets and design are resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Cascaded(CascadedParams),
    Optomech(OmParams),
}

/// Explicitly set parameters of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub model: ModelKind,
    pub preset: Option<Preset>,
    pub design: bool,
    values: BTreeMap<String, f64>,
}

impl ParamSet {
    pub fn new(model: ModelKind) -> Self {
        Self { model, preset: None, design: false, values: BTreeMap::new() }
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        if !self.model.accepts(name) {
            return Err(ParamError::Unknown(format!("{name:?} for model {}", self.model)));
        }
        if !value.is_finite() {
            return Err(ParamError::Invalid(format!("{name} = {value} is not finite")));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    /// `name=value` as given on the command line.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<(), ParamError> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| ParamError::Invalid(format!("expected name=value, got {assignment:?}")))?;
        let name = name.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| ParamError::Invalid(format!("{name}: cannot parse {value:?} as a number")))?;
        self.set(name, value)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// Reject alias combinations that would overwrite each other.
    pub fn check_consistency<'a>(&'a self, extra: impl IntoIterator<Item = &'a str>) -> Result<(), ParamError> {
        let mut names: Vec<&str> = self.names().collect();
        names.extend(extra);
        check_names(self.model, &names)
    }

    /// The effective value of `name`: explicit if set, otherwise read from the
    /// resolved model for canonical names.
    pub fn effective(&self, name: &str) -> Result<f64, ParamError> {
        if let Some(v) = self.get(name) {
            return Ok(v);
        }
        let resolved = self.build_unvalidated()?;
        canonical_value(&resolved, name)
            .ok_or_else(|| ParamError::Missing(format!("{name} is an alias and must be set explicitly")))
    }

    pub fn build(&self) -> Result<ModelParams, ParamError> {
        let built = self.build_unvalidated()?;
        match &built {
            ModelParams::Cascaded(p) => p.validate().map_err(|e| ParamError::Invalid(e.to_string()))?,
            ModelParams::Optomech(p) => p.validate().map_err(|e| ParamError::Invalid(e.to_string()))?,
        }
        if self.design {
            if let ModelParams::Optomech(p) = built {
                let designed = apply_design(&p).map_err(|e| ParamError::Invalid(e.to_string()))?;
                return Ok(ModelParams::Optomech(designed));
            }
        }
        Ok(built)
    }

    fn build_unvalidated(&self) -> Result<ModelParams, ParamError> {
        let names: Vec<&str> = self.names().collect();
        check_names(self.model, &names)?;
        if self.preset.is_some() && self.model != ModelKind::Optomech {
            return Err(ParamError::Invalid("presets apply to the optomech model".into()));
        }
        if self.design && self.model != ModelKind::Optomech {
            return Err(ParamError::Invalid("design applies to the optomech model".into()));
        }
        match self.model {
            ModelKind::Cascaded => self.build_cascaded().map(ModelParams::Cascaded),
            ModelKind::Optomech => Ok(ModelParams::Optomech(self.build_optomech())),
        }
    }

    fn build_cascaded(&self) -> Result<CascadedParams, ParamError> {
        let get = |name: &str| self.get(name);
        let kappa = get("kappa").unwrap_or(1.0);
        let omega1 = get("omega1").unwrap_or(0.0);
        let omega2 = match get("Delta") {
            Some(d) => omega1 + d,
            None => get("omega2").unwrap_or(0.0),
        };
        let uses_baselines = ["m1", "m2", "m3"].iter().any(|n| get(n).is_some());
        let (nbar1, nbar2, nbar3) = if uses_baselines {
            let m = |n: &str| get(n).ok_or_else(|| ParamError::Missing(format!("{n} (m1, m2, m3 go together)")));
            let (m1, m2, m3) = (m("m1")?, m("m2")?, m("m3")?);
            let nbar = [("Nbar1", 2.0 * m1 - m3), ("Nbar2", 2.0 * m2 - m3), ("Nbar3", m3)];
            if let Some((name, value)) = nbar.iter().find(|(_, v)| *v < 0.0) {
                return Err(ParamError::NegativeOccupation { name: name.to_string(), value: *value });
            }
            (nbar[0].1, nbar[1].1, nbar[2].1)
        } else {
            (
                get("Nbar1").unwrap_or(0.0),
                get("Nbar2").unwrap_or(0.0),
                get("Nbar3").unwrap_or(0.0),
            )
        };
        Ok(CascadedParams {
            omega1,
            omega2,
            kappa1: get("kappa1").unwrap_or(kappa),
            kappa2: get("kappa2").unwrap_or(kappa),
            gamma1: get("gamma1").unwrap_or(kappa),
            gamma2: get("gamma2").unwrap_or(kappa),
            phi: get("phi").unwrap_or(0.0),
            f: Complex64::from_polar(get("F").unwrap_or(0.0), get("F_phase").unwrap_or(0.0)),
            nbar1,
            nbar2,
            nbar3,
        })
    }

    fn build_optomech(&self) -> OmParams {
        let mut p = match self.preset {
            Some(Preset::Microwave) => preset_microwave(),
            None => OmParams {
                omega_m: 0.0,
                gamma_m: 0.0,
                delta1: 0.0,
                delta2: 0.0,
                kappa1: 0.0,
                kappa2: 0.0,
                kappa_ext1: 0.0,
                kappa_ext2: 0.0,
                j: 0.0,
                phi: 0.0,
                g1: 0.0,
                g2: 0.0,
                omega_eval: None,
                nbar1: 0.0,
                nbar2: 0.0,
                nbar_m: 0.0,
                cavity_frequency: None,
            },
        };
        p.omega_eval = None;
        for (name, &v) in &self.values {
            match name.as_str() {
                "omega_m" => p.omega_m = v,
                "gamma_m" => p.gamma_m = v,
                "Delta1" => p.delta1 = v,
                "Delta2" => p.delta2 = v,
                "kappa1" => p.kappa1 = v,
                "kappa2" => p.kappa2 = v,
                "J" => p.j = v,
                "phi" => p.phi = v,
                "G1" => p.g1 = v,
                "G2" => p.g2 = v,
                "Omega" => p.omega_eval = Some(v),
                "Nbar1" => p.nbar1 = v,
                "Nbar2" => p.nbar2 = v,
                "Nbar_m" => p.nbar_m = v,
                _ => {}
            }
        }
        p.kappa_ext1 = self.get("kappa_ext1").unwrap_or(p.kappa1);
        p.kappa_ext2 = self.get("kappa_ext2").unwrap_or(p.kappa2);
        p
    }
}

fn check_names(model: ModelKind, names: &[&str]) -> Result<(), ParamError> {
    if let Some(bad) = names.iter().find(|n| !model.accepts(n)) {
        return Err(ParamError::Unknown(format!("{bad:?} for model {model}")));
    }
    if model != ModelKind::Cascaded {
        return Ok(());
    }
    let has = |n: &str| names.contains(&n);
    if has("Delta") && has("omega2") {
        return Err(ParamError::Conflict("Delta and omega2".into()));
    }
    let m = ["m1", "m2", "m3"].iter().any(|n| has(n));
    let n = ["Nbar1", "Nbar2", "Nbar3"].iter().any(|n| has(n));
    if m && n {
        return Err(ParamError::Conflict("baselines m1..m3 and bath occupations Nbar1..Nbar3".into()));
    }
    if m && !["m1", "m2", "m3"].iter().all(|n| has(n)) {
        return Err(ParamError::Missing("m1, m2 and m3 must all be given".into()));
    }
    Ok(())
}

fn canonical_value(p: &ModelParams, name: &str) -> Option<f64> {
    Some(match p {
        ModelParams::Cascaded(c) => match name {
            "omega1" => c.omega1,
            "omega2" => c.omega2,
            "kappa1" => c.kappa1,
            "kappa2" => c.kappa2,
            "gamma1" => c.gamma1,
            "gamma2" => c.gamma2,
            "phi" => c.phi,
            "F" => c.f.norm(),
            "F_phase" => c.f.arg(),
            "Nbar1" => c.nbar1,
            "Nbar2" => c.nbar2,
            "Nbar3" => c.nbar3,
            _ => return None,
        },
        ModelParams::Optomech(o) => match name {
            "omega_m" => o.omega_m,
            "gamma_m" => o.gamma_m,
            "Delta1" => o.delta1,
            "Delta2" => o.delta2,
            "kappa1" => o.kappa1,
            "kappa2" => o.kappa2,
            "kappa_ext1" => o.kappa_ext1,
            "kappa_ext2" => o.kappa_ext2,
            "J" => o.j,
            "phi" => o.phi,
            "G1" => o.g1,
            "G2" => o.g2,
            "Omega" => o.eval_frequency(),
            "Nbar1" => o.nbar1,
            "Nbar2" => o.nbar2,
            "Nbar_m" => o.nbar_m,
            _ => return None,
        },
    })
}
