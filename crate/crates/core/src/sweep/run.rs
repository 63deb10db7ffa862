use rayon::prelude::*;

use super::config::{OutputKind, Quantity, SweepConfig};
use super::params::{ModelParams, ParamSet};
use crate::cascaded::{
    build_system, closed_form_occupations, delta_n, disconnected_baseline, CascadedParams,
    CovarianceMatrix, LinearSystem, ModelError, OccupationReport,
};
use crate::fcs::{flows, large_deviation, BiasSpec, FcsError};
use crate::linalg::LinalgError;
use crate::optomech::map_to_cascaded;

/// Relative step of derivative columns, floored at an absolute `1e-4`.
pub const DERIVATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// The drift, or the tilted drift of a requested `θ`, is not stable.
    Unstable,
    /// A requested closed form does not apply at this point.
    Unsupported,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Unstable => "unstable",
            RowStatus::Unsupported => "unsupported",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axes: Vec<f64>,
    /// One entry per output; all `None` unless `status` is ok.
    pub values: Vec<Option<f64>>,
    pub status: RowStatus,
}

fn status_of_model(e: &ModelError) -> RowStatus {
    match e {
        ModelError::Unstable { .. }
        | ModelError::Linalg(LinalgError::SingularSystem { .. })
        | ModelError::Linalg(LinalgError::UnstableEffectiveDrift { .. }) => RowStatus::Unstable,
        _ => RowStatus::Unsupported,
    }
}

fn status_of_fcs(e: &FcsError) -> RowStatus {
    match e {
        FcsError::Model(m) => status_of_model(m),
        FcsError::OutsideAdmissibleRegion { .. } => RowStatus::Unstable,
        _ => RowStatus::Unsupported,
    }
}

/// Lazily evaluated quantities at one parameter point.
struct Point {
    params: CascadedParams,
    f_residual: f64,
    sys: LinearSystem,
    covariance: Option<CovarianceMatrix>,
    closed: Option<OccupationReport>,
    flows: Option<[f64; 3]>,
}

impl Point {
    fn new(model: &ModelParams) -> Result<Self, RowStatus> {
        let params = match model {
            ModelParams::Cascaded(p) => *p,
            ModelParams::Optomech(p) => map_to_cascaded(p),
        };
        let sys = build_system(&params).map_err(|e| status_of_model(&e))?;
        if !(sys.stability_margin() < 0.0) {
            return Err(RowStatus::Unstable);
        }
        Ok(Self {
            params,
            f_residual: params.f.norm(),
            sys,
            covariance: None,
            closed: None,
            flows: None,
        })
    }

    fn covariance(&mut self) -> Result<CovarianceMatrix, RowStatus> {
        if self.covariance.is_none() {
            self.covariance = Some(self.sys.steady_state().map_err(|e| status_of_model(&e))?);
        }
        Ok(self.covariance.unwrap())
    }

    fn closed(&mut self) -> Result<OccupationReport, RowStatus> {
        if self.closed.is_none() {
            self.closed = Some(delta_n(&self.params).map_err(|e| status_of_model(&e))?);
        }
        Ok(self.closed.unwrap())
    }

    fn baseline(&self) -> Result<(f64, f64), RowStatus> {
        disconnected_baseline(&self.params).map_err(|e| status_of_model(&e))
    }

    fn value(&mut self, q: Quantity) -> Result<f64, RowStatus> {
        Ok(match q {
            Quantity::N1 => self.covariance()?.occupations().n1,
            Quantity::N2 => self.covariance()?.occupations().n2,
            Quantity::N1Closed => closed_form_occupations(&self.params).map_err(|e| status_of_model(&e))?.0,
            Quantity::N2Closed => closed_form_occupations(&self.params).map_err(|e| status_of_model(&e))?.1,
            Quantity::M1 => self.baseline()?.0,
            Quantity::M2 => self.baseline()?.1,
            Quantity::Dn1 => {
                let m = self.baseline()?.0;
                self.covariance()?.occupations().n1 - m
            }
            Quantity::Dn2 => {
                let m = self.baseline()?.1;
                self.covariance()?.occupations().n2 - m
            }
            Quantity::Dn1Closed => self.closed()?.dn1,
            Quantity::Dn2Closed => self.closed()?.dn2,
            Quantity::Eta(ch) => {
                if self.flows.is_none() {
                    self.flows = Some(flows(&self.sys).map_err(|e| status_of_fcs(&e))?);
                }
                self.flows.unwrap()[ch.index() - 1]
            }
            Quantity::Theta { channel, s } => {
                large_deviation(BiasSpec { channel, s }, &self.sys).map_err(|e| status_of_fcs(&e))?
            }
            Quantity::StabilityMargin => self.sys.stability_margin(),
            Quantity::FResidual => self.f_residual,
        })
    }
}

fn point_at(params: &ParamSet) -> Result<Point, RowStatus> {
    let model = params.build().map_err(|_| RowStatus::Unsupported)?;
    Point::new(&model)
}

/// Central difference, falling back to a one-sided second-order stencil when
/// one neighbour leaves the valid parameter range (e.g. an occupation at 0).
fn derivative(params: &ParamSet, of: Quantity, name: &str) -> Result<f64, RowStatus> {
    let x = params.effective(name).map_err(|_| RowStatus::Unsupported)?;
    let h = DERIVATIVE_STEP * x.abs().max(1.0);
    let at = |k: f64| {
        let mut p = params.clone();
        p.set(name, x + k * h).map_err(|_| RowStatus::Unsupported)?;
        point_at(&p)?.value(of)
    };
    let central = at(1.0).and_then(|up| Ok((up - at(-1.0)?) / (2.0 * h)));
    match central {
        Err(RowStatus::Unsupported) => {
            let forward = || Ok((-3.0 * at(0.0)? + 4.0 * at(1.0)? - at(2.0)?) / (2.0 * h));
            let backward = || Ok((3.0 * at(0.0)? - 4.0 * at(-1.0)? + at(-2.0)?) / (2.0 * h));
            forward().or_else(|_: RowStatus| backward())
        }
        other => other,
    }
}

/// Evaluate every configured output at one explicit parameter set.
pub fn evaluate(cfg: &SweepConfig, params: &ParamSet) -> (Vec<Option<f64>>, RowStatus) {
    let fail = |status| (vec![None; cfg.outputs.len()], status);
    let mut point = match point_at(params) {
        Ok(p) => p,
        Err(status) => return fail(status),
    };
    let mut values = Vec::with_capacity(cfg.outputs.len());
    for out in &cfg.outputs {
        let v = match &out.kind {
            OutputKind::Value(q) => point.value(*q),
            OutputKind::Derivative { of, param } => derivative(params, *of, param),
        };
        match v {
            Ok(v) => values.push(Some(v)),
            Err(status) => return fail(status),
        }
    }
    (values, RowStatus::Ok)
}

/// Axis values of every row, first axis slowest.
pub fn grid(cfg: &SweepConfig) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = cfg.axes.iter().map(|a| a.values()).collect();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new()];
    for values in &axes {
        rows = rows
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut r = prefix.clone();
                    r.push(v);
                    r
                })
            })
            .collect();
    }
    rows
}

fn row(cfg: &SweepConfig, axes: Vec<f64>) -> ResultRow {
    let mut params = cfg.params.clone();
    for (axis, &v) in cfg.axes.iter().zip(&axes) {
        if params.set(&axis.name, v).is_err() {
            return ResultRow { values: vec![None; cfg.outputs.len()], axes, status: RowStatus::Unsupported };
        }
    }
    let (values, status) = evaluate(cfg, &params);
    ResultRow { axes, values, status }
}

/// Evaluate the grid, in parallel when the config asks for it. Row order is
/// the same either way.
pub fn run_sweep(cfg: &SweepConfig) -> Vec<ResultRow> {
    run_sweep_with(cfg, cfg.parallel)
}

pub fn run_sweep_with(cfg: &SweepConfig, parallel: bool) -> Vec<ResultRow> {
    let points = grid(cfg);
    if parallel {
        points.into_par_iter().map(|axes| row(cfg, axes)).collect()
    } else {
        points.into_iter().map(|axes| row(cfg, axes)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::parse_config;

    fn detuning_grid(points: usize, outputs: &str) -> SweepConfig {
        parse_config(&format!(
            r#"{{
                "model": "cascaded",
                "params": {{"kappa": 1, "phi": 0, "F": 0, "m1": 50, "m2": 100}},
                "axes": [
                    {{"name": "Delta", "min": -10, "max": 10, "points": {points}}},
                    {{"name": "m3", "min": 0, "max": 100, "points": {points}}}
                ],
                "outputs": {outputs}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn row_major_order() {
        let cfg = detuning_grid(3, r#"["dn2"]"#);
        let g = grid(&cfg);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], [-10.0, 0.0]);
        assert_eq!(g[1], [-10.0, 50.0]);
        assert_eq!(g[3], [0.0, 0.0]);
    }

    #[test]
    fn detuning_grid_sign_structure() {
        let cfg = detuning_grid(11, r#"["dn1", "dn2", "dn2_closed"]"#);
        for r in run_sweep(&cfg) {
            assert_eq!(r.status, RowStatus::Ok);
            let (dn1, dn2) = (r.values[0].unwrap(), r.values[1].unwrap());
            assert!(dn1.abs() < 1e-10);
            assert!((dn2 - r.values[2].unwrap()).abs() < 1e-9);
            let m3 = r.axes[1];
            if m3 < 50.0 {
                assert!(dn2 > 0.0);
            } else if m3 > 50.0 {
                assert!(dn2 < 0.0);
            } else {
                assert!(dn2.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unstable_rows_carry_no_numbers() {
        let cfg = parse_config(
            r#"{"model": "cascaded",
                "params": {"F": 0.3},
                "axes": [{"name": "kappa", "min": 0, "max": 1, "points": 3}],
                "outputs": ["n1", "stability_margin"]}"#,
        )
        .unwrap();
        let rows = run_sweep(&cfg);
        assert_eq!(rows[0].status, RowStatus::Unstable);
        for r in rows {
            if r.status != RowStatus::Ok {
                assert!(r.values.iter().all(Option::is_none));
            } else {
                assert!(r.values[1].unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn closed_forms_unsupported_for_unequal_rates() {
        let cfg = parse_config(
            r#"{"model": "cascaded",
                "params": {"kappa": 1},
                "axes": [{"name": "kappa2", "min": 1, "max": 2, "points": 2}],
                "outputs": ["n2", "dn2_closed"]}"#,
        )
        .unwrap();
        let rows = run_sweep(&cfg);
        assert_eq!(rows[0].status, RowStatus::Ok);
        assert_eq!(rows[1].status, RowStatus::Unsupported);
    }

    #[test]
    fn derivative_columns() {
        let cfg = parse_config(
            r#"{"model": "cascaded",
                "params": {"kappa": 1, "Delta": 0.5, "Nbar2": 1, "Nbar3": 2},
                "axes": [{"name": "Nbar1", "min": 0, "max": 4, "points": 3}],
                "outputs": ["d(eta1)/d(Nbar2)", "d(eta2)/d(Nbar1)", "d(n2)/d(Nbar1)"]}"#,
        )
        .unwrap();
        let lorentz = 1.0 / (4.0 + 0.25);
        for r in run_sweep(&cfg) {
            assert!(r.values[0].unwrap().abs() < 1e-9);
            assert!((r.values[1].unwrap() - lorentz).abs() < 1e-8);
            assert!((r.values[2].unwrap() - lorentz).abs() < 1e-8);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let cfg = detuning_grid(7, r#"["n1", "n2", "eta3", "theta2@0.1"]"#);
        assert_eq!(run_sweep_with(&cfg, true), run_sweep_with(&cfg, false));
    }
}
