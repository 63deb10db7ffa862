//! Full counting statistics of the excitations exchanged with one bath.
//!
//! Counting bath `j` tilts the Gaussian dynamics by
//! `F_±(s) = f_{j±}(s)·P_j`, where `P_j = R(û_j)R(û_j)ᵀ` projects onto the
//! quadrature plane of the mode `û_j = u_j/‖u_j‖` the bath couples to and
//!
//! ```text
//! f_{j±}(s) = γ_j[(N̄_j+1)(e^{-s}-1) ± N̄_j(e^{s}-1)].
//! ```
//!
//! The tilted covariance solves
//!
//! ```text
//! 0 = [A - ½F₋]V + V[A - ½F₋]ᵀ + V F₊ V + N + ¼F₊
//! ```
//!
//! and the scaled cumulant generating function is
//! `θ(s) = ½Tr{F₊V_s} - ¼Tr{F₋}`. Cumulants follow from
//! `η⁽ⁿ⁾ = (-1)ⁿ ∂ⁿθ/∂sⁿ |₀`; the first one reduces to
//! `η_j = γ_j(n_j - N̄_j)` with `n_j` the occupation of `û_j`.
//! Positive `η_j` means bath `j` absorbs excitations on average.

use num_complex::Complex64;
use thiserror::Error;

use crate::cascaded::{CascadedParams, Channel, CovarianceMatrix, LinearSystem, ModelError};
use crate::linalg::{embedding_gram, solve_riccati_biased_with, LinalgError, RealMatrix4, Tolerances};

/// Largest step in `s` between two warm-started Riccati solves.
pub const CONTINUATION_STEP: f64 = 0.05;

/// Default finite-difference step for [`flow_cumulant`].
pub const DEFAULT_CUMULANT_STEP: f64 = 1e-3;

/// Highest cumulant order supported by [`flow_cumulant`].
pub const MAX_CUMULANT_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FcsError {
    #[error("channel {0:?} has zero coupling rate")]
    ZeroRateChannel(Channel),
    #[error("s = {s} is outside the admissible region (last admissible s = {last_admissible_s}): {source}")]
    OutsideAdmissibleRegion {
        s: f64,
        last_admissible_s: f64,
        source: LinalgError,
    },
    #[error("cumulant order {0} not in 1..=4")]
    InvalidOrder(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("simplified flows need equal rates and F = 0: {0}")]
    UnsupportedParams(String),
    #[error("no occupancy reading matches the trace formula")]
    NoMatchingReading,
    #[error("several occupancy readings match the trace formula: {0:?}")]
    AmbiguousReading(Vec<SimplifiedReading>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasSpec {
    pub channel: Channel,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasMatrices {
    pub f_plus: f64,
    pub f_minus: f64,
    /// `R(û)R(û)ᵀ`.
    pub projector: RealMatrix4,
    pub fplus: RealMatrix4,
    pub fminus: RealMatrix4,
}

/// `(f₊(s), f₋(s))` for a bath of rate `rate` and occupation `nbar`.
pub fn bias_coefficients(rate: f64, nbar: f64, s: f64) -> (f64, f64) {
    let down = (nbar + 1.0) * (-s).exp_m1();
    let up = nbar * s.exp_m1();
    (rate * (down + up), rate * (down - up))
}

/// `(f′₊(0), f′₋(0)) = (-γ, -γ(2N̄+1))`.
pub fn bias_derivatives(rate: f64, nbar: f64) -> (f64, f64) {
    (-rate, -rate * (2.0 * nbar + 1.0))
}

fn channel_projector(channel: Channel, sys: &LinearSystem) -> Result<(f64, f64, RealMatrix4), FcsError> {
    let ch = sys.channel(channel);
    if !(ch.rate > 0.0) {
        return Err(FcsError::ZeroRateChannel(channel));
    }
    let norm = ch.rate.sqrt();
    let unit = [ch.u[0] / norm, ch.u[1] / norm];
    Ok((ch.rate, ch.nbar, embedding_gram(&unit)))
}

pub fn bias_matrices(spec: BiasSpec, sys: &LinearSystem) -> Result<BiasMatrices, FcsError> {
    if !spec.s.is_finite() {
        return Err(FcsError::InvalidInput(format!("s = {}", spec.s)));
    }
    let (rate, nbar, projector) = channel_projector(spec.channel, sys)?;
    let (f_plus, f_minus) = bias_coefficients(rate, nbar, spec.s);
    Ok(BiasMatrices {
        f_plus,
        f_minus,
        projector,
        fplus: projector.scale(f_plus),
        fminus: projector.scale(f_minus),
    })
}

/// One counted channel of one system, with the untilted steady state cached.
struct Tilted<'a> {
    sys: &'a LinearSystem,
    rate: f64,
    nbar: f64,
    projector: RealMatrix4,
    v0: RealMatrix4,
    tol: Tolerances,
}

impl<'a> Tilted<'a> {
    fn new(channel: Channel, sys: &'a LinearSystem) -> Result<Self, FcsError> {
        let (rate, nbar, projector) = channel_projector(channel, sys)?;
        let v0 = sys.steady_state()?.0;
        Ok(Self { sys, rate, nbar, projector, v0, tol: Tolerances::default() })
    }

    fn solve(&self, s: f64, warm: &RealMatrix4) -> Result<RealMatrix4, LinalgError> {
        let (fp, fm) = bias_coefficients(self.rate, self.nbar, s);
        let fplus = self.projector.scale(fp);
        solve_riccati_biased_with(
            &self.sys.quad_drift,
            &(self.sys.noise + fplus.scale(0.25)),
            &self.projector.scale(0.5 * fm),
            &fplus,
            warm,
            &self.tol,
        )
    }

    fn theta(&self, s: f64, v: &RealMatrix4) -> f64 {
        let (fp, fm) = bias_coefficients(self.rate, self.nbar, s);
        // Tr P = 2
        0.5 * fp * (self.projector * *v).trace() - 0.5 * fm
    }

    /// Walk from `(s, V)` to `target` in steps of at most [`CONTINUATION_STEP`].
    fn advance(&self, from: (f64, RealMatrix4), target: f64) -> Result<(f64, RealMatrix4), FcsError> {
        let (mut s, mut v) = from;
        let steps = ((target - s).abs() / CONTINUATION_STEP).ceil().max(1.0) as usize;
        let start = s;
        for k in 1..=steps {
            let next = if k == steps {
                target
            } else {
                start + (target - start) * k as f64 / steps as f64
            };
            v = self.solve(next, &v).map_err(|source| FcsError::OutsideAdmissibleRegion {
                s: target,
                last_admissible_s: s,
                source,
            })?;
            s = next;
        }
        Ok((s, v))
    }

    fn theta_at(&self, s: f64) -> Result<f64, FcsError> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let (_, v) = self.advance((0.0, self.v0), s)?;
        Ok(self.theta(s, &v))
    }
}

/// `θ(s)` for the counted channel, reached by continuation from `s = 0`.
pub fn large_deviation(spec: BiasSpec, sys: &LinearSystem) -> Result<f64, FcsError> {
    if !spec.s.is_finite() {
        return Err(FcsError::InvalidInput(format!("s = {}", spec.s)));
    }
    Tilted::new(spec.channel, sys)?.theta_at(spec.s)
}

/// The tilted covariance `V_s`.
pub fn biased_covariance(spec: BiasSpec, sys: &LinearSystem) -> Result<RealMatrix4, FcsError> {
    let t = Tilted::new(spec.channel, sys)?;
    if spec.s == 0.0 {
        return Ok(t.v0);
    }
    Ok(t.advance((0.0, t.v0), spec.s)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSample {
    pub s: f64,
    /// `None` past the admissible boundary.
    pub theta: Option<f64>,
}

/// `θ` on a grid. Positive and negative points are each reached by one
/// continuation path outward from zero; once a path fails, the points beyond
/// it are reported as inadmissible.
pub fn theta_samples(channel: Channel, sys: &LinearSystem, grid: &[f64]) -> Result<Vec<ThetaSample>, FcsError> {
    if let Some(s) = grid.iter().find(|s| !s.is_finite()) {
        return Err(FcsError::InvalidInput(format!("s = {s}")));
    }
    let t = Tilted::new(channel, sys)?;
    let mut theta = vec![None; grid.len()];

    for positive in [true, false] {
        let mut order: Vec<usize> = (0..grid.len())
            .filter(|&i| if positive { grid[i] > 0.0 } else { grid[i] < 0.0 })
            .collect();
        order.sort_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()));
        let mut state = (0.0, t.v0);
        for i in order {
            match t.advance(state, grid[i]) {
                Ok(next) => {
                    theta[i] = Some(t.theta(grid[i], &next.1));
                    state = next;
                }
                Err(_) => break,
            }
        }
    }
    for (i, s) in grid.iter().enumerate() {
        if *s == 0.0 {
            theta[i] = Some(0.0);
        }
    }
    Ok(grid
        .iter()
        .zip(theta)
        .map(|(&s, theta)| ThetaSample { s, theta })
        .collect())
}

/// `η_j = -½Tr{F′₊V} + ¼Tr{F′₋} = γ_j(n_j - N̄_j)` from the untilted
/// steady state. A channel with zero rate carries no flow.
pub fn flow_first_moment(channel: Channel, sys: &LinearSystem, v: &CovarianceMatrix) -> f64 {
    let Ok((rate, nbar, projector)) = channel_projector(channel, sys) else {
        return 0.0;
    };
    let (dp, dm) = bias_derivatives(rate, nbar);
    -0.5 * dp * (projector * v.0).trace() + 0.5 * dm
}

/// First moments for all three channels.
pub fn flows(sys: &LinearSystem) -> Result<[f64; 3], FcsError> {
    let v = sys.steady_state()?;
    Ok(Channel::ALL.map(|ch| flow_first_moment(ch, sys, &v)))
}

fn stencil(order: usize, h: f64, theta: &mut impl FnMut(f64) -> Result<f64, FcsError>) -> Result<f64, FcsError> {
    let mut at = |k: f64| theta(k * h);
    Ok(match order {
        1 => (at(1.0)? - at(-1.0)?) / (2.0 * h),
        2 => (at(1.0)? - 2.0 * at(0.0)? + at(-1.0)?) / (h * h),
        3 => (at(2.0)? - 2.0 * at(1.0)? + 2.0 * at(-1.0)? - at(-2.0)?) / (2.0 * h.powi(3)),
        4 => {
            (at(2.0)? - 4.0 * at(1.0)? + 6.0 * at(0.0)? - 4.0 * at(-1.0)? + at(-2.0)?) / h.powi(4)
        }
        _ => unreachable!(),
    })
}

/// `η⁽ⁿ⁾ = (-1)ⁿ ∂ⁿθ/∂sⁿ` at zero from central differences with one
/// Richardson step, `(4D(h/2) - D(h))/3`.
///
/// Rounding in `θ` is amplified by `h⁻ⁿ`; orders 3 and 4 want `h` of order
/// `1e-2` rather than the default.
pub fn flow_cumulant(channel: Channel, order: usize, sys: &LinearSystem, h: f64) -> Result<f64, FcsError> {
    if !(1..=MAX_CUMULANT_ORDER).contains(&order) {
        return Err(FcsError::InvalidOrder(order));
    }
    if !(h > 0.0 && h.is_finite() && 2.0 * h <= CONTINUATION_STEP * 4.0) {
        return Err(FcsError::InvalidInput(format!("step h = {h}")));
    }
    let t = Tilted::new(channel, sys)?;
    let mut theta = |s: f64| -> Result<f64, FcsError> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let v = t.advance((0.0, t.v0), s)?.1;
        Ok(t.theta(s, &v))
    };
    let coarse = stencil(order, h, &mut theta)?;
    let fine = stencil(order, h / 2.0, &mut theta)?;
    let d = (4.0 * fine - coarse) / 3.0;
    Ok(if order % 2 == 0 { d } else { -d })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowStats {
    pub channel: Channel,
    pub theta_samples: Vec<ThetaSample>,
    /// First moments of all three channels.
    pub eta: [f64; 3],
    /// `(n, η⁽ⁿ⁾)` for the counted channel.
    pub cumulants: Vec<(usize, f64)>,
}

/// θ on `grid`, all first moments, and cumulants `1..=max_order` of `channel`.
pub fn flow_stats(
    channel: Channel,
    sys: &LinearSystem,
    grid: &[f64],
    max_order: usize,
    h: f64,
) -> Result<FlowStats, FcsError> {
    let theta_samples = theta_samples(channel, sys, grid)?;
    let eta = flows(sys)?;
    let cumulants = (1..=max_order)
        .map(|n| flow_cumulant(channel, n, sys, h).map(|c| (n, c)))
        .collect::<Result<_, _>>()?;
    Ok(FlowStats { channel, theta_samples, eta, cumulants })
}

/// Candidate meanings of the occupancy symbols in the simplified flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplifiedReading {
    /// `(N̄₁, N̄₂, N̄₃)`.
    BathOccupancies,
    /// `(n̄₁, n̄₂, N̄₃)` from the steady state.
    SystemOccupancies,
    /// `(m̄₁, m̄₂, m̄₃)` with `m̄₃ = N̄₃`.
    DisconnectedBaselines,
}

impl SimplifiedReading {
    pub const ALL: [SimplifiedReading; 3] = [
        SimplifiedReading::BathOccupancies,
        SimplifiedReading::SystemOccupancies,
        SimplifiedReading::DisconnectedBaselines,
    ];
}

/// The reading selected by [`resolve_simplified_reading`] against the trace
/// formula; see the `simplified_reading_is_resolved` test.
pub const SIMPLIFIED_READING: SimplifiedReading = SimplifiedReading::DisconnectedBaselines;

fn check_simplified(p: &CascadedParams) -> Result<f64, FcsError> {
    p.validate()?;
    let kappa = p.common_rate().map_err(|e| FcsError::UnsupportedParams(e.to_string()))?;
    if p.f != Complex64::new(0.0, 0.0) {
        return Err(FcsError::UnsupportedParams(format!("F = {}", p.f)));
    }
    Ok(kappa)
}

/// Simplified flows under an explicit symbol reading:
///
/// ```text
/// η₁ = κ(a₃ - a₁)
/// η₂ = κ[L(a₁ - a₃) + (a₃ - a₂)]
/// η₃ = κ[L(a₃ - a₁) + (a₁ - a₃) + (a₂ - a₃)],   L = 2κ²/(4κ² + Δ²)
/// ```
pub fn simplified_flows_with(p: &CascadedParams, reading: SimplifiedReading) -> Result<[f64; 3], FcsError> {
    let k = check_simplified(p)?;
    let [n1, n2, n3] = p.nbar();
    let (a1, a2) = match reading {
        SimplifiedReading::BathOccupancies => (n1, n2),
        SimplifiedReading::SystemOccupancies => {
            let occ = crate::cascaded::steady_state(p)?.occupations();
            (occ.n1, occ.n2)
        }
        SimplifiedReading::DisconnectedBaselines => (0.5 * (n1 + n3), 0.5 * (n2 + n3)),
    };
    let a3 = n3;
    let d = p.detuning();
    let l = 2.0 * k * k / (4.0 * k * k + d * d);
    let eta1 = k * (a3 - a1);
    let eta2 = k * (l * (a1 - a3) + (a3 - a2));
    Ok([eta1, eta2, -eta1 - eta2])
}

/// Simplified flows under [`SIMPLIFIED_READING`].
pub fn simplified_flows(p: &CascadedParams) -> Result<[f64; 3], FcsError> {
    simplified_flows_with(p, SIMPLIFIED_READING)
}

/// Select the reading whose simplified flows agree with the trace formula on
/// every sample to `rel_tol` (relative to the largest flow, floored at 1).
pub fn resolve_simplified_reading(samples: &[CascadedParams], rel_tol: f64) -> Result<SimplifiedReading, FcsError> {
    if samples.is_empty() {
        return Err(FcsError::InvalidInput("no samples".into()));
    }
    let mut matching = Vec::new();
    for reading in SimplifiedReading::ALL {
        let mut ok = true;
        for p in samples {
            let sys = crate::cascaded::build_system(p)?;
            let exact = flows(&sys)?;
            let simple = simplified_flows_with(p, reading)?;
            let scale = exact.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            if exact.iter().zip(simple).any(|(a, b)| (a - b).abs() > rel_tol * scale) {
                ok = false;
                break;
            }
        }
        if ok {
            matching.push(reading);
        }
    }
    match matching.as_slice() {
        [] => Err(FcsError::NoMatchingReading),
        [one] => Ok(*one),
        _ => Err(FcsError::AmbiguousReading(matching)),
    }
}
