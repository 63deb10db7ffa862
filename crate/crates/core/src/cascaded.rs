//! Two oscillators, two local baths and one shared bath.
//!
//! The amplitude drift is
//!
//! ```text
//! M = [ -iω₁ - (γ₁+κ₁)/2          -iF                 ]
//!     [ -iF* - √(γ₁γ₂) e^{iφ}      -iω₂ - (γ₂+κ₂)/2   ]
//! ```
//!
//! with noise entering through `u₁ = (√κ₁, 0)`, `u₂ = (0, √κ₂)` and the
//! common channel `u₃ = (√γ₁, √γ₂ e^{iφ})`. Each bath `j` contributes
//! `(N̄ⱼ + ½)·R(uⱼ)R(uⱼ)ᵀ` to the quadrature noise matrix.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    embed_drift, embedding_gram, solve_lyapunov, stability_margin, ComplexMatrix2,
    ComplexVector2, LinalgError, RealMatrix4,
};

/// Relative tolerance used to decide that the four rates coincide.
pub const EQUAL_RATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("drift is not stable (stability margin {margin:e})")]
    Unstable { margin: f64 },
    #[error("closed forms need kappa1 = kappa2 = gamma1 = gamma2: {0}")]
    UnsupportedParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Parameters of the cascaded two-oscillator model. Rates share one
/// user-chosen angular-frequency unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadedParams {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Hopping phase, shared by the drift and the common-channel coupling.
    pub phi: f64,
    /// Residual coherent hopping; zero for perfect non-reciprocity.
    pub f: Complex64,
    pub nbar1: f64,
    pub nbar2: f64,
    pub nbar3: f64,
}

impl CascadedParams {
    /// Equal-rate configuration `κ₁ = κ₂ = γ₁ = γ₂ = κ` with `ω₁ = 0`, `ω₂ = Δ`.
    pub fn equal_rate(kappa: f64, delta: f64, phi: f64, f: Complex64, nbar: [f64; 3]) -> Self {
        Self {
            omega1: 0.0,
            omega2: delta,
            kappa1: kappa,
            kappa2: kappa,
            gamma1: kappa,
            gamma2: kappa,
            phi,
            f,
            nbar1: nbar[0],
            nbar2: nbar[1],
            nbar3: nbar[2],
        }
    }

    /// `Δ = ω₂ - ω₁`.
    pub fn detuning(&self) -> f64 {
        self.omega2 - self.omega1
    }

    /// Collective damping rate `κ₃ = γ₁ + γ₂`.
    pub fn kappa3(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    pub fn nbar(&self) -> [f64; 3] {
        [self.nbar1, self.nbar2, self.nbar3]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let reals = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("phi", self.phi),
            ("F.re", self.f.re),
            ("F.im", self.f.im),
            ("Nbar1", self.nbar1),
            ("Nbar2", self.nbar2),
            ("Nbar3", self.nbar3),
        ];
        if let Some((name, _)) = reals.iter().find(|(_, x)| !x.is_finite()) {
            return Err(ModelError::InvalidParams(format!("{name} is not finite")));
        }
        for (name, x) in &reals[2..6] {
            if *x < 0.0 {
                return Err(ModelError::InvalidParams(format!("{name} = {x} is negative")));
            }
        }
        for (name, x) in &reals[9..] {
            if *x < 0.0 {
                return Err(ModelError::InvalidParams(format!("{name} = {x} is negative")));
            }
        }
        Ok(())
    }

    /// The common rate `κ` when `κ₁ = κ₂ = γ₁ = γ₂ > 0`.
    pub fn common_rate(&self) -> Result<f64, ModelError> {
        let k = self.kappa1;
        let rates = [self.kappa2, self.gamma1, self.gamma2];
        if k > 0.0 && rates.iter().all(|r| (r - k).abs() <= EQUAL_RATE_TOL * k) {
            Ok(k)
        } else {
            Err(ModelError::UnsupportedParams(format!(
                "kappa1={}, kappa2={}, gamma1={}, gamma2={}",
                self.kappa1, self.kappa2, self.gamma1, self.gamma2
            )))
        }
    }
}

/// Bath channel label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Local bath of oscillator 1.
    Local1,
    /// Local bath of oscillator 2.
    Local2,
    /// Shared bath.
    Common,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Local1, Channel::Local2, Channel::Common];

    pub fn index(self) -> usize {
        match self {
            Channel::Local1 => 1,
            Channel::Local2 => 2,
            Channel::Common => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(Channel::Local1),
            2 => Some(Channel::Local2),
            3 => Some(Channel::Common),
            _ => None,
        }
    }
}

/// Coupling of one bath to the two modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub channel: Channel,
    pub u: ComplexVector2,
    /// `‖u‖²`.
    pub rate: f64,
    pub nbar: f64,
}

impl ChannelSpec {
    pub fn new(channel: Channel, u: ComplexVector2, nbar: f64) -> Self {
        let rate = u[0].norm_sqr() + u[1].norm_sqr();
        Self { channel, u, rate, nbar }
    }

    /// Noise contribution `(N̄ + ½)·R(u)R(u)ᵀ`.
    pub fn noise(&self) -> RealMatrix4 {
        embedding_gram(&self.u).scale(self.nbar + 0.5)
    }
}

/// Linear Langevin system in amplitude and quadrature form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    pub drift: ComplexMatrix2,
    pub quad_drift: RealMatrix4,
    pub channels: [ChannelSpec; 3],
    pub noise: RealMatrix4,
}

impl LinearSystem {
    pub fn from_parts(drift: ComplexMatrix2, channels: [ChannelSpec; 3]) -> Self {
        let noise = channels
            .iter()
            .fold(RealMatrix4::zeros(), |acc, ch| acc + ch.noise());
        Self {
            drift,
            quad_drift: embed_drift(&drift),
            channels,
            noise,
        }
    }

    pub fn channel(&self, channel: Channel) -> &ChannelSpec {
        &self.channels[channel.index() - 1]
    }

    pub fn stability_margin(&self) -> f64 {
        stability_margin(&self.drift)
    }

    /// Steady-state covariance; fails when the drift is not strictly stable.
    pub fn steady_state(&self) -> Result<CovarianceMatrix, ModelError> {
        let margin = self.stability_margin();
        if !(margin < 0.0) {
            return Err(ModelError::Unstable { margin });
        }
        let v = solve_lyapunov(&self.quad_drift, &self.noise)?;
        Ok(CovarianceMatrix(v))
    }
}

pub fn build_system(p: &CascadedParams) -> Result<LinearSystem, ModelError> {
    p.validate()?;
    let i = Complex64::i();
    let hop = Complex64::from_polar((p.gamma1 * p.gamma2).sqrt(), p.phi);
    let drift = ComplexMatrix2::new(
        -i * p.omega1 - (p.gamma1 + p.kappa1) / 2.0,
        -i * p.f,
        -i * p.f.conj() - hop,
        -i * p.omega2 - (p.gamma2 + p.kappa2) / 2.0,
    );
    let zero = Complex64::new(0.0, 0.0);
    let channels = [
        ChannelSpec::new(
            Channel::Local1,
            [Complex64::new(p.kappa1.sqrt(), 0.0), zero],
            p.nbar1,
        ),
        ChannelSpec::new(
            Channel::Local2,
            [zero, Complex64::new(p.kappa2.sqrt(), 0.0)],
            p.nbar2,
        ),
        ChannelSpec::new(
            Channel::Common,
            [
                Complex64::new(p.gamma1.sqrt(), 0.0),
                Complex64::from_polar(p.gamma2.sqrt(), p.phi),
            ],
            p.nbar3,
        ),
    ];
    Ok(LinearSystem::from_parts(drift, channels))
}

/// Symmetric quadrature covariance `V_ij = ½⟨{q_i, q_j}⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(pub RealMatrix4);

impl CovarianceMatrix {
    pub fn matrix(&self) -> &RealMatrix4 {
        &self.0
    }

    /// Mean occupations `n_i = ½(V[x_i,x_i] + V[p_i,p_i] - 1)`.
    pub fn occupations(&self) -> Occupations {
        occupations(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupations {
    pub n1: f64,
    pub n2: f64,
    /// Set when a slightly negative value was clamped to zero.
    pub clamped: bool,
}

pub fn occupations(v: &CovarianceMatrix) -> Occupations {
    let raw = |mode: usize| 0.5 * (v.0.block_trace(mode) - 1.0);
    let (n1, n2) = (raw(0), raw(1));
    Occupations {
        n1: n1.max(0.0),
        n2: n2.max(0.0),
        clamped: n1 < 0.0 || n2 < 0.0,
    }
}

pub fn steady_state(p: &CascadedParams) -> Result<CovarianceMatrix, ModelError> {
    build_system(p)?.steady_state()
}

/// Pieces shared by the equal-rate closed forms, with `θ = φ`.
struct EqualRateTerms {
    kappa: f64,
    delta: f64,
    abs_f2: f64,
    re: f64,
    im: f64,
    denom: f64,
}

impl EqualRateTerms {
    fn new(p: &CascadedParams) -> Result<Self, ModelError> {
        p.validate()?;
        let kappa = p.common_rate()?;
        let delta = p.detuning();
        let z = p.f * Complex64::from_polar(1.0, p.phi);
        let (re, im) = (z.re, z.im);
        let abs_f2 = p.f.norm_sqr();
        let denom = 3.0 * abs_f2 + 4.0 * kappa * (kappa + im) + im * im + delta * delta;
        Ok(Self { kappa, delta, abs_f2, re, im, denom })
    }
}

/// Closed-form steady-state occupations for `κ₁ = κ₂ = γ₁ = γ₂ = κ`.
pub fn closed_form_occupations(p: &CascadedParams) -> Result<(f64, f64), ModelError> {
    let t = EqualRateTerms::new(p)?;
    let [n1b, n2b, n3b] = p.nbar();
    let (k, d, f2, re, im) = (t.kappa, t.delta, t.abs_f2, t.re, t.im);
    let lor = 4.0 * k * k + d * d;
    let sum = n1b + n2b + n3b;

    let n1 = (2.0 * f2 * sum + re * d * (n1b - n3b) + 2.0 * im * im * n3b
        + 2.0 * im * k * (n1b + 3.0 * n3b)
        + lor * (n1b + n3b))
        / (2.0 * t.denom);
    let n2 = (2.0 * f2 * sum - re * d * (n2b - n3b) + 2.0 * im * im * n3b
        + 2.0 * im * k * (n2b + 3.0 * n3b)
        + lor * (n2b + n3b))
        / (2.0 * t.denom)
        + k * (2.0 * im + k) * (n1b - n3b) / t.denom;
    Ok((n1, n2))
}

/// Disconnected baseline `m̄ᵢ = ½(N̄ᵢ + N̄₃)`, the `|Δ| → ∞` limit.
pub fn disconnected_baseline(p: &CascadedParams) -> Result<(f64, f64), ModelError> {
    p.validate()?;
    p.common_rate()?;
    Ok((0.5 * (p.nbar1 + p.nbar3), 0.5 * (p.nbar2 + p.nbar3)))
}

/// `Δn₂ = 2κ²/(4κ²+Δ²)·(m̄₁ - m̄₃)` at `F = 0`.
pub fn delta_n2_from_baselines(kappa: f64, delta: f64, m1: f64, m3: f64) -> f64 {
    2.0 * kappa * kappa / (4.0 * kappa * kappa + delta * delta) * (m1 - m3)
}

/// `Δn₂ = κ²/(4κ²+Δ²)·(N̄₁ - N̄₃)` at `F = 0`.
pub fn delta_n2_from_baths(kappa: f64, delta: f64, nbar1: f64, nbar3: f64) -> f64 {
    kappa * kappa / (4.0 * kappa * kappa + delta * delta) * (nbar1 - nbar3)
}

/// Occupations compared against the disconnected baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationReport {
    pub n1: f64,
    pub n2: f64,
    pub m1: f64,
    pub m2: f64,
    pub dn1: f64,
    pub dn2: f64,
}

/// Closed-form `Δnᵢ = n̄ᵢ - m̄ᵢ`. The differences come from their own
/// formulas and `n̄ᵢ` is reported as `m̄ᵢ + Δnᵢ`.
///
/// The `(N̄ᵢ - N̄₃)` bracket carries `Im{Fe^{iφ}}·(Im{Fe^{iφ}} + 2κ)`, which is
/// what subtracting `m̄ᵢ` from [`closed_form_occupations`] gives.
pub fn delta_n(p: &CascadedParams) -> Result<OccupationReport, ModelError> {
    let t = EqualRateTerms::new(p)?;
    let (m1, m2) = disconnected_baseline(p)?;
    let [n1b, n2b, n3b] = p.nbar();
    let (dn1, dn2) = if p.f == Complex64::new(0.0, 0.0) {
        (0.0, delta_n2_from_baselines(t.kappa, t.delta, m1, n3b))
    } else {
        let (k, d, f2, re, im) = (t.kappa, t.delta, t.abs_f2, t.re, t.im);
        let two_den = 2.0 * t.denom;
        let dn1 = (f2 * (-n1b + 2.0 * n2b - n3b)
            - (im * (im + 2.0 * k) - re * d) * (n1b - n3b))
            / two_den;
        let dn2 = (f2 * (2.0 * n1b - n2b - n3b)
            - (im * (im + 2.0 * k) + re * d) * (n2b - n3b)
            + 2.0 * k * (2.0 * im + k) * (n1b - n3b))
            / two_den;
        (dn1, dn2)
    };
    Ok(OccupationReport {
        n1: m1 + dn1,
        n2: m2 + dn2,
        m1,
        m2,
        dn1,
        dn2,
    })
}

/// `Δnᵢ` with `n̄ᵢ` from the Lyapunov steady state.
pub fn delta_n_numeric(p: &CascadedParams) -> Result<OccupationReport, ModelError> {
    let (m1, m2) = disconnected_baseline(p)?;
    let occ = steady_state(p)?.occupations();
    Ok(OccupationReport {
        n1: occ.n1,
        n2: occ.n2,
        m1,
        m2,
        dn1: occ.n1 - m1,
        dn2: occ.n2 - m2,
    })
}
