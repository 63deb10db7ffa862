//! Two driven cavities coupled through one mechanical mode.
//!
//! After linearization and the rotating-wave approximation the mechanics is
//! eliminated, leaving a two-cavity drift that depends on the mechanical
//! susceptibility `χ_m(ω) = 1/[γ_m/2 - i(ω - ω_m)]`. Freezing `χ_m` at the
//! evaluation frequency `Ω` maps the platform onto [`CascadedParams`].

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::cascaded::{build_system, CascadedParams, Channel, ChannelSpec, LinearSystem, ModelError};
use crate::linalg::{ComplexMatrix2, ComplexVector2};

/// Minimum intracavity amplitude for which the linearization is trusted.
pub const LINEARIZATION_MIN_AMPLITUDE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptomechError {
    #[error("invalid optomechanical parameters: {0}")]
    InvalidParams(String),
    #[error("cavity {cavity} has zero linewidth and zero detuning")]
    DegenerateCavity { cavity: usize },
    #[error("G1*G2 = 0: no dissipative link to design against")]
    NoCoupling,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Optomechanical hardware parameters in one angular-frequency unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmParams {
    pub omega_m: f64,
    pub gamma_m: f64,
    /// Drive detunings `Δᵢ = ωᵢ - ω_d`.
    pub delta1: f64,
    pub delta2: f64,
    /// Total cavity linewidths.
    pub kappa1: f64,
    pub kappa2: f64,
    /// Extrinsic parts of the linewidths; the intrinsic part is the rest.
    pub kappa_ext1: f64,
    pub kappa_ext2: f64,
    /// Direct photon hopping, real.
    pub j: f64,
    /// Phase of `G₂` relative to the real `G₁`.
    pub phi: f64,
    pub g1: f64,
    pub g2: f64,
    /// Evaluation frequency `Ω`; `None` means `ω_m`.
    pub omega_eval: Option<f64>,
    pub nbar1: f64,
    pub nbar2: f64,
    pub nbar_m: f64,
    /// Bare cavity resonance, informational only.
    pub cavity_frequency: Option<f64>,
}

impl OmParams {
    pub fn eval_frequency(&self) -> f64 {
        self.omega_eval.unwrap_or(self.omega_m)
    }

    pub fn kappa_int1(&self) -> f64 {
        self.kappa1 - self.kappa_ext1
    }

    pub fn kappa_int2(&self) -> f64 {
        self.kappa2 - self.kappa_ext2
    }

    pub fn validate(&self) -> Result<(), OptomechError> {
        let fields = [
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("Delta1", self.delta1),
            ("Delta2", self.delta2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa_ext1", self.kappa_ext1),
            ("kappa_ext2", self.kappa_ext2),
            ("J", self.j),
            ("phi", self.phi),
            ("G1", self.g1),
            ("G2", self.g2),
            ("Omega", self.eval_frequency()),
            ("Nbar1", self.nbar1),
            ("Nbar2", self.nbar2),
            ("Nbar_m", self.nbar_m),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, x)| !x.is_finite()) {
            return Err(OptomechError::InvalidParams(format!("{name} is not finite")));
        }
        if !(self.gamma_m > 0.0) {
            return Err(OptomechError::InvalidParams("gamma_m must be > 0".into()));
        }
        let non_negative = ["kappa1", "kappa2", "kappa_ext1", "kappa_ext2", "G1", "G2", "Nbar1", "Nbar2", "Nbar_m"];
        for (name, x) in fields.iter().filter(|(n, _)| non_negative.contains(n)) {
            if *x < 0.0 {
                return Err(OptomechError::InvalidParams(format!("{name} = {x} is negative")));
            }
        }
        if self.kappa_ext1 > self.kappa1 || self.kappa_ext2 > self.kappa2 {
            return Err(OptomechError::InvalidParams(
                "extrinsic linewidth exceeds total linewidth".into(),
            ));
        }
        Ok(())
    }
}

/// Bath occupation seen by a cavity with split losses:
/// `(κ_ext·N̄_ext + κ_int·N̄_int)/κ`.
pub fn combined_occupation(kappa_ext: f64, nbar_ext: f64, kappa_int: f64, nbar_int: f64) -> f64 {
    let total = kappa_ext + kappa_int;
    if total == 0.0 {
        return 0.0;
    }
    (kappa_ext * nbar_ext + kappa_int * nbar_int) / total
}

/// Microwave electromechanical operating point (rates in rad/s).
///
/// `φ = π/2` is the non-reciprocal phase on mechanical resonance; the quoted
/// `J = 2π × 1 MHz` sits about 2% above the design value `2G²/γ_m`.
pub fn preset_microwave() -> OmParams {
    let two_pi = 2.0 * PI;
    let omega_m = two_pi * 6e6;
    OmParams {
        omega_m,
        gamma_m: two_pi * 100.0,
        delta1: omega_m,
        delta2: omega_m,
        kappa1: two_pi * 2e6,
        kappa2: two_pi * 2e6,
        kappa_ext1: two_pi * 2e6,
        kappa_ext2: two_pi * 2e6,
        j: two_pi * 1e6,
        phi: FRAC_PI_2,
        g1: two_pi * 7e3,
        g2: two_pi * 7e3,
        omega_eval: Some(omega_m),
        nbar1: 0.0,
        nbar2: 0.0,
        nbar_m: 0.5,
        cavity_frequency: Some(two_pi * 5e9),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibility {
    /// `χ_m(ω)`.
    pub chi: Complex64,
    /// `χ̃_m(ω) = χ_m(ω)·|χ_m(Ω)|/χ_m(Ω)`.
    pub chi_tilde: Complex64,
    /// `ν = arg χ_m(Ω)`.
    pub nu: f64,
}

fn chi_at(omega: f64, p: &OmParams) -> Complex64 {
    Complex64::new(p.gamma_m / 2.0, -(omega - p.omega_m)).inv()
}

pub fn mech_susceptibility(omega: f64, p: &OmParams) -> Susceptibility {
    let chi = chi_at(omega, p);
    let reference = chi_at(p.eval_frequency(), p);
    let nu = reference.arg();
    Susceptibility {
        chi,
        chi_tilde: chi * Complex64::from_polar(1.0, -nu),
        nu,
    }
}

/// Cavity drive and bare optomechanical couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub g1: f64,
    pub g2: f64,
    pub e1: f64,
    pub e2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    /// `|gᵢ αᵢ|`.
    pub g1: f64,
    pub g2: f64,
    /// `arg(G₂) - arg(G₁)`, the phase absorbed into `φ`.
    pub phi: f64,
    /// Both `|αᵢ| ≥` [`LINEARIZATION_MIN_AMPLITUDE`].
    pub valid: bool,
}

/// Classical cavity amplitudes `αᵢ = ℰᵢ/(κᵢ/2 + iΔᵢ)`, so that
/// `|αᵢ| = 2|ℰᵢ|/√(4Δᵢ² + κᵢ²)`. The static mechanical shift of `Δᵢ` is
/// neglected.
pub fn linearize(d: &DriveSpec, p: &OmParams) -> Result<Linearization, OptomechError> {
    let amplitude = |cavity: usize, e: f64, kappa: f64, delta: f64| {
        if 4.0 * delta * delta + kappa * kappa == 0.0 {
            Err(OptomechError::DegenerateCavity { cavity })
        } else {
            Ok(e / Complex64::new(kappa / 2.0, delta))
        }
    };
    let alpha1 = amplitude(1, d.e1, p.kappa1, p.delta1)?;
    let alpha2 = amplitude(2, d.e2, p.kappa2, p.delta2)?;
    let big1 = alpha1 * d.g1;
    let big2 = alpha2 * d.g2;
    let mut phi = big2.arg() - big1.arg();
    if phi > PI {
        phi -= 2.0 * PI;
    } else if phi <= -PI {
        phi += 2.0 * PI;
    }
    Ok(Linearization {
        alpha1,
        alpha2,
        g1: big1.norm(),
        g2: big2.norm(),
        phi,
        valid: alpha1.norm() >= LINEARIZATION_MIN_AMPLITUDE
            && alpha2.norm() >= LINEARIZATION_MIN_AMPLITUDE,
    })
}

/// Effective two-cavity drift at frequency `omega` and the gauge-transformed
/// mechanical noise coupling `(G₁√γ_m χ̃, G₂√γ_m χ̃ e^{iφ})`.
pub fn build_om_drift(p: &OmParams, omega: f64) -> (ComplexMatrix2, ComplexVector2) {
    let s = mech_susceptibility(omega, p);
    let i = Complex64::i();
    let chi = s.chi;
    let g12 = p.g1 * p.g2;
    let drift = ComplexMatrix2::new(
        -i * p.delta1 - p.kappa1 / 2.0 - chi * (p.g1 * p.g1),
        -i * p.j - chi * g12 * Complex64::from_polar(1.0, -p.phi),
        -i * p.j - chi * g12 * Complex64::from_polar(1.0, p.phi),
        -i * p.delta2 - p.kappa2 / 2.0 - chi * (p.g2 * p.g2),
    );
    let root = p.gamma_m.sqrt();
    let coupling = [
        s.chi_tilde * (p.g1 * root),
        s.chi_tilde * Complex64::from_polar(p.g2 * root, p.phi),
    ];
    (drift, coupling)
}

/// Mechanical noise coupling before the gauge transformation,
/// `(-iG₁√γ_m χ, -iG₂√γ_m χ e^{iφ})`.
pub fn raw_mechanical_coupling(p: &OmParams, omega: f64) -> ComplexVector2 {
    let chi = chi_at(omega, p);
    let minus_i = -Complex64::i();
    let root = p.gamma_m.sqrt();
    [
        minus_i * chi * (p.g1 * root),
        minus_i * chi * Complex64::from_polar(p.g2 * root, p.phi),
    ]
}

/// The frozen-susceptibility linear system evaluated at `Ω`, written in the
/// optomechanical variables.
pub fn om_system(p: &OmParams) -> Result<LinearSystem, OptomechError> {
    p.validate()?;
    let (drift, mech) = build_om_drift(p, p.eval_frequency());
    let zero = Complex64::new(0.0, 0.0);
    Ok(LinearSystem::from_parts(
        drift,
        [
            ChannelSpec::new(Channel::Local1, [Complex64::new(p.kappa1.sqrt(), 0.0), zero], p.nbar1),
            ChannelSpec::new(Channel::Local2, [zero, Complex64::new(p.kappa2.sqrt(), 0.0)], p.nbar2),
            ChannelSpec::new(Channel::Common, mech, p.nbar_m),
        ],
    ))
}

/// Cascaded parameters equivalent to `p` with `χ_m` frozen at `Ω`.
pub fn map_to_cascaded(p: &OmParams) -> CascadedParams {
    let chi = chi_at(p.eval_frequency(), p);
    let i = Complex64::i();
    CascadedParams {
        omega1: p.delta1 + p.g1 * p.g1 * chi.im,
        omega2: p.delta2 + p.g2 * p.g2 * chi.im,
        kappa1: p.kappa1,
        kappa2: p.kappa2,
        gamma1: 2.0 * p.g1 * p.g1 * chi.re,
        gamma2: 2.0 * p.g2 * p.g2 * chi.re,
        phi: p.phi,
        f: p.j - i * chi * (p.g1 * p.g2) * Complex64::from_polar(1.0, -p.phi),
        nbar1: p.nbar1,
        nbar2: p.nbar2,
        nbar3: p.nbar_m,
    }
}

/// Mapped cascaded system, validated.
pub fn mapped_system(p: &OmParams) -> Result<LinearSystem, OptomechError> {
    p.validate()?;
    Ok(build_system(&map_to_cascaded(p))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub j_star: f64,
    pub phi_star: f64,
    /// `|F|` of the mapped system at `(J*, φ*)`.
    pub residual: f64,
}

/// Real hopping and phase that null the mapped `F`:
/// `J* = G₁G₂|χ_m(Ω)|`, `φ* = arg(iχ_m(Ω))`.
pub fn design_nonreciprocal(p: &OmParams) -> Result<Design, OptomechError> {
    if !(p.g1 * p.g2 > 0.0) {
        return Err(OptomechError::NoCoupling);
    }
    let chi = chi_at(p.eval_frequency(), p);
    let j_star = p.g1 * p.g2 * chi.norm();
    let phi_star = (Complex64::i() * chi).arg();
    let designed = OmParams { j: j_star, phi: phi_star, ..*p };
    let residual = map_to_cascaded(&designed).f.norm();
    Ok(Design { j_star, phi_star, residual })
}

/// `p` with `J` and `φ` replaced by the non-reciprocal design point.
pub fn apply_design(p: &OmParams) -> Result<OmParams, OptomechError> {
    let d = design_nonreciprocal(p)?;
    Ok(OmParams { j: d.j_star, phi: d.phi_star, ..*p })
}
