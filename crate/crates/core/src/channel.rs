//! Rician-shadowed satellite-to-ground channels.
//!
//! A user's channel to the `L` feeds is `h = Z·t + h'` where the LOS amplitude
//! `Z` is Nakagami-m with mean power `Ω` and is shared by every antenna, `t`
//! carries i.i.d. uniform phases, and `h'` is circularly symmetric complex
//! Gaussian scatter with per-element power `2β`.
//!
//! Complex Gaussian convention used throughout the crate: a variate of
//! variance `v` has independent real and imaginary parts of variance `v/2`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The `(m, β, Ω)` triple of one propagation scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowingParams {
    /// Nakagami shape of the LOS amplitude.
    pub m: f64,
    /// Half the scattering power; each complex scatter element has variance `2β`.
    pub beta: f64,
    /// Average LOS power.
    pub omega: f64,
}

impl ShadowingParams {
    /// Frequent heavy shadowing.
    pub const FHS: ShadowingParams = ShadowingParams {
        m: 0.739,
        beta: 0.063,
        omega: 8.97e-4,
    };
    /// Average shadowing.
    pub const AS: ShadowingParams = ShadowingParams {
        m: 10.1,
        beta: 0.126,
        omega: 0.835,
    };
    /// Infrequent light shadowing.
    pub const ILS: ShadowingParams = ShadowingParams {
        m: 19.4,
        beta: 0.158,
        omega: 1.29,
    };

    pub fn new(m: f64, beta: f64, omega: f64) -> Result<Self> {
        let params = ShadowingParams { m, beta, omega };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::param(
                "m",
                format!("must be positive and finite, got {}", self.m),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("must be nonnegative, got {}", self.beta)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::param(
                "omega",
                format!("must be nonnegative, got {}", self.omega),
            ));
        }
        Ok(())
    }

    /// Mean power of one channel element, `2β + Ω`.
    pub fn mean_power(&self) -> f64 {
        2.0 * self.beta + self.omega
    }

    /// Variance of `|h_ℓ|²` for a single element.
    pub fn element_power_variance(&self) -> f64 {
        let (b, o) = (self.beta, self.omega);
        4.0 * b * b + 4.0 * b * o + o * o / self.m
    }

    /// `E[|h_ℓ|⁴]`.
    pub fn element_fourth_moment(&self) -> f64 {
        self.element_power_variance() + self.mean_power().powi(2)
    }
}

/// Named presets for the three shadowing scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Fhs,
    As,
    Ils,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Fhs, Scenario::As, Scenario::Ils];

    pub fn params(self) -> ShadowingParams {
        match self {
            Scenario::Fhs => ShadowingParams::FHS,
            Scenario::As => ShadowingParams::AS,
            Scenario::Ils => ShadowingParams::ILS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fhs => "FHS",
            Scenario::As => "AS",
            Scenario::Ils => "ILS",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FHS" => Ok(Scenario::Fhs),
            "AS" => Ok(Scenario::As),
            "ILS" => Ok(Scenario::Ils),
            other => Err(Error::param(
                "scenario",
                format!("unknown preset `{other}`, expected FHS, AS or ILS"),
            )),
        }
    }
}

/// One user's channel realisation for a coherence block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserChannel {
    /// Nakagami LOS amplitude `Z`, common to all antennas.
    pub los_amplitude: f64,
    /// Per-antenna LOS phases in `[0, 2π)`.
    pub los_phases: Vec<f64>,
    /// Scatter component `h'`.
    pub scatter: Vec<Complex64>,
    /// Composite channel `Z·exp(jθ_ℓ) + h'_ℓ`.
    pub h: Vec<Complex64>,
}

impl UserChannel {
    pub fn antennas(&self) -> usize {
        self.h.len()
    }
}

/// Transmitter-side estimate of a user channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedChannel {
    pub h_hat: Vec<Complex64>,
    pub sigma_e2: f64,
}

/// Draw a circularly symmetric complex Gaussian of total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Nakagami-m amplitude with `E[Z²] = omega`, drawn as the square root of a
/// Gamma(m, Ω/m) variate.
pub fn sample_nakagami<R: Rng + ?Sized>(m: f64, omega: f64, rng: &mut R) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::param("m", format!("Nakagami shape must be positive, got {m}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::param(
            "omega",
            format!("Nakagami spread must be positive, got {omega}"),
        ));
    }
    let gamma = Gamma::new(m, omega / m).map_err(|e| Error::param("m", e.to_string()))?;
    Ok(gamma.sample(rng).sqrt())
}

/// Sample one user's channel over `l` antennas.
///
/// Draw order: amplitude, then for each antenna its phase followed by the
/// real and imaginary scatter parts.
pub fn sample_channel<R: Rng + ?Sized>(params: &ShadowingParams, l: usize, rng: &mut R) -> Result<UserChannel> {
    if l == 0 {
        return Err(Error::param("L", "antenna count must be at least 1"));
    }
    params.validate()?;
    let z = if params.omega > 0.0 {
        sample_nakagami(params.m, params.omega, rng)?
    } else {
        0.0
    };
    let scatter_var = 2.0 * params.beta;
    let mut los_phases = Vec::with_capacity(l);
    let mut scatter = Vec::with_capacity(l);
    let mut h = Vec::with_capacity(l);
    for _ in 0..l {
        let theta = rng.gen::<f64>() * TAU;
        let s = complex_gaussian(scatter_var, rng);
        h.push(Complex64::from_polar(z, theta) + s);
        los_phases.push(theta);
        scatter.push(s);
    }
    Ok(UserChannel {
        los_amplitude: z,
        los_phases,
        scatter,
        h,
    })
}

/// Add i.i.d. `CN(0, σ_e²)` estimation error to a channel. No randomness is
/// consumed when `sigma_e2` is zero.
pub fn apply_estimation_error<R: Rng + ?Sized>(
    channel: &UserChannel,
    sigma_e2: f64,
    rng: &mut R,
) -> Result<EstimatedChannel> {
    if !(sigma_e2 >= 0.0 && sigma_e2.is_finite()) {
        return Err(Error::param(
            "sigma_e2",
            format!("estimation error variance must be nonnegative, got {sigma_e2}"),
        ));
    }
    let h_hat = if sigma_e2 == 0.0 {
        channel.h.clone()
    } else {
        channel.h.iter().map(|&h| h + complex_gaussian(sigma_e2, rng)).collect()
    };
    Ok(EstimatedChannel { h_hat, sigma_e2 })
}

/// Elevation (degrees) of a satellite at `altitude_km` seen from a terminal
/// `horizontal_distance_km` from the sub-satellite point.
pub fn elevation_angle(horizontal_distance_km: f64, altitude_km: f64) -> Result<f64> {
    if !(altitude_km > 0.0) {
        return Err(Error::param("altitude_km", "must be positive"));
    }
    if !(horizontal_distance_km >= 0.0) {
        return Err(Error::param("horizontal_distance_km", "must be nonnegative"));
    }
    Ok(altitude_km.atan2(horizontal_distance_km).to_degrees())
}

/// LOS probability `exp(-η·cot ζ)` at elevation `elevation_deg`.
pub fn los_probability(eta: f64, elevation_deg: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::param("eta", format!("must be positive, got {eta}")));
    }
    if !(elevation_deg > 0.0 && elevation_deg <= 90.0) {
        return Err(Error::Domain(format!(
            "elevation must lie in (0, 90] degrees, got {elevation_deg}"
        )));
    }
    if elevation_deg == 90.0 {
        return Ok(1.0);
    }
    let cot = 1.0 / elevation_deg.to_radians().tan();
    Ok((-eta * cot).exp())
}

/// Mixed LOS/NLOS coverage area with the satellite at zenith over its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicScenario {
    pub radius_km: f64,
    pub altitude_km: f64,
    pub eta: f64,
    pub los_params: ShadowingParams,
    pub nlos_params: ShadowingParams,
}

impl DynamicScenario {
    /// Urban cell of radius 10 km under a 600 km LEO satellite, ILS for LOS
    /// and FHS for NLOS users.
    pub fn urban_leo() -> Self {
        DynamicScenario {
            radius_km: 10.0,
            altitude_km: 600.0,
            eta: 0.35,
            los_params: ShadowingParams::ILS,
            nlos_params: ShadowingParams::FHS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_km > 0.0) {
            return Err(Error::param("radius_km", "must be positive"));
        }
        if !(self.altitude_km > 0.0) {
            return Err(Error::param("altitude_km", "must be positive"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::param("eta", "must be positive"));
        }
        self.los_params.validate()?;
        self.nlos_params.validate()
    }

    /// LOS probability averaged over users uniform on the coverage disk.
    ///
    /// With `cot ζ = r/H` and radial density `2r/D²`,
    /// `E[P] = 2(1 − e^{−aD}(1 + aD)) / (aD)²` for `a = η/H`.
    pub fn mean_los_probability(&self) -> f64 {
        let x = self.eta * self.radius_km / self.altitude_km;
        if x < 1e-4 {
            // series: 1 − 2x/3 + x²/4
            1.0 - 2.0 * x / 3.0 + x * x / 4.0
        } else {
            2.0 * (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
        }
    }

    /// Position-averaged per-element power of the estimated channel; replaces
    /// `2β + σ_e² + Ω` in the power normalisation.
    pub fn mean_estimated_power(&self, sigma_e2: f64) -> f64 {
        let p = self.mean_los_probability();
        p * (self.los_params.mean_power() + sigma_e2) + (1.0 - p) * (self.nlos_params.mean_power() + sigma_e2)
    }

    /// Position-averaged per-element power of the true channel.
    pub fn mean_power(&self) -> f64 {
        let p = self.mean_los_probability();
        p * self.los_params.mean_power() + (1.0 - p) * self.nlos_params.mean_power()
    }
}

/// Propagation state of one user in one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicChannel {
    pub state: LinkState,
    pub channel: UserChannel,
}

/// Draw the LOS/NLOS state for this block, then the channel from the
/// matching scenario.
pub fn sample_dynamic_channel<R: Rng + ?Sized>(
    scenario: &DynamicScenario,
    elevation_deg: f64,
    l: usize,
    rng: &mut R,
) -> Result<DynamicChannel> {
    let p = los_probability(scenario.eta, elevation_deg)?;
    let state = if rng.gen::<f64>() < p {
        LinkState::Los
    } else {
        LinkState::Nlos
    };
    let params = match state {
        LinkState::Los => &scenario.los_params,
        LinkState::Nlos => &scenario.nlos_params,
    };
    Ok(DynamicChannel {
        state,
        channel: sample_channel(params, l, rng)?,
    })
}

/// Planar position in km relative to the coverage centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x_km: f64,
    pub y_km: f64,
}

impl Position {
    pub fn distance_km(&self) -> f64 {
        self.x_km.hypot(self.y_km)
    }
}

/// Draw one position uniform on the disk of radius `radius_km`.
pub fn sample_user_position<R: Rng + ?Sized>(radius_km: f64, rng: &mut R) -> Position {
    let r = radius_km * rng.gen::<f64>().sqrt();
    let phi = rng.gen::<f64>() * TAU;
    Position {
        x_km: r * phi.cos(),
        y_km: r * phi.sin(),
    }
}

pub fn sample_user_positions<R: Rng + ?Sized>(radius_km: f64, count: usize, rng: &mut R) -> Result<Vec<Position>> {
    if !(radius_km > 0.0) {
        return Err(Error::param("radius_km", "must be positive"));
    }
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    Ok((0..count).map(|_| sample_user_position(radius_km, rng)).collect())
}

/// Average single-antenna downlink SNR `P_t(2β + Ω)` in dB.
pub fn snr_ave_db(p_t_linear: f64, params: &ShadowingParams) -> f64 {
    10.0 * (p_t_linear * params.mean_power()).log10()
}
