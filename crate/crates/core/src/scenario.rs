//! Resolved physical description of one link.
//!
//! All quantities here are in linear SI units; dB/dBm conversions happen
//! once at the ingestion boundary (see the CLI crate) via the helpers in
//! [`units`].

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// dB/dBm conversions, used at the ingestion boundary only.
pub mod units {
    use crate::scalar::{real, Real};

    /// dBm to linear watts.
    pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
        real::<T>(10.0).powf((dbm - real(30.0)) / real(10.0))
    }

    /// Linear watts to dBm.
    pub fn watts_to_dbm<T: Real>(watts: T) -> T {
        real::<T>(10.0) * watts.log10() + real(30.0)
    }

    /// A power loss in dB to the corresponding amplitude factor.
    pub fn loss_db_to_amplitude<T: Real>(db: T) -> T {
        real::<T>(10.0).powf(-db / real(20.0))
    }
}

/// Link distance: a fixed range, or a discrete distribution over ranges for
/// mobile deployments.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceSpec<T: Real> {
    Fixed(T),
    /// `(distance, probability)` pairs; probabilities must sum to one.
    Mixture(Vec<(T, T)>),
}

impl<T: Real> DistanceSpec<T> {
    /// The fixed distance, or the highest-probability component of a
    /// mixture (ties broken toward the shorter range).
    pub fn representative(&self) -> T {
        match self {
            DistanceSpec::Fixed(d) => *d,
            DistanceSpec::Mixture(points) => {
                let mut best = points[0];
                for &(d, p) in &points[1..] {
                    if p > best.1 || (p == best.1 && d < best.0) {
                        best = (d, p);
                    }
                }
                best.0
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistanceSpec::Fixed(d) => {
                if !(*d > T::zero()) || !d.is_finite() {
                    return Err(Error::InvalidScenario("distance must be positive".into()));
                }
            }
            DistanceSpec::Mixture(points) => {
                if points.is_empty() {
                    return Err(Error::InvalidDistribution("empty mixture".into()));
                }
                let mut total = T::zero();
                for &(d, p) in points {
                    if !(d > T::zero()) || !d.is_finite() {
                        return Err(Error::InvalidDistribution(
                            "distances must be positive".into(),
                        ));
                    }
                    if !(p > T::zero()) || !p.is_finite() {
                        return Err(Error::InvalidDistribution(
                            "probabilities must be positive".into(),
                        ));
                    }
                    total += p;
                }
                if (total - T::one()).abs() > real(1e-9) {
                    return Err(Error::InvalidDistribution(format!(
                        "probabilities sum to {}, expected 1",
                        total.to_f64().unwrap_or(f64::NAN)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Physical description of one backhaul link, in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Real> {
    /// Carrier frequency, Hz.
    pub carrier_frequency: T,
    /// Signal bandwidth, Hz.
    pub bandwidth: T,
    /// Noise power, W.
    pub noise_power_w: T,
    /// Link distance(s), m.
    pub distance: DistanceSpec<T>,
    /// Transmitter mounting height, m.
    pub h_t: T,
    /// Receiver mounting height, m.
    pub h_r: T,
    pub n_t: usize,
    pub n_r: usize,
    /// Transmit power, W.
    pub tx_power_w: T,
    /// Signed amplitude factor of the ground reflection.
    pub reflection_amplitude: T,
    /// Molecular absorption coefficient, 1/m (power attenuation
    /// `e^{-absorption * d}`).
    pub absorption: T,
    /// Per-axis cap on each terminal's footprint extent, m; drives the
    /// upper subarray-spacing bound.
    pub aperture_cap: T,
    /// Explicit spacing bounds overriding the derived ones, m.
    pub d_s_bounds: Option<(T, T)>,
    /// Evaluate only this subarray count instead of searching the feasible
    /// set.
    pub k_override: Option<usize>,
    pub seed: u64,
}

impl<T: Real> Scenario<T> {
    pub fn wavelength(&self) -> T {
        real::<T>(SPEED_OF_LIGHT) / self.carrier_frequency
    }

    /// Replaces the distance with a fixed value.
    pub fn at_distance(&self, d: T) -> Self {
        let mut s = self.clone();
        s.distance = DistanceSpec::Fixed(d);
        s
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("carrier frequency", self.carrier_frequency),
            ("bandwidth", self.bandwidth),
            ("noise power", self.noise_power_w),
            ("transmitter height", self.h_t),
            ("receiver height", self.h_r),
            ("transmit power", self.tx_power_w),
            ("aperture cap", self.aperture_cap),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!("{name} must be positive")));
            }
        }
        if self.n_t == 0 || self.n_r == 0 {
            return Err(Error::InvalidScenario("antenna counts must be positive".into()));
        }
        if !self.reflection_amplitude.is_finite() || self.reflection_amplitude.abs() >= T::one() {
            return Err(Error::InvalidScenario(
                "reflection amplitude must lie strictly inside the unit interval".into(),
            ));
        }
        if !(self.absorption >= T::zero()) {
            return Err(Error::InvalidScenario("absorption must be nonnegative".into()));
        }
        if let Some((lo, hi)) = self.d_s_bounds {
            if !(lo > T::zero()) || hi < lo {
                return Err(Error::InvalidScenario("invalid spacing bounds".into()));
            }
        }
        self.distance.validate()
    }
}

impl Scenario<f64> {
    /// The 0.3 THz wireless-backhaul defaults: 5 GHz bandwidth, -76.2 dBm
    /// noise, 30 m masts, 60 m range, 64 antennas per side, 10 dBm transmit
    /// power, a -10 dB ground reflection, and a 1 m aperture cap.
    pub fn default_backhaul() -> Self {
        Scenario {
            carrier_frequency: 3e11,
            bandwidth: 5e9,
            noise_power_w: units::dbm_to_watts(-76.2),
            distance: DistanceSpec::Fixed(60.0),
            h_t: 30.0,
            h_r: 30.0,
            n_t: 64,
            n_r: 64,
            tx_power_w: units::dbm_to_watts(10.0),
            reflection_amplitude: -units::loss_db_to_amplitude(10.0),
            absorption: 0.0,
            aperture_cap: 1.0,
            d_s_bounds: None,
            k_override: None,
            seed: 0,
        }
    }
}
