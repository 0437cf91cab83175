//! Backscatter link budget.
//!
//! The reader's carrier travels to the tag and the modulated reflection
//! travels back, so the received power falls with the fourth power of the
//! reader-tag distance:
//!
//! ```text
//! P_rx = P_tx · k · G_reader² · G_tag² · λ⁴ / (4π d)⁴
//! ```
//!
//! All arithmetic happens on linear watts; dBm appears only at the edges.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Carrier propagation speed used to turn a frequency into a wavelength.
///
/// 3e8 m/s exactly, so that 960 MHz maps to a wavelength of 0.3125 m.
pub const PROPAGATION_SPEED_M_S: f64 = 3.0e8;

/// Parameters of the reader-tag radio link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// Reader transmit power.
    pub tx_power_dbm: f64,
    /// Linear gain of the reader antenna.
    pub reader_gain: f64,
    /// Linear gain of the tag antenna.
    pub tag_gain: f64,
    pub wavelength_m: f64,
    /// Backscatter transmission loss factor `k`, in (0, 1].
    pub backscatter_loss: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 30.0,
            reader_gain: 1.0,
            tag_gain: 1.0,
            wavelength_m: 0.3125,
            backscatter_loss: 0.33,
        }
    }
}

impl RadioParams {
    /// Builds parameters from a carrier frequency, using
    /// [`PROPAGATION_SPEED_M_S`] for the wavelength.
    pub fn from_frequency(
        tx_power_dbm: f64,
        reader_gain: f64,
        tag_gain: f64,
        frequency_hz: f64,
        backscatter_loss: f64,
    ) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(Error::Domain(format!(
                "frequency must be positive, got {frequency_hz} Hz"
            )));
        }
        let params = Self {
            tx_power_dbm,
            reader_gain,
            tag_gain,
            wavelength_m: PROPAGATION_SPEED_M_S / frequency_hz,
            backscatter_loss,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::Config(format!(
                "tx_power_dbm must be finite, got {}",
                self.tx_power_dbm
            )));
        }
        positive("reader_gain", self.reader_gain)?;
        positive("tag_gain", self.tag_gain)?;
        positive("wavelength_m", self.wavelength_m)?;
        positive("backscatter_loss", self.backscatter_loss)?;
        if self.backscatter_loss > 1.0 {
            return Err(Error::Config(format!(
                "backscatter_loss must not exceed 1, got {}",
                self.backscatter_loss
            )));
        }
        Ok(())
    }
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0) / 1000.0
}

pub fn watts_to_dbm(p_watts: f64) -> Result<f64> {
    if p_watts.is_nan() || p_watts <= 0.0 {
        return Err(Error::Domain(format!(
            "power must be positive to express in dBm, got {p_watts} W"
        )));
    }
    Ok(10.0 * (p_watts * 1000.0).log10())
}

/// Backscattered power received by the reader from a tag `d` meters away.
///
/// Fails for `d <= 0`: a reader sitting on the tag has no defined reading.
pub fn friis_backscatter(params: &RadioParams, d: f64) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::Domain(format!(
            "reader-tag distance must be positive, got {d} m"
        )));
    }
    let gains = (params.reader_gain * params.tag_gain).powi(2);
    // Divide by (4πd/λ)⁴ rather than forming λ⁴ and (4πd)⁴ separately so that
    // neither factor over- or underflows for extreme distances.
    let path = (4.0 * PI * d / params.wavelength_m).powi(4);
    let p_rx = dbm_to_watts(params.tx_power_dbm) * params.backscatter_loss * gains / path;
    watts_to_dbm(p_rx)
}
