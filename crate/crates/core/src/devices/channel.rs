use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fibre link: length (km), attenuation (dB/km) and lumped insertion loss (dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub insertion_loss_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            length_km: 30.0,
            attenuation_db_per_km: 0.2,
            insertion_loss_db: 0.0,
        }
    }
}

impl ChannelConfig {
    pub fn lossless() -> Self {
        Self {
            length_km: 0.0,
            attenuation_db_per_km: 0.0,
            insertion_loss_db: 0.0,
        }
    }

    pub fn total_loss_db(&self) -> f64 {
        self.attenuation_db_per_km * self.length_km + self.insertion_loss_db
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0) {
            return Err(Error::config("channel.length", "must be >= 0"));
        }
        if !(self.attenuation_db_per_km >= 0.0) {
            return Err(Error::config("channel.attenuation", "must be >= 0"));
        }
        if !(self.insertion_loss_db >= 0.0) {
            return Err(Error::config("channel.insertion_loss", "must be >= 0"));
        }
        Ok(())
    }
}

/// `T_L = 10^(-(αL + I_L)/10)`.
pub fn transmittance(channel: &ChannelConfig) -> f64 {
    super::db_to_transmittance(channel.total_loss_db())
}
