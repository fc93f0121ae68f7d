//! Transmission-line model sizing of a rectangular microstrip patch.

use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchDesignInput {
    /// Resonant frequency in Hz.
    pub f0: f64,
    pub epsilon_r: f64,
    /// Substrate height in mm.
    pub h: f64,
}

/// Patch dimensions in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchDesignOutput {
    pub width: f64,
    pub length: f64,
    pub epsilon_eff: f64,
    pub delta_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DesignError {
    #[error("frequency must be positive, got {0}")]
    Frequency(f64),
    #[error("relative permittivity must be at least 1, got {0}")]
    Permittivity(f64),
    #[error("substrate height must be positive, got {0}")]
    Height(f64),
}

pub fn design_patch(input: PatchDesignInput) -> Result<PatchDesignOutput, DesignError> {
    let PatchDesignInput { f0, epsilon_r, h } = input;
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(DesignError::Frequency(f0));
    }
    if !(epsilon_r >= 1.0 && epsilon_r.is_finite()) {
        return Err(DesignError::Permittivity(epsilon_r));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(DesignError::Height(h));
    }
    // c in mm/s so every length comes out in mm.
    let c = SPEED_OF_LIGHT * 1e3;
    let width = c / (2.0 * f0) * libm::sqrt(2.0 / (epsilon_r + 1.0));
    let epsilon_eff =
        (epsilon_r + 1.0) / 2.0 + (epsilon_r - 1.0) / 2.0 / libm::sqrt(1.0 + 12.0 * h / width);
    let wh = width / h;
    let delta_l = h * 0.412 * (epsilon_eff + 0.3) * (wh + 0.264)
        / ((epsilon_eff - 0.258) * (wh + 0.8));
    let length = c / (2.0 * f0 * libm::sqrt(epsilon_eff)) - 2.0 * delta_l;
    Ok(PatchDesignOutput {
        width,
        length,
        epsilon_eff,
        delta_l,
    })
}
