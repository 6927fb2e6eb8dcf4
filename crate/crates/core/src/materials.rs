//! Bundled synthetic mineral profiles.
//!
//! Each profile is a set of Lorentzian lines placed near the strongest
//! reported bands of the mineral it is named after. They stand in for RRUFF
//! downloads so the pipeline runs end to end without external data.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::Rng;

use crate::seed::{self, Stream};
use crate::spectrum::{synth_lorentzian, uniform_grid, Peak, Spectrum, SpectrumError};

/// Wavenumber range of the bundled profiles (cm⁻¹).
pub const AXIS: (f64, f64) = (150.0, 1300.0);

#[derive(Debug, Clone, Copy)]
pub struct MaterialProfile {
    pub name: &'static str,
    pub peaks: &'static [Peak],
}

const fn p(center: f64, width: f64, height: f64) -> Peak {
    Peak::new(center, width, height)
}

pub const ACTINOLITE: MaterialProfile = MaterialProfile {
    name: "Actinolite",
    peaks: &[
        p(222.0, 6.0, 0.35),
        p(368.0, 7.0, 0.30),
        p(393.0, 6.0, 0.28),
        p(529.0, 8.0, 0.22),
        p(673.0, 5.0, 1.00),
        p(930.0, 9.0, 0.18),
        p(1030.0, 7.0, 0.25),
        p(1060.0, 7.0, 0.30),
    ],
};

pub const ALBITE: MaterialProfile = MaterialProfile {
    name: "Albite",
    peaks: &[
        p(290.0, 8.0, 0.35),
        p(479.0, 6.0, 0.70),
        p(507.0, 5.0, 1.00),
        p(763.0, 8.0, 0.15),
        p(816.0, 8.0, 0.15),
        p(1098.0, 10.0, 0.20),
    ],
};

pub const FORSTERITE: MaterialProfile = MaterialProfile {
    name: "Forsterite",
    peaks: &[
        p(226.0, 6.0, 0.15),
        p(304.0, 7.0, 0.18),
        p(545.0, 8.0, 0.12),
        p(607.0, 8.0, 0.15),
        p(824.0, 4.0, 1.00),
        p(856.0, 4.0, 0.90),
        p(919.0, 7.0, 0.20),
        p(965.0, 7.0, 0.25),
    ],
};

pub const GROSSULAR: MaterialProfile = MaterialProfile {
    name: "Grossular",
    peaks: &[
        p(278.0, 6.0, 0.30),
        p(372.0, 5.0, 1.00),
        p(418.0, 6.0, 0.40),
        p(549.0, 7.0, 0.35),
        p(826.0, 7.0, 0.30),
        p(881.0, 5.0, 0.85),
        p(1006.0, 7.0, 0.30),
    ],
};

pub const MARIALITE: MaterialProfile = MaterialProfile {
    name: "Marialite",
    peaks: &[
        p(459.0, 9.0, 0.45),
        p(539.0, 6.0, 1.00),
        p(775.0, 10.0, 0.20),
        p(992.0, 8.0, 0.30),
        p(1101.0, 9.0, 0.35),
    ],
};

/// The five bundled profiles, in class-index order.
pub const BUNDLED: [MaterialProfile; 5] = [ACTINOLITE, ALBITE, FORSTERITE, GROSSULAR, MARIALITE];

pub fn bundled_class_names() -> Vec<String> {
    BUNDLED.iter().map(|m| m.name.to_string()).collect()
}

pub fn find(name: &str) -> Option<&'static MaterialProfile> {
    BUNDLED.iter().find(|m| m.name.eq_ignore_ascii_case(name))
}

impl MaterialProfile {
    /// One "original" spectrum of this material. Variant 0 is the nominal
    /// line set; other variants jitter positions (±3 cm⁻¹), widths (×0.8–1.25)
    /// and heights (×0.7–1.3) the way repeated measurements of one mineral
    /// differ.
    pub fn original(&self, variant: u32, seed: u64, grid_len: usize) -> Result<Spectrum, SpectrumError> {
        let grid = uniform_grid(AXIS.0, AXIS.1, grid_len);
        let mut peaks: Vec<Peak> = self.peaks.to_vec();
        if variant > 0 {
            let name_hash = self.name.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
            let mut rng = seed::rng(seed::derive(seed ^ name_hash, variant as u64), Stream::Variant);
            for pk in &mut peaks {
                pk.center += rng.random_range(-3.0..=3.0);
                pk.width *= rng.random_range(0.8..=1.25);
                pk.height *= rng.random_range(0.7..=1.3);
            }
        }
        synth_lorentzian(
            &peaks,
            &grid,
            Some(self.name.to_string()),
            format!("synth:{}/{}", self.name, variant),
        )
    }
}
