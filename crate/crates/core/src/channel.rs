//! Channel model: Gaussian capacity functions, the access (relay → receiver)
//! gain matrix, the orthogonal relay link, and target rates.
//!
//! All rates are in bits per channel use with the real-channel convention
//! `C(x) = ½·log₂(1 + x)`, whose inverse is `4^r − 1`. Noise variances are
//! fixed to one.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::{NUM_RECEIVERS, NUM_RELAYS};

/// `½·log₂(1 + snr)`.
pub fn cap_scalar(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::Domain(format!("capacity of snr {snr}")));
    }
    Ok(capacity(snr))
}

/// `4^rate − 1`, the SNR needed to support `rate`.
pub fn cap_inv(rate: f64) -> Result<f64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("inverse capacity of rate {rate}")));
    }
    Ok(inverse_capacity(rate))
}

/// `½·log₂ det(M Mᵀ + I)`.
pub fn cap_mimo(m: &Matrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::Domain("non-finite matrix entry".into()));
    }
    Ok(capacity_mimo(m))
}

#[inline]
pub(crate) fn capacity(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / LN_2
}

#[inline]
pub(crate) fn inverse_capacity(rate: f64) -> f64 {
    (2.0 * rate * LN_2).exp_m1()
}

pub(crate) fn capacity_mimo(m: &Matrix) -> f64 {
    // det(MMᵀ+I) ≥ 1 in exact arithmetic
    0.5 * m.gram_plus_identity().determinant().max(1.0).log2()
}

/// Relay → receiver gains, `gains[z][j]` from relay `j` to receiver `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccessChannel {
    gains: [[f64; NUM_RELAYS]; NUM_RECEIVERS],
    /// Per-relay power limits; `None` means unbounded (minimization mode).
    pub relay_power_limits: Option<[f64; NUM_RELAYS]>,
}

impl AccessChannel {
    pub fn new(gains: [[f64; NUM_RELAYS]; NUM_RECEIVERS]) -> Result<Self> {
        for (z, row) in gains.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::InvalidChannel(format!("gain h[{}][{}] = {g}", z + 1, j + 1)));
                }
            }
        }
        Ok(AccessChannel { gains, relay_power_limits: None })
    }

    pub fn with_power_limits(mut self, limits: [f64; NUM_RELAYS]) -> Result<Self> {
        if limits.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidChannel(format!("relay power limits {limits:?}")));
        }
        self.relay_power_limits = Some(limits);
        Ok(self)
    }

    /// Gain from relay `relay` to receiver `receiver` (both 0-based).
    pub fn gain(&self, receiver: usize, relay: usize) -> f64 {
        self.gains[receiver][relay]
    }

    pub fn gains(&self) -> &[[f64; NUM_RELAYS]; NUM_RECEIVERS] {
        &self.gains
    }

    pub fn as_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.gains.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }
}

/// Orthogonal base-station → relay links with gains `d11`, `d22`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelayChannel {
    gains: [f64; NUM_RELAYS],
}

impl RelayChannel {
    pub fn new(gains: [f64; NUM_RELAYS]) -> Result<Self> {
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidChannel(format!("relay link gains {gains:?}")));
        }
        Ok(RelayChannel { gains })
    }

    pub fn gain(&self, relay: usize) -> f64 {
        self.gains[relay]
    }
}

/// Target rates `(R1, R2, R3)` in bits per channel use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTarget {
    rates: [f64; NUM_RECEIVERS],
}

impl RateTarget {
    pub fn new(rates: [f64; NUM_RECEIVERS]) -> Result<Self> {
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Domain(format!("target rates {rates:?}")));
        }
        Ok(RateTarget { rates })
    }

    pub fn symmetric(rate: f64) -> Result<Self> {
        Self::new([rate; NUM_RECEIVERS])
    }

    pub fn rate(&self, message: usize) -> f64 {
        self.rates[message]
    }

    pub fn rates(&self) -> [f64; NUM_RECEIVERS] {
        self.rates
    }

    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// The symmetric access channel `H = [[1, b], [a, a], [b, 1]]` with unit relay links.
pub fn symmetric_channel(a: f64, b: f64) -> Result<(AccessChannel, RelayChannel)> {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidChannel(format!("symmetric parameters a = {a}, b = {b}")));
    }
    Ok((AccessChannel::new([[1.0, b], [a, a], [b, 1.0]])?, RelayChannel::new([1.0, 1.0])?))
}

/// A gain as written in a configuration file: a real number, a `[re, im]`
/// pair, or `{"re": .., "im": ..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Real(f64),
    Pair([f64; 2]),
    Complex { re: f64, im: f64 },
}

impl GainSpec {
    /// Magnitude of the gain, warning when phase information is discarded.
    fn magnitude(&self, what: &str) -> f64 {
        let (re, im) = match *self {
            GainSpec::Real(x) => (x, 0.0),
            GainSpec::Pair([re, im]) | GainSpec::Complex { re, im } => (re, im),
        };
        if im != 0.0 || re < 0.0 {
            log::warn!("{what}: gain ({re}, {im}) reduced to its magnitude; phases are not modeled");
        }
        re.hypot(im)
    }
}

/// Channel description accepted from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Symmetric {
        a: f64,
        b: f64,
    },
    Explicit {
        h: Vec<Vec<GainSpec>>,
        #[serde(default = "unit_relay_gains")]
        d: Vec<GainSpec>,
        #[serde(default)]
        relay_power: Option<[f64; NUM_RELAYS]>,
    },
}

fn unit_relay_gains() -> Vec<GainSpec> {
    vec![GainSpec::Real(1.0); NUM_RELAYS]
}

impl ChannelSpec {
    pub fn is_symmetric(&self) -> bool {
        matches!(self, ChannelSpec::Symmetric { .. })
    }

    pub fn resolve(&self) -> Result<(AccessChannel, RelayChannel)> {
        match self {
            ChannelSpec::Symmetric { a, b } => symmetric_channel(*a, *b),
            ChannelSpec::Explicit { h, d, relay_power } => {
                if h.len() != NUM_RECEIVERS || h.iter().any(|r| r.len() != NUM_RELAYS) {
                    return Err(Error::InvalidChannel("h must be 3 rows of 2 gains".into()));
                }
                if d.len() != NUM_RELAYS {
                    return Err(Error::InvalidChannel("d must hold 2 relay-link gains".into()));
                }
                let mut gains = [[0.0; NUM_RELAYS]; NUM_RECEIVERS];
                for (z, row) in h.iter().enumerate() {
                    for (j, g) in row.iter().enumerate() {
                        gains[z][j] = g.magnitude(&format!("h[{}][{}]", z + 1, j + 1));
                    }
                }
                let mut access = AccessChannel::new(gains)?;
                if let Some(limits) = relay_power {
                    access = access.with_power_limits(*limits)?;
                }
                let relay = RelayChannel::new([
                    d[0].magnitude("d11"),
                    d[1].magnitude("d22"),
                ])?;
                Ok((access, relay))
            }
        }
    }
}
