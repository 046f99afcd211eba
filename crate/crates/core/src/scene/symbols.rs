use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::rng_from_seed;
use crate::error::{Error, Result};
use crate::linalg::{cis, RMatrix};

/// A K×L block of PSK symbols `d_k[l] = e^{jφ_k[l]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolFrame {
    /// Constellation index q of each symbol, K×L row-major.
    pub indices: Vec<usize>,
    pub users: usize,
    pub len: usize,
    pub order: usize,
    /// Constellation rotation: φ = 2πq/order + offset.
    pub offset: f64,
}

/// The phases of one symbol slot across all users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSlot {
    pub phases: Vec<f64>,
    pub order: usize,
}

impl SymbolSlot {
    pub fn new(phases: Vec<f64>, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!("modulation order must be >= 2, got {order}")));
        }
        Ok(Self { phases, order })
    }

    /// Half-angle of the constructive region, π/order.
    pub fn psi(&self) -> f64 {
        PI / self.order as f64
    }

    pub fn users(&self) -> usize {
        self.phases.len()
    }

    pub fn symbol(&self, k: usize) -> Complex64 {
        cis(self.phases[k])
    }
}

impl SymbolFrame {
    pub fn psi(&self) -> f64 {
        PI / self.order as f64
    }

    pub fn phase(&self, k: usize, l: usize) -> f64 {
        2.0 * PI * self.indices[k * self.len + l] as f64 / self.order as f64 + self.offset
    }

    pub fn symbol(&self, k: usize, l: usize) -> Complex64 {
        cis(self.phase(k, l))
    }

    pub fn phases(&self) -> RMatrix {
        RMatrix::from_fn(self.users, self.len, |k, l| self.phase(k, l))
    }

    pub fn slot(&self, l: usize) -> SymbolSlot {
        SymbolSlot { phases: (0..self.users).map(|k| self.phase(k, l)).collect(), order: self.order }
    }

    pub fn slots(&self) -> impl Iterator<Item = SymbolSlot> + '_ {
        (0..self.len).map(|l| self.slot(l))
    }
}

/// Uniform i.i.d. PSK symbols for `k` users over `len` slots.
pub fn psk_frame(k: usize, len: usize, order: usize, seed: u64) -> Result<SymbolFrame> {
    if order < 2 {
        return Err(Error::InvalidArgument(format!("modulation order must be >= 2, got {order}")));
    }
    if len == 0 {
        return Err(Error::InvalidArgument("frame length must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let indices = (0..k * len).map(|_| rng.random_range(0..order)).collect();
    // BPSK on the real axis, higher orders with the usual half-sector rotation
    let offset = if order == 2 { 0.0 } else { PI / order as f64 };
    Ok(SymbolFrame { indices, users: k, len, order, offset })
}
