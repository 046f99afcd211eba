use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::rng_from_seed;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveformMode {
    /// Rows exactly orthogonal with `(1/L)SSᴴ = I`.
    Orthonormal,
    /// Cyclic shifts of a length-63 maximal-length sequence, truncated to L.
    Msequence,
}

/// ±1 maximal-length sequence from a Fibonacci LFSR with taps on
/// x^6 + x^5 + 1 (period 63).
pub fn msequence() -> Vec<f64> {
    let mut state: u8 = 0b00_0001;
    let mut out = Vec::with_capacity(63);
    for _ in 0..63 {
        let bit = state & 1;
        out.push(if bit == 1 { -1.0 } else { 1.0 });
        let fb = (state ^ (state >> 1)) & 1;
        state = (state >> 1) | (fb << 5);
    }
    out
}

/// An M×L radar waveform matrix.
pub fn radar_waveform(m: usize, len: usize, mode: WaveformMode, seed: u64) -> Result<CMatrix> {
    if m == 0 || len == 0 {
        return Err(Error::InvalidArgument("waveform dims must be >= 1".into()));
    }
    match mode {
        WaveformMode::Orthonormal => {
            if len < m {
                return Err(Error::InvalidArgument(format!("orthonormal waveform needs L >= M (L={len}, M={m})")));
            }
            let mut rng = rng_from_seed(seed);
            loop {
                let raw = RMatrix::from_fn(len, m, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
                let qr = raw.qr();
                let r = qr.r();
                if (0..m).any(|i| r[(i, i)].abs() < 1e-8) {
                    // rank-deficient draw; only plausible for tiny L
                    continue;
                }
                let q = qr.q();
                let scale = (len as f64).sqrt();
                return Ok(CMatrix::from_fn(m, len, |i, l| Complex64::new(q[(l, i)] * scale, 0.0)));
            }
        }
        WaveformMode::Msequence => {
            let seq = msequence();
            let period = seq.len();
            let spacing = (period / m).max(1);
            Ok(CMatrix::from_fn(m, len, |i, l| Complex64::new(seq[(l + i * spacing) % period], 0.0)))
        }
    }
}
