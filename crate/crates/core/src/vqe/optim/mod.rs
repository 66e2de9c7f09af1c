//! Derivative-free minimizers.
//!
//! Each optimizer drives a fallible cost closure. An `Err` returned by the
//! closure aborts the optimizer immediately and is handed back unchanged,
//! which is how the variational loop implements cancellation and
//! non-finite-energy aborts.

mod cobyla;
mod nft;
mod spsa;

pub use cobyla::{cobyla_minimize, CobylaResult, CobylaSettings, CobylaStatus};
pub use nft::{nft_minimize, NftSettings, NftState};
pub use spsa::{spsa_minimize, SpsaSettings, SpsaState};

use alloc::vec;
use alloc::vec::Vec;

/// Outcome of an unconstrained minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
}

/// Dense column-major matrix used by the COBYLA port.
#[derive(Debug, Clone)]
pub(crate) struct Mat {
    rows: usize,
    data: Vec<f64>,
}

impl Mat {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[c * self.rows + r]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[c * self.rows + r]
    }
}
