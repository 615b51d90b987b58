use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a group of ports in the multiport description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortGroup {
    Tx,
    Rx,
    Ris,
}

/// Split of the `N` ports into transmit antennas, receive antennas and
/// RIS load ("virtual") ports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct PortPartition {
    tx: Vec<usize>,
    rx: Vec<usize>,
    ris: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    tx: Vec<usize>,
    rx: Vec<usize>,
    ris: Vec<usize>,
}

impl PortPartition {
    pub fn new(tx: Vec<usize>, rx: Vec<usize>, ris: Vec<usize>) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() || ris.is_empty() {
            return Err(Error::InvalidPartition(
                "each port group needs at least one port".into(),
            ));
        }
        let n = tx.len() + rx.len() + ris.len();
        let mut seen = vec![false; n];
        for &p in tx.iter().chain(&rx).chain(&ris) {
            if p >= n {
                return Err(Error::InvalidPartition(format!(
                    "port index {p} outside 0..{n}"
                )));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidPartition(format!(
                    "port index {p} listed twice"
                )));
            }
        }
        Ok(Self { tx, rx, ris })
    }

    /// Conventional layout: TX ports first, then RX, then RIS ports.
    pub fn contiguous(n_tx: usize, n_rx: usize, n_ris: usize) -> Result<Self> {
        let tx = (0..n_tx).collect();
        let rx = (n_tx..n_tx + n_rx).collect();
        let ris = (n_tx + n_rx..n_tx + n_rx + n_ris).collect();
        Self::new(tx, rx, ris)
    }

    pub fn ports(&self, group: PortGroup) -> &[usize] {
        match group {
            PortGroup::Tx => &self.tx,
            PortGroup::Rx => &self.rx,
            PortGroup::Ris => &self.ris,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.len()
    }

    pub fn n_ris(&self) -> usize {
        self.ris.len()
    }

    pub fn n_antennas(&self) -> usize {
        self.tx.len() + self.rx.len()
    }

    pub fn total(&self) -> usize {
        self.n_antennas() + self.ris.len()
    }

    /// Extracts `S_{rows, cols}` from a full `N x N` matrix.
    pub fn block(
        &self,
        s: &DMatrix<Complex64>,
        rows: PortGroup,
        cols: PortGroup,
    ) -> DMatrix<Complex64> {
        let r = self.ports(rows);
        let c = self.ports(cols);
        DMatrix::from_fn(r.len(), c.len(), |i, j| s[(r[i], c[j])])
    }
}

impl TryFrom<RawPartition> for PortPartition {
    type Error = Error;

    fn try_from(raw: RawPartition) -> Result<Self> {
        Self::new(raw.tx, raw.rx, raw.ris)
    }
}

impl From<PortPartition> for RawPartition {
    fn from(p: PortPartition) -> Self {
        RawPartition {
            tx: p.tx,
            rx: p.rx,
            ris: p.ris,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contiguous_layout() {
        let p = PortPartition::contiguous(1, 2, 9).unwrap();
        assert_eq!(p.total(), 12);
        assert_eq!(p.n_antennas(), 3);
        assert_eq!(p.ports(PortGroup::Rx), &[1, 2]);
        assert_eq!(p.ports(PortGroup::Ris)[0], 3);
    }

    #[test]
    fn rejects_overlap_and_gaps() {
        assert!(PortPartition::new(vec![0], vec![0], vec![1]).is_err());
        assert!(PortPartition::new(vec![0], vec![1], vec![3]).is_err());
        assert!(PortPartition::new(vec![], vec![0], vec![1]).is_err());
        assert!(PortPartition::new(vec![2], vec![0], vec![1]).is_ok());
    }

    #[test]
    fn block_extraction() {
        let p = PortPartition::new(vec![2], vec![0], vec![1, 3]).unwrap();
        let s = DMatrix::from_fn(4, 4, |i, j| Complex64::new((10 * i + j) as f64, 0.0));
        let b = p.block(&s, PortGroup::Ris, PortGroup::Tx);
        assert_eq!(b.shape(), (2, 1));
        assert_eq!(b[(0, 0)].re, 12.0);
        assert_eq!(b[(1, 0)].re, 32.0);
    }
}
