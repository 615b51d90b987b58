//! End-to-end channels of the load-terminated multiport system, static and
//! augmented, with and without mutual coupling between the RIS ports.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{assemble_phi_augmented, assemble_s_augmented};
use crate::linalg::{self, CMatrix};
use crate::model::{
    ConfigMatrix, HarmonicSet, LoadStates, MultiFrequencyScattering, PortGroup, PortPartition,
};

pub type CVector = DVector<Complex64>;

/// Which system model is used for the load network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFidelity {
    /// Full multiport model including `S_SS` (mutual coupling).
    McAware,
    /// Cascaded model obtained with `S_SS = 0`.
    Cascaded,
}

impl ModelFidelity {
    pub fn label(self) -> &'static str {
        match self {
            ModelFidelity::McAware => "mc_aware",
            ModelFidelity::Cascaded => "cascaded",
        }
    }
}

impl std::fmt::Display for ModelFidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Static channel `H = S_RT + S_RS (I - Phi S_SS)^-1 Phi S_ST` with
/// `Phi = diag(reflections)`; the cascaded model drops `S_SS`.
pub fn channel_static(
    s: &CMatrix,
    partition: &PortPartition,
    reflections: &[Complex64],
    fidelity: ModelFidelity,
) -> Result<CMatrix> {
    let n = partition.total();
    if s.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "scattering matrix {:?} does not match {n} ports",
            s.shape()
        )));
    }
    let ns = partition.n_ris();
    if reflections.len() != ns {
        return Err(Error::ShapeMismatch(format!(
            "{} reflection coefficients for {ns} RIS ports",
            reflections.len()
        )));
    }
    if let Some(r) = reflections.iter().find(|r| !(r.norm() <= 1.0 + 1e-12)) {
        return Err(Error::InvalidLoads(format!("|r| = {} exceeds 1", r.norm())));
    }
    let s_rt = partition.block(s, PortGroup::Rx, PortGroup::Tx);
    let s_rs = partition.block(s, PortGroup::Rx, PortGroup::Ris);
    let s_st = partition.block(s, PortGroup::Ris, PortGroup::Tx);
    // Phi * S_ST: scale row i by r_i.
    let mut phi_st = s_st;
    for (i, r) in reflections.iter().enumerate() {
        for v in phi_st.row_mut(i).iter_mut() {
            *v *= r;
        }
    }
    let inner = match fidelity {
        ModelFidelity::Cascaded => phi_st,
        ModelFidelity::McAware => {
            let mut a = partition.block(s, PortGroup::Ris, PortGroup::Ris);
            for (i, r) in reflections.iter().enumerate() {
                for v in a.row_mut(i).iter_mut() {
                    *v *= -r;
                }
            }
            for i in 0..ns {
                a[(i, i)] += Complex64::new(1.0, 0.0);
            }
            linalg::solve(&a, &phi_st)?
        }
    };
    Ok(s_rt + s_rs * inner)
}

/// Incident wave amplitudes per harmonic on the TX ports.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    amplitudes: BTreeMap<i32, CVector>,
    n_tx: usize,
}

impl InputSpec {
    pub fn new(n_tx: usize, amplitudes: BTreeMap<i32, CVector>) -> Result<Self> {
        if let Some((h, v)) = amplitudes.iter().find(|(_, v)| v.len() != n_tx) {
            return Err(Error::ShapeMismatch(format!(
                "input at harmonic {h} has {} entries, expected {n_tx}",
                v.len()
            )));
        }
        Ok(Self { amplitudes, n_tx })
    }

    /// Unit amplitude on one TX port at the carrier, nothing elsewhere.
    pub fn unit_fundamental(n_tx: usize, port: usize) -> Self {
        let mut v = CVector::zeros(n_tx);
        v[port] = Complex64::new(1.0, 0.0);
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(0, v);
        Self { amplitudes, n_tx }
    }

    pub fn zero(n_tx: usize) -> Self {
        Self {
            amplitudes: BTreeMap::new(),
            n_tx,
        }
    }

    pub fn at(&self, h: i32) -> Option<&CVector> {
        self.amplitudes.get(&h)
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Stacked augmented vector; harmonics outside `harmonics` are dropped.
    pub fn augmented(&self, harmonics: HarmonicSet) -> CVector {
        let mut a = CVector::zeros(harmonics.len() * self.n_tx);
        for (h, v) in &self.amplitudes {
            if let Some(n) = harmonics.index_of(*h) {
                a.rows_mut(n * self.n_tx, self.n_tx).copy_from(v);
            }
        }
        a
    }
}

/// Augmented multi-frequency channel `H~` (`|H| N_R x |H| N_T`).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedChannel {
    matrix: CMatrix,
    harmonics: HarmonicSet,
    partition: PortPartition,
    fidelity: ModelFidelity,
}

impl AugmentedChannel {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn harmonics(&self) -> HarmonicSet {
        self.harmonics
    }

    pub fn partition(&self) -> &PortPartition {
        &self.partition
    }

    pub fn fidelity(&self) -> ModelFidelity {
        self.fidelity
    }

    /// Block mapping TX waves at `h_in` to RX waves at `h_out`.
    pub fn block(&self, h_out: i32, h_in: i32) -> Result<CMatrix> {
        let n = self.harmonics.index_of(h_out).ok_or(Error::MissingHarmonic(h_out))?;
        let m = self.harmonics.index_of(h_in).ok_or(Error::MissingHarmonic(h_in))?;
        let nr = self.partition.n_rx();
        let nt = self.partition.n_tx();
        Ok(self.matrix.view((n * nr, m * nt), (nr, nt)).into_owned())
    }
}

/// Pre-assembled augmented system for one configuration.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub(crate) harmonics: HarmonicSet,
    pub(crate) partition: PortPartition,
    pub(crate) fidelity: ModelFidelity,
    pub(crate) phi: CMatrix,
    pub(crate) s_rt: CMatrix,
    pub(crate) s_rs: CMatrix,
    pub(crate) s_st: CMatrix,
    /// Per-harmonic `S_SS`; all zero in the cascaded model.
    pub(crate) s_ss: Vec<CMatrix>,
}

impl AugmentedSystem {
    pub fn assemble(
        scattering: &MultiFrequencyScattering,
        loads: &LoadStates,
        config: &ConfigMatrix,
        harmonics: HarmonicSet,
        fidelity: ModelFidelity,
    ) -> Result<Self> {
        let partition = scattering.partition().clone();
        if config.elements() != partition.n_ris() {
            return Err(Error::ShapeMismatch(format!(
                "configuration has {} rows for {} RIS ports",
                config.elements(),
                partition.n_ris()
            )));
        }
        let phi = assemble_phi_augmented(loads, config, harmonics)?.into_matrix();
        let aug = |r, c| assemble_s_augmented(scattering, harmonics, r, c).map(|b| b.into_matrix());
        let s_rt = aug(PortGroup::Rx, PortGroup::Tx)?;
        let s_rs = aug(PortGroup::Rx, PortGroup::Ris)?;
        let s_st = aug(PortGroup::Ris, PortGroup::Tx)?;
        let ns = partition.n_ris();
        let s_ss = harmonics
            .orders()
            .map(|h| match fidelity {
                ModelFidelity::McAware => scattering.block(h, PortGroup::Ris, PortGroup::Ris),
                ModelFidelity::Cascaded => Ok(CMatrix::zeros(ns, ns)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            harmonics,
            partition,
            fidelity,
            phi,
            s_rt,
            s_rs,
            s_st,
            s_ss,
        })
    }

    pub fn harmonics(&self) -> HarmonicSet {
        self.harmonics
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    fn ns(&self) -> usize {
        self.partition.n_ris()
    }

    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    /// `S~_SS * M` exploiting the block-diagonal structure.
    pub(crate) fn s_ss_times(&self, m: &CMatrix) -> CMatrix {
        let ns = self.ns();
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        if self.fidelity == ModelFidelity::Cascaded {
            return out;
        }
        for (n, blk) in self.s_ss.iter().enumerate() {
            let rows = m.rows(n * ns, ns);
            out.rows_mut(n * ns, ns).copy_from(&(blk * rows));
        }
        out
    }

    /// `I - Phi~ S~_SS`, filled entrywise from the diagonal-block structure.
    pub fn system_matrix(&self) -> CMatrix {
        let ns = self.ns();
        let nh = self.harmonics.len();
        let dim = self.dim();
        let mut a = CMatrix::identity(dim, dim);
        if self.fidelity == ModelFidelity::Cascaded {
            return a;
        }
        for n in 0..nh {
            for m in 0..nh {
                let blk = &self.s_ss[m];
                for i in 0..ns {
                    let phi = self.phi[(n * ns + i, m * ns + i)];
                    if phi == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..ns {
                        a[(n * ns + i, m * ns + j)] -= phi * blk[(i, j)];
                    }
                }
            }
        }
        a
    }

    pub fn channel(&self) -> Result<AugmentedChannel> {
        let phi_st = linalg::matmul(&self.phi, &self.s_st);
        let inner = match self.fidelity {
            ModelFidelity::Cascaded => phi_st,
            ModelFidelity::McAware => linalg::solve(&self.system_matrix(), &phi_st)?,
        };
        let matrix = &self.s_rt + linalg::matmul(&self.s_rs, &inner);
        Ok(AugmentedChannel {
            matrix,
            harmonics: self.harmonics,
            partition: self.partition.clone(),
            fidelity: self.fidelity,
        })
    }

    /// Received augmented wavefront for one input, using a single-RHS solve.
    pub fn response(&self, input: &InputSpec) -> Result<CVector> {
        if input.n_tx() != self.partition.n_tx() {
            return Err(Error::ShapeMismatch(format!(
                "input drives {} TX ports, system has {}",
                input.n_tx(),
                self.partition.n_tx()
            )));
        }
        let a = input.augmented(self.harmonics);
        let g = &self.s_st * &a;
        let w = &self.phi * g;
        let x = match self.fidelity {
            ModelFidelity::Cascaded => w,
            ModelFidelity::McAware => {
                let sol = linalg::solve(&self.system_matrix(), &CMatrix::from_column_slice(w.len(), 1, w.as_slice()))?;
                CVector::from_column_slice(sol.as_slice())
            }
        };
        Ok(&self.s_rt * a + &self.s_rs * x)
    }
}

pub fn channel_augmented(
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    config: &ConfigMatrix,
    harmonics: HarmonicSet,
    fidelity: ModelFidelity,
) -> Result<AugmentedChannel> {
    AugmentedSystem::assemble(scattering, loads, config, harmonics, fidelity)?.channel()
}

/// `b~ = H~ a~`, unpacked per harmonic.
pub fn received(channel: &AugmentedChannel, input: &InputSpec) -> Result<BTreeMap<i32, CVector>> {
    let nt = channel.partition.n_tx();
    if input.n_tx() != nt {
        return Err(Error::ShapeMismatch(format!(
            "input drives {} TX ports, channel has {nt}",
            input.n_tx()
        )));
    }
    let b = &channel.matrix * input.augmented(channel.harmonics);
    Ok(unpack(&b, channel.harmonics, channel.partition.n_rx()))
}

pub fn unpack(b: &CVector, harmonics: HarmonicSet, n_rx: usize) -> BTreeMap<i32, CVector> {
    harmonics
        .orders()
        .enumerate()
        .map(|(n, h)| (h, b.rows(n * n_rx, n_rx).into_owned()))
        .collect()
}

/// Received waves at harmonic `target` for unit excitation of TX port 0 at the carrier.
pub fn harmonic_response(
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    config: &ConfigMatrix,
    harmonics: HarmonicSet,
    fidelity: ModelFidelity,
    target: i32,
) -> Result<CVector> {
    let n = harmonics.index_of(target).ok_or(Error::MissingHarmonic(target))?;
    let sys = AugmentedSystem::assemble(scattering, loads, config, harmonics, fidelity)?;
    let input = InputSpec::unit_fundamental(scattering.partition().n_tx(), 0);
    let b = sys.response(&input)?;
    let nr = scattering.partition().n_rx();
    Ok(b.rows(n * nr, nr).into_owned())
}
