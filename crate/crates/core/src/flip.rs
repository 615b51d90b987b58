//! Incremental single-bit-flip evaluation by low-rank (Woodbury) updates of
//! `M = (I - Phi~ S~_SS)^-1`.
//!
//! Flipping `C[i,q]` only changes the `|H| x |H|` sub-matrix of `Phi~` on the
//! augmented coordinates of element `i`, so with `U = E_i D` and
//! `V = E_i^T S~_SS` the perturbed inverse is
//! `M + M U (I - V M U)^-1 V M`. Only the received waves at the target
//! harmonic are ever formed.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{AugmentedSystem, CVector, InputSpec, ModelFidelity};
use crate::error::{Error, Result};
use crate::floquet::flip_delta;
use crate::linalg::{self, CMatrix, Lu};
use crate::model::{ConfigMatrix, HarmonicSet, LoadStates, MultiFrequencyScattering};

/// Full refactorization after this many committed flips.
pub const DEFAULT_REFRESH_EVERY: usize = 64;

/// Relative residual above which the cached inverse is rebuilt.
pub const RESIDUAL_TOL: f64 = 1e-9;

pub struct FlipWorkspace {
    scattering: MultiFrequencyScattering,
    loads: LoadStates,
    system: AugmentedSystem,
    config: ConfigMatrix,
    target: i32,
    input: InputSpec,
    /// `(I - Phi~ S~_SS)^-1`
    m: CMatrix,
    /// `S~_SS M`
    k: CMatrix,
    /// `S_RS^(target) [M]_target-rows`
    rho: CMatrix,
    /// `S~_ST a~`
    g: CVector,
    /// `M Phi~ g`
    x: CVector,
    /// `S~_SS x`
    z: CVector,
    /// Received waves at the target harmonic for the current configuration.
    b: CVector,
    commits_since_refresh: usize,
    refresh_every: usize,
    refreshes: usize,
    fallbacks: AtomicUsize,
}

/// Per-flip quantities shared by evaluation and commit.
struct FlipUpdate {
    idx: Vec<usize>,
    delta: CMatrix,
    /// `(I - V M U)^-1`, absent when the inner matrix is singular.
    inner_inv: Option<CMatrix>,
    /// `d + D t`, the coefficient on `M E_i` in the new solution.
    coeff: CVector,
    b_new: CVector,
}

impl FlipWorkspace {
    pub fn new(
        scattering: &MultiFrequencyScattering,
        loads: &LoadStates,
        config: &ConfigMatrix,
        harmonics: HarmonicSet,
        fidelity: ModelFidelity,
        target: i32,
        input: InputSpec,
    ) -> Result<Self> {
        harmonics.index_of(target).ok_or(Error::MissingHarmonic(target))?;
        let system = AugmentedSystem::assemble(scattering, loads, config, harmonics, fidelity)?;
        let dim = system.dim();
        let nr = system.partition.n_rx();
        let mut ws = Self {
            scattering: scattering.clone(),
            loads: loads.clone(),
            system,
            config: config.clone(),
            target,
            input,
            m: CMatrix::zeros(dim, dim),
            k: CMatrix::zeros(dim, dim),
            rho: CMatrix::zeros(nr, dim),
            g: CVector::zeros(dim),
            x: CVector::zeros(dim),
            z: CVector::zeros(dim),
            b: CVector::zeros(nr),
            commits_since_refresh: 0,
            refresh_every: DEFAULT_REFRESH_EVERY,
            refreshes: 0,
            fallbacks: AtomicUsize::new(0),
        };
        ws.refresh()?;
        ws.refreshes = 0;
        Ok(ws)
    }

    /// Unit excitation of TX port 0 at the carrier.
    pub fn with_unit_input(
        scattering: &MultiFrequencyScattering,
        loads: &LoadStates,
        config: &ConfigMatrix,
        harmonics: HarmonicSet,
        fidelity: ModelFidelity,
        target: i32,
    ) -> Result<Self> {
        let input = InputSpec::unit_fundamental(scattering.partition().n_tx(), 0);
        Self::new(scattering, loads, config, harmonics, fidelity, target, input)
    }

    pub fn set_refresh_every(&mut self, commits: usize) {
        self.refresh_every = commits.max(1);
    }

    pub fn config(&self) -> &ConfigMatrix {
        &self.config
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.m
    }

    pub fn harmonics(&self) -> HarmonicSet {
        self.system.harmonics
    }

    pub fn target(&self) -> i32 {
        self.target
    }

    /// Received waves at the target harmonic, one entry per RX port.
    pub fn response(&self) -> &CVector {
        &self.b
    }

    pub fn evaluate<F: Fn(&CVector) -> f64>(&self, objective: F) -> f64 {
        objective(&self.b)
    }

    pub fn fallback_count(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }

    pub fn refresh_count(&self) -> usize {
        self.refreshes
    }

    pub fn commits_since_refresh(&self) -> usize {
        self.commits_since_refresh
    }

    /// Rebuilds every cached quantity from the current configuration.
    pub fn refresh(&mut self) -> Result<()> {
        let harmonics = self.system.harmonics;
        let fidelity = self.system.fidelity;
        self.system = AugmentedSystem::assemble(
            &self.scattering,
            &self.loads,
            &self.config,
            harmonics,
            fidelity,
        )?;
        let dim = self.system.dim();
        self.m = match fidelity {
            ModelFidelity::Cascaded => CMatrix::identity(dim, dim),
            ModelFidelity::McAware => Lu::factor(&self.system.system_matrix())?.inverse(),
        };
        self.k = self.system.s_ss_times(&self.m);
        let a = self.input.augmented(harmonics);
        self.g = &self.system.s_st * &a;
        let w = &self.system.phi * &self.g;
        self.x = &self.m * w;
        self.z = self.system.s_ss_times(&CMatrix::from_column_slice(dim, 1, self.x.as_slice())).column(0).into_owned();

        let ns = self.system.partition.n_ris();
        let nr = self.system.partition.n_rx();
        let nt = self.system.partition.n_tx();
        let t = harmonics.index_of(self.target).unwrap();
        let s_rs_t = self.system.s_rs.view((t * nr, t * ns), (nr, ns)).into_owned();
        self.rho = &s_rs_t * self.m.rows(t * ns, ns);
        let direct = self.system.s_rt.view((t * nr, t * nt), (nr, nt)) * a.rows(t * nt, nt);
        self.b = direct + &s_rs_t * self.x.rows(t * ns, ns);
        self.commits_since_refresh = 0;
        self.refreshes += 1;
        Ok(())
    }

    fn indices(&self, element: usize) -> Vec<usize> {
        let ns = self.system.partition.n_ris();
        (0..self.system.harmonics.len()).map(|n| n * ns + element).collect()
    }

    fn compute_update(&self, element: usize, slot: usize) -> Result<FlipUpdate> {
        self.config.check(element, slot)?;
        let idx = self.indices(element);
        let nh = idx.len();
        let delta = flip_delta(
            &self.loads,
            self.system.harmonics,
            self.config.slots(),
            slot,
            self.config.get(element, slot),
        )?;
        let g_i = CVector::from_iterator(nh, idx.iter().map(|&r| self.g[r]));
        let d = &delta * g_i;
        let vmi = DMatrix::from_fn(nh, nh, |a, b| self.k[(idx[a], idx[b])]);
        let z_i = CVector::from_iterator(nh, idx.iter().map(|&r| self.z[r]));
        let inner = CMatrix::identity(nh, nh) - &vmi * &delta;
        let inner_inv = Lu::factor(&inner).ok().map(|lu| lu.inverse());
        let Some(inv) = inner_inv.as_ref() else {
            return Ok(FlipUpdate {
                idx,
                delta,
                inner_inv: None,
                coeff: d,
                b_new: CVector::zeros(0),
            });
        };
        let u = z_i + &vmi * &d;
        let t = inv * u;
        let coeff = d + &delta * t;
        let mut b_new = self.b.clone();
        for (col, &r) in idx.iter().enumerate() {
            b_new += self.rho.column(r) * coeff[col];
        }
        Ok(FlipUpdate {
            idx,
            delta,
            inner_inv,
            coeff,
            b_new,
        })
    }

    fn full_response(&self, config: &ConfigMatrix) -> Result<CVector> {
        let sys = AugmentedSystem::assemble(
            &self.scattering,
            &self.loads,
            config,
            self.system.harmonics,
            self.system.fidelity,
        )?;
        let b = sys.response(&self.input)?;
        let nr = self.system.partition.n_rx();
        let t = self.system.harmonics.index_of(self.target).unwrap();
        Ok(b.rows(t * nr, nr).into_owned())
    }

    /// Target-harmonic response after flipping `C[element, slot]`, without
    /// changing the workspace.
    pub fn flip_response(&self, element: usize, slot: usize) -> Result<CVector> {
        let up = self.compute_update(element, slot)?;
        if up.inner_inv.is_some() {
            Ok(up.b_new)
        } else {
            self.fallbacks.fetch_add(1, Ordering::Relaxed);
            self.full_response(&self.config.flipped(element, slot))
        }
    }

    pub fn flip_evaluate<F: Fn(&CVector) -> f64>(
        &self,
        element: usize,
        slot: usize,
        objective: F,
    ) -> Result<f64> {
        Ok(objective(&self.flip_response(element, slot)?))
    }

    /// Applies the flip of `C[element, slot]`.
    pub fn flip_commit(&mut self, element: usize, slot: usize) -> Result<()> {
        let up = self.compute_update(element, slot)?;
        self.config.flip(element, slot);
        let Some(inner_inv) = up.inner_inv else {
            self.fallbacks.fetch_add(1, Ordering::Relaxed);
            return self.refresh();
        };
        let nh = up.idx.len();
        let dim = self.system.dim();
        // W = D (I - V M U)^-1, so M' = M + M[:, idx] W K[idx, :].
        let w = &up.delta * &inner_inv;
        let m_cols = DMatrix::from_fn(dim, nh, |r, c| self.m[(r, up.idx[c])]);
        let k_cols = DMatrix::from_fn(dim, nh, |r, c| self.k[(r, up.idx[c])]);
        let k_rows = DMatrix::from_fn(nh, dim, |r, c| self.k[(up.idx[r], c)]);
        let rho_cols = DMatrix::from_fn(self.rho.nrows(), nh, |r, c| self.rho[(r, up.idx[c])]);
        let wk = &w * &k_rows;
        self.m += linalg::matmul(&m_cols, &wk);
        self.k += linalg::matmul(&k_cols, &wk);
        self.rho += &rho_cols * &wk;
        self.x += &m_cols * &up.coeff;
        self.z += &k_cols * &up.coeff;
        self.b = up.b_new;
        for (a, &ra) in up.idx.iter().enumerate() {
            for (c, &rc) in up.idx.iter().enumerate() {
                self.system.phi[(ra, rc)] += up.delta[(a, c)];
            }
        }
        self.commits_since_refresh += 1;
        if self.commits_since_refresh >= self.refresh_every || self.probe_residual() > RESIDUAL_TOL {
            self.refresh()?;
        }
        Ok(())
    }

    /// Sets `C[element, slot]` to `value`; rejects assignments that change nothing.
    pub fn set_bit(&mut self, element: usize, slot: usize, value: bool) -> Result<()> {
        if self.config.try_get(element, slot)? == value {
            return Err(Error::FlipRejected(format!(
                "C[{element},{slot}] is already {}",
                value as u8
            )));
        }
        self.flip_commit(element, slot)
    }

    /// `||M A v - v|| / ||v||` for a fixed probe vector `v`.
    pub fn probe_residual(&self) -> f64 {
        let dim = self.system.dim();
        let v = CVector::from_fn(dim, |i, _| Complex64::from_polar(1.0, 0.37 * i as f64));
        let sv = self
            .system
            .s_ss_times(&CMatrix::from_column_slice(dim, 1, v.as_slice()))
            .column(0)
            .into_owned();
        let av = &v - &self.system.phi * sv;
        (&self.m * av - &v).norm() / v.norm()
    }

    /// `||M (I - Phi~ S~_SS) - I||_F / ||I||_F`
    pub fn residual(&self) -> f64 {
        let dim = self.system.dim();
        let a = self.system.system_matrix();
        (linalg::matmul(&self.m, &a) - CMatrix::identity(dim, dim)).norm() / (dim as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::harmonic_response;
    use crate::model::PortPartition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(ns: usize, m: u32) -> (MultiFrequencyScattering, LoadStates) {
        let p = PortPartition::contiguous(1, 2, ns).unwrap();
        let n = p.total();
        let s = CMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j), i.max(j));
            let d = (b - a) as f64;
            if i == j {
                Complex64::new(0.1, -0.05)
            } else {
                Complex64::from_polar(0.2 / (1.0 + d), 1.3 * d + 0.2 * a as f64)
            }
        });
        let h = HarmonicSet::symmetric(m);
        let s = MultiFrequencyScattering::uniform(p, h, s, 2.4e9, 1e5).unwrap();
        let l = LoadStates::uniform(h, Complex64::from_polar(0.97, 0.3), Complex64::from_polar(0.93, -2.6)).unwrap();
        (s, l)
    }

    fn rel(a: &CVector, b: &CVector) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn init_matches_full_path() {
        let (s, l) = setup(3, 2);
        let h = HarmonicSet::symmetric(2);
        let c = ConfigMatrix::from_rows(&[vec![1, 0, 1], vec![0, 0, 1], vec![1, 1, 0]]).unwrap();
        let ws = FlipWorkspace::with_unit_input(&s, &l, &c, h, ModelFidelity::McAware, 1).unwrap();
        let full = harmonic_response(&s, &l, &c, h, ModelFidelity::McAware, 1).unwrap();
        assert!(rel(ws.response(), &full) < 1e-12);
    }

    #[test]
    fn static_init_residual() {
        let (s, l) = setup(3, 2);
        let c = ConfigMatrix::constant_rows(&[true, false, true], 4);
        let ws = FlipWorkspace::with_unit_input(&s, &l, &c, HarmonicSet::symmetric(2), ModelFidelity::McAware, 1).unwrap();
        assert!(ws.residual() <= 1e-9);
        assert!(ws.response().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rebuild_is_idempotent() {
        let (s, l) = setup(3, 1);
        let c = ConfigMatrix::from_rows(&[vec![1, 0], vec![0, 0], vec![1, 1]]).unwrap();
        let mut ws = FlipWorkspace::with_unit_input(&s, &l, &c, HarmonicSet::symmetric(1), ModelFidelity::McAware, 1).unwrap();
        let b0 = ws.response().clone();
        let m0 = ws.inverse().clone();
        ws.refresh().unwrap();
        assert_eq!(ws.response(), &b0);
        assert_eq!(ws.inverse(), &m0);
    }

    #[test]
    fn flip_evaluate_matches_full_recompute() {
        let (s, l) = setup(4, 3);
        let h = HarmonicSet::symmetric(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for fidelity in [ModelFidelity::McAware, ModelFidelity::Cascaded] {
            for _ in 0..20 {
                let c = ConfigMatrix::random(4, 5, &mut rng);
                let ws = FlipWorkspace::with_unit_input(&s, &l, &c, h, fidelity, 1).unwrap();
                for i in 0..4 {
                    for q in 0..5 {
                        let fast = ws.flip_response(i, q).unwrap();
                        let full = harmonic_response(&s, &l, &c.flipped(i, q), h, fidelity, 1).unwrap();
                        assert!(rel(&fast, &full) < 1e-9, "{}", rel(&fast, &full));
                    }
                }
            }
        }
    }

    #[test]
    fn flip_and_flip_back() {
        let (s, l) = setup(3, 2);
        let h = HarmonicSet::symmetric(2);
        let c = ConfigMatrix::from_rows(&[vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]]).unwrap();
        let mut ws = FlipWorkspace::with_unit_input(&s, &l, &c, h, ModelFidelity::McAware, 1).unwrap();
        let b0 = ws.response().clone();
        ws.flip_commit(1, 2).unwrap();
        let back = ws.flip_response(1, 2).unwrap();
        assert!(rel(&back, &b0) < 1e-12);
    }

    #[test]
    fn single_slot_flip_stays_static() {
        let (s, l) = setup(3, 2);
        let h = HarmonicSet::symmetric(2);
        let c = ConfigMatrix::zeros(3, 1);
        let ws = FlipWorkspace::with_unit_input(&s, &l, &c, h, ModelFidelity::McAware, 1).unwrap();
        for i in 0..3 {
            let b = ws.flip_response(i, 0).unwrap();
            assert!(b.norm() < 1e-15, "{}", b.norm());
        }
    }

    #[test]
    fn commits_track_from_scratch_state() {
        let (s, l) = setup(4, 2);
        let h = HarmonicSet::symmetric(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = ConfigMatrix::random(4, 3, &mut rng);
        let mut ws = FlipWorkspace::with_unit_input(&s, &l, &c, h, ModelFidelity::McAware, 1).unwrap();
        ws.set_refresh_every(1000);
        for step in 0..30 {
            let i = step % 4;
            let q = (step * 7) % 3;
            ws.flip_commit(i, q).unwrap();
            let fresh = FlipWorkspace::with_unit_input(&s, &l, ws.config(), h, ModelFidelity::McAware, 1).unwrap();
            let err = (ws.inverse() - fresh.inverse()).norm() / fresh.inverse().norm();
            assert!(err <= 1e-9, "step {step}: {err}");
            assert!(rel(ws.response(), fresh.response()) <= 1e-9);
        }
        assert!(ws.residual() <= 1e-9);
    }

    #[test]
    fn periodic_refactorization() {
        let (s, l) = setup(2, 1);
        let h = HarmonicSet::symmetric(1);
        let c = ConfigMatrix::zeros(2, 3);
        let mut ws = FlipWorkspace::with_unit_input(&s, &l, &c, h, ModelFidelity::McAware, 1).unwrap();
        ws.set_refresh_every(4);
        for step in 0..4 {
            ws.flip_commit(step % 2, step % 3).unwrap();
        }
        assert_eq!(ws.refresh_count(), 1);
        assert_eq!(ws.commits_since_refresh(), 0);
        ws.flip_commit(0, 0).unwrap();
        assert_eq!(ws.commits_since_refresh(), 1);
    }

    #[test]
    fn no_op_assignment_rejected() {
        let (s, l) = setup(2, 1);
        let c = ConfigMatrix::zeros(2, 2);
        let mut ws = FlipWorkspace::with_unit_input(&s, &l, &c, HarmonicSet::symmetric(1), ModelFidelity::McAware, 1).unwrap();
        assert!(matches!(ws.set_bit(0, 1, false), Err(Error::FlipRejected(_))));
        ws.set_bit(0, 1, true).unwrap();
        assert!(ws.config().get(0, 1));
        assert!(ws.flip_response(2, 0).is_err());
    }
}
