//! Harmonic-coupling Fourier coefficients of the slot-modulated loads and the
//! augmented (multi-frequency) load and scattering matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ConfigMatrix, HarmonicSet, LoadStates, MultiFrequencyScattering, PortGroup};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `exp(-j 2 pi k s / Q)` with the phase reduced modulo `Q` before scaling.
fn unit_phasor(k: i64, s: i64, slots: usize) -> Complex64 {
    let q = slots as i64;
    let reduced = (k * s).rem_euclid(q);
    Complex64::from_polar(1.0, -2.0 * PI * reduced as f64 / q as f64)
}

/// Normalized integral of `exp(-j 2 pi k t / T_m)` over slot `slot` (0-based)
/// of `slots` equal slots.
pub fn slot_integral(slot: usize, k: i32, slots: usize) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0 / slots as f64, 0.0);
    }
    let k64 = k as i64;
    let s = slot as i64;
    let num = unit_phasor(k64, s, slots) - unit_phasor(k64, s + 1, slots);
    num / Complex64::new(0.0, 2.0 * PI * k as f64)
}

/// Fourier coefficient of the binary on/off sequence `row` at difference
/// frequency `k`, normalized so the load coefficient is
/// `beta + (alpha - beta) * waveform_coefficient(row, k)` for `k = 0` and
/// `(alpha - beta) * waveform_coefficient(row, k)` otherwise.
///
/// Uses summation by parts over the slot transitions, so constant rows give
/// exactly zero for every `k != 0`.
pub fn waveform_coefficient(row: &[bool], k: i32) -> Complex64 {
    let slots = row.len();
    if k == 0 {
        let on = row.iter().filter(|&&b| b).count();
        return Complex64::new(on as f64 / slots as f64, 0.0);
    }
    let mut acc = ZERO;
    for q in 0..slots {
        let prev = row[(q + slots - 1) % slots];
        let step = row[q] as i32 - prev as i32;
        if step != 0 {
            acc += unit_phasor(k as i64, q as i64, slots) * step as f64;
        }
    }
    if acc == ZERO {
        return ZERO;
    }
    acc / Complex64::new(0.0, 2.0 * PI * k as f64)
}

/// `phi^(h_n, h_m)` for one element whose slot pattern is `row`, using the load
/// states at the incident harmonic `h_m`.
pub fn fourier_coefficient(loads: &LoadStates, row: &[bool], h_n: i32, h_m: i32) -> Result<Complex64> {
    if row.is_empty() {
        return Err(Error::InvalidConfig("empty slot sequence".into()));
    }
    let alpha = loads.alpha(h_m)?;
    let beta = loads.beta(h_m)?;
    Ok(combine(alpha, beta, waveform_coefficient(row, h_n - h_m), h_n == h_m))
}

fn combine(alpha: Complex64, beta: Complex64, w: Complex64, dc: bool) -> Complex64 {
    if dc {
        // Exact endpoints for constant rows.
        if w.re == 1.0 {
            return alpha;
        }
        if w.re == 0.0 {
            return beta;
        }
        beta + (alpha - beta) * w
    } else if w == ZERO {
        ZERO
    } else {
        (alpha - beta) * w
    }
}

/// Diagonal `N_S x N_S` block `Phi^(h_n, h_m)`.
pub fn assemble_phi_block(
    loads: &LoadStates,
    config: &ConfigMatrix,
    h_n: i32,
    h_m: i32,
) -> Result<DMatrix<Complex64>> {
    let ns = config.elements();
    let mut block = DMatrix::zeros(ns, ns);
    for i in 0..ns {
        block[(i, i)] = fourier_coefficient(loads, config.row(i), h_n, h_m)?;
    }
    Ok(block)
}

/// Augmented load matrix `Phi~` in harmonic-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLoadMatrix {
    matrix: DMatrix<Complex64>,
    harmonics: HarmonicSet,
    elements: usize,
}

impl AugmentedLoadMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn harmonics(&self) -> HarmonicSet {
        self.harmonics
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    /// Copy of block `(n, m)` (block indices, not harmonic orders).
    pub fn block(&self, n: usize, m: usize) -> DMatrix<Complex64> {
        let ns = self.elements;
        self.matrix.view((n * ns, m * ns), (ns, ns)).into_owned()
    }
}

pub fn assemble_phi_augmented(
    loads: &LoadStates,
    config: &ConfigMatrix,
    harmonics: HarmonicSet,
) -> Result<AugmentedLoadMatrix> {
    loads.require(&harmonics)?;
    let ns = config.elements();
    let nh = harmonics.len();
    let span = 2 * harmonics.max_order() as i32;
    let mut matrix = DMatrix::zeros(nh * ns, nh * ns);
    // One waveform coefficient per (element, k); loads enter as a per-h_m scale.
    let mut waveform = vec![ZERO; (2 * span as usize + 1) * ns];
    for i in 0..ns {
        let row = config.row(i);
        for k in -span..=span {
            waveform[(k + span) as usize * ns + i] = waveform_coefficient(row, k);
        }
    }
    for (m, h_m) in harmonics.orders().enumerate() {
        let alpha = loads.alpha(h_m)?;
        let beta = loads.beta(h_m)?;
        for (n, h_n) in harmonics.orders().enumerate() {
            let k = h_n - h_m;
            for i in 0..ns {
                let w = waveform[(k + span) as usize * ns + i];
                matrix[(n * ns + i, m * ns + i)] = combine(alpha, beta, w, k == 0);
            }
        }
    }
    Ok(AugmentedLoadMatrix {
        matrix,
        harmonics,
        elements: ns,
    })
}

/// Change of the element-`i` load sub-matrix (`|H| x |H|`, indexed by block
/// position) caused by flipping `C[i, slot]` away from its current value.
pub fn flip_delta(
    loads: &LoadStates,
    harmonics: HarmonicSet,
    slots: usize,
    slot: usize,
    currently_on: bool,
) -> Result<DMatrix<Complex64>> {
    let nh = harmonics.len();
    let sign = if currently_on { -1.0 } else { 1.0 };
    let mut delta = DMatrix::zeros(nh, nh);
    for (m, h_m) in harmonics.orders().enumerate() {
        let step = (loads.alpha(h_m)? - loads.beta(h_m)?) * sign;
        for (n, h_n) in harmonics.orders().enumerate() {
            delta[(n, m)] = step * slot_integral(slot, h_n - h_m, slots);
        }
    }
    Ok(delta)
}

/// Augmented block-diagonal scattering block `S~_{rows, cols}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedScatteringBlock {
    matrix: DMatrix<Complex64>,
    rows: PortGroup,
    cols: PortGroup,
}

impl AugmentedScatteringBlock {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn role(&self) -> (PortGroup, PortGroup) {
        (self.rows, self.cols)
    }
}

pub fn assemble_s_augmented(
    scattering: &MultiFrequencyScattering,
    harmonics: HarmonicSet,
    rows: PortGroup,
    cols: PortGroup,
) -> Result<AugmentedScatteringBlock> {
    let p = scattering.partition();
    let nr = p.ports(rows).len();
    let nc = p.ports(cols).len();
    let nh = harmonics.len();
    let mut matrix = DMatrix::zeros(nh * nr, nh * nc);
    for (n, h) in harmonics.orders().enumerate() {
        let b = scattering.block(h, rows, cols)?;
        matrix.view_mut((n * nr, n * nc), (nr, nc)).copy_from(&b);
    }
    Ok(AugmentedScatteringBlock { matrix, rows, cols })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PortPartition;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn uniform_loads(m: u32, a: Complex64, b: Complex64) -> LoadStates {
        LoadStates::uniform(HarmonicSet::symmetric(m), a, b).unwrap()
    }

    fn dispersive_loads(m: u32) -> LoadStates {
        let h = HarmonicSet::symmetric(m);
        let alpha: BTreeMap<_, _> = h
            .orders()
            .map(|k| (k, Complex64::from_polar(0.95, 0.3 + 0.01 * k as f64)))
            .collect();
        let beta: BTreeMap<_, _> = h
            .orders()
            .map(|k| (k, Complex64::from_polar(0.9, 2.5 - 0.02 * k as f64)))
            .collect();
        LoadStates::new(alpha, beta).unwrap()
    }

    fn bools(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    /// Midpoint-rule quadrature of the Fourier integral over one period.
    fn quadrature(loads: &LoadStates, row: &[bool], h_n: i32, h_m: i32, points: usize) -> Complex64 {
        let q = row.len();
        let k = (h_n - h_m) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..points {
            let t = (p as f64 + 0.5) / points as f64;
            let slot = ((t * q as f64) as usize).min(q - 1);
            let r = loads.state(h_m, row[slot]).unwrap();
            acc += r * Complex64::from_polar(1.0, -2.0 * PI * k * t);
        }
        acc / points as f64
    }

    #[test]
    fn static_row_has_only_dc() {
        let l = uniform_loads(3, Complex64::new(0.9, 0.1), Complex64::new(-0.8, 0.2));
        for bit in [0u8, 1] {
            let row = bools(&[bit; 5]);
            let r = l.state(0, bit == 1).unwrap();
            assert_eq!(fourier_coefficient(&l, &row, 0, 0).unwrap(), r);
            for k in 1..=3 {
                assert_eq!(fourier_coefficient(&l, &row, k, 0).unwrap(), ZERO);
                assert_eq!(fourier_coefficient(&l, &row, -k, 0).unwrap(), ZERO);
            }
        }
    }

    #[test]
    fn alternating_pair_quadrature_oracle() {
        let a = Complex64::new(0.9, 0.0);
        let b = Complex64::new(-0.9, 0.0);
        let l = uniform_loads(1, a, b);
        let row = bools(&[1, 0]);
        let phi = fourier_coefficient(&l, &row, 1, 0).unwrap();
        let oracle = quadrature(&l, &row, 1, 0, 100_000);
        assert!((phi - oracle).norm() < 1e-8);
        let expected = (a - b) / Complex64::new(0.0, PI);
        assert!((phi - expected).norm() < 1e-15);
        assert!((phi.norm() - (a - b).norm() / PI).abs() < 1e-15);

        let dc = fourier_coefficient(&l, &row, 0, 0).unwrap();
        assert!((dc - (a + b) / 2.0).norm() < 1e-15);
        assert!((quadrature(&l, &row, 0, 0, 100_000) - dc).norm() < 1e-8);
    }

    #[test]
    fn square_wave_has_no_even_harmonics() {
        let l = uniform_loads(2, Complex64::new(0.7, 0.3), Complex64::new(-0.2, 0.6));
        let row = bools(&[1, 1, 0, 0]);
        let phi = fourier_coefficient(&l, &row, 2, 0).unwrap();
        assert!(phi.norm() < 1e-16);
        assert!(quadrature(&l, &row, 2, 0, 100_000).norm() < 1e-8);
    }

    #[test]
    fn closed_form_equals_slot_sum() {
        let l = dispersive_loads(3);
        let row = bools(&[1, 0, 0, 1, 1, 0, 1]);
        for h_n in -3..=3 {
            for h_m in -3..=3 {
                let direct: Complex64 = (0..row.len())
                    .map(|q| l.state(h_m, row[q]).unwrap() * slot_integral(q, h_n - h_m, row.len()))
                    .sum();
                let phi = fourier_coefficient(&l, &row, h_n, h_m).unwrap();
                assert!((phi - direct).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn dispersion_uses_incident_harmonic() {
        let l = dispersive_loads(2);
        let row = bools(&[1, 0, 0]);
        let phi = fourier_coefficient(&l, &row, 2, -1).unwrap();
        let w = waveform_coefficient(&row, 3);
        let expected = (l.alpha(-1).unwrap() - l.beta(-1).unwrap()) * w;
        assert_eq!(phi, expected);
    }

    #[test]
    fn blocks_are_diagonal_and_static_is_block_diagonal() {
        let l = uniform_loads(2, Complex64::new(0.9, 0.0), Complex64::new(-0.9, 0.0));
        let c = ConfigMatrix::from_rows(&[vec![1, 0, 1], vec![0, 0, 1], vec![1, 1, 1]]).unwrap();
        let b = assemble_phi_block(&l, &c, 1, -1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(b[(i, j)], ZERO);
                }
            }
        }
        let s = ConfigMatrix::constant_rows(&[true, false, true], 4);
        let h = HarmonicSet::symmetric(2);
        let phi = assemble_phi_augmented(&l, &s, h).unwrap();
        for n in 0..5 {
            for m in 0..5 {
                let blk = phi.block(n, m);
                if n != m {
                    assert!(blk.iter().all(|z| *z == ZERO));
                } else {
                    assert_eq!(blk[(0, 0)], l.alpha(0).unwrap());
                    assert_eq!(blk[(1, 1)], l.beta(0).unwrap());
                }
            }
        }
    }

    #[test]
    fn single_harmonic_is_time_average() {
        let a = Complex64::new(0.6, 0.6);
        let b = Complex64::new(-0.9, 0.1);
        let l = uniform_loads(0, a, b);
        let c = ConfigMatrix::from_rows(&[vec![1, 0, 0, 0], vec![1, 1, 1, 0]]).unwrap();
        let phi = assemble_phi_augmented(&l, &c, HarmonicSet::symmetric(0)).unwrap();
        assert_eq!(phi.matrix().shape(), (2, 2));
        assert!((phi.matrix()[(0, 0)] - (0.25 * a + 0.75 * b)).norm() < 1e-15);
        assert!((phi.matrix()[(1, 1)] - (0.75 * a + 0.25 * b)).norm() < 1e-15);
    }

    #[test]
    fn dispersionless_phi_is_block_toeplitz() {
        let l = uniform_loads(3, Complex64::new(0.8, -0.3), Complex64::new(-0.5, 0.7));
        let c = ConfigMatrix::from_rows(&[vec![1, 0, 1, 1, 0], vec![0, 1, 1, 0, 0]]).unwrap();
        let h = HarmonicSet::symmetric(3);
        let phi = assemble_phi_augmented(&l, &c, h).unwrap();
        for n in 1..7 {
            for m in 1..7 {
                assert_eq!(phi.block(n, m), phi.block(n - 1, m - 1));
            }
        }
    }

    #[test]
    fn augmented_scattering_is_block_diagonal() {
        let p = PortPartition::contiguous(1, 2, 3).unwrap();
        let h = HarmonicSet::symmetric(1);
        let mut mats = BTreeMap::new();
        for k in h.orders() {
            mats.insert(
                k,
                DMatrix::from_fn(6, 6, |i, j| Complex64::new((i * 6 + j) as f64 * 0.01, k as f64 * 0.001)),
            );
        }
        let s = MultiFrequencyScattering::new(p, h, mats, 2.4e9, 1e5).unwrap();
        let blk = assemble_s_augmented(&s, h, PortGroup::Rx, PortGroup::Ris).unwrap();
        assert_eq!(blk.matrix().shape(), (6, 9));
        assert_eq!(blk.role(), (PortGroup::Rx, PortGroup::Ris));
        for r in 0..6 {
            for c in 0..9 {
                if r / 2 != c / 3 {
                    assert_eq!(blk.matrix()[(r, c)], ZERO);
                }
            }
        }
        let s1 = assemble_s_augmented(&s, HarmonicSet::symmetric(0), PortGroup::Rx, PortGroup::Ris).unwrap();
        assert_eq!(s1.into_matrix(), s.block(0, PortGroup::Rx, PortGroup::Ris).unwrap());
        assert!(matches!(
            assemble_s_augmented(&s, HarmonicSet::symmetric(2), PortGroup::Rx, PortGroup::Tx),
            Err(Error::MissingHarmonic(_))
        ));
    }

    #[test]
    fn flip_delta_matches_difference_of_assemblies() {
        let l = dispersive_loads(2);
        let h = HarmonicSet::symmetric(2);
        let c = ConfigMatrix::from_rows(&[vec![1, 0, 0, 1], vec![0, 1, 1, 0]]).unwrap();
        let before = assemble_phi_augmented(&l, &c, h).unwrap();
        let after = assemble_phi_augmented(&l, &c.flipped(1, 2), h).unwrap();
        let delta = flip_delta(&l, h, 4, 2, c.get(1, 2)).unwrap();
        for n in 0..5 {
            for m in 0..5 {
                let d = after.matrix()[(n * 2 + 1, m * 2 + 1)] - before.matrix()[(n * 2 + 1, m * 2 + 1)];
                assert!((d - delta[(n, m)]).norm() < 1e-15);
            }
        }
    }

    /// Partial energy sums over |k| <= K of a binary row with loads `a`, `b`.
    fn partial_energy(a: Complex64, b: Complex64, row: &[bool], kmax: i32) -> Vec<f64> {
        let mut out = Vec::new();
        let mut total = combine(a, b, waveform_coefficient(row, 0), true).norm_sqr();
        out.push(total);
        for k in 1..=kmax {
            total += combine(a, b, waveform_coefficient(row, k), false).norm_sqr();
            total += combine(a, b, waveform_coefficient(row, -k), false).norm_sqr();
            out.push(total);
        }
        out
    }

    #[test]
    fn parseval_partial_sums_are_monotone_and_bounded() {
        let row = bools(&[1, 0, 1, 1, 0, 0, 0]);
        // Passive but off the unit circle: bounded by max(|a|^2, |b|^2).
        let (a, b) = (Complex64::from_polar(0.8, 0.4), Complex64::from_polar(0.6, 2.9));
        let sums = partial_energy(a, b, &row, 200);
        assert!(sums.windows(2).all(|w| w[1] >= w[0]));
        assert!(*sums.last().unwrap() <= 0.64 + 1e-12);
    }

    #[test]
    fn parseval_unit_circle_limit() {
        let row = bools(&[1, 0, 1, 1, 0, 0, 0]);
        // Low-contrast pair: the tail beyond K = 200 is below 1e-3.
        let (a, b) = (Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, -0.3));
        let sums = partial_energy(a, b, &row, 200);
        assert!(*sums.last().unwrap() >= 0.999);
        assert!(*sums.last().unwrap() <= 1.0 + 1e-12);

        // High contrast: |phi(k)| <= |a - b| T / (2 pi |k|) with T transitions,
        // so the tail beyond K is at most |a - b|^2 T^2 / (2 pi^2 K).
        let (a, b) = (Complex64::from_polar(1.0, 0.4), Complex64::from_polar(1.0, 2.9));
        let transitions = 4.0;
        for kmax in [50, 200, 1000] {
            let sum = *partial_energy(a, b, &row, kmax).last().unwrap();
            let tail = (a - b).norm_sqr() * transitions * transitions / (2.0 * PI * PI * kmax as f64);
            assert!(sum <= 1.0 + 1e-12);
            assert!(sum >= 1.0 - tail, "K={kmax}: {sum}");
        }
    }

    proptest! {
        #[test]
        fn cyclic_shift_phase_law(bits in proptest::collection::vec(any::<bool>(), 1..12), shift in 0usize..12, k in -20i32..20) {
            let q = bits.len();
            let shift = shift % q;
            let shifted: Vec<bool> = (0..q).map(|s| bits[(s + shift) % q]).collect();
            let w = waveform_coefficient(&bits, k);
            let ws = waveform_coefficient(&shifted, k);
            let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * shift as f64 / q as f64);
            prop_assert!((ws - w * phase).norm() < 1e-14);
            prop_assert!((ws.norm() - w.norm()).abs() < 1e-14);
        }

        #[test]
        fn static_rows_vanish_off_dc(q in 1usize..16, on in any::<bool>(), k in 1i32..60) {
            let row = vec![on; q];
            prop_assert_eq!(waveform_coefficient(&row, k), ZERO);
            prop_assert_eq!(waveform_coefficient(&row, -k), ZERO);
        }
    }
}
