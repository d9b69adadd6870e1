//! Optical elements as operators on [`QuantumState`]: two-port beam
//! splitters, mirrors and the parametric down-conversion unitary in both
//! its first-order and exactly exponentiated forms.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasisState, ModeId, QuantumState, IOTA};

const ONE_OVER_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn factorial(n: u32) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// 2x2 complex matrix, column `j` holding the image of input creation
/// operator `j` over the two output modes:
/// `a†_in_j -> m[0][j] a†_out_0 + m[1][j] a†_out_1`.
pub type BsMatrix = [[Complex64; 2]; 2];

/// The splitting convention for a beam fed into a single port:
/// the occupied input maps to (|v> + i|u>)/sqrt(2), i.e. column 0 over
/// output ports (v, u).
pub fn bs_matrix_input() -> BsMatrix {
    let h = Complex64::new(ONE_OVER_SQRT2, 0.0);
    [[h, IOTA * h], [IOTA * h, h]]
}

/// The detection-side convention: |u> -> (|c> + i|d>)/sqrt(2) and
/// |v> -> (i|c> + |d>)/sqrt(2), with inputs ordered (u, v) and outputs
/// (c, d).
pub fn bs_matrix_final() -> BsMatrix {
    let h = Complex64::new(ONE_OVER_SQRT2, 0.0);
    [[h, IOTA * h], [IOTA * h, h]]
}

fn matrix_is_unitary(m: &BsMatrix, tol: f64) -> bool {
    // M · M† = I
    for r in 0..2 {
        for c in 0..2 {
            let acc: Complex64 = (0..2).map(|k| m[r][k] * m[c][k].conj()).sum();
            let expected = if r == c { 1.0 } else { 0.0 };
            if (acc - Complex64::new(expected, 0.0)).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// A two-port beam splitter between named input and output modes.
#[derive(Debug, Clone)]
pub struct BeamSplitterSpec {
    pub in_modes: (ModeId, ModeId),
    pub out_modes: (ModeId, ModeId),
    pub matrix: BsMatrix,
}

impl BeamSplitterSpec {
    pub fn new(
        in_modes: (ModeId, ModeId),
        out_modes: (ModeId, ModeId),
        matrix: BsMatrix,
    ) -> Result<Self> {
        if in_modes.0 == in_modes.1 || out_modes.0 == out_modes.1 {
            return Err(Error::InvalidSpec(
                "beam splitter ports must be distinct".into(),
            ));
        }
        if !matrix_is_unitary(&matrix, 1e-12) {
            return Err(Error::NonUnitaryMatrix);
        }
        Ok(BeamSplitterSpec {
            in_modes,
            out_modes,
            matrix,
        })
    }
}

/// Applies the bosonic substitution of a beam splitter.
///
/// For input occupations (m, n) the transform expands via binomial sums
/// over the output ports; the total photon number on the pair is conserved,
/// so the redistribution never overflows when each mode's occupation stays
/// within the pair total (a `CutoffExceeded` can only arise when the pair
/// total itself exceeds the cutoff).
pub fn apply_beam_splitter(state: &QuantumState, spec: &BeamSplitterSpec) -> Result<QuantumState> {
    let modes = state.modes().clone();
    for m in [
        spec.in_modes.0,
        spec.in_modes.1,
        spec.out_modes.0,
        spec.out_modes.1,
    ] {
        if m.index() >= modes.len() {
            return Err(Error::UnregisteredMode(format!("#{}", m.index())));
        }
    }
    let (i1, i2) = spec.in_modes;
    let (o1, o2) = spec.out_modes;
    let mut out: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
    for (basis, amp) in state.terms() {
        let m = basis.occupation(i1) as u32;
        let n = basis.occupation(i2) as u32;
        let mut base = basis.clone();
        base = FockBasisState::from_occupations(
            &modes,
            &{
                let mut pairs: Vec<(ModeId, u8)> = modes
                    .ids()
                    .map(|id| (id, base.occupation(id)))
                    .collect();
                for p in pairs.iter_mut() {
                    if p.0 == i1 || p.0 == i2 {
                        p.1 = 0;
                    }
                }
                pairs
            },
        );
        if base.occupation(o1) != 0 || base.occupation(o2) != 0 {
            return Err(Error::InvalidSpec(
                "beam splitter output mode already occupied".into(),
            ));
        }
        if m + n == 0 {
            *out.entry(base).or_insert(Complex64::new(0.0, 0.0)) += amp;
            continue;
        }
        let prefactor = amp / (factorial(m) * factorial(n)).sqrt();
        for k in 0..=m {
            for l in 0..=n {
                let n_o1 = k + l;
                let n_o2 = m + n - n_o1;
                if n_o1 > state.cutoff() as u32 || n_o2 > state.cutoff() as u32 {
                    return Err(Error::CutoffExceeded {
                        mode: modes.name(if n_o1 > state.cutoff() as u32 { o1 } else { o2 }).to_string(),
                        requested: n_o1.max(n_o2),
                        cutoff: state.cutoff(),
                    });
                }
                let coeff = binomial(m, k)
                    * binomial(n, l)
                    * (factorial(n_o1) * factorial(n_o2)).sqrt();
                let weight = spec.matrix[0][0].powu(k)
                    * spec.matrix[1][0].powu(m - k)
                    * spec.matrix[0][1].powu(l)
                    * spec.matrix[1][1].powu(n - l);
                let mut occ: Vec<(ModeId, u8)> = modes
                    .ids()
                    .map(|id| (id, base.occupation(id)))
                    .collect();
                for p in occ.iter_mut() {
                    if p.0 == o1 {
                        p.1 = n_o1 as u8;
                    } else if p.0 == o2 {
                        p.1 = n_o2 as u8;
                    }
                }
                let target = FockBasisState::from_occupations(&modes, &occ);
                *out.entry(target).or_insert(Complex64::new(0.0, 0.0)) +=
                    prefactor * Complex64::new(coeff, 0.0) * weight;
            }
        }
    }
    QuantumState::from_terms(modes, state.cutoff(), out)
}

/// Truncation order of the down-conversion unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionOrder {
    /// U = 1 + q a_F a†_S a†_I - q* a†_F a_S a_I, valid for |q| << 1.
    First,
    /// Exact exponential of the truncated generator.
    Exact,
}

/// Parametric down-conversion in a nonlinear crystal: one pump photon is
/// exchanged for a signal-idler pair with amplitude `q`.
#[derive(Debug, Clone)]
pub struct DownConversionSpec {
    pub pump: ModeId,
    pub signal_out: ModeId,
    pub idler_out: ModeId,
    pub q: Complex64,
    pub order: ExpansionOrder,
}

impl DownConversionSpec {
    pub fn new(
        pump: ModeId,
        signal_out: ModeId,
        idler_out: ModeId,
        q: Complex64,
        order: ExpansionOrder,
    ) -> Result<Self> {
        if pump == signal_out || pump == idler_out || signal_out == idler_out {
            return Err(Error::InvalidSpec(
                "crystal pump/signal/idler modes must be distinct".into(),
            ));
        }
        if order == ExpansionOrder::First && q.norm() >= 0.1 {
            return Err(Error::UnsupportedParam(format!(
                "|q| = {} is too large for the first-order expansion (needs |q| < 0.1)",
                q.norm()
            )));
        }
        Ok(DownConversionSpec {
            pump,
            signal_out,
            idler_out,
            q,
            order,
        })
    }
}

/// First-order down-conversion:
/// `state + q a_F a†_S a†_I state - q* a†_F a_S a_I state`.
///
/// Not exactly unitary; the norm deviation is O(|q|^2) and is bounded by
/// the exact oracle below.
pub fn apply_down_conversion(state: &QuantumState, spec: &DownConversionSpec) -> Result<QuantumState> {
    match spec.order {
        ExpansionOrder::First => {}
        ExpansionOrder::Exact => return apply_down_conversion_exact(state, spec),
    }
    let forward = state
        .apply_annihilation(spec.pump)?
        .apply_creation(spec.signal_out)?
        .apply_creation(spec.idler_out)?;
    let reverse = state
        .apply_annihilation(spec.signal_out)?
        .apply_annihilation(spec.idler_out)?
        .apply_creation(spec.pump)?;
    state
        .add(&forward.scaled(spec.q))?
        .add(&reverse.scaled(-spec.q.conj()))
}

/// Exact exponentiation of the truncated generator
/// `G = q a_F a†_S a†_I - q* a†_F a_S a_I`, applied as a dense matrix
/// exponential over the three-mode subspace (identity on all other modes).
///
/// With overflow terms projected out the truncated G stays anti-Hermitian,
/// so the result is unitary on the truncated space. Serves as the oracle
/// for the first-order expansion.
pub fn apply_down_conversion_exact(
    state: &QuantumState,
    spec: &DownConversionSpec,
) -> Result<QuantumState> {
    let modes = state.modes().clone();
    for m in [spec.pump, spec.signal_out, spec.idler_out] {
        if m.index() >= modes.len() {
            return Err(Error::UnregisteredMode(format!("#{}", m.index())));
        }
    }
    let side = state.cutoff() as usize + 1;
    let dim = side * side * side;
    let idx = |p: usize, s: usize, i: usize| (p * side + s) * side + i;

    let mut gen = DMatrix::<Complex64>::zeros(dim, dim);
    for p in 0..side {
        for s in 0..side {
            for i in 0..side {
                let col = idx(p, s, i);
                // q a_F a†_S a†_I
                if p >= 1 && s + 1 < side && i + 1 < side {
                    let f = (p as f64).sqrt() * ((s + 1) as f64).sqrt() * ((i + 1) as f64).sqrt();
                    gen[(idx(p - 1, s + 1, i + 1), col)] += spec.q * f;
                }
                // -q* a†_F a_S a_I
                if p + 1 < side && s >= 1 && i >= 1 {
                    let f = ((p + 1) as f64).sqrt() * (s as f64).sqrt() * (i as f64).sqrt();
                    gen[(idx(p + 1, s - 1, i - 1), col)] -= spec.q.conj() * f;
                }
            }
        }
    }
    let unitary = expm(&gen);

    // Group terms by the occupations of all other modes, then act on the
    // (pump, signal, idler) sub-vector of each group.
    let mut groups: BTreeMap<FockBasisState, Vec<Complex64>> = BTreeMap::new();
    for (basis, amp) in state.terms() {
        let p = basis.occupation(spec.pump) as usize;
        let s = basis.occupation(spec.signal_out) as usize;
        let i = basis.occupation(spec.idler_out) as usize;
        let mut rest: Vec<(ModeId, u8)> =
            modes.ids().map(|id| (id, basis.occupation(id))).collect();
        for e in rest.iter_mut() {
            if e.0 == spec.pump || e.0 == spec.signal_out || e.0 == spec.idler_out {
                e.1 = 0;
            }
        }
        let key = FockBasisState::from_occupations(&modes, &rest);
        groups
            .entry(key)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim])[idx(p, s, i)] += amp;
    }

    let mut out: Vec<(FockBasisState, Complex64)> = Vec::new();
    for (key, vec_in) in groups {
        let x = DMatrix::from_column_slice(dim, 1, &vec_in);
        let y = &unitary * x;
        for p in 0..side {
            for s in 0..side {
                for i in 0..side {
                    let amp = y[(idx(p, s, i), 0)];
                    if amp == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut occ: Vec<(ModeId, u8)> =
                        modes.ids().map(|id| (id, key.occupation(id))).collect();
                    for e in occ.iter_mut() {
                        if e.0 == spec.pump {
                            e.1 = p as u8;
                        } else if e.0 == spec.signal_out {
                            e.1 = s as u8;
                        } else if e.0 == spec.idler_out {
                            e.1 = i as u8;
                        }
                    }
                    out.push((FockBasisState::from_occupations(&modes, &occ), amp));
                }
            }
        }
    }
    let (state, _) = QuantumState::from_terms(modes, state.cutoff(), out)?.prune_at(1e-300);
    Ok(state)
}

/// Dense matrix exponential by scaling-and-squaring with a Taylor series.
/// The generators handled here have tiny norm, so the series converges in
/// a handful of terms.
pub(crate) fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let one_norm: f64 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let scaling = if one_norm > 0.5 {
        (one_norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / Complex64::new(2f64.powi(scaling as i32), 0.0);

    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=40u64 {
        term = (&term * &scaled) / Complex64::new(k as f64, 0.0);
        let term_norm: f64 = term.iter().map(|c| c.norm()).sum();
        result += &term;
        if term_norm < 1e-18 {
            break;
        }
    }
    for _ in 0..scaling {
        result = &result * &result;
    }
    result
}

/// A mirror: pure phase per photon on one mode.
#[derive(Debug, Clone)]
pub struct MirrorSpec {
    pub mode: ModeId,
    pub phase: Complex64,
}

impl MirrorSpec {
    pub fn new(mode: ModeId, phase: Complex64) -> Result<Self> {
        if (phase.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "mirror phase must have unit magnitude, got |{}| = {}",
                phase,
                phase.norm()
            )));
        }
        Ok(MirrorSpec { mode, phase })
    }
}

/// Multiplies each term by phase^(occupation of the mirror's mode).
pub fn apply_mirror(state: &QuantumState, spec: &MirrorSpec) -> Result<QuantumState> {
    if spec.mode.index() >= state.modes().len() {
        return Err(Error::UnregisteredMode(format!("#{}", spec.mode.index())));
    }
    let terms: Vec<(FockBasisState, Complex64)> = state
        .terms()
        .map(|(b, a)| {
            let n = b.occupation(spec.mode) as u32;
            (b.clone(), a * spec.phase.powu(n))
        })
        .collect();
    QuantumState::from_terms(state.modes().clone(), state.cutoff(), terms)
}

/// Moves all occupation from one mode to another (which must be vacuum in
/// every term). Used for geometric redirection with no phase.
pub fn apply_relabel(state: &QuantumState, from: ModeId, to: ModeId) -> Result<QuantumState> {
    if from == to {
        return Ok(state.clone());
    }
    let modes = state.modes().clone();
    let terms: Vec<(FockBasisState, Complex64)> = state
        .terms()
        .map(|(b, a)| {
            if b.occupation(to) != 0 {
                return Err(Error::InvalidSpec(format!(
                    "relabel target `{}` already occupied",
                    modes.name(to)
                )));
            }
            let n = b.occupation(from);
            let mut occ: Vec<(ModeId, u8)> =
                modes.ids().map(|id| (id, b.occupation(id))).collect();
            for e in occ.iter_mut() {
                if e.0 == from {
                    e.1 = 0;
                } else if e.0 == to {
                    e.1 = n;
                }
            }
            Ok((FockBasisState::from_occupations(&modes, &occ), a))
        })
        .collect::<Result<_>>()?;
    QuantumState::from_terms(modes, state.cutoff(), terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeSet;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_mode() -> (std::sync::Arc<ModeSet>, ModeId, ModeId) {
        let m = ModeSet::register(&["u", "v"]).unwrap();
        let u = m.id("u").unwrap();
        let v = m.id("v").unwrap();
        (m, u, v)
    }

    #[test]
    fn matrices_are_unitary() {
        assert!(matrix_is_unitary(&bs_matrix_input(), 1e-12));
        assert!(matrix_is_unitary(&bs_matrix_final(), 1e-12));
        let m = bs_matrix_final();
        let h = ONE_OVER_SQRT2;
        assert!((m[0][0] - c(h, 0.0)).norm() < 1e-15);
        assert!((m[1][0] - c(0.0, h)).norm() < 1e-15);
        assert!((m[0][1] - c(0.0, h)).norm() < 1e-15);
        assert!((m[1][1] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_photon_split() {
        // |1_in, 0> -> (|v> + i|u>)/sqrt(2) with the input convention.
        let m = ModeSet::register(&["in", "v", "u"]).unwrap();
        let (i, v, u) = (m.id("in").unwrap(), m.id("v").unwrap(), m.id("u").unwrap());
        let s = QuantumState::vacuum(m, 3).apply_creation(i).unwrap();
        let spec = BeamSplitterSpec::new((i, u), (v, u), bs_matrix_input()).unwrap();
        let out = apply_beam_splitter(&s, &spec).unwrap();
        let h = ONE_OVER_SQRT2;
        assert!((out.amplitude_of(&[(v, 1)]) - c(h, 0.0)).norm() < 1e-15);
        assert!((out.amplitude_of(&[(u, 1)]) - c(0.0, h)).norm() < 1e-15);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_passes_through() {
        let m = ModeSet::register(&["in", "v", "u"]).unwrap();
        let (i, v, u) = (m.id("in").unwrap(), m.id("v").unwrap(), m.id("u").unwrap());
        let s = QuantumState::vacuum(m, 3);
        let spec = BeamSplitterSpec::new((i, u), (v, u), bs_matrix_input()).unwrap();
        let out = apply_beam_splitter(&s, &spec).unwrap();
        assert_eq!(out.num_terms(), 1);
        assert_eq!(out.amplitude_of(&[]), c(1.0, 0.0));
    }

    #[test]
    fn hong_ou_mandel_coalescence() {
        // |1_u 1_v> through the final convention bunches into
        // i/sqrt(2) (|2_c> + |2_d>).
        let m = ModeSet::register(&["u", "v", "c", "d"]).unwrap();
        let (u, v) = (m.id("u").unwrap(), m.id("v").unwrap());
        let (cm, dm) = (m.id("c").unwrap(), m.id("d").unwrap());
        let s = QuantumState::vacuum(m, 3)
            .apply_creation(u)
            .unwrap()
            .apply_creation(v)
            .unwrap();
        let spec = BeamSplitterSpec::new((u, v), (cm, dm), bs_matrix_final()).unwrap();
        let out = apply_beam_splitter(&s, &spec).unwrap();
        let h = ONE_OVER_SQRT2;
        assert!((out.amplitude_of(&[(cm, 2)]) - c(0.0, h)).norm() < 1e-12);
        assert!((out.amplitude_of(&[(dm, 2)]) - c(0.0, h)).norm() < 1e-12);
        assert!(out.amplitude_of(&[(cm, 1), (dm, 1)]).norm() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_preserves_norm_and_photon_number() {
        let (m, u, v) = two_mode();
        let spec = BeamSplitterSpec::new((u, v), (u, v), bs_matrix_final()).unwrap();
        for nu in 0u8..=3 {
            for nv in 0u8..=(3 - nu) {
                let mut s = QuantumState::vacuum(m.clone(), 3);
                for _ in 0..nu {
                    s = s.apply_creation(u).unwrap();
                }
                for _ in 0..nv {
                    s = s.apply_creation(v).unwrap();
                }
                let s = s.normalize().unwrap();
                let out = apply_beam_splitter(&s, &spec).unwrap();
                assert!(
                    (out.norm() - 1.0).abs() < 1e-12,
                    "norm broken for ({nu},{nv})"
                );
                for (basis, _) in out.terms() {
                    assert_eq!(basis.total(), (nu + nv) as u32);
                }
            }
        }
    }

    #[test]
    fn beam_splitter_inverse_round_trip() {
        let (m, u, v) = two_mode();
        let fwd = BeamSplitterSpec::new((u, v), (u, v), bs_matrix_final()).unwrap();
        let mat = bs_matrix_final();
        // conjugate transpose
        let inv = [
            [mat[0][0].conj(), mat[1][0].conj()],
            [mat[0][1].conj(), mat[1][1].conj()],
        ];
        let bwd = BeamSplitterSpec::new((u, v), (u, v), inv).unwrap();
        let mut s = QuantumState::vacuum(m, 4)
            .apply_creation(u)
            .unwrap()
            .apply_creation(u)
            .unwrap()
            .apply_creation(v)
            .unwrap()
            .normalize()
            .unwrap();
        s = s.scaled(c(0.3, 0.9).unscale(c(0.3, 0.9).norm()));
        let back = apply_beam_splitter(&apply_beam_splitter(&s, &fwd).unwrap(), &bwd).unwrap();
        for (basis, amp) in s.terms() {
            assert!((back.amplitude(basis) - amp).norm() < 1e-12);
        }
    }

    fn crystal_modes() -> (
        std::sync::Arc<ModeSet>,
        ModeId,
        ModeId,
        ModeId,
    ) {
        let m = ModeSet::register(&["F", "u_S", "u_I"]).unwrap();
        let f = m.id("F").unwrap();
        let s = m.id("u_S").unwrap();
        let i = m.id("u_I").unwrap();
        (m, f, s, i)
    }

    #[test]
    fn down_conversion_creates_a_pair() {
        let (m, f, s, i) = crystal_modes();
        let q = c(1e-3, 0.0);
        let spec = DownConversionSpec::new(f, s, i, q, ExpansionOrder::First).unwrap();
        let pump = QuantumState::vacuum(m, 3).apply_creation(f).unwrap();
        let out = apply_down_conversion(&pump, &spec).unwrap();
        assert!((out.amplitude_of(&[(f, 1)]) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((out.amplitude_of(&[(s, 1), (i, 1)]) - q).norm() < 1e-15);
        assert_eq!(out.num_terms(), 2);
    }

    #[test]
    fn down_conversion_reverse_process() {
        let (m, f, s, i) = crystal_modes();
        let q = c(1e-3, 5e-4);
        let spec = DownConversionSpec::new(f, s, i, q, ExpansionOrder::First).unwrap();
        let pair = QuantumState::vacuum(m, 3)
            .apply_creation(s)
            .unwrap()
            .apply_creation(i)
            .unwrap();
        let out = apply_down_conversion(&pair, &spec).unwrap();
        assert!((out.amplitude_of(&[(s, 1), (i, 1)]) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((out.amplitude_of(&[(f, 1)]) + q.conj()).norm() < 1e-15);
    }

    #[test]
    fn down_conversion_guard_rejects_large_q() {
        let (_, f, s, i) = crystal_modes();
        let err =
            DownConversionSpec::new(f, s, i, c(0.2, 0.0), ExpansionOrder::First).unwrap_err();
        assert!(matches!(err, Error::UnsupportedParam(_)));
        // exact order has no such guard
        DownConversionSpec::new(f, s, i, c(0.2, 0.0), ExpansionOrder::Exact).unwrap();
    }

    #[test]
    fn exact_identity_at_zero_q() {
        let (m, f, s, i) = crystal_modes();
        let spec = DownConversionSpec::new(f, s, i, c(0.0, 0.0), ExpansionOrder::Exact).unwrap();
        let pump = QuantumState::vacuum(m, 3)
            .apply_creation(f)
            .unwrap()
            .apply_creation(f)
            .unwrap()
            .normalize()
            .unwrap();
        let out = apply_down_conversion_exact(&pump, &spec).unwrap();
        for (basis, amp) in pump.terms() {
            assert!((out.amplitude(basis) - amp).norm() < 1e-15);
        }
    }

    #[test]
    fn exact_preserves_norm() {
        let (m, f, s, i) = crystal_modes();
        let spec = DownConversionSpec::new(f, s, i, c(0.05, 0.02), ExpansionOrder::Exact).unwrap();
        // a lopsided but normalized state touching the cutoff boundary
        let mut state = QuantumState::vacuum(m.clone(), 3);
        state = state.apply_creation(f).unwrap();
        let extra = QuantumState::vacuum(m.clone(), 3)
            .apply_creation(s)
            .unwrap()
            .apply_creation(s)
            .unwrap()
            .apply_creation(i)
            .unwrap()
            .scaled(c(0.4, 0.1));
        let state = state.add(&extra).unwrap().normalize().unwrap();
        let out = apply_down_conversion_exact(&state, &spec).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mirror_phases() {
        let m = ModeSet::register(&["a"]).unwrap();
        let a = m.id("a").unwrap();
        let one = QuantumState::vacuum(m.clone(), 3).apply_creation(a).unwrap();
        let two = one.apply_creation(a).unwrap().normalize().unwrap();

        let identity = MirrorSpec::new(a, c(1.0, 0.0)).unwrap();
        let out = apply_mirror(&one, &identity).unwrap();
        assert_eq!(out.amplitude_of(&[(a, 1)]), c(1.0, 0.0));

        let iota = MirrorSpec::new(a, IOTA).unwrap();
        let out = apply_mirror(&one, &iota).unwrap();
        assert!((out.amplitude_of(&[(a, 1)]) - IOTA).norm() < 1e-15);
        let out2 = apply_mirror(&two, &iota).unwrap();
        assert!((out2.amplitude_of(&[(a, 2)]) - c(-1.0, 0.0)).norm() < 1e-15);

        assert!(MirrorSpec::new(a, c(0.5, 0.0)).is_err());
    }
}
