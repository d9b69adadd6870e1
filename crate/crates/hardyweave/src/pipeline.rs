//! The full three-laser Hardy experiment: initial coherent product state,
//! input beam splitters, down-conversion crystal, single-pair
//! post-selection with frustrated-pair interference, and the detection
//! beam splitters.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasisState, ModeId, ModeSet, QuantumState};
use crate::optics::{
    apply_beam_splitter, apply_down_conversion, bs_matrix_final, bs_matrix_input,
    BeamSplitterSpec, DownConversionSpec, ExpansionOrder,
};

/// Relative tolerance for the residual |u_S u_I> amplitude after the
/// frustrated-pair interference.
pub const CANCELLATION_TOL: f64 = 1e-9;

/// Resolved mode handles for the canonical eleven-mode layout.
#[derive(Debug, Clone)]
pub struct HardyModes {
    pub set: Arc<ModeSet>,
    pub s_in: ModeId,
    pub i_in: ModeId,
    pub u_s: ModeId,
    pub v_s: ModeId,
    pub u_i: ModeId,
    pub v_i: ModeId,
    pub c_s: ModeId,
    pub d_s: ModeId,
    pub c_i: ModeId,
    pub d_i: ModeId,
    pub pump: ModeId,
}

impl HardyModes {
    pub fn new() -> Self {
        let set = ModeSet::canonical();
        let id = |n: &str| set.id(n).expect("canonical mode");
        HardyModes {
            s_in: id("S_in"),
            i_in: id("I_in"),
            u_s: id("u_S"),
            v_s: id("v_S"),
            u_i: id("u_I"),
            v_i: id("v_I"),
            c_s: id("c_S"),
            d_s: id("d_S"),
            c_i: id("c_I"),
            d_i: id("d_I"),
            pump: id("F"),
            set,
        }
    }
}

impl Default for HardyModes {
    fn default() -> Self {
        Self::new()
    }
}

/// Source amplitudes of the three lasers plus the pump truncation depth.
#[derive(Debug, Clone, Copy)]
pub struct LaserConfig {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub pump_n_max: u8,
}

impl Default for LaserConfig {
    /// Demo defaults chosen so that alpha*beta = 2 q gamma holds exactly
    /// with q = 1e-3.
    fn default() -> Self {
        LaserConfig {
            alpha: Complex64::new(1e-2, 0.0),
            beta: Complex64::new(1e-2, 0.0),
            gamma: Complex64::new(0.05, 0.0),
            pump_n_max: 3,
        }
    }
}

/// Default down-conversion amplitude for demos. The physical value is of
/// order 1e-6; 1e-3 keeps the O(q^2) terms visible at double precision.
pub fn default_q() -> Complex64 {
    Complex64::new(1e-3, 0.0)
}

impl LaserConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} is not finite")));
            }
        }
        if (self.alpha.norm() - self.beta.norm()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "|alpha| and |beta| must match (got {} vs {})",
                self.alpha.norm(),
                self.beta.norm()
            )));
        }
        if self.alpha.norm() > 0.3 {
            return Err(Error::InvalidConfig(format!(
                "|alpha| = {} is too large for the two-term truncation (max 0.3)",
                self.alpha.norm()
            )));
        }
        Ok(())
    }

    /// Cutoff used by the pipeline: the pump needs one slot above its
    /// truncation for the reverse down-conversion term.
    pub fn cutoff(&self) -> u8 {
        self.pump_n_max + 1
    }
}

/// Eq.-(1)-style initial state: two two-term coherent truncations and the
/// pump expansion, globally normalized once.
pub fn build_initial_state(modes: &HardyModes, cfg: &LaserConfig) -> Result<QuantumState> {
    cfg.validate()?;
    let cutoff = cfg.cutoff();
    let sig_set = ModeSet::register(&["S_in"])?;
    let idl_set = ModeSet::register(&["I_in"])?;
    let pump_set = ModeSet::register(&["F"])?;
    let sig = QuantumState::coherent_expansion(
        sig_set.clone(),
        sig_set.id("S_in")?,
        cfg.alpha,
        1,
        cutoff,
    )?;
    let idl = QuantumState::coherent_expansion(
        idl_set.clone(),
        idl_set.id("I_in")?,
        cfg.beta,
        1,
        cutoff,
    )?;
    let pump = QuantumState::coherent_expansion(
        pump_set.clone(),
        pump_set.id("F")?,
        cfg.gamma,
        cfg.pump_n_max,
        cutoff,
    )?;
    sig.tensor(&idl)?
        .tensor(&pump)?
        .embed(&modes.set)?
        .normalize()
}

/// Splits S_in over (v_S, u_S) and I_in over (v_I, u_I) with the input
/// convention |1> -> (|v> + i|u>)/sqrt(2).
pub fn run_input_splitters(modes: &HardyModes, state: &QuantumState) -> Result<QuantumState> {
    let bs_s = BeamSplitterSpec::new(
        (modes.s_in, modes.u_s),
        (modes.v_s, modes.u_s),
        bs_matrix_input(),
    )?;
    let bs_i = BeamSplitterSpec::new(
        (modes.i_in, modes.u_i),
        (modes.v_i, modes.u_i),
        bs_matrix_input(),
    )?;
    apply_beam_splitter(&apply_beam_splitter(state, &bs_s)?, &bs_i)
}

/// First-order down-conversion with the pair emitted straight into the
/// pinhole-selected modes u_S, u_I.
pub fn run_crystal(modes: &HardyModes, state: &QuantumState, q: Complex64) -> Result<QuantumState> {
    let spec = DownConversionSpec::new(modes.pump, modes.u_s, modes.u_i, q, ExpansionOrder::First)?;
    apply_down_conversion(state, &spec)
}

/// Relative residual of the interference constraint alpha*beta = 2 q gamma.
pub fn check_condition5(cfg: &LaserConfig, q: Complex64) -> f64 {
    let ab = cfg.alpha * cfg.beta;
    let rhs = 2.0 * q * cfg.gamma;
    if ab.norm() == 0.0 {
        if rhs.norm() == 0.0 {
            return 0.0;
        }
        return f64::INFINITY;
    }
    (ab - rhs).norm() / ab.norm()
}

/// Projects onto the single-pair sector: exactly one photon among the
/// signal-band modes and exactly one among the idler-band modes. The
/// occupation-based projector automatically merges the laser pair with the
/// down-converted pair in |u_S u_I>, which is the interference mechanism.
/// The result is left unnormalized.
pub fn post_select_single_pair(
    state: &QuantumState,
    signal_band: (ModeId, ModeId),
    idler_band: (ModeId, ModeId),
) -> Result<QuantumState> {
    let selected = state.filter_terms(|b| {
        let ns = b.occupation(signal_band.0) + b.occupation(signal_band.1);
        let ni = b.occupation(idler_band.0) + b.occupation(idler_band.1);
        ns == 1 && ni == 1
    });
    if selected.is_zero() {
        return Err(Error::EmptySelection);
    }
    Ok(selected)
}

fn canonical_bands(modes: &HardyModes) -> ((ModeId, ModeId), (ModeId, ModeId)) {
    ((modes.u_s, modes.v_s), (modes.u_i, modes.v_i))
}

/// Single-pair post-selection over the canonical bands.
pub fn post_select_single_pair_canonical(
    modes: &HardyModes,
    state: &QuantumState,
) -> Result<QuantumState> {
    let (s, i) = canonical_bands(modes);
    post_select_single_pair(state, s, i)
}

/// Extracts the Hardy state from the post-selected single-pair sector.
///
/// The interfering branches share the pump-vacuum component exactly, so
/// the extraction takes the pump |0_F> slice, measures the leftover
/// |u_S u_I> amplitude against the three legitimate pair terms, and
/// renormalizes. A leftover above [`CANCELLATION_TOL`] of the pair norm
/// signals a violated constraint (or a phase bug) and is reported as
/// `CancellationFailed`, carrying the measured relative residual.
pub fn hardy_state(
    state: &QuantumState,
    pump: ModeId,
    u_s: ModeId,
    u_i: ModeId,
) -> Result<(QuantumState, f64)> {
    let slice = state.filter_terms(|b| b.occupation(pump) == 0);
    if slice.is_zero() {
        return Err(Error::EmptySelection);
    }
    let uu = FockBasisState::from_occupations(slice.modes(), &[(u_s, 1), (u_i, 1)]);
    let uu_amp = slice.amplitude(&uu);
    let rest = slice.filter_terms(|b| *b != uu);
    let rest_norm = rest.norm();
    if rest_norm == 0.0 {
        return Err(Error::CancellationFailed {
            residual: f64::INFINITY,
        });
    }
    let residual = uu_amp.norm() / rest_norm;
    if residual > CANCELLATION_TOL {
        return Err(Error::CancellationFailed { residual });
    }
    Ok((rest.normalize()?, residual))
}

/// Which side(s) the detection beam splitters act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Signal,
    Idler,
    Both,
}

/// Applies the detection-side beam splitters (u, v) -> (c, d) on the
/// requested side(s).
pub fn run_final_bs(modes: &HardyModes, state: &QuantumState, side: Side) -> Result<QuantumState> {
    let bs_s = BeamSplitterSpec::new(
        (modes.u_s, modes.v_s),
        (modes.c_s, modes.d_s),
        bs_matrix_final(),
    )?;
    let bs_i = BeamSplitterSpec::new(
        (modes.u_i, modes.v_i),
        (modes.c_i, modes.d_i),
        bs_matrix_final(),
    )?;
    match side {
        Side::Signal => apply_beam_splitter(state, &bs_s),
        Side::Idler => apply_beam_splitter(state, &bs_i),
        Side::Both => apply_beam_splitter(&apply_beam_splitter(state, &bs_s)?, &bs_i),
    }
}

/// Joint detection probabilities over the four coincidence outcomes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DetectionTable {
    pub cc: f64,
    pub cd: f64,
    pub dc: f64,
    pub dd: f64,
}

impl DetectionTable {
    pub fn sum(&self) -> f64 {
        self.cc + self.cd + self.dc + self.dd
    }

    /// (signal port, idler port, probability) triples in fixed order.
    pub fn entries(&self) -> [(&'static str, &'static str, f64); 4] {
        [
            ("c_S", "c_I", self.cc),
            ("c_S", "d_I", self.cd),
            ("d_S", "c_I", self.dc),
            ("d_S", "d_I", self.dd),
        ]
    }
}

/// Squared-modulus marginals of a coincidence state supported on the c/d
/// detector ports.
pub fn detection_probabilities(modes: &HardyModes, state: &QuantumState) -> Result<DetectionTable> {
    let deviation = (state.norm() - 1.0).abs();
    if deviation > 1e-6 {
        return Err(Error::UnnormalizedInput(deviation));
    }
    let mut table = DetectionTable {
        cc: 0.0,
        cd: 0.0,
        dc: 0.0,
        dd: 0.0,
    };
    for (basis, amp) in state.terms() {
        let s_port = (basis.occupation(modes.c_s), basis.occupation(modes.d_s));
        let i_port = (basis.occupation(modes.c_i), basis.occupation(modes.d_i));
        let p = amp.norm_sqr();
        match (s_port, i_port) {
            ((1, 0), (1, 0)) => table.cc += p,
            ((1, 0), (0, 1)) => table.cd += p,
            ((0, 1), (1, 0)) => table.dc += p,
            ((0, 1), (0, 1)) => table.dd += p,
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "state has support outside the coincidence sector: {}",
                    basis.ket_label(state.modes())
                )))
            }
        }
    }
    Ok(table)
}

/// Everything a full run records.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub stage_states: Vec<(&'static str, QuantumState)>,
    pub condition5_residual: f64,
    pub cancellation_residual: f64,
    pub detection_table: DetectionTable,
}

/// Executes the whole experiment in order, recording every intermediate
/// state. Deterministic given its inputs; the first failing stage's error
/// is annotated with the stage name.
pub fn run_full(cfg: &LaserConfig, q: Complex64) -> Result<PipelineReport> {
    let modes = HardyModes::new();
    let mut stages: Vec<(&'static str, QuantumState)> = Vec::new();

    let initial = build_initial_state(&modes, cfg).map_err(|e| e.at_stage("initial"))?;
    stages.push(("initial", initial.clone()));

    let split = run_input_splitters(&modes, &initial).map_err(|e| e.at_stage("input_splitters"))?;
    stages.push(("input_splitters", split.clone()));

    let crystal = run_crystal(&modes, &split, q).map_err(|e| e.at_stage("crystal"))?;
    stages.push(("crystal", crystal.clone()));

    let condition5_residual = check_condition5(cfg, q);

    let selected = post_select_single_pair_canonical(&modes, &crystal)
        .map_err(|e| e.at_stage("post_selection"))?;
    stages.push(("post_selection", selected.clone()));

    let (hardy, cancellation_residual) = hardy_state(&selected, modes.pump, modes.u_s, modes.u_i)
        .map_err(|e| e.at_stage("hardy_state"))?;
    stages.push(("hardy_state", hardy.clone()));

    let final_signal =
        run_final_bs(&modes, &hardy, Side::Signal).map_err(|e| e.at_stage("final_bs_signal"))?;
    stages.push(("final_bs_signal", final_signal.clone()));

    let final_idler =
        run_final_bs(&modes, &hardy, Side::Idler).map_err(|e| e.at_stage("final_bs_idler"))?;
    stages.push(("final_bs_idler", final_idler.clone()));

    let final_both =
        run_final_bs(&modes, &hardy, Side::Both).map_err(|e| e.at_stage("final_bs_both"))?;
    stages.push(("final_bs_both", final_both.clone()));

    let detection_table = detection_probabilities(&modes, &final_both)
        .map_err(|e| e.at_stage("detection"))?;

    Ok(PipelineReport {
        stage_states: stages,
        condition5_residual,
        cancellation_residual,
        detection_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::IOTA;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn initial_state_all_zero_is_vacuum() {
        let modes = HardyModes::new();
        let cfg = LaserConfig {
            alpha: c(0.0, 0.0),
            beta: c(0.0, 0.0),
            gamma: c(0.0, 0.0),
            pump_n_max: 3,
        };
        let s = build_initial_state(&modes, &cfg).unwrap();
        assert_eq!(s.num_terms(), 1);
        assert!(close(s.amplitude_of(&[]), c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn initial_state_term_count_and_leading_amplitude() {
        let modes = HardyModes::new();
        let cfg = LaserConfig {
            alpha: c(0.1, 0.0),
            beta: c(0.1, 0.0),
            gamma: c(0.1, 0.0),
            pump_n_max: 2,
        };
        let s = build_initial_state(&modes, &cfg).unwrap();
        assert_eq!(s.num_terms(), 12);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        // amplitude(|1_S 1_I 1_F>) proportional to alpha*beta*gamma
        let vac_amp = s.amplitude_of(&[]);
        let triple = s.amplitude_of(&[(modes.s_in, 1), (modes.i_in, 1), (modes.pump, 1)]);
        assert!(close(triple / vac_amp, c(1e-3, 0.0), 1e-15));
    }

    #[test]
    fn input_splitter_on_single_photon() {
        let modes = HardyModes::new();
        let cfg = LaserConfig {
            alpha: c(0.1, 0.0),
            beta: c(0.1, 0.0),
            gamma: c(0.0, 0.0),
            pump_n_max: 3,
        };
        let s = build_initial_state(&modes, &cfg).unwrap();
        let out = run_input_splitters(&modes, &s).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let vac_amp = out.amplitude_of(&[]);
        // |1_S> component -> (|v_S> + i|u_S>)/sqrt(2), relative to vacuum
        let v = out.amplitude_of(&[(modes.v_s, 1)]) / vac_amp;
        let u = out.amplitude_of(&[(modes.u_s, 1)]) / vac_amp;
        assert!(close(v, c(0.1 * h, 0.0), 1e-12));
        assert!(close(u, c(0.0, 0.1 * h), 1e-12));
        // |1_S 1_I> component: four terms of magnitude alpha*beta/2
        for (a, b) in [
            (modes.v_s, modes.v_i),
            (modes.v_s, modes.u_i),
            (modes.u_s, modes.v_i),
            (modes.u_s, modes.u_i),
        ] {
            let amp = out.amplitude_of(&[(a, 1), (b, 1)]) / vac_amp;
            assert!((amp.norm() - 0.005).abs() < 1e-12);
        }
    }

    #[test]
    fn crystal_zero_q_is_identity() {
        let modes = HardyModes::new();
        let cfg = LaserConfig::default();
        let s = run_input_splitters(&modes, &build_initial_state(&modes, &cfg).unwrap()).unwrap();
        let out = run_crystal(&modes, &s, c(0.0, 0.0)).unwrap();
        assert_eq!(out.num_terms(), s.num_terms());
        for (basis, amp) in s.terms() {
            assert!(close(out.amplitude(basis), amp, 1e-15));
        }
    }

    #[test]
    fn crystal_pair_branch_ratio_matches_constraint_form() {
        // coefficient of |0_S 0_I u_S u_I> relative to the laser pair line
        // carries the factor 2 q gamma / (alpha beta).
        let modes = HardyModes::new();
        let cfg = LaserConfig::default();
        let q = default_q();
        let s = run_input_splitters(&modes, &build_initial_state(&modes, &cfg).unwrap()).unwrap();
        let out = run_crystal(&modes, &s, q).unwrap();
        // laser-pair reference: |v_S v_I, 0_F>, coefficient alpha*beta/2
        let vv = out.amplitude_of(&[(modes.v_s, 1), (modes.v_i, 1)]);
        // DC branch at pump vacuum: (laser uu part) + q gamma
        let uu = out.amplitude_of(&[(modes.u_s, 1), (modes.u_i, 1)]);
        let ab = cfg.alpha * cfg.beta;
        let laser_uu = -ab / 2.0;
        let dc = uu - laser_uu * (vv / (ab / 2.0));
        let ratio = dc / vv;
        let expected = (2.0 * q * cfg.gamma) / ab;
        assert!(close(ratio, -expected, 1e-9) || close(ratio, expected, 1e-9));
    }

    #[test]
    fn condition5_residuals() {
        let q = c(1e-3, 0.0);
        let cfg = LaserConfig {
            alpha: c(1e-2, 0.0),
            beta: c(1e-2, 0.0),
            gamma: c(0.05, 0.0),
            pump_n_max: 3,
        };
        assert!(check_condition5(&cfg, q) < 1e-15);

        // alpha*beta = 2 q gamma * e^{i pi} -> residual 2
        let cfg_pi = LaserConfig {
            alpha: c(0.0, 1e-2),
            beta: c(0.0, 1e-2),
            gamma: c(0.05, 0.0),
            ..cfg
        };
        // alpha*beta = -1e-4 = 1e-4 * e^{i pi}
        assert!((check_condition5(&cfg_pi, q) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn post_selection_on_vacuum_is_empty() {
        let modes = HardyModes::new();
        let vac = QuantumState::vacuum(modes.set.clone(), 4);
        assert_eq!(
            post_select_single_pair_canonical(&modes, &vac).unwrap_err(),
            Error::EmptySelection
        );
    }

    #[test]
    fn post_selected_mass_scales_with_pair_amplitude() {
        let modes = HardyModes::new();
        let cfg = LaserConfig::default();
        let q = default_q();
        let s = run_input_splitters(&modes, &build_initial_state(&modes, &cfg).unwrap()).unwrap();
        let out = run_crystal(&modes, &s, q).unwrap();
        let selected = post_select_single_pair_canonical(&modes, &out).unwrap();
        // leading order: three surviving terms of weight |alpha beta / 2|
        let expected = (cfg.alpha * cfg.beta / 2.0).norm_sqr() * 3.0;
        let mass = selected.norm_squared();
        assert!((mass / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn hardy_state_matches_printed_amplitudes() {
        let modes = HardyModes::new();
        let cfg = LaserConfig::default();
        let report = run_full(&cfg, default_q()).unwrap();
        let hardy = &report
            .stage_states
            .iter()
            .find(|(n, _)| *n == "hardy_state")
            .unwrap()
            .1;
        let three = 3f64.sqrt().recip();
        let reference = expected_hardy(&modes);
        let aligned = hardy.align_phase_to(&reference).unwrap();
        assert!(aligned.amplitude_of(&[(modes.u_s, 1), (modes.u_i, 1)]).norm() < 1e-12);
        assert!(close(
            aligned.amplitude_of(&[(modes.v_s, 1), (modes.v_i, 1)]),
            c(three, 0.0),
            1e-9
        ));
        assert!(close(
            aligned.amplitude_of(&[(modes.u_s, 1), (modes.v_i, 1)]),
            IOTA * three,
            1e-9
        ));
        assert!(close(
            aligned.amplitude_of(&[(modes.v_s, 1), (modes.u_i, 1)]),
            IOTA * three,
            1e-9
        ));
        // probabilities 1/3 each
        for (_, amp) in aligned.terms() {
            assert!((amp.norm_sqr() - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    /// The printed Hardy state 3^{-1/2}(i|u_S v_I> + i|v_S u_I> + |v_S v_I>).
    pub(crate) fn expected_hardy(modes: &HardyModes) -> QuantumState {
        let three = 3f64.sqrt().recip();
        QuantumState::from_terms(
            modes.set.clone(),
            4,
            [
                (
                    FockBasisState::from_occupations(&modes.set, &[(modes.u_s, 1), (modes.v_i, 1)]),
                    IOTA * three,
                ),
                (
                    FockBasisState::from_occupations(&modes.set, &[(modes.v_s, 1), (modes.u_i, 1)]),
                    IOTA * three,
                ),
                (
                    FockBasisState::from_occupations(&modes.set, &[(modes.v_s, 1), (modes.v_i, 1)]),
                    c(three, 0.0),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn final_states_match_printed_coefficients() {
        let modes = HardyModes::new();
        let hardy = expected_hardy(&modes);
        let twelve = 12f64.sqrt().recip();
        let six = 6f64.sqrt().recip();

        let both = run_final_bs(&modes, &hardy, Side::Both).unwrap();
        let expect_both = [
            ((modes.c_s, modes.c_i), c(-3.0 * twelve, 0.0)),
            ((modes.c_s, modes.d_i), IOTA * twelve),
            ((modes.d_s, modes.c_i), IOTA * twelve),
            ((modes.d_s, modes.d_i), c(-twelve, 0.0)),
        ];
        for ((a, b), want) in expect_both {
            assert!(close(both.amplitude_of(&[(a, 1), (b, 1)]), want, 1e-12));
        }

        let sig = run_final_bs(&modes, &hardy, Side::Signal).unwrap();
        let expect_sig = [
            ((modes.c_s, modes.v_i), 2.0 * IOTA * six),
            ((modes.c_s, modes.u_i), c(-six, 0.0)),
            ((modes.d_s, modes.u_i), IOTA * six),
        ];
        for ((a, b), want) in expect_sig {
            assert!(close(sig.amplitude_of(&[(a, 1), (b, 1)]), want, 1e-12));
        }
        assert!(sig.amplitude_of(&[(modes.d_s, 1), (modes.v_i, 1)]).norm() < 1e-12);

        let idl = run_final_bs(&modes, &hardy, Side::Idler).unwrap();
        let expect_idl = [
            ((modes.v_s, modes.c_i), 2.0 * IOTA * six),
            ((modes.u_s, modes.c_i), c(-six, 0.0)),
            ((modes.u_s, modes.d_i), IOTA * six),
        ];
        for ((a, b), want) in expect_idl {
            assert!(close(idl.amplitude_of(&[(a, 1), (b, 1)]), want, 1e-12));
        }
        assert!(idl.amplitude_of(&[(modes.v_s, 1), (modes.d_i, 1)]).norm() < 1e-12);
    }

    #[test]
    fn final_bs_order_independence() {
        let modes = HardyModes::new();
        let hardy = expected_hardy(&modes);
        let si = run_final_bs(
            &modes,
            &run_final_bs(&modes, &hardy, Side::Signal).unwrap(),
            Side::Idler,
        )
        .unwrap();
        let is = run_final_bs(
            &modes,
            &run_final_bs(&modes, &hardy, Side::Idler).unwrap(),
            Side::Signal,
        )
        .unwrap();
        let both = run_final_bs(&modes, &hardy, Side::Both).unwrap();
        for (basis, amp) in both.terms() {
            assert!(close(si.amplitude(basis), amp, 1e-12));
            assert!(close(is.amplitude(basis), amp, 1e-12));
        }
    }

    #[test]
    fn detection_table_values() {
        let modes = HardyModes::new();
        let hardy = expected_hardy(&modes);
        let both = run_final_bs(&modes, &hardy, Side::Both).unwrap();
        let table = detection_probabilities(&modes, &both).unwrap();
        assert!((table.cc - 0.75).abs() < 1e-12);
        assert!((table.cd - 1.0 / 12.0).abs() < 1e-12);
        assert!((table.dc - 1.0 / 12.0).abs() < 1e-12);
        assert!((table.dd - 1.0 / 12.0).abs() < 1e-12);
        assert!((table.sum() - 1.0).abs() < 1e-12);

        // pure |c_S c_I> input
        let pure = QuantumState::vacuum(modes.set.clone(), 4)
            .apply_creation(modes.c_s)
            .unwrap()
            .apply_creation(modes.c_i)
            .unwrap();
        let t = detection_probabilities(&modes, &pure).unwrap();
        assert_eq!(t.cc, 1.0);
        assert_eq!(t.cd + t.dc + t.dd, 0.0);
    }

    #[test]
    fn detection_is_global_phase_invariant() {
        let modes = HardyModes::new();
        let hardy = expected_hardy(&modes);
        let both = run_final_bs(&modes, &hardy, Side::Both).unwrap();
        let rotated = both.scaled(Complex64::from_polar(1.0, 1.234));
        let a = detection_probabilities(&modes, &both).unwrap();
        let b = detection_probabilities(&modes, &rotated).unwrap();
        assert!((a.cc - b.cc).abs() < 1e-15);
        assert!((a.dd - b.dd).abs() < 1e-15);
    }

    #[test]
    fn run_full_default_reaches_one_twelfth() {
        let report = run_full(&LaserConfig::default(), default_q()).unwrap();
        assert!(report.condition5_residual < 1e-12);
        assert!(report.cancellation_residual < 1e-9);
        assert!((report.detection_table.dd - 1.0 / 12.0).abs() < 1e-9);
        assert!((report.detection_table.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn run_full_flags_violated_constraint() {
        // 10% intensity mismatch against alpha*beta = 2 q gamma
        let cfg = LaserConfig {
            gamma: c(0.05 * 1.1, 0.0),
            ..LaserConfig::default()
        };
        let err = run_full(&cfg, default_q()).unwrap_err();
        match err.root() {
            Error::CancellationFailed { residual } => {
                let analytic = 0.1 / 3f64.sqrt();
                assert!((residual / analytic - 1.0).abs() < 0.2, "residual {residual}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn run_full_without_pump_fails_cancellation() {
        let cfg = LaserConfig {
            gamma: c(0.0, 0.0),
            ..LaserConfig::default()
        };
        let err = run_full(&cfg, default_q()).unwrap_err();
        assert!(matches!(err.root(), Error::CancellationFailed { .. }));
    }
}
