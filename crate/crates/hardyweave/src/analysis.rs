//! Noise-ordering checks, conditional (partner-photon) states, the paradox
//! verdict, and the brute-force oracles backing the operator simulator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasisState, ModeId, QuantumState};
use crate::pipeline::{
    build_initial_state, run_crystal, run_full, HardyModes, LaserConfig,
};

/// Largest amplitude magnitudes of the three photon-number sectors behind
/// the crystal, and their ratios to the single-pair sector.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct NoiseReport {
    pub pair_amp: f64,
    pub triple_amp: f64,
    pub two_pair_amp: f64,
    pub ratio_triple: f64,
    pub ratio_two_pair: f64,
}

/// Classifies the post-crystal state by the total photon count over the
/// four low-energy modes (u_S, v_S, u_I, v_I): 2 photons is the pair
/// sector, 3 the triple sector, 4 the two-pair sector.
pub fn noise_ratios(cfg: &LaserConfig, q: Complex64) -> Result<NoiseReport> {
    let modes = HardyModes::new();
    let initial = build_initial_state(&modes, cfg)?;
    let split = crate::pipeline::run_input_splitters(&modes, &initial)?;
    let state = run_crystal(&modes, &split, q)?;

    let low = [modes.u_s, modes.v_s, modes.u_i, modes.v_i];
    let mut max_by_count = [0.0f64; 5];
    for (basis, amp) in state.terms() {
        let n: u32 = low.iter().map(|&m| basis.occupation(m) as u32).sum();
        if n <= 4 {
            let mag = amp.norm();
            if mag > max_by_count[n as usize] {
                max_by_count[n as usize] = mag;
            }
        }
    }
    let pair_amp = max_by_count[2];
    let triple_amp = max_by_count[3];
    let two_pair_amp = max_by_count[4];
    let ratio = |x: f64| if pair_amp > 0.0 { x / pair_amp } else { 0.0 };
    Ok(NoiseReport {
        pair_amp,
        triple_amp,
        two_pair_amp,
        ratio_triple: ratio(triple_amp),
        ratio_two_pair: ratio(two_pair_amp),
    })
}

/// Projects onto a single photon in `detected_mode`, removes that photon
/// and renormalizes: the state of the partner photon once the detector
/// clicked.
pub fn conditional_state(state: &QuantumState, detected_mode: ModeId) -> Result<QuantumState> {
    let projected = state.filter_terms(|b| b.occupation(detected_mode) == 1);
    let removed = projected.apply_annihilation(detected_mode)?;
    if removed.is_zero() {
        return Err(Error::ZeroNorm);
    }
    removed.normalize()
}

/// The four quantities of the trajectory argument plus the verdict.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ParadoxReport {
    /// |<u_S u_I | Hardy state>|
    pub amp_uu: f64,
    /// conditional amplitude of v_I after detecting the signal photon in d_S
    pub amp_ds_vi: f64,
    /// conditional amplitude of v_S after detecting the idler photon in d_I
    pub amp_vs_di: f64,
    /// joint probability of the d_S d_I coincidence
    pub p_dd: f64,
    pub verdict: bool,
}

/// Runs the pipeline and checks the four paradox quantities at once:
/// no |u_S u_I> coupling, a d_S click pins the idler to u_I, a d_I click
/// pins the signal to u_S, and yet d_S d_I coincidences occur.
pub fn verify_hardy_paradox(cfg: &LaserConfig, q: Complex64) -> Result<ParadoxReport> {
    let modes = HardyModes::new();
    let report = run_full(cfg, q)?;
    let stage = |name: &str| -> &QuantumState {
        &report
            .stage_states
            .iter()
            .find(|(n, _)| *n == name)
            .expect("stage recorded")
            .1
    };
    let hardy = stage("hardy_state");
    let amp_uu = hardy
        .amplitude_of(&[(modes.u_s, 1), (modes.u_i, 1)])
        .norm();

    let after_ds = conditional_state(stage("final_bs_signal"), modes.d_s)?;
    let amp_ds_vi = after_ds.amplitude_of(&[(modes.v_i, 1)]).norm();

    let after_di = conditional_state(stage("final_bs_idler"), modes.d_i)?;
    let amp_vs_di = after_di.amplitude_of(&[(modes.v_s, 1)]).norm();

    let p_dd = report.detection_table.dd;
    let verdict = amp_uu < 1e-9 && amp_ds_vi < 1e-9 && amp_vs_di < 1e-9 && p_dd > 0.0;
    Ok(ParadoxReport {
        amp_uu,
        amp_ds_vi,
        amp_vs_di,
        p_dd,
        verdict,
    })
}

/// Independent oracle for the post-crystal state: direct enumeration of the
/// product terms of the initial state (after the input splitters) and the
/// three branches of the first-order down-conversion, with all ladder
/// factors written out explicitly. No shared machinery with the sparse
/// operator simulator beyond the state container.
pub fn oracle_expand_symbolic(cfg: &LaserConfig, q: Complex64) -> Result<QuantumState> {
    cfg.validate()?;
    let modes = HardyModes::new();
    let cutoff = cfg.cutoff();
    let sqrt2 = std::f64::consts::SQRT_2;
    let iota = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);

    // The signal/idler factors after the input splitters, as
    // (occupied mode or None, coefficient) options.
    let signal_options: [(Option<ModeId>, Complex64); 3] = [
        (None, one),
        (Some(modes.v_s), cfg.alpha / sqrt2),
        (Some(modes.u_s), iota * cfg.alpha / sqrt2),
    ];
    let idler_options: [(Option<ModeId>, Complex64); 3] = [
        (None, one),
        (Some(modes.v_i), cfg.beta / sqrt2),
        (Some(modes.u_i), iota * cfg.beta / sqrt2),
    ];

    let mut factorial = vec![1.0f64];
    for n in 1..=(cfg.pump_n_max as usize + 1) {
        factorial.push(factorial[n - 1] * n as f64);
    }

    let mut terms: Vec<(FockBasisState, Complex64)> = Vec::new();
    let mut push = |occ: &[(ModeId, u8)], coeff: Complex64| {
        if coeff != Complex64::new(0.0, 0.0) {
            terms.push((FockBasisState::from_occupations(&modes.set, occ), coeff));
        }
    };

    for (s_mode, s_coeff) in signal_options {
        for (i_mode, i_coeff) in idler_options {
            for n in 0..=cfg.pump_n_max {
                let tail = cfg.gamma.powu(n as u32) / factorial[n as usize].sqrt();
                let base = s_coeff * i_coeff * tail;
                // occupations held by the laser branches
                let n_us = u8::from(s_mode == Some(modes.u_s));
                let n_vs = u8::from(s_mode == Some(modes.v_s));
                let n_ui = u8::from(i_mode == Some(modes.u_i));
                let n_vi = u8::from(i_mode == Some(modes.v_i));

                // identity branch
                push(
                    &[
                        (modes.u_s, n_us),
                        (modes.v_s, n_vs),
                        (modes.u_i, n_ui),
                        (modes.v_i, n_vi),
                        (modes.pump, n),
                    ],
                    base,
                );

                // +q a_F a†_uS a†_uI
                if n >= 1 {
                    let ladder = (n as f64).sqrt()
                        * ((n_us + 1) as f64).sqrt()
                        * ((n_ui + 1) as f64).sqrt();
                    push(
                        &[
                            (modes.u_s, n_us + 1),
                            (modes.v_s, n_vs),
                            (modes.u_i, n_ui + 1),
                            (modes.v_i, n_vi),
                            (modes.pump, n - 1),
                        ],
                        base * q * ladder,
                    );
                }

                // -q* a†_F a_uS a_uI
                if n_us >= 1 && n_ui >= 1 && n < cutoff {
                    let ladder = ((n + 1) as f64).sqrt()
                        * (n_us as f64).sqrt()
                        * (n_ui as f64).sqrt();
                    push(
                        &[
                            (modes.u_s, n_us - 1),
                            (modes.v_s, n_vs),
                            (modes.u_i, n_ui - 1),
                            (modes.v_i, n_vi),
                            (modes.pump, n + 1),
                        ],
                        base * (-q.conj()) * ladder,
                    );
                }
            }
        }
    }

    // The one global normalization factor of the initial product state,
    // computed in closed form rather than from the accumulated terms.
    let mut tail_sq = 0.0;
    for n in 0..=cfg.pump_n_max {
        tail_sq += cfg.gamma.norm_sqr().powi(n as i32) / factorial[n as usize];
    }
    let norm =
        ((1.0 + cfg.alpha.norm_sqr()) * (1.0 + cfg.beta.norm_sqr()) * tail_sq).sqrt();

    Ok(QuantumState::from_terms(modes.set.clone(), cutoff, terms)?
        .scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// Least-squares slope of log(y) against log(x).
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
