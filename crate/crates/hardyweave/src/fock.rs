//! Multimode bosonic Fock states as sparse complex-amplitude maps.
//!
//! States are immutable: every operation returns a new [`QuantumState`].
//! Basis states are ordered by the registration order of their mode set,
//! which makes iteration (and therefore every report) deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// The imaginary unit. The source material writes it as iota to keep it
/// apart from the idler subscript, hence the name.
pub const IOTA: Complex64 = Complex64::new(0.0, 1.0);

/// Default threshold below which `prune` drops amplitudes.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-15;

/// Handle to a mode inside a registered [`ModeSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(u16);

impl ModeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An ordered, duplicate-free set of symbolic mode names.
///
/// The order is fixed at registration and defines the basis-state ordering
/// of every state built over the set.
#[derive(Debug, PartialEq, Eq)]
pub struct ModeSet {
    names: Vec<String>,
}

/// Names of the canonical eleven-mode layout: the two low-energy laser
/// inputs, the u/v interferometer arms, the c/d detector ports and the
/// pump F.
pub const CANONICAL_MODES: [&str; 11] = [
    "S_in", "I_in", "u_S", "v_S", "u_I", "v_I", "c_S", "d_S", "c_I", "d_I", "F",
];

impl ModeSet {
    /// Registers a mode set from a list of distinct names.
    pub fn register<S: AsRef<str>>(names: &[S]) -> Result<Arc<ModeSet>> {
        if names.is_empty() {
            return Err(Error::InvalidSpec("mode set must be non-empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut owned = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if !seen.insert(n.to_string()) {
                return Err(Error::DuplicateMode(n.to_string()));
            }
            owned.push(n.to_string());
        }
        if owned.len() > u16::MAX as usize {
            return Err(Error::InvalidSpec("too many modes".into()));
        }
        Ok(Arc::new(ModeSet { names: owned }))
    }

    /// The canonical eleven-mode set of the Hardy setup.
    pub fn canonical() -> Arc<ModeSet> {
        ModeSet::register(&CANONICAL_MODES).expect("canonical mode names are distinct")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Looks a mode up by name.
    pub fn id(&self, name: &str) -> Result<ModeId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| ModeId(i as u16))
            .ok_or_else(|| Error::UnregisteredMode(name.to_string()))
    }

    pub fn name(&self, id: ModeId) -> &str {
        &self.names[id.index()]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }

    pub fn ids(&self) -> impl Iterator<Item = ModeId> {
        (0..self.names.len() as u16).map(ModeId)
    }

    fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// Union of two disjoint mode sets, `a`'s modes first.
    pub fn union(a: &ModeSet, b: &ModeSet) -> Result<Arc<ModeSet>> {
        for n in b.names() {
            if a.contains(n) {
                return Err(Error::ModeCollision(n.to_string()));
            }
        }
        let all: Vec<&str> = a.names().chain(b.names()).collect();
        ModeSet::register(&all)
    }
}

/// One occupation-number assignment over a fixed mode set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasisState {
    occ: Vec<u8>,
}

impl FockBasisState {
    pub fn vacuum(modes: &ModeSet) -> Self {
        FockBasisState {
            occ: vec![0; modes.len()],
        }
    }

    /// Builds a basis state from `(mode, count)` pairs; unlisted modes are 0.
    pub fn from_occupations(modes: &ModeSet, pairs: &[(ModeId, u8)]) -> Self {
        let mut s = Self::vacuum(modes);
        for &(m, n) in pairs {
            s.occ[m.index()] = n;
        }
        s
    }

    pub fn occupation(&self, mode: ModeId) -> u8 {
        self.occ[mode.index()]
    }

    pub fn total(&self) -> u32 {
        self.occ.iter().map(|&n| n as u32).sum()
    }

    fn with_occupation(&self, mode: ModeId, n: u8) -> Self {
        let mut occ = self.occ.clone();
        occ[mode.index()] = n;
        FockBasisState { occ }
    }

    /// Human-readable ket label, e.g. `|u_S 2v_I>`; vacuum prints as `|vac>`.
    pub fn ket_label(&self, modes: &ModeSet) -> String {
        let mut parts = Vec::new();
        for id in modes.ids() {
            match self.occupation(id) {
                0 => {}
                1 => parts.push(modes.name(id).to_string()),
                n => parts.push(format!("{}{}", n, modes.name(id))),
            }
        }
        if parts.is_empty() {
            "|vac>".to_string()
        } else {
            format!("|{}>", parts.join(" "))
        }
    }
}

/// Sparse superposition of Fock basis states over one mode set.
#[derive(Clone)]
pub struct QuantumState {
    modes: Arc<ModeSet>,
    cutoff: u8,
    prune_threshold: f64,
    terms: BTreeMap<FockBasisState, Complex64>,
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

impl QuantumState {
    /// The zero state: no terms at all. Propagates through every linear
    /// operation (annihilating the vacuum must not error).
    pub fn zero(modes: Arc<ModeSet>, cutoff: u8) -> Self {
        QuantumState {
            modes,
            cutoff,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            terms: BTreeMap::new(),
        }
    }

    /// All-modes-vacuum with amplitude 1.
    pub fn vacuum(modes: Arc<ModeSet>, cutoff: u8) -> Self {
        let vac = FockBasisState::vacuum(&modes);
        let mut s = Self::zero(modes, cutoff);
        s.terms.insert(vac, Complex64::new(1.0, 0.0));
        s
    }

    /// Unnormalized truncated coherent expansion
    /// sum_{n=0..n_max} amp^n (n!)^{-1/2} |n> on `mode`, vacuum elsewhere.
    ///
    /// Normalization is deliberately deferred: the pipeline applies one
    /// global factor after taking the three-laser product.
    pub fn coherent_expansion(
        modes: Arc<ModeSet>,
        mode: ModeId,
        amplitude: Complex64,
        n_max: u8,
        cutoff: u8,
    ) -> Result<Self> {
        if mode.index() >= modes.len() {
            return Err(Error::UnregisteredMode(format!("#{}", mode.index())));
        }
        if n_max > cutoff {
            return Err(Error::CutoffExceeded {
                mode: modes.name(mode).to_string(),
                requested: n_max as u32,
                cutoff,
            });
        }
        let mut s = Self::zero(modes.clone(), cutoff);
        let vac = FockBasisState::vacuum(&modes);
        let mut coeff = Complex64::new(1.0, 0.0);
        for n in 0..=n_max {
            if n > 0 {
                coeff *= amplitude;
            }
            let amp = coeff / factorial(n).sqrt();
            if amp != Complex64::new(0.0, 0.0) {
                s.terms.insert(vac.with_occupation(mode, n), amp);
            }
        }
        Ok(s)
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn cutoff(&self) -> u8 {
        self.cutoff
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune_threshold
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockBasisState, Complex64)> {
        self.terms.iter().map(|(b, &a)| (b, a))
    }

    /// Amplitude of one basis state (0 if absent).
    pub fn amplitude(&self, basis: &FockBasisState) -> Complex64 {
        self.terms
            .get(basis)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Amplitude of the basis state with the given occupations, rest vacuum.
    pub fn amplitude_of(&self, pairs: &[(ModeId, u8)]) -> Complex64 {
        self.amplitude(&FockBasisState::from_occupations(&self.modes, pairs))
    }

    pub(crate) fn from_terms<I>(
        modes: Arc<ModeSet>,
        cutoff: u8,
        terms: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (FockBasisState, Complex64)>,
    {
        let mut s = Self::zero(modes, cutoff);
        for (basis, amp) in terms {
            s.accumulate(basis, amp)?;
        }
        s.drop_exact_zeros();
        Ok(s)
    }

    fn accumulate(&mut self, basis: FockBasisState, amp: Complex64) -> Result<()> {
        if !amp.re.is_finite() || !amp.im.is_finite() {
            return Err(Error::NonFiniteAmplitude);
        }
        for id in self.modes.ids() {
            if basis.occupation(id) > self.cutoff {
                return Err(Error::CutoffExceeded {
                    mode: self.modes.name(id).to_string(),
                    requested: basis.occupation(id) as u32,
                    cutoff: self.cutoff,
                });
            }
        }
        *self
            .terms
            .entry(basis)
            .or_insert(Complex64::new(0.0, 0.0)) += amp;
        Ok(())
    }

    fn drop_exact_zeros(&mut self) {
        self.terms
            .retain(|_, a| *a != Complex64::new(0.0, 0.0));
    }

    fn check_same_modes(&self, other: &QuantumState) -> Result<()> {
        if self.modes == other.modes {
            Ok(())
        } else {
            Err(Error::ModeSetMismatch)
        }
    }

    /// Tensor product over the union mode set; mode sets must be disjoint.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let modes = ModeSet::union(&self.modes, &other.modes)?;
        let cutoff = self.cutoff.max(other.cutoff);
        let mut out = Self::zero(modes.clone(), cutoff);
        let left_len = self.modes.len();
        for (ba, aa) in self.terms() {
            for (bb, ab) in other.terms() {
                let mut occ = Vec::with_capacity(modes.len());
                occ.extend((0..left_len).map(|i| ba.occ[i]));
                occ.extend((0..other.modes.len()).map(|i| bb.occ[i]));
                out.accumulate(FockBasisState { occ }, aa * ab)?;
            }
        }
        Ok(out)
    }

    /// Re-expresses the state over a larger mode set (new modes vacuum).
    pub fn embed(&self, target: &Arc<ModeSet>) -> Result<QuantumState> {
        let mapping: Vec<ModeId> = self
            .modes
            .names()
            .map(|n| target.id(n))
            .collect::<Result<_>>()?;
        let mut out = Self::zero(target.clone(), self.cutoff);
        for (basis, amp) in self.terms() {
            let mut occ = vec![0u8; target.len()];
            for (src, &dst) in mapping.iter().enumerate() {
                occ[dst.index()] = basis.occ[src];
            }
            out.accumulate(FockBasisState { occ }, amp)?;
        }
        Ok(out)
    }

    /// Creation operator: |n> -> sqrt(n+1) |n+1> on `mode`.
    pub fn apply_creation(&self, mode: ModeId) -> Result<QuantumState> {
        self.apply_creation_impl(mode, false)
    }

    fn apply_creation_impl(&self, mode: ModeId, project: bool) -> Result<QuantumState> {
        if mode.index() >= self.modes.len() {
            return Err(Error::UnregisteredMode(format!("#{}", mode.index())));
        }
        let mut out = Self::zero(self.modes.clone(), self.cutoff);
        for (basis, amp) in self.terms() {
            let n = basis.occupation(mode);
            if n >= self.cutoff {
                if project {
                    continue;
                }
                return Err(Error::CutoffExceeded {
                    mode: self.modes.name(mode).to_string(),
                    requested: n as u32 + 1,
                    cutoff: self.cutoff,
                });
            }
            let factor = ((n + 1) as f64).sqrt();
            out.accumulate(basis.with_occupation(mode, n + 1), amp * factor)?;
        }
        Ok(out)
    }

    /// Annihilation operator: |n> -> sqrt(n) |n-1>; n = 0 terms vanish.
    pub fn apply_annihilation(&self, mode: ModeId) -> Result<QuantumState> {
        if mode.index() >= self.modes.len() {
            return Err(Error::UnregisteredMode(format!("#{}", mode.index())));
        }
        let mut out = Self::zero(self.modes.clone(), self.cutoff);
        for (basis, amp) in self.terms() {
            let n = basis.occupation(mode);
            if n == 0 {
                continue;
            }
            let factor = (n as f64).sqrt();
            out.accumulate(basis.with_occupation(mode, n - 1), amp * factor)?;
        }
        Ok(out)
    }

    /// <self|other>, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &QuantumState) -> Result<Complex64> {
        self.check_same_modes(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (basis, amp) in self.terms() {
            acc += amp.conj() * other.amplitude(basis);
        }
        Ok(acc)
    }

    pub fn norm_squared(&self) -> f64 {
        self.terms().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Rescales to unit norm.
    pub fn normalize(&self) -> Result<QuantumState> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> QuantumState {
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a *= factor;
        }
        out
    }

    /// Term-wise sum of two states over the same mode set.
    pub fn add(&self, other: &QuantumState) -> Result<QuantumState> {
        self.check_same_modes(other)?;
        let mut out = self.clone();
        for (basis, amp) in other.terms() {
            out.accumulate(basis.clone(), amp)?;
        }
        out.drop_exact_zeros();
        Ok(out)
    }

    /// Drops terms with |amplitude| below `threshold`; returns the new state
    /// and the discarded probability mass. Retained amplitudes are untouched.
    pub fn prune_at(&self, threshold: f64) -> (QuantumState, f64) {
        let mut out = self.clone();
        let mut discarded = 0.0;
        out.terms.retain(|_, a| {
            if a.norm() < threshold {
                discarded += a.norm_sqr();
                false
            } else {
                true
            }
        });
        (out, discarded)
    }

    /// `prune_at` with the state's own threshold.
    pub fn prune(&self) -> (QuantumState, f64) {
        self.prune_at(self.prune_threshold)
    }

    /// Keeps only terms for which `keep` returns true.
    pub fn filter_terms<F>(&self, keep: F) -> QuantumState
    where
        F: Fn(&FockBasisState) -> bool,
    {
        let mut out = self.clone();
        out.terms.retain(|b, _| keep(b));
        out
    }

    /// Rotates the global phase so that this state's pivot amplitude (the
    /// largest-magnitude term, ties broken by basis order) has the same
    /// phase as `reference`'s amplitude on the same basis state.
    ///
    /// Printed equations fix relative phases only, so comparisons against
    /// them go through this alignment.
    pub fn align_phase_to(&self, reference: &QuantumState) -> Result<QuantumState> {
        self.check_same_modes(reference)?;
        let pivot = self
            .terms()
            .max_by(|(ba, aa), (bb, ab)| {
                aa.norm()
                    .partial_cmp(&ab.norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    // on ties prefer the earlier basis state
                    .then_with(|| bb.cmp(ba))
            })
            .map(|(b, a)| (b.clone(), a));
        let (basis, amp) = match pivot {
            Some(p) => p,
            None => return Ok(self.clone()),
        };
        let target = reference.amplitude(&basis);
        if target.norm() == 0.0 || amp.norm() == 0.0 {
            return Ok(self.clone());
        }
        let rotation = (target / amp) / (target / amp).norm();
        Ok(self.scaled(rotation))
    }
}

impl fmt::Debug for QuantumState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QuantumState ({} terms):", self.terms.len())?;
        for (basis, amp) in self.terms() {
            writeln!(
                f,
                "  {:+.6}{:+.6}i {}",
                amp.re,
                amp.im,
                basis.ket_label(&self.modes)
            )?;
        }
        Ok(())
    }
}
