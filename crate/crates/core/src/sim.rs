//! Dense statevector simulation.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index, so
//! the bitstring `"011"` on three qubits is basis index 3 and has qubit 0 in
//! `|0⟩`. Qubit indices are zero-based throughout the crate.
//!
//! Rotation convention: `RY(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`,
//! `RX(θ) = exp(−iθX/2)`, `RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2})`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    H,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cry,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Cry)
    }

    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::Cnot | GateKind::Cry)
    }
}

/// A gate with concrete qubits and (for rotations) a concrete angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    X(usize),
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
    Cry { control: usize, target: usize, angle: f64 },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::X(_) => GateKind::X,
            Gate::H(_) => GateKind::H,
            Gate::Rx(..) => GateKind::Rx,
            Gate::Ry(..) => GateKind::Ry,
            Gate::Rz(..) => GateKind::Rz,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Cry { .. } => GateKind::Cry,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::X(q) | Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => q,
            Gate::Cnot { target, .. } | Gate::Cry { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cnot { control, .. } | Gate::Cry { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => Some(a),
            Gate::Cry { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// Same gate with the rotation angle replaced. Non-rotations are returned unchanged.
    pub fn with_angle(&self, angle: f64) -> Gate {
        match *self {
            Gate::Rx(q, _) => Gate::Rx(q, angle),
            Gate::Ry(q, _) => Gate::Ry(q, angle),
            Gate::Rz(q, _) => Gate::Rz(q, angle),
            Gate::Cry { control, target, .. } => Gate::Cry { control, target, angle },
            g => g,
        }
    }

    /// Rotation angle shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Gate {
        match self.angle() {
            Some(a) => self.with_angle(a + delta),
            None => *self,
        }
    }

    pub fn inverse(&self) -> Gate {
        match self.angle() {
            Some(a) => self.with_angle(-a),
            None => *self,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= n_qubits {
            return Err(Error::QubitOutOfRange { index: target, n_qubits });
        }
        if let Some(control) = self.control() {
            if control >= n_qubits {
                return Err(Error::QubitOutOfRange { index: control, n_qubits });
            }
            if control == target {
                return Err(Error::ControlIsTarget(control));
            }
        }
        Ok(())
    }

    /// The 2×2 block acting on the target qubit (the controlled block for CNOT/CRY).
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        match self.kernel() {
            Kernel::Swap => [[ZERO, ONE], [ONE, ZERO]],
            Kernel::Diag(d0, d1) => [[d0, ZERO], [ZERO, d1]],
            Kernel::Real(m) => [
                [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
                [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
            ],
            Kernel::General(m) => m,
        }
    }

    pub(crate) fn kernel(&self) -> Kernel {
        match *self {
            Gate::X(_) | Gate::Cnot { .. } => Kernel::Swap,
            Gate::H(_) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                Kernel::Real([[h, h], [h, -h]])
            }
            Gate::Ry(_, a) | Gate::Cry { angle: a, .. } => {
                let (s, c) = (a / 2.0).sin_cos();
                Kernel::Real([[c, -s], [s, c]])
            }
            Gate::Rx(_, a) => {
                let (s, c) = (a / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let mis = Complex64::new(0.0, -s);
                Kernel::General([[c, mis], [mis, c]])
            }
            Gate::Rz(_, a) => {
                let (s, c) = (a / 2.0).sin_cos();
                Kernel::Diag(Complex64::new(c, -s), Complex64::new(c, s))
            }
        }
    }

    /// Bit masks `(target, control)` for an `n_qubits` register.
    pub(crate) fn masks(&self, n_qubits: usize) -> (usize, usize) {
        let bit = |q: usize| 1usize << (n_qubits - 1 - q);
        (bit(self.target()), self.control().map_or(0, bit))
    }
}

/// Structured form of a gate's 2×2 block, used by the inner loops.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Kernel {
    Swap,
    Diag(Complex64, Complex64),
    Real([[f64; 2]; 2]),
    General([[Complex64; 2]; 2]),
}

impl Kernel {
    /// Transpose of the block (used for right multiplication).
    pub(crate) fn transpose(self) -> Kernel {
        match self {
            Kernel::Real(m) => Kernel::Real([[m[0][0], m[1][0]], [m[0][1], m[1][1]]]),
            Kernel::General(m) => Kernel::General([[m[0][0], m[1][0]], [m[0][1], m[1][1]]]),
            k => k,
        }
    }

    /// Conjugate transpose of the block.
    pub(crate) fn adjoint(self) -> Kernel {
        match self {
            Kernel::Diag(d0, d1) => Kernel::Diag(d0.conj(), d1.conj()),
            Kernel::General(m) => Kernel::General([
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ]),
            k => k.transpose(),
        }
    }

    #[inline(always)]
    pub(crate) fn apply_pair(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        match self {
            Kernel::Swap => (b, a),
            Kernel::Diag(d0, d1) => (d0 * a, d1 * b),
            Kernel::Real(m) => (a * m[0][0] + b * m[0][1], a * m[1][0] + b * m[1][1]),
            Kernel::General(m) => (m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b),
        }
    }
}

/// Applies a 2×2 kernel to every amplitude pair `(i, i | tmask)` with the control bits set.
#[inline]
pub(crate) fn apply_kernel(amps: &mut [Complex64], kernel: Kernel, tmask: usize, cmask: usize) {
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + tmask {
            if i & cmask != cmask {
                continue;
            }
            let j = i | tmask;
            let (a, b) = kernel.apply_pair(amps[i], amps[j]);
            amps[i] = a;
            amps[j] = b;
        }
        base += 2 * tmask;
    }
}

/// Z-sum magnetization of a basis index: (#zeros − #ones) with σ_Z|0⟩ = +|0⟩.
pub fn magnetization(index: usize, n_qubits: usize) -> f64 {
    n_qubits as f64 - 2.0 * index.count_ones() as f64
}

/// Diagonal of the total-magnetization operator.
pub fn magnetization_diagonal(n_qubits: usize) -> Vec<f64> {
    (0..1usize << n_qubits).map(|i| magnetization(i, n_qubits)).collect()
}

/// Bitstring label of a basis index, qubit 0 first.
pub fn bitstring(index: usize, n_qubits: usize) -> String {
    format!("{index:0n_qubits$b}")
}

/// Dense complex amplitudes over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Wraps explicit amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not a power of two ≥ 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(n_qubits));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        let (tmask, cmask) = gate.masks(self.n_qubits);
        apply_kernel(&mut self.amps, gate.kernel(), tmask, cmask);
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for gate in gates {
            self.apply(gate)?;
        }
        Ok(())
    }

    /// Consuming form of [`StateVector::apply`].
    pub fn applied(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    /// ⟨Σ_j Z_j⟩, in `[−N, N]`.
    pub fn expectation_z_sum(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * magnetization(i, self.n_qubits))
            .sum()
    }

    /// Expectation of a diagonal observable given by its diagonal entries.
    pub fn expectation_diagonal(&self, diagonal: &[f64]) -> f64 {
        self.amps.iter().zip(diagonal).map(|(a, d)| a.norm_sqr() * d).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Draws `shots` Z-basis measurements. Keys are bitstrings with qubit 0 first.
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<BTreeMap<String, usize>> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be ≥ 1".into()));
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| Error::InvalidArgument(format!("cannot sample state: {e}")))?;
        let mut counts = vec![0usize; self.dim()];
        for _ in 0..shots {
            counts[dist.sample(rng)] += 1;
        }
        Ok(counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (bitstring(i, self.n_qubits), c))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn zero_state() {
        let s = StateVector::zero(1).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
        let s = StateVector::zero(3).unwrap();
        assert_eq!(s.dim(), 8);
        assert_eq!(s.amplitudes()[0], ONE);
        assert!(s.amplitudes()[1..].iter().all(|a| *a == ZERO));
        assert!(matches!(StateVector::zero(0), Err(Error::Capacity(0))));
        assert!(matches!(StateVector::zero(25), Err(Error::Capacity(25))));
    }

    #[test]
    fn ry_pi_flips() {
        let s = StateVector::zero(1).unwrap().applied(&Gate::Ry(0, PI)).unwrap();
        assert!(close(s.amplitudes()[0], ZERO));
        assert!(close(s.amplitudes()[1], ONE));
    }

    #[test]
    fn ry_two_pi_is_minus_identity() {
        let s = StateVector::zero(1).unwrap().applied(&Gate::Ry(0, 2.0 * PI)).unwrap();
        assert!(close(s.amplitudes()[0], -ONE));
        assert!(close(s.amplitudes()[1], ZERO));
    }

    #[test]
    fn x_on_middle_qubit() {
        let s = StateVector::zero(3).unwrap().applied(&Gate::X(1)).unwrap();
        assert_eq!(s.probabilities()[0b010], 1.0);
    }

    #[test]
    fn gate_errors() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(
            s.apply(&Gate::X(2)),
            Err(Error::QubitOutOfRange { index: 2, n_qubits: 2 })
        ));
        assert!(matches!(
            s.apply(&Gate::Cnot { control: 1, target: 1 }),
            Err(Error::ControlIsTarget(1))
        ));
        assert!(s.apply(&Gate::Cry { control: 3, target: 0, angle: 0.1 }).is_err());
    }

    #[test]
    fn magnetization_examples() {
        let s = StateVector::zero(3).unwrap();
        assert_eq!(s.expectation_z_sum(), 3.0);
        let s = s.applied(&Gate::Ry(0, FRAC_PI_2)).unwrap();
        assert!((s.expectation_z_sum() - 2.0).abs() < 1e-12);
        let bell = StateVector::zero(2)
            .unwrap()
            .applied(&Gate::H(0))
            .unwrap()
            .applied(&Gate::Cnot { control: 0, target: 1 })
            .unwrap();
        assert!(bell.expectation_z_sum().abs() < 1e-12);
        let p = bell.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn probabilities_examples() {
        let s = StateVector::basis(3, 0b101).unwrap();
        let p = s.probabilities();
        assert_eq!(p[5], 1.0);
        assert_eq!(p.iter().sum::<f64>(), 1.0);
        let h = StateVector::zero(1).unwrap().applied(&Gate::H(0)).unwrap();
        let p = h.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampling() {
        let s = StateVector::basis(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let counts = s.sample(100, &mut rng).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts["11"], 100);
        assert!(s.sample(0, &mut rng).is_err());

        let h = StateVector::zero(1).unwrap().applied(&Gate::H(0)).unwrap();
        let c1 = h.sample(100_000, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let c2 = h.sample(100_000, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(c1, c2);
        let zeros = c1["0"] as f64;
        // binomial σ = √(n p q) ≈ 158
        assert!((zeros - 50_000.0).abs() < 3.0 * 158.2);
        assert_eq!(c1.values().sum::<usize>(), 100_000);
    }

    #[test]
    fn cry_only_acts_on_control_one() {
        let s = StateVector::zero(2).unwrap().applied(&Gate::Cry { control: 0, target: 1, angle: PI }).unwrap();
        assert_eq!(s.probabilities()[0], 1.0);
        let s = StateVector::basis(2, 0b10)
            .unwrap()
            .applied(&Gate::Cry { control: 0, target: 1, angle: PI })
            .unwrap();
        assert!((s.probabilities()[0b11] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gate_matrices_are_unitary() {
        let gates = [
            Gate::X(0),
            Gate::H(0),
            Gate::Rx(0, 0.3),
            Gate::Ry(0, -1.7),
            Gate::Rz(0, 2.9),
            Gate::Cnot { control: 1, target: 0 },
            Gate::Cry { control: 1, target: 0, angle: 0.8 },
        ];
        for g in gates {
            let m = g.matrix();
            for r in 0..2 {
                for c in 0..2 {
                    let dot: Complex64 = (0..2).map(|k| m[k][r].conj() * m[k][c]).sum();
                    let expected = if r == c { ONE } else { ZERO };
                    assert!(close(dot, expected), "{g:?}");
                }
            }
        }
    }

    #[test]
    fn bitstring_labels() {
        assert_eq!(bitstring(5, 3), "101");
        assert_eq!(bitstring(1, 4), "0001");
    }
}
