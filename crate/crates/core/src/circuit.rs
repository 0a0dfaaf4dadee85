//! Parameterized circuit IR, feature maps, the hardware-efficient ansatz and
//! the quantum model built from them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{Gate, GateKind, StateVector};
use crate::{Error, Result};

/// Continuous features are clamped to `[−1 + ε, 1 − ε]` wherever `d arccos/dx` is needed.
pub const FEATURE_CLAMP_EPS: f64 = 1e-7;

/// Half-width of the uniform θ initialization interval (radians).
pub const THETA_INIT_HALF_WIDTH: f64 = 0.1;

/// How a feature value becomes a gate angle (or gate presence).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    /// `x ↦ 2j·arccos(x)`.
    ChebyshevAngle(u32),
    /// Gate is present iff bit `shift` of the integer feature is set; the
    /// feature must lie in `0..2^width`.
    DigitalBit { shift: u32, width: u32 },
}

impl Transform {
    /// `dφ/dx` of the angle map at `x` (zero for non-differentiable transforms).
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => 1.0,
            Transform::ChebyshevAngle(j) => {
                let x = clamp_feature(x).0;
                -2.0 * j as f64 / (1.0 - x * x).sqrt()
            }
            Transform::DigitalBit { .. } => 0.0,
        }
    }
}

/// Clamps a continuous feature into the open Chebyshev domain; the flag reports whether it moved.
pub fn clamp_feature(x: f64) -> (f64, bool) {
    let lim = 1.0 - FEATURE_CLAMP_EPS;
    let c = x.clamp(-lim, lim);
    (c, c != x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamBinding {
    Constant(f64),
    Feature { index: usize, transform: Transform },
    Variational(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Op {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub binding: Option<ParamBinding>,
}

impl Op {
    fn gate(&self, angle: f64) -> Gate {
        let q = self.target;
        match (self.kind, self.control) {
            (GateKind::X, _) => Gate::X(q),
            (GateKind::H, _) => Gate::H(q),
            (GateKind::Rx, _) => Gate::Rx(q, angle),
            (GateKind::Ry, _) => Gate::Ry(q, angle),
            (GateKind::Rz, _) => Gate::Rz(q, angle),
            (GateKind::Cnot, Some(c)) => Gate::Cnot { control: c, target: q },
            (GateKind::Cry, Some(c)) => Gate::Cry { control: c, target: q, angle },
            (kind, None) => unreachable!("{kind:?} validated to carry a control"),
        }
    }
}

/// Where a bound gate came from, for differentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Variational { gate: usize, theta: usize },
    Feature { gate: usize, feature: usize, transform: Transform },
}

/// A circuit with every slot resolved to a concrete gate.
#[derive(Debug, Clone)]
pub struct BoundCircuit {
    pub gates: Vec<Gate>,
    pub slots: Vec<Slot>,
    /// True if any continuous feature was clamped.
    pub clamped: bool,
}

impl BoundCircuit {
    pub fn variational_slots(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.slots.iter().filter_map(|s| match *s {
            Slot::Variational { gate, theta } => Some((gate, theta)),
            _ => None,
        })
    }

    /// `(gate index, dφ/dx)` for every gate driven by continuous feature `feature`.
    pub fn feature_slots(&self, feature: usize, value: f64) -> Vec<(usize, f64)> {
        self.slots
            .iter()
            .filter_map(|s| match *s {
                Slot::Feature { gate, feature: f, transform } if f == feature => match transform {
                    Transform::DigitalBit { .. } => None,
                    t => Some((gate, t.derivative(value))),
                },
                _ => None,
            })
            .collect()
    }
}

/// Ordered list of parameterized gates on a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitIr {
    n_qubits: usize,
    ops: Vec<Op>,
    n_variational: usize,
    n_features: usize,
}

impl CircuitIr {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > crate::sim::MAX_QUBITS {
            return Err(Error::Capacity(n_qubits));
        }
        Ok(Self { n_qubits, ops: Vec::new(), n_variational: 0, n_features: 0 })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn n_variational(&self) -> usize {
        self.n_variational
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn check_qubits(&self, target: usize, control: Option<usize>) -> Result<()> {
        let probe = match control {
            Some(c) => Gate::Cnot { control: c, target },
            None => Gate::X(target),
        };
        probe.validate(self.n_qubits)
    }

    /// Appends an op after validating qubits and binding shape.
    pub fn push(&mut self, op: Op) -> Result<()> {
        self.check_qubits(op.target, op.control)?;
        if op.kind.is_controlled() != op.control.is_some() {
            return Err(Error::Binding(format!("{:?} control mismatch", op.kind)));
        }
        match (op.kind.is_rotation(), op.binding) {
            (true, None) => {
                return Err(Error::Binding(format!("{:?} needs an angle binding", op.kind)));
            }
            (false, Some(ParamBinding::Feature { transform: Transform::DigitalBit { .. }, .. }))
                if op.kind == GateKind::X => {}
            (false, Some(_)) => {
                return Err(Error::Binding(format!("{:?} takes no angle", op.kind)));
            }
            (true, Some(ParamBinding::Feature { transform: Transform::DigitalBit { .. }, .. })) => {
                return Err(Error::Binding("digital bits only drive X gates".into()));
            }
            _ => {}
        }
        match op.binding {
            Some(ParamBinding::Variational(k)) => self.n_variational = self.n_variational.max(k + 1),
            Some(ParamBinding::Feature { index, .. }) => self.n_features = self.n_features.max(index + 1),
            _ => {}
        }
        self.ops.push(op);
        Ok(())
    }

    /// Appends a fixed gate.
    pub fn push_gate(&mut self, gate: Gate) -> Result<()> {
        self.push(Op {
            kind: gate.kind(),
            target: gate.target(),
            control: gate.control(),
            binding: gate.angle().map(ParamBinding::Constant),
        })
    }

    /// Appends a rotation with a fresh variational parameter and returns its index.
    pub fn push_variational(&mut self, kind: GateKind, target: usize, control: Option<usize>) -> Result<usize> {
        let index = self.n_variational;
        self.push(Op { kind, target, control, binding: Some(ParamBinding::Variational(index)) })?;
        Ok(index)
    }

    pub fn push_feature(&mut self, kind: GateKind, target: usize, feature: usize, transform: Transform) -> Result<()> {
        self.push(Op {
            kind,
            target,
            control: None,
            binding: Some(ParamBinding::Feature { index: feature, transform }),
        })
    }

    /// Appends `other`, shifting its variational indices past ours.
    pub fn append(&mut self, other: &CircuitIr) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Binding(format!(
                "cannot append {}-qubit circuit to {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        let offset = self.n_variational;
        for op in &other.ops {
            let mut op = *op;
            if let Some(ParamBinding::Variational(k)) = op.binding {
                op.binding = Some(ParamBinding::Variational(k + offset));
            }
            self.push(op)?;
        }
        self.n_variational = self.n_variational.max(offset + other.n_variational);
        Ok(())
    }

    /// Resolves every slot. Fails on wrong feature arity or θ length.
    pub fn bind(&self, features: &[f64], theta: &[f64]) -> Result<BoundCircuit> {
        if features.len() != self.n_features {
            return Err(Error::Binding(format!(
                "expected {} feature value(s), got {}",
                self.n_features,
                features.len()
            )));
        }
        if theta.len() != self.n_variational {
            return Err(Error::Binding(format!(
                "expected {} variational parameter(s), got {}",
                self.n_variational,
                theta.len()
            )));
        }
        let mut gates = Vec::with_capacity(self.ops.len());
        let mut slots = Vec::new();
        let mut clamped = false;
        for op in &self.ops {
            let angle = match op.binding {
                None => 0.0,
                Some(ParamBinding::Constant(a)) => a,
                Some(ParamBinding::Variational(k)) => {
                    slots.push(Slot::Variational { gate: gates.len(), theta: k });
                    theta[k]
                }
                Some(ParamBinding::Feature { index, transform }) => {
                    let value = features[index];
                    if !value.is_finite() {
                        return Err(Error::Binding(format!("feature {index} is not finite")));
                    }
                    match transform {
                        Transform::Identity => {
                            slots.push(Slot::Feature { gate: gates.len(), feature: index, transform });
                            value
                        }
                        Transform::ChebyshevAngle(j) => {
                            clamped |= clamp_feature(value).1;
                            slots.push(Slot::Feature { gate: gates.len(), feature: index, transform });
                            2.0 * j as f64 * value.clamp(-1.0, 1.0).acos()
                        }
                        Transform::DigitalBit { shift, width } => {
                            let v = discrete_value(value, width)?;
                            if (v >> shift) & 1 == 0 {
                                continue;
                            }
                            0.0
                        }
                    }
                }
            };
            gates.push(op.gate(angle));
        }
        Ok(BoundCircuit { gates, slots, clamped })
    }
}

fn discrete_value(value: f64, width: u32) -> Result<u64> {
    let limit = 1u64 << width;
    if value < 0.0 || value.fract() != 0.0 || value >= limit as f64 {
        return Err(Error::Binding(format!(
            "discrete feature {value} is not an integer in 0..{limit}"
        )));
    }
    Ok(value as u64)
}

/// One `RY(2j·arccos x)` per qubit, `j = 1..=n` (qubit index plus one).
pub fn build_chebyshev_tower(n_qubits: usize) -> Result<CircuitIr> {
    let mut c = CircuitIr::new(n_qubits)?;
    push_tower(&mut c, 0..n_qubits, 0)?;
    Ok(c)
}

fn push_tower(c: &mut CircuitIr, qubits: std::ops::Range<usize>, feature: usize) -> Result<()> {
    for (j, q) in qubits.enumerate() {
        c.push_feature(GateKind::Ry, q, feature, Transform::ChebyshevAngle(j as u32 + 1))?;
    }
    Ok(())
}

/// Fixed X gates preparing the basis state spelled by `bits` (qubit 0 first).
pub fn build_digital_encoding(bits: &str) -> Result<CircuitIr> {
    let mut c = CircuitIr::new(bits.len())?;
    for (q, ch) in bits.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => c.push_gate(Gate::X(q))?,
            other => return Err(Error::InvalidArgument(format!("non-binary symbol {other:?}"))),
        }
    }
    Ok(c)
}

/// Digital encoding of one integer feature over `n_qubits`, qubit 0 = most significant bit.
pub fn build_digital_feature_map(n_qubits: usize) -> Result<CircuitIr> {
    let mut c = CircuitIr::new(n_qubits)?;
    push_digital(&mut c, 0..n_qubits, 0)?;
    Ok(c)
}

fn push_digital(c: &mut CircuitIr, qubits: std::ops::Range<usize>, feature: usize) -> Result<()> {
    let width = qubits.len() as u32;
    for (k, q) in qubits.enumerate() {
        c.push(Op {
            kind: GateKind::X,
            target: q,
            control: None,
            binding: Some(ParamBinding::Feature {
                index: feature,
                transform: Transform::DigitalBit { shift: width - 1 - k as u32, width },
            }),
        })?;
    }
    Ok(())
}

/// Chebyshev tower on the first `n_cont` qubits (feature 0 = x) and a digital
/// encoding of the zero-based integer feature 1 on the last `n_disc` qubits.
pub fn build_mixed_feature_map(n_cont: usize, n_disc: usize) -> Result<CircuitIr> {
    if n_cont == 0 || n_disc == 0 {
        return Err(Error::InvalidArgument("mixed feature map needs both blocks".into()));
    }
    let mut c = CircuitIr::new(n_cont + n_disc)?;
    push_tower(&mut c, 0..n_cont, 0)?;
    push_digital(&mut c, n_cont..n_cont + n_disc, 1)?;
    Ok(c)
}

/// Hardware-efficient ansatz: each layer is `RY(θ) RZ(θ)` on every qubit
/// followed by a CNOT chain `q → q+1`. Uses `2·n·depth` parameters.
pub fn build_hea(n_qubits: usize, depth: usize) -> Result<CircuitIr> {
    if depth == 0 {
        return Err(Error::InvalidArgument("ansatz depth must be ≥ 1".into()));
    }
    let mut c = CircuitIr::new(n_qubits)?;
    for _ in 0..depth {
        for q in 0..n_qubits {
            c.push_variational(GateKind::Ry, q, None)?;
            c.push_variational(GateKind::Rz, q, None)?;
        }
        for q in 0..n_qubits.saturating_sub(1) {
            c.push_gate(Gate::Cnot { control: q, target: q + 1 })?;
        }
    }
    Ok(c)
}

/// Uniform θ on `[−0.1, 0.1]`.
pub fn init_theta<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-THETA_INIT_HALF_WIDTH..=THETA_INIT_HALF_WIDTH))
        .collect()
}

/// Total magnetization with affine output scaling `α·⟨M⟩/(2N) + β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub n_qubits: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Observable {
    pub fn new(n_qubits: usize, alpha: f64, beta: f64) -> Self {
        Self { n_qubits, alpha, beta }
    }

    /// `α = 2N, β = 0`: the scaled output equals the raw magnetization.
    pub fn raw(n_qubits: usize) -> Self {
        Self::new(n_qubits, 2.0 * n_qubits as f64, 0.0)
    }

    /// `d(scaled)/d(raw)`.
    pub fn slope(&self) -> f64 {
        self.alpha / (2.0 * self.n_qubits as f64)
    }

    pub fn scale(&self, raw: f64) -> f64 {
        self.slope() * raw + self.beta
    }
}

/// Input layout of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    /// One continuous feature through a Chebyshev tower.
    Chebyshev { n_qubits: usize },
    /// One integer feature through digital encoding.
    Digital { n_qubits: usize },
    /// Features `[x, n]`: Chebyshev block then digital block.
    Mixed { n_cont: usize, n_disc: usize },
}

impl Encoding {
    pub fn n_qubits(&self) -> usize {
        match *self {
            Encoding::Chebyshev { n_qubits } | Encoding::Digital { n_qubits } => n_qubits,
            Encoding::Mixed { n_cont, n_disc } => n_cont + n_disc,
        }
    }

    pub fn feature_map(&self) -> Result<CircuitIr> {
        match *self {
            Encoding::Chebyshev { n_qubits } => build_chebyshev_tower(n_qubits),
            Encoding::Digital { n_qubits } => build_digital_feature_map(n_qubits),
            Encoding::Mixed { n_cont, n_disc } => build_mixed_feature_map(n_cont, n_disc),
        }
    }
}

/// Feature map + variational ansatz + scaled magnetization.
#[derive(Debug, Clone)]
pub struct QuantumModel {
    encoding: Encoding,
    feature_map: CircuitIr,
    ansatz: CircuitIr,
    observable: Observable,
    theta: Vec<f64>,
    frozen: bool,
}

impl QuantumModel {
    pub fn new(encoding: Encoding, ansatz: CircuitIr, observable: Observable, theta: Vec<f64>) -> Result<Self> {
        let feature_map = encoding.feature_map()?;
        if ansatz.n_qubits() != feature_map.n_qubits() || observable.n_qubits != feature_map.n_qubits() {
            return Err(Error::Binding("feature map, ansatz and observable sizes differ".into()));
        }
        if ansatz.n_features() != 0 {
            return Err(Error::Binding("ansatz must not read features".into()));
        }
        if feature_map.n_variational() != 0 {
            return Err(Error::Binding("feature map must not carry variational parameters".into()));
        }
        if theta.len() != ansatz.n_variational() {
            return Err(Error::Binding(format!(
                "expected {} variational parameter(s), got {}",
                ansatz.n_variational(),
                theta.len()
            )));
        }
        Ok(Self { encoding, feature_map, ansatz, observable, theta, frozen: false })
    }

    /// Model with a hardware-efficient ansatz of `depth` layers and seeded θ.
    pub fn with_hea<R: Rng + ?Sized>(
        encoding: Encoding,
        depth: usize,
        observable: Observable,
        rng: &mut R,
    ) -> Result<Self> {
        let ansatz = build_hea(encoding.n_qubits(), depth)?;
        let theta = init_theta(ansatz.n_variational(), rng);
        Self::new(encoding, ansatz, observable, theta)
    }

    /// Model whose ansatz is empty.
    pub fn identity(encoding: Encoding, observable: Observable) -> Result<Self> {
        let ansatz = CircuitIr::new(encoding.n_qubits())?;
        Self::new(encoding, ansatz, observable, Vec::new())
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn n_qubits(&self) -> usize {
        self.feature_map.n_qubits()
    }

    pub fn feature_map(&self) -> &CircuitIr {
        &self.feature_map
    }

    pub fn ansatz(&self) -> &CircuitIr {
        &self.ansatz
    }

    pub fn observable(&self) -> Observable {
        self.observable
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if self.frozen {
            return Err(Error::Frozen);
        }
        if theta.len() != self.theta.len() {
            return Err(Error::Binding(format!(
                "expected {} variational parameter(s), got {}",
                self.theta.len(),
                theta.len()
            )));
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    pub fn bind_features(&self, features: &[f64]) -> Result<BoundCircuit> {
        self.feature_map.bind(features, &[])
    }

    /// Ansatz gates at the current θ.
    pub fn ansatz_gates(&self) -> Vec<Gate> {
        self.ansatz_gates_with(&self.theta).expect("θ length is checked on every update")
    }

    pub fn ansatz_gates_with(&self, theta: &[f64]) -> Result<Vec<Gate>> {
        Ok(self.ansatz.bind(&[], theta)?.gates)
    }

    /// `U_θ U_x |0⟩`.
    pub fn state(&self, features: &[f64]) -> Result<StateVector> {
        let fm = self.bind_features(features)?;
        let mut s = StateVector::zero(self.n_qubits())?;
        for g in fm.gates.iter().chain(self.ansatz_gates().iter()) {
            s.apply_unchecked(g);
        }
        Ok(s)
    }

    /// Unscaled ⟨M⟩.
    pub fn raw_expectation(&self, features: &[f64]) -> Result<f64> {
        Ok(self.state(features)?.expectation_z_sum())
    }

    /// `α·⟨M⟩/(2N) + β`.
    pub fn evaluate(&self, features: &[f64]) -> Result<f64> {
        Ok(self.observable.scale(self.raw_expectation(features)?))
    }
}
