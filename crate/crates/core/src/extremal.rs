//! Extremization of a frozen model: gradient ascent/descent on a continuous
//! input, a trainable extremizer feature map for discrete inputs, and a joint
//! circuit for one continuous plus one discrete input.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_hea, clamp_feature, init_theta, CircuitIr, Encoding, QuantumModel, Transform};
use crate::diff::{model_observable, shift_sweep, DenseObservable};
pub use crate::problems::Direction;
use crate::problems::Bitstring;
use crate::sim::{Gate, GateKind, StateVector};
use crate::train::Adam;
use crate::{Error, Result};

pub const DEFAULT_DISCRETE_EPOCHS: usize = 150;
pub const DEFAULT_CONTINUOUS_EPOCHS: usize = 100;

/// How the frozen model scores a superposition produced by an extremizer.
///
/// `Measured` reads the discrete register in the Z basis before the model, so
/// the score of `Σ_z c_z |z⟩` is `Σ_z |c_z|² 𝒴(z)`, a weighted average of values
/// the model was trained on. `Coherent` feeds the superposition straight into
/// the model and keeps the cross terms `c_z* c_w ⟨z|U† M U|w⟩`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremizerObjective {
    #[default]
    Measured,
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremizeConfig {
    pub direction: Direction,
    pub lr: f64,
    pub epochs: usize,
    /// Starting input (continuous), starting `[x, a, b, c]` (mixed) or starting
    /// χ (discrete). Empty means the default start of each extremizer.
    #[serde(default)]
    pub x0: Vec<f64>,
    /// Search interval for continuous inputs, intersected with the Chebyshev domain.
    #[serde(default = "default_bounds")]
    pub bounds: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub objective: ExtremizerObjective,
}

fn default_bounds() -> (f64, f64) {
    (-1.0, 1.0)
}

impl ExtremizeConfig {
    pub fn new(direction: Direction, lr: f64, epochs: usize) -> Self {
        Self { direction, lr, epochs, x0: Vec::new(), bounds: default_bounds(), seed: 0, objective: ExtremizerObjective::Measured }
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = (lo, hi);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_objective(mut self, objective: ExtremizerObjective) -> Self {
        self.objective = objective;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("extremizer needs at least one epoch".into()));
        }
        if !(self.bounds.0 < self.bounds.1) {
            return Err(Error::InvalidArgument(format!("empty bounds {:?}", self.bounds)));
        }
        Ok(())
    }

    /// Clamps `x` into the bounds and the open Chebyshev domain.
    fn clamp(&self, x: f64) -> f64 {
        clamp_feature(x.clamp(self.bounds.0, self.bounds.1)).0
    }
}

/// Outcome of one extremization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalResult {
    /// Objective (scaled model output) at the start of each epoch.
    pub trajectory: Vec<f64>,
    /// Objective at the returned point or state.
    pub value: f64,
    /// Final continuous input; `[x, n]` for mixed extremization; empty for discrete.
    pub best_input: Vec<f64>,
    /// Exact measurement distribution (discrete and mixed).
    pub distribution: BTreeMap<Bitstring, f64>,
    /// Highest-probability bitstrings, ties broken lexicographically.
    pub top_candidates: Vec<(Bitstring, f64)>,
}

fn ensure_frozen(model: &QuantumModel) -> Result<()> {
    if model.is_frozen() {
        Ok(())
    } else {
        Err(Error::Contract("extremization needs a frozen model".into()))
    }
}

/// ADAM on the single input of a Chebyshev model, clamped after every step.
pub fn extremize_continuous(model: &QuantumModel, config: &ExtremizeConfig) -> Result<ExtremalResult> {
    ensure_frozen(model)?;
    config.validate()?;
    if !matches!(model.encoding(), Encoding::Chebyshev { .. }) {
        return Err(Error::Contract("continuous extremization needs a Chebyshev model".into()));
    }
    let start = match config.x0.as_slice() {
        [] => 0.0,
        [x] if x.is_finite() => *x,
        other => return Err(Error::InvalidArgument(format!("continuous start must be one finite value, got {other:?}"))),
    };
    let heisenberg = model_observable(model)?;
    let sign = config.direction.sign();
    let mut x = [config.clamp(start)];
    let mut adam = Adam::new(config.lr, 1);
    let mut trajectory = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let g = crate::diff::grad_feature_with(model, &heisenberg, &x, 0)?;
        if !g.values[0].is_finite() {
            return Err(Error::NonFinite { epoch, what: "input gradient".into() });
        }
        trajectory.push(g.output);
        adam.step(&mut x, &[-sign * g.values[0]])?;
        x[0] = config.clamp(x[0]);
    }
    Ok(ExtremalResult {
        trajectory,
        value: model.evaluate(&x)?,
        best_input: x.to_vec(),
        distribution: BTreeMap::new(),
        top_candidates: Vec::new(),
    })
}

/// Fresh HEA of depth `N²` applied to `|0…0⟩`, replacing the feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremizerFeatureMap {
    pub circuit: CircuitIr,
    pub chi: Vec<f64>,
}

impl ExtremizerFeatureMap {
    pub fn new<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        let circuit = build_hea(n_qubits, n_qubits * n_qubits)?;
        let chi = init_theta(circuit.n_variational(), rng);
        Ok(Self { circuit, chi })
    }

    pub fn with_chi(n_qubits: usize, chi: Vec<f64>) -> Result<Self> {
        let circuit = build_hea(n_qubits, n_qubits * n_qubits)?;
        if chi.len() != circuit.n_variational() {
            return Err(Error::Binding(format!(
                "extremizer map takes {} parameters, got {}",
                circuit.n_variational(),
                chi.len()
            )));
        }
        Ok(Self { circuit, chi })
    }

    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits()
    }

    pub fn gates(&self) -> Result<Vec<Gate>> {
        Ok(self.circuit.bind(&[], &self.chi)?.gates)
    }

    /// `|𝒳⟩ = U_𝒳 |0…0⟩`.
    pub fn state(&self) -> Result<StateVector> {
        let mut s = StateVector::zero(self.n_qubits())?;
        s.apply_all(&self.gates()?)?;
        Ok(s)
    }
}

/// Heisenberg model observable as seen through `objective`, with `register`
/// the index mask of the extremizer's discrete qubits.
fn scoring_observable(model: &QuantumModel, objective: ExtremizerObjective, register: usize) -> Result<DenseObservable> {
    let h = model_observable(model)?;
    Ok(match objective {
        ExtremizerObjective::Measured => h.dephased(register),
        ExtremizerObjective::Coherent => h,
    })
}

/// `𝒴(𝒳)`: the scaled model output on `|𝒳⟩` in place of a feature-mapped input.
pub fn discrete_objective(model: &QuantumModel, efm: &ExtremizerFeatureMap, objective: ExtremizerObjective) -> Result<f64> {
    if efm.n_qubits() != model.n_qubits() {
        return Err(Error::Contract("extremizer map and model differ in size".into()));
    }
    let s = efm.state()?;
    let raw = match objective {
        ExtremizerObjective::Coherent => {
            let mut s = s;
            s.apply_all(&model.ansatz_gates())?;
            s.expectation_z_sum()
        }
        ExtremizerObjective::Measured => {
            scoring_observable(model, objective, (1 << model.n_qubits()) - 1)?.expectation(s.amplitudes())
        }
    };
    Ok(model.observable().scale(raw))
}

/// A trained extremizer map and its objective history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteExtremization {
    pub efm: ExtremizerFeatureMap,
    pub trajectory: Vec<f64>,
    pub value: f64,
}

/// Trains χ by ADAM on `𝒴(𝒳)`. `config.x0` may supply the starting χ; otherwise χ is drawn from `config.seed`.
pub fn train_extremizer_discrete(model: &QuantumModel, config: &ExtremizeConfig) -> Result<DiscreteExtremization> {
    use rand::SeedableRng;
    ensure_frozen(model)?;
    config.validate()?;
    if !matches!(model.encoding(), Encoding::Digital { .. }) {
        return Err(Error::Contract("discrete extremization needs a digitally encoded model".into()));
    }
    let n = model.n_qubits();
    let mut efm = if config.x0.is_empty() {
        ExtremizerFeatureMap::new(n, &mut rand_chacha::ChaCha8Rng::seed_from_u64(config.seed))?
    } else {
        ExtremizerFeatureMap::with_chi(n, config.x0.clone())?
    };
    let heisenberg = scoring_observable(model, config.objective, (1 << n) - 1)?;
    let obs = model.observable();
    let sign = config.direction.sign();
    let zero = [StateVector::zero(n)?];
    let mut adam = Adam::new(config.lr, efm.chi.len());
    let mut trajectory = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let bound = efm.circuit.bind(&[], &efm.chi)?;
        let slots: Vec<(usize, usize)> = bound.variational_slots().collect();
        let gate_slots: Vec<usize> = slots.iter().map(|&(g, _)| g).collect();
        let sweep = shift_sweep(&bound.gates, &gate_slots, &zero, &heisenberg)?;
        trajectory.push(obs.scale(sweep.values[0]));
        let mut grad = vec![0.0; efm.chi.len()];
        for (d, &(_, k)) in sweep.gradients[0].iter().zip(&slots) {
            grad[k] -= sign * obs.slope() * d;
        }
        adam.step(&mut efm.chi, &grad).map_err(|e| match e {
            Error::NonFinite { what, .. } => Error::NonFinite { epoch, what },
            e => e,
        })?;
    }
    let value = discrete_objective(model, &efm, config.objective)?;
    Ok(DiscreteExtremization { efm, trajectory, value })
}

/// Ranks by probability, breaking ties by ascending bitstring.
fn top_k(distribution: &BTreeMap<Bitstring, f64>, k: usize) -> Vec<(Bitstring, f64)> {
    let mut ranked: Vec<(Bitstring, f64)> = distribution.iter().map(|(b, p)| (b.clone(), *p)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

fn distribution_of(probabilities: &[f64], n_bits: usize) -> BTreeMap<Bitstring, f64> {
    probabilities
        .iter()
        .enumerate()
        .map(|(i, p)| (Bitstring::from_index(i, n_bits), *p))
        .collect()
}

/// Exact Z-basis distribution of `|𝒳⟩` decoded back to bitstrings.
pub fn sample_extremizer(efm: &ExtremizerFeatureMap, top_k_count: usize) -> Result<ExtremalResult> {
    let distribution = distribution_of(&efm.state()?.probabilities(), efm.n_qubits());
    let top_candidates = top_k(&distribution, top_k_count);
    Ok(ExtremalResult { trajectory: Vec::new(), value: f64::NAN, best_input: Vec::new(), distribution, top_candidates })
}

/// Probability mass on `optimal_set`.
pub fn total_optimal_probability(result: &ExtremalResult, optimal_set: &[Bitstring]) -> f64 {
    optimal_set.iter().filter_map(|b| result.distribution.get(b)).sum()
}

/// Joint extremizer for a model on the mixed feature map with a 2-qubit discrete block.
///
/// Circuit: Chebyshev tower of `x` on the continuous block, then `RY(a)` on the
/// first discrete qubit, `CRY(b)` onto the second when it is `1` and `CRY(c)`
/// when it is `0`. Parameters are `[x, a, b, c]`; the default start is
/// `x = 0` with `a = b = c = π/2` (uniform over the four discrete values).
pub struct MixedExtremizer {
    circuit: CircuitIr,
}

impl MixedExtremizer {
    pub fn new(n_cont: usize) -> Result<Self> {
        let mut c = CircuitIr::new(n_cont + 2)?;
        for q in 0..n_cont {
            c.push_feature(GateKind::Ry, q, 0, Transform::ChebyshevAngle(q as u32 + 1))?;
        }
        let (d0, d1) = (n_cont, n_cont + 1);
        c.push_variational(GateKind::Ry, d0, None)?;
        c.push_variational(GateKind::Cry, d1, Some(d0))?;
        c.push_gate(Gate::X(d0))?;
        c.push_variational(GateKind::Cry, d1, Some(d0))?;
        c.push_gate(Gate::X(d0))?;
        Ok(Self { circuit: c })
    }

    pub fn default_start() -> Vec<f64> {
        vec![0.0, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2]
    }

    pub fn state(&self, params: &[f64]) -> Result<StateVector> {
        let bound = self.circuit.bind(&params[..1], &params[1..])?;
        let mut s = StateVector::zero(self.circuit.n_qubits())?;
        s.apply_all(&bound.gates)?;
        Ok(s)
    }

    /// Marginal distribution of the discrete block, keyed by its 2-bit string.
    pub fn discrete_marginal(&self, params: &[f64]) -> Result<BTreeMap<Bitstring, f64>> {
        let p = self.state(params)?.probabilities();
        let mut marginal = vec![0.0; 4];
        for (i, pi) in p.iter().enumerate() {
            marginal[i & 3] += pi;
        }
        Ok(distribution_of(&marginal, 2))
    }

    /// Objective and its gradient with respect to `[x, a, b, c]`.
    fn objective_and_grad(&self, heisenberg: &DenseObservable, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let bound = self.circuit.bind(&params[..1], &params[1..])?;
        let feature_slots = bound.feature_slots(0, params[0]);
        let var_slots: Vec<(usize, usize)> = bound.variational_slots().collect();
        let gate_slots: Vec<usize> =
            feature_slots.iter().map(|&(g, _)| g).chain(var_slots.iter().map(|&(g, _)| g)).collect();
        let zero = [StateVector::zero(self.circuit.n_qubits())?];
        let sweep = shift_sweep(&bound.gates, &gate_slots, &zero, heisenberg)?;
        let d = &sweep.gradients[0];
        let mut grad = vec![0.0; 4];
        for (k, &(_, dphi)) in feature_slots.iter().enumerate() {
            grad[0] += d[k] * dphi;
        }
        for (k, &(_, idx)) in var_slots.iter().enumerate() {
            grad[1 + idx] += d[feature_slots.len() + k];
        }
        Ok((sweep.values[0], grad))
    }
}

/// ADAM on the four joint-extremizer parameters.
pub fn extremize_mixed(model: &QuantumModel, config: &ExtremizeConfig) -> Result<ExtremalResult> {
    ensure_frozen(model)?;
    config.validate()?;
    let n_cont = match model.encoding() {
        Encoding::Mixed { n_cont, n_disc: 2 } => n_cont,
        other => return Err(Error::Contract(format!("mixed extremization needs a 2-qubit discrete block, got {other:?}"))),
    };
    let ext = MixedExtremizer::new(n_cont)?;
    let mut params = if config.x0.is_empty() { MixedExtremizer::default_start() } else { config.x0.clone() };
    if params.len() != 4 || params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("mixed start needs 4 finite values, got {params:?}")));
    }
    params[0] = config.clamp(params[0]);
    // the discrete block holds the two least significant index bits
    let heisenberg = scoring_observable(model, config.objective, 0b11)?;
    let obs = model.observable();
    let sign = config.direction.sign();
    let mut adam = Adam::new(config.lr, 4);
    let mut trajectory = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let (raw, grad) = ext.objective_and_grad(&heisenberg, &params)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { epoch, what: "extremizer gradient".into() });
        }
        trajectory.push(obs.scale(raw));
        let step: Vec<f64> = grad.iter().map(|g| -sign * obs.slope() * g).collect();
        adam.step(&mut params, &step)?;
        params[0] = config.clamp(params[0]);
    }
    let value = obs.scale(heisenberg.expectation(ext.state(&params)?.amplitudes()));
    let distribution = ext.discrete_marginal(&params)?;
    let top_candidates = top_k(&distribution, 4);
    let modal = top_candidates[0].0.index() as f64 + 1.0;
    Ok(ExtremalResult { trajectory, value, best_input: vec![params[0], modal], distribution, top_candidates })
}
