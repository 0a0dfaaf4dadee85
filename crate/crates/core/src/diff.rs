//! Parameter-shift differentiation of model outputs.
//!
//! Every derivative here is assembled from exact expectation values at shifted
//! gate angles: `±π/2` for single-qubit rotations and the four-term rule
//! (`±π/2`, `±3π/2`) for CRY. Shifted expectations are evaluated with a single
//! backward sweep: the observable is conjugated gate by gate into the
//! Heisenberg picture, so the value at a shifted gate `k` is
//! `⟨ψ_k| G_k(θ+s)† Q_k G_k(θ+s) |ψ_k⟩` with `ψ_k` the state entering gate `k`
//! and `Q_k` the observable propagated back through the gates after it.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use num_complex::Complex64;

use crate::circuit::QuantumModel;
use crate::sim::{apply_kernel, magnetization_diagonal, Gate, GateKind, Kernel, StateVector};
use crate::{Error, Result};

/// Largest register for which a dense Heisenberg observable is built.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Finite-difference step used by the test oracles.
pub const FD_STEP: f64 = 1e-5;

/// Gradient values plus the number of shifted circuit evaluations spent.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub values: Vec<f64>,
    pub evaluations: usize,
    /// Scaled model output at the unshifted point.
    pub output: f64,
    /// True if a continuous input had to be clamped into the Chebyshev domain.
    pub clamped: bool,
}

/// Shift rule of a gate: `∂E/∂θ = Σ coeff · E(θ + shift)`.
pub fn shift_rule(kind: GateKind) -> Result<&'static [(f64, f64)]> {
    const TWO_TERM: [(f64, f64); 2] = [(FRAC_PI_2, 0.5), (-FRAC_PI_2, -0.5)];
    // generator spectrum {0, ±1/2}
    const C_PLUS: f64 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
    const C_MINUS: f64 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
    const FOUR_TERM: [(f64, f64); 4] = [
        (FRAC_PI_2, C_PLUS),
        (-FRAC_PI_2, -C_PLUS),
        (3.0 * FRAC_PI_2, -C_MINUS),
        (-3.0 * FRAC_PI_2, C_MINUS),
    ];
    match kind {
        GateKind::Rx | GateKind::Ry | GateKind::Rz => Ok(&TWO_TERM),
        GateKind::Cry => Ok(&FOUR_TERM),
        other => Err(Error::UnsupportedGradient(other)),
    }
}

/// Dense Hermitian operator, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseObservable {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DenseObservable {
    pub fn from_diagonal(n_qubits: usize, diagonal: &[f64]) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::Capacity(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if diagonal.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "diagonal has {} entries, expected {dim}",
                diagonal.len()
            )));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (i, d) in diagonal.iter().enumerate() {
            data[i * dim + i] = Complex64::new(*d, 0.0);
        }
        Ok(Self { n_qubits, data })
    }

    /// Total magnetization `Σ_j Z_j`.
    pub fn magnetization(n_qubits: usize) -> Result<Self> {
        Self::from_diagonal(n_qubits, &magnetization_diagonal(n_qubits))
    }

    /// `U† O U` for the circuit `gates` (applied first to last).
    pub fn heisenberg(mut self, gates: &[Gate]) -> Result<Self> {
        for g in gates {
            g.validate(self.n_qubits)?;
        }
        for g in gates.iter().rev() {
            self.conjugate(g);
        }
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    /// `Q ← G† Q G`.
    fn conjugate(&mut self, gate: &Gate) {
        let dim = self.dim();
        let (tmask, cmask) = gate.masks(self.n_qubits);
        let kernel = gate.kernel();
        // right multiplication acts on the columns of every row
        let right = kernel.transpose();
        for row in self.data.chunks_exact_mut(dim) {
            apply_kernel(row, right, tmask, cmask);
        }
        // left multiplication by G† mixes row pairs
        let left = kernel.adjoint();
        let mut base = 0;
        while base < dim {
            for r0 in base..base + tmask {
                if r0 & cmask != cmask {
                    continue;
                }
                let r1 = r0 | tmask;
                let (head, tail) = self.data.split_at_mut(r1 * dim);
                let row0 = &mut head[r0 * dim..(r0 + 1) * dim];
                let row1 = &mut tail[..dim];
                match left {
                    Kernel::Swap => row0.swap_with_slice(row1),
                    Kernel::Diag(d0, d1) => {
                        row0.iter_mut().for_each(|a| *a *= d0);
                        row1.iter_mut().for_each(|b| *b *= d1);
                    }
                    k => {
                        for (a, b) in row0.iter_mut().zip(row1.iter_mut()) {
                            let (x, y) = k.apply_pair(*a, *b);
                            *a = x;
                            *b = y;
                        }
                    }
                }
            }
            base += 2 * tmask;
        }
    }

    /// Weighted mixture `Σ w_k |ψ_k⟩⟨ψ_k|` (weights may be negative).
    pub fn mixture<'a>(n_qubits: usize, terms: impl IntoIterator<Item = (f64, &'a StateVector)>) -> Result<Self> {
        let mut rho = Self::from_diagonal(n_qubits, &vec![0.0; 1 << n_qubits])?;
        let dim = rho.dim();
        for (w, psi) in terms {
            if psi.n_qubits() != n_qubits {
                return Err(Error::InvalidArgument("mixture state size differs".into()));
            }
            let v = psi.amplitudes();
            for (a, row) in rho.data.chunks_exact_mut(dim).enumerate() {
                let va = v[a] * w;
                for (r, vb) in row.iter_mut().zip(v) {
                    *r += va * vb.conj();
                }
            }
        }
        Ok(rho)
    }

    /// Drops the coherences between basis states that differ on the index bits
    /// in `mask`. The result is the observable seen by a state whose `mask`
    /// qubits were measured in the Z basis first.
    pub fn dephased(mut self, mask: usize) -> Self {
        let dim = self.dim();
        for (r, row) in self.data.chunks_exact_mut(dim).enumerate() {
            for (c, q) in row.iter_mut().enumerate() {
                if (r ^ c) & mask != 0 {
                    *q = Complex64::new(0.0, 0.0);
                }
            }
        }
        self
    }

    /// `ρ ← G ρ G†`.
    fn evolve(&mut self, gate: &Gate) {
        self.conjugate(&gate.inverse());
    }

    /// `Tr(A B)` for Hermitian `A`, `B`.
    pub fn trace_product(&self, other: &DenseObservable) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    /// `⟨v|Q|v⟩` using Hermiticity.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let dim = self.dim();
        let mut diag = 0.0;
        let mut off = 0.0;
        for (a, row) in self.data.chunks_exact(dim).enumerate() {
            let va = v[a];
            diag += row[a].re * va.norm_sqr();
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, vb) in row[a + 1..].iter().zip(&v[a + 1..]) {
                acc += q * vb;
            }
            off += (va.conj() * acc).re;
        }
        diag + 2.0 * off
    }
}

/// Output of one shift sweep.
#[derive(Debug, Clone)]
pub struct ShiftSweep {
    /// Unshifted expectation per initial state.
    pub values: Vec<f64>,
    /// `∂E/∂angle` per initial state, per requested slot (in request order).
    pub gradients: Vec<Vec<f64>>,
    pub evaluations: usize,
}

/// Exact shift-rule derivatives of `⟨ψ|U† O U|ψ⟩` with respect to the angles
/// of the gates at indices `slots`, for each initial state in `inits`.
pub fn shift_sweep(
    gates: &[Gate],
    slots: &[usize],
    inits: &[StateVector],
    observable: &DenseObservable,
) -> Result<ShiftSweep> {
    let n = observable.n_qubits();
    for g in gates {
        g.validate(n)?;
    }
    if inits.iter().any(|s| s.n_qubits() != n) {
        return Err(Error::InvalidArgument("initial state size differs from observable".into()));
    }
    let mut position = vec![Vec::new(); gates.len()];
    for (k, &g) in slots.iter().enumerate() {
        let gate = gates.get(g).ok_or_else(|| {
            Error::InvalidArgument(format!("slot {g} outside circuit of {} gates", gates.len()))
        })?;
        shift_rule(gate.kind())?;
        position[g].push(k);
    }

    let mut states: Vec<StateVector> = inits.to_vec();
    for s in &mut states {
        for g in gates {
            s.apply_unchecked(g);
        }
    }
    let values: Vec<f64> = states.iter().map(|s| observable.expectation(s.amplitudes())).collect();
    let mut gradients = vec![vec![0.0; slots.len()]; inits.len()];
    let mut evaluations = 0;

    let first = match slots.iter().min() {
        Some(&f) => f,
        None => return Ok(ShiftSweep { values, gradients, evaluations }),
    };
    let mut q = observable.clone();
    let mut shifted = states.first().cloned().unwrap_or(StateVector::zero(n)?);
    for i in (first..gates.len()).rev() {
        let gate = &gates[i];
        let inverse = gate.inverse();
        for s in &mut states {
            s.apply_unchecked(&inverse);
        }
        if !position[i].is_empty() {
            let rule = shift_rule(gate.kind())?;
            for (s, grads) in states.iter().zip(gradients.iter_mut()) {
                let mut d = 0.0;
                for &(shift, coeff) in rule {
                    shifted.amplitudes_mut().copy_from_slice(s.amplitudes());
                    shifted.apply_unchecked(&gate.shifted(shift));
                    d += coeff * q.expectation(shifted.amplitudes());
                    evaluations += 1;
                }
                for &k in &position[i] {
                    grads[k] = d;
                }
            }
        }
        if i > first {
            q.conjugate(gate);
        }
    }
    Ok(ShiftSweep { values, gradients, evaluations })
}

/// Shift-rule derivatives of `Tr(O U ρ U†)` with respect to the angles of the
/// gates at `slots`. With `ρ = Σ w_k |ψ_k⟩⟨ψ_k|` this is the `w`-weighted sum of
/// the per-state derivatives from [`shift_sweep`], at the cost of one sweep.
pub fn mixture_shift_sweep(
    gates: &[Gate],
    slots: &[usize],
    mut rho: DenseObservable,
    observable: &DenseObservable,
) -> Result<Vec<f64>> {
    let n = observable.n_qubits();
    if rho.n_qubits() != n {
        return Err(Error::InvalidArgument("mixture size differs from observable".into()));
    }
    for g in gates {
        g.validate(n)?;
    }
    let mut position = vec![Vec::new(); gates.len()];
    for (k, &g) in slots.iter().enumerate() {
        let gate = gates.get(g).ok_or_else(|| {
            Error::InvalidArgument(format!("slot {g} outside circuit of {} gates", gates.len()))
        })?;
        shift_rule(gate.kind())?;
        position[g].push(k);
    }
    let mut gradient = vec![0.0; slots.len()];
    let Some(&first) = slots.iter().min() else {
        return Ok(gradient);
    };
    for g in gates {
        rho.evolve(g);
    }
    let mut q = observable.clone();
    let mut shifted = rho.clone();
    for i in (first..gates.len()).rev() {
        let gate = &gates[i];
        rho.conjugate(gate);
        if !position[i].is_empty() {
            let mut d = 0.0;
            for &(shift, coeff) in shift_rule(gate.kind())? {
                shifted.data.copy_from_slice(&rho.data);
                shifted.evolve(&gate.shifted(shift));
                d += coeff * q.trace_product(&shifted);
            }
            for &k in &position[i] {
                gradient[k] = d;
            }
        }
        if i > first {
            q.conjugate(gate);
        }
    }
    Ok(gradient)
}

/// `∂/∂θ Tr(M U_θ ρ U_θ†)` of a model's ansatz, scaled by the output slope
/// and accumulated per θ index.
pub fn grad_theta_mixture(model: &QuantumModel, rho: DenseObservable) -> Result<Vec<f64>> {
    let n = model.n_qubits();
    let ansatz = model.ansatz().bind(&[], model.theta())?;
    let slots: Vec<(usize, usize)> = ansatz.variational_slots().collect();
    let gate_slots: Vec<usize> = slots.iter().map(|&(g, _)| g).collect();
    let d = mixture_shift_sweep(&ansatz.gates, &gate_slots, rho, &DenseObservable::magnetization(n)?)?;
    let slope = model.observable().slope();
    let mut values = vec![0.0; model.theta().len()];
    for (d, &(_, k)) in d.iter().zip(&slots) {
        values[k] += slope * d;
    }
    Ok(values)
}

fn zero_states(n: usize, count: usize) -> Result<Vec<StateVector>> {
    let z = StateVector::zero(n)?;
    Ok(vec![z; count])
}

/// Heisenberg-picture observable `U_θ† M U_θ` of a model at its current θ.
pub fn model_observable(model: &QuantumModel) -> Result<DenseObservable> {
    DenseObservable::magnetization(model.n_qubits())?.heisenberg(&model.ansatz_gates())
}

/// `∂(scaled output)/∂θ` at one input.
pub fn grad_theta(model: &QuantumModel, features: &[f64]) -> Result<GradientReport> {
    let inputs = [features.to_vec()];
    Ok(grad_theta_batch(model, &inputs)?.remove(0))
}

/// [`grad_theta`] for many inputs sharing one backward sweep.
pub fn grad_theta_batch(model: &QuantumModel, inputs: &[Vec<f64>]) -> Result<Vec<GradientReport>> {
    let n = model.n_qubits();
    let mut inits = Vec::with_capacity(inputs.len());
    let mut clamped = Vec::with_capacity(inputs.len());
    for f in inputs {
        let fm = model.bind_features(f)?;
        let mut s = StateVector::zero(n)?;
        s.apply_all(&fm.gates)?;
        inits.push(s);
        clamped.push(fm.clamped);
    }
    let ansatz = model.ansatz().bind(&[], model.theta())?;
    let slots: Vec<(usize, usize)> = ansatz.variational_slots().collect();
    let gate_slots: Vec<usize> = slots.iter().map(|&(g, _)| g).collect();
    let sweep = shift_sweep(&ansatz.gates, &gate_slots, &inits, &DenseObservable::magnetization(n)?)?;
    let obs = model.observable();
    let per_input = sweep.evaluations / inputs.len().max(1);
    Ok(sweep
        .gradients
        .into_iter()
        .zip(sweep.values)
        .zip(clamped)
        .map(|((g, value), clamped)| {
            let mut values = vec![0.0; model.theta().len()];
            for (d, &(_, k)) in g.iter().zip(&slots) {
                values[k] += obs.slope() * d;
            }
            GradientReport { values, evaluations: per_input, output: obs.scale(value), clamped }
        })
        .collect())
}

/// `∂(scaled output)/∂x` for a single-feature Chebyshev model.
pub fn grad_x(model: &QuantumModel, x: f64) -> Result<GradientReport> {
    grad_feature(model, &[x], 0)
}

/// `∂(scaled output)/∂features[index]` via the chain rule through every gate
/// driven by that (continuous) feature.
pub fn grad_feature(model: &QuantumModel, features: &[f64], index: usize) -> Result<GradientReport> {
    let obs = model_observable(model)?;
    grad_feature_with(model, &obs, features, index)
}

/// Input gradients at many points, reusing the Heisenberg observable of the ansatz.
pub fn grad_x_batch(model: &QuantumModel, xs: &[f64]) -> Result<Vec<GradientReport>> {
    let obs = model_observable(model)?;
    xs.iter().map(|&x| grad_feature_with(model, &obs, &[x], 0)).collect()
}

pub(crate) fn grad_feature_with(
    model: &QuantumModel,
    heisenberg: &DenseObservable,
    features: &[f64],
    index: usize,
) -> Result<GradientReport> {
    let value = *features
        .get(index)
        .ok_or_else(|| Error::Binding(format!("no feature {index}")))?;
    let fm = model.bind_features(features)?;
    let slots = fm.feature_slots(index, value);
    if slots.is_empty() {
        return Err(Error::Binding(format!("feature {index} drives no differentiable gate")));
    }
    let gate_slots: Vec<usize> = slots.iter().map(|&(g, _)| g).collect();
    let sweep = shift_sweep(&fm.gates, &gate_slots, &zero_states(model.n_qubits(), 1)?, heisenberg)?;
    let chain: f64 = sweep.gradients[0].iter().zip(&slots).map(|(d, &(_, dphi))| d * dphi).sum();
    let obs = model.observable();
    Ok(GradientReport {
        values: vec![obs.slope() * chain],
        evaluations: sweep.evaluations,
        output: obs.scale(sweep.values[0]),
        clamped: fm.clamped,
    })
}

/// `∂/∂θ [∂f/∂x]` at one point of a single-feature Chebyshev model (nested shifts).
pub fn grad_theta_of_dfdx(model: &QuantumModel, x: f64) -> Result<GradientReport> {
    Ok(grad_theta_of_dfdx_batch(model, &[x])?.remove(0))
}

/// [`grad_theta_of_dfdx`] at many points; each θ-shifted ansatz is swept once.
pub fn grad_theta_of_dfdx_batch(model: &QuantumModel, xs: &[f64]) -> Result<Vec<GradientReport>> {
    let n = model.n_qubits();
    let ansatz = model.ansatz().bind(&[], model.theta())?;
    let mut bound = Vec::with_capacity(xs.len());
    for &x in xs {
        let fm = model.bind_features(&[x])?;
        let slots = fm.feature_slots(0, x);
        if slots.is_empty() {
            return Err(Error::Binding("feature 0 drives no differentiable gate".into()));
        }
        bound.push((fm, slots));
    }
    let zero = zero_states(n, 1)?;
    let magnetization = DenseObservable::magnetization(n)?;
    let obs = model.observable();
    let mut reports: Vec<GradientReport> = bound
        .iter()
        .map(|(fm, _)| GradientReport {
            values: vec![0.0; model.theta().len()],
            evaluations: 0,
            output: f64::NAN,
            clamped: fm.clamped,
        })
        .collect();

    let mut gates = ansatz.gates.clone();
    for (g, k) in ansatz.variational_slots() {
        let original = gates[g];
        for &(shift, coeff) in shift_rule(original.kind())? {
            gates[g] = original.shifted(shift);
            let heisenberg = magnetization.clone().heisenberg(&gates)?;
            for ((fm, slots), report) in bound.iter().zip(reports.iter_mut()) {
                let gate_slots: Vec<usize> = slots.iter().map(|&(gi, _)| gi).collect();
                let sweep = shift_sweep(&fm.gates, &gate_slots, &zero, &heisenberg)?;
                let dfdx: f64 = sweep.gradients[0].iter().zip(slots).map(|(d, &(_, dphi))| d * dphi).sum();
                report.values[k] += coeff * obs.slope() * dfdx;
                report.evaluations += sweep.evaluations;
            }
        }
        gates[g] = original;
    }
    for (x, report) in xs.iter().zip(reports.iter_mut()) {
        report.output = model.evaluate(&[*x])?;
    }
    Ok(reports)
}
