//! Losses, optimizers and the model fitting loop.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::circuit::QuantumModel;
use crate::diff::{grad_theta_mixture, grad_x_batch, model_observable, shift_rule, DenseObservable};
use crate::sim::StateVector;
use crate::{Error, Result};

/// Boundary penalty weight of the ODE residual loss.
pub const BOUNDARY_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: f64,
}

/// Affine min-max map of targets onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub min: f64,
    pub max: f64,
}

impl TargetScaler {
    pub fn forward(&self, y: f64) -> f64 {
        (y - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        self.min + s * (self.max - self.min)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub scaling: Option<TargetScaler>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self { samples, scaling: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.input.clone()).collect()
    }
}

/// Min-max scales targets to `[0, 1]` and records the map for inversion.
pub fn scale_targets(dataset: &Dataset) -> Result<(Dataset, TargetScaler)> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot scale an empty dataset".into()));
    }
    let (min, max) = dataset
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.target), hi.max(s.target)));
    if !(max > min) {
        return Err(Error::DegenerateRange(min));
    }
    let scaler = TargetScaler { min, max };
    let samples = dataset
        .samples
        .iter()
        .map(|s| Sample { input: s.input.clone(), target: scaler.forward(s.target) })
        .collect();
    Ok((Dataset { samples, scaling: Some(scaler) }, scaler))
}

/// First-order ODE `f′(x) = g(x)` with `f(x₀) = f₀` on a uniform collocation grid.
#[derive(Clone)]
pub struct OdeSpec {
    rhs: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub boundary: (f64, f64),
    pub domain: (f64, f64),
    pub collocation: usize,
}

impl fmt::Debug for OdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSpec")
            .field("boundary", &self.boundary)
            .field("domain", &self.domain)
            .field("collocation", &self.collocation)
            .finish_non_exhaustive()
    }
}

impl OdeSpec {
    pub fn new(
        rhs: impl Fn(f64) -> f64 + Send + Sync + 'static,
        boundary: (f64, f64),
        domain: (f64, f64),
        collocation: usize,
    ) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty domain [{lo}, {hi}]")));
        }
        if boundary.0 < lo || boundary.0 > hi {
            return Err(Error::InvalidArgument(format!(
                "boundary point {} outside domain [{lo}, {hi}]",
                boundary.0
            )));
        }
        Ok(Self { rhs: Arc::new(rhs), boundary, domain, collocation })
    }

    pub fn rhs(&self, x: f64) -> f64 {
        (self.rhs)(x)
    }

    /// Left edges of `collocation` equal cells of the domain: uniform spacing,
    /// lower endpoint included, upper endpoint left out because `d arccos/dx`
    /// diverges at `x = 1`.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.domain;
        let m = self.collocation as f64;
        (0..self.collocation).map(|k| lo + (hi - lo) * (k as f64 / m)).collect()
    }
}

/// `count` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

pub fn mse_loss(model: &QuantumModel, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let mut total = 0.0;
    for s in &dataset.samples {
        let r = model.evaluate(&s.input)? - s.target;
        total += r * r;
    }
    Ok(total / dataset.len() as f64)
}

fn mse_loss_and_grad(model: &QuantumModel, dataset: &Dataset) -> Result<(f64, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let m = dataset.len() as f64;
    let n = model.n_qubits();
    let obs = model.observable();
    let ansatz = model.ansatz_gates();
    let mut loss = 0.0;
    let mut terms = Vec::with_capacity(dataset.len());
    for s in &dataset.samples {
        let mut psi = StateVector::zero(n)?;
        psi.apply_all(&model.bind_features(&s.input)?.gates)?;
        let mut out = psi.clone();
        out.apply_all(&ansatz)?;
        let residual = obs.scale(out.expectation_z_sum()) - s.target;
        loss += residual * residual / m;
        terms.push((2.0 * residual / m, psi));
    }
    let rho = DenseObservable::mixture(n, terms.iter().map(|(w, psi)| (*w, psi)))?;
    Ok((loss, grad_theta_mixture(model, rho)?))
}

/// Mean squared ODE residual over the grid plus the boundary penalty.
pub fn ode_residual_loss(model: &QuantumModel, ode: &OdeSpec) -> Result<f64> {
    let grid = ode.grid();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty collocation grid".into()));
    }
    let derivs = grad_x_batch(model, &grid)?;
    let residual: f64 = grid
        .iter()
        .zip(&derivs)
        .map(|(&x, d)| (d.values[0] - ode.rhs(x)).powi(2))
        .sum::<f64>()
        / grid.len() as f64;
    let (x0, f0) = ode.boundary;
    let b = model.evaluate(&[x0])? - f0;
    Ok(residual + BOUNDARY_WEIGHT * b * b)
}

fn ode_loss_and_grad(model: &QuantumModel, ode: &OdeSpec) -> Result<(f64, Vec<f64>)> {
    let grid = ode.grid();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty collocation grid".into()));
    }
    let m = grid.len() as f64;
    let n = model.n_qubits();
    let slope = model.observable().slope();
    let heisenberg = model_observable(model)?;
    let mut loss = 0.0;
    let mut terms: Vec<(f64, StateVector)> = Vec::new();
    for &x in &grid {
        // f′(x) = slope · Σ_slots dφ/dx · Σ_shifts c·E(shifted feature map)
        let fm = model.bind_features(&[x])?;
        let slots = fm.feature_slots(0, x);
        if slots.is_empty() {
            return Err(Error::Binding("feature 0 drives no differentiable gate".into()));
        }
        let mut point = Vec::new();
        let mut dfdx = 0.0;
        for &(g, dphi) in &slots {
            for &(shift, coeff) in shift_rule(fm.gates[g].kind())? {
                let mut psi = StateVector::zero(n)?;
                for (i, gate) in fm.gates.iter().enumerate() {
                    psi.apply(&if i == g { gate.shifted(shift) } else { *gate })?;
                }
                dfdx += slope * dphi * coeff * heisenberg.expectation(psi.amplitudes());
                point.push((dphi * coeff, psi));
            }
        }
        let r = dfdx - ode.rhs(x);
        loss += r * r / m;
        terms.extend(point.into_iter().map(|(w, psi)| (2.0 * r / m * w, psi)));
    }
    let (x0, f0) = ode.boundary;
    let mut psi0 = StateVector::zero(n)?;
    psi0.apply_all(&model.bind_features(&[x0])?.gates)?;
    let b = model.observable().scale(heisenberg.expectation(psi0.amplitudes())) - f0;
    loss += BOUNDARY_WEIGHT * b * b;
    terms.push((2.0 * BOUNDARY_WEIGHT * b, psi0));
    let rho = DenseObservable::mixture(n, terms.iter().map(|(w, psi)| (*w, psi)))?;
    Ok((loss, grad_theta_mixture(model, rho)?))
}

/// What a model is fitted to.
#[derive(Debug, Clone)]
pub enum Loss {
    Mse(Dataset),
    OdeResidual(OdeSpec),
}

impl Loss {
    pub fn value(&self, model: &QuantumModel) -> Result<f64> {
        match self {
            Loss::Mse(d) => mse_loss(model, d),
            Loss::OdeResidual(o) => ode_residual_loss(model, o),
        }
    }

    pub fn value_and_grad(&self, model: &QuantumModel) -> Result<(f64, Vec<f64>)> {
        match self {
            Loss::Mse(d) => mse_loss_and_grad(model, d),
            Loss::OdeResidual(o) => ode_loss_and_grad(model, o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    Lbfgs { lr: f64, history: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(flatten)]
    pub kind: OptimizerKind,
    pub epochs: usize,
}

impl OptimizerConfig {
    pub fn adam(lr: f64, epochs: usize) -> Self {
        Self { kind: OptimizerKind::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }, epochs }
    }

    pub fn lbfgs(lr: f64, epochs: usize) -> Self {
        Self { kind: OptimizerKind::Lbfgs { lr, history: 10 }, epochs }
    }

    pub fn lr(&self) -> f64 {
        match self.kind {
            OptimizerKind::Adam { lr, .. } | OptimizerKind::Lbfgs { lr, .. } => lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.lr();
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {lr}")));
        }
        if let OptimizerKind::Adam { beta1, beta2, eps, .. } = self.kind {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::InvalidArgument("ADAM needs β₁, β₂ ∈ [0, 1) and ε > 0".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn optimizer(&self, n_params: usize) -> Optimizer {
        match self.kind {
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                Optimizer::Adam(Adam::with_moments(lr, beta1, beta2, eps, n_params))
            }
            OptimizerKind::Lbfgs { lr, history } => Optimizer::Lbfgs(Lbfgs::new(lr, history)),
        }
    }
}

/// ADAM with bias correction. Minimizes.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self::with_moments(lr, 0.9, 0.999, 1e-8, n_params)
    }

    pub fn with_moments(lr: f64, beta1: f64, beta2: f64, eps: f64, n_params: usize) -> Self {
        Self { lr, beta1, beta2, eps, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "ADAM expects {} parameters, got params {} / grad {}",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite { epoch: self.t + 1, what: format!("gradient component {i}") });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Fixed-step L-BFGS (two-loop recursion, no line search). Minimizes.
#[derive(Debug, Clone)]
pub struct Lbfgs {
    lr: f64,
    history: usize,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    last: Option<(Vec<f64>, Vec<f64>)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Lbfgs {
    pub fn new(lr: f64, history: usize) -> Self {
        Self { lr, history, s: VecDeque::new(), y: VecDeque::new(), last: None }
    }

    /// Approximate inverse-Hessian times gradient.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let k = self.s.len();
        let mut alpha = vec![0.0; k];
        let rho: Vec<f64> = self.s.iter().zip(&self.y).map(|(s, y)| 1.0 / dot(s, y)).collect();
        for i in (0..k).rev() {
            alpha[i] = rho[i] * dot(&self.s[i], &q);
            for (qj, yj) in q.iter_mut().zip(&self.y[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        if let (Some(s), Some(y)) = (self.s.back(), self.y.back()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..k {
            let beta = rho[i] * dot(&self.y[i], &q);
            for (qj, sj) in q.iter_mut().zip(&self.s[i]) {
                *qj += (alpha[i] - beta) * sj;
            }
        }
        q
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite { epoch: self.s.len(), what: format!("gradient component {i}") });
        }
        if let Some((p_prev, g_prev)) = self.last.take() {
            let s: Vec<f64> = params.iter().zip(&p_prev).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = grad.iter().zip(&g_prev).map(|(a, b)| a - b).collect();
            if self.history > 0 && dot(&s, &y) > 1e-12 {
                if self.s.len() == self.history {
                    self.s.pop_front();
                    self.y.pop_front();
                }
                self.s.push_back(s);
                self.y.push_back(y);
            }
        }
        let d = self.direction(grad);
        self.last = Some((params.to_vec(), grad.to_vec()));
        for (p, di) in params.iter_mut().zip(&d) {
            *p -= self.lr * di;
        }
        Ok(())
    }
}

pub(crate) enum Optimizer {
    Adam(Adam),
    Lbfgs(Lbfgs),
}

impl Optimizer {
    pub(crate) fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        match self {
            Optimizer::Adam(a) => a.step(params, grad),
            Optimizer::Lbfgs(l) => l.step(params, grad),
        }
    }
}

/// Outcome of an optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Loss at the parameters used for each epoch's gradient.
    pub loss_trajectory: Vec<f64>,
    pub initial_loss: f64,
    /// Loss at `final_theta`.
    pub final_loss: f64,
    pub final_theta: Vec<f64>,
    /// 1-based epoch whose parameters were kept; `loss_trajectory.len() + 1`
    /// means the parameters after the last step.
    pub best_epoch: usize,
    /// `final_loss ≤ initial_loss`.
    pub improved: bool,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Runs fixed-step L-BFGS on an arbitrary objective, stopping early on a zero gradient.
pub fn lbfgs_run<F>(mut objective: F, params: &mut [f64], lr: f64, history: usize, epochs: usize) -> Result<TrainReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let start = Instant::now();
    let mut opt = Lbfgs::new(lr, history);
    let mut trajectory = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grad) = objective(params)?;
        check_loss(loss, epoch + 1)?;
        trajectory.push(loss);
        if grad.iter().all(|g| *g == 0.0) {
            break;
        }
        opt.step(params, &grad)?;
    }
    let final_loss = objective(params)?.0;
    check_loss(final_loss, trajectory.len())?;
    let initial_loss = trajectory.first().copied().unwrap_or(final_loss);
    Ok(TrainReport {
        best_epoch: trajectory.len() + 1,
        loss_trajectory: trajectory,
        initial_loss,
        final_loss,
        final_theta: params.to_vec(),
        improved: final_loss <= initial_loss,
        wall_time: start.elapsed(),
    })
}

fn check_loss(loss: f64, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { epoch, what: "loss".into() })
    }
}

/// Full-batch training through a schedule of optimizer stages. Keeps the
/// lowest-loss parameters seen (including those after the last step) and
/// freezes the model.
pub fn fit(model: &mut QuantumModel, loss: &Loss, schedule: &[OptimizerConfig]) -> Result<TrainReport> {
    if model.is_frozen() {
        return Err(Error::Frozen);
    }
    for c in schedule {
        c.validate()?;
    }
    let start = Instant::now();
    let mut theta = model.theta().to_vec();
    let mut trajectory = Vec::new();
    let mut best = (f64::INFINITY, theta.clone(), 0);
    for stage in schedule {
        let mut opt = stage.optimizer(theta.len());
        for _ in 0..stage.epochs {
            let (value, grad) = loss.value_and_grad(model)?;
            let epoch = trajectory.len() + 1;
            check_loss(value, epoch)?;
            trajectory.push(value);
            if value < best.0 {
                best = (value, theta.clone(), epoch);
            }
            opt.step(&mut theta, &grad).map_err(|e| match e {
                Error::NonFinite { what, .. } => Error::NonFinite { epoch, what },
                e => e,
            })?;
            model.set_theta(&theta)?;
        }
    }
    let last = loss.value(model)?;
    check_loss(last, trajectory.len() + 1)?;
    if last <= best.0 {
        best = (last, theta, trajectory.len() + 1);
    } else {
        // large fixed steps can leave the minimum late in training
        model.set_theta(&best.1)?;
    }
    let (final_loss, final_theta, best_epoch) = best;
    model.freeze();
    let initial_loss = trajectory.first().copied().unwrap_or(final_loss);
    Ok(TrainReport {
        loss_trajectory: trajectory,
        initial_loss,
        final_loss,
        final_theta,
        best_epoch,
        improved: final_loss <= initial_loss,
        wall_time: start.elapsed(),
    })
}
