//! Benchmark generators, cost functions, analytic solutions and brute-force oracles.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::train::{Dataset, Sample};
use crate::{Error, Result};

/// Largest bit count accepted by [`brute_force_optimum`].
pub const MAX_BRUTE_FORCE_BITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// `+1` for maximization, `−1` for minimization.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        }
    }

    pub fn better(self, a: f64, b: f64) -> bool {
        self.sign() * (a - b) > 0.0
    }
}

/// Bits in qubit order; bit 0 is the most significant bit of [`Bitstring::index`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bitstring(Vec<bool>);

impl Bitstring {
    pub fn from_index(index: usize, n_bits: usize) -> Self {
        Self((0..n_bits).map(|q| (index >> (n_bits - 1 - q)) & 1 == 1).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("non-binary symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl Serialize for Bitstring {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A cost over fixed-length bitstrings.
pub trait DiscreteProblem {
    fn n_bits(&self) -> usize;
    fn cost(&self, z: &Bitstring) -> Result<f64>;
}

fn check_len(z: &Bitstring, n: usize) -> Result<()> {
    if z.len() == n {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("bitstring has {} bits, expected {n}", z.len())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutInstance {
    pub points: Vec<[f64; 2]>,
    /// Pairwise Euclidean distances (complete graph).
    pub weights: Vec<Vec<f64>>,
    pub separation: f64,
}

impl MaxCutInstance {
    pub fn from_points(points: Vec<[f64; 2]>, separation: f64) -> Self {
        let weights = points
            .iter()
            .map(|p| points.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).collect())
            .collect();
        Self { points, weights, separation }
    }

    /// The two bitstrings separating the first half of the points from the second.
    pub fn cluster_bipartition(&self) -> [Bitstring; 2] {
        let n = self.points.len();
        let z = Bitstring((0..n).map(|i| i >= n / 2).collect());
        [z.complement(), z]
    }
}

/// `n/2` points uniform in `[0,1]²` and `n/2` uniform in `[sep, sep+1]×[0,1]`.
pub fn gen_maxcut_clusters<R: Rng + ?Sized>(n: usize, separation: f64, rng: &mut R) -> Result<MaxCutInstance> {
    if n % 2 == 1 || n < 4 {
        return Err(Error::InvalidArgument(format!("Max-Cut needs an even n ≥ 4, got {n}")));
    }
    let points = (0..n)
        .map(|i| {
            let dx = if i < n / 2 { 0.0 } else { separation };
            [dx + rng.random::<f64>(), rng.random::<f64>()]
        })
        .collect();
    Ok(MaxCutInstance::from_points(points, separation))
}

pub fn maxcut_cost(instance: &MaxCutInstance, z: &Bitstring) -> Result<f64> {
    let n = instance.points.len();
    check_len(z, n)?;
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if z.0[i] != z.0[j] {
                total += instance.weights[i][j];
            }
        }
    }
    Ok(total)
}

impl DiscreteProblem for MaxCutInstance {
    fn n_bits(&self) -> usize {
        self.points.len()
    }

    fn cost(&self, z: &Bitstring) -> Result<f64> {
        maxcut_cost(self, z)
    }
}

/// Nearest-neighbor spin chain with terms up to `max_order` contiguous spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationChainInstance {
    pub n: usize,
    pub max_order: usize,
    /// `coefficients[k][i]` weighs the window of `k + 1` spins starting at `i`.
    pub coefficients: Vec<Vec<f64>>,
}

impl CorrelationChainInstance {
    pub fn new(n: usize, max_order: usize, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        if !(2..=3).contains(&max_order) {
            return Err(Error::InvalidArgument(format!("chain order must be 2 or 3, got {max_order}")));
        }
        if n < max_order {
            return Err(Error::InvalidArgument(format!("chain of {n} spins cannot hold order {max_order}")));
        }
        let shape_ok = coefficients.len() == max_order
            && coefficients.iter().enumerate().all(|(k, c)| c.len() == n - k);
        if !shape_ok {
            return Err(Error::InvalidArgument("coefficient table has the wrong shape".into()));
        }
        Ok(Self { n, max_order, coefficients })
    }
}

/// Coefficients i.i.d. Normal(0, 1).
pub fn gen_correlation_chain<R: Rng + ?Sized>(n: usize, max_order: usize, rng: &mut R) -> Result<CorrelationChainInstance> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let coefficients = (0..max_order.min(n))
        .map(|k| (0..n - k).map(|_| normal.sample(rng)).collect())
        .collect();
    CorrelationChainInstance::new(n, max_order, coefficients)
}

/// `Σ_i c_i s_i + Σ_i c_{i,i+1} s_i s_{i+1} (+ third order)` with `s = 1 − 2z`.
pub fn chain_cost(instance: &CorrelationChainInstance, z: &Bitstring) -> Result<f64> {
    check_len(z, instance.n)?;
    let spins: Vec<f64> = z.0.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect();
    let mut total = 0.0;
    for (k, coeffs) in instance.coefficients.iter().enumerate() {
        for (i, c) in coeffs.iter().enumerate() {
            total += c * spins[i..=i + k].iter().product::<f64>();
        }
    }
    Ok(total)
}

impl DiscreteProblem for CorrelationChainInstance {
    fn n_bits(&self) -> usize {
        self.n
    }

    fn cost(&self, z: &Bitstring) -> Result<f64> {
        chain_cost(self, z)
    }
}

/// Number of substituent sites of the molecule benchmark.
pub const MOLECULE_SITES: usize = 5;

/// Five binary substituent sites with linear and nearest-neighbor energy tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeInstance {
    /// `linear[i][b]`.
    pub linear: Vec<[f64; 2]>,
    /// `quadratic[i][a][b]` couples sites `i` and `i+1`; symmetric in `a, b`.
    pub quadratic: Vec<[[f64; 2]; 2]>,
}

/// Linear entries Normal(0, 1), pair entries Normal(0, 2) with `[0][1]` mirrored into `[1][0]`.
pub fn gen_molecule<R: Rng + ?Sized>(rng: &mut R) -> MoleculeInstance {
    let lin = Normal::new(0.0, 1.0).expect("valid normal");
    let quad = Normal::new(0.0, 2.0).expect("valid normal");
    let linear = (0..MOLECULE_SITES).map(|_| [lin.sample(rng), lin.sample(rng)]).collect();
    let quadratic = (0..MOLECULE_SITES - 1)
        .map(|_| {
            let mut t = [[0.0; 2]; 2];
            for row in &mut t {
                for v in row.iter_mut() {
                    *v = quad.sample(rng);
                }
            }
            t[1][0] = t[0][1];
            t
        })
        .collect();
    MoleculeInstance { linear, quadratic }
}

pub fn molecule_energy(instance: &MoleculeInstance, z: &Bitstring) -> Result<f64> {
    check_len(z, MOLECULE_SITES)?;
    let b: Vec<usize> = z.0.iter().map(|&v| v as usize).collect();
    let linear: f64 = instance.linear.iter().zip(&b).map(|(e, &bi)| e[bi]).sum();
    let pairs: f64 = instance
        .quadratic
        .iter()
        .enumerate()
        .map(|(i, e)| e[b[i]][b[i + 1]])
        .sum();
    Ok(linear + pairs)
}

impl DiscreteProblem for MoleculeInstance {
    fn n_bits(&self) -> usize {
        MOLECULE_SITES
    }

    fn cost(&self, z: &Bitstring) -> Result<f64> {
        molecule_energy(self, z)
    }
}

/// Mixed continuous/discrete test function on `[−1, 1] × {1, 2, 3, 4}`.
pub fn mixed_f(x: f64, n: usize) -> Result<f64> {
    match n {
        1 => Ok(-x * x * (2.0 * x + 2.0).sin()),
        2 => Ok(x.powi(3) * (2.0 * x).sin() - 0.2),
        3 => Ok((2.0 * x - 0.5).sin().powi(2) - 0.6),
        4 => Ok(-x * (2.0 * x + 2.0).sin() / 2.0),
        _ => Err(Error::InvalidArgument(format!("n must be in 1..=4, got {n}"))),
    }
}

/// Location and value of the minimum of [`mixed_f`].
pub const MIXED_MINIMUM: (f64, usize, f64) = (0.25, 3, -0.6);

/// Right-hand side `g(x)` of the benchmark ODE `f′ = g`, `f(0) = 0`.
pub fn ode_rhs(x: f64) -> f64 {
    -(10.0 * x).sin() + 3.0 * (25.0 * x).cos() - 2.0 * x + 1.25
}

pub fn ode_analytic(x: f64) -> f64 {
    ((10.0 * x).cos() - 1.0) / 10.0 + 0.12 * (25.0 * x).sin() - x * x + 1.25 * x
}

pub fn target_sin5x(x: f64) -> f64 {
    (5.0 * x).sin()
}

/// All optimal bitstrings (ties included, ascending) and the optimal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub set: Vec<Bitstring>,
    pub value: f64,
}

/// Exhaustive scan over all `2ⁿ` bitstrings. Values within `1e-12` relative of the best count as ties.
pub fn brute_force_optimum(problem: &dyn DiscreteProblem, direction: Direction) -> Result<Optimum> {
    let n = problem.n_bits();
    if n > MAX_BRUTE_FORCE_BITS {
        return Err(Error::Capacity(n));
    }
    let costs = all_costs(problem)?;
    let best = costs
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, c| match acc {
            Some(b) if !direction.better(c, b) => Some(b),
            _ => Some(c),
        })
        .ok_or_else(|| Error::InvalidArgument("empty input space".into()))?;
    let tol = 1e-12 * best.abs().max(1.0);
    let set = costs
        .iter()
        .enumerate()
        .filter(|(_, c)| (*c - best).abs() <= tol)
        .map(|(i, _)| Bitstring::from_index(i, n))
        .collect();
    Ok(Optimum { set, value: best })
}

/// Cost of every bitstring, indexed by [`Bitstring::index`].
pub fn all_costs(problem: &dyn DiscreteProblem) -> Result<Vec<f64>> {
    let n = problem.n_bits();
    if n > MAX_BRUTE_FORCE_BITS {
        return Err(Error::Capacity(n));
    }
    (0..1usize << n).map(|i| problem.cost(&Bitstring::from_index(i, n))).collect()
}

/// `size` distinct bitstrings drawn without replacement; inputs are basis indices, targets raw costs.
pub fn make_discrete_training_set<R: Rng + ?Sized>(
    problem: &dyn DiscreteProblem,
    size: usize,
    rng: &mut R,
) -> Result<Dataset> {
    let n = problem.n_bits();
    if n > MAX_BRUTE_FORCE_BITS {
        return Err(Error::Capacity(n));
    }
    let space = 1usize << n;
    if size == 0 || size > space {
        return Err(Error::InvalidArgument(format!("training size {size} outside 1..={space}")));
    }
    let mut picks = index::sample(rng, space, size).into_vec();
    picks.sort_unstable();
    picks
        .into_iter()
        .map(|i| {
            let z = Bitstring::from_index(i, n);
            Ok(Sample { input: vec![i as f64], target: problem.cost(&z)? })
        })
        .collect::<Result<Vec<_>>>()
        .map(Dataset::new)
}

/// `size` evenly spaced points of `[lo, hi]` with the open window `exclusion` cut out.
pub fn allowed_grid(domain: (f64, f64), size: usize, exclusion: Option<(f64, f64)>) -> Result<Vec<f64>> {
    let (lo, hi) = domain;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty domain [{lo}, {hi}]")));
    }
    let (wlo, whi) = match exclusion {
        Some((a, b)) if a < b => (a.clamp(lo, hi), b.clamp(lo, hi)),
        Some((a, b)) => return Err(Error::InvalidArgument(format!("empty exclusion window ({a}, {b})"))),
        None => (hi, hi),
    };
    let left = wlo - lo;
    let length = left + (hi - whi);
    if size == 0 || (size > 1 && length <= 0.0) {
        return Err(Error::InvalidArgument("exclusion leaves no room for training points".into()));
    }
    Ok(crate::train::uniform_grid(0.0, length, size)
        .into_iter()
        .map(|t| if t < left || whi >= hi { lo + t } else { whi + (t - left) })
        .collect())
}

/// Continuous training set from [`allowed_grid`].
pub fn make_continuous_training_set(
    f: impl Fn(f64) -> f64,
    domain: (f64, f64),
    size: usize,
    exclusion: Option<(f64, f64)>,
) -> Result<Dataset> {
    Ok(Dataset::new(
        allowed_grid(domain, size, exclusion)?
            .into_iter()
            .map(|x| Sample { input: vec![x], target: f(x) })
            .collect(),
    ))
}
