//! Discrete-observation hidden Markov models: scaled forward likelihood,
//! Viterbi decoding, multi-sequence Baum-Welch training with restarts, and
//! maximum-likelihood classification.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation sequences are runs of codebook symbol indices.
pub type SymbolSequence = Vec<usize>;

const STOCHASTIC_TOL: f64 = 1e-9;

/// A discrete HMM for one action class: initial distribution over states,
/// row-stochastic transition matrix, and row-stochastic emission matrix
/// over the symbol alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHmm {
    initial: Array1<f64>,
    transition: Array2<f64>,
    emission: Array2<f64>,
    label: u32,
}

impl DiscreteHmm {
    pub fn new(
        initial: Array1<f64>,
        transition: Array2<f64>,
        emission: Array2<f64>,
        label: u32,
    ) -> Result<Self> {
        let s = initial.len();
        if transition.nrows() != s || transition.ncols() != s || emission.nrows() != s {
            return Err(Error::InvalidModel(format!(
                "inconsistent shapes: {s} states, {}x{} transition, {}x{} emission",
                transition.nrows(),
                transition.ncols(),
                emission.nrows(),
                emission.ncols()
            )));
        }
        if s == 0 || emission.ncols() == 0 {
            return Err(Error::InvalidModel("zero states or zero symbols".into()));
        }
        let check_row = |row: &[f64], what: &str| -> Result<()> {
            if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                return Err(Error::InvalidModel(format!("negative or non-finite {what}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!("{what} sums to {sum}, expected 1")));
            }
            Ok(())
        };
        check_row(initial.as_slice().expect("contiguous"), "initial distribution")?;
        for (i, row) in transition.rows().into_iter().enumerate() {
            check_row(row.as_slice().expect("contiguous"), &format!("transition row {i}"))?;
        }
        for (i, row) in emission.rows().into_iter().enumerate() {
            check_row(row.as_slice().expect("contiguous"), &format!("emission row {i}"))?;
        }
        Ok(Self {
            initial,
            transition,
            emission,
            label,
        })
    }

    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn symbols(&self) -> usize {
        self.emission.ncols()
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn initial(&self) -> &Array1<f64> {
        &self.initial
    }

    pub fn transition(&self) -> &Array2<f64> {
        &self.transition
    }

    pub fn emission(&self) -> &Array2<f64> {
        &self.emission
    }

    /// Draw an observation sequence of `len` symbols.
    pub fn sample(&self, len: usize, rng: &mut impl Rng) -> SymbolSequence {
        let pick = |weights: &[f64], rng: &mut dyn rand::RngCore| -> usize {
            let mut u: f64 = rng.random_range(0.0..1.0);
            for (i, &w) in weights.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    return i;
                }
            }
            weights.len() - 1
        };
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut state = pick(self.initial.as_slice().expect("contiguous"), rng);
        for _ in 0..len {
            out.push(pick(
                self.emission.row(state).as_slice().expect("contiguous"),
                rng,
            ));
            state = pick(
                self.transition.row(state).as_slice().expect("contiguous"),
                rng,
            );
        }
        out
    }
}

fn check_symbols(obs: &[usize], alphabet: usize) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::EmptyObservation);
    }
    for &o in obs {
        if o >= alphabet {
            return Err(Error::SymbolOutOfRange {
                symbol: o,
                alphabet,
            });
        }
    }
    Ok(())
}

/// Scaled forward pass over raw tables. Returns the per-step normalized
/// alphas and scale factors, or `None` as the log-likelihood if the
/// observation has probability zero.
fn forward_scaled(
    initial: &Array1<f64>,
    transition: &Array2<f64>,
    emission: &Array2<f64>,
    obs: &[usize],
) -> (Vec<Vec<f64>>, Vec<f64>, Option<f64>) {
    let s = initial.len();
    let t_len = obs.len();
    let mut alphas = Vec::with_capacity(t_len);
    let mut scales = Vec::with_capacity(t_len);
    let mut alpha: Vec<f64> = (0..s).map(|i| initial[i] * emission[[i, obs[0]]]).collect();
    let mut log_lik = 0.0;
    for t in 0..t_len {
        if t > 0 {
            let prev: &Vec<f64> = &alphas[t - 1];
            let mut next = vec![0.0; s];
            for (j, nj) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &pi) in prev.iter().enumerate() {
                    acc += pi * transition[[i, j]];
                }
                *nj = acc * emission[[j, obs[t]]];
            }
            alpha = next;
        }
        let c: f64 = alpha.iter().sum();
        if c <= 0.0 {
            return (alphas, scales, None);
        }
        for a in &mut alpha {
            *a /= c;
        }
        log_lik += c.ln();
        scales.push(c);
        alphas.push(alpha.clone());
    }
    (alphas, scales, Some(log_lik))
}

pub(crate) fn forward_ll_tables(
    initial: &Array1<f64>,
    transition: &Array2<f64>,
    emission: &Array2<f64>,
    obs: &[usize],
) -> f64 {
    let (_, _, ll) = forward_scaled(initial, transition, emission, obs);
    ll.unwrap_or(f64::NEG_INFINITY)
}

/// `log P(obs | m)` by the scaled forward recursion; exactly negative
/// infinity when the observation has probability zero.
pub fn forward_log_likelihood(m: &DiscreteHmm, obs: &[usize]) -> Result<f64> {
    check_symbols(obs, m.symbols())?;
    Ok(forward_ll_tables(&m.initial, &m.transition, &m.emission, obs))
}

pub(crate) fn viterbi_tables(
    initial: &Array1<f64>,
    transition: &Array2<f64>,
    emission: &Array2<f64>,
    obs: &[usize],
) -> Result<(Vec<usize>, f64)> {
    let s = initial.len();
    let t_len = obs.len();
    let ln = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
    let ln_trans: Vec<Vec<f64>> = (0..s)
        .map(|i| (0..s).map(|j| ln(transition[[i, j]])).collect())
        .collect();
    let mut delta: Vec<f64> = (0..s)
        .map(|i| ln(initial[i]) + ln(emission[[i, obs[0]]]))
        .collect();
    let mut psi = vec![vec![0usize; s]; t_len];
    for t in 1..t_len {
        let mut next = vec![f64::NEG_INFINITY; s];
        for j in 0..s {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0usize;
            for (i, &d) in delta.iter().enumerate() {
                let v = d + ln_trans[i][j];
                if v > best {
                    best = v;
                    best_i = i;
                }
            }
            next[j] = best + ln(emission[[j, obs[t]]]);
            psi[t][j] = best_i;
        }
        delta = next;
    }
    let mut best = f64::NEG_INFINITY;
    let mut state = 0usize;
    for (j, &d) in delta.iter().enumerate() {
        if d > best {
            best = d;
            state = j;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::ImpossiblePath);
    }
    let mut path = vec![0usize; t_len];
    path[t_len - 1] = state;
    for t in (1..t_len).rev() {
        state = psi[t][state];
        path[t - 1] = state;
    }
    Ok((path, best))
}

/// Most probable state path and its joint log-probability. Ties resolve
/// toward the lower state index at each backtrack step.
pub fn viterbi(m: &DiscreteHmm, obs: &[usize]) -> Result<(Vec<usize>, f64)> {
    check_symbols(obs, m.symbols())?;
    viterbi_tables(&m.initial, &m.transition, &m.emission, obs)
}

/// Stopping and smoothing parameters for one Baum-Welch run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaumWelchConfig {
    pub max_iterations: usize,
    /// Stop when total log-likelihood improves by less than this.
    pub tolerance: f64,
    /// Additive mass put on every emission cell after each update, then
    /// renormalized, so unseen test symbols keep finite likelihood.
    /// Zero disables smoothing.
    pub smoothing: f64,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-4,
            smoothing: 1e-6,
        }
    }
}

/// A trained model along with the total log-likelihood recorded under the
/// parameters of each iteration (entry 0 belongs to the initial model).
#[derive(Debug, Clone)]
pub struct BaumWelchOutcome {
    pub model: DiscreteHmm,
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl BaumWelchOutcome {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihoods.last().expect("at least one entry")
    }
}

struct EStepStats {
    initial_acc: Vec<f64>,
    trans_num: Vec<Vec<f64>>,
    trans_den: Vec<f64>,
    emis_num: Vec<Vec<f64>>,
    emis_den: Vec<f64>,
    total_ll: f64,
}

#[allow(clippy::needless_range_loop)]
fn e_step(m: &DiscreteHmm, data: &[SymbolSequence]) -> Result<EStepStats> {
    let s = m.states();
    let k = m.symbols();
    let mut stats = EStepStats {
        initial_acc: vec![0.0; s],
        trans_num: vec![vec![0.0; s]; s],
        trans_den: vec![0.0; s],
        emis_num: vec![vec![0.0; k]; s],
        emis_den: vec![0.0; s],
        total_ll: 0.0,
    };
    for obs in data {
        let (alphas, scales, ll) = forward_scaled(&m.initial, &m.transition, &m.emission, obs);
        let Some(ll) = ll else {
            return Err(Error::ZeroProbabilityData);
        };
        stats.total_ll += ll;
        let t_len = obs.len();
        // scaled backward pass sharing the forward scale factors
        let mut betas = vec![vec![0.0; s]; t_len];
        betas[t_len - 1] = vec![1.0; s];
        for t in (0..t_len - 1).rev() {
            for i in 0..s {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += m.transition[[i, j]] * m.emission[[j, obs[t + 1]]] * betas[t + 1][j];
                }
                betas[t][i] = acc / scales[t + 1];
            }
        }
        for t in 0..t_len {
            let mut gamma: Vec<f64> = (0..s).map(|i| alphas[t][i] * betas[t][i]).collect();
            let gsum: f64 = gamma.iter().sum();
            if gsum > 0.0 {
                for g in &mut gamma {
                    *g /= gsum;
                }
            }
            if t == 0 {
                for i in 0..s {
                    stats.initial_acc[i] += gamma[i];
                }
            }
            for i in 0..s {
                stats.emis_num[i][obs[t]] += gamma[i];
                stats.emis_den[i] += gamma[i];
                if t < t_len - 1 {
                    stats.trans_den[i] += gamma[i];
                }
            }
            if t < t_len - 1 {
                let mut xi = vec![vec![0.0; s]; s];
                let mut xsum = 0.0;
                for (i, xi_row) in xi.iter_mut().enumerate() {
                    for (j, x) in xi_row.iter_mut().enumerate() {
                        *x = alphas[t][i]
                            * m.transition[[i, j]]
                            * m.emission[[j, obs[t + 1]]]
                            * betas[t + 1][j]
                            / scales[t + 1];
                        xsum += *x;
                    }
                }
                if xsum > 0.0 {
                    for (i, xi_row) in xi.iter().enumerate() {
                        for (j, &x) in xi_row.iter().enumerate() {
                            stats.trans_num[i][j] += x / xsum;
                        }
                    }
                }
            }
        }
    }
    Ok(stats)
}

fn normalize_row(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
}

fn m_step(m: &DiscreteHmm, stats: &EStepStats, n_seqs: usize, smoothing: f64) -> Result<DiscreteHmm> {
    let s = m.states();
    let k = m.symbols();
    let mut initial: Vec<f64> = stats.initial_acc.iter().map(|&v| v / n_seqs as f64).collect();
    normalize_row(&mut initial);
    let mut transition = Vec::with_capacity(s);
    for i in 0..s {
        let mut row: Vec<f64> = if stats.trans_den[i] > 1e-300 {
            stats.trans_num[i].iter().map(|&v| v / stats.trans_den[i]).collect()
        } else {
            // state never occupied before the last step: keep its old row
            m.transition.row(i).to_vec()
        };
        normalize_row(&mut row);
        transition.push(row);
    }
    let mut emission = Vec::with_capacity(s);
    for i in 0..s {
        let mut row: Vec<f64> = if stats.emis_den[i] > 1e-300 {
            stats.emis_num[i].iter().map(|&v| v / stats.emis_den[i]).collect()
        } else {
            m.emission.row(i).to_vec()
        };
        if smoothing > 0.0 {
            for x in &mut row {
                *x += smoothing;
            }
        }
        normalize_row(&mut row);
        emission.push(row);
    }
    DiscreteHmm::new(
        Array1::from_vec(initial),
        Array2::from_shape_vec((s, s), transition.into_iter().flatten().collect()).expect("shape"),
        Array2::from_shape_vec((s, k), emission.into_iter().flatten().collect()).expect("shape"),
        m.label,
    )
}

/// Multi-sequence Baum-Welch with per-timestep scaling.
///
/// Iterates expectation and maximization until the total log-likelihood
/// improves by less than `tolerance` or the iteration budget is spent.
/// With smoothing disabled the recorded likelihoods are nondecreasing.
pub fn baum_welch(
    init: &DiscreteHmm,
    data: &[SymbolSequence],
    cfg: &BaumWelchConfig,
) -> Result<BaumWelchOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyObservation);
    }
    for obs in data {
        check_symbols(obs, init.symbols())?;
    }
    let mut model = init.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0usize;
    for it in 0..cfg.max_iterations {
        let stats = e_step(&model, data)?;
        history.push(stats.total_ll);
        if it > 0 && stats.total_ll - history[it - 1] < cfg.tolerance {
            converged = true;
            break;
        }
        model = m_step(&model, &stats, data.len(), cfg.smoothing)?;
        iterations = it + 1;
    }
    if !converged {
        // record the likelihood of the final parameters
        let stats = e_step(&model, data)?;
        history.push(stats.total_ll);
    }
    Ok(BaumWelchOutcome {
        model,
        log_likelihoods: history,
        iterations,
        converged,
    })
}

/// Full training configuration for one action model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmmTrainConfig {
    pub states: usize,
    /// Independent seeded initializations; the best final likelihood wins.
    pub restarts: usize,
    pub smoothing: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Restrict transitions to `j >= i` (left-to-right chain) instead of
    /// the default fully connected topology.
    pub left_to_right: bool,
}

impl Default for HmmTrainConfig {
    fn default() -> Self {
        Self {
            states: 3,
            restarts: 3,
            smoothing: 1e-6,
            max_iterations: 100,
            tolerance: 1e-4,
            left_to_right: false,
        }
    }
}

impl HmmTrainConfig {
    pub fn baum_welch(&self) -> BaumWelchConfig {
        BaumWelchConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            smoothing: self.smoothing,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b)
}

/// A flat Dirichlet draw: normalized unit exponentials.
fn dirichlet_flat(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| -(rng.random_range(0.0f64..1.0).max(1e-12)).ln())
        .collect();
    normalize_row(&mut v);
    v
}

fn random_init(
    rng: &mut impl Rng,
    states: usize,
    symbols: usize,
    data: &[SymbolSequence],
    left_to_right: bool,
    label: u32,
) -> Result<DiscreteHmm> {
    let initial = if left_to_right {
        let mut v = vec![0.0; states];
        v[0] = 1.0;
        v
    } else {
        dirichlet_flat(rng, states)
    };
    let mut transition = Vec::with_capacity(states);
    for i in 0..states {
        let row = if left_to_right {
            let free = states - i;
            let mut row = vec![0.0; states];
            row[i..].copy_from_slice(&dirichlet_flat(rng, free));
            row
        } else {
            dirichlet_flat(rng, states)
        };
        transition.push(row);
        let _ = i;
    }
    // symbol frequencies of the training data, blended with Dirichlet noise
    let mut freq = vec![0.0f64; symbols];
    let mut total = 0.0;
    for obs in data {
        for &o in obs {
            freq[o] += 1.0;
            total += 1.0;
        }
    }
    if total > 0.0 {
        for f in &mut freq {
            *f /= total;
        }
    }
    let mut emission = Vec::with_capacity(states);
    for _ in 0..states {
        let noise = dirichlet_flat(rng, symbols);
        let mut row: Vec<f64> = freq
            .iter()
            .zip(&noise)
            .map(|(f, n)| 0.5 * f + 0.5 * n)
            .collect();
        normalize_row(&mut row);
        emission.push(row);
    }
    DiscreteHmm::new(
        Array1::from_vec(initial),
        Array2::from_shape_vec((states, states), transition.into_iter().flatten().collect())
            .expect("shape"),
        Array2::from_shape_vec((states, symbols), emission.into_iter().flatten().collect())
            .expect("shape"),
        label,
    )
}

/// The winning run of a multi-restart training plus the final likelihood
/// every restart reached.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub best: BaumWelchOutcome,
    pub winner: usize,
    pub finals: Vec<f64>,
}

/// Train one action model: several seeded random initializations, a
/// Baum-Welch run each, best final likelihood kept (first on ties).
pub fn train_with_restarts(
    label: u32,
    data: &[SymbolSequence],
    alphabet: usize,
    cfg: &HmmTrainConfig,
    seed: u64,
) -> Result<RestartOutcome> {
    if cfg.states == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidModel(
            "state count and restart count must be at least 1".into(),
        ));
    }
    let mut best: Option<(usize, BaumWelchOutcome)> = None;
    let mut finals = Vec::with_capacity(cfg.restarts);
    for restart in 0..cfg.restarts {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, label as u64, restart as u64));
        let init = random_init(&mut rng, cfg.states, alphabet, data, cfg.left_to_right, label)?;
        let outcome = baum_welch(&init, data, &cfg.baum_welch())?;
        finals.push(outcome.final_log_likelihood());
        let better = match &best {
            None => true,
            Some((_, b)) => outcome.final_log_likelihood() > b.final_log_likelihood(),
        };
        if better {
            best = Some((restart, outcome));
        }
    }
    let (winner, best) = best.expect("at least one restart");
    Ok(RestartOutcome {
        best,
        winner,
        finals,
    })
}

/// Result of maximum-likelihood classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Label(u32),
    /// Every model assigned probability zero; no label is defensible.
    Rejected,
}

/// Label of the model with the highest forward log-likelihood, lowest
/// label on ties, along with every model's score.
pub fn classify(models: &[DiscreteHmm], obs: &[usize]) -> Result<(Classification, Vec<(u32, f64)>)> {
    let first = models.first().ok_or(Error::NoModels)?;
    for m in models {
        if m.symbols() != first.symbols() {
            return Err(Error::AlphabetMismatch(first.symbols(), m.symbols()));
        }
    }
    check_symbols(obs, first.symbols())?;
    let scores: Vec<(u32, f64)> = models
        .iter()
        .map(|m| (m.label(), forward_ll_tables(&m.initial, &m.transition, &m.emission, obs)))
        .collect();
    let mut best: Option<(u32, f64)> = None;
    for &(label, ll) in &scores {
        if ll == f64::NEG_INFINITY {
            continue;
        }
        best = match best {
            None => Some((label, ll)),
            Some((bl, bll)) => {
                if ll > bll || (ll == bll && label < bl) {
                    Some((label, ll))
                } else {
                    Some((bl, bll))
                }
            }
        };
    }
    match best {
        Some((label, _)) => Ok((Classification::Label(label), scores)),
        None => Ok((Classification::Rejected, scores)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn uniform_model(states: usize, symbols: usize, label: u32) -> DiscreteHmm {
        DiscreteHmm::new(
            Array1::from_elem(states, 1.0 / states as f64),
            Array2::from_elem((states, states), 1.0 / states as f64),
            Array2::from_elem((states, symbols), 1.0 / symbols as f64),
            label,
        )
        .unwrap()
    }

    fn seeded_model(states: usize, symbols: usize, seed: u64) -> DiscreteHmm {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let initial = dirichlet_flat(&mut rng, states);
        let transition: Vec<f64> = (0..states)
            .flat_map(|_| dirichlet_flat(&mut rng, states))
            .collect();
        let emission: Vec<f64> = (0..states)
            .flat_map(|_| dirichlet_flat(&mut rng, symbols))
            .collect();
        DiscreteHmm::new(
            Array1::from_vec(initial),
            Array2::from_shape_vec((states, states), transition).unwrap(),
            Array2::from_shape_vec((states, symbols), emission).unwrap(),
            0,
        )
        .unwrap()
    }

    /// Unscaled likelihood by summing over every hidden state path.
    fn brute_force_likelihood(m: &DiscreteHmm, obs: &[usize]) -> f64 {
        let s = m.states();
        let t_len = obs.len();
        let mut total = 0.0;
        let paths = (s as u64).pow(t_len as u32);
        for code in 0..paths {
            let mut c = code;
            let mut path = Vec::with_capacity(t_len);
            for _ in 0..t_len {
                path.push((c % s as u64) as usize);
                c /= s as u64;
            }
            let mut p = m.initial()[path[0]] * m.emission()[[path[0], obs[0]]];
            for t in 1..t_len {
                p *= m.transition()[[path[t - 1], path[t]]] * m.emission()[[path[t], obs[t]]];
            }
            total += p;
        }
        total
    }

    #[test]
    fn forward_independent_emissions() {
        let m = DiscreteHmm::new(
            array![1.0],
            array![[1.0]],
            array![[0.5, 0.5]],
            0,
        )
        .unwrap();
        let ll = forward_log_likelihood(&m, &[0, 0, 0]).unwrap();
        assert!((ll - 0.125f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn impossible_symbol_gives_neg_infinity() {
        let m = DiscreteHmm::new(
            array![0.5, 0.5],
            array![[0.5, 0.5], [0.5, 0.5]],
            array![[1.0, 0.0], [1.0, 0.0]],
            0,
        )
        .unwrap();
        let ll = forward_log_likelihood(&m, &[0, 1, 0]).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn forward_matches_brute_force() {
        let m = seeded_model(2, 3, 42);
        let obs = vec![0, 2, 1, 1, 0, 2];
        let ll = forward_log_likelihood(&m, &obs).unwrap();
        let expect = brute_force_likelihood(&m, &obs).ln();
        assert!((ll - expect).abs() < 1e-10, "{ll} vs {expect}");
    }

    #[test]
    fn forward_invariant_under_state_permutation() {
        let m = seeded_model(3, 4, 7);
        // permute states (0,1,2) -> (2,0,1)
        let perm = [2usize, 0, 1];
        let s = 3;
        let mut initial = vec![0.0; s];
        let mut transition = vec![0.0; s * s];
        let mut emission = vec![0.0; s * 4];
        for i in 0..s {
            initial[perm[i]] = m.initial()[i];
            for j in 0..s {
                transition[perm[i] * s + perm[j]] = m.transition()[[i, j]];
            }
            for k in 0..4 {
                emission[perm[i] * 4 + k] = m.emission()[[i, k]];
            }
        }
        let pm = DiscreteHmm::new(
            Array1::from_vec(initial),
            Array2::from_shape_vec((s, s), transition).unwrap(),
            Array2::from_shape_vec((s, 4), emission).unwrap(),
            0,
        )
        .unwrap();
        let obs = vec![1, 3, 0, 2, 2, 1, 0];
        let a = forward_log_likelihood(&m, &obs).unwrap();
        let b = forward_log_likelihood(&pm, &obs).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn scaling_survives_long_sequences() {
        let m = seeded_model(3, 4, 21);
        let obs: Vec<usize> = (0..1000).map(|i| i % 4).collect();
        let ll = forward_log_likelihood(&m, &obs).unwrap();
        assert!(ll.is_finite());
        assert!(ll < 0.0);
    }

    #[test]
    fn viterbi_forced_chain() {
        // deterministic left-to-right chain with one-hot emissions
        let m = DiscreteHmm::new(
            array![1.0, 0.0, 0.0],
            array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]],
            array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            0,
        )
        .unwrap();
        let (path, ll) = viterbi(&m, &[0, 1, 2, 2]).unwrap();
        assert_eq!(path, vec![0, 1, 2, 2]);
        assert!((ll - 0.0).abs() < 1e-12);
    }

    #[test]
    fn viterbi_single_state_equals_forward() {
        let m = DiscreteHmm::new(array![1.0], array![[1.0]], array![[0.25, 0.75]], 0).unwrap();
        let obs = vec![1, 0, 1, 1];
        let (path, ll) = viterbi(&m, &obs).unwrap();
        assert_eq!(path, vec![0; 4]);
        let fll = forward_log_likelihood(&m, &obs).unwrap();
        assert!((ll - fll).abs() < 1e-12);
    }

    #[test]
    fn viterbi_matches_brute_force() {
        let m = seeded_model(3, 3, 99);
        let obs = vec![0, 2, 1, 2, 0];
        let (_, ll) = viterbi(&m, &obs).unwrap();
        // brute force max over all 3^5 paths
        let s = 3;
        let mut best = f64::NEG_INFINITY;
        for code in 0..s_pow(s, obs.len()) {
            let path = decode_path(code, s, obs.len());
            let mut p = (m.initial()[path[0]] * m.emission()[[path[0], obs[0]]]).ln();
            for t in 1..obs.len() {
                p += (m.transition()[[path[t - 1], path[t]]] * m.emission()[[path[t], obs[t]]])
                    .ln();
            }
            if p > best {
                best = p;
            }
        }
        assert!((ll - best).abs() < 1e-10);
    }

    fn s_pow(s: usize, n: usize) -> u64 {
        (s as u64).pow(n as u32)
    }

    fn decode_path(mut code: u64, s: usize, len: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(len);
        for _ in 0..len {
            path.push((code % s as u64) as usize);
            code /= s as u64;
        }
        path
    }

    #[test]
    fn viterbi_impossible_path_is_structural_error() {
        let m = DiscreteHmm::new(
            array![1.0, 0.0],
            array![[1.0, 0.0], [0.0, 1.0]],
            array![[1.0, 0.0], [0.0, 1.0]],
            0,
        )
        .unwrap();
        // symbol 1 can never be emitted from the reachable state
        let err = viterbi(&m, &[0, 1]).unwrap_err();
        assert!(matches!(err, Error::ImpossiblePath));
    }

    #[test]
    fn viterbi_never_beats_forward() {
        for seed in 0..20 {
            let m = seeded_model(3, 4, seed);
            let obs = vec![(seed as usize) % 4, 1, 3, 0, 2];
            let (_, vll) = viterbi(&m, &obs).unwrap();
            let fll = forward_log_likelihood(&m, &obs).unwrap();
            assert!(vll <= fll + 1e-12, "seed {seed}: {vll} > {fll}");
        }
    }

    #[test]
    fn baum_welch_one_state_one_iteration() {
        let init = DiscreteHmm::new(array![1.0], array![[1.0]], array![[0.5, 0.5]], 0).unwrap();
        let cfg = BaumWelchConfig {
            max_iterations: 1,
            tolerance: 1e-12,
            smoothing: 0.0,
        };
        let out = baum_welch(&init, &[vec![0, 0, 0]], &cfg).unwrap();
        assert!((out.model.emission()[[0, 0]] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn baum_welch_fixed_point_is_stable() {
        // emission already matches the empirical distribution; single
        // state, so transitions and initial are forced
        let init = DiscreteHmm::new(array![1.0], array![[1.0]], array![[0.5, 0.5]], 0).unwrap();
        let cfg = BaumWelchConfig {
            max_iterations: 5,
            tolerance: -1.0, // never early-stop on tolerance
            smoothing: 0.0,
        };
        let out = baum_welch(&init, &[vec![0, 1, 0, 1]], &cfg).unwrap();
        assert!((out.model.emission()[[0, 0]] - 0.5).abs() < 1e-9);
        assert!((out.model.emission()[[0, 1]] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn baum_welch_likelihood_nondecreasing() {
        let init = seeded_model(3, 4, 5);
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let truth = seeded_model(3, 4, 1234);
        let data: Vec<SymbolSequence> = (0..20).map(|_| truth.sample(15, &mut rng)).collect();
        let cfg = BaumWelchConfig {
            max_iterations: 50,
            tolerance: 1e-7,
            smoothing: 0.0,
        };
        let out = baum_welch(&init, &data, &cfg).unwrap();
        for w in out.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "{:?}", out.log_likelihoods);
        }
    }

    #[test]
    fn baum_welch_rejects_zero_probability_data() {
        let init = DiscreteHmm::new(array![1.0], array![[1.0]], array![[1.0, 0.0]], 0).unwrap();
        let cfg = BaumWelchConfig {
            smoothing: 0.0,
            ..BaumWelchConfig::default()
        };
        let err = baum_welch(&init, &[vec![0, 1]], &cfg).unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilityData));
    }

    #[test]
    fn baum_welch_checks_symbol_range() {
        let init = uniform_model(2, 3, 0);
        let err = baum_welch(&init, &[vec![0, 5]], &BaumWelchConfig::default()).unwrap_err();
        assert!(matches!(err, Error::SymbolOutOfRange { symbol: 5, alphabet: 3 }));
    }

    #[test]
    fn classify_single_model() {
        let m = uniform_model(2, 2, 9);
        let (c, scores) = classify(&[m], &[0, 1]).unwrap();
        assert_eq!(c, Classification::Label(9));
        assert_eq!(scores.len(), 1);
    }

    #[test]
    fn classify_prefers_nonzero_probability() {
        let a = DiscreteHmm::new(array![1.0], array![[1.0]], array![[1.0, 0.0]], 0).unwrap();
        let b = DiscreteHmm::new(array![1.0], array![[1.0]], array![[0.0, 1.0]], 1).unwrap();
        let (c, scores) = classify(&[a, b], &[0]).unwrap();
        assert_eq!(c, Classification::Label(0));
        assert_eq!(scores[1].1, f64::NEG_INFINITY);
    }

    #[test]
    fn classify_rejects_when_all_impossible() {
        let a = DiscreteHmm::new(array![1.0], array![[1.0]], array![[1.0, 0.0]], 0).unwrap();
        let b = DiscreteHmm::new(array![1.0], array![[1.0]], array![[1.0, 0.0]], 1).unwrap();
        let (c, _) = classify(&[a, b], &[1]).unwrap();
        assert_eq!(c, Classification::Rejected);
    }

    #[test]
    fn classify_separates_well_separated_generators() {
        // three generators, each biased toward its own pair of symbols
        let biased = |label: u32, favored: [usize; 2]| -> DiscreteHmm {
            let mut emission = Array2::from_elem((2, 6), 0.02);
            for i in 0..2 {
                emission[[i, favored[0]]] = 0.5;
                emission[[i, favored[1]]] = 0.42;
            }
            DiscreteHmm::new(
                array![0.6, 0.4],
                array![[0.7, 0.3], [0.4, 0.6]],
                emission,
                label,
            )
            .unwrap()
        };
        let models = [
            biased(0, [0, 1]),
            biased(1, [2, 3]),
            biased(2, [4, 5]),
        ];
        let mut rng = ChaCha20Rng::seed_from_u64(606);
        let mut correct = 0usize;
        let mut total = 0usize;
        for truth in &models {
            for _ in 0..50 {
                let obs = truth.sample(25, &mut rng);
                let (c, _) = classify(&models, &obs).unwrap();
                if c == Classification::Label(truth.label()) {
                    correct += 1;
                }
                total += 1;
            }
        }
        assert!(correct * 100 >= total * 95, "{correct}/{total}");
    }

    #[test]
    fn train_with_restarts_recovers_generator_quality() {
        let truth = seeded_model(2, 3, 31);
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let train: Vec<SymbolSequence> = (0..1000).map(|_| truth.sample(20, &mut rng)).collect();
        let held: Vec<SymbolSequence> = (0..200).map(|_| truth.sample(20, &mut rng)).collect();
        let cfg = HmmTrainConfig {
            states: 2,
            restarts: 3,
            smoothing: 1e-6,
            max_iterations: 100,
            tolerance: 1e-5,
            left_to_right: false,
        };
        let out = train_with_restarts(0, &train, 3, &cfg, 4242).unwrap();
        assert_eq!(out.finals.len(), 3);
        let avg = |m: &DiscreteHmm| -> f64 {
            held.iter()
                .map(|o| forward_log_likelihood(m, o).unwrap() / o.len() as f64)
                .sum::<f64>()
                / held.len() as f64
        };
        let fitted = avg(&out.best.model);
        let generator = avg(&truth);
        assert!(
            (fitted - generator).abs() < 0.05,
            "per-symbol ll {fitted} vs generator {generator}"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let truth = seeded_model(2, 3, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let data: Vec<SymbolSequence> = (0..10).map(|_| truth.sample(12, &mut rng)).collect();
        let cfg = HmmTrainConfig::default();
        let a = train_with_restarts(1, &data, 3, &cfg, 100).unwrap();
        let b = train_with_restarts(1, &data, 3, &cfg, 100).unwrap();
        assert_eq!(a.best.model, b.best.model);
        assert_eq!(a.best.log_likelihoods, b.best.log_likelihoods);
        assert_eq!(a.finals, b.finals);
    }

    #[test]
    fn left_to_right_mask_is_respected() {
        let truth = seeded_model(2, 3, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let data: Vec<SymbolSequence> = (0..10).map(|_| truth.sample(12, &mut rng)).collect();
        let cfg = HmmTrainConfig {
            left_to_right: true,
            states: 3,
            ..HmmTrainConfig::default()
        };
        let out = train_with_restarts(0, &data, 3, &cfg, 5).unwrap();
        let model = &out.best.model;
        for i in 0..3 {
            for j in 0..i {
                assert_eq!(model.transition()[[i, j]], 0.0);
            }
        }
        assert_eq!(model.initial()[0], 1.0);
    }

    #[test]
    fn model_validation_rejects_bad_rows() {
        let err = DiscreteHmm::new(
            array![0.6, 0.6],
            array![[0.5, 0.5], [0.5, 0.5]],
            array![[1.0, 0.0], [0.0, 1.0]],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }
}
