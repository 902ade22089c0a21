//! One-hidden-layer multi-headed network with Master-User gradient routing.
//!
//! All heads read the same tanh feature vector in the forward pass. In the
//! backward pass each hidden feature's input weights receive gradient only
//! from the task that owns the feature; contributions from every other head
//! are dropped exactly. Head `0` is always the main task head.
//!
//! Shape mismatches are programmer error and panic via `assert!`; recoverable
//! conditions (zero dimensions, non-finite gradients) return [`NetError`].

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{sqrt, tanh};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetError {
    /// A requested dimension was zero.
    ZeroDimension,
    /// A gradient contained NaN or infinity, which signals divergence.
    NonFiniteGradient,
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::ZeroDimension => write!(f, "network dimensions must be >= 1"),
            NetError::NonFiniteGradient => write!(f, "non-finite gradient (divergence)"),
        }
    }
}

/// Output layer of a single task head.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Head {
    /// Row-major, shape `(hidden_dim, n_actions)`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Weights and biases of the shared hidden layer plus one output head per task.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NetworkParams {
    pub obs_dim: usize,
    pub hidden_dim: usize,
    pub n_actions: usize,
    /// Row `k` holds the input weights feeding hidden feature `k`;
    /// shape `(hidden_dim, obs_dim)`.
    pub input_weights: Vec<Vec<f64>>,
    pub input_bias: Vec<f64>,
    /// `heads[0]` is the main task head.
    pub heads: Vec<Head>,
}

/// Assignment of each hidden feature to exactly one owner task.
///
/// Owner `0` is the main task; owners `1..=n` are auxiliary tasks.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeaturePartition {
    pub owner: Vec<usize>,
}

impl FeaturePartition {
    /// Every feature owned by the main task.
    pub fn all_main(hidden_dim: usize) -> Self {
        FeaturePartition { owner: vec![0; hidden_dim] }
    }

    /// Contiguous equal split: task `i` owns features
    /// `[i*floor(h/(n+1)), (i+1)*floor(h/(n+1)))` and the main task absorbs
    /// the remainder at the top.
    pub fn equal_split(hidden_dim: usize, n_aux: usize) -> Self {
        let block = hidden_dim / (n_aux + 1);
        let owner = (0..hidden_dim)
            .map(|k| {
                let i = if block == 0 { 0 } else { k / block };
                if i <= n_aux { i } else { 0 }
            })
            .collect();
        FeaturePartition { owner }
    }

    /// Indices of the features owned by `task`.
    pub fn owned_by(&self, task: usize) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, &o)| o == task)
            .map(|(k, _)| k)
            .collect()
    }
}

/// RMSProp running mean of squared gradients, mirroring [`NetworkParams`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerState {
    pub sq_input_weights: Vec<Vec<f64>>,
    pub sq_input_bias: Vec<f64>,
    pub sq_heads: Vec<Head>,
    pub decay: f64,
    pub guard: f64,
}

impl OptimizerState {
    pub fn new(params: &NetworkParams, decay: f64, guard: f64) -> Self {
        OptimizerState {
            sq_input_weights: vec![vec![0.0; params.obs_dim]; params.hidden_dim],
            sq_input_bias: vec![0.0; params.hidden_dim],
            sq_heads: params
                .heads
                .iter()
                .map(|_| Head {
                    weights: vec![vec![0.0; params.n_actions]; params.hidden_dim],
                    bias: vec![0.0; params.n_actions],
                })
                .collect(),
            decay,
            guard,
        }
    }
}

/// Gradient of a scalar loss with respect to every parameter.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub input_weights: Vec<Vec<f64>>,
    pub input_bias: Vec<f64>,
    pub heads: Vec<Head>,
}

impl Gradients {
    pub fn zeros(params: &NetworkParams) -> Self {
        Gradients {
            input_weights: vec![vec![0.0; params.obs_dim]; params.hidden_dim],
            input_bias: vec![0.0; params.hidden_dim],
            heads: params
                .heads
                .iter()
                .map(|_| Head {
                    weights: vec![vec![0.0; params.n_actions]; params.hidden_dim],
                    bias: vec![0.0; params.n_actions],
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        self.input_weights.iter().all(|r| finite(r))
            && finite(&self.input_bias)
            && self.heads.iter().all(|h| {
                h.weights.iter().all(|r| finite(r)) && finite(&h.bias)
            })
    }
}

fn init_weight<R: Rng + ?Sized>(fan_in: usize, rng: &mut R) -> f64 {
    let bound = 1.0 / sqrt(fan_in as f64);
    rng.random_range(-bound..bound)
}

impl NetworkParams {
    /// Random initialization: weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in))`,
    /// biases zero. `n_heads` counts the main head.
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden_dim: usize,
        n_actions: usize,
        n_heads: usize,
        rng: &mut R,
    ) -> Result<Self, NetError> {
        if obs_dim == 0 || hidden_dim == 0 || n_actions == 0 || n_heads == 0 {
            return Err(NetError::ZeroDimension);
        }
        let input_weights = (0..hidden_dim)
            .map(|_| (0..obs_dim).map(|_| init_weight(obs_dim, rng)).collect())
            .collect();
        let heads = (0..n_heads)
            .map(|_| Head {
                weights: (0..hidden_dim)
                    .map(|_| (0..n_actions).map(|_| init_weight(hidden_dim, rng)).collect())
                    .collect(),
                bias: vec![0.0; n_actions],
            })
            .collect();
        Ok(NetworkParams {
            obs_dim,
            hidden_dim,
            n_actions,
            input_weights,
            input_bias: vec![0.0; hidden_dim],
            heads,
        })
    }

    pub fn n_heads(&self) -> usize {
        self.heads.len()
    }

    /// Forward pass: `features = tanh(W_in obs + b)`, then every head's
    /// q-values from the same feature vector.
    pub fn forward(&self, obs: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        assert_eq!(obs.len(), self.obs_dim, "observation length mismatch");
        let features: Vec<f64> = (0..self.hidden_dim)
            .map(|k| {
                let row = &self.input_weights[k];
                let mut z = self.input_bias[k];
                // Observations are often one-hot; skipping zeros keeps the
                // gridworld forward pass cheap.
                for (j, &x) in obs.iter().enumerate() {
                    if x != 0.0 {
                        z += row[j] * x;
                    }
                }
                tanh(z)
            })
            .collect();
        let qs = self
            .heads
            .iter()
            .map(|head| {
                let mut q = head.bias.clone();
                for (k, &f) in features.iter().enumerate() {
                    if f != 0.0 {
                        for (a, qa) in q.iter_mut().enumerate() {
                            *qa += head.weights[k][a] * f;
                        }
                    }
                }
                q
            })
            .collect();
        (features, qs)
    }

    /// Backward pass with Master-User masking, accumulated into `grads`.
    ///
    /// Output-layer gradients for head `j` come from head `j`'s `dloss_dq`
    /// only. The input weights of feature `k` accumulate the contribution
    /// backpropagated from `partition.owner[k]` alone; every other head's
    /// contribution is exactly zero.
    pub fn backward_masked_into(
        &self,
        obs: &[f64],
        features: &[f64],
        dloss_dq: &[Vec<f64>],
        partition: &FeaturePartition,
        grads: &mut Gradients,
    ) {
        assert_eq!(obs.len(), self.obs_dim, "observation length mismatch");
        assert_eq!(features.len(), self.hidden_dim, "feature length mismatch");
        assert_eq!(dloss_dq.len(), self.heads.len(), "head count mismatch");
        assert_eq!(partition.owner.len(), self.hidden_dim, "partition length mismatch");

        for (h, dq) in dloss_dq.iter().enumerate() {
            assert_eq!(dq.len(), self.n_actions, "action count mismatch");
            let gh = &mut grads.heads[h];
            for (a, &d) in dq.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gh.bias[a] += d;
                for (k, &f) in features.iter().enumerate() {
                    gh.weights[k][a] += d * f;
                }
            }
        }
        for (k, &f) in features.iter().enumerate() {
            let owner = partition.owner[k];
            let dq = &dloss_dq[owner];
            let head = &self.heads[owner];
            let mut d_feature = 0.0;
            for (a, &d) in dq.iter().enumerate() {
                d_feature += d * head.weights[k][a];
            }
            if d_feature == 0.0 {
                continue;
            }
            let d_pre = d_feature * (1.0 - f * f);
            grads.input_bias[k] += d_pre;
            let row = &mut grads.input_weights[k];
            for (j, &x) in obs.iter().enumerate() {
                if x != 0.0 {
                    row[j] += d_pre * x;
                }
            }
        }
    }

    /// Convenience wrapper allocating fresh gradients.
    pub fn backward_masked(
        &self,
        obs: &[f64],
        features: &[f64],
        dloss_dq: &[Vec<f64>],
        partition: &FeaturePartition,
    ) -> Gradients {
        let mut grads = Gradients::zeros(self);
        self.backward_masked_into(obs, features, dloss_dq, partition, &mut grads);
        grads
    }

    /// Redraws the input weights and bias of the listed features and zeros
    /// their outgoing weights in every head, so replacement does not perturb
    /// main-head predictions. Optimizer accumulators for touched parameters
    /// reset to zero.
    pub fn reinit_features<R: Rng + ?Sized>(
        &mut self,
        opt: &mut OptimizerState,
        feature_indices: &[usize],
        rng: &mut R,
    ) {
        for &k in feature_indices {
            assert!(k < self.hidden_dim, "feature index out of bounds");
            for w in self.input_weights[k].iter_mut() {
                *w = init_weight(self.obs_dim, rng);
            }
            self.input_bias[k] = 0.0;
            for head in self.heads.iter_mut() {
                for w in head.weights[k].iter_mut() {
                    *w = 0.0;
                }
            }
            for s in opt.sq_input_weights[k].iter_mut() {
                *s = 0.0;
            }
            opt.sq_input_bias[k] = 0.0;
            for sq in opt.sq_heads.iter_mut() {
                for s in sq.weights[k].iter_mut() {
                    *s = 0.0;
                }
            }
        }
    }

    /// Deep copy for use as the target network.
    pub fn sync_target(&self) -> NetworkParams {
        self.clone()
    }
}

/// One RMSProp step:
/// `acc <- decay*acc + (1-decay)*g^2`, `p <- p - step_size*g/(sqrt(acc)+guard)`.
pub fn rmsprop_update(
    params: &mut NetworkParams,
    grads: &Gradients,
    opt: &mut OptimizerState,
    step_size: f64,
) -> Result<(), NetError> {
    if !grads.is_finite() {
        return Err(NetError::NonFiniteGradient);
    }
    let decay = opt.decay;
    let guard = opt.guard;
    let step = |p: &mut f64, g: f64, acc: &mut f64| {
        *acc = decay * *acc + (1.0 - decay) * g * g;
        *p -= step_size * g / (sqrt(*acc) + guard);
    };
    for k in 0..params.hidden_dim {
        for j in 0..params.obs_dim {
            step(
                &mut params.input_weights[k][j],
                grads.input_weights[k][j],
                &mut opt.sq_input_weights[k][j],
            );
        }
        step(&mut params.input_bias[k], grads.input_bias[k], &mut opt.sq_input_bias[k]);
    }
    for (h, head) in params.heads.iter_mut().enumerate() {
        let gh = &grads.heads[h];
        let sh = &mut opt.sq_heads[h];
        for k in 0..head.weights.len() {
            for a in 0..head.bias.len() {
                step(&mut head.weights[k][a], gh.weights[k][a], &mut sh.weights[k][a]);
            }
        }
        for a in 0..head.bias.len() {
            step(&mut head.bias[a], gh.bias[a], &mut sh.bias[a]);
        }
    }
    Ok(())
}
