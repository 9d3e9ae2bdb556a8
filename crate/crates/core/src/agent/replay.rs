use ndarray::Array2;
use rand::Rng;

/// One stored transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// True only for terminal states; time-limit ends keep bootstrapping.
    pub done: bool,
}

/// Sampled minibatch, one row per transition.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array2<f64>,
    pub next_obs: Array2<f64>,
    pub dones: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fixed-capacity ring of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    obs: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_obs: Vec<f64>,
    dones: Vec<bool>,
    /// Next write slot.
    head: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_dim,
            action_dim,
            obs: vec![0.0; capacity * obs_dim],
            actions: vec![0.0; capacity * action_dim],
            rewards: vec![0.0; capacity],
            next_obs: vec![0.0; capacity * obs_dim],
            dones: vec![false; capacity],
            head: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) {
        assert_eq!(t.obs.len(), self.obs_dim);
        assert_eq!(t.next_obs.len(), self.obs_dim);
        assert_eq!(t.action.len(), self.action_dim);
        let i = self.head;
        let (od, ad) = (self.obs_dim, self.action_dim);
        self.obs[i * od..(i + 1) * od].copy_from_slice(&t.obs);
        self.next_obs[i * od..(i + 1) * od].copy_from_slice(&t.next_obs);
        self.actions[i * ad..(i + 1) * ad].copy_from_slice(&t.action);
        self.rewards[i] = t.reward;
        self.dones[i] = t.done;
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Transition `i` counted from the oldest retained entry.
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        let start = if self.len == self.capacity { self.head } else { 0 };
        Some(self.slot((start + i) % self.capacity))
    }

    fn slot(&self, i: usize) -> Transition {
        let (od, ad) = (self.obs_dim, self.action_dim);
        Transition {
            obs: self.obs[i * od..(i + 1) * od].to_vec(),
            action: self.actions[i * ad..(i + 1) * ad].to_vec(),
            reward: self.rewards[i],
            next_obs: self.next_obs[i * od..(i + 1) * od].to_vec(),
            done: self.dones[i],
        }
    }

    /// Uniform sample with replacement. Returns `None` until `batch_size`
    /// transitions are stored.
    pub fn sample<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Option<Batch> {
        if self.len < batch_size || batch_size == 0 {
            return None;
        }
        let (od, ad) = (self.obs_dim, self.action_dim);
        let mut obs = Array2::zeros((batch_size, od));
        let mut next_obs = Array2::zeros((batch_size, od));
        let mut actions = Array2::zeros((batch_size, ad));
        let mut rewards = Array2::zeros((batch_size, 1));
        let mut dones = Array2::zeros((batch_size, 1));
        for row in 0..batch_size {
            let i = rng.random_range(0..self.len);
            for j in 0..od {
                obs[[row, j]] = self.obs[i * od + j];
                next_obs[[row, j]] = self.next_obs[i * od + j];
            }
            for j in 0..ad {
                actions[[row, j]] = self.actions[i * ad + j];
            }
            rewards[[row, 0]] = self.rewards[i];
            dones[[row, 0]] = if self.dones[i] { 1.0 } else { 0.0 };
        }
        Some(Batch {
            obs,
            actions,
            rewards,
            next_obs,
            dones,
        })
    }
}
