use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<O> {
    pub obs: O,
    pub action: usize,
    pub reward: f64,
    pub next_obs: O,
    /// True terminal state; time-limit truncation is not terminal.
    pub done: bool,
}

/// Fixed-capacity ring of transitions with uniform sampling (with
/// replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer<O> {
    capacity: usize,
    items: Vec<Transition<O>>,
    next: usize,
}

impl<O> ReplayBuffer<O> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition<O>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.random_range(0..self.items.len())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition<O>> {
        self.sample_indices(n, rng)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }

    pub fn get(&self, i: usize) -> Option<&Transition<O>> {
        self.items.get(i)
    }
}
