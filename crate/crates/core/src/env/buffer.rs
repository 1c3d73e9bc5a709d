/// Ring of `d` accumulators holding reward mass not yet delivered.
///
/// Slot `s` (relative to the current time) holds the sum of every component
/// due exactly `s` steps from now.
#[derive(Clone, Debug)]
pub struct PendingBuffer {
    slots: Vec<f64>,
    cursor: usize,
    head: usize,
}

impl PendingBuffer {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1, "delay span must be at least 1");
        Self {
            slots: vec![0.0; d],
            cursor: 0,
            head: 0,
        }
    }

    pub fn span(&self) -> usize {
        self.slots.len()
    }

    /// Time index of slot 0.
    pub fn head(&self) -> usize {
        self.head
    }

    /// Mass due at `head + offset`.
    pub fn due_at(&self, offset: usize) -> f64 {
        self.slots[(self.cursor + offset) % self.slots.len()]
    }

    /// Adds `components[s]` to the slot due at `head + s`.
    pub fn schedule(&mut self, components: &[f64]) {
        debug_assert!(components.len() <= self.slots.len());
        let d = self.slots.len();
        for (s, &c) in components.iter().enumerate() {
            debug_assert!(c >= 0.0);
            self.slots[(self.cursor + s) % d] += c;
        }
    }

    /// Removes and returns the mass due now, then advances one step.
    pub fn deliver(&mut self) -> f64 {
        let x = std::mem::take(&mut self.slots[self.cursor]);
        self.cursor = (self.cursor + 1) % self.slots.len();
        self.head += 1;
        x
    }

    /// Mass still buffered.
    pub fn residual(&self) -> f64 {
        self.slots.iter().sum()
    }
}
