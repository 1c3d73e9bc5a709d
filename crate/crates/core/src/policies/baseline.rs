use rand::Rng;

use crate::env::AnonymousFeedback;
use crate::error::Result;
use crate::rng::StreamRng;

/// Picks an arm uniformly at random every step.
#[derive(Clone, Debug)]
pub struct UniformRandom {
    rng: StreamRng,
}

impl UniformRandom {
    pub fn new(rng: StreamRng) -> Self {
        Self { rng }
    }

    pub fn run(&mut self, feedback: &mut dyn AnonymousFeedback) -> Result<()> {
        let k = feedback.num_arms();
        while feedback.remaining() > 0 {
            let arm = self.rng.random_range(0..k);
            feedback.pull(arm)?;
        }
        Ok(())
    }
}
