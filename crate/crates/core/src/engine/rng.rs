use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams for one run. Each consumer of randomness draws
/// from its own stream so that, for example, changing the prediction accuracy
/// leaves producer trajectories untouched.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub mobility: ChaCha8Rng,
    pub accuracy: ChaCha8Rng,
    pub workload: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |n: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(n);
            r
        };
        RngStreams { mobility: stream(1), accuracy: stream(2), workload: stream(3) }
    }
}
