//! Pink noise by Paul Kellet's refined filter bank.

use rand::Rng;
use rand_distr::StandardNormal;

const POLES: [f64; 6] = [0.99886, 0.99332, 0.96900, 0.86650, 0.55000, -0.7616];
const GAINS: [f64; 6] = [0.0555179, 0.0750759, 0.1538520, 0.3104856, 0.5329522, -0.0168980];
const DIRECT: f64 = 0.5362;
const DELAYED: f64 = 0.115926;

/// Samples discarded before output. The slowest pole still carries a small
/// start-up deficit, which has decayed before the end of the rest phase.
pub const BURN_IN: usize = 2000;

#[derive(Debug, Clone, Default)]
pub struct Kellet {
    state: [f64; 6],
    prev: f64,
}

impl Kellet {
    pub fn step(&mut self, white: f64) -> f64 {
        let mut out = DIRECT * white + DELAYED * self.prev;
        for ((b, p), g) in self.state.iter_mut().zip(POLES).zip(GAINS) {
            *b = p * *b + g * white;
            out += *b;
        }
        self.prev = white;
        out
    }
}

/// Stationary output standard deviation for unit-variance white input,
/// from the energy of the impulse response.
pub fn kellet_std() -> f64 {
    let mut k = Kellet::default();
    let mut energy = 0.0;
    let mut x = 1.0;
    for _ in 0..200_000 {
        let y = k.step(x);
        energy += y * y;
        x = 0.0;
    }
    energy.sqrt()
}

/// Unit-variance pink sequence of length `n`.
pub fn pink<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    let mut k = Kellet::default();
    for _ in 0..BURN_IN {
        k.step(rng.sample(StandardNormal));
    }
    (0..n).map(|_| k.step(rng.sample(StandardNormal)) / scale).collect()
}
