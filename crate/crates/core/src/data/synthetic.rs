use rand::Rng;
use rand_distr::StandardNormal;

use super::Matrix;
use crate::oracle::MixtureDensity;

/// Draws `n` i.i.d. samples: a component by weight, then a diagonal
/// Gaussian draw from it.
pub fn sample_mixture<R: Rng + ?Sized>(d: &MixtureDensity, n: usize, rng: &mut R) -> Matrix {
    let k = d.dim();
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..n {
        let c = d.pick_component(rng.random::<f64>());
        for (m, s) in c.mean.iter().zip(c.std_devs()) {
            let e: f64 = rng.sample(StandardNormal);
            data.push(m + s * e);
        }
    }
    Matrix::from_vec(n, k, data)
}
