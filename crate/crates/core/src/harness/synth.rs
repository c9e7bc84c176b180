use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Label};
use crate::{Error, Result, Scalar};

/// Two unit-variance Gaussian classes whose means lie `separation` apart in
/// dimension-normalized distance (Euclidean distance over `sqrt(d)`): every
/// coordinate of the class-1 mean is offset by `separation` standard
/// deviations.
///
/// Labels alternate 0, 1, 0, ... (equal priors); afterwards
/// `round(noise_rate * n)` labels chosen at random are flipped.
pub fn generate_synthetic<T: Scalar>(
    n: usize,
    d: usize,
    separation: f64,
    noise_rate: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidParameter(format!("need n >= 2 and d >= 1, got n={n}, d={d}")));
    }
    if !(0.0..1.0).contains(&noise_rate) {
        return Err(Error::InvalidParameter(format!("noise rate {noise_rate} outside [0, 1)")));
    }
    if !separation.is_finite() {
        return Err(Error::InvalidParameter("separation must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = (i % 2) as u32;
        let shift = if class == 1 { separation } else { 0.0 };
        for _ in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            features.push(T::from_f64(z + shift).expect("finite sample fits the scalar type"));
        }
        labels.push(Label(class));
    }
    let flips = (noise_rate * n as f64).round() as usize;
    for i in sample(&mut rng, n, flips) {
        labels[i] = Label(1 - labels[i].0);
    }
    Dataset::new(features, d, labels)?.with_class_count(2)
}
