//! Generator for the bundled observational example dataset: a confounded
//! treatment with a positive naive bias, mixed covariate kinds and two
//! rare binary columns that the analysis filter removes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use crate::error::Result;
use crate::penreg::expit;

pub const EXAMPLE_ROWS: usize = 5000;
pub const EXAMPLE_SEED: u64 = 20240611;
pub const EXAMPLE_ATE: f64 = 0.25;

pub const EXAMPLE_HEADER: [&str; 14] =
    ["y", "treat", "c1", "c2", "c3", "c4", "c5", "c6", "b1", "b2", "b3", "b4", "rare1", "rare2"];

/// Writes the example CSV. Continuous values carry six decimals.
pub fn write_example_csv<W: Write>(w: W, n: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EXAMPLE_HEADER)?;
    let prevalence = [0.3, 0.5, 0.4, 0.2];
    let rare = Bernoulli::new(0.002).expect("valid probability");
    for _ in 0..n {
        let c: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = prevalence.iter().map(|&q| f64::from(u8::from(rng.gen_bool(q)))).collect();
        let r: Vec<f64> = (0..2).map(|_| f64::from(u8::from(rare.sample(&mut rng)))).collect();
        let eta = -0.3 + 0.8 * c[0] + 0.8 * c[1] + 0.6 * b[0] + 0.5 * c[4];
        let z = f64::from(u8::from(rng.gen_bool(expit(eta))));
        let noise: f64 = StandardNormal.sample(&mut rng);
        let y = EXAMPLE_ATE * z + 1.0 * c[0] + 0.8 * c[1] + 0.5 * c[2] + 0.6 * b[0] + 0.4 * b[1] + noise;
        let mut rec = vec![format!("{y:.6}"), format!("{z}")];
        rec.extend(c.iter().map(|v| format!("{v:.6}")));
        rec.extend(b.iter().chain(&r).map(|v| format!("{v}")));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
