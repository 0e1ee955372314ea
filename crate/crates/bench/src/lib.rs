//! Inputs shared by the benches.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use stylekit::ingest::{scan_corpus, IngestConfig, SourceUnit};

/// `per` points around each of three centres in the plane.
pub fn blobs(per: usize, sigma: f64, seed: u64) -> Vec<Vec<f64>> {
    let centers = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.866]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    centers
        .iter()
        .flat_map(|c| (0..per).map(|_| vec![c[0] + rng.sample(normal), c[1] + rng.sample(normal)]).collect::<Vec<_>>())
        .collect()
}

/// The real-world fixture corpus shipped with the core crate's tests.
pub fn fixture_units() -> Vec<SourceUnit> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/corpus");
    scan_corpus(&root, &IngestConfig::default()).expect("fixture corpus is present").0
}
