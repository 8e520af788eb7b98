//! Fixtures shared by the benchmarks.

use gensurp_core::testbed::{Testbed, TestbedSpec};
use gensurp_core::Item;

/// A small testbed and its encoded stimuli.
pub fn fixture(stimuli: usize) -> (Testbed, Vec<Item>) {
    let bed = Testbed::build(TestbedSpec {
        stimuli,
        train_sentences: 2000,
        ..TestbedSpec::default()
    })
    .expect("testbed builds");
    let items = bed.items();
    (bed, items)
}
