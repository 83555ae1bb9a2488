//! Fixtures shared by the kernel benchmarks.

use qloop::checks::{family, generic_config};
use qloop::{Algebra, LatticeConfig, RFamily, Result, C64};

pub const Q: f64 = 1.3;

pub fn fixture_family(algebra: Algebra) -> Result<RFamily> {
    family(algebra, C64::new(Q, 0.0), None)
}

pub fn fixture_lattice(algebra: Algebra, big_n: usize) -> LatticeConfig {
    let rank = match algebra {
        Algebra::A1 => 1,
        Algebra::A2 => 2,
    };
    generic_config(Q, 2, big_n, 0.05, 0.1, rank)
}
