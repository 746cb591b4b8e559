//! Seeded random streams.
//!
//! Every `(replication, purpose, station)` triple gets its own ChaCha8
//! stream: the generator is keyed by `seed` and its 64-bit stream number is
//! `replication << 32 | purpose << 16 | station`. Streams never overlap, so
//! changing how one purpose is sampled leaves every other sequence intact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Purpose {
    Arrivals = 0,
    Services = 1,
    Switchover = 2,
    Glue = 3,
    Retrial = 4,
    /// Within-visit shuffling for the random service order.
    Order = 5,
}

/// Stream number of a `(replication, purpose, station)` triple.
pub fn stream_id(replication: u32, purpose: Purpose, station: u16) -> u64 {
    (u64::from(replication) << 32) | ((purpose as u64) << 16) | u64::from(station)
}

pub fn stream(seed: u64, replication: u32, purpose: Purpose, station: u16) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(replication, purpose, station));
    rng
}

/// One generator per purpose and station.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub arrivals: Vec<ChaCha8Rng>,
    pub services: Vec<ChaCha8Rng>,
    pub switchover: Vec<ChaCha8Rng>,
    pub glue: Vec<ChaCha8Rng>,
    pub retrial: Vec<ChaCha8Rng>,
    pub order: Vec<ChaCha8Rng>,
}

/// Independent generator state for one replication of an `n`-station run.
pub fn rng_streams(seed: u64, replication: u32, n: usize) -> RngStreams {
    let make = |purpose| {
        (0..n)
            .map(|i| stream(seed, replication, purpose, i as u16))
            .collect()
    };
    RngStreams {
        arrivals: make(Purpose::Arrivals),
        services: make(Purpose::Services),
        switchover: make(Purpose::Switchover),
        glue: make(Purpose::Glue),
        retrial: make(Purpose::Retrial),
        order: make(Purpose::Order),
    }
}
