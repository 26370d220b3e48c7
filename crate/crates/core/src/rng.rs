//! Named random substreams derived from one master seed.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and
//! positioned on its own stream number, so streams never overlap and do
//! not depend on the order in which workers consume them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Population,
    ActiveSelection,
    /// Row-norm candidate schedule of one viewer.
    Schedule { user: u32 },
    /// Label-flip coins of one viewer.
    Flips { user: u32 },
    /// Random initial preference of one viewer.
    Init { user: u32 },
    /// Adaptive sampling of one viewer under one method.
    Adaptive { user: u32, method: u8 },
}

impl Stream {
    fn id(self) -> u64 {
        let (tag, method, user): (u64, u64, u32) = match self {
            Stream::Population => (1, 0, 0),
            Stream::ActiveSelection => (2, 0, 0),
            Stream::Schedule { user } => (3, 0, user),
            Stream::Flips { user } => (4, 0, user),
            Stream::Init { user } => (5, 0, user),
            Stream::Adaptive { user, method } => (6, u64::from(method), user),
        };
        tag << 56 | method << 40 | u64::from(user)
    }
}

pub fn substream(master_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.id());
    rng
}
