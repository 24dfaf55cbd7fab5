use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Position of a virtual thread in the grid; keys its random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamPath {
    pub kernel: u64,
    pub block: u64,
    pub lane: u64,
}

impl StreamPath {
    pub fn new(kernel: usize, block: usize, lane: usize) -> Self {
        Self { kernel: kernel as u64, block: block as u64, lane: lane as u64 }
    }
}

const DOMAIN_THREAD: u64 = 0x7468_7265_6164_0001;
const DOMAIN_HOST: u64 = 0x686f_7374_0000_0002;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive(root: u64, domain: u64, path: StreamPath) -> u64 {
    [domain, path.kernel, path.block, path.lane]
        .into_iter()
        .fold(splitmix(root), |acc, part| splitmix(acc ^ splitmix(part)))
}

/// Reproducible random stream keyed by `(root seed, kernel, block, lane)`.
///
/// Streams depend only on their derivation path, never on which worker runs
/// them or in what order, so a grid produces the same result for any worker
/// count.
#[derive(Clone, Debug)]
pub struct RngStream {
    root: u64,
    path: Option<StreamPath>,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn for_thread(root: u64, path: StreamPath) -> Self {
        Self { root, path: Some(path), rng: ChaCha8Rng::seed_from_u64(derive(root, DOMAIN_THREAD, path)) }
    }

    /// Stream used by the host for the initial item distribution.
    pub fn for_host(root: u64) -> Self {
        Self { root, path: None, rng: ChaCha8Rng::seed_from_u64(derive(root, DOMAIN_HOST, StreamPath::new(0, 0, 0))) }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn path(&self) -> Option<StreamPath> {
        self.path
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
