//! Per-stage seeds derived from one master seed.
//!
//! `stage_seed(master, label)` depends only on the master seed and the label
//! text, so adding a stage never changes the randomness of existing ones.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stage_seed(master: u64, label: &str) -> u64 {
    mix(master.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ fnv1a(label.as_bytes()))
}
