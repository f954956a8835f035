//! Deterministic seed fan-out.
//!
//! Every run owns a single manifest seed; each randomized component derives
//! its own sub-seed from `(seed, label)` so that adding or reordering
//! components never perturbs the streams of the others.

/// Derive a component sub-seed from the manifest seed and a stable label.
///
/// FNV-1a over the seed bytes followed by the label bytes.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in master.to_le_bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(PRIME);
    }
    for byte in label.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}
