/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed for a stream identified by `path`.
pub(crate) fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut h = mix(seed);
    for &p in path {
        h = mix(h ^ mix(p.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    // length separates [] from [0]
    mix(h ^ path.len() as u64)
}
