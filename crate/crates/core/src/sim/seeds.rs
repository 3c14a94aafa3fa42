/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream seed for a labelled node and counter, derived from
/// the master seed.
pub fn derive_seed(master: u64, labels: &[&str], counter: u64) -> u64 {
    let mut h = mix(master);
    for label in labels {
        for b in label.bytes() {
            h = mix(h ^ b as u64);
        }
        h = mix(h ^ 0xFF);
    }
    mix(h ^ counter)
}
