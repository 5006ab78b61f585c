//! Per-replicate seed derivation.

/// The splitmix64 finalizer: a bijection on `u64` with full avalanche.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `rep` at sample size `n`:
/// `sm(sm(sm(master) ^ n) ^ rep)` with `sm` = [`splitmix64`].
///
/// For fixed `(master, n)` the map `rep ↦ seed` is a bijection, so replicate
/// streams never collide within one sample size.
pub fn derive_seed(master: u64, n: u64, rep: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ n);
    splitmix64(h ^ rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference splitmix64 generator seeded with 0,
        // whose state advances by the golden-ratio increment before mixing.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(derive_seed(7, 1000, 3), derive_seed(7, 1000, 3));
        let mut seen = HashSet::new();
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            for rep in 0..250_000u64 {
                assert!(seen.insert(derive_seed(20_240_601, n, rep)));
            }
        }
        assert_eq!(seen.len(), 1_000_000);
        for rep in 0..1000 {
            assert_ne!(derive_seed(1, 100, rep), derive_seed(2, 100, rep));
        }
    }
}
