use crate::C64;

/// Bit 0 maps to +1, bit 1 to −1.
pub fn modulate_bpsk(bits: &[u8]) -> Vec<C64> {
    bits.iter()
        .map(|&b| C64::new(if b == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

/// Sign of the real part; ties (erasures) decide 0.
pub fn demodulate_bpsk(soft: &[C64]) -> Vec<u8> {
    soft.iter().map(|s| u8::from(s.re < 0.0)).collect()
}
