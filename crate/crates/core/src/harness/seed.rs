use crate::baselines::SchemeId;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial; a pure function of its four inputs so that any worker
/// count reproduces the same random streams.
pub fn derive_trial_seed(master_seed: u64, scheme: SchemeId, snr_index: usize, trial_index: usize) -> u64 {
    [scheme.code(), snr_index as u64, trial_index as u64]
        .into_iter()
        .enumerate()
        .fold(splitmix64(master_seed), |acc, (slot, field)| {
            splitmix64(acc ^ splitmix64(field ^ (slot as u64).wrapping_mul(GOLDEN)))
        })
}
