//! Channel-dependent splitter.
//!
//! The private stream of every user is sent unchanged. In addition, the `m`
//! symbols of each user that fall on its weakest subcarriers are copied into
//! the common stream, which every user decodes. After SIC each user pulls
//! its own copies back out of the common stream and combines them with the
//! private observations by maximum ratio combining.

use crate::{Result, SimError, C64};

/// Placement of the users' replicated symbols inside the common stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrangement {
    /// User blocks concatenated in user order.
    Localized,
    /// Chunks of `chunk` consecutive slots interleaved round-robin over users.
    Distributed { chunk: usize },
}

impl Default for Arrangement {
    fn default() -> Self {
        Arrangement::Distributed { chunk: 2 }
    }
}

/// Selected deep-fade subcarriers per user and their slot in the common stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMap {
    selected: Vec<Vec<usize>>,
    arrangement: Arrangement,
    position: Vec<Vec<usize>>,
}

impl SplitMap {
    /// Number of replicated symbols per user.
    pub fn per_user(&self) -> usize {
        self.selected.first().map_or(0, Vec::len)
    }

    pub fn num_users(&self) -> usize {
        self.selected.len()
    }

    /// Length of the replicated part of the common stream, `K·m`.
    pub fn common_len(&self) -> usize {
        self.num_users() * self.per_user()
    }

    pub fn arrangement(&self) -> Arrangement {
        self.arrangement
    }

    /// Ascending subcarrier indices chosen for user `k`.
    pub fn selected(&self, k: usize) -> &[usize] {
        &self.selected[k]
    }

    /// Common-stream position of slot `j` of user `k`.
    pub fn position(&self, k: usize, j: usize) -> usize {
        self.position[k][j]
    }

    /// Inverse of [`SplitMap::position`]: `(user, slot)` stored at each common position.
    pub fn owners(&self) -> Vec<(usize, usize)> {
        let mut owners = vec![(0, 0); self.common_len()];
        for (k, slots) in self.position.iter().enumerate() {
            for (j, &p) in slots.iter().enumerate() {
                owners[p] = (k, j);
            }
        }
        owners
    }
}

/// Indices of the `m` smallest gains, ties to the lower index, returned ascending.
pub fn select_indices(gains: &[f64], m: usize) -> Result<Vec<usize>> {
    if m > gains.len() {
        return Err(SimError::Argument(format!(
            "cannot select {m} of {} subcarriers",
            gains.len()
        )));
    }
    if let Some(bad) = gains.iter().find(|g| !g.is_finite()) {
        return Err(SimError::Argument(format!("non-finite channel gain {bad}")));
    }
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[a].total_cmp(&gains[b]).then(a.cmp(&b)));
    order.truncate(m);
    order.sort_unstable();
    Ok(order)
}

fn positions(num_users: usize, m: usize, arrangement: Arrangement) -> Result<Vec<Vec<usize>>> {
    let mut position = vec![vec![0; m]; num_users];
    match arrangement {
        Arrangement::Localized => {
            for (k, slots) in position.iter_mut().enumerate() {
                for (j, p) in slots.iter_mut().enumerate() {
                    *p = k * m + j;
                }
            }
        }
        Arrangement::Distributed { chunk } => {
            if chunk == 0 {
                return Err(SimError::Config("distributed chunk size must be positive".into()));
            }
            let mut next = 0;
            let mut start = 0;
            while start < m {
                let end = (start + chunk).min(m);
                for slots in position.iter_mut() {
                    for p in &mut slots[start..end] {
                        *p = next;
                        next += 1;
                    }
                }
                start = end;
            }
        }
    }
    Ok(position)
}

/// Selects `m` deep-faded subcarriers per user from `gains[k][n]` and lays them out.
pub fn build_split_map(gains: &[Vec<f64>], m: usize, arrangement: Arrangement) -> Result<SplitMap> {
    let num_sc = gains.first().map_or(0, Vec::len);
    if gains.iter().any(|g| g.len() != num_sc) {
        return Err(SimError::Argument("ragged gain table".into()));
    }
    if gains.len() * m > num_sc {
        return Err(SimError::Config(format!(
            "K·m = {}·{m} replicated symbols exceed N = {num_sc} common subcarriers",
            gains.len()
        )));
    }
    let selected = gains
        .iter()
        .map(|g| select_indices(g, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitMap {
        position: positions(gains.len(), m, arrangement)?,
        selected,
        arrangement,
    })
}

/// Gathers the replicas into the (unpadded) common stream.
pub fn compose_common<T: Copy + Default>(private: &[Vec<T>], map: &SplitMap) -> Vec<T> {
    let mut common = vec![T::default(); map.common_len()];
    for (k, symbols) in private.iter().enumerate().take(map.num_users()) {
        for (j, &z) in map.selected(k).iter().enumerate() {
            common[map.position(k, j)] = symbols[z];
        }
    }
    common
}

/// User `k`'s replicas as `(private subcarrier, common-stream entry)` pairs.
pub fn extract_user_portion<T: Copy>(common_hat: &[T], map: &SplitMap, k: usize) -> Vec<(usize, T)> {
    map.selected(k)
        .iter()
        .enumerate()
        .map(|(j, &z)| (z, common_hat[map.position(k, j)]))
        .collect()
}

/// Effective gain and disturbance power of both branches of a replicated symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinerWeights {
    pub private_gain: C64,
    pub private_disturbance: f64,
    pub common_gain: C64,
    pub common_disturbance: f64,
}

impl CombinerWeights {
    pub fn private_snr(&self) -> f64 {
        self.private_gain.norm_sqr() / self.private_disturbance
    }

    pub fn common_snr(&self) -> f64 {
        self.common_gain.norm_sqr() / self.common_disturbance
    }

    /// Post-combining SNR: sum of the branch SNRs.
    pub fn combined_snr(&self) -> f64 {
        self.private_snr() + self.common_snr()
    }
}

/// Maximum ratio combining of the two raw observations `g·s + disturbance`.
///
/// The output is normalized so that its signal component is `s`.
pub fn combine_mrc(private_obs: C64, common_obs: C64, w: &CombinerWeights) -> Result<C64> {
    if !(w.private_disturbance > 0.0 && w.common_disturbance > 0.0) {
        return Err(SimError::Argument(format!(
            "branch disturbance powers must be positive, got {} and {}",
            w.private_disturbance, w.common_disturbance
        )));
    }
    let norm = w.combined_snr();
    if norm == 0.0 {
        return Err(SimError::DegenerateChannel("both MRC branch gains are zero".into()));
    }
    let acc = w.private_gain.conj() / w.private_disturbance * private_obs
        + w.common_gain.conj() / w.common_disturbance * common_obs;
    Ok(acc / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn picks_smallest_gains() {
        assert_eq!(select_indices(&[0.9, 0.1, 0.5, 0.05], 2).unwrap(), vec![1, 3]);
        assert!(select_indices(&[0.3, 0.2], 0).unwrap().is_empty());
        assert!(matches!(select_indices(&[0.3, 0.2], 3), Err(SimError::Argument(_))));
    }

    #[test]
    fn ties_go_to_lower_index() {
        assert_eq!(select_indices(&[0.5, 0.2, 0.2, 0.2], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn rejects_nan() {
        assert!(select_indices(&[0.5, f64::NAN], 1).is_err());
    }

    fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() as usize == m)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn matches_exhaustive_subset_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let all = subsets(16, 4);
        for _ in 0..1000 {
            let gains: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
            let best = all
                .iter()
                .min_by(|a, b| {
                    let sa: f64 = a.iter().map(|&i| gains[i]).sum();
                    let sb: f64 = b.iter().map(|&i| gains[i]).sum();
                    sa.total_cmp(&sb)
                })
                .unwrap();
            assert_eq!(&select_indices(&gains, 4).unwrap(), best);
        }
    }

    fn chunk_map(k: usize, m: usize, arrangement: Arrangement) -> SplitMap {
        let gains = vec![(0..k * m).map(|n| n as f64).collect::<Vec<_>>(); k];
        build_split_map(&gains, m, arrangement).unwrap()
    }

    #[test]
    fn localized_concatenates_users() {
        let map = chunk_map(2, 2, Arrangement::Localized);
        let d = vec![
            vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::default(), C64::default()],
            vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0), C64::default(), C64::default()],
        ];
        let c = compose_common(&d, &map);
        assert_eq!(c.iter().map(|x| x.re).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 4.0]);
        let user2 = extract_user_portion(&c, &map, 1);
        assert_eq!(user2, vec![(0, d[1][0]), (1, d[1][1])]);
    }

    #[test]
    fn distributed_interleaves_chunks() {
        let map = chunk_map(2, 4, Arrangement::Distributed { chunk: 2 });
        // a1 a2 b1 b2 a3 a4 b3 b4
        assert_eq!(map.position[0], vec![0, 1, 4, 5]);
        assert_eq!(map.position[1], vec![2, 3, 6, 7]);
        let c: Vec<usize> = compose_common(&[vec![10, 11, 12, 13, 0, 0, 0, 0], vec![20, 21, 22, 23, 0, 0, 0, 0]], &map);
        assert_eq!(c, vec![10, 11, 20, 21, 12, 13, 22, 23]);
        let mine: Vec<usize> = extract_user_portion(&c, &map, 0).into_iter().map(|(_, s)| s).collect();
        assert_eq!(mine, vec![10, 11, 12, 13]);
    }

    #[test]
    fn distributed_short_last_chunk() {
        let map = chunk_map(2, 3, Arrangement::Distributed { chunk: 2 });
        assert_eq!(map.position[0], vec![0, 1, 4]);
        assert_eq!(map.position[1], vec![2, 3, 5]);
    }

    #[test]
    fn single_user_arrangements_coincide() {
        for m in 0..6 {
            let a = chunk_map(1, m, Arrangement::Localized);
            let b = chunk_map(1, m, Arrangement::Distributed { chunk: 4 });
            assert_eq!(a.position, b.position);
        }
    }

    #[test]
    fn gather_and_empty() {
        let gains = vec![vec![5.0, 5.0, 0.1, 5.0, 5.0, 0.2, 5.0, 5.0]];
        let map = build_split_map(&gains, 2, Arrangement::Localized).unwrap();
        let d: Vec<Vec<usize>> = vec![(0..8).collect()];
        assert_eq!(compose_common(&d, &map), vec![2, 5]);
        let empty = build_split_map(&gains, 0, Arrangement::Localized).unwrap();
        assert!(compose_common(&d, &empty).is_empty());
    }

    #[test]
    fn too_many_replicas_is_config_error() {
        let gains = vec![vec![1.0; 8]; 3];
        assert!(matches!(
            build_split_map(&gains, 3, Arrangement::Localized),
            Err(SimError::Config(_))
        ));
        assert!(build_split_map(&gains, 2, Arrangement::Distributed { chunk: 0 }).is_err());
    }

    #[test]
    fn mrc_hand_values() {
        let w = CombinerWeights {
            private_gain: C64::new(1.0, 0.0),
            private_disturbance: 1.0,
            common_gain: C64::new(2.0, 0.0),
            common_disturbance: 1.0,
        };
        let out = combine_mrc(C64::new(1.0, 0.0), C64::new(2.0, 0.0), &w).unwrap();
        assert!((out - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mrc_single_branch_degenerates() {
        let g = C64::new(0.3, -0.7);
        let w = CombinerWeights {
            private_gain: g,
            private_disturbance: 0.5,
            common_gain: C64::default(),
            common_disturbance: 2.0,
        };
        let y = C64::new(0.2, 0.9);
        let out = combine_mrc(y, C64::new(9.0, 9.0), &w).unwrap();
        assert!((out - y / g).norm() < 1e-12);
    }

    #[test]
    fn mrc_errors() {
        let mut w = CombinerWeights {
            private_gain: C64::default(),
            private_disturbance: 1.0,
            common_gain: C64::default(),
            common_disturbance: 1.0,
        };
        assert!(matches!(
            combine_mrc(C64::default(), C64::default(), &w),
            Err(SimError::DegenerateChannel(_))
        ));
        w.private_disturbance = 0.0;
        assert!(matches!(
            combine_mrc(C64::default(), C64::default(), &w),
            Err(SimError::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn positions_are_a_permutation(k in 1usize..=8, m in 0usize..=32, c in prop::sample::select(vec![1usize, 2, 4]), localized: bool) {
            let arrangement = if localized { Arrangement::Localized } else { Arrangement::Distributed { chunk: c } };
            let pos = positions(k, m, arrangement).unwrap();
            let mut seen: Vec<usize> = pos.into_iter().flatten().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..k * m).collect::<Vec<_>>());
        }

        #[test]
        fn compose_then_extract_is_identity(seed: u64, k in 1usize..=4, chunk in 1usize..=4, localized: bool) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 16;
            let m = rng.random_range(0..=n / k);
            let gains: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
            let d: Vec<Vec<C64>> = (0..k).map(|_| (0..n).map(|_| C64::new(rng.random(), rng.random())).collect()).collect();
            let arrangement = if localized { Arrangement::Localized } else { Arrangement::Distributed { chunk } };
            let map = build_split_map(&gains, m, arrangement).unwrap();
            let again = build_split_map(&gains, m, arrangement).unwrap();
            prop_assert_eq!(&map, &again);
            let common = compose_common(&d, &map);
            for user in 0..k {
                let sel = map.selected(user);
                prop_assert!(sel.windows(2).all(|w| w[0] < w[1]));
                for (z, s) in extract_user_portion(&common, &map, user) {
                    prop_assert_eq!(s, d[user][z]);
                }
            }
        }
    }
}
