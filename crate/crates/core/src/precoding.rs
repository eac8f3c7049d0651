//! Per-subcarrier linear precoders and the common/private power split.
//!
//! All precoding vectors are stored with unit norm; stream powers enter as
//! `sqrt(P_c)` and `sqrt(P_k)` at superposition time. With channel rows `r_k`
//! (user `k` receives `r_k · x`), the effective gain of stream `j` at user
//! `k` is `r_k · p_j`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::channel::{vector_norm, CsitView};
use crate::{Result, SimError, C64};

/// Private-stream precoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    /// Regularized channel inversion with loading `K·σ²/P`.
    Rci,
    /// Zero-forcing dirty paper coding: successive orthogonalization with
    /// Tomlinson-Harashima pre-subtraction of already-encoded users.
    ZfDpc,
}

/// Common-stream beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommonStrategy {
    /// Principal eigenvector of `Σ_k r_kᴴ r_k`.
    #[default]
    DominantEigenvector,
    /// Matched filter to the user with the smallest channel norm.
    MrtToWeakest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    /// `P_c`
    pub common: f64,
    /// `P_k`, identical for every user.
    pub per_user: f64,
}

impl PowerSplit {
    pub fn total(&self, num_users: usize) -> f64 {
        self.common + num_users as f64 * self.per_user
    }
}

/// Splits the per-subcarrier budget: `P_c = α·P`, `P_k = (1-α)·P/K`.
pub fn allocate_power(total: f64, common_fraction: f64, num_users: usize) -> Result<PowerSplit> {
    if !(0.0..1.0).contains(&common_fraction) {
        return Err(SimError::Argument(format!(
            "common power fraction must lie in [0, 1), got {common_fraction}"
        )));
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(SimError::Argument(format!("total power must be positive, got {total}")));
    }
    if num_users == 0 {
        return Err(SimError::Argument("at least one user is required".into()));
    }
    Ok(PowerSplit {
        common: common_fraction * total,
        per_user: (1.0 - common_fraction) * total / num_users as f64,
    })
}

fn to_matrix(rows: &[&[C64]]) -> DMatrix<C64> {
    let cols = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

pub(crate) fn dot(row: &[C64], p: &[C64]) -> C64 {
    row.iter().zip(p).map(|(a, b)| a * b).sum()
}

fn normalized(v: Vec<C64>) -> Result<Vec<C64>> {
    let norm = vector_norm(&v);
    if norm == 0.0 || !norm.is_finite() {
        return Err(SimError::DegenerateChannel("cannot normalize a zero precoding vector".into()));
    }
    Ok(v.into_iter().map(|x| x / norm).collect())
}

fn matched_filter(row: &[C64]) -> Result<Vec<C64>> {
    normalized(row.iter().map(C64::conj).collect())
}

/// RCI private precoders: columns of `Hᴴ (H Hᴴ + (K·σ²/P)·I)⁻¹`, each normalized.
pub fn rci_private(rows: &[&[C64]], noise_var: f64, total_power: f64) -> Result<Vec<Vec<C64>>> {
    let k = rows.len();
    let h = to_matrix(rows);
    if h.ncols() < k {
        return Err(SimError::Config(format!("RCI needs N_t >= K, got N_t={}, K={k}", h.ncols())));
    }
    let loading = k as f64 * noise_var / total_power;
    let gram = &h * h.adjoint() + DMatrix::<C64>::identity(k, k) * C64::new(loading, 0.0);
    let inv = gram
        .try_inverse()
        .ok_or_else(|| SimError::Numerical("regularized Gram matrix is singular".into()))?;
    let w = h.adjoint() * inv;
    (0..k)
        .map(|j| normalized(w.column(j).iter().copied().collect()))
        .collect()
}

/// ZF-DPC private precoders in ascending user order.
///
/// Precoder `i` is the normalized projection of `r_iᴴ` onto the orthogonal
/// complement of `r_0ᴴ … r_{i-1}ᴴ`, so `r_j · p_i = 0` for `j < i` and the
/// effective channel is lower-triangular.
pub fn zfdpc_private(rows: &[&[C64]]) -> Result<(Vec<Vec<C64>>, Vec<usize>)> {
    let nt = rows.first().map_or(0, |r| r.len());
    if nt < rows.len() {
        return Err(SimError::Config(format!(
            "ZF-DPC needs N_t >= K, got N_t={nt}, K={}",
            rows.len()
        )));
    }
    let order: Vec<usize> = (0..rows.len()).collect();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(rows.len());
    for &i in &order {
        let target: Vec<C64> = rows[i].iter().map(C64::conj).collect();
        let scale = vector_norm(&target);
        let mut v = target;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let residual = vector_norm(&v);
        if scale == 0.0 || residual <= 1e-12 * scale {
            return Err(SimError::DegenerateChannel(format!(
                "user {i} channel lies in the span of earlier users"
            )));
        }
        basis.push(v.into_iter().map(|x| x / residual).collect());
    }
    Ok((basis, order))
}

/// Unit-norm common-stream beam.
pub fn common_precoder(rows: &[&[C64]], strategy: CommonStrategy) -> Result<Vec<C64>> {
    if rows.is_empty() || rows.iter().all(|r| vector_norm(r) == 0.0) {
        return Err(SimError::DegenerateChannel("all user channels are zero".into()));
    }
    match strategy {
        CommonStrategy::MrtToWeakest => {
            let weakest = rows
                .iter()
                .enumerate()
                .min_by(|a, b| vector_norm(a.1).total_cmp(&vector_norm(b.1)).then(a.0.cmp(&b.0)))
                .map(|(k, _)| k)
                .unwrap_or(0);
            matched_filter(rows[weakest]).or_else(|_| dominant_eigenvector(rows))
        }
        CommonStrategy::DominantEigenvector => dominant_eigenvector(rows),
    }
}

fn dominant_eigenvector(rows: &[&[C64]]) -> Result<Vec<C64>> {
    let h = to_matrix(rows);
    let cov = h.adjoint() * &h;
    let eig = SymmetricEigen::new(cov);
    let (best, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| SimError::Numerical("empty eigen decomposition".into()))?;
    let v: Vec<C64> = eig.eigenvectors.column(best).iter().copied().collect();
    // fix the phase so the largest entry is real and positive
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_default();
    let rot = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { C64::new(1.0, 0.0) };
    normalized(v.into_iter().map(|x| x * rot).collect())
}

/// Period of the Tomlinson-Harashima fold for the BPSK alphabet `{±1}`.
pub const THP_MODULUS: f64 = 4.0;

/// Reduces `x` into `[-THP_MODULUS/2, THP_MODULUS/2)`.
pub fn thp_fold(x: f64) -> f64 {
    x - THP_MODULUS * ((x + THP_MODULUS / 2.0) / THP_MODULUS).floor()
}

/// Tomlinson-Harashima encoding of one subcarrier's private symbols.
///
/// The first user in `order` is sent as is. Every later user gets the real
/// part of its symbol minus the interference of earlier users (as seen
/// through `rows`), folded into `[-2, 2)`. BPSK detection only reads the real
/// part, so the imaginary part of the interference is left alone.
pub fn thp_encode(rows: &[&[C64]], private: &[Vec<C64>], order: &[usize], symbols: &[C64]) -> Vec<C64> {
    let mut out = symbols.to_vec();
    for (rank, &i) in order.iter().enumerate().skip(1) {
        let own = dot(rows[i], &private[i]);
        let known: C64 = order[..rank].iter().map(|&j| dot(rows[i], &private[j]) * out[j]).sum();
        out[i] = C64::new(thp_fold((symbols[i] - known / own).re), 0.0);
    }
    out
}

// exhaustive enumeration over the BPSK alphabet
const MAX_ENUMERATED_USERS: usize = 16;

/// Mean `|u_j|²` of the encoded symbols and mean private transmit energy
/// `E‖Σ_j sqrt(P_k)·p_j·u_j‖²`, averaged over all equally likely BPSK inputs.
fn thp_statistics(rows: &[&[C64]], private: &[Vec<C64>], order: &[usize], per_user: f64) -> Result<(Vec<f64>, f64)> {
    let k = rows.len();
    if k > MAX_ENUMERATED_USERS {
        return Err(SimError::Config(format!(
            "ZF-DPC power normalization supports at most {MAX_ENUMERATED_USERS} users, got {k}"
        )));
    }
    let nt = private.first().map_or(0, Vec::len);
    let combos = 1usize << k;
    let mut symbol_power = vec![0.0; k];
    let mut energy = 0.0;
    for mask in 0..combos {
        let d: Vec<C64> = (0..k)
            .map(|j| C64::new(if mask >> j & 1 == 1 { -1.0 } else { 1.0 }, 0.0))
            .collect();
        let u = thp_encode(rows, private, order, &d);
        let mut x = vec![C64::default(); nt];
        for (j, uj) in u.iter().enumerate() {
            symbol_power[j] += uj.norm_sqr();
            for (xa, pa) in x.iter_mut().zip(&private[j]) {
                *xa += pa * uj * per_user.sqrt();
            }
        }
        energy += x.iter().map(C64::norm_sqr).sum::<f64>();
    }
    symbol_power.iter_mut().for_each(|p| *p /= combos as f64);
    Ok((symbol_power, energy / combos as f64))
}

/// Precoders for one subcarrier.
#[derive(Debug, Clone)]
pub struct SubcarrierPrecoder {
    pub common: Vec<C64>,
    pub private: Vec<Vec<C64>>,
    /// Encoding order for ZF-DPC.
    pub dpc_order: Option<Vec<usize>>,
    /// Amplitude factor applied to every stream so the mean transmit power is `P`.
    pub scale: f64,
    /// Mean power of each user's encoded private symbol.
    pub symbol_power: Vec<f64>,
}

impl SubcarrierPrecoder {
    /// Linear precoding: unit symbol power, no rescaling.
    pub fn linear(common: Vec<C64>, private: Vec<Vec<C64>>) -> Self {
        let k = private.len();
        Self {
            common,
            private,
            dpc_order: None,
            scale: 1.0,
            symbol_power: vec![1.0; k],
        }
    }
}

/// Precoders for every subcarrier plus the stream powers.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub kind: PrecoderKind,
    pub power: PowerSplit,
    pub subcarriers: Vec<SubcarrierPrecoder>,
}

impl PrecoderSet {
    /// Builds precoders from the transmitter's channel view.
    pub fn build(
        csit: &CsitView,
        kind: PrecoderKind,
        strategy: CommonStrategy,
        power: PowerSplit,
        noise_var: f64,
    ) -> Result<Self> {
        let num_sc = csit.freq_hat.first().map_or(0, Vec::len);
        let num_users = csit.freq_hat.len();
        let total = power.total(num_users);
        let subcarriers = (0..num_sc)
            .map(|n| {
                let rows = csit.rows(n);
                let common = common_precoder(&rows, strategy)?;
                match kind {
                    PrecoderKind::Rci => Ok(SubcarrierPrecoder::linear(common, rci_private(&rows, noise_var, total)?)),
                    PrecoderKind::ZfDpc => {
                        let (private, order) = zfdpc_private(&rows)?;
                        let (symbol_power, energy) = thp_statistics(&rows, &private, &order, power.per_user)?;
                        let mean = power.common + energy;
                        let scale = if mean > 0.0 { (total / mean).sqrt() } else { 1.0 };
                        Ok(SubcarrierPrecoder {
                            common,
                            private,
                            dpc_order: Some(order),
                            scale,
                            symbol_power,
                        })
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            power,
            subcarriers,
        })
    }

    pub fn num_users(&self) -> usize {
        self.subcarriers.first().map_or(0, |s| s.private.len())
    }

    /// `scale·sqrt(P_c)·r·p_c` on subcarrier `n`.
    pub fn common_gain(&self, row: &[C64], n: usize) -> C64 {
        let sc = &self.subcarriers[n];
        dot(row, &sc.common) * (self.power.common.sqrt() * sc.scale)
    }

    /// `scale·sqrt(P_k)·r·p_j` on subcarrier `n`.
    pub fn private_gain(&self, row: &[C64], n: usize, j: usize) -> C64 {
        let sc = &self.subcarriers[n];
        dot(row, &sc.private[j]) * (self.power.per_user.sqrt() * sc.scale)
    }

    /// Whether user `k`'s symbol on subcarrier `n` is Tomlinson-Harashima folded.
    pub fn is_folded(&self, n: usize, k: usize) -> bool {
        self.subcarriers[n]
            .dpc_order
            .as_ref()
            .is_some_and(|order| order.first() != Some(&k))
    }

    /// Streams whose interference at user `k` is not removed by the transmitter.
    fn interferers(&self, n: usize, k: usize) -> Vec<usize> {
        match &self.subcarriers[n].dpc_order {
            None => (0..self.num_users()).filter(|&j| j != k).collect(),
            Some(order) => {
                let rank = order.iter().position(|&u| u == k).unwrap_or(0);
                order[rank + 1..].to_vec()
            }
        }
    }

    /// Residual private-stream interference power at user `k` after SIC of the common stream.
    pub fn private_interference(&self, row: &[C64], n: usize, k: usize) -> f64 {
        self.interferers(n, k)
            .into_iter()
            .map(|j| self.private_gain(row, n, j).norm_sqr() * self.subcarriers[n].symbol_power[j])
            .sum()
    }

    /// Private-stream power that user `k` sees while decoding the common stream.
    pub fn common_interference(&self, row: &[C64], n: usize, k: usize) -> f64 {
        let own = self.private_gain(row, n, k).norm_sqr() * self.subcarriers[n].symbol_power[k];
        own + self.private_interference(row, n, k)
    }

    /// ZF-DPC pre-subtraction on subcarrier `n` using the transmitter's rows.
    ///
    /// Returns the symbols actually fed to the private precoders. For linear
    /// precoders the input is returned unchanged.
    pub fn presubtract(&self, csit_rows: &[&[C64]], n: usize, symbols: &[C64]) -> Vec<C64> {
        let sc = &self.subcarriers[n];
        match &sc.dpc_order {
            None => symbols.to_vec(),
            Some(order) => thp_encode(csit_rows, &sc.private, order, symbols),
        }
    }
}
