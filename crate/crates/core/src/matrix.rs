//! Structured filter-bank operators.
//!
//! Every operator in the chain acts independently on each polyphase index
//! c ∈ 0..N. Sample `i·N + c` of a block belongs to polyphase c, symbol i.
//! The (M+K−1)N × MN filter matrix P therefore splits into N Toeplitz
//! matrices P_c of size (M+K−1)×M with P_c[r, j] = w[(r−j)N + c], and
//! G = PᴴP, R = G⁻¹ split into N real M×M matrices G_c, R_c.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::prototype::PrototypeFilter;

/// Condition estimate above which inversion of G_c is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Real multiplication counter for instrumented operator application.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub real_mults: u64,
}

/// The banded filter matrix P, kept as the prototype taps.
#[derive(Debug, Clone)]
pub struct BandedFilterMatrix {
    n: usize,
    m: usize,
    k: usize,
    w: Vec<f64>,
}

impl BandedFilterMatrix {
    pub fn new(proto: &PrototypeFilter, symbols: usize) -> Self {
        Self {
            n: proto.subcarriers(),
            m: symbols,
            k: proto.overlap(),
            w: proto.coeffs().to_vec(),
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> usize {
        self.m
    }

    pub fn overlap(&self) -> usize {
        self.k
    }

    pub fn taps(&self) -> &[f64] {
        &self.w
    }

    /// Row count (M+K−1)·N.
    pub fn rows(&self) -> usize {
        (self.m + self.k - 1) * self.n
    }

    /// Column count M·N.
    pub fn cols(&self) -> usize {
        self.m * self.n
    }

    #[inline]
    fn tap(&self, k: usize, c: usize) -> f64 {
        self.w[k * self.n + c]
    }

    /// Single entry P[row, col].
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let (rb, rc) = (row / self.n, row % self.n);
        let (cb, cc) = (col / self.n, col % self.n);
        if rc != cc || rb < cb || rb - cb >= self.k {
            0.0
        } else {
            self.tap(rb - cb, rc)
        }
    }

    /// P_c as a row-major (M+K−1)×M matrix.
    pub fn polyphase(&self, c: usize) -> Vec<f64> {
        let rows = self.m + self.k - 1;
        let mut out = vec![0.0; rows * self.m];
        for j in 0..self.m {
            for k in 0..self.k {
                out[(j + k) * self.m + j] = self.tap(k, c);
            }
        }
        out
    }

    /// o = P b.
    pub fn apply(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_counted(b, &mut OpCount::default())
    }

    pub fn apply_counted(&self, b: &[Complex64], count: &mut OpCount) -> Result<Vec<Complex64>> {
        check_len(self.cols(), b.len())?;
        let n = self.n;
        let mut out = vec![Complex64::default(); self.rows()];
        for j in 0..self.m {
            let src = &b[j * n..(j + 1) * n];
            for k in 0..self.k {
                let taps = &self.w[k * n..(k + 1) * n];
                let dst = &mut out[(j + k) * n..(j + k + 1) * n];
                for ((d, s), t) in dst.iter_mut().zip(src).zip(taps) {
                    *d += s * t;
                }
                count.real_mults += 2 * n as u64;
            }
        }
        Ok(out)
    }

    /// x = Pᴴ r.
    pub fn apply_adjoint(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_adjoint_counted(r, &mut OpCount::default())
    }

    pub fn apply_adjoint_counted(&self, r: &[Complex64], count: &mut OpCount) -> Result<Vec<Complex64>> {
        check_len(self.rows(), r.len())?;
        let n = self.n;
        let mut out = vec![Complex64::default(); self.cols()];
        for j in 0..self.m {
            let dst = &mut out[j * n..(j + 1) * n];
            for k in 0..self.k {
                let taps = &self.w[k * n..(k + 1) * n];
                let src = &r[(j + k) * n..(j + k + 1) * n];
                for ((d, s), t) in dst.iter_mut().zip(src).zip(taps) {
                    *d += s * t;
                }
                count.real_mults += 2 * n as u64;
            }
        }
        Ok(out)
    }

    /// G = PᴴP in band form.
    pub fn autocorrelation(&self) -> AutocorrMatrix {
        let bands = (0..self.k)
            .map(|d| {
                (0..self.n)
                    .map(|c| (d..self.k).map(|i| self.tap(i, c) * self.tap(i - d, c)).sum())
                    .collect()
            })
            .collect();
        AutocorrMatrix { n: self.n, m: self.m, bands }
    }

    /// Polyphase form of D_l = P↓l − P·X_l restricted to the columns of
    /// input polyphase `c`.
    ///
    /// P↓l is P delayed by l samples and truncated to the block length; X_l
    /// cyclically shifts every N-segment by l. All columns (i, c) of D_l land
    /// on output polyphase c' = (c + l) mod N, which is returned together with
    /// the (M+K−1)×M row-major matrix of those columns.
    pub fn displacement(&self, l: usize, c: usize) -> (usize, Vec<f64>) {
        let rows = self.m + self.k - 1;
        let mut d = vec![0.0; rows * self.m];
        let s = c + l;
        let wrap = s >= self.n;
        let c_out = s % self.n;
        for i in 0..self.m {
            for k in 0..self.k {
                let shifted_row = if wrap { i + k + 1 } else { i + k };
                if shifted_row < rows {
                    d[shifted_row * self.m + i] += self.tap(k, c);
                }
                d[(i + k) * self.m + i] -= self.tap(k, c_out);
            }
        }
        (c_out, d)
    }

    /// Trace and truncation summaries for delays 0..=max_delay.
    pub fn displaced_summaries(&self, max_delay: usize) -> Result<Vec<DisplacedSummary>> {
        if max_delay >= self.n {
            return Err(Error::DelayTooLarge { delay: max_delay, subcarriers: self.n });
        }
        let total = self.w.len();
        Ok((0..=max_delay)
            .map(|l| {
                let t_down = (0..self.n)
                    .map(|c| self.displacement(l, c).1.iter().map(|v| v * v).sum::<f64>())
                    .sum();
                let p_corr = (0..l).map(|k| self.w[total - 1 - k].powi(2)).sum();
                DisplacedSummary { delay: l, t_down, p_corr, tail_trace: self.tail_trace(l) }
            })
            .collect())
    }

    /// Σ of squared row norms of the last `l` rows of P.
    pub fn tail_trace(&self, l: usize) -> f64 {
        let rows = self.rows();
        (rows.saturating_sub(l)..rows)
            .map(|row| {
                let (rb, c) = (row / self.n, row % self.n);
                (0..self.m)
                    .filter(|j| rb >= *j && rb - j < self.k)
                    .map(|j| self.tap(rb - j, c).powi(2))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Per-delay scalar summaries of the displaced filter matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacedSummary {
    pub delay: usize,
    /// ‖P↓l X_lᵀ − P‖²_F.
    pub t_down: f64,
    /// Σ_{k<l} w²[KN−1−k], the energy truncated off the block end.
    pub p_corr: f64,
    /// Exact trace of the last l rows of PPᴴ.
    pub tail_trace: f64,
}

/// G = PᴴP: block-Toeplitz with diagonal N×N blocks, stored as K bands.
#[derive(Debug, Clone)]
pub struct AutocorrMatrix {
    n: usize,
    m: usize,
    bands: Vec<Vec<f64>>,
}

impl AutocorrMatrix {
    pub fn subcarriers(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> usize {
        self.m
    }

    /// Number of stored bands (K).
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    /// Diagonal of block (m, m+d), for d < K.
    pub fn band(&self, d: usize) -> &[f64] {
        &self.bands[d]
    }

    /// Diagonal of block (m, i) as an N-vector.
    pub fn block(&self, m: usize, i: usize) -> Vec<f64> {
        let d = m.abs_diff(i);
        if d < self.bands.len() {
            self.bands[d].clone()
        } else {
            vec![0.0; self.n]
        }
    }

    /// G_c as a row-major M×M matrix.
    pub fn polyphase(&self, c: usize) -> Vec<f64> {
        let m = self.m;
        let mut g = vec![0.0; m * m];
        for r in 0..m {
            for s in 0..m {
                let d = r.abs_diff(s);
                if d < self.bands.len() {
                    g[r * m + s] = self.bands[d][c];
                }
            }
        }
        g
    }

    /// R = G⁻¹ through a banded Cholesky factorization per polyphase index.
    pub fn invert(&self) -> Result<InverseFilterMatrix> {
        let m = self.m;
        let bw = self.bands.len().saturating_sub(1);
        let per_c: Vec<Result<(Vec<f64>, f64)>> = (0..self.n)
            .into_par_iter()
            .map(|c| {
                let g = self.polyphase(c);
                let inv = banded_spd_inverse(&g, m, bw)
                    .ok_or(Error::IllConditioned { index: c, condition: f64::INFINITY })?;
                let cond = norm1(&g, m) * norm1(&inv, m);
                if !cond.is_finite() || cond > MAX_CONDITION {
                    return Err(Error::IllConditioned { index: c, condition: cond });
                }
                Ok((inv, cond))
            })
            .collect();
        let mut values = Vec::with_capacity(self.n * m * m);
        let mut condition = Vec::with_capacity(self.n);
        for r in per_c {
            let (inv, cond) = r?;
            values.extend(inv);
            condition.push(cond);
        }
        Ok(InverseFilterMatrix {
            n: self.n,
            m,
            eta: 0.0,
            kept: vec![true; self.n],
            values,
            condition,
        })
    }
}

fn norm1(a: &[f64], m: usize) -> f64 {
    (0..m)
        .map(|j| (0..m).map(|i| a[i * m + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a symmetric positive definite matrix with half-bandwidth `bw`.
fn banded_spd_inverse(a: &[f64], m: usize, bw: usize) -> Option<Vec<f64>> {
    let scale = (0..m).map(|i| a[i * m + i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut l = vec![0.0; m * m];
    for j in 0..m {
        let lo = j.saturating_sub(bw);
        let mut d = a[j * m + j];
        for k in lo..j {
            d -= l[j * m + k] * l[j * m + k];
        }
        if d.is_nan() || d <= scale * 1e-14 {
            return None;
        }
        let d = d.sqrt();
        l[j * m + j] = d;
        for i in j + 1..(j + bw + 1).min(m) {
            let lo_i = i.saturating_sub(bw);
            let mut s = a[i * m + j];
            for k in lo_i.max(lo)..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            l[i * m + j] = s / d;
        }
    }
    let mut inv = vec![0.0; m * m];
    let mut y = vec![0.0; m];
    for col in 0..m {
        // L y = e_col
        for i in 0..m {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in i.saturating_sub(bw)..i {
                s -= l[i * m + k] * y[k];
            }
            y[i] = s / l[i * m + i];
        }
        // Lᵀ x = y
        for i in (0..m).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(m) {
                s -= l[k * m + i] * inv[k * m + col];
            }
            inv[i * m + col] = s / l[i * m + i];
        }
    }
    Some(inv)
}

/// Off-diagonal retention mask for a given η.
///
/// The middle region [N/4, 3N/4) loses ⌈ηN/2⌉ entries from its outer edges
/// inward; the centered remainder is kept. Outside the region nothing is
/// dropped. `true` means the off-diagonal entries at that index are kept.
pub fn eta_mask(eta: f64, n: usize) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::EtaOutOfRange(eta));
    }
    let half = n / 2;
    let zeroed = ((eta * n as f64 / 2.0) - 1e-9).ceil().max(0.0) as usize;
    let keep = half - zeroed.min(half);
    let lo = half - keep.div_ceil(2);
    let hi = half + keep / 2;
    Ok((0..n)
        .map(|c| !(n / 4..n / 4 + half).contains(&c) || (lo..hi).contains(&c))
        .collect())
}

/// R = G⁻¹ (optionally sparsified), stored as N row-major M×M matrices R_c.
#[derive(Debug, Clone)]
pub struct InverseFilterMatrix {
    n: usize,
    m: usize,
    eta: f64,
    kept: Vec<bool>,
    values: Vec<f64>,
    condition: Vec<f64>,
}

impl InverseFilterMatrix {
    pub fn subcarriers(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> usize {
        self.m
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Off-diagonal retention mask (all true for the exact inverse).
    pub fn mask(&self) -> &[bool] {
        &self.kept
    }

    /// Number of polyphase indices whose off-diagonal entries were dropped.
    pub fn zeroed_count(&self) -> usize {
        self.kept.iter().filter(|k| !**k).count()
    }

    /// 1-norm condition number of G_c per polyphase index.
    pub fn condition(&self) -> &[f64] {
        &self.condition
    }

    /// R_c as a row-major M×M slice.
    pub fn polyphase(&self, c: usize) -> &[f64] {
        let mm = self.m * self.m;
        &self.values[c * mm..(c + 1) * mm]
    }

    /// Diagonal of block (m, i) as an N-vector.
    pub fn block(&self, m: usize, i: usize) -> Vec<f64> {
        (0..self.n).map(|c| self.polyphase(c)[m * self.m + i]).collect()
    }

    /// Copy with the middle off-diagonal entries dropped according to η.
    pub fn sparsify(&self, eta: f64) -> Result<Self> {
        let mask = eta_mask(eta, self.n)?;
        let m = self.m;
        let mut out = self.clone();
        out.eta = eta;
        for (c, keep) in mask.iter().enumerate() {
            if !keep || !self.kept[c] {
                let r = &mut out.values[c * m * m..(c + 1) * m * m];
                for a in 0..m {
                    for b in 0..m {
                        if a != b {
                            r[a * m + b] = 0.0;
                        }
                    }
                }
            }
        }
        out.kept = mask.iter().zip(&self.kept).map(|(a, b)| *a && *b).collect();
        Ok(out)
    }

    /// v = R x.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_counted(x, &mut OpCount::default())
    }

    pub fn apply_counted(&self, x: &[Complex64], count: &mut OpCount) -> Result<Vec<Complex64>> {
        check_len(self.n * self.m, x.len())?;
        let (n, m) = (self.n, self.m);
        let mut out = vec![Complex64::default(); n * m];
        for c in 0..n {
            let r = self.polyphase(c);
            if self.kept[c] {
                for a in 0..m {
                    let row = &r[a * m..(a + 1) * m];
                    let mut acc = Complex64::default();
                    for (i, v) in row.iter().enumerate() {
                        acc += x[i * n + c] * v;
                    }
                    out[a * n + c] = acc;
                }
                count.real_mults += 2 * (m * m) as u64;
            } else {
                for a in 0..m {
                    out[a * n + c] = x[a * n + c] * r[a * m + a];
                }
                count.real_mults += 2 * m as u64;
            }
        }
        Ok(out)
    }

    /// Fraction of off-diagonal energy of the exact inverse that a mask drops.
    pub fn dropped_energy_fraction(&self, eta: f64) -> Result<f64> {
        let mask = eta_mask(eta, self.n)?;
        let m = self.m;
        let mut dropped = 0.0;
        let mut total = 0.0;
        for c in 0..self.n {
            let r = self.polyphase(c);
            for a in 0..m {
                for b in 0..m {
                    if a != b {
                        let e = r[a * m + b].powi(2);
                        total += e;
                        if !mask[c] {
                            dropped += e;
                        }
                    }
                }
            }
        }
        Ok(if total == 0.0 { 0.0 } else { dropped / total })
    }

    /// Largest dropped |R_{m,i}[c]| relative to the peak of the main-diagonal
    /// block R_{m,m} in the same block row.
    pub fn max_dropped_ratio(&self, eta: f64) -> Result<f64> {
        let mask = eta_mask(eta, self.n)?;
        let m = self.m;
        let mut worst = 0.0f64;
        for a in 0..m {
            let peak = self.block(a, a).iter().fold(0.0f64, |p, v| p.max(v.abs()));
            for b in (0..m).filter(|b| *b != a) {
                for (c, keep) in mask.iter().enumerate() {
                    if !keep {
                        worst = worst.max(self.polyphase(c)[a * m + b].abs() / peak);
                    }
                }
            }
        }
        Ok(worst)
    }
}
