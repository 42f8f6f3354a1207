//! Closed-form interference and MSE predictions, the noise enhancement
//! factor ζ, and multiplication counts.
//!
//! The receiver front end (Pᴴ, optionally followed by R) acts on every
//! polyphase index c through a real M×(M+K−1) matrix B_c, and the combined
//! filter chain through V_c = B_c P_c. All second-order statistics below are
//! evaluated from these small matrices.

use std::fmt;

use num_complex::Complex64;

use crate::channel::{ChannelRealization, PowerDelayProfile};
use crate::dft::Dft;
use crate::error::{check_len, Result};
use crate::matrix::{AutocorrMatrix, BandedFilterMatrix, InverseFilterMatrix, OpCount};
use crate::prototype::PrototypeFilter;
use crate::system::ReceiverMode;
use crate::transceiver::Equalizer;

/// |E C d̂ − 1| below this is treated as an exact unit gain.
const RESD_FLOOR: f64 = 1e-12;

/// Interference coefficients of reference symbol m.
///
/// Q_{m,i} = F V_{m,i} Fᴴ is circulant because V_{m,i} is diagonal, so it
/// is fully described by its first column d̂_{m,i}[q] = Q_{m,i}[q, 0].
#[derive(Debug, Clone)]
pub struct InterferenceCoeffs {
    pub reference: usize,
    /// d̂_{m,i} for every i, each of length N.
    pub d_hat: Vec<Vec<Complex64>>,
    /// α_ICI,n for every n (constant across n).
    pub alpha_ici: Vec<f64>,
    /// α_ISI,n for every n (constant across n).
    pub alpha_isi: Vec<f64>,
}

impl InterferenceCoeffs {
    /// Q_{m,i}[n, k].
    pub fn q(&self, i: usize, n: usize, k: usize) -> Complex64 {
        let len = self.d_hat[i].len();
        self.d_hat[i][(n + len - k) % len]
    }
}

/// Receiver-side model of one mode (NIF or IF) for a given filter.
#[derive(Debug, Clone)]
pub struct Analyzer {
    n: usize,
    m: usize,
    k: usize,
    mode: ReceiverMode,
    p: BandedFilterMatrix,
    /// B_c, row-major M×(M+K−1), for every c.
    b: Vec<Vec<f64>>,
    /// d̂_{m,i}, indexed [m][i].
    d_hat: Vec<Vec<Vec<Complex64>>>,
    /// mean_c (B_c B_cᵀ)[m,m].
    noise_gain: Vec<f64>,
    /// IF with the unmasked inverse: V = I analytically.
    exact_inverse: bool,
}

impl Analyzer {
    /// NIF model when `r` is `None`, IF model with the given (exact or
    /// sparsified) inverse otherwise.
    pub fn new(p: &BandedFilterMatrix, r: Option<&InverseFilterMatrix>) -> Result<Self> {
        let (n, m, k) = (p.subcarriers(), p.symbols(), p.overlap());
        let rows = m + k - 1;
        if let Some(r) = r {
            check_len(n, r.subcarriers())?;
            check_len(m, r.symbols())?;
        }
        let mut b = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for c in 0..n {
            let pc = p.polyphase(c);
            let mut bc = vec![0.0; m * rows];
            for a in 0..m {
                for row in 0..rows {
                    bc[a * rows + row] = match r {
                        None => pc[row * m + a],
                        Some(r) => {
                            let rc = r.polyphase(c);
                            (0..m).map(|i| rc[a * m + i] * pc[row * m + i]).sum()
                        }
                    };
                }
            }
            let mut vc = vec![0.0; m * m];
            for a in 0..m {
                for i in 0..m {
                    vc[a * m + i] = (0..rows).map(|row| bc[a * rows + row] * pc[row * m + i]).sum();
                }
            }
            b.push(bc);
            v.push(vc);
        }
        let dft = Dft::new(n);
        let scale = 1.0 / (n as f64).sqrt();
        let d_hat = (0..m)
            .map(|a| {
                (0..m)
                    .map(|i| {
                        let mut buf: Vec<Complex64> =
                            (0..n).map(|c| Complex64::new(v[c][a * m + i], 0.0)).collect();
                        dft.forward_inplace(&mut buf);
                        buf.iter_mut().for_each(|x| *x *= scale);
                        buf
                    })
                    .collect()
            })
            .collect();
        // NIF: mean_c G_c[m,m] = Σw²/N = 1 exactly by normalization.
        let noise_gain = (0..m)
            .map(|a| {
                if r.is_none() {
                    return 1.0;
                }
                (0..n)
                    .map(|c| b[c][a * rows..(a + 1) * rows].iter().map(|x| x * x).sum::<f64>())
                    .sum::<f64>()
                    / n as f64
            })
            .collect();
        Ok(Self {
            n,
            m,
            k,
            mode: if r.is_some() { ReceiverMode::If } else { ReceiverMode::Nif },
            p: p.clone(),
            b,
            d_hat,
            noise_gain,
            exact_inverse: r.is_some_and(|r| r.zeroed_count() == 0),
        })
    }

    pub fn mode(&self) -> ReceiverMode {
        self.mode
    }

    /// Noise power gain per symbol index: ζ_m in IF mode, 1 in NIF mode.
    pub fn noise_gain(&self) -> &[f64] {
        &self.noise_gain
    }

    pub fn interference_coeffs(&self, m: usize) -> InterferenceCoeffs {
        let d_hat = self.d_hat[m].clone();
        let ici: f64 = d_hat[m]
            .iter()
            .enumerate()
            .map(|(q, v)| (v - if q == 0 { 1.0 } else { 0.0 }).norm_sqr())
            .sum();
        let isi: f64 = d_hat
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != m)
            .map(|(_, d)| d.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum();
        InterferenceCoeffs {
            reference: m,
            d_hat,
            alpha_ici: vec![ici; self.n],
            alpha_isi: vec![isi; self.n],
        }
    }

    fn rows(&self) -> usize {
        self.m + self.k - 1
    }

    /// B_{c'} D_{l,c} (M×M) together with c'.
    fn displaced_front(&self, l: usize, c: usize) -> (usize, Vec<f64>) {
        let (m, rows) = (self.m, self.rows());
        let (c_out, d) = self.p.displacement(l, c);
        let bc = &self.b[c_out];
        let mut out = vec![0.0; m * m];
        for a in 0..m {
            for i in 0..m {
                out[a * m + i] = (0..rows).map(|r| bc[a * rows + r] * d[r * m + i]).sum();
            }
        }
        (c_out, out)
    }

    /// (1/N)‖(B D_l)_m‖²_F for every m.
    fn fd_gain(&self, l: usize) -> Vec<f64> {
        let m = self.m;
        let mut acc = vec![0.0; m];
        for c in 0..self.n {
            let (_, bd) = self.displaced_front(l, c);
            for (a, slot) in acc.iter_mut().enumerate() {
                *slot += bd[a * m..(a + 1) * m].iter().map(|x| x * x).sum::<f64>();
            }
        }
        acc.iter().map(|v| v / self.n as f64).collect()
    }

    /// B_k[m, 0] for the first `count` polyphase indices.
    fn first_row_gain(&self, m: usize, count: usize) -> Vec<f64> {
        (0..count.min(self.n)).map(|k| self.b[k][m * self.rows()]).collect()
    }

    /// Shared part of both closed forms: resd, ICI, ISI and noise given C.
    fn base(&self, channel: &ChannelRealization, eq: &Equalizer, noise_var: f64, symbol_power: f64) -> Result<MseBreakdown> {
        let (n, m) = (self.n, self.m);
        check_len(n, channel.freq.len())?;
        check_len(n, eq.coeffs.len())?;
        let c2: Vec<f64> = channel.freq.iter().map(|c| c.norm_sqr()).collect();
        let e2: Vec<f64> = eq.coeffs.iter().map(|e| e.norm_sqr()).collect();
        let mut out = MseBreakdown::zeros(n, m, self.mode);
        out.symbol_power = symbol_power;
        for a in 0..m {
            let d = &self.d_hat[a];
            for nn in 0..n {
                let idx = a * n + nn;
                let gain = eq.coeffs[nn] * channel.freq[nn] * d[a][0];
                // A unit gain (ZF with a full-rank filter bank) only misses 1 by round-off.
                let dev = (gain - 1.0).norm();
                out.resd[idx] = if dev < RESD_FLOOR { 0.0 } else { symbol_power * dev * dev };
                let mut ici = 0.0;
                let mut isi = 0.0;
                for k in 0..n {
                    let q = (nn + n - k) % n;
                    if k != nn {
                        ici += d[a][q].norm_sqr() * c2[k];
                    }
                    for (i, di) in d.iter().enumerate() {
                        if i != a {
                            isi += di[q].norm_sqr() * c2[k];
                        }
                    }
                }
                if !self.exact_inverse {
                    out.ici[idx] = symbol_power * e2[nn] * ici;
                    out.isi[idx] = symbol_power * e2[nn] * isi;
                }
                out.noise[idx] = noise_var * e2[nn] * self.noise_gain[a];
                out.zeta[idx] = self.noise_gain[a];
            }
        }
        Ok(out)
    }

    fn paper_terms(&self, out: &mut MseBreakdown, pdp: &PowerDelayProfile, eq: &Equalizer, symbol_power: f64, guard: bool) -> Result<()> {
        let taps = pdp.len();
        let summaries = self.p.displaced_summaries(taps.saturating_sub(1))?;
        let mut fd = 0.0;
        let mut ibi_trace = 0.0;
        let mut ibi_approx = 0.0;
        for (s, rho2) in summaries.iter().zip(pdp.powers()) {
            fd += rho2 * s.t_down;
            ibi_trace += rho2 * s.tail_trace;
            ibi_approx += rho2 * s.p_corr;
        }
        out.alpha_fd_trace = symbol_power * fd;
        out.alpha_ibi_trace = if guard { 0.0 } else { symbol_power * ibi_trace };
        out.alpha_ibi_approx = if guard { 0.0 } else { symbol_power * ibi_approx };
        let n = self.n;
        for a in 0..self.m {
            for nn in 0..n {
                let idx = a * n + nn;
                let g = eq.coeffs[nn].norm_sqr() * self.noise_gain[a];
                out.fd_trace[idx] = out.alpha_fd_trace * g;
                out.ibi_trace[idx] = out.alpha_ibi_trace * g;
                out.ibi_approx[idx] = out.alpha_ibi_approx * g;
            }
        }
        Ok(())
    }

    /// Breakdown with filter distortion and IBI averaged over the fading
    /// (PDP powers only); resd, ICI, ISI and noise are exact for `channel`.
    pub fn mse_closed_form(
        &self,
        channel: &ChannelRealization,
        pdp: &PowerDelayProfile,
        eq: &Equalizer,
        noise_var: f64,
        symbol_power: f64,
        guard: bool,
    ) -> Result<MseBreakdown> {
        let mut out = self.base(channel, eq, noise_var, symbol_power)?;
        let (n, m) = (self.n, self.m);
        let rho2 = pdp.powers();
        let mut fd_gain = vec![0.0; m];
        for (l, r) in rho2.iter().enumerate().skip(1) {
            for (slot, g) in fd_gain.iter_mut().zip(self.fd_gain(l)) {
                *slot += r * g;
            }
        }
        let taps = rho2.len();
        let w = self.p.taps();
        let kn = w.len();
        for a in 0..m {
            let mut ibi_gain = 0.0;
            if !guard {
                let first = self.first_row_gain(a, taps.saturating_sub(1));
                for (k, bk) in first.iter().enumerate() {
                    for j in 1..taps - k {
                        ibi_gain += bk * bk * rho2[k + j] * w[kn - j].powi(2);
                    }
                }
                ibi_gain /= n as f64;
            }
            for nn in 0..n {
                let idx = a * n + nn;
                let e2 = eq.coeffs[nn].norm_sqr();
                out.fd[idx] = symbol_power * e2 * fd_gain[a];
                out.ibi[idx] = symbol_power * e2 * ibi_gain;
            }
        }
        self.paper_terms(&mut out, pdp, eq, symbol_power, guard)?;
        out.finish();
        Ok(out)
    }

    /// Breakdown conditioned on the channel taps: every component is the
    /// exact expected error power over data and noise for this realization.
    pub fn mse_conditional(
        &self,
        channel: &ChannelRealization,
        pdp: &PowerDelayProfile,
        eq: &Equalizer,
        noise_var: f64,
        symbol_power: f64,
        guard: bool,
    ) -> Result<MseBreakdown> {
        let mut out = self.base(channel, eq, noise_var, symbol_power)?;
        let (n, m) = (self.n, self.m);
        let h = &channel.taps;
        let dft = Dft::new(n);

        // Filter distortion: columns (i, c) of Σ_l h_l (B D_l)_m.
        let mut cols = vec![Complex64::default(); m * m * n * n];
        for (l, hl) in h.iter().enumerate().skip(1) {
            for c in 0..n {
                let (c_out, bd) = self.displaced_front(l, c);
                for a in 0..m {
                    for i in 0..m {
                        cols[((a * m + i) * n + c) * n + c_out] += hl * bd[a * m + i];
                    }
                }
            }
        }
        let mut fd = vec![0.0; m * n];
        for a in 0..m {
            for col in cols[a * m * n * n..(a + 1) * m * n * n].chunks_mut(n) {
                dft.forward_inplace(col);
                for (slot, v) in fd[a * n..(a + 1) * n].iter_mut().zip(col.iter()) {
                    *slot += v.norm_sqr();
                }
            }
        }

        // IBI: previous block's last samples through the first row blocks.
        let mut ibi = vec![0.0; m * n];
        let taps = h.len();
        if !guard && taps > 1 {
            let w = self.p.taps();
            let kn = w.len();
            for a in 0..m {
                let first = self.first_row_gain(a, taps - 1);
                for j in 1..taps {
                    let mut u = vec![Complex64::default(); n];
                    for (k, bk) in first.iter().enumerate() {
                        if k + j < taps {
                            u[k] = h[k + j] * bk * w[kn - j];
                        }
                    }
                    dft.forward_inplace(&mut u);
                    for (slot, v) in ibi[a * n..(a + 1) * n].iter_mut().zip(&u) {
                        *slot += v.norm_sqr();
                    }
                }
            }
        }

        for a in 0..m {
            for nn in 0..n {
                let idx = a * n + nn;
                let e2 = eq.coeffs[nn].norm_sqr();
                out.fd[idx] = symbol_power * e2 * fd[idx];
                out.ibi[idx] = symbol_power * e2 * ibi[idx];
            }
        }
        self.paper_terms(&mut out, pdp, eq, symbol_power, guard)?;
        out.finish();
        Ok(out)
    }
}

/// Interference coefficients of the plain matched-filter receiver.
pub fn compute_interference_coeffs(p: &BandedFilterMatrix, m: usize) -> Result<InterferenceCoeffs> {
    Ok(Analyzer::new(p, None)?.interference_coeffs(m))
}

/// ζ_{m,n} = [F R_m PᴴP R_mᴴ Fᴴ]_{n,n} for every n.
pub fn compute_zeta(r: &InverseFilterMatrix, g: &AutocorrMatrix, m: usize) -> Vec<f64> {
    let big_m = r.symbols();
    let n = r.subcarriers();
    let mean = (0..n)
        .map(|c| {
            let rc = r.polyphase(c);
            let gc = g.polyphase(c);
            let row = &rc[m * big_m..(m + 1) * big_m];
            (0..big_m)
                .map(|i| {
                    let gi: f64 = (0..big_m).map(|j| gc[i * big_m + j] * row[j]).sum();
                    row[i] * gi
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        / n as f64;
    vec![mean; n]
}

/// MSE breakdown component names, in emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Resd,
    Ici,
    Isi,
    Fd,
    Ibi,
    Noise,
    Total,
    Sinr,
    Zeta,
    FdTrace,
    IbiTrace,
    IbiApprox,
}

impl Component {
    pub const ALL: [Component; 12] = [
        Component::Resd,
        Component::Ici,
        Component::Isi,
        Component::Fd,
        Component::Ibi,
        Component::Noise,
        Component::Total,
        Component::Sinr,
        Component::Zeta,
        Component::FdTrace,
        Component::IbiTrace,
        Component::IbiApprox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Resd => "resd",
            Component::Ici => "ici",
            Component::Isi => "isi",
            Component::Fd => "fd",
            Component::Ibi => "ibi",
            Component::Noise => "noise",
            Component::Total => "total",
            Component::Sinr => "sinr",
            Component::Zeta => "zeta",
            Component::FdTrace => "fd_trace",
            Component::IbiTrace => "ibi_trace",
            Component::IbiApprox => "ibi_approx",
        }
    }

    /// Whether the component belongs to the term set of a receiver mode.
    pub fn applies_to(self, mode: ReceiverMode) -> bool {
        !(mode == ReceiverMode::If && matches!(self, Component::Ici | Component::Isi))
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-(m, n) MSE contributions in linear power, indexed `m·N + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseBreakdown {
    pub subcarriers: usize,
    pub symbols: usize,
    pub mode: ReceiverMode,
    pub resd: Vec<f64>,
    pub ici: Vec<f64>,
    pub isi: Vec<f64>,
    pub fd: Vec<f64>,
    pub ibi: Vec<f64>,
    pub noise: Vec<f64>,
    pub zeta: Vec<f64>,
    pub total: Vec<f64>,
    pub sinr: Vec<f64>,
    /// α_fd·|E_n|²·ζ with α_fd = δ² Σ ρ_l² T↓l.
    pub fd_trace: Vec<f64>,
    /// α_IBI·|E_n|²·ζ from the exact tail trace.
    pub ibi_trace: Vec<f64>,
    /// α_IBI·|E_n|²·ζ from the truncated-energy approximation.
    pub ibi_approx: Vec<f64>,
    pub alpha_fd_trace: f64,
    pub alpha_ibi_trace: f64,
    pub alpha_ibi_approx: f64,
    symbol_power: f64,
}

impl MseBreakdown {
    fn zeros(n: usize, m: usize, mode: ReceiverMode) -> Self {
        let z = vec![0.0; n * m];
        Self {
            subcarriers: n,
            symbols: m,
            mode,
            resd: z.clone(),
            ici: z.clone(),
            isi: z.clone(),
            fd: z.clone(),
            ibi: z.clone(),
            noise: z.clone(),
            zeta: z.clone(),
            total: z.clone(),
            sinr: z.clone(),
            fd_trace: z.clone(),
            ibi_trace: z.clone(),
            ibi_approx: z,
            alpha_fd_trace: 0.0,
            alpha_ibi_trace: 0.0,
            alpha_ibi_approx: 0.0,
            symbol_power: 1.0,
        }
    }

    fn finish(&mut self) {
        for idx in 0..self.total.len() {
            self.total[idx] = self.resd[idx] + self.ici[idx] + self.isi[idx] + self.fd[idx] + self.ibi[idx] + self.noise[idx];
        }
        self.sinr = self.total.iter().map(|t| self.symbol_power / t).collect();
    }

    pub fn values(&self, c: Component) -> &[f64] {
        match c {
            Component::Resd => &self.resd,
            Component::Ici => &self.ici,
            Component::Isi => &self.isi,
            Component::Fd => &self.fd,
            Component::Ibi => &self.ibi,
            Component::Noise => &self.noise,
            Component::Total => &self.total,
            Component::Sinr => &self.sinr,
            Component::Zeta => &self.zeta,
            Component::FdTrace => &self.fd_trace,
            Component::IbiTrace => &self.ibi_trace,
            Component::IbiApprox => &self.ibi_approx,
        }
    }

    pub fn get(&self, c: Component, m: usize, n: usize) -> f64 {
        self.values(c)[m * self.subcarriers + n]
    }

    /// Mean over all (m, n) of one component.
    pub fn block_average(&self, c: Component) -> f64 {
        if c == Component::Sinr {
            return self.symbol_power / self.block_average(Component::Total);
        }
        let v = self.values(c);
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Closed-form multiplications per complex data symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub c_tx: u64,
    pub c_rx_nif: u64,
    pub c_r: f64,
    pub c_rx_if: f64,
    /// 2·(nonzeros of the masked R)/M, from the mask itself.
    pub c_r_mask: u64,
    /// Instrumented real multiplications of P·b for one block.
    pub measured_p_block: u64,
    /// Instrumented real multiplications of R·x divided by M.
    pub measured_r_symbol: f64,
    pub big_o: String,
}

/// C_Tx = N log₂N + (2K−3)N + 4, C_RxNIF = N log₂N + (2K+1)N + 4,
/// C_R = 2MN − ηN(M−1), C_RxIF = C_RxNIF + C_R.
pub fn complexity_report(n: usize, m: usize, k: usize, eta: f64) -> Result<ComplexityReport> {
    let proto = PrototypeFilter::design(k, n)?;
    let p = BandedFilterMatrix::new(&proto, m);
    let r = p.autocorrelation().invert()?.sparsify(eta)?;
    let log2n = n.trailing_zeros() as i64;
    let (ni, ki) = (n as i64, k as i64);
    // Non-negative for every N ≥ 1, K ≥ 1; signed only because 2K − 3 < 0 at K = 1.
    let c_tx = (ni * log2n + (2 * ki - 3) * ni + 4) as u64;
    let c_rx_nif = (ni * log2n + (2 * ki + 1) * ni + 4) as u64;
    let (n64, m64) = (n as u64, m as u64);
    let c_r = 2.0 * (m * n) as f64 - eta * n as f64 * (m as f64 - 1.0);
    let zeroed = r.zeroed_count() as u64;
    let c_r_mask = 2 * m64 * n64 - 2 * (m64 - 1) * zeroed;

    let zeros = vec![Complex64::default(); m * n];
    let mut pc = OpCount::default();
    p.apply_counted(&zeros, &mut pc)?;
    let mut rc = OpCount::default();
    r.apply_counted(&zeros, &mut rc)?;

    Ok(ComplexityReport {
        c_tx,
        c_rx_nif,
        c_r,
        c_rx_if: c_rx_nif as f64 + c_r,
        c_r_mask,
        measured_p_block: pc.real_mults,
        measured_r_symbol: rc.real_mults as f64 / m as f64,
        big_o: "O(N log N + K N + M N)".to_string(),
    })
}
