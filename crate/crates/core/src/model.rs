//! Relay network model: parameters, channels, SNR, and the exact quartic
//! outage polynomial `Q(W, x, y)`.
//!
//! Sign convention: `Q >= 0` is the outage event (SNR at or below the
//! threshold). `a0(W) = -Q(W, 0, 0)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bernstein;
use crate::error::{check_len, Error, Result};
use crate::linalg::{conj_vec, cre, hadamard, outer, CMat, HermitianMatrix};
use crate::rng::{streams, GaussianSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Transmit power `P_t` (linear).
    pub pt: f64,
    /// SNR threshold `gamma` (linear).
    pub gamma: f64,
    /// Target outage rate.
    pub rho: f64,
    /// Receiver noise variance.
    pub sigma_v2: f64,
    /// Per-relay noise variances; its length is the relay count `L`.
    pub sigma2: Vec<f64>,
}

impl SystemParams {
    pub fn new(pt: f64, gamma: f64, rho: f64, sigma_v2: f64, sigma2: Vec<f64>) -> Result<Self> {
        let p = Self {
            pt,
            gamma,
            rho,
            sigma_v2,
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Equal relay noise `sigma_relay2` on all `relays`.
    pub fn uniform(
        relays: usize,
        pt: f64,
        gamma: f64,
        rho: f64,
        sigma_v2: f64,
        sigma_relay2: f64,
    ) -> Result<Self> {
        Self::new(pt, gamma, rho, sigma_v2, vec![sigma_relay2; relays])
    }

    pub fn relays(&self) -> usize {
        self.sigma2.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.sigma2.is_empty() {
            return bad("sigma2", "at least one relay required");
        }
        if !(self.pt > 0.0) {
            return bad("pt", "must be > 0");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma", "must be > 0");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::RhoOutOfRange(self.rho));
        }
        if !(self.sigma_v2 > 0.0) {
            return bad("sigma_v2", "must be > 0");
        }
        if self.sigma2.iter().any(|&s| !(s > 0.0)) {
            return bad("sigma2", "all relay noise variances must be > 0");
        }
        Ok(())
    }

    /// `P_t / gamma`.
    pub fn pt_over_gamma(&self) -> f64 {
        self.pt / self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }
}

/// Estimated channels plus the error scales (`df = eps * x`, `dg = eta * y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub f_bar: Vec<Complex64>,
    pub g_bar: Vec<Complex64>,
    pub eps: f64,
    pub eta: f64,
}

impl ChannelScenario {
    pub fn new(f_bar: Vec<Complex64>, g_bar: Vec<Complex64>, eps: f64, eta: f64) -> Result<Self> {
        check_len("g_bar length", f_bar.len(), g_bar.len())?;
        if !(eps >= 0.0 && eta >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "eps/eta",
                reason: "error scales must be >= 0".into(),
            });
        }
        Ok(Self {
            f_bar,
            g_bar,
            eps,
            eta,
        })
    }

    pub fn relays(&self) -> usize {
        self.f_bar.len()
    }

    pub fn with_errors(&self, eps: f64, eta: f64) -> Self {
        Self {
            eps,
            eta,
            ..self.clone()
        }
    }

    /// FNV-1a hash of the scenario's bit patterns, for run metadata.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let vals = self
            .f_bar
            .iter()
            .chain(&self.g_bar)
            .flat_map(|z| [z.re, z.im])
            .chain([self.eps, self.eta]);
        for v in vals {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    pub fn check(&self, params: &SystemParams) -> Result<()> {
        check_len("f_bar length", params.relays(), self.f_bar.len())?;
        check_len("g_bar length", params.relays(), self.g_bar.len())
    }
}

/// Standardized channel errors `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl Perturbation {
    pub fn zero(l: usize) -> Self {
        Self {
            x: vec![Complex64::new(0.0, 0.0); l],
            y: vec![Complex64::new(0.0, 0.0); l],
        }
    }

    pub fn sample(l: usize, src: &mut GaussianSource) -> Self {
        let x = src.complex_normal_vec(l);
        let y = src.complex_normal_vec(l);
        Self { x, y }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            x: self.x.iter().map(|z| z * t).collect(),
            y: self.y.iter().map(|z| z * t).collect(),
        }
    }
}

/// Draws `f_bar, g_bar ~ CN(0, I)` from stream [`streams::CHANNEL`] of `seed`.
pub fn sample_channel(params: &SystemParams, seed: u64, eps: f64, eta: f64) -> ChannelScenario {
    let mut src = GaussianSource::new(seed, streams::CHANNEL);
    let l = params.relays();
    let f_bar = src.complex_normal_vec(l);
    let g_bar = src.complex_normal_vec(l);
    ChannelScenario {
        f_bar,
        g_bar,
        eps,
        eta,
    }
}

/// `(f_bar + eps x, g_bar + eta y)`.
pub fn realized_channels(
    sc: &ChannelScenario,
    p: &Perturbation,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_len("perturbation x", sc.relays(), p.x.len())?;
    check_len("perturbation y", sc.relays(), p.y.len())?;
    let f = sc
        .f_bar
        .iter()
        .zip(&p.x)
        .map(|(fb, x)| fb + x * sc.eps)
        .collect();
    let g = sc
        .g_bar
        .iter()
        .zip(&p.y)
        .map(|(gb, y)| gb + y * sc.eta)
        .collect();
    Ok((f, g))
}

/// Receiver SNR of AF weights `w` over realized channels `(f, g)`.
pub fn snr(
    w: &[Complex64],
    f: &[Complex64],
    g: &[Complex64],
    params: &SystemParams,
) -> Result<f64> {
    let l = params.relays();
    check_len("w", l, w.len())?;
    check_len("f", l, f.len())?;
    check_len("g", l, g.len())?;
    // (f .* conj(g))^H w
    let mut proj = Complex64::new(0.0, 0.0);
    let mut noise = params.sigma_v2;
    for i in 0..l {
        proj += (f[i] * g[i].conj()).conj() * w[i];
        noise += w[i].norm_sqr() * g[i].norm_sqr() * params.sigma2[i];
    }
    Ok(params.pt * proj.norm_sqr() / noise)
}

/// `Sigma .* (g g^H) - (P_t/gamma) (f f^H) .* (conj(g) conj(g)^H)` for the given channels.
pub fn q_kernel(f: &[Complex64], g: &[Complex64], params: &SystemParams) -> HermitianMatrix {
    let l = f.len();
    let gc = conj_vec(g);
    let ff = outer(f, f);
    let gg = outer(&gc, &gc);
    let mut k = hadamard(&ff, &gg) * cre(-params.pt_over_gamma());
    for i in 0..l {
        k[(i, i)] += cre(params.sigma2[i] * g[i].norm_sqr());
    }
    HermitianMatrix::new(k).expect("square by construction")
}

/// Exact outage polynomial `Q(W, x, y) = sigma_v^2 + W . kernel(f, g)`.
pub fn exact_q(
    w: &HermitianMatrix,
    p: &Perturbation,
    sc: &ChannelScenario,
    params: &SystemParams,
) -> Result<f64> {
    sc.check(params)?;
    check_len("W", params.relays(), w.dim())?;
    let (f, g) = realized_channels(sc, p)?;
    Ok(params.sigma_v2 + w.dot(&q_kernel(&f, &g, params)))
}

/// Constant (estimated-channel) part: `a0(W) = -Q(W, 0, 0)`.
pub fn a0(w: &HermitianMatrix, sc: &ChannelScenario, params: &SystemParams) -> Result<f64> {
    sc.check(params)?;
    check_len("W", params.relays(), w.dim())?;
    Ok(-params.sigma_v2 - w.dot(&q_kernel(&sc.f_bar, &sc.g_bar, params)))
}

/// `E[D] = P_t Diag(|f_bar|^2 + eps^2) + Sigma`; the design objective is `E[D] . W`.
pub fn avg_power_matrix(sc: &ChannelScenario, params: &SystemParams) -> HermitianMatrix {
    let d: Vec<f64> = sc
        .f_bar
        .iter()
        .zip(&params.sigma2)
        .map(|(f, s2)| params.pt * (f.norm_sqr() + sc.eps * sc.eps) + s2)
        .collect();
    HermitianMatrix::from_real_diagonal(&d)
}

/// Which polynomial decides an outage event during Monte-Carlo validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Full quartic `Q`.
    Exact,
    /// Degree-2 truncation of `Q` in the perturbation.
    Quadratic,
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalMode::Exact => "exact",
            EvalMode::Quadratic => "quadratic",
        })
    }
}

/// Fast evaluator of `Q(W, x, y)` using
/// `W . ((f f^H) .* (g* g*^H)) = h^H W h` with `h = f .* conj(g)`.
pub(crate) struct ExactQ<'a> {
    w: &'a CMat,
    sc: &'a ChannelScenario,
    params: &'a SystemParams,
}

impl<'a> ExactQ<'a> {
    pub(crate) fn new(
        w: &'a HermitianMatrix,
        sc: &'a ChannelScenario,
        params: &'a SystemParams,
    ) -> Self {
        Self {
            w: w.as_matrix(),
            sc,
            params,
        }
    }

    pub(crate) fn eval(&self, p: &Perturbation) -> f64 {
        let l = self.sc.relays();
        let mut h = Vec::with_capacity(l);
        let mut lin = 0.0;
        for i in 0..l {
            let f = self.sc.f_bar[i] + p.x[i] * self.sc.eps;
            let g = self.sc.g_bar[i] + p.y[i] * self.sc.eta;
            h.push(f * g.conj());
            lin += self.params.sigma2[i] * g.norm_sqr() * self.w[(i, i)].re;
        }
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..l {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..l {
                row += self.w[(i, j)] * h[j];
            }
            quad += h[i].conj() * row;
        }
        self.params.sigma_v2 + lin - self.params.pt_over_gamma() * quad.re
    }
}

/// Fraction of `n_samples` seeded perturbations that cause an outage for
/// design `w`. Perturbations come from stream [`streams::PERTURBATION`].
pub fn outage_estimate(
    w: &HermitianMatrix,
    sc: &ChannelScenario,
    params: &SystemParams,
    n_samples: usize,
    seed: u64,
    mode: EvalMode,
) -> Result<f64> {
    sc.check(params)?;
    check_len("W", params.relays(), w.dim())?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            reason: "must be >= 1".into(),
        });
    }
    let l = params.relays();
    let mut src = GaussianSource::new(seed, streams::PERTURBATION);
    let mut violations = 0usize;
    match mode {
        EvalMode::Exact => {
            let q = ExactQ::new(w, sc, params);
            for _ in 0..n_samples {
                let p = Perturbation::sample(l, &mut src);
                if q.eval(&p) >= 0.0 {
                    violations += 1;
                }
            }
        }
        EvalMode::Quadratic => {
            let form = bernstein::decompose(w, sc, params)?;
            for _ in 0..n_samples {
                let p = Perturbation::sample(l, &mut src);
                let xi = bernstein::xi_from_pert(&p);
                // The quadratic form is the satisfaction margin, i.e. -Q_quad.
                if form.eval(&xi) <= 0.0 {
                    violations += 1;
                }
            }
        }
    }
    Ok(violations as f64 / n_samples as f64)
}

/// Same as [`outage_estimate`] for a rank-one design `w w^H`.
pub fn outage_estimate_vec(
    w: &[Complex64],
    sc: &ChannelScenario,
    params: &SystemParams,
    n_samples: usize,
    seed: u64,
    mode: EvalMode,
) -> Result<f64> {
    outage_estimate(
        &HermitianMatrix::outer(w),
        sc,
        params,
        n_samples,
        seed,
        mode,
    )
}
