//! Closed-form Haar averages and the bounds built from them.
//!
//! Every quantity is a signed sum of powers of two; sums are formed in
//! log-space relative to the largest term with compensated accumulation, so
//! the formulas stay finite well past `N = 64`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INTEGRALITY_TOL: f64 = 1e-9;

/// `N = |Q|`, `γ = n_R / N` and `p = |S| / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    n: u32,
    gamma: f64,
    p: f64,
}

impl TheoryParams {
    /// Requires `0 < γ < 1`, `0 ≤ p ≤ 1` and integer `γN`, `pN`.
    pub fn new(n: u32, gamma: f64, p: f64) -> Result<Self> {
        let params = Self::relaxed(n, gamma, p)?;
        for (name, x) in [("gamma", gamma), ("p", p)] {
            let count = x * n as f64;
            if (count - count.round()).abs() > INTEGRALITY_TOL {
                return Err(Error::Parameter(format!("{name} * N = {count} is not an integer")));
            }
        }
        Ok(params)
    }

    /// From qubit counts `n_R` and `|S|`.
    pub fn from_counts(n: u32, n_r: u32, n_s: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("N must be positive".into()));
        }
        Self::new(n, n_r as f64 / n as f64, n_s as f64 / n as f64)
    }

    /// Skips the integrality check; the formulas are then evaluated at
    /// fractional exponents. Useful for asymptotic sequences.
    pub fn relaxed(n: u32, gamma: f64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("N must be positive".into()));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Parameter(format!("gamma = {gamma} outside (0, 1)")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
        }
        Ok(Self { n, gamma, p })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `log2 D_R`, `log2 D_S`, `log2 D_E`.
    pub fn log2_dims(&self) -> (f64, f64, f64) {
        let n = self.n as f64;
        (self.gamma * n, self.p * n, (1.0 - self.p) * n)
    }
}

/// Second Haar moments available in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    /// `E Tr ρ_S²`.
    PurityS,
    /// `E Tr ρ_RS²`.
    PurityRs,
    /// `E p(o)²` for a fixed outcome `o`.
    ProbSq,
    /// `E Tr ρ̃_R(o)²` with `ρ̃_R(o) = Tr_S[Π_o ρ_RS]` unnormalized.
    CondWeightSq,
}

impl MomentKind {
    pub const ALL: [MomentKind; 4] = [Self::PurityS, Self::PurityRs, Self::ProbSq, Self::CondWeightSq];

    pub fn name(self) -> &'static str {
        match self {
            Self::PurityS => "purity_S",
            Self::PurityRs => "purity_RS",
            Self::ProbSq => "prob_sq",
            Self::CondWeightSq => "cond_weight_sq",
        }
    }
}

/// A signed sum `Σ_i s_i 2^{e_i}` evaluated as `(sign, log2 |sum|)`.
fn signed_log2_sum(terms: &[(f64, f64)]) -> (f64, f64) {
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return (0.0, f64::NEG_INFINITY);
    }
    // Neumaier summation of the rescaled terms
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &(s, e) in terms {
        let x = s * (e - top).exp2();
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    let total = sum + comp;
    if total == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (total.signum(), top + total.abs().log2())
    }
}

/// `log2 (2^x - 1)` for `x ≥ 0`.
fn log2_pow2_minus_one(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    x + (-(-x).exp2()).ln_1p() / LN_2
}

/// `log2` of the common prefactor `2^{-2γN} / (2^{2N} - 1)`.
fn log2_prefactor(q: &TheoryParams) -> f64 {
    let n = q.n as f64;
    -2.0 * q.gamma * n - log2_pow2_minus_one(2.0 * n)
}

/// The four bracketed exponents (in units of `N`) of each closed form,
/// signs `+ + - -`.
fn closed_form_exponents(kind: MomentKind, gamma: f64, p: f64) -> [f64; 4] {
    let g = gamma;
    match kind {
        MomentKind::PurityS => [g + 1.0 + p, 2.0 * g + 2.0 - p, g + 1.0 - p, 2.0 * g + p],
        MomentKind::PurityRs => [2.0 * g + p + 1.0, g + 2.0 - p, g + p, 2.0 * g - p + 1.0],
        MomentKind::ProbSq => [g + 1.0 - p, 2.0 * g + 2.0 - 2.0 * p, g + 1.0 - 2.0 * p, 2.0 * g - p],
        MomentKind::CondWeightSq => [g + 2.0 - 2.0 * p, 2.0 * g + 1.0 - p, g - p, 2.0 * g + 1.0 - 2.0 * p],
    }
}

/// `log2` of a second moment from its closed form.
pub fn log2_moment_closed_form(kind: MomentKind, q: &TheoryParams) -> f64 {
    let n = q.n as f64;
    let e = closed_form_exponents(kind, q.gamma, q.p);
    let terms = [(1.0, e[0] * n), (1.0, e[1] * n), (-1.0, e[2] * n), (-1.0, e[3] * n)];
    log2_prefactor(q) + signed_log2_sum(&terms).1
}

/// Number of cycles of a permutation of two replicas.
fn cycles(swap: bool) -> f64 {
    if swap {
        1.0
    } else {
        2.0
    }
}

/// `log2` of a second moment from the generic sum over `σ, τ ∈ S_2` with
/// the Weingarten kernel `(δ_{σ,τ} - 2^{-N} δ_{gσ,τ}) / (2^{2N} - 1)`.
///
/// The environment contracts with `σ`; `R` contracts with `h_R τ` where the
/// swap `h_R` is present when `R` is kept in the second-moment observable;
/// `S` contracts with `gσ` for purities and contributes 1 for projectors.
pub fn log2_moment_kernel(kind: MomentKind, q: &TheoryParams) -> f64 {
    let (lr, ls, le) = q.log2_dims();
    let n = q.n as f64;
    let r_swapped = matches!(kind, MomentKind::PurityRs | MomentKind::CondWeightSq);
    let s_traced = matches!(kind, MomentKind::PurityS | MomentKind::PurityRs);
    let mut terms = Vec::with_capacity(4);
    for sigma in [false, true] {
        for tau in [false, true] {
            let weight = if sigma == tau { (1.0, 0.0) } else { (-1.0, -n) };
            let r = lr * cycles(tau ^ r_swapped);
            let s = if s_traced { ls * cycles(!sigma) } else { 0.0 };
            let e = le * cycles(sigma);
            terms.push((weight.0, weight.1 + r + s + e));
        }
    }
    log2_prefactor(q) + signed_log2_sum(&terms).1
}

/// `E Tr[X²]` for the requested kind.
pub fn replica2_moment(kind: MomentKind, q: &TheoryParams) -> f64 {
    log2_moment_closed_form(kind, q).exp2()
}

/// `E p(o)` for a fixed outcome, from the one-replica kernel: `2^{-pN}`.
pub fn first_moment_prob(q: &TheoryParams) -> f64 {
    let (lr, _, le) = q.log2_dims();
    // Wg(e) = 2^{-N}; R and E traced, S projected
    (-lr + lr + le - q.n as f64).exp2()
}

/// `Λ = -ln(E Tr ρ̃_R(o)² / E p(o)²)`.
pub fn lambda_value(q: &TheoryParams) -> f64 {
    LN_2 * (log2_moment_closed_form(MomentKind::ProbSq, q) - log2_moment_closed_form(MomentKind::CondWeightSq, q))
}

/// Upper bound on `E ||ρ_RS - I/2^{(p+γ)N}||_1`:
/// `[(2^{2pN} - 1)(2^{(γ+1)N} - 1) / (2^{2N} - 1)]^{1/2}`.
pub fn bound_decoupling(q: &TheoryParams) -> f64 {
    let n = q.n as f64;
    let log2 = log2_pow2_minus_one(2.0 * q.p * n) + log2_pow2_minus_one((q.gamma + 1.0) * n)
        - log2_pow2_minus_one(2.0 * n);
    (0.5 * log2).exp2()
}

/// A bound together with whether it is claimed in this regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub applicable: bool,
}

/// Lower bound on `E I_RS` in nats,
/// `ln[(2^{2(γ+p)N} - 2^{2(γ+p-1)N}) / (2^{2pN} + 2^{(1+γ)N} - 1 - 2^{(2p+γ-1)N})]`,
/// claimed only for `p > (1 - γ)/2`.
pub fn bound_mutual_information(q: &TheoryParams) -> Bound {
    let n = q.n as f64;
    let (g, p) = (q.gamma, q.p);
    let num = signed_log2_sum(&[(1.0, 2.0 * (g + p) * n), (-1.0, 2.0 * (g + p - 1.0) * n)]).1;
    let den = signed_log2_sum(&[
        (1.0, 2.0 * p * n),
        (1.0, (1.0 + g) * n),
        (-1.0, 0.0),
        (-1.0, (2.0 * p + g - 1.0) * n),
    ])
    .1;
    Bound { value: LN_2 * (num - den), applicable: p > (1.0 - g) / 2.0 }
}

/// Upper bound on `E D_RS`: `γN ln 2 - Λ`.
pub fn bound_drs_upper(q: &TheoryParams) -> f64 {
    q.gamma * q.n as f64 * LN_2 - lambda_value(q)
}

/// Deterministic lower bound on `D_RS`: `(γ + p - 1)N ln 2` for `p > 1 - γ`,
/// else 0.
pub fn bound_drs_lower(q: &TheoryParams) -> f64 {
    let excess = q.gamma + q.p - 1.0;
    if excess > 0.0 {
        excess * q.n as f64 * LN_2
    } else {
        0.0
    }
}

/// `(p_c,N, p_c,D) = ((1 - γ)/2, 1 - γ)`.
pub fn critical_points(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma = {gamma} outside (0, 1)")));
    }
    Ok(((1.0 - gamma) / 2.0, 1.0 - gamma))
}
