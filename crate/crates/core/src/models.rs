//! Time-evolution generators: the brickwork Floquet random unitary circuit
//! (FRUC), the Floquet mixed-field Ising chain (FMFIC) and a single global
//! Haar unitary.

use faer::{c64, Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::rng::{self, Stream};
use crate::state::{self, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Fruc,
    Fmfic,
    GlobalHaar,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fruc => "fruc",
            ModelKind::Fmfic => "fmfic",
            ModelKind::GlobalHaar => "global_haar",
        }
    }
}

/// Couplings of `H_± = Σ_i [h_x (1 ± δ) X_i + h_y Y_i + J X_i X_{i+1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmficParams {
    pub h_x: f64,
    pub h_y: f64,
    pub j: f64,
    pub delta: f64,
}

impl Default for FmficParams {
    /// The quantum-chaotic point `(0.809, 0.9045, 1, 0.5)`.
    fn default() -> Self {
        Self { h_x: 0.809, h_y: 0.9045, j: 1.0, delta: 0.5 }
    }
}

/// `exp(-i H)` kept as `V diag(phases) V^dagger`.
#[derive(Debug, Clone)]
struct SpectralFactor {
    vecs: CMat,
    phases: Vec<c64>,
}

impl SpectralFactor {
    fn from_hamiltonian(h: &CMat) -> Self {
        let (vals, vecs) = linalg::hermitian_eigen(h.as_ref());
        let phases = vals.iter().map(|&l| c64::new(l.cos(), -l.sin())).collect();
        Self { vecs, phases }
    }

    fn dense(&self) -> CMat {
        let mut scaled = self.vecs.clone();
        for (j, &ph) in self.phases.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= ph;
            }
        }
        &scaled * self.vecs.adjoint()
    }

    /// `psi -> psi U^T` on the `R x Q` matrix.
    fn apply(&self, psi: &mut StateVector) {
        let mut tmp: CMat = psi.as_rq_matrix() * self.vecs.conjugate();
        for (j, &ph) in self.phases.iter().enumerate() {
            for i in 0..tmp.nrows() {
                tmp[(i, j)] *= ph;
            }
        }
        let out: CMat = &tmp * self.vecs.transpose();
        psi.copy_from_rq(out.as_ref());
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Gates(Vec<(usize, CMat, [[c64; 4]; 4])>),
    /// Applied in order: the first entry acts first.
    Spectral(Vec<SpectralFactor>),
    Dense(CMat),
}

/// One period `U_F` of a model acting on `Q`. Immutable once built.
#[derive(Debug, Clone)]
pub struct FloquetOperator {
    kind: ModelKind,
    n_q: usize,
    repr: Repr,
}

impl FloquetOperator {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    /// Number of `U_F` applications per unit of depth.
    pub fn period_depth(&self) -> usize {
        1
    }

    /// `(site, gate)` pairs in application order, for FRUC; empty otherwise.
    pub fn gates(&self) -> Vec<(usize, MatRef<'_, c64>)> {
        match &self.repr {
            Repr::Gates(g) => g.iter().map(|(s, m, _)| (*s, m.as_ref())).collect(),
            _ => Vec::new(),
        }
    }

    /// The full `2^n_q x 2^n_q` period unitary.
    pub fn dense(&self) -> CMat {
        let d = 1usize << self.n_q;
        match &self.repr {
            Repr::Dense(u) => u.clone(),
            Repr::Spectral(f) => f.iter().fold(Mat::identity(d, d), |acc, f| f.dense() * acc),
            Repr::Gates(_) => {
                // columns are the images of basis states
                let mut out = Mat::zeros(d, d);
                for col in 0..d {
                    let mut amps = vec![ZERO; d];
                    amps[col] = linalg::ONE;
                    let mut psi = StateVector::from_amplitudes(amps, 0, self.n_q).expect("basis state");
                    self.apply_period(&mut psi);
                    for (row, a) in psi.amplitudes().iter().enumerate() {
                        out[(row, col)] = *a;
                    }
                }
                out
            }
        }
    }

    /// Applies `I_R ⊗ U_F` once.
    pub fn apply_period(&self, psi: &mut StateVector) {
        match &self.repr {
            Repr::Gates(gates) => {
                for (site, _, g) in gates {
                    psi.apply_gate_unchecked(g, *site);
                }
            }
            Repr::Spectral(factors) => {
                for f in factors {
                    f.apply(psi);
                }
            }
            Repr::Dense(u) => psi.apply_q_matrix_unchecked(u.as_ref()),
        }
    }
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix,
/// with the phases of `R`'s diagonal folded into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMat> {
    if dim == 0 {
        return Err(Error::Parameter("Haar unitary of dimension 0".into()));
    }
    let mut z = Mat::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            z[(i, j)] = rng::complex_gaussian(rng);
        }
    }
    let qr = z.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        let ph = if n > 0.0 { d / n } else { linalg::ONE };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    Ok(q)
}

/// Brickwork circuit: gates on bonds `(0,1), (2,3), …` then `(1,2), …,
/// (n_q - 1, 0)`, each an independent Haar 4x4 unitary.
pub fn build_fruc_floquet<R: Rng + ?Sized>(n_q: usize, rng: &mut R) -> Result<FloquetOperator> {
    if n_q < 2 || n_q % 2 != 0 {
        return Err(Error::Parameter(format!("brickwork circuit needs an even n_q >= 2, got {n_q}")));
    }
    let sites = (0..n_q).step_by(2).chain((1..n_q).step_by(2));
    let gates = sites
        .map(|site| {
            let u = sample_haar_unitary(4, rng)?;
            let arr = state::gate_array(u.as_ref());
            Ok((site, u, arr))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FloquetOperator { kind: ModelKind::Fruc, n_q, repr: Repr::Gates(gates) })
}

/// `H_±` on `n_q` qubits with periodic coupling.
pub fn fmfic_hamiltonian(n_q: usize, params: &FmficParams, sign: f64) -> CMat {
    let d = 1usize << n_q;
    let hx = params.h_x * (1.0 + sign * params.delta);
    let mut h = Mat::zeros(d, d);
    for col in 0..d {
        for i in 0..n_q {
            let bit = 1usize << i;
            h[(col ^ bit, col)] += c64::new(hx, 0.0);
            let y = if col & bit == 0 { c64::new(0.0, params.h_y) } else { c64::new(0.0, -params.h_y) };
            h[(col ^ bit, col)] += y;
            let next = 1usize << ((i + 1) % n_q);
            h[(col ^ bit ^ next, col)] += c64::new(params.j, 0.0);
        }
    }
    h
}

/// `U_F = exp(-i H_+) exp(-i H_-)` from exact eigendecompositions.
pub fn build_fmfic_floquet(n_q: usize, params: &FmficParams) -> Result<FloquetOperator> {
    if n_q < 2 {
        return Err(Error::Parameter(format!("mixed-field Ising chain needs n_q >= 2, got {n_q}")));
    }
    let minus = SpectralFactor::from_hamiltonian(&fmfic_hamiltonian(n_q, params, -1.0));
    let plus = SpectralFactor::from_hamiltonian(&fmfic_hamiltonian(n_q, params, 1.0));
    Ok(FloquetOperator { kind: ModelKind::Fmfic, n_q, repr: Repr::Spectral(vec![minus, plus]) })
}

/// A single Haar unitary on all of `Q`.
pub fn build_global_haar<R: Rng + ?Sized>(n_q: usize, rng: &mut R) -> Result<FloquetOperator> {
    let u = sample_haar_unitary(1 << n_q, rng)?;
    Ok(FloquetOperator { kind: ModelKind::GlobalHaar, n_q, repr: Repr::Dense(u) })
}

/// Builds the operator of one realization. FMFIC ignores `seed`.
pub fn build_model(kind: ModelKind, n_q: usize, fmfic: &FmficParams, seed: u64) -> Result<FloquetOperator> {
    let mut rng = rng::stream_rng(seed, Stream::Circuit);
    match kind {
        ModelKind::Fruc => build_fruc_floquet(n_q, &mut rng),
        ModelKind::Fmfic => build_fmfic_floquet(n_q, fmfic),
        ModelKind::GlobalHaar => build_global_haar(n_q, &mut rng),
    }
}

/// Applies `U_F^t`. The global Haar unitary stands for `t -> ∞` and is
/// applied once for any `t_steps >= 1`.
pub fn evolve(psi: &StateVector, op: &FloquetOperator, t_steps: usize) -> Result<StateVector> {
    let mut out = psi.clone();
    evolve_in_place(&mut out, op, t_steps)?;
    Ok(out)
}

pub fn evolve_in_place(psi: &mut StateVector, op: &FloquetOperator, t_steps: usize) -> Result<()> {
    if psi.n_q() != op.n_q() {
        return Err(Error::Shape(format!("operator on {} qubits, state has n_q = {}", op.n_q(), psi.n_q())));
    }
    let steps = match op.kind {
        ModelKind::GlobalHaar => t_steps.min(1),
        _ => t_steps,
    };
    for _ in 0..steps {
        op.apply_period(psi);
    }
    Ok(())
}
