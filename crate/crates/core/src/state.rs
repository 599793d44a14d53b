//! Dense state vectors over the `R ∪ Q` register.
//!
//! Register layout: the `n_r` qubits of `R` occupy bits `0..n_r` of the
//! amplitude index and qubit `j` of `Q` occupies bit `n_r + j`. Reshaped as a
//! column-major `2^n_r x 2^n_q` matrix, the amplitudes are `psi[(r, q)]`.

use faer::{c64, Mat, MatRef};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::rng::{self, Stream};

/// Outcomes with probability at or below this carry no conditional state.
pub const P_FLOOR: f64 = 1e-14;

/// Unitarity tolerance for gates handed to the state.
pub const UNITARY_TOL: f64 = 1e-10;

/// Sizes and index sets of `R`, `S` and `E`, plus the Bell pairing of `R`
/// into `Q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    n_q: usize,
    n_r: usize,
    s_indices: Vec<usize>,
    e_indices: Vec<usize>,
    pairing: Vec<usize>,
}

impl PartitionSpec {
    /// `pairing[i]` is the `Q` qubit that `R` qubit `i` is Bell-paired with.
    pub fn new(n_q: usize, s_indices: Vec<usize>, pairing: Vec<usize>) -> Result<Self> {
        let n_r = pairing.len();
        if n_r > n_q {
            return Err(Error::InvalidPartition(format!("n_r = {n_r} exceeds n_q = {n_q}")));
        }
        let mut in_s = vec![false; n_q];
        for &s in &s_indices {
            if s >= n_q {
                return Err(Error::InvalidPartition(format!("S index {s} outside Q (n_q = {n_q})")));
            }
            if in_s[s] {
                return Err(Error::InvalidPartition(format!("S index {s} repeated")));
            }
            in_s[s] = true;
        }
        let mut used = vec![false; n_q];
        for &q in &pairing {
            if q >= n_q {
                return Err(Error::InvalidPartition(format!("pairing target {q} outside Q")));
            }
            if used[q] {
                return Err(Error::InvalidPartition(format!("pairing is not injective (qubit {q})")));
            }
            used[q] = true;
        }
        let e_indices = (0..n_q).filter(|&q| !in_s[q]).collect();
        Ok(Self { n_q, n_r, s_indices, e_indices, pairing })
    }

    /// `S` is the contiguous block `offset, offset+1, …` (mod `n_q`) of
    /// length `n_s`.
    pub fn contiguous(n_q: usize, n_s: usize, s_offset: usize, pairing: Vec<usize>) -> Result<Self> {
        if n_s > n_q {
            return Err(Error::InvalidPartition(format!("|S| = {n_s} exceeds n_q = {n_q}")));
        }
        let s = (0..n_s).map(|k| (s_offset + k) % n_q.max(1)).collect();
        Self::new(n_q, s, pairing)
    }

    /// Same register and pairing, different `S`.
    pub fn with_s_indices(&self, s_indices: Vec<usize>) -> Result<Self> {
        Self::new(self.n_q, s_indices, self.pairing.clone())
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_s(&self) -> usize {
        self.s_indices.len()
    }

    pub fn n_e(&self) -> usize {
        self.e_indices.len()
    }

    pub fn n_total(&self) -> usize {
        self.n_r + self.n_q
    }

    pub fn s_indices(&self) -> &[usize] {
        &self.s_indices
    }

    pub fn e_indices(&self) -> &[usize] {
        &self.e_indices
    }

    pub fn pairing(&self) -> &[usize] {
        &self.pairing
    }

    pub fn gamma(&self) -> f64 {
        self.n_r as f64 / self.n_q as f64
    }

    pub fn p(&self) -> f64 {
        self.s_indices.len() as f64 / self.n_q as f64
    }

    /// Register positions of `R`.
    pub fn r_register(&self) -> Vec<usize> {
        (0..self.n_r).collect()
    }

    /// Register positions of `S`, in `s_indices` order.
    pub fn s_register(&self) -> Vec<usize> {
        self.s_indices.iter().map(|&q| self.n_r + q).collect()
    }

    /// Register positions of `E`.
    pub fn e_register(&self) -> Vec<usize> {
        self.e_indices.iter().map(|&q| self.n_r + q).collect()
    }

    /// Number of `R` qubits whose Bell partner lies in `S`.
    pub fn partners_in_s(&self) -> usize {
        self.pairing.iter().filter(|q| self.s_indices.contains(q)).count()
    }
}

/// A uniformly random injective map from `n_r` qubits into `0..n_q`.
pub fn random_pairing<R: Rng + ?Sized>(n_q: usize, n_r: usize, rng: &mut R) -> Vec<usize> {
    let mut targets: Vec<usize> = (0..n_q).collect();
    targets.shuffle(rng);
    targets.truncate(n_r);
    targets
}

/// State of the `Q` qubits that are not Bell-paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    /// Every unpaired qubit in `|0⟩`.
    #[default]
    Zero,
    /// Every unpaired qubit in an independent uniformly random pure state.
    HaarSingleQubit,
}

/// Normalized amplitudes of the full register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<c64>,
    n_r: usize,
    n_q: usize,
}

impl StateVector {
    /// `|0…0⟩` on `n_r + n_q` qubits.
    pub fn zero(n_r: usize, n_q: usize) -> Self {
        let mut amps = vec![ZERO; 1 << (n_r + n_q)];
        amps[0] = linalg::ONE;
        Self { amps, n_r, n_q }
    }

    pub fn from_amplitudes(amps: Vec<c64>, n_r: usize, n_q: usize) -> Result<Self> {
        if amps.len() != 1usize << (n_r + n_q) {
            return Err(Error::Shape(format!(
                "{} amplitudes for {} qubits",
                amps.len(),
                n_r + n_q
            )));
        }
        Ok(Self { amps, n_r, n_q })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn n_qubits(&self) -> usize {
        self.n_r + self.n_q
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The amplitudes as a `2^n_r x 2^n_q` matrix.
    pub fn as_rq_matrix(&self) -> MatRef<'_, c64> {
        MatRef::from_column_major_slice(&self.amps, 1 << self.n_r, 1 << self.n_q)
    }

    /// Applies a 4x4 unitary to `Q` qubits `site` and `site + 1 (mod n_q)`.
    ///
    /// In the gate's basis the first qubit is the high bit: index `2a + b`.
    pub fn apply_two_qubit_gate(&mut self, gate: MatRef<'_, c64>, site: usize) -> Result<()> {
        if gate.nrows() != 4 || gate.ncols() != 4 {
            return Err(Error::Shape(format!("{}x{} two-qubit gate", gate.nrows(), gate.ncols())));
        }
        let deviation = linalg::unitarity_defect(gate);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        if site >= self.n_q || self.n_q < 2 {
            return Err(Error::Index(format!("site {site} invalid for n_q = {}", self.n_q)));
        }
        self.apply_gate_unchecked(&gate_array(gate), site);
        Ok(())
    }

    pub(crate) fn apply_gate_unchecked(&mut self, g: &[[c64; 4]; 4], site: usize) {
        let hi = 1usize << (self.n_r + site);
        let lo = 1usize << (self.n_r + (site + 1) % self.n_q);
        let mask = hi | lo;
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let idx = [base, base | lo, base | hi, base | hi | lo];
            let v = idx.map(|i| self.amps[i]);
            for (row, &i) in g.iter().zip(idx.iter()) {
                self.amps[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }

    /// Applies `I_R ⊗ U` for a unitary `U` on all of `Q`.
    pub fn apply_global_unitary(&mut self, u: MatRef<'_, c64>) -> Result<()> {
        let d_q = 1usize << self.n_q;
        if u.nrows() != d_q || u.ncols() != d_q {
            return Err(Error::Shape(format!(
                "{}x{} unitary on {} Q qubits",
                u.nrows(),
                u.ncols(),
                self.n_q
            )));
        }
        let deviation = linalg::unitarity_defect(u);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.apply_q_matrix_unchecked(u);
        Ok(())
    }

    pub(crate) fn apply_q_matrix_unchecked(&mut self, u: MatRef<'_, c64>) {
        let out: CMat = self.as_rq_matrix() * u.transpose();
        self.copy_from_rq(out.as_ref());
    }

    pub(crate) fn copy_from_rq(&mut self, m: MatRef<'_, c64>) {
        let d_r = 1usize << self.n_r;
        for q in 0..m.ncols() {
            for r in 0..d_r {
                self.amps[r + d_r * q] = m[(r, q)];
            }
        }
    }

    /// The amplitudes as a matrix whose row index is built from
    /// `row_qubits` (first listed = least significant) and whose column index
    /// is built from the remaining qubits in ascending order.
    pub fn split_matrix(&self, row_qubits: &[usize]) -> Result<CMat> {
        let n = self.n_qubits();
        let mut used = vec![false; n];
        for &k in row_qubits {
            if k >= n {
                return Err(Error::Index(format!("qubit {k} outside a {n}-qubit register")));
            }
            if used[k] {
                return Err(Error::Index(format!("qubit {k} listed twice")));
            }
            used[k] = true;
        }
        let col_qubits: Vec<usize> = (0..n).filter(|k| !used[*k]).collect();
        let row_off = bit_offsets(row_qubits);
        let col_off = bit_offsets(&col_qubits);
        Ok(Mat::from_fn(row_off.len(), col_off.len(), |i, j| self.amps[row_off[i] | col_off[j]]))
    }

    /// Reduced density matrix of the listed register qubits, one factor per
    /// qubit in `keep` order.
    pub fn reduced_density_matrix(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let a = self.split_matrix(keep)?;
        if keep.is_empty() {
            return Ok(DensityMatrix::scalar_one());
        }
        let rho = linalg::outer_gram(a.as_ref());
        DensityMatrix::from_parts(rho, vec![2; keep.len()])
    }

    /// `rho_RS` with factors `[2^n_r, 2^n_s]`.
    pub fn rho_rs(&self, part: &PartitionSpec) -> Result<DensityMatrix> {
        let mut keep = part.r_register();
        keep.extend(part.s_register());
        let rho = self.reduced_density_matrix(&keep)?;
        rho.regroup(vec![1 << part.n_r(), 1 << part.n_s()])
    }
}

pub(crate) fn gate_array(g: MatRef<'_, c64>) -> [[c64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = g[(i, j)];
        }
    }
    out
}

/// For each little-endian multi-index over `qubits`, the amplitude-index bits.
pub(crate) fn bit_offsets(qubits: &[usize]) -> Vec<usize> {
    (0..1usize << qubits.len())
        .map(|idx| {
            qubits
                .iter()
                .enumerate()
                .filter(|(k, _)| idx >> k & 1 == 1)
                .fold(0, |acc, (_, &q)| acc | 1 << q)
        })
        .collect()
}

/// Bell pairs `(|00⟩ + |11⟩)/√2` between every `R` qubit and its partner,
/// with the unpaired `Q` qubits in a product state chosen by `mode`.
pub fn prepare_initial_state(part: &PartitionSpec, mode: ProductMode, rng_seed: u64) -> Result<StateVector> {
    // re-validate: the pairing must be injective into Q
    let part = PartitionSpec::new(part.n_q, part.s_indices.clone(), part.pairing.clone())?;
    let (n_r, n_q) = (part.n_r(), part.n_q());
    let paired: Vec<bool> = (0..n_q).map(|q| part.pairing.contains(&q)).collect();
    let free: Vec<usize> = (0..n_q).filter(|&q| !paired[q]).collect();
    let mut rng = rng::stream_rng(rng_seed, Stream::Product);
    let local: Vec<[c64; 2]> = free
        .iter()
        .map(|_| match mode {
            ProductMode::Zero => [linalg::ONE, ZERO],
            ProductMode::HaarSingleQubit => {
                let a = rng::complex_gaussian(&mut rng);
                let b = rng::complex_gaussian(&mut rng);
                let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
                [a / n, b / n]
            }
        })
        .collect();

    let mut amps = vec![ZERO; 1 << (n_r + n_q)];
    let bell = c64::new((1.0 / (1u64 << n_r) as f64).sqrt(), 0.0);
    for r in 0..1usize << n_r {
        let mut q_base = 0usize;
        for (i, &q) in part.pairing.iter().enumerate() {
            if r >> i & 1 == 1 {
                q_base |= 1 << q;
            }
        }
        for f in 0..1usize << free.len() {
            let mut q = q_base;
            let mut amp = bell;
            for (k, &fq) in free.iter().enumerate() {
                let bit = f >> k & 1;
                amp *= local[k][bit];
                q |= bit << fq;
            }
            amps[r | q << n_r] = amp;
        }
    }
    Ok(StateVector { amps, n_r, n_q })
}

/// Result of projecting `S` onto one computational-basis outcome.
#[derive(Debug, Clone)]
pub struct Projection {
    pub prob: f64,
    /// `None` when `prob <= P_FLOOR`.
    pub conditional: Option<DensityMatrix>,
}

/// Parses a bitstring over `S`; character `j` is the outcome of `s_indices[j]`.
pub fn outcome_from_bits(bits: &str) -> Result<u64> {
    if bits.len() > 63 {
        return Err(Error::Parameter("outcome longer than 63 bits".into()));
    }
    bits.chars().enumerate().try_fold(0u64, |acc, (j, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << j),
        _ => Err(Error::Parameter(format!("invalid outcome character {c:?}"))),
    })
}

pub fn outcome_to_bits(outcome: u64, len: usize) -> String {
    (0..len).map(|j| if outcome >> j & 1 == 1 { '1' } else { '0' }).collect()
}

/// Unnormalized conditional block `Tr_S[Π_o ρ_RS]` for an `[R, S]` state.
pub(crate) fn conditional_block(rho_rs: &DensityMatrix, outcome: u64) -> CMat {
    let d_r = rho_rs.factor_dims()[0];
    let off = d_r * outcome as usize;
    let m = rho_rs.matrix();
    Mat::from_fn(d_r, d_r, |i, j| m[(off + i, off + j)])
}

/// Probability of `outcome` on `S` and the resulting state of `R`.
pub fn project_outcome(rho_rs: &DensityMatrix, part: &PartitionSpec, outcome: u64) -> Result<Projection> {
    let (d_r, d_s) = (1usize << part.n_r(), 1usize << part.n_s());
    let rho_rs = rho_rs.regroup(vec![d_r, d_s])?;
    if outcome as usize >= d_s {
        return Err(Error::Shape(format!("outcome {outcome} has more than {} bits", part.n_s())));
    }
    let block = conditional_block(&rho_rs, outcome);
    let prob = linalg::trace_re(block.as_ref());
    Ok(normalize_conditional(block, prob, d_r))
}

pub(crate) fn normalize_conditional(mut block: CMat, prob: f64, d_r: usize) -> Projection {
    if prob <= P_FLOOR {
        return Projection { prob: prob.max(0.0), conditional: None };
    }
    let inv = 1.0 / prob;
    for j in 0..d_r {
        for i in 0..d_r {
            block[(i, j)] *= inv;
        }
    }
    let rho = DensityMatrix::from_parts_unchecked(block, vec![d_r]);
    Projection { prob, conditional: Some(rho) }
}
