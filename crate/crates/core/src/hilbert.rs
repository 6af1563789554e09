// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Truncated Fock-space and multi-level qubit linear algebra.
//!
//! The joint space is `qubit ⊗ cavity` with qubit-major indexing: the
//! amplitude of `|q⟩|n⟩` lives at `q * cavity_cutoff + n`. Qubit level 0 is
//! the lower eigenstate, so for the two-level qubit `σz = diag(-1, +1)` and
//! the lowering operator `σ₋ = |0⟩⟨1|` coincides with the truncated ladder.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Tail mass a state constructor may discard before it refuses the cutoff.
pub const CONSTRUCTOR_TAIL_TOL: f64 = 1e-10;
/// Population allowed in the top two Fock levels at any output time.
pub const FOCK_LEAKAGE_TOL: f64 = 1e-6;
/// Negative eigenvalues down to this are clipped to zero by `matrix_sqrt_psd`.
pub const PSD_CLIP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertDims {
    pub qubit_levels: usize,
    pub cavity_cutoff: usize,
}

impl HilbertDims {
    pub fn new(qubit_levels: usize, cavity_cutoff: usize) -> Result<Self> {
        if qubit_levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "qubit_levels must be >= 2, got {qubit_levels}"
            )));
        }
        if cavity_cutoff < 2 {
            return Err(Error::InvalidParameter(format!(
                "cavity_cutoff must be >= 2, got {cavity_cutoff}"
            )));
        }
        Ok(Self {
            qubit_levels,
            cavity_cutoff,
        })
    }

    pub fn joint(&self) -> usize {
        self.qubit_levels * self.cavity_cutoff
    }

    #[inline]
    pub fn index(&self, qubit: usize, photons: usize) -> usize {
        qubit * self.cavity_cutoff + photons
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsystem {
    Qubit,
    Cavity,
}

/// The space a density matrix lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Joint(HilbertDims),
    Qubit(usize),
    Cavity(usize),
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Joint(d) => d.joint(),
            Space::Qubit(n) | Space::Cavity(n) => *n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub amplitudes: Vec<C64>,
    pub dims: HilbertDims,
    /// ns
    pub time: f64,
}

impl JointState {
    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Amplitudes of the cavity conditioned on qubit level `q`.
    pub fn branch(&self, q: usize) -> &[C64] {
        let n = self.dims.cavity_cutoff;
        &self.amplitudes[q * n..(q + 1) * n]
    }

    pub fn qubit_population(&self, q: usize) -> f64 {
        self.branch(q).iter().map(|c| c.norm_sqr()).sum()
    }

    /// Population of Fock level `n` summed over qubit levels.
    pub fn fock_population(&self, n: usize) -> f64 {
        (0..self.dims.qubit_levels)
            .map(|q| self.amplitudes[self.dims.index(q, n)].norm_sqr())
            .sum()
    }

    pub fn to_density(&self) -> DensityState {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityState {
            matrix: &v * v.adjoint(),
            space: Space::Joint(self.dims),
            time: self.time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    pub matrix: CMatrix,
    pub space: Space,
    /// ns
    pub time: f64,
}

impl DensityState {
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// Population of Fock level `n`; only defined for joint and cavity spaces.
    pub fn fock_population(&self, n: usize) -> f64 {
        match self.space {
            Space::Joint(d) => (0..d.qubit_levels)
                .map(|q| {
                    let i = d.index(q, n);
                    self.matrix[(i, i)].re
                })
                .sum(),
            Space::Cavity(_) => self.matrix[(n, n)].re,
            Space::Qubit(_) => 0.0,
        }
    }

    pub fn qubit_population(&self, q: usize) -> f64 {
        match self.space {
            Space::Joint(d) => (0..d.cavity_cutoff)
                .map(|n| {
                    let i = d.index(q, n);
                    self.matrix[(i, i)].re
                })
                .sum(),
            Space::Qubit(_) => self.matrix[(q, q)].re,
            Space::Cavity(_) => 0.0,
        }
    }
}

/// Initial cavity state `D(α) S(ξ) |0⟩` with `ξ = r e^{iθ}`.
///
/// With the displacement applied after the squeeze, `⟨a⟩ = α` exactly and
/// `⟨a†a⟩ = |α|² + sinh² r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityStateSpec {
    pub alpha: C64,
    pub r: f64,
    /// radians
    pub theta: f64,
}

impl CavityStateSpec {
    pub fn coherent(alpha: C64) -> Self {
        Self {
            alpha,
            r: 0.0,
            theta: 0.0,
        }
    }

    pub fn mean_photons(&self) -> f64 {
        self.alpha.norm_sqr() + self.r.sinh().powi(2)
    }

    /// `⟨a²⟩` of the prepared state.
    pub fn second_moment(&self) -> C64 {
        self.alpha * self.alpha - C64::from_polar(self.r.sinh() * self.r.cosh(), self.theta)
    }

    /// Fock cutoff used when none is configured.
    ///
    /// `ceil(|α|² + 8|α|e^r + 25)`, raised for squeezed states until the
    /// constructed state's Fock tail beyond the cutoff is below `1e-12`, plus
    /// ten levels of headroom. Phase-squeezed states have a much broader
    /// photon distribution than the closed form allows for.
    pub fn default_cutoff(&self) -> usize {
        let a = self.alpha.norm();
        let base = (a * a + 8.0 * a * self.r.exp() + 25.0).ceil() as usize;
        if self.r <= 0.0 {
            return base;
        }
        let mut dim = 2 * base;
        loop {
            let v = squeezed_raw(self, dim);
            let mut tail = 0.0;
            let mut k = dim;
            while k > 0 && tail + v[k - 1].norm_sqr() <= 1e-12 {
                tail += v[k - 1].norm_sqr();
                k -= 1;
            }
            // the top quarter of the construction space is unreliable
            if k + 10 <= dim * 3 / 4 {
                return base.max(k + 10);
            }
            dim *= 2;
        }
    }
}

/// Sparse complex matrix stored as sorted triplets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            entries: (0..n).map(|i| (i, i, ONE)).collect(),
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut s = Self::new(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != ZERO {
                    s.entries.push((r, c, v));
                }
            }
        }
        s
    }

    pub fn push(&mut self, r: usize, c: usize, v: C64) {
        if v != ZERO {
            self.entries.push((r, c, v));
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
        entries.sort_by_key(|e| (e.0, e.1));
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect(),
        }
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &SparseMatrix) -> Self {
        let mut out = Self::new(self.rows * other.rows, self.cols * other.cols);
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &other.entries {
                out.entries
                    .push((r1 * other.rows + r2, c1 * other.cols + c2, v1 * v2));
            }
        }
        out.entries.sort_by_key(|e| (e.0, e.1));
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> Self {
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for &(r, c, v) in self.entries.iter().chain(&other.entries) {
            *acc.entry((r, c)).or_insert(ZERO) += v;
        }
        Self::from_map(self.rows, self.cols, acc)
    }

    /// `self · other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Self {
        let mut by_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); other.rows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k] {
                *acc.entry((r, c)).or_insert(ZERO) += v * w;
            }
        }
        Self::from_map(self.rows, other.cols, acc)
    }

    fn from_map(rows: usize, cols: usize, acc: BTreeMap<(usize, usize), C64>) -> Self {
        Self {
            rows,
            cols,
            entries: acc
                .into_iter()
                .filter(|(_, v)| *v != ZERO)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    /// `out += s * self * x`.
    #[inline]
    pub fn mul_add(&self, s: C64, x: &[C64], out: &mut [C64]) {
        for &(r, c, v) in &self.entries {
            out[r] += s * v * x[c];
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.rows];
        self.mul_add(ONE, x, &mut out);
        out
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.rows];
        for &(r, _, v) in &self.entries {
            rows[r] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

/// Truncated lowering operator on `levels` states: `⟨n−1|a|n⟩ = √n`.
pub fn ladder_sparse(levels: usize) -> SparseMatrix {
    let mut m = SparseMatrix::new(levels, levels);
    for n in 1..levels {
        m.entries.push((n - 1, n, C64::new((n as f64).sqrt(), 0.0)));
    }
    m
}

pub fn number_sparse(levels: usize) -> SparseMatrix {
    let mut m = SparseMatrix::new(levels, levels);
    for n in 1..levels {
        m.entries.push((n, n, C64::new(n as f64, 0.0)));
    }
    m
}

pub fn diagonal_sparse(values: &[f64]) -> SparseMatrix {
    let mut m = SparseMatrix::new(values.len(), values.len());
    for (i, &v) in values.iter().enumerate() {
        m.push(i, i, C64::new(v, 0.0));
    }
    m
}

/// Lowering operator of one subsystem, as a matrix on that subsystem alone.
pub fn annihilation_op(dims: HilbertDims, subsystem: Subsystem) -> CMatrix {
    let levels = match subsystem {
        Subsystem::Qubit => dims.qubit_levels,
        Subsystem::Cavity => dims.cavity_cutoff,
    };
    ladder_sparse(levels).to_dense()
}

/// Lifts a subsystem operator onto the joint space.
pub fn embed(dims: HilbertDims, subsystem: Subsystem, local: &SparseMatrix) -> SparseMatrix {
    match subsystem {
        Subsystem::Qubit => local.kron(&SparseMatrix::identity(dims.cavity_cutoff)),
        Subsystem::Cavity => SparseMatrix::identity(dims.qubit_levels).kron(local),
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn normalize(v: &mut [C64]) {
    let n = norm(v);
    if n > 0.0 {
        for c in v.iter_mut() {
            *c /= n;
        }
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Fock amplitudes of the coherent state `|α⟩`, renormalized after truncation.
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<Vec<C64>> {
    if cutoff < 2 {
        return Err(Error::InvalidParameter("cutoff must be >= 2".into()));
    }
    let mut v = Vec::with_capacity(cutoff);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v.push(c);
    for n in 1..cutoff {
        c = c * alpha / (n as f64).sqrt();
        v.push(c);
    }
    let kept: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let tail = 1.0 - kept;
    if tail > CONSTRUCTOR_TAIL_TOL {
        return Err(Error::Truncation(format!(
            "coherent state |α|={:.4} loses {:.3e} of its norm at cutoff {cutoff}",
            alpha.norm(),
            tail
        )));
    }
    normalize(&mut v);
    Ok(v)
}

/// `exp(G) v` for a sparse generator, by scaled Taylor series.
pub fn expm_multiply(generator: &SparseMatrix, v: &[C64]) -> Vec<C64> {
    let nrm = generator.norm_inf();
    let steps = (nrm / 0.5).ceil().max(1.0) as usize;
    let h = C64::new(1.0 / steps as f64, 0.0);
    let mut out = v.to_vec();
    let mut term = vec![ZERO; v.len()];
    let mut next = vec![ZERO; v.len()];
    for _ in 0..steps {
        term.copy_from_slice(&out);
        for k in 1..60 {
            next.iter_mut().for_each(|c| *c = ZERO);
            generator.mul_add(h / k as f64, &term, &mut next);
            std::mem::swap(&mut term, &mut next);
            let mut tn = 0.0;
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
                tn += t.norm_sqr();
            }
            if tn.sqrt() < 1e-18 {
                break;
            }
        }
    }
    out
}

/// `D(α) S(ξ) |0⟩` with `ξ = r e^{iθ}`, built on an enlarged space and truncated.
pub fn squeezed_coherent_state(spec: &CavityStateSpec, cutoff: usize) -> Result<Vec<C64>> {
    if spec.r < 0.0 {
        return Err(Error::InvalidParameter("squeezing magnitude r must be >= 0".into()));
    }
    if spec.r == 0.0 {
        return coherent_state(spec.alpha, cutoff);
    }
    let big = ((cutoff as f64) * 1.25).ceil() as usize;
    let full = squeezed_raw(spec, big);
    let tail: f64 = full[cutoff..].iter().map(|c| c.norm_sqr()).sum();
    if tail > CONSTRUCTOR_TAIL_TOL {
        return Err(Error::Truncation(format!(
            "squeezed state (|α|={:.4}, r={}) loses {:.3e} of its norm at cutoff {cutoff}",
            spec.alpha.norm(),
            spec.r,
            tail
        )));
    }
    let mut v = full[..cutoff].to_vec();
    normalize(&mut v);
    Ok(v)
}

fn squeezed_raw(spec: &CavityStateSpec, big: usize) -> Vec<C64> {
    let a = ladder_sparse(big);
    let ad = a.adjoint();
    let a2 = sparse_mul(&a, &a);
    let ad2 = sparse_mul(&ad, &ad);
    let xi = C64::from_polar(spec.r, spec.theta);
    // S(ξ) = exp((ξ* a² − ξ a†²)/2)
    let squeeze = a2.scaled(xi.conj() * 0.5).add(&ad2.scaled(-xi * 0.5));
    let displace = ad.scaled(spec.alpha).add(&a.scaled(-spec.alpha.conj()));
    let mut vac = vec![ZERO; big];
    vac[0] = ONE;
    let sq = expm_multiply(&squeeze, &vac);
    expm_multiply(&displace, &sq)
}

pub(crate) fn sparse_mul(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    a.matmul(b)
}

/// `|q⟩ ⊗ |c⟩` in qubit-major order.
pub fn tensor_state(qubit: &[C64], cavity: &[C64], time: f64) -> Result<JointState> {
    let dims = HilbertDims::new(qubit.len(), cavity.len())?;
    let mut amplitudes = Vec::with_capacity(dims.joint());
    for q in qubit {
        amplitudes.extend(cavity.iter().map(|c| q * c));
    }
    Ok(JointState {
        amplitudes,
        dims,
        time,
    })
}

/// Basis vector `|level⟩` of a `levels`-dimensional qubit.
pub fn qubit_basis(levels: usize, level: usize) -> Vec<C64> {
    let mut v = vec![ZERO; levels];
    v[level] = ONE;
    v
}

/// Reduced state of a joint pure state.
pub fn partial_trace_pure(state: &JointState, keep: Subsystem) -> DensityState {
    let d = state.dims;
    let psi = &state.amplitudes;
    match keep {
        Subsystem::Qubit => {
            let mut m = CMatrix::zeros(d.qubit_levels, d.qubit_levels);
            for i in 0..d.qubit_levels {
                for j in 0..=i {
                    let v = inner(state.branch(j), state.branch(i));
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
            DensityState {
                matrix: m,
                space: Space::Qubit(d.qubit_levels),
                time: state.time,
            }
        }
        Subsystem::Cavity => {
            let n = d.cavity_cutoff;
            let mut m = CMatrix::zeros(n, n);
            for q in 0..d.qubit_levels {
                let b = &psi[q * n..(q + 1) * n];
                for j in 0..n {
                    let bj = b[j].conj();
                    if bj == ZERO {
                        continue;
                    }
                    for i in 0..n {
                        m[(i, j)] += b[i] * bj;
                    }
                }
            }
            DensityState {
                matrix: m,
                space: Space::Cavity(n),
                time: state.time,
            }
        }
    }
}

/// Reduced state of a joint density matrix.
pub fn partial_trace(state: &DensityState, keep: Subsystem) -> Result<DensityState> {
    let d = match state.space {
        Space::Joint(d) => d,
        _ => {
            return Err(Error::InvalidParameter(
                "partial trace needs a joint-space density matrix".into(),
            ))
        }
    };
    let rho = &state.matrix;
    Ok(match keep {
        Subsystem::Qubit => {
            let mut m = CMatrix::zeros(d.qubit_levels, d.qubit_levels);
            for i in 0..d.qubit_levels {
                for j in 0..d.qubit_levels {
                    m[(i, j)] = (0..d.cavity_cutoff)
                        .map(|n| rho[(d.index(i, n), d.index(j, n))])
                        .sum();
                }
            }
            DensityState {
                matrix: m,
                space: Space::Qubit(d.qubit_levels),
                time: state.time,
            }
        }
        Subsystem::Cavity => {
            let n = d.cavity_cutoff;
            let mut m = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = (0..d.qubit_levels)
                        .map(|q| rho[(d.index(q, i), d.index(q, j))])
                        .sum();
                }
            }
            DensityState {
                matrix: m,
                space: Space::Cavity(n),
                time: state.time,
            }
        }
    })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(m.nrows(), m.ncols());
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Principal square root of a Hermitian positive semi-definite matrix.
pub fn matrix_sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidParameter("matrix_sqrt_psd needs a square matrix".into()));
    }
    let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let herm = max_abs_diff(m, &m.adjoint());
    if herm > 1e-10 * scale {
        return Err(Error::NotHermitian(herm));
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let (vals, vecs) = hermitian_eigen(&sym);
    let mut roots = Vec::with_capacity(vals.len());
    for &v in &vals {
        if v < -PSD_CLIP_TOL * scale {
            return Err(Error::NotPositive(v));
        }
        roots.push(C64::new(v.max(0.0).sqrt(), 0.0));
    }
    let d = nalgebra::DVector::from_vec(roots);
    let mut scaled = vecs.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= d[k];
    }
    Ok(scaled * vecs.adjoint())
}

/// `⟨ψ|O|ψ⟩` for a sparse operator.
pub fn expectation(op: &SparseMatrix, psi: &[C64]) -> C64 {
    op.entries
        .iter()
        .map(|&(r, c, v)| psi[r].conj() * v * psi[c])
        .sum()
}

/// `Tr(O ρ)` for a sparse operator.
pub fn expectation_density(op: &SparseMatrix, rho: &CMatrix) -> C64 {
    op.entries.iter().map(|&(r, c, v)| v * rho[(c, r)]).sum()
}
