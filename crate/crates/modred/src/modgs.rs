//! K-valued Hermitian inner product on K^d, K-linear Gram-Schmidt, size
//! reduction, covolume accounting and the balance constant.
//!
//! All Gram-Schmidt arithmetic is exact over Q(ζ); K-element division goes
//! through the conjugate-product inverse, so orthogonality of the computed
//! vectors is an identity, not an approximation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::cyclotomic::{rational_to_f64, RingElement, RingParams};
use crate::splitntt::{coordinate_round, crt_scaled_round, CrtBasis};
use crate::{Error, Result};

/// A vector in K^d.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleVector {
    entries: Vec<RingElement>,
}

impl ModuleVector {
    pub fn new(entries: Vec<RingElement>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch("empty module vector".into()));
        }
        let p = entries[0].params();
        if entries.iter().any(|e| e.params() != p) {
            return Err(Error::ParamMismatch("mixed ring parameters in vector".into()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[RingElement] {
        &self.entries
    }

    pub fn params(&self) -> RingParams {
        self.entries[0].params()
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    /// Scalar action of K on K^d.
    pub fn scale_ring(&self, factor: &RingElement) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.mul(factor))
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.rank() != other.rank() {
            return Err(Error::DimensionMismatch(format!(
                "rank {} vs {}",
                self.rank(),
                other.rank()
            )));
        }
        if self.params() != other.params() {
            return Err(Error::ParamMismatch("mixed ring parameters".into()));
        }
        Ok(())
    }

    /// ‖σ(v)‖₂ over all dn complex coordinates.
    pub fn embed_norm_l2(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.embed().norm_l2().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// ⟨a, b⟩_K = Σ_t a_t · conj(b_t), exact.
pub fn k_inner(a: &ModuleVector, b: &ModuleVector) -> Result<RingElement> {
    a.check(b)?;
    let mut acc = RingElement::zero(a.params());
    for (x, y) in a.entries.iter().zip(&b.entries) {
        acc = acc.add(&x.mul(&y.conjugate())?)?;
    }
    Ok(acc)
}

/// Exact K-linear Gram-Schmidt data: b_j = b̃_j + Σ_{i<j} μ_{ji} b̃_i.
#[derive(Clone, Debug)]
pub struct GramSchmidtData {
    basis: Vec<ModuleVector>,
    gs: Vec<ModuleVector>,
    /// strictly lower triangular; mu[j][i] = μ_{ji} for i < j
    mu: Vec<Vec<RingElement>>,
    /// B_i = ⟨b̃_i, b̃_i⟩_K
    gram_diag: Vec<RingElement>,
}

impl GramSchmidtData {
    pub fn basis(&self) -> &[ModuleVector] {
        &self.basis
    }

    pub fn gs_vectors(&self) -> &[ModuleVector] {
        &self.gs
    }

    pub fn mu(&self) -> &[Vec<RingElement>] {
        &self.mu
    }

    pub fn gram_diag(&self) -> &[RingElement] {
        &self.gram_diag
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn params(&self) -> RingParams {
        self.basis[0].params()
    }
}

/// Exact K-linear Gram-Schmidt of a K-linearly independent basis.
pub fn k_gram_schmidt(basis: &[ModuleVector]) -> Result<GramSchmidtData> {
    if basis.is_empty() {
        return Err(Error::DimensionMismatch("empty basis".into()));
    }
    let d = basis.len();
    let mut gs: Vec<ModuleVector> = Vec::with_capacity(d);
    let mut mu: Vec<Vec<RingElement>> = Vec::with_capacity(d);
    let mut gram_diag: Vec<RingElement> = Vec::with_capacity(d);
    for j in 0..d {
        let mut tilde = basis[j].clone();
        let mut row = Vec::with_capacity(j);
        for i in 0..j {
            let num = k_inner(&basis[j], &gs[i])?;
            let mu_ji = num.mul(&gram_diag[i].invert()?)?;
            tilde = tilde.sub(&gs[i].scale_ring(&mu_ji)?)?;
            row.push(mu_ji);
        }
        let b = k_inner(&tilde, &tilde)?;
        if b.is_zero() {
            return Err(Error::RankDeficient(j));
        }
        gs.push(tilde);
        mu.push(row);
        gram_diag.push(b);
    }
    Ok(GramSchmidtData {
        basis: basis.to_vec(),
        gs,
        mu,
        gram_diag,
    })
}

/// Rounding rule for size reduction.
#[derive(Clone, Debug)]
pub enum Rounder {
    /// c_{ji} = ⌊μ_{ji}⌉ ∈ R; residual sup bound ρ = n/2; module preserved.
    Coordinate,
    /// c_{ji} ∈ P^{-1}R; residual sup ≤ n/(2P) (≤ 1 once P ≥ n/2). The new
    /// basis lives in P^{-1}·M, so this mode is conditioning-only.
    CrtScaled(CrtBasis),
}

/// Result of a size-reduction pass.
#[derive(Clone, Debug)]
pub struct SizeReduced {
    pub data: GramSchmidtData,
    /// max over reduced coefficients of ‖σ(μ'_{ji})‖∞
    pub residual_sup: f64,
    /// false for the CRT rounder (output basis generates P^{-1}·M, not M)
    pub module_preserving: bool,
}

/// Size reduction: b_j ← b_j − c_{ji} b_i for j = 2..d, i = j−1..1, with full
/// recomputation of the Gram-Schmidt data after each subtraction. GS vectors
/// and B_i are unchanged by construction and asserted equal.
pub fn size_reduce(data: &GramSchmidtData, rounder: &Rounder) -> Result<SizeReduced> {
    let mut basis = data.basis.to_vec();
    let d = basis.len();
    let mut current = k_gram_schmidt(&basis)?;
    for j in 1..d {
        for i in (0..j).rev() {
            let c = match rounder {
                Rounder::Coordinate => coordinate_round(&current.mu[j][i]),
                Rounder::CrtScaled(b) => crt_scaled_round(&current.mu[j][i], b),
            };
            basis[j] = basis[j].sub(&basis[i].scale_ring(&c)?)?;
            current = k_gram_schmidt(&basis)?;
        }
    }
    debug_assert!(current
        .gram_diag
        .iter()
        .zip(&data.gram_diag)
        .all(|(a, b)| a == b));
    let mut residual_sup = 0.0f64;
    for j in 1..d {
        for i in 0..j {
            residual_sup = residual_sup.max(current.mu[j][i].embed().norm_inf());
        }
    }
    let module_preserving = matches!(rounder, Rounder::Coordinate);
    Ok(SizeReduced {
        data: current,
        residual_sup,
        module_preserving,
    })
}

/// det_R(M) = ∏_i B_i, exact (equals the determinant of the K-valued Gram
/// matrix by orthogonality).
pub fn det_r(data: &GramSchmidtData) -> Result<RingElement> {
    let mut acc = RingElement::one(data.params());
    for b in &data.gram_diag {
        acc = acc.mul(b)?;
    }
    Ok(acc)
}

/// Determinant of the K-valued Gram matrix ⟨b_i, b_j⟩_K by exact elimination
/// over K — the oracle side of the det-product identity.
pub fn gram_matrix_det(basis: &[ModuleVector]) -> Result<RingElement> {
    let d = basis.len();
    let params = basis[0].params();
    let mut m: Vec<Vec<RingElement>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut row = Vec::with_capacity(d);
        for j in 0..d {
            row.push(k_inner(&basis[i], &basis[j])?);
        }
        m.push(row);
    }
    let mut det = RingElement::one(params);
    for col in 0..d {
        let pivot_row = (col..d)
            .find(|&r| !m[r][col].is_zero())
            .ok_or(Error::RankDeficient(col))?;
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = det.neg();
        }
        let pivot = m[col][col].clone();
        det = det.mul(&pivot)?;
        let inv = pivot.invert()?;
        for r in col + 1..d {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].mul(&inv)?;
            for c in col..d {
                let sub = factor.mul(&m[col][c])?;
                m[r][c] = m[r][c].sub(&sub)?;
            }
        }
    }
    Ok(det)
}

/// det(σ(M)) = n^{dn/2} · ∏_i |Nm(B_i)|^{1/2}.
pub fn covolume(data: &GramSchmidtData) -> f64 {
    let n = data.params().n() as f64;
    let d = data.rank() as f64;
    let mut log_det = d * n / 2.0 * n.ln();
    for b in &data.gram_diag {
        log_det += 0.5 * log_abs_norm(b);
    }
    log_det.exp()
}

/// Covolume of the rank-1 line J·b̃_i: |Nm(J)| · n^{n/2} · |Nm(B_i)|^{1/2}.
pub fn line_covolume(j_norm: f64, gram_value: &RingElement) -> f64 {
    let n = gram_value.params().n() as f64;
    j_norm * (n / 2.0 * n.ln() + 0.5 * log_abs_norm(gram_value)).exp()
}

/// log |Nm(a)| through the embedding.
pub fn log_abs_norm(a: &RingElement) -> f64 {
    a.embed().values().iter().map(|v| v.norm().ln()).sum()
}

/// C = max_i ‖σ(b̃_i)‖₂² / (n · |Nm(B_i)|^{1/n}); ≥ 1 by AM-GM.
pub fn balance_constant(data: &GramSchmidtData) -> f64 {
    let n = data.params().n() as f64;
    data.gram_diag
        .iter()
        .map(|b| {
            let tr = rational_to_f64(&b.trace());
            let gm = (log_abs_norm(b) / n).exp();
            tr / (n * gm)
        })
        .fold(0.0, f64::max)
}

/// A basis from integer coefficient arrays, vectors[i][t][m].
pub fn basis_from_integers(
    params: RingParams,
    vectors: &[Vec<Vec<i64>>],
) -> Result<Vec<ModuleVector>> {
    vectors
        .iter()
        .map(|v| {
            let entries = v
                .iter()
                .map(|coeffs| RingElement::from_integers(params, coeffs))
                .collect::<Result<Vec<_>>>()?;
            ModuleVector::new(entries)
        })
        .collect()
}

pub(crate) fn bigr(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}
