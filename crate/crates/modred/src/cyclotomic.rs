//! Exact arithmetic in R = Z[x]/(x^n + 1) and K = Q(ζ_{2^k}), with the
//! Galois embedding, trace, norm and log embedding.
//!
//! Coefficients are exact rationals in the power basis {1, ζ, …, ζ^{n-1}};
//! nothing in this module rounds. Embeddings evaluate at the complex roots
//! ζ^ℓ for the n odd residues ℓ = 1, 3, …, 2n−1 (mod 2^k), in that order.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Parameters of the 2^k-th cyclotomic ring: n = 2^{k-1}, modulus x^n + 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingParams {
    k: u32,
}

impl RingParams {
    pub fn new(k: u32) -> Result<Self> {
        if !(3..=20).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "k must be in 3..=20, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Field degree n = 2^{k-1}.
    pub fn n(&self) -> usize {
        1 << (self.k - 1)
    }

    /// The root order 2^k = 2n.
    pub fn root_order(&self) -> usize {
        1 << self.k
    }
}

/// An element of K (or of R when all denominators are 1) in the power basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingElement {
    params: RingParams,
    coeffs: Vec<BigRational>,
}

impl RingElement {
    pub fn new(params: RingParams, coeffs: Vec<BigRational>) -> Result<Self> {
        if coeffs.len() != params.n() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                params.n(),
                coeffs.len()
            )));
        }
        Ok(Self { params, coeffs })
    }

    pub fn zero(params: RingParams) -> Self {
        Self {
            params,
            coeffs: vec![BigRational::zero(); params.n()],
        }
    }

    pub fn one(params: RingParams) -> Self {
        Self::monomial(params, 0)
    }

    /// ζ^m for 0 ≤ m < n.
    pub fn monomial(params: RingParams, m: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); params.n()];
        coeffs[m % params.n()] = BigRational::one();
        Self { params, coeffs }
    }

    pub fn from_integers(params: RingParams, ints: &[i64]) -> Result<Self> {
        let coeffs = ints
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect();
        Self::new(params, coeffs)
    }

    pub fn scalar(params: RingParams, value: BigRational) -> Self {
        let mut out = Self::zero(params);
        out.coeffs[0] = value;
        out
    }

    pub fn params(&self) -> RingParams {
        self.params
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// True when every coefficient is an integer, i.e. the element lies in R.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    fn check_params(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ParamMismatch(format!(
                "k={} vs k={}",
                self.params.k, other.params.k
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_params(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            params: self.params,
            coeffs,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_params(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            params: self.params,
            coeffs,
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            params: self.params,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    /// Exact negacyclic product, reducing with ζ^n = −1. Schoolbook O(n²).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_params(other)?;
        let n = self.params.n();
        let mut out = vec![BigRational::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = a * b;
                let idx = i + j;
                if idx < n {
                    out[idx] += prod;
                } else {
                    out[idx - n] -= prod;
                }
            }
        }
        Ok(Self {
            params: self.params,
            coeffs: out,
        })
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self {
            params: self.params,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// The ring involution ζ ↦ ζ^{-1} (complex conjugation on every embedding).
    pub fn conjugate(&self) -> Self {
        let n = self.params.n();
        let mut out = vec![BigRational::zero(); n];
        out[0] = self.coeffs[0].clone();
        for m in 1..n {
            out[m] = -self.coeffs[n - m].clone();
        }
        Self {
            params: self.params,
            coeffs: out,
        }
    }

    /// Galois automorphism σ_a: ζ ↦ ζ^a for odd a.
    pub fn galois(&self, a: usize) -> Result<Self> {
        if a % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "galois index must be odd, got {a}"
            )));
        }
        let n = self.params.n();
        let order = self.params.root_order();
        let mut out = vec![BigRational::zero(); n];
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = (a * m) % order;
            if e < n {
                out[e] += c;
            } else {
                out[e - n] -= c;
            }
        }
        Ok(Self {
            params: self.params,
            coeffs: out,
        })
    }

    /// Field trace. In the power basis Tr(ζ^m) = 0 for 1 ≤ m ≤ n−1, so
    /// Tr(a) = n·a_0 exactly.
    pub fn trace(&self) -> BigRational {
        &self.coeffs[0] * BigRational::from_integer(BigInt::from(self.params.n()))
    }

    /// Exact field norm ∏_a σ_a(α) as a rational.
    pub fn norm_exact(&self) -> BigRational {
        let order = self.params.root_order();
        let mut acc = self.clone();
        for a in (3..order).step_by(2) {
            acc = acc.mul(&self.galois(a).expect("odd index")).expect("params");
        }
        debug_assert!(
            acc.coeffs[1..].iter().all(|c| c.is_zero()),
            "norm must be rational"
        );
        acc.coeffs[0].clone()
    }

    /// Exact inverse 1/α = (∏_{σ≠id} σ(α)) / Nm(α).
    pub fn invert(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroElement);
        }
        let order = self.params.root_order();
        let mut prod = Self::one(self.params);
        for a in (3..order).step_by(2) {
            prod = prod.mul(&self.galois(a)?)?;
        }
        let nm = self.mul(&prod)?;
        debug_assert!(nm.coeffs[1..].iter().all(|c| c.is_zero()));
        let nm0 = nm.coeffs[0].clone();
        if nm0.is_zero() {
            return Err(Error::ZeroElement);
        }
        Ok(prod.scale(&nm0.recip()))
    }

    /// Galois embedding at the n odd residues, ascending.
    pub fn embed(&self) -> EmbeddingVector {
        galois_embed(self, 53).expect("53 bits is always valid")
    }

    /// log|σ_ℓ(a)| for every odd residue ℓ, ascending.
    pub fn log_embedding(&self) -> Result<Vec<f64>> {
        if self.is_zero() {
            return Err(Error::ZeroElement);
        }
        Ok(self.embed().values().iter().map(|v| v.norm().ln()).collect())
    }

    /// Squared coefficient l2 norm Σ a_m², exact.
    pub fn coeff_norm_sq(&self) -> BigRational {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// The image of an element under the full Galois embedding, indexed by the
/// odd residues 1, 3, …, 2n−1 (mod 2^k) in ascending order.
#[derive(Clone, Debug)]
pub struct EmbeddingVector {
    params: RingParams,
    values: Vec<Complex64>,
    precision_bits: u32,
}

impl EmbeddingVector {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn params(&self) -> RingParams {
        self.params
    }

    /// Effective working precision in bits.
    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// σ_a for an odd residue a (mod 2^k).
    pub fn value_at_residue(&self, a: usize) -> Complex64 {
        let order = self.params.root_order();
        let a = a % order;
        debug_assert!(a % 2 == 1);
        self.values[(a - 1) / 2]
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Componentwise product (the embedding of a ring product).
    pub fn hadamard(&self, other: &Self) -> Self {
        debug_assert_eq!(self.params, other.params);
        Self {
            params: self.params,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
            precision_bits: self.precision_bits.min(other.precision_bits),
        }
    }
}

/// Table of the 2n-th roots of unity e^{2πi t / 2^k}, t = 0..2n−1.
pub(crate) fn root_table(params: RingParams) -> Vec<Complex64> {
    let order = params.root_order();
    (0..order)
        .map(|t| {
            let theta = 2.0 * std::f64::consts::PI * t as f64 / order as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

/// Full Galois embedding σ(a) = (σ_1(a), σ_3(a), …, σ_{2n−1}(a)).
///
/// `precision` must be at least 53; evaluation runs in f64 (53-bit
/// significand), which is the effective precision recorded on the result.
pub fn galois_embed(a: &RingElement, precision: u32) -> Result<EmbeddingVector> {
    if precision < 53 {
        return Err(Error::InvalidParameter(format!(
            "embedding precision must be >= 53 bits, got {precision}"
        )));
    }
    let params = a.params();
    let n = params.n();
    let order = params.root_order();
    let roots = root_table(params);
    let xs: Vec<f64> = a.coeffs().iter().map(|c| rational_to_f64(c)).collect();
    let mut values = Vec::with_capacity(n);
    for l in (1..order).step_by(2) {
        // compensated accumulation of Σ x_m ζ^{l m}
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        let mut re_c = 0.0f64;
        let mut im_c = 0.0f64;
        let mut idx = 0usize;
        for &x in &xs {
            if x != 0.0 {
                let w = roots[idx];
                let (tr, ti) = (x * w.re, x * w.im);
                let y = tr - re_c;
                let t = re + y;
                re_c = (t - re) - y;
                re = t;
                let y = ti - im_c;
                let t = im + y;
                im_c = (t - im) - y;
                im = t;
            }
            idx += l;
            if idx >= order {
                idx -= order;
            }
        }
        values.push(Complex64::new(re, im));
    }
    Ok(EmbeddingVector {
        params,
        values,
        precision_bits: 53,
    })
}

/// |Nm_{K/Q}(a)| evaluated through the embedding.
pub fn field_norm(a: &RingElement, precision: u32) -> Result<f64> {
    let emb = galois_embed(a, precision)?;
    Ok(emb.values().iter().map(|v| v.norm()).product())
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // fall back through a quotient of f64-sized chunks
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Nearest integer, ties rounded half-away-from-zero.
pub fn round_half_away(q: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    let num = q.numer() * &two + q.denom() * q.signum().numer();
    num / (q.denom() * &two)
}
