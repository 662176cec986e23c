//! Orbit-group combinatorics, log-sine geometry, the cyclotomic-unit log
//! lattice, the decode error matrix, and short-generator recovery.
//!
//! The orbit group G = (Z/2^k)^×/{±1} is cyclic of order 2^{k-2}, generated
//! by 5. Everything here is indexed by powers of 5: position j holds the
//! orbit representative orb(j) = min(5^j mod 2^k, 2^k − 5^j mod 2^k).

use num_traits::Zero;

use crate::cyclotomic::{RingElement, RingParams};
use crate::signopt::SignSolution;
use crate::{Error, Result};

/// Orbit representatives of G under the generator 5.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    k: u32,
    reps: Vec<usize>,
}

impl OrbitTable {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn size(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }
}

pub fn orbit_table(k: u32) -> Result<OrbitTable> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("k must be >= 3, got {k}")));
    }
    let modulus = 1usize << k;
    let size = 1usize << (k - 2);
    let mut reps = Vec::with_capacity(size);
    let mut x = 1usize;
    for _ in 0..size {
        reps.push(x.min(modulus - x));
        x = x * 5 % modulus;
    }
    debug_assert!(reps.iter().all(|&r| r % 2 == 1 && r < modulus / 2));
    Ok(OrbitTable { k, reps })
}

/// z_j = log(2|sin(π·orb(j)/2^k)|); Σ_j z_j = ½ log 2.
#[derive(Clone, Debug)]
pub struct LogSineVector {
    k: u32,
    z: Vec<f64>,
}

impl LogSineVector {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }
}

pub fn log_sine(k: u32) -> Result<LogSineVector> {
    let orbit = orbit_table(k)?;
    let modulus = (1usize << k) as f64;
    let z = orbit
        .reps()
        .iter()
        .map(|&r| (2.0 * (std::f64::consts::PI * r as f64 / modulus).sin()).ln())
        .collect();
    Ok(LogSineVector { k, z })
}

/// Which |G|−1 of the |G| circulant columns form the error matrix.
///
/// With the fixed DFT convention the column at orbit position 0 vanishes
/// identically; excluding it is the calibrated default. The alternative
/// offset keeps positions 0..|G|−2 and is retained for convention searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnOffset {
    ExcludeZero,
    IncludeZero,
}

/// The |G| × (|G|−1) decode error matrix.
///
/// Forward DFT unnormalized, inverse scaled by 1/|G|, over Z/|G| ordered by
/// powers of 5; e_j^ext carries ½ at orbit position j. The transform pair
/// then reduces to M[i][j] = ½·z[(i−j) mod |G|] − ½·z[i].
#[derive(Clone, Debug)]
pub struct ErrorMatrix {
    k: u32,
    rows: Vec<Vec<f64>>,
    offset: ColumnOffset,
}

impl ErrorMatrix {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn group_size(&self) -> usize {
        self.rows.len()
    }

    pub fn num_signs(&self) -> usize {
        self.group_size() - 1
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn dft_convention(&self) -> &'static str {
        "forward unnormalized, inverse 1/|G|, orbit order = powers of 5"
    }

    pub fn column_offset(&self) -> ColumnOffset {
        self.offset
    }

    /// Ms for s ∈ {±1}^{N_s} (or any real weights).
    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(s).map(|(m, x)| m * x).sum())
            .collect()
    }

    /// ‖Ms‖∞.
    pub fn discrepancy(&self, s: &[f64]) -> f64 {
        self.apply(s).iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Tower level of sign column c (orbit position j = c+1 under the
    /// default offset): L = k − v₂(j), so level 3 is the single deepest
    /// column and the odd positions are new at level k.
    pub fn column_level(&self, c: usize) -> u32 {
        let j = match self.offset {
            ColumnOffset::ExcludeZero => c + 1,
            ColumnOffset::IncludeZero => {
                if c == 0 {
                    return 0;
                } else {
                    c
                }
            }
        };
        self.k - j.trailing_zeros()
    }
}

pub fn error_matrix(k: u32) -> Result<ErrorMatrix> {
    error_matrix_with(k, ColumnOffset::ExcludeZero)
}

pub fn error_matrix_with(k: u32, offset: ColumnOffset) -> Result<ErrorMatrix> {
    if k < 4 {
        return Err(Error::InvalidParameter(format!(
            "error matrix needs k >= 4, got {k}"
        )));
    }
    let z = log_sine(k)?;
    let z = z.values();
    let size = z.len();
    let mut rows = vec![Vec::with_capacity(size - 1); size];
    for c in 0..size - 1 {
        let j = match offset {
            ColumnOffset::ExcludeZero => c + 1,
            ColumnOffset::IncludeZero => c,
        };
        for (i, row) in rows.iter_mut().enumerate() {
            row.push(0.5 * z[(i + size - j) % size] - 0.5 * z[i]);
        }
    }
    Ok(ErrorMatrix { k, rows, offset })
}

/// Rows of the folded log embedding of the cyclotomic units ξ_{orb(j)},
/// j = 1..|G|−1: row_j[i] = 2·(z[(i+j) mod |G|] − z[i]). All rows lie in the
/// trace-zero hyperplane.
#[derive(Clone, Debug)]
pub struct UnitLogBasis {
    k: u32,
    rows: Vec<Vec<f64>>,
}

impl UnitLogBasis {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn group_size(&self) -> usize {
        self.rows.len() + 1
    }

    /// Gram determinant of the rows; positive iff the rows are independent.
    pub fn gram_determinant(&self) -> f64 {
        let r = self.rows.len();
        let mut gram = vec![vec![0.0f64; r]; r];
        for i in 0..r {
            for j in 0..r {
                gram[i][j] = dot(&self.rows[i], &self.rows[j]);
            }
        }
        det_in_place(&mut gram)
    }

    /// Numerical rank of the row span.
    pub fn rank(&self) -> usize {
        let mut m = self.rows.clone();
        let rows = m.len();
        let cols = m[0].len();
        let mut rank = 0;
        let mut col = 0;
        while rank < rows && col < cols {
            let (piv, val) = (rank..rows)
                .map(|r| (r, m[r][col].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if val < 1e-9 {
                col += 1;
                continue;
            }
            m.swap(rank, piv);
            let lead = m[rank][col];
            for r in rank + 1..rows {
                let f = m[r][col] / lead;
                for c in col..cols {
                    m[r][c] -= f * m[rank][c];
                }
            }
            rank += 1;
            col += 1;
        }
        rank
    }
}

pub fn unit_log_basis(k: u32) -> Result<UnitLogBasis> {
    let z = log_sine(k)?;
    let z = z.values();
    let size = z.len();
    let mut rows = Vec::with_capacity(size.saturating_sub(1));
    for j in 1..size {
        let row = (0..size)
            .map(|i| 2.0 * (z[(i + j) % size] - z[i]))
            .collect();
        rows.push(row);
    }
    Ok(UnitLogBasis { k, rows })
}

/// The real cyclotomic unit ξ_a = ζ^{(1−a)/2} (1 + ζ + … + ζ^{a−1}), exact.
///
/// log|σ_b(ξ_a)| = z(ab) − z(b), matching the unit-log rows.
pub fn cyclotomic_unit(params: RingParams, a: usize) -> Result<RingElement> {
    if a % 2 == 0 || a == 0 {
        return Err(Error::InvalidParameter(format!(
            "unit index must be odd and positive, got {a}"
        )));
    }
    let n = params.n();
    let order = params.root_order();
    let mut coeffs = vec![num_rational::BigRational::zero(); n];
    // (1−a)/2 mod 2^k as the starting exponent
    let shift = ((order as i64 + (1 - a as i64) / 2) % order as i64 + order as i64) as usize % order;
    for t in 0..a {
        let e = (shift + t) % order;
        if e < n {
            coeffs[e] += num_rational::BigRational::from_integer(1.into());
        } else {
            coeffs[e - n] -= num_rational::BigRational::from_integer(1.into());
        }
    }
    RingElement::new(params, coeffs)
}

/// Exact inverse of a unit u ∈ R^×: ±∏_{σ≠id} σ(u), sign fixed by Nm(u) = ±1.
pub fn unit_inverse(u: &RingElement) -> Result<RingElement> {
    let order = u.params().root_order();
    let mut prod = RingElement::one(u.params());
    for a in (3..order).step_by(2) {
        prod = prod.mul(&u.galois(a)?)?;
    }
    let nm = u.mul(&prod)?;
    let c0 = nm.coeffs()[0].clone();
    let rest_zero = nm.coeffs()[1..].iter().all(|c| c.is_zero());
    if !rest_zero || !c0.is_integer() {
        return Err(Error::NotAUnit(format!("{c0}")));
    }
    if c0 == num_rational::BigRational::from_integer(1.into()) {
        Ok(prod)
    } else if c0 == num_rational::BigRational::from_integer((-1).into()) {
        Ok(prod.neg())
    } else {
        Err(Error::NotAUnit(format!("{c0}")))
    }
}

/// ∏_j ξ_{orb(j)}^{e_j} for exponents indexed like the unit-log rows.
pub fn unit_from_exponents(params: RingParams, exponents: &[i64]) -> Result<RingElement> {
    let orbit = orbit_table(params.k())?;
    if exponents.len() != orbit.size() - 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected {} exponents, got {}",
            orbit.size() - 1,
            exponents.len()
        )));
    }
    let mut acc = RingElement::one(params);
    for (j, &e) in exponents.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let xi = cyclotomic_unit(params, orbit.reps()[j + 1])?;
        let base = if e > 0 { xi } else { unit_inverse(&xi)? };
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
    }
    Ok(acc)
}

/// Fold log|σ(a)| onto orbit coordinates by summing conjugate pairs:
/// t[i] = 2·log|σ_{orb(i)}(a)|.
pub fn fold_log_embedding(a: &RingElement) -> Result<Vec<f64>> {
    if a.is_zero() {
        return Err(Error::ZeroElement);
    }
    let orbit = orbit_table(a.params().k())?;
    let emb = a.embed();
    Ok(orbit
        .reps()
        .iter()
        .map(|&r| 2.0 * emb.value_at_residue(r).norm().ln())
        .collect())
}

/// Result of a Babai round-off decode against the unit-log rows.
#[derive(Clone, Debug)]
pub struct DecodeResult {
    pub exponents: Vec<i64>,
    pub residual: Vec<f64>,
    pub residual_inf: f64,
}

/// Babai round-off: least-squares coefficients through the row Gram matrix,
/// then rounding with half-integer ties toward zero. When `signs` is given,
/// each coefficient is shifted by s_j/2 before rounding (the directional
/// variant whose systematic bias is the error-matrix column sum).
pub fn cdpr_decode(
    target: &[f64],
    basis: &UnitLogBasis,
    signs: Option<&SignSolution>,
) -> Result<DecodeResult> {
    let coeffs = solve_coefficients(basis, target)?;
    let exponents: Vec<i64> = match signs {
        None => coeffs.iter().map(|&c| round_ties_to_zero(c)).collect(),
        Some(sol) => {
            if sol.signs().len() != coeffs.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} signs for {} coefficients",
                    sol.signs().len(),
                    coeffs.len()
                )));
            }
            coeffs
                .iter()
                .zip(sol.signs())
                .map(|(&c, &s)| round_ties_to_zero(c + 0.5 * s as f64))
                .collect()
        }
    };
    Ok(finish_decode(basis, target, exponents))
}

fn finish_decode(basis: &UnitLogBasis, target: &[f64], exponents: Vec<i64>) -> DecodeResult {
    let residual = residual_of(basis, target, &exponents);
    let residual_inf = residual.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    DecodeResult {
        exponents,
        residual,
        residual_inf,
    }
}

fn residual_of(basis: &UnitLogBasis, target: &[f64], exponents: &[i64]) -> Vec<f64> {
    let size = target.len();
    let mut r = target.to_vec();
    for (row, &e) in basis.rows().iter().zip(exponents) {
        if e != 0 {
            for i in 0..size {
                r[i] -= e as f64 * row[i];
            }
        }
    }
    r
}

/// Least-squares solve of Σ c_j row_j ≈ target via the row Gram matrix.
fn solve_coefficients(basis: &UnitLogBasis, target: &[f64]) -> Result<Vec<f64>> {
    let rows = basis.rows();
    if target.len() != basis.group_size() {
        return Err(Error::DimensionMismatch(format!(
            "target length {} vs |G| = {}",
            target.len(),
            basis.group_size()
        )));
    }
    let r = rows.len();
    let mut gram = vec![vec![0.0f64; r + 1]; r];
    for i in 0..r {
        for j in 0..r {
            gram[i][j] = dot(&rows[i], &rows[j]);
        }
        gram[i][r] = dot(&rows[i], target);
    }
    solve_linear(&mut gram).ok_or(Error::RankDeficient(0))
}

fn round_ties_to_zero(x: f64) -> i64 {
    let f = x.fract().abs();
    if (f - 0.5).abs() < 1e-12 {
        x.trunc() as i64
    } else {
        x.round() as i64
    }
}

/// Outcome of short-generator recovery.
#[derive(Clone, Debug)]
pub struct ShortGenerator {
    pub element: RingElement,
    pub exponents: Vec<i64>,
    /// true when the decode failed and the input was returned unchanged
    pub decode_failed: bool,
}

/// Shorten a generator: α' = u^{-1} α₀ for a cyclotomic-unit product u chosen
/// to flatten the log profile of α₀.
///
/// The exponents start from Babai round-off, then an exact search over
/// offsets within ℓ∞ radius 2 (for |G|−1 ≤ 8) and single-coordinate descent
/// minimize the true embedding norm in the log domain. The output generates
/// the same ideal; |Nm| is preserved exactly and the quotient is a unit.
pub fn short_generator(alpha0: &RingElement, k: u32) -> Result<ShortGenerator> {
    if alpha0.is_zero() {
        return Err(Error::ZeroElement);
    }
    if alpha0.params().k() != k {
        return Err(Error::ParamMismatch(format!(
            "element has k={}, requested k={k}",
            alpha0.params().k()
        )));
    }
    let basis = unit_log_basis(k)?;
    let target = fold_log_embedding(alpha0)?;
    let exponents = decode_refined(&basis, &target);
    let u = unit_from_exponents(alpha0.params(), &exponents)?;
    let u_inv = match unit_inverse(&u) {
        Ok(inv) => inv,
        Err(_) => {
            return Ok(ShortGenerator {
                element: alpha0.clone(),
                exponents: vec![0; exponents.len()],
                decode_failed: true,
            })
        }
    };
    let element = canonicalize_torsion(&alpha0.mul(&u_inv)?);
    Ok(ShortGenerator {
        element,
        exponents,
        decode_failed: false,
    })
}

/// Round-off initialization plus bounded exact offset search and coordinate
/// descent, minimizing ‖σ(α₀ · ∏ξ^{-e})‖₂² = Σ_i 2·exp(t_i − (eᵀrows)_i).
pub(crate) fn decode_refined(basis: &UnitLogBasis, target: &[f64]) -> Vec<i64> {
    let rows = basis.rows();
    let r = rows.len();
    let coeffs = match solve_coefficients(basis, target) {
        Ok(c) => c,
        Err(_) => vec![0.0; r],
    };
    let mut exponents: Vec<i64> = coeffs.iter().map(|&c| round_ties_to_zero(c)).collect();
    let mut log_profile = residual_of(basis, target, &exponents);

    let norm_sq = |lp: &[f64]| lp.iter().map(|&v| 2.0 * v.exp()).sum::<f64>();

    if r <= 8 {
        // exact search over the ±2 box around the round-off point
        let mut best = norm_sq(&log_profile);
        let mut best_off = vec![0i64; r];
        let mut off = vec![-2i64; r];
        'outer: loop {
            let mut lp = log_profile.clone();
            for (j, &o) in off.iter().enumerate() {
                if o != 0 {
                    for i in 0..lp.len() {
                        lp[i] -= o as f64 * rows[j][i];
                    }
                }
            }
            let v = norm_sq(&lp);
            if v < best {
                best = v;
                best_off = off.clone();
            }
            for j in 0..r {
                off[j] += 1;
                if off[j] <= 2 {
                    continue 'outer;
                }
                off[j] = -2;
            }
            break;
        }
        for (e, o) in exponents.iter_mut().zip(&best_off) {
            *e += o;
        }
        log_profile = residual_of(basis, target, &exponents);
    }

    // single-coordinate polish
    let mut current = norm_sq(&log_profile);
    for _ in 0..64 {
        let mut improved = false;
        for j in 0..r {
            for delta in [1i64, -1] {
                let lp: Vec<f64> = log_profile
                    .iter()
                    .zip(&rows[j])
                    .map(|(&v, &w)| v - delta as f64 * w)
                    .collect();
                let val = norm_sq(&lp);
                if val < current - 1e-12 {
                    exponents[j] += delta;
                    log_profile = lp;
                    current = val;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    exponents
}

/// Deterministic representative among the torsion multiples ±ζ^m·α: the one
/// with the lexicographically largest coefficient vector.
pub fn canonicalize_torsion(alpha: &RingElement) -> RingElement {
    let params = alpha.params();
    let n = params.n();
    let mut best = alpha.clone();
    for m in 0..n {
        let shifted = alpha
            .mul(&RingElement::monomial(params, m))
            .expect("same params");
        for cand in [shifted.neg(), shifted] {
            if lex_greater(&cand, &best) {
                best = cand;
            }
        }
    }
    best
}

fn lex_greater(a: &RingElement, b: &RingElement) -> bool {
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        match x.cmp(y) {
            std::cmp::Ordering::Greater => return true,
            std::cmp::Ordering::Less => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on an augmented matrix
/// [A | b]; returns x or None when singular.
pub(crate) fn solve_linear(aug: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = aug.len();
    for col in 0..n {
        let (piv, val) = (col..n)
            .map(|r| (r, aug[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if val < 1e-12 {
            return None;
        }
        aug.swap(col, piv);
        for r in col + 1..n {
            let f = aug[r][col] / aug[col][col];
            if f != 0.0 {
                for c in col..=n {
                    let sub = f * aug[col][c];
                    aug[r][c] -= sub;
                }
            }
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = aug[row][n];
        for c in row + 1..n {
            acc -= aug[row][c] * x[c];
        }
        x[row] = acc / aug[row][row];
    }
    Some(x)
}

fn det_in_place(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0f64;
    for col in 0..n {
        let (piv, val) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if val < 1e-12 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}
