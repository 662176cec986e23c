//! Totally split primes, the NTT over F_p, CRT recombination, and the two
//! rounding functions (coordinate-wise and CRT-scaled).
//!
//! A prime p ≡ 1 (mod 2n) splits x^n + 1 into n linear factors mod p, so
//! R/pR ≅ F_p^n through evaluation at the odd powers of a primitive 2n-th
//! root of unity. The transform here returns values ordered by odd residue
//! ascending, matching the embedding order of [`crate::cyclotomic`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cyclotomic::{round_half_away, RingElement};
use crate::{Error, Result};

/// Precomputed NTT context for one totally split prime.
#[derive(Clone, Debug)]
pub struct SplitPrimeContext {
    p: u64,
    n: usize,
    /// primitive 2n-th root of unity mod p
    zeta: u64,
    /// ζ^m for m = 0..n−1 (the negacyclic pre-twist)
    psi_pows: Vec<u64>,
    psi_inv_pows: Vec<u64>,
    /// ω = ζ² powers for the cyclic size-n stages
    omega_pows: Vec<u64>,
    omega_inv_pows: Vec<u64>,
    n_inv: u64,
}

impl SplitPrimeContext {
    pub fn new(p: u64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("n must be a power of two, got {n}")));
        }
        if p as u128 % (2 * n as u128) != 1 {
            return Err(Error::InvalidParameter(format!("{p} != 1 mod {}", 2 * n)));
        }
        if !is_prime_u64(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        let zeta = primitive_root_of_unity(p, 2 * n as u64)?;
        debug_assert_eq!(pow_mod(zeta, n as u64, p), p - 1, "zeta^n must be -1");
        let zeta_inv = pow_mod(zeta, 2 * n as u64 - 1, p);
        let omega = mul_mod(zeta, zeta, p);
        let omega_inv = mul_mod(zeta_inv, zeta_inv, p);
        let mut psi_pows = Vec::with_capacity(n);
        let mut psi_inv_pows = Vec::with_capacity(n);
        let mut omega_pows = Vec::with_capacity(n);
        let mut omega_inv_pows = Vec::with_capacity(n);
        let (mut a, mut b, mut c, mut d) = (1u64, 1u64, 1u64, 1u64);
        for _ in 0..n {
            psi_pows.push(a);
            psi_inv_pows.push(b);
            omega_pows.push(c);
            omega_inv_pows.push(d);
            a = mul_mod(a, zeta, p);
            b = mul_mod(b, zeta_inv, p);
            c = mul_mod(c, omega, p);
            d = mul_mod(d, omega_inv, p);
        }
        let n_inv = pow_mod(n as u64 % p, p - 2, p);
        Ok(Self {
            p,
            n,
            zeta,
            psi_pows,
            psi_inv_pows,
            omega_pows,
            omega_inv_pows,
            n_inv,
        })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn zeta(&self) -> u64 {
        self.zeta
    }

    /// Forward transform: a ↦ (a(ζ^1), a(ζ^3), …, a(ζ^{2n−1})).
    ///
    /// Pre-twisting by ζ^m turns the negacyclic evaluation into a cyclic
    /// DFT whose natural output order is exactly odd residues ascending.
    pub fn ntt(&self, a: &[u64]) -> Vec<u64> {
        debug_assert_eq!(a.len(), self.n);
        let mut v: Vec<u64> = a
            .iter()
            .enumerate()
            .map(|(m, &x)| mul_mod(x % self.p, self.psi_pows[m], self.p))
            .collect();
        self.cyclic_fft(&mut v, &self.omega_pows);
        v
    }

    /// Inverse of [`Self::ntt`]; exact on every input.
    pub fn intt(&self, vals: &[u64]) -> Vec<u64> {
        debug_assert_eq!(vals.len(), self.n);
        let mut v = vals.to_vec();
        self.cyclic_fft(&mut v, &self.omega_inv_pows);
        for (m, x) in v.iter_mut().enumerate() {
            *x = mul_mod(mul_mod(*x, self.n_inv, self.p), self.psi_inv_pows[m], self.p);
        }
        v
    }

    /// Iterative radix-2 DFT, bit-reversed input, natural output.
    fn cyclic_fft(&self, v: &mut [u64], w_pows: &[u64]) {
        let n = v.len();
        let p = self.p;
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                v.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for t in 0..len / 2 {
                    let w = w_pows[t * step];
                    let u = v[start + t];
                    let x = mul_mod(v[start + t + len / 2], w, p);
                    v[start + t] = add_mod(u, x, p);
                    v[start + t + len / 2] = sub_mod(u, x, p);
                }
            }
            len <<= 1;
        }
    }

    /// Value in the symmetric range {−⌊p/2⌋, …, ⌊p/2⌋}.
    pub fn symmetric_lift(&self, x: u64) -> i64 {
        if x <= (self.p - 1) / 2 {
            x as i64
        } else {
            x as i64 - self.p as i64
        }
    }
}

/// A set of split-prime contexts with product P, used for scaled rounding.
#[derive(Clone, Debug)]
pub struct CrtBasis {
    contexts: Vec<SplitPrimeContext>,
    product: BigInt,
}

impl CrtBasis {
    pub fn from_primes(primes: &[u64], n: usize) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidParameter("empty prime set".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &p in primes {
            if !seen.insert(p) {
                return Err(Error::InvalidParameter(format!("duplicate prime {p}")));
            }
        }
        let contexts = primes
            .iter()
            .map(|&p| SplitPrimeContext::new(p, n))
            .collect::<Result<Vec<_>>>()?;
        let product = primes.iter().map(|&p| BigInt::from(p)).product();
        Ok(Self { contexts, product })
    }

    pub fn contexts(&self) -> &[SplitPrimeContext] {
        &self.contexts
    }

    pub fn primes(&self) -> Vec<u64> {
        self.contexts.iter().map(|c| c.p).collect()
    }

    /// P = ∏ p_s.
    pub fn product(&self) -> &BigInt {
        &self.product
    }

    /// Symmetric CRT recombination of one residue per prime.
    pub fn combine_symmetric(&self, residues: &[u64]) -> BigInt {
        debug_assert_eq!(residues.len(), self.contexts.len());
        let mut x = BigInt::zero();
        let mut modulus = BigInt::one();
        for (ctx, &r) in self.contexts.iter().zip(residues) {
            let p = BigInt::from(ctx.p);
            // lift x mod modulus to x' ≡ r (mod p)
            let diff = (BigInt::from(r) - &x).mod_floor(&p);
            let inv = mod_inverse(&modulus, &p);
            x += &modulus * ((diff * inv).mod_floor(&p));
            modulus *= &p;
        }
        // symmetric representative mod P
        let half = (&self.product - 1) / 2;
        if x > half {
            x -= &self.product;
        }
        x
    }
}

/// Smallest primes p ≡ 1 (mod 2n), ascending, until their product reaches
/// `target`.
pub fn find_split_primes(n: usize, target: &BigInt) -> Result<CrtBasis> {
    if !n.is_power_of_two() || n < 4 {
        return Err(Error::InvalidParameter(format!("bad degree {n}")));
    }
    if target < &BigInt::one() {
        return Err(Error::InvalidParameter("target must be >= 1".into()));
    }
    let step = 2 * n as u64;
    let mut primes = Vec::new();
    let mut product = BigInt::one();
    let mut candidate = step + 1;
    while primes.is_empty() || product < *target {
        if is_prime_u64(candidate) {
            primes.push(candidate);
            product *= BigInt::from(candidate);
        }
        candidate += step;
    }
    CrtBasis::from_primes(&primes, n)
}

/// Nearest element of R, coefficient by coefficient; ties half-away-from-zero.
pub fn coordinate_round(t: &RingElement) -> RingElement {
    let coeffs = t
        .coeffs()
        .iter()
        .map(|c| BigRational::from_integer(round_half_away(c)))
        .collect();
    RingElement::new(t.params(), coeffs).expect("length preserved")
}

/// Nearest element of P^{-1}R: c_m = ⌊P·x_m⌉ / P per coefficient.
///
/// The integer part is routed through the per-prime residues and symmetric
/// CRT recombination, which reconstructs it exactly whenever the centered
/// fractional part fits the symmetric range (guaranteed after subtracting
/// the coordinate rounding, except the exact −1/2 tie which is kept direct).
pub fn crt_scaled_round(t: &RingElement, basis: &CrtBasis) -> RingElement {
    let params = t.params();
    let p_big = basis.product().clone();
    let p_rat = BigRational::from_integer(p_big.clone());
    let anchor = coordinate_round(t);
    let half = (&p_big - 1) / 2;
    let mut coeffs = Vec::with_capacity(params.n());
    for (x, g) in t.coeffs().iter().zip(anchor.coeffs()) {
        let frac = x - g; // in [−1/2, 1/2]
        let scaled = round_half_away(&(&frac * &p_rat));
        let w = if scaled.abs() <= half {
            // exercise the modular path: residues mod each p_s, then CRT
            let residues: Vec<u64> = basis
                .contexts()
                .iter()
                .map(|ctx| {
                    let p = BigInt::from(ctx.prime());
                    let r = scaled.mod_floor(&p);
                    r.to_u64_digits().1.first().copied().unwrap_or(0)
                })
                .collect();
            let rec = basis.combine_symmetric(&residues);
            debug_assert_eq!(rec, scaled);
            rec
        } else {
            scaled
        };
        coeffs.push(g + BigRational::new(w, p_big.clone()));
    }
    RingElement::new(params, coeffs).expect("length preserved")
}

/// Residues of an integral ring element modulo p, coefficient-wise.
pub fn reduce_mod_p(a: &RingElement, ctx: &SplitPrimeContext) -> Result<Vec<u64>> {
    if !a.is_integral() {
        return Err(Error::InvalidParameter(
            "reduction mod p requires integral coefficients".into(),
        ));
    }
    let p = BigInt::from(ctx.prime());
    Ok(a.coeffs()
        .iter()
        .map(|c| {
            let r = c.numer().mod_floor(&p);
            r.to_u64_digits().1.first().copied().unwrap_or(0)
        })
        .collect())
}

/// Schoolbook negacyclic product mod p (test oracle for the NTT path).
pub fn negacyclic_mul_mod(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0u64; n];
    for i in 0..n {
        if a[i] == 0 {
            continue;
        }
        for j in 0..n {
            let prod = mul_mod(a[i], b[j], p);
            let idx = i + j;
            if idx < n {
                out[idx] = add_mod(out[idx], prod, p);
            } else {
                out[idx - n] = sub_mod(out[idx - n], prod, p);
            }
        }
    }
    out
}

pub(crate) fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

pub(crate) fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn mod_inverse(a: &BigInt, p: &BigInt) -> BigInt {
    // p prime here; Fermat
    let e = p - 2;
    a.modpow(&e, p)
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A primitive m-th root of unity in F_p (requires m | p−1).
fn primitive_root_of_unity(p: u64, m: u64) -> Result<u64> {
    if (p - 1) % m != 0 {
        return Err(Error::InvalidParameter(format!("{m} does not divide {p}-1")));
    }
    let cof = (p - 1) / m;
    for g in 2..p {
        let r = pow_mod(g, cof, p);
        if pow_mod(r, m / 2, p) == p - 1 {
            return Ok(r);
        }
    }
    Err(Error::InvalidParameter(format!("no {m}-th root mod {p}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;
    use crate::cyclotomic::RingParams;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn smallest_split_prime_for_n4() {
        let basis = find_split_primes(4, &BigInt::one()).unwrap();
        assert_eq!(basis.primes(), vec![17]);
    }

    #[test]
    fn split_primes_for_n256() {
        // a single prime suffices for target 128; the true smallest is 7681
        let basis = find_split_primes(256, &BigInt::from(128)).unwrap();
        assert_eq!(basis.primes(), vec![7681]);
        for p in basis.primes() {
            assert_eq!(p % 512, 1);
            assert!(is_prime_u64(p));
        }
        // the paper-compat override
        let compat = CrtBasis::from_primes(&[12289], 256).unwrap();
        assert_eq!(compat.primes(), vec![12289]);
        assert_eq!(12289 % 512, 1);
    }

    #[test]
    fn ntt_of_one_is_all_ones() {
        let ctx = SplitPrimeContext::new(17, 4).unwrap();
        let a = [1u64, 0, 0, 0];
        assert_eq!(ctx.ntt(&a), vec![1, 1, 1, 1]);
    }

    #[test]
    fn ntt_matches_direct_evaluation() {
        let ctx = SplitPrimeContext::new(97, 8).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        let a: Vec<u64> = (0..8).map(|_| rng.gen_range(0..97)).collect();
        let fast = ctx.ntt(&a);
        for (idx, l) in (1..16).step_by(2).enumerate() {
            let x = pow_mod(ctx.zeta(), l as u64, 97);
            let mut acc = 0u64;
            let mut xe = 1u64;
            for &c in &a {
                acc = add_mod(acc, mul_mod(c, xe, 97), 97);
                xe = mul_mod(xe, x, 97);
            }
            assert_eq!(fast[idx], acc, "residue {l}");
        }
    }

    #[test]
    fn ntt_round_trip_n256() {
        let ctx = SplitPrimeContext::new(12289, 256).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let a: Vec<u64> = (0..256).map(|_| rng.gen_range(0..12289)).collect();
            assert_eq!(ctx.intt(&ctx.ntt(&a)), a);
        }
    }

    #[test]
    fn ntt_multiplication_homomorphism() {
        let ctx = SplitPrimeContext::new(12289, 256).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10 {
            let a: Vec<u64> = (0..256).map(|_| rng.gen_range(0..12289)).collect();
            let b: Vec<u64> = (0..256).map(|_| rng.gen_range(0..12289)).collect();
            let via_ntt: Vec<u64> = {
                let ha = ctx.ntt(&a);
                let hb = ctx.ntt(&b);
                let hc: Vec<u64> = ha
                    .iter()
                    .zip(&hb)
                    .map(|(&x, &y)| mul_mod(x, y, 12289))
                    .collect();
                ctx.intt(&hc)
            };
            assert_eq!(via_ntt, negacyclic_mul_mod(&a, &b, 12289));
        }
    }

    #[test]
    fn coordinate_round_bounds_n64() {
        let params = RingParams::new(7).unwrap(); // n = 64
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let coeffs: Vec<BigRational> = (0..64)
                .map(|_| {
                    BigRational::new(
                        BigInt::from(rng.gen_range(-10_000i64..=10_000)),
                        BigInt::from(1000),
                    )
                })
                .collect();
            let t = RingElement::new(params, coeffs).unwrap();
            let c = coordinate_round(&t);
            assert!(c.is_integral());
            let err = t.sub(&c).unwrap().embed();
            assert!(err.norm_inf() <= 32.0 + 1e-9);
            assert!(err.norm_l2() <= 32.0 + 1e-9);
        }
    }

    #[test]
    fn coordinate_round_exact_on_lattice() {
        let params = RingParams::new(4).unwrap();
        let t = RingElement::from_integers(params, &[4, -2, 0, 9, -7, 1, 0, 3]).unwrap();
        assert_eq!(coordinate_round(&t), t);
    }

    #[test]
    fn worst_case_target_half_sum() {
        // t = ½Σζ^m leaves an error of at least √n/2 under coordinate rounding
        let params = RingParams::new(7).unwrap(); // n = 64
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let t = RingElement::new(params, vec![half; 64]).unwrap();
        let c = coordinate_round(&t);
        let err = t.sub(&c).unwrap().embed();
        assert!(err.norm_inf() >= 4.0 - 1e-9); // √64 / 2
    }

    #[test]
    fn crt_scaled_round_single_prime() {
        let params = RingParams::new(9).unwrap(); // n = 256
        let basis = CrtBasis::from_primes(&[12289], 256).unwrap();
        let bound = 256.0 / (2.0 * 12289.0);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let coeffs: Vec<BigRational> = (0..256)
                .map(|_| {
                    BigRational::new(
                        BigInt::from(rng.gen_range(-10_000_000i64..=10_000_000)),
                        BigInt::from(1_000_000),
                    )
                })
                .collect();
            let t = RingElement::new(params, coeffs).unwrap();
            let c = crt_scaled_round(&t, &basis);
            let p = BigInt::from(12289);
            for coeff in c.coeffs() {
                assert!((coeff * BigRational::from_integer(p.clone())).is_integer());
            }
            let err = t.sub(&c).unwrap().embed();
            assert!(err.norm_inf() <= bound + 1e-12, "{} > {}", err.norm_inf(), bound);
        }
    }

    #[test]
    fn crt_scaled_round_two_primes() {
        let params = RingParams::new(4).unwrap(); // n = 8
        let basis = find_split_primes(8, &BigInt::from(1000)).unwrap();
        assert_eq!(basis.primes(), vec![17, 97]);
        assert_eq!(basis.product(), &BigInt::from(1649));
        let bound = 8.0 / (2.0 * 1649.0);
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..200 {
            let coeffs: Vec<BigRational> = (0..8)
                .map(|_| {
                    BigRational::new(
                        BigInt::from(rng.gen_range(-9000i64..=9000)),
                        BigInt::from(1000),
                    )
                })
                .collect();
            let t = RingElement::new(params, coeffs).unwrap();
            let c = crt_scaled_round(&t, &basis);
            let err = t.sub(&c).unwrap().embed();
            assert!(err.norm_inf() <= bound + 1e-12);
            // residual coefficients lie in [−1/(2P), 1/(2P)]
            let lim = BigRational::new(BigInt::one(), BigInt::from(2 * 1649));
            for (x, y) in t.coeffs().iter().zip(c.coeffs()) {
                assert!((x - y).abs() <= lim);
            }
        }
    }

    #[test]
    fn scaled_round_exact_on_scaled_lattice() {
        let params = RingParams::new(4).unwrap();
        let basis = CrtBasis::from_primes(&[17], 8).unwrap();
        let coeffs: Vec<BigRational> = (0..8)
            .map(|m| BigRational::new(BigInt::from(3 * m as i64 - 7), BigInt::from(17)))
            .collect();
        let t = RingElement::new(params, coeffs).unwrap();
        assert_eq!(crt_scaled_round(&t, &basis), t);
    }

    #[test]
    fn rounding_translation_equivariance() {
        // odd denominators keep the coefficients away from exact half-integer
        // ties, where half-away-from-zero rounding is not shift-invariant
        let params = RingParams::new(4).unwrap();
        let basis = CrtBasis::from_primes(&[17], 8).unwrap();
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..50 {
            let coeffs: Vec<BigRational> = (0..8)
                .map(|_| {
                    BigRational::new(BigInt::from(rng.gen_range(-500i64..=500)), BigInt::from(101))
                })
                .collect();
            let t = RingElement::new(params, coeffs).unwrap();
            let g = RingElement::from_integers(
                params,
                &std::array::from_fn::<i64, 8, _>(|_| rng.gen_range(-5..=5)),
            )
            .unwrap();
            let lhs = coordinate_round(&t.add(&g).unwrap());
            let rhs = coordinate_round(&t).add(&g).unwrap();
            assert_eq!(lhs, rhs);
            let lhs = crt_scaled_round(&t.add(&g).unwrap(), &basis);
            let rhs = crt_scaled_round(&t, &basis).add(&g).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn symmetric_crt_recombination() {
        let basis = CrtBasis::from_primes(&[17, 97], 8).unwrap();
        for v in [-824i64, -1, 0, 1, 5, 824] {
            let x = BigInt::from(v);
            let residues: Vec<u64> = [17u64, 97]
                .iter()
                .map(|&p| x.mod_floor(&BigInt::from(p)).to_u64_digits().1.first().copied().unwrap_or(0))
                .collect();
            assert_eq!(basis.combine_symmetric(&residues), x, "v={v}");
        }
    }

    #[test]
    fn miller_rabin_small() {
        let primes = [2u64, 3, 17, 97, 7681, 12289, 18433];
        for p in primes {
            assert!(is_prime_u64(p), "{p}");
        }
        for c in [1u64, 15, 4097, 7680, 12287] {
            assert!(!is_prime_u64(c), "{c}");
        }
    }

    #[test]
    fn half_integer_tie_stays_within_bound() {
        // the worst-case target hits the P/2 tie exactly
        let params = RingParams::new(4).unwrap();
        let basis = CrtBasis::from_primes(&[17], 8).unwrap();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let t = RingElement::new(params, vec![half; 8]).unwrap();
        let c = crt_scaled_round(&t, &basis);
        let lim = BigRational::new(BigInt::one(), BigInt::from(34));
        for (x, y) in t.coeffs().iter().zip(c.coeffs()) {
            assert!((x - y).abs() <= lim);
        }
        let _ = BigRational::from_f64(0.0); // keep FromPrimitive in scope
    }
}
