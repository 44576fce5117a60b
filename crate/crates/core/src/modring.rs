//! Exact modular-integer arithmetic, roots of unity and Chinese-remainder
//! index maps.
//!
//! Phases are carried as integer exponents for as long as possible and only
//! evaluated to floating complex numbers at matrix-assembly time, so long
//! operator products accumulate no phase drift.

use crate::matrix::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModRingError {
    #[error("{x} is not invertible modulo {modulus} (gcd = {gcd})")]
    NotInvertible { x: i64, modulus: u64, gcd: u64 },
    #[error("{n1} and {n2} are not coprime")]
    NotCoprime { n1: u64, n2: u64 },
}

/// An integer reduced into `[0, modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModInt {
    value: u64,
    modulus: u64,
}

/// Reduce an arbitrary integer into `[0, m)`.
#[inline]
pub fn reduce(x: i64, m: u64) -> u64 {
    debug_assert!(m > 0);
    let m_i = m as i64;
    let r = x.rem_euclid(m_i);
    r as u64
}

/// Same, for wide intermediates such as products of raw indices.
#[inline]
pub fn reduce_i128(x: i128, m: u64) -> u64 {
    debug_assert!(m > 0);
    let r = x.rem_euclid(m as i128);
    r as u64
}

impl ModInt {
    pub fn new(value: i64, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Self {
            value: reduce(value, modulus),
            modulus,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Representative in `(−m/2, m/2]`, convenient for display.
    pub fn centered(&self) -> i64 {
        let v = self.value as i64;
        let m = self.modulus as i64;
        if 2 * v > m {
            v - m
        } else {
            v
        }
    }

    fn same_modulus(&self, other: &Self) {
        assert_eq!(self.modulus, other.modulus, "moduli must agree");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_modulus(other);
        Self::new(
            ((self.value as i128 + other.value as i128) % self.modulus as i128) as i64,
            self.modulus,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.same_modulus(other);
        Self::new(self.value as i64 - other.value as i64, self.modulus)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.same_modulus(other);
        let prod = (self.value as u128 * other.value as u128) % self.modulus as u128;
        Self {
            value: prod as u64,
            modulus: self.modulus,
        }
    }

    pub fn neg(&self) -> Self {
        Self::new(-(self.value as i64), self.modulus)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = Self {
            value: 1 % self.modulus,
            modulus: self.modulus,
        };
        let mut base = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn inverse(&self) -> Result<Self, ModRingError> {
        inv_mod(self.value as i64, self.modulus)
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `n̄`: n for odd n, 2n for even n.
pub fn bar(n: u64) -> u64 {
    assert!(n >= 1);
    if n % 2 == 1 {
        n
    } else {
        2 * n
    }
}

/// Multiplicative inverse of `x` modulo `m` by the extended Euclid algorithm.
pub fn inv_mod(x: i64, m: u64) -> Result<ModInt, ModRingError> {
    assert!(m > 0);
    if m == 1 {
        return Ok(ModInt::new(0, 1));
    }
    let xr = reduce(x, m) as i64;
    let (mut r0, mut r1) = (m as i64, xr);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return Err(ModRingError::NotInvertible {
            x,
            modulus: m,
            gcd: r0 as u64,
        });
    }
    Ok(ModInt::new(t0, m))
}

/// The Chinese-remainder inverses: `κ1·n1 ≡ 1 mod bar(n2)` and `κ2·n2 ≡ 1 mod bar(n1)`.
pub fn crt_kappas(n1: u64, n2: u64) -> Result<(ModInt, ModInt), ModRingError> {
    if gcd(n1, n2) != 1 {
        return Err(ModRingError::NotCoprime { n1, n2 });
    }
    let kappa1 = inv_mod(n1 as i64, bar(n2)).expect("coprime to the barred modulus");
    let kappa2 = inv_mod(n2 as i64, bar(n1)).expect("coprime to the barred modulus");
    Ok((kappa1, kappa2))
}

/// Ring isomorphism `Z_{n1·n2} → Z_{n1} × Z_{n2}`.
pub fn crt_split(u: i64, n1: u64, n2: u64) -> Result<(ModInt, ModInt), ModRingError> {
    if gcd(n1, n2) != 1 {
        return Err(ModRingError::NotCoprime { n1, n2 });
    }
    Ok((ModInt::new(u, n1), ModInt::new(u, n2)))
}

/// Inverse of [`crt_split`]: recombine residues into `Z_{n1·n2}`.
pub fn crt_join(u1: &ModInt, u2: &ModInt) -> Result<ModInt, ModRingError> {
    let (n1, n2) = (u1.modulus(), u2.modulus());
    if gcd(n1, n2) != 1 {
        return Err(ModRingError::NotCoprime { n1, n2 });
    }
    let m = n1 * n2;
    // u = u1·n2·(n2⁻¹ mod n1) + u2·n1·(n1⁻¹ mod n2)
    let inv_n2 = inv_mod(n2 as i64, n1)?.value() as u128;
    let inv_n1 = inv_mod(n1 as i64, n2)?.value() as u128;
    let term1 = u1.value() as u128 * n2 as u128 * inv_n2;
    let term2 = u2.value() as u128 * n1 as u128 * inv_n1;
    Ok(ModInt::new(((term1 + term2) % m as u128) as i64, m))
}

/// A power of `ω_n = e^{2πi/n}`, kept as an exact exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootOfUnity {
    order: u64,
    exponent: u64, // reduced mod order
}

impl RootOfUnity {
    pub fn new(order: u64, exponent: i64) -> Self {
        assert!(order >= 1);
        Self {
            order,
            exponent: reduce(exponent, order),
        }
    }

    pub fn from_wide(order: u64, exponent: i128) -> Self {
        assert!(order >= 1);
        Self {
            order,
            exponent: reduce_i128(exponent, order),
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order);
        Self::from_wide(self.order, self.exponent as i128 + other.exponent as i128)
    }

    pub fn pow(&self, e: i64) -> Self {
        Self::from_wide(self.order, self.exponent as i128 * e as i128)
    }

    pub fn evaluate(&self) -> Complex64 {
        let theta = 2.0 * std::f64::consts::PI * self.exponent as f64 / self.order as f64;
        Complex64::from_polar(1.0, theta)
    }
}

/// A power of `τ_n = −e^{iπ/n}`, kept as an exact exponent mod 2n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TauPhase {
    order: u64,
    exponent: u64, // reduced mod 2·order
}

impl TauPhase {
    pub fn new(order: u64, exponent: i64) -> Self {
        Self::from_wide(order, exponent as i128)
    }

    pub fn from_wide(order: u64, exponent: i128) -> Self {
        assert!(order >= 1);
        Self {
            order,
            exponent: reduce_i128(exponent, 2 * order),
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order);
        Self::from_wide(self.order, self.exponent as i128 + other.exponent as i128)
    }

    pub fn pow(&self, e: i64) -> Self {
        Self::from_wide(self.order, self.exponent as i128 * e as i128)
    }

    /// `(−e^{iπ/n})^k = (−1)^k e^{iπk/n}`.
    pub fn evaluate(&self) -> Complex64 {
        let n = self.order as f64;
        let k = self.exponent as f64;
        let sign = if self.exponent.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let theta = std::f64::consts::PI * k / n;
        Complex64::from_polar(1.0, theta) * sign
    }
}
