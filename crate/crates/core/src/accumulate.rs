//! Order-independent summation of non-negative `f64` values.
//!
//! [`ExactSum`] holds the running total as a fixed-point integer wide enough
//! for every finite `f64` (the least significant bit is 2^-1074), so addition
//! is exact, associative and commutative. Score tables built from the same
//! multiset of samples therefore agree bit-for-bit however the samples were
//! partitioned or merged.

const LIMBS: usize = 34;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactSum {
    limbs: [u64; LIMBS],
}

impl Default for ExactSum {
    fn default() -> Self {
        Self { limbs: [0; LIMBS] }
    }
}

impl std::fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExactSum({:e})", self.value())
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `x`, which must be finite and non-negative.
    #[inline]
    pub fn add(&mut self, x: f64) {
        assert!(x >= 0.0 && x.is_finite(), "ExactSum::add({x})");
        if x == 0.0 {
            return;
        }
        let bits = x.to_bits();
        let exponent = ((bits >> 52) & 0x7ff) as usize;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, position) = if exponent == 0 {
            (fraction, 0)
        } else {
            (fraction | (1u64 << 52), exponent - 1)
        };
        let limb = position / 64;
        let shifted = (mantissa as u128) << (position % 64);
        self.add_at(limb, shifted as u64);
        self.add_at(limb + 1, (shifted >> 64) as u64);
    }

    #[inline]
    fn add_at(&mut self, mut limb: usize, value: u64) {
        let (sum, mut carry) = self.limbs[limb].overflowing_add(value);
        self.limbs[limb] = sum;
        while carry {
            limb += 1;
            let (sum, c) = self.limbs[limb].overflowing_add(1);
            self.limbs[limb] = sum;
            carry = c;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        let mut carry = false;
        for (a, &b) in self.limbs.iter_mut().zip(&other.limbs) {
            let (s1, c1) = a.overflowing_add(b);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            *a = s2;
            carry = c1 || c2;
        }
        assert!(!carry, "ExactSum overflow");
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    /// The total rounded to the nearest `f64`.
    pub fn value(&self) -> f64 {
        let Some(top) = self.limbs.iter().rposition(|&l| l != 0) else {
            return 0.0;
        };
        if top == 0 {
            return scale_pow2(self.limbs[0] as f64, -1074);
        }
        let mut wide = ((self.limbs[top] as u128) << 64) | self.limbs[top - 1] as u128;
        // The top limb is non-zero, so bit 0 sits far below the rounding
        // position and can carry the sticky bit for everything beneath it.
        if self.limbs[..top - 1].iter().any(|&l| l != 0) {
            wide |= 1;
        }
        scale_pow2(wide as f64, 64 * (top as i32 - 1) - 1074)
    }
}

/// `x * 2^e` in steps that stay in the normal range until the last one.
fn scale_pow2(mut x: f64, mut e: i32) -> f64 {
    let big = f64::from_bits(((1023 + 960) as u64) << 52);
    let small = f64::from_bits(((1023 - 960) as u64) << 52);
    while e > 960 {
        x *= big;
        e -= 960;
    }
    while e < -960 {
        x *= small;
        e += 960;
    }
    x * f64::from_bits(((1023 + e) as u64) << 52)
}
