//! Exact arithmetic in the Hurwitz order O = <1, i, j, (1+i+j+k)/2>.
//!
//! Quaternions are stored in doubled coordinates (a2 + b2*i + c2*j + d2*k)/2
//! with all four components of equal parity, so membership in the order and
//! the reduced norm are exact integer predicates. Conversions to SO(3) use
//! the standard unit-quaternion rotation formula.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use once_cell::sync::Lazy;

/// A Hurwitz quaternion in doubled coordinates: (a2 + b2*i + c2*j + d2*k)/2.
///
/// Invariant: a2 = b2 = c2 = d2 (mod 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HurwitzQuaternion {
    pub a2: i64,
    pub b2: i64,
    pub c2: i64,
    pub d2: i64,
}

impl HurwitzQuaternion {
    pub fn new(a2: i64, b2: i64, c2: i64, d2: i64) -> Result<Self> {
        let p = a2 & 1;
        if (b2 & 1) != p || (c2 & 1) != p || (d2 & 1) != p {
            return Err(Error::Domain(format!(
                "({a2},{b2},{c2},{d2})/2 is not in the Hurwitz order: mixed parity"
            )));
        }
        Ok(Self { a2, b2, c2, d2 })
    }

    /// The integer quaternion a + b*i + c*j + d*k.
    pub fn from_integers(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self {
            a2: 2 * a,
            b2: 2 * b,
            c2: 2 * c,
            d2: 2 * d,
        }
    }

    pub fn zero() -> Self {
        Self::from_integers(0, 0, 0, 0)
    }

    pub fn one() -> Self {
        Self::from_integers(1, 0, 0, 0)
    }

    /// Reduced norm Nrd = (a2^2 + b2^2 + c2^2 + d2^2)/4, a nonnegative integer.
    pub fn nrd(&self) -> i64 {
        let s = self.a2 * self.a2 + self.b2 * self.b2 + self.c2 * self.c2 + self.d2 * self.d2;
        debug_assert_eq!(s % 4, 0, "norm of a Hurwitz quaternion is integral");
        s / 4
    }

    /// Reduced trace Trd = a2.
    pub fn trd(&self) -> i64 {
        self.a2
    }

    pub fn conjugate(&self) -> Self {
        Self {
            a2: self.a2,
            b2: -self.b2,
            c2: -self.c2,
            d2: -self.d2,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            a2: -self.a2,
            b2: -self.b2,
            c2: -self.c2,
            d2: -self.d2,
        }
    }

    /// Quaternion product. The order is closed under multiplication, so the
    /// doubled coordinates of the product are always integral.
    pub fn mul(&self, rhs: &Self) -> Self {
        // (p/2)(q/2) = (p*q)/4 where p*q is the integer quaternion product of
        // the doubled coordinate vectors; dividing by 2 recovers doubled form.
        let (a, b, c, d) = (self.a2, self.b2, self.c2, self.d2);
        let (e, f, g, h) = (rhs.a2, rhs.b2, rhs.c2, rhs.d2);
        let pa = a * e - b * f - c * g - d * h;
        let pb = a * f + b * e + c * h - d * g;
        let pc = a * g - b * h + c * e + d * f;
        let pd = a * h + b * g - c * f + d * e;
        debug_assert!(
            pa % 2 == 0 && pb % 2 == 0 && pc % 2 == 0 && pd % 2 == 0,
            "Hurwitz order is closed under multiplication"
        );
        Self {
            a2: pa / 2,
            b2: pb / 2,
            c2: pc / 2,
            d2: pd / 2,
        }
    }

    /// The rotation v -> q v q^{-1} on trace-zero quaternions, transported to
    /// R^3 through xi + yj + zk -> (x, y, z).
    pub fn to_rotation(&self) -> Result<Rotation> {
        let n = self.nrd();
        if n <= 0 {
            return Err(Error::Domain("cannot rotate by the zero quaternion".into()));
        }
        let s = 1.0 / (2.0 * (n as f64).sqrt());
        let (w, x, y, z) = (
            self.a2 as f64 * s,
            self.b2 as f64 * s,
            self.c2 as f64 * s,
            self.d2 as f64 * s,
        );
        let m = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        Ok(Rotation { m })
    }
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub m: Matrix3<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self { m: self.m * rhs.m }
    }

    pub fn inverse(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    /// Max-abs entrywise distance to another rotation.
    pub fn distance(&self, rhs: &Self) -> f64 {
        (self.m - rhs.m).abs().max()
    }
}

/// Enumerate O(n) = { q in O : Nrd(q) = n }, in lexicographic order on the
/// doubled coordinates (a2, b2, c2, d2).
pub fn norm_n_elements(n: i64) -> Result<Vec<HurwitzQuaternion>> {
    if n < 1 {
        return Err(Error::Domain(format!("norm must be positive, got {n}")));
    }
    let target = 4 * n;
    let bound = (target as f64).sqrt().floor() as i64;
    let mut out = Vec::new();
    for a2 in -bound..=bound {
        let ra = target - a2 * a2;
        if ra < 0 {
            continue;
        }
        let bb = (ra as f64).sqrt().floor() as i64;
        for b2 in -bb..=bb {
            if (b2 ^ a2) & 1 != 0 {
                continue;
            }
            let rb = ra - b2 * b2;
            if rb < 0 {
                continue;
            }
            let bc = (rb as f64).sqrt().floor() as i64;
            for c2 in -bc..=bc {
                if (c2 ^ a2) & 1 != 0 {
                    continue;
                }
                let rc = rb - c2 * c2;
                if rc < 0 {
                    continue;
                }
                let d2 = (rc as f64).sqrt().round() as i64;
                if d2 * d2 != rc || (d2 ^ a2) & 1 != 0 {
                    continue;
                }
                if d2 == 0 {
                    out.push(HurwitzQuaternion { a2, b2, c2, d2: 0 });
                } else {
                    out.push(HurwitzQuaternion { a2, b2, c2, d2: -d2 });
                    out.push(HurwitzQuaternion { a2, b2, c2, d2 });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

static UNIT_GROUP: Lazy<Vec<HurwitzQuaternion>> =
    Lazy::new(|| norm_n_elements(1).expect("O(1) enumeration"));

/// The 24 units of the Hurwitz order.
pub fn unit_group() -> &'static [HurwitzQuaternion] {
    &UNIT_GROUP
}

static ROTATION_IMAGE: Lazy<Vec<Rotation>> = Lazy::new(|| {
    let mut rots: Vec<Rotation> = Vec::new();
    for u in unit_group() {
        let r = u.to_rotation().expect("units have norm 1");
        if !rots.iter().any(|s| s.distance(&r) < 1e-9) {
            rots.push(r);
        }
    }
    rots
});

/// The image of the unit group in SO(3): 12 distinct rotations (the
/// tetrahedral rotation group), since +-u induce the same rotation.
pub fn rotation_group_image() -> &'static [Rotation] {
    &ROTATION_IMAGE
}

/// Decompose O(n) into left cosets O^x * g and return one representative per
/// coset (the lexicographically smallest element). A function invariant under
/// the unit group sees only the coset, so sums over O(n) collapse to sums
/// over representatives with weight |O^x| = 24.
pub fn coset_representatives(n: i64) -> Result<Vec<HurwitzQuaternion>> {
    let elements = norm_n_elements(n)?;
    let units = unit_group();
    let mut seen = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for g in &elements {
        if seen.contains(g) {
            continue;
        }
        let mut coset: Vec<HurwitzQuaternion> = units.iter().map(|u| u.mul(g)).collect();
        coset.sort();
        debug_assert_eq!(coset.len(), 24);
        reps.push(coset[0]);
        for e in coset {
            seen.insert(e);
        }
    }
    reps.sort();
    Ok(reps)
}

/// Sum of divisors; the count oracle |O(n)| = 24 * sigma(n) holds for odd n.
pub fn divisor_sum(n: i64) -> i64 {
    let mut s = 0;
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            s += d;
            if d != n / d {
                s += n / d;
            }
        }
        d += 1;
    }
    s
}
