use std::sync::Arc;

use num_integer::Integer;
use serde::Serialize;

use super::FiniteSystem;
use crate::error::{Error, Result};
use crate::metric::{circle_distance, FiniteMetricSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeMap {
    /// `i -> i + k (mod n)` on the circle lattice.
    Rotation(i64),
    /// `(a, b) -> (m0 a + m1 b, m2 a + m3 b) (mod n)` on the torus lattice.
    Matrix([i64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatticeSpec {
    pub modulus: usize,
    pub map: LatticeMap,
}

impl LatticeSpec {
    pub fn default_name(&self) -> String {
        match self.map {
            LatticeMap::Rotation(k) => format!("R{}k{}", self.modulus, k),
            LatticeMap::Matrix([2, 1, 1, 1]) => format!("CAT{}", self.modulus),
            LatticeMap::Matrix(m) => {
                format!("T{}[{} {} {} {}]", self.modulus, m[0], m[1], m[2], m[3])
            }
        }
    }
}

/// Circle or torus lattice with the circle metric (maximum metric on the torus).
pub fn build_lattice(spec: &LatticeSpec) -> Result<FiniteSystem> {
    let n = spec.modulus;
    if n == 0 {
        return Err(Error::construction("lattice modulus must be positive"));
    }
    let ni = n as i64;
    match spec.map {
        LatticeMap::Rotation(k) => {
            let space = FiniteMetricSpace::circle(n);
            let perm = (0..n).map(|i| (i as i64 + k).rem_euclid(ni) as usize).collect();
            FiniteSystem::new(spec.default_name(), Arc::new(space), perm)
        }
        LatticeMap::Matrix(m) => {
            let det = m[0] * m[3] - m[1] * m[2];
            if det.rem_euclid(ni).gcd(&ni) != 1 {
                return Err(Error::construction(format!(
                    "matrix determinant {det} is not invertible mod {n}"
                )));
            }
            let space = FiniteMetricSpace::from_fn(n * n, |i, j| {
                circle_distance(i / n, j / n, n).max(circle_distance(i % n, j % n, n))
            });
            let perm = (0..n * n)
                .map(|i| {
                    let (a, b) = ((i / n) as i64, (i % n) as i64);
                    let a2 = (m[0] * a + m[1] * b).rem_euclid(ni);
                    let b2 = (m[2] * a + m[3] * b).rem_euclid(ni);
                    (a2 * ni + b2) as usize
                })
                .collect();
            let labels = (0..n * n).map(|i| format!("({},{})", i / n, i % n)).collect();
            Ok(FiniteSystem::new(spec.default_name(), Arc::new(space), perm)?.with_labels(labels))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::validate_metric;

    #[test]
    fn rotation_and_cat() {
        let r = build_lattice(&LatticeSpec { modulus: 12, map: LatticeMap::Rotation(3) }).unwrap();
        assert_eq!(r.name(), "R12k3");
        assert_eq!(r.f(11), 2);
        let cat = build_lattice(&LatticeSpec { modulus: 5, map: LatticeMap::Matrix([2, 1, 1, 1]) }).unwrap();
        assert_eq!(cat.name(), "CAT5");
        assert_eq!(cat.len(), 25);
        assert!(validate_metric(cat.space()).is_empty());
        // (1,0) -> (2,1)
        assert_eq!(cat.f(5), 11);
    }

    #[test]
    fn singular_matrix_rejected() {
        let err = build_lattice(&LatticeSpec { modulus: 4, map: LatticeMap::Matrix([2, 0, 0, 2]) });
        assert!(matches!(err, Err(Error::Construction(_))));
        // det = 2 is a unit mod 5 but not mod 4.
        assert!(build_lattice(&LatticeSpec { modulus: 5, map: LatticeMap::Matrix([2, 0, 0, 1]) }).is_ok());
        assert!(build_lattice(&LatticeSpec { modulus: 4, map: LatticeMap::Matrix([2, 0, 0, 1]) }).is_err());
    }

    #[test]
    fn negative_rotation_wraps() {
        let r = build_lattice(&LatticeSpec { modulus: 5, map: LatticeMap::Rotation(-1) }).unwrap();
        assert_eq!(r.map(), &[4, 0, 1, 2, 3]);
    }
}
