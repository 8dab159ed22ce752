use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Moment order `k`, `1 <= k <= 12`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentOrder(usize);

impl MomentOrder {
    pub const MAX: usize = 12;

    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > Self::MAX {
            return Err(Error::invalid(format!("moment order must be in 1..={}, got {k}", Self::MAX)));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn factorial(self) -> usize {
        (1..=self.0).product()
    }

    /// Local dimension `4^k` of one site of the moment space.
    pub fn local_dim(self) -> usize {
        1 << (2 * self.0)
    }
}

/// Permutation of `{0, .., k-1}` in one-line notation: `sigma(i) = image[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Self((0..k).collect())
    }

    pub fn from_one_line(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &x in &image {
            if x >= image.len() || std::mem::replace(&mut seen[x], true) {
                return Err(Error::invalid(format!("{image:?} is not a permutation")));
            }
        }
        Ok(Self(image))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn one_line(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Self(inv)
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&x| self.0[x]).collect())
    }

    /// Number of cycles, fixed points included.
    pub fn cycles(&self) -> usize {
        let mut seen = vec![false; self.0.len()];
        let mut count = 0;
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.0[x];
            }
        }
        count
    }
}

/// Cycle count of `sigma^{-1} tau`.
pub fn cycle_count(sigma: &Permutation, tau: &Permutation) -> Result<usize> {
    if sigma.len() != tau.len() {
        return Err(Error::invalid(format!(
            "permutations of different sizes ({} and {})",
            sigma.len(),
            tau.len()
        )));
    }
    Ok(sigma.inverse().compose(tau).cycles())
}

/// All permutations of `k` elements in lexicographic order of their
/// one-line notation; index 0 is the identity.
pub fn all_permutations(k: MomentOrder) -> Vec<Permutation> {
    let k = k.get();
    let mut out = Vec::with_capacity((1..=k).product());
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(Permutation(cur.clone()));
        // next lexicographic permutation
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..k).rev().find(|&j| cur[j] > cur[i]).expect("exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    use super::*;
    use crate::tensor::RngStream;

    #[test]
    fn identity_pair_has_k_cycles() {
        let id = Permutation::identity(4);
        assert_eq!(cycle_count(&id, &id).unwrap(), 4);
    }

    #[test]
    fn swap_has_one_cycle() {
        let swap = Permutation::from_one_line(vec![1, 0]).unwrap();
        assert_eq!(cycle_count(&Permutation::identity(2), &swap).unwrap(), 1);
    }

    #[test]
    fn size_mismatch() {
        assert!(cycle_count(&Permutation::identity(2), &Permutation::identity(3)).is_err());
    }

    #[test]
    fn lexicographic_enumeration() {
        let perms = all_permutations(MomentOrder::new(3).unwrap());
        let lines: Vec<Vec<usize>> = perms.iter().map(|p| p.one_line().to_vec()).collect();
        assert_eq!(
            lines,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(all_permutations(MomentOrder::new(5).unwrap()).len(), 120);
    }

    #[test]
    fn moment_order_bounds() {
        assert!(MomentOrder::new(0).is_err());
        assert!(MomentOrder::new(13).is_err());
        assert_eq!(MomentOrder::new(3).unwrap().local_dim(), 64);
    }

    /// Follow-the-orbit decomposition on the composed map, written without
    /// `Permutation` helpers.
    fn brute_force_cycles(sigma: &[usize], tau: &[usize]) -> usize {
        let k = sigma.len();
        let mut sigma_inv = vec![0; k];
        for (i, &s) in sigma.iter().enumerate() {
            sigma_inv[s] = i;
        }
        let map: Vec<usize> = (0..k).map(|x| sigma_inv[tau[x]]).collect();
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        for start in 0..k {
            if orbits.iter().any(|o| o.contains(&start)) {
                continue;
            }
            let mut orbit = vec![start];
            let mut x = map[start];
            while x != start {
                orbit.push(x);
                x = map[x];
            }
            orbits.push(orbit);
        }
        orbits.len()
    }

    #[test]
    fn random_pairs_match_brute_force() {
        let mut rng = RngStream::new(17, 0).rng();
        for _ in 0..100 {
            let mut a: Vec<usize> = (0..4).collect();
            let mut b: Vec<usize> = (0..4).collect();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let expected = brute_force_cycles(&a, &b);
            let got = cycle_count(
                &Permutation::from_one_line(a).unwrap(),
                &Permutation::from_one_line(b).unwrap(),
            )
            .unwrap();
            assert_eq!(got, expected);
        }
    }

    proptest! {
        #[test]
        fn cycle_count_is_symmetric(seed in any::<u64>(), k in 1usize..7) {
            let mut rng = RngStream::new(seed, 0).rng();
            let mut a: Vec<usize> = (0..k).collect();
            let mut b: Vec<usize> = (0..k).collect();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let a = Permutation::from_one_line(a).unwrap();
            let b = Permutation::from_one_line(b).unwrap();
            prop_assert_eq!(cycle_count(&a, &b).unwrap(), cycle_count(&b, &a).unwrap());
        }
    }
}
