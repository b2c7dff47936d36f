//! Collision-free N-boson configurations: enumeration order, the bijection
//! with `0..C(M,N)`, and the partition of that range into `d` bins.
//!
//! Configurations are sorted tuples of distinct ports, ordered
//! lexicographically; ranks use the combinatorial number system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A collision-free configuration: strictly increasing ports in `[0, M)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    ports: Vec<u32>,
}

impl Configuration {
    /// Validates ports against a space: length N, strictly increasing,
    /// all below M.
    pub fn new(ports: Vec<u32>, space: &ConfigSpace) -> Result<Self> {
        if ports.len() != space.n() as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} ports, got {}",
                space.n(),
                ports.len()
            )));
        }
        if !ports.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "ports must be strictly increasing, got {ports:?}"
            )));
        }
        if let Some(&p) = ports.iter().find(|&&p| p >= space.m()) {
            return Err(Error::Bounds(format!("port {p} outside [0, {})", space.m())));
        }
        Ok(Self { ports })
    }

    /// Sorts an arbitrary list of distinct ports into a configuration.
    pub fn from_unsorted(mut ports: Vec<u32>, space: &ConfigSpace) -> Result<Self> {
        ports.sort_unstable();
        Self::new(ports, space)
    }

    pub fn ports(&self) -> &[u32] {
        &self.ports
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    /// Advances to the lexicographic successor in place. Returns false at
    /// the last configuration.
    pub(crate) fn advance(&mut self, m: u32) -> bool {
        let n = self.ports.len();
        for i in (0..n).rev() {
            let limit = m - (n - i) as u32;
            if self.ports[i] < limit {
                self.ports[i] += 1;
                for j in (i + 1)..n {
                    self.ports[j] = self.ports[i] + (j - i) as u32;
                }
                return true;
            }
        }
        false
    }
}

/// The space of all C(M, N) collision-free configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigSpace {
    m: u32,
    n: u32,
    size: u128,
}

impl ConfigSpace {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "M and N must be positive, got M={m}, N={n}"
            )));
        }
        if n > m {
            return Err(Error::InvalidArgument(format!("need N <= M, got M={m}, N={n}")));
        }
        let size = space_size(m, n)?;
        Ok(Self { m, n, size })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// |S| = C(M, N).
    pub fn size(&self) -> u128 {
        self.size
    }

    /// Lexicographic rank, via the combinatorial number system:
    /// `C(M,N) − 1 − Σᵢ C(M−1−pᵢ, N−i)` uses O(N) binomial evaluations.
    pub fn rank(&self, cfg: &Configuration) -> Result<u128> {
        if cfg.len() != self.n as usize {
            return Err(Error::InvalidArgument(format!(
                "configuration length {} does not match N={}",
                cfg.len(),
                self.n
            )));
        }
        if cfg.ports().iter().any(|&p| p >= self.m) {
            return Err(Error::InvalidArgument(format!(
                "configuration {:?} has ports outside [0, {})",
                cfg.ports(),
                self.m
            )));
        }
        let mut co_rank: u128 = 0;
        for (i, &p) in cfg.ports().iter().enumerate() {
            let remaining = self.n - i as u32;
            co_rank += binomial(self.m - 1 - p, remaining)
                .expect("smaller than C(M,N), which fit u128");
        }
        Ok(self.size - 1 - co_rank)
    }

    /// Inverse of [`rank`](Self::rank): `rank(unrank(i)) == i`.
    pub fn unrank(&self, index: u128) -> Result<Configuration> {
        if index >= self.size {
            return Err(Error::Bounds(format!(
                "rank {index} outside [0, {})",
                self.size
            )));
        }
        let mut remaining = index;
        let mut ports = Vec::with_capacity(self.n as usize);
        let mut candidate: u32 = 0;
        for i in 0..self.n {
            loop {
                // Configurations starting with `candidate` at position i:
                // the remaining N−i−1 ports come from (candidate, M).
                let block = binomial(self.m - 1 - candidate, self.n - i - 1)
                    .expect("smaller than C(M,N), which fit u128");
                if remaining < block {
                    ports.push(candidate);
                    candidate += 1;
                    break;
                }
                remaining -= block;
                candidate += 1;
            }
        }
        Ok(Configuration { ports })
    }

    /// Iterates all configurations in lexicographic order starting at a rank.
    pub fn iter_from(&self, start: u128) -> Result<ConfigIter> {
        let first = if start >= self.size { None } else { Some(self.unrank(start)?) };
        Ok(ConfigIter {
            m: self.m,
            current: first,
        })
    }

    pub fn iter(&self) -> ConfigIter {
        self.iter_from(0).expect("rank 0 always exists")
    }

    pub fn contains(&self, cfg: &Configuration) -> bool {
        cfg.len() == self.n as usize && cfg.ports().iter().all(|&p| p < self.m)
    }
}

pub struct ConfigIter {
    m: u32,
    current: Option<Configuration>,
}

impl Iterator for ConfigIter {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        self.current = if next.advance(self.m) { Some(next) } else { None };
        Some(out)
    }
}

/// C(M, N) with a capacity error if the value does not fit 128 bits.
pub fn space_size(m: u32, n: u32) -> Result<u128> {
    if n == 0 || m == 0 || n > m {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= N <= M, got M={m}, N={n}"
        )));
    }
    binomial(m, n).ok_or_else(|| {
        Error::Capacity(format!("C({m}, {n}) does not fit in 128 bits"))
    })
}

/// Exact binomial coefficient in u128, None on overflow.
pub(crate) fn binomial(m: u32, k: u32) -> Option<u128> {
    if k > m {
        return Some(0);
    }
    let k = k.min(m - k) as u128;
    let m = m as u128;
    let mut result: u128 = 1;
    for i in 1..=k {
        // result = result * (m - k + i) / i, exact at every step. Pull the
        // gcd out first so the intermediate product cannot overflow
        // spuriously.
        let mut num = m - k + i;
        let mut den = i;
        let g = gcd(num, den);
        num /= g;
        den /= g;
        let g2 = gcd(result, den);
        let r = result / g2;
        debug_assert_eq!(den / g2, 1);
        result = r.checked_mul(num)?;
    }
    Some(result)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Bits needed to describe the occupied ports: `N × (⌊log₂ M⌋ + 1)`.
pub fn bit_length(m: u32, n: u32) -> u32 {
    assert!(m >= 1 && n >= 1, "M and N must be positive");
    n * (m.ilog2() + 1)
}

/// Strategy for mapping ranks onto bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinStrategy {
    /// β = ⌊rank·d / |S|⌋ — contiguous runs of ranks per bin.
    ContiguousBlocks,
    /// β = rank mod d — ranks interleaved across bins.
    RankModulo,
}

/// A partition of the rank range into `d` bins of near-equal size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningScheme {
    d: u64,
    strategy: BinStrategy,
}

impl BinningScheme {
    pub fn new(d: u64, strategy: BinStrategy) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("bin count d must be positive".into()));
        }
        Ok(Self { d, strategy })
    }

    /// Contiguous-blocks scheme, the default.
    pub fn contiguous(d: u64) -> Result<Self> {
        Self::new(d, BinStrategy::ContiguousBlocks)
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn strategy(&self) -> BinStrategy {
        self.strategy
    }

    /// Bin label of a rank. Both strategies produce bin sizes that differ by
    /// at most one across the partition.
    pub fn bin_of(&self, index: u128, space: &ConfigSpace) -> u32 {
        assert!(index < space.size(), "rank {index} outside the space");
        assert!(
            self.d as u128 <= space.size(),
            "d={} exceeds |S|={}",
            self.d,
            space.size()
        );
        let label = match self.strategy {
            BinStrategy::ContiguousBlocks => mul_div_floor(index, self.d, space.size()),
            BinStrategy::RankModulo => index % self.d as u128,
        };
        debug_assert!(label < self.d as u128);
        label as u32
    }
}

/// floor(a·b / m) for a < m, exact even when a·b overflows u128.
fn mul_div_floor(a: u128, b: u64, m: u128) -> u128 {
    debug_assert!(a < m);
    if let Some(product) = a.checked_mul(b as u128) {
        return product / m;
    }
    mul_div_floor_long(a, b, m)
}

/// Shift-and-add evaluation of floor(a·b / m). Invariant after each step:
/// quot·m + rem == a · (consumed prefix of b), with 0 ≤ rem < m. Wrapping
/// subtraction is exact because a doubled/incremented remainder exceeds m
/// by strictly less than m.
fn mul_div_floor_long(a: u128, b: u64, m: u128) -> u128 {
    let mut quot: u128 = 0;
    let mut rem: u128 = 0;
    for i in (0..64).rev() {
        quot <<= 1;
        let top_bit = rem >> 127 != 0;
        let doubled = rem << 1;
        if top_bit || doubled >= m {
            rem = doubled.wrapping_sub(m);
            quot += 1;
        } else {
            rem = doubled;
        }
        if (b >> i) & 1 == 1 {
            let (sum, carried) = rem.overflowing_add(a);
            if carried || sum >= m {
                rem = sum.wrapping_sub(m);
                quot += 1;
            } else {
                rem = sum;
            }
        }
    }
    quot
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_basics() {
        assert_eq!(binomial(10, 4), Some(210));
        assert_eq!(binomial(26, 3), Some(2600));
        assert_eq!(binomial(5, 6), Some(0));
        assert_eq!(binomial(40, 20), Some(137_846_528_820));
        assert_eq!(binomial(7, 0), Some(1));
    }

    #[test]
    fn space_size_examples() {
        assert_eq!(space_size(10, 4).unwrap(), 210);
        let s = space_size(26, 3).unwrap();
        assert_eq!(s, 2600);
        // Growth bound for M >= N²: |S| >= (M/N)^N.
        assert!(s as f64 >= (26.0f64 / 3.0).powi(3));
        assert_eq!(space_size(9, 9).unwrap(), 1);
        assert!(matches!(space_size(0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rank_examples_m4_n2() {
        let space = ConfigSpace::new(4, 2).unwrap();
        let expected = [
            (vec![0, 1], 0u128),
            (vec![0, 2], 1),
            (vec![0, 3], 2),
            (vec![1, 2], 3),
            (vec![1, 3], 4),
            (vec![2, 3], 5),
        ];
        for (ports, rank) in expected {
            let cfg = Configuration::new(ports.clone(), &space).unwrap();
            assert_eq!(space.rank(&cfg).unwrap(), rank, "ports {ports:?}");
            assert_eq!(space.unrank(rank).unwrap().ports(), &ports[..]);
        }
    }

    #[test]
    fn unrank_first_and_bounds() {
        let space = ConfigSpace::new(9, 4).unwrap();
        assert_eq!(space.unrank(0).unwrap().ports(), &[0, 1, 2, 3]);
        assert!(matches!(
            space.unrank(space.size()),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn roundtrip_exhaustive_10_4() {
        let space = ConfigSpace::new(10, 4).unwrap();
        let mut previous: Option<Configuration> = None;
        for index in 0..space.size() {
            let cfg = space.unrank(index).unwrap();
            assert_eq!(space.rank(&cfg).unwrap(), index);
            if let Some(prev) = &previous {
                assert!(prev < &cfg, "lexicographic order must be increasing");
            }
            previous = Some(cfg);
        }
    }

    #[test]
    fn iterator_matches_unrank() {
        let space = ConfigSpace::new(8, 3).unwrap();
        for (index, cfg) in space.iter().enumerate() {
            assert_eq!(space.rank(&cfg).unwrap(), index as u128);
        }
        assert_eq!(space.iter().count() as u128, space.size());

        let from = space.iter_from(10).unwrap().next().unwrap();
        assert_eq!(space.rank(&from).unwrap(), 10);
    }

    #[test]
    fn bit_length_examples() {
        assert_eq!(bit_length(26, 3), 15);
        assert_eq!(bit_length(10, 4), 16);
        assert_eq!(bit_length(1, 1), 1);
    }

    #[test]
    fn configuration_validation() {
        let space = ConfigSpace::new(6, 3).unwrap();
        assert!(Configuration::new(vec![0, 1, 2], &space).is_ok());
        assert!(matches!(
            Configuration::new(vec![0, 2, 2], &space),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Configuration::new(vec![0, 2, 6], &space),
            Err(Error::Bounds(_))
        ));
        assert!(matches!(
            Configuration::new(vec![0, 2], &space),
            Err(Error::InvalidArgument(_))
        ));
        let sorted = Configuration::from_unsorted(vec![5, 0, 3], &space).unwrap();
        assert_eq!(sorted.ports(), &[0, 3, 5]);
    }

    #[test]
    fn bin_of_examples() {
        let space = ConfigSpace::new(26, 3).unwrap();
        assert_eq!(space.size(), 2600);
        let blocks = BinningScheme::contiguous(51).unwrap();
        let modulo = BinningScheme::new(51, BinStrategy::RankModulo).unwrap();

        assert_eq!(blocks.bin_of(0, &space), 0);
        assert_eq!(modulo.bin_of(0, &space), 0);
        assert_eq!(blocks.bin_of(2599, &space), 50);

        for scheme in [blocks, modulo] {
            let mut sizes = vec![0u64; 51];
            for index in 0..space.size() {
                sizes[scheme.bin_of(index, &space) as usize] += 1;
            }
            assert_eq!(sizes.iter().sum::<u64>(), 2600);
            assert!(
                sizes.iter().all(|&s| s == 50 || s == 51),
                "bin sizes must be 50 or 51, got {sizes:?}"
            );
        }
    }

    #[test]
    fn bin_partition_covers_range() {
        let space = ConfigSpace::new(12, 3).unwrap();
        for d in [1u64, 2, 7, 51, space.size() as u64] {
            let scheme = BinningScheme::contiguous(d).unwrap();
            let mut sizes = vec![0u64; d as usize];
            for index in 0..space.size() {
                sizes[scheme.bin_of(index, &space) as usize] += 1;
            }
            let lo = space.size() as u64 / d;
            assert!(sizes.iter().all(|&s| s == lo || s == lo + 1));
            assert_eq!(sizes.iter().sum::<u64>() as u128, space.size());
        }
    }

    #[test]
    fn mul_div_long_matches_native() {
        let cases = [
            (0u128, 51u64, 2600u128),
            (2599, 51, 2600),
            (123_456_789, 997, 1 << 40),
            (u64::MAX as u128, u64::MAX, u128::MAX),
            ((1u128 << 100) - 3, 12_345, 1u128 << 100),
        ];
        for (a, b, m) in cases {
            let a = a % m;
            if let Some(product) = a.checked_mul(b as u128) {
                assert_eq!(mul_div_floor_long(a, b, m), product / m, "a={a} b={b} m={m}");
            }
            assert_eq!(mul_div_floor(a, b, m), mul_div_floor_long(a, b, m));
        }
        // Force the overflow path: a·b > u128::MAX.
        let m = u128::MAX - 5;
        let a = m - 1;
        let b = 1u64 << 40;
        // floor(a·b/m) = b − 1 because a = m − 2  ⇒  a·b = b·m − 2b,
        // and 2b < m, so the quotient is b − 1.
        assert_eq!(mul_div_floor(a - 1, b, m), b as u128 - 1);
    }

    proptest! {
        #[test]
        fn roundtrip_random_spaces(m in 1u32..24, k in 1u32..6, pick in 0u64..10_000) {
            let n = k.min(m);
            let space = ConfigSpace::new(m, n).unwrap();
            let index = (pick as u128) % space.size();
            let cfg = space.unrank(index).unwrap();
            prop_assert_eq!(space.rank(&cfg).unwrap(), index);
            prop_assert!(cfg.ports().windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn rank_is_monotone(m in 2u32..16, seed_a in 0u64..5000, seed_b in 0u64..5000) {
            let n = 3.min(m);
            let space = ConfigSpace::new(m, n).unwrap();
            let a = (seed_a as u128) % space.size();
            let b = (seed_b as u128) % space.size();
            let cfg_a = space.unrank(a).unwrap();
            let cfg_b = space.unrank(b).unwrap();
            prop_assert_eq!(a.cmp(&b), cfg_a.cmp(&cfg_b));
        }
    }
}
