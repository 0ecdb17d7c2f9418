//! Finite-field combinatorics behind the comparison schedule.
//!
//! Items are padded up to `q²` slots for the smallest prime `q ≥ √n` and laid
//! out on the affine plane over GF(q). The `q - 1` non-trivial slopes plus the
//! rows and the columns give `q + 1` parallel classes; together they form a
//! resolvable design in which every pair of slots shares a group exactly once.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Returns true if `m` is prime. Trial division, fine for the sizes used here.
pub fn is_prime(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    if m.is_multiple_of(2) {
        return m == 2;
    }
    let mut d = 3u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `q` with `q ≥ x`.
///
/// Always terminates: there is a prime between `k` and `2k` for every `k ≥ 1`.
pub fn find_prime(x: f64) -> u64 {
    assert!(x.is_finite(), "find_prime needs a finite bound");
    let mut candidate = x.ceil().max(2.0) as u64;
    while !is_prime(candidate) {
        candidate += 1;
    }
    candidate
}

/// Smallest integer `c` with `c² ≥ n`, computed without floating-point error.
pub fn ceil_sqrt(n: u64) -> u64 {
    let mut c = (n as f64).sqrt() as u64;
    while c * c < n {
        c += 1;
    }
    while c > 0 && (c - 1) * (c - 1) >= n {
        c -= 1;
    }
    c
}

/// Side length of the schedule for `n` items: the smallest prime `q ≥ √n`.
pub fn schedule_order(n: usize) -> u64 {
    find_prime(ceil_sqrt(n as u64) as f64)
}

/// Arithmetic in the prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::invalid(format!("GF({q}) requires a prime modulus")));
        }
        Ok(PrimeField { q })
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.q
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.q - a % self.q) % self.q
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    /// Multiplicative inverse via Fermat's little theorem; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.q;
        if a == 0 {
            return None;
        }
        Some(self.pow(a, self.q - 2))
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// The line label `k·i + j` of cell `(i, j)` under slope `k`.
    pub fn line(&self, k: u64, i: u64, j: u64) -> u64 {
        self.add(self.mul(k, i), j)
    }
}

/// One slot of the padded item set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItemId {
    pub index: usize,
    /// `false` for hallucinated padding slots that are never compared.
    pub real: bool,
}

/// `q + 1` partitions of the `q²` slots into `q` groups of `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSchedule {
    pub q: u64,
    pub n: usize,
    pub partitions: Vec<Vec<Vec<ItemId>>>,
}

impl PartitionSchedule {
    pub fn slot_count(&self) -> usize {
        (self.q * self.q) as usize
    }

    pub fn hallucinated_count(&self) -> usize {
        self.slot_count() - self.n
    }

    /// All groups in partition order.
    pub fn groups(&self) -> impl Iterator<Item = &Vec<ItemId>> {
        self.partitions.iter().flatten()
    }

    pub fn to_json(&self) -> ScheduleJson {
        ScheduleJson {
            q: self.q,
            n: self.n,
            partitions: self
                .partitions
                .iter()
                .map(|p| p.iter().map(|g| g.iter().map(|it| it.index).collect()).collect())
                .collect(),
            real: (0..self.slot_count()).map(|i| i < self.n).collect(),
        }
    }

    pub fn from_json(json: &ScheduleJson) -> Result<Self> {
        let slots = (json.q * json.q) as usize;
        if json.real.len() != slots {
            return Err(Error::invalid(format!(
                "schedule has {} real flags for {slots} slots",
                json.real.len()
            )));
        }
        let mut partitions = Vec::with_capacity(json.partitions.len());
        for p in &json.partitions {
            let mut groups = Vec::with_capacity(p.len());
            for g in p {
                let mut group = Vec::with_capacity(g.len());
                for &index in g {
                    let real = *json
                        .real
                        .get(index)
                        .ok_or_else(|| Error::invalid(format!("slot {index} out of range")))?;
                    group.push(ItemId { index, real });
                }
                groups.push(group);
            }
            partitions.push(groups);
        }
        Ok(PartitionSchedule {
            q: json.q,
            n: json.n,
            partitions,
        })
    }
}

/// Wire format for schedules: `{"q", "n", "partitions", "real"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleJson {
    pub q: u64,
    pub n: usize,
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub real: Vec<bool>,
}

/// Builds the resolvable schedule for `n` items.
///
/// A seeded uniform bijection maps the cells of GF(q)² to slot indices; slots
/// `0..n` are the real items. Partitions are emitted in the order: slopes
/// `1..q`, then rows, then columns.
pub fn sgp_schedule(n: usize, seed: u64) -> Result<PartitionSchedule> {
    if n < 2 {
        return Err(Error::invalid(format!("a schedule needs at least 2 items, got {n}")));
    }
    let q = schedule_order(n);
    let field = PrimeField::new(q)?;
    let qs = q as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma: Vec<usize> = (0..qs * qs).collect();
    sigma.shuffle(&mut rng);
    let slot = |i: u64, j: u64| -> ItemId {
        let index = sigma[(i * q + j) as usize];
        ItemId { index, real: index < n }
    };

    let mut partitions = Vec::with_capacity(qs + 1);
    for k in 1..q {
        let mut groups = vec![Vec::with_capacity(qs); qs];
        for i in 0..q {
            for j in 0..q {
                groups[field.line(k, i, j) as usize].push(slot(i, j));
            }
        }
        partitions.push(groups);
    }
    let rows = (0..q).map(|l| (0..q).map(|j| slot(l, j)).collect()).collect();
    let cols = (0..q).map(|l| (0..q).map(|i| slot(i, l)).collect()).collect();
    partitions.push(rows);
    partitions.push(cols);

    Ok(PartitionSchedule { q, n, partitions })
}

/// Result of an exhaustive check of a schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub partitions: usize,
    /// Every partition covers each slot exactly once with groups of size `q`.
    pub exact_partitions: bool,
    pub pairs_uncovered: usize,
    pub pairs_once: usize,
    pub pairs_repeated: usize,
}

impl CoverageReport {
    /// True for a valid resolvable design with `q + 1` classes and exact-once coverage.
    pub fn all_pairs_once(&self) -> bool {
        self.exact_partitions && self.pairs_uncovered == 0 && self.pairs_repeated == 0
    }
}

/// Counts how often every slot pair shares a group. O(q⁴).
pub fn verify_schedule(schedule: &PartitionSchedule) -> CoverageReport {
    let slots = schedule.slot_count();
    let qs = schedule.q as usize;
    let mut exact = schedule.partitions.len() == qs + 1;
    let mut counts = vec![0u32; slots * slots];

    for partition in &schedule.partitions {
        let mut seen = vec![false; slots];
        if partition.len() != qs {
            exact = false;
        }
        for group in partition {
            if group.len() != qs {
                exact = false;
            }
            for (a_pos, a) in group.iter().enumerate() {
                if a.index >= slots || seen[a.index] {
                    exact = false;
                    continue;
                }
                seen[a.index] = true;
                for b in &group[a_pos + 1..] {
                    if b.index < slots && b.index != a.index {
                        let (lo, hi) = (a.index.min(b.index), a.index.max(b.index));
                        counts[lo * slots + hi] += 1;
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            exact = false;
        }
    }

    let (mut zero, mut once, mut more) = (0, 0, 0);
    for lo in 0..slots {
        for hi in lo + 1..slots {
            match counts[lo * slots + hi] {
                0 => zero += 1,
                1 => once += 1,
                _ => more += 1,
            }
        }
    }
    CoverageReport {
        partitions: schedule.partitions.len(),
        exact_partitions: exact,
        pairs_uncovered: zero,
        pairs_once: once,
        pairs_repeated: more,
    }
}
