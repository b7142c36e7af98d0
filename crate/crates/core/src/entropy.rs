//! Time-adjacent sample pairing and plug-in directed conditional entropy.
//!
//! All entropies are in bits. For a pair multiset of size `n` and count
//! tables `c`, the plug-in joint entropy is `log2 n - S / n` with
//! `S = sum c log2 c`, and the directed conditional entropy
//! `H(v+ | v, Q) = H(v+, v, Q) - H(v, Q)` collapses to
//! `(S_marginal - S_joint) / n`. The marginal is taken over the previous
//! side of the same pairs, so the chain rule holds exactly.
//!
//! `S` is summed over counts sorted ascending. Two tables with the same
//! count multiset therefore give bitwise-identical entropies, whatever
//! their keys.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::simulator::Trajectory;
use crate::symbol::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMode {
    /// `(t, t + 1)` for every `t`: what a learner without reset information sees.
    Naive,
    /// Each sample matched with the step that actually generated it.
    Genie,
}

/// Ordered `(prev, next)` index pairs into a trajectory, sorted by `next`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSet {
    pub mode: PairMode,
    pub pairs: Vec<(usize, usize)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs must lie inside a trajectory of length `len`.
    fn check_bounds(&self, len: usize) -> Result<()> {
        match self.pairs.iter().find(|(a, b)| *a >= len || *b >= len) {
            Some(&(a, b)) => Err(Error::NodeOutOfRange {
                index: a.max(b),
                nodes: len,
            }),
            None => Ok(()),
        }
    }
}

pub fn build_pairs(traj: &Trajectory, mode: PairMode) -> Result<PairSet> {
    let steps = traj.len().saturating_sub(1);
    let pairs = match mode {
        PairMode::Naive => (0..steps).map(|t| (t, t + 1)).collect(),
        PairMode::Genie => {
            let h = traj.hidden().ok_or(Error::MissingHiddenData)?;
            (0..steps)
                .map(|t| {
                    if h.coins[t] {
                        (t, t + 1)
                    } else {
                        (t - h.d, t + 1)
                    }
                })
                .collect()
        }
    };
    Ok(PairSet { mode, pairs })
}

fn conditioning_set(v: usize, q: &[usize], nodes: usize) -> Result<Vec<usize>> {
    let mut q = q.to_vec();
    q.sort_unstable();
    q.dedup();
    if q.contains(&v) {
        return Err(Error::InvalidConditioning { v });
    }
    if let Some(&bad) = q.iter().chain(std::iter::once(&v)).find(|&&x| x >= nodes) {
        return Err(Error::NodeOutOfRange { index: bad, nodes });
    }
    Ok(q)
}

/// Count table over symbol tuples of a fixed arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointCounts {
    arity: usize,
    table: BTreeMap<Vec<Symbol>, u64>,
    total: u64,
}

impl JointCounts {
    pub fn new(arity: usize) -> Self {
        JointCounts {
            arity,
            table: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn add(&mut self, key: Vec<Symbol>, count: u64) {
        assert_eq!(key.len(), self.arity, "key arity mismatch");
        *self.table.entry(key).or_insert(0) += count;
        self.total += count;
    }

    pub fn from_entries(arity: usize, entries: impl IntoIterator<Item = (Vec<Symbol>, u64)>) -> Self {
        let mut c = JointCounts::new(arity);
        for (k, n) in entries {
            c.add(k, n);
        }
        c
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, key: &[Symbol]) -> u64 {
        self.table.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Symbol], u64)> {
        self.table.iter().map(|(k, &n)| (k.as_slice(), n))
    }

    pub fn support_size(&self) -> usize {
        self.table.len()
    }

    /// Marginal over the listed key positions.
    pub fn marginal(&self, positions: &[usize]) -> JointCounts {
        let mut out = JointCounts::new(positions.len());
        for (k, &n) in &self.table {
            out.add(positions.iter().map(|&i| k[i]).collect(), n);
        }
        out
    }

    /// CSV with columns `sym_1..sym_k,count`, rows in lexicographic key order.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.arity).map(|i| format!("sym_{i}")).collect();
        header.push("count".into());
        out.write_record(&header)?;
        for (k, n) in &self.table {
            let mut row: Vec<String> = k.iter().map(ToString::to_string).collect();
            row.push(n.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    fn counts(&self) -> Vec<u64> {
        self.table.values().copied().collect()
    }
}

/// Tally `(Y_v(next), Y_v(prev), Y_q(prev) for q in Q ascending)` over the pairs.
pub fn empirical_joint(traj: &Trajectory, pairs: &PairSet, v: usize, q: &[usize]) -> Result<JointCounts> {
    let q = conditioning_set(v, q, traj.node_count())?;
    pairs.check_bounds(traj.len())?;
    let mut counts = JointCounts::new(q.len() + 2);
    for &(prev, next) in &pairs.pairs {
        let mut key = Vec::with_capacity(q.len() + 2);
        key.push(traj.symbol(next, v));
        key.push(traj.symbol(prev, v));
        key.extend(q.iter().map(|&u| traj.symbol(prev, u)));
        counts.add(key, 1);
    }
    Ok(counts)
}

/// `sum c log2 c`, accumulated over counts in ascending order.
fn sum_c_log_c(mut counts: Vec<u64>) -> f64 {
    counts.sort_unstable();
    counts
        .into_iter()
        .filter(|&c| c > 1)
        .map(|c| {
            let c = c as f64;
            c * c.log2()
        })
        .sum()
}

/// Plug-in Shannon entropy in bits.
pub fn entropy(c: &JointCounts) -> Result<f64> {
    if c.total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let n = c.total as f64;
    Ok((n.log2() - sum_c_log_c(c.counts()) / n).max(0.0))
}

/// Sum over the union of supports of `|a(k)/|a| - b(k)/|b||`.
pub fn l1_distance(a: &JointCounts, b: &JointCounts) -> Result<f64> {
    if a.arity != b.arity {
        return Err(Error::IncompatibleDistributions {
            left: a.arity,
            right: b.arity,
        });
    }
    if a.total == 0 || b.total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let (na, nb) = (a.total as f64, b.total as f64);
    let mut sum = 0.0;
    for (k, &ca) in &a.table {
        sum += (ca as f64 / na - b.get(k) as f64 / nb).abs();
    }
    for (k, &cb) in &b.table {
        if !a.table.contains_key(k) {
            sum += cb as f64 / nb;
        }
    }
    Ok(sum)
}

/// Directed conditional entropy `H(v+ | v, Q)` over the given pairs.
pub fn cond_entropy(traj: &Trajectory, pairs: &PairSet, v: usize, q: &[usize]) -> Result<f64> {
    Estimator::new(traj, pairs)?.cond_entropy(v, q)
}

/// Reusable entropy evaluator over one trajectory and one pair set.
///
/// Symbols are re-coded as small integers once, and each query packs a
/// pair's `(v, Q, v+)` codes into a single mixed-radix `u64` key. Sorting
/// the keys groups both the joint cells and (because `v+` is the lowest
/// digit) the marginal cells.
pub struct Estimator<'a> {
    traj: &'a Trajectory,
    pairs: &'a PairSet,
    codes: Vec<u16>,
    radix: u64,
}

impl<'a> Estimator<'a> {
    pub fn new(traj: &'a Trajectory, pairs: &'a PairSet) -> Result<Self> {
        pairs.check_bounds(traj.len())?;
        let n = traj.node_count();
        let mut symbols: Vec<Symbol> = (0..traj.len())
            .flat_map(|t| (0..n).map(move |v| (t, v)))
            .map(|(t, v)| traj.symbol(t, v))
            .collect();
        let all = symbols.clone();
        symbols.sort();
        symbols.dedup();
        let codes = all
            .into_iter()
            .map(|s| symbols.binary_search(&s).expect("symbol present") as u16)
            .collect();
        Ok(Estimator {
            traj,
            pairs,
            codes,
            radix: symbols.len().max(1) as u64,
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    pub fn pairs(&self) -> &PairSet {
        self.pairs
    }

    pub fn node_count(&self) -> usize {
        self.traj.node_count()
    }

    fn code(&self, t: usize, v: usize) -> u64 {
        u64::from(self.codes[t * self.traj.node_count() + v])
    }

    fn fits_u64(&self, digits: usize) -> bool {
        let mut cap: u64 = 1;
        for _ in 0..digits {
            match cap.checked_mul(self.radix) {
                Some(c) => cap = c,
                None => return false,
            }
        }
        true
    }

    pub fn cond_entropy(&self, v: usize, q: &[usize]) -> Result<f64> {
        let q = conditioning_set(v, q, self.traj.node_count())?;
        let n = self.pairs.len();
        if n == 0 {
            return Err(Error::EmptyDistribution);
        }
        if !self.fits_u64(q.len() + 2) {
            let joint = empirical_joint(self.traj, self.pairs, v, &q)?;
            let positions: Vec<usize> = (1..joint.arity()).collect();
            let marginal = joint.marginal(&positions);
            return Ok(cond_from_sums(
                sum_c_log_c(marginal.counts()),
                sum_c_log_c(joint.counts()),
                n,
            ));
        }

        let r = self.radix;
        let mut keys: Vec<u64> = self
            .pairs
            .pairs
            .iter()
            .map(|&(prev, next)| {
                let mut k = self.code(prev, v);
                for &u in &q {
                    k = k * r + self.code(prev, u);
                }
                k * r + self.code(next, v)
            })
            .collect();
        keys.sort_unstable();

        let mut joint = Vec::new();
        let mut marginal = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let prev_key = keys[i] / r;
            let mut cell = 0u64;
            while i < keys.len() && keys[i] / r == prev_key {
                let k = keys[i];
                let mut run = 0u64;
                while i < keys.len() && keys[i] == k {
                    run += 1;
                    i += 1;
                }
                joint.push(run);
                cell += run;
            }
            marginal.push(cell);
        }
        Ok(cond_from_sums(sum_c_log_c(marginal), sum_c_log_c(joint), n))
    }
}

fn cond_from_sums(s_marginal: f64, s_joint: f64, n: usize) -> f64 {
    ((s_marginal - s_joint) / n as f64).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{InfluenceGraph, NodeParams};
    use crate::simulator::{simulate, Hidden, PimParams, ResetSpec};
    use approx::assert_abs_diff_eq;

    fn sym(n: u32, d: u32) -> Symbol {
        Symbol::new(n, d)
    }

    fn bits(values: &[u32]) -> Trajectory {
        Trajectory::from_counts(1, values.to_vec(), vec![1; values.len()]).unwrap()
    }

    #[test]
    fn naive_pairs() {
        let t = bits(&[0, 1, 0, 1, 1]);
        let p = build_pairs(&t, PairMode::Naive).unwrap();
        assert_eq!(p.pairs, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(matches!(
            build_pairs(&t, PairMode::Genie),
            Err(Error::MissingHiddenData)
        ));
    }

    #[test]
    fn genie_pairs_follow_resets() {
        let t = bits(&[0, 1, 0, 1, 1, 0]);
        let coins = vec![true, true, true, true, false, true];
        let hidden = Hidden {
            d: 2,
            latent: vec![0.5; 6],
            effective: crate::simulator::replay_effective_index(&coins, 2),
            coins,
        };
        let t = t.with_hidden(hidden).unwrap();
        let p = build_pairs(&t, PairMode::Genie).unwrap();
        assert_eq!(p.pairs, vec![(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)]);
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn genie_equals_naive_without_resets() {
        let g = InfluenceGraph::ring(3, NodeParams::default()).unwrap();
        let pim = PimParams {
            reset: ResetSpec::Probability(1.0),
            ..PimParams::with_schedule(2, 1, 300, 4)
        };
        let traj = simulate(&g, &pim).unwrap();
        let a = build_pairs(&traj, PairMode::Naive).unwrap();
        let b = build_pairs(&traj, PairMode::Genie).unwrap();
        assert_eq!(a.pairs, b.pairs);
    }

    #[test]
    fn joint_tally() {
        let t = bits(&[0, 1, 0]);
        let p = build_pairs(&t, PairMode::Naive).unwrap();
        let c = empirical_joint(&t, &p, 0, &[]).unwrap();
        assert_eq!(c.total(), 2);
        assert_eq!(c.get(&[sym(1, 1), sym(0, 1)]), 1);
        assert_eq!(c.get(&[sym(0, 1), sym(1, 1)]), 1);
        assert_eq!(c.support_size(), 2);

        let t2 = Trajectory::from_counts(2, vec![0, 1, 1, 1, 0, 1], vec![1, 2, 1, 2, 1, 2]).unwrap();
        let p2 = build_pairs(&t2, PairMode::Naive).unwrap();
        let c2 = empirical_joint(&t2, &p2, 0, &[1]).unwrap();
        assert_eq!(c2.get(&[sym(1, 1), sym(0, 1), sym(1, 2)]), 1);
        assert_eq!(c2.get(&[sym(0, 1), sym(1, 1), sym(1, 2)]), 1);
        assert!(matches!(
            empirical_joint(&t2, &p2, 0, &[0]),
            Err(Error::InvalidConditioning { v: 0 })
        ));
        assert!(empirical_joint(&t2, &p2, 0, &[5]).is_err());
    }

    #[test]
    fn symbols_bounded_by_cap() {
        let g = InfluenceGraph::ring(3, NodeParams::default()).unwrap();
        let traj = simulate(&g, &PimParams::with_schedule(2, 1, 2000, 1)).unwrap();
        let p = build_pairs(&traj, PairMode::Naive).unwrap();
        let c = empirical_joint(&traj, &p, 0, &[1, 2]).unwrap();
        let allowed = [sym(0, 1), sym(1, 2), sym(1, 1)];
        for (k, _) in c.iter() {
            assert!(k.iter().all(|s| allowed.contains(s)));
        }
    }

    #[test]
    fn entropy_values() {
        let keys: Vec<Vec<Symbol>> = (0..4).map(|i| vec![sym(i, 3)]).collect();
        let uniform = JointCounts::from_entries(1, keys.iter().cloned().map(|k| (k, 5)));
        assert_abs_diff_eq!(entropy(&uniform).unwrap(), 2.0, epsilon = 1e-15);
        let single = JointCounts::from_entries(1, [(vec![sym(0, 1)], 17)]);
        assert_eq!(entropy(&single).unwrap(), 0.0);
        let skewed = JointCounts::from_entries(1, [(vec![sym(0, 1)], 3), (vec![sym(1, 1)], 1)]);
        let expected = -(0.75f64 * 0.75f64.log2()) - 0.25 * 0.25f64.log2();
        assert_abs_diff_eq!(entropy(&skewed).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.811278, epsilon = 1e-6);
        assert!(matches!(
            entropy(&JointCounts::new(2)),
            Err(Error::EmptyDistribution)
        ));
    }

    #[test]
    fn cond_entropy_deterministic_successor_is_zero() {
        // Y(t+1) = 1 - Y(t)
        let vals: Vec<u32> = (0..50).map(|i| i % 2).collect();
        let t = bits(&vals);
        let p = build_pairs(&t, PairMode::Naive).unwrap();
        assert_eq!(cond_entropy(&t, &p, 0, &[]).unwrap(), 0.0);
    }

    #[test]
    fn cond_entropy_fair_coin() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<u32> = (0..100_000).map(|_| rng.gen_range(0..2)).collect();
        let t = bits(&vals);
        let p = build_pairs(&t, PairMode::Naive).unwrap();
        let h = cond_entropy(&t, &p, 0, &[]).unwrap();
        assert!((h - 1.0).abs() < 0.01, "h = {h}");
    }

    #[test]
    fn estimator_matches_table_route() {
        let g = InfluenceGraph::random(5, 2, NodeParams::default(), 9).unwrap();
        let traj = simulate(&g, &PimParams::with_schedule(3, 2, 3000, 9)).unwrap();
        let p = build_pairs(&traj, PairMode::Naive).unwrap();
        let est = Estimator::new(&traj, &p).unwrap();
        for q in [vec![], vec![1], vec![1, 3], vec![1, 2, 3, 4]] {
            let joint = empirical_joint(&traj, &p, 0, &q).unwrap();
            let positions: Vec<usize> = (1..joint.arity()).collect();
            let reference = entropy(&joint).unwrap() - entropy(&joint.marginal(&positions)).unwrap();
            assert_abs_diff_eq!(est.cond_entropy(0, &q).unwrap(), reference, epsilon = 1e-12);
        }
    }

    #[test]
    fn l1_examples() {
        let a = JointCounts::from_entries(1, [(vec![sym(0, 1)], 2), (vec![sym(1, 1)], 6)]);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        let b = JointCounts::from_entries(1, [(vec![sym(1, 2)], 3)]);
        assert_abs_diff_eq!(l1_distance(&a, &b).unwrap(), 2.0, epsilon = 1e-15);
        let x = JointCounts::from_entries(1, [(vec![sym(0, 1)], 1), (vec![sym(1, 1)], 1)]);
        let y = JointCounts::from_entries(1, [(vec![sym(0, 1)], 1)]);
        assert_abs_diff_eq!(l1_distance(&x, &y).unwrap(), 1.0, epsilon = 1e-15);
        let z = JointCounts::from_entries(2, [(vec![sym(0, 1), sym(0, 1)], 1)]);
        assert!(matches!(
            l1_distance(&x, &z),
            Err(Error::IncompatibleDistributions { left: 1, right: 2 })
        ));
    }

    #[test]
    fn csv_dump_is_sorted() {
        let c = JointCounts::from_entries(
            2,
            [
                (vec![sym(1, 1), sym(0, 1)], 2),
                (vec![sym(0, 1), sym(1, 2)], 1),
                (vec![sym(0, 1), sym(1, 3)], 4),
            ],
        );
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "sym_1,sym_2,count\n0/1,1/3,4\n0/1,1/2,1\n1/1,0/1,2\n"
        );
    }
}
