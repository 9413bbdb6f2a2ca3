//! Chained exponential weighting at reference scale.
//!
//! A tree of bidding functions: level `m` holds the bracket at resolution
//! `2^-m` (level 0 is a single root), and each member picks the nearest
//! member one level up as its manager. Every manager also gets a *dummy*
//! employee bidding the pointwise maximum of the manager's descendant
//! leaves; by the one-sided Lipschitz property of the reward, that dummy is
//! within `gap_m = 2·sum_{r=m}^{M-1} 2^-r` of the best employee on every
//! round, so each manager can run the good-expert weighting over its
//! employees. A manager's bid distribution is the resulting mixture of its
//! employees' distributions; sampling descends the tree child by child.
//!
//! Statistically this matches the production policy, but the bracket sizes
//! grow exponentially in the resolution, so the tree is capped at three
//! levels and exists for cross-validation only.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::auction::{reward_raw, settle, Bid, HighestOtherBid, RoundOutcome, Value};
use crate::error::{Error, Result};
use crate::ew::{sample_slice, softmax};
use crate::reference::bracket::{build_bracket, PwLinear};

#[derive(Debug, Clone)]
pub struct ChewNode {
    pub func: PwLinear,
    pub level: usize,
    /// Employee node ids; empty for leaves. The dummy, when present, is last.
    pub children: Vec<usize>,
    /// Cumulative rewards per employee, parallel to `children`.
    pub cum_rewards: Vec<f64>,
    pub is_dummy: bool,
}

/// Per-round scratch: the mixture weights every manager played, reused by
/// the update so the credited mixtures match the sampled ones.
#[derive(Debug, Clone)]
pub struct ChewScratch {
    round: u64,
    /// `weights[node_id]` — employee distribution for manager nodes.
    weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ChewTree {
    pub nodes: Vec<ChewNode>,
    pub root: usize,
    /// Number of bracket levels `M`; node levels run `0..=M`.
    pub levels: usize,
    /// `gap_m = 2·sum_{r=m}^{M-1} 2^-r` per level `m`, index `0..=M`.
    pub gaps: Vec<f64>,
    /// `ln(max employee count)` per manager level, the measured stand-in for
    /// the bracket's log-cardinality bound.
    pub log_card: Vec<f64>,
    rounds_played: u64,
}

impl ChewTree {
    /// Builds brackets at resolutions `2^-1 .. 2^-M` where
    /// `M = min(floor(log2 sqrt(T)), max_levels)`, wires manager links by
    /// nearest sup-norm distance (ties to the lexicographically smaller
    /// function), and attaches dummies.
    pub fn new(horizon: u64, max_levels: usize) -> Result<Self> {
        if !(1..=3).contains(&max_levels) {
            return Err(Error::InvalidParam(format!(
                "chained tree supports 1..=3 levels, got {max_levels}"
            )));
        }
        let mut from_horizon = 0usize;
        while 4u64.checked_pow(from_horizon as u32 + 1).is_some_and(|p| p <= horizon) {
            from_horizon += 1;
        }
        let levels = max_levels.min(from_horizon.max(1));

        let mut nodes = vec![ChewNode {
            func: PwLinear::zero(),
            level: 0,
            children: Vec::new(),
            cum_rewards: Vec::new(),
            is_dummy: false,
        }];
        let root = 0usize;
        let mut level_ids: Vec<Vec<usize>> = vec![vec![root]];

        for m in 1..=levels {
            let bracket = build_bracket(m as u32)?;
            let mut ids = Vec::with_capacity(bracket.members.len());
            for func in bracket.members {
                let id = nodes.len();
                // manager: nearest member one level up
                let parent = *level_ids[m - 1]
                    .iter()
                    .min_by(|&&a, &&b| {
                        let da = nodes[a].func.sup_dist(&func);
                        let db = nodes[b].func.sup_dist(&func);
                        da.partial_cmp(&db)
                            .unwrap()
                            .then_with(|| nodes[a].func.lex_cmp(&nodes[b].func))
                    })
                    .expect("level above is nonempty");
                nodes.push(ChewNode {
                    func,
                    level: m,
                    children: Vec::new(),
                    cum_rewards: Vec::new(),
                    is_dummy: false,
                });
                nodes[parent].children.push(id);
                ids.push(id);
            }
            level_ids.push(ids);
        }

        // dummies: pointwise max of the manager's descendant leaves, added as
        // a last employee of that manager only. Childless managers act as
        // their own dummy.
        for m in (0..levels).rev() {
            for &manager in &level_ids[m] {
                let mut leaves = Vec::new();
                collect_leaf_funcs(&nodes, manager, levels, &mut leaves);
                let func = if leaves.is_empty() {
                    nodes[manager].func.clone()
                } else {
                    let refs: Vec<&PwLinear> = leaves.to_vec();
                    PwLinear::pointwise_max(&refs)
                };
                let id = nodes.len();
                nodes.push(ChewNode {
                    func,
                    level: m + 1,
                    children: Vec::new(),
                    cum_rewards: Vec::new(),
                    is_dummy: true,
                });
                nodes[manager].children.push(id);
            }
        }

        for node in nodes.iter_mut() {
            node.cum_rewards = vec![0.0; node.children.len()];
        }

        let gaps: Vec<f64> = (0..=levels)
            .map(|m| 2.0 * (m..levels).map(|r| 0.5f64.powi(r as i32)).sum::<f64>())
            .collect();
        let log_card: Vec<f64> = (0..levels)
            .map(|m| {
                let max_children = level_ids[m]
                    .iter()
                    .map(|&id| nodes[id].children.len())
                    .max()
                    .unwrap_or(1);
                (max_children.max(2) as f64).ln()
            })
            .collect();

        Ok(ChewTree {
            nodes,
            root,
            levels,
            gaps,
            log_card,
            rounds_played: 0,
        })
    }

    pub fn rounds_played(&self) -> u64 {
        self.rounds_played
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }

    /// Learning rate of managers at `level` for round `t` (1-based):
    /// `min(1/4, sqrt(log_card / (t·gap)))`.
    pub fn eta(&self, level: usize, t: u64) -> f64 {
        let gap = self.gaps[level];
        0.25f64.min((self.log_card[level] / (t as f64 * gap)).sqrt())
    }

    /// Computes every manager's employee distribution for the coming round.
    pub fn compute_weights(&self) -> ChewScratch {
        let t = self.rounds_played + 1;
        let mut weights = vec![Vec::new(); self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            if node.children.is_empty() {
                continue;
            }
            let eta = self.eta(node.level, t);
            weights[id] = softmax(&node.cum_rewards, eta).expect("finite cumulative rewards");
        }
        ChewScratch {
            round: self.rounds_played,
            weights,
        }
    }

    /// Samples a terminal bidding function by descending manager mixtures.
    pub fn sample_leaf(&self, scratch: &ChewScratch, rng: &mut dyn RngCore) -> usize {
        let mut node = self.root;
        while !self.nodes[node].children.is_empty() {
            let choice = sample_slice(&scratch.weights[node], rng);
            node = self.nodes[node].children[choice];
        }
        node
    }

    /// Reveals the competing bid and credits every employee of every manager
    /// with the expected reward of the mixture it played this round.
    pub fn apply_update(
        &mut self,
        scratch: &ChewScratch,
        v: Value,
        m: HighestOtherBid,
    ) -> Result<()> {
        if scratch.round != self.rounds_played {
            return Err(Error::StaleScratch(
                "weights were computed for a different round".into(),
            ));
        }
        // expected reward per node, bottom-up (node ids of deeper levels are
        // larger except dummies, so iterate by level explicitly)
        let mut expected = vec![0.0f64; self.nodes.len()];
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&id| std::cmp::Reverse(self.nodes[id].level));
        for &id in &order {
            let node = &self.nodes[id];
            expected[id] = if node.children.is_empty() {
                reward_raw(node.func.eval(v.get()), v.get(), m.get())
            } else {
                node.children
                    .iter()
                    .zip(scratch.weights[id].iter())
                    .map(|(&c, &q)| q * expected[c])
                    .sum()
            };
        }
        for id in 0..self.nodes.len() {
            for slot in 0..self.nodes[id].children.len() {
                let c = self.nodes[id].children[slot];
                self.nodes[id].cum_rewards[slot] += expected[c];
            }
        }
        self.rounds_played += 1;
        Ok(())
    }

    /// One full round: weights, sample, bid, reveal, update.
    pub fn round(
        &mut self,
        v: Value,
        m: HighestOtherBid,
        rng: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let scratch = self.compute_weights();
        let leaf = self.sample_leaf(&scratch, rng);
        let bid = Bid::new(self.nodes[leaf].func.eval(v.get()))?;
        self.apply_update(&scratch, v, m)?;
        Ok(settle(bid, v, m))
    }

    /// The root's distribution over terminal functions, expanded through the
    /// mixture recursion. Used for diagnostics and cross-checks.
    pub fn leaf_distribution(&self, scratch: &ChewScratch) -> Vec<(usize, f64)> {
        self.node_distribution(self.root, scratch)
    }

    /// Distribution over terminals induced by one node's mixture.
    pub fn node_distribution(&self, node: usize, scratch: &ChewScratch) -> Vec<(usize, f64)> {
        let n = &self.nodes[node];
        if n.children.is_empty() {
            return vec![(node, 1.0)];
        }
        let mut out = Vec::new();
        for (slot, &c) in n.children.iter().enumerate() {
            let q = scratch.weights[node][slot];
            for (leaf, p) in self.node_distribution(c, scratch) {
                out.push((leaf, q * p));
            }
        }
        out
    }
}

fn collect_leaf_funcs<'a>(
    nodes: &'a [ChewNode],
    id: usize,
    leaf_level: usize,
    out: &mut Vec<&'a PwLinear>,
) {
    let node = &nodes[id];
    if node.level == leaf_level && !node.is_dummy {
        out.push(&node.func);
        return;
    }
    for &c in &node.children {
        collect_leaf_funcs(nodes, c, leaf_level, out);
    }
}

/// Policy adapter holding the per-round scratch between bid and feedback.
#[derive(Debug, Clone)]
pub struct ChewPolicy {
    tree: ChewTree,
    scratch: Option<(ChewScratch, u64)>,
}

impl ChewPolicy {
    pub fn new(horizon: u64, max_levels: usize) -> Result<Self> {
        Ok(ChewPolicy {
            tree: ChewTree::new(horizon, max_levels)?,
            scratch: None,
        })
    }

    pub fn tree(&self) -> &ChewTree {
        &self.tree
    }

    pub fn bid(&mut self, v: Value, rng: &mut dyn RngCore) -> Bid {
        let scratch = self.tree.compute_weights();
        let leaf = self.tree.sample_leaf(&scratch, rng);
        let bid = Bid::new(self.tree.nodes[leaf].func.eval(v.get()))
            .expect("tree functions stay inside [0, 1]");
        self.scratch = Some((scratch, v.get().to_bits()));
        bid
    }

    pub fn feedback(&mut self, v: Value, m: HighestOtherBid) -> Result<()> {
        let (scratch, bits) = self
            .scratch
            .take()
            .ok_or_else(|| Error::StaleScratch("no pending round".into()))?;
        if bits != v.get().to_bits() {
            return Err(Error::StaleScratch("value changed since the bid".into()));
        }
        self.tree.apply_update(&scratch, v, m)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeDump {
    pub levels: usize,
    pub gaps: Vec<f64>,
    pub nodes: Vec<String>,
}

impl ChewTree {
    /// Text dump of the tree's functions for fixtures.
    pub fn dump(&self) -> TreeDump {
        TreeDump {
            levels: self.levels,
            gaps: self.gaps.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    format!(
                        "level {} dummy {} children {:?} fn {}",
                        n.level,
                        n.is_dummy,
                        n.children,
                        n.func.to_text()
                    )
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64) -> Value {
        Value::new(x).unwrap()
    }
    fn hm(x: f64) -> HighestOtherBid {
        HighestOtherBid::new(x).unwrap()
    }

    #[test]
    fn single_layer_tree_shape() {
        let tree = ChewTree::new(1 << 10, 1).unwrap();
        assert_eq!(tree.levels, 1);
        // root manages every member of the eps = 1/2 bracket plus its dummy
        assert_eq!(tree.nodes[tree.root].children.len(), 5 + 1);
        assert!(tree.nodes[*tree.nodes[tree.root].children.last().unwrap()].is_dummy);
    }

    #[test]
    fn gaps_follow_the_geometric_sum() {
        let tree = ChewTree::new(1 << 12, 3).unwrap();
        assert_eq!(tree.levels, 3);
        assert!((tree.gaps[1] - 1.5).abs() < 1e-15); // 2(1/2 + 1/4)
        assert!((tree.gaps[2] - 0.5).abs() < 1e-15); // 2(1/4)
        assert!((tree.gaps[0] - 3.5).abs() < 1e-15); // 2(1 + 1/2 + 1/4)
        assert_eq!(tree.gaps[3], 0.0);
    }

    #[test]
    fn dummy_dominates_descendants_within_gap() {
        let tree = ChewTree::new(1 << 12, 3).unwrap();
        for (id, node) in tree.nodes.iter().enumerate() {
            if node.children.is_empty() {
                continue;
            }
            let dummy = &tree.nodes[*node.children.last().unwrap()];
            assert!(dummy.is_dummy);
            let mut leaves = Vec::new();
            collect_leaf_funcs(&tree.nodes, id, tree.levels, &mut leaves);
            let gap = tree.gaps[node.level];
            for leaf in leaves {
                let q = leaf.grid_log2().max(dummy.func.grid_log2());
                let lf = leaf.refined(q);
                let df = dummy.func.refined(q);
                for (a, b) in lf.knot_values().iter().zip(df.knot_values()) {
                    assert!(a <= b, "dummy below a descendant");
                    assert!(*b <= a + gap + 1e-12, "dummy too far above");
                }
            }
        }
    }

    #[test]
    fn dummies_stay_in_class() {
        let tree = ChewTree::new(1 << 12, 3).unwrap();
        for node in &tree.nodes {
            assert!(node.func.is_one_lipschitz());
            assert!(node.func.leq_identity());
            assert!(node.func.in_unit_range());
        }
    }

    #[test]
    fn first_round_weights_are_uniform() {
        let tree = ChewTree::new(256, 2).unwrap();
        let scratch = tree.compute_weights();
        for (id, node) in tree.nodes.iter().enumerate() {
            if node.children.is_empty() {
                continue;
            }
            let k = node.children.len() as f64;
            for &w in &scratch.weights[id] {
                assert!((w - 1.0 / k).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn leaf_distribution_matches_path_products() {
        let mut tree = ChewTree::new(256, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // run some rounds so the weights are informative
        for _ in 0..50 {
            let vv = v(rng.gen_range(0.05..1.0));
            let mm = hm(rng.gen_range(0.0..0.9));
            tree.round(vv, mm, &mut rng).unwrap();
        }
        let scratch = tree.compute_weights();
        let dist = tree.leaf_distribution(&scratch);
        let total: f64 = dist.iter().map(|&(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);

        // independent oracle: explicit products of weights along every
        // root-to-terminal path
        let mut oracle = std::collections::HashMap::new();
        let mut stack = vec![(tree.root, 1.0f64)];
        while let Some((node, p)) = stack.pop() {
            if tree.nodes[node].children.is_empty() {
                *oracle.entry(node).or_insert(0.0) += p;
                continue;
            }
            for (slot, &c) in tree.nodes[node].children.iter().enumerate() {
                stack.push((c, p * scratch.weights[node][slot]));
            }
        }
        for (leaf, p) in dist {
            let q = oracle.get(&leaf).copied().unwrap_or(0.0);
            assert!((p - q).abs() < 1e-9, "leaf {leaf}: {p} vs {q}");
        }
    }

    #[test]
    fn manager_distributions_stay_normalized_while_running() {
        let mut tree = ChewTree::new(512, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let vv = v(rng.gen_range(0.05..1.0));
            let mm = hm(rng.gen_range(0.0..0.9));
            let scratch = tree.compute_weights();
            for (id, node) in tree.nodes.iter().enumerate() {
                if node.children.is_empty() {
                    continue;
                }
                let sum: f64 = tree
                    .node_distribution(id, &scratch)
                    .iter()
                    .map(|&(_, p)| p)
                    .sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
            let leaf = tree.sample_leaf(&scratch, &mut rng);
            assert!(tree.nodes[leaf].children.is_empty());
            tree.apply_update(&scratch, vv, mm).unwrap();
        }
    }

    #[test]
    fn stale_scratch_is_rejected() {
        let mut tree = ChewTree::new(64, 1).unwrap();
        let scratch = tree.compute_weights();
        tree.apply_update(&scratch, v(0.5), hm(0.2)).unwrap();
        assert!(tree.apply_update(&scratch, v(0.5), hm(0.2)).is_err());
    }

    #[test]
    fn policy_adapter_round_trip() {
        let mut p = ChewPolicy::new(128, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let vv = v(rng.gen_range(0.1..1.0));
            let b = p.bid(vv, &mut rng);
            assert!(b.get() >= 0.0 && b.get() <= 1.0);
            p.feedback(vv, hm(0.3)).unwrap();
        }
    }
}
