//! Domain types for repeated first-price auctions.
//!
//! A round is a pair `(v, m)`: the bidder's private value `v ∈ (0, 1]` and the
//! highest competing bid `m ∈ [0, 1]`. Bidding `b` wins iff `b >= m` and pays
//! `b`, so the instantaneous reward is `(v - b)·1(b >= m)`. Ties count as a
//! win so that the win event is reproducible.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Absolute tolerance for equality comparisons on probabilities.
pub const PROB_TOL: f64 = 1e-12;

/// A private valuation, normalized into `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(f64);

impl Value {
    pub fn new(v: f64) -> Result<Self> {
        if v.is_finite() && v > 0.0 && v <= 1.0 {
            Ok(Value(v))
        } else {
            Err(Error::InvalidValue(v))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// A bid price in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bid(f64);

impl Bid {
    pub fn new(b: f64) -> Result<Self> {
        if b.is_finite() && (0.0..=1.0).contains(&b) {
            Ok(Bid(b))
        } else {
            Err(Error::InvalidBid(b))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// The maximum bid among all other bidders, in `[0, 1]`.
///
/// Under full-information feedback this is revealed after the round; it equals
/// the minimum price that would have won.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HighestOtherBid(f64);

impl HighestOtherBid {
    pub fn new(m: f64) -> Result<Self> {
        if m.is_finite() && (0.0..=1.0).contains(&m) {
            Ok(HighestOtherBid(m))
        } else {
            Err(Error::InvalidOtherBid(m))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Outcome of a single auction round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub bid: Bid,
    pub won: bool,
    pub payoff: f64,
}

/// Instantaneous reward `(v - b)·1(b >= m)`. Total on valid inputs; a tie
/// `b = m` wins.
#[inline]
pub fn reward(b: Bid, v: Value, m: HighestOtherBid) -> f64 {
    reward_raw(b.get(), v.get(), m.get())
}

/// `reward` on raw floats, for hot loops that already hold validated data.
#[inline]
pub fn reward_raw(b: f64, v: f64, m: f64) -> f64 {
    if b >= m {
        v - b
    } else {
        0.0
    }
}

/// Builds the outcome record for one round.
pub fn settle(b: Bid, v: Value, m: HighestOtherBid) -> RoundOutcome {
    let won = b.get() >= m.get();
    RoundOutcome {
        bid: b,
        won,
        payoff: if won { v.get() - b.get() } else { 0.0 },
    }
}

/// Index of the half-open bin `((i-1)/bins, i/bins]` containing `v`; 1-based.
///
/// Float boundaries are post-corrected so the result always agrees with a
/// linear search over the intervals.
pub fn bin_index(v: Value, bins: usize) -> usize {
    assert!(bins >= 1, "bin count must be at least 1");
    let x = v.get();
    let n = bins as f64;
    let mut idx = (x * n).ceil() as usize;
    idx = idx.clamp(1, bins);
    while idx > 1 && x <= (idx - 1) as f64 / n {
        idx -= 1;
    }
    while idx < bins && x > idx as f64 / n {
        idx += 1;
    }
    idx
}

/// An adversarial sequence of rounds `(v_t, m_t)`, already normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionTrace {
    rounds: Vec<(Value, HighestOtherBid)>,
}

impl AuctionTrace {
    /// Wraps validated rounds. The horizon is the number of rounds.
    pub fn new(rounds: Vec<(Value, HighestOtherBid)>) -> Self {
        AuctionTrace { rounds }
    }

    /// Validates raw pairs already expected to lie in `(0,1] x [0,1]`.
    pub fn from_raw(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut rounds = Vec::with_capacity(pairs.len());
        for &(v, m) in pairs {
            rounds.push((Value::new(v)?, HighestOtherBid::new(m)?));
        }
        Ok(AuctionTrace { rounds })
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[(Value, HighestOtherBid)] {
        &self.rounds
    }

    pub fn iter(&self) -> impl Iterator<Item = (Value, HighestOtherBid)> + '_ {
        self.rounds.iter().copied()
    }
}

/// A trace rescaled into the unit square, plus the factor that undoes it.
#[derive(Debug, Clone)]
pub struct NormalizedTrace {
    pub trace: AuctionTrace,
    /// Original units per normalized unit; multiply to de-normalize reports.
    pub scale: f64,
}

/// Rescales raw `(v, m)` pairs in arbitrary positive units so that both
/// coordinates lie in `(0, 1]`, dividing by the global maximum.
pub fn normalize_trace(raw: &[(f64, f64)]) -> Result<NormalizedTrace> {
    if raw.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut scale = f64::NEG_INFINITY;
    for (i, &(v, m)) in raw.iter().enumerate() {
        if !v.is_finite() || !m.is_finite() {
            return Err(Error::NonFinite(format!("round {i}: ({v}, {m})")));
        }
        if v <= 0.0 {
            return Err(Error::NonPositiveEntry { index: i, value: v });
        }
        if m <= 0.0 {
            return Err(Error::NonPositiveEntry { index: i, value: m });
        }
        scale = scale.max(v).max(m);
    }
    let mut rounds = Vec::with_capacity(raw.len());
    for &(v, m) in raw {
        rounds.push((Value::new(v / scale)?, HighestOtherBid::new(m / scale)?));
    }
    Ok(NormalizedTrace {
        trace: AuctionTrace::new(rounds),
        scale,
    })
}

/// Serializes a trace in the interchange format: header `v,m`, one round per
/// line, decimal floats that parse back bit-exactly.
pub fn trace_to_csv(trace: &AuctionTrace) -> String {
    let mut out = String::with_capacity(16 * trace.horizon() + 4);
    out.push_str("v,m\n");
    for (v, m) in trace.iter() {
        let _ = writeln!(out, "{},{}", v.get(), m.get());
    }
    out
}

pub fn write_trace_csv(trace: &AuctionTrace, path: &Path) -> Result<()> {
    std::fs::write(path, trace_to_csv(trace))?;
    Ok(())
}

/// Parses the trace format into raw pairs without range-checking them.
/// Malformed lines are reported with 1-based line numbers.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "v,m" => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header 'v,m', got '{header}'"),
            })
        }
        None => return Err(Error::EmptyTrace),
    }
    let mut pairs = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let parse = |s: Option<&str>| -> std::result::Result<f64, String> {
            let s = s.ok_or("missing field")?.trim();
            s.parse::<f64>().map_err(|e| format!("'{s}': {e}"))
        };
        let v = parse(parts.next()).map_err(|msg| Error::Parse { line: i + 1, msg })?;
        let m = parse(parts.next()).map_err(|msg| Error::Parse { line: i + 1, msg })?;
        pairs.push((v, m));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64) -> Value {
        Value::new(x).unwrap()
    }
    fn b(x: f64) -> Bid {
        Bid::new(x).unwrap()
    }
    fn m(x: f64) -> HighestOtherBid {
        HighestOtherBid::new(x).unwrap()
    }

    #[test]
    fn reward_examples() {
        assert!((reward(b(0.5), v(0.8), m(0.4)) - 0.3).abs() < 1e-15);
        assert_eq!(reward(b(0.3), v(0.8), m(0.4)), 0.0);
        // boundary: tie wins with zero payoff
        assert_eq!(reward(b(0.4), v(0.4), m(0.4)), 0.0);
    }

    #[test]
    fn reward_can_be_negative_when_overbidding() {
        assert!(reward(b(0.9), v(0.5), m(0.1)) < 0.0);
        assert!(reward(b(0.9), v(0.5), m(0.1)) >= -1.0);
    }

    #[test]
    fn type_invariants_enforced() {
        assert!(Value::new(0.0).is_err());
        assert!(Value::new(1.0 + 1e-9).is_err());
        assert!(Value::new(f64::NAN).is_err());
        assert!(Bid::new(-0.1).is_err());
        assert!(Bid::new(0.0).is_ok());
        assert!(HighestOtherBid::new(0.0).is_ok());
        assert!(HighestOtherBid::new(1.1).is_err());
    }

    #[test]
    fn bin_index_examples() {
        assert_eq!(bin_index(v(0.3), 4), 2);
        assert_eq!(bin_index(v(1.0), 4), 4);
        assert_eq!(bin_index(v(0.25), 4), 1);
    }

    #[test]
    fn one_sided_lipschitz_exact_on_dyadic_grid() {
        // For b <= min(v, b'): r(b) <= r(b') + (b' - b). Sampling on the
        // 2^-20 grid keeps every difference exactly representable, so the
        // inequality can be asserted without tolerance.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let unit = (1u64 << 20) as f64;
        let grid = |r: &mut ChaCha8Rng, lo: f64, hi: f64| -> f64 {
            let lo_k = (lo * unit) as u64;
            let hi_k = (hi * unit) as u64;
            r.gen_range(lo_k..=hi_k) as f64 / unit
        };
        for _ in 0..100_000 {
            let vv = grid(&mut rng, 1.0 / unit, 1.0);
            let mm = grid(&mut rng, 0.0, 1.0);
            let hi = grid(&mut rng, 0.0, 1.0);
            let lo = grid(&mut rng, 0.0, vv.min(hi));
            let lhs = reward_raw(lo, vv, mm);
            let rhs = reward_raw(hi, vv, mm) + (hi - lo);
            assert!(
                lhs <= rhs,
                "one-sided Lipschitz violated: b={lo} b'={hi} v={vv} m={mm}"
            );
        }
    }

    #[test]
    fn win_indicator_monotone_in_bid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let vv: f64 = rng.gen_range(1e-6..=1.0);
            let mm: f64 = rng.gen();
            let hi = rng.gen_range(0.0..=vv);
            let lo = rng.gen_range(0.0..=hi);
            assert!(u8::from(lo >= mm) <= u8::from(hi >= mm));
        }
    }

    proptest! {
        #[test]
        fn bin_index_is_a_partition(x in 1e-9f64..=1.0, bins in 1usize..200) {
            let idx = bin_index(v(x), bins);
            let mut hits = 0;
            let mut linear = 0;
            for i in 1..=bins {
                let lo = (i - 1) as f64 / bins as f64;
                let hi = i as f64 / bins as f64;
                if x > lo && x <= hi {
                    hits += 1;
                    linear = i;
                }
            }
            prop_assert_eq!(hits, 1);
            prop_assert_eq!(idx, linear);
        }

        #[test]
        fn normalize_lands_in_unit_square(
            pairs in proptest::collection::vec((1e-3f64..1e3, 1e-3f64..1e3), 1..50)
        ) {
            let n = normalize_trace(&pairs).unwrap();
            let max = pairs
                .iter()
                .map(|&(a, b)| a.max(b))
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(n.scale, max);
            let back: Vec<(f64, f64)> = n
                .trace
                .iter()
                .map(|(vv, mm)| (vv.get() * n.scale, mm.get() * n.scale))
                .collect();
            for (orig, rt) in pairs.iter().zip(back.iter()) {
                prop_assert!((orig.0 - rt.0).abs() <= 1e-12 * orig.0.abs());
                prop_assert!((orig.1 - rt.1).abs() <= 1e-12 * orig.1.abs());
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_trace(&[(2.0, 1.0), (4.0, 3.0)]).unwrap();
        assert_eq!(n.scale, 4.0);
        let r = n.trace.rounds();
        assert_eq!(r[0].0.get(), 0.5);
        assert_eq!(r[0].1.get(), 0.25);
        assert_eq!(r[1].0.get(), 1.0);
        assert_eq!(r[1].1.get(), 0.75);

        let id = normalize_trace(&[(1.0, 1.0)]).unwrap();
        assert_eq!(id.scale, 1.0);
        assert_eq!(id.trace.rounds()[0].0.get(), 1.0);

        assert!(normalize_trace(&[]).is_err());
        assert!(normalize_trace(&[(0.0, 1.0)]).is_err());
        assert!(normalize_trace(&[(1.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn trace_csv_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rounds: Vec<(Value, HighestOtherBid)> = (0..64)
            .map(|_| {
                (
                    v(rng.gen_range(1e-6..=1.0)),
                    m(rng.gen_range(0.0..=1.0)),
                )
            })
            .collect();
        let trace = AuctionTrace::new(rounds);
        let csv = trace_to_csv(&trace);
        let parsed = parse_trace_csv(&csv).unwrap();
        let rt = AuctionTrace::from_raw(&parsed).unwrap();
        assert_eq!(trace, rt);
    }

    #[test]
    fn trace_csv_errors() {
        assert!(matches!(parse_trace_csv(""), Err(Error::EmptyTrace)));
        assert!(matches!(parse_trace_csv("v,m\n"), Err(Error::EmptyTrace)));
        match parse_trace_csv("v,m\n0.5,abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_trace_csv("x,y\n1,2\n").is_err());
    }
}
