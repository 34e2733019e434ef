//! Comparative statics, utility orderings, market-share drift and consumer
//! welfare.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{mixed_point, regime_for, BoundaryKind, Regime};
use crate::error::{Error, Result};
use crate::game::{
    delta_quantities, payoff_matrix, profile_weights, Firm, GameSpec, ProfileMap, StrategyProfile,
};
use crate::market_model::{error_rate, market_share_from_data, LearningProfile};

/// Firm 1's preference order in the mixed regime, best first.
pub const FIRM1_ORDER: [StrategyProfile; 4] =
    [StrategyProfile::NB_NB, StrategyProfile::B_NB, StrategyProfile::BB, StrategyProfile::NB_B];
/// Firm 2's preference order in the mixed regime, best first.
pub const FIRM2_ORDER: [StrategyProfile; 4] =
    [StrategyProfile::NB_NB, StrategyProfile::NB_B, StrategyProfile::BB, StrategyProfile::B_NB];
/// Consumers' preference order when Firm 1 starts ahead.
pub const CONSUMER_ORDER: [StrategyProfile; 4] =
    [StrategyProfile::B_NB, StrategyProfile::BB, StrategyProfile::NB_B, StrategyProfile::NB_NB];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ranked {
    pub profile: StrategyProfile,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityOrdering {
    pub firm1: Vec<Ranked>,
    pub firm2: Vec<Ranked>,
}

/// Sorts descending by value; exact ties keep the order of `seed`.
fn rank(seed: &[StrategyProfile; 4], value: impl Fn(StrategyProfile) -> f64) -> Vec<Ranked> {
    let mut v: Vec<Ranked> = seed.iter().map(|&profile| Ranked { profile, value: value(profile) }).collect();
    v.sort_by(|a, b| b.value.total_cmp(&a.value));
    v
}

/// `true` when `values` taken in `order` never increase by more than `tol`.
pub fn respects_order(order: &[StrategyProfile], value: impl Fn(StrategyProfile) -> f64, tol: f64) -> bool {
    order.windows(2).all(|w| value(w[0]) + tol >= value(w[1]))
}

/// Each firm's utilities ranked from best to worst. Only defined in the
/// mixed regime, where both firms rank (NB,NB) first and disagree about the
/// rest.
pub fn utility_ordering(spec: &GameSpec) -> Result<UtilityOrdering> {
    let regime = regime_for(spec.p(), &delta_quantities(spec));
    if regime != Regime::TwoPureAndMixed {
        return Err(Error::Precondition(format!(
            "utility ordering needs max{{C,D}} < p < A, regime is {regime}"
        )));
    }
    let pm = payoff_matrix(spec);
    Ok(UtilityOrdering {
        firm1: rank(&FIRM1_ORDER, |s| pm.utility(Firm::One, s)),
        firm2: rank(&FIRM2_ORDER, |s| pm.utility(Firm::Two, s)),
    })
}

/// Change in Firm 1's market share relative to the starting position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    pub per_profile: ProfileMap<f64>,
    /// Closed-form expectation at the mixed equilibrium.
    pub mixed_expected: Option<f64>,
    /// The same expectation summed over outcomes weighted by their
    /// probability.
    pub mixed_weighted: Option<f64>,
}

/// Expected drift when the firms buy with probabilities `q1`, `q2`.
pub fn expected_drift(per_profile: &ProfileMap<f64>, q1: f64, q2: f64) -> f64 {
    profile_weights(q1, q2).iter().map(|(s, w)| w * per_profile.get(s)).sum()
}

pub fn share_drift(spec: &GameSpec) -> DriftReport {
    let dq = delta_quantities(spec);
    let (a, c, d, p) = (dq.a, dq.c, dq.d, spec.p());
    let per_profile = ProfileMap([(c - d) / 2.0, c, -d, 0.0]);
    let (mixed_expected, mixed_weighted) = if regime_for(p, &dq) == Regime::TwoPureAndMixed {
        let closed = 2.0 * (c - d) * (p * (a - c - d) + c * d) / ((a + p - 2.0 * c) * (a + p - 2.0 * d));
        let m = mixed_point(p, &dq);
        (Some(closed), Some(expected_drift(&per_profile, m.q1, m.q2)))
    } else {
        (None, None)
    };
    DriftReport { per_profile, mixed_expected, mixed_weighted }
}

/// Welfare of consumers when the firms hold `m1` and `m2` points: the
/// share-weighted probability of a correct answer.
fn welfare_for_counts(m1: f64, m2: f64, beta: f64, r: f64) -> f64 {
    let curve = LearningProfile::PowerLaw { r };
    let err1 = error_rate(&curve, m1).expect("counts and rate validated by GameSpec");
    let err2 = error_rate(&curve, m2).expect("counts and rate validated by GameSpec");
    market_share_from_data(m1, m2, beta) * (1.0 - err1) + market_share_from_data(m2, m1, beta) * (1.0 - err2)
}

/// Consumer welfare of the realized outcome of `profile`; for (B,B) the
/// average over the coin flip.
pub fn consumer_welfare(spec: &GameSpec, profile: StrategyProfile) -> f64 {
    let at = |winner: Option<Firm>| {
        let (m1, m2) = spec.data_counts(winner);
        welfare_for_counts(m1, m2, spec.beta(), spec.r())
    };
    match profile {
        StrategyProfile::BB => 0.5 * (at(Some(Firm::One)) + at(Some(Firm::Two))),
        StrategyProfile::B_NB => at(Some(Firm::One)),
        StrategyProfile::NB_B => at(Some(Firm::Two)),
        StrategyProfile::NB_NB => at(None),
    }
}

/// Expected welfare when the firms buy with probabilities `q1`, `q2`.
pub fn mixed_welfare(spec: &GameSpec, q1: f64, q2: f64) -> f64 {
    profile_weights(q1, q2).iter().map(|(s, w)| w * consumer_welfare(spec, s)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub cons: ProfileMap<f64>,
    /// Profiles by descending welfare.
    pub ordering: Vec<StrategyProfile>,
    /// Whether `cons(B,NB) > cons(B,B) > cons(NB,B) > cons(NB,NB)` holds
    /// strictly (by more than `EPS` at each step).
    pub consumer_order_holds: bool,
    /// Set when `x ≤ y`, outside the hypothesis of the consumer ordering.
    pub warning: Option<String>,
}

pub fn welfare_ordering(spec: &GameSpec) -> WelfareReport {
    let cons = ProfileMap::from_fn(|s| consumer_welfare(spec, s));
    let ordering = rank(&CONSUMER_ORDER, |s| cons.get(s)).into_iter().map(|r| r.profile).collect();
    let consumer_order_holds = CONSUMER_ORDER.windows(2).all(|w| cons.get(w[0]) > cons.get(w[1]) + crate::EPS);
    let warning = (spec.x() <= spec.y())
        .then(|| format!("x = {} ≤ y = {}: consumer ordering is only claimed for x > y", spec.x(), spec.y()));
    WelfareReport { cons, ordering, consumer_order_holds, warning }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Price,
    Corpus,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "price" | "p" => Ok(SweepParam::Price),
            "corpus" | "n" => Ok(SweepParam::Corpus),
            _ => Err(Error::Domain(format!("unknown sweep parameter {s:?} (expected price or corpus)"))),
        }
    }
}

/// One grid point of a comparative-statics sweep. Pure regimes report buy
/// probabilities 1 ((B,B)) or 0 ((NB,NB)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub regime: Regime,
    pub q1: f64,
    pub q2: f64,
    pub u1_mixed: f64,
    pub u2_mixed: f64,
    pub drift_mixed: f64,
}

pub fn sweep_row(spec: &GameSpec, param_value: f64) -> SweepRow {
    let dq = delta_quantities(spec);
    let regime = regime_for(spec.p(), &dq);
    let drift = share_drift(spec);
    let (q1, q2) = match regime {
        Regime::BothBuyUnique | Regime::Boundary(BoundaryKind::AtMaxCD) => (1.0, 1.0),
        Regime::NeitherBuyUnique | Regime::Boundary(BoundaryKind::AtA) => (0.0, 0.0),
        Regime::TwoPureAndMixed => {
            let m = mixed_point(spec.p(), &dq);
            (m.q1, m.q2)
        }
    };
    let (u1_mixed, u2_mixed) = payoff_matrix(spec).expected(q1, q2);
    let drift_mixed = drift.mixed_expected.unwrap_or_else(|| expected_drift(&drift.per_profile, q1, q2));
    SweepRow { param_value, regime, q1, q2, u1_mixed, u2_mixed, drift_mixed }
}

/// Equilibrium buy probabilities along an evenly spaced grid of prices or
/// corpus sizes, everything else held at `spec`.
pub fn monotonicity_sweep(spec: &GameSpec, param: SweepParam, lo: f64, hi: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if !(lo < hi) {
        return Err(Error::Precondition(format!("sweep needs lo < hi, got [{lo}, {hi}]")));
    }
    if steps < 2 {
        return Err(Error::Precondition(format!("sweep needs at least 2 steps, got {steps}")));
    }
    let last = (steps - 1) as f64;
    let specs = (0..steps)
        .map(|i| {
            let v = if i == steps - 1 { hi } else { lo + (hi - lo) * i as f64 / last };
            let s = match param {
                SweepParam::Price => spec.with_price(v),
                SweepParam::Corpus => spec.with_corpus(v),
            }?;
            Ok((v, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(specs.par_iter().map(|(v, s)| sweep_row(s, *v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running(p: f64) -> GameSpec {
        GameSpec::new(100.0, 50.0, 50.0, p, 1.0).unwrap()
    }

    #[test]
    fn utility_ordering_worked_instance() {
        let o = utility_ordering(&running(0.2)).unwrap();
        let got1: Vec<_> = o.firm1.iter().map(|r| r.profile).collect();
        assert_eq!(got1, FIRM1_ORDER);
        let want1 = [2.0 / 3.0, 0.55, 0.525, 0.5];
        for (r, w) in o.firm1.iter().zip(want1) {
            assert!((r.value - w).abs() < 1e-12);
        }
        let got2: Vec<_> = o.firm2.iter().map(|r| r.profile).collect();
        assert_eq!(got2, FIRM2_ORDER);
        let want2 = [1.0 / 3.0, 0.3, 0.275, 0.25];
        for (r, w) in o.firm2.iter().zip(want2) {
            assert!((r.value - w).abs() < 1e-12);
        }
    }

    #[test]
    fn utility_ordering_symmetric_firms() {
        // x = y: C = D = 0.1, the mixed band is (0.1, 0.2)
        let spec = GameSpec::new(100.0, 100.0, 50.0, 0.15, 1.0).unwrap();
        let o = utility_ordering(&spec).unwrap();
        for (a, b) in o.firm1.iter().zip(&o.firm2) {
            assert!((a.value - b.value).abs() < 1e-12);
        }
    }

    #[test]
    fn utility_ordering_outside_regime() {
        assert!(matches!(utility_ordering(&running(0.1)), Err(Error::Precondition(_))));
        assert!(utility_ordering(&running(0.3)).is_err());
    }

    #[test]
    fn drift_worked_instance() {
        let d = share_drift(&running(0.2));
        let want = [-1.0 / 24.0, 1.0 / 12.0, -1.0 / 6.0, 0.0];
        for (got, w) in d.per_profile.0.iter().zip(want) {
            assert!((got - w).abs() < 1e-12);
        }
        // (−1/432) / ((0.45 − 1/6)(0.45 − 1/3))
        let oracle = (-1.0 / 432.0) / ((0.45 - 1.0 / 6.0) * (0.45 - 1.0 / 3.0));
        let closed = d.mixed_expected.unwrap();
        assert!((closed - oracle).abs() < 1e-12);
        assert!((closed - -0.0700).abs() < 1e-4);
        assert!((d.mixed_weighted.unwrap() - closed).abs() < 1e-12);
    }

    #[test]
    fn drift_symmetric_and_outside_regime() {
        let d = share_drift(&GameSpec::new(100.0, 100.0, 50.0, 0.15, 1.0).unwrap());
        assert_eq!(d.mixed_expected, Some(0.0));
        assert!(share_drift(&running(0.1)).mixed_expected.is_none());
    }

    #[test]
    fn welfare_worked_instance() {
        let spec = running(0.2);
        let nn = (2.0 / 3.0) * 0.9 + (1.0 / 3.0) * (1.0 - 50f64.powf(-0.5));
        assert!((consumer_welfare(&spec, StrategyProfile::NB_NB) - nn).abs() < 1e-15);
        assert!((nn - 0.886_193).abs() < 1e-6);
        assert!((consumer_welfare(&spec, StrategyProfile::B_NB) - 0.903_407).abs() < 1e-6);
        assert!((consumer_welfare(&spec, StrategyProfile::NB_B) - 0.9).abs() < 1e-12);
        assert!((consumer_welfare(&spec, StrategyProfile::BB) - 0.901_704).abs() < 1e-6);
        let w = welfare_ordering(&spec);
        assert_eq!(w.ordering, CONSUMER_ORDER);
        assert!(w.consumer_order_holds);
        assert!(w.warning.is_none());
    }

    #[test]
    fn welfare_symmetric_firms_tie() {
        let spec = GameSpec::new(70.0, 70.0, 20.0, 0.2, 1.3).unwrap();
        let w = welfare_ordering(&spec);
        assert_eq!(w.cons.get(StrategyProfile::B_NB), w.cons.get(StrategyProfile::NB_B));
        assert!(!w.consumer_order_holds);
        assert!(w.warning.is_some());
    }

    #[test]
    fn mixed_welfare_at_corners() {
        let spec = running(0.2);
        assert!((mixed_welfare(&spec, 1.0, 1.0) - consumer_welfare(&spec, StrategyProfile::BB)).abs() < 1e-15);
        assert!((mixed_welfare(&spec, 0.0, 0.0) - consumer_welfare(&spec, StrategyProfile::NB_NB)).abs() < 1e-15);
    }

    #[test]
    fn price_sweep_examples() {
        let rows = monotonicity_sweep(&running(0.2), SweepParam::Price, 0.17, 0.245, 50).unwrap();
        assert_eq!(rows.len(), 50);
        let q1_lo = 2.0 * (0.17 - 1.0 / 6.0) / (0.25 + 0.17 - 1.0 / 3.0);
        assert!((rows[0].q1 - q1_lo).abs() < 1e-12);
        assert!((rows[0].q1 - 1.0 / 13.0).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[1].q1 > w[0].q1 && w[1].q2 > w[0].q2));
        assert!(rows.last().unwrap().q1 > 0.9);

        let rows = monotonicity_sweep(&running(0.2), SweepParam::Price, 0.2495, 0.2505, 11).unwrap();
        let after = rows.iter().find(|r| r.param_value > 0.25 + 1e-9).unwrap();
        assert_eq!(after.regime, Regime::NeitherBuyUnique);
        assert_eq!((after.q1, after.q2), (0.0, 0.0));
    }

    #[test]
    fn corpus_sweep_decreasing() {
        // at p = 0.2 the mixed band holds for n near 50
        let rows = monotonicity_sweep(&running(0.2), SweepParam::Corpus, 45.0, 55.0, 40).unwrap();
        let mixed: Vec<_> = rows.iter().filter(|r| r.regime == Regime::TwoPureAndMixed).collect();
        assert!(mixed.len() > 10);
        assert!(mixed.windows(2).all(|w| w[1].q1 <= w[0].q1 && w[1].q2 <= w[0].q2));
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        assert!(monotonicity_sweep(&running(0.2), SweepParam::Price, 0.3, 0.1, 10).is_err());
        assert!(monotonicity_sweep(&running(0.2), SweepParam::Price, 0.1, 0.3, 1).is_err());
        assert!(monotonicity_sweep(&running(0.2), SweepParam::Corpus, -1.0, 3.0, 5).is_err());
        assert_eq!(monotonicity_sweep(&running(0.2), SweepParam::Price, 0.1, 0.3, 2).unwrap().len(), 2);
    }
}
