//! Cross-checks of the closed forms against the brute-force oracle and the
//! structural invariants, for one spec plus optional random specs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{respects_order, share_drift, utility_ordering, welfare_ordering, FIRM1_ORDER, FIRM2_ORDER};
use crate::equilibrium::{brute_force_equilibria, solve_equilibria, Regime};
use crate::game::{delta_quantities, deviation_gains, payoff_matrix, GameSpec, StrategyProfile};
use crate::market_model::sub_seed;
use crate::EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// Measured deviation (or margin, for strict inequalities).
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    fn within(name: &str, measured: f64, tolerance: f64) -> Self {
        let status = if measured <= tolerance { Status::Pass } else { Status::Fail };
        Check { name: name.into(), status, measured: Some(measured), tolerance: Some(tolerance), detail: String::new() }
    }

    fn holds(name: &str, ok: bool, measured: Option<f64>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            measured,
            tolerance: None,
            detail: detail.into(),
        }
    }

    fn skip(name: &str, why: impl Into<String>) -> Self {
        Check { name: name.into(), status: Status::Skip, measured: None, tolerance: None, detail: why.into() }
    }
}

/// Mixed-point agreement between the closed form and the oracle.
fn profiles(list: &[StrategyProfile]) -> String {
    let names: Vec<String> = list.iter().map(|s| s.to_string()).collect();
    format!("[{}]", names.join(" "))
}

pub const ORACLE_TOL: f64 = 1e-6;

/// Runs every check that applies to `spec`. `with_welfare` adds the
/// consumer-ordering check (meaningful only for x > y).
pub fn check_spec(spec: &GameSpec, grid: u32, with_welfare: bool) -> Vec<Check> {
    let mut out = Vec::new();
    let dq = delta_quantities(spec);
    let pm = payoff_matrix(spec);
    let report = solve_equilibria(spec);
    let (x, y, p) = (spec.x(), spec.y(), spec.p());

    out.push(Check::within("delta_identity", ((dq.c + dq.d) - dq.a).abs() / dq.a.abs().max(f64::MIN_POSITIVE), 1e-9));
    out.push(Check::holds("deltas_positive", dq.c > 0.0 && dq.d > 0.0, Some(dq.c.min(dq.d)), "C > 0 and D > 0"));
    out.push(Check::holds("a_exceeds_max_cd", dq.a > dq.max_cd(), Some(dq.a - dq.max_cd()), "A > max{C,D}"));
    let cd = if x > y {
        Check::holds("c_vs_d", dq.c < dq.d, Some(dq.d - dq.c), "x > y implies C < D")
    } else if y > x {
        Check::holds("c_vs_d", dq.d < dq.c, Some(dq.c - dq.d), "y > x implies D < C")
    } else {
        Check::within("c_vs_d", (dq.c - dq.d).abs(), 1e-12)
    };
    out.push(cd);

    let accounting = StrategyProfile::ALL
        .iter()
        .map(|&s| {
            let paid = if s == StrategyProfile::NB_NB { 0.0 } else { p };
            (pm.u1(s) + pm.u2(s) - (1.0 - paid)).abs()
        })
        .fold(0.0, f64::max);
    out.push(Check::within("payoff_accounting", accounting, 1e-12));

    let g = deviation_gains(spec);
    use StrategyProfile as S;
    let diffs = [
        (pm.u1(S::BB) - pm.u1(S::NB_B), g.firm1_vs_b),
        (pm.u1(S::B_NB) - pm.u1(S::NB_NB), g.firm1_vs_nb),
        (pm.u2(S::BB) - pm.u2(S::B_NB), g.firm2_vs_b),
        (pm.u2(S::NB_B) - pm.u2(S::NB_NB), g.firm2_vs_nb),
    ];
    let dev = diffs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(Check::within("deviation_gains", dev, 1e-12));

    let drift = share_drift(spec);
    let no_unilateral = !report.pure.contains(&S::B_NB) && !report.pure.contains(&S::NB_B);
    out.push(Check::holds("no_single_buyer_equilibrium", no_unilateral, None, format!("pure = {}", profiles(&report.pure))));

    if let Regime::Boundary(_) = report.regime {
        for name in ["oracle_pure", "oracle_mixed", "indifference", "mixed_interior", "utility_ordering", "drift_forms", "drift_sign"] {
            out.push(Check::skip(name, format!("{} within {EPS:e} of a threshold", report.regime)));
        }
    } else {
        let oracle = brute_force_equilibria(&pm, grid, EPS);
        out.push(Check::holds(
            "oracle_pure",
            oracle.pure == report.pure,
            None,
            format!("closed form {}, oracle {}", profiles(&report.pure), profiles(&oracle.pure)),
        ));
        match (report.mixed, oracle.mixed.as_slice()) {
            (None, []) => out.push(Check::holds("oracle_mixed", true, None, "no mixed equilibrium")),
            (Some(m), [o]) => out.push(Check::within("oracle_mixed", (m.q1 - o.q1).abs().max((m.q2 - o.q2).abs()), ORACLE_TOL)),
            (m, o) => out.push(Check::holds(
                "oracle_mixed",
                false,
                None,
                format!("closed form {m:?}, oracle found {} point(s)", o.len()),
            )),
        }

        if let Some(m) = report.mixed {
            let (b1, _) = pm.expected(1.0, m.q2);
            let (nb1, _) = pm.expected(0.0, m.q2);
            let (_, b2) = pm.expected(m.q1, 1.0);
            let (_, nb2) = pm.expected(m.q1, 0.0);
            out.push(Check::within("indifference", (b1 - nb1).abs().max((b2 - nb2).abs()), 1e-9));

            let interior = m.q1 > 0.0 && m.q1 < 1.0 && m.q2 > 0.0 && m.q2 < 1.0;
            let ordered = x <= y || m.q1 < m.q2 + EPS;
            out.push(Check::holds(
                "mixed_interior",
                interior && ordered,
                Some(m.q2 - m.q1),
                format!("q1 = {}, q2 = {}", m.q1, m.q2),
            ));

            let ok = utility_ordering(spec)
                .map(|_| {
                    respects_order(&FIRM1_ORDER, |s| pm.u1(s), EPS) && respects_order(&FIRM2_ORDER, |s| pm.u2(s), EPS)
                })
                .unwrap_or(false);
            out.push(Check::holds("utility_ordering", ok, None, "both firms rank (NB,NB) first"));

            let closed = drift.mixed_expected.unwrap_or(f64::NAN);
            let weighted = drift.mixed_weighted.unwrap_or(f64::NAN);
            out.push(Check::within("drift_forms", (closed - weighted).abs(), 1e-9));
            let sign = if x == y {
                Check::within("drift_sign", closed.abs(), 1e-12)
            } else if x > y {
                Check::holds("drift_sign", closed <= EPS, Some(closed), "x > y: expected drift ≤ 0")
            } else {
                Check::holds("drift_sign", closed >= -EPS, Some(closed), "y > x: expected drift ≥ 0")
            };
            out.push(sign);
        } else {
            for name in ["indifference", "mixed_interior", "utility_ordering", "drift_forms", "drift_sign"] {
                out.push(Check::skip(name, format!("no mixed equilibrium in {}", report.regime)));
            }
        }
    }

    if x == y {
        out.push(Check::holds(
            "drift_symmetric",
            drift.per_profile.get(S::BB) == 0.0,
            Some(drift.per_profile.get(S::BB)),
            "x = y: (B,B) drift is exactly 0",
        ));
    }

    let w = welfare_ordering(spec);
    let lin = (w.cons.get(S::BB) - 0.5 * (w.cons.get(S::B_NB) + w.cons.get(S::NB_B))).abs();
    out.push(Check::within("welfare_coin_flip", lin, 1e-12));
    if with_welfare {
        if x > y {
            out.push(Check::holds(
                "welfare_ordering",
                w.consumer_order_holds,
                None,
                format!("observed order {}", profiles(&w.ordering)),
            ));
        } else {
            out.push(Check::skip("welfare_ordering", "needs x > y"));
        }
    }
    out
}

/// A spec drawn from `x, y ∈ [1, 10⁶]`, `n ∈ (0, 10⁶]`, `β ∈ (0, 8]` with a
/// price drawn uniformly from `[0, 1.25·A]`.
///
/// Specs whose price bands are narrower than `1e-6`, or whose price lies
/// within `1e-7` of a threshold, are redrawn: payoff differences there are
/// below what the oracle can resolve from the matrix in double precision.
pub fn random_spec(rng: &mut impl Rng) -> GameSpec {
    loop {
        let x = rng.random_range(1.0..=1e6);
        let y = rng.random_range(1.0..=1e6);
        let n = 1e6 * (1.0 - rng.random::<f64>());
        let beta = 8.0 * (1.0 - rng.random::<f64>());
        let Ok(base) = GameSpec::new(x, y, n, 0.0, beta) else { continue };
        let dq = delta_quantities(&base);
        let lo = dq.max_cd();
        if lo < 1e-6 || dq.a - lo < 1e-6 {
            continue;
        }
        let p = rng.random_range(0.0..=1.25 * dq.a);
        if (p - lo).abs() < 1e-7 || (p - dq.a).abs() < 1e-7 {
            continue;
        }
        if let Ok(s) = base.with_price(p) {
            return s;
        }
    }
}

/// Aggregated random-spec results: one check per name, failing if any
/// spec failed, reporting the worst measured value.
pub fn check_random(trials: u32, seed: u64, grid: u32) -> Vec<Check> {
    let mut merged: Vec<Check> = Vec::new();
    let mut counts: Vec<(u32, u32)> = Vec::new();
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, u64::from(t)));
        let spec = random_spec(&mut rng);
        for c in check_spec(&spec, grid, false) {
            let idx = match merged.iter().position(|m| m.name == format!("random.{}", c.name)) {
                Some(i) => i,
                None => {
                    merged.push(Check { name: format!("random.{}", c.name), status: Status::Skip, measured: None, tolerance: c.tolerance, detail: String::new() });
                    counts.push((0, 0));
                    merged.len() - 1
                }
            };
            let m = &mut merged[idx];
            match c.status {
                Status::Skip => continue,
                Status::Fail => {
                    counts[idx].1 += 1;
                    m.status = Status::Fail;
                    if m.detail.is_empty() {
                        m.detail = format!("first failure at {spec:?}: {}", c.detail);
                    }
                }
                Status::Pass if m.status == Status::Skip => m.status = Status::Pass,
                Status::Pass => {}
            }
            counts[idx].0 += 1;
            if c.tolerance.is_some() {
                if let Some(v) = c.measured {
                    m.measured = Some(m.measured.map_or(v, |w: f64| w.max(v)));
                }
            }
        }
    }
    for (m, (ran, failed)) in merged.iter_mut().zip(counts) {
        let summary = format!("{failed} of {ran} specs failed");
        m.detail = if m.detail.is_empty() { summary } else { format!("{summary}; {}", m.detail) };
    }
    merged
}
