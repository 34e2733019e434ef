//! Price regimes, closed-form equilibria, and a brute-force oracle that only
//! looks at the payoff matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::game::{delta_quantities, DeltaQuantities, GameSpec, PayoffMatrix, StrategyProfile};
use crate::EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// `p = max{C, D}`
    AtMaxCD,
    /// `p = A`
    AtA,
}

/// Which equilibria exist at the game's price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `p < max{C,D}`: (B,B) only.
    BothBuyUnique,
    /// `max{C,D} < p < A`: (B,B), (NB,NB) and one interior mixed point.
    TwoPureAndMixed,
    /// `p > A`: (NB,NB) only.
    NeitherBuyUnique,
    /// Within `EPS` of a threshold.
    Boundary(BoundaryKind),
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::BothBuyUnique => f.write_str("BothBuyUnique"),
            Regime::TwoPureAndMixed => f.write_str("TwoPureAndMixed"),
            Regime::NeitherBuyUnique => f.write_str("NeitherBuyUnique"),
            Regime::Boundary(BoundaryKind::AtMaxCD) => f.write_str("Boundary(AtMaxCD)"),
            Regime::Boundary(BoundaryKind::AtA) => f.write_str("Boundary(AtA)"),
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "BothBuyUnique" => Regime::BothBuyUnique,
            "TwoPureAndMixed" => Regime::TwoPureAndMixed,
            "NeitherBuyUnique" => Regime::NeitherBuyUnique,
            "Boundary(AtMaxCD)" => Regime::Boundary(BoundaryKind::AtMaxCD),
            "Boundary(AtA)" => Regime::Boundary(BoundaryKind::AtA),
            _ => return Err(domain(format!("unknown regime {s:?}"))),
        })
    }
}

impl Serialize for Regime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Buy probabilities of the two firms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedEquilibrium {
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub regime: Regime,
    pub pure: Vec<StrategyProfile>,
    pub mixed: Option<MixedEquilibrium>,
    /// Set at a regime boundary, where `pure` lists the answers of both
    /// neighbouring regimes and some of them hold only weakly.
    pub degenerate: bool,
}

/// Classifies price `p` against the thresholds `max{C,D}` and `A`.
pub fn regime_for(p: f64, dq: &DeltaQuantities) -> Regime {
    let lo = dq.max_cd();
    if (p - lo).abs() <= EPS {
        Regime::Boundary(BoundaryKind::AtMaxCD)
    } else if (p - dq.a).abs() <= EPS {
        Regime::Boundary(BoundaryKind::AtA)
    } else if p < lo {
        Regime::BothBuyUnique
    } else if p > dq.a {
        Regime::NeitherBuyUnique
    } else {
        Regime::TwoPureAndMixed
    }
}

pub fn classify_regime(spec: &GameSpec) -> Regime {
    regime_for(spec.p(), &delta_quantities(spec))
}

/// Interior mixed point `q1 = 2(p−D)/(A+p−2D)`, `q2 = 2(p−C)/(A+p−2C)`.
///
/// Only meaningful for `max{C,D} < p < A`.
pub fn mixed_point(p: f64, dq: &DeltaQuantities) -> MixedEquilibrium {
    MixedEquilibrium {
        q1: 2.0 * (p - dq.d) / (dq.a + p - 2.0 * dq.d),
        q2: 2.0 * (p - dq.c) / (dq.a + p - 2.0 * dq.c),
    }
}

pub fn solve_equilibria(spec: &GameSpec) -> EquilibriumReport {
    let dq = delta_quantities(spec);
    let regime = regime_for(spec.p(), &dq);
    let (pure, mixed, degenerate) = match regime {
        Regime::BothBuyUnique => (vec![StrategyProfile::BB], None, false),
        Regime::NeitherBuyUnique => (vec![StrategyProfile::NB_NB], None, false),
        Regime::TwoPureAndMixed => (
            vec![StrategyProfile::BB, StrategyProfile::NB_NB],
            Some(mixed_point(spec.p(), &dq)),
            false,
        ),
        // both neighbours: (B,B) and (NB,NB) are (weak) equilibria at either
        // threshold, and the mixed point sits on the edge of the unit square
        Regime::Boundary(_) => (vec![StrategyProfile::BB, StrategyProfile::NB_NB], None, true),
    };
    EquilibriumReport { regime, pure, mixed, degenerate }
}

/// Result of the exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub pure: Vec<StrategyProfile>,
    /// Refined interior equilibria, one per cluster of lattice candidates.
    pub mixed: Vec<MixedEquilibrium>,
    /// Number of lattice points that passed the ε-best-response screen.
    pub lattice_candidates: usize,
}

fn flip(a: crate::game::Action) -> crate::game::Action {
    use crate::game::Action;
    match a {
        Action::B => Action::NB,
        Action::NB => Action::B,
    }
}

/// Finds equilibria of an arbitrary 2×2 game given only its payoff matrix.
///
/// Pure equilibria come from checking every unilateral deviation in the four
/// cells. Mixed candidates come from screening a `grid × grid` lattice of
/// interior buy probabilities for points where both firms are within one
/// lattice step (plus `eps`) of indifference, then solving each firm's
/// indifference equation exactly near every candidate. Refined points closer
/// than `1e-9` are merged.
pub fn brute_force_equilibria(matrix: &PayoffMatrix, grid: u32, eps: f64) -> OracleReport {
    use StrategyProfile as S;
    let pure = S::ALL
        .iter()
        .copied()
        .filter(|s| {
            let dev1 = S::new(flip(s.firm1), s.firm2);
            let dev2 = S::new(s.firm1, flip(s.firm2));
            matrix.u1(dev1) <= matrix.u1(*s) + eps && matrix.u2(dev2) <= matrix.u2(*s) + eps
        })
        .collect();

    // Firm 1's gain from B over NB is affine in Firm 2's buy probability q2,
    // and symmetrically for Firm 2.
    let f1_vs_b = matrix.u1(S::BB) - matrix.u1(S::NB_B);
    let f1_vs_nb = matrix.u1(S::B_NB) - matrix.u1(S::NB_NB);
    let f2_vs_b = matrix.u2(S::BB) - matrix.u2(S::B_NB);
    let f2_vs_nb = matrix.u2(S::NB_B) - matrix.u2(S::NB_NB);
    let gain1 = |q2: f64| q2 * f1_vs_b + (1.0 - q2) * f1_vs_nb;
    let gain2 = |q1: f64| q1 * f2_vs_b + (1.0 - q1) * f2_vs_nb;

    let step = 1.0 / f64::from(grid);
    let tol1 = (f1_vs_b - f1_vs_nb).abs() * step + eps;
    let tol2 = (f2_vs_b - f2_vs_nb).abs() * step + eps;
    let lattice: Vec<f64> = (1..grid).map(|i| f64::from(i) * step).collect();

    // A lattice point (q1, q2) is ε-stable iff Firm 1 is near-indifferent at
    // q2 and Firm 2 at q1, so the screen factorizes over the two axes.
    let q2_ok: Vec<f64> = lattice.iter().copied().filter(|&q2| gain1(q2).abs() <= tol1).collect();
    let q1_ok: Vec<f64> = lattice.iter().copied().filter(|&q1| gain2(q1).abs() <= tol2).collect();

    let root = |at_zero: f64, at_one: f64| -> Option<f64> {
        let slope = at_one - at_zero;
        (slope != 0.0).then(|| -at_zero / slope)
    };
    let exact_q2 = root(f1_vs_nb, f1_vs_b);
    let exact_q1 = root(f2_vs_nb, f2_vs_b);

    let mut mixed: Vec<MixedEquilibrium> = Vec::new();
    for &q1 in &q1_ok {
        for &q2 in &q2_ok {
            let (Some(r1), Some(r2)) = (exact_q1, exact_q2) else { continue };
            let near = (r1 - q1).abs() <= 2.0 * step && (r2 - q2).abs() <= 2.0 * step;
            let interior = r1 > 0.0 && r1 < 1.0 && r2 > 0.0 && r2 < 1.0;
            if near && interior && !mixed.iter().any(|m| (m.q1 - r1).abs() <= 1e-9 && (m.q2 - r2).abs() <= 1e-9) {
                mixed.push(MixedEquilibrium { q1: r1, q2: r2 });
            }
        }
    }

    OracleReport { pure, mixed, lattice_candidates: q1_ok.len() * q2_ok.len() }
}
