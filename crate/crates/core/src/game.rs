//! The acquisition game: parameters, payoffs and the market-share deltas.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::market_model::{market_share_from_data, share_gap, share_log_odds};

/// Parameters of one game instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameSpec {
    x: f64,
    y: f64,
    n: f64,
    p: f64,
    beta: f64,
    r: f64,
}

impl GameSpec {
    pub const DEFAULT_R: f64 = 0.5;

    /// A game where Firm 1 holds `x` points, Firm 2 holds `y`, and a corpus
    /// of `n` points is offered at price `p`. The welfare learning rate
    /// defaults to 1/2.
    pub fn new(x: f64, y: f64, n: f64, p: f64, beta: f64) -> Result<Self> {
        Self::with_rate(x, y, n, p, beta, Self::DEFAULT_R)
    }

    pub fn with_rate(x: f64, y: f64, n: f64, p: f64, beta: f64, r: f64) -> Result<Self> {
        if !(x >= 1.0 && x.is_finite()) {
            return Err(domain(format!("x must be a finite count ≥ 1, got {x}")));
        }
        if !(y >= 1.0 && y.is_finite()) {
            return Err(domain(format!("y must be a finite count ≥ 1, got {y}")));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(domain(format!("n must be positive, got {n}")));
        }
        if !p.is_finite() {
            return Err(domain(format!("p must be finite, got {p}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(domain(format!("beta must be positive, got {beta}")));
        }
        if !(r > 0.0 && r <= 1.0) {
            return Err(domain(format!("r must lie in (0,1], got {r}")));
        }
        Ok(GameSpec { x, y, n, p, beta, r })
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Same game at another price.
    pub fn with_price(&self, p: f64) -> Result<Self> {
        Self::with_rate(self.x, self.y, self.n, p, self.beta, self.r)
    }

    /// Same game with another corpus size.
    pub fn with_corpus(&self, n: f64) -> Result<Self> {
        Self::with_rate(self.x, self.y, n, self.p, self.beta, self.r)
    }

    /// Data counts `(m1, m2)` once `winner` holds the corpus (`None`: unsold).
    pub(crate) fn data_counts(&self, winner: Option<Firm>) -> (f64, f64) {
        match winner {
            Some(Firm::One) => (self.x + self.n, self.y),
            Some(Firm::Two) => (self.x, self.y + self.n),
            None => (self.x, self.y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Firm {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    B,
    NB,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::B => "B",
            Action::NB => "NB",
        })
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One action per firm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyProfile {
    pub firm1: Action,
    pub firm2: Action,
}

impl StrategyProfile {
    pub const BB: StrategyProfile = StrategyProfile { firm1: Action::B, firm2: Action::B };
    pub const B_NB: StrategyProfile = StrategyProfile { firm1: Action::B, firm2: Action::NB };
    pub const NB_B: StrategyProfile = StrategyProfile { firm1: Action::NB, firm2: Action::B };
    pub const NB_NB: StrategyProfile = StrategyProfile { firm1: Action::NB, firm2: Action::NB };

    pub const ALL: [StrategyProfile; 4] = [Self::BB, Self::B_NB, Self::NB_B, Self::NB_NB];

    pub const fn new(firm1: Action, firm2: Action) -> Self {
        StrategyProfile { firm1, firm2 }
    }

    /// Position in [`StrategyProfile::ALL`].
    pub fn index(&self) -> usize {
        match (self.firm1, self.firm2) {
            (Action::B, Action::B) => 0,
            (Action::B, Action::NB) => 1,
            (Action::NB, Action::B) => 2,
            (Action::NB, Action::NB) => 3,
        }
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.firm1, self.firm2)
    }
}

impl FromStr for StrategyProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = inner.split(',').map(str::trim);
        let parse = |t: Option<&str>| match t {
            Some("B") => Ok(Action::B),
            Some("NB") => Ok(Action::NB),
            _ => Err(domain(format!("not a strategy profile: {s:?}"))),
        };
        let firm1 = parse(parts.next())?;
        let firm2 = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(domain(format!("not a strategy profile: {s:?}")));
        }
        Ok(StrategyProfile { firm1, firm2 })
    }
}

impl Serialize for StrategyProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A value per strategy profile, serialized as an ordered map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileMap<T>(pub [T; 4]);

impl<T: Copy> ProfileMap<T> {
    pub fn from_fn(mut f: impl FnMut(StrategyProfile) -> T) -> Self {
        ProfileMap(StrategyProfile::ALL.map(&mut f))
    }

    pub fn get(&self, s: StrategyProfile) -> T {
        self.0[s.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (StrategyProfile, T)> + '_ {
        StrategyProfile::ALL.iter().map(move |s| (*s, self.get(*s)))
    }
}

impl<T: Serialize + Copy> Serialize for ProfileMap<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(self.iter().map(|(k, v)| (k.to_string(), v)))
    }
}

/// Both firms' utilities in every strategy profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffMatrix {
    pub u1: ProfileMap<f64>,
    pub u2: ProfileMap<f64>,
}

impl PayoffMatrix {
    pub fn u1(&self, s: StrategyProfile) -> f64 {
        self.u1.get(s)
    }

    pub fn u2(&self, s: StrategyProfile) -> f64 {
        self.u2.get(s)
    }

    pub fn utility(&self, firm: Firm, s: StrategyProfile) -> f64 {
        match firm {
            Firm::One => self.u1(s),
            Firm::Two => self.u2(s),
        }
    }

    /// Expected utilities when Firm 1 buys with probability `q1` and Firm 2
    /// with probability `q2`.
    pub fn expected(&self, q1: f64, q2: f64) -> (f64, f64) {
        let w = profile_weights(q1, q2);
        let mut e = (0.0, 0.0);
        for (s, wt) in w.iter() {
            e.0 += wt * self.u1(s);
            e.1 += wt * self.u2(s);
        }
        e
    }
}

/// Outcome probabilities of independent mixing with buy probabilities
/// `q1`, `q2`.
pub fn profile_weights(q1: f64, q2: f64) -> ProfileMap<f64> {
    ProfileMap([q1 * q2, q1 * (1.0 - q2), (1.0 - q1) * q2, (1.0 - q1) * (1.0 - q2)])
}

/// Utilities of both firms in all four profiles. When both bid, a fair coin
/// decides who gets (and pays for) the corpus.
pub fn payoff_matrix(spec: &GameSpec) -> PayoffMatrix {
    let (x, y, n, p, beta) = (spec.x, spec.y, spec.n, spec.p, spec.beta);
    // Firm 1 share when Firm 1 / Firm 2 / nobody gets the corpus
    let ms1_win1 = market_share_from_data(x + n, y, beta);
    let ms1_win2 = market_share_from_data(x, y + n, beta);
    let ms1_none = market_share_from_data(x, y, beta);
    let ms2_win1 = market_share_from_data(y, x + n, beta);
    let ms2_win2 = market_share_from_data(y + n, x, beta);
    let ms2_none = market_share_from_data(y, x, beta);

    PayoffMatrix {
        u1: ProfileMap([0.5 * (ms1_win1 + ms1_win2 - p), ms1_win1 - p, ms1_win2, ms1_none]),
        u2: ProfileMap([0.5 * (ms2_win1 + ms2_win2 - p), ms2_win1, ms2_win2 - p, ms2_none]),
    }
}

/// Market-share deltas between profiles.
///
/// `a/2` is the expected share change when `(NB,B)` becomes `(B,B)` (for Firm 1);
/// `c` is Firm 1's gain from `(NB,NB)` to `(B,NB)`; `d` is Firm 2's gain from
/// `(NB,NB)` to `(NB,B)`. Always `a = c + d`, `c, d > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaQuantities {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl DeltaQuantities {
    pub fn max_cd(&self) -> f64 {
        self.c.max(self.d)
    }
}

pub fn delta_quantities(spec: &GameSpec) -> DeltaQuantities {
    let (x, y, n, beta) = (spec.x, spec.y, spec.n, spec.beta);
    let t = |m1: f64, m2: f64| share_log_odds(m1, m2, beta);
    // log-odds increments from adding the corpus, kept exact through ln_1p
    let gain_x = beta * (n / x).ln_1p();
    let gain_y = beta * (n / y).ln_1p();
    DeltaQuantities {
        a: share_gap(t(x + n, y), t(x, y + n), gain_x + gain_y),
        c: share_gap(t(x + n, y), t(x, y), gain_x),
        d: share_gap(t(y + n, x), t(y, x), gain_y),
    }
}

/// A unilateral switch from NB to B by `mover` while the opponent plays
/// `opponent`. A negative gain means the arrow points back toward NB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationEdge {
    pub mover: Firm,
    pub opponent: Action,
    pub gain: f64,
}

impl DeviationEdge {
    fn profile_with(&self, own: Action) -> StrategyProfile {
        match self.mover {
            Firm::One => StrategyProfile::new(own, self.opponent),
            Firm::Two => StrategyProfile::new(self.opponent, own),
        }
    }

    /// The profile the flow-diagram arrow points at (B on ties).
    pub fn points_to(&self) -> StrategyProfile {
        self.profile_with(if self.gain >= 0.0 { Action::B } else { Action::NB })
    }

    pub fn points_from(&self) -> StrategyProfile {
        self.profile_with(if self.gain >= 0.0 { Action::NB } else { Action::B })
    }
}

/// The four flow-diagram edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationGains {
    pub firm1_vs_b: f64,
    pub firm1_vs_nb: f64,
    pub firm2_vs_b: f64,
    pub firm2_vs_nb: f64,
}

impl DeviationGains {
    pub fn edges(&self) -> [DeviationEdge; 4] {
        [
            DeviationEdge { mover: Firm::One, opponent: Action::B, gain: self.firm1_vs_b },
            DeviationEdge { mover: Firm::One, opponent: Action::NB, gain: self.firm1_vs_nb },
            DeviationEdge { mover: Firm::Two, opponent: Action::B, gain: self.firm2_vs_b },
            DeviationEdge { mover: Firm::Two, opponent: Action::NB, gain: self.firm2_vs_nb },
        ]
    }
}

pub fn deviation_gains(spec: &GameSpec) -> DeviationGains {
    let dq = delta_quantities(spec);
    let p = spec.p;
    DeviationGains {
        firm1_vs_b: 0.5 * (dq.a - p),
        firm1_vs_nb: dq.c - p,
        firm2_vs_b: 0.5 * (dq.a - p),
        firm2_vs_nb: dq.d - p,
    }
}
