//! Learning curves, market-share functions and the consumer switching chain.
//!
//! Error curves are normalized to `err(m) = m^{-rate}`: constants cancel in
//! market shares and only rescale welfare.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zeta};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};

/// How a firm's excess error decays with its training-set size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LearningProfile {
    /// Neural network with tuned width; error bound `c1·d/m + c2/d`.
    NeuralNet { c1: f64, c2: f64 },
    /// Realizable PAC learning, error `Θ(1/m)`.
    PacRealizable,
    /// Search engine answering only previously seen queries drawn from
    /// `P(i) ∝ i^{-k}`; error is the missing mass.
    SearchMissingMass { k: f64 },
    /// Plain power law `m^{-r}`.
    PowerLaw { r: f64 },
}

impl LearningProfile {
    /// The exponent `r` in `err(m) = m^{-r}`.
    pub fn rate(&self) -> f64 {
        match *self {
            LearningProfile::NeuralNet { .. } => 0.5,
            LearningProfile::PacRealizable => 1.0,
            LearningProfile::SearchMissingMass { k } => 1.0 - 1.0 / k,
            LearningProfile::PowerLaw { r } => r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LearningProfile::NeuralNet { c1, c2 } => {
                if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
                    return Err(domain(format!("neural net constants must be positive, got c1={c1}, c2={c2}")));
                }
            }
            LearningProfile::PacRealizable => {}
            LearningProfile::SearchMissingMass { k } => {
                if !(k > 1.0 && k.is_finite()) {
                    return Err(domain(format!("missing-mass decay exponent must exceed 1, got k={k}")));
                }
            }
            LearningProfile::PowerLaw { r } => {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(domain(format!("learning rate must lie in (0,1], got r={r}")));
                }
            }
        }
        Ok(())
    }
}

/// Parameters of the data-count market share `m1^β / (m1^β + m2^β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketShareParams {
    /// Competition exponent applied to error rates.
    pub a: u32,
    /// Combined exponent `rate · a`.
    pub beta: f64,
}

impl MarketShareParams {
    pub fn from_profile(profile: &LearningProfile, a: u32) -> Result<Self> {
        profile.validate()?;
        if a == 0 {
            return Err(domain("competition exponent must be a positive integer"));
        }
        Ok(MarketShareParams { a, beta: profile.rate() * f64::from(a) })
    }
}

/// A customer who stays with a firm until it makes `a` mistakes on one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovConsumerModel {
    err1: f64,
    err2: f64,
    a: u32,
}

impl MarkovConsumerModel {
    pub fn new(err1: f64, err2: f64, a: u32) -> Result<Self> {
        check_unit_open("err1", err1)?;
        check_unit_open("err2", err2)?;
        if a == 0 {
            return Err(domain("competition exponent must be a positive integer"));
        }
        Ok(MarkovConsumerModel { err1, err2, a })
    }

    pub fn err1(&self) -> f64 {
        self.err1
    }

    pub fn err2(&self) -> f64 {
        self.err2
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    /// Daily probability that the customer leaves firm `firm` (0 or 1).
    fn switch_probability(&self, firm: usize) -> f64 {
        let err = if firm == 0 { self.err1 } else { self.err2 };
        err.powi(self.a as i32)
    }
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0,1), got {v}")))
    }
}

/// Normalized error `m^{-rate}` of a firm holding `m ≥ 1` data points.
pub fn error_rate(profile: &LearningProfile, m: f64) -> Result<f64> {
    profile.validate()?;
    if !(m >= 1.0) || !m.is_finite() {
        return Err(domain(format!("data count must be at least 1, got m={m}")));
    }
    Ok(m.powf(-profile.rate()))
}

/// Minimizer of the neural-network bound `c1·d/m + c2/d` over the width `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NnWidth {
    pub width: f64,
    pub error_bound: f64,
}

pub fn optimal_nn_width(m: f64, c1: f64, c2: f64) -> Result<NnWidth> {
    for (name, v) in [("m", m), ("c1", c1), ("c2", c2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(NnWidth {
        width: (c2 * m / c1).sqrt(),
        error_bound: 2.0 * (c1 * c2 / m).sqrt(),
    })
}

/// The neural-network error bound at width `d`.
pub fn nn_error_bound(m: f64, c1: f64, c2: f64, d: f64) -> f64 {
    c1 * d / m + c2 / d
}

/// Firm 1's error-based share `err2^a / (err1^a + err2^a)`.
///
/// `a` may be any positive real; the Markov interpretation needs an integer.
pub fn market_share_from_errors(err1: f64, err2: f64, a: f64) -> Result<f64> {
    check_unit_open("err1", err1)?;
    check_unit_open("err2", err2)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!("competition exponent must be positive, got a={a}")));
    }
    let w1 = err1.powf(a);
    let w2 = err2.powf(a);
    if w1 > f64::MIN_POSITIVE && w2 > f64::MIN_POSITIVE {
        Ok(w2 / (w1 + w2))
    } else {
        Ok(logistic(a * (err2.ln() - err1.ln())))
    }
}

/// Log-odds `β·(ln m1 − ln m2)` of Firm 1's data-count share.
pub fn share_log_odds(m1: f64, m2: f64, beta: f64) -> f64 {
    beta * (m1.ln() - m2.ln())
}

/// Firm 1's data-count share `m1^β / (m1^β + m2^β)`.
///
/// Evaluated as `1 / (1 + exp(β·(ln m2 − ln m1)))`, so large counts and
/// exponents never overflow. Callers guarantee `m1, m2 ≥ 1` and `β > 0`.
pub fn market_share_from_data(m1: f64, m2: f64, beta: f64) -> f64 {
    logistic(share_log_odds(m1, m2, beta))
}

pub(crate) fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln cosh(u)` without overflow.
fn ln_cosh(u: f64) -> f64 {
    let u = u.abs();
    u + (-2.0 * u).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln sinh(u)` for `u > 0`.
fn ln_sinh(u: f64) -> f64 {
    if u < 1.0 {
        u.sinh().ln()
    } else {
        u + (-(-2.0 * u).exp()).ln_1p() - std::f64::consts::LN_2
    }
}

/// `σ(t_hi) − σ(t_lo)` where `gap = t_hi − t_lo ≥ 0` is supplied separately
/// so that it keeps full relative precision.
///
/// Uses `σ(t1) − σ(t2) = sinh(δ/2) / (2·cosh(t1/2)·cosh(t2/2))` in log space;
/// the direct difference of two shares near 0 or 1 cancels to nothing.
pub(crate) fn share_gap(t_hi: f64, t_lo: f64, gap: f64) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    let ln = ln_sinh(0.5 * gap) - std::f64::consts::LN_2 - ln_cosh(0.5 * t_hi) - ln_cosh(0.5 * t_lo);
    ln.exp()
}

/// Stationary visit frequencies `(μ1, μ2)` of the switching chain.
///
/// Solves the two-state balance equations with daily switch probabilities
/// `err_i^a`: `μ1·err1^a = μ2·err2^a`, `μ1 + μ2 = 1`.
pub fn stationary_distribution(model: &MarkovConsumerModel) -> (f64, f64) {
    let s1 = model.switch_probability(0);
    let s2 = model.switch_probability(1);
    if s1 > f64::MIN_POSITIVE && s2 > f64::MIN_POSITIVE {
        (s2 / (s1 + s2), s1 / (s1 + s2))
    } else {
        let t = f64::from(model.a) * (model.err2.ln() - model.err1.ln());
        (logistic(t), logistic(-t))
    }
}

/// Runs the switching chain for `steps` days and returns the fraction of days
/// spent with each firm.
///
/// The first firm is picked uniformly at random. Each day the customer sends
/// `a` queries to the current firm and switches for the next day if every one
/// of them is answered wrongly.
pub fn simulate_consumer(model: &MarkovConsumerModel, steps: u64, seed: u64) -> (f64, f64) {
    assert!(steps >= 1, "simulate_consumer needs at least one step");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errs = [model.err1, model.err2];
    let mut firm = usize::from(rng.random::<bool>());
    let mut visits = [0u64; 2];
    for _ in 0..steps {
        visits[firm] += 1;
        let err = errs[firm];
        if (0..model.a).all(|_| rng.random::<f64>() < err) {
            firm = 1 - firm;
        }
    }
    let total = steps as f64;
    (visits[0] as f64 / total, visits[1] as f64 / total)
}

/// Riemann zeta `ζ(k) = Σ_{i≥1} i^{-k}` for `k > 1`.
///
/// Sums the first 1000 terms and adds the Euler–Maclaurin tail through the
/// `B2` term; the neglected remainder is below `k(k+1)(k+2)/720 · 1000^{-k-3}`,
/// i.e. under 1e-12 for every `k > 1`.
pub fn zeta(k: f64) -> f64 {
    const N: u32 = 1000;
    let n = f64::from(N);
    let head: f64 = (1..=N).rev().map(|i| f64::from(i).powf(-k)).sum();
    let tail = n.powf(1.0 - k) / (k - 1.0) - 0.5 * n.powf(-k) + k / 12.0 * n.powf(-k - 1.0);
    head + tail
}

/// Derives an independent sub-seed for trial `index` of a seeded run.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte Carlo estimate of the expected missing mass after `m` draws from
/// `P(i) = i^{-k} / ζ(k)`, `i ≥ 1`, averaged over `trials` sample sets.
pub fn missing_mass_estimate(k: f64, m: u64, trials: u32, seed: u64) -> Result<f64> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(domain(format!("decay exponent must exceed 1, got k={k}")));
    }
    if m == 0 || trials == 0 {
        return Err(domain("m and trials must be positive"));
    }
    let dist = Zeta::new(k).map_err(|e| domain(e.to_string()))?;
    let norm = zeta(k);
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, u64::from(t)));
            let mut seen = HashSet::new();
            for _ in 0..m {
                let x: f64 = dist.sample(&mut rng);
                seen.insert(x as u64);
            }
            let mut ids: Vec<u64> = seen.into_iter().collect();
            // smallest masses first
            ids.sort_unstable_by(|a, b| b.cmp(a));
            let seen_mass: f64 = ids.iter().map(|&i| (i as f64).powf(-k)).sum();
            ((norm - seen_mass) / norm).max(0.0)
        })
        .collect();
    Ok(per_trial.iter().sum::<f64>() / f64::from(trials))
}

/// Least-squares slope of `ln(value)` against `ln(m)`; `None` with fewer than
/// two distinct points.
pub fn fit_loglog_slope(ms: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ms
        .iter()
        .zip(values)
        .filter(|(m, v)| **m > 0.0 && **v > 0.0)
        .map(|(m, v)| (m.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn error_rate_examples() {
        assert_eq!(error_rate(&LearningProfile::PowerLaw { r: 1.0 }, 1.0).unwrap(), 1.0);
        assert!(close(error_rate(&LearningProfile::PowerLaw { r: 0.5 }, 100.0).unwrap(), 0.1, 1e-15));
        assert!(close(error_rate(&LearningProfile::PacRealizable, 1000.0).unwrap(), 0.001, 1e-15));
    }

    #[test]
    fn error_rate_rejects_small_m() {
        let p = LearningProfile::PowerLaw { r: 0.5 };
        assert!(matches!(error_rate(&p, 0.5), Err(crate::Error::Domain(_))));
        assert!(error_rate(&p, f64::NAN).is_err());
        assert!(error_rate(&LearningProfile::PowerLaw { r: 1.5 }, 2.0).is_err());
    }

    #[test]
    fn profile_rates() {
        assert_eq!(LearningProfile::NeuralNet { c1: 1.0, c2: 2.0 }.rate(), 0.5);
        assert_eq!(LearningProfile::PacRealizable.rate(), 1.0);
        assert!(close(LearningProfile::SearchMissingMass { k: 3.0 }.rate(), 2.0 / 3.0, 1e-15));
        assert!(LearningProfile::SearchMissingMass { k: 1.0 }.validate().is_err());
        let params = MarketShareParams::from_profile(&LearningProfile::NeuralNet { c1: 1.0, c2: 1.0 }, 3).unwrap();
        assert_eq!(params.beta, 1.5);
    }

    #[test]
    fn nn_width_examples() {
        let w = optimal_nn_width(10_000.0, 1.0, 1.0).unwrap();
        assert!(close(w.width, 100.0, 1e-12) && close(w.error_bound, 0.02, 1e-15));
        let w = optimal_nn_width(1.0, 1.0, 1.0).unwrap();
        assert!(close(w.width, 1.0, 1e-15) && close(w.error_bound, 2.0, 1e-15));
        let w = optimal_nn_width(400.0, 4.0, 1.0).unwrap();
        assert!(close(w.width, 10.0, 1e-12) && close(w.error_bound, 0.2, 1e-15));
        assert!(optimal_nn_width(0.0, 1.0, 1.0).is_err());
        assert!(optimal_nn_width(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn share_from_errors_examples() {
        assert_eq!(market_share_from_errors(0.05, 0.05, 3.0).unwrap(), 0.5);
        assert!(close(market_share_from_errors(0.0001, 0.01, 1.0).unwrap(), 0.01 / 0.0101, 1e-12));
        assert!(market_share_from_errors(0.0001, 0.01, 1.0).unwrap() > 0.99);
        assert!(close(market_share_from_errors(0.1, 0.2, 2.0).unwrap(), 0.8, 1e-12));
        assert!(market_share_from_errors(0.0, 0.2, 1.0).is_err());
        assert!(market_share_from_errors(0.1, 1.0, 1.0).is_err());
        // underflowing powers fall back to the log form
        let s = market_share_from_errors(1e-3, 2e-3, 400.0).unwrap();
        assert!(s > 0.999_999 && s <= 1.0);
    }

    #[test]
    fn share_from_data_examples() {
        assert_eq!(market_share_from_data(500.0, 500.0, 7.0), 0.5);
        assert!(close(market_share_from_data(100.0, 50.0, 1.0), 2.0 / 3.0, 1e-15));
        assert!(close(market_share_from_data(100.0, 50.0, 2.0), 0.8, 1e-15));
        let s = market_share_from_data(1e12, 1.0, 50.0);
        assert!(s.is_finite() && s <= 1.0);
    }

    #[test]
    fn share_gap_matches_direct_difference() {
        for &(t1, t2) in &[(0.3, -0.2), (2.0, 1.5), (-4.0, -6.0), (0.001, 0.0)] {
            let direct = logistic(t1) - logistic(t2);
            assert!(close(share_gap(t1, t2, t1 - t2), direct, 1e-15), "{t1} {t2}");
        }
        // far tail: direct subtraction is 0, the gap is not
        let g = share_gap(100.0, 99.0, 1.0);
        assert!(g > 0.0);
        assert!(close(g / ((-99.0f64).exp() - (-100.0f64).exp()), 1.0, 1e-12));
    }

    #[test]
    fn stationary_examples() {
        let m = MarkovConsumerModel::new(0.3, 0.3, 1).unwrap();
        assert_eq!(stationary_distribution(&m), (0.5, 0.5));
        let (a, b) = stationary_distribution(&MarkovConsumerModel::new(0.1, 0.2, 1).unwrap());
        assert!(close(a, 2.0 / 3.0, 1e-15) && close(b, 1.0 / 3.0, 1e-15));
        let (a, b) = stationary_distribution(&MarkovConsumerModel::new(0.1, 0.2, 2).unwrap());
        assert!(close(a, 0.8, 1e-15) && close(b, 0.2, 1e-15));
        assert!(MarkovConsumerModel::new(1.0, 0.2, 1).is_err());
        assert!(MarkovConsumerModel::new(0.1, 0.2, 0).is_err());
    }

    /// Balance equations solved by power iteration on the 2×2 transition
    /// matrix, independent of the closed form.
    fn stationary_by_iteration(e1: f64, e2: f64, a: i32) -> f64 {
        let (s1, s2) = (e1.powi(a), e2.powi(a));
        let mut mu = 0.5;
        for _ in 0..100_000 {
            mu = mu * (1.0 - s1) + (1.0 - mu) * s2;
        }
        mu
    }

    #[test]
    fn stationary_solves_balance_equations() {
        for &(e1, e2, a) in &[(0.1, 0.2, 1), (0.1, 0.2, 2), (0.3, 0.45, 3), (0.05, 0.5, 2)] {
            let (mu1, _) = stationary_distribution(&MarkovConsumerModel::new(e1, e2, a).unwrap());
            assert!(close(mu1, stationary_by_iteration(e1, e2, a as i32), 1e-9), "{e1} {e2} {a}");
        }
    }

    #[test]
    fn simulation_is_seeded() {
        let m = MarkovConsumerModel::new(0.1, 0.2, 1).unwrap();
        assert_eq!(simulate_consumer(&m, 10_000, 7), simulate_consumer(&m, 10_000, 7));
        let (s1, s2) = simulate_consumer(&m, 1, 3);
        assert_eq!(s1 + s2, 1.0);
    }

    #[test]
    fn simulation_examples() {
        let cases = [(0.5, 0.5, 1, 0.5), (0.1, 0.2, 1, 2.0 / 3.0), (0.1, 0.2, 2, 0.8)];
        for (e1, e2, a, want) in cases {
            let m = MarkovConsumerModel::new(e1, e2, a).unwrap();
            let (s1, _) = simulate_consumer(&m, 1_000_000, 11);
            assert!(close(s1, want, 0.01), "{e1} {e2} {a}: {s1}");
        }
    }

    #[test]
    fn zeta_known_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(close(zeta(2.0), pi2 / 6.0, 1e-12));
        assert!(close(zeta(4.0), pi2 * pi2 / 90.0, 1e-12));
        assert!(close(zeta(3.0), 1.202_056_903_159_594_3, 1e-12));
        // near the pole: ζ(1+h) ≈ 1/h + γ
        assert!(close(zeta(1.001), 1000.0 + 0.577_215_664_9, 1e-3));
    }

    #[test]
    fn missing_mass_single_draw() {
        // one draw: E[missing] = 1 − Σ P(i)², truncated sum oracle
        let k = 2.0;
        let norm: f64 = (1..=2_000_000u64).map(|i| (i as f64).powf(-k)).sum::<f64>() + 1.0 / 2_000_000.0;
        let sq: f64 = (1..=200_000u64).map(|i| ((i as f64).powf(-k) / norm).powi(2)).sum();
        let want = 1.0 - sq;
        let got = missing_mass_estimate(k, 1, 200_000, 5).unwrap();
        // per-trial sd ≤ 0.5
        assert!(close(got, want, 4.0 * 0.5 / (200_000f64).sqrt()), "{got} vs {want}");
        assert!(close(want, 0.6, 1e-5));
    }

    #[test]
    fn missing_mass_rejects_bad_k() {
        assert!(missing_mass_estimate(1.0, 10, 10, 0).is_err());
        assert!(missing_mass_estimate(0.5, 10, 10, 0).is_err());
    }

    #[test]
    fn missing_mass_is_deterministic() {
        let a = missing_mass_estimate(2.0, 500, 16, 99).unwrap();
        let b = missing_mass_estimate(2.0, 500, 16, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slope_fit() {
        let ms = [1.0, 10.0, 100.0];
        let vs: Vec<f64> = ms.iter().map(|m: &f64| 3.0 * m.powf(-0.5)).collect();
        assert!(close(fit_loglog_slope(&ms, &vs).unwrap(), -0.5, 1e-12));
        assert_eq!(fit_loglog_slope(&[10.0], &[0.1]), None);
    }
}
