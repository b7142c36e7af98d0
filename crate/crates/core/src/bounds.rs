//! Closed-form quantities behind the sample-complexity guarantee.
//!
//! All logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::{alphabet, Symbol};

/// Distinct observation values for sample cap `m_bar`, with the sorted list.
pub fn support_size(m_bar: u32) -> (usize, Vec<Symbol>) {
    let symbols = alphabet(m_bar);
    (symbols.len(), symbols)
}

/// Closed-form bound `M(M+1)/2 + 2` on the observation alphabet.
pub fn support_bound(m_bar: u32) -> u64 {
    let m = u64::from(m_bar);
    m * (m + 1) / 2 + 2
}

/// Largest conditioning-set size the greedy needs:
/// `floor(2 log2(M(M+1)/2 + 2) / epsilon' + 1)`.
pub fn pmax_bound(epsilon_prime: f64, m_bar: u32) -> usize {
    assert!(epsilon_prime > 0.0, "epsilon' must be positive");
    let raw = 2.0 * (support_bound(m_bar) as f64).log2() / epsilon_prime + 1.0;
    // `as` saturates, so a vanishing epsilon' maps to usize::MAX
    raw.floor() as usize
}

/// `|xi| = |chi|^(2 + pmax)`; `None` once the value exceeds `2^62`.
pub fn xi_size(m_bar: u32, pmax: usize) -> Option<u64> {
    const LIMIT: u64 = 1 << 62;
    let chi = support_size(m_bar).0 as u64;
    let exp = u32::try_from(pmax.checked_add(2)?).ok()?;
    chi.checked_pow(exp).filter(|&x| x <= LIMIT)
}

/// Effective chain length after worst-case collation:
/// `floor((T + d^2 - 1) / (d + 1))`.
pub fn t_min(t: u64, d: u64) -> u64 {
    (t + d * d - 1) / (d + 1)
}

/// `2 (mu_bar + L) rho` and whether it is below one.
pub fn mixing_condition(mu_bar: f64, lipschitz: f64, rho: f64) -> (f64, bool) {
    let value = 2.0 * (mu_bar + lipschitz) * rho;
    (value, value < 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m_bar: u32,
    pub v_size: u64,
    /// Failure probability.
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub c: f64,
    pub c1: f64,
    pub alpha_exp: f64,
    pub beta1: f64,
    pub d: u64,
    pub mu_bar: f64,
    pub lipschitz: f64,
    pub rho: f64,
}

impl BoundInputs {
    fn check(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("epsilon_prime", self.epsilon_prime),
            ("delta", self.delta),
            ("delta_prime", self.delta_prime),
            ("c", self.c),
            ("c1", self.c1),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::param(name, format!("{x} must be positive")));
            }
        }
        if self.gamma >= 1.0 {
            return Err(Error::param("gamma", format!("{} not in (0, 1)", self.gamma)));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            return Err(Error::param("beta1", format!("{} not in (0, 1)", self.beta1)));
        }
        if !(self.alpha_exp < 1.0) {
            return Err(Error::param("alpha_exp", format!("{} must be < 1", self.alpha_exp)));
        }
        if self.d == 0 || self.v_size == 0 {
            return Err(Error::param("d", "reset depth and |V| must be positive"));
        }
        for (name, x) in [("mu_bar", self.mu_bar), ("lipschitz", self.lipschitz), ("rho", self.rho)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::param(name, format!("{x} must be nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideCondition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeReport {
    pub chi: usize,
    pub pmax: usize,
    pub xi: f64,
    /// `log2((c + 2 |V|^(Pmax+1) |xi|) / gamma)`.
    pub log_term: f64,
    pub mixing_value: f64,
    pub mixing_satisfied: bool,
    pub term_reset: f64,
    pub term_concentration: f64,
    /// `ceil(max(term_reset, term_concentration))`, absent when the mixing
    /// condition fails.
    pub t_raw: Option<u64>,
    /// Smallest `T >= t_raw` at which every side condition holds.
    pub t_required: Option<u64>,
    /// Side conditions evaluated at `t_required` (empty when not applicable).
    pub side_conditions: Vec<SideCondition>,
}

/// `log2((c + 2 |V|^(Pmax+1) |xi|) / gamma)`.
pub fn union_log_term(c: f64, v_size: u64, pmax: usize, xi: f64, gamma: f64) -> f64 {
    let vp = (v_size as f64).powf(pmax as f64 + 1.0);
    ((c + 2.0 * vp * xi) / gamma).log2()
}

/// Reset-count branch: `log_term * 12 delta' beta1 / c1^2`.
pub fn reset_term(log_term: f64, delta_prime: f64, beta1: f64, c1: f64) -> f64 {
    log_term * 12.0 * delta_prime * beta1 / (c1 * c1)
}

/// Markov-concentration branch, grouped as printed:
///
/// ```text
/// (d^2 - d + 2) + (1 - r) delta^2 / (2 (1 + r) |xi|^2 (d+1)^-1) * log_term,   r = 2 (mu_bar + L) rho
/// ```
pub fn concentration_term(d: u64, mixing: f64, delta: f64, xi: f64, log_term: f64) -> f64 {
    let d = d as f64;
    let denominator = 2.0 * (1.0 + mixing) * xi * xi * (d + 1.0).recip();
    (d * d - d + 2.0) + (1.0 - mixing) * delta * delta / denominator * log_term
}

fn schedule_margin(b: &BoundInputs, t: u64) -> f64 {
    b.beta1 * b.delta_prime - 4.0 * ((t - 1) as f64).powf(b.alpha_exp - 1.0)
}

fn schedule_tail(b: &BoundInputs, t: u64) -> f64 {
    ((t - 1) as f64).powf(b.alpha_exp) / (b.beta1 * (t - b.d - 1) as f64)
}

fn side_conditions_hold(b: &BoundInputs, t: u64) -> bool {
    t > b.d + 1 && schedule_margin(b, t) > b.c1 && schedule_tail(b, t) < 1.0
}

fn evaluate_side_conditions(b: &BoundInputs, xi: f64, t: u64) -> Vec<SideCondition> {
    let lhs_delta = b.delta * (xi / b.delta).log2();
    let lhs_delta_p = b.delta_prime * (xi / b.delta_prime).log2();
    let (mix, _) = mixing_condition(b.mu_bar, b.lipschitz, b.rho);
    let mut out = vec![
        SideCondition {
            name: "delta log2(|xi|/delta) <= epsilon/4".into(),
            lhs: lhs_delta,
            rhs: b.epsilon / 4.0,
            holds: lhs_delta <= b.epsilon / 4.0,
        },
        SideCondition {
            name: "delta' log2(|xi|/delta') <= epsilon'/4".into(),
            lhs: lhs_delta_p,
            rhs: b.epsilon_prime / 4.0,
            holds: lhs_delta_p <= b.epsilon_prime / 4.0,
        },
        SideCondition {
            name: "2 (mu_bar + L) rho < 1".into(),
            lhs: mix,
            rhs: 1.0,
            holds: mix < 1.0,
        },
        SideCondition {
            name: "T > d + 1".into(),
            lhs: t as f64,
            rhs: (b.d + 1) as f64,
            holds: t > b.d + 1,
        },
    ];
    if t > b.d + 1 {
        let margin = schedule_margin(b, t);
        let tail = schedule_tail(b, t);
        out.push(SideCondition {
            name: "beta1 delta' - 4 (T-1)^(alpha-1) > c1".into(),
            lhs: margin,
            rhs: b.c1,
            holds: margin > b.c1,
        });
        out.push(SideCondition {
            name: "1 - p = (T-1)^alpha / (beta1 (T-d-1)) < 1".into(),
            lhs: tail,
            rhs: 1.0,
            holds: tail < 1.0,
        });
    }
    out
}

/// Smallest `T >= lower` satisfying the schedule side conditions. Both are
/// monotone in `T` past their crossing point, so an exponential bracket
/// followed by bisection finds it.
fn first_feasible_t(b: &BoundInputs, lower: u64) -> Option<u64> {
    let mut lo = lower.max(b.d + 2);
    if side_conditions_hold(b, lo) {
        return Some(lo);
    }
    let mut hi = lo;
    loop {
        hi = hi.checked_mul(2)?;
        if side_conditions_hold(b, hi) {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if side_conditions_hold(b, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Evaluate both branches of the sample-size requirement.
///
/// An unsatisfiable accuracy pairing (`delta` against `epsilon`, or the
/// `beta1 delta' > c1` margin) is an error; a failed mixing condition is a
/// report with `t_required = None`.
pub fn theorem1_sample_size(b: &BoundInputs) -> Result<SampleSizeReport> {
    b.check()?;
    let chi = support_size(b.m_bar).0;
    let pmax = pmax_bound(b.epsilon_prime, b.m_bar);
    let xi = (chi as f64).powf(pmax as f64 + 2.0);
    if !xi.is_finite() {
        return Err(Error::Constraint(format!(
            "|xi| = {chi}^{} overflows; epsilon' = {} is too small",
            pmax + 2,
            b.epsilon_prime
        )));
    }

    let lhs = b.delta * (xi / b.delta).log2();
    if lhs > b.epsilon / 4.0 {
        return Err(Error::Constraint(format!(
            "delta log2(|xi|/delta) = {lhs} exceeds epsilon/4 = {}",
            b.epsilon / 4.0
        )));
    }
    let lhs = b.delta_prime * (xi / b.delta_prime).log2();
    if lhs > b.epsilon_prime / 4.0 {
        return Err(Error::Constraint(format!(
            "delta' log2(|xi|/delta') = {lhs} exceeds epsilon'/4 = {}",
            b.epsilon_prime / 4.0
        )));
    }

    let log_term = union_log_term(b.c, b.v_size, pmax, xi, b.gamma);
    let (mixing_value, mixing_satisfied) = mixing_condition(b.mu_bar, b.lipschitz, b.rho);
    let term_reset = reset_term(log_term, b.delta_prime, b.beta1, b.c1);
    let term_concentration = concentration_term(b.d, mixing_value, b.delta, xi, log_term);

    let mut report = SampleSizeReport {
        chi,
        pmax,
        xi,
        log_term,
        mixing_value,
        mixing_satisfied,
        term_reset,
        term_concentration,
        t_raw: None,
        t_required: None,
        side_conditions: Vec::new(),
    };
    if !mixing_satisfied {
        return Ok(report);
    }

    if b.beta1 * b.delta_prime <= b.c1 {
        return Err(Error::Constraint(format!(
            "beta1 delta' - 4 (T-1)^(alpha-1) > c1 has no solution: beta1 delta' = {} <= c1 = {}",
            b.beta1 * b.delta_prime,
            b.c1
        )));
    }
    let raw = term_reset.max(term_concentration).ceil().max(1.0);
    if raw >= u64::MAX as f64 {
        return Err(Error::Constraint(format!("required T = {raw} does not fit in 64 bits")));
    }
    let t_raw = raw as u64;
    let t_required = first_feasible_t(b, t_raw).ok_or_else(|| {
        Error::Constraint("schedule side conditions fail for every representable T".into())
    })?;
    report.t_raw = Some(t_raw);
    report.t_required = Some(t_required);
    report.side_conditions = evaluate_side_conditions(b, xi, t_required);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn inputs() -> BoundInputs {
        BoundInputs {
            m_bar: 1,
            v_size: 10,
            gamma: 0.1,
            epsilon: 0.2,
            epsilon_prime: 0.2,
            delta: 0.001,
            delta_prime: 0.001,
            c: 1.0,
            c1: 0.0005,
            alpha_exp: 0.5,
            beta1: 0.75,
            d: 5,
            mu_bar: 0.1,
            lipschitz: 0.1,
            rho: 0.5,
        }
    }

    #[test]
    fn support_sizes() {
        assert_eq!(support_size(1).0, 3);
        assert_eq!(support_size(2).0, 5);
        assert_eq!(support_size(0).0, 2);
        assert_eq!(support_bound(1), 3);
        for m in 0..=20 {
            assert!(support_size(m).0 as u64 <= support_bound(m));
        }
    }

    #[test]
    fn pmax_values() {
        assert_eq!(pmax_bound(2.0, 1), 2);
        assert_eq!(pmax_bound(1.0, 1), 4);
        assert_eq!(pmax_bound(1e12, 1), 1);
        assert_eq!(pmax_bound(1e-300, 1), usize::MAX);
    }

    #[test]
    fn xi_values() {
        assert_eq!(xi_size(1, 2), Some(81));
        assert_eq!(xi_size(1, 0), Some(9));
        assert_eq!(xi_size(0, 1), Some(8));
        assert_eq!(xi_size(1, 60), None);
        assert_eq!(xi_size(0, 60), Some(1 << 62));
        assert_eq!(xi_size(0, 61), None);
    }

    #[test]
    fn t_min_values() {
        assert_eq!(t_min(9, 2), 4);
        assert_eq!(t_min(13, 2), 5);
        for t in 2..200 {
            assert_eq!(t_min(t, 1), t / 2);
            for d in 1..t {
                assert!(t_min(t, d) <= t);
            }
        }
    }

    #[test]
    fn mixing_values() {
        let (v, ok) = mixing_condition(0.4, 0.4, 0.8);
        assert_abs_diff_eq!(v, 1.28, epsilon = 1e-12);
        assert!(!ok);
        assert_eq!(mixing_condition(0.0, 0.0, 0.9), (0.0, true));
        let (v, ok) = mixing_condition(0.1, 0.1, 0.5);
        assert_abs_diff_eq!(v, 0.2, epsilon = 1e-15);
        assert!(ok);
    }

    #[test]
    fn violated_mixing_is_reported() {
        let b = BoundInputs {
            mu_bar: 0.4,
            lipschitz: 0.4,
            rho: 0.8,
            c1: 0.01,
            ..inputs()
        };
        let r = theorem1_sample_size(&b).unwrap();
        assert!(!r.mixing_satisfied);
        assert_abs_diff_eq!(r.mixing_value, 1.28, epsilon = 1e-12);
        assert_eq!(r.t_required, None);
        assert!(r.term_reset > 0.0);
    }

    #[test]
    fn report_is_self_consistent() {
        let r = theorem1_sample_size(&inputs()).unwrap();
        let t = r.t_required.unwrap();
        assert!(t as f64 >= r.term_reset && t as f64 >= r.term_concentration);
        assert!(r.side_conditions.iter().all(|c| c.holds), "{:#?}", r.side_conditions);
        assert_eq!(r.pmax, 16);
        assert_eq!(r.chi, 3);
    }

    #[test]
    fn gamma_monotone() {
        let mut prev = u64::MAX;
        for g in [0.01, 0.1, 0.5, 0.9, 0.999999] {
            let r = theorem1_sample_size(&BoundInputs { gamma: g, ..inputs() }).unwrap();
            let t = r.t_required.unwrap();
            assert!(t <= prev);
            assert!(r.log_term > 0.0);
            prev = t;
        }
    }

    #[test]
    fn constraint_errors() {
        let b = BoundInputs {
            delta: 0.1,
            ..inputs()
        };
        assert!(matches!(theorem1_sample_size(&b), Err(Error::Constraint(m)) if m.contains("epsilon/4")));
        let b = BoundInputs { c1: 0.01, ..inputs() };
        assert!(matches!(theorem1_sample_size(&b), Err(Error::Constraint(m)) if m.contains("c1")));
        let b = BoundInputs { gamma: 1.0, ..inputs() };
        assert!(theorem1_sample_size(&b).is_err());
    }
}
