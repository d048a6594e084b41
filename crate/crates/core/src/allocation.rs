//! Closed-form power allocation for a K-user downlink with a common QoS rate.
//!
//! Users are indexed from 0 in this module, ordered from the weakest channel
//! (index 0) to the strongest (index K-1). A coefficient vector `a` holds the
//! fraction of transmit power given to each user and the interference tail
//! `A[n] = a[n+1] + ... + a[K-1]` is the power user `n` cannot cancel.

use crate::error::{Error, Result};

/// Absolute tolerance on the unit-sum constraint of a normalized allocation.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// `2^x` for real `x`.
#[inline]
pub fn pow2(x: f64) -> f64 {
    x.exp2()
}

/// `2^x - 1` without cancellation for small `x`.
#[inline]
pub fn pow2_minus_one(x: f64) -> f64 {
    (x * std::f64::consts::LN_2).exp_m1()
}

/// Power coefficients together with their cached interference tails.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    coeffs: Vec<f64>,
    tails: Vec<f64>,
    partial: bool,
}

impl PowerAllocation {
    /// Allocation of the whole transmit budget: coefficients must sum to 1.
    pub fn normalized(coeffs: Vec<f64>) -> Result<Self> {
        check_coefficients(&coeffs)?;
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "power coefficients must sum to 1, got {sum}"
            )));
        }
        Ok(Self::build(coeffs, false))
    }

    /// Allocation of part of the budget (sum at most 1), used when some power is
    /// held back for users outside the experiment.
    pub fn partial(coeffs: Vec<f64>) -> Result<Self> {
        check_coefficients(&coeffs)?;
        let sum: f64 = coeffs.iter().sum();
        if sum > 1.0 + SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "power coefficients must sum to at most 1, got {sum}"
            )));
        }
        Ok(Self::build(coeffs, true))
    }

    fn build(coeffs: Vec<f64>, partial: bool) -> Self {
        let tails = interference_tails(&coeffs);
        PowerAllocation {
            coeffs,
            tails,
            partial,
        }
    }

    pub fn users(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    pub fn total(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// `a[n] - (2^R0 - 1) A[n]`: positive iff user `n`'s message can be decoded
    /// by a strong enough receiver.
    pub fn decode_margin(&self, n: usize, rate: f64) -> f64 {
        self.coeffs[n] - pow2_minus_one(rate) * self.tails[n]
    }
}

fn check_coefficients(coeffs: &[f64]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::invalid("allocation needs at least one user"));
    }
    if let Some((i, a)) = coeffs
        .iter()
        .enumerate()
        .find(|(_, a)| !(a.is_finite() && **a >= 0.0))
    {
        return Err(Error::invalid(format!(
            "coefficient of user {} must be finite and non-negative, got {a}",
            i + 1
        )));
    }
    Ok(())
}

/// Suffix sums `A[n] = sum of a[l] for l > n`; the last entry is exactly 0.
pub fn interference_tails(coeffs: &[f64]) -> Vec<f64> {
    let mut tails = vec![0.0; coeffs.len()];
    for n in (1..coeffs.len()).rev() {
        tails[n - 1] = coeffs[n] + tails[n];
    }
    tails
}

/// The fixed allocation that makes every SIC step of a user the same event as
/// decoding its own message:
/// `a[n] = 2^((K-1-n) R0) (2^R0 - 1) / (2^(K R0) - 1)` for 0-based `n`.
pub fn qos_fixed_allocation(users: usize, rate: f64) -> Result<PowerAllocation> {
    if users == 0 {
        return Err(Error::invalid("user count K must be at least 1"));
    }
    crate::config::check_positive("rate R0", rate)?;
    let k = users as f64;
    let scale = pow2_minus_one(rate) / pow2_minus_one(k * rate);
    let coeffs = (0..users)
        .map(|n| pow2((k - 1.0 - n as f64) * rate) * scale)
        .collect();
    Ok(PowerAllocation::build(coeffs, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    CertainOutage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub status: FeasibilityStatus,
    /// 0-based indices of users whose tail exceeds its limit or whose decode
    /// margin is not positive.
    pub violating_users: Vec<usize>,
    /// Upper bounds `2^(-(n+1) R0)` on the interference tail of each user.
    pub limits: Vec<f64>,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Bounds `2^(-n R0)` for users n = 1..K.
pub fn tail_limits(users: usize, rate: f64) -> Vec<f64> {
    (1..=users).map(|n| pow2(-(n as f64) * rate)).collect()
}

pub fn feasibility_check(alloc: &PowerAllocation, rate: f64) -> FeasibilityVerdict {
    let limits = tail_limits(alloc.users(), rate);
    let violating_users: Vec<usize> = (0..alloc.users())
        .filter(|&n| alloc.tails[n] > limits[n] || alloc.decode_margin(n, rate) <= 0.0)
        .collect();
    let status = if violating_users.is_empty() {
        FeasibilityStatus::Feasible
    } else {
        FeasibilityStatus::CertainOutage
    };
    FeasibilityVerdict {
        status,
        violating_users,
        limits,
    }
}

/// Gain thresholds for decoding each user's message.
///
/// `get(m)` is the smallest effective gain above which any receiver can decode
/// user `m`'s message; it is `+inf` when the decode margin is not positive. A
/// user recovers its own message only if its gain clears every threshold up to
/// and including its own, which is [`DecodeThresholds::own`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeThresholds {
    per_step: Vec<f64>,
    running_max: Vec<f64>,
}

impl DecodeThresholds {
    pub fn get(&self, m: usize) -> f64 {
        self.per_step[m]
    }

    pub fn own(&self, n: usize) -> f64 {
        self.running_max[n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.per_step
    }

    pub fn len(&self) -> usize {
        self.per_step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_step.is_empty()
    }
}

pub fn decode_thresholds(alloc: &PowerAllocation, rate: f64, snr: f64) -> DecodeThresholds {
    let numerator = pow2_minus_one(rate);
    let per_step: Vec<f64> = (0..alloc.users())
        .map(|m| {
            let margin = alloc.decode_margin(m, rate);
            if margin > 0.0 {
                numerator / (snr * margin)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let running_max = per_step
        .iter()
        .scan(0.0_f64, |acc, &t| {
            *acc = acc.max(t);
            Some(*acc)
        })
        .collect();
    DecodeThresholds {
        per_step,
        running_max,
    }
}

/// Gain below which a user is in outage with orthogonal access:
/// `(2^(K R0) - 1) / snr`.
pub fn oma_threshold(users: usize, rate: f64, snr: f64) -> f64 {
    pow2_minus_one(users as f64 * rate) / snr
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fixed_allocation_single_user() {
        for rate in [0.1, 1.0, 3.7] {
            let alloc = qos_fixed_allocation(1, rate).unwrap();
            assert_eq!(alloc.coeffs(), &[1.0]);
            assert_eq!(alloc.tails(), &[0.0]);
        }
    }

    #[test]
    fn fixed_allocation_matches_hand_solved_systems() {
        // K=2, R0=1: a1 = 2 a2 and a1 + a2 = 1.
        let alloc = qos_fixed_allocation(2, 1.0).unwrap();
        assert!(close(alloc.coeffs()[0], 2.0 / 3.0, 1e-15));
        assert!(close(alloc.coeffs()[1], 1.0 / 3.0, 1e-15));

        let alloc = qos_fixed_allocation(4, 1.0).unwrap();
        let expected = [8.0 / 15.0, 4.0 / 15.0, 2.0 / 15.0, 1.0 / 15.0];
        for (a, e) in alloc.coeffs().iter().zip(expected) {
            assert!(close(*a, e, 1e-15), "{a} vs {e}");
        }
    }

    #[test]
    fn fixed_allocation_rejects_bad_input() {
        assert!(qos_fixed_allocation(0, 1.0).is_err());
        assert!(qos_fixed_allocation(3, 0.0).is_err());
        assert!(qos_fixed_allocation(3, -1.0).is_err());
    }

    #[test]
    fn tails_examples() {
        assert_eq!(interference_tails(&[1.0]), vec![0.0]);
        let t = interference_tails(&[2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(t, vec![1.0 / 3.0, 0.0]);
        let t = interference_tails(&[8.0 / 15.0, 4.0 / 15.0, 2.0 / 15.0, 1.0 / 15.0]);
        let expected = [7.0 / 15.0, 3.0 / 15.0, 1.0 / 15.0, 0.0];
        for (x, e) in t.iter().zip(expected) {
            assert!(close(*x, e, 1e-15));
        }
        assert_eq!(*t.last().unwrap(), 0.0);
    }

    #[test]
    fn constructors_validate() {
        assert!(PowerAllocation::normalized(vec![]).is_err());
        assert!(PowerAllocation::normalized(vec![0.5, 0.4]).is_err());
        assert!(PowerAllocation::normalized(vec![1.5, -0.5]).is_err());
        assert!(PowerAllocation::normalized(vec![0.5, f64::NAN]).is_err());
        assert!(!PowerAllocation::normalized(vec![0.5, 0.5]).unwrap().is_partial());
        let p = PowerAllocation::partial(vec![0.0, 0.3, 0.2]).unwrap();
        assert!(p.is_partial());
        assert!(PowerAllocation::partial(vec![0.7, 0.4]).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let v = feasibility_check(&PowerAllocation::normalized(vec![0.4, 0.6]).unwrap(), 1.0);
        assert_eq!(v.status, FeasibilityStatus::CertainOutage);
        assert_eq!(v.violating_users, vec![0]);
        assert_eq!(v.limits, vec![0.5, 0.25]);

        // zero decode margin for user 1
        let v = feasibility_check(&PowerAllocation::normalized(vec![0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(v.status, FeasibilityStatus::CertainOutage);
        assert_eq!(v.violating_users, vec![0]);
    }

    #[test]
    fn fixed_allocation_is_feasible_on_grid() {
        for k in 1..=16 {
            for rate in [0.25, 0.5, 1.0, 2.0] {
                let alloc = qos_fixed_allocation(k, rate).unwrap();
                let v = feasibility_check(&alloc, rate);
                assert!(v.is_feasible(), "K={k} R0={rate}: {:?}", v.violating_users);
                // closed form of the tail: (2^((K-n)R0) - 1) / (2^(K R0) - 1), 1-based n
                for n in 1..=k {
                    let closed = pow2_minus_one((k - n) as f64 * rate)
                        / pow2_minus_one(k as f64 * rate);
                    let got = alloc.tails()[n - 1];
                    assert!(close(got, closed, 1e-12), "K={k} n={n}: {got} vs {closed}");
                    assert!(closed < pow2(-(n as f64) * rate));
                }
            }
        }
    }

    #[test]
    fn threshold_examples() {
        let alloc = qos_fixed_allocation(4, 1.0).unwrap();
        let t = decode_thresholds(&alloc, 1.0, 3.0);
        for m in 0..4 {
            assert!(close(t.get(m), 5.0, 5.0 * 1e-12), "{}", t.get(m));
            assert!(close(t.own(m), 5.0, 5.0 * 1e-12));
        }

        let alloc = PowerAllocation::normalized(vec![0.5, 0.5]).unwrap();
        let t = decode_thresholds(&alloc, 1.0, 1.0);
        // user 2 needs (2^R0 - 1) / (a_2 xi) = 1 / 0.5
        assert_eq!(t.as_slice(), &[f64::INFINITY, 2.0]);
        assert_eq!(t.own(1), f64::INFINITY);

        let alloc = PowerAllocation::normalized(vec![1.0]).unwrap();
        assert_eq!(decode_thresholds(&alloc, 1.0, 1.0).as_slice(), &[1.0]);
    }

    #[test]
    fn oma_threshold_examples() {
        assert!(close(oma_threshold(4, 1.0, 3.0), 5.0, 1e-14));
        assert!(close(oma_threshold(1, 1.0, 1.0), 1.0, 1e-15));
        assert!(close(oma_threshold(2, 0.5, 1.0), 1.0, 1e-15));
    }

    #[test]
    fn threshold_collapse_small_systems() {
        // The margin a[m] - (2^R0 - 1) A[m] cancels about (K-1) R0 bits, so the
        // 1e-12 relative identity holds while 2^((K-1)R0) stays below ~1e3.
        for k in 1..=6 {
            for rate in [0.25, 0.5, 1.0, 2.0] {
                if ((k - 1) as f64) * rate > 10.0 {
                    continue;
                }
                let alloc = qos_fixed_allocation(k, rate).unwrap();
                let oma = oma_threshold(k, rate, 3.0);
                for t in decode_thresholds(&alloc, rate, 3.0).as_slice() {
                    assert!(((t - oma) / oma).abs() <= 1e-12, "K={k} R0={rate}: {t} vs {oma}");
                }
            }
        }
    }

    #[test]
    fn threshold_collapse_full_grid_within_conditioning() {
        for k in 1..=16 {
            for rate in [0.25, 0.5, 1.0, 2.0] {
                let alloc = qos_fixed_allocation(k, rate).unwrap();
                let oma = oma_threshold(k, rate, 3.0);
                let tol = 64.0 * f64::EPSILON * pow2((k - 1) as f64 * rate);
                for t in decode_thresholds(&alloc, rate, 3.0).as_slice() {
                    assert!(((t - oma) / oma).abs() <= tol.max(1e-12), "K={k} R0={rate}");
                }
            }
        }
    }

    #[test]
    fn oma_threshold_monotone() {
        assert!(oma_threshold(4, 1.0, 3.0) > oma_threshold(4, 1.0, 3.5));
        assert!(oma_threshold(5, 1.0, 3.0) > oma_threshold(4, 1.0, 3.0));
        assert!(oma_threshold(4, 1.1, 3.0) > oma_threshold(4, 1.0, 3.0));
    }

    fn unit_simplex(max_users: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 1..=max_users).prop_map(|w| {
            let s: f64 = w.iter().sum();
            if s == 0.0 {
                let k = w.len() as f64;
                vec![1.0 / k; w.len()]
            } else {
                w.iter().map(|x| x / s).collect()
            }
        })
    }

    proptest! {
        #[test]
        fn fixed_allocation_invariants(k in 1usize..=16, rate in 0.05f64..3.0) {
            let alloc = qos_fixed_allocation(k, rate).unwrap();
            let a = alloc.coeffs();
            prop_assert!((alloc.total() - 1.0).abs() <= SUM_TOLERANCE);
            for n in 1..k {
                let ratio = a[n - 1] / (pow2(rate) * a[n]);
                prop_assert!((ratio - 1.0).abs() <= 1e-12);
                prop_assert!(a[n - 1] > a[n]);
            }
        }

        #[test]
        fn tails_reconstruct_coefficients(a in unit_simplex(12)) {
            let tails = interference_tails(&a);
            prop_assert_eq!(*tails.last().unwrap(), 0.0);
            for n in 1..a.len() {
                let back = tails[n - 1] - tails[n];
                // one rounding of the suffix sum
                prop_assert!((back - a[n]).abs() <= f64::EPSILON * tails[n - 1]);
            }
        }

        #[test]
        fn excess_tail_forces_infinite_threshold(a in unit_simplex(10), rate in 0.1f64..2.5) {
            let alloc = PowerAllocation::normalized(a).unwrap();
            let t = decode_thresholds(&alloc, rate, 3.0);
            for n in 0..alloc.users() {
                if alloc.tails()[n] > pow2(-((n + 1) as f64) * rate) {
                    prop_assert!((0..=n).any(|m| t.get(m).is_infinite()));
                    prop_assert!(t.own(n).is_infinite());
                }
            }
        }

        #[test]
        fn verdict_status_tracks_violations(a in unit_simplex(8), rate in 0.1f64..2.5) {
            let alloc = PowerAllocation::normalized(a).unwrap();
            let v = feasibility_check(&alloc, rate);
            prop_assert_eq!(v.is_feasible(), v.violating_users.is_empty());
            let t = decode_thresholds(&alloc, rate, 2.0);
            for n in 0..alloc.users() {
                prop_assert_eq!(
                    t.get(n).is_infinite(),
                    alloc.decode_margin(n, rate) <= 0.0
                );
            }
        }
    }
}
