//! The aggregator's charging problem
//!
//! ```text
//! minimise  Σ_t η_t (ℓ0_t + ℓe_t)^n   s.t.  ℓe_t ≥ 0,  Σ_t ℓe_t = L_e
//! ```
//!
//! solved in closed form by water-filling. Slots are processed in order of
//! their marginal cost at the nonflexible load, `n η_t ℓ0_t^(n-1)`. Slot `t+1`
//! becomes active once `L_e` exceeds the threshold at which the marginal cost
//! of the already active slots reaches its own.
//!
//! With `w_s = η_s^(-1/(n-1))`, `H_t = Σ_{s≤t} w_s`, `α_t = Σ_{s≤t} ℓ0_s` and
//! `β_t = Σ_{s>t} η_s ℓ0_s^n` (sorted indices), the optimal value on branch `t`
//! is `V(L) = H_t^(1-n) (L + α_t)^n + β_t`. The charging unit price is the
//! average cost of the total consumption, `λ_e(L) = V(L) / (L + α_T)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Cost model of one charging period.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingScenario {
    exponent: u32,
    eta: Vec<f64>,
    ell0: Vec<f64>,
}

impl ChargingScenario {
    /// `exponent` is the cost exponent `n ≥ 2`; `eta` holds `η_t > 0`
    /// (€/kWh^n) and `ell0` the nonflexible loads `ℓ0_t ≥ 0` (kWh). A single
    /// slot is accepted.
    pub fn new(exponent: u32, eta: Vec<f64>, ell0: Vec<f64>) -> Result<Self> {
        if exponent < 2 {
            return Err(Error::invalid("n", alloc::format!("must be >= 2, got {exponent}")));
        }
        if eta.is_empty() {
            return Err(Error::invalid("eta", "at least one slot is required"));
        }
        if eta.len() != ell0.len() {
            return Err(Error::invalid(
                "eta/ell0",
                alloc::format!("lengths differ ({} vs {})", eta.len(), ell0.len()),
            ));
        }
        if let Some(t) = eta.iter().position(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid(alloc::format!("eta[{t}]"), "must be finite and > 0"));
        }
        if let Some(t) = ell0.iter().position(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::invalid(alloc::format!("ell0[{t}]"), "must be finite and >= 0"));
        }
        Ok(ChargingScenario { exponent, eta, ell0 })
    }

    /// Time-independent cost coefficient `eta` for every slot.
    pub fn uniform(exponent: u32, eta: f64, ell0: Vec<f64>) -> Result<Self> {
        Self::new(exponent, vec![eta; ell0.len()], ell0)
    }

    /// Two slots of 16.7 and 25.6 kWh, quadratic cost with `η = 0.01` €/kWh².
    pub fn two_slot_reference() -> Self {
        Self::uniform(2, 0.01, vec![16.7, 25.6]).expect("valid")
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn ell0(&self) -> &[f64] {
        &self.ell0
    }

    pub fn slot_count(&self) -> usize {
        self.eta.len()
    }

    pub fn total_nonflexible(&self) -> f64 {
        self.ell0.iter().sum()
    }

    /// `f_t'(load) = n η_t load^(n-1)`.
    pub fn marginal_cost(&self, slot: usize, load: f64) -> f64 {
        self.exponent as f64 * self.eta[slot] * powi(load, self.exponent - 1)
    }

    /// `Σ_t η_t (ℓ0_t + ℓe_t)^n` for an arbitrary profile.
    pub fn cost_of(&self, ell_e: &[f64]) -> f64 {
        self.eta
            .iter()
            .zip(&self.ell0)
            .zip(ell_e)
            .map(|((e, l0), le)| e * powi(l0 + le, self.exponent))
            .sum()
    }

    /// Slot permutation sorting marginal costs at the nonflexible load in
    /// ascending order; ties keep the original index order.
    pub fn order_slots(&self) -> Vec<usize> {
        let key: Vec<f64> = (0..self.slot_count())
            .map(|t| self.marginal_cost(t, self.ell0[t]))
            .collect();
        let mut order: Vec<usize> = (0..self.slot_count()).collect();
        order.sort_by(|&i, &j| key[i].total_cmp(&key[j]));
        order
    }

    pub fn water_filling(&self) -> WaterFilling {
        WaterFilling::new(self)
    }

    /// Thresholds `L^(0) = 0, L^(1), …, L^(T) = ∞` in sorted slot order.
    pub fn energy_thresholds(&self) -> Vec<f64> {
        self.water_filling().thresholds
    }

    pub fn schedule(&self, charging_need: f64) -> Result<ChargingSchedule> {
        check_need(charging_need)?;
        Ok(self.water_filling().schedule(charging_need))
    }

    /// Optimal total cost `V(L_e)` in euros.
    pub fn optimal_cost(&self, charging_need: f64) -> Result<f64> {
        check_need(charging_need)?;
        Ok(self.water_filling().value(charging_need))
    }

    /// Charging unit price `λ_e(L_e)` in €/kWh.
    pub fn unit_price(&self, charging_need: f64) -> Result<f64> {
        check_need(charging_need)?;
        self.water_filling().unit_price(charging_need)
    }

    /// Tests whether `λ_e` is increasing on `(0, ∞)`.
    ///
    /// The price increases everywhere iff its slope at zero is nonnegative,
    /// i.e. iff `Σ_t η̃_t ℓ̃0_t^n / Σ_t ℓ̃0_t ≤ n` with loads and coefficients
    /// normalised by the first slot in marginal-cost order.
    pub fn price_monotonicity(&self) -> PriceMonotonicity {
        let order = self.order_slots();
        let n = self.exponent;
        let first = order[0];
        if self.ell0.iter().all(|&l| l == 0.0) {
            return PriceMonotonicity {
                ratio: None,
                increasing: true,
                degeneracy: Some(Degeneracy::NoNonflexibleLoad),
            };
        }
        let (base, degeneracy) = if self.ell0[first] > 0.0 {
            (self.ell0[first], None)
        } else {
            let smallest = order
                .iter()
                .map(|&t| self.ell0[t])
                .find(|&l| l > 0.0)
                .expect("some load is positive");
            (smallest, Some(Degeneracy::ZeroFirstSlot))
        };
        let eta1 = self.eta[first];
        let mut num = 0.0;
        let mut den = 0.0;
        for t in 0..self.slot_count() {
            let l = self.ell0[t] / base;
            num += self.eta[t] / eta1 * powi(l, n);
            den += l;
        }
        let ratio = num / den;
        // With an empty cheapest slot the price starts by falling:
        // λ'(0) = -V(0) / (Σ ℓ0)^2 < 0.
        let increasing = degeneracy.is_none() && ratio <= n as f64;
        PriceMonotonicity {
            ratio: Some(ratio),
            increasing,
            degeneracy,
        }
    }

    /// Finite-difference sign of `λ_e'` on `points` equally spaced charging
    /// needs in `[0, max_need]` (forward difference at zero, central elsewhere).
    pub fn price_derivative_sign_scan(&self, max_need: f64, points: usize) -> Result<Vec<(f64, Slope)>> {
        if !(max_need.is_finite() && max_need > 0.0) {
            return Err(Error::invalid("max_need", "must be finite and > 0"));
        }
        if points < 2 {
            return Err(Error::invalid("points", "at least two grid points are required"));
        }
        let wf = self.water_filling();
        let step = max_need / (points - 1) as f64;
        let h = step * 1e-3;
        let price = |l: f64| wf.price_or_limit(l);
        let mut out = Vec::with_capacity(points);
        for i in 0..points {
            let l = i as f64 * step;
            let (hi, lo) = if i == 0 {
                (price(h), price(0.0))
            } else {
                (price(l + h), price(l - h))
            };
            let noise = 8.0 * f64::EPSILON * hi.abs().max(lo.abs());
            let d = hi - lo;
            let slope = if d > noise {
                Slope::Increasing
            } else if d < -noise {
                Slope::Decreasing
            } else {
                Slope::Flat
            };
            out.push((l, slope));
        }
        Ok(out)
    }
}

fn check_need(l: f64) -> Result<()> {
    if l.is_finite() && l >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "charging_need",
            alloc::format!("must be finite and >= 0, got {l}"),
        ))
    }
}

#[inline]
fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slope {
    Decreasing,
    Flat,
    Increasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// No nonflexible consumption at all: the price is `∝ L^(n-1)`.
    NoNonflexibleLoad,
    /// The cheapest slot carries no load while others do; the ratio is
    /// normalised by the smallest positive load instead.
    ZeroFirstSlot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceMonotonicity {
    /// `None` when there is no nonflexible load.
    pub ratio: Option<f64>,
    pub increasing: bool,
    pub degeneracy: Option<Degeneracy>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingSchedule {
    /// Charging per slot, original slot order (kWh).
    pub ell_e: Vec<f64>,
    /// Total cost `V` (€).
    pub value: f64,
    /// `λ_e` (€/kWh); `None` when there is no energy at all.
    pub unit_price: Option<f64>,
    /// Number of slots receiving charge.
    pub active_slot_count: usize,
    /// Common marginal cost of the active slots (€/kWh).
    pub marginal_cost: f64,
}

/// Precomputed closed-form data of a scenario, in marginal-cost order.
#[derive(Debug, Clone)]
pub struct WaterFilling {
    n: u32,
    order: Vec<usize>,
    ell0: Vec<f64>,
    weight: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    harmonic: Vec<f64>,
    thresholds: Vec<f64>,
}

impl WaterFilling {
    fn new(sc: &ChargingScenario) -> Self {
        let n = sc.exponent;
        let order = sc.order_slots();
        let t_count = order.len();
        let eta: Vec<f64> = order.iter().map(|&t| sc.eta[t]).collect();
        let ell0: Vec<f64> = order.iter().map(|&t| sc.ell0[t]).collect();
        let inv = 1.0 / (n - 1) as f64;
        let weight: Vec<f64> = eta.iter().map(|&e| libm::pow(e, -inv)).collect();

        let mut alpha = vec![0.0; t_count + 1];
        let mut harmonic = vec![0.0; t_count + 1];
        for t in 0..t_count {
            alpha[t + 1] = alpha[t] + ell0[t];
            harmonic[t + 1] = harmonic[t] + weight[t];
        }
        let mut beta = vec![0.0; t_count + 1];
        for t in (0..t_count).rev() {
            beta[t] = beta[t + 1] + eta[t] * powi(ell0[t], n);
        }

        let mut thresholds = vec![0.0; t_count + 1];
        thresholds[t_count] = f64::INFINITY;
        for t in 1..t_count {
            // Charge needed to lift slots 1..t to the marginal cost of slot t+1.
            let next = t;
            let level: f64 = (0..t)
                .map(|s| (libm::pow(eta[next] / eta[s], inv) * ell0[next] - ell0[s]).max(0.0))
                .sum();
            thresholds[t] = level.max(thresholds[t - 1]);
        }
        WaterFilling {
            n,
            order,
            ell0,
            weight,
            alpha,
            beta,
            harmonic,
            thresholds,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.order.len()
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    /// Sorted-to-original slot permutation.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn total_nonflexible(&self) -> f64 {
        self.alpha[self.slot_count()]
    }

    /// Number of active slots `t̄` for charging need `l`: the branch with
    /// `l ∈ (L^(t̄-1), L^(t̄)]`, and 0 for `l = 0`.
    pub fn branch(&self, l: f64) -> usize {
        if l <= 0.0 {
            return 0;
        }
        1 + self.thresholds[1..].partition_point(|&th| th < l)
    }

    /// Closed-form value using the formula of branch `t` (1-based), whether or
    /// not `l` lies in that branch's interval.
    pub fn value_on_branch(&self, t: usize, l: f64) -> f64 {
        if t == 0 {
            return self.beta[0];
        }
        let h = self.harmonic[t];
        powi(l + self.alpha[t], self.n) / powi(h, self.n - 1) + self.beta[t]
    }

    pub fn price_on_branch(&self, t: usize, l: f64) -> f64 {
        self.value_on_branch(t, l) / (l + self.total_nonflexible())
    }

    /// `V(l)`; `l` is assumed nonnegative.
    pub fn value(&self, l: f64) -> f64 {
        self.value_on_branch(self.branch(l), l)
    }

    /// `V'(l)`: the common marginal cost of the active slots.
    pub fn marginal_value(&self, l: f64) -> f64 {
        let t = self.branch(l).max(1);
        let level = (l + self.alpha[t]) / self.harmonic[t];
        self.n as f64 * powi(level, self.n - 1)
    }

    pub fn unit_price(&self, l: f64) -> Result<f64> {
        let denom = l + self.total_nonflexible();
        if denom <= 0.0 {
            return Err(Error::Domain("charging unit price is undefined without any energy"));
        }
        Ok(self.value(l) / denom)
    }

    /// `λ_e(l)`, continued by its limit 0 when there is no energy at all.
    pub fn price_or_limit(&self, l: f64) -> f64 {
        let denom = l + self.total_nonflexible();
        if denom <= 0.0 {
            0.0
        } else {
            self.value(l) / denom
        }
    }

    pub fn schedule(&self, l: f64) -> ChargingSchedule {
        let t_count = self.slot_count();
        let mut ell_e = vec![0.0; t_count];
        let active = self.branch(l);
        let mut marginal = self.n as f64 * powi(self.weight_inverse_level(0), self.n - 1);
        if active > 0 {
            let level = (l + self.alpha[active]) / self.harmonic[active];
            for s in 0..active {
                ell_e[self.order[s]] = (level * self.weight[s] - self.ell0[s]).max(0.0);
            }
            marginal = self.n as f64 * powi(level, self.n - 1);
        }
        let value = self.value_on_branch(active, l);
        let denom = l + self.total_nonflexible();
        ChargingSchedule {
            ell_e,
            value,
            unit_price: (denom > 0.0).then(|| value / denom),
            active_slot_count: active,
            marginal_cost: marginal,
        }
    }

    // Water level of the cheapest slot with nothing scheduled.
    fn weight_inverse_level(&self, s: usize) -> f64 {
        self.ell0[s] / self.weight[s]
    }

    /// `∫_0^l λ_e(x) dx` in closed form, summed over threshold intervals.
    pub fn price_integral(&self, l: f64) -> f64 {
        if l <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut lo = 0.0;
        for t in 1..=self.slot_count() {
            let hi = self.thresholds[t].min(l);
            if hi > lo {
                acc += self.piece_integral(t, lo, hi);
            }
            if self.thresholds[t] >= l {
                break;
            }
            lo = hi;
        }
        acc
    }

    // ∫_a^b [H^(1-n) (x+α_t)^n + β_t] / (x + A) dx with A = α_T. Substituting
    // u = x + α_t, c = A - α_t ≥ 0 and dividing u^n by u + c gives a
    // polynomial plus a logarithmic remainder.
    fn piece_integral(&self, t: usize, a: f64, b: f64) -> f64 {
        let n = self.n;
        let total = self.total_nonflexible();
        let c = total - self.alpha[t];
        let ua = a + self.alpha[t];
        let ub = b + self.alpha[t];
        let mut poly = 0.0;
        let mut ck = 1.0; // (-c)^k
        for k in 0..n {
            let m = n - k;
            poly += ck * (powi(ub, m) - powi(ua, m)) / m as f64;
            ck *= -c;
        }
        let log_ratio = if a + total > 0.0 {
            libm::log1p((b - a) / (a + total))
        } else {
            0.0
        };
        if ck != 0.0 {
            poly += ck * log_ratio;
        }
        let scale = 1.0 / powi(self.harmonic[t], n - 1);
        scale * poly + self.beta[t] * log_ratio
    }
}
