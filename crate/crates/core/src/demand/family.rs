use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Truncated Poisson PMF terms below this weight past the mode are dropped.
const POISSON_TAIL_CUTOFF: f64 = 1e-18;

/// Closed interval `[min, max]` of admissible means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanBounds {
    pub min: f64,
    pub max: f64,
}

impl MeanBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::domain(format!("invalid mean bounds [{min}, {max}]")));
        }
        Ok(MeanBounds { min, max })
    }

    pub fn contains(&self, mu: f64) -> bool {
        mu >= self.min && mu <= self.max
    }

    /// Round an estimate to the nearest admissible mean.
    pub fn clamp(&self, mu: f64) -> f64 {
        mu.clamp(self.min, self.max)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Underage (`b`) and overage (`h`) cost rates for one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRates {
    pub b: f64,
    pub h: f64,
}

impl CostRates {
    pub fn new(b: f64, h: f64) -> Result<Self> {
        if !(b.is_finite() && h.is_finite()) || b < 0.0 || h < 0.0 || b + h <= 0.0 {
            return Err(Error::domain(format!("invalid cost rates b={b}, h={h}")));
        }
        Ok(CostRates { b, h })
    }

    pub fn unit() -> Self {
        CostRates { b: 1.0, h: 1.0 }
    }

    /// Rates with the given critical quantile `b / (b + h)` and `b + h = 1`.
    pub fn from_critical_quantile(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("critical quantile {p} outside [0, 1]")));
        }
        CostRates::new(p, 1.0 - p)
    }

    pub fn critical_ratio(&self) -> f64 {
        self.b / (self.b + self.h)
    }

    /// Realized newsvendor cost `b (d - q)^+ + h (q - d)^+`.
    pub fn realized_cost(&self, demand: f64, q: f64) -> f64 {
        if demand >= q {
            self.b * (demand - q)
        } else {
            self.h * (q - demand)
        }
    }
}

/// Cost rates over a horizon: either one pair for every period or one per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSchedule {
    Constant(CostRates),
    PerPeriod(Vec<CostRates>),
}

impl RateSchedule {
    /// Rates for the zero-based period `t`.
    pub fn at(&self, t: usize) -> CostRates {
        match self {
            RateSchedule::Constant(r) => *r,
            RateSchedule::PerPeriod(v) => v[t],
        }
    }

    pub fn max_rates(&self) -> CostRates {
        match self {
            RateSchedule::Constant(r) => *r,
            RateSchedule::PerPeriod(v) => {
                v.iter().fold(CostRates { b: 0.0, h: 0.0 }, |acc, r| CostRates { b: acc.b.max(r.b), h: acc.h.max(r.h) })
            }
        }
    }
}

/// The set `Q` of allowed order quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuantitySpace {
    FiniteGrid { points: Vec<f64> },
    Interval { max: f64 },
    NonnegativeReals,
}

impl QuantitySpace {
    pub fn grid(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("quantity grid is empty"));
        }
        if points.iter().any(|q| !q.is_finite() || *q < 0.0) {
            return Err(Error::domain("quantity grid must hold finite nonnegative values"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("quantity grid must be strictly increasing"));
        }
        Ok(QuantitySpace::FiniteGrid { points })
    }

    pub fn interval(max: f64) -> Result<Self> {
        if !max.is_finite() || max < 0.0 {
            return Err(Error::domain(format!("invalid interval upper end {max}")));
        }
        Ok(QuantitySpace::Interval { max })
    }

    pub fn contains(&self, q: f64) -> bool {
        match self {
            QuantitySpace::FiniteGrid { points } => points.contains(&q),
            QuantitySpace::Interval { max } => q >= 0.0 && q <= *max,
            QuantitySpace::NonnegativeReals => q >= 0.0 && q.is_finite(),
        }
    }

    pub fn max_quantity(&self) -> Option<f64> {
        match self {
            QuantitySpace::FiniteGrid { points } => points.last().copied(),
            QuantitySpace::Interval { max } => Some(*max),
            QuantitySpace::NonnegativeReals => None,
        }
    }
}

/// Shape of a demand family. Every member is parameterized by its mean `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `N(mu, sigma^2)`.
    Normal { sigma: f64 },
    /// `mu + r` with `r` uniform over a stored residual sample (kept sorted).
    ShiftedNoise { residuals: Vec<f64> },
    /// `min(Poisson(mu), k * mu)`.
    TruncatedPoisson { k: f64 },
    /// `Bernoulli(mu)`.
    Bernoulli,
    /// Uniform on `[mu - halfwidth, mu + halfwidth]`.
    Uniform { halfwidth: f64 },
    /// Demand equals `mu`.
    PointMass,
}

/// A parametric demand family `D_mu` over an interval of means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandFamily {
    kind: FamilyKind,
    bounds: MeanBounds,
    /// Sub-Gaussian norm proxy of the centered members.
    subgaussian: f64,
    /// Lipschitz constant of `C(., b, h, q)` per unit of `max(b, h)`.
    lipschitz_factor: f64,
}

impl DemandFamily {
    pub fn new(kind: FamilyKind, bounds: MeanBounds) -> Result<Self> {
        let inv_sqrt_ln2 = 1.0 / std::f64::consts::LN_2.sqrt();
        let (subgaussian, lipschitz_factor) = match &kind {
            FamilyKind::Normal { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::domain(format!("normal sigma must be positive, got {sigma}")));
                }
                (sigma * (8.0f64 / 3.0).sqrt(), 1.0)
            }
            FamilyKind::ShiftedNoise { residuals } => {
                if residuals.is_empty() || residuals.iter().any(|r| !r.is_finite()) {
                    return Err(Error::domain("residual sample must be nonempty and finite"));
                }
                let spread = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
                (spread * inv_sqrt_ln2, 1.0)
            }
            FamilyKind::TruncatedPoisson { k } => {
                if !(k.is_finite() && *k >= 1.0) {
                    return Err(Error::domain(format!("truncation multiplier must be >= 1, got {k}")));
                }
                if bounds.min < 0.0 {
                    return Err(Error::domain("poisson means must be nonnegative"));
                }
                // Markov: k * P(X >= k mu) <= 1, so the truncation point adds at most one unit.
                (k * bounds.max * inv_sqrt_ln2, 2.0)
            }
            FamilyKind::Bernoulli => {
                if bounds.min < 0.0 || bounds.max > 1.0 {
                    return Err(Error::domain("bernoulli means must lie in [0, 1]"));
                }
                (inv_sqrt_ln2, 1.0)
            }
            FamilyKind::Uniform { halfwidth } => {
                if !(halfwidth.is_finite() && *halfwidth >= 0.0) {
                    return Err(Error::domain(format!("uniform halfwidth must be >= 0, got {halfwidth}")));
                }
                (halfwidth * inv_sqrt_ln2, 1.0)
            }
            FamilyKind::PointMass => (0.0, 1.0),
        };
        let kind = match kind {
            FamilyKind::ShiftedNoise { mut residuals } => {
                residuals.sort_by(f64::total_cmp);
                FamilyKind::ShiftedNoise { residuals }
            }
            k => k,
        };
        Ok(DemandFamily { kind, bounds, subgaussian, lipschitz_factor })
    }

    pub fn normal(sigma: f64, bounds: MeanBounds) -> Result<Self> {
        Self::new(FamilyKind::Normal { sigma }, bounds)
    }

    pub fn bernoulli(bounds: MeanBounds) -> Result<Self> {
        Self::new(FamilyKind::Bernoulli, bounds)
    }

    pub fn uniform(halfwidth: f64, bounds: MeanBounds) -> Result<Self> {
        Self::new(FamilyKind::Uniform { halfwidth }, bounds)
    }

    pub fn point_mass(bounds: MeanBounds) -> Result<Self> {
        Self::new(FamilyKind::PointMass, bounds)
    }

    pub fn truncated_poisson(k: f64, bounds: MeanBounds) -> Result<Self> {
        Self::new(FamilyKind::TruncatedPoisson { k }, bounds)
    }

    pub fn shifted_noise(residuals: Vec<f64>, bounds: MeanBounds) -> Result<Self> {
        Self::new(FamilyKind::ShiftedNoise { residuals }, bounds)
    }

    /// Override the stored Lipschitz factor.
    pub fn with_lipschitz_factor(mut self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::domain(format!("lipschitz factor must be positive, got {factor}")));
        }
        self.lipschitz_factor = factor;
        Ok(self)
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn bounds(&self) -> MeanBounds {
        self.bounds
    }

    pub fn subgaussian_norm(&self) -> f64 {
        self.subgaussian
    }

    /// Lipschitz constant `l` of `mu -> C(mu, b, h, q)` for these rates.
    ///
    /// Location families and the Bernoulli family have derivative
    /// `b P(d > q) - h P(d < q)`, bounded by `max(b, h)`.
    pub fn lipschitz(&self, rates: CostRates) -> f64 {
        self.lipschitz_factor * rates.b.max(rates.h)
    }

    fn check_mean(&self, mu: f64) -> Result<()> {
        if !self.bounds.contains(mu) {
            return Err(Error::domain(format!("mean {mu} outside [{}, {}]", self.bounds.min, self.bounds.max)));
        }
        Ok(())
    }

    /// Expected newsvendor cost `E[b (d - q)^+ + h (q - d)^+]` for `d ~ D_mu`.
    pub fn expected_cost(&self, mu: f64, rates: CostRates, q: f64) -> Result<f64> {
        self.check_mean(mu)?;
        if !(q >= 0.0) {
            return Err(Error::domain(format!("order quantity must be >= 0, got {q}")));
        }
        Ok(self.cost_unchecked(mu, rates, q))
    }

    pub(crate) fn cost_unchecked(&self, mu: f64, rates: CostRates, q: f64) -> f64 {
        let CostRates { b, h } = rates;
        let cost = match &self.kind {
            FamilyKind::Normal { sigma } => {
                let z = (q - mu) / sigma;
                sigma * ((b + h) * normal_loss(z) + h * z)
            }
            FamilyKind::PointMass => rates.realized_cost(mu, q),
            FamilyKind::Bernoulli => {
                let at_one = rates.realized_cost(1.0, q);
                let at_zero = rates.realized_cost(0.0, q);
                mu * at_one + (1.0 - mu) * at_zero
            }
            FamilyKind::Uniform { halfwidth } => {
                let w = *halfwidth;
                let (lo, hi) = (mu - w, mu + w);
                if w == 0.0 || q <= lo || q >= hi {
                    rates.realized_cost(mu, q)
                } else {
                    (b * (hi - q).powi(2) + h * (q - lo).powi(2)) / (4.0 * w)
                }
            }
            FamilyKind::ShiftedNoise { residuals } => {
                let total: f64 = residuals.iter().map(|r| rates.realized_cost(mu + r, q)).sum();
                total / residuals.len() as f64
            }
            FamilyKind::TruncatedPoisson { k } => {
                let mut total = 0.0;
                poisson_support(mu, *k, |d, p| {
                    total += p * rates.realized_cost(d, q);
                    true
                });
                total
            }
        };
        cost.max(0.0)
    }

    /// Generalized inverse CDF `inf { x : F(x) >= p }` of `D_mu`.
    ///
    /// `p <= 0` yields negative infinity; `p >= 1` yields the supremum of the
    /// support, which is infinite for the normal family.
    pub fn quantile(&self, mu: f64, p: f64) -> Result<f64> {
        self.check_mean(mu)?;
        if p.is_nan() {
            return Err(Error::domain("quantile level is NaN"));
        }
        Ok(self.quantile_unchecked(mu, p))
    }

    fn quantile_unchecked(&self, mu: f64, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            FamilyKind::Normal { sigma } => {
                if p >= 1.0 {
                    f64::INFINITY
                } else {
                    mu + sigma * inverse_normal_cdf(p)
                }
            }
            FamilyKind::PointMass => mu,
            FamilyKind::Bernoulli => {
                if p <= 1.0 - mu {
                    0.0
                } else {
                    1.0
                }
            }
            FamilyKind::Uniform { halfwidth } => mu - halfwidth + 2.0 * halfwidth * p.min(1.0),
            FamilyKind::ShiftedNoise { residuals } => {
                let n = residuals.len() as f64;
                residuals
                    .iter()
                    .enumerate()
                    .find(|(i, _)| (*i as f64 + 1.0) / n >= p)
                    .map_or(mu + residuals[residuals.len() - 1], |(_, r)| mu + r)
            }
            FamilyKind::TruncatedPoisson { k } => {
                let cap = k * mu;
                let mut cum = 0.0;
                let mut found = cap;
                poisson_support(mu, *k, |d, w| {
                    cum += w;
                    if cum >= p {
                        found = d;
                        false
                    } else {
                        true
                    }
                });
                found
            }
        }
    }

    /// An order quantity in `space` minimizing the expected cost at mean `mu`.
    ///
    /// Continuous spaces take the `b / (b + h)` quantile clamped into the space;
    /// finite grids are scanned, ties going to the smallest quantity.
    pub fn optimal_quantity(&self, mu: f64, rates: CostRates, space: &QuantitySpace) -> Result<f64> {
        self.check_mean(mu)?;
        match space {
            QuantitySpace::FiniteGrid { points } => {
                let mut best: Option<(f64, f64)> = None;
                for &q in points {
                    let c = self.cost_unchecked(mu, rates, q);
                    if best.is_none_or(|(_, bc)| c < bc) {
                        best = Some((q, c));
                    }
                }
                best.map(|(q, _)| q).ok_or_else(|| Error::domain("quantity grid is empty"))
            }
            QuantitySpace::Interval { max } => {
                let q = self.quantile_unchecked(mu, rates.critical_ratio());
                Ok(q.clamp(0.0, *max))
            }
            QuantitySpace::NonnegativeReals => {
                let q = self.quantile_unchecked(mu, rates.critical_ratio());
                if q == f64::INFINITY {
                    return Err(Error::domain("no minimizing quantity: overage cost is zero on unbounded support"));
                }
                Ok(q.max(0.0))
            }
        }
    }

    /// One draw from `D_mu`.
    pub fn sample<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> f64 {
        match &self.kind {
            FamilyKind::Normal { sigma } => Normal::new(mu, *sigma).expect("validated sigma").sample(rng),
            FamilyKind::PointMass => mu,
            FamilyKind::Bernoulli => {
                if rng.gen::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
            FamilyKind::Uniform { halfwidth } => mu + halfwidth * (2.0 * rng.gen::<f64>() - 1.0),
            FamilyKind::ShiftedNoise { residuals } => mu + residuals[rng.gen_range(0..residuals.len())],
            FamilyKind::TruncatedPoisson { k } => {
                if mu <= 0.0 {
                    return 0.0;
                }
                let x: f64 = Poisson::new(mu).expect("positive mean").sample(rng);
                x.min(k * mu)
            }
        }
    }

    /// Upper bound on the per-period expected cost over means in bounds and
    /// quantities in `[0, q_max]`.
    pub fn cost_upper_bound(&self, rates: CostRates, q_max: f64) -> f64 {
        let worst_demand = match &self.kind {
            FamilyKind::Normal { sigma } => self.bounds.max.abs().max(self.bounds.min.abs()) + 6.0 * sigma,
            FamilyKind::ShiftedNoise { residuals } => {
                let r = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
                self.bounds.max.abs().max(self.bounds.min.abs()) + r
            }
            FamilyKind::TruncatedPoisson { k } => k * self.bounds.max,
            FamilyKind::Bernoulli => 1.0,
            FamilyKind::Uniform { halfwidth } => self.bounds.max.abs().max(self.bounds.min.abs()) + halfwidth,
            FamilyKind::PointMass => self.bounds.max.abs().max(self.bounds.min.abs()),
        };
        rates.b.max(rates.h) * (worst_demand + q_max)
    }
}

/// Walk the support of `min(Poisson(mu), k mu)` in increasing order, calling
/// `visit(value, mass)` until it returns `false`.
fn poisson_support(mu: f64, k: f64, mut visit: impl FnMut(f64, f64) -> bool) {
    if mu <= 0.0 {
        visit(0.0, 1.0);
        return;
    }
    let cap = k * mu;
    let ln_mu = mu.ln();
    // mass below mu - 12 sqrt(mu) - 12 is far under the tail cutoff; the
    // skipped weight is added to the first visited value
    let mut j = (mu - 12.0 * mu.sqrt() - 12.0).floor().max(0.0).min(cap.floor()) as u64;
    let mut ln_p = j as f64 * ln_mu - mu - ln_gamma(j as f64 + 1.0);
    let mut cum = 0.0f64;
    if j > 0 {
        let below = poisson_cdf_below(mu, j);
        let d = j as f64;
        if d < cap {
            let p = ln_p.exp() + below;
            cum += p;
            if !visit(d, p) {
                return;
            }
            j += 1;
            ln_p += ln_mu - (j as f64).ln();
        }
    }
    loop {
        let d = j as f64;
        if d >= cap {
            visit(cap, (1.0 - cum).max(0.0));
            return;
        }
        let p = ln_p.exp();
        if d > mu && p < POISSON_TAIL_CUTOFF {
            return;
        }
        cum += p;
        if !visit(d, p) {
            return;
        }
        j += 1;
        ln_p += ln_mu - (j as f64).ln();
    }
}

/// `P(Poisson(mu) < j)`.
fn poisson_cdf_below(mu: f64, j: u64) -> f64 {
    // regularized upper incomplete gamma Q(j, mu) = P(Poisson(mu) <= j - 1)
    statrs::function::gamma::gamma_ur(j as f64, mu)
}

/// Standard normal loss `E[(Z - z)^+] = phi(z) - z (1 - Phi(z))`.
fn normal_loss(z: f64) -> f64 {
    let pdf = FRAC_1_SQRT_2PI * (-0.5 * z * z).exp();
    let upper_tail = 0.5 * erfc(z / std::f64::consts::SQRT_2);
    (pdf - z * upper_tail).max(0.0)
}

fn inverse_normal_cdf(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b(min: f64, max: f64) -> MeanBounds {
        MeanBounds::new(min, max).unwrap()
    }

    #[test]
    fn uniform_zero_two_costs() {
        let fam = DemandFamily::uniform(1.0, b(0.0, 2.0)).unwrap();
        let r = CostRates::unit();
        assert!((fam.expected_cost(1.0, r, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((fam.expected_cost(1.0, r, 0.0).unwrap() - 1.0).abs() < 1e-12);
        for i in 0..=20 {
            let q = i as f64 * 0.1;
            let want = (q * q + (2.0 - q) * (2.0 - q)) / 4.0;
            assert!((fam.expected_cost(1.0, r, q).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn point_mass_cost_zero_at_mean() {
        let fam = DemandFamily::point_mass(b(0.0, 10.0)).unwrap();
        let r = CostRates::new(3.0, 0.5).unwrap();
        assert_eq!(fam.expected_cost(5.0, r, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_cost_by_enumeration() {
        let fam = DemandFamily::bernoulli(b(0.0, 1.0)).unwrap();
        let r = CostRates::unit();
        // outcomes: d=1 w.p. 0.7 costs 0, d=0 w.p. 0.3 costs 1
        let want = 0.7 * 0.0 + 0.3 * 1.0;
        assert!((fam.expected_cost(0.7, r, 1.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let fam = DemandFamily::bernoulli(b(0.0, 1.0)).unwrap();
        let r = CostRates::unit();
        assert!(matches!(fam.expected_cost(1.5, r, 1.0), Err(Error::Domain(_))));
        assert!(matches!(fam.expected_cost(0.5, r, -1.0), Err(Error::Domain(_))));
        assert!(QuantitySpace::grid(vec![]).is_err());
        assert!(QuantitySpace::grid(vec![1.0, 1.0]).is_err());
        assert!(CostRates::new(0.0, 0.0).is_err());
        assert!(MeanBounds::new(2.0, 1.0).is_err());
        assert!(DemandFamily::bernoulli(b(0.0, 2.0)).is_err());
    }

    #[test]
    fn normal_median_clamped_at_zero() {
        let fam = DemandFamily::normal(1.0, b(-5.0, 5.0)).unwrap();
        let q = fam.optimal_quantity(0.0, CostRates::unit(), &QuantitySpace::NonnegativeReals).unwrap();
        assert!(q.abs() < 1e-12);
        let q = fam.optimal_quantity(-2.0, CostRates::unit(), &QuantitySpace::NonnegativeReals).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn bernoulli_median_above_half() {
        let fam = DemandFamily::bernoulli(b(0.0, 1.0)).unwrap();
        let r = CostRates::unit();
        let q = fam.optimal_quantity(0.5 + 1e-6, r, &QuantitySpace::NonnegativeReals).unwrap();
        assert_eq!(q, 1.0);
        let q = fam.optimal_quantity(0.5 - 1e-6, r, &QuantitySpace::NonnegativeReals).unwrap();
        assert_eq!(q, 0.0);
        // exactly one half: every q in [0, 1] is optimal, smallest wins
        let q = fam.optimal_quantity(0.5, r, &QuantitySpace::NonnegativeReals).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn residual_quantiles_follow_order_statistics() {
        let res: Vec<f64> = (0..20).map(|i| (i as f64 * 7.0) % 20.0 - 10.0).collect();
        let fam = DemandFamily::shifted_noise(res.clone(), b(0.0, 100.0)).unwrap();
        let mut sorted = res;
        sorted.sort_by(f64::total_cmp);
        assert_eq!(fam.quantile(50.0, 0.95).unwrap(), 50.0 + sorted[18]);
        assert_eq!(fam.quantile(50.0, 1.0).unwrap(), 50.0 + sorted[19]);
        assert_eq!(fam.quantile(50.0, 0.01).unwrap(), 50.0 + sorted[0]);

        let two = DemandFamily::shifted_noise(vec![1.0, -1.0], b(0.0, 10.0)).unwrap();
        let q = two.optimal_quantity(4.0, CostRates::unit(), &QuantitySpace::NonnegativeReals).unwrap();
        assert_eq!(q, 3.0);
        // both endpoints cost the same; anything in between too
        let c_lo = two.expected_cost(4.0, CostRates::unit(), 3.0).unwrap();
        let c_hi = two.expected_cost(4.0, CostRates::unit(), 5.0).unwrap();
        assert_eq!(c_lo, c_hi);
    }

    #[test]
    fn zero_residuals_behave_like_point_mass() {
        let noise = DemandFamily::shifted_noise(vec![0.0; 5], b(0.0, 10.0)).unwrap();
        let point = DemandFamily::point_mass(b(0.0, 10.0)).unwrap();
        let r = CostRates::new(2.0, 1.0).unwrap();
        for q in [0.0, 2.5, 4.0, 9.0] {
            assert_eq!(noise.expected_cost(4.0, r, q).unwrap(), point.expected_cost(4.0, r, q).unwrap());
        }
        assert_eq!(noise.optimal_quantity(4.0, r, &QuantitySpace::NonnegativeReals).unwrap(), 4.0);
    }

    #[test]
    fn poisson_walk_skips_the_far_left_tail() {
        for &mu in &[4.0, 40.0, 500.0, 20000.0] {
            let (mut mass, mut mean, mut first, mut n) = (0.0, 0.0, None, 0);
            poisson_support(mu, 10.0, |d, p| {
                first.get_or_insert(d);
                mass += p;
                mean += d * p;
                n += 1;
                true
            });
            assert!((mass - 1.0).abs() < 1e-9, "mu={mu} mass={mass}");
            assert!((mean - mu).abs() < 1e-7 * mu.max(1.0), "mu={mu} mean={mean}");
            assert!(n < 40 * (mu.sqrt() as usize + 10), "mu={mu} visited {n}");
            if mu > 1000.0 {
                assert!(first.unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn truncated_poisson_mass_and_cost() {
        let fam = DemandFamily::truncated_poisson(10.0, b(0.0, 200.0)).unwrap();
        let mut mass = 0.0;
        let mut mean = 0.0;
        poisson_support(3.0, 10.0, |d, p| {
            mass += p;
            mean += d * p;
            true
        });
        assert!((mass - 1.0).abs() < 1e-12);
        assert!((mean - 3.0).abs() < 1e-9);
        // k = 1 truncates at the mean itself
        let tight = DemandFamily::truncated_poisson(1.0, b(0.0, 10.0)).unwrap();
        let mut top = 0.0f64;
        poisson_support(2.5, 1.0, |d, _| {
            top = top.max(d);
            true
        });
        assert_eq!(top, 2.5);
        let c = fam.expected_cost(100.0, CostRates::unit(), 100.0).unwrap();
        // E|X - 100| for Poisson(100) is about sqrt(2 * 100 / pi)
        assert!((c - (200.0 / std::f64::consts::PI).sqrt()).abs() < 0.1, "{c}");
        assert_eq!(tight.expected_cost(0.0, CostRates::unit(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sampling_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pm = DemandFamily::point_mass(b(0.0, 10.0)).unwrap();
        assert_eq!(pm.sample(3.0, &mut rng), 3.0);
        let be = DemandFamily::bernoulli(b(0.0, 1.0)).unwrap();
        for _ in 0..100 {
            assert_eq!(be.sample(1.0, &mut rng), 1.0);
            assert_eq!(be.sample(0.0, &mut rng), 0.0);
        }
    }

    #[test]
    fn normal_sample_mean_within_four_standard_errors() {
        let fam = DemandFamily::normal(1.0, b(-1.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n).map(|_| fam.sample(0.0, &mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let fam = DemandFamily::truncated_poisson(10.0, b(0.0, 200.0)).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| fam.sample(80.0, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn lipschitz_uses_worst_rate() {
        let fam = DemandFamily::normal(2.0, b(0.0, 1.0)).unwrap();
        assert_eq!(fam.lipschitz(CostRates::new(3.0, 1.0).unwrap()), 3.0);
        let fam = fam.with_lipschitz_factor(2.5).unwrap();
        assert_eq!(fam.lipschitz(CostRates::unit()), 2.5);
    }
}
