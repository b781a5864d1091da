//! Single-buyer pricing: menus of `(allocation, price)` options, the
//! buyer's best response and optimal posted prices for linear objectives.
//!
//! A buyer with value `v` facing a menu picks the option maximizing
//! `v·x - p`. A designer with objective `alpha·E[x] + beta·E[p]` can do no
//! better than some posted price `{(0,0), (1,p)}`; when prices are capped
//! at 1 the best menu has the form `{(0,0), (x,1)}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::BiasDistribution;
use crate::graph::TIE_TOL;
use crate::numeric;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("option ({x}, {p}) is outside [0,1] x R")]
    InvalidOption { x: f64, p: f64 },
    #[error("objective is identically zero")]
    DegenerateObjective,
    #[error("capped pricing needs beta >= 0, got {0}")]
    NegativeBeta(f64),
    #[error("menu price decreases from {p_low} to {p_high} as allocation grows")]
    NonMonotoneMenu { p_low: f64, p_high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MenuOption {
    pub x: f64,
    pub p: f64,
}

impl MenuOption {
    pub const NULL: MenuOption = MenuOption { x: 0.0, p: 0.0 };

    pub fn utility(&self, v: f64) -> f64 {
        v * self.x - self.p
    }
}

/// A set of options that always contains `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Menu {
    options: Vec<MenuOption>,
}

impl Menu {
    /// Builds a menu, adding `(0, 0)` if missing. Options are kept sorted by
    /// `(x, p)` with exact duplicates removed.
    pub fn new(options: &[(f64, f64)]) -> Result<Self, PricingError> {
        let mut opts = Vec::with_capacity(options.len() + 1);
        opts.push(MenuOption::NULL);
        for &(x, p) in options {
            if !(0.0..=1.0).contains(&x) || !p.is_finite() {
                return Err(PricingError::InvalidOption { x, p });
            }
            opts.push(MenuOption { x: x + 0.0, p: p + 0.0 });
        }
        opts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.p.total_cmp(&b.p)));
        opts.dedup();
        Ok(Menu { options: opts })
    }

    /// `{(0,0), (x,p)}`.
    pub fn posted(x: f64, p: f64) -> Result<Self, PricingError> {
        Menu::new(&[(x, p)])
    }

    pub fn options(&self) -> &[MenuOption] {
        &self.options
    }

    /// The buyer's choice as a function of `v >= 1`: `(start, option)`
    /// pairs, each option chosen on `[start, next start)`.
    pub fn allocation_rule(&self) -> Vec<(f64, MenuOption)> {
        let mut cur = best_response(self, 1.0);
        let mut v = 1.0;
        let mut rule = vec![(1.0, cur)];
        loop {
            let mut next: Option<(f64, MenuOption)> = None;
            for o in self.options.iter().filter(|o| o.x > cur.x) {
                let t = ((o.p - cur.p) / (o.x - cur.x)).max(v);
                next = match next {
                    Some((bt, bo)) if t > bt || (t == bt && (o.x, o.p) <= (bo.x, bo.p)) => Some((bt, bo)),
                    _ => Some((t, *o)),
                };
            }
            let Some((t, o)) = next else { break };
            if t <= v {
                rule.pop();
            }
            rule.push((t, o));
            cur = o;
            v = t;
        }
        rule
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearObjective {
    pub alpha: f64,
    pub beta: f64,
}

impl LinearObjective {
    pub fn new(alpha: f64, beta: f64) -> Self {
        LinearObjective { alpha, beta }
    }

    pub fn revenue() -> Self {
        LinearObjective::new(0.0, 1.0)
    }

    pub fn eval(&self, o: MenuOption) -> f64 {
        self.alpha * o.x + self.beta * o.p
    }
}

/// The option maximizing `v·x - p`; ties go to the larger price, then the
/// larger allocation.
pub fn best_response(menu: &Menu, v: f64) -> MenuOption {
    let umax = menu
        .options()
        .iter()
        .map(|o| o.utility(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOL * umax.abs().max(1.0);
    *menu
        .options()
        .iter()
        .filter(|o| o.utility(v) >= umax - tol)
        .max_by(|a, b| a.p.total_cmp(&b.p).then(a.x.total_cmp(&b.x)))
        .expect("menu holds (0,0)")
}

/// `alpha·E[x] + beta·E[p]` when the buyer's value is drawn from `dist`.
pub fn menu_objective(menu: &Menu, dist: &BiasDistribution, obj: LinearObjective) -> f64 {
    let rule = menu.allocation_rule();
    let mut total = 0.0;
    for (k, &(start, o)) in rule.iter().enumerate() {
        let hi = rule.get(k + 1).map_or(0.0, |&(t, _)| dist.survival(t));
        total += (dist.survival(start) - hi) * obj.eval(o);
    }
    total
}

/// Optimal posted price `{(0,0), (1,price)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostedPrice {
    /// `0` sells to everyone, `+∞` never sells. A price just above an atom
    /// is reported as `atom·(1 + 1e-9)`.
    pub price: f64,
    pub value: f64,
}

/// Relative offset used to represent "just above an atom".
pub const ABOVE_ATOM: f64 = 1e-9;

fn price_candidates(dist: &BiasDistribution) -> Vec<(f64, f64)> {
    // (price, survival at that price); right limits use the strict survival
    let mut cands = vec![(1.0, dist.survival(1.0))];
    for (a, _) in dist.atoms() {
        cands.push((a, dist.survival(a)));
        cands.push((a * (1.0 + ABOVE_ATOM), dist.survival_strict(a)));
    }
    cands
}

/// Maximizes `Pr[B >= p]·(alpha + beta·p)` over posted prices.
pub fn optimal_posted_price(dist: &BiasDistribution, obj: LinearObjective) -> Result<PostedPrice, PricingError> {
    if obj.alpha == 0.0 && obj.beta == 0.0 {
        return Err(PricingError::DegenerateObjective);
    }
    let value_at = |p: f64, s: f64| s * (obj.alpha + obj.beta * p);
    let mut cands = price_candidates(dist);
    if !dist.is_finite_support() {
        let (p, _) = numeric::maximize(|p| value_at(p, dist.survival(p)), 1.0, dist.support_upper());
        cands.push((p, dist.survival(p)));
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = PostedPrice {
        price: f64::INFINITY,
        value: 0.0,
    };
    let mut best_price_value = f64::NEG_INFINITY;
    let mut best_price = 1.0;
    for &(p, s) in &cands {
        let v = value_at(p, s);
        if v > best_price_value {
            best_price_value = v;
            best_price = p;
        }
    }
    if best_price_value >= 0.0 {
        best = PostedPrice {
            price: best_price,
            value: best_price_value + 0.0,
        };
    }
    if obj.alpha > best.value {
        best = PostedPrice {
            price: 0.0,
            value: obj.alpha,
        };
    }
    Ok(best)
}

/// Optimal menu `{(0,0), (x,1)}` with the price capped at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CappedMenu {
    pub x: f64,
    pub value: f64,
}

/// Maximizes `alpha·E[x] + beta·E[p]` over menus `{(0,0), (x,1)}`,
/// `x in [0,1]`. The buyer takes `(x,1)` iff `v·x >= 1`.
pub fn optimal_capped_menu(dist: &BiasDistribution, obj: LinearObjective) -> Result<CappedMenu, PricingError> {
    if obj.alpha == 0.0 && obj.beta == 0.0 {
        return Err(PricingError::DegenerateObjective);
    }
    if obj.beta < 0.0 {
        return Err(PricingError::NegativeBeta(obj.beta));
    }
    // threshold q = 1/x; the buyer takes the option iff v >= q
    let value_at = |q: f64, s: f64| s * (obj.alpha / q + obj.beta);
    let mut cands = price_candidates(dist);
    if !dist.is_finite_support() {
        let (q, _) = numeric::maximize(|q| value_at(q, dist.survival(q)), 1.0, dist.support_upper());
        cands.push((q, dist.survival(q)));
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = CappedMenu { x: 0.0, value: 0.0 };
    for &(q, s) in &cands {
        let v = value_at(q, s);
        if v > best.value {
            best = CappedMenu { x: 1.0 / q, value: v };
        }
    }
    Ok(best)
}

/// A menu written as a lottery over capped two-option menus
/// `M_j = {(0,0), (1/v_j, 1)}` with weights `m_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `(v_j, m_j)`: threshold of component `j` and its weight.
    pub components: Vec<(f64, f64)>,
    pub total_weight: f64,
    /// Weight of the null menu `{(0,0)}` when the components sum below 1.
    pub null_weight: f64,
    /// The weights sum above 1, so the lottery is not a distribution.
    pub exceeds_one: bool,
}

impl Decomposition {
    pub fn menus(&self) -> Vec<(Menu, f64)> {
        self.components
            .iter()
            .map(|&(v, m)| (Menu::posted(1.0 / v, 1.0).expect("1/v in (0,1]"), m))
            .collect()
    }

    /// `(E[x], E[p])` for a buyer with value `v` under the lottery.
    pub fn expected_at(&self, v: f64) -> (f64, f64) {
        self.components
            .iter()
            .filter(|&&(t, _)| v >= t)
            .fold((0.0, 0.0), |(x, p), &(t, m)| (x + m / t, p + m))
    }
}

/// Splits `menu` along its allocation rule: the option entered at
/// threshold `v_j` contributes weight `v_j·(x_j - x_{j-1})`.
pub fn randomized_menu_decomposition(menu: &Menu) -> Result<Decomposition, PricingError> {
    for w in menu.options().windows(2) {
        if w[1].p < w[0].p {
            return Err(PricingError::NonMonotoneMenu {
                p_low: w[0].p,
                p_high: w[1].p,
            });
        }
    }
    let mut components = Vec::new();
    let mut prev_x = 0.0;
    for (t, o) in menu.allocation_rule() {
        if o.x > prev_x {
            components.push((t, t * (o.x - prev_x)));
            prev_x = o.x;
        }
    }
    let total_weight: f64 = components.iter().map(|c| c.1).sum();
    Ok(Decomposition {
        components,
        total_weight,
        null_weight: (1.0 - total_weight).max(0.0),
        exceeds_one: total_weight > 1.0 + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> BiasDistribution {
        BiasDistribution::finite(&[(1.0, 1.0 / 3.0), (3.0, 2.0 / 3.0)]).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let m = Menu::posted(1.0, 1.0).unwrap();
        assert_eq!(best_response(&m, 2.0), MenuOption { x: 1.0, p: 1.0 });
        assert_eq!(best_response(&m, 1.0), MenuOption { x: 1.0, p: 1.0 });
        let m = Menu::new(&[(0.5, 0.4), (1.0, 1.0)]).unwrap();
        assert_eq!(best_response(&m, 1.1), MenuOption { x: 0.5, p: 0.4 });
    }

    #[test]
    fn revenue_on_two_point() {
        let r = optimal_posted_price(&two_point(), LinearObjective::revenue()).unwrap();
        assert_eq!(r.price, 3.0);
        assert!((r.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn allocation_objective_sells_to_all() {
        let r = optimal_posted_price(&two_point(), LinearObjective::new(1.0, 0.0)).unwrap();
        assert_eq!(r.price, 1.0);
        assert_eq!(r.value, 1.0);
        let r = optimal_posted_price(&two_point(), LinearObjective::new(-1.0, 0.0)).unwrap();
        // priced just above the support: nobody buys
        assert!(r.price > 3.0);
        assert_eq!(r.value, 0.0);
        assert_eq!(
            optimal_posted_price(&two_point(), LinearObjective::new(0.0, 0.0)).unwrap_err(),
            PricingError::DegenerateObjective
        );
    }

    #[test]
    fn capped_uniform_beats_grid() {
        let d = BiasDistribution::uniform(1.0, 2.0).unwrap();
        let obj = LinearObjective::new(-1.0, 1.0);
        let best = optimal_capped_menu(&d, obj).unwrap();
        for i in 0..=100 {
            for k in 0..=100 {
                let m = Menu::posted(i as f64 / 100.0, k as f64 / 100.0).unwrap();
                assert!(best.value >= menu_objective(&m, &d, obj) - 1e-9);
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let d = randomized_menu_decomposition(&Menu::posted(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(d.components, vec![(1.0, 1.0)]);
        assert!(!d.exceeds_one);

        let m = Menu::new(&[(0.5, 0.4), (1.0, 1.0)]).unwrap();
        let d = randomized_menu_decomposition(&m).unwrap();
        assert_eq!(d.components.len(), 2);
        assert!((d.components[0].1 - 0.5).abs() < 1e-12);
        assert!((d.components[1].0 - 1.2).abs() < 1e-12);
        assert!((d.components[1].1 - 0.6).abs() < 1e-12);
        assert!((d.total_weight - 1.1).abs() < 1e-12);
        assert!(d.exceeds_one);
    }

    #[test]
    fn non_monotone_menu_rejected() {
        let m = Menu::new(&[(0.5, 0.6), (1.0, 0.2)]).unwrap();
        assert!(matches!(
            randomized_menu_decomposition(&m),
            Err(PricingError::NonMonotoneMenu { .. })
        ));
    }

    #[test]
    fn menu_objective_matches_atoms() {
        let d = two_point();
        let m = Menu::new(&[(0.5, 0.4), (1.0, 1.0)]).unwrap();
        let obj = LinearObjective::new(0.3, 0.7);
        let direct: f64 = d.atoms().iter().map(|&(v, p)| p * obj.eval(best_response(&m, v))).sum();
        assert!((menu_objective(&m, &d, obj) - direct).abs() < 1e-12);
    }
}
