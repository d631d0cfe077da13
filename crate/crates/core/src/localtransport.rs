//! Optimal maps and costs between product densities supported on single
//! cells.
//!
//! For the cost `c(x, y) = |y - x|^2 / 2` and product densities, the optimal
//! map acts coordinate-wise through 1D quantile maps and the optimal cost is
//! the sum of the per-coordinate costs.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::density1d::LinearDensity1D;
use crate::error::{Error, Result};
use crate::geometry::CellIndex;
use crate::quadrature::GaussLegendre;

pub const DEFAULT_QUADRATURE_ORDER: usize = 32;

/// Monotone 1D map `x -> Q_target(F_source(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Map1D {
    pub source: LinearDensity1D,
    pub target: LinearDensity1D,
}

impl Map1D {
    pub fn eval(&self, x: f64) -> f64 {
        self.target.quantile_unchecked(self.source.cdf(x))
    }
}

pub fn map_1d(source: LinearDensity1D, target: LinearDensity1D) -> Map1D {
    Map1D { source, target }
}

/// Weighted product density on one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDensity {
    pub cell: CellIndex,
    pub weight: f64,
    pub factors: Vec<LinearDensity1D>,
}

impl CellDensity {
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(f, &v)| f.pdf(v)).product()
    }

    pub fn diameter(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.width() * f.width())
            .sum::<f64>()
            .sqrt()
    }
}

/// Coordinate-wise map between two cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPairMap {
    pub maps: Vec<Map1D>,
}

impl CellPairMap {
    pub fn dim(&self) -> usize {
        self.maps.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.maps.iter().zip(x).map(|(m, &v)| m.eval(v)).collect()
    }

    /// Adds `weight * m(x)` into `out`.
    pub fn accumulate(&self, x: &[f64], weight: f64, out: &mut [f64]) {
        for ((m, &v), o) in self.maps.iter().zip(x).zip(out.iter_mut()) {
            *o += weight * m.eval(v);
        }
    }
}

/// Below this branch-point gap an end of `[0, 1]` gets graded panels.
const GRADING_GAP: f64 = 0.05;
/// Innermost graded panels stop at this width.
const MIN_PANEL: f64 = 1e-9;

/// One quadrature panel on the quantile level `u`.
#[derive(Debug, Clone, Copy)]
enum Panel {
    Plain(f64, f64),
    /// `u = a + x τ²`, `τ ∈ [0, 1]`, resolving a square root at `u = a`.
    SqrtLow(f64, f64),
    /// `u = b - x τ²`.
    SqrtHigh(f64, f64),
}

/// Evaluates local transport costs with a fixed Gauss–Legendre rule.
///
/// The cost is integrated over the quantile level, where it reads
/// `∫_0^1 (Q_t(u) - Q_s(u))^2 / 2 du`; this equals `∫ |m(x) - x|^2 / 2 ρ(x) dx`
/// over the source cell. Linear-density quantiles are analytic on `[0, 1]`
/// with a square-root branch point at distance `(1 - |α|)^2 / (4 |α|)` beyond
/// one end (`α` the normalised slope). Ends with a close branch point are
/// covered by geometrically graded panels, each integrated with the same
/// rule; otherwise one panel spans `[0, 1]`.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    rule: GaussLegendre,
}

impl CostEvaluator {
    pub fn new(order: usize) -> Self {
        Self {
            rule: GaussLegendre::new(order),
        }
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    pub fn cost_1d(&self, source: &LinearDensity1D, target: &LinearDensity1D) -> f64 {
        let (sl, sh) = source.quantile_branch_gaps();
        let (tl, th) = target.quantile_branch_gaps();
        let shift = target.center() - source.center();
        let f = |u: f64| {
            let d = shift + target.centered_quantile(u) - source.centered_quantile(u);
            d * d
        };
        let mut acc = 0.0;
        for panel in panels(sl.min(tl), sh.min(th)) {
            acc += match panel {
                Panel::Plain(a, b) => self.rule.integrate(a, b, f),
                Panel::SqrtLow(a, x) => self
                    .rule
                    .integrate(0.0, 1.0, |t| 2.0 * x * t * f(a + x * t * t)),
                Panel::SqrtHigh(b, x) => self
                    .rule
                    .integrate(0.0, 1.0, |t| 2.0 * x * t * f(b - x * t * t)),
            };
        }
        0.5 * acc
    }

    pub fn cell_pair_cost(&self, source: &CellDensity, target: &CellDensity) -> Result<f64> {
        check_dims(source, target)?;
        Ok(source
            .factors
            .iter()
            .zip(&target.factors)
            .map(|(s, t)| self.cost_1d(s, t))
            .sum())
    }
}

impl Default for CostEvaluator {
    fn default() -> Self {
        Self::new(DEFAULT_QUADRATURE_ORDER)
    }
}

fn panels(gap_low: f64, gap_high: f64) -> Vec<Panel> {
    let grade_low = gap_low < GRADING_GAP;
    let grade_high = gap_high < GRADING_GAP;
    if !grade_low && !grade_high {
        return vec![Panel::Plain(0.0, 1.0)];
    }
    let mut out = Vec::new();
    // widths of the graded panels measured from the end, largest first; the
    // remainder next to the end becomes a square-root panel
    let graded = |gap: f64| {
        let mut widths = Vec::new();
        let mut x: f64 = 0.5;
        while x > 4.0 * gap && x > MIN_PANEL {
            widths.push(x);
            x *= 0.25;
        }
        (widths, x)
    };
    if grade_low {
        let (widths, inner) = graded(gap_low);
        out.push(Panel::SqrtLow(0.0, inner));
        out.extend(widths.iter().rev().map(|&w| Panel::Plain(0.25 * w, w)));
    } else {
        out.push(Panel::Plain(0.0, 0.5));
    }
    if grade_high {
        let (widths, inner) = graded(gap_high);
        out.extend(
            widths
                .iter()
                .map(|&w| Panel::Plain(1.0 - w, 1.0 - 0.25 * w)),
        );
        out.push(Panel::SqrtHigh(1.0, inner));
    } else {
        out.push(Panel::Plain(0.5, 1.0));
    }
    out
}

fn default_evaluator() -> &'static CostEvaluator {
    static EVAL: OnceLock<CostEvaluator> = OnceLock::new();
    EVAL.get_or_init(CostEvaluator::default)
}

/// 1D transport cost with the default 32-node rule.
pub fn cost_1d(source: &LinearDensity1D, target: &LinearDensity1D) -> f64 {
    default_evaluator().cost_1d(source, target)
}

/// Sum of the per-axis costs between two cells.
pub fn cell_pair_cost(source: &CellDensity, target: &CellDensity) -> Result<f64> {
    default_evaluator().cell_pair_cost(source, target)
}

pub fn cell_pair_map(source: &CellDensity, target: &CellDensity) -> Result<CellPairMap> {
    check_dims(source, target)?;
    Ok(CellPairMap {
        maps: source
            .factors
            .iter()
            .zip(&target.factors)
            .map(|(s, t)| map_1d(*s, *t))
            .collect(),
    })
}

fn check_dims(source: &CellDensity, target: &CellDensity) -> Result<()> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            left: source.dim(),
            right: target.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lin(left: f64, right: f64, slope: f64) -> LinearDensity1D {
        LinearDensity1D::new(left, right, slope).unwrap()
    }

    fn cell(factors: Vec<LinearDensity1D>) -> CellDensity {
        CellDensity {
            cell: CellIndex(vec![0; factors.len()]),
            weight: 1.0,
            factors,
        }
    }

    /// Composite Simpson in x-space on a fine mesh; independent of the
    /// quantile-space quadrature used by the implementation.
    fn simpson_cost(s: &LinearDensity1D, t: &LinearDensity1D, panels: usize) -> f64 {
        let m = map_1d(*s, *t);
        let h = s.width() / panels as f64;
        let f = |x: f64| 0.5 * (m.eval(x) - x).powi(2) * s.pdf(x);
        let mut acc = f(s.left()) + f(s.right());
        for k in 1..panels {
            let x = s.left() + k as f64 * h;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * h / 3.0
    }

    #[test]
    fn uniform_to_uniform_is_affine() {
        let m = map_1d(lin(0.0, 1.0, 0.0), lin(2.0, 4.0, 0.0));
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert!((m.eval(x) - (2.0 + 2.0 * x)).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_to_triangular_is_sqrt() {
        let m = map_1d(lin(0.0, 1.0, 0.0), lin(0.0, 1.0, 2.0));
        for x in [0.0, 0.1, 0.36, 0.81, 1.0] {
            assert!((m.eval(x) - f64::sqrt(x)).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn identical_densities_give_identity() {
        let d = lin(-1.0, 3.0, 0.3);
        let m = map_1d(d, d);
        for k in 0..=10 {
            let x = -1.0 + 0.4 * k as f64;
            assert!((m.eval(x) - x).abs() < 1e-13);
        }
        assert!(cost_1d(&d, &d) < 1e-12);
    }

    #[test]
    fn cost_examples() {
        let c = cost_1d(&lin(0.0, 1.0, 0.0), &lin(2.0, 3.0, 0.0));
        assert!((c - 2.0).abs() < 1e-13);
        let c = cost_1d(&lin(0.0, 1.0, 0.0), &lin(0.0, 2.0, 0.0));
        let oracle = simpson_cost(&lin(0.0, 1.0, 0.0), &lin(0.0, 2.0, 0.0), 20_000);
        assert!((oracle - 1.0 / 6.0).abs() < 1e-12);
        assert!((c - oracle).abs() < 1e-12);
    }

    #[test]
    fn cost_matches_fine_simpson_for_sloped_densities() {
        let cases = [
            (lin(0.0, 1.0, 1.0), lin(0.5, 2.0, -0.7)),
            (lin(-2.0, -1.0, -1.5), lin(3.0, 3.5, 2.0)),
            (lin(0.0, 0.1, 10.0), lin(0.0, 0.2, 0.0)),
        ];
        for (s, t) in cases {
            let oracle = simpson_cost(&s, &t, 200_000);
            let got = cost_1d(&s, &t);
            assert!(
                (got - oracle).abs() < 1e-8 * oracle.max(1e-3),
                "{got} vs {oracle}"
            );
        }
    }

    #[test]
    fn cell_pair_cost_is_axis_sum() {
        let s = cell(vec![lin(0.0, 1.0, 0.0), lin(0.0, 1.0, 0.0)]);
        let t = cell(vec![lin(2.0, 3.0, 0.0), lin(0.0, 2.0, 0.0)]);
        let c = cell_pair_cost(&s, &t).unwrap();
        assert!((c - (2.0 + 1.0 / 6.0)).abs() < 1e-12);
        assert!(cell_pair_cost(&s, &s).unwrap() < 1e-12);
        let s1 = cell(vec![lin(0.0, 1.0, 0.5)]);
        let t1 = cell(vec![lin(1.0, 4.0, -0.2)]);
        assert_eq!(
            cell_pair_cost(&s1, &t1).unwrap(),
            cost_1d(&s1.factors[0], &t1.factors[0])
        );
        let t3 = cell(vec![lin(0.0, 1.0, 0.0); 3]);
        assert!(matches!(
            cell_pair_cost(&s, &t3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cell_pair_map_examples() {
        let s = cell(vec![lin(0.0, 1.0, 0.0), lin(0.0, 1.0, 0.0)]);
        let t = cell(vec![lin(2.0, 4.0, 0.0), lin(0.0, 1.0, 0.0)]);
        let m = cell_pair_map(&s, &t).unwrap();
        let y = m.eval(&[0.25, 0.75]);
        assert!((y[0] - 2.5).abs() < 1e-14 && (y[1] - 0.75).abs() < 1e-14);

        let id = cell_pair_map(&t, &t).unwrap();
        let y = id.eval(&[3.1, 0.2]);
        assert!((y[0] - 3.1).abs() < 1e-13 && (y[1] - 0.2).abs() < 1e-13);

        let mixed_s = cell(vec![lin(0.0, 1.0, 0.0), lin(0.0, 2.0, 0.8)]);
        let mixed_t = cell(vec![lin(1.0, 2.0, -1.9), lin(5.0, 6.0, 0.0)]);
        let m = cell_pair_map(&mixed_s, &mixed_t).unwrap();
        let center = [0.5, 1.0];
        let y = m.eval(&center);
        for l in 0..2 {
            let direct = map_1d(mixed_s.factors[l], mixed_t.factors[l]).eval(center[l]);
            assert_eq!(y[l], direct);
        }
    }

    fn density() -> impl Strategy<Value = LinearDensity1D> {
        (-20.0f64..20.0, 1e-2f64..10.0, -1.0f64..=1.0)
            .prop_map(|(l, w, t)| lin(l, l + w, t * 2.0 / w))
    }

    proptest! {
        #[test]
        fn quadrature_order_doubling_is_stable(s in density(), t in density()) {
            let c32 = CostEvaluator::new(32).cost_1d(&s, &t);
            let c64 = CostEvaluator::new(64).cost_1d(&s, &t);
            prop_assert!((c32 - c64).abs() <= 1e-10 * c64.max(1.0), "{c32} {c64}");
        }

        #[test]
        fn clamped_slopes_are_stable(l in -5.0f64..5.0, w in 0.1f64..3.0, sign in prop::bool::ANY, l2 in -5.0f64..5.0, w2 in 0.1f64..3.0) {
            let a = if sign { 2.0 / w } else { -2.0 / w };
            let s = lin(l, l + w, a);
            let t = lin(l2, l2 + w2, -2.0 / w2);
            let c32 = CostEvaluator::new(32).cost_1d(&s, &t);
            let c64 = CostEvaluator::new(64).cost_1d(&s, &t);
            prop_assert!((c32 - c64).abs() <= 1e-10 * c64.max(1.0));
        }

        #[test]
        fn cost_is_translation_invariant(s in density(), t in density(), shift in -100.0f64..100.0) {
            let c = cost_1d(&s, &t);
            let c2 = cost_1d(&s.translated(shift), &t.translated(shift));
            prop_assert!((c - c2).abs() <= 1e-12 * c.max(1.0) * (1.0 + shift.abs() / 10.0));
        }

        #[test]
        fn map_is_monotone_and_hits_endpoints(s in density(), t in density()) {
            let m = map_1d(s, t);
            prop_assert!((m.eval(s.left()) - t.left()).abs() < 1e-12 * (1.0 + t.left().abs()));
            prop_assert!((m.eval(s.right()) - t.right()).abs() < 1e-12 * (1.0 + t.right().abs()));
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=100 {
                let y = m.eval(s.left() + s.width() * k as f64 / 100.0);
                prop_assert!(y >= prev);
                prev = y;
            }
        }
    }
}
