use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::Quantity;
use super::sweep::{cell_statistics, CellStat, Record};
use crate::error::{Error, Result};

const NODE_TOL: f64 = 1e-12;
const LOG_EPS: f64 = 1e-12;
const SCAN_POINTS: usize = 400;
const BISECTIONS: usize = 60;

/// Bilinear interpolation of cell means (and standard errors) on the
/// `(p, τ)` grid of one size.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    ps: Vec<f64>,
    taus: Vec<f64>,
    mean: Vec<f64>,
    se: Vec<f64>,
}

fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (axis[0], axis[axis.len() - 1]);
    if x < first - NODE_TOL || x > last + NODE_TOL {
        return None;
    }
    if axis.len() == 1 {
        return Some((0, 0.0));
    }
    let i = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1) - 1;
    let u = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    Some((i, u))
}

impl Surface {
    /// `mean` and `se` are indexed `[i_p * taus.len() + i_tau]`.
    pub fn new(ps: Vec<f64>, taus: Vec<f64>, mean: Vec<f64>, se: Vec<f64>) -> Result<Self> {
        let size = ps.len() * taus.len();
        if size == 0 || mean.len() != size || se.len() != size {
            return Err(Error::Shape(format!("{}x{} grid with {} values", ps.len(), taus.len(), mean.len())));
        }
        if ps.windows(2).any(|w| w[0] >= w[1]) || taus.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("grid axes must be strictly increasing".into()));
        }
        Ok(Self { ps, taus, mean, se })
    }

    /// The surface of one size and quantity; every grid node must be present.
    pub fn from_cells(cells: &[CellStat], n: u32, quantity: Quantity) -> Result<Self> {
        let sel: Vec<&CellStat> = cells.iter().filter(|c| c.n == n && c.quantity == quantity).collect();
        let mut ps: Vec<f64> = sel.iter().map(|c| c.p).collect();
        let mut taus: Vec<f64> = sel.iter().map(|c| c.tau).collect();
        for axis in [&mut ps, &mut taus] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let nt = taus.len();
        let mut mean = vec![f64::NAN; ps.len() * nt];
        let mut se = vec![f64::NAN; ps.len() * nt];
        for c in &sel {
            let i = ps.partition_point(|&x| x < c.p);
            let j = taus.partition_point(|&x| x < c.tau);
            mean[i * nt + j] = c.mean;
            se[i * nt + j] = c.se;
        }
        if mean.iter().any(|v| v.is_nan()) {
            return Err(Error::Shape(format!("incomplete (p, tau) grid for N = {n}, {quantity}")));
        }
        Self::new(ps, taus, mean, se)
    }

    pub fn p_range(&self) -> (f64, f64) {
        (self.ps[0], self.ps[self.ps.len() - 1])
    }

    pub fn tau_range(&self) -> (f64, f64) {
        (self.taus[0], self.taus[self.taus.len() - 1])
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    fn blend(&self, grid: &[f64], i: usize, j: usize, wu: f64, wv: f64) -> f64 {
        let nt = self.taus.len();
        let at = |a: usize, b: usize| grid[a * nt + b];
        let (i1, j1) = ((i + 1).min(self.ps.len() - 1), (j + 1).min(nt - 1));
        (1.0 - wu) * (1.0 - wv) * at(i, j) + wu * (1.0 - wv) * at(i1, j) + (1.0 - wu) * wv * at(i, j1) + wu * wv * at(i1, j1)
    }

    /// `(mean, se)` at `(p, τ)`; exact at grid nodes.
    pub fn eval(&self, p: f64, tau: f64) -> Result<(f64, f64)> {
        let (i, wu) = locate(&self.ps, p).ok_or_else(|| Error::Domain(format!("p = {p} outside the grid")))?;
        let (j, wv) = locate(&self.taus, tau).ok_or_else(|| Error::Domain(format!("tau = {tau} outside the grid")))?;
        if wu == 0.0 && wv == 0.0 {
            let k = i * self.taus.len() + j;
            return Ok((self.mean[k], self.se[k]));
        }
        Ok((self.blend(&self.mean, i, j, wu, wv), self.blend(&self.se, i, j, wu, wv)))
    }
}

/// Surfaces of every size present in `records` for one quantity.
pub fn build_surfaces(records: &[Record], quantity: Quantity) -> Result<BTreeMap<u32, Surface>> {
    let cells = cell_statistics(records);
    let mut sizes: Vec<u32> = cells.iter().filter(|c| c.quantity == quantity).map(|c| c.n).collect();
    sizes.dedup();
    if sizes.is_empty() {
        return Err(Error::Parameter(format!("no records for quantity {quantity}")));
    }
    sizes.into_iter().map(|n| Ok((n, Surface::from_cells(&cells, n, quantity)?))).collect()
}

/// Which axis is scanned; the other is held at the estimate's coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanDirection {
    /// Scan `p` at fixed `τ`.
    P,
    /// Scan `τ` at fixed `p`.
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalFlag {
    Ok,
    NoTransition,
    OneSided,
}

impl CriticalFlag {
    pub fn name(self) -> &'static str {
        match self {
            CriticalFlag::Ok => "ok",
            CriticalFlag::NoTransition => "no_transition",
            CriticalFlag::OneSided => "one_sided",
        }
    }
}

/// A critical point along one scan line with its error interval
/// `lower ≤ value ≤ upper` (infinite where no monotone point exists).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub quantity: Quantity,
    pub direction: ScanDirection,
    /// Value of the fixed coordinate.
    pub coordinate: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub flag: CriticalFlag,
}

struct Line<'a> {
    sizes: Vec<f64>,
    surfaces: Vec<&'a Surface>,
    direction: ScanDirection,
    coordinate: f64,
}

impl Line<'_> {
    fn values(&self, x: f64) -> Result<Vec<(f64, f64)>> {
        self.surfaces
            .iter()
            .map(|s| match self.direction {
                ScanDirection::P => s.eval(x, self.coordinate),
                ScanDirection::Tau => s.eval(self.coordinate, x),
            })
            .collect()
    }

    /// Least-squares slope of `ln(f + ε)` against `N`, or of `f` itself
    /// when some value is clearly negative.
    fn slope(&self, x: f64) -> Result<f64> {
        let vals = self.values(x)?;
        let use_log = vals.iter().all(|v| v.0 > -LOG_EPS);
        let ys: Vec<f64> = vals.iter().map(|v| if use_log { (v.0.max(0.0) + LOG_EPS).ln() } else { v.0 }).collect();
        let n = self.sizes.len() as f64;
        let mx = self.sizes.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = self.sizes.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = self.sizes.iter().map(|x| (x - mx).powi(2)).sum();
        Ok(sxy / sxx)
    }

    /// Strictly monotone in `N` beyond one combined standard error, in the
    /// given direction (+1 increasing, -1 decreasing).
    fn monotone(&self, x: f64, dir: f64) -> Result<bool> {
        let vals = self.values(x)?;
        Ok(vals.windows(2).all(|w| dir * (w[1].0 - w[0].0) > (w[0].1.powi(2) + w[1].1.powi(2)).sqrt()))
    }
}

fn sign(s: f64) -> i32 {
    if s > NODE_TOL {
        1
    } else if s < -NODE_TOL {
        -1
    } else {
        0
    }
}

/// Bisects `[a, b]` for the boundary of `pred`, given `pred(a) != pred(b)`.
fn bisect<F: Fn(f64) -> Result<bool>>(mut a: f64, mut b: f64, pred: F) -> Result<f64> {
    let pa = pred(a)?;
    for _ in 0..BISECTIONS {
        let m = 0.5 * (a + b);
        if pred(m)? == pa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(b)
}

/// Nearest point from `c` towards `end` where the line is monotone in
/// direction `dir`, or an infinite bound on that side when there is none.
fn nearest_monotone(line: &Line<'_>, c: f64, end: f64, dir: f64) -> Result<f64> {
    let missing = if end >= c { f64::INFINITY } else { f64::NEG_INFINITY };
    if line.monotone(c, dir)? {
        return Ok(c);
    }
    let step = (end - c) / SCAN_POINTS as f64;
    if step == 0.0 {
        return Ok(missing);
    }
    let mut prev = c;
    for k in 1..=SCAN_POINTS {
        let x = c + step * k as f64;
        if line.monotone(x, dir)? {
            return bisect(prev, x, |y| line.monotone(y, dir));
        }
        prev = x;
    }
    Ok(missing)
}

fn estimate_on_line(line: &Line<'_>, lo: f64, hi: f64, quantity: Quantity) -> Result<CriticalEstimate> {
    let xs: Vec<f64> = (0..=SCAN_POINTS).map(|k| lo + (hi - lo) * k as f64 / SCAN_POINTS as f64).collect();
    let slopes = xs.iter().map(|&x| line.slope(x)).collect::<Result<Vec<f64>>>()?;
    let signs: Vec<i32> = slopes.iter().map(|&s| sign(s)).collect();
    let base = CriticalEstimate {
        quantity,
        direction: line.direction,
        coordinate: line.coordinate,
        value: f64::NAN,
        lower: f64::NAN,
        upper: f64::NAN,
        flag: CriticalFlag::Ok,
    };
    if signs.iter().all(|&s| s == 0) {
        return Ok(CriticalEstimate { flag: CriticalFlag::NoTransition, ..base });
    }
    if signs.iter().all(|&s| s >= 0) {
        return Ok(CriticalEstimate { value: lo, lower: f64::NEG_INFINITY, upper: lo, flag: CriticalFlag::OneSided, ..base });
    }
    if signs.iter().all(|&s| s <= 0) {
        return Ok(CriticalEstimate { value: hi, lower: hi, upper: f64::INFINITY, flag: CriticalFlag::OneSided, ..base });
    }
    // best split: left of the split should carry sign -orient, right +orient
    let mut best: Option<(usize, i32, Vec<usize>)> = None;
    for orient in [1, -1] {
        let mut wrong_left = 0usize;
        let mut wrong_right: usize = signs.iter().filter(|&&s| s == -orient).count();
        for i in 0..signs.len() - 1 {
            if signs[i] == orient {
                wrong_left += 1;
            }
            if signs[i] == -orient {
                wrong_right -= 1;
            }
            let cost = wrong_left + wrong_right;
            match &mut best {
                Some((c, o, splits)) if *c == cost && *o == orient => splits.push(i),
                Some((c, _, _)) if *c <= cost => {}
                _ => best = Some((cost, orient, vec![i])),
            }
        }
    }
    let (_, orient, splits) = best.expect("at least one split");
    let mut roots = Vec::with_capacity(splits.len());
    for i in splits {
        let (a, b) = (xs[i], xs[i + 1]);
        let root = match (sign(slopes[i]), sign(slopes[i + 1])) {
            (0, _) => a,
            (_, 0) => b,
            (sa, sb) if sa != sb => bisect(a, b, |x| Ok(line.slope(x)? > 0.0))?,
            _ => 0.5 * (a + b),
        };
        roots.push(root);
    }
    let value = roots.iter().sum::<f64>() / roots.len() as f64;
    let orient = orient as f64;
    let above = nearest_monotone(line, value, hi, orient)?;
    let below = nearest_monotone(line, value, lo, -orient)?;
    Ok(CriticalEstimate { value, lower: below.min(value), upper: above.max(value), ..base })
}

/// Critical estimates along every line of `direction`, one per fixed
/// coordinate (all grid values of the other axis shared by every size when
/// `fixed` is empty). Needs at least three sizes.
pub fn estimate_critical_line(
    surfaces: &BTreeMap<u32, Surface>,
    quantity: Quantity,
    direction: ScanDirection,
    fixed: &[f64],
) -> Result<Vec<CriticalEstimate>> {
    if surfaces.len() < 3 {
        return Err(Error::Parameter(format!("need >= 3 sizes, found {}", surfaces.len())));
    }
    let all: Vec<&Surface> = surfaces.values().collect();
    let range = |s: &Surface| match direction {
        ScanDirection::P => s.p_range(),
        ScanDirection::Tau => s.tau_range(),
    };
    let lo = all.iter().map(|s| range(s).0).fold(f64::NEG_INFINITY, f64::max);
    let hi = all.iter().map(|s| range(s).1).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::Domain("scan ranges of the sizes do not overlap".into()));
    }
    let coords: Vec<f64> = if fixed.is_empty() {
        let axis = |s: &Surface| match direction {
            ScanDirection::P => s.taus().to_vec(),
            ScanDirection::Tau => s.ps().to_vec(),
        };
        axis(all[0])
            .into_iter()
            .filter(|x| all.iter().all(|s| axis(s).iter().any(|y| (x - y).abs() <= NODE_TOL)))
            .collect()
    } else {
        fixed.to_vec()
    };
    coords
        .into_iter()
        .map(|coordinate| {
            let line = Line {
                sizes: surfaces.keys().map(|&n| n as f64).collect(),
                surfaces: all.clone(),
                direction,
                coordinate,
            };
            estimate_on_line(&line, lo, hi, quantity)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_surface(ps: Vec<f64>, taus: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Surface {
        let mean = ps.iter().flat_map(|&p| taus.iter().map(move |&t| (p, t))).map(|(p, t)| f(p, t)).collect::<Vec<_>>();
        let se = vec![0.0; mean.len()];
        Surface::new(ps, taus, mean, se).unwrap()
    }

    #[test]
    fn bilinear_basics() {
        let s = grid_surface(vec![0.0, 1.0], vec![0.0, 1.0], |p, _| p);
        assert_eq!(s.eval(0.5, 0.5).unwrap().0, 0.5);
        assert_eq!(s.eval(1.0, 0.0).unwrap().0, 1.0);
        assert!(matches!(s.eval(1.5, 0.0), Err(Error::Domain(_))));
        let c = grid_surface(vec![0.0, 0.5, 1.0], vec![0.0], |_, _| 3.0);
        assert_eq!(c.eval(0.37, 0.0).unwrap().0, 3.0);
    }

    fn synthetic(f: impl Fn(f64, f64) -> f64) -> BTreeMap<u32, Surface> {
        [4u32, 6, 8]
            .into_iter()
            .map(|n| {
                let ps: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
                (n, grid_surface(ps, vec![1.0], |p, _| f(p, n as f64)))
            })
            .collect()
    }

    #[test]
    fn constructed_crossing() {
        let s = synthetic(|p, n| (p - 0.4) * n);
        let est = estimate_critical_line(&s, Quantity::Negativity, ScanDirection::P, &[]).unwrap();
        assert_eq!(est.len(), 1);
        let e = est[0];
        assert_eq!(e.flag, CriticalFlag::Ok);
        assert!((e.value - 0.4).abs() < 1e-9, "{e:?}");
        assert!((e.lower - 0.4).abs() < 1e-9 && (e.upper - 0.4).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn size_independent_data_has_no_transition() {
        let s = synthetic(|p, _| p + 0.5);
        let e = estimate_critical_line(&s, Quantity::Negativity, ScanDirection::P, &[]).unwrap()[0];
        assert_eq!(e.flag, CriticalFlag::NoTransition);
    }

    #[test]
    fn one_sided_when_no_sign_change() {
        let s = synthetic(|p, n| (p + 0.1) * n);
        let e = estimate_critical_line(&s, Quantity::Negativity, ScanDirection::P, &[]).unwrap()[0];
        assert_eq!(e.flag, CriticalFlag::OneSided);
        assert!(e.lower <= e.value && e.value <= e.upper);
    }

    #[test]
    fn two_sizes_rejected() {
        let mut s = synthetic(|p, n| p * n);
        s.remove(&8);
        assert!(estimate_critical_line(&s, Quantity::Negativity, ScanDirection::P, &[]).is_err());
    }
}
