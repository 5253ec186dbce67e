//! Parameter scans for ΔS over one or two detector/source angles, with an
//! optional Monte-Carlo replication per grid point and an SVG heat map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::double_transfer::{sample_double, setting_pair_table, DoubleConfig};
use crate::entropy::delta_s;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// ΔS above this counts as a violation; below it is treated as roundoff.
pub const VIOLATION_TOL: f64 = 1e-6;

/// An angle of [`DoubleConfig`] that a scan may sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    ThetaAlpha,
    ThetaBeta,
    ThetaBA,
    ThetaBB,
    ThetaCA,
    ThetaCB,
}

impl ScanParam {
    pub const ALL: [ScanParam; 6] = [
        ScanParam::ThetaAlpha,
        ScanParam::ThetaBeta,
        ScanParam::ThetaBA,
        ScanParam::ThetaBB,
        ScanParam::ThetaCA,
        ScanParam::ThetaCB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScanParam::ThetaAlpha => "theta_alpha",
            ScanParam::ThetaBeta => "theta_beta",
            ScanParam::ThetaBA => "theta_b_a",
            ScanParam::ThetaBB => "theta_b_b",
            ScanParam::ThetaCA => "theta_c_a",
            ScanParam::ThetaCB => "theta_c_b",
        }
    }

    pub fn apply<F: Scalar>(self, cfg: &mut DoubleConfig<F>, value: F) {
        match self {
            ScanParam::ThetaAlpha => cfg.theta_alpha = value,
            ScanParam::ThetaBeta => cfg.theta_beta = value,
            ScanParam::ThetaBA => cfg.theta_b_a = value,
            ScanParam::ThetaBB => cfg.theta_b_b = value,
            ScanParam::ThetaCA => cfg.theta_c_a = value,
            ScanParam::ThetaCB => cfg.theta_c_b = value,
        }
    }
}

impl fmt::Display for ScanParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScanParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown scan parameter {s:?}; expected one of: {}",
                    ScanParam::ALL.map(|p| p.name()).join(", ")
                ))
            })
    }
}

/// One scan dimension: `steps` evenly spaced values from `lo` to `hi`
/// inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis<F> {
    pub param: ScanParam,
    pub lo: F,
    pub hi: F,
    pub steps: usize,
}

impl<F: Scalar> Axis<F> {
    pub fn new(param: ScanParam, lo: F, hi: F, steps: usize) -> Result<Self> {
        let a = Axis { param, lo, hi, steps };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::invalid("axis endpoints must be finite"));
        }
        if self.hi < self.lo {
            return Err(Error::invalid("axis needs lo ≤ hi"));
        }
        if self.steps == 0 || (self.steps == 1 && self.hi != self.lo) {
            return Err(Error::invalid("axis needs ≥ 2 steps (or lo == hi)"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<F> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let span = self.hi - self.lo;
        let denom = F::of((self.steps - 1) as f64);
        (0..self.steps)
            .map(|i| self.lo + span * F::of(i as f64) / denom)
            .collect()
    }
}

/// A full scan request: base configuration, one or two axes, and an
/// optional per-point Monte-Carlo replication with `mc_n` events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid<F> {
    pub base: DoubleConfig<F>,
    pub axes: Vec<Axis<F>>,
    pub mc_n: Option<u64>,
    pub seed: u64,
}

impl<F: Scalar> ScanGrid<F> {
    /// The canonical contextual scan: θ_bA × θ_cA over [0, π]², 101 points
    /// per side, everything else at the default (all angles 0). The grid
    /// step π/100 places the analytic optimum (θ_bA, θ_cA) = (0, π/4)
    /// exactly on a node.
    pub fn default_contextual(seed: u64) -> Self {
        ScanGrid {
            base: DoubleConfig::default(),
            axes: vec![
                Axis { param: ScanParam::ThetaBA, lo: F::zero(), hi: F::PI(), steps: 101 },
                Axis { param: ScanParam::ThetaCA, lo: F::zero(), hi: F::PI(), steps: 101 },
            ],
            mc_n: None,
            seed,
        }
    }

    /// Same grid, local mode — the negative control.
    pub fn default_local(seed: u64) -> Self {
        let mut g = Self::default_contextual(seed);
        g.base.mode = crate::double_transfer::CorrelationMode::Local;
        g
    }

    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::invalid("scan takes 1 or 2 axes"));
        }
        for a in &self.axes {
            a.validate()?;
        }
        if self.mc_n == Some(0) {
            return Err(Error::invalid("mc_n must be ≥ 1 when given"));
        }
        Ok(())
    }

    /// Axis value tuples in row-major order (axis 0 outermost).
    fn points(&self) -> Vec<Vec<F>> {
        let grids: Vec<Vec<F>> = self.axes.iter().map(Axis::values).collect();
        match grids.as_slice() {
            [g0] => g0.iter().map(|&v| vec![v]).collect(),
            [g0, g1] => g0
                .iter()
                .flat_map(|&v0| g1.iter().map(move |&v1| vec![v0, v1]))
                .collect(),
            _ => unreachable!("validated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint<F> {
    /// Swept values, one per axis, in axis order.
    pub values: Vec<F>,
    /// ΔS from the exact pairwise tables.
    pub delta_s: F,
    /// ΔS from the plug-in tables of an `mc_n`-event simulation, if asked.
    pub mc_delta_s: Option<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult<F> {
    pub axes: Vec<Axis<F>>,
    /// Row-major over the axis grids.
    pub points: Vec<ScanPoint<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationSummary<F> {
    pub total_points: usize,
    pub violating_points: usize,
    pub fraction: f64,
    pub max_delta_s: F,
    /// Axis values at the maximum.
    pub argmax: Vec<F>,
}

/// Evaluate ΔS over the grid. Deterministic in (grid, seed): Monte-Carlo
/// points use `derive_seed(seed, point_index)` so neither thread count nor
/// evaluation order can leak in.
pub fn scan_delta_s<F: Scalar>(grid: &ScanGrid<F>) -> Result<ScanResult<F>> {
    grid.validate()?;
    let pts = grid.points();
    let points: Vec<ScanPoint<F>> = pts
        .into_par_iter()
        .enumerate()
        .map(|(idx, values)| -> Result<ScanPoint<F>> {
            let mut cfg = grid.base.clone();
            for (axis, &v) in grid.axes.iter().zip(&values) {
                axis.param.apply(&mut cfg, v);
            }
            let exact = delta_s(&setting_pair_table(&cfg)?);
            let mc = match grid.mc_n {
                None => None,
                Some(n) => {
                    let counts = sample_double(&cfg, n, derive_seed(grid.seed, idx as u64))?;
                    Some(delta_s(&counts.to_setting_pair_table()?))
                }
            };
            Ok(ScanPoint { values, delta_s: exact, mc_delta_s: mc })
        })
        .collect::<Result<_>>()?;
    Ok(ScanResult { axes: grid.axes.clone(), points })
}

/// Count and locate violations (ΔS > [`VIOLATION_TOL`]) in a scan, judging
/// the exact values.
pub fn find_violations<F: Scalar>(result: &ScanResult<F>) -> Result<ViolationSummary<F>> {
    if result.points.is_empty() {
        return Err(Error::Empty { what: "scan result" });
    }
    let tol = F::of(VIOLATION_TOL);
    let mut violating = 0usize;
    let mut best = &result.points[0];
    for p in &result.points {
        if p.delta_s > tol {
            violating += 1;
        }
        if p.delta_s > best.delta_s {
            best = p;
        }
    }
    Ok(ViolationSummary {
        total_points: result.points.len(),
        violating_points: violating,
        fraction: violating as f64 / result.points.len() as f64,
        max_delta_s: best.delta_s,
        argmax: best.values.clone(),
    })
}

fn diverging_color(t: f64) -> String {
    // Blue ← white → red, t clamped to [-1, 1].
    let t = t.clamp(-1.0, 1.0);
    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let (r, g, b) = if t < 0.0 {
        let s = -t;
        (lerp(255.0, 33.0, s), lerp(255.0, 102.0, s), lerp(255.0, 172.0, s))
    } else {
        (lerp(255.0, 178.0, t), lerp(255.0, 24.0, t), lerp(255.0, 43.0, t))
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Render a 2-axis scan as an SVG heat map (axis 0 horizontal, axis 1
/// vertical, origin bottom-left) with the ΔS = 0 contour drawn in black.
pub fn render_heatmap_svg<F: Scalar>(result: &ScanResult<F>) -> Result<String> {
    if result.axes.len() != 2 {
        return Err(Error::invalid("heat map needs a 2-axis scan"));
    }
    let (n0, n1) = (result.axes[0].steps, result.axes[1].steps);
    if result.points.len() != n0 * n1 {
        return Err(Error::invalid("scan result is incomplete"));
    }
    let value = |i: usize, j: usize| result.points[i * n1 + j].delta_s.as_f64();

    let mut vmax = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &result.points {
        let v = p.delta_s.as_f64();
        vmax = vmax.max(v.abs());
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if vmax == 0.0 {
        vmax = 1.0;
    }

    const MARGIN: f64 = 70.0;
    const PLOT: f64 = 520.0;
    let (w, h) = (MARGIN * 2.0 + PLOT, MARGIN * 2.0 + PLOT + 30.0);
    let cw = PLOT / n0 as f64;
    let ch = PLOT / n1 as f64;
    // Cell (i, j) covers x ∈ [x0, x0+cw], y ∈ [y0-ch, y0] with j up.
    let cx = |i: f64| MARGIN + i * cw;
    let cy = |j: f64| MARGIN + PLOT - j * ch;

    let mut svg = String::with_capacity(64 * n0 * n1);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">\
         ΔS over ({}, {}) — max {:.4}, min {:.4}</text>\n",
        w / 2.0,
        result.axes[0].param,
        result.axes[1].param,
        hi,
        lo
    ));

    for i in 0..n0 {
        for j in 0..n1 {
            let v = value(i, j);
            svg.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                cx(i as f64),
                cy((j + 1) as f64),
                cw + 0.5,
                ch + 0.5,
                diverging_color(v / vmax)
            ));
        }
    }

    // ΔS = 0 contour by marching squares on cell corners (grid nodes sit at
    // cell centers for the fill, but contouring node-to-node is fine for a
    // diagnostic figure).
    if lo < 0.0 && hi > 0.0 {
        let mut segs = String::new();
        for i in 0..n0.saturating_sub(1) {
            for j in 0..n1.saturating_sub(1) {
                let corners = [
                    value(i, j),
                    value(i + 1, j),
                    value(i + 1, j + 1),
                    value(i, j + 1),
                ];
                // Point coordinates of the four corners, cell-center based.
                let pts = [
                    (i as f64 + 0.5, j as f64 + 0.5),
                    (i as f64 + 1.5, j as f64 + 0.5),
                    (i as f64 + 1.5, j as f64 + 1.5),
                    (i as f64 + 0.5, j as f64 + 1.5),
                ];
                let mut crossings: Vec<(f64, f64)> = Vec::new();
                for e in 0..4 {
                    let (a, b) = (corners[e], corners[(e + 1) % 4]);
                    if (a > 0.0) != (b > 0.0) {
                        let t = a / (a - b);
                        let (pa, pb) = (pts[e], pts[(e + 1) % 4]);
                        crossings.push((pa.0 + (pb.0 - pa.0) * t, pa.1 + (pb.1 - pa.1) * t));
                    }
                }
                // 2 crossings: one segment. 4 (saddle): pair them across
                // the cell center, which is as good as any disambiguation
                // for display purposes.
                let mut draw = |a: (f64, f64), b: (f64, f64)| {
                    segs.push_str(&format!(
                        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>\n",
                        cx(a.0),
                        cy(a.1),
                        cx(b.0),
                        cy(b.1)
                    ));
                };
                match crossings.len() {
                    2 => draw(crossings[0], crossings[1]),
                    4 => {
                        draw(crossings[0], crossings[1]);
                        draw(crossings[2], crossings[3]);
                    }
                    _ => {}
                }
            }
        }
        svg.push_str(&format!(
            "<g stroke=\"black\" stroke-width=\"1.2\" fill=\"none\">\n{segs}</g>\n"
        ));
    }

    // Frame and axis annotation.
    svg.push_str(&format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{p}\" height=\"{p}\" fill=\"none\" stroke=\"#444\"/>\n",
        m = MARGIN,
        p = PLOT
    ));
    let a0 = &result.axes[0];
    let a1 = &result.axes[1];
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{} ∈ [{:.3}, {:.3}]</text>\n",
        MARGIN + PLOT / 2.0,
        MARGIN + PLOT + 34.0,
        a0.param,
        a0.lo.as_f64(),
        a0.hi.as_f64()
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 {x} {y})\">\
         {} ∈ [{:.3}, {:.3}]</text>\n",
        a1.param,
        a1.lo.as_f64(),
        a1.hi.as_f64(),
        x = MARGIN - 40.0,
        y = MARGIN + PLOT / 2.0
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}
