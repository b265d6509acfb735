//! Static SVG figures: trajectory panels, the equal-area diagram and basin
//! heatmaps. Plain string assembly, no drawing backend.

use std::fmt::Write;

use gse_lvrt::eac::{equal_areas, CcaReport, EacError, EacInputs};
use gse_lvrt::model::Equilibria;
use gse_lvrt::sim::{BasinMap, Stage, StabilityVerdict, Trajectory};

const W: f64 = 640.0;
const H: f64 = 300.0;
const MARGIN: f64 = 50.0;

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Linear map from data coordinates into one plot panel.
struct Panel {
    x: (f64, f64),
    y: (f64, f64),
    top: f64,
}

impl Panel {
    fn new(x: (f64, f64), y: (f64, f64), top: f64) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self {
            x: pad(x),
            y: pad(y),
            top,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.top + H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn points(&self, pts: impl IntoIterator<Item = (f64, f64)>) -> String {
        let mut s = String::new();
        for (x, y) in pts {
            let _ = write!(s, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        s
    }

    fn polyline(&self, out: &mut String, pts: impl IntoIterator<Item = (f64, f64)>, color: &str) {
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            self.points(pts)
        );
    }

    /// Dashed vertical marker; `row` staggers the label downwards.
    fn vline(&self, out: &mut String, x: f64, color: &str, label: &str, row: usize) {
        let (px, y0, y1) = (self.px(x), self.py(self.y.0), self.py(self.y.1));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{y1:.2}" stroke="{color}" stroke-dasharray="4 3"/>"#
        );
        if !label.is_empty() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="{color}">{label}</text>"#,
                px + 2.0,
                y1 + 10.0 + 12.0 * row as f64
            );
        }
    }

    fn frame(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (self.px(self.x.0), self.px(self.x.1));
        let (y0, y1) = (self.py(self.y.0), self.py(self.y.1));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for (v, anchor) in [(self.x.0, "start"), (self.x.1, "end")] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="{anchor}">{}</text>"#,
                self.px(v),
                y0 + 14.0,
                tick(v)
            );
        }
        for v in [self.y.0, self.y.1] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                self.py(v) + 3.0,
                tick(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{xlabel}</text>"#,
            0.5 * (x0 + x1),
            y0 + 30.0
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{ylabel}</text>"#,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1)
        );
    }
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn document(height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{height}\" viewBox=\"0 0 {W} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

/// `phi(t)` over `omega(t)`, with the stage switches marked.
pub fn trajectory_svg(traj: &Trajectory, verdict: &StabilityVerdict) -> String {
    let rows = traj.rows();
    let t = range(rows.iter().map(|s| s.t));
    let mut body = String::new();
    let panels = [
        ("phi (rad)", Panel::new(t, range(rows.iter().map(|s| s.phi)), 0.0)),
        ("omega (rad/s)", Panel::new(t, range(rows.iter().map(|s| s.omega)), H)),
    ];
    for (k, (label, p)) in panels.iter().enumerate() {
        p.frame(&mut body, "t (s)", label);
        for j in &traj.jumps {
            p.vline(&mut body, j.t, "#888888", "", 0);
        }
        let value = |s: &gse_lvrt::sim::Sample| if k == 0 { s.phi } else { s.omega };
        // one polyline per stage so colour tracks the stage
        for stage in [Stage::PreFault, Stage::DuringFault, Stage::EarlyRecovery, Stage::LateRecovery] {
            let pts: Vec<_> = rows.iter().filter(|s| s.stage == stage).map(|s| (s.t, value(s))).collect();
            if !pts.is_empty() {
                p.polyline(&mut body, pts, COLORS[stage.number() as usize - 1]);
            }
        }
    }
    let _ = writeln!(
        body,
        r#"<text x="{}" y="16" font-size="12" text-anchor="end">{} ({:?})</text>"#,
        W - MARGIN,
        if verdict.stable { "stable" } else { "unstable" },
        verdict.reason
    );
    document(2.0 * H, &body)
}

/// Power-angle curves with the acceleration and deceleration areas of the
/// first approximation shaded, and every available critical angle marked.
pub fn eac_svg(inp: &EacInputs, cca: &CcaReport) -> Result<String, EacError> {
    let n = 200;
    let grid = |a: f64, b: f64| (0..=n).map(move |k| a + (b - a) * k as f64 / n as f64);
    let p = Panel::new((0.0, std::f64::consts::PI), (0.0, inp.u_g1.max(inp.p_m2) * 1.1), 0.0);
    let mut body = String::new();
    p.frame(&mut body, "phi (rad)", "power (pu)");

    if let Some(phi_c) = cca.phi_cr_1.value() {
        let (acc, dec) = equal_areas(inp, phi_c)?;
        let shade = |pts: Vec<(f64, f64)>, color: &str, body: &mut String| {
            let _ = writeln!(
                body,
                r#"<polygon fill="{color}" fill-opacity="0.3" stroke="none" points="{}"/>"#,
                p.points(pts)
            );
        };
        let mut a: Vec<_> = grid(inp.phi_1, phi_c).map(|x| (x, inp.u_g2 * x.sin())).collect();
        a.extend([(phi_c, inp.p_m2), (inp.phi_1, inp.p_m2)]);
        shade(a, COLORS[1], &mut body);
        let mut d: Vec<_> = grid(phi_c, inp.phi_3u).map(|x| (x, inp.u_g1 * x.sin())).collect();
        d.push((phi_c, inp.p_m2));
        shade(d, COLORS[2], &mut body);
        let _ = writeln!(
            body,
            r#"<text x="{}" y="16" font-size="11" text-anchor="end">E_ac = {acc:.6}, E_de = {dec:.6}</text>"#,
            W - MARGIN
        );
    }
    p.polyline(&mut body, grid(0.0, std::f64::consts::PI).map(|x| (x, inp.u_g1 * x.sin())), COLORS[0]);
    p.polyline(&mut body, grid(0.0, std::f64::consts::PI).map(|x| (x, inp.u_g2 * x.sin())), COLORS[3]);
    p.polyline(&mut body, [(0.0, inp.p_m2), (std::f64::consts::PI, inp.p_m2)], "black");
    p.vline(&mut body, inp.phi_1, "black", "phi_1", 0);
    p.vline(&mut body, inp.phi_3u, "black", "phi_3u", 0);
    for (k, o) in cca.approximations().into_iter().enumerate() {
        if let Some(v) = o.value() {
            p.vline(&mut body, v, COLORS[k % COLORS.len()], &format!("[{}]", k + 1), k + 1);
        }
    }
    if let Some(v) = cca.oracle.as_ref().and_then(|o| o.value()) {
        p.vline(&mut body, v, "#ff7f0e", "sim", 4);
    }
    Ok(document(H, &body))
}

/// Cell map of `map`; with `other`, cells are coloured by which of the two
/// basins hold them. SEP and UEP are marked, `overlay` is drawn on top.
pub fn basin_svg(
    map: &BasinMap,
    eq: &Equilibria,
    other: Option<&BasinMap>,
    overlay: Option<&Trajectory>,
) -> String {
    let w = map.window;
    let p = Panel::new(w.phi, w.omega, 0.0);
    let mut body = String::new();
    let cw = (p.px(w.phi.1) - p.px(w.phi.0)) / w.n_phi as f64;
    let ch = (p.py(w.omega.0) - p.py(w.omega.1)) / w.n_omega as f64;
    for j in 0..w.n_omega {
        for i in 0..w.n_phi {
            let a = map.inside(i, j);
            let b = other.map(|o| o.inside(i, j));
            let color = match (a, b) {
                (true, None) | (true, Some(true)) => COLORS[0],
                (true, Some(false)) => "#9ecae1",
                (false, Some(true)) => "#fdae6b",
                _ => continue,
            };
            let c = w.cell_center(i, j);
            let _ = writeln!(
                body,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" shape-rendering="crispEdges"/>"#,
                p.px(c.phi) - 0.5 * cw,
                p.py(c.omega) - 0.5 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    p.frame(&mut body, "phi (rad)", "omega (rad/s)");
    if let Some(t) = overlay {
        let pts: Vec<_> = t
            .rows()
            .iter()
            .filter(|s| s.phi >= w.phi.0 && s.phi <= w.phi.1 && s.omega >= w.omega.0 && s.omega <= w.omega.1)
            .map(|s| (s.phi, s.omega))
            .collect();
        p.polyline(&mut body, pts, "black");
    }
    let _ = writeln!(
        body,
        r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="white" stroke="black"/>"#,
        p.px(eq.phi_s),
        p.py(0.0)
    );
    let (ux, uy) = (p.px(eq.phi_u), p.py(0.0));
    let _ = writeln!(
        body,
        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="black" stroke-width="2"/>"#,
        ux - 4.0,
        uy - 4.0,
        ux + 4.0,
        uy + 4.0,
        ux - 4.0,
        uy + 4.0,
        ux + 4.0,
        uy - 4.0
    );
    let mut caption = format!("i_d = {}, U_g = {}", map.i_d, map.u_g);
    if let Some(o) = other {
        let _ = write!(caption, " (light orange: only i_d = {})", o.i_d);
    }
    let _ = writeln!(
        body,
        r#"<text x="{}" y="16" font-size="11" text-anchor="end">{caption}</text>"#,
        W - MARGIN
    );
    document(H, &body)
}
