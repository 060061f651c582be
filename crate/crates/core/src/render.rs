//! SVG rendering of a cluster and the boundary of its convex hull.
//!
//! Discs are filled with a hue that runs from red (first disc) to violet (last disc). The hull
//! boundary is the polygon of extremal centers pushed out by one radius: an arc around every
//! extremal disc joined by segments parallel to the polygon edges. Model `y` points up.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Write;

use crate::geometry::{Vec2, DISC_RADIUS};
use crate::hull::{DiscStore, HullState};

/// Hue of the newest disc, in degrees.
const HUE_SPAN: f64 = 270.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    /// Fraction of the larger bounding-box side added on every side.
    pub margin: f64,
    pub stroke_width: f64,
    pub draw_discs: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            margin: 0.05,
            stroke_width: 0.12,
            draw_discs: true,
        }
    }
}

fn svg_point(p: Vec2) -> (f64, f64) {
    (p.x, -p.y)
}

fn fmt(x: f64) -> String {
    // trims "-0.0000" and trailing zeros for compact, stable output
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        other => other.to_string(),
    }
}

/// Path data of the hull boundary. Arcs longer than a quarter turn are split so every arc
/// command is unambiguous.
pub fn hull_path(hull: &HullState) -> String {
    let pts = hull.vertices();
    let k = pts.len();
    let mut d = String::new();
    let on_circle = |c: Vec2, phi: f64| svg_point(c + Vec2::from_angle(phi) * DISC_RADIUS);
    let mut first = true;
    for (i, &p) in pts.iter().enumerate().take(k) {
        let (lo, _) = hull.interval(i);
        let sweep = if k == 1 { TAU } else { hull.arc_measure(i) };
        let (x0, y0) = on_circle(p, lo);
        if first {
            let _ = write!(d, "M{} {}", fmt(x0), fmt(y0));
            first = false;
        } else {
            let _ = write!(d, " L{} {}", fmt(x0), fmt(y0));
        }
        let pieces = ((sweep / FRAC_PI_2).ceil() as usize).max(1);
        for j in 1..=pieces {
            let phi = lo + sweep * j as f64 / pieces as f64;
            let (x, y) = on_circle(p, phi);
            // counterclockwise in model coordinates is sweep-flag 0 once y is flipped
            let _ = write!(
                d,
                " A{r} {r} 0 0 0 {} {}",
                fmt(x),
                fmt(y),
                r = fmt(DISC_RADIUS)
            );
        }
    }
    d.push_str(" Z");
    d
}

/// Full SVG document for the given discs and hull.
pub fn render_svg(discs: &DiscStore, hull: &HullState, opts: RenderOptions) -> String {
    let (mut lo, mut hi) = (
        Vec2::new(f64::INFINITY, f64::INFINITY),
        Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for disc in discs.iter() {
        let c = disc.center;
        lo = Vec2::new(lo.x.min(c.x), lo.y.min(c.y));
        hi = Vec2::new(hi.x.max(c.x), hi.y.max(c.y));
    }
    lo = lo - Vec2::new(DISC_RADIUS, DISC_RADIUS);
    hi += Vec2::new(DISC_RADIUS, DISC_RADIUS);
    let pad = opts.margin * (hi.x - lo.x).max(hi.y - lo.y);
    let (vx, vy) = (lo.x - pad, -hi.y - pad);
    let (vw, vh) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);

    let max_birth = discs.iter().map(|d| d.birth).max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
        fmt(vx),
        fmt(vy),
        fmt(vw),
        fmt(vh),
        (800.0 * vh / vw).round().max(1.0)
    );
    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#, fmt(vx), fmt(vy), fmt(vw), fmt(vh));
    if opts.draw_discs {
        let _ = writeln!(s, r#"<g stroke="none">"#);
        for disc in discs.iter() {
            let (x, y) = svg_point(disc.center);
            let hue = HUE_SPAN * disc.birth as f64 / max_birth;
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="{}" fill="hsl({:.1},85%,50%)"/>"#,
                fmt(x),
                fmt(y),
                fmt(DISC_RADIUS),
                hue
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="black" stroke-width="{}"/>"#,
        hull_path(hull),
        fmt(opts.stroke_width)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::build_hull;

    #[test]
    fn number_format_is_compact() {
        assert_eq!(fmt(1.0), "1");
        assert_eq!(fmt(-0.00001), "0");
        assert_eq!(fmt(0.25), "0.25");
        assert_eq!(fmt(-1.5), "-1.5");
    }

    #[test]
    fn single_disc_is_a_closed_circle() {
        let discs = DiscStore::single();
        let hull = build_hull(&discs.centers()).unwrap();
        let d = hull_path(&hull);
        assert_eq!(d.matches(" A").count(), 4);
        assert!(!d.contains(" L"));
        let svg = render_svg(&discs, &hull, RenderOptions::default());
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn two_discs_have_two_segments() {
        let discs = DiscStore::from_centers(&[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
        let hull = build_hull(&discs.centers()).unwrap();
        let d = hull_path(&hull);
        assert_eq!(d.matches(" L").count(), 1);
        assert_eq!(d.matches(" A").count(), 4);
        assert!(d.ends_with('Z'));
    }
}
