//! SVG and PGM pictures of one level of a realization.
//!
//! Row 0 is drawn at the bottom, matching unit-square coordinates; image
//! formats count rows from the top, so y is flipped on output.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::carpet::Realization;
use crate::error::{Error, Result};
use crate::grid::Cell;
use crate::io::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Svg,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const BLACK: Rgb = Rgb(0, 0, 0);
    pub const WHITE: Rgb = Rgb(255, 255, 255);

    fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    fn gray(self) -> u8 {
        (0.299 * self.0 as f64 + 0.587 * self.1 as f64 + 0.114 * self.2 as f64).round() as u8
    }
}

impl FromStr for Rgb {
    type Err = Error;

    /// Parses `#rrggbb`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("colour '{s}' is not of the form #rrggbb"));
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6)
            .ok_or_else(bad)?;
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderSpec {
    pub level: u32,
    pub format: ImageFormat,
    /// Image width in pixels; the picture is square.
    pub width_px: u32,
    pub fill: Rgb,
    pub empty: Rgb,
    /// Outline the square and its level-1 subdivision.
    pub draw_gridlines: bool,
}

impl RenderSpec {
    pub fn new(level: u32, format: ImageFormat) -> Self {
        RenderSpec {
            level,
            format,
            width_px: 800,
            fill: Rgb::BLACK,
            empty: Rgb::WHITE,
            draw_gridlines: false,
        }
    }

    fn validate(&self, r: &Realization) -> Result<(u64, u64)> {
        if !(1..=r.depth()).contains(&self.level) {
            return Err(Error::domain(format!(
                "render level {} outside 1..={}",
                self.level,
                r.depth()
            )));
        }
        let (w, h) = r.params().grid_size(self.level)?;
        if self.width_px == 0 {
            return Err(Error::domain("image width must be positive"));
        }
        if self.format == ImageFormat::Pgm && (self.width_px as u64) < w {
            return Err(Error::domain(format!(
                "width {} px is narrower than the {w} columns of level {}",
                self.width_px, self.level
            )));
        }
        Ok((w, h))
    }
}

pub fn render_svg(r: &Realization, spec: &RenderSpec) -> Result<String> {
    let (w, h) = spec.validate(r)?;
    let (wf, hf) = (w as f64, h as f64);
    let cells = r.level(spec.level);
    let mut s = String::with_capacity(64 * cells.len() + 512);
    let px = spec.width_px;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{px}" height="{px}" viewBox="0 0 1 1" preserveAspectRatio="none">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="1" height="1" fill="{}"/>"#,
        spec.empty.hex()
    );
    let _ = writeln!(
        s,
        r#"<g fill="{}" shape-rendering="crispEdges">"#,
        spec.fill.hex()
    );
    let (cw, ch) = (1.0 / wf, 1.0 / hf);
    for c in cells {
        let x = c.col as f64 / wf;
        let y = (h - c.row - 1) as f64 / hf;
        let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}"/>"#);
    }
    s.push_str("</g>\n");
    if spec.draw_gridlines {
        let (n, m) = (r.params().n(), r.params().m());
        s.push_str(r##"<path fill="none" stroke="#808080" stroke-width="1" vector-effect="non-scaling-stroke" d="M0 0H1V1H0Z"##);
        for i in 1..n {
            let _ = write!(s, " M{} 0V1", i as f64 / n as f64);
        }
        for j in 1..m {
            let _ = write!(s, " M0 {}H1", j as f64 / m as f64);
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Binary PGM. A pixel is filled when the cell under its centre is selected;
/// cells shorter than a pixel may be skipped vertically.
pub fn render_pgm(r: &Realization, spec: &RenderSpec) -> Result<Vec<u8>> {
    let (w, h) = spec.validate(r)?;
    let cells = r.level(spec.level);
    let size = spec.width_px as u64;
    let (fill, empty) = (spec.fill.gray(), spec.empty.gray());
    let mut out = format!("P5\n{size} {size}\n255\n").into_bytes();
    out.reserve((size * size) as usize);
    for py in 0..size {
        // Centre of pixel row py, measured from the bottom edge.
        let row = ((2 * (size - py) - 1) as u128 * h as u128 / (2 * size as u128)) as u64;
        for px in 0..size {
            let col = ((2 * px + 1) as u128 * w as u128 / (2 * size as u128)) as u64;
            let on = cells.binary_search(&Cell::new(col, row)).is_ok();
            out.push(if on { fill } else { empty });
        }
    }
    Ok(out)
}

/// Renders level `spec.level` of `r` to `out`, replacing it atomically.
pub fn render(r: &Realization, spec: &RenderSpec, out: &Path) -> Result<()> {
    let bytes = match spec.format {
        ImageFormat::Svg => render_svg(r, spec)?.into_bytes(),
        ImageFormat::Pgm => render_pgm(r, spec)?,
    };
    write_atomic(out, &bytes)
}
