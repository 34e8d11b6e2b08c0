//! Deterministic SVG figures: the predicted-location world map and the
//! log-error heatmap.

use std::fmt::Write;

use geoprobe::geodata::Dataset;
use geoprobe::metrics::{EvalReport, HeatmapGrid};
use geoprobe::{Error, Result};

pub const MAP_WIDTH: f64 = 1000.0;
pub const MAP_HEIGHT: f64 = 500.0;

/// Continent → fill color. Anything else is drawn in `OTHER_COLOR`.
pub const CONTINENT_COLORS: [(&str, &str); 7] = [
    ("Africa", "#d62728"),
    ("Antarctica", "#17becf"),
    ("Asia", "#ff7f0e"),
    ("Europe", "#1f77b4"),
    ("North America", "#2ca02c"),
    ("Oceania", "#8c564b"),
    ("South America", "#9467bd"),
];
pub const OTHER_COLOR: &str = "#7f7f7f";

pub const SCALE_LOW: [u8; 3] = [0x21, 0x66, 0xac];
pub const SCALE_MID: [u8; 3] = [0xf7, 0xf7, 0xf7];
pub const SCALE_HIGH: [u8; 3] = [0xb2, 0x18, 0x2b];

pub fn continent_color(continent: &str) -> &'static str {
    CONTINENT_COLORS
        .iter()
        .find(|(c, _)| *c == continent)
        .map_or(OTHER_COLOR, |(_, col)| col)
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}

/// Equirectangular projection onto a `width`×`height` box; points beyond the
/// valid range are pinned to the border.
pub fn project(lat: f64, lon: f64, width: f64, height: f64) -> (f64, f64) {
    let x = (lon.clamp(-180.0, 180.0) + 180.0) / 360.0 * width;
    let y = (90.0 - lat.clamp(-90.0, 90.0)) / 180.0 * height;
    (x, y)
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
}

/// One dot per evaluated location at its predicted coordinates, colored by
/// continent, with a legend and the test R² in the title.
pub fn emit_scatter_map(report: &EvalReport, dataset: &Dataset) -> Result<String> {
    if report.per_location.is_empty() {
        return Err(Error::invalid("report has no locations to plot"));
    }
    report.check_dataset(dataset)?;
    let mut rows: Vec<_> = report.per_location.iter().collect();
    rows.sort_by_key(|l| l.row_index);

    let mut out = String::new();
    header(&mut out, MAP_WIDTH, MAP_HEIGHT);
    let _ = writeln!(
        out,
        r##"<rect class="background" x="0" y="0" width="{MAP_WIDTH}" height="{MAP_HEIGHT}" fill="#f4f4f0"/>"##
    );
    for k in 1..12 {
        let x = k as f64 * MAP_WIDTH / 12.0;
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="0" x2="{x:.2}" y2="{MAP_HEIGHT}" stroke="#dddddd"/>"##);
    }
    for k in 1..6 {
        let y = k as f64 * MAP_HEIGHT / 6.0;
        let _ = writeln!(out, r##"<line x1="0" y1="{y:.2}" x2="{MAP_WIDTH}" y2="{y:.2}" stroke="#dddddd"/>"##);
    }
    for l in &rows {
        let continent = &dataset.records[l.row_index].continent;
        let (x, y) = project(l.predicted_lat, l.predicted_lon, MAP_WIDTH, MAP_HEIGHT);
        let _ = writeln!(
            out,
            r#"<circle class="dot" cx="{x:.2}" cy="{y:.2}" r="2" fill="{}" fill-opacity="0.7"/>"#,
            continent_color(continent)
        );
    }

    let mut present: Vec<&str> = rows
        .iter()
        .map(|l| dataset.records[l.row_index].continent.as_str())
        .collect();
    present.sort_unstable();
    present.dedup();
    let legend_h = 8.0 + 16.0 * present.len() as f64;
    let legend_y = MAP_HEIGHT - legend_h - 10.0;
    let _ = writeln!(
        out,
        r##"<g class="legend"><rect x="10" y="{legend_y:.2}" width="150" height="{legend_h:.2}" fill="#ffffff" fill-opacity="0.85" stroke="#999999"/>"##
    );
    for (k, name) in present.iter().enumerate() {
        let y = legend_y + 16.0 + 16.0 * k as f64;
        let label = if name.is_empty() { "(none)" } else { name };
        let _ = writeln!(
            out,
            r#"<circle cx="22" cy="{:.2}" r="4" fill="{}"/><text x="32" y="{y:.2}" font-size="12">{}</text>"#,
            y - 4.0,
            continent_color(name),
            escape(label)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text class="title" x="{:.1}" y="22" font-size="16" text-anchor="middle">{} layer {}: predicted test coordinates (R² = {:.2})</text>"#,
        MAP_WIDTH / 2.0,
        escape(&report.model_id),
        report.layer,
        report.r2_mean
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Diverging blue–white–red color for `t` in [0, 1].
pub fn diverging(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let (a, b, u) = if t <= 0.5 {
        (SCALE_LOW, SCALE_MID, t * 2.0)
    } else {
        (SCALE_MID, SCALE_HIGH, (t - 0.5) * 2.0)
    };
    let mix = |i: usize| (a[i] as f64 + (b[i] as f64 - a[i] as f64) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

pub fn hex(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

const PX_PER_DEG: f64 = 2.0;
const LEFT: f64 = 10.0;
const TOP: f64 = 34.0;
const STRIP: f64 = 24.0;
const GAP: f64 = 8.0;

/// Populated cells as colored rectangles on an equirectangular canvas, with
/// the latitude profile as a strip on the right and the longitude profile
/// along the bottom. The scale spans the cell values; the largest cell gets
/// the red endpoint.
pub fn emit_heatmap_svg(grid: &HeatmapGrid) -> Result<String> {
    if grid.cells.is_empty() {
        return Err(Error::invalid("heatmap grid has no populated cells"));
    }
    let (lo, hi) = grid
        .cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.mean_log_mse), hi.max(c.mean_log_mse))
        });
    let color = |v: f64| {
        if hi > lo {
            diverging((v - lo) / (hi - lo))
        } else {
            hex(SCALE_HIGH)
        }
    };
    let map_w = 360.0 * PX_PER_DEG;
    let map_h = 180.0 * PX_PER_DEG;
    let width = LEFT + map_w + GAP + STRIP + 10.0;
    let bar_y = TOP + map_h + GAP + STRIP + 14.0;
    let height = bar_y + 34.0;
    let cell_px = grid.cell_degrees * PX_PER_DEG;

    let mut out = String::new();
    header(&mut out, width, height);
    let _ = writeln!(
        out,
        r#"<text class="title" x="{:.1}" y="22" font-size="16" text-anchor="middle">Test log10 MSE by {}° cell</text>"#,
        LEFT + map_w / 2.0,
        grid.cell_degrees
    );
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="{LEFT}" y="{TOP}" width="{map_w}" height="{map_h}" fill="#eeeeee" stroke="#999999"/>"##
    );
    for c in &grid.cells {
        let x = LEFT + (c.lon_min + 180.0) * PX_PER_DEG;
        let y = TOP + (90.0 - c.lat_min) * PX_PER_DEG - cell_px;
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{x:.2}" y="{y:.2}" width="{cell_px:.2}" height="{cell_px:.2}" fill="{}"><title>n={} mean_log_mse={:.4}</title></rect>"#,
            color(c.mean_log_mse),
            c.n,
            c.mean_log_mse
        );
    }
    let strip_x = LEFT + map_w + GAP;
    for b in &grid.lat_profile {
        let y = TOP + (90.0 - b.min_deg) * PX_PER_DEG - cell_px;
        let _ = writeln!(
            out,
            r#"<rect class="lat-band" x="{strip_x:.2}" y="{y:.2}" width="{STRIP}" height="{cell_px:.2}" fill="{}"/>"#,
            color(b.mean_log_mse)
        );
    }
    let strip_y = TOP + map_h + GAP;
    for b in &grid.lon_profile {
        let x = LEFT + (b.min_deg + 180.0) * PX_PER_DEG;
        let _ = writeln!(
            out,
            r#"<rect class="lon-band" x="{x:.2}" y="{strip_y:.2}" width="{cell_px:.2}" height="{STRIP}" fill="{}"/>"#,
            color(b.mean_log_mse)
        );
    }
    let steps = 20;
    let step_w = map_w / 2.0 / steps as f64;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let x = LEFT + k as f64 * step_w;
        let _ = writeln!(
            out,
            r#"<rect class="scale" x="{x:.2}" y="{bar_y:.2}" width="{step_w:.2}" height="12" fill="{}"/>"#,
            diverging(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="{:.2}" font-size="11">{lo:.3}</text><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{hi:.3}</text>"#,
        bar_y + 26.0,
        LEFT + map_w / 2.0,
        bar_y + 26.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use geoprobe::geodata::parse_locations;
    use geoprobe::metrics::{grid_log_mse, report_from_predictions, GridCell};
    use ndarray::Array2;

    fn dataset(points: &[(f64, f64)]) -> Dataset {
        let mut csv = String::from("name,country,continent,latitude,longitude,population\n");
        for (k, (lat, lon)) in points.iter().enumerate() {
            csv.push_str(&format!("p{k},X,Asia,{lat},{lon},\n"));
        }
        parse_locations(csv.as_bytes()).unwrap()
    }

    fn grid(values: &[f64]) -> HeatmapGrid {
        HeatmapGrid {
            cell_degrees: 30.0,
            lat_bands: 6,
            lon_bands: 12,
            cells: values
                .iter()
                .enumerate()
                .map(|(k, &v)| GridCell {
                    lat_band: 0,
                    lon_band: k,
                    lat_min: -90.0,
                    lon_min: -180.0 + 30.0 * k as f64,
                    n: 1,
                    mean_log_mse: v,
                })
                .collect(),
            lat_profile: vec![],
            lon_profile: vec![],
        }
    }

    fn fills(svg: &str, class: &str) -> Vec<String> {
        let marker = format!(r#"class="{class}""#);
        svg.lines()
            .filter(|l| l.contains(&marker))
            .map(|l| {
                let start = l.find("fill=\"").unwrap() + 6;
                l[start..start + 7].to_string()
            })
            .collect()
    }

    #[test]
    fn origin_projects_to_center() {
        assert_eq!(project(0.0, 0.0, MAP_WIDTH, MAP_HEIGHT), (500.0, 250.0));
        assert_eq!(project(90.0, -180.0, MAP_WIDTH, MAP_HEIGHT), (0.0, 0.0));
        assert_eq!(project(-120.0, 400.0, MAP_WIDTH, MAP_HEIGHT), (1000.0, 500.0));
    }

    #[test]
    fn single_prediction_at_origin_is_centered() {
        let ds = dataset(&[(10.0, 20.0), (-10.0, -20.0)]);
        let pred = Array2::from_shape_vec((2, 2), vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        let report = report_from_predictions("m", 3, &ds, &[0, 1], pred.view()).unwrap();
        let svg = emit_scatter_map(&report, &ds).unwrap();
        assert!(svg.contains(r#"<circle class="dot" cx="500.00" cy="250.00""#));
        assert!(svg.contains("R² = "));
        assert_eq!(svg, emit_scatter_map(&report, &ds).unwrap());
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let ds = dataset(&[(0.0, 0.0)]);
        let report = geoprobe::metrics::EvalReport {
            model_id: "m".into(),
            layer: 0,
            locations_digest: ds.source_digest,
            per_location: vec![],
            r2_lat: 0.0,
            r2_lon: 0.0,
            r2_mean: 0.0,
            mse_overall: 0.0,
        };
        assert!(emit_scatter_map(&report, &ds).is_err());
        assert!(emit_heatmap_svg(&grid(&[])).is_err());
    }

    #[test]
    fn one_cell_one_rectangle() {
        let ds = dataset(&[(12.0, 34.0), (14.0, 36.0)]);
        let pred = Array2::from_shape_vec((2, 2), vec![13.0, 35.0, 15.0, 30.0]).unwrap();
        let report = report_from_predictions("m", 0, &ds, &[0, 1], pred.view()).unwrap();
        let g = grid_log_mse(&report, &ds, 10.0).unwrap();
        let svg = emit_heatmap_svg(&g).unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 1);
        // lon 30..40, lat 10..20 at two pixels per degree
        assert!(svg.contains(r#"class="cell" x="430.00" y="174.00" width="20.00" height="20.00""#));
    }

    #[test]
    fn scale_endpoints_and_ties() {
        let svg = emit_heatmap_svg(&grid(&[1.0, 3.0, 3.0, -2.0])).unwrap();
        let f = fills(&svg, "cell");
        assert_eq!(f[1], hex(SCALE_HIGH));
        assert_eq!(f[1], f[2]);
        assert_eq!(f[3], hex(SCALE_LOW));
        assert_eq!(diverging(0.5), hex(SCALE_MID));
    }

    #[test]
    fn legend_names_are_escaped() {
        assert_eq!(escape("A & <B>"), "A &amp; &lt;B&gt;");
        assert_eq!(continent_color("Atlantis"), OTHER_COLOR);
    }
}
