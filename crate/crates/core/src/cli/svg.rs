//! Deterministic SVG emitters: class-colored scatter plots for embeddings
//! and paired heat maps for reconstructions.
//!
//! Everything is formatted with fixed decimal places, so the same inputs
//! always produce byte-identical output, which makes golden-file and
//! determinism tests possible without an image dependency.

use crate::error::{Error, Result};
use crate::synth::{EventLabel, COLS, ROWS};
use crate::tsne::Embedding;

/// Fixed plotting color per class.
pub fn class_color(label: EventLabel) -> &'static str {
    match label {
        EventLabel::Muon => "#e41a1c",
        EventLabel::Flasher => "#377eb8",
        EventLabel::IbdPrompt => "#4daf4a",
        EventLabel::IbdDelay => "#984ea3",
        EventLabel::Other => "#ff7f00",
    }
}

/// Map a value in [0, 1] onto a dark-to-hot color ramp.
fn heat_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    // piecewise-linear ramp through four anchors
    const ANCHORS: [(f64, [u8; 3]); 4] = [
        (0.0, [8, 8, 40]),
        (0.35, [120, 30, 110]),
        (0.7, [235, 105, 40]),
        (1.0, [252, 250, 160]),
    ];
    let mut lo = ANCHORS[0];
    let mut hi = ANCHORS[ANCHORS.len() - 1];
    for pair in ANCHORS.windows(2) {
        if v >= pair[0].0 && v <= pair[1].0 {
            lo = pair[0];
            hi = pair[1];
            break;
        }
    }
    let t = if hi.0 > lo.0 {
        (v - lo.0) / (hi.0 - lo.0)
    } else {
        0.0
    };
    let mix = |a: u8, b: u8| -> u8 { (a as f64 + t * (b as f64 - a as f64)).round() as u8 };
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(lo.1[0], hi.1[0]),
        mix(lo.1[1], hi.1[1]),
        mix(lo.1[2], hi.1[2])
    )
}

/// Scatter plot of a labeled embedding: one `<circle>` per point, a
/// legend with the five classes, fixed 720x520 canvas.
pub fn scatter_svg(embedding: &Embedding, title: &str) -> Result<String> {
    if embedding.dims != 2 {
        return Err(Error::Config("scatter plots need a 2-dim embedding".into()));
    }
    if embedding.labels().len() != embedding.len() {
        return Err(Error::Data("embedding has no companion labels".into()));
    }
    let (width, height) = (720.0, 520.0);
    let (left, right, top, bottom) = (50.0, 150.0, 40.0, 40.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for i in 0..embedding.len() {
        let p = embedding.point(i);
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    if !min_x.is_finite() {
        return Err(Error::Data("cannot plot an empty embedding".into()));
    }
    let span_x = (max_x - min_x).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        left + plot_w / 2.0
    ));
    svg.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#888888\"/>\n"
    ));

    for i in 0..embedding.len() {
        let p = embedding.point(i);
        let x = left + (p[0] - min_x) / span_x * plot_w;
        let y = top + plot_h - (p[1] - min_y) / span_y * plot_h;
        svg.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.75\"/>\n",
            class_color(embedding.labels()[i])
        ));
    }

    let legend_x = width - right + 14.0;
    for (i, &label) in EventLabel::ALL.iter().enumerate() {
        let y = top + 14.0 + i as f64 * 22.0;
        svg.push_str(&format!(
            "<rect x=\"{legend_x:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            y - 10.0,
            class_color(label)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
            legend_x + 18.0,
            label.name()
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// One raw/reconstruction pair for the heat-map renderer.
pub struct ReconstructionPanel {
    /// Preprocessed input image, 192 values in [0, 1].
    pub original: Vec<f64>,
    /// Decoder output, 192 values.
    pub reconstruction: Vec<f64>,
    pub caption: String,
}

/// Render raw-above-reconstruction 8x24 heat maps on a shared [0, 1]
/// color scale, one column per event.
pub fn reconstruction_svg(panels: &[ReconstructionPanel]) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::Data("no events selected".into()));
    }
    for panel in panels {
        if panel.original.len() != ROWS * COLS || panel.reconstruction.len() != ROWS * COLS {
            return Err(Error::Shape("panels need 192-value images".into()));
        }
    }
    let cell = 13.0;
    let grid_w = COLS as f64 * cell;
    let grid_h = ROWS as f64 * cell;
    let margin = 20.0;
    let gap = 26.0;
    let panel_w = grid_w + margin;
    let panel_h = 2.0 * grid_h + gap + 2.0 * margin + 16.0;
    let width = margin + panels.len() as f64 * panel_w;
    let height = panel_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    let draw_grid = |svg: &mut String, values: &[f64], x0: f64, y0: f64| {
        for r in 0..ROWS {
            for c in 0..COLS {
                let v = values[r * COLS + c];
                svg.push_str(&format!(
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"{}\"/>\n",
                    x0 + c as f64 * cell,
                    y0 + r as f64 * cell,
                    heat_color(v)
                ));
            }
        }
    };

    for (i, panel) in panels.iter().enumerate() {
        let x0 = margin + i as f64 * panel_w;
        let y_raw = margin + 14.0;
        let y_recon = y_raw + grid_h + gap;
        svg.push_str(&format!(
            "<text x=\"{x0:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            margin + 2.0,
            panel.caption
        ));
        draw_grid(&mut svg, &panel.original, x0, y_raw);
        draw_grid(&mut svg, &panel.reconstruction, x0, y_recon);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Minimal XML well-formedness check used by the format tests: tags
/// balance and attributes are quoted.
pub fn is_well_formed_xml(text: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let Some(end_rel) = rest[start..].find('>') else {
            return false;
        };
        let tag = &rest[start + 1..start + end_rel];
        rest = &rest[start + end_rel + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {}
                _ => return false,
            }
        } else if tag.ends_with('/') {
            // self-closing
        } else {
            let name = tag.split_whitespace().next().unwrap_or("");
            if name.is_empty() {
                return false;
            }
            stack.push(name.to_string());
        }
    }
    stack.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_embedding(n: usize) -> Embedding {
        let coords: Vec<f64> = (0..2 * n).map(|i| (i as f64) * 0.37 - 3.0).collect();
        let labels: Vec<EventLabel> = (0..n)
            .map(|i| EventLabel::from_index(i % 5).unwrap())
            .collect();
        Embedding::new(2, coords)
            .unwrap()
            .with_labels(labels)
            .unwrap()
    }

    #[test]
    fn scatter_has_one_circle_per_point_and_is_well_formed() {
        let emb = sample_embedding(17);
        let svg = scatter_svg(&emb, "feature map").unwrap();
        assert_eq!(svg.matches("<circle").count(), 17);
        assert!(is_well_formed_xml(&svg));
    }

    #[test]
    fn scatter_output_is_deterministic() {
        let emb = sample_embedding(9);
        assert_eq!(
            scatter_svg(&emb, "t").unwrap(),
            scatter_svg(&emb, "t").unwrap()
        );
    }

    #[test]
    fn reconstruction_panels_have_384_cells_each() {
        let panel = ReconstructionPanel {
            original: (0..192).map(|i| i as f64 / 191.0).collect(),
            reconstruction: vec![0.5; 192],
            caption: "event 0".into(),
        };
        let svg = reconstruction_svg(&[panel]).unwrap();
        // two 8x24 grids = 384 cells, plus the background rect
        assert_eq!(svg.matches("<rect").count(), 384 + 1);
        assert!(is_well_formed_xml(&svg));
    }

    #[test]
    fn heat_colors_are_clamped_and_hex() {
        for v in [-1.0, 0.0, 0.33, 0.66, 1.0, 2.0] {
            let c = heat_color(v);
            assert_eq!(c.len(), 7);
            assert!(c.starts_with('#'));
        }
        assert_eq!(heat_color(-5.0), heat_color(0.0));
        assert_eq!(heat_color(5.0), heat_color(1.0));
    }

    #[test]
    fn class_colors_are_distinct() {
        let mut seen = std::collections::BTreeSet::new();
        for &l in &EventLabel::ALL {
            seen.insert(class_color(l));
        }
        assert_eq!(seen.len(), 5);
    }
}
