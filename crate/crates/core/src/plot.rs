//! Self-contained SVG renderings of confusion matrices and sweep curves.

use std::fmt::Write as _;

use crate::evaluation::ConfusionMatrix;

const CELL: usize = 28;
const MARGIN: usize = 60;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Row display order pairing clusters with classes greedily by largest
/// intersection. Matched rows come first in column order; unmatched rows
/// follow by id. A perfect clustering renders as a diagonal.
pub fn match_rows(cm: &ConfusionMatrix) -> Vec<usize> {
    let rows = cm.counts.len();
    let cols = cm.col_ids.len();
    let mut cells: Vec<(usize, usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| (cm.counts[r][c], r, c))
        .filter(|&(n, _, _)| n > 0)
        .collect();
    cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut row_for_col: Vec<Option<usize>> = vec![None; cols];
    let mut used = vec![false; rows];
    for (_, r, c) in cells {
        if !used[r] && row_for_col[c].is_none() {
            used[r] = true;
            row_for_col[c] = Some(r);
        }
    }
    let mut order: Vec<usize> = row_for_col.into_iter().flatten().collect();
    order.extend((0..rows).filter(|&r| !used[r]));
    order
}

/// Heatmap with one `rect` per cell, shaded by the cell's share of its row
/// and labeled with the raw count.
pub fn confusion_heatmap_svg(cm: &ConfusionMatrix, title: &str) -> String {
    let order = match_rows(cm);
    let cols = cm.col_ids.len();
    let width = MARGIN + cols * CELL + 20;
    let height = MARGIN + order.len() * CELL + 20;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="16" font-size="12">{}</text>"#, escape(title));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10">class</text>"#, MARGIN + cols * CELL / 2, MARGIN - 22);
    for (c, id) in cm.col_ids.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{id}</text>"#,
            MARGIN + c * CELL + CELL / 2,
            MARGIN - 6
        );
    }
    let _ = writeln!(svg, r#"<text x="4" y="{}" font-size="10">cluster</text>"#, MARGIN - 6);
    for (y, &r) in order.iter().enumerate() {
        let row_total: usize = cm.counts[r].iter().sum();
        let top = MARGIN + y * CELL;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 6,
            top + CELL / 2 + 3,
            cm.row_ids[r]
        );
        for (c, &n) in cm.counts[r].iter().enumerate() {
            let share = if row_total == 0 { 0.0 } else { n as f64 / row_total as f64 };
            let shade = (255.0 * (1.0 - share)).round() as u8;
            let ink = if share > 0.5 { "#ffffff" } else { "#000000" };
            let left = MARGIN + c * CELL;
            let _ = writeln!(
                svg,
                r##"<rect class="cell" x="{left}" y="{top}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},255)" stroke="#cccccc"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text class="value" x="{}" y="{}" text-anchor="middle" fill="{ink}">{n}</text>"#,
                left + CELL / 2,
                top + CELL / 2 + 3
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line plot with the y axis fixed to `[0, 1]`.
pub fn line_plot_svg(title: &str, x_label: &str, series: &[Series<'_>]) -> String {
    let (w, h, left, top, plot_w, plot_h) = (480.0, 320.0, 50.0, 30.0, 400.0, 240.0);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (x_min, x_max) = if x_min.is_finite() { (x_min, x_max) } else { (0.0, 1.0) };
    let span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let px = |x: f64| left + (x - x_min) / span * plot_w;
    let py = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(svg, r#"<text x="{left}" y="16" font-size="12">{}</text>"#, escape(title));
    let _ =
        writeln!(svg, r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#, top + plot_h, left + plot_w);
    for tick in 0..=4 {
        let y = tick as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.2}</text>"#, left - 4.0, py(y) + 3.0);
    }
    let mut ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x}</text>"#, px(x), top + plot_h + 14.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 30.0,
        escape(x_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            left + plot_w - 60.0,
            top + 12.0 + 14.0 * i as f64,
            escape(s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(counts: Vec<Vec<usize>>) -> ConfusionMatrix {
        let cols = counts[0].len();
        ConfusionMatrix { row_ids: (0..counts.len()).collect(), col_ids: (0..cols).collect(), counts }
    }

    #[test]
    fn permuted_perfect_clustering_is_diagonal() {
        let m = cm(vec![vec![0, 0, 4], vec![3, 0, 0], vec![0, 5, 0]]);
        assert_eq!(match_rows(&m), vec![1, 2, 0]);
    }

    #[test]
    fn surplus_rows_trail() {
        let m = cm(vec![vec![1, 0], vec![0, 0], vec![2, 0], vec![0, 3]]);
        assert_eq!(match_rows(&m), vec![2, 3, 0, 1]);
    }

    #[test]
    fn heatmap_has_a_rect_per_cell() {
        let m = cm(vec![vec![1, 2, 0], vec![0, 0, 7]]);
        let svg = confusion_heatmap_svg(&m, "a & b");
        assert_eq!(svg.matches("<rect ").count(), 6);
        assert!(svg.contains(">7</text>"));
        assert!(svg.contains("a &amp; b"));
    }
}
