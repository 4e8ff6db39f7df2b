//! SVG renderings of encoding matrices and difficulty/coverage heatmaps.

use std::fmt::Write as _;

use crate::grid::{BlockGrid, BlockType};
use crate::metrics::{Histogram2D, BINS};

const CELL: usize = 20;

pub fn block_color(b: BlockType) -> &'static str {
    match b {
        BlockType::Free => "#ffffff",
        BlockType::Road => "#7f7f7f",
        BlockType::Obstacle => "#262626",
        BlockType::ObstStall3 => "#9ecae1",
        BlockType::Stall3 => "#3182bd",
        BlockType::Stall4 => "#31a354",
        BlockType::Stall6 => "#e6550d",
        BlockType::Entrance => "#fdd835",
        BlockType::Exit => "#d81b60",
        BlockType::ObstStall4 => "#a1d99b",
    }
}

/// Grid of `class="cell"` rectangles with a legend of every block code.
pub fn render_matrix_svg(g: &BlockGrid) -> String {
    let grid_w = g.width() * CELL;
    let legend_y = g.height() * CELL + 10;
    let height = legend_y + BlockType::ALL.len() * 16 + 10;
    let width = grid_w.max(180);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\">\n"
    );
    for (p, b) in g.iter() {
        let _ = writeln!(
            out,
            "  <rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#cccccc\"><title>{} {}</title></rect>",
            p.col * CELL,
            p.row * CELL,
            block_color(b),
            b.code(),
            b.name()
        );
    }
    for (i, b) in BlockType::ALL.iter().enumerate() {
        let y = legend_y + i * 16;
        let _ = writeln!(
            out,
            "  <rect class=\"legend\" x=\"0\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{}\" stroke=\"#000000\"/>",
            block_color(*b)
        );
        let _ = writeln!(
            out,
            "  <text x=\"16\" y=\"{}\" font-size=\"11\">{} {}</text>",
            y + 10,
            b.code(),
            b.name()
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap with difficulty on x and coverage on y; non-empty bins are drawn
/// as `class="bin"` rectangles shaded by count.
pub fn render_histogram_svg(h: &Histogram2D) -> String {
    let (margin, cell) = (40, 30);
    let side = BINS * cell;
    let max = h.counts.iter().flatten().copied().max().unwrap_or(0).max(1);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\">\n",
        side + 2 * margin
    );
    let _ = writeln!(
        out,
        "  <rect class=\"frame\" x=\"{margin}\" y=\"{margin}\" width=\"{side}\" height=\"{side}\" fill=\"none\" stroke=\"#000000\"/>"
    );
    for d in 0..BINS {
        for c in 0..BINS {
            let n = h.counts[d][c];
            if n == 0 {
                continue;
            }
            let shade = 255 - (215 * n as usize / max as usize) as u8;
            let _ = writeln!(
                out,
                "  <rect class=\"bin\" x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb(255,{shade},{shade})\"><title>{n}</title></rect>",
                margin + d * cell,
                margin + (BINS - 1 - c) * cell
            );
        }
    }
    for i in 0..=BINS {
        let v = i as f64 / BINS as f64;
        let _ = writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\">{v:.1}</text>",
            margin + i * cell,
            margin + side + 12
        );
        let _ = writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"end\">{v:.1}</text>",
            margin - 4,
            margin + side - i * cell + 3
        );
    }
    let _ = writeln!(
        out,
        "  <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">difficulty</text>",
        margin + side / 2,
        margin + side + 30
    );
    let _ = writeln!(
        out,
        "  <text x=\"12\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 12 {})\">coverage</text>",
        margin + side / 2,
        margin + side / 2
    );
    out.push_str("</svg>\n");
    out
}
