//! CSV tables and SVG heatmaps for a [`GridResult`].
//!
//! Output bytes depend on the result only: rows follow sweep order, floats
//! are printed with 17 significant digits and the SVGs contain no
//! timestamps or generator ids.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::FilterId;
use crate::experiment::GridResult;
use crate::{BenchError, Result};

pub const CELLS_HEADER: [&str; 12] = [
    "scenario",
    "dim",
    "rho",
    "filter",
    "n_particles",
    "steps",
    "runs",
    "rmse_mean",
    "rmse_std",
    "degenerate_steps",
    "likelihood_evals",
    "seed",
];

pub const WINPROB_HEADER: [&str; 5] = ["dim", "rho", "filter_a", "filter_b", "p_a_less_b"];

/// Shown in `metadata.toml` and the CLI summary.
pub const AGGREGATION_NOTE: &str = "rmse is computed per run over time steps; rmse_mean and \
rmse_std are the sample mean and standard deviation across runs. likelihood_evals counts one \
evaluation per particle per step for the particle filter and one per particle per noise \
coordinate plus one for the time update for coordinate filters.";

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `cells.csv`, `metadata.toml` and, when the grid has at least two
/// filters, `winprob.csv` plus one heatmap per unordered filter pair.
/// Returns the written paths.
pub fn emit_results(result: &GridResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();

    let cells = out_dir.join("cells.csv");
    write_csv(
        &cells,
        &CELLS_HEADER,
        result.cells.iter().map(|c| {
            vec![
                c.scenario.as_str().to_string(),
                c.dim.to_string(),
                float(c.rho),
                c.filter.to_string(),
                c.n_particles.to_string(),
                c.steps.to_string(),
                c.runs.to_string(),
                float(c.rmse_mean),
                float(c.rmse_std),
                c.degenerate_steps.to_string(),
                c.likelihood_evals.to_string(),
                c.seed.to_string(),
            ]
        }),
    )?;
    written.push(cells);

    let meta = out_dir.join("metadata.toml");
    let mut text = String::new();
    for line in textwrap(AGGREGATION_NOTE, 76) {
        let _ = writeln!(text, "# {line}");
    }
    text.push_str(&result.config.to_toml_string());
    fs::write(&meta, text).map_err(io_err(&meta))?;
    written.push(meta);

    let pairs = result.filter_pairs();
    if pairs.is_empty() {
        return Ok(written);
    }

    let winprob = out_dir.join("winprob.csv");
    write_csv(
        &winprob,
        &WINPROB_HEADER,
        result.win_probabilities.iter().map(|w| {
            vec![
                w.dim.to_string(),
                float(w.rho),
                w.filter_a.to_string(),
                w.filter_b.to_string(),
                float(w.p_a_less_b),
            ]
        }),
    )?;
    written.push(winprob);

    for (earlier, later) in pairs {
        let path = out_dir.join(format!("winprob_{later}_vs_{earlier}.svg"));
        fs::write(&path, heatmap_svg(result, later, earlier)).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn textwrap(text: &str, width: usize) -> Vec<String> {
    let mut lines = vec![String::new()];
    for word in text.split_whitespace() {
        let line = lines.last_mut().expect("non-empty");
        if !line.is_empty() && line.len() + 1 + word.len() > width {
            lines.push(word.to_string());
        } else {
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(word);
        }
    }
    lines
}

/// Diverging blue–white–red ramp: 0 → blue, 0.5 → white, 1 → red.
pub fn ramp(p: f64) -> (u8, u8, u8) {
    const LOW: (f64, f64, f64) = (33.0, 102.0, 172.0);
    const HIGH: (f64, f64, f64) = (178.0, 24.0, 43.0);
    let p = if p.is_nan() { 0.5 } else { p.clamp(0.0, 1.0) };
    let (end, t) = if p < 0.5 {
        (LOW, (0.5 - p) * 2.0)
    } else {
        (HIGH, (p - 0.5) * 2.0)
    };
    let mix = |c: f64| (255.0 + (c - 255.0) * t).round() as u8;
    (mix(end.0), mix(end.1), mix(end.2))
}

/// Heatmap of `P(error_a < error_b)` with dimension across and correlation
/// down.
pub fn heatmap_svg(result: &GridResult, a: FilterId, b: FilterId) -> String {
    let dims = result.config.effective_dims();
    let rhos = result.config.effective_rhos();
    let (cell_w, cell_h, left, top) = (56, 28, 64, 48);
    let width = left + cell_w * dims.len() + 16;
    let height = top + cell_h * rhos.len() + 40;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="20" font-size="13">P(error {a} &lt; error {b})</text>"#
    );
    for (j, rho) in rhos.iter().enumerate() {
        let y = top + j * cell_h;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{rho:.2}</text>"#,
            left - 6,
            y + cell_h / 2 + 4
        );
        for (i, &dim) in dims.iter().enumerate() {
            let x = left + i * cell_w;
            let p = result.win_probability(dim, *rho, a, b).unwrap_or(f64::NAN);
            let (r, g, bl) = ramp(p);
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="#{r:02x}{g:02x}{bl:02x}" stroke="#ffffff"/>"##
            );
            let label = if p.is_nan() {
                "-".to_string()
            } else {
                format!("{p:.2}")
            };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{label}</text>"#,
                x + cell_w / 2,
                y + cell_h / 2 + 4
            );
        }
    }
    let base = top + cell_h * rhos.len() + 16;
    for (i, dim) in dims.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{base}" text-anchor="middle">{dim}</text>"#,
            left + i * cell_w + cell_w / 2
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">D</text>"#,
        left + cell_w * dims.len() / 2,
        base + 16
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">rho</text>"#,
        top + cell_h * rhos.len() / 2,
        top + cell_h * rhos.len() / 2
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_is_centered_at_one_half() {
        assert_eq!(ramp(0.5), (255, 255, 255));
        assert_eq!(ramp(0.0), (33, 102, 172));
        assert_eq!(ramp(1.0), (178, 24, 43));
        assert_eq!(ramp(f64::NAN), (255, 255, 255));
    }

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn wrapping_keeps_words() {
        let lines = textwrap("aa bb cc dd", 5);
        assert_eq!(lines, vec!["aa bb", "cc dd"]);
    }
}
