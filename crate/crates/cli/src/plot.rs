//! Minimal SVG line charts for loss curves.

use std::fmt::Write;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

/// Loss against epoch on a log10 axis. Non-positive or non-finite points
/// are skipped.
pub fn loss_svg(series: &[Series<'_>], title: &str, stamp: &str) -> String {
    let logs = |s: &Series<'_>| -> Vec<(usize, f64)> {
        s.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite() && **v > 0.0)
            .map(|(i, v)| (i + 1, v.log10()))
            .collect()
    };
    let pts: Vec<Vec<(usize, f64)>> = series.iter().map(logs).collect();
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2);
    let (mut lo, mut hi) =
        pts.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 0.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
    let x = |e: usize| PAD + (e - 1) as f64 / (n - 1) as f64 * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">"#);
    let _ = writeln!(s, "<!-- {} -->", stamp.trim_start_matches("# "));
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#, H - PAD, W - PAD);
    for k in lo as i32..=hi as i32 {
        let yy = y(k as f64);
        let _ = writeln!(s, r##"<line x1="{PAD}" y1="{yy:.2}" x2="{}" y2="{yy:.2}" stroke="#ddd"/>"##, W - PAD);
        let _ =
            writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">1e{k}</text>"#, PAD - 4.0, yy + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">epoch</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">1</text>"#, PAD, H - PAD + 14.0);
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{n}</text>"#, W - PAD, H - PAD + 14.0);
    for (i, (ser, p)) in series.iter().zip(&pts).enumerate() {
        if !p.is_empty() {
            let d: Vec<String> = p.iter().map(|&(e, v)| format!("{:.2},{:.2}", x(e), y(v))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                d.join(" "),
                ser.color
            );
        }
        let ly = PAD + 4.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#,
            W - 200.0,
            W - 180.0,
            ser.color
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, W - 174.0, ly + 4.0, escape(ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series_and_bad_points_skipped() {
        let a = [1.0, 0.1, 0.01];
        let b = [0.5, f64::NAN, 0.0, 0.05];
        let svg = loss_svg(
            &[
                Series { label: "train", color: "blue", values: &a },
                Series { label: "test <x>", color: "red", values: &b },
            ],
            "loss",
            "# stamp",
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("test &lt;x&gt;"));
        assert!(svg.contains("<!-- stamp -->"));
        let second = svg.lines().filter(|l| l.contains("<polyline")).nth(1).unwrap();
        assert_eq!(second.matches(',').count(), 2);
    }

    #[test]
    fn empty_input_still_renders() {
        let svg = loss_svg(&[Series { label: "x", color: "black", values: &[] }], "t", "");
        assert!(svg.ends_with("</svg>\n"));
        assert!(!svg.contains("<polyline"));
    }
}
