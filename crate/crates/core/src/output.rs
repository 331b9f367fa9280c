//! Serialization of sweep results and traces: CSV with a commented header,
//! JSON with full nesting, and minimal line/scatter SVG plots.
//!
//! Numeric CSV fields carry 17 significant digits so a rerun with the same
//! provenance block reproduces the file byte for byte.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::boundstates::Parity;
use crate::dynamics::CoherenceTrace;
use crate::error::Result;
use crate::experiments::SweepResult;

fn fmt_g(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::from("nan")
    }
}

fn opt<T, F: Fn(&T) -> String>(v: &Option<T>, f: F) -> String {
    v.as_ref().map(|x| f(x)).unwrap_or_default()
}

/// Full nested result with provenance, pretty-printed JSON.
pub fn write_json(result: &SweepResult, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, result)?;
    Ok(())
}

/// One row per point. Bound states are flattened into padded column
/// triplets; full eigenvalue lists stay in the JSON format only.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let max_bs = result
        .points
        .iter()
        .map(|p| p.bound_states.len())
        .max()
        .unwrap_or(0);

    writeln!(out, "# ssh-probe sweep output")?;
    writeln!(
        out,
        "# provenance: {}",
        serde_json::to_string(&result.provenance)?
    )?;
    writeln!(
        out,
        "# band_edges columns are (-outer, -inner, +inner, +outer); bs columns are padded"
    )?;
    let mut header = String::from(
        "kind,axis_value,gamma,t2,delta,seed,initial,n_t,in_gap_parity,\
         band_m_outer,band_m_inner,band_p_inner,band_p_outer,n_bound",
    );
    for i in 1..=max_bs {
        write!(header, ",bs{i}_energy,bs{i}_x,bs{i}_parity_index,bs{i}_parity").unwrap();
    }
    writeln!(out, "{header}")?;

    for p in &result.points {
        let mut row = format!(
            "sample,{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_g(p.axis_value),
            fmt_g(p.gamma),
            fmt_g(p.t2),
            opt(&p.delta, |d| fmt_g(*d)),
            opt(&p.seed, |s| s.to_string()),
            opt(&p.initial, |s| s.clone()),
            opt(&p.n_t, |v| fmt_g(*v)),
            opt(&p.in_gap_parity, |v| fmt_g(*v)),
            fmt_g(p.band_edges[0]),
            fmt_g(p.band_edges[1]),
            fmt_g(p.band_edges[2]),
            fmt_g(p.band_edges[3]),
            p.bound_states.len(),
        );
        for i in 0..max_bs {
            match p.bound_states.get(i) {
                Some(bs) => write!(
                    row,
                    ",{},{},{},{}",
                    fmt_g(bs.energy),
                    fmt_g(bs.localization),
                    fmt_g(bs.parity_index),
                    match bs.parity {
                        Parity::Symmetric => "sym",
                        Parity::Antisymmetric => "anti",
                        Parity::Indefinite => "indef",
                    }
                )
                .unwrap(),
                None => row.push_str(",,,,"),
            }
        }
        writeln!(out, "{row}")?;
    }

    for a in &result.aggregates {
        writeln!(
            out,
            "mean,{},{},,{},,,{},{},,,,,",
            fmt_g(a.axis_value),
            "",
            fmt_g(a.delta),
            fmt_g(a.n_t_mean),
            opt(&a.in_gap_parity_mean, |v| fmt_g(*v)),
        )?;
        writeln!(
            out,
            "std,{},{},,{},,,{},,,,,,",
            fmt_g(a.axis_value),
            "",
            fmt_g(a.delta),
            fmt_g(a.n_t_std),
        )?;
    }
    Ok(())
}

/// Sampled coherence as CSV: `t, q_re, q_im, abs_q, loschmidt`.
pub fn write_trace_csv(trace: &CoherenceTrace, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# ssh-probe coherence trace")?;
    writeln!(out, "# spec: {}", serde_json::to_string(&trace.spec)?)?;
    for w in &trace.warnings {
        writeln!(out, "# warning: {w}")?;
    }
    writeln!(out, "t,q_re,q_im,abs_q,loschmidt")?;
    for i in 0..trace.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_g(trace.times[i]),
            fmt_g(trace.q[i].re),
            fmt_g(trace.q[i].im),
            fmt_g(trace.q[i].norm()),
            fmt_g(trace.l[i]),
        )?;
    }
    Ok(())
}

/// Sampled coherence as JSON (arrays plus the spec snapshot).
pub fn write_trace_json(trace: &CoherenceTrace, path: &Path) -> Result<()> {
    let value = serde_json::json!({
        "spec": trace.spec,
        "dt": trace.dt,
        "warnings": trace.warnings,
        "t": trace.times,
        "q_re": trace.q.iter().map(|q| q.re).collect::<Vec<_>>(),
        "q_im": trace.q.iter().map(|q| q.im).collect::<Vec<_>>(),
        "loschmidt": trace.l,
    });
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, &value)?;
    Ok(())
}

const PLOT_W: f64 = 840.0;
const PLOT_H: f64 = 560.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (PLOT_W - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        PLOT_H - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (PLOT_H - 2.0 * MARGIN)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_head(title: &str, provenance: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" \
         viewBox=\"0 0 {PLOT_W} {PLOT_H}\">\n<desc>{}</desc>\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"28\" font-size=\"16\" text-anchor=\"middle\" \
         font-family=\"sans-serif\">{}</text>\n",
        xml_escape(provenance),
        PLOT_W / 2.0,
        xml_escape(title),
    )
}

fn svg_axes(frame: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let (left, right) = (MARGIN, PLOT_W - MARGIN);
    let (top, bottom) = (MARGIN, PLOT_H - MARGIN);
    write!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        right - left,
        bottom - top
    )
    .unwrap();
    for i in 0..=4 {
        let fx = frame.x0 + (frame.x1 - frame.x0) * i as f64 / 4.0;
        let fy = frame.y0 + (frame.y1 - frame.y0) * i as f64 / 4.0;
        let px = frame.x(fx);
        let py = frame.y(fy);
        write!(
            s,
            "<line x1=\"{px:.2}\" y1=\"{bottom}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{px:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" \
             font-family=\"sans-serif\">{fx:.3}</text>\n",
            bottom + 5.0,
            bottom + 20.0
        )
        .unwrap();
        write!(
            s,
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{left}\" y2=\"{py:.2}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\" \
             font-family=\"sans-serif\">{fy:.3}</text>\n",
            left - 5.0,
            left - 8.0,
            py + 4.0
        )
        .unwrap();
    }
    write!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         font-family=\"sans-serif\">{}</text>\n",
        (left + right) / 2.0,
        PLOT_H - 16.0,
        xml_escape(xlabel)
    )
    .unwrap();
    write!(
        s,
        "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        xml_escape(ylabel)
    )
    .unwrap();
    s
}

fn polyline(points: &[(f64, f64)], color: &str, dashed: bool) -> String {
    let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{}/>\n",
        coords.join(" "),
        if dashed { " stroke-dasharray=\"5,4\"" } else { "" }
    )
}

/// Band-and-bound-state diagram: shaded band regions bounded by the edge
/// lines, bound states as parity-colored markers.
pub fn spectrum_svg(result: &SweepResult) -> String {
    let provenance = serde_json::to_string(&result.provenance).unwrap_or_default();
    let xlabel = match result.axis {
        crate::experiments::AxisKind::Gamma => "gamma / t1",
        crate::experiments::AxisKind::Ratio => "t2 / t1",
    };
    let mut e_min = f64::INFINITY;
    let mut e_max = f64::NEG_INFINITY;
    for p in &result.points {
        e_min = e_min.min(p.band_edges[0]);
        e_max = e_max.max(p.band_edges[3]);
        for b in &p.bound_states {
            e_min = e_min.min(b.energy);
            e_max = e_max.max(b.energy);
        }
    }
    let pad = 0.08 * (e_max - e_min).max(1e-12);
    let frame = Frame {
        x0: result.points.first().map(|p| p.axis_value).unwrap_or(0.0),
        x1: result.points.last().map(|p| p.axis_value).unwrap_or(1.0),
        y0: e_min - pad,
        y1: e_max + pad,
    };

    let mut svg = svg_head("energy spectrum", &provenance);
    // band regions as two closed polygons (upper and lower band)
    for (lo_idx, hi_idx) in [(2usize, 3usize), (0usize, 1usize)] {
        let mut path: Vec<(f64, f64)> = result
            .points
            .iter()
            .map(|p| (frame.x(p.axis_value), frame.y(p.band_edges[hi_idx])))
            .collect();
        path.extend(
            result
                .points
                .iter()
                .rev()
                .map(|p| (frame.x(p.axis_value), frame.y(p.band_edges[lo_idx]))),
        );
        let coords: Vec<String> = path.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"#f3c6cd\" stroke=\"#b3848c\" stroke-width=\"0.8\"/>\n",
            coords.join(" ")
        ));
    }
    for p in &result.points {
        for b in &p.bound_states {
            let color = match b.parity {
                Parity::Symmetric => PALETTE[0],
                Parity::Antisymmetric => PALETTE[1],
                Parity::Indefinite => "#666666",
            };
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"{color}\"/>\n",
                frame.x(p.axis_value),
                frame.y(b.energy)
            ));
        }
    }
    svg.push_str(&svg_axes(&frame, xlabel, "energy / t1"));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"46\" font-size=\"11\" font-family=\"sans-serif\" fill=\"{}\">\
         symmetric</text><text x=\"{}\" y=\"46\" font-size=\"11\" \
         font-family=\"sans-serif\" fill=\"{}\">antisymmetric</text>\n",
        PLOT_W - 220.0,
        PALETTE[0],
        PLOT_W - 140.0,
        PALETTE[1]
    ));
    svg.push_str("</svg>\n");
    svg
}

/// `N_T` versus ratio, one polyline per `(gamma, initial, delta)` group.
pub fn curves_svg(result: &SweepResult) -> String {
    let provenance = serde_json::to_string(&result.provenance).unwrap_or_default();
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for p in &result.points {
        let Some(n_t) = p.n_t else { continue };
        let key = format!(
            "gamma={:.4}{}{}{}",
            p.gamma,
            p.initial.as_ref().map(|s| format!(" {s}")).unwrap_or_default(),
            p.delta.map(|d| format!(" delta={d:.3}")).unwrap_or_default(),
            p.seed.map(|s| format!(" seed={s}")).unwrap_or_default(),
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push((p.axis_value, n_t)),
            None => groups.push((key, vec![(p.axis_value, n_t)])),
        }
    }
    let mut y_max = f64::MIN;
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    for (_, pts) in &groups {
        for (x, y) in pts {
            y_max = y_max.max(*y);
            x0 = x0.min(*x);
            x1 = x1.max(*x);
        }
    }
    if !y_max.is_finite() || y_max <= 0.0 {
        y_max = 1.0;
    }
    let frame = Frame {
        x0,
        x1,
        y0: 0.0,
        y1: 1.1 * y_max,
    };
    let mut svg = svg_head("non-Markovianity quantifier", &provenance);
    for (i, (key, pts)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let scaled: Vec<(f64, f64)> =
            pts.iter().map(|(x, y)| (frame.x(*x), frame.y(*y))).collect();
        svg.push_str(&polyline(&scaled, color, i >= PALETTE.len()));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\" \
             fill=\"{color}\">{}</text>\n",
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * i as f64,
            xml_escape(key)
        ));
    }
    svg.push_str(&svg_axes(&frame, "t2 / t1", "N_T (units of t1)"));
    svg.push_str("</svg>\n");
    svg
}

pub fn write_spectrum_svg(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, spectrum_svg(result))?;
    Ok(())
}

pub fn write_curves_svg(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, curves_svg(result))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{nonmarkov_sweep, spectrum_sweep, AxisKind, RunParams};
    use crate::lattice::{ChainSpec, Model};

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("sshprobe-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn csv_and_json_round_out() {
        let template = ChainSpec::new(40, 1.0, 1.5, 0.8, Model::Dephasing).unwrap();
        let sweep = spectrum_sweep(&template, AxisKind::Gamma, (0.4, 1.2), 3).unwrap();
        let dir = tmpdir();
        let csv_path = dir.join("spectrum.csv");
        let json_path = dir.join("spectrum.json");
        write_csv(&sweep, &csv_path).unwrap();
        write_json(&sweep, &json_path).unwrap();

        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert!(csv.starts_with("# ssh-probe sweep output"));
        assert!(csv.contains("# provenance: {"));
        let data_rows = csv.lines().filter(|l| l.starts_with("sample,")).count();
        assert_eq!(data_rows, 3);
        // full precision survives the round trip
        let reparsed: crate::experiments::SweepResult =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(reparsed.points.len(), sweep.points.len());
        for (a, b) in reparsed.points.iter().zip(&sweep.points) {
            assert_eq!(a.bound_states.len(), b.bound_states.len());
            for (x, y) in a.bound_states.iter().zip(&b.bound_states) {
                assert_eq!(x.energy, y.energy);
            }
        }
    }

    #[test]
    fn csv_is_byte_reproducible() {
        let template = ChainSpec::new(30, 1.0, 1.0, 0.8, Model::Dephasing).unwrap();
        let params = RunParams {
            t_max: 20.0,
            dt: 0.05,
            t_end: 20.0,
            t_burn: 0.0,
        };
        let run = || {
            nonmarkov_sweep(
                &template,
                (0.8, 1.2),
                3,
                &[0.8],
                &[crate::dynamics::InitialState::AntisymTwoCell],
                &params,
            )
            .unwrap()
        };
        let dir = tmpdir();
        let p1 = dir.join("nm1.csv");
        let p2 = dir.join("nm2.csv");
        write_csv(&run(), &p1).unwrap();
        write_csv(&run(), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn svg_outputs_are_wellformed_enough() {
        let template = ChainSpec::new(40, 1.0, 1.5, 0.8, Model::Dephasing).unwrap();
        let sweep = spectrum_sweep(&template, AxisKind::Ratio, (0.6, 1.4), 5).unwrap();
        let svg = spectrum_svg(&sweep);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<polygon"));
        assert!(svg.contains("<circle"));

        let params = RunParams {
            t_max: 15.0,
            dt: 0.05,
            t_end: 15.0,
            t_burn: 0.0,
        };
        let nm = nonmarkov_sweep(
            &template,
            (0.8, 1.2),
            3,
            &[0.8, 1.2],
            &[crate::dynamics::InitialState::AntisymTwoCell],
            &params,
        )
        .unwrap();
        let svg = curves_svg(&nm);
        assert!(svg.contains("<polyline"));
        // two couplings, one initial state: two curves
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
