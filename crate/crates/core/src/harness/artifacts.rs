//! CSV tables and self-contained SVG plots. Numbers use Rust's shortest
//! round-trip formatting so identical runs give identical bytes.

use std::fmt::Write as _;

use super::report::Verdict;
use crate::semilinear::ObservabilityExperiment;
use crate::stochastic::TrajectoryEnsemble;

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Node stride giving about `nodes` time points per path.
fn stride_for(ens: &TrajectoryEnsemble, nodes: usize) -> usize {
    let stored = ens.stored_nodes().saturating_sub(1).max(1);
    (stored / nodes.saturating_sub(1).max(1)).max(1)
}

/// Columns `path_id,t,component,value`; real parts of the first `paths` paths.
pub fn trajectories_csv(ens: &TrajectoryEnsemble, paths: usize, nodes: usize) -> String {
    let mut w = writer();
    w.write_record(["path_id", "t", "component", "value"]).unwrap();
    let stride = stride_for(ens, nodes);
    let last = ens.stored_nodes() - 1;
    for p in 0..paths.min(ens.paths()) {
        for j in (0..=last).step_by(stride).chain((last % stride != 0).then_some(last)) {
            for (k, v) in ens.state(p, j).iter().enumerate() {
                w.write_record(&[p.to_string(), ens.time(j).to_string(), k.to_string(), v.re.to_string()]).unwrap();
            }
        }
    }
    finish(w)
}

/// Columns `t,component,mean,mean_square` over every path.
pub fn moments_csv(ens: &TrajectoryEnsemble, nodes: usize) -> String {
    let mut w = writer();
    w.write_record(["t", "component", "mean", "mean_square"]).unwrap();
    let stride = stride_for(ens, nodes);
    let n = ens.paths() as f64;
    for j in (0..ens.stored_nodes()).step_by(stride) {
        for k in 0..ens.dim() {
            let (mut m1, mut m2) = (0.0, 0.0);
            for p in 0..ens.paths() {
                let v = ens.state(p, j)[k].re;
                m1 += v;
                m2 += v * v;
            }
            w.write_record(&[ens.time(j).to_string(), k.to_string(), (m1 / n).to_string(), (m2 / n).to_string()])
                .unwrap();
        }
    }
    finish(w)
}

/// Columns `quantity,value`.
pub fn constants_csv(rows: &[(String, f64)]) -> String {
    let mut w = writer();
    w.write_record(["quantity", "value"]).unwrap();
    for (q, v) in rows {
        w.write_record(&[q.clone(), v.to_string()]).unwrap();
    }
    finish(w)
}

/// One row per swept `L`.
pub fn sweep_csv(exp: &ObservabilityExperiment) -> String {
    let mut w = writer();
    w.write_record(["lipschitz", "kappa_hat", "kappa_se", "sqrt_h", "theta", "certified"]).unwrap();
    for r in &exp.rows {
        let cert = match r.certified {
            Some(true) => "yes",
            Some(false) => "no",
            None => "above-threshold",
        };
        w.write_record(&[
            r.lipschitz.to_string(),
            r.kappa.to_string(),
            r.kappa_se.to_string(),
            r.h.max(0.0).sqrt().to_string(),
            r.theta.to_string(),
            cert.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn polyline(points: &[(f64, f64)], colour: &str) -> String {
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!("<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>\n", pts.join(" "))
}

/// `κ̂` and `√h` against `L`, with a vertical marker at the threshold root.
pub fn sweep_svg(exp: &ObservabilityExperiment) -> String {
    let xs: Vec<f64> = exp.rows.iter().map(|r| r.lipschitz).collect();
    let x_lo = xs.iter().copied().fold(f64::INFINITY, f64::min).min(exp.theta_hat);
    let x_hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(exp.theta_hat);
    let y_hi = exp.rows.iter().map(|r| r.kappa.max(r.h.max(0.0).sqrt())).fold(1e-12, f64::max) * 1.1;
    let sx = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo).max(1e-300) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / y_hi * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">");
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<line x1=\"{PAD}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/><line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{y0}\" stroke=\"black\"/>",
        y0 = H - PAD,
        x1 = W - PAD
    );
    let kappa: Vec<(f64, f64)> = exp.rows.iter().map(|r| (sx(r.lipschitz), sy(r.kappa))).collect();
    let root: Vec<(f64, f64)> = exp.rows.iter().map(|r| (sx(r.lipschitz), sy(r.h.max(0.0).sqrt()))).collect();
    s.push_str(&polyline(&kappa, "#1f77b4"));
    s.push_str(&polyline(&root, "#ff7f0e"));
    for r in &exp.rows {
        let fill = if r.certified == Some(true) { "#2ca02c" } else { "#d62728" };
        let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{fill}\"/>", sx(r.lipschitz), sy(r.kappa));
    }
    let xm = sx(exp.theta_hat);
    let _ = writeln!(
        s,
        "<line id=\"theta-marker\" x1=\"{xm:.2}\" y1=\"{PAD}\" x2=\"{xm:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-dasharray=\"6 4\"/>",
        H - PAD
    );
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">threshold {:.4}</text>", xm + 4.0, PAD + 12.0, exp.theta_hat);
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">L</text>", W / 2.0, H - 15.0);
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"30\" font-size=\"12\" fill=\"#1f77b4\">kappa_hat</text>", PAD);
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"30\" font-size=\"12\" fill=\"#ff7f0e\">sqrt h(L)</text>", PAD + 90.0);
    s.push_str("</svg>\n");
    s
}

/// One coloured cell per criterion; `None` is a missing run.
pub fn summary_svg(rows: &[(u8, Option<Verdict>)]) -> String {
    let cell = 36.0;
    let width = cell * rows.len() as f64 + 20.0;
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"70\" viewBox=\"0 0 {width} 70\">\n");
    for (i, (c, v)) in rows.iter().enumerate() {
        let fill = match v {
            Some(Verdict::Pass) => "#2ca02c",
            Some(Verdict::Fail) => "#d62728",
            Some(Verdict::Inconclusive) => "#ffbf00",
            None => "#bbbbbb",
        };
        let x = 10.0 + cell * i as f64;
        let _ = writeln!(s, "<rect x=\"{x}\" y=\"10\" width=\"{}\" height=\"30\" fill=\"{fill}\" stroke=\"white\"/>", cell - 2.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"58\" font-size=\"12\" text-anchor=\"middle\">{c}</text>", x + cell / 2.0 - 1.0);
    }
    s.push_str("</svg>\n");
    s
}
