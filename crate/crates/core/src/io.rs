//! File formats: partition and run documents (JSON), fronts and graphs
//! (CSV), network checkpoints, and SVG scatter plots.
//!
//! A checkpoint is three parts:
//!
//! 1. the magic line `phn-hvvs-checkpoint 1`,
//! 2. one line of JSON with the network shape, parameter count and a
//!    free-form config echo,
//! 3. `param_count` little-endian `f64` values.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{HyperNet, NetShape};
use crate::simplex::PreferenceRay;
use crate::voronoi::VoronoiPartition;

pub const PARTITION_FORMAT: &str = "phn-voronoi-partition";
pub const PARTITION_VERSION: u32 = 1;
pub const CHECKPOINT_MAGIC: &str = "phn-hvvs-checkpoint 1";

#[derive(Debug, Serialize, Deserialize)]
struct PartitionDoc {
    format: String,
    version: u32,
    dim: usize,
    sites_count: usize,
    points_count: usize,
    seed: u64,
    fitness: f64,
    sites: Vec<PreferenceRay>,
    points: Vec<PreferenceRay>,
    labels: Vec<usize>,
}

pub fn partition_to_json(p: &VoronoiPartition) -> Result<String> {
    let doc = PartitionDoc {
        format: PARTITION_FORMAT.into(),
        version: PARTITION_VERSION,
        dim: p.dim(),
        sites_count: p.sites().len(),
        points_count: p.points().len(),
        seed: p.seed(),
        fitness: p.fitness(),
        sites: p.sites().to_vec(),
        points: p.points().to_vec(),
        labels: p.labels().to_vec(),
    };
    Ok(serde_json::to_string(&doc)? + "\n")
}

pub fn partition_from_json(text: &str) -> Result<VoronoiPartition> {
    let doc: PartitionDoc = serde_json::from_str(text)?;
    if doc.format != PARTITION_FORMAT || doc.version != PARTITION_VERSION {
        return Err(Error::Format(format!(
            "unsupported partition format {} v{}",
            doc.format, doc.version
        )));
    }
    if doc.sites.len() != doc.sites_count || doc.points.len() != doc.points_count {
        return Err(Error::Format("partition counts do not match contents".into()));
    }
    let p = VoronoiPartition::from_parts(doc.sites, doc.points, doc.labels, doc.fitness, doc.seed)?;
    if p.dim() != doc.dim {
        return Err(Error::Format(format!(
            "declared dimension {} but sites have {}",
            doc.dim,
            p.dim()
        )));
    }
    Ok(p)
}

pub fn save_partition(path: &Path, p: &VoronoiPartition) -> Result<()> {
    write_text(path, &partition_to_json(p)?)
}

pub fn load_partition(path: &Path) -> Result<VoronoiPartition> {
    partition_from_json(&fs::read_to_string(path).map_err(at(path))?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_pretty(value)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(at(dir))?;
    }
    fs::write(path, text).map_err(at(path))?;
    Ok(())
}

/// Prefixes an I/O error with the path it concerns.
pub fn at(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Front as CSV with header `ray_0..ray_{J-1},loss_0..loss_{J-1}`.
pub fn front_csv(rays: &[Vec<f64>], front: &[Vec<f64>]) -> String {
    let j = rays.first().map_or(0, Vec::len);
    let header: Vec<String> = (0..j)
        .map(|k| format!("ray_{k}"))
        .chain((0..j).map(|k| format!("loss_{k}")))
        .collect();
    let mut out = header.join(",") + "\n";
    for (r, l) in rays.iter().zip(front) {
        let row: Vec<String> = r.iter().chain(l).map(f64::to_string).collect();
        out += &row.join(",");
        out.push('\n');
    }
    out
}

/// Prefixes CSV text with a `# config: <json>` comment line.
pub fn annotate_csv(csv: &str, config: &serde_json::Value) -> String {
    format!("# config: {config}\n{csv}")
}

/// Inserts the config as a `<metadata>` element right after the opening
/// `<svg>` tag.
pub fn annotate_svg(svg: &str, config: &serde_json::Value) -> String {
    let meta = format!("<metadata>{}</metadata>\n", escape(&config.to_string()));
    match svg.find(">\n") {
        Some(end) => format!("{}{}{}", &svg[..end + 2], meta, &svg[end + 2..]),
        None => format!("{svg}{meta}"),
    }
}

/// Square matrix as CSV with client ids on the header row and first column.
pub fn graph_csv(matrix: &[Vec<f64>]) -> String {
    let n = matrix.len();
    let mut out = String::from("client");
    for k in 0..n {
        let _ = write!(out, ",{k}");
    }
    out.push('\n');
    for (i, row) in matrix.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointHeader {
    shape: NetShape,
    param_count: usize,
    config: serde_json::Value,
}

pub fn write_checkpoint<W: Write>(mut w: W, net: &HyperNet, config: &serde_json::Value) -> Result<()> {
    let header = CheckpointHeader {
        shape: *net.shape(),
        param_count: net.param_count(),
        config: config.clone(),
    };
    writeln!(w, "{CHECKPOINT_MAGIC}")?;
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for p in net.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint, returning the network and the config echo.
pub fn read_checkpoint<R: Read>(r: R) -> Result<(HyperNet, serde_json::Value)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a phn-hvvs checkpoint".into()));
    }
    line.clear();
    r.read_line(&mut line)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end())?;
    if header.param_count != header.shape.param_count() {
        return Err(Error::Format(format!(
            "header declares {} parameters, shape needs {}",
            header.param_count,
            header.shape.param_count()
        )));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != header.param_count * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            header.param_count * 8
        )));
    }
    let params = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((HyperNet::from_params(header.shape, params)?, header.config))
}

pub fn save_checkpoint(path: &Path, net: &HyperNet, config: &serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_checkpoint(std::io::BufWriter::new(fs::File::create(path).map_err(at(path))?), net, config)
}

pub fn load_checkpoint(path: &Path) -> Result<(HyperNet, serde_json::Value)> {
    read_checkpoint(fs::File::open(path).map_err(at(path))?)
}

const SVG_SIZE: f64 = 600.0;
const SVG_MARGIN: f64 = 60.0;

/// 600x600 scatter of a two-objective front with the reference point drawn
/// as a cross.
pub fn front_svg(front: &[Vec<f64>], reference: &[f64], title: &str) -> String {
    let xs = front.iter().map(|p| p[0]).chain([reference[0], 0.0]);
    let ys = front.iter().map(|p| p[1]).chain([reference[1], 0.0]);
    let (x0, x1) = bounds(xs);
    let (y0, y1) = bounds(ys);
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    let px = |x: f64| SVG_MARGIN + (x - x0) / (x1 - x0) * span;
    let py = |y: f64| SVG_SIZE - SVG_MARGIN - (y - y0) / (y1 - y0) * span;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600" viewBox="0 0 600 600">"#
    );
    let _ = writeln!(s, r#"<rect width="600" height="600" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="300" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        escape(title)
    );
    let (ox, oy) = (SVG_MARGIN, SVG_SIZE - SVG_MARGIN);
    let _ = writeln!(
        s,
        r#"<line x1="{ox}" y1="{oy}" x2="{}" y2="{oy}" stroke="black"/>"#,
        SVG_SIZE - SVG_MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ox}" y1="{oy}" x2="{ox}" y2="{SVG_MARGIN}" stroke="black"/>"#
    );
    for (v, x) in [(x0, px(x0)), (x1, px(x1))] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{v:.2}</text>"#,
            oy + 16.0
        );
    }
    for (v, y) in [(y0, py(y0)), (y1, py(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.2}</text>"#,
            ox - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="300" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">ℓ₁</text>"#,
        SVG_SIZE - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="300" text-anchor="middle" font-family="sans-serif" font-size="14">ℓ₂</text>"#
    );
    for p in front {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#,
            px(p[0]),
            py(p[1])
        );
    }
    let (rx, ry) = (px(reference[0]), py(reference[1]));
    let _ = writeln!(
        s,
        r#"<path d="M{} {} L{} {} M{} {} L{} {}" stroke="crimson" stroke-width="2"/>"#,
        rx - 6.0,
        ry - 6.0,
        rx + 6.0,
        ry + 6.0,
        rx - 6.0,
        ry + 6.0,
        rx + 6.0,
        ry - 6.0
    );
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo < hi) {
        return (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetShape;
    use crate::voronoi::{evolve, GaConfig};

    #[test]
    fn partition_round_trip() {
        let mut cfg = GaConfig::new(3, 5);
        cfg.points = 500;
        cfg.generations = 3;
        cfg.num_species = 4;
        let p = evolve(&cfg).unwrap();
        let text = partition_to_json(&p).unwrap();
        let q = partition_from_json(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(partition_to_json(&q).unwrap(), text);

        let tampered = text.replacen("\"labels\":[", "\"labels\":[4,", 1);
        assert!(partition_from_json(&tampered).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let net = HyperNet::new(NetShape::new(2, 5, 3), 12).unwrap();
        let echo = serde_json::json!({"problem": "zdt1"});
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &net, &echo).unwrap();
        let (back, cfg) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(cfg, echo);
        assert_eq!(back.params(), net.params());
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
        assert!(read_checkpoint(&b"garbage\n"[..]).is_err());
    }

    #[test]
    fn csv_layouts() {
        let csv = front_csv(&[vec![1.0, 0.0]], &[vec![0.5, 0.25]]);
        assert_eq!(csv, "ray_0,ray_1,loss_0,loss_1\n1,0,0.5,0.25\n");
        let g = graph_csv(&[vec![1.0, 0.0], vec![0.25, 0.75]]);
        assert_eq!(g, "client,0,1\n0,1,0\n1,0.25,0.75\n");
    }

    #[test]
    fn svg_has_points_and_reference() {
        let svg = front_svg(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[2.0, 2.0], "a<b");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("ℓ₁") && svg.contains("ℓ₂") && svg.contains("a&lt;b"));
    }
}
