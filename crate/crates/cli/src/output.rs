//! CSV and portable-bitmap writers. Floats are printed with 17 significant
//! digits, which round-trips every `f64`.

use std::io::{self, Write};

use vide_core::{StabilityGrid, Trajectory, Verdict};

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// `i,x,y` for scalar trajectories, `i,x,y1..ym` for systems.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> csv::Result<()> {
    let mut w = csv_writer(out);
    let dim = traj.dim();
    let mut header = vec!["i".to_string(), "x".to_string()];
    if dim == 1 {
        header.push("y".into());
    } else {
        header.extend((1..=dim).map(|c| format!("y{c}")));
    }
    w.write_record(&header)?;
    let mesh = traj.mesh();
    for i in 0..traj.n_nodes() {
        let mut rec = vec![i.to_string(), fmt_f64(mesh.node(i))];
        rec.extend(traj.state(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory CSV read back as `(x, state)` rows.
pub fn read_trajectory<R: io::Read>(input: R) -> csv::Result<Vec<(f64, Vec<f64>)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| csv::Error::from(io::Error::new(io::ErrorKind::InvalidData, e)))
        };
        let x = parse(&rec[1])?;
        let ys = rec.iter().skip(2).map(parse).collect::<csv::Result<Vec<_>>>()?;
        rows.push((x, ys));
    }
    Ok(rows)
}

/// `z,w,stable,first_exceed_index`, in sweep order (w ascending, then z).
pub fn write_region_csv<W: Write>(out: W, grid: &StabilityGrid) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["z", "w", "stable", "first_exceed_index"])?;
    for (z, wv, v) in grid.cells() {
        let first = v.first_exceed().map(|i| i.to_string()).unwrap_or_default();
        w.write_record([fmt_f64(z), fmt_f64(wv), (v.is_stable() as u8).to_string(), first])?;
    }
    w.flush()?;
    Ok(())
}

fn comment(grid: &StabilityGrid) -> String {
    let s = &grid.spec;
    format!(
        "# method={} z=[{},{}] w=[{},{}] grid={}x{} i_max={} bound={}",
        grid.method, s.z_min, s.z_max, s.w_min, s.w_max, s.nz, s.nw, s.i_max, s.bound
    )
}

/// Rows top to bottom, w descending; columns z ascending.
fn raster_rows(grid: &StabilityGrid) -> impl Iterator<Item = impl Iterator<Item = Verdict> + '_> + '_ {
    let s = grid.spec;
    (0..s.nw).rev().map(move |iw| (0..s.nz).map(move |iz| grid.verdict(iz, iw)))
}

/// Plain PBM (P1); a 1 marks an unstable cell.
pub fn write_region_pbm<W: Write>(mut out: W, grid: &StabilityGrid) -> io::Result<()> {
    writeln!(out, "P1")?;
    writeln!(out, "{}", comment(grid))?;
    writeln!(out, "{} {}", grid.spec.nz, grid.spec.nw)?;
    for row in raster_rows(grid) {
        let line: Vec<&str> = row.map(|v| if v.is_stable() { "0" } else { "1" }).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Plain PGM (P2). Stable cells are white; unstable cells get darker the
/// sooner `|P_i|` crossed the bound, on a log scale of the exceedance index.
pub fn write_region_pgm<W: Write>(mut out: W, grid: &StabilityGrid) -> io::Result<()> {
    const MAXVAL: u32 = 255;
    let span = (grid.spec.i_max as f64).ln_1p();
    writeln!(out, "P2")?;
    writeln!(out, "{}", comment(grid))?;
    writeln!(out, "{} {}", grid.spec.nz, grid.spec.nw)?;
    writeln!(out, "{MAXVAL}")?;
    for row in raster_rows(grid) {
        let line: Vec<String> = row
            .map(|v| match v {
                Verdict::Stable => MAXVAL,
                Verdict::Unstable { first_exceed } => {
                    let frac = ((first_exceed as f64).ln_1p() - 2f64.ln()) / (span - 2f64.ln()).max(f64::MIN_POSITIVE);
                    (frac.clamp(0.0, 1.0) * (MAXVAL - 1) as f64).round() as u32
                }
            })
            .map(|g| g.to_string())
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}
