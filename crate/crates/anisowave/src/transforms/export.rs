use std::io::Write;
use std::path::Path;

use crate::transforms::PhaseGridMatrix;
use crate::Result;

/// 16-bit binary PGM of `log10|V|` clipped to `[−16, 0]`; image columns
/// run along x, rows along ξ with the highest frequency on top.
pub fn write_pgm(v: &PhaseGridMatrix, path: impl AsRef<Path>) -> Result<()> {
    let n = v.grid.n;
    let mut out = format!("P5\n{n} {n}\n65535\n").into_bytes();
    out.reserve(2 * n * n);
    for r in 0..n {
        let k = n - 1 - r;
        for j in 0..n {
            let l = v.get(j, k).norm().log10().clamp(-16.0, 0.0);
            let level = ((l + 16.0) / 16.0 * 65535.0).round() as u16;
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// CSV `x,xi,abs`, row-major in (space, frequency).
pub fn write_modulus_csv(v: &PhaseGridMatrix, path: impl AsRef<Path>) -> Result<()> {
    let g = v.grid;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,xi,abs")?;
    for j in 0..g.n {
        for k in 0..g.n {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", g.x(j), g.xi(k), v.get(j, k).norm())?;
        }
    }
    w.flush()?;
    Ok(())
}
