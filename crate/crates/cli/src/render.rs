//! Text and PGM renderings of snapshot grids.

use crate::grid_file::GridFile;

/// Glyphs by density decile, lowest first.
pub const GLYPHS: [[char; 10]; 2] = [
    ['.', ':', '-', '=', '+', '*', 'x', 'X', '#', '@'],
    [',', ';', '~', 'o', 'c', 'O', 'e', 'Q', '8', '&'],
];
pub const BACKGROUND: char = ' ';

/// Decile 0..=9 of `w` relative to `max`, `None` when empty.
pub fn decile(w: f64, max: f64) -> Option<usize> {
    if !(w > 0.0 && max > 0.0) {
        return None;
    }
    Some((((w / max) * 10.0).ceil() as usize).clamp(1, 10) - 1)
}

/// Both forces on one frame. A cell shows the force that is denser
/// relative to its own peak.
pub fn ascii(a: &GridFile, b: &GridFile) -> String {
    let (ma, mb) = (a.max(), b.max());
    let mut out = String::with_capacity((a.nx + 1) * a.ny);
    for r in 0..a.ny {
        for (&wa, &wb) in a.row(r).iter().zip(b.row(r)) {
            let (da, db) = (decile(wa, ma), decile(wb, mb));
            let c = match (da, db) {
                (None, None) => BACKGROUND,
                (Some(d), None) => GLYPHS[0][d],
                (None, Some(d)) => GLYPHS[1][d],
                (Some(x), Some(y)) => {
                    if wa / ma >= wb / mb {
                        GLYPHS[0][x]
                    } else {
                        GLYPHS[1][y]
                    }
                }
            };
            out.push(c);
        }
        out.push('\n');
    }
    out
}

/// Binary 8-bit greyscale, linearly scaled so the grid maximum is 255.
pub fn pgm(g: &GridFile) -> Vec<u8> {
    let max = g.max();
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    out.extend(g.values.iter().map(|&w| {
        if max > 0.0 && w > 0.0 {
            (255.0 * w / max).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// Pixel bytes of a P5 image written by [`pgm`].
pub fn read_pgm(bytes: &[u8]) -> Option<(usize, usize, &[u8])> {
    let mut fields = Vec::new();
    let mut k = 0;
    while fields.len() < 4 {
        while bytes.get(k)?.is_ascii_whitespace() {
            k += 1;
        }
        let start = k;
        while !bytes.get(k)?.is_ascii_whitespace() {
            k += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..k]).ok()?);
    }
    k += 1;
    if fields[0] != "P5" {
        return None;
    }
    let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
    let data = bytes.get(k..k + w * h)?;
    Some((w, h, data))
}
