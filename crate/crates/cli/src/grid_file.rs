//! Snapshot grids on disk: a few `# key=value` lines, then one CSV row per
//! lattice row with the top of the battlefield (largest y) first.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub t: f64,
    pub force: String,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in file order: `rows[0]` is the top row.
    pub values: Vec<f64>,
}

impl GridFile {
    /// From storage order (`j * nx + i`, j = 0 at the bottom).
    pub fn from_bottom_up(t: f64, force: &str, nx: usize, ny: usize, data: &[f64]) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in (0..ny).rev() {
            values.extend_from_slice(&data[j * nx..(j + 1) * nx]);
        }
        Self { t, force: force.to_string(), nx, ny, values }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.nx..(r + 1) * self.nx]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# t={}", self.t);
        let _ = writeln!(s, "# force={}", self.force);
        let _ = writeln!(s, "# nx={}", self.nx);
        let _ = writeln!(s, "# ny={}", self.ny);
        for r in 0..self.ny {
            let row: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let (mut t, mut force, mut nx, mut ny) = (None, None, None, None);
        let mut values = Vec::new();
        let mut rows = 0;
        for (n, line) in text.lines().enumerate() {
            if let Some(meta) = line.strip_prefix('#') {
                let Some((k, v)) = meta.trim().split_once('=') else {
                    continue;
                };
                let bad = || format!("line {}: bad value for {k}", n + 1);
                match k {
                    "t" => t = Some(v.parse::<f64>().map_err(|_| bad())?),
                    "force" => force = Some(v.to_string()),
                    "nx" => nx = Some(v.parse::<usize>().map_err(|_| bad())?),
                    "ny" => ny = Some(v.parse::<usize>().map_err(|_| bad())?),
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            for cell in line.split(',') {
                values.push(
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("line {}: not a number: {cell:?}", n + 1))?,
                );
            }
        }
        let (nx, ny) = (nx.ok_or("missing nx")?, ny.ok_or("missing ny")?);
        if rows != ny || values.len() != nx * ny {
            return Err(format!("expected {ny} rows of {nx} values"));
        }
        Ok(Self { t: t.ok_or("missing t")?, force: force.ok_or("missing force")?, nx, ny, values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))
    }
}
