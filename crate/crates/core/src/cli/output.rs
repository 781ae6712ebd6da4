//! CSV writers, companion plotting scripts and the on-disk result cache.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::analysis::OutcomeRecord;
use crate::grid::Field;
use crate::Result as ModelResult;

pub const PROFILE_HEADER: &str = "x,u,v";
pub const SWEEP_HEADER: &str = "alpha,beta,avg_u,avg_v,yield,outcome";
pub const BOUNDS_HEADER: &str = "beta,c_star,alpha_star,alpha_double_star";
pub const SWITCH_HEADER: &str = "beta,alpha_double_star,bracket_width,below,above";

/// Shortest decimal that parses back to the same `f64` (exponent form for
/// very small or large magnitudes).
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn profile_csv(x: &[f64], u: &Field<f64>, v: &Field<f64>) -> String {
    let mut out = String::with_capacity(64 * x.len());
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for i in 0..x.len() {
        let _ = writeln!(out, "{},{},{}", num(x[i]), num(u[i]), num(v[i]));
    }
    out
}

/// Failed cells keep their coordinates, leave the numeric columns empty and
/// are marked `unresolved`.
pub fn sweep_csv<'a>(cells: impl IntoIterator<Item = (f64, f64, &'a ModelResult<OutcomeRecord<f64>>)>) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (alpha, beta, rec) in cells {
        match rec {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    num(alpha),
                    num(beta),
                    num(r.avg_u),
                    num(r.avg_v),
                    num(r.total_yield()),
                    r.outcome
                );
            }
            Err(_) => {
                let _ = writeln!(out, "{},{},,,,unresolved", num(alpha), num(beta));
            }
        }
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)
}

fn script_path(csv: &Path) -> PathBuf {
    csv.with_extension("py")
}

fn csv_name(csv: &Path) -> String {
    csv.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv.display().to_string())
}

pub fn profile_plot_script(csv: &Path) -> (PathBuf, String) {
    let script = format!(
        r#"import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{name}")) as f:
    rows = list(csv.DictReader(f))
x = [float(r["x"]) for r in rows]
plt.plot(x, [float(r["u"]) for r in rows], label="u")
plt.plot(x, [float(r["v"]) for r in rows], label="v")
plt.xlabel("x")
plt.legend()
plt.savefig(os.path.join(here, "{stem}.png"), dpi=150)
"#,
        name = csv_name(csv),
        stem = csv.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
    );
    (script_path(csv), script)
}

pub fn sweep_plot_script(csv: &Path) -> (PathBuf, String) {
    let script = format!(
        r#"import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{name}")) as f:
    rows = list(csv.DictReader(f))
codes = {{"only_u": 0, "coexist": 1, "only_v": 2, "extinct": 3, "unresolved": 4}}
alphas = sorted({{float(r["alpha"]) for r in rows}})
betas = sorted({{float(r["beta"]) for r in rows}})
if len(betas) == 1:
    a = [float(r["alpha"]) for r in rows]
    plt.plot(a, [float(r["avg_u"] or "nan") for r in rows], label="average u")
    plt.plot(a, [float(r["avg_v"] or "nan") for r in rows], label="average v")
    plt.xlabel("alpha")
    plt.legend()
else:
    grid = [[4] * len(alphas) for _ in betas]
    for r in rows:
        grid[betas.index(float(r["beta"]))][alphas.index(float(r["alpha"]))] = codes[r["outcome"]]
    plt.imshow(grid, origin="lower", extent=(alphas[0], alphas[-1], betas[0], betas[-1]),
               cmap="viridis", vmin=0, vmax=4)
    plt.colorbar(ticks=range(5)).ax.set_yticklabels(list(codes))
    plt.xlabel("alpha")
    plt.ylabel("beta")
plt.savefig(os.path.join(here, "{stem}.png"), dpi=150)
"#,
        name = csv_name(csv),
        stem = csv.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
    );
    (script_path(csv), script)
}

/// Content-addressed store of command outputs.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Hex sha256 over the code version and the given parts.
    pub fn key(parts: &[&str]) -> String {
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_NAME"));
        h.update([0]);
        h.update(env!("CARGO_PKG_VERSION"));
        for p in parts {
            h.update([0]);
            h.update(p.as_bytes());
        }
        h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.csv"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, contents: &str) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        // Write then rename so a concurrent reader never sees a partial file.
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        fs::write(&tmp, contents)?;
        fs::rename(tmp, self.path(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Outcome;
    use crate::Error;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.2, 1e-300, 123456.789, -0.0, 5e-324, f64::MAX] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1e-10), "1e-10");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn profile_layout() {
        let csv = profile_csv(&[0.5, 1.5], &vec![1.0, 2.0].into(), &vec![0.0, 0.25].into());
        assert_eq!(csv, "x,u,v\n0.5,1.0,0.0\n1.5,2.0,0.25\n");
    }

    #[test]
    fn sweep_layout() {
        let ok = Ok(OutcomeRecord {
            outcome: Outcome::OnlyV,
            avg_u: 0.0,
            avg_v: 1.5,
            yield_u: 0.0,
            yield_v: 0.25,
            alpha: 0.5,
            beta: 0.1,
        });
        let bad = Err(Error::GrowthRateVanishes);
        let csv = sweep_csv([(0.5, 0.1, &ok), (0.6, 0.1, &bad)]);
        assert_eq!(
            csv,
            "alpha,beta,avg_u,avg_v,yield,outcome\n0.5,0.1,0.0,1.5,0.25,only_v\n0.6,0.1,,,,unresolved\n"
        );
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("c"));
        let k = Cache::key(&["a", "b"]);
        assert_eq!(k.len(), 64);
        assert_ne!(k, Cache::key(&["ab"]));
        assert_eq!(k, Cache::key(&["a", "b"]));
        assert_eq!(cache.get(&k), None);
        cache.put(&k, "x\n").unwrap();
        assert_eq!(cache.get(&k).as_deref(), Some("x\n"));
    }

    #[test]
    fn scripts_reference_csv() {
        let (p, s) = sweep_plot_script(Path::new("out/heat.csv"));
        assert_eq!(p, Path::new("out/heat.py"));
        assert!(s.contains("\"heat.csv\""));
        let (p, s) = profile_plot_script(Path::new("prof.csv"));
        assert_eq!(p, Path::new("prof.py"));
        assert!(s.contains("\"prof.csv\"") && s.contains("prof.png"));
    }
}
