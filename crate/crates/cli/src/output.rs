//! Deterministic CSV emission. Floats are printed with 17 significant
//! digits so they round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tcwave::engine::KernelSamples;
use tcwave::wavelet::Normalization;
use tcwave::Scalogram;

use crate::config::CliResult;

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// `base` with `_suffix` appended before the `.csv` extension.
pub fn derived_path(base: &Path, suffix: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let mut name = format!("{stem}_{suffix}.csv");
    if stem.is_empty() {
        name = format!("{suffix}.csv");
    }
    base.with_file_name(name)
}

pub fn write_scalogram(path: &Path, s: &Scalogram, label: &str) -> CliResult<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_scalogram_to(&mut w, s, label)?;
    w.flush()?;
    Ok(())
}

pub fn write_scalogram_to<W: Write>(w: &mut W, s: &Scalogram, label: &str) -> std::io::Result<()> {
    writeln!(w, "# label={label}")?;
    writeln!(w, "# c={}", fmt(s.meta.c))?;
    writeln!(w, "# tau0={}", fmt(s.meta.tau0))?;
    writeln!(w, "# dt={}", fmt(s.meta.dt))?;
    writeln!(w, "# order={}", s.meta.order)?;
    writeln!(w, "# gamma={}", fmt(s.meta.gamma))?;
    match s.meta.normalization {
        Normalization::GammaPower => writeln!(w, "# normalization=gamma")?,
        Normalization::Lp(p) => writeln!(w, "# normalization=lp:{}", fmt(p))?,
    }
    writeln!(w, "# warmup_rows={}", s.warmup_rows)?;
    let sigmas: Vec<String> = s.scales.iter().map(|tau| fmt(tau.sqrt())).collect();
    writeln!(w, "# sigmas={}", sigmas.join(" "))?;
    write!(w, "t")?;
    for k in 1..=s.cols() {
        write!(w, ",scale_{k}")?;
    }
    writeln!(w)?;
    for t in 0..s.rows() {
        write!(w, "{}", fmt(t as f64 * s.meta.dt))?;
        for v in s.row(t) {
            write!(w, ",{}", fmt(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Kernel table: one column per scale, rows are the sample index times dt.
pub fn write_kernels(path: &Path, kernels: &[KernelSamples], label: &str) -> CliResult<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# label={label}")?;
    if let Some(first) = kernels.first() {
        writeln!(w, "# c={}", fmt(first.meta.c))?;
        writeln!(w, "# order={}", first.meta.order)?;
        writeln!(w, "# gamma={}", fmt(first.meta.gamma))?;
        let sigmas: Vec<String> = kernels.iter().map(|k| fmt(k.meta.tau.sqrt())).collect();
        writeln!(w, "# sigmas={}", sigmas.join(" "))?;
    }
    write!(w, "t")?;
    for k in 1..=kernels.len() {
        write!(w, ",scale_{k}")?;
    }
    writeln!(w)?;
    let rows = kernels.iter().map(|k| k.values.len()).max().unwrap_or(0);
    let dt = kernels.first().map(|k| k.dt).unwrap_or(1.0);
    for t in 0..rows {
        write!(w, "{}", fmt(t as f64 * dt))?;
        for kernel in kernels {
            let v = kernel.values.get(t).copied().unwrap_or(0.0);
            write!(w, ",{}", fmt(v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
