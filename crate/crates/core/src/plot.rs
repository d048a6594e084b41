//! gnuplot scripts for sweep CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sweep::{fixed_a1, SweepTable, A1_HEADER, INTERFERENCE_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    A1Sweep,
    InterferenceSweep,
}

impl FigureKind {
    pub fn detect(table: &SweepTable) -> Result<Self> {
        if table.header == A1_HEADER {
            Ok(FigureKind::A1Sweep)
        } else if table.header == INTERFERENCE_HEADER {
            Ok(FigureKind::InterferenceSweep)
        } else {
            Err(Error::MalformedCsv(format!(
                "unrecognized header: {}",
                table.header.join(",")
            )))
        }
    }
}

/// Path of the script written next to `csv_path`: same stem, `.plot` extension.
pub fn script_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("plot")
}

/// Reads a sweep CSV and writes a gnuplot script next to it.
///
/// Nothing is written when the CSV is missing, empty, or its header does not
/// match `kind`.
pub fn emit_plot_script(csv_path: &Path, kind: FigureKind) -> Result<PathBuf> {
    let table = SweepTable::read_file(csv_path)?;
    if table.rows.is_empty() {
        return Err(Error::MalformedCsv(format!("{} has no data rows", csv_path.display())));
    }
    let detected = FigureKind::detect(&table)?;
    if detected != kind {
        return Err(Error::MalformedCsv(format!(
            "{} holds a {detected:?} table, not {kind:?}",
            csv_path.display()
        )));
    }
    let data_name = csv_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::MalformedCsv(format!("bad file name {}", csv_path.display())))?;
    let script = match kind {
        FigureKind::A1Sweep => a1_script(&table, data_name)?,
        FigureKind::InterferenceSweep => interference_script(&table, data_name)?,
    };
    let out = script_path(csv_path);
    fs::write(&out, script)?;
    Ok(out)
}

fn single_value(table: &SweepTable, column: &str) -> Result<f64> {
    let values = table.numeric_column(column)?;
    let first = values[0];
    if values.iter().any(|v| *v != first) {
        return Err(Error::MalformedCsv(format!("column {column} is not constant")));
    }
    Ok(first)
}

fn preamble(s: &mut String, data_name: &str, title: &str, xlabel: &str) {
    let png = Path::new(data_name).with_extension("png");
    let _ = writeln!(s, "# gnuplot script; run from the directory holding {data_name}");
    let _ = writeln!(s, "data = '{data_name}'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{}'", png.display());
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel 'outage probability'");
    let _ = writeln!(s, "set yrange [0:1.05]");
    let _ = writeln!(s, "set key outside right");
}

fn a1_script(table: &SweepTable, data_name: &str) -> Result<String> {
    let users = single_value(table, "K")? as usize;
    let rate = single_value(table, "R0")?;
    let marked = fixed_a1(users, rate)?;
    let mut s = String::new();
    preamble(&mut s, data_name, "Outage vs power of user 1", "a_1");
    let _ = writeln!(s, "a1_fixed = {marked}");
    let _ = writeln!(
        s,
        "set arrow from a1_fixed, graph 0 to a1_fixed, graph 1 nohead dashtype 2 lc rgb 'black'"
    );
    let mut curves = Vec::new();
    for n in 1..=users {
        curves.push(format!(
            "data skip 1 using 1:($2=={n} ? $3 : 1/0) with linespoints lw 2 title 'NOMA user {n}'"
        ));
    }
    for n in 1..=users {
        curves.push(format!(
            "data skip 1 using 1:($2=={n} ? $4 : 1/0) with lines dashtype 3 title 'OMA user {n}'"
        ));
    }
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    Ok(s)
}

fn interference_script(table: &SweepTable, data_name: &str) -> Result<String> {
    let target = single_value(table, "target_user")?;
    let boundary = single_value(table, "boundary")?;
    let users = single_value(table, "K")?;
    let mut s = String::new();
    preamble(
        &mut s,
        data_name,
        &format!("Certain outage beyond the interference limit, user {target}"),
        "A_n",
    );
    let _ = writeln!(s, "limit = {boundary}");
    let _ = writeln!(
        s,
        "set arrow from limit, graph 0 to limit, graph 1 nohead dashtype 2 lc rgb 'black'"
    );
    let _ = writeln!(
        s,
        "plot data skip 1 using 1:3 with linespoints lw 2 title 'user {target} own signal', \\\n     \
         data skip 1 using 1:4 with linespoints lw 2 title 'user {users} decoding user {target}'"
    );
    Ok(s)
}
