//! Field files (JSON and CSV) and report writing.

use std::fs;
use std::path::Path;

use fracvar_core::{Field, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl GridSpec {
    pub fn of(grid: &Grid) -> Self {
        GridSpec { lower: grid.lower().to_vec(), upper: grid.upper().to_vec(), nodes: grid.nodes().to_vec() }
    }

    pub fn build(&self) -> CliResult<Grid> {
        Ok(Grid::new(&self.lower, &self.upper, &self.nodes)?)
    }
}

/// On-disk field: component-major values, row-major nodes with axis 0 slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub grid: GridSpec,
    pub components: usize,
    pub values: Vec<f64>,
}

impl FieldFile {
    pub fn of(field: &Field) -> Self {
        FieldFile { grid: GridSpec::of(field.grid()), components: field.components(), values: field.values().to_vec() }
    }

    pub fn into_field(self) -> CliResult<Field> {
        let grid = self.grid.build()?;
        Ok(Field::from_values(&grid, self.components, self.values)?)
    }
}

pub fn read_field(path: &Path) -> CliResult<Field> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let file: FieldFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    file.into_field()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn write_field_json(path: &Path, field: &Field) -> CliResult<()> {
    write_json(path, &FieldFile::of(field))
}

/// `# grid ...` metadata line, then one row per node: coordinates, then components.
pub fn write_field_csv(path: &Path, field: &Field) -> CliResult<()> {
    let grid = field.grid();
    let mut out = metadata_line(grid, field.components());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..grid.dims()).map(|i| format!("x{i}")).collect();
    header.extend((0..field.components()).map(|c| format!("u{c}")));
    w.write_record(&header)?;
    let mut coords = vec![0.0; grid.dims()];
    for node in 0..grid.len() {
        grid.coordinates(node, &mut coords);
        let mut row: Vec<String> = coords.iter().map(|x| x.to_string()).collect();
        row.extend((0..field.components()).map(|c| field.get(c, node).to_string()));
        w.write_record(&row)?;
    }
    out.push_str(&into_string(w)?);
    fs::write(path, out).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn metadata_line(grid: &Grid, components: usize) -> String {
    format!(
        "# grid lower={:?} upper={:?} nodes={:?} components={}\n",
        grid.lower(),
        grid.upper(),
        grid.nodes(),
        components
    )
}

pub(crate) fn into_string(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::usage(format!("csv: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn write_field(dir: &Path, stem: &str, field: &Field, format: Format) -> CliResult<std::path::PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        Format::Csv => write_field_csv(&path, field)?,
        Format::Json => write_field_json(&path, field)?,
    }
    Ok(path)
}
