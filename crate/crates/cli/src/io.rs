//! CSV and report files. Every file starts with a `#` header block.

use std::fs;
use std::path::Path;

use hetasym_core::{DensityMatrix, QuadratureTrace};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::error::{io_error, CliError};

pub const TRACE_HEADER: [&str; 4] = ["index", "x", "p", "phase_true"];

/// Comment block with tool version, command, config hash, seed and the
/// resolved config.
pub fn header(command: &str, cfg: &RunConfig) -> String {
    let mut h = format!(
        "# hetasym {}\n# command = {command}\n# config_sha256 = {}\n# seed = {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        cfg.seed
    );
    for line in cfg.render().lines() {
        h.push_str("# ");
        h.push_str(line);
        h.push('\n');
    }
    h
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

/// Writes `header`, then CSV rows of `fields` and `rows`.
pub fn csv_body<R, I>(fields: &[&str], rows: R) -> Result<Vec<u8>, CliError>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut w = csv_writer();
    w.write_record(fields)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_output(path: &Path, header: &str, body: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let mut bytes = header.as_bytes().to_vec();
    bytes.extend_from_slice(body);
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

/// `key = value` lines.
pub fn report_body(entries: &[(&str, String)]) -> Vec<u8> {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect::<String>().into_bytes()
}

/// Companion path: `out.csv` with tag `wigner` becomes `out.wigner.csv`.
pub fn companion(out: &Path, tag: &str, ext: &str) -> std::path::PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file))
}

fn parse_f64(s: &str, row: usize, col: &str) -> Result<f64, CliError> {
    s.parse::<f64>()
        .map_err(|_| CliError::Invalid(format!("data row {row}: `{col}` is not a number: `{s}`")))
}

/// Reads `index,x,p[,phase_true]` in SNU.
pub fn read_trace(path: &Path) -> Result<QuadratureTrace, CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let with_phase = match names.as_slice() {
        ["index", "x", "p"] => false,
        ["index", "x", "p", "phase_true"] => true,
        _ => {
            return Err(CliError::Invalid(format!(
                "{}: expected header `index,x,p[,phase_true]`, got `{}`",
                path.display(),
                names.join(",")
            )))
        }
    };
    let (mut x, mut p, mut phase) = (Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rec[0]
            .parse::<u64>()
            .map_err(|_| CliError::Invalid(format!("data row {row}: bad index `{}`", &rec[0])))?;
        x.push(parse_f64(&rec[1], row, "x")?);
        p.push(parse_f64(&rec[2], row, "p")?);
        if with_phase {
            phase.push(parse_f64(&rec[3], row, "phase_true")?);
        }
    }
    Ok(QuadratureTrace::new(x, p, with_phase.then_some(phase))?)
}

pub fn trace_body(trace: &QuadratureTrace) -> Result<Vec<u8>, CliError> {
    let phase = trace.phase_true();
    let fields: &[&str] = if phase.is_some() { &TRACE_HEADER } else { &TRACE_HEADER[..3] };
    let rows = (0..trace.len()).map(|i| {
        let mut r = vec![i.to_string(), trace.x()[i].to_string(), trace.p()[i].to_string()];
        if let Some(ph) = phase {
            r.push(ph[i].to_string());
        }
        r
    });
    csv_body(fields, rows)
}

/// `row,col,re,im` for every element.
pub fn density_body(rho: &DensityMatrix) -> Result<Vec<u8>, CliError> {
    let d = rho.dim();
    let rows = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| {
        let z = rho.element(r, c);
        vec![r.to_string(), c.to_string(), z.re.to_string(), z.im.to_string()]
    });
    csv_body(&["row", "col", "re", "im"], rows)
}

pub fn read_density(path: &Path) -> Result<DensityMatrix, CliError> {
    let mut rdr = reader(path)?;
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if names != ["row", "col", "re", "im"] {
        return Err(CliError::Invalid(format!("{}: expected header `row,col,re,im`", path.display())));
    }
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let idx = |k: usize| {
            rec[k].parse::<usize>().map_err(|_| CliError::Invalid(format!("data row {i}: bad index")))
        };
        entries.push((idx(0)?, idx(1)?, Complex64::new(parse_f64(&rec[2], i, "re")?, parse_f64(&rec[3], i, "im")?)));
    }
    let dim = entries.iter().map(|&(r, c, _)| r.max(c) + 1).max().unwrap_or(0);
    if dim == 0 || entries.len() != dim * dim {
        return Err(CliError::Invalid(format!(
            "{}: expected {} entries for a {dim}x{dim} matrix, got {}",
            path.display(),
            dim * dim,
            entries.len()
        )));
    }
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(f64::NAN, 0.0));
    for (r, c, z) in entries {
        m[(r, c)] = z;
    }
    if m.iter().any(|z| z.re.is_nan()) {
        return Err(CliError::Invalid(format!("{}: duplicate or missing matrix entries", path.display())));
    }
    Ok(DensityMatrix::new(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = QuadratureTrace::new(vec![0.1, -2.5], vec![1.0 / 3.0, 4.0], Some(vec![0.0, 1.25])).unwrap();
        write_output(&path, "# hi\n", &trace_body(&t).unwrap()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("# hi\nindex,x,p,phase_true\n0,0.1,"));
        assert_eq!(read_trace(&path).unwrap(), t);
    }

    #[test]
    fn phase_column_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "index,x,p\n0,1,2\n1,3,4\n").unwrap();
        assert!(read_trace(&path).unwrap().phase_true().is_none());
        fs::write(&path, "index,p,x\n0,1,2\n").unwrap();
        assert!(matches!(read_trace(&path), Err(CliError::Invalid(_))));
        fs::write(&path, "index,x,p\n0,1,oops\n").unwrap();
        assert!(matches!(read_trace(&path), Err(CliError::Invalid(_))));
    }

    #[test]
    fn density_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        let rho = hetasym_core::tomography::ideal_coherent_state(Complex64::new(0.5, -0.3), 8).unwrap();
        write_output(&path, "", &density_body(&rho).unwrap()).unwrap();
        assert_eq!(read_density(&path).unwrap(), rho);
    }

    #[test]
    fn companion_names() {
        assert_eq!(companion(Path::new("a/b.csv"), "wigner", "csv"), Path::new("a/b.wigner.csv"));
    }
}
