//! Reader and writer for Touchstone-style `.sNp` network-parameter files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::loads::DiodeLoadModel;
use super::{Provenance, ScenarioBundle};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{HarmonicSet, MultiFrequencyScattering, PortPartition, Z0_OHMS};

/// A single-point file may be used for harmonics within this fractional
/// distance of its only frequency.
pub const SINGLE_POINT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// Magnitude, angle in degrees.
    Ma,
    /// Magnitude in dB, angle in degrees.
    Db,
    /// Real, imaginary.
    Ri,
}

impl DataFormat {
    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            DataFormat::Ri => Complex64::new(a, b),
            DataFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            DataFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn encode(self, z: Complex64) -> (f64, f64) {
        match self {
            DataFormat::Ri => (z.re, z.im),
            DataFormat::Ma => (z.norm(), z.arg().to_degrees()),
            DataFormat::Db => (20.0 * z.norm().log10(), z.arg().to_degrees()),
        }
    }

    fn token(self) -> &'static str {
        match self {
            DataFormat::Ma => "MA",
            DataFormat::Db => "DB",
            DataFormat::Ri => "RI",
        }
    }
}

/// Tabulated S-parameters, normalized to 50 ohm.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkData {
    pub ports: usize,
    pub frequencies_hz: Vec<f64>,
    pub matrices: Vec<CMatrix>,
}

struct Options {
    unit: f64,
    format: DataFormat,
    reference_ohm: f64,
}

fn parse_options(line: &str, line_no: usize) -> Result<Options> {
    let err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let mut opts = Options {
        unit: 1e9,
        format: DataFormat::Ma,
        reference_ohm: Z0_OHMS,
    };
    let mut tokens = line.trim_start_matches('#').split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opts.unit = 1.0,
            "KHZ" => opts.unit = 1e3,
            "MHZ" => opts.unit = 1e6,
            "GHZ" => opts.unit = 1e9,
            "S" => {}
            "Y" | "Z" | "H" | "G" => {
                return Err(err(format!("only S parameters are supported, found '{tok}'")))
            }
            "MA" => opts.format = DataFormat::Ma,
            "DB" => opts.format = DataFormat::Db,
            "RI" => opts.format = DataFormat::Ri,
            "R" => {
                let value = tokens
                    .next()
                    .ok_or_else(|| err("option 'R' needs a reference impedance".into()))?;
                opts.reference_ohm = value
                    .parse()
                    .ok()
                    .filter(|r: &f64| *r > 0.0)
                    .ok_or_else(|| err(format!("invalid reference impedance '{value}'")))?;
            }
            _ => return Err(err(format!("unknown option token '{tok}'"))),
        }
    }
    Ok(opts)
}

/// Port count from an `.sNp` extension, if present.
pub fn ports_from_extension(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    ext.strip_prefix('s')?.strip_suffix('p')?.parse().ok()
}

/// Parses `text` as an `ports`-port network.
pub fn parse_network(text: &str, ports: usize) -> Result<NetworkData> {
    if ports == 0 {
        return Err(Error::InvalidPartition("network needs at least one port".into()));
    }
    let per_record = 1 + 2 * ports * ports;
    let mut options: Option<Options> = None;
    let mut frequencies = Vec::new();
    let mut raw_records: Vec<Vec<f64>> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut record_start = 0;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if options.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "duplicate option line".into(),
                });
            }
            if !raw_records.is_empty() || !current.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "option line after data".into(),
                });
            }
            options = Some(parse_options(line, line_no)?);
            continue;
        }
        if line.starts_with('[') {
            return Err(Error::Parse {
                line: line_no,
                message: "keyword sections are not supported".into(),
            });
        }
        if current.is_empty() {
            record_start = line_no;
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{tok}' is not a number"),
            })?;
            if current.len() == per_record {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "record starting at line {record_start} has more than {per_record} values \
                         (expected 1 + 2*{ports}^2)"
                    ),
                });
            }
            current.push(v);
        }
        if current.len() == per_record {
            raw_records.push(std::mem::take(&mut current));
            frequencies.push(record_start);
        }
    }
    if !current.is_empty() {
        return Err(Error::Parse {
            line: record_start,
            message: format!(
                "incomplete record: {} values, expected 1 + 2*{ports}^2 = {per_record}",
                current.len()
            ),
        });
    }
    if raw_records.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "no data records".into(),
        });
    }
    let opts = options.unwrap_or(Options {
        unit: 1e9,
        format: DataFormat::Ma,
        reference_ohm: Z0_OHMS,
    });

    let mut data = NetworkData {
        ports,
        frequencies_hz: Vec::with_capacity(raw_records.len()),
        matrices: Vec::with_capacity(raw_records.len()),
    };
    for (rec, &line_no) in raw_records.iter().zip(&frequencies) {
        let f = rec[0] * opts.unit;
        if let Some(&prev) = data.frequencies_hz.last() {
            if !(f > prev) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("frequency {f} Hz is not increasing"),
                });
            }
        }
        let mut s = CMatrix::zeros(ports, ports);
        for (p, pair) in rec[1..].chunks_exact(2).enumerate() {
            let (r, c) = if ports == 2 {
                // Two-port files list S11 S21 S12 S22.
                (p % 2, p / 2)
            } else {
                (p / ports, p % ports)
            };
            s[(r, c)] = opts.format.decode(pair[0], pair[1]);
        }
        if opts.reference_ohm != Z0_OHMS {
            s = renormalize(&s, opts.reference_ohm, Z0_OHMS).map_err(|e| Error::Parse {
                line: line_no,
                message: format!("cannot renormalize to {Z0_OHMS} ohm: {e}"),
            })?;
        }
        data.frequencies_hz.push(f);
        data.matrices.push(s);
    }
    Ok(data)
}

/// Changes the reference impedance of `s` from `from` to `to` ohm.
pub fn renormalize(s: &CMatrix, from: f64, to: f64) -> Result<CMatrix> {
    let n = s.nrows();
    let id = CMatrix::identity(n, n);
    let z = (&id + s) * linalg::inverse(&(&id - s))? * Complex64::from(from);
    let zt = &id * Complex64::from(to);
    Ok((&z - &zt) * linalg::inverse(&(&z + &zt))?)
}

impl NetworkData {
    /// Linear interpolation in real and imaginary parts. Tabulated nodes are
    /// reproduced exactly.
    pub fn interpolate(&self, freq_hz: f64) -> Result<CMatrix> {
        let f = &self.frequencies_hz;
        let (lo, hi) = (f[0], f[f.len() - 1]);
        if f.len() == 1 {
            if (freq_hz - lo).abs() <= SINGLE_POINT_TOLERANCE * lo {
                return Ok(self.matrices[0].clone());
            }
            return Err(Error::FrequencyOutOfRange {
                requested_hz: freq_hz,
                min_hz: lo * (1.0 - SINGLE_POINT_TOLERANCE),
                max_hz: hi * (1.0 + SINGLE_POINT_TOLERANCE),
            });
        }
        if !(freq_hz >= lo && freq_hz <= hi) {
            return Err(Error::FrequencyOutOfRange {
                requested_hz: freq_hz,
                min_hz: lo,
                max_hz: hi,
            });
        }
        match f.binary_search_by(|x| x.total_cmp(&freq_hz)) {
            Ok(i) => Ok(self.matrices[i].clone()),
            Err(i) => {
                let (a, b) = (&self.matrices[i - 1], &self.matrices[i]);
                let t = (freq_hz - f[i - 1]) / (f[i] - f[i - 1]);
                Ok(a * Complex64::from(1.0 - t) + b * Complex64::from(t))
            }
        }
    }

    /// Serializes as a 50-ohm Touchstone file in `format`, frequencies in Hz.
    pub fn to_touchstone(&self, format: DataFormat) -> String {
        let n = self.ports;
        let mut out = String::new();
        let _ = writeln!(out, "! {n}-port network");
        let _ = writeln!(out, "# Hz S {} R {}", format.token(), Z0_OHMS);
        for (f, s) in self.frequencies_hz.iter().zip(&self.matrices) {
            let mut values = Vec::with_capacity(2 * n * n);
            for p in 0..n * n {
                let (r, c) = if n == 2 { (p % 2, p / 2) } else { (p / n, p % n) };
                let (a, b) = format.encode(s[(r, c)]);
                values.push(format!("{a:.17e} {b:.17e}"));
            }
            if n <= 2 {
                let _ = writeln!(out, "{f:.17e} {}", values.join(" "));
            } else {
                for (row, chunk) in values.chunks(n).enumerate() {
                    if row == 0 {
                        let _ = writeln!(out, "{f:.17e} {}", chunk.join(" "));
                    } else {
                        let _ = writeln!(out, "  {}", chunk.join(" "));
                    }
                }
            }
        }
        out
    }
}

/// Frequencies and load model needed to turn a network file into a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub carrier_hz: f64,
    pub modulation_hz: f64,
    pub loads: DiodeLoadModel,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            carrier_hz: 2.4e9,
            modulation_hz: 1e5,
            loads: DiodeLoadModel::default(),
        }
    }
}

/// Reads a network file and samples it at every `f_h`.
pub fn ingest_network_file(
    path: &Path,
    partition: PortPartition,
    harmonics: HarmonicSet,
    options: &IngestOptions,
) -> Result<ScenarioBundle> {
    let n = partition.total();
    if let Some(ext_ports) = ports_from_extension(path) {
        if ext_ports != n {
            return Err(Error::ShapeMismatch(format!(
                "file extension declares {ext_ports} ports, partition has {n}"
            )));
        }
    }
    let text = std::fs::read_to_string(path)?;
    let data = parse_network(&text, n)?;
    let mut matrices = BTreeMap::new();
    for h in harmonics.orders() {
        let f = options.carrier_hz + h as f64 * options.modulation_hz;
        matrices.insert(h, data.interpolate(f)?);
    }
    let scattering = MultiFrequencyScattering::new(
        partition,
        harmonics,
        matrices,
        options.carrier_hz,
        options.modulation_hz,
    )?;
    scattering.check(false)?;
    let loads = options
        .loads
        .load_states(harmonics, options.carrier_hz, options.modulation_hz)?;
    ScenarioBundle::new(
        scattering,
        loads,
        None,
        Provenance::Ingested {
            source: path.display().to_string(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(ports: usize) -> NetworkData {
        let m = |k: f64| {
            CMatrix::from_fn(ports, ports, |r, c| {
                let x = (r * ports + c) as f64 + k;
                Complex64::from_polar(0.1 + 0.02 * x, 0.3 * x - 1.0)
            })
        };
        NetworkData {
            ports,
            frequencies_hz: vec![1e9, 2e9, 3e9],
            matrices: vec![m(0.0), m(1.0), m(2.0)],
        }
    }

    #[test]
    fn formats_agree() {
        for ports in [1, 2, 3, 5] {
            let d = sample(ports);
            for fmt in [DataFormat::Ma, DataFormat::Db, DataFormat::Ri] {
                let back = parse_network(&d.to_touchstone(fmt), ports).unwrap();
                assert_eq!(back.frequencies_hz, d.frequencies_hz);
                for (a, b) in back.matrices.iter().zip(&d.matrices) {
                    assert!((a - b).norm() < 1e-12, "{fmt:?} {ports}");
                }
            }
        }
    }

    #[test]
    fn two_port_column_order() {
        let text = "# GHz S RI R 50\n1 0.1 0 0.2 0 0.3 0 0.4 0\n";
        let d = parse_network(text, 2).unwrap();
        let s = &d.matrices[0];
        assert_eq!(s[(1, 0)].re, 0.2);
        assert_eq!(s[(0, 1)].re, 0.3);
        assert_eq!(d.frequencies_hz[0], 1e9);
    }

    #[test]
    fn options_case_insensitive_and_comments() {
        let text = "! header\n# mhz s ri r 50 ! trailing\n100 0.5 0.25 ! data\n";
        let d = parse_network(text, 1).unwrap();
        assert_eq!(d.frequencies_hz, vec![1e8]);
        assert_eq!(d.matrices[0][(0, 0)], Complex64::new(0.5, 0.25));
    }

    #[test]
    fn malformed_files_name_the_line() {
        let bad_option = "# GHz S XX R 50\n1 0.5 0\n";
        assert!(matches!(parse_network(bad_option, 1), Err(Error::Parse { line: 1, .. })));
        // Two-port data read as a one-port: record overflows on line 3.
        let wrong_n = "! c\n# GHz S RI\n1 0.1 0 0.2 0 0.3 0 0.4 0\n";
        assert!(matches!(parse_network(wrong_n, 1), Err(Error::Parse { line: 3, .. })));
        let short = "# GHz S RI\n1 0.1 0\n2 0.1\n";
        assert!(matches!(parse_network(short, 1), Err(Error::Parse { line: 3, .. })));
        let nan = "# GHz S RI\n1 0.1 zz\n";
        assert!(matches!(parse_network(nan, 1), Err(Error::Parse { line: 2, .. })));
        let order = "# GHz S RI\n2 0.1 0\n1 0.1 0\n";
        assert!(matches!(parse_network(order, 1), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn interpolation_exact_on_nodes() {
        let d = sample(3);
        for (f, m) in d.frequencies_hz.iter().zip(&d.matrices) {
            assert_eq!(&d.interpolate(*f).unwrap(), m);
        }
        let mid = d.interpolate(1.5e9).unwrap();
        let expect = (&d.matrices[0] + &d.matrices[1]) * Complex64::from(0.5);
        assert!((mid - expect).norm() < 1e-15);
        assert!(matches!(d.interpolate(0.5e9), Err(Error::FrequencyOutOfRange { .. })));
    }

    #[test]
    fn reference_impedance_renormalized() {
        let s50 = CMatrix::from_row_slice(1, 1, &[Complex64::new(0.2, 0.1)]);
        let s75 = renormalize(&s50, 50.0, 75.0).unwrap();
        let text = format!("# Hz S RI R 75\n1e9 {:.17e} {:.17e}\n", s75[(0, 0)].re, s75[(0, 0)].im);
        let d = parse_network(&text, 1).unwrap();
        assert!((d.matrices[0][(0, 0)] - s50[(0, 0)]).norm() < 1e-14);
    }

    #[test]
    fn extension_port_count() {
        assert_eq!(ports_from_extension(Path::new("a/b.s12p")), Some(12));
        assert_eq!(ports_from_extension(Path::new("a/b.S2P")), Some(2));
        assert_eq!(ports_from_extension(Path::new("a/b.txt")), None);
    }
}
