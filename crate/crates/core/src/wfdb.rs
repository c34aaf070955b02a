//! WFDB header/signal parsing and alarm-window extraction.
//!
//! Only single-segment records with every signal in one `.dat` file are
//! handled, in storage formats 16 (16-bit little-endian two's complement) and
//! 212 (two 12-bit samples packed into three bytes). The format minimum
//! (-32768 / -2048) marks a missing sample; it is surfaced through
//! [`WaveformRecord::missing_mask`] with the physical value set to 0.

use std::fmt::Write as _;
use std::ops::Range;

use ndarray::{s, Array2};

use crate::{Error, Label, Result};

/// Gain WFDB substitutes when a header records a gain of zero.
pub const DEFAULT_ADC_GAIN: f64 = 200.0;

/// Seconds of context kept before the alarm onset.
pub const PRE_ALARM_SECONDS: f64 = 300.0;
/// Seconds of context kept after the alarm onset.
pub const POST_ALARM_SECONDS: f64 = 60.0;
/// Total alarm window length in seconds.
pub const WINDOW_SECONDS: f64 = PRE_ALARM_SECONDS + POST_ALARM_SECONDS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StorageFormat {
    Fmt16,
    Fmt212,
}

impl StorageFormat {
    pub fn code(self) -> u16 {
        match self {
            StorageFormat::Fmt16 => 16,
            StorageFormat::Fmt212 => 212,
        }
    }

    pub fn from_code(code: u16) -> Result<Self> {
        match code {
            16 => Ok(StorageFormat::Fmt16),
            212 => Ok(StorageFormat::Fmt212),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }

    /// ADC value reserved for missing samples.
    pub fn sentinel(self) -> i32 {
        match self {
            StorageFormat::Fmt16 => -32768,
            StorageFormat::Fmt212 => -2048,
        }
    }

    /// Largest storable ADC value; the valid range is symmetric and excludes the sentinel.
    pub fn max_adc(self) -> i32 {
        match self {
            StorageFormat::Fmt16 => 32767,
            StorageFormat::Fmt212 => 2047,
        }
    }

    pub fn resolution_bits(self) -> u32 {
        match self {
            StorageFormat::Fmt16 => 16,
            StorageFormat::Fmt212 => 12,
        }
    }

    /// Bytes occupied by `n` interleaved samples.
    pub fn byte_len(self, n: usize) -> usize {
        match self {
            StorageFormat::Fmt16 => 2 * n,
            StorageFormat::Fmt212 => (3 * n).div_ceil(2),
        }
    }

    fn name(self) -> &'static str {
        match self {
            StorageFormat::Fmt16 => "format 16",
            StorageFormat::Fmt212 => "format 212",
        }
    }
}

/// One signal specification line of a header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub storage_format: StorageFormat,
    /// ADC units per physical unit.
    pub adc_gain: f64,
    /// ADC value corresponding to zero physical units.
    pub baseline: i32,
    pub units: String,
    pub adc_resolution: Option<u32>,
    pub adc_zero: Option<i32>,
    pub initial_value: Option<i32>,
    pub checksum: Option<u16>,
    pub block_size: Option<u32>,
    /// Free-text signal description, e.g. the lead name.
    pub description: String,
}

impl SignalSpec {
    /// A format-16 spec with the given gain and zero baseline.
    pub fn new(file_name: impl Into<String>, adc_gain: f64, units: &str, description: &str) -> Self {
        SignalSpec {
            file_name: file_name.into(),
            storage_format: StorageFormat::Fmt16,
            adc_gain,
            baseline: 0,
            units: units.to_string(),
            adc_resolution: None,
            adc_zero: None,
            initial_value: None,
            checksum: None,
            block_size: None,
            description: description.to_string(),
        }
    }

    fn to_physical(&self, adc: i32) -> f64 {
        (adc - self.baseline) as f64 / self.adc_gain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub n_signals: usize,
    /// Hz
    pub sampling_frequency: f64,
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
}

impl RecordHeader {
    pub fn duration_seconds(&self) -> f64 {
        self.n_samples as f64 / self.sampling_frequency
    }

    fn validate(&self) -> Result<()> {
        if self.n_signals != self.signals.len() {
            return Err(Error::MalformedHeader(format!(
                "record line declares {} signals but {} signal lines follow",
                self.n_signals,
                self.signals.len()
            )));
        }
        if !(self.sampling_frequency.is_finite() && self.sampling_frequency > 0.0) {
            return Err(Error::MalformedHeader(format!(
                "sampling frequency must be positive, got {}",
                self.sampling_frequency
            )));
        }
        if let Some(first) = self.signals.first() {
            for (i, sig) in self.signals.iter().enumerate() {
                if sig.file_name != first.file_name {
                    return Err(Error::MalformedHeader(format!(
                        "signal {i} stored in {:?}; records spanning several signal files are not supported",
                        sig.file_name
                    )));
                }
                if sig.storage_format != first.storage_format {
                    return Err(Error::MalformedHeader(format!(
                        "signal {i} mixes storage formats within one file"
                    )));
                }
                if sig.adc_gain == 0.0 || !sig.adc_gain.is_finite() {
                    return Err(Error::MalformedHeader(format!("signal {i} has gain {}", sig.adc_gain)));
                }
            }
        }
        Ok(())
    }

    fn format(&self) -> Option<StorageFormat> {
        self.signals.first().map(|s| s.storage_format)
    }
}

/// A decoded record: `samples` is T×C in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformRecord {
    pub header: RecordHeader,
    pub samples: Array2<f64>,
    pub missing_mask: Array2<bool>,
}

impl WaveformRecord {
    /// Builds a record, checking that the matrices agree with the header.
    pub fn new(header: RecordHeader, samples: Array2<f64>, missing_mask: Array2<bool>) -> Result<Self> {
        header.validate()?;
        let expected = (header.n_samples, header.n_signals);
        if samples.dim() != expected || missing_mask.dim() != expected {
            return Err(Error::ShapeMismatch(format!(
                "header expects {expected:?}, samples {:?}, mask {:?}",
                samples.dim(),
                missing_mask.dim()
            )));
        }
        Ok(WaveformRecord { header, samples, missing_mask })
    }

    pub fn fs(&self) -> f64 {
        self.header.sampling_frequency
    }

    pub fn n_channels(&self) -> usize {
        self.header.n_signals
    }

    /// Copies rows `range` into a new record named `name`.
    pub fn slice(&self, range: Range<usize>, name: &str) -> Result<WaveformRecord> {
        if range.end > self.header.n_samples || range.start > range.end {
            return Err(Error::WindowOutOfBounds(format!(
                "rows {range:?} outside record of {} samples",
                self.header.n_samples
            )));
        }
        let mut header = self.header.clone();
        header.record_name = name.to_string();
        header.n_samples = range.len();
        for sig in &mut header.signals {
            sig.file_name = format!("{name}.dat");
            sig.checksum = None;
            sig.initial_value = None;
        }
        Ok(WaveformRecord {
            header,
            samples: self.samples.slice(s![range.clone(), ..]).to_owned(),
            missing_mask: self.missing_mask.slice(s![range, ..]).to_owned(),
        })
    }
}

/// The fixed window around one alarm: 300 s before onset, 60 s after.
#[derive(Debug, Clone, PartialEq)]
pub struct AlarmWindow {
    pub record_id: String,
    pub fs: f64,
    pub channel_names: Vec<String>,
    /// T_w×C physical values.
    pub samples: Array2<f64>,
    pub missing_mask: Array2<bool>,
    pub label: Label,
    /// Sample offset of the alarm onset within the window.
    pub alarm_index: usize,
}

impl AlarmWindow {
    pub fn n_channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn has_missing(&self) -> bool {
        self.missing_mask.iter().any(|&m| m)
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse::<T>()
        .map_err(|_| Error::MalformedHeader(format!("{what}: cannot parse {field:?}")))
}

/// Parses `.hea` text. Lines starting with `#` are comments.
pub fn parse_header(text: &str) -> Result<RecordHeader> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let record_line = lines.next().ok_or_else(|| Error::MalformedHeader("empty header".into()))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(Error::MalformedHeader(format!(
            "record line needs name, signal count, frequency and sample count: {record_line:?}"
        )));
    }
    let record_name = fields[0];
    if record_name.contains('/') {
        return Err(Error::MalformedHeader(format!("multi-segment record {record_name:?} not supported")));
    }
    let n_signals: usize = parse_num(fields[1], "signal count")?;
    // "250/250(0)" -> counter frequency and base counter are ignored.
    let fs_field = fields[2].split(['/', '(']).next().unwrap_or_default();
    let sampling_frequency: f64 = parse_num(fs_field, "sampling frequency")?;
    let n_samples: usize = parse_num(fields[3], "sample count")?;

    let mut signals = Vec::with_capacity(n_signals);
    for line in lines {
        signals.push(parse_signal_line(line)?);
    }
    let header = RecordHeader {
        record_name: record_name.to_string(),
        n_signals,
        sampling_frequency,
        n_samples,
        signals,
    };
    header.validate()?;
    Ok(header)
}

fn parse_signal_line(line: &str) -> Result<SignalSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::MalformedHeader(format!("signal line lacks a format: {line:?}")));
    }
    let file_name = fields[0].to_string();

    let fmt_field = fields[1];
    let digits_end = fmt_field.find(|c: char| !c.is_ascii_digit()).unwrap_or(fmt_field.len());
    if digits_end == 0 {
        return Err(Error::MalformedHeader(format!("bad format field {fmt_field:?}")));
    }
    let code: u16 = parse_num(&fmt_field[..digits_end], "format")?;
    let storage_format = StorageFormat::from_code(code)?;
    if digits_end != fmt_field.len() {
        return Err(Error::UnsupportedFormat(format!(
            "{fmt_field} (samples-per-frame, skew and offset modifiers are not supported)"
        )));
    }

    let (mut adc_gain, mut baseline, mut units) = (DEFAULT_ADC_GAIN, None, "mV".to_string());
    if let Some(gain_field) = fields.get(2) {
        let (gain_part, unit_part) = match gain_field.split_once('/') {
            Some((g, u)) => (g, Some(u)),
            None => (*gain_field, None),
        };
        let gain_str = match gain_part.split_once('(') {
            Some((g, rest)) => {
                let b = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::MalformedHeader(format!("unterminated baseline in {gain_field:?}")))?;
                baseline = Some(parse_num::<i32>(b, "baseline")?);
                g
            }
            None => gain_part,
        };
        adc_gain = parse_num(gain_str, "gain")?;
        if adc_gain == 0.0 {
            adc_gain = DEFAULT_ADC_GAIN;
        }
        if let Some(u) = unit_part {
            units = u.to_string();
        }
    }
    let adc_resolution = fields.get(3).map(|f| parse_num::<u32>(f, "ADC resolution")).transpose()?;
    let adc_zero = fields.get(4).map(|f| parse_num::<i32>(f, "ADC zero")).transpose()?;
    let initial_value = fields.get(5).map(|f| parse_num::<i32>(f, "initial value")).transpose()?;
    let checksum = fields
        .get(6)
        .map(|f| parse_num::<i64>(f, "checksum").map(|c| c.rem_euclid(1 << 16) as u16))
        .transpose()?;
    let block_size = fields.get(7).map(|f| parse_num::<u32>(f, "block size")).transpose()?;
    let description = fields.get(8..).map(|d| d.join(" ")).unwrap_or_default();

    Ok(SignalSpec {
        file_name,
        storage_format,
        adc_gain,
        baseline: baseline.or(adc_zero).unwrap_or(0),
        units,
        adc_resolution,
        adc_zero,
        initial_value,
        checksum,
        block_size,
        description,
    })
}

/// Renders a header in the canonical layout [`parse_header`] reads.
pub fn format_header(header: &RecordHeader) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        header.record_name, header.n_signals, header.sampling_frequency, header.n_samples
    );
    for sig in &header.signals {
        let _ = write!(
            out,
            "{} {} {}({})/{} {} {} {} {} {}",
            sig.file_name,
            sig.storage_format.code(),
            sig.adc_gain,
            sig.baseline,
            sig.units,
            sig.adc_resolution.unwrap_or(sig.storage_format.resolution_bits()),
            sig.adc_zero.unwrap_or(0),
            sig.initial_value.unwrap_or(0),
            sig.checksum.unwrap_or(0) as i16,
            sig.block_size.unwrap_or(0),
        );
        if !sig.description.is_empty() {
            let _ = write!(out, " {}", sig.description);
        }
        out.push('\n');
    }
    out
}

fn decode_adc(format: StorageFormat, bytes: &[u8], n: usize) -> Vec<i32> {
    let mut out = Vec::with_capacity(n);
    match format {
        StorageFormat::Fmt16 => {
            out.extend(bytes.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]]) as i32));
        }
        StorageFormat::Fmt212 => {
            let sign_extend = |v: i32| if v & 0x800 != 0 { v - 0x1000 } else { v };
            for chunk in bytes.chunks(3) {
                let lo = chunk[0] as i32;
                let mid = chunk.get(1).copied().unwrap_or(0) as i32;
                out.push(sign_extend(lo | ((mid & 0x0F) << 8)));
                if out.len() < n {
                    let hi = chunk.get(2).copied().unwrap_or(0) as i32;
                    out.push(sign_extend(hi | ((mid & 0xF0) << 4)));
                }
            }
        }
    }
    out.truncate(n);
    out
}

fn encode_adc(format: StorageFormat, adc: &[i32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(format.byte_len(adc.len()));
    match format {
        StorageFormat::Fmt16 => {
            for &v in adc {
                out.extend_from_slice(&(v as i16).to_le_bytes());
            }
        }
        StorageFormat::Fmt212 => {
            for pair in adc.chunks(2) {
                let a = (pair[0] & 0xFFF) as u32;
                match pair.get(1) {
                    Some(&b) => {
                        let b = (b & 0xFFF) as u32;
                        out.push((a & 0xFF) as u8);
                        out.push((((a >> 8) & 0x0F) | ((b >> 4) & 0xF0)) as u8);
                        out.push((b & 0xFF) as u8);
                    }
                    None => {
                        out.push((a & 0xFF) as u8);
                        out.push(((a >> 8) & 0x0F) as u8);
                    }
                }
            }
        }
    }
    out
}

fn checksums(adc: &[i32], n_signals: usize) -> Vec<u16> {
    let mut sums = vec![0i64; n_signals];
    for frame in adc.chunks(n_signals) {
        for (sum, &v) in sums.iter_mut().zip(frame) {
            *sum += v as i64;
        }
    }
    sums.into_iter().map(|s| s.rem_euclid(1 << 16) as u16).collect()
}

/// Decodes a signal file without checksum verification.
pub fn read_signal(header: &RecordHeader, bytes: &[u8]) -> Result<WaveformRecord> {
    read_signal_checked(header, bytes, false)
}

/// Decodes a signal file; with `verify_checksums`, header checksums (when
/// present) must match the decoded data.
pub fn read_signal_checked(header: &RecordHeader, bytes: &[u8], verify_checksums: bool) -> Result<WaveformRecord> {
    header.validate()?;
    let (t, c) = (header.n_samples, header.n_signals);
    let Some(format) = header.format() else {
        return WaveformRecord::new(header.clone(), Array2::zeros((t, 0)), Array2::from_elem((t, 0), false));
    };
    let expected = format.byte_len(t * c);
    if bytes.len() != expected {
        return Err(Error::TruncatedData { expected, found: bytes.len() });
    }
    let adc = decode_adc(format, bytes, t * c);
    if verify_checksums {
        for (i, (sig, actual)) in header.signals.iter().zip(checksums(&adc, c)).enumerate() {
            if let Some(expected) = sig.checksum {
                if expected != actual {
                    return Err(Error::ChecksumMismatch { signal: i, expected, actual });
                }
            }
        }
    }
    let sentinel = format.sentinel();
    let mut samples = Array2::zeros((t, c));
    let mut mask = Array2::from_elem((t, c), false);
    for (idx, &v) in adc.iter().enumerate() {
        let (row, col) = (idx / c, idx % c);
        if v == sentinel {
            mask[[row, col]] = true;
        } else {
            samples[[row, col]] = header.signals[col].to_physical(v);
        }
    }
    WaveformRecord::new(header.clone(), samples, mask)
}

/// Quantizes `record` into `format`. Returns the header text and the signal
/// bytes; the header names `<record_name>.dat` and carries fresh checksums.
pub fn write_record(record: &WaveformRecord, format: StorageFormat) -> Result<(String, Vec<u8>)> {
    record.header.validate()?;
    let adc = quantize(record, format)?;
    let header = quantized_header(record, format, &adc);
    Ok((format_header(&header), encode_adc(format, &adc)))
}

fn quantize(record: &WaveformRecord, format: StorageFormat) -> Result<Vec<i32>> {
    let (t, c) = record.samples.dim();
    let mut adc = Vec::with_capacity(t * c);
    let max = format.max_adc() as i64;
    for row in 0..t {
        for (col, sig) in record.header.signals.iter().enumerate() {
            if record.missing_mask[[row, col]] {
                adc.push(format.sentinel());
                continue;
            }
            let x = record.samples[[row, col]];
            let scaled = (x * sig.adc_gain).round();
            if !scaled.is_finite() || scaled.abs() > 1e12 {
                return Err(Error::ValueOutOfRange { format: format.name(), adc: i64::MAX });
            }
            let v = scaled as i64 + sig.baseline as i64;
            if v < -max || v > max {
                return Err(Error::ValueOutOfRange { format: format.name(), adc: v });
            }
            adc.push(v as i32);
        }
    }
    Ok(adc)
}

fn quantized_header(record: &WaveformRecord, format: StorageFormat, adc: &[i32]) -> RecordHeader {
    let c = record.header.n_signals;
    let sums = checksums(adc, c.max(1));
    let file_name = format!("{}.dat", record.header.record_name);
    let mut header = record.header.clone();
    for (i, sig) in header.signals.iter_mut().enumerate() {
        sig.file_name = file_name.clone();
        sig.storage_format = format;
        sig.adc_resolution = Some(format.resolution_bits());
        sig.adc_zero = Some(sig.adc_zero.unwrap_or(0));
        sig.initial_value = Some(adc.get(i).copied().unwrap_or(0));
        sig.checksum = Some(sums[i]);
        sig.block_size = Some(0);
    }
    header
}

/// Sample range of the window around an alarm at `alarm_time` seconds, and
/// the onset offset within it.
pub fn alarm_window_range(header: &RecordHeader, alarm_time: f64) -> Result<(Range<usize>, usize)> {
    let fs = header.sampling_frequency;
    let pre = (PRE_ALARM_SECONDS * fs).round() as usize;
    let total = (WINDOW_SECONDS * fs).round() as usize;
    if !alarm_time.is_finite() || alarm_time < PRE_ALARM_SECONDS {
        return Err(Error::WindowOutOfBounds(format!(
            "alarm at {alarm_time} s has less than {PRE_ALARM_SECONDS} s of history"
        )));
    }
    let onset = (alarm_time * fs).round() as usize;
    let start = onset.saturating_sub(pre);
    let end = start + total;
    if onset < pre || end > header.n_samples {
        return Err(Error::WindowOutOfBounds(format!(
            "alarm at {alarm_time} s needs samples {start}..{end}, record {:?} has {}",
            header.record_name, header.n_samples
        )));
    }
    Ok((start..end, pre))
}

pub fn extract_alarm_window(record: &WaveformRecord, alarm_time: f64, label: Label) -> Result<AlarmWindow> {
    let (range, alarm_index) = alarm_window_range(&record.header, alarm_time)?;
    Ok(AlarmWindow {
        record_id: record.header.record_name.clone(),
        fs: record.fs(),
        channel_names: record.header.signals.iter().map(|s| s.description.clone()).collect(),
        samples: record.samples.slice(s![range.clone(), ..]).to_owned(),
        missing_mask: record.missing_mask.slice(s![range, ..]).to_owned(),
        label,
        alarm_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_signal_header(fmt: &str) -> String {
        format!(
            "v100s 2 250 90000\n\
             # comment line\n\
             v100s.dat {fmt} 200(0)/mV 16 0 0 0 0 II\n\
             v100s.dat {fmt} 200(0)/mV 16 0 0 0 0 V\n"
        )
    }

    #[test]
    fn parses_record_and_signal_lines() {
        let h = parse_header(&two_signal_header("16")).unwrap();
        assert_eq!(h.record_name, "v100s");
        assert_eq!(h.n_signals, 2);
        assert_eq!(h.sampling_frequency, 250.0);
        assert_eq!(h.n_samples, 90000);
        assert_eq!(h.signals[0].storage_format, StorageFormat::Fmt16);
        assert_eq!(h.signals[0].adc_gain, 200.0);
        assert_eq!(h.signals[0].units, "mV");
        assert_eq!(h.signals[1].description, "V");
    }

    #[test]
    fn format_8_is_unsupported() {
        assert!(matches!(parse_header(&two_signal_header("8")), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(parse_header(""), Err(Error::MalformedHeader(_))));
        assert!(matches!(parse_header("rec 2 250"), Err(Error::MalformedHeader(_))));
        assert!(matches!(parse_header("rec two 250 10"), Err(Error::MalformedHeader(_))));
        // signal count disagrees with the lines that follow
        assert!(matches!(
            parse_header("rec 3 250 10\nrec.dat 16 200/mV\n"),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn gain_field_variants() {
        let h = parse_header("r 3 125/125(0) 4\nr.dat 212 100\nr.dat 212 50/mmHg 12 7\nr.dat 212 0(5)/uV\n").unwrap();
        assert_eq!(h.sampling_frequency, 125.0);
        assert_eq!((h.signals[0].adc_gain, h.signals[0].baseline), (100.0, 0));
        assert_eq!((h.signals[1].adc_gain, h.signals[1].baseline), (50.0, 7));
        assert_eq!(h.signals[1].units, "mmHg");
        assert_eq!((h.signals[2].adc_gain, h.signals[2].baseline), (DEFAULT_ADC_GAIN, 5));
    }

    #[test]
    fn fmt16_sentinel_and_gain() {
        let header = parse_header("r 2 250 1\nr.dat 16 200(0)/mV\nr.dat 16 200(0)/mV\n").unwrap();
        let rec = read_signal(&header, &[0x01, 0x00, 0x00, 0x80]).unwrap();
        assert_eq!(rec.samples, array![[0.005, 0.0]]);
        assert_eq!(rec.missing_mask, array![[false, true]]);
    }

    #[test]
    fn fmt212_hand_decoded_triplet() {
        // byte 0 = low 8 bits of sample 0; byte 1 low nibble = its high 4 bits,
        // high nibble = high 4 bits of sample 1; byte 2 = low 8 bits of sample 1.
        assert_eq!(decode_adc(StorageFormat::Fmt212, &[0x34, 0x12, 0x56], 2), vec![0x234, 0x156]);
        assert_eq!(0x234, 564);
        assert_eq!(0x156, 342);
        let header = parse_header("r 2 250 1\nr.dat 212 1(0)/adu\nr.dat 212 1(0)/adu\n").unwrap();
        let rec = read_signal(&header, &[0x34, 0x12, 0x56]).unwrap();
        assert_eq!(rec.samples, array![[564.0, 342.0]]);
    }

    #[test]
    fn fmt212_negative_and_sentinel() {
        // -1 = 0xFFF, -2048 = 0x800
        let bytes = encode_adc(StorageFormat::Fmt212, &[-1, -2048, 5]);
        assert_eq!(bytes.len(), 5);
        assert_eq!(decode_adc(StorageFormat::Fmt212, &bytes, 3), vec![-1, -2048, 5]);
    }

    #[test]
    fn zero_file_is_all_zero() {
        let header = parse_header("r 2 250 10\nr.dat 16 200/mV\nr.dat 16 200/mV\n").unwrap();
        let rec = read_signal(&header, &[0u8; 40]).unwrap();
        assert!(rec.samples.iter().all(|&v| v == 0.0));
        assert!(rec.missing_mask.iter().all(|&m| !m));
    }

    #[test]
    fn truncated_data() {
        let header = parse_header("r 2 250 10\nr.dat 16 200/mV\nr.dat 16 200/mV\n").unwrap();
        assert!(matches!(
            read_signal(&header, &[0u8; 39]),
            Err(Error::TruncatedData { expected: 40, found: 39 })
        ));
    }

    fn small_record() -> WaveformRecord {
        let header = RecordHeader {
            record_name: "r1".into(),
            n_signals: 2,
            sampling_frequency: 100.0,
            n_samples: 3,
            signals: vec![SignalSpec::new("r1.dat", 200.0, "mV", "II"), SignalSpec::new("r1.dat", 10.0, "mmHg", "ABP")],
        };
        let samples = array![[0.5, 80.0], [-1.25, 120.0], [0.0, 95.5]];
        let mut mask = Array2::from_elem((3, 2), false);
        mask[[1, 1]] = true;
        let mut samples = samples;
        samples[[1, 1]] = 0.0;
        WaveformRecord::new(header, samples, mask).unwrap()
    }

    #[test]
    fn masked_sample_emits_sentinel() {
        let rec = small_record();
        let (_, bytes) = write_record(&rec, StorageFormat::Fmt16).unwrap();
        // frame 1, signal 1 -> 16-bit word index 3
        assert_eq!(&bytes[6..8], &[0x00, 0x80]);
    }

    #[test]
    fn checksum_verification() {
        let rec = small_record();
        let (text, bytes) = write_record(&rec, StorageFormat::Fmt16).unwrap();
        let header = parse_header(&text).unwrap();
        read_signal_checked(&header, &bytes, true).unwrap();
        let mut corrupted = bytes.clone();
        corrupted[0] ^= 0x01;
        assert!(matches!(
            read_signal_checked(&header, &corrupted, true),
            Err(Error::ChecksumMismatch { signal: 0, .. })
        ));
        // without verification the corrupt value just decodes
        read_signal(&header, &corrupted).unwrap();
    }

    #[test]
    fn fmt212_range_check() {
        let mut rec = small_record();
        // 120 mmHg * 10 = 1200 fits; 30 mV * 200 = 6000 does not
        rec.samples[[0, 0]] = 30.0;
        assert!(matches!(
            write_record(&rec, StorageFormat::Fmt212),
            Err(Error::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn header_reparse_is_fixed_point() {
        let rec = small_record();
        for fmt in [StorageFormat::Fmt16, StorageFormat::Fmt212] {
            let (text, bytes) = write_record(&rec, fmt).unwrap();
            let header = parse_header(&text).unwrap();
            assert_eq!(format_header(&header), text);
            let back = read_signal(&header, &bytes).unwrap();
            let (text2, _) = write_record(&back, fmt).unwrap();
            assert_eq!(parse_header(&text2).unwrap(), header);
        }
    }

    fn flat_record(seconds: f64, fs: f64) -> WaveformRecord {
        let n = (seconds * fs) as usize;
        let header = RecordHeader {
            record_name: "flat".into(),
            n_signals: 1,
            sampling_frequency: fs,
            n_samples: n,
            signals: vec![SignalSpec::new("flat.dat", 200.0, "mV", "II")],
        };
        let samples = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        WaveformRecord::new(header, samples, Array2::from_elem((n, 1), false)).unwrap()
    }

    #[test]
    fn window_index_arithmetic() {
        let rec = flat_record(400.0, 250.0);
        let w = extract_alarm_window(&rec, 320.0, Label::TrueAlarm).unwrap();
        assert_eq!(w.n_samples(), 90000);
        assert_eq!(w.alarm_index, 75000);
        assert_eq!(w.samples[[0, 0]], 5000.0);
        assert_eq!(w.samples[[89999, 0]], 94999.0);
    }

    #[test]
    fn window_out_of_bounds() {
        let rec = flat_record(400.0, 250.0);
        assert!(matches!(
            extract_alarm_window(&rec, 100.0, Label::FalseAlarm),
            Err(Error::WindowOutOfBounds(_))
        ));
        assert!(matches!(
            extract_alarm_window(&rec, 345.0, Label::FalseAlarm),
            Err(Error::WindowOutOfBounds(_))
        ));
        // exactly 60 s of post-onset context is enough
        extract_alarm_window(&rec, 340.0, Label::FalseAlarm).unwrap();
    }
}
