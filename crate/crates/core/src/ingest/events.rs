use std::io::{BufRead, ErrorKind, Read, Write};

use super::IngestError;

/// File magic of the packed-binary event format.
pub const BINARY_MAGIC: &[u8; 4] = b"EVB1";
/// u64 t, u16 x, u16 y, i8 polarity.
pub const BINARY_RECORD_LEN: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Accepts 1, -1 and 0 (0 maps to negative).
    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Self::Positive),
            0 | -1 => Some(Self::Negative),
            _ => None,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Self::Positive => 1,
            Self::Negative => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    /// Microseconds, device clock until mapped onto the common timeline.
    pub t_us: i64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t_us: i64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self {
            t_us,
            x,
            y,
            polarity,
        }
    }

    /// Timestamp in seconds.
    pub fn t(&self) -> f64 {
        self.t_us as f64 * 1e-6
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub camera_id: String,
    events: Vec<Event>,
}

impl EventStream {
    pub fn new(width: u16, height: u16, camera_id: impl Into<String>) -> Result<Self, IngestError> {
        if width == 0 || height == 0 {
            return Err(IngestError::EmptyResolution { width, height });
        }
        Ok(Self {
            width,
            height,
            camera_id: camera_id.into(),
            events: Vec::new(),
        })
    }

    /// Validates coordinates and ordering of every event.
    pub fn with_events(
        width: u16,
        height: u16,
        camera_id: impl Into<String>,
        events: Vec<Event>,
    ) -> Result<Self, IngestError> {
        let mut s = Self::new(width, height, camera_id)?;
        s.events.reserve(events.len());
        for e in events {
            s.push(e)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, e: Event) -> Result<(), IngestError> {
        let index = self.events.len();
        if e.x >= self.width || e.y >= self.height {
            return Err(IngestError::CoordinateOutOfRange {
                index,
                x: e.x.into(),
                y: e.y.into(),
                width: self.width,
                height: self.height,
            });
        }
        if self.events.last().is_some_and(|p| e.t_us < p.t_us) {
            return Err(IngestError::DecreasingTimestamp {
                index,
                t_us: e.t_us,
            });
        }
        self.events.push(e);
        Ok(())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub(crate) fn map_events(&self, f: impl Fn(&Event) -> Event) -> Self {
        Self {
            width: self.width,
            height: self.height,
            camera_id: self.camera_id.clone(),
            events: self.events.iter().map(f).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Binary,
}

/// Reads either format. CSV carries no resolution, so `width`/`height` are
/// required for it and ignored for binary input.
pub fn parse_events<R: BufRead>(
    reader: R,
    format: EventFormat,
    width: u16,
    height: u16,
    camera_id: &str,
) -> Result<EventStream, IngestError> {
    match format {
        EventFormat::Csv => read_events_csv(reader, width, height, camera_id),
        EventFormat::Binary => read_events_binary(reader, camera_id),
    }
}

/// `t_us,x,y,polarity` lines with an optional header.
pub fn read_events_csv<R: BufRead>(
    reader: R,
    width: u16,
    height: u16,
    camera_id: &str,
) -> Result<EventStream, IngestError> {
    let mut stream = EventStream::new(width, height, camera_id)?;
    let mut seen_data = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !seen_data && fields[0].parse::<i64>().is_err() && fields[0].chars().any(char::is_alphabetic) {
            // header row
            seen_data = true;
            continue;
        }
        seen_data = true;
        if fields.len() != 4 {
            return Err(IngestError::Malformed {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut v = [0i64; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| IngestError::Malformed {
                line: line_no,
                message: format!("invalid integer {field:?}"),
            })?;
        }
        let [t_us, x, y, p] = v;
        let index = stream.len();
        let polarity =
            Polarity::from_value(p).ok_or(IngestError::InvalidPolarity { index, value: p })?;
        if x < 0 || y < 0 || x >= i64::from(width) || y >= i64::from(height) {
            return Err(IngestError::CoordinateOutOfRange {
                index,
                x: x.max(0) as u64,
                y: y.max(0) as u64,
                width,
                height,
            });
        }
        stream.push(Event::new(t_us, x as u16, y as u16, polarity))?;
    }
    Ok(stream)
}

pub fn write_events_csv<W: Write>(stream: &EventStream, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t_us,x,y,polarity")?;
    for e in stream.events() {
        writeln!(w, "{},{},{},{}", e.t_us, e.x, e.y, e.polarity.sign())?;
    }
    Ok(())
}

/// Incremental decoder for the packed-binary format.
pub struct BinaryEventReader<R> {
    inner: R,
    width: u16,
    height: u16,
    decoded: usize,
    last_t: Option<i64>,
}

impl<R: Read> BinaryEventReader<R> {
    /// Consumes and validates the header.
    pub fn new(mut inner: R) -> Result<Self, IngestError> {
        let mut header = [0u8; 8];
        match read_full(&mut inner, &mut header) {
            Ok(true) => {}
            Ok(false) | Err(IngestError::Truncated) => return Err(IngestError::BadMagic),
            Err(e) => return Err(e),
        }
        if &header[..4] != BINARY_MAGIC {
            return Err(IngestError::BadMagic);
        }
        let width = u16::from_le_bytes([header[4], header[5]]);
        let height = u16::from_le_bytes([header[6], header[7]]);
        if width == 0 || height == 0 {
            return Err(IngestError::EmptyResolution { width, height });
        }
        Ok(Self {
            inner,
            width,
            height,
            decoded: 0,
            last_t: None,
        })
    }

    pub fn resolution(&self) -> (u16, u16) {
        (self.width, self.height)
    }

    /// Next validated event, `None` at a clean end of stream.
    pub fn next_event(&mut self) -> Result<Option<Event>, IngestError> {
        let mut rec = [0u8; BINARY_RECORD_LEN];
        if !read_full(&mut self.inner, &mut rec)? {
            return Ok(None);
        }
        let index = self.decoded;
        let t_raw = u64::from_le_bytes(rec[0..8].try_into().expect("8 bytes"));
        let t_us = i64::try_from(t_raw).map_err(|_| IngestError::TimestampOutOfRange {
            index,
            t_us: i64::MAX,
        })?;
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let p = i64::from(rec[12] as i8);
        let polarity =
            Polarity::from_value(p).ok_or(IngestError::InvalidPolarity { index, value: p })?;
        if x >= self.width || y >= self.height {
            return Err(IngestError::CoordinateOutOfRange {
                index,
                x: x.into(),
                y: y.into(),
                width: self.width,
                height: self.height,
            });
        }
        if self.last_t.is_some_and(|prev| t_us < prev) {
            return Err(IngestError::DecreasingTimestamp { index, t_us });
        }
        self.last_t = Some(t_us);
        self.decoded += 1;
        Ok(Some(Event::new(t_us, x, y, polarity)))
    }

    /// Up to `max` events; an empty vector signals end of stream.
    pub fn next_batch(&mut self, max: usize) -> Result<Vec<Event>, IngestError> {
        let mut out = Vec::with_capacity(max.min(1 << 16));
        while out.len() < max {
            match self.next_event()? {
                Some(e) => out.push(e),
                None => break,
            }
        }
        Ok(out)
    }
}

/// Fills `buf` completely. Returns `false` on EOF before the first byte and
/// `Truncated` on EOF part-way through.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool, IngestError> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(IngestError::Truncated),
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

pub fn read_events_binary<R: Read>(reader: R, camera_id: &str) -> Result<EventStream, IngestError> {
    let mut dec = BinaryEventReader::new(reader)?;
    let (width, height) = dec.resolution();
    let mut stream = EventStream::new(width, height, camera_id)?;
    while let Some(e) = dec.next_event()? {
        stream.events.push(e);
    }
    Ok(stream)
}

pub fn write_events_binary<W: Write>(stream: &EventStream, mut w: W) -> Result<(), IngestError> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&stream.width.to_le_bytes())?;
    w.write_all(&stream.height.to_le_bytes())?;
    for (index, e) in stream.events().iter().enumerate() {
        let t = u64::try_from(e.t_us).map_err(|_| IngestError::TimestampOutOfRange {
            index,
            t_us: e.t_us,
        })?;
        let mut rec = [0u8; BINARY_RECORD_LEN];
        rec[0..8].copy_from_slice(&t.to_le_bytes());
        rec[8..10].copy_from_slice(&e.x.to_le_bytes());
        rec[10..12].copy_from_slice(&e.y.to_le_bytes());
        rec[12] = e.polarity.sign() as u8;
        w.write_all(&rec)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn csv(s: &str) -> Result<EventStream, IngestError> {
        read_events_csv(s.as_bytes(), 640, 480, "left")
    }

    #[test]
    fn parses_csv_event() {
        let s = csv("100,10,20,1").unwrap();
        assert_eq!(s.events(), &[Event::new(100, 10, 20, Polarity::Positive)]);
    }

    #[test]
    fn csv_header_and_zero_polarity() {
        let s = csv("t_us,x,y,polarity\n100,10,20,0\n101,1,2,-1\n").unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.events().iter().all(|e| e.polarity == Polarity::Negative));
    }

    #[test]
    fn csv_out_of_range_coordinate() {
        let err = csv("100,700,20,1").unwrap_err();
        assert!(matches!(err, IngestError::CoordinateOutOfRange { x: 700, .. }));
        assert!(csv("100,10,480,1").is_err());
        assert!(csv("100,-1,4,1").is_err());
    }

    #[test]
    fn csv_decreasing_timestamp() {
        let err = csv("100,1,1,1\n99,1,1,1").unwrap_err();
        assert!(matches!(err, IngestError::DecreasingTimestamp { index: 1, .. }));
        assert_eq!(csv("100,1,1,1\n100,2,2,1").unwrap().len(), 2);
    }

    #[test]
    fn csv_bad_polarity_and_field_count() {
        assert!(matches!(csv("1,1,1,2"), Err(IngestError::InvalidPolarity { .. })));
        assert!(matches!(csv("1,1,1"), Err(IngestError::Malformed { line: 1, .. })));
    }

    #[test]
    fn binary_record_layout() {
        let mut bytes = b"EVB1".to_vec();
        bytes.extend_from_slice(&640u16.to_le_bytes());
        bytes.extend_from_slice(&480u16.to_le_bytes());
        bytes.extend_from_slice(&[0x64, 0, 0, 0, 0, 0, 0, 0, 10, 0, 20, 0, 1]);
        let bin = read_events_binary(bytes.as_slice(), "left").unwrap();
        assert_eq!(bin, csv("100,10,20,1").unwrap());
    }

    #[test]
    fn binary_rejects_bad_magic_and_truncation() {
        assert!(matches!(
            read_events_binary(&b"EVB2\x80\x02\xe0\x01"[..], "x"),
            Err(IngestError::BadMagic)
        ));
        assert!(matches!(read_events_binary(&b"EV"[..], "x"), Err(IngestError::BadMagic)));
        let mut bytes = b"EVB1\x80\x02\xe0\x01".to_vec();
        bytes.extend_from_slice(&[1, 0, 0]);
        assert!(matches!(
            read_events_binary(bytes.as_slice(), "x"),
            Err(IngestError::Truncated)
        ));
    }

    #[test]
    fn binary_rejects_out_of_range() {
        let s = EventStream::with_events(1000, 1000, "x", vec![Event::new(0, 700, 0, Polarity::Positive)])
            .unwrap();
        let mut bytes = Vec::new();
        write_events_binary(&s, &mut bytes).unwrap();
        bytes[4..6].copy_from_slice(&640u16.to_le_bytes());
        assert!(matches!(
            read_events_binary(bytes.as_slice(), "x"),
            Err(IngestError::CoordinateOutOfRange { .. })
        ));
    }

    #[test]
    fn negative_timestamps_cannot_be_packed() {
        let s = EventStream::with_events(4, 4, "x", vec![Event::new(-5, 0, 0, Polarity::Positive)])
            .unwrap();
        assert!(matches!(
            write_events_binary(&s, Vec::new()),
            Err(IngestError::TimestampOutOfRange { .. })
        ));
    }

    #[test]
    fn empty_resolution_rejected() {
        assert!(EventStream::new(0, 10, "x").is_err());
    }

    #[test]
    fn batches_drain_stream() {
        let events = (0..25).map(|i| Event::new(i, 1, 1, Polarity::Positive)).collect();
        let s = EventStream::with_events(4, 4, "x", events).unwrap();
        let mut bytes = Vec::new();
        write_events_binary(&s, &mut bytes).unwrap();
        let mut r = BinaryEventReader::new(bytes.as_slice()).unwrap();
        let sizes: Vec<usize> = std::iter::from_fn(|| {
            let b = r.next_batch(10).unwrap();
            (!b.is_empty()).then_some(b.len())
        })
        .collect();
        assert_eq!(sizes, vec![10, 10, 5]);
    }

    fn arb_stream() -> impl Strategy<Value = EventStream> {
        (1u16..700, 1u16..500).prop_flat_map(|(w, h)| {
            proptest::collection::vec((0i64..1000, 0..w, 0..h, any::<bool>()), 0..200).prop_map(
                move |rows| {
                    let mut t = 0;
                    let events = rows
                        .into_iter()
                        .map(|(dt, x, y, p)| {
                            t += dt;
                            let pol = if p { Polarity::Positive } else { Polarity::Negative };
                            Event::new(t, x, y, pol)
                        })
                        .collect();
                    EventStream::with_events(w, h, "cam", events).unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn csv_and_binary_round_trip_agree(s in arb_stream()) {
            let mut bin = Vec::new();
            write_events_binary(&s, &mut bin).unwrap();
            prop_assert_eq!(bin.len(), 8 + BINARY_RECORD_LEN * s.len());
            let from_bin = read_events_binary(bin.as_slice(), "cam").unwrap();

            let mut text = Vec::new();
            write_events_csv(&s, &mut text).unwrap();
            let from_csv = read_events_csv(text.as_slice(), s.width, s.height, "cam").unwrap();

            prop_assert_eq!(&from_bin, &s);
            prop_assert_eq!(&from_csv, &s);
        }
    }
}
