//! Single-range `Range: bytes=...` parsing.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteRange {
    /// Serve the whole body; also used for headers we choose to ignore.
    Full,
    /// Inclusive `start..=end`.
    Partial {
        start: u64,
        end: u64,
    },
    Unsatisfiable,
}

/// Interprets a `Range` header against a body of `len` bytes.
///
/// Malformed headers and multi-range requests fall back to [`ByteRange::Full`],
/// which HTTP permits.
pub fn parse_range(header: &str, len: u64) -> ByteRange {
    let Some(spec) = header.trim().strip_prefix("bytes=") else {
        return ByteRange::Full;
    };
    if spec.contains(',') {
        return ByteRange::Full;
    }
    let Some((first, last)) = spec.trim().split_once('-') else {
        return ByteRange::Full;
    };
    let (first, last) = (first.trim(), last.trim());
    let parse = |s: &str| s.parse::<u64>().ok();

    if first.is_empty() {
        // suffix range: final N bytes
        return match parse(last) {
            None => ByteRange::Full,
            Some(0) => ByteRange::Unsatisfiable,
            Some(_) if len == 0 => ByteRange::Unsatisfiable,
            Some(n) => ByteRange::Partial {
                start: len.saturating_sub(n),
                end: len - 1,
            },
        };
    }
    let Some(start) = parse(first) else {
        return ByteRange::Full;
    };
    let end = if last.is_empty() {
        None
    } else {
        match parse(last) {
            Some(e) if e >= start => Some(e),
            _ => return ByteRange::Full,
        }
    };
    if start >= len {
        return ByteRange::Unsatisfiable;
    }
    ByteRange::Partial {
        start,
        end: end.map_or(len - 1, |e| e.min(len - 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_range() {
        assert_eq!(
            parse_range("bytes=0-99", 1000),
            ByteRange::Partial { start: 0, end: 99 }
        );
        assert_eq!(
            parse_range("bytes=990-2000", 1000),
            ByteRange::Partial {
                start: 990,
                end: 999
            }
        );
    }

    #[test]
    fn open_and_suffix_ranges() {
        assert_eq!(
            parse_range("bytes=900-", 1000),
            ByteRange::Partial {
                start: 900,
                end: 999
            }
        );
        assert_eq!(
            parse_range("bytes=-100", 1000),
            ByteRange::Partial {
                start: 900,
                end: 999
            }
        );
        assert_eq!(
            parse_range("bytes=-5000", 1000),
            ByteRange::Partial { start: 0, end: 999 }
        );
    }

    #[test]
    fn unsatisfiable() {
        assert_eq!(parse_range("bytes=2000-", 1000), ByteRange::Unsatisfiable);
        assert_eq!(
            parse_range("bytes=1000-1001", 1000),
            ByteRange::Unsatisfiable
        );
        assert_eq!(parse_range("bytes=-0", 1000), ByteRange::Unsatisfiable);
        assert_eq!(parse_range("bytes=0-", 0), ByteRange::Unsatisfiable);
    }

    #[test]
    fn ignored_forms() {
        for h in [
            "items=0-1",
            "bytes=5-1",
            "bytes=a-b",
            "bytes=0-1,4-5",
            "bytes=",
            "bytes=7",
        ] {
            assert_eq!(parse_range(h, 1000), ByteRange::Full, "{h}");
        }
    }
}
