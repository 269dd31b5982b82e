//! Piping mosaic frames through external video encoders and decoders.
//!
//! Frames travel as packed RGB24: row-major, no row or frame padding, so one
//! frame is exactly `width * height * 3` bytes on the wire.

use std::io::{self, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStderr, Command, ExitStatus, Stdio};
use std::thread::JoinHandle;

use crate::error::{Error, Result};
use crate::frame::RgbFrame;

/// Environment variable overriding the `ffmpeg` executable used by the presets.
pub const FFMPEG_ENV: &str = "VOLSTREAM_FFMPEG";

const ENCODER_PLACEHOLDERS: [&str; 4] = ["{width}", "{height}", "{fps}", "{output}"];

/// Command line that reads RGB24 on stdin and writes a video file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderSpec {
    pub label: String,
    pub command_template: String,
    pub extension: String,
}

/// Command line that reads a video file and writes RGB24 on stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderSpec {
    pub label: String,
    pub command_template: String,
}

fn count(haystack: &str, needle: &str) -> usize {
    haystack.matches(needle).count()
}

fn tokenize(template: &str) -> Result<Vec<String>> {
    let words = shlex::split(template)
        .ok_or_else(|| Error::InvalidSpec(format!("unbalanced quoting in {template:?}")))?;
    if words.is_empty() {
        return Err(Error::InvalidSpec("empty command template".into()));
    }
    Ok(words)
}

impl EncoderSpec {
    pub fn new(
        label: impl Into<String>,
        command_template: impl Into<String>,
        extension: impl Into<String>,
    ) -> Result<Self> {
        let spec = Self {
            label: label.into(),
            command_template: command_template.into(),
            extension: extension.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Every placeholder must appear exactly once.
    pub fn validate(&self) -> Result<()> {
        for p in ENCODER_PLACEHOLDERS {
            let n = count(&self.command_template, p);
            if n != 1 {
                return Err(Error::InvalidSpec(format!(
                    "encoder {:?}: placeholder {p} appears {n} times, expected exactly once",
                    self.label
                )));
            }
        }
        if self.extension.is_empty() || self.extension.contains(['/', '\\', '.']) {
            return Err(Error::InvalidSpec(format!(
                "encoder {:?}: bad container extension {:?}",
                self.label, self.extension
            )));
        }
        tokenize(&self.command_template).map(|_| ())
    }

    fn argv(&self, width: usize, height: usize, fps: f64, output: &Path) -> Result<Vec<String>> {
        self.validate()?;
        let output = output.to_string_lossy();
        Ok(tokenize(&self.command_template)?
            .into_iter()
            .map(|w| {
                w.replace("{width}", &width.to_string())
                    .replace("{height}", &height.to_string())
                    .replace("{fps}", &fps.to_string())
                    .replace("{output}", &output)
            })
            .collect())
    }
}

impl DecoderSpec {
    pub fn new(label: impl Into<String>, command_template: impl Into<String>) -> Result<Self> {
        let spec = Self {
            label: label.into(),
            command_template: command_template.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = count(&self.command_template, "{input}");
        if n != 1 {
            return Err(Error::InvalidSpec(format!(
                "decoder {:?}: placeholder {{input}} appears {n} times, expected exactly once",
                self.label
            )));
        }
        tokenize(&self.command_template).map(|_| ())
    }

    fn argv(&self, width: usize, height: usize, input: &Path) -> Result<Vec<String>> {
        self.validate()?;
        let input = input.to_string_lossy();
        Ok(tokenize(&self.command_template)?
            .into_iter()
            .map(|w| {
                w.replace("{width}", &width.to_string())
                    .replace("{height}", &height.to_string())
                    .replace("{input}", &input)
            })
            .collect())
    }
}

/// A named encoder/decoder pair selectable by label.
#[derive(Debug, Clone)]
pub struct CodecPreset {
    pub encoder: EncoderSpec,
    pub decoder: DecoderSpec,
    /// ffmpeg encoder the preset relies on, e.g. `libtheora`.
    pub ffmpeg_encoder: Option<String>,
}

impl CodecPreset {
    pub fn label(&self) -> &str {
        &self.encoder.label
    }
}

/// Label of the lossless pass-through codec: the "video" is the raw RGB24 stream.
pub const COPY_LABEL: &str = "rgb24-copy";

fn ffmpeg() -> String {
    std::env::var(FFMPEG_ENV).unwrap_or_else(|_| "ffmpeg".into())
}

fn ffmpeg_preset(
    label: &str,
    encoder_name: &str,
    codec_args: &str,
    extension: &str,
) -> CodecPreset {
    let bin = shlex::try_quote(&ffmpeg())
        .map(|q| q.into_owned())
        .unwrap_or_else(|_| "ffmpeg".into());
    let encoder = format!(
        "{bin} -hide_banner -loglevel error -y -f rawvideo -pix_fmt rgb24 \
         -s {{width}}x{{height}} -r {{fps}} -i - -c:v {encoder_name} {codec_args} {{output}}"
    );
    let decoder =
        format!("{bin} -hide_banner -loglevel error -i {{input}} -f rawvideo -pix_fmt rgb24 -");
    CodecPreset {
        encoder: EncoderSpec {
            label: label.into(),
            command_template: encoder,
            extension: extension.into(),
        },
        decoder: DecoderSpec {
            label: label.into(),
            command_template: decoder,
        },
        ffmpeg_encoder: Some(encoder_name.into()),
    }
}

/// Known presets. The ffmpeg ones keep full chroma (yuv444p) because
/// subsampling would blend neighbouring voxels stored in different channels.
pub fn presets() -> Vec<CodecPreset> {
    vec![
        ffmpeg_preset("theora-q2", "libtheora", "-q:v 2 -pix_fmt yuv444p", "ogv"),
        ffmpeg_preset("theora-q10", "libtheora", "-q:v 10 -pix_fmt yuv444p", "ogv"),
        ffmpeg_preset(
            "x264",
            "libx264",
            "-preset medium -crf 23 -pix_fmt yuv444p",
            "mp4",
        ),
        CodecPreset {
            encoder: EncoderSpec {
                label: COPY_LABEL.into(),
                command_template: "sh -c 'cat > \"$1\"' rgb24-copy {output} {width} {height} {fps}"
                    .into(),
                extension: "rgb".into(),
            },
            decoder: DecoderSpec {
                label: COPY_LABEL.into(),
                command_template: "cat {input}".into(),
            },
            ffmpeg_encoder: None,
        },
    ]
}

pub fn preset(label: &str) -> Result<CodecPreset> {
    let all = presets();
    all.iter()
        .find(|p| p.label() == label)
        .cloned()
        .ok_or_else(|| Error::UnknownCodec {
            label: label.into(),
            known: all.iter().map(|p| p.label().to_owned()).collect(),
        })
}

/// Low/high quality preset pair for size-monotonicity checks.
pub const QUALITY_LADDER: [&str; 2] = ["theora-q2", "theora-q10"];

fn spawn(label: &str, argv: &[String], stdin: Stdio, stdout: Stdio) -> Result<Child> {
    Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(stdin)
        .stdout(stdout)
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => Error::ToolUnavailable {
                program: argv[0].clone(),
                hint: format!(
                    "codec {label:?} needs `{}` on PATH; install it or point {FFMPEG_ENV} at an ffmpeg binary ({e})",
                    argv[0]
                ),
            },
            _ => Error::io(&argv[0], e),
        })
}

fn drain(stderr: Option<ChildStderr>) -> JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut s) = stderr {
            let _ = s.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).trim().to_owned()
    })
}

/// Checks whether a program runs at all, e.g. `tool_available("ffmpeg", &["-version"])`.
pub fn tool_available(program: &str, args: &[&str]) -> bool {
    Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

/// Whether the programs a preset shells out to can be spawned, including
/// the specific ffmpeg encoder it names.
pub fn preset_available(p: &CodecPreset) -> bool {
    let Some(name) = &p.ffmpeg_encoder else {
        return tool_available("sh", &["-c", "exit 0"]) && tool_available("cat", &["/dev/null"]);
    };
    let Ok(out) = Command::new(ffmpeg())
        .args(["-hide_banner", "-encoders"])
        .stdin(Stdio::null())
        .stderr(Stdio::null())
        .output()
    else {
        return false;
    };
    out.status.success()
        && String::from_utf8_lossy(&out.stdout)
            .split_whitespace()
            .any(|w| w == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VideoEncodeStats {
    pub frames: usize,
    /// Bytes streamed into the encoder.
    pub input_bytes: u64,
    /// Size of the file the encoder produced.
    pub output_bytes: u64,
}

/// Streams `frames` into the encoder and returns the size of the file it wrote.
///
/// Frames are pulled lazily, so a slow encoder back-pressures the producer.
pub fn encode_video<I>(
    frames: I,
    spec: &EncoderSpec,
    fps: f64,
    out_path: &Path,
) -> Result<VideoEncodeStats>
where
    I: IntoIterator<Item = RgbFrame>,
{
    spec.validate()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::Contract(format!("fps must be positive, got {fps}")));
    }
    let mut frames = frames.into_iter();
    let first = frames
        .next()
        .ok_or_else(|| Error::Contract("cannot encode a video with no frames".into()))?;
    let (width, height) = (first.width(), first.height());
    let argv = spec.argv(width, height, fps, out_path)?;

    let mut child = spawn(&spec.label, &argv, Stdio::piped(), Stdio::null())?;
    let diagnostics = drain(child.stderr.take());
    let mut stdin = child.stdin.take().expect("stdin piped");

    let mut written = 0usize;
    let mut input_bytes = 0u64;
    let mut outcome: Result<()> = Ok(());
    for frame in std::iter::once(first).chain(frames.by_ref()) {
        if (frame.width(), frame.height()) != (width, height) {
            outcome = Err(Error::DimensionMismatch {
                what: "video frame",
                expected: format!("{width}x{height}"),
                actual: format!("{}x{}", frame.width(), frame.height()),
            });
            break;
        }
        match stdin.write_all(frame.as_bytes()) {
            Ok(()) => {
                written += 1;
                input_bytes += frame.as_bytes().len() as u64;
            }
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {
                outcome = Err(Error::EncoderAborted {
                    label: spec.label.clone(),
                    frames_written: written,
                });
                break;
            }
            Err(e) => {
                outcome = Err(Error::io("encoder stdin", e));
                break;
            }
        }
    }
    if let Err(e) = stdin.flush() {
        if outcome.is_ok() && e.kind() != io::ErrorKind::BrokenPipe {
            outcome = Err(Error::io("encoder stdin", e));
        }
    }
    drop(stdin);

    let we_failed = matches!(
        outcome,
        Err(Error::DimensionMismatch { .. } | Error::Io { .. })
    );
    if we_failed {
        let _ = child.kill();
    }
    let status = child.wait().map_err(|e| Error::io(&argv[0], e))?;
    let diagnostics = diagnostics.join().unwrap_or_default();
    // a failing tool explains an aborted pipe better than the pipe error does
    if !status.success() && !we_failed {
        return Err(Error::EncoderFailed {
            label: spec.label.clone(),
            status: describe(status),
            diagnostics,
        });
    }
    outcome?;

    let output_bytes = std::fs::metadata(out_path)
        .map_err(|e| Error::io(out_path, e))?
        .len();
    Ok(VideoEncodeStats {
        frames: written,
        input_bytes,
        output_bytes,
    })
}

fn describe(status: ExitStatus) -> String {
    match status.code() {
        Some(c) => format!("exit code {c}"),
        None => status.to_string(),
    }
}

/// Runs the decoder and splits its stdout into exactly `frame_count` frames.
pub fn decode_video(
    in_path: &Path,
    spec: &DecoderSpec,
    width: usize,
    height: usize,
    frame_count: usize,
) -> Result<Vec<RgbFrame>> {
    spec.validate()?;
    if frame_count == 0 {
        return Ok(Vec::new());
    }
    let frame_bytes = width * height * 3;
    let argv = spec.argv(width, height, in_path)?;
    let mut child = spawn(&spec.label, &argv, Stdio::null(), Stdio::piped())?;
    let diagnostics = drain(child.stderr.take());
    let mut stdout = child.stdout.take().expect("stdout piped");

    let mut frames = Vec::with_capacity(frame_count);
    let mut short: Option<usize> = None;
    while frames.len() < frame_count {
        let mut buf = vec![0u8; frame_bytes];
        let got = read_full(&mut stdout, &mut buf).map_err(|e| Error::io("decoder stdout", e))?;
        if got < frame_bytes {
            short = Some(got);
            break;
        }
        frames.push(RgbFrame::new(width, height, buf)?);
    }
    let extra = if short.is_none() {
        io::copy(&mut stdout, &mut io::sink()).map_err(|e| Error::io("decoder stdout", e))?
    } else {
        0
    };
    drop(stdout);
    let status = child.wait().map_err(|e| Error::io(&argv[0], e))?;
    let diagnostics = diagnostics.join().unwrap_or_default();

    if !status.success() {
        return Err(Error::DecoderFailed {
            label: spec.label.clone(),
            status: describe(status),
            diagnostics,
        });
    }
    if let Some(partial_bytes) = short {
        return Err(Error::TruncatedStream {
            received: frames.len(),
            expected: frame_count,
            partial_bytes,
        });
    }
    if extra > 0 {
        return Err(Error::StreamOverrun {
            expected: frame_count,
            width,
            height,
            extra,
        });
    }
    Ok(frames)
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
