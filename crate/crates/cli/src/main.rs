use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use volstream_core::codec;
use volstream_core::container::{self, EncodeOptions, DEFAULT_FPS};
use volstream_core::fixture::mapping_fixture;
use volstream_core::ingest::{read_raw_dir, synthesize_field, write_raw_dir};
use volstream_core::metrics::{self, compression_ratio};
use volstream_core::{Dims, Error, Media, MosaicLayout, Quantizer};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_ENVIRONMENT: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "volstream",
    version,
    about = "Encode 4D scalar fields as mosaic video and serve them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic cloud-like field as header.json + data.f32.
    Synth {
        #[arg(long)]
        seed: u64,
        /// Extent as TxZxYxX, e.g. 4x6x16x16.
        #[arg(long)]
        dims: Dims,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        blobs: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize, tile and store a raw volume as PNG frames or video.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FPS)]
        fps: f64,
        /// Codec preset label, e.g. theora-q2.
        #[arg(long)]
        video: Option<String>,
        /// Stamp each frame's index into its bottom-right pixel.
        #[arg(long)]
        debug_frame_counter: bool,
    },
    /// Rebuild the dequantized field from a manifest and its media.
    Decode {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare storage variants by byte volume and error.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated: raw-f32, quantized-8bit, png-frames, video:<label>.
        #[arg(long)]
        variants: String,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Export sampled voxel-to-pixel mappings as JSON for client parity tests.
    Fixture {
        /// Volume extent as ZxYxX, e.g. 24x64x64.
        #[arg(long)]
        volume: String,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve every dataset under a directory over HTTP.
    Serve {
        #[arg(long, env = "VOLSTREAM_ROOT")]
        root: PathBuf,
        #[arg(long, env = "VOLSTREAM_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(err) if err.is_environment() => EXIT_ENVIRONMENT,
        Some(Error::UnknownCodec { .. }) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            seed,
            dims,
            blobs,
            out,
        } => synth(seed, dims, blobs as usize, &out),
        Command::Encode {
            input,
            out,
            fps,
            video,
            debug_frame_counter,
        } => encode(&input, &out, fps, video.as_deref(), debug_frame_counter),
        Command::Decode { manifest, out } => decode(&manifest, &out),
        Command::Metrics {
            input,
            variants,
            csv,
        } => report(&input, &variants, &csv),
        Command::Fixture {
            volume,
            count,
            seed,
            out,
        } => fixture(&volume, count, seed, &out),
        Command::Serve { root, listen } => serve(root, listen),
    }
}

fn synth(seed: u64, dims: Dims, blobs: usize, out: &Path) -> Result<()> {
    let field = synthesize_field(seed, dims, blobs)?;
    write_raw_dir(&field, out)?;
    let q = Quantizer::from_field(&field);
    println!(
        "wrote {} dims {dims} range [{}, {}] to {}",
        field.name,
        q.vmin,
        q.vmax,
        out.display()
    );
    Ok(())
}

fn encode(input: &Path, out: &Path, fps: f64, video: Option<&str>, debug: bool) -> Result<()> {
    let video = video.map(codec::preset).transpose()?.map(|p| p.encoder);
    let field = read_raw_dir(input).with_context(|| format!("reading {}", input.display()))?;
    if field.non_finite_replaced > 0 {
        eprintln!(
            "warning: replaced {} non-finite value(s) with 0.0",
            field.non_finite_replaced
        );
    }
    let opts = EncodeOptions {
        fps,
        debug_frame_counter: debug,
        video,
    };
    let manifest = container::encode_dataset_with(&field, out, &opts)?;
    let stored: u64 = manifest
        .media
        .files()
        .iter()
        .map(|f| std::fs::metadata(out.join(f)).map(|m| m.len()))
        .sum::<std::io::Result<u64>>()
        .context("measuring encoded media")?;
    let kind = match &manifest.media {
        Media::Frames { files } => format!("{} png frame(s)", files.len()),
        Media::Video { codec_label, .. } => format!("video ({codec_label})"),
    };
    println!(
        "{}: dims {} -> {kind}, {stored} bytes vs {} raw ({:.1}:1), range [{}, {}], {} fps",
        manifest.name,
        manifest.dims,
        field.raw_f32_bytes(),
        compression_ratio(field.raw_f32_bytes() as f64, stored as f64)?,
        manifest.vmin,
        manifest.vmax,
        manifest.fps
    );
    Ok(())
}

fn decode(manifest: &Path, out: &Path) -> Result<()> {
    let field = container::decode_dataset(manifest)
        .with_context(|| format!("decoding {}", manifest.display()))?;
    write_raw_dir(&field, out)?;
    println!(
        "decoded {} dims {} to {}",
        field.name,
        field.dims(),
        out.display()
    );
    Ok(())
}

fn report(input: &Path, variants: &str, csv: &Path) -> Result<()> {
    let variants = metrics::parse_variants(variants)?;
    let field = read_raw_dir(input).with_context(|| format!("reading {}", input.display()))?;
    let report = metrics::build_report(&field, &variants)?;
    std::fs::write(csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    print!("{}", report.to_text());
    Ok(())
}

fn fixture(volume: &str, count: usize, seed: u64, out: &Path) -> Result<()> {
    // reuse the TxZxYxX parser with a single time step
    let dims: Dims = format!("1x{volume}")
        .parse()
        .with_context(|| format!("--volume {volume:?} must match ZxYxX"))?;
    let layout = MosaicLayout::compute(dims.z, dims.y, dims.x, container::FILL_CODE)?;
    let fixture = mapping_fixture(&layout, count, seed)?;
    let json = serde_json::to_string_pretty(&fixture)?;
    std::fs::write(out, json + "\n").with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {} mappings to {}",
        fixture.samples.len(),
        out.display()
    );
    Ok(())
}

fn serve(root: PathBuf, listen: SocketAddr) -> Result<()> {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .with_context(|| format!("binding {listen}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        volstream_server::serve(listener, root).await?;
        Ok(())
    })
}
