use std::io::{Cursor, Write};

use topiary_core::export::ExportBundle;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipWriter};

/// Zip archive of the export tables. Entry order and timestamps are fixed,
/// so equal bundles give equal bytes.
pub fn zip_bundle(bundle: &ExportBundle) -> Vec<u8> {
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    for (name, bytes) in bundle.files() {
        zip.start_file(name, opts).expect("in-memory zip");
        zip.write_all(&bytes).expect("in-memory zip");
    }
    zip.finish().expect("in-memory zip").into_inner()
}
