use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parquet::basic::{Compression, Repetition, Type as PhysicalType};
use parquet::column::reader::get_typed_column_reader;
use parquet::data_type::FloatType;
use parquet::file::properties::WriterProperties;
use parquet::file::reader::{FileReader, SerializedFileReader};
use parquet::file::writer::SerializedFileWriter;
use parquet::file::metadata::KeyValue;
use parquet::schema::types::Type;

use super::{Column, DatasetMeta, DatasetRecord};
use crate::error::{Error, Result};

/// Key of the JSON metadata entry in the Parquet footer.
pub const META_KEY: &str = "spde.meta";

/// `dir/name.parquet` -> `dir/name.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn pq_err(path: &Path) -> impl Fn(parquet::errors::ParquetError) -> Error + '_ {
    move |source| Error::Parquet {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Streams samples into one file, one row group per batch. Column order
/// and per-sample length are fixed at creation.
pub struct DatasetWriter {
    path: PathBuf,
    inner: SerializedFileWriter<File>,
    columns: Vec<String>,
    per_sample: usize,
    rows: usize,
}

impl DatasetWriter {
    pub fn create(path: &Path, columns: &[String], per_sample: usize) -> Result<Self> {
        if columns.is_empty() || per_sample == 0 {
            return Err(Error::invalid("a dataset needs at least one non-empty column"));
        }
        let fields = columns
            .iter()
            .map(|name| {
                Type::primitive_type_builder(name, PhysicalType::FLOAT)
                    .with_repetition(Repetition::REQUIRED)
                    .build()
                    .map(Arc::new)
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(pq_err(path))?;
        let schema = Type::group_type_builder("spde")
            .with_fields(fields)
            .build()
            .map_err(pq_err(path))?;
        let props = WriterProperties::builder()
            .set_compression(Compression::SNAPPY)
            .set_created_by("spdegen".into())
            .build();
        let file = File::create(path).map_err(io_err(path))?;
        let inner = SerializedFileWriter::new(file, Arc::new(schema), Arc::new(props)).map_err(pq_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
            columns: columns.to_vec(),
            per_sample,
            rows: 0,
        })
    }

    /// Writes a batch of whole samples; `data[c]` holds column `c`.
    pub fn write_batch(&mut self, data: &[&[f32]]) -> Result<()> {
        if data.len() != self.columns.len() {
            return Err(Error::invalid(format!(
                "batch has {} columns, file has {}",
                data.len(),
                self.columns.len()
            )));
        }
        let len = data[0].len();
        if len % self.per_sample != 0 || data.iter().any(|d| d.len() != len) {
            return Err(Error::invalid("batch columns must hold whole samples of equal length"));
        }
        if len == 0 {
            return Ok(());
        }
        let path = self.path.clone();
        let mut rg = self.inner.next_row_group().map_err(pq_err(&path))?;
        for values in data {
            let mut col = rg
                .next_column()
                .map_err(pq_err(&path))?
                .ok_or_else(|| Error::invalid("schema has fewer columns than data"))?;
            col.typed::<FloatType>()
                .write_batch(values, None, None)
                .map_err(pq_err(&path))?;
            col.close().map_err(pq_err(&path))?;
        }
        rg.close().map_err(pq_err(&path))?;
        self.rows += len / self.per_sample;
        Ok(())
    }

    /// Samples written so far.
    pub fn samples(&self) -> usize {
        self.rows
    }

    /// Attaches the metadata and closes the file; also writes the sidecar.
    pub fn finish(mut self, meta: &DatasetMeta) -> Result<()> {
        if meta.dims.n != self.rows || meta.dims.per_sample() != self.per_sample || meta.columns != self.columns {
            return Err(Error::invalid(format!(
                "metadata dims {:?} / columns {:?} disagree with {} written samples",
                meta.dims, meta.columns, self.rows
            )));
        }
        let json = serde_json::to_string(meta)?;
        self.inner.append_key_value_metadata(KeyValue::new(META_KEY.to_string(), json));
        self.inner.close().map_err(pq_err(&self.path))?;
        let pretty = serde_json::to_string_pretty(meta)?;
        let side = sidecar_path(&self.path);
        std::fs::write(&side, pretty).map_err(io_err(&side))?;
        Ok(())
    }
}

/// Writes a complete record as a single row group.
pub fn write_parquet(record: &DatasetRecord, path: &Path) -> Result<()> {
    record.validate()?;
    let mut w = DatasetWriter::create(path, &record.meta.columns, record.meta.dims.per_sample())?;
    let data: Vec<&[f32]> = record.columns.iter().map(|c| c.data.as_slice()).collect();
    w.write_batch(&data)?;
    w.finish(&record.meta)
}

pub fn read_parquet(path: &Path) -> Result<DatasetRecord> {
    let schema_err = |reason: String| Error::Schema {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(io_err(path))?;
    let reader = SerializedFileReader::new(file).map_err(pq_err(path))?;
    let file_meta = reader.metadata().file_metadata();
    let json = file_meta
        .key_value_metadata()
        .and_then(|kv| kv.iter().find(|e| e.key == META_KEY))
        .and_then(|e| e.value.clone())
        .ok_or_else(|| schema_err(format!("missing {META_KEY} metadata")))?;
    let meta: DatasetMeta = serde_json::from_str(&json).map_err(|e| schema_err(format!("bad metadata: {e}")))?;

    let fields = file_meta.schema_descr().columns();
    let names: Vec<String> = fields.iter().map(|c| c.name().to_string()).collect();
    if names != meta.columns {
        return Err(schema_err(format!(
            "columns {names:?} do not match metadata {:?}",
            meta.columns
        )));
    }
    if let Some(bad) = fields.iter().find(|c| c.physical_type() != PhysicalType::FLOAT) {
        return Err(schema_err(format!("column {} is not FLOAT", bad.name())));
    }

    let total = meta.dims.len();
    let mut data: Vec<Vec<f32>> = vec![Vec::with_capacity(total); names.len()];
    for g in 0..reader.num_row_groups() {
        let rg = reader.get_row_group(g).map_err(pq_err(path))?;
        let n_rows = rg.metadata().num_rows() as usize;
        for (c, buf) in data.iter_mut().enumerate() {
            let mut col = get_typed_column_reader::<FloatType>(rg.get_column_reader(c).map_err(pq_err(path))?);
            let before = buf.len();
            while buf.len() - before < n_rows {
                let want = n_rows - (buf.len() - before);
                let (records, _, _) = col.read_records(want, None, None, buf).map_err(pq_err(path))?;
                if records == 0 {
                    return Err(schema_err(format!("row group {g} column {c} ended early")));
                }
            }
        }
    }
    let columns: Vec<Column> = names
        .into_iter()
        .zip(data)
        .map(|(name, data)| Column { name, data })
        .collect();
    let record = DatasetRecord { columns, meta };
    record.validate().map_err(|e| schema_err(e.to_string()))?;
    Ok(record)
}
