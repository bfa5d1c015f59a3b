//! Structured diagnostics: one JSON object per line.

use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde_json::{Map, Value};

type Sink = Box<dyn Write + Send>;

pub struct Diagnostics {
    sink: Option<Mutex<Sink>>,
}

impl std::fmt::Debug for Diagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Diagnostics")
            .field("enabled", &self.sink.is_some())
            .finish()
    }
}

impl Diagnostics {
    pub fn stderr() -> Self {
        Self::to_writer(std::io::stderr())
    }

    pub fn silent() -> Self {
        Self { sink: None }
    }

    pub fn to_writer(w: impl Write + Send + 'static) -> Self {
        Self {
            sink: Some(Mutex::new(Box::new(w))),
        }
    }

    /// Appends to `path`, creating it if needed.
    pub fn to_file(path: &Path) -> std::io::Result<Self> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::to_writer(std::io::LineWriter::new(file)))
    }

    /// A sink whose lines can be read back, for tests.
    pub fn capture() -> (Self, Captured) {
        let buf = Captured::default();
        (Self::to_writer(buf.clone()), buf)
    }

    /// Writes `{"event": <event>, ...fields}`. Non-object `fields` are
    /// stored under `"data"`. Write failures are ignored.
    pub fn emit(&self, event: &str, fields: Value) {
        let Some(sink) = &self.sink else { return };
        let mut obj = Map::new();
        obj.insert("event".into(), Value::String(event.into()));
        match fields {
            Value::Object(m) => obj.extend(m),
            Value::Null => {}
            other => {
                obj.insert("data".into(), other);
            }
        }
        let line = Value::Object(obj).to_string();
        let mut w = sink.lock().unwrap_or_else(|p| p.into_inner());
        let _ = writeln!(w, "{line}");
        let _ = w.flush();
    }
}

#[derive(Debug, Clone, Default)]
pub struct Captured(Arc<Mutex<Vec<u8>>>);

impl Captured {
    pub fn events(&self) -> Vec<Value> {
        let bytes = self.0.lock().unwrap_or_else(|p| p.into_inner());
        String::from_utf8_lossy(&bytes)
            .lines()
            .filter_map(|l| serde_json::from_str(l).ok())
            .collect()
    }
}

impl Write for Captured {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap_or_else(|p| p.into_inner()).extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}
