//! Database handles shared by synthesis, detection and evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rusqlite::Connection;

use crate::exec::{database_path, open_query_only};
use crate::schema::{introspect_schema, SchemaError, SchemaGraph};

#[derive(Debug, Clone)]
pub struct Database {
    pub db_id: String,
    pub path: PathBuf,
    pub schema: SchemaGraph,
}

impl Database {
    pub fn open(path: &Path) -> Result<Self, SchemaError> {
        let schema = introspect_schema(path)?;
        Ok(Database {
            db_id: schema.db_id.clone(),
            path: path.to_path_buf(),
            schema,
        })
    }

    /// A fresh query-only connection.
    pub fn connect(&self) -> Result<Connection, SchemaError> {
        open_query_only(&self.path)
    }
}

/// Lazily opened databases below a root directory.
#[derive(Debug, Default)]
pub struct DatabaseCache {
    root: PathBuf,
    open: Mutex<BTreeMap<String, Arc<Database>>>,
}

impl DatabaseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DatabaseCache {
            root: root.into(),
            open: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn get(&self, db_id: &str) -> Result<Arc<Database>, SchemaError> {
        if let Some(db) = self.open.lock().unwrap_or_else(|e| e.into_inner()).get(db_id) {
            return Ok(db.clone());
        }
        let mut db = Database::open(&database_path(&self.root, db_id))?;
        db.db_id = db_id.to_string();
        db.schema.db_id = db_id.to_string();
        let db = Arc::new(db);
        self.open
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(db_id.to_string(), db.clone());
        Ok(db)
    }
}
