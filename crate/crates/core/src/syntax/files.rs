//! Reading `.lnsl` language files and `.lns` process scripts from disk.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use super::{parse_language, parse_process, Imports, SyntaxError};
use crate::process::Process;

pub const LANGUAGE_EXT: &str = "lnsl";
pub const PROCESS_EXT: &str = "lns";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Language,
    Process,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: PathBuf,
    pub kind: SourceKind,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{source}", path.display())]
    Syntax { path: PathBuf, source: SyntaxError },
    #[error("{}: expected a .lnsl or .lns file", .0.display())]
    UnknownKind(PathBuf),
}

impl SourceFile {
    pub fn read(path: impl AsRef<Path>) -> Result<SourceFile, LoadError> {
        let path = path.as_ref().to_path_buf();
        let kind = match path.extension().and_then(|e| e.to_str()) {
            Some(LANGUAGE_EXT) => SourceKind::Language,
            Some(PROCESS_EXT) => SourceKind::Process,
            _ => return Err(LoadError::UnknownKind(path)),
        };
        let text = fs::read_to_string(&path).map_err(|source| LoadError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(SourceFile { path, kind, text })
    }

    fn syntax(&self, source: SyntaxError) -> LoadError {
        LoadError::Syntax {
            path: self.path.clone(),
            source,
        }
    }
}

/// Every `.lnsl` file in `dirs`, keyed by declared name (or file stem when
/// the file declares none). Earlier directories take precedence.
pub fn load_languages(dirs: &[PathBuf]) -> Result<Imports, LoadError> {
    let mut imports = Imports::new();
    for dir in dirs {
        let entries = fs::read_dir(dir).map_err(|source| LoadError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(LANGUAGE_EXT))
            .collect();
        paths.sort();
        for path in paths {
            let file = SourceFile::read(&path)?;
            let mut lang = parse_language(&file.text).map_err(|e| file.syntax(e))?;
            if lang.name().is_none() {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                lang = lang.with_name(stem);
            }
            let name = lang.name().unwrap_or_default().to_string();
            imports.entry(name).or_insert_with(|| Arc::new(lang));
        }
    }
    Ok(imports)
}

pub fn load_process(path: impl AsRef<Path>, imports: &Imports) -> Result<Process, LoadError> {
    let file = SourceFile::read(path)?;
    if file.kind != SourceKind::Process {
        return Err(LoadError::UnknownKind(file.path));
    }
    parse_process(&file.text, imports).map_err(|e| file.syntax(e))
}
