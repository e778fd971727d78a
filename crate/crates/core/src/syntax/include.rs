//! File inclusion: each file is parsed once and its declarations are spliced
//! before the declarations of the file that includes it.

use super::ast::Program;
use super::parser::parse_source;
use super::token::{FileId, SourceMap, Span};
use crate::diag::Diagnostic;
use crate::stdlib::prelude::{MCORE_NAME, MCORE_SOURCE};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Searched after the including file's directory, in order.
    pub search_paths: Vec<PathBuf>,
    /// Prepend the prelude unless the model includes `mcore.m` itself.
    pub implicit_prelude: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            search_paths: Vec::new(),
            implicit_prelude: true,
        }
    }
}

/// A model with all includes merged into one program.
#[derive(Debug, Clone)]
pub struct LoadedUnit {
    pub program: Program,
    pub sources: SourceMap,
    /// File holding the prelude declarations, if it was loaded.
    pub prelude_file: Option<FileId>,
    pub root_file: FileId,
    pub diagnostics: Vec<Diagnostic>,
}

const PRELUDE_PATH: &str = "<prelude>/mcore.m";

struct Loader<'a> {
    opts: &'a LoadOptions,
    sources: SourceMap,
    loaded: HashSet<String>,
    /// (display name, canonical key) of files currently being loaded.
    chain: Vec<(String, String)>,
    diagnostics: Vec<Diagnostic>,
    prelude_file: Option<FileId>,
    main_origin: Option<FileId>,
}

/// Reads and loads the model at `path`.
pub fn load_file(path: &Path, opts: &LoadOptions) -> Result<LoadedUnit, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let key = canonical_key(path);
    Ok(load_with_key(&path.display().to_string(), &key, &text, path.parent(), opts))
}

/// Loads a model given as text. Includes resolve against `base_dir` (when
/// given) and the search paths.
pub fn load_source(name: &str, text: &str, base_dir: Option<&Path>, opts: &LoadOptions) -> LoadedUnit {
    load_with_key(name, name, text, base_dir, opts)
}

fn load_with_key(
    name: &str,
    key: &str,
    text: &str,
    base_dir: Option<&Path>,
    opts: &LoadOptions,
) -> LoadedUnit {
    let mut loader = Loader {
        opts,
        sources: SourceMap::new(),
        loaded: HashSet::new(),
        chain: Vec::new(),
        diagnostics: Vec::new(),
        prelude_file: None,
        main_origin: None,
    };
    loader.loaded.insert(key.to_string());
    loader.chain.push((name.to_string(), key.to_string()));
    let root_file = loader.sources.add(name, text);
    let mut merged = loader.load(root_file, base_dir.map(Path::to_path_buf));
    if opts.implicit_prelude && loader.prelude_file.is_none() {
        let id = loader.sources.add(PRELUDE_PATH, MCORE_SOURCE);
        loader.prelude_file = Some(id);
        let (prelude, errs) = parse_source(MCORE_SOURCE, id);
        loader.diagnostics.extend(errs);
        merged = splice(prelude, merged);
    }
    LoadedUnit {
        program: merged,
        sources: loader.sources,
        prelude_file: loader.prelude_file,
        root_file,
        diagnostics: loader.diagnostics,
    }
}

fn canonical_key(path: &Path) -> String {
    std::fs::canonicalize(path)
        .unwrap_or_else(|_| path.to_path_buf())
        .display()
        .to_string()
}

/// Declarations of `first` followed by those of `second`.
fn splice(mut first: Program, second: Program) -> Program {
    first.annotations.extend(second.annotations);
    first.includes.extend(second.includes);
    first.consts.extend(second.consts);
    first.functions.extend(second.functions);
    first.types.extend(second.types);
    if first.main.is_none() {
        first.main = second.main;
    }
    first
}

enum Located {
    Disk(PathBuf),
    Prelude,
}

impl Loader<'_> {
    fn load(&mut self, file: FileId, dir: Option<PathBuf>) -> Program {
        let text = self.sources.get(file).unwrap().text.clone();
        let (mut program, errs) = parse_source(&text, file);
        self.diagnostics.extend(errs);
        let includes = program.includes.clone();
        let mut merged = Program::default();
        for inc in &includes {
            if let Some(included) = self.include(&inc.path, inc.span, dir.as_deref()) {
                merged = splice(merged, included);
            }
        }
        if let Some(main) = &program.main {
            match self.main_origin {
                Some(prev) => {
                    self.diagnostics.push(Diagnostic::error(
                        main.span,
                        "include",
                        format!(
                            "more than one main block after includes (another one is in {})",
                            self.sources.path(prev)
                        ),
                    ));
                    program.main = None;
                }
                None => self.main_origin = Some(file),
            }
        }
        let main = program.main.take();
        let mut out = splice(merged, program);
        if out.main.is_none() {
            out.main = main;
        }
        out
    }

    fn locate(&self, name: &str, dir: Option<&Path>) -> Option<Located> {
        let candidate = Path::new(name);
        if candidate.is_absolute() {
            return candidate.is_file().then(|| Located::Disk(candidate.to_path_buf()));
        }
        let dirs = dir
            .map(Path::to_path_buf)
            .into_iter()
            .chain(self.opts.search_paths.iter().cloned());
        for d in dirs {
            let p = d.join(name);
            if p.is_file() {
                return Some(Located::Disk(p));
            }
        }
        if dir.is_none() && candidate.is_file() {
            return Some(Located::Disk(candidate.to_path_buf()));
        }
        if Path::new(name).file_name().and_then(|n| n.to_str()) == Some(MCORE_NAME) {
            return Some(Located::Prelude);
        }
        None
    }

    fn include(&mut self, name: &str, span: Span, dir: Option<&Path>) -> Option<Program> {
        let located = match self.locate(name, dir) {
            Some(l) => l,
            None => {
                self.diagnostics.push(Diagnostic::error(
                    span,
                    "include",
                    format!("cannot find include file \"{name}\""),
                ));
                return None;
            }
        };
        let (key, display, text, next_dir) = match located {
            Located::Prelude => (
                PRELUDE_PATH.to_string(),
                PRELUDE_PATH.to_string(),
                MCORE_SOURCE.to_string(),
                None,
            ),
            Located::Disk(p) => {
                let key = canonical_key(&p);
                let text = match std::fs::read_to_string(&p) {
                    Ok(t) => t,
                    Err(e) => {
                        self.diagnostics.push(Diagnostic::error(
                            span,
                            "include",
                            format!("cannot read include file \"{name}\": {e}"),
                        ));
                        return None;
                    }
                };
                (key, p.display().to_string(), text, p.parent().map(Path::to_path_buf))
            }
        };
        if self.chain.iter().any(|(_, k)| k == &key) {
            let mut chain: Vec<String> = self.chain.iter().map(|(d, _)| d.clone()).collect();
            chain.push(display);
            self.diagnostics.push(Diagnostic::error(
                span,
                "include",
                format!("include cycle: {}", chain.join(" -> ")),
            ));
            return None;
        }
        if !self.loaded.insert(key.clone()) {
            return None;
        }
        let is_prelude = key == PRELUDE_PATH
            || Path::new(&display).file_name().and_then(|n| n.to_str()) == Some(MCORE_NAME);
        let id = self.sources.add(display.clone(), text);
        if is_prelude && self.prelude_file.is_none() {
            self.prelude_file = Some(id);
        }
        self.chain.push((display, key));
        let program = self.load(id, next_dir);
        self.chain.pop();
        Some(program)
    }
}

