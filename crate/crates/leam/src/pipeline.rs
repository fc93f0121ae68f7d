//! The four-stage run: identify solids, define them, model them, then write
//! the manifest of macro files to execute.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use leam_core::checks::parse_checks;
use leam_core::ir::SolidList;
use leam_core::macros::{emit_update_para, MacroDoc, Statement};
use leam_core::material::{Catalog, DEFAULT_CATALOG};
use leam_core::ParamEnv;

use crate::backend::{fixture_stem, Backend};
use crate::gate::{validate_output, Artifact, GateContext, GateFailure, GeometryGate};
use crate::prompt::{assemble_prompt, sha256_hex, ImageInput, PromptAssets, ToolSpec};
use crate::tools::{ArtifactKind, Models, Tool};
use crate::workspace::{
    append_line, create_workspace, update_file_name, write_atomic, LoadedWorkspace, ManifestEntry,
    CHECKS, DESCRIPTION, MANIFEST, TRANSCRIPTS, TRANSCRIPT_LOG,
};
use crate::PipelineError;

/// Which D2S tool starts the run. Chosen by the user, not guessed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The description fully specifies the antenna.
    Strong,
    /// The description gives requirements only; the model fills in the design.
    Weak,
}

impl Mode {
    pub fn d2s_tool(self) -> Tool {
        match self {
            Mode::Strong => Tool::StrongD2S,
            Mode::Weak => Tool::WeakD2S,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub models: Models,
    /// Catalog source text; it is also handed to the Materials tool.
    pub catalog_text: String,
    pub catalog: Catalog,
    pub assets: PromptAssets,
    pub geometry: GeometryGate,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Strong,
            models: Models::default(),
            catalog_text: DEFAULT_CATALOG.to_string(),
            catalog: Catalog::builtin(),
            assets: PromptAssets::embedded(),
            geometry: GeometryGate::default(),
        }
    }
}

impl PipelineConfig {
    pub fn with_catalog(mut self, text: String) -> Result<Self, PipelineError> {
        self.catalog = Catalog::parse(&text).map_err(|e| PipelineError::Config(format!("catalog: {e}")))?;
        self.catalog_text = text;
        Ok(self)
    }
}

/// What the user hands to the pipeline.
#[derive(Debug, Clone, Default)]
pub struct UserInput {
    pub text: String,
    pub images: Vec<ImageInput>,
    /// `checks.txt` content copied into the workspace for later reports.
    pub checks: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(Vec<String>),
    /// Not sent to a model; the output was empty by construction.
    Skipped(String),
}

/// One tool invocation as recorded in the workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolTranscript {
    pub index: usize,
    pub tool: Tool,
    pub model: String,
    pub request: String,
    pub response: Option<String>,
    pub status: Status,
    pub started: String,
    pub finished: String,
}

impl ToolTranscript {
    pub fn request_hash(&self) -> String {
        sha256_hex(self.request.as_bytes())
    }

    /// Entry of `transcript.log`.
    pub fn log_entry(&self) -> String {
        let mut s = format!(
            "{:02} {} model={} start={} end={}",
            self.index, self.tool, self.model, self.started, self.finished
        );
        if !self.request.is_empty() {
            s.push_str(&format!(" request=sha256:{}", self.request_hash()));
        }
        if let Some(r) = &self.response {
            s.push_str(&format!(" response=sha256:{}", sha256_hex(r.as_bytes())));
        }
        match &self.status {
            Status::Ok => s.push_str(&format!(" ok -> {}\n", self.tool.output())),
            Status::Skipped(why) => s.push_str(&format!(" skipped ({why}) -> {}\n", self.tool.output())),
            Status::Failed(diags) => {
                s.push_str(" failed\n");
                for d in diags {
                    s.push_str(&format!("    {d}\n"));
                }
            }
        }
        s
    }
}

/// Topological check of a transcript: fails if a tool ran before one of its
/// inputs existed, or if invocations are out of order.
pub fn check_stage_order(transcripts: &[ToolTranscript]) -> Result<(), String> {
    let mut produced = BTreeSet::new();
    let mut last = 0;
    for t in transcripts {
        if t.index <= last {
            return Err(format!("invocation {:02} is out of order", t.index));
        }
        last = t.index;
        for i in t.tool.inputs() {
            if !produced.contains(i) {
                return Err(format!("{} ran before {i} existed", t.tool));
            }
        }
        if t.status != Status::Ok && !matches!(t.status, Status::Skipped(_)) {
            return Err(format!("{} failed", t.tool));
        }
        produced.insert(t.tool.output());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Summary {
    pub solids: usize,
    pub parameters: usize,
    pub materials: usize,
}

impl Summary {
    pub fn of(dims: &SolidList) -> Self {
        Summary {
            solids: dims.solids.len(),
            parameters: dims.parameters.len(),
            materials: dims.materials_used.len(),
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let plural = |n: usize, word: &str| {
            if n == 1 {
                format!("{n} {word}")
            } else {
                format!("{n} {word}s")
            }
        };
        write!(
            f,
            "{}, {}, {}",
            plural(self.solids, "solid"),
            plural(self.parameters, "parameter"),
            plural(self.materials, "material")
        )
    }
}

#[derive(Debug, Clone)]
pub struct PipelineState {
    pub workspace: PathBuf,
    pub artifacts: BTreeMap<ArtifactKind, Artifact>,
    pub transcripts: Vec<ToolTranscript>,
    pub manifest: Vec<ManifestEntry>,
}

impl PipelineState {
    pub fn dims(&self) -> Option<&SolidList> {
        self.artifacts.get(&ArtifactKind::SolidsDims).and_then(Artifact::solid_list)
    }

    pub fn summary(&self) -> Option<Summary> {
        self.dims().map(Summary::of)
    }

    /// Canonical text of every artifact, keyed by kind.
    pub fn artifact_texts(&self) -> BTreeMap<ArtifactKind, String> {
        self.artifacts.iter().map(|(k, a)| (*k, a.text.clone())).collect()
    }
}

/// Timestamps: invocation-derived ticks for deterministic backends, wall
/// clock otherwise.
#[derive(Clone, Copy)]
struct Clock {
    logical: bool,
}

impl Clock {
    fn stamp(self, index: usize, end: bool) -> String {
        if self.logical {
            format!("t{}", 2 * index - usize::from(!end))
        } else {
            let ms = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0);
            format!("unix_ms:{ms}")
        }
    }
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    backend: &'a dyn Backend,
    input: &'a UserInput,
    clock: Clock,
}

impl Runner<'_> {
    fn extra_knowledge(&self, tool: Tool) -> Vec<(String, String)> {
        if tool == Tool::Materials {
            vec![("materials.catalog".into(), self.cfg.catalog_text.clone())]
        } else {
            Vec::new()
        }
    }

    /// Sends one prompt and gates the answer. Never touches the workspace.
    fn invoke(
        &self,
        index: usize,
        tool: Tool,
        artifacts: &BTreeMap<ArtifactKind, Artifact>,
        user_text: &str,
    ) -> (ToolTranscript, Result<Artifact, PipelineError>) {
        let has_images = !self.input.images.is_empty();
        let spec = ToolSpec::new(tool, &self.cfg.assets, &self.cfg.models, has_images);
        let started = self.clock.stamp(index, false);
        let mut t = ToolTranscript {
            index,
            tool,
            model: spec.model_id.clone(),
            request: String::new(),
            response: None,
            status: Status::Ok,
            started,
            finished: String::new(),
        };
        let texts = artifacts.iter().map(|(k, a)| (*k, a.text.clone())).collect();
        let result = assemble_prompt(&spec, &texts, &self.extra_knowledge(tool), user_text, &self.input.images)
            .and_then(|prompt| {
                t.request = prompt.request_text();
                let raw = self
                    .backend
                    .complete(index, &prompt, &self.input.images)
                    .map_err(|source| PipelineError::Backend { tool, source })?;
                t.response = Some(raw.clone());
                let ctx = GateContext {
                    artifacts,
                    catalog: &self.cfg.catalog,
                    geometry: self.cfg.geometry,
                };
                Ok(validate_output(tool, &raw, &ctx)?)
            });
        if let Err(e) = &result {
            t.status = Status::Failed(match e {
                PipelineError::Gate(g) => g.diagnostics.clone(),
                other => vec![other.to_string()],
            });
        }
        t.finished = self.clock.stamp(index, true);
        (t, result)
    }
}

fn record(root: &Path, t: &ToolTranscript) -> Result<(), PipelineError> {
    let dir = root.join(TRANSCRIPTS);
    let stem = fixture_stem(t.index, t.tool);
    if !t.request.is_empty() {
        write_atomic(&dir.join(format!("{stem}.request.txt")), t.request.as_bytes())?;
    }
    if let Some(r) = &t.response {
        write_atomic(&dir.join(format!("{stem}.response.txt")), r.as_bytes())?;
    }
    append_line(&root.join(TRANSCRIPT_LOG), &t.log_entry())
}

fn store(state: &mut PipelineState, artifact: Artifact) -> Result<(), PipelineError> {
    write_atomic(&state.workspace.join(artifact.kind.file_name()), artifact.text.as_bytes())?;
    state.artifacts.insert(artifact.kind, artifact);
    Ok(())
}

fn accept(state: &mut PipelineState, t: ToolTranscript, result: Result<Artifact, PipelineError>) -> Result<(), PipelineError> {
    record(&state.workspace, &t)?;
    state.transcripts.push(t);
    store(state, result?)
}

fn skipped(index: usize, tool: Tool, why: &str, clock: Clock) -> (ToolTranscript, Result<Artifact, PipelineError>) {
    let t = ToolTranscript {
        index,
        tool,
        model: "-".into(),
        request: String::new(),
        response: None,
        status: Status::Skipped(why.into()),
        started: clock.stamp(index, false),
        finished: clock.stamp(index, true),
    };
    (t, Ok(Artifact::from_macro(tool.output(), MacroDoc::default())))
}

/// Runs all four stages into an empty `workspace`.
///
/// Invocation numbers are fixed per tool (D2S 1, Parameterize 2, Dimension 3,
/// Materials 4, Model3D 5, Model2DPlus 6, Boolean 7) so recorded fixtures
/// line up across runs. Model3D and Model2DPlus run concurrently; a tool
/// with no solids to build is skipped and leaves an empty macro file.
pub fn run_pipeline(
    workspace: &Path,
    input: &UserInput,
    cfg: &PipelineConfig,
    backend: &dyn Backend,
) -> Result<PipelineState, PipelineError> {
    if let Some(c) = &input.checks {
        parse_checks(c)?;
    }
    create_workspace(workspace)?;
    write_atomic(&workspace.join(DESCRIPTION), input.text.as_bytes())?;
    if let Some(c) = &input.checks {
        write_atomic(&workspace.join(CHECKS), c.as_bytes())?;
    }
    for img in &input.images {
        write_atomic(&workspace.join(TRANSCRIPTS).join("images").join(&img.name), &img.bytes)?;
    }
    let runner = Runner {
        cfg,
        backend,
        input,
        clock: Clock {
            logical: backend.deterministic(),
        },
    };
    let mut state = PipelineState {
        workspace: workspace.to_path_buf(),
        artifacts: BTreeMap::new(),
        transcripts: Vec::new(),
        manifest: Vec::new(),
    };

    // Stages 1 and 2.
    let sequence = [
        (1, cfg.mode.d2s_tool()),
        (2, Tool::Parameterize),
        (3, Tool::Dimension),
        (4, Tool::Materials),
    ];
    for (index, tool) in sequence {
        let (t, r) = runner.invoke(index, tool, &state.artifacts, &input.text);
        accept(&mut state, t, r)?;
    }

    // Stage 3: both model tools only read stage-2 artifacts.
    let dims = state.dims().expect("gated").clone();
    let has_3d = dims.solids.iter().any(|s| s.shape.is_3d());
    let has_2d = dims.solids.iter().any(|s| !s.shape.is_3d());
    let arts = &state.artifacts;
    let (r3, r2) = thread::scope(|s| {
        let h3 = s.spawn(|| {
            if has_3d {
                runner.invoke(5, Tool::Model3D, arts, "")
            } else {
                skipped(5, Tool::Model3D, "no brick or cylinder solids", runner.clock)
            }
        });
        let r2 = if has_2d {
            runner.invoke(6, Tool::Model2DPlus, arts, "")
        } else {
            skipped(6, Tool::Model2DPlus, "no extruded solids", runner.clock)
        };
        (h3.join().expect("Model3D worker panicked"), r2)
    });
    // Both transcripts are logged before either failure is reported.
    let ((t3, a3), (t2, a2)) = (r3, r2);
    for t in [t3, t2] {
        record(&state.workspace, &t)?;
        state.transcripts.push(t);
    }
    for a in [a3?, a2?] {
        store(&mut state, a)?;
    }
    let (t, r) = runner.invoke(7, Tool::Boolean, &state.artifacts, "");
    accept(&mut state, t, r)?;

    // Stage 4: the manifest stands in for executing the macros.
    let mut manifest = String::new();
    for kind in ArtifactKind::MACROS {
        let e = ManifestEntry::of(kind.file_name(), &state.artifacts[&kind].text);
        manifest.push_str(&e.line());
        state.manifest.push(e);
    }
    write_atomic(&workspace.join(MANIFEST), manifest.as_bytes())?;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub file: String,
    pub doc: MacroDoc,
    /// All parameter values after the update.
    pub parameters: ParamEnv,
}

/// Applies new parameter values to a finished workspace.
///
/// Writes the next `UpdatePara*.bas` and appends it to the manifest. With a
/// backend the UpdatePara tool writes the macro and the gate checks it sets
/// exactly the requested values; without one the macro is emitted directly.
pub fn run_update(
    workspace: &Path,
    updates: &[(String, f64)],
    cfg: &PipelineConfig,
    backend: Option<&dyn Backend>,
) -> Result<UpdateOutcome, PipelineError> {
    let ws = LoadedWorkspace::load(workspace)?;
    let current = ws.parameters()?;
    let mut requested = ParamEnv::new();
    for (name, value) in updates {
        if !current.contains(name) {
            return Err(PipelineError::UnknownParameter(name.clone()));
        }
        if requested.contains(name) {
            requested.set(name, *value).expect("declared");
        } else {
            requested.declare(name, *value).expect("fresh");
        }
    }
    let doc = match backend {
        None => emit_update_para(&requested, &current).map_err(|e| PipelineError::Config(e.to_string()))?,
        Some(b) => {
            let mut artifacts = BTreeMap::new();
            for (file, doc) in &ws.docs {
                if let Some(kind) = ArtifactKind::MACROS.iter().find(|k| k.file_name() == file) {
                    artifacts.insert(*kind, Artifact::from_macro(*kind, doc.clone()));
                }
            }
            let text: String = requested.iter().map(|(n, v)| format!("{n} = {v}\n")).collect();
            let input = UserInput::default();
            let runner = Runner {
                cfg,
                backend: b,
                input: &input,
                clock: Clock {
                    logical: b.deterministic(),
                },
            };
            let index = ws.invocation_count() + 1;
            let (t, r) = runner.invoke(index, Tool::UpdatePara, &artifacts, &text);
            record(workspace, &t)?;
            let doc = r?.macro_doc().expect("macro").clone();
            let expected = emit_update_para(&requested, &current).map_err(|e| PipelineError::Config(e.to_string()))?;
            let stores = |d: &MacroDoc| -> Vec<Statement> {
                let mut v: Vec<Statement> = d.statements.iter().filter(|s| **s != Statement::Rebuild).cloned().collect();
                v.sort_by_key(|s| format!("{s:?}"));
                v
            };
            if stores(&doc) != stores(&expected) {
                return Err(GateFailure {
                    tool: Tool::UpdatePara,
                    diagnostics: vec!["stored values differ from the requested update".into()],
                }
                .into());
            }
            doc
        }
    };
    let file = update_file_name(ws.update_count() + 1);
    let text = doc.render();
    write_atomic(&workspace.join(&file), text.as_bytes())?;
    append_line(&workspace.join(MANIFEST), &ManifestEntry::of(&file, &text).line())?;
    let mut parameters = current;
    for (n, v) in requested.iter() {
        parameters.set(n, v).expect("checked");
    }
    Ok(UpdateOutcome { file, doc, parameters })
}
