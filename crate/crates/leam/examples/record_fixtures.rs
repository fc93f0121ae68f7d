//! Regenerates the replay fixtures under `fixtures/<case>/`.
//!
//! Each case keeps hand-written sources: the stage-1 list a D2S tool would
//! answer with and the dimensioned list a Dimension tool would answer with.
//! The remaining answers come from the canonical emitters, so the recorded
//! transcripts are exactly what a well-behaved model produces. Prompts are
//! the real assembled ones, which means fixtures must be re-recorded after
//! any change to the prompt assets.
//!
//! ```text
//! cargo run -p leam --example record_fixtures
//! ```

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use leam::backend::{Backend, BackendError};
use leam::prompt::{ImageInput, Prompt};
use leam::{run_pipeline, run_update, Mode, PipelineConfig, Tool, UserInput};
use leam_core::ir::{parse_solid_list, SolidList};
use leam_core::macros::{emit_2dplus, emit_3d, emit_boolean, emit_materials, emit_para, emit_update_para, MacroDoc};
use leam_core::material::Catalog;
use leam_core::ParamEnv;

struct Case {
    name: &'static str,
    mode: Mode,
    /// Wrap the Model3D answer in prose and a code fence, as chat models do.
    chatty_3d: bool,
    /// Parameter file for a recorded UpdatePara invocation.
    update: Option<&'static str>,
}

const CASES: &[Case] = &[
    Case {
        name: "lslot",
        mode: Mode::Strong,
        chatty_3d: true,
        update: Some("PatchW = 12\n"),
    },
    Case {
        name: "vivaldi",
        mode: Mode::Strong,
        chatty_3d: false,
        update: Some("update.txt"),
    },
    Case {
        name: "patch245",
        mode: Mode::Weak,
        chatty_3d: false,
        update: None,
    },
    Case {
        name: "monopole",
        mode: Mode::Strong,
        chatty_3d: false,
        update: None,
    },
];

struct Scripted {
    stage1: String,
    dims_text: String,
    dims: SolidList,
    update: Option<MacroDoc>,
    chatty_3d: bool,
}

fn emitted(r: Result<MacroDoc, impl std::fmt::Display>) -> Result<String, BackendError> {
    r.map(|d| d.render()).map_err(|e| BackendError::Response(e.to_string()))
}

impl Backend for Scripted {
    fn complete(&self, _index: usize, prompt: &Prompt, _images: &[ImageInput]) -> Result<String, BackendError> {
        let d = &self.dims;
        match prompt.tool {
            Tool::StrongD2S | Tool::WeakD2S => Ok(self.stage1.clone()),
            Tool::Parameterize => emitted(emit_para(&d.parameters, &d.params_by_first_use())),
            Tool::Dimension => Ok(self.dims_text.clone()),
            Tool::Materials => emitted(emit_materials(&d.materials_used, &Catalog::builtin())),
            Tool::Model3D => {
                let body = emitted(emit_3d(d))?;
                Ok(if self.chatty_3d {
                    format!("Here is the 3D model macro:\n\n```vba\n{body}```\n\nRun it after Materials.bas.\n")
                } else {
                    body
                })
            }
            Tool::Model2DPlus => emitted(emit_2dplus(d)),
            Tool::Boolean => emitted(emit_boolean(&d.boolean_plan, &d.solids)),
            Tool::UpdatePara => self
                .update
                .as_ref()
                .map(MacroDoc::render)
                .ok_or_else(|| BackendError::Response("no update scripted".into())),
        }
    }

    fn deterministic(&self) -> bool {
        true
    }
}

fn assignments(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (n, v) = l.split_once('=').expect("NAME = VALUE");
            (n.trim().to_string(), v.trim().parse().expect("number"))
        })
        .collect()
}

fn record(root: &Path, case: &Case) -> Result<(), Box<dyn Error>> {
    let dir = root.join(case.name);
    let src = dir.join("sources");
    let dims_text = fs::read_to_string(src.join("Solids_Dims.txt"))?;
    let dims = parse_solid_list(&dims_text, true)?;
    let updates = match case.update {
        Some(f) if f.ends_with(".txt") => assignments(&fs::read_to_string(dir.join(f))?),
        Some(inline) => assignments(inline),
        None => Vec::new(),
    };
    let update = if updates.is_empty() {
        None
    } else {
        let mut requested = ParamEnv::new();
        for (n, v) in &updates {
            requested.declare(n, *v)?;
        }
        Some(emit_update_para(&requested, &dims.parameters)?)
    };
    let backend = Scripted {
        stage1: fs::read_to_string(src.join("Solid_List.txt"))?,
        dims_text,
        dims,
        update,
        chatty_3d: case.chatty_3d,
    };

    let mut images = Vec::new();
    let image_dir = dir.join("images");
    if image_dir.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&image_dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        paths.sort();
        for p in paths {
            images.push(ImageInput::load(&p)?);
        }
    }
    let checks = dir.join("checks.txt");
    let input = UserInput {
        text: fs::read_to_string(dir.join("description.txt"))?,
        images,
        checks: checks.is_file().then(|| fs::read_to_string(&checks)).transpose()?,
    };
    let cfg = PipelineConfig {
        mode: case.mode,
        ..PipelineConfig::default()
    };

    let tmp = tempfile::tempdir()?;
    let ws = tmp.path().join("ws");
    let state = run_pipeline(&ws, &input, &cfg, &backend)?;
    if !updates.is_empty() {
        run_update(&ws, &updates, &cfg, Some(&backend))?;
    }

    for e in fs::read_dir(&dir)? {
        let p = e?.path();
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if name.ends_with(".request.txt") || name.ends_with(".response.txt") {
            fs::remove_file(&p)?;
        }
    }
    let mut n = 0;
    for e in fs::read_dir(ws.join("transcripts"))? {
        let p = e?.path();
        if p.is_file() {
            fs::copy(&p, dir.join(p.file_name().expect("file")))?;
            n += 1;
        }
    }
    println!("{}: {} ({n} files)", case.name, state.summary().expect("dimensioned"));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for case in CASES {
        record(&root, case).map_err(|e| format!("{}: {e}", case.name))?;
    }
    Ok(())
}
