//! Prompt assets and prompt assembly.
//!
//! A prompt is rendered to a canonical request text. Its SHA-256 is the key
//! replay fixtures are looked up by, so every byte here is load-bearing:
//! changing an asset or the layout invalidates recorded fixtures.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::tools::{route_model, ArtifactKind, Models, Tool};
use crate::PipelineError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Role/task prompt, functional instructions and knowledge files of a tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolAssets {
    pub role_task: String,
    pub instructions: String,
    /// `(file name, text)`, sorted by file name.
    pub knowledge: Vec<(String, String)>,
}

macro_rules! embedded_tool {
    ($tool:literal, [$($k:literal),* $(,)?]) => {
        ToolAssets {
            role_task: include_str!(concat!("../assets/tools/", $tool, "/role_task.txt")).to_string(),
            instructions: include_str!(concat!("../assets/tools/", $tool, "/instructions.txt")).to_string(),
            knowledge: vec![$(
                ($k.to_string(), include_str!(concat!("../assets/tools/", $tool, "/knowledge/", $k)).to_string()),
            )*],
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptAssets {
    tools: BTreeMap<Tool, ToolAssets>,
}

impl PromptAssets {
    /// Assets compiled into the binary from `assets/tools/`.
    pub fn embedded() -> Self {
        let tools = BTreeMap::from([
            (
                Tool::WeakD2S,
                embedded_tool!("WeakD2S", ["solid_list_example.txt", "solid_list_format.txt"]),
            ),
            (
                Tool::StrongD2S,
                embedded_tool!("StrongD2S", ["solid_list_example.txt", "solid_list_format.txt"]),
            ),
            (Tool::Parameterize, embedded_tool!("Parameterize", ["para_example.bas"])),
            (
                Tool::Dimension,
                embedded_tool!("Dimension", ["dims_example.txt", "dims_format.txt", "expressions.txt"]),
            ),
            (Tool::Materials, embedded_tool!("Materials", ["materials_example.bas"])),
            (
                Tool::Model3D,
                embedded_tool!("Model3D", ["brick_example.bas", "cylinder_example.bas"]),
            ),
            (Tool::Model2DPlus, embedded_tool!("Model2DPlus", ["extrude_example.bas"])),
            (Tool::Boolean, embedded_tool!("Boolean", ["boolean_example.bas"])),
            (Tool::UpdatePara, embedded_tool!("UpdatePara", ["update_example.bas"])),
        ]);
        PromptAssets { tools }
    }

    /// Reads `<dir>/<Tool>/{role_task.txt, instructions.txt, knowledge/*}`.
    pub fn load_dir(dir: &Path) -> Result<Self, PipelineError> {
        let read = |p: PathBuf| {
            fs::read_to_string(&p).map_err(|source| PipelineError::Io { path: p, source })
        };
        let mut tools = BTreeMap::new();
        for tool in Tool::ALL {
            let base = dir.join(tool.name());
            let mut knowledge = Vec::new();
            let kdir = base.join("knowledge");
            if kdir.is_dir() {
                let entries = fs::read_dir(&kdir).map_err(|source| PipelineError::Io {
                    path: kdir.clone(),
                    source,
                })?;
                let mut names: Vec<String> = entries
                    .filter_map(|e| e.ok())
                    .filter(|e| e.path().is_file())
                    .map(|e| e.file_name().to_string_lossy().into_owned())
                    .collect();
                names.sort();
                for n in names {
                    knowledge.push((n.clone(), read(kdir.join(&n))?));
                }
            }
            tools.insert(
                tool,
                ToolAssets {
                    role_task: read(base.join("role_task.txt"))?,
                    instructions: read(base.join("instructions.txt"))?,
                    knowledge,
                },
            );
        }
        Ok(PromptAssets { tools })
    }

    pub fn get(&self, tool: Tool) -> &ToolAssets {
        &self.tools[&tool]
    }
}

/// A tool definition bound to its assets and routed model.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolSpec<'a> {
    pub tool: Tool,
    pub model_id: String,
    pub assets: &'a ToolAssets,
    pub inputs: &'static [ArtifactKind],
    pub output: ArtifactKind,
    pub accepts_images: bool,
}

impl<'a> ToolSpec<'a> {
    pub fn new(tool: Tool, assets: &'a PromptAssets, models: &Models, has_images: bool) -> Self {
        ToolSpec {
            tool,
            model_id: route_model(tool, has_images, models).to_string(),
            assets: assets.get(tool),
            inputs: tool.inputs(),
            output: tool.output(),
            accepts_images: tool.accepts_images(),
        }
    }
}

/// User-supplied image, referenced in prompts by content hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageInput {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl ImageInput {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let bytes = fs::read(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        Ok(ImageInput { name, bytes })
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.bytes)
    }

    pub fn mime(&self) -> &'static str {
        match self.bytes.get(..4) {
            Some([0x89, b'P', b'N', b'G']) => "image/png",
            Some([0xff, 0xd8, ..]) => "image/jpeg",
            Some([b'G', b'I', b'F', _]) => "image/gif",
            _ => "application/octet-stream",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub name: String,
    pub sha256: String,
}

/// Assembled prompt: system part, user part and image references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub tool: Tool,
    pub model: String,
    pub system: String,
    pub user: String,
    pub images: Vec<ImageRef>,
}

fn section(out: &mut String, title: &str, body: &str) {
    let _ = writeln!(out, "### {title}");
    out.push_str(body);
    if !body.ends_with('\n') {
        out.push('\n');
    }
    out.push('\n');
}

/// Orders the prompt as role/task, functional instructions, knowledge files,
/// former-tool outputs, user text, then images.
///
/// `artifacts` holds the canonical text of every artifact produced so far;
/// `extra_knowledge` is appended after the tool's own knowledge files.
pub fn assemble_prompt(
    spec: &ToolSpec<'_>,
    artifacts: &BTreeMap<ArtifactKind, String>,
    extra_knowledge: &[(String, String)],
    user_text: &str,
    images: &[ImageInput],
) -> Result<Prompt, PipelineError> {
    let mut system = String::new();
    section(&mut system, "Role and task", &spec.assets.role_task);
    section(&mut system, "Functional instructions", &spec.assets.instructions);

    let mut user = String::new();
    for (name, text) in spec.assets.knowledge.iter().chain(extra_knowledge) {
        section(&mut user, &format!("Knowledge file: {name}"), text);
    }
    for kind in spec.inputs {
        let text = artifacts
            .get(kind)
            .ok_or(PipelineError::MissingArtifact(*kind))?;
        section(&mut user, &format!("Input file: {}", kind.file_name()), text);
    }
    if spec.tool.accepts_text() && !user_text.is_empty() {
        section(&mut user, "User input", user_text);
    }
    let images: Vec<ImageRef> = if spec.accepts_images {
        images
            .iter()
            .map(|i| ImageRef {
                name: i.name.clone(),
                sha256: i.sha256(),
            })
            .collect()
    } else {
        Vec::new()
    };
    for i in &images {
        let _ = writeln!(user, "### Image: {} (sha256 {})", i.name, i.sha256);
    }
    Ok(Prompt {
        tool: spec.tool,
        model: spec.model_id.clone(),
        system,
        user,
        images,
    })
}

impl Prompt {
    /// Canonical request text, stored as `NN_<tool>.request.txt`.
    pub fn request_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tool: {}", self.tool);
        let _ = writeln!(out, "model: {}", self.model);
        for i in &self.images {
            let _ = writeln!(out, "image: sha256:{}  {}", i.sha256, i.name);
        }
        out.push_str("\n=== system ===\n");
        out.push_str(&self.system);
        out.push_str("=== user ===\n");
        out.push_str(&self.user);
        out
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.request_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn artifacts() -> BTreeMap<ArtifactKind, String> {
        BTreeMap::from([(ArtifactKind::SolidList, "solid patch\n".to_string())])
    }

    #[test]
    fn dimension_prompt_embeds_solid_list_in_order() {
        let assets = PromptAssets::embedded();
        let spec = ToolSpec::new(Tool::Dimension, &assets, &Models::default(), false);
        let mut arts = artifacts();
        assert!(matches!(
            assemble_prompt(&spec, &arts, &[], "hello", &[]),
            Err(PipelineError::MissingArtifact(ArtifactKind::Para))
        ));
        arts.insert(ArtifactKind::Para, "' para\n".into());
        let img = ImageInput {
            name: "a.png".into(),
            bytes: vec![0x89, b'P', b'N', b'G'],
        };
        let p = assemble_prompt(&spec, &arts, &[], "hello", &[img]).unwrap();
        let text = p.request_text();
        let pos = |s: &str| text.find(s).unwrap_or_else(|| panic!("missing {s}"));
        assert!(pos("### Role and task") < pos("### Functional instructions"));
        assert!(pos("### Functional instructions") < pos("### Knowledge file:"));
        assert!(pos("### Knowledge file:") < pos("### Input file: Solid_List.txt"));
        assert!(pos("### Input file: Para.bas") < pos("### User input"));
        assert!(pos("### User input") < pos("### Image: a.png"));
        assert_eq!(p.images.len(), 1);
    }

    #[test]
    fn materials_prompt_has_no_images_or_user_text() {
        let assets = PromptAssets::embedded();
        let spec = ToolSpec::new(Tool::Materials, &assets, &Models::default(), true);
        let img = ImageInput {
            name: "a.png".into(),
            bytes: vec![1, 2, 3],
        };
        let p = assemble_prompt(&spec, &artifacts(), &[], "ignored", &[img]).unwrap();
        assert!(p.images.is_empty());
        assert!(!p.user.contains("ignored"));
        assert!(p.user.contains("### Input file: Solid_List.txt\nsolid patch\n"));
    }

    #[test]
    fn hash_changes_with_user_text() {
        let assets = PromptAssets::embedded();
        let spec = ToolSpec::new(Tool::StrongD2S, &assets, &Models::default(), false);
        let a = assemble_prompt(&spec, &BTreeMap::new(), &[], "one", &[]).unwrap();
        let b = assemble_prompt(&spec, &BTreeMap::new(), &[], "two", &[]).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.clone().hash());
    }

    #[test]
    fn model3d_before_stage_two_is_missing_artifact() {
        let assets = PromptAssets::embedded();
        let spec = ToolSpec::new(Tool::Model3D, &assets, &Models::default(), false);
        assert!(matches!(
            assemble_prompt(&spec, &artifacts(), &[], "", &[]),
            Err(PipelineError::MissingArtifact(ArtifactKind::SolidsDims))
        ));
    }
}
