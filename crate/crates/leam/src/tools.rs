//! The nine pipeline tools, their inputs and outputs, and model routing.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

/// Artifacts a tool consumes or produces. Each maps to one workspace file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArtifactKind {
    SolidList,
    Para,
    SolidsDims,
    Materials,
    Model3D,
    Model2DPlus,
    Boolean,
    UpdatePara,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 8] = [
        ArtifactKind::SolidList,
        ArtifactKind::Para,
        ArtifactKind::SolidsDims,
        ArtifactKind::Materials,
        ArtifactKind::Model3D,
        ArtifactKind::Model2DPlus,
        ArtifactKind::Boolean,
        ArtifactKind::UpdatePara,
    ];

    /// Macro files in execution order, as listed by the run manifest.
    pub const MACROS: [ArtifactKind; 5] = [
        ArtifactKind::Para,
        ArtifactKind::Materials,
        ArtifactKind::Model3D,
        ArtifactKind::Model2DPlus,
        ArtifactKind::Boolean,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ArtifactKind::SolidList => "Solid_List.txt",
            ArtifactKind::Para => "Para.bas",
            ArtifactKind::SolidsDims => "Solids_Dims.txt",
            ArtifactKind::Materials => "Materials.bas",
            ArtifactKind::Model3D => "3D_Model.bas",
            ArtifactKind::Model2DPlus => "2D+_Model.bas",
            ArtifactKind::Boolean => "Boolean.bas",
            ArtifactKind::UpdatePara => "UpdatePara.bas",
        }
    }

    pub fn is_macro(self) -> bool {
        !matches!(self, ArtifactKind::SolidList | ArtifactKind::SolidsDims)
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tool {
    WeakD2S,
    StrongD2S,
    Parameterize,
    Dimension,
    Materials,
    Model3D,
    Model2DPlus,
    Boolean,
    UpdatePara,
}

impl Tool {
    pub const ALL: [Tool; 9] = [
        Tool::WeakD2S,
        Tool::StrongD2S,
        Tool::Parameterize,
        Tool::Dimension,
        Tool::Materials,
        Tool::Model3D,
        Tool::Model2DPlus,
        Tool::Boolean,
        Tool::UpdatePara,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tool::WeakD2S => "WeakD2S",
            Tool::StrongD2S => "StrongD2S",
            Tool::Parameterize => "Parameterize",
            Tool::Dimension => "Dimension",
            Tool::Materials => "Materials",
            Tool::Model3D => "Model3D",
            Tool::Model2DPlus => "Model2DPlus",
            Tool::Boolean => "Boolean",
            Tool::UpdatePara => "UpdatePara",
        }
    }

    pub fn is_d2s(self) -> bool {
        matches!(self, Tool::WeakD2S | Tool::StrongD2S)
    }

    /// Former-tool outputs embedded in the prompt, in prompt order.
    pub fn inputs(self) -> &'static [ArtifactKind] {
        use ArtifactKind::*;
        match self {
            Tool::WeakD2S | Tool::StrongD2S => &[],
            Tool::Parameterize => &[SolidList],
            Tool::Dimension => &[SolidList, Para],
            Tool::Materials => &[SolidList],
            Tool::Model3D | Tool::Model2DPlus => &[SolidsDims, Para, Materials],
            Tool::Boolean => &[SolidsDims, Para, Materials, Model3D, Model2DPlus],
            Tool::UpdatePara => &[Para, Materials, Model3D, Model2DPlus, Boolean],
        }
    }

    pub fn output(self) -> ArtifactKind {
        match self {
            Tool::WeakD2S | Tool::StrongD2S => ArtifactKind::SolidList,
            Tool::Parameterize => ArtifactKind::Para,
            Tool::Dimension => ArtifactKind::SolidsDims,
            Tool::Materials => ArtifactKind::Materials,
            Tool::Model3D => ArtifactKind::Model3D,
            Tool::Model2DPlus => ArtifactKind::Model2DPlus,
            Tool::Boolean => ArtifactKind::Boolean,
            Tool::UpdatePara => ArtifactKind::UpdatePara,
        }
    }

    pub fn accepts_text(self) -> bool {
        matches!(
            self,
            Tool::WeakD2S | Tool::StrongD2S | Tool::Parameterize | Tool::Dimension | Tool::UpdatePara
        )
    }

    pub fn accepts_images(self) -> bool {
        matches!(
            self,
            Tool::WeakD2S | Tool::StrongD2S | Tool::Parameterize | Tool::Dimension
        )
    }

    pub fn stage(self) -> u8 {
        match self {
            Tool::WeakD2S | Tool::StrongD2S => 1,
            Tool::Parameterize | Tool::Dimension | Tool::Materials => 2,
            Tool::Model3D | Tool::Model2DPlus | Tool::Boolean => 3,
            Tool::UpdatePara => 4,
        }
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Tool::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown tool `{s}`"))
    }
}

/// Model identifiers. Opaque strings, overridable from the config file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Models {
    /// Used for text-only input and for the D2S tools.
    pub reasoning: String,
    /// Used for multimodal input and for the Materials tool.
    pub base: String,
}

impl Default for Models {
    fn default() -> Self {
        Models {
            reasoning: "o1-2024-12-17".into(),
            base: "gpt-4o-2024-11-20".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClass {
    Reasoning,
    Base,
}

/// Which model serves `tool` when the user supplied images (`has_images`).
///
/// Text-only input goes to the reasoning model and multimodal input to the
/// base model, except that D2S always reasons and Materials always uses base.
pub fn route_class(tool: Tool, has_images: bool) -> ModelClass {
    match tool {
        Tool::WeakD2S | Tool::StrongD2S => ModelClass::Reasoning,
        Tool::Materials => ModelClass::Base,
        t if has_images && t.accepts_images() => ModelClass::Base,
        _ => ModelClass::Reasoning,
    }
}

pub fn route_model(tool: Tool, has_images: bool, models: &Models) -> &str {
    match route_class(tool, has_images) {
        ModelClass::Reasoning => &models.reasoning,
        ModelClass::Base => &models.base,
    }
}
