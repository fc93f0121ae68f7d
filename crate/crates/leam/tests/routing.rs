mod common;

use std::collections::BTreeMap;
use std::fs;

use common::fixtures;
use leam::config::Config;
use leam::prompt::{assemble_prompt, ImageInput, PromptAssets, ToolSpec};
use leam::tools::{route_class, ModelClass};
use leam::{route_model, ArtifactKind, Models, PipelineError, Tool};

const R: &str = "o1-2024-12-17";
const B: &str = "gpt-4o-2024-11-20";

#[test]
fn routing_table() {
    // (tool, model without images, model with images)
    let table = [
        (Tool::WeakD2S, R, R),
        (Tool::StrongD2S, R, R),
        (Tool::Parameterize, R, B),
        (Tool::Dimension, R, B),
        (Tool::Materials, B, B),
        (Tool::Model3D, R, R),
        (Tool::Model2DPlus, R, R),
        (Tool::Boolean, R, R),
        (Tool::UpdatePara, R, R),
    ];
    let models = Models::default();
    assert_eq!(table.len(), Tool::ALL.len());
    for (tool, plain, with_images) in table {
        assert_eq!(route_model(tool, false, &models), plain, "{tool} text only");
        assert_eq!(route_model(tool, true, &models), with_images, "{tool} with images");
    }
}

#[test]
fn d2s_reasons_even_with_images() {
    for t in [Tool::WeakD2S, Tool::StrongD2S] {
        assert!(t.accepts_images());
        assert_eq!(route_class(t, true), ModelClass::Reasoning);
    }
}

#[test]
fn model_names_come_from_config() {
    let cfg = Config::parse("[models]\nreasoning = \"r-1\"\nbase = \"b-1\"\n").unwrap();
    assert_eq!(route_model(Tool::Dimension, true, &cfg.models), "b-1");
    assert_eq!(route_model(Tool::Dimension, false, &cfg.models), "r-1");
    assert!(matches!(Config::parse("[models]\nfast = \"x\"\n"), Err(PipelineError::Config(_))));
}

#[test]
fn prompt_sections_follow_the_tool_contract() {
    let assets = PromptAssets::embedded();
    let models = Models::default();
    let mut arts = BTreeMap::new();
    arts.insert(ArtifactKind::SolidList, "solid a\n".to_string());
    let img = ImageInput {
        name: "fig.png".into(),
        bytes: vec![0x89, b'P', b'N', b'G', 1, 2, 3],
    };

    let spec = ToolSpec::new(Tool::Parameterize, &assets, &models, true);
    let p = assemble_prompt(&spec, &arts, &[], "user words", std::slice::from_ref(&img)).unwrap();
    let text = p.request_text();
    let order = ["### Knowledge file:", "### Input file: Solid_List.txt", "### User input", "### Image: fig.png"];
    let pos: Vec<usize> = order.iter().map(|s| text.find(s).unwrap_or_else(|| panic!("{s}"))).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{pos:?}");
    assert!(text.starts_with(&format!("tool: Parameterize\nmodel: {B}\nimage: sha256:{}  fig.png\n", img.sha256())));

    // Materials takes neither user text nor images.
    let spec = ToolSpec::new(Tool::Materials, &assets, &models, true);
    let p = assemble_prompt(&spec, &arts, &[], "user words", std::slice::from_ref(&img)).unwrap();
    assert!(p.images.is_empty());
    assert!(!p.user.contains("user words"));

    // A missing former-tool output is an error, not an empty section.
    let spec = ToolSpec::new(Tool::Dimension, &assets, &models, false);
    assert!(matches!(
        assemble_prompt(&spec, &arts, &[], "", &[]),
        Err(PipelineError::MissingArtifact(ArtifactKind::Para))
    ));
}

#[test]
fn recorded_multimodal_run_routes_per_tool() {
    let dir = fixtures("monopole");
    let expect = [
        ("01_StrongD2S", R, true),
        ("02_Parameterize", B, true),
        ("03_Dimension", B, true),
        ("04_Materials", B, false),
        ("05_Model3D", R, false),
        ("07_Boolean", R, false),
    ];
    for (stem, model, image) in expect {
        let text = fs::read_to_string(dir.join(format!("{stem}.request.txt"))).unwrap();
        let mut lines = text.lines().skip(1);
        assert_eq!(lines.next().unwrap(), format!("model: {model}"), "{stem}");
        assert_eq!(lines.next().unwrap().starts_with("image: sha256:"), image, "{stem}");
    }
}

#[test]
fn materials_prompt_carries_the_catalog() {
    let text = fs::read_to_string(fixtures("lslot").join("04_Materials.request.txt")).unwrap();
    assert!(text.contains("### Knowledge file: materials.catalog"));
    assert!(text.contains("Copper (pure)"));
}

#[test]
fn asset_directory_overrides_embedded_prompts() {
    let tmp = tempfile::tempdir().unwrap();
    let embedded = PromptAssets::embedded();
    for tool in Tool::ALL {
        let d = tmp.path().join(tool.name());
        fs::create_dir_all(d.join("knowledge")).unwrap();
        let a = embedded.get(tool);
        fs::write(d.join("role_task.txt"), format!("custom {tool}\n")).unwrap();
        fs::write(d.join("instructions.txt"), &a.instructions).unwrap();
    }
    let loaded = PromptAssets::load_dir(tmp.path()).unwrap();
    assert_eq!(loaded.get(Tool::Boolean).role_task, "custom Boolean\n");
    assert!(loaded.get(Tool::Boolean).knowledge.is_empty());
}
