//! Synthetic lecture-intro corpus shared by the integration tests.
//!
//! Every video is a directory of PNG frames rendered from a few slides, with
//! a `<dir>.ocr.json` fixture giving the text of each frame and a row in a
//! ground-truth CSV.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slidemeta_cli::config::{EngineKind, PipelineConfig};
use slidemeta_cli::decode::content_id;
use slidemeta_cli::imageio::save_png;
use slidemeta_core::evalsuite::{write_ground_truth, GroundTruthRecord};
use slidemeta_core::ocr::FixtureEngine;
use slidemeta_core::synth::{render_slide, substitute_one_char, SlideStyle};

/// Frames each slide stays on screen.
pub const FRAMES_PER_SLIDE: usize = 3;

const BACKGROUNDS: [[u8; 3]; 3] = [[245, 245, 240], [170, 200, 235], [250, 215, 150]];

#[derive(Debug, Clone)]
pub struct VideoSpec {
    pub name: String,
    pub slides: Vec<Vec<String>>,
    pub publisher: Option<&'static str>,
    pub institute: Option<&'static str>,
    pub department: Option<&'static str>,
    pub professor: Option<&'static str>,
    pub missing: bool,
    pub split: bool,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub videos: Vec<PathBuf>,
    pub truth: Vec<GroundTruthRecord>,
    pub truth_path: PathBuf,
}

const TITLES: [&str; 12] = [
    "Introduction to Machine Learning",
    "Data Structures and Algorithms",
    "Probability and Statistics",
    "Digital Signal Processing",
    "Operating Systems",
    "Artificial Intelligence",
    "Database Management Systems",
    "Compiler Design",
    "Numerical Methods",
    "Control Systems",
    "Graph Theory",
    "Deep Learning",
];

/// (publisher line, canonical)
const PUBLISHERS: [(&str, &str); 3] = [
    ("NPTEL", "NPTEL"),
    ("National Programme on Technology Enhanced Learning", "NPTEL"),
    ("MIT OpenCourseWare", "MIT OpenCourseWare"),
];

const INSTITUTES: [(&str, &str); 6] = [
    ("Indian Institute of Technology Madras", "IIT Madras"),
    ("IIT Kharagpur", "IIT Kharagpur"),
    ("Indian Institute of Technology Bombay", "IIT Bombay"),
    ("IIT Delhi", "IIT Delhi"),
    ("Indian Institute of Technology Kanpur", "IIT Kanpur"),
    ("IIT Roorkee", "IIT Roorkee"),
];

const DEPARTMENTS: [(&str, &str); 5] = [
    ("Department of Computer Science and Engineering", "Computer Science"),
    ("Department of Electrical Engineering", "Electrical Engineering"),
    ("Department of Mathematics", "Mathematics"),
    ("Department of Mechanical Engineering", "Mechanical Engineering"),
    ("Department of Physics", "Physics"),
];

const PROFESSORS: [&str; 12] = [
    "K S Rao",
    "Meena Iyer",
    "Anil Kumar Sharma",
    "Ravi Shankar",
    "Partha Pratim Das",
    "Sudeshna Sarkar",
    "Pradeep Reddy",
    "Lakshmi Narayan",
    "Venkat Raman",
    "Arun Mohan",
    "Gita Krishnan",
    "Suresh Babu",
];

/// Lines naming the professor, in one of several slide conventions.
fn professor_lines(name: &str, style: usize) -> Vec<String> {
    match style % 4 {
        0 => vec![format!("Prof. {name}")],
        1 => vec![format!("Dr. {name}")],
        2 => vec!["Lecture by".into(), name.to_string()],
        _ => vec![format!("Professor {name}")],
    }
}

/// The 24-video corpus: 16 complete, 4 with attributes missing, 4 with
/// attributes split over two slides.
pub fn corpus_specs() -> Vec<VideoSpec> {
    let mut specs = Vec::new();
    for i in 0..24usize {
        let (pub_line, publisher) = if i % 5 == 4 { PUBLISHERS[2] } else { PUBLISHERS[i % 2] };
        let (inst_line, institute) = INSTITUTES[i % INSTITUTES.len()];
        let (dept_line, department) = DEPARTMENTS[i % DEPARTMENTS.len()];
        let professor = PROFESSORS[i % PROFESSORS.len()];
        let title = vec![TITLES[i % TITLES.len()].to_string(), "Lecture 01".to_string()];
        let prof = professor_lines(professor, i);
        let mut spec = VideoSpec {
            name: format!("video{i:02}"),
            slides: Vec::new(),
            publisher: Some(publisher),
            institute: Some(institute),
            department: Some(department),
            professor: Some(professor),
            missing: false,
            split: false,
        };
        match i {
            // Attributes missing from the intro entirely.
            16 => {
                spec.missing = true;
                spec.department = None;
                spec.slides = vec![
                    title,
                    vec![pub_line.into(), inst_line.into()]
                        .into_iter()
                        .chain(prof)
                        .collect(),
                ];
            }
            17 => {
                spec.missing = true;
                spec.professor = None;
                spec.slides = vec![title, vec![pub_line.into(), inst_line.into(), dept_line.into()]];
            }
            18 => {
                spec.missing = true;
                spec.institute = None;
                spec.department = None;
                spec.slides = vec![title, vec![pub_line.to_string()].into_iter().chain(prof).collect()];
            }
            19 => {
                spec.missing = true;
                spec.publisher = None;
                spec.professor = None;
                spec.slides = vec![title, vec![inst_line.into(), dept_line.into()]];
            }
            // Attributes spread over two slides.
            20..=23 => {
                spec.split = true;
                spec.slides = vec![
                    vec![pub_line.into(), inst_line.into()],
                    title,
                    vec![dept_line.to_string()].into_iter().chain(prof).collect(),
                ];
            }
            _ => {
                spec.slides = vec![
                    title,
                    vec![pub_line.into(), inst_line.into(), dept_line.into()]
                        .into_iter()
                        .chain(prof)
                        .collect(),
                ];
            }
        }
        specs.push(spec);
    }
    specs
}

fn slide_style(slide: usize) -> SlideStyle {
    SlideStyle {
        background: BACKGROUNDS[slide % BACKGROUNDS.len()],
        ..SlideStyle::default()
    }
}

/// Writes the frames of one video into `dir` and returns per-frame text.
pub fn write_frames(dir: &Path, slides: &[Vec<String>], frames_per_slide: usize) -> Vec<Vec<String>> {
    std::fs::create_dir_all(dir).unwrap();
    let mut texts = Vec::new();
    for (s, lines) in slides.iter().enumerate() {
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let image = render_slide(&refs, &slide_style(s));
        for _ in 0..frames_per_slide {
            save_png(&image, &dir.join(format!("frame_{:04}.png", texts.len()))).unwrap();
            texts.push(lines.clone());
        }
    }
    texts
}

/// One random character substitution per line.
pub fn add_noise(lines: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    lines
        .iter()
        .map(|l| substitute_one_char(l, |n| rng.gen_range(0..n)))
        .collect()
}

pub fn write_fixture(video_dir: &Path, per_frame: &[Vec<String>]) {
    let frames: BTreeMap<u64, Vec<String>> = per_frame
        .iter()
        .enumerate()
        .map(|(i, lines)| (i as u64, lines.clone()))
        .collect();
    let sidecar = slidemeta_cli::pipeline::sidecar_path(video_dir);
    std::fs::write(sidecar, FixtureEngine::new(frames).to_json()).unwrap();
}

/// Renders the corpus under `root`. With `noise_seed`, every fixture line
/// carries one random character substitution.
pub fn write_corpus(root: &Path, noise_seed: Option<u64>) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed.unwrap_or(0));
    let mut videos = Vec::new();
    let mut truth = Vec::new();
    for spec in corpus_specs() {
        let dir = root.join(&spec.name);
        let mut texts = write_frames(&dir, &spec.slides, FRAMES_PER_SLIDE);
        if noise_seed.is_some() {
            texts = texts.iter().map(|t| add_noise(t, &mut rng)).collect();
        }
        write_fixture(&dir, &texts);
        truth.push(GroundTruthRecord {
            video_id: content_id(&dir).unwrap(),
            publisher: spec.publisher.map(String::from),
            institute: spec.institute.map(String::from),
            department: spec.department.map(String::from),
            professor: spec.professor.map(String::from),
        });
        videos.push(dir);
    }
    let truth_path = root.join("truth.csv");
    std::fs::write(&truth_path, write_ground_truth(&truth)).unwrap();
    Corpus {
        root: root.to_path_buf(),
        videos,
        truth,
        truth_path,
    }
}

/// Fixture-engine config writing to `catalog` with a fixed timestamp.
pub fn fixture_config(catalog: &Path) -> PipelineConfig {
    PipelineConfig {
        engine: EngineKind::Fixture,
        catalog: catalog.to_path_buf(),
        processed_at: Some("2024-01-01T00:00:00Z".parse().unwrap()),
        ..PipelineConfig::default()
    }
}
