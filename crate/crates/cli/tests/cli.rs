mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use slidemeta_cli::decode::content_id;
use slidemeta_cli::tools::{find_tool, FFMPEG};

const STAMP: &str = "2024-01-01T00:00:00Z";

fn slidemeta(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slidemeta"))
        .current_dir(dir)
        .env_remove("SLIDEMETA_CATALOG")
        .env_remove("SOURCE_DATE_EPOCH")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn slides(spec: &[&[&str]]) -> Vec<Vec<String>> {
    spec.iter().map(|s| s.iter().map(|l| l.to_string()).collect()).collect()
}

/// A frame-directory video with a fixture sidecar.
fn video(root: &Path, name: &str, spec: &[&[&str]], frames_per_slide: usize) -> PathBuf {
    let dir = root.join(name);
    let texts = common::write_frames(&dir, &slides(spec), frames_per_slide);
    common::write_fixture(&dir, &texts);
    dir
}

fn fixture_args(catalog: &str) -> Vec<&str> {
    vec![
        "--catalog",
        catalog,
        "--engine",
        "fixture",
        "--processed-at",
        STAMP,
        "--quiet",
    ]
}

#[test]
fn keyframes_two_slide_clip_writes_two_pngs() {
    let tmp = tempfile::tempdir().unwrap();
    let clip = video(tmp.path(), "clip", &[&["NPTEL", "IIT Madras"], &["Prof. K S Rao"]], 30);
    let out = tmp.path().join("kf");
    let o = slidemeta(
        tmp.path(),
        &["keyframes", "clip", "--out", "kf", "--strategy", "pixel-diff"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["frames_decoded"], 60);
    let id = content_id(&clip).unwrap();
    let mut files: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    assert_eq!(files, vec![format!("{id}_0.png"), format!("{id}_30.png")]);
}

#[test]
fn keyframes_iframe_strategy_follows_probe_listing() {
    let tmp = tempfile::tempdir().unwrap();
    let clip = video(
        tmp.path(),
        "clip",
        &[&["NPTEL"], &["IIT Delhi"], &["Prof. K S Rao"]],
        17,
    );
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden_probe.csv");
    std::fs::copy(&golden, clip.join("probe.csv")).unwrap();
    let o = slidemeta(
        tmp.path(),
        &["keyframes", "clip", "--out", "kf", "--strategy", "iframe"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let indices: Vec<u64> = summary["keyframes"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["frame_index"].as_u64().unwrap())
        .collect();
    assert_eq!(indices, vec![0, 20, 40]);
    assert_eq!(std::fs::read_dir(tmp.path().join("kf")).unwrap().count(), 3);
}

#[test]
fn keyframes_missing_input_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = slidemeta(tmp.path(), &["keyframes", "nope.mp4", "--out", "kf"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));
}

#[test]
fn extract_reads_all_four_attributes() {
    let tmp = tempfile::tempdir().unwrap();
    video(
        tmp.path(),
        "intro",
        &[
            &["Introduction to Machine Learning"],
            &[
                "NPTEL",
                "Indian Institute of Technology Madras",
                "Department of Computer Science and Engineering",
                "Prof. K S Rao",
            ],
        ],
        2,
    );
    let mut args = vec!["extract", "intro"];
    args.extend(fixture_args("cat.jsonl"));
    let o = slidemeta(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = slidemeta(tmp.path(), &["export", "--format", "json", "--catalog", "cat.jsonl"]);
    let records: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let attrs = &records[0]["attributes"];
    assert_eq!(attrs["publisher"]["value"], "NPTEL");
    assert_eq!(attrs["institute"]["value"], "IIT Madras");
    assert_eq!(attrs["department"]["value"], "Computer Science");
    assert_eq!(attrs["professor"]["value"], "K S Rao");
    assert_eq!(records[0]["keyframes_used"], serde_json::json!([2]));
    assert_eq!(records[0]["processed_at"], STAMP);
}

#[test]
fn blank_video_gives_empty_record() {
    let tmp = tempfile::tempdir().unwrap();
    video(tmp.path(), "blank", &[&[]], 4);
    let mut args = vec!["extract", "blank"];
    args.extend(fixture_args("cat.jsonl"));
    let o = slidemeta(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = slidemeta(tmp.path(), &["export", "--catalog", "cat.jsonl"]);
    let csv = stdout(&o);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(",,,,,,,,,pixel_diff,fixture"), "{}", rows[1]);
}

#[test]
fn batch_with_a_corrupt_video_is_a_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    video(tmp.path(), "a", &[&["NPTEL", "Prof. K S Rao"]], 2);
    video(tmp.path(), "b", &[&["MIT OpenCourseWare", "Dr. Meena Iyer"]], 2);
    let bad = tmp.path().join("c");
    std::fs::create_dir_all(&bad).unwrap();
    std::fs::write(bad.join("frame_0000.png"), b"this is not an image").unwrap();
    std::fs::write(tmp.path().join("c.ocr.json"), r#"{"frames": {}}"#).unwrap();

    let log = tmp.path().join("diag.jsonl");
    let mut args = vec![
        "extract",
        "a",
        "b",
        "c",
        "--catalog",
        "cat.jsonl",
        "--engine",
        "fixture",
        "--log",
    ];
    let log_str = log.to_string_lossy().into_owned();
    args.push(&log_str);
    let o = slidemeta(tmp.path(), &args);
    assert_eq!(code(&o), 1);
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["processed"].as_array().unwrap().len(), 2);
    assert_eq!(summary["failures"][0]["source"], "c");

    let events: Vec<Value> = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(events.iter().filter(|e| e["event"] == "video_done").count(), 2);
    assert_eq!(events.iter().filter(|e| e["event"] == "video_failed").count(), 1);
    assert!(events.iter().any(|e| e["event"] == "batch_done"));
}

#[test]
fn query_export_and_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let o = slidemeta(tmp.path(), &["export", "--format", "csv", "--catalog", "empty.jsonl"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "video_id,source,publisher,institute,department,professor,publisher_score,institute_score,department_score,professor_score,strategy,engine\n"
    );

    let corpus = common::write_corpus(&tmp.path().join("corpus"), None);
    let mut args = vec!["extract"];
    let paths: Vec<String> = corpus.videos.iter().map(|p| p.to_string_lossy().into_owned()).collect();
    args.extend(paths.iter().map(String::as_str));
    args.extend(fixture_args("cat.jsonl"));
    let o = slidemeta(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = slidemeta(tmp.path(), &["query", "publisher", "NPTEL", "--catalog", "cat.jsonl"]);
    assert_eq!(code(&o), 0);
    let table = stdout(&o);
    let expected = corpus
        .truth
        .iter()
        .filter(|t| t.publisher.as_deref() == Some("NPTEL"))
        .count();
    assert_eq!(table.lines().count(), expected + 1);
    assert!(table.starts_with("video_id\tpublisher\tscore\tsource\n"));

    let o = slidemeta(tmp.path(), &["query", "professor", "k s rao", "--catalog", "cat.jsonl"]);
    assert!(stdout(&o).lines().count() > 1);
    let o = slidemeta(
        tmp.path(),
        &[
            "query",
            "professor",
            "K.S. Rao",
            "--fuzzy",
            "85",
            "--catalog",
            "cat.jsonl",
        ],
    );
    assert!(stdout(&o).lines().count() > 1);

    let truth = corpus.truth_path.to_string_lossy().into_owned();
    let o = slidemeta(
        tmp.path(),
        &["eval", "--truth", &truth, "--catalog", "cat.jsonl", "--format", "csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        stdout(&o),
        "Category,\"fixture, pixel_diff\"\nPublisher Name,100.00\nInstitute Name,100.00\nDepartment Name,100.00\nProfessor Name,100.00\n"
    );

    let o = slidemeta(tmp.path(), &["query", "colour", "red", "--catalog", "cat.jsonl"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn catalog_path_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    video(tmp.path(), "a", &[&["NPTEL"]], 1);
    let o = Command::new(env!("CARGO_BIN_EXE_slidemeta"))
        .current_dir(tmp.path())
        .env("SLIDEMETA_CATALOG", "from-env.jsonl")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .args(["extract", "a", "--engine", "fixture", "--quiet"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(tmp.path().join("from-env.jsonl")).unwrap();
    assert!(text.contains("\"processed_at\":\"2023-11-14T22:13:20Z\""), "{text}");
}

#[test]
fn manifest_ids_override_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    video(tmp.path(), "clip", &[&["NPTEL", "Prof. K S Rao"]], 2);
    std::fs::write(
        tmp.path().join("m.csv"),
        "id,url,title,start,end\nlec01,clip,Intro,0,30\n",
    )
    .unwrap();
    let mut args = vec!["extract", "--manifest", "m.csv"];
    args.extend(fixture_args("cat.jsonl"));
    let o = slidemeta(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = slidemeta(tmp.path(), &["query", "publisher", "nptel", "--catalog", "cat.jsonl"]);
    assert!(stdout(&o).contains("lec01\tNPTEL\t100.00\tclip"), "{}", stdout(&o));
}

#[test]
fn configuration_and_environment_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    video(tmp.path(), "a", &[&["NPTEL"]], 1);
    std::fs::write(
        tmp.path().join("bad.json"),
        r#"{"strategy": "cluster", "colour": "red"}"#,
    )
    .unwrap();
    let o = slidemeta(
        tmp.path(),
        &["extract", "a", "--config", "bad.json", "--engine", "fixture"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let o = slidemeta(
        tmp.path(),
        &["extract", "a", "--hash-threshold", "99", "--engine", "fixture"],
    );
    assert_eq!(code(&o), 2);

    let o = slidemeta(
        tmp.path(),
        &[
            "extract",
            "a",
            "--engine",
            "tesseract",
            "--tesseract",
            "/no/such/tesseract",
        ],
    );
    assert_eq!(code(&o), 2);

    let o = slidemeta(tmp.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    video(tmp.path(), "a", &[&["NPTEL"], &["Prof. K S Rao"]], 3);
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"strategy": "interval", "interval_s": 100, "engine": "fixture", "processed_at": "2024-01-01T00:00:00Z"}"#,
    )
    .unwrap();
    let o = slidemeta(tmp.path(), &["keyframes", "a", "--out", "kf", "--config", "cfg.json"]);
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["keyframes"]["entries"].as_array().unwrap().len(), 1);
    let o = slidemeta(
        tmp.path(),
        &[
            "keyframes",
            "a",
            "--out",
            "kf2",
            "--config",
            "cfg.json",
            "--strategy",
            "pixel-diff",
        ],
    );
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["keyframes"]["strategy"], "pixel_diff");
    assert_eq!(summary["keyframes"]["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn ingest_builds_trim_commands() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("source.mp4"), b"stand-in").unwrap();
    std::fs::write(
        tmp.path().join("m.csv"),
        "id,url,title,start,end\nv01,source.mp4,Intro,5,35\nv02,missing.mp4,Other,00:00:00,00:01:00\nv03,https://example.org/x,Remote,0,10\n",
    )
    .unwrap();
    let o = slidemeta(tmp.path(), &["ingest", "m.csv", "--out", "clips", "--quiet"]);
    assert_eq!(code(&o), 1);
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let clips = summary["clips"].as_array().unwrap();
    let cmd: Vec<&str> = clips[0]["command"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(&cmd[2..8], ["-ss", "5", "-to", "35", "-c", "copy"]);
    assert!(cmd[8].ends_with("clips/v01-TRIM.mp4"));
    assert!(clips[1]["error"].as_str().unwrap().contains("does not exist"));
    assert!(clips[2]["error"].as_str().unwrap().contains("no fetcher configured"));

    std::fs::write(tmp.path().join("bad.csv"), "id,url,title,start,end\nv01,a,b,10,5\n").unwrap();
    let o = slidemeta(tmp.path(), &["ingest", "bad.csv", "--out", "clips"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1"));
}

/// Real decoding through ffmpeg; skipped when ffmpeg is unavailable.
#[test]
fn ffmpeg_decoding_when_available() {
    let ffmpeg = find_tool(
        std::env::var_os("SLIDEMETA_FFMPEG").map(PathBuf::from).as_deref(),
        FFMPEG,
    );
    let Some(ffmpeg) = ffmpeg else {
        eprintln!("skipping: ffmpeg not found");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    common::write_frames(&frames, &slides(&[&["NPTEL", "IIT Madras"], &["Prof. K S Rao"]]), 30);
    let clip = tmp.path().join("clip.mp4");
    let status = Command::new(&ffmpeg)
        .args(["-nostdin", "-y", "-loglevel", "error", "-framerate", "1", "-i"])
        .arg(frames.join("frame_%04d.png"))
        .args(["-c:v", "libx264", "-pix_fmt", "yuv420p", "-g", "10"])
        .arg(&clip)
        .status()
        .unwrap();
    assert!(status.success());

    let ffmpeg_arg = ffmpeg.to_string_lossy().into_owned();
    let o = slidemeta(
        tmp.path(),
        &["keyframes", "clip.mp4", "--out", "kf", "--ffmpeg", &ffmpeg_arg],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["frames_decoded"], 60);
    assert_eq!(summary["keyframes"]["entries"].as_array().unwrap().len(), 2);

    std::fs::write(tmp.path().join("broken.mp4"), b"definitely not a video").unwrap();
    let o = slidemeta(
        tmp.path(),
        &["keyframes", "broken.mp4", "--out", "kf", "--ffmpeg", &ffmpeg_arg],
    );
    assert_eq!(code(&o), 1);
    let o = slidemeta(
        tmp.path(),
        &["keyframes", "clip.mp4", "--out", "kf", "--ffmpeg", "/no/such/ffmpeg"],
    );
    assert_eq!(code(&o), 2);

    // Both time notations are passed through and accepted by the trimmer.
    std::fs::write(
        tmp.path().join("m.csv"),
        "id,url,title,start,end\nsecs,clip.mp4,A,10,40\nclock,clip.mp4,B,00:00:10,00:00:40\n",
    )
    .unwrap();
    let o = slidemeta(
        tmp.path(),
        &[
            "ingest",
            "m.csv",
            "--out",
            "clips",
            "--execute",
            "--quiet",
            "--ffmpeg",
            &ffmpeg_arg,
        ],
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let mut sizes = Vec::new();
    for id in ["secs", "clock"] {
        let trimmed = tmp.path().join(format!("clips/{id}-TRIM.mp4"));
        let o = slidemeta(
            tmp.path(),
            &[
                "keyframes",
                trimmed.to_str().unwrap(),
                "--out",
                id,
                "--ffmpeg",
                &ffmpeg_arg,
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
        sizes.push(summary["frames_decoded"].as_u64().unwrap());
    }
    assert_eq!(sizes[0], sizes[1]);
    assert!(sizes[0] > 0 && sizes[0] < 60, "{sizes:?}");
}
