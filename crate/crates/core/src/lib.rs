//! Metadata extraction for recorded lecture videos: keyframe selection,
//! OCR, lexicon matching, cataloguing and evaluation.

pub mod catalog;
pub mod evalsuite;
pub mod extraction;
pub mod frames;
pub mod ingest;
pub mod keyframe;
pub mod matching;
pub mod ocr;
pub mod synth;
