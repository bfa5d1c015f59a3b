//! Locating external binaries.

use std::path::{Path, PathBuf};

pub const FFMPEG: &str = "ffmpeg";
pub const FFPROBE: &str = "ffprobe";
pub const TESSERACT: &str = "tesseract";

/// Resolves a tool from an explicit path, else by searching `PATH`.
///
/// An explicit value containing a path separator must name an existing
/// file; a bare name is looked up on `PATH` like the default.
pub fn find_tool(explicit: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    match explicit {
        Some(p) if p.components().count() > 1 || p.is_absolute() => p.is_file().then(|| p.to_path_buf()),
        Some(p) => search_path(p.as_os_str()),
        None => search_path(default_name.as_ref()),
    }
}

fn search_path(name: &std::ffi::OsStr) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|candidate| is_executable(candidate))
}

#[cfg(unix)]
fn is_executable(p: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    p.metadata()
        .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
        .unwrap_or(false)
}

#[cfg(not(unix))]
fn is_executable(p: &Path) -> bool {
    p.is_file() || p.with_extension("exe").is_file()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_missing_path_is_none() {
        assert!(find_tool(Some(Path::new("/definitely/not/here/ffmpeg")), FFMPEG).is_none());
    }

    #[test]
    fn explicit_existing_path_is_used() {
        let dir = tempfile::tempdir().unwrap();
        let tool = dir.path().join("tool");
        std::fs::write(&tool, b"").unwrap();
        assert_eq!(find_tool(Some(&tool), FFMPEG), Some(tool));
    }

    #[test]
    fn unknown_name_is_none() {
        assert!(find_tool(None, "slidemeta-no-such-tool-xyz").is_none());
    }
}
