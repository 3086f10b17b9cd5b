//! Runs Manim as a child process, one fresh directory per request.

use std::fs::File;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use manimkit_core::render::{Quality, RenderOutcome, RenderRequest, RenderStatus, SceneRenderer, NO_SCENE_ERROR};
use sha2::{Digest, Sha256};
use wait_timeout::ChildExt;
use walkdir::WalkDir;

use crate::config::RendererConfig;
use crate::error::{io_err, KitError, KitResult};

/// Cache key of a render: hex SHA-256 over the code and the quality name.
pub fn render_key(code: &str, quality: Quality) -> String {
    let mut h = Sha256::new();
    h.update(code.as_bytes());
    h.update([0]);
    h.update(quality.as_str().as_bytes());
    hex::encode(h.finalize())
}

/// Newest file with extension `ext` below `dir`.
pub fn newest_video(dir: &Path, ext: &str) -> Option<PathBuf> {
    WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == ext))
        .filter(|e| !e.path().components().any(|c| c.as_os_str() == "partial_movie_files"))
        .filter_map(|e| Some((e.metadata().ok()?.modified().ok()?, e.into_path())))
        .max_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, p)| p)
}

/// Manim adapter. Videos of successful renders are moved to `video_dir`
/// under their cache key; everything else is deleted with the work
/// directory.
#[derive(Clone, Debug)]
pub struct ManimRenderer {
    pub config: RendererConfig,
    pub video_dir: PathBuf,
}

impl ManimRenderer {
    pub fn new(config: RendererConfig, video_dir: impl Into<PathBuf>) -> Self {
        Self { config, video_dir: video_dir.into() }
    }

    /// Whether the executable can be started at all.
    pub fn available(&self) -> bool {
        Command::new(&self.config.executable)
            .arg("--version")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok_and(|s| s.success())
    }

    fn command(&self, workdir: &Path, scene: &str, quality: Quality, log: &File) -> KitResult<Command> {
        let c = &self.config;
        let mut cmd = Command::new(&c.executable);
        if !c.subcommand.is_empty() {
            cmd.arg(&c.subcommand);
        }
        cmd.arg(quality.flag())
            .arg(&c.media_dir_flag)
            .arg(workdir.join("media"))
            .args(&c.extra_args)
            .arg("scene.py")
            .arg(scene)
            .current_dir(workdir)
            .stdin(Stdio::null())
            .stdout(log.try_clone().map_err(io_err(workdir))?)
            .stderr(log.try_clone().map_err(io_err(workdir))?)
            .process_group(0);
        if let Some(mb) = c.memory_limit_mb {
            let bytes = mb.saturating_mul(1024 * 1024) as libc::rlim_t;
            // SAFETY: only async-signal-safe libc calls run between fork and exec.
            unsafe {
                cmd.pre_exec(move || {
                    let lim = libc::rlimit { rlim_cur: bytes, rlim_max: bytes };
                    if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                        return Err(std::io::Error::last_os_error());
                    }
                    Ok(())
                });
            }
        }
        Ok(cmd)
    }

    fn keep_video(&self, produced: &Path, code: &str, quality: Quality) -> KitResult<PathBuf> {
        std::fs::create_dir_all(&self.video_dir).map_err(io_err(&self.video_dir))?;
        let dest = self.video_dir.join(format!("{}.{}", render_key(code, quality), self.config.video_extension));
        let staging = tempfile::NamedTempFile::new_in(&self.video_dir).map_err(io_err(&self.video_dir))?;
        std::fs::copy(produced, staging.path()).map_err(io_err(produced))?;
        staging.persist(&dest).map_err(|e| KitError::Io { path: dest.clone(), source: e.error })?;
        Ok(dest)
    }
}

fn kill_group(pid: u32) {
    // SAFETY: plain syscall on a process group we created.
    unsafe {
        libc::kill(-(pid as libc::pid_t), libc::SIGKILL);
    }
}

impl SceneRenderer for ManimRenderer {
    type Error = KitError;

    fn render(&self, request: &RenderRequest) -> KitResult<RenderOutcome> {
        let start = Instant::now();
        let Some(scene) = request.resolved_scene() else {
            return Ok(RenderOutcome::failed(RenderStatus::Fail, NO_SCENE_ERROR, 0.0));
        };
        if !(request.timeout_secs > 0.0) {
            return Err(manimkit_core::Error::Contract("render timeout must be positive".into()).into());
        }
        let work = tempfile::Builder::new().prefix("manimkit-render-").tempdir().map_err(io_err(std::env::temp_dir()))?;
        let dir = work.path();
        std::fs::write(dir.join("scene.py"), &request.code).map_err(io_err(dir))?;
        let log_path = dir.join("render.log");
        let log = File::create(&log_path).map_err(io_err(&log_path))?;
        let mut child = match self.command(dir, &scene, request.quality, &log)?.spawn() {
            Ok(c) => c,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(KitError::Environment(format!("renderer executable `{}` not found", self.config.executable)));
            }
            Err(e) => return Err(KitError::Environment(format!("could not start `{}`: {e}", self.config.executable))),
        };
        drop(log);
        let waited = child.wait_timeout(Duration::from_secs_f64(request.timeout_secs)).map_err(io_err(dir))?;
        let status = match waited {
            Some(s) => Some(s),
            None => {
                kill_group(child.id());
                let _ = child.wait();
                None
            }
        };
        // children that outlive the main process would keep the log open
        kill_group(child.id());
        let output = String::from_utf8_lossy(&std::fs::read(&log_path).map_err(io_err(&log_path))?).into_owned();
        let wall = start.elapsed().as_secs_f64();
        let Some(status) = status else {
            let text = format!("{output}\nrender timed out after {} s", request.timeout_secs);
            return Ok(RenderOutcome::failed(RenderStatus::Timeout, &text, wall));
        };
        if !status.success() {
            let text = if output.trim().is_empty() { format!("renderer exited with {status}") } else { output };
            return Ok(RenderOutcome::failed(RenderStatus::Fail, &text, wall));
        }
        let video = newest_video(&dir.join("media"), &self.config.video_extension)
            .filter(|p| std::fs::metadata(p).is_ok_and(|m| m.len() > 0));
        match video {
            Some(v) => {
                let kept = self.keep_video(&v, &request.code, request.quality)?;
                Ok(RenderOutcome::success(kept.to_string_lossy(), wall))
            }
            None => {
                let text = format!("{output}\nrenderer exited successfully but produced no video");
                Ok(RenderOutcome::failed(RenderStatus::Fail, &text, wall))
            }
        }
    }
}
