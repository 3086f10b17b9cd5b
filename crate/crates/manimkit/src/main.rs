use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manimkit::config::RunConfig;
use manimkit::dataset::{load_completions, load_dataset};
use manimkit::harness::{evaluate_live, evaluate_offline, precompute_references, Services};
use manimkit::kb::{build_kb, load_kb, save_kb};
use manimkit::providers::chat_model;
use manimkit::renderer::ManimRenderer;
use manimkit::report::{emit_report, ALL_FORMATS};
use manimkit::{KitError, KitResult};
use manimkit_core::agent::{run_agent, AgentMode};
use manimkit_core::docs::KnowledgeBase;
use manimkit_core::render::{Quality, RenderRequest, SceneRenderer};
use manimkit_core::reward::unified_reward;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "manimkit", version, about = "Score, render and repair Manim programs")]
struct Cli {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a dataset, live through the agent or from saved completions.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// JSONL of {"id", "completion"}; skips the model entirely.
        #[arg(long)]
        offline: Option<PathBuf>,
        /// Report directory; defaults to the configured output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the generate-render-repair loop.
    Agent {
        #[command(subcommand)]
        command: AgentCmd,
    },
    /// Reward of a generated program against a reference.
    Reward {
        /// Model completion; a `.py` file is taken as bare code.
        #[arg(long)]
        gen: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Rendered reference; rendered (and cached) when absent.
        #[arg(long)]
        ref_video: Option<PathBuf>,
    },
    /// Render one scene file.
    Render {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        scene: Option<String>,
        #[arg(long, value_parser = parse_quality)]
        quality: Option<Quality>,
        #[arg(long)]
        timeout: Option<f64>,
    },
    /// Build or query the API knowledge base.
    Kb {
        #[command(subcommand)]
        command: KbCmd,
    },
    /// Print the default configuration.
    Config,
}

#[derive(Subcommand)]
enum AgentCmd {
    Run(AgentRun),
}

#[derive(Args)]
struct AgentRun {
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    description: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<AgentMode>,
    /// Repair rounds after the first attempt.
    #[arg(short = 'K')]
    rounds: Option<usize>,
    #[arg(long)]
    kb: Option<PathBuf>,
}

#[derive(Subcommand)]
enum KbCmd {
    Build {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Lookup {
        name: String,
        #[arg(long)]
        kb: Option<PathBuf>,
    },
}

fn parse_quality(s: &str) -> Result<Quality, String> {
    match s {
        "low" | "l" => Ok(Quality::Low),
        "medium" | "m" => Ok(Quality::Medium),
        "high" | "h" => Ok(Quality::High),
        _ => Err(format!("unknown quality {s:?}; use low, medium or high")),
    }
}

fn parse_mode(s: &str) -> Result<AgentMode, String> {
    s.parse().map_err(|e: manimkit_core::Error| e.to_string())
}

fn print_json<T: Serialize>(v: &T) -> KitResult<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read(path: &Path) -> KitResult<String> {
    std::fs::read_to_string(path).map_err(|source| KitError::Io { path: path.to_path_buf(), source })
}

fn load_config(path: Option<&Path>) -> KitResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn kb_from(path: Option<&Path>) -> KitResult<Option<KnowledgeBase>> {
    path.map(|p| load_kb(p).map(|(kb, _)| kb)).transpose()
}

fn ensure_renderer(r: &ManimRenderer) -> KitResult<()> {
    if r.available() {
        Ok(())
    } else {
        Err(KitError::Environment(format!("renderer executable `{}` is not runnable", r.config.executable)))
    }
}

fn run(cli: Cli) -> KitResult<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Cmd::Config => print_json(&RunConfig::default()),
        Cmd::Kb { command: KbCmd::Build { source, out } } => {
            let built = build_kb(&source)?;
            save_kb(&out, &built.kb, &built.source_hash)?;
            eprintln!("{} entries from {} files ({} skipped) -> {}", built.kb.len(), built.files, built.skipped.len(), out.display());
            Ok(())
        }
        Cmd::Kb { command: KbCmd::Lookup { name, kb } } => {
            let path = kb.or(cfg.kb_path.clone()).ok_or_else(|| KitError::Environment("no knowledge base given (--kb or kb_path)".into()))?;
            let (kb, _) = load_kb(&path)?;
            let hits = kb.lookup(&name);
            if hits.is_empty() {
                return Err(KitError::Dataset(format!("{name:?} is not in the knowledge base")));
            }
            for e in hits {
                println!("{}\n", e.render());
            }
            Ok(())
        }
        Cmd::Render { code, scene, quality, timeout } => {
            let services = Services::from_config(cfg);
            let mut req = RenderRequest::new(read(&code)?);
            req.scene_name = scene;
            req.quality = quality.unwrap_or(services.config.agent.quality);
            req.timeout_secs = timeout.unwrap_or(services.config.agent.render_timeout_secs);
            print_json(&services.renderer.render(&req)?)
        }
        Cmd::Reward { gen, reference, ref_video } => {
            let services = Services::from_config(cfg);
            let mut completion = read(&gen)?;
            if gen.extension().is_some_and(|e| e == "py") {
                completion = format!("<CODE>\n{completion}\n</CODE>");
            }
            let ref_code = read(&reference)?;
            let video = match ref_video {
                Some(v) => v,
                None => {
                    let rec = manimkit::dataset::DatasetRecord {
                        id: reference.display().to_string(),
                        description: String::new(),
                        reference_code: ref_code.clone(),
                        reference_video: None,
                    };
                    let c = &services.config;
                    let (recs, _) = precompute_references(&[rec], &services.renderer, &c.cache_dir, c.agent.quality, c.agent.render_timeout_secs)?;
                    recs[0].reference_video.clone().expect("filled by precompute")
                }
            };
            let frames = services.sample(&video)?;
            print_json(&unified_reward(&completion, &ref_code, &frames, &services.config.reward, &services)?)
        }
        Cmd::Agent { command: AgentCmd::Run(a) } => {
            if let Some(m) = a.mode {
                cfg.agent.mode = m;
            }
            if let Some(k) = a.rounds {
                cfg.agent.max_rounds = k;
            }
            let description = match (a.description, a.file) {
                (Some(d), _) => d,
                (None, Some(f)) => read(&f)?,
                (None, None) => unreachable!("clap requires one"),
            };
            let kb = kb_from(a.kb.as_deref().or(cfg.kb_path.as_deref()))?;
            let services = Services::from_config(cfg);
            ensure_renderer(&services.renderer)?;
            let llm = chat_model(&services.config);
            print_json(&run_agent(&description, &services.config.agent, &llm, &services.renderer, kb.as_ref())?)
        }
        Cmd::Eval { dataset, offline, out } => {
            let records = load_dataset(&dataset)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let kb = kb_from(cfg.kb_path.as_deref())?;
            let services = Services::from_config(cfg);
            ensure_renderer(&services.renderer)?;
            let c = &services.config;
            let (records, renders) = services.pool()?.install(|| {
                precompute_references(&records, &services.renderer, &c.cache_dir, c.agent.quality, c.agent.render_timeout_secs)
            })?;
            eprintln!("references ready ({renders} rendered)");
            let report = match offline {
                Some(p) => evaluate_offline(&records, &load_completions(&p)?, &services)?,
                None => {
                    let llm = chat_model(&services.config);
                    let (report, traces) = evaluate_live(&records, &services, &llm, kb.as_ref())?;
                    std::fs::create_dir_all(&out).map_err(|source| KitError::Io { path: out.clone(), source })?;
                    let lines: Vec<String> = traces.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
                    let p = out.join("traces.jsonl");
                    std::fs::write(&p, lines.join("\n") + "\n").map_err(|source| KitError::Io { path: p, source })?;
                    report
                }
            };
            for p in emit_report(&report, &out, &ALL_FORMATS)? {
                eprintln!("wrote {}", p.display());
            }
            println!("VS {:.1}  CBB {:.1}  RSR {:.1}  n {}", report.mean_vs, report.mean_cbb, report.rsr, report.n);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
